//! Threshold stopping rules and their evaluation.
//!
//! A rule draws a threshold `tau` independently of the values and accepts the
//! first `X_i > tau`, paying 0 if nothing is accepted. Ties `X_i = tau` are
//! broken by infinitesimal perturbations: every value carries an independent
//! uniform rank and the threshold one rank `u` per run, so a tied value
//! exceeds the threshold with probability `1 - u`.
//!
//! A fixed threshold (deterministic, empirical, the fixed part of a mixture)
//! has a uniform rank. A threshold drawn as `M` inherits the rank of the
//! perturbed maximum: given `M = t`, `P(u <= r) = (P_t(r) - P_t(0)) / P(M = t)`
//! with `P_t(r) = prod_j (F_j(t-) + r P(X_j = t))`. This keeps `tau` equal in
//! law to `M` after perturbation. The exact engine integrates the ranks in
//! closed form and Monte Carlo samples them.

mod exact;
mod monte_carlo;

use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instance::{Instance, MaxDistribution};
use crate::poly::{uniform_moments, Poly};
use crate::streams::{Role, Streams};

pub use exact::{exact_evaluate, exact_evaluate_deterministic, evaluate_deterministic, ENUMERATION_BOUND};
pub use monte_carlo::{monte_carlo, monte_carlo_with, MonteCarloConfig};

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Trials used when a Monte Carlo fallback is needed and no count is given.
pub const DEFAULT_TRIALS: u64 = 1_000_000;

/// A threshold policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleSpec {
    /// Fixed threshold.
    Deterministic { tau: f64 },
    /// Maximum of one fresh independent sample per item.
    SampleMax,
    /// `F^{-1}(U)` for a fresh uniform `U`.
    InverseCdfMax,
    /// Uniform draw from stored past maxima.
    Empirical { samples: Vec<f64> },
    /// A draw of `M` with probability `alpha`, otherwise `base_tau`.
    Mixture { alpha: f64, base_tau: f64 },
}

fn check_level(what: &str, tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRule(format!("{what} must be finite and nonnegative, got {tau}")))
    }
}

impl RuleSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            RuleSpec::Deterministic { tau } => check_level("tau", *tau),
            RuleSpec::SampleMax | RuleSpec::InverseCdfMax => Ok(()),
            RuleSpec::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(Error::InvalidRule("empirical rule needs at least one sample".into()));
                }
                samples.iter().try_for_each(|&s| check_level("empirical sample", s))
            }
            RuleSpec::Mixture { alpha, base_tau } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(Error::InvalidRule(format!("alpha must lie in [0, 1], got {alpha}")));
                }
                check_level("base_tau", *base_tau)
            }
        }
    }

    /// True when the threshold is an independent draw of `M`.
    pub fn draws_max(&self) -> bool {
        matches!(self, RuleSpec::SampleMax | RuleSpec::InverseCdfMax)
    }

    pub fn label(&self) -> String {
        match self {
            RuleSpec::Deterministic { tau } => format!("deterministic({tau})"),
            RuleSpec::SampleMax => "sample_max".into(),
            RuleSpec::InverseCdfMax => "inverse_cdf_max".into(),
            RuleSpec::Empirical { samples } => format!("empirical({} samples)", samples.len()),
            RuleSpec::Mixture { alpha, base_tau } => format!("mixture({alpha}, {base_tau})"),
        }
    }

    /// The law `G` of the threshold on `inst`.
    pub fn threshold_law(&self, inst: &Instance) -> Result<ThresholdLaw> {
        self.validate()?;
        Ok(match self {
            RuleSpec::Deterministic { tau } => ThresholdLaw::atoms(vec![(*tau, 1.0)]),
            RuleSpec::SampleMax | RuleSpec::InverseCdfMax => ThresholdLaw::of_max(inst),
            RuleSpec::Empirical { samples } => {
                let w = 1.0 / samples.len() as f64;
                ThresholdLaw::atoms(samples.iter().map(|&s| (s, w)).collect())
            }
            RuleSpec::Mixture { alpha, base_tau } => ThresholdLaw::mixture(inst, *alpha, *base_tau),
        })
    }
}

/// `P_t(r) = prod_j (F_j(t-) + r P(X_j = t))`: the chance that every value
/// stays below a level `t` carrying rank `r`.
pub(crate) fn pass_poly(inst: &Instance, t: f64) -> Poly {
    let mut p = Poly::one();
    for d in inst.items() {
        p.mul_linear(d.cdf_left(t), d.atom_mass(t));
    }
    p
}

/// The distribution `G` of a threshold, remembering which mass is a draw of `M`.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdLaw {
    /// Fixed levels: finitely many atoms, ascending, merged, with positive weights.
    Atoms(Vec<(f64, f64)>),
    /// The law of `M`.
    Max(MaxDistribution),
    /// `alpha * law(M) + (1 - alpha) * delta_base`, `0 < alpha < 1`.
    Mixture {
        alpha: f64,
        max: MaxDistribution,
        base: f64,
    },
}

impl ThresholdLaw {
    /// Sorts and merges `(value, weight)` pairs, dropping zero weights.
    pub fn atoms(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.retain(|&(_, w)| w > 0.0);
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += w,
                _ => merged.push((v, w)),
            }
        }
        ThresholdLaw::Atoms(merged)
    }

    pub fn of_max(inst: &Instance) -> Self {
        ThresholdLaw::Max(inst.max_distribution())
    }

    pub fn mixture(inst: &Instance, alpha: f64, base: f64) -> Self {
        if alpha <= 0.0 {
            ThresholdLaw::Atoms(vec![(base, 1.0)])
        } else if alpha >= 1.0 {
            ThresholdLaw::of_max(inst)
        } else {
            ThresholdLaw::Mixture {
                alpha,
                max: inst.max_distribution(),
                base,
            }
        }
    }

    /// All atoms of `G` when it has no continuous part.
    pub fn finite_atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            ThresholdLaw::Atoms(a) => Some(a.clone()),
            ThresholdLaw::Max(m) => m.pmf().map(<[_]>::to_vec),
            ThresholdLaw::Mixture { alpha, max, base } => max.pmf().map(|pmf| {
                let mut pairs: Vec<(f64, f64)> = pmf.iter().map(|&(a, p)| (a, alpha * p)).collect();
                pairs.push((*base, 1.0 - alpha));
                match ThresholdLaw::atoms(pairs) {
                    ThresholdLaw::Atoms(a) => a,
                    _ => unreachable!(),
                }
            }),
        }
    }

    /// True when every level is fixed, so every tie rank is uniform.
    pub fn is_fixed(&self) -> bool {
        matches!(self, ThresholdLaw::Atoms(_))
    }

    /// Share of the mass of `G` at `t` that comes from draws of `M`.
    fn max_share(&self, t: f64) -> f64 {
        match self {
            ThresholdLaw::Atoms(_) => 0.0,
            ThresholdLaw::Max(_) => 1.0,
            ThresholdLaw::Mixture { alpha, max, base } => {
                let drawn = alpha * (max.cdf(t) - max.cdf_left(t));
                let fixed = if t == *base { 1.0 - alpha } else { 0.0 };
                if drawn + fixed > 0.0 {
                    drawn / (drawn + fixed)
                } else {
                    0.0
                }
            }
        }
    }

    /// `E[u^k | tau = t]` for `k = 0..count`, where `u` is the threshold's tie rank.
    pub fn rank_moments(&self, inst: &Instance, t: f64, count: usize) -> Vec<f64> {
        let uniform = uniform_moments(count);
        let share = self.max_share(t);
        if share == 0.0 {
            return uniform;
        }
        let pass = pass_poly(inst, t);
        let jump = pass.eval(1.0) - pass.eval(0.0);
        if jump <= 0.0 {
            return uniform;
        }
        pass.derivative_moments(count)
            .into_iter()
            .zip(uniform)
            .map(|(m, u)| share * m / jump + (1.0 - share) * u)
            .collect()
    }

    /// `G(t) = P(tau <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            ThresholdLaw::Atoms(a) => a.iter().take_while(|(v, _)| *v <= t).map(|(_, w)| w).sum(),
            ThresholdLaw::Max(m) => m.cdf(t),
            ThresholdLaw::Mixture { alpha, max, base } => {
                alpha * max.cdf(t) + if t >= *base { 1.0 - alpha } else { 0.0 }
            }
        }
    }

    /// `G(t-) = P(tau < t)`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        match self {
            ThresholdLaw::Atoms(a) => a.iter().take_while(|(v, _)| *v < t).map(|(_, w)| w).sum(),
            ThresholdLaw::Max(m) => m.cdf_left(t),
            ThresholdLaw::Mixture { alpha, max, base } => {
                alpha * max.cdf_left(t) + if t > *base { 1.0 - alpha } else { 0.0 }
            }
        }
    }

    /// `inf{t : G(t) >= u}`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        match self {
            ThresholdLaw::Atoms(a) => {
                if !(0.0..=1.0).contains(&u) {
                    return Err(Error::Domain {
                        what: "quantile level",
                        value: u,
                        domain: "[0, 1]",
                    });
                }
                let mut acc = 0.0;
                for &(v, w) in a {
                    acc += w;
                    if acc >= u {
                        return Ok(v);
                    }
                }
                Ok(a.last().map(|x| x.0).unwrap_or(0.0))
            }
            ThresholdLaw::Max(m) => m.quantile(u),
            ThresholdLaw::Mixture { alpha, max, base } => {
                // Invert the mixture CDF: levels that land in the base atom's jump map to it.
                let below = alpha * max.cdf_left(*base);
                let upto = below + (1.0 - alpha);
                if u <= below {
                    max.quantile(u / alpha)
                } else if u <= upto {
                    Ok(*base)
                } else {
                    max.quantile(((u - (1.0 - alpha)) / alpha).min(1.0))
                }
            }
        }
    }

    /// Atoms of `G` (value, mass) for laws that are not purely finite.
    pub fn jumps(&self, inst: &Instance) -> Vec<(f64, f64)> {
        if let Some(a) = self.finite_atoms() {
            return a;
        }
        match self {
            ThresholdLaw::Atoms(a) => a.clone(),
            ThresholdLaw::Max(_) | ThresholdLaw::Mixture { .. } => {
                let mut pts = inst.atoms();
                if let ThresholdLaw::Mixture { base, .. } = self {
                    pts.push(*base);
                }
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                pts.into_iter()
                    .map(|t| (t, self.cdf(t) - self.cdf_left(t)))
                    .filter(|&(_, m)| m > 0.0)
                    .collect()
            }
        }
    }
}

/// One run of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trajectory {
    pub drawn_threshold: f64,
    /// One-based index of the accepted item.
    pub stop_index: Option<usize>,
    pub payoff: f64,
    /// Values equal to the threshold met during the scan.
    pub tie_events: u32,
}

/// Number of trials behind an [`EvalResult`], or `Exact`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trials {
    Exact,
    Count(u64),
}

impl Serialize for Trials {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Trials::Exact => s.serialize_str("exact"),
            Trials::Count(n) => s.serialize_u64(*n),
        }
    }
}

/// `P(ALG > z)` at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailPoint {
    pub z: f64,
    pub prob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

/// Standard errors of the Monte Carlo means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StdErrors {
    pub expected_payoff: f64,
    pub threshold_part: f64,
    pub surplus_part: f64,
    /// Standard error of the per-run `payoff - (threshold + surplus)`.
    pub residual: f64,
}

/// Expected payoff with its threshold/surplus split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub expected_payoff: f64,
    /// `E[tau 1{stopped}]`.
    pub threshold_part: f64,
    /// `E[(payoff - tau) 1{stopped}]`.
    pub surplus_part: f64,
    pub tail: Vec<TailPoint>,
    /// Exact payoff law, when enumerated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_pmf: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<StdErrors>,
    pub trials: Trials,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl EvalResult {
    /// `|E[ALG] - (threshold part + surplus part)|`.
    pub fn decomposition_residual(&self) -> f64 {
        (self.expected_payoff - (self.threshold_part + self.surplus_part)).abs()
    }

    pub fn is_exact(&self) -> bool {
        self.trials == Trials::Exact
    }

    /// `P(ALG > z)` from the exact payoff law, if present.
    pub fn exact_tail(&self, z: f64) -> Option<f64> {
        self.payoff_pmf
            .as_ref()
            .map(|pmf| pmf.iter().filter(|(v, _)| *v > z).map(|(_, p)| p).sum())
    }

    /// Replaces the tail table by one on `grid` (exact results only).
    pub fn with_tail_grid(mut self, grid: &[f64]) -> Self {
        if self.payoff_pmf.is_some() {
            self.tail = grid
                .iter()
                .map(|&z| TailPoint {
                    z,
                    prob: self.exact_tail(z).unwrap_or(0.0),
                    stderr: None,
                })
                .collect();
        }
        self
    }
}

/// A rule prepared for repeated runs on one instance.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    inst: &'a Instance,
    rule: &'a RuleSpec,
    law: Option<MaxDistribution>,
}

impl<'a> Simulator<'a> {
    pub fn new(inst: &'a Instance, rule: &'a RuleSpec) -> Result<Self> {
        rule.validate()?;
        let law = match rule {
            RuleSpec::InverseCdfMax | RuleSpec::Mixture { .. } => Some(inst.max_distribution()),
            _ => None,
        };
        Ok(Self { inst, rule, law })
    }

    pub fn sample_threshold<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw(rng).0
    }

    /// Threshold and, for draws of `M` at an atom, its tie rank.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Option<f64>) {
        match self.rule {
            RuleSpec::Deterministic { tau } => (*tau, None),
            RuleSpec::SampleMax => {
                let copy: Vec<f64> = self.inst.items().iter().map(|d| d.sample(rng)).collect();
                let tau = copy.iter().copied().fold(0.0, f64::max);
                if !self.has_atom(tau) {
                    return (tau, None);
                }
                // The perturbed maximum carries the largest rank among the tied copies.
                let rank = copy.iter().filter(|&&y| y == tau).map(|_| rng.gen::<f64>()).fold(0.0, f64::max);
                (tau, Some(rank))
            }
            RuleSpec::InverseCdfMax => self.draw_max(rng),
            RuleSpec::Empirical { samples } => (samples[rng.gen_range(0..samples.len())], None),
            RuleSpec::Mixture { alpha, base_tau } => {
                let coin: f64 = rng.gen();
                if coin < *alpha {
                    self.draw_max(rng)
                } else {
                    (*base_tau, None)
                }
            }
        }
    }

    fn has_atom(&self, t: f64) -> bool {
        self.inst.items().iter().any(|d| d.atom_mass(t) > 0.0)
    }

    /// `F^{-1}(v)`; inside a jump of `F` the position of `v` fixes the rank.
    fn draw_max<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Option<f64>) {
        let v: f64 = rng.gen();
        let tau = self
            .law
            .as_ref()
            .expect("prepared")
            .quantile(v)
            .expect("uniform draw lies in [0, 1)");
        if !self.has_atom(tau) {
            return (tau, None);
        }
        (tau, Some(pass_poly(self.inst, tau).solve_increasing(v)))
    }

    /// One run from three independent streams.
    pub fn run<A, B, C>(&self, threshold_rng: &mut A, value_rng: &mut B, tie_rng: &mut C) -> Trajectory
    where
        A: Rng + ?Sized,
        B: Rng + ?Sized,
        C: Rng + ?Sized,
    {
        let (tau, mut threshold_rank) = self.draw(threshold_rng);
        let mut ties = 0;
        for (i, d) in self.inst.items().iter().enumerate() {
            let x = d.sample(value_rng);
            let accept = if x > tau {
                true
            } else if x == tau {
                ties += 1;
                let u = *threshold_rank.get_or_insert_with(|| tie_rng.gen());
                let r: f64 = tie_rng.gen();
                r > u
            } else {
                false
            };
            if accept {
                return Trajectory {
                    drawn_threshold: tau,
                    stop_index: Some(i + 1),
                    payoff: x,
                    tie_events: ties,
                };
            }
        }
        Trajectory {
            drawn_threshold: tau,
            stop_index: None,
            payoff: 0.0,
            tie_events: ties,
        }
    }

    /// Run number `trial` of the family rooted at `streams`.
    pub fn run_trial(&self, streams: &Streams, trial: u64) -> Trajectory {
        self.run(
            &mut streams.substream(trial, Role::Threshold),
            &mut streams.substream(trial, Role::Values),
            &mut streams.substream(trial, Role::Ties),
        )
    }
}

/// Draws a threshold from `rule` on `inst`.
pub fn sample_threshold<R: Rng + ?Sized>(rule: &RuleSpec, inst: &Instance, rng: &mut R) -> Result<f64> {
    Ok(Simulator::new(inst, rule)?.sample_threshold(rng))
}

/// One run with threshold, values and tie ranks on separate substreams of `streams`.
pub fn run_once(inst: &Instance, rule: &RuleSpec, streams: &Streams, trial: u64) -> Result<Trajectory> {
    Ok(Simulator::new(inst, rule)?.run_trial(streams, trial))
}

/// Exact result when the pair is supported by enumeration or the closed form.
pub fn exact_if_supported(inst: &Instance, rule: &RuleSpec) -> Result<Option<EvalResult>> {
    rule.validate()?;
    if inst.is_finite() {
        return exact_evaluate(inst, rule).map(Some);
    }
    let law = rule.threshold_law(inst)?;
    match law.finite_atoms() {
        Some(a) if a.len() == 1 && law.is_fixed() => evaluate_deterministic(inst, a[0].0).map(Some),
        Some(_) if law.is_fixed() => exact::exact_against_law(inst, &law).map(Some),
        _ => Ok(None),
    }
}

/// Exact evaluation when supported, otherwise Monte Carlo with `config`.
pub fn evaluate(inst: &Instance, rule: &RuleSpec, config: &MonteCarloConfig) -> Result<EvalResult> {
    match exact_if_supported(inst, rule)? {
        Some(r) => Ok(r),
        None => monte_carlo_with(inst, rule, config),
    }
}

/// Estimate of `P(ALG > z)` with its standard error (`None` when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub prob: f64,
    pub stderr: Option<f64>,
}

/// `P(ALG > z)` for the unperturbed payoff.
pub fn tail_probability(inst: &Instance, rule: &RuleSpec, z: f64) -> Result<TailEstimate> {
    let config = MonteCarloConfig {
        zgrid: vec![z],
        ..MonteCarloConfig::default()
    };
    tail_probability_with(inst, rule, z, &config)
}

/// As [`tail_probability`], with explicit Monte Carlo settings for the fallback.
pub fn tail_probability_with(inst: &Instance, rule: &RuleSpec, z: f64, config: &MonteCarloConfig) -> Result<TailEstimate> {
    if let Some(r) = exact_if_supported(inst, rule)? {
        if let Some(p) = r.exact_tail(z) {
            return Ok(TailEstimate { prob: p, stderr: None });
        }
        if let Some(t) = r.tail.iter().find(|t| t.z == z) {
            return Ok(TailEstimate { prob: t.prob, stderr: None });
        }
        let grid = [z];
        if let RuleSpec::Deterministic { tau } = rule {
            let p = exact::deterministic_tail(inst, *tau, &grid)[0];
            return Ok(TailEstimate { prob: p, stderr: None });
        }
    }
    let mut config = config.clone();
    config.zgrid = vec![z];
    let r = monte_carlo_with(inst, rule, &config)?;
    let t = r.tail[0];
    Ok(TailEstimate {
        prob: t.prob,
        stderr: t.stderr,
    })
}
