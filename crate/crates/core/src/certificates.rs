//! Numeric checks of the inequalities and identities behind the one-half guarantee.
//!
//! Every check returns a [`CertificateReport`] with `margin = lhs - rhs`,
//! oriented so that a nonnegative margin means the relation holds. Identities
//! report `margin = -|lhs - rhs|`. A report passes iff `margin >= -tolerance`.
//!
//! Comparisons against a threshold use the same tie-break convention as the
//! engines: the threshold carries a uniform rank `r`, so the probability of
//! passing item `j` at threshold `t` is `F_j(t-) + r P(X_j = t)`. Without
//! atoms at `t` this is `F_j(t)` and every formula reduces to its plain form.

use serde::Serialize;

use crate::engines::{
    self, evaluate_deterministic, exact_evaluate, exact_if_supported, monte_carlo_with, EvalResult, MonteCarloConfig,
    RuleSpec, ThresholdLaw, DEFAULT_SEED, DEFAULT_TRIALS,
};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::poly::Poly;
use crate::quadrature;
use crate::thresholds;

/// Tolerance for identities evaluated by exact enumeration.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
/// Tolerance for exact and quadrature-backed inequalities.
pub const EXACT_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance requested from quadrature inside the certificates.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;
/// Number of standard errors allowed for Monte Carlo verdicts.
pub const SIGMAS: f64 = 3.0;

/// How the two sides were computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Exact,
    Quadrature,
    MonteCarlo { trials: u64, seed: u64, stderr: f64 },
}

/// Where a grid check attained its worst margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstPoint {
    pub x: f64,
    /// One-based item index, for checks quantified over items.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item: Option<usize>,
}

/// Verdict on one relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_point: Option<WorstPoint>,
    pub tolerance: f64,
    pub passed: bool,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CertificateReport {
    /// Inequality `lhs >= rhs`.
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, method: Method) -> Self {
        Self::with_margin(name, lhs, rhs, lhs - rhs, tolerance, method)
    }

    /// Identity `lhs == rhs`.
    pub fn identity(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, method: Method) -> Self {
        Self::with_margin(name, lhs, rhs, -(lhs - rhs).abs(), tolerance, method)
    }

    fn with_margin(name: impl Into<String>, lhs: f64, rhs: f64, margin: f64, tolerance: f64, method: Method) -> Self {
        // Adding zero turns -0.0 into 0.0 so reports never print a signed zero.
        let margin = margin + 0.0;
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            worst_point: None,
            tolerance,
            passed: margin >= -tolerance,
            method,
            note: None,
        }
    }

    fn at(mut self, x: f64, item: Option<usize>) -> Self {
        self.worst_point = Some(WorstPoint { x, item });
        self
    }

    fn noted(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Monte Carlo settings for checks that cannot be evaluated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifyConfig {
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            threads: 1,
        }
    }
}

impl CertifyConfig {
    fn monte_carlo(&self, zgrid: Vec<f64>) -> MonteCarloConfig {
        MonteCarloConfig {
            trials: self.trials,
            seed: self.seed,
            threads: self.threads,
            zgrid,
        }
    }
}

fn mc_method(r: &EvalResult, stderr: f64) -> Method {
    Method::MonteCarlo {
        trials: match r.trials {
            engines::Trials::Count(n) => n,
            engines::Trials::Exact => 0,
        },
        seed: r.seed.unwrap_or(DEFAULT_SEED),
        stderr,
    }
}

fn quadrature_or_exact(inst: &Instance) -> Method {
    if inst.is_finite() {
        Method::Exact
    } else {
        Method::Quadrature
    }
}

/// Passing probability of item `j` at threshold `t` as a linear function of the rank.
fn pass_poly(inst: &Instance, upto: usize, t: f64) -> Poly {
    let mut p = Poly::one();
    for d in &inst.items()[..upto] {
        p.mul_linear(d.cdf_left(t), d.atom_mass(t));
    }
    p
}

/// `P(stop)` for a fixed threshold under the tie-break convention: the
/// perturbed exceedance probability, equal to `p(tau)` without atoms at `tau`.
pub fn perturbed_exceed_prob(inst: &Instance, tau: f64) -> f64 {
    1.0 - pass_poly(inst, inst.len(), tau).integral()
}

fn has_atom_at(inst: &Instance, tau: f64) -> bool {
    inst.items().iter().any(|d| d.atom_mass(tau) > 0.0)
}

// ---------------------------------------------------------------------------
// Decomposition and deterministic certificates
// ---------------------------------------------------------------------------

/// `E[ALG] = E[tau 1{M > tau}] + E[sum_i (X_i - tau)^+ I_i]`.
pub fn check_decomposition(inst: &Instance, rule: &RuleSpec, config: &CertifyConfig) -> Result<CertificateReport> {
    let name = format!("decomposition[{}]", rule.label());
    if let Some(r) = exact_if_supported(inst, rule)? {
        return Ok(CertificateReport::identity(
            name,
            r.expected_payoff,
            r.threshold_part + r.surplus_part,
            IDENTITY_TOLERANCE,
            Method::Exact,
        ));
    }
    let r = monte_carlo_with(inst, rule, &config.monte_carlo(Vec::new()))?;
    let se = r.stderr.expect("monte carlo");
    let combined = (se.expected_payoff.powi(2) + se.threshold_part.powi(2) + se.surplus_part.powi(2)).sqrt();
    let method = mc_method(&r, combined);
    Ok(CertificateReport::identity(
        name,
        r.expected_payoff,
        r.threshold_part + r.surplus_part,
        (SIGMAS * combined).max(IDENTITY_TOLERANCE),
        method,
    ))
}

/// `E[ALG] >= p tau + (1 - p) R(tau)` at a fixed threshold.
pub fn check_det_certificate(inst: &Instance, tau: f64) -> Result<CertificateReport> {
    let alg = evaluate_deterministic(inst, tau)?.expected_payoff;
    let p = perturbed_exceed_prob(inst, tau);
    let rhs = p * tau + (1.0 - p) * inst.aggregate_surplus(tau);
    let report = CertificateReport::inequality(format!("det-certificate[tau={tau}]"), alg, rhs, EXACT_TOLERANCE, Method::Exact);
    Ok(if has_atom_at(inst, tau) {
        report.noted(format!(
            "atom at tau: p uses the tie-broken stopping probability {p} instead of p(tau) = {}",
            inst.exceed_prob(tau)
        ))
    } else {
        report
    })
}

/// Result of [`check_factored_certificate`]: the report plus the product term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactoredCertificate {
    pub report: CertificateReport,
    /// `(1 - 2p)(E[M]/2 - tau)`.
    pub product_term: f64,
    pub exceed_factor: f64,
    pub half_mean_factor: f64,
}

/// `E[ALG] >= E[M]/2 + (1 - 2p)(E[M]/2 - tau)`.
pub fn check_factored_certificate(inst: &Instance, tau: f64) -> Result<FactoredCertificate> {
    let alg = evaluate_deterministic(inst, tau)?.expected_payoff;
    let half = thresholds::half_mean(inst)?;
    let p = perturbed_exceed_prob(inst, tau);
    let exceed_factor = 1.0 - 2.0 * p;
    let half_mean_factor = half - tau;
    let product_term = exceed_factor * half_mean_factor;
    let rhs = half + product_term;
    let tol = EXACT_TOLERANCE;
    let mut report = CertificateReport::inequality(
        format!("factored-certificate[tau={tau}]"),
        alg,
        rhs,
        tol,
        quadrature_or_exact(inst),
    );
    report.note = Some(format!(
        "product term {product_term} ({})",
        if product_term >= 0.0 { "nonnegative" } else { "negative" }
    ));
    Ok(FactoredCertificate {
        report,
        product_term,
        exceed_factor,
        half_mean_factor,
    })
}

/// `E[ALG at tau*] >= tau*` and `E[M] <= 2 tau*`; the margin is the smaller slack.
pub fn check_fixed_point_sandwich(inst: &Instance) -> Result<CertificateReport> {
    let star = thresholds::balanced_surplus(inst, thresholds::DEFAULT_TOLERANCE)?;
    let alg = evaluate_deterministic(inst, star)?.expected_payoff;
    let em = inst.expected_max()?;
    let lower = alg - star;
    let upper = 2.0 * star - em;
    let (lhs, rhs) = if lower <= upper { (alg, star) } else { (2.0 * star, em) };
    let report = CertificateReport::inequality("fixed-point-sandwich", lhs, rhs, EXACT_TOLERANCE, quadrature_or_exact(inst));
    Ok(report
        .at(star, None)
        .noted(format!("tau* = {star}: E[ALG] - tau* = {lower}, 2 tau* - E[M] = {upper}")))
}

fn deterministic_payoff(inst: &Instance, tau: f64) -> Result<f64> {
    Ok(if inst.is_finite() {
        exact_evaluate(inst, &RuleSpec::Deterministic { tau })?.expected_payoff
    } else {
        evaluate_deterministic(inst, tau)?.expected_payoff
    })
}

/// `min_tau E[ALG](tau) - E[M]/2` over `points` thresholds spanning the certified interval.
pub fn check_interval_guarantee(inst: &Instance, points: usize) -> Result<CertificateReport> {
    if points < 2 {
        return Err(Error::Domain {
            what: "sweep points",
            value: points as f64,
            domain: "[2, inf)",
        });
    }
    let set = thresholds::certified_interval(inst)?;
    let half = set.half_mean;
    let mut worst: Option<(f64, f64)> = None;
    for tau in set.sweep(points) {
        let alg = deterministic_payoff(inst, tau)?;
        if worst.is_none_or(|(_, w)| alg < w) {
            worst = Some((tau, alg));
        }
    }
    let (tau, alg) = worst.expect("at least two points");
    let report = CertificateReport::inequality("interval-guarantee", alg, half, EXACT_TOLERANCE, quadrature_or_exact(inst)).at(tau, None);
    Ok(if set.median_is_exact {
        report
    } else {
        report.noted("median is an atom with p(median) != 1/2; the interval is the formula as written, checked numerically")
    })
}

// ---------------------------------------------------------------------------
// Randomized thresholds
// ---------------------------------------------------------------------------

/// A quadrature-backed or exact scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluated {
    pub value: f64,
    pub error: f64,
    pub exact: bool,
}

/// Cuts in `u` space for integrating against `G` by `t = G^{-1}(u)`, and the
/// atoms of `G` as `(t, G(t-), G(t))`.
fn law_cuts(inst: &Instance, law: &ThresholdLaw) -> (Vec<f64>, Vec<(f64, f64, f64)>) {
    let mut cuts = vec![0.0, 1.0];
    let mut atoms = Vec::new();
    for (t, _) in law.jumps(inst) {
        let lo = law.cdf_left(t);
        let hi = law.cdf(t);
        cuts.push(lo);
        cuts.push(hi);
        atoms.push((t, lo, hi));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    (cuts, atoms)
}

/// `int h(t) dG(t)` where `h` is evaluated off the atoms of `G` and `on_atom`
/// gives the (rank-integrated) contribution per unit mass at each atom.
fn integrate_law<H, A>(inst: &Instance, law: &ThresholdLaw, upto: f64, mut h: H, mut on_atom: A) -> Result<Evaluated>
where
    H: FnMut(f64) -> f64,
    A: FnMut(f64) -> f64,
{
    if let Some(atoms) = law.finite_atoms() {
        let value = atoms
            .iter().filter(|(t, _)| *t <= upto).map(|&(t, w)| w * on_atom(t)).sum();
        return Ok(Evaluated {
            value,
            error: 0.0,
            exact: true,
        });
    }
    let (cuts, atoms) = law_cuts(inst, law);
    let ceiling = law.cdf(upto);
    let mut value = 0.0;
    for &(t, lo, hi) in &atoms {
        if t <= upto {
            value += (hi - lo) * on_atom(t);
        }
    }
    let mut error = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1].min(ceiling));
        if b <= a {
            continue;
        }
        let mid = law.quantile(0.5 * (a + b))?;
        if atoms.iter().any(|&(t, lo, hi)| t == mid && lo <= a && hi >= b) {
            continue;
        }
        let piece = quadrature::adaptive_simpson(
            |u| match law.quantile(u) {
                Ok(t) => h(t),
                Err(_) => 0.0,
            },
            a,
            b,
            QUADRATURE_TOLERANCE,
        )?;
        value += piece.value;
        error += piece.error;
    }
    Ok(Evaluated {
        value,
        error,
        exact: false,
    })
}

/// Surplus part of a randomized threshold with law `G`:
/// `int sum_i E[(X_i - t)^+] prod_{j<i} F_j(t) dG(t)`. At atoms of `G` the
/// reach product is averaged over the threshold's tie rank.
pub fn surplus_eq4(inst: &Instance, law: &ThresholdLaw) -> Result<Evaluated> {
    let plain = |t: f64| {
        let mut reach = 1.0;
        let mut s = 0.0;
        for d in inst.items() {
            s += reach * d.overshoot(t);
            reach *= d.cdf(t);
        }
        s
    };
    let tie_broken = |t: f64| {
        let mu = law.rank_moments(inst, t, inst.len() + 1);
        let mut reach = Poly::one();
        let mut s = 0.0;
        for d in inst.items() {
            s += reach.expect(&mu) * d.overshoot(t);
            reach.mul_linear(d.cdf_left(t), d.atom_mass(t));
        }
        s
    };
    integrate_law(inst, law, f64::INFINITY, plain, tie_broken)
}

/// Eq. (4) against the engine's surplus part.
pub fn check_surplus_identity(inst: &Instance, rule: &RuleSpec, config: &CertifyConfig) -> Result<CertificateReport> {
    let law = rule.threshold_law(inst)?;
    let formula = surplus_eq4(inst, &law)?;
    let name = format!("surplus-eq4[{}]", rule.label());
    if let Some(r) = exact_if_supported(inst, rule)? {
        let tol = if formula.exact { EXACT_TOLERANCE } else { EXACT_TOLERANCE.max(formula.error) };
        let method = if formula.exact { Method::Exact } else { Method::Quadrature };
        return Ok(CertificateReport::identity(name, formula.value, r.surplus_part, tol, method));
    }
    let r = monte_carlo_with(inst, rule, &config.monte_carlo(Vec::new()))?;
    let se = r.stderr.expect("monte carlo").surplus_part;
    let method = mc_method(&r, se);
    Ok(CertificateReport::identity(
        name,
        formula.value,
        r.surplus_part,
        SIGMAS * se + formula.error.max(QUADRATURE_TOLERANCE),
        method,
    ))
}

/// `int_0^inf F(x)(1 - F(x)) dx = E[(M - tau)^+]` for an independent copy `tau` of `M`.
pub fn gini_integral(inst: &Instance) -> Result<Evaluated> {
    if let Some(pmf) = inst.max_distribution().pmf() {
        let mut value = 0.0;
        for w in pmf.windows(2) {
            let f = inst.max_cdf(w[0].0);
            value += f * (1.0 - f) * (w[1].0 - w[0].0);
        }
        return Ok(Evaluated {
            value,
            error: 0.0,
            exact: true,
        });
    }
    let value = inst.integrate_over_support(
        0.0,
        |x| {
            let f = inst.max_cdf(x);
            f * (1.0 - f)
        },
        QUADRATURE_TOLERANCE,
    )?;
    Ok(Evaluated {
        value,
        error: QUADRATURE_TOLERANCE,
        exact: false,
    })
}

/// Surplus part of `tau ~ M` against `(1/2) int F (1 - F)`.
pub fn check_randomized_median_bound(inst: &Instance) -> Result<CertificateReport> {
    let lhs = if inst.is_finite() {
        exact_evaluate(inst, &RuleSpec::SampleMax)?.surplus_part
    } else {
        surplus_eq4(inst, &ThresholdLaw::of_max(inst))?.value
    };
    let rhs = 0.5 * gini_integral(inst)?.value;
    Ok(CertificateReport::inequality(
        "randomized-median-bound",
        lhs,
        rhs,
        EXACT_TOLERANCE,
        quadrature_or_exact(inst),
    ))
}

/// `int_[0,x] prod_{j<i} F_j dG >= (1/2) F(x) prod_{j<i} F_j(x)` over items and `xgrid`.
pub fn check_condition6(inst: &Instance, law: &ThresholdLaw, xgrid: &[f64]) -> Result<CertificateReport> {
    let mut worst: Option<(f64, f64, f64, usize, f64)> = None;
    let mut exact = true;
    for i in 0..inst.len() {
        for &x in xgrid {
            let reach = |t: f64| inst.reach(i, t);
            let lhs = integrate_law(inst, law, x, reach, reach)?;
            exact &= lhs.exact;
            let rhs = 0.5 * inst.max_cdf(x) * inst.reach(i, x);
            let margin = lhs.value - rhs;
            if worst.is_none_or(|w| margin < w.0) {
                worst = Some((margin, lhs.value, rhs, i + 1, x));
            }
        }
    }
    let (_, lhs, rhs, item, x) = worst.ok_or(Error::Domain {
        what: "grid size",
        value: 0.0,
        domain: "[1, inf)",
    })?;
    let method = if exact { Method::Exact } else { Method::Quadrature };
    Ok(CertificateReport::inequality("condition6", lhs, rhs, EXACT_TOLERANCE, method)
        .at(x, Some(item))
        .noted(format!("checked on {} grid points x {} items", xgrid.len(), inst.len())))
}

/// `int t (1 - F(t)) dG(t) >= int t (1 - F(t)) dF(t)`.
pub fn check_condition7(inst: &Instance, law: &ThresholdLaw) -> Result<CertificateReport> {
    let g = |t: f64| t * (1.0 - inst.max_cdf(t));
    let lhs = integrate_law(inst, law, f64::INFINITY, g, g)?;
    let rhs = integrate_law(inst, &ThresholdLaw::of_max(inst), f64::INFINITY, g, g)?;
    let method = if lhs.exact && rhs.exact { Method::Exact } else { Method::Quadrature };
    Ok(CertificateReport::inequality("condition7", lhs.value, rhs.value, EXACT_TOLERANCE, method))
}

/// `P(ALG > z) >= (1/2) P(M > z)` on `zgrid` (augmented by payoff atoms when exact).
pub fn check_tail_dominance(inst: &Instance, rule: &RuleSpec, zgrid: &[f64], config: &CertifyConfig) -> Result<CertificateReport> {
    if !rule.draws_max() {
        return Err(Error::InvalidRule(format!(
            "tail dominance needs a threshold distributed as M, got {}",
            rule.label()
        )));
    }
    let name = format!("tail-dominance[{}]", rule.label());
    if inst.is_finite() {
        let r = exact_evaluate(inst, rule)?;
        let mut grid: Vec<f64> = zgrid.to_vec();
        grid.extend(r.tail.iter().map(|t| t.z));
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut worst: Option<(f64, f64, f64, f64)> = None;
        for z in grid {
            let lhs = r.exact_tail(z).expect("enumerated");
            let rhs = 0.5 * inst.exceed_prob(z);
            if worst.is_none_or(|w| lhs - rhs < w.0) {
                worst = Some((lhs - rhs, lhs, rhs, z));
            }
        }
        let (_, lhs, rhs, z) = worst.expect("nonempty grid");
        return Ok(CertificateReport::inequality(name, lhs, rhs, EXACT_TOLERANCE, Method::Exact).at(z, None));
    }
    let r = monte_carlo_with(inst, rule, &config.monte_carlo(zgrid.to_vec()))?;
    let mut worst: Option<(f64, f64, f64, f64, f64)> = None;
    for t in &r.tail {
        let se = t.stderr.unwrap_or(0.0);
        let rhs = 0.5 * inst.exceed_prob(t.z);
        let slack = t.prob - rhs + SIGMAS * se;
        if worst.is_none_or(|w| slack < w.0) {
            worst = Some((slack, t.prob, rhs, t.z, se));
        }
    }
    let (_, lhs, rhs, z, se) = worst.ok_or(Error::Domain {
        what: "grid size",
        value: 0.0,
        domain: "[1, inf)",
    })?;
    let method = mc_method(&r, se);
    Ok(CertificateReport::inequality(name, lhs, rhs, SIGMAS * se, method).at(z, None))
}

/// `E[(M + tau) 1{M > tau}] = E[M]` for an independent copy `tau` of `M`, ties weighted 1/2.
pub fn check_exchangeability(inst: &Instance) -> Result<CertificateReport> {
    let em = inst.expected_max()?;
    let law = inst.max_distribution();
    if let Some(pmf) = law.pmf() {
        let mut lhs = 0.0;
        for &(m, pm) in pmf {
            for &(t, pt) in pmf {
                let weight = if m > t {
                    1.0
                } else if m == t {
                    0.5
                } else {
                    0.0
                };
                lhs += pm * pt * weight * (m + t);
            }
        }
        return Ok(CertificateReport::identity("exchangeability", lhs, em, EXACT_TOLERANCE, Method::Exact));
    }
    // Given tau = t: E[M 1{M > t}] + t P(M > t) + t P(M = t), the last term
    // being the half-weighted tie.
    let inner = |t: f64| -> f64 {
        let over = inst.max_overshoot(t).unwrap_or(f64::NAN);
        let above = 1.0 - inst.max_cdf(t);
        let tie = inst.max_cdf(t) - inst.max_cdf_left(t);
        2.0 * t * above + over + t * tie
    };
    let lhs = integrate_law(inst, &ThresholdLaw::of_max(inst), f64::INFINITY, inner, inner)?;
    if lhs.value.is_nan() {
        return Err(Error::Quadrature {
            tolerance: QUADRATURE_TOLERANCE,
            achieved: f64::NAN,
        });
    }
    Ok(CertificateReport::identity(
        "exchangeability",
        lhs.value,
        em,
        EXACT_TOLERANCE,
        Method::Quadrature,
    ))
}

/// `E[ALG] >= E[M] / 2`.
pub fn half_ratio_report(inst: &Instance, rule: &RuleSpec, config: &CertifyConfig) -> Result<CertificateReport> {
    let half = thresholds::half_mean(inst)?;
    let name = format!("half-ratio[{}]", rule.label());
    if let Some(r) = exact_if_supported(inst, rule)? {
        return Ok(CertificateReport::inequality(name, r.expected_payoff, half, EXACT_TOLERANCE, quadrature_or_exact(inst)));
    }
    let r = monte_carlo_with(inst, rule, &config.monte_carlo(Vec::new()))?;
    let se = r.stderr.expect("monte carlo").expected_payoff;
    let method = mc_method(&r, se);
    let report = CertificateReport::inequality(name, r.expected_payoff, half, SIGMAS * se, method);
    Ok(match rule {
        RuleSpec::Empirical { .. } => report.noted("empirical thresholds carry no guarantee unless the samples are genuine draws of M"),
        _ => report,
    })
}

/// `max_x |sum_i (1 - F_i) prod_{j<i} F_j - (1 - F)|` over `xgrid`.
pub fn check_telescope(inst: &Instance, xgrid: &[f64]) -> CertificateReport {
    let (x, worst) = xgrid
        .iter()
        .map(|&x| (x, inst.telescope_residual(x)))
        .fold((0.0, 0.0), |acc, (x, r)| if r > acc.1 { (x, r) } else { acc });
    CertificateReport::with_margin("telescope", worst, 0.0, -worst, IDENTITY_TOLERANCE, Method::Exact).at(x, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;

    fn single(d: Distribution) -> Instance {
        Instance::new(vec![d]).unwrap()
    }

    fn coin() -> Instance {
        single(Distribution::discrete(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap())
    }

    fn unit() -> Instance {
        single(Distribution::uniform(0.0, 1.0).unwrap())
    }

    fn near_tight() -> Instance {
        Instance::new(vec![
            Distribution::point_mass(1.0).unwrap(),
            Distribution::discrete(vec![0.0, 100.0], vec![0.99, 0.01]).unwrap(),
        ])
        .unwrap()
    }

    fn cfg() -> CertifyConfig {
        CertifyConfig {
            trials: 200_000,
            ..CertifyConfig::default()
        }
    }

    #[test]
    fn decomposition_examples() {
        let r = check_decomposition(&coin(), &RuleSpec::SampleMax, &cfg()).unwrap();
        assert!(r.passed && r.margin == 0.0 && r.lhs == 0.75);
        let pm = single(Distribution::point_mass(2.0).unwrap());
        let r = check_decomposition(&pm, &RuleSpec::Deterministic { tau: 1.0 }, &cfg()).unwrap();
        assert!(r.passed && r.lhs == 2.0 && r.rhs == 2.0);
        let two = Instance::new(vec![Distribution::discrete(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap(); 2]).unwrap();
        let r = check_decomposition(&two, &RuleSpec::Deterministic { tau: 1.0 }, &cfg()).unwrap();
        assert!(r.passed && r.lhs == 1.5);
        let r = check_decomposition(&unit(), &RuleSpec::SampleMax, &cfg()).unwrap();
        assert!(r.passed);
        assert!(matches!(r.method, Method::MonteCarlo { .. }));
    }

    #[test]
    fn det_certificate_examples() {
        let r = check_det_certificate(&unit(), 0.25).unwrap();
        assert!((r.lhs - 0.46875).abs() < 1e-15);
        assert!((r.rhs - 0.2578125).abs() < 1e-15);
        assert!(r.passed && r.margin > 0.0);
        let pm = single(Distribution::point_mass(2.0).unwrap());
        let r = check_det_certificate(&pm, 1.0).unwrap();
        assert_eq!((r.lhs, r.rhs, r.margin), (2.0, 1.0, 1.0));
        let r = check_det_certificate(&near_tight(), 0.995).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15);
        assert!((r.rhs - 0.995).abs() < 1e-15);
        assert!((r.margin - 0.005).abs() < 1e-12);
    }

    #[test]
    fn det_certificate_with_atom_at_threshold_uses_tie_broken_probability() {
        // Literal p(1) = 0.01 would give rhs 0.01 + 0.99 * 9.99 > E[ALG].
        let inst = Instance::new(vec![
            Distribution::point_mass(1.0).unwrap(),
            Distribution::discrete(vec![0.0, 1000.0], vec![0.99, 0.01]).unwrap(),
        ])
        .unwrap();
        let r = check_det_certificate(&inst, 1.0).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.note.is_some());
    }

    #[test]
    fn factored_certificate_examples() {
        let f = check_factored_certificate(&unit(), 0.25).unwrap();
        assert!(f.product_term.abs() < 1e-10);
        assert!((f.report.rhs - 0.25).abs() < 1e-10);
        assert!((f.report.lhs - 0.46875).abs() < 1e-15);
        let f = check_factored_certificate(&unit(), 0.5).unwrap();
        assert_eq!(f.exceed_factor, 0.0);
        assert!((f.report.rhs - 0.25).abs() < 1e-10);
        let f = check_factored_certificate(&unit(), 0.375).unwrap();
        assert!((f.product_term - 0.03125).abs() < 1e-10);
        assert!((f.report.rhs - 0.28125).abs() < 1e-10);
        assert!(f.report.passed);
    }

    #[test]
    fn sandwich_examples() {
        let r = check_fixed_point_sandwich(&coin()).unwrap();
        assert!(r.passed);
        let r = check_fixed_point_sandwich(&near_tight()).unwrap();
        assert!(r.passed);
        let r = check_fixed_point_sandwich(&single(Distribution::point_mass(2.0).unwrap())).unwrap();
        assert!(r.passed && r.margin.abs() < 1e-11, "{r:?}");
    }

    #[test]
    fn interval_guarantee_examples() {
        let r = check_interval_guarantee(&unit(), 20).unwrap();
        assert!((r.margin - 0.125).abs() < 1e-10, "{r:?}");
        assert!((r.worst_point.unwrap().x - 0.5).abs() < 1e-12);
        let r = check_interval_guarantee(&single(Distribution::point_mass(2.0).unwrap()), 20).unwrap();
        assert!(r.passed && r.margin.abs() < 1e-12, "{r:?}");
        let two = Instance::new(vec![Distribution::uniform(0.0, 1.0).unwrap(); 2]).unwrap();
        let r = check_interval_guarantee(&two, 20).unwrap();
        assert!(r.passed && r.margin > 0.0);
        assert!(check_interval_guarantee(&unit(), 1).is_err());
    }

    #[test]
    fn surplus_eq4_examples() {
        let v = surplus_eq4(&coin(), &ThresholdLaw::of_max(&coin())).unwrap();
        assert_eq!(v.value, 0.5);
        let v = surplus_eq4(&unit(), &ThresholdLaw::of_max(&unit())).unwrap();
        assert!((v.value - 1.0 / 6.0).abs() < 1e-9, "{v:?}");
        let inst = near_tight();
        let v = surplus_eq4(&inst, &ThresholdLaw::atoms(vec![(0.995, 1.0)])).unwrap();
        let direct = inst.items()[0].overshoot(0.995) + inst.items()[0].cdf(0.995) * inst.items()[1].overshoot(0.995);
        assert_eq!(v.value, direct);
    }

    #[test]
    fn surplus_eq4_mixture_on_continuous_instance() {
        let law = ThresholdLaw::mixture(&unit(), 0.5, 0.4);
        let v = surplus_eq4(&unit(), &law).unwrap();
        let want = 0.5 / 6.0 + 0.5 * 0.36 / 2.0;
        assert!((v.value - want).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn randomized_median_examples() {
        let r = check_randomized_median_bound(&unit()).unwrap();
        assert!((r.lhs - 1.0 / 6.0).abs() < 1e-9);
        assert!((r.rhs - 1.0 / 12.0).abs() < 1e-9);
        let r = check_randomized_median_bound(&single(Distribution::point_mass(2.0).unwrap())).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        let r = check_randomized_median_bound(&coin()).unwrap();
        assert_eq!(r.rhs, 0.25);
        assert!(r.lhs >= 0.25 && r.passed);
    }

    #[test]
    fn condition6_examples() {
        let u = unit();
        let grid = u.default_grid();
        let r = check_condition6(&u, &ThresholdLaw::of_max(&u), &grid).unwrap();
        assert!(r.passed, "{r:?}");
        let two = Instance::new(vec![Distribution::uniform(0.0, 1.0).unwrap(), Distribution::exponential(2.0).unwrap()]).unwrap();
        let r = check_condition6(&two, &ThresholdLaw::of_max(&two), &two.default_grid()).unwrap();
        assert!(r.passed, "{r:?}");
        let inst = Instance::new(vec![
            Distribution::discrete(vec![0.0, 1.0], vec![0.1, 0.9]).unwrap(),
            Distribution::discrete(vec![0.5, 2.0], vec![0.5, 0.5]).unwrap(),
        ])
        .unwrap();
        let r = check_condition6(&inst, &ThresholdLaw::atoms(vec![(0.0, 1.0)]), &inst.default_grid()).unwrap();
        assert!(!r.passed && r.margin < 0.0, "{r:?}");
        // n = 1: G(x) - F(x)/2 = F(x)/2 at the worst grid point.
        let r = check_condition6(&coin(), &ThresholdLaw::of_max(&coin()), &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.margin, 0.25);
    }

    #[test]
    fn condition7_examples() {
        let r = check_condition7(&coin(), &ThresholdLaw::of_max(&coin())).unwrap();
        assert_eq!(r.margin, 0.0);
        let r = check_condition7(&unit(), &ThresholdLaw::atoms(vec![(0.9, 1.0)])).unwrap();
        assert!((r.lhs - 0.09).abs() < 1e-12);
        assert!((r.rhs - 1.0 / 6.0).abs() < 1e-9);
        assert!(!r.passed);
        assert!((r.margin - (0.09 - 1.0 / 6.0)).abs() < 1e-9);
        let r = check_condition7(&unit(), &ThresholdLaw::atoms(vec![(0.5, 1.0)])).unwrap();
        assert!(r.passed && (r.lhs - 0.25).abs() < 1e-15);
        let r = check_condition7(&unit(), &ThresholdLaw::of_max(&unit())).unwrap();
        assert!(r.passed && r.margin.abs() < 1e-12);
    }

    #[test]
    fn tail_dominance_examples() {
        let r = check_tail_dominance(&coin(), &RuleSpec::SampleMax, &[1.0], &cfg()).unwrap();
        assert!(r.passed);
        let c = coin();
        let at_one = exact_evaluate(&c, &RuleSpec::SampleMax).unwrap().exact_tail(1.0).unwrap();
        assert_eq!(at_one - 0.5 * c.exceed_prob(1.0), 0.125);
        let r = check_tail_dominance(&unit(), &RuleSpec::SampleMax, &unit().default_grid(), &cfg()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(check_tail_dominance(&coin(), &RuleSpec::Deterministic { tau: 1.0 }, &[1.0], &cfg()).is_err());
    }

    #[test]
    fn exchangeability_examples() {
        let r = check_exchangeability(&coin()).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
        let r = check_exchangeability(&single(Distribution::point_mass(3.0).unwrap())).unwrap();
        assert_eq!((r.lhs, r.rhs), (3.0, 3.0));
        let r = check_exchangeability(&unit()).unwrap();
        assert!(r.passed && (r.lhs - 0.5).abs() < 1e-9, "{r:?}");
        let mixed = Instance::new(vec![Distribution::point_mass(0.5).unwrap(), Distribution::uniform(0.0, 1.0).unwrap()]).unwrap();
        let r = check_exchangeability(&mixed).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn half_ratio_examples() {
        let r = half_ratio_report(&near_tight(), &RuleSpec::Deterministic { tau: 0.995 }, &cfg()).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 0.995).abs() < 1e-12);
        let pm = single(Distribution::point_mass(2.0).unwrap());
        let r = half_ratio_report(&pm, &RuleSpec::Deterministic { tau: 1.0 }, &cfg()).unwrap();
        assert_eq!((r.lhs, r.rhs), (2.0, 1.0));
        let r = half_ratio_report(&coin(), &RuleSpec::SampleMax, &cfg()).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.75, 0.5));
        let r = half_ratio_report(&unit(), &RuleSpec::Deterministic { tau: 0.9 }, &cfg()).unwrap();
        assert!(!r.passed && (r.lhs - 0.095).abs() < 1e-12);
    }

    #[test]
    fn telescope_report() {
        let two = Instance::new(vec![Distribution::uniform(0.0, 1.0).unwrap(), Distribution::exponential(1.0).unwrap()]).unwrap();
        assert!(check_telescope(&two, &two.default_grid()).passed);
    }
}
