use super::{EvalResult, RuleSpec, TailPoint, ThresholdLaw, Trials};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::poly::Poly;

/// Largest number of (outcome vector, threshold atom) pairs `exact_evaluate` enumerates.
pub const ENUMERATION_BOUND: u64 = 10_000_000;

fn merge_pmf(mut pairs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pairs.retain(|&(_, p)| p > 0.0);
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (v, p) in pairs {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => out.push((v, p)),
        }
    }
    out
}

fn payoff_grid(pmf: &[(f64, f64)]) -> Vec<f64> {
    let mut grid: Vec<f64> = pmf.iter().map(|(v, _)| *v).collect();
    grid.extend(pmf.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Exact evaluation by enumerating every outcome vector against every threshold atom.
///
/// Within each pair, with `k` tied values met before the first strict exceeder
/// `v`, the threshold's rank `u` gives acceptance of some tie with weight
/// `1 - E[u^k]` and of `v` with weight `E[u^k]`. For a uniform rank these are
/// `k/(k+1)` and `1/(k+1)`.
pub fn exact_evaluate(inst: &Instance, rule: &RuleSpec) -> Result<EvalResult> {
    rule.validate()?;
    if let Some(i) = inst.items().iter().position(|d| !d.is_finite_support()) {
        return Err(Error::Unsupported(format!("item {} is continuous", i + 1)));
    }
    let law = rule.threshold_law(inst)?;
    let thresholds = law
        .finite_atoms()
        .ok_or_else(|| Error::Unsupported("threshold law is continuous".into()))?;
    let items: Vec<Vec<(f64, f64)>> = inst
        .items()
        .iter()
        .map(|d| d.atoms().expect("finite support"))
        .collect();
    let size = items.iter().map(|a| a.len() as f64).product::<f64>() * thresholds.len() as f64;
    if size > ENUMERATION_BOUND as f64 {
        return Err(Error::TooLarge {
            size,
            bound: ENUMERATION_BOUND,
        });
    }

    let n = items.len();
    let moments: Vec<Vec<f64>> = thresholds.iter().map(|&(t, _)| law.rank_moments(inst, t, n + 1)).collect();
    let mut expected = 0.0;
    let mut threshold_part = 0.0;
    let mut surplus_part = 0.0;
    let mut payoffs: Vec<(f64, f64)> = Vec::new();
    let mut idx = vec![0usize; n];
    let mut values = vec![0.0; n];
    loop {
        let mut weight = 1.0;
        for (i, &k) in idx.iter().enumerate() {
            let (v, p) = items[i][k];
            values[i] = v;
            weight *= p;
        }
        for (&(t, wt), mu) in thresholds.iter().zip(&moments) {
            let w = weight * wt;
            let mut ties = 0u32;
            let mut strict = None;
            for &x in &values {
                if x > t {
                    strict = Some(x);
                    break;
                }
                if x == t {
                    ties += 1;
                }
            }
            // Some tie accepted: 1 - E[u^k]; all k ties passed: E[u^k].
            let last = mu[ties as usize];
            let tie_accept = 1.0 - last;
            match strict {
                Some(v) => {
                    expected += w * (t * tie_accept + v * last);
                    threshold_part += w * t;
                    surplus_part += w * (v - t) * last;
                    payoffs.push((t, w * tie_accept));
                    payoffs.push((v, w * last));
                }
                None => {
                    expected += w * t * tie_accept;
                    threshold_part += w * t * tie_accept;
                    payoffs.push((t, w * tie_accept));
                    payoffs.push((0.0, w * last));
                }
            }
        }
        // Odometer over outcome vectors.
        let mut pos = n;
        loop {
            if pos == 0 {
                let pmf = merge_pmf(payoffs);
                let grid = payoff_grid(&pmf);
                let result = EvalResult {
                    expected_payoff: expected,
                    threshold_part,
                    surplus_part,
                    tail: Vec::new(),
                    payoff_pmf: Some(pmf),
                    stderr: None,
                    trials: Trials::Exact,
                    seed: None,
                };
                return Ok(result.with_tail_grid(&grid));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < items[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Closed-form evaluation of a fixed threshold that no item has an atom at:
/// threshold part `tau p(tau)`, surplus part `sum_i prod_{j<i} F_j(tau) E[(X_i - tau)^+]`.
pub fn exact_evaluate_deterministic(inst: &Instance, tau: f64) -> Result<EvalResult> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain {
            what: "threshold",
            value: tau,
            domain: "[0, inf)",
        });
    }
    if let Some(index) = inst.items().iter().position(|d| d.atom_mass(tau) > 0.0) {
        return Err(Error::AtomAtThreshold { index: index + 1, tau });
    }
    let mut reach = 1.0;
    let mut surplus = 0.0;
    for d in inst.items() {
        surplus += reach * d.overshoot(tau);
        reach *= d.cdf(tau);
    }
    let threshold_part = tau * inst.exceed_prob(tau);
    let grid = inst.default_grid();
    Ok(EvalResult {
        expected_payoff: threshold_part + surplus,
        threshold_part,
        surplus_part: surplus,
        tail: tail_points(&grid, &deterministic_tail(inst, tau, &grid)),
        payoff_pmf: None,
        stderr: None,
        trials: Trials::Exact,
        seed: None,
    })
}

fn tail_points(grid: &[f64], probs: &[f64]) -> Vec<TailPoint> {
    grid.iter()
        .zip(probs)
        .map(|(&z, &prob)| TailPoint { z, prob, stderr: None })
        .collect()
}

/// Reach polynomials: entry `i` is `prod_{j<i} (F_j(tau-) + r P(X_j = tau))` in the rank `r`.
fn reach_polys(inst: &Instance, tau: f64) -> Vec<Poly> {
    let mut out = Vec::with_capacity(inst.len() + 1);
    let mut p = Poly::one();
    out.push(p.clone());
    for d in inst.items() {
        p.mul_linear(d.cdf_left(tau), d.atom_mass(tau));
        out.push(p.clone());
    }
    out
}

/// Tie-aware closed form for a fixed threshold, valid for every distribution kind.
///
/// With the threshold's rank `r`, item `j` is passed over with probability
/// `F_j(tau-) + r P(X_j = tau)`; the products are integrated over `r` exactly.
pub fn evaluate_deterministic(inst: &Instance, tau: f64) -> Result<EvalResult> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain {
            what: "threshold",
            value: tau,
            domain: "[0, inf)",
        });
    }
    let polys = reach_polys(inst, tau);
    let mut expected = 0.0;
    let mut threshold_part = 0.0;
    let mut surplus_part = 0.0;
    for (i, d) in inst.items().iter().enumerate() {
        let reach = polys[i].integral();
        let reach_then_tie = polys[i].integral_times_complement();
        let above = 1.0 - d.cdf(tau);
        let tie = d.atom_mass(tau);
        let over = d.overshoot(tau);
        expected += reach * (over + tau * above) + reach_then_tie * tie * tau;
        threshold_part += tau * (reach * above + reach_then_tie * tie);
        surplus_part += reach * over;
    }
    let grid = inst.default_grid();
    Ok(EvalResult {
        expected_payoff: expected,
        threshold_part,
        surplus_part,
        tail: tail_points(&grid, &deterministic_tail(inst, tau, &grid)),
        payoff_pmf: None,
        stderr: None,
        trials: Trials::Exact,
        seed: None,
    })
}

/// `P(ALG > z)` for a fixed threshold, tie-aware, at each `z` of `grid`.
pub(crate) fn deterministic_tail(inst: &Instance, tau: f64, grid: &[f64]) -> Vec<f64> {
    let polys = reach_polys(inst, tau);
    let never = polys[inst.len()].integral();
    grid.iter()
        .map(|&z| {
            if z < tau {
                // Every accepted value is at least tau > z.
                1.0 - never
            } else {
                inst.items()
                    .iter()
                    .enumerate()
                    .map(|(i, d)| polys[i].integral() * (1.0 - d.cdf(z)))
                    .sum()
            }
        })
        .collect()
}

/// Averages the fixed-threshold closed form over a finite threshold law.
pub(crate) fn exact_against_law(inst: &Instance, law: &ThresholdLaw) -> Result<EvalResult> {
    let atoms = match law {
        ThresholdLaw::Atoms(a) => a,
        _ => return Err(Error::Unsupported("threshold law is not a set of fixed levels".into())),
    };
    let grid = inst.default_grid();
    let mut expected = 0.0;
    let mut threshold_part = 0.0;
    let mut surplus_part = 0.0;
    let mut tail = vec![0.0; grid.len()];
    for &(t, w) in atoms {
        let r = evaluate_deterministic(inst, t)?;
        expected += w * r.expected_payoff;
        threshold_part += w * r.threshold_part;
        surplus_part += w * r.surplus_part;
        for (acc, p) in tail.iter_mut().zip(&r.tail) {
            *acc += w * p.prob;
        }
    }
    Ok(EvalResult {
        expected_payoff: expected,
        threshold_part,
        surplus_part,
        tail: tail_points(&grid, &tail),
        payoff_pmf: None,
        stderr: None,
        trials: Trials::Exact,
        seed: None,
    })
}
