//! Monte Carlo against the exact engine and against quadrature.

use prophet_core::certificates::{surplus_eq4, check_tail_dominance, CertifyConfig};
use prophet_core::engines::{evaluate_deterministic, exact_evaluate, monte_carlo, EvalResult, RuleSpec, ThresholdLaw};
use prophet_core::{Distribution, Instance};

const TRIALS: u64 = 400_000;

fn within(mc: &EvalResult, want: f64, sigmas: f64) -> bool {
    let se = mc.stderr.unwrap().expected_payoff;
    (mc.expected_payoff - want).abs() <= sigmas * se + 1e-12
}

fn tie_heavy() -> Instance {
    Instance::new(vec![
        Distribution::discrete(vec![0.0, 1.0, 2.0], vec![0.3, 0.4, 0.3]).unwrap(),
        Distribution::discrete(vec![1.0, 2.0], vec![0.6, 0.4]).unwrap(),
        Distribution::discrete(vec![1.0, 3.0], vec![0.8, 0.2]).unwrap(),
    ])
    .unwrap()
}

#[test]
fn monte_carlo_matches_enumeration_with_ties() {
    let inst = tie_heavy();
    let rules = [
        RuleSpec::SampleMax,
        RuleSpec::InverseCdfMax,
        RuleSpec::Deterministic { tau: 1.0 },
        RuleSpec::Mixture { alpha: 0.5, base_tau: 2.0 },
        RuleSpec::Empirical {
            samples: vec![1.0, 2.0, 2.0],
        },
    ];
    for (k, rule) in rules.iter().enumerate() {
        let exact = exact_evaluate(&inst, rule).unwrap();
        let mc = monte_carlo(&inst, rule, TRIALS, 100 + k as u64).unwrap();
        assert!(within(&mc, exact.expected_payoff, 4.0), "{rule:?}: {} vs {}", mc.expected_payoff, exact.expected_payoff);
        let se = mc.stderr.unwrap().surplus_part;
        assert!((mc.surplus_part - exact.surplus_part).abs() <= 4.0 * se, "{rule:?}");
        for t in &mc.tail {
            let want = exact.exact_tail(t.z).unwrap();
            assert!((t.prob - want).abs() <= 4.0 * t.stderr.unwrap() + 1e-12, "{rule:?} z={}", t.z);
        }
    }
}

#[test]
fn uniform_sample_max_value() {
    // Threshold part int t(1-t) dt = 1/6 and surplus part 1/6.
    let unit = Instance::new(vec![Distribution::uniform(0.0, 1.0).unwrap()]).unwrap();
    let mc = monte_carlo(&unit, &RuleSpec::SampleMax, TRIALS, 9).unwrap();
    assert!(within(&mc, 1.0 / 3.0, 4.0), "{}", mc.expected_payoff);
    let mc = monte_carlo(&unit, &RuleSpec::InverseCdfMax, TRIALS, 10).unwrap();
    assert!(within(&mc, 1.0 / 3.0, 4.0), "{}", mc.expected_payoff);
}

#[test]
fn closed_form_matches_simulation_on_continuous_instances() {
    let inst = Instance::new(vec![
        Distribution::exponential(1.0).unwrap(),
        Distribution::uniform(0.0, 2.0).unwrap(),
        Distribution::point_mass(0.7).unwrap(),
    ])
    .unwrap();
    for (k, tau) in [0.3, 0.7, 1.2].into_iter().enumerate() {
        let closed = evaluate_deterministic(&inst, tau).unwrap();
        let mc = monte_carlo(&inst, &RuleSpec::Deterministic { tau }, TRIALS, 20 + k as u64).unwrap();
        assert!(within(&mc, closed.expected_payoff, 4.0), "tau={tau}: {} vs {}", mc.expected_payoff, closed.expected_payoff);
    }
}

#[test]
fn surplus_formula_matches_simulation_on_mixed_instance() {
    let inst = Instance::new(vec![
        Distribution::point_mass(0.5).unwrap(),
        Distribution::uniform(0.0, 1.0).unwrap(),
    ])
    .unwrap();
    for (k, rule) in [RuleSpec::SampleMax, RuleSpec::InverseCdfMax, RuleSpec::Mixture { alpha: 0.5, base_tau: 0.5 }]
        .iter()
        .enumerate()
    {
        let law = rule.threshold_law(&inst).unwrap();
        let formula = surplus_eq4(&inst, &law).unwrap();
        let mc = monte_carlo(&inst, rule, TRIALS, 30 + k as u64).unwrap();
        let se = mc.stderr.unwrap().surplus_part;
        assert!((mc.surplus_part - formula.value).abs() <= 4.0 * se, "{rule:?}: {} vs {}", mc.surplus_part, formula.value);
    }
}

#[test]
fn mixed_instance_sample_max_and_inverse_cdf_agree() {
    let inst = Instance::new(vec![
        Distribution::point_mass(0.5).unwrap(),
        Distribution::uniform(0.0, 1.0).unwrap(),
    ])
    .unwrap();
    let a = monte_carlo(&inst, &RuleSpec::SampleMax, TRIALS, 41).unwrap();
    let b = monte_carlo(&inst, &RuleSpec::InverseCdfMax, TRIALS, 42).unwrap();
    let sa = a.stderr.unwrap().expected_payoff;
    let sb = b.stderr.unwrap().expected_payoff;
    assert!((a.expected_payoff - b.expected_payoff).abs() <= 4.0 * (sa * sa + sb * sb).sqrt());
}

#[test]
fn uniform_tail_dominance_by_simulation() {
    let unit = Instance::new(vec![Distribution::uniform(0.0, 1.0).unwrap()]).unwrap();
    let grid: Vec<f64> = (0..50).map(|k| k as f64 / 50.0).collect();
    let cfg = CertifyConfig {
        trials: 1_000_000,
        ..CertifyConfig::default()
    };
    let r = check_tail_dominance(&unit, &RuleSpec::SampleMax, &grid, &cfg).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn mixture_law_on_continuous_instance_has_fixed_atom() {
    let unit = Instance::new(vec![Distribution::uniform(0.0, 1.0).unwrap()]).unwrap();
    let law = ThresholdLaw::mixture(&unit, 0.25, 0.6);
    assert!(law.finite_atoms().is_none());
    assert!((law.cdf(0.6) - law.cdf_left(0.6) - 0.75).abs() < 1e-15);
}
