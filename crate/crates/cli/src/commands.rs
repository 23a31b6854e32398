use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use prophet_core::certificates::{self as cert, CertificateReport, CertifyConfig};
use prophet_core::engines::{self, exact_evaluate, evaluate_deterministic, MonteCarloConfig, RuleSpec};
use prophet_core::thresholds;
use prophet_core::Instance;
use serde::de::DeserializeOwned;

use crate::args::{AnalyzeArgs, CertifyArgs, Cli, Command, Format, SimulateArgs, SweepArgs};
use crate::error::{CliError, CliResult};
use crate::report::{
    self, Agreement, Analysis, Entry, Evaluation, GridRow, Interval, Report, SweepRow, SweepSummary, SWEEP_COLUMNS,
};

/// Standard errors allowed between the simulated and exact means.
pub const AGREEMENT_SIGMAS: f64 = 4.0;

/// What a run produced: text for stdout, files to write, and the exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<(PathBuf, String)>,
    pub exit_code: i32,
}

impl Outcome {
    fn emit(text: String, out: &Option<PathBuf>, exit_code: i32) -> Self {
        match out {
            Some(path) => Outcome {
                stdout: String::new(),
                files: vec![(path.clone(), text)],
                exit_code,
            },
            None => Outcome {
                stdout: text,
                files: Vec::new(),
                exit_code,
            },
        }
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    load(path)
}

pub fn load_rule(path: &Path) -> CliResult<RuleSpec> {
    let rule: RuleSpec = load(path)?;
    rule.validate()?;
    Ok(rule)
}

/// Runs `cli`; `command` is the argument list echoed into reports.
pub fn run(cli: &Cli, command: &[String]) -> CliResult<Outcome> {
    match &cli.command {
        Command::Analyze(a) => analyze(a, command),
        Command::Simulate(a) => simulate(a, command),
        Command::Certify(a) => certify(a, command),
        Command::Sweep(a) => sweep(a, command),
    }
}

fn analyze(args: &AnalyzeArgs, command: &[String]) -> CliResult<Outcome> {
    let inst = load_instance(&args.common.instance)?;
    let set = thresholds::certified_interval(&inst)?;
    let grid: Vec<GridRow> = inst
        .default_grid()
        .into_iter()
        .map(|tau| GridRow {
            tau,
            p_tau: inst.exceed_prob(tau),
            r_tau: inst.aggregate_surplus(tau),
        })
        .collect();
    if args.common.format == Format::Csv {
        return Ok(Outcome::emit(report::grid_csv(&grid), &args.common.out, 0));
    }
    let mut rep = Report::new(command, &inst, None);
    rep.results.push(Entry::Analysis(Analysis {
        items: inst.len(),
        expected_max: inst.expected_max()?,
        thresholds: set,
        grid,
    }));
    Ok(Outcome::emit(rep.to_json(), &args.common.out, 0))
}

fn simulate(args: &SimulateArgs, command: &[String]) -> CliResult<Outcome> {
    let inst = load_instance(&args.common.instance)?;
    let rule = load_rule(&args.rule)?;
    let zgrid = args.zgrid.clone().unwrap_or_else(|| inst.default_grid());
    let config = MonteCarloConfig {
        trials: args.sampling.trials,
        seed: args.sampling.seed,
        threads: args.sampling.threads,
        zgrid: zgrid.clone(),
    };
    let mc = engines::monte_carlo_with(&inst, &rule, &config)?;
    if args.common.format == Format::Csv {
        return Ok(Outcome::emit(report::tail_csv(&mc), &args.common.out, 0));
    }
    let exact = engines::exact_if_supported(&inst, &rule)?.map(|r| r.with_tail_grid(&zgrid));
    let mut rep = Report::new(command, &inst, Some(args.sampling.seed));
    let agreement = exact.as_ref().map(|e| {
        let se = mc.stderr.map(|s| s.expected_payoff).unwrap_or(0.0);
        Agreement {
            exact: e.expected_payoff,
            estimate: mc.expected_payoff,
            stderr: se,
            sigmas: AGREEMENT_SIGMAS,
            agree: (mc.expected_payoff - e.expected_payoff).abs() <= AGREEMENT_SIGMAS * se + 1e-12,
        }
    });
    rep.results.push(Entry::Evaluation(Evaluation {
        rule: rule.clone(),
        engine: "monte_carlo",
        result: mc,
    }));
    if let Some(e) = exact {
        rep.results.push(Entry::Evaluation(Evaluation {
            rule,
            engine: "exact",
            result: e,
        }));
    }
    if let Some(a) = agreement {
        rep.results.push(Entry::Agreement(a));
    }
    Ok(Outcome::emit(rep.to_json(), &args.common.out, 0))
}

/// Names accepted by `--suite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Decomposition,
    DetCertificate,
    FactoredCertificate,
    FixedPointSandwich,
    IntervalGuarantee,
    SurplusEq4,
    RandomizedMedianBound,
    Condition6,
    Condition7,
    TailDominance,
    Exchangeability,
    HalfRatio,
    Telescope,
}

impl Check {
    pub const ALL: [Check; 13] = [
        Check::Decomposition,
        Check::DetCertificate,
        Check::FactoredCertificate,
        Check::FixedPointSandwich,
        Check::IntervalGuarantee,
        Check::SurplusEq4,
        Check::RandomizedMedianBound,
        Check::Condition6,
        Check::Condition7,
        Check::TailDominance,
        Check::Exchangeability,
        Check::HalfRatio,
        Check::Telescope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Decomposition => "decomposition",
            Check::DetCertificate => "det-certificate",
            Check::FactoredCertificate => "factored-certificate",
            Check::FixedPointSandwich => "fixed-point-sandwich",
            Check::IntervalGuarantee => "interval-guarantee",
            Check::SurplusEq4 => "surplus-eq4",
            Check::RandomizedMedianBound => "randomized-median-bound",
            Check::Condition6 => "condition6",
            Check::Condition7 => "condition7",
            Check::TailDominance => "tail-dominance",
            Check::Exchangeability => "exchangeability",
            Check::HalfRatio => "half-ratio",
            Check::Telescope => "telescope",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Check::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
            CliError::Usage(format!("unknown check `{s}`; expected `all` or one of {}", names.join(", ")))
        })
    }
}

/// Parses `all` or a comma-separated list; a rule always adds `half-ratio`.
pub fn parse_suite(suite: &str, with_rule: bool) -> CliResult<Vec<Check>> {
    let mut checks = if suite.trim() == "all" {
        Check::ALL.to_vec()
    } else {
        suite
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<CliResult<Vec<Check>>>()?
    };
    if with_rule && !checks.contains(&Check::HalfRatio) {
        checks.push(Check::HalfRatio);
    }
    let mut seen = Vec::new();
    checks.retain(|c| {
        let fresh = !seen.contains(c);
        seen.push(*c);
        fresh
    });
    Ok(checks)
}

/// Runs `checks` on `inst`. Without a rule, fixed-threshold checks use the
/// named thresholds and randomized checks use `sample_max`.
pub fn run_checks(
    inst: &Instance,
    rule: Option<&RuleSpec>,
    checks: &[Check],
    points: usize,
    config: &CertifyConfig,
) -> CliResult<Vec<CertificateReport>> {
    let set = thresholds::certified_interval(inst)?;
    let mut named = vec![set.half_mean, set.median, set.balanced];
    named.dedup();
    let fixed: Vec<f64> = match rule {
        Some(RuleSpec::Deterministic { tau }) => vec![*tau],
        _ => named.clone(),
    };
    let randomized = rule.cloned().unwrap_or(RuleSpec::SampleMax);
    let law = match rule {
        Some(r) => r.threshold_law(inst)?,
        None => engines::ThresholdLaw::of_max(inst),
    };
    let grid = inst.default_grid();
    let mut out = Vec::new();
    for check in checks {
        match check {
            Check::Decomposition => out.push(cert::check_decomposition(inst, &randomized, config)?),
            Check::DetCertificate => {
                for &tau in &fixed {
                    out.push(cert::check_det_certificate(inst, tau)?);
                }
            }
            Check::FactoredCertificate => {
                for &tau in &fixed {
                    out.push(cert::check_factored_certificate(inst, tau)?.report);
                }
            }
            Check::FixedPointSandwich => out.push(cert::check_fixed_point_sandwich(inst)?),
            Check::IntervalGuarantee => out.push(cert::check_interval_guarantee(inst, points)?),
            Check::SurplusEq4 => out.push(cert::check_surplus_identity(inst, &randomized, config)?),
            Check::RandomizedMedianBound => out.push(cert::check_randomized_median_bound(inst)?),
            Check::Condition6 => out.push(cert::check_condition6(inst, &law, &grid)?),
            Check::Condition7 => out.push(cert::check_condition7(inst, &law)?),
            Check::TailDominance => {
                let drawn = if randomized.draws_max() { randomized.clone() } else { RuleSpec::SampleMax };
                out.push(cert::check_tail_dominance(inst, &drawn, &grid, config)?);
            }
            Check::Exchangeability => out.push(cert::check_exchangeability(inst)?),
            Check::HalfRatio => match rule {
                Some(r) => out.push(cert::half_ratio_report(inst, r, config)?),
                None => {
                    out.push(cert::half_ratio_report(inst, &RuleSpec::SampleMax, config)?);
                    for &tau in &named {
                        out.push(cert::half_ratio_report(inst, &RuleSpec::Deterministic { tau }, config)?);
                    }
                }
            },
            Check::Telescope => out.push(cert::check_telescope(inst, &grid)),
        }
    }
    Ok(out)
}

fn certify(args: &CertifyArgs, command: &[String]) -> CliResult<Outcome> {
    let inst = load_instance(&args.common.instance)?;
    let rule = args.rule.as_deref().map(load_rule).transpose()?;
    let checks = parse_suite(&args.suite, rule.is_some())?;
    let config = CertifyConfig {
        trials: args.sampling.trials,
        seed: args.sampling.seed,
        threads: args.sampling.threads,
    };
    let reports = run_checks(&inst, rule.as_ref(), &checks, args.points, &config)?;
    let exit_code = if reports.iter().all(|r| r.passed) { 0 } else { 1 };
    if args.common.format == Format::Csv {
        let refs: Vec<&CertificateReport> = reports.iter().collect();
        return Ok(Outcome::emit(report::certificates_csv(&refs), &args.common.out, exit_code));
    }
    let mut rep = Report::new(command, &inst, Some(args.sampling.seed));
    rep.results = reports.into_iter().map(Entry::Certificate).collect();
    Ok(Outcome::emit(rep.to_json(), &args.common.out, exit_code))
}

fn sweep(args: &SweepArgs, command: &[String]) -> CliResult<Outcome> {
    let inst = load_instance(&args.common.instance)?;
    let set = thresholds::certified_interval(&inst)?;
    let lo = args.tau_min.unwrap_or(set.certified_lo);
    let hi = args.tau_max.unwrap_or(set.certified_hi);
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(CliError::Usage(format!("need 0 <= tau-min <= tau-max, got [{lo}, {hi}]")));
    }
    if args.points < 2 {
        return Err(CliError::Usage(format!("need at least 2 points, got {}", args.points)));
    }
    let em = inst.expected_max()?;
    let mut rows = Vec::with_capacity(args.points);
    for tau in thresholds::linspace(lo, hi, args.points) {
        let r = if inst.is_finite() {
            exact_evaluate(&inst, &RuleSpec::Deterministic { tau })?
        } else {
            evaluate_deterministic(&inst, tau)?
        };
        rows.push(SweepRow {
            tau,
            expected_payoff: r.expected_payoff,
            threshold_part: r.threshold_part,
            surplus_part: r.surplus_part,
            p_tau: inst.exceed_prob(tau),
            r_tau: inst.aggregate_surplus(tau),
            ratio: r.expected_payoff / em,
        });
    }
    let csv = report::sweep_csv(&rows);
    if args.common.format == Format::Csv {
        return Ok(Outcome::emit(csv, &args.common.out, 0));
    }
    let best = rows
        .iter()
        .fold(&rows[0], |b, r| if r.expected_payoff > b.expected_payoff { r } else { b });
    let (sub_lo, sub_hi) = (lo.max(set.certified_lo), hi.min(set.certified_hi));
    let certified_subinterval = (sub_lo <= sub_hi).then_some(Interval { lo: sub_lo, hi: sub_hi });
    let min_certified_ratio = rows
        .iter()
        .filter(|r| set.contains(r.tau))
        .map(|r| r.ratio)
        .reduce(f64::min);
    let summary = SweepSummary {
        tau_min: lo,
        tau_max: hi,
        points: args.points,
        expected_max: em,
        columns: SWEEP_COLUMNS.to_vec(),
        argmax_tau: best.tau,
        max_expected_payoff: best.expected_payoff,
        max_ratio: best.ratio,
        certified_interval: Interval {
            lo: set.certified_lo,
            hi: set.certified_hi,
        },
        certified_subinterval,
        argmax_is_certified: set.contains(best.tau),
        min_certified_ratio,
    };
    let mut rep = Report::new(command, &inst, None);
    rep.results.push(Entry::Sweep(summary));
    let files = args.common.out.iter().map(|p| (p.clone(), csv.clone())).collect();
    Ok(Outcome {
        stdout: rep.to_json(),
        files,
        exit_code: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_parsing() {
        assert_eq!(parse_suite("all", false).unwrap().len(), 13);
        assert_eq!(parse_suite("condition7", true).unwrap(), vec![Check::Condition7, Check::HalfRatio]);
        assert_eq!(parse_suite("condition7, condition7", false).unwrap(), vec![Check::Condition7]);
        assert!(parse_suite("nope", false).is_err());
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
    }
}
