//! Report documents. Field order is fixed by the struct definitions and floats
//! are written as shortest round-trip decimals, so identical runs produce
//! identical bytes.

use prophet_core::certificates::CertificateReport;
use prophet_core::engines::{EvalResult, RuleSpec};
use prophet_core::thresholds::ThresholdSet;
use prophet_core::Instance;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "prophet";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    /// The arguments after the program name, as given.
    pub command: Vec<String>,
    pub instance_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub results: Vec<Entry>,
}

impl Report {
    pub fn new(command: &[String], inst: &Instance, seed: Option<u64>) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: command.to_vec(),
            instance_digest: digest(inst),
            seed,
            results: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// SHA-256 of the canonical JSON form of the instance.
pub fn digest(inst: &Instance) -> String {
    let canonical = serde_json::to_string(inst).expect("instances serialize");
    let hash = Sha256::digest(canonical.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Entry {
    Analysis(Analysis),
    Evaluation(Evaluation),
    Agreement(Agreement),
    Certificate(CertificateReport),
    Sweep(SweepSummary),
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub tau: f64,
    pub p_tau: f64,
    #[serde(rename = "R_tau")]
    pub r_tau: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub items: usize,
    pub expected_max: f64,
    pub thresholds: ThresholdSet,
    pub grid: Vec<GridRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub rule: RuleSpec,
    pub engine: &'static str,
    pub result: EvalResult,
}

/// Whether the simulated mean is within `sigmas` standard errors of the exact value.
#[derive(Debug, Clone, Serialize)]
pub struct Agreement {
    pub exact: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub sigmas: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    pub expected_payoff: f64,
    pub threshold_part: f64,
    pub surplus_part: f64,
    pub p_tau: f64,
    #[serde(rename = "R_tau")]
    pub r_tau: f64,
    pub ratio: f64,
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "tau",
    "expected_payoff",
    "threshold_part",
    "surplus_part",
    "p_tau",
    "R_tau",
    "ratio",
];

#[derive(Debug, Clone, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    pub expected_max: f64,
    pub columns: Vec<&'static str>,
    /// First grid point with the largest expected payoff.
    pub argmax_tau: f64,
    pub max_expected_payoff: f64,
    pub max_ratio: f64,
    pub certified_interval: Interval,
    /// The certified interval intersected with the swept range.
    pub certified_subinterval: Option<Interval>,
    pub argmax_is_certified: bool,
    /// Smallest ratio over grid points inside the certified interval.
    pub min_certified_ratio: Option<f64>,
}

/// Shortest round-trip decimal, matching the JSON reports.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else {
        format!("{x}")
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let fields = [
            r.tau,
            r.expected_payoff,
            r.threshold_part,
            r.surplus_part,
            r.p_tau,
            r.r_tau,
            r.ratio,
        ];
        out.push_str(&fields.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from("tau,p_tau,R_tau\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", fmt_float(r.tau), fmt_float(r.p_tau), fmt_float(r.r_tau)));
    }
    out
}

pub fn certificates_csv(reports: &[&CertificateReport]) -> String {
    let mut out = String::from("name,lhs,rhs,margin,tolerance,passed\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.name,
            fmt_float(r.lhs),
            fmt_float(r.rhs),
            fmt_float(r.margin),
            fmt_float(r.tolerance),
            r.passed
        ));
    }
    out
}

pub fn tail_csv(result: &EvalResult) -> String {
    let mut out = String::from("z,prob,stderr\n");
    for t in &result.tail {
        let se = t.stderr.map(fmt_float).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", fmt_float(t.z), fmt_float(t.prob), se));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_shortest_round_trip() {
        assert_eq!(fmt_float(0.1), "0.1");
        assert_eq!(fmt_float(1.0 / 3.0), "0.3333333333333333");
        assert_eq!(fmt_float(2.0), "2.0");
        assert_eq!(fmt_float(1e-20), "1e-20");
    }

    #[test]
    fn digest_ignores_formatting() {
        let a: Instance = serde_json::from_str(r#"{"items":[{"kind":"point_mass","value":1.0}]}"#).unwrap();
        let b: Instance = serde_json::from_str("{ \"items\" : [ {\"value\": 1, \"kind\": \"point_mass\"} ] }").unwrap();
        assert_eq!(digest(&a), digest(&b));
        assert!(digest(&a).starts_with("sha256:"));
    }
}
