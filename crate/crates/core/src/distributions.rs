//! Closed-form models of a single nonnegative value.
//!
//! Four families are supported: point masses, finite discrete laws, uniform
//! laws on an interval, and exponential laws. Each one has an exact CDF,
//! generalized inverse, mean and partial expectation `E[(X - t)^+]`, so the
//! rest of the crate never needs generic quadrature for a single item.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest residual `|sum(probs) - 1|` accepted (and normalized away) at construction.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// A finite law on strictly increasing nonnegative support points.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrete {
    support: Vec<f64>,
    probs: Vec<f64>,
    // cumulative[k] = P(X <= support[k]); the last entry is exactly 1.
    cumulative: Vec<f64>,
}

impl Discrete {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of support points `<= x`.
    fn rank(&self, x: f64) -> usize {
        self.support.partition_point(|&s| s <= x)
    }

    /// Number of support points `< x`.
    fn rank_strict(&self, x: f64) -> usize {
        self.support.partition_point(|&s| s < x)
    }

    fn cumulative_before(&self, count: usize) -> f64 {
        if count == 0 {
            0.0
        } else {
            self.cumulative[count - 1]
        }
    }
}

/// The family and parameters of a [`Distribution`].
#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    PointMass { value: f64 },
    Discrete(Discrete),
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
}

/// One independent nonnegative value `X_i`.
///
/// Values are validated at construction and immutable afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRecord", into = "DistributionRecord")]
pub struct Distribution {
    kind: Kind,
}

fn check_nonneg(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "{what} must be finite and nonnegative, got {value}"
        )))
    }
}

impl Distribution {
    pub fn point_mass(value: f64) -> Result<Self> {
        check_nonneg("point mass value", value)?;
        Ok(Self {
            kind: Kind::PointMass { value },
        })
    }

    /// A finite law. Support must be strictly increasing; probabilities must lie in
    /// `(0, 1]` and sum to one within [`PROB_SUM_TOLERANCE`].
    pub fn discrete(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("discrete support is empty".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "support has {} points but probs has {}",
                support.len(),
                probs.len()
            )));
        }
        for &s in &support {
            check_nonneg("support point", s)?;
        }
        if let Some(w) = support.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution(format!(
                "support must be strictly increasing (found {} then {})",
                w[0], w[1]
            )));
        }
        for &p in &probs {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidDistribution(format!(
                    "probabilities must lie in (0, 1], got {p}"
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc.min(1.0));
        }
        *cumulative.last_mut().expect("nonempty") = 1.0;
        Ok(Self {
            kind: Kind::Discrete(Discrete {
                support,
                probs,
                cumulative,
            }),
        })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        check_nonneg("uniform lower bound", low)?;
        if !(high.is_finite() && high > low) {
            return Err(Error::InvalidDistribution(format!(
                "uniform upper bound must be finite and exceed {low}, got {high}"
            )));
        }
        Ok(Self {
            kind: Kind::Uniform { low, high },
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "exponential rate must be finite and positive, got {rate}"
            )));
        }
        Ok(Self {
            kind: Kind::Exponential { rate },
        })
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::PointMass { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Discrete(d) => d.cumulative_before(d.rank(x)),
            Kind::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Kind::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
        }
    }

    /// `P(X < x)`, the left limit of the CDF. Evaluated exactly at atoms.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::PointMass { value } => {
                if x > *value {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Discrete(d) => d.cumulative_before(d.rank_strict(x)),
            Kind::Uniform { .. } | Kind::Exponential { .. } => self.cdf(x),
        }
    }

    /// `P(X = x)`.
    pub fn atom_mass(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::PointMass { value } => {
                if x == *value {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Discrete(d) => {
                let k = d.rank_strict(x);
                if k < d.support.len() && d.support[k] == x {
                    d.probs[k]
                } else {
                    0.0
                }
            }
            Kind::Uniform { .. } | Kind::Exponential { .. } => 0.0,
        }
    }

    /// Generalized inverse `inf{x : cdf(x) >= u}`. At `u = 0` this is the infimum of the
    /// support; an unbounded law returns `+inf` at `u = 1`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain {
                what: "quantile level",
                value: u,
                domain: "[0, 1]",
            });
        }
        Ok(match &self.kind {
            Kind::PointMass { value } => *value,
            Kind::Discrete(d) => {
                let k = d.cumulative.partition_point(|&c| c < u);
                d.support[k.min(d.support.len() - 1)]
            }
            Kind::Uniform { low, high } => low + u * (high - low),
            Kind::Exponential { rate } => -(-u).ln_1p() / rate,
        })
    }

    /// `E[(X - t)^+]` for `t >= 0`.
    pub fn partial_expectation(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain {
                what: "partial expectation level",
                value: t,
                domain: "[0, inf)",
            });
        }
        Ok(self.overshoot(t))
    }

    /// `E[(X - t)^+]` for any real `t`.
    pub(crate) fn overshoot(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::PointMass { value } => (value - t).max(0.0),
            Kind::Discrete(d) => {
                let start = d.rank(t);
                d.support[start..]
                    .iter()
                    .zip(&d.probs[start..])
                    .map(|(s, p)| p * (s - t))
                    .sum()
            }
            Kind::Uniform { low, high } => {
                if t <= *low {
                    0.5 * (low + high) - t
                } else if t >= *high {
                    0.0
                } else {
                    (high - t) * (high - t) / (2.0 * (high - low))
                }
            }
            Kind::Exponential { rate } => {
                if t <= 0.0 {
                    1.0 / rate - t
                } else {
                    (-rate * t).exp() / rate
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.overshoot(0.0)
    }

    /// One draw, using a single uniform from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        match &self.kind {
            Kind::PointMass { value } => *value,
            Kind::Discrete(d) => {
                let k = d.cumulative.partition_point(|&c| c <= u);
                d.support[k.min(d.support.len() - 1)]
            }
            Kind::Uniform { low, high } => low + u * (high - low),
            Kind::Exponential { rate } => -(-u).ln_1p() / rate,
        }
    }

    pub fn is_finite_support(&self) -> bool {
        matches!(self.kind, Kind::PointMass { .. } | Kind::Discrete(_))
    }

    /// `(value, probability)` pairs for finite-support laws.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            Kind::PointMass { value } => Some(vec![(*value, 1.0)]),
            Kind::Discrete(d) => Some(d.support.iter().copied().zip(d.probs.iter().copied()).collect()),
            _ => None,
        }
    }

    /// Points where the CDF jumps or loses smoothness.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::PointMass { value } => vec![*value],
            Kind::Discrete(d) => d.support.clone(),
            Kind::Uniform { low, high } => vec![*low, *high],
            Kind::Exponential { .. } => vec![0.0],
        }
    }

    pub fn support_min(&self) -> f64 {
        match &self.kind {
            Kind::PointMass { value } => *value,
            Kind::Discrete(d) => d.support[0],
            Kind::Uniform { low, .. } => *low,
            Kind::Exponential { .. } => 0.0,
        }
    }

    /// Upper end of the support, `None` when unbounded.
    pub fn support_max(&self) -> Option<f64> {
        match &self.kind {
            Kind::PointMass { value } => Some(*value),
            Kind::Discrete(d) => d.support.last().copied(),
            Kind::Uniform { high, .. } => Some(*high),
            Kind::Exponential { .. } => None,
        }
    }

    /// A level `T` with `1 - cdf(T) <= eps` and `E[(X - T)^+] <= eps`.
    pub fn tail_cutoff(&self, eps: f64) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => ((1.0f64).max(1.0 / rate) / eps).ln().max(0.0) / rate,
            _ => self.support_max().expect("bounded support"),
        }
    }

    /// The law of `c * X` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain {
                what: "scale factor",
                value: c,
                domain: "(0, inf)",
            });
        }
        match &self.kind {
            Kind::PointMass { value } => Self::point_mass(c * value),
            Kind::Discrete(d) => Self::discrete(d.support.iter().map(|s| c * s).collect(), d.probs.clone()),
            Kind::Uniform { low, high } => Self::uniform(c * low, c * high),
            Kind::Exponential { rate } => Self::exponential(rate / c),
        }
    }
}

/// File representation of a [`Distribution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionRecord {
    PointMass { value: f64 },
    Discrete { support: Vec<f64>, probs: Vec<f64> },
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
}

impl TryFrom<DistributionRecord> for Distribution {
    type Error = Error;

    fn try_from(record: DistributionRecord) -> Result<Self> {
        match record {
            DistributionRecord::PointMass { value } => Self::point_mass(value),
            DistributionRecord::Discrete { support, probs } => Self::discrete(support, probs),
            DistributionRecord::Uniform { low, high } => Self::uniform(low, high),
            DistributionRecord::Exponential { rate } => Self::exponential(rate),
        }
    }
}

impl From<Distribution> for DistributionRecord {
    fn from(d: Distribution) -> Self {
        match d.kind {
            Kind::PointMass { value } => Self::PointMass { value },
            Kind::Discrete(d) => Self::Discrete {
                support: d.support,
                probs: d.probs,
            },
            Kind::Uniform { low, high } => Self::Uniform { low, high },
            Kind::Exponential { rate } => Self::Exponential { rate },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coin() -> Distribution {
        Distribution::discrete(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap()
    }

    fn unit() -> Distribution {
        Distribution::uniform(0.0, 1.0).unwrap()
    }

    fn expo() -> Distribution {
        Distribution::exponential(1.0).unwrap()
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(unit().cdf(0.3), 0.3);
        assert_eq!(coin().cdf(0.0), 0.5);
        assert_eq!(coin().cdf_left(0.0), 0.0);
        assert_eq!(expo().cdf(0.0), 0.0);
        assert_eq!(unit().cdf(-1.0), 0.0);
        assert_eq!(coin().cdf(-0.5), 0.0);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(unit().quantile(0.25).unwrap(), 0.25);
        assert_eq!(coin().quantile(0.5).unwrap(), 0.0);
        assert_eq!(coin().quantile(0.0).unwrap(), 0.0);
        assert_eq!(coin().quantile(0.51).unwrap(), 2.0);
        let q = expo().quantile(1.0 - (-2.0f64).exp()).unwrap();
        assert!((q - 2.0).abs() < 1e-12, "{q}");
        assert!(matches!(unit().quantile(1.5), Err(Error::Domain { .. })));
        assert!(matches!(unit().quantile(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn partial_expectation_examples() {
        assert_eq!(expo().partial_expectation(0.0).unwrap(), 1.0);
        assert!((unit().partial_expectation(0.25).unwrap() - 0.28125).abs() < 1e-15);
        let pm = Distribution::point_mass(1.0).unwrap();
        assert!((pm.partial_expectation(0.4).unwrap() - 0.6).abs() < 1e-15);
        assert!(matches!(pm.partial_expectation(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn mean_examples() {
        assert_eq!(Distribution::point_mass(3.5).unwrap().mean(), 3.5);
        assert_eq!(coin().mean(), 1.0);
        assert_eq!(unit().mean(), 0.5);
        assert_eq!(expo().mean(), 1.0);
        let shifted = Distribution::uniform(2.0, 4.0).unwrap();
        assert_eq!(shifted.mean(), 3.0);
        assert_eq!(shifted.partial_expectation(1.0).unwrap(), 2.0);
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(Distribution::point_mass(-1.0).is_err());
        assert!(Distribution::point_mass(f64::NAN).is_err());
        assert!(Distribution::discrete(vec![], vec![]).is_err());
        assert!(Distribution::discrete(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(Distribution::discrete(vec![2.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(Distribution::discrete(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(Distribution::discrete(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(Distribution::discrete(vec![0.0], vec![0.5, 0.5]).is_err());
        assert!(Distribution::uniform(1.0, 1.0).is_err());
        assert!(Distribution::uniform(-1.0, 1.0).is_err());
        assert!(Distribution::exponential(0.0).is_err());
        assert!(Distribution::exponential(f64::INFINITY).is_err());
    }

    #[test]
    fn small_probability_drift_is_normalized() {
        let d = Distribution::discrete(vec![0.0, 1.0, 2.0], vec![0.3, 0.3, 0.4 + 5e-13]).unwrap();
        assert_eq!(d.cdf(2.0), 1.0);
        let total: f64 = match d.kind() {
            Kind::Discrete(d) => d.probs().iter().sum(),
            _ => unreachable!(),
        };
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sample_point_mass_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = Distribution::point_mass(3.0).unwrap();
        assert!((0..100).all(|_| d.sample(&mut rng) == 3.0));
    }

    #[test]
    fn sample_coin_mean_within_clt_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = coin();
        let n = 1_000_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.003, "{mean}");
    }

    #[test]
    fn sample_uniform_cdf_within_clt_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = unit();
        let n = 1_000_000;
        let below = (0..n).filter(|_| d.sample(&mut rng) <= 0.5).count() as f64 / n as f64;
        assert!((below - 0.5).abs() < 0.0015, "{below}");
    }

    fn ks_statistic(d: &Distribution, seed: u64, n: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let mut worst: f64 = 0.0;
        let mut i = 0;
        while i < xs.len() {
            let x = xs[i];
            let mut j = i;
            while j < xs.len() && xs[j] == x {
                j += 1;
            }
            let below = i as f64 / n as f64;
            let upto = j as f64 / n as f64;
            worst = worst.max((upto - d.cdf(x)).abs()).max((below - d.cdf_left(x)).abs());
            i = j;
        }
        worst
    }

    #[test]
    fn kolmogorov_smirnov_below_one_percent() {
        for d in [unit(), expo(), coin(), Distribution::uniform(1.0, 3.0).unwrap()] {
            let ks = ks_statistic(&d, 99, 100_000);
            assert!(ks < 0.01, "{d:?}: {ks}");
        }
    }

    fn family() -> Vec<Distribution> {
        vec![
            unit(),
            expo(),
            coin(),
            Distribution::exponential(2.5).unwrap(),
            Distribution::uniform(0.5, 3.0).unwrap(),
            Distribution::point_mass(1.5).unwrap(),
            Distribution::discrete(vec![0.0, 0.7, 1.9, 4.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        ]
    }

    #[test]
    fn quantile_cdf_consistency() {
        for d in family() {
            for k in 0..=400 {
                let x = -0.5 + k as f64 * 0.0125;
                let c = d.cdf(x);
                let back = d.cdf(d.quantile(c).unwrap());
                assert!(back >= c - 1e-12, "{d:?} at {x}: {back} < {c}");
            }
        }
    }

    // Composite Simpson on each smooth piece of 1 - F, truncated where the tail is negligible.
    fn tail_integral_oracle(d: &Distribution, t: f64) -> f64 {
        let top = d.tail_cutoff(1e-14);
        let mut cuts: Vec<f64> = d.breakpoints().into_iter().filter(|&b| b > t && b < top).collect();
        cuts.insert(0, t);
        cuts.push(top);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let m = 20_000;
            let h = (b - a) / m as f64;
            // Midpoint evaluation keeps jump points out of the sample set.
            let f = |x: f64| 1.0 - d.cdf(x);
            let mut s = 0.0;
            for k in 0..m {
                let x0 = a + k as f64 * h;
                let left = f(x0 + 1e-3 * h);
                let mid = f(x0 + 0.5 * h);
                let right = f(x0 + h - 1e-3 * h);
                s += (left + 4.0 * mid + right) / 6.0 * h;
            }
            total += s;
        }
        total
    }

    #[test]
    fn partial_expectation_matches_tail_integral() {
        for d in family() {
            for k in 0..20 {
                let t = k as f64 * 0.23;
                let closed = d.partial_expectation(t).unwrap();
                let numeric = tail_integral_oracle(&d, t);
                assert!((closed - numeric).abs() < 1e-8, "{d:?} at {t}: {closed} vs {numeric}");
            }
        }
    }

    #[test]
    fn partial_expectation_monotone_and_convex() {
        for d in family() {
            let h = 0.05;
            let vals: Vec<f64> = (0..120).map(|k| d.partial_expectation(k as f64 * h).unwrap()).collect();
            for w in vals.windows(3) {
                assert!(w[1] <= w[0] + 1e-15);
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
            }
            assert_eq!(d.partial_expectation(0.0).unwrap(), d.mean());
        }
    }

    #[test]
    fn record_round_trip_and_unknown_kind() {
        let json = r#"{"kind":"discrete","support":[0,2],"probs":[0.5,0.5]}"#;
        let d: Distribution = serde_json::from_str(json).unwrap();
        assert_eq!(d, coin());
        let back = serde_json::to_string(&d).unwrap();
        assert_eq!(back, r#"{"kind":"discrete","support":[0.0,2.0],"probs":[0.5,0.5]}"#);
        assert!(serde_json::from_str::<Distribution>(r#"{"kind":"pareto","alpha":2}"#).is_err());
        assert!(serde_json::from_str::<Distribution>(r#"{"kind":"uniform","low":1,"high":0}"#).is_err());
    }
}
