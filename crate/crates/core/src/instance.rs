//! An ordered list of independent items and the law of their maximum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute tolerance for quadrature-backed expectations of `M`.
pub const EXPECTATION_TOLERANCE: f64 = 1e-10;

/// Upper truncation is placed where the tail of `M` (probability and
/// integrated overshoot) is below this.
pub const TAIL_MASS: f64 = 1e-13;

const GRID_QUANTILES: usize = 50;

/// Items `X_1, ..., X_n` in scan order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRecord", into = "InstanceRecord")]
pub struct Instance {
    items: Vec<Distribution>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub items: Vec<Distribution>,
}

impl TryFrom<InstanceRecord> for Instance {
    type Error = Error;

    fn try_from(record: InstanceRecord) -> Result<Self> {
        Self::new(record.items)
    }
}

impl From<Instance> for InstanceRecord {
    fn from(inst: Instance) -> Self {
        Self { items: inst.items }
    }
}

fn sorted_unique(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

impl Instance {
    pub fn new(items: Vec<Distribution>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyInstance);
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[Distribution] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// True when every item has finite support.
    pub fn is_finite(&self) -> bool {
        self.items.iter().all(Distribution::is_finite_support)
    }

    /// `F(x) = prod_i F_i(x) = P(M <= x)`.
    pub fn max_cdf(&self, x: f64) -> f64 {
        self.items.iter().map(|d| d.cdf(x)).product()
    }

    /// `F(x-) = P(M < x)`.
    pub fn max_cdf_left(&self, x: f64) -> f64 {
        self.items.iter().map(|d| d.cdf_left(x)).product()
    }

    /// `p(tau) = P(M > tau)`.
    pub fn exceed_prob(&self, tau: f64) -> f64 {
        1.0 - self.max_cdf(tau)
    }

    /// Probability that a scan with threshold `tau` reaches item `i` (zero-based):
    /// `prod_{j<i} F_j(tau)`.
    pub fn reach(&self, i: usize, tau: f64) -> f64 {
        self.items[..i].iter().map(|d| d.cdf(tau)).product()
    }

    /// `R(tau) = sum_i E[(X_i - tau)^+]`.
    pub fn aggregate_surplus(&self, tau: f64) -> f64 {
        self.items.iter().map(|d| d.overshoot(tau)).sum()
    }

    /// Union of item atoms, ascending.
    pub fn atoms(&self) -> Vec<f64> {
        sorted_unique(
            self.items
                .iter()
                .filter_map(Distribution::atoms)
                .flatten()
                .map(|(v, _)| v)
                .collect(),
        )
    }

    /// Points where `F` jumps or loses smoothness, ascending, including 0.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.items.iter().flat_map(Distribution::breakpoints).collect();
        xs.push(0.0);
        sorted_unique(xs)
    }

    /// Infimum of the support of `M`.
    pub fn max_support_min(&self) -> f64 {
        self.items.iter().map(Distribution::support_min).fold(0.0, f64::max)
    }

    /// A level past which the tail of `M` is negligible (exact top for bounded instances).
    pub fn tail_cutoff(&self) -> f64 {
        let per_item = TAIL_MASS / self.len() as f64;
        self.items.iter().map(|d| d.tail_cutoff(per_item)).fold(0.0, f64::max)
    }

    /// Quadrature cuts on `[from, tail_cutoff]`.
    fn cuts_from(&self, from: f64) -> Vec<f64> {
        let top = self.tail_cutoff().max(from);
        let mut cuts = vec![from];
        cuts.extend(self.breakpoints().into_iter().filter(|&b| b > from && b < top));
        cuts.push(top);
        cuts
    }

    /// Integrates a function of `x` over `[from, T]`, cutting at every breakpoint of `F`.
    pub fn integrate_over_support<G: FnMut(f64) -> f64>(&self, from: f64, g: G, tol: f64) -> Result<f64> {
        Ok(quadrature::integrate_pieces(g, &self.cuts_from(from), tol)?.value)
    }

    /// `E[M]`: an exact atom sum for finite instances, otherwise `int_0^inf (1 - F)`.
    pub fn expected_max(&self) -> Result<f64> {
        match self.max_pmf() {
            Some(pmf) => Ok(pmf.iter().map(|(a, p)| a * p).sum()),
            None => self.integrate_over_support(0.0, |x| 1.0 - self.max_cdf(x), EXPECTATION_TOLERANCE),
        }
    }

    /// `E[(M - tau)^+]` computed from the law of `M`.
    pub fn max_overshoot(&self, tau: f64) -> Result<f64> {
        match self.max_pmf() {
            Some(pmf) => Ok(pmf.iter().map(|(a, p)| p * (a - tau).max(0.0)).sum()),
            None => {
                let from = tau.max(0.0);
                let below = (from - tau).max(0.0);
                Ok(below + self.integrate_over_support(from, |x| 1.0 - self.max_cdf(x), EXPECTATION_TOLERANCE)?)
            }
        }
    }

    /// Exact pmf of `M` over the union of item atoms when every item is finite.
    fn max_pmf(&self) -> Option<Vec<(f64, f64)>> {
        if !self.is_finite() {
            return None;
        }
        Some(
            self.atoms()
                .into_iter()
                .map(|a| (a, self.max_cdf(a) - self.max_cdf_left(a)))
                .filter(|&(_, p)| p > 0.0)
                .collect(),
        )
    }

    pub fn max_distribution(&self) -> MaxDistribution {
        MaxDistribution {
            pmf: self.max_pmf(),
            instance: self.clone(),
        }
    }

    /// `| sum_i (1 - F_i(x)) prod_{j<i} F_j(x) - (1 - F(x)) |`.
    pub fn telescope_residual(&self, x: f64) -> f64 {
        let mut reach = 1.0;
        let mut lhs = 0.0;
        for d in &self.items {
            let f = d.cdf(x);
            lhs += (1.0 - f) * reach;
            reach *= f;
        }
        (lhs - (1.0 - self.max_cdf(x))).abs()
    }

    /// Evaluation grid: 0, item atoms, midpoints between consecutive atoms,
    /// and (when any item is continuous) 50 quantile-spaced points of `F`.
    /// Finite instances also get one point above the top atom.
    pub fn default_grid(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        let atoms = self.atoms();
        pts.extend(&atoms);
        pts.extend(atoms.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        if self.is_finite() {
            if let Some(top) = atoms.last() {
                pts.push(top + 1.0);
            }
        } else {
            let law = self.max_distribution();
            for k in 1..=GRID_QUANTILES {
                let u = k as f64 / (GRID_QUANTILES + 1) as f64;
                if let Ok(q) = law.quantile(u) {
                    pts.push(q);
                }
            }
        }
        sorted_unique(pts)
    }

    /// Every item scaled by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.items.iter().map(|d| d.scaled(c)).collect::<Result<_>>()?)
    }
}

/// The law of `M = max_i X_i`.
///
/// Carries an exact pmf when every item is finite; otherwise CDF and quantile
/// are evaluated through `F = prod_i F_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxDistribution {
    pmf: Option<Vec<(f64, f64)>>,
    instance: Instance,
}

impl MaxDistribution {
    pub fn pmf(&self) -> Option<&[(f64, f64)]> {
        self.pmf.as_deref()
    }

    pub fn is_finite(&self) -> bool {
        self.pmf.is_some()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.instance.max_cdf(x)
    }

    pub fn cdf_left(&self, x: f64) -> f64 {
        self.instance.max_cdf_left(x)
    }

    /// `inf{x : F(x) >= u}`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain {
                what: "quantile level",
                value: u,
                domain: "[0, 1]",
            });
        }
        if let Some(pmf) = &self.pmf {
            let k = pmf.partition_point(|&(a, _)| self.cdf(a) < u);
            return Ok(pmf[k.min(pmf.len() - 1)].0);
        }
        let floor = self.instance.max_support_min();
        if u == 0.0 || self.cdf(floor) >= u {
            return Ok(floor);
        }
        let mut lo = floor;
        let mut hi = self.instance.tail_cutoff().max(floor + 1.0);
        while self.cdf(hi) < u {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Ok(f64::INFINITY);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // Snap onto an atom of M if the bracket closed around one.
        let atom = self
            .instance
            .atoms()
            .into_iter()
            .find(|&a| a > lo && a <= hi && self.cdf(a) >= u);
        Ok(atom.unwrap_or(hi))
    }

    /// An independent draw of `M` by inversion of a fresh uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        // u < 1, so the quantile is finite and in range.
        self.quantile(u).expect("uniform draw lies in [0, 1)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> Distribution {
        Distribution::discrete(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap()
    }

    fn unit() -> Distribution {
        Distribution::uniform(0.0, 1.0).unwrap()
    }

    pub(crate) fn near_tight() -> Instance {
        Instance::new(vec![
            Distribution::point_mass(1.0).unwrap(),
            Distribution::discrete(vec![0.0, 100.0], vec![0.99, 0.01]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn empty_instance_rejected() {
        assert_eq!(Instance::new(vec![]), Err(Error::EmptyInstance));
    }

    #[test]
    fn max_cdf_examples() {
        let two_coins = Instance::new(vec![coin(), coin()]).unwrap();
        assert_eq!(two_coins.max_cdf(1.0), 0.25);
        assert_eq!(Instance::new(vec![unit()]).unwrap().max_cdf(0.7), 0.7);
        assert_eq!(near_tight().max_cdf(50.0), 0.99);
    }

    #[test]
    fn exceed_prob_examples() {
        let pm = Instance::new(vec![Distribution::point_mass(1.0).unwrap()]).unwrap();
        assert_eq!(pm.exceed_prob(0.5), 1.0);
        assert_eq!(pm.exceed_prob(1.0), 0.0);
        assert_eq!(near_tight().exceed_prob(0.995), 1.0);
    }

    #[test]
    fn expected_max_examples() {
        assert!((near_tight().expected_max().unwrap() - 1.99).abs() < 1e-12);
        let one = Instance::new(vec![unit()]).unwrap();
        assert!((one.expected_max().unwrap() - 0.5).abs() < 1e-10);
        let two = Instance::new(vec![unit(), unit()]).unwrap();
        assert!((two.expected_max().unwrap() - 2.0 / 3.0).abs() < 1e-10);
        let expo = Instance::new(vec![Distribution::exponential(1.0).unwrap(); 2]).unwrap();
        // E[max of two Exp(1)] = 1 + 1/2.
        assert!((expo.expected_max().unwrap() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn aggregate_surplus_examples() {
        assert!((near_tight().aggregate_surplus(0.995) - 0.99505).abs() < 1e-12);
        assert_eq!(near_tight().aggregate_surplus(100.0), 0.0);
        assert_eq!(near_tight().aggregate_surplus(250.0), 0.0);
        let one = Instance::new(vec![coin()]).unwrap();
        assert!((one.aggregate_surplus(2.0 / 3.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn max_distribution_examples() {
        let pmf = near_tight().max_distribution();
        let atoms = pmf.pmf().unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].0, 1.0);
        assert!((atoms[0].1 - 0.99).abs() < 1e-15);
        assert_eq!(atoms[1].0, 100.0);
        assert!((atoms[1].1 - 0.01).abs() < 1e-15);

        let handle = Instance::new(vec![unit()]).unwrap().max_distribution();
        assert!(!handle.is_finite());
        assert!((handle.quantile(0.5).unwrap() - 0.5).abs() < 1e-12);

        let two_coins = Instance::new(vec![coin(), coin()]).unwrap().max_distribution();
        assert_eq!(two_coins.pmf().unwrap(), &[(0.0, 0.25), (2.0, 0.75)]);
    }

    #[test]
    fn max_quantile_on_mixed_instance_snaps_to_atom() {
        let inst = Instance::new(vec![Distribution::point_mass(0.5).unwrap(), unit()]).unwrap();
        let law = inst.max_distribution();
        // P(M = 0.5) = 0.5, so every level in (0, 0.5] maps to the atom.
        assert_eq!(law.quantile(0.3).unwrap(), 0.5);
        assert_eq!(law.quantile(0.5).unwrap(), 0.5);
        assert!((law.quantile(0.75).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(law.quantile(0.0).unwrap(), 0.5);
    }

    #[test]
    fn telescope_examples() {
        let two_coins = Instance::new(vec![coin(), coin()]).unwrap();
        assert!(two_coins.telescope_residual(1.0) <= 1e-15);
        assert!(two_coins.telescope_residual(-1.0) <= 1e-15);
        assert!(two_coins.telescope_residual(5.0) <= 1e-15);
    }

    #[test]
    fn max_overshoot_matches_closed_form_for_uniform() {
        let one = Instance::new(vec![unit()]).unwrap();
        for k in 0..10 {
            let t = k as f64 / 10.0;
            let want = (1.0 - t) * (1.0 - t) / 2.0;
            assert!((one.max_overshoot(t).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn instance_file_parses() {
        let json = r#"{"items":[{"kind":"point_mass","value":1},{"kind":"discrete","support":[0,100],"probs":[0.99,0.01]}]}"#;
        let inst: Instance = serde_json::from_str(json).unwrap();
        assert_eq!(inst, near_tight());
        assert!(serde_json::from_str::<Instance>(r#"{"items":[]}"#).is_err());
    }
}
