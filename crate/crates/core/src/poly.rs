//! Polynomials in the tie-break rank `r` on `[0, 1]`.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly(Vec<f64>);

impl Poly {
    pub fn one() -> Self {
        Poly(vec![1.0])
    }

    /// Multiplies in place by `a + b r`.
    pub fn mul_linear(&mut self, a: f64, b: f64) {
        if b == 0.0 {
            self.0.iter_mut().for_each(|c| *c *= a);
            return;
        }
        let mut out = vec![0.0; self.0.len() + 1];
        for (k, &c) in self.0.iter().enumerate() {
            out[k] += a * c;
            out[k + 1] += b * c;
        }
        self.0 = out;
    }

    /// `int_0^1 p(r) dr`.
    pub fn integral(&self) -> f64 {
        self.0.iter().enumerate().map(|(k, c)| c / (k + 1) as f64).sum()
    }

    /// `int_0^1 p(r) (1 - r) dr`.
    pub fn integral_times_complement(&self) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(k, c)| c / ((k + 1) * (k + 2)) as f64)
            .sum()
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    /// `E[p(U)]` for a rank `U` with moments `moments[k] = E[U^k]`.
    pub fn expect(&self, moments: &[f64]) -> f64 {
        self.0.iter().zip(moments).map(|(c, m)| c * m).sum()
    }

    /// `int_0^1 r^j p'(r) dr` for `j = 0..count`.
    pub fn derivative_moments(&self, count: usize) -> Vec<f64> {
        (0..count)
            .map(|j| {
                self.0
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| c * k as f64 / (k + j) as f64)
                    .sum()
            })
            .collect()
    }

    /// The `r` in `[0, 1]` with `p(r) = target`, for `p` nondecreasing on `[0, 1]`.
    pub fn solve_increasing(&self, target: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `E[U^k] = 1/(k+1)` for a uniform rank, `k = 0..count`.
pub(crate) fn uniform_moments(count: usize) -> Vec<f64> {
    (0..count).map(|k| 1.0 / (k + 1) as f64).collect()
}
