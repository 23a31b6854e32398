//! Seeded random finite instances for property tests and acceptance runs.
//!
//! Values sit on a lattice so that equal values across items (and values equal
//! to a drawn threshold) are frequent, which exercises the tie-break paths.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::Distribution;
use crate::instance::Instance;

/// Shape of generated instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzShape {
    pub max_items: usize,
    pub max_atoms: usize,
    pub max_value: f64,
    /// Spacing of the value lattice; `0.0` draws values uniformly from `[0, max_value]`.
    pub lattice: f64,
}

impl Default for FuzzShape {
    fn default() -> Self {
        Self {
            max_items: 4,
            max_atoms: 3,
            max_value: 10.0,
            lattice: 0.5,
        }
    }
}

fn random_item(rng: &mut ChaCha8Rng, shape: &FuzzShape) -> Distribution {
    let k = rng.gen_range(1..=shape.max_atoms);
    let mut support: Vec<f64> = if shape.lattice > 0.0 {
        let steps = (shape.max_value / shape.lattice).floor() as usize;
        let mut grid: Vec<usize> = (0..=steps).collect();
        grid.shuffle(rng);
        grid[..k].iter().map(|&s| s as f64 * shape.lattice).collect()
    } else {
        (0..k).map(|_| rng.gen_range(0.0..=shape.max_value)).collect()
    };
    support.sort_by(f64::total_cmp);
    support.dedup();
    let k = support.len();
    // Weights bounded away from zero so every atom matters.
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / total).collect();
    Distribution::discrete(support, probs).expect("generated law is valid")
}

/// One instance drawn from `rng`.
pub fn random_instance(rng: &mut ChaCha8Rng, shape: &FuzzShape) -> Instance {
    let n = rng.gen_range(1..=shape.max_items);
    Instance::new((0..n).map(|_| random_item(rng, shape)).collect()).expect("nonempty")
}

/// `count` instances determined by `seed`.
pub fn random_instances(seed: u64, count: usize, shape: &FuzzShape) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, shape)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_within_shape() {
        let shape = FuzzShape::default();
        let a = random_instances(3, 50, &shape);
        let b = random_instances(3, 50, &shape);
        assert_eq!(a, b);
        for inst in &a {
            assert!(inst.len() <= 4 && inst.is_finite());
            for d in inst.items() {
                let atoms = d.atoms().unwrap();
                assert!(atoms.len() <= 3);
                for (v, _) in atoms {
                    assert!((0.0..=10.0).contains(&v));
                    assert_eq!((v * 2.0).fract(), 0.0);
                }
            }
        }
    }
}
