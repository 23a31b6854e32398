use std::thread;

use super::{EvalResult, RuleSpec, Simulator, StdErrors, TailPoint, Trials, DEFAULT_SEED, DEFAULT_TRIALS};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::streams::Streams;

/// Trials per chunk. Chunks are merged in index order, so results do not
/// depend on the number of threads.
const CHUNK: u64 = 1 << 14;

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
    /// Levels `z` at which `P(ALG > z)` is estimated.
    pub zgrid: Vec<f64>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            threads: 1,
            zgrid: Vec::new(),
        }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0.0 {
            return;
        }
        if self.n == 0.0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n / n;
        self.m2 += other.m2 + delta * delta * self.n * other.n / n;
        self.n = n;
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1.0) / self.n).sqrt()
        }
    }
}

#[derive(Debug, Clone)]
struct Tally {
    payoff: Moments,
    threshold: Moments,
    surplus: Moments,
    residual: Moments,
    exceed: Vec<u64>,
    count: u64,
}

impl Tally {
    fn new(levels: usize) -> Self {
        Self {
            payoff: Moments::default(),
            threshold: Moments::default(),
            surplus: Moments::default(),
            residual: Moments::default(),
            exceed: vec![0; levels],
            count: 0,
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.payoff.merge(&other.payoff);
        self.threshold.merge(&other.threshold);
        self.surplus.merge(&other.surplus);
        self.residual.merge(&other.residual);
        for (a, b) in self.exceed.iter_mut().zip(&other.exceed) {
            *a += b;
        }
        self.count += other.count;
    }
}

fn run_chunk(sim: &Simulator<'_>, streams: &Streams, zgrid: &[f64], start: u64, end: u64) -> Tally {
    let mut tally = Tally::new(zgrid.len());
    for trial in start..end {
        let t = sim.run_trial(streams, trial);
        let (thr, sur) = if t.stop_index.is_some() {
            (t.drawn_threshold, t.payoff - t.drawn_threshold)
        } else {
            (0.0, 0.0)
        };
        tally.payoff.push(t.payoff);
        tally.threshold.push(thr);
        tally.surplus.push(sur);
        tally.residual.push(t.payoff - (thr + sur));
        for (c, &z) in tally.exceed.iter_mut().zip(zgrid) {
            if t.payoff > z {
                *c += 1;
            }
        }
        tally.count += 1;
    }
    tally
}

/// Monte Carlo estimate with the default grid of `inst` for the tail.
pub fn monte_carlo(inst: &Instance, rule: &RuleSpec, trials: u64, seed: u64) -> Result<EvalResult> {
    monte_carlo_with(
        inst,
        rule,
        &MonteCarloConfig {
            trials,
            seed,
            threads: 1,
            zgrid: inst.default_grid(),
        },
    )
}

/// Averages `trials` independent runs. Trial `k` uses substreams `k` of
/// `config.seed`, so the result is bit-reproducible for any thread count.
pub fn monte_carlo_with(inst: &Instance, rule: &RuleSpec, config: &MonteCarloConfig) -> Result<EvalResult> {
    if config.trials == 0 {
        return Err(Error::Domain {
            what: "trials",
            value: 0.0,
            domain: "[1, inf)",
        });
    }
    let sim = Simulator::new(inst, rule)?;
    let streams = Streams::new(config.seed);
    let chunks = config.trials.div_ceil(CHUNK);
    let bounds = |c: u64| (c * CHUNK, ((c + 1) * CHUNK).min(config.trials));
    let threads = config.threads.max(1).min(chunks as usize);

    let mut per_chunk: Vec<Option<Tally>> = vec![None; chunks as usize];
    if threads <= 1 {
        for c in 0..chunks {
            let (s, e) = bounds(c);
            per_chunk[c as usize] = Some(run_chunk(&sim, &streams, &config.zgrid, s, e));
        }
    } else {
        let results: Vec<Vec<(u64, Tally)>> = thread::scope(|scope| {
            let handles: Vec<_> = (0..threads as u64)
                .map(|w| {
                    let sim = &sim;
                    let streams = &streams;
                    let zgrid = &config.zgrid;
                    scope.spawn(move || {
                        (w..chunks)
                            .step_by(threads)
                            .map(|c| {
                                let (s, e) = bounds(c);
                                (c, run_chunk(sim, streams, zgrid, s, e))
                            })
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for (c, t) in results.into_iter().flatten() {
            per_chunk[c as usize] = Some(t);
        }
    }

    let mut total = Tally::new(config.zgrid.len());
    for t in per_chunk.iter().flatten() {
        total.merge(t);
    }
    let n = total.count as f64;
    let tail = config
        .zgrid
        .iter()
        .zip(&total.exceed)
        .map(|(&z, &c)| {
            let p = c as f64 / n;
            TailPoint {
                z,
                prob: p,
                stderr: Some((p * (1.0 - p) / n).sqrt()),
            }
        })
        .collect();
    Ok(EvalResult {
        expected_payoff: total.payoff.mean,
        threshold_part: total.threshold.mean,
        surplus_part: total.surplus.mean,
        tail,
        payoff_pmf: None,
        stderr: Some(StdErrors {
            expected_payoff: total.payoff.stderr(),
            threshold_part: total.threshold.stderr(),
            surplus_part: total.surplus.stderr(),
            residual: total.residual.stderr(),
        }),
        trials: Trials::Count(total.count),
        seed: Some(config.seed),
    })
}
