//! Helpers shared by the integration suites.
//!
//! [`PhaseOracle`] plays the four-stage acceptance process message by
//! message: every PRE-PREPARE, PREPARE, COMMIT and REPLY is its own coin
//! flip, and a stage only involves the replicas that passed the one before.
//! It never touches a binomial formula, so agreement with the closed form
//! is a real check.

#![allow(dead_code)]

use lossy_pbft::config::{ScenarioSpec, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
pub struct PhaseOutcome {
    pub m: u32,
    pub k: u32,
    pub j: u32,
    pub s: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct PhaseOracle {
    pub n: u32,
    /// Messages from others needed at PREPARE and COMMIT.
    pub threshold: u32,
    pub quorum: u32,
    pub reply_threshold: u32,
    pub p: f64,
    /// Count the primary toward the PRE-PREPARE quorum.
    pub count_primary: bool,
}

impl PhaseOracle {
    pub fn for_config(cfg: &SystemConfig, p: f64) -> Self {
        PhaseOracle {
            n: cfg.n,
            threshold: cfg.prepare_threshold(),
            quorum: cfg.phase_quorum(),
            reply_threshold: cfg.reply_quorum(),
            p,
            count_primary: false,
        }
    }

    fn heard(&self, senders: u32, rng: &mut impl Rng) -> u32 {
        (0..senders).filter(|_| rng.random::<f64>() < self.p).count() as u32
    }

    pub fn trial(&self, rng: &mut impl Rng) -> PhaseOutcome {
        let m = self.heard(self.n - 1, rng);
        let k = (0..m + 1).filter(|_| self.heard(m, rng) >= self.threshold).count() as u32;
        let j = (0..k).filter(|_| self.heard(k.saturating_sub(1), rng) >= self.threshold).count() as u32;
        let s = self.heard(j, rng);
        PhaseOutcome { m, k, j, s }
    }

    pub fn phases_pass(&self, o: &PhaseOutcome) -> bool {
        let m = if self.count_primary { o.m + 1 } else { o.m };
        m >= self.quorum && o.k >= self.quorum && o.j >= self.quorum
    }

    /// Sample means of each component of `f(outcome)` over `trials` runs.
    pub fn moments<const K: usize>(
        &self,
        trials: u64,
        seed: u64,
        f: impl Fn(&PhaseOutcome) -> [f64; K] + Sync,
    ) -> [Estimate; K] {
        const CHUNKS: u64 = 64;
        let per = trials / CHUNKS;
        let (sum, sq) = (0..CHUNKS)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c << 40));
                let mut sum = [0.0; K];
                let mut sq = [0.0; K];
                for _ in 0..per {
                    for (i, x) in f(&self.trial(&mut rng)).into_iter().enumerate() {
                        sum[i] += x;
                        sq[i] += x * x;
                    }
                }
                (sum, sq)
            })
            .reduce(
                || ([0.0; K], [0.0; K]),
                |mut a, b| {
                    for i in 0..K {
                        a.0[i] += b.0[i];
                        a.1[i] += b.1[i];
                    }
                    a
                },
            );
        let n = (per * CHUNKS) as f64;
        std::array::from_fn(|i| {
            let mean = sum[i] / n;
            let var = (sq[i] / n - mean * mean).max(0.0);
            Estimate { mean, std_err: (var / n).sqrt(), trials: n }
        })
    }

    /// Success probability and expected replies from one batch of trials.
    pub fn estimate(&self, trials: u64, seed: u64) -> [Estimate; 2] {
        self.moments(trials, seed, |o| {
            let pass = self.phases_pass(o);
            let success = pass && o.s >= self.reply_threshold;
            [success as u8 as f64, if pass { o.s as f64 } else { 0.0 }]
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: f64,
}

impl Estimate {
    /// `|mean - value|` within `sigmas` standard errors, with a small floor
    /// for degenerate samples.
    pub fn agrees(&self, value: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= sigmas * self.std_err.max(1e-9)
    }

    /// For a frequency: within `sigmas` binomial standard errors of
    /// `value`, taken at `value` so that rare events are not judged on an
    /// empty sample.
    pub fn agrees_rate(&self, value: f64, sigmas: f64) -> bool {
        let se = (value * (1.0 - value) / self.trials).sqrt().max(self.std_err).max(1e-9);
        (self.mean - value).abs() <= sigmas * se
    }
}

/// Spec for `requests x repetitions` transactions at end-to-end loss `loss`.
pub fn lossy(n: u32, f: u32, loss: f64) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(SystemConfig::new(n, f));
    spec.channel.loss = lossy_pbft::config::LossModel::PacketSuccess { p: (1.0 - loss).sqrt() };
    spec
}

pub fn success_rate(records: &[lossy_pbft::netsim::TransactionRecord]) -> f64 {
    records.iter().filter(|r| r.success).count() as f64 / records.len() as f64
}
