//! The joint distribution of how many replicas get through each phase of
//! one transaction, under i.i.d. message loss.
//!
//! With `p` the per-message success probability and
//! `T(x) = P(Bin(x, p) >= t)` the chance that a replica hears at least `t`
//! of `x` peers, a transaction unfolds as
//!
//! ```text
//! M ~ Bin(n-1, p)        backups that receive PRE-PREPARE
//! K ~ Bin(M+1, T(M))     replicas (primary included) that accept PREPARE
//! J ~ Bin(K, T(K-1))     replicas that accept COMMIT
//! S ~ Bin(J, p)          REPLY messages reaching the client
//! ```
//!
//! and the table holds `P(M=m, K=k, J=j, S=s)` for every
//! `s <= j <= k <= m+1 <= n`.

use crate::config::SystemConfig;

use super::binomial::{check_probability, LnFactorials};
use super::MessageSuccessModel;

/// Per-message success probability for each stage. The closed form uses a
/// single value; splitting it lets pre-prepare-only repetition or a hybrid
/// transport be evaluated with the same machinery.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseProbabilities {
    pub preprepare: f64,
    /// PREPARE and COMMIT.
    pub exchange: f64,
    pub reply: f64,
}

impl PhaseProbabilities {
    pub fn uniform(p: f64) -> Self {
        PhaseProbabilities { preprepare: p, exchange: p, reply: p }
    }

    fn check(&self) {
        check_probability(self.preprepare);
        check_probability(self.exchange);
        check_probability(self.reply);
    }
}

impl From<&MessageSuccessModel> for PhaseProbabilities {
    fn from(model: &MessageSuccessModel) -> Self {
        PhaseProbabilities::uniform(model.p_msg())
    }
}

/// Which count the PRE-PREPARE stage is compared against `2f + 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PrePrepareQuorum {
    /// `m >= 2f + 1`: backups only, exactly as the success event is written.
    #[default]
    Backups,
    /// `m + 1 >= 2f + 1`: the primary is pre-prepared too. This is the event
    /// a message-level simulation realizes.
    IncludingPrimary,
}

/// Thresholds that define a successful transaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Acceptance {
    /// Replicas that must pass PRE-PREPARE, PREPARE and COMMIT (`2f + 1`).
    pub phase_quorum: u32,
    pub reply_threshold: u32,
    pub preprepare: PrePrepareQuorum,
}

impl Acceptance {
    pub fn for_config(cfg: &SystemConfig) -> Self {
        Acceptance {
            phase_quorum: cfg.phase_quorum(),
            reply_threshold: cfg.reply_quorum(),
            preprepare: PrePrepareQuorum::Backups,
        }
    }

    pub fn with_preprepare(mut self, rule: PrePrepareQuorum) -> Self {
        self.preprepare = rule;
        self
    }

    fn phases_pass(&self, m: u32, k: u32, j: u32) -> bool {
        let m_count = match self.preprepare {
            PrePrepareQuorum::Backups => m,
            PrePrepareQuorum::IncludingPrimary => m + 1,
        };
        m_count >= self.phase_quorum && k >= self.phase_quorum && j >= self.phase_quorum
    }
}

#[derive(Clone, Debug)]
pub struct JointPhaseDistribution {
    n: u32,
    f: u32,
    /// Messages from others needed to accept PREPARE/COMMIT.
    threshold: u32,
    pmf: Vec<f64>,
}

impl JointPhaseDistribution {
    /// Evaluates the table for `n` replicas with nested summation
    /// m -> k -> j -> s. Memory is `n * (n+1)^3` doubles.
    pub fn compute(cfg: &SystemConfig, phases: PhaseProbabilities) -> Self {
        Self::compute_raw(cfg.n, cfg.f, cfg.prepare_threshold(), phases)
    }

    pub(crate) fn compute_raw(n: u32, f: u32, threshold: u32, phases: PhaseProbabilities) -> Self {
        assert!(n >= 1, "need at least one replica");
        phases.check();
        let lf = LnFactorials::up_to(n);
        let d = n as usize + 1;
        let mut pmf = vec![0.0; n as usize * d * d * d];

        let accept = |x: u32| lf.tail(threshold, x, phases.exchange);
        let replies: Vec<Vec<f64>> = (0..=n).map(|j| lf.row(j, phases.reply)).collect();
        // commits[k][j]: j of the k prepared replicas hear >= threshold of
        // the other k-1.
        let commits: Vec<Vec<f64>> = (0..=n)
            .map(|k| {
                let t = if k == 0 { 0.0 } else { accept(k - 1) };
                lf.row(k, t)
            })
            .collect();
        let preprepare = lf.row(n - 1, phases.preprepare);

        for m in 0..n {
            let p_m = preprepare[m as usize];
            if p_m == 0.0 {
                continue;
            }
            let prepares = lf.row(m + 1, accept(m));
            for k in 0..=m + 1 {
                let p_mk = p_m * prepares[k as usize];
                if p_mk == 0.0 {
                    continue;
                }
                for j in 0..=k {
                    let p_mkj = p_mk * commits[k as usize][j as usize];
                    if p_mkj == 0.0 {
                        continue;
                    }
                    let base = Self::flat(d, m, k, j, 0);
                    for (s, p_s) in replies[j as usize].iter().enumerate() {
                        pmf[base + s] = p_mkj * p_s;
                    }
                }
            }
        }
        JointPhaseDistribution { n, f, threshold, pmf }
    }

    fn flat(d: usize, m: u32, k: u32, j: u32, s: u32) -> usize {
        ((m as usize * d + k as usize) * d + j as usize) * d + s as usize
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn f(&self) -> u32 {
        self.f
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    /// `P(M=m, K=k, J=j, S=s)`; zero outside `s <= j <= k <= m+1`, `m < n`.
    pub fn get(&self, m: u32, k: u32, j: u32, s: u32) -> f64 {
        if m >= self.n || k > m + 1 || j > k || s > j {
            return 0.0;
        }
        self.pmf[Self::flat(self.n as usize + 1, m, k, j, s)]
    }

    /// Every in-domain cell with its indices `(m, k, j, s)`.
    pub fn cells(&self) -> impl Iterator<Item = ((u32, u32, u32, u32), f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |m| {
            (0..=m + 1).flat_map(move |k| {
                (0..=k).flat_map(move |j| (0..=j).map(move |s| ((m, k, j, s), self.get(m, k, j, s))))
            })
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    /// `P(S >= reply, J >= q, K >= q, M >= q)`.
    pub fn success_probability(&self, acc: &Acceptance) -> f64 {
        self.cells()
            .filter(|&((m, k, j, s), _)| acc.phases_pass(m, k, j) && s >= acc.reply_threshold)
            .map(|(_, p)| p)
            .sum()
    }

    /// `E[S; J >= q, K >= q, M >= q]`, unnormalized: cells below the phase
    /// quorum contribute nothing, so a lossless channel gives exactly `n`.
    pub fn expected_replies(&self, acc: &Acceptance) -> f64 {
        self.cells().filter(|&((m, k, j, _), _)| acc.phases_pass(m, k, j)).map(|((_, _, _, s), p)| s as f64 * p).sum()
    }

    /// Marginal `P(S = s)`.
    pub fn reply_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n as usize + 1];
        for ((_, _, _, s), p) in self.cells() {
            out[s as usize] += p;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u32, f: u32) -> SystemConfig {
        SystemConfig::new(n, f).validate().unwrap()
    }

    #[test]
    fn lossless_channel_is_a_point_mass() {
        let d = JointPhaseDistribution::compute(&cfg(7, 2), PhaseProbabilities::uniform(1.0));
        assert_eq!(d.get(6, 7, 7, 7), 1.0);
        assert!((d.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dead_channel_yields_no_replies() {
        let d = JointPhaseDistribution::compute(&cfg(4, 1), PhaseProbabilities::uniform(0.0));
        // Only the primary is pre-prepared and it hears nobody.
        assert_eq!(d.get(0, 0, 0, 0), 1.0);
        assert_eq!(d.reply_marginal()[0], 1.0);
    }

    #[test]
    fn zero_faults_accept_unconditionally() {
        // T(x) = 1 when the threshold is 0, so everyone pre-prepared commits.
        let d = JointPhaseDistribution::compute(&cfg(4, 0), PhaseProbabilities::uniform(0.0));
        assert_eq!(d.get(0, 1, 1, 0), 1.0);
    }

    #[test]
    fn nesting_outside_domain_is_zero() {
        let d = JointPhaseDistribution::compute(&cfg(4, 1), PhaseProbabilities::uniform(0.8));
        assert_eq!(d.get(1, 3, 0, 0), 0.0);
        assert_eq!(d.get(3, 4, 2, 3), 0.0);
        assert_eq!(d.get(4, 0, 0, 0), 0.0);
        assert!(d.cells().all(|(_, p)| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn single_cell_by_hand() {
        // n=4, f=1, p=0.9: P(M=3, K=4, J=4, S=4)
        //   = 0.9^3 * T(3)^4 * T(3)^4 * 0.9^4, T(3) = P(Bin(3,.9) >= 2) = 0.972.
        let p: f64 = 0.9;
        let t = 0.972f64;
        let want = p.powi(3) * t.powi(8) * p.powi(4);
        let d = JointPhaseDistribution::compute(&cfg(4, 1), PhaseProbabilities::uniform(p));
        assert!((d.get(3, 4, 4, 4) - want).abs() < 1e-14);
    }

    #[test]
    fn preprepare_rule_only_matters_at_the_boundary() {
        let d = JointPhaseDistribution::compute(&cfg(4, 1), PhaseProbabilities::uniform(0.99));
        let acc = Acceptance::for_config(&cfg(4, 1));
        let literal = d.success_probability(&acc);
        let with_primary = d.success_probability(&acc.with_preprepare(PrePrepareQuorum::IncludingPrimary));
        assert!(with_primary > literal);
        // The difference is exactly the m = 2f = 2 slice.
        let slice: f64 =
            d.cells().filter(|&((m, k, j, s), _)| m == 2 && k >= 3 && j >= 3 && s >= 3).map(|(_, p)| p).sum();
        assert!((with_primary - literal - slice).abs() < 1e-15);
    }
}
