//! Scenario configuration shared by the closed-form model and the simulator.
//!
//! Every type here is a plain value. [`ScenarioSpec::validate`] checks all
//! invariants at once and fills the defaults that depend on other fields
//! (quorum thresholds, the transaction timeout), so a validated spec is
//! self-describing and validating it again is a no-op.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PAYLOAD_BYTES: u32 = 128;
/// Ethernet + IPv4 + UDP framing.
pub const DEFAULT_HEADER_BYTES: u32 = 54;
pub const DEFAULT_BANDWIDTH_BPS: f64 = 100e6;
pub const DEFAULT_MAX_RETX: u32 = 12;
pub const DEFAULT_MSS_BYTES: u32 = 1460;

/// Protocol hops on the critical path of one transaction:
/// PRE-PREPARE, PREPARE, COMMIT, REPLY.
pub const CRITICAL_PATH_HOPS: u32 = 4;
/// Every endpoint hangs off one router, so each hop crosses two links.
pub const LINKS_PER_PATH: u32 = 2;
/// Default client deadline as a multiple of the loss-free latency, or of
/// the initial retransmission timeout when any phase uses TCP.
pub const TIMEOUT_LATENCY_FACTOR: f64 = 10.0;
/// First TCP retransmission timeout; it doubles on every retry.
pub const INITIAL_RTO_MS: f64 = 1_000.0;
pub const MAX_RTO_MS: f64 = 60_000.0;

/// The four message kinds of the view-consensus protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    PrePrepare,
    Prepare,
    Commit,
    Reply,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::PrePrepare, Phase::Prepare, Phase::Commit, Phase::Reply];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::PrePrepare => "pre-prepare",
            Phase::Prepare => "prepare",
            Phase::Commit => "commit",
            Phase::Reply => "reply",
        };
        f.write_str(s)
    }
}

/// How the PREPARE/COMMIT acceptance threshold is derived when it is not
/// given explicitly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuorumRule {
    /// `2f` distinct messages from other replicas (`2f + 1` counting self).
    #[default]
    TwoF,
    /// More than `(n + f) / 2` replicas in the same phase, i.e.
    /// `floor((n + f) / 2)` from others. Equals `2f` at `n = 3f + 1`.
    Byzantine,
}

impl QuorumRule {
    pub fn threshold(self, n: u32, f: u32) -> u32 {
        match self {
            QuorumRule::TwoF => 2 * f,
            QuorumRule::Byzantine => (n + f) / 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Replica count.
    pub n: u32,
    /// Tolerated Byzantine faults.
    pub f: u32,
    #[serde(default)]
    pub quorum_rule: QuorumRule,
    /// Distinct PREPARE/COMMIT messages from *other* replicas needed to
    /// accept a phase. Derived from `quorum_rule` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prepare_commit_threshold: Option<u32>,
    /// REPLY messages the client waits for: `f + 1` or `2f + 1` (default).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply_threshold: Option<u32>,
    #[serde(default = "default_payload_bytes")]
    pub payload_bytes: u32,
}

fn default_payload_bytes() -> u32 {
    DEFAULT_PAYLOAD_BYTES
}

impl SystemConfig {
    pub fn new(n: u32, f: u32) -> Self {
        SystemConfig {
            n,
            f,
            quorum_rule: QuorumRule::TwoF,
            prepare_commit_threshold: None,
            reply_threshold: None,
            payload_bytes: DEFAULT_PAYLOAD_BYTES,
        }
    }

    /// `n = 3f + 1` with the largest admissible `f`.
    pub fn minimal(f: u32) -> Self {
        Self::new(3 * f + 1, f)
    }

    pub fn with_reply_threshold(mut self, threshold: u32) -> Self {
        self.reply_threshold = Some(threshold);
        self
    }

    pub fn with_quorum_rule(mut self, rule: QuorumRule) -> Self {
        self.quorum_rule = rule;
        self
    }

    /// Largest `f` with `n >= 3f + 1`.
    pub fn max_faults(n: u32) -> u32 {
        n.saturating_sub(1) / 3
    }

    pub fn prepare_threshold(&self) -> u32 {
        self.prepare_commit_threshold.unwrap_or_else(|| self.quorum_rule.threshold(self.n, self.f))
    }

    pub fn reply_quorum(&self) -> u32 {
        self.reply_threshold.unwrap_or(2 * self.f + 1)
    }

    /// `2f + 1`: replicas that must pass each phase.
    pub fn phase_quorum(&self) -> u32 {
        2 * self.f + 1
    }

    fn collect_violations(&self, out: &mut Vec<String>) {
        let (n, f) = (self.n, self.f);
        if n < 3 * f + 1 {
            out.push(format!("n < 3f+1 (n={n}, f={f})"));
        }
        if n == 0 {
            out.push("n must be at least 1".into());
        }
        let threshold = self.prepare_threshold();
        if n > 0 && threshold > n - 1 {
            out.push(format!("prepare_commit_threshold {threshold} exceeds the {} other replicas", n - 1));
        }
        let reply = self.reply_quorum();
        if reply != f + 1 && reply != 2 * f + 1 {
            out.push(format!("reply_threshold must be f+1={} or 2f+1={} (got {reply})", f + 1, 2 * f + 1));
        }
        if self.payload_bytes == 0 {
            out.push("payload_bytes must be positive".into());
        }
    }

    pub fn validate(&self) -> Result<SystemConfig> {
        let mut violations = Vec::new();
        self.collect_violations(&mut violations);
        if !violations.is_empty() {
            return Err(Error::InvalidConfig(violations));
        }
        let mut out = self.clone();
        out.prepare_commit_threshold = Some(self.prepare_threshold());
        out.reply_threshold = Some(self.reply_quorum());
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossModel {
    /// Per-link packet success probability, independent of size.
    PacketSuccess { p: f64 },
    /// Independent bit errors; a frame survives iff all of its bits do.
    BitErrorRate { ber: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayModel {
    Deterministic {
        ms: f64,
    },
    /// Normal(mean, std) conditioned on being non-negative.
    TruncatedNormal {
        mean_ms: f64,
        std_ms: f64,
    },
}

impl DelayModel {
    pub fn nominal_ms(&self) -> f64 {
        match *self {
            DelayModel::Deterministic { ms } => ms,
            DelayModel::TruncatedNormal { mean_ms, .. } => mean_ms,
        }
    }
}

/// Loss and delay of a single link between an endpoint and the router.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default = "lossless")]
    pub loss: LossModel,
    #[serde(default = "default_delay")]
    pub delay: DelayModel,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_bps: f64,
    /// Framing added to every payload, for serialization and bit errors.
    #[serde(default = "default_header_bytes")]
    pub header_bytes: u32,
}

fn lossless() -> LossModel {
    LossModel::PacketSuccess { p: 1.0 }
}

fn default_delay() -> DelayModel {
    DelayModel::TruncatedNormal { mean_ms: 20.0, std_ms: 5.0 }
}

fn default_bandwidth() -> f64 {
    DEFAULT_BANDWIDTH_BPS
}

fn default_header_bytes() -> u32 {
    DEFAULT_HEADER_BYTES
}

impl Default for ChannelSpec {
    /// Lossless 100 Mbps links with TN(20 ms, 5 ms) propagation delay.
    fn default() -> Self {
        ChannelSpec {
            loss: lossless(),
            delay: default_delay(),
            bandwidth_bps: DEFAULT_BANDWIDTH_BPS,
            header_bytes: DEFAULT_HEADER_BYTES,
        }
    }
}

impl ChannelSpec {
    /// Probability that a frame carrying `payload_bytes` crosses one link.
    pub fn link_success(&self, payload_bytes: u32) -> f64 {
        match self.loss {
            LossModel::PacketSuccess { p } => p,
            LossModel::BitErrorRate { ber } => {
                ber_to_packet_success(ber, payload_bytes as u64 + self.header_bytes as u64)
            }
        }
    }

    /// Probability that a frame crosses sender link, router, receiver link.
    pub fn path_success(&self, payload_bytes: u32) -> f64 {
        self.link_success(payload_bytes).powi(LINKS_PER_PATH as i32)
    }

    pub fn serialization_ms(&self, payload_bytes: u32) -> f64 {
        (payload_bytes as f64 + self.header_bytes as f64) * 8.0 / self.bandwidth_bps * 1e3
    }

    fn collect_violations(&self, out: &mut Vec<String>) {
        match self.loss {
            LossModel::PacketSuccess { p } if !(0.0..=1.0).contains(&p) => {
                out.push(format!("packet success p={p} outside [0,1]"))
            }
            LossModel::BitErrorRate { ber } if !(0.0..=1.0).contains(&ber) => {
                out.push(format!("bit error rate {ber} outside [0,1]"))
            }
            _ => {}
        }
        match self.delay {
            DelayModel::Deterministic { ms } if !(ms >= 0.0 && ms.is_finite()) => {
                out.push(format!("delay {ms} ms must be a finite non-negative value"))
            }
            DelayModel::TruncatedNormal { mean_ms, std_ms } => {
                if !(mean_ms >= 0.0 && mean_ms.is_finite()) {
                    out.push(format!("mean_ms {mean_ms} must be finite and non-negative"));
                }
                if !(std_ms >= 0.0 && std_ms.is_finite()) {
                    out.push(format!("std_ms {std_ms} must be finite and non-negative"));
                }
            }
            _ => {}
        }
        if !(self.bandwidth_bps > 0.0 && self.bandwidth_bps.is_finite()) {
            out.push(format!("bandwidth_bps {} must be positive", self.bandwidth_bps));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcpParams {
    /// Retransmissions after the first attempt before giving up.
    #[serde(default = "default_max_retx")]
    pub max_retx: u32,
    /// End-to-end ACK survival. Defaults to the data segment's survival.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack_success: Option<f64>,
    #[serde(default = "default_mss")]
    pub mss_bytes: u32,
}

fn default_max_retx() -> u32 {
    DEFAULT_MAX_RETX
}

fn default_mss() -> u32 {
    DEFAULT_MSS_BYTES
}

impl Default for TcpParams {
    fn default() -> Self {
        TcpParams { max_retx: DEFAULT_MAX_RETX, ack_success: None, mss_bytes: DEFAULT_MSS_BYTES }
    }
}

impl TcpParams {
    pub fn segment_count(&self, payload_bytes: u32) -> u32 {
        payload_bytes.div_ceil(self.mss_bytes).max(1)
    }

    /// Payload sizes of the segments a message is cut into; only the last
    /// may be shorter than the MSS.
    pub fn segment_sizes(&self, payload_bytes: u32) -> Vec<u32> {
        let u = self.segment_count(payload_bytes);
        (0..u).map(|i| if i + 1 < u { self.mss_bytes } else { payload_bytes - self.mss_bytes * (u - 1) }).collect()
    }

    fn collect_violations(&self, out: &mut Vec<String>) {
        if self.mss_bytes == 0 {
            out.push("mss_bytes must be positive".into());
        }
        if let Some(p) = self.ack_success {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("ack_success {p} outside [0,1]"));
            }
        }
    }
}

/// Transport used for one phase. Nesting is impossible by construction,
/// so a hybrid can only combine plain UDP and TCP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseTransport {
    /// Each message is sent `repeats` times back to back.
    Udp {
        #[serde(default = "one")]
        repeats: u32,
    },
    Tcp(TcpParams),
}

fn one() -> u32 {
    1
}

impl PhaseTransport {
    fn collect_violations(&self, what: &str, out: &mut Vec<String>) {
        match self {
            PhaseTransport::Udp { repeats } if *repeats == 0 => out.push(format!("{what}: repeats must be at least 1")),
            PhaseTransport::Tcp(params) => params.collect_violations(out),
            _ => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransportSpec {
    Udp {
        #[serde(default = "one")]
        repeats: u32,
        /// Send count for PRE-PREPARE only; defaults to `repeats`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        repeats_preprepare: Option<u32>,
    },
    Tcp(TcpParams),
    Hybrid {
        preprepare: PhaseTransport,
        other: PhaseTransport,
    },
}

impl Default for TransportSpec {
    fn default() -> Self {
        TransportSpec::udp(1)
    }
}

impl TransportSpec {
    pub fn udp(repeats: u32) -> Self {
        TransportSpec::Udp { repeats, repeats_preprepare: None }
    }

    pub fn udp_with_preprepare(repeats: u32, repeats_preprepare: u32) -> Self {
        TransportSpec::Udp { repeats, repeats_preprepare: Some(repeats_preprepare) }
    }

    pub fn tcp() -> Self {
        TransportSpec::Tcp(TcpParams::default())
    }

    /// TCP for PRE-PREPARE, single-copy UDP for everything else.
    pub fn hybrid_tcp_preprepare() -> Self {
        TransportSpec::Hybrid {
            preprepare: PhaseTransport::Tcp(TcpParams::default()),
            other: PhaseTransport::Udp { repeats: 1 },
        }
    }

    pub fn for_phase(&self, phase: Phase) -> PhaseTransport {
        match *self {
            TransportSpec::Udp { repeats, repeats_preprepare } => PhaseTransport::Udp {
                repeats: match phase {
                    Phase::PrePrepare => repeats_preprepare.unwrap_or(repeats),
                    _ => repeats,
                },
            },
            TransportSpec::Tcp(params) => PhaseTransport::Tcp(params),
            TransportSpec::Hybrid { preprepare, other } => match phase {
                Phase::PrePrepare => preprepare,
                _ => other,
            },
        }
    }

    fn collect_violations(&self, out: &mut Vec<String>) {
        match self {
            TransportSpec::Udp { repeats, repeats_preprepare } => {
                if *repeats == 0 {
                    out.push("udp: repeats must be at least 1".into());
                }
                if *repeats_preprepare == Some(0) {
                    out.push("udp: repeats_preprepare must be at least 1".into());
                }
            }
            TransportSpec::Tcp(params) => params.collect_violations(out),
            TransportSpec::Hybrid { preprepare, other } => {
                preprepare.collect_violations("hybrid.preprepare", out);
                other.collect_violations("hybrid.other", out);
            }
        }
    }

    pub fn uses_tcp(&self) -> bool {
        Phase::ALL.iter().any(|&p| matches!(self.for_phase(p), PhaseTransport::Tcp(_)))
    }

    fn normalized(&self) -> TransportSpec {
        match *self {
            TransportSpec::Udp { repeats, repeats_preprepare } => {
                TransportSpec::Udp { repeats, repeats_preprepare: Some(repeats_preprepare.unwrap_or(repeats)) }
            }
            other => other,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultBehavior {
    /// Processes messages but never sends anything.
    #[default]
    Silent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    #[serde(default)]
    pub count: u32,
    #[serde(default)]
    pub behavior: FaultBehavior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub system: SystemConfig,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub transport: TransportSpec,
    /// Transactions per run.
    #[serde(default = "default_requests")]
    pub requests: u32,
    /// Independent runs.
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    /// Client deadline per transaction; see [`TIMEOUT_LATENCY_FACTOR`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub txn_timeout_ms: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub faulty: FaultSpec,
}

fn default_requests() -> u32 {
    100
}

fn default_repetitions() -> u32 {
    20
}

impl ScenarioSpec {
    pub fn new(system: SystemConfig) -> Self {
        ScenarioSpec {
            system,
            channel: ChannelSpec::default(),
            transport: TransportSpec::default(),
            requests: default_requests(),
            repetitions: default_repetitions(),
            txn_timeout_ms: None,
            seed: 0,
            faulty: FaultSpec::default(),
        }
    }

    /// Critical-path latency with nominal delays and no loss.
    pub fn loss_free_latency_ms(&self) -> f64 {
        let per_link = self.channel.delay.nominal_ms() + self.channel.serialization_ms(self.system.payload_bytes);
        (CRITICAL_PATH_HOPS * LINKS_PER_PATH) as f64 * per_link
    }

    pub fn timeout_ms(&self) -> f64 {
        self.txn_timeout_ms.unwrap_or_else(|| {
            let scale = if self.transport.uses_tcp() {
                self.loss_free_latency_ms().max(INITIAL_RTO_MS)
            } else {
                self.loss_free_latency_ms()
            };
            TIMEOUT_LATENCY_FACTOR * scale
        })
    }

    /// Checks every invariant and fills derived defaults. All violations
    /// are reported together.
    pub fn validate(&self) -> Result<ScenarioSpec> {
        let mut violations = Vec::new();
        self.system.collect_violations(&mut violations);
        self.channel.collect_violations(&mut violations);
        self.transport.collect_violations(&mut violations);
        if self.requests == 0 {
            violations.push("requests must be at least 1".into());
        }
        if self.repetitions == 0 {
            violations.push("repetitions must be at least 1".into());
        }
        if let Some(t) = self.txn_timeout_ms {
            if !(t > 0.0 && t.is_finite()) {
                violations.push(format!("txn_timeout_ms {t} must be positive"));
            }
        }
        if self.faulty.count > self.system.f {
            violations.push(format!("faulty.count {} exceeds f={}", self.faulty.count, self.system.f));
        }
        if !violations.is_empty() {
            return Err(Error::InvalidConfig(violations));
        }

        let mut out = self.clone();
        out.system = self.system.validate()?;
        out.transport = self.transport.normalized();
        out.txn_timeout_ms = Some(self.timeout_ms());
        Ok(out)
    }

    pub fn from_toml_str(text: &str) -> Result<ScenarioSpec> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialize")
    }
}

/// Survival probability of a frame of `total_bytes` under independent bit
/// errors: `(1 - ber)^(8 * total_bytes)`.
pub fn ber_to_packet_success(ber: f64, total_bytes: u64) -> f64 {
    assert!((0.0..=1.0).contains(&ber), "ber {ber} outside [0,1]");
    assert!(total_bytes >= 1, "frame must carry at least one byte");
    let bits = 8.0 * total_bytes as f64;
    (bits * (-ber).ln_1p()).exp()
}

/// Success of a datagram sent `r` times over a channel with success `p_l`:
/// it is lost only if every copy is.
pub fn fec_effective_success(p_l: f64, r: u32) -> f64 {
    assert!((0.0..=1.0).contains(&p_l), "p_l {p_l} outside [0,1]");
    assert!(r >= 1, "send count must be at least 1");
    1.0 - (1.0 - p_l).powi(r as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_fill_thresholds() {
        let spec = ScenarioSpec::new(SystemConfig::new(4, 1)).validate().unwrap();
        assert_eq!(spec.system.prepare_commit_threshold, Some(2));
        assert_eq!(spec.system.reply_threshold, Some(3));
        assert_eq!(spec.transport, TransportSpec::udp_with_preprepare(1, 1));
        assert!(spec.txn_timeout_ms.unwrap() > 1600.0);
    }

    #[test]
    fn tcp_deadline_covers_retransmissions() {
        let mut spec = ScenarioSpec::new(SystemConfig::new(4, 1));
        assert!(spec.timeout_ms() < 2_000.0);
        spec.transport = TransportSpec::hybrid_tcp_preprepare();
        assert_eq!(spec.timeout_ms(), 10_000.0);
        spec.txn_timeout_ms = Some(500.0);
        assert_eq!(spec.timeout_ms(), 500.0);
    }

    #[test]
    fn rejects_too_few_replicas() {
        let err = SystemConfig::new(3, 1).validate().unwrap_err();
        match err {
            Error::InvalidConfig(v) => assert!(v.iter().any(|m| m.contains("n < 3f+1")), "{v:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reference_system_is_valid() {
        let cfg = SystemConfig::new(20, 6).validate().unwrap();
        assert_eq!(cfg.payload_bytes, 128);
        assert_eq!(cfg.prepare_threshold(), 12);
    }

    #[test]
    fn reports_every_violation() {
        let mut spec = ScenarioSpec::new(SystemConfig::new(3, 1).with_reply_threshold(5));
        spec.requests = 0;
        spec.transport = TransportSpec::udp(0);
        let Err(Error::InvalidConfig(v)) = spec.validate() else { panic!("expected violations") };
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn faulty_count_bounded_by_f() {
        let mut spec = ScenarioSpec::new(SystemConfig::new(4, 1));
        spec.faulty.count = 2;
        assert!(spec.validate().is_err());
        spec.faulty.count = 1;
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn byzantine_rule_reduces_to_two_f_at_minimum_size() {
        for f in 0..6 {
            let n = 3 * f + 1;
            assert_eq!(QuorumRule::Byzantine.threshold(n, f), QuorumRule::TwoF.threshold(n, f));
        }
        assert_eq!(QuorumRule::Byzantine.threshold(6, 1), 3);
    }

    #[test]
    fn ber_mapping_edge_values() {
        assert_eq!(ber_to_packet_success(0.0, 128), 1.0);
        assert_eq!(ber_to_packet_success(1.0, 1), 0.0);
        // (1 - 1e-5)^1024 evaluated with 40-digit arithmetic.
        let p = ber_to_packet_success(1e-5, 128);
        assert!((p - 0.989_812_199_621_498_8).abs() < 1e-13, "{p}");
    }

    #[test]
    fn fec_examples() {
        assert!((fec_effective_success(0.9, 2) - 0.99).abs() < 1e-12);
        assert!((fec_effective_success(0.9, 3) - 0.999).abs() < 1e-12);
        assert_eq!(fec_effective_success(0.0, 5), 0.0);
        assert_eq!(fec_effective_success(0.37, 1), 0.37);
    }

    #[test]
    fn fec_grid_monotone_and_matches_two_copy_identity() {
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let two = fec_effective_success(p, 2);
            assert!((two - (2.0 * p - p * p)).abs() < 1e-12);
            for r in 1..5 {
                assert!(fec_effective_success(p, r) <= fec_effective_success(p, r + 1));
                if i < 10 {
                    let q = (i + 1) as f64 / 10.0;
                    assert!(fec_effective_success(p, r) <= fec_effective_success(q, r));
                }
            }
        }
    }

    #[test]
    fn scenario_file_rejects_unknown_keys() {
        let text = "[system]\nn = 4\nf = 1\nreplys = 3\n";
        assert!(matches!(ScenarioSpec::from_toml_str(text), Err(Error::ScenarioFormat(_))));
        let text = "requets = 10\n[system]\nn = 4\nf = 1\n";
        assert!(ScenarioSpec::from_toml_str(text).is_err());
        let text = "[system]\nn = 4\nf = 1\n[channel.loss]\nmodel = \"packet_success\"\np = 0.9\nq = 1\n";
        assert!(ScenarioSpec::from_toml_str(text).is_err());
    }

    #[test]
    fn scenario_file_full_form() {
        let text = r#"
requests = 50
repetitions = 4
seed = 7

[system]
n = 6
f = 1
quorum_rule = "byzantine"

[channel]
bandwidth_bps = 1e8
[channel.loss]
model = "bit_error_rate"
ber = 2e-5
[channel.delay]
model = "truncated_normal"
mean_ms = 20.0
std_ms = 5.0

[transport]
kind = "hybrid"
[transport.preprepare]
kind = "tcp"
max_retx = 12
[transport.other]
kind = "udp"
repeats = 2

[faulty]
count = 1
behavior = "silent"
"#;
        let spec = ScenarioSpec::from_toml_str(text).unwrap().validate().unwrap();
        assert_eq!(spec.system.prepare_threshold(), 3);
        assert_eq!(spec.transport.for_phase(Phase::Commit), PhaseTransport::Udp { repeats: 2 });
        assert!(matches!(spec.transport.for_phase(Phase::PrePrepare), PhaseTransport::Tcp(_)));
        let again = ScenarioSpec::from_toml_str(&spec.to_toml_string()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn segments_split_with_short_tail() {
        let tcp = TcpParams { mss_bytes: 50, ..TcpParams::default() };
        assert_eq!(tcp.segment_sizes(128), vec![50, 50, 28]);
        assert_eq!(tcp.segment_count(100), 2);
        assert_eq!(TcpParams::default().segment_sizes(128), vec![128]);
    }

    proptest! {
        #[test]
        fn ber_mapping_nonincreasing(ber in 0.0f64..1.0, d in 0.0f64..0.5, bytes in 1u64..4000, extra in 0u64..100) {
            let b2 = (ber + d).min(1.0);
            prop_assert!(ber_to_packet_success(b2, bytes) <= ber_to_packet_success(ber, bytes));
            prop_assert!(ber_to_packet_success(ber, bytes + extra) <= ber_to_packet_success(ber, bytes));
        }

        #[test]
        fn validate_is_idempotent(f in 0u32..5, extra in 0u32..4, reply_low in any::<bool>(),
                                  repeats in 1u32..4, rpp in proptest::option::of(1u32..4),
                                  rule in prop_oneof![Just(QuorumRule::TwoF), Just(QuorumRule::Byzantine)]) {
            let mut system = SystemConfig::new(3 * f + 1 + extra, f).with_quorum_rule(rule);
            if reply_low { system = system.with_reply_threshold(f + 1); }
            let mut spec = ScenarioSpec::new(system);
            spec.transport = TransportSpec::Udp { repeats, repeats_preprepare: rpp };
            let once = spec.validate().unwrap();
            prop_assert_eq!(once.validate().unwrap(), once);
        }
    }
}
