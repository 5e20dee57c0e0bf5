//! Closed-form transaction success for PBFT view consensus over channels
//! with independent message loss.
//!
//! Everything here is a pure function of its inputs. The entry points take
//! a [`SystemConfig`] and a [`MessageSuccessModel`]; the scenario helpers at
//! the bottom derive that model from a full [`ScenarioSpec`] so the
//! simulator and the model can be evaluated at the same operating point.

mod binomial;
mod joint;
mod tcp;

pub use binomial::{binomial_pmf, binomial_tail};
pub use joint::{Acceptance, JointPhaseDistribution, PhaseProbabilities, PrePrepareQuorum};
pub use tcp::{
    message_count, preprepare_retx_overhead, quorum_acceptance_distribution, required_retransmissions, retx_success,
    retx_success_series, tcp_expected_replies_bound, tcp_message_success, tcp_segment_success, SegmentSuccess,
};

use crate::config::{fec_effective_success, ChannelSpec, Phase, PhaseTransport, ScenarioSpec, SystemConfig};
use crate::error::{Error, Result};

use binomial::{check_probability, LnFactorials};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelTransport {
    /// `p_msg` is the datagram success after any repetition.
    Udp,
    Tcp {
        /// Per-attempt success of a full-size segment (segment and ACK).
        p_segment: f64,
        /// Per-attempt success of the final, possibly shorter, segment.
        p_last_segment: f64,
        max_retx: u32,
        segment_count: u32,
    },
}

/// Probability that one protocol message reaches its destination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MessageSuccessModel {
    transport: ModelTransport,
    p_msg: f64,
}

impl MessageSuccessModel {
    pub fn udp(p_msg: f64) -> Self {
        check_probability(p_msg);
        MessageSuccessModel { transport: ModelTransport::Udp, p_msg }
    }

    /// `u - 1` segments at `p_segment` and a last one at `p_last_segment`.
    pub fn tcp(p_segment: f64, p_last_segment: f64, max_retx: u32, segment_count: u32) -> Self {
        assert!(segment_count >= 1, "a message has at least one segment");
        check_probability(p_segment);
        check_probability(p_last_segment);
        let full = vec![p_segment; segment_count as usize - 1];
        let mut segments = full;
        segments.push(p_last_segment);
        MessageSuccessModel {
            transport: ModelTransport::Tcp { p_segment, p_last_segment, max_retx, segment_count },
            p_msg: tcp_message_success(&segments, max_retx),
        }
    }

    pub fn p_msg(&self) -> f64 {
        self.p_msg
    }

    pub fn transport(&self) -> ModelTransport {
        self.transport
    }
}

pub fn joint_pmf(cfg: &SystemConfig, msg: &MessageSuccessModel) -> JointPhaseDistribution {
    JointPhaseDistribution::compute(cfg, msg.into())
}

/// `P(S >= reply, J >= 2f+1, K >= 2f+1, M >= 2f+1)`.
pub fn success_probability(cfg: &SystemConfig, msg: &MessageSuccessModel) -> f64 {
    joint_pmf(cfg, msg).success_probability(&Acceptance::for_config(cfg))
}

/// Expected replies over transactions in which every phase reaches `2f+1`.
pub fn expected_replies(cfg: &SystemConfig, msg: &MessageSuccessModel) -> f64 {
    joint_pmf(cfg, msg).expected_replies(&Acceptance::for_config(cfg))
}

/// Cheap lower bound on [`expected_replies`]:
/// `p^2 n sum_{m=0}^{n-2} C(n-2,m) p^m (1-p)^(n-2-m) T(m+1)^(2n+2)`.
pub fn expected_replies_lower_bound(cfg: &SystemConfig, msg: &MessageSuccessModel) -> Result<f64> {
    if cfg.f == 0 {
        return Err(Error::FaultBoundTooSmall);
    }
    let n = cfg.n;
    if n < 3 * cfg.f + 1 {
        return Err(Error::invalid(format!("n < 3f+1 (n={n}, f={})", cfg.f)));
    }
    let p = msg.p_msg();
    let threshold = cfg.prepare_threshold();
    let lf = LnFactorials::up_to(n);
    let sum: f64 = (0..=n - 2).map(|m| lf.pmf(m, n - 2, p) * lf.tail(threshold, m + 1, p).powi(2 * n as i32 + 2)).sum();
    Ok(p * p * n as f64 * sum)
}

/// Recommends leaving datagrams once fewer than `2f + 1` replies are
/// expected.
pub fn transport_switch_recommended(cfg: &SystemConfig, msg: &MessageSuccessModel) -> bool {
    expected_replies(cfg, msg) < cfg.phase_quorum() as f64
}

/// [`transport_switch_recommended`] evaluated on the lower bound. It can
/// recommend switching where the exact rule would not, never the reverse.
pub fn transport_switch_recommended_fast(cfg: &SystemConfig, msg: &MessageSuccessModel) -> Result<bool> {
    Ok(expected_replies_lower_bound(cfg, msg)? < cfg.phase_quorum() as f64)
}

/// Message model for one phase of a scenario, including repetition and
/// retransmission.
pub fn phase_message_model(
    channel: &ChannelSpec,
    payload_bytes: u32,
    transport: PhaseTransport,
) -> MessageSuccessModel {
    match transport {
        PhaseTransport::Udp { repeats } => {
            MessageSuccessModel::udp(fec_effective_success(channel.path_success(payload_bytes), repeats))
        }
        PhaseTransport::Tcp(params) => {
            let sizes = params.segment_sizes(payload_bytes);
            let attempt = |bytes: u32| tcp_segment_success(channel.path_success(bytes), params.ack_success);
            MessageSuccessModel::tcp(
                attempt(sizes[0]),
                attempt(*sizes.last().unwrap()),
                params.max_retx,
                sizes.len() as u32,
            )
        }
    }
}

pub fn scenario_phase_probabilities(spec: &ScenarioSpec) -> PhaseProbabilities {
    let p =
        |phase| phase_message_model(&spec.channel, spec.system.payload_bytes, spec.transport.for_phase(phase)).p_msg();
    PhaseProbabilities { preprepare: p(Phase::PrePrepare), exchange: p(Phase::Prepare), reply: p(Phase::Reply) }
}

/// Joint distribution for a scenario. Silent replicas never send, so they
/// are dropped from the replica set; thresholds are unchanged.
pub fn scenario_joint_pmf(spec: &ScenarioSpec) -> JointPhaseDistribution {
    let n_active = spec.system.n - spec.faulty.count;
    JointPhaseDistribution::compute_raw(
        n_active,
        spec.system.f,
        spec.system.prepare_threshold(),
        scenario_phase_probabilities(spec),
    )
}

/// Model columns reported next to a simulated operating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSummary {
    /// Datagram loss on one end-to-end path, before repetition.
    pub packet_loss: f64,
    pub p_succ: f64,
    pub expected_replies: f64,
    /// `None` when `f = 0`, where the bound does not apply.
    pub lower_bound: Option<f64>,
    pub switch_to_tcp: bool,
}

pub fn summarize_scenario(spec: &ScenarioSpec, preprepare: PrePrepareQuorum) -> ModelSummary {
    let joint = scenario_joint_pmf(spec);
    let acc = Acceptance::for_config(&spec.system).with_preprepare(preprepare);
    let expected = joint.expected_replies(&acc);
    let exchange = MessageSuccessModel::udp(scenario_phase_probabilities(spec).exchange);
    let active =
        SystemConfig { n: joint.n(), prepare_commit_threshold: Some(joint.threshold()), ..spec.system.clone() };
    ModelSummary {
        packet_loss: 1.0 - spec.channel.path_success(spec.system.payload_bytes),
        p_succ: joint.success_probability(&acc),
        expected_replies: expected,
        lower_bound: expected_replies_lower_bound(&active, &exchange).ok(),
        switch_to_tcp: expected < spec.system.phase_quorum() as f64,
    }
}
