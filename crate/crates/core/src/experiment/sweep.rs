use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analytic::{summarize_scenario, PrePrepareQuorum};
use crate::config::{LossModel, PhaseTransport, ScenarioSpec, TransportSpec};
use crate::error::{Error, Result};
use crate::netsim;

use super::stats::{mean, percentile, wilson_interval, Z_95};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Per-link bit error rate.
    Ber,
    /// End-to-end datagram loss; each of the two links keeps `sqrt(1 - L)`.
    PacketLoss,
    /// Send count of every message.
    Repeats,
    /// Replica count at fixed `f`.
    N,
    /// Send count of PRE-PREPARE only.
    RPp,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] =
        [SweepAxis::Ber, SweepAxis::PacketLoss, SweepAxis::Repeats, SweepAxis::N, SweepAxis::RPp];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Ber => "ber",
            SweepAxis::PacketLoss => "packet_loss",
            SweepAxis::Repeats => "repeats",
            SweepAxis::N => "n",
            SweepAxis::RPp => "r_pp",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ScenarioSpec, value: f64) -> Result<ScenarioSpec> {
        let mut spec = base.clone();
        match self {
            SweepAxis::Ber => spec.channel.loss = LossModel::BitErrorRate { ber: value },
            SweepAxis::PacketLoss => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::invalid(format!("packet loss {value} outside [0,1]")));
                }
                spec.channel.loss = LossModel::PacketSuccess { p: (1.0 - value).sqrt() };
            }
            SweepAxis::Repeats => {
                let r = count(self, value)?;
                spec.transport = match base.transport {
                    TransportSpec::Udp { .. } => TransportSpec::udp(r),
                    TransportSpec::Hybrid { preprepare, other: PhaseTransport::Udp { .. } } => {
                        TransportSpec::Hybrid { preprepare, other: PhaseTransport::Udp { repeats: r } }
                    }
                    _ => return Err(Error::invalid("repeats axis needs datagram transport")),
                };
            }
            SweepAxis::N => spec.system.n = count(self, value)?,
            SweepAxis::RPp => {
                let r_pp = count(self, value)?;
                spec.transport = match base.transport {
                    TransportSpec::Udp { repeats, .. } => TransportSpec::udp_with_preprepare(repeats, r_pp),
                    TransportSpec::Hybrid { other, preprepare: PhaseTransport::Udp { .. } } => {
                        TransportSpec::Hybrid { preprepare: PhaseTransport::Udp { repeats: r_pp }, other }
                    }
                    _ => return Err(Error::invalid("r_pp axis needs datagram PRE-PREPARE")),
                };
            }
        }
        Ok(spec)
    }
}

fn count(axis: SweepAxis, value: f64) -> Result<u32> {
    if value.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&value) {
        return Err(Error::invalid(format!("{} must be a whole number, got {value}", axis.name())));
    }
    Ok(value as u32)
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown axis {s:?}; expected one of ber, packet_loss, repeats, n, r_pp"))
    }
}

/// One operating point: simulation statistics beside the model.
/// `None` is an empty CSV cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRow {
    pub scenario_id: String,
    pub axis_name: String,
    pub axis_value: f64,
    pub packet_loss_effective: Option<f64>,
    pub success_rate: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub latency_mean_ms: Option<f64>,
    pub latency_p50_ms: Option<f64>,
    pub latency_p95_ms: Option<f64>,
    pub msgs_per_txn: Option<f64>,
    pub model_p_succ: Option<f64>,
    pub model_expected_replies: Option<f64>,
    pub model_lower_bound: Option<f64>,
    pub switch_to_tcp: Option<bool>,
    /// Why the point could not be evaluated. Not part of the CSV.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioResult {
    pub rows: Vec<SweepRow>,
}

impl ScenarioResult {
    pub fn extend(&mut self, other: ScenarioResult) {
        self.rows.extend(other.rows);
    }

    pub fn errors(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }
}

/// Simulates a validated spec and fills every column except the axis.
pub fn evaluate_point(spec: &ScenarioSpec) -> Result<SweepRow> {
    let spec = spec.validate()?;
    let records = netsim::run(&spec)?;
    let trials = records.len() as u64;
    let successes = records.iter().filter(|r| r.success).count() as u64;
    let (ci_low, ci_high) = wilson_interval(successes, trials, Z_95);
    let mut latencies: Vec<f64> = records.iter().filter_map(|r| r.latency_ms()).collect();
    latencies.sort_by(f64::total_cmp);
    let msgs: Vec<f64> = records.iter().map(|r| r.total_messages() as f64).collect();

    let model = summarize_scenario(&spec, PrePrepareQuorum::IncludingPrimary);
    Ok(SweepRow {
        packet_loss_effective: Some(model.packet_loss),
        success_rate: Some(successes as f64 / trials as f64),
        ci_low: Some(ci_low),
        ci_high: Some(ci_high),
        latency_mean_ms: mean(&latencies),
        latency_p50_ms: percentile(&latencies, 0.5),
        latency_p95_ms: percentile(&latencies, 0.95),
        msgs_per_txn: mean(&msgs),
        model_p_succ: Some(model.p_succ),
        model_expected_replies: Some(model.expected_replies),
        model_lower_bound: model.lower_bound,
        switch_to_tcp: Some(model.switch_to_tcp),
        ..SweepRow::default()
    })
}

/// Seed of sweep point `index`.
pub fn point_seed(base_seed: u64, index: usize) -> u64 {
    base_seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One row per value, in the order given. Points that fail validation
/// become rows carrying only the axis value and the error.
pub fn sweep(scenario_id: &str, base: &ScenarioSpec, axis: SweepAxis, values: &[f64]) -> ScenarioResult {
    let rows = values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let evaluated = axis.apply(base, value).and_then(|mut spec| {
                spec.seed = point_seed(base.seed, i);
                evaluate_point(&spec)
            });
            let mut row = evaluated.unwrap_or_else(|e| SweepRow { error: Some(e.to_string()), ..SweepRow::default() });
            row.scenario_id = scenario_id.to_string();
            row.axis_name = axis.name().to_string();
            row.axis_value = value;
            row
        })
        .collect();
    ScenarioResult { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;

    fn small() -> ScenarioSpec {
        let mut spec = ScenarioSpec::new(SystemConfig::new(4, 1));
        spec.requests = 20;
        spec.repetitions = 3;
        spec
    }

    #[test]
    fn axis_names_round_trip() {
        for axis in SweepAxis::ALL {
            assert_eq!(axis.name().parse::<SweepAxis>().unwrap(), axis);
        }
        assert!("loss".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn packet_loss_axis_sets_end_to_end_loss() {
        let spec = SweepAxis::PacketLoss.apply(&small(), 0.19).unwrap();
        assert!((spec.channel.path_success(128) - 0.81).abs() < 1e-12);
        assert!(SweepAxis::PacketLoss.apply(&small(), 1.5).is_err());
    }

    #[test]
    fn count_axes_reject_fractions_and_wrong_transport() {
        assert!(SweepAxis::Repeats.apply(&small(), 1.5).is_err());
        let mut tcp = small();
        tcp.transport = TransportSpec::tcp();
        assert!(SweepAxis::Repeats.apply(&tcp, 2.0).is_err());
        assert!(SweepAxis::RPp.apply(&tcp, 2.0).is_err());
        let spec = SweepAxis::RPp.apply(&small(), 3.0).unwrap();
        assert_eq!(spec.transport, TransportSpec::udp_with_preprepare(1, 3));
    }

    #[test]
    fn invalid_points_are_reported_per_row() {
        let result = sweep("t", &small(), SweepAxis::N, &[4.0, 3.0, 5.0]);
        assert_eq!(result.rows.len(), 3);
        assert!(result.rows[0].error.is_none() && result.rows[2].error.is_none());
        let bad = &result.rows[1];
        assert!(bad.error.as_deref().unwrap().contains("n < 3f+1"));
        assert_eq!(bad.axis_value, 3.0);
        assert!(bad.success_rate.is_none());
    }

    #[test]
    fn lossless_point() {
        let row = &sweep("t", &small(), SweepAxis::PacketLoss, &[0.0]).rows[0];
        assert_eq!(row.success_rate, Some(1.0));
        assert_eq!(row.model_p_succ, Some(1.0));
        assert_eq!(row.switch_to_tcp, Some(false));
        assert!(row.ci_low.unwrap() < 1.0 && row.ci_high == Some(1.0));
    }
}
