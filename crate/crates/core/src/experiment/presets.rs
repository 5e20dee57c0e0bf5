//! Named sweeps behind `figures`.
//!
//! All presets share the reference setup: 128-byte messages, 100 Mbps links
//! with TN(20 ms, 5 ms) delay, single-copy UDP, 100 requests x 20
//! repetitions per point. The BER presets use 0..13e-5 in steps of 1e-5.
//! The others sweep end-to-end packet loss over 0, 0.025, ..., 0.30; that
//! grid is our choice, not a published one.

use crate::config::{QuorumRule, ScenarioSpec, SystemConfig, TcpParams, TransportSpec};

use super::sweep::{sweep, ScenarioResult, SweepAxis};

pub fn reference_setup(n: u32, f: u32) -> ScenarioSpec {
    ScenarioSpec::new(SystemConfig::new(n, f))
}

pub fn ber_grid() -> Vec<f64> {
    (0..=13).map(|i| i as f64 / 1e5).collect()
}

pub fn packet_loss_grid() -> Vec<f64> {
    (0..=12).map(|i| i as f64 * 25.0 / 1000.0).collect()
}

#[derive(Clone, Debug)]
pub struct PresetLine {
    pub id: String,
    pub base: ScenarioSpec,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FigurePreset {
    pub name: &'static str,
    pub about: &'static str,
    pub lines: Vec<PresetLine>,
}

pub const PRESET_NAMES: [&str; 7] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "faults"];

fn line(id: impl Into<String>, base: ScenarioSpec, axis: SweepAxis, values: Vec<f64>) -> PresetLine {
    PresetLine { id: id.into(), base, axis, values }
}

fn redundancy(prefix: &str, transport: TransportSpec) -> Vec<PresetLine> {
    (4..=8)
        .map(|n| {
            let mut base = reference_setup(n, 1);
            base.system.quorum_rule = QuorumRule::Byzantine;
            base.transport = transport;
            line(format!("{prefix}-n{n}"), base, SweepAxis::PacketLoss, packet_loss_grid())
        })
        .collect()
}

pub fn preset(name: &str) -> Option<FigurePreset> {
    let (about, lines) = match name {
        "fig2" => (
            "n=20, f=6 success rate against the model over the BER grid",
            vec![line("fig2", reference_setup(20, 6), SweepAxis::Ber, ber_grid())],
        ),
        "fig3" => (
            "n=20, f=6 expected replies and their lower bound over the BER grid",
            vec![line("fig3", reference_setup(20, 6), SweepAxis::Ber, ber_grid())],
        ),
        "fig4" => (
            "n=4, f=1 with every message sent 1, 2 or 3 times",
            (1..=3)
                .map(|r| {
                    let mut base = reference_setup(4, 1);
                    base.transport = TransportSpec::udp(r);
                    line(format!("fig4-r{r}"), base, SweepAxis::PacketLoss, packet_loss_grid())
                })
                .collect(),
        ),
        "fig5" => ("f=1, n=4..8 over UDP with the (n+f)/2 quorum", redundancy("fig5", TransportSpec::udp(1))),
        "fig6" => (
            "f=1, n=4..8 over TCP with 12 retransmissions and the (n+f)/2 quorum",
            redundancy("fig6", TransportSpec::Tcp(TcpParams::default())),
        ),
        "fig7" => (
            "f=1, n=4..6 with PRE-PREPARE sent 1, 2 or 3 times",
            (4..=6)
                .flat_map(|n| {
                    (1..=3).map(move |r_pp| {
                        let mut base = reference_setup(n, 1);
                        base.system.quorum_rule = QuorumRule::Byzantine;
                        base.transport = TransportSpec::udp_with_preprepare(1, r_pp);
                        line(format!("fig7-n{n}-pp{r_pp}"), base, SweepAxis::PacketLoss, packet_loss_grid())
                    })
                })
                .collect(),
        ),
        "faults" => (
            "n=3f+1 for f=1, 2, 3, 6",
            [1, 2, 3, 6]
                .into_iter()
                .map(|f| {
                    line(
                        format!("faults-f{f}"),
                        reference_setup(3 * f + 1, f),
                        SweepAxis::PacketLoss,
                        packet_loss_grid(),
                    )
                })
                .collect(),
        ),
        _ => return None,
    };
    Some(FigurePreset { name: PRESET_NAMES.into_iter().find(|&p| p == name)?, about, lines })
}

/// Overrides applied to every line of a preset.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub requests: Option<u32>,
    pub repetitions: Option<u32>,
}

impl FigurePreset {
    /// Lines in order; line `i` is seeded from `seed ^ ((i + 1) << 32)`.
    pub fn run(&self, overrides: RunOverrides) -> ScenarioResult {
        let mut out = ScenarioResult::default();
        for (i, l) in self.lines.iter().enumerate() {
            let mut base = l.base.clone();
            base.seed = overrides.seed.unwrap_or(base.seed) ^ ((i as u64 + 1) << 32);
            base.requests = overrides.requests.unwrap_or(base.requests);
            base.repetitions = overrides.repetitions.unwrap_or(base.repetitions);
            out.extend(sweep(&l.id, &base, l.axis, &l.values));
        }
        out
    }
}
