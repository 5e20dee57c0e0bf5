mod support;

use lossy_pbft::analytic::retx_success;
use lossy_pbft::config::{
    fec_effective_success, ChannelSpec, DelayModel, LossModel, ScenarioSpec, SystemConfig, TcpParams, TransportSpec,
};
use lossy_pbft::netsim::{
    self, transmit_tcp, transmit_udp, Endpoint, Link, StarTopology, TcpEndpointModel, TcpOutcome,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn channel(p: f64) -> ChannelSpec {
    ChannelSpec { loss: LossModel::PacketSuccess { p }, ..ChannelSpec::default() }
}

fn within(freq: f64, p: f64, trials: u32, sigmas: f64) -> bool {
    (freq - p).abs() <= sigmas * (p * (1.0 - p) / trials as f64).sqrt()
}

#[test]
fn duplicated_datagram_frequency() {
    let link = Link { endpoint_a: Endpoint::Replica(0), endpoint_b: Endpoint::Router, channel: channel(0.9) };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials = 100_000;
    let hits = (0..trials).filter(|_| !transmit_udp(&[&link], 128, 2, 0, &mut rng).is_empty()).count();
    let freq = hits as f64 / trials as f64;
    let want = fec_effective_success(0.9, 2);
    assert!((want - 0.99).abs() < 1e-12);
    assert!(within(freq, want, trials, 3.0), "{freq}");
}

#[test]
fn reliable_delivery_frequency() {
    let topo = StarTopology::new(2, channel(0.95));
    let fwd = topo.route(Endpoint::Replica(0), Endpoint::Replica(1));
    let rev = topo.route(Endpoint::Replica(1), Endpoint::Replica(0));
    let model = TcpEndpointModel::new(TcpParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trials = 100_000;
    let delivered = (0..trials)
        .filter(|_| {
            let d = transmit_tcp(&model, &fwd, &rev, 128, 0, u64::MAX, &mut rng);
            matches!(d.outcome, TcpOutcome::Delivered { .. })
        })
        .count();
    let freq = delivered as f64 / trials as f64;
    let p_end: f64 = 0.95 * 0.95;
    let floor = retx_success(p_end * p_end, 12);
    assert!(freq >= floor - 3.0 * (floor * (1.0 - floor) / trials as f64).sqrt(), "{freq} < {floor}");
}

#[test]
fn deterministic_delay_latency_identity() {
    let mut spec = ScenarioSpec::new(SystemConfig::new(7, 2));
    spec.channel.delay = DelayModel::Deterministic { ms: 20.0 };
    spec.requests = 5;
    spec.repetitions = 1;
    let ser_us = (spec.channel.serialization_ms(spec.system.payload_bytes) * 1000.0).round() as u64;
    for r in netsim::run(&spec).unwrap() {
        assert_eq!(r.latency_us, Some(4 * 2 * (20_000 + ser_us)));
    }
}

#[test]
fn zero_loss_message_counts() {
    for (r, r_pp) in [(1, 1), (2, 3)] {
        let mut spec = ScenarioSpec::new(SystemConfig::new(4, 1));
        spec.transport = TransportSpec::udp_with_preprepare(r, r_pp);
        spec.requests = 5;
        spec.repetitions = 1;
        for rec in netsim::run(&spec).unwrap() {
            let (n, r, r_pp) = (4u64, r as u64, r_pp as u64);
            assert_eq!(rec.messages, [(n - 1) * r_pp, n * (n - 1) * r, n * (n - 1) * r, n * r]);
        }
    }
}

fn point(loss: f64, transport: TransportSpec, seed: u64) -> (f64, f64) {
    let mut spec = support::lossy(4, 1, loss);
    spec.transport = transport;
    spec.requests = 100;
    spec.repetitions = 6;
    spec.seed = seed;
    let records = netsim::run(&spec).unwrap();
    let lat: Vec<f64> = records.iter().filter_map(|r| r.latency_ms()).collect();
    (support::success_rate(&records), lat.iter().sum::<f64>() / lat.len().max(1) as f64)
}

#[test]
fn reliable_transport_dominates_datagrams() {
    for (i, loss) in [0.0, 0.05, 0.1, 0.2, 0.3].into_iter().enumerate() {
        let (udp, udp_lat) = point(loss, TransportSpec::udp(1), i as u64);
        let (tcp, tcp_lat) = point(loss, TransportSpec::Tcp(TcpParams::default()), 100 + i as u64);
        assert!(tcp >= udp, "loss {loss}: {tcp} < {udp}");
        if loss > 0.0 {
            assert!(tcp_lat >= udp_lat, "loss {loss}: {tcp_lat} < {udp_lat}");
        }
    }
}

#[test]
fn reliable_preprepare_dominates_datagrams() {
    for (i, loss) in [0.05, 0.1, 0.2, 0.3].into_iter().enumerate() {
        let (udp, _) = point(loss, TransportSpec::udp(1), i as u64);
        let (hybrid, _) = point(loss, TransportSpec::hybrid_tcp_preprepare(), 100 + i as u64);
        assert!(hybrid >= udp, "loss {loss}: {hybrid} < {udp}");
    }
}
