use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ChannelSpec, DelayModel};
use crate::pbft::{Destination, NodeId, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Replica(NodeId),
    Client,
    Router,
}

impl From<Destination> for Endpoint {
    fn from(d: Destination) -> Self {
        match d {
            Destination::Replica(id) => Endpoint::Replica(id),
            Destination::Client => Endpoint::Client,
        }
    }
}

pub fn ms_to_us(ms: f64) -> SimTime {
    (ms * 1e3).round() as SimTime
}

/// Normal(mean, std) conditioned on `>= 0`, by rejection.
pub fn sample_delay_ms<R: Rng + ?Sized>(delay: &DelayModel, rng: &mut R) -> f64 {
    match *delay {
        DelayModel::Deterministic { ms } => ms,
        DelayModel::TruncatedNormal { mean_ms, std_ms } => {
            if std_ms == 0.0 {
                return mean_ms;
            }
            let normal = Normal::new(mean_ms, std_ms).expect("validated delay parameters");
            loop {
                let x = normal.sample(rng);
                if x >= 0.0 {
                    return x;
                }
            }
        }
    }
}

/// A full-duplex link; both directions behave identically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub endpoint_a: Endpoint,
    pub endpoint_b: Endpoint,
    pub channel: ChannelSpec,
}

impl Link {
    /// One frame crossing the link: `Some(serialization + propagation)` in
    /// microseconds, or `None` if it is lost.
    pub fn traverse<R: Rng + ?Sized>(&self, payload_bytes: u32, rng: &mut R) -> Option<SimTime> {
        let p = self.channel.link_success(payload_bytes);
        // Draw unconditionally so the random stream does not depend on p.
        let survives = rng.random::<f64>() < p;
        let delay_ms = self.channel.serialization_ms(payload_bytes) + sample_delay_ms(&self.channel.delay, rng);
        survives.then(|| ms_to_us(delay_ms))
    }
}

/// Replicas and the client, each attached to one router.
#[derive(Clone, Debug)]
pub struct StarTopology {
    replicas: Vec<Link>,
    client: Link,
}

impl StarTopology {
    pub fn new(n: u32, channel: ChannelSpec) -> Self {
        let link = |e| Link { endpoint_a: e, endpoint_b: Endpoint::Router, channel };
        StarTopology { replicas: (0..n).map(|i| link(Endpoint::Replica(i))).collect(), client: link(Endpoint::Client) }
    }

    pub fn access_link(&self, e: Endpoint) -> &Link {
        match e {
            Endpoint::Replica(id) => &self.replicas[id as usize],
            Endpoint::Client => &self.client,
            Endpoint::Router => panic!("the router has no access link"),
        }
    }

    /// Sender's link, then the receiver's.
    pub fn route(&self, from: Endpoint, to: Endpoint) -> [&Link; 2] {
        [self.access_link(from), self.access_link(to)]
    }
}

/// Sum of per-link delays, or `None` if any link drops the frame. Every link
/// is sampled even after a loss.
pub fn traverse_route<R: Rng + ?Sized>(route: &[&Link], payload_bytes: u32, rng: &mut R) -> Option<SimTime> {
    let mut total = Some(0);
    for link in route {
        let hop = link.traverse(payload_bytes, rng);
        total = total.zip(hop).map(|(a, b)| a + b);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LossModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn truncated_normal_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = DelayModel::TruncatedNormal { mean_ms: 1.0, std_ms: 5.0 };
        assert!((0..10_000).all(|_| sample_delay_ms(&d, &mut rng) >= 0.0));
    }

    #[test]
    fn truncated_normal_mean_is_shifted_up_not_clipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = DelayModel::TruncatedNormal { mean_ms: 0.0, std_ms: 1.0 };
        let trials = 200_000;
        let mean = (0..trials).map(|_| sample_delay_ms(&d, &mut rng)).sum::<f64>() / trials as f64;
        // Half-normal mean sqrt(2/pi); clipping at zero would give half of it.
        let want = (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - want).abs() < 0.01, "{mean}");
    }

    #[test]
    fn delay_includes_serialization() {
        let channel = ChannelSpec {
            loss: LossModel::PacketSuccess { p: 1.0 },
            delay: DelayModel::Deterministic { ms: 20.0 },
            bandwidth_bps: 1e6,
            header_bytes: 0,
        };
        let topo = StarTopology::new(4, channel);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // 125 bytes at 1 Mbps take 1 ms per link.
        let t = traverse_route(&topo.route(Endpoint::Replica(0), Endpoint::Client), 125, &mut rng);
        assert_eq!(t, Some(42_000));
    }
}
