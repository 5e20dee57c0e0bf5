//! Datagram and simplified reliable delivery of one message over a route.

use rand::Rng;

use crate::config::{TcpParams, INITIAL_RTO_MS, MAX_RTO_MS};
use crate::pbft::SimTime;

use super::link::{ms_to_us, traverse_route, Link};

/// Arrival times of the `copies` datagrams that survive, in send order.
/// Copies leave back to back, one serialization time apart.
pub fn transmit_udp<R: Rng + ?Sized>(
    route: &[&Link],
    payload_bytes: u32,
    copies: u32,
    now: SimTime,
    rng: &mut R,
) -> Vec<SimTime> {
    assert!(copies >= 1, "at least one copy");
    let spacing = ms_to_us(route[0].channel.serialization_ms(payload_bytes));
    (0..copies)
        .filter_map(|i| {
            let depart = now + i as SimTime * spacing;
            traverse_route(route, payload_bytes, rng).map(|d| depart + d)
        })
        .collect()
}

/// Retransmission timing of a connection with fixed initial RTO and
/// exponential backoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TcpEndpointModel {
    pub params: TcpParams,
    pub initial_rto_ms: f64,
    pub max_rto_ms: f64,
}

impl TcpEndpointModel {
    pub fn new(params: TcpParams) -> Self {
        TcpEndpointModel { params, initial_rto_ms: INITIAL_RTO_MS, max_rto_ms: MAX_RTO_MS }
    }

    /// Timeout armed after attempt `attempt` (0-based).
    pub fn rto_us(&self, attempt: u32) -> SimTime {
        let ms = self.initial_rto_ms * 2f64.powi(attempt.min(63) as i32);
        ms_to_us(ms.min(self.max_rto_ms))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TcpOutcome {
    /// Every segment arrived; the message is complete at `at`.
    Delivered { at: SimTime },
    /// Some segment used up its retransmissions; its last timer fires at `at`.
    Abandoned { at: SimTime },
    /// The sender stopped before deciding because `give_up` passed.
    Expired,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TcpDelivery {
    pub outcome: TcpOutcome,
    /// Data segments put on the wire, retransmissions included.
    pub transmissions: u32,
}

enum SegmentResult {
    Done(SimTime),
    Abandoned(SimTime),
    Expired,
}

/// Sends one message as `ceil(bytes / mss)` segments. An attempt counts only
/// if both the segment and its ACK survive; otherwise the segment is resent
/// when the RTO fires. The receiver holds a segment from its first arrival.
/// No attempt is started after `give_up`.
pub fn transmit_tcp<R: Rng + ?Sized>(
    model: &TcpEndpointModel,
    forward: &[&Link],
    reverse: &[&Link],
    payload_bytes: u32,
    now: SimTime,
    give_up: SimTime,
    rng: &mut R,
) -> TcpDelivery {
    let mut transmissions = 0;
    let mut depart = now;
    let mut complete = now;
    let mut abandoned: Option<SimTime> = None;
    let mut expired = false;
    for bytes in model.params.segment_sizes(payload_bytes) {
        let result = send_segment(model, forward, reverse, bytes, depart, give_up, &mut transmissions, rng);
        match result {
            SegmentResult::Done(at) => complete = complete.max(at),
            SegmentResult::Abandoned(at) => abandoned = Some(abandoned.map_or(at, |a: SimTime| a.min(at))),
            SegmentResult::Expired => expired = true,
        }
        depart += ms_to_us(forward[0].channel.serialization_ms(bytes));
    }
    let outcome = match (abandoned, expired) {
        (Some(at), _) => TcpOutcome::Abandoned { at },
        (None, true) => TcpOutcome::Expired,
        (None, false) => TcpOutcome::Delivered { at: complete },
    };
    TcpDelivery { outcome, transmissions }
}

#[allow(clippy::too_many_arguments)]
fn send_segment<R: Rng + ?Sized>(
    model: &TcpEndpointModel,
    forward: &[&Link],
    reverse: &[&Link],
    bytes: u32,
    start: SimTime,
    give_up: SimTime,
    transmissions: &mut u32,
    rng: &mut R,
) -> SegmentResult {
    let mut send_at = start;
    let mut first_arrival: Option<SimTime> = None;
    for attempt in 0..=model.params.max_retx {
        if send_at > give_up {
            return SegmentResult::Expired;
        }
        *transmissions += 1;
        let data = traverse_route(forward, bytes, rng);
        if let Some(d) = data {
            first_arrival.get_or_insert(send_at + d);
        }
        let ack = match model.params.ack_success {
            Some(p) => rng.random::<f64>() < p,
            None => traverse_route(reverse, bytes, rng).is_some(),
        };
        if data.is_some() && ack {
            return SegmentResult::Done(first_arrival.expect("data arrived"));
        }
        let rto = model.rto_us(attempt);
        if attempt == model.params.max_retx {
            return SegmentResult::Abandoned(send_at + rto);
        }
        send_at += rto;
    }
    unreachable!("loop returns on its last attempt")
}
