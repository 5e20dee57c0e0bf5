//! Reliable-transport success, quorum acceptance, and the retransmission
//! budget rules built on them.

use crate::error::{Error, Result};

use super::binomial::{binomial_tail, check_probability, LnFactorials};

/// One attempt succeeds only if both the segment and its ACK get through.
/// `p_ack` defaults to `p_l`, giving `p_l^2`.
pub fn tcp_segment_success(p_l: f64, p_ack: Option<f64>) -> f64 {
    check_probability(p_l);
    let p_ack = p_ack.unwrap_or(p_l);
    check_probability(p_ack);
    p_l * p_ack
}

/// Chance that a segment gets through within `1 + max_retx` attempts:
/// `1 - (1 - p_tx)^(m+1)`.
pub fn retx_success(p_tx: f64, max_retx: u32) -> f64 {
    check_probability(p_tx);
    1.0 - (1.0 - p_tx).powf(max_retx as f64 + 1.0)
}

/// Same quantity as [`retx_success`], summed over the attempt on which the
/// first success happens: `p_tx * sum_{k=0}^{m} (1 - p_tx)^k`.
pub fn retx_success_series(p_tx: f64, max_retx: u32) -> f64 {
    check_probability(p_tx);
    let q = 1.0 - p_tx;
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..=max_retx {
        sum += term;
        term *= q;
    }
    p_tx * sum
}

/// A message split into segments arrives only if every segment does.
pub fn tcp_message_success(p_segments: &[f64], max_retx: u32) -> f64 {
    assert!(!p_segments.is_empty(), "a message has at least one segment");
    p_segments.iter().map(|&p| retx_success(p, max_retx)).product()
}

/// `P(i replicas hear at least 2f of their n-1 peers)` for `i = 0..=n`.
pub fn quorum_acceptance_distribution(n: u32, f: u32, p_msg: f64) -> Vec<f64> {
    check_probability(p_msg);
    assert!(n >= 1);
    let q = binomial_tail(2 * f, n - 1, p_msg);
    LnFactorials::up_to(n).row(n, q)
}

/// Per-attempt success plugged into the retransmission rules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SegmentSuccess {
    /// Segment and ACK: `p_l^2`.
    #[default]
    Tcp,
    /// Fire-and-forget datagram: `p_l`. The resulting count is how many
    /// times each message should be sent.
    Udp,
}

impl SegmentSuccess {
    fn attempt(self, p_l: f64) -> f64 {
        match self {
            SegmentSuccess::Tcp => p_l * p_l,
            SegmentSuccess::Udp => p_l,
        }
    }
}

fn check_fault_range(n: u32, f: u32) -> Result<()> {
    if f == 0 {
        return Err(Error::FaultBoundTooSmall);
    }
    if n < 3 * f + 1 {
        return Err(Error::invalid(format!("n < 3f+1 (n={n}, f={f})")));
    }
    Ok(())
}

/// Transmissions a transaction depends on: `u*n + (2n-2)(n-1)`.
fn message_exponent(n: u32, u: u32) -> f64 {
    let n = n as f64;
    u as f64 * n + (2.0 * n - 2.0) * (n - 1.0)
}

/// Lower bound on expected replies when every transmission gets `1 + r`
/// attempts: `n * (1 - (1 - p)^(r+1))^(u*n + (2n-2)(n-1))`.
pub fn tcp_expected_replies_bound(n: u32, f: u32, u: u32, p_l: f64, r: u32, mode: SegmentSuccess) -> Result<f64> {
    check_fault_range(n, f)?;
    check_probability(p_l);
    assert!(u >= 1, "a message has at least one segment");
    let per_transmission = retx_success(mode.attempt(p_l), r);
    Ok(n as f64 * per_transmission.powf(message_exponent(n, u)))
}

/// Retransmissions that make the bound reach `2f + 1`:
/// `ceil(log_{1-p}(1 - ((2f+1)/n)^(1/E)) - 1)`, clamped at zero.
///
/// The returned `r` always satisfies the bound; if floating-point rounding
/// lands the closed form one short, it is bumped.
pub fn required_retransmissions(n: u32, f: u32, u: u32, p_l: f64, mode: SegmentSuccess) -> Result<u32> {
    check_fault_range(n, f)?;
    check_probability(p_l);
    assert!(u >= 1, "a message has at least one segment");
    if p_l == 0.0 {
        return Err(Error::Unsatisfiable("no transmission can succeed at p_l = 0".into()));
    }
    if p_l == 1.0 {
        return Ok(0);
    }
    let target = (2 * f + 1) as f64;
    let base = 1.0 - mode.attempt(p_l);
    let inner = 1.0 - (target / n as f64).powf(1.0 / message_exponent(n, u));
    let raw = (inner.ln() / base.ln() - 1.0).ceil();
    if raw >= u32::MAX as f64 {
        return Err(Error::Unsatisfiable(format!("p_l = {p_l} needs more than 2^32 retransmissions")));
    }
    let mut r = if raw > 0.0 { raw as u32 } else { 0 };
    while tcp_expected_replies_bound(n, f, u, p_l, r, mode)? < target {
        r += 1;
    }
    Ok(r)
}

/// Messages in one view-consensus round with `r_pp` extra PRE-PREPARE
/// transmissions: `(r_pp + 1) n + 2 n^2 + f + 1`.
pub fn message_count(n: u32, f: u32, r_pp: u32) -> u64 {
    let (n, f, r_pp) = (n as u64, f as u64, r_pp as u64);
    (r_pp + 1) * n + 2 * n * n + f + 1
}

/// Relative message overhead of one PRE-PREPARE retransmission.
pub fn preprepare_retx_overhead(n: u32, f: u32) -> f64 {
    (message_count(n, f, 1) - message_count(n, f, 0)) as f64 / message_count(n, f, 0) as f64
}
