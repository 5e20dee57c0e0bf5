use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{FaultBehavior, Phase, ScenarioSpec};
use crate::error::Result;
use crate::pbft::{
    Behavior, Carriage, ClientState, Destination, Message, NodeId, NodePhase, NodeState, SimTime, TxnId, Verdict,
    PRIMARY,
};

use super::link::{ms_to_us, Endpoint, StarTopology};
use super::queue::EventQueue;
use super::transport::{transmit_tcp, transmit_udp, TcpEndpointModel, TcpOutcome};

/// Outcome of one client request.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransactionRecord {
    pub repetition: u32,
    pub index: u32,
    pub success: bool,
    /// From the primary sending PRE-PREPARE to the decisive REPLY.
    pub latency_us: Option<SimTime>,
    /// Wire transmissions per phase, repetitions and retransmissions
    /// included.
    pub messages: [u64; 4],
    /// Backups that got PRE-PREPARE.
    pub m: u32,
    /// Replicas, primary included, that reached prepared.
    pub k: u32,
    pub j: u32,
    /// Distinct replies that reached the client.
    pub s: u32,
    /// Reliable deliveries that ran out of retransmissions.
    pub abandoned: u32,
}

impl TransactionRecord {
    pub fn latency_ms(&self) -> Option<f64> {
        self.latency_us.map(|us| us as f64 / 1e3)
    }

    pub fn total_messages(&self) -> u64 {
        self.messages.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    MessageArrival {
        to: Destination,
        msg: Message,
    },
    /// The last retransmission timer of an abandoned reliable delivery.
    RetransmissionTimer {
        txn: TxnId,
    },
    TransactionTimeout {
        txn: TxnId,
    },
    ClientDeadline {
        txn: TxnId,
    },
}

struct OpenTxn {
    client: ClientState,
    record: TransactionRecord,
    /// Nothing about this transaction is simulated past this point.
    closes_at: SimTime,
}

struct Repetition<'a> {
    spec: &'a ScenarioSpec,
    topology: StarTopology,
    nodes: Vec<NodeState>,
    queue: EventQueue<EventKind>,
    rng: ChaCha8Rng,
    open: BTreeMap<TxnId, OpenTxn>,
    done: Vec<TransactionRecord>,
    repetition: u32,
    next_index: u32,
    timeout: SimTime,
}

/// Silent replicas take the highest ids, so the primary is always correct.
fn behaviors(spec: &ScenarioSpec) -> Vec<Behavior> {
    let n = spec.system.n;
    let silent = match spec.faulty.behavior {
        FaultBehavior::Silent => spec.faulty.count,
    };
    (0..n).map(|id| if id >= n - silent { Behavior::Silent } else { Behavior::Honest }).collect()
}

impl<'a> Repetition<'a> {
    fn new(spec: &'a ScenarioSpec, repetition: u32, seed: u64) -> Self {
        let nodes = behaviors(spec)
            .into_iter()
            .enumerate()
            .map(|(id, b)| NodeState::new(id as NodeId, &spec.system, spec.transport, b))
            .collect();
        Repetition {
            spec,
            topology: StarTopology::new(spec.system.n, spec.channel),
            nodes,
            queue: EventQueue::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            open: BTreeMap::new(),
            done: Vec::new(),
            repetition,
            next_index: 0,
            timeout: ms_to_us(spec.timeout_ms()),
        }
    }

    fn run(mut self) -> Result<Vec<TransactionRecord>> {
        self.start_next(0)?;
        while let Some(event) = self.queue.pop() {
            let now = event.fire_time;
            match event.kind {
                EventKind::MessageArrival { to, msg } => self.deliver(to, msg, now)?,
                EventKind::RetransmissionTimer { txn } => {
                    if let Some(t) = self.open.get_mut(&txn) {
                        t.record.abandoned += 1;
                    }
                }
                EventKind::ClientDeadline { txn } => {
                    let decided_now = self.open.get_mut(&txn).is_some_and(|t| {
                        let was_pending = t.client.verdict() == Verdict::Pending;
                        t.client.on_deadline();
                        was_pending
                    });
                    if decided_now {
                        self.start_next(now)?;
                    }
                }
                EventKind::TransactionTimeout { txn } => self.finalize(txn),
            }
        }
        self.done.sort_by_key(|r| r.index);
        Ok(self.done)
    }

    fn start_next(&mut self, now: SimTime) -> Result<()> {
        if self.next_index >= self.spec.requests {
            return Ok(());
        }
        let index = self.next_index;
        self.next_index += 1;
        let txn = index as TxnId;
        let deadline = now + self.timeout;
        let record = TransactionRecord {
            repetition: self.repetition,
            index,
            success: false,
            latency_us: None,
            messages: [0; 4],
            m: 0,
            k: 0,
            j: 0,
            s: 0,
            abandoned: 0,
        };
        let client = ClientState::new(txn, self.spec.system.reply_quorum(), now, deadline);
        self.open.insert(txn, OpenTxn { client, record, closes_at: deadline });
        self.queue.schedule(deadline, EventKind::ClientDeadline { txn })?;
        // Same instant as the deadline but popped after it.
        self.queue.schedule(deadline, EventKind::TransactionTimeout { txn })?;

        let sends = self.nodes[PRIMARY as usize].start_transaction(txn);
        self.dispatch(PRIMARY, sends, now)?;
        let own = Message { txn, phase: Phase::PrePrepare, from: PRIMARY };
        let sends = self.nodes[PRIMARY as usize].on_message(own);
        self.dispatch(PRIMARY, sends, now)
    }

    fn deliver(&mut self, to: Destination, msg: Message, now: SimTime) -> Result<()> {
        match to {
            Destination::Replica(id) => {
                let sends = self.nodes[id as usize].on_message(msg);
                self.dispatch(id, sends, now)
            }
            Destination::Client => {
                let Some(t) = self.open.get_mut(&msg.txn) else { return Ok(()) };
                let before = t.client.verdict();
                let after = t.client.observe(msg.from, now);
                if before == Verdict::Pending {
                    if let Verdict::Success { latency } = after {
                        t.record.success = true;
                        t.record.latency_us = Some(latency);
                        return self.start_next(now);
                    }
                }
                Ok(())
            }
        }
    }

    fn dispatch(&mut self, from: NodeId, sends: Vec<crate::pbft::Send>, now: SimTime) -> Result<()> {
        for send in sends {
            let txn = send.msg.txn;
            let Some(closes_at) = self.open.get(&txn).map(|t| t.closes_at) else { continue };
            let route = self.topology.route(Endpoint::Replica(from), send.to.into());
            let payload = self.spec.system.payload_bytes;
            let phase = send.msg.phase.index();
            match send.carriage {
                Carriage::Datagram { copies } => {
                    let arrivals = transmit_udp(&route, payload, copies, now, &mut self.rng);
                    self.open.get_mut(&txn).expect("open").record.messages[phase] += copies as u64;
                    for at in arrivals.into_iter().filter(|&at| at <= closes_at) {
                        self.queue.schedule(at, EventKind::MessageArrival { to: send.to, msg: send.msg })?;
                    }
                }
                Carriage::Reliable(params) => {
                    let reverse = self.topology.route(send.to.into(), Endpoint::Replica(from));
                    let model = TcpEndpointModel::new(params);
                    let d = transmit_tcp(&model, &route, &reverse, payload, now, closes_at, &mut self.rng);
                    self.open.get_mut(&txn).expect("open").record.messages[phase] += d.transmissions as u64;
                    match d.outcome {
                        TcpOutcome::Delivered { at } if at <= closes_at => {
                            self.queue.schedule(at, EventKind::MessageArrival { to: send.to, msg: send.msg })?
                        }
                        TcpOutcome::Abandoned { at } if at <= closes_at => {
                            self.queue.schedule(at, EventKind::RetransmissionTimer { txn })?
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    fn finalize(&mut self, txn: TxnId) {
        let Some(mut t) = self.open.remove(&txn) else { return };
        let honest = |node: &&NodeState| node.behavior() == Behavior::Honest;
        let reached =
            |phase: NodePhase| self.nodes.iter().filter(honest).filter(|node| node.phase(txn) >= phase).count() as u32;
        t.record.m = reached(NodePhase::PrePrepared) - 1;
        t.record.k = reached(NodePhase::Prepared);
        t.record.j = reached(NodePhase::Committed);
        t.record.s = t.client.distinct_replies() as u32;
        for node in &mut self.nodes {
            node.close(txn);
        }
        self.done.push(t.record);
    }
}

/// Seed of repetition `rep` of a run seeded with `seed`.
pub fn repetition_seed(seed: u64, rep: u32) -> u64 {
    seed ^ rep as u64
}

/// One repetition: `spec.requests` transactions issued one after another.
pub fn run_repetition(spec: &ScenarioSpec, repetition: u32) -> Result<Vec<TransactionRecord>> {
    let spec = spec.validate()?;
    Repetition::new(&spec, repetition, repetition_seed(spec.seed, repetition)).run()
}

/// Every repetition of a scenario, ordered by repetition then request.
/// Repetitions run in parallel; the result does not depend on scheduling.
pub fn run(spec: &ScenarioSpec) -> Result<Vec<TransactionRecord>> {
    let spec = spec.validate()?;
    let per_rep: Vec<Vec<TransactionRecord>> = (0..spec.repetitions)
        .into_par_iter()
        .map(|rep| Repetition::new(&spec, rep, repetition_seed(spec.seed, rep)).run())
        .collect::<Result<_>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}
