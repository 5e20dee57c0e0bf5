//! Replica and client state machines of three-phase view consensus.
//!
//! Nodes are driven entirely from outside: the simulator hands each node the
//! messages that reached it and carries out the [`Send`]s it returns. Nothing
//! here knows about time except the client, which measures latency.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::{Phase, PhaseTransport, SystemConfig, TcpParams, TransportSpec};

pub type NodeId = u32;
pub type TxnId = u64;
/// Simulated time in microseconds.
pub type SimTime = u64;

/// The primary of the (only) view.
pub const PRIMARY: NodeId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Destination {
    Replica(NodeId),
    Client,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Message {
    pub txn: TxnId,
    pub phase: Phase,
    pub from: NodeId,
}

/// How a send crosses the network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Carriage {
    /// Fire-and-forget, `copies` back-to-back datagrams.
    Datagram {
        copies: u32,
    },
    Reliable(TcpParams),
}

impl From<PhaseTransport> for Carriage {
    fn from(t: PhaseTransport) -> Self {
        match t {
            PhaseTransport::Udp { repeats } => Carriage::Datagram { copies: repeats },
            PhaseTransport::Tcp(params) => Carriage::Reliable(params),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Send {
    pub to: Destination,
    pub msg: Message,
    pub carriage: Carriage,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Behavior {
    #[default]
    Honest,
    /// Updates its state like everyone else but never sends.
    Silent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodePhase {
    #[default]
    Idle,
    PrePrepared,
    Prepared,
    Committed,
}

#[derive(Clone, Debug, Default)]
struct Progress {
    phase: NodePhase,
    prepares: BTreeSet<NodeId>,
    commits: BTreeSet<NodeId>,
}

#[derive(Clone, Debug)]
pub struct NodeState {
    id: NodeId,
    n: u32,
    /// Distinct PREPAREs (and COMMITs) from other replicas needed to advance.
    threshold: u32,
    behavior: Behavior,
    transport: TransportSpec,
    txns: BTreeMap<TxnId, Progress>,
    closed: BTreeSet<TxnId>,
}

impl NodeState {
    pub fn new(id: NodeId, cfg: &SystemConfig, transport: TransportSpec, behavior: Behavior) -> Self {
        assert!(id < cfg.n, "replica {id} outside 0..{}", cfg.n);
        assert!(!(id == PRIMARY && behavior == Behavior::Silent), "the primary is assumed correct");
        NodeState {
            id,
            n: cfg.n,
            threshold: cfg.prepare_threshold(),
            behavior,
            transport,
            txns: BTreeMap::new(),
            closed: BTreeSet::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn is_primary(&self) -> bool {
        self.id == PRIMARY
    }

    pub fn behavior(&self) -> Behavior {
        self.behavior
    }

    pub fn phase(&self, txn: TxnId) -> NodePhase {
        self.txns.get(&txn).map_or(NodePhase::Idle, |p| p.phase)
    }

    /// Distinct PREPARE and COMMIT senders seen so far.
    pub fn received(&self, txn: TxnId) -> (usize, usize) {
        self.txns.get(&txn).map_or((0, 0), |p| (p.prepares.len(), p.commits.len()))
    }

    /// PRE-PREPARE for every backup. The primary pre-prepares itself when
    /// its own PRE-PREPARE is handed back to [`NodeState::on_message`].
    pub fn start_transaction(&self, txn: TxnId) -> Vec<Send> {
        assert!(self.is_primary(), "only the primary starts transactions");
        let msg = Message { txn, phase: Phase::PrePrepare, from: self.id };
        self.broadcast(msg)
    }

    /// Forgets a finished transaction; later messages for it are dropped.
    pub fn close(&mut self, txn: TxnId) {
        self.txns.remove(&txn);
        self.closed.insert(txn);
    }

    pub fn on_message(&mut self, msg: Message) -> Vec<Send> {
        if self.closed.contains(&msg.txn) {
            return Vec::new();
        }
        let progress = self.txns.entry(msg.txn).or_default();
        let mut out = Vec::new();
        match msg.phase {
            Phase::PrePrepare => {
                if msg.from == PRIMARY && progress.phase == NodePhase::Idle {
                    progress.phase = NodePhase::PrePrepared;
                    out.extend(self.emit_broadcast(Phase::Prepare, msg.txn));
                }
            }
            Phase::Prepare => {
                if msg.from != self.id {
                    progress.prepares.insert(msg.from);
                }
            }
            Phase::Commit => {
                if msg.from != self.id {
                    progress.commits.insert(msg.from);
                }
            }
            Phase::Reply => {}
        }
        // Messages may overtake each other, so both checks run on every
        // arrival.
        out.extend(self.advance(msg.txn));
        out
    }

    fn advance(&mut self, txn: TxnId) -> Vec<Send> {
        let mut out = Vec::new();
        let threshold = self.threshold as usize;
        let p = self.txns.get_mut(&txn).expect("progress exists");
        if p.phase == NodePhase::PrePrepared && p.prepares.len() >= threshold {
            p.phase = NodePhase::Prepared;
            out.extend(self.emit_broadcast(Phase::Commit, txn));
        }
        let p = self.txns.get_mut(&txn).expect("progress exists");
        if p.phase == NodePhase::Prepared && p.commits.len() >= threshold {
            p.phase = NodePhase::Committed;
            if self.behavior == Behavior::Honest {
                out.push(Send {
                    to: Destination::Client,
                    msg: Message { txn, phase: Phase::Reply, from: self.id },
                    carriage: self.transport.for_phase(Phase::Reply).into(),
                });
            }
        }
        out
    }

    fn emit_broadcast(&self, phase: Phase, txn: TxnId) -> Vec<Send> {
        if self.behavior == Behavior::Silent {
            return Vec::new();
        }
        self.broadcast(Message { txn, phase, from: self.id })
    }

    fn broadcast(&self, msg: Message) -> Vec<Send> {
        let carriage = self.transport.for_phase(msg.phase).into();
        (0..self.n).filter(|&to| to != self.id).map(|to| Send { to: Destination::Replica(to), msg, carriage }).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pending,
    /// Microseconds from the start of the transaction.
    Success {
        latency: SimTime,
    },
    Failure,
}

#[derive(Clone, Debug)]
pub struct ClientState {
    txn: TxnId,
    threshold: u32,
    started: SimTime,
    deadline: SimTime,
    replies: BTreeSet<NodeId>,
    verdict: Verdict,
}

impl ClientState {
    pub fn new(txn: TxnId, threshold: u32, started: SimTime, deadline: SimTime) -> Self {
        assert!(threshold >= 1);
        assert!(deadline >= started);
        ClientState { txn, threshold, started, deadline, replies: BTreeSet::new(), verdict: Verdict::Pending }
    }

    pub fn txn(&self) -> TxnId {
        self.txn
    }

    pub fn deadline(&self) -> SimTime {
        self.deadline
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn distinct_replies(&self) -> usize {
        self.replies.len()
    }

    /// Records a REPLY. Replies keep being counted after the verdict, but
    /// the verdict itself never changes.
    pub fn observe(&mut self, from: NodeId, now: SimTime) -> Verdict {
        self.replies.insert(from);
        if self.verdict == Verdict::Pending && now <= self.deadline && self.replies.len() >= self.threshold as usize {
            self.verdict = Verdict::Success { latency: now - self.started };
        }
        self.verdict
    }

    pub fn on_deadline(&mut self) -> Verdict {
        if self.verdict == Verdict::Pending {
            self.verdict = Verdict::Failure;
        }
        self.verdict
    }
}
