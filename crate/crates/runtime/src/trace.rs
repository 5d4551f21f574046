//! Owner-side event log. Every event is appended by the actor's own loop,
//! so the log is a total order of what the actor did.

use std::fmt;
use std::sync::Arc;

use crate::actor::ActorId;

/// Who submitted the message that opened a turn.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Actor(ActorId),
    Thread(Arc<str>),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Actor(a) => write!(f, "actor:{}", a.0),
            Origin::Thread(t) => write!(f, "thread:{t}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TurnKind {
    Perform,
    /// An operation on a bestowed object, relayed to its owner.
    Relay,
    Batch(usize),
    RelayBatch(usize),
    Override,
    /// A message taken from an override window's private queue.
    Private,
    Resume,
}

impl fmt::Display for TurnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TurnKind::Perform => f.write_str("perform"),
            TurnKind::Relay => f.write_str("relay"),
            TurnKind::Batch(n) => write!(f, "batch({n})"),
            TurnKind::RelayBatch(n) => write!(f, "relay-batch({n})"),
            TurnKind::Override => f.write_str("override"),
            TurnKind::Private => f.write_str("private"),
            TurnKind::Resume => f.write_str("resume"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// Start of a message turn.
    Turn(TurnKind),
    /// Start of the i-th operation inside a batch.
    BatchStep(usize),
    Access {
        object: u64,
    },
    Note(Arc<str>),
    /// The override window was closed by the watchdog.
    WatchdogResume,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Turn(k) => write!(f, "turn {k}"),
            EventKind::BatchStep(i) => write!(f, "step {i}"),
            EventKind::Access { object } => write!(f, "access {object}"),
            EventKind::Note(s) => write!(f, "note {s}"),
            EventKind::WatchdogResume => f.write_str("watchdog-resume"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub seq: u64,
    pub turn: u64,
    pub origin: Origin,
    pub kind: EventKind,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} t{} {} {}", self.seq, self.turn, self.origin, self.kind)
    }
}

/// Groups events by turn, in order.
pub fn turns(trace: &[TraceEvent]) -> Vec<&[TraceEvent]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=trace.len() {
        if i == trace.len() || matches!(trace[i].kind, EventKind::Turn(_)) {
            if i > start {
                out.push(&trace[start..i]);
            }
            start = i;
        }
    }
    out
}

/// Every turn between an override and its resume came from the private
/// queue.
pub fn override_windows_are_exclusive(trace: &[TraceEvent]) -> bool {
    let mut open = false;
    for e in trace {
        match e.kind {
            EventKind::Turn(TurnKind::Override) => open = true,
            EventKind::Turn(TurnKind::Resume) => open = false,
            EventKind::WatchdogResume => open = false,
            EventKind::Turn(TurnKind::Private) => {}
            EventKind::Turn(_) if open => return false,
            _ => {}
        }
    }
    true
}
