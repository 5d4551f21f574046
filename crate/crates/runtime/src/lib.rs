//! A concurrent actor runtime with bestowed references, atomic batches,
//! queue override windows and a lock-based bestowal variant.
//!
//! Actors own their state and a set of passive objects. An object can be
//! bestowed: the resulting [`BestowedRef`] may be shared freely, and every
//! operation on it is relayed to the owner's message loop.

mod actor;
mod bestow;
mod error;
mod future;
pub mod list;
mod lock;
pub mod trace;

pub use actor::{
    current_actor, spawn, spawn_configured, spawn_with, ActorConfig, ActorId, ActorRef, ActorStats, Context, Op,
    Passive, PrivateQueue,
};
pub use bestow::{bestow, BestowedRef, ObjOp};
pub use error::RuntimeError;
pub use future::{promise, Future, Promise};
pub use lock::{Enclosure, LockedOp, LockedRef};
pub use trace::{EventKind, Origin, TraceEvent, TurnKind};
