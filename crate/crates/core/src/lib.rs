//! A lambda calculus with actors, passive objects and bestowed references.
//!
//! The crate holds the whole formal side of the project:
//!
//! - [`syntax`], [`heap`] and [`text`]: terms, types, heaps and their
//!   canonical text form.
//! - [`typeck`]: the static semantics.
//! - [`eval`]: the small-step dynamic semantics and seeded schedulers.
//! - [`wf`], [`explore`] and [`gen`]: well-formedness judgments, an
//!   exhaustive interleaving explorer that checks progress, preservation and
//!   data-race freedom, and a generator of well-typed programs.
//! - [`surface`]: a small human-writable language with `atomic` blocks that
//!   elaborates into the core calculus.

pub mod eval;
pub mod explore;
pub mod gen;
pub mod golden;
pub mod heap;
pub mod surface;
pub mod syntax;
pub mod text;
pub mod typeck;
pub mod wf;

pub use eval::{Evaluator, QueueOrder, SchedulerChoice, StepError, Trace, TraceEvent};
pub use heap::{Actor, Heap};
pub use syntax::{ActorId, Expr, Loc, Name, Type, Value};
pub use typeck::{typecheck, Rule, TypeEnv, TypeError};
