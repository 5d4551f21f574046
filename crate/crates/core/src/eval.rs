//! Small-step dynamic semantics.
//!
//! Expressions reduce inside the evaluation contexts
//! `E ::= • e | v • | • ! v | •.mutate() | bestow •`. A heap steps either by
//! letting an idle actor pop a message (`actor-msg`) or by letting an actor
//! step its current expression. Every step produces one [`TraceEvent`].

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heap::Heap;
use crate::syntax::{ActorId, Expr, Loc, Name, Type, Value};

/// Default step budget for command-line runs.
pub const DEFAULT_FUEL: usize = 100_000;

/// Where sends put a message. Pops always take the front of the queue, so
/// `Fifo` enqueues at the back and `Lifo` prepends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueueOrder {
    #[default]
    Fifo,
    Lifo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    PopMessage,
    RunStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchedulerChoice {
    pub actor: ActorId,
    pub action: Action,
}

impl SchedulerChoice {
    pub fn pop(actor: ActorId) -> SchedulerChoice {
        SchedulerChoice { actor, action: Action::PopMessage }
    }

    pub fn run(actor: ActorId) -> SchedulerChoice {
        SchedulerChoice { actor, action: Action::RunStep }
    }
}

impl fmt::Display for SchedulerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.action {
            Action::PopMessage => write!(f, "pop({})", self.actor.0),
            Action::RunStep => write!(f, "run({})", self.actor.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalRule {
    ActorMsg,
    SendActor,
    SendBestowed,
    Apply,
    Mutate,
    Bestow,
    NewPassive,
    NewActor,
}

impl EvalRule {
    pub fn name(self) -> &'static str {
        match self {
            EvalRule::ActorMsg => "actor-msg",
            EvalRule::SendActor => "send-actor",
            EvalRule::SendBestowed => "send-bestowed",
            EvalRule::Apply => "apply",
            EvalRule::Mutate => "mutate",
            EvalRule::Bestow => "bestow",
            EvalRule::NewPassive => "new-passive",
            EvalRule::NewActor => "new-actor",
        }
    }

    pub fn is_send(self) -> bool {
        matches!(self, EvalRule::SendActor | EvalRule::SendBestowed)
    }
}

impl fmt::Display for EvalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One evaluation step, before it is numbered by a [`Trace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    /// The actor that took the step.
    pub actor_id: ActorId,
    pub rule: EvalRule,
    /// Set for `mutate`, `bestow`, `new-passive`, and for `send-bestowed`
    /// (the bestowed location).
    pub touched_loc: Option<Loc>,
    /// Receiving actor of a send, or the actor created by `new-actor`.
    pub target: Option<ActorId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step_index: usize,
    #[serde(flatten)]
    pub event: Event,
}

impl std::ops::Deref for TraceEvent {
    type Target = Event;
    fn deref(&self) -> &Event {
        &self.event
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new() -> Trace {
        Trace::default()
    }

    pub fn push(&mut self, event: Event) {
        let step_index = self.events.len();
        self.events.push(TraceEvent { step_index, event });
    }

    pub fn pop(&mut self) -> Option<TraceEvent> {
        self.events.pop()
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Splits the events executed by `owner` into turns, one per processed
    /// message, and attributes each turn to the actor whose send enqueued it.
    ///
    /// Provenance is recovered from the trace alone by replaying the queue
    /// discipline. `initially_queued` is the owner's queue length in the
    /// heap the trace starts from; those messages have no recorded sender.
    /// Events before the first pop form a turn with `pop_step == None`.
    pub fn turns(&self, owner: ActorId, initially_queued: usize, order: QueueOrder) -> Vec<Turn> {
        let mut pending: std::collections::VecDeque<Option<(ActorId, usize)>> =
            std::iter::repeat_n(None, initially_queued).collect();
        let mut turns: Vec<Turn> = Vec::new();
        for ev in &self.events {
            if ev.rule.is_send() && ev.target == Some(owner) {
                let origin = Some((ev.actor_id, ev.step_index));
                match order {
                    QueueOrder::Fifo => pending.push_back(origin),
                    QueueOrder::Lifo => pending.push_front(origin),
                }
            }
            if ev.actor_id != owner {
                continue;
            }
            if ev.rule == EvalRule::ActorMsg {
                let origin = pending.pop_front().flatten();
                turns.push(Turn {
                    sender: origin.map(|(a, _)| a),
                    send_step: origin.map(|(_, s)| s),
                    pop_step: Some(ev.step_index),
                    events: vec![ev.step_index],
                });
            } else {
                match turns.last_mut() {
                    Some(t) => t.events.push(ev.step_index),
                    None => {
                        turns.push(Turn { sender: None, send_step: None, pop_step: None, events: vec![ev.step_index] })
                    }
                }
            }
        }
        turns
    }
}

/// Events an actor executes while processing one message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Turn {
    pub sender: Option<ActorId>,
    pub send_step: Option<usize>,
    pub pop_step: Option<usize>,
    /// Step indices of the owner's events in this turn, in order.
    pub events: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("stuck at `{expr}`: {reason}")]
    Stuck { expr: Expr, reason: String },
    #[error("cannot send to non-active value `{target}`")]
    SendToNonActive { target: Value },
    #[error("expression `{0}` is already a value")]
    AlreadyValue(Expr),
    #[error("no actor {0:?} in the heap")]
    UnknownActor(ActorId),
    #[error("choice {0} is not enabled")]
    ChoiceNotEnabled(SchedulerChoice),
}

/// One frame of an evaluation context, written with the hole as `•`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    /// `• e`
    AppFun(Expr),
    /// `v •`
    AppArg(Value),
    /// `• ! v`
    SendTarget(Value),
    /// `•.mutate()`
    Mutate,
    /// `bestow •`
    Bestow,
}

/// An evaluation context, outermost frame first. The empty context is `•`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context(pub Vec<Frame>);

impl Context {
    pub fn is_hole(&self) -> bool {
        self.0.is_empty()
    }

    /// Fills the hole with `e`.
    pub fn plug(&self, e: Expr) -> Expr {
        self.0.iter().rev().fold(e, |inner, frame| match frame {
            Frame::AppFun(arg) => Expr::app(inner, arg.clone()),
            Frame::AppArg(fun) => Expr::app(Expr::Val(fun.clone()), inner),
            Frame::SendTarget(msg) => Expr::send(inner, msg.clone()),
            Frame::Mutate => Expr::mutate(inner),
            Frame::Bestow => Expr::bestow(inner),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Redex {
    Apply { param: Name, body: Expr, arg: Value },
    SendActor { to: ActorId, msg: Value },
    SendBestowed { loc: Loc, owner: ActorId, msg: Value },
    Mutate(Loc),
    Bestow(Loc),
    NewPassive,
    NewActor,
}

impl Redex {
    pub fn rule(&self) -> EvalRule {
        match self {
            Redex::Apply { .. } => EvalRule::Apply,
            Redex::SendActor { .. } => EvalRule::SendActor,
            Redex::SendBestowed { .. } => EvalRule::SendBestowed,
            Redex::Mutate(_) => EvalRule::Mutate,
            Redex::Bestow(_) => EvalRule::Bestow,
            Redex::NewPassive => EvalRule::NewPassive,
            Redex::NewActor => EvalRule::NewActor,
        }
    }

    /// The actor whose queue a send redex writes to.
    pub fn receiver(&self) -> Option<ActorId> {
        match self {
            Redex::SendActor { to, .. } => Some(*to),
            Redex::SendBestowed { owner, .. } => Some(*owner),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposition {
    AlreadyValue,
    Redex(Context, Redex),
}

/// Splits a term into an evaluation context and the redex in its hole.
pub fn decompose(e: &Expr) -> Result<Decomposition, StepError> {
    if e.is_value() {
        return Ok(Decomposition::AlreadyValue);
    }
    let mut frames = Vec::new();
    let redex = find_redex(e, &mut frames)?;
    Ok(Decomposition::Redex(Context(frames), redex))
}

/// The redex of a non-value term, without building the context.
pub fn active_redex(e: &Expr) -> Option<Redex> {
    match decompose(e) {
        Ok(Decomposition::Redex(_, r)) => Some(r),
        _ => None,
    }
}

fn stuck<T>(e: &Expr, reason: impl Into<String>) -> Result<T, StepError> {
    Err(StepError::Stuck { expr: e.clone(), reason: reason.into() })
}

fn find_redex(e: &Expr, frames: &mut Vec<Frame>) -> Result<Redex, StepError> {
    match e {
        Expr::Val(_) => unreachable!("values are handled by decompose"),
        Expr::Var(x) => stuck(e, format!("free variable `{x}`")),
        Expr::NewPassive => Ok(Redex::NewPassive),
        Expr::NewActor => Ok(Redex::NewActor),
        Expr::App(fun, arg) => match (&**fun, &**arg) {
            (Expr::Val(Value::Lambda { param, body, .. }), Expr::Val(v)) => {
                Ok(Redex::Apply { param: param.clone(), body: (**body).clone(), arg: v.clone() })
            }
            (Expr::Val(_), Expr::Val(_)) => stuck(e, "application of a non-function"),
            (Expr::Val(f), _) => {
                frames.push(Frame::AppArg(f.clone()));
                find_redex(arg, frames)
            }
            _ => {
                frames.push(Frame::AppFun((**arg).clone()));
                find_redex(fun, frames)
            }
        },
        Expr::Send(target, msg) => {
            let Expr::Val(t) = &**target else {
                frames.push(Frame::SendTarget(msg.clone()));
                return find_redex(target, frames);
            };
            if !matches!(msg, Value::Lambda { ty: Type::Passive, .. }) {
                return stuck(e, "message is not a function of a passive argument");
            }
            match t {
                Value::Actor(to) => Ok(Redex::SendActor { to: *to, msg: msg.clone() }),
                Value::Bestowed(loc, owner) => Ok(Redex::SendBestowed { loc: *loc, owner: *owner, msg: msg.clone() }),
                other => Err(StepError::SendToNonActive { target: other.clone() }),
            }
        }
        Expr::Mutate(target) => match &**target {
            Expr::Val(Value::Loc(l)) => Ok(Redex::Mutate(*l)),
            Expr::Val(_) => stuck(e, "mutate of a non-location"),
            _ => {
                frames.push(Frame::Mutate);
                find_redex(target, frames)
            }
        },
        Expr::Bestow(inner) => match &**inner {
            Expr::Val(Value::Loc(l)) => Ok(Redex::Bestow(*l)),
            Expr::Val(_) => stuck(e, "bestow of a non-location"),
            _ => {
                frames.push(Frame::Bestow);
                find_redex(inner, frames)
            }
        },
    }
}

/// The message enqueued at the bestower by a send to `ι_id`: it ignores the
/// receiver's own `this` and applies the original message to `ι`.
pub fn relay_wrapper(msg: &Value, loc: Loc) -> Value {
    Value::lambda("_", Type::Passive, Expr::app(Expr::Val(msg.clone()), Expr::Val(Value::Loc(loc))))
}

/// Every choice for which [`Evaluator::step_system`] succeeds, ordered by
/// actor and action.
pub fn enabled_choices(heap: &Heap) -> Vec<SchedulerChoice> {
    let mut out = Vec::new();
    for (id, actor) in &heap.actors {
        if actor.current.is_value() {
            if !actor.queue.is_empty() {
                out.push(SchedulerChoice::pop(*id));
            }
        } else if let Ok(Decomposition::Redex(_, r)) = decompose(&actor.current) {
            if r.receiver().is_none_or(|to| heap.actors.contains_key(&to)) {
                out.push(SchedulerChoice::run(*id));
            }
        }
    }
    out
}

/// Result of running a heap under some scheduler.
#[derive(Clone, Debug)]
pub struct Run {
    pub heap: Heap,
    pub trace: Trace,
    /// No choice is enabled and every actor is idle.
    pub terminal: bool,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("fuel exhausted after {} steps", .0.trace.len())]
    FuelExhausted(Box<Run>),
    #[error("no choice enabled but the heap is not terminal after {} steps", .0.trace.len())]
    Stuck(Box<Run>),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// How [`Evaluator::run`] picks among enabled choices.
#[derive(Clone, Debug)]
pub enum Schedule {
    /// Uniformly random choices from a seeded generator.
    Seeded(u64),
    /// Exactly these choices, then stop.
    Scripted(Vec<SchedulerChoice>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Evaluator {
    pub order: QueueOrder,
}

impl Evaluator {
    pub fn new(order: QueueOrder) -> Evaluator {
        Evaluator { order }
    }

    /// Steps actor `actor`'s expression `e` once. Heap effects (enqueued
    /// messages, fresh objects and actors) are applied to `heap`; the new
    /// expression is returned, not written back. On error the heap is
    /// unchanged.
    pub fn step_expr(&self, heap: &mut Heap, actor: ActorId, e: &Expr) -> Result<(Expr, Event), StepError> {
        if !heap.actors.contains_key(&actor) {
            return Err(StepError::UnknownActor(actor));
        }
        let (ctx, redex) = match decompose(e)? {
            Decomposition::AlreadyValue => return Err(StepError::AlreadyValue(e.clone())),
            Decomposition::Redex(ctx, redex) => (ctx, redex),
        };
        if let Some(to) = redex.receiver() {
            if !heap.actors.contains_key(&to) {
                return Err(StepError::UnknownActor(to));
            }
        }
        let mut event = Event { actor_id: actor, rule: redex.rule(), touched_loc: None, target: None };
        let result = match redex {
            Redex::Apply { param, body, arg } => body.subst(&param, &arg),
            Redex::SendActor { to, msg } => {
                self.enqueue(heap, to, msg);
                event.target = Some(to);
                Expr::unit()
            }
            Redex::SendBestowed { loc, owner, msg } => {
                self.enqueue(heap, owner, relay_wrapper(&msg, loc));
                event.target = Some(owner);
                event.touched_loc = Some(loc);
                Expr::unit()
            }
            Redex::Mutate(loc) => {
                event.touched_loc = Some(loc);
                Expr::unit()
            }
            Redex::Bestow(loc) => {
                event.touched_loc = Some(loc);
                Expr::Val(Value::Bestowed(loc, actor))
            }
            Redex::NewPassive => {
                let loc = heap.fresh_loc();
                heap.actor_mut(actor).expect("checked above").local.insert(loc);
                event.touched_loc = Some(loc);
                Expr::Val(Value::Loc(loc))
            }
            Redex::NewActor => {
                let id = heap.spawn();
                event.target = Some(id);
                Expr::Val(Value::Actor(id))
            }
        };
        Ok((ctx.plug(result), event))
    }

    fn enqueue(&self, heap: &mut Heap, to: ActorId, msg: Value) {
        let queue = &mut heap.actor_mut(to).expect("receiver checked").queue;
        match self.order {
            QueueOrder::Fifo => queue.push_back(msg),
            QueueOrder::Lifo => queue.push_front(msg),
        }
    }

    /// Applies one scheduler choice to the heap. On error the heap is
    /// unchanged.
    pub fn step_system(&self, heap: &mut Heap, choice: SchedulerChoice) -> Result<Event, StepError> {
        let actor = heap.actor(choice.actor).ok_or(StepError::UnknownActor(choice.actor))?;
        match choice.action {
            Action::PopMessage => {
                if !actor.current.is_value() || actor.queue.is_empty() {
                    return Err(StepError::ChoiceNotEnabled(choice));
                }
                let actor = heap.actor_mut(choice.actor).expect("checked above");
                let msg = actor.queue.pop_front().expect("checked above");
                actor.current = Expr::app(Expr::Val(msg), Expr::Val(Value::Loc(actor.this)));
                Ok(Event { actor_id: choice.actor, rule: EvalRule::ActorMsg, touched_loc: None, target: None })
            }
            Action::RunStep => {
                if actor.current.is_value() {
                    return Err(StepError::ChoiceNotEnabled(choice));
                }
                let current = actor.current.clone();
                let (next, event) = self.step_expr(heap, choice.actor, &current)?;
                heap.actor_mut(choice.actor).expect("checked above").current = next;
                Ok(event)
            }
        }
    }

    /// Runs until no choice is enabled or `fuel` steps have been taken.
    pub fn run(&self, heap: Heap, schedule: &Schedule, fuel: usize) -> Result<Run, RunError> {
        match schedule {
            Schedule::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                self.run_with(heap, fuel, |_, choices| Some(rng.gen_range(0..choices.len())))
            }
            Schedule::Scripted(script) => {
                let mut script = script.iter();
                let mut missing = None;
                let out = self.run_with(heap, fuel, |_, choices| {
                    let next = script.next()?;
                    let found = choices.iter().position(|c| c == next);
                    if found.is_none() {
                        missing = Some(*next);
                    }
                    found
                });
                match missing {
                    Some(c) => Err(StepError::ChoiceNotEnabled(c).into()),
                    None => out,
                }
            }
        }
    }

    /// Runs with a custom scheduler. `pick` sees the enabled choices (never
    /// empty) and returns the index to take, or `None` to stop early.
    pub fn run_with(
        &self,
        mut heap: Heap,
        fuel: usize,
        mut pick: impl FnMut(&Heap, &[SchedulerChoice]) -> Option<usize>,
    ) -> Result<Run, RunError> {
        let mut trace = Trace::new();
        loop {
            let choices = enabled_choices(&heap);
            if choices.is_empty() {
                let terminal = heap.is_terminal();
                let run = Run { heap, trace, terminal };
                return if terminal { Ok(run) } else { Err(RunError::Stuck(Box::new(run))) };
            }
            if trace.len() >= fuel {
                return Err(RunError::FuelExhausted(Box::new(Run { heap, trace, terminal: false })));
            }
            let Some(i) = pick(&heap, &choices) else {
                return Ok(Run { heap, trace, terminal: false });
            };
            let event = self.step_system(&mut heap, choices[i])?;
            trace.push(event);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heap::Actor;
    use crate::text::{parse_expr, parse_heap};
    use std::collections::BTreeSet;

    fn e(src: &str) -> Expr {
        parse_expr(src).unwrap()
    }

    #[test]
    fn decompose_whole_term_redex() {
        let d = decompose(&e("(app (fn x p x) unit)")).unwrap();
        let Decomposition::Redex(ctx, Redex::Apply { .. }) = d else { panic!("{d:?}") };
        assert!(ctx.is_hole());
    }

    #[test]
    fn decompose_steps_function_position_first() {
        let term = e("(app (mutate (new p)) unit)");
        let Decomposition::Redex(ctx, redex) = decompose(&term).unwrap() else { panic!() };
        assert_eq!(redex, Redex::NewPassive);
        assert_eq!(ctx.0, vec![Frame::AppFun(Expr::unit()), Frame::Mutate]);
        assert_eq!(ctx.plug(Expr::NewPassive), term);
    }

    #[test]
    fn decompose_value_and_stuck() {
        assert_eq!(decompose(&Expr::unit()), Ok(Decomposition::AlreadyValue));
        assert!(matches!(decompose(&e("(app unit unit)")), Err(StepError::Stuck { .. })));
        assert!(matches!(decompose(&e("(send unit (fn x p x))")), Err(StepError::SendToNonActive { .. })));
    }

    #[test]
    fn send_to_actor_enqueues_message() {
        let mut h = parse_heap(
            "(heap (actor 1 (this 1) (local 1) (queue) (expr unit)) (actor 2 (this 2) (local 2) (queue) (expr unit)))",
        )
        .unwrap();
        let term = e("(send (id 2) (fn x p (mutate x)))");
        let (next, ev) = Evaluator::default().step_expr(&mut h, ActorId(1), &term).unwrap();
        assert_eq!(next, Expr::unit());
        assert_eq!(ev.rule, EvalRule::SendActor);
        assert_eq!(h.actor(ActorId(2)).unwrap().queue, [parse_value("(fn x p (mutate x))")]);
    }

    fn parse_value(src: &str) -> Value {
        crate::text::parse_value(src).unwrap()
    }

    #[test]
    fn send_to_bestowed_relays_to_bestower() {
        let mut h = parse_heap(
            "(heap (actor 1 (this 1) (local 1) (queue) (expr unit)) (actor 3 (this 3) (local 3 9) (queue) (expr unit)))",
        )
        .unwrap();
        let v = parse_value("(fn x p (mutate x))");
        let term = Expr::send(Expr::Val(Value::Bestowed(Loc(9), ActorId(3))), v.clone());
        let (next, ev) = Evaluator::default().step_expr(&mut h, ActorId(1), &term).unwrap();
        assert_eq!(next, Expr::unit());
        assert_eq!((ev.rule, ev.target, ev.touched_loc), (EvalRule::SendBestowed, Some(ActorId(3)), Some(Loc(9))));
        let queued = &h.actor(ActorId(3)).unwrap().queue;
        assert_eq!(queued.len(), 1);
        let Value::Lambda { ty, body, .. } = &queued[0] else { panic!() };
        assert_eq!(*ty, Type::Passive);
        assert_eq!(**body, Expr::app(Expr::Val(v), Expr::Val(Value::Loc(Loc(9)))));
        assert!(h.actor(ActorId(1)).unwrap().queue.is_empty());
    }

    #[test]
    fn bestow_tags_location_with_current_actor() {
        let mut h = parse_heap("(heap (actor 1 (this 1) (local 1) (queue) (expr unit)))").unwrap();
        let before = h.clone();
        let (next, _) = Evaluator::default().step_expr(&mut h, ActorId(1), &e("(bestow (loc 1))")).unwrap();
        assert_eq!(next, Expr::Val(Value::Bestowed(Loc(1), ActorId(1))));
        assert_eq!(h, before);
    }

    #[test]
    fn new_passive_mints_distinct_fresh_locations() {
        let mut h = parse_heap("(heap (actor 1 (this 1) (local 1) (queue) (expr unit)))").unwrap();
        let ev = Evaluator::default();
        let (a, _) = ev.step_expr(&mut h, ActorId(1), &Expr::NewPassive).unwrap();
        let (b, _) = ev.step_expr(&mut h, ActorId(1), &Expr::NewPassive).unwrap();
        let (Expr::Val(Value::Loc(la)), Expr::Val(Value::Loc(lb))) = (&a, &b) else { panic!() };
        assert_ne!(la, lb);
        assert_eq!(h.actor(ActorId(1)).unwrap().local, BTreeSet::from([Loc(1), *la, *lb]));
        assert!(h.actors.values().filter(|a| a.local.contains(la) || a.local.contains(lb)).count() == 1);
    }

    #[test]
    fn new_actor_installs_idle_actor() {
        let mut h = Heap::inject(Expr::NewActor);
        let ev = Evaluator::default().step_system(&mut h, SchedulerChoice::run(ActorId(0))).unwrap();
        assert_eq!(ev.target, Some(ActorId(1)));
        assert_eq!(h.actor(ActorId(1)), Some(&Actor::idle(Loc(1))));
        assert_eq!(h.actor(ActorId(0)).unwrap().current, Expr::Val(Value::Actor(ActorId(1))));
    }

    #[test]
    fn pop_message_applies_to_this() {
        let mut h = parse_heap("(heap (actor 0 (this 4) (local 4) (queue (fn x p x)) (expr unit)))").unwrap();
        Evaluator::default().step_system(&mut h, SchedulerChoice::pop(ActorId(0))).unwrap();
        let a = h.actor(ActorId(0)).unwrap();
        assert_eq!(a.current, e("(app (fn x p x) (loc 4))"));
        assert!(a.queue.is_empty());
    }

    #[test]
    fn pop_on_empty_queue_is_not_enabled() {
        let mut h = Heap::inject(Expr::unit());
        let before = h.clone();
        let err = Evaluator::default().step_system(&mut h, SchedulerChoice::pop(ActorId(0))).unwrap_err();
        assert_eq!(err, StepError::ChoiceNotEnabled(SchedulerChoice::pop(ActorId(0))));
        assert_eq!(h, before);
    }

    #[test]
    fn stepping_one_actor_leaves_other_unchanged() {
        let mut h = parse_heap(
            "(heap (actor 0 (this 0) (local 0) (queue) (expr (app (fn x p x) (loc 0)))) \
             (actor 1 (this 1) (local 1) (queue) (expr (new p))))",
        )
        .unwrap();
        let other = h.actor(ActorId(1)).unwrap().clone();
        Evaluator::default().step_system(&mut h, SchedulerChoice::run(ActorId(0))).unwrap();
        assert_eq!(h.actor(ActorId(1)), Some(&other));
    }

    #[test]
    fn enabled_choices_cases() {
        assert!(enabled_choices(&Heap::inject(Expr::unit())).is_empty());
        assert_eq!(enabled_choices(&Heap::inject(Expr::NewActor)), vec![SchedulerChoice::run(ActorId(0))]);
        let stuck = Heap::inject(e("(app unit unit)"));
        assert!(enabled_choices(&stuck).is_empty());
        let dangling = Heap::inject(e("(send (id 7) (fn x p x))"));
        assert!(enabled_choices(&dangling).is_empty());
    }

    #[test]
    fn value_program_is_terminal_in_zero_steps() {
        let run = Evaluator::default().run(Heap::inject(Expr::unit()), &Schedule::Seeded(1), 10).unwrap();
        assert!(run.terminal);
        assert!(run.trace.is_empty());
    }

    #[test]
    fn beta_chain_of_three() {
        // Three nested applications, each a single beta step.
        let term = e("(app (fn a Unit (app (fn b Unit (app (fn c Unit c) b)) a)) unit)");
        let run = Evaluator::default().run(Heap::inject(term), &Schedule::Seeded(0), 100).unwrap();
        assert!(run.terminal);
        assert_eq!(run.trace.len(), 3);
        assert!(run.trace.events().iter().all(|ev| ev.rule == EvalRule::Apply));
    }

    #[test]
    fn fuel_exhaustion_is_reported() {
        let term = e("(app (fn a Unit (app (fn b Unit b) a)) unit)");
        let err = Evaluator::default().run(Heap::inject(term), &Schedule::Seeded(0), 1).unwrap_err();
        assert!(matches!(err, RunError::FuelExhausted(run) if run.trace.len() == 1));
    }

    #[test]
    fn stuck_heap_is_reported() {
        let err = Evaluator::default().run(Heap::inject(e("(app unit unit)")), &Schedule::Seeded(0), 10).unwrap_err();
        assert!(matches!(err, RunError::Stuck(_)));
    }

    #[test]
    fn scripted_schedule_rejects_disabled_choice() {
        let err = Evaluator::default()
            .run(Heap::inject(Expr::NewActor), &Schedule::Scripted(vec![SchedulerChoice::pop(ActorId(0))]), 10)
            .unwrap_err();
        assert!(matches!(err, RunError::Step(StepError::ChoiceNotEnabled(_))));
    }

    #[test]
    fn lifo_prepends_and_fifo_appends() {
        let src = "(heap (actor 0 (this 0) (local 0) (queue) (expr (send (id 1) (fn a p a)))) \
                   (actor 1 (this 1) (local 1) (queue (fn b p b)) (expr unit)))";
        for (order, first) in [(QueueOrder::Fifo, "b"), (QueueOrder::Lifo, "a")] {
            let mut h = parse_heap(src).unwrap();
            Evaluator::new(order).step_system(&mut h, SchedulerChoice::run(ActorId(0))).unwrap();
            let Value::Lambda { param, .. } = &h.actor(ActorId(1)).unwrap().queue[0] else { panic!() };
            assert_eq!(&**param, first);
        }
    }
}
