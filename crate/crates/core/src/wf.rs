//! Well-formedness of heaps, actors and message queues.
//!
//! Violations are collected rather than thrown, each tagged with the rule
//! whose premise failed.

use std::fmt;

use serde::Serialize;

use crate::heap::Heap;
use crate::syntax::{ActorId, Expr, Type, Value};
use crate::typeck::{typecheck, TypeEnv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WfRule {
    Heap,
    Actor,
    QueueMessage,
    QueueEmpty,
}

impl WfRule {
    pub fn name(self) -> &'static str {
        match self {
            WfRule::Heap => "wf-heap",
            WfRule::Actor => "wf-actor",
            WfRule::QueueMessage => "wf-queue-message",
            WfRule::QueueEmpty => "wf-queue-empty",
        }
    }
}

impl fmt::Display for WfRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subject {
    Actor(ActorId),
    Pair(ActorId, ActorId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: WfRule,
    pub subject: Subject,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subject {
            Subject::Actor(a) => write!(f, "[{}] actor {}: {}", self.rule, a.0, self.detail),
            Subject::Pair(a, b) => write!(f, "[{}] actors {} and {}: {}", self.rule, a.0, b.0, self.detail),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WfReport {
    pub violations: Vec<Violation>,
}

impl WfReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, rule: WfRule, subject: Subject, detail: impl Into<String>) {
        self.violations.push(Violation { rule, subject, detail: detail.into() });
    }

    fn extend(&mut self, other: WfReport) {
        self.violations.extend(other.violations);
    }

    /// Whether some violation carries the given rule.
    pub fn has(&self, rule: WfRule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

/// All actors are well-formed and local heaps are pairwise disjoint.
pub fn wf_heap(heap: &Heap) -> WfReport {
    let mut report = WfReport::default();
    for id in heap.actors.keys() {
        report.extend(wf_actor(heap, *id));
    }
    let actors: Vec<_> = heap.actors.iter().collect();
    for (i, (a, actor_a)) in actors.iter().enumerate() {
        for (b, actor_b) in &actors[i + 1..] {
            if let Some(shared) = actor_a.local.intersection(&actor_b.local).next() {
                report.push(WfRule::Heap, Subject::Pair(**a, **b), format!("local heaps share location {}", shared.0));
            }
        }
    }
    report
}

pub fn wf_actor(heap: &Heap, id: ActorId) -> WfReport {
    let mut report = WfReport::default();
    let Some(actor) = heap.actor(id) else {
        report.push(WfRule::Actor, Subject::Actor(id), "no such actor");
        return report;
    };
    if !actor.local.contains(&actor.this) {
        report.push(WfRule::Actor, Subject::Actor(id), format!("this ({}) is not in the local heap", actor.this.0));
    }
    report.extend(wf_queue(heap, id));
    if let Err(err) = typecheck(&TypeEnv::new(), &actor.current) {
        report.push(WfRule::Actor, Subject::Actor(id), format!("current expression is ill-typed: {err}"));
    }
    check_values(heap, id, &actor.current, WfRule::Actor, &mut report);
    report
}

/// Every queued message is a function of a passive argument, typable in the
/// empty environment, whose values obey the owner's restrictions.
pub fn wf_queue(heap: &Heap, owner: ActorId) -> WfReport {
    let mut report = WfReport::default();
    let Some(actor) = heap.actor(owner) else {
        report.push(WfRule::QueueMessage, Subject::Actor(owner), "no such actor");
        return report;
    };
    for (i, msg) in actor.queue.iter().enumerate() {
        let Value::Lambda { ty, body, .. } = msg else {
            report.push(WfRule::QueueMessage, Subject::Actor(owner), format!("message {i} is not a function: {msg}"));
            continue;
        };
        if *ty != Type::Passive {
            report.push(WfRule::QueueMessage, Subject::Actor(owner), format!("message {i} takes {ty}, not p"));
        }
        if let Err(err) = typecheck(&TypeEnv::new(), &Expr::Val(msg.clone())) {
            report.push(WfRule::QueueMessage, Subject::Actor(owner), format!("message {i} is ill-typed: {err}"));
        }
        check_values(heap, owner, body, WfRule::QueueMessage, &mut report);
    }
    report
}

/// Locations must be owned by `owner`, actor identifiers must exist, and a
/// bestowed location must belong to the actor that bestowed it.
fn check_values(heap: &Heap, owner: ActorId, e: &Expr, rule: WfRule, report: &mut WfReport) {
    let local = &heap.actor(owner).expect("caller checked").local;
    e.for_each_value(&mut |v| match v {
        Value::Loc(l) if !local.contains(l) => {
            report.push(rule, Subject::Actor(owner), format!("location {} is not in the local heap", l.0))
        }
        Value::Actor(a) if !heap.actors.contains_key(a) => {
            report.push(rule, Subject::Actor(owner), format!("actor {} does not exist", a.0))
        }
        Value::Bestowed(l, a) => match heap.actor(*a) {
            None => report.push(rule, Subject::Actor(owner), format!("bestowing actor {} does not exist", a.0)),
            Some(bestower) if !bestower.local.contains(l) => report.push(
                rule,
                Subject::Actor(owner),
                format!("bestowed location {} is not owned by its bestower {}", l.0, a.0),
            ),
            Some(_) => {}
        },
        _ => {}
    });
}
