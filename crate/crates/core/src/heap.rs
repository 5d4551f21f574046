//! Runtime configurations: a heap maps actor identifiers to actors
//! `(this, local heap, queue, current expression)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::syntax::{ActorId, Expr, Loc, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Actor {
    pub this: Loc,
    /// Locations of the passive objects this actor owns.
    pub local: BTreeSet<Loc>,
    /// Pending messages. Sends enqueue at the back in FIFO mode and at the
    /// front in LIFO mode; pops always take the front.
    pub queue: VecDeque<Value>,
    pub current: Expr,
}

impl Actor {
    /// An idle actor owning only its `this` location.
    pub fn idle(this: Loc) -> Actor {
        Actor { this, local: BTreeSet::from([this]), queue: VecDeque::new(), current: Expr::unit() }
    }

    pub fn is_idle(&self) -> bool {
        self.current.is_value() && self.queue.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Heap {
    pub actors: BTreeMap<ActorId, Actor>,
    next_loc: u32,
    next_id: u32,
}

impl Heap {
    pub fn new() -> Heap {
        Heap::default()
    }

    /// Empty heap whose fresh-name counters start at the given values.
    pub fn with_counters(next_loc: u32, next_id: u32) -> Heap {
        Heap { actors: BTreeMap::new(), next_loc, next_id }
    }

    /// Initial configuration for a closed program: one root actor
    /// `(ι0, {ι0}, ε, e)`.
    pub fn inject(program: Expr) -> Heap {
        Heap::inject_with_counters(program, 0, 0)
    }

    pub fn inject_with_counters(program: Expr, next_loc: u32, next_id: u32) -> Heap {
        let mut heap = Heap::with_counters(next_loc, next_id);
        let root = heap.spawn();
        heap.actors.get_mut(&root).expect("just spawned").current = program;
        heap
    }

    pub fn next_loc(&self) -> u32 {
        self.next_loc
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    pub fn fresh_loc(&mut self) -> Loc {
        let l = Loc(self.next_loc);
        self.next_loc += 1;
        l
    }

    pub fn fresh_id(&mut self) -> ActorId {
        let id = ActorId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Installs a new idle actor with a fresh identifier and a fresh `this`.
    pub fn spawn(&mut self) -> ActorId {
        let id = self.fresh_id();
        let this = self.fresh_loc();
        self.actors.insert(id, Actor::idle(this));
        id
    }

    /// Inserts a hand-built actor, advancing the counters past every name it
    /// mentions so later fresh names cannot collide.
    pub fn insert(&mut self, id: ActorId, actor: Actor) {
        self.next_id = self.next_id.max(id.0 + 1);
        let mut max_loc = actor.this.0.max(actor.local.iter().map(|l| l.0).max().unwrap_or(0));
        let mut max_id = id.0;
        let mut note = |v: &Value| match v {
            Value::Loc(l) => max_loc = max_loc.max(l.0),
            Value::Actor(i) => max_id = max_id.max(i.0),
            Value::Bestowed(l, i) => {
                max_loc = max_loc.max(l.0);
                max_id = max_id.max(i.0);
            }
            _ => {}
        };
        actor.current.for_each_value(&mut note);
        for m in &actor.queue {
            m.for_each_value(&mut note);
        }
        self.next_loc = self.next_loc.max(max_loc + 1);
        self.next_id = self.next_id.max(max_id + 1);
        self.actors.insert(id, actor);
    }

    pub fn set_counters(&mut self, next_loc: u32, next_id: u32) {
        self.next_loc = next_loc;
        self.next_id = next_id;
    }

    pub fn actor(&self, id: ActorId) -> Option<&Actor> {
        self.actors.get(&id)
    }

    pub fn actor_mut(&mut self, id: ActorId) -> Option<&mut Actor> {
        self.actors.get_mut(&id)
    }

    /// Every actor idles on a value with an empty queue.
    pub fn is_terminal(&self) -> bool {
        self.actors.values().all(Actor::is_idle)
    }

    /// Owner of a location, if any actor's local heap contains it.
    pub fn owner_of(&self, loc: Loc) -> Option<ActorId> {
        self.actors.iter().find(|(_, a)| a.local.contains(&loc)).map(|(id, _)| *id)
    }
}
