//! Exhaustive exploration of interleavings and the metatheory checks run
//! over the resulting state space.
//!
//! States are heaps up to renaming of actor identifiers and locations; see
//! [`canonicalize`]. Exploration is breadth-first, so the recorded parent of
//! each state gives a shortest choice sequence from the initial heap.

use std::collections::{HashMap, VecDeque};

use indexmap::IndexSet;
use serde::Serialize;

use crate::eval::{active_redex, enabled_choices, Evaluator, Redex, SchedulerChoice, StepError, Trace};
use crate::heap::{Actor, Heap};
use crate::syntax::{ActorId, Loc, Value};
use crate::wf::{wf_heap, WfReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bound {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Bound {
    fn default() -> Bound {
        Bound { max_states: 50_000, max_depth: 64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub choice: SchedulerChoice,
    pub to: usize,
}

#[derive(Clone, Debug)]
pub struct StateSpace {
    states: IndexSet<Heap>,
    depth: Vec<usize>,
    parent: Vec<Option<(usize, SchedulerChoice)>>,
    edges: Vec<Edge>,
    truncated: bool,
    bound: Bound,
    step_errors: Vec<(usize, SchedulerChoice, StepError)>,
}

impl StateSpace {
    /// The canonical initial heap; counterexample paths replay from here.
    pub fn initial(&self) -> &Heap {
        &self.states[0]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &Heap> {
        self.states.iter()
    }

    pub fn state(&self, index: usize) -> &Heap {
        &self.states[index]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn depth(&self, index: usize) -> usize {
        self.depth[index]
    }

    /// Whether the bound cut off part of the reachable space.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn bound(&self) -> Bound {
        self.bound
    }

    /// Enabled choices whose step failed. Always empty by construction of
    /// `enabled_choices`; kept as evidence rather than assumed.
    pub fn step_errors(&self) -> &[(usize, SchedulerChoice, StepError)] {
        &self.step_errors
    }

    /// Shortest choice sequence from the initial heap to `index`.
    pub fn path_to(&self, index: usize) -> Vec<SchedulerChoice> {
        let mut path = Vec::new();
        let mut at = index;
        while let Some((p, c)) = self.parent[at] {
            path.push(c);
            at = p;
        }
        path.reverse();
        path
    }

    /// Whether every state's successors were all added. Terminal states and
    /// states without enabled choices count as complete.
    pub fn is_exhaustive(&self) -> bool {
        !self.truncated && self.step_errors.is_empty()
    }

    pub fn dump(&self) -> SpaceDump {
        SpaceDump {
            initial: self.initial().to_string(),
            states: self.states.iter().map(|h| h.to_string()).collect(),
            edges: self.edges.clone(),
            truncated: self.truncated,
            bound: self.bound,
        }
    }
}

/// Serializable snapshot of a state space.
#[derive(Clone, Debug, Serialize)]
pub struct SpaceDump {
    pub initial: String,
    pub states: Vec<String>,
    pub edges: Vec<Edge>,
    pub truncated: bool,
    pub bound: Bound,
}

/// Breadth-first closure of `step_system` from `initial`.
///
/// `initial` is expected to be well-formed; ill-formed heaps are explored all
/// the same, which is how the negative controls exercise the checks.
pub fn explore(initial: &Heap, evaluator: &Evaluator, bound: Bound) -> StateSpace {
    let mut space = StateSpace {
        states: IndexSet::new(),
        depth: vec![0],
        parent: vec![None],
        edges: Vec::new(),
        truncated: false,
        bound,
        step_errors: Vec::new(),
    };
    space.states.insert(canonicalize(initial));
    let mut frontier = VecDeque::from([0usize]);
    while let Some(from) = frontier.pop_front() {
        let choices = enabled_choices(&space.states[from]);
        if choices.is_empty() {
            continue;
        }
        if space.depth[from] >= bound.max_depth {
            space.truncated = true;
            continue;
        }
        for choice in choices {
            let mut next = space.states[from].clone();
            if let Err(err) = evaluator.step_system(&mut next, choice) {
                space.step_errors.push((from, choice, err));
                continue;
            }
            let next = canonicalize(&next);
            let to = match space.states.get_index_of(&next) {
                Some(i) => i,
                None if space.states.len() >= bound.max_states => {
                    space.truncated = true;
                    continue;
                }
                None => {
                    let (i, _) = space.states.insert_full(next);
                    space.depth.push(space.depth[from] + 1);
                    space.parent.push(Some((from, choice)));
                    frontier.push_back(i);
                    i
                }
            };
            space.edges.push(Edge { from, choice, to });
        }
    }
    space
}

/// Renames actors and locations by order of first occurrence in a
/// deterministic traversal.
///
/// Actors are visited breadth-first by reference, starting from the lowest
/// identifier (the root of an injected program). Within an actor the
/// traversal covers `this`, the current expression and then the queue, left
/// to right. Actors that no visited actor refers to are picked up afterwards
/// in identifier order, and locations that appear only in local heaps are
/// numbered last, per actor, in their existing order. Heaps that differ only
/// in the interleaving of independent allocations map to the same state.
pub fn canonicalize(heap: &Heap) -> Heap {
    let mut ids: HashMap<ActorId, ActorId> = HashMap::new();
    let mut locs: HashMap<Loc, Loc> = HashMap::new();
    let mut order: Vec<ActorId> = Vec::new();
    let mut work: VecDeque<ActorId> = VecDeque::new();

    fn name_actor(
        id: ActorId,
        ids: &mut HashMap<ActorId, ActorId>,
        order: &mut Vec<ActorId>,
        work: &mut VecDeque<ActorId>,
    ) {
        if !ids.contains_key(&id) {
            ids.insert(id, ActorId(ids.len() as u32));
            order.push(id);
            work.push_back(id);
        }
    }
    fn name_loc(l: Loc, locs: &mut HashMap<Loc, Loc>) {
        let next = Loc(locs.len() as u32);
        locs.entry(l).or_insert(next);
    }

    for seed in heap.actors.keys() {
        name_actor(*seed, &mut ids, &mut order, &mut work);
        while let Some(id) = work.pop_front() {
            let Some(actor) = heap.actor(id) else { continue };
            name_loc(actor.this, &mut locs);
            let mut visit = |v: &Value| match v {
                Value::Loc(l) => name_loc(*l, &mut locs),
                Value::Actor(a) => name_actor(*a, &mut ids, &mut order, &mut work),
                Value::Bestowed(l, a) => {
                    name_loc(*l, &mut locs);
                    name_actor(*a, &mut ids, &mut order, &mut work);
                }
                _ => {}
            };
            actor.current.for_each_value(&mut visit);
            for m in &actor.queue {
                m.for_each_value(&mut visit);
            }
        }
    }
    for id in &order {
        if let Some(actor) = heap.actor(*id) {
            for l in &actor.local {
                name_loc(*l, &mut locs);
            }
        }
    }

    // Dangling names (ill-formed heaps) keep a deterministic image past the
    // renamed range.
    let (n_ids, n_locs) = (ids.len() as u32, locs.len() as u32);
    let rename_id = |a: ActorId| ids.get(&a).copied().unwrap_or(ActorId(n_ids + a.0));
    let rename_loc = |l: Loc| locs.get(&l).copied().unwrap_or(Loc(n_locs + l.0));

    let mut out = Heap::new();
    for (old, actor) in &heap.actors {
        let renamed = Actor {
            this: rename_loc(actor.this),
            local: actor.local.iter().map(|l| rename_loc(*l)).collect(),
            queue: actor.queue.iter().map(|m| m.rename(&rename_id, &rename_loc)).collect(),
            current: actor.current.rename(&rename_id, &rename_loc),
        };
        out.actors.insert(rename_id(*old), renamed);
    }
    let next_loc = out
        .actors
        .values()
        .flat_map(|a| a.local.iter().chain(std::iter::once(&a.this)))
        .map(|l| l.0 + 1)
        .max()
        .unwrap_or(0)
        .max(n_locs);
    let next_id = out.actors.keys().map(|a| a.0 + 1).max().unwrap_or(0).max(n_ids);
    out.set_counters(next_loc, next_id);
    out
}

/// A reachable state that can neither step nor is terminal.
#[derive(Clone, Debug)]
pub struct ProgressViolation {
    pub state: usize,
    pub heap: Heap,
    pub path: Vec<SchedulerChoice>,
}

/// An edge whose target heap is not well-formed.
#[derive(Clone, Debug)]
pub struct PreservationViolation {
    pub edge: Edge,
    pub report: WfReport,
    pub path: Vec<SchedulerChoice>,
}

/// Two distinct actors about to mutate the same location.
#[derive(Clone, Debug)]
pub struct RaceWitness {
    pub state: usize,
    pub heap: Heap,
    pub actors: (ActorId, ActorId),
    pub location: Loc,
    pub path: Vec<SchedulerChoice>,
}

/// Every state either has an enabled choice or is terminal.
pub fn check_progress(space: &StateSpace) -> Result<(), ProgressViolation> {
    for (i, heap) in space.states.iter().enumerate() {
        if enabled_choices(heap).is_empty() && !heap.is_terminal() {
            return Err(ProgressViolation { state: i, heap: heap.clone(), path: space.path_to(i) });
        }
    }
    Ok(())
}

/// Every edge leads to a well-formed heap.
pub fn check_preservation(space: &StateSpace) -> Result<(), PreservationViolation> {
    let mut verdict: Vec<Option<bool>> = vec![None; space.len()];
    for edge in &space.edges {
        if verdict[edge.to].is_some() {
            continue;
        }
        let report = wf_heap(&space.states[edge.to]);
        verdict[edge.to] = Some(report.ok());
        if !report.ok() {
            let mut path = space.path_to(edge.from);
            path.push(edge.choice);
            return Err(PreservationViolation { edge: *edge, report, path });
        }
    }
    Ok(())
}

/// No state has two distinct actors whose active redex mutates the same
/// location. The redex may sit under an evaluation context.
pub fn check_race_freedom(space: &StateSpace) -> Result<(), RaceWitness> {
    for (i, heap) in space.states.iter().enumerate() {
        if let Some((a, b, location)) = find_race(heap) {
            return Err(RaceWitness { state: i, heap: heap.clone(), actors: (a, b), location, path: space.path_to(i) });
        }
    }
    Ok(())
}

/// First pair of actors about to mutate the same location, if any.
pub fn find_race(heap: &Heap) -> Option<(ActorId, ActorId, Loc)> {
    let mut seen: HashMap<Loc, ActorId> = HashMap::new();
    for (id, actor) in &heap.actors {
        if let Some(Redex::Mutate(l)) = active_redex(&actor.current) {
            if let Some(first) = seen.insert(l, *id) {
                return Some((first, *id, l));
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduleStats {
    /// Maximal schedules visited.
    pub schedules: usize,
    /// Some schedule was cut by the depth bound, or the schedule limit hit.
    pub truncated: bool,
}

/// Enumerates every maximal schedule from `initial` without merging states,
/// calling `visit` with the trace and final heap of each. Stops after
/// `max_schedules` schedules; schedules longer than `max_depth` are cut.
pub fn for_each_schedule(
    initial: &Heap,
    evaluator: &Evaluator,
    max_schedules: usize,
    max_depth: usize,
    mut visit: impl FnMut(&Trace, &Heap),
) -> ScheduleStats {
    let mut stats = ScheduleStats { schedules: 0, truncated: false };
    let mut trace = Trace::new();
    walk(initial.clone(), evaluator, max_schedules, max_depth, &mut trace, &mut stats, &mut visit);
    stats
}

fn walk(
    heap: Heap,
    evaluator: &Evaluator,
    max_schedules: usize,
    max_depth: usize,
    trace: &mut Trace,
    stats: &mut ScheduleStats,
    visit: &mut impl FnMut(&Trace, &Heap),
) {
    if stats.schedules >= max_schedules {
        stats.truncated = true;
        return;
    }
    let choices = enabled_choices(&heap);
    if choices.is_empty() || trace.len() >= max_depth {
        stats.truncated |= !choices.is_empty();
        stats.schedules += 1;
        visit(trace, &heap);
        return;
    }
    for choice in choices {
        let mut next = heap.clone();
        let Ok(event) = evaluator.step_system(&mut next, choice) else { continue };
        trace.push(event);
        walk(next, evaluator, max_schedules, max_depth, trace, stats, visit);
        trace.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Expr;
    use crate::text::{parse_expr, parse_heap};

    fn space(src: &str) -> StateSpace {
        explore(&parse_heap(src).unwrap(), &Evaluator::default(), Bound::default())
    }

    #[test]
    fn terminal_heap_is_a_single_state() {
        let s = explore(&Heap::inject(Expr::unit()), &Evaluator::default(), Bound::default());
        assert_eq!((s.len(), s.edges().len()), (1, 0));
        assert!(!s.truncated());
    }

    #[test]
    fn two_step_beta_chain() {
        let prog = parse_expr("(app (fn a Unit (app (fn b Unit b) a)) unit)").unwrap();
        let s = explore(&Heap::inject(prog), &Evaluator::default(), Bound::default());
        assert_eq!((s.len(), s.edges().len()), (3, 2));
    }

    #[test]
    fn independent_steps_form_a_diamond() {
        let s = space(
            "(heap (actor 0 (this 0) (local 0) (queue) (expr (app (fn x p x) (loc 0)))) \
             (actor 1 (this 1) (local 1) (queue) (expr (app (fn y p y) (loc 1)))))",
        );
        assert_eq!((s.len(), s.edges().len()), (4, 4));
    }

    #[test]
    fn independent_allocations_merge() {
        let s = space(
            "(heap (actor 0 (this 0) (local 0) (queue) (expr (new p))) \
             (actor 1 (this 1) (local 1) (queue) (expr (new p))))",
        );
        assert_eq!((s.len(), s.edges().len()), (4, 4));
    }

    #[test]
    fn canonicalization_ignores_counter_offsets() {
        let prog = parse_expr("(app (fn a c (send a (fn x p (mutate (new p))))) (new c))").unwrap();
        let base = explore(&Heap::inject(prog.clone()), &Evaluator::default(), Bound::default());
        let shifted = explore(&Heap::inject_with_counters(prog, 40, 17), &Evaluator::default(), Bound::default());
        assert_eq!(base.len(), shifted.len());
        assert_eq!(base.edges().len(), shifted.edges().len());
        assert_eq!(base.initial(), shifted.initial());
    }

    #[test]
    fn stuck_heap_breaks_progress() {
        let s = explore(&Heap::inject(parse_expr("(app unit unit)").unwrap()), &Evaluator::default(), Bound::default());
        let v = check_progress(&s).unwrap_err();
        assert_eq!(v.state, 0);
        assert!(v.path.is_empty());
    }

    #[test]
    fn empty_program_has_progress() {
        let s = explore(&Heap::new(), &Evaluator::default(), Bound::default());
        assert!(check_progress(&s).is_ok());
    }

    #[test]
    fn racy_heap_yields_witness() {
        let s = space(
            "(heap (actor 0 (this 0) (local 0 5) (queue) (expr (mutate (loc 5)))) \
             (actor 1 (this 1) (local 1 5) (queue) (expr (app (fn z Unit z) (mutate (loc 5))))))",
        );
        let w = check_race_freedom(&s).unwrap_err();
        assert_eq!(w.actors, (ActorId(0), ActorId(1)));
        assert_eq!(w.state, 0);
    }

    #[test]
    fn new_passive_edge_preserves_wf() {
        let s = explore(&Heap::inject(Expr::NewPassive), &Evaluator::default(), Bound::default());
        assert!(check_preservation(&s).is_ok());
        assert_eq!(s.state(1).actor(ActorId(0)).unwrap().local.len(), 2);
    }

    #[test]
    fn depth_bound_truncates() {
        let prog = parse_expr("(app (fn a Unit (app (fn b Unit b) a)) unit)").unwrap();
        let s = explore(&Heap::inject(prog), &Evaluator::default(), Bound { max_states: 100, max_depth: 1 });
        assert!(s.truncated());
        assert_eq!(s.len(), 2);
        let s = explore(
            &Heap::inject(parse_expr("(app (fn a Unit (app (fn b Unit b) a)) unit)").unwrap()),
            &Evaluator::default(),
            Bound { max_states: 2, max_depth: 64 },
        );
        assert!(s.truncated());
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn schedules_of_a_diamond() {
        let h = parse_heap(
            "(heap (actor 0 (this 0) (local 0) (queue) (expr (new p))) \
             (actor 1 (this 1) (local 1) (queue) (expr (new p))))",
        )
        .unwrap();
        let mut lens = Vec::new();
        let stats = for_each_schedule(&h, &Evaluator::default(), 100, 100, |t, _| lens.push(t.len()));
        assert_eq!(stats, ScheduleStats { schedules: 2, truncated: false });
        assert_eq!(lens, vec![2, 2]);
    }
}
