use std::collections::BTreeSet;

use bestow_core::eval::{enabled_choices, EvalRule};
use bestow_core::explore::{canonicalize, explore, Bound};
use bestow_core::gen::generate_well_typed;
use bestow_core::text::{parse_expr, parse_heap};
use bestow_core::wf::wf_heap;
use bestow_core::{typecheck, ActorId, Evaluator, Expr, Heap, Loc, QueueOrder, Type, TypeEnv, Value};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ty() -> impl Strategy<Value = Type> {
    prop_oneof![
        Just(Type::Passive),
        Just(Type::Actor),
        Just(Type::Bestowed),
        Just(Type::Unit),
        Just(Type::arrow(Type::Passive, Type::Unit)),
    ]
}

fn name() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("x"), Just("y"), Just("z")]
}

/// Arbitrary, mostly ill-typed, open terms over `x`, `y`, `z`.
fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        name().prop_map(Expr::var),
        Just(Expr::unit()),
        Just(Expr::NewPassive),
        Just(Expr::NewActor),
        (0u32..3).prop_map(|l| Expr::Val(Value::Loc(Loc(l)))),
        (0u32..3).prop_map(|a| Expr::Val(Value::Actor(ActorId(a)))),
        (0u32..3, 0u32..3).prop_map(|(l, a)| Expr::Val(Value::Bestowed(Loc(l), ActorId(a)))),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(f, a)| Expr::app(f, a)),
            (inner.clone(), name(), inner.clone())
                .prop_map(|(t, x, b)| Expr::send(t, Value::lambda(x, Type::Passive, b))),
            inner.clone().prop_map(Expr::mutate),
            inner.clone().prop_map(Expr::bestow),
            (name(), ty(), inner).prop_map(|(x, t, b)| Expr::lambda(x, t, b)),
        ]
    })
}

fn closed_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Unit),
        (0u32..3).prop_map(|a| Value::Actor(ActorId(a))),
        (0u32..3).prop_map(|l| Value::Loc(Loc(l))),
        Just(Value::lambda("w", Type::Passive, Expr::mutate(Expr::var("w")))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn text_round_trip(e in expr()) {
        prop_assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn subst_removes_exactly_the_variable(e in expr(), x in name(), v in closed_value()) {
        let mut expected = e.free_vars();
        expected.remove(x);
        prop_assert_eq!(e.subst(x, &v).free_vars(), expected);
    }

    #[test]
    fn subst_of_absent_variable_is_identity(e in expr(), v in closed_value()) {
        prop_assume!(!e.free_vars().contains("x"));
        prop_assert_eq!(e.subst("x", &v), e);
    }

    #[test]
    fn weakening(e in expr(), extra in ty()) {
        let env = TypeEnv::new().extend("x", Type::Passive).extend("y", Type::Actor);
        if let Ok(t) = typecheck(&env, &e) {
            prop_assert_eq!(typecheck(&env.extend("fresh", extra), &e), Ok(t));
        }
    }

    #[test]
    fn typing_substitution(e in expr()) {
        // Replacing a variable of type c by an actor identifier keeps the type.
        let env = TypeEnv::new().extend("y", Type::Actor);
        if let Ok(t) = typecheck(&env, &e) {
            prop_assert_eq!(typecheck(&TypeEnv::new(), &e.subst("y", &Value::Actor(ActorId(0)))), Ok(t));
        }
    }
}

#[test]
fn ten_thousand_generated_programs_typecheck() {
    for seed in 0..10_000u64 {
        let budget = 1 + (seed % 16) as usize;
        let (e, t) = generate_well_typed(seed, budget).unwrap();
        assert!(e.is_closed(), "seed {seed}: {e}");
        assert!(e.size() <= budget, "seed {seed}: size {} > {budget}", e.size());
        assert_eq!(typecheck(&TypeEnv::new(), &e), Ok(t), "seed {seed}: {e}");
    }
}

/// Random run of a generated program, checking step-local invariants.
fn random_run(seed: u64, order: QueueOrder) {
    let (program, _) = generate_well_typed(seed, 12).unwrap();
    let ev = Evaluator::new(order);
    let mut heap = Heap::inject(program.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sends, mut pops) = (0usize, 0usize);
    for _ in 0..400 {
        let choices = enabled_choices(&heap);
        if choices.is_empty() {
            assert!(heap.is_terminal(), "seed {seed}: stuck on {heap}");
            break;
        }
        let choice = choices[rng.gen_range(0..choices.len())];
        let before = heap.clone();
        let event = ev.step_system(&mut heap, choice).unwrap();
        assert_eq!(event.actor_id, choice.actor);
        sends += event.rule.is_send() as usize;
        pops += (event.rule == EvalRule::ActorMsg) as usize;

        for (id, old) in &before.actors {
            let new = &heap.actors[id];
            // Monotonicity: local heaps only grow, and no actor disappears.
            assert!(old.local.is_subset(&new.local), "seed {seed}: actor {} lost locations", id.0);
            if *id == choice.actor {
                continue;
            }
            // Frame: other actors keep their expression, heap and queue,
            // except that a send receiver gains one message.
            assert_eq!(old.current, new.current, "seed {seed}");
            assert_eq!(old.local, new.local, "seed {seed}");
            if event.rule.is_send() && event.target == Some(*id) {
                assert_eq!(new.queue.len(), old.queue.len() + 1, "seed {seed}");
            } else {
                assert_eq!(old.queue, new.queue, "seed {seed}");
            }
        }
        let spawned: Vec<_> = heap.actors.keys().filter(|k| !before.actors.contains_key(k)).collect();
        match event.rule {
            EvalRule::NewActor => assert_eq!(spawned, vec![&event.target.unwrap()]),
            _ => assert!(spawned.is_empty()),
        }
        let report = wf_heap(&heap);
        assert!(report.ok(), "seed {seed}: {:?} after {choice} on {before}", report.violations);
    }
    // Message conservation: every sent message was popped or is still queued.
    let queued: usize = heap.actors.values().map(|a| a.queue.len()).sum();
    assert_eq!(sends, pops + queued, "seed {seed}: {program}");
}

#[test]
fn random_runs_keep_frame_monotonicity_and_messages() {
    for seed in 0..400 {
        random_run(seed, QueueOrder::Fifo);
        random_run(seed, QueueOrder::Lifo);
    }
}

#[test]
fn canonicalization_is_offset_invariant() {
    for seed in 0..200u64 {
        let (program, _) = generate_well_typed(seed, 10).unwrap();
        let a = explore(&Heap::inject(program.clone()), &Evaluator::default(), Bound::default());
        let b = explore(&Heap::inject_with_counters(program, 17, 5), &Evaluator::default(), Bound::default());
        assert_eq!(a.len(), b.len(), "seed {seed}");
        assert_eq!(a.edges().len(), b.edges().len(), "seed {seed}");
        let sa: BTreeSet<String> = a.states().map(|h| h.to_string()).collect();
        let sb: BTreeSet<String> = b.states().map(|h| h.to_string()).collect();
        assert_eq!(sa, sb, "seed {seed}");
    }
}

/// Any renaming that keeps the root actor lowest.
#[test]
fn canonicalization_is_idempotent_and_renaming_invariant() {
    let h = parse_heap(
        "(heap (counters 9 9) (actor 4 (this 7) (local 7 3) (queue (fn n p (mutate n))) (expr (send (id 8) (fn m p unit)))) \
         (actor 8 (this 5) (local 5) (queue) (expr (bestow (loc 5)))))",
    )
    .unwrap();
    let renamed = parse_heap(
        "(heap (counters 20 20) (actor 2 (this 12) (local 12 13) (queue (fn n p (mutate n))) (expr (send (id 11) (fn m p unit)))) \
         (actor 11 (this 1) (local 1) (queue) (expr (bestow (loc 1)))))",
    )
    .unwrap();
    let c = canonicalize(&h);
    assert_eq!(canonicalize(&c), c);
    assert_eq!(canonicalize(&renamed), c);
}
