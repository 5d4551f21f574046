use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use bestow_runtime::trace::{override_windows_are_exclusive, turns};
use bestow_runtime::{spawn, spawn_with, Context, EventKind, Op, Origin, TurnKind};
use proptest::prelude::*;

#[test]
fn thousand_actors_each_process_one_message() {
    let hits = Arc::new(AtomicUsize::new(0));
    let actors: Vec<_> = (0..1000).map(|_| spawn(0u32).unwrap()).collect();
    let futs: Vec<_> = actors
        .iter()
        .map(|a| {
            let hits = hits.clone();
            a.perform(move |n, _| {
                *n += 1;
                hits.fetch_add(1, Ordering::SeqCst);
            })
        })
        .collect();
    for f in futs {
        f.wait().unwrap();
    }
    assert_eq!(hits.load(Ordering::SeqCst), 1000);
    for a in &actors {
        assert_eq!(a.perform(|n, _| *n).wait(), Ok(1));
    }
}

#[test]
fn concurrent_performers_are_serialised() {
    let a = spawn(0u64).unwrap();
    let threads: Vec<_> = (0..2)
        .map(|_| {
            let a = a.clone();
            thread::spawn(move || {
                for _ in 0..10_000 {
                    a.perform(|n, _| *n += 1);
                }
            })
        })
        .collect();
    for t in threads {
        t.join().unwrap();
    }
    assert_eq!(a.perform(|n, _| *n).wait(), Ok(20_000));
}

#[test]
fn perform_can_return_a_bestowed_reference() {
    let a = spawn_with(|ctx| ctx.new_passive(String::from("root"))).unwrap();
    let b = a.perform(|root, ctx| ctx.bestow(root)).wait().unwrap().unwrap();
    assert_eq!(b.send(|s, _| s.len()).wait(), Ok(4));
}

#[test]
fn bestowed_root_sees_consistent_state() {
    // Invariant: the two halves always sum to 100.
    let a = spawn_with(|ctx| ctx.new_passive((50i64, 50i64))).unwrap();
    let b = a.perform(|root, ctx| ctx.bestow(root)).wait().unwrap().unwrap();
    let threads: Vec<_> = (0..4)
        .map(|k| {
            let b = b.clone();
            thread::spawn(move || {
                for i in 0..500 {
                    let ok = b
                        .send(move |(x, y), _| {
                            let d = (i % 7) as i64 - 3 + k;
                            *x += d;
                            *y -= d;
                            *x + *y == 100
                        })
                        .wait()
                        .unwrap();
                    assert!(ok);
                }
            })
        })
        .collect();
    for t in threads {
        t.join().unwrap();
    }
    assert_eq!(b.send(|(x, y), _| *x + *y).wait(), Ok(100));
}

#[test]
fn two_iterators_share_one_owner_trace() {
    let list = bestow_runtime::list::List::new((0..50).collect()).unwrap();
    let a = list.get_iterator().unwrap();
    let b = list.get_iterator().unwrap();
    let ta = thread::spawn(move || {
        let mut n = 0;
        while a.send(|it, _| it.get_next()).wait().unwrap().unwrap().is_some() {
            n += 1;
        }
        n
    });
    let tb = thread::spawn(move || {
        let mut n = 0;
        while b.send(|it, _| it.get_next()).wait().unwrap().unwrap().is_some() {
            n += 1;
        }
        n
    });
    assert_eq!(ta.join().unwrap(), 50);
    assert_eq!(tb.join().unwrap(), 50);
    let trace = list.actor().trace();
    let relays = trace.iter().filter(|e| e.kind == EventKind::Turn(TurnKind::Relay)).count();
    assert_eq!(relays, 102);
    assert!(trace.windows(2).all(|w| w[0].seq + 1 == w[1].seq));
}

/// A client reads two elements while an interferer keeps sending its own
/// messages; batched reads are always adjacent, separate ones need not be.
#[test]
fn batch_is_adjacent_under_interference() {
    let mut separated = 0;
    for round in 0..40 {
        let a = spawn(0u64).unwrap();
        let stop = Arc::new(std::sync::atomic::AtomicBool::new(false));
        let interferer = {
            let a = a.clone();
            let stop = stop.clone();
            thread::Builder::new()
                .name("interferer".into())
                .spawn(move || {
                    while !stop.load(Ordering::Relaxed) {
                        a.perform(|n, ctx| {
                            ctx.note("foreign");
                            *n += 1
                        });
                        thread::yield_now();
                    }
                })
                .unwrap()
        };
        let read = |label: &'static str| -> Op<u64, u64> {
            Box::new(move |n: &mut u64, ctx: &Context| {
                ctx.note(label);
                *n
            })
        };
        thread::sleep(Duration::from_micros(200));
        a.atomic(vec![read("b1"), read("b2")]).unwrap().wait().unwrap();
        let f1 = a.perform(|n, ctx| {
            ctx.note("s1");
            *n
        });
        thread::sleep(Duration::from_micros(50 * (round % 5)));
        let f2 = a.perform(|n, ctx| {
            ctx.note("s2");
            *n
        });
        f1.wait().unwrap();
        f2.wait().unwrap();
        stop.store(true, Ordering::Relaxed);
        interferer.join().unwrap();
        let trace = a.trace();
        let pos = |label: &str| trace.iter().position(|e| e.kind == EventKind::Note(label.into())).unwrap();
        let (b1, b2) = (pos("b1"), pos("b2"));
        assert!(
            trace[b1 + 1..b2].iter().all(|e| !matches!(e.kind, EventKind::Turn(_) | EventKind::Note(_))),
            "batched reads separated"
        );
        let (s1, s2) = (pos("s1"), pos("s2"));
        if trace[s1..s2].iter().any(|e| e.kind == EventKind::Note("foreign".into())) {
            separated += 1;
        }
    }
    assert!(separated > 0, "individual sends were never separated in 40 rounds");
}

#[test]
fn override_defers_foreign_messages_in_order() {
    let a = spawn(Vec::<String>::new()).unwrap();
    let mut q = a.override_queue().unwrap();
    q.opened().get().unwrap();
    let senders: Vec<_> = (0..3)
        .map(|k| {
            let a = a.clone();
            thread::Builder::new()
                .name(format!("foreign-{k}"))
                .spawn(move || {
                    for i in 0..5 {
                        a.perform(move |v, _| v.push(format!("f{k}.{i}")));
                    }
                })
                .unwrap()
        })
        .collect();
    for s in senders {
        s.join().unwrap();
    }
    let v1 = q
        .submit(|v, _| {
            v.push("op1".into());
            v.len()
        })
        .wait()
        .unwrap();
    // The caller reacts to an intermediate result.
    let v2 = v1 * 10;
    q.submit(move |v, _| v.push(format!("op2:{v2}"))).wait().unwrap();
    q.resume().unwrap().wait().unwrap();
    let log = a.perform(|v, _| v.clone()).wait().unwrap();
    assert_eq!(&log[..2], &["op1".to_string(), "op2:10".to_string()]);
    for k in 0..3 {
        let mine: Vec<_> = log.iter().filter(|s| s.starts_with(&format!("f{k}."))).cloned().collect();
        assert_eq!(mine, (0..5).map(|i| format!("f{k}.{i}")).collect::<Vec<_>>());
    }
    let trace = a.trace();
    assert!(override_windows_are_exclusive(&trace));
    let s = a.stats();
    assert_eq!(s.enqueued, s.processed + s.pending);
}

#[test]
fn resume_happens_at_message_boundary() {
    let a = spawn(0u32).unwrap();
    let mut q = a.override_queue().unwrap();
    q.submit(|n, _| {
        thread::sleep(Duration::from_millis(20));
        *n += 1
    });
    let ack = q.resume().unwrap();
    a.perform(|n, _| *n *= 10);
    ack.wait().unwrap();
    assert_eq!(a.perform(|n, _| *n).wait(), Ok(10));
    let trace = a.trace();
    let kinds: Vec<_> = turns(&trace).iter().map(|t| t[0].kind.clone()).collect();
    assert_eq!(
        kinds,
        vec![
            EventKind::Turn(TurnKind::Override),
            EventKind::Turn(TurnKind::Private),
            EventKind::Turn(TurnKind::Resume),
            EventKind::Turn(TurnKind::Perform),
            EventKind::Turn(TurnKind::Perform),
        ]
    );
}

#[test]
fn origins_are_recorded() {
    let a = spawn(()).unwrap();
    let b = spawn(()).unwrap();
    let a2 = a.clone();
    b.perform(move |_, _| {
        a2.perform(|_, _| ());
    })
    .wait()
    .unwrap();
    a.sync().unwrap();
    let trace = a.trace();
    assert_eq!(trace[0].origin, Origin::Actor(b.id()));
}

#[derive(Clone, Copy, Debug)]
enum Step {
    Add(i64),
    Mul(i64),
    Read,
}

fn apply(step: Step, n: &mut i64) -> i64 {
    match step {
        Step::Add(k) => *n += k,
        Step::Mul(k) => *n = n.wrapping_mul(k),
        Step::Read => {}
    }
    *n
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![(-5i64..5).prop_map(Step::Add), (-3i64..3).prop_map(Step::Mul), Just(Step::Read)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn batch_matches_override(start in -10i64..10, steps in prop::collection::vec(step(), 0..20)) {
        let a = spawn(start).unwrap();
        let ops: Vec<Op<i64, i64>> = steps.iter().map(|&s| Box::new(move |n: &mut i64, _: &Context| apply(s, n)) as Op<i64, i64>).collect();
        let batched = a.atomic(ops).unwrap().wait().unwrap();
        let b = spawn(start).unwrap();
        let mut q = b.override_queue().unwrap();
        let futs: Vec<_> = steps.iter().map(|&s| q.submit(move |n, _| apply(s, n))).collect();
        let overridden: Vec<i64> = futs.into_iter().map(|f| f.wait().unwrap()).collect();
        q.resume().unwrap().wait().unwrap();
        prop_assert_eq!(batched, overridden);
    }

    #[test]
    fn per_sender_fifo(values in prop::collection::vec(any::<u16>(), 1..50)) {
        let a = spawn(Vec::new()).unwrap();
        for v in values.clone() {
            a.perform(move |log: &mut Vec<u16>, _| log.push(v));
        }
        prop_assert_eq!(a.perform(|log, _| log.clone()).wait().unwrap(), values);
    }
}
