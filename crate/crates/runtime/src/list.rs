//! A linked list held by an actor, with index access and iterators.
//!
//! Nodes are objects owned by the list actor. Every node visit counts as
//! one hop: `get(i)` walks from the head and visits `i + 1` nodes, while an
//! iterator keeps its position and visits one node per `get_next`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;

use crate::actor::{spawn_with, ActorRef, Context, Passive};
use crate::bestow::{BestowedRef, ObjOp};
use crate::error::RuntimeError;
use crate::future::Future;
use crate::trace::{self, EventKind, TraceEvent, TurnKind};

pub struct Node {
    elem: i64,
    next: Option<Passive<Node>>,
}

pub struct ListState {
    first: Option<Passive<Node>>,
    len: usize,
    hops: Arc<AtomicU64>,
}

pub struct Iter {
    current: Option<Passive<Node>>,
    hops: u64,
    list_hops: Arc<AtomicU64>,
}

impl Iter {
    pub fn has_next(&self) -> bool {
        self.current.is_some()
    }

    /// The current element, advancing past it.
    pub fn get_next(&mut self) -> Result<Option<i64>, RuntimeError> {
        let Some(node) = self.current.take() else { return Ok(None) };
        let (elem, next) = node.with(|n| (n.elem, n.next.clone()))?;
        self.hops += 1;
        self.list_hops.fetch_add(1, Ordering::Relaxed);
        self.current = next;
        Ok(Some(elem))
    }

    /// Nodes visited by this iterator.
    pub fn hops(&self) -> u64 {
        self.hops
    }
}

#[derive(Clone)]
pub struct List {
    actor: ActorRef<ListState>,
    hops: Arc<AtomicU64>,
}

impl List {
    pub fn new(elements: Vec<i64>) -> Result<List, RuntimeError> {
        let hops = Arc::new(AtomicU64::new(0));
        let counter = hops.clone();
        let actor = spawn_with(move |ctx| {
            let len = elements.len();
            let mut first = None;
            for elem in elements.into_iter().rev() {
                first = Some(ctx.new_passive(Node { elem, next: first }));
            }
            ListState { first, len, hops: counter }
        })?;
        Ok(List { actor, hops })
    }

    pub fn actor(&self) -> &ActorRef<ListState> {
        &self.actor
    }

    /// Total node visits so far, across all operations.
    pub fn hops(&self) -> u64 {
        self.hops.load(Ordering::SeqCst)
    }

    pub fn len(&self) -> Result<usize, RuntimeError> {
        self.actor.perform(|s, _| s.len).wait()
    }

    pub fn is_empty(&self) -> Result<bool, RuntimeError> {
        Ok(self.len()? == 0)
    }

    /// The element at `index` and the number of nodes visited to find it.
    pub fn get(&self, index: usize) -> Future<Result<(Option<i64>, u64), RuntimeError>> {
        self.actor.perform(move |s, ctx| {
            ctx.note("get");
            get(s, index)
        })
    }

    /// An iterator created inside the list and bestowed on the caller.
    pub fn get_iterator(&self) -> Result<BestowedRef<Iter>, RuntimeError> {
        self.actor
            .perform(|s, ctx| {
                let iter = ctx.new_passive(Iter { current: s.first.clone(), hops: 0, list_hops: s.hops.clone() });
                ctx.bestow(&iter)
            })
            .wait()?
    }

    pub fn remove_first(&self) -> Future<Result<Option<i64>, RuntimeError>> {
        self.actor.perform(|s, ctx| {
            ctx.note("remove-first");
            let Some(node) = s.first.take() else { return Ok(None) };
            let (elem, next) = node.with(|n| (n.elem, n.next.clone()))?;
            s.first = next;
            s.len -= 1;
            Ok(Some(elem))
        })
    }
}

fn get(s: &mut ListState, index: usize) -> Result<(Option<i64>, u64), RuntimeError> {
    let mut current = s.first.clone();
    let mut visited = 0;
    let mut remaining = index;
    while let Some(node) = current {
        let (elem, next) = node.with(|n| (n.elem, n.next.clone()))?;
        visited += 1;
        s.hops.fetch_add(1, Ordering::Relaxed);
        if remaining == 0 {
            return Ok((Some(elem), visited));
        }
        remaining -= 1;
        current = next;
    }
    Ok((None, visited))
}

fn next_op() -> ObjOp<Iter, Result<Option<i64>, RuntimeError>> {
    Box::new(|it: &mut Iter, ctx: &Context| {
        ctx.note("getNext");
        it.get_next()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `get(0)`, `get(1)`, ... through the list interface.
    Get,
    /// `hasNext`/`getNext` on a bestowed iterator.
    BestowedIterator,
    /// `getNext` twice per atomic batch on a bestowed iterator.
    AtomicPairs,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Get => "get",
            Mode::BestowedIterator => "bestowed-iterator",
            Mode::AtomicPairs => "atomic-pairs",
        }
    }

    /// Hops one client needs to read all `m` elements.
    pub fn expected_hops(self, m: u64) -> u64 {
        match self {
            Mode::Get => m * (m.saturating_sub(1)) / 2 + m,
            Mode::BestowedIterator | Mode::AtomicPairs => m,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub mode: Mode,
    pub clients: usize,
    pub elements: usize,
    pub hops: u64,
    pub hops_per_client: Vec<u64>,
    pub expected_hops_per_client: u64,
    pub owner_turns: u64,
    pub relayed_messages: u64,
    /// Every client read every element, in list order.
    pub in_order: bool,
    /// Each atomic pair was two consecutive elements read in one owner
    /// turn. Trivially true outside `AtomicPairs`.
    pub pairs_adjacent: bool,
    pub off_owner_accesses: u64,
    pub trace: Vec<TraceEvent>,
}

/// Runs `clients` threads that each read a list of `elements` integers.
pub fn run(clients: usize, elements: usize, mode: Mode) -> Result<Report, RuntimeError> {
    let list = List::new((0..elements as i64).collect())?;
    let handles: Vec<_> = (0..clients)
        .map(|c| {
            let list = list.clone();
            thread::Builder::new()
                .name(format!("client-{c}"))
                .spawn(move || client(&list, elements, mode))
                .map_err(|e| RuntimeError::SpawnFailed(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut hops_per_client = Vec::with_capacity(clients);
    let mut in_order = true;
    let mut pairs_ok = true;
    for h in handles {
        let (elems, hops, pairs) = h.join().map_err(|_| RuntimeError::DeliveryFailure)??;
        in_order &= elems == (0..elements as i64).collect::<Vec<_>>();
        pairs_ok &= pairs;
        hops_per_client.push(hops);
    }
    list.actor().sync()?;
    let trace = list.actor().trace();
    let relayed_messages =
        trace.iter().filter(|e| matches!(e.kind, EventKind::Turn(TurnKind::Relay | TurnKind::RelayBatch(_)))).count()
            as u64;
    if mode == Mode::AtomicPairs {
        pairs_ok &= trace::turns(&trace).iter().all(|turn| match turn[0].kind {
            EventKind::Turn(TurnKind::RelayBatch(n)) => {
                turn.iter().filter(|e| matches!(e.kind, EventKind::Note(_))).count() == n
            }
            _ => true,
        });
    }
    let stats = list.actor().stats();
    Ok(Report {
        mode,
        clients,
        elements,
        hops: list.hops(),
        hops_per_client,
        expected_hops_per_client: mode.expected_hops(elements as u64),
        owner_turns: stats.turns,
        relayed_messages,
        in_order,
        pairs_adjacent: pairs_ok,
        off_owner_accesses: stats.off_owner_accesses,
        trace,
    })
}

fn client(list: &List, elements: usize, mode: Mode) -> Result<(Vec<i64>, u64, bool), RuntimeError> {
    let mut out = Vec::with_capacity(elements);
    match mode {
        Mode::Get => {
            let mut hops = 0;
            for i in 0..elements {
                let (elem, visited) = list.get(i).wait()??;
                hops += visited;
                out.extend(elem);
            }
            Ok((out, hops, true))
        }
        Mode::BestowedIterator => {
            let it = list.get_iterator()?;
            while it
                .send(|it, ctx| {
                    ctx.note("hasNext");
                    it.has_next()
                })
                .wait()?
            {
                out.extend(
                    it.send(|it, ctx| {
                        ctx.note("getNext");
                        it.get_next()
                    })
                    .wait()??,
                );
            }
            let hops = it.send(|it, _| it.hops()).wait()?;
            Ok((out, hops, true))
        }
        Mode::AtomicPairs => {
            let it = list.get_iterator()?;
            let mut adjacent = true;
            loop {
                let pair = it.atomic(vec![next_op(), next_op()])?.wait()?;
                let a = pair[0].clone()?;
                let b = pair[1].clone()?;
                if let (Some(x), Some(y)) = (a, b) {
                    adjacent &= y == x + 1;
                }
                out.extend(a);
                out.extend(b);
                if b.is_none() {
                    break;
                }
            }
            let hops = it.send(|it, _| it.hops()).wait()?;
            Ok((out, hops, adjacent))
        }
    }
}
