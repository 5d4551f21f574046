//! Actors with sequential mailboxes.
//!
//! Each actor runs its own message loop on a dedicated thread and owns its
//! state exclusively. Messages are closures over the state, processed one
//! at a time in admission order, so messages from one sender run in the
//! order they were sent.

use std::cell::{Cell, RefCell};
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::marker::PhantomData;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};

use crate::bestow::BestowedRef;
use crate::error::RuntimeError;
use crate::future::{promise, Future, Promise};
use crate::trace::{EventKind, Origin, TraceEvent, TurnKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActorId(pub u64);

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "actor {}", self.0)
    }
}

static NEXT_ACTOR: AtomicU64 = AtomicU64::new(1);
static NEXT_OBJECT: AtomicU64 = AtomicU64::new(1);

thread_local! {
    static CURRENT: RefCell<Option<Arc<dyn Owner>>> = const { RefCell::new(None) };
    static OPEN_WINDOWS: Cell<usize> = const { Cell::new(0) };
}

/// The actor whose message loop runs on this thread, if any.
pub fn current_actor() -> Option<ActorId> {
    CURRENT.with(|c| c.borrow().as_ref().map(|o| o.shared().id))
}

pub(crate) fn current_owner() -> Option<Arc<dyn Owner>> {
    CURRENT.with(|c| c.borrow().clone())
}

fn current_origin() -> Origin {
    if let Some(id) = current_actor() {
        return Origin::Actor(id);
    }
    let t = thread::current();
    match t.name() {
        Some(name) => Origin::Thread(name.into()),
        None => Origin::Thread(format!("{:?}", t.id()).into()),
    }
}

#[derive(Clone, Debug)]
pub struct ActorConfig {
    /// Maximum operations in one atomic batch.
    pub batch_cap: usize,
    /// How long an open override window may sit idle before it is closed.
    pub watchdog: Duration,
    /// Record a turn event for every message.
    pub trace: bool,
    /// Also record every access to an owned object.
    pub trace_accesses: bool,
    pub stack_size: usize,
}

impl Default for ActorConfig {
    fn default() -> ActorConfig {
        ActorConfig {
            batch_cap: 64,
            watchdog: Duration::from_secs(5),
            trace: true,
            trace_accesses: false,
            stack_size: 512 * 1024,
        }
    }
}

/// Counters for one actor. `processed` counts messages taken from a queue,
/// so `enqueued == processed + pending` always holds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActorStats {
    pub enqueued: u64,
    pub processed: u64,
    pub pending: u64,
    pub turns: u64,
    pub accesses: u64,
    pub off_owner_accesses: u64,
}

pub(crate) struct Shared {
    pub(crate) id: ActorId,
    pub(crate) config: ActorConfig,
    trace: Mutex<Vec<TraceEvent>>,
    turn: AtomicU64,
    enqueued: AtomicU64,
    processed: AtomicU64,
    accesses: AtomicU64,
    off_owner: AtomicU64,
}

impl Shared {
    fn record(&self, origin: Origin, kind: EventKind) {
        if !self.config.trace {
            return;
        }
        let mut trace = self.trace.lock();
        let seq = trace.len() as u64;
        trace.push(TraceEvent { seq, turn: self.turn.load(Ordering::Relaxed), origin, kind });
    }

    pub(crate) fn record_access(&self, object: u64, on_owner: bool) {
        self.accesses.fetch_add(1, Ordering::Relaxed);
        if !on_owner {
            self.off_owner.fetch_add(1, Ordering::Relaxed);
        }
        if on_owner && self.config.trace_accesses {
            self.record(Origin::Actor(self.id), EventKind::Access { object });
        }
    }
}

type Job<S> = Box<dyn FnOnce(&mut S, &Context) + Send>;

enum Envelope<S> {
    Job { origin: Origin, kind: TurnKind, job: Job<S> },
    Override { window: u64, origin: Origin },
    Resume { origin: Origin, ack: Promise<()> },
}

struct Window<S> {
    queue: VecDeque<Envelope<S>>,
    opened: Option<Promise<()>>,
    last_activity: Instant,
}

struct Mailbox<S> {
    regular: VecDeque<Envelope<S>>,
    windows: HashMap<u64, Window<S>>,
    active: Option<u64>,
    stopped: bool,
    next_window: u64,
}

pub(crate) struct Core<S> {
    shared: Arc<Shared>,
    mailbox: Mutex<Mailbox<S>>,
    wake: Condvar,
    handles: AtomicUsize,
    thread: Mutex<Option<JoinHandle<()>>>,
}

/// Type-erased view of an actor, used to relay work from bestowed
/// references without knowing the owner's state type.
pub(crate) trait Owner: Send + Sync {
    fn shared(&self) -> &Arc<Shared>;
    fn submit(&self, kind: TurnKind, job: Box<dyn FnOnce(&Context) + Send>) -> Result<(), RuntimeError>;
    fn add_handle(&self);
    fn drop_handle(&self);
}

impl<S: Send + 'static> Owner for Core<S> {
    fn shared(&self) -> &Arc<Shared> {
        &self.shared
    }

    fn submit(&self, kind: TurnKind, job: Box<dyn FnOnce(&Context) + Send>) -> Result<(), RuntimeError> {
        self.enqueue(Envelope::Job { origin: current_origin(), kind, job: Box::new(move |_, ctx| job(ctx)) })
    }

    fn add_handle(&self) {
        self.handles.fetch_add(1, Ordering::SeqCst);
    }

    fn drop_handle(&self) {
        if self.handles.fetch_sub(1, Ordering::SeqCst) == 1 {
            self.stop();
        }
    }
}

/// A strong, counted handle; the actor stops when the last one is dropped.
pub(crate) struct Counted<O: ?Sized + Owner>(pub(crate) Arc<O>);

impl<O: ?Sized + Owner> Counted<O> {
    /// Wraps `owner`, registering a new handle.
    pub(crate) fn new(owner: Arc<O>) -> Counted<O> {
        owner.add_handle();
        Counted(owner)
    }
}

impl<O: ?Sized + Owner> Clone for Counted<O> {
    fn clone(&self) -> Self {
        Counted::new(self.0.clone())
    }
}

impl<O: ?Sized + Owner> Drop for Counted<O> {
    fn drop(&mut self) {
        self.0.drop_handle();
    }
}

impl<S: Send + 'static> Core<S> {
    fn enqueue(&self, env: Envelope<S>) -> Result<(), RuntimeError> {
        let mut mb = self.mailbox.lock();
        if mb.stopped {
            return Err(RuntimeError::DeliveryFailure);
        }
        mb.regular.push_back(env);
        self.shared.enqueued.fetch_add(1, Ordering::SeqCst);
        drop(mb);
        self.wake.notify_one();
        Ok(())
    }

    fn enqueue_private(&self, window: u64, env: Envelope<S>) -> Result<(), RuntimeError> {
        let mut mb = self.mailbox.lock();
        let w = mb.windows.get_mut(&window).ok_or(RuntimeError::DeliveryFailure)?;
        w.queue.push_back(env);
        w.last_activity = Instant::now();
        self.shared.enqueued.fetch_add(1, Ordering::SeqCst);
        drop(mb);
        self.wake.notify_one();
        Ok(())
    }

    fn stop(&self) {
        self.mailbox.lock().stopped = true;
        self.wake.notify_all();
    }

    /// Enqueued, taken and still queued, read together so they balance.
    fn counts(&self) -> (u64, u64, u64) {
        let mb = self.mailbox.lock();
        let pending = (mb.regular.len() + mb.windows.values().map(|w| w.queue.len()).sum::<usize>()) as u64;
        (self.shared.enqueued.load(Ordering::SeqCst), self.shared.processed.load(Ordering::SeqCst), pending)
    }

    /// The next envelope to process, honoring an open override window.
    /// `None` once stopped and drained.
    fn next(&self) -> Option<Envelope<S>> {
        let mut mb = self.mailbox.lock();
        loop {
            if let Some(active) = mb.active {
                let w = mb.windows.get_mut(&active).expect("active window exists");
                if let Some(env) = w.queue.pop_front() {
                    self.shared.processed.fetch_add(1, Ordering::SeqCst);
                    return Some(env);
                }
                let deadline = w.last_activity + self.shared.config.watchdog;
                if Instant::now() >= deadline {
                    mb.windows.remove(&active);
                    mb.active = None;
                    self.shared.record(Origin::Actor(self.shared.id), EventKind::WatchdogResume);
                    continue;
                }
                self.wake.wait_until(&mut mb, deadline);
                continue;
            }
            if let Some(env) = mb.regular.pop_front() {
                self.shared.processed.fetch_add(1, Ordering::SeqCst);
                return Some(env);
            }
            if mb.stopped {
                return None;
            }
            self.wake.wait(&mut mb);
        }
    }

    fn process(&self, state: &mut S, env: Envelope<S>, owner: &Arc<dyn Owner>) {
        let turn = self.shared.turn.fetch_add(1, Ordering::SeqCst) + 1;
        match env {
            Envelope::Job { origin, kind, job } => {
                self.shared.record(origin, EventKind::Turn(kind));
                let ctx = Context { owner: owner.clone(), turn, _local: PhantomData };
                // A panicking message drops its promise, which the sender
                // observes as a delivery failure; the actor keeps running.
                let _ = catch_unwind(AssertUnwindSafe(|| job(state, &ctx)));
            }
            Envelope::Override { window, origin } => {
                self.shared.record(origin, EventKind::Turn(TurnKind::Override));
                let mut mb = self.mailbox.lock();
                let opened = mb.windows.get_mut(&window).and_then(|w| {
                    w.last_activity = Instant::now();
                    w.opened.take()
                });
                mb.active = Some(window);
                drop(mb);
                if let Some(p) = opened {
                    p.complete(());
                }
            }
            Envelope::Resume { origin, ack } => {
                self.shared.record(origin, EventKind::Turn(TurnKind::Resume));
                let mut mb = self.mailbox.lock();
                if let Some(active) = mb.active.take() {
                    mb.windows.remove(&active);
                }
                drop(mb);
                ack.complete(());
            }
        }
    }
}

/// Marks the actor stopped and fails everything still queued when the loop
/// exits, including by panic.
struct ExitGuard<S: Send + 'static>(Arc<Core<S>>);

impl<S: Send + 'static> Drop for ExitGuard<S> {
    fn drop(&mut self) {
        let mut mb = self.0.mailbox.lock();
        mb.stopped = true;
        mb.active = None;
        let regular = std::mem::take(&mut mb.regular);
        let windows = std::mem::take(&mut mb.windows);
        drop(mb);
        drop(regular);
        drop(windows);
        CURRENT.with(|c| c.borrow_mut().take());
    }
}

/// Handle to a running actor with state `S`. Cloning shares the actor;
/// dropping the last handle (including bestowed references) stops it once
/// its mailbox drains.
pub struct ActorRef<S: Send + 'static> {
    core: Counted<Core<S>>,
}

impl<S: Send + 'static> Clone for ActorRef<S> {
    fn clone(&self) -> Self {
        ActorRef { core: self.core.clone() }
    }
}

impl<S: Send + 'static> fmt::Debug for ActorRef<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ActorRef({})", self.id().0)
    }
}

pub fn spawn<S: Send + 'static>(state: S) -> Result<ActorRef<S>, RuntimeError> {
    spawn_configured(ActorConfig::default(), move |_| state)
}

/// Spawns an actor whose initial state is built inside its own loop, so it
/// may allocate objects owned by the actor.
pub fn spawn_with<S: Send + 'static>(
    init: impl FnOnce(&Context) -> S + Send + 'static,
) -> Result<ActorRef<S>, RuntimeError> {
    spawn_configured(ActorConfig::default(), init)
}

pub fn spawn_configured<S: Send + 'static>(
    config: ActorConfig,
    init: impl FnOnce(&Context) -> S + Send + 'static,
) -> Result<ActorRef<S>, RuntimeError> {
    let id = ActorId(NEXT_ACTOR.fetch_add(1, Ordering::Relaxed));
    let stack_size = config.stack_size;
    let shared = Arc::new(Shared {
        id,
        config,
        trace: Mutex::new(Vec::new()),
        turn: AtomicU64::new(0),
        enqueued: AtomicU64::new(0),
        processed: AtomicU64::new(0),
        accesses: AtomicU64::new(0),
        off_owner: AtomicU64::new(0),
    });
    let core = Arc::new(Core {
        shared,
        mailbox: Mutex::new(Mailbox {
            regular: VecDeque::new(),
            windows: HashMap::new(),
            active: None,
            stopped: false,
            next_window: 0,
        }),
        wake: Condvar::new(),
        handles: AtomicUsize::new(1),
        thread: Mutex::new(None),
    });
    let loop_core = core.clone();
    let handle = thread::Builder::new()
        .name(format!("actor-{}", id.0))
        .stack_size(stack_size)
        .spawn(move || run_loop(loop_core, init))
        .map_err(|e| RuntimeError::SpawnFailed(e.to_string()))?;
    *core.thread.lock() = Some(handle);
    Ok(ActorRef { core: Counted(core) })
}

fn run_loop<S: Send + 'static>(core: Arc<Core<S>>, init: impl FnOnce(&Context) -> S) {
    let _guard = ExitGuard(core.clone());
    let owner: Arc<dyn Owner> = core.clone();
    CURRENT.with(|c| *c.borrow_mut() = Some(owner.clone()));
    let ctx = Context { owner: owner.clone(), turn: 0, _local: PhantomData };
    let mut state = init(&ctx);
    drop(ctx);
    while let Some(env) = core.next() {
        core.process(&mut state, env, &owner);
    }
}

impl<S: Send + 'static> ActorRef<S> {
    pub fn id(&self) -> ActorId {
        self.core.0.shared.id
    }

    pub fn config(&self) -> &ActorConfig {
        &self.core.0.shared.config
    }

    /// Runs `f` against the actor's state inside its loop.
    pub fn perform<R: Send + 'static>(&self, f: impl FnOnce(&mut S, &Context) -> R + Send + 'static) -> Future<R> {
        let (p, fut) = promise();
        let job: Job<S> = Box::new(move |s, ctx| p.complete(f(s, ctx)));
        match self.core.0.enqueue(Envelope::Job { origin: current_origin(), kind: TurnKind::Perform, job }) {
            Ok(()) => fut,
            Err(e) => Future::failed(e),
        }
    }

    /// Runs all `ops` back to back in a single turn; results are returned
    /// in order.
    pub fn atomic<R: Send + 'static>(&self, ops: Vec<Op<S, R>>) -> Result<Future<Vec<R>>, RuntimeError> {
        let cap = self.core.0.shared.config.batch_cap;
        if ops.len() > cap {
            return Err(RuntimeError::BatchTooLarge { len: ops.len(), cap });
        }
        let (p, fut) = promise();
        let len = ops.len();
        let job: Job<S> = Box::new(move |s, ctx| {
            let mut out = Vec::with_capacity(ops.len());
            for (i, op) in ops.into_iter().enumerate() {
                ctx.record(EventKind::BatchStep(i));
                out.push(op(s, ctx));
            }
            p.complete(out)
        });
        self.core.0.enqueue(Envelope::Job { origin: current_origin(), kind: TurnKind::Batch(len), job })?;
        Ok(fut)
    }

    /// Asks the actor to consume only a private queue, from the point the
    /// request is processed until [`PrivateQueue::resume`]. Messages sent to
    /// the regular mailbox meanwhile are deferred in order.
    pub fn override_queue(&self) -> Result<PrivateQueue<S>, RuntimeError> {
        if OPEN_WINDOWS.with(Cell::get) > 0 {
            return Err(RuntimeError::NestedOverride);
        }
        let core = &self.core.0;
        let (opened, opened_fut) = promise();
        let mut mb = core.mailbox.lock();
        if mb.stopped {
            return Err(RuntimeError::DeliveryFailure);
        }
        let window = mb.next_window;
        mb.next_window += 1;
        mb.windows
            .insert(window, Window { queue: VecDeque::new(), opened: Some(opened), last_activity: Instant::now() });
        mb.regular.push_back(Envelope::Override { window, origin: current_origin() });
        core.shared.enqueued.fetch_add(1, Ordering::SeqCst);
        drop(mb);
        core.wake.notify_one();
        OPEN_WINDOWS.with(|c| c.set(c.get() + 1));
        Ok(PrivateQueue { core: self.core.clone(), window, opened: opened_fut, resumed: false, _local: PhantomData })
    }

    /// Stops accepting messages; already queued ones are still processed.
    pub fn stop(&self) {
        self.core.0.stop();
    }

    /// Stops the actor and waits for its loop to finish.
    pub fn join(&self) {
        self.stop();
        if current_actor() == Some(self.id()) {
            return;
        }
        if let Some(h) = self.core.0.thread.lock().take() {
            let _ = h.join();
        }
    }

    pub fn is_stopped(&self) -> bool {
        self.core.0.mailbox.lock().stopped
    }

    pub fn stats(&self) -> ActorStats {
        let s = &self.core.0.shared;
        let (enqueued, processed, pending) = self.core.0.counts();
        ActorStats {
            enqueued,
            processed,
            pending,
            turns: s.turn.load(Ordering::SeqCst),
            accesses: s.accesses.load(Ordering::SeqCst),
            off_owner_accesses: s.off_owner.load(Ordering::SeqCst),
        }
    }

    /// A snapshot of the owner trace.
    pub fn trace(&self) -> Vec<TraceEvent> {
        self.core.0.shared.trace.lock().clone()
    }

    /// Waits until every message enqueued before this call has been
    /// processed.
    pub fn sync(&self) -> Result<(), RuntimeError> {
        self.perform(|_, _| ()).wait()
    }
}

/// One operation of an atomic batch.
pub type Op<S, R> = Box<dyn FnOnce(&mut S, &Context) -> R + Send>;

/// Capabilities available to code running inside an actor's loop. Not
/// `Send`: it cannot leave the loop thread.
pub struct Context {
    pub(crate) owner: Arc<dyn Owner>,
    turn: u64,
    _local: PhantomData<*const ()>,
}

impl Context {
    pub fn id(&self) -> ActorId {
        self.owner.shared().id
    }

    /// Number of the message turn being processed; 0 during initialisation.
    pub fn turn(&self) -> u64 {
        self.turn
    }

    /// A new object owned by this actor.
    pub fn new_passive<T: Send + 'static>(&self, value: T) -> Passive<T> {
        Passive {
            owner: self.owner.shared().clone(),
            object: NEXT_OBJECT.fetch_add(1, Ordering::Relaxed),
            data: Arc::new(Mutex::new(value)),
        }
    }

    /// A shareable reference whose operations are relayed to this actor.
    pub fn bestow<T: Send + 'static>(&self, object: &Passive<T>) -> Result<BestowedRef<T>, RuntimeError> {
        if object.owner() != self.id() {
            return Err(RuntimeError::WrongOwner { owner: object.owner().0 });
        }
        Ok(BestowedRef::new(self.owner.clone(), object.clone()))
    }

    /// Appends a labelled event to the owner trace.
    pub fn note(&self, label: impl Into<Arc<str>>) {
        self.record(EventKind::Note(label.into()));
    }

    pub(crate) fn record(&self, kind: EventKind) {
        let shared = self.owner.shared();
        shared.record(Origin::Actor(shared.id), kind);
    }
}

/// Handle to an object owned by one actor. It may be stored anywhere but
/// is only usable from the owner's loop; every access is counted, and an
/// access from anywhere else is refused and counted as off-owner.
pub struct Passive<T> {
    owner: Arc<Shared>,
    object: u64,
    data: Arc<Mutex<T>>,
}

impl<T> Clone for Passive<T> {
    fn clone(&self) -> Self {
        Passive { owner: self.owner.clone(), object: self.object, data: self.data.clone() }
    }
}

impl<T> fmt::Debug for Passive<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Passive({} of {})", self.object, self.owner.id.0)
    }
}

impl<T> Passive<T> {
    pub fn owner(&self) -> ActorId {
        self.owner.id
    }

    pub fn object_id(&self) -> u64 {
        self.object
    }

    /// Whether both handles denote the same object.
    pub fn same(&self, other: &Passive<T>) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
    }

    pub fn with<R>(&self, f: impl FnOnce(&mut T) -> R) -> Result<R, RuntimeError> {
        let on_owner = current_actor() == Some(self.owner.id);
        self.owner.record_access(self.object, on_owner);
        if !on_owner {
            return Err(RuntimeError::WrongOwner { owner: self.owner.id.0 });
        }
        let mut guard = self.data.try_lock().ok_or(RuntimeError::AlreadyBorrowed)?;
        Ok(f(&mut guard))
    }

    pub fn get(&self) -> Result<T, RuntimeError>
    where
        T: Clone,
    {
        self.with(|t| t.clone())
    }

    pub fn set(&self, value: T) -> Result<(), RuntimeError> {
        self.with(|t| *t = value)
    }
}

/// A caller's exclusive channel into an actor during an override window.
/// Not `Send`: the window belongs to the thread that opened it. Dropping
/// it without resuming resumes the actor.
pub struct PrivateQueue<S: Send + 'static> {
    core: Counted<Core<S>>,
    window: u64,
    opened: Future<()>,
    resumed: bool,
    _local: PhantomData<*const ()>,
}

impl<S: Send + 'static> PrivateQueue<S> {
    /// Completes once the actor has switched to this queue.
    pub fn opened(&self) -> &Future<()> {
        &self.opened
    }

    pub fn submit<R: Send + 'static>(&self, f: impl FnOnce(&mut S, &Context) -> R + Send + 'static) -> Future<R> {
        let (p, fut) = promise();
        let job: Job<S> = Box::new(move |s, ctx| p.complete(f(s, ctx)));
        let env = Envelope::Job { origin: current_origin(), kind: TurnKind::Private, job };
        match self.core.0.enqueue_private(self.window, env) {
            Ok(()) => fut,
            Err(e) => Future::failed(e),
        }
    }

    /// Returns the actor to its regular mailbox after everything submitted
    /// so far. The future completes when the switch happens.
    pub fn resume(&mut self) -> Result<Future<()>, RuntimeError> {
        if self.resumed {
            return Err(RuntimeError::AlreadyResumed);
        }
        self.resumed = true;
        OPEN_WINDOWS.with(|c| c.set(c.get().saturating_sub(1)));
        let (ack, fut) = promise();
        self.core
            .0
            .enqueue_private(self.window, Envelope::Resume { origin: current_origin(), ack })
            .map_err(|_| RuntimeError::AlreadyResumed)?;
        Ok(fut)
    }
}

impl<S: Send + 'static> Drop for PrivateQueue<S> {
    fn drop(&mut self) {
        if !self.resumed {
            let _ = self.resume();
        }
    }
}
