//! Bestowal for lock-protected aggregates.
//!
//! An [`Enclosure`] is an aggregate guarded by one reentrant lock. Objects
//! it hands out as [`LockedRef`]s take that same lock around every
//! operation, so they are exactly as synchronised as the aggregate itself.
//! The lock is reentrant: an operation may run while the same thread
//! already holds the aggregate's lock.
//!
//! There is no poisoning. If an operation panics the lock is released as
//! the stack unwinds and the object keeps whatever state the operation
//! left behind. Running an operation on an object from inside another
//! operation on the same object panics rather than deadlocking.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, ReentrantMutex};

struct Inner {
    lock: ReentrantMutex<()>,
    acquisitions: AtomicU64,
}

#[derive(Clone)]
pub struct Enclosure {
    inner: Arc<Inner>,
}

impl Default for Enclosure {
    fn default() -> Enclosure {
        Enclosure::new()
    }
}

impl Enclosure {
    pub fn new() -> Enclosure {
        Enclosure { inner: Arc::new(Inner { lock: ReentrantMutex::new(()), acquisitions: AtomicU64::new(0) }) }
    }

    /// Runs `f` holding the aggregate's lock.
    pub fn with<R>(&self, f: impl FnOnce() -> R) -> R {
        let _guard = self.acquire();
        f()
    }

    /// Places `value` inside the aggregate and returns a reference that
    /// synchronises on the aggregate's lock.
    pub fn lock_bestow<T: Send>(&self, value: T) -> LockedRef<T> {
        LockedRef { enclosure: self.clone(), data: Arc::new(Mutex::new(value)) }
    }

    /// Number of times the lock has been taken, reentrant takes included.
    pub fn acquisitions(&self) -> u64 {
        self.inner.acquisitions.load(Ordering::SeqCst)
    }

    fn acquire(&self) -> parking_lot::ReentrantMutexGuard<'_, ()> {
        let guard = self.inner.lock.lock();
        self.inner.acquisitions.fetch_add(1, Ordering::SeqCst);
        guard
    }
}

/// One operation of an atomic batch on a [`LockedRef`].
pub type LockedOp<'a, T, R> = Box<dyn FnOnce(&mut T) -> R + 'a>;

pub struct LockedRef<T> {
    enclosure: Enclosure,
    data: Arc<Mutex<T>>,
}

impl<T> Clone for LockedRef<T> {
    fn clone(&self) -> Self {
        LockedRef { enclosure: self.enclosure.clone(), data: self.data.clone() }
    }
}

impl<T> LockedRef<T> {
    pub fn enclosure(&self) -> &Enclosure {
        &self.enclosure
    }

    /// Takes the aggregate's lock, runs `op`, releases.
    pub fn op<R>(&self, op: impl FnOnce(&mut T) -> R) -> R {
        let _guard = self.enclosure.acquire();
        let mut data = self.data.try_lock().expect("object is already in use by an enclosing operation");
        op(&mut data)
    }

    /// Runs `ops` under a single acquisition of the lock.
    pub fn atomic<R>(&self, ops: Vec<LockedOp<'_, T, R>>) -> Vec<R> {
        let _guard = self.enclosure.acquire();
        let mut data = self.data.try_lock().expect("object is already in use by an enclosing operation");
        ops.into_iter().map(|op| op(&mut data)).collect()
    }
}
