//! Write-once result cells.
//!
//! A [`Future`] must not be waited on from inside an actor's message loop:
//! the loop would block on work that may need the same loop to run. Such a
//! wait returns [`RuntimeError::AwaitInsideActor`] instead of blocking. Use
//! [`Future::on_complete`] to react to a result from inside an actor.

use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};

use crate::actor::current_actor;
use crate::error::RuntimeError;

type Observer<T> = Box<dyn FnOnce(&Result<T, RuntimeError>) + Send>;

struct Slot<T> {
    value: Option<Result<T, RuntimeError>>,
    observers: Vec<Observer<T>>,
}

struct Cell<T> {
    slot: Mutex<Slot<T>>,
    ready: Condvar,
}

pub struct Future<T> {
    cell: Arc<Cell<T>>,
}

/// The writing end. Dropping it unfulfilled fails the future with
/// [`RuntimeError::DeliveryFailure`].
pub struct Promise<T> {
    cell: Option<Arc<Cell<T>>>,
}

pub fn promise<T>() -> (Promise<T>, Future<T>) {
    let cell = Arc::new(Cell { slot: Mutex::new(Slot { value: None, observers: Vec::new() }), ready: Condvar::new() });
    (Promise { cell: Some(cell.clone()) }, Future { cell })
}

impl<T> Promise<T> {
    pub fn complete(mut self, value: T) {
        self.settle(Ok(value));
    }

    pub fn fail(mut self, err: RuntimeError) {
        self.settle(Err(err));
    }

    fn settle(&mut self, result: Result<T, RuntimeError>) {
        let Some(cell) = self.cell.take() else { return };
        let observers = {
            let mut slot = cell.slot.lock();
            slot.value = Some(result);
            std::mem::take(&mut slot.observers)
        };
        cell.ready.notify_all();
        if !observers.is_empty() {
            let slot = cell.slot.lock();
            let value = slot.value.as_ref().expect("just set");
            for observer in observers {
                observer(value);
            }
        }
    }
}

impl<T> Drop for Promise<T> {
    fn drop(&mut self) {
        self.settle(Err(RuntimeError::DeliveryFailure));
    }
}

impl<T> Future<T> {
    pub fn ready(value: T) -> Future<T> {
        let (p, f) = promise();
        p.complete(value);
        f
    }

    pub fn failed(err: RuntimeError) -> Future<T> {
        let (p, f) = promise();
        p.fail(err);
        f
    }

    pub fn is_complete(&self) -> bool {
        self.cell.slot.lock().value.is_some()
    }

    /// Blocks until the result is available and takes it.
    pub fn wait(self) -> Result<T, RuntimeError> {
        let mut slot = self.cell.slot.lock();
        if slot.value.is_none() && current_actor().is_some() {
            return Err(RuntimeError::AwaitInsideActor);
        }
        while slot.value.is_none() {
            self.cell.ready.wait(&mut slot);
        }
        slot.value.take().expect("checked above")
    }

    pub fn wait_timeout(self, timeout: Duration) -> Result<T, RuntimeError> {
        let deadline = Instant::now() + timeout;
        let mut slot = self.cell.slot.lock();
        if slot.value.is_none() && current_actor().is_some() {
            return Err(RuntimeError::AwaitInsideActor);
        }
        while slot.value.is_none() {
            if self.cell.ready.wait_until(&mut slot, deadline).timed_out() && slot.value.is_none() {
                return Err(RuntimeError::Timeout);
            }
        }
        slot.value.take().expect("checked above")
    }

    /// Runs `f` once the result is available: immediately if it already
    /// is, otherwise on the completing thread.
    pub fn on_complete(&self, f: impl FnOnce(&Result<T, RuntimeError>) + Send + 'static) {
        let mut slot = self.cell.slot.lock();
        match &slot.value {
            Some(v) => f(v),
            None => slot.observers.push(Box::new(f)),
        }
    }
}

impl<T: Clone> Future<T> {
    /// Like [`Future::wait`] but leaves the value in place, so every read
    /// sees the same result.
    pub fn get(&self) -> Result<T, RuntimeError> {
        let mut slot = self.cell.slot.lock();
        if slot.value.is_none() && current_actor().is_some() {
            return Err(RuntimeError::AwaitInsideActor);
        }
        while slot.value.is_none() {
            self.cell.ready.wait(&mut slot);
        }
        slot.value.clone().expect("checked above")
    }
}

impl<T> std::fmt::Debug for Future<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Future").field("complete", &self.is_complete()).finish()
    }
}
