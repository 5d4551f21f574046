//! Bestowed references: shareable handles to an actor's objects whose
//! operations are relayed to the owning actor.
//!
//! A bestowed reference is an owner plus an object. Sending `op` through it
//! is the same as asking the owner to perform `op` on the object, so every
//! operation runs inside the owner's loop.

use std::fmt;
use std::sync::Arc;

use crate::actor::ActorId;
use crate::actor::{current_owner, Context, Counted, Owner, Passive};
use crate::error::RuntimeError;
use crate::future::{promise, Future};
use crate::trace::{EventKind, TurnKind};

pub struct BestowedRef<T> {
    owner: Counted<dyn Owner>,
    object: Passive<T>,
}

impl<T> Clone for BestowedRef<T> {
    fn clone(&self) -> Self {
        BestowedRef { owner: self.owner.clone(), object: self.object.clone() }
    }
}

impl<T> fmt::Debug for BestowedRef<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BestowedRef({} of {})", self.object.object_id(), self.owner_id().0)
    }
}

/// Bestows `object` on behalf of the actor running on this thread.
pub fn bestow<T: Send + 'static>(object: &Passive<T>) -> Result<BestowedRef<T>, RuntimeError> {
    let owner = current_owner().ok_or(RuntimeError::CalledOutsideActor)?;
    if owner.shared().id != object.owner() {
        return Err(RuntimeError::WrongOwner { owner: object.owner().0 });
    }
    Ok(BestowedRef::new(owner, object.clone()))
}

impl<T> BestowedRef<T> {
    pub(crate) fn new(owner: Arc<dyn Owner>, object: Passive<T>) -> BestowedRef<T> {
        BestowedRef { owner: Counted::new(owner), object }
    }

    pub fn owner_id(&self) -> ActorId {
        self.owner.0.shared().id
    }

    pub fn object_id(&self) -> u64 {
        self.object.object_id()
    }
}

impl<T: Send + 'static> BestowedRef<T> {
    /// Runs `op` on the object inside the owner's loop.
    pub fn send<R: Send + 'static>(&self, op: impl FnOnce(&mut T, &Context) -> R + Send + 'static) -> Future<R> {
        let (p, fut) = promise();
        let object = self.object.clone();
        let job = Box::new(move |ctx: &Context| match object.with(|t| op(t, ctx)) {
            Ok(r) => p.complete(r),
            Err(e) => p.fail(e),
        });
        match self.owner.0.submit(TurnKind::Relay, job) {
            Ok(()) => fut,
            Err(e) => Future::failed(e),
        }
    }

    /// Runs all `ops` on the object back to back in one owner turn.
    pub fn atomic<R: Send + 'static>(&self, ops: Vec<ObjOp<T, R>>) -> Result<Future<Vec<R>>, RuntimeError> {
        let cap = self.owner.0.shared().config.batch_cap;
        if ops.len() > cap {
            return Err(RuntimeError::BatchTooLarge { len: ops.len(), cap });
        }
        let (p, fut) = promise();
        let object = self.object.clone();
        let len = ops.len();
        let job = Box::new(move |ctx: &Context| {
            let result = object.with(|t| {
                let mut out = Vec::with_capacity(ops.len());
                for (i, op) in ops.into_iter().enumerate() {
                    ctx.record(EventKind::BatchStep(i));
                    out.push(op(t, ctx));
                }
                out
            });
            match result {
                Ok(r) => p.complete(r),
                Err(e) => p.fail(e),
            }
        });
        self.owner.0.submit(TurnKind::RelayBatch(len), job)?;
        Ok(fut)
    }
}

/// One operation of an atomic batch on a bestowed object.
pub type ObjOp<T, R> = Box<dyn FnOnce(&mut T, &Context) -> R + Send>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actor::{spawn, spawn_with};
    use std::thread;

    #[test]
    fn relayed_ops_run_on_owner() {
        let a = spawn_with(|ctx| ctx.new_passive(0u64)).unwrap();
        let b = a.perform(|p, ctx| ctx.bestow(p)).wait().unwrap().unwrap();
        assert_eq!(b.owner_id(), a.id());
        let owner = a.id();
        let seen = b.send(move |n, ctx| {
            *n += 1;
            ctx.id() == owner && crate::actor::current_actor() == Some(owner)
        });
        assert_eq!(seen.wait(), Ok(true));
        assert_eq!(a.perform(|p, _| p.get()).wait().unwrap(), Ok(1));
        assert_eq!(a.stats().off_owner_accesses, 0);
    }

    #[test]
    fn bestowed_ref_is_shareable() {
        let a = spawn_with(|ctx| ctx.new_passive(0u64)).unwrap();
        let b = a.perform(|p, ctx| ctx.bestow(p)).wait().unwrap().unwrap();
        let threads: Vec<_> = (0..4)
            .map(|_| {
                let b = b.clone();
                thread::spawn(move || {
                    for _ in 0..500 {
                        b.send(|n, _| *n += 1);
                    }
                    b.send(|_, _| ()).wait().unwrap();
                })
            })
            .collect();
        for t in threads {
            t.join().unwrap();
        }
        assert_eq!(b.send(|n, _| *n).wait(), Ok(2000));
    }

    #[test]
    fn stopped_owner() {
        let a = spawn_with(|ctx| ctx.new_passive(0u64)).unwrap();
        let b = a.perform(|p, ctx| ctx.bestow(p)).wait().unwrap().unwrap();
        a.join();
        assert_eq!(b.send(|n, _| *n).wait(), Err(RuntimeError::DeliveryFailure));
    }

    #[test]
    fn bestowed_reference_keeps_owner_alive() {
        let a = spawn_with(|ctx| ctx.new_passive(3u64)).unwrap();
        let b = a.perform(|p, ctx| ctx.bestow(p)).wait().unwrap().unwrap();
        drop(a);
        assert_eq!(b.send(|n, _| *n).wait(), Ok(3));
    }

    #[test]
    fn relayed_batch_is_one_turn() {
        let a = spawn_with(|ctx| ctx.new_passive(Vec::<u32>::new())).unwrap();
        let b = a.perform(|p, ctx| ctx.bestow(p)).wait().unwrap().unwrap();
        let ops: Vec<ObjOp<Vec<u32>, usize>> = (0..3)
            .map(|i| {
                Box::new(move |v: &mut Vec<u32>, _: &Context| {
                    v.push(i);
                    v.len()
                }) as ObjOp<Vec<u32>, usize>
            })
            .collect();
        assert_eq!(b.atomic(ops).unwrap().wait(), Ok(vec![1, 2, 3]));
        let trace = a.trace();
        let turns = crate::trace::turns(&trace);
        let last = turns.last().unwrap();
        assert_eq!(last[0].kind, EventKind::Turn(TurnKind::RelayBatch(3)));
        assert_eq!(last.len(), 4);
    }

    #[test]
    fn plain_actor_state_unaffected() {
        let a = spawn(1u8).unwrap();
        assert_eq!(a.perform(|n, _| *n).wait(), Ok(1));
    }
}
