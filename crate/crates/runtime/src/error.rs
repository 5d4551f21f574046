use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("the receiving actor has stopped or dropped the message")]
    DeliveryFailure,
    #[error("blocking on a future from inside an actor's message loop")]
    AwaitInsideActor,
    #[error("bestow called outside any actor's message loop")]
    CalledOutsideActor,
    #[error("object is owned by actor {owner}, not by the running actor")]
    WrongOwner { owner: u64 },
    #[error("object is already borrowed by an enclosing operation")]
    AlreadyBorrowed,
    #[error("batch of {len} operations exceeds the cap of {cap}")]
    BatchTooLarge { len: usize, cap: usize },
    #[error("override window already resumed")]
    AlreadyResumed,
    #[error("this thread already holds an open override window")]
    NestedOverride,
    #[error("timed out")]
    Timeout,
    #[error("could not spawn actor thread: {0}")]
    SpawnFailed(String),
}
