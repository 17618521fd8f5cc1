//! Replicate fan-out.
//!
//! Experiments describe work as `n` independent replicate closures; an
//! [`Executor`] decides how to run them. Results always come back ordered by
//! replicate index, so aggregation is independent of scheduling.

use alloc::vec::Vec;

pub trait Executor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs replicates one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
