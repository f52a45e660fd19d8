//! Work distribution.
//!
//! The crate never spawns threads. Heavy loops hand disjoint output chunks
//! to an [`Executor`]; every chunk is computed by a single sequential
//! routine, so results do not depend on how chunks are assigned to workers.

use alloc::vec::Vec;

pub type ChunkJob<'a> = dyn Fn(usize, &mut [f64]) + Sync + 'a;

pub trait Executor: Sync {
    /// Degree of parallelism, informational only.
    fn workers(&self) -> usize;

    /// Calls `job(index, chunk)` exactly once for every chunk.
    fn scatter(&self, chunks: Vec<&mut [f64]>, job: &ChunkJob<'_>);
}

/// Runs every chunk on the calling thread, in order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

pub static SERIAL: Serial = Serial;

impl Executor for Serial {
    fn workers(&self) -> usize {
        1
    }

    fn scatter(&self, chunks: Vec<&mut [f64]>, job: &ChunkJob<'_>) {
        for (i, c) in chunks.into_iter().enumerate() {
            job(i, c);
        }
    }
}

/// Splits `out` into chunks of `len` values and scatters them.
pub fn for_each_chunk(exec: &dyn Executor, out: &mut [f64], len: usize, job: &ChunkJob<'_>) {
    let len = len.max(1);
    exec.scatter(out.chunks_mut(len).collect(), job);
}
