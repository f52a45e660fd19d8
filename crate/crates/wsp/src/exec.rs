//! Scoped worker pool.

use std::sync::Mutex;

use wsp_core::exec::{ChunkJob, Executor};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "WSP_WORKERS";

/// Hands chunks to `workers` scoped threads. Each chunk is still computed
/// by one sequential call, so results do not depend on the worker count.
#[derive(Debug, Clone, Copy)]
pub struct ThreadPool {
    workers: usize,
}

impl ThreadPool {
    pub fn new(workers: usize) -> Self {
        ThreadPool {
            workers: workers.max(1),
        }
    }

    /// `WSP_WORKERS` when set and valid, otherwise `fallback`.
    pub fn from_env(fallback: usize) -> Self {
        let n = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|n| *n > 0)
            .unwrap_or(fallback);
        ThreadPool::new(n)
    }
}

impl Executor for ThreadPool {
    fn workers(&self) -> usize {
        self.workers
    }

    fn scatter(&self, chunks: Vec<&mut [f64]>, job: &ChunkJob<'_>) {
        if self.workers == 1 || chunks.len() <= 1 {
            for (i, c) in chunks.into_iter().enumerate() {
                job(i, c);
            }
            return;
        }
        let queue = Mutex::new(chunks.into_iter().enumerate());
        std::thread::scope(|s| {
            for _ in 0..self.workers {
                s.spawn(|| loop {
                    let item = queue.lock().expect("queue poisoned").next();
                    match item {
                        Some((i, c)) => {
                            job(i, c);
                        }
                        None => break,
                    }
                });
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use wsp_core::exec::for_each_chunk;

    #[test]
    fn every_chunk_once() {
        for w in [1, 2, 8] {
            let pool = ThreadPool::new(w);
            let mut out = vec![0.0; 103];
            for_each_chunk(&pool, &mut out, 10, &|i, c| {
                for (k, v) in c.iter_mut().enumerate() {
                    *v += (i * 10 + k) as f64;
                }
            });
            assert!(out.iter().enumerate().all(|(k, v)| *v == k as f64));
        }
    }
}
