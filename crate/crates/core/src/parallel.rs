//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they are plain loops. Per-agent updates only go parallel above
//! [`MIN_PARALLEL_AGENTS`], since a rayon join costs more than a step of a
//! few hundred scalar agents. Every helper preserves index order in its
//! output, so results are bitwise identical across both builds and any
//! thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Agent count from which per-agent work inside one time step is split.
pub const MIN_PARALLEL_AGENTS: usize = 2048;

/// Applies `f(i, chunk)` to every length-`n` chunk of `data`.
pub fn for_each_chunk_mut<F>(data: &mut [f64], n: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if data.len() / n.max(1) >= MIN_PARALLEL_AGENTS {
        data.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    data.chunks_mut(n).enumerate().for_each(|(i, c)| f(i, c));
}

/// Fine-grained map over agent indices; parallel only for large counts.
pub fn map_agents<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if count >= MIN_PARALLEL_AGENTS {
        return (0..count).into_par_iter().map(f).collect();
    }
    (0..count).map(f).collect()
}

/// Coarse-grained map over independent tasks (runs, samples, games).
pub fn map_tasks<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Caps the global worker pool. Returns false when the pool was already
/// initialised or the build is sequential.
pub fn init_thread_pool(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

/// Number of workers data-parallel maps will use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Runs `f` with data-parallel maps limited to `threads` workers. In the
/// sequential build this just calls `f`.
pub fn with_threads<T, F>(threads: usize, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool construction")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
