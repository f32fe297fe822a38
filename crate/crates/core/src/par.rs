//! Data-parallel helpers with a sequential fallback.
//!
//! Work is always split by item index, and any randomness is drawn from a
//! stream split off by that index, so results do not depend on the schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::bchm::{CorrectionContext, CorrectionOutcome, Method};
use crate::error::Result;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// `threads == 0` uses the global pool.
    Parallel { threads: usize },
}

impl Execution {
    /// 1 means sequential; anything else runs on that many workers (0: all cores).
    pub fn with_workers(workers: usize) -> Self {
        if workers == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { threads: workers }
        }
    }

    /// Whether work actually runs on several threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Execution::Parallel { .. })
    }
}

/// `(0..n).map(f)` under the given execution mode, results in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            let work = || (0..n).into_par_iter().map(&f).collect();
            if threads == 0 {
                work()
            } else {
                match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                    Ok(pool) => pool.install(work),
                    Err(_) => work(),
                }
            }
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Fallible [`map_indexed`]; the first error in index order is returned.
pub fn try_map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indexed(n, exec, f).into_iter().collect()
}

/// Correct a batch of trials, drawing trial `i`'s randomness from `stream.split(i)`.
pub fn correct_batch(
    method: Method,
    trials: &[Vec<f64>],
    ctx: &CorrectionContext<'_>,
    stream: &RngStream,
    exec: Execution,
) -> Result<Vec<CorrectionOutcome>> {
    try_map_indexed(trials.len(), exec, |i| {
        let mut rng = stream.split(i as u64);
        method.correct(&trials[i], ctx, &mut rng)
    })
}
