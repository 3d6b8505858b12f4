//! Index-parallel map with a sequential fallback.
//!
//! Results are always collected in index order and every work item derives
//! its own RNG stream from its index, so the number of worker threads never
//! changes an output.

#[cfg(feature = "parallel")]
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Exec {
    jobs: usize,
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Exec").field("jobs", &self.jobs).finish()
    }
}

impl Default for Exec {
    fn default() -> Self {
        Exec::sequential()
    }
}

impl Exec {
    pub fn sequential() -> Self {
        Exec {
            jobs: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// Uses `jobs` worker threads. Without the `parallel` feature every value
    /// runs sequentially.
    pub fn with_jobs(jobs: usize) -> Result<Self> {
        if jobs == 0 {
            return Err(Error::arg("--jobs must be at least 1"));
        }
        if jobs == 1 {
            return Ok(Exec::sequential());
        }
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::arg(format!("cannot start {jobs} worker threads: {e}")))?;
            Ok(Exec {
                jobs,
                pool: Some(Arc::new(pool)),
            })
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Exec { jobs })
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Like [`Exec::map`] but stops at the first error in index order.
    pub fn try_map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of substream `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}
