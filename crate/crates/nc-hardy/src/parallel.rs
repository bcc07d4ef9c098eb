//! Thread-pool execution of Monte Carlo chunks.

use nc_hardy_core::haar::{ChunkJob, Executor, Moments, DEFAULT_SEED};
use rayon::prelude::*;

/// Runs chunks on the global rayon pool. Results come back in chunk order, so
/// estimates match [`nc_hardy_core::haar::Sequential`] bit for bit.
#[derive(Clone, Copy, Debug, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn run(&self, chunks: usize, job: &ChunkJob<'_>) -> Vec<Vec<Moments>> {
        (0..chunks).into_par_iter().map(job).collect()
    }
}

/// Runs chunks on a dedicated pool with a fixed thread count.
pub struct Pool(rayon::ThreadPool);

impl Pool {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(Pool(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?))
    }
}

impl Executor for Pool {
    fn run(&self, chunks: usize, job: &ChunkJob<'_>) -> Vec<Vec<Moments>> {
        self.0.install(|| Rayon.run(chunks, job))
    }
}

pub const SEED_ENV: &str = "NC_HARDY_SEED";

/// The flag value if given, else `NC_HARDY_SEED`, else the built-in default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, String> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| format!("{SEED_ENV}={text:?} is not a 64-bit unsigned integer")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}
