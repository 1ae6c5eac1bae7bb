use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::Result;

pub const THREADS_ENV: &str = "R1_THREADS";

/// Worker count from R1_THREADS; 0 lets rayon use the available parallelism.
pub fn threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

pub fn build() -> Result<ThreadPool> {
    Ok(ThreadPoolBuilder::new().num_threads(threads()).build()?)
}
