//! Experiment runner and verification suite for `wienerlab`.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;
pub mod suite;

/// Sizes the global thread pool from `WIENERLAB_THREADS` when set.
pub fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("WIENERLAB_THREADS") {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("WIENERLAB_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
