//! Monte Carlo replicates spread over a rayon pool.
//!
//! Each replicate seeds its own stream and writes its pre-assigned slot, so the
//! result is bit-identical to the sequential engine for any thread count.

use rayon::prelude::*;

use rsm_core::montecarlo::{SimulationConfig, SimulationPlan, SimulationResult};

use crate::error::{CliError, CliResult, Context};

/// `threads = None` uses rayon's default pool size.
pub fn run_parallel(
    config: SimulationConfig,
    threads: Option<usize>,
) -> CliResult<SimulationResult> {
    let plan = SimulationPlan::new(config).context("simulation setup")?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::input("--threads must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::input(format!("cannot start worker pool: {e}")))?;
    log::info!(
        "running {} replicates on {} threads",
        plan.config.replicates,
        pool.current_num_threads()
    );
    let outcomes = pool.install(|| {
        (0..plan.config.replicates)
            .into_par_iter()
            .map(|i| plan.replicate(i))
            .collect()
    });
    plan.summarize(outcomes).context("simulation summary")
}
