//! Deterministic parallel execution of trajectory ensembles.

use rayon::prelude::*;

use super::stream::{derive_stream, Stream};
use crate::dynamics::{output_steps, simulate, TrajectoryConfig, TrajectoryRecord};
use crate::error::Result;
use crate::observables::{EnsembleAccumulator, EnsembleSummary};

/// Trajectories simulated per parallel batch; bounds memory for long grids.
const CHUNK: usize = 1024;

/// Runs `job(index, stream)` for every index in `0..n`, in parallel, and hands
/// the results to `consume` strictly in index order.
pub fn run_ordered<T, J, C>(n: usize, master_seed: u64, job: J, mut consume: C) -> Result<()>
where
    T: Send,
    J: Fn(usize, &mut Stream) -> Result<T> + Sync,
    C: FnMut(usize, T) -> Result<()>,
{
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let batch: Vec<Result<T>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = derive_stream(master_seed, i as u64);
                job(i, &mut rng)
            })
            .collect();
        for (offset, item) in batch.into_iter().enumerate() {
            consume(start + offset, item?)?;
        }
        start = end;
    }
    Ok(())
}

/// Output times for a trajectory configuration.
pub fn output_times(cfg: &TrajectoryConfig, decimation: usize) -> Vec<f64> {
    output_steps(cfg.steps(), decimation)
        .into_iter()
        .map(|k| k as f64 * cfg.dt)
        .collect()
}

/// Ensemble summary of `n` trajectories. The first `keep` records are returned
/// as well, for trajectory dumps.
pub fn run_summary(
    cfg: &TrajectoryConfig,
    n: usize,
    master_seed: u64,
    decimation: usize,
    keep: usize,
) -> Result<(EnsembleSummary, Vec<TrajectoryRecord>)> {
    cfg.validate()?;
    let mut acc = EnsembleAccumulator::new(output_times(cfg, decimation));
    let mut kept = Vec::new();
    run_ordered(
        n,
        master_seed,
        |_, rng| simulate(cfg, decimation, rng),
        |i, rec| {
            acc.add(&rec)?;
            if i < keep {
                kept.push(rec);
            }
            Ok(())
        },
    )?;
    Ok((acc.finish()?, kept))
}

/// Final populations `z_T` of `n` trajectories, in index order.
pub fn run_final_z(cfg: &TrajectoryConfig, n: usize, master_seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let decimation = cfg.steps().max(1);
    let mut out = Vec::with_capacity(n);
    run_ordered(
        n,
        master_seed,
        |_, rng| Ok(simulate(cfg, decimation, rng)?.final_z()),
        |_, z| {
            out.push(z);
            Ok(())
        },
    )?;
    Ok(out)
}
