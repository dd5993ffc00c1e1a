//! Parallel accuracy-table campaigns.

use fedgame_core::fl::{self, FlConfig};
use fedgame_core::signal::ChannelConfig;
use fedgame_core::table::AccuracyTable;
use rayon::prelude::*;

/// Same table as [`fl::estimate_table`], with cells spread over the rayon
/// pool. Each job owns its seeds, so the result does not depend on the
/// thread count or scheduling.
pub fn estimate_table(
    n: usize,
    trials: usize,
    cfg: &FlConfig,
    channel: &ChannelConfig,
) -> fedgame_core::Result<AccuracyTable> {
    fl::check_campaign(n, trials, cfg, channel)?;
    let jobs: Vec<_> = fl::table_jobs(n, trials).collect();
    let accuracies = jobs
        .par_iter()
        .map(|&(i, k, t)| fl::run_cell(n, i, k, t, cfg, channel))
        .collect::<fedgame_core::Result<Vec<f64>>>()?;
    fl::assemble_table(n, trials, cfg.master_seed, &accuracies)
}
