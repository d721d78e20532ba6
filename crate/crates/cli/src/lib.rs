//! Command implementations behind the `causegraph` binary. Each command
//! writes its human-readable output to the given writer and returns the
//! process exit status.

mod commands;
mod config;

pub use commands::{
    cmd_cache, cmd_eval_graph, cmd_eval_pairs, cmd_extract, cmd_orient_cpdag, output_names, render_pairwise,
    CacheAction, ExitStatus,
};
pub use config::{CliConfig, Mode, Overrides};
