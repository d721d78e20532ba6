use std::path::PathBuf;
use std::process::ExitCode;

use causegraph_cli::{
    cmd_cache, cmd_eval_graph, cmd_eval_pairs, cmd_extract, cmd_orient_cpdag, CacheAction, CliConfig, Overrides,
};
use clap::{Args, Parser, Subcommand};

/// Causal graph extraction from text with an LLM.
///
/// Settings are taken from flags first, then CAUSEGRAPH_* environment
/// variables, then the TOML file given by --config.
#[derive(Parser)]
#[command(name = "causegraph", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true, env = "CAUSEGRAPH_CONFIG")]
    config: Option<PathBuf>,
    /// Answer prompts from a replay fixture instead of the live API.
    #[arg(long, global = true, env = "CAUSEGRAPH_REPLAY", conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Call the live API and save every exchange to this fixture file.
    #[arg(long, global = true, env = "CAUSEGRAPH_RECORD")]
    record: Option<PathBuf>,
    #[arg(long, global = true, env = "CAUSEGRAPH_MODEL")]
    model: Option<String>,
    /// Concurrent requests.
    #[arg(long, global = true, env = "CAUSEGRAPH_PARALLELISM")]
    parallelism: Option<usize>,
    /// Maximum entities kept per document.
    #[arg(long, global = true, env = "CAUSEGRAPH_ENTITY_CAP")]
    entity_cap: Option<usize>,
    /// Break directed cycles in extracted graphs.
    #[arg(long, global = true, env = "CAUSEGRAPH_ENFORCE_ACYCLIC")]
    enforce_acyclic: bool,
    /// Output directory.
    #[arg(long, global = true, env = "CAUSEGRAPH_OUT")]
    out: Option<PathBuf>,
    /// Entity types to emphasise during extraction.
    #[arg(long, global = true, env = "CAUSEGRAPH_DOMAIN_HINT")]
    domain_hint: Option<String>,
    /// Response cache directory.
    #[arg(long, global = true, env = "CAUSEGRAPH_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Environment variable holding the API key (default OPENAI_API_KEY).
    #[arg(long, global = true, env = "CAUSEGRAPH_API_KEY_ENV")]
    api_key_env: Option<String>,
    /// Log verbosity, e.g. "debug".
    #[arg(long, global = true, env = "CAUSEGRAPH_LOG", default_value = "warn")]
    log: String,
}

#[derive(Subcommand)]
enum Command {
    /// Extract a causal graph from each text file.
    Extract {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Orientation benchmark on the cause-effect records of a SemEval file.
    EvalPairs { semeval: PathBuf },
    /// Compare an extracted graph (run report or graph file) with a ground-truth graph.
    EvalGraph { run: PathBuf, truth: PathBuf },
    /// Orient the undirected edges of a partially directed graph from a text.
    OrientCpdag { pdag: PathBuf, text: PathBuf },
    /// Inspect or clear the response cache.
    Cache {
        #[command(subcommand)]
        action: CacheCommand,
    },
}

#[derive(Subcommand)]
enum CacheCommand {
    Stats,
    Clear,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage_error { 1 } else { 0 });
        }
    };
    let g = cli.global;
    env_logger::Builder::new().parse_filters(&g.log).init();

    let overrides = Overrides {
        replay: g.replay,
        record: g.record,
        model: g.model,
        parallelism: g.parallelism,
        entity_cap: g.entity_cap,
        enforce_acyclic: g.enforce_acyclic,
        output_dir: g.out,
        domain_hint: g.domain_hint,
        cache_dir: g.cache_dir,
        api_key_env: g.api_key_env,
    };
    let config = match CliConfig::resolve(g.config.as_deref(), overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let mut out = std::io::stdout().lock();
    let status = match cli.command {
        Command::Extract { inputs } => cmd_extract(&config, &inputs, &mut out),
        Command::EvalPairs { semeval } => cmd_eval_pairs(&config, &semeval, &mut out),
        Command::EvalGraph { run, truth } => cmd_eval_graph(&config, &run, &truth, &mut out),
        Command::OrientCpdag { pdag, text } => cmd_orient_cpdag(&config, &pdag, &text, &mut out),
        Command::Cache { action } => {
            let action = match action {
                CacheCommand::Stats => CacheAction::Stats,
                CacheCommand::Clear => CacheAction::Clear,
            };
            cmd_cache(&config, action, &mut out)
        }
    };
    ExitCode::from(status.code() as u8)
}
