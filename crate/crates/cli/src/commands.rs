use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use causegraph::eval::{
    evaluate_graph, parse_semeval, render_confusion_table, run_pairwise_eval, EvalError, PairwiseReport,
};
use causegraph::gateway::{cache_stats, clear_cache, record_fixture, CacheLock, HttpProvider, ReplayFixture};
use causegraph::graph::{parse_graph, to_dot, to_structured, CausalGraph};
use causegraph::pipeline::{orient_cpdag, parse_pdag, run_pipeline, PipelineConfig, PipelineRun};
use causegraph::Gateway;
use serde::Serialize;

use crate::config::{CliConfig, Mode};

/// Process exit status: 0 success, 1 configuration or input error (nothing
/// useful produced), 2 partial success (some documents failed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Failure,
    Partial,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Failure => 1,
            ExitStatus::Partial => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheAction {
    Stats,
    Clear,
}

fn fail(what: impl Display) -> ExitStatus {
    eprintln!("error: {what}");
    ExitStatus::Failure
}

/// Gateway for one command, plus the cache lock it holds.
struct Session {
    gateway: Gateway,
    record_to: Option<PathBuf>,
    _lock: Option<CacheLock>,
}

impl Session {
    fn open(config: &CliConfig) -> Result<Self, String> {
        if let Mode::Replay(path) = &config.mode {
            let fixture = ReplayFixture::load(path).map_err(|e| e.to_string())?;
            return Ok(Session { gateway: Gateway::replay(fixture), record_to: None, _lock: None });
        }
        let lock = match &config.provider.cache_dir {
            Some(dir) => Some(CacheLock::acquire(dir).map_err(|e| e.to_string())?),
            None => None,
        };
        let provider = HttpProvider::new(&config.provider).map_err(|e| e.to_string())?;
        let mut gateway = Gateway::new(config.provider.clone(), provider).map_err(|e| e.to_string())?;
        let record_to = match &config.mode {
            Mode::Record(p) => {
                gateway = gateway.recording();
                Some(p.clone())
            }
            _ => None,
        };
        Ok(Session { gateway, record_to, _lock: lock })
    }

    /// Saves the recorded fixture, if recording.
    fn finish(self) -> Result<(), String> {
        if let Some(path) = &self.record_to {
            let fixture = record_fixture(&self.gateway.recorded()).map_err(|e| e.to_string())?;
            fixture.save(path).map_err(|e| e.to_string())?;
            log::info!("recorded {} exchanges to {}", fixture.len(), path.display());
        }
        Ok(())
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "document".into())
}

/// Files written for one extracted document.
pub fn output_names(stem: &str) -> [String; 4] {
    [format!("{stem}.dot"), format!("{stem}.graph.json"), format!("{stem}.cycles.json"), format!("{stem}.run.json")]
}

fn write_run(dir: &Path, stem: &str, run: &PipelineRun) -> Result<(), String> {
    let [dot, graph, cycles, report] = output_names(stem);
    write_output(dir, &dot, &to_dot(&run.graph))?;
    write_output(dir, &graph, &to_structured(&run.graph))?;
    write_output(dir, &cycles, &pretty(&run.cycles))?;
    write_output(dir, &report, &run.to_report())?;
    Ok(())
}

/// Extracts one causal graph per input text file.
pub fn cmd_extract(config: &CliConfig, inputs: &[PathBuf], out: &mut dyn Write) -> ExitStatus {
    if inputs.is_empty() {
        return fail("no input documents");
    }
    let mut stems = BTreeSet::new();
    for p in inputs {
        if !p.is_file() {
            return fail(format!("{}: no such file", p.display()));
        }
        if !stems.insert(stem(p)) {
            return fail(format!("two inputs share the name `{}`; outputs would collide", stem(p)));
        }
    }
    if let Err(e) = fs::create_dir_all(&config.output_dir) {
        return fail(format!("{}: {e}", config.output_dir.display()));
    }
    let session = match Session::open(config) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let pipeline = PipelineConfig {
        entity_cap: config.entity_cap,
        parallelism: config.provider.parallelism,
        enforce_acyclic: config.enforce_acyclic,
        ..PipelineConfig::default()
    };

    let mut failed = 0;
    for path in inputs {
        let name = stem(path);
        let result = fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| {
                run_pipeline(&text, &config.domain_hint, &pipeline, &session.gateway).map_err(|e| e.to_string())
            })
            .and_then(|run| write_run(&config.output_dir, &name, &run).map(|_| run));
        match result {
            Ok(run) => {
                let _ = writeln!(
                    out,
                    "{name}: {} entities, {} arcs, cycles {}, transitive candidates {}, removed {}, {:.1}s projected",
                    run.stats.entity_count,
                    run.graph.arc_count(),
                    run.cycles.cycles.len(),
                    run.transitive_candidates.len(),
                    run.removed_arcs.len(),
                    run.stats.projected_wall_time_secs,
                );
                for w in &run.warnings {
                    let _ = writeln!(out, "  warning: {w}");
                }
            }
            Err(e) => {
                failed += 1;
                eprintln!("{name}: {e}");
            }
        }
    }
    if let Err(e) = session.finish() {
        eprintln!("error: {e}");
        failed += 1;
    }
    if failed == 0 {
        ExitStatus::Success
    } else {
        ExitStatus::Partial
    }
}

/// Prints the orientation grid and metrics for the causal records of a
/// SemEval-format file, and writes `pairwise_report.json`.
pub fn cmd_eval_pairs(config: &CliConfig, semeval_path: &Path, out: &mut dyn Write) -> ExitStatus {
    let records = match fs::read_to_string(semeval_path)
        .map_err(|e| e.to_string())
        .and_then(|t| parse_semeval(&t).map_err(|e| format!("{}: {e}", semeval_path.display())))
    {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let session = match Session::open(config) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let report = match run_pairwise_eval(&records, &session.gateway, config.provider.parallelism) {
        Ok(r) => r,
        Err(EvalError::EmptyEvaluationSet) => return fail("no cause-effect records to evaluate"),
        Err(e) => return fail(e),
    };
    if let Err(e) = session.finish() {
        return fail(e);
    }
    let causal = records.iter().filter(|r| r.is_causal()).count();
    let _ = writeln!(out, "records: {} ({causal} cause-effect)", records.len());
    let _ = write!(out, "{}", render_pairwise(&report));
    if let Err(e) = fs::create_dir_all(&config.output_dir)
        .map_err(|e| e.to_string())
        .and_then(|_| write_output(&config.output_dir, "pairwise_report.json", &pretty(&report)))
    {
        return fail(e);
    }
    ExitStatus::Success
}

pub fn render_pairwise(report: &PairwiseReport) -> String {
    let mut s = render_confusion_table(&report.confusion);
    for (name, m) in [("A -> B", report.forward), ("A <- B", report.backward)] {
        s.push_str(&format!("{name}  precision {:.4}  recall {:.4}  F1 {:.4}\n", m.precision, m.recall, m.f1));
    }
    s.push_str(&format!("macro F1 {:.6}\nmicro accuracy {:.6}\n", report.macro_f1, report.micro_accuracy));
    s
}

fn load_extracted(text: &str) -> Result<CausalGraph, String> {
    match PipelineRun::from_report(text) {
        Ok(run) => Ok(run.graph),
        Err(_) => parse_graph(text).map_err(|e| e.to_string()),
    }
}

/// Scores an extracted graph (run report or graph file) against a
/// ground-truth graph file and writes `<run>.eval.json`.
pub fn cmd_eval_graph(config: &CliConfig, run_path: &Path, truth_path: &Path, out: &mut dyn Write) -> ExitStatus {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
    let extracted = match read(run_path).and_then(|t| load_extracted(&t)) {
        Ok(g) => g,
        Err(e) => return fail(format!("{}: {e}", run_path.display())),
    };
    let truth = match read(truth_path).and_then(|t| parse_graph(&t).map_err(|e| e.to_string())) {
        Ok(g) => g,
        Err(e) => return fail(format!("{}: {e}", truth_path.display())),
    };
    let ev = match evaluate_graph(&extracted, &truth) {
        Ok(ev) => ev,
        Err(e) => return fail(e),
    };
    let c = &ev.comparison;
    let _ = writeln!(
        out,
        "true positives {}  false positives {}  false negatives {}",
        c.true_positive_arcs.len(),
        c.false_positive_arcs.len(),
        c.false_negative_arcs.len()
    );
    let _ = writeln!(out, "precision {}  recall {}  F1 {}", c.precision, c.recall, c.f1);
    let _ = writeln!(
        out,
        "transitive false positives {}  share {}",
        ev.transitive_false_positives.len(),
        ev.transitive_fp_share
    );
    let name = format!("{}.eval.json", stem(run_path).trim_end_matches(".run").trim_end_matches(".graph"));
    if let Err(e) = fs::create_dir_all(&config.output_dir)
        .map_err(|e| e.to_string())
        .and_then(|_| write_output(&config.output_dir, &name, &pretty(&ev)))
    {
        return fail(e);
    }
    ExitStatus::Success
}

/// Orients the undirected edges of a partially directed graph from a text.
pub fn cmd_orient_cpdag(config: &CliConfig, pdag_path: &Path, text_path: &Path, out: &mut dyn Write) -> ExitStatus {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
    let (pdag, text) = match read(pdag_path)
        .and_then(|t| parse_pdag(&t).map_err(|e| format!("{}: {e}", pdag_path.display())))
        .and_then(|p| read(text_path).map(|t| (p, t)))
    {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let session = match Session::open(config) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let oriented = match orient_cpdag(&pdag, &text, &session.gateway, config.provider.parallelism) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    if let Err(e) = session.finish() {
        return fail(e);
    }
    let name = stem(pdag_path).trim_end_matches(".pdag").to_owned();
    let written = fs::create_dir_all(&config.output_dir)
        .map_err(|e| e.to_string())
        .and_then(|_| {
            write_output(&config.output_dir, &format!("{name}.oriented.graph.json"), &to_structured(&oriented.graph))
        })
        .and_then(|_| write_output(&config.output_dir, &format!("{name}.oriented.dot"), &to_dot(&oriented.graph)));
    if let Err(e) = written {
        return fail(e);
    }
    let _ = writeln!(out, "{name}: {} edges queried, {} arcs", oriented.queries, oriented.graph.arc_count());
    for w in &oriented.warnings {
        let _ = writeln!(out, "  warning: {w}");
    }
    ExitStatus::Success
}

pub fn cmd_cache(config: &CliConfig, action: CacheAction, out: &mut dyn Write) -> ExitStatus {
    let Some(dir) = &config.provider.cache_dir else {
        return fail("no cache directory configured (use --cache-dir or provider.cache_dir)");
    };
    match action {
        CacheAction::Stats => match cache_stats(dir) {
            Ok(s) => {
                let _ = writeln!(out, "entries: {}\nbytes: {}", s.entries, s.bytes);
                ExitStatus::Success
            }
            Err(e) => fail(e),
        },
        CacheAction::Clear => match clear_cache(dir) {
            Ok(s) => {
                let _ = writeln!(out, "removed {} entries ({} bytes)", s.entries, s.bytes);
                ExitStatus::Success
            }
            Err(e) => fail(e),
        },
    }
}
