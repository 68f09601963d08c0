use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use globinj_cli::config::parse_combination;
use globinj_cli::{run_analyze, run_corpus, write_bundle, AnalysisConfig, AnalyzeError};

#[derive(Parser, Debug)]
#[command(name = "globinj", version, about = "Numerical evidence for global injectivity of maps Rⁿ → Rⁿ")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the condition battery on one map and write a report bundle
    Analyze(AnalyzeArgs),
    /// Run every fixture in a directory against its expected-verdict sidecar
    Corpus(CorpusArgs),
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Map in the DSL, one `f<k> = <expr>` per line
    #[arg(long)]
    map: PathBuf,

    /// TOML configuration; defaults apply to anything left out
    #[arg(long)]
    config: Option<PathBuf>,

    /// Only run this condition (repeatable)
    #[arg(long = "condition")]
    conditions: Vec<String>,

    /// Only check this one-based combination, e.g. "1,3" (repeatable)
    #[arg(long = "combination", value_parser = parse_combination)]
    combinations: Vec<Vec<usize>>,

    /// Take codim(S_f) >= 2 as given instead of searching for S_f
    #[arg(long)]
    assert_codim2: bool,

    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (default: the config's `out`, else ./globinj-out)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Leave timestamps out of SVG files
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    dir: PathBuf,

    /// Also write one bundle per fixture below this directory
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    deterministic: bool,
}

fn analyze(a: AnalyzeArgs) -> Result<i32, AnalyzeError> {
    let mut cfg = match &a.config {
        Some(p) => AnalysisConfig::from_toml(&fs::read_to_string(p).map_err(|e| AnalyzeError::io(p, e))?)?,
        None => AnalysisConfig::default(),
    };
    if !a.conditions.is_empty() {
        cfg.conditions = a.conditions;
    }
    if !a.combinations.is_empty() {
        cfg.combinations = a.combinations;
    }
    cfg.assert_codim2 |= a.assert_codim2;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = a.out {
        cfg.out = Some(o);
    }
    let source = fs::read_to_string(&a.map).map_err(|e| AnalyzeError::io(&a.map, e))?;
    let bundle = run_analyze(&source, &cfg)?;
    let dir = bundle.config.out.clone().unwrap_or_else(|| PathBuf::from("globinj-out"));
    let files = write_bundle(&bundle, &dir, a.deterministic)?;
    match &bundle.verdict {
        Some(v) => println!("{}", v.summary().trim_end()),
        None => {
            for r in bundle.reports() {
                println!("{} {}: {}", r.subject, r.condition, r.verdict);
            }
        }
    }
    println!("{} files written to {}", files.len(), dir.display());
    Ok(bundle.exit_code())
}

fn corpus(a: CorpusArgs) -> Result<i32, AnalyzeError> {
    let summary = run_corpus(&a.dir, a.out.as_deref(), a.deterministic)?;
    print!("{}", summary.table());
    Ok(if summary.failed() { 1 } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Corpus(a) => corpus(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
