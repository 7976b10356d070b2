//! Experiment CLI: instance generation, matching-probability dumps, seeded
//! end-to-end experiment runs and invariant verification.
//!
//! Exit codes: 0 all checks pass, 1 check failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stochmatch::estimators::estimate_match_probs;
use stochmatch::graph::{Graph, WeightMode};
use stochmatch::harness::{
    append_csv_summary, build_instance, run_experiment, run_verify_suite, write_report,
    ExperimentConfig, InstanceSpec, Suite,
};

#[derive(Parser)]
#[command(name = "stochmatch", version, about = "Stochastic matching experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and write it in the text graph format.
    Gen(GenArgs),
    /// Estimate per-edge matching probabilities of a graph file.
    Stats(StatsArgs),
    /// Run an experiment described by a JSON config.
    Run(RunArgs),
    /// Run invariant verification suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InstanceKind {
    BlumBad,
    Tightness,
    WeightedStar,
    Random,
}

#[derive(Args)]
struct GenArgs {
    /// Instance family.
    #[arg(long, value_enum)]
    instance: InstanceKind,
    /// Group size of the blum-bad family.
    #[arg(long = "N")]
    groups: Option<usize>,
    /// Group size of the tightness family.
    #[arg(long = "L")]
    l: Option<usize>,
    /// Leaf count of the weighted star.
    #[arg(long, default_value_t = stochmatch::graph::STAR_DEFAULT_LEAVES)]
    k: usize,
    #[arg(long, default_value_t = stochmatch::graph::STAR_DEFAULT_WEIGHT)]
    w_crucial: f64,
    #[arg(long, default_value_t = stochmatch::graph::STAR_DEFAULT_Q_TARGET)]
    q_target: f64,
    /// Vertex count of the random family.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Edge weights: "unit" or "uniform:LO:HI".
    #[arg(long, default_value = "unit")]
    weights: String,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Graph file.
    #[arg(short, long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Output JSON path (stdout when absent).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(short, long)]
    config: PathBuf,
    /// Report output path.
    #[arg(short, long)]
    out: PathBuf,
    /// Optional CSV summary to append to.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_weights(spec: &str) -> Result<WeightMode, String> {
    if spec == "unit" {
        return Ok(WeightMode::Unit);
    }
    if let Some(rest) = spec.strip_prefix("uniform:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() == 2 {
            let lo: f64 = parts[0].parse().map_err(|_| "bad uniform lo".to_string())?;
            let hi: f64 = parts[1].parse().map_err(|_| "bad uniform hi".to_string())?;
            return Ok(WeightMode::Uniform { lo, hi });
        }
    }
    Err(format!("cannot parse weight mode {spec:?}"))
}

fn cmd_gen(args: &GenArgs) -> Result<(), String> {
    let spec = match args.instance {
        InstanceKind::BlumBad => InstanceSpec::BlumBad {
            groups: args.groups.ok_or("blum-bad needs --N")?,
        },
        InstanceKind::Tightness => InstanceSpec::Tightness {
            l: args.l.ok_or("tightness needs --L")?,
        },
        InstanceKind::WeightedStar => InstanceSpec::WeightedStar {
            k: args.k,
            w_crucial: args.w_crucial,
            q_target: args.q_target,
        },
        InstanceKind::Random => InstanceSpec::Random {
            n: args.n.ok_or("random needs --n")?,
            density: args.density,
            weights: parse_weights(&args.weights)?,
            p: args.p,
            seed: args.seed,
        },
    };
    let graph = build_instance(&spec).map_err(|e| e.to_string())?;
    graph.write_to_path(&args.out).map_err(|e| e.to_string())?;
    eprintln!(
        "wrote {} ({} vertices, {} edges, p = {})",
        args.out.display(),
        graph.vertex_count(),
        graph.edge_count(),
        graph.p()
    );
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<(), String> {
    let graph = Graph::read_from_path(&args.graph).map_err(|e| e.to_string())?;
    let stats = estimate_match_probs(&graph, args.trials, args.seed);
    let json = serde_json::json!({
        "edges": graph.edge_count(),
        "trials": stats.trials,
        "opt_estimate": stats.opt_estimate,
        "opt_stderr": stats.opt_stderr,
        "q": stats.q,
        "qw": stats.qw,
        "stderr": stats.stderr,
    });
    let text = serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| e.to_string())?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<bool, String> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| e.to_string())?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let report = run_experiment(&config).map_err(|e| e.to_string())?;
    write_report(&report, &args.out).map_err(|e| e.to_string())?;
    if let Some(csv) = &args.csv {
        append_csv_summary(&report, csv).map_err(|e| e.to_string())?;
    }
    println!(
        "{}: {} value {:.6} / opt {:.6} = ratio {:.4} (in {:.2}s)",
        report.instance.label,
        match report.config.algorithm {
            stochmatch::harness::AlgorithmKind::Nonadaptive => "nonadaptive",
            stochmatch::harness::AlgorithmKind::BaselineDefault => "baseline_default",
            stochmatch::harness::AlgorithmKind::BaselineAdversarial => "baseline_adversarial",
            stochmatch::harness::AlgorithmKind::Adaptive => "adaptive",
        },
        report.algorithm.value,
        report.opt.value,
        report.algorithm.ratio,
        report.wall_time_secs,
    );
    let checks_ok = report
        .analysis
        .as_ref()
        .is_none_or(|a| a.validity_failures == 0);
    Ok(checks_ok)
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, String> {
    let suite: Suite = args.suite.parse()?;
    let outcomes = run_verify_suite(suite, args.seed);
    let mut all_passed = true;
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.passed { "[PASS]" } else { "[FAIL]" },
            o.name,
            o.detail
        );
        all_passed &= o.passed;
    }
    Ok(all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(args) => cmd_gen(args).map(|()| true),
        Command::Stats(args) => cmd_stats(args).map(|()| true),
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
