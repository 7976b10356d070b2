//! Seeded experiment harness: instance construction, end-to-end experiment
//! runs with persisted reports, and the invariant verification suites behind
//! the CLI.
//!
//! Reports are deterministic: identical configs (including the seed) produce
//! byte-identical JSON, independent of worker count. Wall time is therefore
//! kept out of the JSON serialization and only surfaces in the CSV summary.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{
    evaluate_query_set, run_adaptive, run_baseline_greedy, run_nonadaptive, run_nonadaptive_with,
    AlgorithmParams, MatchingSelector, QuerySet,
};
use crate::analysis::{
    check_fractional_validity, classify_edges, classify_heavy_semiheavy, compute_tau,
    fractional_weight, procedure_crucial_unweighted, procedure_crucial_weighted,
    procedure_noncrucial, sample_crucial_matching_with, verify_mathratio, EdgePartition,
    FractionalMatching, VertexBudgets,
};
use crate::estimators::{
    estimate_match_probs, estimate_match_probs_with, estimate_opt_mc, exact_expected_matching,
    exact_match_probs, exact_star_match_probs_with, sample_id_slice, sample_realization, EdgeStats,
};
use crate::graph::{
    gen_blum_bad_instance, gen_random_graph, gen_tightness_instance, gen_weighted_star, EdgeSet,
    Graph, WeightMode, STAR_DEFAULT_LEAVES, STAR_DEFAULT_Q_TARGET, STAR_DEFAULT_WEIGHT,
};
use crate::rng::{domains, StreamRng};
use crate::solver::{brute_force_matching, MatchingSolver, TieBreak};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("instance error: {0}")]
    Instance(#[from] crate::graph::GraphError),
    #[error("graph file error: {0}")]
    GraphIo(#[from] crate::graph::GraphIoError),
    #[error("algorithm error: {0}")]
    Algorithm(#[from] crate::algorithms::AlgorithmError),
    #[error("analysis error: {0}")]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("report error: {0}")]
    Report(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    BlumBad {
        groups: usize,
    },
    Tightness {
        l: usize,
    },
    WeightedStar {
        #[serde(default = "default_star_leaves")]
        k: usize,
        #[serde(default = "default_star_weight")]
        w_crucial: f64,
        #[serde(default = "default_star_q_target")]
        q_target: f64,
    },
    Random {
        n: usize,
        density: f64,
        weights: WeightMode,
        p: f64,
        seed: u64,
    },
    File {
        path: String,
    },
}

fn default_star_leaves() -> usize {
    STAR_DEFAULT_LEAVES
}
fn default_star_weight() -> f64 {
    STAR_DEFAULT_WEIGHT
}
fn default_star_q_target() -> f64 {
    STAR_DEFAULT_Q_TARGET
}

impl InstanceSpec {
    pub fn label(&self) -> String {
        match self {
            InstanceSpec::BlumBad { groups } => format!("blum_bad(N={groups})"),
            InstanceSpec::Tightness { l } => format!("tightness(L={l})"),
            InstanceSpec::WeightedStar { k, .. } => format!("weighted_star(k={k})"),
            InstanceSpec::Random { n, density, .. } => format!("random(n={n},d={density})"),
            InstanceSpec::File { path } => format!("file({path})"),
        }
    }
}

pub fn build_instance(spec: &InstanceSpec) -> Result<Graph, HarnessError> {
    Ok(match spec {
        InstanceSpec::BlumBad { groups } => gen_blum_bad_instance(*groups),
        InstanceSpec::Tightness { l } => gen_tightness_instance(*l),
        InstanceSpec::WeightedStar {
            k,
            w_crucial,
            q_target,
        } => gen_weighted_star(*k, *w_crucial, *q_target)?,
        InstanceSpec::Random {
            n,
            density,
            weights,
            p,
            seed,
        } => gen_random_graph(*n, *density, *weights, *p, *seed)?,
        InstanceSpec::File { path } => Graph::read_from_path(Path::new(path))?,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Nonadaptive,
    BaselineDefault,
    BaselineAdversarial,
    Adaptive,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalysisConfig {
    /// Number of procedure runs (realization + crucial-matching draws).
    pub runs: u64,
    /// Crucial threshold; defaults to the formula value at the config's
    /// epsilon when absent.
    #[serde(default)]
    pub tau_override: Option<f64>,
    /// Heavy/semi-heavy margin.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Run validity checks on every k-th procedure output (0 disables).
    #[serde(default = "default_check_every")]
    pub check_every: u64,
    /// Break matching ties per realization instead of by the canonical
    /// lexicographic rule. Symmetric instances need this for matching
    /// probabilities to spread the way the analysis assumes.
    #[serde(default)]
    pub keyed_ties: bool,
}

fn default_delta() -> f64 {
    0.09
}
fn default_check_every() -> u64 {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub algorithm: AlgorithmKind,
    pub epsilon: f64,
    #[serde(default)]
    pub r_override: Option<u64>,
    /// Inner draws per adaptive round.
    #[serde(default)]
    pub r_star: Option<u64>,
    /// Trials for q/opt estimation.
    pub stats_trials: u64,
    /// Trials per query-set evaluation.
    pub eval_trials: u64,
    /// Outer repetitions (for adaptive runs: hidden realizations).
    pub runs: u64,
    pub seed: u64,
    #[serde(default)]
    pub analysis: Option<AnalysisConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceSummary {
    pub label: String,
    pub vertices: usize,
    pub edges: usize,
    pub p: f64,
    pub max_weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AlgorithmOutcome {
    pub value: f64,
    pub stderr: f64,
    pub ratio: f64,
    pub ratio_stderr: f64,
    pub rounds: u64,
    pub max_queries_per_vertex: u32,
    pub mean_queries_per_vertex: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalysisReport {
    pub tau: f64,
    pub delta: f64,
    pub crucial_edges: usize,
    pub noncrucial_edges: usize,
    pub heavy_edges: usize,
    pub semiheavy_edges: usize,
    pub qw_crucial: f64,
    pub qw_noncrucial: f64,
    pub qw_heavy: f64,
    pub qw_semiheavy: f64,
    pub proc_runs: u64,
    /// Mean fractional weight of the non-crucial construction alone.
    pub noncrucial_mean: f64,
    /// Mean of the combined unweighted construction.
    pub combined_unweighted_mean: f64,
    /// Mean of the combined weighted construction.
    pub combined_weighted_mean: f64,
    pub unweighted_ratio: f64,
    pub weighted_ratio: f64,
    pub validity_checks: u64,
    pub validity_failures: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub instance: InstanceSummary,
    pub opt: Estimate,
    pub algorithm: AlgorithmOutcome,
    #[serde(default)]
    pub analysis: Option<AnalysisReport>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// Derived sub-seeds; all experiment randomness descends from the config
/// seed through fixed domain tags.
fn stats_seed(seed: u64) -> u64 {
    StreamRng::new(seed, domains::REALIZATION).value(0, 0)
}
fn build_seed(seed: u64, run: u64) -> u64 {
    StreamRng::new(seed, domains::RUNS).derive(run).value(1, 0)
}
fn eval_seed(seed: u64, run: u64) -> u64 {
    StreamRng::new(seed, domains::RUNS).derive(run).value(2, 0)
}
fn analysis_seed(seed: u64) -> u64 {
    StreamRng::new(seed, domains::ANALYSIS).value(0, 0)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let start = Instant::now();
    if config.runs < 1 || config.stats_trials < 1 || config.eval_trials < 1 {
        return Err(HarnessError::Config(
            "runs, stats_trials and eval_trials must all be >= 1".into(),
        ));
    }
    let graph = build_instance(&config.instance)?;
    let stats = instance_stats(&config.instance, &graph, config.stats_trials, config.seed);
    let opt = Estimate {
        value: stats.opt_estimate,
        stderr: stats.opt_stderr,
    };

    let mut values = Vec::with_capacity(config.runs as usize);
    let mut rounds_used = 0;
    let mut max_deg = 0u32;
    let mut sum_deg = 0.0;
    for run in 0..config.runs {
        let bseed = build_seed(config.seed, run);
        match config.algorithm {
            AlgorithmKind::Nonadaptive => {
                let qs = run_nonadaptive(
                    &graph,
                    &AlgorithmParams {
                        epsilon: config.epsilon,
                        r_override: config.r_override,
                        seed: bseed,
                    },
                )?;
                rounds_used = qs.rounds;
                max_deg = max_deg.max(qs.max_degree());
                sum_deg += mean_degree(&graph, &qs);
                let (v, _) =
                    evaluate_query_set(&graph, &qs, config.eval_trials, eval_seed(config.seed, run));
                values.push(v);
            }
            AlgorithmKind::BaselineDefault | AlgorithmKind::BaselineAdversarial => {
                let rounds = config.r_override.ok_or_else(|| {
                    HarnessError::Config("baseline algorithms need r_override".into())
                })?;
                let selector = if config.algorithm == AlgorithmKind::BaselineDefault {
                    MatchingSelector::Default
                } else {
                    MatchingSelector::AdversarialFig2
                };
                let qs = run_baseline_greedy(&graph, rounds, selector)?;
                rounds_used = qs.rounds;
                max_deg = max_deg.max(qs.max_degree());
                sum_deg += mean_degree(&graph, &qs);
                let (v, _) =
                    evaluate_query_set(&graph, &qs, config.eval_trials, eval_seed(config.seed, run));
                values.push(v);
            }
            AlgorithmKind::Adaptive => {
                let r_star = config.r_star.unwrap_or(10);
                let out = run_adaptive(&graph, config.epsilon, r_star, bseed);
                rounds_used = (1.0 / config.epsilon).ceil() as u64;
                max_deg = max_deg.max(out.max_queries_per_vertex);
                sum_deg += f64::from(out.max_queries_per_vertex);
                values.push(out.matched_weight);
            }
        }
    }
    let n = values.len() as f64;
    let value = values.iter().sum::<f64>() / n;
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    let ratio = value / opt.value;
    let ratio_stderr = if value > 0.0 && opt.value > 0.0 {
        ratio * ((stderr / value).powi(2) + (opt.stderr / opt.value).powi(2)).sqrt()
    } else {
        0.0
    };

    let analysis = match &config.analysis {
        Some(cfg) => Some(run_analysis(config, cfg, &graph, &stats)?),
        None => None,
    };

    Ok(ExperimentReport {
        instance: InstanceSummary {
            label: config.instance.label(),
            vertices: graph.vertex_count(),
            edges: graph.edge_count(),
            p: graph.p(),
            max_weight: graph.max_weight(),
        },
        config: config.clone(),
        opt,
        algorithm: AlgorithmOutcome {
            value,
            stderr,
            ratio,
            ratio_stderr,
            rounds: rounds_used,
            max_queries_per_vertex: max_deg,
            mean_queries_per_vertex: sum_deg / n,
        },
        analysis,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

fn mean_degree(graph: &Graph, qs: &QuerySet) -> f64 {
    qs.degree.iter().map(|&d| f64::from(d)).sum::<f64>() / graph.vertex_count() as f64
}

/// Stats source per instance: stars use the exact closed form under keyed
/// ties (their leaf probabilities differ by less than Monte-Carlo
/// resolution, see the star analysis notes), everything else is estimated.
fn instance_stats(spec: &InstanceSpec, graph: &Graph, trials: u64, seed: u64) -> EdgeStats {
    if matches!(spec, InstanceSpec::WeightedStar { .. }) {
        if let Some(stats) = exact_star_match_probs_with(graph, TieBreak::RealizationKeyed) {
            return stats;
        }
    }
    estimate_match_probs(graph, trials, stats_seed(seed))
}

/// Crucial threshold separating the star's hub-winning edge (q = p) from its
/// strongest leaf (q = p(1-p)).
pub fn star_tau(p: f64) -> f64 {
    p * (1.0 - p).sqrt()
}

fn run_analysis(
    config: &ExperimentConfig,
    cfg: &AnalysisConfig,
    graph: &Graph,
    stats: &EdgeStats,
) -> Result<AnalysisReport, HarnessError> {
    // Stars always analyze under keyed ties: their unit-leaf classes tie on
    // every realization and only the keyed rule spreads them evenly.
    let is_star = matches!(config.instance, InstanceSpec::WeightedStar { .. });
    let tie = if cfg.keyed_ties || is_star {
        TieBreak::RealizationKeyed
    } else {
        TieBreak::CanonicalLex
    };
    let tau = match cfg.tau_override {
        Some(t) => t,
        None if is_star => star_tau(graph.p()),
        None => compute_tau(config.epsilon, graph.p())?,
    };
    // Membership statistics must come from the same tie rule the procedure
    // draws use; star stats already are (exact closed form, keyed).
    let keyed_stats;
    let stats = if cfg.keyed_ties && !is_star {
        keyed_stats =
            estimate_match_probs_with(graph, config.stats_trials, stats_seed(config.seed), tie);
        &keyed_stats
    } else {
        stats
    };
    let (mut partition, mut budgets) = classify_edges(graph, stats, tau);
    classify_heavy_semiheavy(graph, stats, &mut partition, &mut budgets, cfg.delta);

    let qs = run_nonadaptive_with(
        graph,
        &AlgorithmParams {
            epsilon: config.epsilon,
            r_override: config.r_override,
            seed: analysis_seed(config.seed),
        },
        tie,
    )?;

    let runs = procedure_runs_with(
        graph,
        stats,
        &partition,
        &budgets,
        &qs,
        config.epsilon,
        tau,
        cfg.runs,
        analysis_seed(config.seed),
        cfg.check_every,
        is_star,
        tie,
    );

    let opt = stats.opt_estimate;
    Ok(AnalysisReport {
        tau,
        delta: cfg.delta,
        crucial_edges: partition.crucial.len(),
        noncrucial_edges: partition.noncrucial.len(),
        heavy_edges: partition.heavy.len(),
        semiheavy_edges: partition.semiheavy.len(),
        qw_crucial: stats.qw_total(&partition.crucial.to_vec()),
        qw_noncrucial: stats.qw_total(&partition.noncrucial.to_vec()),
        qw_heavy: stats.qw_total(&partition.heavy.to_vec()),
        qw_semiheavy: stats.qw_total(&partition.semiheavy.to_vec()),
        proc_runs: cfg.runs,
        noncrucial_mean: runs.noncrucial_mean,
        combined_unweighted_mean: runs.combined_unweighted_mean,
        combined_weighted_mean: runs.combined_weighted_mean,
        unweighted_ratio: runs.combined_unweighted_mean / opt,
        weighted_ratio: runs.combined_weighted_mean / opt,
        validity_checks: runs.validity_checks,
        validity_failures: runs.validity_failures,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProcedureRunStats {
    pub noncrucial_mean: f64,
    pub combined_unweighted_mean: f64,
    pub combined_weighted_mean: f64,
    pub noncrucial_stderr: f64,
    pub combined_unweighted_stderr: f64,
    pub combined_weighted_stderr: f64,
    pub validity_checks: u64,
    pub validity_failures: u64,
}

/// Monte-Carlo over fresh realizations: run the non-crucial construction,
/// draw the conditional crucial matching, and form both the unweighted and
/// the weighted combined fractional matchings.
///
/// With `idealized_noncrucial` (the star path) the non-crucial side is the
/// matching-probability vector restricted to the sampled non-crucial edges
/// instead of the pick-frequency construction. On a star the deterministic
/// tie-break concentrates leaf matching probabilities near p, so the leaves
/// are not below the formula threshold and the frequency construction's
/// per-leaf budget caps collapse it; the probability vector is the object
/// the weighted analysis actually budgets against.
#[allow(clippy::too_many_arguments)]
pub fn procedure_runs(
    graph: &Graph,
    stats: &EdgeStats,
    partition: &EdgePartition,
    budgets: &VertexBudgets,
    qs: &QuerySet,
    epsilon: f64,
    tau: f64,
    runs: u64,
    seed: u64,
    check_every: u64,
    idealized_noncrucial: bool,
) -> ProcedureRunStats {
    procedure_runs_with(
        graph,
        stats,
        partition,
        budgets,
        qs,
        epsilon,
        tau,
        runs,
        seed,
        check_every,
        idealized_noncrucial,
        TieBreak::CanonicalLex,
    )
}

/// [`procedure_runs`] under an explicit tie-break rule for the conditional
/// crucial-matching draws (must match the rule behind `stats` and `qs`).
#[allow(clippy::too_many_arguments)]
pub fn procedure_runs_with(
    graph: &Graph,
    stats: &EdgeStats,
    partition: &EdgePartition,
    budgets: &VertexBudgets,
    qs: &QuerySet,
    epsilon: f64,
    tau: f64,
    runs: u64,
    seed: u64,
    check_every: u64,
    idealized_noncrucial: bool,
    tie: TieBreak,
) -> ProcedureRunStats {
    let realization_rng = StreamRng::new(seed, domains::ANALYSIS);
    let conditional_rng = StreamRng::new(seed, domains::CONDITIONAL);
    let mut solver = MatchingSolver::new();

    let idealized_xn = idealized_noncrucial.then(|| {
        let mut x = FractionalMatching::zero(graph.edge_count());
        let mut sampled_noncrucial = qs.edges.clone();
        sampled_noncrucial.intersect_with(&partition.noncrucial);
        for id in sampled_noncrucial.iter() {
            x.set(id, stats.q[id as usize]);
        }
        x
    });

    let crucial_ids: Vec<u32> = {
        let mut sampled_crucial = qs.edges.clone();
        sampled_crucial.intersect_with(&partition.crucial);
        sampled_crucial.to_vec()
    };

    let mut acc = [(0.0f64, 0.0f64); 3];
    let mut checks = 0u64;
    let mut failures = 0u64;
    for run in 0..runs {
        let (xn, crucial_realization) = if let Some(x) = &idealized_xn {
            let rc = sample_id_slice(
                graph.p(),
                graph.edge_count(),
                &crucial_ids,
                &realization_rng,
                run,
            );
            (x.clone(), rc)
        } else {
            let realized = sample_realization(graph, &realization_rng, run);
            let xn =
                procedure_noncrucial(graph, qs, &realized, partition, budgets, epsilon, tau);
            let mut rc = realized;
            rc.intersect_with(&qs.edges);
            rc.intersect_with(&partition.crucial);
            (xn, rc)
        };
        let mu = sample_crucial_matching_with(
            graph,
            qs,
            partition,
            &crucial_realization,
            &mut solver,
            &conditional_rng,
            run,
            tie,
        );
        let xc = procedure_crucial_unweighted(graph, &mu, budgets, epsilon);
        let combined_unweighted = xn.combine(&xc);
        let combined_weighted = procedure_crucial_weighted(graph, &mu, budgets, &xn, epsilon);

        let w1 = fractional_weight(graph, &xn);
        let w2 = fractional_weight(graph, &combined_unweighted);
        let w3 = fractional_weight(graph, &combined_weighted);
        for (slot, w) in acc.iter_mut().zip([w1, w2, w3]) {
            slot.0 += w;
            slot.1 += w * w;
        }

        if check_every > 0 && run % check_every == 0 {
            checks += 1;
            if !check_fractional_validity(graph, &combined_unweighted).is_valid()
                || !check_fractional_validity(graph, &combined_weighted).is_valid()
            {
                failures += 1;
            }
        }
    }
    let n = runs as f64;
    let finish = |(sum, sumsq): (f64, f64)| -> (f64, f64) {
        let mean = sum / n;
        if runs < 2 {
            return (mean, 0.0);
        }
        let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    };
    let (m1, s1) = finish(acc[0]);
    let (m2, s2) = finish(acc[1]);
    let (m3, s3) = finish(acc[2]);
    ProcedureRunStats {
        noncrucial_mean: m1,
        combined_unweighted_mean: m2,
        combined_weighted_mean: m3,
        noncrucial_stderr: s1,
        combined_unweighted_stderr: s2,
        combined_weighted_stderr: s3,
        validity_checks: checks,
        validity_failures: failures,
    }
}

pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<(), HarnessError> {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

/// Read a report back, recomputing the ratio as a self-consistency check.
pub fn read_report(path: &Path) -> Result<ExperimentReport, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let report: ExperimentReport = serde_json::from_str(&text)?;
    let expect = report.algorithm.value / report.opt.value;
    if (report.algorithm.ratio - expect).abs() > 1e-9 * expect.abs().max(1.0) {
        return Err(HarnessError::Report(format!(
            "ratio {} inconsistent with value/opt = {}",
            report.algorithm.ratio, expect
        )));
    }
    Ok(report)
}

pub const CSV_HEADER: &str = "instance,algorithm,epsilon,seed,runs,opt,opt_stderr,value,value_stderr,ratio,ratio_stderr,max_queries_per_vertex,rounds,wall_time_secs";

/// Append one summary row, writing the header when the file is new.
pub fn append_csv_summary(report: &ExperimentReport, path: &Path) -> Result<(), HarnessError> {
    let need_header = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if need_header {
        writeln!(file, "{CSV_HEADER}")?;
    }
    let algo = match report.config.algorithm {
        AlgorithmKind::Nonadaptive => "nonadaptive",
        AlgorithmKind::BaselineDefault => "baseline_default",
        AlgorithmKind::BaselineAdversarial => "baseline_adversarial",
        AlgorithmKind::Adaptive => "adaptive",
    };
    writeln!(
        file,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        report.instance.label,
        algo,
        report.config.epsilon,
        report.config.seed,
        report.config.runs,
        report.opt.value,
        report.opt.stderr,
        report.algorithm.value,
        report.algorithm.stderr,
        report.algorithm.ratio,
        report.algorithm.ratio_stderr,
        report.algorithm.max_queries_per_vertex,
        report.algorithm.rounds,
        report.wall_time_secs,
    )?;
    Ok(())
}

/// Outcome of the star-instance analysis: the crucial-only construction
/// recovers only about half the optimum while the budget-stealing weighted
/// construction recovers almost all of it.
#[derive(Debug, Clone, Copy)]
pub struct StarAnalysis {
    pub opt: f64,
    pub qw_crucial: f64,
    pub qw_noncrucial: f64,
    pub qw_sampled_noncrucial: f64,
    pub unweighted_mean: f64,
    pub weighted_mean: f64,
    pub unweighted_ratio: f64,
    pub weighted_ratio: f64,
    pub validity_failures: u64,
}

/// Star-specific analysis path. Exact closed-form stats and keyed ties
/// throughout: on a star every round of the build ties among the realized
/// unit leaves, and only the keyed rule spreads those picks the way the
/// analysis assumes (see [`procedure_runs`] for why the non-crucial side
/// uses the probability vector).
///
/// The runs are split by the crucial realization outcome and recombined
/// with the exact branch probabilities. Plain averaging would need ~1e9
/// runs for comparable precision here: the crucial edge pairs a ~1e-3
/// probability with a ~1e3 weight, so each run's value has a standard
/// deviation of dozens of times the mean.
pub fn star_analysis(
    graph: &Graph,
    build_rounds: u64,
    runs: u64,
    epsilon: f64,
    seed: u64,
) -> Result<StarAnalysis, HarnessError> {
    let tie = TieBreak::RealizationKeyed;
    let stats = exact_star_match_probs_with(graph, tie)
        .ok_or_else(|| HarnessError::Config("star analysis needs a star graph".into()))?;
    let tau = star_tau(graph.p());
    let (mut partition, mut budgets) = classify_edges(graph, &stats, tau);
    classify_heavy_semiheavy(graph, &stats, &mut partition, &mut budgets, 0.09);
    let qs = run_nonadaptive_with(
        graph,
        &AlgorithmParams {
            epsilon,
            r_override: Some(build_rounds),
            seed: analysis_seed(seed),
        },
        tie,
    )?;

    // The probability-vector fractional matching on sampled non-crucial
    // edges, shared by both constructions.
    let mut sampled_noncrucial = qs.edges.clone();
    sampled_noncrucial.intersect_with(&partition.noncrucial);
    let mut xn = FractionalMatching::zero(graph.edge_count());
    for id in sampled_noncrucial.iter() {
        xn.set(id, stats.q[id as usize]);
    }
    let qw_sampled = fractional_weight(graph, &xn);

    let mut sampled_crucial = qs.edges.clone();
    sampled_crucial.intersect_with(&partition.crucial);
    let crucial_ids = sampled_crucial.to_vec();

    // Branch probabilities: every crucial realization outcome of the sampled
    // crucial edges. For the calibrated star that is one edge, giving two
    // branches; guard against other shapes.
    if crucial_ids.len() != 1 {
        return Err(HarnessError::Config(format!(
            "star analysis expects exactly one sampled crucial edge, found {}",
            crucial_ids.len()
        )));
    }
    let p = graph.p();
    let conditional_rng = StreamRng::new(analysis_seed(seed), domains::CONDITIONAL);
    let mut solver = MatchingSolver::new();
    let mut branch_means = [0.0f64; 4]; // [unweighted, weighted] x [absent, present]
    let mut validity_failures = 0u64;
    let per_branch = (runs / 2).max(1);
    for (branch, realized) in [false, true].into_iter().enumerate() {
        let mut crucial_realization = EdgeSet::new(graph.edge_count());
        if realized {
            crucial_realization.insert(crucial_ids[0]);
        }
        let mut sum_unweighted = 0.0;
        let mut sum_weighted = 0.0;
        for run in 0..per_branch {
            let mu = sample_crucial_matching_with(
                graph,
                &qs,
                &partition,
                &crucial_realization,
                &mut solver,
                &conditional_rng,
                branch as u64 * per_branch + run,
                tie,
            );
            let xc = procedure_crucial_unweighted(graph, &mu, &budgets, epsilon);
            let unweighted = xn.combine(&xc);
            let weighted = procedure_crucial_weighted(graph, &mu, &budgets, &xn, epsilon);
            sum_unweighted += fractional_weight(graph, &unweighted);
            sum_weighted += fractional_weight(graph, &weighted);
            if run == 0
                && (!check_fractional_validity(graph, &unweighted).is_valid()
                    || !check_fractional_validity(graph, &weighted).is_valid())
            {
                validity_failures += 1;
            }
        }
        branch_means[2 * branch] = sum_unweighted / per_branch as f64;
        branch_means[2 * branch + 1] = sum_weighted / per_branch as f64;
    }
    let unweighted_mean = (1.0 - p) * branch_means[0] + p * branch_means[2];
    let weighted_mean = (1.0 - p) * branch_means[1] + p * branch_means[3];

    let opt = stats.opt_estimate;
    Ok(StarAnalysis {
        opt,
        qw_crucial: stats.qw_total(&partition.crucial.to_vec()),
        qw_noncrucial: stats.qw_total(&partition.noncrucial.to_vec()),
        qw_sampled_noncrucial: qw_sampled,
        unweighted_mean,
        weighted_mean,
        unweighted_ratio: unweighted_mean / opt,
        weighted_ratio: weighted_mean / opt,
        validity_failures,
    })
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Mathratio,
    Procedures,
    Oracles,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mathratio" => Ok(Suite::Mathratio),
            "procedures" => Ok(Suite::Procedures),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            other => Err(format!(
                "unknown suite {other:?} (expected mathratio|procedures|oracles|all)"
            )),
        }
    }
}

/// Invariant suites behind `stochmatch verify`. Lighter than the acceptance
/// tests but checking the same contracts.
pub fn run_verify_suite(suite: Suite, seed: u64) -> Vec<SuiteOutcome> {
    let mut outcomes = Vec::new();
    if matches!(suite, Suite::Mathratio | Suite::All) {
        outcomes.push(suite_mathratio(seed));
    }
    if matches!(suite, Suite::Procedures | Suite::All) {
        outcomes.push(suite_procedures(seed));
    }
    if matches!(suite, Suite::Oracles | Suite::All) {
        outcomes.push(suite_oracles(seed));
    }
    outcomes
}

fn suite_mathratio(seed: u64) -> SuiteOutcome {
    let bound = crate::analysis::mathratio_bound();
    let max = verify_mathratio(1_000_000, seed);
    let s = std::f64::consts::SQRT_2;
    let extremal = crate::analysis::mathratio_value(&[(s - 1.0, 2.0 - s)]).unwrap();
    let passed = max <= bound + 1e-9 && (extremal - bound).abs() <= 1e-12;
    SuiteOutcome {
        name: "mathratio".into(),
        passed,
        detail: format!("max ratio {max:.12} vs bound {bound:.12}"),
    }
}

fn suite_procedures(seed: u64) -> SuiteOutcome {
    let eps = 1.0 / 3.0;
    let mut violations = 0u64;
    let mut runs = 0u64;
    for instance in 0..5u64 {
        // Lopsided unit stars have genuinely non-crucial far leaves under
        // the formula threshold.
        let edges: Vec<(u32, u32, f64)> = (0..18u32).map(|j| (0, j + 1, 1.0)).collect();
        let graph = Graph::build(&edges, 0.5).unwrap();
        let stats = exact_match_probs(&graph).unwrap();
        let tau = compute_tau(eps, graph.p()).unwrap();
        let (partition, budgets) = classify_edges(&graph, &stats, tau);
        let qs = run_nonadaptive(
            &graph,
            &AlgorithmParams {
                epsilon: eps,
                r_override: Some(200),
                seed: seed.wrapping_add(instance),
            },
        )
        .unwrap();
        let rng = StreamRng::new(seed.wrapping_add(1000 + instance), domains::ANALYSIS);
        for run in 0..100 {
            runs += 1;
            let realized = sample_realization(&graph, &rng, run);
            let x = procedure_noncrucial(&graph, &qs, &realized, &partition, &budgets, eps, tau);
            let mut ok = true;
            for id in x.support().iter() {
                ok &= qs.edges.contains(id)
                    && realized.contains(id)
                    && partition.noncrucial.contains(id)
                    && x.value(id) <= 2.0 * tau / graph.p() + 1e-12;
            }
            for v in 0..graph.vertex_count() as u32 {
                ok &= x.vertex_load(&graph, v) <= budgets.q_n[v as usize].max(eps) + 1e-12;
            }
            ok &= crate::analysis::check_blossom_inequalities(
                &graph,
                &x,
                9,
                crate::analysis::BlossomBound::Tightened(eps),
            )
            .map(|r| r.is_valid())
            .unwrap_or(false);
            if !ok {
                violations += 1;
            }
        }
    }
    SuiteOutcome {
        name: "procedures".into(),
        passed: violations == 0,
        detail: format!("{runs} runs, {violations} violations"),
    }
}

fn suite_oracles(seed: u64) -> SuiteOutcome {
    let mut solver = MatchingSolver::new();
    let mut failures = 0u64;
    let mut graphs = 0u64;
    let mut attempt = 0u64;
    while graphs < 10 {
        attempt += 1;
        let weights = if graphs.is_multiple_of(2) {
            WeightMode::Unit
        } else {
            WeightMode::Uniform { lo: 0.5, hi: 3.0 }
        };
        let g = match gen_random_graph(8, 0.5, weights, 0.4, seed.wrapping_add(attempt)) {
            Ok(g) => g,
            Err(_) => continue,
        };
        if g.edge_count() == 0 || g.edge_count() > 14 {
            continue;
        }
        graphs += 1;
        let active = EdgeSet::full(g.edge_count());
        let fast = solver.solve(&g, &active);
        let slow = brute_force_matching(&g, &active).unwrap();
        if fast.edge_ids != slow.edge_ids {
            failures += 1;
            continue;
        }
        let exact = exact_expected_matching(&g, &active).unwrap();
        let (mc, stderr) = estimate_opt_mc(&g, 20_000, seed.wrapping_add(500 + attempt));
        if (mc - exact).abs() > 4.0 * stderr.max(1e-9) {
            failures += 1;
        }
    }
    SuiteOutcome {
        name: "oracles".into(),
        passed: failures == 0,
        detail: format!("{graphs} graphs, {failures} failures"),
    }
}
