//! Realization sampling and the statistical layer: Monte-Carlo estimation of
//! the omniscient optimum and of per-edge matching probabilities, plus exact
//! enumeration oracles for tiny graphs.
//!
//! The matching probability `q_e` of an edge is the probability that it
//! belongs to the deterministic maximum-weight matching of a random
//! realization; `qw_e = q_e * w_e`. Monte-Carlo `q` and the optimum are
//! always co-estimated from the same trials, so the reported optimum equals
//! `sum qw_e` exactly rather than approximately.

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{EdgeSet, Graph};
use crate::rng::{domains, probability_threshold, StreamRng};
use crate::solver::{MatchingSolver, TieBreak};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("enumeration oracle limited to {max} edges, got {got}")]
    TooManyEdges { got: usize, max: usize },
}

pub const ENUMERATION_MAX_EDGES: usize = 20;

/// Trials per parallel work unit. Fixed so results never depend on worker
/// count: chunk results are collected in index order and merged sequentially.
const CHUNK: u64 = 1024;

/// Per-edge matching statistics from a shared trial set (or from exact
/// enumeration, in which case `trials == 0` and all stderr are zero).
#[derive(Debug, Clone)]
pub struct EdgeStats {
    pub q: Vec<f64>,
    pub qw: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: u64,
    /// Equals `sum qw_e` bit-exactly by construction.
    pub opt_estimate: f64,
    pub opt_stderr: f64,
}

impl EdgeStats {
    pub fn q_total<'a>(&self, edges: impl IntoIterator<Item = &'a u32>) -> f64 {
        edges.into_iter().map(|&e| self.q[e as usize]).sum()
    }

    pub fn qw_total<'a>(&self, edges: impl IntoIterator<Item = &'a u32>) -> f64 {
        edges.into_iter().map(|&e| self.qw[e as usize]).sum()
    }
}

/// Below this probability realizations are drawn by geometric gap-skipping
/// instead of one Bernoulli per edge; the choice is a pure function of `p`,
/// so determinism is unaffected.
const SPARSE_P_THRESHOLD: f64 = 0.01;

/// Draw one realization: each edge survives independently with probability
/// `p`. Pure in `(rng, trial)`.
pub fn sample_realization(graph: &Graph, rng: &StreamRng, trial: u64) -> EdgeSet {
    sample_positions(graph.p(), graph.edge_count(), None, rng, trial)
}

/// Realization restricted to the given edge ids (ascending), drawn from the
/// same stream layout as [`sample_realization`].
pub fn sample_id_slice(
    p: f64,
    capacity: usize,
    ids: &[u32],
    rng: &StreamRng,
    trial: u64,
) -> EdgeSet {
    sample_positions(p, capacity, Some(ids), rng, trial)
}

fn sample_positions(
    p: f64,
    capacity: usize,
    ids: Option<&[u32]>,
    rng: &StreamRng,
    trial: u64,
) -> EdgeSet {
    let mut set = EdgeSet::new(capacity);
    let count = ids.map_or(capacity, <[u32]>::len);
    let id_at = |i: usize| ids.map_or(i as u32, |s| s[i]);
    if p < SPARSE_P_THRESHOLD {
        // Geometric gaps between realized edges; draws are indexed by draw
        // number rather than edge id.
        let ln_skip = (1.0 - p).ln();
        let mut pos = 0usize;
        let mut draw = 0u64;
        loop {
            let u = rng.unit(trial, draw);
            draw += 1;
            let skip = (u.ln() / ln_skip).floor();
            if !skip.is_finite() || skip >= (count - pos) as f64 {
                break;
            }
            pos += skip as usize;
            set.insert(id_at(pos));
            pos += 1;
            if pos >= count {
                break;
            }
        }
    } else {
        let threshold = probability_threshold(p);
        for i in 0..count {
            let id = id_at(i);
            if rng.bernoulli(threshold, trial, id as u64) {
                set.insert(id);
            }
        }
    }
    set
}

fn merge_moments(chunks: Vec<(f64, f64)>) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for (s, s2) in chunks {
        sum += s;
        sumsq += s2;
    }
    (sum, sumsq)
}

fn mean_stderr(sum: f64, sumsq: f64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let mean = sum / n;
    if trials < 2 {
        return (mean, 0.0);
    }
    let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo estimate of `E[M(E_p)]` with its standard error.
pub fn estimate_opt_mc(graph: &Graph, trials: u64, seed: u64) -> (f64, f64) {
    let rng = StreamRng::new(seed, domains::REALIZATION);
    let nchunks = trials.div_ceil(CHUNK);
    let chunks: Vec<(f64, f64)> = (0..nchunks)
        .into_par_iter()
        .map_init(MatchingSolver::new, |solver, c| {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let realized = sample_realization(graph, &rng, t);
                let w = solver.solve(graph, &realized).weight;
                sum += w;
                sumsq += w * w;
            }
            (sum, sumsq)
        })
        .collect();
    let (sum, sumsq) = merge_moments(chunks);
    mean_stderr(sum, sumsq, trials)
}

/// Co-estimate per-edge matching probabilities and the optimum from one
/// shared trial set. Per-trial membership counts are integers, so the merge
/// across parallel chunks is exact and order-independent.
pub fn estimate_match_probs(graph: &Graph, trials: u64, seed: u64) -> EdgeStats {
    estimate_match_probs_with(graph, trials, seed, TieBreak::CanonicalLex)
}

/// [`estimate_match_probs`] under an explicit tie-break rule (membership
/// statistics depend on which optimum the solver reports; the optimum value
/// does not).
pub fn estimate_match_probs_with(
    graph: &Graph,
    trials: u64,
    seed: u64,
    tie: TieBreak,
) -> EdgeStats {
    assert!(trials >= 1);
    let m = graph.edge_count();
    let rng = StreamRng::new(seed, domains::REALIZATION);
    let nchunks = trials.div_ceil(CHUNK);
    let chunks: Vec<(Vec<u64>, f64, f64)> = (0..nchunks)
        .into_par_iter()
        .map_init(MatchingSolver::new, |solver, c| {
            let mut counts = vec![0u64; m];
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let realized = sample_realization(graph, &rng, t);
                let matching = solver.solve_with(graph, &realized, tie);
                for &id in &matching.edge_ids {
                    counts[id as usize] += 1;
                }
                sum += matching.weight;
                sumsq += matching.weight * matching.weight;
            }
            (counts, sum, sumsq)
        })
        .collect();
    let mut counts = vec![0u64; m];
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for (c, s, s2) in chunks {
        for (acc, x) in counts.iter_mut().zip(c) {
            *acc += x;
        }
        sum += s;
        sumsq += s2;
    }
    stats_from_counts(graph, &counts, trials, sum, sumsq)
}

fn stats_from_counts(
    graph: &Graph,
    counts: &[u64],
    trials: u64,
    sum: f64,
    sumsq: f64,
) -> EdgeStats {
    let n = trials as f64;
    let q: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let qw: Vec<f64> = q
        .iter()
        .zip(graph.edges())
        .map(|(&q, e)| q * e.w)
        .collect();
    let stderr: Vec<f64> = q.iter().map(|&q| (q * (1.0 - q) / n).sqrt()).collect();
    let opt_estimate = qw.iter().sum();
    let (_, opt_stderr) = mean_stderr(sum, sumsq, trials);
    EdgeStats {
        q,
        qw,
        stderr,
        trials,
        opt_estimate,
        opt_stderr,
    }
}

/// Exact `E[M(E' \cap E_p)]` by enumerating all realizations of `restrict`.
pub fn exact_expected_matching(graph: &Graph, restrict: &EdgeSet) -> Result<f64, OracleError> {
    let ids = restrict.to_vec();
    if ids.len() > ENUMERATION_MAX_EDGES {
        return Err(OracleError::TooManyEdges {
            got: ids.len(),
            max: ENUMERATION_MAX_EDGES,
        });
    }
    let mut solver = MatchingSolver::new();
    let mut total = 0.0;
    let p = graph.p();
    for mask in 0u32..1u32 << ids.len() {
        let mut active = EdgeSet::new(graph.edge_count());
        for (bit, &id) in ids.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                active.insert(id);
            }
        }
        let k = mask.count_ones() as i32;
        let prob = p.powi(k) * (1.0 - p).powi(ids.len() as i32 - k);
        total += prob * solver.solve(graph, &active).weight;
    }
    Ok(total)
}

/// Exact per-edge matching probabilities by full enumeration.
pub fn exact_match_probs(graph: &Graph) -> Result<EdgeStats, OracleError> {
    let m = graph.edge_count();
    if m > ENUMERATION_MAX_EDGES {
        return Err(OracleError::TooManyEdges {
            got: m,
            max: ENUMERATION_MAX_EDGES,
        });
    }
    let mut solver = MatchingSolver::new();
    let p = graph.p();
    let mut q = vec![0.0; m];
    for mask in 0u32..1u32 << m {
        let mut active = EdgeSet::new(m);
        for bit in 0..m {
            if mask >> bit & 1 == 1 {
                active.insert(bit as u32);
            }
        }
        let k = mask.count_ones() as i32;
        let prob = p.powi(k) * (1.0 - p).powi(m as i32 - k);
        for &id in &solver.solve(graph, &active).edge_ids {
            q[id as usize] += prob;
        }
    }
    Ok(exact_stats(graph, q))
}

fn exact_stats(graph: &Graph, q: Vec<f64>) -> EdgeStats {
    let qw: Vec<f64> = q
        .iter()
        .zip(graph.edges())
        .map(|(&q, e)| q * e.w)
        .collect();
    let opt_estimate = qw.iter().sum();
    EdgeStats {
        stderr: vec![0.0; q.len()],
        trials: 0,
        opt_estimate,
        opt_stderr: 0.0,
        q,
        qw,
    }
}

/// Exact matching probabilities for star graphs (all edges sharing one
/// vertex), where the optimum of any realization is just its best edge.
/// Closed form, so it scales to stars far beyond the enumeration cap.
/// Returns `None` if the graph is not a star, or (in canonical mode) when an
/// equal-weight class reaches edge ids past the exact range of the
/// lexicographic tie bonus.
pub fn exact_star_match_probs_with(graph: &Graph, tie: TieBreak) -> Option<EdgeStats> {
    let m = graph.edge_count();
    if m == 0 {
        return Some(exact_stats(graph, Vec::new()));
    }
    let e0 = graph.edge(0);
    let is_star = [e0.u, e0.v]
        .iter()
        .any(|&h| graph.edges().iter().all(|e| e.u == h || e.v == h));
    if !is_star {
        return None;
    }
    // Group into weight classes, strongest first. Within a class the winner
    // depends on the tie rule.
    let mut order: Vec<u32> = (0..m as u32).collect();
    order.sort_by(|&a, &b| {
        let (wa, wb) = (graph.weight(a), graph.weight(b));
        wb.partial_cmp(&wa).unwrap().then(a.cmp(&b))
    });
    let p = graph.p();
    let mut q = vec![0.0; m];
    let mut survive = 1.0; // probability that no stronger edge is realized
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j < m && graph.weight(order[j]) == graph.weight(order[i]) {
            j += 1;
        }
        let class = &order[i..j];
        match tie {
            TieBreak::CanonicalLex => {
                // Winner is the smallest realized id; exact only while the
                // per-id bonuses are representable.
                if class.len() > 1 && *class.last().unwrap() >= 1072 {
                    return None;
                }
                for &id in class {
                    q[id as usize] = p * survive;
                    survive *= 1.0 - p;
                }
            }
            TieBreak::RealizationKeyed => {
                // Winner is uniform among the realized members of the class.
                let c = class.len() as f64;
                let none_realized = (1.0 - p).powi(class.len() as i32);
                let share = survive * (1.0 - none_realized) / c;
                for &id in class {
                    q[id as usize] = share;
                }
                survive *= none_realized;
            }
        }
        i = j;
    }
    Some(exact_stats(graph, q))
}

/// [`exact_star_match_probs_with`] under the canonical tie-break.
pub fn exact_star_match_probs(graph: &Graph) -> Option<EdgeStats> {
    exact_star_match_probs_with(graph, TieBreak::CanonicalLex)
}

/// Probability that an edge with matching probability `q_e` is picked at
/// least once over `rounds` independent rounds: `1 - (1 - q_e)^R`.
pub fn sampling_prob(q_e: f64, rounds: u64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&q_e));
    1.0 - (1.0 - q_e).powf(rounds as f64)
}
