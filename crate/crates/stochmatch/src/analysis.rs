//! Fractional-matching constructions and certificates.
//!
//! The analysis of the query-planning algorithms partitions edges into
//! crucial (matching probability at least tau) and non-crucial (below tau)
//! and builds fractional matchings over the realized queried edges:
//!
//! * [`procedure_noncrucial`] turns pick frequencies into a fractional
//!   matching on realized sampled non-crucial edges while preserving
//!   per-vertex non-crucial budgets;
//! * [`sample_crucial_matching`] draws the crucial part of the omniscient
//!   optimum conditioned on the observed crucial realization;
//! * [`procedure_crucial_unweighted`] fills the remaining vertex capacity on
//!   that matching, and [`procedure_crucial_weighted`] instead lets a heavy
//!   realized crucial edge steal budget from its endpoints' non-crucial mass
//!   when that increases total weight;
//! * validity and blossom-inequality checkers certify the constructions, and
//!   [`verify_mathratio`] probes the scalar inequality behind the unweighted
//!   ratio.

use thiserror::Error;

use crate::algorithms::QuerySet;
use crate::estimators::{sample_id_slice, EdgeStats};
use crate::graph::{EdgeSet, Graph};
use crate::rng::StreamRng;
use crate::solver::{Matching, MatchingSolver, TieBreak};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("epsilon {0} outside (0, 1/e]")]
    EpsilonOutOfRange(f64),
    #[error("blossom check limited to odd sets of size <= {max}, got {got}")]
    SetSizeTooLarge { got: usize, max: usize },
    #[error("blossom check supports at most {max} support vertices, got {got}")]
    SupportTooLarge { got: usize, max: usize },
}

/// Crucial threshold `eps^3 p / (20 ln(1/eps))`, natural logarithm.
/// Valid for `0 < eps <= 1/e`, where the concentration arguments behind the
/// non-crucial construction apply.
pub fn compute_tau(epsilon: f64, p: f64) -> Result<f64, AnalysisError> {
    if !(epsilon > 0.0 && epsilon <= (-1.0f64).exp()) {
        return Err(AnalysisError::EpsilonOutOfRange(epsilon));
    }
    debug_assert!(p > 0.0 && p < 1.0);
    Ok(epsilon.powi(3) * p / (20.0 * (1.0 / epsilon).ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CstarType {
    Type1,
    Type2,
    Type3,
}

/// Crucial / non-crucial split plus the weighted-analysis refinement
/// (heavy, semi-heavy, directed remainder).
#[derive(Debug, Clone)]
pub struct EdgePartition {
    pub crucial: EdgeSet,
    pub noncrucial: EdgeSet,
    pub tau: f64,
    pub heavy: EdgeSet,
    pub semiheavy: EdgeSet,
    pub cstar: EdgeSet,
    /// Target vertex of each directed C* edge.
    pub direction: Vec<Option<u32>>,
    pub edge_type: Vec<Option<CstarType>>,
    pub delta: f64,
}

/// Per-vertex budget sums over the partition.
#[derive(Debug, Clone)]
pub struct VertexBudgets {
    /// Sum of q over incident non-crucial edges.
    pub q_n: Vec<f64>,
    /// Sum of qw over incident non-crucial edges.
    pub qw_n: Vec<f64>,
    /// Sum of q over incident crucial edges.
    pub q_c: Vec<f64>,
    /// Incoming directed C* mass (filled by [`classify_heavy_semiheavy`]).
    pub q_c_minus: Vec<f64>,
    pub qw_c_minus: Vec<f64>,
}

/// Threshold split: crucial iff `q_e >= tau`. Budgets are computed from the
/// same stats.
pub fn classify_edges(
    graph: &Graph,
    stats: &EdgeStats,
    tau: f64,
) -> (EdgePartition, VertexBudgets) {
    let m = graph.edge_count();
    let n = graph.vertex_count();
    let mut crucial = EdgeSet::new(m);
    let mut noncrucial = EdgeSet::new(m);
    let mut budgets = VertexBudgets {
        q_n: vec![0.0; n],
        qw_n: vec![0.0; n],
        q_c: vec![0.0; n],
        q_c_minus: vec![0.0; n],
        qw_c_minus: vec![0.0; n],
    };
    for (id, e) in graph.edges().iter().enumerate() {
        let q = stats.q[id];
        let qw = stats.qw[id];
        if q >= tau {
            crucial.insert(id as u32);
            budgets.q_c[e.u as usize] += q;
            budgets.q_c[e.v as usize] += q;
        } else {
            noncrucial.insert(id as u32);
            budgets.q_n[e.u as usize] += q;
            budgets.q_n[e.v as usize] += q;
            budgets.qw_n[e.u as usize] += qw;
            budgets.qw_n[e.v as usize] += qw;
        }
    }
    (
        EdgePartition {
            crucial,
            noncrucial,
            tau,
            heavy: EdgeSet::new(m),
            semiheavy: EdgeSet::new(m),
            cstar: EdgeSet::new(m),
            direction: vec![None; m],
            edge_type: vec![None; m],
            delta: 0.0,
        },
        budgets,
    )
}

/// Refine the crucial side: heavy edges outweigh both endpoints' non-crucial
/// mass by a (1+delta) factor, semi-heavy edges outweigh twice the larger
/// endpoint's, and every remaining C* edge is directed and typed. Directed
/// mass is accumulated into the budgets.
pub fn classify_heavy_semiheavy(
    graph: &Graph,
    stats: &EdgeStats,
    partition: &mut EdgePartition,
    budgets: &mut VertexBudgets,
    delta: f64,
) {
    let m = graph.edge_count();
    partition.heavy = EdgeSet::new(m);
    partition.semiheavy = EdgeSet::new(m);
    partition.cstar = EdgeSet::new(m);
    partition.direction = vec![None; m];
    partition.edge_type = vec![None; m];
    partition.delta = delta;
    budgets.q_c_minus.fill(0.0);
    budgets.qw_c_minus.fill(0.0);

    for id in partition.crucial.to_vec() {
        let e = graph.edge(id);
        let (qn_u, qn_v) = (budgets.q_n[e.u as usize], budgets.q_n[e.v as usize]);
        let (qwn_u, qwn_v) = (budgets.qw_n[e.u as usize], budgets.qw_n[e.v as usize]);
        if e.w >= (1.0 + delta) * (qwn_u + qwn_v) {
            partition.heavy.insert(id);
            continue;
        }
        // Higher-q_n endpoint first (ties by smaller vertex id).
        let (hi, lo, qn_hi, qn_lo, qwn_hi, qwn_lo) = if qn_u > qn_v || (qn_u == qn_v && e.u < e.v)
        {
            (e.u, e.v, qn_u, qn_v, qwn_u, qwn_v)
        } else {
            (e.v, e.u, qn_v, qn_u, qwn_v, qwn_u)
        };
        if e.w >= 2.0 * (1.0 + delta) * qwn_hi && qn_lo <= 1.0 - delta {
            partition.semiheavy.insert(id);
            continue;
        }
        partition.cstar.insert(id);
        let (ty, target) = if qwn_hi >= qwn_lo {
            (CstarType::Type1, hi)
        } else if e.w <= 2.0 * (1.0 + delta) * qwn_hi {
            (CstarType::Type2, hi)
        } else {
            (CstarType::Type3, lo)
        };
        let _ = qn_hi;
        partition.edge_type[id as usize] = Some(ty);
        partition.direction[id as usize] = Some(target);
        budgets.q_c_minus[target as usize] += stats.q[id as usize];
        budgets.qw_c_minus[target as usize] += stats.qw[id as usize];
    }
}

/// Fractional values over a graph's edge ids; zero outside `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalMatching {
    x: Vec<f64>,
    support: EdgeSet,
}

impl FractionalMatching {
    pub fn zero(edge_count: usize) -> Self {
        FractionalMatching {
            x: vec![0.0; edge_count],
            support: EdgeSet::new(edge_count),
        }
    }

    pub fn set(&mut self, id: u32, value: f64) {
        debug_assert!(value >= 0.0);
        self.x[id as usize] = value;
        if value > 0.0 {
            self.support.insert(id);
        } else {
            self.support.remove(id);
        }
    }

    pub fn scale(&mut self, id: u32, factor: f64) {
        let v = self.x[id as usize] * factor;
        self.set(id, v);
    }

    pub fn value(&self, id: u32) -> f64 {
        self.x[id as usize]
    }

    pub fn support(&self) -> &EdgeSet {
        &self.support
    }

    pub fn edge_count(&self) -> usize {
        self.x.len()
    }

    /// Load `x_v` at a vertex.
    pub fn vertex_load(&self, graph: &Graph, v: u32) -> f64 {
        graph
            .incident(v)
            .iter()
            .map(|&id| self.x[id as usize])
            .sum()
    }

    /// Union of two fractional matchings with disjoint supports.
    pub fn combine(&self, other: &FractionalMatching) -> FractionalMatching {
        debug_assert_eq!(self.x.len(), other.x.len());
        let mut out = self.clone();
        for id in other.support.iter() {
            debug_assert_eq!(self.x[id as usize], 0.0, "supports must be disjoint");
            out.set(id, other.x[id as usize]);
        }
        out
    }

    /// Text form: one `edge_id x_e` line per support edge, ascending.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for id in self.support.iter() {
            out.push_str(&format!("{} {}\n", id, self.x[id as usize]));
        }
        out
    }

    pub fn from_text(edge_count: usize, text: &str) -> Result<Self, String> {
        let mut fm = FractionalMatching::zero(edge_count);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let id: u32 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("line {}: bad edge id", i + 1))?;
            let x: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("line {}: bad value", i + 1))?;
            fm.set(id, x);
        }
        Ok(fm)
    }
}

/// Total weight `sum x_e w_e`.
pub fn fractional_weight(graph: &Graph, x: &FractionalMatching) -> f64 {
    x.support()
        .iter()
        .map(|id| x.value(id) * graph.weight(id))
        .sum()
}

/// Fractional matching on realized sampled non-crucial edges.
///
/// Step 1 sets `x~_e = min(f_e/p, 2 tau/p)` on the support; step 2 computes
/// per-edge scaling factors from the per-vertex loads of step 1; step 3
/// applies them. The output deterministically satisfies: support inside
/// `S_p cap N`, `x_e <= 2 tau / p`, and `x_v <= max(q^N_v, eps)` at every
/// vertex.
pub fn procedure_noncrucial(
    graph: &Graph,
    qs: &QuerySet,
    realized: &EdgeSet,
    partition: &EdgePartition,
    budgets: &VertexBudgets,
    epsilon: f64,
    tau: f64,
) -> FractionalMatching {
    let p = graph.p();
    let cap = 2.0 * tau / p;
    let mut support = qs.edges.clone();
    support.intersect_with(realized);
    support.intersect_with(&partition.noncrucial);

    let mut tilde = FractionalMatching::zero(graph.edge_count());
    let mut load = vec![0.0f64; graph.vertex_count()];
    for id in support.iter() {
        let value = (qs.f[id as usize] / p).min(cap);
        tilde.set(id, value);
        let e = graph.edge(id);
        load[e.u as usize] += value;
        load[e.v as usize] += value;
    }

    // Per-edge factor = min over both endpoints of budget/load; equivalent
    // to the vertex loop with running minima since each edge is touched once
    // per endpoint and the loads are fixed at their step-1 values.
    let mut out = FractionalMatching::zero(graph.edge_count());
    for id in support.iter() {
        let e = graph.edge(id);
        let mut s = 1.0f64;
        for v in [e.u, e.v] {
            let l = load[v as usize];
            if l > 0.0 {
                s = s.min(budgets.q_n[v as usize].max(epsilon) / l);
            }
        }
        out.set(id, tilde.value(id) * s);
    }
    out
}

/// Draw the crucial part of the omniscient optimum conditioned on the
/// realized sampled crucial edges `crucial_realization` (a subset of
/// `S cap C`). Implemented by conditional simulation: non-crucial edges and
/// unsampled crucial edges are re-drawn at probability p, the given crucial
/// realization is overlaid, and the deterministic optimum is intersected
/// back with it.
pub fn sample_crucial_matching(
    graph: &Graph,
    qs: &QuerySet,
    partition: &EdgePartition,
    crucial_realization: &EdgeSet,
    solver: &mut MatchingSolver,
    rng: &StreamRng,
    trial: u64,
) -> Matching {
    sample_crucial_matching_with(
        graph,
        qs,
        partition,
        crucial_realization,
        solver,
        rng,
        trial,
        TieBreak::CanonicalLex,
    )
}

/// [`sample_crucial_matching`] under an explicit tie-break rule; the rule
/// must match the one used to measure the statistics the partition is built
/// from.
#[allow(clippy::too_many_arguments)]
pub fn sample_crucial_matching_with(
    graph: &Graph,
    qs: &QuerySet,
    partition: &EdgePartition,
    crucial_realization: &EdgeSet,
    solver: &mut MatchingSolver,
    rng: &StreamRng,
    trial: u64,
    tie: TieBreak,
) -> Matching {
    debug_assert!(crucial_realization.is_subset_of(&partition.crucial));
    debug_assert!(crucial_realization.is_subset_of(&qs.edges));
    let marginalized: Vec<u32> = (0..graph.edge_count() as u32)
        .filter(|&id| {
            partition.noncrucial.contains(id)
                || (partition.crucial.contains(id) && !qs.edges.contains(id))
        })
        .collect();
    let mut active = sample_id_slice(graph.p(), graph.edge_count(), &marginalized, rng, trial);
    active.union_with(crucial_realization);
    let optimum = solver.solve_with(graph, &active, tie);
    let ids: Vec<u32> = optimum
        .edge_ids
        .iter()
        .copied()
        .filter(|&id| crucial_realization.contains(id))
        .collect();
    let weight = graph.matching_weight(&ids);
    Matching {
        edge_ids: ids,
        weight,
    }
}

/// Unweighted crucial values: each matched crucial edge receives
/// `(1 - eps) * min(1 - q^N_u, 1 - q^N_v)`, the spare capacity of its more
/// loaded endpoint.
pub fn procedure_crucial_unweighted(
    graph: &Graph,
    mu: &Matching,
    budgets: &VertexBudgets,
    epsilon: f64,
) -> FractionalMatching {
    let mut out = FractionalMatching::zero(graph.edge_count());
    for &id in &mu.edge_ids {
        let e = graph.edge(id);
        let spare = (1.0 - budgets.q_n[e.u as usize])
            .min(1.0 - budgets.q_n[e.v as usize])
            .max(0.0);
        out.set(id, (1.0 - epsilon) * spare);
    }
    out
}

/// Maximizer of
/// `min(q^N_v, 1-a)/q^N_v * qw^N_v + min(q^N_u, 1-a)/q^N_u * qw^N_u + a w_e`
/// over `a` in [0, 1]. The objective is piecewise linear with breakpoints at
/// `1 - q^N`, so evaluating the breakpoints suffices; ties break toward
/// larger `a`. Endpoints with zero non-crucial budget contribute nothing.
fn alpha_star(w_e: f64, qn_u: f64, qwn_u: f64, qn_v: f64, qwn_v: f64) -> f64 {
    let term = |qn: f64, qwn: f64, alpha: f64| -> f64 {
        if qn <= 0.0 {
            0.0
        } else {
            (qn.min(1.0 - alpha) / qn) * qwn
        }
    };
    let objective =
        |alpha: f64| term(qn_u, qwn_u, alpha) + term(qn_v, qwn_v, alpha) + alpha * w_e;
    let mut candidates = vec![0.0, 1.0];
    for qn in [qn_u, qn_v] {
        let bp = 1.0 - qn;
        if bp > 0.0 && bp < 1.0 {
            candidates.push(bp);
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = 0.0;
    let mut best_val = f64::NEG_INFINITY;
    for &a in &candidates {
        let val = objective(a);
        if val >= best_val {
            best_val = val;
            best = a;
        }
    }
    best
}

/// Weighted crucial procedure: each matched crucial edge takes
/// `(1 - eps) * alpha*`, the combined fractional matching is formed with the
/// given non-crucial values, and every overloaded vertex scales its incident
/// non-crucial values down to unit load (largest factor in [0, 1], running
/// minimum per edge). Returns the combined fractional matching.
pub fn procedure_crucial_weighted(
    graph: &Graph,
    mu: &Matching,
    budgets: &VertexBudgets,
    x_noncrucial: &FractionalMatching,
    epsilon: f64,
) -> FractionalMatching {
    let n = graph.vertex_count();
    let mut crucial_load = vec![0.0f64; n];
    let mut x_crucial = FractionalMatching::zero(graph.edge_count());
    for &id in &mu.edge_ids {
        let e = graph.edge(id);
        let a = alpha_star(
            e.w,
            budgets.q_n[e.u as usize],
            budgets.qw_n[e.u as usize],
            budgets.q_n[e.v as usize],
            budgets.qw_n[e.v as usize],
        );
        let value = (1.0 - epsilon) * a;
        x_crucial.set(id, value);
        crucial_load[e.u as usize] += value;
        crucial_load[e.v as usize] += value;
    }

    let mut noncrucial_load = vec![0.0f64; n];
    for id in x_noncrucial.support().iter() {
        let e = graph.edge(id);
        noncrucial_load[e.u as usize] += x_noncrucial.value(id);
        noncrucial_load[e.v as usize] += x_noncrucial.value(id);
    }

    let factor = |v: usize| -> f64 {
        let total = crucial_load[v] + noncrucial_load[v];
        if total <= 1.0 || noncrucial_load[v] <= 0.0 {
            1.0
        } else {
            ((1.0 - crucial_load[v]) / noncrucial_load[v]).clamp(0.0, 1.0)
        }
    };

    let mut out = x_crucial;
    for id in x_noncrucial.support().iter() {
        let e = graph.edge(id);
        let s = factor(e.u as usize).min(factor(e.v as usize));
        out.set(id, x_noncrucial.value(id) * s);
    }
    out
}

/// Vertices with load above 1 and negative entries. Empty report = valid.
#[derive(Debug, Clone, Default)]
pub struct ValidityReport {
    pub vertex_violations: Vec<(u32, f64)>,
    pub negative_edges: Vec<(u32, f64)>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.vertex_violations.is_empty() && self.negative_edges.is_empty()
    }
}

pub const VALIDITY_SLACK: f64 = 1e-12;

pub fn check_fractional_validity(graph: &Graph, x: &FractionalMatching) -> ValidityReport {
    let mut report = ValidityReport::default();
    let mut load = vec![0.0f64; graph.vertex_count()];
    for id in x.support().iter() {
        let v = x.value(id);
        if v < 0.0 {
            report.negative_edges.push((id, v));
        }
        let e = graph.edge(id);
        load[e.u as usize] += v;
        load[e.v as usize] += v;
    }
    for (v, &l) in load.iter().enumerate() {
        if l > 1.0 + VALIDITY_SLACK {
            report.vertex_violations.push((v as u32, l));
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlossomBound {
    /// `x(U) <= floor(|U|/2)`.
    Standard,
    /// `x(U) <= eps * floor(|U|/2)`, the tightened bound the non-crucial
    /// construction satisfies.
    Tightened(f64),
}

#[derive(Debug, Clone, Default)]
pub struct BlossomReport {
    /// Violating sets with their load and bound.
    pub violations: Vec<(Vec<u32>, f64, f64)>,
}

impl BlossomReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const BLOSSOM_MAX_SET_SIZE: usize = 9;
pub const BLOSSOM_MAX_SUPPORT: usize = 24;

/// Exhaustive blossom-inequality check over all odd vertex subsets of size
/// at most `max_set_size` among the vertices touched by the support.
pub fn check_blossom_inequalities(
    graph: &Graph,
    x: &FractionalMatching,
    max_set_size: usize,
    bound: BlossomBound,
) -> Result<BlossomReport, AnalysisError> {
    if max_set_size > BLOSSOM_MAX_SET_SIZE {
        return Err(AnalysisError::SetSizeTooLarge {
            got: max_set_size,
            max: BLOSSOM_MAX_SET_SIZE,
        });
    }
    let mut verts: Vec<u32> = Vec::new();
    for id in x.support().iter() {
        let e = graph.edge(id);
        verts.push(e.u);
        verts.push(e.v);
    }
    verts.sort_unstable();
    verts.dedup();
    if verts.len() > BLOSSOM_MAX_SUPPORT {
        return Err(AnalysisError::SupportTooLarge {
            got: verts.len(),
            max: BLOSSOM_MAX_SUPPORT,
        });
    }
    let index_of = |v: u32| verts.binary_search(&v).unwrap() as u32;
    let support_edges: Vec<(u32, u32, f64)> = x
        .support()
        .iter()
        .map(|id| {
            let e = graph.edge(id);
            (index_of(e.u), index_of(e.v), x.value(id))
        })
        .collect();

    let mut report = BlossomReport::default();
    let k = verts.len();
    let mut members = Vec::with_capacity(max_set_size);
    // Enumerate subsets of each odd size >= 3 (singletons have no edges).
    let mut size = 3;
    while size <= max_set_size && size <= k {
        enumerate_subsets(k, size, 0, &mut members, &mut |set: &[usize]| {
            let mask: u32 = set.iter().fold(0, |m, &i| m | 1 << i);
            let load: f64 = support_edges
                .iter()
                .filter(|&&(u, v, _)| mask >> u & 1 == 1 && mask >> v & 1 == 1)
                .map(|&(_, _, x)| x)
                .sum();
            let cap = (size / 2) as f64;
            let limit = match bound {
                BlossomBound::Standard => cap,
                BlossomBound::Tightened(eps) => eps * cap,
            };
            if load > limit + VALIDITY_SLACK {
                report
                    .violations
                    .push((set.iter().map(|&i| verts[i]).collect(), load, limit));
            }
        });
        size += 2;
    }
    Ok(report)
}

fn enumerate_subsets(
    k: usize,
    size: usize,
    start: usize,
    members: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if members.len() == size {
        visit(members);
        return;
    }
    let remaining = size - members.len();
    for i in start..=k.saturating_sub(remaining) {
        members.push(i);
        enumerate_subsets(k, size, i + 1, members, visit);
        members.pop();
    }
}

/// Value of `sum a_i b_i / sum (a_i + b_i / 2)`; `None` when the denominator
/// vanishes.
pub fn mathratio_value(pairs: &[(f64, f64)]) -> Option<f64> {
    let num: f64 = pairs.iter().map(|&(a, b)| a * b).sum();
    let den: f64 = pairs.iter().map(|&(a, b)| a + b / 2.0).sum();
    (den > 0.0).then_some(num / den)
}

/// The scalar bound `6 - 4 sqrt(2)` on [`mathratio_value`] under
/// `a_i, b_i >= 0`, `a_i + b_i <= 1`.
pub fn mathratio_bound() -> f64 {
    6.0 - 4.0 * std::f64::consts::SQRT_2
}

/// Randomized verification of the ratio bound: random feasible tuples for
/// n in 1..=8 plus a deterministic boundary grid and the analytic extremal
/// point. Returns the maximum observed ratio.
pub fn verify_mathratio(samples: u64, seed: u64) -> f64 {
    let rng = StreamRng::new(seed, crate::rng::domains::RATIO_TUPLES);
    let mut max_ratio = f64::NEG_INFINITY;
    let mut consider = |pairs: &[(f64, f64)]| {
        if let Some(r) = mathratio_value(pairs) {
            if r > max_ratio {
                max_ratio = r;
            }
        }
    };

    // Deterministic grid on the n = 1 boundary a + b = 1 plus the extremal
    // point (sqrt(2) - 1, 2 - sqrt(2)).
    let grid = 2000;
    for i in 0..=grid {
        let a = i as f64 / grid as f64;
        consider(&[(a, 1.0 - a)]);
    }
    let s = std::f64::consts::SQRT_2;
    consider(&[(s - 1.0, 2.0 - s)]);

    let mut pairs = Vec::with_capacity(8);
    for sample in 0..samples {
        let n = 1 + (rng.value(sample, 0) % 8) as usize;
        pairs.clear();
        for i in 0..n {
            let a = rng.unit(sample, 2 * i as u64 + 1);
            let rest = 1.0 - a;
            // Half the tuples sit on the boundary a + b = 1 where the
            // maximum lives.
            let b = if rng.value(sample, 2 * i as u64 + 2) & 1 == 0 {
                rest
            } else {
                rest * rng.unit(sample, 2 * i as u64 + 2)
            };
            pairs.push((a, b));
        }
        consider(&pairs);
    }
    max_ratio
}
