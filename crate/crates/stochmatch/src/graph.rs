//! Weighted undirected graphs with a global realization probability, plus the
//! instance generators used throughout the experiments.
//!
//! Edges are canonicalized at construction: endpoints ordered `u < v`, the
//! edge list sorted by `(u, v)`, and edge ids assigned densely in that order.
//! Every downstream per-edge table is a plain array indexed by edge id.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::rng::{self, domains, StreamRng};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("non-positive weight {w} on edge ({u}, {v})")]
    NonPositiveWeight { u: u32, v: u32, w: f64 },
    #[error("realization probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("non-finite weight on edge ({0}, {1})")]
    NonFiniteWeight(u32, u32),
    #[error("random graph needs n >= 2 and 0 < density <= 1 (n = {n}, density = {density})")]
    BadRandomParams { n: usize, density: f64 },
    #[error("uniform weight range [{lo}, {hi}] must satisfy 0 < lo <= hi")]
    BadWeightRange { lo: f64, hi: f64 },
    #[error(
        "star with {k} leaves cannot reach the target probabilities at p = {p} \
         (non-crucial mass {mass:.4} < 0.9)"
    )]
    InfeasibleStar { k: usize, p: f64, mass: f64 },
}

#[derive(Debug, Error)]
pub enum GraphIoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: invalid graph: {source}")]
    Invalid { line: usize, source: GraphError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One undirected edge; `u < v` after canonicalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub w: f64,
}

/// Immutable weighted graph with realization probability `p`. Shareable
/// across worker threads.
#[derive(Debug, Clone)]
pub struct Graph {
    n: u32,
    p: f64,
    edges: Vec<Edge>,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Canonicalize and validate an edge list. Vertex count is
    /// `max endpoint + 1`.
    pub fn build(edge_list: &[(u32, u32, f64)], p: f64) -> Result<Graph, GraphError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(GraphError::ProbabilityOutOfRange(p));
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(a, b, w) in edge_list {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !w.is_finite() {
                return Err(GraphError::NonFiniteWeight(a.min(b), a.max(b)));
            }
            if w <= 0.0 {
                return Err(GraphError::NonPositiveWeight {
                    u: a.min(b),
                    v: a.max(b),
                    w,
                });
            }
            edges.push(Edge {
                u: a.min(b),
                v: a.max(b),
                w,
            });
        }
        edges.sort_by_key(|x| (x.u, x.v));
        for pair in edges.windows(2) {
            if (pair[0].u, pair[0].v) == (pair[1].u, pair[1].v) {
                return Err(GraphError::DuplicateEdge(pair[0].u, pair[0].v));
            }
        }
        let n = edges.iter().map(|e| e.v + 1).max().unwrap_or(0);
        let mut adj = vec![Vec::new(); n as usize];
        for (id, e) in edges.iter().enumerate() {
            adj[e.u as usize].push(id as u32);
            adj[e.v as usize].push(id as u32);
        }
        Ok(Graph { n, p, edges, adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.n as usize
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: u32) -> Edge {
        self.edges[id as usize]
    }

    pub fn weight(&self, id: u32) -> f64 {
        self.edges[id as usize].w
    }

    /// Edge ids incident to `v`.
    pub fn incident(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    /// Largest edge weight, 0 for an empty graph.
    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).fold(0.0, f64::max)
    }

    /// Canonical matching weight: member weights summed in ascending edge id
    /// order. All weight reporting goes through this so that independently
    /// computed optima of the same edge set compare bit-equal.
    pub fn matching_weight(&self, ids: &[u32]) -> f64 {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        ids.iter().map(|&id| self.edges[id as usize].w).sum()
    }

    /// Whether `ids` (ascending) form a matching.
    pub fn is_matching(&self, ids: &[u32]) -> bool {
        let mut used = vec![false; self.n as usize];
        for &id in ids {
            let e = self.edges[id as usize];
            if used[e.u as usize] || used[e.v as usize] {
                return false;
            }
            used[e.u as usize] = true;
            used[e.v as usize] = true;
        }
        true
    }

    /// Text format: first line `n m p`, then one `u v w` line per edge.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut buf = String::new();
        writeln!(buf, "{} {} {}", self.n, self.edges.len(), self.p).unwrap();
        for e in &self.edges {
            writeln!(buf, "{} {} {}", e.u, e.v, e.w).unwrap();
        }
        out.write_all(buf.as_bytes())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Graph, GraphIoError> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| GraphIoError::Parse {
                line: 1,
                msg: "missing 'n m p' header".into(),
            })?
            .map_err(GraphIoError::Io)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(GraphIoError::Parse {
                line: 1,
                msg: format!("expected 'n m p', got {:?}", header),
            });
        }
        let parse = |s: &str, what: &str, line: usize| -> Result<f64, GraphIoError> {
            s.parse::<f64>().map_err(|_| GraphIoError::Parse {
                line,
                msg: format!("cannot parse {what} from {s:?}"),
            })
        };
        let n = parse(fields[0], "vertex count", 1)? as u32;
        let m = parse(fields[1], "edge count", 1)? as usize;
        let p = parse(fields[2], "probability", 1)?;
        let mut edge_list = Vec::with_capacity(m);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(GraphIoError::Io)?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(GraphIoError::Parse {
                    line: lineno,
                    msg: format!("expected 'u v w', got {:?}", line),
                });
            }
            let u = parse(fields[0], "endpoint", lineno)? as u32;
            let v = parse(fields[1], "endpoint", lineno)? as u32;
            let w = parse(fields[2], "weight", lineno)?;
            edge_list.push((u, v, w));
        }
        if edge_list.len() != m {
            return Err(GraphIoError::Parse {
                line: edge_list.len() + 1,
                msg: format!("header says {m} edges, file has {}", edge_list.len()),
            });
        }
        let g = Graph::build(&edge_list, p).map_err(|source| GraphIoError::Invalid {
            line: 1,
            source,
        })?;
        if g.vertex_count() > n as usize {
            return Err(GraphIoError::Parse {
                line: 1,
                msg: format!(
                    "header says {n} vertices but edges reference vertex {}",
                    g.vertex_count() - 1
                ),
            });
        }
        // Header n wins so isolated trailing vertices survive a round-trip.
        Ok(Graph {
            n: n.max(g.n),
            ..g
        })
    }

    pub fn write_to_path(&self, path: &Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn read_from_path(path: &Path) -> Result<Graph, GraphIoError> {
        let file = std::fs::File::open(path)?;
        Graph::read_from(std::io::BufReader::new(file))
    }
}

/// A subset of a graph's edge ids, stored as a bitmask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    blocks: Vec<u64>,
    capacity: usize,
}

impl EdgeSet {
    pub fn new(capacity: usize) -> Self {
        EdgeSet {
            blocks: vec![0; capacity.div_ceil(64)],
            capacity,
        }
    }

    pub fn full(capacity: usize) -> Self {
        let mut s = EdgeSet::new(capacity);
        for id in 0..capacity {
            s.insert(id as u32);
        }
        s
    }

    pub fn from_ids(capacity: usize, ids: &[u32]) -> Self {
        let mut s = EdgeSet::new(capacity);
        for &id in ids {
            s.insert(id);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn insert(&mut self, id: u32) {
        debug_assert!((id as usize) < self.capacity);
        self.blocks[id as usize / 64] |= 1u64 << (id % 64);
    }

    #[inline]
    pub fn remove(&mut self, id: u32) {
        self.blocks[id as usize / 64] &= !(1u64 << (id % 64));
    }

    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        (self.blocks[id as usize / 64] >> (id % 64)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn clear(&mut self) {
        self.blocks.fill(0);
    }

    pub fn union_with(&mut self, other: &EdgeSet) {
        debug_assert_eq!(self.capacity, other.capacity);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &EdgeSet) {
        debug_assert_eq!(self.capacity, other.capacity);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= b;
        }
    }

    pub fn is_subset_of(&self, other: &EdgeSet) -> bool {
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & !b == 0)
    }

    /// Ascending iterator over member ids.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let mut b = block;
            std::iter::from_fn(move || {
                if b == 0 {
                    None
                } else {
                    let t = b.trailing_zeros();
                    b &= b - 1;
                    Some(bi as u32 * 64 + t)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    /// Content hash, used to key realization-dependent tie-breaking.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64 ^ (self.capacity as u64);
        for &block in &self.blocks {
            h ^= block;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
            h ^= h >> 32;
        }
        h
    }
}

/// Six vertex groups of size `n_group`: complete bipartite graphs on
/// (A, B1), (A, B2), (D, C1), (D, C2) and perfect matchings on (B1, C1),
/// (B2, C2). Unit weights, p = 1/2. The iterated-matching baseline can be
/// driven into querying only two edges per B1/C1 vertex on this family while
/// the realization-sampling algorithm spreads its queries.
pub fn gen_blum_bad_instance(n_group: usize) -> Graph {
    assert!(n_group >= 1);
    let n = n_group as u32;
    let a = |i: u32| i;
    let b1 = |i: u32| n + i;
    let b2 = |i: u32| 2 * n + i;
    let c1 = |i: u32| 3 * n + i;
    let c2 = |i: u32| 4 * n + i;
    let d = |i: u32| 5 * n + i;
    let mut edges = Vec::with_capacity(4 * n_group * n_group + 2 * n_group);
    for i in 0..n {
        for j in 0..n {
            edges.push((a(i), b1(j), 1.0));
            edges.push((a(i), b2(j), 1.0));
            edges.push((d(i), c1(j), 1.0));
            edges.push((d(i), c2(j), 1.0));
        }
        edges.push((b1(i), c1(i), 1.0));
        edges.push((b2(i), c2(i), 1.0));
    }
    Graph::build(&edges, 0.5).expect("generator produces a valid graph")
}

/// Four vertex groups of size `l`: perfect matchings on (A, B) and (A', B'),
/// a complete bipartite graph on (B, B'), unit weights, p = sqrt(2) - 1.
/// The fractional construction of the unweighted analysis is tight on this
/// family.
pub fn gen_tightness_instance(l: usize) -> Graph {
    assert!(l >= 1);
    let l = l as u32;
    let a = |i: u32| i;
    let b = |i: u32| l + i;
    let bp = |i: u32| 2 * l + i;
    let ap = |i: u32| 3 * l + i;
    let mut edges = Vec::with_capacity((l * l + 2 * l) as usize);
    for i in 0..l {
        edges.push((a(i), b(i), 1.0));
        edges.push((bp(i), ap(i), 1.0));
        for j in 0..l {
            edges.push((b(i), bp(j), 1.0));
        }
    }
    let p = std::f64::consts::SQRT_2 - 1.0;
    Graph::build(&edges, p).expect("generator produces a valid graph")
}

pub const STAR_DEFAULT_LEAVES: usize = 8000;
pub const STAR_DEFAULT_WEIGHT: f64 = 999.0;
pub const STAR_DEFAULT_Q_TARGET: f64 = 0.001;

/// Star with one heavy edge (weight `w_crucial`) and `k` unit leaf edges,
/// all sharing vertex 0. The heavy edge wins every realization it appears
/// in, so its matching probability equals p; we therefore set p = `q_target`
/// and rely on `k` being large enough that some leaf is realized almost
/// whenever the heavy edge is not, putting the total leaf matching
/// probability near `1 - p`.
pub fn gen_weighted_star(k: usize, w_crucial: f64, q_target: f64) -> Result<Graph, GraphError> {
    if !(q_target > 0.0 && q_target < 1.0) {
        return Err(GraphError::ProbabilityOutOfRange(q_target));
    }
    let p = q_target;
    if k >= 1 {
        let mass = 1.0 - (1.0 - p).powi(k as i32);
        if mass < 0.9 {
            return Err(GraphError::InfeasibleStar { k, p, mass });
        }
    }
    let mut edges = Vec::with_capacity(k + 1);
    edges.push((0u32, 1u32, w_crucial));
    for j in 0..k as u32 {
        edges.push((0, 2 + j, 1.0));
    }
    Graph::build(&edges, p)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WeightMode {
    Unit,
    Uniform { lo: f64, hi: f64 },
}

/// Erdos-Renyi style instance: each vertex pair becomes an edge with
/// probability `density`; uniform weights are quantized to multiples of
/// 2^-20 so that weight sums stay exact in f64 arithmetic. Deterministic in
/// `seed`.
pub fn gen_random_graph(
    n: usize,
    density: f64,
    weight_mode: WeightMode,
    p: f64,
    seed: u64,
) -> Result<Graph, GraphError> {
    if n < 2 || !(density > 0.0 && density <= 1.0) {
        return Err(GraphError::BadRandomParams { n, density });
    }
    if let WeightMode::Uniform { lo, hi } = weight_mode {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(GraphError::BadWeightRange { lo, hi });
        }
    }
    let structure = StreamRng::new(seed, domains::STRUCTURE);
    let weights = StreamRng::new(seed, domains::WEIGHTS);
    let dens_threshold = rng::probability_threshold(density);
    let quantum = (1u64 << 20) as f64;
    let mut edges = Vec::new();
    let mut pair = 0u64;
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if structure.bernoulli(dens_threshold, pair, 0) {
                let w = match weight_mode {
                    WeightMode::Unit => 1.0,
                    WeightMode::Uniform { lo, hi } => {
                        let raw = lo + (hi - lo) * weights.unit(pair, 0);
                        ((raw * quantum).round() / quantum).max(lo)
                    }
                };
                edges.push((u, v, w));
            }
            pair += 1;
        }
    }
    let g = Graph::build(&edges, p)?;
    // Keep isolated trailing vertices so vertex_count == n.
    Ok(Graph {
        n: n as u32,
        ..g
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_smallest_graph() {
        let g = Graph::build(&[(0, 1, 1.0)], 0.5).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.vertex_count(), 2);
    }

    #[test]
    fn build_rejects_reversed_duplicate() {
        let err = Graph::build(&[(0, 1, 1.0), (1, 0, 2.0)], 0.5).unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge(0, 1));
    }

    #[test]
    fn build_rejects_self_loop() {
        let err = Graph::build(&[(0, 0, 1.0)], 0.5).unwrap_err();
        assert_eq!(err, GraphError::SelfLoop(0));
    }

    #[test]
    fn build_rejects_bad_weight_and_p() {
        assert!(matches!(
            Graph::build(&[(0, 1, 0.0)], 0.5),
            Err(GraphError::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            Graph::build(&[(0, 1, 1.0)], 1.0),
            Err(GraphError::ProbabilityOutOfRange(_))
        ));
        assert!(matches!(
            Graph::build(&[(0, 1, 1.0)], 0.0),
            Err(GraphError::ProbabilityOutOfRange(_))
        ));
    }

    #[test]
    fn canonical_edge_order_is_stable() {
        let g = Graph::build(&[(3, 2, 1.0), (1, 0, 2.0), (2, 0, 3.0)], 0.5).unwrap();
        let pairs: Vec<(u32, u32)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (2, 3)]);
    }

    #[test]
    fn blum_instance_counts() {
        let g1 = gen_blum_bad_instance(1);
        assert_eq!(g1.vertex_count(), 6);
        assert_eq!(g1.edge_count(), 6);
        let g10 = gen_blum_bad_instance(10);
        assert_eq!(g10.vertex_count(), 60);
        assert_eq!(g10.edge_count(), 420);
        assert_eq!(g10.p(), 0.5);
    }

    #[test]
    fn tightness_instance_counts_and_p() {
        let g1 = gen_tightness_instance(1);
        assert_eq!(g1.vertex_count(), 4);
        assert_eq!(g1.edge_count(), 3);
        let g2 = gen_tightness_instance(2);
        assert_eq!(g2.edge_count(), 8);
        // p = sqrt(2) - 1 to full f64 precision.
        assert!((g1.p() - 0.414_213_562_373_095_05).abs() < 1e-15);
    }

    #[test]
    fn weighted_star_shapes() {
        let lone = gen_weighted_star(0, 999.0, 0.001).unwrap();
        assert_eq!(lone.edge_count(), 1);
        let g = gen_weighted_star(8000, 999.0, 0.001).unwrap();
        assert_eq!(g.edge_count(), 8001);
        assert_eq!(g.p(), 0.001);
        // Heavy edge is canonical id 0 since it is (0, 1).
        assert_eq!(g.edge(0).w, 999.0);
        assert!(matches!(
            gen_weighted_star(10, 999.0, 0.001),
            Err(GraphError::InfeasibleStar { .. })
        ));
    }

    #[test]
    fn random_graph_is_deterministic() {
        let a = gen_random_graph(8, 0.5, WeightMode::Unit, 0.5, 7).unwrap();
        let b = gen_random_graph(8, 0.5, WeightMode::Unit, 0.5, 7).unwrap();
        assert_eq!(a.edge_count(), b.edge_count());
        assert_eq!(a.edges(), b.edges());
        let c = gen_random_graph(8, 0.5, WeightMode::Unit, 0.5, 8).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    // Golden capture for seed 7: the canonical structure of this instance is
    // frozen so accidental RNG changes surface immediately.
    #[test]
    fn random_graph_golden_seed7() {
        let g = gen_random_graph(8, 0.5, WeightMode::Unit, 0.5, 7).unwrap();
        assert_eq!(g.vertex_count(), 8);
        let pairs: Vec<(u32, u32)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(g.edge_count(), golden_seed7_pairs().len());
        assert_eq!(pairs, golden_seed7_pairs());
    }

    fn golden_seed7_pairs() -> Vec<(u32, u32)> {
        // Captured from the first implementation run; see test above.
        GOLDEN_SEED7.to_vec()
    }

    const GOLDEN_SEED7: &[(u32, u32)] = &include!("testdata/random_seed7.in");

    #[test]
    fn random_graph_single_pair() {
        let g = gen_random_graph(2, 1.0, WeightMode::Unit, 0.5, 1).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn uniform_weights_are_quantized_and_in_range() {
        let g =
            gen_random_graph(10, 0.8, WeightMode::Uniform { lo: 1.0, hi: 4.0 }, 0.5, 3).unwrap();
        for e in g.edges() {
            assert!(e.w >= 1.0 && e.w <= 4.0);
            let scaled = e.w * (1u64 << 20) as f64;
            assert_eq!(scaled, scaled.round());
        }
    }

    #[test]
    fn file_roundtrip() {
        let g = gen_random_graph(8, 0.5, WeightMode::Uniform { lo: 0.5, hi: 2.0 }, 0.25, 7)
            .unwrap();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        let h = Graph::read_from(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(g.edges(), h.edges());
        assert_eq!(g.p(), h.p());
        assert_eq!(g.vertex_count(), h.vertex_count());
    }

    #[test]
    fn malformed_header_names_line_one() {
        let err = Graph::read_from(std::io::Cursor::new(b"3 nope\n".as_slice())).unwrap_err();
        match err {
            GraphIoError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn edge_set_basics() {
        let mut s = EdgeSet::new(130);
        s.insert(0);
        s.insert(64);
        s.insert(129);
        assert_eq!(s.len(), 3);
        assert!(s.contains(64));
        assert!(!s.contains(63));
        assert_eq!(s.to_vec(), vec![0, 64, 129]);
        s.remove(64);
        assert_eq!(s.to_vec(), vec![0, 129]);
        assert!(s.is_subset_of(&EdgeSet::full(130)));
    }
}
