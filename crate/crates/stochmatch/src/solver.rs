//! Exact maximum-weight matching on general graphs.
//!
//! The algorithm is the O(n^3) primal-dual blossom method of Edmonds in the
//! formulation of Galil (ACM Computing Surveys, 1986), following the widely
//! used array-based implementation by Joris van Rantwijk. The solver is
//! deterministic: among equal-weight optima it returns the matching whose
//! sorted edge-id sequence is lexicographically smallest. This is achieved by
//! running the whole algorithm over two-component weights `(w, t)` compared
//! lexicographically, where `t` is an infinitesimal per-edge bonus `2^-(id+1)`
//! decreasing in the canonical edge id. No floating-point perturbation of the
//! primary weights takes place.
//!
//! The bonus component is exact f64 arithmetic for edge ids below roughly 50;
//! beyond that the bonus accumulates rounding and the tie-break degrades to
//! "deterministic, preferring small ids" instead of exactly lexicographic.
//! All oracle cross-checks in this crate run on graphs small enough for the
//! exact regime.

use thiserror::Error;

use crate::graph::{EdgeSet, Graph};

/// Sorted edge ids plus canonical weight (ascending-id sum).
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub edge_ids: Vec<u32>,
    pub weight: f64,
}

impl Matching {
    pub fn empty() -> Self {
        Matching {
            edge_ids: Vec::new(),
            weight: 0.0,
        }
    }

    pub fn contains(&self, id: u32) -> bool {
        self.edge_ids.binary_search(&id).is_ok()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("brute-force oracle limited to {max} active edges, got {got}")]
    TooManyEdges { got: usize, max: usize },
}

pub const BRUTE_FORCE_MAX_EDGES: usize = 24;

/// Two-component weight with lexicographic order (derive is field order).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Wt {
    w: f64,
    t: f64,
}

impl Wt {
    const ZERO: Wt = Wt { w: 0.0, t: 0.0 };

    #[inline]
    fn add(self, o: Wt) -> Wt {
        Wt {
            w: self.w + o.w,
            t: self.t + o.t,
        }
    }

    #[inline]
    fn sub(self, o: Wt) -> Wt {
        Wt {
            w: self.w - o.w,
            t: self.t - o.t,
        }
    }

    #[inline]
    fn double(self) -> Wt {
        Wt {
            w: 2.0 * self.w,
            t: 2.0 * self.t,
        }
    }

    #[inline]
    fn half(self) -> Wt {
        Wt {
            w: 0.5 * self.w,
            t: 0.5 * self.t,
        }
    }
}

/// Infinitesimal bonus for the canonical tie-break. Ids beyond the f64
/// subnormal range get bonus 0 and fall back to the solver's fixed scan
/// order, which is still deterministic.
#[inline]
fn tie_bonus(edge_id: u32) -> f64 {
    if edge_id >= 1073 {
        0.0
    } else {
        f64::powi(2.0, -(edge_id as i32) - 1)
    }
}

/// Tie-breaking rule among equal-weight optima.
///
/// `CanonicalLex` prefers the lexicographically smallest sorted edge-id set
/// and is the default contract of [`max_weight_matching`]. A fixed
/// preference order, however, correlates tie decisions across realizations,
/// which concentrates matching probabilities on low ids in highly symmetric
/// graphs. `RealizationKeyed` instead draws the infinitesimal per-edge
/// bonuses from a hash of the active edge set, so each realization breaks
/// ties by its own (deterministic, reproducible) preference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    CanonicalLex,
    RealizationKeyed,
}

/// Keyed bonus in [2^-32, 2^-31): far below any representable weight gap of
/// grid-weighted instances, far above f64 noise of unit-scale sums.
#[inline]
fn keyed_bonus(key: u64, edge_id: u32) -> f64 {
    let mut x = key ^ (u64::from(edge_id)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    let frac = (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (1.0 + frac) * f64::powi(2.0, -32)
}

const NONE: usize = usize::MAX;

const FREE: u8 = 0;
const LABEL_S: u8 = 1;
const LABEL_T: u8 = 2;
const MARK: u8 = 4;

/// Reusable solver. Carries scratch buffers, so create one per worker and
/// reuse it across calls; it holds no graph state between calls.
pub struct MatchingSolver {
    // Vertex compaction: global vertex -> local index, stamped by generation
    // so clears are O(touched).
    stamp: Vec<u32>,
    local_of: Vec<usize>,
    generation: u32,

    edges: Vec<(usize, usize, Wt)>, // local endpoints, doubled weight
    global_ids: Vec<u32>,
    globals: Vec<u32>, // local vertex -> global vertex

    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Vec<usize>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<Wt>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

impl Default for MatchingSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl MatchingSolver {
    pub fn new() -> Self {
        MatchingSolver {
            stamp: Vec::new(),
            local_of: Vec::new(),
            generation: 0,
            edges: Vec::new(),
            global_ids: Vec::new(),
            globals: Vec::new(),
            endpoint: Vec::new(),
            neighbend: Vec::new(),
            mate: Vec::new(),
            label: Vec::new(),
            labelend: Vec::new(),
            inblossom: Vec::new(),
            blossomparent: Vec::new(),
            blossomchilds: Vec::new(),
            blossombase: Vec::new(),
            blossomendps: Vec::new(),
            bestedge: Vec::new(),
            blossombestedges: Vec::new(),
            unusedblossoms: Vec::new(),
            dualvar: Vec::new(),
            allowedge: Vec::new(),
            queue: Vec::new(),
        }
    }

    /// Maximum-weight matching of the subgraph induced by `active`, with the
    /// canonical lexicographic tie-break.
    pub fn solve(&mut self, graph: &Graph, active: &EdgeSet) -> Matching {
        self.solve_with(graph, active, TieBreak::CanonicalLex)
    }

    /// Maximum-weight matching under an explicit tie-break rule.
    pub fn solve_with(&mut self, graph: &Graph, active: &EdgeSet, tie: TieBreak) -> Matching {
        debug_assert_eq!(active.capacity(), graph.edge_count());
        self.build_local(graph, active, tie);
        if self.edges.is_empty() {
            return Matching::empty();
        }
        self.run();
        let mut ids = Vec::new();
        for k in 0..self.edges.len() {
            let (i, j, _) = self.edges[k];
            if self.mate[i] == 2 * k + 1 {
                debug_assert_eq!(self.mate[j], 2 * k);
                ids.push(self.global_ids[k]);
            }
        }
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(graph.is_matching(&ids));
        let weight = graph.matching_weight(&ids);
        Matching {
            edge_ids: ids,
            weight,
        }
    }

    fn local_vertex(&mut self, global: u32) -> usize {
        let g = global as usize;
        if self.stamp[g] == self.generation {
            self.local_of[g]
        } else {
            self.stamp[g] = self.generation;
            let idx = self.globals.len();
            self.local_of[g] = idx;
            self.globals.push(global);
            idx
        }
    }

    fn build_local(&mut self, graph: &Graph, active: &EdgeSet, tie: TieBreak) {
        if self.stamp.len() < graph.vertex_count() {
            self.stamp.resize(graph.vertex_count(), 0);
            self.local_of.resize(graph.vertex_count(), 0);
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            // Stamp wrap: invalidate everything once.
            self.stamp.fill(u32::MAX);
            self.generation = 1;
        }
        let key = match tie {
            TieBreak::CanonicalLex => 0,
            TieBreak::RealizationKeyed => active.fingerprint(),
        };
        self.globals.clear();
        self.edges.clear();
        self.global_ids.clear();
        for id in active.iter() {
            let e = graph.edge(id);
            let i = self.local_vertex(e.u);
            let j = self.local_vertex(e.v);
            let bonus = match tie {
                TieBreak::CanonicalLex => tie_bonus(id),
                TieBreak::RealizationKeyed => keyed_bonus(key, id),
            };
            self.edges.push((i, j, Wt { w: e.w, t: bonus }.double()));
            self.global_ids.push(id);
        }
    }

    #[inline]
    fn slack(&self, k: usize) -> Wt {
        let (i, j, wt2) = self.edges[k];
        self.dualvar[i].add(self.dualvar[j]).sub(wt2)
    }

    fn blossom_leaves_into(&self, b: usize, out: &mut Vec<usize>) {
        let nvertex = self.mate.len();
        if b < nvertex {
            out.push(b);
        } else {
            for idx in 0..self.blossomchilds[b].len() {
                let t = self.blossomchilds[b][idx];
                self.blossom_leaves_into(t, out);
            }
        }
    }

    fn blossom_leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.blossom_leaves_into(b, &mut out);
        out
    }

    /// Label the top-level blossom containing `w` and record the endpoint
    /// through which it was reached.
    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == FREE && self.label[b] == FREE);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == LABEL_S {
            let leaves = self.blossom_leaves(b);
            self.queue.extend(leaves);
        } else if t == LABEL_T {
            let base = self.blossombase[b];
            debug_assert!(self.mate[base] != NONE);
            let mbase = self.mate[base];
            let ep = self.endpoint[mbase];
            self.assign_label(ep, LABEL_S, mbase ^ 1);
        }
    }

    /// Trace back from two S-vertices; return the base of a new blossom or
    /// NONE if the paths reach two distinct roots (an augmenting path).
    fn scan_blossom(&mut self, v: usize, w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        let mut v = v;
        let mut w = w;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & MARK != 0 {
                base = self.blossombase[b];
                break;
            }
            debug_assert_eq!(self.label[b], LABEL_S);
            path.push(b);
            self.label[b] = LABEL_S | MARK;
            debug_assert_eq!(self.labelend[b], self.mate[self.blossombase[b]]);
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                debug_assert_eq!(self.label[b], LABEL_T);
                debug_assert!(self.labelend[b] != NONE);
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = LABEL_S;
        }
        base
    }

    /// Fold the S-vertices on the v..base..w paths plus edge `k` into a new
    /// blossom labelled S with dual zero.
    fn add_blossom(&mut self, base: usize, k: usize) {
        let nvertex = self.mate.len();
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];

        let b = self.unusedblossoms.pop().expect("blossom pool exhausted");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;

        let mut childs = Vec::new();
        let mut endps = Vec::new();

        while bv != bb {
            self.blossomparent[bv] = b;
            childs.push(bv);
            endps.push(self.labelend[bv]);
            debug_assert!(
                self.label[bv] == LABEL_T
                    || (self.label[bv] == LABEL_S
                        && self.labelend[bv] == self.mate[self.blossombase[bv]])
            );
            debug_assert!(self.labelend[bv] != NONE);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        childs.push(bb);
        childs.reverse();
        endps.reverse();
        endps.push(2 * k);

        while bw != bb {
            self.blossomparent[bw] = b;
            childs.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            debug_assert!(
                self.label[bw] == LABEL_T
                    || (self.label[bw] == LABEL_S
                        && self.labelend[bw] == self.mate[self.blossombase[bw]])
            );
            debug_assert!(self.labelend[bw] != NONE);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }

        debug_assert_eq!(self.label[bb], LABEL_S);
        self.label[b] = LABEL_S;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = Wt::ZERO;
        self.blossomchilds[b] = childs;
        self.blossomendps[b] = endps;

        for v in self.blossom_leaves(b) {
            if self.label[self.inblossom[v]] == LABEL_T {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }

        // Merge least-slack edge lists of the children.
        let mut bestedgeto = vec![NONE; 2 * nvertex];
        for ci in 0..self.blossomchilds[b].len() {
            let bv = self.blossomchilds[b][ci];
            let nblists: Vec<Vec<usize>> = if self.blossombestedges[bv].is_empty() {
                self.blossom_leaves(bv)
                    .into_iter()
                    .map(|v| self.neighbend[v].iter().map(|p| p / 2).collect())
                    .collect()
            } else {
                vec![self.blossombestedges[bv].clone()]
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == LABEL_S
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            self.blossombestedges[bv].clear();
            self.bestedge[bv] = NONE;
        }
        let merged: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        self.bestedge[b] = NONE;
        for &k in &merged {
            if self.bestedge[b] == NONE || self.slack(k) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = k;
            }
        }
        self.blossombestedges[b] = merged;
    }

    /// Undo a blossom. During a stage (endstage = false) the sub-blossoms of
    /// a T-blossom are relabelled along the alternating path.
    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let nvertex = self.mate.len();
        for s in self.blossomchilds[b].clone() {
            self.blossomparent[s] = NONE;
            if s < nvertex {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == Wt::ZERO {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.blossom_leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }

        if !endstage && self.label[b] == LABEL_T {
            debug_assert!(self.labelend[b] != NONE);
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let childs = self.blossomchilds[b].clone();
            let endps = self.blossomendps[b].clone();
            let len = childs.len() as i64;
            let pos = childs.iter().position(|&c| c == entrychild).unwrap() as i64;
            let (mut j, jstep, endptrick): (i64, i64, usize) = if pos & 1 != 0 {
                (pos - len, 1, 0)
            } else {
                (pos, -1, 1)
            };
            let idx = |list: &[usize], j: i64| -> usize {
                let n = list.len() as i64;
                let k = if j >= 0 { j } else { j + n };
                list[k as usize]
            };

            let mut p = self.labelend[b];
            while j != 0 {
                // Relabel the T-sub-blossom.
                self.label[self.endpoint[p ^ 1]] = FREE;
                self.label[self.endpoint[idx(&endps, j - endptrick as i64) ^ endptrick ^ 1]] =
                    FREE;
                let ep = self.endpoint[p ^ 1];
                self.assign_label(ep, LABEL_T, p);
                // Step past the next S-sub-blossom.
                self.allowedge[idx(&endps, j - endptrick as i64) / 2] = true;
                j += jstep;
                p = idx(&endps, j - endptrick as i64) ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }

            // The base sub-blossom keeps label T without stepping to its mate.
            let bv = idx(&childs, j);
            self.label[self.endpoint[p ^ 1]] = LABEL_T;
            self.label[bv] = LABEL_T;
            self.labelend[self.endpoint[p ^ 1]] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;

            j += jstep;
            while idx(&childs, j) != entrychild {
                let bv = idx(&childs, j);
                if self.label[bv] == LABEL_S {
                    j += jstep;
                    continue;
                }
                let mut v = NONE;
                for leaf in self.blossom_leaves(bv) {
                    v = leaf;
                    if self.label[v] != FREE {
                        break;
                    }
                }
                if v != NONE && self.label[v] != FREE {
                    debug_assert_eq!(self.label[v], LABEL_T);
                    debug_assert_eq!(self.inblossom[v], bv);
                    self.label[v] = FREE;
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = FREE;
                    let lblend = self.labelend[v];
                    self.assign_label(v, LABEL_T, lblend);
                }
                j += jstep;
            }
        }

        self.label[b] = FREE;
        self.labelend[b] = NONE;
        self.blossombase[b] = NONE;
        self.bestedge[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombestedges[b].clear();
        self.unusedblossoms.push(b);
    }

    /// Swap matched edges along the path from `v` to the base of blossom `b`.
    fn augment_blossom(&mut self, b: usize, v: usize) {
        let nvertex = self.mate.len();
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= nvertex {
            self.augment_blossom(t, v);
        }
        let childs = self.blossomchilds[b].clone();
        let endps = self.blossomendps[b].clone();
        let len = childs.len() as i64;
        let i = childs.iter().position(|&c| c == t).unwrap();
        let (mut j, jstep, endptrick): (i64, i64, usize) = if i & 1 != 0 {
            (i as i64 - len, 1, 0)
        } else {
            (i as i64, -1, 1)
        };
        let idx = |list: &[usize], j: i64| -> usize {
            let n = list.len() as i64;
            let k = if j >= 0 { j } else { j + n };
            list[k as usize]
        };
        while j != 0 {
            j += jstep;
            let t = idx(&childs, j);
            let p = idx(&endps, j - endptrick as i64) ^ endptrick;
            if t >= nvertex {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = idx(&childs, j);
            if t >= nvertex {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    /// Augment along the path through zero-slack edge `k` between two S-trees.
    fn augment_matching(&mut self, k: usize) {
        let nvertex = self.mate.len();
        let (v, w, _) = self.edges[k];
        for &(start, startp) in &[(v, 2 * k + 1), (w, 2 * k)] {
            let mut s = start;
            let mut p = startp;
            loop {
                let bs = self.inblossom[s];
                debug_assert_eq!(self.label[bs], LABEL_S);
                debug_assert_eq!(self.labelend[bs], self.mate[self.blossombase[bs]]);
                if bs >= nvertex {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                debug_assert_eq!(self.label[bt], LABEL_T);
                debug_assert!(self.labelend[bt] != NONE);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                debug_assert_eq!(self.blossombase[bt], t);
                if bt >= nvertex {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn run(&mut self) {
        let nvertex = {
            // Local vertex count from compaction.
            self.globals.len()
        };
        let nedge = self.edges.len();

        self.endpoint.clear();
        for k in 0..nedge {
            self.endpoint.push(self.edges[k].0);
            self.endpoint.push(self.edges[k].1);
        }
        if self.neighbend.len() < nvertex {
            self.neighbend.resize_with(nvertex, Vec::new);
        }
        for v in 0..nvertex {
            self.neighbend[v].clear();
        }
        for (k, &(i, j, _)) in self.edges.iter().enumerate() {
            self.neighbend[i].push(2 * k + 1);
            self.neighbend[j].push(2 * k);
        }

        let maxweight = self
            .edges
            .iter()
            .map(|&(_, _, wt2)| wt2.half())
            .fold(Wt::ZERO, |a, b| if b > a { b } else { a });

        self.mate.clear();
        self.mate.resize(nvertex, NONE);
        self.label.clear();
        self.label.resize(2 * nvertex, FREE);
        self.labelend.clear();
        self.labelend.resize(2 * nvertex, NONE);
        self.inblossom.clear();
        self.inblossom.extend(0..nvertex);
        self.blossomparent.clear();
        self.blossomparent.resize(2 * nvertex, NONE);
        if self.blossomchilds.len() < 2 * nvertex {
            self.blossomchilds.resize_with(2 * nvertex, Vec::new);
            self.blossomendps.resize_with(2 * nvertex, Vec::new);
            self.blossombestedges.resize_with(2 * nvertex, Vec::new);
        }
        for b in 0..2 * nvertex {
            self.blossomchilds[b].clear();
            self.blossomendps[b].clear();
            self.blossombestedges[b].clear();
        }
        self.blossombase.clear();
        self.blossombase.extend(0..nvertex);
        self.blossombase.resize(2 * nvertex, NONE);
        self.bestedge.clear();
        self.bestedge.resize(2 * nvertex, NONE);
        self.unusedblossoms.clear();
        self.unusedblossoms.extend(nvertex..2 * nvertex);
        self.dualvar.clear();
        self.dualvar.resize(nvertex, maxweight);
        self.dualvar.resize(2 * nvertex, Wt::ZERO);
        self.allowedge.clear();
        self.allowedge.resize(nedge, false);
        self.queue.clear();

        for _stage in 0..nvertex {
            self.label[..2 * nvertex].fill(FREE);
            self.bestedge[..2 * nvertex].fill(NONE);
            for b in nvertex..2 * nvertex {
                self.blossombestedges[b].clear();
            }
            self.allowedge[..nedge].fill(false);
            self.queue.clear();

            for v in 0..nvertex {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == FREE {
                    self.assign_label(v, LABEL_S, NONE);
                }
            }

            let mut augmented = false;
            loop {
                while !augmented {
                    let Some(v) = self.queue.pop() else { break };
                    debug_assert_eq!(self.label[self.inblossom[v]], LABEL_S);
                    for pi in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][pi];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = Wt::ZERO;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= Wt::ZERO {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == FREE {
                                self.assign_label(w, LABEL_T, p ^ 1);
                            } else if self.label[self.inblossom[w]] == LABEL_S {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == FREE {
                                debug_assert_eq!(self.label[self.inblossom[w]], LABEL_T);
                                self.label[w] = LABEL_T;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == LABEL_S {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == FREE
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                }
                if augmented {
                    break;
                }

                // No augmenting path within zero-slack edges: pump duals.
                let mut deltatype = 1;
                let mut delta = self.dualvar[..nvertex]
                    .iter()
                    .copied()
                    .fold(None::<Wt>, |acc, d| match acc {
                        None => Some(d),
                        Some(a) => Some(if d < a { d } else { a }),
                    })
                    .unwrap();
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;

                for v in 0..nvertex {
                    if self.label[self.inblossom[v]] == FREE && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * nvertex {
                    if self.blossomparent[b] == NONE
                        && self.label[b] == LABEL_S
                        && self.bestedge[b] != NONE
                    {
                        let d = self.slack(self.bestedge[b]).half();
                        if d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in nvertex..2 * nvertex {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == LABEL_T
                        && self.dualvar[b] < delta
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }

                for v in 0..nvertex {
                    match self.label[self.inblossom[v]] {
                        FREE => {}
                        LABEL_S => self.dualvar[v] = self.dualvar[v].sub(delta),
                        LABEL_T => self.dualvar[v] = self.dualvar[v].add(delta),
                        _ => unreachable!(),
                    }
                }
                for b in nvertex..2 * nvertex {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            FREE => {}
                            LABEL_S => self.dualvar[b] = self.dualvar[b].add(delta),
                            LABEL_T => self.dualvar[b] = self.dualvar[b].sub(delta),
                            _ => unreachable!(),
                        }
                    }
                }

                match deltatype {
                    1 => break, // optimum reached
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == FREE {
                            i = j;
                        }
                        debug_assert_eq!(self.label[self.inblossom[i]], LABEL_S);
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        debug_assert_eq!(self.label[self.inblossom[i]], LABEL_S);
                        self.queue.push(i);
                    }
                    4 => self.expand_blossom(deltablossom, false),
                    _ => unreachable!(),
                }
            }

            if !augmented {
                break;
            }

            for b in nvertex..2 * nvertex {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] != NONE
                    && self.label[b] == LABEL_S
                    && self.dualvar[b] == Wt::ZERO
                {
                    self.expand_blossom(b, true);
                }
            }
        }
    }
}

/// One-shot convenience wrapper around [`MatchingSolver`].
pub fn max_weight_matching(graph: &Graph, active: &EdgeSet) -> Matching {
    MatchingSolver::new().solve(graph, active)
}

/// Exhaustive oracle: enumerates all matchings among the active edges with
/// the same tie-break semantics as the solver. Depth-first, include-before-
/// exclude, so among exact ties the first (lexicographically smallest id set)
/// maximum is kept.
pub fn brute_force_matching(graph: &Graph, active: &EdgeSet) -> Result<Matching, SolverError> {
    brute_force_matching_with(graph, active, TieBreak::CanonicalLex)
}

/// Exhaustive oracle under an explicit tie-break rule.
pub fn brute_force_matching_with(
    graph: &Graph,
    active: &EdgeSet,
    tie: TieBreak,
) -> Result<Matching, SolverError> {
    let ids = active.to_vec();
    if ids.len() > BRUTE_FORCE_MAX_EDGES {
        return Err(SolverError::TooManyEdges {
            got: ids.len(),
            max: BRUTE_FORCE_MAX_EDGES,
        });
    }
    let key = match tie {
        TieBreak::CanonicalLex => 0,
        TieBreak::RealizationKeyed => active.fingerprint(),
    };
    let bonus = |id: u32| match tie {
        TieBreak::CanonicalLex => tie_bonus(id),
        TieBreak::RealizationKeyed => keyed_bonus(key, id),
    };
    let mut used = vec![false; graph.vertex_count()];
    let mut current = Vec::new();
    let mut best_ids = Vec::new();
    let mut best = Wt::ZERO;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        graph: &Graph,
        ids: &[u32],
        bonus: &dyn Fn(u32) -> f64,
        pos: usize,
        acc: Wt,
        used: &mut [bool],
        current: &mut Vec<u32>,
        best: &mut Wt,
        best_ids: &mut Vec<u32>,
    ) {
        if pos == ids.len() {
            if acc > *best {
                *best = acc;
                best_ids.clone_from(current);
            }
            return;
        }
        let id = ids[pos];
        let e = graph.edge(id);
        if !used[e.u as usize] && !used[e.v as usize] {
            used[e.u as usize] = true;
            used[e.v as usize] = true;
            current.push(id);
            let w = Wt {
                w: e.w,
                t: bonus(id),
            };
            rec(
                graph,
                ids,
                bonus,
                pos + 1,
                acc.add(w),
                used,
                current,
                best,
                best_ids,
            );
            current.pop();
            used[e.u as usize] = false;
            used[e.v as usize] = false;
        }
        rec(graph, ids, bonus, pos + 1, acc, used, current, best, best_ids);
    }
    rec(
        graph,
        &ids,
        &bonus,
        0,
        Wt::ZERO,
        &mut used,
        &mut current,
        &mut best,
        &mut best_ids,
    );
    let weight = graph.matching_weight(&best_ids);
    Ok(Matching {
        edge_ids: best_ids,
        weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_random_graph, WeightMode};

    fn solve_edges(edges: &[(u32, u32, f64)]) -> Vec<usize> {
        let g = Graph::build(edges, 0.5).unwrap();
        let m = max_weight_matching(&g, &EdgeSet::full(g.edge_count()));
        let mut mate = vec![NONE; g.vertex_count()];
        for &id in &m.edge_ids {
            let e = g.edge(id);
            mate[e.u as usize] = e.v as usize;
            mate[e.v as usize] = e.u as usize;
        }
        mate
    }

    const X: usize = NONE;

    // The cases below are the classic torture tests for this algorithm
    // (blossom creation, relabelling and expansion in every combination).
    #[test]
    fn single_edge() {
        assert_eq!(solve_edges(&[(0, 1, 1.0)]), vec![1, 0]);
    }

    #[test]
    fn picks_heavier_edge_not_cardinality() {
        assert_eq!(solve_edges(&[(1, 2, 10.0), (2, 3, 11.0)]), vec![X, X, 3, 2]);
        assert_eq!(
            solve_edges(&[(1, 2, 5.0), (2, 3, 11.0), (3, 4, 5.0)]),
            vec![X, X, 3, 2, X]
        );
    }

    #[test]
    fn s_blossom_augmentation() {
        assert_eq!(
            solve_edges(&[(1, 2, 8.0), (1, 3, 9.0), (2, 3, 10.0), (3, 4, 7.0)]),
            vec![X, 2, 1, 4, 3]
        );
        assert_eq!(
            solve_edges(&[
                (1, 2, 8.0),
                (1, 3, 9.0),
                (2, 3, 10.0),
                (3, 4, 7.0),
                (1, 6, 5.0),
                (4, 5, 6.0)
            ]),
            vec![X, 6, 3, 2, 5, 4, 1]
        );
    }

    #[test]
    fn s_to_t_relabel_augmentation() {
        assert_eq!(
            solve_edges(&[
                (1, 2, 9.0),
                (1, 3, 8.0),
                (2, 3, 10.0),
                (1, 4, 5.0),
                (4, 5, 4.0),
                (1, 6, 3.0)
            ]),
            vec![X, 6, 3, 2, 5, 4, 1]
        );
        assert_eq!(
            solve_edges(&[
                (1, 2, 9.0),
                (1, 3, 8.0),
                (2, 3, 10.0),
                (1, 4, 5.0),
                (4, 5, 3.0),
                (3, 6, 4.0)
            ]),
            vec![X, 2, 1, 6, 5, 4, 3]
        );
    }

    #[test]
    fn nested_s_blossom_augmentation() {
        assert_eq!(
            solve_edges(&[
                (1, 2, 9.0),
                (1, 3, 9.0),
                (2, 3, 10.0),
                (2, 4, 8.0),
                (3, 5, 8.0),
                (4, 5, 10.0),
                (5, 6, 6.0)
            ]),
            vec![X, 3, 4, 1, 2, 6, 5]
        );
    }

    #[test]
    fn nested_s_blossom_relabel_expand() {
        assert_eq!(
            solve_edges(&[
                (1, 2, 10.0),
                (1, 7, 10.0),
                (2, 3, 12.0),
                (3, 4, 20.0),
                (3, 5, 20.0),
                (4, 5, 25.0),
                (5, 6, 10.0),
                (6, 7, 10.0),
                (7, 8, 8.0)
            ]),
            vec![X, 2, 1, 4, 3, 6, 5, 8, 7]
        );
    }

    #[test]
    fn nested_s_blossom_expand_recursively() {
        assert_eq!(
            solve_edges(&[
                (1, 2, 8.0),
                (1, 3, 8.0),
                (2, 3, 10.0),
                (2, 4, 12.0),
                (3, 5, 12.0),
                (4, 5, 14.0),
                (4, 6, 12.0),
                (5, 7, 12.0),
                (6, 7, 14.0),
                (7, 8, 12.0)
            ]),
            vec![X, 2, 1, 5, 6, 3, 4, 8, 7]
        );
    }

    #[test]
    fn s_blossom_relabel_t_expand() {
        assert_eq!(
            solve_edges(&[
                (1, 2, 23.0),
                (1, 5, 22.0),
                (1, 6, 15.0),
                (2, 3, 25.0),
                (3, 4, 22.0),
                (4, 5, 25.0),
                (4, 8, 14.0),
                (5, 7, 13.0)
            ]),
            vec![X, 6, 3, 2, 8, 7, 1, 5, 4]
        );
    }

    #[test]
    fn nested_s_blossom_relabel_t_expand() {
        assert_eq!(
            solve_edges(&[
                (1, 2, 19.0),
                (1, 3, 20.0),
                (1, 8, 8.0),
                (2, 3, 25.0),
                (2, 4, 18.0),
                (3, 5, 18.0),
                (4, 5, 13.0),
                (4, 7, 7.0),
                (5, 6, 7.0)
            ]),
            vec![X, 8, 3, 2, 7, 6, 5, 4, 1]
        );
    }

    #[test]
    fn nasty_t_blossom_expansions() {
        assert_eq!(
            solve_edges(&[
                (1, 2, 45.0),
                (1, 5, 45.0),
                (2, 3, 50.0),
                (3, 4, 45.0),
                (4, 5, 50.0),
                (1, 6, 30.0),
                (3, 9, 35.0),
                (4, 8, 35.0),
                (5, 7, 26.0),
                (9, 10, 5.0)
            ]),
            vec![X, 6, 3, 2, 8, 7, 1, 5, 4, 10, 9]
        );
        assert_eq!(
            solve_edges(&[
                (1, 2, 45.0),
                (1, 5, 45.0),
                (2, 3, 50.0),
                (3, 4, 45.0),
                (4, 5, 50.0),
                (1, 6, 30.0),
                (3, 9, 35.0),
                (4, 8, 26.0),
                (5, 7, 40.0),
                (9, 10, 5.0)
            ]),
            vec![X, 6, 3, 2, 8, 7, 1, 5, 4, 10, 9]
        );
        assert_eq!(
            solve_edges(&[
                (1, 2, 45.0),
                (1, 5, 45.0),
                (2, 3, 50.0),
                (3, 4, 45.0),
                (4, 5, 50.0),
                (1, 6, 30.0),
                (3, 9, 35.0),
                (4, 8, 28.0),
                (5, 7, 26.0),
                (9, 10, 5.0)
            ]),
            vec![X, 6, 3, 2, 8, 7, 1, 5, 4, 10, 9]
        );
    }

    #[test]
    fn nested_blossom_on_augmenting_path() {
        assert_eq!(
            solve_edges(&[
                (1, 2, 45.0),
                (1, 7, 45.0),
                (2, 3, 50.0),
                (3, 4, 45.0),
                (4, 5, 95.0),
                (4, 6, 94.0),
                (5, 6, 94.0),
                (6, 7, 50.0),
                (1, 8, 30.0),
                (3, 11, 35.0),
                (5, 9, 36.0),
                (7, 10, 26.0),
                (11, 12, 5.0)
            ]),
            vec![X, 8, 3, 2, 6, 9, 4, 10, 1, 5, 7, 12, 11]
        );
    }

    #[test]
    fn nested_expand_recursively_after_relabel() {
        assert_eq!(
            solve_edges(&[
                (1, 2, 40.0),
                (1, 3, 40.0),
                (2, 3, 60.0),
                (2, 4, 55.0),
                (3, 5, 55.0),
                (4, 5, 50.0),
                (1, 8, 15.0),
                (5, 7, 30.0),
                (7, 6, 10.0),
                (8, 10, 10.0),
                (4, 9, 30.0)
            ]),
            vec![X, 2, 1, 5, 9, 3, 7, 6, 10, 4, 8]
        );
    }

    #[test]
    fn empty_active_set_gives_empty_matching() {
        let g = Graph::build(&[(0, 1, 1.0)], 0.5).unwrap();
        let m = max_weight_matching(&g, &EdgeSet::new(1));
        assert_eq!(m, Matching::empty());
    }

    #[test]
    fn tie_break_is_lexicographic_on_paths() {
        // Path a-b-c with equal weights: edge 0 is the canonical winner.
        let g = Graph::build(&[(0, 1, 2.0), (1, 2, 2.0)], 0.5).unwrap();
        let m = max_weight_matching(&g, &EdgeSet::full(2));
        assert_eq!(m.edge_ids, vec![0]);
        assert_eq!(m.weight, 2.0);
    }

    #[test]
    fn triangle_takes_heaviest_edge() {
        let g = Graph::build(&[(0, 1, 3.0), (0, 2, 2.0), (1, 2, 2.0)], 0.5).unwrap();
        let m = max_weight_matching(&g, &EdgeSet::full(3));
        assert_eq!(m.edge_ids, vec![0]);
        assert_eq!(m.weight, 3.0);
    }

    #[test]
    fn brute_force_basics() {
        let g = Graph::build(&[(0, 1, 5.0)], 0.5).unwrap();
        let m = brute_force_matching(&g, &EdgeSet::full(1)).unwrap();
        assert_eq!(m.edge_ids, vec![0]);
        assert_eq!(m.weight, 5.0);

        let g = Graph::build(&[(0, 1, 1.0), (2, 3, 2.0)], 0.5).unwrap();
        let m = brute_force_matching(&g, &EdgeSet::full(2)).unwrap();
        assert_eq!(m.edge_ids, vec![0, 1]);
        assert_eq!(m.weight, 3.0);

        let g = Graph::build(&[(0, 1, 1.0)], 0.5).unwrap();
        let m = brute_force_matching(&g, &EdgeSet::new(1)).unwrap();
        assert_eq!(m, Matching::empty());
    }

    #[test]
    fn brute_force_guards_size() {
        let g = gen_random_graph(10, 1.0, WeightMode::Unit, 0.5, 1).unwrap();
        let err = brute_force_matching(&g, &EdgeSet::full(g.edge_count())).unwrap_err();
        assert!(matches!(err, SolverError::TooManyEdges { .. }));
    }

    #[test]
    fn agrees_with_brute_force_on_random_graphs() {
        let mut solver = MatchingSolver::new();
        for seed in 0..200 {
            let weights = if seed % 2 == 0 {
                WeightMode::Unit
            } else {
                WeightMode::Uniform { lo: 0.5, hi: 3.0 }
            };
            let g = gen_random_graph(8, 0.5, weights, 0.5, seed).unwrap();
            if g.edge_count() == 0 || g.edge_count() > BRUTE_FORCE_MAX_EDGES {
                continue;
            }
            let active = EdgeSet::full(g.edge_count());
            let fast = solver.solve(&g, &active);
            let slow = brute_force_matching(&g, &active).unwrap();
            assert_eq!(fast.edge_ids, slow.edge_ids, "seed {seed}");
            assert_eq!(fast.weight, slow.weight, "seed {seed}");
        }
    }

    #[test]
    fn repeated_solves_are_identical() {
        let g = gen_random_graph(10, 0.6, WeightMode::Unit, 0.5, 3).unwrap();
        let active = EdgeSet::full(g.edge_count());
        let mut solver = MatchingSolver::new();
        let first = solver.solve(&g, &active);
        for _ in 0..100 {
            assert_eq!(solver.solve(&g, &active).edge_ids, first.edge_ids);
        }
    }

    #[test]
    fn keyed_mode_agrees_with_keyed_brute_force() {
        let mut solver = MatchingSolver::new();
        for seed in 0..200 {
            let g = gen_random_graph(8, 0.5, WeightMode::Unit, 0.5, 3000 + seed).unwrap();
            if g.edge_count() == 0 || g.edge_count() > BRUTE_FORCE_MAX_EDGES {
                continue;
            }
            let active = EdgeSet::full(g.edge_count());
            let fast = solver.solve_with(&g, &active, TieBreak::RealizationKeyed);
            let slow =
                brute_force_matching_with(&g, &active, TieBreak::RealizationKeyed).unwrap();
            assert_eq!(fast.edge_ids, slow.edge_ids, "seed {seed}");
            // Weight must match the canonical optimum: tie rules never change
            // the optimal value.
            let canonical = solver.solve(&g, &active);
            assert_eq!(fast.weight, canonical.weight, "seed {seed}");
        }
    }

    #[test]
    fn keyed_mode_varies_with_the_active_set_but_is_deterministic() {
        // A path with equal weights: the canonical rule always picks edge 0,
        // the keyed rule picks per-realization; both are reproducible.
        let g = Graph::build(&[(0, 1, 1.0), (1, 2, 1.0)], 0.5).unwrap();
        let both = EdgeSet::full(2);
        let mut solver = MatchingSolver::new();
        let keyed = solver.solve_with(&g, &both, TieBreak::RealizationKeyed);
        for _ in 0..10 {
            assert_eq!(
                solver.solve_with(&g, &both, TieBreak::RealizationKeyed).edge_ids,
                keyed.edge_ids
            );
        }
        assert_eq!(solver.solve(&g, &both).edge_ids, vec![0]);
    }

    #[test]
    fn solver_reuse_across_different_graphs() {
        let mut solver = MatchingSolver::new();
        let g1 = gen_random_graph(12, 0.4, WeightMode::Unit, 0.5, 5).unwrap();
        let g2 = Graph::build(&[(0, 1, 1.0), (1, 2, 2.0)], 0.5).unwrap();
        let a1 = EdgeSet::full(g1.edge_count());
        let a2 = EdgeSet::full(g2.edge_count());
        let r1 = solver.solve(&g1, &a1);
        let r2 = solver.solve(&g2, &a2);
        assert_eq!(r2.edge_ids, vec![1]);
        assert_eq!(solver.solve(&g1, &a1).edge_ids, r1.edge_ids);
    }
}
