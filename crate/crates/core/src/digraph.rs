//! The digraph induced by a generator: vertex `j` has an edge to vertex `i`
//! with weight `gamma_ij` (a diagonal entry of `Gamma^O`).
//!
//! # DOT output
//!
//! [`to_dot`] writes vertices `1..N` and these attributes:
//!
//! * every edge carries `label` and `weight_exact`, both the weight printed
//!   as the shortest string that round-trips to the same `f64`;
//! * terminal strongly connected components are clusters named
//!   `cluster_tscc_<k>` (1-based `k`, ordered by smallest vertex);
//! * sinks have `sink="true"` and `shape=doublecircle`;
//! * both edges of a singular 2-sink have `singular_2sink="true"` and
//!   `style=dashed`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;

use crate::basis::{self, BasisOrdering, Label};
use crate::error::{GkslError, Result};
use crate::generator::{GellMannSpec, GeneratorSpec};
use crate::DEFAULT_TOL;

/// Weighted digraph on vertices `0..N`; `w[(i, j)]` is the weight of `j -> i`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedDigraph {
    n: usize,
    w: DMatrix<f64>,
}

impl InducedDigraph {
    /// From `(from, to, weight)` triples; weights `<= tol` are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], tol: f64) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for &(from, to, weight) in edges {
            if from >= n || to >= n || from == to {
                return Err(GkslError::InvalidArgument(format!("edge {from} -> {to} for N = {n}")));
            }
            if weight > tol {
                w[(to, from)] += weight;
            }
        }
        Ok(Self { n, w })
    }

    pub fn edgeless(n: usize) -> Self {
        Self { n, w: DMatrix::zeros(n, n) }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Weight of `from -> to`, zero if absent.
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.w[(to, from)]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        from != to && self.w[(to, from)] > 0.0
    }

    /// Edges `(from, to, weight)` ordered by `from`, then `to`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for from in 0..self.n {
            for to in 0..self.n {
                if self.has_edge(from, to) {
                    out.push((from, to, self.w[(to, from)]));
                }
            }
        }
        out
    }

    pub fn out_degree_weight(&self, v: usize) -> f64 {
        (0..self.n).filter(|&k| k != v).map(|k| self.w[(k, v)]).sum()
    }

    /// Subdigraph induced on `s` (vertices renumbered in the order given).
    pub fn induced(&self, s: &[usize]) -> Self {
        let m = s.len();
        Self { n: m, w: DMatrix::from_fn(m, m, |a, b| if a == b { 0.0 } else { self.w[(s[a], s[b])] }) }
    }
}

/// Induced digraph of a standard-basis generator. Weights are the real parts
/// of `gamma_ij`, clamped at zero; weights `<= tol * max(1, max|Gamma|)` are
/// not edges.
pub fn induced_digraph(spec: &GeneratorSpec) -> InducedDigraph {
    induced_digraph_with_tol(spec, DEFAULT_TOL)
}

pub fn induced_digraph_with_tol(spec: &GeneratorSpec, tol: f64) -> InducedDigraph {
    let n = spec.dim();
    let thr = basis::scaled_tol(tol, spec.gamma());
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let r = spec.rate(i, j).max(0.0);
        if r > thr { r } else { 0.0 }
    });
    InducedDigraph { n, w }
}

/// Induced digraph read off a Gell-Mann coefficient matrix:
/// `gamma_ij = (c_ij + c_ji - 2 b_ij) / 2` for `i < j` and
/// `(c_ji + c_ij + 2 b_ji) / 2` for `i > j`.
pub fn induced_digraph_gell_mann(spec: &GellMannSpec, tol: f64) -> InducedDigraph {
    let n = spec.dim();
    let gm = BasisOrdering::gell_mann(n);
    let c = spec.c();
    let thr = basis::scaled_tol(tol, c);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = gm.position(Label::Pair(i, j)).unwrap();
            let q = gm.position(Label::Pair(j, i)).unwrap();
            let (cij, cji, b) = (c[(p, p)].re, c[(q, q)].re, c[(p, q)].im);
            let up = (0.5 * (cij + cji - 2.0 * b)).max(0.0);
            let down = (0.5 * (cij + cji + 2.0 * b)).max(0.0);
            w[(i, j)] = if up > thr { up } else { 0.0 };
            w[(j, i)] = if down > thr { down } else { 0.0 };
        }
    }
    InducedDigraph { n, w }
}

/// Digraph Laplacian: `L_ij = w_ij` off the diagonal, `L_jj = -sum_{k != j} w_kj`.
pub fn laplacian(g: &InducedDigraph) -> DMatrix<f64> {
    let mut l = g.w.clone();
    for j in 0..g.n {
        l[(j, j)] = -g.out_degree_weight(j);
    }
    l
}

/// Strongly connected components with the reachability order between them.
#[derive(Debug, Clone, PartialEq)]
pub struct SccDecomposition {
    /// Sorted vertex lists, ordered by smallest vertex.
    pub components: Vec<Vec<usize>>,
    pub terminal: Vec<bool>,
    component_of: Vec<usize>,
    reach: Vec<Vec<bool>>,
}

impl SccDecomposition {
    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    /// `[a] ⪯ [b]`: some vertex of component `a` reaches some vertex of `b`.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.reach[a][b]
    }

    pub fn terminal_components(&self) -> Vec<&[usize]> {
        self.components.iter().zip(&self.terminal).filter(|(_, &t)| t).map(|(c, _)| c.as_slice()).collect()
    }
}

pub fn scc_decompose(g: &InducedDigraph) -> SccDecomposition {
    let mut pg = DiGraph::<(), f64>::with_capacity(g.n, 0);
    let nodes: Vec<_> = (0..g.n).map(|_| pg.add_node(())).collect();
    for (from, to, w) in g.edges() {
        pg.add_edge(nodes[from], nodes[to], w);
    }
    let mut components: Vec<Vec<usize>> = tarjan_scc(&pg)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    components.sort_by_key(|c| c[0]);

    let k = components.len();
    let mut component_of = vec![0; g.n];
    for (ci, c) in components.iter().enumerate() {
        for &v in c {
            component_of[v] = ci;
        }
    }
    let mut reach = vec![vec![false; k]; k];
    for (a, row) in reach.iter_mut().enumerate() {
        row[a] = true;
    }
    for (from, to, _) in g.edges() {
        reach[component_of[from]][component_of[to]] = true;
    }
    // transitive closure; the condensation is small
    for m in 0..k {
        for a in 0..k {
            if reach[a][m] {
                let via = reach[m].clone();
                for (r, v) in reach[a].iter_mut().zip(via) {
                    *r |= v;
                }
            }
        }
    }
    let terminal = (0..k).map(|a| (0..k).all(|b| b == a || !reach[a][b])).collect();
    SccDecomposition { components, terminal, component_of, reach }
}

fn det(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        1.0
    } else {
        m.lu().determinant()
    }
}

/// Total weight of spanning trees of the subdigraph induced on `s` directed
/// towards root `i`: `(-1)^{|S|-1} det L_i`.
pub fn rooted_spanning_weight(g: &InducedDigraph, s: &[usize], i: usize) -> Result<f64> {
    let root = s
        .iter()
        .position(|&v| v == i)
        .ok_or_else(|| GkslError::InvalidArgument(format!("root {i} is not in the vertex set")))?;
    if let Some(&v) = s.iter().find(|&&v| v >= g.n) {
        return Err(GkslError::IndexOutOfRange(format!("vertex {v} for N = {}", g.n)));
    }
    let l = laplacian(&g.induced(s));
    let minor = l.remove_row(root).remove_column(root);
    let sign = if (s.len() - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * det(minor))
}

/// Normalized kernel vector of the Laplacian supported on one TSCC.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryVector {
    /// Index into [`SccDecomposition::components`].
    pub component: usize,
    pub vertices: Vec<usize>,
    pub rho: DVector<f64>,
    /// Rooted spanning weights before normalization.
    pub unnormalized: DVector<f64>,
    /// Normalization constant (sum of the rooted weights).
    pub lambda: f64,
}

pub fn tscc_stationary_vectors(g: &InducedDigraph) -> Vec<StationaryVector> {
    let scc = scc_decompose(g);
    tscc_stationary_vectors_from(g, &scc)
}

pub fn tscc_stationary_vectors_from(g: &InducedDigraph, scc: &SccDecomposition) -> Vec<StationaryVector> {
    scc.components
        .iter()
        .enumerate()
        .filter(|(ci, _)| scc.terminal[*ci])
        .map(|(ci, comp)| {
            let mut unnormalized = DVector::zeros(g.n);
            for &v in comp {
                unnormalized[v] = rooted_spanning_weight(g, comp, v).expect("vertex in component");
            }
            let lambda = unnormalized.sum();
            StationaryVector {
                component: ci,
                vertices: comp.clone(),
                rho: &unnormalized / lambda,
                unnormalized,
                lambda,
            }
        })
        .collect()
}

/// Sinks and singular 2-sinks of the induced digraph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SinkReport {
    pub sinks: Vec<usize>,
    pub singular2: Vec<(usize, usize)>,
}

impl SinkReport {
    pub fn is_sink(&self, v: usize) -> bool {
        self.sinks.contains(&v)
    }

    pub fn is_singular2(&self, k: usize, l: usize) -> bool {
        self.singular2.contains(&(k.min(l), k.max(l)))
    }
}

/// Two-vertex terminal components `{k, l}`, `k < l`.
pub fn two_sinks(g: &InducedDigraph) -> Vec<(usize, usize)> {
    let scc = scc_decompose(g);
    scc.components
        .iter()
        .zip(&scc.terminal)
        .filter(|(c, &t)| t && c.len() == 2)
        .map(|(c, _)| (c[0], c[1]))
        .collect()
}

pub fn sinks_and_singular_2sinks(spec: &GeneratorSpec) -> SinkReport {
    sinks_and_singular_2sinks_with_tol(spec, DEFAULT_TOL)
}

pub fn sinks_and_singular_2sinks_with_tol(spec: &GeneratorSpec, tol: f64) -> SinkReport {
    let g = induced_digraph_with_tol(spec, tol);
    let sinks = (0..g.n).filter(|&v| (0..g.n).all(|k| !g.has_edge(v, k))).collect();
    let singular2 = two_sinks(&g)
        .into_iter()
        .filter(|&(k, l)| {
            let b = spec.pair_block(k, l).expect("k < l in range");
            let scale = b.entries.iter().flatten().fold(1.0_f64, |m, z| m.max(z.norm()));
            let t = tol * scale;
            (b.entries[0][0] - b.entries[1][1]).norm() <= t && b.determinant().norm() <= t * scale
        })
        .collect();
    SinkReport { sinks, singular2 }
}

/// Connected components after forgetting direction and weights.
pub fn undirected_components(g: &InducedDigraph) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::<usize>::new(g.n);
    for (from, to, _) in g.edges() {
        uf.union(from, to);
    }
    let mut groups: std::collections::BTreeMap<usize, BTreeSet<usize>> = Default::default();
    for v in 0..g.n {
        groups.entry(uf.find(v)).or_default().insert(v);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().map(|s| s.into_iter().collect()).collect();
    out.sort_by_key(|c| c[0]);
    out
}

/// Graphviz rendering; see the module docs for attribute names.
pub fn to_dot(g: &InducedDigraph, sinks: &SinkReport) -> String {
    let scc = scc_decompose(g);
    let mut s = String::from("digraph G {\n");
    let mut tscc = 0;
    for (ci, comp) in scc.components.iter().enumerate() {
        if !scc.terminal[ci] {
            continue;
        }
        tscc += 1;
        let _ = writeln!(s, "  subgraph cluster_tscc_{tscc} {{");
        let _ = writeln!(s, "    label=\"TSCC {tscc}\";");
        for &v in comp {
            let _ = writeln!(s, "    {};", v + 1);
        }
        s.push_str("  }\n");
    }
    for v in 0..g.n {
        if sinks.is_sink(v) {
            let _ = writeln!(s, "  {} [sink=\"true\", shape=doublecircle];", v + 1);
        } else {
            let _ = writeln!(s, "  {};", v + 1);
        }
    }
    for (from, to, w) in g.edges() {
        let mut attrs = format!("label=\"{w}\", weight_exact=\"{w}\"");
        if sinks.is_singular2(from, to) {
            attrs.push_str(", singular_2sink=\"true\", style=dashed");
        }
        let _ = writeln!(s, "  {} -> {} [{attrs}];", from + 1, to + 1);
    }
    s.push_str("}\n");
    s
}
