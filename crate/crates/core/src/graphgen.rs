//! Isomorph-free generation of candidate support graphs.
//!
//! Graphs are grown one edge at a time from the empty graph by canonical
//! augmentation. A child `C = P + e` is accepted only when deleting its
//! canonical edge `e*(C)` gives back a graph isomorphic to `P`, and children
//! of one parent are deduplicated by canonical code. Every isomorphism class
//! is therefore produced from exactly one parent class, exactly once.
//!
//! `e*(C)` is chosen among the edges with the largest sorted endpoint-degree
//! pair, which lets most children be rejected before canonization.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::canon::{canonical_labeling, Labeling};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    General,
    HalfIntegral,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::General => "general",
            Mode::HalfIntegral => "half-integral",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(Mode::General),
            "half-integral" | "half_integral" => Ok(Mode::HalfIntegral),
            other => Err(format!("unknown mode `{other}` (expected general or half-integral)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationConstraints {
    pub min_degree: usize,
    pub max_degree: Option<usize>,
    pub max_edges: usize,
    pub require_two_connected: bool,
}

impl GenerationConstraints {
    /// Minimum degree 3, at most `2n−3` edges, 2-connected; maximum degree 4
    /// in half-integral mode.
    pub fn for_mode(n: usize, mode: Mode) -> Self {
        Self {
            min_degree: 3,
            max_degree: match mode {
                Mode::General => None,
                Mode::HalfIntegral => Some(4),
            },
            max_edges: (2 * n).saturating_sub(3),
            require_two_connected: true,
        }
    }

    pub fn accepts(&self, g: &Graph) -> bool {
        g.num_edges() <= self.max_edges
            && g.min_degree() >= self.min_degree
            && self.max_degree.is_none_or(|d| g.max_degree() <= d)
            && (!self.require_two_connected || g.is_two_connected())
    }
}

/// All non-isomorphic candidate support graphs on `n` vertices, in canonical
/// labeling, ordered by edge count and then edge list.
pub fn generate_support_candidates(n: usize, mode: Mode) -> Vec<Graph> {
    generate_with_constraints(n, &GenerationConstraints::for_mode(n, mode))
}

pub fn count_candidates(n: usize, mode: Mode) -> usize {
    generate_support_candidates(n, mode).len()
}

/// Generation under arbitrary constraints.
pub fn generate_with_constraints(n: usize, c: &GenerationConstraints) -> Vec<Graph> {
    assert!(n <= 16, "graph generation supports at most 16 vertices");
    let mut gen = Generator {
        n,
        c: *c,
        out: Vec::new(),
    };
    let root = Node {
        adj: vec![0; n],
        m: 0,
    };
    if n > 0 && gen.deficit_ok(&root) {
        let lab = canonical_labeling(n, &root.matrix());
        gen.visit(&root, &lab);
    }
    let mut out = gen.out;
    out.sort_by(|a, b| (a.num_edges(), a.edges()).cmp(&(b.num_edges(), b.edges())));
    out
}

#[derive(Clone)]
struct Node {
    adj: Vec<u32>,
    m: usize,
}

impl Node {
    fn deg(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    fn matrix(&self) -> Vec<u8> {
        let n = self.adj.len();
        let mut m = vec![0u8; n * n];
        for u in 0..n {
            let mut bits = self.adj[u];
            while bits != 0 {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                m[u * n + v] = 1;
            }
        }
        m
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.adj.len();
        let mut out = Vec::with_capacity(self.m);
        for u in 0..n {
            let mut bits = self.adj[u] >> (u + 1);
            while bits != 0 {
                let d = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                out.push((u, u + 1 + d));
            }
        }
        out
    }

    fn with_edge(&self, u: usize, v: usize) -> Node {
        let mut c = self.clone();
        c.adj[u] |= 1 << v;
        c.adj[v] |= 1 << u;
        c.m += 1;
        c
    }

    fn without_edge(&self, u: usize, v: usize) -> Node {
        let mut c = self.clone();
        c.adj[u] &= !(1 << v);
        c.adj[v] &= !(1 << u);
        c.m -= 1;
        c
    }

    fn edge_invariant(&self, u: usize, v: usize) -> (usize, usize) {
        let (a, b) = (self.deg(u), self.deg(v));
        (a.max(b), a.min(b))
    }

    fn to_graph(&self) -> Graph {
        Graph::new(self.adj.len(), self.edges()).expect("generated graphs are simple")
    }
}

struct Generator {
    n: usize,
    c: GenerationConstraints,
    out: Vec<Graph>,
}

impl Generator {
    /// Total missing degree must be coverable by the remaining edge budget.
    fn deficit_ok(&self, g: &Node) -> bool {
        let deficit: usize = (0..self.n).map(|v| self.c.min_degree.saturating_sub(g.deg(v))).sum();
        deficit <= 2 * (self.c.max_edges - g.m)
    }

    fn visit(&mut self, g: &Node, lab: &Labeling) {
        if g.m <= self.c.max_edges {
            let graph = g.to_graph();
            if self.c.accepts(&graph) {
                self.out.push(graph.relabel(&lab.position()));
            }
        }
        if g.m >= self.c.max_edges {
            return;
        }
        let n = self.n;
        let mut seen_children: HashSet<Vec<u8>> = HashSet::new();
        for (u, v) in non_edge_orbit_reps(g, &lab.automorphisms) {
            if let Some(d) = self.c.max_degree {
                if g.deg(u) >= d || g.deg(v) >= d {
                    continue;
                }
            }
            let child = g.with_edge(u, v);
            if !self.deficit_ok(&child) {
                continue;
            }
            let inv = child.edge_invariant(u, v);
            let best_inv = child
                .edges()
                .into_iter()
                .map(|(a, b)| child.edge_invariant(a, b))
                .max()
                .expect("child has an edge");
            if inv < best_inv {
                continue;
            }
            let child_lab = canonical_labeling(n, &child.matrix());
            if !self.is_canonical_extension(&child, &child_lab, (u, v), best_inv, lab) {
                continue;
            }
            if seen_children.insert(child_lab.code.clone()) {
                self.visit(&child, &child_lab);
            }
        }
    }

    fn is_canonical_extension(
        &self,
        child: &Node,
        child_lab: &Labeling,
        added: (usize, usize),
        best_inv: (usize, usize),
        parent_lab: &Labeling,
    ) -> bool {
        let pos = child_lab.position();
        let key = |(a, b): (usize, usize)| (pos[a].max(pos[b]), pos[a].min(pos[b]));
        let star = child
            .edges()
            .into_iter()
            .filter(|&(a, b)| child.edge_invariant(a, b) == best_inv)
            .max_by_key(|&e| key(e))
            .expect("an edge attains the maximum invariant");
        if star == added {
            return true;
        }
        if same_edge_orbit(added, star, &child_lab.automorphisms, self.n) {
            return true;
        }
        let reduced = child.without_edge(star.0, star.1);
        canonical_labeling(self.n, &reduced.matrix()).code == parent_lab.code
    }
}

fn pair(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// One non-edge per orbit of the group generated by `autos`.
fn non_edge_orbit_reps(g: &Node, autos: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let n = g.adj.len();
    let mut reps = Vec::new();
    let mut covered = vec![false; n * n];
    for u in 0..n {
        for v in u + 1..n {
            if g.adj[u] & (1 << v) != 0 || covered[u * n + v] {
                continue;
            }
            reps.push((u, v));
            let mut stack = vec![(u, v)];
            covered[u * n + v] = true;
            while let Some((a, b)) = stack.pop() {
                for p in autos {
                    let (x, y) = pair(p[a], p[b]);
                    if !covered[x * n + y] {
                        covered[x * n + y] = true;
                        stack.push((x, y));
                    }
                }
            }
        }
    }
    reps
}

fn same_edge_orbit(e: (usize, usize), f: (usize, usize), autos: &[Vec<usize>], n: usize) -> bool {
    if autos.is_empty() {
        return false;
    }
    let mut seen = vec![false; n * n];
    let mut stack = vec![e];
    seen[e.0 * n + e.1] = true;
    while let Some((a, b)) = stack.pop() {
        if (a, b) == f {
            return true;
        }
        for p in autos {
            let (x, y) = pair(p[a], p[b]);
            if !seen[x * n + y] {
                seen[x * n + y] = true;
                stack.push((x, y));
            }
        }
    }
    false
}
