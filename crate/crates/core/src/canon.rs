//! Canonical labeling of edge-colored graphs and isomorphism rejection of
//! weighted points.
//!
//! The canonizer refines an ordered vertex partition to equitability,
//! individualizes vertices of the first non-singleton cell, and keeps the
//! leaf whose permuted colored adjacency matrix has the lexicographically
//! smallest upper triangle. Leaves that tie with the best one yield
//! automorphisms, which prune sibling branches lying in a common orbit of
//! the pointwise stabilizer of the current prefix.

use std::collections::BTreeMap;
use std::fmt;

use crate::graph::Graph;
use crate::polytope::WeightedPoint;
use crate::rational::{format_rational, Rational};

/// Result of canonizing a colored graph.
#[derive(Debug, Clone)]
pub struct Labeling {
    /// `order[i]` is the vertex placed at canonical position `i`.
    pub order: Vec<usize>,
    /// Upper triangle of the canonical colored adjacency matrix, row-major.
    pub code: Vec<u8>,
    /// Automorphisms discovered during the search, as `v -> image` maps.
    pub automorphisms: Vec<Vec<usize>>,
}

impl Labeling {
    /// Canonical position of every vertex.
    pub fn position(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (i, &v) in self.order.iter().enumerate() {
            pos[v] = i;
        }
        pos
    }
}

type Cells = Vec<Vec<usize>>;

struct Search<'a> {
    n: usize,
    matrix: &'a [u8],
    best: Option<(Vec<u8>, Vec<usize>)>,
    autos: Vec<Vec<usize>>,
}

/// Canonically labels the colored graph whose `n × n` matrix holds 0 for
/// non-edges and a positive color otherwise.
pub fn canonical_labeling(n: usize, matrix: &[u8]) -> Labeling {
    assert_eq!(matrix.len(), n * n);
    if n == 0 {
        return Labeling {
            order: Vec::new(),
            code: Vec::new(),
            automorphisms: Vec::new(),
        };
    }
    let mut cells = initial_partition(n, matrix);
    refine(n, matrix, &mut cells);
    let mut search = Search {
        n,
        matrix,
        best: None,
        autos: Vec::new(),
    };
    let mut prefix = Vec::new();
    search.visit(cells, &mut prefix);
    let (code, order) = search.best.expect("search reaches at least one leaf");
    Labeling {
        order,
        code,
        automorphisms: search.autos,
    }
}

/// Cells keyed by (degree, sorted incident colors), ascending.
fn initial_partition(n: usize, m: &[u8]) -> Cells {
    let mut keyed: Vec<(Vec<u8>, usize)> = (0..n)
        .map(|v| {
            let mut colors: Vec<u8> = m[v * n..(v + 1) * n].iter().copied().filter(|&c| c != 0).collect();
            colors.sort_unstable();
            colors.insert(0, colors.len() as u8);
            (colors, v)
        })
        .collect();
    keyed.sort();
    group(keyed)
}

fn group<K: PartialEq>(keyed: Vec<(K, usize)>) -> Cells {
    let mut cells: Cells = Vec::new();
    let mut last: Option<K> = None;
    for (k, v) in keyed {
        if last.as_ref() == Some(&k) {
            cells.last_mut().expect("non-empty").push(v);
        } else {
            cells.push(vec![v]);
            last = Some(k);
        }
    }
    cells
}

/// Splits cells by neighbor counts per (cell, color) until stable.
fn refine(n: usize, m: &[u8], cells: &mut Cells) {
    let mut cell_of = vec![0usize; n];
    loop {
        for (ci, c) in cells.iter().enumerate() {
            for &v in c {
                cell_of[v] = ci;
            }
        }
        let before = cells.len();
        let mut out: Cells = Vec::with_capacity(n);
        for cell in cells.iter() {
            if cell.len() == 1 {
                out.push(cell.clone());
                continue;
            }
            let keyed: Vec<(Vec<u32>, usize)> = cell
                .iter()
                .map(|&v| {
                    let mut sig: Vec<u32> = (0..n)
                        .filter(|&u| m[v * n + u] != 0)
                        .map(|u| ((cell_of[u] as u32) << 8) | m[v * n + u] as u32)
                        .collect();
                    sig.sort_unstable();
                    (sig, v)
                })
                .collect();
            let mut keyed = keyed;
            keyed.sort();
            out.extend(group(keyed));
        }
        *cells = out;
        if cells.len() == before {
            return;
        }
    }
}

impl Search<'_> {
    fn visit(&mut self, cells: Cells, prefix: &mut Vec<usize>) {
        let Some(t) = cells.iter().position(|c| c.len() > 1) else {
            self.leaf(cells.into_iter().map(|c| c[0]).collect());
            return;
        };
        let target = cells[t].clone();
        let mut explored: Vec<usize> = Vec::new();
        for &w in &target {
            if !explored.is_empty() && self.in_explored_orbit(w, &explored, prefix) {
                continue;
            }
            explored.push(w);
            let mut child = Vec::with_capacity(cells.len() + 1);
            child.extend_from_slice(&cells[..t]);
            child.push(vec![w]);
            child.push(target.iter().copied().filter(|&x| x != w).collect());
            child.extend_from_slice(&cells[t + 1..]);
            refine(self.n, self.matrix, &mut child);
            prefix.push(w);
            self.visit(child, prefix);
            prefix.pop();
        }
    }

    fn in_explored_orbit(&self, w: usize, explored: &[usize], prefix: &[usize]) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut any = false;
        for a in &self.autos {
            if prefix.iter().any(|&v| a[v] != v) {
                continue;
            }
            any = true;
            for v in 0..self.n {
                let (x, y) = (find(&mut parent, v), find(&mut parent, a[v]));
                if x != y {
                    parent[x] = y;
                }
            }
        }
        if !any {
            return false;
        }
        let rw = find(&mut parent, w);
        explored.iter().any(|&e| find(&mut parent, e) == rw)
    }

    fn leaf(&mut self, order: Vec<usize>) {
        let n = self.n;
        let mut code = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                code.push(self.matrix[order[i] * n + order[j]]);
            }
        }
        match &self.best {
            None => self.best = Some((code, order)),
            Some((best_code, best_order)) => match code.cmp(best_code) {
                std::cmp::Ordering::Less => self.best = Some((code, order)),
                std::cmp::Ordering::Equal => {
                    let mut auto = vec![0; n];
                    for i in 0..n {
                        auto[order[i]] = best_order[i];
                    }
                    if auto.iter().enumerate().any(|(v, &a)| v != a) && !self.autos.contains(&auto) {
                        self.autos.push(auto);
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }
}

/// Colored adjacency matrix of a plain graph (every edge has color 1).
pub fn graph_matrix(g: &Graph) -> Vec<u8> {
    let n = g.n();
    let mut m = vec![0u8; n * n];
    for &(u, v) in g.edges() {
        m[u * n + v] = 1;
        m[v * n + u] = 1;
    }
    m
}

/// Edge colors by ascending weight rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeColoring {
    /// Color of each edge, aligned with the point's edge order.
    pub colors: Vec<usize>,
    pub palette_size: usize,
    /// Distinct weights in ascending order; `palette[c]` is the weight of color `c`.
    pub palette: Vec<Rational>,
}

pub fn edge_color_classes(p: &WeightedPoint) -> EdgeColoring {
    let mut palette: Vec<Rational> = p.weights().to_vec();
    palette.sort();
    palette.dedup();
    let colors = p
        .weights()
        .iter()
        .map(|w| palette.binary_search(w).expect("weight is in palette"))
        .collect();
    EdgeColoring {
        colors,
        palette_size: palette.len(),
        palette,
    }
}

/// Byte string identifying the isomorphism class of a weighted point.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(pub Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CanonicalKey(")?;
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        f.write_str(")")
    }
}

/// Canonical key and the point relabeled into canonical form.
pub fn canonical_form(p: &WeightedPoint) -> (CanonicalKey, WeightedPoint) {
    let n = p.n();
    let coloring = edge_color_classes(p);
    assert!(coloring.palette_size < 255, "too many distinct weights");
    let mut m = vec![0u8; n * n];
    for (&(u, v), &c) in p.graph().edges().iter().zip(&coloring.colors) {
        m[u * n + v] = c as u8 + 1;
        m[v * n + u] = c as u8 + 1;
    }
    let lab = canonical_labeling(n, &m);
    let relabeled = p.relabel(&lab.position());

    let mut key = Vec::with_capacity(2 + lab.code.len() + 8 * coloring.palette_size);
    key.push(coloring.palette_size as u8);
    key.push(n as u8);
    key.extend_from_slice(&lab.code);
    for (i, w) in coloring.palette.iter().enumerate() {
        if i > 0 {
            key.push(b',');
        }
        key.extend_from_slice(format_rational(w).as_bytes());
    }
    (CanonicalKey(key), relabeled)
}

/// Representatives of isomorphism classes, in canonical form, ordered by key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupStore {
    entries: BTreeMap<CanonicalKey, WeightedPoint>,
}

impl DedupStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores the canonical representative of `p`; `true` if its class was new.
    pub fn insert(&mut self, p: &WeightedPoint) -> bool {
        let (key, rep) = canonical_form(p);
        self.insert_canonical(key, rep)
    }

    /// Inserts an already canonized point.
    pub fn insert_canonical(&mut self, key: CanonicalKey, rep: WeightedPoint) -> bool {
        use std::collections::btree_map::Entry;
        match self.entries.entry(key) {
            Entry::Vacant(e) => {
                e.insert(rep);
                true
            }
            Entry::Occupied(_) => false,
        }
    }

    pub fn contains_key(&self, key: &CanonicalKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CanonicalKey, &WeightedPoint)> {
        self.entries.iter()
    }

    pub fn points(&self) -> impl Iterator<Item = &WeightedPoint> {
        self.entries.values()
    }

    pub fn keys(&self) -> impl Iterator<Item = &CanonicalKey> {
        self.entries.keys()
    }

    /// Key union with another store.
    pub fn merge(&mut self, other: DedupStore) {
        for (k, v) in other.entries {
            self.entries.entry(k).or_insert(v);
        }
    }
}

/// Free function form of [`DedupStore::insert`].
pub fn dedup_insert(store: &mut DedupStore, p: &WeightedPoint) -> bool {
    store.insert(p)
}

/// Exhaustive search for a weight-preserving vertex bijection from `p` to `q`.
pub fn isomorphic_bruteforce(p: &WeightedPoint, q: &WeightedPoint) -> bool {
    let n = p.n();
    if n != q.n() || p.graph().num_edges() != q.graph().num_edges() {
        return false;
    }
    let mut pw: Vec<&Rational> = p.weights().iter().collect();
    let mut qw: Vec<&Rational> = q.weights().iter().collect();
    pw.sort();
    qw.sort();
    if pw != qw {
        return false;
    }
    let invariant = |x: &WeightedPoint, v: usize| {
        let mut ws: Vec<Rational> = (0..x.n()).filter_map(|u| x.weight(u, v).cloned()).collect();
        ws.sort();
        ws
    };
    let pinv: Vec<_> = (0..n).map(|v| invariant(p, v)).collect();
    let qinv: Vec<_> = (0..n).map(|v| invariant(q, v)).collect();
    let mut ps = pinv.clone();
    let mut qs = qinv.clone();
    ps.sort();
    qs.sort();
    if ps != qs {
        return false;
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend_mapping(p, q, &pinv, &qinv, 0, &mut map, &mut used)
}

fn extend_mapping(
    p: &WeightedPoint,
    q: &WeightedPoint,
    pinv: &[Vec<Rational>],
    qinv: &[Vec<Rational>],
    v: usize,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    let n = p.n();
    if v == n {
        return true;
    }
    for t in 0..n {
        if used[t] || pinv[v] != qinv[t] {
            continue;
        }
        let consistent = (0..v).all(|u| p.weight(u, v) == q.weight(map[u], t));
        if !consistent {
            continue;
        }
        map[v] = t;
        used[t] = true;
        if extend_mapping(p, q, pinv, qinv, v + 1, map, used) {
            return true;
        }
        used[t] = false;
    }
    map[v] = usize::MAX;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{prism, prism_classic};
    use crate::rational::{frac, int};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_perm(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        p
    }

    #[test]
    fn coloring_examples() {
        let c = edge_color_classes(&prism_classic());
        assert_eq!(c.palette_size, 2);
        for (&(u, v), &col) in prism().edges().iter().zip(&c.colors) {
            assert_eq!(col, usize::from(v == u + 3));
        }
        let tour = WeightedPoint::tour(&[0, 1, 2, 3, 4]);
        let c = edge_color_classes(&tour);
        assert_eq!((c.palette_size, c.colors.clone()), (1, vec![0; 5]));
    }

    #[test]
    fn three_weight_palette_is_ascending() {
        let g = Graph::complete(4);
        let w = vec![frac(2, 3), frac(1, 3), int(1), int(1), frac(1, 3), frac(2, 3)];
        let p = WeightedPoint::new(g, w).unwrap();
        let c = edge_color_classes(&p);
        assert_eq!(c.palette, vec![frac(1, 3), frac(2, 3), int(1)]);
        assert_eq!(c.colors, vec![1, 0, 2, 2, 0, 1]);
    }

    #[test]
    fn key_is_invariant_under_relabeling() {
        let p = prism_classic();
        let (k0, rep0) = canonical_form(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let q = p.relabel(&random_perm(6, &mut rng));
            let (k, rep) = canonical_form(&q);
            assert_eq!(k, k0);
            assert_eq!(rep, rep0);
        }
        let (kt, _) = canonical_form(&WeightedPoint::tour(&[0, 1, 2, 3, 4, 5]));
        assert_ne!(kt, k0);
    }

    #[test]
    fn dedup_examples() {
        let mut store = DedupStore::new();
        let p = prism_classic();
        assert!(dedup_insert(&mut store, &p));
        assert!(!dedup_insert(&mut store, &p));
        assert!(!dedup_insert(&mut store, &p.relabel(&[5, 3, 4, 0, 2, 1])));
        assert!(dedup_insert(&mut store, &WeightedPoint::tour(&[0, 1, 2, 3, 4, 5])));
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn bruteforce_isomorphism_examples() {
        let p = prism_classic();
        assert!(isomorphic_bruteforce(&p, &p.relabel(&[3, 1, 5, 0, 4, 2])));
        assert!(!isomorphic_bruteforce(&p, &WeightedPoint::tour(&[0, 1, 2, 3, 4, 5])));
    }

    #[test]
    fn plain_graph_labeling_finds_cycle_automorphisms() {
        let g = Graph::cycle(7);
        let lab = canonical_labeling(7, &graph_matrix(&g));
        assert!(!lab.automorphisms.is_empty());
        for a in &lab.automorphisms {
            assert_eq!(g.relabel(a), g);
        }
        let empty = canonical_labeling(10, &[0; 100]);
        assert_eq!(empty.code, vec![0; 45]);
    }
}
