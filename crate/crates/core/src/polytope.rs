//! Faces of the subtour polytope obtained by fixing edges outside a support
//! graph to zero, and exact tests on points of those faces.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exact::rank_rational;
use crate::graph::Graph;
use crate::lp::{solve_lp_exact, LinearProgram, LpError};
use crate::rational::{int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PointError {
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weight of edge {0}-{1} is outside (0, 1]")]
    WeightRange(usize, usize),
    #[error("weights at vertex {0} sum to {1}, not 2")]
    DegreeSum(usize, Rational),
    #[error("cut of vertex set {0:#b} has weight {1} < 2")]
    CutViolated(u32, Rational),
    #[error("edge {0}-{1} of the point is not an edge of the graph")]
    NotSubgraph(usize, usize),
    #[error("expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// A point of the subtour polytope given on its support graph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WeightedPoint {
    graph: Graph,
    weights: Vec<Rational>,
}

impl WeightedPoint {
    /// Validates range, degree and cut conditions. `weights` follow
    /// `graph.edges()` order.
    pub fn new(graph: Graph, weights: Vec<Rational>) -> Result<Self, PointError> {
        if weights.len() != graph.num_edges() {
            return Err(PointError::WeightCount {
                expected: graph.num_edges(),
                got: weights.len(),
            });
        }
        for (&(u, v), w) in graph.edges().iter().zip(&weights) {
            if !w.is_positive() || *w > Rational::one() {
                return Err(PointError::WeightRange(u, v));
            }
        }
        let two = int(2);
        for v in 0..graph.n() {
            let s: Rational = incident(&graph, v).map(|i| &weights[i]).sum();
            if s != two {
                return Err(PointError::DegreeSum(v, s));
            }
        }
        for s in cut_sets(graph.n()) {
            let w = cut_weight(&graph, &weights, s);
            if w < two {
                return Err(PointError::CutViolated(s, w));
            }
        }
        Ok(Self { graph, weights })
    }

    /// Incidence vector of the Hamiltonian cycle visiting `order`.
    pub fn tour(order: &[usize]) -> Self {
        let n = order.len();
        let g = Graph::new(n, (0..n).map(|i| (order[i], order[(i + 1) % n]))).expect("tour order is a permutation");
        let w = vec![Rational::one(); g.num_edges()];
        Self::new(g, w).expect("a Hamiltonian cycle is a subtour point")
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Weights aligned with `graph().edges()`.
    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<&Rational> {
        self.graph.edge_index(u, v).map(|i| &self.weights[i])
    }

    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), &Rational)> {
        self.graph.edges().iter().copied().zip(&self.weights)
    }

    pub fn is_integral(&self) -> bool {
        self.weights.iter().all(|w| w.is_one())
    }

    /// All weights in `{1/2, 1}`.
    pub fn is_half_integral(&self) -> bool {
        self.weights.iter().all(|w| w.is_one() || (w * int(2)).is_one())
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let graph = self.graph.relabel(perm);
        let mut weights = vec![Rational::zero(); graph.num_edges()];
        for ((u, v), w) in self.edges() {
            let i = graph.edge_index(perm[u], perm[v]).expect("edge survives relabeling");
            weights[i] = w.clone();
        }
        Self { graph, weights }
    }

    /// Coordinates of this point over the edges of `g`, zero off the support.
    pub fn coordinates_on(&self, g: &Graph) -> Result<Vec<Rational>, PointError> {
        let mut x = vec![Rational::zero(); g.num_edges()];
        for ((u, v), w) in self.edges() {
            let i = g.edge_index(u, v).ok_or(PointError::NotSubgraph(u, v))?;
            x[i] = w.clone();
        }
        Ok(x)
    }
}

impl std::fmt::Debug for WeightedPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "WeightedPoint(n={}", self.n())?;
        for ((u, v), w) in self.edges() {
            write!(f, " {u}-{v}:{w}")?;
        }
        f.write_str(")")
    }
}

fn incident(g: &Graph, v: usize) -> impl Iterator<Item = usize> + '_ {
    g.edges()
        .iter()
        .enumerate()
        .filter(move |(_, &(a, b))| a == v || b == v)
        .map(|(i, _)| i)
}

fn cut_weight(g: &Graph, weights: &[Rational], s: u32) -> Rational {
    let mut w = Rational::zero();
    for (&(u, v), x) in g.edges().iter().zip(weights) {
        if ((s >> u) & 1) != ((s >> v) & 1) {
            w += x;
        }
    }
    w
}

/// Vertex sets `S ∋ 0` with `2 ≤ |S| ≤ n−2`, by increasing size and then
/// lexicographically, as bitmasks.
pub fn cut_sets(n: usize) -> Vec<u32> {
    let mut out = Vec::new();
    if n < 4 {
        return out;
    }
    for size in 2..=n - 2 {
        let mut combo: Vec<usize> = (1..size).collect();
        loop {
            out.push(combo.iter().fold(1u32, |m, &v| m | (1 << v)));
            // next (size-1)-combination of 1..n-1 in lexicographic order
            let k = combo.len();
            let mut i = k;
            while i > 0 && combo[i - 1] == n - 1 - (k - i) {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

/// A constraint row over the edge variables of a face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintRow {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
}

impl ConstraintRow {
    pub fn value(&self, x: &[Rational]) -> Rational {
        crate::lp::dot_rational(&self.coeffs, x)
    }
}

/// Exact H-representation of a face of the subtour polytope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub num_vars: usize,
    /// One degree row per vertex: `x(δ(v)) = 2`.
    pub equalities: Vec<ConstraintRow>,
    /// Cut rows `x(δ(S)) ≥ 2`, aligned with `cut_sets`.
    pub inequalities: Vec<ConstraintRow>,
    pub cut_sets: Vec<u32>,
    pub lower: Vec<Rational>,
    pub upper: Vec<Rational>,
}

impl LinearSystem {
    /// Bound rows as `≥` constraints: `x_e ≥ 0` for every edge, then `−x_e ≥ −1`.
    pub fn bound_rows(&self) -> Vec<ConstraintRow> {
        let unit = |e: usize, s: i64| {
            let mut c = vec![Rational::zero(); self.num_vars];
            c[e] = int(s);
            c
        };
        let lower = (0..self.num_vars).map(|e| ConstraintRow {
            coeffs: unit(e, 1),
            rhs: self.lower[e].clone(),
        });
        let upper = (0..self.num_vars).map(|e| ConstraintRow {
            coeffs: unit(e, -1),
            rhs: -self.upper[e].clone(),
        });
        lower.chain(upper).collect()
    }

    /// Cut rows followed by bound rows: every `≥` row of the system.
    pub fn ge_rows(&self) -> Vec<ConstraintRow> {
        let mut rows = self.inequalities.clone();
        rows.extend(self.bound_rows());
        rows
    }

    fn check_dim(&self, p: &[Rational]) -> Result<(), PointError> {
        if p.len() != self.num_vars {
            return Err(PointError::Dimension {
                expected: self.num_vars,
                got: p.len(),
            });
        }
        Ok(())
    }
}

/// The subtour polytope restricted to the edges of `g`.
pub fn build_face_system(g: &Graph) -> LinearSystem {
    let m = g.num_edges();
    let two = int(2);
    let row_for = |mask_pred: &dyn Fn(usize, usize) -> bool| {
        g.edges()
            .iter()
            .map(|&(u, v)| if mask_pred(u, v) { Rational::one() } else { Rational::zero() })
            .collect::<Vec<_>>()
    };
    let equalities = (0..g.n())
        .map(|v| ConstraintRow {
            coeffs: row_for(&|a, b| a == v || b == v),
            rhs: two.clone(),
        })
        .collect();
    let cut_sets = cut_sets(g.n());
    let inequalities = cut_sets
        .iter()
        .map(|&s| ConstraintRow {
            coeffs: row_for(&|a, b| ((s >> a) & 1) != ((s >> b) & 1)),
            rhs: two.clone(),
        })
        .collect();
    LinearSystem {
        num_vars: m,
        equalities,
        inequalities,
        cut_sets,
        lower: vec![Rational::zero(); m],
        upper: vec![Rational::one(); m],
    }
}

/// Exact membership test.
pub fn is_feasible(sys: &LinearSystem, p: &[Rational]) -> Result<bool, PointError> {
    sys.check_dim(p)?;
    let eq_ok = sys.equalities.iter().all(|r| r.value(p) == r.rhs);
    let bounds_ok = p
        .iter()
        .zip(sys.lower.iter().zip(&sys.upper))
        .all(|(x, (lo, hi))| lo <= x && x <= hi);
    let cuts_ok = sys.inequalities.iter().all(|r| r.value(p) >= r.rhs);
    Ok(eq_ok && bounds_ok && cuts_ok)
}

/// Rows of the system that hold with equality at `p`: all equalities plus
/// tight cut and bound rows.
pub fn tight_rows(sys: &LinearSystem, p: &[Rational]) -> Vec<ConstraintRow> {
    let mut rows = sys.equalities.clone();
    rows.extend(sys.ge_rows().into_iter().filter(|r| r.value(p) == r.rhs));
    rows
}

/// Rank of the tight rows at `p`.
pub fn tight_rank(sys: &LinearSystem, p: &[Rational]) -> Result<usize, PointError> {
    sys.check_dim(p)?;
    let rows: Vec<Vec<Rational>> = tight_rows(sys, p).into_iter().map(|r| r.coeffs).collect();
    Ok(rank_rational(&rows))
}

/// Rank test: the tight rows at `p` determine it uniquely.
pub fn is_extreme(g: &Graph, p: &WeightedPoint) -> Result<bool, PointError> {
    let x = p.coordinates_on(g)?;
    let sys = build_face_system(g);
    if !is_feasible(&sys, &x)? {
        return Ok(false);
    }
    Ok(tight_rank(&sys, &x)? == g.num_edges())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtremeTestError {
    #[error(transparent)]
    Point(#[from] PointError),
    #[error("point is not feasible for its face system")]
    Infeasible,
    #[error("coordinate LP failed: {0}")]
    Lp(#[from] LpError),
}

/// Coordinate-pinning test: on the minimal face containing `p` (all rows
/// tight at `p` held as equalities), minimizing and maximizing each
/// coordinate must return `p` itself.
pub fn extreme_test_independent(g: &Graph, p: &WeightedPoint) -> Result<bool, ExtremeTestError> {
    let x = p.coordinates_on(g)?;
    let sys = build_face_system(g);
    if !is_feasible(&sys, &x)? {
        return Err(ExtremeTestError::Infeasible);
    }
    let m = sys.num_vars;
    let mut base = LinearProgram::new(vec![Rational::zero(); m]);
    for r in &sys.equalities {
        base.push(r.coeffs.clone(), r.rhs.clone());
        base.push(r.coeffs.iter().map(|c| -c).collect(), -r.rhs.clone());
    }
    for r in sys.ge_rows() {
        let tight = r.value(&x) == r.rhs;
        if tight {
            base.push(r.coeffs.iter().map(|c| -c).collect(), -r.rhs.clone());
        }
        base.push(r.coeffs, r.rhs);
    }
    for e in 0..m {
        for sign in [1i64, -1] {
            let mut lp = base.clone();
            lp.objective = vec![Rational::zero(); m];
            lp.objective[e] = int(sign);
            let sol = solve_lp_exact(&lp).map_err(|e| match e {
                LpError::Infeasible => ExtremeTestError::Infeasible,
                other => ExtremeTestError::Lp(other),
            })?;
            if sol.primal[e] != x[e] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{k33, prism, prism_classic};
    use crate::rational::frac;


    #[test]
    fn face_system_sizes() {
        let sys = build_face_system(&prism());
        assert_eq!((sys.num_vars, sys.equalities.len(), sys.inequalities.len()), (9, 6, 25));
        assert_eq!(sys.bound_rows().len(), 18);
        let tri = build_face_system(&Graph::cycle(3));
        assert_eq!((tri.equalities.len(), tri.inequalities.len()), (3, 0));
        let k = build_face_system(&k33());
        assert_eq!((k.num_vars, k.equalities.len(), k.inequalities.len()), (9, 6, 25));
        for n in 4..=9 {
            assert_eq!(build_face_system(&Graph::complete(n)).inequalities.len(), (1 << (n - 1)) - n - 1);
        }
    }

    #[test]
    fn cut_sets_are_ordered_by_size_then_lexicographically() {
        let sets = cut_sets(5);
        let as_lists: Vec<Vec<usize>> = sets
            .iter()
            .map(|&s| (0..5).filter(|v| s >> v & 1 == 1).collect())
            .collect();
        assert_eq!(
            as_lists,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![0, 4],
                vec![0, 1, 2],
                vec![0, 1, 3],
                vec![0, 1, 4],
                vec![0, 2, 3],
                vec![0, 2, 4],
                vec![0, 3, 4]
            ]
        );
    }

    #[test]
    fn feasibility_examples() {
        let sys = build_face_system(&prism());
        let p = prism_classic();
        assert!(is_feasible(&sys, p.weights()).unwrap());
        assert!(is_feasible(&sys, &vec![frac(2, 3); 9]).unwrap());
        assert!(!is_feasible(&sys, &vec![int(1); 9]).unwrap());
        let tri = build_face_system(&Graph::cycle(3));
        assert!(is_feasible(&tri, &vec![int(1); 3]).unwrap());
        assert!(is_feasible(&tri, &vec![int(1); 2]).is_err());
    }

    #[test]
    fn tight_rank_examples() {
        let tri = build_face_system(&Graph::cycle(3));
        assert_eq!(tight_rank(&tri, &vec![int(1); 3]).unwrap(), 3);
        let sys = build_face_system(&prism());
        assert_eq!(tight_rank(&sys, prism_classic().weights()).unwrap(), 9);
        assert!(tight_rank(&sys, &vec![frac(2, 3); 9]).unwrap() < 9);
    }

    #[test]
    fn extreme_point_tests_agree_on_examples() {
        let p = prism_classic();
        assert!(is_extreme(&prism(), &p).unwrap());
        assert!(extreme_test_independent(&prism(), &p).unwrap());

        let k = k33();
        let q = WeightedPoint::new(k.clone(), vec![frac(2, 3); 9]).unwrap();
        assert!(!is_extreme(&k, &q).unwrap());
        assert!(!extreme_test_independent(&k, &q).unwrap());

        let tri = WeightedPoint::tour(&[0, 1, 2]);
        assert!(is_extreme(tri.graph(), &tri).unwrap());
        assert!(extreme_test_independent(tri.graph(), &tri).unwrap());

        for n in 4..=7 {
            let t = WeightedPoint::tour(&(0..n).collect::<Vec<_>>());
            assert!(is_extreme(t.graph(), &t).unwrap());
        }
    }

    #[test]
    fn weighted_point_validation() {
        let g = Graph::cycle(4);
        assert!(matches!(
            WeightedPoint::new(g.clone(), vec![int(1); 3]),
            Err(PointError::WeightCount { .. })
        ));
        assert!(matches!(
            WeightedPoint::new(g.clone(), vec![frac(1, 2); 4]),
            Err(PointError::DegreeSum(..))
        ));
        // Degree sums hold but the cut separating the triangles is empty.
        let two_triangles = Graph::new(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        assert!(matches!(
            WeightedPoint::new(two_triangles, vec![int(1); 6]),
            Err(PointError::CutViolated(..))
        ));
    }
}
