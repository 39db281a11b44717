//! Vertex enumeration of face systems.
//!
//! The degree equalities are solved first, `x = x0 + N y`, and the remaining
//! rows are homogenized in `(y, t)` with `t ≥ 0`. The double description
//! method then inserts the rows one at a time (the homogenizing row, bounds,
//! then cuts by increasing `|S|`), maintaining the extreme rays of the cone
//! plus a basis of its lineality space. Two rays are combined only if the
//! rows tight at both have rank `dim − lineality − 2`. At the end every ray
//! must have `t > 0`; dividing by `t` gives the vertices.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exact::{self, convert_row, dot, normalize, solve_affine, with_fallback, Echelon, ExactInt, Overflow};
use crate::graph::Graph;
use crate::polytope::{is_extreme, is_feasible, tight_rank, ConstraintRow, LinearSystem, WeightedPoint};
use crate::rational::{format_rational, frac, int, to_integer_row, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("face system has an unbounded direction")]
    RayFound,
}

/// Vertices of a bounded face, deduplicated and ordered by their exact
/// coordinate strings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VRepresentation {
    pub vertices: Vec<Vec<Rational>>,
}

impl VRepresentation {
    fn from_iter(vs: impl IntoIterator<Item = Vec<Rational>>) -> Self {
        let map: BTreeMap<String, Vec<Rational>> = vs.into_iter().map(|v| (vertex_key(&v), v)).collect();
        Self {
            vertices: map.into_values().collect(),
        }
    }
}

/// Exact string key of a coordinate vector.
pub fn vertex_key(v: &[Rational]) -> String {
    v.iter().map(format_rational).collect::<Vec<_>>().join(",")
}

/// Degree-equality parametrization and homogenized inequality rows.
struct Reduced {
    offset: Vec<Rational>,
    basis: Vec<Vec<BigInt>>,
    /// Integer rows over `(y_0, …, y_{d−1}, t)` meaning `row · (y, t) ≥ 0`.
    rows: Vec<Vec<BigInt>>,
}

impl Reduced {
    fn dim(&self) -> usize {
        self.basis.len() + 1
    }

    fn new(sys: &LinearSystem, ge_rows: &[ConstraintRow]) -> Option<Self> {
        let a: Vec<Vec<Rational>> = sys.equalities.iter().map(|r| r.coeffs.clone()).collect();
        let b: Vec<Rational> = sys.equalities.iter().map(|r| r.rhs.clone()).collect();
        let sol = solve_affine(&a, &b, sys.num_vars)?;
        let basis_q: Vec<Vec<Rational>> = sol
            .basis
            .iter()
            .map(|v| v.iter().map(|x| Rational::from_integer(x.clone())).collect())
            .collect();
        let rows = ge_rows
            .iter()
            .map(|r| {
                let mut h: Vec<Rational> = basis_q.iter().map(|nk| crate::lp::dot_rational(&r.coeffs, nk)).collect();
                h.push(crate::lp::dot_rational(&r.coeffs, &sol.offset) - &r.rhs);
                let (mut row, _) = to_integer_row(&h);
                normalize(&mut row);
                row
            })
            .collect();
        Some(Self {
            offset: sol.offset,
            basis: sol.basis,
            rows,
        })
    }

    /// `x = offset + N y / t`.
    fn point(&self, ray: &[BigInt]) -> Vec<Rational> {
        let d = self.basis.len();
        let t = Rational::from_integer(ray[d].clone());
        let mut x = self.offset.clone();
        for (k, nk) in self.basis.iter().enumerate() {
            if ray[k].is_zero() {
                continue;
            }
            let yk = Rational::from_integer(ray[k].clone()) / &t;
            for (xi, ni) in x.iter_mut().zip(nk) {
                if !ni.is_zero() {
                    *xi += &yk * Rational::from_integer(ni.clone());
                }
            }
        }
        x
    }
}

/// All rows in double-description insertion order: `t ≥ 0`, bounds, cuts.
fn insertion_rows(sys: &LinearSystem) -> Vec<ConstraintRow> {
    let mut rows = sys.bound_rows();
    rows.extend(sys.inequalities.iter().cloned());
    rows
}

/// Vertices of the face described by `sys`; empty iff the face is empty.
pub fn enumerate_vertices(sys: &LinearSystem) -> Result<VRepresentation, EnumError> {
    let rows = insertion_rows(sys);
    let Some(red) = Reduced::new(sys, &rows) else {
        return Ok(VRepresentation::default());
    };
    let dim = red.dim();
    let mut all_rows = Vec::with_capacity(red.rows.len() + 1);
    let mut homog = vec![BigInt::zero(); dim];
    homog[dim - 1] = BigInt::one();
    all_rows.push(homog);
    all_rows.extend(red.rows.iter().cloned());

    let rays = with_fallback(
        || {
            let rows = all_rows.iter().map(|r| convert_row::<i128>(r)).collect::<Result<Vec<_>, _>>()?;
            let out = double_description(&rows, dim)?;
            Ok(out.map(|rs| rs.iter().map(|r| r.iter().map(|x| x.to_big()).collect::<Vec<_>>()).collect::<Vec<_>>()))
        },
        || double_description(&all_rows, dim),
    )?;
    let mut vertices = Vec::with_capacity(rays.len());
    for r in rays {
        if !r[dim - 1].is_positive() {
            return Err(EnumError::RayFound);
        }
        vertices.push(red.point(&r));
    }
    Ok(VRepresentation::from_iter(vertices))
}

struct Ray<T> {
    v: Vec<T>,
    tight: Vec<u64>,
}

fn bit(set: &[u64], i: usize) -> bool {
    set[i / 64] >> (i % 64) & 1 == 1
}

fn set_bit(set: &mut [u64], i: usize) {
    set[i / 64] |= 1 << (i % 64);
}

/// Extreme rays of `{z : row · z ≥ 0 for all rows}`. Returns
/// `Err(RayFound)` if a lineality direction survives.
fn double_description<T: ExactInt>(
    rows: &[Vec<T>],
    dim: usize,
) -> Result<Result<Vec<Vec<T>>, EnumError>, Overflow> {
    let words = rows.len().div_ceil(64);
    let mut lineality: Vec<Vec<T>> = (0..dim)
        .map(|i| {
            let mut e = vec![T::zero(); dim];
            e[i] = T::one();
            e
        })
        .collect();
    let mut rays: Vec<Ray<T>> = Vec::new();

    for (k, a) in rows.iter().enumerate() {
        let lin_vals: Vec<T> = lineality.iter().map(|l| dot(a, l)).collect::<Result<_, _>>()?;
        if let Some(li) = lin_vals.iter().position(|v| !v.is_zero()) {
            let mut l = lineality.swap_remove(li);
            let mut al = lin_vals[li].clone();
            let mut lin_vals = lin_vals;
            lin_vals.swap_remove(li);
            if al.is_negative() {
                l.iter_mut().for_each(|x| *x = -x.clone());
                al = -al;
            }
            for (other, val) in lineality.iter_mut().zip(&lin_vals) {
                if !val.is_zero() {
                    for (o, lx) in other.iter_mut().zip(&l) {
                        *o = exact::cross(o, &al, val, lx)?;
                    }
                    normalize(other);
                }
            }
            for r in rays.iter_mut() {
                let val = dot(a, &r.v)?;
                if !val.is_zero() {
                    for (o, lx) in r.v.iter_mut().zip(&l) {
                        *o = exact::cross(o, &al, &val, lx)?;
                    }
                    normalize(&mut r.v);
                }
                set_bit(&mut r.tight, k);
            }
            let mut tight = vec![0u64; words];
            for j in 0..k {
                set_bit(&mut tight, j);
            }
            rays.push(Ray { v: l, tight });
            continue;
        }

        let vals: Vec<T> = rays.iter().map(|r| dot(a, &r.v)).collect::<Result<_, _>>()?;
        if vals.iter().all(|v| !v.is_negative()) {
            for (r, v) in rays.iter_mut().zip(&vals) {
                if v.is_zero() {
                    set_bit(&mut r.tight, k);
                }
            }
            continue;
        }
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        let free_dim = dim - lineality.len();
        let needed = free_dim.saturating_sub(2);
        let mut created = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common: Vec<u64> = rays[p].tight.iter().zip(&rays[q].tight).map(|(x, y)| x & y).collect();
                let count: u32 = common.iter().map(|w| w.count_ones()).sum();
                if (count as usize) < needed {
                    continue;
                }
                if !rank_reaches(rows, &common, k, needed)? {
                    continue;
                }
                let mut v = Vec::with_capacity(dim);
                for (xp, xq) in rays[p].v.iter().zip(&rays[q].v) {
                    v.push(exact::cross(&vals[p], xq, &vals[q], xp)?);
                }
                normalize(&mut v);
                let mut tight = common;
                set_bit(&mut tight, k);
                created.push(Ray { v, tight });
            }
        }
        let mut kept: Vec<Ray<T>> = Vec::with_capacity(rays.len() + created.len());
        for (mut r, v) in rays.into_iter().zip(vals) {
            if v.is_negative() {
                continue;
            }
            if v.is_zero() {
                set_bit(&mut r.tight, k);
            }
            kept.push(r);
        }
        kept.extend(created);
        rays = kept;
    }
    if !lineality.is_empty() {
        return Ok(Err(EnumError::RayFound));
    }
    Ok(Ok(rays.into_iter().map(|r| r.v).collect()))
}

/// Whether the rows in `set` (among the first `k`) have rank `needed`.
fn rank_reaches<T: ExactInt>(rows: &[Vec<T>], set: &[u64], k: usize, needed: usize) -> Result<bool, Overflow> {
    if needed == 0 {
        return Ok(true);
    }
    let mut ech = Echelon::new();
    for (i, row) in rows.iter().enumerate().take(k) {
        if bit(set, i) && ech.insert(row.clone())? && ech.rank() == needed {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Vertices with every coordinate strictly positive, as points supported on `g`.
pub fn filter_full_support(g: &Graph, vrep: &VRepresentation) -> Vec<WeightedPoint> {
    vrep.vertices
        .iter()
        .filter(|v| v.iter().all(|x| x.is_positive()))
        .map(|v| WeightedPoint::new(g.clone(), v.clone()).expect("face vertices are subtour points"))
        .collect()
}

/// Extreme points on support `g` with all weights in `{1/2, 1}`.
///
/// A vertex of degree 2, 3 or 4 must carry exactly 2, 1 or 0 edges of weight
/// 1 respectively, so the weight-1 edges are enumerated as a degree-
/// constrained subgraph by backtracking; each assignment is then checked for
/// cut feasibility and extremeness.
pub fn enumerate_half_integral(g: &Graph) -> Vec<WeightedPoint> {
    let n = g.n();
    let mut need = Vec::with_capacity(n);
    for v in 0..n {
        match g.degree(v) {
            2 => need.push(2),
            3 => need.push(1),
            4 => need.push(0),
            _ => return Vec::new(),
        }
    }
    let mut remaining: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut chosen = vec![false; g.num_edges()];
    let mut out = Vec::new();
    assign_one_edges(g, 0, &mut need, &mut remaining, &mut chosen, &mut out);
    out
}

fn assign_one_edges(
    g: &Graph,
    e: usize,
    need: &mut [usize],
    remaining: &mut [usize],
    chosen: &mut [bool],
    out: &mut Vec<WeightedPoint>,
) {
    if e == g.num_edges() {
        if need.iter().all(|&x| x == 0) {
            let weights = chosen.iter().map(|&c| if c { int(1) } else { frac(1, 2) }).collect();
            if let Ok(p) = WeightedPoint::new(g.clone(), weights) {
                if is_extreme(g, &p).expect("point lives on g") {
                    out.push(p);
                }
            }
        }
        return;
    }
    let (u, v) = g.edges()[e];
    remaining[u] -= 1;
    remaining[v] -= 1;
    // weight 1
    if need[u] > 0 && need[v] > 0 {
        need[u] -= 1;
        need[v] -= 1;
        if need[u] <= remaining[u] && need[v] <= remaining[v] {
            chosen[e] = true;
            assign_one_edges(g, e + 1, need, remaining, chosen, out);
            chosen[e] = false;
        }
        need[u] += 1;
        need[v] += 1;
    }
    // weight 1/2
    if need[u] <= remaining[u] && need[v] <= remaining[v] {
        assign_one_edges(g, e + 1, need, remaining, chosen, out);
    }
    remaining[u] += 1;
    remaining[v] += 1;
}

/// Cross-checks `vrep` against a basis-enumeration oracle: every choice of
/// `num_vars − rank(equalities)` inequality or bound rows is solved together
/// with the equalities, and feasible unique solutions are collected.
pub fn verify_vertex_cross(sys: &LinearSystem, vrep: &VRepresentation) -> bool {
    let oracle = brute_force_vertices(sys);
    let ours: Vec<String> = vrep.vertices.iter().map(|v| vertex_key(v)).collect();
    let theirs: Vec<String> = oracle.vertices.iter().map(|v| vertex_key(v)).collect();
    ours == theirs
}

/// Vertex set by solving every square subsystem of tight rows.
pub fn brute_force_vertices(sys: &LinearSystem) -> VRepresentation {
    let ge = sys.ge_rows();
    let Some(red) = Reduced::new(sys, &ge) else {
        return VRepresentation::default();
    };
    let d = red.basis.len();
    let found = with_fallback(
        || {
            let rows = red.rows.iter().map(|r| convert_row::<i128>(r)).collect::<Result<Vec<_>, _>>()?;
            basis_enumeration(&rows, d)
        },
        || basis_enumeration(&red.rows, d),
    );
    let vertices = found
        .into_iter()
        .map(|r| red.point(&r))
        .filter(|x| {
            is_feasible(sys, x).expect("dimension matches") && tight_rank(sys, x).expect("dimension matches") == sys.num_vars
        })
        .collect::<Vec<_>>();
    VRepresentation::from_iter(vertices)
}

/// For each `d`-subset of rows `[a | c]` solve `a·y = −c` and keep solutions
/// satisfying every row; returned as homogeneous `(y·t, t)` with `t > 0`.
fn basis_enumeration<T: ExactInt>(rows: &[Vec<T>], d: usize) -> Result<Vec<Vec<BigInt>>, Overflow> {
    let mut out = Vec::new();
    if d == 0 {
        let ok = rows.iter().all(|r| !r[0].is_negative());
        if ok {
            out.push(vec![BigInt::one()]);
        }
        return Ok(out);
    }
    if rows.len() < d {
        return Ok(out);
    }
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let a: Vec<Vec<T>> = idx.iter().map(|&i| rows[i][..d].to_vec()).collect();
        let b: Vec<T> = idx.iter().map(|&i| -rows[i][d].clone()).collect();
        if let Some((num, den)) = exact::solve_square(&a, &b)? {
            let mut z = num;
            z.push(den);
            let mut feasible = true;
            for r in rows {
                if dot(r, &z)?.is_negative() {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                out.push(z.iter().map(|x| x.to_big()).collect());
            }
        }
        let mut i = d;
        while i > 0 && idx[i - 1] == rows.len() - d + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{k33, prism, prism_classic};
    use crate::polytope::build_face_system;

    #[test]
    fn triangle_has_one_vertex() {
        let sys = build_face_system(&Graph::cycle(3));
        let vrep = enumerate_vertices(&sys).unwrap();
        assert_eq!(vrep.vertices, vec![vec![int(1); 3]]);
        assert!(verify_vertex_cross(&sys, &vrep));
        let pts = filter_full_support(&Graph::cycle(3), &vrep);
        assert_eq!(pts.len(), 1);
    }

    #[test]
    fn prism_face_vertices() {
        let g = prism();
        let sys = build_face_system(&g);
        let vrep = enumerate_vertices(&sys).unwrap();
        let classic = prism_classic();
        assert!(vrep.vertices.contains(&classic.weights().to_vec()));
        // Hamiltonian cycles of the prism: 0-1-2-5-4-3, 0-2-1-4-5-3, 0-1-4-5-2-... enumerate by brute force.
        let cycles = hamiltonian_cycles(&g);
        assert!(!cycles.is_empty());
        for c in &cycles {
            assert!(vrep.vertices.contains(c));
        }
        for v in &vrep.vertices {
            assert_eq!(tight_rank(&sys, v).unwrap(), sys.num_vars);
        }
        assert!(verify_vertex_cross(&sys, &vrep));
        assert_eq!(filter_full_support(&g, &vrep), vec![classic]);
    }

    #[test]
    fn k33_has_no_full_support_vertex() {
        let g = k33();
        let sys = build_face_system(&g);
        let vrep = enumerate_vertices(&sys).unwrap();
        assert!(!vrep.vertices.is_empty());
        assert!(vrep.vertices.iter().all(|v| v.iter().any(|x| x.is_zero())));
        assert!(verify_vertex_cross(&sys, &vrep));
        assert!(filter_full_support(&g, &vrep).is_empty());
    }

    #[test]
    fn half_integral_examples() {
        assert_eq!(enumerate_half_integral(&prism()), vec![prism_classic()]);
        assert!(enumerate_half_integral(&k33()).is_empty());
        // K4: three degree-3 vertices would each need one 1-edge, but four
        // degree-3 vertices need a perfect matching of 1-edges; the remaining
        // 1/2-edges form a 4-cycle, and the result is not extreme.
        assert!(enumerate_half_integral(&Graph::complete(4)).is_empty());
        assert!(enumerate_half_integral(&Graph::complete(6)).is_empty());
    }

    /// Incidence vectors of the Hamiltonian cycles of `g`, by brute force.
    fn hamiltonian_cycles(g: &Graph) -> Vec<Vec<Rational>> {
        let n = g.n();
        let mut out = Vec::new();
        let mut path = vec![0];
        fn rec(g: &Graph, path: &mut Vec<usize>, out: &mut Vec<Vec<Rational>>) {
            let n = g.n();
            if path.len() == n {
                if g.has_edge(path[n - 1], 0) && path[1] < path[n - 1] {
                    let mut x = vec![Rational::zero(); g.num_edges()];
                    for i in 0..n {
                        x[g.edge_index(path[i], path[(i + 1) % n]).unwrap()] = int(1);
                    }
                    out.push(x);
                }
                return;
            }
            for v in 0..n {
                if !path.contains(&v) && g.has_edge(*path.last().unwrap(), v) {
                    path.push(v);
                    rec(g, path, out);
                    path.pop();
                }
            }
        }
        rec(g, &mut path, &mut out);
        let _ = n;
        out
    }
}
