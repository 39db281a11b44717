//! Integrality gaps of extreme points.
//!
//! For a point `x`, `1/gap⁺(x) = min x·c` over metric costs `c` on all
//! pairs with every tour costing at least 1. The triangle inequalities are
//! all present from the start; tour constraints are separated with an exact
//! Held–Karp oracle and added until the oracle finds no violated tour.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::canon::DedupStore;
use crate::exact::{self, with_fallback, ExactInt, Overflow};
use crate::lp::{IncrementalLp, LpError};
use crate::polytope::WeightedPoint;
use crate::rational::{common_denominator, int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GapError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("tour {0:?} was separated twice")]
    RepeatedTour(Vec<usize>),
    #[error("certificate rejected: {0}")]
    Certificate(String),
}

/// Index of the pair `{i, j}` in the lexicographic order of all pairs.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    debug_assert!(a != b && b < n);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

pub fn num_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Costs on all pairs of `{0, …, n−1}`, indexed by [`pair_index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricCost {
    n: usize,
    values: Vec<Rational>,
}

impl MetricCost {
    pub fn new(n: usize, values: Vec<Rational>) -> Self {
        assert_eq!(values.len(), num_pairs(n), "one cost per pair");
        Self { n, values }
    }

    pub fn uniform(n: usize, value: Rational) -> Self {
        Self::new(n, vec![value; num_pairs(n)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.values[pair_index(self.n, i, j)]
    }

    /// Nonnegativity and every triangle inequality.
    pub fn is_metric(&self) -> bool {
        let n = self.n;
        if self.values.iter().any(|v| v.is_negative()) {
            return false;
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i != j && j != k && i != k && self.get(i, j) + self.get(j, k) < *self.get(i, k) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn tour_cost(&self, tour: &[usize]) -> Rational {
        let n = tour.len();
        (0..n).map(|i| self.get(tour[i], tour[(i + 1) % n])).sum()
    }
}

/// Rotates `tour` to start at its minimum and picks the direction whose
/// second vertex is smaller.
pub fn canonical_tour(tour: &[usize]) -> Vec<usize> {
    let n = tour.len();
    let start = (0..n).min_by_key(|&i| tour[i]).expect("nonempty tour");
    let fwd: Vec<usize> = (0..n).map(|k| tour[(start + k) % n]).collect();
    let bwd: Vec<usize> = (0..n).map(|k| tour[(start + n - k) % n]).collect();
    fwd.min(bwd)
}

/// Tours added as cutting planes, in canonical form and insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TourSet {
    pub tours: Vec<Vec<usize>>,
}

impl TourSet {
    pub fn contains(&self, tour: &[usize]) -> bool {
        let c = canonical_tour(tour);
        self.tours.contains(&c)
    }
}

/// A minimum-cost tour and its cost, by Held–Karp dynamic programming.
///
/// Among optimal tours the lexicographically smallest vertex sequence
/// starting at 0 is returned, which is also in canonical direction.
pub fn min_tour(c: &MetricCost, n: usize) -> (Vec<usize>, Rational) {
    assert!((3..=20).contains(&n) && c.n() == n, "min_tour needs 3 ≤ n ≤ 20");
    let den = common_denominator(c.values());
    let scaled: Vec<BigInt> = c
        .values()
        .iter()
        .map(|v| (v * Rational::from_integer(den.clone())).to_integer())
        .collect();
    let (tour, cost) = with_fallback(
        || {
            let w = scaled.iter().map(|x| i128::from_big(x).ok_or(Overflow)).collect::<Result<Vec<_>, _>>()?;
            let (t, v) = held_karp(n, &w)?;
            Ok((t, v.to_big()))
        },
        || held_karp(n, &scaled),
    );
    (tour, Rational::new(cost, den))
}

fn held_karp<T: ExactInt>(n: usize, w: &[T]) -> Result<(Vec<usize>, T), Overflow> {
    let cost = |i: usize, j: usize| &w[pair_index(n, i, j)];
    // Vertices 1..n are bit positions 0..n−1 of `mask`; `h[mask][j]` is the
    // cheapest way to go from `j` through every vertex outside `mask` back to 0.
    let m = n - 1;
    let full = (1usize << m) - 1;
    let idx = |mask: usize, j: usize| mask * m + (j - 1);
    let mut h: Vec<Option<T>> = vec![None; (full + 1) * m];
    for j in 1..n {
        h[idx(full, j)] = Some(cost(j, 0).clone());
    }
    for mask in (1..full).rev() {
        for j in 1..n {
            if mask >> (j - 1) & 1 == 0 {
                continue;
            }
            let mut best: Option<T> = None;
            for k in 1..n {
                if mask >> (k - 1) & 1 == 1 {
                    continue;
                }
                let rest = h[idx(mask | 1 << (k - 1), k)].as_ref().expect("superset computed first");
                let v = exact::add(cost(j, k), rest)?;
                if best.as_ref().is_none_or(|b| v < *b) {
                    best = Some(v);
                }
            }
            h[idx(mask, j)] = best;
        }
    }
    let total_from = |mask: usize, cur: usize, k: usize| -> Result<T, Overflow> {
        exact::add(cost(cur, k), h[idx(mask | 1 << (k - 1), k)].as_ref().expect("computed"))
    };
    let mut best: Option<T> = None;
    for k in 1..n {
        let v = total_from(0, 0, k)?;
        if best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v);
        }
    }
    let optimum = best.expect("n ≥ 3");
    let mut tour = vec![0];
    let mut mask = 0usize;
    let mut cur = 0;
    let mut remaining = optimum.clone();
    while mask != full {
        let mut next = None;
        for k in 1..n {
            if mask >> (k - 1) & 1 == 0 && total_from(mask, cur, k)? == remaining {
                next = Some(k);
                break;
            }
        }
        let k = next.expect("an optimal continuation exists");
        remaining = exact::sub(&remaining, cost(cur, k))?;
        mask |= 1 << (k - 1);
        cur = k;
        tour.push(k);
    }
    Ok((tour, optimum))
}

/// Exact gap of one point, with everything needed to re-check it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapCertificate {
    pub point: WeightedPoint,
    pub lp_value: Rational,
    pub gap_plus: Rational,
    pub optimal_cost: MetricCost,
    /// Multipliers of the triangle rows followed by the tour rows.
    pub dual: Vec<Rational>,
    pub active_tours: TourSet,
    /// Right-hand side of the tour constraints.
    pub tour_rhs: Rational,
}

/// Triangle rows `c_ij + c_jk − c_ik ≥ 0`, three per triple, in a fixed order.
pub fn triangle_rows(n: usize) -> Vec<(usize, usize, usize)> {
    let mut rows = Vec::with_capacity(3 * n * n.saturating_sub(1) * n.saturating_sub(2) / 6);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                // the named pair is the side bounded by the other two
                rows.push((a, b, c));
                rows.push((b, a, c));
                rows.push((a, c, b));
            }
        }
    }
    rows
}

/// `(i, k, j)` encodes `c_ik + c_kj − c_ij ≥ 0`.
fn triangle_coeffs(n: usize, (i, k, j): (usize, usize, usize)) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); num_pairs(n)];
    row[pair_index(n, i, k)] = int(1);
    row[pair_index(n, k, j)] = int(1);
    row[pair_index(n, i, j)] = int(-1);
    row
}

fn tour_coeffs(n: usize, tour: &[usize]) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); num_pairs(n)];
    for i in 0..n {
        row[pair_index(n, tour[i], tour[(i + 1) % n])] += int(1);
    }
    row
}

fn objective(p: &WeightedPoint) -> Vec<Rational> {
    let n = p.n();
    let mut obj = vec![Rational::zero(); num_pairs(n)];
    for ((u, v), x) in p.edges() {
        obj[pair_index(n, u, v)] = x.clone();
    }
    obj
}

pub fn gap_plus(p: &WeightedPoint) -> Result<GapCertificate, GapError> {
    gap_plus_with_rhs(p, &int(1))
}

/// As [`gap_plus`] with tour constraints `c(t) ≥ κ`; `gap_plus` is
/// `κ / lp_value`.
pub fn gap_plus_with_rhs(p: &WeightedPoint, kappa: &Rational) -> Result<GapCertificate, GapError> {
    assert!(kappa.is_positive(), "tour right-hand side must be positive");
    let n = p.n();
    let mut lp = IncrementalLp::new(objective(p));
    for t in triangle_rows(n) {
        lp.add_constraint(triangle_coeffs(n, t), Rational::zero());
    }
    let mut tours = TourSet::default();
    let seed: Vec<usize> = (0..n).collect();
    lp.add_constraint(tour_coeffs(n, &seed), kappa.clone());
    tours.tours.push(seed);
    loop {
        let sol = lp.solve()?;
        let cost = MetricCost::new(n, sol.primal.clone());
        let (tour, value) = min_tour(&cost, n);
        if value >= *kappa {
            let cert = GapCertificate {
                point: p.clone(),
                gap_plus: kappa / &sol.value,
                lp_value: sol.value,
                optimal_cost: cost,
                dual: sol.dual,
                active_tours: tours,
                tour_rhs: kappa.clone(),
            };
            verify_certificate(&cert)?;
            return Ok(cert);
        }
        if tours.contains(&tour) {
            return Err(GapError::RepeatedTour(tour));
        }
        lp.add_constraint(tour_coeffs(n, &tour), kappa.clone());
        tours.tours.push(tour);
    }
}

/// Re-checks a certificate from scratch: metric and tour feasibility of
/// the cost (with a fresh oracle call), dual feasibility and equality of
/// primal and dual objective values.
pub fn verify_certificate(cert: &GapCertificate) -> Result<(), GapError> {
    let fail = |m: &str| Err(GapError::Certificate(m.to_string()));
    let p = &cert.point;
    let n = p.n();
    let c = &cert.optimal_cost;
    if c.n() != n {
        return fail("cost dimension");
    }
    if !c.is_metric() {
        return fail("cost is not a metric");
    }
    if min_tour(c, n).1 < cert.tour_rhs {
        return fail("some tour is too cheap");
    }
    let tri = triangle_rows(n);
    if cert.dual.len() != tri.len() + cert.active_tours.tours.len() {
        return fail("dual length");
    }
    if cert.dual.iter().any(|y| y.is_negative()) {
        return fail("negative multiplier");
    }
    let obj = objective(p);
    let mut combined = vec![Rational::zero(); num_pairs(n)];
    for (t, y) in tri.iter().zip(&cert.dual) {
        if !y.is_zero() {
            for (acc, a) in combined.iter_mut().zip(triangle_coeffs(n, *t)) {
                *acc += &a * y;
            }
        }
    }
    let tour_duals = &cert.dual[tri.len()..];
    let mut dual_value = Rational::zero();
    for (tour, y) in cert.active_tours.tours.iter().zip(tour_duals) {
        if tour.len() != n || tour.iter().collect::<BTreeSet<_>>().len() != n {
            return fail("malformed tour");
        }
        if !y.is_zero() {
            for (acc, a) in combined.iter_mut().zip(tour_coeffs(n, tour)) {
                *acc += &a * y;
            }
            dual_value += y * &cert.tour_rhs;
        }
    }
    if combined.iter().zip(&obj).any(|(a, o)| a > o) {
        return fail("dual constraint violated");
    }
    let primal_value: Rational = obj.iter().zip(c.values()).map(|(o, v)| o * v).sum();
    if primal_value != dual_value || primal_value != cert.lp_value {
        return fail("objective values differ");
    }
    if &cert.gap_plus * &cert.lp_value != cert.tour_rhs {
        return fail("gap is not the ratio of the right-hand side and the LP value");
    }
    Ok(())
}

/// Gaps of every point of `store`, in store order.
pub fn gap_all(store: &DedupStore) -> Result<Vec<GapCertificate>, GapError> {
    let points: Vec<&WeightedPoint> = store.points().collect();
    points.par_iter().map(|p| gap_plus(p)).collect()
}

/// Largest gap among `certs` and every certificate attaining it.
pub fn max_gap_of(certs: &[GapCertificate]) -> Option<(Rational, Vec<&GapCertificate>)> {
    let best = certs.iter().map(|c| &c.gap_plus).max()?.clone();
    let attaining = certs.iter().filter(|c| c.gap_plus == best).collect();
    Some((best, attaining))
}

/// Largest gap over `store` and the points attaining it.
pub fn max_gap(store: &DedupStore) -> Result<(Rational, Vec<WeightedPoint>), GapError> {
    let certs = gap_all(store)?;
    Ok(match max_gap_of(&certs) {
        Some((g, at)) => (g, at.into_iter().map(|c| c.point.clone()).collect()),
        None => (Rational::one(), Vec::new()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::prism_classic;
    use crate::rational::frac;

    #[test]
    fn pair_index_is_dense() {
        let n = 7;
        let mut seen = vec![false; num_pairs(n)];
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(pair_index(n, i, j), pair_index(n, j, i));
                seen[pair_index(n, i, j)] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn min_tour_small_cases() {
        let (t, v) = min_tour(&MetricCost::uniform(5, frac(1, 5)), 5);
        assert_eq!((t, v), (vec![0, 1, 2, 3, 4], int(1)));
        assert_eq!(min_tour(&MetricCost::uniform(4, int(0)), 4).1, int(0));
        let mut vals = vec![int(2); 6];
        vals[pair_index(4, 0, 1)] = int(1);
        vals[pair_index(4, 2, 3)] = int(1);
        let (t, v) = min_tour(&MetricCost::new(4, vals), 4);
        assert_eq!(v, int(6));
        assert_eq!(t, vec![0, 1, 2, 3]);
    }

    #[test]
    fn canonical_tour_direction() {
        assert_eq!(canonical_tour(&[2, 0, 3, 1]), vec![0, 2, 1, 3]);
        assert_eq!(canonical_tour(&[3, 1, 0, 2]), vec![0, 1, 3, 2]);
    }

    #[test]
    fn tour_has_gap_one() {
        let cert = gap_plus(&WeightedPoint::tour(&[0, 2, 4, 1, 3, 5])).unwrap();
        assert_eq!(cert.gap_plus, int(1));
    }

    #[test]
    fn prism_gap() {
        let cert = gap_plus(&prism_classic()).unwrap();
        assert_eq!(cert.lp_value, frac(9, 10));
        assert_eq!(cert.gap_plus, frac(10, 9));
        verify_certificate(&cert).unwrap();
    }

    #[test]
    fn tampered_certificate_is_rejected() {
        let mut cert = gap_plus(&prism_classic()).unwrap();
        cert.lp_value = frac(8, 9);
        assert!(verify_certificate(&cert).is_err());
    }
}
