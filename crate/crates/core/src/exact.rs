//! Checked integer arithmetic shared by the exact solvers.
//!
//! Hot loops run on `i128` and fall back to `BigInt` when an intermediate
//! value overflows; both paths compute identical results.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::rational::{to_integer_row, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overflow;

pub trait ExactInt:
    Clone + Ord + Signed + Integer + CheckedMul + CheckedAdd + CheckedSub + Debug + Send + Sync
{
    fn from_big(b: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn from_i64(v: i64) -> Self;
}

impl ExactInt for i128 {
    fn from_big(b: &BigInt) -> Option<Self> {
        b.to_i128()
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn from_i64(v: i64) -> Self {
        v as i128
    }
}

impl ExactInt for BigInt {
    fn from_big(b: &BigInt) -> Option<Self> {
        Some(b.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
}

#[inline]
pub fn mul<T: ExactInt>(a: &T, b: &T) -> Result<T, Overflow> {
    a.checked_mul(b).ok_or(Overflow)
}

#[inline]
pub fn add<T: ExactInt>(a: &T, b: &T) -> Result<T, Overflow> {
    a.checked_add(b).ok_or(Overflow)
}

#[inline]
pub fn sub<T: ExactInt>(a: &T, b: &T) -> Result<T, Overflow> {
    a.checked_sub(b).ok_or(Overflow)
}

/// `a*b - c*d` with overflow detection.
#[inline]
pub fn cross<T: ExactInt>(a: &T, b: &T, c: &T, d: &T) -> Result<T, Overflow> {
    sub(&mul(a, b)?, &mul(c, d)?)
}

pub fn dot<T: ExactInt>(a: &[T], b: &[T]) -> Result<T, Overflow> {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        if x.is_zero() || y.is_zero() {
            continue;
        }
        acc = add(&acc, &mul(x, y)?)?;
    }
    Ok(acc)
}

/// Divides a vector by the gcd of its entries.
pub fn normalize<T: ExactInt>(v: &mut [T]) {
    let mut g = T::zero();
    for x in v.iter() {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                return;
            }
        }
    }
    if g.is_zero() || g.is_one() {
        return;
    }
    for x in v.iter_mut() {
        *x = x.div_floor(&g);
    }
}

pub fn convert_row<T: ExactInt>(row: &[BigInt]) -> Result<Vec<T>, Overflow> {
    row.iter().map(|b| T::from_big(b).ok_or(Overflow)).collect()
}

/// Runs `f` on `i128` and retries on `BigInt` if it overflows.
pub fn with_fallback<R>(
    fast: impl FnOnce() -> Result<R, Overflow>,
    slow: impl FnOnce() -> Result<R, Overflow>,
) -> R {
    match fast() {
        Ok(r) => r,
        Err(Overflow) => slow().expect("BigInt arithmetic cannot overflow"),
    }
}

/// Rank over the rationals of integer rows, by fraction-free elimination.
pub fn rank_int<T: ExactInt>(rows: &[Vec<T>]) -> Result<usize, Overflow> {
    let mut basis: Vec<(usize, Vec<T>)> = Vec::new();
    let max_rank = rows.first().map_or(0, Vec::len);
    for row in rows {
        if let Some(reduced) = reduce_against(&basis, row.clone())? {
            basis.push(reduced);
            if basis.len() == max_rank {
                break;
            }
        }
    }
    Ok(basis.len())
}

/// Eliminates `row` against an echelon basis; returns the new pivot row if
/// `row` is independent.
fn reduce_against<T: ExactInt>(
    basis: &[(usize, Vec<T>)],
    mut row: Vec<T>,
) -> Result<Option<(usize, Vec<T>)>, Overflow> {
    for (pivot, brow) in basis {
        let f = row[*pivot].clone();
        if f.is_zero() {
            continue;
        }
        let p = &brow[*pivot];
        for (x, b) in row.iter_mut().zip(brow) {
            *x = cross(x, p, &f, b)?;
        }
        normalize(&mut row);
    }
    Ok(row.iter().position(|x| !x.is_zero()).map(|p| (p, row)))
}

/// Incremental echelon basis used when rows arrive one at a time.
#[derive(Debug, Clone)]
pub struct Echelon<T> {
    rows: Vec<(usize, Vec<T>)>,
}

impl<T: ExactInt> Echelon<T> {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Returns `true` if `row` increased the rank.
    pub fn insert(&mut self, row: Vec<T>) -> Result<bool, Overflow> {
        match reduce_against(&self.rows, row)? {
            Some(r) => {
                self.rows.push(r);
                Ok(true)
            }
            None => Ok(false),
        }
    }
}

impl<T: ExactInt> Default for Echelon<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Rank of rational rows.
pub fn rank_rational(rows: &[Vec<Rational>]) -> usize {
    let int_rows: Vec<Vec<BigInt>> = rows.iter().map(|r| to_integer_row(r).0).collect();
    with_fallback(
        || {
            let rows = int_rows
                .iter()
                .map(|r| convert_row::<i128>(r))
                .collect::<Result<Vec<_>, _>>()?;
            rank_int(&rows)
        },
        || rank_int(&int_rows),
    )
}

/// Solution set `x = offset + sum_k y_k * basis[k]` of a linear system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSolution {
    pub offset: Vec<Rational>,
    /// Integer spanning vectors of the null space.
    pub basis: Vec<Vec<BigInt>>,
    pub rank: usize,
}

/// Solves `a x = b` over the rationals, returning `None` when inconsistent.
pub fn solve_affine(a: &[Vec<Rational>], b: &[Rational], num_vars: usize) -> Option<AffineSolution> {
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..num_vars {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..=num_vars {
                    let delta = &f * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    if m[r..].iter().any(|row| !row[num_vars].is_zero()) {
        return None;
    }
    let mut offset = vec![Rational::zero(); num_vars];
    for (i, &c) in pivots.iter().enumerate() {
        offset[c] = m[i][num_vars].clone();
    }
    let mut basis = Vec::new();
    for free in (0..num_vars).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Rational::zero(); num_vars];
        v[free] = Rational::one();
        for (i, &c) in pivots.iter().enumerate() {
            v[c] = -m[i][free].clone();
        }
        basis.push(to_integer_row(&v).0);
    }
    Some(AffineSolution {
        offset,
        basis,
        rank: pivots.len(),
    })
}

/// Solves a square integer system `a x = b`. Returns `(numerators, denominator)`
/// with a positive denominator, or `None` if `a` is singular.
pub fn solve_square<T: ExactInt>(a: &[Vec<T>], b: &[T]) -> Result<Option<(Vec<T>, T)>, Overflow> {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Ok(None);
        };
        m.swap(c, p);
        for i in 0..n {
            if i == c || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            let piv = m[c][c].clone();
            for j in 0..=n {
                m[i][j] = cross(&m[i][j], &piv, &f, &m[c][j])?;
            }
            normalize(&mut m[i]);
        }
    }
    // Diagonal form: x_i = m[i][n] / m[i][i]; bring to a common denominator.
    let mut den = T::one();
    for (i, row) in m.iter().enumerate() {
        den = den.lcm(&row[i]);
    }
    if den.is_negative() {
        den = -den;
    }
    let mut num = Vec::with_capacity(n);
    for (i, row) in m.iter().enumerate() {
        let scale = den.div_floor(&row[i]);
        num.push(mul(&row[n], &scale)?);
    }
    Ok(Some((num, den)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn rank_of_dependent_rows() {
        let rows: Vec<Vec<i128>> = vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 2, 1]];
        assert_eq!(rank_int(&rows).unwrap(), 2);
        let rows: Vec<Vec<i128>> = vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]];
        assert_eq!(rank_int(&rows).unwrap(), 3);
    }

    #[test]
    fn overflow_falls_back_to_bigint() {
        let big = i128::MAX / 2;
        let rows = vec![vec![int(1), int(0)], vec![Rational::from_integer(big.into()), int(3)]];
        assert_eq!(rank_rational(&rows), 2);
        let rows = vec![
            vec![Rational::from_integer(big.into()), Rational::from_integer(big.into())],
            vec![Rational::from_integer((big - 1).into()), Rational::from_integer(big.into())],
        ];
        assert_eq!(rank_rational(&rows), 2);
    }

    #[test]
    fn affine_solution_of_triangle_degrees() {
        // x01 + x02 = 2, x01 + x12 = 2, x02 + x12 = 2
        let a = vec![
            vec![int(1), int(1), int(0)],
            vec![int(1), int(0), int(1)],
            vec![int(0), int(1), int(1)],
        ];
        let b = vec![int(2), int(2), int(2)];
        let sol = solve_affine(&a, &b, 3).unwrap();
        assert_eq!(sol.offset, vec![int(1), int(1), int(1)]);
        assert!(sol.basis.is_empty());
        let inconsistent = solve_affine(&[vec![int(1)], vec![int(1)]], &[int(1), int(2)], 1);
        assert!(inconsistent.is_none());
    }

    #[test]
    fn square_solve_matches_hand_computation() {
        let a: Vec<Vec<i128>> = vec![vec![2, 1], vec![1, 3]];
        let (num, den) = solve_square(&a, &[1, 2]).unwrap().unwrap();
        // x = 1/5, y = 3/5
        assert_eq!(frac(num[0] as i64, den as i64), frac(1, 5));
        assert_eq!(frac(num[1] as i64, den as i64), frac(3, 5));
        let singular: Vec<Vec<i128>> = vec![vec![1, 2], vec![2, 4]];
        assert!(solve_square(&singular, &[1, 2]).unwrap().is_none());
    }
}
