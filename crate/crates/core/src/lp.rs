//! Exact rational linear programming.
//!
//! Problems have the form `min c·x` subject to `A x ≥ b`, `x ≥ 0`. They are
//! solved through their dual `max b·y` subject to `Aᵀ y ≤ c`, `y ≥ 0` with a
//! primal simplex on an integer-preserving (fraction-free) tableau and
//! Bland's rule. Each row of `A` is a column of the dual tableau, so adding
//! a cutting plane to the primal appends a column and keeps the current
//! basis feasible: re-optimization is a warm start.
//!
//! The optimal `x` is read from the reduced costs of the dual slack columns.
//! Every returned solution is re-checked in rational arithmetic for primal
//! feasibility, dual feasibility and equality of the objective values.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::exact::{self, ExactInt, Overflow};
use crate::rational::{common_denominator, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("exact verification of the optimal solution failed: {0}")]
    Verification(String),
}

/// A constraint `coeffs · x ≥ rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeRow {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
}

impl GeRow {
    pub fn new(coeffs: Vec<Rational>, rhs: Rational) -> Self {
        Self { coeffs, rhs }
    }
}

/// `min objective · x` s.t. every row holds and `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<GeRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub primal: Vec<Rational>,
    /// One nonnegative multiplier per constraint row.
    pub dual: Vec<Rational>,
    pub value: Rational,
}

impl LinearProgram {
    pub fn new(objective: Vec<Rational>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_vars(), "constraint width mismatch");
        self.constraints.push(GeRow::new(coeffs, rhs));
    }

    /// Checks primal feasibility, dual feasibility and strong duality exactly.
    pub fn verify(&self, sol: &LpSolution) -> Result<(), LpError> {
        let fail = |m: String| Err(LpError::Verification(m));
        if sol.primal.len() != self.num_vars() || sol.dual.len() != self.constraints.len() {
            return fail("dimension mismatch".into());
        }
        if let Some(j) = sol.primal.iter().position(|v| v.is_negative()) {
            return fail(format!("primal variable {j} is negative"));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if dot_rational(&row.coeffs, &sol.primal) < row.rhs {
                return fail(format!("primal constraint {i} is violated"));
            }
        }
        if let Some(i) = sol.dual.iter().position(|v| v.is_negative()) {
            return fail(format!("dual multiplier {i} is negative"));
        }
        for j in 0..self.num_vars() {
            let mut lhs = Rational::zero();
            for (row, y) in self.constraints.iter().zip(&sol.dual) {
                if !y.is_zero() && !row.coeffs[j].is_zero() {
                    lhs += &row.coeffs[j] * y;
                }
            }
            if lhs > self.objective[j] {
                return fail(format!("dual constraint {j} is violated"));
            }
        }
        let primal_value = dot_rational(&self.objective, &sol.primal);
        let dual_value: Rational = self
            .constraints
            .iter()
            .zip(&sol.dual)
            .map(|(row, y)| &row.rhs * y)
            .sum();
        if primal_value != dual_value || primal_value != sol.value {
            return fail(format!("duality gap: primal {primal_value}, dual {dual_value}"));
        }
        Ok(())
    }
}

pub(crate) fn dot_rational(a: &[Rational], b: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

/// Solves `lp` exactly and verifies the result.
pub fn solve_lp_exact(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let mut solver = IncrementalLp::new(lp.objective.clone());
    for row in &lp.constraints {
        solver.add_constraint(row.coeffs.clone(), row.rhs.clone());
    }
    solver.solve()
}

/// An LP that accepts additional `≥` rows between solves.
///
/// Rows added after construction must have coefficients whose denominators
/// divide the per-variable scale fixed by the first [`IncrementalLp::solve`];
/// integer rows always qualify.
#[derive(Debug, Clone)]
pub struct IncrementalLp {
    lp: LinearProgram,
    engine: Option<Engine>,
}

#[derive(Debug, Clone)]
enum Engine {
    Small(DualTableau<i128>),
    Big(DualTableau<BigInt>),
}

impl IncrementalLp {
    pub fn new(objective: Vec<Rational>) -> Self {
        Self {
            lp: LinearProgram::new(objective),
            engine: None,
        }
    }

    pub fn program(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        self.lp.push(coeffs, rhs);
        let row = self.lp.constraints.last().expect("just pushed");
        let ok = match &mut self.engine {
            None => true,
            Some(Engine::Small(t)) => t.add_row(row).is_ok(),
            Some(Engine::Big(t)) => t.add_row(row).is_ok(),
        };
        if !ok {
            self.engine = None;
        }
    }

    pub fn solve(&mut self) -> Result<LpSolution, LpError> {
        let sol = loop {
            match self.engine.take() {
                None => match DualTableau::<i128>::build(&self.lp) {
                    Ok(t) => self.engine = Some(Engine::Small(t)),
                    Err(Overflow) => {
                        let t = DualTableau::<BigInt>::build(&self.lp).expect("BigInt cannot overflow");
                        self.engine = Some(Engine::Big(t));
                    }
                },
                Some(Engine::Small(mut t)) => match t.optimize(&self.lp) {
                    Ok(r) => {
                        self.engine = Some(Engine::Small(t));
                        break r?;
                    }
                    Err(Overflow) => {
                        let t = DualTableau::<BigInt>::build(&self.lp).expect("BigInt cannot overflow");
                        self.engine = Some(Engine::Big(t));
                    }
                },
                Some(Engine::Big(mut t)) => {
                    let r = t.optimize(&self.lp).expect("BigInt cannot overflow");
                    self.engine = Some(Engine::Big(t));
                    break r?;
                }
            }
        };
        self.lp.verify(&sol)?;
        Ok(sol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Fraction-free tableau of the dual problem.
///
/// Row `j` is the dual constraint of primal variable `j`. Columns are
/// `[slack_0..slack_{n-1} | artificial_0..artificial_{n-1} | y_0..]`, with one
/// `y` column per primal constraint. `rows[j] / det` is `B⁻¹` applied to the
/// constraint matrix; `det > 0` throughout.
#[derive(Debug, Clone)]
struct DualTableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    reduced: Vec<T>,
    value: T,
    det: T,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// `-1` for dual rows negated to make the right-hand side nonnegative.
    flipped: Vec<bool>,
    /// Per primal variable scale that makes its dual row integral.
    col_scale: Vec<BigInt>,
    /// Global scale of the dual objective.
    obj_scale: BigInt,
    /// Scaled dual objective coefficient per column.
    obj: Vec<T>,
    phase: Phase,
}

impl<T: ExactInt> DualTableau<T> {
    fn n(&self) -> usize {
        self.rows.len()
    }

    fn slack(&self, j: usize) -> usize {
        j
    }

    fn artificial(&self, j: usize) -> usize {
        self.n() + j
    }

    fn build(lp: &LinearProgram) -> Result<Self, Overflow> {
        let n = lp.num_vars();
        let col_scale: Vec<BigInt> = (0..n)
            .map(|j| {
                common_denominator(
                    std::iter::once(&lp.objective[j]).chain(lp.constraints.iter().map(|r| &r.coeffs[j])),
                )
            })
            .collect();
        let obj_scale = common_denominator(lp.constraints.iter().map(|r| &r.rhs));
        let mut t = Self {
            rows: vec![Vec::new(); n],
            rhs: Vec::with_capacity(n),
            reduced: Vec::new(),
            value: T::zero(),
            det: T::one(),
            basis: Vec::with_capacity(n),
            is_basic: Vec::new(),
            flipped: Vec::with_capacity(n),
            col_scale,
            obj_scale,
            obj: Vec::new(),
            phase: Phase::One,
        };
        for j in 0..n {
            let c: T = scaled(&lp.objective[j], &t.col_scale[j])?;
            let flip = c.is_negative();
            t.flipped.push(flip);
            t.rhs.push(if flip { -c } else { c });
        }
        for j in 0..n {
            let mut row = vec![T::zero(); 2 * n];
            row[j] = if t.flipped[j] { -T::one() } else { T::one() };
            if t.flipped[j] {
                row[n + j] = T::one();
            }
            t.rows[j] = row;
            t.basis.push(if t.flipped[j] { n + j } else { j });
        }
        t.obj = vec![T::zero(); 2 * n];
        t.is_basic = vec![false; 2 * n];
        for &b in &t.basis {
            t.is_basic[b] = true;
        }
        for row in &lp.constraints {
            t.push_column(row)?;
        }
        t.reset_objective()?;
        Ok(t)
    }

    /// Appends the column of a primal constraint in original coordinates.
    fn push_column(&mut self, row: &crate::lp::GeRow) -> Result<(), Overflow> {
        let n = self.n();
        let mut col = Vec::with_capacity(n);
        for j in 0..n {
            let mut v: T = scaled(&row.coeffs[j], &self.col_scale[j])?;
            if self.flipped[j] {
                v = -v;
            }
            col.push(v);
        }
        let b = scaled(&row.rhs, &self.obj_scale)?;
        self.obj.push(b);
        self.is_basic.push(false);
        // Initial basis columns are unit vectors, so B⁻¹·col = Σ_j col_j · (column of e_j).
        let mut tcol = vec![T::zero(); n];
        for (j, cj) in col.iter().enumerate() {
            if cj.is_zero() {
                continue;
            }
            let unit = if self.flipped[j] { self.artificial(j) } else { self.slack(j) };
            for (i, r) in self.rows.iter().enumerate() {
                if !r[unit].is_zero() {
                    tcol[i] = exact::add(&tcol[i], &exact::mul(cj, &r[unit])?)?;
                }
            }
        }
        for (r, v) in self.rows.iter_mut().zip(tcol) {
            r.push(v);
        }
        Ok(())
    }

    fn add_row(&mut self, row: &GeRow) -> Result<(), Overflow> {
        let n = self.n();
        for j in 0..n {
            let s = &row.coeffs[j] * Rational::from_integer(self.col_scale[j].clone());
            if !s.is_integer() {
                return Err(Overflow);
            }
        }
        let b = &row.rhs * Rational::from_integer(self.obj_scale.clone());
        if !b.is_integer() {
            // Rescale the dual objective so the new coefficient is integral.
            let factor = b.denom().clone();
            let f = T::from_big(&factor).ok_or(Overflow)?;
            for o in self.obj.iter_mut() {
                *o = exact::mul(o, &f)?;
            }
            for r in self.reduced.iter_mut() {
                *r = exact::mul(r, &f)?;
            }
            self.value = exact::mul(&self.value, &f)?;
            self.obj_scale *= factor;
        }
        self.push_column(row)?;
        if self.phase == Phase::One {
            return self.reset_objective();
        }
        let col = self.obj.len() - 1;
        // Reduced cost of the new column: c_B·B⁻¹·a − D·b.
        let mut rc = T::zero();
        for (i, r) in self.rows.iter().enumerate() {
            let cb = &self.obj[self.basis[i]];
            if !cb.is_zero() && !r[col].is_zero() {
                rc = exact::add(&rc, &exact::mul(cb, &r[col])?)?;
            }
        }
        rc = exact::sub(&rc, &exact::mul(&self.det, &self.obj[col])?)?;
        self.reduced.push(rc);
        Ok(())
    }

    /// Recomputes reduced costs and the objective value for the current phase.
    fn reset_objective(&mut self) -> Result<(), Overflow> {
        let n = self.n();
        let width = self.obj.len();
        let cost = |c: usize, this: &Self| -> T {
            match this.phase {
                Phase::One => {
                    if c >= n && c < 2 * n {
                        -T::one()
                    } else {
                        T::zero()
                    }
                }
                Phase::Two => this.obj[c].clone(),
            }
        };
        let cb: Vec<T> = self.basis.iter().map(|&b| cost(b, self)).collect();
        let mut reduced = Vec::with_capacity(width);
        for c in 0..width {
            let mut acc = T::zero();
            for (i, r) in self.rows.iter().enumerate() {
                if !cb[i].is_zero() && !r[c].is_zero() {
                    acc = exact::add(&acc, &exact::mul(&cb[i], &r[c])?)?;
                }
            }
            acc = exact::sub(&acc, &exact::mul(&self.det, &cost(c, self))?)?;
            reduced.push(acc);
        }
        let mut value = T::zero();
        for (i, c) in cb.iter().enumerate() {
            if !c.is_zero() {
                value = exact::add(&value, &exact::mul(c, &self.rhs[i])?)?;
            }
        }
        self.reduced = reduced;
        self.value = value;
        Ok(())
    }

    fn enterable(&self, c: usize) -> bool {
        let n = self.n();
        !self.is_basic[c] && !(self.phase == Phase::Two && c >= n && c < 2 * n)
    }

    fn pivot(&mut self, p: usize, q: usize) -> Result<(), Overflow> {
        let piv = self.rows[p][q].clone();
        let det = self.det.clone();
        let prow = self.rows[p].clone();
        let prhs = self.rhs[p].clone();
        let div = |x: T| -> T {
            debug_assert!(x.is_multiple_of(&det));
            x.div_floor(&det)
        };
        for i in 0..self.n() {
            if i == p {
                continue;
            }
            let f = self.rows[i][q].clone();
            let row = &mut self.rows[i];
            if f.is_zero() {
                if piv == det {
                    continue;
                }
                for x in row.iter_mut() {
                    if !x.is_zero() {
                        *x = div(exact::mul(x, &piv)?);
                    }
                }
                self.rhs[i] = div(exact::mul(&self.rhs[i], &piv)?);
            } else {
                for (x, pv) in row.iter_mut().zip(&prow) {
                    if pv.is_zero() {
                        if !x.is_zero() && piv != det {
                            *x = div(exact::mul(x, &piv)?);
                        }
                    } else {
                        *x = div(exact::cross(x, &piv, &f, pv)?);
                    }
                }
                self.rhs[i] = div(exact::cross(&self.rhs[i], &piv, &f, &prhs)?);
            }
        }
        let f = self.reduced[q].clone();
        for (x, pv) in self.reduced.iter_mut().zip(&prow) {
            *x = div(exact::cross(x, &piv, &f, pv)?);
        }
        self.value = div(exact::cross(&self.value, &piv, &f, &prhs)?);
        self.det = piv;
        if self.det.is_negative() {
            for row in self.rows.iter_mut() {
                for x in row.iter_mut() {
                    *x = -x.clone();
                }
            }
            for x in self.rhs.iter_mut().chain(self.reduced.iter_mut()) {
                *x = -x.clone();
            }
            self.value = -self.value.clone();
            self.det = -self.det.clone();
        }
        self.is_basic[self.basis[p]] = false;
        self.is_basic[q] = true;
        self.basis[p] = q;
        Ok(())
    }

    /// Bland's rule iterations until optimal. Returns `false` if unbounded.
    fn run_simplex(&mut self) -> Result<bool, Overflow> {
        loop {
            let Some(q) = (0..self.reduced.len()).find(|&c| self.enterable(c) && self.reduced[c].is_negative())
            else {
                return Ok(true);
            };
            let mut leave: Option<usize> = None;
            for i in 0..self.n() {
                let a = &self.rows[i][q];
                if !a.is_positive() {
                    continue;
                }
                leave = match leave {
                    None => Some(i),
                    Some(k) => {
                        let lhs = exact::mul(&self.rhs[i], &self.rows[k][q])?;
                        let rhs = exact::mul(&self.rhs[k], a)?;
                        if lhs < rhs || (lhs == rhs && self.basis[i] < self.basis[k]) {
                            Some(i)
                        } else {
                            Some(k)
                        }
                    }
                };
            }
            match leave {
                Some(p) => self.pivot(p, q)?,
                None => return Ok(false),
            }
        }
    }

    fn optimize(&mut self, lp: &LinearProgram) -> Result<Result<LpSolution, LpError>, Overflow> {
        let n = self.n();
        if self.phase == Phase::One {
            if self.basis.iter().any(|&b| b >= n && b < 2 * n) {
                let bounded = self.run_simplex()?;
                debug_assert!(bounded, "phase one objective is bounded by zero");
                if self.value.is_negative() {
                    return Ok(Err(self.classify_dual_infeasible(lp)));
                }
                // Drive remaining zero-valued artificials out of the basis.
                for p in 0..n {
                    let b = self.basis[p];
                    if b >= n && b < 2 * n {
                        let q = (0..self.obj.len())
                            .find(|&c| !(c >= n && c < 2 * n) && !self.is_basic[c] && !self.rows[p][c].is_zero())
                            .expect("slack columns span every dual row");
                        self.pivot(p, q)?;
                    }
                }
            }
            self.phase = Phase::Two;
            self.reset_objective()?;
        }
        if !self.run_simplex()? {
            return Ok(Err(LpError::Infeasible));
        }
        Ok(Ok(self.extract(lp)))
    }

    /// Dual infeasible means the primal is unbounded or infeasible; a
    /// zero-objective solve tells the two apart.
    fn classify_dual_infeasible(&self, lp: &LinearProgram) -> LpError {
        let mut probe = IncrementalLp::new(vec![Rational::zero(); lp.num_vars()]);
        for r in &lp.constraints {
            probe.add_constraint(r.coeffs.clone(), r.rhs.clone());
        }
        match probe.solve() {
            Ok(_) => LpError::Unbounded,
            Err(e) => e,
        }
    }

    fn extract(&self, lp: &LinearProgram) -> LpSolution {
        let n = self.n();
        let det = Rational::from_integer(self.det.to_big());
        let mut dual = vec![Rational::zero(); lp.constraints.len()];
        for (i, &b) in self.basis.iter().enumerate() {
            if b >= 2 * n {
                dual[b - 2 * n] = Rational::from_integer(self.rhs[i].to_big()) / &det;
            }
        }
        let obj_scale = Rational::from_integer(self.obj_scale.clone());
        let primal = (0..n)
            .map(|j| {
                let rc = Rational::from_integer(self.reduced[self.slack(j)].to_big());
                rc * Rational::from_integer(self.col_scale[j].clone()) / (&det * &obj_scale)
            })
            .collect();
        let value = Rational::from_integer(self.value.to_big()) / (&det * &obj_scale);
        debug_assert!(dual.len() == lp.constraints.len());
        LpSolution { primal, dual, value }
    }
}

fn scaled<T: ExactInt>(v: &Rational, scale: &BigInt) -> Result<T, Overflow> {
    let s = v * Rational::from_integer(scale.clone());
    debug_assert!(s.is_integer());
    T::from_big(&s.to_integer()).ok_or(Overflow)
}
