//! Dense two-phase simplex with deterministic pivoting.
//!
//! Small and self-contained on purpose: the capacity LPs are a few hundred
//! rows and columns, determinism matters more than speed, and the same
//! generic core runs both in `f64` (tolerance 1e-9) and in exact rational
//! arithmetic for small certification instances.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Variables needed before the exact-rational mode refuses an instance.
pub const MAX_EXACT_VARS: usize = 100;

const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200_000;
/// Degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `Σ coeffs · x = rhs`
    Eq,
    /// `Σ coeffs · x ≥ rhs`
    Ge,
}

/// One LP row, sparse.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective · x  s.t.  constraints, x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LpInstance {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

/// Scalar field the simplex runs over.
pub trait LpScalar:
    Clone
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_float(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Comparison tolerance: values within `±tol()` of zero are treated as zero.
    fn tol() -> Self;
}

impl LpScalar for f64 {
    fn from_float(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn tol() -> Self {
        FEASIBILITY_TOL
    }
}

impl LpScalar for BigRational {
    fn from_float(v: f64) -> Self {
        BigRational::from_f64(v).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        let num = self.numer();
        let den = self.denom();
        // good enough for reporting; exact callers keep the rational
        str_to_f64(num) / str_to_f64(den)
    }
    fn tol() -> Self {
        BigRational::zero()
    }
}

fn str_to_f64(v: &BigInt) -> f64 {
    v.to_string().parse::<f64>().unwrap_or(f64::NAN)
}

/// Solves in double precision.
pub fn solve(lp: &LpInstance) -> Result<LpSolution> {
    let x = simplex::<f64>(lp)?;
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { objective, x })
}

/// Solves in exact rational arithmetic. Coefficients are taken as the exact
/// values of their `f64` representations. Only for small instances.
pub fn solve_exact(lp: &LpInstance) -> Result<(BigRational, Vec<BigRational>)> {
    if lp.n_vars > MAX_EXACT_VARS {
        return Err(Error::Config(format!(
            "exact LP mode supports at most {MAX_EXACT_VARS} variables, got {}",
            lp.n_vars
        )));
    }
    let x = simplex::<BigRational>(lp)?;
    let mut objective = BigRational::zero();
    for (c, v) in lp.objective.iter().zip(&x) {
        objective += BigRational::from_f64(*c).unwrap() * v.clone();
    }
    Ok((objective, x))
}

/// Two-phase dense simplex. Returns the values of the original variables.
///
/// Pivoting is deterministic: largest reduced cost with smallest-index ties,
/// falling back to Bland's rule after a run of degenerate pivots; ratio-test
/// ties pick the row whose basic variable has the smallest index.
fn simplex<S: LpScalar>(lp: &LpInstance) -> Result<Vec<S>> {
    let m = lp.constraints.len();
    let n = lp.n_vars;
    let n_slack = lp.constraints.iter().filter(|c| c.relation == Relation::Ge).count();
    let total = n + n_slack + m; // structural + slack + artificial
    let width = total + 1; // plus rhs

    // Rows: structural coeffs, minus-slack for ≥ rows, one artificial each,
    // with rhs forced nonnegative.
    let mut tableau: Vec<Vec<S>> = Vec::with_capacity(m + 1);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut slack_idx = 0;
    for (i, row) in lp.constraints.iter().enumerate() {
        let mut t = vec![S::zero(); width];
        for &(j, v) in &row.coeffs {
            assert!(j < n, "constraint references variable {j} of {n}");
            t[j] = t[j].clone() + S::from_float(v);
        }
        let mut rhs = S::from_float(row.rhs);
        if row.relation == Relation::Ge {
            t[n + slack_idx] = -S::one();
            slack_idx += 1;
        }
        if rhs < S::zero() {
            for v in t.iter_mut() {
                *v = -v.clone();
            }
            rhs = -rhs;
        }
        t[n + n_slack + i] = S::one();
        t[total] = rhs;
        basis.push(n + n_slack + i);
        tableau.push(t);
    }

    // Phase 1: minimize the sum of artificials.
    let mut phase1 = vec![S::zero(); width];
    for row in &tableau {
        for (j, v) in phase1.iter_mut().enumerate() {
            *v = v.clone() - row[j].clone();
        }
    }
    for j in n + n_slack..total {
        phase1[j] = S::zero();
    }
    tableau.push(phase1);
    run_phase(&mut tableau, &mut basis, total, |_| true)?;
    let infeasibility = tableau[m][total].clone();
    if -infeasibility.clone() > S::tol() || infeasibility > S::tol() {
        return Err(Error::LpInfeasible);
    }
    // Pivot any artificial still in the basis out (or its row is redundant).
    for i in 0..m {
        if basis[i] >= n + n_slack {
            if let Some(j) = (0..n + n_slack).find(|&j| {
                let v = tableau[i][j].clone();
                v.clone() > S::tol() || -v > S::tol()
            }) {
                pivot(&mut tableau, &mut basis, i, j, total);
            }
        }
    }
    tableau.pop();

    // Phase 2: maximize the real objective (as minimizing its negation).
    let mut obj = vec![S::zero(); width];
    for (j, c) in lp.objective.iter().enumerate() {
        obj[j] = -S::from_float(*c);
    }
    // Express in terms of the current basis.
    for i in 0..m {
        let c = obj[basis[i]].clone();
        if c != S::zero() {
            for j in 0..width {
                obj[j] = obj[j].clone() - c.clone() * tableau[i][j].clone();
            }
        }
    }
    tableau.push(obj);
    run_phase(&mut tableau, &mut basis, total, |j| j < n + n_slack)?;

    let mut x = vec![S::zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tableau[i][total].clone();
        }
    }
    Ok(x)
}

fn pivot<S: LpScalar>(tableau: &mut [Vec<S>], basis: &mut [usize], row: usize, col: usize, total: usize) {
    let p = tableau[row][col].clone();
    for v in tableau[row].iter_mut() {
        *v = v.clone() / p.clone();
    }
    for i in 0..tableau.len() {
        if i == row {
            continue;
        }
        let factor = tableau[i][col].clone();
        if factor == S::zero() {
            continue;
        }
        for j in 0..=total {
            let delta = factor.clone() * tableau[row][j].clone();
            tableau[i][j] = tableau[i][j].clone() - delta;
        }
    }
    basis[row] = col;
}

fn run_phase<S: LpScalar>(
    tableau: &mut [Vec<S>],
    basis: &mut [usize],
    total: usize,
    eligible: impl Fn(usize) -> bool,
) -> Result<()> {
    let m = basis.len();
    let mut stall = 0usize;
    let mut bland = false;
    for _ in 0..MAX_ITERATIONS {
        let obj_row = tableau.len() - 1;
        // entering column: reduced cost below -tol
        let mut entering = None;
        for j in 0..total {
            if !eligible(j) {
                continue;
            }
            let c = tableau[obj_row][j].clone();
            if -c.clone() > S::tol() {
                if bland {
                    entering = Some(j);
                    break;
                }
                match entering {
                    Some(e) if tableau[obj_row][e].clone() <= c => {}
                    _ => entering = Some(j),
                }
            }
        }
        let Some(col) = entering else { return Ok(()) };
        // ratio test
        let mut leaving: Option<usize> = None;
        for i in 0..m {
            let a = tableau[i][col].clone();
            if a > S::tol() {
                let better = match leaving {
                    None => true,
                    Some(l) => {
                        let cur = tableau[l][total].clone() / tableau[l][col].clone();
                        let cand = tableau[i][total].clone() / a.clone();
                        cand < cur || (cand == cur && basis[i] < basis[l])
                    }
                };
                if better {
                    leaving = Some(i);
                }
            }
        }
        let Some(row) = leaving else { return Err(Error::LpUnbounded) };
        let before = tableau[obj_row][total].clone();
        pivot(tableau, basis, row, col, total);
        if tableau[obj_row][total] == before {
            stall += 1;
            if stall > STALL_LIMIT {
                bland = true;
            }
        } else {
            stall = 0;
        }
    }
    Err(Error::LpIterationLimit)
}
