//! Dense exact primal simplex for `max c'x  s.t.  Ax <= b, x >= 0` with `b >= 0`.
//!
//! The slack basis is the starting point, so no phase one is needed. Pivoting
//! follows Bland's rule. Columns can be appended to a solved tableau, which is
//! what column generation does between pricing rounds.
//!
//! Arithmetic is generic over [`Scalar`]: `Ratio<i128>` with overflow checks
//! for speed, and `BigRational` as the fallback that never overflows.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, Zero};

use crate::rational::Rational;

/// Exact field operations that may report overflow with `None`.
pub trait Scalar: Clone + PartialOrd + Zero + One + std::fmt::Debug {
    fn cadd(&self, o: &Self) -> Option<Self>;
    fn csub(&self, o: &Self) -> Option<Self>;
    fn cmul(&self, o: &Self) -> Option<Self>;
    fn cdiv(&self, o: &Self) -> Option<Self>;
    fn from_rational(r: &Rational) -> Self;
    fn to_rational(&self) -> Option<Rational>;
    fn is_positive(&self) -> bool;
}

impl Scalar for Rational {
    fn cadd(&self, o: &Self) -> Option<Self> {
        self.checked_add(o)
    }
    fn csub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(o)
    }
    fn cmul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(o)
    }
    fn cdiv(&self, o: &Self) -> Option<Self> {
        self.checked_div(o)
    }
    fn from_rational(r: &Rational) -> Self {
        *r
    }
    fn to_rational(&self) -> Option<Rational> {
        Some(*self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

impl Scalar for BigRational {
    fn cadd(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn csub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn cmul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn cdiv(&self, o: &Self) -> Option<Self> {
        Some(self / o)
    }
    fn from_rational(r: &Rational) -> Self {
        BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
    }
    fn to_rational(&self) -> Option<Rational> {
        crate::rational::from_big(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimplexError {
    Overflow,
    Unbounded,
}

/// Solved (or in-progress) tableau.
///
/// Row `i` holds `B^-1 A` for constraint `i`; `cost` holds the reduced costs
/// `c_j - c_B B^-1 A_j`. Column indices `< structurals` are user variables,
/// the next `rows` are slacks.
#[derive(Debug, Clone)]
pub struct Tableau<T: Scalar> {
    rows: usize,
    /// Structural columns, then slack columns, column-major.
    columns: Vec<Vec<T>>,
    structurals: usize,
    rhs: Vec<T>,
    cost: Vec<T>,
    objective: T,
    basis: Vec<usize>,
    pub pivots: usize,
}

impl<T: Scalar> Tableau<T> {
    /// Tableau with only slack columns for `rows` constraints `<= rhs`.
    pub fn new(rhs: &[Rational]) -> Self {
        let rows = rhs.len();
        let columns = (0..rows)
            .map(|i| {
                let mut col = vec![T::zero(); rows];
                col[i] = T::one();
                col
            })
            .collect();
        Self {
            rows,
            columns,
            structurals: 0,
            rhs: rhs.iter().map(T::from_rational).collect(),
            cost: vec![T::zero(); rows],
            objective: T::zero(),
            basis: (0..rows).collect(),
            pivots: 0,
        }
    }

    fn slack_col(&self, i: usize) -> usize {
        self.columns.len() - self.rows + i
    }

    /// Dual value of constraint `i`: `(c_B B^-1)_i`.
    pub fn dual(&self, i: usize) -> Option<T> {
        T::zero().csub(&self.cost[self.slack_col(i)])
    }

    /// Appends a structural column with original coefficients `a` (sparse
    /// `(row, value)` pairs) and objective coefficient `c`. Returns its index.
    pub fn add_column(&mut self, a: &[(usize, Rational)], c: &Rational) -> Result<usize, SimplexError> {
        // B^-1 a from the slack block, and reduced cost c - y'a.
        let mut col = vec![T::zero(); self.rows];
        let mut reduced = T::from_rational(c);
        for (row, value) in a {
            if value.is_zero() {
                continue;
            }
            let v = T::from_rational(value);
            let slack = &self.columns[self.slack_col(*row)];
            for (dst, binv) in col.iter_mut().zip(slack) {
                if !binv.is_zero() {
                    *dst = dst.cadd(&binv.cmul(&v).ok_or(SimplexError::Overflow)?).ok_or(SimplexError::Overflow)?;
                }
            }
            let y = self.dual(*row).ok_or(SimplexError::Overflow)?;
            reduced = reduced.csub(&y.cmul(&v).ok_or(SimplexError::Overflow)?).ok_or(SimplexError::Overflow)?;
        }
        let idx = self.structurals;
        self.columns.insert(idx, col);
        self.cost.insert(idx, reduced);
        for b in &mut self.basis {
            if *b >= idx {
                *b += 1;
            }
        }
        self.structurals += 1;
        Ok(idx)
    }

    pub fn objective(&self) -> &T {
        &self.objective
    }

    /// Value of structural variable `j` in the current basic solution.
    pub fn value(&self, j: usize) -> T {
        match self.basis.iter().position(|&b| b == j) {
            Some(row) => self.rhs[row].clone(),
            None => T::zero(),
        }
    }

    pub fn structurals(&self) -> usize {
        self.structurals
    }

    fn pivot(&mut self, row: usize, col: usize) -> Result<(), SimplexError> {
        let of = |x: Option<T>| x.ok_or(SimplexError::Overflow);
        let p = self.columns[col][row].clone();
        // Normalize the pivot row.
        for column in &mut self.columns {
            if !column[row].is_zero() {
                column[row] = of(column[row].cdiv(&p))?;
            }
        }
        self.rhs[row] = of(self.rhs[row].cdiv(&p))?;
        // Eliminate the entering column from every other row and the cost row.
        let factors: Vec<T> = self.columns[col].clone();
        let cost_factor = self.cost[col].clone();
        for (j, column) in self.columns.iter_mut().enumerate() {
            let pr = column[row].clone();
            if pr.is_zero() {
                continue;
            }
            for i in 0..self.rows {
                if i != row && !factors[i].is_zero() {
                    column[i] = of(column[i].csub(&of(factors[i].cmul(&pr))?))?;
                }
            }
            if !cost_factor.is_zero() {
                self.cost[j] = of(self.cost[j].csub(&of(cost_factor.cmul(&pr))?))?;
            }
        }
        let pr = self.rhs[row].clone();
        if !pr.is_zero() {
            for i in 0..self.rows {
                if i != row && !factors[i].is_zero() {
                    self.rhs[i] = of(self.rhs[i].csub(&of(factors[i].cmul(&pr))?))?;
                }
            }
            if !cost_factor.is_zero() {
                self.objective = of(self.objective.cadd(&of(cost_factor.cmul(&pr))?))?;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
        Ok(())
    }

    /// Pivots to optimality with Bland's rule.
    pub fn optimize(&mut self) -> Result<(), SimplexError> {
        loop {
            let Some(enter) = (0..self.columns.len()).find(|&j| self.cost[j].is_positive()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows {
                let a = &self.columns[enter][i];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs[i].cdiv(a).ok_or(SimplexError::Overflow)?;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((row, _)) = leave else {
                return Err(SimplexError::Unbounded);
            };
            self.pivot(row, enter)?;
        }
    }
}
