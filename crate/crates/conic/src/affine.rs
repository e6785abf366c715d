//! Sparse affine forms over real scalar variables.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Index of a real scalar variable in a [`crate::ConicProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// `constant + sum(coeff * var)`, with terms kept sorted by variable and
/// free of exact zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineForm {
    constant: f64,
    terms: Vec<(VarId, f64)>,
}

impl AffineForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: VarId, coeff: f64) -> Self {
        let terms = if coeff == 0.0 { Vec::new() } else { vec![(v, coeff)] };
        Self {
            constant: 0.0,
            terms,
        }
    }

    /// Builds a form from unsorted terms; duplicate variables are summed.
    pub fn from_terms(constant: f64, terms: impl IntoIterator<Item = (VarId, f64)>) -> Self {
        let mut terms: Vec<(VarId, f64)> = terms.into_iter().collect();
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        Self {
            constant,
            terms: merged,
        }
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    pub fn coeff(&self, v: VarId) -> f64 {
        self.terms
            .binary_search_by_key(&v, |t| t.0)
            .map(|i| self.terms[i].1)
            .unwrap_or(0.0)
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.terms.last().map(|t| t.0)
    }

    /// Largest absolute value among the constant and the coefficients.
    pub fn max_abs(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.1.abs())
            .fold(self.constant.abs(), f64::max)
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &AffineForm, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.constant += scale * other.constant;
        if other.terms.is_empty() {
            return;
        }
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push((b[j].0, scale * b[j].1));
                j += 1;
            } else {
                let c = a[i].1 + scale * b[j].1;
                if c != 0.0 {
                    out.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        self.terms = out;
    }

    pub fn scaled(&self, s: f64) -> AffineForm {
        if s == 0.0 {
            return AffineForm::zero();
        }
        AffineForm {
            constant: self.constant * s,
            terms: self.terms.iter().map(|&(v, c)| (v, c * s)).collect(),
        }
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|t| t.1.abs() > tol);
        if self.constant.abs() <= tol {
            self.constant = 0.0;
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(v, c)| acc + c * x[v.index()])
    }

    /// Replaces every variable by an affine form in (possibly different)
    /// variables.
    pub fn substitute(&self, map: impl Fn(VarId) -> AffineForm) -> AffineForm {
        let mut out = AffineForm::constant(self.constant);
        for &(v, c) in &self.terms {
            out.add_scaled(&map(v), c);
        }
        out
    }
}

impl From<f64> for AffineForm {
    fn from(c: f64) -> Self {
        AffineForm::constant(c)
    }
}

impl AddAssign<&AffineForm> for AffineForm {
    fn add_assign(&mut self, rhs: &AffineForm) {
        self.add_scaled(rhs, 1.0);
    }
}

impl Add<&AffineForm> for AffineForm {
    type Output = AffineForm;
    fn add(mut self, rhs: &AffineForm) -> AffineForm {
        self += rhs;
        self
    }
}

impl Sub<&AffineForm> for AffineForm {
    type Output = AffineForm;
    fn sub(mut self, rhs: &AffineForm) -> AffineForm {
        self.add_scaled(rhs, -1.0);
        self
    }
}

impl Mul<f64> for &AffineForm {
    type Output = AffineForm;
    fn mul(self, rhs: f64) -> AffineForm {
        self.scaled(rhs)
    }
}

impl Neg for &AffineForm {
    type Output = AffineForm;
    fn neg(self) -> AffineForm {
        self.scaled(-1.0)
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (v, c) in &self.terms {
            write!(f, " {:+}*{}", c, v)?;
        }
        Ok(())
    }
}
