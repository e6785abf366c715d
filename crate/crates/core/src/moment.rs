//! The relaxation variable: a translation-invariant linear functional on
//! the operators of a finite window.

use std::collections::HashMap;
use std::io::{Read, Write};

use kmsbound_conic::{AffineForm, ConicProgram, PsdBlock, VarId};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Window;
use crate::pauli::{i_pow, PauliOperator, PauliString, SiteIndex};

/// Largest window a functional may live on.
pub const MAX_WINDOW_SITES: usize = 10;

/// `re + i im` with real affine parts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexForm {
    pub re: AffineForm,
    pub im: AffineForm,
}

impl ComplexForm {
    pub fn constant(c: Complex64) -> Self {
        Self {
            re: AffineForm::constant(c.re),
            im: AffineForm::constant(c.im),
        }
    }

    pub fn real(re: AffineForm) -> Self {
        Self {
            re,
            im: AffineForm::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, other: &ComplexForm, c: Complex64) {
        self.re.add_scaled(&other.re, c.re);
        self.re.add_scaled(&other.im, -c.im);
        self.im.add_scaled(&other.im, c.re);
        self.im.add_scaled(&other.re, c.im);
    }

    /// `self += c * v` for a real variable (or the constant 1 when `None`).
    pub fn add_var(&mut self, v: Option<VarId>, c: Complex64) {
        match v {
            None => {
                self.re.add_constant(c.re);
                self.im.add_constant(c.im);
            }
            Some(v) => {
                self.re.add_scaled(&AffineForm::var(v), c.re);
                self.im.add_scaled(&AffineForm::var(v), c.im);
            }
        }
    }

    pub fn scaled(&self, c: Complex64) -> ComplexForm {
        let mut out = ComplexForm::default();
        out.add_scaled(self, c);
        out
    }

    pub fn conj(&self) -> ComplexForm {
        ComplexForm {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

/// Square matrix of complex affine forms, intended to be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianExpr {
    n: usize,
    data: Vec<ComplexForm>,
}

impl HermitianExpr {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ComplexForm::default(); n * n],
        }
    }

    /// `c * I`
    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ComplexForm::constant(Complex64::new(c, 0.0));
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &ComplexForm {
        &self.data[i * self.n + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut ComplexForm {
        &mut self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: ComplexForm) {
        self.data[i * self.n + j] = f;
    }

    /// `(M + M^dagger) / 2`
    pub fn hermitian_part(&self) -> HermitianExpr {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut f = self.get(i, j).scaled(Complex64::new(0.5, 0.0));
                f.add_scaled(&self.get(j, i).conj(), Complex64::new(0.5, 0.0));
                out.set(i, j, f);
            }
        }
        out
    }

    /// Entrywise `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &HermitianExpr, b: f64) -> Result<HermitianExpr> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(format!("{} vs {}", self.n, other.n)));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| {
                let mut f = x.scaled(Complex64::new(a, 0.0));
                f.add_scaled(y, Complex64::new(b, 0.0));
                f
            })
            .collect();
        Ok(HermitianExpr { n: self.n, data })
    }

    /// `[[a, b], [b^dagger, d]]`
    pub fn block2(a: &HermitianExpr, b: &HermitianExpr, d: &HermitianExpr) -> Result<HermitianExpr> {
        let n = a.n;
        if b.n != n || d.n != n {
            return Err(Error::SizeMismatch("2x2 block operands differ in size".into()));
        }
        let mut out = Self::zeros(2 * n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, a.get(i, j).clone());
                out.set(i, n + j, b.get(i, j).clone());
                out.set(n + i, j, b.get(j, i).conj());
                out.set(n + i, n + j, d.get(i, j).clone());
            }
        }
        Ok(out)
    }

    /// Whether every imaginary part is identically zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|f| f.im.is_zero())
    }

    /// Real symmetric block that is PSD iff this Hermitian matrix is:
    /// the real part alone when there is no imaginary part, otherwise
    /// `[[Re, -Im], [Im, Re]]`. Reads the lower triangle.
    pub fn realify(&self) -> PsdBlock {
        let n = self.n;
        if self.is_real() {
            let mut b = PsdBlock::new(n);
            for i in 0..n {
                for j in 0..=i {
                    b.set(i, j, self.get(i, j).re.clone());
                }
            }
            return b;
        }
        let mut b = PsdBlock::new(2 * n);
        for i in 0..n {
            for j in 0..=i {
                let re = &self.get(i, j).re;
                b.set(i, j, re.clone());
                b.set(n + i, n + j, re.clone());
            }
            for j in 0..n {
                // lower-left block is Im; read it from the lower triangle
                let im = if i >= j {
                    self.get(i, j).im.clone()
                } else {
                    -&self.get(j, i).im
                };
                b.set(n + i, j, im);
            }
        }
        b
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).eval(x))
    }
}

/// Translation-invariant functional on the Pauli strings of a window, with
/// one real variable per translation class and `omega(I) = 1`.
#[derive(Debug, Clone)]
pub struct MomentFunctional {
    window: Window,
    index: SiteIndex,
    vars: HashMap<PauliString, VarId>,
    reps: Vec<(VarId, PauliString)>,
    assignment: Option<Vec<f64>>,
}

impl MomentFunctional {
    /// Declares the moment variables in `program`.
    pub fn new(window: &Window, program: &mut ConicProgram) -> Result<Self> {
        let n = window.len();
        if n > MAX_WINDOW_SITES {
            return Err(Error::TooLarge(format!(
                "moment window of {n} sites (limit {MAX_WINDOW_SITES})"
            )));
        }
        let index = SiteIndex::new(window.sites());
        let mut vars = HashMap::new();
        let mut reps = Vec::new();
        let dim = 1u64 << n;
        for xm in 0..dim {
            for zm in 0..dim {
                if xm == 0 && zm == 0 {
                    continue;
                }
                let p = PauliString::from_masks(xm, zm, &index);
                let c = p.canonical();
                if !vars.contains_key(&c) {
                    let v = program.new_var();
                    vars.insert(c, v);
                    reps.push((v, p));
                }
            }
        }
        Ok(Self {
            window: window.clone(),
            index,
            vars,
            reps,
            assignment: None,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn site_index(&self) -> &SiteIndex {
        &self.index
    }

    /// `(variable, a representative string inside the window)`
    pub fn variables(&self) -> &[(VarId, PauliString)] {
        &self.reps
    }

    pub fn n_variables(&self) -> usize {
        self.reps.len()
    }

    /// Variable of a string; `None` for the identity.
    pub fn var(&self, p: &PauliString) -> Result<Option<VarId>> {
        if p.is_identity() {
            return Ok(None);
        }
        if !self.window.contains_all(p.support()) {
            return Err(Error::OutsideWindow(format!("{p} not in {}", self.window)));
        }
        Ok(Some(self.vars[&p.canonical()]))
    }

    pub fn evaluate(&self, a: &PauliOperator) -> Result<ComplexForm> {
        let mut out = ComplexForm::default();
        for (p, c) in a.terms() {
            out.add_var(self.var(p)?, *c);
        }
        Ok(out)
    }

    /// `omega(P Q)` for strings.
    pub fn evaluate_product(&self, p: &PauliString, q: &PauliString) -> Result<ComplexForm> {
        let (k, r) = p.mul(q);
        let mut out = ComplexForm::default();
        out.add_var(self.var(&r)?, i_pow(k));
        Ok(out)
    }

    /// `[omega(a_i^dagger a_j)]_ij`
    pub fn moment_matrix(&self, basis: &[PauliOperator]) -> Result<HermitianExpr> {
        let n = basis.len();
        let mut m = HermitianExpr::zeros(n);
        let adj: Vec<PauliOperator> = basis.iter().map(|a| a.adjoint()).collect();
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.evaluate(&adj[i].multiply(&basis[j]))?);
            }
        }
        Ok(m)
    }

    /// [`MomentFunctional::moment_matrix`] for a basis of Pauli strings.
    pub fn pauli_moment_matrix(&self, basis: &[PauliString]) -> Result<HermitianExpr> {
        let n = basis.len();
        let mut m = HermitianExpr::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.evaluate_product(&basis[i], &basis[j])?);
            }
        }
        Ok(m)
    }

    /// `sum_P omega(P) P` as a `2^n` matrix: `2^n` times the density matrix
    /// of the window.
    pub fn density_expr(&self) -> HermitianExpr {
        let n = self.index.len();
        let dim = 1usize << n;
        let mut re_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); dim * dim];
        let mut im_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); dim * dim];
        for xm in 0..dim as u64 {
            for zm in 0..dim as u64 {
                if xm == 0 && zm == 0 {
                    continue;
                }
                let p = PauliString::from_masks(xm, zm, &self.index);
                let v = self.vars[&p.canonical()];
                let base = i_pow((xm & zm).count_ones() as u8);
                for t in 0..dim as u64 {
                    let c = if (zm & t).count_ones() % 2 == 0 { base } else { -base };
                    let k = ((t ^ xm) as usize) * dim + t as usize;
                    if c.re != 0.0 {
                        re_terms[k].push((v, c.re));
                    }
                    if c.im != 0.0 {
                        im_terms[k].push((v, c.im));
                    }
                }
            }
        }
        let data = re_terms
            .into_iter()
            .zip(im_terms)
            .enumerate()
            .map(|(k, (re, im))| {
                let diag = k / dim == k % dim;
                ComplexForm {
                    re: AffineForm::from_terms(if diag { 1.0 } else { 0.0 }, re),
                    im: AffineForm::from_terms(0.0, im),
                }
            })
            .collect();
        HermitianExpr { n: dim, data }
    }

    pub fn with_assignment(mut self, x: Vec<f64>) -> Self {
        self.assignment = Some(x);
        self
    }

    pub fn set_assignment(&mut self, x: Vec<f64>) {
        self.assignment = Some(x);
    }

    pub fn assignment(&self) -> Option<&[f64]> {
        self.assignment.as_deref()
    }

    fn assigned(&self) -> Result<&[f64]> {
        self.assignment
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("functional has no assignment".into()))
    }

    /// `omega(a)` under the assignment.
    pub fn value(&self, a: &PauliOperator) -> Result<Complex64> {
        Ok(self.evaluate(a)?.eval(self.assigned()?))
    }

    /// Functional whose variables are the first ids of a fresh program,
    /// assigned from the window density matrix `rho` (orbit-averaged).
    pub fn from_density(window: &Window, rho: &DMatrix<Complex64>) -> Result<Self> {
        let mut scratch = ConicProgram::new();
        let mut f = Self::new(window, &mut scratch)?;
        let dim = 1usize << window.len();
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::SizeMismatch(format!(
                "density matrix {}x{} on {} sites",
                rho.nrows(),
                rho.ncols(),
                window.len()
            )));
        }
        let tr: Complex64 = rho.trace();
        let expansion = PauliOperator::from_dense_indexed(rho, &f.index, 0.0);
        let mut sum = vec![0.0; scratch.n_vars()];
        let mut count = vec![0usize; scratch.n_vars()];
        let dimf = dim as f64;
        for xm in 0..dim as u64 {
            for zm in 0..dim as u64 {
                if xm == 0 && zm == 0 {
                    continue;
                }
                let p = PauliString::from_masks(xm, zm, &f.index);
                let v = f.vars[&p.canonical()].index();
                sum[v] += (expansion.coeff(&p) * dimf / tr).re;
                count[v] += 1;
            }
        }
        let x = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
        f.assignment = Some(x);
        Ok(f)
    }

    /// Writes `pauli_string,value` rows for every variable.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let x = self.assigned()?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["pauli_string", "value"])?;
        for (v, p) in &self.reps {
            wr.write_record([p.to_string(), format!("{:e}", x[v.index()])])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads `pauli_string,value` rows into a functional on `window`.
    /// Strings absent from the file read as zero.
    pub fn read_csv(window: &Window, r: impl Read) -> Result<Self> {
        let mut scratch = ConicProgram::new();
        let mut f = Self::new(window, &mut scratch)?;
        let mut x = vec![0.0; scratch.n_vars()];
        let mut rd = csv::Reader::from_reader(r);
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let at = |msg: String| Error::ParseAt { line, msg };
            if rec.len() != 2 {
                return Err(at("expected `pauli_string,value`".into()));
            }
            let p: PauliString = rec[0].parse().map_err(|e: Error| at(e.to_string()))?;
            let val: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|e| at(format!("bad value: {e}")))?;
            match f.var(&p).map_err(|e| at(e.to_string()))? {
                None => {
                    if (val - 1.0).abs() > 1e-9 {
                        return Err(at(format!("identity must have value 1, found {val}")));
                    }
                }
                Some(v) => x[v.index()] = val,
            }
        }
        f.assignment = Some(x);
        Ok(f)
    }
}
