//! Pauli strings on `Z^D` and their complex linear combinations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::Error;

/// Lattice coordinate.
pub type Coord = SmallVec<[i32; 2]>;

pub const DEFAULT_DROP_TOL: f64 = 1e-14;

const I1: Complex64 = Complex64::new(1.0, 0.0);

/// `i^k`
pub fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Option<Letter> {
        match (x, z) {
            (false, false) => None,
            (true, false) => Some(Letter::X),
            (true, true) => Some(Letter::Y),
            (false, true) => Some(Letter::Z),
        }
    }

    /// `self * other = i^k * product`
    pub fn mul(self, other: Letter) -> (u8, Option<Letter>) {
        use Letter::*;
        match (self, other) {
            (a, b) if a == b => (0, None),
            (X, Y) => (1, Some(Z)),
            (Y, Z) => (1, Some(X)),
            (Z, X) => (1, Some(Y)),
            (Y, X) => (3, Some(Z)),
            (Z, Y) => (3, Some(X)),
            (X, Z) => (3, Some(Y)),
            _ => unreachable!(),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// Tensor product of single-site Paulis; identity factors are omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    sites: Vec<(Coord, Letter)>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(site: Coord, l: Letter) -> Self {
        Self {
            sites: vec![(site, l)],
        }
    }

    /// From arbitrary `(site, letter)` pairs.
    ///
    /// # Panics
    /// On repeated sites.
    pub fn new(sites: impl IntoIterator<Item = (Coord, Letter)>) -> Self {
        let mut sites: Vec<_> = sites.into_iter().collect();
        sites.sort_by(|a, b| a.0.cmp(&b.0));
        assert!(
            sites.windows(2).all(|w| w[0].0 != w[1].0),
            "repeated site in Pauli string"
        );
        Self { sites }
    }

    /// 1D helper: `PauliString::chain(&[(0, Z), (1, Z)])`.
    pub fn chain(sites: &[(i32, Letter)]) -> Self {
        Self::new(sites.iter().map(|&(x, l)| (Coord::from_slice(&[x]), l)))
    }

    pub fn sites(&self) -> &[(Coord, Letter)] {
        &self.sites
    }

    pub fn is_identity(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.sites.len()
    }

    pub fn support(&self) -> impl Iterator<Item = &Coord> {
        self.sites.iter().map(|s| &s.0)
    }

    pub fn letter_at(&self, c: &Coord) -> Option<Letter> {
        self.sites
            .binary_search_by(|s| s.0.cmp(c))
            .ok()
            .map(|k| self.sites[k].1)
    }

    /// `self * other = i^k * P`
    pub fn mul(&self, other: &PauliString) -> (u8, PauliString) {
        let (a, b) = (&self.sites, &other.sites);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let mut phase = 0u8;
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i].clone());
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push(b[j].clone());
                j += 1;
            } else {
                let (k, l) = a[i].1.mul(b[j].1);
                phase += k;
                if let Some(l) = l {
                    out.push((a[i].0.clone(), l));
                }
                i += 1;
                j += 1;
            }
        }
        (phase % 4, PauliString { sites: out })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let mut anti = 0;
        for (c, l) in &self.sites {
            if let Some(m) = other.letter_at(c) {
                if *l != m {
                    anti += 1;
                }
            }
        }
        anti % 2 == 0
    }

    pub fn translate(&self, x: &[i32]) -> PauliString {
        PauliString {
            sites: self
                .sites
                .iter()
                .map(|(c, l)| (c.iter().zip(x).map(|(a, b)| a + b).collect(), *l))
                .collect(),
        }
    }

    /// Translate so that the least site sits at the origin.
    pub fn canonical(&self) -> PauliString {
        match self.sites.first() {
            None => self.clone(),
            Some((c0, _)) => {
                let shift: Coord = c0.iter().map(|v| -v).collect();
                self.translate(&shift)
            }
        }
    }

    /// `(x_mask, z_mask, number of Y)` relative to `index`; the first window
    /// site is the most significant bit.
    pub fn masks(&self, index: &SiteIndex) -> Result<(u64, u64, u8), Error> {
        let (mut xm, mut zm, mut ny) = (0u64, 0u64, 0u8);
        for (c, l) in &self.sites {
            let k = index.position(c).ok_or_else(|| Error::OutsideWindow(format!("{self}")))?;
            let bit = 1u64 << (index.len() - 1 - k);
            let (x, z) = l.bits();
            if x {
                xm |= bit;
            }
            if z {
                zm |= bit;
            }
            if *l == Letter::Y {
                ny += 1;
            }
        }
        Ok((xm, zm, ny))
    }

    /// Inverse of [`PauliString::masks`].
    pub fn from_masks(xm: u64, zm: u64, index: &SiteIndex) -> PauliString {
        let n = index.len();
        let sites = (0..n)
            .filter_map(|k| {
                let bit = 1u64 << (n - 1 - k);
                Letter::from_bits(xm & bit != 0, zm & bit != 0)
                    .map(|l| (index.sites()[k].clone(), l))
            })
            .collect::<Vec<_>>();
        PauliString::new(sites)
    }
}

pub(crate) fn fmt_coord(c: &Coord) -> String {
    c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sites.is_empty() {
            return f.write_str("I");
        }
        let parts: Vec<String> = self
            .sites
            .iter()
            .map(|(c, l)| format!("{}{}", l.as_char(), fmt_coord(c)))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let mut sites = Vec::new();
        for tok in s.split_whitespace() {
            match parse_factor(tok)? {
                Some(site) => sites.push(site),
                None => {}
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (c, _) in &sites {
            if !seen.insert(c.clone()) {
                return Err(Error::Parse(format!("site {} repeated in `{s}`", fmt_coord(c))));
            }
        }
        Ok(PauliString::new(sites))
    }
}

/// `X0`, `Z-1`, `Y2,3`; `I` (any coordinate) is the identity.
fn parse_factor(tok: &str) -> Result<Option<(Coord, Letter)>, Error> {
    let mut chars = tok.chars();
    let l = match chars.next() {
        Some('X') => Letter::X,
        Some('Y') => Letter::Y,
        Some('Z') => Letter::Z,
        Some('I') => return Ok(None),
        _ => return Err(Error::Parse(format!("expected a Pauli factor, found `{tok}`"))),
    };
    let rest: String = chars.as_str().replace('\u{2212}', "-");
    if rest.is_empty() {
        return Err(Error::Parse(format!("factor `{tok}` has no coordinate")));
    }
    let c = rest
        .split(',')
        .map(|v| v.parse::<i32>())
        .collect::<Result<Coord, _>>()
        .map_err(|e| Error::Parse(format!("bad coordinate in `{tok}`: {e}")))?;
    Ok(Some((c, l)))
}

/// Ordered list of window sites with O(1) position lookup.
#[derive(Debug, Clone)]
pub struct SiteIndex {
    sites: Vec<Coord>,
    pos: HashMap<Coord, usize>,
}

impl SiteIndex {
    pub fn new(sites: &[Coord]) -> Self {
        let pos = sites.iter().enumerate().map(|(k, c)| (c.clone(), k)).collect();
        Self {
            sites: sites.to_vec(),
            pos,
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Coord] {
        &self.sites
    }

    pub fn position(&self, c: &Coord) -> Option<usize> {
        self.pos.get(c).copied()
    }
}

/// Sparse complex combination of Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliOperator {
    terms: BTreeMap<PauliString, Complex64>,
    drop_tol: f64,
}

impl Default for PauliOperator {
    fn default() -> Self {
        Self {
            terms: BTreeMap::new(),
            drop_tol: DEFAULT_DROP_TOL,
        }
    }
}

impl From<PauliString> for PauliOperator {
    fn from(p: PauliString) -> Self {
        PauliOperator::term(p, I1)
    }
}

impl PauliOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        PauliString::identity().into()
    }

    pub fn term(p: PauliString, c: Complex64) -> Self {
        let mut o = Self::default();
        o.add_term(p, c);
        o
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (PauliString, Complex64)>) -> Self {
        let mut o = Self::default();
        for (p, c) in terms {
            o.add_term(p, c);
        }
        o
    }

    pub fn with_drop_tolerance(mut self, tol: f64) -> Self {
        self.drop_tol = tol;
        self.prune();
        self
    }

    pub fn drop_tolerance(&self) -> f64 {
        self.drop_tol
    }

    pub fn add_term(&mut self, p: PauliString, c: Complex64) {
        use std::collections::btree_map::Entry;
        let tol = self.drop_tol;
        match self.terms.entry(p) {
            Entry::Vacant(e) => {
                if c.norm() > tol {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().norm() <= tol {
                    e.remove();
                }
            }
        }
    }

    fn prune(&mut self) {
        let tol = self.drop_tol;
        self.terms.retain(|_, c| c.norm() > tol);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    /// Union of the supports of all terms, sorted.
    pub fn support(&self) -> Vec<Coord> {
        let mut s: Vec<Coord> = self
            .terms
            .keys()
            .flat_map(|p| p.support().cloned())
            .collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn scale(&self, c: Complex64) -> PauliOperator {
        let mut o = PauliOperator {
            terms: self.terms.iter().map(|(p, v)| (p.clone(), v * c)).collect(),
            drop_tol: self.drop_tol,
        };
        o.prune();
        o
    }

    pub fn multiply(&self, rhs: &PauliOperator) -> PauliOperator {
        let mut acc: HashMap<PauliString, Complex64> = HashMap::new();
        for (p, a) in &self.terms {
            for (q, b) in &rhs.terms {
                let (k, r) = p.mul(q);
                *acc.entry(r).or_default() += a * b * i_pow(k);
            }
        }
        let mut o = PauliOperator {
            terms: acc.into_iter().collect(),
            drop_tol: self.drop_tol.min(rhs.drop_tol),
        };
        o.prune();
        o
    }

    /// `ab - ba`
    pub fn commutator(&self, rhs: &PauliOperator) -> PauliOperator {
        let mut acc: HashMap<PauliString, Complex64> = HashMap::new();
        for (p, a) in &self.terms {
            for (q, b) in &rhs.terms {
                if p.commutes_with(q) {
                    continue;
                }
                let (k, r) = p.mul(q);
                *acc.entry(r).or_default() += a * b * i_pow(k) * 2.0;
            }
        }
        let mut o = PauliOperator {
            terms: acc.into_iter().collect(),
            drop_tol: self.drop_tol.min(rhs.drop_tol),
        };
        o.prune();
        o
    }

    pub fn adjoint(&self) -> PauliOperator {
        PauliOperator {
            terms: self.terms.iter().map(|(p, c)| (p.clone(), c.conj())).collect(),
            drop_tol: self.drop_tol,
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn translate(&self, x: &[i32]) -> PauliOperator {
        PauliOperator {
            terms: self.terms.iter().map(|(p, c)| (p.translate(x), *c)).collect(),
            drop_tol: self.drop_tol,
        }
    }

    /// Normalized trace pairing `tr(a^dagger b) / 2^n`.
    pub fn hs_inner(&self, rhs: &PauliOperator) -> Complex64 {
        self.terms
            .iter()
            .filter_map(|(p, a)| rhs.terms.get(p).map(|b| a.conj() * b))
            .sum()
    }

    /// Matrix on `window` (Kronecker order, first site most significant).
    pub fn to_dense(&self, window: &[Coord]) -> Result<DMatrix<Complex64>, Error> {
        let index = SiteIndex::new(window);
        self.to_dense_indexed(&index)
    }

    pub fn to_dense_indexed(&self, index: &SiteIndex) -> Result<DMatrix<Complex64>, Error> {
        let n = index.len();
        if n > 20 {
            return Err(Error::TooLarge(format!("dense matrix on {n} sites")));
        }
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for (p, c) in &self.terms {
            let (xm, zm, ny) = p.masks(index)?;
            let base = c * i_pow(ny);
            for t in 0..dim as u64 {
                let sign = if (zm & t).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m[((t ^ xm) as usize, t as usize)] += base * sign;
            }
        }
        Ok(m)
    }

    /// Pauli expansion of a dense matrix on `window`.
    pub fn from_dense(m: &DMatrix<Complex64>, window: &[Coord]) -> PauliOperator {
        let index = SiteIndex::new(window);
        Self::from_dense_indexed(m, &index, DEFAULT_DROP_TOL)
    }

    pub fn from_dense_indexed(m: &DMatrix<Complex64>, index: &SiteIndex, tol: f64) -> PauliOperator {
        let n = index.len();
        let dim = 1u64 << n;
        assert_eq!(m.nrows(), dim as usize, "matrix size does not match window");
        let norm = 1.0 / dim as f64;
        let mut o = PauliOperator::zero().with_drop_tolerance(tol);
        for xm in 0..dim {
            for zm in 0..dim {
                // tr(P M) with P|s> = i^ny (-1)^{z.s} |s^x>
                let ny = (xm & zm).count_ones() as u8;
                let mut acc = Complex64::new(0.0, 0.0);
                for s in 0..dim {
                    let v = m[(s as usize, (s ^ xm) as usize)];
                    if (zm & s).count_ones() % 2 == 0 {
                        acc += v;
                    } else {
                        acc -= v;
                    }
                }
                let c = acc * i_pow(ny) * norm;
                if c.norm() > tol {
                    o.terms.insert(PauliString::from_masks(xm, zm, &index), c);
                }
            }
        }
        o
    }
}

impl Add<&PauliOperator> for &PauliOperator {
    type Output = PauliOperator;
    fn add(self, rhs: &PauliOperator) -> PauliOperator {
        let mut o = self.clone();
        o.drop_tol = o.drop_tol.min(rhs.drop_tol);
        for (p, c) in &rhs.terms {
            o.add_term(p.clone(), *c);
        }
        o
    }
}

impl Sub<&PauliOperator> for &PauliOperator {
    type Output = PauliOperator;
    fn sub(self, rhs: &PauliOperator) -> PauliOperator {
        self + &(-rhs)
    }
}

impl Neg for &PauliOperator {
    type Output = PauliOperator;
    fn neg(self) -> PauliOperator {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<&PauliOperator> for &PauliOperator {
    type Output = PauliOperator;
    fn mul(self, rhs: &PauliOperator) -> PauliOperator {
        self.multiply(rhs)
    }
}

impl Mul<f64> for &PauliOperator {
    type Output = PauliOperator;
    fn mul(self, rhs: f64) -> PauliOperator {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("(0,0) I");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(p, c)| format!("({},{}) {}", c.re, c.im, p))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

fn parse_real(s: &str) -> Result<f64, Error> {
    s.trim()
        .replace('\u{2212}', "-")
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")))
}

impl FromStr for PauliOperator {
    type Err = Error;

    /// Grammar: terms joined by `+`, each an optional coefficient
    /// (`(re,im)` or a real number) followed by factors such as `Z0 X1`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let mut out = PauliOperator::zero();
        let mut coeff: Option<Complex64> = None;
        let mut factors: Vec<&str> = Vec::new();
        let mut have_term = false;
        let flush = |out: &mut PauliOperator,
                     coeff: &mut Option<Complex64>,
                     factors: &mut Vec<&str>,
                     have_term: &mut bool|
         -> Result<(), Error> {
            if *have_term {
                let p: PauliString = factors.join(" ").parse()?;
                out.add_term(p, coeff.unwrap_or(I1));
            }
            *coeff = None;
            factors.clear();
            *have_term = false;
            Ok(())
        };
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.is_empty() {
            return Err(Error::Parse("empty operator".into()));
        }
        for tok in toks {
            if tok == "+" {
                if !have_term {
                    return Err(Error::Parse(format!("dangling `+` in `{s}`")));
                }
                flush(&mut out, &mut coeff, &mut factors, &mut have_term)?;
            } else if let Some(inner) = tok.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
                if have_term {
                    return Err(Error::Parse(format!("coefficient `{tok}` must start a term")));
                }
                let (re, im) = inner
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("coefficient `{tok}` is not (re,im)")))?;
                coeff = Some(Complex64::new(parse_real(re)?, parse_real(im)?));
                have_term = true;
            } else if tok.starts_with(['X', 'Y', 'Z', 'I']) {
                factors.push(tok);
                have_term = true;
            } else {
                if have_term {
                    return Err(Error::Parse(format!("coefficient `{tok}` must start a term")));
                }
                coeff = Some(Complex64::new(parse_real(tok)?, 0.0));
                have_term = true;
            }
        }
        if !have_term {
            return Err(Error::Parse(format!("dangling `+` in `{s}`")));
        }
        flush(&mut out, &mut coeff, &mut factors, &mut have_term)?;
        Ok(out)
    }
}
