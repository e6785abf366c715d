//! Translation-invariant finite-range Hamiltonians and finite windows.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{fmt_coord, Coord, PauliOperator, PauliString};

/// Finite set of lattice sites, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Window {
    dim: usize,
    sites: Vec<Coord>,
    level: Option<u32>,
}

impl Window {
    /// `{-l..l}^D`
    pub fn level(dim: usize, l: u32) -> Self {
        let l = l as i32;
        let mut sites: Vec<Coord> = vec![Coord::new()];
        for _ in 0..dim {
            sites = sites
                .into_iter()
                .flat_map(|c| {
                    (-l..=l).map(move |v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        sites.sort();
        Self {
            dim,
            sites,
            level: Some(l as u32),
        }
    }

    /// `{a..b}` in one dimension.
    pub fn interval(a: i32, b: i32) -> Self {
        Self::from_sites(1, (a..=b).map(|x| Coord::from_slice(&[x])))
    }

    pub fn from_sites(dim: usize, sites: impl IntoIterator<Item = Coord>) -> Self {
        let set: BTreeSet<Coord> = sites.into_iter().collect();
        for c in &set {
            assert_eq!(c.len(), dim, "coordinate {} is not {dim}-dimensional", fmt_coord(c));
        }
        Self {
            dim,
            sites: set.into_iter().collect(),
            level: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> &[Coord] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn level_param(&self) -> Option<u32> {
        self.level
    }

    pub fn contains(&self, c: &Coord) -> bool {
        self.sites.binary_search(c).is_ok()
    }

    pub fn contains_all<'a>(&self, mut cs: impl Iterator<Item = &'a Coord>) -> bool {
        cs.all(|c| self.contains(c))
    }

    pub fn union(&self, other: &Window) -> Window {
        Window::from_sites(self.dim, self.sites.iter().chain(&other.sites).cloned())
    }

    /// Sites whose full box of radius `r` lies inside `self`.
    pub fn shrink(&self, r: u32) -> Window {
        let r = r as i32;
        let keep = self.sites.iter().filter(|c| {
            box_offsets(self.dim, r).iter().all(|o| {
                let s: Coord = c.iter().zip(o).map(|(a, b)| a + b).collect();
                self.contains(&s)
            })
        });
        Window::from_sites(self.dim, keep.cloned())
    }

    /// Centered sub-box with `side` sites per axis (1D: a contiguous block).
    pub fn centered_box(&self, side: usize) -> Window {
        let mut lo = vec![i32::MAX; self.dim];
        let mut hi = vec![i32::MIN; self.dim];
        for c in &self.sites {
            for d in 0..self.dim {
                lo[d] = lo[d].min(c[d]);
                hi[d] = hi[d].max(c[d]);
            }
        }
        let ranges: Vec<(i32, i32)> = (0..self.dim)
            .map(|d| {
                let len = (hi[d] - lo[d] + 1) as usize;
                let side = side.min(len) as i32;
                let start = lo[d] + (len as i32 - side) / 2;
                (start, start + side - 1)
            })
            .collect();
        let keep = self
            .sites
            .iter()
            .filter(|c| (0..self.dim).all(|d| c[d] >= ranges[d].0 && c[d] <= ranges[d].1));
        Window::from_sites(self.dim, keep.cloned())
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.sites.iter().map(fmt_coord).collect();
        write!(f, "{{{}}}", s.join(" "))
    }
}

fn box_offsets(dim: usize, r: i32) -> Vec<Coord> {
    let mut out: Vec<Coord> = vec![Coord::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|c| {
                (-r..=r).map(move |v| {
                    let mut c = c.clone();
                    c.push(v);
                    c
                })
            })
            .collect();
    }
    out
}

/// Coefficient of a term: a number, optionally times a named parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub value: f64,
    pub param: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Coefficient,
    pub string: PauliString,
}

/// `H = sum_x tau_x(sum_k c_k P_k)` with every `P_k` anchored near the origin.
#[derive(Debug)]
pub struct InteractionSpec {
    dim: usize,
    range: u32,
    params: BTreeMap<String, f64>,
    templates: Vec<Term>,
    terms: Vec<(PauliString, f64)>,
    commuting: OnceLock<bool>,
}

impl Clone for InteractionSpec {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            range: self.range,
            params: self.params.clone(),
            templates: self.templates.clone(),
            terms: self.terms.clone(),
            commuting: OnceLock::new(),
        }
    }
}

impl PartialEq for InteractionSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.range == other.range
            && self.params == other.params
            && self.templates == other.templates
    }
}

impl InteractionSpec {
    pub fn new(
        dim: usize,
        range: u32,
        params: BTreeMap<String, f64>,
        templates: Vec<Term>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        let mut s = Self {
            dim,
            range,
            params,
            templates,
            terms: Vec::new(),
            commuting: OnceLock::new(),
        };
        s.resolve()?;
        Ok(s)
    }

    /// Spec from Hermitian operators anchored at the origin.
    pub fn from_operators(dim: usize, range: u32, ops: &[PauliOperator]) -> Result<Self> {
        let mut templates = Vec::new();
        for o in ops {
            if !o.is_hermitian(1e-12) {
                return Err(Error::InvalidSpec(format!("term `{o}` is not Hermitian")));
            }
            for (p, c) in o.terms() {
                templates.push(Term {
                    coeff: Coefficient {
                        value: c.re,
                        param: None,
                    },
                    string: p.clone(),
                });
            }
        }
        Self::new(dim, range, BTreeMap::new(), templates)
    }

    fn resolve(&mut self) -> Result<()> {
        let mut terms: BTreeMap<PauliString, f64> = BTreeMap::new();
        for t in &self.templates {
            for (c, _) in t.string.sites() {
                if c.len() != self.dim {
                    return Err(Error::InvalidSpec(format!(
                        "site {} of `{}` is not {}-dimensional",
                        fmt_coord(c),
                        t.string,
                        self.dim
                    )));
                }
                if c.iter().any(|v| v.unsigned_abs() > self.range) {
                    return Err(Error::InvalidSpec(format!(
                        "term `{}` reaches beyond range {}",
                        t.string, self.range
                    )));
                }
            }
            if t.string.is_identity() {
                continue;
            }
            let k = match &t.coeff.param {
                None => t.coeff.value,
                Some(p) => {
                    let v = self
                        .params
                        .get(p)
                        .ok_or_else(|| Error::InvalidSpec(format!("unknown parameter `{p}`")))?;
                    t.coeff.value * v
                }
            };
            *terms.entry(t.string.clone()).or_default() += k;
        }
        self.terms = terms.into_iter().filter(|t| t.1 != 0.0).collect();
        self.commuting = OnceLock::new();
        Ok(())
    }

    /// Same interaction with parameter `name` set to `value`.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut s = self.clone();
        s.params.insert(name.to_string(), value);
        s.resolve()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn templates(&self) -> &[Term] {
        &self.templates
    }

    /// Resolved Pauli terms at the origin with real coefficients.
    pub fn terms(&self) -> &[(PauliString, f64)] {
        &self.terms
    }

    /// Origin cell interaction `sum_k c_k P_k`.
    pub fn local_term(&self) -> PauliOperator {
        PauliOperator::from_terms(
            self.terms
                .iter()
                .map(|(p, c)| (p.clone(), Complex64::new(*c, 0.0))),
        )
    }

    /// Distinct translated terms `tau_x(P_k)` whose support meets `w`.
    pub fn terms_touching(&self, w: &Window) -> Vec<(PauliString, f64)> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (p, c) in &self.terms {
            for s in w.sites() {
                for (t, _) in p.sites() {
                    let x: Coord = s.iter().zip(t).map(|(a, b)| a - b).collect();
                    let q = p.translate(&x);
                    if seen.insert(q.clone()) {
                        out.push((q, *c));
                    }
                }
            }
        }
        out
    }

    /// Translated terms whose support lies in `w`.
    pub fn terms_inside(&self, w: &Window) -> Vec<(PauliString, f64)> {
        self.terms_touching(w)
            .into_iter()
            .filter(|(q, _)| w.contains_all(q.support()))
            .collect()
    }

    /// Whether all translates of all terms commute pairwise.
    pub fn is_commuting(&self) -> bool {
        *self.commuting.get_or_init(|| {
            for (p, _) in &self.terms {
                let w = Window::from_sites(self.dim, p.support().cloned());
                for (q, _) in self.terms_touching(&w) {
                    if !p.commutes_with(&q) {
                        return false;
                    }
                }
            }
            true
        })
    }

    /// Parses the text format
    ///
    /// ```text
    /// dim 1 range 1
    /// param g 1.0
    /// term -1 Z0 Z1
    /// term -1*g X0
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(usize, u32)> = None;
        let mut params = BTreeMap::new();
        let mut templates = Vec::new();
        let at = |line: usize, msg: String| Error::ParseAt { line, msg };
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks[0] {
                "dim" => {
                    if toks.len() != 4 || toks[2] != "range" {
                        return Err(at(line, "expected `dim <D> range <r>`".into()));
                    }
                    let d = toks[1]
                        .parse::<usize>()
                        .map_err(|e| at(line, format!("dimension: {e}")))?;
                    let r = toks[3]
                        .parse::<u32>()
                        .map_err(|e| at(line, format!("range: {e}")))?;
                    header = Some((d, r));
                }
                "param" => {
                    if toks.len() != 3 {
                        return Err(at(line, "expected `param <name> <value>`".into()));
                    }
                    let v = parse_float(toks[2]).map_err(|e| at(line, e))?;
                    params.insert(toks[1].to_string(), v);
                }
                "term" => {
                    if toks.len() < 3 {
                        return Err(at(line, "expected `term <coeff> <factors>`".into()));
                    }
                    let coeff = parse_coeff(toks[1]).map_err(|e| at(line, e))?;
                    let string: PauliString = toks[2..]
                        .join(" ")
                        .parse()
                        .map_err(|e: Error| at(line, e.to_string()))?;
                    templates.push(Term { coeff, string });
                }
                other => return Err(at(line, format!("unknown directive `{other}`"))),
            }
        }
        let (dim, range) = header.ok_or_else(|| at(1, "missing `dim <D> range <r>` header".into()))?;
        Self::new(dim, range, params, templates)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Renders in the format accepted by [`InteractionSpec::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("dim {} range {}\n", self.dim, self.range);
        for (k, v) in &self.params {
            s += &format!("param {k} {v}\n");
        }
        for t in &self.templates {
            let c = match &t.coeff.param {
                None => format!("{}", t.coeff.value),
                Some(p) => format!("{}*{p}", t.coeff.value),
            };
            s += &format!("term {c} {}\n", t.string);
        }
        s
    }
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    s.replace('\u{2212}', "-")
        .parse::<f64>()
        .map_err(|e| format!("bad number `{s}`: {e}"))
}

fn parse_coeff(s: &str) -> std::result::Result<Coefficient, String> {
    match s.split_once('*') {
        Some((v, p)) => {
            if p.is_empty() || !p.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(format!("bad parameter name in `{s}`"));
            }
            Ok(Coefficient {
                value: parse_float(v)?,
                param: Some(p.to_string()),
            })
        }
        None => Ok(Coefficient {
            value: parse_float(s)?,
            param: None,
        }),
    }
}

fn sum_terms(terms: &[(PauliString, f64)]) -> PauliOperator {
    PauliOperator::from_terms(
        terms
            .iter()
            .map(|(p, c)| (p.clone(), Complex64::new(*c, 0.0))),
    )
}

/// `H_w`: all translated terms supported in `w`.
pub fn h_window(spec: &InteractionSpec, w: &Window) -> PauliOperator {
    sum_terms(&spec.terms_inside(w))
}

/// `H~_w`: all translated terms meeting `w`.
pub fn h_tilde_window(spec: &InteractionSpec, w: &Window) -> PauliOperator {
    sum_terms(&spec.terms_touching(w))
}

/// `w` plus every site reached by a term meeting `w`.
pub fn extend_boundary(spec: &InteractionSpec, w: &Window) -> Window {
    let extra = spec
        .terms_touching(w)
        .into_iter()
        .flat_map(|(p, _)| p.support().cloned().collect::<Vec<_>>());
    Window::from_sites(spec.dim(), w.sites().iter().cloned().chain(extra))
}

/// `H~_w - H_w`
pub fn surface_term(spec: &InteractionSpec, w: &Window) -> PauliOperator {
    let inside: HashSet<PauliString> = spec.terms_inside(w).into_iter().map(|t| t.0).collect();
    sum_terms(
        &spec
            .terms_touching(w)
            .into_iter()
            .filter(|(p, _)| !inside.contains(p))
            .collect::<Vec<_>>(),
    )
}

/// Formal commutator `[H, a]`.
pub fn commutator_with_h(spec: &InteractionSpec, a: &PauliOperator) -> PauliOperator {
    let supp = a.support();
    if supp.is_empty() {
        return PauliOperator::zero();
    }
    let w = Window::from_sites(spec.dim(), supp);
    h_tilde_window(spec, &w).commutator(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn op(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn tf_ising_windows() {
        let g = 0.7;
        let h = models::tf_ising(g);
        assert_eq!(
            h_window(&h, &Window::interval(0, 1)),
            op(&format!("-1 Z0 Z1 + {} X0 + {} X1", -g, -g))
        );
        assert_eq!(
            h_tilde_window(&h, &Window::interval(0, 0)),
            op(&format!("-1 Z-1 Z0 + -1 Z0 Z1 + {} X0", -g))
        );
        assert_eq!(h_window(&h, &Window::interval(0, 0)), op(&format!("{} X0", -g)));
        let zz = models::classical_ising();
        assert!(h_window(&zz, &Window::interval(3, 3)).is_zero());
    }

    #[test]
    fn one_site_terms_only() {
        let h = InteractionSpec::from_operators(1, 0, &[op("0.5 X0 + Z0")]).unwrap();
        let w = Window::interval(-1, 1);
        assert_eq!(h_window(&h, &w), h_tilde_window(&h, &w));
        assert_eq!(extend_boundary(&h, &w), w);
    }

    #[test]
    fn boundary_extension() {
        let h = models::tf_ising(1.0);
        assert_eq!(extend_boundary(&h, &Window::interval(-1, 1)), Window::interval(-2, 2));
        let h2 = models::tf_ising_2d(1.0);
        let plus = extend_boundary(&h2, &Window::level(2, 0));
        assert_eq!(plus.len(), 5);
        for s in [[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]] {
            assert!(plus.contains(&Coord::from_slice(&s)));
        }
    }

    #[test]
    fn two_d_tilde_has_four_bonds() {
        let g = 0.3;
        let h2 = models::tf_ising_2d(g);
        let t = h_tilde_window(&h2, &Window::level(2, 0));
        // brute force: every translate of every term, keep those touching the origin
        let mut expect = PauliOperator::zero();
        for x in -2..=2 {
            for y in -2..=2 {
                let shifted = h2.local_term().translate(&[x, y]);
                for (p, c) in shifted.terms() {
                    if p.support().any(|s| s.as_slice() == [0, 0]) {
                        expect = &expect + &PauliOperator::term(p.clone(), *c);
                    }
                }
            }
        }
        assert_eq!(t, expect);
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn commutator_examples() {
        let g = 0.4;
        let h = models::tf_ising(g);
        assert_eq!(commutator_with_h(&h, &op("Z0")), op(&format!("(0,{}) Y0", 2.0 * g)));
        let cx = commutator_with_h(&h, &op("X0"));
        assert_eq!(cx, op("(0,-2) Z-1 Y0 + (0,-2) Y0 Z1"));
        let zz = models::classical_ising();
        let hw = h_window(&zz, &Window::interval(0, 3));
        assert!(commutator_with_h(&zz, &hw).is_zero());
    }

    #[test]
    fn x_commutator_against_dense() {
        let h = models::tf_ising(0.9);
        let w: Vec<Coord> = (-1..=1).map(|x| Coord::from_slice(&[x])).collect();
        let part = op("-1 Z-1 Z0 + -1 Z0 Z1");
        let a = op("X0");
        let (hm, am) = (part.to_dense(&w).unwrap(), a.to_dense(&w).unwrap());
        let dense = &hm * &am - &am * &hm;
        let ours = commutator_with_h(&h, &a).to_dense(&w).unwrap();
        assert!((dense - ours).norm() < 1e-12);
    }

    #[test]
    fn surface_term_is_crossing_part() {
        let h = models::tf_ising(0.5);
        let w = Window::interval(0, 2);
        let s = surface_term(&h, &w);
        assert_eq!(s, op("-1 Z-1 Z0 + -1 Z2 Z3"));
        assert_eq!(&h_window(&h, &w) + &s, h_tilde_window(&h, &w));
    }

    #[test]
    fn commuting_detection() {
        assert!(models::classical_ising().is_commuting());
        assert!(!models::tf_ising(0.5).is_commuting());
        assert!(models::tf_ising(0.0).is_commuting());
    }

    #[test]
    fn spec_file_round_trip() {
        let text = "# transverse-field Ising\ndim 1 range 1\nparam g 1.0\nterm -1 Z0 Z1\nterm -1*g X0\n";
        let h = InteractionSpec::parse(text).unwrap();
        assert_eq!(h.local_term(), models::tf_ising(1.0).local_term());
        let h2 = InteractionSpec::parse(&h.to_text()).unwrap();
        assert_eq!(h, h2);
        assert_eq!(
            h.with_param("g", 2.0).unwrap().local_term(),
            models::tf_ising(2.0).local_term()
        );
    }

    #[test]
    fn spec_file_errors_carry_lines() {
        let bad = "dim 1 range 1\nterm -1 Q0\n";
        assert!(matches!(InteractionSpec::parse(bad), Err(Error::ParseAt { line: 2, .. })));
        let far = "dim 1 range 1\nterm 1 Z0 Z2\n";
        assert!(matches!(InteractionSpec::parse(far), Err(Error::InvalidSpec(_))));
        let unknown = "dim 1 range 1\nterm 1*h X0\n";
        assert!(InteractionSpec::parse(unknown).is_err());
        assert!(matches!(
            InteractionSpec::parse("term 1 X0\n"),
            Err(Error::ParseAt { .. })
        ));
    }

    #[test]
    fn shrink_and_box() {
        assert_eq!(Window::interval(-2, 2).shrink(1), Window::interval(-1, 1));
        assert_eq!(Window::level(2, 1).shrink(1).sites(), Window::level(2, 0).sites());
        assert_eq!(Window::interval(-2, 2).centered_box(3), Window::interval(-1, 1));
        assert_eq!(Window::interval(-1, 1).centered_box(2), Window::interval(-1, 0));
    }
}
