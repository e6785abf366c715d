//! Linear KMS relaxation for commuting interactions.

use std::collections::HashSet;

use kmsbound_conic::ConicProgram;
use num_complex::Complex64;

use crate::dop::herm_apply;
use crate::error::{Error, Result};
use crate::lattice::{extend_boundary, h_tilde_window, InteractionSpec, Window};
use crate::moment::{ComplexForm, MomentFunctional};
use crate::pauli::{i_pow, Letter, PauliOperator, PauliString, SiteIndex};
use crate::relaxation::{add_positivity, pauli_basis, Beta, Relaxation, RelaxationConfig, Sense};

/// `b -> e^{-beta H~} b e^{beta H~}` for the generators `X_s`, `Z_s` of the
/// inner window, expanded in Pauli strings of the extended window.
#[derive(Debug, Clone)]
pub struct ConjugationTable {
    pub inner: Window,
    pub outer: Window,
    pub entries: Vec<(PauliString, PauliOperator)>,
}

pub fn conjugation_table(spec: &InteractionSpec, inner: &Window, beta: f64) -> Result<ConjugationTable> {
    if !spec.is_commuting() {
        return Err(Error::NotCommuting);
    }
    let outer = extend_boundary(spec, inner);
    if outer.len() > 12 {
        return Err(Error::TooLarge(format!("{} sites for dense conjugation", outer.len())));
    }
    let index = SiteIndex::new(outer.sites());
    let h = h_tilde_window(spec, inner).to_dense_indexed(&index)?;
    let u = herm_apply(&h, |l| (-beta * l).exp());
    let uinv = herm_apply(&h, |l| (beta * l).exp());
    let mut entries = Vec::new();
    for s in inner.sites() {
        for l in [Letter::X, Letter::Z] {
            let b = PauliString::single(s.clone(), l);
            let bd = PauliOperator::from(b.clone()).to_dense_indexed(&index)?;
            let sig = &u * bd * &uinv;
            let scale = sig.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            let op = PauliOperator::from_dense_indexed(&sig, &index, 1e-13 * scale.max(1.0));
            entries.push((b, op));
        }
    }
    Ok(ConjugationTable {
        inner: inner.clone(),
        outer,
        entries,
    })
}

fn push_unique(program: &mut ConicProgram, seen: &mut HashSet<Vec<(u32, u64)>>, e: ComplexForm) {
    for part in [e.re, e.im] {
        if part.is_zero() {
            continue;
        }
        let s = part.max_abs();
        let key = |sign: f64| {
            let mut k: Vec<(u32, u64)> = part
                .terms()
                .iter()
                .map(|&(v, c)| (v.0, (sign * c / s).to_bits()))
                .collect();
            k.push((u32::MAX, (sign * part.constant_term() / s).to_bits()));
            k
        };
        let (kp, kn) = (key(1.0), key(-1.0));
        if seen.contains(&kp) || seen.contains(&kn) {
            continue;
        }
        seen.insert(kp);
        program.add_equality(part);
    }
}

/// Moment positivity on `extend_boundary(window)` plus
/// `omega(b a) = omega(a e^{-beta H~} b e^{beta H~})` and `omega([a, h_X]) = 0`.
pub fn build_commuting(spec: &InteractionSpec, cfg: &RelaxationConfig) -> Result<Relaxation> {
    let beta = match cfg.beta {
        Beta::Finite(b) if b >= 0.0 && b.is_finite() => b,
        Beta::Finite(b) => return Err(Error::InvalidConfig(format!("beta must be >= 0, got {b}"))),
        Beta::Infinite => {
            return Err(Error::InvalidConfig(
                "the commuting relaxation needs finite beta".into(),
            ))
        }
    };
    if !spec.is_commuting() {
        return Err(Error::NotCommuting);
    }
    if !cfg.objective.is_hermitian(1e-12) {
        return Err(Error::InvalidConfig(format!("observable `{}` is not Hermitian", cfg.objective)));
    }
    let table = conjugation_table(spec, &cfg.window, beta)?;
    let outer = table.outer.clone();
    if !outer.contains_all(cfg.objective.support().iter()) {
        return Err(Error::OutsideWindow(format!("observable `{}` not in {outer}", cfg.objective)));
    }

    let mut program = ConicProgram::new();
    let f = MomentFunctional::new(&outer, &mut program)?;
    add_positivity(&mut program, &f, cfg.l_mom)?;

    let basis = pauli_basis(&outer);
    let mut seen = HashSet::new();
    for a in &basis {
        for (b, sigma) in &table.entries {
            let mut e = f.evaluate_product(b, a)?;
            for (c, coeff) in sigma.terms() {
                let (k, r) = a.mul(c);
                e.add_var(f.var(&r)?, -coeff * i_pow(k));
            }
            push_unique(&mut program, &mut seen, e);
        }
    }
    for (h, coeff) in spec.terms_inside(&outer) {
        for a in &basis {
            if a.commutes_with(&h) {
                continue;
            }
            // [a, h] = 2 a h when they anticommute
            let (k, r) = a.mul(&h);
            let mut e = ComplexForm::default();
            e.add_var(f.var(&r)?, i_pow(k) * Complex64::new(2.0 * coeff, 0.0));
            push_unique(&mut program, &mut seen, e);
        }
    }

    let objective = f.evaluate(&cfg.objective)?.re;
    program.set_objective(match cfg.sense {
        Sense::Min => objective.clone(),
        Sense::Max => -&objective,
    });
    Ok(Relaxation {
        program,
        functional: f,
        objective,
        eeb_basis: Vec::new(),
        triple: None,
    })
}
