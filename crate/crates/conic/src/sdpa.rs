//! SDPA sparse format (`.dat-s`).
//!
//! The format describes `min c'x  s.t.  sum_i x_i F_i - F_0 >= 0`. Line 1
//! holds `m`, line 2 the number of blocks, line 3 the block sizes, line 4
//! the vector `c`, followed by `matno blkno i j value` records (1-based,
//! upper triangle). Equalities are eliminated before writing.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::affine::{AffineForm, VarId};
use crate::error::ConicError;
use crate::presolve::{eliminate_equalities, PresolveOutcome, PresolveTolerances, Presolved};
use crate::program::{ConicProgram, PsdBlock};

/// What a reader of an exported file needs to interpret its objective.
#[derive(Debug, Clone)]
pub struct SdpaExport {
    pub text: String,
    /// Objective constant dropped by the format.
    pub objective_constant: f64,
    /// Map from exported variables back to the program's variables.
    pub presolved: Presolved,
}

/// Renders the equality-free program `p` in SDPA sparse format.
///
/// # Panics
/// If `p` still has equalities.
pub fn to_sdpa_string(p: &ConicProgram) -> String {
    assert!(p.equalities().is_empty(), "SDPA export needs an equality-free program");
    let mut s = String::new();
    let m = p.n_vars();
    writeln!(s, "{m}").unwrap();
    writeln!(s, "{}", p.blocks().len()).unwrap();
    let sizes: Vec<String> = p.blocks().iter().map(|b| b.size().to_string()).collect();
    writeln!(s, "{}", sizes.join(" ")).unwrap();
    let mut c = vec![0.0; m];
    for &(v, coeff) in p.objective().terms() {
        c[v.index()] = coeff;
    }
    let cs: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
    writeln!(s, "{}", cs.join(" ")).unwrap();

    // records grouped by matrix number, then block, then position
    let mut recs: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (bk, b) in p.blocks().iter().enumerate() {
        for (&(r, col), form) in b.entries() {
            // stored lower (r >= col); SDPA wants upper (i <= j)
            let (i, j) = (col + 1, r + 1);
            if form.constant_term() != 0.0 {
                recs.push((0, bk + 1, i, j, -form.constant_term()));
            }
            for &(v, coeff) in form.terms() {
                recs.push((v.index() + 1, bk + 1, i, j, coeff));
            }
        }
    }
    recs.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    for (mat, blk, i, j, v) in recs {
        writeln!(s, "{mat} {blk} {i} {j} {v}").unwrap();
    }
    s
}

/// Eliminates equalities and renders the result.
pub fn export_sdpa_string(p: &ConicProgram) -> Result<SdpaExport, ConicError> {
    p.validate()?;
    match eliminate_equalities(p, PresolveTolerances::default()) {
        PresolveOutcome::Reduced(r) => Ok(SdpaExport {
            text: to_sdpa_string(&r.program),
            objective_constant: r.program.objective().constant_term(),
            presolved: r,
        }),
        PresolveOutcome::Infeasible { residual } => Err(ConicError::SdpaParse {
            line: 0,
            msg: format!("equalities are inconsistent (residual {residual:e}); nothing to export"),
        }),
        PresolveOutcome::Unbounded => Err(ConicError::SdpaParse {
            line: 0,
            msg: "objective is unbounded along an unconstrained direction".into(),
        }),
    }
}

/// Writes `p` to `path` in SDPA sparse format.
pub fn export_sdpa(p: &ConicProgram, path: impl AsRef<Path>) -> Result<SdpaExport, ConicError> {
    let e = export_sdpa_string(p)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(e.text.as_bytes())?;
    Ok(e)
}

/// Parsed contents of an SDPA sparse file.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub m: usize,
    /// Negative sizes denote diagonal blocks.
    pub block_sizes: Vec<i64>,
    pub c: Vec<f64>,
    /// `(matno, blkno, i, j, value)` as read, 1-based.
    pub records: Vec<(usize, usize, usize, usize, f64)>,
}

impl SdpaProblem {
    /// Back to a [`ConicProgram`] with zero objective constant. Diagonal
    /// blocks become ordinary blocks.
    pub fn to_program(&self) -> ConicProgram {
        let mut p = ConicProgram::with_vars(self.m);
        p.set_objective(AffineForm::from_terms(
            0.0,
            self.c.iter().enumerate().map(|(i, &v)| (VarId(i as u32), v)),
        ));
        let mut blocks: Vec<PsdBlock> = self
            .block_sizes
            .iter()
            .map(|&s| PsdBlock::new(s.unsigned_abs() as usize))
            .collect();
        for &(mat, blk, i, j, v) in &self.records {
            let f = if mat == 0 {
                AffineForm::constant(-v)
            } else {
                AffineForm::term(VarId(mat as u32 - 1), v)
            };
            blocks[blk - 1].add(i - 1, j - 1, &f);
        }
        for b in blocks {
            p.add_psd_block(b);
        }
        p
    }
}

/// Parses SDPA sparse text. Comment lines (starting with `"` or `*`) before
/// the header are skipped; `,`, `{`, `}`, `(` and `)` act as separators.
pub fn parse_sdpa(text: &str) -> Result<SdpaProblem, ConicError> {
    let err = |line: usize, msg: String| ConicError::SdpaParse { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.replace([',', '{', '}', '(', ')'], " ")))
        .skip_while(|(_, l)| {
            let t = l.trim_start();
            t.starts_with('"') || t.starts_with('*')
        });

    let mut next_line = |what: &str| {
        lines
            .next()
            .ok_or_else(|| err(0, format!("missing {what}")))
    };
    let first_int = |k: usize, l: &str, what: &str| -> Result<i64, ConicError> {
        l.split_whitespace()
            .next()
            .ok_or_else(|| err(k, format!("missing {what}")))?
            .parse::<i64>()
            .map_err(|e| err(k, format!("{what}: {e}")))
    };

    let (k, l) = next_line("m")?;
    let m = first_int(k, &l, "m")?;
    let m = usize::try_from(m).map_err(|_| err(k, "negative m".into()))?;
    let (k, l) = next_line("block count")?;
    let nb = first_int(k, &l, "block count")?;
    let nb = usize::try_from(nb).map_err(|_| err(k, "negative block count".into()))?;

    let mut block_sizes = Vec::with_capacity(nb);
    let mut c = Vec::with_capacity(m);
    if nb > 0 {
        let (k, l) = next_line("block sizes")?;
        for t in l.split_whitespace().take(nb) {
            block_sizes.push(t.parse::<i64>().map_err(|e| err(k, format!("block size: {e}")))?);
        }
        if block_sizes.len() != nb {
            return Err(err(k, format!("expected {nb} block sizes")));
        }
    } else {
        next_line("block sizes")?;
    }
    let (k, l) = next_line("objective vector")?;
    for t in l.split_whitespace().take(m) {
        c.push(t.parse::<f64>().map_err(|e| err(k, format!("objective entry: {e}")))?);
    }
    if c.len() != m {
        return Err(err(k, format!("expected {m} objective entries")));
    }

    let mut records = Vec::new();
    for (k, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 5 {
            return Err(err(k, "expected `matno blkno i j value`".into()));
        }
        let idx = |t: &str, what: &str| -> Result<usize, ConicError> {
            t.parse::<usize>().map_err(|e| err(k, format!("{what}: {e}")))
        };
        let mat = idx(toks[0], "matno")?;
        let blk = idx(toks[1], "blkno")?;
        let i = idx(toks[2], "i")?;
        let j = idx(toks[3], "j")?;
        let v: f64 = toks[4].parse().map_err(|e| err(k, format!("value: {e}")))?;
        if mat > m {
            return Err(err(k, format!("matno {mat} exceeds m = {m}")));
        }
        if blk == 0 || blk > nb {
            return Err(err(k, format!("blkno {blk} out of range")));
        }
        let size = block_sizes[blk - 1].unsigned_abs() as usize;
        if i == 0 || j == 0 || i > size || j > size {
            return Err(err(k, format!("entry ({i},{j}) outside block of size {size}")));
        }
        if block_sizes[blk - 1] < 0 && i != j {
            return Err(err(k, "off-diagonal entry in a diagonal block".into()));
        }
        records.push((mat, blk, i, j, v));
    }
    Ok(SdpaProblem {
        m,
        block_sizes,
        c,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> ConicProgram {
        let mut p = ConicProgram::with_vars(1);
        let mut b = PsdBlock::new(2);
        b.set(0, 0, AffineForm::constant(1.0));
        b.set(1, 1, AffineForm::constant(1.0));
        b.set(1, 0, AffineForm::var(VarId(0)));
        p.add_psd_block(b);
        p.set_objective(AffineForm::var(VarId(0)));
        p
    }

    #[test]
    fn empty_program_is_header_only() {
        let s = to_sdpa_string(&ConicProgram::new());
        assert_eq!(s, "0\n0\n\n\n");
        let back = parse_sdpa(&s).unwrap();
        assert_eq!(back.m, 0);
        assert!(back.block_sizes.is_empty());
    }

    #[test]
    fn two_by_two_layout() {
        let s = to_sdpa_string(&two_by_two());
        assert_eq!(s, "1\n1\n2\n1\n0 1 1 1 -1\n0 1 2 2 -1\n1 1 1 2 1\n");
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(&lines[..4], &["1", "1", "2", "1"]);
    }

    #[test]
    fn round_trip_preserves_program() {
        let p = two_by_two();
        let q = parse_sdpa(&to_sdpa_string(&p)).unwrap().to_program();
        assert_eq!(p, q);
    }

    #[test]
    fn parser_accepts_punctuation_and_comments() {
        let text = "\"a comment\n* another\n1 =m\n1\n{2}\n{1.0}\n0,1,1,1,-1\n0 1 2 2 -1\n1 1 1 2 1\n";
        let q = parse_sdpa(text).unwrap();
        assert_eq!(q.block_sizes, vec![2]);
        assert_eq!(q.records.len(), 3);
    }

    #[test]
    fn parser_rejects_bad_index() {
        let text = "1\n1\n2\n1\n1 1 3 1 1\n";
        assert!(matches!(parse_sdpa(text), Err(ConicError::SdpaParse { line: 5, .. })));
    }

    #[test]
    fn floats_round_trip_bit_exactly() {
        let mut p = ConicProgram::with_vars(1);
        let mut b = PsdBlock::new(1);
        let v = 0.1f64 + 0.2;
        b.set(0, 0, AffineForm::from_terms(1.0 / 3.0, [(VarId(0), v)]));
        p.add_psd_block(b);
        p.set_objective(AffineForm::term(VarId(0), std::f64::consts::PI));
        let q = parse_sdpa(&to_sdpa_string(&p)).unwrap().to_program();
        assert_eq!(p, q);
    }
}
