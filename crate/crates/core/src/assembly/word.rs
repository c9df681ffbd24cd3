//! Words in the three generators, with nested repetition.
//!
//! Generator `1` is the plane `E`, `2` the top projection `P₁`, `3` the
//! interpolating projection `Q`. A stage factor is `(1 (2 3 2)^p 1)^m`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::hilbert::{HVector, LinOp};

pub const GEN_PLANE: u8 = 1;
pub const GEN_TOP: u8 = 2;
pub const GEN_INTERP: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Letter(u8),
    Group { body: Vec<Term>, exponent: Exponent },
}

impl Term {
    /// `(1 (2 3 2)^p 1)^m`.
    pub fn stage_factor(p: Exponent, m: Exponent) -> Term {
        let inner = Term::Group {
            body: vec![Term::Letter(GEN_TOP), Term::Letter(GEN_INTERP), Term::Letter(GEN_TOP)],
            exponent: p,
        };
        Term::Group { body: vec![Term::Letter(GEN_PLANE), inner, Term::Letter(GEN_PLANE)], exponent: m }
    }

    pub fn flattened_len(&self) -> BigUint {
        match self {
            Term::Letter(_) => BigUint::from(1u32),
            Term::Group { body, exponent } => body.iter().map(Term::flattened_len).sum::<BigUint>() * exponent.value(),
        }
    }

    fn generators(&self, out: &mut BTreeSet<u8>) {
        match self {
            Term::Letter(g) => {
                out.insert(*g);
            }
            Term::Group { body, .. } => body.iter().for_each(|t| t.generators(out)),
        }
    }

    fn for_each_letter(&self, f: &mut dyn FnMut(u8)) {
        match self {
            Term::Letter(g) => f(*g),
            Term::Group { body, exponent } => {
                let n = exponent.to_u64().expect("flattening checked against a limit");
                for _ in 0..n {
                    body.iter().for_each(|t| t.for_each_letter(f));
                }
            }
        }
    }

    /// Compact rendering with exponents replaced by their decimal digit counts
    /// when they are long, e.g. `(1(232)^{4210 digits}1)^{7}`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s);
        s
    }

    fn render_into(&self, s: &mut String) {
        match self {
            Term::Letter(g) => {
                let _ = write!(s, "{g}");
            }
            Term::Group { body, exponent } => {
                s.push('(');
                body.iter().for_each(|t| t.render_into(s));
                s.push(')');
                if exponent.digits() > 20 {
                    let _ = write!(s, "^{{{} digits}}", exponent.digits());
                } else {
                    let _ = write!(s, "^{{{exponent}}}");
                }
            }
        }
    }

    /// Dense evaluation: letters by generator, groups by binary powering.
    fn dense(&self, gens: &[LinOp; 3]) -> Result<LinOp> {
        match self {
            Term::Letter(g) => gens
                .get((*g as usize).wrapping_sub(1))
                .cloned()
                .ok_or_else(|| Error::Invalid(format!("unknown generator {g}"))),
            Term::Group { body, exponent } => {
                let dim = gens[0].nrows();
                let mut base = LinOp::identity(dim, dim);
                for t in body {
                    base = t.dense(gens)? * base;
                }
                let mut n = exponent
                    .to_u64()
                    .ok_or(Error::NumericalRange { context: "dense group exponent", value: exponent.to_f64() })?;
                let mut acc = LinOp::identity(dim, dim);
                while n > 0 {
                    if n & 1 == 1 {
                        acc = &base * &acc;
                    }
                    base = &base * &base;
                    n >>= 1;
                }
                Ok(acc)
            }
        }
    }
}

/// Terms are applied left to right; `stage_marks[i]` is the number of terms
/// applied when stage `i + 1` ends.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Word {
    pub terms: Vec<Term>,
    pub stage_marks: Vec<usize>,
}

impl Word {
    pub fn flattened_len(&self) -> BigUint {
        self.terms.iter().map(Term::flattened_len).sum()
    }

    pub fn generators(&self) -> BTreeSet<u8> {
        let mut out = BTreeSet::new();
        self.terms.iter().for_each(|t| t.generators(&mut out));
        out
    }

    /// The letters in order, or `None` if there are more than `limit`.
    pub fn letters(&self, limit: u64) -> Option<Vec<u8>> {
        let len = self.flattened_len();
        if len > BigUint::from(limit) {
            return None;
        }
        let mut out = Vec::with_capacity(len.to_usize().unwrap_or(0));
        self.terms.iter().for_each(|t| t.for_each_letter(&mut |g| out.push(g)));
        Some(out)
    }

    /// Iterates at every stage mark, applying one letter at a time.
    pub fn apply_flattened(&self, gens: &[LinOp; 3], x: &HVector, limit: u64) -> Option<Vec<HVector>> {
        let mut marks = Vec::with_capacity(self.stage_marks.len() + 1);
        let mut x = x.clone();
        marks.push(x.clone());
        let mut start = 0;
        for &end in &self.stage_marks {
            let w = Word { terms: self.terms[start..end].to_vec(), stage_marks: Vec::new() };
            for g in w.letters(limit)? {
                x = &gens[g as usize - 1] * x;
            }
            marks.push(x.clone());
            start = end;
        }
        Some(marks)
    }

    /// Iterates at every stage mark, evaluating groups as dense powers.
    pub fn apply_grouped(&self, gens: &[LinOp; 3], x: &HVector) -> Result<Vec<HVector>> {
        let mut marks = vec![x.clone()];
        let mut x = x.clone();
        let mut start = 0;
        for &end in &self.stage_marks {
            for t in &self.terms[start..end] {
                x = t.dense(gens)? * x;
            }
            marks.push(x.clone());
            start = end;
        }
        Ok(marks)
    }

    pub fn is_empty(&self) -> bool {
        self.flattened_len().is_zero()
    }
}
