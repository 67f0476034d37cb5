//! A continuous-logic formula language over pointed trees.
//!
//! Formulas are built from distance atoms `d(s, t)` (with `p` the
//! basepoint), rational constants, `+`, truncated subtraction `-.`,
//! `max`, `min`, `abs(a - b)`, scaling by a rational constant, and the
//! quantifiers `inf v. e` and `sup v. e`.
//!
//! ```
//! use rtree::formula::parse_formula;
//! let f = parse_formula("sup x. d(x,p) -. 1/2").unwrap();
//! assert!(f.free_vars().is_empty());
//! ```

mod axioms;
mod deficiency;
mod eval;
mod parse;
pub(crate) mod pl;

use std::collections::BTreeSet;
use std::fmt;

use crate::rat::Rat;

pub use axioms::{check_rt_axioms, AxiomReport, AXIOM1, AXIOM2, AXIOM3};
pub use deficiency::{psi_at, psi_formula_text, rb_deficiency, rb_deficiency_witness};
pub use eval::{eval_qf, eval_quantified, CertifiedValue, EvalError, Valuation};
pub use parse::{parse_formula, parse_formula_declared, ParseError, ParseErrorKind};

/// A point-valued term: the basepoint or a named variable/parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    P,
    Name(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::P => write!(f, "p"),
            Term::Name(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Const(Rat),
    Dist(Term, Term),
    Add(Box<Formula>, Box<Formula>),
    /// `a -. b = max(a - b, 0)`.
    Monus(Box<Formula>, Box<Formula>),
    Scale(Rat, Box<Formula>),
    Max(Box<Formula>, Box<Formula>),
    Min(Box<Formula>, Box<Formula>),
    AbsDiff(Box<Formula>, Box<Formula>),
    Inf(String, Box<Formula>),
    Sup(String, Box<Formula>),
}

impl Formula {
    pub fn dist(a: Term, b: Term) -> Formula {
        Formula::Dist(a, b)
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Const(_) | Formula::Dist(..) => true,
            Formula::Scale(_, e) => e.is_quantifier_free(),
            Formula::Add(a, b)
            | Formula::Monus(a, b)
            | Formula::Max(a, b)
            | Formula::Min(a, b)
            | Formula::AbsDiff(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            Formula::Inf(..) | Formula::Sup(..) => false,
        }
    }

    /// Names occurring free, in sorted order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Const(_) => {}
            Formula::Dist(a, b) => {
                for t in [a, b] {
                    if let Term::Name(n) = t {
                        if !bound.contains(n) {
                            out.insert(n.clone());
                        }
                    }
                }
            }
            Formula::Scale(_, e) => e.collect_free(bound, out),
            Formula::Add(a, b)
            | Formula::Monus(a, b)
            | Formula::Max(a, b)
            | Formula::Min(a, b)
            | Formula::AbsDiff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Inf(v, e) | Formula::Sup(v, e) => {
                bound.push(v.clone());
                e.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Syntactic Lipschitz bound of the formula in the point variable `v`:
    /// moving `v` by `ε` changes the value by at most `L·ε`.
    pub fn lipschitz(&self, v: &str) -> Rat {
        match self {
            Formula::Const(_) => Rat::zero(),
            Formula::Dist(a, b) => {
                let hit = |t: &Term| matches!(t, Term::Name(n) if n == v);
                Rat::int(hit(a) as i64 + hit(b) as i64)
            }
            Formula::Scale(c, e) => c.abs() * e.lipschitz(v),
            Formula::Add(a, b) | Formula::Monus(a, b) | Formula::AbsDiff(a, b) => {
                a.lipschitz(v) + b.lipschitz(v)
            }
            Formula::Max(a, b) | Formula::Min(a, b) => {
                let (la, lb) = (a.lipschitz(v), b.lipschitz(v));
                if la > lb {
                    la
                } else {
                    lb
                }
            }
            Formula::Inf(w, e) | Formula::Sup(w, e) => {
                if w == v {
                    Rat::zero()
                } else {
                    e.lipschitz(v)
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(c) => write!(f, "{c}"),
            Formula::Dist(a, b) => write!(f, "d({a},{b})"),
            Formula::Add(a, b) => write!(f, "({a} + {b})"),
            Formula::Monus(a, b) => write!(f, "({a} -. {b})"),
            Formula::Scale(c, e) => write!(f, "{c} * ({e})"),
            Formula::Max(a, b) => write!(f, "max({a}, {b})"),
            Formula::Min(a, b) => write!(f, "min({a}, {b})"),
            Formula::AbsDiff(a, b) => write!(f, "abs({a} - {b})"),
            Formula::Inf(v, e) => write!(f, "(inf {v}. {e})"),
            Formula::Sup(v, e) => write!(f, "(sup {v}. {e})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn lipschitz_bounds() {
        let f = parse_formula("max(d(x,y), min(d(x,p), 3/2))").unwrap();
        assert_eq!(f.lipschitz("x"), rat!(1));
        let g = parse_formula("d(x,y) + 2 * d(x,p)").unwrap();
        assert_eq!(g.lipschitz("x"), rat!(3));
        assert_eq!(g.lipschitz("y"), rat!(1));
        let h = parse_formula("sup x. d(x,y)").unwrap();
        assert_eq!(h.lipschitz("x"), rat!(0));
    }

    #[test]
    fn display_round_trips() {
        for src in ["d(x,p) -. 1/2", "sup x. inf y. abs(d(x,y) - d(y,p))", "max(d(a,b), 3 * d(a,p)) + 1"] {
            let f = parse_formula(src).unwrap();
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        }
    }
}
