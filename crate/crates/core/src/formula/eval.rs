//! Exact and certified evaluation of formulas on a tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use super::pl::{rmax, rmin, Pl};
use super::{Formula, Term};
use crate::rat::Rat;
use crate::tree::{EdgeIx, PointRef, TreeSkeleton};

/// Values of free variables and named parameters.
pub type Valuation = BTreeMap<String, PointRef>;

/// An enclosure `lower <= value <= upper`; exact values have
/// `lower == upper`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedValue {
    pub lower: Rat,
    pub upper: Rat,
    pub mesh: Rat,
}

impl CertifiedValue {
    pub fn exact(v: Rat) -> Self {
        CertifiedValue { lower: v.clone(), upper: v, mesh: Rat::zero() }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, v: &Rat) -> bool {
        &self.lower <= v && v <= &self.upper
    }

    fn with_mesh(mut self, mesh: &Rat) -> Self {
        if !self.is_exact() {
            self.mesh = mesh.clone();
        }
        self
    }
}

impl fmt::Display for CertifiedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.lower)
        } else {
            write!(f, "[{}, {}]", self.lower, self.upper)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no value for `{0}`")]
    Unbound(String),
    #[error("formula has quantifiers; use certified evaluation")]
    NotQuantifierFree,
    #[error("mesh must be positive, got {0}")]
    NonPositiveMesh(Rat),
}

fn resolve(tree: &TreeSkeleton, t: &Term, v: &Valuation) -> Result<PointRef, EvalError> {
    match t {
        Term::P => Ok(tree.base_point()),
        Term::Name(n) => v.get(n).cloned().ok_or_else(|| EvalError::Unbound(n.clone())),
    }
}

/// Exact value of a quantifier-free formula.
pub fn eval_qf(tree: &TreeSkeleton, f: &Formula, v: &Valuation) -> Result<Rat, EvalError> {
    let rec = |e: &Formula| eval_qf(tree, e, v);
    Ok(match f {
        Formula::Const(c) => c.clone(),
        Formula::Dist(a, b) => tree.distance(&resolve(tree, a, v)?, &resolve(tree, b, v)?),
        Formula::Add(a, b) => rec(a)? + rec(b)?,
        Formula::Monus(a, b) => rec(a)?.monus(&rec(b)?),
        Formula::Scale(c, e) => c * rec(e)?,
        Formula::Max(a, b) => rmax(&rec(a)?, &rec(b)?),
        Formula::Min(a, b) => rmin(&rec(a)?, &rec(b)?),
        Formula::AbsDiff(a, b) => (rec(a)? - rec(b)?).abs(),
        Formula::Inf(..) | Formula::Sup(..) => return Err(EvalError::NotQuantifierFree),
    })
}

/// Evaluate a formula that may contain quantifiers.
///
/// A quantifier whose body is quantifier-free is optimized exactly: along
/// each edge the body is piecewise linear in the bound variable, with kinks
/// at projections of the other points and at crossings. Deeper quantifiers
/// enumerate a grid (vertices, points at most `mesh` apart on every edge,
/// projections of all points in scope) and widen by `L·mesh`, `L` the
/// syntactic Lipschitz bound of the body in the bound variable.
pub fn eval_quantified(
    tree: &TreeSkeleton,
    f: &Formula,
    v: &Valuation,
    mesh: &Rat,
) -> Result<CertifiedValue, EvalError> {
    if !mesh.is_positive() {
        return Err(EvalError::NonPositiveMesh(mesh.clone()));
    }
    for n in f.free_vars() {
        if !v.contains_key(&n) {
            return Err(EvalError::Unbound(n));
        }
    }
    if let Some(exact) = super::axioms::named_exact(tree, f, mesh) {
        return Ok(exact);
    }
    Ok(cert(tree, f, v, mesh).with_mesh(mesh))
}

fn cert(tree: &TreeSkeleton, f: &Formula, v: &Valuation, mesh: &Rat) -> CertifiedValue {
    if f.is_quantifier_free() {
        return CertifiedValue::exact(eval_qf(tree, f, v).expect("free variables checked"));
    }
    let rec = |e: &Formula| cert(tree, e, v, mesh);
    let (lower, upper) = match f {
        Formula::Const(_) | Formula::Dist(..) => unreachable!("quantifier-free"),
        Formula::Add(a, b) => {
            let (a, b) = (rec(a), rec(b));
            (a.lower + b.lower, a.upper + b.upper)
        }
        Formula::Monus(a, b) => {
            let (a, b) = (rec(a), rec(b));
            (a.lower.monus(&b.upper), a.upper.monus(&b.lower))
        }
        Formula::Scale(c, e) => {
            let e = rec(e);
            if c.is_negative() {
                (c * e.upper, c * e.lower)
            } else {
                (c * e.lower, c * e.upper)
            }
        }
        Formula::Max(a, b) => {
            let (a, b) = (rec(a), rec(b));
            (rmax(&a.lower, &b.lower), rmax(&a.upper, &b.upper))
        }
        Formula::Min(a, b) => {
            let (a, b) = (rec(a), rec(b));
            (rmin(&a.lower, &b.lower), rmin(&a.upper, &b.upper))
        }
        Formula::AbsDiff(a, b) => {
            let (a, b) = (rec(a), rec(b));
            let lo = &a.lower - &b.upper;
            let hi = &a.upper - &b.lower;
            if !lo.is_positive() && !hi.is_negative() {
                (Rat::zero(), rmax(&lo.abs(), &hi.abs()))
            } else {
                (rmin(&lo.abs(), &hi.abs()), rmax(&lo.abs(), &hi.abs()))
            }
        }
        Formula::Inf(x, body) | Formula::Sup(x, body) => {
            let is_inf = matches!(f, Formula::Inf(..));
            if body.is_quantifier_free() {
                let val = optimize_exact(tree, x, body, v, is_inf);
                return CertifiedValue::exact(val);
            }
            let anchors: Vec<PointRef> = v.values().cloned().collect();
            let lip = body.lipschitz(x);
            let slack = &lip * mesh;
            let mut lo: Option<Rat> = None;
            let mut hi: Option<Rat> = None;
            for g in grid(tree, mesh, &anchors) {
                let mut env = v.clone();
                env.insert(x.clone(), g);
                let c = cert(tree, body, &env, mesh);
                let pick = |cur: Option<Rat>, new: Rat| match cur {
                    None => Some(new),
                    Some(c) => Some(if is_inf { rmin(&c, &new) } else { rmax(&c, &new) }),
                };
                lo = pick(lo, c.lower);
                hi = pick(hi, c.upper);
            }
            let (lo, hi) = (lo.expect("grid nonempty"), hi.expect("grid nonempty"));
            if is_inf {
                (lo - slack, hi)
            } else {
                (lo, hi + slack)
            }
        }
    };
    CertifiedValue { lower, upper, mesh: mesh.clone() }
}

/// Candidate points: every vertex, points at most `mesh` apart along every
/// edge, and the projection of each anchor onto each edge.
pub(crate) fn grid(tree: &TreeSkeleton, mesh: &Rat, anchors: &[PointRef]) -> Vec<PointRef> {
    let mut out: BTreeSet<PointRef> = tree.nodes().map(PointRef::Vertex).collect();
    for e in tree.edge_ixs() {
        let edge = tree.edge(e);
        let k = ceil_div(&edge.len, mesh);
        for i in 1..k {
            let off = edge.len.times(i).over(k);
            out.insert(PointRef::Edge { edge: e, offset: off });
        }
        let (u, v) = (PointRef::Vertex(edge.u), PointRef::Vertex(edge.v));
        for a in anchors {
            out.insert(tree.project_to_segment(a, &u, &v));
        }
    }
    out.into_iter().collect()
}

pub(crate) fn ceil_div(len: &Rat, mesh: &Rat) -> i64 {
    let q = len / mesh;
    let c: BigInt = q.ceil();
    i64::try_from(c).expect("grid too fine").max(1)
}

/// Exact inf/sup over the tree of a quantifier-free body in `x`.
fn optimize_exact(tree: &TreeSkeleton, x: &str, body: &Formula, v: &Valuation, is_inf: bool) -> Rat {
    let mut best: Option<Rat> = None;
    let mut take = |val: Rat| {
        best = Some(match best.take() {
            None => val,
            Some(b) => {
                if is_inf {
                    rmin(&b, &val)
                } else {
                    rmax(&b, &val)
                }
            }
        });
    };
    if tree.edge_count() == 0 {
        let mut env = v.clone();
        env.insert(x.to_string(), tree.base_point());
        take(eval_qf(tree, body, &env).expect("free variables checked"));
    }
    for e in tree.edge_ixs() {
        let f = edge_function(tree, e, x, body, v);
        take(if is_inf { f.min_value().1 } else { f.max_value().1 });
    }
    best.expect("tree has a point")
}

/// The body as a function of the offset of `x` along edge `e`.
pub(crate) fn edge_function(tree: &TreeSkeleton, e: EdgeIx, x: &str, body: &Formula, v: &Valuation) -> Pl {
    let edge = tree.edge(e);
    let len = &edge.len;
    let (u, w) = (PointRef::Vertex(edge.u), PointRef::Vertex(edge.v));
    let rec = |f: &Formula| edge_function(tree, e, x, f, v);
    let is_x = |t: &Term| matches!(t, Term::Name(n) if n == x);
    match body {
        Formula::Const(c) => Pl::constant(len, c.clone()),
        Formula::Dist(a, b) => match (is_x(a), is_x(b)) {
            (true, true) => Pl::constant(len, Rat::zero()),
            (false, false) => {
                let d = tree.distance(&resolve(tree, a, v).expect("bound"), &resolve(tree, b, v).expect("bound"));
                Pl::constant(len, d)
            }
            (xa, _) => {
                let q = resolve(tree, if xa { b } else { a }, v).expect("bound");
                let proj = tree.project_to_segment(&q, &u, &w);
                Pl::vee(len, &tree.distance(&u, &proj), &tree.distance(&q, &proj))
            }
        },
        Formula::Add(a, b) => rec(a).combine(&rec(b), |p, q| p + q),
        Formula::Monus(a, b) => rec(a).combine(&rec(b), |p, q| p.monus(q)),
        Formula::Scale(c, a) => rec(a).map(|val| c * val),
        Formula::Max(a, b) => rec(a).combine(&rec(b), rmax),
        Formula::Min(a, b) => rec(a).combine(&rec(b), rmin),
        Formula::AbsDiff(a, b) => rec(a).combine(&rec(b), |p, q| (p - q).abs()),
        Formula::Inf(..) | Formula::Sup(..) => unreachable!("quantifier-free body"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::rat;
    use crate::tree::TreeGraph;

    fn tripod() -> TreeSkeleton {
        let mut g = TreeGraph::new();
        g.basepoint("p").node("y").node("a").node("b");
        g.edge("p", "y", rat!(1)).edge("y", "a", rat!(1)).edge("y", "b", rat!(1));
        g.build().unwrap()
    }

    fn vals(t: &TreeSkeleton, names: &[&str]) -> Valuation {
        names.iter().map(|n| (n.to_string(), t.at(n))).collect()
    }

    #[test]
    fn quantifier_free_values() {
        let t = tripod();
        let v = vals(&t, &["a", "b"]);
        assert_eq!(eval_qf(&t, &parse_formula("d(a,b)").unwrap(), &v).unwrap(), rat!(2));
        assert_eq!(eval_qf(&t, &parse_formula("d(a,a)").unwrap(), &v).unwrap(), rat!(0));
        assert_eq!(eval_qf(&t, &parse_formula("d(a,p) -. 3").unwrap(), &v).unwrap(), rat!(0));
        assert!(matches!(eval_qf(&t, &parse_formula("d(c,p)").unwrap(), &v), Err(EvalError::Unbound(_))));
    }

    #[test]
    fn single_quantifiers_are_exact() {
        let t = tripod();
        let m = rat!(1 / 4);
        let sup = eval_quantified(&t, &parse_formula("sup x. d(x,p)").unwrap(), &Valuation::new(), &m).unwrap();
        assert_eq!(sup, CertifiedValue::exact(rat!(2)));
        let v = vals(&t, &["a"]);
        let inf = eval_quantified(&t, &parse_formula("inf x. d(x,a)").unwrap(), &v, &m).unwrap();
        assert_eq!(inf, CertifiedValue::exact(rat!(0)));
        // Minimized strictly inside an edge: the point of [a,b] balancing.
        let v = vals(&t, &["a", "b"]);
        let f = parse_formula("inf x. max(d(x,a), d(x,b) + 1/2)").unwrap();
        assert_eq!(eval_quantified(&t, &f, &v, &m).unwrap(), CertifiedValue::exact(rat!(5 / 4)));
    }

    #[test]
    fn nested_quantifiers_enclose_the_diameter() {
        let t = tripod();
        let f = parse_formula("sup x. sup y. d(x,y)").unwrap();
        let c = eval_quantified(&t, &f, &Valuation::new(), &rat!(1 / 2)).unwrap();
        assert!(c.contains(&rat!(2)), "{c}");
        assert_eq!(c.lower, rat!(2));
    }

    #[test]
    fn hyperbolicity_axiom_encloses_zero() {
        let t = tripod();
        let f = parse_formula(crate::formula::axioms::AXIOM3).unwrap();
        let c = eval_quantified(&t, &f, &Valuation::new(), &rat!(1 / 2)).unwrap();
        assert_eq!(c, CertifiedValue::exact(rat!(0)));
        // The same formula with renamed variables goes through the grid and
        // still encloses zero.
        let g = parse_formula(&crate::formula::axioms::AXIOM3.replace('w', "v")).unwrap();
        let c = eval_quantified(&t, &g, &Valuation::new(), &rat!(1)).unwrap();
        assert!(c.contains(&rat!(0)));
    }

    #[test]
    fn mesh_must_be_positive() {
        let t = tripod();
        let f = parse_formula("sup x. d(x,p)").unwrap();
        assert!(eval_quantified(&t, &f, &Valuation::new(), &rat!(0)).is_err());
    }
}
