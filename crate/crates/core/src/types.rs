//! Complete types over finite parameter sets.
//!
//! The type of a tuple `b_1..b_n` over `A` is determined by the closest
//! points `e_i` of the spanned subtree `E_A`, the distances `s_i` to it, and
//! the pairwise distances `ρ_ij = d(b_i, b_j)`. Descriptors store the `e_i`
//! in the coordinates of the context's own skeleton, which depends only on
//! the distances between the parameters, so descriptors computed in
//! different ambient trees over the same parameters compare directly.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::amalgam::{glue_family, AmalgamError, Attachment, GlueSpec};
use crate::formula::CertifiedValue;
use crate::rat::Rat;
use crate::realize::{four_point_check, realize_tree, FourPointWitness, MetricMatrix};
use crate::subtree::{spanned_subtree, SpannedSubtree};
use crate::tree::{Embedding, NodeIx, PointRef, TreeSkeleton};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("descriptors live over different contexts")]
    ContextMismatch,
    #[error("descriptors have different arities {0} and {1}")]
    Arity(usize, usize),
    #[error("inconsistent descriptor: {0}")]
    Inconsistent(DescriptorViolation),
    #[error("principality is only defined over the empty parameter set")]
    NonEmptyContext,
    #[error(transparent)]
    Amalgam(#[from] AmalgamError),
}

/// Why a descriptor describes no type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DescriptorViolation {
    Shape(String),
    /// `s_i` outside `[0, r - d(p, e_i)]`.
    OffsetBound { index: usize, offset: Rat, max: Rat },
    /// `ρ` is not symmetric with zero diagonal.
    Pairwise { i: usize, j: usize },
    /// The combined matrix on `e_1..e_n, x_1..x_n` is not additive; indices
    /// below `n` are `e`'s, the rest `x`'s.
    FourPoint(FourPointWitness),
}

impl fmt::Display for DescriptorViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescriptorViolation::Shape(s) => write!(f, "violation=shape detail={s}"),
            DescriptorViolation::OffsetBound { index, offset, max } => {
                write!(f, "violation=offset-bound index={index} offset={offset} max={max}")
            }
            DescriptorViolation::Pairwise { i, j } => write!(f, "violation=pairwise i={i} j={j}"),
            DescriptorViolation::FourPoint(w) => write!(f, "violation=four-point {w}"),
        }
    }
}

/// Canonical data of an n-type over the parameters spanning `context`.
#[derive(Clone, Debug)]
pub struct NTypeDescriptor {
    pub context: SpannedSubtree,
    /// Closest points, as points of `context.realized()`.
    pub closest: Vec<PointRef>,
    pub offsets: Vec<Rat>,
    pub pairwise: Vec<Vec<Rat>>,
    /// Ambient radius bound used for the offset check.
    pub radius: Rat,
}

impl NTypeDescriptor {
    pub fn arity(&self) -> usize {
        self.closest.len()
    }

    /// Build a descriptor over `context` from closest points given in the
    /// context's ambient tree.
    pub fn over(
        context: SpannedSubtree,
        closest_ambient: &[PointRef],
        offsets: Vec<Rat>,
        pairwise: Vec<Vec<Rat>>,
        radius: Rat,
    ) -> Option<Self> {
        let closest = closest_ambient.iter().map(|e| context.from_ambient(e)).collect::<Option<Vec<_>>>()?;
        Some(NTypeDescriptor { context, closest, offsets, pairwise, radius })
    }

    /// Closest point `i` in the ambient tree of the context.
    pub fn closest_ambient(&self, i: usize) -> PointRef {
        self.context.to_ambient(&self.closest[i])
    }

    pub fn with_radius(mut self, r: Rat) -> Self {
        self.radius = r;
        self
    }

    fn ctx_distance(&self, a: &PointRef, b: &PointRef) -> Rat {
        self.context.realized().distance(a, b)
    }

    /// Same parameters up to the identification of contexts.
    pub fn same_context(&self, other: &NTypeDescriptor) -> bool {
        self.context.realized() == other.context.realized()
            && self.context.generators().len() == other.context.generators().len()
    }

    /// The combined matrix on `e_1..e_n, x_1..x_n`.
    pub fn combined_matrix(&self) -> Result<MetricMatrix, DescriptorViolation> {
        let n = self.arity();
        let mut labels: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        labels.extend((0..n).map(|i| format!("x{i}")));
        let mut m = vec![vec![Rat::zero(); 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                let dee = self.ctx_distance(&self.closest[i], &self.closest[j]);
                m[i][j] = dee.clone();
                m[n + i][j] = &dee + &self.offsets[i];
                m[j][n + i] = &dee + &self.offsets[i];
                m[n + i][n + j] = self.pairwise[i][j].clone();
            }
        }
        MetricMatrix::new(labels, m).map_err(|e| DescriptorViolation::Shape(e.to_string()))
    }
}

impl fmt::Display for NTypeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.arity();
        for i in 0..n {
            let e = self.context.ambient().describe(&self.closest_ambient(i));
            writeln!(f, "closest {i} {e}")?;
        }
        for i in 0..n {
            writeln!(f, "offset {i} {}", self.offsets[i])?;
        }
        for i in 0..n {
            for j in i + 1..n {
                writeln!(f, "pair {i} {j} {}", self.pairwise[i][j])?;
            }
        }
        Ok(())
    }
}

/// Type of `b` over `A ∪ {p}` in `tree`.
pub fn type_of(tree: &TreeSkeleton, a: &[PointRef], b: &[PointRef]) -> NTypeDescriptor {
    type_over(spanned_subtree(tree, a), b)
}

/// Type of `b` over an already computed context.
pub fn type_over(context: SpannedSubtree, b: &[PointRef]) -> NTypeDescriptor {
    let tree = context.ambient().clone();
    let mut closest = Vec::new();
    let mut offsets = Vec::new();
    for x in b {
        let (e, s) = context.project(x);
        closest.push(context.from_ambient(&e).expect("projection lies in the subtree"));
        offsets.push(s);
    }
    let pairwise = b.iter().map(|x| b.iter().map(|y| tree.distance(x, y)).collect()).collect();
    NTypeDescriptor { context, closest, offsets, pairwise, radius: tree.radius() }
}

/// Check that the descriptor is the data of some type.
pub fn validate_descriptor(q: &NTypeDescriptor) -> Result<(), DescriptorViolation> {
    let n = q.arity();
    if q.offsets.len() != n || q.pairwise.len() != n || q.pairwise.iter().any(|row| row.len() != n) {
        return Err(DescriptorViolation::Shape(format!("arity {n} does not match offsets or pairs")));
    }
    let ctx = q.context.realized();
    for (i, e) in q.closest.iter().enumerate() {
        if ctx.normalize(e).as_ref() != Ok(e) {
            return Err(DescriptorViolation::Shape(format!("closest point {i} is not a point of the context")));
        }
        let max = &q.radius - ctx.height(e);
        if q.offsets[i].is_negative() || q.offsets[i] > max {
            return Err(DescriptorViolation::OffsetBound { index: i, offset: q.offsets[i].clone(), max });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if q.pairwise[i][j] != q.pairwise[j][i] || (i == j && !q.pairwise[i][i].is_zero()) {
                return Err(DescriptorViolation::Pairwise { i, j });
            }
        }
    }
    four_point_check(&q.combined_matrix()?).map_err(DescriptorViolation::FourPoint)
}

/// Equality of types over a common context.
pub fn types_equal(q1: &NTypeDescriptor, q2: &NTypeDescriptor) -> Result<bool, TypeError> {
    if !q1.same_context(q2) {
        return Err(TypeError::ContextMismatch);
    }
    if q1.arity() != q2.arity() {
        return Ok(false);
    }
    Ok(q1.closest == q2.closest && q1.offsets == q2.offsets && q1.pairwise == q2.pairwise)
}

/// An extension of a tree containing a realization of a type.
#[derive(Clone, Debug)]
pub struct Realization {
    pub tree: TreeSkeleton,
    /// Embedding of the original tree into `tree`.
    pub embedding: Embedding,
    pub points: Vec<PointRef>,
}

/// Realize `q` over its own context's ambient tree and parameters.
pub fn realize_type(q: &NTypeDescriptor) -> Result<Realization, TypeError> {
    let gens: Vec<PointRef> = q.context.generators()[1..].to_vec();
    realize_type_over(q.context.ambient(), &gens, q)
}

/// Realize `q` in an extension of `tree`, where `a` are the parameters
/// (their spanned subtree must be `q`'s context). Each group of indices
/// sharing a closest point `e` with positive offsets is realized as a tree
/// from its distances and glued at `e` on fresh branches.
pub fn realize_type_over(tree: &TreeSkeleton, a: &[PointRef], q: &NTypeDescriptor) -> Result<Realization, TypeError> {
    let ctx = spanned_subtree(tree, a);
    if ctx.realized() != q.context.realized() {
        return Err(TypeError::ContextMismatch);
    }
    validate_descriptor(q).map_err(TypeError::Inconsistent)?;
    let n = q.arity();
    let mut classes: BTreeMap<PointRef, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        if q.offsets[i].is_positive() {
            classes.entry(q.closest[i].clone()).or_default().push(i);
        }
    }
    let mut attachments = Vec::new();
    let mut class_list = Vec::new();
    for (e, idx) in &classes {
        let mut labels = vec!["e".to_string()];
        labels.extend(idx.iter().map(|i| format!("x{i}")));
        let k = idx.len() + 1;
        let mut m = vec![vec![Rat::zero(); k]; k];
        for (a_, &i) in idx.iter().enumerate() {
            m[0][a_ + 1] = q.offsets[i].clone();
            m[a_ + 1][0] = q.offsets[i].clone();
            for (b_, &j) in idx.iter().enumerate() {
                m[a_ + 1][b_ + 1] = q.pairwise[i][j].clone();
            }
        }
        let mm = MetricMatrix::new(labels, m).expect("validated descriptor");
        let k_tree = realize_tree(&mm, "e").expect("validated descriptor is additive");
        attachments.push(Attachment { sub: k_tree.clone(), at_sub: k_tree.base_point(), at_base: ctx.to_ambient(e) });
        class_list.push(idx.clone());
    }
    let r = if tree.radius() > q.radius { tree.radius() } else { q.radius.clone() };
    let glued = glue_family(&GlueSpec { base: tree.clone(), attachments: attachments.clone() }, &r)?;
    let mut points = vec![None; n];
    for (k, idx) in class_list.iter().enumerate() {
        let sub = &attachments[k].sub;
        for &i in idx {
            let x = sub.labeled(&format!("x{i}")).expect("labelled");
            points[i] = Some(glued.parts[k].apply(sub, &glued.tree, &PointRef::Vertex(x)));
        }
    }
    for i in 0..n {
        if points[i].is_none() {
            points[i] = Some(glued.base.apply(tree, &glued.tree, &ctx.to_ambient(&q.closest[i])));
        }
    }
    Ok(Realization {
        tree: glued.tree,
        embedding: glued.base,
        points: points.into_iter().map(|p| p.expect("assigned")).collect(),
    })
}

/// Distance between two 1-types over the same context.
pub fn one_type_distance(q1: &NTypeDescriptor, q2: &NTypeDescriptor) -> Result<Rat, TypeError> {
    if !q1.same_context(q2) {
        return Err(TypeError::ContextMismatch);
    }
    if q1.arity() != 1 || q2.arity() != 1 {
        return Err(TypeError::Arity(q1.arity(), q2.arity()));
    }
    let (e1, e2) = (&q1.closest[0], &q2.closest[0]);
    let (s1, s2) = (&q1.offsets[0], &q2.offsets[0]);
    Ok(if e1 != e2 { s1 + q1.ctx_distance(e1, e2) + s2 } else { (s1 - s2).abs() })
}

/// 1-type over the empty parameter set at height `s`.
pub fn empty_one_type(s: Rat, r: Rat) -> NTypeDescriptor {
    let p = TreeSkeleton::point("p");
    let ctx = spanned_subtree(&p, &[]);
    let e = ctx.realized().base_point();
    NTypeDescriptor { context: ctx, closest: vec![e], offsets: vec![s], pairwise: vec![vec![Rat::zero()]], radius: r }
}

/// n-type over the empty parameter set with heights `s` and distances `rho`.
pub fn empty_type(s: Vec<Rat>, rho: Vec<Vec<Rat>>, r: Rat) -> NTypeDescriptor {
    let p = TreeSkeleton::point("p");
    let ctx = spanned_subtree(&p, &[]);
    let e = ctx.realized().base_point();
    NTypeDescriptor { context: ctx, closest: vec![e; s.len()], offsets: s, pairwise: rho, radius: r }
}

/// Upper and lower bounds on `inf max_i d(a_i, b_i)` over joint
/// realizations `a ⊨ q1`, `b ⊨ q2`.
///
/// Joint realizations are amalgams of the two realization trees over the
/// context that may additionally identify an initial piece of each
/// segment `[e, a_i]` with an initial piece of some `[e, b_j]` hanging at
/// the same closest point `e`. Identification depths range over the grid
/// of step `mesh` together with every depth where the answer can change,
/// so the upper bound is exact for this family of gluings; the lower bound
/// subtracts the sensitivity `2·mesh`.
pub fn type_distance_search(q1: &NTypeDescriptor, q2: &NTypeDescriptor, mesh: &Rat) -> Result<CertifiedValue, TypeError> {
    if !q1.same_context(q2) {
        return Err(TypeError::ContextMismatch);
    }
    if q1.arity() != q2.arity() {
        return Err(TypeError::Arity(q1.arity(), q2.arity()));
    }
    if q1.arity() == 1 {
        return Ok(CertifiedValue::exact(one_type_distance(q1, q2)?));
    }
    let n = q1.arity();
    // Indices whose a and b hang at the same context point can profit from
    // overlap; everything else has a fixed distance.
    let mut worst_fixed = Rat::zero();
    let mut shared: BTreeMap<PointRef, Vec<usize>> = BTreeMap::new();
    for k in 0..n {
        let (e1, e2) = (&q1.closest[k], &q2.closest[k]);
        if e1 == e2 && q1.offsets[k].is_positive() && q2.offsets[k].is_positive() {
            shared.entry(e1.clone()).or_default().push(k);
        } else {
            let d = if e1 == e2 {
                (&q1.offsets[k] - &q2.offsets[k]).abs()
            } else {
                &q1.offsets[k] + q1.ctx_distance(e1, e2) + &q2.offsets[k]
            };
            if d > worst_fixed {
                worst_fixed = d;
            }
        }
    }
    let mut best = worst_fixed;
    for (e, _) in shared {
        // All indices hanging at e in either realization take part.
        let hang1: Vec<usize> = (0..n).filter(|&i| q1.closest[i] == e && q1.offsets[i].is_positive()).collect();
        let hang2: Vec<usize> = (0..n).filter(|&i| q2.closest[i] == e && q2.offsets[i].is_positive()).collect();
        let v = search_at_point(q1, q2, &hang1, &hang2, mesh);
        if v > best {
            best = v;
        }
    }
    let slack = mesh.times(2);
    Ok(CertifiedValue { lower: (&best - &slack).monus(&Rat::zero()).max(Rat::zero()), upper: best, mesh: mesh.clone() })
}

/// Gromov product at the hang point of two indices of one descriptor.
fn hang_gp(q: &NTypeDescriptor, i: usize, k: usize) -> Rat {
    (&q.offsets[i] + &q.offsets[k] - &q.pairwise[i][k]).half()
}

/// Best achievable `max_k d(a_k, b_k)` over indices `k` that hang at one
/// point `e` in both realizations.
fn search_at_point(q1: &NTypeDescriptor, q2: &NTypeDescriptor, hang1: &[usize], hang2: &[usize], mesh: &Rat) -> Rat {
    let targets: Vec<usize> = hang1.iter().copied().filter(|k| hang2.contains(k)).collect();
    let m = hang1.len();
    // Every assignment of a target segment [e, b_j] to each [e, a_i].
    let mut assignments: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::new();
        for a in &assignments {
            for &j in hang2 {
                let mut a2 = a.clone();
                a2.push(j);
                next.push(a2);
            }
        }
        assignments = next;
    }
    let mut best: Option<Rat> = None;
    for pi in &assignments {
        // Candidate identification depths for each i.
        let cands: Vec<Vec<Rat>> = (0..m)
            .map(|ii| {
                let i = hang1[ii];
                let j = pi[ii];
                let cap = rmin(&q1.offsets[i], &q2.offsets[j]);
                let mut c = vec![Rat::zero(), cap.clone()];
                for (kk, &k) in hang1.iter().enumerate() {
                    let g1 = hang_gp(q1, i, k);
                    let g2 = hang_gp(q2, j, pi[kk]);
                    c.push(g1);
                    c.push(g2);
                    if hang2.contains(&k) {
                        c.push(hang_gp(q2, j, k));
                    }
                }
                let mut t = mesh.clone();
                let mut grid = 0;
                while t < cap && grid < 512 {
                    c.push(t.clone());
                    t += mesh;
                    grid += 1;
                }
                c.retain(|x| !x.is_negative() && x <= &cap);
                c.sort();
                c.dedup();
                c
            })
            .collect();
        let mut idx = vec![0usize; m];
        loop {
            let ts: Vec<&Rat> = (0..m).map(|ii| &cands[ii][idx[ii]]).collect();
            if consistent(q1, q2, hang1, pi, &ts) {
                let mut worst = Rat::zero();
                for &k in &targets {
                    let mut overlap = Rat::zero();
                    for ii in 0..m {
                        let i = hang1[ii];
                        let o = rmin(&rmin(ts[ii], &hang_gp(q1, i, k)), &hang_gp(q2, pi[ii], k));
                        if o > overlap {
                            overlap = o;
                        }
                    }
                    let d = &q1.offsets[k] + &q2.offsets[k] - overlap.times(2);
                    if d > worst {
                        worst = d;
                    }
                }
                if best.as_ref().map_or(true, |b| &worst < b) {
                    best = Some(worst);
                }
            }
            // Next combination.
            let mut pos = 0;
            loop {
                if pos == m {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < cands[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == m {
                break;
            }
        }
    }
    best.expect("the empty identification is always available")
}

/// The identified pieces `[e, a_i]_{t_i} -> [e, b_{π(i)}]_{t_i}` form an
/// isometry.
fn consistent(q1: &NTypeDescriptor, q2: &NTypeDescriptor, hang1: &[usize], pi: &[usize], ts: &[&Rat]) -> bool {
    let m = hang1.len();
    for a in 0..m {
        for b in a + 1..m {
            let t = rmin(ts[a], ts[b]);
            let g1 = rmin(&t, &hang_gp(q1, hang1[a], hang1[b]));
            let g2 = rmin(&t, &hang_gp(q2, pi[a], pi[b]));
            if g1 != g2 {
                return false;
            }
        }
    }
    true
}

fn rmin(a: &Rat, b: &Rat) -> Rat {
    if a < b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Whether a type over the empty set is realized along one piecewise
/// segment starting at `p`: with `j` maximizing `s`, `s_j = s_i + ρ_ij`
/// for every `i`.
pub fn is_principal(q: &NTypeDescriptor) -> Result<bool, TypeError> {
    if q.context.realized().node_count() != 1 {
        return Err(TypeError::NonEmptyContext);
    }
    let n = q.arity();
    if n == 0 {
        return Ok(true);
    }
    let mut j = 0;
    for i in 1..n {
        if q.offsets[i] > q.offsets[j] {
            j = i;
        }
    }
    Ok((0..n).all(|i| q.offsets[j] == &q.offsets[i] + &q.pairwise[i][j]))
}

/// Definable and algebraic closure of `A`: the subtree it spans.
pub fn dcl_acl(tree: &TreeSkeleton, a: &[PointRef]) -> SpannedSubtree {
    spanned_subtree(tree, a)
}

/// The node of the realized context standing for a generator.
pub fn context_node(q: &NTypeDescriptor, generator: usize) -> NodeIx {
    q.context.generator_node(generator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use crate::tree::TreeGraph;

    fn tripod() -> TreeSkeleton {
        let mut g = TreeGraph::new();
        g.basepoint("p").node("y").node("a").node("b");
        g.edge("p", "y", rat!(1)).edge("y", "a", rat!(1)).edge("y", "b", rat!(1));
        g.build().unwrap()
    }

    #[test]
    fn type_of_leaf_over_basepoint() {
        let t = tripod();
        let q = type_of(&t, &[], &[t.at("a")]);
        assert_eq!(q.closest_ambient(0), t.at("p"));
        assert_eq!(q.offsets, vec![rat!(2)]);
        assert!(validate_descriptor(&q).is_ok());
    }

    #[test]
    fn type_of_pair_over_stem() {
        let t = tripod();
        let q = type_of(&t, &[t.at("y")], &[t.at("a"), t.at("b")]);
        assert_eq!(q.closest_ambient(0), t.at("y"));
        assert_eq!(q.closest_ambient(1), t.at("y"));
        assert_eq!(q.offsets, vec![rat!(1), rat!(1)]);
        assert_eq!(q.pairwise[0][1], rat!(2));
        let inside = type_of(&t, &[t.at("a")], &[t.at("y")]);
        assert_eq!(inside.offsets, vec![rat!(0)]);
        assert_eq!(inside.closest_ambient(0), t.at("y"));
    }

    #[test]
    fn branches_at_y_have_equal_types() {
        let t = tripod();
        let qa = type_of(&t, &[t.at("y")], &[t.at("a")]);
        let qb = type_of(&t, &[t.at("y")], &[t.at("b")]);
        assert!(types_equal(&qa, &qb).unwrap());
        let half = t.point_on_edge_by_id("y", "b", &rat!(1 / 2)).unwrap();
        assert!(!types_equal(&qa, &type_of(&t, &[t.at("y")], &[half])).unwrap());
    }

    #[test]
    fn offset_bound_and_four_point_violations() {
        let t = tripod();
        let mut q = type_of(&t, &[], &[t.at("a")]).with_radius(rat!(2));
        q.offsets[0] = rat!(3);
        assert!(matches!(validate_descriptor(&q), Err(DescriptorViolation::OffsetBound { .. })));
        let mut q2 = type_of(&t, &[t.at("y")], &[t.at("a"), t.at("b")]);
        q2.pairwise[0][1] = rat!(3);
        q2.pairwise[1][0] = rat!(3);
        assert!(matches!(validate_descriptor(&q2), Err(DescriptorViolation::FourPoint(_))));
    }

    #[test]
    fn realize_over_bare_point() {
        let q = empty_one_type(rat!(2), rat!(2));
        let real = realize_type(&q).unwrap();
        assert_eq!(real.tree.edge_count(), 1);
        assert_eq!(real.tree.height(&real.points[0]), rat!(2));
    }

    #[test]
    fn realize_round_trip() {
        let t = tripod();
        let a = [t.at("y")];
        let mid = t.point_on_edge_by_id("y", "b", &rat!(1 / 2)).unwrap();
        let q = type_of(&t, &a, &[t.at("a"), mid, t.at("p")]);
        let real = realize_type(&q).unwrap();
        let a2: Vec<PointRef> = a.iter().map(|x| real.embedding.apply(&t, &real.tree, x)).collect();
        let q2 = type_of(&real.tree, &a2, &real.points);
        assert!(types_equal(&q, &q2).unwrap());
    }

    #[test]
    fn realize_fresh_tripod() {
        let q = empty_type(vec![rat!(2), rat!(2)], vec![vec![rat!(0), rat!(2)], vec![rat!(2), rat!(0)]], rat!(2));
        let real = realize_type(&q).unwrap();
        assert_eq!(real.tree.node_count(), 4);
        assert_eq!(real.tree.distance(&real.points[0], &real.points[1]), rat!(2));
    }

    #[test]
    fn one_type_distances() {
        let r = rat!(2);
        let d = one_type_distance(&empty_one_type(rat!(2), r.clone()), &empty_one_type(rat!(1 / 2), r.clone()));
        assert_eq!(d.unwrap(), rat!(3 / 2));
        // Context [p, y] of length 1; closest points p and y, offsets 1/2.
        let mut g = TreeGraph::new();
        g.basepoint("p").node("y").node("u").node("v");
        g.edge("p", "y", rat!(1)).edge("p", "u", rat!(1 / 2)).edge("y", "v", rat!(1 / 2));
        let t = g.build().unwrap();
        let q1 = type_of(&t, &[t.at("y")], &[t.at("u")]);
        let q2 = type_of(&t, &[t.at("y")], &[t.at("v")]);
        assert_eq!(one_type_distance(&q1, &q2).unwrap(), rat!(2));
        assert_eq!(one_type_distance(&q1, &q1).unwrap(), rat!(0));
    }

    #[test]
    fn search_collapses_for_one_types_and_identical_types() {
        let r = rat!(2);
        let c = type_distance_search(&empty_one_type(rat!(2), r.clone()), &empty_one_type(rat!(1), r.clone()), &rat!(1 / 8)).unwrap();
        assert_eq!(c, CertifiedValue::exact(rat!(1)));
        let q = empty_type(vec![rat!(2), rat!(1)], vec![vec![rat!(0), rat!(3)], vec![rat!(3), rat!(0)]], r);
        let c = type_distance_search(&q, &q, &rat!(1 / 8)).unwrap();
        assert_eq!(c.upper, rat!(0));
    }

    #[test]
    fn tripod_family_separation() {
        // Ambient radius 2r with r = 1: a and b at height 2s sharing a stem of length s.
        let (r2, s, t) = (rat!(2), rat!(3 / 4), rat!(5 / 8));
        let fam = |s: &Rat| empty_type(vec![s.times(2), s.times(2)], vec![vec![rat!(0), s.times(2)], vec![s.times(2), rat!(0)]], r2.clone());
        let c = type_distance_search(&fam(&s), &fam(&t), &rat!(1 / 64)).unwrap();
        assert_eq!(c.upper, s.times(2));
    }

    #[test]
    fn principal_types() {
        let r = rat!(2);
        let seg = empty_type(vec![rat!(1), rat!(2)], vec![vec![rat!(0), rat!(1)], vec![rat!(1), rat!(0)]], r.clone());
        assert!(is_principal(&seg).unwrap());
        let leaves = empty_type(vec![rat!(2), rat!(2)], vec![vec![rat!(0), rat!(2)], vec![rat!(2), rat!(0)]], r.clone());
        assert!(!is_principal(&leaves).unwrap());
        assert!(is_principal(&empty_one_type(rat!(3 / 2), r)).unwrap());
        let t = tripod();
        assert!(matches!(is_principal(&type_of(&t, &[t.at("y")], &[t.at("a")])), Err(TypeError::NonEmptyContext)));
    }

    #[test]
    fn closures() {
        let t = tripod();
        assert_eq!(dcl_acl(&t, &[]).length(), rat!(0));
        assert_eq!(dcl_acl(&t, &[t.at("a"), t.at("b")]).length(), rat!(3));
    }
}
