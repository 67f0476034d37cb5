//! Gluing trees at points and amalgamating over common subtrees.
//!
//! Gluing a family of trees `X_i` to a base `X` at identified points
//! `x_i` gives a tree in which a point of `X_i` and a point of `X_j` are at
//! distance `d_i(x, x_i) + d(x_i, x_j) + d_j(x_j, x')`. Amalgamating `m1` and
//! `m2` over a common subtree attaches every branch of `m2` that leaves the
//! shared part, wholesale, at the corresponding point of `m1`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::rat::Rat;
use crate::subtree::spanned_subtree;
use crate::tree::{Embedding, NodeDecl, NodeIx, PointRef, TreeError, TreeGraph, TreeSkeleton};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmalgamError {
    #[error("node `{node}` ends up at distance {distance} > {r} from the basepoint")]
    RadiusExceeded { node: String, distance: Rat, r: Rat },
    #[error("shared map is not an isometry: d({left_a},{left_b}) = {d_left} but d({right_a},{right_b}) = {d_right}")]
    NotIsometric {
        left_a: String,
        left_b: String,
        right_a: String,
        right_b: String,
        d_left: Rat,
        d_right: Rat,
    },
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl From<TreeError> for AmalgamError {
    fn from(e: TreeError) -> Self {
        AmalgamError::Malformed(e.to_string())
    }
}

/// One tree to be attached: the point `at_sub` of `sub` is identified with
/// the point `at_base` of the base.
#[derive(Clone, Debug)]
pub struct Attachment {
    pub sub: TreeSkeleton,
    pub at_sub: PointRef,
    pub at_base: PointRef,
}

#[derive(Clone, Debug)]
pub struct GlueSpec {
    pub base: TreeSkeleton,
    pub attachments: Vec<Attachment>,
}

/// A glued tree with the embeddings of its pieces.
#[derive(Clone, Debug)]
pub struct Glued {
    pub tree: TreeSkeleton,
    pub base: Embedding,
    pub parts: Vec<Embedding>,
}

/// A partial isometry between two trees, given on finitely many points;
/// it extends uniquely to the subtrees they span.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubtreeMap {
    pub pairs: Vec<(PointRef, PointRef)>,
}

impl SubtreeMap {
    pub fn new(pairs: Vec<(PointRef, PointRef)>) -> Self {
        SubtreeMap { pairs }
    }

    /// Pairs with the basepoints prepended.
    fn with_base(&self, source: &TreeSkeleton, target: &TreeSkeleton) -> Vec<(PointRef, PointRef)> {
        let mut out = vec![(source.base_point(), target.base_point())];
        out.extend(self.pairs.iter().cloned());
        out
    }

    /// Check that all pairwise distances (basepoints included) agree.
    pub fn check_isometry(&self, source: &TreeSkeleton, target: &TreeSkeleton) -> Result<(), AmalgamError> {
        let pairs = self.with_base(source, target);
        for (i, (a, a2)) in pairs.iter().enumerate() {
            source.normalize(a)?;
            target.normalize(a2)?;
            for (b, b2) in &pairs[i..] {
                let (d1, d2) = (source.distance(a, b), target.distance(a2, b2));
                if d1 != d2 {
                    return Err(AmalgamError::NotIsometric {
                        left_a: source.describe(a),
                        left_b: source.describe(b),
                        right_a: target.describe(a2),
                        right_b: target.describe(b2),
                        d_left: d1,
                        d_right: d2,
                    });
                }
            }
        }
        Ok(())
    }

    /// Image of a source point lying in the span of the source points.
    pub fn map(&self, source: &TreeSkeleton, target: &TreeSkeleton, x: &PointRef) -> Option<PointRef> {
        let pairs = self.with_base(source, target);
        for (i, (a, a2)) in pairs.iter().enumerate() {
            for (b, b2) in &pairs[i..] {
                if source.is_between(a, x, b) {
                    return Some(target.point_along(a2, b2, &source.distance(a, x)));
                }
            }
        }
        None
    }

    pub fn inverse(&self) -> SubtreeMap {
        SubtreeMap { pairs: self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect() }
    }
}

fn check_radius(tree: &TreeSkeleton, r: &Rat) -> Result<(), AmalgamError> {
    for v in tree.nodes() {
        if tree.depth(v) > r {
            return Err(AmalgamError::RadiusExceeded {
                node: tree.id(v).to_string(),
                distance: tree.depth(v).clone(),
                r: r.clone(),
            });
        }
    }
    Ok(())
}

/// Glue with a caller-chosen id prefix per attachment.
fn glue_prefixed(
    base: &TreeSkeleton,
    parts: &[(Attachment, String)],
) -> Result<Glued, AmalgamError> {
    let mut at_base = Vec::new();
    for (a, _) in parts {
        at_base.push(base.normalize(&a.at_base)?);
    }
    let (base2, eb, verts) = base.subdivide(&at_base);
    let mut graph = base2.to_graph();
    let mut part_maps = Vec::new();
    for ((a, prefix), &bv) in parts.iter().zip(&verts) {
        let at_sub = a.sub.normalize(&a.at_sub)?;
        let (sub2, es, sv) = a.sub.subdivide(std::slice::from_ref(&at_sub));
        let attach = sv[0];
        let b_id = base2.id(bv).to_string();
        let rename = |v: NodeIx| if v == attach { b_id.clone() } else { format!("{prefix}{}", sub2.id(v)) };
        for v in sub2.nodes() {
            if v == attach {
                let decl = graph.nodes.iter_mut().find(|d| d.id == b_id).expect("base node");
                for l in sub2.labels(v) {
                    if !decl.labels.contains(l) {
                        decl.labels.push(l.clone());
                    }
                }
            } else {
                graph.nodes.push(NodeDecl { id: rename(v), labels: sub2.labels(v).to_vec(), basepoint: false });
            }
        }
        for e in sub2.edges() {
            graph.edges.push((rename(e.u), rename(e.v), e.len.clone()));
        }
        let ids: Vec<String> = sub2.nodes().map(rename).collect();
        part_maps.push((sub2, es, ids));
    }
    let glued = TreeSkeleton::from_graph(&graph)?;
    let (canon, ec) = glued.canonicalize();
    let base_into = Embedding::new(base2.nodes().map(|v| glued.at(base2.id(v))).collect());
    let base_emb = eb.then(&base2, &glued, &base_into).then(&glued, &canon, &ec);
    let mut embs = Vec::new();
    for (sub2, es, ids) in part_maps {
        let into = Embedding::new(ids.iter().map(|id| glued.at(id)).collect());
        embs.push(es.then(&sub2, &glued, &into).then(&glued, &canon, &ec));
    }
    Ok(Glued { tree: canon, base: base_emb, parts: embs })
}

/// Attach every tree of the family at its point; attachment `i` keeps its
/// node ids under the prefix `g{i}:`. The result must have radius `<= r`.
pub fn glue_family(spec: &GlueSpec, r: &Rat) -> Result<Glued, AmalgamError> {
    let parts: Vec<(Attachment, String)> =
        spec.attachments.iter().enumerate().map(|(i, a)| (a.clone(), format!("g{i}:"))).collect();
    let glued = glue_prefixed(&spec.base, &parts)?;
    check_radius(&glued.tree, r)?;
    Ok(glued)
}

/// Amalgamate `m1` and `m2` over the subtree identified by `shared`
/// (points of `m1` paired with points of `m2`; basepoints are always
/// identified). Returns the amalgam and the embeddings of both trees.
pub fn amalgamate(
    m1: &TreeSkeleton,
    m2: &TreeSkeleton,
    shared: &SubtreeMap,
    r: &Rat,
) -> Result<(TreeSkeleton, Embedding, Embedding), AmalgamError> {
    shared.check_isometry(m1, m2)?;
    let targets: Vec<PointRef> = shared.pairs.iter().map(|(_, b)| b.clone()).collect();
    let (m2s, e2, _) = m2.subdivide(&targets);
    let back = shared.inverse();
    // Shared points expressed in the subdivided copy of m2.
    let back_s = SubtreeMap::new(
        back.pairs.iter().map(|(b, a)| (e2.apply(m2, &m2s, b), a.clone())).collect(),
    );
    let s2 = spanned_subtree(&m2s, &back_s.pairs.iter().map(|(b, _)| b.clone()).collect::<Vec<_>>());

    let left = m1.prefixed("left:");
    // m1 and its prefixed copy share node and edge indices, so points of m1
    // are points of `left` as they stand.
    let mut parts: Vec<(Attachment, String)> = Vec::new();
    let mut branch_ids: Vec<Vec<(NodeIx, String)>> = Vec::new();
    for w in m2s.nodes() {
        let pw = PointRef::Vertex(w);
        if !s2.contains(&pw) {
            continue;
        }
        for &(z, e) in m2s.neighbors(w) {
            let mid = PointRef::Edge { edge: e, offset: m2s.edge(e).len.half() };
            if s2.contains(&mid) {
                continue;
            }
            let (branch, ids) = branch_tree(&m2s, w, z);
            let at_m1 = back_s.map(&m2s, m1, &pw).expect("shared point");
            let at_sub = branch.at(&ids[0].1);
            parts.push((Attachment { sub: branch, at_sub, at_base: at_m1 }, "right:".to_string()));
            branch_ids.push(ids);
        }
    }
    let glued = glue_prefixed(&left, &parts)?;
    check_radius(&glued.tree, r)?;
    let n = &glued.tree;
    let g1 = glued.base.clone();
    // g2: shared points go through m1, the rest through their branch copy.
    let mut images: Vec<Option<PointRef>> = vec![None; m2s.node_count()];
    for (k, ids) in branch_ids.iter().enumerate() {
        let branch = &parts[k].0.sub;
        for (v, id) in ids.iter().skip(1) {
            images[v.0] = Some(glued.parts[k].apply(branch, n, &branch.at(id)));
        }
    }
    for w in m2s.nodes() {
        if images[w.0].is_none() {
            let at_m1 = back_s.map(&m2s, m1, &PointRef::Vertex(w)).expect("unattached nodes are shared");
            images[w.0] = Some(g1.apply(m1, n, &at_m1));
        }
    }
    let g2s = Embedding::new(images.into_iter().map(|p| p.expect("assigned")).collect());
    let g2 = e2.then(&m2s, n, &g2s);
    Ok((n.clone(), g1, g2))
}

/// The branch of `t` at `w` through the neighbour `z`, with `w` included.
/// Returns the branch tree (basepoint `w`) and, for each of its nodes, the
/// original node index and id; the first entry is `w`.
fn branch_tree(t: &TreeSkeleton, w: NodeIx, z: NodeIx) -> (TreeSkeleton, Vec<(NodeIx, String)>) {
    let mut g = TreeGraph::new();
    g.nodes.push(NodeDecl { id: t.id(w).to_string(), labels: t.labels(w).to_vec(), basepoint: true });
    let mut ids = vec![(w, t.id(w).to_string())];
    let e = t.find_edge(w, z).expect("adjacent");
    g.edges.push((t.id(w).to_string(), t.id(z).to_string(), t.edge(e).len.clone()));
    let mut stack = vec![(z, w)];
    while let Some((x, from)) = stack.pop() {
        g.nodes.push(NodeDecl { id: t.id(x).to_string(), labels: t.labels(x).to_vec(), basepoint: false });
        ids.push((x, t.id(x).to_string()));
        for &(y, e) in t.neighbors(x) {
            if y != from {
                g.edges.push((t.id(x).to_string(), t.id(y).to_string(), t.edge(e).len.clone()));
                stack.push((y, x));
            }
        }
    }
    (TreeSkeleton::from_graph(&g).expect("branch is a tree"), ids)
}

/// Glue trees at their basepoints; tree `i` keeps its ids under `t{i}:`.
pub fn star_amalgam(trees: &[TreeSkeleton], r: &Rat) -> Result<TreeSkeleton, AmalgamError> {
    match trees {
        [] => return Err(AmalgamError::Malformed("no trees to glue".into())),
        [one] => {
            check_radius(one, r)?;
            return Ok(one.clone());
        }
        _ => {}
    }
    let base = TreeSkeleton::point("p");
    let parts: Vec<(Attachment, String)> = trees
        .iter()
        .enumerate()
        .map(|(i, t)| {
            (Attachment { sub: t.clone(), at_sub: t.base_point(), at_base: base.base_point() }, format!("t{i}:"))
        })
        .collect();
    let glued = glue_prefixed(&base, &parts)?;
    check_radius(&glued.tree, r)?;
    Ok(glued.tree)
}

/// Sorted multiset of vertex degrees, a cheap isometry invariant.
pub fn degree_sequence(t: &TreeSkeleton) -> Vec<usize> {
    let mut d: Vec<usize> = t.nodes().map(|v| t.degree(v)).collect();
    d.sort();
    d
}

/// Sorted multiset of edge lengths.
pub fn length_multiset(t: &TreeSkeleton) -> Vec<Rat> {
    let mut l: Vec<Rat> = t.edges().iter().map(|e| e.len.clone()).collect();
    l.sort();
    l
}

/// Ids used by a tree, for collision checks in callers.
pub fn node_ids(t: &TreeSkeleton) -> BTreeSet<String> {
    t.nodes().map(|v| t.id(v).to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn tripod() -> TreeSkeleton {
        let mut g = TreeGraph::new();
        g.basepoint("p").node("y").node("a").node("b");
        g.edge("p", "y", rat!(1)).edge("y", "a", rat!(1)).edge("y", "b", rat!(1));
        g.build().unwrap()
    }

    fn segment(len: Rat) -> TreeSkeleton {
        let mut g = TreeGraph::new();
        g.basepoint("s").node("c").edge("s", "c", len);
        g.build().unwrap()
    }

    #[test]
    fn attach_segment_at_y() {
        let t = tripod();
        let seg = segment(rat!(1));
        let spec = GlueSpec {
            base: t.clone(),
            attachments: vec![Attachment { sub: seg.clone(), at_sub: seg.at("s"), at_base: t.at("y") }],
        };
        let g = glue_family(&spec, &rat!(2)).unwrap();
        let c = g.parts[0].apply(&seg, &g.tree, &seg.at("c"));
        let a = g.base.apply(&t, &g.tree, &t.at("a"));
        assert_eq!(g.tree.height(&c), rat!(2));
        assert_eq!(g.tree.distance(&a, &c), rat!(2));
        assert_eq!(g.tree.degree(g.tree.node("y").unwrap()), 4);
        assert!(g.tree.validate(&rat!(2)).accepted());
    }

    #[test]
    fn attach_nothing() {
        let t = tripod();
        let g = glue_family(&GlueSpec { base: t.clone(), attachments: vec![] }, &rat!(2)).unwrap();
        assert_eq!(g.tree, t);
    }

    #[test]
    fn cross_distance_between_attachments() {
        let t = tripod();
        let (s1, s2) = (segment(rat!(1 / 2)), segment(rat!(1 / 3)));
        let x1 = t.point_on_edge_by_id("p", "y", &rat!(1 / 2)).unwrap();
        let x2 = t.at("a");
        let spec = GlueSpec {
            base: t.clone(),
            attachments: vec![
                Attachment { sub: s1.clone(), at_sub: s1.at("s"), at_base: x1.clone() },
                Attachment { sub: s2.clone(), at_sub: s2.at("s"), at_base: x2.clone() },
            ],
        };
        let g = glue_family(&spec, &rat!(3)).unwrap();
        let c1 = g.parts[0].apply(&s1, &g.tree, &s1.at("c"));
        let c2 = g.parts[1].apply(&s2, &g.tree, &s2.at("c"));
        assert_eq!(g.tree.distance(&c1, &c2), rat!(1 / 2) + t.distance(&x1, &x2) + rat!(1 / 3));
    }

    #[test]
    fn radius_violation_reported() {
        let t = tripod();
        let seg = segment(rat!(1));
        let spec = GlueSpec {
            base: t.clone(),
            attachments: vec![Attachment { sub: seg.clone(), at_sub: seg.at("s"), at_base: t.at("a") }],
        };
        let err = glue_family(&spec, &rat!(2)).unwrap_err();
        assert_eq!(err, AmalgamError::RadiusExceeded { node: "g0:c".into(), distance: rat!(3), r: rat!(2) });
    }

    #[test]
    fn two_tripods_over_stem() {
        let t = tripod();
        let shared = SubtreeMap::new(vec![(t.at("y"), t.at("y"))]);
        let (n, g1, g2) = amalgamate(&t, &t, &shared, &rat!(2)).unwrap();
        assert_eq!(n.leaves().len(), 5);
        let a1 = g1.apply(&t, &n, &t.at("a"));
        let a2 = g2.apply(&t, &n, &t.at("a"));
        assert_eq!(n.distance(&a1, &a2), rat!(2));
        assert_eq!(g1.apply(&t, &n, &t.at("y")), g2.apply(&t, &n, &t.at("y")));
    }

    #[test]
    fn amalgam_over_everything_is_identity() {
        let t = tripod();
        let shared = SubtreeMap::new(vec![(t.at("a"), t.at("a")), (t.at("b"), t.at("b"))]);
        let (n, _, _) = amalgamate(&t, &t, &shared, &rat!(2)).unwrap();
        assert_eq!(n.node_count(), t.node_count());
        assert_eq!(length_multiset(&n), length_multiset(&t));
    }

    #[test]
    fn amalgam_over_basepoint_is_star() {
        let t = tripod();
        let (n, _, _) = amalgamate(&t, &t, &SubtreeMap::default(), &rat!(2)).unwrap();
        let s = star_amalgam(&[t.clone(), t.clone()], &rat!(2)).unwrap();
        assert_eq!(degree_sequence(&n), degree_sequence(&s));
        assert_eq!(length_multiset(&n), length_multiset(&s));
    }

    #[test]
    fn non_isometric_share_rejected() {
        let t = tripod();
        let shared = SubtreeMap::new(vec![(t.at("a"), t.at("y"))]);
        assert!(matches!(amalgamate(&t, &t, &shared, &rat!(2)), Err(AmalgamError::NotIsometric { .. })));
    }

    #[test]
    fn stars() {
        let r = rat!(2);
        let s = star_amalgam(&[segment(r.clone()), segment(r.clone())], &r).unwrap();
        assert_eq!(s.radius(), r);
        assert_eq!(s.distance(&s.at("t0:c"), &s.at("t1:c")), rat!(4));
        let one = star_amalgam(&[tripod()], &r).unwrap();
        assert_eq!(one, tripod());
        let three = star_amalgam(&[tripod(), tripod(), tripod()], &r).unwrap();
        assert_eq!(three.degree(three.basepoint()), 3);
    }
}
