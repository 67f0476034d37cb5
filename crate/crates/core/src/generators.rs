//! Finite approximations of model families: richly branching extensions,
//! trees whose branch degrees come from a prescribed set, sampled balls of
//! the universal tree of step functions, and small fixture shapes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rat::Rat;
use crate::realize::{realize_tree, MetricMatrix, RealizeError};
use crate::tree::{NodeDecl, PointRef, TreeGraph, TreeSkeleton};

/// Node budget used by [`rb_extend`].
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("degree set is empty")]
    EmptyDegreeSet,
    #[error("degree {0} is below 3")]
    DegreeTooSmall(usize),
    #[error("mesh must be positive, got {0}")]
    NonPositiveMesh(Rat),
    #[error("lengths must be positive, got {0}")]
    NonPositiveLength(Rat),
    #[error("tree of radius {radius} exceeds {r}")]
    Radius { radius: Rat, r: Rat },
    #[error("output would exceed {budget} nodes")]
    TooLarge { budget: usize },
    #[error("alphabet size {0} is below 3")]
    Alphabet(usize),
    #[error("malformed step function: {0}")]
    StepFunction(String),
    #[error("sample does not realize: {0}")]
    Realize(#[from] RealizeError),
}

/// A right-continuous step function on `(-∞, ρ)` that is `0` before its
/// first breakpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFunction {
    breakpoints: Vec<Rat>,
    values: Vec<u32>,
    rho: Rat,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<Rat>, values: Vec<u32>, rho: Rat) -> Result<Self, GeneratorError> {
        let bad = |s: &str| Err(GeneratorError::StepFunction(s.to_string()));
        if breakpoints.len() != values.len() {
            return bad("one value per breakpoint");
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("breakpoints must increase strictly");
        }
        if breakpoints.last().is_some_and(|t| t >= &rho) {
            return bad("breakpoints must lie below rho");
        }
        let mut prev = 0;
        for &v in &values {
            if v == prev {
                return bad("adjacent values must differ");
            }
            prev = v;
        }
        Ok(StepFunction { breakpoints, values, rho })
    }

    /// The zero function on `(-∞, ρ)`.
    pub fn zero(rho: Rat) -> Self {
        StepFunction { breakpoints: Vec::new(), values: Vec::new(), rho }
    }

    pub fn rho(&self) -> &Rat {
        &self.rho
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Value at `t < ρ`.
    pub fn at(&self, t: &Rat) -> u32 {
        match self.breakpoints.iter().rposition(|b| b <= t) {
            Some(i) => self.values[i],
            None => 0,
        }
    }
}

impl fmt::Display for StepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step(")?;
        for (t, v) in self.breakpoints.iter().zip(&self.values) {
            write!(f, "{t}:{v} ")?;
        }
        write!(f, "rho={})", self.rho)
    }
}

/// Largest `s ≤ min(ρ_f, ρ_g)` with `f = g` on `(-∞, s)`.
pub fn agreement(f: &StepFunction, g: &StepFunction) -> Rat {
    let m = if f.rho < g.rho { f.rho.clone() } else { g.rho.clone() };
    let cuts: BTreeSet<&Rat> = f.breakpoints.iter().chain(&g.breakpoints).filter(|t| *t < &m).collect();
    for t in cuts {
        if f.at(t) != g.at(t) {
            return t.clone();
        }
    }
    m
}

/// `(ρ_f - s) + (ρ_g - s)` with `s` the agreement bound.
pub fn au_distance(f: &StepFunction, g: &StepFunction) -> Rat {
    let s = agreement(f, g);
    (&f.rho - &s) + (&g.rho - &s)
}

fn random_step(rng: &mut ChaCha8Rng, mu: usize, radius: &Rat) -> StepFunction {
    // Grid of step radius/16; ρ in [-R/2, R/2] and breakpoints no lower than
    // (ρ - R)/2 keep the distance to the zero function within R.
    let g = radius.over(16);
    let rho = &g * Rat::int(rng.gen_range(-8..=8));
    let lo = Rat::from_big(((&rho - radius).half() / &g).ceil(), 1.into()).to_i64().expect("small");
    let hi = Rat::from_big((&rho / &g).floor(), 1.into()).to_i64().expect("small");
    let mut cuts: Vec<i64> = (lo..hi).collect();
    cuts.shuffle(rng);
    let k = rng.gen_range(0..=3usize).min(cuts.len());
    let mut chosen: Vec<i64> = cuts[..k].to_vec();
    chosen.sort();
    let mut values = Vec::new();
    let mut prev = 0u32;
    for _ in 0..k {
        let mut v = rng.gen_range(0..mu as u32 - 1);
        if v >= prev {
            v += 1;
        }
        values.push(v);
        prev = v;
    }
    let breakpoints = chosen.into_iter().map(|c| &g * Rat::int(c)).collect();
    StepFunction::new(breakpoints, values, rho).expect("constructed canonical")
}

/// `count` step functions within `radius` of the zero function (sample 0),
/// their distance matrix, and the tree it spans. Labels are `f0, f1, ...`
/// with `f0` the basepoint.
pub fn au_sample_ball(
    mu: usize,
    count: usize,
    radius: &Rat,
    seed: u64,
) -> Result<(Vec<StepFunction>, MetricMatrix, TreeSkeleton), GeneratorError> {
    if mu < 3 {
        return Err(GeneratorError::Alphabet(mu));
    }
    if !radius.is_positive() {
        return Err(GeneratorError::NonPositiveLength(radius.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fs = vec![StepFunction::zero(Rat::zero())];
    while fs.len() < count {
        fs.push(random_step(&mut rng, mu, radius));
    }
    fs.truncate(count.max(1));
    let labels = (0..fs.len()).map(|i| format!("f{i}")).collect();
    let rows = fs.iter().map(|f| fs.iter().map(|g| au_distance(f, g)).collect()).collect();
    let m = MetricMatrix::new(labels, rows).expect("distance matrix is well formed");
    let tree = realize_tree(&m, "f0")?;
    Ok((fs, m, tree))
}

/// Heights at which `rb_extend` forces branching: `0` and the multiples of
/// `r/2^(depth-1)` below `r`.
pub fn rb_levels(r: &Rat, depth: u32) -> Vec<Rat> {
    let mut out = vec![Rat::zero()];
    if depth >= 2 {
        let step = r / Rat::from_big((1u64 << (depth - 1).min(62)).into(), 1u32.into());
        let mut h = step.clone();
        while &h < r {
            out.push(h.clone());
            h += &step;
        }
    }
    out
}

/// Richly branching enrichment: every point at a height in [`rb_levels`]
/// gets at least three branches, each reaching the sphere of radius `r`,
/// and every leaf below `r` is extended to it. Branches added this way are
/// enriched as well, so `sup ψ ≤ r/2^(depth-1)` afterwards.
pub fn rb_extend(tree: &TreeSkeleton, r: &Rat, depth: u32) -> Result<TreeSkeleton, GeneratorError> {
    rb_extend_with_budget(tree, r, depth, DEFAULT_NODE_BUDGET)
}

pub fn rb_extend_with_budget(
    tree: &TreeSkeleton,
    r: &Rat,
    depth: u32,
    budget: usize,
) -> Result<TreeSkeleton, GeneratorError> {
    if tree.radius() > *r {
        return Err(GeneratorError::Radius { radius: tree.radius(), r: r.clone() });
    }
    let levels = rb_levels(r, depth);
    let cuts: Vec<PointRef> = levels.iter().flat_map(|h| tree.points_at_height(h)).collect();
    let (t1, _, _) = tree.subdivide(&cuts);
    let level_set: BTreeSet<&Rat> = levels.iter().collect();
    let mut graph = t1.to_graph();
    let mut taken: BTreeSet<String> = graph.nodes.iter().map(|n| n.id.clone()).collect();
    let mut counter = 0usize;
    let mut fresh = |taken: &mut BTreeSet<String>| loop {
        let id = format!("rb{counter}");
        counter += 1;
        if taken.insert(id.clone()) {
            return id;
        }
    };
    // Chains still to grow: (start node, start height).
    let mut work: Vec<(String, Rat)> = Vec::new();
    for v in t1.nodes() {
        let h = t1.depth(v);
        let deg = t1.degree(v);
        let need = if level_set.contains(h) {
            3usize.saturating_sub(deg)
        } else if deg <= 1 && h < r {
            1
        } else {
            0
        };
        for _ in 0..need {
            work.push((t1.id(v).to_string(), h.clone()));
        }
    }
    while let Some((start, h)) = work.pop() {
        let mut prev = start;
        let mut prev_h = h.clone();
        for lh in levels.iter().filter(|lh| *lh > &h) {
            let id = fresh(&mut taken);
            graph.nodes.push(NodeDecl { id: id.clone(), labels: Vec::new(), basepoint: false });
            graph.edges.push((prev, id.clone(), lh - &prev_h));
            work.push((id.clone(), lh.clone()));
            prev = id;
            prev_h = lh.clone();
        }
        let leaf = fresh(&mut taken);
        graph.nodes.push(NodeDecl { id: leaf.clone(), labels: Vec::new(), basepoint: false });
        graph.edges.push((prev, leaf, r - &prev_h));
        if graph.nodes.len() > budget {
            return Err(GeneratorError::TooLarge { budget });
        }
    }
    let out = graph.build().expect("enrichment keeps a tree");
    Ok(out.canonicalize().0)
}

/// Parameters of the degree-family construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub depth: u32,
    pub mesh: Rat,
    pub degree_set: Vec<usize>,
    pub radius: Rat,
}

impl GeneratorConfig {
    pub fn check(&self) -> Result<(), GeneratorError> {
        if self.degree_set.is_empty() {
            return Err(GeneratorError::EmptyDegreeSet);
        }
        if let Some(&k) = self.degree_set.iter().find(|&&k| k < 3) {
            return Err(GeneratorError::DegreeTooSmall(k));
        }
        if !self.mesh.is_positive() {
            return Err(GeneratorError::NonPositiveMesh(self.mesh.clone()));
        }
        if !self.radius.is_positive() {
            return Err(GeneratorError::NonPositiveLength(self.radius.clone()));
        }
        Ok(())
    }
}

/// Rounds `j = 0..=depth`: every non-branching point of the current tree at
/// a height that is a multiple of `mesh/2^j` (below the radius) becomes a
/// branch point of degree `k`, by attaching rays that end on the sphere.
/// The degrees `k` cycle through the degree set from a seeded start, so
/// every branch point has a degree from the set.
pub fn degree_family_tree(cfg: &GeneratorConfig) -> Result<TreeSkeleton, GeneratorError> {
    cfg.check()?;
    let mut set = cfg.degree_set.clone();
    set.sort();
    set.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut next = rng.gen_range(0..set.len());
    let mut tree = TreeSkeleton::point("p");
    for j in 0..=cfg.depth {
        let step = &cfg.mesh / Rat::from_big((1u64 << j.min(62)).into(), 1u32.into());
        let mut pts = Vec::new();
        let mut h = Rat::zero();
        while h < cfg.radius {
            for x in tree.points_at_height(&h) {
                let deg = match &x {
                    PointRef::Vertex(v) => tree.degree(*v),
                    PointRef::Edge { .. } => 2,
                };
                if deg < 3 {
                    pts.push(x);
                }
            }
            h += &step;
        }
        let (refined, _, verts) = tree.subdivide(&pts);
        let mut graph = refined.to_graph();
        for (i, v) in verts.iter().enumerate() {
            let k = set[next % set.len()];
            next += 1;
            let len = &cfg.radius - refined.depth(*v);
            for m in refined.degree(*v)..k {
                let id = format!("d{j}.{i}.{m}");
                graph.nodes.push(NodeDecl { id: id.clone(), labels: Vec::new(), basepoint: false });
                graph.edges.push((refined.id(*v).to_string(), id, len.clone()));
            }
        }
        if graph.nodes.len() > DEFAULT_NODE_BUDGET {
            return Err(GeneratorError::TooLarge { budget: DEFAULT_NODE_BUDGET });
        }
        tree = graph.build().expect("rays keep a tree");
    }
    Ok(tree.canonicalize().0)
}

/// Degrees of the nodes with at least three branches, sorted.
pub fn branch_degrees(tree: &TreeSkeleton) -> Vec<usize> {
    let mut out: Vec<usize> = tree.nodes().map(|v| tree.degree(v)).filter(|&d| d >= 3).collect();
    out.sort();
    out
}

/// Fixture shapes; leaves carry ids as documented per variant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Primitive {
    /// `p` to `end`.
    Segment(Rat),
    /// Basepoint leaf `p`, centre `y`, leaves `a` and `b`, with the three
    /// leg lengths in that order.
    Tripod(Rat, Rat, Rat),
    /// Centre `p` with leaves `l1..lk`.
    Star(usize, Rat),
    /// Spine `p = s0, s1, ..., sn` with a leg `l_i` at each inner `s_i`.
    Caterpillar { spine: usize, step: Rat, leg: Rat },
}

pub fn build_primitive(kind: &Primitive, r: &Rat) -> Result<TreeSkeleton, GeneratorError> {
    let mut g = TreeGraph::new();
    let mut lens: Vec<&Rat> = Vec::new();
    match kind {
        Primitive::Segment(len) => {
            g.basepoint("p").node("end").edge("p", "end", len.clone());
            lens.push(len);
        }
        Primitive::Tripod(lp, la, lb) => {
            g.basepoint("p").node("y").node("a").node("b");
            g.edge("p", "y", lp.clone()).edge("y", "a", la.clone()).edge("y", "b", lb.clone());
            lens.extend([lp, la, lb]);
        }
        Primitive::Star(k, len) => {
            g.basepoint("p");
            for i in 1..=*k {
                g.node(format!("l{i}")).edge("p", format!("l{i}"), len.clone());
            }
            lens.push(len);
        }
        Primitive::Caterpillar { spine, step, leg } => {
            g.basepoint("s0");
            for i in 1..=*spine {
                g.node(format!("s{i}")).edge(format!("s{}", i - 1), format!("s{i}"), step.clone());
                if i < *spine {
                    g.node(format!("l{i}")).edge(format!("s{i}"), format!("l{i}"), leg.clone());
                }
            }
            lens.extend([step, leg]);
        }
    }
    if let Some(bad) = lens.into_iter().find(|l| !l.is_positive()) {
        return Err(GeneratorError::NonPositiveLength(bad.clone()));
    }
    let t = g.build().expect("primitive shapes are trees");
    if t.radius() > *r {
        return Err(GeneratorError::Radius { radius: t.radius(), r: r.clone() });
    }
    Ok(t)
}

/// Count of nodes per degree.
pub fn degree_histogram(tree: &TreeSkeleton) -> HashMap<usize, usize> {
    let mut h = HashMap::new();
    for v in tree.nodes() {
        *h.entry(tree.degree(v)).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::rb_deficiency;
    use crate::rat;
    use crate::realize::four_point_check;

    #[test]
    fn rb_extend_point_depth_zero() {
        let t = rb_extend(&TreeSkeleton::point("p"), &rat!(2), 0).unwrap();
        assert_eq!(t.edge_count(), 3);
        assert!(t.edges().iter().all(|e| e.len == rat!(2)));
        assert_eq!(t.degree(t.basepoint()), 3);
    }

    #[test]
    fn rb_extend_bounds_deficiency_and_is_idempotent() {
        let r = rat!(2);
        let seed = build_primitive(&Primitive::Tripod(rat!(1), rat!(1), rat!(1 / 2)), &r).unwrap();
        for k in 0..=3 {
            let t = rb_extend(&seed, &r, k).unwrap();
            assert!(t.validate(&r).accepted());
            let bound = rat!(4) / Rat::int(1 << k);
            assert!(rb_deficiency(&t, &r) <= bound, "k={k}");
            assert_eq!(rb_extend(&t, &r, k).unwrap(), t);
        }
    }

    #[test]
    fn rb_extend_budget() {
        let err = rb_extend_with_budget(&TreeSkeleton::point("p"), &rat!(1), 5, 1000).unwrap_err();
        assert_eq!(err, GeneratorError::TooLarge { budget: 1000 });
    }

    #[test]
    fn au_distance_examples() {
        let z = StepFunction::zero(rat!(0));
        let g = StepFunction::new(vec![rat!(-1)], vec![1], rat!(0)).unwrap();
        assert_eq!(au_distance(&z, &z), rat!(0));
        assert_eq!(agreement(&z, &g), rat!(-1));
        assert_eq!(au_distance(&z, &g), rat!(2));
        assert_eq!(au_distance(&StepFunction::zero(rat!(1)), &z), rat!(1));
        assert!(StepFunction::new(vec![rat!(0)], vec![0], rat!(1)).is_err());
        assert!(StepFunction::new(vec![rat!(1), rat!(0)], vec![1, 2], rat!(1)).is_err());
    }

    #[test]
    fn sampled_balls_realize() {
        for seed in 0..5 {
            let (fs, m, t) = au_sample_ball(3, 8, &rat!(2), seed).unwrap();
            assert_eq!(fs.len(), 8);
            assert!(four_point_check(&m).is_ok());
            assert!(fs.iter().all(|f| au_distance(f, &fs[0]) <= rat!(2)));
            assert!(t.radius() <= rat!(2));
        }
        let (_, _, t) = au_sample_ball(3, 1, &rat!(2), 0).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(au_sample_ball(2, 3, &rat!(2), 0).unwrap_err(), GeneratorError::Alphabet(2));
    }

    #[test]
    fn three_diverging_functions_span_a_tripod() {
        let z = StepFunction::zero(rat!(0));
        let a = StepFunction::new(vec![rat!(-1)], vec![1], rat!(0)).unwrap();
        let b = StepFunction::new(vec![rat!(-1)], vec![2], rat!(0)).unwrap();
        let c = StepFunction::new(vec![rat!(-1)], vec![2], rat!(1)).unwrap();
        let fs = [z, a, b, c];
        let rows = fs.iter().map(|f| fs.iter().map(|g| au_distance(f, g)).collect()).collect();
        let m = MetricMatrix::new(vec!["z".into(), "a".into(), "b".into(), "c".into()], rows).unwrap();
        let t = realize_tree(&m, "z").unwrap();
        assert_eq!(branch_degrees(&t), vec![3]);
        assert_eq!(t.leaves().len(), 3);
    }

    #[test]
    fn degree_families() {
        let cfg = |s: Vec<usize>| GeneratorConfig { seed: 7, depth: 2, mesh: rat!(1), degree_set: s, radius: rat!(2) };
        let t3 = degree_family_tree(&cfg(vec![3])).unwrap();
        assert!(branch_degrees(&t3).iter().all(|&d| d == 3));
        let t34 = degree_family_tree(&cfg(vec![3, 4])).unwrap();
        let degs: BTreeSet<usize> = branch_degrees(&t34).into_iter().collect();
        assert_eq!(degs, BTreeSet::from([3, 4]));
        assert!(t34.validate(&rat!(2)).accepted());
        assert_eq!(degree_family_tree(&cfg(vec![3, 4])).unwrap(), t34);
        assert_eq!(degree_family_tree(&cfg(vec![])).unwrap_err(), GeneratorError::EmptyDegreeSet);
        assert_eq!(degree_family_tree(&cfg(vec![2, 3])).unwrap_err(), GeneratorError::DegreeTooSmall(2));
    }

    #[test]
    fn primitives() {
        let r = rat!(2);
        let t = build_primitive(&Primitive::Tripod(rat!(1), rat!(1), rat!(1)), &r).unwrap();
        let mut g = TreeGraph::new();
        g.basepoint("p").node("y").node("a").node("b");
        g.edge("p", "y", rat!(1)).edge("y", "a", rat!(1)).edge("y", "b", rat!(1));
        assert_eq!(t, g.build().unwrap());
        assert_eq!(build_primitive(&Primitive::Segment(rat!(2)), &r).unwrap().radius(), rat!(2));
        let s = build_primitive(&Primitive::Star(5, rat!(1)), &r).unwrap();
        assert_eq!(s.degree(s.basepoint()), 5);
        let c = build_primitive(&Primitive::Caterpillar { spine: 3, step: rat!(1 / 2), leg: rat!(1 / 2) }, &r).unwrap();
        assert_eq!(c.leaves().len(), 4);
        assert!(matches!(build_primitive(&Primitive::Segment(rat!(3)), &r), Err(GeneratorError::Radius { .. })));
    }
}
