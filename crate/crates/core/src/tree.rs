//! Finite edge-weighted trees with a basepoint, and the points on them.
//!
//! A [`TreeSkeleton`] is a combinatorial tree whose edges carry positive
//! rational lengths. The metric space it induces (every edge an interval,
//! glued at the vertices) is a finitely spanned pointed R-tree; a
//! [`PointRef`] names any point of it, either a vertex or a position strictly
//! inside an edge.
//!
//! Skeletons are immutable once built. Operations that need new vertices
//! (subdividing an edge, suppressing degree-2 vertices) return a fresh
//! skeleton together with an [`Embedding`] that carries old points to new
//! ones.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::rat::Rat;

/// Index of a node inside one particular [`TreeSkeleton`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIx(pub usize);

/// Index of an edge inside one particular [`TreeSkeleton`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeIx(pub usize);

/// A location in a tree: a vertex, or a point strictly inside an edge at
/// `offset` from the edge's first endpoint.
///
/// Values produced by this crate are always normalized, so two `PointRef`s
/// of the same tree are equal exactly when they name the same metric point.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointRef {
    Vertex(NodeIx),
    Edge { edge: EdgeIx, offset: Rat },
}

impl PointRef {
    pub fn vertex(&self) -> Option<NodeIx> {
        match self {
            PointRef::Vertex(v) => Some(*v),
            PointRef::Edge { .. } => None,
        }
    }
}

impl From<NodeIx> for PointRef {
    fn from(v: NodeIx) -> Self {
        PointRef::Vertex(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: NodeIx,
    pub v: NodeIx,
    pub len: Rat,
}

impl Edge {
    pub fn other(&self, w: NodeIx) -> NodeIx {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("no edge between `{0}` and `{1}`")]
    UnknownEdge(String, String),
    #[error("no basepoint declared")]
    NoBasepoint,
    #[error("more than one basepoint: `{0}` and `{1}`")]
    MultipleBasepoints(String, String),
    #[error("edge {0}-{1} has non-positive length {2}")]
    NonPositiveEdge(String, String, Rat),
    #[error("graph contains a cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error("graph is disconnected; unreachable from basepoint: {0:?}")]
    Disconnected(Vec<String>),
    #[error("offset {offset} outside edge {u}-{v} of length {len}")]
    OffsetOutOfRange { u: String, v: String, offset: Rat, len: Rat },
    #[error("point does not belong to this tree")]
    InvalidPoint,
}

/// An unchecked graph description; the input to validation and to
/// [`TreeSkeleton::from_graph`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeGraph {
    pub nodes: Vec<NodeDecl>,
    pub edges: Vec<(String, String, Rat)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeDecl {
    pub id: String,
    pub labels: Vec<String>,
    pub basepoint: bool,
}

impl TreeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&mut self, id: impl Into<String>) -> &mut Self {
        self.nodes.push(NodeDecl { id: id.into(), labels: Vec::new(), basepoint: false });
        self
    }

    pub fn basepoint(&mut self, id: impl Into<String>) -> &mut Self {
        self.nodes.push(NodeDecl { id: id.into(), labels: Vec::new(), basepoint: true });
        self
    }

    pub fn labeled(&mut self, id: impl Into<String>, label: impl Into<String>) -> &mut Self {
        self.nodes.push(NodeDecl { id: id.into(), labels: vec![label.into()], basepoint: false });
        self
    }

    pub fn edge(&mut self, u: impl Into<String>, v: impl Into<String>, len: Rat) -> &mut Self {
        self.edges.push((u.into(), v.into(), len));
        self
    }

    pub fn build(&self) -> Result<TreeSkeleton, TreeError> {
        TreeSkeleton::from_graph(self)
    }
}

/// One violated invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateNode(String),
    UnknownNode(String),
    NoBasepoint,
    MultipleBasepoints(Vec<String>),
    NonPositiveEdge { u: String, v: String, len: Rat },
    Cycle { witness: Vec<String> },
    Disconnected { component: Vec<String> },
    NonCanonical { node: String },
    RadiusExceeded { node: String, distance: Rat },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode(id) => write!(f, "violation=duplicate-node node={id}"),
            Violation::UnknownNode(id) => write!(f, "violation=unknown-node node={id}"),
            Violation::NoBasepoint => write!(f, "violation=no-basepoint"),
            Violation::MultipleBasepoints(ids) => {
                write!(f, "violation=multiple-basepoints nodes={}", ids.join(","))
            }
            Violation::NonPositiveEdge { u, v, len } => {
                write!(f, "violation=non-positive-edge edge={u}-{v} len={len}")
            }
            Violation::Cycle { witness } => write!(f, "violation=cycle witness={}", witness.join(",")),
            Violation::Disconnected { component } => {
                write!(f, "violation=disconnected component={}", component.join(","))
            }
            Violation::NonCanonical { node } => write!(f, "violation=non-canonical node={node}"),
            Violation::RadiusExceeded { node, distance } => {
                write!(f, "violation=radius-exceeded node={node} distance={distance}")
            }
        }
    }
}

/// Outcome of [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Largest distance from the basepoint, with the node attaining it, when
    /// the graph is a tree.
    pub max_radius: Option<(String, Rat)>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every skeleton invariant of `graph` against the radius bound `r`.
pub fn validate(graph: &TreeGraph, r: &Rat) -> ValidationReport {
    let mut violations = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in graph.nodes.iter().enumerate() {
        if index.insert(n.id.as_str(), i).is_some() {
            violations.push(Violation::DuplicateNode(n.id.clone()));
        }
    }
    let bases: Vec<String> =
        graph.nodes.iter().filter(|n| n.basepoint).map(|n| n.id.clone()).collect();
    match bases.len() {
        0 => violations.push(Violation::NoBasepoint),
        1 => {}
        _ => violations.push(Violation::MultipleBasepoints(bases.clone())),
    }
    let n = graph.nodes.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, (u, v, len)) in graph.edges.iter().enumerate() {
        if !len.is_positive() {
            violations.push(Violation::NonPositiveEdge { u: u.clone(), v: v.clone(), len: len.clone() });
        }
        let (Some(&iu), Some(&iv)) = (index.get(u.as_str()), index.get(v.as_str())) else {
            for w in [u, v] {
                if !index.contains_key(w.as_str()) {
                    violations.push(Violation::UnknownNode(w.clone()));
                }
            }
            continue;
        };
        adj[iu].push((iv, k));
        adj[iv].push((iu, k));
    }

    // Cycle detection by union-find over edges; the first closing edge gives
    // a witness cycle.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut forest: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v, _) in &graph.edges {
        let (Some(&iu), Some(&iv)) = (index.get(u.as_str()), index.get(v.as_str())) else {
            continue;
        };
        let (ru, rv) = (find(&mut parent, iu), find(&mut parent, iv));
        if ru == rv {
            let path = forest_path(&forest, iu, iv);
            let witness = path.iter().map(|&i| graph.nodes[i].id.clone()).collect();
            violations.push(Violation::Cycle { witness });
        } else {
            parent[ru] = rv;
            forest[iu].push(iv);
            forest[iv].push(iu);
        }
    }

    // Connectivity from the basepoint (or node 0 when there is none).
    let start = graph.nodes.iter().position(|n| n.basepoint).unwrap_or(0);
    let mut seen = vec![false; n];
    if n > 0 {
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        let missing: Vec<String> =
            (0..n).filter(|&i| !seen[i]).map(|i| graph.nodes[i].id.clone()).collect();
        if !missing.is_empty() {
            violations.push(Violation::Disconnected { component: missing });
        }
    }

    for (i, node) in graph.nodes.iter().enumerate() {
        if adj[i].len() == 2 && node.labels.is_empty() && !node.basepoint {
            violations.push(Violation::NonCanonical { node: node.id.clone() });
        }
    }

    let mut max_radius = None;
    let structural = !violations.iter().any(|v| {
        matches!(
            v,
            Violation::DuplicateNode(_)
                | Violation::UnknownNode(_)
                | Violation::NoBasepoint
                | Violation::MultipleBasepoints(_)
                | Violation::Cycle { .. }
                | Violation::Disconnected { .. }
        )
    });
    if structural && n > 0 {
        // Tree distances from the basepoint by BFS.
        let mut dist: Vec<Option<Rat>> = vec![None; n];
        dist[start] = Some(Rat::zero());
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            let dx = dist[x].clone().expect("visited");
            for &(y, k) in &adj[x] {
                if dist[y].is_none() {
                    dist[y] = Some(&dx + &graph.edges[k].2);
                    queue.push_back(y);
                }
            }
        }
        let mut best: Option<(String, Rat)> = None;
        for (i, d) in dist.iter().enumerate() {
            let d = d.clone().expect("connected");
            if &d > r {
                violations.push(Violation::RadiusExceeded { node: graph.nodes[i].id.clone(), distance: d.clone() });
            }
            if best.as_ref().map_or(true, |(_, b)| &d > b) {
                best = Some((graph.nodes[i].id.clone(), d));
            }
        }
        max_radius = best;
    }
    ValidationReport { violations, max_radius }
}

fn forest_path(forest: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; forest.len()];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(x) = queue.pop_front() {
        if x == to {
            break;
        }
        for &y in &forest[x] {
            if prev[y] == usize::MAX {
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

/// A finite edge-weighted tree with a basepoint.
#[derive(Clone, Debug)]
pub struct TreeSkeleton {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    base: NodeIx,
    index: HashMap<String, NodeIx>,
    adj: Vec<Vec<(NodeIx, EdgeIx)>>,
    parent: Vec<Option<(NodeIx, EdgeIx)>>,
    depth: Vec<Rat>,
    level: Vec<usize>,
}

impl PartialEq for TreeSkeleton {
    fn eq(&self, other: &Self) -> bool {
        self.to_graph() == other.to_graph()
    }
}

impl TreeSkeleton {
    /// Build a skeleton from a graph that is a tree with positive edges and
    /// exactly one basepoint. Canonical form is not required here; see
    /// [`validate`] and [`TreeSkeleton::canonicalize`].
    pub fn from_graph(graph: &TreeGraph) -> Result<Self, TreeError> {
        let mut index = HashMap::new();
        let mut nodes = Vec::with_capacity(graph.nodes.len());
        let mut base = None;
        for decl in &graph.nodes {
            let ix = NodeIx(nodes.len());
            if index.insert(decl.id.clone(), ix).is_some() {
                return Err(TreeError::DuplicateNode(decl.id.clone()));
            }
            if decl.basepoint {
                if let Some(b) = base {
                    let b: NodeIx = b;
                    return Err(TreeError::MultipleBasepoints(
                        graph.nodes[b.0].id.clone(),
                        decl.id.clone(),
                    ));
                }
                base = Some(ix);
            }
            nodes.push(Node { id: decl.id.clone(), labels: decl.labels.clone() });
        }
        let base = base.ok_or(TreeError::NoBasepoint)?;
        let mut edges = Vec::with_capacity(graph.edges.len());
        for (u, v, len) in &graph.edges {
            let iu = *index.get(u).ok_or_else(|| TreeError::UnknownNode(u.clone()))?;
            let iv = *index.get(v).ok_or_else(|| TreeError::UnknownNode(v.clone()))?;
            if !len.is_positive() {
                return Err(TreeError::NonPositiveEdge(u.clone(), v.clone(), len.clone()));
            }
            edges.push(Edge { u: iu, v: iv, len: len.clone() });
        }
        Self::assemble(nodes, edges, base, index)
    }

    fn assemble(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        base: NodeIx,
        index: HashMap<String, NodeIx>,
    ) -> Result<Self, TreeError> {
        let n = nodes.len();
        let mut adj = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            adj[e.u.0].push((e.v, EdgeIx(k)));
            adj[e.v.0].push((e.u, EdgeIx(k)));
        }
        let mut parent = vec![None; n];
        let mut depth = vec![Rat::zero(); n];
        let mut level = vec![0usize; n];
        let mut seen = vec![false; n];
        seen[base.0] = true;
        let mut queue = VecDeque::from([base]);
        let mut order = 0usize;
        while let Some(x) = queue.pop_front() {
            order += 1;
            for &(y, e) in &adj[x.0] {
                if Some((y, e)) == parent[x.0].map(|(p, pe)| (p, pe)) {
                    continue;
                }
                if seen[y.0] {
                    let witness = vec![nodes[x.0].id.clone(), nodes[y.0].id.clone()];
                    return Err(TreeError::Cycle(witness));
                }
                seen[y.0] = true;
                parent[y.0] = Some((x, e));
                depth[y.0] = &depth[x.0] + &edges[e.0].len;
                level[y.0] = level[x.0] + 1;
                queue.push_back(y);
            }
        }
        if order < n {
            let missing = (0..n).filter(|&i| !seen[i]).map(|i| nodes[i].id.clone()).collect();
            return Err(TreeError::Disconnected(missing));
        }
        if edges.len() + 1 != n {
            return Err(TreeError::Cycle(Vec::new()));
        }
        Ok(TreeSkeleton { nodes, edges, base, index, adj, parent, depth, level })
    }

    /// A tree with a single node, the basepoint.
    pub fn point(id: &str) -> Self {
        let mut g = TreeGraph::new();
        g.basepoint(id);
        g.build().expect("single point is a tree")
    }

    pub fn to_graph(&self) -> TreeGraph {
        TreeGraph {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| NodeDecl {
                    id: n.id.clone(),
                    labels: n.labels.clone(),
                    basepoint: NodeIx(i) == self.base,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| (self.nodes[e.u.0].id.clone(), self.nodes[e.v.0].id.clone(), e.len.clone()))
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeIx> + '_ {
        (0..self.nodes.len()).map(NodeIx)
    }

    pub fn edge_ixs(&self) -> impl Iterator<Item = EdgeIx> + '_ {
        (0..self.edges.len()).map(EdgeIx)
    }

    pub fn node(&self, id: &str) -> Option<NodeIx> {
        self.index.get(id).copied()
    }

    /// Like [`TreeSkeleton::node`], as a vertex point; panics on unknown ids.
    pub fn at(&self, id: &str) -> PointRef {
        PointRef::Vertex(self.node(id).unwrap_or_else(|| panic!("unknown node `{id}`")))
    }

    pub fn node_data(&self, v: NodeIx) -> &Node {
        &self.nodes[v.0]
    }

    pub fn id(&self, v: NodeIx) -> &str {
        &self.nodes[v.0].id
    }

    pub fn labels(&self, v: NodeIx) -> &[String] {
        &self.nodes[v.0].labels
    }

    /// The node carrying `label`, if any.
    pub fn labeled(&self, label: &str) -> Option<NodeIx> {
        self.nodes().find(|&v| self.nodes[v.0].labels.iter().any(|l| l == label))
    }

    pub fn edge(&self, e: EdgeIx) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn basepoint(&self) -> NodeIx {
        self.base
    }

    pub fn base_point(&self) -> PointRef {
        PointRef::Vertex(self.base)
    }

    pub fn degree(&self, v: NodeIx) -> usize {
        self.adj[v.0].len()
    }

    pub fn neighbors(&self, v: NodeIx) -> &[(NodeIx, EdgeIx)] {
        &self.adj[v.0]
    }

    /// Parent of `v` when the tree is rooted at the basepoint.
    pub fn parent(&self, v: NodeIx) -> Option<(NodeIx, EdgeIx)> {
        self.parent[v.0]
    }

    /// Distance from the basepoint to vertex `v`.
    pub fn depth(&self, v: NodeIx) -> &Rat {
        &self.depth[v.0]
    }

    pub fn find_edge(&self, a: NodeIx, b: NodeIx) -> Option<EdgeIx> {
        self.adj[a.0].iter().find(|(w, _)| *w == b).map(|&(_, e)| e)
    }

    pub fn total_length(&self) -> Rat {
        self.edges.iter().map(|e| &e.len).sum()
    }

    /// Largest distance from the basepoint over the whole tree.
    pub fn radius(&self) -> Rat {
        self.depth.iter().max().cloned().unwrap_or_else(Rat::zero)
    }

    /// Check every invariant against the radius bound `r`.
    pub fn validate(&self, r: &Rat) -> ValidationReport {
        validate(&self.to_graph(), r)
    }

    /// Normalize a point: boundary offsets become vertices. Errors when the
    /// reference is out of range.
    pub fn normalize(&self, p: &PointRef) -> Result<PointRef, TreeError> {
        match p {
            PointRef::Vertex(v) => {
                if v.0 < self.nodes.len() {
                    Ok(p.clone())
                } else {
                    Err(TreeError::InvalidPoint)
                }
            }
            PointRef::Edge { edge, offset } => {
                let e = self.edges.get(edge.0).ok_or(TreeError::InvalidPoint)?;
                if offset.is_negative() || offset > &e.len {
                    return Err(TreeError::OffsetOutOfRange {
                        u: self.id(e.u).to_string(),
                        v: self.id(e.v).to_string(),
                        offset: offset.clone(),
                        len: e.len.clone(),
                    });
                }
                if offset.is_zero() {
                    Ok(PointRef::Vertex(e.u))
                } else if offset == &e.len {
                    Ok(PointRef::Vertex(e.v))
                } else {
                    Ok(p.clone())
                }
            }
        }
    }

    /// The point on the edge joining `a` and `b` at distance `offset` from `a`.
    pub fn point_on_edge(&self, a: NodeIx, b: NodeIx, offset: &Rat) -> Result<PointRef, TreeError> {
        let e = self
            .find_edge(a, b)
            .ok_or_else(|| TreeError::UnknownEdge(self.id(a).to_string(), self.id(b).to_string()))?;
        let edge = &self.edges[e.0];
        let off = if edge.u == a { offset.clone() } else { &edge.len - offset };
        self.normalize(&PointRef::Edge { edge: e, offset: off })
    }

    /// Same as [`TreeSkeleton::point_on_edge`] but with node ids.
    pub fn point_on_edge_by_id(&self, a: &str, b: &str, offset: &Rat) -> Result<PointRef, TreeError> {
        let ia = self.node(a).ok_or_else(|| TreeError::UnknownNode(a.to_string()))?;
        let ib = self.node(b).ok_or_else(|| TreeError::UnknownNode(b.to_string()))?;
        self.point_on_edge(ia, ib, offset)
    }

    /// Vertices nearest to `p` with their distances: the point itself for a
    /// vertex, both endpoints for an edge point.
    pub fn anchors(&self, p: &PointRef) -> Vec<(NodeIx, Rat)> {
        match p {
            PointRef::Vertex(v) => vec![(*v, Rat::zero())],
            PointRef::Edge { edge, offset } => {
                let e = &self.edges[edge.0];
                vec![(e.u, offset.clone()), (e.v, &e.len - offset)]
            }
        }
    }

    fn lca(&self, mut a: NodeIx, mut b: NodeIx) -> NodeIx {
        while self.level[a.0] > self.level[b.0] {
            a = self.parent[a.0].expect("non-root").0;
        }
        while self.level[b.0] > self.level[a.0] {
            b = self.parent[b.0].expect("non-root").0;
        }
        while a != b {
            a = self.parent[a.0].expect("non-root").0;
            b = self.parent[b.0].expect("non-root").0;
        }
        a
    }

    pub fn vertex_distance(&self, a: NodeIx, b: NodeIx) -> Rat {
        let c = self.lca(a, b);
        &self.depth[a.0] + &self.depth[b.0] - self.depth[c.0].times(2)
    }

    /// Length of the unique arc between two points.
    pub fn distance(&self, a: &PointRef, b: &PointRef) -> Rat {
        if let (PointRef::Edge { edge: ea, offset: oa }, PointRef::Edge { edge: eb, offset: ob }) = (a, b) {
            if ea == eb {
                return (oa - ob).abs();
            }
        }
        let mut best: Option<Rat> = None;
        for (u, du) in self.anchors(a) {
            for (v, dv) in self.anchors(b) {
                let d = &du + &dv + self.vertex_distance(u, v);
                if best.as_ref().map_or(true, |b| &d < b) {
                    best = Some(d);
                }
            }
        }
        best.expect("anchors are nonempty")
    }

    /// Distance from the basepoint.
    pub fn height(&self, a: &PointRef) -> Rat {
        self.distance(&self.base_point(), a)
    }

    /// Vertices on the path from `a` to `b`, both included.
    pub fn vertex_path(&self, a: NodeIx, b: NodeIx) -> Vec<NodeIx> {
        let c = self.lca(a, b);
        let mut left = vec![a];
        let mut x = a;
        while x != c {
            x = self.parent[x.0].expect("non-root").0;
            left.push(x);
        }
        let mut right = Vec::new();
        let mut y = b;
        while y != c {
            right.push(y);
            y = self.parent[y.0].expect("non-root").0;
        }
        right.reverse();
        left.extend(right);
        left
    }

    /// The point on the segment `[a, b]` at distance `t` from `a`; `t` is
    /// clamped to `[0, d(a, b)]`.
    pub fn point_along(&self, a: &PointRef, b: &PointRef, t: &Rat) -> PointRef {
        let total = self.distance(a, b);
        let t = if t.is_negative() {
            Rat::zero()
        } else if t > &total {
            total.clone()
        } else {
            t.clone()
        };
        if t.is_zero() {
            return a.clone();
        }
        if t == total {
            return b.clone();
        }
        if let (PointRef::Edge { edge: ea, offset: oa }, PointRef::Edge { edge: eb, offset: ob }) = (a, b) {
            if ea == eb {
                let off = if ob > oa { oa + &t } else { oa - &t };
                return self.normalize(&PointRef::Edge { edge: *ea, offset: off }).expect("inside edge");
            }
        }
        // Pick the anchor pair realizing the distance; the arc is then
        // a -> ua -> (vertex path) -> ub -> b.
        let mut chosen = None;
        for (ua, da) in self.anchors(a) {
            for (ub, db) in self.anchors(b) {
                if &da + &db + self.vertex_distance(ua, ub) == total {
                    chosen = Some((ua, da.clone(), ub, db.clone()));
                    break;
                }
            }
            if chosen.is_some() {
                break;
            }
        }
        let (ua, da, ub, _db) = chosen.expect("some anchor pair realizes the distance");
        if t <= da {
            // Still on the edge of `a`, moving towards ua.
            return self.step_towards(a, ua, &t);
        }
        let mut walked = da;
        let path = self.vertex_path(ua, ub);
        for w in path.windows(2) {
            let e = self.find_edge(w[0], w[1]).expect("path edge");
            let len = &self.edges[e.0].len;
            let next = &walked + len;
            if t <= next {
                let off = &t - &walked;
                return self.point_on_edge(w[0], w[1], &off).expect("within edge");
            }
            walked = next;
        }
        // Remaining distance lies on the edge of `b`, coming from ub.
        let rest = &t - &walked;
        self.step_towards_from_vertex(ub, b, &rest)
    }

    fn step_towards(&self, a: &PointRef, target: NodeIx, t: &Rat) -> PointRef {
        match a {
            PointRef::Vertex(_) => PointRef::Vertex(target),
            PointRef::Edge { edge, offset } => {
                let e = &self.edges[edge.0];
                let off = if target == e.u { offset - t } else { offset + t };
                self.normalize(&PointRef::Edge { edge: *edge, offset: off }).expect("inside edge")
            }
        }
    }

    fn step_towards_from_vertex(&self, from: NodeIx, b: &PointRef, t: &Rat) -> PointRef {
        match b {
            PointRef::Vertex(v) => PointRef::Vertex(*v),
            PointRef::Edge { edge, .. } => {
                let e = &self.edges[edge.0];
                let off = if from == e.u { t.clone() } else { &e.len - t };
                self.normalize(&PointRef::Edge { edge: *edge, offset: off }).expect("inside edge")
            }
        }
    }

    /// Gromov product `(x . y)_w`, the distance from `w` to `[x, y]`.
    pub fn gromov_product(&self, x: &PointRef, y: &PointRef, w: &PointRef) -> Rat {
        (self.distance(x, w) + self.distance(y, w) - self.distance(x, y)).half()
    }

    /// The Y-point of three points: the unique common point of the three
    /// pairwise segments.
    pub fn median(&self, a: &PointRef, b: &PointRef, c: &PointRef) -> PointRef {
        let t = self.gromov_product(b, c, a);
        self.point_along(a, b, &t)
    }

    /// `b` lies on `[a, c]`.
    pub fn is_between(&self, a: &PointRef, b: &PointRef, c: &PointRef) -> bool {
        self.distance(a, c) == self.distance(a, b) + self.distance(b, c)
    }

    /// The points lie in order along the segment from the first to the last.
    pub fn piecewise_segment_check(&self, points: &[PointRef]) -> bool {
        if points.len() < 2 {
            return true;
        }
        let total: Rat = points.windows(2).map(|w| self.distance(&w[0], &w[1])).sum();
        self.distance(&points[0], &points[points.len() - 1]) == total
    }

    /// The point at fraction `s` of the way from `x1` to `x2`.
    pub fn interpolate(&self, x1: &PointRef, x2: &PointRef, s: &Rat) -> PointRef {
        let t = s * self.distance(x1, x2);
        self.point_along(x1, x2, &t)
    }

    /// Distance from `x` to the closed ball of radius `s` about the basepoint.
    pub fn dist_to_center_ball(&self, x: &PointRef, s: &Rat) -> Rat {
        self.height(x).monus(s)
    }

    /// Closest point of the segment `[a, b]` to `x`.
    pub fn project_to_segment(&self, x: &PointRef, a: &PointRef, b: &PointRef) -> PointRef {
        let t = self.gromov_product(x, b, a);
        self.point_along(a, b, &t)
    }

    /// Degree-one vertices (a lone vertex counts as well). They form the
    /// unique minimal set spanning the tree.
    pub fn endpoints(&self) -> Vec<PointRef> {
        self.nodes().filter(|&v| self.degree(v) <= 1).map(PointRef::Vertex).collect()
    }

    /// Vertices of degree ≤ 1.
    pub fn leaves(&self) -> Vec<NodeIx> {
        self.nodes().filter(|&v| self.degree(v) <= 1).collect()
    }

    /// Every point of the tree at distance exactly `h` from the basepoint.
    pub fn points_at_height(&self, h: &Rat) -> Vec<PointRef> {
        let mut out = Vec::new();
        if h.is_zero() {
            out.push(self.base_point());
            return out;
        }
        for v in self.nodes() {
            if let Some((par, _)) = self.parent(v) {
                let lo = &self.depth[par.0];
                let hi = &self.depth[v.0];
                if lo < h && h <= hi {
                    out.push(self.point_on_edge(par, v, &(h - lo)).expect("within edge"));
                }
            }
        }
        out
    }

    /// Split edges at the given points so that each becomes a vertex.
    /// Returns the refined tree, the embedding of the old tree into it, and
    /// the vertex now standing for each input point.
    pub fn subdivide(&self, points: &[PointRef]) -> (TreeSkeleton, Embedding, Vec<NodeIx>) {
        let mut cuts: HashMap<usize, BTreeSet<Rat>> = HashMap::new();
        for p in points {
            if let PointRef::Edge { edge, offset } = p {
                cuts.entry(edge.0).or_default().insert(offset.clone());
            }
        }
        let mut graph = self.to_graph();
        graph.edges.clear();
        let mut taken: BTreeSet<String> = self.nodes.iter().map(|n| n.id.clone()).collect();
        let mut cut_ids: HashMap<(usize, Rat), String> = HashMap::new();
        for (k, e) in self.edges.iter().enumerate() {
            let (uid, vid) = (self.id(e.u).to_string(), self.id(e.v).to_string());
            match cuts.get(&k) {
                None => graph.edges.push((uid, vid, e.len.clone())),
                Some(offsets) => {
                    let mut prev_id = uid.clone();
                    let mut prev_off = Rat::zero();
                    for off in offsets {
                        let id = fresh_id(&mut taken, &format!("{uid}~{vid}"));
                        graph.nodes.push(NodeDecl { id: id.clone(), labels: Vec::new(), basepoint: false });
                        graph.edges.push((prev_id, id.clone(), off - &prev_off));
                        cut_ids.insert((k, off.clone()), id.clone());
                        prev_id = id;
                        prev_off = off.clone();
                    }
                    graph.edges.push((prev_id, vid, &e.len - &prev_off));
                }
            }
        }
        let refined = TreeSkeleton::from_graph(&graph).expect("subdivision keeps a tree");
        let images = self.nodes().map(|v| refined.at(self.id(v))).collect();
        let emb = Embedding::new(images);
        let vertices = points
            .iter()
            .map(|p| match p {
                PointRef::Vertex(v) => refined.node(self.id(*v)).expect("kept"),
                PointRef::Edge { edge, offset } => {
                    refined.node(&cut_ids[&(edge.0, offset.clone())]).expect("inserted")
                }
            })
            .collect();
        (refined, emb, vertices)
    }

    /// Suppress every unlabeled, non-basepoint vertex of degree 2 by merging
    /// its two edges.
    pub fn canonicalize(&self) -> (TreeSkeleton, Embedding) {
        let n = self.nodes.len();
        let removable: Vec<bool> = self
            .nodes()
            .map(|v| v != self.base && self.degree(v) == 2 && self.nodes[v.0].labels.is_empty())
            .collect();
        if !removable.iter().any(|&r| r) {
            let images = self.nodes().map(PointRef::Vertex).collect();
            return (self.clone(), Embedding::new(images));
        }
        let mut graph = TreeGraph::new();
        for v in self.nodes() {
            if !removable[v.0] {
                graph.nodes.push(NodeDecl {
                    id: self.id(v).to_string(),
                    labels: self.nodes[v.0].labels.clone(),
                    basepoint: v == self.base,
                });
            }
        }
        // Walk maximal chains through removable vertices, starting from each
        // kept vertex.
        let mut used_edge = vec![false; self.edges.len()];
        for v in self.nodes().filter(|v| !removable[v.0]) {
            for &(w, e) in &self.adj[v.0] {
                if used_edge[e.0] {
                    continue;
                }
                used_edge[e.0] = true;
                let mut len = self.edges[e.0].len.clone();
                let mut prev = v;
                let mut cur = w;
                while removable[cur.0] {
                    let &(next, ne) = self.adj[cur.0]
                        .iter()
                        .find(|(x, _)| *x != prev)
                        .expect("degree two");
                    used_edge[ne.0] = true;
                    len += &self.edges[ne.0].len;
                    prev = cur;
                    cur = next;
                }
                graph.edges.push((self.id(v).to_string(), self.id(cur).to_string(), len));
            }
        }
        debug_assert!(graph.nodes.len() <= n);
        let out = TreeSkeleton::from_graph(&graph).expect("canonical form is a tree");
        // Images of suppressed vertices: walk to the nearest kept vertex on
        // either side and interpolate.
        let images = self
            .nodes()
            .map(|v| {
                if !removable[v.0] {
                    return out.at(self.id(v));
                }
                let mut sides = Vec::new();
                for &(w, e) in &self.adj[v.0] {
                    let mut len = self.edges[e.0].len.clone();
                    let mut prev = v;
                    let mut cur = w;
                    while removable[cur.0] {
                        let &(next, ne) =
                            self.adj[cur.0].iter().find(|(x, _)| *x != prev).expect("degree two");
                        len += &self.edges[ne.0].len;
                        prev = cur;
                        cur = next;
                    }
                    sides.push((cur, len));
                }
                let (a, da) = &sides[0];
                let (b, _) = &sides[1];
                out.point_along(&out.at(self.id(*a)), &out.at(self.id(*b)), da)
            })
            .collect();
        (out, Embedding::new(images))
    }

    /// Whether canonical form holds (no unlabeled, non-basepoint vertex of
    /// degree 2).
    pub fn is_canonical(&self) -> bool {
        self.nodes()
            .all(|v| v == self.base || self.degree(v) != 2 || !self.nodes[v.0].labels.is_empty())
    }

    /// Human-readable name of a point: node id, or `u-v@offset`.
    pub fn describe(&self, p: &PointRef) -> String {
        match p {
            PointRef::Vertex(v) => self.id(*v).to_string(),
            PointRef::Edge { edge, offset } => {
                let e = &self.edges[edge.0];
                format!("{}-{}@{}", self.id(e.u), self.id(e.v), offset)
            }
        }
    }

    /// Copy of this tree with a different basepoint.
    pub fn rebased(&self, v: NodeIx) -> TreeSkeleton {
        let mut g = self.to_graph();
        for (i, n) in g.nodes.iter_mut().enumerate() {
            n.basepoint = i == v.0;
        }
        TreeSkeleton::from_graph(&g).expect("same tree")
    }

    /// Copy with every node id prefixed; labels are kept.
    pub fn prefixed(&self, prefix: &str) -> TreeSkeleton {
        let mut g = self.to_graph();
        for n in &mut g.nodes {
            n.id = format!("{prefix}{}", n.id);
        }
        for e in &mut g.edges {
            e.0 = format!("{prefix}{}", e.0);
            e.1 = format!("{prefix}{}", e.1);
        }
        TreeSkeleton::from_graph(&g).expect("same tree")
    }
}

/// Pick an id starting with `stem` that is not yet in `taken`, and reserve it.
pub(crate) fn fresh_id(taken: &mut BTreeSet<String>, stem: &str) -> String {
    let mut k = 0usize;
    loop {
        let candidate = format!("{stem}#{k}");
        if !taken.contains(&candidate) {
            taken.insert(candidate.clone());
            return candidate;
        }
        k += 1;
    }
}

/// An isometric map from one tree into another, given by the image of every
/// source vertex. Edge points map along the image segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    images: Vec<PointRef>,
}

impl Embedding {
    pub fn new(images: Vec<PointRef>) -> Self {
        Embedding { images }
    }

    pub fn image_of(&self, v: NodeIx) -> &PointRef {
        &self.images[v.0]
    }

    pub fn images(&self) -> &[PointRef] {
        &self.images
    }

    pub fn apply(&self, source: &TreeSkeleton, target: &TreeSkeleton, p: &PointRef) -> PointRef {
        match p {
            PointRef::Vertex(v) => self.images[v.0].clone(),
            PointRef::Edge { edge, offset } => {
                let e = source.edge(*edge);
                target.point_along(&self.images[e.u.0], &self.images[e.v.0], offset)
            }
        }
    }

    /// `other ∘ self`.
    pub fn then(
        &self,
        middle: &TreeSkeleton,
        target: &TreeSkeleton,
        other: &Embedding,
    ) -> Embedding {
        Embedding { images: self.images.iter().map(|p| other.apply(middle, target, p)).collect() }
    }
}
