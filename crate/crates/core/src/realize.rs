//! Finite metrics: the four-point condition, hyperbolicity constants, and
//! realization of additive metrics as trees.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::rat::Rat;
use crate::tree::{NodeDecl, PointRef, TreeGraph, TreeSkeleton};

/// A finite symmetric matrix of distances with named rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricMatrix {
    labels: Vec<String>,
    entries: Vec<Vec<Rat>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("matrix has {rows} rows but {labels} labels")]
    Shape { rows: usize, labels: usize },
    #[error("row {0} has the wrong length")]
    Ragged(usize),
    #[error("diagonal entry {0} is not zero")]
    Diagonal(usize),
    #[error("entries ({0},{1}) and ({1},{0}) differ")]
    Asymmetric(usize, usize),
    #[error("entry ({0},{1}) is negative")]
    Negative(usize, usize),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
}

impl MetricMatrix {
    pub fn new(labels: Vec<String>, entries: Vec<Vec<Rat>>) -> Result<Self, MatrixError> {
        let n = labels.len();
        if entries.len() != n {
            return Err(MatrixError::Shape { rows: entries.len(), labels: n });
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(MatrixError::DuplicateLabel(l.clone()));
            }
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(MatrixError::Ragged(i));
            }
            if !row[i].is_zero() {
                return Err(MatrixError::Diagonal(i));
            }
            for j in 0..n {
                if row[j] != entries[j][i] {
                    return Err(MatrixError::Asymmetric(i, j));
                }
                if row[j].is_negative() {
                    return Err(MatrixError::Negative(i, j));
                }
            }
        }
        Ok(MetricMatrix { labels, entries })
    }

    /// Build from the strict upper triangle, row by row.
    pub fn from_upper(labels: Vec<String>, upper: &[Rat]) -> Result<Self, MatrixError> {
        let n = labels.len();
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(MatrixError::Shape { rows: upper.len(), labels: n });
        }
        let mut entries = vec![vec![Rat::zero(); n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                entries[i][j] = upper[k].clone();
                entries[j][i] = upper[k].clone();
                k += 1;
            }
        }
        Self::new(labels, entries)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<Rat>] {
        &self.entries
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn gp(&self, x: usize, y: usize, w: usize) -> Rat {
        (&self.entries[x][w] + &self.entries[y][w] - &self.entries[x][y]).half()
    }

    /// First triple (in lexicographic order) violating the triangle
    /// inequality `d(i,k) <= d(i,j) + d(j,k)`.
    pub fn triangle_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.entries[i][k] > &self.entries[i][j] + &self.entries[j][k] {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }
}

/// A quadruple violating the four-point condition:
/// `lhs = d(x,y) + d(z,t)` exceeds `rhs = max(d(x,z) + d(y,t), d(y,z) + d(x,t))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourPointWitness {
    pub indices: [usize; 4],
    pub lhs: Rat,
    pub rhs: Rat,
}

impl fmt::Display for FourPointWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z, t] = self.indices;
        write!(f, "quadruple=({x},{y},{z},{t}) lhs={} rhs={}", self.lhs, self.rhs)
    }
}

/// Check the four-point condition over all ordered quadruples, repeats
/// included (so it also covers the triangle inequality). Returns the
/// lexicographically first violation.
pub fn four_point_check(m: &MetricMatrix) -> Result<(), FourPointWitness> {
    let n = m.len();
    let d = &m.entries;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for t in 0..n {
                    let lhs = &d[x][y] + &d[z][t];
                    let a = &d[x][z] + &d[y][t];
                    let b = &d[y][z] + &d[x][t];
                    let rhs = if a > b { a } else { b };
                    if lhs > rhs {
                        return Err(FourPointWitness { indices: [x, y, z, t], lhs, rhs });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Least `δ >= 0` with `min((x.z)_w, (y.z)_w) - δ <= (x.y)_w` for all
/// quadruples.
///
/// Expanding the products, the defect of `(w, x, y, z)` is half of
/// `d(x,y) + d(z,w) - max(d(x,z) + d(y,w), d(y,z) + d(x,w))`, so it depends
/// only on the multiset of indices and the pairing put first: `δ` is half
/// the gap between the two largest pair sums, maximized over multisets.
pub fn delta_hyperbolicity(m: &MetricMatrix) -> Rat {
    let n = m.len();
    let d = &m.entries;
    let mut best = Rat::zero();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                for l in k..n {
                    let mut s = [&d[i][j] + &d[k][l], &d[i][k] + &d[j][l], &d[i][l] + &d[j][k]];
                    s.sort();
                    let gap = (&s[2] - &s[1]).half();
                    if gap > best {
                        best = gap;
                    }
                }
            }
        }
    }
    best
}

/// Pairwise distance matrix of `points`, labelled by their descriptions.
pub fn tree_to_matrix(tree: &TreeSkeleton, points: &[PointRef]) -> MetricMatrix {
    let labels: Vec<String> = points.iter().enumerate().map(|(i, p)| format!("{i}:{}", tree.describe(p))).collect();
    tree_to_matrix_labeled(tree, points, labels)
}

/// Pairwise distance matrix of `points` with caller-chosen labels.
pub fn tree_to_matrix_labeled(tree: &TreeSkeleton, points: &[PointRef], labels: Vec<String>) -> MetricMatrix {
    let n = points.len();
    let mut entries = vec![vec![Rat::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = tree.distance(&points[i], &points[j]);
            entries[i][j] = d.clone();
            entries[j][i] = d;
        }
    }
    MetricMatrix { labels, entries }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealizeError {
    #[error("metric is not additive: {0}")]
    FourPointViolation(FourPointWitness),
    #[error("unknown basepoint label `{0}`")]
    UnknownBasepoint(String),
}

/// Realize an additive metric as a canonical tree whose nodes carry the
/// matrix labels. Points at distance zero share one node. Branch points
/// that carry no label get ids `_y0`, `_y1`, ...
pub fn realize_tree(m: &MetricMatrix, basepoint_label: &str) -> Result<TreeSkeleton, RealizeError> {
    let base = m
        .index_of(basepoint_label)
        .ok_or_else(|| RealizeError::UnknownBasepoint(basepoint_label.to_string()))?;
    four_point_check(m).map_err(RealizeError::FourPointViolation)?;
    let n = m.len();

    // Group labels at distance zero; the basepoint's group goes first.
    let mut order: Vec<usize> = vec![base];
    order.extend((0..n).filter(|&i| i != base));
    let mut reps: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match reps.iter().position(|&r| m.get(r, i).is_zero()) {
            Some(k) => members[k].push(i),
            None => {
                reps.push(i);
                members.push(vec![i]);
            }
        }
    }

    let mut taken: BTreeSet<String> = m.labels.iter().cloned().collect();
    let mut steiner = 0usize;
    let mut fresh = |taken: &mut BTreeSet<String>| loop {
        let id = format!("_y{steiner}");
        steiner += 1;
        if taken.insert(id.clone()) {
            return id;
        }
    };

    let group_labels = |k: usize| members[k].iter().map(|&i| m.labels[i].clone()).collect::<Vec<_>>();
    let mut graph = TreeGraph::new();
    graph.nodes.push(NodeDecl { id: m.labels[reps[0]].clone(), labels: group_labels(0), basepoint: true });
    // Node id of each inserted group.
    let mut ids: Vec<String> = vec![m.labels[reps[0]].clone()];

    for k in 1..reps.len() {
        let x = reps[k];
        let label_id = m.labels[x].clone();
        if k == 1 {
            graph.nodes.push(NodeDecl { id: label_id.clone(), labels: group_labels(k), basepoint: false });
            graph.edges.push((ids[0].clone(), label_id.clone(), m.get(reps[0], x).clone()));
            ids.push(label_id);
            continue;
        }
        // The closest point of the current tree to x lies on the segment
        // [a, b] minimizing (a.b)_x.
        let mut best: Option<(usize, usize, Rat)> = None;
        for i in 0..k {
            for j in i + 1..k {
                let g = m.gp(reps[i], reps[j], x);
                if best.as_ref().map_or(true, |(_, _, b)| &g < b) {
                    best = Some((i, j, g));
                }
            }
        }
        let (i, j, pendant) = best.expect("at least two inserted groups");
        let (a, b) = (reps[i], reps[j]);
        let along = m.gp(x, b, a);
        let tree = TreeSkeleton::from_graph(&graph).expect("partial realization is a tree");
        let q = tree.point_along(&tree.at(&ids[i]), &tree.at(&ids[j]), &along);
        let anchor = match q {
            PointRef::Vertex(v) => tree.id(v).to_string(),
            PointRef::Edge { edge, offset } => {
                let e = tree.edge(edge);
                let (uid, vid) = (tree.id(e.u).to_string(), tree.id(e.v).to_string());
                let id = if pendant.is_zero() { label_id.clone() } else { fresh(&mut taken) };
                graph.nodes.push(NodeDecl { id: id.clone(), labels: Vec::new(), basepoint: false });
                let len = e.len.clone();
                graph.edges[edge.0] = (uid, id.clone(), offset.clone());
                graph.edges.push((id.clone(), vid, &len - &offset));
                id
            }
        };
        if pendant.is_zero() {
            let decl = graph.nodes.iter_mut().find(|d| d.id == anchor).expect("anchor exists");
            decl.labels.extend(group_labels(k));
            ids.push(anchor);
        } else {
            graph.nodes.push(NodeDecl { id: label_id.clone(), labels: group_labels(k), basepoint: false });
            graph.edges.push((anchor, label_id.clone(), pendant));
            ids.push(label_id);
        }
    }
    Ok(TreeSkeleton::from_graph(&graph).expect("realization is a tree"))
}

/// The node of a realized tree carrying `label`, as a point.
pub fn labeled_point(tree: &TreeSkeleton, label: &str) -> Option<PointRef> {
    tree.labeled(label).map(PointRef::Vertex)
}
