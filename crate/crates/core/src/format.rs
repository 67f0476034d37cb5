//! Line-oriented text formats for trees, matrices, type descriptors and
//! shared-subtree maps.
//!
//! Trees:
//!
//! ```text
//! # the tripod
//! radius 2
//! node p basepoint
//! node y
//! node a label=leaf
//! node b
//! edge p y 1
//! edge y a 1
//! edge y b 1
//! point m edge p y 1/2
//! ```
//!
//! A single-token point is a declared point name, a node id, or
//! `u-v@offset` for a point on the edge `u-v`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::amalgam::SubtreeMap;
use crate::rat::Rat;
use crate::realize::{MatrixError, MetricMatrix};
use crate::subtree::spanned_subtree;
use crate::tree::{NodeDecl, PointRef, TreeError, TreeGraph, TreeSkeleton};
use crate::types::NTypeDescriptor;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `radius` line")]
    MissingRadius,
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

fn rat_at(line: usize, tok: Option<&str>) -> Result<Rat, FormatError> {
    let tok = tok.ok_or_else(|| syntax(line, "expected a rational `a` or `a/b`"))?;
    tok.parse().map_err(|_| syntax(line, format!("`{tok}` is not an exact rational `a` or `a/b`")))
}

fn usize_at(line: usize, tok: Option<&str>) -> Result<usize, FormatError> {
    let tok = tok.ok_or_else(|| syntax(line, "expected an index"))?;
    tok.parse().map_err(|_| syntax(line, format!("`{tok}` is not an index")))
}

/// Meaningful lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty() && !t[0].starts_with('#'))
}

/// A point named before the tree is built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointSpec {
    /// A declared name or a node id.
    Name(String),
    Edge(String, String, Rat),
}

impl PointSpec {
    /// Single-token form.
    pub fn parse_token(tok: &str) -> Result<PointSpec, String> {
        match tok.split_once('@') {
            None => Ok(PointSpec::Name(tok.to_string())),
            Some((uv, off)) => {
                let (u, v) = uv.split_once('-').ok_or_else(|| format!("`{tok}` is not of the form u-v@offset"))?;
                let off = off.parse().map_err(|_| format!("`{off}` is not an exact rational"))?;
                Ok(PointSpec::Edge(u.to_string(), v.to_string(), off))
            }
        }
    }

    /// Multi-token form `node <id>` or `edge <u> <v> <offset>`, falling back
    /// to the single-token form.
    fn parse_tokens(line: usize, toks: &[&str]) -> Result<PointSpec, FormatError> {
        match toks {
            ["node", id] => Ok(PointSpec::Name(id.to_string())),
            ["edge", u, v, off] => Ok(PointSpec::Edge(u.to_string(), v.to_string(), rat_at(line, Some(off))?)),
            [tok] => PointSpec::parse_token(tok).map_err(|m| syntax(line, m)),
            _ => Err(syntax(line, "expected `node <id>`, `edge <u> <v> <offset>` or a point name")),
        }
    }

    pub fn resolve(&self, tree: &TreeSkeleton, named: &BTreeMap<String, PointRef>) -> Result<PointRef, FormatError> {
        match self {
            PointSpec::Name(n) => named
                .get(n)
                .cloned()
                .or_else(|| tree.node(n).map(PointRef::Vertex))
                .ok_or_else(|| FormatError::UnknownPoint(n.clone())),
            PointSpec::Edge(u, v, off) => Ok(tree.point_on_edge_by_id(u, v, off)?),
        }
    }
}

/// A parsed tree file.
#[derive(Clone, Debug)]
pub struct TreeFile {
    pub tree: TreeSkeleton,
    pub radius: Rat,
    /// Declared points, in file order.
    pub points: Vec<(String, PointRef)>,
}

impl TreeFile {
    pub fn named(&self) -> BTreeMap<String, PointRef> {
        self.points.iter().cloned().collect()
    }

    pub fn point(&self, tok: &str) -> Result<PointRef, FormatError> {
        PointSpec::parse_token(tok).map_err(|m| syntax(0, m))?.resolve(&self.tree, &self.named())
    }

    /// Comma-separated point list; empty input is the empty list.
    pub fn point_list(&self, list: &str) -> Result<Vec<PointRef>, FormatError> {
        list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| self.point(s)).collect()
    }
}

/// Parse the graph and radius without building the tree, for validation
/// reports on malformed input.
pub fn parse_tree_graph(text: &str) -> Result<(TreeGraph, Option<Rat>, Vec<(usize, String, PointSpec)>), FormatError> {
    let mut g = TreeGraph::new();
    let mut radius = None;
    let mut points = Vec::new();
    for (line, toks) in lines(text) {
        match toks[0] {
            "node" => {
                let id = toks.get(1).ok_or_else(|| syntax(line, "expected `node <id>`"))?;
                let mut decl = NodeDecl { id: id.to_string(), labels: Vec::new(), basepoint: false };
                for extra in &toks[2..] {
                    if *extra == "basepoint" {
                        decl.basepoint = true;
                    } else if let Some(l) = extra.strip_prefix("label=") {
                        decl.labels.push(l.to_string());
                    } else {
                        return Err(syntax(line, format!("unexpected `{extra}`; expected `basepoint` or `label=<name>`")));
                    }
                }
                g.nodes.push(decl);
            }
            "edge" => {
                if toks.len() != 4 {
                    return Err(syntax(line, "expected `edge <id_u> <id_v> <len>`"));
                }
                g.edges.push((toks[1].to_string(), toks[2].to_string(), rat_at(line, Some(toks[3]))?));
            }
            "point" => {
                let name = toks.get(1).ok_or_else(|| syntax(line, "expected `point <name> ...`"))?;
                points.push((line, name.to_string(), PointSpec::parse_tokens(line, &toks[2..])?));
            }
            "radius" => {
                if radius.is_some() {
                    return Err(syntax(line, "`radius` given more than once"));
                }
                if toks.len() != 2 {
                    return Err(syntax(line, "expected `radius <len>`"));
                }
                radius = Some(rat_at(line, Some(toks[1]))?);
            }
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    Ok((g, radius, points))
}

pub fn parse_tree(text: &str) -> Result<TreeFile, FormatError> {
    let (g, radius, specs) = parse_tree_graph(text)?;
    let radius = radius.ok_or(FormatError::MissingRadius)?;
    let tree = g.build()?;
    let mut named = BTreeMap::new();
    let mut points = Vec::new();
    for (line, name, spec) in specs {
        let p = spec.resolve(&tree, &named).map_err(|e| syntax(line, e.to_string()))?;
        named.insert(name.clone(), p.clone());
        points.push((name, p));
    }
    Ok(TreeFile { tree, radius, points })
}

pub fn write_tree(tree: &TreeSkeleton, radius: &Rat, points: &[(String, PointRef)]) -> String {
    let mut out = String::new();
    writeln!(out, "radius {radius}").unwrap();
    let g = tree.to_graph();
    for n in &g.nodes {
        write!(out, "node {}", n.id).unwrap();
        if n.basepoint {
            out.push_str(" basepoint");
        }
        for l in &n.labels {
            write!(out, " label={l}").unwrap();
        }
        out.push('\n');
    }
    for (u, v, len) in &g.edges {
        writeln!(out, "edge {u} {v} {len}").unwrap();
    }
    for (name, p) in points {
        match p {
            PointRef::Vertex(v) => writeln!(out, "point {name} node {}", tree.id(*v)).unwrap(),
            PointRef::Edge { edge, offset } => {
                let e = tree.edge(*edge);
                writeln!(out, "point {name} edge {} {} {offset}", tree.id(e.u), tree.id(e.v)).unwrap()
            }
        }
    }
    out
}

/// `labels ...` then the strict upper triangle, whitespace separated.
pub fn parse_matrix(text: &str) -> Result<MetricMatrix, FormatError> {
    let mut it = lines(text);
    let (line, head) = it.next().ok_or_else(|| syntax(1, "expected `labels <n1> <n2> ...`"))?;
    if head[0] != "labels" {
        return Err(syntax(line, "expected `labels <n1> <n2> ...`"));
    }
    let labels: Vec<String> = head[1..].iter().map(|s| s.to_string()).collect();
    let mut upper = Vec::new();
    for (line, toks) in it {
        for t in toks {
            upper.push(rat_at(line, Some(t))?);
        }
    }
    Ok(MetricMatrix::from_upper(labels, &upper)?)
}

pub fn write_matrix(m: &MetricMatrix) -> String {
    let mut out = format!("labels {}\n", m.labels().join(" "));
    for i in 0..m.len() {
        let row: Vec<String> = (i + 1..m.len()).map(|j| m.get(i, j).to_string()).collect();
        if !row.is_empty() {
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    }
    out
}

/// `pair <left_point> <right_point>` lines.
pub fn parse_shared_map(text: &str, left: &TreeFile, right: &TreeFile) -> Result<SubtreeMap, FormatError> {
    let mut pairs = Vec::new();
    for (line, toks) in lines(text) {
        if toks.len() != 3 || toks[0] != "pair" {
            return Err(syntax(line, "expected `pair <left_point> <right_point>`"));
        }
        let l = left.point(toks[1]).map_err(|e| syntax(line, e.to_string()))?;
        let r = right.point(toks[2]).map_err(|e| syntax(line, e.to_string()))?;
        pairs.push((l, r));
    }
    Ok(SubtreeMap::new(pairs))
}

/// A descriptor file before its context is loaded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescriptorFile {
    pub context: String,
    /// Parameters; when absent, the context file's declared points.
    pub params: Option<Vec<PointSpec>>,
    pub radius: Option<Rat>,
    pub closest: BTreeMap<usize, PointSpec>,
    pub offsets: BTreeMap<usize, Rat>,
    pub pairs: BTreeMap<(usize, usize), Rat>,
}

/// `context <tree-file>`, then `param <point>`, `radius <r>`,
/// `closest <i> <point>`, `offset <i> <rat>` and `pair <i> <j> <rat>` lines.
pub fn parse_descriptor(text: &str) -> Result<DescriptorFile, FormatError> {
    let mut d = DescriptorFile {
        context: String::new(),
        params: None,
        radius: None,
        closest: BTreeMap::new(),
        offsets: BTreeMap::new(),
        pairs: BTreeMap::new(),
    };
    for (line, toks) in lines(text) {
        match toks[0] {
            "context" if toks.len() == 2 => d.context = toks[1].to_string(),
            "param" => d.params.get_or_insert_with(Vec::new).push(PointSpec::parse_tokens(line, &toks[1..])?),
            "radius" => d.radius = Some(rat_at(line, toks.get(1).copied())?),
            "closest" => {
                let i = usize_at(line, toks.get(1).copied())?;
                d.closest.insert(i, PointSpec::parse_tokens(line, toks.get(2..).unwrap_or(&[]))?);
            }
            "offset" => {
                d.offsets.insert(usize_at(line, toks.get(1).copied())?, rat_at(line, toks.get(2).copied())?);
            }
            "pair" => {
                let (i, j) = (usize_at(line, toks.get(1).copied())?, usize_at(line, toks.get(2).copied())?);
                d.pairs.insert((i.min(j), i.max(j)), rat_at(line, toks.get(3).copied())?);
            }
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    if d.context.is_empty() {
        return Err(syntax(0, "missing `context <tree-file>`"));
    }
    Ok(d)
}

impl DescriptorFile {
    /// Build the descriptor over the loaded context tree.
    pub fn resolve(&self, ctx: &TreeFile) -> Result<NTypeDescriptor, FormatError> {
        let named = ctx.named();
        let params = match &self.params {
            Some(ps) => ps.iter().map(|p| p.resolve(&ctx.tree, &named)).collect::<Result<Vec<_>, _>>()?,
            None => ctx.points.iter().map(|(_, p)| p.clone()).collect(),
        };
        let n = self.closest.keys().chain(self.offsets.keys()).map(|i| i + 1).max().unwrap_or(0);
        let mut closest = Vec::new();
        let mut offsets = Vec::new();
        for i in 0..n {
            let c = self.closest.get(&i).ok_or_else(|| syntax(0, format!("missing `closest {i}`")))?;
            closest.push(c.resolve(&ctx.tree, &named)?);
            offsets.push(self.offsets.get(&i).cloned().ok_or_else(|| syntax(0, format!("missing `offset {i}`")))?);
        }
        let mut pairwise = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.pairs.get(&(i, j)).cloned().ok_or_else(|| syntax(0, format!("missing `pair {i} {j}`")))?;
                pairwise[i][j] = v.clone();
                pairwise[j][i] = v;
            }
        }
        let sub = spanned_subtree(&ctx.tree, &params);
        let radius = self.radius.clone().unwrap_or_else(|| ctx.radius.clone());
        NTypeDescriptor::over(sub, &closest, offsets, pairwise, radius)
            .ok_or_else(|| syntax(0, "a closest point lies outside the span of the parameters"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    const TRIPOD: &str = "# tripod\nradius 2\nnode p basepoint\nnode y\nnode a label=leaf\nnode b\n\
        edge p y 1\nedge y a 1\nedge y b 1\npoint m edge p y 1/2\npoint top node a\n";

    #[test]
    fn tree_round_trip() {
        let f = parse_tree(TRIPOD).unwrap();
        assert_eq!(f.radius, rat!(2));
        assert_eq!(f.tree.labeled("leaf"), f.tree.node("a"));
        assert_eq!(f.tree.height(&f.point("m").unwrap()), rat!(1 / 2));
        let text = write_tree(&f.tree, &f.radius, &f.points);
        let g = parse_tree(&text).unwrap();
        assert_eq!(g.tree, f.tree);
        assert_eq!(g.points, f.points);
        assert_eq!(f.point_list("a, y-b@1/2").unwrap().len(), 2);
    }

    #[test]
    fn tree_errors_carry_lines() {
        let err = parse_tree("radius 2\nnode p basepoint\nedge p q 1.5\n").unwrap_err();
        assert_eq!(err, FormatError::Syntax { line: 3, msg: "`1.5` is not an exact rational `a` or `a/b`".into() });
        assert_eq!(parse_tree("node p basepoint\n").unwrap_err(), FormatError::MissingRadius);
        assert!(matches!(parse_tree("radius 1\nradius 2\n"), Err(FormatError::Syntax { line: 2, .. })));
        assert!(matches!(parse_tree("radius 1\nnode p\n"), Err(FormatError::Tree(TreeError::NoBasepoint))));
    }

    #[test]
    fn matrix_round_trip() {
        let m = parse_matrix("labels a b c\n1 2\n3\n").unwrap();
        assert_eq!(m.get(1, 2), &rat!(3));
        assert_eq!(parse_matrix(&write_matrix(&m)).unwrap(), m);
        assert!(matches!(parse_matrix("labels a b\n1 2\n"), Err(FormatError::Matrix(_))));
    }

    #[test]
    fn descriptor_resolves_over_context() {
        let ctx = parse_tree(TRIPOD).unwrap();
        let d = parse_descriptor("context tripod.tree\nparam y\nclosest 0 y\noffset 0 1\nclosest 1 y\noffset 1 1\npair 0 1 2\n")
            .unwrap();
        assert_eq!(d.context, "tripod.tree");
        let q = d.resolve(&ctx).unwrap();
        assert_eq!(q.arity(), 2);
        assert_eq!(q.pairwise[1][0], rat!(2));
        assert!(crate::types::validate_descriptor(&q).is_ok());
        let outside = parse_descriptor("context t\nparam y\nclosest 0 a\noffset 0 0\n").unwrap();
        assert!(outside.resolve(&ctx).is_err());
    }

    #[test]
    fn shared_map_lines() {
        let ctx = parse_tree(TRIPOD).unwrap();
        let map = parse_shared_map("pair y y\npair a b\n", &ctx, &ctx).unwrap();
        assert!(map.check_isometry(&ctx.tree, &ctx.tree).is_ok());
        assert!(parse_shared_map("pair y\n", &ctx, &ctx).is_err());
    }
}
