//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rtree::{rat, PointRef, Rat, TreeGraph, TreeSkeleton};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tripod() -> TreeSkeleton {
    let mut g = TreeGraph::new();
    g.basepoint("p").node("y").node("a").node("b");
    g.edge("p", "y", rat!(1)).edge("y", "a", rat!(1)).edge("y", "b", rat!(1));
    g.build().unwrap()
}

const LENGTHS: [(i64, i64); 6] = [(1, 2), (1, 1), (3, 2), (2, 1), (1, 3), (5, 4)];

/// Random tree with `2..=max_nodes` nodes, every node labelled so the
/// skeleton is canonical.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> TreeSkeleton {
    let n = rng.gen_range(2..=max_nodes.max(2));
    let mut g = TreeGraph::new();
    g.basepoint("v0");
    for i in 1..n {
        g.labeled(format!("v{i}"), format!("v{i}"));
        let parent = rng.gen_range(0..i);
        let (a, b) = LENGTHS[rng.gen_range(0..LENGTHS.len())];
        g.edge(format!("v{parent}"), format!("v{i}"), Rat::new(a, b));
    }
    g.build().unwrap()
}

/// A uniformly chosen vertex or interior edge point.
pub fn random_point(rng: &mut ChaCha8Rng, t: &TreeSkeleton) -> PointRef {
    if t.edge_count() == 0 || rng.gen_bool(0.4) {
        return PointRef::Vertex(rtree::NodeIx(rng.gen_range(0..t.node_count())));
    }
    let e = rtree::tree::EdgeIx(rng.gen_range(0..t.edge_count()));
    let len = t.edge(e).len.clone();
    let k = rng.gen_range(1..8);
    t.normalize(&PointRef::Edge { edge: e, offset: len * Rat::new(k, 8) }).unwrap()
}

pub fn vertices(t: &TreeSkeleton) -> Vec<PointRef> {
    t.nodes().map(PointRef::Vertex).collect()
}

/// Path-sum distances from `a` to every vertex, breadth-first over the
/// explicit edge list.
pub fn distances_from(t: &TreeSkeleton, a: rtree::NodeIx) -> Vec<Rat> {
    let mut adj: Vec<Vec<(usize, &Rat)>> = vec![Vec::new(); t.node_count()];
    for e in t.edges() {
        adj[e.u.0].push((e.v.0, &e.len));
        adj[e.v.0].push((e.u.0, &e.len));
    }
    let mut dist: Vec<Option<Rat>> = vec![None; t.node_count()];
    dist[a.0] = Some(Rat::zero());
    let mut queue = std::collections::VecDeque::from([a.0]);
    while let Some(x) = queue.pop_front() {
        for &(y, len) in &adj[x] {
            if dist[y].is_none() {
                dist[y] = Some(dist[x].clone().unwrap() + len);
                queue.push_back(y);
            }
        }
    }
    dist.into_iter().map(|d| d.expect("connected")).collect()
}

/// All-pairs path-sum distances between vertices.
pub fn all_pairs(t: &TreeSkeleton) -> Vec<Vec<Rat>> {
    t.nodes().map(|v| distances_from(t, v)).collect()
}

/// A point strictly inside a random edge.
pub fn random_interior(rng: &mut ChaCha8Rng, t: &TreeSkeleton) -> PointRef {
    let e = rtree::tree::EdgeIx(rng.gen_range(0..t.edge_count()));
    let len = t.edge(e).len.clone();
    PointRef::Edge { edge: e, offset: len * Rat::new(rng.gen_range(1..8), 8) }
}

/// Independent path-sum distance between vertices: walk the explicit edge
/// list breadth-first, no cached depths.
pub fn path_sum(t: &TreeSkeleton, a: rtree::NodeIx, b: rtree::NodeIx) -> Rat {
    let mut dist: Vec<Option<Rat>> = vec![None; t.node_count()];
    dist[a.0] = Some(Rat::zero());
    let mut queue = std::collections::VecDeque::from([a]);
    while let Some(x) = queue.pop_front() {
        for e in t.edges() {
            let y = if e.u == x { e.v } else if e.v == x { e.u } else { continue };
            if dist[y.0].is_none() {
                dist[y.0] = Some(dist[x.0].clone().unwrap() + &e.len);
                queue.push_back(y);
            }
        }
    }
    dist[b.0].clone().unwrap()
}

/// Points spaced exactly `mesh` apart along every edge (plus all vertices),
/// assuming `mesh` divides every edge length.
pub fn mesh_points(t: &TreeSkeleton, mesh: &Rat) -> Vec<PointRef> {
    let mut out = vertices(t);
    for e in t.edge_ixs() {
        let len = t.edge(e).len.clone();
        let mut off = mesh.clone();
        while off < len {
            out.push(PointRef::Edge { edge: e, offset: off.clone() });
            off += mesh;
        }
    }
    out
}

/// Least common denominator of every edge length and `extra`.
pub fn common_denominator(t: &TreeSkeleton, extra: &[&Rat]) -> i64 {
    let mut l: i64 = 1;
    for e in t.edges() {
        l = l.lcm(&e.len.denom().to_i64().unwrap());
    }
    for x in extra {
        l = l.lcm(&x.denom().to_i64().unwrap());
    }
    l
}

/// Brute-force `ψ(x)` with witnesses restricted to `pts`, in integer
/// arithmetic after scaling by `scale`.
pub fn psi_grid(t: &TreeSkeleton, x: &PointRef, r: &Rat, pts: &[PointRef], scale: i64) -> Rat {
    let s = Rat::int(scale);
    let int = |q: Rat| (q * &s).to_i64().expect("integral after scaling");
    let dx: Vec<i64> = pts.iter().map(|y| int(t.distance(x, y))).collect();
    let l = int(r - t.height(x));
    let n = pts.len();
    let mut dd = vec![0i64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = int(t.distance(&pts[i], &pts[j]));
            dd[i * n + j] = d;
            dd[j * n + i] = d;
        }
    }
    let mut best = i64::MAX;
    for i in 0..n {
        let ei = (dx[i] - l).abs();
        if ei >= best {
            continue;
        }
        for j in i..n {
            let eij = ei.max((dx[j] - l).abs()).max(dx[i] + dx[j] - dd[i * n + j]);
            if eij >= best {
                continue;
            }
            for k in j..n {
                let v = eij
                    .max((dx[k] - l).abs())
                    .max(dx[i] + dx[k] - dd[i * n + k])
                    .max(dx[j] + dx[k] - dd[j * n + k]);
                if v < best {
                    best = v;
                }
            }
        }
    }
    Rat::new(best, scale)
}
