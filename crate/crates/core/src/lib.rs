//! Exact computations on finitely spanned pointed R-trees of bounded radius.
//!
//! The crate represents such a tree as a finite edge-weighted skeleton with a
//! basepoint ([`TreeSkeleton`]) and works with exact rationals ([`Rat`])
//! throughout. On top of the geometry it provides:
//!
//! * realization of additive (0-hyperbolic) finite metrics as trees,
//! * a small continuous-logic formula language with exact and certified
//!   evaluation, including the richly-branching deficiency,
//! * gluing and amalgamation of trees,
//! * complete types over finite parameter sets, their distances and
//!   principality,
//! * the forking independence relation and canonical bases,
//! * generators for finite approximations of several model families.
//!
//! ```
//! use rtree::{rat, TreeGraph};
//!
//! let mut g = TreeGraph::new();
//! g.basepoint("p").node("y").node("a").node("b");
//! g.edge("p", "y", rat!(1)).edge("y", "a", rat!(1)).edge("y", "b", rat!(1));
//! let t = g.build().unwrap();
//! assert_eq!(t.distance(&t.at("a"), &t.at("b")), rat!(2));
//! assert_eq!(t.median(&t.at("p"), &t.at("a"), &t.at("b")), t.at("y"));
//! ```

pub mod amalgam;
pub mod cli;
pub mod format;
pub mod formula;
pub mod generators;
pub mod independence;
pub mod rat;
pub mod realize;
pub mod subtree;
pub mod tree;
pub mod types;

pub use rat::Rat;
pub use realize::{four_point_check, realize_tree, tree_to_matrix, FourPointWitness, MetricMatrix};
pub use subtree::{project_to_subtree, spanned_subtree, SpannedSubtree};
pub use tree::{Embedding, NodeIx, PointRef, TreeGraph, TreeSkeleton, ValidationReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/realization.md")]
    mod realization {}
    #[doc = include_str!("../../../book/src/formulas.md")]
    mod formulas {}
    #[doc = include_str!("../../../book/src/amalgamation.md")]
    mod amalgamation {}
    #[doc = include_str!("../../../book/src/types.md")]
    mod types {}
    #[doc = include_str!("../../../book/src/independence.md")]
    mod independence {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
}
