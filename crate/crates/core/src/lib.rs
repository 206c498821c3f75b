//! Fair division of items that sit on the vertices of a graph, where every
//! bundle must induce a compact subgraph: coverable by a bounded number of
//! balls of bounded radius (or, in the strong variant, by a bounded number of
//! groups with bounded pairwise distances).
//!
//! The crate contains an exhaustive oracle, a matching solver for single-item
//! bundles, dynamic programs for paths and for graphs of bounded treewidth,
//! an enumeration solver for bounded-degree graphs, and instance generators
//! built from classical hard problems.

pub mod annotate;
pub mod compactness;
pub mod enumerate;
pub mod error;
pub mod fairness;
pub mod generators;
pub mod graph;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod path_dp;
pub mod solve;
pub mod treewidth;
pub mod tw_dp;

pub use error::{Error, Result};
pub use graph::{Distance, Graph};
pub use model::{Allocation, CompactnessSpec, FairnessGoal, Instance};
pub use solve::{maximin_share, solve, Method, Solution, SolveOptions};
