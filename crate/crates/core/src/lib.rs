//! Group-fair PageRank on node-colored directed graphs.
//!
//! Two families of fair rankings are provided. The fairness-sensitive family
//! ([`fspr`]) keeps the transition matrix and searches for the jump vector
//! that gives the protected (red) group a share `φ` of the total mass with
//! the least deviation from the original PageRank. The locally fair family
//! ([`lfpr`]) rewrites every transition row so that each node sends exactly
//! `φ` of its mass to red nodes, which makes the walk fair at every step and
//! every personalized PageRank fair as well.
//!
//! [`analysis`] holds the metrics (red mass, utility loss, the loss lower
//! bound, personalized audits) and [`synth`] a biased preferential
//! attachment generator for homophily experiments.

pub mod analysis;
pub mod error;
pub mod export;
pub mod fspr;
pub mod graph;
pub mod lfpr;
pub mod pagerank;
pub mod run;
pub mod simplex;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{group_stats, Color, ColoredGraph, GroupStats};
pub use pagerank::{PowerConfig, RankOne, ScoreVector, TransitionModel};

pub(crate) mod par {
    use crate::error::Result;

    /// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
    /// Results are always returned in index order.
    #[cfg(feature = "parallel")]
    pub fn try_map<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn try_map<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        (0..n).map(f).collect()
    }
}
