//! Biased preferential attachment.
//!
//! Growth starts from a ring over `n0` nodes. Each arriving node is red with
//! probability `r`, then repeatedly picks an existing node with probability
//! proportional to its degree and links to it with probability `α` of its
//! own color when the colors match, `1 − α` otherwise. Links are undirected
//! and stored as two directed edges.
//!
//! Randomness comes from ChaCha8 (`rand_chacha` 0.9) seeded with
//! `seed_from_u64(seed)`. Sweeps give grid cell `k` the seed `base + k`, so
//! any cell can be regenerated on its own from the seed in the manifest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::red_mass;
use crate::error::{check_probability, Error, Result};
use crate::graph::{Color, ColoredGraph};
use crate::pagerank::{original_pagerank, PowerConfig};

pub const DEFAULT_SEED_NODES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n: usize,
    pub n0: usize,
    pub r: f64,
    pub alpha_r: f64,
    pub alpha_b: f64,
    pub edges_per_node: usize,
    pub seed: u64,
}

impl SynthConfig {
    /// Same-color acceptance `alpha` for both groups, ten seed nodes and one
    /// link per arrival.
    pub fn symmetric(n: usize, r: f64, alpha: f64, seed: u64) -> Self {
        Self::asymmetric(n, r, alpha, alpha, seed)
    }

    pub fn asymmetric(n: usize, r: f64, alpha_r: f64, alpha_b: f64, seed: u64) -> Self {
        Self {
            n,
            n0: DEFAULT_SEED_NODES.min(n.saturating_sub(1)).max(2),
            r,
            alpha_r,
            alpha_b,
            edges_per_node: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("r", self.r)?;
        check_probability("alpha_R", self.alpha_r)?;
        check_probability("alpha_B", self.alpha_b)?;
        if self.n0 < 2 {
            return Err(Error::InvalidParameter(format!("seed graph needs at least 2 nodes, got {}", self.n0)));
        }
        if self.n <= self.n0 {
            return Err(Error::InvalidParameter(format!(
                "n = {} must exceed the seed graph size {}",
                self.n, self.n0
            )));
        }
        if self.edges_per_node == 0 || self.edges_per_node > self.n0 {
            return Err(Error::InvalidParameter(format!(
                "edges per node must be in [1, {}], got {}",
                self.n0, self.edges_per_node
            )));
        }
        Ok(())
    }

    fn alpha(&self, c: Color) -> f64 {
        match c {
            Color::Red => self.alpha_r,
            Color::Blue => self.alpha_b,
        }
    }
}

/// Ring colors with `⌈n0·r⌉` reds spread evenly, kept in `[1, n0−1]` so both
/// groups exist from the start.
fn seed_colors(n0: usize, r: f64) -> Vec<Color> {
    let k = ((n0 as f64 * r).ceil() as usize).clamp(1, n0 - 1);
    (0..n0)
        .map(|i| {
            if (i + 1) * k / n0 > i * k / n0 {
                Color::Red
            } else {
                Color::Blue
            }
        })
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<ColoredGraph> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut colors = seed_colors(cfg.n0, cfg.r);
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); cfg.n];
    // every undirected link contributes both endpoints, so a uniform draw
    // from this list is a degree-proportional draw
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * cfg.n * cfg.edges_per_node + 2 * cfg.n0);

    let link = |u: usize, v: usize, adjacency: &mut Vec<Vec<usize>>, endpoints: &mut Vec<usize>| {
        adjacency[u].push(v);
        adjacency[v].push(u);
        endpoints.push(u);
        endpoints.push(v);
    };

    if cfg.n0 == 2 {
        link(0, 1, &mut adjacency, &mut endpoints);
    } else {
        for i in 0..cfg.n0 {
            link(i, (i + 1) % cfg.n0, &mut adjacency, &mut endpoints);
        }
    }

    for v in cfg.n0..cfg.n {
        let color = if rng.random_bool(cfg.r) { Color::Red } else { Color::Blue };
        let alpha = cfg.alpha(color);
        colors.push(color);
        let existing = endpoints.len();
        let mut made = 0;
        while made < cfg.edges_per_node {
            let u = endpoints[rng.random_range(0..existing)];
            if adjacency[v].contains(&u) {
                continue;
            }
            let accept = if colors[u] == color { alpha } else { 1.0 - alpha };
            if rng.random_bool(accept) {
                link(u, v, &mut adjacency, &mut endpoints);
                made += 1;
            }
        }
    }

    let edges: Vec<(usize, usize)> = adjacency
        .iter()
        .enumerate()
        .flat_map(|(u, nbrs)| nbrs.iter().map(move |&v| (u, v)))
        .collect();
    ColoredGraph::new(colors, &edges)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestRow {
    pub seed: u64,
    pub r: f64,
    pub alpha_r: f64,
    pub alpha_b: f64,
    pub n: usize,
    pub red_pagerank: f64,
}

impl ManifestRow {
    pub fn for_graph(cfg: &SynthConfig, g: &ColoredGraph, pr: &PowerConfig) -> Result<Self> {
        let p = original_pagerank(g, pr)?;
        Ok(Self {
            seed: cfg.seed,
            r: cfg.r,
            alpha_r: cfg.alpha_r,
            alpha_b: cfg.alpha_b,
            n: g.node_count(),
            red_pagerank: red_mass(&p, g),
        })
    }
}

/// One grid cell: `(r, α_R, α_B)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub r: f64,
    pub alpha_r: f64,
    pub alpha_b: f64,
}

/// Generates `seeds` graphs per grid point and records the original red
/// PageRank of each. Cell `k` (grid-major, seed-minor) uses seed
/// `template.seed + k`.
pub fn sweep(
    template: &SynthConfig,
    grid: &[GridPoint],
    seeds: usize,
    pr: &PowerConfig,
) -> Result<Vec<ManifestRow>> {
    if grid.is_empty() || seeds == 0 {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    crate::par::try_map(grid.len() * seeds, |k| {
        let point = grid[k / seeds];
        let cfg = SynthConfig {
            r: point.r,
            alpha_r: point.alpha_r,
            alpha_b: point.alpha_b,
            seed: template.seed.wrapping_add(k as u64),
            ..template.clone()
        };
        let g = generate(&cfg)?;
        ManifestRow::for_graph(&cfg, &g, pr)
    })
}
