//! Transition models and PageRank fixed points.
//!
//! A [`TransitionModel`] is a sparse row-substochastic base matrix plus a
//! list of rank-one terms `δ zᵀ`. Sink rows of the standard walk, the
//! uniform-over-group jumps of the neighborhood model and the residual
//! routing of the locally fair models are all rank-one terms, so no model
//! ever holds a dense row.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::graph::ColoredGraph;

/// Tolerance on row sums of an effective transition row.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Tolerance on the total mass of a [`ScoreVector`].
pub const SCORE_SUM_TOL: f64 = 1e-9;
/// Default node cap for dense `Q` computations.
pub const DENSE_CAP: usize = 2000;

/// A probability distribution over nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "score entries must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SCORE_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "score vector sums to {sum}, expected 1"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    /// Wraps values produced by a mass-preserving computation without
    /// re-checking them.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for ScoreVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A rank-one term `source · targetᵀ` of a transition model. Row `i`
/// receives `source[i]` mass spread over `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOne {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionModel {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    terms: Vec<RankOne>,
}

impl TransitionModel {
    /// Assembles a model from sparse base rows and rank-one terms, checking
    /// that every effective row is a probability distribution.
    pub fn from_parts(rows: Vec<Vec<(usize, f64)>>, terms: Vec<RankOne>) -> Result<Self> {
        let m = Self::from_parts_unchecked(rows, terms);
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn from_parts_unchecked(rows: Vec<Vec<(usize, f64)>>, terms: Vec<RankOne>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in rows {
            for (j, w) in row {
                cols.push(j);
                vals.push(w);
            }
            offsets.push(cols.len());
        }
        Self {
            offsets,
            cols,
            vals,
            terms,
        }
    }

    /// Dense row-major construction, mostly for tests and small hand-built models.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let sparse = rows
            .iter()
            .map(|row| {
                if row.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: row.len(),
                    });
                }
                Ok(row
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(j, &w)| (j, w))
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(sparse, Vec::new())
    }

    /// The normalized adjacency matrix with sink rows replaced by the
    /// uniform distribution over all nodes.
    pub fn standard(g: &ColoredGraph) -> Self {
        let n = g.node_count();
        let rows = (0..n)
            .map(|i| {
                let w = 1.0 / g.out_degree(i) as f64;
                g.out_neighbors(i).iter().map(|&j| (j, w)).collect()
            })
            .collect();
        let mut terms = Vec::new();
        if let Some(t) = sink_term(g) {
            terms.push(t);
        }
        Self::from_parts_unchecked(rows, terms)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn terms(&self) -> &[RankOne] {
        &self.terms
    }

    pub(crate) fn term_target_mut(&mut self, k: usize) -> &mut Vec<f64> {
        &mut self.terms[k].target
    }

    pub fn base_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[i]..self.offsets[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// Materializes one effective row.
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.node_count()];
        for (j, w) in self.base_row(i) {
            row[j] += w;
        }
        for t in &self.terms {
            let s = t.source[i];
            if s != 0.0 {
                for (r, z) in row.iter_mut().zip(&t.target) {
                    *r += s * z;
                }
            }
        }
        row
    }

    /// Mass that every effective row sends to the set marked by `indicator`
    /// (or any weight vector), i.e. the product `M · indicator`.
    pub fn row_masses(&self, indicator: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count()];
        self.right_mul(indicator, &mut out);
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        for t in &self.terms {
            for v in [&t.source, &t.target] {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v.len(),
                    });
                }
            }
            if t.source.iter().chain(&t.target).any(|x| *x < 0.0) {
                return Err(Error::InvalidParameter("negative rank-one entry".into()));
            }
        }
        if self.cols.iter().any(|&j| j >= n) {
            return Err(Error::InvalidParameter("column index out of range".into()));
        }
        if self.vals.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParameter("negative transition weight".into()));
        }
        let sums = self.row_masses(&vec![1.0; n]);
        if let Some((i, s)) = sums
            .iter()
            .enumerate()
            .find(|(_, s)| (**s - 1.0).abs() > ROW_SUM_TOL)
        {
            return Err(Error::InvalidParameter(format!(
                "row {i} sums to {s}, expected 1"
            )));
        }
        Ok(())
    }

    /// `out = pᵀ M`.
    pub fn left_mul(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for k in self.offsets[i]..self.offsets[i + 1] {
                out[self.cols[k]] += pi * self.vals[k];
            }
        }
        for t in &self.terms {
            let mass = dot(p, &t.source);
            if mass != 0.0 {
                for (o, z) in out.iter_mut().zip(&t.target) {
                    *o += mass * z;
                }
            }
        }
    }

    /// `out = M q`.
    pub fn right_mul(&self, q: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc += self.vals[k] * q[self.cols[k]];
            }
            *o = acc;
        }
        for t in &self.terms {
            let zq = dot(&t.target, q);
            if zq != 0.0 {
                for (o, s) in out.iter_mut().zip(&t.source) {
                    *o += s * zq;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.node_count();
        DMatrix::from_fn(n, n, |i, j| {
            let mut w: f64 = self.base_row(i).filter(|(c, _)| *c == j).map(|(_, w)| w).sum();
            for t in &self.terms {
                w += t.source[i] * t.target[j];
            }
            w
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sink_term(g: &ColoredGraph) -> Option<RankOne> {
    let n = g.node_count();
    let source: Vec<f64> = (0..n).map(|i| if g.is_sink(i) { 1.0 } else { 0.0 }).collect();
    source.iter().any(|s| *s > 0.0).then(|| RankOne {
        source,
        target: vec![1.0 / n as f64; n],
    })
}

/// Restart probability and stopping rule for the fixed-point iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerConfig {
    pub gamma: f64,
    /// L1 residual of the fixed-point equation (sup-norm for backward solves).
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.15,
            tol: 1e-12,
            max_iters: 10_000,
        }
    }
}

impl PowerConfig {
    pub fn with_gamma(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("gamma", self.gamma)?;
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Solves `pᵀ = (1−γ) pᵀ M + γ vᵀ` by iteration starting from `init`.
///
/// `jump` need not be a distribution: the map is affine in it, and the
/// optimizers rely on that. Returns the iterate and the iteration count.
pub fn solve_left(
    m: &TransitionModel,
    jump: &[f64],
    init: &[f64],
    cfg: &PowerConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = m.node_count();
    if jump.len() != n || init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: jump.len().min(init.len()),
        });
    }
    let damp = 1.0 - cfg.gamma;
    let mut p = init.to_vec();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        m.left_mul(&p, &mut next);
        residual = 0.0;
        for ((x, &old), &v) in next.iter_mut().zip(&p).zip(jump) {
            *x = damp * *x + cfg.gamma * v;
            residual += (*x - old).abs();
        }
        std::mem::swap(&mut p, &mut next);
        if residual <= cfg.tol {
            return Ok((p, it));
        }
    }
    Err(Error::NotConverged {
        iters: cfg.max_iters,
        residual,
    })
}

/// Solves `q = γ y + (1−γ) M q`, i.e. `q = Q y` with `Q = γ [I − (1−γ) M]⁻¹`.
pub fn solve_right(
    m: &TransitionModel,
    y: &[f64],
    init: &[f64],
    cfg: &PowerConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = m.node_count();
    if y.len() != n || init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len().min(init.len()),
        });
    }
    let damp = 1.0 - cfg.gamma;
    let mut q = init.to_vec();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        m.right_mul(&q, &mut next);
        residual = 0.0;
        for ((x, &old), &v) in next.iter_mut().zip(&q).zip(y) {
            *x = damp * *x + cfg.gamma * v;
            residual = residual.max((*x - old).abs());
        }
        std::mem::swap(&mut q, &mut next);
        if residual <= cfg.tol {
            return Ok((q, it));
        }
    }
    Err(Error::NotConverged {
        iters: cfg.max_iters,
        residual,
    })
}

/// PageRank with jump vector `v`.
pub fn power_iterate(m: &TransitionModel, v: &ScoreVector, cfg: &PowerConfig) -> Result<ScoreVector> {
    cfg.validate()?;
    let (p, _) = solve_left(m, v, v, cfg)?;
    Ok(ScoreVector::from_raw(p))
}

/// Original PageRank: standard transitions, uniform jump.
pub fn original_pagerank(g: &ColoredGraph, cfg: &PowerConfig) -> Result<ScoreVector> {
    power_iterate(
        &TransitionModel::standard(g),
        &ScoreVector::uniform(g.node_count()),
        cfg,
    )
}

pub fn personalized_pagerank(m: &TransitionModel, i: usize, cfg: &PowerConfig) -> Result<ScoreVector> {
    let n = m.node_count();
    if i >= n {
        return Err(Error::InvalidParameter(format!("node {i} out of range")));
    }
    power_iterate(m, &ScoreVector::unit(n, i), cfg)
}

/// Personalized PageRank of every node, row `i` being node `i`'s vector.
pub fn personalized_all(m: &TransitionModel, cfg: &PowerConfig, cap: usize) -> Result<Vec<ScoreVector>> {
    let n = m.node_count();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    crate::par::try_map(n, |i| personalized_pagerank(m, i, cfg))
}

/// `Q_R[j]`: the share of node `j`'s personalized PageRank that lands on red
/// nodes. Equivalently the probability that the walk from `j`, stopped at
/// its first restart, is absorbed at a red node. Computed as the backward
/// fixed point `q = γ·1_R + (1−γ) M q`.
pub fn red_absorption_vector(m: &TransitionModel, g: &ColoredGraph, cfg: &PowerConfig) -> Result<Vec<f64>> {
    set_absorption_vector(m, &g.red_indicator(), cfg)
}

/// Like [`red_absorption_vector`] for an arbitrary indicator (or weight)
/// vector over nodes.
pub fn set_absorption_vector(m: &TransitionModel, indicator: &[f64], cfg: &PowerConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let (q, _) = solve_right(m, indicator, indicator, cfg)?;
    Ok(q)
}

/// Dense `Q = γ [I − (1−γ) M]⁻¹`. Intended as a reference for small graphs.
pub fn dense_q(m: &TransitionModel, gamma: f64, cap: usize) -> Result<DMatrix<f64>> {
    check_probability("gamma", gamma)?;
    let n = m.node_count();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    let a = DMatrix::<f64>::identity(n, n) - m.to_dense() * (1.0 - gamma);
    let inv = a.try_inverse().ok_or(Error::Singular)?;
    Ok(inv * gamma)
}
