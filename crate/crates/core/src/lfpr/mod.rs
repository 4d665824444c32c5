//! Locally fair PageRank.
//!
//! Every transition row, and the jump vector, sends exactly `φ` of its mass
//! to red nodes. Two constructions are provided:
//!
//! * the neighborhood walk `P_N = φ P_R + (1 − φ) P_B`, where `P_R`
//!   (`P_B`) moves uniformly to a red (blue) out-neighbor, or uniformly to
//!   any red (blue) node when there is none;
//! * residual walks, where a node treats its out-neighbors alike and routes
//!   a residual `δ(i)` to the group its neighborhood under-represents. How
//!   the residual spreads over that group is the [`ResidualPolicy`].
//!
//! With a per-source policy that routes residuals to the node's own
//! neighbors the residual walk coincides with `P_N`.

mod optimize;
mod targeted;

pub use optimize::{optimize_residuals, OptimizedPolicy, SearchBudget};
pub use targeted::{target_indicators, targeted_jump, targeted_lfpr, targeted_model};

use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::graph::ColoredGraph;
use crate::pagerank::{power_iterate, PowerConfig, RankOne, ScoreVector, TransitionModel};

/// Membership of a node in the residual classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LocalClass {
    /// `out_R(i)/out(i) < φ`: owes residual to red nodes (`L_R`).
    RedDeficit,
    /// `out_R(i)/out(i) ≥ φ`: owes residual to blue nodes (`L_B`).
    BlueDeficit,
    /// No out-edges: belongs to both classes and routes all of its mass.
    Sink,
}

/// Split of every row into the uniform neighbor share and the residual.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualDecomposition {
    pub phi: f64,
    pub class: Vec<LocalClass>,
    /// `δ_R(i)`: mass node `i` routes to red nodes outside its neighbor
    /// shares. `φ` for sinks, zero for blue-deficit nodes.
    pub delta_red: Vec<f64>,
    /// `δ_B(i)`, symmetrically.
    pub delta_blue: Vec<f64>,
    /// `ρ(i)`: what each out-neighbor of `i` receives. Zero for sinks.
    pub share: Vec<f64>,
}

impl ResidualDecomposition {
    pub fn in_red_deficit(&self, i: usize) -> bool {
        matches!(self.class[i], LocalClass::RedDeficit | LocalClass::Sink)
    }

    pub fn in_blue_deficit(&self, i: usize) -> bool {
        matches!(self.class[i], LocalClass::BlueDeficit | LocalClass::Sink)
    }

    /// Sparse `P_L` rows.
    pub fn neighbor_rows(&self, g: &ColoredGraph) -> Vec<Vec<(usize, f64)>> {
        (0..g.node_count())
            .map(|i| g.out_neighbors(i).iter().map(|&j| (j, self.share[i])).collect())
            .collect()
    }
}

pub fn residual_decompose(g: &ColoredGraph, phi: f64) -> Result<ResidualDecomposition> {
    check_probability("phi", phi)?;
    let n = g.node_count();
    let mut dec = ResidualDecomposition {
        phi,
        class: Vec::with_capacity(n),
        delta_red: vec![0.0; n],
        delta_blue: vec![0.0; n],
        share: vec![0.0; n],
    };
    for i in 0..n {
        let out = g.out_degree(i);
        let (out_r, out_b) = (g.out_red(i) as f64, g.out_blue(i) as f64);
        if out == 0 {
            dec.class.push(LocalClass::Sink);
            dec.delta_red[i] = phi;
            dec.delta_blue[i] = 1.0 - phi;
        } else if out_r / (out as f64) < phi {
            // out_B > 0 here since out_R/out < φ < 1.
            dec.class.push(LocalClass::RedDeficit);
            dec.delta_red[i] = phi - (1.0 - phi) * out_r / out_b;
            dec.share[i] = (1.0 - phi) / out_b;
        } else {
            // out_R > 0 here since out_R/out ≥ φ > 0.
            dec.class.push(LocalClass::BlueDeficit);
            dec.delta_blue[i] = (1.0 - phi) - phi * out_b / out_r;
            dec.share[i] = phi / out_r;
        }
    }
    Ok(dec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Neighborhood,
    Uniform,
    Proportional,
    Optimized,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Neighborhood => "neighborhood",
            PolicyKind::Uniform => "uniform",
            PolicyKind::Proportional => "proportional",
            PolicyKind::Optimized => "optimized",
        }
    }
}

/// How residual mass is spread over the receiving group.
#[derive(Clone, Debug, PartialEq)]
pub enum ResidualPolicy {
    /// Per-source matrices `X_N`, `Y_N`: a node's red residual goes
    /// uniformly to its red out-neighbors, or to all red nodes when it has
    /// none (blue symmetrically).
    Neighborhood,
    /// Every node routes red residual by `x` (a distribution over red nodes)
    /// and blue residual by `y` (over blue nodes). Vectors are indexed by
    /// node and zero off their group.
    Shared {
        kind: PolicyKind,
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

impl ResidualPolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            ResidualPolicy::Neighborhood => PolicyKind::Neighborhood,
            ResidualPolicy::Shared { kind, .. } => *kind,
        }
    }

    /// Shared-vector policy from explicit `x`, `y`.
    pub fn shared(g: &ColoredGraph, kind: PolicyKind, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_group_distribution(g, &x, true)?;
        check_group_distribution(g, &y, false)?;
        Ok(ResidualPolicy::Shared { kind, x, y })
    }

    pub fn shared_vectors(&self) -> Option<(&[f64], &[f64])> {
        match self {
            ResidualPolicy::Neighborhood => None,
            ResidualPolicy::Shared { x, y, .. } => Some((x, y)),
        }
    }

    /// `{kind, x: {node: weight}, y: {node: weight}}` with zero entries omitted.
    pub fn to_json(&self) -> serde_json::Value {
        let sparse = |v: &[f64]| {
            let map: serde_json::Map<String, serde_json::Value> = v
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i.to_string(), serde_json::json!(w)))
                .collect();
            serde_json::Value::Object(map)
        };
        match self {
            ResidualPolicy::Neighborhood => serde_json::json!({ "kind": "neighborhood" }),
            ResidualPolicy::Shared { kind, x, y } => serde_json::json!({
                "kind": kind.name(),
                "x": sparse(x),
                "y": sparse(y),
            }),
        }
    }
}

fn check_group_distribution(g: &ColoredGraph, v: &[f64], red: bool) -> Result<()> {
    let n = g.node_count();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let name = if red { "x" } else { "y" };
    for (i, &w) in v.iter().enumerate() {
        if !(w >= 0.0) {
            return Err(Error::InvalidParameter(format!("{name}[{i}] is negative")));
        }
        if w > 0.0 && g.is_red(i) != red {
            return Err(Error::InvalidParameter(format!(
                "{name} puts weight on node {i} of the other group"
            )));
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("{name} sums to {sum}")));
    }
    Ok(())
}

fn uniform_over(g: &ColoredGraph, red: bool) -> Vec<f64> {
    let count = if red { g.red_count() } else { g.blue_count() } as f64;
    (0..g.node_count())
        .map(|i| if g.is_red(i) == red { 1.0 / count } else { 0.0 })
        .collect()
}

/// Builds the policy of the given kind. `Proportional` needs the original
/// PageRank `p_o`; `Optimized` comes from [`optimize_residuals`] instead.
pub fn make_policy(kind: PolicyKind, g: &ColoredGraph, p_o: Option<&[f64]>) -> Result<ResidualPolicy> {
    match kind {
        PolicyKind::Neighborhood => Ok(ResidualPolicy::Neighborhood),
        PolicyKind::Uniform => Ok(ResidualPolicy::Shared {
            kind,
            x: uniform_over(g, true),
            y: uniform_over(g, false),
        }),
        PolicyKind::Proportional => {
            let p_o = p_o.ok_or_else(|| {
                Error::InvalidParameter("proportional policy needs the original PageRank".into())
            })?;
            if p_o.len() != g.node_count() {
                return Err(Error::DimensionMismatch {
                    expected: g.node_count(),
                    got: p_o.len(),
                });
            }
            let restrict = |red: bool| -> Result<Vec<f64>> {
                let total: f64 = (0..p_o.len()).filter(|&i| g.is_red(i) == red).map(|i| p_o[i]).sum();
                if !(total > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "original PageRank gives the {} group no mass",
                        if red { "red" } else { "blue" }
                    )));
                }
                Ok((0..p_o.len())
                    .map(|i| if g.is_red(i) == red { p_o[i] / total } else { 0.0 })
                    .collect())
            };
            Ok(ResidualPolicy::Shared {
                kind,
                x: restrict(true)?,
                y: restrict(false)?,
            })
        }
        PolicyKind::Optimized => Err(Error::InvalidParameter(
            "optimized policies are produced by optimize_residuals".into(),
        )),
    }
}

/// `v_N`: `φ/|R|` on red nodes, `(1−φ)/|B|` on blue nodes.
pub fn build_fair_jump(g: &ColoredGraph, phi: f64) -> Result<ScoreVector> {
    check_probability("phi", phi)?;
    let (red, blue) = (phi / g.red_count() as f64, (1.0 - phi) / g.blue_count() as f64);
    Ok(ScoreVector::from_raw(
        (0..g.node_count()).map(|i| if g.is_red(i) { red } else { blue }).collect(),
    ))
}

/// `P_N = φ P_R + (1 − φ) P_B`.
pub fn build_neighborhood_model(g: &ColoredGraph, phi: f64) -> Result<TransitionModel> {
    check_probability("phi", phi)?;
    let n = g.node_count();
    let mut red_fallback = vec![0.0; n];
    let mut blue_fallback = vec![0.0; n];
    let rows = (0..n)
        .map(|i| {
            let (out_r, out_b) = (g.out_red(i), g.out_blue(i));
            if out_r == 0 {
                red_fallback[i] = phi;
            }
            if out_b == 0 {
                blue_fallback[i] = 1.0 - phi;
            }
            g.out_neighbors(i)
                .iter()
                .map(|&j| {
                    let w = if g.is_red(j) {
                        phi / out_r as f64
                    } else {
                        (1.0 - phi) / out_b as f64
                    };
                    (j, w)
                })
                .collect()
        })
        .collect();
    Ok(TransitionModel::from_parts_unchecked(
        rows,
        fallback_terms(g, red_fallback, blue_fallback),
    ))
}

fn fallback_terms(g: &ColoredGraph, red: Vec<f64>, blue: Vec<f64>) -> Vec<RankOne> {
    let mut terms = Vec::new();
    if red.iter().any(|v| *v > 0.0) {
        terms.push(RankOne {
            source: red,
            target: uniform_over(g, true),
        });
    }
    if blue.iter().any(|v| *v > 0.0) {
        terms.push(RankOne {
            source: blue,
            target: uniform_over(g, false),
        });
    }
    terms
}

/// The composite walk `P_L + X + Y` for a residual policy.
pub fn residual_model(g: &ColoredGraph, dec: &ResidualDecomposition, policy: &ResidualPolicy) -> TransitionModel {
    match policy {
        ResidualPolicy::Shared { x, y, .. } => TransitionModel::from_parts_unchecked(
            dec.neighbor_rows(g),
            vec![
                RankOne {
                    source: dec.delta_red.clone(),
                    target: x.clone(),
                },
                RankOne {
                    source: dec.delta_blue.clone(),
                    target: y.clone(),
                },
            ],
        ),
        ResidualPolicy::Neighborhood => {
            let n = g.node_count();
            let mut red_fallback = vec![0.0; n];
            let mut blue_fallback = vec![0.0; n];
            let rows = (0..n)
                .map(|i| {
                    let (out_r, out_b) = (g.out_red(i), g.out_blue(i));
                    let to_red = if out_r > 0 { dec.delta_red[i] / out_r as f64 } else { 0.0 };
                    let to_blue = if out_b > 0 { dec.delta_blue[i] / out_b as f64 } else { 0.0 };
                    if out_r == 0 {
                        red_fallback[i] = dec.delta_red[i];
                    }
                    if out_b == 0 {
                        blue_fallback[i] = dec.delta_blue[i];
                    }
                    g.out_neighbors(i)
                        .iter()
                        .map(|&j| {
                            let extra = if g.is_red(j) { to_red } else { to_blue };
                            (j, dec.share[i] + extra)
                        })
                        .collect()
                })
                .collect();
            TransitionModel::from_parts_unchecked(rows, fallback_terms(g, red_fallback, blue_fallback))
        }
    }
}

/// Locally fair PageRank: the fixed point of the residual walk with jump
/// vector `v_N`.
pub fn lfpr_pagerank(g: &ColoredGraph, phi: f64, policy: &ResidualPolicy, cfg: &PowerConfig) -> Result<ScoreVector> {
    let dec = residual_decompose(g, phi)?;
    let model = residual_model(g, &dec, policy);
    power_iterate(&model, &build_fair_jump(g, phi)?, cfg)
}

/// Largest deviation of a row's red mass from `φ`.
pub fn max_row_unfairness(m: &TransitionModel, g: &ColoredGraph, phi: f64) -> f64 {
    m.row_masses(&g.red_indicator())
        .iter()
        .fold(0.0, |acc, r| acc.max((r - phi).abs()))
}
