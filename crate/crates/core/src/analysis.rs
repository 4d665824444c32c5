//! Fairness metrics, utility loss and the personalized-fairness audit.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::graph::{Color, ColoredGraph};
use crate::pagerank::{personalized_pagerank, PowerConfig, ScoreVector, TransitionModel};

/// Absolute tolerance on probability mass for fairness verdicts.
pub const FAIRNESS_TOL: f64 = 1e-7;
/// Tolerance on per-row red mass in [`converse_check`].
pub const ROW_FAIRNESS_TOL: f64 = 1e-9;
pub const HISTOGRAM_BINS: usize = 20;
/// Above this many nodes the audit samples instead of visiting every node.
pub const FULL_AUDIT_LIMIT: usize = 5000;
pub const DEFAULT_AUDIT_SAMPLE: usize = 1000;

pub fn red_mass(p: &[f64], g: &ColoredGraph) -> f64 {
    p.iter().enumerate().filter(|(i, _)| g.is_red(*i)).map(|(_, v)| v).sum()
}

/// `‖f − p_O‖²`.
pub fn utility_loss(f: &[f64], p_o: &[f64]) -> Result<f64> {
    if f.len() != p_o.len() {
        return Err(Error::DimensionMismatch {
            expected: p_o.len(),
            got: f.len(),
        });
    }
    Ok(f.iter().zip(p_o).map(|(a, b)| (a - b).powi(2)).sum())
}

/// The φ-fair probability vector closest to `p_o`.
///
/// The deficit `Δ` is added uniformly to the group that needs mass. The
/// donor group gives it up uniformly over its nonzero entries; whenever the
/// per-node amount would exceed the smallest nonzero donor entry `β`, every
/// nonzero donor gives `β` and the remainder is redistributed the same way.
pub fn lower_bound_vector(p_o: &[f64], g: &ColoredGraph, phi: f64) -> Result<ScoreVector> {
    check_probability("phi", phi)?;
    if p_o.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: p_o.len(),
        });
    }
    let mut w = p_o.to_vec();
    let current = red_mass(p_o, g);
    let delta = phi - current;
    if delta == 0.0 {
        return Ok(ScoreVector::from_raw(w));
    }
    let (recipient, donor) = if delta > 0.0 {
        (Color::Red, Color::Blue)
    } else {
        (Color::Blue, Color::Red)
    };
    let delta = delta.abs();

    let recipients: Vec<usize> = (0..w.len()).filter(|&i| g.color(i) == recipient).collect();
    let gain = delta / recipients.len() as f64;
    for &i in &recipients {
        w[i] += gain;
    }

    let mut remaining = delta;
    let mut donors: Vec<usize> = (0..w.len()).filter(|&i| g.color(i) == donor && w[i] > 0.0).collect();
    while remaining > 0.0 && !donors.is_empty() {
        let k = donors.len() as f64;
        let beta = donors.iter().map(|&i| w[i]).fold(f64::INFINITY, f64::min);
        if remaining / k < beta {
            let take = remaining / k;
            for &i in &donors {
                w[i] -= take;
            }
            break;
        }
        for &i in &donors {
            w[i] -= beta;
        }
        remaining -= beta * k;
        donors.retain(|&i| {
            if w[i] <= 0.0 {
                w[i] = 0.0;
                false
            } else {
                true
            }
        });
    }
    Ok(ScoreVector::from_raw(w))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FairnessReport {
    pub phi: f64,
    pub gamma: f64,
    pub red_mass: f64,
    pub loss: f64,
    pub lower_bound_loss: f64,
    pub fair: bool,
}

impl FairnessReport {
    pub fn new(f: &[f64], p_o: &[f64], g: &ColoredGraph, phi: f64, gamma: f64) -> Result<Self> {
        let red = red_mass(f, g);
        let lb = lower_bound_vector(p_o, g, phi)?;
        Ok(Self {
            phi,
            gamma,
            red_mass: red,
            loss: utility_loss(f, p_o)?,
            lower_bound_loss: utility_loss(&lb, p_o)?,
            fair: (red - phi).abs() <= FAIRNESS_TOL,
        })
    }
}

/// Which nodes an audit visits.
#[derive(Clone, Debug, PartialEq)]
pub enum AuditSample {
    /// Every node up to [`FULL_AUDIT_LIMIT`], otherwise a stratified sample
    /// of [`DEFAULT_AUDIT_SAMPLE`] nodes.
    Auto { seed: u64 },
    /// Up to `count` nodes, stratified by color; all nodes when `count ≥ n`.
    Count { count: usize, seed: u64 },
    Nodes(Vec<usize>),
}

impl AuditSample {
    pub fn resolve(&self, g: &ColoredGraph) -> Result<Vec<usize>> {
        let n = g.node_count();
        let (count, seed) = match self {
            AuditSample::Nodes(nodes) => {
                if nodes.is_empty() {
                    return Err(Error::InvalidParameter("audit sample is empty".into()));
                }
                if let Some(&bad) = nodes.iter().find(|&&i| i >= n) {
                    return Err(Error::InvalidParameter(format!("node {bad} out of range")));
                }
                return Ok(nodes.clone());
            }
            AuditSample::Auto { seed } => {
                if n <= FULL_AUDIT_LIMIT {
                    return Ok((0..n).collect());
                }
                (DEFAULT_AUDIT_SAMPLE, *seed)
            }
            AuditSample::Count { count, seed } => (*count, *seed),
        };
        if count == 0 {
            return Err(Error::InvalidParameter("audit sample is empty".into()));
        }
        if count >= n {
            return Ok((0..n).collect());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut red: Vec<usize> = g.red_nodes().collect();
        let mut blue: Vec<usize> = g.blue_nodes().collect();
        let red_take = ((count as f64 * red.len() as f64 / n as f64).round() as usize)
            .clamp(1, red.len())
            .min(count - 1);
        let blue_take = (count - red_take).min(blue.len());
        red.shuffle(&mut rng);
        blue.shuffle(&mut rng);
        let mut nodes: Vec<usize> = red[..red_take].iter().chain(&blue[..blue_take]).copied().collect();
        nodes.sort_unstable();
        Ok(nodes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub node: usize,
    pub color: Color,
    /// `PR_i(R) − γ·[i ∈ R]`.
    pub adjusted_red_mass: f64,
    pub fair: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupSummary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub fair_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PersonalizedAudit {
    pub phi: f64,
    pub gamma: f64,
    /// `φ(1−γ)`, the adjusted red mass of a personalized-fair node.
    pub target: f64,
    pub rows: Vec<AuditRow>,
    pub red: Option<GroupSummary>,
    pub blue: Option<GroupSummary>,
    /// Bin edges over `[0, 1−γ]`.
    pub bin_edges: Vec<f64>,
    pub red_histogram: Vec<usize>,
    pub blue_histogram: Vec<usize>,
}

impl PersonalizedAudit {
    pub fn all_fair(&self) -> bool {
        self.rows.iter().all(|r| r.fair)
    }

    /// `node,color,adjusted_red_mass,fair`, color written as 1 (red) / 0 (blue).
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("node,color,adjusted_red_mass,fair\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.node,
                r.color.code(),
                crate::export::fmt_f64(r.adjusted_red_mass),
                r.fair
            ));
        }
        out
    }

    /// `bin_lo,bin_hi,red_count,blue_count`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,red_count,blue_count\n");
        for k in 0..self.red_histogram.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::export::fmt_f64(self.bin_edges[k]),
                crate::export::fmt_f64(self.bin_edges[k + 1]),
                self.red_histogram[k],
                self.blue_histogram[k]
            ));
        }
        out
    }
}

/// Personalized PageRank of every sampled node with the restart mass
/// removed, compared against `φ(1−γ)`.
pub fn personalized_audit(
    m: &TransitionModel,
    g: &ColoredGraph,
    cfg: &PowerConfig,
    phi: f64,
    sample: &AuditSample,
) -> Result<PersonalizedAudit> {
    personalized_audit_with_bins(m, g, cfg, phi, sample, HISTOGRAM_BINS)
}

pub fn personalized_audit_with_bins(
    m: &TransitionModel,
    g: &ColoredGraph,
    cfg: &PowerConfig,
    phi: f64,
    sample: &AuditSample,
    bins: usize,
) -> Result<PersonalizedAudit> {
    check_probability("phi", phi)?;
    cfg.validate()?;
    if m.node_count() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: m.node_count(),
        });
    }
    let nodes = sample.resolve(g)?;
    let gamma = cfg.gamma;
    let target = phi * (1.0 - gamma);
    let values = crate::par::try_map(nodes.len(), |k| {
        let i = nodes[k];
        let p = personalized_pagerank(m, i, cfg)?;
        let restart = if g.is_red(i) { gamma } else { 0.0 };
        Ok(red_mass(&p, g) - restart)
    })?;
    let rows: Vec<AuditRow> = nodes
        .iter()
        .zip(values)
        .map(|(&i, a)| AuditRow {
            node: i,
            color: g.color(i),
            adjusted_red_mass: a,
            fair: (a - target).abs() <= FAIRNESS_TOL,
        })
        .collect();

    let width = (1.0 - gamma) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|k| k as f64 * width).collect();
    let mut red_histogram = vec![0; bins];
    let mut blue_histogram = vec![0; bins];
    for r in &rows {
        let k = ((r.adjusted_red_mass / width).floor().max(0.0) as usize).min(bins - 1);
        match r.color {
            Color::Red => red_histogram[k] += 1,
            Color::Blue => blue_histogram[k] += 1,
        }
    }

    let summarize = |color: Color| {
        let vals: Vec<&AuditRow> = rows.iter().filter(|r| r.color == color).collect();
        (!vals.is_empty()).then(|| GroupSummary {
            count: vals.len(),
            mean: vals.iter().map(|r| r.adjusted_red_mass).sum::<f64>() / vals.len() as f64,
            min: vals.iter().map(|r| r.adjusted_red_mass).fold(f64::INFINITY, f64::min),
            max: vals.iter().map(|r| r.adjusted_red_mass).fold(f64::NEG_INFINITY, f64::max),
            fair_count: vals.iter().filter(|r| r.fair).count(),
        })
    };

    Ok(PersonalizedAudit {
        phi,
        gamma,
        target,
        red: summarize(Color::Red),
        blue: summarize(Color::Blue),
        rows,
        bin_edges,
        red_histogram,
        blue_histogram,
    })
}

/// True iff every effective row of `m` sends `φ` of its mass to red nodes.
pub fn converse_check(m: &TransitionModel, g: &ColoredGraph, phi: f64) -> bool {
    m.row_masses(&g.red_indicator())
        .iter()
        .all(|r| (r - phi).abs() <= ROW_FAIRNESS_TOL)
}
