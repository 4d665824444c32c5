//! Locally fair walks for targeted fairness on a node subset `S`.
//!
//! Only the mass a node sends into `S` is rebalanced: of that mass `m`, a
//! share `φ·m` goes to `S_R` and `(1−φ)·m` to `S_B`. Mass to nodes outside
//! `S` is left as in the standard walk. Sinks spread uniformly over `V∖S`
//! and send their in-`S` mass `|S|/n` through the same split. The jump
//! vector keeps `1/n` outside `S` and splits the aggregate `|S|/n` over `S`
//! at ratio `φ`.

use crate::error::{check_probability, Error, Result};
use crate::graph::ColoredGraph;
use crate::pagerank::{power_iterate, PowerConfig, RankOne, ScoreVector, TransitionModel};

use super::PolicyKind;

/// Validates `S` and `S_R` and returns their indicator vectors.
pub fn target_indicators(n: usize, target: &[usize], protected: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut s = vec![0.0; n];
    let mut s_r = vec![0.0; n];
    for &i in target {
        if i >= n {
            return Err(Error::InvalidParameter(format!("target node {i} out of range")));
        }
        s[i] = 1.0;
    }
    for &i in protected {
        if i >= n {
            return Err(Error::InvalidParameter(format!("protected node {i} out of range")));
        }
        if s[i] == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "protected node {i} is not in the target set"
            )));
        }
        s_r[i] = 1.0;
    }
    let size_s = s.iter().sum::<f64>();
    let size_r = s_r.iter().sum::<f64>();
    if size_r == 0.0 {
        return Err(Error::InvalidParameter("protected part of the target set is empty".into()));
    }
    if size_r == size_s {
        return Err(Error::InvalidParameter(
            "target set has no unprotected nodes".into(),
        ));
    }
    Ok((s, s_r))
}

/// Jump vector for targeted runs.
pub fn targeted_jump(n: usize, target: &[usize], protected: &[usize], phi: f64) -> Result<ScoreVector> {
    check_probability("phi", phi)?;
    let (s, s_r) = target_indicators(n, target, protected)?;
    let size_s: f64 = s.iter().sum();
    let size_r: f64 = s_r.iter().sum();
    let mass = size_s / n as f64;
    let v = (0..n)
        .map(|i| {
            if s_r[i] > 0.0 {
                mass * phi / size_r
            } else if s[i] > 0.0 {
                mass * (1.0 - phi) / (size_s - size_r)
            } else {
                1.0 / n as f64
            }
        })
        .collect();
    Ok(ScoreVector::from_raw(v))
}

/// Transition model whose every row sends a `φ` fraction of its in-`S`
/// mass to `S_R`.
///
/// `Neighborhood` splits the in-`S` mass over the node's own neighbors in
/// each part (uniform over the part when it has none). `Uniform` and
/// `Proportional` give every in-`S` neighbor the same share and route the
/// residual uniformly, or proportionally to `p_o`, over the deficient part.
pub fn targeted_model(
    g: &ColoredGraph,
    target: &[usize],
    protected: &[usize],
    phi: f64,
    kind: PolicyKind,
    p_o: Option<&[f64]>,
) -> Result<TransitionModel> {
    check_probability("phi", phi)?;
    let n = g.node_count();
    let (s, s_r) = target_indicators(n, target, protected)?;
    let in_s = |j: usize| s[j] > 0.0;
    let in_sr = |j: usize| s_r[j] > 0.0;
    let size_s: f64 = s.iter().sum();

    let (x, y) = match kind {
        PolicyKind::Neighborhood | PolicyKind::Uniform => (normalized(&s_r, None)?, normalized(&blue_part(&s, &s_r), None)?),
        PolicyKind::Proportional => {
            let p_o = p_o.ok_or_else(|| {
                Error::InvalidParameter("proportional policy needs the original PageRank".into())
            })?;
            (normalized(&s_r, Some(p_o))?, normalized(&blue_part(&s, &s_r), Some(p_o))?)
        }
        PolicyKind::Optimized => {
            return Err(Error::InvalidParameter(
                "targeted fairness supports the neighborhood, uniform and proportional policies".into(),
            ))
        }
    };

    let mut to_red = vec![0.0; n];
    let mut to_blue = vec![0.0; n];
    let mut sink_out = vec![0.0; n];
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let nbrs = g.out_neighbors(i);
        if nbrs.is_empty() {
            let m = size_s / n as f64;
            to_red[i] = phi * m;
            to_blue[i] = (1.0 - phi) * m;
            sink_out[i] = 1.0 - m;
            rows.push(Vec::new());
            continue;
        }
        let out = nbrs.len() as f64;
        let out_sr = nbrs.iter().filter(|&&j| in_sr(j)).count() as f64;
        let out_s = nbrs.iter().filter(|&&j| in_s(j)).count() as f64;
        let out_sb = out_s - out_sr;
        let m = out_s / out;
        let mut row = Vec::with_capacity(nbrs.len());
        match kind {
            PolicyKind::Neighborhood => {
                if out_sr == 0.0 {
                    to_red[i] = phi * m;
                }
                if out_sb == 0.0 {
                    to_blue[i] = (1.0 - phi) * m;
                }
                for &j in nbrs {
                    let w = if !in_s(j) {
                        1.0 / out
                    } else if in_sr(j) {
                        phi * m / out_sr
                    } else {
                        (1.0 - phi) * m / out_sb
                    };
                    row.push((j, w));
                }
            }
            _ => {
                let share = if out_s == 0.0 {
                    0.0
                } else if out_sr / out_s < phi {
                    let rho = (1.0 - phi) * m / out_sb;
                    to_red[i] = phi * m - rho * out_sr;
                    rho
                } else {
                    let rho = phi * m / out_sr;
                    to_blue[i] = (1.0 - phi) * m - rho * out_sb;
                    rho
                };
                for &j in nbrs {
                    row.push((j, if in_s(j) { share } else { 1.0 / out }));
                }
            }
        }
        rows.push(row);
    }

    let mut terms = vec![
        RankOne {
            source: to_red,
            target: x,
        },
        RankOne {
            source: to_blue,
            target: y,
        },
    ];
    if sink_out.iter().any(|v| *v > 0.0) {
        let outside = n as f64 - size_s;
        terms.push(RankOne {
            source: sink_out,
            target: s.iter().map(|v| if *v > 0.0 { 0.0 } else { 1.0 / outside }).collect(),
        });
    }
    Ok(TransitionModel::from_parts_unchecked(rows, terms))
}

fn blue_part(s: &[f64], s_r: &[f64]) -> Vec<f64> {
    s.iter().zip(s_r).map(|(a, b)| a - b).collect()
}

fn normalized(indicator: &[f64], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    let v: Vec<f64> = match weights {
        Some(w) => indicator.iter().zip(w).map(|(a, b)| a * b).collect(),
        None => indicator.to_vec(),
    };
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(
            "residual target part carries no original PageRank".into(),
        ));
    }
    Ok(v.into_iter().map(|w| w / total).collect())
}

/// PageRank satisfying `PR(S_R) = φ · PR(S)`.
pub fn targeted_lfpr(
    g: &ColoredGraph,
    target: &[usize],
    protected: &[usize],
    phi: f64,
    kind: PolicyKind,
    p_o: Option<&[f64]>,
    cfg: &PowerConfig,
) -> Result<ScoreVector> {
    let model = targeted_model(g, target, protected, phi, kind, p_o)?;
    let jump = targeted_jump(g.node_count(), target, protected, phi)?;
    power_iterate(&model, &jump, cfg)
}
