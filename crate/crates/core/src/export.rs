//! Plain-text output formats.

use serde::Serialize;

use crate::synth::ManifestRow;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `node,score`.
pub fn scores_csv(scores: &[f64]) -> String {
    let mut out = String::from("node,score\n");
    for (i, s) in scores.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", fmt_f64(*s)));
    }
    out
}

/// `node,jump_prob,score`.
pub fn solution_csv(jump: &[f64], scores: &[f64]) -> String {
    let mut out = String::from("node,jump_prob,score\n");
    for (i, (x, s)) in jump.iter().zip(scores).enumerate() {
        out.push_str(&format!("{i},{},{}\n", fmt_f64(*x), fmt_f64(*s)));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetadata {
    pub phi: f64,
    pub gamma: f64,
    pub loss: f64,
    pub fairness_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `seed,r,alpha_R,alpha_B,n,red_pagerank`.
pub fn manifest_csv(rows: &[ManifestRow]) -> String {
    let mut out = String::from("seed,r,alpha_R,alpha_B,n,red_pagerank\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.seed,
            r.r,
            r.alpha_r,
            r.alpha_b,
            r.n,
            fmt_f64(r.red_pagerank)
        ));
    }
    out
}
