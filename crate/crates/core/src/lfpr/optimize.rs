//! Loss-optimized residual policy by stochastic random search.
//!
//! The search runs over the shared residual vectors `(x, y)`. The
//! objective is the utility loss of the resulting locally fair PageRank
//! plus the penalty `λ((Σx − 1)² + (Σy − 1)²)`. Each iteration draws `K`
//! random unit directions, keeps the one with the steepest descent and runs
//! a golden-section line search along it, bracketed so that no coordinate
//! turns negative.
//!
//! Directions are drawn with zero sum inside each block, so iterates stay on
//! the distribution constraints and the penalty only absorbs rounding. The
//! slope along a direction is exact: with `M = P_L + δ_R xᵀ + δ_B yᵀ` and
//! `Q̃ = γ[I − (1−γ)M]⁻¹`,
//!
//! ```text
//! ∂L/∂x = 2 (1−γ)/γ · (pᵀδ_R) · Q̃ (p − p_O)
//! ```
//!
//! and symmetrically for `y`, so ranking the `K` candidates costs one
//! backward solve per iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_probability, Result};
use crate::graph::ColoredGraph;
use crate::pagerank::{dot, solve_left, solve_right, PowerConfig, TransitionModel};

use super::{build_fair_jump, make_policy, residual_decompose, residual_model, PolicyKind, ResidualPolicy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBudget {
    /// `I`: outer iterations.
    pub iterations: usize,
    /// `K`: random directions per iteration.
    pub directions: usize,
    /// `λ`: weight of the distribution penalty.
    pub lambda: f64,
    pub seed: u64,
    /// Stop once one iteration improves the objective by less than this
    /// relative amount.
    pub rel_tol: f64,
    /// Objective evaluations per line search.
    pub line_search_evals: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            iterations: 200,
            directions: 64,
            lambda: 10.0,
            seed: 0,
            rel_tol: 1e-9,
            line_search_evals: 24,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizedPolicy {
    pub policy: ResidualPolicy,
    /// Utility loss of the returned (projected) policy.
    pub loss: f64,
    /// Loss of the better of the uniform and proportional policies, where
    /// the search started.
    pub start_loss: f64,
    pub start_kind: PolicyKind,
    /// Final `(Σx − 1)² + (Σy − 1)²` before projection.
    pub penalty_residual: f64,
    pub iterations: usize,
}

struct Objective<'a> {
    model: TransitionModel,
    jump: Vec<f64>,
    p_o: &'a [f64],
    cfg: PowerConfig,
    lambda: f64,
}

impl Objective<'_> {
    fn set(&mut self, x: &[f64], y: &[f64]) {
        self.model.term_target_mut(0).copy_from_slice(x);
        self.model.term_target_mut(1).copy_from_slice(y);
    }

    /// Objective value and PageRank for `(x, y)`.
    fn eval(&mut self, x: &[f64], y: &[f64], warm: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.set(x, y);
        let (p, _) = solve_left(&self.model, &self.jump, warm, &self.cfg)?;
        let loss: f64 = p.iter().zip(self.p_o).map(|(a, b)| (a - b).powi(2)).sum();
        let pen = penalty(x, y);
        Ok((loss + self.lambda * pen, p))
    }
}

fn penalty(x: &[f64], y: &[f64]) -> f64 {
    (x.iter().sum::<f64>() - 1.0).powi(2) + (y.iter().sum::<f64>() - 1.0).powi(2)
}

/// Searches for the residual vectors with the least utility loss.
///
/// `p_o` is the original PageRank. The search starts from whichever of the
/// uniform and proportional policies has the smaller loss and only accepts
/// improving steps, so the result never does worse than either.
pub fn optimize_residuals(
    g: &ColoredGraph,
    phi: f64,
    cfg: &PowerConfig,
    p_o: &[f64],
    budget: &SearchBudget,
) -> Result<OptimizedPolicy> {
    check_probability("phi", phi)?;
    let dec = residual_decompose(g, phi)?;
    let uniform = make_policy(PolicyKind::Uniform, g, None)?;
    let proportional = make_policy(PolicyKind::Proportional, g, Some(p_o))?;

    let mut obj = Objective {
        model: residual_model(g, &dec, &uniform),
        jump: build_fair_jump(g, phi)?.into_inner(),
        p_o,
        cfg: *cfg,
        lambda: budget.lambda,
    };

    let (ux, uy) = uniform.shared_vectors().unwrap();
    let (px_, py_) = proportional.shared_vectors().unwrap();
    let (f_u, p_u) = obj.eval(ux, uy, p_o)?;
    let (f_p, p_p) = obj.eval(px_, py_, p_o)?;
    let (start_kind, mut x, mut y, mut f, mut p) = if f_p < f_u {
        (PolicyKind::Proportional, px_.to_vec(), py_.to_vec(), f_p, p_p)
    } else {
        (PolicyKind::Uniform, ux.to_vec(), uy.to_vec(), f_u, p_u)
    };
    let start_loss = f;

    let red: Vec<usize> = g.red_nodes().collect();
    let blue: Vec<usize> = g.blue_nodes().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let scale = 2.0 * (1.0 - cfg.gamma) / cfg.gamma;
    let mut grad_warm: Vec<f64> = vec![0.0; p.len()];
    let mut iterations = 0;

    for _ in 0..budget.iterations {
        iterations += 1;
        obj.set(&x, &y);
        let resid: Vec<f64> = p.iter().zip(p_o).map(|(a, b)| a - b).collect();
        let (w, _) = solve_right(&obj.model, &resid, &grad_warm, cfg)?;
        let gx = scale * dot(&p, &dec.delta_red);
        let gy = scale * dot(&p, &dec.delta_blue);
        let pen_x = 2.0 * budget.lambda * (x.iter().sum::<f64>() - 1.0);
        let pen_y = 2.0 * budget.lambda * (y.iter().sum::<f64>() - 1.0);

        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..budget.directions {
            let d = sample_direction(&mut rng, &red, &blue, p.len());
            let slope: f64 = red.iter().map(|&i| d[i] * (gx * w[i] + pen_x)).sum::<f64>()
                + blue.iter().map(|&i| d[i] * (gy * w[i] + pen_y)).sum::<f64>();
            let (slope, d) = if slope > 0.0 {
                (-slope, d.into_iter().map(|v| -v).collect())
            } else {
                (slope, d)
            };
            if best.as_ref().map_or(true, |(s, _)| slope < *s) {
                best = Some((slope, d));
            }
        }
        grad_warm = w;
        let Some((slope, dir)) = best else { break };
        if !(slope < 0.0) {
            break;
        }

        let t_max = dir
            .iter()
            .zip(x.iter().zip(&y))
            .enumerate()
            .filter(|(_, (d, _))| **d < 0.0)
            .map(|(i, (d, (xi, yi)))| if g.is_red(i) { -xi / d } else { -yi / d })
            .fold(f64::INFINITY, f64::min);
        if !(t_max > 0.0) || !t_max.is_finite() {
            continue;
        }

        let step = |t: f64| -> (Vec<f64>, Vec<f64>) {
            let mut nx = x.clone();
            let mut ny = y.clone();
            for &i in &red {
                nx[i] = (x[i] + t * dir[i]).max(0.0);
            }
            for &i in &blue {
                ny[i] = (y[i] + t * dir[i]).max(0.0);
            }
            (nx, ny)
        };

        let (t_best, f_best, p_best) = golden_section(t_max, budget.line_search_evals, |t| {
            let (nx, ny) = step(t);
            obj.eval(&nx, &ny, &p)
        })?;
        if f_best < f {
            let improvement = (f - f_best) / f.max(f64::MIN_POSITIVE);
            let (nx, ny) = step(t_best);
            x = nx;
            y = ny;
            f = f_best;
            p = p_best;
            if improvement < budget.rel_tol {
                break;
            }
        } else if f == 0.0 {
            break;
        }
    }

    let penalty_residual = penalty(&x, &y);
    let project = |v: &mut Vec<f64>| {
        let total: f64 = v.iter().map(|w| w.max(0.0)).sum();
        v.iter_mut().for_each(|w| *w = w.max(0.0) / total);
    };
    project(&mut x);
    project(&mut y);
    let (loss, _) = obj.eval(&x, &y, &p)?;
    let loss = loss - budget.lambda * penalty(&x, &y);
    let policy = ResidualPolicy::shared(g, PolicyKind::Optimized, x, y)?;
    Ok(OptimizedPolicy {
        policy,
        loss,
        start_loss,
        start_kind,
        penalty_residual,
        iterations,
    })
}

/// A unit direction over node coordinates with zero sum on each group.
fn sample_direction(rng: &mut ChaCha8Rng, red: &[usize], blue: &[usize], n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n];
    for group in [red, blue] {
        if group.len() < 2 {
            continue;
        }
        let mut mean = 0.0;
        for &i in group {
            d[i] = rng.sample(StandardNormal);
            mean += d[i];
        }
        mean /= group.len() as f64;
        for &i in group {
            d[i] -= mean;
        }
    }
    let norm = dot(&d, &d).sqrt();
    if norm > 0.0 {
        d.iter_mut().for_each(|v| *v /= norm);
    }
    d
}

/// Minimizes `f` over `[0, hi]` by golden-section search, also trying the
/// endpoint `hi`. Returns the best point seen.
fn golden_section(
    hi: f64,
    evals: usize,
    mut f: impl FnMut(f64) -> Result<(f64, Vec<f64>)>,
) -> Result<(f64, f64, Vec<f64>)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = {
        let (v, p) = f(hi)?;
        (hi, v, p)
    };
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, pc) = f(c)?;
    let (mut fd, pd) = f(d)?;
    for (t, v, p) in [(c, fc, pc), (d, fd, pd)] {
        if v < best.1 {
            best = (t, v, p);
        }
    }
    for _ in 0..evals.saturating_sub(3) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            let (v, p) = f(c)?;
            fc = v;
            if v < best.1 {
                best = (c, v, p);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            let (v, p) = f(d)?;
            fd = v;
            if v < best.1 {
                best = (d, v, p);
            }
        }
    }
    Ok(best)
}
