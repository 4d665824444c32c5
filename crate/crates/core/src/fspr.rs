//! Fairness-sensitive PageRank: keep the transition matrix, choose the jump
//! vector.
//!
//! PageRank is linear in the jump vector, `pᵀ = xᵀQ`, so the red mass is the
//! linear functional `xᵀQ_R`. The fair jump vector with the least utility
//! loss solves
//!
//! ```text
//! minimize ‖xᵀQ − p_O‖²   subject to   xᵀa = c,  Σx = 1,  x ≥ 0
//! ```
//!
//! with `a = Q_R, c = φ` for plain fairness and `a = Q_{S_R} − φ Q_S, c = 0`
//! for targeted fairness. The solver is accelerated projected gradient
//! with backtracking. `Q` is never formed: `xᵀQ` is a PageRank run with jump
//! vector `x` and `Q y` is the backward fixed point, so a gradient costs two
//! fixed-point solves.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::graph::ColoredGraph;
use crate::pagerank::{self, dot, solve_left, solve_right, PowerConfig, ScoreVector, TransitionModel};
use crate::simplex::project_simplex_hyperplane;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    /// φ lies below every achievable value (no entry ≤ φ).
    InfeasibleLow,
    /// φ lies above every achievable value (no entry ≥ φ).
    InfeasibleHigh,
}

/// Some jump vector reaches red mass `φ` iff `min Q_R ≤ φ ≤ max Q_R`.
pub fn feasibility_check(q_r: &[f64], phi: f64) -> Feasibility {
    sign_feasibility(q_r, phi)
}

fn sign_feasibility(a: &[f64], c: f64) -> Feasibility {
    if !a.iter().any(|v| *v <= c) {
        Feasibility::InfeasibleLow
    } else if !a.iter().any(|v| *v >= c) {
        Feasibility::InfeasibleHigh
    } else {
        Feasibility::Feasible
    }
}

/// The jump vector supported on `argmin a` and `argmax a` that satisfies
/// `xᵀa = c`. Any feasible problem admits it.
pub fn two_point_jump(a: &[f64], c: f64) -> Option<Vec<f64>> {
    let (imin, imax) = (0..a.len()).fold((0, 0), |(lo, hi), i| {
        (if a[i] < a[lo] { i } else { lo }, if a[i] > a[hi] { i } else { hi })
    });
    if c < a[imin] || c > a[imax] {
        return None;
    }
    let mut x = vec![0.0; a.len()];
    if a[imax] == a[imin] {
        x[imin] = 1.0;
    } else {
        let w = (c - a[imin]) / (a[imax] - a[imin]);
        x[imax] += w;
        x[imin] += 1.0 - w;
    }
    Some(x)
}

#[derive(Clone, Debug)]
pub struct FsprProblem<'a> {
    model: &'a TransitionModel,
    cfg: PowerConfig,
    p_o: Vec<f64>,
    constraint: Vec<f64>,
    rhs: f64,
    phi: f64,
    /// Indicators of `S` and `S_R` for targeted problems.
    target_sets: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a> FsprProblem<'a> {
    /// Plain φ-fairness for the walk `model` on `g`. `p_O` is PageRank of
    /// `model` with the uniform jump.
    pub fn new(g: &ColoredGraph, model: &'a TransitionModel, phi: f64, cfg: PowerConfig) -> Result<Self> {
        check_probability("phi", phi)?;
        let q_r = pagerank::red_absorption_vector(model, g, &cfg)?;
        let p_o = pagerank::power_iterate(model, &ScoreVector::uniform(g.node_count()), &cfg)?.into_inner();
        Ok(Self {
            model,
            cfg,
            p_o,
            constraint: q_r,
            rhs: phi,
            phi,
            target_sets: None,
        })
    }

    /// Targeted fairness on `target` with protected part `protected`:
    /// `xᵀQ_{S_R} = φ xᵀQ_S`.
    pub fn targeted(
        g: &ColoredGraph,
        model: &'a TransitionModel,
        target: &[usize],
        protected: &[usize],
        phi: f64,
        cfg: PowerConfig,
    ) -> Result<Self> {
        check_probability("phi", phi)?;
        let n = g.node_count();
        let (s, s_r) = crate::lfpr::target_indicators(n, target, protected)?;
        let q_s = pagerank::set_absorption_vector(model, &s, &cfg)?;
        let q_sr = pagerank::set_absorption_vector(model, &s_r, &cfg)?;
        let p_o = pagerank::power_iterate(model, &ScoreVector::uniform(n), &cfg)?.into_inner();
        let constraint = q_sr.iter().zip(&q_s).map(|(r, s)| r - phi * s).collect();
        Ok(Self {
            model,
            cfg,
            p_o,
            constraint,
            rhs: 0.0,
            phi,
            target_sets: Some((s, s_r)),
        })
    }

    /// Problem with an explicit reference vector, constraint and right-hand side.
    pub fn from_parts(
        model: &'a TransitionModel,
        p_o: Vec<f64>,
        constraint: Vec<f64>,
        rhs: f64,
        phi: f64,
        cfg: PowerConfig,
    ) -> Self {
        Self {
            model,
            cfg,
            p_o,
            constraint,
            rhs,
            phi,
            target_sets: None,
        }
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn p_o(&self) -> &[f64] {
        &self.p_o
    }

    /// `Q_R` for plain problems, `Q_{S_R} − φ Q_S` for targeted ones.
    pub fn constraint(&self) -> &[f64] {
        &self.constraint
    }

    pub fn rhs(&self) -> f64 {
        self.rhs
    }

    pub fn is_targeted(&self) -> bool {
        self.target_sets.is_some()
    }

    pub fn feasibility(&self) -> Feasibility {
        sign_feasibility(&self.constraint, self.rhs)
    }

    pub fn power_config(&self) -> &PowerConfig {
        &self.cfg
    }

    /// `‖xᵀQ − p_O‖²` and the scores `xᵀQ`.
    pub fn loss(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (p, _) = solve_left(self.model, x, &self.p_o, &self.cfg)?;
        Ok((sq_dist(&p, &self.p_o), p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FsprOptions {
    /// Stop once the projected-gradient norm drops to this value.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FsprOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 5000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FsprSolution {
    pub jump: ScoreVector,
    pub scores: ScoreVector,
    /// `xᵀQ_R` for plain problems; `xᵀQ_{S_R} / xᵀQ_S` for targeted ones.
    pub achieved_fairness: f64,
    /// `|xᵀa − c|`.
    pub fairness_residual: f64,
    pub loss: f64,
    /// Projected-gradient norm at the returned point.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Products with `Q` needed by the solver.
trait JumpOperator {
    /// `xᵀQ`, optionally warm-started.
    fn scores(&mut self, x: &[f64], warm: &[f64]) -> Result<Vec<f64>>;
    /// `Q y`.
    fn apply_q(&mut self, y: &[f64]) -> Result<Vec<f64>>;
}

struct MatrixFree<'a> {
    model: &'a TransitionModel,
    cfg: PowerConfig,
    last_grad: Vec<f64>,
}

impl JumpOperator for MatrixFree<'_> {
    fn scores(&mut self, x: &[f64], warm: &[f64]) -> Result<Vec<f64>> {
        Ok(solve_left(self.model, x, warm, &self.cfg)?.0)
    }

    fn apply_q(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        let init = if self.last_grad.len() == y.len() {
            std::mem::take(&mut self.last_grad)
        } else {
            y.to_vec()
        };
        let (q, _) = solve_right(self.model, y, &init, &self.cfg)?;
        self.last_grad = q.clone();
        Ok(q)
    }
}

struct Dense {
    q: DMatrix<f64>,
}

impl JumpOperator for Dense {
    fn scores(&mut self, x: &[f64], _warm: &[f64]) -> Result<Vec<f64>> {
        Ok((self.q.tr_mul(&DVector::from_column_slice(x))).as_slice().to_vec())
    }

    fn apply_q(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        Ok((&self.q * DVector::from_column_slice(y)).as_slice().to_vec())
    }
}

/// Solves the fairness-sensitive program matrix-free.
pub fn solve_fspr(prob: &FsprProblem<'_>, opts: &FsprOptions) -> Result<FsprSolution> {
    check_feasible(prob)?;
    let mut op = MatrixFree {
        model: prob.model,
        cfg: prob.cfg,
        last_grad: Vec::new(),
    };
    accelerated_projected_gradient(prob, &mut op, opts)
}

/// Same program for the targeted constraint. The problem must have been
/// built with [`FsprProblem::targeted`].
pub fn solve_targeted_fspr(prob: &FsprProblem<'_>, opts: &FsprOptions) -> Result<FsprSolution> {
    if !prob.is_targeted() {
        return Err(Error::InvalidParameter("problem has no target set".into()));
    }
    solve_fspr(prob, opts)
}

/// Dense path for small graphs: the same iteration with an explicit `Q`,
/// followed by an exact solve of the equality-constrained least-squares
/// problem on the active support.
pub fn solve_fspr_dense(prob: &FsprProblem<'_>, opts: &FsprOptions, cap: usize) -> Result<FsprSolution> {
    check_feasible(prob)?;
    let q = pagerank::dense_q(prob.model, prob.cfg.gamma, cap)?;
    let mut op = Dense { q };
    let sol = accelerated_projected_gradient(prob, &mut op, opts)?;
    Ok(polish_on_support(prob, &op.q, sol))
}

fn check_feasible(prob: &FsprProblem<'_>) -> Result<()> {
    match prob.feasibility() {
        Feasibility::Feasible => Ok(()),
        Feasibility::InfeasibleLow => Err(Error::Infeasible {
            phi: prob.phi,
            side: "every node's personalized red share exceeds phi",
        }),
        Feasibility::InfeasibleHigh => Err(Error::Infeasible {
            phi: prob.phi,
            side: "every node's personalized red share falls short of phi",
        }),
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn project(prob: &FsprProblem<'_>, z: &[f64]) -> Vec<f64> {
    project_simplex_hyperplane(z, &prob.constraint, prob.rhs).expect("feasibility checked")
}

fn accelerated_projected_gradient(
    prob: &FsprProblem<'_>,
    op: &mut dyn JumpOperator,
    opts: &FsprOptions,
) -> Result<FsprSolution> {
    let n = prob.p_o.len();
    let p_o = &prob.p_o;

    let mut x = project(prob, &vec![1.0 / n as f64; n]);
    let mut px = op.scores(&x, p_o)?;
    let mut fx = sq_dist(&px, p_o);
    let mut x_prev = x.clone();
    let mut px_prev = px.clone();
    let mut t = 1.0f64;
    let mut lip = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        // Scores are linear in the jump vector, so p(y) needs no solve.
        let y: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a + beta * (a - b)).collect();
        let py: Vec<f64> = px.iter().zip(&px_prev).map(|(a, b)| a + beta * (a - b)).collect();
        let fy = sq_dist(&py, p_o);
        let resid: Vec<f64> = py.iter().zip(p_o).map(|(a, b)| 2.0 * (a - b)).collect();
        let grad = op.apply_q(&resid)?;

        let (x_new, px_new, f_new, step_norm) = loop {
            let z: Vec<f64> = y.iter().zip(&grad).map(|(yi, gi)| yi - gi / lip).collect();
            let cand = project(prob, &z);
            let pc = op.scores(&cand, &py)?;
            let fc = sq_dist(&pc, p_o);
            let d: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
            let dd = dot(&d, &d);
            let model = fy + dot(&grad, &d) + 0.5 * lip * dd;
            if fc <= model + 1e-15 * fy.abs().max(1e-300) || lip > 1e12 {
                break (cand, pc, fc, lip * dd.sqrt());
            }
            lip *= 2.0;
        };

        if f_new > fx {
            // Momentum overshoot: restart from the current iterate.
            t = 1.0;
            x_prev = x.clone();
            px_prev = px.clone();
            if beta == 0.0 {
                // Even a plain projected step failed to descend; we are at
                // the optimum up to the accuracy of the inner solves.
                converged = step_norm <= opts.tol.max(1e-10);
                break;
            }
            continue;
        }

        x_prev = std::mem::replace(&mut x, x_new);
        px_prev = std::mem::replace(&mut px, px_new);
        fx = f_new;
        t = t_next;
        if step_norm <= opts.tol {
            converged = true;
            break;
        }
    }

    finish(prob, op, x, px, iterations, converged, lip)
}

fn finish(
    prob: &FsprProblem<'_>,
    op: &mut dyn JumpOperator,
    x: Vec<f64>,
    px: Vec<f64>,
    iterations: usize,
    converged: bool,
    lip: f64,
) -> Result<FsprSolution> {
    let resid: Vec<f64> = px.iter().zip(&prob.p_o).map(|(a, b)| 2.0 * (a - b)).collect();
    let grad = op.apply_q(&resid)?;
    let z: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - gi / lip).collect();
    let proj = project(prob, &z);
    let kkt = lip * proj.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    build_solution(prob, x, px, iterations, converged, kkt)
}

fn build_solution(
    prob: &FsprProblem<'_>,
    x: Vec<f64>,
    px: Vec<f64>,
    iterations: usize,
    converged: bool,
    kkt: f64,
) -> Result<FsprSolution> {
    let fairness_residual = (dot(&x, &prob.constraint) - prob.rhs).abs();
    let achieved_fairness = match &prob.target_sets {
        Some((s, s_r)) => dot(&px, s_r) / dot(&px, s),
        None => dot(&x, &prob.constraint),
    };
    let loss = sq_dist(&px, &prob.p_o);
    Ok(FsprSolution {
        jump: ScoreVector::from_raw(x),
        scores: ScoreVector::from_raw(px),
        achieved_fairness,
        fairness_residual,
        loss,
        kkt_residual: kkt,
        iterations,
        converged,
    })
}

/// Minimizes over the support of `sol.jump` with both equality constraints
/// by solving the KKT system directly. Keeps the polished point only when it
/// stays nonnegative and does not increase the loss.
fn polish_on_support(prob: &FsprProblem<'_>, q: &DMatrix<f64>, sol: FsprSolution) -> FsprSolution {
    let support: Vec<usize> = (0..sol.jump.len()).filter(|&i| sol.jump[i] > 1e-12).collect();
    let k = support.len();
    let dim = k + 2;
    let mut kkt = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let p_o = DVector::from_column_slice(&prob.p_o);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = 2.0 * q.row(i).dot(&q.row(j));
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
        kkt[(a, k + 1)] = prob.constraint[i];
        kkt[(k + 1, a)] = prob.constraint[i];
        rhs[a] = 2.0 * q.row(i).transpose().dot(&p_o);
    }
    rhs[k] = 1.0;
    rhs[k + 1] = prob.rhs;
    let Some(z) = kkt.clone().svd(true, true).solve(&rhs, 1e-14).ok() else {
        return sol;
    };
    let mut x = vec![0.0; sol.jump.len()];
    for (a, &i) in support.iter().enumerate() {
        if z[a] < 0.0 {
            return sol;
        }
        x[i] = z[a];
    }
    let px = q.tr_mul(&DVector::from_column_slice(&x));
    let loss = sq_dist(px.as_slice(), &prob.p_o);
    let residual = (dot(&x, &prob.constraint) - prob.rhs).abs();
    if loss > sol.loss || residual > 1e-10 {
        return sol;
    }
    let (px, kkt_residual) = (px.as_slice().to_vec(), sol.kkt_residual);
    build_solution(prob, x, px, sol.iterations, sol.converged, kkt_residual).unwrap_or(sol)
}

/// Fair PageRank for a given jump vector.
pub fn fair_pagerank_from_jump(m: &TransitionModel, x: &ScoreVector, cfg: &PowerConfig) -> Result<ScoreVector> {
    pagerank::power_iterate(m, x, cfg)
}
