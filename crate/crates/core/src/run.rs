//! One ranking run: pick an algorithm, compute scores, build the report.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::{red_mass, FairnessReport};
use crate::error::{Error, Result};
use crate::export::RunMetadata;
use crate::fspr::{solve_fspr, solve_targeted_fspr, FsprOptions, FsprProblem};
use crate::graph::ColoredGraph;
use crate::lfpr::{
    self, build_fair_jump, build_neighborhood_model, make_policy, optimize_residuals, residual_decompose,
    residual_model, targeted_jump, targeted_model, PolicyKind, SearchBudget,
};
use crate::pagerank::{original_pagerank, power_iterate, PowerConfig, ScoreVector, TransitionModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Algorithm {
    #[serde(rename = "opr")]
    Original,
    #[serde(rename = "fspr")]
    Fspr,
    #[serde(rename = "lfpr-n")]
    LfprNeighborhood,
    #[serde(rename = "lfpr-u")]
    LfprUniform,
    #[serde(rename = "lfpr-p")]
    LfprProportional,
    #[serde(rename = "lfpr-o")]
    LfprOptimized,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Original,
        Algorithm::Fspr,
        Algorithm::LfprNeighborhood,
        Algorithm::LfprUniform,
        Algorithm::LfprProportional,
        Algorithm::LfprOptimized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Original => "opr",
            Algorithm::Fspr => "fspr",
            Algorithm::LfprNeighborhood => "lfpr-n",
            Algorithm::LfprUniform => "lfpr-u",
            Algorithm::LfprProportional => "lfpr-p",
            Algorithm::LfprOptimized => "lfpr-o",
        }
    }

    pub fn policy_kind(self) -> Option<PolicyKind> {
        match self {
            Algorithm::LfprNeighborhood => Some(PolicyKind::Neighborhood),
            Algorithm::LfprUniform => Some(PolicyKind::Uniform),
            Algorithm::LfprProportional => Some(PolicyKind::Proportional),
            Algorithm::LfprOptimized => Some(PolicyKind::Optimized),
            _ => None,
        }
    }

    pub fn is_locally_fair(self) -> bool {
        self.policy_kind().is_some()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    pub nodes: Vec<usize>,
    pub protected: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub phi: f64,
    pub power: PowerConfig,
    pub fspr: FsprOptions,
    pub search: SearchBudget,
    pub target: Option<Target>,
}

impl RunOptions {
    pub fn new(phi: f64) -> Self {
        Self {
            phi,
            power: PowerConfig::default(),
            fspr: FsprOptions::default(),
            search: SearchBudget::default(),
            target: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub scores: ScoreVector,
    /// Jump vector found by the fairness-sensitive solver.
    pub jump: Option<ScoreVector>,
    /// Transition model of locally fair runs.
    pub model: Option<TransitionModel>,
    /// Residual policy of shared-vector locally fair runs.
    pub policy: Option<serde_json::Value>,
    pub report: FairnessReport,
    pub metadata: RunMetadata,
}

/// Runs `algo` on `g`. `p_o` may carry the original PageRank to avoid
/// recomputing it across runs on the same graph.
pub fn rank(g: &ColoredGraph, algo: Algorithm, opts: &RunOptions, p_o: Option<&ScoreVector>) -> Result<RunOutcome> {
    opts.power.validate()?;
    let owned;
    let p_o = match p_o {
        Some(p) => p,
        None => {
            owned = original_pagerank(g, &opts.power)?;
            &owned
        }
    };
    let phi = opts.phi;
    let mut jump = None;
    let mut model = None;
    let mut policy = None;
    let mut iterations = 0;
    let mut converged = true;

    let scores = match (&opts.target, algo) {
        (_, Algorithm::Original) => p_o.clone(),
        (None, Algorithm::Fspr) => {
            let base = TransitionModel::standard(g);
            let prob = FsprProblem::new(g, &base, phi, opts.power)?;
            let sol = solve_fspr(&prob, &opts.fspr)?;
            iterations = sol.iterations;
            converged = sol.converged;
            jump = Some(sol.jump);
            sol.scores
        }
        (Some(t), Algorithm::Fspr) => {
            let base = TransitionModel::standard(g);
            let prob = FsprProblem::targeted(g, &base, &t.nodes, &t.protected, phi, opts.power)?;
            let sol = solve_targeted_fspr(&prob, &opts.fspr)?;
            iterations = sol.iterations;
            converged = sol.converged;
            jump = Some(sol.jump);
            sol.scores
        }
        (None, Algorithm::LfprNeighborhood) => {
            let m = build_neighborhood_model(g, phi)?;
            let p = power_iterate(&m, &build_fair_jump(g, phi)?, &opts.power)?;
            model = Some(m);
            p
        }
        (None, Algorithm::LfprOptimized) => {
            let found = optimize_residuals(g, phi, &opts.power, p_o, &opts.search)?;
            iterations = found.iterations;
            let m = residual_model(g, &residual_decompose(g, phi)?, &found.policy);
            let p = power_iterate(&m, &build_fair_jump(g, phi)?, &opts.power)?;
            policy = Some(found.policy.to_json());
            model = Some(m);
            p
        }
        (None, _) => {
            let kind = algo.policy_kind().expect("locally fair algorithm");
            let pol = make_policy(kind, g, Some(p_o))?;
            let m = residual_model(g, &residual_decompose(g, phi)?, &pol);
            let p = power_iterate(&m, &build_fair_jump(g, phi)?, &opts.power)?;
            policy = Some(pol.to_json());
            model = Some(m);
            p
        }
        (Some(t), _) => {
            let kind = algo.policy_kind().expect("locally fair algorithm");
            let m = targeted_model(g, &t.nodes, &t.protected, phi, kind, Some(p_o))?;
            let p = power_iterate(&m, &targeted_jump(g.node_count(), &t.nodes, &t.protected, phi)?, &opts.power)?;
            model = Some(m);
            p
        }
    };

    let report = FairnessReport::new(&scores, p_o, g, phi, opts.power.gamma)?;
    let fairness_residual = match &opts.target {
        Some(t) if algo != Algorithm::Original => {
            let (s, s_r) = lfpr::target_indicators(g.node_count(), &t.nodes, &t.protected)?;
            let in_s: f64 = scores.iter().zip(&s).map(|(a, b)| a * b).sum();
            let in_sr: f64 = scores.iter().zip(&s_r).map(|(a, b)| a * b).sum();
            (in_sr - phi * in_s).abs()
        }
        _ => (red_mass(&scores, g) - phi).abs(),
    };
    let metadata = RunMetadata {
        phi,
        gamma: opts.power.gamma,
        loss: report.loss,
        fairness_residual,
        iterations,
        converged,
    };
    Ok(RunOutcome {
        algorithm: algo,
        scores,
        jump,
        model,
        policy,
        report,
        metadata,
    })
}
