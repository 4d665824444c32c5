//! Browser bindings. Each export takes plain numbers, generates a synthetic
//! graph and returns a JSON string for the page to draw.

use fairpr::analysis::{personalized_audit, red_mass, AuditSample};
use fairpr::lfpr::SearchBudget;
use fairpr::pagerank::original_pagerank;
use fairpr::run::{rank, Algorithm, RunOptions};
use fairpr::synth::{generate, SynthConfig};
use fairpr::{group_stats, ColoredGraph, Error, GroupStats, PowerConfig, ScoreVector, TransitionModel};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest graph the demo will build.
pub const MAX_NODES: usize = 3000;

/// The optimized policy gets a smaller budget so the page stays responsive.
fn demo_options(phi: f64) -> RunOptions {
    let mut opts = RunOptions::new(phi);
    opts.search = SearchBudget {
        iterations: 30,
        directions: 16,
        ..SearchBudget::default()
    };
    opts
}

struct Instance {
    graph: ColoredGraph,
    p_o: ScoreVector,
}

fn instance(n: usize, r: f64, alpha_r: f64, alpha_b: f64, seed: u64) -> Result<Instance, Error> {
    if n > MAX_NODES {
        return Err(Error::TooLarge { n, cap: MAX_NODES });
    }
    let graph = generate(&SynthConfig::asymmetric(n, r, alpha_r, alpha_b, seed))?;
    let p_o = original_pagerank(&graph, &PowerConfig::default())?;
    Ok(Instance { graph, p_o })
}

#[derive(Serialize)]
struct AlgorithmResult {
    algorithm: Algorithm,
    /// `None` when the algorithm cannot reach φ on this graph.
    red_mass: Option<f64>,
    loss: Option<f64>,
}

#[derive(Serialize)]
struct Comparison {
    stats: GroupStats,
    original_red_mass: f64,
    phi: f64,
    lower_bound_loss: f64,
    results: Vec<AlgorithmResult>,
}

fn run_all(inst: &Instance, phi: f64) -> Result<Vec<AlgorithmResult>, Error> {
    Algorithm::ALL
        .into_iter()
        .map(|algo| match rank(&inst.graph, algo, &demo_options(phi), Some(&inst.p_o)) {
            Ok(out) => Ok(AlgorithmResult {
                algorithm: algo,
                red_mass: Some(out.report.red_mass),
                loss: Some(out.report.loss),
            }),
            Err(Error::Infeasible { .. }) => Ok(AlgorithmResult {
                algorithm: algo,
                red_mass: None,
                loss: None,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Red mass and utility loss of every algorithm at one φ.
pub fn compare_json(n: usize, r: f64, alpha_r: f64, alpha_b: f64, seed: u64, phi: f64) -> Result<String, Error> {
    let inst = instance(n, r, alpha_r, alpha_b, seed)?;
    let lb = fairpr::analysis::lower_bound_vector(&inst.p_o, &inst.graph, phi)?;
    let cmp = Comparison {
        stats: group_stats(&inst.graph),
        original_red_mass: red_mass(&inst.p_o, &inst.graph),
        phi,
        lower_bound_loss: fairpr::analysis::utility_loss(&lb, &inst.p_o)?,
        results: run_all(&inst, phi)?,
    };
    Ok(serde_json::to_string(&cmp)?)
}

#[derive(Serialize)]
struct CurvePoint {
    phi: f64,
    lower_bound_loss: f64,
    results: Vec<AlgorithmResult>,
}

#[derive(Serialize)]
struct LossCurve {
    original_red_mass: f64,
    points: Vec<CurvePoint>,
}

/// Utility loss of every algorithm over `steps` evenly spaced φ in (0, 1).
pub fn loss_curve_json(n: usize, r: f64, alpha_r: f64, alpha_b: f64, seed: u64, steps: usize) -> Result<String, Error> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    let inst = instance(n, r, alpha_r, alpha_b, seed)?;
    let points = (1..=steps)
        .map(|k| {
            let phi = k as f64 / (steps + 1) as f64;
            let lb = fairpr::analysis::lower_bound_vector(&inst.p_o, &inst.graph, phi)?;
            Ok(CurvePoint {
                phi,
                lower_bound_loss: fairpr::analysis::utility_loss(&lb, &inst.p_o)?,
                results: run_all(&inst, phi)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(serde_json::to_string(&LossCurve {
        original_red_mass: red_mass(&inst.p_o, &inst.graph),
        points,
    })?)
}

#[derive(Serialize)]
struct Histogram {
    algorithm: Algorithm,
    target: f64,
    bin_edges: Vec<f64>,
    red: Vec<usize>,
    blue: Vec<usize>,
    red_mean: Option<f64>,
    blue_mean: Option<f64>,
    all_fair: bool,
}

/// Histogram of personalized red mass (restart removed) for red and blue
/// nodes under the walk of `algo`.
pub fn audit_json(
    n: usize,
    r: f64,
    alpha_r: f64,
    alpha_b: f64,
    seed: u64,
    algo: &str,
    phi: f64,
) -> Result<String, Error> {
    let algo: Algorithm = algo.parse()?;
    let inst = instance(n, r, alpha_r, alpha_b, seed)?;
    let model = match algo {
        Algorithm::Original | Algorithm::Fspr => TransitionModel::standard(&inst.graph),
        _ => rank(&inst.graph, algo, &demo_options(phi), Some(&inst.p_o))?
            .model
            .expect("locally fair runs carry their walk"),
    };
    let sample = AuditSample::Count { count: 500, seed };
    let audit = personalized_audit(&model, &inst.graph, &PowerConfig::default(), phi, &sample)?;
    Ok(serde_json::to_string(&Histogram {
        algorithm: algo,
        target: audit.target,
        bin_edges: audit.bin_edges.clone(),
        red: audit.red_histogram.clone(),
        blue: audit.blue_histogram.clone(),
        red_mean: audit.red.as_ref().map(|s| s.mean),
        blue_mean: audit.blue.as_ref().map(|s| s.mean),
        all_fair: audit.all_fair(),
    })?)
}

#[wasm_bindgen]
pub fn compare(n: usize, r: f64, alpha_r: f64, alpha_b: f64, seed: u32, phi: f64) -> Result<String, String> {
    compare_json(n, r, alpha_r, alpha_b, seed.into(), phi).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn loss_curve(n: usize, r: f64, alpha_r: f64, alpha_b: f64, seed: u32, steps: usize) -> Result<String, String> {
    loss_curve_json(n, r, alpha_r, alpha_b, seed.into(), steps).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn audit(n: usize, r: f64, alpha_r: f64, alpha_b: f64, seed: u32, algo: &str, phi: f64) -> Result<String, String> {
    audit_json(n, r, alpha_r, alpha_b, seed.into(), algo, phi).map_err(|e| e.to_string())
}
