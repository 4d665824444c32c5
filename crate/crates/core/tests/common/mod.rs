#![allow(dead_code)]

use fairpr::{Color, ColoredGraph};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const GAMMA: f64 = 0.15;

/// Random directed graph with both colors present. `sink_rate` is the
/// chance that a node gets no out-edges.
pub fn random_graph(rng: &mut impl Rng, n: usize, avg_degree: f64, sink_rate: f64) -> ColoredGraph {
    assert!(n >= 2);
    let red_share = rng.random_range(0.2..0.8);
    let mut colors: Vec<Color> = (0..n)
        .map(|_| if rng.random_bool(red_share) { Color::Red } else { Color::Blue })
        .collect();
    colors[0] = Color::Red;
    colors[1] = Color::Blue;
    let p = (avg_degree / (n - 1) as f64).min(1.0);
    let mut edges = Vec::new();
    for u in 0..n {
        if rng.random_bool(sink_rate) {
            continue;
        }
        let before = edges.len();
        for v in 0..n {
            if u != v && rng.random_bool(p) {
                edges.push((u, v));
            }
        }
        if edges.len() == before {
            edges.push((u, (u + 1 + rng.random_range(0..n - 1)) % n));
        }
    }
    ColoredGraph::new(colors, &edges).unwrap()
}

/// Row-stochastic `P` built straight from the adjacency lists, with sinks
/// jumping uniformly.
pub fn dense_standard_p(g: &ColoredGraph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let nbrs = g.out_neighbors(i);
        if nbrs.is_empty() {
            for j in 0..n {
                p[(i, j)] = 1.0 / n as f64;
            }
        } else {
            for &j in nbrs {
                p[(i, j)] += 1.0 / nbrs.len() as f64;
            }
        }
    }
    p
}

/// `γ[I − (1−γ)P]⁻¹`.
pub fn dense_q_oracle(p: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let n = p.nrows();
    let a = DMatrix::identity(n, n) - p * (1.0 - gamma);
    a.lu().try_inverse().expect("I − (1−γ)P is invertible") * gamma
}

/// `vᵀQ`.
pub fn scores_from_q(q: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (q.transpose() * DVector::from_column_slice(v)).as_slice().to_vec()
}

pub fn indicator(g: &ColoredGraph) -> Vec<f64> {
    (0..g.node_count()).map(|i| if g.is_red(i) { 1.0 } else { 0.0 }).collect()
}

pub fn mass(p: &[f64], ind: &[f64]) -> f64 {
    p.iter().zip(ind).map(|(a, b)| a * b).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Euclidean projection of `z` onto `{w ≥ 0, Σw = total}` by bisection on
/// the threshold `τ` in `w = max(z − τ, 0)`.
pub fn threshold_projection(z: &[f64], total: f64) -> Vec<f64> {
    let mass_at = |tau: f64| z.iter().map(|v| (v - tau).max(0.0)).sum::<f64>();
    let mut lo = z.iter().cloned().fold(f64::INFINITY, f64::min) - total;
    let mut hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_at(mid) > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    z.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// `min ‖w − p‖²` over probability vectors with red mass `φ`. The problem
/// separates into one scaled-simplex projection per group.
pub fn lower_bound_oracle(p: &[f64], g: &ColoredGraph, phi: f64) -> f64 {
    let red: Vec<f64> = g.red_nodes().map(|i| p[i]).collect();
    let blue: Vec<f64> = g.blue_nodes().map(|i| p[i]).collect();
    sq_dist(&threshold_projection(&red, phi), &red) + sq_dist(&threshold_projection(&blue, 1.0 - phi), &blue)
}

/// Exhaustive search over jump vectors on the slice `{x ≥ 0, Σx = 1,
/// xᵀa = c}`: all coordinates except the ones where `a` is largest and
/// smallest run over a grid of step `h`; those two are solved from the
/// equalities. Returns the least loss found, or `None` when no grid point is
/// feasible.
pub fn grid_fspr_oracle(q: &DMatrix<f64>, p_o: &[f64], a: &[f64], c: f64, h: f64) -> Option<f64> {
    let n = a.len();
    let imax = (0..n).max_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap();
    let imin = (0..n).min_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap();
    if imax == imin || a[imax] - a[imin] < 1e-14 {
        return None;
    }
    let free: Vec<usize> = (0..n).filter(|&i| i != imax && i != imin).collect();
    let steps = (1.0 / h).round() as usize;
    let mut best: Option<f64> = None;
    let mut counts = vec![0usize; free.len()];
    let mut x = vec![0.0; n];
    let qt = q.transpose();
    loop {
        let used: usize = counts.iter().sum();
        if used <= steps {
            let rest = 1.0 - used as f64 * h;
            let mut rest_a = c;
            for (k, &i) in free.iter().enumerate() {
                x[i] = counts[k] as f64 * h;
                rest_a -= x[i] * a[i];
            }
            // x_max + x_min = rest, a_max x_max + a_min x_min = rest_a
            let xmax = (rest_a - a[imin] * rest) / (a[imax] - a[imin]);
            let xmin = rest - xmax;
            if xmax >= -1e-15 && xmin >= -1e-15 {
                x[imax] = xmax.max(0.0);
                x[imin] = xmin.max(0.0);
                let s = &qt * DVector::from_column_slice(&x);
                let loss = sq_dist(s.as_slice(), p_o);
                best = Some(best.map_or(loss, |b: f64| b.min(loss)));
            }
        }
        // odometer over the free coordinates
        let mut k = 0;
        loop {
            if k == counts.len() {
                return best;
            }
            counts[k] += 1;
            if counts.iter().sum::<usize>() <= steps {
                break;
            }
            counts[k] = 0;
            k += 1;
        }
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Least loss over the grid points of [`grid_fspr_oracle`] whose free
/// coordinates are a floor/ceil rounding of `x`. The oracle can be no
/// worse than this, so `loss(snap) − loss(x)` is the resolution the grid
/// affords around `x`.
pub fn grid_snap_loss(q: &DMatrix<f64>, p_o: &[f64], a: &[f64], c: f64, h: f64, x: &[f64]) -> Option<f64> {
    let n = a.len();
    let imax = (0..n).max_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap();
    let imin = (0..n).min_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap();
    let free: Vec<usize> = (0..n).filter(|&i| i != imax && i != imin).collect();
    let qt = q.transpose();
    let mut best: Option<f64> = None;
    for mask in 0..(1u32 << free.len()) {
        let mut y = vec![0.0; n];
        let (mut rest, mut rest_a) = (1.0, c);
        for (k, &i) in free.iter().enumerate() {
            let cells = x[i] / h;
            y[i] = if mask & (1 << k) == 0 { cells.floor() } else { cells.ceil() } * h;
            rest -= y[i];
            rest_a -= y[i] * a[i];
        }
        let ymax = (rest_a - a[imin] * rest) / (a[imax] - a[imin]);
        let ymin = rest - ymax;
        if ymax < -1e-15 || ymin < -1e-15 {
            continue;
        }
        y[imax] = ymax.max(0.0);
        y[imin] = ymin.max(0.0);
        let s = &qt * DVector::from_column_slice(&y);
        let loss = sq_dist(s.as_slice(), p_o);
        best = Some(best.map_or(loss, |b: f64| b.min(loss)));
    }
    best
}
