//! Euclidean projections onto the probability simplex and onto its
//! intersection with one hyperplane.

/// Projects `z` onto `{x ≥ 0, Σx = total}`.
pub fn project_simplex(z: &[f64], total: f64) -> Vec<f64> {
    let tau = simplex_threshold(z, total);
    z.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// The shift `τ` such that `Σ max(z − τ, 0) = total`.
fn simplex_threshold(z: &[f64], total: f64) -> f64 {
    let mut sorted = z.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = (sorted[0] - total) / 1.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - total) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    tau
}

/// Projects `z` onto `{x ≥ 0, Σx = 1, aᵀx = c}`.
///
/// The projection is `x(ν) = Π_simplex(z − ν a)` for the multiplier `ν`
/// that satisfies the hyperplane constraint. `aᵀx(ν)` is continuous and
/// nonincreasing in `ν`, so `ν` is found by bracketing and bisection, and
/// the last bracket is closed by a convex combination of its endpoints so
/// that the constraint holds to rounding. Returns `None` when
/// `c ∉ [min a, max a]`.
pub fn project_simplex_hyperplane(z: &[f64], a: &[f64], c: f64) -> Option<Vec<f64>> {
    let (amin, amax) = a
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if c < amin || c > amax {
        return None;
    }
    let at = |nu: f64| {
        let shifted: Vec<f64> = z.iter().zip(a).map(|(zi, ai)| zi - nu * ai).collect();
        let x = project_simplex(&shifted, 1.0);
        let h = dot(a, &x);
        (x, h)
    };

    let (x0, h0) = at(0.0);
    if h0 == c || amax == amin {
        return Some(x0);
    }

    // Bracket the root: h(lo) ≥ c ≥ h(hi).
    let scale = {
        let zr = z.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
        zr / (amax - amin)
    };
    let (mut lo, mut hi) = (0.0, 0.0);
    let (mut x_lo, mut h_lo, mut x_hi, mut h_hi);
    if h0 > c {
        x_lo = x0;
        h_lo = h0;
        let mut step = scale;
        loop {
            hi = lo + step;
            let (x, h) = at(hi);
            if h <= c {
                x_hi = x;
                h_hi = h;
                break;
            }
            lo = hi;
            x_lo = x;
            h_lo = h;
            step *= 2.0;
        }
    } else {
        x_hi = x0;
        h_hi = h0;
        let mut step = scale;
        loop {
            lo = hi - step;
            let (x, h) = at(lo);
            if h >= c {
                x_lo = x;
                h_lo = h;
                break;
            }
            hi = lo;
            x_hi = x;
            h_hi = h;
            step *= 2.0;
        }
    }

    for _ in 0..200 {
        if h_lo == c {
            return Some(x_lo);
        }
        if h_hi == c {
            return Some(x_hi);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (x, h) = at(mid);
        if h >= c {
            lo = mid;
            x_lo = x;
            h_lo = h;
        } else {
            hi = mid;
            x_hi = x;
            h_hi = h;
        }
    }

    let theta = (h_lo - c) / (h_lo - h_hi);
    Some(
        x_lo.iter()
            .zip(&x_hi)
            .map(|(l, h)| ((1.0 - theta) * l + theta * h).max(0.0))
            .collect(),
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
