//! Shared numeric primitives: quadrature nodes, 1-D minimization, simplex
//! minimization, envelopes, and interval statistics.

/// log2 that maps 0 to -inf instead of NaN-prone call sites.
pub fn log2p(x: f64) -> f64 {
    if x > 0.0 {
        x.log2()
    } else {
        f64::NEG_INFINITY
    }
}

/// x*log2(x) with the 0log0 = 0 convention.
pub fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Gauss-Legendre nodes and weights of the given order on [-1, 1].
/// Newton iteration on the Legendre recurrence; accurate to ~1e-15.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 2);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // P_n(x) and P_n'(x) via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        // The cos(pi*(i+3/4)/(n+1/2)) seed enumerates roots right to left;
        // store reversed so callers get ascending nodes.
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on [lo, hi] with panels of the given order.
/// Returns ascending nodes and matching weights.
pub fn composite_gauss_legendre(
    lo: f64,
    hi: f64,
    panels: usize,
    order: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (base_nodes, base_weights) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    let step = (hi - lo) / panels as f64;
    for p in 0..panels {
        let a = lo + p as f64 * step;
        let half = 0.5 * step;
        let mid = a + half;
        for i in 0..order {
            nodes.push(mid + half * base_nodes[i]);
            weights.push(half * base_weights[i]);
        }
    }
    (nodes, weights)
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Minimize a unimodal-after-bracketing function: evaluate on the grid, then
/// refine around the best grid point with golden section.
pub fn grid_then_golden(f: impl Fn(f64) -> f64, grid: &[f64], tol: f64) -> (f64, f64) {
    assert!(grid.len() >= 3);
    let mut best = 0;
    let mut best_v = f(grid[0]);
    for (i, &t) in grid.iter().enumerate().skip(1) {
        let v = f(t);
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if hi <= lo {
        return (grid[best], best_v);
    }
    let (x, v) = golden_min(&f, lo, hi, tol);
    if v < best_v {
        (x, v)
    } else {
        (grid[best], best_v)
    }
}

/// Minimize a smooth convex function over the probability simplex by
/// exponentiated gradient steps with Armijo backtracking. Terminates when the
/// linear-minimization gap over the simplex falls below `tol`.
pub fn minimize_on_simplex(
    dim: usize,
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64], &mut [f64]),
    init: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let mut p: Vec<f64> = match init {
        Some(q) => q.to_vec(),
        None => vec![1.0 / dim as f64; dim],
    };
    // Keep strictly interior so multiplicative updates stay well defined.
    let floor = 1e-300;
    for v in p.iter_mut() {
        *v = v.max(floor);
    }
    normalize(&mut p);
    let mut g = vec![0.0; dim];
    let mut fp = f(&p);
    for _ in 0..max_iter {
        grad(&p, &mut g);
        // Linear-minimization gap: <g, p> - min_j g_j.
        let gap = p.iter().zip(&g).map(|(pi, gi)| pi * gi).sum::<f64>()
            - g.iter().cloned().fold(f64::INFINITY, f64::min);
        if gap.abs() < tol {
            break;
        }
        let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = (gmax - gmin).max(1e-12);
        let mut eta = 1.0 / scale;
        let mut improved = false;
        for _ in 0..60 {
            let mut q: Vec<f64> = p
                .iter()
                .zip(&g)
                .map(|(pi, gi)| (pi.max(floor)).ln() - eta * gi)
                .collect();
            let m = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for v in q.iter_mut() {
                *v = (*v - m).exp().max(floor);
            }
            normalize(&mut q);
            let fq = f(&q);
            if fq <= fp - 1e-4 * eta * gap.max(0.0) * scale.min(1.0) || fq < fp {
                p = q;
                fp = fq;
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (p, fp)
}

pub fn normalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    assert!(s > 0.0, "cannot normalize a zero vector");
    for v in p.iter_mut() {
        *v /= s;
    }
}

/// Upper concave envelope of a sampled curve (xs ascending). Returns the
/// envelope evaluated on the same xs.
pub fn upper_concave_envelope(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n <= 2 {
        return ys.to_vec();
    }
    // Upper hull by monotone chain: keep right turns only.
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    // Interpolate the hull back onto the grid.
    let mut out = vec![0.0; n];
    let mut seg = 0;
    for i in 0..n {
        while seg + 1 < hull.len() && xs[hull[seg + 1]] < xs[i] {
            seg += 1;
        }
        let a = hull[seg];
        let b = hull[(seg + 1).min(hull.len() - 1)];
        if a == b || xs[b] <= xs[a] {
            out[i] = ys[a];
        } else {
            let t = (xs[i] - xs[a]) / (xs[b] - xs[a]);
            out[i] = ys[a] + t * (ys[b] - ys[a]);
        }
        out[i] = out[i].max(ys[i]);
    }
    out
}

/// Lower convex envelope of a sampled curve (xs ascending).
pub fn lower_convex_envelope(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = ys.iter().map(|v| -v).collect();
    upper_concave_envelope(xs, &neg)
        .into_iter()
        .map(|v| -v)
        .collect()
}

/// Exact two-sided Clopper-Pearson interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    use statrs::distribution::{Beta, ContinuousCDF};
    assert!(trials > 0 && successes <= trials);
    let alpha = 1.0 - confidence;
    let k = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Standard normal CDF (test oracle for Gaussian tail masses).
#[cfg(test)]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Second largest element (largest if fewer than two elements).
pub fn second_largest(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &v in values {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    if values.len() == 1 {
        first
    } else {
        second
    }
}

/// Advance a mixed-radix counter in place; false once it wraps to all zeros.
pub fn odometer_next(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Leave-one-out jackknife mean and 95% interval over batch statistics.
pub fn jackknife_ci(batches: &[f64]) -> (f64, f64, f64) {
    let n = batches.len();
    assert!(n >= 2);
    let total: f64 = batches.iter().sum();
    let mean = total / n as f64;
    let loo: Vec<f64> = batches
        .iter()
        .map(|b| (total - b) / (n as f64 - 1.0))
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo
        .iter()
        .map(|v| (v - loo_mean) * (v - loo_mean))
        .sum::<f64>()
        * (n as f64 - 1.0)
        / n as f64;
    let half = 1.959_963_984_540_054 * var.sqrt();
    (mean, mean - half, mean + half)
}
