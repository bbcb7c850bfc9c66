//! Score families that certify pairwise input separation.
//!
//! A family assigns to every input x a function xi_x over outputs with
//! (CS1) zero mean under the own input, (CS2) expectation at most -zeta1 < 0
//! under every other input, and (CS3) variance at most zeta2 under every
//! input. Sums over coordinates then concentrate, which is what the decoder
//! threshold and the binding bounds consume.

use crate::channel::{Channel, Output};
use crate::numeric::{log2p, minimize_on_simplex};
use crate::{Error, Result};

/// Result of projecting the mixture hull of the other inputs onto one input.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Mixture over the full input alphabet; entry `x` itself is zero.
    pub mixture: Vec<f64>,
    /// Attained divergence; +inf when no mixture has compatible support.
    pub divergence: f64,
}

const PROJECTION_TOL: f64 = 1e-8;

/// min over mixtures P of the other inputs of D(W_P || W_x).
pub fn kl_project_onto_others(ch: &Channel, x: usize) -> Projection {
    let d = ch.n_inputs();
    assert!(d >= 2, "projection needs at least two inputs");
    let rows: Vec<Vec<f64>> = (0..d).map(|i| ch.node_pmf(i)).collect();
    let others: Vec<usize> = (0..d).filter(|&i| i != x).collect();
    // Components whose support escapes supp(W_x) force infinite divergence;
    // the optimum puts zero weight on them, so restrict up front.
    let feasible: Vec<usize> = others
        .iter()
        .copied()
        .filter(|&i| {
            rows[i]
                .iter()
                .zip(&rows[x])
                .all(|(&pi, &px)| pi == 0.0 || px > 0.0)
        })
        .collect();
    if feasible.is_empty() {
        let mut mixture = vec![0.0; d];
        for &i in &others {
            mixture[i] = 1.0 / others.len() as f64;
        }
        return Projection { mixture, divergence: f64::INFINITY };
    }
    let n = ch.n_nodes();
    let target = &rows[x];
    let comps: Vec<&Vec<f64>> = feasible.iter().map(|&i| &rows[i]).collect();
    let f = |p: &[f64]| -> f64 {
        let mut acc = 0.0;
        for j in 0..n {
            let mix: f64 = p.iter().zip(&comps).map(|(&pi, c)| pi * c[j]).sum();
            if mix > 0.0 {
                acc += mix * (mix / target[j]).log2();
            }
        }
        acc
    };
    let g = |p: &[f64], out: &mut [f64]| {
        let mix: Vec<f64> = (0..n)
            .map(|j| p.iter().zip(&comps).map(|(&pi, c)| pi * c[j]).sum())
            .collect();
        for (k, c) in comps.iter().enumerate() {
            out[k] = (0..n)
                .map(|j| {
                    if c[j] > 0.0 && mix[j] > 0.0 {
                        c[j] * ((mix[j] / target[j]).log2() + std::f64::consts::LOG2_E)
                    } else {
                        0.0
                    }
                })
                .sum();
        }
    };
    let (popt, div) = minimize_on_simplex(feasible.len(), &f, &g, None, PROJECTION_TOL, 20_000);
    let mut mixture = vec![0.0; d];
    for (k, &i) in feasible.iter().enumerate() {
        mixture[i] = popt[k];
    }
    Projection { mixture, divergence: div }
}

/// min over mixtures P of the other inputs of D(W_x || W_P).
pub fn min_kl_from_input(ch: &Channel, x: usize) -> f64 {
    let d = ch.n_inputs();
    let rows: Vec<Vec<f64>> = (0..d).map(|i| ch.node_pmf(i)).collect();
    let others: Vec<usize> = (0..d).filter(|&i| i != x).collect();
    let n = ch.n_nodes();
    // Infinite unless supp(W_x) is covered by the union of the others.
    for j in 0..n {
        if rows[x][j] > 0.0 && others.iter().all(|&i| rows[i][j] == 0.0) {
            return f64::INFINITY;
        }
    }
    let comps: Vec<&Vec<f64>> = others.iter().map(|&i| &rows[i]).collect();
    let target = &rows[x];
    let f = |p: &[f64]| -> f64 {
        let mut acc = 0.0;
        for j in 0..n {
            if target[j] > 0.0 {
                let mix: f64 = p.iter().zip(&comps).map(|(&pi, c)| pi * c[j]).sum();
                if mix <= 0.0 {
                    return f64::INFINITY;
                }
                acc += target[j] * (target[j] / mix).log2();
            }
        }
        acc
    };
    let g = |p: &[f64], out: &mut [f64]| {
        let mix: Vec<f64> = (0..n)
            .map(|j| p.iter().zip(&comps).map(|(&pi, c)| pi * c[j]).sum())
            .collect();
        for (k, c) in comps.iter().enumerate() {
            out[k] = -(0..n)
                .map(|j| {
                    if target[j] > 0.0 && mix[j] > 0.0 {
                        std::f64::consts::LOG2_E * target[j] * c[j] / mix[j]
                    } else {
                        0.0
                    }
                })
                .sum::<f64>();
        }
    };
    let (_, div) = minimize_on_simplex(others.len(), &f, &g, None, PROJECTION_TOL, 20_000);
    div
}

#[derive(Clone, Debug)]
enum ScoreFn {
    /// Per-input tables over output nodes. `grid_nodes` carries the cell
    /// representatives when the table was built on a quadrature channel, so
    /// sampled real outputs can be scored through the cell partition.
    Table { xi: Vec<Vec<f64>>, grid_nodes: Option<Vec<f64>> },
    /// xi_x(y) = log2 w_x(y) - offset for additive Gaussian channels.
    GaussianLog { means: Vec<f64>, variance: f64, offset: f64 },
}

/// A certified score family over a channel's input alphabet.
#[derive(Clone, Debug)]
pub struct ScoreFamily {
    f: ScoreFn,
    pub zeta1: f64,
    pub zeta2: f64,
    /// max_x |E_x[xi_x]| actually achieved.
    pub cs1_residual: f64,
    /// Smoothing weight used by the differing-support construction; 0 when
    /// supports already coincide.
    pub smoothing_delta: f64,
    pub projections: Vec<Projection>,
}

impl ScoreFamily {
    pub fn score(&self, x: usize, y: &Output) -> f64 {
        match &self.f {
            ScoreFn::Table { xi, grid_nodes } => match y {
                Output::Symbol(j) => xi[x][*j],
                Output::Real(v) => {
                    let nodes = grid_nodes
                        .as_ref()
                        .expect("real output scored against a finite-alphabet table");
                    let j = nearest_index(nodes, *v);
                    xi[x][j]
                }
            },
            ScoreFn::GaussianLog { means, variance, offset } => {
                let yval = match y {
                    Output::Real(v) => *v,
                    Output::Symbol(_) => panic!("Gaussian scores need real outputs"),
                };
                let z = yval - means[x];
                (-0.5 * z * z / variance - 0.5 * (2.0 * std::f64::consts::PI * variance).ln())
                    * std::f64::consts::LOG2_E
                    - offset
            }
        }
    }

    /// Coordinatewise sum xi_{x^n}(y^n).
    pub fn score_seq(&self, xs: &[usize], ys: &[Output]) -> f64 {
        assert_eq!(xs.len(), ys.len());
        xs.iter().zip(ys).map(|(&x, y)| self.score(x, y)).sum()
    }

    pub fn n_inputs(&self) -> usize {
        match &self.f {
            ScoreFn::Table { xi, .. } => xi.len(),
            ScoreFn::GaussianLog { means, .. } => means.len(),
        }
    }

    /// Table of scores per node, materialized for reporting.
    pub fn table_on_nodes(&self, ch: &Channel) -> Vec<Vec<f64>> {
        (0..self.n_inputs())
            .map(|x| {
                (0..ch.n_nodes())
                    .map(|j| {
                        if ch.is_finite_output() {
                            self.score(x, &Output::Symbol(j))
                        } else {
                            self.score(x, &Output::Real(ch.nodes()[j]))
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn nearest_index(nodes: &[f64], y: f64) -> usize {
    match nodes.binary_search_by(|n| n.partial_cmp(&y).unwrap()) {
        Ok(j) => j,
        Err(0) => 0,
        Err(k) if k >= nodes.len() => nodes.len() - 1,
        Err(k) => {
            if (y - nodes[k - 1]).abs() <= (nodes[k] - y).abs() {
                k - 1
            } else {
                k
            }
        }
    }
}

const SMOOTHING_GRID: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Build a certified score family on a channel with finitely many effective
/// outputs. Quadrature channels are reduced to their node-cell partition
/// first; scores of sampled real outputs go through the same partition.
pub fn build_scores_discrete(ch: &Channel) -> Result<ScoreFamily> {
    let d = ch.n_inputs();
    if d < 2 {
        return Err(Error::InvalidParameter("score family needs >= 2 inputs".into()));
    }
    let q: Vec<Vec<f64>> = (0..d).map(|x| ch.node_pmf(x)).collect();
    let supports: Vec<Vec<bool>> = q
        .iter()
        .map(|row| row.iter().map(|&v| v > 0.0).collect())
        .collect();
    let equal_supports = supports.iter().all(|s| s == &supports[0]);

    let (xi, projections, delta) = if equal_supports {
        build_equal_support(ch, &q)?
    } else {
        build_differing_support(ch, &q, &supports)?
    };

    // Re-center so the own-input mean is zero to machine precision; the
    // construction already subtracts the mean analytically.
    let mut xi = xi;
    for x in 0..d {
        let mean: f64 = q[x]
            .iter()
            .zip(&xi[x])
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &v)| p * v)
            .sum();
        for (j, v) in xi[x].iter_mut().enumerate() {
            if q[x][j] > 0.0 || v.is_finite() {
                *v -= mean;
            }
        }
    }

    let mut cs1 = 0.0f64;
    let mut zeta1 = f64::INFINITY;
    let mut zeta2 = 0.0f64;
    for x in 0..d {
        let mean_own: f64 = masked_mean(&q[x], &xi[x]);
        cs1 = cs1.max(mean_own.abs());
        for xp in 0..d {
            let mean = masked_mean(&q[xp], &xi[x]);
            let var = masked_mean(&q[xp], &xi[x].iter().map(|v| v * v).collect::<Vec<_>>())
                - mean * mean;
            zeta2 = zeta2.max(var);
            if xp != x {
                zeta1 = zeta1.min(-mean);
            }
        }
    }
    if !(zeta1 > 0.0) {
        return Err(Error::Infeasible(format!(
            "separation constant is {zeta1}; an input is indistinguishable from a mixture of the others"
        )));
    }
    if !zeta2.is_finite() {
        return Err(Error::Infeasible("score variance is unbounded".into()));
    }
    if cs1 > 1e-9 {
        return Err(Error::Infeasible(format!(
            "own-input score mean residual {cs1} exceeds 1e-9"
        )));
    }
    let grid_nodes = if ch.is_finite_output() {
        None
    } else {
        Some(ch.nodes().to_vec())
    };
    Ok(ScoreFamily {
        f: ScoreFn::Table { xi, grid_nodes },
        zeta1,
        zeta2,
        cs1_residual: cs1,
        smoothing_delta: delta,
        projections,
    })
}

fn masked_mean(p: &[f64], v: &[f64]) -> f64 {
    p.iter()
        .zip(v)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &vi)| pi * vi)
        .sum()
}

fn build_equal_support(
    ch: &Channel,
    q: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, Vec<Projection>, f64)> {
    let d = q.len();
    let n = q[0].len();
    let mut xi = vec![vec![0.0; n]; d];
    let mut projections = Vec::with_capacity(d);
    for x in 0..d {
        let proj = kl_project_onto_others(ch, x);
        if !proj.divergence.is_finite() {
            return Err(Error::Infeasible(
                "projection diverged despite equal supports".into(),
            ));
        }
        if proj.divergence <= 1e-9 {
            return Err(Error::Infeasible(format!(
                "input {x} lies in the mixture hull of the other inputs"
            )));
        }
        let mix: Vec<f64> = (0..n)
            .map(|j| {
                proj.mixture
                    .iter()
                    .enumerate()
                    .map(|(i, &pi)| pi * q[i][j])
                    .sum()
            })
            .collect();
        let d_own = crate::info::kl_divergence(&q[x], &mix);
        verify_projection_bound(q, x, &mix, &q[x]);
        for j in 0..n {
            xi[x][j] = if q[x][j] > 0.0 {
                log2p(q[x][j]) - log2p(mix[j]) - d_own
            } else {
                0.0
            };
        }
        projections.push(proj);
    }
    Ok((xi, projections, 0.0))
}

fn build_differing_support(
    ch: &Channel,
    q: &[Vec<f64>],
    supports: &[Vec<bool>],
) -> Result<(Vec<Vec<f64>>, Vec<Projection>, f64)> {
    let d = q.len();
    let n = q[0].len();
    // Pick the largest smoothing weight for which both positivity conditions
    // hold for every input.
    let min_kls: Vec<f64> = (0..d).map(|x| min_kl_from_input(ch, x)).collect();
    let mut chosen: Option<(f64, Vec<Vec<f64>>, Vec<Projection>)> = None;
    'delta: for &delta in &SMOOTHING_GRID {
        let mut smoothed = Vec::with_capacity(d);
        for x in 0..d {
            smoothed.push(smooth_row(&q[x], &supports[x], delta));
        }
        if (0..d).any(|x| (1.0 - delta).log2() + min_kls[x] <= 0.0) {
            continue 'delta;
        }
        let mut projections = Vec::with_capacity(d);
        for x in 0..d {
            let proj = project_onto_row(q, x, &smoothed[x]);
            let mix = mixture_row(q, &proj.mixture);
            let div = crate::info::kl_divergence(&mix, &smoothed[x]);
            if !(div > 1e-12) {
                continue 'delta;
            }
            projections.push(Projection { mixture: proj.mixture, divergence: div });
        }
        chosen = Some((delta, smoothed, projections));
        break;
    }
    let Some((delta, smoothed, projections)) = chosen else {
        return Err(Error::Infeasible(
            "no smoothing weight in the grid satisfies both positivity conditions".into(),
        ));
    };

    let mut xi = vec![vec![0.0; n]; d];
    for x in 0..d {
        let union_others: Vec<bool> = (0..n)
            .map(|j| (0..d).any(|i| i != x && supports[i][j]))
            .collect();
        let mix = mixture_row(q, &projections[x].mixture);
        verify_projection_bound(q, x, &mix, &smoothed[x]);
        let covered = (0..n).all(|j| !supports[x][j] || union_others[j]);
        if covered {
            // Own support inside the union: subtract the own-input mean.
            let mut c = 0.0;
            for j in 0..n {
                if q[x][j] > 0.0 {
                    c += q[x][j] * (log2p(smoothed[x][j]) - log2p(mix[j]));
                }
            }
            for j in 0..n {
                xi[x][j] = if union_others[j] {
                    log2p(smoothed[x][j]) - log2p(mix[j]) - c
                } else {
                    // Zero measure under every input; any finite value works.
                    0.0
                };
            }
        } else {
            // Own mass escapes the union: compensate the mean on the escape
            // set so the own-input expectation is exactly zero.
            let mut inside = 0.0;
            let mut escape_mass = 0.0;
            for j in 0..n {
                if union_others[j] {
                    if q[x][j] > 0.0 {
                        inside += q[x][j] * (log2p(smoothed[x][j]) - log2p(mix[j]));
                    }
                } else {
                    escape_mass += q[x][j];
                }
            }
            let constant = -inside / escape_mass;
            for j in 0..n {
                xi[x][j] = if union_others[j] {
                    log2p(smoothed[x][j]) - log2p(mix[j])
                } else {
                    constant
                };
            }
        }
    }
    Ok((xi, projections, delta))
}

fn smooth_row(q: &[f64], support: &[bool], delta: f64) -> Vec<f64> {
    let off_count = support.iter().filter(|&&s| !s).count();
    if off_count == 0 {
        return q.to_vec();
    }
    q.iter()
        .zip(support)
        .map(|(&v, &s)| if s { (1.0 - delta) * v } else { delta / off_count as f64 })
        .collect()
}

fn mixture_row(q: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n = q[0].len();
    (0..n)
        .map(|j| weights.iter().enumerate().map(|(i, &w)| w * q[i][j]).sum())
        .collect()
}

/// Projection of the other inputs' mixture hull onto an explicit target row.
fn project_onto_row(q: &[Vec<f64>], x: usize, target: &[f64]) -> Projection {
    let d = q.len();
    let n = q[0].len();
    let others: Vec<usize> = (0..d).filter(|&i| i != x).collect();
    let comps: Vec<&Vec<f64>> = others.iter().map(|&i| &q[i]).collect();
    let f = |p: &[f64]| -> f64 {
        let mut acc = 0.0;
        for j in 0..n {
            let mix: f64 = p.iter().zip(&comps).map(|(&pi, c)| pi * c[j]).sum();
            if mix > 0.0 {
                if target[j] <= 0.0 {
                    return f64::INFINITY;
                }
                acc += mix * (mix / target[j]).log2();
            }
        }
        acc
    };
    let g = |p: &[f64], out: &mut [f64]| {
        let mix: Vec<f64> = (0..n)
            .map(|j| p.iter().zip(&comps).map(|(&pi, c)| pi * c[j]).sum())
            .collect();
        for (k, c) in comps.iter().enumerate() {
            out[k] = (0..n)
                .map(|j| {
                    if c[j] > 0.0 && mix[j] > 0.0 && target[j] > 0.0 {
                        c[j] * ((mix[j] / target[j]).log2() + std::f64::consts::LOG2_E)
                    } else {
                        0.0
                    }
                })
                .sum();
        }
    };
    let (popt, div) = minimize_on_simplex(others.len(), &f, &g, None, PROJECTION_TOL, 20_000);
    let mut mixture = vec![0.0; d];
    for (k, &i) in others.iter().enumerate() {
        mixture[i] = popt[k];
    }
    Projection { mixture, divergence: div }
}

/// The projection optimality certificate: the attained divergence never
/// exceeds the linearized divergence evaluated at any feasible mixture point.
fn verify_projection_bound(q: &[Vec<f64>], x: usize, mix: &[f64], target: &[f64]) {
    let d_attained = crate::info::kl_divergence(mix, target);
    if !d_attained.is_finite() {
        return;
    }
    // E_Q[log p' - log p] for each candidate Q = W_{x'}.
    for (i, row) in q.iter().enumerate() {
        if i == x {
            continue;
        }
        let mut e = 0.0;
        let mut feasible = true;
        for j in 0..row.len() {
            if row[j] > 0.0 {
                if mix[j] <= 0.0 || target[j] <= 0.0 {
                    feasible = false;
                    break;
                }
                e += row[j] * (log2p(mix[j]) - log2p(target[j]));
            }
        }
        if feasible {
            assert!(
                d_attained <= e + 1e-6,
                "projection certificate failed for input {i}: {d_attained} > {e}"
            );
        }
    }
}

/// Certificate for continuous (mean-shift) adversaries on an additive
/// Gaussian channel: separation growth over a (t, r) grid plus a uniform
/// variance bound.
#[derive(Clone, Debug)]
pub struct ContinuousScoreCert {
    pub zeta3: f64,
    pub t_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    /// zetabar1[ti][ri]: certified decay rate at t_grid[ti], r_grid[ri].
    pub zetabar1: Vec<Vec<f64>>,
    pub zetabar2: f64,
}

impl ContinuousScoreCert {
    /// Conservative table lookup: the closest grid r not exceeding the query
    /// (the table is nondecreasing in r, so flooring never overstates).
    pub fn zetabar1_at(&self, ti: usize, r: f64) -> f64 {
        let mut best = 0.0;
        for (i, &ri) in self.r_grid.iter().enumerate() {
            if ri <= r {
                best = self.zetabar1[ti][i];
            } else {
                break;
            }
        }
        best
    }
}

/// Scores for the antipodal Gaussian channel: xi_x(y) = log2 w_x(y) - offset
/// with the offset chosen so every mean-shift input has exactly zero mean.
pub fn build_scores_awgn(ch: &Channel) -> Result<(ScoreFamily, ContinuousScoreCert)> {
    let Some((means, variance, _)) = ch.gaussian_params() else {
        return Err(Error::WrongChannelKind { expected: "additive Gaussian" });
    };
    let means = means.to_vec();
    let v = variance;
    let offset = -0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * v).ln()
        * std::f64::consts::LOG2_E;
    let fam = ScoreFn::GaussianLog { means: means.clone(), variance: v, offset };
    let score = |x: usize, y: f64| -> f64 {
        let z = y - means[x];
        (-0.5 * z * z / v - 0.5 * (2.0 * std::f64::consts::PI * v).ln())
            * std::f64::consts::LOG2_E
            - offset
    };
    let d = means.len();
    let weights = ch.weights();
    let nodes = ch.nodes();
    let mut cs1 = 0.0f64;
    let mut zeta1 = f64::INFINITY;
    let mut zeta2 = 0.0f64;
    let mut own_var = 0.0f64;
    for x in 0..d {
        for xp in 0..d {
            let mut mean = 0.0;
            let mut second = 0.0;
            for (j, &y) in nodes.iter().enumerate() {
                let w = weights[j] * ch.node_density(xp, j);
                let s = score(x, y);
                mean += w * s;
                second += w * s * s;
            }
            if xp == x {
                cs1 = cs1.max(mean.abs());
                own_var = own_var.max(second - mean * mean);
            } else {
                zeta1 = zeta1.min(-mean);
            }
            zeta2 = zeta2.max(second - mean * mean);
        }
    }
    if cs1 > 1e-8 {
        return Err(Error::Infeasible(format!(
            "quadrature mean residual {cs1} exceeds 1e-8; grid too coarse"
        )));
    }
    if !(zeta1 > 0.0) {
        return Err(Error::Infeasible("coincident constellation points".into()));
    }

    // Pairwise minimum constellation distance.
    let mut zeta3 = f64::INFINITY;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                zeta3 = zeta3.min((means[i] - means[j]).abs());
            }
        }
    }

    // Decay table over (t, r): the score gap of a mean-shift pair at distance
    // delta integrates to exp(-t(1-t) delta^2 / 2v); certify on a grid and
    // keep the suffix minimum so entries never overstate the infimum.
    let t_grid: Vec<f64> = (1..10).map(|i| 0.05 * i as f64).collect();
    let r_points = 64usize;
    let r_max = 2.0 * zeta3;
    let r_grid: Vec<f64> = (1..=r_points)
        .map(|i| r_max * i as f64 / r_points as f64)
        .collect();
    let sigma = v.sqrt();
    let mut zetabar1 = vec![vec![0.0; r_grid.len()]; t_grid.len()];
    for (ti, &t) in t_grid.iter().enumerate() {
        let mut vals = Vec::with_capacity(r_grid.len());
        for &r in &r_grid {
            // integral of w_0(y)^(1-t) w_r(y)^t dy over a centered grid.
            let lo = -8.0 * sigma;
            let hi = r + 8.0 * sigma;
            let (qn, qw) = crate::numeric::composite_gauss_legendre(lo, hi, 160, 16);
            let mut acc = 0.0;
            for (y, w) in qn.iter().zip(&qw) {
                let w0 = gaussian_pdf(*y, 0.0, v);
                let wr = gaussian_pdf(*y, r, v);
                acc += w * w0.powf(1.0 - t) * wr.powf(t);
            }
            vals.push(-log2p(acc) / t);
        }
        // Suffix minimum: the infimum over distances >= r.
        let mut suffix = f64::INFINITY;
        for i in (0..vals.len()).rev() {
            suffix = suffix.min(vals[i]);
            zetabar1[ti][i] = suffix;
        }
    }

    let family = ScoreFamily {
        f: fam,
        zeta1,
        zeta2,
        cs1_residual: cs1,
        smoothing_delta: 0.0,
        projections: (0..d).map(|x| kl_project_onto_others(ch, x)).collect(),
    };
    // sup over mean shifts of the own-input variance; shift invariance makes
    // it the value at any constellation point.
    let cert = ContinuousScoreCert { zeta3, t_grid, r_grid, zetabar1, zetabar2: own_var };
    Ok((family, cert))
}

fn gaussian_pdf(y: f64, mean: f64, variance: f64) -> f64 {
    let z = y - mean;
    (-0.5 * z * z / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}
