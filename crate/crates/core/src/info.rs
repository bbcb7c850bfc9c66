//! Entropy, divergence, and Renyi-type quantities.
//!
//! Everything is in bits. Quantities over channel outputs integrate densities
//! against the channel's output measure, so finite and quadrature channels go
//! through the same code paths via node probabilities.

use crate::channel::{Channel, InputDistribution, Output};
use crate::numeric::{jackknife_ci, log2p, minimize_on_simplex, odometer_next, xlog2x};
use crate::slc::Codebook;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A validated Renyi order: strictly positive and not 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaOrder(f64);

impl AlphaOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() || alpha == 1.0 {
            return Err(Error::InvalidParameter(format!(
                "Renyi order must be positive, finite, and not 1; got {alpha}"
            )));
        }
        Ok(AlphaOrder(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Shannon entropy of a pmf, in bits.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&v| xlog2x(v)).sum::<f64>()
}

/// Binary entropy h(q).
pub fn binary_entropy(q: f64) -> f64 {
    entropy(&[q, 1.0 - q])
}

/// KL divergence D(P||Q) between pmfs on a common space; +inf when P puts
/// mass outside the support of Q.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            acc += pi * (pi / qi).log2();
        }
    }
    acc
}

/// Renyi divergence of order alpha between pmfs.
pub fn renyi_divergence(p: &[f64], q: &[f64], alpha: AlphaOrder) -> f64 {
    assert_eq!(p.len(), q.len());
    let a = alpha.value();
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                if a > 1.0 {
                    return f64::INFINITY;
                }
                continue;
            }
            acc += pi.powf(a) * qi.powf(1.0 - a);
        }
    }
    log2p(acc) / (a - 1.0)
}

/// Joint distribution of a discrete pair (M, Y) as an explicit matrix, rows
/// indexed by M.
#[derive(Clone, Debug)]
pub struct JointFiniteY {
    p: Vec<Vec<f64>>,
}

impl JointFiniteY {
    pub fn new(p: Vec<Vec<f64>>) -> Result<Self> {
        if p.is_empty() || p[0].is_empty() {
            return Err(Error::InvalidParameter("empty joint matrix".into()));
        }
        let cols = p[0].len();
        let mut total = 0.0;
        for row in &p {
            if row.len() != cols {
                return Err(Error::InvalidParameter("ragged joint matrix".into()));
            }
            for &v in row {
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::InvalidParameter(
                        "joint entries must be finite and nonnegative".into(),
                    ));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "joint mass is {total}, expected 1"
            )));
        }
        Ok(JointFiniteY { p })
    }

    pub fn n_m(&self) -> usize {
        self.p.len()
    }

    pub fn n_y(&self) -> usize {
        self.p[0].len()
    }

    pub fn prob(&self, m: usize, y: usize) -> f64 {
        self.p[m][y]
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_y()];
        for row in &self.p {
            for (j, &v) in row.iter().enumerate() {
                out[j] += v;
            }
        }
        out
    }

    pub fn marginal_m(&self) -> Vec<f64> {
        self.p.iter().map(|r| r.iter().sum()).collect()
    }

    /// Joint of two independent pairs: (M1M2, Y1Y2).
    pub fn product(&self, other: &JointFiniteY) -> JointFiniteY {
        let mut p = vec![vec![0.0; self.n_y() * other.n_y()]; self.n_m() * other.n_m()];
        for m1 in 0..self.n_m() {
            for m2 in 0..other.n_m() {
                for y1 in 0..self.n_y() {
                    for y2 in 0..other.n_y() {
                        p[m1 * other.n_m() + m2][y1 * other.n_y() + y2] =
                            self.p[m1][y1] * other.p[m2][y2];
                    }
                }
            }
        }
        JointFiniteY { p }
    }
}

/// Conditional entropy H(M|Y) of a joint matrix.
pub fn cond_entropy_xy(joint: &JointFiniteY) -> f64 {
    let py = joint.marginal_y();
    let h_joint = -joint
        .p
        .iter()
        .flat_map(|r| r.iter())
        .map(|&v| xlog2x(v))
        .sum::<f64>();
    let h_y = entropy(&py);
    h_joint - h_y
}

/// Conditional Renyi entropy H_alpha(M|Y) for alpha > 1, via the optimizing
/// output distribution: -(a/(a-1)) log sum_y (sum_m p(m,y)^a)^(1/a).
pub fn cond_renyi_entropy_my(joint: &JointFiniteY, alpha: AlphaOrder) -> Result<f64> {
    let a = alpha.value();
    if a <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "conditional Renyi entropy requires alpha > 1, got {a}"
        )));
    }
    let mut acc = 0.0;
    for y in 0..joint.n_y() {
        let inner: f64 = (0..joint.n_m())
            .map(|m| joint.prob(m, y).powf(a))
            .sum();
        acc += inner.powf(1.0 / a);
    }
    Ok(-(a / (a - 1.0)) * log2p(acc))
}

/// Mutual information I(X;Y) = sum_x P(x) D(W_x || W_P), in bits.
pub fn mutual_info(ch: &Channel, p: &InputDistribution) -> f64 {
    assert_eq!(p.len(), ch.n_inputs());
    let mix: Vec<f64> = (0..ch.n_nodes())
        .map(|j| ch.mixture_node_density(p, j) * ch.weights()[j])
        .collect();
    let mut acc = 0.0;
    for (x, &px) in p.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        acc += px * kl_divergence(&ch.node_pmf(x), &mix);
    }
    acc
}

/// Input equivocation H(X|Y)_P = H(X)_P - I(X;Y)_P.
pub fn cond_entropy_input_given_output(ch: &Channel, p: &InputDistribution) -> f64 {
    entropy(p.probs()) - mutual_info(ch, p)
}

/// Order-alpha information in closed form:
/// (a/(a-1)) log sum_y w_y (sum_x P(x) w_x(y)^a)^(1/a).
pub fn sibson_info(ch: &Channel, p: &InputDistribution, alpha: AlphaOrder) -> f64 {
    let a = alpha.value();
    let mut acc = 0.0;
    for j in 0..ch.n_nodes() {
        let inner: f64 = p
            .probs()
            .iter()
            .enumerate()
            .map(|(x, &px)| px * ch.node_density(x, j).powf(a))
            .sum();
        acc += ch.weights()[j] * inner.powf(1.0 / a);
    }
    (a / (a - 1.0)) * log2p(acc)
}

/// The same quantity obtained by numerically minimizing
/// D_alpha(W x P || Q x P) over output distributions Q on the grid. Kept as an
/// independent route; do not fold into `sibson_info`.
pub fn sibson_info_minimized(ch: &Channel, p: &InputDistribution, alpha: AlphaOrder) -> f64 {
    let a = alpha.value();
    assert!(a > 1.0, "numeric route implemented for alpha > 1");
    let n = ch.n_nodes();
    // c_j = sum_x P(x) (node mass)^a; objective sum_j c_j u_j^(1-a) over pmfs u.
    let c: Vec<f64> = (0..n)
        .map(|j| {
            p.probs()
                .iter()
                .enumerate()
                .map(|(x, &px)| px * ch.node_prob(x, j).powf(a))
                .sum()
        })
        .collect();
    let f = |u: &[f64]| -> f64 {
        u.iter()
            .zip(&c)
            .map(|(&uj, &cj)| if cj > 0.0 { cj * uj.powf(1.0 - a) } else { 0.0 })
            .sum()
    };
    let g = |u: &[f64], out: &mut [f64]| {
        for j in 0..u.len() {
            out[j] = if c[j] > 0.0 {
                (1.0 - a) * c[j] * u[j].powf(-a)
            } else {
                0.0
            };
        }
    };
    let (_, fmin) = minimize_on_simplex(n, &f, &g, None, 1e-12, 50_000);
    log2p(fmin) / (a - 1.0)
}

/// The optimizing output distribution for `sibson_info`, returned as a node
/// pmf: u_j proportional to (sum_x P(x) w_x(y_j)^a)^(1/a) * weight_j.
pub fn q_alpha_reference(ch: &Channel, p: &InputDistribution, alpha: AlphaOrder) -> Vec<f64> {
    let a = alpha.value();
    let mut u: Vec<f64> = (0..ch.n_nodes())
        .map(|j| {
            let inner: f64 = p
                .probs()
                .iter()
                .enumerate()
                .map(|(x, &px)| px * ch.node_density(x, j).powf(a))
                .sum();
            ch.weights()[j] * inner.powf(1.0 / a)
        })
        .collect();
    let s: f64 = u.iter().sum();
    for v in u.iter_mut() {
        *v /= s;
    }
    u
}

/// D_alpha(W x P || Q x P) for an explicit node pmf Q; evaluation helper for
/// cross-checking the closed form against candidate output laws.
pub fn joint_renyi_against_q(
    ch: &Channel,
    p: &InputDistribution,
    q_node_pmf: &[f64],
    alpha: AlphaOrder,
) -> f64 {
    let a = alpha.value();
    let mut acc = 0.0;
    for j in 0..ch.n_nodes() {
        if q_node_pmf[j] <= 0.0 {
            // Mass outside the support of the reference law: the divergence
            // is infinite at orders above 1.
            let leak: f64 =
                p.probs().iter().enumerate().map(|(x, &px)| px * ch.node_prob(x, j)).sum();
            if leak > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        for (x, &px) in p.probs().iter().enumerate() {
            if px > 0.0 {
                acc += px * ch.node_prob(x, j).powf(a) * q_node_pmf[j].powf(1.0 - a);
            }
        }
    }
    log2p(acc) / (a - 1.0)
}

/// How the equivocation of a code was evaluated.
#[derive(Clone, Debug)]
pub enum EvalMode {
    Exact,
    MonteCarlo {
        samples: usize,
        e_ci: (f64, f64),
        e_alpha_ci: (f64, f64),
    },
}

#[derive(Clone, Debug)]
pub struct EquivocationReport {
    pub e: f64,
    pub e_alpha: f64,
    pub alpha: f64,
    pub mode: EvalMode,
}

/// Message equivocation (E, E_alpha) of a code under uniform messages:
/// E = H(M|Y^n), E_alpha = H_alpha(M|Y^n). Exact enumeration when the output
/// state count fits the budget, otherwise Monte Carlo with a jackknife CI.
pub fn equivocation(
    ch: &Channel,
    cb: &Codebook,
    alpha: AlphaOrder,
    budget: u128,
    mc_samples: usize,
    seed: u64,
) -> Result<EquivocationReport> {
    let a = alpha.value();
    if a <= 1.0 {
        return Err(Error::InvalidParameter(
            "equivocation uses conditional Renyi entropy with alpha > 1".into(),
        ));
    }
    let m_count = cb.len();
    let n = cb.block_len();
    let states = if ch.is_finite_output() {
        (ch.n_nodes() as u128)
            .checked_pow(n as u32)
            .map(|s| s.saturating_mul(m_count as u128))
    } else {
        None
    };
    match states {
        Some(s) if s <= budget => {
            let mut digits = vec![0usize; n];
            let mut acc_e = 0.0;
            let mut acc_alpha = 0.0;
            let inv_m = 1.0 / m_count as f64;
            loop {
                let mut pm = vec![0.0; m_count];
                for (m, word) in cb.words().iter().enumerate() {
                    let mut prob = inv_m;
                    for (i, &x) in word.iter().enumerate() {
                        prob *= ch.node_prob(x, digits[i]);
                    }
                    pm[m] = prob;
                }
                let py: f64 = pm.iter().sum();
                if py > 0.0 {
                    for &v in &pm {
                        if v > 0.0 {
                            acc_e -= v * (v / py).log2();
                        }
                    }
                }
                acc_alpha += pm.iter().map(|v| v.powf(a)).sum::<f64>().powf(1.0 / a);
                if !odometer_next(&mut digits, ch.n_nodes()) {
                    break;
                }
            }
            Ok(EquivocationReport {
                e: acc_e,
                e_alpha: -(a / (a - 1.0)) * log2p(acc_alpha),
                alpha: a,
                mode: EvalMode::Exact,
            })
        }
        _ => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let batches = 20usize;
            let per_batch = mc_samples.div_ceil(batches).max(1);
            let mut e_batch = Vec::with_capacity(batches);
            let mut s_batch = Vec::with_capacity(batches);
            let pch = ch.product(n);
            for _ in 0..batches {
                let mut acc_e = 0.0;
                let mut acc_s = 0.0;
                for _ in 0..per_batch {
                    let m = rng.random_range(0..m_count);
                    let y = pch.sample_seq(cb.word(m), &mut rng);
                    let likes: Vec<f64> = cb
                        .words()
                        .iter()
                        .map(|w| pch.density_seq(w, &y))
                        .collect();
                    let total: f64 = likes.iter().sum();
                    let post_m = likes[m] / total;
                    acc_e += -log2p(post_m);
                    acc_s += likes
                        .iter()
                        .map(|&l| (l / total).powf(a))
                        .sum::<f64>()
                        .powf(1.0 / a);
                }
                e_batch.push(acc_e / per_batch as f64);
                s_batch.push(acc_s / per_batch as f64);
            }
            let (e, e_lo, e_hi) = jackknife_ci(&e_batch);
            // H_alpha = -(a/(a-1)) log E_Y[(sum_m p(m|y)^a)^(1/a)]; jackknife on
            // the log-transformed batch statistic.
            let to_h = |s: f64| -(a / (a - 1.0)) * log2p(s);
            let h_batches: Vec<f64> = s_batch.iter().map(|&s| to_h(s)).collect();
            let (ha, ha_lo, ha_hi) = jackknife_ci(&h_batches);
            Ok(EquivocationReport {
                e,
                e_alpha: ha,
                alpha: a,
                mode: EvalMode::MonteCarlo {
                    samples: per_batch * batches,
                    e_ci: (e_lo, e_hi),
                    e_alpha_ci: (ha_lo.min(ha_hi), ha_hi.max(ha_lo)),
                },
            })
        }
    }
}

/// Joint distribution (M, Y^n) of a code under uniform messages, enumerated
/// over all output tuples. Used by exact security and concealing evaluations.
pub fn code_joint(ch: &Channel, cb: &Codebook, budget: u128) -> Result<JointFiniteY> {
    if !ch.is_finite_output() {
        return Err(Error::WrongChannelKind { expected: "finite-output" });
    }
    let n = cb.block_len();
    let states = (ch.n_nodes() as u128)
        .checked_pow(n as u32)
        .map(|s| s.saturating_mul(cb.len() as u128))
        .unwrap_or(u128::MAX);
    if states > budget {
        return Err(Error::BudgetExceeded { needed: states, budget });
    }
    let y_states = (ch.n_nodes() as u128).pow(n as u32) as usize;
    let inv_m = 1.0 / cb.len() as f64;
    let mut p = vec![vec![0.0; y_states]; cb.len()];
    let mut digits = vec![0usize; n];
    let mut col = 0usize;
    loop {
        for (m, word) in cb.words().iter().enumerate() {
            let mut prob = inv_m;
            for (i, &x) in word.iter().enumerate() {
                prob *= ch.node_prob(x, digits[i]);
            }
            p[m][col] = prob;
        }
        col += 1;
        if !odometer_next(&mut digits, ch.n_nodes()) {
            break;
        }
    }
    JointFiniteY::new(p)
}

/// Flatten an output tuple to its column index in `code_joint` order
/// (little-endian in the coordinate index).
pub fn output_tuple_index(ch: &Channel, ys: &[Output]) -> usize {
    let base = ch.n_nodes();
    let mut idx = 0usize;
    let mut scale = 1usize;
    for y in ys {
        let j = match y {
            Output::Symbol(j) => *j,
            Output::Real(v) => ch.nearest_node(*v),
        };
        idx += j * scale;
        scale *= base;
    }
    idx
}
