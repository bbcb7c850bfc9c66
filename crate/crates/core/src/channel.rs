//! Channel models.
//!
//! Two output-space shapes are supported behind one interface: finite output
//! alphabets carrying a stochastic matrix, and real-line outputs carrying an
//! analytic density discretized on a fixed composite Gauss-Legendre grid. The
//! grid is part of the channel value: every integral downstream uses the same
//! nodes and weights, so results are deterministic for a fixed construction.

use crate::numeric::{composite_gauss_legendre, log2p};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// One output atom: a symbol/node index, or an off-grid real observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Output {
    Symbol(usize),
    Real(f64),
}

/// Quadrature layout for real-output channels. `nodes` is rounded up to a
/// multiple of the panel order (16).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub nodes: usize,
    pub span_sigmas: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nodes: 2048, span_sigmas: 8.0 }
    }
}

const PANEL_ORDER: usize = 16;
const NORM_TOL: f64 = 1e-9;
const REDUNDANCY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
enum Space {
    Finite,
    Gaussian { means: Vec<f64>, variance: f64, spec: GridSpec },
}

/// An immutable memoryless channel.
#[derive(Clone, Debug)]
pub struct Channel {
    dens: Vec<Vec<f64>>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    space: Space,
    norm_dev: f64,
    redundant_inputs: Vec<usize>,
}

impl Channel {
    /// Finite channel from a stochastic matrix (rows = inputs).
    pub fn make_discrete(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter("empty transition matrix".into()));
        }
        let cols = rows[0].len();
        for (x, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::InvalidParameter("ragged transition matrix".into()));
            }
            if r.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "row {x} has a negative or non-finite entry"
                )));
            }
        }
        let nodes = (0..cols).map(|j| j as f64).collect();
        let weights = vec![1.0; cols];
        Self::finish(rows, nodes, weights, Space::Finite)
    }

    /// Binary symmetric channel with crossover probability q in [0, 1/2].
    pub fn make_bsc(q: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "BSC crossover must lie in [0, 1/2], got {q}"
            )));
        }
        Self::make_discrete(vec![vec![1.0 - q, q], vec![q, 1.0 - q]])
    }

    /// Antipodal-signalling Gaussian channel: input 0 is sent as +1, input 1
    /// as -1, and noise variance `v` is added. Outputs live on a composite
    /// quadrature grid over [-1 - s*sqrt(v), 1 + s*sqrt(v)].
    pub fn make_awgn_bpsk(variance: f64, spec: GridSpec) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive and finite, got {variance}"
            )));
        }
        if !(spec.span_sigmas > 0.0) || spec.nodes < PANEL_ORDER {
            return Err(Error::InvalidParameter("degenerate grid spec".into()));
        }
        let sigma = variance.sqrt();
        let lo = -1.0 - spec.span_sigmas * sigma;
        let hi = 1.0 + spec.span_sigmas * sigma;
        let panels = spec.nodes.div_ceil(PANEL_ORDER);
        let (nodes, weights) = composite_gauss_legendre(lo, hi, panels, PANEL_ORDER);
        let means = vec![1.0, -1.0];
        let dens: Vec<Vec<f64>> = means
            .iter()
            .map(|&m| nodes.iter().map(|&y| gaussian_density(y, m, variance)).collect())
            .collect();
        Self::finish(dens, nodes, weights, Space::Gaussian { means, variance, spec })
    }

    fn finish(dens: Vec<Vec<f64>>, nodes: Vec<f64>, weights: Vec<f64>, space: Space) -> Result<Self> {
        let mut norm_dev: f64 = 0.0;
        for (x, row) in dens.iter().enumerate() {
            let mass: f64 = row.iter().zip(&weights).map(|(d, w)| d * w).sum();
            let dev = (mass - 1.0).abs();
            if dev > NORM_TOL {
                return Err(Error::Normalization { input: x, mass });
            }
            norm_dev = norm_dev.max(dev);
        }
        let mut ch = Channel {
            dens,
            nodes,
            weights,
            space,
            norm_dev,
            redundant_inputs: Vec::new(),
        };
        // A row inside the convex hull of the other rows makes the input
        // indistinguishable from a mixture; flag it rather than reject it.
        let mut redundant = Vec::new();
        if ch.n_inputs() > 1 {
            for x in 0..ch.n_inputs() {
                let proj = crate::scores::kl_project_onto_others(&ch, x);
                if proj.divergence < REDUNDANCY_TOL {
                    redundant.push(x);
                }
            }
        }
        ch.redundant_inputs = redundant;
        Ok(ch)
    }

    pub fn n_inputs(&self) -> usize {
        self.dens.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Density of output node `j` under input `x`, relative to the output
    /// measure (counting measure for finite channels, Lebesgue for grids).
    pub fn node_density(&self, x: usize, j: usize) -> f64 {
        self.dens[x][j]
    }

    /// Probability mass assigned to node `j` under input `x` (density times
    /// quadrature weight; the plain matrix entry for finite channels).
    pub fn node_prob(&self, x: usize, j: usize) -> f64 {
        self.dens[x][j] * self.weights[j]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.dens[x]
    }

    /// Node probability vector for input `x`.
    pub fn node_pmf(&self, x: usize) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.node_prob(x, j)).collect()
    }

    pub fn is_finite_output(&self) -> bool {
        matches!(self.space, Space::Finite)
    }

    /// (means, variance, grid spec) when this is a Gaussian grid channel.
    pub fn gaussian_params(&self) -> Option<(&[f64], f64, GridSpec)> {
        match &self.space {
            Space::Gaussian { means, variance, spec } => Some((means, *variance, *spec)),
            Space::Finite => None,
        }
    }

    /// Worst normalization deviation certified at construction.
    pub fn normalization_deviation(&self) -> f64 {
        self.norm_dev
    }

    /// Inputs whose row lies in the convex hull of the other rows.
    pub fn redundant_inputs(&self) -> &[usize] {
        &self.redundant_inputs
    }

    /// Density at an arbitrary output atom. `Symbol(j)` always means node `j`.
    pub fn density_at(&self, x: usize, y: &Output) -> f64 {
        match (y, &self.space) {
            (Output::Symbol(j), _) => self.dens[x][*j],
            (Output::Real(v), Space::Gaussian { means, variance, .. }) => {
                gaussian_density(*v, means[x], *variance)
            }
            (Output::Real(_), Space::Finite) => {
                panic!("real-valued output on a finite channel")
            }
        }
    }

    pub fn log2_density_at(&self, x: usize, y: &Output) -> f64 {
        match (y, &self.space) {
            (Output::Real(v), Space::Gaussian { means, variance, .. }) => {
                gaussian_log2_density(*v, means[x], *variance)
            }
            _ => log2p(self.density_at(x, y)),
        }
    }

    /// Density at `y` for an arbitrary real channel input (Gaussian channels
    /// model any real input as a mean shift).
    pub fn density_at_mean(&self, mean: f64, y: &Output) -> f64 {
        match &self.space {
            Space::Gaussian { variance, .. } => match y {
                Output::Real(v) => gaussian_density(*v, mean, *variance),
                Output::Symbol(j) => gaussian_density(self.nodes[*j], mean, *variance),
            },
            Space::Finite => panic!("mean-shift inputs require a Gaussian channel"),
        }
    }

    /// Mixture output density at node `j` under input distribution `p`.
    pub fn mixture_node_density(&self, p: &InputDistribution, j: usize) -> f64 {
        p.probs
            .iter()
            .enumerate()
            .map(|(x, &px)| px * self.dens[x][j])
            .sum()
    }

    pub fn mixture_density_at(&self, p: &InputDistribution, y: &Output) -> f64 {
        p.probs
            .iter()
            .enumerate()
            .map(|(x, &px)| px * self.density_at(x, y))
            .sum()
    }

    /// Draw one output under input `x`.
    pub fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Output {
        match &self.space {
            Space::Finite => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let row = &self.dens[x];
                for (j, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Output::Symbol(j);
                    }
                }
                Output::Symbol(row.len() - 1)
            }
            Space::Gaussian { means, variance, .. } => {
                let normal = Normal::new(means[x], variance.sqrt()).expect("valid sigma");
                Output::Real(normal.sample(rng))
            }
        }
    }

    /// Nearest grid node to a real observation (grid channels only); the cell
    /// partition used when table scores are applied to sampled outputs.
    pub fn nearest_node(&self, y: f64) -> usize {
        debug_assert!(!self.is_finite_output());
        match self.nodes.binary_search_by(|n| n.partial_cmp(&y).unwrap()) {
            Ok(j) => j,
            Err(0) => 0,
            Err(k) if k >= self.nodes.len() => self.nodes.len() - 1,
            Err(k) => {
                if (y - self.nodes[k - 1]).abs() <= (self.nodes[k] - y).abs() {
                    k - 1
                } else {
                    k
                }
            }
        }
    }

    /// The n-fold memoryless extension.
    pub fn product(&self, n: usize) -> ProductChannel {
        assert!(n >= 1);
        ProductChannel { base: self.clone(), n }
    }
}

fn gaussian_density(y: f64, mean: f64, variance: f64) -> f64 {
    let z = y - mean;
    (-0.5 * z * z / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

fn gaussian_log2_density(y: f64, mean: f64, variance: f64) -> f64 {
    let z = y - mean;
    (-0.5 * z * z / variance - 0.5 * (2.0 * std::f64::consts::PI * variance).ln())
        * std::f64::consts::LOG2_E
}

/// A probability distribution on the channel input alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct InputDistribution {
    probs: Vec<f64>,
}

impl InputDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty input distribution".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "input probabilities must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "input probabilities sum to {s}, expected 1"
            )));
        }
        Ok(InputDistribution { probs })
    }

    pub fn uniform(d: usize) -> Self {
        InputDistribution { probs: vec![1.0 / d as f64; d] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// The n-fold memoryless extension of a channel: product densities under the
/// product measure.
#[derive(Clone, Debug)]
pub struct ProductChannel {
    base: Channel,
    n: usize,
}

impl ProductChannel {
    pub fn base(&self) -> &Channel {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn density_seq(&self, xs: &[usize], ys: &[Output]) -> f64 {
        assert_eq!(xs.len(), self.n);
        assert_eq!(ys.len(), self.n);
        xs.iter()
            .zip(ys)
            .map(|(&x, y)| self.base.density_at(x, y))
            .product()
    }

    pub fn log2_density_seq(&self, xs: &[usize], ys: &[Output]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(&x, y)| self.base.log2_density_at(x, y))
            .sum()
    }

    /// Product density for a sequence of arbitrary real inputs (Gaussian only).
    pub fn density_seq_means(&self, means: &[f64], ys: &[Output]) -> f64 {
        means
            .iter()
            .zip(ys)
            .map(|(&m, y)| self.base.density_at_mean(m, y))
            .product()
    }

    /// Product mixture density under an i.i.d. input law.
    pub fn mixture_density_seq(&self, p: &InputDistribution, ys: &[Output]) -> f64 {
        ys.iter().map(|y| self.base.mixture_density_at(p, y)).product()
    }

    pub fn sample_seq<R: Rng + ?Sized>(&self, xs: &[usize], rng: &mut R) -> Vec<Output> {
        assert_eq!(xs.len(), self.n);
        xs.iter().map(|&x| self.base.sample(x, rng)).collect()
    }
}
