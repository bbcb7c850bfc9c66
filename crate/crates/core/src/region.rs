//! Rate-region machinery: boundary curves with auxiliary-variable
//! concavification, membership tests with explicit witnesses, scalar
//! capacities, Legendre-transform utilities, and a meta-converse check.
//!
//! Rates are triples (R1, R2, R3): message rate, list rate, and equivocation
//! rate, all in bits per channel use. Membership in each region is defined by
//! the existence of a finite auxiliary mixture over input distributions
//! satisfying four inequalities; the two-dimensional (R1, R3) shadow of every
//! region is bounded by a gamma curve over R1.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::channel::{Channel, InputDistribution};
use crate::info::{self, AlphaOrder};
use crate::numeric;
use crate::scores::ScoreFamily;
use crate::slc::{build_decode_table, Codebook, DecoderParams};
use crate::{Error, Result};

/// Default number of R1 grid points for sampled boundary curves.
pub const DEFAULT_CURVE_POINTS: usize = 201;

const CONSTRAINT_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateTriple {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl RateTriple {
    /// Interior rate point: all coordinates strictly positive, list and
    /// equivocation rates no larger than the message rate.
    pub fn new(r1: f64, r2: f64, r3: f64) -> Result<Self> {
        for (name, v) in [("R1", r1), ("R2", r2), ("R3", r3)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if r2 > r1 || r3 > r1 {
            return Err(Error::InvalidParameter(format!(
                "R2 and R3 may not exceed R1 (got {r1}, {r2}, {r3})"
            )));
        }
        Ok(Self { r1, r2, r3 })
    }
}

/// Auxiliary mixture over input distributions: a finite-valued U with weights
/// lambda_u and conditionals P_{X|U=u}. Four components always suffice.
#[derive(Clone, Debug)]
pub struct AuxMixture {
    weights: Vec<f64>,
    components: Vec<InputDistribution>,
}

impl AuxMixture {
    pub fn new(weights: Vec<f64>, components: Vec<InputDistribution>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::InvalidParameter(
                "mixture weights and components must match and be nonempty".into(),
            ));
        }
        if weights.len() > 4 {
            return Err(Error::InvalidParameter(format!(
                "auxiliary alphabet capped at 4, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(Error::InvalidParameter("mixture weights must lie in [0,1]".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Normalization { input: 0, mass: s });
        }
        let d = components[0].len();
        if components.iter().any(|c| c.len() != d) {
            return Err(Error::InvalidParameter(
                "mixture components must share one alphabet".into(),
            ));
        }
        Ok(Self { weights, components })
    }

    /// Degenerate mixture on a single distribution.
    pub fn point(p: InputDistribution) -> Self {
        Self { weights: vec![1.0], components: vec![p] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[InputDistribution] {
        &self.components
    }

    /// H(X|U): mixture average of component input entropies.
    pub fn cond_input_entropy(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * info::entropy(c.probs()))
            .sum()
    }

    /// I(X;Y|U): mixture average of component mutual informations.
    pub fn cond_mutual_info(&self, ch: &Channel) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * info::mutual_info(ch, c))
            .sum()
    }

    /// H(X|YU): mixture average of component equivocations.
    pub fn cond_equivocation(&self, ch: &Channel) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * info::cond_entropy_input_given_output(ch, c))
            .sum()
    }

    /// I_alpha(X;Y|U): the conditional order-alpha information combines
    /// component values through 2^((alpha-1) I_alpha), not linearly.
    pub fn cond_renyi_info(&self, ch: &Channel, alpha: AlphaOrder) -> f64 {
        let a = alpha.value();
        let z: f64 = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * ((a - 1.0) * info::sibson_info(ch, c, alpha)).exp2())
            .sum();
        z.log2() / (a - 1.0)
    }
}

/// Which bound on R3 a region (and its boundary curve) enforces.
///
/// `Gap` caps R3 by R1 - I(X;Y|U) and `Equivocation` by H(X|YU); the second
/// region contains the first. `RenyiGap` caps R3 strictly by R1 - I_alpha.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    Gap,
    Equivocation,
    RenyiGap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    /// gamma_1: max H(X|YU) subject to H(X|U) = R1.
    Equivocation,
    /// Running max of the gamma_1 curve (boundary of the equivocation region).
    EquivocationRunningMax,
    /// gamma_alpha: max R1 - I_alpha(X;Y|U) subject to H(X|U) = R1.
    RenyiGap,
}

/// A boundary curve sampled on a uniform R1 grid over [0, log2 d].
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    kind: CurveKind,
    alpha: Option<f64>,
    r1: Vec<f64>,
    gamma: Vec<f64>,
}

impl BoundaryCurve {
    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn grid(&self) -> &[f64] {
        &self.r1
    }

    pub fn values(&self) -> &[f64] {
        &self.gamma
    }

    /// Linear interpolation on the grid, clamped at the ends.
    pub fn value_at(&self, r1: f64) -> f64 {
        let n = self.r1.len();
        if r1 <= self.r1[0] {
            return self.gamma[0];
        }
        if r1 >= self.r1[n - 1] {
            return self.gamma[n - 1];
        }
        let mut hi = match self.r1.binary_search_by(|x| x.partial_cmp(&r1).unwrap()) {
            Ok(i) => return self.gamma[i],
            Err(i) => i,
        };
        hi = hi.clamp(1, n - 1);
        let lo = hi - 1;
        let t = (r1 - self.r1[lo]) / (self.r1[hi] - self.r1[lo]);
        self.gamma[lo] + t * (self.gamma[hi] - self.gamma[lo])
    }

    /// Prefix running maximum, the boundary of the equivocation region.
    pub fn running_max(&self) -> BoundaryCurve {
        assert_eq!(
            self.kind,
            CurveKind::Equivocation,
            "running max applies to the equivocation-kind curve"
        );
        let mut vals = self.gamma.clone();
        for i in 1..vals.len() {
            vals[i] = vals[i].max(vals[i - 1]);
        }
        BoundaryCurve {
            kind: CurveKind::EquivocationRunningMax,
            alpha: None,
            r1: self.r1.clone(),
            gamma: vals,
        }
    }
}

/// Solve h(p) = r1 for p on [0, 1/2]; returns both symmetric roots.
fn binary_entropy_roots(r1: f64) -> [f64; 2] {
    if r1 <= 0.0 {
        return [0.0, 1.0];
    }
    if r1 >= 1.0 {
        return [0.5, 0.5];
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if info::binary_entropy(mid) < r1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    [p, 1.0 - p]
}

/// Move from `p` toward `target` until the entropy hits `r1` (bisection on the
/// segment; both endpoints must straddle r1).
fn entropy_repair(p: &[f64], target: &[f64], r1: f64) -> Vec<f64> {
    let at = |s: f64| -> Vec<f64> {
        p.iter().zip(target).map(|(a, b)| (1.0 - s) * a + s * b).collect()
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let sign_lo = info::entropy(&at(lo)) - r1;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = info::entropy(&at(mid)) - r1;
        if (v > 0.0) == (sign_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Constrained maximum of `objective` over {P : H(P) = r1}. For binary inputs
/// the constraint pins P to two symmetric roots; otherwise penalty ascent from
/// seeded restarts followed by an exact constraint repair.
fn constrained_entropy_max(
    ch: &Channel,
    r1: f64,
    objective: &(dyn Fn(&InputDistribution) -> f64 + Sync),
) -> Result<f64> {
    let d = ch.n_inputs();
    let logd = (d as f64).log2();
    if !(0.0..=logd + 1e-9).contains(&r1) {
        return Err(Error::Infeasible(format!(
            "no input distribution on {d} symbols has entropy {r1}"
        )));
    }
    let r1 = r1.min(logd);
    if r1 <= 1e-12 {
        // Point masses only; pick the best vertex.
        let best = (0..d)
            .map(|x| {
                let mut probs = vec![0.0; d];
                probs[x] = 1.0;
                objective(&InputDistribution::new(probs).expect("vertex distribution"))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(best);
    }
    if (logd - r1).abs() <= 1e-9 {
        // Full entropy forces the uniform distribution.
        return Ok(objective(&InputDistribution::uniform(d)));
    }
    if d == 2 {
        let best = binary_entropy_roots(r1)
            .iter()
            .map(|&p| objective(&InputDistribution::new(vec![p, 1.0 - p]).expect("root")))
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(best);
    }

    let uniform = vec![1.0 / d as f64; d];
    let mut rng = ChaCha12Rng::seed_from_u64(0x7a9e_10c4 ^ (r1.to_bits() >> 17));
    let mut starts: Vec<Vec<f64>> = vec![uniform.clone()];
    for _ in 0..16 {
        let mut p: Vec<f64> = (0..d).map(|_| -(rng.random::<f64>().max(1e-12)).ln()).collect();
        numeric::normalize(&mut p);
        starts.push(p);
    }

    let eval = |probs: &[f64]| -> f64 {
        objective(&InputDistribution::new(probs.to_vec()).expect("simplex point"))
    };
    let mut best = f64::NEG_INFINITY;
    for start in &starts {
        let mut p = start.clone();
        for mu in [1e2, 1e3, 1e4, 1e5] {
            let f = |q: &[f64]| -> f64 {
                let gap = info::entropy(q) - r1;
                -eval(q) + mu * gap * gap
            };
            let grad = |q: &[f64], g: &mut [f64]| {
                let f0 = f(q);
                let eps = 1e-6;
                for (a, ga) in g.iter_mut().enumerate() {
                    let mut qp = q.to_vec();
                    qp[a] += eps;
                    numeric::normalize(&mut qp);
                    *ga = (f(&qp) - f0) / eps;
                }
            };
            let (q, _) = numeric::minimize_on_simplex(d, &f, &grad, Some(&p), 1e-9, 400);
            p = q;
        }
        // Exact repair: walk toward the uniform point (entropy log d) or a
        // vertex (entropy 0), whichever brackets the target.
        let h = info::entropy(&p);
        let repaired = if (h - r1).abs() <= 1e-12 {
            p.clone()
        } else if h < r1 {
            entropy_repair(&p, &uniform, r1)
        } else {
            let top = p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            let mut vertex = vec![0.0; d];
            vertex[top] = 1.0;
            entropy_repair(&p, &vertex, r1)
        };
        debug_assert!((info::entropy(&repaired) - r1).abs() <= CONSTRAINT_TOL);
        best = best.max(eval(&repaired));
    }
    Ok(best)
}

/// Base curve value gamma_{1,o}(R1): the largest equivocation H(X|Y)_P among
/// single input distributions with H(X)_P = R1.
pub fn gamma1_base(ch: &Channel, r1: f64) -> Result<f64> {
    constrained_entropy_max(ch, r1, &|p| info::cond_entropy_input_given_output(ch, p))
}

/// Base curve value gamma_{alpha,o}(R1) = R1 - min {I_alpha(X;Y)_P : H(X)_P = R1}.
pub fn gamma_alpha_base(ch: &Channel, r1: f64, alpha: AlphaOrder) -> Result<f64> {
    let neg_ialpha = constrained_entropy_max(ch, r1, &|p| -info::sibson_info(ch, p, alpha))?;
    Ok(r1 + neg_ialpha)
}

fn uniform_grid(logd: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points).map(|i| logd * i as f64 / (points - 1) as f64).collect()
}

/// Sample the equivocation-kind base curve on a uniform grid.
pub fn gamma1_curve(ch: &Channel, points: usize) -> Result<BoundaryCurve> {
    let grid = uniform_grid((ch.n_inputs() as f64).log2(), points);
    let gamma: Vec<f64> = grid
        .par_iter()
        .map(|&r1| gamma1_base(ch, r1))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryCurve { kind: CurveKind::Equivocation, alpha: None, r1: grid, gamma })
}

/// Sample the order-alpha gap base curve on a uniform grid.
pub fn gamma_alpha_curve(ch: &Channel, points: usize, alpha: AlphaOrder) -> Result<BoundaryCurve> {
    let grid = uniform_grid((ch.n_inputs() as f64).log2(), points);
    let gamma: Vec<f64> = grid
        .par_iter()
        .map(|&r1| gamma_alpha_base(ch, r1, alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryCurve {
        kind: CurveKind::RenyiGap,
        alpha: Some(alpha.value()),
        r1: grid,
        gamma,
    })
}

/// Concavify a sampled base curve over auxiliary mixtures.
///
/// Conditioning averages entropies linearly, so the equivocation curve closes
/// under mixtures to its upper concave envelope. The order-alpha gap combines
/// through z = 2^((alpha-1)(R1-gamma)), which mixtures average linearly, so
/// that curve closes to the lower convex envelope of z, mapped back. A curve
/// that is already concave (convex in z) comes back unchanged.
pub fn gamma_concavify(curve: &BoundaryCurve) -> BoundaryCurve {
    match curve.kind {
        CurveKind::Equivocation | CurveKind::EquivocationRunningMax => {
            let env = numeric::upper_concave_envelope(&curve.r1, &curve.gamma);
            BoundaryCurve { gamma: env, ..curve.clone() }
        }
        CurveKind::RenyiGap => {
            let a = curve.alpha.expect("alpha recorded on the curve");
            let z: Vec<f64> = curve
                .r1
                .iter()
                .zip(&curve.gamma)
                .map(|(&r, &g)| ((a - 1.0) * (r - g)).exp2())
                .collect();
            let env = numeric::lower_convex_envelope(&curve.r1, &z);
            let gamma: Vec<f64> = curve
                .r1
                .iter()
                .zip(env)
                .zip(&curve.gamma)
                .map(|((&r, e), &g)| (r - e.log2() / (a - 1.0)).max(g))
                .collect();
            BoundaryCurve { gamma, ..curve.clone() }
        }
    }
}

/// Check the four defining inequalities of a region against mixture
/// aggregates. `ralpha` is I_alpha(X;Y|U), required for `RenyiGap`.
fn aggregates_satisfy(
    kind: RegionKind,
    t: RateTriple,
    h: f64,
    i: f64,
    hxy: f64,
    ralpha: Option<f64>,
) -> bool {
    if !(t.r1 - t.r2 > 0.0 && t.r1 - t.r2 < i && t.r1 < h) {
        return false;
    }
    match kind {
        RegionKind::Gap => t.r3 <= t.r1 - i,
        RegionKind::Equivocation => t.r3 <= hxy,
        RegionKind::RenyiGap => t.r3 < t.r1 - ralpha.expect("order-alpha aggregate"),
    }
}

/// Recompute a candidate witness's aggregates from scratch and test the
/// region inequalities.
pub fn mixture_satisfies(
    kind: RegionKind,
    ch: &Channel,
    mix: &AuxMixture,
    triple: RateTriple,
    alpha: Option<AlphaOrder>,
) -> bool {
    let h = mix.cond_input_entropy();
    let i = mix.cond_mutual_info(ch);
    let hxy = mix.cond_equivocation(ch);
    let ralpha = alpha.map(|a| mix.cond_renyi_info(ch, a));
    aggregates_satisfy(kind, triple, h, i, hxy, ralpha)
}

struct PointEval {
    probs: Vec<f64>,
    h: f64,
    i: f64,
    hxy: f64,
    /// 2^((alpha-1) I_alpha), the linear coordinate for order-alpha mixing.
    z: f64,
}

fn eval_cloud(ch: &Channel, alpha: Option<AlphaOrder>) -> Vec<PointEval> {
    let d = ch.n_inputs();
    let mut cloud: Vec<Vec<f64>> = Vec::new();
    if d == 2 {
        for k in 0..=400 {
            let p = k as f64 / 400.0;
            cloud.push(vec![p, 1.0 - p]);
        }
    } else {
        cloud.push(vec![1.0 / d as f64; d]);
        for x in 0..d {
            let mut v = vec![0.0; d];
            v[x] = 1.0;
            cloud.push(v);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(0x52f_00d5);
        for _ in 0..512 {
            let mut p: Vec<f64> =
                (0..d).map(|_| -(rng.random::<f64>().max(1e-12)).ln()).collect();
            numeric::normalize(&mut p);
            cloud.push(p);
        }
    }
    cloud
        .into_par_iter()
        .map(|probs| {
            let dist = InputDistribution::new(probs.clone()).expect("cloud point");
            let h = info::entropy(&probs);
            let i = info::mutual_info(ch, &dist);
            let hxy = info::cond_entropy_input_given_output(ch, &dist);
            let z = alpha
                .map(|a| ((a.value() - 1.0) * info::sibson_info(ch, &dist, a)).exp2())
                .unwrap_or(1.0);
            PointEval { probs, h, i, hxy, z }
        })
        .collect()
}

fn subsample(cloud: &[PointEval], cap: usize) -> Vec<&PointEval> {
    if cloud.len() <= cap {
        return cloud.iter().collect();
    }
    let step = cloud.len() as f64 / cap as f64;
    (0..cap).map(|k| &cloud[(k as f64 * step) as usize]).collect()
}

fn verify_witness(
    kind: RegionKind,
    ch: &Channel,
    weights: Vec<f64>,
    points: Vec<&PointEval>,
    triple: RateTriple,
    alpha: Option<AlphaOrder>,
) -> Option<AuxMixture> {
    let comps: Vec<InputDistribution> = points
        .iter()
        .map(|p| InputDistribution::new(p.probs.clone()).expect("witness component"))
        .collect();
    let mix = AuxMixture::new(weights, comps).ok()?;
    mixture_satisfies(kind, ch, &mix, triple, alpha).then_some(mix)
}

/// Decide membership of a rate triple in the chosen region, returning a
/// verified auxiliary-mixture witness when the point is inside.
///
/// The search is sound but conservative: a quick reject against the
/// concavified boundary curve, then single distributions, two-component
/// mixtures on a weight grid, and coarse three-component mixtures.
pub fn region_contains(
    kind: RegionKind,
    ch: &Channel,
    triple: RateTriple,
    alpha: Option<AlphaOrder>,
) -> Result<Option<AuxMixture>> {
    if kind == RegionKind::RenyiGap && alpha.is_none() {
        return Err(Error::InvalidParameter(
            "the order-alpha region requires an alpha order".into(),
        ));
    }
    let logd = (ch.n_inputs() as f64).log2();
    // H(X|U) <= log2 d, and membership needs R1 strictly below it.
    if triple.r1 >= logd - 1e-12 || triple.r2 >= triple.r1 {
        return Ok(None);
    }
    let bound = match kind {
        RegionKind::Gap => gamma_concavify(&gamma1_curve(ch, DEFAULT_CURVE_POINTS)?),
        RegionKind::Equivocation => {
            gamma_concavify(&gamma1_curve(ch, DEFAULT_CURVE_POINTS)?).running_max()
        }
        RegionKind::RenyiGap => gamma_concavify(&gamma_alpha_curve(
            ch,
            DEFAULT_CURVE_POINTS,
            alpha.expect("checked above"),
        )?),
    };
    if triple.r3 > bound.value_at(triple.r1) + 1e-6 {
        return Ok(None);
    }

    let cloud = eval_cloud(ch, alpha);
    let a = alpha.map(|a| a.value());
    let ralpha_of = |zbar: f64| a.map(|a| zbar.log2() / (a - 1.0));

    for p in &cloud {
        if aggregates_satisfy(kind, triple, p.h, p.i, p.hxy, ralpha_of(p.z)) {
            if let Some(mix) = verify_witness(kind, ch, vec![1.0], vec![p], triple, alpha) {
                return Ok(Some(mix));
            }
        }
    }

    let pool = subsample(&cloud, 81);
    for (ia, pa) in pool.iter().enumerate() {
        for pb in pool.iter().skip(ia + 1) {
            for k in 1..100 {
                let lam = k as f64 / 100.0;
                let h = lam * pa.h + (1.0 - lam) * pb.h;
                let i = lam * pa.i + (1.0 - lam) * pb.i;
                let hxy = lam * pa.hxy + (1.0 - lam) * pb.hxy;
                let z = lam * pa.z + (1.0 - lam) * pb.z;
                if aggregates_satisfy(kind, triple, h, i, hxy, ralpha_of(z)) {
                    if let Some(mix) = verify_witness(
                        kind,
                        ch,
                        vec![lam, 1.0 - lam],
                        vec![pa, pb],
                        triple,
                        alpha,
                    ) {
                        return Ok(Some(mix));
                    }
                }
            }
        }
    }

    let pool = subsample(&cloud, 21);
    for (ia, pa) in pool.iter().enumerate() {
        for (ib, pb) in pool.iter().enumerate().skip(ia + 1) {
            for pc in pool.iter().skip(ib + 1) {
                for ka in 1..10 {
                    for kb in 1..(10 - ka) {
                        let (la, lb) = (ka as f64 / 10.0, kb as f64 / 10.0);
                        let lc = 1.0 - la - lb;
                        let h = la * pa.h + lb * pb.h + lc * pc.h;
                        let i = la * pa.i + lb * pb.i + lc * pc.i;
                        let hxy = la * pa.hxy + lb * pb.hxy + lc * pc.hxy;
                        let z = la * pa.z + lb * pb.z + lc * pc.z;
                        if aggregates_satisfy(kind, triple, h, i, hxy, ralpha_of(z)) {
                            if let Some(mix) = verify_witness(
                                kind,
                                ch,
                                vec![la, lb, lc],
                                vec![pa, pb, pc],
                                triple,
                                alpha,
                            ) {
                                return Ok(Some(mix));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Scalar capacity: the global maximum of H(X|Y)_P over input distributions.
/// The objective is concave in P (conditioning on more cannot raise entropy),
/// so ascent from the uniform start finds the global maximum.
pub fn capacity_c(ch: &Channel) -> f64 {
    capacity_c_witness(ch).1
}

/// As `capacity_c`, but also returns the maximizing input distribution.
pub fn capacity_c_witness(ch: &Channel) -> (InputDistribution, f64) {
    let d = ch.n_inputs();
    let eval = |probs: &[f64]| -> f64 {
        info::cond_entropy_input_given_output(
            ch,
            &InputDistribution::new(probs.to_vec()).expect("simplex point"),
        )
    };
    if d == 2 {
        let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let (p, neg) = numeric::grid_then_golden(|p| -eval(&[p, 1.0 - p]), &grid, 1e-10);
        return (InputDistribution::new(vec![p, 1.0 - p]).expect("simplex point"), -neg);
    }
    let f = |q: &[f64]| -eval(q);
    let grad = |q: &[f64], g: &mut [f64]| {
        // d/dP(a) H(X|Y) = -log2 P(a) - D(W_a || mixture output).
        let dist = InputDistribution::new(q.to_vec()).expect("simplex point");
        let mix: Vec<f64> = (0..ch.n_nodes()).map(|j| ch.mixture_node_density(&dist, j)).collect();
        for (x, gx) in g.iter_mut().enumerate() {
            let mut dkl = 0.0;
            for (j, &mj) in mix.iter().enumerate() {
                let w = ch.node_density(x, j);
                if w > 0.0 {
                    dkl += ch.node_prob(x, j) * (w / mj).log2();
                }
            }
            *gx = numeric::log2p(q[x].max(1e-300)) + dkl;
        }
    };
    let mut best = f64::NEG_INFINITY;
    let mut best_p = vec![1.0 / d as f64; d];
    let mut rng = ChaCha12Rng::seed_from_u64(0xcafe_f00d);
    let mut starts = vec![vec![1.0 / d as f64; d]];
    for _ in 0..4 {
        let mut p: Vec<f64> = (0..d).map(|_| -(rng.random::<f64>().max(1e-12)).ln()).collect();
        numeric::normalize(&mut p);
        starts.push(p);
    }
    for start in starts {
        let (p, v) = numeric::minimize_on_simplex(d, &f, &grad, Some(&start), 1e-9, 600);
        if -v > best {
            best = -v;
            best_p = p;
        }
    }
    (InputDistribution::new(best_p).expect("simplex point"), best)
}

/// Order-alpha capacity: the global maximum of H(X)_P - I_alpha(X;Y)_P.
pub fn capacity_c_alpha(ch: &Channel, alpha: AlphaOrder) -> f64 {
    let d = ch.n_inputs();
    let eval = |probs: &[f64]| -> f64 {
        let dist = InputDistribution::new(probs.to_vec()).expect("simplex point");
        info::entropy(probs) - info::sibson_info(ch, &dist, alpha)
    };
    if d == 2 {
        let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let (_, neg) = numeric::grid_then_golden(|p| -eval(&[p, 1.0 - p]), &grid, 1e-10);
        return -neg;
    }
    let f = |q: &[f64]| -eval(q);
    let grad = |q: &[f64], g: &mut [f64]| {
        let f0 = f(q);
        let eps = 1e-6;
        for (x, gx) in g.iter_mut().enumerate() {
            let mut qp = q.to_vec();
            qp[x] += eps;
            numeric::normalize(&mut qp);
            *gx = (f(&qp) - f0) / eps;
        }
    };
    let mut best = f64::NEG_INFINITY;
    let mut rng = ChaCha12Rng::seed_from_u64(0xfeed_beef);
    let mut starts = vec![vec![1.0 / d as f64; d]];
    for _ in 0..16 {
        let mut p: Vec<f64> = (0..d).map(|_| -(rng.random::<f64>().max(1e-12)).ln()).collect();
        numeric::normalize(&mut p);
        starts.push(p);
    }
    for start in starts {
        let (_, v) = numeric::minimize_on_simplex(d, &f, &grad, Some(&start), 1e-9, 600);
        best = best.max(-v);
    }
    best
}

/// log2(2^a + 2^b) with either argument allowed to be -inf.
fn log2_sum_exp2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp2() + (b - m).exp2()).log2()
}

/// log2(2^t p + 1 - p), stable for large t.
fn log2_tilt(p: f64, t: f64) -> f64 {
    let a = if p > 0.0 { t + p.log2() } else { f64::NEG_INFINITY };
    let b = if p < 1.0 { (1.0 - p).log2() } else { f64::NEG_INFINITY };
    log2_sum_exp2(a, b)
}

/// Cumulant-style generating function G_{P,P'}(t) = sum_x P'(x) log2(2^t P(x) + 1 - P(x)).
pub fn legendre_g(p: &[f64], p_prime: &[f64], t: f64) -> f64 {
    assert_eq!(p.len(), p_prime.len());
    assert!(t >= 0.0, "generating function needs t >= 0");
    p.iter().zip(p_prime).map(|(&px, &qx)| qx * log2_tilt(px, t)).sum()
}

const LEGENDRE_LOG_T: (f64, f64, usize) = (-20.0, 40.0, 121);

fn minimize_over_t(f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi, n) = LEGENDRE_LOG_T;
    let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let (_, v) = numeric::grid_then_golden(|u| f(u.exp2()), &grid, 1e-10);
    v
}

/// Legendre transform L[G_{P,P'}](r) = min_{t>0} G_{P,P'}(t) - t r.
/// Unbounded below (returns -inf) when P' puts less than r mass on supp P.
pub fn legendre_transform(p: &[f64], p_prime: &[f64], r: f64) -> f64 {
    let supp_mass: f64 = p.iter().zip(p_prime).filter(|(&px, _)| px > 0.0).map(|(_, &qx)| qx).sum();
    if supp_mass < r {
        return f64::NEG_INFINITY;
    }
    minimize_over_t(|t| legendre_g(p, p_prime, t) - t * r)
}

/// Exact maximum of sum_x P'(x) g(x) over the total-variation ball of radius
/// eps around p: move mass from the smallest g values onto the largest.
fn tv_ball_linear_max(p: &[f64], eps: f64, g: &[f64]) -> f64 {
    let star = g
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .expect("nonempty alphabet");
    let mut order: Vec<usize> = (0..p.len()).filter(|&x| x != star).collect();
    order.sort_by(|&a, &b| g[a].partial_cmp(&g[b]).unwrap());
    let mut val: f64 = p.iter().zip(g).map(|(&px, &gx)| px * gx).sum();
    let mut budget = eps;
    for x in order {
        if budget <= 0.0 {
            break;
        }
        let take = p[x].min(budget);
        val += take * (g[star] - g[x]);
        budget -= take;
    }
    val
}

/// L^eps_P(r) = max over the TV ball of radius eps around P of L[G_{P,P'}](r).
/// Computed as min over t of the exact ball maximum (the ball is compact and
/// G is linear in P', so the max and min exchange).
pub fn legendre_eps(p: &[f64], eps: f64, r: f64) -> f64 {
    assert!(eps >= 0.0);
    let supp_mass: f64 = p.iter().filter(|&&px| px > 0.0).sum();
    if (supp_mass + eps).min(1.0) < r {
        return f64::NEG_INFINITY;
    }
    minimize_over_t(|t| {
        let g: Vec<f64> = p.iter().map(|&px| log2_tilt(px, t)).collect();
        tv_ball_linear_max(p, eps, &g) - t * r
    })
}

/// Meta-converse sanity check on an exactly evaluated code.
///
/// With M the sent message (uniform) and the decoder's list viewed as a test
/// region, the miss probability eps_P under the true joint and the average
/// normalized list size eps_Q under the independent product must satisfy
/// -log2 eps_Q <= (D + h(1 - eps_P)) / (1 - eps_P), where D is the mutual
/// information I(M; Y^n) of the code.
pub fn meta_converse_check(
    ch: &Channel,
    cb: &Codebook,
    dp: &DecoderParams,
    sf: &ScoreFamily,
    budget: u128,
) -> Result<bool> {
    let table = build_decode_table(ch, cb, dp, sf, budget)?;
    let n = cb.block_len();
    let m_count = cb.len() as f64;
    let mut digits = vec![0usize; n];
    let mut hit = 0.0; // P(message in list)
    let mut eps_q = 0.0; // Q(test region) = E_mix |list| / M
    let mut dpq = 0.0; // I(M; Y^n)
    loop {
        let mut w = vec![1.0; cb.len()];
        for (m, wm) in w.iter_mut().enumerate() {
            let word = cb.word(m);
            for (i, &j) in digits.iter().enumerate() {
                *wm *= ch.node_prob(word[i], j);
                if *wm == 0.0 {
                    break;
                }
            }
        }
        let mix: f64 = w.iter().sum::<f64>() / m_count;
        if mix > 0.0 {
            let list = table.list(&digits);
            eps_q += mix * list.len() as f64 / m_count;
            for &m in list {
                hit += w[m] / m_count;
            }
            for &wm in &w {
                if wm > 0.0 {
                    dpq += wm / m_count * (wm / mix).log2();
                }
            }
        }
        if !numeric::odometer_next(&mut digits, ch.n_nodes()) {
            break;
        }
    }
    let eps_p = (1.0 - hit).clamp(0.0, 1.0);
    if 1.0 - eps_p <= 1e-12 {
        // Right side diverges.
        return Ok(true);
    }
    if eps_q <= 0.0 {
        // Left side diverges; with eps_P < 1 the inequality needs infinite D,
        // which cannot happen for mixtures of the code's own words.
        return Ok(false);
    }
    let lhs = -eps_q.log2();
    let rhs = (dpq + info::binary_entropy(1.0 - eps_p)) / (1.0 - eps_p);
    Ok(lhs <= rhs + 1e-9)
}
