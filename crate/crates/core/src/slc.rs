//! Secure list codes: random codebooks, pairwise-distance expurgation, the
//! two-threshold list decoder, and exact or Monte-Carlo evaluation of the
//! security parameters together with finite-blocklength binding bounds.

use crate::channel::{Channel, InputDistribution, Output};
use crate::numeric::{clopper_pearson, odometer_next, second_largest};
use crate::scores::{ContinuousScoreCert, ScoreFamily};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// How a random codebook was drawn, kept for reproducibility.
#[derive(Clone, Debug)]
pub struct GeneratorRecord {
    pub probs: Vec<f64>,
    pub seed: u64,
}

/// A deterministic encoder: message m maps to `words[m]`.
#[derive(Clone, Debug)]
pub struct Codebook {
    n_inputs: usize,
    words: Vec<Vec<usize>>,
    labels: Vec<usize>,
    generator: Option<GeneratorRecord>,
}

impl Codebook {
    pub fn from_words(n_inputs: usize, words: Vec<Vec<usize>>) -> Result<Self> {
        if words.len() < 2 {
            return Err(Error::InvalidParameter(
                "codebook needs at least two messages".into(),
            ));
        }
        let n = words[0].len();
        if n == 0 {
            return Err(Error::InvalidParameter("block length must be positive".into()));
        }
        for w in &words {
            if w.len() != n {
                return Err(Error::InvalidParameter("ragged codeword lengths".into()));
            }
            if w.iter().any(|&s| s >= n_inputs) {
                return Err(Error::InvalidParameter(
                    "codeword symbol outside the input alphabet".into(),
                ));
            }
        }
        let labels = (0..words.len()).collect();
        Ok(Self { n_inputs, words, labels, generator: None })
    }

    /// Number of messages.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn block_len(&self) -> usize {
        self.words[0].len()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn word(&self, m: usize) -> &[usize] {
        &self.words[m]
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    /// Message labels in the book this one was extracted from.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn generator(&self) -> Option<&GeneratorRecord> {
        self.generator.as_ref()
    }

    pub fn min_pairwise_distance(&self) -> usize {
        let mut best = usize::MAX;
        for a in 0..self.len() {
            for b in (a + 1)..self.len() {
                best = best.min(hamming(&self.words[a], &self.words[b]));
            }
        }
        best
    }
}

pub fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Draw M codewords i.i.d. from P^n, reproducibly from the seed.
pub fn random_codebook(
    ch: &Channel,
    p: &InputDistribution,
    n: usize,
    m_count: usize,
    seed: u64,
) -> Result<Codebook> {
    if p.len() != ch.n_inputs() {
        return Err(Error::InvalidParameter(
            "input distribution does not match the channel alphabet".into(),
        ));
    }
    if m_count < 2 || n == 0 {
        return Err(Error::InvalidParameter("need M >= 2 and n >= 1".into()));
    }
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &q in p.probs() {
        acc += q;
        cdf.push(acc);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let words: Vec<Vec<usize>> = (0..m_count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    cdf.iter().position(|&c| u < c).unwrap_or(p.len() - 1)
                })
                .collect()
        })
        .collect();
    let mut cb = Codebook::from_words(ch.n_inputs(), words)?;
    cb.generator = Some(GeneratorRecord { probs: p.probs().to_vec(), seed });
    Ok(cb)
}

#[derive(Clone, Debug)]
pub struct ExpurgationOutcome {
    pub codebook: Codebook,
    /// Fraction of messages kept.
    pub retention: f64,
}

/// Greedily keep messages in index order, dropping any later message within
/// normalized Hamming distance eps2 of a survivor. Every surviving pair ends
/// up strictly more than n*eps2 apart.
pub fn expurgate(cb: &Codebook, eps2: f64) -> Result<ExpurgationOutcome> {
    if !(eps2 > 0.0 && eps2 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "distance parameter {eps2} must lie in (0,1)"
        )));
    }
    let thresh = cb.block_len() as f64 * eps2;
    let mut kept: Vec<usize> = Vec::new();
    for m in 0..cb.len() {
        if kept
            .iter()
            .all(|&k| hamming(cb.word(k), cb.word(m)) as f64 > thresh)
        {
            kept.push(m);
        }
    }
    if kept.len() < 2 {
        return Err(Error::ExpurgationCollapse { survivors: kept.len() });
    }
    let words = kept.iter().map(|&k| cb.words[k].clone()).collect();
    let labels = kept.iter().map(|&k| cb.labels[k]).collect();
    let retention = kept.len() as f64 / cb.len() as f64;
    Ok(ExpurgationOutcome {
        codebook: Codebook {
            n_inputs: cb.n_inputs,
            words,
            labels,
            generator: cb.generator.clone(),
        },
        retention,
    })
}

/// Decoder thresholds: accept message m at y^n when the codeword likelihood
/// beats M' times the reference mixture likelihood and the score sum clears
/// -n*eps1. Lists longer than L are truncated by descending likelihood, ties
/// to the smallest index.
#[derive(Clone, Debug)]
pub struct DecoderParams {
    pub l: usize,
    m_prime_log2: f64,
    pub eps1: f64,
    pub reference: InputDistribution,
}

impl DecoderParams {
    pub fn new(l: usize, m_prime: f64, eps1: f64, reference: InputDistribution) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidParameter("list size must be positive".into()));
        }
        if !(m_prime > 0.0) || !(eps1 > 0.0) {
            return Err(Error::InvalidParameter(
                "likelihood factor and score slack must be positive".into(),
            ));
        }
        Ok(Self { l, m_prime_log2: m_prime.log2(), eps1, reference })
    }

    /// As `new` but with the likelihood factor given as log2(M'), which
    /// stays finite for factors of the form 2^{n R4} at large n.
    pub fn with_log2_threshold(
        l: usize,
        m_prime_log2: f64,
        eps1: f64,
        reference: InputDistribution,
    ) -> Result<Self> {
        if l == 0 || !(eps1 > 0.0) || !m_prime_log2.is_finite() {
            return Err(Error::InvalidParameter("bad decoder parameters".into()));
        }
        Ok(Self { l, m_prime_log2, eps1, reference })
    }

    pub fn m_prime(&self) -> f64 {
        self.m_prime_log2.exp2()
    }

    pub fn m_prime_log2(&self) -> f64 {
        self.m_prime_log2
    }
}

/// Parameters derived from the rate pair: the likelihood exponent sits at the
/// midpoint of (R1 - R2, I(X;Y)), the distance parameter at half the typical
/// normalized distance of two i.i.d. codewords, and the score slack at a
/// quarter of the separation the expurgation distance guarantees.
#[derive(Clone, Debug)]
pub struct AutoDerivation {
    pub params: DecoderParams,
    pub eps2: f64,
    pub r1: f64,
    pub r2: f64,
    pub r4: f64,
    pub info_rate: f64,
}

pub fn derive_params(
    ch: &Channel,
    p: &InputDistribution,
    sf: &ScoreFamily,
    n: usize,
    m_count: usize,
    l_count: usize,
) -> Result<AutoDerivation> {
    if l_count == 0 || m_count <= l_count {
        return Err(Error::InvalidParameter("need M > L >= 1".into()));
    }
    let r1 = (m_count as f64).log2() / n as f64;
    let r2 = (l_count as f64).log2() / n as f64;
    let info_rate = crate::info::mutual_info(ch, p);
    if !(info_rate > r1 - r2) {
        return Err(Error::Infeasible(format!(
            "rate gap R1-R2 = {} is not below the information rate {}",
            r1 - r2,
            info_rate
        )));
    }
    let r4 = 0.5 * ((r1 - r2) + info_rate);
    let collision: f64 = p.probs().iter().map(|q| q * q).sum();
    let eps2 = 0.5 * (1.0 - collision);
    if !(eps2 > 0.0) {
        return Err(Error::Infeasible(
            "degenerate input distribution leaves no expurgation margin".into(),
        ));
    }
    let eps1 = sf.zeta1 * eps2 / 4.0;
    let params =
        DecoderParams::with_log2_threshold(l_count, n as f64 * r4, eps1, p.clone())?;
    Ok(AutoDerivation { params, eps2, r1, r2, r4, info_rate })
}

/// List decoding of one output block.
pub fn decode(
    ch: &Channel,
    cb: &Codebook,
    dp: &DecoderParams,
    sf: &ScoreFamily,
    ys: &[Output],
) -> Vec<usize> {
    let n = cb.block_len();
    assert_eq!(ys.len(), n, "output block length mismatch");
    let log_wp: f64 = ys
        .iter()
        .map(|y| crate::numeric::log2p(ch.mixture_density_at(&dp.reference, y)))
        .sum();
    let thresh = dp.m_prime_log2 + log_wp;
    let score_floor = -(n as f64) * dp.eps1;
    let mut passing: Vec<(usize, f64)> = Vec::new();
    for m in 0..cb.len() {
        let word = cb.word(m);
        let lw: f64 = word
            .iter()
            .zip(ys)
            .map(|(&x, y)| ch.log2_density_at(x, y))
            .sum();
        if lw == f64::NEG_INFINITY {
            continue;
        }
        if lw >= thresh && sf.score_seq(word, ys) >= score_floor {
            passing.push((m, lw));
        }
    }
    if passing.len() > dp.l {
        passing.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        passing.truncate(dp.l);
        passing.sort_by_key(|e| e.0);
    }
    passing.into_iter().map(|e| e.0).collect()
}

/// Whether y^n clears both decoder thresholds at a given input block,
/// before any list truncation.
pub fn passes_thresholds(
    ch: &Channel,
    dp: &DecoderParams,
    sf: &ScoreFamily,
    xs: &[usize],
    ys: &[Output],
) -> bool {
    let n = xs.len();
    let log_wp: f64 = ys
        .iter()
        .map(|y| crate::numeric::log2p(ch.mixture_density_at(&dp.reference, y)))
        .sum();
    let lw: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, y)| ch.log2_density_at(x, y))
        .sum();
    lw != f64::NEG_INFINITY
        && lw >= dp.m_prime_log2 + log_wp
        && sf.score_seq(xs, ys) >= -(n as f64) * dp.eps1
}

/// All decode lists of a finite-output channel, indexed by the flattened
/// output tuple (little-endian in the node index).
pub struct DecodeTable {
    n: usize,
    n_nodes: usize,
    lists: Vec<Vec<usize>>,
}

impl DecodeTable {
    pub fn list(&self, digits: &[usize]) -> &[usize] {
        let mut idx = 0usize;
        for i in (0..self.n).rev() {
            idx = idx * self.n_nodes + digits[i];
        }
        &self.lists[idx]
    }
}

pub fn build_decode_table(
    ch: &Channel,
    cb: &Codebook,
    dp: &DecoderParams,
    sf: &ScoreFamily,
    budget: u128,
) -> Result<DecodeTable> {
    if !ch.is_finite_output() {
        return Err(Error::WrongChannelKind { expected: "finite output alphabet" });
    }
    let n = cb.block_len();
    let total = (ch.n_nodes() as u128)
        .checked_pow(n as u32)
        .filter(|&t| t <= budget)
        .ok_or(Error::BudgetExceeded {
            needed: (ch.n_nodes() as f64).powi(n as i32) as u128,
            budget,
        })?;
    let mut lists = Vec::with_capacity(total as usize);
    let mut digits = vec![0usize; n];
    loop {
        let ys: Vec<Output> = digits.iter().map(|&j| Output::Symbol(j)).collect();
        lists.push(decode(ch, cb, dp, sf, &ys));
        if !odometer_next(&mut digits, ch.n_nodes()) {
            break;
        }
    }
    Ok(DecodeTable { n, n_nodes: ch.n_nodes(), lists })
}

/// Per-message list-membership probabilities under input block x^n, plus the
/// total probability mass seen (a sum-to-one check in exact mode).
pub fn exact_acceptance(
    ch: &Channel,
    cb: &Codebook,
    table: &DecodeTable,
    xs: &[usize],
) -> (Vec<f64>, f64) {
    let n = xs.len();
    let mut acc = vec![0.0; cb.len()];
    let mut total = 0.0;
    let mut digits = vec![0usize; n];
    let mut flat = 0usize;
    loop {
        let mut p = 1.0;
        for (i, &j) in digits.iter().enumerate() {
            p *= ch.node_prob(xs[i], j);
            if p == 0.0 {
                break;
            }
        }
        if p > 0.0 {
            total += p;
            for &m in &table.lists[flat] {
                acc[m] += p;
            }
        }
        flat += 1;
        if !odometer_next(&mut digits, ch.n_nodes()) {
            break;
        }
    }
    (acc, total)
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReportMode {
    Exact,
    MonteCarlo { samples: usize },
}

#[derive(Clone, Debug)]
pub struct SecurityReport {
    /// Worst-message and average probability that the list misses the sent
    /// message.
    pub eps_a_max: f64,
    pub eps_a_avg: f64,
    /// 95% interval for the worst observed message (Monte-Carlo mode only).
    pub eps_a_ci: Option<(f64, f64)>,
    /// Worst probability that an honest transmission plants a different
    /// specific message in the list.
    pub delta_c: f64,
    pub delta_c_ci: Option<(f64, f64)>,
    /// Second-largest acceptance probability over probed adversarial input
    /// blocks; exact maximum when `delta_d_is_exact`.
    pub delta_d: f64,
    pub delta_d_is_exact: bool,
    pub delta_d_ci: Option<(f64, f64)>,
    pub delta_d_adversary: Vec<usize>,
    /// For continuous adversaries: [heuristic lower bound, certified upper
    /// bound]. The true value is not computable.
    pub delta_dprime: Option<(f64, f64)>,
    /// Equivocation of the message given the output, and its Renyi variant.
    pub e: f64,
    pub e_alpha: f64,
    pub alpha: f64,
    pub e_is_exact: bool,
    pub discrete_binding_bound: Option<f64>,
    pub continuous_binding_bound: Option<f64>,
    pub mode: ReportMode,
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    /// Elementary-operation budget for exact enumeration.
    pub budget: u128,
    /// Monte-Carlo samples per message or adversary candidate.
    pub mc_samples: usize,
    pub seed: u64,
    /// Renyi order for the second equivocation figure.
    pub alpha: f64,
    /// Pairwise-distance guarantee of the codebook, if expurgated; enables
    /// the binding bounds.
    pub eps2: Option<f64>,
    /// Exponent parameter for the continuous binding bound; best grid value
    /// when absent.
    pub t: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            budget: 1 << 22,
            mc_samples: 100_000,
            seed: 0,
            alpha: 2.0,
            eps2: None,
            t: None,
        }
    }
}

/// Full security evaluation. Exact enumeration when the finite output and
/// adversary spaces fit the budget, otherwise Monte-Carlo with Clopper-
/// Pearson 95% intervals and a flagged mode.
pub fn evaluate_security(
    ch: &Channel,
    cb: &Codebook,
    dp: &DecoderParams,
    sf: &ScoreFamily,
    cert: Option<&ContinuousScoreCert>,
    cfg: &EvalConfig,
) -> Result<SecurityReport> {
    let n = cb.block_len();
    let m_count = cb.len();
    let exact_cost = if ch.is_finite_output() {
        (ch.n_nodes() as u128).checked_pow(n as u32).and_then(|y| {
            (ch.n_inputs() as u128)
                .checked_pow(n as u32)
                .and_then(|a| y.checked_mul(a + m_count as u128))
        })
    } else {
        None
    };
    let exact = matches!(exact_cost, Some(c) if c <= cfg.budget);

    let equiv = crate::info::equivocation(
        ch,
        cb,
        crate::info::AlphaOrder::new(cfg.alpha)?,
        cfg.budget,
        cfg.mc_samples,
        cfg.seed.wrapping_add(0x517c_c1b7_2722_0a95),
    )?;
    let e_is_exact = matches!(equiv.mode, crate::info::EvalMode::Exact);

    let discrete_binding_bound = cfg
        .eps2
        .map(|e2| binding_bound_discrete(sf, dp.eps1, e2, n));
    let continuous_binding_bound = match (cert, cfg.eps2) {
        (Some(c), Some(e2)) => Some(match cfg.t {
            Some(t) => binding_bound_continuous(c, dp.eps1, e2, n, t),
            None => binding_bound_continuous_best(c, dp.eps1, e2, n).0,
        }),
        _ => None,
    };

    if exact {
        let table = build_decode_table(ch, cb, dp, sf, cfg.budget)?;
        let mut eps_a = Vec::with_capacity(m_count);
        let mut delta_c = 0.0f64;
        for m in 0..m_count {
            let (acc, total) = exact_acceptance(ch, cb, &table, cb.word(m));
            assert!(
                (total - 1.0).abs() <= 1e-9,
                "output probabilities summed to {total}"
            );
            eps_a.push(1.0 - acc[m]);
            for (mp, &a) in acc.iter().enumerate() {
                if mp != m {
                    delta_c = delta_c.max(a);
                }
            }
        }
        let mut delta_d = 0.0f64;
        let mut adversary = vec![0usize; n];
        let mut digits = vec![0usize; n];
        loop {
            let (acc, _) = exact_acceptance(ch, cb, &table, &digits);
            let second = second_largest(&acc);
            if second > delta_d {
                delta_d = second;
                adversary = digits.clone();
            }
            if !odometer_next(&mut digits, ch.n_inputs()) {
                break;
            }
        }
        let eps_a_max = eps_a.iter().cloned().fold(0.0, f64::max);
        let eps_a_avg = eps_a.iter().sum::<f64>() / m_count as f64;
        return Ok(SecurityReport {
            eps_a_max,
            eps_a_avg,
            eps_a_ci: None,
            delta_c,
            delta_c_ci: None,
            delta_d,
            delta_d_is_exact: true,
            delta_d_ci: None,
            delta_d_adversary: adversary,
            delta_dprime: None,
            e: equiv.e,
            e_alpha: equiv.e_alpha,
            alpha: cfg.alpha,
            e_is_exact,
            discrete_binding_bound,
            continuous_binding_bound,
            mode: ReportMode::Exact,
        });
    }

    // Monte-Carlo path: one PRNG stream per message so the reduction is
    // order-independent.
    let samples = cfg.mc_samples;
    let honest: Vec<(u64, Vec<u64>)> = (0..m_count)
        .into_par_iter()
        .map(|m| {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(m as u64);
            let word = cb.word(m);
            let mut self_hits = 0u64;
            let mut other_hits = vec![0u64; m_count];
            for _ in 0..samples {
                let ys: Vec<Output> =
                    word.iter().map(|&x| ch.sample(x, &mut rng)).collect();
                let list = decode(ch, cb, dp, sf, &ys);
                for &d in &list {
                    if d == m {
                        self_hits += 1;
                    } else {
                        other_hits[d] += 1;
                    }
                }
            }
            (self_hits, other_hits)
        })
        .collect();

    let mut eps_a_max = 0.0f64;
    let mut eps_a_ci = (0.0, 0.0);
    let mut eps_a_sum = 0.0f64;
    let mut delta_c = 0.0f64;
    let mut delta_c_hits = 0u64;
    for (self_hits, other_hits) in &honest {
        let miss = 1.0 - *self_hits as f64 / samples as f64;
        eps_a_sum += miss;
        if miss >= eps_a_max {
            eps_a_max = miss;
            let (alo, ahi) = clopper_pearson(*self_hits, samples as u64, 0.95);
            eps_a_ci = (1.0 - ahi, 1.0 - alo);
        }
        for &h in other_hits {
            let a = h as f64 / samples as f64;
            if a >= delta_c {
                delta_c = a;
                delta_c_hits = h;
            }
        }
    }
    let delta_c_ci = clopper_pearson(delta_c_hits, samples as u64, 0.95);

    let adv = adversary_search(ch, cb, dp, sf, SearchStrategy::RandomRestart(8), cfg)?;
    let greedy = adversary_search(ch, cb, dp, sf, SearchStrategy::CoordinateGreedy, cfg)?;
    let best = if greedy.second_acceptance > adv.second_acceptance {
        greedy
    } else {
        adv
    };

    let delta_dprime = match (ch.gaussian_params(), cert, cfg.eps2) {
        (Some(_), Some(c), Some(e2)) => {
            let probe = continuous_adversary_search(ch, cb, dp, sf, cfg)?;
            let upper = match cfg.t {
                Some(t) => binding_bound_continuous(c, dp.eps1, e2, n, t),
                None => binding_bound_continuous_best(c, dp.eps1, e2, n).0,
            };
            Some((probe.second_acceptance, upper.min(1.0)))
        }
        _ => None,
    };

    Ok(SecurityReport {
        eps_a_max,
        eps_a_avg: eps_a_sum / m_count as f64,
        eps_a_ci: Some(eps_a_ci),
        delta_c,
        delta_c_ci: Some(delta_c_ci),
        delta_d: best.second_acceptance,
        delta_d_is_exact: false,
        delta_d_ci: best.ci,
        delta_d_adversary: best.x_adv,
        delta_dprime,
        e: equiv.e,
        e_alpha: equiv.e_alpha,
        alpha: cfg.alpha,
        e_is_exact,
        discrete_binding_bound,
        continuous_binding_bound,
        mode: ReportMode::MonteCarlo { samples },
    })
}

/// Average-form union bound on the list error: per-message miss probability
/// plus the mean spillover into other decode sets divided by the list size.
/// Membership here is threshold-only (no truncation).
pub fn list_error_union_bound(
    ch: &Channel,
    cb: &Codebook,
    dp: &DecoderParams,
    sf: &ScoreFamily,
    budget: u128,
) -> Result<f64> {
    if !ch.is_finite_output() {
        return Err(Error::WrongChannelKind { expected: "finite output alphabet" });
    }
    let n = cb.block_len();
    let m_count = cb.len();
    (ch.n_nodes() as u128)
        .checked_pow(n as u32)
        .filter(|&t| t.saturating_mul(m_count as u128) <= budget)
        .ok_or(Error::BudgetExceeded { needed: u128::MAX, budget })?;
    let mut miss = vec![0.0f64; m_count];
    let mut spill = vec![0.0f64; m_count];
    let mut digits = vec![0usize; n];
    loop {
        let ys: Vec<Output> = digits.iter().map(|&j| Output::Symbol(j)).collect();
        let pass: Vec<bool> = (0..m_count)
            .map(|m| passes_thresholds(ch, dp, sf, cb.word(m), &ys))
            .collect();
        for i in 0..m_count {
            let mut p = 1.0;
            for (k, &j) in digits.iter().enumerate() {
                p *= ch.node_prob(cb.word(i)[k], j);
            }
            if p == 0.0 {
                continue;
            }
            if !pass[i] {
                miss[i] += p;
            }
            let others = pass
                .iter()
                .enumerate()
                .filter(|&(j, &ok)| j != i && ok)
                .count();
            spill[i] += p * others as f64;
        }
        if !odometer_next(&mut digits, ch.n_nodes()) {
            break;
        }
    }
    let l = dp.l as f64;
    Ok((0..m_count)
        .map(|i| miss[i] + spill[i] / l)
        .sum::<f64>()
        / m_count as f64)
}

/// delta_D bound for expurgated books over the finite alphabet:
/// zeta2 / (n * [zeta1*eps2/2 - eps1]_+^2); +inf when the margin closes.
pub fn binding_bound_discrete(sf: &ScoreFamily, eps1: f64, eps2: f64, n: usize) -> f64 {
    let margin = sf.zeta1 * eps2 / 2.0 - eps1;
    if !(margin > 0.0) {
        return f64::INFINITY;
    }
    sf.zeta2 / (n as f64 * margin * margin)
}

/// delta_D' bound for continuous adversaries:
/// 2^{t n (2 eps1 - (eps2/4) * decay(zeta3 * eps2 / 4))} + zetabar2/(n eps1^2).
/// The exponent parameter snaps to the nearest certified grid value.
pub fn binding_bound_continuous(
    cert: &ContinuousScoreCert,
    eps1: f64,
    eps2: f64,
    n: usize,
    t: f64,
) -> f64 {
    if !(eps1 > 0.0) {
        return f64::INFINITY;
    }
    let ti = cert
        .t_grid
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap()
        })
        .map(|(i, _)| i)
        .expect("certificate has an empty exponent grid");
    let tg = cert.t_grid[ti];
    let r = cert.zeta3 * eps2 / 4.0;
    let rate = 2.0 * eps1 - (eps2 / 4.0) * cert.zetabar1_at(ti, r);
    (tg * n as f64 * rate).exp2() + cert.zetabar2 / (n as f64 * eps1 * eps1)
}

/// Minimum of the continuous bound over the certified exponent grid.
pub fn binding_bound_continuous_best(
    cert: &ContinuousScoreCert,
    eps1: f64,
    eps2: f64,
    n: usize,
) -> (f64, f64) {
    cert.t_grid
        .iter()
        .map(|&t| (binding_bound_continuous(cert, eps1, eps2, n, t), t))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("certificate has an empty exponent grid")
}

/// Whether the exponent term of the continuous bound actually decays.
pub fn continuous_bound_is_vacuous(cert: &ContinuousScoreCert, eps1: f64, eps2: f64) -> bool {
    cert.t_grid.iter().enumerate().all(|(ti, _)| {
        let r = cert.zeta3 * eps2 / 4.0;
        2.0 * eps1 - (eps2 / 4.0) * cert.zetabar1_at(ti, r) >= 0.0
    })
}

#[derive(Clone, Debug)]
pub enum SearchStrategy {
    Exhaustive,
    CoordinateGreedy,
    RandomRestart(usize),
}

#[derive(Clone, Debug)]
pub struct AdversaryOutcome {
    pub x_adv: Vec<usize>,
    /// Second-largest list-membership probability at the adversary block.
    pub second_acceptance: f64,
    /// True when the value is the exact maximum over all input blocks.
    pub exhaustive: bool,
    /// 95% interval for the runner-up message's acceptance (Monte-Carlo).
    pub ci: Option<(f64, f64)>,
}

struct AcceptanceOracle<'a> {
    ch: &'a Channel,
    cb: &'a Codebook,
    dp: &'a DecoderParams,
    sf: &'a ScoreFamily,
    table: Option<DecodeTable>,
    samples: usize,
    seed: u64,
}

impl<'a> AcceptanceOracle<'a> {
    /// Per-message acceptance plus the hit count of the runner-up message
    /// when estimated by sampling.
    fn eval(&self, xs: &[usize]) -> (Vec<f64>, Option<u64>) {
        if let Some(table) = &self.table {
            let (acc, _) = exact_acceptance(self.ch, self.cb, table, xs);
            (acc, None)
        } else {
            let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
            let stream = xs
                .iter()
                .fold(0u64, |h, &s| h.wrapping_mul(1_000_003).wrapping_add(s as u64 + 1));
            rng.set_stream(stream);
            let mut hits = vec![0u64; self.cb.len()];
            for _ in 0..self.samples {
                let ys: Vec<Output> = xs
                    .iter()
                    .map(|&x| self.ch.sample(x, &mut rng))
                    .collect();
                for &d in &decode(self.ch, self.cb, self.dp, self.sf, &ys) {
                    hits[d] += 1;
                }
            }
            let acc: Vec<f64> = hits
                .iter()
                .map(|&h| h as f64 / self.samples as f64)
                .collect();
            let mut sorted = hits.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            (acc, Some(sorted[1]))
        }
    }

    fn objective(&self, xs: &[usize]) -> (f64, Option<u64>) {
        let (acc, runner) = self.eval(xs);
        (second_largest(&acc), runner)
    }
}

/// Search for the strongest discrete adversary block. Exhaustive mode is the
/// exact maximum; the heuristics certify lower bounds only.
pub fn adversary_search(
    ch: &Channel,
    cb: &Codebook,
    dp: &DecoderParams,
    sf: &ScoreFamily,
    strategy: SearchStrategy,
    cfg: &EvalConfig,
) -> Result<AdversaryOutcome> {
    let n = cb.block_len();
    let d = ch.n_inputs();
    let exact_ok = ch.is_finite_output()
        && (ch.n_nodes() as u128)
            .checked_pow(n as u32)
            .map(|y| y <= cfg.budget)
            .unwrap_or(false);
    let oracle = AcceptanceOracle {
        ch,
        cb,
        dp,
        sf,
        table: if exact_ok {
            Some(build_decode_table(ch, cb, dp, sf, cfg.budget)?)
        } else {
            None
        },
        samples: cfg.mc_samples,
        seed: cfg.seed.wrapping_add(0xadf0_c3b2),
    };

    let finish = |xs: Vec<usize>, val: f64, runner: Option<u64>, exhaustive: bool| {
        let ci = runner.map(|h| clopper_pearson(h, cfg.mc_samples as u64, 0.95));
        AdversaryOutcome { x_adv: xs, second_acceptance: val, exhaustive, ci }
    };

    match strategy {
        SearchStrategy::Exhaustive => {
            (d as u128)
                .checked_pow(n as u32)
                .filter(|&s| s <= cfg.budget)
                .ok_or(Error::BudgetExceeded { needed: u128::MAX, budget: cfg.budget })?;
            let mut best = (vec![0usize; n], f64::NEG_INFINITY, None);
            let mut digits = vec![0usize; n];
            loop {
                let (val, runner) = oracle.objective(&digits);
                if val > best.1 {
                    best = (digits.clone(), val, runner);
                }
                if !odometer_next(&mut digits, d) {
                    break;
                }
            }
            Ok(finish(best.0, best.1, best.2, true))
        }
        SearchStrategy::CoordinateGreedy => {
            let start = cb.word(0).to_vec();
            let (xs, val, runner) = greedy_from(&oracle, start, d);
            Ok(finish(xs, val, runner, false))
        }
        SearchStrategy::RandomRestart(restarts) => {
            let mut best: (Vec<usize>, f64, Option<u64>) =
                (cb.word(0).to_vec(), f64::NEG_INFINITY, None);
            for rs in 0..restarts.max(1) {
                let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x5ee3);
                rng.set_stream(rs as u64);
                let start: Vec<usize> =
                    (0..n).map(|_| rng.random_range(0..d)).collect();
                let (xs, val, runner) = greedy_from(&oracle, start, d);
                if val > best.1 {
                    best = (xs, val, runner);
                }
            }
            Ok(finish(best.0, best.1, best.2, false))
        }
    }
}

fn greedy_from(
    oracle: &AcceptanceOracle,
    mut xs: Vec<usize>,
    d: usize,
) -> (Vec<usize>, f64, Option<u64>) {
    let n = xs.len();
    let (mut val, mut runner) = oracle.objective(&xs);
    for _sweep in 0..6 {
        let mut improved = false;
        for i in 0..n {
            let original = xs[i];
            let mut best_sym = original;
            for s in 0..d {
                if s == original {
                    continue;
                }
                xs[i] = s;
                let (v, r) = oracle.objective(&xs);
                if v > val {
                    val = v;
                    runner = r;
                    best_sym = s;
                    improved = true;
                }
            }
            xs[i] = best_sym;
        }
        if !improved {
            break;
        }
    }
    (xs, val, runner)
}

#[derive(Clone, Debug)]
pub struct ContinuousAdversaryOutcome {
    pub means: Vec<f64>,
    pub second_acceptance: f64,
    pub ci: (f64, f64),
}

/// Heuristic continuous adversary for additive Gaussian channels: coordinate
/// descent over a constellation-offset grid (constellation points plus
/// quarter points between adjacent ones), acceptance estimated by sampling.
pub fn continuous_adversary_search(
    ch: &Channel,
    cb: &Codebook,
    dp: &DecoderParams,
    sf: &ScoreFamily,
    cfg: &EvalConfig,
) -> Result<ContinuousAdversaryOutcome> {
    let Some((means, variance, _)) = ch.gaussian_params() else {
        return Err(Error::WrongChannelKind { expected: "additive Gaussian" });
    };
    let mut grid: Vec<f64> = means.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let base = grid.clone();
    for w in base.windows(2) {
        for k in 1..4 {
            grid.push(w[0] + (w[1] - w[0]) * k as f64 / 4.0);
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let n = cb.block_len();
    let sigma = variance.sqrt();
    let eval = |ms: &[f64], stream: u64| -> (Vec<f64>, u64) {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(0x60a1));
        rng.set_stream(stream);
        let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
        let mut hits = vec![0u64; cb.len()];
        for _ in 0..cfg.mc_samples {
            let ys: Vec<Output> = ms
                .iter()
                .map(|&mu| Output::Real(mu + rand_distr::Distribution::sample(&normal, &mut rng)))
                .collect();
            for &d in &decode(ch, cb, dp, sf, &ys) {
                hits[d] += 1;
            }
        }
        let mut sorted = hits.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        (
            hits.iter().map(|&h| h as f64 / cfg.mc_samples as f64).collect(),
            sorted[1],
        )
    };

    // Midpoint-everywhere start: the classic equidistant probe.
    let mid = 0.5 * (grid[0] + grid[grid.len() - 1]);
    let mut xs = vec![mid; n];
    let mut stream = 0u64;
    let (acc, runner) = eval(&xs, stream);
    let mut val = second_largest(&acc);
    let mut best_runner = runner;
    for _sweep in 0..4 {
        let mut improved = false;
        for i in 0..n {
            let original = xs[i];
            let mut best_here = original;
            for &g in &grid {
                if g == original {
                    continue;
                }
                xs[i] = g;
                stream += 1;
                let (acc, runner) = eval(&xs, stream);
                let v = second_largest(&acc);
                if v > val {
                    val = v;
                    best_here = g;
                    best_runner = runner;
                    improved = true;
                }
            }
            xs[i] = best_here;
        }
        if !improved {
            break;
        }
    }
    let ci = clopper_pearson(best_runner, cfg.mc_samples as u64, 0.95);
    Ok(ContinuousAdversaryOutcome { means: xs, second_acceptance: val, ci })
}
