//! Bit-string commitment on top of a secure list code.
//!
//! Alice commits to a key k by sending a uniformly random message from the
//! hash fiber f^{-1}(k) through the channel; the reveal phase discloses the
//! message and Bob accepts iff it lands in his decoded list. Concealing is
//! measured by the total-variation distance between per-key output laws,
//! binding is inherited from the code's impersonation parameter.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::channel::{Channel, Output};
use crate::info::{self, AlphaOrder, JointFiniteY};
use crate::numeric;
use crate::scores::ScoreFamily;
use crate::slc::{build_decode_table, decode, Codebook, DecoderParams};
use crate::{Error, Result};

/// Largest message space enumerated exhaustively (fibers, distances).
const MAX_ENUMERATED_MESSAGES: u128 = 1 << 16;

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Inverse of a mod p for prime p (Fermat).
fn mod_inv(a: u64, p: u64) -> u64 {
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    result
}

fn rank_mod_p(matrix: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = matrix.to_vec();
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| m[r][col] % p != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = mod_inv(m[rank][col] % p, p);
        for c in col..cols {
            m[rank][c] = m[rank][c] % p * inv % p;
        }
        for r in 0..rows {
            if r != rank && m[r][col] % p != 0 {
                let factor = m[r][col] % p;
                for c in col..cols {
                    m[r][c] = (m[r][c] + (p - factor) * m[rank][c]) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// A surjective linear hash over F_p from m-digit messages to k-digit keys,
/// drawn from the Toeplitz family and resampled until full rank. Full rank
/// makes every fiber the same size p^(m-k).
#[derive(Clone, Debug)]
pub struct HashSpec {
    prime: u64,
    source_dim: usize,
    target_dim: usize,
    matrix: Vec<Vec<u64>>,
    seed: u64,
}

impl HashSpec {
    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn matrix(&self) -> &[Vec<u64>] {
        &self.matrix
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn message_count(&self) -> u128 {
        (self.prime as u128).pow(self.source_dim as u32)
    }

    pub fn key_count(&self) -> u128 {
        (self.prime as u128).pow(self.target_dim as u32)
    }

    /// Little-endian base-p digits of a message index.
    pub fn message_digits(&self, index: u64) -> Vec<u64> {
        let mut rest = index;
        (0..self.source_dim)
            .map(|_| {
                let d = rest % self.prime;
                rest /= self.prime;
                d
            })
            .collect()
    }

    fn key_index(&self, digits: &[u64]) -> u64 {
        digits.iter().rev().fold(0, |acc, &d| acc * self.prime + d)
    }

    /// Hash a message index to a key index.
    pub fn apply(&self, message: u64) -> u64 {
        let msg = self.message_digits(message);
        let key: Vec<u64> = self
            .matrix
            .iter()
            .map(|row| row.iter().zip(&msg).map(|(&a, &x)| a * x % self.prime).sum::<u64>() % self.prime)
            .collect();
        self.key_index(&key)
    }

    /// All message indices hashing to the given key, by exhaustive scan.
    pub fn fiber(&self, key: u64) -> Result<Vec<u64>> {
        let total = self.message_count();
        if total > MAX_ENUMERATED_MESSAGES {
            return Err(Error::BudgetExceeded { needed: total, budget: MAX_ENUMERATED_MESSAGES });
        }
        Ok((0..total as u64).filter(|&m| self.apply(m) == key).collect())
    }
}

/// Draw a full-rank Toeplitz matrix over F_p. The Toeplitz family is
/// pairwise-uniform (collision probability p^-k for distinct messages), and
/// full rank makes the hash regular.
pub fn sample_regular_hash(p: u64, source_dim: usize, target_dim: usize, seed: u64) -> Result<HashSpec> {
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("{p} is not prime")));
    }
    if target_dim == 0 || target_dim > source_dim {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= target dim <= source dim, got {target_dim} and {source_dim}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..256 {
        let diag: Vec<u64> =
            (0..target_dim + source_dim - 1).map(|_| rng.random_range(0..p)).collect();
        let matrix: Vec<Vec<u64>> = (0..target_dim)
            .map(|i| (0..source_dim).map(|j| diag[i + source_dim - 1 - j]).collect())
            .collect();
        if rank_mod_p(&matrix, p) == target_dim {
            return Ok(HashSpec {
                prime: p,
                source_dim,
                target_dim,
                matrix,
                seed,
            });
        }
    }
    Err(Error::Infeasible("could not draw a full-rank Toeplitz matrix".into()))
}

/// A secure list code paired with a regular hash, optionally restricted to a
/// retained key subset (with all of each retained key's fiber kept).
#[derive(Clone, Debug)]
pub struct CommitmentScheme {
    codebook: Codebook,
    params: DecoderParams,
    scores: ScoreFamily,
    hash: HashSpec,
    retained_keys: Option<Vec<u64>>,
}

impl CommitmentScheme {
    pub fn new(
        codebook: Codebook,
        params: DecoderParams,
        scores: ScoreFamily,
        hash: HashSpec,
    ) -> Result<Self> {
        if codebook.len() as u128 != hash.message_count() {
            return Err(Error::InvalidParameter(format!(
                "message space mismatch: codebook has {} words, hash indexes {}",
                codebook.len(),
                hash.message_count()
            )));
        }
        Ok(Self { codebook, params, scores, hash, retained_keys: None })
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn params(&self) -> &DecoderParams {
        &self.params
    }

    pub fn scores(&self) -> &ScoreFamily {
        &self.scores
    }

    pub fn hash(&self) -> &HashSpec {
        &self.hash
    }

    /// Restrict the scheme to a key subset; fibers of retained keys survive whole.
    pub fn with_retained_keys(mut self, keys: Vec<u64>) -> Result<Self> {
        let total = self.hash.key_count();
        if keys.is_empty() || keys.iter().any(|&k| k as u128 >= total) {
            return Err(Error::InvalidParameter("retained key set must be nonempty and in range".into()));
        }
        let mut keys = keys;
        keys.sort_unstable();
        keys.dedup();
        self.retained_keys = Some(keys);
        Ok(self)
    }

    /// Active keys: the retained subset if present, otherwise all of them.
    pub fn active_keys(&self) -> Vec<u64> {
        match &self.retained_keys {
            Some(k) => k.clone(),
            None => (0..self.hash.key_count() as u64).collect(),
        }
    }

    pub fn retained_keys(&self) -> Option<&[u64]> {
        self.retained_keys.as_deref()
    }

    /// Active messages: the union of active-key fibers, ascending.
    pub fn active_messages(&self) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        for k in self.active_keys() {
            out.extend(self.hash.fiber(k)?);
        }
        out.sort_unstable();
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

/// One protocol run. In an honest run `message` is Alice's fiber sample and
/// `revealed` equals it; a dishonest run records the adversary's reveal.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub key: u64,
    pub message: Option<u64>,
    pub output: Vec<Output>,
    pub list: Vec<usize>,
    pub revealed: u64,
    pub verdict: Verdict,
    /// Hash of the revealed message, reported only on acceptance.
    pub recovered_key: Option<u64>,
}

/// Dishonest commit phase: an arbitrary input block and a fixed reveal.
#[derive(Clone, Debug)]
pub struct Adversary {
    pub input: Vec<usize>,
    pub reveal: u64,
}

/// Run the commit and reveal phases once. Honest Alice draws her message
/// uniformly from the fiber of `key`; Bob accepts iff the revealed message is
/// in his list. The reveal phase travels over the in-process noiseless side
/// channel, so it appears here simply as the revealed index.
pub fn run_protocol(
    ch: &Channel,
    scheme: &CommitmentScheme,
    key: u64,
    adversary: Option<&Adversary>,
    seed: u64,
) -> Result<Transcript> {
    if !scheme.active_keys().contains(&key) {
        return Err(Error::InvalidParameter(format!("key {key} is outside the active key set")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = scheme.codebook.block_len();
    let product = ch.product(n);
    let (message, xs, revealed) = match adversary {
        None => {
            let fiber = scheme.hash.fiber(key)?;
            let m = fiber[rng.random_range(0..fiber.len())];
            (Some(m), scheme.codebook.word(m as usize).to_vec(), m)
        }
        Some(adv) => {
            if adv.input.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "adversary block length {} does not match the code length {n}",
                    adv.input.len()
                )));
            }
            (None, adv.input.clone(), adv.reveal)
        }
    };
    let output = product.sample_seq(&xs, &mut rng);
    let list = decode(ch, &scheme.codebook, &scheme.params, &scheme.scores, &output);
    let verdict = if list.contains(&(revealed as usize)) { Verdict::Accept } else { Verdict::Reject };
    let recovered_key = (verdict == Verdict::Accept).then(|| scheme.hash.apply(revealed));
    Ok(Transcript { key, message, output, list, revealed, verdict, recovered_key })
}

/// Per-active-key conditional output laws over the flattened output tuple,
/// plus the overall mixture, by exhaustive enumeration.
fn key_conditionals(ch: &Channel, scheme: &CommitmentScheme, budget: u128) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if !ch.is_finite_output() {
        return Err(Error::WrongChannelKind { expected: "finite output alphabet" });
    }
    let n = scheme.codebook.block_len();
    let keys = scheme.active_keys();
    let space = (ch.n_nodes() as u128)
        .checked_pow(n as u32)
        .filter(|&t| t.checked_mul(keys.len() as u128).is_some_and(|c| c <= budget))
        .ok_or(Error::BudgetExceeded {
            needed: (ch.n_nodes() as f64).powi(n as i32) as u128,
            budget,
        })?;
    let mut conds = vec![vec![0.0; space as usize]; keys.len()];
    for (ki, &k) in keys.iter().enumerate() {
        let fiber = scheme.hash.fiber(k)?;
        let share = 1.0 / fiber.len() as f64;
        for &m in &fiber {
            let word = scheme.codebook.word(m as usize);
            let mut digits = vec![0usize; n];
            let mut flat = 0usize;
            loop {
                let mut w = share;
                for (i, &j) in digits.iter().enumerate() {
                    w *= ch.node_prob(word[i], j);
                    if w == 0.0 {
                        break;
                    }
                }
                conds[ki][flat] += w;
                flat += 1;
                if !numeric::odometer_next(&mut digits, ch.n_nodes()) {
                    break;
                }
            }
        }
    }
    let mut mixture = vec![0.0; space as usize];
    for cond in &conds {
        for (mx, &c) in mixture.iter_mut().zip(cond) {
            *mx += c / conds.len() as f64;
        }
    }
    Ok((conds, mixture))
}

fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Exact concealing distances of the scheme's active keys: the worst pairwise
/// total variation between per-key output laws, and its averaged companion
/// (mean distance to the mixture). The mean never exceeds the pairwise worst
/// case, and the worst case is within twice the largest distance to the mixture.
#[derive(Clone, Debug)]
pub struct ConcealingReport {
    pub delta_e: f64,
    pub delta_e_bar: f64,
}

pub fn concealing_distance(ch: &Channel, scheme: &CommitmentScheme, budget: u128) -> Result<ConcealingReport> {
    let (conds, mixture) = key_conditionals(ch, scheme, budget)?;
    let mut delta_e = 0.0_f64;
    for (i, a) in conds.iter().enumerate() {
        for b in conds.iter().skip(i + 1) {
            delta_e = delta_e.max(tv_distance(a, b));
        }
    }
    let dists: Vec<f64> = conds.iter().map(|c| tv_distance(c, &mixture)).collect();
    let delta_e_bar = dists.iter().sum::<f64>() / conds.len() as f64;
    let worst_to_mixture = dists.iter().cloned().fold(0.0_f64, f64::max);
    debug_assert!(delta_e_bar <= delta_e + 1e-12);
    debug_assert!(delta_e <= 2.0 * worst_to_mixture + 1e-12);
    Ok(ConcealingReport { delta_e, delta_e_bar })
}

/// The concealing bound value at exponent t: (3p/(p-1)) p^(tk/(1+t)) 2^(-(t/(1+t)) H),
/// where H is the order-(1+t) conditional entropy of the message given the output.
pub fn concealing_bound_value(p: u64, target_dim: usize, h_renyi: f64, t: f64) -> f64 {
    let pf = p as f64;
    let log2_bound = (3.0 * pf / (pf - 1.0)).log2()
        + t / (1.0 + t) * (target_dim as f64 * pf.log2() - h_renyi);
    log2_bound.exp2()
}

/// Concealing bound for the scheme's hash, with the key expurgation that
/// realizes it: the bound is minimized over a fixed 32-point log grid of
/// exponents, and the retained keys are the p^(k-1) whose conditional output
/// law sits closest to the average (the constructive form of the
/// Markov-selection step).
#[derive(Clone, Debug)]
pub struct ConcealingBound {
    pub bound: f64,
    pub t_star: f64,
    pub h_renyi_star: f64,
    pub retained_keys: Vec<u64>,
    pub retained_messages: Vec<u64>,
}

/// 32 log-spaced exponents on (0, 1].
fn exponent_grid() -> Vec<f64> {
    (0..32).map(|j| (-14.0 * (31 - j) as f64 / 31.0).exp2()).collect()
}

pub fn concealing_bound(ch: &Channel, scheme: &CommitmentScheme, budget: u128) -> Result<ConcealingBound> {
    if scheme.retained_keys.is_some() {
        return Err(Error::InvalidParameter(
            "concealing bound expects the unrestricted scheme; it derives the retention itself".into(),
        ));
    }
    let joint = info::code_joint(ch, &scheme.codebook, budget)?;
    let hash = &scheme.hash;
    let (mut best, mut t_star, mut h_star) = (f64::INFINITY, 0.0, 0.0);
    for t in exponent_grid() {
        let h = info::cond_renyi_entropy_my(&joint, AlphaOrder::new(1.0 + t)?)?;
        let b = concealing_bound_value(hash.prime, hash.target_dim, h, t);
        if b < best {
            best = b;
            t_star = t;
            h_star = h;
        }
    }

    // Rank keys by distance to the average output law and keep the best p^(k-1).
    let (conds, mixture) = key_conditionals(ch, scheme, budget)?;
    let mut ranked: Vec<(f64, u64)> = conds
        .iter()
        .enumerate()
        .map(|(k, c)| (tv_distance(c, &mixture), k as u64))
        .collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let keep = (hash.key_count() / hash.prime as u128) as usize;
    let mut retained_keys: Vec<u64> = ranked.iter().take(keep.max(1)).map(|&(_, k)| k).collect();
    retained_keys.sort_unstable();
    let mut retained_messages = Vec::new();
    for &k in &retained_keys {
        retained_messages.extend(hash.fiber(k)?);
    }
    retained_messages.sort_unstable();
    Ok(ConcealingBound { bound: best, t_star, h_renyi_star: h_star, retained_keys, retained_messages })
}

/// Among `tries` hash seeds, pick the one whose exact averaged concealing
/// distance is smallest. The randomized argument only promises a good seed
/// exists; this searches for one and reports the best found.
pub fn best_hash_for_scheme(
    ch: &Channel,
    codebook: &Codebook,
    params: &DecoderParams,
    scores: &ScoreFamily,
    p: u64,
    source_dim: usize,
    target_dim: usize,
    tries: u64,
    budget: u128,
) -> Result<CommitmentScheme> {
    let mut best: Option<(f64, CommitmentScheme)> = None;
    for seed in 0..tries.max(1) {
        let hash = sample_regular_hash(p, source_dim, target_dim, seed)?;
        let scheme =
            CommitmentScheme::new(codebook.clone(), params.clone(), scores.clone(), hash)?;
        let rep = concealing_distance(ch, &scheme, budget)?;
        if best.as_ref().is_none_or(|(b, _)| rep.delta_e_bar < *b) {
            best = Some((rep.delta_e_bar, scheme));
        }
    }
    Ok(best.expect("at least one seed tried").1)
}

/// Exact worst-pair double-reveal probability for a fixed adversary input:
/// the largest probability, over distinct message pairs, that both messages
/// land in Bob's list. Binding inherits from the code: this never exceeds the
/// code's second-acceptance parameter.
pub fn double_reveal_success(
    ch: &Channel,
    scheme: &CommitmentScheme,
    input: &[usize],
    budget: u128,
) -> Result<f64> {
    let cb = &scheme.codebook;
    if input.len() != cb.block_len() {
        return Err(Error::InvalidParameter(format!(
            "adversary block length {} does not match the code length {}",
            input.len(),
            cb.block_len()
        )));
    }
    let table = build_decode_table(ch, cb, &scheme.params, &scheme.scores, budget)?;
    let m_count = cb.len();
    let mut pair_mass = vec![0.0; m_count * m_count];
    let mut digits = vec![0usize; input.len()];
    loop {
        let mut w = 1.0;
        for (i, &j) in digits.iter().enumerate() {
            w *= ch.node_prob(input[i], j);
            if w == 0.0 {
                break;
            }
        }
        if w > 0.0 {
            let list = table.list(&digits);
            for (a, &ma) in list.iter().enumerate() {
                for &mb in list.iter().skip(a + 1) {
                    pair_mass[ma * m_count + mb] += w;
                }
            }
        }
        if !numeric::odometer_next(&mut digits, ch.n_nodes()) {
            break;
        }
    }
    Ok(pair_mass.into_iter().fold(0.0, f64::max))
}

/// Lower bound on the hashed joint's distance from independence: for every
/// threshold gamma,
///   (1/2)||P_{f(M)Y} - P_{f(M)} x P_Y||_1
///     >= P{ log2 1/P(M|Y) < gamma } - 2^gamma / |Im f|.
/// Returns true iff the inequality holds at every supplied gamma; a failure
/// signals a computation bug rather than a property of the inputs.
pub fn leftover_lower_bound_check(joint: &JointFiniteY, hash: &HashSpec, gammas: &[f64]) -> Result<bool> {
    if joint.n_m() as u128 != hash.message_count() {
        return Err(Error::InvalidParameter(format!(
            "joint has {} messages but the hash indexes {}",
            joint.n_m(),
            hash.message_count()
        )));
    }
    let n_y = joint.n_y();
    let n_k = hash.key_count() as usize;
    let mut hashed = vec![0.0; n_k * n_y];
    for m in 0..joint.n_m() {
        let k = hash.apply(m as u64) as usize;
        for y in 0..n_y {
            hashed[k * n_y + y] += joint.prob(m, y);
        }
    }
    let p_y = joint.marginal_y();
    let p_k: Vec<f64> = (0..n_k).map(|k| hashed[k * n_y..(k + 1) * n_y].iter().sum()).collect();
    let mut lhs = 0.0;
    for k in 0..n_k {
        for y in 0..n_y {
            lhs += (hashed[k * n_y + y] - p_k[k] * p_y[y]).abs();
        }
    }
    lhs *= 0.5;

    for &gamma in gammas {
        let mut mass = 0.0;
        for m in 0..joint.n_m() {
            for y in 0..n_y {
                let pmy = joint.prob(m, y);
                if pmy > 0.0 && -(pmy / p_y[y]).log2() < gamma {
                    mass += pmy;
                }
            }
        }
        let rhs = mass - gamma.exp2() / n_k as f64;
        if lhs < rhs - 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::InputDistribution;
    use crate::slc::{evaluate_security, random_codebook, EvalConfig};
    use approx::assert_abs_diff_eq;

    fn bsc(q: f64) -> Channel {
        Channel::make_bsc(q).unwrap()
    }

    fn uniform_params(ch: &Channel, l: usize, m_prime: f64, eps1: f64) -> DecoderParams {
        DecoderParams::new(l, m_prime, eps1, InputDistribution::uniform(ch.n_inputs())).unwrap()
    }

    #[test]
    fn primality_and_inverse_helpers() {
        assert!(is_prime(2) && is_prime(3) && is_prime(13));
        assert!(!is_prime(1) && !is_prime(9) && !is_prime(15));
        for p in [3u64, 5, 13] {
            for a in 1..p {
                assert_eq!(a * mod_inv(a, p) % p, 1);
            }
        }
    }

    #[test]
    fn hash_is_regular_with_equal_fibers() {
        let hash = sample_regular_hash(2, 4, 2, 7).unwrap();
        let mut seen = vec![0usize; hash.key_count() as usize];
        for m in 0..hash.message_count() as u64 {
            seen[hash.apply(m) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c == 4), "fibers were {seen:?}");
        for k in 0..hash.key_count() as u64 {
            let fiber = hash.fiber(k).unwrap();
            assert_eq!(fiber.len(), 4);
            assert!(fiber.iter().all(|&m| hash.apply(m) == k));
        }
    }

    #[test]
    fn square_hash_is_a_bijection() {
        let hash = sample_regular_hash(3, 3, 3, 1).unwrap();
        let mut image: Vec<u64> =
            (0..hash.message_count() as u64).map(|m| hash.apply(m)).collect();
        image.sort_unstable();
        image.dedup();
        assert_eq!(image.len() as u128, hash.message_count());
    }

    #[test]
    fn sample_regular_hash_validates_inputs() {
        assert!(matches!(sample_regular_hash(4, 3, 2, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(sample_regular_hash(2, 2, 3, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(sample_regular_hash(2, 2, 0, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn collision_frequency_meets_the_pairwise_uniform_budget() {
        // All distinct message pairs, a thousand seeds: empirical collision
        // rate within three binomial sigmas of p^-k.
        let (p, m_dim, k_dim) = (2u64, 4usize, 2usize);
        let total_m = 16u64;
        let mut collisions = 0u64;
        let mut trials = 0u64;
        for seed in 0..1000 {
            let hash = sample_regular_hash(p, m_dim, k_dim, seed).unwrap();
            let keys: Vec<u64> = (0..total_m).map(|m| hash.apply(m)).collect();
            for a in 0..total_m as usize {
                for b in (a + 1)..total_m as usize {
                    trials += 1;
                    if keys[a] == keys[b] {
                        collisions += 1;
                    }
                }
            }
        }
        let rate = collisions as f64 / trials as f64;
        let target = 0.25f64;
        // Pairs within a seed are dependent; budget the deviation by seeds.
        let sigma = (target * (1.0 - target) / 1000.0).sqrt();
        assert!(rate <= target + 3.0 * sigma, "collision rate {rate}");
    }

    fn noiseless_scheme() -> (Channel, CommitmentScheme) {
        let ch = Channel::make_discrete(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let sf = crate::scores::build_scores_discrete(&ch).unwrap();
        let cb = Codebook::from_words(
            2,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
        )
        .unwrap();
        let dp = uniform_params(&ch, 1, 1.0, 1.0);
        let hash = sample_regular_hash(2, 2, 1, 3).unwrap();
        let scheme = CommitmentScheme::new(cb, dp, sf, hash).unwrap();
        (ch, scheme)
    }

    #[test]
    fn honest_run_on_a_noiseless_channel_recovers_the_key() {
        let (ch, scheme) = noiseless_scheme();
        for key in scheme.active_keys() {
            for seed in 0..8 {
                let t = run_protocol(&ch, &scheme, key, None, seed).unwrap();
                assert_eq!(t.verdict, Verdict::Accept);
                assert_eq!(t.recovered_key, Some(key));
                assert_eq!(t.message, Some(t.revealed));
            }
        }
        assert!(run_protocol(&ch, &scheme, 99, None, 0).is_err());
    }

    #[test]
    fn dishonest_reveal_outside_the_list_is_rejected() {
        let (ch, scheme) = noiseless_scheme();
        // Send word 0's block but reveal message 3; the noiseless list is {0}.
        let adv = Adversary { input: vec![0, 0], reveal: 3 };
        let t = run_protocol(&ch, &scheme, 0, Some(&adv), 11).unwrap();
        assert_eq!(t.verdict, Verdict::Reject);
        assert_eq!(t.recovered_key, None);
        assert_eq!(t.message, None);
    }

    #[test]
    fn noiseless_distinct_keys_are_fully_revealed_by_the_output() {
        // With a bijective hash every fiber is a singleton and the conditional
        // output laws have disjoint supports, so the distance saturates.
        let ch = Channel::make_discrete(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let sf = crate::scores::build_scores_discrete(&ch).unwrap();
        let cb = Codebook::from_words(2, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]])
            .unwrap();
        let dp = uniform_params(&ch, 1, 1.0, 1.0);
        let hash = sample_regular_hash(2, 2, 2, 0).unwrap();
        let scheme = CommitmentScheme::new(cb, dp, sf, hash).unwrap();
        let rep = concealing_distance(&ch, &scheme, 1 << 20).unwrap();
        assert_abs_diff_eq!(rep.delta_e, 1.0, epsilon = 1e-12);
        assert!(rep.delta_e <= 2.0 * rep.delta_e_bar + 1e-12);
    }

    #[test]
    fn useless_channel_conceals_perfectly_and_keeps_key_entropy() {
        // A channel with identical rows supports no score family, but the
        // concealing distance involves only the channel and the fibers, so
        // borrow decoder machinery from a channel with the same alphabet.
        let useless = Channel::make_discrete(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(crate::scores::build_scores_discrete(&useless).is_err());
        let sf = crate::scores::build_scores_discrete(&bsc(0.1)).unwrap();
        let cb = Codebook::from_words(2, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]])
            .unwrap();
        let dp = uniform_params(&useless, 1, 1.0, 1.0);
        let hash = sample_regular_hash(2, 2, 1, 0).unwrap();
        let scheme = CommitmentScheme::new(cb, dp, sf, hash).unwrap();
        let rep = concealing_distance(&useless, &scheme, 1 << 20).unwrap();
        assert!(rep.delta_e <= 1e-12, "delta_E = {}", rep.delta_e);

        // Zero concealing distance forces full key equivocation.
        let keys = scheme.active_keys();
        let (conds, _) = key_conditionals(&useless, &scheme, 1 << 20).unwrap();
        let rows: Vec<Vec<f64>> =
            conds.iter().map(|c| c.iter().map(|v| v / keys.len() as f64).collect()).collect();
        let joint = JointFiniteY::new(rows).unwrap();
        assert_abs_diff_eq!(
            info::cond_entropy_xy(&joint),
            (keys.len() as f64).log2(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn exact_distance_matches_a_hand_built_mixture_on_bsc() {
        let ch = bsc(0.1);
        let sf = crate::scores::build_scores_discrete(&ch).unwrap();
        let cb = Codebook::from_words(2, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]])
            .unwrap();
        let dp = uniform_params(&ch, 1, 1.0, 1.0);
        let hash = sample_regular_hash(2, 2, 1, 5).unwrap();
        let scheme = CommitmentScheme::new(cb.clone(), dp, sf, hash.clone()).unwrap();
        let rep = concealing_distance(&ch, &scheme, 1 << 20).unwrap();

        // Independent oracle: accumulate the two fiber mixtures over the four
        // outputs with explicit transition products.
        let w = |x: usize, y: usize| -> f64 {
            if x == y {
                0.9
            } else {
                0.1
            }
        };
        let mut law = [[0.0f64; 4]; 2];
        for key in 0..2u64 {
            let fiber = hash.fiber(key).unwrap();
            for &m in &fiber {
                let word = cb.word(m as usize);
                for y0 in 0..2 {
                    for y1 in 0..2 {
                        law[key as usize][y0 * 2 + y1] +=
                            0.5 * w(word[0], y0) * w(word[1], y1);
                    }
                }
            }
        }
        let oracle =
            0.5 * (0..4).map(|y| (law[0][y] - law[1][y]).abs()).sum::<f64>();
        assert_abs_diff_eq!(rep.delta_e, oracle, epsilon = 1e-12);
    }

    #[test]
    fn bound_formula_matches_the_independent_output_plugin() {
        // Independent output: the conditional order entropy equals log M, so
        // the bound reduces to (3p/(p-1)) p^(tk/(1+t)) M^(-t/(1+t)).
        let (p, m_dim, k_dim) = (2u64, 4usize, 2usize);
        let log_m = m_dim as f64; // log2 of p^m
        for t in [0.25, 0.5, 1.0] {
            let v = concealing_bound_value(p, k_dim, log_m, t);
            let hand = 6.0
                * (2.0f64).powf(t * k_dim as f64 / (1.0 + t))
                * (2.0f64).powf(-t / (1.0 + t) * log_m);
            assert_abs_diff_eq!(v, hand, epsilon = 1e-12);
        }
        // Vanishing exponent: the prefactor is all that survives.
        assert_abs_diff_eq!(concealing_bound_value(2, 2, 4.0, 1e-9), 6.0, epsilon = 1e-6);
        // Some exponent below one for k < m at t = 1 once the entropy
        // surplus beats the prefactor.
        let v = concealing_bound_value(2, 1, 9.0, 1.0);
        assert!(v < 1.0, "bound {v} should be nontrivial");
    }

    #[test]
    fn concealing_bound_dominates_exact_restricted_distance() {
        // Two retained keys out of four, so the restricted distance is an
        // honest pairwise maximum rather than vacuously zero.
        let ch = bsc(0.1);
        let sf = crate::scores::build_scores_discrete(&ch).unwrap();
        let p_in = InputDistribution::uniform(2);
        for seed in 0..10 {
            let n = 3 + (seed % 2) as usize;
            let cb = random_codebook(&ch, &p_in, n, 16, seed).unwrap();
            let dp = uniform_params(&ch, 2, 1.0, 1.0);
            let scheme =
                best_hash_for_scheme(&ch, &cb, &dp, &sf, 2, 4, 2, 8, 1 << 22).unwrap();
            let cb_bound = concealing_bound(&ch, &scheme, 1 << 22).unwrap();
            assert_eq!(cb_bound.retained_keys.len(), 2);
            assert_eq!(cb_bound.retained_messages.len(), 8);
            let restricted =
                scheme.clone().with_retained_keys(cb_bound.retained_keys.clone()).unwrap();
            let exact = concealing_distance(&ch, &restricted, 1 << 22).unwrap();
            assert!(
                exact.delta_e <= cb_bound.bound + 1e-9,
                "seed {seed}: exact {} vs bound {}",
                exact.delta_e,
                cb_bound.bound
            );
        }
    }

    #[test]
    fn retention_keeps_the_closest_keys_and_shrinks_the_distance() {
        let ch = bsc(0.1);
        let sf = crate::scores::build_scores_discrete(&ch).unwrap();
        let cb = random_codebook(&ch, &InputDistribution::uniform(2), 4, 16, 9).unwrap();
        let dp = uniform_params(&ch, 2, 1.0, 1.0);
        let hash = sample_regular_hash(2, 4, 2, 1).unwrap();
        let scheme = CommitmentScheme::new(cb, dp, sf, hash).unwrap();
        let full = concealing_distance(&ch, &scheme, 1 << 22).unwrap();
        let bound = concealing_bound(&ch, &scheme, 1 << 22).unwrap();
        assert_eq!(bound.retained_keys.len(), 2);
        let restricted =
            scheme.clone().with_retained_keys(bound.retained_keys.clone()).unwrap();
        let part = concealing_distance(&ch, &restricted, 1 << 22).unwrap();
        assert!(part.delta_e <= full.delta_e + 1e-12);

        // Ranking property: every kept key is at least as close to the
        // average law as every dropped key.
        let (conds, mixture) = key_conditionals(&ch, &scheme, 1 << 22).unwrap();
        let dist: Vec<f64> = conds.iter().map(|c| tv_distance(c, &mixture)).collect();
        let kept_max = bound
            .retained_keys
            .iter()
            .map(|&k| dist[k as usize])
            .fold(f64::NEG_INFINITY, f64::max);
        let dropped_min = (0..dist.len() as u64)
            .filter(|k| !bound.retained_keys.contains(k))
            .map(|k| dist[k as usize])
            .fold(f64::INFINITY, f64::min);
        assert!(kept_max <= dropped_min + 1e-12);
    }

    #[test]
    fn double_reveal_never_beats_the_binding_parameter() {
        let ch = bsc(0.1);
        let sf = crate::scores::build_scores_discrete(&ch).unwrap();
        let cb = random_codebook(&ch, &InputDistribution::uniform(2), 4, 4, 2).unwrap();
        let dp = uniform_params(&ch, 2, 1.2, 0.8);
        let hash = sample_regular_hash(2, 2, 1, 0).unwrap();
        let scheme = CommitmentScheme::new(cb.clone(), dp.clone(), sf.clone(), hash).unwrap();
        let report =
            evaluate_security(&ch, &cb, &dp, &sf, None, &EvalConfig::default()).unwrap();
        assert!(report.delta_d_is_exact);
        let mut digits = vec![0usize; 4];
        loop {
            let p2 = double_reveal_success(&ch, &scheme, &digits, 1 << 20).unwrap();
            assert!(
                p2 <= report.delta_d + 1e-12,
                "double reveal {p2} beat binding {} at {digits:?}",
                report.delta_d
            );
            if !numeric::odometer_next(&mut digits, 2) {
                break;
            }
        }
    }

    #[test]
    fn leftover_bound_on_independent_and_deterministic_joints() {
        let hash = sample_regular_hash(2, 2, 1, 0).unwrap();
        // Independent: joint = uniform(M) x q(Y); the left side is zero and
        // the right side stays nonpositive up to gamma = log2 |Im f|.
        let q = [0.3, 0.7];
        let rows: Vec<Vec<f64>> = (0..4).map(|_| q.iter().map(|v| v / 4.0).collect()).collect();
        let joint = JointFiniteY::new(rows).unwrap();
        let gammas: Vec<f64> = (0..=8).map(|i| i as f64 * 0.125).collect();
        assert!(leftover_lower_bound_check(&joint, &hash, &gammas).unwrap());

        // Deterministic message given output with a bijective hash: the left
        // side is large and still dominates.
        let hash2 = sample_regular_hash(2, 2, 2, 0).unwrap();
        let mut rows = vec![vec![0.0; 4]; 4];
        for m in 0..4 {
            rows[m][m] = 0.25;
        }
        let joint2 = JointFiniteY::new(rows).unwrap();
        assert!(leftover_lower_bound_check(&joint2, &hash2, &gammas).unwrap());
    }

    #[test]
    fn leftover_bound_on_random_joints_and_hashes() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let gammas: Vec<f64> = (0..=16).map(|i| i as f64 * 0.25).collect();
        for trial in 0..20 {
            let n_y = 2 + (rng.random::<u32>() % 3) as usize;
            let mut rows = vec![vec![0.0; n_y]; 8];
            let mut total = 0.0;
            for row in rows.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.random::<f64>();
                    total += *v;
                }
            }
            for row in rows.iter_mut() {
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
            let joint = JointFiniteY::new(rows).unwrap();
            let hash = sample_regular_hash(2, 3, 1 + (trial % 2) as usize, trial).unwrap();
            assert!(leftover_lower_bound_check(&joint, &hash, &gammas).unwrap(), "trial {trial}");
        }
    }

    #[test]
    fn scheme_requires_matching_message_space() {
        let ch = bsc(0.1);
        let sf = crate::scores::build_scores_discrete(&ch).unwrap();
        let cb = Codebook::from_words(2, vec![vec![0, 0], vec![1, 1]]).unwrap();
        let dp = uniform_params(&ch, 1, 1.0, 1.0);
        let hash = sample_regular_hash(2, 2, 1, 0).unwrap();
        assert!(matches!(
            CommitmentScheme::new(cb, dp, sf, hash),
            Err(Error::InvalidParameter(_))
        ));
    }
}
