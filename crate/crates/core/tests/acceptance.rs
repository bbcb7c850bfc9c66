//! Release gate: one test per acceptance criterion, each printing a single
//! PASS line with the measured quantities. Criteria with runtime budgets run
//! inside a single-thread pool so the wall-clock claim is honest.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{Beta, ContinuousCDF};

use slc_core::channel::{Channel, GridSpec, InputDistribution};
use slc_core::commitment::{
    concealing_bound, concealing_distance, double_reveal_success, leftover_lower_bound_check,
    run_protocol, sample_regular_hash, CommitmentScheme, Verdict,
};
use slc_core::info::{
    binary_entropy, cond_entropy_xy, cond_renyi_entropy_my, entropy, joint_renyi_against_q,
    q_alpha_reference, sibson_info, AlphaOrder, JointFiniteY,
};
use slc_core::region::{
    capacity_c, gamma1_curve, gamma_alpha_curve, gamma_concavify, legendre_transform,
    meta_converse_check,
};
use slc_core::scores::build_scores_discrete;
use slc_core::slc::{
    adversary_search, binding_bound_discrete, derive_params, evaluate_security, expurgate,
    random_codebook, Codebook, DecoderParams, EvalConfig, ReportMode, SearchStrategy,
};

const BUDGET: u128 = 1 << 22;

fn single_thread() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()
}

fn dirichlet_row(rng: &mut ChaCha12Rng, d: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..d).map(|_| -(rng.random::<f64>().max(1e-12)).ln()).collect();
    let s: f64 = row.iter().sum();
    for v in &mut row {
        *v /= s;
    }
    row
}

fn random_joint(rng: &mut ChaCha12Rng, m: usize, y: usize) -> JointFiniteY {
    let flat = dirichlet_row(rng, m * y);
    let rows: Vec<Vec<f64>> = flat.chunks(y).map(|c| c.to_vec()).collect();
    JointFiniteY::new(rows).unwrap()
}

fn random_channel(rng: &mut ChaCha12Rng, d: usize, y: usize) -> Channel {
    loop {
        let rows: Vec<Vec<f64>> = (0..d).map(|_| dirichlet_row(rng, y)).collect();
        if let Ok(ch) = Channel::make_discrete(rows) {
            return ch;
        }
    }
}

/// Exact 95% Clopper-Pearson interval, computed here independently of the
/// library's own interval code.
fn clopper_pearson_95(successes: u64, trials: u64) -> (f64, f64) {
    let k = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(0.025)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(0.975)
    };
    (lo, hi)
}

#[test]
fn criterion_01_region_curves_ordering_and_endpoint() {
    let pool = single_thread();
    let started = Instant::now();
    let (gamma1, runmax, a11, a12) = pool.install(|| {
        let ch = Channel::make_bsc(0.1).unwrap();
        let gamma1 = gamma_concavify(&gamma1_curve(&ch, 201).unwrap());
        let runmax = gamma1.running_max();
        let a11 =
            gamma_concavify(&gamma_alpha_curve(&ch, 201, AlphaOrder::new(1.1).unwrap()).unwrap());
        let a12 =
            gamma_concavify(&gamma_alpha_curve(&ch, 201, AlphaOrder::new(1.2).unwrap()).unwrap());
        (gamma1, runmax, a11, a12)
    });
    let elapsed = started.elapsed();

    for i in 0..201 {
        let (g1, rm) = (gamma1.values()[i], runmax.values()[i]);
        let (g11, g12) = (a11.values()[i], a12.values()[i]);
        assert!(g12 >= -1e-12 && g11 >= -1e-12 && g1 >= -1e-12, "negative curve value at {i}");
        assert!(g12 <= g11 + 1e-9, "alpha ordering broken at {i}: {g12} > {g11}");
        assert!(g11 <= g1 + 1e-9, "alpha curve above base at {i}: {g11} > {g1}");
        assert!(g1 <= rm + 1e-12, "running max below curve at {i}");
    }
    let endpoint = gamma1.value_at(1.0);
    assert!((endpoint - 0.4690).abs() <= 1e-3, "gamma1(1.0) = {endpoint}");
    assert!(elapsed.as_secs_f64() <= 120.0, "took {elapsed:?}");
    println!(
        "criterion 01 PASS: curves ordered on 201 points, gamma1(1.0) = {endpoint:.6}, {:.2}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_02_gaussian_capacity_sweep() {
    let pool = single_thread();
    let started = Instant::now();
    let caps: Vec<f64> = pool.install(|| {
        (0..25)
            .map(|i| {
                let u = i as f64 / 24.0;
                let v = (0.01f64.ln() + u * (100f64.ln() - 0.01f64.ln())).exp();
                let ch = Channel::make_awgn_bpsk(v, GridSpec::default()).unwrap();
                capacity_c(&ch)
            })
            .collect()
    });
    let elapsed = started.elapsed();

    for w in caps.windows(2) {
        assert!(w[1] >= w[0] - 1e-6, "capacity decreased: {} -> {}", w[0], w[1]);
    }
    assert!(caps[0] <= 0.01, "capacity at v=0.01 is {}", caps[0]);
    assert!(*caps.last().unwrap() >= 0.95, "capacity at v=100 is {}", caps.last().unwrap());
    assert!(elapsed.as_secs_f64() <= 120.0, "took {elapsed:?}");
    println!(
        "criterion 02 PASS: sweep nondecreasing, ends {:.2e} -> {:.4}, {:.2}s",
        caps[0],
        caps.last().unwrap(),
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_03_bsc_capacity_matches_binary_entropy() {
    for &q in &[0.05, 0.1, 0.2] {
        let ch = Channel::make_bsc(q).unwrap();
        let cap = capacity_c(&ch);
        let hq = binary_entropy(q);
        assert!((cap - hq).abs() <= 1e-4, "capacity_c({q}) = {cap}, h = {hq}");

        // Independent oracle: H(X|Y) = h(p) + h(q) - h(p(1-q) + (1-p)q),
        // maximized over a 10^4-point input grid.
        let mut oracle = 0.0f64;
        for k in 0..=10_000 {
            let p = k as f64 / 10_000.0;
            let py0 = p * (1.0 - q) + (1.0 - p) * q;
            oracle = oracle.max(binary_entropy(p) + binary_entropy(q) - binary_entropy(py0));
        }
        assert!((cap - oracle).abs() <= 1e-4, "oracle gap at q={q}: {cap} vs {oracle}");
    }
    println!("criterion 03 PASS: capacity = h(q) within 1e-4 at q in {{0.05, 0.1, 0.2}}");
}

#[test]
fn criterion_04_renyi_entropy_monotone_and_additive() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x04_2024);
    let orders = [1.01, 1.1, 1.5, 2.0, 4.0];
    for _ in 0..100 {
        let m = rng.random_range(2..=6);
        let y = rng.random_range(2..=6);
        let joint = random_joint(&mut rng, m, y);
        let shannon = cond_entropy_xy(&joint);
        let mut prev = f64::INFINITY;
        for &a in &orders {
            let h = cond_renyi_entropy_my(&joint, AlphaOrder::new(a).unwrap()).unwrap();
            assert!(h <= prev + 1e-12, "order {a}: {h} above previous {prev}");
            assert!(h <= shannon + 1e-9, "order {a}: {h} above Shannon {shannon}");
            prev = h;
        }
    }
    for _ in 0..50 {
        let (m1, y1) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let (m2, y2) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let j1 = random_joint(&mut rng, m1, y1);
        let j2 = random_joint(&mut rng, m2, y2);
        let prod = j1.product(&j2);
        for &a in &orders {
            let alpha = AlphaOrder::new(a).unwrap();
            let lhs = cond_renyi_entropy_my(&prod, alpha).unwrap();
            let rhs = cond_renyi_entropy_my(&j1, alpha).unwrap()
                + cond_renyi_entropy_my(&j2, alpha).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9, "additivity at {a}: {lhs} vs {rhs}");
        }
    }
    println!("criterion 04 PASS: monotone on 100 joints, additive on 50 product pairs");
}

/// Order-alpha divergence of the joint against p x q, written out directly so
/// the oracle shares no code with the library (including the infinite value
/// when q misses mass of the joint).
fn direct_divergence(ch: &Channel, p: &InputDistribution, q: &[f64], alpha: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..ch.n_nodes() {
        for (x, &px) in p.probs().iter().enumerate() {
            let joint = px * ch.node_prob(x, j);
            if joint <= 0.0 {
                continue;
            }
            if q[j] <= 0.0 {
                return f64::INFINITY;
            }
            acc += px * ch.node_prob(x, j).powf(alpha) * q[j].powf(1.0 - alpha);
        }
    }
    acc.log2() / (alpha - 1.0)
}

/// Deterministic compass search on the output simplex: a direct minimizer of
/// the order-alpha divergence over the reference law, independent of the
/// closed form it is checked against.
fn compass_min_over_q(ch: &Channel, p: &InputDistribution, alpha: AlphaOrder) -> f64 {
    let y = ch.n_nodes();
    let eval = |q: &[f64]| direct_divergence(ch, p, q, alpha.value());
    let mut q = vec![1.0 / y as f64; y];
    let mut best = eval(&q);
    let mut step = 0.25;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..y {
            for sign in [1.0, -1.0] {
                let delta = sign * step;
                if q[i] + delta < 0.0 || q[i] + delta > 1.0 {
                    continue;
                }
                // Move mass into or out of coordinate i, rescaling the rest.
                let rest: f64 = 1.0 - q[i];
                if rest <= 0.0 && delta > 0.0 {
                    continue;
                }
                let mut cand = q.clone();
                cand[i] += delta;
                let scale = (1.0 - cand[i]) / rest.max(1e-300);
                for (j, c) in cand.iter_mut().enumerate() {
                    if j != i {
                        *c *= scale;
                    }
                }
                let v = eval(&cand);
                if v < best - 1e-15 {
                    best = v;
                    q = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

#[test]
fn criterion_05_sibson_identity_against_direct_minimization() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x05_2024);
    let orders = [1.05, 1.1, 1.5, 2.0];
    for i in 0..20 {
        let d = rng.random_range(2..=5);
        let y = rng.random_range(2..=5);
        let ch = random_channel(&mut rng, d, y);
        let p = InputDistribution::new(dirichlet_row(&mut rng, d)).unwrap();
        let alpha = AlphaOrder::new(orders[i % orders.len()]).unwrap();

        let closed = sibson_info(&ch, &p, alpha);
        let direct = compass_min_over_q(&ch, &p, alpha);
        assert!((closed - direct).abs() <= 1e-6, "channel {i}: {closed} vs direct {direct}");

        let qref = q_alpha_reference(&ch, &p, alpha);
        let at_ref = joint_renyi_against_q(&ch, &p, &qref, alpha);
        assert!((closed - at_ref).abs() <= 1e-9, "reference law mismatch: {closed} vs {at_ref}");
    }
    println!("criterion 05 PASS: closed form = direct minimum (1e-6) on 20 channels");
}

#[test]
fn criterion_06_score_certification() {
    let ch = Channel::make_bsc(0.1).unwrap();
    let sf = build_scores_discrete(&ch).unwrap();
    assert!(sf.cs1_residual <= 1e-9, "centering residual {}", sf.cs1_residual);
    assert!((sf.zeta1 - 5.0719).abs() <= 1e-3, "zeta1 = {}", sf.zeta1);
    assert!(sf.zeta2.is_finite() && sf.zeta2 > 0.0, "zeta2 = {}", sf.zeta2);

    // Disjoint-support rows force the smoothing branch.
    let disjoint = Channel::make_discrete(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let sf2 = build_scores_discrete(&disjoint).unwrap();
    assert!(sf2.smoothing_delta > 0.0, "smoothing not engaged");
    assert!(sf2.cs1_residual <= 1e-9);
    assert!(sf2.zeta1 > 0.0 && sf2.zeta2.is_finite());
    println!(
        "criterion 06 PASS: zeta1 = {:.4}, zeta2 = {:.4}, smoothing delta = {:.1e}",
        sf.zeta1, sf.zeta2, sf2.smoothing_delta
    );
}

#[test]
fn criterion_07_binding_bound_dominates_exact_delta_d() {
    let pool = single_thread();
    let started = Instant::now();
    let ch = Channel::make_bsc(0.1).unwrap();
    let sf = build_scores_discrete(&ch).unwrap();
    let p = InputDistribution::uniform(2);
    let n = 8;
    let mut worst_margin = f64::INFINITY;
    pool.install(|| {
        for seed in 0..20u64 {
            let raw = random_codebook(&ch, &p, n, 12, 0x70_0000 + seed).unwrap();
            let auto_eps2 = 0.25;
            let Ok(kept) = expurgate(&raw, auto_eps2) else {
                panic!("expurgation collapsed at seed {seed}");
            };
            let auto = derive_params(&ch, &p, &sf, n, kept.codebook.len(), 2).unwrap();
            let cfg = EvalConfig { eps2: Some(auto_eps2), ..EvalConfig::default() };
            let outcome = adversary_search(
                &ch,
                &kept.codebook,
                &auto.params,
                &sf,
                SearchStrategy::Exhaustive,
                &cfg,
            )
            .unwrap();
            assert!(outcome.exhaustive, "seed {seed}: search not exhaustive");
            let bound = binding_bound_discrete(&sf, auto.params.eps1, auto_eps2, n);
            assert!(
                outcome.second_acceptance <= bound + 1e-12,
                "seed {seed}: delta_D = {} above bound {bound}",
                outcome.second_acceptance
            );
            worst_margin = worst_margin.min(bound - outcome.second_acceptance);

            // Criterion 10 companion: the meta-converse holds on every code
            // evaluated exactly here.
            assert!(meta_converse_check(&ch, &kept.codebook, &auto.params, &sf, BUDGET).unwrap());
        }
    });
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() <= 300.0, "took {elapsed:?}");
    println!(
        "criterion 07 PASS: 20 codes, exact delta_D below bound (worst margin {worst_margin:.4}), {:.2}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_08_concealing_bound_and_leftover_inequality() {
    let ch = Channel::make_bsc(0.1).unwrap();
    let sf = build_scores_discrete(&ch).unwrap();
    let p = InputDistribution::uniform(2);
    let mut checked = 0;
    for (n, seed) in [(3, 11u64), (3, 12), (3, 13), (3, 14), (3, 15), (4, 21), (4, 22), (4, 23), (4, 24), (4, 25)] {
        let cb = random_codebook(&ch, &p, n, 16, seed).unwrap();
        let params = DecoderParams::new(2, 4.0, 0.3, p.clone()).unwrap();
        let hash = sample_regular_hash(2, 4, 2, seed).unwrap();
        let scheme = CommitmentScheme::new(cb, params, sf.clone(), hash).unwrap();
        let bound = concealing_bound(&ch, &scheme, BUDGET).unwrap();
        let restricted = scheme.clone().with_retained_keys(bound.retained_keys.clone()).unwrap();
        let exact = concealing_distance(&ch, &restricted, BUDGET).unwrap();
        assert!(
            exact.delta_e <= bound.bound + 1e-9,
            "n={n} seed={seed}: restricted delta_E = {} above bound {}",
            exact.delta_e,
            bound.bound
        );
        checked += 1;
    }
    assert!(checked >= 10);

    // Leftover-hash lower bound on 20 random message-output joints, at every
    // gamma on a 33-point grid.
    let mut rng = ChaCha12Rng::seed_from_u64(0x08_2024);
    let gammas: Vec<f64> = (0..33).map(|i| -8.0 + 0.5 * i as f64).collect();
    for i in 0..20 {
        let y = rng.random_range(2..=6);
        let joint = random_joint(&mut rng, 8, y);
        let hash = sample_regular_hash(2, 3, 1 + (i % 2) as usize, i as u64).unwrap();
        assert!(
            leftover_lower_bound_check(&joint, &hash, &gammas).unwrap(),
            "joint {i}: lower bound violated"
        );
    }
    println!("criterion 08 PASS: concealing bound dominates on {checked} instances; leftover bound on 20 joints");
}

#[test]
fn criterion_09_universal2_regularity_and_collision_rate() {
    let (p, m, k) = (2u64, 4usize, 2usize);
    let fiber_size = (p as u128).pow((m - k) as u32) as usize;
    let messages = (p as u128).pow(m as u32) as u64;
    let mut collisions = vec![vec![0u32; messages as usize]; messages as usize];
    let seeds = 1000u64;
    for seed in 0..seeds {
        let hash = sample_regular_hash(p, m, k, seed).unwrap();
        for key in 0..(p as u128).pow(k as u32) as u64 {
            assert_eq!(hash.fiber(key).unwrap().len(), fiber_size, "seed {seed} key {key}");
        }
        let images: Vec<u64> = (0..messages).map(|msg| hash.apply(msg)).collect();
        for a in 0..messages as usize {
            for b in (a + 1)..messages as usize {
                if images[a] == images[b] {
                    collisions[a][b] += 1;
                }
            }
        }
    }
    let target = (p as f64).powi(-(k as i32));
    let sigma = (target * (1.0 - target) / seeds as f64).sqrt();
    let mut worst = 0.0f64;
    for a in 0..messages as usize {
        for b in (a + 1)..messages as usize {
            let freq = collisions[a][b] as f64 / seeds as f64;
            worst = worst.max(freq);
            assert!(
                freq <= target + 3.0 * sigma,
                "pair ({a},{b}): collision rate {freq} above {}",
                target + 3.0 * sigma
            );
        }
    }
    println!(
        "criterion 09 PASS: regular fibers on 1000 seeds, worst pair collision {worst:.4} <= {:.4}",
        target + 3.0 * sigma
    );
}

#[test]
fn criterion_10_meta_converse_on_exact_instances() {
    let ch = Channel::make_bsc(0.1).unwrap();
    let sf = build_scores_discrete(&ch).unwrap();
    let p = InputDistribution::uniform(2);
    let mut count = 0;

    // Handmade exact instances.
    let hand: Vec<(Codebook, usize)> = vec![
        (Codebook::from_words(2, vec![vec![0, 0], vec![1, 1]]).unwrap(), 1),
        (Codebook::from_words(2, vec![vec![0, 0, 0], vec![1, 1, 1]]).unwrap(), 1),
        (
            Codebook::from_words(2, vec![vec![0, 0, 0], vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]])
                .unwrap(),
            2,
        ),
    ];
    for (cb, l) in &hand {
        let params = DecoderParams::new(*l, 1.5, 0.5, p.clone()).unwrap();
        assert!(meta_converse_check(&ch, cb, &params, &sf, BUDGET).unwrap());
        count += 1;
    }

    // Seeded random instances across blocklengths.
    for seed in 0..10u64 {
        let n = 3 + (seed % 3) as usize;
        let cb = random_codebook(&ch, &p, n, 6, 0x10_0000 + seed).unwrap();
        let auto = derive_params(&ch, &p, &sf, n, cb.len(), 2).unwrap();
        assert!(meta_converse_check(&ch, &cb, &auto.params, &sf, BUDGET).unwrap());
        count += 1;
    }
    println!("criterion 10 PASS: meta-converse holds on {count} exact instances");
}

#[test]
fn criterion_11_legendre_endpoint_schedule() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x11_2024);
    for i in 0..10 {
        let d = rng.random_range(2..=6);
        let p = dirichlet_row(&mut rng, d);
        let h = entropy(&p);
        for &delta in &[1e-2, 1e-3, 1e-4] {
            let l = legendre_transform(&p, &p, 1.0 - delta);
            let slack = delta * (std::f64::consts::E * (d as f64 - 1.0) / delta).log2();
            assert!(
                (l + h).abs() <= slack + 1e-3,
                "P {i} (d={d}), delta {delta}: |L + H| = {} above {}",
                (l + h).abs(),
                slack + 1e-3
            );
        }
    }
    println!("criterion 11 PASS: Legendre endpoint within schedule for 10 laws x 3 deltas");
}

#[test]
fn criterion_12_protocol_end_to_end() {
    let ch = Channel::make_bsc(0.1).unwrap();
    let sf = build_scores_discrete(&ch).unwrap();
    let p = InputDistribution::uniform(2);
    let n = 8;
    let cb = random_codebook(&ch, &p, n, 8, 0x12_2024).unwrap();
    let auto = derive_params(&ch, &p, &sf, n, cb.len(), 2).unwrap();
    let cfg = EvalConfig::default();
    let report = evaluate_security(&ch, &cb, &auto.params, &sf, None, &cfg).unwrap();
    assert!(matches!(report.mode, ReportMode::Exact), "instance must evaluate exactly");
    assert!(report.delta_d_is_exact);

    // Honest runs draw the message uniformly (uniform key x uniform fiber
    // member through a regular hash), so the exact acceptance probability is
    // 1 - eps_A averaged over messages.
    let hash = sample_regular_hash(2, 3, 2, 0).unwrap();
    let scheme = CommitmentScheme::new(cb.clone(), auto.params.clone(), sf.clone(), hash).unwrap();
    let keys = scheme.active_keys();
    let mut rng = ChaCha12Rng::seed_from_u64(0x12_5eed);
    let runs = 10_000u64;
    let mut accepts = 0u64;
    for _ in 0..runs {
        let key = keys[rng.random_range(0..keys.len())];
        let t = run_protocol(&ch, &scheme, key, None, rng.random()).unwrap();
        if t.verdict == Verdict::Accept {
            accepts += 1;
        }
    }
    let (lo, hi) = clopper_pearson_95(accepts, runs);
    let exact_acc = 1.0 - report.eps_a_avg;
    assert!(
        lo <= exact_acc && exact_acc <= hi,
        "exact acceptance {exact_acc} outside CI [{lo}, {hi}] (observed {})",
        accepts as f64 / runs as f64
    );

    // Dishonest side: over every adversarial input block, the probability of
    // both reveals landing in the list never beats the exact second
    // acceptance.
    let mut digits = vec![0usize; n];
    let mut worst_double = 0.0f64;
    loop {
        let d = double_reveal_success(&ch, &scheme, &digits, BUDGET).unwrap();
        worst_double = worst_double.max(d);
        assert!(
            d <= report.delta_d + 1e-12,
            "double reveal {d} above exact delta_D {} at {digits:?}",
            report.delta_d
        );
        let mut i = 0;
        loop {
            if i == n {
                break;
            }
            digits[i] += 1;
            if digits[i] < 2 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    println!(
        "criterion 12 PASS: honest rate {:.4} vs exact {exact_acc:.4} in [{lo:.4}, {hi:.4}]; worst double reveal {worst_double:.4} <= delta_D {:.4}",
        accepts as f64 / runs as f64,
        report.delta_d
    );
}
