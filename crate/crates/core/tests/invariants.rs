//! Behavioral invariants checked across randomized instances. Each test
//! enforces one property that must hold on every instance, not a point value:
//! decoder membership soundness, exact outcome mass, the list-error union
//! bound, the blocklength trend of the list-miss rate, report ranges, hash
//! regularity, protocol verdict semantics, double-reveal inheritance, and
//! boundary-curve shape constraints.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use slc_core::channel::{Channel, InputDistribution, Output};
use slc_core::commitment::{
    double_reveal_success, run_protocol, sample_regular_hash, Adversary, CommitmentScheme, Verdict,
};
use slc_core::info::AlphaOrder;
use slc_core::region::{gamma1_curve, gamma_alpha_curve, gamma_concavify};
use slc_core::scores::{build_scores_discrete, ScoreFamily};
use slc_core::slc::{
    build_decode_table, decode, derive_params, evaluate_security, exact_acceptance,
    list_error_union_bound, passes_thresholds, random_codebook, DecoderParams, EvalConfig,
    ReportMode,
};

const BUDGET: u128 = 1 << 22;

fn dirichlet_row(rng: &mut ChaCha12Rng, d: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..d).map(|_| -(rng.random::<f64>().max(1e-12)).ln()).collect();
    let s: f64 = row.iter().sum();
    for v in &mut row {
        *v /= s;
    }
    row
}

/// Random discrete channel whose score construction succeeds (no input row
/// inside the convex hull of the others). Needs y >= d: with more inputs than
/// output symbols, some row always sits inside the others' hull.
fn scored_channel(rng: &mut ChaCha12Rng, d: usize, y: usize) -> (Channel, ScoreFamily) {
    assert!(y >= d, "need at least as many outputs as inputs");
    loop {
        let rows: Vec<Vec<f64>> = (0..d).map(|_| dirichlet_row(rng, y)).collect();
        if let Ok(ch) = Channel::make_discrete(rows) {
            if let Ok(sf) = build_scores_discrete(&ch) {
                return (ch, sf);
            }
        }
    }
}

fn next_tuple(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Every message in a decoded list clears both acceptance tests at its own
/// codeword, and no list ever exceeds the declared size.
#[test]
fn decoded_messages_always_clear_both_thresholds() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xA11CE);
    for inst in 0..12u64 {
        let d = 2 + (inst as usize) % 2;
        let yc = d + (inst as usize / 2) % 2;
        let n = 2 + (inst as usize) % 2;
        let m_count = 3 + (inst as usize) % 4;
        let l = 1 + (inst as usize) % 2;
        let (ch, sf) = scored_channel(&mut rng, d, yc);
        let p = InputDistribution::uniform(d);
        let cb = random_codebook(&ch, &p, n, m_count, inst ^ 0x5EED).unwrap();
        let r4 = 0.05 + 0.55 * rng.random::<f64>();
        let eps1 = 0.05 + 0.45 * rng.random::<f64>();
        let dp = DecoderParams::with_log2_threshold(l, n as f64 * r4, eps1, p).unwrap();

        let mut digits = vec![0usize; n];
        loop {
            let ys: Vec<Output> = digits.iter().map(|&j| Output::Symbol(j)).collect();
            let list = decode(&ch, &cb, &dp, &sf, &ys);
            assert!(list.len() <= l, "list of {} exceeds L = {l}", list.len());
            for &m in &list {
                assert!(
                    passes_thresholds(&ch, &dp, &sf, cb.word(m), &ys),
                    "decoded message {m} fails a threshold at output {digits:?} (instance {inst})"
                );
            }
            if !next_tuple(&mut digits, ch.n_nodes()) {
                break;
            }
        }
    }
}

/// The decoder partitions the output space: under any input block, the
/// enumerated outcome probabilities account for all the mass.
#[test]
fn exact_outcome_mass_sums_to_one() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xB0B);
    for inst in 0..10u64 {
        let d = 2 + (inst as usize) % 2;
        let n = 2 + (inst as usize) % 2;
        let (ch, sf) = scored_channel(&mut rng, d, d + (inst as usize) % 2);
        let p = InputDistribution::uniform(d);
        let cb = random_codebook(&ch, &p, n, 4, inst).unwrap();
        let dp = DecoderParams::with_log2_threshold(2, n as f64 * 0.4, 0.3, p).unwrap();
        let table = build_decode_table(&ch, &cb, &dp, &sf, BUDGET).unwrap();

        let mut blocks: Vec<Vec<usize>> = cb.words().to_vec();
        for _ in 0..3 {
            blocks.push((0..n).map(|_| rng.random_range(0..d)).collect());
        }
        for xs in &blocks {
            let (acc, total) = exact_acceptance(&ch, &cb, &table, xs);
            assert!(
                (total - 1.0).abs() <= 1e-9,
                "outcome mass {total} under {xs:?} (instance {inst})"
            );
            for (m, &a) in acc.iter().enumerate() {
                assert!(
                    (-1e-12..=1.0 + 1e-12).contains(&a),
                    "acceptance {a} out of range for message {m}"
                );
            }
        }
    }
}

/// Splitting incorrect decoding into a threshold miss and a crowding-out
/// event bounds the average miss rate from above; the exact value can never
/// exceed that union bound.
#[test]
fn union_bound_dominates_exact_average_miss() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xC0FFEE);
    for inst in 0..20u64 {
        let n = 2 + (inst as usize) % 3;
        let (ch, sf) = if inst % 2 == 0 {
            let ch = Channel::make_bsc(0.03 + 0.02 * (inst as f64 / 2.0)).unwrap();
            let sf = build_scores_discrete(&ch).unwrap();
            (ch, sf)
        } else {
            scored_channel(&mut rng, 2, 2 + (inst as usize) % 2)
        };
        let d = ch.n_inputs();
        let p = InputDistribution::uniform(d);
        let m_count = 3 + (inst as usize) % 4;
        let l = 1 + (inst as usize) % 2;
        let cb = random_codebook(&ch, &p, n, m_count, inst ^ 0xDEAD).unwrap();
        let r4 = 0.1 + 0.4 * rng.random::<f64>();
        let eps1 = 0.1 + 0.3 * rng.random::<f64>();
        let dp = DecoderParams::with_log2_threshold(l, n as f64 * r4, eps1, p).unwrap();

        let table = build_decode_table(&ch, &cb, &dp, &sf, BUDGET).unwrap();
        let mut exact_avg = 0.0;
        for m in 0..m_count {
            let (acc, _) = exact_acceptance(&ch, &cb, &table, cb.word(m));
            exact_avg += 1.0 - acc[m];
        }
        exact_avg /= m_count as f64;
        let bound = list_error_union_bound(&ch, &cb, &dp, &sf, BUDGET).unwrap();
        assert!(
            exact_avg <= bound + 1e-12,
            "exact miss {exact_avg} exceeds union bound {bound} (instance {inst})"
        );
    }
}

/// Doubling the blocklength at a fixed rate pair inside the feasibility
/// window must not raise the typical worst-message miss rate: the median
/// Monte-Carlo estimate over ten codebook seeds at n = 12 stays at or below
/// the median at n = 6.
#[test]
fn median_list_miss_rate_does_not_grow_with_blocklength() {
    let ch = Channel::make_bsc(0.1).unwrap();
    let sf = build_scores_discrete(&ch).unwrap();
    let p = InputDistribution::uniform(2);
    // Rate pair R1 = 1/3, R2 = 1/6; the threshold rate and score slack come
    // from the n = 6 auto-derivation and are reused verbatim at n = 12.
    let auto = derive_params(&ch, &p, &sf, 6, 4, 2).unwrap();
    let samples = 4000usize;

    let mut medians = Vec::new();
    for &(n, m_count, l) in &[(6usize, 4usize, 2usize), (12, 16, 4)] {
        let dp =
            DecoderParams::with_log2_threshold(l, n as f64 * auto.r4, auto.params.eps1, p.clone())
                .unwrap();
        let prod = ch.product(n);
        let mut per_seed = Vec::new();
        for seed in 0..10u64 {
            let cb = random_codebook(&ch, &p, n, m_count, seed).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (n as u64) << 32);
            let mut worst = 0.0f64;
            for m in 0..m_count {
                let mut miss = 0usize;
                for _ in 0..samples {
                    let ys = prod.sample_seq(cb.word(m), &mut rng);
                    if !decode(&ch, &cb, &dp, &sf, &ys).contains(&m) {
                        miss += 1;
                    }
                }
                worst = worst.max(miss as f64 / samples as f64);
            }
            per_seed.push(worst);
        }
        medians.push(median(per_seed));
    }
    assert!(
        medians[1] <= medians[0],
        "median miss rate grew with blocklength: {} at n=6, {} at n=12",
        medians[0],
        medians[1]
    );
    println!("miss-rate medians: {:.4} at n=6, {:.4} at n=12", medians[0], medians[1]);
}

/// Exact reports contain genuine probabilities, and the reported binding
/// figure dominates the second-largest acceptance at every probed input.
#[test]
fn exact_reports_stay_in_range_and_dominate_probes() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EC);
    for inst in 0..6u64 {
        let (ch, sf) = scored_channel(&mut rng, 2, 2 + (inst as usize) % 2);
        let p = InputDistribution::uniform(2);
        let n = 3;
        let m_count = 4 + (inst as usize) % 3;
        let cb = random_codebook(&ch, &p, n, m_count, inst ^ 0xFACE).unwrap();
        let dp = DecoderParams::with_log2_threshold(2, n as f64 * 0.4, 0.3, p).unwrap();
        let cfg = EvalConfig { budget: BUDGET, seed: inst, ..EvalConfig::default() };
        let report = evaluate_security(&ch, &cb, &dp, &sf, None, &cfg).unwrap();

        assert_eq!(report.mode, ReportMode::Exact);
        assert!(report.delta_d_is_exact);
        for (name, v) in [
            ("eps_a_max", report.eps_a_max),
            ("eps_a_avg", report.eps_a_avg),
            ("delta_c", report.delta_c),
            ("delta_d", report.delta_d),
        ] {
            assert!((0.0..=1.0).contains(&v), "{name} = {v} outside [0,1]");
        }
        assert!(report.eps_a_avg <= report.eps_a_max + 1e-12);
        assert!(report.e >= -1e-12 && report.e_alpha <= report.e + 1e-9);

        let table = build_decode_table(&ch, &cb, &dp, &sf, BUDGET).unwrap();
        for _ in 0..4 {
            let xs: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let (mut acc, _) = exact_acceptance(&ch, &cb, &table, &xs);
            acc.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let second = if acc.len() > 1 { acc[1] } else { 0.0 };
            assert!(
                second <= report.delta_d + 1e-12,
                "probe {xs:?} reaches second acceptance {second} above delta_d {}",
                report.delta_d
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Sampled hashes are onto and regular: the fibers are disjoint, have
    /// equal size, cover the whole message space, and agree with the forward
    /// map.
    #[test]
    fn regular_hashes_partition_the_message_space(
        pi in 0usize..3,
        (m, k) in (1usize..=4).prop_flat_map(|m| (Just(m), 1..=m)),
        seed in any::<u64>(),
    ) {
        let p = [2u64, 3, 5][pi];
        let hash = sample_regular_hash(p, m, k, seed).unwrap();
        let messages = p.pow(m as u32);
        let keys = p.pow(k as u32);
        let fiber_size = p.pow((m - k) as u32) as usize;

        let mut seen = vec![false; messages as usize];
        for key in 0..keys {
            let fiber = hash.fiber(key).unwrap();
            prop_assert_eq!(fiber.len(), fiber_size);
            for &msg in &fiber {
                prop_assert_eq!(hash.apply(msg), key);
                prop_assert!(!seen[msg as usize], "message {} in two fibers", msg);
                seen[msg as usize] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s), "fibers do not cover the message space");
    }
}

/// A reveal is accepted exactly when it appears in the receiver's list, for
/// honest runs and for arbitrary dishonest inputs alike.
#[test]
fn verdict_accepts_iff_reveal_is_listed() {
    let ch = Channel::make_bsc(0.1).unwrap();
    let sf = build_scores_discrete(&ch).unwrap();
    let p = InputDistribution::uniform(2);
    let cb = random_codebook(&ch, &p, 3, 8, 7).unwrap();
    let dp = DecoderParams::with_log2_threshold(2, 3.0 * 0.4, 0.3, p).unwrap();
    let hash = sample_regular_hash(2, 3, 2, 1).unwrap();
    let scheme = CommitmentScheme::new(cb, dp, sf, hash).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(0x7E57);

    for trial in 0..40u64 {
        let t = if trial % 2 == 0 {
            let key = scheme.active_keys()[(trial as usize / 2) % 4];
            run_protocol(&ch, &scheme, key, None, trial).unwrap()
        } else {
            let adv = Adversary {
                input: (0..3).map(|_| rng.random_range(0..2)).collect(),
                reveal: rng.random_range(0..8),
            };
            run_protocol(&ch, &scheme, scheme.active_keys()[0], Some(&adv), trial).unwrap()
        };
        let listed = t.list.contains(&(t.revealed as usize));
        assert_eq!(
            t.verdict == Verdict::Accept,
            listed,
            "verdict disagrees with list membership on trial {trial}"
        );
        if let Some(m) = t.message {
            assert_eq!(m, t.revealed, "honest run revealed a different message");
        }
        assert_eq!(t.recovered_key.is_some(), t.verdict == Verdict::Accept);
    }
}

/// A cheating committer who must produce two distinct accepted reveals never
/// beats the code's binding figure, whatever input block it feeds the
/// channel.
#[test]
fn double_reveal_success_never_beats_delta_d() {
    for inst in 0..5u64 {
        let ch = Channel::make_bsc(0.06 + 0.03 * inst as f64).unwrap();
        let sf = build_scores_discrete(&ch).unwrap();
        let p = InputDistribution::uniform(2);
        let cb = random_codebook(&ch, &p, 3, 8, inst ^ 0xB1D).unwrap();
        let dp = DecoderParams::with_log2_threshold(2, 3.0 * 0.4, 0.3, p).unwrap();
        let hash = sample_regular_hash(2, 3, 2, inst).unwrap();
        let scheme = CommitmentScheme::new(cb.clone(), dp.clone(), sf.clone(), hash).unwrap();

        let cfg = EvalConfig { budget: BUDGET, seed: inst, ..EvalConfig::default() };
        let report = evaluate_security(&ch, &cb, &dp, &sf, None, &cfg).unwrap();
        assert!(report.delta_d_is_exact);

        for mask in 0..8usize {
            let input: Vec<usize> = (0..3).map(|i| (mask >> i) & 1).collect();
            let win = double_reveal_success(&ch, &scheme, &input, BUDGET).unwrap();
            assert!(
                win <= report.delta_d + 1e-12,
                "double reveal wins {win} > delta_d {} at input {input:?} (instance {inst})",
                report.delta_d
            );
        }
    }
}

/// Boundary curves live in the wedge 0 <= gamma(R1) <= R1, concavification is
/// idempotent, and the running max is a nondecreasing envelope.
#[test]
fn boundary_curves_stay_in_the_wedge() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xCB);
    let mut channels: Vec<Channel> = (0..4)
        .map(|i| Channel::make_bsc(0.05 + 0.08 * i as f64).unwrap())
        .collect();
    channels.push(scored_channel(&mut rng, 3, 3).0);

    for (ci, ch) in channels.iter().enumerate() {
        let points = if ch.n_inputs() == 2 { 41 } else { 17 };
        let base = gamma_concavify(&gamma1_curve(ch, points).unwrap());
        let alpha = gamma_concavify(
            &gamma_alpha_curve(ch, points, AlphaOrder::new(1.3).unwrap()).unwrap(),
        );
        for curve in [&base, &alpha] {
            let twice = gamma_concavify(curve);
            for (i, (&r1, &g)) in curve.grid().iter().zip(curve.values()).enumerate() {
                assert!(g >= -1e-12, "negative value {g} at point {i} (channel {ci})");
                assert!(g <= r1 + 1e-9, "gamma {g} above R1 {r1} at point {i} (channel {ci})");
                assert!(
                    (twice.values()[i] - g).abs() <= 1e-9,
                    "concavification not idempotent at point {i} (channel {ci})"
                );
            }
        }
        let runmax = base.running_max();
        for w in runmax.values().windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "running max decreased (channel {ci})");
        }
    }
}

/// Renyi order validation: the order must be positive and distinct from 1.
#[test]
fn alpha_order_rejects_degenerate_orders() {
    assert!(AlphaOrder::new(1.0).is_err());
    assert!(AlphaOrder::new(0.0).is_err());
    assert!(AlphaOrder::new(-2.0).is_err());
    assert!(AlphaOrder::new(f64::NAN).is_err());
    assert!(AlphaOrder::new(1.5).is_ok());
    assert!(AlphaOrder::new(0.5).is_ok());
}
