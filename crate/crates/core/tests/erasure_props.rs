use cachebc::bits::Bits;
use cachebc::erasure_net::{
    decode_packets, piggyback_decode_full, piggyback_decode_with_side_info, piggyback_encode, piggyback_sweep, piggyback_trial,
    rlc_decode, rlc_encode, transmit, ChannelOutput, CodeLayout, LinearCodebook, PiggybackParams, RlcParams, SweepSettings,
};
use cachebc::seed::derive_seed;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn rlc_success(n: usize, delta: f64, eps: f64, packet_bits: usize, trials: u64) -> f64 {
    let bits = ((1.0 - eps) * (1.0 - delta) * packet_bits as f64 * n as f64) as usize;
    let ok: usize = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(77, &[n as u64, i]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let msg = Bits::random(bits, &mut rng);
            let p = RlcParams::new(bits, n, packet_bits, seed);
            let out = transmit(rlc_encode(&msg, &p).unwrap(), &[delta], derive_seed(seed, &[1]));
            usize::from(rlc_decode(&out[0], &p).is_ok_and(|m| m == msg))
        })
        .sum();
    ok as f64 / trials as f64
}

#[test]
fn linear_codes_approach_capacity() {
    let small = rlc_success(1_000, 0.5, 0.1, 1, 100);
    let large = rlc_success(10_000, 0.5, 0.1, 1, 100);
    assert!(large >= small, "n = 1e3: {small}, n = 1e4: {large}");
    assert!(large >= 0.99, "n = 1e4: {large}");
    assert!(small < 1.0, "n = 1e3 should still show finite-length losses: {small}");
}

#[test]
fn sweep_ignores_scheduling() {
    let s = SweepSettings { delta1: 0.6, delta2: 0.3, packet_bits: 4, n: 400, trials: 12, seed: 9 };
    let pts = [(0.5, 1.0), (1.5, 1.3), (1.0, 0.0)];
    let parallel = piggyback_sweep(&s, &pts);
    for (p, &(r1, r2)) in parallel.iter().zip(&pts) {
        let serial: Vec<_> = (0..s.trials as u64).map(|t| piggyback_trial(&s, r1, r2, t)).collect();
        assert_eq!(p.side_info_successes, serial.iter().filter(|r| r.success[0]).count());
        assert_eq!(p.full_successes, serial.iter().filter(|r| r.success[1]).count());
    }
    assert_eq!(parallel, piggyback_sweep(&s, &pts));
}

fn outcome_is_exact_or_error<T: PartialEq + std::fmt::Debug, E>(got: Result<T, E>, truth: &T) -> bool {
    match got {
        Ok(v) => v == *truth,
        Err(_) => true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn no_silent_corruption(
        n in 20usize..300, f in 1usize..12, load in 0.3f64..1.3, delta in 0.0f64..0.9, split in 0.0f64..1.0, seed in any::<u64>(),
    ) {
        let total = (load * (1.0 - delta) * (f * n) as f64) as usize;
        let (b1, b2) = ((split * total as f64) as usize, total - (split * total as f64) as usize);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w1, w2) = (Bits::random(b1, &mut rng), Bits::random(b2, &mut rng));

        let p = RlcParams::new(total, n, f, seed);
        let mut whole = w1.clone();
        whole.append(&w2);
        if let Ok(x) = rlc_encode(&whole, &p) {
            let out = transmit(x, &[delta], rng.gen());
            prop_assert!(outcome_is_exact_or_error(rlc_decode(&out[0], &p), &whole));
            let cut = ChannelOutput::from_slots(out[0].to_slots().into_iter().map(|_| None).collect(), f);
            prop_assert!(rlc_decode(&cut, &p).is_err() || total == 0);
        }

        let pp = PiggybackParams::new(b1, b2, n, f, seed ^ 1);
        if let Ok(x) = piggyback_encode(&w1, &w2, &pp) {
            let out = transmit(x, &[delta, delta * 0.5], rng.gen());
            prop_assert!(outcome_is_exact_or_error(piggyback_decode_with_side_info(&out[0], &w2, &pp), &w1));
            prop_assert!(outcome_is_exact_or_error(piggyback_decode_full(&out[1], &pp), &(w1.clone(), w2.clone())));
        }
    }
}

/// Probability that `received` uniform random GF(2) rows span `k` dimensions.
fn full_rank_probability(k: usize, received: usize) -> f64 {
    if received < k {
        return 0.0;
    }
    (0..k).map(|i| 1.0 - 2f64.powi(i as i32 - received as i32)).product()
}

fn dense_decode_rate(k: usize, n: usize, delta: f64, trials: u64) -> f64 {
    let ok: usize = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(5, &[k as u64, n as u64, i]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let source: Vec<Bits> = (0..k).map(|_| Bits::random(8, &mut rng)).collect();
            let code = LinearCodebook::new(k, n, seed, CodeLayout::dense());
            let out = transmit(code.encode(&source, 8), &[delta], derive_seed(seed, &[1]));
            usize::from(decode_packets(&code, 8, &out[0], &[]).is_ok_and(|p| p == source))
        })
        .sum();
    ok as f64 / trials as f64
}

#[test]
fn dense_rank_matches_gf2_oracle() {
    let trials = 10_000u64;
    let binom = |n: usize, r: usize| (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    let cases: [(usize, usize, f64); 3] = [(16, 16, 0.0), (16, 20, 0.1), (32, 70, 0.5)];
    for (k, n, delta) in cases {
        let oracle: f64 = (0..=n)
            .map(|r| binom(n, r) * (1.0 - delta).powi(r as i32) * delta.powi((n - r) as i32) * full_rank_probability(k, r))
            .sum();
        let got = dense_decode_rate(k, n, delta, trials);
        let sigma = (oracle * (1.0 - oracle) / trials as f64).sqrt();
        assert!((got - oracle).abs() <= 4.0 * sigma + 1e-3, "k={k}, n={n}, delta={delta}: {got} vs {oracle}");
    }
}
