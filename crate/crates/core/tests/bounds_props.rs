use cachebc::bounds::{
    converse_upper_bound, converse_upper_curve, degraded_upper_bound, joint_lower_bound, joint_lower_points, separate_lower_bound,
    separate_lower_points, single_weak_bounds, upper_hull,
};
use cachebc::model::{NetworkConfig, RateMemoryPoint};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn config() -> impl Strategy<Value = NetworkConfig> {
    (1usize..7, 1usize..21, 0.01f64..0.99, 0.0f64..1.0, 1u32..16, 0usize..20).prop_map(|(kw, ks, dw, frac, f, extra)| {
        NetworkConfig {
            k_weak: kw,
            k_strong: ks,
            delta_weak: dw,
            delta_strong: dw * frac,
            packet_bits: f,
            num_files: kw + ks + extra,
            memory: 0.0,
        }
    })
}

fn check_dominance(c: &NetworkConfig) -> Result<(), TestCaseError> {
    let joint = joint_lower_bound(c).unwrap();
    let sep = separate_lower_bound(c).unwrap();
    let m_kw = joint_lower_points(c).unwrap()[c.k_weak].memory;
    for m in grid(c, 60) {
        let (j, s) = (joint.eval(m).unwrap(), sep.eval(m).unwrap());
        prop_assert!(j >= s - 1e-9, "M = {m}: joint {j} below separate {s}");
        if m > 1e-9 && m < m_kw - 1e-9 && c.delta_strong < c.delta_weak - 1e-6 {
            prop_assert!(j > s + 1e-12, "M = {m}: joint {j} not above separate {s}");
        }
    }
    Ok(())
}

fn grid(c: &NetworkConfig, points: usize) -> Vec<f64> {
    let top = c.trivial_memory().unwrap();
    (0..points).map(|i| top * i as f64 / (points - 1) as f64).collect()
}

proptest! {
    #[test]
    fn sandwich(c in config()) {
        let lower = joint_lower_bound(&c).unwrap();
        for m in grid(&c, 100) {
            let lo = lower.eval(m).unwrap();
            let up = converse_upper_bound(&c, m).unwrap().rate;
            prop_assert!(lo <= up + 1e-9, "M = {m}: {lo} > {up}");
        }
    }

    #[test]
    fn joint_dominates_separate_with_gap(c in config()) {
        let gap = (c.delta_weak - c.delta_strong) / (1.0 - c.delta_weak) * c.k_strong as f64 / c.k_weak as f64;
        prop_assume!(gap >= 0.2);
        check_dominance(&c)?;
    }

    #[test]
    fn endpoints_agree(c in config()) {
        let top = c.trivial_memory().unwrap();
        let r_top = c.f() * (1.0 - c.delta_strong) / c.k_strong as f64;
        let curves = [joint_lower_bound(&c).unwrap(), separate_lower_bound(&c).unwrap(), converse_upper_curve(&c).unwrap()];
        let r0 = curves[0].eval(0.0).unwrap();
        for b in &curves {
            prop_assert!((b.eval(0.0).unwrap() - r0).abs() < 1e-9);
            prop_assert!((b.eval(top).unwrap() - r_top).abs() < 1e-9);
        }
        prop_assert!((converse_upper_bound(&c, 0.0).unwrap().rate - r0).abs() < 1e-9);
    }

    #[test]
    fn hull_is_concave(pts in prop::collection::vec((0.0f64..100.0, 0.0f64..10.0), 1..30)) {
        let pts: Vec<RateMemoryPoint> = pts.into_iter().map(|(m, r)| RateMemoryPoint::new(m, r)).collect();
        let hull = upper_hull(&pts).unwrap();
        let slopes = hull.slopes();
        prop_assert!(slopes.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{slopes:?}");
        for p in &pts {
            prop_assert!(hull.eval(p.memory).unwrap() >= p.rate - 1e-9);
        }
    }

    #[test]
    fn single_weak_tight_region(ks in 1usize..20, dw in 0.01f64..0.99, frac in 0.0f64..1.0, f in 1u32..16, extra in 0usize..20) {
        let c = NetworkConfig { k_weak: 1, k_strong: ks, delta_weak: dw, delta_strong: dw * frac, packet_bits: f, num_files: 1 + ks + extra, memory: 0.0 };
        let b = single_weak_bounds(&c).unwrap();
        let end = c.num_files as f64 * b.gamma1;
        for i in 0..=50 {
            let m = end * i as f64 / 50.0;
            prop_assert!((b.lower.eval(m).unwrap() - b.upper.eval(m).unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn degraded_matches_converse_on_homogeneous_groups() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = (1usize..7, 1usize..7, 0.01f64..0.99, 0.0f64..1.0, 1u32..16, 0usize..10, 0.0f64..1.0);
    for _ in 0..50 {
        let (kw, ks, dw, frac, f, extra, mfrac) = strategy.new_tree(&mut runner).unwrap().current();
        let c = NetworkConfig { k_weak: kw, k_strong: ks, delta_weak: dw, delta_strong: dw * frac, packet_bits: f, num_files: kw + ks + extra, memory: 0.0 };
        let m = mfrac * c.trivial_memory().unwrap();
        let mut memories = vec![m; kw];
        memories.extend(vec![0.0; ks]);
        let brute = degraded_upper_bound(&c.erasure_probabilities(), &memories, c.num_files, f).unwrap();
        let conv = converse_upper_bound(&c, m).unwrap();
        assert!((brute.rate - conv.rate).abs() < 1e-9, "{c:?} M = {m}: {} vs {}", brute.rate, conv.rate);
    }
}

/// With a small erasure gap the joint `t` point nearly coincides with the
/// separate `t - 1` point, and the separate `t = K_w` point pokes out
/// above the joint hull.
#[test]
fn dominance_fails_for_small_gaps() {
    let c = NetworkConfig { k_weak: 3, k_strong: 1, delta_weak: 0.01, delta_strong: 0.0, packet_bits: 1, num_files: 4, memory: 0.0 };
    let m = separate_lower_points(&c).unwrap()[1].memory;
    let (j, s) = (joint_lower_bound(&c).unwrap().eval(m).unwrap(), separate_lower_bound(&c).unwrap().eval(m).unwrap());
    assert!(j < s - 1e-4, "joint {j}, separate {s}");
}

#[test]
#[ignore = "false for small erasure gaps, see dominance_fails_for_small_gaps"]
fn joint_dominates_separate_everywhere() {
    proptest!(|(c in config())| check_dominance(&c)?);
}
