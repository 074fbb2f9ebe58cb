use std::f64::consts::TAU;
use std::sync::OnceLock;

use proptest::prelude::*;
use psilab_core::amplifier::{concentrate, holder_amplify, ConcentrationInstance, HolderOptions};
use psilab_core::bohr_geometry::{count_members, truncated_measure, BohrSpec};
use psilab_core::chebyshev_psi::{build_psi_series, mangoldt, PsiSeries};
use psilab_core::explicit_formula::{detect_tx, exp_sum};
use psilab_core::smooth_majorant::{bohr_majorant, vinogradov_bump, VinogradovParams};
use psilab_core::zero_table::{max_window_count, ZeroTable};

fn dist(y: f64) -> f64 {
    (y - y.round()).abs()
}

fn naive_mangoldt(n: u64) -> f64 {
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            while m.is_multiple_of(p) {
                m /= p;
            }
            return if m == 1 { (p as f64).ln() } else { 0.0 };
        }
        p += 1;
    }
    if n >= 2 {
        (m as f64).ln()
    } else {
        0.0
    }
}

fn psi_20k() -> &'static (PsiSeries, Vec<f64>) {
    static P: OnceLock<(PsiSeries, Vec<f64>)> = OnceLock::new();
    P.get_or_init(|| {
        let psi = build_psi_series(20_000).unwrap();
        let mut naive = vec![0.0; 20_001];
        for n in 1..=20_000u64 {
            naive[n as usize] = naive[n as usize - 1] + naive_mangoldt(n);
        }
        (psi, naive)
    })
}

/// Sorted, strictly increasing ordinates starting near the first zero.
fn table_strategy(max_len: usize) -> impl Strategy<Value = ZeroTable> {
    prop::collection::vec(1e-3..3.0f64, 5..max_len).prop_map(|gaps| {
        let mut g = 14.134_725;
        let zs = gaps
            .into_iter()
            .map(|d| {
                let v = g;
                g += d;
                v
            })
            .collect();
        ZeroTable::from_ordinates(zs, "synthetic").unwrap()
    })
}

fn spec_strategy() -> impl Strategy<Value = BohrSpec> {
    (1usize..=3, 0.02..0.45f64, 5.0..200.0f64)
        .prop_flat_map(|(k, rho, t)| {
            (
                prop::collection::vec(0.1..5.0f64, k),
                prop::collection::vec(0.0..1.0f64, k),
                Just(rho),
                Just(t),
            )
        })
        .prop_map(|(f, p, rho, t)| BohrSpec::new(f, p, rho, Some(t)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_zeros_is_right_continuous(t in table_strategy(200)) {
        for &g in t.ordinates() {
            let jump = t.count_zeros(g).unwrap() - t.count_zeros(g - 1e-9).unwrap();
            prop_assert_eq!(jump, 1);
        }
    }

    #[test]
    fn partition_covers_and_bounds_windows(t in table_strategy(400), k in 1.0..6.0f64, c in 1.0..3.0f64) {
        let top = t.t_max();
        prop_assume!(top >= 10.0);
        let p = t.partition_zeros(top, k, c).unwrap();
        let mut all: Vec<usize> = p.n1.iter().chain(&p.n2).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..t.len()).collect::<Vec<_>>());
        let zs = t.up_to(top);
        let n1: Vec<f64> = p.n1.iter().map(|&i| zs[i]).collect();
        let len = 1.0 / top.ln();
        let cap = c * k;
        // Grid-aligned windows, and windows shifted by half a window.
        for offset in [0.0, 0.5 * len] {
            let mut counts = std::collections::BTreeMap::new();
            for &g in &n1 {
                *counts.entry(((g - offset) / len).floor() as i64).or_insert(0usize) += 1;
            }
            let bound = if offset == 0.0 { cap } else { 2.0 * cap };
            prop_assert!(counts.values().all(|&n| n as f64 <= bound));
        }
        prop_assert!(max_window_count(&n1, len) as f64 <= 2.0 * cap);
    }

    #[test]
    fn pair_counts_are_reflection_symmetric(t in table_strategy(150), a in 0.05..1.5f64, w in 0.1..1.5f64) {
        let b = a + w;
        let top = t.t_max();
        let p = t.pair_correlation(top, a, b).unwrap();
        let zs = t.up_to(top);
        let (lo, hi) = (TAU * a / top.ln(), TAU * b / top.ln());
        let mut forward = 0u64;
        let mut backward = 0u64;
        for &g in zs {
            for &h in zs {
                forward += u64::from((lo..=hi).contains(&(g - h)));
                backward += u64::from((lo..=hi).contains(&(h - g)));
            }
        }
        prop_assert_eq!(p.observed, forward);
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn mangoldt_matches_trial_division(n in 1u64..100_000) {
        prop_assert_eq!(mangoldt(n).unwrap(), naive_mangoldt(n));
    }

    #[test]
    fn psi_matches_naive_sum(x in 2.0..20_000.0f64) {
        let (psi, naive) = psi_20k();
        prop_assert!((psi.psi(x) - naive[x.floor() as usize]).abs() <= 1e-9);
    }

    #[test]
    fn large_value_measure_is_monotone(lo in 100.0..5_000.0f64, w in 100.0..10_000.0f64, e1 in 0.0..0.05f64, de in 0.0..0.05f64) {
        let (psi, _) = psi_20k();
        let hi = (lo + w).min(20_000.0);
        let full = psi.large_value_scan(lo, hi, 0.0, 0.5).unwrap();
        prop_assert!((full.measure_estimate - (hi - lo)).abs() <= 1e-9 * hi);
        let m1 = psi.large_value_scan(lo, hi, e1, 0.5).unwrap().measure_estimate;
        let m2 = psi.large_value_scan(lo, hi, e1 + de, 0.5).unwrap().measure_estimate;
        prop_assert!(m2 <= m1 + 1e-9 * hi);
    }

    #[test]
    fn exp_sum_is_bounded_by_count(t in table_strategy(300), x in 2.0..1e6f64, frac in 0.0..1.0f64) {
        let h = 14.0 + frac * (t.t_max() - 14.0);
        let s = exp_sum(&t, x, h).unwrap();
        prop_assert!(s.norm() <= t.count_zeros(h).unwrap() as f64 + 1e-9);
    }

    #[test]
    fn exp_sum_steps_have_unit_modulus(t in table_strategy(100), x in 2.0..1e6f64) {
        let zs = t.ordinates();
        for i in 1..zs.len() {
            let d = exp_sum(&t, x, zs[i]).unwrap() - exp_sum(&t, x, zs[i - 1]).unwrap();
            prop_assert!((d.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn bohr_contains_matches_decomposition(spec in spec_strategy(), xs in prop::collection::vec(0.0..1.0f64, 200)) {
        let t = spec.t_trunc.unwrap();
        let m = truncated_measure(&spec).unwrap();
        for u in xs {
            let x = u * t;
            let near_edge = m.decomposition.intervals.iter().any(|iv| (x - iv.lo).abs() < 1e-9 || (x - iv.hi).abs() < 1e-9);
            if !near_edge {
                prop_assert_eq!(spec.contains(x), m.decomposition.contains(x));
            }
        }
    }

    #[test]
    fn bohr_measure_is_monotone_in_radius(spec in spec_strategy(), grow in 0.0..0.04f64) {
        let wider = spec.with_radius((spec.radius + grow).min(0.49)).unwrap();
        let a = truncated_measure(&spec).unwrap();
        let b = truncated_measure(&wider).unwrap();
        prop_assert!(b.measure >= a.measure - 1e-12);
        for iv in &a.decomposition.intervals {
            prop_assert!(b.decomposition.contains(iv.midpoint()));
        }
    }

    #[test]
    fn bohr_measure_invariances(spec in spec_strategy(), shift in -3i32..3, which in 0usize..3) {
        let base = truncated_measure(&spec).unwrap().measure;
        let j = which % spec.rank();
        let mut phases = spec.phases.clone();
        phases[j] += shift as f64;
        let shifted = BohrSpec::new(spec.freqs.clone(), phases, spec.radius, spec.t_trunc).unwrap();
        prop_assert!((truncated_measure(&shifted).unwrap().measure - base).abs() <= 1e-9);
        let mut freqs = spec.freqs.clone();
        let mut phases = spec.phases.clone();
        freqs[j] = -freqs[j];
        phases[j] = -phases[j];
        let negated = BohrSpec::new(freqs, phases, spec.radius, spec.t_trunc).unwrap();
        prop_assert!((truncated_measure(&negated).unwrap().measure - base).abs() <= 1e-9);
    }

    #[test]
    fn rank_one_measure_matches_closed_form(a in 0.1..5.0f64, b in 0.0..1.0f64, rho in 0.01..0.49f64, t in 1.0..500.0f64) {
        let near = |u: f64| {
            let f = u - u.floor();
            u.floor() * 2.0 * rho + f.min(rho) + (f - (1.0 - rho)).max(0.0)
        };
        let spec = BohrSpec::new(vec![a], vec![b], rho, Some(t)).unwrap();
        let exact = truncated_measure(&spec).unwrap().measure;
        prop_assert!((exact - (near(a * t + b) - near(b)) / a).abs() <= 1e-12 * (1.0 + t));
        prop_assert!((exact - 2.0 * rho * t).abs() <= 2.0 * rho / a + 1e-9);
    }

    #[test]
    fn bump_plateau_and_support(a in -0.4..0.3f64, w in 0.05..0.3f64, frac in 0.05..1.0f64, r in 1u32..6, us in prop::collection::vec(0.0..1.0f64, 1000)) {
        let delta = frac * w;
        let f = vinogradov_bump(VinogradovParams { a, b: a + w, delta, r }).unwrap();
        for u in us {
            let inside = a + delta / 2.0 + u * (w - delta).max(0.0);
            if w > delta {
                prop_assert_eq!(f.value(inside), 1.0);
            }
            let outside = a + w + delta / 2.0 + u * (1.0 - w - delta);
            prop_assert_eq!(f.value(outside), 0.0);
            let any = a - delta + u * (w + 2.0 * delta);
            let v = f.value(any);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn bump_coefficient_bounds(a in -0.4..0.3f64, w in 0.05..0.5f64, frac in 0.05..1.0f64, r in 1u32..6) {
        let delta = frac * w;
        let f = vinogradov_bump(VinogradovParams { a, b: a + w, delta, r }).unwrap();
        prop_assert_eq!(f.coefficient(0).re, (a + w) - a);
        for m in (1..=1000).flat_map(|m| [m, -m]) {
            let c = f.coefficient(m).norm();
            prop_assert!(f.coefficient_bounds(m).iter().all(|&b| c <= b));
        }
    }

    #[test]
    fn bohr_majorant_dominates(spec in spec_strategy(), eta in 0.01..0.5f64, xs in prop::collection::vec(0.0..1.0f64, 500)) {
        prop_assume!(2.0 * spec.radius * (1.0 + 2.0 * eta) <= 1.0);
        let maj = bohr_majorant(&spec.freqs, &spec.phases, spec.radius, eta, 2).unwrap();
        let t = spec.t_trunc.unwrap();
        for u in xs {
            let x = u * t;
            if spec.contains(x) {
                prop_assert!(maj.value(x) >= 1.0);
            }
        }
    }

    #[test]
    fn concentrate_count_is_exact(points in prop::collection::vec(0.0..500.0f64, 10..300), freq in 0.1..3.0f64, eps in 0.001..0.2f64) {
        let inst = ConcentrationInstance { points: points.clone(), t: 500.0, freq, delta: 0.5, eps, c_const: 100.0 };
        let r = concentrate(&inst).unwrap();
        let spec = BohrSpec::new(vec![freq], vec![r.beta_star], eps, None).unwrap();
        prop_assert_eq!(count_members(&spec, &points), r.achieved);
    }

    #[test]
    fn holder_rank_one_is_sum_of_counts(zs in prop::collection::vec(14.0..2000.0f64, 1..300), xs in prop::collection::vec(2.0..1e5f64, 1..6), seed in any::<u64>(), rho in 0.01..0.45f64) {
        let phases: Vec<f64> = xs.iter().enumerate().map(|(i, _)| ((seed >> (i * 8)) & 0xff) as f64 / 256.0).collect();
        let r = holder_amplify(&xs, &phases, &zs, rho, 1, 0.0, &HolderOptions::default()).unwrap();
        let direct: usize = xs.iter().zip(&phases).map(|(&x, &b)| zs.iter().filter(|&&g| dist(x.ln() / TAU * g + b) <= rho).count()).sum();
        prop_assert_eq!(r.rhs, direct as f64);
    }
}

#[test]
fn tx_set_shrinks_with_threshold() {
    let zs: Vec<f64> = (0..3000)
        .map(|n| 14.134_725 + 0.9 * n as f64 + 0.3 * (n as f64 * 0.7).sin())
        .collect();
    let t = ZeroTable::from_ordinates(zs, "synthetic").unwrap();
    for (x, big_x) in [(1.5e6, 1e6), (1.2e6, 1e6), (1.9e6, 1e6)] {
        let mut prev = None;
        for coeff in [0.01, 0.1, 1.0, 8.0 * std::f64::consts::PI] {
            let r = detect_tx(&t, x, big_x, 0.05, 0.5, 0.1, coeff).unwrap();
            if let Some(p) = &prev {
                let p: &psilab_core::IntervalUnion = p;
                for iv in &r.t_set.intervals {
                    assert!(
                        p.contains(iv.lo) && p.contains(iv.hi),
                        "{iv:?} escapes the looser set"
                    );
                }
                assert!(r.t_set.total_measure <= p.total_measure + 1e-9);
            }
            prev = Some(r.t_set);
        }
    }
}
