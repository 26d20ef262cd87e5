use std::collections::HashSet;

use rho_lab::poisson::{poisson_gap, run_collisions, sample_z};
use rho_lab::seqsim::sample_rho;
use rho_lab::theory::{chen_stein_bounds, window_collision_prob};
use rho_lab::{Params, RngStream};

fn p(m: u64, k: u32) -> Params {
    Params::new(m, k).unwrap()
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn window_collision_probability_by_enumeration() {
    for m in 1u64..=4 {
        for k in 1u32..=3 {
            let params = p(m, k);
            let i = 1usize;
            // Overlapping offsets plus the first disjoint one.
            for j in i + 1..=i + k as usize {
                let len = j + k as usize - 1;
                let total = m.pow(len as u32);
                let mut hits = 0u64;
                for code in 0..total {
                    let mut x = vec![0u64; len];
                    let mut c = code;
                    for slot in x.iter_mut() {
                        *slot = c % m;
                        c /= m;
                    }
                    let wi = &x[i - 1..i - 1 + k as usize];
                    let wj = &x[j - 1..j - 1 + k as usize];
                    if wi == wj {
                        hits += 1;
                    }
                }
                // hits / m^len == m^{-k}
                assert_eq!(hits * m.pow(k), total, "m={m} k={k} j={j}");
                let prob = window_collision_prob(params, i as u64, j as u64).unwrap();
                assert!((prob - hits as f64 / total as f64).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn mean_collision_count_matches_pair_expectation() {
    for (m, k, x) in [(10u64, 2u32, 1.0), (30, 2, 0.5), (5, 3, 2.0)] {
        let params = p(m, k);
        let bounds = chen_stein_bounds(params, x).unwrap();
        let zs: Vec<f64> = run_collisions(params, x, 100_000, 40, None)
            .unwrap()
            .iter()
            .map(|r| r.z as f64)
            .collect();
        let (mean, se) = mean_and_se(&zs);
        let expected = bounds.pair_count_alt / params.states() as f64;
        assert!(
            (mean - expected).abs() < 4.0 * se,
            "m={m}: {mean} vs {expected} (se {se})"
        );
    }
}

#[test]
fn lambda_is_mean_pair_count_over_first_n_windows() {
    // Counting only W_1..W_N (pairs among N windows) has mean C(N,2)/m^k.
    let params = p(10, 2);
    let bounds = chen_stein_bounds(params, 1.0).unwrap();
    assert_eq!(bounds.n_windows, 14);
    assert!((bounds.lambda - 0.91).abs() < 1e-12);
    let n = bounds.n_windows as usize;
    let zs: Vec<f64> = (0..100_000u64)
        .map(|i| {
            let mut s = RngStream::new(41, i);
            let x: Vec<u64> = (0..n + 1).map(|_| s.next_symbol(10)).collect();
            let windows: Vec<&[u64]> = x.windows(2).collect();
            let mut z = 0u64;
            for a in 0..windows.len() {
                for b in a + 1..windows.len() {
                    z += (windows[a] == windows[b]) as u64;
                }
            }
            z as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&zs);
    assert!((mean - 0.91).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn zero_collision_probability_m100() {
    let params = p(100, 2);
    let bounds = chen_stein_bounds(params, 1.0).unwrap();
    let n = 100_000u64;
    let records = run_collisions(params, 1.0, n, 42, None).unwrap();
    let p0 = records.iter().filter(|r| r.z == 0).count() as f64 / n as f64;
    let target = (-bounds.lambda_alt).exp();
    let se = (target * (1.0 - target) / n as f64).sqrt();
    assert!((p0 - target).abs() < 3.0 * se, "p0 {p0} vs {target}");
}

#[test]
fn no_collision_event_matches_late_first_repeat() {
    // Z = 0 iff the first N + 1 windows are distinct iff tau > N + k.
    let (m, k, x) = (30u64, 2u32, 0.5);
    let params = p(m, k);
    let bounds = chen_stein_bounds(params, x).unwrap();
    let n = 100_000u64;
    let z0 = run_collisions(params, x, n, 43, None)
        .unwrap()
        .iter()
        .filter(|r| r.z == 0)
        .count() as f64
        / n as f64;
    let cutoff = bounds.n_windows + k as u64;
    let late = (0..n)
        .filter(|&i| sample_rho(params, &mut RngStream::new(44, i)).tau > cutoff)
        .count() as f64
        / n as f64;
    let se = ((z0 * (1.0 - z0) + late * (1.0 - late)) / n as f64).sqrt();
    assert!(
        (z0 - late).abs() < 3.0 * se,
        "P(Z=0) {z0} vs P(tau > {cutoff}) {late}"
    );
}

#[test]
fn zero_collisions_coincide_with_distinct_windows_pathwise() {
    let params = p(7, 2);
    for i in 0..2_000 {
        let rec = sample_z(params, 1.5, &mut RngStream::new(45, i)).unwrap();
        let mut replay = RngStream::new(45, i);
        let x: Vec<u64> = (0..rec.n_windows + 2)
            .map(|_| replay.next_symbol(7))
            .collect();
        let distinct: HashSet<&[u64]> = x.windows(2).collect();
        assert_eq!(rec.z == 0, distinct.len() as u64 == rec.n_windows + 1);
        let r = sample_rho(params, &mut RngStream::new(45, i));
        assert_eq!(rec.z == 0, r.tau > rec.n_windows + 2);
    }
}

#[test]
fn chen_stein_gap_within_bound_m30() {
    let gap = poisson_gap(p(30, 2), 0.5, 100_000, 46, None).unwrap();
    assert!(gap.p0_gap <= gap.bound, "{} > {}", gap.p0_gap, gap.bound);
    assert!((gap.mean_z - gap.expected_z).abs() < 4.0 * gap.mean_z_se);
}
