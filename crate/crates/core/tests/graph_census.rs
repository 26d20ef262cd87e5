use rho_lab::mapgraph::{
    analyze_graph, build_map, decompose, diag_fixed_point_prob, random_map_rho,
    stats_from_decomposition, trajectory, MapMode, MapTable,
};
use rho_lab::seqsim::sample_rho;
use rho_lab::stats::{empirical_pmf, tv_distance};
use rho_lab::{Params, RngStream, WindowCode};

fn p(m: u64, k: u32) -> Params {
    Params::new(m, k).unwrap()
}

/// Brute-force cycle detection on the state sequence, independent of the
/// library's trajectory code.
fn walk(map: &MapTable, seed: u64) -> (u64, u64) {
    let params = map.params();
    let values = map.values().unwrap();
    let mut order = vec![u64::MAX; params.states() as usize];
    let mut s = seed;
    let mut i = 0u64;
    while order[s as usize] == u64::MAX {
        order[s as usize] = i;
        s = params.roll(WindowCode(s), values[s as usize]).unwrap().0;
        i += 1;
    }
    let tail = order[s as usize];
    (tail, i - tail)
}

#[test]
fn graph_and_trajectory_agree_on_every_seed() {
    let shapes = [
        (100u64, 2u32),
        (10, 4),
        (21, 3),
        (2, 13),
        (3, 8),
        (10_000, 1),
        (7, 2),
    ];
    for (m, k) in shapes {
        let params = p(m, k);
        assert!(params.states() <= 10_000);
        for idx in 0..4 {
            let mut map = build_map(params, RngStream::new(500 + m, idx), MapMode::Dense).unwrap();
            let d = decompose(&map).unwrap();
            for seed in 0..params.states() {
                let from_graph = d.seed_rho(WindowCode(seed));
                let from_walk = trajectory(&mut map, WindowCode(seed)).unwrap();
                assert_eq!(from_graph, from_walk, "m={m} k={k} seed={seed}");
                let (tail, cycle) = walk(&map, seed);
                assert_eq!(from_graph.tau, tail + cycle + k as u64);
                assert_eq!(from_graph.period, cycle);
            }
        }
    }
}

#[test]
fn cycle_conservation() {
    for (m, k) in [(5u64, 3u32), (30, 2), (2, 10), (1, 4)] {
        let params = p(m, k);
        for idx in 0..10 {
            let map = build_map(params, RngStream::new(600, idx), MapMode::Dense).unwrap();
            let d = decompose(&map).unwrap();
            let stats = stats_from_decomposition(&map, &d);
            let on: u64 = (0..params.states())
                .filter(|&s| d.on_cycle(WindowCode(s)))
                .count() as u64;
            let from_hist: u64 = stats.cycle_length_hist.iter().map(|(len, c)| len * c).sum();
            assert_eq!(on, stats.states_on_cycles);
            assert_eq!(from_hist, on);
            let off = params.states() - on;
            assert_eq!(on + off, params.states());
            assert!(stats.n_cycles >= 1);
            assert_eq!(
                stats.n_cycles,
                stats.cycle_length_hist.values().sum::<u64>()
            );
            assert!(stats.tau_star as f64 >= stats.mean_tau);
            assert!(stats.mean_tau >= k as f64 + 1.0);
        }
    }
}

#[test]
fn period_one_seeds_iff_diagonal_fixed_point() {
    let mut seen = [false; 2];
    for (m, k) in [(2u64, 1u32), (2, 2), (3, 2), (4, 2), (2, 3), (3, 3), (5, 1)] {
        let params = p(m, k);
        for idx in 0..200 {
            let mut map = build_map(params, RngStream::new(700, idx), MapMode::Dense).unwrap();
            let stats = analyze_graph(&map).unwrap();
            let via_roll = (0..m).any(|j| {
                let d = params.diagonal(j).unwrap();
                params.roll(d, map.eval(d)).unwrap() == d
            });
            let via_value = (0..m).any(|j| map.eval(params.diagonal(j).unwrap()) == j);
            let has = stats.frac_seeds_period1 > 0.0;
            assert_eq!(has, via_roll);
            assert_eq!(has, via_value);
            assert_eq!(has, stats.has_diag_fixed_point);
            assert_eq!(has, map.has_diag_fixed_point());
            seen[has as usize] = true;
        }
    }
    assert_eq!(seen, [true, true]);
}

fn lazy_rho_tau(params: Params, stream: RngStream) -> u64 {
    let mut stream = stream;
    let seed = WindowCode(stream.next_symbol(params.states()));
    let mut map = build_map(params, stream, MapMode::Lazy).unwrap();
    trajectory(&mut map, seed).unwrap().tau
}

#[test]
fn lazy_and_dense_tau_laws_agree() {
    let params = p(3, 2);
    let n = 100_000u64;
    let dense =
        empirical_pmf((0..n).map(|i| random_map_rho(params, RngStream::new(800, i)).unwrap().tau));
    let lazy = empirical_pmf((0..n).map(|i| lazy_rho_tau(params, RngStream::new(801, i))));
    let tv = tv_distance(&dense, &lazy).unwrap();
    assert!(tv < 0.01, "tv {tv}");
}

#[test]
fn lazy_map_serves_large_state_spaces() {
    // M = 10^9 is above the dense budget.
    let params = p(1000, 3);
    assert!(build_map(params, RngStream::new(802, 0), MapMode::Dense).is_err());
    let tau = lazy_rho_tau(params, RngStream::new(802, 0));
    assert!(tau >= 4);
}

#[test]
fn map_and_sequence_tau_laws_agree() {
    for m in [2u64, 3] {
        let params = p(m, 2);
        let n = 100_000u64;
        let maps = empirical_pmf(
            (0..n).map(|i| random_map_rho(params, RngStream::new(900, i)).unwrap().tau),
        );
        let seq =
            empirical_pmf((0..n).map(|i| sample_rho(params, &mut RngStream::new(901, i)).tau));
        let tv = tv_distance(&maps, &seq).unwrap();
        assert!(tv < 0.01, "m={m}: tv {tv}");
    }
}

#[test]
fn diagonal_fixed_point_estimates() {
    let one = diag_fixed_point_prob(1, 100, 0, None).unwrap();
    assert_eq!(one.estimate, 1.0);
    assert_eq!(one.exact, 1.0);

    let two = diag_fixed_point_prob(2, 100_000, 3, None).unwrap();
    assert_eq!(two.exact, 0.75);
    assert!((two.estimate - 0.75).abs() < 4.0 * two.stderr.max(1e-3));

    let big = diag_fixed_point_prob(1000, 10_000, 4, None).unwrap();
    assert!((big.exact - 0.632_305).abs() < 1e-5);
    assert!(
        (big.estimate - big.exact).abs() < 4.0 * big.stderr,
        "{big:?}"
    );
}

#[test]
fn diagonal_sampler_matches_full_maps() {
    // Same event on full dense maps at small m.
    for m in [2u64, 3, 5] {
        let params = p(m, 2);
        let n = 20_000u64;
        let hits = (0..n)
            .filter(|&i| {
                let mut map = build_map(params, RngStream::new(950, i), MapMode::Dense).unwrap();
                map.has_diag_fixed_point()
            })
            .count() as f64
            / n as f64;
        let est = diag_fixed_point_prob(m, n, 951, None).unwrap();
        let se = (2.0 * est.exact * (1.0 - est.exact) / n as f64).sqrt();
        assert!((hits - est.estimate).abs() < 4.0 * se, "m={m}");
    }
}
