use percq_core::cube::GraphParams;
use percq_core::engine::percolates;
use percq_core::mc::{
    estimate_prob, find_pc, sample_initial, sample_points, theoretical_scale, wilson_interval, Backend, Seed,
};
use percq_core::oracle::oracle_verdict;
use percq_core::report::{estimates_csv, EstimateRow};
use rand::{Rng, SeedableRng};

#[test]
fn dense_samples_agree_with_oracle_per_trial() {
    for (n, r) in [(8, 2), (9, 2), (10, 2), (8, 3), (9, 3), (10, 3)] {
        let params = GraphParams::new(n, 2, r).unwrap();
        let p = theoretical_scale(&params) * 4.0;
        for t in 0..400 {
            let a0 = sample_initial(&params, p, Seed::new(11).for_trial(t)).unwrap();
            let engine = percolates(&a0, &params).unwrap();
            let oracle = oracle_verdict(&a0.to_vec(), &params).unwrap();
            assert_eq!(engine, oracle, "n={n} r={r} trial={t}");
        }
    }
}

#[test]
fn dense_sampling_is_a_monotone_coupling() {
    let params = GraphParams::new(10, 2, 2).unwrap();
    for t in 0..50 {
        let seed = Seed::new(3).for_trial(t);
        let mut prev = sample_initial(&params, 0.0, seed).unwrap();
        for p in [0.001, 0.01, 0.05, 0.2, 0.6, 1.0] {
            let next = sample_initial(&params, p, seed).unwrap();
            assert!(prev.is_subset_of(&next));
            prev = next;
        }
        assert!(prev.is_full());
    }
}

#[test]
fn sparse_sampler_has_the_right_mean() {
    let (n, p) = (16, 1.0 / 512.0);
    let trials = 2000u64;
    let total: usize = (0..trials)
        .map(|t| sample_points(n, p, Seed::new(5).for_trial(t)).unwrap().len())
        .sum();
    let mean = total as f64 / trials as f64;
    let expected = 128.0;
    let sd = (expected * (1.0 - p) / trials as f64).sqrt();
    assert!((mean - expected).abs() < 5.0 * sd, "mean {mean}");
}

#[test]
fn wilson_interval_is_calibrated() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let (p, trials) = (0.3, 200u64);
    let covered = (0..1000)
        .filter(|_| {
            let hits = (0..trials).filter(|_| rng.random::<f64>() < p).count() as u64;
            let (lo, hi) = wilson_interval(hits, trials);
            lo <= p && p <= hi
        })
        .count();
    assert!(covered >= 930, "coverage {covered}/1000");
}

#[test]
fn estimates_are_reproducible_across_pools() {
    let params = GraphParams::new(10, 2, 2).unwrap();
    let p = theoretical_scale(&params) * 3.0;
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let rows: Vec<EstimateRow> = [Backend::Engine, Backend::Oracle]
                .into_iter()
                .map(|backend| EstimateRow {
                    params,
                    backend,
                    seed: 17,
                    estimate: estimate_prob(&params, p, 300, 17, backend).unwrap(),
                })
                .collect();
            estimates_csv(&rows).unwrap()
        })
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn find_pc_brackets_one_half() {
    let params = GraphParams::new(10, 2, 2).unwrap();
    let res = find_pc(&params, 400, 99, Backend::Oracle, 1.1).unwrap();
    assert!(res.p_low < res.p_high && res.p_high / res.p_low <= 1.1);
    assert!(res.rate_low.unwrap() <= 0.5 && res.rate_high.unwrap() > 0.5);
    assert!((res.p_hat - (res.p_low * res.p_high).sqrt()).abs() < 1e-15);
    assert_eq!(res.history.len(), res.evals);
    let again = find_pc(&params, 400, 99, Backend::Oracle, 1.1).unwrap();
    assert_eq!(res, again);
}

#[test]
fn sparse_sampler_refuses_huge_samples() {
    assert!(sample_points(40, 0.5, Seed::new(1)).is_err());
    assert!(sample_points(60, 1e-12, Seed::new(1)).is_ok());
}
