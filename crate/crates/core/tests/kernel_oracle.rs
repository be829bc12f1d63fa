mod support;

use hdpe::cov_test::{pair_terms, scan_pairs, trace_estimates};
use hdpe::mean_test::{marginal_mean_stats, sigma01_hat};
use hdpe::{Exec, TwoSampleData};
use ndarray::Array2;
use rand::Rng;

const TOL: f64 = 1e-10;

#[test]
fn pair_terms_match_enumeration() {
    let mut rng = support::rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n1 = rng.random_range(4..=8);
        let n2 = rng.random_range(4..=8);
        let p = rng.random_range(1..=4);
        let data = support::random_instance(&mut rng, n1, n2, p);
        for i in 0..p {
            for j in 0..p {
                let got = pair_terms(&data, i, j);
                let want = support::pair(&data, i, j);
                for (g, w) in [got.a, got.b, got.c, got.t()].into_iter().zip(want) {
                    worst = worst.max(w.rel_err(g));
                }
            }
        }
    }
    assert!(worst <= TOL, "worst relative error {worst:e}");
}

#[test]
fn marginal_means_match_enumeration() {
    let mut rng = support::rng(2);
    for _ in 0..200 {
        let n1 = rng.random_range(4..=12);
        let n2 = rng.random_range(4..=12);
        let p = rng.random_range(1..=8);
        let data = support::random_instance(&mut rng, n1, n2, p);
        for (i, m) in marginal_mean_stats(&data, Exec::Sequential).iter().enumerate() {
            let want = support::mean_piece(&data, i);
            assert!(want.rel_err(m.m_i) <= 1e-12, "{} vs {}", m.m_i, want.value);
        }
    }
}

#[test]
fn streaming_traces_match_enumeration() {
    let mut rng = support::rng(3);
    for _ in 0..40 {
        let data = support::random_instance(&mut rng, 6, 6, 3);
        let got = trace_estimates(&data, Exec::Parallel);
        let [a, b, c] = support::traces(&data);
        assert!(a.rel_err(got.a_n1) <= TOL);
        assert!(b.rel_err(got.b_n2) <= TOL);
        assert!(c.rel_err(got.c_n1n2) <= TOL);
    }
}

#[test]
fn sigma01_matches_plugged_in_enumeration() {
    let mut rng = support::rng(4);
    for _ in 0..40 {
        let (n1, n2) = (rng.random_range(4..=8), rng.random_range(4..=8));
        let data = support::random_instance(&mut rng, n1, n2, 4);
        let got = sigma01_hat(&trace_estimates(&data, Exec::Sequential), n1, n2).unwrap();
        let [a, b, c] = support::traces(&data).map(|e| e.value);
        let (f1, f2) = (n1 as f64, n2 as f64);
        let want = (2.0 * a / (f1 * (f1 - 1.0)) + 2.0 * b / (f2 * (f2 - 1.0)) + 4.0 * c / (f1 * f2)).sqrt();
        assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
    }
}

#[test]
fn enumerated_terms_are_location_invariant() {
    let mut rng = support::rng(5);
    for _ in 0..20 {
        let data = support::random_instance(&mut rng, 6, 7, 3);
        let shift: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
        let moved = |m: ndarray::ArrayView2<'_, f64>| {
            Array2::from_shape_fn(m.dim(), |(u, c)| m[[u, c]] + shift[c])
        };
        let shifted = TwoSampleData::new(moved(data.x()), moved(data.y())).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let t0 = support::pair(&data, i, j)[3];
                let t1 = support::pair(&shifted, i, j)[3];
                assert!(t0.rel_err(t1.value) <= 1e-8);
                let fast = pair_terms(&shifted, i, j).t();
                assert!(t0.rel_err(fast) <= 1e-8);
            }
        }
    }
}

#[test]
fn full_statistic_matches_enumeration() {
    let mut rng = support::rng(6);
    for _ in 0..20 {
        let data = support::random_instance(&mut rng, 5, 8, 4);
        let scan = scan_pairs(&data, None, Exec::Sequential, true);
        let [a, b, c] = support::traces(&data);
        let want = a.value + b.value - 2.0 * c.value;
        let scale = a.scale + b.scale + 2.0 * c.scale;
        assert!((scan.traces.t_raw() - want).abs() <= TOL * want.abs().max(scale));
    }
}
