use proptest::prelude::*;
use std::f64::consts::PI;
use stripsde_core::rng::ScalarDist;
use stripsde_core::{c, RMat, C64};
use stripsde_models::channel::{build_goe_channel, decompose_channels, PARABOLIC_TOL};
use stripsde_models::{ChannelData, StripModel};
use stripsde_sdelimit::ChannelSde;
use stripsde_spectra::limit::oracle_roots;
use stripsde_spectra::*;

/// Single chain at E = 1: one elliptic channel with z = e^{i pi/3}.
fn third_root_channel() -> ChannelData {
    let s = StripModel::new(RMat::zeros(1, 1), 1.0, ScalarDist::Gaussian).unwrap();
    decompose_channels(&s, 1.0, PARABOLIC_TOL).unwrap()
}

fn one() -> Vec<C64> {
    vec![c(1.0, 0.0)]
}

fn lattice_in(lo: f64, hi: f64) -> Vec<f64> {
    let s = 3f64.sqrt() * PI;
    (-20..=20).map(|k| k as f64 * s).filter(|&x| x > lo && x < hi).collect()
}

#[test]
fn noiseless_zeros_form_the_lattice() {
    let g = ChannelSde::anderson(&third_root_channel(), 0.0, true).unwrap();
    let grid = linspace(-30.0, 30.0, 2048);
    let pp = sde_eigenvalue_process(&g, &one(), &grid, 1e-3, 0).unwrap();
    let want = lattice_in(-30.0, 30.0);
    assert_eq!(pp.len(), want.len());
    for (a, b) in pp.points.iter().zip(&want) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn noiseless_operator_lattice() {
    let g = ChannelSde::anderson(&third_root_channel(), 0.0, true).unwrap();
    let grid = linspace(-30.0, 30.0, 1024);
    let mesh = 2000;
    let ev = operator_oracle(&g, &one(), mesh, &grid, 0).unwrap();
    let want = lattice_in(-30.0, 30.0);
    assert_eq!(ev.len(), want.len());
    for (a, b) in ev.iter().zip(&want) {
        assert!((a - b).abs() < 10.0 / mesh as f64, "{a} vs {b}");
    }
}

#[test]
fn strip_spacing_matches_the_lattice() {
    // chain at E = 1 on n = 2000 sites: local rescaled spacing -> sqrt(3) pi
    let s = StripModel::new(RMat::zeros(1, 1), 1.0, ScalarDist::Gaussian).unwrap();
    let pp = strip_eigenvalues(&s, 0.0, 2000, 30.0, 0, DENSE_CAP).unwrap();
    let g = gap_statistics(&pp).unwrap();
    let want = 3f64.sqrt() * PI;
    assert!((g.counts.mean_gap / want - 1.0).abs() < 0.01, "{}", g.counts.mean_gap);
}

fn noisy_channel() -> (ChannelSde, Vec<C64>) {
    let s = StripModel::laplacian(3, 1.0, 0.37, ScalarDist::Gaussian).unwrap();
    let ch = decompose_channels(&s, 0.37, PARABOLIC_TOL).unwrap();
    let z: Vec<C64> = ch.z_list.iter().map(|z| z.powu(41)).collect();
    (ChannelSde::anderson(&ch, 1.2, true).unwrap(), z)
}

#[test]
fn operator_matches_sde_zeros_on_shared_noise() {
    let (g, z) = noisy_channel();
    let mesh = 500;
    let dt = 1.0 / mesh as f64;
    let grid = linspace(-12.0, 12.0, 2048);
    for seed in 0..3 {
        let pp = sde_eigenvalue_process(&g, &z, &grid, dt, seed).unwrap();
        let ev = operator_oracle(&g, &z, mesh, &grid, seed).unwrap();
        assert!(pp.len() >= 3, "{:?}", pp.points);
        let tol = 10.0 * (dt + 1.0 / mesh as f64);
        let matched = |xs: &[f64], ys: &[f64]| xs.iter().filter(|x| x.abs() < 11.0).all(|x| ys.iter().any(|y| (x - y).abs() < tol));
        assert!(matched(&pp.points, &ev) && matched(&ev, &pp.points), "{:?} vs {:?}", pp.points, ev);
    }
}

#[test]
fn eigenvectors_satisfy_both_boundary_rows() {
    let (g, z) = noisy_channel();
    let o = OperatorOracle::new(&g, &z, 400, 5).unwrap();
    let ev = oracle_roots(&o, &linspace(-8.0, 8.0, 1024)).unwrap();
    assert!(!ev.is_empty());
    for e in ev {
        let psi = o.eigenvector(e);
        let (first, last) = o.boundary_residuals(&psi);
        assert!(first < 1e-8 && last < 1e-8, "{e}: {first} {last}");
    }
}

#[test]
fn noise_preserves_the_zero_density() {
    let g = ChannelSde::anderson(&third_root_channel(), 1.0, true).unwrap();
    let width = 10.0 * 3f64.sqrt() * PI;
    let grid = linspace(-width / 2.0, width / 2.0, 2048);
    let reps = 200u64;
    let total: usize = (0..reps).map(|s| sde_eigenvalue_process(&g, &one(), &grid, 0.01, s).unwrap().len()).sum();
    let mean = total as f64 / reps as f64;
    assert!((mean / 10.0 - 1.0).abs() < 0.1, "{mean}");
}

#[test]
fn drift_q_translates_the_zero_process() {
    let ch = build_goe_channel(4, -1.1, 1.0).unwrap();
    assert!(ch.d_h > 0 && ch.q.unwrap() != 0.0);
    let sigma = 0.6;
    let with_q = ChannelSde::goe(&ch, sigma).unwrap();
    let mut without = with_q.clone();
    without.q *= c(0.0, 0.0);
    let shift = sigma * sigma * ch.q.unwrap();
    let z = vec![c(1.0, 0.0); ch.d_e];
    let (mut ga, mut gb) = (vec![], vec![]);
    for seed in 0..20 {
        let base = linspace(-10.0, 10.0, 2048);
        let shifted: Vec<f64> = base.iter().map(|e| e + shift).collect();
        let a = sde_eigenvalue_process(&without, &z, &base, 0.01, seed).unwrap();
        let b = sde_eigenvalue_process(&with_q, &z, &shifted, 0.01, seed).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!((x + shift - y).abs() < 1e-6);
        }
        ga.extend(gap_statistics(&a).unwrap().gaps);
        gb.extend(gap_statistics(&b).unwrap().gaps);
    }
    assert!(ks_distance(&ga, &gb) < 0.05);
}

#[test]
fn reference_gaps_are_positive_with_unit_mean() {
    let g = goe_reference_gaps(2, 6, 100_000, 1).unwrap();
    assert_eq!(g.len(), 100_000);
    assert!(g.iter().all(|&x| x > 0.0));
    let m = g.iter().sum::<f64>() / g.len() as f64;
    assert!((m - 1.0).abs() < 1e-12);
}

#[test]
fn reference_gaps_are_stable_under_doubling() {
    let a = goe_reference_gaps(30, 40, 2000, 3).unwrap();
    let b = goe_reference_gaps(30, 40, 4000, 3).unwrap();
    assert!(ks_distance(&a, &b[a.len()..]) < 0.05);
}

#[test]
fn ks_calibration() {
    use stripsde_core::rng::{counter_rng, normal};
    let mut r = counter_rng(12, 6, 0);
    let a: Vec<f64> = (0..10_000).map(|_| normal(&mut r)).collect();
    let b: Vec<f64> = (0..10_000).map(|_| normal(&mut r)).collect();
    assert!(ks_distance(&a, &b) < 0.03);
}

#[test]
fn windowed_counts_are_monotone() {
    let s = StripModel::laplacian(2, 1.0, 0.3, ScalarDist::Gaussian).unwrap();
    let pp = strip_eigenvalues(&s, 0.05, 200, 40.0, 9, DENSE_CAP).unwrap();
    let counts: Vec<usize> = (1..=40).map(|w| pp.count_in(-(w as f64), w as f64)).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn determinant_scan_agrees_with_dense(d in 1usize..=3, n in 20usize..=300, e in -1.5f64..1.5, lam in 0.0f64..0.3, seed in 0u64..1000) {
        let s = StripModel::laplacian(d, 1.0, e, ScalarDist::Gaussian).unwrap();
        let dense = strip_eigenvalues(&s, lam, n, 15.0, seed, DENSE_CAP).unwrap();
        let scan = determinant_scan(&s, lam, n, &linspace(-15.0, 15.0, 2048), seed).unwrap();
        prop_assert!(scan.warnings.is_empty(), "{:?}", scan.warnings);
        prop_assert_eq!(dense.len(), scan.len());
        for (a, b) in dense.points.iter().zip(&scan.points) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }
}
