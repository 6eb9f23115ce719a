use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stripsde_core::linalg::{block, block_diag, max_abs_diff, orthonormal_columns, set_block};
use stripsde_core::rng::ScalarDist;
use stripsde_core::{c, cis, CMat};
use stripsde_models::{BlockSpectrum, NoiseModel};
use stripsde_product::flag::flag_distance;
use stripsde_product::{init_state, propagate_flag, run_product_with, schur, FlagSpectrum, Frame, ProductEngine, ZEnvelope};

fn gauss(r: &mut ChaCha8Rng, p: usize, q: usize) -> CMat {
    CMat::from_fn(p, q, |_, _| c(r.random::<f64>() * 2.0 - 1.0, r.random::<f64>() * 2.0 - 1.0))
}

fn well_conditioned(r: &mut ChaCha8Rng, d: usize) -> CMat {
    gauss(r, d, d) + CMat::identity(d, d) * c(2.0, 0.0)
}

/// Inverse of the Schur complement, read off the full inverse: X = (P* M^{-1} P)^{-1}.
fn schur_by_inverse(m: &CMat, d2: usize) -> CMat {
    let k = m.nrows() - d2;
    let inv = m.clone().try_inverse().unwrap();
    block(&inv, 0, 0, k, k).try_inverse().unwrap()
}

#[test]
fn schur_identity_on_random_matrices() {
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let m = gauss(&mut r, 6, 6) * c(2.0, 0.0);
        let (x, _) = match schur(&m, 2) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let want = schur_by_inverse(&m, 2);
        assert!(max_abs_diff(&x, &want) < 1e-10 * (1.0 + want.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schur_is_invariant_under_the_lower_group(seed in 0u64..u64::MAX) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let full = well_conditioned(&mut r, 5);
        let g = {
            let mut g = CMat::identity(5, 5);
            set_block(&mut g, 3, 0, &gauss(&mut r, 2, 3));
            set_block(&mut g, 3, 3, &well_conditioned(&mut r, 2));
            g
        };
        let (x0, z0) = schur(&full, 2).unwrap();
        let (x1, z1) = schur(&(&full * g), 2).unwrap();
        prop_assert!(max_abs_diff(&x0, &x1) < 1e-10);
        prop_assert!(max_abs_diff(&z0, &z1) < 1e-10);
    }

    #[test]
    fn one_step_commutes_with_reduction(seed in 0u64..u64::MAX, n in 0u64..50, lam in 0.01f64..0.3) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let u = {
            let q = orthonormal_columns(&gauss(&mut r, 2, 2)).unwrap();
            &q * CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cis(0.7), cis(-2.1)])) * q.adjoint()
        };
        let sp = BlockSpectrum::new(CMat::from_element(1, 1, c(0.5, 0.1)), u.clone(), CMat::from_element(1, 1, c(0.4, -0.2))).unwrap();
        let noise = NoiseModel::complex_entries(4, ScalarDist::Gaussian).with_w(gauss(&mut r, 4, 4)).unwrap();
        let full = well_conditioned(&mut r, 4);
        let mut st = init_state(&full, &sp).unwrap();
        st.n = n;
        let eng = ProductEngine::new(&sp, &noise, lam).unwrap();
        let next = eng.step(&st, seed).unwrap();

        // R^{-(n+1)} T_{n+1} R^{n} in full coordinates
        let f = Frame::new(&u).unwrap();
        let one = CMat::identity(1, 1);
        let rp = |k: i64| block_diag(&[&one, &f.power(k), &one]);
        let s = block_diag(&[&sp.gamma0, &CMat::identity(2, 2), &sp.gamma2_inv()]);
        let y = noise.sample_y(seed, n + 1, lam);
        let m = s + rp(-(n as i64) - 1) * y * rp(n as i64) * c(lam, 0.0);
        let (x, z) = schur(&(m * full), 1).unwrap();
        prop_assert!(max_abs_diff(&x, &next.x) < 1e-9);
        prop_assert!(max_abs_diff(&z, &next.z) < 1e-9);
    }

    #[test]
    fn flag_class_ignores_lower_triangular_factors(seed in 0u64..u64::MAX) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let fs = FlagSpectrum::diagonal(&[c(0.5, 0.0), cis(1.0), c(2.0, 0.0)]).unwrap();
        let noise = NoiseModel::real_entries(3, ScalarDist::Gaussian);
        let f0 = well_conditioned(&mut r, 3);
        let mut l = gauss(&mut r, 3, 3);
        for i in 0..3 {
            l[(i, i)] += c(2.0, 0.0);
            for j in i + 1..3 {
                l[(i, j)] = c(0.0, 0.0);
            }
        }
        let a = propagate_flag(&fs, &noise, 0.05, &f0, 40, seed).unwrap();
        let b = propagate_flag(&fs, &noise, 0.05, &(&f0 * l), 40, seed).unwrap();
        for ang in flag_distance(&a.f, &b.f).unwrap() {
            prop_assert!(ang < 1e-10, "{ang}");
        }
    }
}

/// Calibration sweep of the default K_Z: worst envelope ratio over
/// contraction rates, noise levels and seeds.
#[test]
fn z_envelope_holds_with_default_constant() {
    let mut r = ChaCha8Rng::seed_from_u64(12);
    let x0 = well_conditioned(&mut r, 3);
    let mut worst: f64 = 0.0;
    for gamma in [1.0, 0.3, 0.1] {
        let g = CMat::from_element(1, 1, c((-gamma as f64).exp(), 0.0));
        let sp = BlockSpectrum::new(g.clone(), CMat::identity(1, 1), g).unwrap();
        let noise = NoiseModel::real_entries(3, ScalarDist::Gaussian);
        for lambda in [1e-3, 1e-2, 0.1] {
            let env = ZEnvelope::new(&sp, &noise, lambda);
            let steps = env.burn_in() + 2000;
            let mut w: f64 = 0.0;
            for seed in 0..10 {
                run_product_with(&sp, &noise, lambda, steps, &x0, seed, |s| w = w.max(env.ratio(s))).unwrap();
            }
            println!("gamma {gamma} lambda {lambda} burn {} ratio {w:.3}", env.burn_in());
            worst = worst.max(w);
        }
    }
    println!("worst envelope ratio {worst:.3}");
    assert!(worst < 0.5, "{worst}");
}
