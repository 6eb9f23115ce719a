use crate::process::{run_product_with, ProductEngine};
use stripsde_core::linalg::block;
use stripsde_core::{c, CMat, Error, Result};
use stripsde_models::ChannelData;

/// [[1, 0, -1], [0, 1, 0], [0, 0, 1]] in blocks (d_h, 2 d_e, d_h).
pub fn default_x0(ch: &ChannelData) -> CMat {
    let n = 2 * ch.d;
    let mut x = CMat::identity(n, n);
    for k in 0..ch.d_h {
        x[(k, ch.d_h + 2 * ch.d_e + k)] = c(-1.0, 0.0);
    }
    x
}

/// (P* [T_[1,n] X0]^{-1} P)^{-1}, obtained as R^n X_n from the (X, Z) recursion.
pub fn reduced_transfer(ch: &ChannelData, lambda: f64, eps: f64, sigma: f64, steps: u64, x0_full: Option<&CMat>, seed: u64) -> Result<CMat> {
    let spectrum = ch.block_spectrum()?;
    let noise = ch.noise_model(sigma, eps);
    let x0 = x0_full.cloned().unwrap_or_else(|| default_x0(ch));
    let last = run_product_with(&spectrum, &noise, lambda, steps, &x0, seed, |_| {})?;
    let engine = ProductEngine::new(&spectrum, &noise, lambda)?;
    let m = ch.d_h + 2 * ch.d_e;
    let mut r = CMat::identity(m, m);
    let u = engine.frame.power(steps as i64);
    r.view_mut((ch.d_h, ch.d_h), (2 * ch.d_e, 2 * ch.d_e)).copy_from(&u);
    Ok(r * last.x)
}

/// Direct evaluation through the full product and its inverse; only sane for short runs.
pub fn reduced_transfer_bruteforce(ch: &ChannelData, lambda: f64, eps: f64, sigma: f64, steps: u64, x0_full: Option<&CMat>, seed: u64) -> Result<CMat> {
    let potential = stripsde_models::StripModel {
        d: ch.d,
        a: ch.a_mat.clone(),
        potential: ch.potential,
        potential_variance: ch.potential_variance,
        e: ch.e,
        r: 0.0,
        eigen: None,
    };
    let mut f = x0_full.cloned().unwrap_or_else(|| default_x0(ch));
    for k in 1..=steps {
        let v = potential.potential_layer(seed, k);
        f = ch.conjugated_transfer(eps, sigma, lambda, &v) * f;
    }
    let m = ch.d_h + 2 * ch.d_e;
    let inv = f.try_inverse().ok_or(Error::SingularPivot { step: steps, cond: f64::INFINITY })?;
    block(&inv, 0, 0, m, m).try_inverse().ok_or(Error::SingularPivot { step: steps, cond: f64::INFINITY })
}
