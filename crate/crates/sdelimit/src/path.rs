use crate::coeffs::SDECoefficients;
use crate::gaussian::sample_increment;
use std::fmt::Write;
use stripsde_core::rng::{counter_rng, normal, tag};
use stripsde_core::{c, cis, CMat, Error, Result, C64};
use stripsde_models::BandEdgeModel;

/// Sampled solution. `values[i]` is the state at `times[i]`.
#[derive(Debug, Clone)]
pub struct SDEPath {
    pub times: Vec<f64>,
    pub values: Vec<CMat>,
    pub dt: f64,
    pub seed: u64,
}

impl SDEPath {
    pub fn last(&self) -> &CMat {
        self.values.last().expect("paths hold at least the initial state")
    }

    /// Columns t, then Re/Im of each entry in row-major order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        if let Some(v) = self.values.first() {
            for i in 0..v.nrows() {
                for j in 0..v.ncols() {
                    let _ = write!(s, ",L_{i}_{j}_re,L_{i}_{j}_im");
                }
            }
        }
        s.push('\n');
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = write!(s, "{t}");
            for i in 0..v.nrows() {
                for j in 0..v.ncols() {
                    let _ = write!(s, ",{},{}", v[(i, j)].re, v[(i, j)].im);
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Number of steps and the effective uniform step for [0, t_final].
pub fn step_grid(t_final: f64, dt: f64) -> Result<(u64, f64)> {
    if !(dt > 0.0) || !(t_final >= dt) {
        return Err(Error::Validation(format!("need 0 < dt <= t_final, got dt={dt}, t_final={t_final}")));
    }
    let n = (t_final / dt - 1e-9).ceil().max(1.0) as u64;
    Ok((n, t_final / n as f64))
}

/// Records the initial state, every `stride`-th state and the final one (stride 0: endpoints only).
pub(crate) struct Recorder {
    stride: u64,
    pub path: SDEPath,
}

impl Recorder {
    pub fn new(x0: CMat, dt: f64, seed: u64, stride: u64) -> Self {
        Self { stride, path: SDEPath { times: vec![0.0], values: vec![x0], dt, seed } }
    }

    pub fn push(&mut self, k: u64, n: u64, x: &CMat) {
        if k == n || (self.stride > 0 && k % self.stride == 0) {
            self.path.times.push(k as f64 * self.path.dt);
            self.path.values.push(x.clone());
        }
    }
}

/// Euler-Maruyama for dLambda = V Lambda dt + dB Lambda, Lambda_0 = I.
/// Increment k is drawn from (seed, INCREMENT, k).
pub fn euler_maruyama(co: &SDECoefficients, t_final: f64, dt: f64, seed: u64, stride: u64) -> Result<SDEPath> {
    let (n, h) = step_grid(t_final, dt)?;
    let d = co.d1;
    let mut x = CMat::identity(d, d);
    let mut rec = Recorder::new(x.clone(), h, seed, stride);
    let vdt = &co.v * c(h, 0.0);
    for k in 1..=n {
        let mut r = counter_rng(seed, tag::INCREMENT, k);
        let db = sample_increment(&co.increment, h, &mut r);
        x = &x + (&vdt + db) * &x;
        rec.push(k, n, &x);
    }
    Ok(rec.path)
}

/// Companion form of x^{(2d)} = x (eps + B'), with B = e^{-i theta} W for a
/// real Brownian motion W scaled by `noise_scale`.
#[allow(clippy::too_many_arguments)]
pub fn band_edge_sde(model: &BandEdgeModel, eps: f64, t_final: f64, dt: f64, seed: u64, x0: &[C64], noise_scale: f64, theta: f64, stride: u64) -> Result<SDEPath> {
    let m = 2 * model.d;
    if x0.len() != m {
        return Err(Error::Validation(format!("initial vector must have length {m}")));
    }
    let (n, h) = step_grid(t_final, dt)?;
    let mut x = CMat::from_column_slice(m, 1, x0);
    let mut rec = Recorder::new(x.clone(), h, seed, stride);
    let rot = cis(-theta) * (noise_scale * h.sqrt());
    for k in 1..=n {
        let db = if noise_scale != 0.0 { rot * normal(&mut counter_rng(seed, tag::BAND, k)) } else { c(0.0, 0.0) };
        let first = x[(0, 0)];
        let mut next = x.clone();
        for j in 0..m - 1 {
            next[(j, 0)] += x[(j + 1, 0)] * h;
        }
        next[(m - 1, 0)] += first * (c(eps * h, 0.0) + db);
        x = next;
        rec.push(k, n, &x);
    }
    Ok(rec.path)
}
