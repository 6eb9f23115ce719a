use crate::gaussian::ComplexGaussianSpec;
use crate::haar::{conjugate_average, g_operator, ghat_operator, HaarMeta, PhaseAverager};
use serde_json::{json, Value};
use stripsde_core::linalg::block;
use stripsde_core::tensor::Tensor4;
use stripsde_core::{c, CMat, Error, Result, C64};
use stripsde_models::{BlockSpectrum, NoiseModel};
use stripsde_product::Frame;

/// Drift and Brownian covariance of the limit dLambda = V Lambda dt + dB Lambda.
#[derive(Debug, Clone)]
pub struct SDECoefficients {
    pub d1: usize,
    pub v: CMat,
    /// E(B_ij B_kl)/t
    pub g: Tensor4,
    /// E(conj(B_ij) B_kl)/t
    pub ghat: Tensor4,
    pub haar_meta: HaarMeta,
    pub w_eff: CMat,
    pub increment: ComplexGaussianSpec,
}

/// Operator M -> E(A^T M B) on row-major vectorised matrices, where A is the
/// p x p block of the noise at offset `oa` and B the q x q block at `ob`.
fn moment_operator(t: &Tensor4, oa: usize, p: usize, ob: usize, q: usize) -> CMat {
    CMat::from_fn(p * q, p * q, |r, s| {
        let (a, b, x, y) = (r / q, r % q, s / q, s % q);
        t.get(oa + x, oa + a, ob + y, ob + b)
    })
}

/// Read a 4-tensor T[i,j,k,l] off an operator with g(M)_ab = sum T[x,a,y,b] M_xy.
fn tensor_of_operator(op: &CMat, d: usize) -> Tensor4 {
    Tensor4::from_fn(d, |i, j, k, l| op[(j * d + l, i * d + k)])
}

/// W11 - E(V12 Gamma2 V21) from the second moments.
pub fn effective_w(spectrum: &BlockSpectrum, noise: &NoiseModel) -> CMat {
    let (d0, d1, d2) = (spectrum.d0, spectrum.d1, spectrum.d2);
    let o2 = d0 + d1;
    let mut w = block(&noise.w, d0, d0, d1, d1);
    for a in 0..d1 {
        for b in 0..d1 {
            let mut s = c(0.0, 0.0);
            for x in 0..d2 {
                for y in 0..d2 {
                    s += spectrum.gamma2[(x, y)] * noise.m2.get(d0 + a, o2 + x, o2 + y, d0 + b);
                }
            }
            w[(a, b)] -= s;
        }
    }
    w
}

/// Increment law (C, R) of vec(B) from the tensors.
pub fn increment_spec(g: &Tensor4, ghat: &Tensor4) -> Result<ComplexGaussianSpec> {
    let d = g.d;
    let m = d * d;
    let cm = CMat::from_fn(m, m, |p, q| ghat.get(p / d, p % d, q / d, q % d).conj());
    let rm = CMat::from_fn(m, m, |p, q| g.get(p / d, p % d, q / d, q % d));
    ComplexGaussianSpec::new(cm, rm)
}

pub fn compute_coefficients(spectrum: &BlockSpectrum, noise: &NoiseModel, n: u64) -> Result<SDECoefficients> {
    compute_coefficients_with(spectrum, noise, n, false)
}

pub fn compute_coefficients_with(spectrum: &BlockSpectrum, noise: &NoiseModel, n: u64, force_ergodic: bool) -> Result<SDECoefficients> {
    let d1 = spectrum.d1;
    if d1 == 0 {
        return Err(Error::InvalidModel("the unitary block is empty".into()));
    }
    if noise.dim != spectrum.dim() {
        return Err(Error::InvalidModel(format!("noise dimension {} differs from model dimension {}", noise.dim, spectrum.dim())));
    }
    let f = Frame::new(&spectrum.u)?;
    let av = PhaseAverager::new(&f.phases, n, force_ergodic);
    let w_eff = effective_w(spectrum, noise);
    let v = conjugate_average(&f, &w_eff, &av);
    let h = moment_operator(&noise.m2, spectrum.d0, d1, spectrum.d0, d1);
    let hh = moment_operator(&noise.m2c, spectrum.d0, d1, spectrum.d0, d1);
    let g = tensor_of_operator(&g_operator(&f, &f, &h, &av), d1);
    let ghat = tensor_of_operator(&ghat_operator(&f, &f, &hh, &av), d1);
    let increment = increment_spec(&g, &ghat)?;
    Ok(SDECoefficients { d1, v, g, ghat, haar_meta: av.meta, w_eff, increment })
}

/// One magnitude class c U_c occupying the noise indices [offset, offset + u.nrows()).
#[derive(Debug, Clone)]
pub struct MagnitudeBlock {
    pub offset: usize,
    pub c: f64,
    pub u: CMat,
}

/// Rectangular 4-tensor T[i,j,k,l] = E(B_ij B'_kl)/t with B p x p and B' q x q.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTensor {
    pub p: usize,
    pub q: usize,
    pub data: Vec<C64>,
}

impl CrossTensor {
    fn from_operator(op: &CMat, p: usize, q: usize, scale: f64) -> Self {
        let mut data = Vec::with_capacity(p * p * q * q);
        for i in 0..p {
            for j in 0..p {
                for k in 0..q {
                    for l in 0..q {
                        data.push(op[(j * q + l, i * q + k)] * scale);
                    }
                }
            }
        }
        Self { p, q, data }
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.data[((i * self.p + j) * self.q + k) * self.q + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct CrossCoefficients {
    pub g: CrossTensor,
    pub ghat: CrossTensor,
    pub haar_meta: HaarMeta,
}

/// Joint covariances of the limits along two magnitude classes, averaged over the group of U_c (+) U_c'.
pub fn cross_coefficients(a: &MagnitudeBlock, b: &MagnitudeBlock, noise: &NoiseModel, n: u64) -> Result<CrossCoefficients> {
    let (p, q) = (a.u.nrows(), b.u.nrows());
    if a.offset + p > noise.dim || b.offset + q > noise.dim {
        return Err(Error::InvalidModel("magnitude block exceeds the noise dimension".into()));
    }
    if !(a.c > 0.0 && b.c > 0.0) {
        return Err(Error::InvalidModel("magnitudes must be positive".into()));
    }
    let (fa, fb) = (Frame::new(&a.u)?, Frame::new(&b.u)?);
    let joint: Vec<f64> = fa.phases.iter().chain(&fb.phases).cloned().collect();
    let av = PhaseAverager::new(&joint, n, false);
    let h = moment_operator(&noise.m2, a.offset, p, b.offset, q);
    let hh = moment_operator(&noise.m2c, a.offset, p, b.offset, q);
    let scale = 1.0 / (a.c * b.c);
    Ok(CrossCoefficients {
        g: CrossTensor::from_operator(&g_operator(&fa, &fb, &h, &av), p, q, scale),
        ghat: CrossTensor::from_operator(&ghat_operator(&fa, &fb, &hh, &av), p, q, scale),
        haar_meta: av.meta,
    })
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

fn mat_json(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| cjson(m[(i, j)])).collect())).collect())
}

fn tensor_json(t: &Tensor4) -> Value {
    json!({ "shape": [t.d, t.d, t.d, t.d], "data": t.data.iter().map(|&z| cjson(z)).collect::<Vec<_>>() })
}

impl SDECoefficients {
    /// g(M) = E(B^T M B)/t
    pub fn g_map(&self, m: &CMat) -> CMat {
        self.g.contract(m)
    }

    /// ghat(M) = E(B* M B)/t
    pub fn ghat_map(&self, m: &CMat) -> CMat {
        self.ghat.contract(m)
    }

    pub fn to_json(&self) -> Value {
        let haar = match self.haar_meta.method {
            crate::haar::HaarMethod::FiniteOrder(m) => json!({ "method": "finite_order", "order": m }),
            crate::haar::HaarMethod::Ergodic(n) => json!({ "method": "ergodic", "N": n }),
        };
        json!({
            "d1": self.d1,
            "V": mat_json(&self.v),
            "W_effective": mat_json(&self.w_eff),
            "G": tensor_json(&self.g),
            "Ghat": tensor_json(&self.ghat),
            "haar": haar,
        })
    }
}
