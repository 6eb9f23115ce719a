//! Limit SDEs of the conjugated strip transfer matrices, restricted to the
//! elliptic channels:
//! dLambda = S [[eps - s^2 Q, 0], [0, -eps + s^2 Q]] Lambda dt + s S [[dA, dB], [-dB*, -dC]] Lambda.
//! Ito form; the integrator works with the equivalent Stratonovich drift.

use crate::gaussian::ComplexGaussianSpec;
use crate::path::{step_grid, Recorder, SDEPath};
use stripsde_core::linalg::{block_diag, set_block};
use stripsde_core::rng::{counter_rng, normal, tag};
use stripsde_core::{c, cis, CMat, Error, RMat, Result};
use stripsde_models::channel::CHAOS_TOL;
use stripsde_models::ChannelData;

/// Exponent vector of the rotation carried by entry (i, j) of A, B or C.
fn exponents(kind: usize, i: usize, j: usize, d: usize) -> Vec<i32> {
    let mut n = vec![0i32; d];
    let (si, sj) = match kind {
        0 => (1, -1),
        1 => (1, 1),
        _ => (-1, 1),
    };
    n[i] += si;
    n[j] += sj;
    n
}

/// Joint Gaussian law of the entries of (A, B, C) per unit time, as one
/// vector of length 3 d_e^2: E(w_p w_q) = m(p, q) chi(n_p + n_q) and
/// E(w_p conj w_q) = m(p, q) chi(n_p - n_q), with m the moments of the
/// elliptic potential block.
pub fn increment_covariance<M, X>(d: usize, moment: M, chi: X) -> Result<ComplexGaussianSpec>
where
    M: Fn(usize, usize, usize, usize) -> f64,
    X: Fn(&[i32]) -> bool,
{
    let m = d * d;
    let labels: Vec<(usize, usize, usize)> = (0..3 * m).map(|p| (p / m, (p % m) / d, p % d)).collect();
    let ex: Vec<Vec<i32>> = labels.iter().map(|&(t, i, j)| exponents(t, i, j, d)).collect();
    let mut cm = CMat::zeros(3 * m, 3 * m);
    let mut rm = CMat::zeros(3 * m, 3 * m);
    let mut buf = vec![0i32; d];
    for p in 0..3 * m {
        for q in 0..3 * m {
            let (_, i, j) = labels[p];
            let (_, k, l) = labels[q];
            let mom = moment(i, j, k, l);
            if mom == 0.0 {
                continue;
            }
            for a in 0..d {
                buf[a] = ex[p][a] + ex[q][a];
            }
            if chi(&buf) {
                rm[(p, q)] = c(mom, 0.0);
            }
            for a in 0..d {
                buf[a] = ex[p][a] - ex[q][a];
            }
            if chi(&buf) {
                cm[(p, q)] = c(mom, 0.0);
            }
        }
    }
    ComplexGaussianSpec::new(cm, rm)
}

/// chi(prod z^n) with tolerance on |z - 1|.
pub fn numeric_chi(phases: &[f64], n: &[i32], tol: f64) -> bool {
    let th: f64 = phases.iter().zip(n).map(|(&p, &k)| p * k as f64).sum();
    (cis(th) - c(1.0, 0.0)).norm() <= tol
}

/// Selector for fully chaotic phases: only the trivial relation survives.
pub fn chaotic_chi(n: &[i32]) -> bool {
    n.iter().all(|&k| k == 0)
}

/// Moments E((V_e)_ij (V_e)_kl) of the GOE surrogate: pairings only,
/// 3/2 (d+1)^{-1} when all four indices agree and (d+1)^{-1} otherwise.
pub fn goe_moment(d: usize, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let mut s = [i, j, k, l];
    s.sort_unstable();
    if s[0] != s[1] || s[2] != s[3] {
        return 0.0;
    }
    let base = 1.0 / (d as f64 + 1.0);
    if s[1] == s[2] {
        1.5 * base
    } else {
        base
    }
}

/// Generator of one of the channel SDEs.
#[derive(Debug, Clone)]
pub struct ChannelSde {
    pub d_e: usize,
    /// diag(S_Z, S_Z)
    pub smat: CMat,
    pub q: CMat,
    pub sigma: f64,
    pub real_symmetric: bool,
    /// law of (A, B, C) per unit time; None when sigma = 0
    pub increments: Option<ComplexGaussianSpec>,
}

impl ChannelSde {
    pub fn anderson(ch: &ChannelData, sigma: f64, real_symmetric: bool) -> Result<Self> {
        let d = ch.d_e;
        if d == 0 {
            return Err(Error::NoEllipticChannel);
        }
        let increments = if sigma != 0.0 {
            let (o, h, var) = (&ch.o, ch.d_h, ch.potential_variance);
            let moment = |i: usize, j: usize, k: usize, l: usize| {
                var * (0..ch.d).map(|m| o[(m, h + i)] * o[(m, h + j)] * o[(m, h + k)] * o[(m, h + l)]).sum::<f64>()
            };
            let phases: Vec<f64> = ch.z_list.iter().map(|z| z.arg()).collect();
            Some(increment_covariance(d, moment, |n| numeric_chi(&phases, n, CHAOS_TOL))?)
        } else {
            None
        };
        Ok(Self { d_e: d, smat: ch.smat.clone(), q: ch.qdrift.clone(), sigma, real_symmetric, increments })
    }

    /// GOE surrogate: chaotic selector, pairing moments and Q = q I.
    pub fn goe(ch: &ChannelData, sigma: f64) -> Result<Self> {
        let q = ch.q.ok_or_else(|| Error::InvalidModel("GOE channel needs a scalar drift q".into()))?;
        let d = ch.d_e;
        if d == 0 {
            return Err(Error::NoEllipticChannel);
        }
        let increments = if sigma != 0.0 { Some(increment_covariance(d, |i, j, k, l| goe_moment(ch.d, i, j, k, l), chaotic_chi)?) } else { None };
        Ok(Self { d_e: d, smat: ch.smat.clone(), q: CMat::identity(d, d) * c(q, 0.0), sigma, real_symmetric: true, increments })
    }

    pub fn dim(&self) -> usize {
        2 * self.d_e
    }

    /// S diag(eps - sigma^2 Q, -eps + sigma^2 Q).
    pub fn drift(&self, eps: f64) -> CMat {
        let d = self.d_e;
        let top = CMat::identity(d, d) * c(eps, 0.0) - &self.q * c(self.sigma * self.sigma, 0.0);
        let bottom = -&top;
        &self.smat * block_diag(&[&top, &bottom])
    }

    /// Increments (A, B, C) over a step of length dt, drawn from (seed, INCREMENT, k).
    pub fn increments_abc(&self, seed: u64, k: u64, dt: f64) -> (CMat, CMat, CMat) {
        let d = self.d_e;
        let Some(spec) = &self.increments else {
            return (CMat::zeros(d, d), CMat::zeros(d, d), CMat::zeros(d, d));
        };
        let w = spec.sample_vec(dt, &mut counter_rng(seed, tag::INCREMENT, k));
        let m = d * d;
        let a = CMat::from_fn(d, d, |i, j| w[i * d + j]);
        let b = CMat::from_fn(d, d, |i, j| w[m + i * d + j]);
        let cc = CMat::from_fn(d, d, |i, j| w[2 * m + i * d + j]);
        let a = (&a + a.adjoint()) * c(0.5, 0.0);
        if self.real_symmetric {
            let b = (&b + b.transpose()) * c(0.5, 0.0);
            let cc = a.map(|z| z.conj());
            (a, b, cc)
        } else {
            let cc = (&cc + cc.adjoint()) * c(0.5, 0.0);
            (a, b, cc)
        }
    }

    /// sigma S [[A, B], [-B*, -C]] for step k.
    pub fn noise_matrix(&self, seed: u64, k: u64, dt: f64) -> CMat {
        let d = self.d_e;
        let (a, b, cc) = self.increments_abc(seed, k, dt);
        let mut n = CMat::zeros(2 * d, 2 * d);
        set_block(&mut n, 0, 0, &a);
        set_block(&mut n, 0, d, &b);
        set_block(&mut n, d, 0, &(-b.adjoint()));
        set_block(&mut n, d, d, &(-cc));
        &self.smat * n * c(self.sigma, 0.0)
    }

    /// S diag(1, -1): the generator multiplying eps.
    pub fn eps_generator(&self) -> CMat {
        let d = self.d_e;
        &self.smat * block_diag(&[&CMat::identity(d, d), &(-CMat::identity(d, d))])
    }

    /// E(N N) per unit time for the noise matrix N of `noise_matrix`, i.e. the
    /// Ito-to-Stratonovich correction of the multiplicative noise.
    pub fn noise_square_mean(&self) -> CMat {
        let dim = self.dim();
        let Some(spec) = &self.increments else {
            return CMat::zeros(dim, dim);
        };
        let ents = entry_forms(self.d_e, self.real_symmetric);
        let mut out = CMat::zeros(dim, dim);
        for x in 0..dim {
            for y in 0..dim {
                let mut acc = c(0.0, 0.0);
                for z in 0..dim {
                    acc += self.smat[(z, z)] * pair_moment(spec, &ents[x * dim + z], &ents[z * dim + y]);
                }
                out[(x, y)] = self.smat[(x, x)] * acc * (self.sigma * self.sigma);
            }
        }
        out
    }

    /// Noise factors exp(N_k - E(NN) h/2), k = 1..n, for the grid of
    /// [0, t_final], together with the step h.
    pub fn step_factors(&self, t_final: f64, dt: f64, seed: u64) -> Result<(f64, Vec<CMat>)> {
        let (n, h) = step_grid(t_final, dt)?;
        let dim = self.dim();
        if self.increments.is_none() {
            return Ok((h, vec![CMat::identity(dim, dim); n as usize]));
        }
        let corr = self.noise_square_mean() * c(-0.5 * h, 0.0);
        Ok((h, (1..=n).map(|k| matrix_exp(&(&corr + self.noise_matrix(seed, k, h)))).collect()))
    }

    /// exp(D(eps) h).
    pub fn propagator(&self, eps: f64, h: f64) -> CMat {
        matrix_exp(&(self.drift(eps) * c(h, 0.0)))
    }

    /// Splitting scheme Lambda <- exp(D(eps) h) F_k Lambda from Lambda_0 = I,
    /// with F_k from `step_factors`. Both factors lie in the group generated
    /// by the drift and noise matrices.
    pub fn integrate(&self, eps: f64, t_final: f64, dt: f64, seed: u64, stride: u64) -> Result<SDEPath> {
        let (h, factors) = self.step_factors(t_final, dt, seed)?;
        let n = factors.len() as u64;
        let prop = self.propagator(eps, h);
        let mut x = CMat::identity(self.dim(), self.dim());
        let mut rec = Recorder::new(x.clone(), h, seed, stride);
        for (k, f) in factors.iter().enumerate() {
            x = &prop * (f * &x);
            rec.push(k as u64 + 1, n, &x);
        }
        Ok(rec.path)
    }

    /// Lambda_{t_final} at every eps of a grid, all driven by one increment stream.
    pub fn endpoints_on_grid(&self, eps_grid: &[f64], t_final: f64, dt: f64, seed: u64) -> Result<Vec<CMat>> {
        let (h, factors) = self.step_factors(t_final, dt, seed)?;
        Ok(eps_grid.iter().map(|&eps| endpoint(&self.propagator(eps, h), &factors)).collect())
    }
}

/// Product of prop F_k over the factors, applied to the identity.
pub fn endpoint(prop: &CMat, factors: &[CMat]) -> CMat {
    let dim = prop.nrows();
    factors.iter().fold(CMat::identity(dim, dim), |x, f| prop * (f * x))
}

/// Linear form sum coef * (w_p or conj w_p) describing one entry of the
/// noise matrix [[A, B], [-B*, -C]] in terms of the increment vector w.
type Form = Vec<(usize, bool, stripsde_core::C64)>;

fn conj_form(f: &Form) -> Form {
    f.iter().map(|&(p, cj, a)| (p, !cj, a.conj())).collect()
}

fn entry_forms(d: usize, real_symmetric: bool) -> Vec<Form> {
    let m = d * d;
    let half = c(0.5, 0.0);
    let a = |i: usize, j: usize| -> Form { vec![(i * d + j, false, half), (j * d + i, true, half)] };
    let b = |i: usize, j: usize| -> Form {
        if real_symmetric {
            vec![(m + i * d + j, false, half), (m + j * d + i, false, half)]
        } else {
            vec![(m + i * d + j, false, c(1.0, 0.0))]
        }
    };
    let cc = |i: usize, j: usize| -> Form {
        if real_symmetric {
            conj_form(&a(i, j))
        } else {
            vec![(2 * m + i * d + j, false, half), (2 * m + j * d + i, true, half)]
        }
    };
    let neg = |f: Form| -> Form { f.into_iter().map(|(p, cj, x)| (p, cj, -x)).collect() };
    let dim = 2 * d;
    let mut out = Vec::with_capacity(dim * dim);
    for x in 0..dim {
        for y in 0..dim {
            out.push(match (x < d, y < d) {
                (true, true) => a(x, y),
                (true, false) => b(x, y - d),
                (false, true) => neg(conj_form(&b(y, x - d))),
                (false, false) => neg(cc(x - d, y - d)),
            });
        }
    }
    out
}

/// E(u v) for two linear forms in the Gaussian vector w.
fn pair_moment(spec: &ComplexGaussianSpec, u: &Form, v: &Form) -> stripsde_core::C64 {
    let mut s = c(0.0, 0.0);
    for &(p, cp, a) in u {
        for &(q, cq, b) in v {
            let e = match (cp, cq) {
                (false, false) => spec.r[(p, q)],
                (false, true) => spec.c[(p, q)],
                (true, false) => spec.c[(q, p)],
                (true, true) => spec.r[(p, q)].conj(),
            };
            s += a * b * e;
        }
    }
    s
}

/// Matrix exponential with a diagonal fast path.
pub fn matrix_exp(m: &CMat) -> CMat {
    let n = m.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == c(0.0, 0.0)));
    if diagonal {
        CMat::from_fn(n, n, |i, j| if i == j { m[(i, i)].exp() } else { c(0.0, 0.0) })
    } else {
        m.clone().exp()
    }
}

pub fn anderson_sde(ch: &ChannelData, eps: f64, sigma: f64, t_final: f64, dt: f64, seed: u64, real_symmetric: bool, stride: u64) -> Result<SDEPath> {
    ChannelSde::anderson(ch, sigma, real_symmetric)?.integrate(eps, t_final, dt, seed, stride)
}

pub fn goe_sde(ch: &ChannelData, eps: f64, sigma: f64, t_final: f64, dt: f64, seed: u64, stride: u64) -> Result<SDEPath> {
    ChannelSde::goe(ch, sigma)?.integrate(eps, t_final, dt, seed, stride)
}

/// (d+1)^{-1/2} (K + b I), K symmetric Gaussian with E K_ii^2 = 5/4 and E K_ij^2 = 1, b standard normal.
pub fn goe_limit_matrix(d_e: usize, d: usize, seed: u64, index: u64) -> RMat {
    let mut r = counter_rng(seed, tag::GOE, index);
    let b = normal(&mut r);
    let s = 1.0 / (d as f64 + 1.0).sqrt();
    let mut k = RMat::zeros(d_e, d_e);
    for i in 0..d_e {
        k[(i, i)] = (1.25f64.sqrt() * normal(&mut r) + b) * s;
        for j in 0..i {
            let x = normal(&mut r) * s;
            k[(i, j)] = x;
            k[(j, i)] = x;
        }
    }
    k
}
