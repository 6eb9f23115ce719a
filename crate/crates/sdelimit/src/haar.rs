//! Averages over the closed group generated by a unitary U.
//!
//! Everything is done in the eigenbasis of U, where an element u = U^{-k}
//! acts by phases e^{-ik phi_a}. Each entry of an integrand then carries a
//! single character e^{-ik theta} and the average over k is a scalar.

use std::f64::consts::PI;
use stripsde_core::linalg::kron;
use stripsde_core::{c, cis, CMat, Result, C64};
use stripsde_product::Frame;

pub const DEFAULT_ERGODIC_N: u64 = 100_000;
/// Largest denominator tried by the rationality scan.
pub const MAX_DENOMINATOR: u64 = 10_000;
const ORDER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaarMethod {
    /// exact average over the m elements of a finite cyclic group
    FiniteOrder(u64),
    /// (1/N) sum_{k=1..N} p(U^{-k})
    Ergodic(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaarMeta {
    pub method: HaarMethod,
}

impl HaarMeta {
    pub fn describe(&self) -> String {
        match self.method {
            HaarMethod::FiniteOrder(m) => format!("finite order {m}"),
            HaarMethod::Ergodic(n) => format!("ergodic N={n}"),
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest denominator q <= MAX_DENOMINATOR with x within `tol` of p/q.
fn rational_denominator(x: f64, tol: f64) -> Option<u64> {
    let (mut h0, mut h1) = (0f64, 1f64);
    let (mut k0, mut k1) = (1f64, 0f64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > MAX_DENOMINATOR as f64 {
            return None;
        }
        if (x - h2 / k2).abs() <= tol {
            return Some(k2 as u64);
        }
        let frac = r - a;
        if frac < 1e-15 {
            return None;
        }
        r = 1.0 / frac;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    None
}

/// Order of the rotation group with the given phases, if it is finite and at most `cap`.
pub fn detect_order(phases: &[f64], cap: u64) -> Option<u64> {
    let mut m = 1u64;
    for &p in phases {
        let x = (p / (2.0 * PI)).rem_euclid(1.0);
        let q = rational_denominator(x, 1e-12)?;
        m = m / gcd(m, q) * q;
        if m > cap.min(MAX_DENOMINATOR) {
            return None;
        }
    }
    let worst = phases.iter().map(|&p| (cis(m as f64 * p) - c(1.0, 0.0)).norm()).fold(0.0, f64::max);
    (worst <= ORDER_TOL).then_some(m)
}

/// Averages e^{-ik theta} over the group generated by a set of phases.
#[derive(Debug, Clone, Copy)]
pub struct PhaseAverager {
    pub meta: HaarMeta,
}

impl PhaseAverager {
    pub fn new(phases: &[f64], n: u64, force_ergodic: bool) -> Self {
        let n = n.max(1);
        let method = match (force_ergodic, detect_order(phases, n)) {
            (false, Some(m)) => HaarMethod::FiniteOrder(m),
            _ => HaarMethod::Ergodic(n),
        };
        Self { meta: HaarMeta { method } }
    }

    pub fn avg(&self, theta: f64) -> C64 {
        match self.meta.method {
            HaarMethod::FiniteOrder(m) => {
                let t = theta * m as f64 / (2.0 * PI);
                if (t.round() as i64).rem_euclid(m as i64) == 0 {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }
            HaarMethod::Ergodic(n) => {
                let th = theta - 2.0 * PI * (theta / (2.0 * PI)).round();
                if th.abs() < 1e-14 {
                    return c(1.0, 0.0);
                }
                let nf = n as f64;
                // sum_{k=1..N} e^{-ik th} = e^{-i th (N+1)/2} sin(N th/2) / sin(th/2)
                cis(-th * (nf + 1.0) / 2.0) * ((nf * th / 2.0).sin() / (th / 2.0).sin() / nf)
            }
        }
    }
}

/// The integrands that can be averaged.
#[derive(Debug, Clone)]
pub enum Integrand<'a> {
    /// u W U* u*
    Conjugate(&'a CMat),
    /// conj(u U) h(u^T M u) U* u*, h given as an operator on row-major vectorised matrices
    G { h: &'a CMat, m: &'a CMat },
    /// u U h(u* M u) U* u*
    Ghat { h: &'a CMat, m: &'a CMat },
    /// sum_t c_t prod_a e_a(u)^{n_ta} in the eigen-coordinates e_a(u) of u,
    /// labelled in the order of `Frame::phases`
    Polynomial(&'a [(C64, Vec<i64>)]),
}

/// Haar average of `integrand` over the group of U. Polynomials return a 1x1 matrix.
pub fn haar_average(u: &CMat, integrand: &Integrand, n: u64, force_ergodic: bool) -> Result<(CMat, HaarMeta)> {
    let f = Frame::new(u)?;
    let av = PhaseAverager::new(&f.phases, n, force_ergodic);
    let out = match integrand {
        Integrand::Conjugate(w) => conjugate_average(&f, w, &av),
        Integrand::G { h, m } => {
            let op = g_operator(&f, &f, h, &av);
            apply(&op, m, m.nrows(), m.ncols())
        }
        Integrand::Ghat { h, m } => {
            let op = ghat_operator(&f, &f, h, &av);
            apply(&op, m, m.nrows(), m.ncols())
        }
        Integrand::Polynomial(terms) => {
            let mut s = c(0.0, 0.0);
            for (coef, pw) in terms.iter() {
                let theta: f64 = pw.iter().zip(&f.phases).map(|(&k, &p)| k as f64 * p).sum();
                s += coef * av.avg(theta);
            }
            CMat::from_element(1, 1, s)
        }
    };
    Ok((out, av.meta))
}

fn eigvecs(f: &Frame) -> CMat {
    f.vecs.clone().unwrap_or_else(|| CMat::identity(f.dim(), f.dim()))
}

/// Average of u W U* u*.
pub(crate) fn conjugate_average(f: &Frame, w: &CMat, av: &PhaseAverager) -> CMat {
    let p = eigvecs(f);
    let wp = p.adjoint() * w * &p;
    let d = f.dim();
    let vp = CMat::from_fn(d, d, |a, b| wp[(a, b)] * cis(-f.phases[b]) * av.avg(f.phases[a] - f.phases[b]));
    &p * vp * p.adjoint()
}

/// Operator of M -> avg conj(u U_1) h(u^T M v) U_2* v* over the joint group,
/// u from frame `f1`, v from `f2`.
pub(crate) fn g_operator(f1: &Frame, f2: &Frame, h: &CMat, av: &PhaseAverager) -> CMat {
    let k = kron(&eigvecs(f1).map(|x| x.conj()), &eigvecs(f2).map(|x| x.conj()));
    let hp = k.adjoint() * h * &k;
    let (p, q) = (f1.dim(), f2.dim());
    let (ph, ps) = (&f1.phases, &f2.phases);
    let gp = CMat::from_fn(p * q, p * q, |r, s| {
        let (a, b, x, y) = (r / q, r % q, s / q, s % q);
        hp[(r, s)] * cis(-ph[a] - ps[b]) * av.avg(-ph[a] - ps[b] + ph[x] + ps[y])
    });
    &k * gp * k.adjoint()
}

/// Operator of M -> avg u U_1 h(u* M v) U_2* v*.
pub(crate) fn ghat_operator(f1: &Frame, f2: &Frame, h: &CMat, av: &PhaseAverager) -> CMat {
    let k = kron(&eigvecs(f1), &eigvecs(f2).map(|x| x.conj()));
    let hp = k.adjoint() * h * &k;
    let (p, q) = (f1.dim(), f2.dim());
    let (ph, ps) = (&f1.phases, &f2.phases);
    let gp = CMat::from_fn(p * q, p * q, |r, s| {
        let (a, b, x, y) = (r / q, r % q, s / q, s % q);
        hp[(r, s)] * cis(ph[a] - ps[b]) * av.avg(ph[a] - ps[b] - ph[x] + ps[y])
    });
    &k * gp * k.adjoint()
}

/// Apply an operator on row-major vectorised p x q matrices.
pub fn apply(op: &CMat, m: &CMat, p: usize, q: usize) -> CMat {
    let v = nalgebra::DVector::from_iterator(p * q, (0..p * q).map(|r| m[(r / q, r % q)]));
    let out = op * v;
    CMat::from_fn(p, q, |a, b| out[a * q + b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use stripsde_core::linalg::max_abs_diff;

    #[test]
    fn trivial_group_returns_integrand() {
        let w = CMat::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let (v, meta) = haar_average(&CMat::identity(2, 2), &Integrand::Conjugate(&w), 1000, false).unwrap();
        assert!(max_abs_diff(&v, &w) < 1e-14);
        assert_eq!(meta.method, HaarMethod::FiniteOrder(1));
    }

    #[test]
    fn order_four_square_vanishes() {
        let u = CMat::from_element(1, 1, c(0.0, 1.0));
        let terms = [(c(1.0, 0.0), vec![2])];
        let (v, meta) = haar_average(&u, &Integrand::Polynomial(&terms), 1000, false).unwrap();
        assert_eq!(meta.method, HaarMethod::FiniteOrder(4));
        assert!(v[(0, 0)].norm() < 1e-15);
        // enumeration of {1, i, -1, -i}
        let direct: C64 = (0..4).map(|k| cis(k as f64 * PI / 2.0).powi(2)).sum::<C64>() / 4.0;
        assert!(direct.norm() < 1e-15);
    }

    #[test]
    fn modulus_squared_is_one() {
        let u = CMat::from_element(1, 1, cis(1.0));
        let first = [(c(1.0, 0.0), vec![1])];
        let uu = [(c(1.0, 0.0), vec![0])];
        let (v, meta) = haar_average(&u, &Integrand::Polynomial(&uu), 1000, false).unwrap();
        assert_eq!(meta.method, HaarMethod::Ergodic(1000));
        assert!((v[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let (v1, _) = haar_average(&u, &Integrand::Polynomial(&first), 100_000, false).unwrap();
        assert!(v1[(0, 0)].norm() < 1e-4);
    }

    #[test]
    fn closed_form_matches_loop() {
        let av = PhaseAverager { meta: HaarMeta { method: HaarMethod::Ergodic(777) } };
        for th in [0.3, -2.0, 1e-7, 3.0, 6.2] {
            let direct: C64 = (1..=777).map(|k| cis(-(k as f64) * th)).sum::<C64>() / 777.0;
            assert!((direct - av.avg(th)).norm() < 1e-12, "{th}");
        }
    }

    #[test]
    fn detects_orders() {
        assert_eq!(detect_order(&[2.0 * PI / 3.0, PI / 2.0], 10_000), Some(12));
        assert_eq!(detect_order(&[1.0], 10_000), None);
        assert_eq!(detect_order(&[2.0 * PI * 7.0 / 500.0], 100), None);
        assert_eq!(detect_order(&[-2.0 * PI * 7.0 / 500.0], 10_000), Some(500));
    }
}
