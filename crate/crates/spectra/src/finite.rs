//! Eigenvalues of the finite strip operator
//! (H psi)_k = psi_{k+1} + psi_{k-1} + (A + lambda V_k) psi_k, psi_0 = psi_{n+1} = 0.

use crate::process::PointProcess;
use nalgebra::DMatrix;
use stripsde_core::{Error, RMat, Result};
use stripsde_models::StripModel;

/// Largest n d handled by the dense eigensolver.
pub const DENSE_CAP: usize = 6000;
/// Root refinement tolerance in rescaled units.
pub const ROOT_TOL: f64 = 1e-8;

/// Potential diagonals of slices 1..=n.
pub fn layers(strip: &StripModel, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (1..=n as u64).map(|k| strip.potential_layer(seed, k)).collect()
}

/// Dense n d x n d matrix.
pub fn assemble(strip: &StripModel, lambda: f64, layers: &[Vec<f64>]) -> RMat {
    let d = strip.d;
    let n = layers.len();
    let mut h = RMat::zeros(n * d, n * d);
    for (k, v) in layers.iter().enumerate() {
        let o = k * d;
        for i in 0..d {
            for j in 0..d {
                h[(o + i, o + j)] = strip.a[(i, j)];
            }
            h[(o + i, o + i)] += lambda * v[i];
            if k + 1 < n {
                h[(o + i, o + d + i)] = 1.0;
                h[(o + d + i, o + i)] = 1.0;
            }
        }
    }
    h
}

fn check_args(lambda: f64, n: usize) -> Result<()> {
    if !(lambda >= 0.0) {
        return Err(Error::Validation(format!("lambda must be nonnegative, got {lambda}")));
    }
    if n == 0 {
        return Err(Error::Validation("n must be positive".into()));
    }
    Ok(())
}

/// All eigenvalues by the dense symmetric solver, returned as n (E_k - E)
/// inside (-halfwidth, halfwidth).
pub fn strip_eigenvalues(strip: &StripModel, lambda: f64, n: usize, window_halfwidth: f64, seed: u64, cap: usize) -> Result<PointProcess> {
    check_args(lambda, n)?;
    let size = n * strip.d;
    if size > cap {
        return Err(Error::SizeCap { size, cap });
    }
    let h = assemble(strip, lambda, &layers(strip, n, seed));
    let ev = h.symmetric_eigenvalues();
    Ok(PointProcess::from_raw(ev.as_slice(), (-window_halfwidth, window_halfwidth), n as f64, strip.e, "strip-dense", seed))
}

/// Sign-tracking block LDL^T of H - x: S_1 = M_1 - x, S_k = M_k - x - S_{k-1}^{-1}.
/// The number of negative pivots counts the eigenvalues below x.
pub struct SturmCounter<'a> {
    strip: &'a StripModel,
    lambda: f64,
    layers: &'a [Vec<f64>],
}

impl<'a> SturmCounter<'a> {
    pub fn new(strip: &'a StripModel, lambda: f64, layers: &'a [Vec<f64>]) -> Self {
        Self { strip, lambda, layers }
    }

    pub fn count_below(&self, x: f64) -> usize {
        let d = self.strip.d;
        let mut prev_inv: Option<Vec<f64>> = None;
        let mut s = vec![0.0; d * d];
        let mut neg = 0;
        for v in self.layers {
            for i in 0..d {
                for j in 0..d {
                    s[i * d + j] = self.strip.a[(i, j)];
                }
                s[i * d + i] += self.lambda * v[i] - x;
            }
            if let Some(p) = &prev_inv {
                for (a, b) in s.iter_mut().zip(p) {
                    *a -= b;
                }
            }
            neg += invert_symmetric(&mut s, d);
            prev_inv = Some(s.clone());
        }
        neg
    }
}

/// In-place Gauss-Jordan inversion of a symmetric matrix with diagonal
/// pivoting; returns the number of negative pivots (its negative inertia).
fn invert_symmetric(a: &mut [f64], d: usize) -> usize {
    let scale = a.iter().fold(0f64, |m, x| m.max(x.abs())).max(1e-300);
    let mut done = vec![false; d];
    let mut neg = 0;
    for _ in 0..d {
        let k = (0..d).filter(|&k| !done[k]).max_by(|&i, &j| a[i * d + i].abs().total_cmp(&a[j * d + j].abs())).unwrap();
        done[k] = true;
        let mut p = a[k * d + k];
        if p.abs() < 1e-14 * scale {
            p = if p < 0.0 { -1e-14 * scale } else { 1e-14 * scale };
        }
        if p < 0.0 {
            neg += 1;
        }
        for j in 0..d {
            if j != k {
                a[k * d + j] /= p;
            }
        }
        for i in 0..d {
            if i == k {
                continue;
            }
            let f = a[i * d + k];
            if f != 0.0 {
                for j in 0..d {
                    if j != k {
                        a[i * d + j] -= f * a[k * d + j];
                    }
                }
            }
            a[i * d + k] = -f / p;
        }
        a[k * d + k] = 1.0 / p;
    }
    neg
}

/// Eigenvalues in the raw interval (lo, hi) located by bisection on counts
/// to absolute tolerance `tol`; multiplicities are repeated.
pub fn bisect_eigenvalues(counter: &SturmCounter, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    let mut out = vec![];
    let mut stack = vec![(lo, counter.count_below(lo), hi, counter.count_below(hi))];
    while let Some((a, ca, b, cb)) = stack.pop() {
        if cb <= ca {
            continue;
        }
        let mid = 0.5 * (a + b);
        if b - a < tol {
            out.extend(std::iter::repeat_n(mid, cb - ca));
            continue;
        }
        let cm = counter.count_below(mid);
        stack.push((mid, cm, b, cb));
        stack.push((a, ca, mid, cm));
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Eigenvalues with rescaled value in the window, by Sturm bisection to
/// `tol` rescaled units. No size cap: cost is linear in n.
pub fn strip_eigenvalues_sturm(strip: &StripModel, lambda: f64, n: usize, window: (f64, f64), seed: u64, tol: f64) -> Result<PointProcess> {
    check_args(lambda, n)?;
    let lay = layers(strip, n, seed);
    let counter = SturmCounter::new(strip, lambda, &lay);
    let nf = n as f64;
    let raw = bisect_eigenvalues(&counter, strip.e + window.0 / nf, strip.e + window.1 / nf, tol / nf);
    Ok(PointProcess::from_raw(&raw, window, nf, strip.e, "strip-sturm", seed))
}

/// Sign and log-modulus of det of the top-left d x d block of T_n ... T_1 at
/// `energy`, with T_k = [[energy - A - lambda V_k, -1], [1, 0]]. The product
/// acts on [1; 0] and is re-orthonormalized by QR at every slice.
pub fn top_block_det(strip: &StripModel, lambda: f64, layers: &[Vec<f64>], energy: f64) -> Result<(f64, f64)> {
    let d = strip.d;
    let mut top = DMatrix::<f64>::identity(d, d);
    let mut bot = DMatrix::<f64>::zeros(d, d);
    let mut sign = 1.0;
    let mut logabs = 0.0;
    let mut m = RMat::zeros(d, d);
    for (k, v) in layers.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = -strip.a[(i, j)];
            }
            m[(i, i)] += energy - lambda * v[i];
        }
        let new_top = &m * &top - &bot;
        bot = top;
        let mut phi = DMatrix::<f64>::zeros(2 * d, d);
        phi.view_mut((0, 0), (d, d)).copy_from(&new_top);
        phi.view_mut((d, 0), (d, d)).copy_from(&bot);
        let qr = phi.qr();
        let r = qr.r();
        for i in 0..d {
            let x = r[(i, i)];
            if x == 0.0 || !x.is_finite() {
                return Err(Error::SingularPivot { step: k as u64 + 1, cond: f64::INFINITY });
            }
            sign *= x.signum();
            logabs += x.abs().ln();
        }
        let q = qr.q();
        top = q.rows(0, d).into_owned();
        bot = q.rows(d, d).into_owned();
    }
    let lu = top.lu();
    let det = lu.determinant();
    if det == 0.0 {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    Ok((sign * det.signum(), logabs + det.abs().ln()))
}

/// Brackets of sign changes inside [a, b] around a modulus dip without a
/// sign change at the grid points: the interval is resampled and the
/// deepest sample followed, a few levels deep.
fn dip_brackets<F: Fn(f64) -> Result<(f64, f64)>>(f: &F, a: f64, b: f64, depth: u32, out: &mut Vec<(f64, f64, f64)>) -> Result<()> {
    let xs = crate::process::linspace(a, b, 9);
    let vals = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let before = out.len();
    for i in 1..xs.len() {
        if vals[i].0 != vals[i - 1].0 {
            out.push((xs[i - 1], vals[i - 1].0, xs[i]));
        }
    }
    if out.len() == before && depth > 0 {
        let j = (1..xs.len() - 1).min_by(|&i, &j| vals[i].1.total_cmp(&vals[j].1)).unwrap();
        if vals[j].1 < vals[j - 1].1 && vals[j].1 < vals[j + 1].1 {
            dip_brackets(f, xs[j - 1], xs[j + 1], depth - 1, out)?;
        }
    }
    Ok(())
}

/// Roots of the transfer determinant at energies E + eps/n for eps in the
/// grid. Sign changes between grid points, and sign changes found by
/// resampling around modulus minima, are bisected to 1e-8 rescaled units.
/// The window is (first, last) of the grid. A Sturm count over the window is
/// compared with the number of roots and a warning recorded on disagreement.
pub fn determinant_scan(strip: &StripModel, lambda: f64, n: usize, eps_grid: &[f64], seed: u64) -> Result<PointProcess> {
    check_args(lambda, n)?;
    let nf = n as f64;
    let (Some(&lo), Some(&hi)) = (eps_grid.first(), eps_grid.last()) else {
        return Ok(PointProcess::new([], (0.0, 0.0), nf, strip.e, "determinant-scan", seed));
    };
    let lay = layers(strip, n, seed);
    let f = |eps: f64| top_block_det(strip, lambda, &lay, strip.e + eps / nf);
    let vals = eps_grid.iter().map(|&e| f(e)).collect::<Result<Vec<_>>>()?;
    let mut roots = vec![];
    let mut brackets = vec![];
    for (i, &(s, _)) in vals.iter().enumerate() {
        if s == 0.0 {
            roots.push(eps_grid[i]);
            continue;
        }
        if i > 0 && vals[i - 1].0 != 0.0 && vals[i - 1].0 != s {
            brackets.push((eps_grid[i - 1], vals[i - 1].0, eps_grid[i]));
        }
        if i > 0 && i + 1 < vals.len() {
            let (l, r) = (vals[i - 1], vals[i + 1]);
            if l.0 == s && r.0 == s && vals[i].1 < l.1 && vals[i].1 < r.1 {
                dip_brackets(&f, eps_grid[i - 1], eps_grid[i + 1], 6, &mut brackets)?;
            }
        }
    }
    for (mut a, sa, mut b) in brackets {
        while b - a > ROOT_TOL {
            let m = 0.5 * (a + b);
            let sm = f(m)?.0;
            if sm == 0.0 {
                a = m;
                b = m;
            } else if sm == sa {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    let mut pp = PointProcess::new(roots, (lo, hi), nf, strip.e, "determinant-scan", seed);
    let counter = SturmCounter::new(strip, lambda, &lay);
    let expected = counter.count_below(strip.e + hi / nf) - counter.count_below(strip.e + lo / nf);
    if expected != pp.len() {
        pp.warnings.push(format!("MissedRoot: Sturm count {expected} but {} roots found", pp.len()));
    }
    Ok(pp)
}
