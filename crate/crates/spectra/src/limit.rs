//! Eigenvalue processes of the limit SDE: zeros in eps of
//! det([conj Z*, Z*] Lambda_1^eps [1; -1]), and a finite-difference operator
//! whose eigenvalues are the same zeros.

use crate::process::PointProcess;
use stripsde_core::{c, CMat, Error, Result, C64};
use stripsde_sdelimit::{endpoint, ChannelSde};

/// Relative acceptance threshold on |det|^2 (times its grid median).
pub const ACCEPT_REL: f64 = 1e-6;
/// Largest imaginary part tolerated in the operator spectrum.
pub const IMAG_TOL: f64 = 1e-6;

/// Row block [conj Z*, Z*].
pub fn left_boundary(z_star: &[C64]) -> CMat {
    let d = z_star.len();
    CMat::from_fn(d, 2 * d, |i, j| if j == i { z_star[i].conj() } else if j == i + d { z_star[i] } else { c(0.0, 0.0) })
}

/// Column block [1; -1].
pub fn right_boundary(d: usize) -> CMat {
    CMat::from_fn(2 * d, d, |i, j| if i == j { c(1.0, 0.0) } else if i == j + d { c(-1.0, 0.0) } else { c(0.0, 0.0) })
}

fn check_z(gen: &ChannelSde, z_star: &[C64]) -> Result<()> {
    if z_star.len() != gen.d_e {
        return Err(Error::Validation(format!("Z* must have {} entries, got {}", gen.d_e, z_star.len())));
    }
    if z_star.iter().any(|z| (z.norm() - 1.0).abs() > 1e-10) {
        return Err(Error::Validation("Z* must be unitary".into()));
    }
    Ok(())
}

/// The boundary determinant as a function of eps for one noise realization.
pub struct BoundaryDeterminant<'a> {
    gen: &'a ChannelSde,
    left: CMat,
    right: CMat,
    factors: Vec<CMat>,
    h: f64,
}

impl<'a> BoundaryDeterminant<'a> {
    pub fn new(gen: &'a ChannelSde, z_star: &[C64], dt: f64, seed: u64) -> Result<Self> {
        check_z(gen, z_star)?;
        let (h, factors) = gen.step_factors(1.0, dt, seed)?;
        Ok(Self { gen, left: left_boundary(z_star), right: right_boundary(gen.d_e), factors, h })
    }

    pub fn eval(&self, eps: f64) -> C64 {
        let lam = endpoint(&self.gen.propagator(eps, self.h), &self.factors);
        (&self.left * lam * &self.right).determinant()
    }
}

/// Golden-section minimization of f on [a, b].
fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn median(xs: &[f64]) -> f64 {
    let s = stripsde_core::stats::sorted(xs);
    stripsde_core::stats::quantile_sorted(&s, 0.5)
}

/// Zeros of the boundary determinant on an eps grid sharing one increment
/// stream. Grid-local minima of |det|^2 are refined by golden section and
/// kept when the refined value is below `ACCEPT_REL` times the grid median.
pub fn sde_eigenvalue_process(gen: &ChannelSde, z_star: &[C64], eps_grid: &[f64], dt: f64, seed: u64) -> Result<PointProcess> {
    let (Some(&lo), Some(&hi)) = (eps_grid.first(), eps_grid.last()) else {
        return Ok(PointProcess::new([], (0.0, 0.0), 1.0, 0.0, "sde", seed));
    };
    let bd = BoundaryDeterminant::new(gen, z_star, dt, seed)?;
    let f = |e: f64| bd.eval(e).norm_sqr();
    let vals: Vec<f64> = eps_grid.iter().map(|&e| f(e)).collect();
    let thr = ACCEPT_REL * median(&vals);
    let mut roots: Vec<f64> = vec![];
    for i in 1..eps_grid.len().saturating_sub(1) {
        if vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] {
            let (x, v) = golden_min(f, eps_grid[i - 1], eps_grid[i + 1], 1e-11 * (1.0 + eps_grid[i].abs()));
            if v <= thr && roots.last().is_none_or(|&r| (x - r).abs() > 1e-8) {
                roots.push(x);
            }
        }
    }
    Ok(PointProcess::new(roots, (lo, hi), 1.0, 0.0, "sde", seed))
}

/// Complex banded matrix stored by rows, with room for the fill-in of
/// partial pivoting.
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![c(0.0, 0.0); n * width] }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return c(0.0, 0.0);
        }
        self.data[self.slot(i, j)]
    }

    /// (log |det|, det / |det|) by LU with partial pivoting; log |det| is
    /// -inf for a singular matrix.
    pub fn log_det(mut self) -> (f64, C64) {
        let n = self.n;
        let mut logabs = 0.0;
        let mut phase = c(1.0, 0.0);
        for j in 0..n {
            let last = (j + self.kl).min(n - 1);
            let p = (j..=last).max_by(|&a, &b| self.get(a, j).norm().total_cmp(&self.get(b, j).norm())).unwrap();
            let hi = (j + self.kl + self.ku).min(n - 1);
            if p != j {
                for col in j..=hi {
                    let (sa, sb) = (self.slot(j, col), self.slot(p, col));
                    self.data.swap(sa, sb);
                }
                phase = -phase;
            }
            let piv = self.get(j, j);
            if piv.norm() == 0.0 {
                return (f64::NEG_INFINITY, c(0.0, 0.0));
            }
            logabs += piv.norm().ln();
            phase *= piv / piv.norm();
            for r in j + 1..=last {
                let f = self.get(r, j) / piv;
                if f.norm() == 0.0 {
                    continue;
                }
                for col in j..=hi {
                    let v = self.get(j, col);
                    let s = self.slot(r, col);
                    self.data[s] -= f * v;
                }
            }
        }
        (logabs, phase)
    }
}

/// Crank-Nicolson discretization of the eigenproblem for the first-order
/// operator on [0, 1] whose transfer equation is the limit SDE, with drift
/// D(eps) = D_0 + eps K and the shared noise factors G_k:
/// (1 - h D(eps)/2) psi_{k+1} = (1 + h D(eps)/2) G_k psi_k,
/// boundary rows [1, 1] psi_0 = 0 and [conj Z*, Z*] psi_M = 0.
/// Linear in eps, so the eigenvalues are the roots of det(A - eps B).
pub struct OperatorOracle {
    d: usize,
    z_star: Vec<C64>,
    d0: CMat,
    k_gen: CMat,
    factors: Vec<CMat>,
    h: f64,
}

impl OperatorOracle {
    pub fn new(gen: &ChannelSde, z_star: &[C64], mesh_size: usize, seed: u64) -> Result<Self> {
        if mesh_size < 100 {
            return Err(Error::Validation(format!("mesh_size must be at least 100, got {mesh_size}")));
        }
        check_z(gen, z_star)?;
        let (h, factors) = gen.step_factors(1.0, 1.0 / mesh_size as f64, seed)?;
        Ok(Self { d: gen.d_e, z_star: z_star.to_vec(), d0: gen.drift(0.0), k_gen: gen.eps_generator(), factors, h })
    }

    pub fn size(&self) -> usize {
        2 * self.d * (self.factors.len() + 1)
    }

    /// The band matrix A - eps B of the discretized eigenproblem.
    pub fn matrix(&self, eps: C64) -> BandMatrix {
        let d = self.d;
        let b = 2 * d;
        let m = self.factors.len();
        let span = 3 * d - 1;
        let mut a = BandMatrix::zeros(self.size(), span, span);
        for i in 0..d {
            a.set(i, i, c(1.0, 0.0));
            a.set(i, i + d, c(1.0, 0.0));
        }
        let (plus, minus) = self.cayley_parts(eps);
        for (k, g) in self.factors.iter().enumerate() {
            let r0 = d + b * k;
            let left = -(&plus * g);
            for x in 0..b {
                for y in 0..b {
                    a.set(r0 + x, b * k + y, left[(x, y)]);
                    a.set(r0 + x, b * (k + 1) + y, minus[(x, y)]);
                }
            }
        }
        let r0 = d + b * m;
        for i in 0..d {
            a.set(r0 + i, b * m + i, self.z_star[i].conj());
            a.set(r0 + i, b * m + d + i, self.z_star[i]);
        }
        a
    }

    /// (1 + h D(eps)/2, 1 - h D(eps)/2).
    fn cayley_parts(&self, eps: C64) -> (CMat, CMat) {
        let x = (&self.d0 + &self.k_gen * eps) * c(0.5 * self.h, 0.0);
        let id = CMat::identity(2 * self.d, 2 * self.d);
        (&id + &x, &id - &x)
    }

    /// det(A - eps B) as (log |det|, phase).
    pub fn log_det(&self, eps: C64) -> (f64, C64) {
        self.matrix(eps).log_det()
    }

    /// Reduced boundary matrix [conj Z*, Z*] Phi_M [1; -1], where Phi_M is the
    /// Crank-Nicolson propagator; it vanishes on the eigenvector's initial data.
    fn shooting(&self, eps: f64) -> (CMat, Vec<CMat>) {
        let d = self.d;
        let (plus, minus) = self.cayley_parts(c(eps, 0.0));
        let cay = minus.try_inverse().expect("Cayley denominator is invertible for real eps") * plus;
        let mut phi = right_boundary(d);
        let mut path = vec![phi.clone()];
        for g in &self.factors {
            phi = &cay * (g * phi);
            path.push(phi.clone());
        }
        (left_boundary(&self.z_star) * phi, path)
    }

    /// Discrete eigenfunction (psi_0, ..., psi_M) at a computed eigenvalue,
    /// normalized to unit maximum entry.
    pub fn eigenvector(&self, eps: f64) -> Vec<nalgebra::DVector<C64>> {
        let (red, path) = self.shooting(eps);
        let svd = red.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let imin = (0..svd.singular_values.len()).min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b])).unwrap();
        let cvec = vt.row(imin).adjoint();
        let psi: Vec<nalgebra::DVector<C64>> = path.iter().map(|p| p * &cvec).collect();
        let scale = psi.iter().flat_map(|v| v.iter().map(|z| z.norm())).fold(0.0, f64::max);
        psi.into_iter().map(|v| v / c(scale, 0.0)).collect()
    }

    /// Residuals of the two boundary rows for a discrete eigenfunction.
    pub fn boundary_residuals(&self, psi: &[nalgebra::DVector<C64>]) -> (f64, f64) {
        let d = self.d;
        let first = (0..d).map(|i| (psi[0][i] + psi[0][i + d]).norm()).fold(0.0, f64::max);
        let last = psi.last().unwrap();
        let end = (0..d).map(|i| (self.z_star[i].conj() * last[i] + self.z_star[i] * last[i + d]).norm()).fold(0.0, f64::max);
        (first, end)
    }
}

/// Complex secant iteration on the determinant from two starting points.
fn secant(o: &OperatorOracle, mut x0: C64, mut x1: C64) -> Option<C64> {
    let f = |x: C64| {
        let (l, p) = o.log_det(x);
        (l, p)
    };
    let (mut l0, mut p0) = f(x0);
    let (mut l1, mut p1) = f(x1);
    for _ in 0..80 {
        if l1 == f64::NEG_INFINITY {
            return Some(x1);
        }
        // f0 / f1 without overflow
        let ratio = p0 / p1 * (l0 - l1).exp();
        let denom = ratio - c(1.0, 0.0);
        if denom.norm() == 0.0 || !denom.is_finite() {
            return None;
        }
        // x2 = x1 - f1 (x1 - x0) / (f1 - f0) = x1 + (x1 - x0) / (ratio - 1)
        let x2 = x1 + (x1 - x0) / denom;
        if !x2.is_finite() {
            return None;
        }
        let step = (x2 - x1).norm();
        x0 = x1;
        (l0, p0) = (l1, p1);
        x1 = x2;
        (l1, p1) = f(x1);
        if step < 1e-12 * (1.0 + x1.norm()) {
            return Some(x1);
        }
    }
    None
}

/// Eigenvalues of the discretized operator with real part strictly inside
/// the grid window. Grid-local minima of |det| seed a complex secant search.
pub fn operator_oracle(gen: &ChannelSde, z_star: &[C64], mesh_size: usize, eps_grid: &[f64], seed: u64) -> Result<Vec<f64>> {
    let o = OperatorOracle::new(gen, z_star, mesh_size, seed)?;
    oracle_roots(&o, eps_grid)
}

pub fn oracle_roots(o: &OperatorOracle, eps_grid: &[f64]) -> Result<Vec<f64>> {
    let (Some(&lo), Some(&hi)) = (eps_grid.first(), eps_grid.last()) else {
        return Ok(vec![]);
    };
    let vals: Vec<f64> = eps_grid.iter().map(|&e| o.log_det(c(e, 0.0)).0).collect();
    let mut roots: Vec<C64> = vec![];
    for i in 1..eps_grid.len().saturating_sub(1) {
        if vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] {
            let h = 0.25 * (eps_grid[i + 1] - eps_grid[i - 1]);
            if let Some(z) = secant(o, c(eps_grid[i] - h, 0.0), c(eps_grid[i] + h, 0.0)) {
                if z.re > lo && z.re < hi && roots.iter().all(|r| (r - z).norm() > 1e-8) {
                    roots.push(z);
                }
            }
        }
    }
    if let Some(worst) = roots.iter().map(|z| z.im.abs()).reduce(f64::max) {
        if worst > IMAG_TOL {
            return Err(Error::NonRealSpectrum(worst));
        }
    }
    let mut out: Vec<f64> = roots.iter().map(|z| z.re).collect();
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_determinant_matches_dense() {
        let n = 9;
        let (kl, ku) = (2, 1);
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = CMat::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v = c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0);
                band.set(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let want = dense.determinant();
        let (l, p) = band.log_det();
        let got = p * l.exp();
        assert!((got - want).norm() < 1e-9 * want.norm(), "{got} vs {want}");
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, v) = golden_min(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9 && v < 1e-18);
    }
}
