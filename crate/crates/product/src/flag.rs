use crate::frame::Frame;
use stripsde_core::linalg::{max_abs, principal_angles};
use stripsde_core::{c, CMat, Error, Result, C64};
use stripsde_models::{BlockSpectrum, NoiseModel};

/// Diagonalisable T0 = diag(c_j U_j) with magnitudes increasing down the diagonal.
#[derive(Debug, Clone)]
pub struct FlagSpectrum {
    pub d: usize,
    pub t0: CMat,
    /// magnitude of each diagonal position
    pub mags: Vec<f64>,
    /// sizes of the equal-magnitude groups, smallest magnitude first
    pub groups: Vec<usize>,
    pub r_hat: Frame,
}

const MAG_TOL: f64 = 1e-12;

impl FlagSpectrum {
    /// From diagonal entries, which must be ordered by nondecreasing modulus.
    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        let units: Vec<C64> = entries.iter().map(|z| z / z.norm()).collect();
        let t0 = CMat::from_diagonal(&nalgebra::DVector::from_column_slice(entries));
        let r = CMat::from_diagonal(&nalgebra::DVector::from_vec(units));
        Self::assemble(t0, entries.iter().map(|z| z.norm()).collect(), r)
    }

    /// diag(Gamma0, U, Gamma2^{-1}) with diagonal Gamma0 and Gamma2.
    pub fn from_block(sp: &BlockSpectrum) -> Result<Self> {
        for (name, g) in [("gamma0", &sp.gamma0), ("gamma2", &sp.gamma2)] {
            let off = (0..g.nrows()).flat_map(|i| (0..g.ncols()).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| g[(i, j)].norm()).fold(0.0, f64::max);
            if off > 0.0 {
                return Err(Error::InvalidModel(format!("{name} must be diagonal for flag propagation")));
            }
        }
        let t0 = sp.t0();
        let d = sp.dim();
        let mut mags = Vec::with_capacity(d);
        let mut r = CMat::zeros(d, d);
        for i in 0..sp.d0 {
            mags.push(t0[(i, i)].norm());
            r[(i, i)] = t0[(i, i)] / t0[(i, i)].norm();
        }
        mags.extend(std::iter::repeat(1.0).take(sp.d1));
        r.view_mut((sp.d0, sp.d0), (sp.d1, sp.d1)).copy_from(&sp.u);
        for i in sp.d0 + sp.d1..d {
            mags.push(t0[(i, i)].norm());
            r[(i, i)] = t0[(i, i)] / t0[(i, i)].norm();
        }
        Self::assemble(t0, mags, r)
    }

    fn assemble(t0: CMat, mags: Vec<f64>, r: CMat) -> Result<Self> {
        let d = mags.len();
        if mags.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidModel("T0 must be invertible".into()));
        }
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=d {
            if i == d || (mags[i] - mags[start]).abs() > MAG_TOL * mags[start] {
                if i < d && mags[i] < mags[start] {
                    return Err(Error::InvalidModel("magnitudes must increase down the diagonal".into()));
                }
                groups.push(i - start);
                start = i;
            }
        }
        Ok(Self { d, t0, mags, groups, r_hat: Frame::new(&r)? })
    }

    /// Group index of every coordinate.
    fn group_of(&self) -> Vec<usize> {
        self.groups.iter().enumerate().flat_map(|(g, &n)| std::iter::repeat(g).take(n)).collect()
    }

    /// Whether F0 is block upper triangular with invertible diagonal blocks.
    pub fn is_attracted_form(&self, f0: &CMat) -> bool {
        let g = self.group_of();
        let scale = max_abs(f0).max(f64::MIN_POSITIVE);
        for i in 0..self.d {
            for j in 0..self.d {
                if g[i] > g[j] && f0[(i, j)].norm() > 1e-14 * scale {
                    return false;
                }
            }
        }
        let mut off = 0;
        for &n in &self.groups {
            let b = f0.view((off, off), (n, n)).into_owned();
            let sv = b.singular_values();
            if sv.min() <= 1e-12 * sv.max().max(f64::MIN_POSITIVE) {
                return false;
            }
            off += n;
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct FlagState {
    pub f: CMat,
    pub step: u64,
    /// |L_jj| of the lower-triangular factor removed at each step
    pub column_norms: Vec<Vec<f64>>,
    pub warning: Option<String>,
}

/// F = Q L with Q orthonormal and L lower triangular, from a QR of the column-reversed F.
fn ql(f: &CMat) -> (CMat, Vec<f64>) {
    let d = f.ncols();
    let rev = CMat::from_fn(f.nrows(), d, |i, j| f[(i, d - 1 - j)]);
    let qr = rev.qr();
    let q = qr.q();
    let r = qr.r();
    let qrev = CMat::from_fn(q.nrows(), d, |i, j| q[(i, d - 1 - j)]);
    let diag = (0..d).map(|j| r[(d - 1 - j, d - 1 - j)].norm()).collect();
    (qrev, diag)
}

/// Applies R^{-n} T_n ... T_1 to F0, renormalising by lower-triangular right
/// factors after every step so the flag class is untouched.
pub fn propagate_flag(fs: &FlagSpectrum, noise: &NoiseModel, lambda: f64, f0: &CMat, steps: u64, seed: u64) -> Result<FlagState> {
    let d = fs.d;
    if noise.dim != d || f0.nrows() != d || f0.ncols() != d {
        return Err(Error::Validation("flag, noise and spectrum dimensions differ".into()));
    }
    let warning = (!fs.is_attracted_form(f0)).then(|| "initial flag is not in block upper-triangular form".to_string());
    let (mut f, _) = ql(f0);
    let dm = CMat::from_diagonal(&nalgebra::DVector::from_vec(fs.mags.iter().map(|&m| c(m, 0.0)).collect()));
    let mut column_norms = Vec::with_capacity(steps as usize);
    for n in 1..=steps {
        let y = noise.sample_y(seed, n, lambda);
        let rot = fs.r_hat.power(-(n as i64)) * y * fs.r_hat.power(n as i64 - 1);
        let m = &dm + rot * c(lambda, 0.0);
        let g = m * &f;
        let (q, diag) = ql(&g);
        let top = diag.iter().cloned().fold(0.0, f64::max);
        let low = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(low > 1e-12 * top) {
            return Err(Error::RankCollapse { step: n, residual: low / top });
        }
        f = q;
        column_norms.push(diag);
    }
    Ok(FlagState { f, step: steps, column_norms, warning })
}

/// Largest principal angle between span(last p columns of F) and the span of
/// the last p coordinate vectors, for every group boundary p.
pub fn stable_flag_angles(f: &CMat, groups: &[usize]) -> Result<Vec<f64>> {
    let d = f.nrows();
    let mut out = Vec::new();
    let mut p = 0;
    for &g in groups.iter().rev().take(groups.len().saturating_sub(1)) {
        p += g;
        out.push(subspace_angle(f, p, d)?);
    }
    Ok(out)
}

/// Largest principal angle for span(last p columns) against e_{d-p+1..d}.
pub fn subspace_angle(f: &CMat, p: usize, d: usize) -> Result<f64> {
    let sub = f.columns(d - p, p).into_owned();
    let mut reference = CMat::zeros(d, p);
    for k in 0..p {
        reference[(d - p + k, k)] = c(1.0, 0.0);
    }
    Ok(principal_angles(&sub, &reference)?.into_iter().fold(0.0, f64::max))
}

/// Largest principal angles between the nested subspaces of two flags, p = 1..d-1.
pub fn flag_distance(a: &CMat, b: &CMat) -> Result<Vec<f64>> {
    let d = a.ncols();
    (1..d)
        .map(|p| {
            let sa = a.columns(d - p, p).into_owned();
            let sb = b.columns(d - p, p).into_owned();
            Ok(principal_angles(&sa, &sb)?.into_iter().fold(0.0, f64::max))
        })
        .collect()
}
