use crate::block::BlockSpectrum;
use crate::noise::{NoiseModel, Sampler};
use crate::strip::StripModel;
use nalgebra::SymmetricEigen;
use stripsde_core::linalg::{block_diag, diag};
use stripsde_core::rng::ScalarDist;
use stripsde_core::{c, CMat, Error, RMat, Result, C64};

pub const PARABOLIC_TOL: f64 = 1e-8;
pub const CHAOS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Hyperbolic,
    Elliptic,
}

/// Which of the three forbidden multiplicative relations holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// z_i z_j z_k z_l = 1
    Plain,
    /// conj(z_i) z_j z_k z_l = 1
    OneConjugate,
    /// conj(z_i z_j) z_k z_l = 1 with {i,j} != {k,l}
    TwoConjugate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosVerdict {
    pub chaotic: bool,
    pub witness: Option<([usize; 4], Relation)>,
    pub tol: f64,
    pub search_bound: usize,
}

/// Channel decomposition of a strip at energy E and everything derived from it.
#[derive(Debug, Clone)]
pub struct ChannelData {
    pub d: usize,
    pub d_h: usize,
    pub d_e: usize,
    pub e: f64,
    /// eigenvalues of A, hyperbolic first
    pub a: Vec<f64>,
    pub o: RMat,
    pub a_mat: RMat,
    pub kinds: Vec<ChannelKind>,
    pub gamma_list: Vec<f64>,
    pub z_list: Vec<C64>,
    pub gamma: CMat,
    pub z: CMat,
    /// Q, with columns the eigenvectors of the noiseless transfer matrix
    pub qmat: CMat,
    pub qinv: CMat,
    /// (Gamma^{-1} - Gamma)^{-1}
    pub s_gamma: CMat,
    /// (conj(Z) - Z)^{-1}
    pub s_z: CMat,
    /// diag(S_Z, S_Z)
    pub smat: CMat,
    pub qdrift: CMat,
    pub q: Option<f64>,
    pub chaos: ChaosVerdict,
    pub potential: ScalarDist,
    pub potential_variance: f64,
}

fn hyperbolic_root(b: f64) -> f64 {
    2.0 / (b + b.signum() * (b * b - 4.0).sqrt())
}

fn elliptic_root(b: f64) -> C64 {
    c(b / 2.0, (1.0 - b * b / 4.0).max(0.0).sqrt())
}

/// Classify the channels of `strip` at energy `e`; at least one must be elliptic.
pub fn decompose_channels(strip: &StripModel, e: f64, tol: f64) -> Result<ChannelData> {
    let ch = classify_channels(strip, e, tol)?;
    if ch.d_e == 0 {
        return Err(Error::NoEllipticChannel);
    }
    Ok(ch)
}

/// Same as `decompose_channels` but accepts purely hyperbolic energies.
pub fn classify_channels(strip: &StripModel, e: f64, tol: f64) -> Result<ChannelData> {
    let d = strip.d;
    let (vals, o) = match &strip.eigen {
        Some((v, o)) => (v.clone(), o.clone()),
        None => {
            let eig = SymmetricEigen::new(strip.a.clone());
            let mut idx: Vec<usize> = (0..d).collect();
            idx.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
            let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
            let o = RMat::from_fn(d, d, |r, k| eig.eigenvectors[(r, idx[k])]);
            (vals, o)
        }
    };
    for (j, &a) in vals.iter().enumerate() {
        let b = e - a;
        if (b.abs() - 2.0).abs() <= tol {
            return Err(Error::ParabolicChannel { index: j + 1, value: b.abs(), tol });
        }
    }
    // hyperbolic first, index order kept inside each group
    let mut order: Vec<usize> = (0..d).filter(|&j| (e - vals[j]).abs() > 2.0).collect();
    let d_h = order.len();
    order.extend((0..d).filter(|&j| (e - vals[j]).abs() < 2.0));
    let a: Vec<f64> = order.iter().map(|&j| vals[j]).collect();
    let o = RMat::from_fn(d, d, |r, k| o[(r, order[k])]);
    assemble(strip, e, a, o, d_h)
}

fn assemble(strip: &StripModel, e: f64, a: Vec<f64>, o: RMat, d_h: usize) -> Result<ChannelData> {
    let d = a.len();
    let d_e = d - d_h;
    let gamma_list: Vec<f64> = a[..d_h].iter().map(|&aj| hyperbolic_root(e - aj)).collect();
    let z_list: Vec<C64> = a[d_h..].iter().map(|&aj| elliptic_root(e - aj)).collect();
    let mut kinds = vec![ChannelKind::Hyperbolic; d_h];
    kinds.extend(vec![ChannelKind::Elliptic; d_e]);

    let gamma = diag(&gamma_list.iter().map(|&g| c(g, 0.0)).collect::<Vec<_>>());
    let z = diag(&z_list);
    let s_gamma = diag(&gamma_list.iter().map(|&g| c(1.0 / (1.0 / g - g), 0.0)).collect::<Vec<_>>());
    let s_z = diag(&z_list.iter().map(|&zj| (zj.conj() - zj).inv()).collect::<Vec<_>>());
    let smat = block_diag(&[&s_z, &s_z]);

    // column layout (h, e, e, h): Gamma, conj Z, Z, Gamma^{-1}
    let n2 = 2 * d;
    let mut qp = CMat::zeros(n2, n2);
    let mut kp = CMat::zeros(n2, n2);
    let mut sgz = vec![c(0.0, 0.0); n2];
    for k in 0..d_h {
        let g = gamma_list[k];
        qp[(k, k)] = c(g, 0.0);
        qp[(k, d_h + 2 * d_e + k)] = c(1.0 / g, 0.0);
        qp[(d + k, k)] = c(1.0, 0.0);
        qp[(d + k, d_h + 2 * d_e + k)] = c(1.0, 0.0);
        // inverse rows, columns laid out as (top-h, top-e, bottom-h, bottom-e)
        kp[(k, k)] = c(1.0, 0.0);
        kp[(k, d + k)] = c(-1.0 / g, 0.0);
        let r = d_h + 2 * d_e + k;
        kp[(r, k)] = c(-1.0, 0.0);
        kp[(r, d + k)] = c(g, 0.0);
        let sg = s_gamma[(k, k)];
        sgz[k] = -sg;
        sgz[r] = -sg;
    }
    for j in 0..d_e {
        let zj = z_list[j];
        let row = d_h + j;
        qp[(row, d_h + j)] = zj.conj();
        qp[(row, d_h + d_e + j)] = zj;
        qp[(d + row, d_h + j)] = c(1.0, 0.0);
        qp[(d + row, d_h + d_e + j)] = c(1.0, 0.0);
        kp[(d_h + j, row)] = c(1.0, 0.0);
        kp[(d_h + j, d + row)] = -zj;
        kp[(d_h + d_e + j, row)] = c(-1.0, 0.0);
        kp[(d_h + d_e + j, d + row)] = zj.conj();
        sgz[d_h + j] = s_z[(j, j)];
        sgz[d_h + d_e + j] = s_z[(j, j)];
    }
    let qinv_p = diag(&sgz) * kp;
    let oc = CMat::from_fn(d, d, |i, j| c(o[(i, j)], 0.0));
    let od = block_diag(&[&oc, &oc]);
    let qmat = &od * qp;
    let qinv = qinv_p * od.adjoint();

    let qdrift = drift_matrix(&o, &gamma_list, &z_list, d_h, strip.potential_variance);
    let q = scalar_multiple(&qdrift);
    let chaos = is_chaotic(&z_list, CHAOS_TOL, z_list.len());
    Ok(ChannelData {
        d,
        d_h,
        d_e,
        e,
        a,
        o,
        a_mat: strip.a.clone(),
        kinds,
        gamma_list,
        z_list,
        gamma,
        z,
        qmat,
        qinv,
        s_gamma,
        s_z,
        smat,
        qdrift,
        q,
        chaos,
        potential: strip.potential,
        potential_variance: strip.potential_variance,
    })
}

/// Q_ij = chi(z_i = z_j) sum_k S_Gamma,kk E((V_he)_ki (V_he)_kj) for a diagonal
/// potential with independent entries of the given variance.
fn drift_matrix(o: &RMat, gamma_list: &[f64], z_list: &[C64], d_h: usize, var: f64) -> CMat {
    let d = o.nrows();
    let d_e = z_list.len();
    CMat::from_fn(d_e, d_e, |i, j| {
        if (z_list[i] - z_list[j]).norm() > CHAOS_TOL {
            return c(0.0, 0.0);
        }
        let mut s = 0.0;
        for (k, &g) in gamma_list.iter().enumerate() {
            let sg = 1.0 / (1.0 / g - g);
            let mut overlap = 0.0;
            for m in 0..d {
                overlap += o[(m, k)] * o[(m, k)] * o[(m, d_h + i)] * o[(m, d_h + j)];
            }
            s += sg * overlap;
        }
        c(var * s, 0.0)
    })
}

fn scalar_multiple(m: &CMat) -> Option<f64> {
    let n = m.nrows();
    if n == 0 {
        return None;
    }
    let q = m[(0, 0)].re;
    let ok = (0..n).all(|i| (0..n).all(|j| (m[(i, j)] - if i == j { c(q, 0.0) } else { c(0.0, 0.0) }).norm() <= 1e-12));
    ok.then_some(q)
}

/// Exhaustive search for multiplicative relations among the first
/// `search_bound` phases.
pub fn is_chaotic(z_list: &[C64], tol: f64, search_bound: usize) -> ChaosVerdict {
    let n = z_list.len().min(search_bound);
    let z = &z_list[..n];
    let one = c(1.0, 0.0);
    let verdict = |w: Option<([usize; 4], Relation)>| ChaosVerdict { chaotic: w.is_none(), witness: w, tol, search_bound };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let p = z[j] * z[k] * z[l];
                    if (z[i] * p - one).norm() <= tol {
                        return verdict(Some(([i, j, k, l], Relation::Plain)));
                    }
                    if (z[i].conj() * p - one).norm() <= tol {
                        return verdict(Some(([i, j, k, l], Relation::OneConjugate)));
                    }
                    let same = (i == k && j == l) || (i == l && j == k);
                    if !same && ((z[i] * z[j]).conj() * z[k] * z[l] - one).norm() <= tol {
                        return verdict(Some(([i, j, k, l], Relation::TwoConjugate)));
                    }
                }
            }
        }
    }
    verdict(None)
}

/// Z_d strip channels with the exact sine basis. The drift is set to the
/// scalar q (d+1)^{-1} sum_k (gamma_k^{-1} - gamma_k)^{-1}; it differs from the
/// moment drift in `exact_qdrift` on channels j whose mirror d+1-j is hyperbolic.
pub fn build_goe_channel(d: usize, e: f64, r: f64) -> Result<ChannelData> {
    if d < 2 {
        return Err(Error::InvalidModel("GOE channel needs d >= 2".into()));
    }
    let strip = StripModel::laplacian(d, r, e, ScalarDist::Gaussian)?;
    let mut ch = decompose_channels(&strip, e, PARABOLIC_TOL)?;
    let q = ch.gamma_list.iter().map(|&g| 1.0 / (1.0 / g - g)).sum::<f64>() / (d as f64 + 1.0);
    ch.qdrift = CMat::identity(ch.d_e, ch.d_e) * c(q, 0.0);
    ch.q = Some(q);
    Ok(ch)
}

impl ChannelData {
    pub fn dim(&self) -> usize {
        2 * self.d
    }

    /// conj(Z) and Z side by side: the unitary block of the conjugated transfer matrix.
    pub fn u(&self) -> CMat {
        let zb = self.z.map(|x| x.conj());
        block_diag(&[&zb, &self.z])
    }

    /// diag(Gamma, conj Z, Z, Gamma^{-1}).
    pub fn t_star(&self) -> CMat {
        let ginv = diag(&self.gamma_list.iter().map(|&g| c(1.0 / g, 0.0)).collect::<Vec<_>>());
        block_diag(&[&self.gamma, &self.u(), &ginv])
    }

    /// Noiseless transfer matrix in site coordinates.
    pub fn t_site(&self) -> CMat {
        let d = self.d;
        let mut t = CMat::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                t[(i, j)] = c(-self.a_mat[(i, j)], 0.0);
            }
            t[(i, i)] += c(self.e, 0.0);
            t[(i, d + i)] = c(-1.0, 0.0);
            t[(d + i, i)] = c(1.0, 0.0);
        }
        t
    }

    fn conj_top_left(&self, m: &CMat) -> CMat {
        let d = self.d;
        let mut full = CMat::zeros(2 * d, 2 * d);
        full.view_mut((0, 0), (d, d)).copy_from(m);
        &self.qinv * full * &self.qmat
    }

    /// Q^{-1} [[-diag(v), 0], [0, 0]] Q.
    pub fn v_part(&self, v: &[f64]) -> CMat {
        let m = diag(&v.iter().map(|&x| c(-x, 0.0)).collect::<Vec<_>>());
        self.conj_top_left(&m)
    }

    /// Q^{-1} [[1, 0], [0, 0]] Q.
    pub fn w_part(&self) -> CMat {
        self.conj_top_left(&CMat::identity(self.d, self.d))
    }

    /// T_* + lambda sigma V_k + lambda^2 eps W.
    pub fn conjugated_transfer(&self, eps: f64, sigma: f64, lambda: f64, v: &[f64]) -> CMat {
        self.t_star() + self.v_part(v) * c(lambda * sigma, 0.0) + self.w_part() * c(lambda * lambda * eps, 0.0)
    }

    /// diag(Gamma, U, Gamma^{-1}) as a block spectrum.
    pub fn block_spectrum(&self) -> Result<BlockSpectrum> {
        BlockSpectrum::new(self.gamma.clone(), self.u(), self.gamma.clone())
    }

    /// Noise of the conjugated product, T = T_* + lambda (sigma V_k + lambda eps W).
    /// It draws from the potential stream, so slice k matches `potential_layer(seed, k)`.
    pub fn noise_model(&self, sigma: f64, eps: f64) -> NoiseModel {
        let d = self.d;
        let s = self.potential_variance.sqrt();
        let basis = (0..d)
            .map(|m| {
                let mut v = vec![0.0; d];
                v[m] = sigma * s;
                self.v_part(&v)
            })
            .collect();
        let mut nm = NoiseModel::new(2 * d, Sampler::Linear(basis), self.potential, self.w_part() * c(eps, 0.0)).unwrap();
        nm.stream = stripsde_core::rng::tag::POTENTIAL;
        nm
    }

    /// Drift matrix Q from the potential moments.
    pub fn exact_qdrift(&self) -> CMat {
        drift_matrix(&self.o, &self.gamma_list, &self.z_list, self.d_h, self.potential_variance)
    }

    pub fn kind_name(&self, j: usize) -> &'static str {
        match self.kinds[j] {
            ChannelKind::Hyperbolic => "hyperbolic",
            ChannelKind::Elliptic => "elliptic",
        }
    }
}
