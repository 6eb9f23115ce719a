use std::f64::consts::PI;
use stripsde_core::rng::{counter_rng, tag, ScalarDist};
use stripsde_core::{c, CMat, Error, RMat, Result};

/// Anderson model on a strip of width d: hopping/on-site profile A plus an
/// i.i.d. diagonal potential on every slice.
#[derive(Debug, Clone)]
pub struct StripModel {
    pub d: usize,
    pub a: RMat,
    pub potential: ScalarDist,
    /// declared variance of each potential entry
    pub potential_variance: f64,
    pub e: f64,
    pub r: f64,
    /// exact eigen-decomposition (eigenvalues, orthogonal columns) when known
    pub eigen: Option<(Vec<f64>, RMat)>,
}

/// Orthogonal sine basis diagonalising the path adjacency matrix.
pub fn sine_basis(d: usize) -> RMat {
    let s = (2.0 / (d as f64 + 1.0)).sqrt();
    RMat::from_fn(d, d, |j, k| s * (PI * ((j + 1) * (k + 1)) as f64 / (d as f64 + 1.0)).sin())
}

/// Path adjacency matrix (ones next to the diagonal).
pub fn path_adjacency(d: usize) -> RMat {
    RMat::from_fn(d, d, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 })
}

impl StripModel {
    /// A = r Z_d.
    pub fn laplacian(d: usize, r: f64, e: f64, potential: ScalarDist) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidModel("strip width must be positive".into()));
        }
        let a = path_adjacency(d) * r;
        let vals = (1..=d).map(|j| 2.0 * r * (PI * j as f64 / (d as f64 + 1.0)).cos()).collect();
        Ok(Self { d, a, potential, potential_variance: 1.0, e, r, eigen: Some((vals, sine_basis(d))) })
    }

    /// A = O diag(profile) O^T with the sine basis O, so the potential sees the
    /// same channel overlaps as the r Z_d strip while the a_j are free.
    pub fn with_profile(profile: Vec<f64>, e: f64, potential: ScalarDist) -> Result<Self> {
        let d = profile.len();
        if d == 0 {
            return Err(Error::InvalidModel("strip width must be positive".into()));
        }
        let o = sine_basis(d);
        let a = &o * RMat::from_diagonal(&nalgebra::DVector::from_vec(profile.clone())) * o.transpose();
        let a = (&a + a.transpose()) * 0.5;
        Ok(Self { d, a, potential, potential_variance: 1.0, e, r: 0.0, eigen: Some((profile, o)) })
    }

    /// Arbitrary real symmetric A.
    pub fn new(a: RMat, e: f64, potential: ScalarDist) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidModel("A must be a non-empty square matrix".into()));
        }
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::InvalidModel(format!("A is not symmetric (defect {asym:.3e})")));
        }
        Ok(Self { d: a.nrows(), a, potential, potential_variance: 1.0, e, r: 0.0, eigen: None })
    }

    /// Diagonal of the potential on slice k (k = 1..n).
    pub fn potential_layer(&self, seed: u64, k: u64) -> Vec<f64> {
        let mut r = counter_rng(seed, tag::POTENTIAL, k);
        let s = self.potential_variance.sqrt();
        (0..self.d).map(|_| s * self.potential.sample(&mut r)).collect()
    }
}

/// [[E - A - lambda v, -1], [1, 0]].
pub fn build_transfer(strip: &StripModel, e: f64, lambda: f64, v: &[f64]) -> CMat {
    let d = strip.d;
    let mut t = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            t[(i, j)] = c(-strip.a[(i, j)], 0.0);
        }
        t[(i, i)] += c(e - lambda * v.get(i).copied().unwrap_or(0.0), 0.0);
        t[(i, d + i)] = c(-1.0, 0.0);
        t[(d + i, i)] = c(1.0, 0.0);
    }
    t
}

/// [[0, 1], [-1, 0]].
pub fn symplectic_form(d: usize) -> CMat {
    let mut j = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = c(1.0, 0.0);
        j[(d + i, i)] = c(-1.0, 0.0);
    }
    j
}
