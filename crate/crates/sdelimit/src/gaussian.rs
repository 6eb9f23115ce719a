use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use stripsde_core::rng::normal;
use stripsde_core::{c, CMat, Error, Result, C64};

/// Smallest eigenvalue of the real embedding that is still accepted (then clipped to zero).
pub const EIGEN_FLOOR: f64 = -1e-9;

/// Centred complex Gaussian vector b with E(b b*) = C and E(b b^T) = R,
/// sampled through the real embedding of (Re b, Im b).
#[derive(Debug, Clone)]
pub struct ComplexGaussianSpec {
    pub dim: usize,
    pub c: CMat,
    pub r: CMat,
    /// 2m x rank factor F with F F^T equal to the (floored) real covariance
    pub chol: DMatrix<f64>,
}

impl ComplexGaussianSpec {
    pub fn new(c_mat: CMat, r_mat: CMat) -> Result<Self> {
        let m = c_mat.nrows();
        if c_mat.ncols() != m || r_mat.nrows() != m || r_mat.ncols() != m {
            return Err(Error::Validation("covariance and pseudo-covariance must be square of equal size".into()));
        }
        // E(x x^T), E(y y^T), E(x y^T) for b = x + i y
        let mut s = DMatrix::<f64>::zeros(2 * m, 2 * m);
        for p in 0..m {
            for q in 0..m {
                let (cc, rr) = (c_mat[(p, q)], r_mat[(p, q)]);
                s[(p, q)] = 0.5 * (cc.re + rr.re);
                s[(m + p, m + q)] = 0.5 * (cc.re - rr.re);
                s[(p, m + q)] = 0.5 * (rr.im - cc.im);
                s[(m + p, q)] = 0.5 * (rr.im + cc.im);
            }
        }
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::new(s.clone());
        let (lmin, lmax) = eig.eigenvalues.iter().fold((f64::INFINITY, 0f64), |(a, b), &x| (a.min(x), b.max(x)));
        if lmin < EIGEN_FLOOR {
            return Err(Error::InvalidCovariance(lmin));
        }
        let cut = 1e-13 * lmax.max(1e-300);
        let keep: Vec<usize> = (0..2 * m).filter(|&k| eig.eigenvalues[k] > cut).collect();
        let mut f = DMatrix::<f64>::zeros(2 * m, keep.len());
        for (col, &k) in keep.iter().enumerate() {
            let sq = eig.eigenvalues[k].sqrt();
            for row in 0..2 * m {
                f[(row, col)] = eig.eigenvectors[(row, k)] * sq;
            }
        }
        // a coordinate with zero variance is identically zero
        for row in 0..2 * m {
            if s[(row, row)] <= 0.0 {
                f.row_mut(row).fill(0.0);
            }
        }
        Ok(Self { dim: m, c: c_mat, r: r_mat, chol: f })
    }

    /// One draw scaled by sqrt(dt).
    pub fn sample_vec<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Vec<C64> {
        let m = self.dim;
        let k = self.chol.ncols();
        let xi: Vec<f64> = (0..k).map(|_| normal(rng)).collect();
        let sd = dt.sqrt();
        (0..m)
            .map(|p| {
                let (mut x, mut y) = (0.0, 0.0);
                for (j, z) in xi.iter().enumerate() {
                    x += self.chol[(p, j)] * z;
                    y += self.chol[(m + p, j)] * z;
                }
                c(sd * x, sd * y)
            })
            .collect()
    }
}

/// Matrix increment of a spec over vectorised d x d matrices (row-major).
pub fn sample_increment<R: Rng + ?Sized>(spec: &ComplexGaussianSpec, dt: f64, rng: &mut R) -> CMat {
    let d = (spec.dim as f64).sqrt().round() as usize;
    assert_eq!(d * d, spec.dim, "increment spec is not over square matrices");
    let v = spec.sample_vec(dt, rng);
    CMat::from_fn(d, d, |i, j| v[i * d + j])
}
