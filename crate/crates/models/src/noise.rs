use stripsde_core::linalg::op_norm;
use stripsde_core::rng::{counter_rng, tag, ScalarDist};
use stripsde_core::tensor::Tensor4;
use stripsde_core::{c, CMat, Error, Result, C64};

/// How one perturbation is drawn from unit-variance scalars.
#[derive(Debug, Clone)]
pub enum Sampler {
    /// Every entry an independent real draw.
    RealEntries,
    /// Every entry (x + iy)/sqrt(2) with x, y independent.
    ComplexEntries,
    /// sum_a xi_a B_a with independent scalars xi_a.
    Linear(Vec<CMat>),
}

/// Law of the i.i.d. perturbations V_n, the deterministic second-order part
/// W and the exact second moments of V.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub dim: usize,
    pub sampler: Sampler,
    pub dist: ScalarDist,
    pub w: CMat,
    /// E(V_ij V_kl)
    pub m2: Tensor4,
    /// E(conj(V_ij) V_kl)
    pub m2c: Tensor4,
    pub clip_bound: Option<f64>,
    /// truncation exponent, ||Y|| >= clip * lambda^(s-1) is discarded
    pub s: f64,
    /// random stream tag used by `sample`
    pub stream: u64,
}

pub const DEFAULT_S: f64 = 0.75;

impl NoiseModel {
    pub fn new(dim: usize, sampler: Sampler, dist: ScalarDist, w: CMat) -> Result<Self> {
        if w.nrows() != dim || w.ncols() != dim {
            return Err(Error::InvalidModel(format!("W must be {dim}x{dim}")));
        }
        let (m2, m2c) = match &sampler {
            Sampler::RealEntries => {
                let t = Tensor4::from_fn(dim, |i, j, k, l| c(delta2(i, j, k, l), 0.0));
                (t.clone(), t)
            }
            Sampler::ComplexEntries => {
                // E(z^2) = (E x^2 - E y^2)/2 = 0 for every unit-variance law
                let t = Tensor4::from_fn(dim, |i, j, k, l| c(delta2(i, j, k, l), 0.0));
                (Tensor4::zeros(dim), t)
            }
            Sampler::Linear(basis) => {
                for b in basis {
                    if b.nrows() != dim || b.ncols() != dim {
                        return Err(Error::InvalidModel(format!("noise basis element must be {dim}x{dim}")));
                    }
                }
                let mut m2 = Tensor4::zeros(dim);
                let mut m2c = Tensor4::zeros(dim);
                for b in basis {
                    for i in 0..dim {
                        for j in 0..dim {
                            let x = b[(i, j)];
                            if x == C64::new(0.0, 0.0) {
                                continue;
                            }
                            for k in 0..dim {
                                for l in 0..dim {
                                    let y = b[(k, l)];
                                    m2.add(i, j, k, l, x * y);
                                    m2c.add(i, j, k, l, x.conj() * y);
                                }
                            }
                        }
                    }
                }
                (m2, m2c)
            }
        };
        Ok(Self { dim, sampler, dist, w, m2, m2c, clip_bound: None, s: DEFAULT_S, stream: tag::NOISE })
    }

    pub fn real_entries(dim: usize, dist: ScalarDist) -> Self {
        Self::new(dim, Sampler::RealEntries, dist, CMat::zeros(dim, dim)).unwrap()
    }

    pub fn complex_entries(dim: usize, dist: ScalarDist) -> Self {
        Self::new(dim, Sampler::ComplexEntries, dist, CMat::zeros(dim, dim)).unwrap()
    }

    pub fn with_w(mut self, w: CMat) -> Result<Self> {
        if w.nrows() != self.dim || w.ncols() != self.dim {
            return Err(Error::InvalidModel(format!("W must be {0}x{0}", self.dim)));
        }
        self.w = w;
        Ok(self)
    }

    pub fn with_clip(mut self, bound: f64, s: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::InvalidModel("clip_bound must be positive".into()));
        }
        if !(s > 2.0 / 3.0 && s < 1.0) {
            return Err(Error::InvalidModel(format!("truncation exponent s = {s} must lie in (2/3, 1)")));
        }
        self.clip_bound = Some(bound);
        self.s = s;
        Ok(self)
    }

    /// V_n for the given seed, a pure function of (seed, n).
    pub fn sample(&self, seed: u64, n: u64) -> CMat {
        let mut r = counter_rng(seed, self.stream, n);
        let d = self.dim;
        match &self.sampler {
            Sampler::RealEntries => CMat::from_fn(d, d, |_, _| c(self.dist.sample(&mut r), 0.0)),
            Sampler::ComplexEntries => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                CMat::from_fn(d, d, |_, _| {
                    let x = self.dist.sample(&mut r);
                    let y = self.dist.sample(&mut r);
                    c(h * x, h * y)
                })
            }
            Sampler::Linear(basis) => {
                let mut m = CMat::zeros(d, d);
                for b in basis {
                    let xi = self.dist.sample(&mut r);
                    m += b * c(xi, 0.0);
                }
                m
            }
        }
    }

    /// Y_n = V_n + lambda W, set to zero when truncation is on and the draw is too large.
    pub fn sample_y(&self, seed: u64, n: u64, lambda: f64) -> CMat {
        let y = self.sample(seed, n) + &self.w * c(lambda, 0.0);
        match self.clip_bound {
            Some(b) if lambda > 0.0 && op_norm(&y) >= b * lambda.powf(self.s - 1.0) => CMat::zeros(self.dim, self.dim),
            _ => y,
        }
    }

    /// Smallest eigenvalue of M2c read as a Hermitian map on vectorised matrices.
    pub fn m2c_min_eigenvalue(&self) -> f64 {
        let m = self.m2c.as_matrix();
        let h = (&m + m.adjoint()) * c(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn delta2(i: usize, j: usize, k: usize, l: usize) -> f64 {
    if i == k && j == l {
        1.0
    } else {
        0.0
    }
}
