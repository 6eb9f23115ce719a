use stripsde_core::linalg::{block_diag, op_norm, spectral_radius, unitary_defect};
use stripsde_core::{CMat, Error, Result};

const TOL: f64 = 1e-10;

/// The noiseless matrix diag(Gamma0, U, Gamma2^{-1}) kept in its three blocks.
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub d0: usize,
    pub d1: usize,
    pub d2: usize,
    pub gamma0: CMat,
    pub u: CMat,
    pub gamma2: CMat,
    /// log-contraction rate: max(|Gamma0|, |Gamma2|) = e^{-gamma}
    pub gamma: f64,
}

impl BlockSpectrum {
    pub fn new(gamma0: CMat, u: CMat, gamma2: CMat) -> Result<Self> {
        for (name, m) in [("gamma0", &gamma0), ("U", &u), ("gamma2", &gamma2)] {
            if !m.is_square() {
                return Err(Error::InvalidModel(format!("{name} is not square")));
            }
        }
        if u.nrows() > 0 && unitary_defect(&u) > TOL {
            return Err(Error::InvalidModel(format!("U is not unitary (defect {:.3e})", unitary_defect(&u))));
        }
        for (name, m) in [("gamma0", &gamma0), ("gamma2", &gamma2)] {
            let rho = spectral_radius(m);
            if rho >= 1.0 - TOL {
                return Err(Error::InvalidModel(format!("spectral radius of {name} is {rho} (must be < 1)")));
            }
        }
        let nmax = op_norm(&gamma0).max(op_norm(&gamma2));
        if nmax >= 1.0 {
            // a basis change could shrink Jordan off-diagonals; we ask the caller to do it
            return Err(Error::InvalidModel(format!(
                "operator norm {nmax} of a contracting block is not below 1; supply a basis with |Gamma| < 1"
            )));
        }
        let gamma = if nmax == 0.0 { f64::INFINITY } else { -nmax.ln() };
        Ok(Self { d0: gamma0.nrows(), d1: u.nrows(), d2: gamma2.nrows(), gamma0, u, gamma2, gamma })
    }

    /// Same spectrum with an explicitly declared rate, checked against the norms.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidModel(format!("gamma must be positive, got {gamma}")));
        }
        let bound = (-gamma).exp() * (1.0 + 1e-12);
        if op_norm(&self.gamma0) > bound || op_norm(&self.gamma2) > bound {
            return Err(Error::InvalidModel(format!("|Gamma| exceeds e^(-{gamma})")));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d0 + self.d1 + self.d2
    }

    pub fn gamma2_inv(&self) -> CMat {
        self.gamma2.clone().try_inverse().expect("Gamma2 has spectral radius < 1 but must be invertible")
    }

    pub fn t0(&self) -> CMat {
        block_diag(&[&self.gamma0, &self.u, &self.gamma2_inv()])
    }

    pub fn spectral_radii(&self) -> (f64, f64) {
        (spectral_radius(&self.gamma0), spectral_radius(&self.gamma2))
    }

    /// Scalar model T0 = (1), the product of 1 + lambda v_k.
    pub fn scalar_unit() -> Self {
        Self::new(CMat::zeros(0, 0), CMat::identity(1, 1), CMat::zeros(0, 0)).unwrap()
    }
}
