use nalgebra::Schur;
use stripsde_core::linalg::{max_abs_diff, unitary_defect};
use stripsde_core::{cis, CMat, Error, Result, C64};

/// Eigenphase form U = P diag(e^{i phi}) P* of a unitary, so powers U^k are
/// formed from exact phases instead of repeated products.
#[derive(Debug, Clone)]
pub struct Frame {
    pub phases: Vec<f64>,
    /// None when U is already diagonal
    pub vecs: Option<CMat>,
}

impl Frame {
    pub fn new(u: &CMat) -> Result<Self> {
        let d = u.nrows();
        if d == 0 {
            return Ok(Self { phases: vec![], vecs: None });
        }
        if unitary_defect(u) > 1e-10 {
            return Err(Error::InvalidModel("frame matrix is not unitary".into()));
        }
        let off = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| u[(i, j)].norm()).fold(0.0, f64::max);
        if off == 0.0 {
            return Ok(Self { phases: (0..d).map(|i| u[(i, i)].arg()).collect(), vecs: None });
        }
        // a unitary is normal, so its complex Schur form is diagonal
        let (p, t) = Schur::new(u.clone()).unpack();
        let phases: Vec<f64> = (0..d).map(|i| t[(i, i)].arg()).collect();
        let f = Self { phases, vecs: Some(p) };
        if max_abs_diff(&f.power(1), u) > 1e-10 {
            return Err(Error::InvalidModel("unitary frame could not be diagonalised".into()));
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.vecs.is_none()
    }

    /// e^{i k phi_j}
    pub fn phase_powers(&self, k: i64) -> Vec<C64> {
        self.phases.iter().map(|&p| cis(k as f64 * p)).collect()
    }

    /// U^k for any integer k.
    pub fn power(&self, k: i64) -> CMat {
        let ph = self.phase_powers(k);
        let dm = CMat::from_diagonal(&nalgebra::DVector::from_vec(ph));
        match &self.vecs {
            None => dm,
            Some(p) => p * dm * p.adjoint(),
        }
    }
}
