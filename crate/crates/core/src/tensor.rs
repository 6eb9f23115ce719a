use crate::{CMat, C64};

/// Dense 4-index complex tensor T[i,j,k,l] over a d-dimensional index set.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub d: usize,
    pub data: Vec<C64>,
}

impl Tensor4 {
    pub fn zeros(d: usize) -> Self {
        Self { d, data: vec![C64::new(0.0, 0.0); d * d * d * d] }
    }

    pub fn from_fn<F: FnMut(usize, usize, usize, usize) -> C64>(d: usize, mut f: F) -> Self {
        let mut t = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let p = t.idx(i, j, k, l);
                        t.data[p] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.d + j) * self.d + k) * self.d + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.data[self.idx(i, j, k, l)]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, k: usize, l: usize, v: C64) {
        let p = self.idx(i, j, k, l);
        self.data[p] += v;
    }

    /// Restriction to the index window [off, off+len).
    pub fn restrict(&self, off: usize, len: usize) -> Self {
        Self::from_fn(len, |i, j, k, l| self.get(off + i, off + j, off + k, off + l))
    }

    /// Matrix form with rows (i,j) and columns (k,l), row-major pairs.
    pub fn as_matrix(&self) -> CMat {
        let m = self.d * self.d;
        CMat::from_fn(m, m, |p, q| self.get(p / self.d, p % self.d, q / self.d, q % self.d))
    }

    pub fn from_matrix(d: usize, m: &CMat) -> Self {
        Self::from_fn(d, |i, j, k, l| m[(i * d + j, k * d + l)])
    }

    /// The linear map M -> out with out[a,b] = sum_{c,d} T[c,a,d,b] M[c,d].
    /// With T[i,j,k,l] = E(A_ij B_kl) this is M -> E(A^T M B).
    pub fn contract(&self, m: &CMat) -> CMat {
        let d = self.d;
        CMat::from_fn(d, d, |a, b| {
            let mut s = C64::new(0.0, 0.0);
            for c in 0..d {
                for e in 0..d {
                    s += self.get(c, a, e, b) * m[(c, e)];
                }
            }
            s
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}
