use stripsde_core::{Error, Result};

/// Square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IMat {
    pub n: usize,
    pub data: Vec<i128>,
}

impl IMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i128 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i128) {
        self.data[i * self.n + j] = v;
    }

    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s: i128 = 0;
                for k in 0..n {
                    s = s.checked_add(self.get(i, k).checked_mul(other.get(k, j))?)?;
                }
                out.set(i, j, s);
            }
        }
        Some(out)
    }

    /// Identity plus a superdiagonal of ones.
    pub fn jordan(n: usize) -> Self {
        let mut m = Self::identity(n);
        for i in 0..n.saturating_sub(1) {
            m.set(i, i + 1, 1);
        }
        m
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) as f64).collect()).collect()
    }
}

pub fn binomial(n: i64, k: i64) -> Option<i128> {
    if k < 0 || n < 0 || k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut r: i128 = 1;
    for i in 0..k {
        r = r.checked_mul((n - i) as i128)? / (i + 1) as i128;
    }
    Some(r)
}

/// How the displayed closed form for the Pascal inverse relates to the exact one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormRelation {
    Equal,
    Negated,
    Unrelated,
}

/// Band-edge model of order d: transfer matrix at E = 0 with its Pascal
/// conjugation to a single Jordan block.
#[derive(Debug, Clone)]
pub struct BandEdgeModel {
    pub d: usize,
    pub t: IMat,
    pub s: IMat,
    pub m: IMat,
    pub minv: IMat,
    pub msm: IMat,
    /// 2/(4d-1) as (numerator, denominator)
    pub alpha: (i64, i64),
    pub alpha_jordan: (i64, i64),
    pub closed_form: ClosedFormRelation,
}

pub fn jordan_alpha(d1: usize) -> f64 {
    2.0 / (2.0 * d1 as f64 - 1.0)
}

pub fn build_band_edge(d: usize) -> Result<BandEdgeModel> {
    if d == 0 {
        return Err(Error::InvalidModel("band-edge order must be at least 1".into()));
    }
    let n = 2 * d;
    let ovf = || Error::Overflow(d);
    let mut t = IMat::zeros(n);
    for k in 1..=n {
        let b = binomial(n as i64, (n - k) as i64).ok_or_else(ovf)?;
        t.set(0, k - 1, if k % 2 == 1 { b } else { -b });
    }
    for i in 1..n {
        t.set(i, i - 1, 1);
    }
    let mut s = IMat::zeros(n);
    s.set(0, d - 1, 1);
    let mut m = IMat::zeros(n);
    for j in 1..=n {
        for k in 1..=n {
            m.set(j - 1, k - 1, binomial((n - j) as i64, (k - 1) as i64).ok_or_else(ovf)?);
        }
    }
    let minv = pascal_inverse(&m).ok_or_else(ovf)?;
    let check = m.checked_mul(&minv).ok_or_else(ovf)?;
    if check != IMat::identity(n) {
        return Err(Error::InvalidModel("Pascal inverse failed".into()));
    }
    let msm = minv.checked_mul(&s).and_then(|x| x.checked_mul(&m)).ok_or_else(ovf)?;
    let cf = closed_form_minv(d).ok_or_else(ovf)?;
    let closed_form = if cf == minv {
        ClosedFormRelation::Equal
    } else if cf.data.iter().zip(&minv.data).all(|(a, b)| *a == -*b) {
        ClosedFormRelation::Negated
    } else {
        ClosedFormRelation::Unrelated
    };
    let den = 4 * d as i64 - 1;
    Ok(BandEdgeModel { d, t, s, m, minv, msm, alpha: (2, den), alpha_jordan: (2, den), closed_form })
}

/// M has ones on the anti-diagonal and zeros below it, so M with its columns
/// reversed is unit upper triangular; invert that by back substitution.
fn pascal_inverse(m: &IMat) -> Option<IMat> {
    let n = m.n;
    let u = |i: usize, j: usize| m.get(i, n - 1 - j);
    // solve U X = I column by column
    let mut x = IMat::zeros(n);
    for col in 0..n {
        for i in (0..n).rev() {
            let mut s: i128 = if i == col { 1 } else { 0 };
            for k in i + 1..n {
                s = s.checked_sub(u(i, k).checked_mul(x.get(k, col))?)?;
            }
            if u(i, i) != 1 {
                return None;
            }
            x.set(i, col, s);
        }
    }
    // M = U P with P the reversal, so M^{-1} = P U^{-1}
    let mut out = IMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, x.get(n - 1 - i, j));
        }
    }
    Some(out)
}

/// (-1)^{j+k} C(j-1, 2d-k), the displayed sign pattern.
pub fn closed_form_minv(d: usize) -> Option<IMat> {
    let n = 2 * d;
    let mut out = IMat::zeros(n);
    for j in 1..=n {
        for k in 1..=n {
            let b = binomial(j as i64 - 1, (n - k) as i64)?;
            out.set(j - 1, k - 1, if (j + k) % 2 == 0 { b } else { -b });
        }
    }
    Some(out)
}

impl BandEdgeModel {
    pub fn alpha_f64(&self) -> f64 {
        self.alpha.0 as f64 / self.alpha.1 as f64
    }

    /// M^{-1} T M.
    pub fn conjugated(&self) -> Option<IMat> {
        self.minv.checked_mul(&self.t)?.checked_mul(&self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&[i128]]) -> IMat {
        IMat { n: rows.len(), data: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    #[test]
    fn order_one() {
        let b = build_band_edge(1).unwrap();
        assert_eq!(b.t, from_rows(&[&[2, -1], &[1, 0]]));
        assert_eq!(b.m, from_rows(&[&[1, 1], &[1, 0]]));
        assert_eq!(b.conjugated().unwrap(), from_rows(&[&[1, 1], &[0, 1]]));
        assert_eq!(b.closed_form, ClosedFormRelation::Negated);
    }

    #[test]
    fn invariants_up_to_eight() {
        for d in 1..=8 {
            let b = build_band_edge(d).unwrap();
            let n = 2 * d;
            assert_eq!(b.m.checked_mul(&b.minv).unwrap(), IMat::identity(n));
            assert_eq!(b.conjugated().unwrap(), IMat::jordan(n), "d={d}");
            for j in 0..n {
                for k in 0..n {
                    let want = if j == n - 1 && k <= d { binomial(d as i64, k as i64).unwrap() } else { 0 };
                    assert_eq!(b.msm.get(j, k), want, "d={d} ({j},{k})");
                }
            }
        }
    }

    #[test]
    fn alphas() {
        assert_eq!(jordan_alpha(1), 2.0);
        assert!((jordan_alpha(2) - 2.0 / 3.0).abs() < 1e-15);
        let b = build_band_edge(3).unwrap();
        assert_eq!(b.alpha, (2, 11));
        assert!((b.alpha_f64() - jordan_alpha(6)).abs() < 1e-15);
    }

    #[test]
    fn large_order_builds() {
        assert!(build_band_edge(15).is_ok());
    }
}
