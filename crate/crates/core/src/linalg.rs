use crate::{c, CMat, Error, RMat, Result, C64};
use nalgebra::SVD;

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, cols: usize) -> CMat {
    CMat::zeros(r, cols)
}

pub fn from_real(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn diag(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_column_slice(entries))
}

pub fn block(m: &CMat, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
    m.view((r0, c0), (nr, nc)).into_owned()
}

pub fn set_block(m: &mut CMat, r0: usize, c0: usize, b: &CMat) {
    m.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
}

pub fn block_diag(parts: &[&CMat]) -> CMat {
    let n: usize = parts.iter().map(|p| p.nrows()).sum();
    let k: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMat::zeros(n, k);
    let (mut r, mut col) = (0, 0);
    for p in parts {
        set_block(&mut out, r, col, p);
        r += p.nrows();
        col += p.ncols();
    }
    out
}

/// Largest singular value; 0 for empty matrices.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    if m.is_empty() {
        return Vec::new();
    }
    let t = nalgebra::Schur::new(m.clone()).unpack().1;
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

pub fn spectral_radius(m: &CMat) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Maximum absolute column sum.
pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn unitary_defect(u: &CMat) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &eye(u.ncols()))
}

/// Inverse with 1-norm condition number; `None` when LU breaks down.
pub fn inverse_with_cond(m: &CMat) -> (Option<CMat>, f64) {
    if m.is_empty() {
        return (Some(m.clone()), 1.0);
    }
    match m.clone().lu().try_inverse() {
        Some(inv) => {
            let cond = norm1(m) * norm1(&inv);
            (Some(inv), if cond.is_finite() { cond } else { f64::INFINITY })
        }
        None => (None, f64::INFINITY),
    }
}

/// Inverse that refuses matrices with condition number above `limit`.
pub fn checked_inverse(m: &CMat, limit: f64) -> std::result::Result<(CMat, f64), f64> {
    match inverse_with_cond(m) {
        (Some(inv), cond) if cond <= limit => Ok((inv, cond)),
        (_, cond) => Err(cond),
    }
}

/// Modified Gram-Schmidt with one reorthogonalisation pass.
pub fn orthonormal_columns(m: &CMat) -> Result<CMat> {
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let mut q = m.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).into_owned();
                let proj = qi.dotc(&q.column(j));
                let mut col = q.column_mut(j);
                col -= qi * proj;
            }
        }
        let nrm = q.column(j).norm();
        if nrm <= 1e-12 * scale {
            return Err(Error::RankDeficient);
        }
        q.column_mut(j).unscale_mut(nrm);
    }
    Ok(q)
}

/// Principal angles in ascending order. Small angles come from sines and
/// large ones from cosines so both ends keep full relative accuracy.
pub fn principal_angles(a: &CMat, b: &CMat) -> Result<Vec<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Validation("principal angles need equal ambient dimension".into()));
    }
    let qa = orthonormal_columns(a)?;
    let qb = orthonormal_columns(b)?;
    let (qa, qb) = if qa.ncols() >= qb.ncols() { (qa, qb) } else { (qb, qa) };
    let k = qb.ncols();
    let m = qa.adjoint() * &qb;
    let mut cosines = singular_values(&m);
    cosines.truncate(k);
    let resid = &qb - &qa * &m;
    let mut sines = singular_values(&resid);
    sines.truncate(k);
    sines.reverse();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let cs = cosines[i].min(1.0);
        let angle = if cs * cs < 0.5 { cs.acos() } else { sines[i].clamp(0.0, 1.0).asin() };
        out.push(angle);
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(out)
}

/// Kronecker product a (x) b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn angles_basic() {
        let e1 = CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let e2 = CMat::from_column_slice(2, 1, &[c(0.0, 0.0), c(1.0, 0.0)]);
        let d = CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(principal_angles(&e1, &e1).unwrap()[0].abs() < 1e-15);
        assert!((principal_angles(&e1, &e2).unwrap()[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        assert!((principal_angles(&d, &e1).unwrap()[0] - FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn tiny_angle_resolved() {
        let a = CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(1e-9, 0.0)]);
        let e1 = CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let ang = principal_angles(&a, &e1).unwrap()[0];
        assert!((ang - 1e-9).abs() < 1e-20);
    }

    #[test]
    fn rank_deficient_rejected() {
        let a = CMat::from_column_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(orthonormal_columns(&a), Err(Error::RankDeficient));
    }

    #[test]
    fn cond_of_singular_is_infinite() {
        let z = CMat::zeros(2, 2);
        assert!(checked_inverse(&z, 1e12).is_err());
        let (_, k) = checked_inverse(&eye(3), 1e12).unwrap();
        assert!((k - 1.0).abs() < 1e-15);
    }
}
