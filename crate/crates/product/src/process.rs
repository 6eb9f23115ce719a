use crate::frame::Frame;
use std::fmt::Write;
use stripsde_core::linalg::{block, checked_inverse, op_norm};
use stripsde_core::{c, CMat, Error, Result, C64};
use stripsde_models::{BlockSpectrum, NoiseModel};

pub const COND_LIMIT: f64 = 1e12;

/// (X, Z) pair of the rotating-frame product after `n` steps.
#[derive(Debug, Clone)]
pub struct ProductState {
    pub n: u64,
    pub x: CMat,
    pub z: CMat,
    pub znorm: f64,
    pub max_znorm: f64,
    pub cond: f64,
    pub max_cond: f64,
}

/// X = A - B D^{-1} C and Z = B D^{-1} for the split (d - d2, d2).
pub fn schur(full: &CMat, d2: usize) -> Result<(CMat, CMat)> {
    let d = full.nrows();
    let m = d - d2;
    if d2 == 0 {
        return Ok((full.clone(), CMat::zeros(m, 0)));
    }
    let a = block(full, 0, 0, m, m);
    let b = block(full, 0, m, m, d2);
    let cc = block(full, m, 0, d2, m);
    let dd = block(full, m, m, d2, d2);
    let (dinv, _) = checked_inverse(&dd, COND_LIMIT).map_err(|cond| Error::SingularPivot { step: 0, cond })?;
    let z = b * dinv;
    let x = a - &z * cc;
    Ok((x, z))
}

pub fn init_state(x0_full: &CMat, spectrum: &BlockSpectrum) -> Result<ProductState> {
    if x0_full.nrows() != spectrum.dim() || x0_full.ncols() != spectrum.dim() {
        return Err(Error::Validation(format!("initial matrix must be {0}x{0}", spectrum.dim())));
    }
    let (x, z) = schur(x0_full, spectrum.d2).map_err(|e| match e {
        Error::SingularPivot { cond, .. } => Error::SingularStart(cond),
        other => other,
    })?;
    let zn = if z.is_empty() { 0.0 } else { op_norm(&z) };
    Ok(ProductState { n: 0, x, z, znorm: zn, max_znorm: zn, cond: 1.0, max_cond: 1.0 })
}

/// Everything a step needs that does not change from step to step.
#[derive(Debug, Clone)]
pub struct ProductEngine {
    pub spectrum: BlockSpectrum,
    pub noise: NoiseModel,
    pub lambda: f64,
    pub frame: Frame,
    s: CMat,
    g2inv: CMat,
}

impl ProductEngine {
    pub fn new(spectrum: &BlockSpectrum, noise: &NoiseModel, lambda: f64) -> Result<Self> {
        if noise.dim != spectrum.dim() {
            return Err(Error::Validation(format!("noise dimension {} does not match model dimension {}", noise.dim, spectrum.dim())));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Validation("lambda must be nonnegative".into()));
        }
        let (d0, d1) = (spectrum.d0, spectrum.d1);
        let mut s = CMat::identity(d0 + d1, d0 + d1);
        s.view_mut((0, 0), (d0, d0)).copy_from(&spectrum.gamma0);
        Ok(Self {
            spectrum: spectrum.clone(),
            noise: noise.clone(),
            lambda,
            frame: Frame::new(&spectrum.u)?,
            s,
            g2inv: spectrum.gamma2_inv(),
        })
    }

    /// diag(1_{d0}, U^k)
    fn r_power(&self, k: i64) -> RPow {
        let d0 = self.spectrum.d0;
        if self.frame.is_diagonal() {
            let mut v = vec![c(1.0, 0.0); d0];
            v.extend(self.frame.phase_powers(k));
            RPow::Diag(v)
        } else {
            let m = d0 + self.spectrum.d1;
            let mut r = CMat::identity(m, m);
            r.view_mut((d0, d0), (self.spectrum.d1, self.spectrum.d1)).copy_from(&self.frame.power(k));
            RPow::Full(r)
        }
    }

    /// One step of the product with the perturbation number state.n + 1.
    pub fn step(&self, state: &ProductState, seed: u64) -> Result<ProductState> {
        let sp = &self.spectrum;
        let (m, d2) = (sp.d0 + sp.d1, sp.d2);
        let n1 = state.n + 1;
        let lam = c(self.lambda, 0.0);
        let y = self.noise.sample_y(seed, n1, self.lambda);
        let left = self.r_power(-(n1 as i64));
        let right = self.r_power(n1 as i64 - 1);
        let ya = block(&y, 0, 0, m, m);
        let ta = &self.s + left.lmul(&right.rmul(&ya)) * lam;
        if d2 == 0 {
            let x = ta * &state.x;
            return Ok(ProductState { n: n1, x, z: state.z.clone(), znorm: 0.0, max_znorm: 0.0, cond: 1.0, max_cond: 1.0 });
        }
        let tb = left.lmul(&block(&y, 0, m, m, d2)) * lam;
        let tc = right.rmul(&block(&y, m, 0, d2, m)) * lam;
        let td = &self.g2inv + block(&y, m, m, d2, d2) * lam;
        let num = &ta * &state.z + tb;
        let den = &tc * &state.z + td;
        let (dinv, cond) = checked_inverse(&den, COND_LIMIT).map_err(|cond| Error::SingularPivot { step: n1, cond })?;
        let z = num * dinv;
        let x = &ta * &state.x - &z * (tc * &state.x);
        if !x.iter().chain(z.iter()).all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::SingularPivot { step: n1, cond: f64::INFINITY });
        }
        let zn = op_norm(&z);
        Ok(ProductState {
            n: n1,
            x,
            z,
            znorm: zn,
            max_znorm: state.max_znorm.max(zn),
            cond,
            max_cond: state.max_cond.max(cond),
        })
    }
}

enum RPow {
    Diag(Vec<C64>),
    Full(CMat),
}

impl RPow {
    fn lmul(&self, a: &CMat) -> CMat {
        match self {
            RPow::Diag(v) => CMat::from_fn(a.nrows(), a.ncols(), |i, j| v[i] * a[(i, j)]),
            RPow::Full(r) => r * a,
        }
    }

    fn rmul(&self, a: &CMat) -> CMat {
        match self {
            RPow::Diag(v) => CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * v[j]),
            RPow::Full(r) => a * r,
        }
    }
}

pub fn step(state: &ProductState, spectrum: &BlockSpectrum, noise: &NoiseModel, lambda: f64, seed: u64) -> Result<ProductState> {
    ProductEngine::new(spectrum, noise, lambda)?.step(state, seed)
}

/// Runs `steps` steps, keeping the initial state, every `stride`-th state and the last one.
pub fn run_product(
    spectrum: &BlockSpectrum,
    noise: &NoiseModel,
    lambda: f64,
    steps: u64,
    x0_full: &CMat,
    seed: u64,
    stride: u64,
) -> Result<Vec<ProductState>> {
    let mut kept = Vec::new();
    let stride = stride.max(1);
    let last = run_product_with(spectrum, noise, lambda, steps, x0_full, seed, |s| {
        if s.n % stride == 0 {
            kept.push(s.clone());
        }
    })?;
    if kept.last().map(|s| s.n) != Some(last.n) {
        kept.push(last);
    }
    Ok(kept)
}

/// Runs the product calling `observe` on every state including the initial one.
pub fn run_product_with<F: FnMut(&ProductState)>(
    spectrum: &BlockSpectrum,
    noise: &NoiseModel,
    lambda: f64,
    steps: u64,
    x0_full: &CMat,
    seed: u64,
    mut observe: F,
) -> Result<ProductState> {
    let engine = ProductEngine::new(spectrum, noise, lambda)?;
    let mut st = init_state(x0_full, spectrum)?;
    observe(&st);
    for _ in 0..steps {
        st = engine.step(&st, seed)?;
        observe(&st);
    }
    Ok(st)
}

/// K_Z = K_Z_SCALE / sqrt(1 - e^{-2 gamma}): the stationary size of Z grows
/// like lambda / sqrt(1 - e^{-2 gamma}), so one constant cannot serve all
/// contraction rates. Calibrated on gamma in [0.1, 1], lambda in [1e-3, 0.1].
pub const K_Z_SCALE: f64 = 10.0;

/// Soft check of ||Z_n|| <= K_Z (e^{-gamma n/2} + lambda^s) after the burn-in.
#[derive(Debug, Clone)]
pub struct ZEnvelope {
    pub gamma: f64,
    pub lambda: f64,
    pub s: f64,
    pub k_z: f64,
}

impl ZEnvelope {
    pub fn new(spectrum: &BlockSpectrum, noise: &NoiseModel, lambda: f64) -> Self {
        Self { gamma: spectrum.gamma, lambda, s: noise.s, k_z: K_Z_SCALE / (1.0 - (-2.0 * spectrum.gamma).exp()).sqrt() }
    }

    /// Ratio ||Z_n|| / bound(n) of one state, zero during the burn-in.
    pub fn ratio(&self, st: &ProductState) -> f64 {
        if st.n < self.burn_in() {
            0.0
        } else {
            st.znorm / self.bound(st.n)
        }
    }

    pub fn burn_in(&self) -> u64 {
        if self.lambda <= 0.0 {
            return 0;
        }
        ((self.s / self.gamma) * (self.lambda.powi(-2)).ln()).ceil() as u64
    }

    pub fn bound(&self, n: u64) -> f64 {
        self.k_z * ((-self.gamma * n as f64 / 2.0).exp() + self.lambda.powf(self.s))
    }

    /// Largest ratio ||Z_n|| / bound(n) over retained states past the burn-in.
    pub fn worst_ratio(&self, states: &[ProductState]) -> f64 {
        states.iter().map(|s| self.ratio(s)).fold(0.0, f64::max)
    }

    pub fn violated(&self, states: &[ProductState]) -> bool {
        self.worst_ratio(states) > 1.0
    }
}

/// step, X_r_c_re, X_r_c_im, ..., Z_r_c_re, Z_r_c_im, ..., znorm, cond
pub fn trajectory_csv(states: &[ProductState]) -> String {
    let mut out = String::from("step");
    if let Some(s0) = states.first() {
        for (name, m) in [("X", &s0.x), ("Z", &s0.z)] {
            for r in 0..m.nrows() {
                for col in 0..m.ncols() {
                    let _ = write!(out, ",{name}_{r}_{col}_re,{name}_{r}_{col}_im");
                }
            }
        }
    }
    out.push_str(",znorm,cond\n");
    for s in states {
        let _ = write!(out, "{}", s.n);
        for m in [&s.x, &s.z] {
            for r in 0..m.nrows() {
                for col in 0..m.ncols() {
                    let v = m[(r, col)];
                    let _ = write!(out, ",{:e},{:e}", v.re, v.im);
                }
            }
        }
        let _ = writeln!(out, ",{:e},{:e}", s.znorm, s.cond);
    }
    out
}
