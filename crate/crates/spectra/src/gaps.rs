use crate::process::PointProcess;
use std::collections::BTreeMap;
use std::fmt::Write;
use stripsde_core::stats::{ks_two_sample, mean, quantile_sorted, sorted};
use stripsde_core::{Error, Result};
use stripsde_sdelimit::goe_limit_matrix;

pub const QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub struct WindowCounts {
    pub n_points: usize,
    pub window: (f64, f64),
    /// mean raw gap before normalization
    pub mean_gap: f64,
    /// points per unit length of the window
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapStatistics {
    /// consecutive differences divided by their mean
    pub gaps: Vec<f64>,
    /// (x, F(x)) at each sorted gap
    pub ecdf: Vec<(f64, f64)>,
    pub ks_vs_reference: Option<f64>,
    pub counts: WindowCounts,
}

/// Empirical CDF evaluated at the sorted sample.
pub fn ecdf(sample: &[f64]) -> Vec<(f64, f64)> {
    let s = sorted(sample);
    let n = s.len() as f64;
    s.iter().enumerate().map(|(i, &x)| (x, (i + 1) as f64 / n)).collect()
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    ks_two_sample(a, b)
}

pub fn gap_statistics(pp: &PointProcess) -> Result<GapStatistics> {
    gaps_of(&pp.points, pp.window)
}

/// Gap statistics of a sorted sequence (also used for pooled gap samples).
pub fn gaps_of(points: &[f64], window: (f64, f64)) -> Result<GapStatistics> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let raw: Vec<f64> = points.windows(2).map(|w| w[1] - w[0]).collect();
    let m = mean(&raw);
    let gaps: Vec<f64> = if m > 0.0 { raw.iter().map(|g| g / m).collect() } else { raw.clone() };
    let len = window.1 - window.0;
    Ok(GapStatistics {
        ecdf: ecdf(&gaps),
        gaps,
        ks_vs_reference: None,
        counts: WindowCounts { n_points: points.len(), window, mean_gap: m, density: if len > 0.0 { points.len() as f64 / len } else { f64::NAN } },
    })
}

impl GapStatistics {
    /// Statistics of an already normalized gap sample (pooled runs).
    pub fn from_gaps(gaps: Vec<f64>, counts: WindowCounts) -> Self {
        Self { ecdf: ecdf(&gaps), gaps, ks_vs_reference: None, counts }
    }

    pub fn with_reference(mut self, reference: &[f64]) -> Self {
        self.ks_vs_reference = Some(ks_distance(&self.gaps, reference));
        self
    }

    pub fn quantiles(&self) -> Vec<f64> {
        let s = sorted(&self.gaps);
        QUANTILES.iter().map(|&p| quantile_sorted(&s, p)).collect()
    }

    /// key = value lines: ks, n_gaps, mean_gap, q05 .. q95.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        match self.ks_vs_reference {
            Some(k) => {
                let _ = writeln!(s, "ks = {k}");
            }
            None => s.push_str("ks = nan\n"),
        }
        let _ = writeln!(s, "n_gaps = {}", self.gaps.len());
        let _ = writeln!(s, "mean_gap = {}", self.counts.mean_gap);
        for (p, q) in QUANTILES.iter().zip(self.quantiles()) {
            let _ = writeln!(s, "q{:02} = {q}", (p * 100.0).round() as u32);
        }
        s
    }
}

/// Index range of the middle half of a sorted spectrum of length m.
pub fn central_range(m: usize) -> std::ops::Range<usize> {
    let lo = m / 4;
    let hi = (3 * m).div_ceil(4);
    lo..hi.max(lo + 2.min(m))
}

/// Gaps between consecutive points of the middle half, with the position of
/// each gap inside the spectrum.
pub fn central_gaps(points: &[f64]) -> Vec<(usize, f64)> {
    let r = central_range(points.len());
    let idx: Vec<usize> = r.collect();
    idx.windows(2).map(|w| (w[0], points[w[1]] - points[w[0]])).collect()
}

/// Pools central gaps of many spectra, dividing each by the mean gap at the
/// same (spectrum size, position) across the pool.
pub fn pooled_central_gaps(spectra: &[Vec<f64>]) -> Vec<f64> {
    let per: Vec<Vec<(usize, f64)>> = spectra.iter().map(|s| central_gaps(s)).collect();
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for (s, gs) in spectra.iter().zip(&per) {
        for &(pos, g) in gs {
            let e = sums.entry((s.len(), pos)).or_insert((0.0, 0));
            e.0 += g;
            e.1 += 1;
        }
    }
    let mut out = vec![];
    for (s, gs) in spectra.iter().zip(&per) {
        for &(pos, g) in gs {
            let (tot, k) = sums[&(s.len(), pos)];
            out.push(g * k as f64 / tot);
        }
    }
    out
}

/// Spectrum of one draw of the reference matrix (d+1)^{-1/2}(K + b 1).
pub fn goe_reference_spectrum(d_e: usize, d: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut ev: Vec<f64> = goe_limit_matrix(d_e, d, seed, index).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Pooled normalized central gaps of `n_samples` reference spectra.
pub fn goe_reference_gaps(d_e: usize, d: usize, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    if d_e < 2 {
        return Err(Error::Validation(format!("reference gaps need d_e >= 2, got {d_e}")));
    }
    let spectra: Vec<Vec<f64>> = (0..n_samples as u64).map(|k| goe_reference_spectrum(d_e, d, seed, k)).collect();
    Ok(pooled_central_gaps(&spectra))
}
