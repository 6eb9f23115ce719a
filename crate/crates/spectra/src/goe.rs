//! Strip side of the GOE comparison. Elliptic channels are tuned so that
//! z_j^{n+1} = 1 for every j: then E is a d_e-fold eigenvalue of the free
//! strip, and under a weak potential (lambda = sigma / sqrt n) the cluster
//! split off it, scaled by n / sigma, approximates the spectrum of the
//! reference matrix.

use crate::finite::strip_eigenvalues_sturm;
use crate::gaps::{goe_reference_gaps, ks_distance, pooled_central_gaps};
use std::f64::consts::PI;
use stripsde_core::rng::ScalarDist;
use stripsde_core::{cis, Error, Result, C64};
use stripsde_models::channel::{decompose_channels, is_chaotic, CHAOS_TOL, PARABOLIC_TOL};
use stripsde_models::{ChannelData, StripModel};

/// Gap E - a of the hyperbolic channels added by `ResonantStrip`.
pub const HYPERBOLIC_GAP: f64 = 2.5;

/// Greedy choice of `count` even indices m_j >= (n+1)/3 such that the phases
/// pi m_j / (n+1) are chaotic.
pub fn resonant_indices(n: usize, count: usize) -> Result<Vec<usize>> {
    let np1 = n + 1;
    let phase = |m: usize| cis(PI * m as f64 / np1 as f64);
    let mut out: Vec<usize> = vec![];
    let mut m = np1 / 3 + (np1 / 3) % 2;
    while out.len() < count {
        if 2 * m >= np1 * 2 - 2 * (np1 / 6) {
            return Err(Error::InvalidModel(format!("no {count} chaotic resonant channels for n = {n}")));
        }
        let mut trial = out.clone();
        trial.push(m);
        let z: Vec<C64> = trial.iter().map(|&k| phase(k)).collect();
        if is_chaotic(&z, CHAOS_TOL, usize::MAX).chaotic {
            out = trial;
        }
        m += 2;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ResonantStrip {
    pub strip: StripModel,
    pub channels: ChannelData,
    pub n: usize,
    pub indices: Vec<usize>,
}

impl ResonantStrip {
    /// Sine-basis profile at energy E with `d_e` resonant elliptic channels;
    /// `hyperbolic_pair` adds two hyperbolic channels at the outer sine modes
    /// (a mirror pair, so the drift stays a multiple of the identity).
    pub fn new(d_e: usize, n: usize, e: f64, hyperbolic_pair: bool) -> Result<Self> {
        let indices = resonant_indices(n, d_e)?;
        let np1 = (n + 1) as f64;
        let mut profile: Vec<f64> = indices.iter().map(|&m| e - 2.0 * (PI * m as f64 / np1).cos()).collect();
        if hyperbolic_pair {
            profile.insert(0, e - HYPERBOLIC_GAP);
            profile.push(e - HYPERBOLIC_GAP);
        }
        let strip = StripModel::with_profile(profile, e, ScalarDist::Gaussian)?;
        let channels = decompose_channels(&strip, e, PARABOLIC_TOL)?;
        Ok(Self { strip, channels, n, indices })
    }

    /// Scalar drift q (zero without hyperbolic channels).
    pub fn q(&self) -> f64 {
        self.channels.q.unwrap_or(0.0)
    }

    /// Smallest rescaled spacing n (dE/dk) among the elliptic ladders at E.
    pub fn ladder_spacing(&self) -> f64 {
        let np1 = (self.n + 1) as f64;
        self.indices.iter().map(|&m| 2.0 * PI * (PI * m as f64 / np1).sin() * self.n as f64 / np1).fold(f64::INFINITY, f64::min)
    }

    /// The d_e eigenvalues nearest to E + sigma^2 q / n, as
    /// (n (E_k - E) - sigma^2 q) / sigma, sorted. The search window is half a
    /// ladder spacing on each side.
    pub fn cluster(&self, sigma: f64, seed: u64) -> Result<Vec<f64>> {
        let n = self.n;
        let lam = sigma / (n as f64).sqrt();
        let center = sigma * sigma * self.q();
        let half = 0.5 * self.ladder_spacing();
        let pp = strip_eigenvalues_sturm(&self.strip, lam, n, (center - half, center + half), seed, 1e-6)?;
        let mut pts: Vec<f64> = pp.points.iter().map(|p| (p - center) / sigma).collect();
        pts.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        pts.truncate(self.channels.d_e);
        pts.sort_by(|a, b| a.total_cmp(b));
        Ok(pts)
    }
}

/// Outcome of a strip-versus-reference gap comparison.
#[derive(Debug, Clone)]
pub struct GoeComparison {
    pub strip_gaps: Vec<f64>,
    pub reference_gaps: Vec<f64>,
    pub ks: f64,
    /// realizations whose cluster had fewer than d_e points
    pub short_clusters: usize,
}

/// Pooled central gaps of the cluster over `seeds`, against
/// `reference_samples` draws of the reference matrix of size d_e.
pub fn compare_with_reference(rs: &ResonantStrip, sigma: f64, seeds: &[u64], reference_samples: usize, reference_seed: u64) -> Result<GoeComparison> {
    let d_e = rs.channels.d_e;
    let mut clusters = vec![];
    let mut short = 0;
    for &s in seeds {
        let c = rs.cluster(sigma, s)?;
        if c.len() < d_e {
            short += 1;
        } else {
            clusters.push(c);
        }
    }
    let strip_gaps = pooled_central_gaps(&clusters);
    let reference_gaps = goe_reference_gaps(d_e, rs.strip.d, reference_samples, reference_seed)?;
    let ks = ks_distance(&strip_gaps, &reference_gaps);
    Ok(GoeComparison { strip_gaps, reference_gaps, ks, short_clusters: short })
}
