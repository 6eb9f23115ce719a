//! Experiment configuration (TOML). Unknown keys are rejected by serde with
//! the offending key named; numeric ranges are checked in `validate`.

use crate::CliError;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use stripsde_core::rng::ScalarDist;
use stripsde_core::{c, CMat};
use stripsde_models::channel::{decompose_channels, PARABOLIC_TOL};
use stripsde_models::{build_band_edge, build_goe_channel, BandEdgeModel, BlockSpectrum, ChannelData, NoiseModel, StripModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Product,
    Coefficients,
    Sde,
    StripSpectrum,
    SdeSpectrum,
    GoeCompare,
    Flag,
    BandEdge,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Self::Product => "product",
            Self::Coefficients => "coefficients",
            Self::Sde => "sde",
            Self::StripSpectrum => "strip-spectrum",
            Self::SdeSpectrum => "sde-spectrum",
            Self::GoeCompare => "goe-compare",
            Self::Flag => "flag",
            Self::BandEdge => "band-edge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Block,
    Strip,
    Goe,
    BandEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
}

/// Square blocks as row-major lists of [re, im] pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSection {
    #[serde(default)]
    pub gamma0: Vec<[f64; 2]>,
    #[serde(rename = "U", default)]
    pub u: Vec<[f64; 2]>,
    #[serde(default)]
    pub gamma2: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripSection {
    pub d: usize,
    #[serde(default = "unit")]
    pub r: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(default = "gaussian")]
    pub potential: String,
    /// explicit channel energies a_j in the sine basis, replacing r Z_d
    #[serde(default)]
    pub profile: Option<Vec<f64>>,
    /// goe-compare: spend two of the d channels on a hyperbolic mirror pair
    #[serde(default)]
    pub hyperbolic_pair: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// "real" or "complex" entries
    #[serde(default = "real")]
    pub kind: String,
    #[serde(default = "gaussian")]
    pub dist: String,
    #[serde(default)]
    pub clip_bound: Option<f64>,
    #[serde(default)]
    pub s: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { kind: real(), dist: gaussian(), clip_bound: None, s: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandEdgeSection {
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// spectral parameter of single-path pipelines
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_grid: Option<GridSpec>,
    #[serde(default)]
    pub sigma: Option<f64>,
    /// keep every stride-th state of recorded paths (0: endpoints only)
    #[serde(default)]
    pub stride: Option<u64>,
    /// half-width of the rescaled window of strip-spectrum
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default)]
    pub haar_n: Option<u64>,
    #[serde(default)]
    pub reference_samples: Option<usize>,
    pub model: ModelSection,
    #[serde(default)]
    pub block: Option<BlockSection>,
    #[serde(default)]
    pub strip: Option<StripSection>,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub band_edge: Option<BandEdgeSection>,
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn gaussian() -> String {
    "gaussian".into()
}
fn real() -> String {
    "real".into()
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Model objects built from a configuration.
#[derive(Debug, Clone)]
pub enum Model {
    Block { spectrum: BlockSpectrum, noise: NoiseModel },
    Strip { strip: StripModel, goe: bool },
    BandEdge(BandEdgeModel),
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn square(name: &str, entries: &[[f64; 2]]) -> Result<CMat, CliError> {
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n * n != entries.len() {
        return Err(invalid(format!("block.{name} has {} entries, not a square number", entries.len())));
    }
    Ok(CMat::from_fn(n, n, |i, j| c(entries[i * n + j][0], entries[i * n + j][1])))
}

fn dist(name: &str, s: &str) -> Result<ScalarDist, CliError> {
    ScalarDist::parse(s).ok_or_else(|| invalid(format!("{name} must be gaussian, rademacher or uniform, got `{s}`")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn noise_section(&self) -> NoiseSection {
        self.noise.clone().unwrap_or_default()
    }

    pub fn strip_section(&self) -> Result<&StripSection, CliError> {
        self.strip.as_ref().ok_or_else(|| invalid("missing [strip] section"))
    }

    pub fn require_n(&self) -> Result<u64, CliError> {
        self.n.filter(|&n| n > 0).ok_or_else(|| invalid(format!("pipeline {} needs n > 0", self.pipeline.name())))
    }

    pub fn sigma_or(&self, default: f64) -> f64 {
        self.sigma.unwrap_or(default)
    }

    pub fn eps_values(&self) -> Result<Vec<f64>, CliError> {
        let g = self.eps_grid.as_ref().ok_or_else(|| invalid(format!("pipeline {} needs eps_grid", self.pipeline.name())))?;
        Ok(stripsde_spectra::linspace(g.lo, g.hi, g.points))
    }

    /// Range and compatibility checks that need no model construction.
    fn check_fields(&self) -> Result<(), CliError> {
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(invalid("replicas must be at least 1"));
        }
        for (k, v) in [("lambda", self.lambda), ("t_final", self.t_final), ("dt", self.dt), ("sigma", self.sigma), ("window", self.window)] {
            if let Some(x) = v {
                if !x.is_finite() || x < 0.0 {
                    return Err(invalid(format!("{k} must be finite and nonnegative, got {x}")));
                }
            }
        }
        if let (Some(t), Some(dt)) = (self.t_final, self.dt) {
            if !(dt > 0.0 && dt <= t) {
                return Err(invalid(format!("need 0 < dt <= t_final, got dt = {dt}, t_final = {t}")));
            }
        }
        if let Some(g) = &self.eps_grid {
            if !(g.lo < g.hi) || g.points < 3 {
                return Err(invalid("eps_grid needs lo < hi and at least 3 points"));
            }
        }
        use ModelKind::*;
        use Pipeline::*;
        let allowed: &[ModelKind] = match self.pipeline {
            Product | Coefficients | Flag => &[Block],
            Sde => &[Block, Strip, Goe],
            StripSpectrum | SdeSpectrum | GoeCompare => &[Strip, Goe],
            Pipeline::BandEdge => &[ModelKind::BandEdge],
        };
        if !allowed.contains(&self.model.kind) {
            return Err(invalid(format!("pipeline {} does not accept model.kind = {:?}", self.pipeline.name(), self.model.kind)));
        }
        match self.pipeline {
            Product => {
                self.require_n()?;
            }
            StripSpectrum => {
                self.require_n()?;
            }
            SdeSpectrum => {
                self.eps_values()?;
            }
            GoeCompare => {
                self.require_n()?;
                let s = self.strip_section()?;
                let d_e = s.d.saturating_sub(if s.hyperbolic_pair { 2 } else { 0 });
                if d_e < 2 {
                    return Err(invalid("goe-compare needs at least 2 elliptic channels"));
                }
                if self.sigma.is_some_and(|s| s <= 0.0) {
                    return Err(invalid("goe-compare needs sigma > 0"));
                }
            }
            Flag => {
                self.require_n()?;
            }
            Coefficients | Sde | Pipeline::BandEdge => {}
        }
        Ok(())
    }

    /// Full validation: field checks, then model construction.
    pub fn validate(&self) -> Result<Model, CliError> {
        self.check_fields()?;
        self.build_model()
    }

    pub fn build_model(&self) -> Result<Model, CliError> {
        match self.model.kind {
            ModelKind::Block => {
                let b = self.block.clone().unwrap_or(BlockSection { u: vec![[1.0, 0.0]], ..Default::default() });
                let spectrum = BlockSpectrum::new(square("gamma0", &b.gamma0)?, square("U", &b.u)?, square("gamma2", &b.gamma2)?)?;
                let ns = self.noise_section();
                let law = dist("noise.dist", &ns.dist)?;
                let mut noise = match ns.kind.as_str() {
                    "real" => NoiseModel::real_entries(spectrum.dim(), law),
                    "complex" => NoiseModel::complex_entries(spectrum.dim(), law),
                    other => return Err(invalid(format!("noise.kind must be real or complex, got `{other}`"))),
                };
                if let Some(bound) = ns.clip_bound {
                    noise = noise.with_clip(bound, ns.s.unwrap_or(stripsde_models::noise::DEFAULT_S))?;
                } else if ns.s.is_some() {
                    return Err(invalid("noise.s given without noise.clip_bound"));
                }
                Ok(Model::Block { spectrum, noise })
            }
            ModelKind::Strip | ModelKind::Goe => {
                let s = self.strip_section()?;
                let pot = dist("strip.potential", &s.potential)?;
                let goe = self.model.kind == ModelKind::Goe;
                let strip = match &s.profile {
                    Some(p) => {
                        if goe {
                            return Err(invalid("strip.profile is not allowed with model.kind = goe"));
                        }
                        if p.len() != s.d {
                            return Err(invalid(format!("strip.profile has {} entries, strip.d = {}", p.len(), s.d)));
                        }
                        StripModel::with_profile(p.clone(), s.e, pot)?
                    }
                    None => StripModel::laplacian(s.d, s.r, s.e, pot)?,
                };
                Ok(Model::Strip { strip, goe })
            }
            ModelKind::BandEdge => {
                let d = self.band_edge.as_ref().ok_or_else(|| invalid("missing [band_edge] section"))?.d;
                Ok(Model::BandEdge(build_band_edge(d)?))
            }
        }
    }
}

/// Channel decomposition of a strip model; GOE models use the scalar drift.
pub fn channels(strip: &StripModel, goe: bool) -> Result<ChannelData, CliError> {
    Ok(if goe { build_goe_channel(strip.d, strip.e, strip.r)? } else { decompose_channels(strip, strip.e, PARABOLIC_TOL)? })
}
