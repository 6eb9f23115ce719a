//! The eight pipelines. Each returns the files to write and a summary; the
//! orchestrator in `lib.rs` does all file output.

use crate::config::{channels, ExperimentConfig, Model, Pipeline};
use crate::CliError;
use rayon::prelude::*;
use std::fmt::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use stripsde_core::rng::{counter_rng, normal, replica_seed, tag};
use stripsde_core::stats::{mean, variance};
use stripsde_core::{c, CMat, C64};
use stripsde_models::{BlockSpectrum, ChannelData, NoiseModel, StripModel};
use stripsde_product::{propagate_flag, run_product_with, stable_flag_angles, FlagSpectrum, ZEnvelope};
use stripsde_sdelimit::{band_edge_sde, compute_coefficients, euler_maruyama, ChannelSde};
use stripsde_spectra::*;

/// Outcome of one replica.
#[derive(Debug, Clone)]
pub struct Replica<T> {
    pub index: usize,
    pub seed: u64,
    pub result: Result<T, String>,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    /// (file name, contents), written in this order
    pub files: Vec<(String, String)>,
    /// key = value lines
    pub summary: String,
    /// (index, seed, error) for every replica
    pub replicas: Vec<(usize, u64, Option<String>)>,
}

impl PipelineOutput {
    fn record<T>(&mut self, reps: &[Replica<T>]) {
        self.replicas = reps.iter().map(|r| (r.index, r.seed, r.result.as_ref().err().cloned())).collect();
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.summary, "{key} = {value}");
    }
}

/// Runs `job` for every replica on a pool of `workers` threads. Results come
/// back in replica order; a failing or panicking replica does not stop the others.
pub fn fan_out<T, F>(cfg: &ExperimentConfig, job: F) -> Result<Vec<Replica<T>>, CliError>
where
    T: Send,
    F: Fn(u64) -> stripsde_core::Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| CliError::Io(e.to_string()))?;
    let master = cfg.seed;
    Ok(pool.install(|| {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|index| {
                let seed = replica_seed(master, index as u64);
                let result = match catch_unwind(AssertUnwindSafe(|| job(seed))) {
                    Ok(r) => r.map_err(|e| e.to_string()),
                    Err(p) => Err(p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_else(|| "panic".into())),
                };
                Replica { index, seed, result }
            })
            .collect()
    }))
}

fn ok<T>(reps: &[Replica<T>]) -> impl Iterator<Item = (&Replica<T>, &T)> {
    reps.iter().filter_map(|r| r.result.as_ref().ok().map(|v| (r, v)))
}

fn entry_header(prefix: &str, m: &CMat) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let _ = write!(s, ",{prefix}_{i}_{j}_re,{prefix}_{i}_{j}_im");
        }
    }
    s
}

fn entry_row(m: &CMat) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let _ = write!(s, ",{},{}", m[(i, j)].re, m[(i, j)].im);
        }
    }
    s
}

fn ecdf_csv(gaps: &[f64]) -> String {
    let mut s = String::from("gap,F\n");
    for (x, f) in ecdf(gaps) {
        let _ = writeln!(s, "{x},{f}");
    }
    s
}

/// Endpoint table shared by the path pipelines.
fn endpoints_csv(reps: &[Replica<CMat>]) -> String {
    let mut s = String::from("replica,seed");
    if let Some((_, m)) = ok(reps).next() {
        s.push_str(&entry_header("X", m));
    }
    s.push('\n');
    for (r, m) in ok(reps) {
        let _ = writeln!(s, "{},{}{}", r.index, r.seed, entry_row(m));
    }
    s
}

fn endpoint_means(out: &mut PipelineOutput, reps: &[Replica<CMat>]) {
    let ends: Vec<&CMat> = ok(reps).map(|(_, m)| m).collect();
    let Some(first) = ends.first() else { return };
    for i in 0..first.nrows() {
        for j in 0..first.ncols() {
            let k = ends.len() as f64;
            let m: C64 = ends.iter().map(|x| x[(i, j)]).sum::<C64>() / k;
            out.line(&format!("mean_{i}_{j}"), format!("{} {}", m.re, m.im));
        }
    }
}

pub fn execute(cfg: &ExperimentConfig, model: &Model) -> Result<PipelineOutput, CliError> {
    match (cfg.pipeline, model) {
        (Pipeline::Product, Model::Block { spectrum, noise }) => product(cfg, spectrum, noise),
        (Pipeline::Coefficients, Model::Block { spectrum, noise }) => coefficients(cfg, spectrum, noise),
        (Pipeline::Sde, _) => sde(cfg, model),
        (Pipeline::StripSpectrum, Model::Strip { strip, .. }) => strip_spectrum(cfg, strip),
        (Pipeline::SdeSpectrum, Model::Strip { strip, goe }) => sde_spectrum(cfg, strip, *goe),
        (Pipeline::GoeCompare, Model::Strip { strip, .. }) => goe_compare(cfg, strip),
        (Pipeline::Flag, Model::Block { spectrum, noise }) => flag(cfg, spectrum, noise),
        (Pipeline::BandEdge, Model::BandEdge(be)) => band_edge(cfg, be),
        _ => Err(CliError::Validation(format!("pipeline {} does not match the model", cfg.pipeline.name()))),
    }
}

fn product(cfg: &ExperimentConfig, spectrum: &BlockSpectrum, noise: &NoiseModel) -> Result<PipelineOutput, CliError> {
    let n = cfg.require_n()?;
    let lambda = cfg.lambda.unwrap_or(1.0 / (n as f64).sqrt());
    let x0 = CMat::identity(spectrum.dim(), spectrum.dim());
    let env = ZEnvelope::new(spectrum, noise, lambda);
    let reps = fan_out(cfg, |seed| {
        let mut worst: f64 = 0.0;
        let st = run_product_with(spectrum, noise, lambda, n, &x0, seed, |s| worst = worst.max(env.ratio(s)))?;
        Ok((st, worst))
    })?;
    let mut out = PipelineOutput::default();
    let mut csv = String::from("replica,seed,log_abs_det_x,arg_det_x,max_znorm,z_envelope_ratio");
    if let Some((_, (st, _))) = ok(&reps).next() {
        csv.push_str(&entry_header("X", &st.x));
    }
    csv.push('\n');
    let mut logs = vec![];
    let mut flagged = 0;
    for (r, (st, ratio)) in ok(&reps) {
        let det = st.x.determinant();
        logs.push(det.norm().ln());
        flagged += usize::from(*ratio > 1.0);
        let _ = writeln!(csv, "{},{},{},{},{},{}{}", r.index, r.seed, det.norm().ln(), det.arg(), st.max_znorm, ratio, entry_row(&st.x));
    }
    out.files.push(("log_x.csv".into(), csv));
    out.line("lambda", lambda);
    out.line("steps", n);
    out.line("replicas_ok", logs.len());
    out.line("mean_log_x", mean(&logs));
    out.line("var_log_x", variance(&logs));
    if spectrum.d2 > 0 {
        // soft diagnostic: replicas whose ||Z|| left the envelope after the burn-in
        out.line("z_envelope_k", env.k_z);
        out.line("z_envelope_flagged", flagged);
    }
    out.record(&reps);
    Ok(out)
}

fn coefficients(cfg: &ExperimentConfig, spectrum: &BlockSpectrum, noise: &NoiseModel) -> Result<PipelineOutput, CliError> {
    let haar_n = cfg.haar_n.unwrap_or(stripsde_sdelimit::haar::DEFAULT_ERGODIC_N);
    let co = compute_coefficients(spectrum, noise, haar_n)?;
    let mut out = PipelineOutput::default();
    let json = serde_json::to_string_pretty(&co.to_json()).map_err(|e| CliError::Io(e.to_string()))?;
    out.files.push(("coefficients.json".into(), json + "\n"));
    out.line("d1", co.d1);
    out.line("haar", co.haar_meta.describe());
    for i in 0..co.d1 {
        for j in 0..co.d1 {
            out.line(&format!("V_{i}_{j}"), format!("{} {}", co.v[(i, j)].re, co.v[(i, j)].im));
        }
    }
    Ok(out)
}

fn channel_generator(ch: &ChannelData, goe: bool, sigma: f64) -> Result<ChannelSde, CliError> {
    Ok(if goe { ChannelSde::goe(ch, sigma)? } else { ChannelSde::anderson(ch, sigma, true)? })
}

fn path_files(out: &mut PipelineOutput, reps: &[Replica<stripsde_sdelimit::SDEPath>], stride: u64) -> Vec<Replica<CMat>> {
    if stride > 0 {
        for (r, p) in ok(reps) {
            out.files.push((format!("path_{:04}.csv", r.index), p.to_csv()));
        }
    }
    reps.iter().map(|r| Replica { index: r.index, seed: r.seed, result: r.result.as_ref().map(|p| p.last().clone()).map_err(|e| e.clone()) }).collect()
}

fn sde(cfg: &ExperimentConfig, model: &Model) -> Result<PipelineOutput, CliError> {
    let t_final = cfg.t_final.unwrap_or(1.0);
    let dt = cfg.dt.unwrap_or(1e-3);
    let stride = cfg.stride.unwrap_or(0);
    let mut out = PipelineOutput::default();
    let reps = match model {
        Model::Block { spectrum, noise } => {
            let co = compute_coefficients(spectrum, noise, cfg.haar_n.unwrap_or(stripsde_sdelimit::haar::DEFAULT_ERGODIC_N))?;
            fan_out(cfg, |seed| euler_maruyama(&co, t_final, dt, seed, stride))?
        }
        Model::Strip { strip, goe } => {
            let ch = channels(strip, *goe)?;
            let sigma = cfg.sigma_or(1.0);
            let gen = channel_generator(&ch, *goe, sigma)?;
            let eps = cfg.eps.unwrap_or(0.0);
            out.line("sigma", sigma);
            out.line("eps", eps);
            fan_out(cfg, |seed| gen.integrate(eps, t_final, dt, seed, stride))?
        }
        Model::BandEdge(_) => return Err(CliError::Validation("use the band-edge pipeline for band-edge models".into())),
    };
    let ends = path_files(&mut out, &reps, stride);
    out.files.insert(0, ("endpoints.csv".into(), endpoints_csv(&ends)));
    out.line("t_final", t_final);
    out.line("dt", dt);
    out.line("replicas_ok", ok(&ends).count());
    endpoint_means(&mut out, &ends);
    out.record(&reps);
    Ok(out)
}

/// Concatenated point CSV (one header) and pooled gap summary.
fn spectrum_output(out: &mut PipelineOutput, reps: &[Replica<PointProcess>], window: (f64, f64)) {
    let mut csv = String::from("point,window_lo,window_hi,normalization,seed\n");
    let mut gaps = vec![];
    let mut total = 0;
    let mut raw_gaps = vec![];
    let mut warnings = 0;
    for (_, pp) in ok(reps) {
        for line in pp.to_csv().lines().skip(1) {
            csv.push_str(line);
            csv.push('\n');
        }
        total += pp.len();
        warnings += pp.warnings.len();
        if let Ok(g) = gap_statistics(pp) {
            raw_gaps.push(g.counts.mean_gap * g.gaps.len() as f64);
            gaps.extend(g.gaps);
        }
    }
    out.files.push(("points.csv".into(), csv));
    let n_ok = ok(reps).count().max(1);
    let counts = WindowCounts { n_points: total, window, mean_gap: raw_gaps.iter().sum::<f64>() / gaps.len().max(1) as f64, density: total as f64 / n_ok as f64 / (window.1 - window.0) };
    let stats = GapStatistics::from_gaps(gaps, counts);
    out.line("points", total);
    out.line("density", stats.counts.density);
    out.line("warnings", warnings);
    if !stats.gaps.is_empty() {
        out.summary.push_str(&stats.summary());
        out.files.push(("gaps_ecdf.csv".into(), ecdf_csv(&stats.gaps)));
    }
}

fn strip_spectrum(cfg: &ExperimentConfig, strip: &StripModel) -> Result<PipelineOutput, CliError> {
    let n = cfg.require_n()? as usize;
    let lambda = cfg.lambda.unwrap_or(cfg.sigma_or(1.0) / (n as f64).sqrt());
    let half = cfg.window.unwrap_or(20.0);
    let dense = n * strip.d <= DENSE_CAP;
    let reps = fan_out(cfg, |seed| {
        if dense {
            strip_eigenvalues(strip, lambda, n, half, seed, DENSE_CAP)
        } else {
            strip_eigenvalues_sturm(strip, lambda, n, (-half, half), seed, 1e-8)
        }
    })?;
    let mut out = PipelineOutput::default();
    out.line("lambda", lambda);
    out.line("normalization", n);
    out.line("solver", if dense { "dense" } else { "sturm" });
    spectrum_output(&mut out, &reps, (-half, half));
    out.record(&reps);
    Ok(out)
}

fn sde_spectrum(cfg: &ExperimentConfig, strip: &StripModel, goe: bool) -> Result<PipelineOutput, CliError> {
    let ch = channels(strip, goe)?;
    let sigma = cfg.sigma_or(1.0);
    let gen = channel_generator(&ch, goe, sigma)?;
    let z_star: Vec<C64> = match cfg.n {
        Some(n) => ch.z_list.iter().map(|z| z.powu(n as u32 + 1)).collect(),
        None => vec![c(1.0, 0.0); ch.d_e],
    };
    let grid = cfg.eps_values()?;
    let dt = cfg.dt.unwrap_or(1e-3);
    let reps = fan_out(cfg, |seed| sde_eigenvalue_process(&gen, &z_star, &grid, dt, seed))?;
    let mut out = PipelineOutput::default();
    out.line("sigma", sigma);
    out.line("d_e", ch.d_e);
    out.line("dt", dt);
    spectrum_output(&mut out, &reps, (grid[0], grid[grid.len() - 1]));
    out.record(&reps);
    Ok(out)
}

fn goe_compare(cfg: &ExperimentConfig, strip: &StripModel) -> Result<PipelineOutput, CliError> {
    let s = cfg.strip_section()?;
    let n = cfg.require_n()? as usize;
    let sigma = cfg.sigma_or(0.3);
    let d_e = strip.d - if s.hyperbolic_pair { 2 } else { 0 };
    let rs = ResonantStrip::new(d_e, n, strip.e, s.hyperbolic_pair)?;
    let reps = fan_out(cfg, |seed| rs.cluster(sigma, seed))?;
    let mut clusters = vec![];
    let mut short = 0;
    let mut csv = String::from("replica,seed");
    for k in 0..d_e {
        let _ = write!(csv, ",p{k}");
    }
    csv.push('\n');
    for (r, pts) in ok(&reps) {
        let cells: Vec<String> = pts.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(csv, "{},{},{}", r.index, r.seed, cells.join(","));
        if pts.len() == d_e {
            clusters.push(pts.clone());
        } else {
            short += 1;
        }
    }
    let strip_gaps = pooled_central_gaps(&clusters);
    let reference = goe_reference_gaps(d_e, strip.d, cfg.reference_samples.unwrap_or(100_000), cfg.seed)?;
    let mut out = PipelineOutput::default();
    out.files.push(("clusters.csv".into(), csv));
    out.files.push(("strip_ecdf.csv".into(), ecdf_csv(&strip_gaps)));
    out.files.push(("reference_ecdf.csv".into(), ecdf_csv(&reference)));
    let idx: Vec<String> = rs.indices.iter().map(|m| m.to_string()).collect();
    out.line("d", strip.d);
    out.line("d_h", rs.channels.d_h);
    out.line("d_e", d_e);
    out.line("resonant_indices", idx.join(" "));
    out.line("q", rs.q());
    out.line("center", sigma * sigma * rs.q());
    out.line("normalization", format!("n / sigma = {}", n as f64 / sigma));
    out.line("short_clusters", short);
    out.line("reference_gaps", reference.len());
    if !strip_gaps.is_empty() {
        let counts = WindowCounts { n_points: clusters.len() * d_e, window: (f64::NAN, f64::NAN), mean_gap: 1.0, density: f64::NAN };
        out.summary.push_str(&GapStatistics::from_gaps(strip_gaps, counts).with_reference(&reference).summary());
    }
    out.record(&reps);
    Ok(out)
}

/// Generic starting flag: a Gaussian matrix drawn from the replica seed.
pub fn generic_flag(d: usize, seed: u64) -> CMat {
    let mut r = counter_rng(seed, tag::MISC, 0);
    CMat::from_fn(d, d, |_, _| c(normal(&mut r), normal(&mut r)))
}

fn flag(cfg: &ExperimentConfig, spectrum: &BlockSpectrum, noise: &NoiseModel) -> Result<PipelineOutput, CliError> {
    let n = cfg.require_n()?;
    let lambda = cfg.lambda.unwrap_or(0.01);
    let fs = FlagSpectrum::from_block(spectrum)?;
    let reps = fan_out(cfg, |seed| {
        let st = propagate_flag(&fs, noise, lambda, &generic_flag(fs.d, seed), n, seed)?;
        stable_flag_angles(&st.f, &fs.groups)
    })?;
    let mut out = PipelineOutput::default();
    let mut csv = String::from("replica,seed");
    let bounds = fs.groups.len().saturating_sub(1);
    for k in 0..bounds {
        let _ = write!(csv, ",angle_{k}");
    }
    csv.push('\n');
    let mut worst: f64 = 0.0;
    for (r, a) in ok(&reps) {
        let cells: Vec<String> = a.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(csv, "{},{},{}", r.index, r.seed, cells.join(","));
        worst = a.iter().copied().fold(worst, f64::max);
    }
    out.files.push(("angles.csv".into(), csv));
    out.line("lambda", lambda);
    out.line("steps", n);
    out.line("groups", format!("{:?}", fs.groups));
    out.line("max_angle", worst);
    out.record(&reps);
    Ok(out)
}

fn band_edge(cfg: &ExperimentConfig, be: &stripsde_models::BandEdgeModel) -> Result<PipelineOutput, CliError> {
    let eps = cfg.eps.unwrap_or(1.0);
    let t_final = cfg.t_final.unwrap_or(1.0);
    let dt = cfg.dt.unwrap_or(1e-3);
    let sigma = cfg.sigma_or(0.0);
    let stride = cfg.stride.unwrap_or(0);
    let mut x0 = vec![c(0.0, 0.0); 2 * be.d];
    x0[0] = c(1.0, 0.0);
    let reps = fan_out(cfg, |seed| band_edge_sde(be, eps, t_final, dt, seed, &x0, sigma, 0.0, stride))?;
    let mut out = PipelineOutput::default();
    let ends = path_files(&mut out, &reps, stride);
    out.files.insert(0, ("endpoints.csv".into(), endpoints_csv(&ends)));
    out.line("d", be.d);
    out.line("alpha", format!("{}/{}", be.alpha.0, be.alpha.1));
    out.line("eps", eps);
    out.line("sigma", sigma);
    out.line("replicas_ok", ok(&ends).count());
    endpoint_means(&mut out, &ends);
    if be.d == 1 && sigma == 0.0 && eps > 0.0 {
        if let Some((_, x)) = ok(&ends).next() {
            let k = eps.sqrt();
            let dev = (x[(0, 0)].re - (k * t_final).cosh()).abs().max((x[(1, 0)].re - k * (k * t_final).sinh()).abs());
            out.line("closed_form_deviation", dev);
        }
    }
    out.record(&reps);
    Ok(out)
}
