use crate::config::{channels, ExperimentConfig, Model};
use crate::CliError;
use std::fmt::Write;
use stripsde_core::linalg::op_norm;
use stripsde_models::ChannelKind;

/// Text report of the resolved model. Validation errors of the configuration
/// itself are returned; model-level failures (a parabolic channel, say) become
/// an `error:` line and are returned alongside the partial report.
pub fn describe(cfg: &ExperimentConfig) -> Result<(String, Option<CliError>), CliError> {
    let mut out = String::new();
    let _ = writeln!(out, "pipeline: {}", cfg.pipeline.name());
    let model = match cfg.build_model() {
        Ok(m) => m,
        Err(e @ CliError::Model(_)) => {
            let _ = writeln!(out, "error: {e}");
            return Ok((out, Some(e)));
        }
        Err(e) => return Err(e),
    };
    let failure = match &model {
        Model::Block { spectrum, noise } => {
            let (r0, r2) = spectrum.spectral_radii();
            let _ = writeln!(out, "model: block d0 = {} d1 = {} d2 = {}", spectrum.d0, spectrum.d1, spectrum.d2);
            let _ = writeln!(out, "spectral radius gamma0: {r0:.6}");
            let _ = writeln!(out, "spectral radius gamma2: {r2:.6}");
            if spectrum.d0 > 0 {
                let _ = writeln!(out, "norm gamma0: {:.6}", op_norm(&spectrum.gamma0));
            }
            if spectrum.d2 > 0 {
                let _ = writeln!(out, "norm gamma2: {:.6}", op_norm(&spectrum.gamma2));
            }
            let _ = writeln!(out, "gamma: {:.6}", spectrum.gamma);
            let _ = writeln!(out, "noise: {:?} {} clip {:?}", noise.sampler, noise.dist.name(), noise.clip_bound);
            None
        }
        Model::Strip { strip, goe } => {
            let _ = writeln!(out, "model: {} strip d = {} r = {} E = {} potential = {}", if *goe { "goe" } else { "anderson" }, strip.d, strip.r, strip.e, strip.potential.name());
            match channels(strip, *goe) {
                Ok(ch) => {
                    let _ = writeln!(out, "channels: d_h = {} d_e = {}", ch.d_h, ch.d_e);
                    let _ = writeln!(out, "{:>3}  {:>12}  {:>10}  {}", "j", "a_j", "type", "root");
                    let (mut ih, mut ie) = (0, 0);
                    for (j, (a, k)) in ch.a.iter().zip(&ch.kinds).enumerate() {
                        let root = match k {
                            ChannelKind::Hyperbolic => {
                                ih += 1;
                                format!("gamma = {:.6}", ch.gamma_list[ih - 1])
                            }
                            ChannelKind::Elliptic => {
                                ie += 1;
                                let z = ch.z_list[ie - 1];
                                format!("z = {:.6} + {:.6}i (phase {:.6})", z.re, z.im, z.arg())
                            }
                        };
                        let _ = writeln!(out, "{:>3}  {:>12.6}  {:>10}  {root}", j + 1, a, ch.kind_name(j));
                    }
                    match ch.q {
                        Some(q) => {
                            let _ = writeln!(out, "q: {q:.12}");
                        }
                        None => {
                            let _ = writeln!(out, "q: none (drift is not a multiple of the identity)");
                        }
                    }
                    let v = &ch.chaos;
                    match v.witness {
                        None => {
                            let _ = writeln!(out, "chaotic: {} (tol {:e})", v.chaotic, v.tol);
                        }
                        Some((idx, rel)) => {
                            let _ = writeln!(out, "chaotic: {} (tol {:e}, witness {:?} {:?})", v.chaotic, v.tol, idx.map(|i| i + 1), rel);
                        }
                    }
                    None
                }
                Err(e) => {
                    let _ = writeln!(out, "error: {e}");
                    Some(e)
                }
            }
        }
        Model::BandEdge(be) => {
            let _ = writeln!(out, "model: band edge of order d = {}", be.d);
            let _ = writeln!(out, "alpha: {}/{}", be.alpha.0, be.alpha.1);
            for (name, m) in [("T", &be.t), ("M", &be.m), ("Minv", &be.minv), ("Minv S M", &be.msm)] {
                let _ = writeln!(out, "{name}:");
                for row in m.to_f64() {
                    let cells: Vec<String> = row.iter().map(|x| format!("{x:>5}")).collect();
                    let _ = writeln!(out, "  {}", cells.join(" "));
                }
            }
            let _ = writeln!(out, "closed-form inverse: {:?}", be.closed_form);
            None
        }
    };
    Ok((out, failure))
}
