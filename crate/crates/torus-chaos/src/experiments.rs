//! Experiment runners: spectral-decay case studies and Monte Carlo
//! validation tables, with reproducibility manifests.
//!
//! Each runner writes its CSV table plus a `<output>.manifest.json` holding
//! the full configuration and version; rerunning from the manifest
//! reproduces the table byte for byte (analytic columns unconditionally, MC
//! columns through the fixed seed).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cltcheck::{clt_report, CltDiagnostic};
use crate::convolve::{convolve_power, ConvPath};
use crate::error::{Error, Result};
use crate::fieldsim::{mc_moments, McConfig, MomentReport, StatKind};
use crate::lattice::{format_point, LatticeBox};
use crate::spectrum::{Spectrum, SpectrumModel};

/// Full experiment description; serialized into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: SpectrumModel,
    pub dim: usize,
    pub cutoff: i64,
    pub orders: Vec<u32>,
    pub freqs: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    /// Rescale the spectrum to unit total mass before simulating, matching
    /// the unit-variance convention behind the order >= 3 variance identity.
    #[serde(default)]
    pub normalize: bool,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn build_spectrum(&self) -> Result<Spectrum> {
        let boxed = LatticeBox::new(self.dim, self.cutoff)?;
        let s = Spectrum::build(self.model.clone(), boxed)?;
        if self.normalize {
            s.normalized()
        } else {
            Ok(s)
        }
    }

    fn validate_freqs(&self) -> Result<()> {
        let max_order = *self.orders.iter().max().ok_or(Error::InvalidParameter {
            name: "orders",
            reason: "need at least one order".into(),
        })? as i64;
        let reach = max_order * self.cutoff;
        for freq in &self.freqs {
            if freq.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    left: freq.len(),
                    right: self.dim,
                });
            }
            if freq.iter().any(|&c| c.abs() > reach) {
                return Err(Error::InvalidParameter {
                    name: "freqs",
                    reason: format!(
                        "frequency {} outside the order-{max_order} support (|k| <= {reach})",
                        format_point(freq)
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Geometric 1-d ladder `start * 2^j`, the natural scale for high-frequency
/// asymptotics.
pub fn geometric_ladder(start: i64, count: usize) -> Vec<Vec<i64>> {
    (0..count).map(|j| vec![start << j]).collect()
}

/// Linear 1-d ladder `start + j * step`.
pub fn linear_ladder(start: i64, step: i64, count: usize) -> Vec<Vec<i64>> {
    (0..count).map(|j| vec![start + j as i64 * step]).collect()
}

/// Reproducibility record written next to every result table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn write_manifest(command: &str, config: &ExperimentConfig) -> Result<PathBuf> {
    let manifest = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
    };
    let path = manifest_path(&config.output);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::File {
        path: path.to_path_buf(),
        reason: format!("not a manifest: {e}"),
    })
}

/// CSV schema `freq,m,q,cond2_sum,cond3_ratio,variance`, one row per
/// achievable (freq, q); skipped frequencies carry no rows.
pub fn render_clt_csv(diagnostics: &[CltDiagnostic]) -> String {
    let mut out = String::from("freq,m,q,cond2_sum,cond3_ratio,variance\n");
    for diag in diagnostics {
        for row in &diag.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                format_point(&diag.freq),
                diag.order,
                row.q,
                row.cond2_sum,
                row.cond3_ratio,
                diag.variance
            );
        }
    }
    out
}

/// CSV schema `freq,order,stat,estimate,stderr,reps`.
pub fn render_moment_csv(report: &MomentReport) -> String {
    let mut out = String::from("freq,order,stat,estimate,stderr,reps\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            format_point(&row.freq),
            row.order,
            row.stat.label(),
            row.estimate,
            row.stderr,
            report.reps
        );
    }
    out
}

/// Result of a diagnostic experiment: the parsed table plus where it went.
#[derive(Debug)]
pub struct CltTable {
    pub diagnostics: Vec<CltDiagnostic>,
    pub csv: String,
    pub output: PathBuf,
    pub manifest: PathBuf,
}

fn run_clt_experiment(command: &str, config: &ExperimentConfig) -> Result<CltTable> {
    config.validate_freqs()?;
    let spectrum = config.build_spectrum()?;
    let max_order = *config.orders.iter().max().expect("validated");
    let powers = convolve_power(&spectrum, max_order, ConvPath::Auto)?;
    let mut diagnostics = Vec::new();
    for &m in &config.orders {
        diagnostics.extend(clt_report(&powers, &config.freqs, m)?);
    }
    let csv = render_clt_csv(&diagnostics);
    fs::write(&config.output, &csv)?;
    let manifest = write_manifest(command, config)?;
    Ok(CltTable {
        diagnostics,
        csv,
        output: config.output.clone(),
        manifest,
    })
}

/// Algebraic-decay case study: the sup/sum ratio stays bounded away from
/// zero along the frequency ladder, so the high-frequency CLT fails.
pub fn run_example1(config: &ExperimentConfig) -> Result<CltTable> {
    if !matches!(config.model, SpectrumModel::Algebraic { .. }) {
        return Err(Error::InvalidParameter {
            name: "model",
            reason: "this case study wants an algebraic spectrum".into(),
        });
    }
    run_clt_experiment("example1", config)
}

/// Exponential-decay case study: the ratio halves with each frequency
/// doubling and the CLT holds at every order.
pub fn run_example2(config: &ExperimentConfig) -> Result<CltTable> {
    if !matches!(config.model, SpectrumModel::Exponential { .. }) {
        return Err(Error::InvalidParameter {
            name: "model",
            reason: "this case study wants an exponential spectrum".into(),
        });
    }
    run_clt_experiment("example2", config)
}

/// One joined row of analytic diagnostics and MC fourth-moment estimates.
#[derive(Debug, Clone, Serialize)]
pub struct McValidationRow {
    pub freq: Vec<i64>,
    pub order: u32,
    /// `max_q` of the sup/sum ratio; `None` at order 1 (no splitting).
    pub cond3_max: Option<f64>,
    /// Analytic `m! Chat_{k,m}`.
    pub variance: f64,
    pub abs_sq: f64,
    pub abs_sq_stderr: f64,
    pub re4_norm: f64,
    pub re4_norm_stderr: f64,
    pub im4_norm: f64,
    pub im4_norm_stderr: f64,
}

#[derive(Debug)]
pub struct McValidationTable {
    pub rows: Vec<McValidationRow>,
    pub report: MomentReport,
    pub csv: String,
    pub output: PathBuf,
    pub manifest: PathBuf,
}

/// CSV schema
/// `freq,m,cond3_max,variance,abs_sq,abs_sq_stderr,re4_norm,re4_norm_stderr,im4_norm,im4_norm_stderr,reps`.
pub fn render_mc_validation_csv(rows: &[McValidationRow], reps: u64) -> String {
    let mut out = String::from(
        "freq,m,cond3_max,variance,abs_sq,abs_sq_stderr,re4_norm,re4_norm_stderr,im4_norm,im4_norm_stderr,reps\n",
    );
    for row in rows {
        let cond3 = row.cond3_max.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            format_point(&row.freq),
            row.order,
            cond3,
            row.variance,
            row.abs_sq,
            row.abs_sq_stderr,
            row.re4_norm,
            row.re4_norm_stderr,
            row.im4_norm,
            row.im4_norm_stderr,
            reps
        );
    }
    out
}

/// Join the analytic CLT diagnostics with Monte Carlo moment estimates so
/// the pass/fail verdicts can be compared side by side per frequency.
pub fn run_mc_validation(config: &ExperimentConfig) -> Result<McValidationTable> {
    config.validate_freqs()?;
    let mc = config.mc.clone().ok_or(Error::InvalidParameter {
        name: "mc",
        reason: "monte carlo parameters are required".into(),
    })?;
    let spectrum = config.build_spectrum()?;
    let max_order = *config.orders.iter().max().expect("validated");
    let powers = convolve_power(&spectrum, max_order, ConvPath::Auto)?;
    let report = mc_moments(&spectrum, &config.orders, None, &config.freqs, &mc)?;

    let mut rows = Vec::new();
    for &m in &config.orders {
        let diagnostics = clt_report(&powers, &config.freqs, m)?;
        for diag in diagnostics {
            if !diag.achievable() {
                continue;
            }
            let fetch = |kind: StatKind| {
                report
                    .find(&diag.freq, m, kind)
                    .map(|r| (r.estimate, r.stderr))
                    .unwrap_or((f64::NAN, f64::NAN))
            };
            let (abs_sq, abs_sq_stderr) = fetch(StatKind::AbsSq);
            let (re4_norm, re4_norm_stderr) = fetch(StatKind::Re4Norm);
            let (im4_norm, im4_norm_stderr) = fetch(StatKind::Im4Norm);
            rows.push(McValidationRow {
                freq: diag.freq.clone(),
                order: m,
                cond3_max: diag
                    .rows
                    .iter()
                    .map(|r| r.cond3_ratio)
                    .fold(None, |acc: Option<f64>, v| {
                        Some(acc.map_or(v, |a| a.max(v)))
                    }),
                variance: diag.variance,
                abs_sq,
                abs_sq_stderr,
                re4_norm,
                re4_norm_stderr,
                im4_norm,
                im4_norm_stderr,
            });
        }
    }
    let csv = render_mc_validation_csv(&rows, report.reps);
    fs::write(&config.output, &csv)?;
    let manifest = write_manifest("mc-validate", config)?;
    Ok(McValidationTable {
        rows,
        report,
        csv,
        output: config.output.clone(),
        manifest,
    })
}
