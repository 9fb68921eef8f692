//! Band-limited power spectra on the lattice `Z^n`.
//!
//! A [`Spectrum`] holds nonnegative coefficients `C_k = E|a_k|^2` on a
//! centered cutoff box, with the symmetry `C_k = C_{-k}` demanded of the
//! Fourier coefficients of a real isotropic Gaussian field. Two decay
//! families are built in, algebraic `scale * |k|^-alpha` and exponential
//! `h(|k|) * exp(-theta * |k|_1)`, both with `C_0 = 0`; explicit tables may
//! carry any nonnegative symmetric values including `C_0 > 0`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dft::kahan_sum;
use crate::error::{Error, Result};
use crate::lattice::{format_point, LatticeBox};

/// Decay family of a power spectrum.
///
/// `poly` lists the coefficients of `h` lowest power first: `poly[i]`
/// multiplies `l^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SpectrumModel {
    Algebraic { alpha: f64, scale: f64 },
    Exponential { theta: f64, poly: Vec<f64> },
    Table { values: Vec<f64> },
}

impl SpectrumModel {
    pub fn algebraic(alpha: f64, scale: f64) -> Self {
        SpectrumModel::Algebraic { alpha, scale }
    }

    pub fn exponential(theta: f64, poly: Vec<f64>) -> Self {
        SpectrumModel::Exponential { theta, poly }
    }

    /// Exponential decay with constant `h = c`.
    pub fn exponential_flat(theta: f64, c: f64) -> Self {
        SpectrumModel::Exponential {
            theta,
            poly: vec![c],
        }
    }

    pub fn table(values: Vec<f64>) -> Self {
        SpectrumModel::Table { values }
    }

    fn check_parameters(&self, cutoff: i64) -> Result<()> {
        match self {
            SpectrumModel::Algebraic { alpha, scale } => {
                if !(*alpha > 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "alpha",
                        reason: format!("need alpha > 1 for a summable spectrum, got {alpha}"),
                    });
                }
                if !(*scale > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "scale",
                        reason: format!("need scale > 0, got {scale}"),
                    });
                }
            }
            SpectrumModel::Exponential { theta, poly } => {
                if !(*theta > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "theta",
                        reason: format!("need theta > 0, got {theta}"),
                    });
                }
                if poly.is_empty() {
                    return Err(Error::InvalidParameter {
                        name: "poly",
                        reason: "h needs at least one coefficient".into(),
                    });
                }
                for l in 1..=cutoff {
                    let h = eval_poly(poly, l as f64);
                    if !(h > 0.0) {
                        return Err(Error::InvalidParameter {
                            name: "poly",
                            reason: format!("h({l}) = {h} is not positive"),
                        });
                    }
                }
            }
            SpectrumModel::Table { .. } => {}
        }
        Ok(())
    }

    /// Model value at a single lattice point. Table models index their stored
    /// array, so they need the box for addressing.
    fn value_at(&self, boxed: &LatticeBox, point: &[i64]) -> f64 {
        match self {
            SpectrumModel::Algebraic { alpha, scale } => {
                if point.iter().all(|&c| c == 0) {
                    0.0
                } else {
                    scale * euclidean_norm(point).powf(-alpha)
                }
            }
            SpectrumModel::Exponential { theta, poly } => {
                if point.iter().all(|&c| c == 0) {
                    0.0
                } else {
                    let l1: f64 = point.iter().map(|&c| c.abs() as f64).sum();
                    eval_poly(poly, euclidean_norm(point)) * (-theta * l1).exp()
                }
            }
            SpectrumModel::Table { values } => {
                boxed.flat_index(point).map_or(0.0, |idx| values[idx])
            }
        }
    }
}

fn euclidean_norm(point: &[i64]) -> f64 {
    point
        .iter()
        .map(|&c| (c as f64) * (c as f64))
        .sum::<f64>()
        .sqrt()
}

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// An invariant violation found by [`Spectrum::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Negative {
        index: Vec<i64>,
        value: f64,
    },
    Asymmetric {
        index: Vec<i64>,
        value: f64,
        mirrored: f64,
    },
    NotFinite {
        index: Vec<i64>,
        value: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Negative { index, value } => {
                write!(f, "C at {} is negative ({value})", format_point(index))
            }
            Violation::Asymmetric {
                index,
                value,
                mirrored,
            } => write!(
                f,
                "C at {} is {value} but {mirrored} at the mirrored point",
                format_point(index)
            ),
            Violation::NotFinite { index, value } => {
                write!(f, "C at {} is not finite ({value})", format_point(index))
            }
        }
    }
}

/// Nonnegative symmetric power spectrum on a cutoff box.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    boxed: LatticeBox,
    values: Vec<f64>,
    model: SpectrumModel,
}

/// On-disk JSON form: `{"dim": n, "cutoff": K, "model": {...}}`. Table models
/// store the flat row-major array over the centered box, slowest axis first,
/// index `-K` first.
#[derive(Serialize, Deserialize)]
struct SpectrumFile {
    dim: usize,
    cutoff: i64,
    model: SpectrumModel,
}

impl Spectrum {
    /// Materialize a model on a box. Model parameters are validated up front
    /// and the result satisfies every spectrum invariant.
    pub fn build(model: SpectrumModel, boxed: LatticeBox) -> Result<Self> {
        model.check_parameters(boxed.cutoff())?;
        if let SpectrumModel::Table { values } = &model {
            if values.len() != boxed.len() {
                return Err(Error::InvalidParameter {
                    name: "values",
                    reason: format!(
                        "table has {} entries, box wants {}",
                        values.len(),
                        boxed.len()
                    ),
                });
            }
        }
        let mut values = vec![0.0; boxed.len()];
        let mut point = vec![0i64; boxed.dim()];
        for (idx, slot) in values.iter_mut().enumerate() {
            boxed.fill_point(idx, &mut point);
            *slot = model.value_at(&boxed, &point);
        }
        let spectrum = Self {
            boxed,
            values,
            model,
        };
        let violations = spectrum.validate();
        if let Some(first) = violations.first() {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("{} violation(s), first: {first}", violations.len()),
            });
        }
        Ok(spectrum)
    }

    /// Wrap an explicit table without going through a named model.
    pub fn from_table(values: Vec<f64>, boxed: LatticeBox) -> Result<Self> {
        Self::build(SpectrumModel::Table { values }, boxed)
    }

    pub fn lattice_box(&self) -> LatticeBox {
        self.boxed
    }

    pub fn dim(&self) -> usize {
        self.boxed.dim()
    }

    pub fn cutoff(&self) -> i64 {
        self.boxed.cutoff()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn model(&self) -> &SpectrumModel {
        &self.model
    }

    /// `C_k`, zero outside the box.
    pub fn value_at(&self, point: &[i64]) -> f64 {
        self.boxed
            .flat_index(point)
            .map_or(0.0, |idx| self.values[idx])
    }

    /// Total mass `sum_k C_k`, compensated summation.
    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.values.iter().copied())
    }

    /// Same model scaled by `factor > 0`; values scale linearly in every family.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidParameter {
                name: "factor",
                reason: format!("need factor > 0, got {factor}"),
            });
        }
        let model = match &self.model {
            SpectrumModel::Algebraic { alpha, scale } => SpectrumModel::Algebraic {
                alpha: *alpha,
                scale: scale * factor,
            },
            SpectrumModel::Exponential { theta, poly } => SpectrumModel::Exponential {
                theta: *theta,
                poly: poly.iter().map(|c| c * factor).collect(),
            },
            SpectrumModel::Table { values } => SpectrumModel::Table {
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        Self::build(model, self.boxed)
    }

    /// Rescale so the total mass is 1, i.e. the synthesized Gaussian field has
    /// unit variance. The Hermite variance identities assume this.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.total_mass();
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter {
                name: "spectrum",
                reason: "total mass is zero, cannot normalize".into(),
            });
        }
        self.scaled(1.0 / mass)
    }

    /// Scan the whole box and report every invariant violation. Validation
    /// never fails; an empty list means all invariants hold.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (idx, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NotFinite {
                    index: self.boxed.point_at(idx),
                    value: v,
                });
                continue;
            }
            if v < 0.0 {
                violations.push(Violation::Negative {
                    index: self.boxed.point_at(idx),
                    value: v,
                });
            }
            let mir = self.boxed.mirror(idx);
            // Report each asymmetric pair once, at its first index.
            if idx < mir && self.values[mir] != v {
                violations.push(Violation::Asymmetric {
                    index: self.boxed.point_at(idx),
                    value: v,
                    mirrored: self.values[mir],
                });
            }
        }
        violations
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = SpectrumFile {
            dim: self.boxed.dim(),
            cutoff: self.boxed.cutoff(),
            model: self.model.clone(),
        };
        let text = serde_json::to_string_pretty(&file)?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let file: SpectrumFile = serde_json::from_str(&text).map_err(|e| Error::File {
            path: path.to_path_buf(),
            reason: format!("schema mismatch: {e}"),
        })?;
        let boxed = LatticeBox::new(file.dim, file.cutoff)?;
        Self::build(file.model, boxed).map_err(|e| Error::File {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}
