//! Convolution powers of a power spectrum.
//!
//! The order-`m` coefficient is the m-fold additive convolution
//! `Chat_{k,m} = sum_{s_1 + ... + s_m = k} C_{s_1} ... C_{s_m}`
//! over the dual lattice, which satisfies the splitting recursion
//! `Chat_{k,m} = sum_j Chat_{j,q} Chat_{k-j,m-q}` for every `1 <= q < m`.
//! Supports grow explicitly: order `m` over base cutoff `K` lives on the
//! `{-mK,...,mK}^n` box, never silently truncated.
//!
//! Two evaluation paths are provided and kept permanently: a direct-sum path
//! that serves as the oracle (exactly symmetric output, per-entry relative
//! accuracy), and an FFT path for large boxes (accurate relative to the array
//! scale). `ConvPath::Auto` switches to the FFT once the output box exceeds
//! [`AUTO_FFT_THRESHOLD`] points.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dft::{kahan_sum, ndfft, next_fast_len};
use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, MAX_DENSE_POINTS};
use crate::spectrum::Spectrum;

/// Output-box size above which `ConvPath::Auto` selects the FFT path.
pub const AUTO_FFT_THRESHOLD: usize = 10_000;

/// Largest supported convolution order.
pub const MAX_ORDER: u32 = 32;

/// Floor used when normalizing residuals, so exact zeros divide cleanly.
pub(crate) const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvPath {
    #[default]
    Auto,
    Direct,
    Fft,
}

/// The m-fold convolution power of a spectrum on its enlarged box.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolvedSpectrum {
    order: u32,
    base_cutoff: i64,
    boxed: LatticeBox,
    values: Vec<f64>,
}

impl ConvolvedSpectrum {
    /// Order 1 is the spectrum itself.
    pub fn from_spectrum(s: &Spectrum) -> Self {
        Self {
            order: 1,
            base_cutoff: s.cutoff(),
            boxed: s.lattice_box(),
            values: s.values().to_vec(),
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn base_cutoff(&self) -> i64 {
        self.base_cutoff
    }

    pub fn lattice_box(&self) -> LatticeBox {
        self.boxed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Chat_{k,m}`, zero outside the support box.
    pub fn value_at(&self, point: &[i64]) -> f64 {
        self.boxed
            .flat_index(point)
            .map_or(0.0, |idx| self.values[idx])
    }

    /// `sum_k Chat_{k,m}`; equals `(sum_k C_k)^m` up to round-off.
    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.values.iter().copied())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let dump = ConvolvedDump {
            dim: self.boxed.dim(),
            base_cutoff: self.base_cutoff,
            order: self.order,
            values: self.values.clone(),
        };
        fs::write(path, serde_json::to_string(&dump)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let dump: ConvolvedDump = serde_json::from_str(&fs::read_to_string(path)?)?;
        let boxed = LatticeBox::new(dump.dim, dump.base_cutoff * dump.order as i64)?;
        if dump.values.len() != boxed.len() {
            return Err(Error::File {
                path: path.to_path_buf(),
                reason: format!(
                    "value array has {} entries, box wants {}",
                    dump.values.len(),
                    boxed.len()
                ),
            });
        }
        Ok(Self {
            order: dump.order,
            base_cutoff: dump.base_cutoff,
            boxed,
            values: dump.values,
        })
    }
}

/// Cache format: header (dim, base cutoff, order) plus the flat value array
/// in the documented row-major order.
#[derive(Serialize, Deserialize)]
struct ConvolvedDump {
    dim: usize,
    base_cutoff: i64,
    order: u32,
    values: Vec<f64>,
}

/// Visit every term of `sum_j a[j] * b[k - j]` in ascending row-major order
/// of `j` over `a`'s box. The callback receives `j`'s flat index in `a`'s
/// box and the product term.
pub(crate) fn for_each_pair_term(
    a_box: &LatticeBox,
    a: &[f64],
    b_box: &LatticeBox,
    b: &[f64],
    k: &[i64],
    mut visit: impl FnMut(usize, f64),
) {
    let dim = a_box.dim();
    debug_assert_eq!(dim, b_box.dim());
    debug_assert_eq!(dim, k.len());
    let ka = a_box.cutoff();
    let kb = b_box.cutoff();

    // Per-axis ranges of j with both factors in support.
    let mut lo = vec![0i64; dim];
    let mut count = vec![0usize; dim];
    for axis in 0..dim {
        let l = (-ka).max(k[axis] - kb);
        let h = ka.min(k[axis] + kb);
        if l > h {
            return;
        }
        lo[axis] = l;
        count[axis] = (h - l + 1) as usize;
    }

    // Row-major strides of the two boxes.
    let mut sa = vec![0usize; dim];
    let mut sb = vec![0usize; dim];
    let (mut stride_a, mut stride_b) = (1usize, 1usize);
    for axis in (0..dim).rev() {
        sa[axis] = stride_a;
        sb[axis] = stride_b;
        stride_a *= a_box.side();
        stride_b *= b_box.side();
    }

    // Flat positions of the range corner in both boxes.
    let mut ja = 0usize;
    let mut jb = 0usize;
    for axis in 0..dim {
        ja += (lo[axis] + ka) as usize * sa[axis];
        jb += (k[axis] - lo[axis] + kb) as usize * sb[axis];
    }

    // Odometer over the rectangle; incrementing axis `i` moves ja forward by
    // sa[i] and jb backward by sb[i].
    let mut digit = vec![0usize; dim];
    loop {
        visit(ja, a[ja] * b[jb]);
        let mut axis = dim;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            digit[axis] += 1;
            if digit[axis] < count[axis] {
                ja += sa[axis];
                jb -= sb[axis];
                break;
            }
            let back = digit[axis] - 1;
            digit[axis] = 0;
            ja -= back * sa[axis];
            jb += back * sb[axis];
        }
    }
}

/// `sum_j a[j] * b[k - j]` in ascending row-major order of `j`.
pub(crate) fn pair_sum(a: &ConvolvedSpectrum, b: &ConvolvedSpectrum, k: &[i64]) -> f64 {
    let mut acc = 0.0;
    for_each_pair_term(&a.boxed, &a.values, &b.boxed, &b.values, k, |_, term| {
        acc += term
    });
    acc
}

fn direct_convolve(
    a_box: &LatticeBox,
    a: &[f64],
    b_box: &LatticeBox,
    b: &[f64],
) -> Result<(LatticeBox, Vec<f64>)> {
    let out_box = LatticeBox::new(a_box.dim(), a_box.cutoff() + b_box.cutoff())?;
    let center = out_box.center();
    // Symmetric inputs make the result symmetric; computing one half and
    // mirroring keeps that exact in floating point.
    let half: Vec<f64> = (0..=center)
        .into_par_iter()
        .map(|idx| {
            let mut k = vec![0i64; out_box.dim()];
            out_box.fill_point(idx, &mut k);
            let mut acc = 0.0;
            for_each_pair_term(a_box, a, b_box, b, &k, |_, term| acc += term);
            acc
        })
        .collect();
    let mut values = vec![0.0; out_box.len()];
    for (idx, v) in half.into_iter().enumerate() {
        values[out_box.mirror(idx)] = v;
        values[idx] = v;
    }
    Ok((out_box, values))
}

fn fft_convolve(
    a_box: &LatticeBox,
    a: &[f64],
    b_box: &LatticeBox,
    b: &[f64],
) -> Result<(LatticeBox, Vec<f64>)> {
    let dim = a_box.dim();
    let out_box = LatticeBox::new(dim, a_box.cutoff() + b_box.cutoff())?;
    let out_side = out_box.side();
    debug_assert_eq!(out_side, a_box.side() + b_box.side() - 1);

    // Zero-pad to an efficient length; linear convolution fits, so the
    // cyclic product wraps nothing.
    let padded = next_fast_len(out_side);
    let total = (padded as u128).pow(dim as u32);
    if total > MAX_DENSE_POINTS {
        return Err(Error::BudgetExceeded {
            what: "fft scratch",
            needed: total,
            limit: MAX_DENSE_POINTS,
        });
    }
    let total = total as usize;
    let shape = vec![padded; dim];

    let embed = |src_box: &LatticeBox, src: &[f64]| -> Vec<Complex64> {
        let side = src_box.side();
        let mut out = vec![Complex64::default(); total];
        let mut digits = vec![0usize; dim];
        for (idx, &v) in src.iter().enumerate() {
            let mut rest = idx;
            for d in digits.iter_mut().rev() {
                *d = rest % side;
                rest /= side;
            }
            let mut flat = 0usize;
            for &d in &digits {
                flat = flat * padded + d;
            }
            out[flat] = Complex64::new(v, 0.0);
        }
        out
    };

    let mut fa = embed(a_box, a);
    let mut fb = embed(b_box, b);
    ndfft(&mut fa, &shape, false);
    ndfft(&mut fb, &shape, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    ndfft(&mut fa, &shape, true);
    let scale = 1.0 / total as f64;

    let mut values = vec![0.0; out_box.len()];
    let mut digits = vec![0usize; dim];
    for (idx, slot) in values.iter_mut().enumerate() {
        let mut rest = idx;
        for d in digits.iter_mut().rev() {
            *d = rest % out_side;
            rest /= out_side;
        }
        let mut flat = 0usize;
        for &d in &digits {
            flat = flat * padded + d;
        }
        // Round-off can leave tiny negatives; the exact result is nonnegative.
        *slot = (fa[flat].re * scale).max(0.0);
    }
    Ok((out_box, values))
}

/// Convolve two powers of the same base spectrum: the splitting identity
/// `result[k] = sum_j a[j] * b[k - j]`, giving order `a.order + b.order`.
pub fn convolve_pair(
    a: &ConvolvedSpectrum,
    b: &ConvolvedSpectrum,
    path: ConvPath,
) -> Result<ConvolvedSpectrum> {
    if a.boxed.dim() != b.boxed.dim() {
        return Err(Error::DimensionMismatch {
            left: a.boxed.dim(),
            right: b.boxed.dim(),
        });
    }
    if a.base_cutoff != b.base_cutoff {
        return Err(Error::InvalidParameter {
            name: "base_cutoff",
            reason: format!(
                "inputs derive from different base spectra ({} vs {})",
                a.base_cutoff, b.base_cutoff
            ),
        });
    }
    let order = a.order + b.order;
    if order > MAX_ORDER {
        return Err(Error::OrderOutOfRange {
            order,
            max: MAX_ORDER,
        });
    }
    let out_points =
        (a.boxed.side() as u128 + b.boxed.side() as u128 - 1).pow(a.boxed.dim() as u32);
    let use_fft = match path {
        ConvPath::Direct => false,
        ConvPath::Fft => true,
        ConvPath::Auto => out_points > AUTO_FFT_THRESHOLD as u128,
    };
    let (boxed, values) = if use_fft {
        fft_convolve(&a.boxed, &a.values, &b.boxed, &b.values)?
    } else {
        direct_convolve(&a.boxed, &a.values, &b.boxed, &b.values)?
    };
    Ok(ConvolvedSpectrum {
        order,
        base_cutoff: a.base_cutoff,
        boxed,
        values,
    })
}

/// All convolution powers `Chat_{.,1}, ..., Chat_{.,m}` of a spectrum,
/// built by iterated pairing with the base.
pub fn convolve_power(s: &Spectrum, m: u32, path: ConvPath) -> Result<Vec<ConvolvedSpectrum>> {
    if !(1..=MAX_ORDER).contains(&m) {
        return Err(Error::OrderOutOfRange {
            order: m,
            max: MAX_ORDER,
        });
    }
    // Fail on the final box before doing any work.
    LatticeBox::new(s.dim(), s.cutoff() * m as i64)?;
    let mut powers = vec![ConvolvedSpectrum::from_spectrum(s)];
    for _ in 2..=m {
        let next = convolve_pair(powers.last().unwrap(), &powers[0], path)?;
        powers.push(next);
    }
    Ok(powers)
}

/// Residual of the splitting recursion at one frequency:
/// `|Chat_{k,m} - sum_j Chat_{j,q} Chat_{k-j,m-q}| / max(Chat_{k,m}, tiny)`.
///
/// For powers produced by [`convolve_power`] on the direct path this stays
/// below 1e-10 at every point; on the FFT path the guarantee holds wherever
/// the coefficient is not dominated by round-off at the array scale.
pub fn verify_recursion(powers: &[ConvolvedSpectrum], m: u32, k: &[i64], q: u32) -> Result<f64> {
    if m < 2 || q < 1 || q >= m {
        return Err(Error::StepOutOfRange {
            q,
            max: m.saturating_sub(1),
        });
    }
    // The list must be indexed by order, as produced by convolve_power.
    let fetch = |order: u32| {
        powers
            .get(order as usize - 1)
            .filter(|p| p.order() == order)
            .ok_or(Error::MissingOrder {
                requested: order,
                available: powers.len() as u32,
            })
    };
    let lhs = fetch(m)?.value_at(k);
    let rhs = pair_sum(fetch(q)?, fetch(m - q)?, k);
    Ok((lhs - rhs).abs() / lhs.max(TINY))
}
