//! Monte Carlo synthesis of the isotropic Gaussian layer and moment
//! estimation for subordinated Fourier coefficients.
//!
//! A draw places independent complex Gaussians `a_k` on the spectrum box
//! (conjugate-mirrored so the field is real), the field is synthesized on a
//! periodic grid by inverse DFT, a transform is applied pointwise, and the
//! subordinated coefficients come back through a forward DFT. For polynomial
//! transforms of degree `d` and grids `G >= 2dK + 1` the DFT recovers the
//! Fourier integral exactly; otherwise the coefficients are flagged
//! approximate.
//!
//! Replications use counter-based streams (`seed`, replication index), and
//! aggregation runs over fixed batches in replication order, so reports are
//! bit-identical for a given seed regardless of thread count.
//!
//! The variance identity `E|a~_k(H_m)|^2 = m! Chat_{k,m}` assumes the
//! unit-variance field convention `sum_k C_k = 1` once `m >= 3`; see
//! [`Spectrum::normalized`]. The order-1 and order-2 identities hold for any
//! total mass.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convolve::{convolve_power, ConvPath, ConvolvedSpectrum};
use crate::dft::ndfft;
use crate::error::{Error, Result};
use crate::hermite::{factorial, Transform};
use crate::lattice::LatticeBox;
use crate::spectrum::Spectrum;

/// Budget guard on `reps * G^n`.
pub const MAX_MC_WORK: u128 = 1 << 40;

/// Replications per aggregation batch; fixed so scheduling cannot reorder sums.
const BATCH: u64 = 64;

/// Smallest efficient grid that resolves order-`max_order` transforms of a
/// band-`cutoff` field: the next fast FFT length at or above
/// `max_order * (2 * cutoff + 1)`.
pub fn default_grid(cutoff: i64, max_order: u32) -> usize {
    crate::dft::next_fast_len(max_order.max(1) as usize * (2 * cutoff as usize + 1))
}

/// One draw of the Gaussian coefficient layer over the spectrum box.
#[derive(Debug, Clone)]
pub struct CoefficientDraw {
    boxed: LatticeBox,
    values: Vec<Complex64>,
}

impl CoefficientDraw {
    /// Wrap explicit coefficients; the conjugate mirror symmetry
    /// `a_{-k} = conj(a_k)` must hold exactly.
    pub fn from_values(boxed: LatticeBox, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != boxed.len() {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("box wants {} entries, got {}", boxed.len(), values.len()),
            });
        }
        for idx in 0..values.len() {
            if values[idx] != values[boxed.mirror(idx)].conj() {
                return Err(Error::InvalidParameter {
                    name: "values",
                    reason: format!("conjugate symmetry broken at {:?}", boxed.point_at(idx)),
                });
            }
        }
        Ok(Self { boxed, values })
    }

    pub fn lattice_box(&self) -> LatticeBox {
        self.boxed
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value_at(&self, point: &[i64]) -> Complex64 {
        self.boxed
            .flat_index(point)
            .map_or(Complex64::default(), |idx| self.values[idx])
    }
}

/// Sample the coefficient layer: `a_0` real `N(0, C_0)`, and for each
/// lexicographically positive `k` independent real and imaginary parts
/// `N(0, C_k/2)`, mirrored by conjugation onto `-k`.
///
/// Exactly `1 + 2 * (len-1)/2` normals are consumed in a fixed order
/// (origin first, then the positive half ascending), so the stream layout
/// depends only on the box.
pub fn draw_coefficients(s: &Spectrum, rng: &mut impl Rng) -> CoefficientDraw {
    let boxed = s.lattice_box();
    let len = boxed.len();
    let center = boxed.center();
    let mut values = vec![Complex64::default(); len];

    let z: f64 = rng.sample(StandardNormal);
    values[center] = Complex64::new(z * s.values()[center].sqrt(), 0.0);

    for idx in center + 1..len {
        let sigma = (s.values()[idx] / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let a = Complex64::new(re * sigma, im * sigma);
        values[idx] = a;
        values[boxed.mirror(idx)] = a.conj();
    }
    CoefficientDraw { boxed, values }
}

/// Real field values on the periodic grid `{2 pi j / G}^n`.
#[derive(Debug, Clone)]
pub struct FieldSample {
    dim: usize,
    grid: usize,
    cutoff: i64,
    values: Vec<f64>,
    amplitude: f64,
    imag_residual: f64,
}

impl FieldSample {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute field value.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Largest imaginary part left over by the synthesis transform; bounded
    /// by round-off because the coefficients are conjugate-symmetric.
    pub fn imag_residual(&self) -> f64 {
        self.imag_residual
    }

    /// Mean of `T^2` over the grid.
    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }
}

/// Evaluate `T(theta_j) = sum_k a_k exp(i k . theta_j)` on the `G^n` grid by
/// inverse DFT. Requires `G >= 2K + 1` so no two box frequencies alias.
pub fn synthesize(draw: &CoefficientDraw, grid: usize) -> Result<FieldSample> {
    let boxed = draw.boxed;
    let required = 2 * boxed.cutoff() as usize + 1;
    if grid < required {
        return Err(Error::GridTooSmall {
            grid,
            required,
            cutoff: boxed.cutoff(),
        });
    }
    let dim = boxed.dim();
    let total = (grid as u128).pow(dim as u32);
    if total > crate::lattice::MAX_DENSE_POINTS {
        return Err(Error::BudgetExceeded {
            what: "synthesis grid",
            needed: total,
            limit: crate::lattice::MAX_DENSE_POINTS,
        });
    }
    let total = total as usize;

    let mut buf = vec![Complex64::default(); total];
    let mut point = vec![0i64; dim];
    for (idx, &a) in draw.values.iter().enumerate() {
        boxed.fill_point(idx, &mut point);
        let mut flat = 0usize;
        for &c in &point {
            let wrapped = c.rem_euclid(grid as i64) as usize;
            flat = flat * grid + wrapped;
        }
        buf[flat] = a;
    }
    let shape = vec![grid; dim];
    ndfft(&mut buf, &shape, true);

    let mut values = Vec::with_capacity(total);
    let mut amplitude = 0.0f64;
    let mut imag_residual = 0.0f64;
    for v in &buf {
        amplitude = amplitude.max(v.re.abs());
        imag_residual = imag_residual.max(v.im.abs());
        values.push(v.re);
    }
    Ok(FieldSample {
        dim,
        grid,
        cutoff: boxed.cutoff(),
        values,
        amplitude,
        imag_residual,
    })
}

/// Subordinated coefficients plus the exactness flag of the grid.
#[derive(Debug, Clone)]
pub struct SubordinatedCoefficients {
    pub values: Vec<Complex64>,
    /// True when the transform is polynomial and the grid resolves its full
    /// band, so the DFT equals the Fourier integral; pointwise transforms are
    /// always flagged approximate.
    pub exact: bool,
}

/// `a~_k(F) = G^{-n} sum_j F(T(theta_j)) exp(-i k . theta_j)` for each
/// requested frequency.
///
/// Extraction is symmetrized over `{k, -k}`, which makes the real-field
/// identity `a~_{-k} = conj(a~_k)` hold exactly on every draw.
pub fn subordinated_coefficients(
    sample: &FieldSample,
    transform: &Transform,
    freqs: &[Vec<i64>],
) -> Result<SubordinatedCoefficients> {
    let grid = sample.grid;
    let dim = sample.dim;
    for freq in freqs {
        if freq.len() != dim {
            return Err(Error::DimensionMismatch {
                left: freq.len(),
                right: dim,
            });
        }
    }
    let exact = match transform.degree() {
        Some(d) => grid as i64 >= 2 * d as i64 * sample.cutoff + 1,
        None => false,
    };

    let mut buf: Vec<Complex64> = sample
        .values
        .iter()
        .map(|&t| Complex64::new(transform.eval(t), 0.0))
        .collect();
    let shape = vec![grid; dim];
    ndfft(&mut buf, &shape, false);
    let scale = 1.0 / buf.len() as f64;

    let flat_of = |freq: &[i64], sign: i64| -> usize {
        let mut flat = 0usize;
        for &c in freq {
            flat = flat * grid + (sign * c).rem_euclid(grid as i64) as usize;
        }
        flat
    };
    let values = freqs
        .iter()
        .map(|freq| {
            let plus = buf[flat_of(freq, 1)];
            let minus = buf[flat_of(freq, -1)];
            (plus + minus.conj()) * 0.5 * scale
        })
        .collect();
    Ok(SubordinatedCoefficients { values, exact })
}

/// Monte Carlo parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    pub reps: u64,
    pub seed: u64,
    pub grid: usize,
}

/// Which moment a row estimates. Orders refer to Hermite ranks; cross
/// statistics carry the partner order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StatKind {
    /// `E|a~|^2`; compare against `m! Chat_{k,m}`.
    AbsSq,
    ReSq,
    ImSq,
    /// `E[Re a~ * Im a~]`, zero by isotropy.
    ReIm,
    /// `E[(Re a~)^4] / (m! Chat_{k,m})^2`; `3/4` in the CLT regime.
    Re4Norm,
    Im4Norm,
    /// `E[Re a~_m * Re a~_m']` across chaos orders, zero by orthogonality.
    CrossReRe(u32),
    CrossImIm(u32),
    CrossReIm(u32),
}

impl StatKind {
    pub fn label(&self) -> String {
        match self {
            StatKind::AbsSq => "abs_sq".into(),
            StatKind::ReSq => "re_sq".into(),
            StatKind::ImSq => "im_sq".into(),
            StatKind::ReIm => "re_im".into(),
            StatKind::Re4Norm => "re4_norm".into(),
            StatKind::Im4Norm => "im4_norm".into(),
            StatKind::CrossReRe(m) => format!("cross_re_re:{m}"),
            StatKind::CrossImIm(m) => format!("cross_im_im:{m}"),
            StatKind::CrossReIm(m) => format!("cross_re_im:{m}"),
        }
    }
}

/// Replication-averaged estimate with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub freq: Vec<i64>,
    /// Hermite order; 0 labels the optional general transform.
    pub order: u32,
    pub stat: StatKind,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
    pub reps: u64,
    pub seed: u64,
    pub grid: usize,
    /// All coefficient extractions were grid-exact.
    pub exact: bool,
}

impl MomentReport {
    pub fn find(&self, freq: &[i64], order: u32, stat: StatKind) -> Option<&MomentRow> {
        self.rows
            .iter()
            .find(|r| r.freq == freq && r.order == order && r.stat == stat)
    }
}

struct StatSlot {
    freq_idx: usize,
    order: u32,
    kind: StatKind,
    /// Divides the per-replication raw value (normalized fourth moments).
    scale: f64,
}

/// Estimate second and fourth moments of subordinated coefficients across
/// seeded replications.
///
/// `orders` are simulated as Hermite transforms; the optional `transform`
/// adds raw rows labeled order 0. Deterministic for fixed `(seed, reps,
/// freqs)` independent of thread count.
pub fn mc_moments(
    s: &Spectrum,
    orders: &[u32],
    transform: Option<&Transform>,
    freqs: &[Vec<i64>],
    cfg: &McConfig,
) -> Result<MomentReport> {
    if cfg.reps < 100 {
        return Err(Error::InvalidParameter {
            name: "reps",
            reason: format!("need at least 100 replications, got {}", cfg.reps),
        });
    }
    if freqs.is_empty() {
        return Err(Error::InvalidParameter {
            name: "freqs",
            reason: "need at least one frequency".into(),
        });
    }
    if orders.is_empty() && transform.is_none() {
        return Err(Error::InvalidParameter {
            name: "orders",
            reason: "need at least one Hermite order or a transform".into(),
        });
    }
    if let Some(&bad) = orders.iter().find(|&&m| m < 1) {
        return Err(Error::OrderOutOfRange { order: bad, max: 1 });
    }
    let dim = s.dim();
    for freq in freqs {
        if freq.len() != dim {
            return Err(Error::DimensionMismatch {
                left: freq.len(),
                right: dim,
            });
        }
    }

    // Grid exactness for the highest polynomial band in play.
    let max_order = orders.iter().copied().max().unwrap_or(0);
    let band = max_order.max(transform.and_then(|t| t.degree()).unwrap_or(0));
    let required = 2 * band as usize * s.cutoff() as usize + 1;
    if cfg.grid < required.max(2 * s.cutoff() as usize + 1) {
        return Err(Error::GridTooSmall {
            grid: cfg.grid,
            required,
            cutoff: s.cutoff(),
        });
    }
    let work = cfg.reps as u128 * (cfg.grid as u128).pow(dim as u32);
    if work > MAX_MC_WORK {
        return Err(Error::BudgetExceeded {
            what: "mc replications",
            needed: work,
            limit: MAX_MC_WORK,
        });
    }

    // Analytic normalizers for the fourth-moment rows.
    let powers: Vec<ConvolvedSpectrum> = if max_order >= 1 {
        convolve_power(s, max_order, ConvPath::Auto)?
    } else {
        Vec::new()
    };
    let normalizer = |freq: &[i64], m: u32| -> Option<f64> {
        let chat = powers[m as usize - 1].value_at(freq);
        let var = factorial(m) * chat;
        (var > 1e-150).then_some(var * var)
    };

    // Fixed stat schema; accumulation and reporting follow its order.
    let mut schema: Vec<StatSlot> = Vec::new();
    for (freq_idx, freq) in freqs.iter().enumerate() {
        for &m in orders {
            for kind in [
                StatKind::AbsSq,
                StatKind::ReSq,
                StatKind::ImSq,
                StatKind::ReIm,
            ] {
                schema.push(StatSlot {
                    freq_idx,
                    order: m,
                    kind,
                    scale: 1.0,
                });
            }
            if let Some(var_sq) = normalizer(freq, m) {
                for kind in [StatKind::Re4Norm, StatKind::Im4Norm] {
                    schema.push(StatSlot {
                        freq_idx,
                        order: m,
                        kind,
                        scale: var_sq,
                    });
                }
            }
        }
        for (i, &ma) in orders.iter().enumerate() {
            for &mb in &orders[i + 1..] {
                for kind in [
                    StatKind::CrossReRe(mb),
                    StatKind::CrossImIm(mb),
                    StatKind::CrossReIm(mb),
                ] {
                    schema.push(StatSlot {
                        freq_idx,
                        order: ma,
                        kind,
                        scale: 1.0,
                    });
                }
            }
        }
        if transform.is_some() {
            for kind in [
                StatKind::AbsSq,
                StatKind::ReSq,
                StatKind::ImSq,
                StatKind::ReIm,
            ] {
                schema.push(StatSlot {
                    freq_idx,
                    order: 0,
                    kind,
                    scale: 1.0,
                });
            }
        }
    }

    let hermite_transforms: Vec<Transform> =
        orders.iter().map(|&m| Transform::Hermite(m)).collect();
    let n_batches = cfg.reps.div_ceil(BATCH);

    // One (sum, sum of squares) pair per schema slot, per batch; batches are
    // reduced in index order afterwards.
    let batch_accs: Vec<(Vec<(f64, f64)>, bool)> = (0..n_batches)
        .into_par_iter()
        .map(|batch| -> Result<(Vec<(f64, f64)>, bool)> {
            let mut acc = vec![(0.0f64, 0.0f64); schema.len()];
            let mut exact = true;
            let lo = batch * BATCH;
            let hi = (lo + BATCH).min(cfg.reps);
            let mut coeffs: Vec<Vec<Complex64>> = Vec::new();
            for rep in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(rep);
                let draw = draw_coefficients(s, &mut rng);
                let sample = synthesize(&draw, cfg.grid)?;

                coeffs.clear();
                for t in &hermite_transforms {
                    let sub = subordinated_coefficients(&sample, t, freqs)?;
                    exact &= sub.exact;
                    coeffs.push(sub.values);
                }
                let f_coeffs = match transform {
                    Some(t) => {
                        let sub = subordinated_coefficients(&sample, t, freqs)?;
                        exact &= sub.exact;
                        Some(sub.values)
                    }
                    None => None,
                };

                let order_pos = |m: u32| orders.iter().position(|&o| o == m).unwrap();
                for (slot, entry) in schema.iter().zip(acc.iter_mut()) {
                    let z = if slot.order == 0 {
                        f_coeffs.as_ref().unwrap()[slot.freq_idx]
                    } else {
                        coeffs[order_pos(slot.order)][slot.freq_idx]
                    };
                    let raw = match slot.kind {
                        StatKind::AbsSq => z.norm_sqr(),
                        StatKind::ReSq => z.re * z.re,
                        StatKind::ImSq => z.im * z.im,
                        StatKind::ReIm => z.re * z.im,
                        StatKind::Re4Norm => z.re.powi(4),
                        StatKind::Im4Norm => z.im.powi(4),
                        StatKind::CrossReRe(mb) => z.re * coeffs[order_pos(mb)][slot.freq_idx].re,
                        StatKind::CrossImIm(mb) => z.im * coeffs[order_pos(mb)][slot.freq_idx].im,
                        StatKind::CrossReIm(mb) => z.re * coeffs[order_pos(mb)][slot.freq_idx].im,
                    };
                    let x = raw / slot.scale;
                    entry.0 += x;
                    entry.1 += x * x;
                }
            }
            Ok((acc, exact))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut totals = vec![(0.0f64, 0.0f64); schema.len()];
    let mut exact = true;
    for (acc, batch_exact) in &batch_accs {
        exact &= *batch_exact;
        for (t, a) in totals.iter_mut().zip(acc) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }

    let n = cfg.reps as f64;
    let rows = schema
        .iter()
        .zip(&totals)
        .map(|(slot, &(sum, sumsq))| {
            let mean = sum / n;
            let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
            MomentRow {
                freq: freqs[slot.freq_idx].clone(),
                order: slot.order,
                stat: slot.kind,
                estimate: mean,
                stderr: (var / n).sqrt(),
            }
        })
        .collect();
    Ok(MomentReport {
        rows,
        reps: cfg.reps,
        seed: cfg.seed,
        grid: cfg.grid,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumModel;

    fn two_point() -> Spectrum {
        Spectrum::from_table(vec![0.5, 0.0, 0.5], LatticeBox::new(1, 1).unwrap()).unwrap()
    }

    #[test]
    fn draws_are_conjugate_symmetric_with_expected_variance() {
        let s = two_point();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reps = 100_000;
        let mut sum_sq = 0.0;
        let mut sum_cross = 0.0;
        for _ in 0..reps {
            let draw = draw_coefficients(&s, &mut rng);
            let a1 = draw.value_at(&[1]);
            assert_eq!(draw.value_at(&[-1]), a1.conj());
            sum_sq += a1.norm_sqr();
            sum_cross += a1.re * a1.im;
        }
        let n = reps as f64;
        // E|a_1|^2 = C_1 = 0.5, |a|^2 is exponential with sd 0.5.
        let se = 0.5 / n.sqrt();
        assert!((sum_sq / n - 0.5).abs() <= 5.0 * se);
        // E[Re a Im a] = 0, each factor has sd 0.5.
        let se_cross = 0.25 / n.sqrt();
        assert!((sum_cross / n).abs() <= 5.0 * se_cross);
    }

    #[test]
    fn synthesis_of_a_single_mode() {
        // a_1 = (1 - i)/2 gives T = cos + sin.
        let boxed = LatticeBox::new(1, 1).unwrap();
        let a1 = Complex64::new(0.5, -0.5);
        let draw =
            CoefficientDraw::from_values(boxed, vec![a1.conj(), Complex64::default(), a1]).unwrap();
        let sample = synthesize(&draw, 8).unwrap();
        for j in 0..8 {
            let theta = std::f64::consts::TAU * j as f64 / 8.0;
            let want = theta.cos() + theta.sin();
            assert!((sample.values()[j] - want).abs() <= 1e-12);
        }
        assert!(sample.imag_residual() <= 1e-10 * sample.amplitude().max(1e-300));
    }

    #[test]
    fn zero_draw_gives_zero_field() {
        let boxed = LatticeBox::new(1, 2).unwrap();
        let draw = CoefficientDraw::from_values(boxed, vec![Complex64::default(); 5]).unwrap();
        let sample = synthesize(&draw, 8).unwrap();
        assert!(sample.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_below_nyquist_is_rejected() {
        let s = Spectrum::build(
            SpectrumModel::algebraic(2.0, 1.0),
            LatticeBox::new(1, 8).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draw = draw_coefficients(&s, &mut rng);
        assert!(matches!(
            synthesize(&draw, 16),
            Err(Error::GridTooSmall { .. })
        ));
        assert!(synthesize(&draw, 17).is_ok());
    }

    #[test]
    fn grid_variance_matches_total_mass() {
        let s = Spectrum::build(
            SpectrumModel::exponential_flat(0.5, 1.0),
            LatticeBox::new(1, 16).unwrap(),
        )
        .unwrap();
        let mass = s.total_mass();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let reps = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..reps {
            let ms = synthesize(&draw_coefficients(&s, &mut rng), 64)
                .unwrap()
                .mean_square();
            sum += ms;
            sumsq += ms * ms;
        }
        let n = reps as f64;
        let mean = sum / n;
        let se = (((sumsq - n * mean * mean) / (n - 1.0)).max(0.0) / n).sqrt();
        assert!(
            (mean - mass).abs() <= 5.0 * se,
            "{mean} vs {mass} (se {se})"
        );
    }

    #[test]
    fn identity_transform_round_trips_coefficients() {
        let s = Spectrum::build(
            SpectrumModel::algebraic(2.0, 1.0),
            LatticeBox::new(1, 8).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draw = draw_coefficients(&s, &mut rng);
        let sample = synthesize(&draw, 32).unwrap();
        let freqs: Vec<Vec<i64>> = (-8..=8).map(|k| vec![k]).collect();
        let sub = subordinated_coefficients(&sample, &Transform::Hermite(1), &freqs).unwrap();
        assert!(sub.exact);
        // DFT round-off is absolute at the field scale.
        let scale = draw.values().iter().map(|a| a.norm()).fold(0.0, f64::max);
        for (freq, got) in freqs.iter().zip(&sub.values) {
            let want = draw.value_at(freq);
            assert!((got - want).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn squared_field_coefficient_by_hand() {
        // For the two-point spectrum, a~_2(H_2) = a_1^2 on every draw.
        let boxed = LatticeBox::new(1, 1).unwrap();
        let a1 = Complex64::new(0.3, 0.45);
        let draw =
            CoefficientDraw::from_values(boxed, vec![a1.conj(), Complex64::default(), a1]).unwrap();
        let sample = synthesize(&draw, 8).unwrap();
        let sub = subordinated_coefficients(&sample, &Transform::Hermite(2), &[vec![2]]).unwrap();
        assert!(sub.exact);
        assert!((sub.values[0] - a1 * a1).norm() <= 1e-14);
    }

    #[test]
    fn subordinated_coefficients_are_exactly_conjugate_symmetric() {
        let s = Spectrum::build(
            SpectrumModel::exponential_flat(0.5, 1.0),
            LatticeBox::new(1, 8).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let sample = synthesize(&draw_coefficients(&s, &mut rng), 64).unwrap();
            let sub =
                subordinated_coefficients(&sample, &Transform::Hermite(3), &[vec![5], vec![-5]])
                    .unwrap();
            assert_eq!(sub.values[1], sub.values[0].conj());
        }
    }

    #[test]
    fn aliased_grid_is_flagged() {
        let s = two_point();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sample = synthesize(&draw_coefficients(&s, &mut rng), 4).unwrap();
        // Degree-2 band needs G >= 5.
        let sub = subordinated_coefficients(&sample, &Transform::Hermite(2), &[vec![0]]).unwrap();
        assert!(!sub.exact);
        // Pointwise transforms are always approximate.
        let sub =
            subordinated_coefficients(&sample, &Transform::pointwise(|x| x.tanh()), &[vec![0]])
                .unwrap();
        assert!(!sub.exact);
    }

    #[test]
    fn exact_dft_is_independent_of_grid_size() {
        let s = Spectrum::build(
            SpectrumModel::exponential_flat(0.5, 1.0),
            LatticeBox::new(1, 4).unwrap(),
        )
        .unwrap();
        // Same replication stream, two valid grids.
        let freqs: Vec<Vec<i64>> = vec![vec![2], vec![7]];
        let mut values = Vec::new();
        for grid in [24usize, 36] {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let sample = synthesize(&draw_coefficients(&s, &mut rng), grid).unwrap();
            let sub = subordinated_coefficients(&sample, &Transform::Hermite(2), &freqs).unwrap();
            assert!(sub.exact);
            values.push(sub.values);
        }
        for (a, b) in values[0].iter().zip(&values[1]) {
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-12));
        }
    }

    #[test]
    fn mc_report_is_deterministic_across_thread_counts() {
        let s = two_point();
        let cfg = McConfig {
            reps: 300,
            seed: 11,
            grid: 8,
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| mc_moments(&s, &[1, 2], None, &[vec![0], vec![2]], &cfg).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.estimate.to_bits(), rb.estimate.to_bits());
            assert_eq!(ra.stderr.to_bits(), rb.stderr.to_bits());
        }
    }

    #[test]
    fn mc_variance_identity_for_the_square() {
        let s = two_point();
        let cfg = McConfig {
            reps: 2_000,
            seed: 21,
            grid: 8,
        };
        let report = mc_moments(&s, &[2], None, &[vec![0]], &cfg).unwrap();
        assert!(report.exact);
        let row = report.find(&[0], 2, StatKind::AbsSq).unwrap();
        // E|a~_0(H_2)|^2 = 2 Chat_{0,2} = 1.
        assert!((row.estimate - 1.0).abs() <= 5.0 * row.stderr);
    }

    #[test]
    fn mc_gaussian_fourth_moment() {
        let s = Spectrum::build(
            SpectrumModel::exponential_flat(0.5, 1.0),
            LatticeBox::new(1, 8).unwrap(),
        )
        .unwrap();
        let cfg = McConfig {
            reps: 2_000,
            seed: 31,
            grid: 32,
        };
        let report = mc_moments(&s, &[1], None, &[vec![3]], &cfg).unwrap();
        for kind in [StatKind::Re4Norm, StatKind::Im4Norm] {
            let row = report.find(&[3], 1, kind).unwrap();
            assert!((row.estimate - 0.75).abs() <= 5.0 * row.stderr);
        }
        let cross = report.find(&[3], 1, StatKind::ReIm).unwrap();
        assert!(cross.estimate.abs() <= 5.0 * cross.stderr);
    }

    #[test]
    fn mc_variance_identity_on_a_planar_torus() {
        let s = Spectrum::build(
            SpectrumModel::exponential_flat(1.0, 1.0),
            LatticeBox::new(2, 3).unwrap(),
        )
        .unwrap()
        .normalized()
        .unwrap();
        let powers = crate::convolve::convolve_power(&s, 2, ConvPath::Direct).unwrap();
        let cfg = McConfig {
            reps: 2_000,
            seed: 61,
            grid: 16,
        };
        let freqs: Vec<Vec<i64>> = vec![vec![2, 1], vec![3, -2], vec![0, 3]];
        let report = mc_moments(&s, &[1, 2], None, &freqs, &cfg).unwrap();
        assert!(report.exact);
        for freq in &freqs {
            for m in 1..=2u32 {
                let want = factorial(m) * powers[m as usize - 1].value_at(freq);
                let row = report.find(freq, m, StatKind::AbsSq).unwrap();
                assert!(
                    (row.estimate - want).abs() <= 5.0 * row.stderr.max(1e-300),
                    "freq {freq:?} m={m}: {} vs {want}",
                    row.estimate
                );
            }
        }
        // Mirror symmetry of the planar draw as well.
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let draw = draw_coefficients(&s, &mut rng);
        assert_eq!(draw.value_at(&[-2, 3]), draw.value_at(&[2, -3]).conj());
    }

    #[test]
    fn mc_rejects_bad_configs() {
        let s = two_point();
        let base = McConfig {
            reps: 200,
            seed: 1,
            grid: 8,
        };
        assert!(mc_moments(&s, &[], None, &[vec![0]], &base).is_err());
        assert!(mc_moments(&s, &[2], None, &[], &base).is_err());
        let low = McConfig {
            reps: 10,
            ..base.clone()
        };
        assert!(mc_moments(&s, &[2], None, &[vec![0]], &low).is_err());
        let small = McConfig { grid: 4, ..base };
        assert!(matches!(
            mc_moments(&s, &[2], None, &[vec![0]], &small),
            Err(Error::GridTooSmall { .. })
        ));
    }
}
