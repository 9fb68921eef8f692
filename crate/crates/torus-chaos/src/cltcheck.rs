//! The equivalent high-frequency CLT criteria evaluated on convolution powers.
//!
//! For an order-`m` Hermite transform and a splitting step `q`, the criteria
//! compare the terms `Chat_{j,q} Chat_{k-j,m-q}` against their sum (which the
//! splitting recursion identifies with `Chat_{k,m}`):
//!
//! * `cond2_sum`: `Chat_{k,m}^{-2} sum_j Chat_{j,q}^2 Chat_{k-j,m-q}^2`,
//!   the squared contraction norm of the normalized chaos kernel;
//! * `cond3_ratio`: `sup_j Chat_{j,q} Chat_{k-j,m-q} / sum_j ...`, equal to
//!   the largest conditional probability `P[Z_q = j | Z_m = k]` of the
//!   spectrum-driven random walk bridge pinned at `k`.
//!
//! The CLT along a frequency sequence holds exactly when these vanish for
//! every `q`. Diagnostics at `k` and `-k` are identical; frequencies are
//! canonicalized internally so that holds bit-for-bit.

use rayon::prelude::*;
use serde::Serialize;

use crate::convolve::{for_each_pair_term, ConvolvedSpectrum};
use crate::error::{Error, Result};
use crate::hermite::{factorial, HermiteExpansion};
use crate::lattice::LatticeBox;

/// Below this, a positive normalizing coefficient is reported as underflow
/// rather than divided by (its square would leave the normal range).
pub const UNDERFLOW_LIMIT: f64 = 1e-150;

/// Fetch `Chat_{k,m}`, distinguishing a structural zero (frequency outside
/// the achievable support) from a positive value too small to normalize by.
fn normalizer(powers: &[ConvolvedSpectrum], k: &[i64], m: u32) -> Result<f64> {
    let power = powers
        .get(m as usize - 1)
        .filter(|p| p.order() == m)
        .ok_or(Error::MissingOrder {
            requested: m,
            available: powers.len() as u32,
        })?;
    let value = power.value_at(k);
    if value == 0.0 {
        Err(Error::UnachievableFrequency {
            freq: k.to_vec(),
            order: m,
        })
    } else if value < UNDERFLOW_LIMIT {
        Err(Error::Underflow {
            freq: k.to_vec(),
            order: m,
            limit: UNDERFLOW_LIMIT,
        })
    } else {
        Ok(value)
    }
}

fn split_factors(
    powers: &[ConvolvedSpectrum],
    m: u32,
    q: u32,
) -> Result<(&ConvolvedSpectrum, &ConvolvedSpectrum)> {
    if m < 2 || q < 1 || q >= m {
        return Err(Error::StepOutOfRange {
            q,
            max: m.saturating_sub(1),
        });
    }
    let fetch = |order: u32| {
        powers
            .get(order as usize - 1)
            .filter(|p| p.order() == order)
            .ok_or(Error::MissingOrder {
                requested: order,
                available: powers.len() as u32,
            })
    };
    Ok((fetch(q)?, fetch(m - q)?))
}

/// Flip `k` to its lexicographically nonnegative representative. Every
/// diagnostic here is even in `k`, so evaluating at the representative makes
/// results at `k` and `-k` identical, not merely equal to round-off.
fn canonical(k: &[i64]) -> (Vec<i64>, bool) {
    for &c in k {
        if c > 0 {
            return (k.to_vec(), false);
        }
        if c < 0 {
            return (k.iter().map(|c| -c).collect(), true);
        }
    }
    (k.to_vec(), false)
}

/// The contraction-norm sum of Theorem 1 condition (3):
/// `Chat_{k,m}^{-2} sum_j Chat_{j,q}^2 Chat_{k-j,m-q}^2`.
pub fn cond2_sum(powers: &[ConvolvedSpectrum], k: &[i64], m: u32, q: u32) -> Result<f64> {
    let (k, _) = canonical(k);
    let chat = normalizer(powers, &k, m)?;
    let (pq, pr) = split_factors(powers, m, q)?;
    let inv = 1.0 / chat;
    let mut acc = 0.0;
    for_each_pair_term(
        &pq.lattice_box(),
        pq.values(),
        &pr.lattice_box(),
        pr.values(),
        &k,
        |_, term| {
            let t = term * inv;
            acc += t * t;
        },
    );
    Ok(acc)
}

/// The sup/sum ratio of Theorem 1 condition (4), in `(0, 1]`.
///
/// The denominator is summed directly over the splitting terms; by the
/// recursion it agrees with `Chat_{k,m}` to the convolution accuracy.
pub fn cond3_ratio(powers: &[ConvolvedSpectrum], k: &[i64], m: u32, q: u32) -> Result<f64> {
    let (k, _) = canonical(k);
    let (pq, pr) = split_factors(powers, m, q)?;
    let mut sum = 0.0;
    let mut sup = 0.0f64;
    for_each_pair_term(
        &pq.lattice_box(),
        pq.values(),
        &pr.lattice_box(),
        pr.values(),
        &k,
        |_, term| {
            sum += term;
            sup = sup.max(term);
        },
    );
    if sum == 0.0 {
        return Err(Error::UnachievableFrequency {
            freq: k.to_vec(),
            order: m,
        });
    }
    if sum < UNDERFLOW_LIMIT {
        return Err(Error::Underflow {
            freq: k.to_vec(),
            order: m,
            limit: UNDERFLOW_LIMIT,
        });
    }
    Ok(sup / sum)
}

/// Conditional law of the spectrum-driven random walk bridge:
/// `P[Z_q = j | Z_m = k]` over the order-`q` support box.
#[derive(Debug, Clone)]
pub struct BridgeDistribution {
    endpoint: Vec<i64>,
    order: u32,
    step: u32,
    boxed: LatticeBox,
    probs: Vec<f64>,
}

impl BridgeDistribution {
    pub fn endpoint(&self) -> &[i64] {
        &self.endpoint
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn lattice_box(&self) -> LatticeBox {
        self.boxed
    }

    pub fn prob_at(&self, point: &[i64]) -> f64 {
        self.boxed
            .flat_index(point)
            .map_or(0.0, |idx| self.probs[idx])
    }

    /// Largest bridge probability; equals [`cond3_ratio`] at the same
    /// arguments (the sup/sum ratio is exactly this maximum).
    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    /// Total probability; 1 up to round-off.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Nonzero support as `(point, probability)` pairs, flat order.
    pub fn support(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(idx, &p)| (self.boxed.point_at(idx), p))
    }
}

/// Build the bridge law at step `q` pinned at `Z_m = k`.
pub fn bridge_distribution(
    powers: &[ConvolvedSpectrum],
    k: &[i64],
    m: u32,
    q: u32,
) -> Result<BridgeDistribution> {
    let (ck, flipped) = canonical(k);
    let (pq, pr) = split_factors(powers, m, q)?;
    let boxed = pq.lattice_box();
    let mut numerators = vec![0.0; boxed.len()];
    for_each_pair_term(
        &boxed,
        pq.values(),
        &pr.lattice_box(),
        pr.values(),
        &ck,
        |ja, term| numerators[ja] = term,
    );
    let total: f64 = numerators.iter().sum();
    if total == 0.0 {
        return Err(Error::UnachievableFrequency {
            freq: k.to_vec(),
            order: m,
        });
    }
    if total < UNDERFLOW_LIMIT {
        return Err(Error::Underflow {
            freq: k.to_vec(),
            order: m,
            limit: UNDERFLOW_LIMIT,
        });
    }
    let mut probs: Vec<f64> = numerators.into_iter().map(|n| n / total).collect();
    if flipped {
        // The bridge at -k is the mirror image of the bridge at k.
        probs.reverse();
    }
    Ok(BridgeDistribution {
        endpoint: k.to_vec(),
        order: m,
        step: q,
        boxed,
        probs,
    })
}

/// Why a frequency carries no diagnostic rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SkipReason {
    /// `Chat_{k,m} = 0`: outside the achievable support.
    Unachievable,
    /// Positive but below [`UNDERFLOW_LIMIT`].
    Underflow,
}

#[derive(Debug, Clone, Serialize)]
pub struct CondRow {
    pub q: u32,
    pub cond2_sum: f64,
    pub cond3_ratio: f64,
}

/// Per-frequency CLT diagnostic: one row per splitting step plus the
/// chaos variance `m! Chat_{k,m}`.
#[derive(Debug, Clone, Serialize)]
pub struct CltDiagnostic {
    pub freq: Vec<i64>,
    pub order: u32,
    /// `m! Chat_{k,m}`, the variance of the order-`m` Hermite coefficient.
    pub variance: f64,
    pub rows: Vec<CondRow>,
    pub skipped: Option<SkipReason>,
}

impl CltDiagnostic {
    pub fn achievable(&self) -> bool {
        self.skipped.is_none()
    }
}

/// Evaluate both criteria for every requested frequency at order `m`.
/// Frequencies outside the m-fold support are reported as skipped rather
/// than dividing zero by zero. Rows are emitted in input order.
pub fn clt_report(
    powers: &[ConvolvedSpectrum],
    freqs: &[Vec<i64>],
    m: u32,
) -> Result<Vec<CltDiagnostic>> {
    if m < 1 {
        return Err(Error::OrderOutOfRange { order: m, max: 1 });
    }
    freqs
        .par_iter()
        .map(|freq| {
            let chat = match normalizer(powers, freq, m) {
                Ok(v) => v,
                Err(Error::UnachievableFrequency { .. }) => {
                    return Ok(CltDiagnostic {
                        freq: freq.clone(),
                        order: m,
                        variance: 0.0,
                        rows: Vec::new(),
                        skipped: Some(SkipReason::Unachievable),
                    })
                }
                Err(Error::Underflow { .. }) => {
                    return Ok(CltDiagnostic {
                        freq: freq.clone(),
                        order: m,
                        variance: 0.0,
                        rows: Vec::new(),
                        skipped: Some(SkipReason::Underflow),
                    })
                }
                Err(e) => return Err(e),
            };
            let mut rows = Vec::with_capacity(m.saturating_sub(1) as usize);
            for q in 1..m {
                rows.push(CondRow {
                    q,
                    cond2_sum: cond2_sum(powers, freq, m, q)?,
                    cond3_ratio: cond3_ratio(powers, freq, m, q)?,
                });
            }
            Ok(CltDiagnostic {
                freq: freq.clone(),
                order: m,
                variance: factorial(m) * chat,
                rows,
                skipped: None,
            })
        })
        .collect()
}

/// Finite-frequency picture of the general-transform CLT conditions.
///
/// `ratios[i][j]` is `m! Chat_{k_i,m} / Var` for `m = orders[j]`, the
/// finite-frequency stand-in for the variance-share limits `sigma_m^2`; the
/// tool reports the sequence and leaves convergence judgement to the caller.
/// `sigma_sq_f` recombines the last-frequency ratios with the expansion
/// weights; `tail_by_freq` is the variance mass above `split_order`.
#[derive(Debug, Clone, Serialize)]
pub struct GeneralTransformReport {
    pub freqs: Vec<Vec<i64>>,
    pub orders: Vec<u32>,
    /// `sum_m c_m^2/m! Chat_{k,m}` per frequency (truncated variance).
    pub variance: Vec<f64>,
    pub ratios: Vec<Vec<f64>>,
    #[serde(rename = "sigmaSqF")]
    pub sigma_sq_f: f64,
    pub split_order: u32,
    /// Tail at the last frequency.
    pub tail: f64,
    pub tail_by_freq: Vec<f64>,
}

pub fn general_transform_report(
    powers: &[ConvolvedSpectrum],
    expansion: &HermiteExpansion,
    freqs: &[Vec<i64>],
    split_order: u32,
) -> Result<GeneralTransformReport> {
    let max_order = expansion.max_order();
    if expansion.active_orders().next().is_none() {
        return Err(Error::InvalidParameter {
            name: "expansion",
            reason: "all coefficients are zero".into(),
        });
    }
    if split_order < 1 || split_order > max_order {
        return Err(Error::InvalidParameter {
            name: "split_order",
            reason: format!("need 1 <= split_order <= {max_order}"),
        });
    }
    if (powers.len() as u32) < max_order {
        return Err(Error::MissingOrder {
            requested: max_order,
            available: powers.len() as u32,
        });
    }
    if freqs.is_empty() {
        return Err(Error::InvalidParameter {
            name: "freqs",
            reason: "need at least one frequency".into(),
        });
    }

    let orders: Vec<u32> = (1..=max_order).collect();
    let mut variance = Vec::with_capacity(freqs.len());
    let mut ratios = Vec::with_capacity(freqs.len());
    let mut tail_by_freq = Vec::with_capacity(freqs.len());
    for freq in freqs {
        let var = expansion.variance_subordinated(powers, freq)?;
        if var == 0.0 {
            return Err(Error::UnachievableFrequency {
                freq: freq.clone(),
                order: max_order,
            });
        }
        let row: Vec<f64> = orders
            .iter()
            .map(|&m| factorial(m) * powers[m as usize - 1].value_at(freq) / var)
            .collect();
        let tail: f64 = expansion
            .active_orders()
            .filter(|&m| m > split_order)
            .map(|m| {
                let c = expansion.coeff(m);
                c * c / factorial(m) * powers[m as usize - 1].value_at(freq)
            })
            .sum();
        variance.push(var);
        ratios.push(row);
        tail_by_freq.push(tail);
    }

    let last = ratios.last().expect("nonempty");
    let sigma_sq_f: f64 = orders
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let w = expansion.coeff(m) / factorial(m);
            w * w * last[j]
        })
        .sum();
    Ok(GeneralTransformReport {
        freqs: freqs.to_vec(),
        orders,
        variance,
        ratios,
        sigma_sq_f,
        split_order,
        tail: *tail_by_freq.last().expect("nonempty"),
        tail_by_freq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolve::{convolve_power, ConvPath};
    use crate::spectrum::{Spectrum, SpectrumModel};

    fn two_point_powers(m: u32) -> Vec<ConvolvedSpectrum> {
        let s = Spectrum::from_table(vec![0.5, 0.0, 0.5], LatticeBox::new(1, 1).unwrap()).unwrap();
        convolve_power(&s, m, ConvPath::Direct).unwrap()
    }

    #[test]
    fn cond2_two_point_by_hand() {
        let p = two_point_powers(2);
        assert_eq!(cond2_sum(&p, &[2], 2, 1).unwrap(), 1.0);
        assert_eq!(cond2_sum(&p, &[0], 2, 1).unwrap(), 0.5);
    }

    #[test]
    fn cond2_matches_double_loop_oracle() {
        let s = Spectrum::build(
            SpectrumModel::algebraic(2.0, 1.0),
            LatticeBox::new(1, 256).unwrap(),
        )
        .unwrap();
        let p = convolve_power(&s, 2, ConvPath::Direct).unwrap();
        let got = cond2_sum(&p, &[64], 2, 1).unwrap();
        // Independent oracle: brute-force double loop over the base box.
        let chat: f64 = (-256i64..=256)
            .map(|j| s.value_at(&[j]) * s.value_at(&[64 - j]))
            .sum();
        let expect: f64 = (-256i64..=256)
            .map(|j| {
                let t = s.value_at(&[j]) * s.value_at(&[64 - j]);
                (t / chat) * (t / chat)
            })
            .sum();
        assert!((got - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn cond3_two_point_by_hand() {
        let p = two_point_powers(2);
        assert_eq!(cond3_ratio(&p, &[2], 2, 1).unwrap(), 1.0);
        assert_eq!(cond3_ratio(&p, &[0], 2, 1).unwrap(), 0.5);
    }

    #[test]
    fn cond3_exponential_decays_like_one_over_k() {
        let s = Spectrum::build(
            SpectrumModel::exponential_flat(0.5, 1.0),
            LatticeBox::new(1, 512).unwrap(),
        )
        .unwrap();
        let p = convolve_power(&s, 2, ConvPath::Direct).unwrap();
        let got = cond3_ratio(&p, &[256], 2, 1).unwrap();

        // Oracle: direct sup/sum over the base spectrum.
        let mut sup = 0.0f64;
        let mut sum = 0.0;
        for j in -512i64..=512 {
            let t = s.value_at(&[j]) * s.value_at(&[256 - j]);
            sup = sup.max(t);
            sum += t;
        }
        assert!((got - sup / sum).abs() <= 1e-14 * got);

        // For h = 1 every interior term is equal, so the ratio is exactly
        // 1/(k - 1 + 2 e^{-theta*2}-geometric tail mass): about 0.0039 at k=256.
        let tail = 2.0 * (-1.0f64).exp() / (1.0 - (-1.0f64).exp());
        let analytic = 1.0 / (255.0 + tail);
        assert!((got - analytic).abs() <= 1e-9 * analytic);
        assert!(got < 0.005);
    }

    #[test]
    fn bridge_two_point_by_hand() {
        let p = two_point_powers(2);
        let b = bridge_distribution(&p, &[0], 2, 1).unwrap();
        assert_eq!(b.prob_at(&[1]), 0.5);
        assert_eq!(b.prob_at(&[-1]), 0.5);
        assert_eq!(b.prob_at(&[0]), 0.0);

        let b2 = bridge_distribution(&p, &[2], 2, 1).unwrap();
        assert_eq!(b2.prob_at(&[1]), 1.0);
        assert_eq!(b2.support().count(), 1);
    }

    #[test]
    fn bridge_max_equals_cond3_and_sums_to_one() {
        let s = Spectrum::build(
            SpectrumModel::exponential_flat(0.5, 1.0),
            LatticeBox::new(1, 32).unwrap(),
        )
        .unwrap();
        let p = convolve_power(&s, 3, ConvPath::Direct).unwrap();
        let b = bridge_distribution(&p, &[20], 3, 2).unwrap();
        let ratio = cond3_ratio(&p, &[20], 3, 2).unwrap();
        assert!((b.max_prob() - ratio).abs() <= 1e-14 * ratio);
        assert!((b.total() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn diagnostics_are_mirror_identical() {
        let s = Spectrum::build(
            SpectrumModel::algebraic(2.5, 1.0),
            LatticeBox::new(1, 24).unwrap(),
        )
        .unwrap();
        let p = convolve_power(&s, 3, ConvPath::Direct).unwrap();
        for q in 1..3 {
            assert_eq!(
                cond2_sum(&p, &[7], 3, q).unwrap(),
                cond2_sum(&p, &[-7], 3, q).unwrap()
            );
            assert_eq!(
                cond3_ratio(&p, &[7], 3, q).unwrap(),
                cond3_ratio(&p, &[-7], 3, q).unwrap()
            );
        }
        let b = bridge_distribution(&p, &[7], 3, 1).unwrap();
        let bm = bridge_distribution(&p, &[-7], 3, 1).unwrap();
        assert_eq!(b.max_prob(), bm.max_prob());
        assert_eq!(b.prob_at(&[3]), bm.prob_at(&[-3]));
    }

    #[test]
    fn unachievable_frequencies_are_flagged() {
        let p = two_point_powers(2);
        // Odd frequencies cannot be reached in two +-1 steps.
        assert!(matches!(
            cond2_sum(&p, &[1], 2, 1),
            Err(Error::UnachievableFrequency { .. })
        ));
        let report = clt_report(&p, &[vec![0], vec![1], vec![2], vec![5]], 2).unwrap();
        assert!(report[0].achievable() && report[2].achievable());
        assert_eq!(report[1].skipped, Some(SkipReason::Unachievable));
        assert_eq!(report[3].skipped, Some(SkipReason::Unachievable));
        assert_eq!(report[0].variance, 2.0 * 0.5);
    }

    #[test]
    fn report_rows_satisfy_proof_inequalities() {
        let s = Spectrum::build(
            SpectrumModel::algebraic(2.0, 1.0),
            LatticeBox::new(1, 32).unwrap(),
        )
        .unwrap();
        let p = convolve_power(&s, 4, ConvPath::Direct).unwrap();
        let freqs: Vec<Vec<i64>> = (1..=32).map(|k| vec![k]).collect();
        for m in 2..=4u32 {
            for diag in clt_report(&p, &freqs, m).unwrap() {
                assert!(diag.achievable());
                let max2 = diag.rows.iter().map(|r| r.cond2_sum).fold(0.0, f64::max);
                let max3 = diag.rows.iter().map(|r| r.cond3_ratio).fold(0.0, f64::max);
                for row in &diag.rows {
                    assert!(row.cond3_ratio > 0.0 && row.cond3_ratio <= 1.0 + 1e-12);
                    assert!(row.cond2_sum <= row.cond3_ratio + 1e-12);
                }
                assert!(max2 >= max3 * max3 - 1e-12);
            }
        }
    }

    #[test]
    fn general_report_for_pure_hermite() {
        let s = Spectrum::build(
            SpectrumModel::exponential_flat(0.5, 1.0),
            LatticeBox::new(1, 16).unwrap(),
        )
        .unwrap();
        let p = convolve_power(&s, 3, ConvPath::Direct).unwrap();
        let h3 = crate::hermite::Transform::Hermite(3).expand(3).unwrap();
        let freqs: Vec<Vec<i64>> = vec![vec![4], vec![8], vec![16]];
        let report = general_transform_report(&p, &h3, &freqs, 3).unwrap();
        for (i, freq) in freqs.iter().enumerate() {
            let want = 6.0 * p[2].value_at(freq);
            assert!((report.variance[i] - want).abs() <= 1e-14 * want);
            // ratio for m = 3 is exactly 1, tail above split order 3 is 0.
            assert!((report.ratios[i][2] - 1.0).abs() <= 1e-12);
            assert_eq!(report.tail_by_freq[i], 0.0);
        }
        assert!((report.sigma_sq_f - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn general_report_hand_value_at_zero() {
        let p = two_point_powers(2);
        // F = H_1 + H_2 means c_1 = 1, c_2 = 2.
        let exp = HermiteExpansion::new(vec![0.0, 1.0, 2.0]);
        let report = general_transform_report(&p, &exp, &[vec![0]], 1).unwrap();
        // c_1^2 * C_0 + c_2^2/2 * Chat_{0,2} = 0 + 2 * 0.5 = 1.
        assert_eq!(report.variance[0], 1.0);
        assert_eq!(report.tail_by_freq[0], 2.0 * 0.5);
    }

    #[test]
    fn general_report_matches_recomputation() {
        let s = Spectrum::build(
            SpectrumModel::exponential_flat(0.5, 1.0),
            LatticeBox::new(1, 64).unwrap(),
        )
        .unwrap();
        let p = convolve_power(&s, 3, ConvPath::Direct).unwrap();
        let cube = crate::hermite::Transform::cube().expand(3).unwrap();
        let freqs: Vec<Vec<i64>> = vec![vec![16], vec![32], vec![64]];
        let report = general_transform_report(&p, &cube, &freqs, 1).unwrap();
        for (i, freq) in freqs.iter().enumerate() {
            // Oracle: recompute from the raw convolution arrays.
            let var = 9.0 * p[0].value_at(freq) + 6.0 * p[2].value_at(freq);
            assert!((report.variance[i] - var).abs() <= 1e-12 * var);
            let tail = 6.0 * p[2].value_at(freq);
            assert!((report.tail_by_freq[i] - tail).abs() <= 1e-12 * tail);
            let r3 = 6.0 * p[2].value_at(freq) / var;
            assert!((report.ratios[i][2] - r3).abs() <= 1e-12);
        }
        // Weighted recombination of the last-frequency ratios is exactly 1
        // because the same truncated variance appears on both sides.
        assert!((report.sigma_sq_f - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn general_report_rejects_all_zero_expansion() {
        let p = two_point_powers(2);
        let exp = HermiteExpansion::new(vec![0.0, 0.0, 0.0]);
        assert!(general_transform_report(&p, &exp, &[vec![0]], 1).is_err());
    }
}
