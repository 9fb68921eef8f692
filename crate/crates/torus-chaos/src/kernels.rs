//! Discrete-measure kernel algebra for Wiener chaos.
//!
//! Kernels are complex tensors over a finite atomic measure space. The atomic
//! model is an oracle for the deterministic Hilbert-space identities only
//! (contractions, norms, the conjugate-contraction inequality): the chaos
//! distribution theory itself needs a non-atomic measure, which we do not
//! claim to realize here. see `fieldsim` for the stochastic side.
//!
//! The spectral constructor [`spectral_kernel`] realizes the order-`m` chaos
//! kernel of the Hermite coefficient at frequency `k` over an atom per
//! lattice point, with the coefficient basis
//! `f_s = sqrt(C_s/2) (e_{s+} +/- i e_{s-})`; its squared norm reproduces the
//! convolution coefficient `Chat_{k,m}`, which ties this module to `convolve`
//! at machine precision.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::convolve::{convolve_power, ConvPath};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Hard cap on dense kernel tensors (`N^d` entries).
pub const MAX_KERNEL_ENTRIES: u128 = 1 << 24;

/// Symmetrization is exhaustive and only supported up to this order.
pub const MAX_SYMMETRIZE_ORDER: u32 = 4;

/// Finite measure space: `N` atoms with strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    weights: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: "need at least one atom".into(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: format!("weights must be strictly positive and finite, got {w}"),
            });
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight(&self, atom: usize) -> f64 {
        self.weights[atom]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn tensor_len(n: usize, order: u32) -> Result<usize> {
    let len = (n as u128).pow(order);
    if len > MAX_KERNEL_ENTRIES {
        return Err(Error::BudgetExceeded {
            what: "kernel tensor",
            needed: len,
            limit: MAX_KERNEL_ENTRIES,
        });
    }
    Ok(len as usize)
}

fn decode(mut idx: usize, n: usize, digits: &mut [usize]) {
    for d in digits.iter_mut().rev() {
        *d = idx % n;
        idx /= n;
    }
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..d).collect();
    heap_permute(&mut items, d, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Order-`d` complex tensor over the `d`-fold atom grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    order: u32,
    measure: Arc<AtomicMeasure>,
    values: Vec<Complex64>,
}

impl DiscreteKernel {
    pub fn new(order: u32, measure: Arc<AtomicMeasure>, values: Vec<Complex64>) -> Result<Self> {
        if order < 1 {
            return Err(Error::OrderOutOfRange { order, max: 1 });
        }
        let len = tensor_len(measure.len(), order)?;
        if values.len() != len {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!(
                    "kernel of order {order} wants {len} entries, got {}",
                    values.len()
                ),
            });
        }
        Ok(Self {
            order,
            measure,
            values,
        })
    }

    pub fn zero(order: u32, measure: Arc<AtomicMeasure>) -> Result<Self> {
        let len = tensor_len(measure.len(), order)?;
        Self::new(order, measure, vec![Complex64::default(); len])
    }

    pub fn from_real(order: u32, measure: Arc<AtomicMeasure>, values: Vec<f64>) -> Result<Self> {
        Self::new(
            order,
            measure,
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Random symmetric complex kernel: iid standard normal real and
    /// imaginary parts, then symmetrized.
    pub fn random_symmetric(
        order: u32,
        measure: Arc<AtomicMeasure>,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let len = tensor_len(measure.len(), order)?;
        let values = (0..len)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        Self::new(order, measure, values)?.symmetrize()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn n_atoms(&self) -> usize {
        self.measure.len()
    }

    pub fn measure(&self) -> &Arc<AtomicMeasure> {
        &self.measure
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value_at(&self, index: &[usize]) -> Complex64 {
        debug_assert_eq!(index.len(), self.order as usize);
        let n = self.n_atoms();
        let flat = index.iter().fold(0usize, |acc, &a| acc * n + a);
        self.values[flat]
    }

    pub fn conj(&self) -> Self {
        Self {
            order: self.order,
            measure: self.measure.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Real part as a (real-valued) kernel.
    pub fn re(&self) -> Self {
        Self {
            order: self.order,
            measure: self.measure.clone(),
            values: self
                .values
                .iter()
                .map(|v| Complex64::new(v.re, 0.0))
                .collect(),
        }
    }

    /// Imaginary part as a (real-valued) kernel.
    pub fn im(&self) -> Self {
        Self {
            order: self.order,
            measure: self.measure.clone(),
            values: self
                .values
                .iter()
                .map(|v| Complex64::new(v.im, 0.0))
                .collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            order: self.order,
            measure: self.measure.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    fn weight_product(&self, digits: &[usize]) -> f64 {
        digits.iter().map(|&a| self.measure.weight(a)).product()
    }

    /// `||f||^2 = sum |f|^2 * prod(mu)` over the grid.
    pub fn norm_sq(&self) -> f64 {
        let n = self.n_atoms();
        let d = self.order as usize;
        let mut digits = vec![0usize; d];
        let mut acc = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            decode(idx, n, &mut digits);
            acc += v.norm_sqr() * self.weight_product(&digits);
        }
        acc
    }

    /// The plain L2 norm; chaos covariances carry the extra `d!` separately.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `(f, g) = sum f * conj(g) * prod(mu)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        if self.order != other.order {
            return Err(Error::OrderOutOfRange {
                order: other.order,
                max: self.order,
            });
        }
        let n = self.n_atoms();
        let d = self.order as usize;
        let mut digits = vec![0usize; d];
        let mut acc = Complex64::default();
        for (idx, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            decode(idx, n, &mut digits);
            acc += a * b.conj() * self.weight_product(&digits);
        }
        Ok(acc)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.measure.as_ref() != other.measure.as_ref() {
            return Err(Error::MeasureMismatch);
        }
        Ok(())
    }

    /// Exhaustive permutation-invariance check for `d <= 3`; for `d = 4` a
    /// deterministic sample of entries is checked instead.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let d = self.order as usize;
        if d == 1 {
            return true;
        }
        let n = self.n_atoms();
        let perms = permutations(d.min(4));
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.norm()))
            .max(1e-300);
        let stride = if d <= 3 {
            1
        } else {
            (self.values.len() / 4096).max(1)
        };
        let mut digits = vec![0usize; d];
        let mut permuted = vec![0usize; d];
        for idx in (0..self.values.len()).step_by(stride) {
            decode(idx, n, &mut digits);
            // Beyond order 4 only the leading arguments are permuted; the
            // tail keeps the identity mapping.
            permuted.copy_from_slice(&digits);
            for perm in &perms {
                for (i, &p) in perm.iter().enumerate() {
                    permuted[i] = digits[p];
                }
                let flat = permuted.iter().fold(0usize, |acc, &a| acc * n + a);
                if (self.values[idx] - self.values[flat]).norm() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Average over all index permutations (exhaustive, `d <= 4`).
    pub fn symmetrize(&self) -> Result<Self> {
        let d = self.order as usize;
        if self.order > MAX_SYMMETRIZE_ORDER {
            return Err(Error::OrderOutOfRange {
                order: self.order,
                max: MAX_SYMMETRIZE_ORDER,
            });
        }
        if d == 1 {
            return Ok(self.clone());
        }
        let n = self.n_atoms();
        let perms = permutations(d);
        let inv = 1.0 / perms.len() as f64;
        let values: Vec<Complex64> = (0..self.values.len())
            .map(|idx| {
                let mut digits = vec![0usize; d];
                decode(idx, n, &mut digits);
                let mut acc = Complex64::default();
                for perm in &perms {
                    let flat = perm.iter().fold(0usize, |acc2, &p| acc2 * n + digits[p]);
                    acc += self.values[flat];
                }
                acc * inv
            })
            .collect();
        Self::new(self.order, self.measure.clone(), values)
    }
}

/// Contraction `f (x)_q g`: pair the first `q` arguments of both kernels
/// against the measure, leaving an order-`2(d-q)` kernel. Generally not
/// symmetric even for symmetric inputs.
pub fn contract(f: &DiscreteKernel, g: &DiscreteKernel, q: u32) -> Result<DiscreteKernel> {
    f.check_compatible(g)?;
    if f.order() != g.order() {
        return Err(Error::OrderOutOfRange {
            order: g.order(),
            max: f.order(),
        });
    }
    let d = f.order();
    if q < 1 || q >= d {
        return Err(Error::StepOutOfRange {
            q,
            max: d.saturating_sub(1),
        });
    }
    let n = f.n_atoms();
    let r = (d - q) as usize;
    let out_order = 2 * (d - q);
    let out_len = tensor_len(n, out_order)?;
    let nr = n.pow(r as u32);
    let nq = n.pow(q);

    // Weight product over the contracted q-tuple.
    let mut wq = vec![1.0f64; nq];
    {
        let mut digits = vec![0usize; q as usize];
        for (a, w) in wq.iter_mut().enumerate() {
            decode(a, n, &mut digits);
            *w = digits.iter().map(|&i| f.measure.weight(i)).product();
        }
    }

    let fv = &f.values;
    let gv = &g.values;
    let compute = |out_idx: usize| {
        let x = out_idx / nr;
        let y = out_idx % nr;
        let mut acc = Complex64::default();
        // Fixed ascending order over the contracted tuple per output entry.
        for (a, &w) in wq.iter().enumerate() {
            acc += fv[a * nr + x] * gv[a * nr + y] * w;
        }
        acc
    };
    let values: Vec<Complex64> = if out_len >= 1 << 12 {
        (0..out_len).into_par_iter().map(compute).collect()
    } else {
        (0..out_len).map(compute).collect()
    };
    DiscreteKernel::new(out_order, f.measure.clone(), values)
}

/// Tensor product `f (x) g`, order `d_f + d_g`.
pub fn tensor(f: &DiscreteKernel, g: &DiscreteKernel) -> Result<DiscreteKernel> {
    f.check_compatible(g)?;
    let n = f.n_atoms();
    let out_order = f.order() + g.order();
    let out_len = tensor_len(n, out_order)?;
    let glen = g.values.len();
    let values = (0..out_len)
        .map(|idx| f.values[idx / glen] * g.values[idx % glen])
        .collect();
    DiscreteKernel::new(out_order, f.measure.clone(), values)
}

/// Both sides of the conjugate-contraction inequality
/// `||g (x)_q conj(g)||^2 >= ||g (x)_q g||^2`.
#[derive(Debug, Clone, Copy)]
pub struct ContractionComparison {
    pub conj_norm_sq: f64,
    pub plain_norm_sq: f64,
    pub holds: bool,
}

/// Evaluate the inequality for a symmetric complex kernel; `holds` allows
/// 1e-12 relative slack for round-off.
pub fn conjugate_contraction_check(g: &DiscreteKernel, q: u32) -> Result<ContractionComparison> {
    let lhs = contract(g, &g.conj(), q)?.norm_sq();
    let rhs = contract(g, g, q)?.norm_sq();
    let slack = 1e-12 * lhs.max(rhs).max(1e-300);
    Ok(ContractionComparison {
        conj_norm_sq: lhs,
        plain_norm_sq: rhs,
        holds: lhs >= rhs - slack,
    })
}

/// Order-`m` chaos kernel of the Hermite coefficient at frequency `k`:
/// `h_{m,k}(x_1..x_m) = sum_{s_1+...+s_m = k} f_{s_1}(x_1) ... f_{s_m}(x_m)`
/// over one atom per lattice point of the spectrum box, with uniform unit
/// weights. Symmetric by construction, and `||h_{m,k}||^2 = Chat_{k,m}`.
pub fn spectral_kernel(s: &Spectrum, m: u32, k: &[i64]) -> Result<DiscreteKernel> {
    if m < 1 {
        return Err(Error::OrderOutOfRange { order: m, max: 1 });
    }
    let boxed = s.lattice_box();
    if k.len() != boxed.dim() {
        return Err(Error::DimensionMismatch {
            left: k.len(),
            right: boxed.dim(),
        });
    }
    let n = boxed.len();
    let out_len = tensor_len(n, m)?;
    let measure = Arc::new(AtomicMeasure::uniform(n)?);

    // Per atom: the paired representative's lattice point, the amplitude
    // sqrt(C/2) (sqrt(C_0) at the origin), and which slot of the pair it is.
    #[derive(Clone)]
    struct Slot {
        rep: Vec<i64>,
        amp: f64,
        kind: SlotKind,
    }
    #[derive(Clone, Copy, PartialEq)]
    enum SlotKind {
        Origin,
        Real,
        Imag,
    }
    let center = boxed.center();
    let slots: Vec<Slot> = (0..n)
        .map(|idx| {
            let point = boxed.point_at(idx);
            if idx == center {
                Slot {
                    rep: point,
                    amp: s.values()[idx].sqrt(),
                    kind: SlotKind::Origin,
                }
            } else {
                let rep_idx = idx.max(boxed.mirror(idx));
                Slot {
                    rep: boxed.point_at(rep_idx),
                    amp: (s.values()[rep_idx] / 2.0).sqrt(),
                    kind: if idx == rep_idx {
                        SlotKind::Real
                    } else {
                        SlotKind::Imag
                    },
                }
            }
        })
        .collect();

    let dim = boxed.dim();
    let md = m as usize;
    let values: Vec<Complex64> = (0..out_len)
        .into_par_iter()
        .map(|idx| {
            let mut digits = vec![0usize; md];
            decode(idx, n, &mut digits);
            let entry_slots: Vec<&Slot> = digits.iter().map(|&a| &slots[a]).collect();
            if entry_slots.iter().any(|slot| slot.amp == 0.0) {
                return Complex64::default();
            }
            let mut acc = Complex64::default();
            let mut sum = vec![0i64; dim];
            // Each position contributes s_i = +rep or -rep; the origin slot
            // only contributes s_i = 0 (sign bit forced to +).
            'mask: for mask in 0u32..(1 << md) {
                sum.iter_mut().for_each(|c| *c = 0);
                for (i, slot) in entry_slots.iter().enumerate() {
                    let positive = mask & (1 << i) == 0;
                    if slot.kind == SlotKind::Origin && !positive {
                        continue 'mask;
                    }
                    for (c, &r) in sum.iter_mut().zip(&slot.rep) {
                        *c += if positive { r } else { -r };
                    }
                }
                if sum != k {
                    continue;
                }
                let mut term = Complex64::new(1.0, 0.0);
                for (i, slot) in entry_slots.iter().enumerate() {
                    let positive = mask & (1 << i) == 0;
                    term *= match slot.kind {
                        SlotKind::Origin | SlotKind::Real => Complex64::new(slot.amp, 0.0),
                        SlotKind::Imag => {
                            if positive {
                                Complex64::new(0.0, slot.amp)
                            } else {
                                Complex64::new(0.0, -slot.amp)
                            }
                        }
                    };
                }
                acc += term;
            }
            acc
        })
        .collect();
    DiscreteKernel::new(m, measure, values)
}

/// Both routes to the contraction norm of the normalized chaos kernel.
#[derive(Debug, Clone, Copy)]
pub struct ContractionNormCheck {
    /// `||h~ (x)_q conj(h~)||^2` by explicit contraction of the normalized kernel.
    pub bruteforce: f64,
    /// The spectral formula `(m! Chat_{k,m})^{-2} sum_j Chat_{j,q}^2 Chat_{k-j,m-q}^2`.
    pub formula: f64,
}

impl ContractionNormCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.bruteforce - self.formula).abs() / self.formula.max(crate::convolve::TINY)
    }
}

/// Compare the brute-force contraction norm against the spectral formula at
/// `(m, k, q)`. Convolution powers are computed internally on the direct
/// path, so the two sides share no floating-point route.
pub fn verify_contraction_norm(
    s: &Spectrum,
    m: u32,
    k: &[i64],
    q: u32,
) -> Result<ContractionNormCheck> {
    if m < 2 || q < 1 || q >= m {
        return Err(Error::StepOutOfRange {
            q,
            max: m.saturating_sub(1),
        });
    }
    let powers = convolve_power(s, m, ConvPath::Direct)?;
    let chat = powers[m as usize - 1].value_at(k);
    if chat == 0.0 {
        return Err(Error::UnachievableFrequency {
            freq: k.to_vec(),
            order: m,
        });
    }
    let kernel = spectral_kernel(s, m, k)?;
    let normalized = kernel.scale(1.0 / (crate::hermite::factorial(m) * chat).sqrt());
    let bruteforce = contract(&normalized, &normalized.conj(), q)?.norm_sq();
    let formula =
        crate::cltcheck::cond2_sum(&powers, k, m, q)? / crate::hermite::factorial(m).powi(2);
    Ok(ContractionNormCheck {
        bruteforce,
        formula,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half_measure() -> Arc<AtomicMeasure> {
        Arc::new(AtomicMeasure::new(vec![0.5, 0.5]).unwrap())
    }

    fn hand_kernel() -> DiscreteKernel {
        // f(a,a)=1, f(a,b)=f(b,a)=2, f(b,b)=0 on two atoms of weight 1/2.
        DiscreteKernel::from_real(2, half_measure(), vec![1.0, 2.0, 2.0, 0.0]).unwrap()
    }

    #[test]
    fn contraction_by_hand() {
        let f = hand_kernel();
        let c = contract(&f, &f, 1).unwrap();
        assert_eq!(c.value_at(&[0, 0]), Complex64::new(2.5, 0.0));
        assert_eq!(c.value_at(&[0, 1]), Complex64::new(1.0, 0.0));
        assert_eq!(c.value_at(&[1, 0]), Complex64::new(1.0, 0.0));
        assert_eq!(c.value_at(&[1, 1]), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn norm_by_hand() {
        let f = hand_kernel();
        assert_eq!(f.norm_sq(), 2.25);
        let zero = DiscreteKernel::zero(2, half_measure()).unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn contracting_with_zero_gives_zero() {
        let f = hand_kernel();
        let zero = DiscreteKernel::zero(2, half_measure()).unwrap();
        let c = contract(&f, &zero, 1).unwrap();
        assert!(c.values().iter().all(|v| *v == Complex64::default()));
    }

    #[test]
    fn tensor_power_of_unit_vector_has_unit_norm() {
        let measure = Arc::new(AtomicMeasure::uniform(3).unwrap());
        let h = DiscreteKernel::from_real(1, measure, vec![0.6, 0.8, 0.0]).unwrap();
        assert!((h.norm() - 1.0).abs() < 1e-15);
        let mut power = h.clone();
        for _ in 1..4 {
            power = tensor(&power, &h).unwrap();
        }
        assert_eq!(power.order(), 4);
        assert!((power.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pairing_identity_from_the_proof() {
        // ||a (x)_q b||^2 = (a (x)_{d-q} a, b (x)_{d-q} b) for real symmetric kernels.
        let measure = Arc::new(AtomicMeasure::uniform(4).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = DiscreteKernel::random_symmetric(3, measure.clone(), &mut rng)
            .unwrap()
            .re();
        let b = DiscreteKernel::random_symmetric(3, measure, &mut rng)
            .unwrap()
            .re();
        for q in 1..3u32 {
            let lhs = contract(&a, &b, q).unwrap().norm_sq();
            let left = contract(&a, &a, 3 - q).unwrap();
            let right = contract(&b, &b, 3 - q).unwrap();
            let rhs = left.inner(&right).unwrap();
            assert!(rhs.im.abs() <= 1e-12 * rhs.re.abs().max(1.0));
            assert!(
                (lhs - rhs.re).abs() <= 1e-12 * lhs.max(1.0),
                "q={q}: {lhs} vs {}",
                rhs.re
            );
        }
    }

    #[test]
    fn conjugation_commutes_with_contraction_exactly() {
        let measure = Arc::new(AtomicMeasure::uniform(3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = DiscreteKernel::random_symmetric(2, measure.clone(), &mut rng).unwrap();
        let g = DiscreteKernel::random_symmetric(2, measure, &mut rng).unwrap();
        let via_conj = contract(&f, &g, 1).unwrap().conj();
        let direct = contract(&f.conj(), &g.conj(), 1).unwrap();
        assert_eq!(via_conj.values(), direct.values());
    }

    #[test]
    fn polarization_decomposition_matches_complex_contraction() {
        let measure = Arc::new(AtomicMeasure::uniform(4).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g1 = DiscreteKernel::random_symmetric(3, measure.clone(), &mut rng).unwrap();
        let g2 = DiscreteKernel::random_symmetric(3, measure, &mut rng).unwrap();
        let (a1, b1) = (g1.re(), g1.im());
        let (a2, b2) = (g2.re(), g2.im());
        for q in 1..3u32 {
            let direct = contract(&g1, &g2, q).unwrap();
            let aa = contract(&a1, &a2, q).unwrap();
            let bb = contract(&b1, &b2, q).unwrap();
            let ab = contract(&a1, &b2, q).unwrap();
            let ba = contract(&b1, &a2, q).unwrap();
            let scale = direct.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
            for (idx, v) in direct.values().iter().enumerate() {
                let re = aa.values()[idx].re - bb.values()[idx].re;
                let im = ab.values()[idx].re + ba.values()[idx].re;
                assert!((v - Complex64::new(re, im)).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn inequality_degenerate_cases() {
        // Real kernel: conjugation is the identity, both sides computed the same.
        let f = hand_kernel();
        let check = conjugate_contraction_check(&f, 1).unwrap();
        assert_eq!(check.conj_norm_sq, check.plain_norm_sq);
        assert!(check.holds);

        // Purely imaginary kernel: the factor i^4 = 1 makes both sides equal.
        let imag = DiscreteKernel::new(
            2,
            half_measure(),
            vec![
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 2.0),
                Complex64::new(0.0, 2.0),
                Complex64::new(0.0, 0.5),
            ],
        )
        .unwrap();
        let check = conjugate_contraction_check(&imag, 1).unwrap();
        assert!((check.conj_norm_sq - check.plain_norm_sq).abs() <= 1e-15 * check.conj_norm_sq);
        assert!(check.holds);
    }

    #[test]
    fn inequality_holds_on_random_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..50 {
            let d = 2 + (trial % 2) as u32;
            let n = 3 + (trial % 3) as usize;
            let measure = Arc::new(AtomicMeasure::uniform(n).unwrap());
            let g = DiscreteKernel::random_symmetric(d, measure, &mut rng).unwrap();
            for q in 1..d {
                assert!(conjugate_contraction_check(&g, q).unwrap().holds);
            }
        }
    }

    #[test]
    fn symmetrize_and_check() {
        let measure = Arc::new(AtomicMeasure::uniform(3).unwrap());
        let mut values = vec![Complex64::default(); 9];
        values[1] = Complex64::new(1.0, -2.0); // (0,1) only
        let f = DiscreteKernel::new(2, measure, values).unwrap();
        assert!(!f.is_symmetric(1e-12));
        let s = f.symmetrize().unwrap();
        assert!(s.is_symmetric(1e-12));
        assert_eq!(s.value_at(&[0, 1]), s.value_at(&[1, 0]));
        assert_eq!(s.value_at(&[0, 1]), Complex64::new(0.5, -1.0));
    }

    #[test]
    fn symmetry_check_beyond_symmetrizable_order() {
        let measure = Arc::new(AtomicMeasure::uniform(3).unwrap());
        let h = DiscreteKernel::from_real(1, measure.clone(), vec![0.6, 0.8, 0.0]).unwrap();
        let g = DiscreteKernel::from_real(1, measure, vec![0.0, 0.5, 1.0]).unwrap();
        // Tensor powers of a single vector are symmetric at any order.
        let mut power = h.clone();
        for _ in 1..5 {
            power = tensor(&power, &h).unwrap();
        }
        assert!(power.is_symmetric(1e-12));
        // Mixing factors breaks symmetry in the leading argument.
        let mut mixed = g.clone();
        for _ in 1..5 {
            mixed = tensor(&mixed, &h).unwrap();
        }
        assert!(!mixed.is_symmetric(1e-12));
    }

    #[test]
    fn spectral_kernel_two_point_norms() {
        let s = Spectrum::from_table(vec![0.5, 0.0, 0.5], LatticeBox::new(1, 1).unwrap()).unwrap();
        let h0 = spectral_kernel(&s, 2, &[0]).unwrap();
        assert!(h0.is_symmetric(1e-14));
        assert!((h0.norm_sq() - 0.5).abs() <= 1e-15);
        let h2 = spectral_kernel(&s, 2, &[2]).unwrap();
        assert!((h2.norm_sq() - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn spectral_kernel_norm_matches_convolution() {
        let s = Spectrum::build(
            crate::spectrum::SpectrumModel::algebraic(2.0, 1.0),
            LatticeBox::new(1, 3).unwrap(),
        )
        .unwrap();
        let powers = convolve_power(&s, 3, ConvPath::Direct).unwrap();
        let h = spectral_kernel(&s, 3, &[2]).unwrap();
        assert!(h.is_symmetric(1e-13));
        let want = powers[2].value_at(&[2]);
        assert!((h.norm_sq() - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn contraction_norm_check_two_point() {
        let s = Spectrum::from_table(vec![0.5, 0.0, 0.5], LatticeBox::new(1, 1).unwrap()).unwrap();
        for k in [0i64, 2] {
            let check = verify_contraction_norm(&s, 2, &[k], 1).unwrap();
            assert!(check.relative_gap() <= 1e-10, "k={k}: {check:?}");
        }
        // Consistency with cond2_sum scaling at k = 2 where the sum is 1.
        let check = verify_contraction_norm(&s, 2, &[2], 1).unwrap();
        assert!((check.formula * 4.0 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn contraction_norm_check_small_algebraic() {
        let s = Spectrum::build(
            crate::spectrum::SpectrumModel::algebraic(2.0, 1.0),
            LatticeBox::new(1, 3).unwrap(),
        )
        .unwrap();
        for q in [1u32, 2] {
            let check = verify_contraction_norm(&s, 3, &[2], q).unwrap();
            assert!(check.relative_gap() <= 1e-10, "q={q}: {check:?}");
        }
    }

    #[test]
    fn budget_guard_reports() {
        let measure = Arc::new(AtomicMeasure::uniform(64).unwrap());
        assert!(matches!(
            DiscreteKernel::zero(5, measure),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
