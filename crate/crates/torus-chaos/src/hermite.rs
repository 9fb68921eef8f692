//! Probabilists' Hermite polynomials and Hermite expansions of transforms.
//!
//! `H_0 = 1`, `H_1 = x`, `H_{m+1}(x) = x H_m(x) - m H_{m-1}(x)`; the family
//! `{H_m / sqrt(m!)}` is orthonormal under the standard Gaussian weight. A
//! square-integrable transform `F` expands as `F = sum_m c_m(F)/m! * H_m`
//! with `c_m(F) = E[H_m(Z) F(Z)]`. Expansions here are centered: `c_0` is
//! dropped, which replaces `F` by `F - E[F(Z)]`.

use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussHermite;

use crate::convolve::ConvolvedSpectrum;
use crate::error::{Error, Result};

/// Default Gauss-Hermite rule size; doubled for the convergence check.
pub const DEFAULT_QUAD_NODES: usize = 128;

/// Coefficients smaller than this fraction of the largest are zeroed.
const SPARSIFY_REL: f64 = 1e-12;

/// `H_m(x)` by the three-term recurrence.
pub fn hermite_eval(m: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    match m {
        0 => 1.0,
        1 => x,
        _ => {
            for j in 1..m {
                let next = x * cur - j as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fill `out[m] = H_m(x)` for `m = 0..out.len()`. One recurrence pass; used
/// where several orders are needed at the same point.
pub fn hermite_sequence(x: f64, out: &mut [f64]) {
    if let Some(slot) = out.get_mut(0) {
        *slot = 1.0;
    }
    if let Some(slot) = out.get_mut(1) {
        *slot = x;
    }
    for m in 2..out.len() {
        out[m] = x * out[m - 1] - (m as f64 - 1.0) * out[m - 2];
    }
}

/// `m!` as a float; exact for the orders used here.
pub fn factorial(m: u32) -> f64 {
    (1..=m as u64).map(|j| j as f64).product()
}

/// A real transform applied pointwise to the Gaussian layer.
#[derive(Clone)]
pub enum Transform {
    /// `H_m` itself.
    Hermite(u32),
    /// Monomial coefficients, lowest power first: `coeffs[i]` multiplies `x^i`.
    Polynomial(Vec<f64>),
    /// Arbitrary evaluable function; must be square-integrable against the
    /// Gaussian weight (only heuristically checkable, see [`expand`](Self::expand)).
    Pointwise(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Hermite(m) => write!(f, "Hermite({m})"),
            Transform::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Transform::Pointwise(_) => write!(f, "Pointwise(..)"),
        }
    }
}

impl Transform {
    /// The centered square, `x^2 - 1 = H_2(x)`.
    pub fn square() -> Self {
        Transform::Polynomial(vec![-1.0, 0.0, 1.0])
    }

    /// The plain cube `x^3 = H_3(x) + 3 H_1(x)`.
    pub fn cube() -> Self {
        Transform::Polynomial(vec![0.0, 0.0, 0.0, 1.0])
    }

    pub fn pointwise(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Transform::Pointwise(Arc::new(f))
    }

    /// Parse the CLI syntax: `hermite:m`, `poly:a0,a1,...`, `square`, `cube`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter {
            name: "transform",
            reason,
        };
        if text == "square" {
            return Ok(Self::square());
        }
        if text == "cube" {
            return Ok(Self::cube());
        }
        if let Some(m) = text.strip_prefix("hermite:") {
            let m: u32 = m
                .parse()
                .map_err(|_| bad(format!("bad order in `{text}`")))?;
            return Ok(Transform::Hermite(m));
        }
        if let Some(list) = text.strip_prefix("poly:") {
            let coeffs: Vec<f64> = list
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(format!("bad coefficient in `{text}`")))?;
            if coeffs.is_empty() {
                return Err(bad("poly needs at least one coefficient".into()));
            }
            return Ok(Transform::Polynomial(coeffs));
        }
        Err(bad(format!(
            "`{text}` is not hermite:m, poly:a0,a1,..., square or cube"
        )))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Transform::Hermite(m) => hermite_eval(*m, x),
            Transform::Polynomial(coeffs) => coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
            Transform::Pointwise(f) => f(x),
        }
    }

    /// Polynomial degree, or `None` for pointwise transforms.
    pub fn degree(&self) -> Option<u32> {
        match self {
            Transform::Hermite(m) => Some(*m),
            Transform::Polynomial(coeffs) => coeffs
                .iter()
                .rposition(|&c| c != 0.0)
                .map(|d| d as u32)
                .or(Some(0)),
            Transform::Pointwise(_) => None,
        }
    }

    /// Hermite expansion truncated at order `max_order`.
    ///
    /// Polynomial variants convert exactly through the monic Hermite basis;
    /// pointwise variants go through Gauss-Hermite quadrature (nodes doubled
    /// once to flag non-convergence).
    pub fn expand(&self, max_order: u32) -> Result<HermiteExpansion> {
        if max_order < 1 {
            return Err(Error::InvalidParameter {
                name: "max_order",
                reason: "need max_order >= 1".into(),
            });
        }
        match self {
            Transform::Hermite(m) => {
                if *m > max_order {
                    return Err(Error::InvalidParameter {
                        name: "max_order",
                        reason: format!("H_{m} does not fit below truncation {max_order}"),
                    });
                }
                let mut coeffs = vec![0.0; max_order as usize + 1];
                if *m >= 1 {
                    coeffs[*m as usize] = factorial(*m);
                }
                Ok(HermiteExpansion::new(coeffs))
            }
            Transform::Polynomial(monomial) => {
                let degree = self.degree().unwrap_or(0);
                if degree > max_order {
                    return Err(Error::InvalidParameter {
                        name: "max_order",
                        reason: format!(
                            "polynomial degree {degree} exceeds truncation {max_order}"
                        ),
                    });
                }
                let mut coeffs = vec![0.0; max_order as usize + 1];
                // H_m is monic, so peeling leading coefficients converts exactly:
                // the x^m coefficient of the remainder is c_m / m!.
                let mut rest = monomial.clone();
                rest.resize(degree as usize + 1, 0.0);
                for m in (0..=degree).rev() {
                    let lead = rest[m as usize];
                    if lead == 0.0 {
                        continue;
                    }
                    if m >= 1 {
                        coeffs[m as usize] = lead * factorial(m);
                    }
                    let basis = hermite_monomial_coeffs(m);
                    for (slot, b) in rest.iter_mut().zip(&basis) {
                        *slot -= lead * b;
                    }
                }
                Ok(HermiteExpansion::new(coeffs))
            }
            Transform::Pointwise(_) => {
                let coarse = self.quadrature_coeffs(max_order, DEFAULT_QUAD_NODES);
                let fine = self.quadrature_coeffs(max_order, DEFAULT_QUAD_NODES * 2);
                let cmax = fine.iter().fold(0.0f64, |a, c| a.max(c.abs()));
                let converged = coarse.iter().zip(&fine).all(|(a, b)| {
                    (a - b).abs() <= 1e-8 * b.abs() || b.abs() <= SPARSIFY_REL * cmax
                });
                let mut exp = HermiteExpansion::new(fine);
                exp.quadrature_converged = converged;
                Ok(exp)
            }
        }
    }

    /// `c_m = E[H_m(Z) F(Z)]` by Gauss-Hermite quadrature with the `sqrt(2)`
    /// change of variables onto the Gaussian weight.
    fn quadrature_coeffs(&self, max_order: u32, nodes: usize) -> Vec<f64> {
        let rule = gauss_hermite_pairs(nodes);
        let mut coeffs = vec![0.0; max_order as usize + 1];
        let mut hvals = vec![0.0; max_order as usize + 1];
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        for &(t, w) in &rule {
            let x = std::f64::consts::SQRT_2 * t;
            let fx = self.eval(x);
            hermite_sequence(x, &mut hvals);
            for (c, h) in coeffs.iter_mut().zip(&hvals) {
                *c += w * fx * h * inv_sqrt_pi;
            }
        }
        coeffs[0] = 0.0;
        let cmax = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        for c in coeffs.iter_mut() {
            if c.abs() < SPARSIFY_REL * cmax {
                *c = 0.0;
            }
        }
        coeffs
    }
}

/// Gauss-Hermite node/weight pairs for the weight `exp(-t^2)`.
///
/// Nodes are the Golub-Welsch eigenvalues; weights are recomputed through
/// the Christoffel function `w = 1 / sum_{j<n} p_j(t)^2` over the
/// orthonormal polynomials. Eigenvector-based weights are only absolutely
/// accurate (to ~1e-32), which pollutes integrands with polynomial growth
/// at the extreme nodes; the Christoffel route keeps the tiny weights
/// relatively accurate. Supports `n <= 300` before `1/w` overflows.
pub(crate) fn gauss_hermite_pairs(nodes: usize) -> Vec<(f64, f64)> {
    assert!((1..=300).contains(&nodes), "rule size out of range");
    let rule = GaussHermite::new(NonZeroUsize::new(nodes).unwrap());
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(t, _)| {
            let mut prev = 0.0f64;
            let mut cur = std::f64::consts::PI.powf(-0.25);
            let mut sum = cur * cur;
            for j in 0..nodes - 1 {
                let jf = j as f64;
                let next = t * (2.0 / (jf + 1.0)).sqrt() * cur - (jf / (jf + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
                sum += cur * cur;
            }
            (t, 1.0 / sum)
        })
        .collect()
}

/// Monomial coefficients of `H_m`, lowest power first (exact integers).
fn hermite_monomial_coeffs(m: u32) -> Vec<f64> {
    let mut prev = vec![1.0];
    if m == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for j in 1..m {
        // next = x * cur - j * prev
        let mut next = vec![0.0; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &p) in prev.iter().enumerate() {
            next[i] -= j as f64 * p;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficients `c_m(F)` of a centered transform, `m = 1..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    /// `coeffs[m] = c_m`; `coeffs[0]` is always zero.
    coeffs: Vec<f64>,
    /// False when doubling quadrature nodes moved some coefficient by more
    /// than 1e-8 relative; always true for the exact (polynomial) routes.
    pub quadrature_converged: bool,
}

impl HermiteExpansion {
    /// Wrap raw coefficients indexed by order; `coeffs[0]` is forced to zero.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        coeffs[0] = 0.0;
        Self {
            coeffs,
            quadrature_converged: true,
        }
    }

    pub fn max_order(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    /// `c_m`, zero beyond the truncation order.
    pub fn coeff(&self, m: u32) -> f64 {
        self.coeffs.get(m as usize).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Orders with a nonzero coefficient.
    pub fn active_orders(&self) -> impl Iterator<Item = u32> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &c)| c != 0.0)
            .map(|(m, _)| m as u32)
    }

    /// `sum_m c_m^2 / m!`; equals `Var F(Z)` for polynomials inside the truncation.
    pub fn weighted_square_sum(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, &c)| c * c / factorial(m as u32))
            .sum()
    }

    /// Evaluate the truncated expansion `sum_m c_m/m! H_m(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut hvals = vec![0.0; self.coeffs.len()];
        hermite_sequence(x, &mut hvals);
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, &c)| c / factorial(m as u32) * hvals[m])
            .sum()
    }

    /// Variance of the subordinated coefficient at frequency `k`:
    /// `sum_m c_m^2/m! * Chat_{k,m}` over the truncated range.
    pub fn variance_subordinated(&self, powers: &[ConvolvedSpectrum], k: &[i64]) -> Result<f64> {
        let mut total = 0.0;
        for m in self.active_orders() {
            let power = powers
                .get(m as usize - 1)
                .filter(|p| p.order() == m)
                .ok_or(Error::MissingOrder {
                    requested: m,
                    available: powers.len() as u32,
                })?;
            let c = self.coeff(m);
            total += c * c / factorial(m) * power.value_at(k);
        }
        Ok(total)
    }
}
