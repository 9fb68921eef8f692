//! Small n-dimensional complex DFT built on 1-d `rustfft` plans.
//!
//! Transforms are applied axis by axis on flat row-major buffers. Plans are
//! cached per thread, keyed by length and direction. Both directions are
//! unnormalized, matching the usual convention: callers divide by the grid
//! size where a true inverse is needed.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanCache = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(HashMap::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let direction = if inverse {
                    FftDirection::Inverse
                } else {
                    FftDirection::Forward
                };
                FftPlanner::new().plan_fft(len, direction)
            })
            .clone()
    })
}

/// In-place unnormalized DFT along every axis of a row-major array.
pub(crate) fn ndfft(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    assert_eq!(data.len(), shape.iter().product::<usize>());
    if shape.len() == 1 {
        plan(shape[0], inverse).process(data);
        return;
    }
    for axis in 0..shape.len() {
        let axis_len = shape[axis];
        let stride: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let fft = plan(axis_len, inverse);
        let mut line = vec![Complex64::default(); axis_len];
        for o in 0..outer {
            let block = o * axis_len * stride;
            for s in 0..stride {
                let base = block + s;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, value) in line.iter().enumerate() {
                    data[base + j * stride] = *value;
                }
            }
        }
    }
}

/// Smallest 5-smooth integer not below `n`; efficient FFT lengths.
pub(crate) fn next_fast_len(n: usize) -> usize {
    assert!(n >= 1);
    let mut candidate = n;
    loop {
        let mut rest = candidate;
        for p in [2usize, 3, 5] {
            while rest % p == 0 {
                rest /= p;
            }
        }
        if rest == 1 {
            return candidate;
        }
        candidate += 1;
    }
}

/// Compensated (Kahan) summation; used where mass-conservation checks need
/// better than naive accumulation.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
