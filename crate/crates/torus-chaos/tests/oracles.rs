//! Cross-module oracle checks: quantities computed by independent routes
//! must agree.

use torus_chaos::cltcheck::{cond2_sum, general_transform_report};
use torus_chaos::convolve::{convolve_power, ConvPath};
use torus_chaos::fieldsim::{mc_moments, McConfig, StatKind};
use torus_chaos::hermite::Transform;
use torus_chaos::kernels::spectral_kernel;
use torus_chaos::lattice::LatticeBox;
use torus_chaos::spectrum::{Spectrum, SpectrumModel};

/// The subordinated variance of the cube transform against the Monte Carlo
/// estimate of `E|a~_k(F)|^2` from the simulation engine.
#[test]
fn cube_variance_matches_monte_carlo() {
    let s = Spectrum::build(
        SpectrumModel::exponential_flat(0.5, 1.0),
        LatticeBox::new(1, 8).unwrap(),
    )
    .unwrap()
    .normalized()
    .unwrap();
    let powers = convolve_power(&s, 3, ConvPath::Direct).unwrap();
    let cube = Transform::cube();
    let expansion = cube.expand(3).unwrap();
    let analytic = expansion.variance_subordinated(&powers, &[4]).unwrap();

    let cfg = McConfig {
        reps: 20_000,
        seed: 404,
        grid: 54,
    };
    let report = mc_moments(&s, &[], Some(&cube), &[vec![4]], &cfg).unwrap();
    assert!(report.exact);
    let row = report.find(&[4], 0, StatKind::AbsSq).unwrap();
    let gap = (row.estimate - analytic).abs();
    assert!(
        gap <= 5.0 * row.stderr,
        "MC {} vs analytic {analytic} ({} SE)",
        row.estimate,
        gap / row.stderr
    );
}

/// The spectral kernel norm reproduces the convolution coefficient on a 2-d
/// box as well.
#[test]
fn spectral_kernel_norm_bridges_modules_in_2d() {
    let s = Spectrum::build(
        SpectrumModel::exponential_flat(0.8, 1.0),
        LatticeBox::new(2, 1).unwrap(),
    )
    .unwrap();
    let powers = convolve_power(&s, 2, ConvPath::Direct).unwrap();
    for k in [[0i64, 0], [1, 1], [2, 0], [1, -1]] {
        let chat = powers[1].value_at(&k);
        let kernel = spectral_kernel(&s, 2, &k).unwrap();
        assert!(
            (kernel.norm_sq() - chat).abs() <= 1e-12 * chat.max(1e-300),
            "k = {k:?}: kernel {} vs convolution {chat}",
            kernel.norm_sq()
        );
    }
}

/// The contraction-sum criterion agrees between the normalized-kernel route
/// (cond2) and the general-transform variance shares for a pure Hermite
/// input, tying three modules together.
#[test]
fn general_report_consistent_with_cond2_normalization() {
    let s = Spectrum::build(
        SpectrumModel::algebraic(2.0, 1.0),
        LatticeBox::new(1, 24).unwrap(),
    )
    .unwrap();
    let powers = convolve_power(&s, 3, ConvPath::Direct).unwrap();
    let freqs: Vec<Vec<i64>> = vec![vec![6], vec![12], vec![24]];
    let h3 = Transform::Hermite(3).expand(3).unwrap();
    let report = general_transform_report(&powers, &h3, &freqs, 3).unwrap();
    for (i, freq) in freqs.iter().enumerate() {
        // Pure H_3: variance share at order 3 is 1 and cond2 is finite.
        assert!((report.ratios[i][2] - 1.0).abs() <= 1e-12);
        for q in 1..3 {
            let c2 = cond2_sum(&powers, freq, 3, q).unwrap();
            assert!(c2 > 0.0 && c2 <= 1.0 + 1e-12);
        }
    }
}
