//! Property-based invariants over randomized inputs.

use proptest::prelude::*;

use torus_chaos::convolve::{convolve_power, ConvPath};
use torus_chaos::hermite::Transform;
use torus_chaos::lattice::LatticeBox;
use torus_chaos::spectrum::Spectrum;

/// Symmetric nonnegative table from a half-box worth of raw values.
fn table_spectrum(dim: usize, cutoff: i64, raw: &[f64]) -> Spectrum {
    let boxed = LatticeBox::new(dim, cutoff).unwrap();
    let mut values = vec![0.0; boxed.len()];
    let center = boxed.center();
    for idx in center + 1..boxed.len() {
        let v = raw[(idx - center - 1) % raw.len()].abs();
        values[idx] = v;
        values[boxed.len() - 1 - idx] = v;
    }
    Spectrum::from_table(values, boxed).unwrap()
}

/// Gaussian moment `E[Z^n] = (n-1)!!` for even `n`, used as the closed-form
/// oracle for second moments of polynomial transforms.
fn gaussian_moment(n: usize) -> f64 {
    if n % 2 == 1 {
        0.0
    } else {
        (1..=n / 2).map(|j| (2 * j - 1) as f64).product()
    }
}

fn polynomial_variance(coeffs: &[f64]) -> f64 {
    let mut second = 0.0;
    for (i, a) in coeffs.iter().enumerate() {
        for (j, b) in coeffs.iter().enumerate() {
            second += a * b * gaussian_moment(i + j);
        }
    }
    let mean: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| a * gaussian_moment(i))
        .sum();
    second - mean * mean
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_conserves_mass_and_symmetry(
        raw in prop::collection::vec(0.0f64..1.0, 8),
        dim in 1usize..=2,
        cutoff in 1i64..=4,
        m in 1u32..=4,
    ) {
        let s = table_spectrum(dim, cutoff, &raw);
        let powers = convolve_power(&s, m, ConvPath::Auto).unwrap();
        let mass = s.total_mass();
        for p in &powers {
            let want = mass.powi(p.order() as i32);
            prop_assert!((p.total_mass() - want).abs() <= 1e-10 * want.max(1e-12));
            let boxed = p.lattice_box();
            let scale = p.values().iter().fold(0.0f64, |a, &v| a.max(v));
            for idx in 0..boxed.len() {
                let gap = (p.values()[idx] - p.values()[boxed.mirror(idx)]).abs();
                prop_assert!(gap <= 1e-12 * scale.max(1e-300));
            }
        }
    }

    #[test]
    fn fft_and_direct_paths_agree(
        raw in prop::collection::vec(0.0f64..1.0, 8),
        cutoff in 2i64..=8,
        m in 2u32..=3,
    ) {
        let s = table_spectrum(1, cutoff, &raw);
        let direct = convolve_power(&s, m, ConvPath::Direct).unwrap();
        let fft = convolve_power(&s, m, ConvPath::Fft).unwrap();
        for (d, f) in direct.iter().zip(&fft) {
            let scale = d.values().iter().fold(0.0f64, |a, &v| a.max(v)).max(1e-300);
            for (a, b) in d.values().iter().zip(f.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
                // Round-off cleanup leaves the FFT path nonnegative.
                prop_assert!(*b >= 0.0);
            }
        }
    }

    #[test]
    fn table_spectra_round_trip_bit_exactly(
        raw in prop::collection::vec(0.0f64..1.0, 8),
        dim in 1usize..=2,
        cutoff in 1i64..=3,
    ) {
        let s = table_spectrum(dim, cutoff, &raw);
        let dir = std::env::temp_dir().join(format!(
            "torus-chaos-prop-{}-{}",
            std::process::id(),
            rand::random::<u64>()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("spectrum.json");
        s.save(&path).unwrap();
        let back = Spectrum::load(&path).unwrap();
        prop_assert_eq!(s.values(), back.values());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn spectrum_models_evaluate_deterministically(
        alpha in 1.1f64..4.0,
        scale in 0.1f64..5.0,
        cutoff in 1i64..=16,
    ) {
        use torus_chaos::spectrum::SpectrumModel;
        let boxed = LatticeBox::new(1, cutoff).unwrap();
        let a = Spectrum::build(SpectrumModel::algebraic(alpha, scale), boxed).unwrap();
        let b = Spectrum::build(SpectrumModel::algebraic(alpha, scale), boxed).unwrap();
        prop_assert_eq!(a.values(), b.values());
        for k in 1..=cutoff {
            let direct = scale * (k as f64).powf(-alpha);
            prop_assert_eq!(a.value_at(&[k]), direct);
        }
    }

    #[test]
    fn parseval_for_random_polynomials(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..8),
    ) {
        let transform = Transform::Polynomial(coeffs.clone());
        let expansion = transform.expand(12).unwrap();
        let want = polynomial_variance(&coeffs);
        let got = expansion.weighted_square_sum();
        prop_assert!(
            (got - want).abs() <= 1e-10 * want.abs().max(1.0),
            "sum c_m^2/m! = {}, Var F = {}",
            got,
            want
        );
    }
}
