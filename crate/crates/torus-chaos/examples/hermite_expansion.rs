//! Hermite expansions of transforms and subordinated variances.
//!
//! ```sh
//! cargo run --example hermite_expansion
//! ```

use torus_chaos::convolve::{convolve_power, ConvPath};
use torus_chaos::hermite::{hermite_eval, Transform};
use torus_chaos::{LatticeBox, Spectrum, SpectrumModel};

fn main() -> torus_chaos::Result<()> {
    println!("probabilists' Hermite values:");
    for (m, x) in [(2u32, 2.0f64), (3, 2.0), (4, 1.5)] {
        println!("  H_{m}({x}) = {}", hermite_eval(m, x));
    }

    // Exact expansion of polynomials: x^3 = H_3 + 3 H_1.
    let cube = Transform::cube().expand(8)?;
    println!(
        "\nx^3 expands with c_1 = {}, c_3 = {}",
        cube.coeff(1),
        cube.coeff(3)
    );

    // Pointwise transforms go through Gauss-Hermite quadrature.
    let soft = Transform::pointwise(|x| x.tanh()).expand(9)?;
    println!(
        "\ntanh(x) expansion (quadrature, converged = {}):",
        soft.quadrature_converged
    );
    for m in soft.active_orders() {
        println!("  c_{m} = {:+.8}", soft.coeff(m));
    }
    // Odd function: even coefficients vanish.
    assert!(soft.active_orders().all(|m| m % 2 == 1));

    // Subordinated variance: sum_m c_m^2/m! Chat_{k,m}.
    let s = Spectrum::build(
        SpectrumModel::exponential_flat(0.5, 1.0),
        LatticeBox::new(1, 32)?,
    )?;
    let powers = convolve_power(&s, 3, ConvPath::Auto)?;
    println!("\nvariance of the cube-transformed coefficient:");
    for k in [4i64, 8, 16] {
        let var = cube.variance_subordinated(&powers, &[k])?;
        let split = (
            9.0 * powers[0].value_at(&[k]),
            6.0 * powers[2].value_at(&[k]),
        );
        println!(
            "  k = {k:>2}: {var:.6e} = 9 C_k ({:.2e}) + 6 Chat_(k,3) ({:.2e})",
            split.0, split.1
        );
    }

    // A weakly perturbed identity, x + eps (x^2 - 1): the simplest quadratic
    // correction to a Gaussian layer. Its expansion carries c_1 = 1 and
    // c_2 = 2 eps, so the coefficient variance splits into a Gaussian piece
    // and an eps^2-weighted second-chaos piece.
    let eps = 0.1;
    let perturbed = Transform::Polynomial(vec![-eps, 1.0, eps]).expand(3)?;
    assert_eq!(perturbed.coeff(1), 1.0);
    assert_eq!(perturbed.coeff(2), 2.0 * eps);
    println!("\nquadratic perturbation x + {eps} (x^2 - 1):");
    for k in [4i64, 16] {
        let var = perturbed.variance_subordinated(&powers, &[k])?;
        let gaussian = powers[0].value_at(&[k]);
        println!(
            "  k = {k:>2}: variance {var:.6e}, second-chaos share {:.4}",
            1.0 - gaussian / var
        );
    }
    Ok(())
}
