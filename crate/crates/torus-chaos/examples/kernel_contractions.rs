//! Discrete chaos-kernel algebra: contractions, the conjugate-contraction
//! inequality, and the spectral kernel that bridges to convolution powers.
//!
//! ```sh
//! cargo run --example kernel_contractions
//! ```

use std::sync::Arc;

use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use torus_chaos::convolve::{convolve_power, ConvPath};
use torus_chaos::kernels::{
    conjugate_contraction_check, contract, spectral_kernel, verify_contraction_norm, AtomicMeasure,
    DiscreteKernel,
};
use torus_chaos::{LatticeBox, Spectrum, SpectrumModel};

fn main() -> torus_chaos::Result<()> {
    // A hand-sized symmetric kernel on two atoms of weight 1/2.
    let measure = Arc::new(AtomicMeasure::new(vec![0.5, 0.5])?);
    let f = DiscreteKernel::from_real(2, measure.clone(), vec![1.0, 2.0, 2.0, 0.0])?;
    let c = contract(&f, &f, 1)?;
    println!("hand kernel: ||f||^2 = {}", f.norm_sq());
    println!("  (f x_1 f)(0,0) = {}", c.value_at(&[0, 0]).re);
    println!("  (f x_1 f)(0,1) = {}", c.value_at(&[0, 1]).re);
    println!("  (f x_1 f)(1,1) = {}", c.value_at(&[1, 1]).re);

    // Random sweep of ||g x_q conj(g)||^2 >= ||g x_q g||^2.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let measure4 = Arc::new(AtomicMeasure::uniform(4)?);
    let mut worst_margin = f64::INFINITY;
    for _ in 0..100 {
        let g = DiscreteKernel::random_symmetric(3, measure4.clone(), &mut rng)?;
        for q in 1..3 {
            let check = conjugate_contraction_check(&g, q)?;
            assert!(check.holds);
            worst_margin = worst_margin.min(check.conj_norm_sq - check.plain_norm_sq);
        }
    }
    println!("\nconjugate-contraction inequality held in 200 checks");
    println!("  smallest margin ||g x conj g||^2 - ||g x g||^2 = {worst_margin:.6}");

    // The spectral kernel's norm reproduces the convolution coefficient.
    let s = Spectrum::build(SpectrumModel::algebraic(2.0, 1.0), LatticeBox::new(1, 3)?)?;
    let powers = convolve_power(&s, 3, ConvPath::Direct)?;
    let h = spectral_kernel(&s, 3, &[2])?;
    println!(
        "\nspectral kernel at m = 3, k = 2 over {} atoms:",
        h.n_atoms()
    );
    println!("  ||h||^2        = {}", h.norm_sq());
    println!("  Chat_(2,3)     = {}", powers[2].value_at(&[2]));

    // Contraction norms of the normalized kernel match the spectral formula.
    for q in [1u32, 2] {
        let check = verify_contraction_norm(&s, 3, &[2], q)?;
        println!(
            "  q = {q}: brute force {:.12e} vs formula {:.12e} (gap {:.2e})",
            check.bruteforce,
            check.formula,
            check.relative_gap()
        );
    }
    Ok(())
}
