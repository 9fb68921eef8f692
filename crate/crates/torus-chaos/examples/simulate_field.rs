//! Draw the Gaussian layer, synthesize the field, subordinate it, and
//! estimate moments across seeded replications.
//!
//! ```sh
//! cargo run --release --example simulate_field
//! ```

use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use torus_chaos::convolve::{convolve_power, ConvPath};
use torus_chaos::fieldsim::{
    default_grid, draw_coefficients, mc_moments, subordinated_coefficients, synthesize, McConfig,
    StatKind,
};
use torus_chaos::hermite::{factorial, Transform};
use torus_chaos::{LatticeBox, Spectrum, SpectrumModel};

fn main() -> torus_chaos::Result<()> {
    // Unit-mass spectrum: the synthesized field has unit variance.
    let s = Spectrum::build(
        SpectrumModel::exponential_flat(0.5, 1.0),
        LatticeBox::new(1, 32)?,
    )?
    .normalized()?;

    // One replication end to end.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let draw = draw_coefficients(&s, &mut rng);
    let grid = default_grid(s.cutoff(), 3);
    let sample = synthesize(&draw, grid)?;
    println!(
        "one draw on a {grid}-point grid: amplitude {:.4}, imaginary residual {:.2e}",
        sample.amplitude(),
        sample.imag_residual()
    );
    let sub = subordinated_coefficients(&sample, &Transform::Hermite(2), &[vec![12], vec![-12]])?;
    println!(
        "  a~_12(H_2) = {:.6}, a~_(-12)(H_2) = conj: {}",
        sub.values[0],
        sub.values[1] == sub.values[0].conj()
    );

    // Moment estimation: the variance identity E|a~_k(H_m)|^2 = m! Chat_{k,m}.
    let powers = convolve_power(&s, 3, ConvPath::Auto)?;
    let freqs: Vec<Vec<i64>> = vec![vec![8], vec![16], vec![32]];
    let cfg = McConfig {
        reps: 4000,
        seed: 42,
        grid,
    };
    let report = mc_moments(&s, &[1, 2, 3], None, &freqs, &cfg)?;
    println!(
        "\nvariance identity over {} replications (grid-exact: {}):",
        cfg.reps, report.exact
    );
    println!("  freq  m   estimate       analytic       deviation/SE");
    for freq in &freqs {
        for m in 1..=3u32 {
            let row = report.find(freq, m, StatKind::AbsSq).unwrap();
            let want = factorial(m) * powers[m as usize - 1].value_at(freq);
            println!(
                "  {:>4} {:>2}   {:.6e}   {:.6e}   {:+.2}",
                freq[0],
                m,
                row.estimate,
                want,
                (row.estimate - want) / row.stderr
            );
        }
    }

    // Cross-order orthogonality: coefficients of different chaos orders are
    // uncorrelated.
    let cross = report.find(&[16], 2, StatKind::CrossReRe(3)).unwrap();
    println!(
        "\ncross-order covariance Re a~(H_2) * Re a~(H_3) at k = 16: {:+.3e} (SE {:.3e})",
        cross.estimate, cross.stderr
    );
    Ok(())
}
