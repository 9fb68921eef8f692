//! Desk-scale reproduction of the decay dichotomy: algebraic spectra stall
//! the CLT criteria, exponential spectra satisfy them, and the Monte Carlo
//! fourth moments agree with the verdicts.
//!
//! ```sh
//! cargo run --release --example spectral_dichotomy
//! ```

use torus_chaos::cltcheck::clt_report;
use torus_chaos::convolve::{convolve_power, ConvPath};
use torus_chaos::fieldsim::{mc_moments, McConfig, StatKind};
use torus_chaos::{LatticeBox, Spectrum, SpectrumModel};

fn main() -> torus_chaos::Result<()> {
    let freqs: Vec<Vec<i64>> = (3..=8).map(|j| vec![1i64 << j]).collect();

    println!("sup/sum ratio at m = 2 along a doubling frequency ladder:\n");
    println!("  freq    algebraic |k|^-2    exponential e^(-|k|/2)");
    let algebraic = Spectrum::build(
        SpectrumModel::algebraic(2.0, 1.0),
        LatticeBox::new(1, 1024)?,
    )?;
    let exponential = Spectrum::build(
        SpectrumModel::exponential_flat(0.5, 1.0),
        LatticeBox::new(1, 1024)?,
    )?;
    let pa = convolve_power(&algebraic, 2, ConvPath::Auto)?;
    let pe = convolve_power(&exponential, 2, ConvPath::Auto)?;
    let ra = clt_report(&pa, &freqs, 2)?;
    let re = clt_report(&pe, &freqs, 2)?;
    for ((freq, a), e) in freqs.iter().zip(&ra).zip(&re) {
        println!(
            "  {:>4}    {:<18.6}  {:<18.6}",
            freq[0], a.rows[0].cond3_ratio, e.rows[0].cond3_ratio
        );
    }
    println!("\n  the algebraic column stalls near 1/(4 zeta(2)) ~ 0.152;");
    println!("  the exponential column halves with every doubling.\n");

    // Monte Carlo fourth moments at k = 64: 3/4 is the complex-Gaussian value.
    let k = vec![64i64];
    let cfg = McConfig {
        reps: 20_000,
        seed: 7,
        grid: 288,
    };
    println!(
        "normalized fourth moments at k = 64, m = 2 ({} reps):",
        cfg.reps
    );
    for (name, model) in [
        ("algebraic  ", SpectrumModel::algebraic(2.0, 1.0)),
        ("exponential", SpectrumModel::exponential_flat(0.5, 1.0)),
    ] {
        let s = Spectrum::build(model, LatticeBox::new(1, 64)?)?.normalized()?;
        let report = mc_moments(&s, &[2], None, std::slice::from_ref(&k), &cfg)?;
        let re4 = report.find(&k, 2, StatKind::Re4Norm).unwrap();
        println!(
            "  {name}: E[(Re a~)^4] = {:.4} +- {:.4}   ({:+.1} SE from 3/4)",
            re4.estimate,
            re4.stderr,
            (re4.estimate - 0.75) / re4.stderr
        );
    }
    Ok(())
}
