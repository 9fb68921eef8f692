//! Evaluate the high-frequency CLT criteria and the random-walk bridge view.
//!
//! ```sh
//! cargo run --release --example clt_conditions
//! ```

use torus_chaos::cltcheck::{bridge_distribution, clt_report, cond3_ratio};
use torus_chaos::convolve::{convolve_power, ConvPath};
use torus_chaos::{LatticeBox, Spectrum, SpectrumModel};

fn main() -> torus_chaos::Result<()> {
    let freqs: Vec<Vec<i64>> = (3..=7).map(|j| vec![1i64 << j]).collect();

    for (name, model) in [
        (
            "algebraic |k|^-2 (CLT fails)",
            SpectrumModel::algebraic(2.0, 1.0),
        ),
        (
            "exponential e^(-|k|/2) (CLT holds)",
            SpectrumModel::exponential_flat(0.5, 1.0),
        ),
    ] {
        let s = Spectrum::build(model, LatticeBox::new(1, 256)?)?;
        let powers = convolve_power(&s, 3, ConvPath::Auto)?;
        println!("{name}:");
        println!("  freq    m  q  cond2_sum     cond3_ratio   variance");
        for m in [2u32, 3] {
            for diag in clt_report(&powers, &freqs, m)? {
                for row in &diag.rows {
                    println!(
                        "  {:>5} {:>2} {:>2}  {:<12.6e} {:<12.6e} {:.6e}",
                        diag.freq[0],
                        diag.order,
                        row.q,
                        row.cond2_sum,
                        row.cond3_ratio,
                        diag.variance
                    );
                }
            }
        }
        println!();
    }

    // The sup/sum ratio is the largest conditional probability of the
    // spectrum-driven random walk bridge.
    let s = Spectrum::build(
        SpectrumModel::exponential_flat(0.5, 1.0),
        LatticeBox::new(1, 64)?,
    )?;
    let powers = convolve_power(&s, 2, ConvPath::Auto)?;
    let bridge = bridge_distribution(&powers, &[24], 2, 1)?;
    let ratio = cond3_ratio(&powers, &[24], 2, 1)?;
    println!("bridge pinned at Z_2 = 24 (exponential spectrum):");
    println!("  total probability = {}", bridge.total());
    println!("  max bridge probability = {}", bridge.max_prob());
    println!("  cond3 ratio            = {ratio}");
    let mut top: Vec<(Vec<i64>, f64)> = bridge.support().collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("  five most likely midpoints:");
    for (point, p) in top.into_iter().take(5) {
        println!("    Z_1 = {:>3}: {p:.5}", point[0]);
    }
    Ok(())
}
