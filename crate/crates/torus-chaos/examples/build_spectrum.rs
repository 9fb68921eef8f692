//! Build, validate and serialize power spectra.
//!
//! ```sh
//! cargo run --example build_spectrum
//! ```

use torus_chaos::{LatticeBox, Spectrum, SpectrumModel};

fn main() -> torus_chaos::Result<()> {
    // Algebraic decay |k|^-2 on the circle, cutoff 8.
    let algebraic = Spectrum::build(SpectrumModel::algebraic(2.0, 1.0), LatticeBox::new(1, 8)?)?;
    println!("algebraic |k|^-2, K = 8:");
    for k in 0..=4 {
        println!("  C_{k} = {}", algebraic.value_at(&[k]));
    }
    println!("  total mass = {}\n", algebraic.total_mass());

    // Exponential decay with a linear polynomial factor h(l) = 1 + l/4.
    let exponential = Spectrum::build(
        SpectrumModel::exponential(0.5, vec![1.0, 0.25]),
        LatticeBox::new(1, 8)?,
    )?;
    println!("exponential h(l) e^(-l/2), h = 1 + l/4:");
    println!("  C_1 = {}", exponential.value_at(&[1]));
    println!("  C_4 = {}\n", exponential.value_at(&[4]));

    // A 2-d separable exponential spectrum.
    let planar = Spectrum::build(
        SpectrumModel::exponential_flat(0.7, 1.0),
        LatticeBox::new(2, 4)?,
    )?;
    println!(
        "2-d exponential, C at (2, -3) = {}\n",
        planar.value_at(&[2, -3])
    );

    // Validation scans the whole box and reports offending indices.
    let mut broken = algebraic.values().to_vec();
    broken[0] = -0.25; // corner entry, index (-8)
    let boxed = algebraic.lattice_box();
    match Spectrum::from_table(broken, boxed) {
        Err(e) => println!("tampered table rejected: {e}\n"),
        Ok(_) => unreachable!(),
    }

    // Round trip through the JSON file format.
    let dir = std::env::temp_dir();
    let path = dir.join("torus-chaos-example-spectrum.json");
    exponential.save(&path)?;
    let back = Spectrum::load(&path)?;
    assert_eq!(back.values(), exponential.values());
    println!("saved and reloaded {} losslessly", path.display());
    std::fs::remove_file(&path).ok();
    Ok(())
}
