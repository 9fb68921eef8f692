//! Thin command-line front end over the library runners.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for
//! numerical-budget errors, 1 otherwise.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use torus_chaos::cltcheck::clt_report;
use torus_chaos::convolve::{convolve_power, ConvPath};
use torus_chaos::error::{Error, Result};
use torus_chaos::experiments::{
    self, geometric_ladder, linear_ladder, render_clt_csv, render_moment_csv, ExperimentConfig,
};
use torus_chaos::fieldsim::{default_grid, mc_moments, McConfig};
use torus_chaos::hermite::Transform;
use torus_chaos::kernels::{conjugate_contraction_check, AtomicMeasure, DiscreteKernel};
use torus_chaos::lattice::parse_point;
use torus_chaos::{LatticeBox, Spectrum, SpectrumModel};

#[derive(Parser)]
#[command(
    name = "torus-chaos",
    version,
    about = "Spectral CLT diagnostics for subordinated isotropic fields on the n-torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and save a power spectrum, or validate an existing file
    Spectrum(SpectrumCmd),
    /// Compute a convolution power of a spectrum and dump it
    Convolve(ConvolveCmd),
    /// Evaluate the CLT criteria over a frequency list
    CltCheck(CltCheckCmd),
    /// Hermite-expand a transform
    Expand(ExpandCmd),
    /// Monte Carlo moment estimation for subordinated coefficients
    Simulate(SimulateCmd),
    /// Random sweep of the conjugate-contraction inequality
    KernelVerify(KernelVerifyCmd),
    /// Algebraic-decay case study (the high-frequency CLT fails)
    Example1(Example1Cmd),
    /// Exponential-decay case study (the high-frequency CLT holds)
    Example2(Example2Cmd),
    /// Joined analytic / Monte Carlo validation table
    McValidate(McValidateCmd),
}

#[derive(Args)]
struct SpectrumCmd {
    /// Validate this spectrum file instead of building one
    #[arg(long, conflicts_with_all = ["model", "out"])]
    check: Option<PathBuf>,
    /// Model family: algebraic | exponential
    #[arg(long, required_unless_present = "check")]
    model: Option<String>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 64)]
    cutoff: i64,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Coefficients of h, lowest power first
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    poly: Vec<f64>,
    #[arg(long, required_unless_present = "check")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvolveCmd {
    #[arg(long)]
    spectrum: PathBuf,
    /// Convolution order m
    #[arg(long)]
    order: u32,
    /// auto | direct | fft
    #[arg(long, default_value = "auto")]
    path: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CltCheckCmd {
    #[arg(long)]
    spectrum: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    orders: Vec<u32>,
    /// Frequencies, comma separated; n-d points as k1:k2:...
    #[arg(long, value_delimiter = ',')]
    freqs: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    /// Also evaluate a general transform and emit its report as JSON
    #[arg(long)]
    transform: Option<String>,
    /// Tail split order for the general-transform report
    #[arg(long, default_value_t = 2)]
    split_order: u32,
    /// Where the JSON report goes (stdout when omitted)
    #[arg(long, requires = "transform")]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpandCmd {
    /// hermite:m | poly:a0,a1,... | square | cube
    #[arg(long)]
    transform: String,
    #[arg(long, default_value_t = 12)]
    max_order: u32,
    /// Write the coefficients as JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateCmd {
    #[arg(long)]
    spectrum: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    orders: Vec<u32>,
    /// Optional extra transform, reported as order 0
    #[arg(long)]
    transform: Option<String>,
    #[arg(long, value_delimiter = ',')]
    freqs: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    #[arg(long)]
    seed: u64,
    /// Grid points per axis; default: smallest exact grid
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct KernelVerifyCmd {
    #[arg(long, default_value_t = 4)]
    atoms: usize,
    #[arg(long, default_value_t = 2)]
    order: u32,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Optional CSV of per-trial norms
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LadderArgs {
    /// First frequency of the ladder
    #[arg(long, default_value_t = 8)]
    freq_start: i64,
    /// Number of ladder points
    #[arg(long, default_value_t = 7)]
    freq_count: usize,
    /// Use a linear ladder with this step instead of doubling
    #[arg(long)]
    linear_step: Option<i64>,
}

impl LadderArgs {
    fn build(&self) -> Vec<Vec<i64>> {
        match self.linear_step {
            Some(step) => linear_ladder(self.freq_start, step, self.freq_count),
            None => geometric_ladder(self.freq_start, self.freq_count),
        }
    }
}

#[derive(Args)]
struct Example1Cmd {
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 2048)]
    cutoff: i64,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    orders: Vec<u32>,
    #[command(flatten)]
    ladder: LadderArgs,
    #[arg(long, required_unless_present = "from_manifest")]
    out: Option<PathBuf>,
    /// Rerun a recorded configuration
    #[arg(long)]
    from_manifest: Option<PathBuf>,
}

#[derive(Args)]
struct Example2Cmd {
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    poly: Vec<f64>,
    #[arg(long, default_value_t = 512)]
    cutoff: i64,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    orders: Vec<u32>,
    #[command(flatten)]
    ladder: LadderArgs,
    #[arg(long, required_unless_present = "from_manifest")]
    out: Option<PathBuf>,
    /// Rerun a recorded configuration
    #[arg(long)]
    from_manifest: Option<PathBuf>,
}

#[derive(Args)]
struct McValidateCmd {
    /// Model family: algebraic | exponential
    #[arg(long, default_value = "exponential")]
    model: String,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    poly: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    cutoff: i64,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    orders: Vec<u32>,
    #[command(flatten)]
    ladder: LadderArgs,
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    #[arg(long, required_unless_present = "from_manifest")]
    seed: Option<u64>,
    #[arg(long)]
    grid: Option<usize>,
    /// Keep the raw spectrum mass instead of normalizing to unit variance
    #[arg(long)]
    raw_mass: bool,
    #[arg(long, required_unless_present = "from_manifest")]
    out: Option<PathBuf>,
    /// Rerun a recorded configuration
    #[arg(long)]
    from_manifest: Option<PathBuf>,
}

fn parse_model(
    family: &str,
    cmd_alpha: f64,
    scale: f64,
    theta: f64,
    poly: &[f64],
) -> Result<SpectrumModel> {
    match family {
        "algebraic" => Ok(SpectrumModel::algebraic(cmd_alpha, scale)),
        "exponential" => Ok(SpectrumModel::exponential(theta, poly.to_vec())),
        other => Err(Error::InvalidParameter {
            name: "model",
            reason: format!("`{other}` is not algebraic or exponential"),
        }),
    }
}

fn parse_freqs(texts: &[String], dim: usize) -> Result<Vec<Vec<i64>>> {
    if texts.is_empty() {
        return Err(Error::InvalidParameter {
            name: "freqs",
            reason: "need at least one frequency".into(),
        });
    }
    texts.iter().map(|t| parse_point(t, dim)).collect()
}

fn parse_path(text: &str) -> Result<ConvPath> {
    match text {
        "auto" => Ok(ConvPath::Auto),
        "direct" => Ok(ConvPath::Direct),
        "fft" => Ok(ConvPath::Fft),
        other => Err(Error::InvalidParameter {
            name: "path",
            reason: format!("`{other}` is not auto, direct or fft"),
        }),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Spectrum(cmd) => {
            if let Some(path) = cmd.check {
                let spectrum = Spectrum::load(&path)?;
                let violations = spectrum.validate();
                if violations.is_empty() {
                    println!(
                        "{}: ok ({} points)",
                        path.display(),
                        spectrum.values().len()
                    );
                } else {
                    for v in &violations {
                        println!("{v}");
                    }
                    std::process::exit(1);
                }
                return Ok(());
            }
            let model = parse_model(
                cmd.model.as_deref().unwrap(),
                cmd.alpha,
                cmd.scale,
                cmd.theta,
                &cmd.poly,
            )?;
            let spectrum = Spectrum::build(model, LatticeBox::new(cmd.dim, cmd.cutoff)?)?;
            let out = cmd.out.unwrap();
            spectrum.save(&out)?;
            println!(
                "wrote {} (dim {}, cutoff {}, mass {})",
                out.display(),
                cmd.dim,
                cmd.cutoff,
                spectrum.total_mass()
            );
            Ok(())
        }
        Command::Convolve(cmd) => {
            let spectrum = Spectrum::load(&cmd.spectrum)?;
            let powers = convolve_power(&spectrum, cmd.order, parse_path(&cmd.path)?)?;
            let top = powers.last().unwrap();
            top.save(&cmd.out)?;
            println!(
                "wrote {} (order {}, support cutoff {}, mass {})",
                cmd.out.display(),
                top.order(),
                top.lattice_box().cutoff(),
                top.total_mass()
            );
            Ok(())
        }
        Command::CltCheck(cmd) => {
            let spectrum = Spectrum::load(&cmd.spectrum)?;
            let freqs = parse_freqs(&cmd.freqs, spectrum.dim())?;
            let max_order = *cmd.orders.iter().max().ok_or(Error::InvalidParameter {
                name: "orders",
                reason: "need at least one order".into(),
            })?;
            let powers = convolve_power(&spectrum, max_order, ConvPath::Auto)?;
            let mut diagnostics = Vec::new();
            for &m in &cmd.orders {
                diagnostics.extend(clt_report(&powers, &freqs, m)?);
            }
            std::fs::write(&cmd.out, render_clt_csv(&diagnostics))?;
            println!("wrote {}", cmd.out.display());
            if let Some(text) = &cmd.transform {
                let expansion = Transform::parse(text)?.expand(max_order)?;
                let report = torus_chaos::cltcheck::general_transform_report(
                    &powers,
                    &expansion,
                    &freqs,
                    cmd.split_order,
                )?;
                let json = serde_json::to_string_pretty(&report)?;
                match &cmd.report_out {
                    Some(path) => {
                        std::fs::write(path, json)?;
                        println!("wrote {}", path.display());
                    }
                    None => println!("{json}"),
                }
            }
            Ok(())
        }
        Command::Expand(cmd) => {
            let expansion = Transform::parse(&cmd.transform)?.expand(cmd.max_order)?;
            let json = serde_json::json!({
                "coeffs": expansion.coeffs(),
                "quadrature_converged": expansion.quadrature_converged,
            });
            match cmd.out {
                Some(path) => {
                    std::fs::write(&path, serde_json::to_string_pretty(&json)?)?;
                    println!("wrote {}", path.display());
                }
                None => println!("{}", serde_json::to_string_pretty(&json)?),
            }
            Ok(())
        }
        Command::Simulate(cmd) => {
            let spectrum = Spectrum::load(&cmd.spectrum)?;
            let freqs = parse_freqs(&cmd.freqs, spectrum.dim())?;
            let transform = cmd.transform.as_deref().map(Transform::parse).transpose()?;
            let band = cmd
                .orders
                .iter()
                .copied()
                .max()
                .unwrap_or(1)
                .max(transform.as_ref().and_then(|t| t.degree()).unwrap_or(1));
            let cfg = McConfig {
                reps: cmd.reps,
                seed: cmd.seed,
                grid: cmd
                    .grid
                    .unwrap_or_else(|| default_grid(spectrum.cutoff(), band)),
            };
            let report = mc_moments(&spectrum, &cmd.orders, transform.as_ref(), &freqs, &cfg)?;
            std::fs::write(&cmd.out, render_moment_csv(&report))?;
            println!(
                "wrote {} (reps {}, grid {}, exact {})",
                cmd.out.display(),
                report.reps,
                report.grid,
                report.exact
            );
            Ok(())
        }
        Command::KernelVerify(cmd) => {
            let measure = std::sync::Arc::new(AtomicMeasure::uniform(cmd.atoms)?);
            let mut csv = String::from("trial,q,conj_norm_sq,plain_norm_sq,holds\n");
            let mut violations = 0u64;
            for trial in 0..cmd.trials {
                let mut rng = ChaCha8Rng::seed_from_u64(cmd.seed);
                rng.set_stream(trial);
                let g = DiscreteKernel::random_symmetric(cmd.order, measure.clone(), &mut rng)?;
                for q in 1..cmd.order {
                    let check = conjugate_contraction_check(&g, q)?;
                    if !check.holds {
                        violations += 1;
                    }
                    csv.push_str(&format!(
                        "{trial},{q},{},{},{}\n",
                        check.conj_norm_sq, check.plain_norm_sq, check.holds
                    ));
                }
            }
            if let Some(path) = cmd.out {
                std::fs::write(&path, csv)?;
                println!("wrote {}", path.display());
            }
            let checks = cmd.trials * (cmd.order - 1) as u64;
            println!("conjugate-contraction inequality: {checks} checks, {violations} violations");
            if violations > 0 {
                std::process::exit(1);
            }
            Ok(())
        }
        Command::Example1(cmd) => {
            let config = match &cmd.from_manifest {
                Some(path) => experiments::load_manifest(path)?.config,
                None => ExperimentConfig {
                    model: SpectrumModel::algebraic(cmd.alpha, cmd.scale),
                    dim: 1,
                    cutoff: cmd.cutoff,
                    orders: cmd.orders.clone(),
                    freqs: cmd.ladder.build(),
                    mc: None,
                    normalize: false,
                    output: cmd.out.clone().unwrap(),
                },
            };
            let table = experiments::run_example1(&config)?;
            println!(
                "wrote {} and {}",
                table.output.display(),
                table.manifest.display()
            );
            Ok(())
        }
        Command::Example2(cmd) => {
            let config = match &cmd.from_manifest {
                Some(path) => experiments::load_manifest(path)?.config,
                None => ExperimentConfig {
                    model: SpectrumModel::exponential(cmd.theta, cmd.poly.clone()),
                    dim: 1,
                    cutoff: cmd.cutoff,
                    orders: cmd.orders.clone(),
                    freqs: cmd.ladder.build(),
                    mc: None,
                    normalize: false,
                    output: cmd.out.clone().unwrap(),
                },
            };
            let table = experiments::run_example2(&config)?;
            println!(
                "wrote {} and {}",
                table.output.display(),
                table.manifest.display()
            );
            Ok(())
        }
        Command::McValidate(cmd) => {
            let config = match &cmd.from_manifest {
                Some(path) => experiments::load_manifest(path)?.config,
                None => {
                    let model =
                        parse_model(&cmd.model, cmd.alpha, cmd.scale, cmd.theta, &cmd.poly)?;
                    let band = cmd.orders.iter().copied().max().unwrap_or(1);
                    ExperimentConfig {
                        model,
                        dim: 1,
                        cutoff: cmd.cutoff,
                        orders: cmd.orders.clone(),
                        freqs: cmd.ladder.build(),
                        mc: Some(McConfig {
                            reps: cmd.reps,
                            seed: cmd.seed.unwrap(),
                            grid: cmd.grid.unwrap_or_else(|| default_grid(cmd.cutoff, band)),
                        }),
                        normalize: !cmd.raw_mass,
                        output: cmd.out.clone().unwrap(),
                    }
                }
            };
            let table = experiments::run_mc_validation(&config)?;
            println!(
                "wrote {} and {}",
                table.output.display(),
                table.manifest.display()
            );
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
