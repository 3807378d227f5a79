//! Command-line runner for the Gaussian thermal-state MPO construction and
//! its imaginary-time TEBD benchmark.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gaussmpo::bench::{
    compare, exact_oracle, run_gaussian, run_tebd, ExperimentConfig, Model, Scheme,
};
use gaussmpo::chain::{chain_coefficients, SpectralDensity};
use gaussmpo::circuit::Decomposition;
use gaussmpo::gaussian::{min_local_dim, normal_mode_decompose, ThermalSpec};
use gaussmpo::mpo::CompressionConfig;

#[derive(Parser)]
#[command(
    name = "gaussmpo",
    about = "MPO construction of Gaussian thermal states, benchmarked against imaginary-time TEBD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit TEDOPA chain coefficients (k, omega_k, t_k) as CSV.
    ChainMap {
        #[arg(long, default_value_t = 1.0)]
        omega_c: f64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Build a thermal state with the Gaussian circuit construction.
    Construct(RunArgs),
    /// Build a thermal state by imaginary-time TEBD.
    Tebd(TebdArgs),
    /// Dense-oracle moments of a model thermal state.
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        beta_resc: f64,
        #[arg(long, default_value_t = 6)]
        m_local: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Smallest bosonic local dimension meeting a moment-accuracy target.
    MinDim {
        #[arg(long, default_value_t = 1.0)]
        omega_c: f64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long)]
        beta_resc: f64,
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
    },
    /// Run a list of configs from a JSON file and summarize as CSV.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Model kind: spin-boson or ising.
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    omega_c: f64,
    #[arg(long, default_value_t = 1.2)]
    lambda: f64,
}

impl ModelArgs {
    fn build(&self) -> Result<Model> {
        match self.model.as_str() {
            "spin-boson" | "spin_boson" => {
                Ok(Model::SpinBoson { omega_c: self.omega_c, n: self.n })
            }
            "ising" => Ok(Model::Ising { lambda: self.lambda, n: self.n }),
            other => bail!("unknown model '{other}' (expected spin-boson or ising)"),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; command-line flags are ignored when present.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    beta_resc: f64,
    #[arg(long, default_value_t = 6)]
    m_local: usize,
    /// Mesh decomposition: reck or clements.
    #[arg(long, default_value = "reck")]
    decomposition: String,
    #[arg(long, default_value_t = 1e-7)]
    eps_rel: f64,
    #[arg(long)]
    r_max: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cross-check against the dense oracle when dimensions allow.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TebdArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    beta_resc: f64,
    #[arg(long, default_value_t = 6)]
    m_local: usize,
    /// Suzuki-Trotter order: 1, 2 or 4.
    #[arg(long, default_value_t = 2)]
    order: u8,
    /// Imaginary-time step size.
    #[arg(long, default_value_t = 1e-2)]
    dt: f64,
    #[arg(long, default_value_t = 1e-7)]
    eps_rel: f64,
    #[arg(long)]
    r_max: Option<usize>,
    /// Relative truncation for the propagator gates themselves.
    #[arg(long)]
    gate_eps_rel: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_report(report: &gaussmpo::bench::Report, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), report.to_json()?)?;
    fs::write(out.join("bonds.csv"), report.bonds_csv())?;
    println!(
        "eps_m = {:.3e}, eps_gamma_rel = {:.3e}, fpos = {}, max bond = {}",
        report.eps_m, report.eps_gamma_rel, report.fpo_total, report.max_bond
    );
    if let Some(oracle) = &report.oracle {
        println!(
            "oracle: trace distance = {:.3e}, eps_gamma_rel vs dense = {:.3e}",
            oracle.trace_distance, oracle.eps_gamma_rel_dense
        );
    }
    println!("wrote {}", out.join("report.json").display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::ChainMap { omega_c, n, out } => {
            let sd = SpectralDensity::ohmic(omega_c)?;
            let coeffs = chain_coefficients(&sd, n)?;
            let mut csv = String::from("k,omega_k,t_k\n");
            for k in 0..n {
                csv.push_str(&format!("{},{:.12e},{:.12e}\n", k, coeffs.omegas[k], coeffs.ts[k]));
            }
            fs::create_dir_all(&out)?;
            let path = out.join("coeffs.csv");
            fs::write(&path, csv)?;
            println!("wrote {}", path.display());
        }
        Command::Construct(args) => {
            let config = match &args.config {
                Some(path) => load_config(path)?,
                None => ExperimentConfig {
                    model: args.model.build()?,
                    beta_resc: args.beta_resc,
                    m_local: args.m_local,
                    scheme: Scheme::Gaussian {
                        decomposition: match args.decomposition.as_str() {
                            "reck" => Decomposition::Reck,
                            "clements" => Decomposition::Clements,
                            other => bail!("unknown decomposition '{other}'"),
                        },
                    },
                    compression: CompressionConfig::new(args.eps_rel, args.r_max)?,
                    gate_compression: None,
                    seed: args.seed,
                    oracle: args.oracle,
                },
            };
            let report = run_gaussian(&config)?;
            write_report(&report, &args.out)?;
        }
        Command::Tebd(args) => {
            let config = match &args.config {
                Some(path) => load_config(path)?,
                None => ExperimentConfig {
                    model: args.model.build()?,
                    beta_resc: args.beta_resc,
                    m_local: args.m_local,
                    scheme: Scheme::Tebd { order: args.order, dt: args.dt },
                    compression: CompressionConfig::new(args.eps_rel, args.r_max)?,
                    gate_compression: args
                        .gate_eps_rel
                        .map(CompressionConfig::eps_only),
                    seed: args.seed,
                    oracle: args.oracle,
                },
            };
            let report = run_tebd(&config)?;
            write_report(&report, &args.out)?;
        }
        Command::Oracle { model, beta_resc, m_local, out } => {
            let model = model.build()?;
            let h = model.hamiltonian()?;
            let nmd = normal_mode_decompose(&h)?;
            let (beta, _) = gaussmpo::bench::beta_from_rescaled(&nmd, beta_resc);
            let spec = ThermalSpec::new(beta)?;
            let (_, moments) = exact_oracle(&h, &spec, m_local)?;
            let n = h.n_modes();
            let mut rows = Vec::new();
            for i in 0..2 * n {
                for j in 0..2 * n {
                    let z = moments.gamma[(i, j)];
                    rows.push(serde_json::json!({"i": i, "j": j, "re": z.re, "im": z.im}));
                }
            }
            fs::create_dir_all(&out)?;
            let path = out.join("oracle_moments.json");
            fs::write(&path, serde_json::to_string_pretty(&rows)?)?;
            println!("beta = {beta:.6}; wrote {}", path.display());
        }
        Command::MinDim { omega_c, n, beta_resc, eps } => {
            let sd = SpectralDensity::ohmic(omega_c)?;
            let coeffs = chain_coefficients(&sd, n)?;
            let h = gaussmpo::chain::chain_hamiltonian(&coeffs, n, gaussmpo::Species::Bosonic)?;
            let nmd = normal_mode_decompose(&h)?;
            let (beta, _) = gaussmpo::bench::beta_from_rescaled(&nmd, beta_resc);
            let m = min_local_dim(&nmd, &ThermalSpec::new(beta)?, eps)?;
            println!("M = {m}");
        }
        Command::Compare { config, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let configs: Vec<ExperimentConfig> = serde_json::from_str(&text)?;
            let (rows, csv) = compare(&configs)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("summary.csv"), &csv)?;
            // Per-scheme power-law fit of fpos against the sweep variable.
            let mut schemes: Vec<String> = rows.iter().map(|r| r.scheme.clone()).collect();
            schemes.sort();
            schemes.dedup();
            let mut fits = serde_json::Map::new();
            for scheme in schemes {
                let xs: Vec<f64> =
                    rows.iter().filter(|r| r.scheme == scheme).map(|r| r.x).collect();
                let ys: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.scheme == scheme)
                    .map(|r| r.fpo_total as f64)
                    .collect();
                if xs.len() >= 2 {
                    let (alpha, c) = gaussmpo::bench::fit_power_law(&xs, &ys);
                    fits.insert(
                        scheme,
                        serde_json::json!({"exponent": alpha, "prefactor": c}),
                    );
                }
            }
            fs::write(
                out.join("fits.json"),
                serde_json::to_string_pretty(&serde_json::Value::Object(fits))?,
            )?;
            println!("{csv}");
            println!("wrote {} and fits.json", out.join("summary.csv").display());
        }
    }
    Ok(())
}
