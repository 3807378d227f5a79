//! Experiment runner: configures the Gaussian construction and the TEBD
//! baseline, cross-checks against the dense oracle where the dimensions
//! allow, and emits machine-readable reports.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bloch_messiah::bloch_messiah;
use crate::chain::{chain_coefficients, chain_hamiltonian, SpectralDensity};
use crate::circuit::{synthesize_circuit, Decomposition};
use crate::fock::{thermal_dense, trace_distance, FockSpace, DIM_CAP};
use crate::gates::{gate_mpo, thermal_product_mpo};
use crate::gaussian::{
    exact_thermal_moments, mean_occupation, normal_mode_decompose, shifted_frequencies,
    HamiltonMatrix, Moments, NormalModeDecomposition, Species, ThermalSpec,
};
use crate::linalg::{c64, frobenius};
use crate::mpo::{
    apply_gate, measure_moments, CompressionConfig, FpoLedger, Mpo,
};
use crate::tebd::{evolve, LocalHamiltonian, TrotterConfig};
use crate::{Error, Result};

/// Benchmark model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// Ohmic spin-boson bath chain after the TEDOPA mapping (bath only).
    SpinBoson { omega_c: f64, n: usize },
    /// Transverse Ising chain in its fermionic quadratic form.
    Ising { lambda: f64, n: usize },
}

impl Model {
    pub fn species(&self) -> Species {
        match self {
            Model::SpinBoson { .. } => Species::Bosonic,
            Model::Ising { .. } => Species::Fermionic,
        }
    }

    pub fn n_modes(&self) -> usize {
        match *self {
            Model::SpinBoson { n, .. } | Model::Ising { n, .. } => n,
        }
    }

    pub fn hamiltonian(&self) -> Result<HamiltonMatrix> {
        match *self {
            Model::SpinBoson { omega_c, n } => {
                let sd = SpectralDensity::ohmic(omega_c)?;
                let coeffs = chain_coefficients(&sd, n)?;
                chain_hamiltonian(&coeffs, n, Species::Bosonic)
            }
            Model::Ising { lambda, n } => ising_hamiltonian(n, lambda),
        }
    }
}

/// Fermionic quadratic form of the transverse Ising chain
/// `sum sigma^z_i + lambda sum sigma^x_i sigma^x_{i+1}`.
pub fn ising_hamiltonian(n: usize, lambda: f64) -> Result<HamiltonMatrix> {
    let alpha = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c64(1.0, 0.0)
        } else if i.abs_diff(j) == 1 {
            c64(lambda / 2.0, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    let zeta = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if j == i + 1 {
            c64(-lambda / 2.0, 0.0)
        } else if i == j + 1 {
            c64(lambda / 2.0, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    crate::gaussian::build_hamilton_matrix(Species::Fermionic, alpha, zeta)
}

/// Preparation scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    Gaussian { decomposition: Decomposition },
    Tebd { order: u8, dt: f64 },
}

/// Full experiment description; also the JSON config format of the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub beta_resc: f64,
    /// Bosonic local Fock dimension (fermions always use 2).
    pub m_local: usize,
    pub scheme: Scheme,
    pub compression: CompressionConfig,
    #[serde(default)]
    pub gate_compression: Option<CompressionConfig>,
    #[serde(default)]
    pub seed: u64,
    /// Run the dense oracle when the truncated dimension allows.
    #[serde(default)]
    pub oracle: bool,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if !(self.beta_resc > 0.0) {
            return Err(Error::InvalidConfig {
                context: format!("beta_resc = {}", self.beta_resc),
            });
        }
        if self.model.species() == Species::Bosonic && self.m_local < 2 {
            return Err(Error::InvalidConfig {
                context: "bosonic runs need m_local >= 2".into(),
            });
        }
        Ok(())
    }
}

/// Bond-dimension trace entry: rank of one bond after one applied gate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BondRecord {
    pub gate_index: usize,
    pub bond_index: usize,
    pub rank: usize,
}

/// Dense-oracle cross-check block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleBlock {
    pub trace_distance: f64,
    pub eps_m_dense: f64,
    pub eps_gamma_rel_dense: f64,
}

/// Machine-readable result of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub beta: f64,
    pub energy_gap: f64,
    pub eps_m: f64,
    pub eps_gamma_rel: f64,
    pub fpo: BTreeMap<String, u64>,
    pub fpo_total: u64,
    pub max_bond: usize,
    pub hermiticity_defect: f64,
    pub wall_time_s: f64,
    pub bond_trace: Vec<BondRecord>,
    pub oracle: Option<OracleBlock>,
}

impl Report {
    /// Canonical JSON (sorted keys) for diffable artifacts.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)?)
    }

    /// CSV rows `(gate_index, bond_index, rank)`.
    pub fn bonds_csv(&self) -> String {
        let mut out = String::from("gate_index,bond_index,rank\n");
        for r in &self.bond_trace {
            out.push_str(&format!("{},{},{}\n", r.gate_index, r.bond_index, r.rank));
        }
        out
    }
}

/// Rescaled inverse temperature: `beta = beta_resc / (2 min d_i)`, the gap
/// between the ground and first excited state of the quadratic spectrum.
pub fn beta_from_rescaled(nmd: &NormalModeDecomposition, beta_resc: f64) -> (f64, f64) {
    let gap = 2.0 * nmd.d[0];
    (beta_resc / gap, gap)
}

fn eps_against(moments: &Moments, exact: &Moments) -> (f64, f64) {
    let eps_m = moments.m.norm();
    let eps_gamma = frobenius(&(&moments.gamma - &exact.gamma)) / frobenius(&exact.gamma);
    (eps_m, eps_gamma)
}

fn ledger_map(ledger: &FpoLedger) -> BTreeMap<String, u64> {
    ledger
        .counters()
        .iter()
        .map(|(k, v)| (serde_json::to_value(k).unwrap().as_str().unwrap().to_string(), *v))
        .collect()
}

fn record_bonds(trace: &mut Vec<BondRecord>, gate_index: usize, rho: &Mpo) {
    for (bond_index, rank) in rho.bond_dims().into_iter().enumerate() {
        trace.push(BondRecord { gate_index, bond_index, rank });
    }
}

fn oracle_block(
    h: &HamiltonMatrix,
    spec: &ThermalSpec,
    m_local: usize,
    rho: &Mpo,
    moments: &Moments,
) -> Result<Option<OracleBlock>> {
    let space = match FockSpace::new(h.species(), h.n_modes(), m_local) {
        Ok(space) => space,
        Err(Error::OracleDimension { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let dense = thermal_dense(&space, h, spec);
    let dense_moments = space.moments(&dense);
    let got = rho.to_dense();
    let got = nalgebra::DMatrix::from_fn(space.dim, space.dim, |i, j| got[[i, j]]);
    let td = trace_distance(&got, &dense);
    let eps_m_dense = (&moments.m - &dense_moments.m).norm();
    let eps_gamma_rel_dense = frobenius(&(&moments.gamma - &dense_moments.gamma))
        / frobenius(&dense_moments.gamma);
    Ok(Some(OracleBlock { trace_distance: td, eps_m_dense, eps_gamma_rel_dense }))
}

/// Run the Gaussian construction pipeline.
pub fn run_gaussian(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let Scheme::Gaussian { decomposition } = config.scheme else {
        return Err(Error::InvalidConfig { context: "scheme is not gaussian".into() });
    };
    let start = Instant::now();
    let species = config.model.species();
    let h = config.model.hamiltonian()?;
    let nmd = normal_mode_decompose(&h)?;
    let (beta, gap) = beta_from_rescaled(&nmd, config.beta_resc);
    let spec = ThermalSpec::new(beta)?;

    let m_local = match species {
        Species::Bosonic => config.m_local,
        Species::Fermionic => 2,
    };
    let mut rho = thermal_product_mpo(&nmd, &spec, m_local)?;
    let factors = bloch_messiah(&nmd)?;
    let populations: Vec<f64> = shifted_frequencies(&nmd, &spec)
        .iter()
        .map(|&d| mean_occupation(species, beta, d))
        .collect();
    let plan = synthesize_circuit(&factors, decomposition, &populations)?;

    let mut ledger = FpoLedger::new();
    let mut bond_trace = Vec::new();
    for (k, gate) in plan.gates.iter().enumerate() {
        let gm = gate_mpo(gate, species, nmd.n_modes, m_local)?;
        rho = apply_gate(&rho, &gm.mpo, &config.compression, &mut ledger)?;
        record_bonds(&mut bond_trace, k, &rho);
    }
    let rho = rho.normalize()?;
    let moments = measure_moments(&rho, species)?;
    let exact = exact_thermal_moments(&nmd, &spec);
    let (eps_m, eps_gamma_rel) = eps_against(&moments, &exact);
    let oracle = if config.oracle {
        oracle_block(&h, &spec, m_local, &rho, &moments)?
    } else {
        None
    };

    Ok(Report {
        config: config.clone(),
        beta,
        energy_gap: gap,
        eps_m,
        eps_gamma_rel,
        fpo: ledger_map(&ledger),
        fpo_total: ledger.total(),
        max_bond: bond_trace.iter().map(|b| b.rank).max().unwrap_or(1),
        hermiticity_defect: rho.hermiticity_defect(),
        wall_time_s: start.elapsed().as_secs_f64(),
        bond_trace,
        oracle,
    })
}

/// Run the imaginary-time TEBD baseline.
pub fn run_tebd(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let Scheme::Tebd { order, dt } = config.scheme else {
        return Err(Error::InvalidConfig { context: "scheme is not tebd".into() });
    };
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig { context: format!("dt = {dt}") });
    }
    let start = Instant::now();
    let species = config.model.species();
    let h = config.model.hamiltonian()?;
    let nmd = normal_mode_decompose(&h)?;
    let (beta, gap) = beta_from_rescaled(&nmd, config.beta_resc);
    let spec = ThermalSpec::new(beta)?;
    let m_local = match species {
        Species::Bosonic => config.m_local,
        Species::Fermionic => 2,
    };

    let lh = LocalHamiltonian::from_hamilton_matrix(&h, m_local)?;
    let dims = vec![lh.local_dim; lh.n_sites];
    let rho0 = Mpo::identity(&dims).normalize()?;
    let n_steps = (beta / dt).ceil().max(1.0) as usize;
    let cfg = TrotterConfig::new(order, n_steps)?;
    let mut ledger = FpoLedger::new();
    let mut bond_trace = Vec::new();
    let mut probe = |op: usize, rho: &Mpo| record_bonds(&mut bond_trace, op, rho);
    let rho = evolve(
        &rho0,
        &lh,
        beta,
        &cfg,
        &config.compression,
        config.gate_compression.as_ref(),
        &mut ledger,
        Some(&mut probe),
    )?;
    let moments = measure_moments(&rho, species)?;
    let exact = exact_thermal_moments(&nmd, &spec);
    let (eps_m, eps_gamma_rel) = eps_against(&moments, &exact);
    let oracle = if config.oracle {
        oracle_block(&h, &spec, m_local, &rho, &moments)?
    } else {
        None
    };

    Ok(Report {
        config: config.clone(),
        beta,
        energy_gap: gap,
        eps_m,
        eps_gamma_rel,
        fpo: ledger_map(&ledger),
        fpo_total: ledger.total(),
        max_bond: bond_trace.iter().map(|b| b.rank).max().unwrap_or(1),
        hermiticity_defect: rho.hermiticity_defect(),
        wall_time_s: start.elapsed().as_secs_f64(),
        bond_trace,
        oracle,
    })
}

/// Dispatch on the scheme.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    match config.scheme {
        Scheme::Gaussian { .. } => run_gaussian(config),
        Scheme::Tebd { .. } => run_tebd(config),
    }
}

/// Dense thermal state and exact moments for external use (`oracle` CLI).
pub fn exact_oracle(
    h: &HamiltonMatrix,
    spec: &ThermalSpec,
    m_local: usize,
) -> Result<(nalgebra::DMatrix<crate::C64>, Moments)> {
    let space = FockSpace::new(h.species(), h.n_modes(), m_local)?;
    if space.dim > DIM_CAP {
        return Err(Error::OracleDimension { dim: space.dim, cap: DIM_CAP });
    }
    let rho = thermal_dense(&space, h, spec);
    let moments = space.moments(&rho);
    Ok((rho, moments))
}

/// One row of a comparison sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub x: f64,
    pub scheme: String,
    pub fpo_total: u64,
    pub eps_m: f64,
    pub eps_gamma_rel: f64,
    pub max_bond: usize,
}

/// Run a list of configs and summarize; `x` is `beta_resc` unless the mode
/// count varies, in which case it is `N`.
pub fn compare(configs: &[ExperimentConfig]) -> Result<(Vec<SummaryRow>, String)> {
    let ns: Vec<usize> = configs.iter().map(|c| c.model.n_modes()).collect();
    let vary_n = ns.windows(2).any(|w| w[0] != w[1]);
    let mut rows = Vec::with_capacity(configs.len());
    for c in configs {
        let report = run(c)?;
        let x = if vary_n { c.model.n_modes() as f64 } else { c.beta_resc };
        let scheme = match c.scheme {
            Scheme::Gaussian { decomposition } => format!("gaussian-{decomposition}"),
            Scheme::Tebd { order, .. } => format!("tebd-{order}"),
        };
        rows.push(SummaryRow {
            x,
            scheme,
            fpo_total: report.fpo_total,
            eps_m: report.eps_m,
            eps_gamma_rel: report.eps_gamma_rel,
            max_bond: report.max_bond,
        });
    }
    let mut csv = String::from("x,scheme,fpo_total,eps_m,eps_gamma_rel,max_bond\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{:.6e},{:.6e},{}\n",
            r.x, r.scheme, r.fpo_total, r.eps_m, r.eps_gamma_rel, r.max_bond
        ));
    }
    Ok((rows, csv))
}

/// Least-squares power-law fit `y = c x^alpha` on the log-log points;
/// returns `(alpha, c)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let alpha = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / lx.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    let c = (my - alpha * mx).exp();
    (alpha, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_config(model: Model, beta_resc: f64, m_local: usize) -> ExperimentConfig {
        ExperimentConfig {
            model,
            beta_resc,
            m_local,
            scheme: Scheme::Gaussian { decomposition: Decomposition::Reck },
            compression: CompressionConfig::eps_only(1e-7),
            gate_compression: None,
            seed: 1,
            oracle: false,
        }
    }

    #[test]
    fn ising_gaussian_run_hits_targets() {
        let mut config = gaussian_config(Model::Ising { lambda: 1.2, n: 6 }, 10.0, 2);
        config.oracle = true;
        let report = run_gaussian(&config).unwrap();
        assert!(report.eps_m < 1e-2, "eps_m = {:.3e}", report.eps_m);
        assert!(report.eps_gamma_rel < 1e-2, "eps_gamma = {:.3e}", report.eps_gamma_rel);
        let oracle = report.oracle.as_ref().unwrap();
        assert!(oracle.trace_distance < 2e-2, "td = {:.3e}", oracle.trace_distance);
        assert!(report.fpo_total > 0);
    }

    #[test]
    fn tebd_ising_run_hits_targets() {
        let config = ExperimentConfig {
            model: Model::Ising { lambda: 1.2, n: 6 },
            beta_resc: 0.1,
            m_local: 2,
            scheme: Scheme::Tebd { order: 2, dt: 1e-2 },
            compression: CompressionConfig::eps_only(1e-7),
            gate_compression: Some(CompressionConfig::eps_only(1e-7)),
            seed: 1,
            oracle: true,
        };
        let report = run_tebd(&config).unwrap();
        assert!(report.eps_m < 1e-2);
        assert!(report.eps_gamma_rel < 1e-2, "eps_gamma = {:.3e}", report.eps_gamma_rel);
        assert!(report.oracle.as_ref().unwrap().trace_distance < 2e-2);
    }

    #[test]
    fn passive_model_plan_has_no_squeezers() {
        let config = gaussian_config(Model::SpinBoson { omega_c: 1.0, n: 4 }, 2.0, 4);
        let h = config.model.hamiltonian().unwrap();
        let nmd = normal_mode_decompose(&h).unwrap();
        let factors = bloch_messiah(&nmd).unwrap();
        assert!(factors.is_passive());
        let pops = vec![0.5, 0.4, 0.3, 0.2];
        let plan = synthesize_circuit(&factors, Decomposition::Reck, &pops).unwrap();
        assert!(plan.gates.iter().all(|g| !matches!(
            g.kind,
            crate::circuit::GateKind::SqueezeSingle { .. }
                | crate::circuit::GateKind::SqueezePair { .. }
        )));
    }

    #[test]
    fn determinism_identical_configs() {
        let config = gaussian_config(Model::Ising { lambda: 1.2, n: 5 }, 1.0, 2);
        let a = run_gaussian(&config).unwrap();
        let b = run_gaussian(&config).unwrap();
        assert_eq!(a.fpo_total, b.fpo_total);
        assert_eq!(a.fpo, b.fpo);
        assert_eq!(a.eps_m.to_bits(), b.eps_m.to_bits());
        assert_eq!(a.eps_gamma_rel.to_bits(), b.eps_gamma_rel.to_bits());
    }

    #[test]
    fn beta_zero_limit_tebd_returns_mixed_state() {
        // Tiny beta_resc: gamma approaches the infinite-temperature value.
        let config = ExperimentConfig {
            model: Model::Ising { lambda: 1.2, n: 4 },
            beta_resc: 1e-6,
            m_local: 2,
            scheme: Scheme::Tebd { order: 1, dt: 1e-6 },
            compression: CompressionConfig::eps_only(1e-10),
            gate_compression: None,
            seed: 0,
            oracle: false,
        };
        let report = run_tebd(&config).unwrap();
        // At infinite temperature every mode is half filled.
        assert!(report.eps_m < 1e-8);
        let h = config.model.hamiltonian().unwrap();
        let nmd = normal_mode_decompose(&h).unwrap();
        let spec = ThermalSpec::new(report.beta).unwrap();
        let exact = exact_thermal_moments(&nmd, &spec);
        for i in 0..4 {
            assert!((exact.gamma[(i, i)].re - 0.5).abs() < 1e-5);
        }
        assert!(report.eps_gamma_rel < 1e-4);
    }

    #[test]
    fn compare_rows_and_power_fit() {
        let configs: Vec<ExperimentConfig> = [4usize, 6]
            .iter()
            .map(|&n| gaussian_config(Model::Ising { lambda: 1.2, n }, 1.0, 2))
            .collect();
        let (rows, csv) = compare(&configs).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(csv.lines().count() == 3);
        assert_eq!(rows[0].x, 4.0);
        // Duplicate configs give identical totals.
        let (rows2, _) = compare(&configs).unwrap();
        assert_eq!(rows[0].fpo_total, rows2[0].fpo_total);

        let (alpha, c) = fit_power_law(&[2.0, 4.0, 8.0], &[4.0, 16.0, 64.0]);
        assert!((alpha - 2.0).abs() < 1e-12);
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_cross_validates_normal_modes() {
        // Dense oracle moments vs the analytic normal-mode expression: two
        // independent paths through the code base.
        let h = ising_hamiltonian(2, 1.2).unwrap();
        let spec = ThermalSpec::new(0.8).unwrap();
        let (_, dense_moments) = exact_oracle(&h, &spec, 2).unwrap();
        let nmd = normal_mode_decompose(&h).unwrap();
        let exact = exact_thermal_moments(&nmd, &spec);
        let defect = frobenius(&(&dense_moments.gamma - &exact.gamma));
        assert!(defect < 1e-10, "defect {defect:.3e}");
    }
}
