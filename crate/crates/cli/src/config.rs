//! Human-editable TOML configuration. Files quote frequencies in MHz (or
//! GHz for the carrier tones), times in microseconds, and dimensionless
//! photon numbers; conversion to angular rad/s and seconds happens here,
//! at the boundary. An empty `[device]` table resolves to the published
//! device numbers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sigmax_sim::measurement::ReadoutModel;
use sigmax_sim::params::{from_mhz, from_us, to_mhz, to_us, DerivedParams, SystemParams};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig2Histograms,
    Fig3PrepSweeps,
    Fig4Jumptrace,
    Supp1aZetaSweep,
    Supp1bFPopulation,
    Supp1cSigmaxEquilibrium,
    Custom,
}

impl Scenario {
    pub fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "fig2_histograms" => Scenario::Fig2Histograms,
            "fig3_prep_sweeps" => Scenario::Fig3PrepSweeps,
            "fig4_jumptrace" => Scenario::Fig4Jumptrace,
            "supp1a_zeta_sweep" => Scenario::Supp1aZetaSweep,
            "supp1b_f_population" => Scenario::Supp1bFPopulation,
            "supp1c_sigmax_equilibrium" => Scenario::Supp1cSigmaxEquilibrium,
            "custom" => Scenario::Custom,
            other => {
                return Err(CliError::Config(format!(
                    "unknown scenario '{other}' (expected fig2_histograms, fig3_prep_sweeps, \
                     fig4_jumptrace, supp1a_zeta_sweep, supp1b_f_population, \
                     supp1c_sigmax_equilibrium, or custom)"
                )))
            }
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Fig2Histograms => "fig2_histograms",
            Scenario::Fig3PrepSweeps => "fig3_prep_sweeps",
            Scenario::Fig4Jumptrace => "fig4_jumptrace",
            Scenario::Supp1aZetaSweep => "supp1a_zeta_sweep",
            Scenario::Supp1bFPopulation => "supp1b_f_population",
            Scenario::Supp1cSigmaxEquilibrium => "supp1c_sigmax_equilibrium",
            Scenario::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Markov,
    Diffusive,
}

impl Engine {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "markov" => Ok(Engine::Markov),
            "diffusive" => Ok(Engine::Diffusive),
            other => Err(CliError::Config(format!(
                "unknown engine '{other}' (expected markov or diffusive)"
            ))),
        }
    }
}

/// On-disk schema; every field optional so an empty file resolves to the
/// published device. Unknown keys are rejected with field-level messages.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    device: RawDevice,
    #[serde(default)]
    readout: RawReadout,
    #[serde(default)]
    scenario: RawScenario,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    omega_c_ghz: Option<f64>,
    omega_q_ghz: Option<f64>,
    chi_mhz: Option<f64>,
    kappa_mhz: Option<f64>,
    omega_rabi_mhz: Option<f64>,
    delta_c_mhz: Option<f64>,
    /// Sideband photon number; mutually exclusive with epsilon_sb_mhz.
    n_sb: Option<f64>,
    epsilon_sb_mhz: Option<f64>,
    /// Readout photon number; mutually exclusive with epsilon_r_mhz.
    n_readout: Option<f64>,
    epsilon_r_mhz: Option<f64>,
    delta_r_mhz: Option<f64>,
    alpha_anh_mhz: Option<f64>,
    t1_us: Option<f64>,
    t2r_us: Option<f64>,
    p_e_thermal: Option<f64>,
    gamma_f_relax_per_us: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReadout {
    t_m_us: Option<f64>,
    eta: Option<f64>,
    gamma_m_mhz: Option<f64>,
    /// Per-quadrature noise deviation in sqrt(photon).
    sigma_noise: Option<f64>,
    /// When set, sigma_noise is recalibrated so the pointer separation is
    /// this many deviations (the published discrimination calibration).
    snr_target: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    out_dir: Option<String>,
    seeds: Option<Vec<u64>>,
    duration_s: Option<f64>,
    omega_rabi_grid_mhz: Option<Vec<f64>>,
    angles_deg: Option<Vec<f64>>,
    bins: Option<usize>,
    engine: Option<String>,
    n_cavity: Option<usize>,
    keep_record: Option<bool>,
}

/// Fully resolved run configuration, all quantities in internal units.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub params: SystemParams,
    pub readout: ReadoutModel,
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub duration: f64,
    /// rad/s grid for the sweep scenarios.
    pub omega_rabi_grid: Vec<f64>,
    /// radians, for the preparation sweeps.
    pub angles: Vec<f64>,
    pub bins: usize,
    pub engine: Engine,
    pub n_cavity: usize,
    pub keep_record: bool,
    /// Separation-over-sigma recalibration target, when requested.
    pub snr_target: Option<f64>,
}

fn default_grid(scenario: Scenario) -> Vec<f64> {
    let mhz: Vec<f64> = match scenario {
        Scenario::Fig2Histograms => vec![0.0, 10.0, 25.0, 45.0, 70.0],
        Scenario::Supp1aZetaSweep => vec![40.0, 55.0, 70.0, 85.0, 100.0],
        Scenario::Supp1bFPopulation | Scenario::Supp1cSigmaxEquilibrium => {
            (1..=10).map(|k| 10.0 * k as f64).collect()
        }
        _ => vec![70.0],
    };
    mhz.into_iter().map(from_mhz).collect()
}

fn default_duration(scenario: Scenario) -> f64 {
    match scenario {
        // long continuous traces for histogram and dwell statistics
        Scenario::Fig2Histograms | Scenario::Fig4Jumptrace | Scenario::Supp1aZetaSweep => 1.0,
        _ => 0.1,
    }
}

fn resolve(raw: &RawConfig) -> CliResult<ScenarioConfig> {
    let mut p = SystemParams::paper_device();
    let dev = &raw.device;
    if let Some(v) = dev.omega_c_ghz {
        p.omega_c = from_mhz(v * 1e3);
    }
    if let Some(v) = dev.omega_q_ghz {
        p.omega_q = from_mhz(v * 1e3);
    }
    if let Some(v) = dev.chi_mhz {
        p.chi = from_mhz(v);
    }
    if let Some(v) = dev.kappa_mhz {
        p.kappa = from_mhz(v);
    }
    if let Some(v) = dev.omega_rabi_mhz {
        p.omega_rabi = from_mhz(v);
    }
    let delta_c = from_mhz(dev.delta_c_mhz.unwrap_or(to_mhz(p.delta_c())));
    p.omega_sb = p.omega_c - delta_c;
    if dev.n_sb.is_some() && dev.epsilon_sb_mhz.is_some() {
        return Err(CliError::Config(
            "device.n_sb and device.epsilon_sb_mhz are mutually exclusive".into(),
        ));
    }
    if let Some(eps) = dev.epsilon_sb_mhz {
        p.epsilon_sb = from_mhz(eps);
    } else {
        // keep the photon number fixed under a changed detuning
        let n_sb = dev.n_sb.unwrap_or(p.steady_state_amplitude().norm_sqr());
        if n_sb < 0.0 {
            return Err(CliError::Config(format!("device.n_sb = {n_sb} < 0")));
        }
        p.epsilon_sb = n_sb.sqrt() * (delta_c * delta_c + p.kappa * p.kappa / 4.0).sqrt();
    }
    // frame-matched qubit pump: Delta_q = -n_sb chi
    p.omega_qp = p.omega_q + p.steady_state_amplitude().norm_sqr() * p.chi;
    if let Some(v) = dev.delta_r_mhz {
        p.delta_r = from_mhz(v);
    }
    if let Some(v) = dev.alpha_anh_mhz {
        p.alpha_anh = from_mhz(v);
    }
    if let Some(v) = dev.t1_us {
        p.t1 = from_us(v);
    }
    if let Some(v) = dev.t2r_us {
        p.t2r = from_us(v);
    }
    if let Some(v) = dev.p_e_thermal {
        p.p_e_thermal = v;
    }
    p.gamma_f_relax = match dev.gamma_f_relax_per_us {
        Some(v) => v * 1e6,
        None => 2.0 / p.t1,
    };
    if dev.n_readout.is_some() && dev.epsilon_r_mhz.is_some() {
        return Err(CliError::Config(
            "device.n_readout and device.epsilon_r_mhz are mutually exclusive".into(),
        ));
    }
    if let Some(eps) = dev.epsilon_r_mhz {
        p.epsilon_r = from_mhz(eps);
    } else if let Some(n_ro) = dev.n_readout {
        if n_ro < 0.0 {
            return Err(CliError::Config(format!("device.n_readout = {n_ro} < 0")));
        }
        let d = DerivedParams::from_params(&p).map_err(CliError::from_core)?;
        let zeta = if d.zeta.is_finite() { d.zeta } else { 0.0 };
        p.epsilon_r =
            n_ro.sqrt() * (zeta * zeta / 4.0 + p.kappa * p.kappa / 4.0 + p.delta_r * p.delta_r)
                .sqrt();
    }
    p.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let mut readout = ReadoutModel::from_params(&p).map_err(|e| CliError::Config(e.to_string()))?;
    let ro = &raw.readout;
    if let Some(v) = ro.t_m_us {
        readout.t_m = from_us(v);
    }
    if let Some(v) = ro.eta {
        readout.eta = v;
    }
    if let Some(v) = ro.gamma_m_mhz {
        readout.gamma_m = from_mhz(v);
    }
    if let Some(v) = ro.sigma_noise {
        readout.sigma_noise = v;
    }
    readout.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(t) = ro.snr_target {
        if !(t > 0.0) {
            return Err(CliError::Config(format!("readout.snr_target = {t} must be > 0")));
        }
    }

    let sc = &raw.scenario;
    let scenario = match &sc.name {
        Some(name) => Scenario::parse(name)?,
        None => Scenario::Custom,
    };
    let seeds = sc.seeds.clone().unwrap_or_else(|| vec![1]);
    if seeds.is_empty() {
        return Err(CliError::Config("scenario.seeds must not be empty".into()));
    }
    let duration = sc.duration_s.unwrap_or_else(|| default_duration(scenario));
    if !(duration > 0.0) {
        return Err(CliError::Config(format!(
            "scenario.duration_s = {duration} must be > 0"
        )));
    }
    let omega_rabi_grid = match &sc.omega_rabi_grid_mhz {
        Some(g) if g.is_empty() => {
            return Err(CliError::Config("scenario.omega_rabi_grid_mhz must not be empty".into()))
        }
        Some(g) => g.iter().map(|&v| from_mhz(v)).collect(),
        None => default_grid(scenario),
    };
    let angles = match &sc.angles_deg {
        Some(g) if g.is_empty() => {
            return Err(CliError::Config("scenario.angles_deg must not be empty".into()))
        }
        Some(g) => g.iter().map(|&v| v.to_radians()).collect(),
        None => (-6..=6).map(|k| (k as f64 * 30.0).to_radians()).collect(),
    };
    let bins = sc.bins.unwrap_or(100);
    if bins < 2 {
        return Err(CliError::Config(format!("scenario.bins = {bins} must be >= 2")));
    }
    let engine = match &sc.engine {
        Some(e) => Engine::parse(e)?,
        None => Engine::Markov,
    };
    let n_cavity = sc.n_cavity.unwrap_or(10);
    if n_cavity < 2 {
        return Err(CliError::Config(format!("scenario.n_cavity = {n_cavity} must be >= 2")));
    }
    // the jump-trace reproduction defaults to the published discrimination
    let snr_target = ro.snr_target.or(match scenario {
        Scenario::Fig4Jumptrace => Some(5.4),
        _ => None,
    });

    Ok(ScenarioConfig {
        params: p,
        readout,
        scenario,
        out_dir: PathBuf::from(sc.out_dir.clone().unwrap_or_else(|| "out".into())),
        seeds,
        duration,
        omega_rabi_grid,
        angles,
        bins,
        engine,
        n_cavity,
        keep_record: sc.keep_record.unwrap_or(false),
        snr_target,
    })
}

/// Command-line flag overrides, applied to the raw schema before
/// resolution so scenario-dependent defaults stay consistent.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub engine: Option<String>,
    pub duration_s: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<String>,
    pub keep_record: Option<bool>,
    pub omega_rabi_mhz: Option<f64>,
    pub bins: Option<usize>,
}

fn apply(raw: &mut RawConfig, ov: &Overrides) {
    if ov.scenario.is_some() {
        raw.scenario.name = ov.scenario.clone();
    }
    if ov.engine.is_some() {
        raw.scenario.engine = ov.engine.clone();
    }
    if ov.duration_s.is_some() {
        raw.scenario.duration_s = ov.duration_s;
    }
    if let Some(seed) = ov.seed {
        raw.scenario.seeds = Some(vec![seed]);
    }
    if ov.out_dir.is_some() {
        raw.scenario.out_dir = ov.out_dir.clone();
    }
    if ov.keep_record.is_some() {
        raw.scenario.keep_record = ov.keep_record;
    }
    if ov.omega_rabi_mhz.is_some() {
        raw.device.omega_rabi_mhz = ov.omega_rabi_mhz;
    }
    if ov.bins.is_some() {
        raw.scenario.bins = ov.bins;
    }
}

/// Load and resolve configuration: optional file, then flag overrides,
/// then paper defaults for everything else.
pub fn load(path: Option<&Path>, ov: &Overrides) -> CliResult<ScenarioConfig> {
    let mut raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("config schema: {e}")))?
        }
        None => RawConfig::default(),
    };
    apply(&mut raw, ov);
    resolve(&raw)
}

pub fn load_config(path: &Path) -> CliResult<ScenarioConfig> {
    load(Some(path), &Overrides::default())
}

pub fn parse_config(text: &str) -> CliResult<ScenarioConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| CliError::Config(format!("config schema: {e}")))?;
    resolve(&raw)
}

pub fn default_config() -> ScenarioConfig {
    resolve(&RawConfig::default()).expect("paper defaults are valid")
}

/// Serialize the resolved configuration back to the file schema with every
/// field explicit, so loading the output reproduces the same resolution.
pub fn save_config(cfg: &ScenarioConfig) -> String {
    let p = &cfg.params;
    let raw = RawConfig {
        device: RawDevice {
            omega_c_ghz: Some(to_mhz(p.omega_c) / 1e3),
            omega_q_ghz: Some(to_mhz(p.omega_q) / 1e3),
            chi_mhz: Some(to_mhz(p.chi)),
            kappa_mhz: Some(to_mhz(p.kappa)),
            omega_rabi_mhz: Some(to_mhz(p.omega_rabi)),
            delta_c_mhz: Some(to_mhz(p.delta_c())),
            n_sb: None,
            epsilon_sb_mhz: Some(to_mhz(p.epsilon_sb)),
            n_readout: None,
            epsilon_r_mhz: Some(to_mhz(p.epsilon_r)),
            delta_r_mhz: Some(to_mhz(p.delta_r)),
            alpha_anh_mhz: Some(to_mhz(p.alpha_anh)),
            t1_us: Some(to_us(p.t1)),
            t2r_us: Some(to_us(p.t2r)),
            p_e_thermal: Some(p.p_e_thermal),
            gamma_f_relax_per_us: Some(p.gamma_f_relax / 1e6),
        },
        readout: RawReadout {
            t_m_us: Some(to_us(cfg.readout.t_m)),
            eta: Some(cfg.readout.eta),
            gamma_m_mhz: Some(to_mhz(cfg.readout.gamma_m)),
            sigma_noise: Some(cfg.readout.sigma_noise),
            snr_target: cfg.snr_target,
        },
        scenario: RawScenario {
            name: Some(cfg.scenario.as_str().to_string()),
            out_dir: Some(cfg.out_dir.display().to_string()),
            seeds: Some(cfg.seeds.clone()),
            duration_s: Some(cfg.duration),
            omega_rabi_grid_mhz: Some(cfg.omega_rabi_grid.iter().map(|&w| to_mhz(w)).collect()),
            angles_deg: Some(cfg.angles.iter().map(|a| a.to_degrees()).collect()),
            bins: Some(cfg.bins),
            engine: Some(
                match cfg.engine {
                    Engine::Markov => "markov",
                    Engine::Diffusive => "diffusive",
                }
                .to_string(),
            ),
            n_cavity: Some(cfg.n_cavity),
            keep_record: Some(cfg.keep_record),
        },
    };
    toml::to_string_pretty(&raw).expect("config serializes")
}
