use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sigmax_cli::commands;
use sigmax_cli::config::{self, Overrides};
use sigmax_cli::error::CliResult;

#[derive(Parser)]
#[command(name = "sigmax", version, about = "Continuous sigma-x measurement simulator")]
struct Cli {
    /// TOML configuration file (MHz / us units); defaults to the published
    /// device when omitted
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect resolved parameters
    Params {
        #[command(subcommand)]
        action: ParamsAction,
    },
    /// Golden-rule transition rates and fidelity composition
    Rates {
        /// Override the Rabi drive (MHz)
        #[arg(long)]
        omega_rabi_mhz: Option<f64>,
    },
    /// Steady-state populations of the displaced-frame system
    SteadyState {
        #[arg(long)]
        omega_rabi_mhz: Option<f64>,
        /// Qubit levels in the model (2 or 3)
        #[arg(long, default_value_t = 3)]
        qubit_levels: usize,
    },
    /// Generate a continuous measurement trace and its jump analysis
    Trace {
        /// markov or diffusive (diffusive is limited to 100 us)
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        duration_s: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the full record in binary form
        #[arg(long)]
        keep_record: bool,
    },
    /// Histogram and mixture-fit an existing record file (.csv or .bin)
    Histogram {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        #[arg(long, default_value_t = 2)]
        components: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full analysis of an existing record: fit, zeta, jump filter, dwells
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a figure-preset scenario sweep
    Sweep {
        /// fig2_histograms, fig3_prep_sweeps, fig4_jumptrace,
        /// supp1a_zeta_sweep, supp1b_f_population,
        /// supp1c_sigmax_equilibrium, or custom
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG plots from a run's CSV outputs
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ParamsAction {
    /// Print the resolved device, derived, and readout quantities
    Show,
}

fn run(cli: Cli) -> CliResult<()> {
    let path = cli.config.as_deref();
    match cli.command {
        Command::Params { action: ParamsAction::Show } => {
            let cfg = config::load(path, &Overrides::default())?;
            commands::params_show(&cfg)
        }
        Command::Rates { omega_rabi_mhz } => {
            let cfg = config::load(path, &Overrides { omega_rabi_mhz, ..Default::default() })?;
            commands::rates(&cfg)
        }
        Command::SteadyState { omega_rabi_mhz, qubit_levels } => {
            let cfg = config::load(path, &Overrides { omega_rabi_mhz, ..Default::default() })?;
            commands::steady(&cfg, qubit_levels)
        }
        Command::Trace { engine, duration_s, seed, out, keep_record } => {
            let cfg = config::load(
                path,
                &Overrides {
                    engine,
                    duration_s,
                    seed,
                    out_dir: out.map(|p| p.display().to_string()),
                    keep_record: keep_record.then_some(true),
                    ..Default::default()
                },
            )?;
            let manifest = commands::trace(&cfg)?;
            println!("trace complete, manifest at {}", manifest.display());
            Ok(())
        }
        Command::Histogram { input, bins, components, out } => {
            let cfg = config::load(path, &Overrides::default())?;
            let out = out.unwrap_or_else(|| cfg.out_dir.clone());
            commands::histogram(&input, bins, components, &out, &config::save_config(&cfg))
        }
        Command::Analyze { input, out } => {
            let cfg = config::load(path, &Overrides::default())?;
            let out = out.unwrap_or_else(|| cfg.out_dir.clone());
            commands::analyze(&cfg, &input, &out, &config::save_config(&cfg))
        }
        Command::Sweep { scenario, seed, out } => {
            let cfg = config::load(
                path,
                &Overrides {
                    scenario: Some(scenario),
                    seed,
                    out_dir: out.map(|p| p.display().to_string()),
                    ..Default::default()
                },
            )?;
            commands::sweep(&cfg)
        }
        Command::Plot { input, out } => {
            let out = out.unwrap_or_else(|| input.clone());
            commands::plot(&input, &out)
        }
    }
}

fn main() -> ExitCode {
    // die quietly when the reader of a pipe goes away (e.g. `sigmax rates | head`)
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success; bad flags are config errors
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
