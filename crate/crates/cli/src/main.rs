use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oamqkd::bipartite::Averaging;
use oamqkd::entanglement::EntanglementReport;
use oamqkd::link::{LinkBudget, minimal_ell_for_distance};
use oamqkd::qkd::Protocol;
use oamqkd::sweep::{
    default_lags, emit_csv, emit_states_json, run_crosstalk, run_rates_table,
    run_screen_statistics, run_sweep, structure_function_csv, uniform_grid,
};
use oamqkd::tomography::{TomographyRecord, reconstruct};
use oamqkd::{Error, Result, SweepConfig};

/// OAM-qubit QKD through Kolmogorov turbulence.
#[derive(Parser)]
#[command(name = "oamqkd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate phase screens and compare their structure function with theory.
    Screen {
        #[command(flatten)]
        config: ConfigArgs,
        /// Scintillation strength of the screens.
        #[arg(long = "w", default_value_t = 2.0)]
        w: f64,
        #[arg(long = "screens", default_value_t = 500)]
        screens: usize,
    },
    /// Mean coincidence matrix over [-ell_max, ell_max].
    Crosstalk {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "w", default_value_t = 0.0)]
        w: f64,
        #[arg(long = "ell_max", default_value_t = 5)]
        ell_max: i32,
    },
    /// Key rates of E91 and the six-state protocol over a QBER grid.
    Rates {
        #[arg(long = "q_max", default_value_t = 0.2)]
        q_max: f64,
        #[arg(long = "q_step", default_value_t = 0.002)]
        q_step: f64,
        #[arg(long = "output")]
        output: Option<PathBuf>,
    },
    /// QBER, key rates and entanglement over (ell, W).
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Fried parameter, scintillation strength and concurrence decay distance.
    Distance {
        #[arg(long = "wavelength", default_value_t = 710e-9)]
        wavelength: f64,
        #[arg(long = "cn2", default_value_t = 5e-16)]
        cn2: f64,
        #[arg(long = "length", default_value_t = 144e3)]
        length: f64,
        #[arg(long = "w0", default_value_t = 50e-3)]
        w0: f64,
        #[arg(long = "ell", default_value_t = 1)]
        ell: u32,
    },
    /// Reconstruct a density matrix from a 36-row tomography CSV.
    Reconstruct {
        #[arg(long = "input")]
        input: PathBuf,
        #[arg(long = "output")]
        output: Option<PathBuf>,
    },
}

/// Sweep configuration: an optional TOML file, then per-key overrides.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long = "config")]
    config: Option<PathBuf>,
    #[arg(long = "ells", value_delimiter = ',', allow_negative_numbers = true)]
    ells: Option<Vec<i32>>,
    #[arg(long = "w_values", value_delimiter = ',')]
    w_values: Option<Vec<f64>>,
    #[arg(long = "realizations")]
    realizations: Option<usize>,
    #[arg(long = "base_seed")]
    base_seed: Option<u64>,
    #[arg(long = "grid_n")]
    grid_n: Option<usize>,
    #[arg(long = "window")]
    window: Option<f64>,
    #[arg(long = "w0")]
    w0: Option<f64>,
    #[arg(long = "wavelength")]
    wavelength: Option<f64>,
    #[arg(long = "subharmonic_levels")]
    subharmonic_levels: Option<usize>,
    #[arg(long = "protocols", value_delimiter = ',')]
    protocols: Option<Vec<String>>,
    #[arg(long = "averaging")]
    averaging: Option<String>,
    #[arg(long = "bootstrap_resamples")]
    bootstrap_resamples: Option<usize>,
    #[arg(long = "parallel")]
    parallel: Option<bool>,
    #[arg(long = "threads")]
    threads: Option<usize>,
    #[arg(long = "output")]
    output: Option<PathBuf>,
    #[arg(long = "states_output")]
    states_output: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<SweepConfig> {
        let mut c = match &self.config {
            Some(path) => SweepConfig::load(path)?,
            None => SweepConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(
            ells,
            w_values,
            realizations,
            base_seed,
            grid_n,
            window,
            w0,
            wavelength
        );
        set!(subharmonic_levels, bootstrap_resamples, parallel);
        if let Some(p) = &self.protocols {
            c.protocols = p
                .iter()
                .map(|s| s.parse::<Protocol>())
                .collect::<Result<_>>()?;
        }
        if let Some(a) = &self.averaging {
            c.averaging = a.parse::<Averaging>()?;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        if self.output.is_some() {
            c.output = self.output.clone();
        }
        if self.states_output.is_some() {
            c.states_output = self.states_output.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.into(),
            source: e,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Screen { config, w, screens } => {
            let cfg = config.resolve()?;
            let rows = run_screen_statistics(&cfg, w, screens, &default_lags(cfg.grid_n / 8))?;
            write_output(cfg.output.as_deref(), &structure_function_csv(&rows))
        }
        Command::Crosstalk { config, w, ell_max } => {
            let cfg = config.resolve()?;
            let result = run_crosstalk::<f64>(&cfg, w, ell_max)?;
            eprintln!(
                "anti-diagonal fraction: {:.6}",
                result.anti_diagonal_fraction
            );
            write_output(cfg.output.as_deref(), &result.to_csv_string())
        }
        Command::Rates {
            q_max,
            q_step,
            output,
        } => {
            let table = run_rates_table(&uniform_grid(q_max, q_step)?)?;
            write_output(output.as_deref(), &table)
        }
        Command::Sweep { config } => {
            let cfg = config.resolve()?;
            let records = run_sweep::<f64>(&cfg)?;
            if let Some(path) = &cfg.states_output {
                emit_states_json(&records, path)?;
            }
            match &cfg.output {
                Some(path) => emit_csv(&records, path),
                None => write_output(None, &oamqkd::sweep::to_csv_string(&records)?),
            }
        }
        Command::Distance {
            wavelength,
            cn2,
            length,
            w0,
            ell,
        } => {
            let lb = LinkBudget::new(wavelength, cn2, length, w0)?;
            let d = lb.decay_distance(ell)?;
            let min_ell = minimal_ell_for_distance(wavelength, w0, cn2, length)?;
            let mut text = format!(
                "r0 = {:.6e} m\nW = {:.6}\nL_dec(ell = {ell}) = {:.6e} m\nrayleigh_range = {:.6e} m\nminimal_ell_for_length = {min_ell}\n",
                lb.r0, lb.w, d.distance, d.rayleigh_range
            );
            if d.beyond_rayleigh_range {
                text.push_str("warning: L_dec exceeds the Rayleigh range; the single-screen weak-scintillation estimate is not reliable there\n");
            }
            write_output(None, &text)
        }
        Command::Reconstruct { input, output } => {
            let record = TomographyRecord::<f64>::read_csv(&input)?;
            let rho = reconstruct(&record)?;
            let ent = EntanglementReport::evaluate(&rho)?;
            let json = serde_json::json!({
                "rho": rho.to_json(),
                "concurrence": ent.concurrence,
                "eof": ent.eof,
            });
            let text = serde_json::to_string_pretty(&json)
                .map_err(|e| Error::Numerical(e.to_string()))?
                + "\n";
            write_output(output.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
