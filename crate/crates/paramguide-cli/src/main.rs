//! paramguide: spectra, correlations, quantized-pump propagation, Fock
//! dynamics, and the self-verification suite, as plot-ready CSV/JSON.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use paramguide::runner::{
    self, CorrelationOpts, IvpOpts, QpumpMode, QpumpOpts, SpectrumOpts, SweepOpts,
};
use paramguide::Error;

#[derive(Parser)]
#[command(
    name = "paramguide",
    version,
    about = "Biphoton generation in dispersive, lossy waveguides",
    long_about = "Closed-form SPDC spectra, flux correlations, quantized-pump state-vector \
                  propagation, and truncated Fock dynamics, each cross-checked against an \
                  independent numerical oracle. Outputs are deterministic CSV/JSON with a \
                  manifest.json per run. PARAMGUIDE_THREADS caps parallelism (0 = auto)."
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Signal and Langevin-noise spectral flux densities over a detuning grid
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Device length in cm (overrides the config value)
        #[arg(long)]
        length_cm: f64,
        #[arg(long, allow_hyphen_values = true)]
        nu_min_thz: f64,
        #[arg(long, allow_hyphen_values = true)]
        nu_max_thz: f64,
        #[arg(long, default_value_t = 2001)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Flux correlation Theta(L, tau) between symmetric detection windows
    Correlation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        length_cm: f64,
        /// Window center detuning delta_omega_0 / 2pi, THz
        #[arg(long)]
        center_thz: f64,
        /// Window width Delta_omega / 2pi, THz
        #[arg(long)]
        width_thz: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau_min_ps: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau_max_ps: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantized single-photon-pump propagation over a discrete band grid
    Qpump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2)]
        bands: usize,
        #[arg(long, default_value_t = 1.0)]
        band_width_thz: f64,
        #[arg(long)]
        z_max_cm: f64,
        #[arg(long, default_value_t = 4000)]
        steps: usize,
        /// two-band | n-band | asymptotic
        #[arg(long, default_value = "two-band")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Initial-value Fock evolution of one signal/idler pair
    Ivp {
        /// |M|/hbar in 1/s
        #[arg(long)]
        m_abs: f64,
        /// Arg M in rad
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        m_arg: f64,
        /// Interaction time in seconds
        #[arg(long)]
        t_int_s: f64,
        #[arg(long, default_value_t = 60)]
        nmax: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form vs oracle verification suite; nonzero exit on failure
    Verify {
        /// Randomized (nu, L, device) cases per flux family
        #[arg(long, default_value_t = 100)]
        cases: usize,
        /// Report path (JSON); defaults to verify_report.json
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectra for several device lengths in one run
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated device lengths in cm
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        nu_min_thz: f64,
        #[arg(long, allow_hyphen_values = true)]
        nu_max_thz: f64,
        #[arg(long, default_value_t = 2001)]
        samples: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Accuracy(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn run() -> Result<(), (u8, String)> {
    let cli = Cli::parse();
    runner::init_thread_pool();
    let fail = |e: Error| (exit_code_for(&e), e.to_string());
    match cli.command {
        Commands::Spectrum {
            config,
            length_cm,
            nu_min_thz,
            nu_max_thz,
            samples,
            out,
        } => {
            runner::run_spectrum(&SpectrumOpts {
                config,
                length_cm,
                nu_min_thz,
                nu_max_thz,
                samples,
                out,
            })
            .map_err(fail)?;
        }
        Commands::Correlation {
            config,
            length_cm,
            center_thz,
            width_thz,
            tau_min_ps,
            tau_max_ps,
            samples,
            out,
        } => {
            let m = runner::run_correlation(&CorrelationOpts {
                config,
                length_cm,
                center_thz,
                width_thz,
                tau_min_ps,
                tau_max_ps,
                samples,
                out,
            })
            .map_err(fail)?;
            if m.notes.contains_key("noise_band_warning") {
                eprintln!("warning: detection window encroaches on the Langevin noise band");
            }
        }
        Commands::Qpump {
            config,
            bands,
            band_width_thz,
            z_max_cm,
            steps,
            mode,
            out,
        } => {
            let mode: QpumpMode = mode.parse().map_err(fail)?;
            runner::run_qpump(&QpumpOpts {
                config,
                bands,
                band_width_thz,
                z_max_cm,
                steps,
                mode,
                out,
            })
            .map_err(fail)?;
        }
        Commands::Ivp {
            m_abs,
            m_arg,
            t_int_s,
            nmax,
            out,
        } => {
            runner::run_ivp(&IvpOpts {
                m_abs_per_s: m_abs,
                m_arg_rad: m_arg,
                t_int_s,
                n_max: nmax,
                out,
            })
            .map_err(fail)?;
        }
        Commands::Verify { cases, out } => {
            let path = out.unwrap_or_else(|| PathBuf::from("verify_report.json"));
            let report = runner::run_verify(Some(&path), cases).map_err(fail)?;
            let mut all_pass = true;
            for c in &report {
                println!(
                    "{}: {} (max_rel_err {:.3e}){}",
                    c.case,
                    if c.pass { "pass" } else { "FAIL" },
                    c.max_rel_err,
                    c.note.as_deref().map(|n| format!(" [{n}]")).unwrap_or_default()
                );
                all_pass &= c.pass;
            }
            if !all_pass {
                return Err((3, "verification suite reported failures".into()));
            }
        }
        Commands::Sweep {
            config,
            lengths,
            nu_min_thz,
            nu_max_thz,
            samples,
            out_dir,
        } => {
            runner::run_sweep(&SweepOpts {
                config,
                lengths_cm: lengths,
                nu_min_thz,
                nu_max_thz,
                samples,
                out_dir,
            })
            .map_err(fail)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
