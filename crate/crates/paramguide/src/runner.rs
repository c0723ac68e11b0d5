//! Computation drivers behind the CLI subcommands: deterministic CSV/JSON
//! emission, per-run manifests, and the closed-form-vs-oracle verification
//! suite.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::correlations::{self, DetectionWindows, KernelPath};
use crate::error::{Error, Result};
use crate::fock;
use crate::model::{
    angular_to_thz, thz_to_angular, DeviceConfig, ModeLabel, SpectralGrid,
};
use crate::oracle;
use crate::qpump::{self, BandGrid, BroadbandRegime};
use crate::spectral;

/// Fixed 17-significant-digit scientific formatting; reruns of the same
/// computation produce byte-identical artifacts.
pub fn format_sci17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Cap rayon parallelism from PARAMGUIDE_THREADS (0 or unset = automatic).
/// Safe to call more than once; later calls are no-ops.
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var("PARAMGUIDE_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

/// Reproducibility record written next to every artifact set.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub subcommand: String,
    pub flags: BTreeMap<String, String>,
    pub artifact_paths: Vec<String>,
    pub wall_time_s: f64,
    pub version: String,
    /// Free-form numeric side results (regime parameters and similar).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_manifest_beside(artifact: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let dir = artifact.parent().unwrap_or_else(|| Path::new(""));
    write_manifest_in(dir, manifest)
}

fn write_manifest_in(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let file = std::fs::File::create(&path)?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.write_all(b"\n")?;
    Ok(path)
}

fn new_manifest(
    subcommand: &str,
    config_bytes: &[u8],
    flags: BTreeMap<String, String>,
) -> RunManifest {
    RunManifest {
        config_hash: sha256_hex(config_bytes),
        subcommand: subcommand.to_string(),
        flags,
        artifact_paths: Vec::new(),
        wall_time_s: 0.0,
        version: env!("CARGO_PKG_VERSION").to_string(),
        notes: BTreeMap::new(),
    }
}

// ---------------------------------------------------------------------------
// spectrum / sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SpectrumOpts {
    pub config: PathBuf,
    pub length_cm: f64,
    pub nu_min_thz: f64,
    pub nu_max_thz: f64,
    pub samples: usize,
    pub out: PathBuf,
}

fn spectrum_csv(cfg: &DeviceConfig, length: f64, grid: SpectralGrid, out: &Path) -> Result<()> {
    let spec = spectral::FluxSpectrum::compute(grid, length, cfg)?;
    let file = std::fs::File::create(out)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "nu_thz,signal_density,noise_te_density,noise_tm_density")?;
    for (i, &nu) in spec.grid.detunings.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            format_sci17(angular_to_thz(nu)),
            format_sci17(spec.signal[i]),
            format_sci17(spec.noise_te[i]),
            format_sci17(spec.noise_tm[i]),
        )?;
    }
    Ok(())
}

pub fn run_spectrum(opts: &SpectrumOpts) -> Result<RunManifest> {
    let t0 = Instant::now();
    let config_bytes = std::fs::read(&opts.config)?;
    let cfg = DeviceConfig::from_json_str(std::str::from_utf8(&config_bytes).map_err(|e| {
        Error::Config(format!("config is not valid UTF-8: {e}"))
    })?)?;
    let grid = SpectralGrid::uniform(
        thz_to_angular(opts.nu_min_thz),
        thz_to_angular(opts.nu_max_thz),
        opts.samples,
    )?;
    spectrum_csv(&cfg, opts.length_cm, grid, &opts.out)?;

    let mut flags = BTreeMap::new();
    flags.insert("config".into(), opts.config.display().to_string());
    flags.insert("length-cm".into(), opts.length_cm.to_string());
    flags.insert("nu-min-thz".into(), opts.nu_min_thz.to_string());
    flags.insert("nu-max-thz".into(), opts.nu_max_thz.to_string());
    flags.insert("samples".into(), opts.samples.to_string());
    flags.insert("out".into(), opts.out.display().to_string());
    let mut manifest = new_manifest("spectrum", &config_bytes, flags);
    manifest.artifact_paths.push(opts.out.display().to_string());
    manifest.wall_time_s = t0.elapsed().as_secs_f64();
    write_manifest(&opts.out, &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone)]
pub struct SweepOpts {
    pub config: PathBuf,
    pub lengths_cm: Vec<f64>,
    pub nu_min_thz: f64,
    pub nu_max_thz: f64,
    pub samples: usize,
    pub out_dir: PathBuf,
}

pub fn run_sweep(opts: &SweepOpts) -> Result<RunManifest> {
    let t0 = Instant::now();
    if opts.lengths_cm.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one length".into()));
    }
    let config_bytes = std::fs::read(&opts.config)?;
    let cfg = DeviceConfig::from_json_str(std::str::from_utf8(&config_bytes).map_err(|e| {
        Error::Config(format!("config is not valid UTF-8: {e}"))
    })?)?;
    std::fs::create_dir_all(&opts.out_dir)?;

    let mut artifacts = Vec::new();
    for &l in &opts.lengths_cm {
        if !(l > 0.0) {
            return Err(Error::InvalidParameter(format!("bad sweep length {l}")));
        }
        let grid = SpectralGrid::uniform(
            thz_to_angular(opts.nu_min_thz),
            thz_to_angular(opts.nu_max_thz),
            opts.samples,
        )?;
        let out = opts.out_dir.join(format!("spectrum_L{l:.6}.csv"));
        spectrum_csv(&cfg, l, grid, &out)?;
        artifacts.push(out.display().to_string());
    }

    let mut flags = BTreeMap::new();
    flags.insert("config".into(), opts.config.display().to_string());
    flags.insert(
        "lengths".into(),
        opts.lengths_cm
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    flags.insert("nu-min-thz".into(), opts.nu_min_thz.to_string());
    flags.insert("nu-max-thz".into(), opts.nu_max_thz.to_string());
    flags.insert("samples".into(), opts.samples.to_string());
    flags.insert("out-dir".into(), opts.out_dir.display().to_string());
    let mut manifest = new_manifest("sweep", &config_bytes, flags);
    manifest.artifact_paths = artifacts;
    manifest.wall_time_s = t0.elapsed().as_secs_f64();
    write_manifest(&opts.out_dir.join("x"), &manifest)?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// correlation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CorrelationOpts {
    pub config: PathBuf,
    pub length_cm: f64,
    pub center_thz: f64,
    pub width_thz: f64,
    pub tau_min_ps: f64,
    pub tau_max_ps: f64,
    pub samples: usize,
    pub out: PathBuf,
}

pub fn run_correlation(opts: &CorrelationOpts) -> Result<RunManifest> {
    let t0 = Instant::now();
    let config_bytes = std::fs::read(&opts.config)?;
    let cfg = DeviceConfig::from_json_str(std::str::from_utf8(&config_bytes).map_err(|e| {
        Error::Config(format!("config is not valid UTF-8: {e}"))
    })?)?;
    if opts.samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 tau samples".into()));
    }
    let windows = DetectionWindows::new(
        thz_to_angular(opts.center_thz),
        thz_to_angular(opts.width_thz),
    )?;

    use rayon::prelude::*;
    let n = opts.samples;
    let rows: Vec<(f64, correlations::CorrelationResult)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let tau_ps = opts.tau_min_ps
                + (opts.tau_max_ps - opts.tau_min_ps) * i as f64 / (n - 1) as f64;
            let r = correlations::theta(
                windows,
                opts.length_cm,
                tau_ps * 1e-12,
                &cfg,
                KernelPath::LowGain,
            )?;
            Ok((tau_ps, r))
        })
        .collect::<Result<_>>()?;

    let file = std::fs::File::create(&opts.out)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "tau_ps,theta,K,D_te,D_tm")?;
    for (tau_ps, r) in &rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            format_sci17(*tau_ps),
            format_sci17(r.theta),
            format_sci17(r.k),
            format_sci17(r.d_te),
            format_sci17(r.d_tm),
        )?;
    }
    drop(w);

    let mut flags = BTreeMap::new();
    flags.insert("config".into(), opts.config.display().to_string());
    flags.insert("length-cm".into(), opts.length_cm.to_string());
    flags.insert("center-thz".into(), opts.center_thz.to_string());
    flags.insert("width-thz".into(), opts.width_thz.to_string());
    flags.insert("tau-min-ps".into(), opts.tau_min_ps.to_string());
    flags.insert("tau-max-ps".into(), opts.tau_max_ps.to_string());
    flags.insert("samples".into(), opts.samples.to_string());
    flags.insert("out".into(), opts.out.display().to_string());
    let mut manifest = new_manifest("correlation", &config_bytes, flags);
    manifest.artifact_paths.push(opts.out.display().to_string());
    if rows.iter().any(|(_, r)| r.noise_band_warning) {
        manifest.notes.insert(
            "noise_band_warning".into(),
            "detection window encroaches on the Langevin noise band".into(),
        );
    }
    manifest.wall_time_s = t0.elapsed().as_secs_f64();
    write_manifest(&opts.out, &manifest)?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// qpump
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpumpMode {
    TwoBand,
    NBand,
    Asymptotic,
}

impl std::str::FromStr for QpumpMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-band" => Ok(Self::TwoBand),
            "n-band" => Ok(Self::NBand),
            "asymptotic" => Ok(Self::Asymptotic),
            other => Err(Error::InvalidParameter(format!(
                "unknown qpump mode '{other}' (expected two-band|n-band|asymptotic)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpumpOpts {
    pub config: PathBuf,
    pub bands: usize,
    pub band_width_thz: f64,
    pub z_max_cm: f64,
    pub steps: usize,
    pub mode: QpumpMode,
    pub out: PathBuf,
}

pub fn run_qpump(opts: &QpumpOpts) -> Result<RunManifest> {
    let t0 = Instant::now();
    let config_bytes = std::fs::read(&opts.config)?;
    let cfg = DeviceConfig::from_json_str(std::str::from_utf8(&config_bytes).map_err(|e| {
        Error::Config(format!("config is not valid UTF-8: {e}"))
    })?)?;
    if cfg.coupling_big_g <= 0.0 {
        return Err(Error::Config(
            "qpump needs coupling.G_sqrt_s_per_cm > 0 in the config".into(),
        ));
    }
    let band_width = thz_to_angular(opts.band_width_thz);
    let mut notes = BTreeMap::new();

    let file = std::fs::File::create(&opts.out)?;
    let mut w = std::io::BufWriter::new(file);
    match opts.mode {
        QpumpMode::TwoBand => {
            // Two contiguous bands at +-band_width/2; closed-form Rabi solution.
            let grid = BandGrid::uniform(2, band_width)?;
            let nu = grid.nu_values[1];
            let dinv = 1.0 / cfg.tm.group_velocity - 1.0 / cfg.te.group_velocity;
            let delta = nu * dinv;
            writeln!(w, "z_cm,abs_cp_sq,sum_cw_sq,cw_re_0,cw_im_0,cw_re_1,cw_im_1")?;
            let n = opts.steps.max(2);
            let mut k_r = 0.0;
            for i in 0..=n {
                let z = opts.z_max_cm * i as f64 / n as f64;
                let s = qpump::two_band_closed_form(delta, cfg.big_g(), grid.q0, z)?;
                k_r = s.k_r;
                let sum_cw = s.c_w1.norm_sqr() + s.c_w2.norm_sqr();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    format_sci17(z),
                    format_sci17(s.c_p.norm_sqr()),
                    format_sci17(sum_cw),
                    format_sci17(s.c_w1.re),
                    format_sci17(s.c_w1.im),
                    format_sci17(s.c_w2.re),
                    format_sci17(s.c_w2.im),
                )?;
            }
            notes.insert("k_r_per_cm".into(), format_sci17(k_r));
            let (lin, quad) = qpump::pump_depletion_estimates(k_r, opts.z_max_cm);
            notes.insert("depletion_linear_reading".into(), format_sci17(lin));
            notes.insert("depletion_quadratic_reading".into(), format_sci17(quad));
        }
        QpumpMode::NBand => {
            let grid = BandGrid::uniform(opts.bands, band_width)?;
            let record = (opts.steps / 400).max(1);
            let traj =
                qpump::propagate_amplitudes(&grid, &cfg, opts.z_max_cm, opts.steps, None, record)?;
            let nb = grid.nu_values.len();
            let mut header = String::from("z_cm,abs_cp_sq,sum_cw_sq");
            for i in 0..nb {
                header.push_str(&format!(",cw_re_{i},cw_im_{i}"));
            }
            writeln!(w, "{header}")?;
            for s in &traj {
                let sum_cw: f64 = s.c_w.iter().map(|c| c.norm_sqr()).sum();
                let mut line = format!(
                    "{},{},{}",
                    format_sci17(s.z),
                    format_sci17(s.c_p.norm_sqr()),
                    format_sci17(sum_cw)
                );
                for c in &s.c_w {
                    line.push_str(&format!(",{},{}", format_sci17(c.re), format_sci17(c.im)));
                }
                writeln!(w, "{line}")?;
            }
        }
        QpumpMode::Asymptotic => {
            let total = band_width * opts.bands as f64;
            let rep = qpump::broadband_regime(&cfg, total)?;
            notes.insert("alpha".into(), format_sci17(rep.alpha));
            notes.insert("rabi_wavenumber".into(), format_sci17(rep.rabi_wavenumber));
            notes.insert(
                "decay_exponent_half".into(),
                format_sci17(rep.decay_exponent_half),
            );
            notes.insert(
                "decay_exponent_full".into(),
                format_sci17(rep.decay_exponent_full),
            );
            writeln!(w, "z_cm,abs_cp_sq,sum_cw_sq")?;
            let n = opts.steps.max(2);
            for i in 0..=n {
                let z = opts.z_max_cm * i as f64 / n as f64;
                let cp_sq = match rep.regime {
                    BroadbandRegime::Rabi => (rep.rabi_wavenumber * z).cos().powi(2),
                    BroadbandRegime::Decay => (-2.0 * rep.decay_exponent_half * z).exp(),
                    BroadbandRegime::Intermediate => {
                        return Err(Error::UnsupportedRegime(format!(
                            "alpha = {:.3} is between the asymptotic limits; run mode n-band",
                            rep.alpha
                        )))
                    }
                };
                writeln!(
                    w,
                    "{},{},{}",
                    format_sci17(z),
                    format_sci17(cp_sq),
                    format_sci17(1.0 - cp_sq),
                )?;
            }
        }
    }
    drop(w);

    let mut flags = BTreeMap::new();
    flags.insert("config".into(), opts.config.display().to_string());
    flags.insert("bands".into(), opts.bands.to_string());
    flags.insert("band-width-thz".into(), opts.band_width_thz.to_string());
    flags.insert("z-max-cm".into(), opts.z_max_cm.to_string());
    flags.insert("steps".into(), opts.steps.to_string());
    flags.insert(
        "mode".into(),
        match opts.mode {
            QpumpMode::TwoBand => "two-band",
            QpumpMode::NBand => "n-band",
            QpumpMode::Asymptotic => "asymptotic",
        }
        .to_string(),
    );
    flags.insert("out".into(), opts.out.display().to_string());
    let mut manifest = new_manifest("qpump", &config_bytes, flags);
    manifest.artifact_paths.push(opts.out.display().to_string());
    manifest.notes = notes;
    manifest.wall_time_s = t0.elapsed().as_secs_f64();
    write_manifest(&opts.out, &manifest)?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// ivp
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct IvpOpts {
    /// |M|/hbar in 1/s.
    pub m_abs_per_s: f64,
    pub m_arg_rad: f64,
    pub t_int_s: f64,
    pub n_max: usize,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct IvpAmplitude {
    n: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct IvpOutput {
    convention: &'static str,
    squeeze_r: f64,
    squeeze_arg_rad: f64,
    leak: f64,
    amplitudes: Vec<IvpAmplitude>,
}

pub fn run_ivp(opts: &IvpOpts) -> Result<RunManifest> {
    let t0 = Instant::now();
    let m = Complex64::from_polar(opts.m_abs_per_s * opts.t_int_s, opts.m_arg_rad);
    let state = fock::evolve_pair(m, opts.n_max)?;
    let out = IvpOutput {
        convention: "first-order state |0> + i (t/hbar) M |1,1>; Arg C_1 = pi/2 + Arg M",
        squeeze_r: m.norm(),
        squeeze_arg_rad: m.arg(),
        leak: state.leak,
        amplitudes: state
            .amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| IvpAmplitude {
                n,
                re: c.re,
                im: c.im,
            })
            .collect(),
    };
    let file = std::fs::File::create(&opts.out)?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &out)?;
    w.write_all(b"\n")?;
    drop(w);

    let mut flags = BTreeMap::new();
    flags.insert("m-abs".into(), opts.m_abs_per_s.to_string());
    flags.insert("m-arg".into(), opts.m_arg_rad.to_string());
    flags.insert("t-int-s".into(), opts.t_int_s.to_string());
    flags.insert("nmax".into(), opts.n_max.to_string());
    flags.insert("out".into(), opts.out.display().to_string());
    let mut manifest = new_manifest("ivp", b"", flags);
    manifest.artifact_paths.push(opts.out.display().to_string());
    manifest.wall_time_s = t0.elapsed().as_secs_f64();
    write_manifest(&opts.out, &manifest)?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct VerifyCase {
    pub case: String,
    pub max_rel_err: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m < floor {
        0.0
    } else {
        (a - b).abs() / m
    }
}

fn random_device(rng: &mut ChaCha8Rng) -> DeviceConfig {
    let mut cfg = crate::model::reference_device();
    // Waveguide SPDC devices are group-matched to within a few percent;
    // sample the mismatch accordingly (both signs).
    cfg.te.group_velocity = rng.gen_range(5.0e9..1.2e10);
    let ratio = rng.gen_range(0.004f64..0.06);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    cfg.tm.group_velocity = cfg.te.group_velocity * (1.0 + sign * ratio);
    cfg.te.field_loss = rng.gen_range(0.0..8.0);
    cfg.tm.field_loss = rng.gen_range(0.0..8.0);
    cfg.coupling_g = rng.gen_range(0.01..1.2);
    cfg.coupling_phase = rng.gen_range(-3.0..3.0);
    cfg.phase_mismatch_dk = rng.gen_range(-5.0..5.0);
    cfg
}

/// Integration step that keeps the fixed-step RK4 comfortably inside the
/// 1e-8 comparison budget at large detunings: phase advance per step below
/// 0.01 rad of the factored system, capped at L/4096.
fn oracle_step(cfg: &DeviceConfig, nu: f64, length: f64) -> f64 {
    let a_max = 0.5 * crate::model::phase_mismatch_d(nu, cfg).abs()
        + 0.5 * (cfg.gamma_te() - cfg.gamma_tm()).abs()
        + cfg.coupling_g
        + 0.5 * cfg.phase_mismatch_dk.abs();
    (length / 4096.0).min(0.01 / a_max.max(1.0))
}

/// Criterion-style randomized sweep: closed-form signal and noise spectral
/// densities against the transfer-matrix and second-moment integrations.
/// Returns (worst signal error, worst noise error) over `cases` draws.
pub fn closed_vs_oracle_sweep(cases: usize, seed: u64) -> Result<(f64, f64)> {
    use rayon::prelude::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(DeviceConfig, f64, f64)> = (0..cases)
        .map(|_| {
            let cfg = random_device(&mut rng);
            let nu = thz_to_angular(rng.gen_range(-8.0..8.0));
            let l = rng.gen_range(0.005..0.5);
            (cfg, nu, l)
        })
        .collect();
    let errs: Vec<(f64, f64)> = draws
        .par_iter()
        .map(|(cfg, nu, l)| {
            let step = oracle_step(cfg, *nu, *l);
            let peak = spectral::signal_flux_density(0.0, *l, cfg);
            let s_closed = spectral::signal_flux_density(*nu, *l, cfg);
            let s_oracle = oracle::signal_flux_from_transfer(*nu, *l, cfg, step)?;
            let es = rel_err(s_closed, s_oracle, 1e-14 * peak.max(1e-300));
            let (nte_c, ntm_c) = spectral::noise_flux_density(*nu, *l, cfg)?;
            let (nte_o, ntm_o) = oracle::noise_flux_quadrature(*nu, *l, cfg, 0.0, step)?;
            let en = rel_err(nte_c, nte_o, 1e-14 * peak.max(1e-300))
                .max(rel_err(ntm_c, ntm_o, 1e-14 * peak.max(1e-300)));
            Ok((es, en))
        })
        .collect::<Result<_>>()?;
    let worst_sig = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let worst_noise = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok((worst_sig, worst_noise))
}

/// Adjudicate the broadband decay exponent: propagate an alpha >> 1
/// N-band system (in scaled units) and fit the exponential window.
/// Returns (kappa_fit, kappa_half, kappa_full).
pub fn adjudicate_decay_exponent() -> Result<(f64, f64, f64)> {
    // Scaled system: |1/v_TM - 1/v_TE| = 1 s/cm, |G| = 1 s^(1/2)/cm,
    // alpha = sqrt(total width) = 20. The exponent candidates are then
    // 1/2 and 1. The prefactor question is dimensionless, so this scaled
    // run settles it for every physical configuration.
    let mut cfg = crate::model::reference_device();
    cfg.te.group_velocity = 1.0 / 1.5; // 1/v_TE - 1/v_TM... set below
    cfg.tm.group_velocity = 1.0 / 2.5; // 1/v_TM - 1/v_TE = 1
    cfg.coupling_big_g = 1.0;
    let alpha: f64 = 20.0;
    let total_width = alpha * alpha;
    let n_bands = 4001;
    let grid = BandGrid::uniform(n_bands, total_width / n_bands as f64)?;
    let rep = qpump::broadband_regime(&cfg, total_width)?;
    if rep.regime != BroadbandRegime::Decay {
        return Err(Error::WrongRegime(format!(
            "adjudication needs alpha >> 1, got {}",
            rep.alpha
        )));
    }
    let z_max = 6.0 / rep.decay_exponent_full.max(rep.decay_exponent_half) * 1.2;
    let traj = qpump::propagate_amplitudes(&grid, &cfg, z_max, 24000, None, 40)?;
    let fit = qpump::fit_decay_exponent(&traj)?;
    Ok((
        fit.kappa,
        rep.decay_exponent_half,
        rep.decay_exponent_full,
    ))
}

/// Run the full closed-form-vs-oracle suite. Families mirror the module
/// cross-checks; the report is written as JSON when `out` is given.
pub fn run_verify(out: Option<&Path>, cases: usize) -> Result<Vec<VerifyCase>> {
    let mut report = Vec::new();
    let cfg = crate::model::reference_device();

    // 1. randomized closed form vs oracle
    let (es, en) = closed_vs_oracle_sweep(cases, 0x5eed_cafe)?;
    report.push(VerifyCase {
        case: "signal_flux_closed_vs_transfer".into(),
        max_rel_err: es,
        pass: es <= 1e-8,
        note: None,
    });
    report.push(VerifyCase {
        case: "noise_flux_closed_vs_quadrature".into(),
        max_rel_err: en,
        pass: en <= 1e-8,
        note: None,
    });

    // 2. commutator sum rule with losses
    let mut worst = 0.0f64;
    for &nu_thz in &[0.0, 0.8, 3.0, 6.0] {
        let s = oracle::commutator_sum(thz_to_angular(nu_thz), 0.2, &cfg, 0.2 / 4096.0)?;
        worst = worst.max((s - 1.0).abs());
    }
    report.push(VerifyCase {
        case: "commutator_sum_rule".into(),
        max_rel_err: worst,
        pass: worst <= 1e-8,
        note: None,
    });

    // 3. Wick moments vs correlation closed forms at the device windows
    let windows = DetectionWindows::new(thz_to_angular(6.0), thz_to_angular(0.3))?;
    let d_closed =
        correlations::fluctuation_d(ModeLabel::Te, windows, 0.1, &cfg, KernelPath::LowGain)?
            .value;
    let k_closed = correlations::correlation_k(windows, 0.1, 0.0, &cfg, KernelPath::LowGain)?
        .value;
    let (k_o, d_te_o, d_tm_o) =
        oracle::wick_fourth_moment(windows.center, windows.width, 0.1, 0.0, &cfg, 4096)?;
    let ew = rel_err(k_o, k_closed, 1e-300)
        .max(rel_err(d_te_o, d_closed, 1e-300))
        .max(rel_err(d_tm_o, d_closed, 1e-300));
    report.push(VerifyCase {
        case: "wick_moments_vs_correlations".into(),
        max_rel_err: ew,
        pass: ew <= 1e-6,
        note: None,
    });

    // 4. two-band closed form vs the N-band integrator
    let mut cfg_q = cfg.clone();
    cfg_q.coupling_big_g = 3e-11;
    let nu = thz_to_angular(0.5);
    let grid = BandGrid::two_band(nu, thz_to_angular(1.0))?;
    let dinv = 1.0 / cfg_q.tm.group_velocity - 1.0 / cfg_q.te.group_velocity;
    let delta = nu * dinv;
    let k_r = (delta * delta + 2.0 * grid.q0 * cfg_q.coupling_big_g.powi(2)).sqrt();
    let traj = qpump::propagate_amplitudes(
        &grid,
        &cfg_q,
        2.0 * std::f64::consts::PI / k_r,
        4000,
        None,
        200,
    )?;
    let mut e2b = 0.0f64;
    for s in &traj {
        let c = qpump::two_band_closed_form(delta, cfg_q.big_g(), grid.q0, s.z)?;
        e2b = e2b.max((s.c_p - c.c_p).norm());
        e2b = e2b.max((s.c_w[1] - c.c_w1).norm());
        e2b = e2b.max((s.c_w[0] - c.c_w2).norm());
    }
    report.push(VerifyCase {
        case: "two_band_closed_vs_ode".into(),
        max_rel_err: e2b,
        pass: e2b <= 1e-9,
        note: None,
    });

    // 5. decay-exponent adjudication (factor-2 question)
    let (kappa_fit, half, full) = adjudicate_decay_exponent()?;
    let e_half = rel_err(kappa_fit, half, 1e-300);
    let e_full = rel_err(kappa_fit, full, 1e-300);
    let winner = if e_half <= 0.02 && e_full > 0.02 {
        Some("half: kappa = |G|^2 / (2 |1/v_TM - 1/v_TE|)".to_string())
    } else if e_full <= 0.02 && e_half > 0.02 {
        Some("full: kappa = |G|^2 / |1/v_TM - 1/v_TE|".to_string())
    } else {
        None
    };
    report.push(VerifyCase {
        case: "broadband_decay_exponent".into(),
        max_rel_err: e_half.min(e_full),
        pass: winner.is_some(),
        note: winner.map(|w| format!("winner {w}; fit {kappa_fit:.6}")),
    });

    // 6. Fock evolution vs the tanh law
    let m = Complex64::from_polar(1.0, 0.4);
    let st = fock::evolve_pair(m, 60)?;
    let law = fock::tanh_law_amplitudes(m, 60);
    let ef = st
        .amplitudes
        .iter()
        .zip(law.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    report.push(VerifyCase {
        case: "fock_tanh_law".into(),
        max_rel_err: ef,
        pass: ef <= 1e-10,
        note: None,
    });

    if let Some(path) = out {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &report)?;
        w.write_all(b"\n")?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci17_formatting_is_fixed_width_precision() {
        assert_eq!(format_sci17(1.0), "1.0000000000000000e0");
        assert_eq!(format_sci17(-0.25), "-2.5000000000000000e-1");
    }

    #[test]
    fn verify_report_smoke() {
        // tiny case count; full runs live in the acceptance suite
        let report = run_verify(None, 4).unwrap();
        assert!(report.len() >= 6);
        for c in &report {
            assert!(c.pass, "family {} failed: {:.3e}", c.case, c.max_rel_err);
        }
    }
}
