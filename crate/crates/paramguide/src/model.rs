//! Physical parameters, units, and the derived quantities every solver consumes.
//!
//! Internal unit system: CGS lengths (cm), time in seconds, angular
//! frequencies in rad/s, energies in erg. Config files accept ordinary
//! frequencies in THz and temperatures in meV; conversion happens here,
//! once, with explicit 2*pi factors.

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Reduced Planck constant, erg * s.
pub const HBAR: f64 = 1.054571817e-27;
/// Speed of light, cm/s.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e10;
/// One meV in erg.
pub const ERG_PER_MEV: f64 = 1.602176634e-15;

/// Ordinary frequency in THz -> angular frequency in rad/s.
pub fn thz_to_angular(f_thz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_thz * 1e12
}

/// Angular frequency in rad/s -> ordinary frequency in THz.
pub fn angular_to_thz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI * 1e12)
}

/// Vacuum wavelength in nm -> angular frequency in rad/s.
pub fn wavelength_nm_to_angular(lambda_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (lambda_nm * 1e-7)
}

/// Relative tolerance on the energy-conservation identity
/// omega_p = omega_TE + omega_TM. Violations are config errors.
pub const ENERGY_CONSERVATION_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    Te,
    Tm,
    Pump,
}

/// Per-mode physical parameters of a waveguide supermode.
#[derive(Debug, Clone, Copy)]
pub struct ModeParams {
    pub label: ModeLabel,
    /// Group velocity d(omega)/dk, cm/s.
    pub group_velocity: f64,
    /// Field (amplitude) loss rate gamma_N = Gamma_N / v_N, 1/cm.
    /// The intensity absorption coefficient is twice this.
    pub field_loss: f64,
    /// Central angular frequency, rad/s.
    pub central_angular_frequency: f64,
}

impl ModeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.group_velocity > 0.0) || !self.group_velocity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{:?} group velocity must be positive, got {}",
                self.label, self.group_velocity
            )));
        }
        if !(self.field_loss >= 0.0) || !self.field_loss.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{:?} field loss must be >= 0, got {}",
                self.label, self.field_loss
            )));
        }
        if !(self.central_angular_frequency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{:?} central angular frequency must be positive, got {}",
                self.label, self.central_angular_frequency
            )));
        }
        Ok(())
    }
}

/// Full device description: modes, coupling, geometry, reservoir.
#[derive(Debug, Clone)]
pub struct DeviceConfig {
    pub te: ModeParams,
    pub tm: ModeParams,
    pub pump: ModeParams,
    /// Classical-pump coupling magnitude |g|, 1/cm.
    pub coupling_g: f64,
    /// Quantized-pump coupling magnitude |G|, s^(1/2)/cm.
    pub coupling_big_g: f64,
    /// Common coupling phase Arg[g] = Arg[G], rad.
    pub coupling_phase: f64,
    /// Static phase mismatch delta_k at the central frequencies, 1/cm.
    pub phase_mismatch_dk: f64,
    /// Device length L, cm.
    pub length: f64,
    /// Reservoir temperature in energy units (erg); 0 allowed.
    pub reservoir_temperature: f64,
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        self.te.validate()?;
        self.tm.validate()?;
        self.pump.validate()?;
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "device length must be positive, got {}",
                self.length
            )));
        }
        if !(self.coupling_g >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling |g| must be >= 0, got {}",
                self.coupling_g
            )));
        }
        if !(self.coupling_big_g >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling |G| must be >= 0, got {}",
                self.coupling_big_g
            )));
        }
        if self.reservoir_temperature < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "reservoir temperature must be >= 0, got {}",
                self.reservoir_temperature
            )));
        }
        let sum = self.te.central_angular_frequency + self.tm.central_angular_frequency;
        let wp = self.pump.central_angular_frequency;
        if (wp - sum).abs() > ENERGY_CONSERVATION_RTOL * wp {
            return Err(Error::Config(format!(
                "energy conservation violated: omega_p = {:.9e} but omega_TE + omega_TM = {:.9e}",
                wp, sum
            )));
        }
        Ok(())
    }

    /// Complex coupling g = |g| e^{i Arg g}, 1/cm.
    pub fn g(&self) -> Complex64 {
        Complex64::from_polar(self.coupling_g, self.coupling_phase)
    }

    /// Complex quantized-pump coupling G, s^(1/2)/cm.
    pub fn big_g(&self) -> Complex64 {
        Complex64::from_polar(self.coupling_big_g, self.coupling_phase)
    }

    /// gamma_TE = Gamma_TE / v_TE, 1/cm.
    pub fn gamma_te(&self) -> f64 {
        self.te.field_loss
    }

    /// gamma_TM = Gamma_TM / v_TM, 1/cm.
    pub fn gamma_tm(&self) -> f64 {
        self.tm.field_loss
    }

    /// 1/v_TE - 1/v_TM, s/cm. Sets the SPDC bandwidth.
    pub fn delta_inverse_velocity(&self) -> f64 {
        1.0 / self.te.group_velocity - 1.0 / self.tm.group_velocity
    }

    /// 1/v_TE + 1/v_TM, s/cm.
    pub fn sum_inverse_velocity(&self) -> f64 {
        1.0 / self.te.group_velocity + 1.0 / self.tm.group_velocity
    }

    /// gamma_TE + gamma_TM, 1/cm. e^{-gamma_sum * L} is the common
    /// attenuation factor of the biphoton flux.
    pub fn gamma_sum(&self) -> f64 {
        self.gamma_te() + self.gamma_tm()
    }
}

/// Coupling coefficient g = A / (hbar sqrt(v_TE v_TM)) from the raw
/// nonlinear overlap integral A (erg). Magnitude and phase of A are
/// preserved.
pub fn derive_g(overlap_a: Complex64, te: &ModeParams, tm: &ModeParams) -> Result<Complex64> {
    if !(te.group_velocity > 0.0) || !(tm.group_velocity > 0.0) {
        return Err(Error::InvalidParameter(
            "derive_g requires positive group velocities".into(),
        ));
    }
    Ok(overlap_a / (HBAR * (te.group_velocity * tm.group_velocity).sqrt()))
}

/// Phase mismatch D(nu) = delta_k + nu (1/v_TE - 1/v_TM), 1/cm, accumulated
/// between the pump and the detuned decay modes.
pub fn phase_mismatch_d(nu: f64, cfg: &DeviceConfig) -> f64 {
    cfg.phase_mismatch_dk + nu * cfg.delta_inverse_velocity()
}

/// Total SPDC bandwidth (full spectral width of the main maximum),
/// delta_omega_tot = (4 pi / L) |1/v_TE - 1/v_TM|^-1, rad/s.
/// The half-width is 2 pi / L |...|^-1.
pub fn total_spdc_bandwidth(cfg: &DeviceConfig) -> Result<f64> {
    let dinv = cfg.delta_inverse_velocity();
    if dinv == 0.0 {
        return Err(Error::DegenerateGroupVelocities);
    }
    Ok(4.0 * std::f64::consts::PI / (cfg.length * dinv.abs()))
}

/// Half-width of the parametric amplification band by the criterion
/// |nu| <= |g| |1/v_TE - 1/v_TM|^-1, rad/s.
///
/// See also [`parametric_half_bandwidth_2g`]; the two conventions differ
/// by a factor of 2 and both are exposed deliberately.
pub fn parametric_half_bandwidth_g(cfg: &DeviceConfig) -> Result<f64> {
    let dinv = cfg.delta_inverse_velocity();
    if dinv == 0.0 {
        return Err(Error::DegenerateGroupVelocities);
    }
    Ok(cfg.coupling_g / dinv.abs())
}

/// Half-width of the parametric amplification band by the criterion
/// |D(nu)| < 2|g|, i.e. |nu| <= 2|g| |1/v_TE - 1/v_TM|^-1, rad/s.
pub fn parametric_half_bandwidth_2g(cfg: &DeviceConfig) -> Result<f64> {
    parametric_half_bandwidth_g(cfg).map(|w| 2.0 * w)
}

/// Bose-Einstein occupation n_T(omega) = 1 / (e^{hbar omega / T} - 1).
/// T is in energy units (erg); T = 0 returns 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / temperature;
    if x > 700.0 {
        0.0
    } else {
        1.0 / (x.exp() - 1.0)
    }
}

/// Characteristic interaction time t_int = L_z / sqrt(v1 v2) of the
/// initial-value problem, seconds.
pub fn interaction_time(l_z: f64, v1: f64, v2: f64) -> Result<f64> {
    if !(v1 > 0.0) || !(v2 > 0.0) {
        return Err(Error::InvalidParameter(
            "interaction_time requires positive velocities".into(),
        ));
    }
    Ok(l_z / (v1 * v2).sqrt())
}

/// A detuning grid plus the detection-window bookkeeping used by the
/// correlation functions.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    /// Strictly increasing detunings nu, rad/s.
    pub detunings: Vec<f64>,
    /// Grid bin width, rad/s.
    pub bin_width: f64,
    /// Detection-window center delta_omega_0, rad/s.
    pub window_center: f64,
    /// Detection-window width Delta_omega, rad/s.
    pub window_width: f64,
}

impl SpectralGrid {
    /// Uniform grid of `samples` detunings spanning [nu_min, nu_max].
    pub fn uniform(nu_min: f64, nu_max: f64, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::InvalidParameter(
                "grid needs at least 2 samples".into(),
            ));
        }
        if !(nu_max > nu_min) {
            return Err(Error::InvalidParameter(format!(
                "grid span must be increasing, got [{nu_min}, {nu_max}]"
            )));
        }
        let step = (nu_max - nu_min) / (samples - 1) as f64;
        let detunings = (0..samples).map(|i| nu_min + step * i as f64).collect();
        Ok(Self {
            detunings,
            bin_width: step,
            window_center: 0.5 * (nu_min + nu_max),
            window_width: nu_max - nu_min,
        })
    }

    /// Default grid: 2001 uniform samples spanning +-1.5 * delta_omega_tot,
    /// which resolves every side lobe of the flux spectrum.
    pub fn default_for(cfg: &DeviceConfig) -> Result<Self> {
        let w = total_spdc_bandwidth(cfg)?;
        Self::uniform(-1.5 * w, 1.5 * w, 2001)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.detunings[0], *self.detunings.last().unwrap())
    }

    pub fn validate(&self) -> Result<()> {
        if self.detunings.len() < 2 {
            return Err(Error::InvalidParameter("grid too short".into()));
        }
        if !self.detunings.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "detunings must be strictly increasing".into(),
            ));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::InvalidParameter("bin width must be positive".into()));
        }
        Ok(())
    }

    /// Check the symmetry-about-zero invariant required by the
    /// quantized-pump discrete grid.
    pub fn validate_symmetric(&self) -> Result<()> {
        self.validate()?;
        let n = self.detunings.len();
        for i in 0..n / 2 {
            let a = self.detunings[i];
            let b = self.detunings[n - 1 - i];
            if (a + b).abs() > 1e-9 * self.bin_width.max(b.abs()) {
                return Err(Error::InvalidParameter(
                    "detunings must be symmetric about 0".into(),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Config ingestion. One JSON document; unknown keys rejected.
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    modes: RawModes,
    coupling: RawCoupling,
    device: RawDevice,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModes {
    te: RawMode,
    tm: RawMode,
    pump: RawMode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    group_velocity_cm_s: f64,
    field_loss_per_cm: f64,
    #[serde(default)]
    wavelength_nm: Option<f64>,
    #[serde(default)]
    frequency_thz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    #[serde(default)]
    g_per_cm: Option<f64>,
    #[serde(default, rename = "overlap_A")]
    overlap_a: Option<f64>,
    #[serde(default)]
    phase_rad: Option<f64>,
    #[serde(default, rename = "G_sqrt_s_per_cm")]
    big_g_sqrt_s_per_cm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    length_cm: f64,
    #[serde(default)]
    dk_per_cm: f64,
    #[serde(default)]
    temperature_mev: f64,
}

fn mode_from_raw(raw: &RawMode, label: ModeLabel) -> Result<ModeParams> {
    let omega = match (raw.wavelength_nm, raw.frequency_thz) {
        (Some(l), None) => {
            if !(l > 0.0) {
                return Err(Error::Config(format!(
                    "{label:?}: wavelength_nm must be positive"
                )));
            }
            wavelength_nm_to_angular(l)
        }
        (None, Some(f)) => {
            if !(f > 0.0) {
                return Err(Error::Config(format!(
                    "{label:?}: frequency_thz must be positive"
                )));
            }
            thz_to_angular(f)
        }
        (Some(_), Some(_)) => {
            return Err(Error::Config(format!(
                "{label:?}: give wavelength_nm or frequency_thz, not both"
            )))
        }
        (None, None) => {
            return Err(Error::Config(format!(
                "{label:?}: one of wavelength_nm or frequency_thz is required"
            )))
        }
    };
    let mode = ModeParams {
        label,
        group_velocity: raw.group_velocity_cm_s,
        field_loss: raw.field_loss_per_cm,
        central_angular_frequency: omega,
    };
    mode.validate()?;
    Ok(mode)
}

impl DeviceConfig {
    /// Parse and validate a config document. `g_per_cm` takes precedence
    /// over `overlap_A` when both are present.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;

        let te = mode_from_raw(&raw.modes.te, ModeLabel::Te)?;
        let tm = mode_from_raw(&raw.modes.tm, ModeLabel::Tm)?;
        let pump = mode_from_raw(&raw.modes.pump, ModeLabel::Pump)?;

        let phase = raw.coupling.phase_rad.unwrap_or(0.0);
        let g_mag = match (raw.coupling.g_per_cm, raw.coupling.overlap_a) {
            (Some(gv), _) => {
                if gv < 0.0 {
                    return Err(Error::Config("g_per_cm must be >= 0".into()));
                }
                gv
            }
            (None, Some(a)) => {
                let g = derive_g(Complex64::from_polar(a.abs(), phase), &te, &tm)
                    .map_err(|e| Error::Config(e.to_string()))?;
                g.norm()
            }
            (None, None) => 0.0,
        };
        let big_g = raw.coupling.big_g_sqrt_s_per_cm.unwrap_or(0.0);
        if big_g < 0.0 {
            return Err(Error::Config("G_sqrt_s_per_cm must be >= 0".into()));
        }
        if raw.device.temperature_mev < 0.0 {
            return Err(Error::Config("temperature_mev must be >= 0".into()));
        }

        let cfg = DeviceConfig {
            te,
            tm,
            pump,
            coupling_g: g_mag,
            coupling_big_g: big_g,
            coupling_phase: phase,
            phase_mismatch_dk: raw.device.dk_per_cm,
            length: raw.device.length_cm,
            reservoir_temperature: raw.device.temperature_mev * ERG_PER_MEV,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}

/// Reference GaSb-class device used throughout the tests (the bundled
/// paper_device.json fixture): 2032 nm pump, degenerate 4064 nm decay
/// modes, g = 0.08 1/cm, field losses 4 and 3 1/cm.
pub fn reference_device() -> DeviceConfig {
    DeviceConfig {
        te: ModeParams {
            label: ModeLabel::Te,
            group_velocity: 8.24e9,
            field_loss: 4.0,
            central_angular_frequency: wavelength_nm_to_angular(4064.0),
        },
        tm: ModeParams {
            label: ModeLabel::Tm,
            group_velocity: 8.34e9,
            field_loss: 3.0,
            central_angular_frequency: wavelength_nm_to_angular(4064.0),
        },
        pump: ModeParams {
            label: ModeLabel::Pump,
            group_velocity: 8.0e9,
            field_loss: 0.0,
            central_angular_frequency: wavelength_nm_to_angular(2032.0),
        },
        coupling_g: 0.08,
        coupling_big_g: 3e-11,
        coupling_phase: 0.0,
        phase_mismatch_dk: 0.0,
        length: 0.1,
        reservoir_temperature: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn derive_g_zero_coupling() {
        let cfg = reference_device();
        let g = derive_g(Complex64::new(0.0, 0.0), &cfg.te, &cfg.tm).unwrap();
        assert_eq!(g, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn derive_g_inverse_identity() {
        // A = hbar sqrt(v_TE v_TM) * 0.08 must give back g = 0.08 1/cm.
        let cfg = reference_device();
        let a = HBAR * (cfg.te.group_velocity * cfg.tm.group_velocity).sqrt() * 0.08;
        let g = derive_g(Complex64::new(a, 0.0), &cfg.te, &cfg.tm).unwrap();
        assert_relative_eq!(g.re, 0.08, max_relative = 1e-14);
        assert_eq!(g.im, 0.0);
    }

    #[test]
    fn derive_g_phase_passthrough() {
        let cfg = reference_device();
        let a = Complex64::from_polar(1e-27, std::f64::consts::PI / 3.0);
        let g = derive_g(a, &cfg.te, &cfg.tm).unwrap();
        assert_relative_eq!(g.arg(), std::f64::consts::PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn derive_g_rejects_bad_velocity() {
        let cfg = reference_device();
        let mut bad = cfg.te;
        bad.group_velocity = 0.0;
        assert!(derive_g(Complex64::new(1.0, 0.0), &bad, &cfg.tm).is_err());
    }

    #[test]
    fn phase_mismatch_examples() {
        let mut cfg = reference_device();
        assert_eq!(phase_mismatch_d(0.0, &cfg), 0.0);
        cfg.phase_mismatch_dk = 2.5;
        assert_eq!(phase_mismatch_d(0.0, &cfg), 2.5);
        cfg.phase_mismatch_dk = 0.0;
        // Frozen from an independent high-precision evaluation at nu/2pi = 1 THz.
        let d = phase_mismatch_d(thz_to_angular(1.0), &cfg);
        assert_relative_eq!(d, 9.142955500424419, max_relative = 1e-14);
    }

    #[test]
    fn phase_mismatch_is_affine() {
        let cfg = reference_device();
        let (n1, n2) = (3.7e11, -1.9e12);
        let lhs = phase_mismatch_d(n1, &cfg) + phase_mismatch_d(n2, &cfg)
            - phase_mismatch_d(0.0, &cfg);
        let rhs = phase_mismatch_d(n1 + n2, &cfg);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn bandwidth_reference_value_and_scaling() {
        let mut cfg = reference_device();
        cfg.length = 0.1;
        let w1 = total_spdc_bandwidth(&cfg).unwrap();
        assert_relative_eq!(angular_to_thz(w1), 13.74431999999982, max_relative = 1e-12);
        assert!((12.0..=17.0).contains(&angular_to_thz(w1)));

        cfg.length = 0.2;
        let w2 = total_spdc_bandwidth(&cfg).unwrap();
        assert_relative_eq!(w2, 0.5 * w1, max_relative = 1e-12);
        assert_relative_eq!(angular_to_thz(w2), 6.87215999999991, max_relative = 1e-12);
    }

    #[test]
    fn bandwidth_l_product_invariant() {
        let mut cfg = reference_device();
        let mut prods = Vec::new();
        for l in [0.03, 0.1, 0.55, 2.0] {
            cfg.length = l;
            prods.push(total_spdc_bandwidth(&cfg).unwrap() * l);
        }
        for p in &prods[1..] {
            assert_relative_eq!(*p, prods[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn bandwidth_degenerate_velocities() {
        let mut cfg = reference_device();
        cfg.tm.group_velocity = cfg.te.group_velocity;
        assert!(matches!(
            total_spdc_bandwidth(&cfg),
            Err(Error::DegenerateGroupVelocities)
        ));
    }

    #[test]
    fn parametric_bandwidth_both_conventions() {
        // |g|(1/v_TE - 1/v_TM)^-1 and twice it; the 2|g| convention puts the
     // reference device near 0.018 THz.
        let cfg = reference_device();
        let a = parametric_half_bandwidth_g(&cfg).unwrap();
        let b = parametric_half_bandwidth_2g(&cfg).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-15);
        assert!((0.015..0.021).contains(&angular_to_thz(b)));
    }

    #[test]
    fn thermal_occupation_points() {
        assert_eq!(thermal_occupation(1e15, 0.0), 0.0);
        // hbar omega / T = ln 2  ->  n_T = 1
        let omega = 1e14;
        let t = HBAR * omega / std::f64::consts::LN_2;
        assert_relative_eq!(thermal_occupation(omega, t), 1.0, max_relative = 1e-12);
        // Rayleigh-Jeans limit: n_T ~ T / (hbar omega) within 1% for x < 0.01.
        let x: f64 = 0.009;
        let t2 = HBAR * omega / x;
        let n = thermal_occupation(omega, t2);
        assert!((n - 1.0 / x).abs() / (1.0 / x) < 0.01);
    }

    #[test]
    fn thermal_occupation_monotonicity() {
        let t = 1e-14;
        let mut prev = f64::INFINITY;
        for k in 1..60 {
            let n = thermal_occupation(1e12 * k as f64, t);
            assert!(n < prev);
            prev = n;
        }
        let omega = 1e13;
        let mut prev = 0.0;
        for k in 1..60 {
            let n = thermal_occupation(omega, 1e-16 * k as f64);
            assert!(n > prev);
            prev = n;
        }
    }

    #[test]
    fn interaction_time_examples() {
        let cfg = reference_device();
        assert_eq!(
            interaction_time(0.0, cfg.te.group_velocity, cfg.tm.group_velocity).unwrap(),
            0.0
        );
        assert_relative_eq!(
            interaction_time(0.1, 3.0e9, 3.0e9).unwrap(),
            0.1 / 3.0e9,
            max_relative = 1e-15
        );
        // Frozen from an independent high-precision evaluation.
        assert_relative_eq!(
            interaction_time(0.1, cfg.te.group_velocity, cfg.tm.group_velocity).unwrap(),
            1.206294558705195e-11,
            max_relative = 1e-14
        );
    }

    #[test]
    fn derived_quantities_are_bit_deterministic() {
        let cfg = reference_device();
        let nu = 7.7e11;
        assert_eq!(
            phase_mismatch_d(nu, &cfg).to_bits(),
            phase_mismatch_d(nu, &cfg).to_bits()
        );
        assert_eq!(
            total_spdc_bandwidth(&cfg).unwrap().to_bits(),
            total_spdc_bandwidth(&cfg).unwrap().to_bits()
        );
    }

    #[test]
    fn config_roundtrip_and_rejections() {
        let good = r#"{
            "modes": {
                "te":   {"group_velocity_cm_s": 8.24e9, "field_loss_per_cm": 4.0, "wavelength_nm": 4064.0},
                "tm":   {"group_velocity_cm_s": 8.34e9, "field_loss_per_cm": 3.0, "wavelength_nm": 4064.0},
                "pump": {"group_velocity_cm_s": 8.0e9,  "field_loss_per_cm": 0.0, "wavelength_nm": 2032.0}
            },
            "coupling": {"g_per_cm": 0.08, "phase_rad": 0.0, "G_sqrt_s_per_cm": 3e-11},
            "device": {"length_cm": 0.1, "dk_per_cm": 0.0, "temperature_mev": 0.0}
        }"#;
        let cfg = DeviceConfig::from_json_str(good).unwrap();
        assert_relative_eq!(cfg.coupling_g, 0.08);
        assert_relative_eq!(cfg.length, 0.1);

        // Unknown key rejected.
        let unknown = good.replace("\"dk_per_cm\": 0.0", "\"dk_per_cm\": 0.0, \"bogus\": 1");
        assert!(matches!(
            DeviceConfig::from_json_str(&unknown),
            Err(Error::Config(_))
        ));

        // Energy conservation enforced to 1e-9 relative.
        let broken = good.replace("\"wavelength_nm\": 2032.0", "\"wavelength_nm\": 2031.9");
        assert!(matches!(
            DeviceConfig::from_json_str(&broken),
            Err(Error::Config(_))
        ));

        // Frequency keys are mutually exclusive.
        let both = good.replace(
            "\"field_loss_per_cm\": 4.0, \"wavelength_nm\": 4064.0",
            "\"field_loss_per_cm\": 4.0, \"wavelength_nm\": 4064.0, \"frequency_thz\": 73.0",
        );
        assert!(DeviceConfig::from_json_str(&both).is_err());
    }

    #[test]
    fn config_accepts_overlap_a() {
        // g derived from the overlap integral when g_per_cm is absent;
        // g_per_cm wins when both are present.
        let cfg0 = reference_device();
        let a = HBAR * (cfg0.te.group_velocity * cfg0.tm.group_velocity).sqrt() * 0.05;
        let doc = format!(
            r#"{{
            "modes": {{
                "te":   {{"group_velocity_cm_s": 8.24e9, "field_loss_per_cm": 4.0, "wavelength_nm": 4064.0}},
                "tm":   {{"group_velocity_cm_s": 8.34e9, "field_loss_per_cm": 3.0, "wavelength_nm": 4064.0}},
                "pump": {{"group_velocity_cm_s": 8.0e9,  "field_loss_per_cm": 0.0, "wavelength_nm": 2032.0}}
            }},
            "coupling": {{"overlap_A": {a:e}, "phase_rad": 0.1}},
            "device": {{"length_cm": 0.1}}
        }}"#
        );
        let cfg = DeviceConfig::from_json_str(&doc).unwrap();
        assert_relative_eq!(cfg.coupling_g, 0.05, max_relative = 1e-12);

        let doc2 = doc.replace("\"overlap_A\"", "\"g_per_cm\": 0.02, \"overlap_A\"");
        let cfg2 = DeviceConfig::from_json_str(&doc2).unwrap();
        assert_relative_eq!(cfg2.coupling_g, 0.02, max_relative = 1e-15);
    }

    #[test]
    fn grid_invariants() {
        let g = SpectralGrid::uniform(-1.0, 1.0, 5).unwrap();
        g.validate().unwrap();
        g.validate_symmetric().unwrap();
        assert!(SpectralGrid::uniform(1.0, -1.0, 5).is_err());
        let asym = SpectralGrid::uniform(-1.0, 2.0, 4).unwrap();
        assert!(asym.validate_symmetric().is_err());
    }

    #[test]
    fn default_grid_spans_all_side_lobes() {
        let cfg = reference_device();
        let g = SpectralGrid::default_for(&cfg).unwrap();
        assert_eq!(g.detunings.len(), 2001);
        let w = total_spdc_bandwidth(&cfg).unwrap();
        let (lo, hi) = g.span();
        assert_relative_eq!(lo, -1.5 * w, max_relative = 1e-12);
        assert_relative_eq!(hi, 1.5 * w, max_relative = 1e-12);
        g.validate_symmetric().unwrap();
    }
}
