//! Flux correlation function K(L, tau), per-band fluctuations D_N(L), and
//! the normalized correlation parameter Theta(L, tau) between symmetric
//! detection windows.
//!
//! TE photons are detected in the window centered at detuning
//! +delta_omega_0, TM photons in the mirror window at -delta_omega_0, both
//! of width delta_omega. The windows are chosen outside the Langevin noise
//! band (|D(nu)| >> gamma), where the reservoir terms of the flux
//! operators are negligible; a warning flag fires when a window encroaches
//! on the noise band.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{phase_mismatch_d, DeviceConfig, ModeLabel};
use crate::quad;

/// Which kernel set to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelPath {
    /// Dissipation enters only through the common attenuation factor
    /// e^{-(gamma_TE + gamma_TM) L}; the oscillatory kernels are evaluated
    /// lossless with g taken real. This is the regime in which the
    /// correlation formulas are derived, and the default.
    #[default]
    LowGain,
    /// Keep the loss terms and the coupling phase inside kappa and K+-.
    General,
}

/// Symmetric detection windows at detunings +-center, each of width
/// `width` (rad/s).
#[derive(Debug, Clone, Copy)]
pub struct DetectionWindows {
    pub center: f64,
    pub width: f64,
}

impl DetectionWindows {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(center > 0.0) || width < 0.0 {
            return Err(Error::InvalidParameter(
                "window center must be positive and width >= 0".into(),
            ));
        }
        if center - 0.5 * width <= 0.0 && width > 0.0 {
            return Err(Error::Precondition(
                "detection windows overlap: require center > width / 2".into(),
            ));
        }
        Ok(Self { center, width })
    }

    fn bounds(&self) -> (f64, f64) {
        (self.center - 0.5 * self.width, self.center + 0.5 * self.width)
    }

    /// True when any detuning in the window has |D(nu)| within 10x the
    /// larger loss rate, i.e. the Langevin-noise band is not negligible
    /// there.
    pub fn touches_noise_band(&self, cfg: &DeviceConfig) -> bool {
        let (lo, hi) = self.bounds();
        let d_lo = phase_mismatch_d(lo, cfg);
        let d_hi = phase_mismatch_d(hi, cfg);
        let (dmin, dmax) = if d_lo <= d_hi { (d_lo, d_hi) } else { (d_hi, d_lo) };
        let band = 10.0 * cfg.gamma_te().max(cfg.gamma_tm());
        dmin <= band && dmax >= -band
    }
}

/// Input-output coefficients (u, w, w~, u~) of the pair
/// (a_TE(nu), a_TM(-nu)^dag) at z = L, in the regular cosh/sinhc form that
/// stays finite through kappa = 0:
///
///   u  = f [cosh(kappa L) + (i zd L / 2) sinhc(kappa L)]
///   w  = f i g L sinhc(kappa L)
///   w~ = -f i g* L sinhc(kappa L)
///   u~ = f [cosh(kappa L) - (i zd L / 2) sinhc(kappa L)]
///
/// with zd = D (+ i(gamma_TE - gamma_TM) on the general path) and
/// kappa = sqrt(|g|^2 - zd^2 / 4).
fn coefficients(
    nu: f64,
    length: f64,
    cfg: &DeviceConfig,
    path: KernelPath,
) -> (Complex64, Complex64, Complex64, Complex64) {
    let d = phase_mismatch_d(nu, cfg);
    let (zd, g_used, f) = match path {
        KernelPath::LowGain => (
            Complex64::new(d, 0.0),
            Complex64::new(cfg.coupling_g, 0.0),
            Complex64::new((-0.5 * cfg.gamma_sum() * length).exp(), 0.0),
        ),
        KernelPath::General => {
            let m = Complex64::new(
                -0.5 * cfg.gamma_sum(),
                0.5 * nu * cfg.sum_inverse_velocity(),
            );
            (
                Complex64::new(d, cfg.gamma_te() - cfg.gamma_tm()),
                cfg.g(),
                (m * length).exp(),
            )
        }
    };
    let kappa = (Complex64::new(cfg.coupling_g * cfg.coupling_g, 0.0) - 0.25 * zd * zd).sqrt();
    let ch = (kappa * length).cosh();
    let shc = length * quad::sinhc(kappa * length);
    let half_izd = Complex64::new(0.0, 0.5) * zd;
    let i = Complex64::new(0.0, 1.0);
    let u = f * (ch + half_izd * shc);
    let w = f * i * g_used * shc;
    let wt = -f * i * g_used.conj() * shc;
    let ut = f * (ch - half_izd * shc);
    (u, w, wt, ut)
}

const QUAD_RTOL: f64 = 1e-9;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Band-integrated photon-number fluctuation D_N(L) of the requested mode:
/// the product of the band signal flux and the band integral of the
/// conjugate transfer kernel. `warning` flags a window that touches the
/// Langevin noise band.
#[derive(Debug, Clone, Copy)]
pub struct BandMoment {
    pub value: f64,
    pub noise_band_warning: bool,
}

pub fn fluctuation_d(
    mode: ModeLabel,
    windows: DetectionWindows,
    length: f64,
    cfg: &DeviceConfig,
    path: KernelPath,
) -> Result<BandMoment> {
    if mode == ModeLabel::Pump {
        return Err(Error::InvalidParameter(
            "fluctuation_d applies to the TE and TM decay modes".into(),
        ));
    }
    let warning = windows.touches_noise_band(cfg);
    if cfg.coupling_g == 0.0 || windows.width == 0.0 {
        return Ok(BandMoment {
            value: 0.0,
            noise_band_warning: warning,
        });
    }
    let (lo, hi) = windows.bounds();
    type Kernel<'a> = Box<dyn Fn(f64) -> f64 + Sync + 'a>;
    let (flux_kernel, gain_kernel): (Kernel, Kernel) = match mode {
        ModeLabel::Te => (
            Box::new(move |nu| coefficients(nu, length, cfg, path).1.norm_sqr()),
            Box::new(move |nu| coefficients(nu, length, cfg, path).0.norm_sqr()),
        ),
        ModeLabel::Tm => (
            Box::new(move |nu| coefficients(nu, length, cfg, path).2.norm_sqr()),
            Box::new(move |nu| coefficients(nu, length, cfg, path).3.norm_sqr()),
        ),
        ModeLabel::Pump => unreachable!(),
    };
    let q_band = quad::integrate(&|nu| flux_kernel(nu), lo, hi, QUAD_RTOL)? / TWO_PI;
    let gain_band = quad::integrate(&|nu| gain_kernel(nu), lo, hi, QUAD_RTOL)? / TWO_PI;
    Ok(BandMoment {
        value: q_band * gain_band,
        noise_band_warning: warning,
    })
}

/// Flux correlation K(L, tau): the squared magnitude of the tau-weighted
/// spectral integral of the TE/TM cross kernel over the detection window.
pub fn correlation_k(
    windows: DetectionWindows,
    length: f64,
    tau: f64,
    cfg: &DeviceConfig,
    path: KernelPath,
) -> Result<BandMoment> {
    let warning = windows.touches_noise_band(cfg);
    if cfg.coupling_g == 0.0 || windows.width == 0.0 {
        return Ok(BandMoment {
            value: 0.0,
            noise_band_warning: warning,
        });
    }
    let (lo, hi) = windows.bounds();
    let cross = quad::integrate_complex(
        &|nu| {
            let (u, _, wt, _) = coefficients(nu, length, cfg, path);
            u * wt.conj() * Complex64::from_polar(1.0, -nu * tau)
        },
        lo,
        hi,
        QUAD_RTOL,
    )? / TWO_PI;
    Ok(BandMoment {
        value: cross.norm_sqr(),
        noise_band_warning: warning,
    })
}

/// Normalized correlation and its ingredients.
#[derive(Debug, Clone, Copy)]
pub struct CorrelationResult {
    pub theta: f64,
    pub k: f64,
    pub d_te: f64,
    pub d_tm: f64,
    pub tau: f64,
    pub window_center: f64,
    pub window_width: f64,
    pub noise_band_warning: bool,
}

/// Theta(L, tau) = K / sqrt(D_TE D_TM). 1 means perfectly correlated
/// band-filtered fluxes; narrow windows approach 1 at tau = 0.
pub fn theta(
    windows: DetectionWindows,
    length: f64,
    tau: f64,
    cfg: &DeviceConfig,
    path: KernelPath,
) -> Result<CorrelationResult> {
    let d_te = fluctuation_d(ModeLabel::Te, windows, length, cfg, path)?;
    let d_tm = fluctuation_d(ModeLabel::Tm, windows, length, cfg, path)?;
    let k = correlation_k(windows, length, tau, cfg, path)?;
    let denom = d_te.value * d_tm.value;
    if denom <= 0.0 {
        return Err(Error::UndefinedCorrelation(
            "fluctuation product vanishes; Theta is undefined".into(),
        ));
    }
    Ok(CorrelationResult {
        theta: k.value / denom.sqrt(),
        k: k.value,
        d_te: d_te.value,
        d_tm: d_tm.value,
        tau,
        window_center: windows.center,
        window_width: windows.width,
        noise_band_warning: d_te.noise_band_warning,
    })
}
