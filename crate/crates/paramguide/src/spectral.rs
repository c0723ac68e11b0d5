//! Closed-form boundary-value solution for degenerate SPDC in a lossy,
//! dispersive waveguide: dispersion quantities kappa, mu+-, K+-, signal and
//! Langevin-noise spectral flux densities, asymptotic regimes, the
//! narrowband gain, the nondegenerate perturbative fluxes, and
//! band-integrated totals.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{phase_mismatch_d, DeviceConfig, SpectralGrid};
use crate::quad;

/// Per-detuning dispersion quantities of the coupled TE/TM pair.
///
/// kappa = sqrt(|g|^2 - 1/4 [D(nu) + i(gamma_TE - gamma_TM)]^2) with the
/// principal square-root branch sqrt(Z) = sqrt(|Z|) e^{i Arg(Z)/2},
/// Arg in (-pi, pi].
#[derive(Debug, Clone, Copy)]
pub struct DispersionPoint {
    pub nu: f64,
    /// Phase mismatch D(nu), 1/cm.
    pub d: f64,
    pub kappa: Complex64,
    pub mu_plus: Complex64,
    pub mu_minus: Complex64,
    pub k_plus: Complex64,
    pub k_minus: Complex64,
}

/// kappa and mu+- alone; valid for any coupling, including g = 0.
pub fn kappa_mu(nu: f64, cfg: &DeviceConfig) -> (Complex64, Complex64, Complex64) {
    let d = phase_mismatch_d(nu, cfg);
    let dg = cfg.gamma_te() - cfg.gamma_tm();
    let z = Complex64::new(cfg.coupling_g * cfg.coupling_g, 0.0)
        - 0.25 * Complex64::new(d, dg) * Complex64::new(d, dg);
    let kappa = z.sqrt(); // principal branch
    let m = Complex64::new(
        -0.5 * cfg.gamma_sum(),
        0.5 * nu * cfg.sum_inverse_velocity(),
    );
    (kappa, m + kappa, m - kappa)
}

/// Full dispersion point including K+- = (-D - i(gamma_TE - gamma_TM))/(2g)
/// -+ i kappa / g. Errors when g = 0, where K+- are undefined.
pub fn dispersion_point(nu: f64, cfg: &DeviceConfig) -> Result<DispersionPoint> {
    let g = cfg.g();
    if g.norm() == 0.0 {
        return Err(Error::DivisionByZero(
            "K+- are undefined at g = 0; use kappa_mu for the uncoupled quantities".into(),
        ));
    }
    let d = phase_mismatch_d(nu, cfg);
    let dg = cfg.gamma_te() - cfg.gamma_tm();
    let (kappa, mu_plus, mu_minus) = kappa_mu(nu, cfg);
    let pre = Complex64::new(-d, -dg) / (2.0 * g);
    let ik_over_g = Complex64::new(0.0, 1.0) * kappa / g;
    // Far from the gain band the two terms nearly cancel in one of the
    // roots. Keep the well-conditioned large root from the direct formula
    // and recover the small one through the exact product
    // K+ K- = e^{-2i Arg g}, which also pins the product to one ulp.
    let k_plus_direct = pre - ik_over_g;
    let k_minus_direct = pre + ik_over_g;
    let product = Complex64::from_polar(1.0, -2.0 * cfg.coupling_phase);
    let (k_plus, k_minus) = if k_plus_direct.norm() >= k_minus_direct.norm() {
        (k_plus_direct, product / k_plus_direct)
    } else {
        (product / k_minus_direct, k_minus_direct)
    };
    Ok(DispersionPoint {
        nu,
        d,
        kappa,
        mu_plus,
        mu_minus,
        k_plus,
        k_minus,
    })
}

/// Signal spectral flux density at the output cross-section z = L,
/// photons s^-1 (rad/s)^-1:
///
///   Q_s(nu) = e^{-(gamma_TE + gamma_TM) L} |g|^2 / (2 pi)
///             * |(e^{kappa L} - e^{-kappa L}) / (2 kappa)|^2
///
/// Identical for TE at +nu and TM at -nu (pair symmetry).
pub fn signal_flux_density(nu: f64, length: f64, cfg: &DeviceConfig) -> f64 {
    if cfg.coupling_g == 0.0 || length == 0.0 {
        return 0.0;
    }
    let (kappa, _, _) = kappa_mu(nu, cfg);
    // (e^{kL} - e^{-kL})/(2k) = L sinhc(kL); removable singularity at k = 0.
    let kernel = length * quad::sinhc(kappa * length);
    (-cfg.gamma_sum() * length).exp() * cfg.coupling_g * cfg.coupling_g
        / (2.0 * std::f64::consts::PI)
        * kernel.norm_sqr()
}

/// F(mu+-, L)/|kappa|^2 evaluated stably. Below |kappa| L = 1e-3 the
/// three-exponential form of F cancels catastrophically, so a series in
/// kappa over the moment integrals int u^k e^{-gamma_sum u} du takes over
/// (truncation ~ |kappa L|^6, crossover error ~ 1e-10 relative).
fn noise_kernel_over_kappa_sq(
    kappa: Complex64,
    mu_plus: Complex64,
    mu_minus: Complex64,
    gamma_sum: f64,
    length: f64,
) -> f64 {
    let kl = (kappa * length).norm();
    if kl < 1e-3 {
        let a = -gamma_sum;
        let k2 = (kappa * kappa).re;
        let k4_re = (kappa * kappa * kappa * kappa).re;
        let k4_abs = kappa.norm_sqr() * kappa.norm_sqr();
        let i2 = quad::exp_moment(2, a, length);
        let i4 = quad::exp_moment(4, a, length);
        let i6 = quad::exp_moment(6, a, length);
        // |2 sinh(k u)|^2 = 4 |k|^2 u^2 |sinhc(k u)|^2 expanded in k
        4.0 * (i2 + k2 / 3.0 * i4 + (k4_abs / 36.0 + k4_re / 60.0) * i6)
    } else {
        let f = length
            * (quad::em1_over_real(2.0 * mu_plus.re * length)
                + quad::em1_over_real(2.0 * mu_minus.re * length)
                - 2.0 * quad::em1_over((mu_plus.conj() + mu_minus) * length).re);
        f / kappa.norm_sqr()
    }
}

/// Langevin-noise spectral flux densities (noise_te, noise_tm) at z = L for
/// a zero-temperature reservoir:
///
///   noise_TE = gamma_TM |g|^2 / (4 pi |kappa|^2) F(mu+-, L)
///   noise_TM = gamma_TE |g|^2 / (4 pi |kappa|^2) F(mu+-, L)
///
/// The modes swap loss rates: each mode carries the noise driven by the
/// other mode's reservoir. T > 0 is outside this closed form; the oracle
/// module's noise_flux_quadrature covers it.
pub fn noise_flux_density(nu: f64, length: f64, cfg: &DeviceConfig) -> Result<(f64, f64)> {
    if cfg.reservoir_temperature > 0.0 {
        return Err(Error::UnsupportedRegime(
            "closed-form noise assumes a zero-temperature reservoir; \
             use oracle::noise_flux_quadrature for n_T > 0"
                .into(),
        ));
    }
    if cfg.coupling_g == 0.0 || length == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (kappa, mu_plus, mu_minus) = kappa_mu(nu, cfg);
    let f_over_k2 =
        noise_kernel_over_kappa_sq(kappa, mu_plus, mu_minus, cfg.gamma_sum(), length);
    let pre = cfg.coupling_g * cfg.coupling_g / (4.0 * std::f64::consts::PI) * f_over_k2;
    Ok((cfg.gamma_tm() * pre, cfg.gamma_te() * pre))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticRegime {
    /// |g| >> gamma_TE, gamma_TM: parametric amplification dominates.
    HighGain,
    /// Low gain and propagation shorter than the absorption length:
    /// (gamma_TE + gamma_TM) L << 1.
    LowGainShortL,
}

/// Asymptotic signal flux density with a soft validity indicator.
///
/// HighGain: |g|^2 e^{-gamma_sum L} / (2 pi |k|^2) * sinh^2(|k| L) inside the
/// amplification band (|D| < 2|g|) or sin^2(|k| L) outside, with
/// |k|^2 = ||g|^2 - D^2/4|. LowGainShortL: |g|^2 sin^2(|k| L)/(2 pi |k|^2)
/// with |k| = |D|/2.
pub fn asymptotic_flux_density(
    nu: f64,
    length: f64,
    cfg: &DeviceConfig,
    regime: AsymptoticRegime,
) -> (f64, bool) {
    let g = cfg.coupling_g;
    let d = phase_mismatch_d(nu, cfg);
    let two_pi = 2.0 * std::f64::consts::PI;
    match regime {
        AsymptoticRegime::HighGain => {
            let valid = g >= 10.0 * cfg.gamma_te().max(cfg.gamma_tm());
            let k2 = (g * g - 0.25 * d * d).abs();
            let k = k2.sqrt();
            let osc = if d.abs() < 2.0 * g {
                if k * length < 1e-4 {
                    // sinh^2(x)/x^2 -> L^2 (1 + x^2/3)
                    length * length * (1.0 + k2 * length * length / 3.0)
                } else {
                    let s = (k * length).sinh();
                    s * s / k2
                }
            } else {
                let s = quad::sinc(k * length) * length;
                s * s
            };
            let val = g * g * (-cfg.gamma_sum() * length).exp() / two_pi * osc;
            (val, valid)
        }
        AsymptoticRegime::LowGainShortL => {
            let valid = cfg.gamma_sum() * length < 0.1;
            let s = quad::sinc(0.5 * d.abs() * length) * length;
            let val = g * g / two_pi * s * s;
            (val, valid)
        }
    }
}

/// Nondegenerate perturbative fluxes over a detection bandwidth
/// delta_omega (rad/s) with static mismatch delta_k:
///
///   Q_TE = Q_TM = (delta_omega / 2 pi) |g|^2 L^2 sinc^2(delta_k L / 2)
///
/// Equal fluxes in the two modes are the Manley-Rowe relation. Valid when
/// delta_omega * L * |1/v_TE - 1/v_TM| << 1; the bool is the soft flag.
pub fn nondegenerate_flux(
    delta_k: f64,
    length: f64,
    cfg: &DeviceConfig,
    delta_omega: f64,
) -> (f64, f64, bool) {
    let valid = delta_omega * length * cfg.delta_inverse_velocity().abs() < 0.1;
    let s = quad::sinc(0.5 * delta_k * length);
    let q = delta_omega / (2.0 * std::f64::consts::PI)
        * cfg.coupling_g
        * cfg.coupling_g
        * length
        * length
        * s
        * s;
    (q, q, valid)
}

/// Narrowband (detection band well inside the parametric band) two-mode
/// gain factors at distance z for the lossless matched case:
/// (cosh^2(|g| z), sinh^2(|g| z), Arg g). cosh^2 - sinh^2 = 1 expresses
/// photon-commutator preservation.
pub fn narrowband_gain(z: f64, cfg: &DeviceConfig) -> (f64, f64, f64) {
    let x = cfg.coupling_g * z;
    (x.cosh().powi(2), x.sinh().powi(2), cfg.coupling_phase)
}

/// Which density of a [`FluxSpectrum`] to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxChannel {
    Signal,
    NoiseTe,
    NoiseTm,
}

/// Sampled signal/noise spectrum over a grid plus band-integrated totals.
#[derive(Debug, Clone)]
pub struct FluxSpectrum {
    pub grid: SpectralGrid,
    /// Signal density per grid detuning (TE at +nu; equals TM at -nu).
    pub signal: Vec<f64>,
    pub noise_te: Vec<f64>,
    pub noise_tm: Vec<f64>,
    /// Totals integrated over the full grid span, photons/s.
    pub total_signal: f64,
    pub total_noise_te: f64,
    pub total_noise_tm: f64,
    length: f64,
    cfg: DeviceConfig,
}

impl FluxSpectrum {
    /// Evaluate the closed forms over the grid (parallel across detunings,
    /// order-preserving) and integrate the totals adaptively.
    pub fn compute(grid: SpectralGrid, length: f64, cfg: &DeviceConfig) -> Result<Self> {
        grid.validate()?;
        cfg.validate()?;
        if length < 0.0 {
            return Err(Error::InvalidParameter("length must be >= 0".into()));
        }
        let rows: Vec<(f64, f64, f64)> = grid
            .detunings
            .par_iter()
            .map(|&nu| {
                let s = signal_flux_density(nu, length, cfg);
                let (nte, ntm) = noise_flux_density(nu, length, cfg)?;
                Ok((s, nte, ntm))
            })
            .collect::<Result<_>>()?;
        let signal = rows.iter().map(|r| r.0).collect();
        let noise_te = rows.iter().map(|r| r.1).collect();
        let noise_tm = rows.iter().map(|r| r.2).collect();

        let (lo, hi) = grid.span();
        let total_signal =
            quad::integrate(&|nu| signal_flux_density(nu, length, cfg), lo, hi, 1e-9)?;
        let total_noise_te = quad::integrate(
            &|nu| noise_flux_density(nu, length, cfg).map(|p| p.0).unwrap_or(0.0),
            lo,
            hi,
            1e-9,
        )?;
        let total_noise_tm = quad::integrate(
            &|nu| noise_flux_density(nu, length, cfg).map(|p| p.1).unwrap_or(0.0),
            lo,
            hi,
            1e-9,
        )?;
        Ok(Self {
            grid,
            signal,
            noise_te,
            noise_tm,
            total_signal,
            total_noise_te,
            total_noise_tm,
            length,
            cfg: cfg.clone(),
        })
    }

    /// Adaptive band integral of the requested density over
    /// [nu_lo, nu_hi], photons/s. Relative tolerance 1e-9. The window must
    /// lie within the grid span.
    pub fn integrate_band(&self, window: (f64, f64), channel: FluxChannel) -> Result<f64> {
        let (lo, hi) = window;
        let (glo, ghi) = self.grid.span();
        if lo < glo || hi > ghi || lo > hi {
            return Err(Error::Range(format!(
                "window [{lo:.3e}, {hi:.3e}] outside grid span [{glo:.3e}, {ghi:.3e}]"
            )));
        }
        let cfg = &self.cfg;
        let l = self.length;
        match channel {
            FluxChannel::Signal => {
                quad::integrate(&|nu| signal_flux_density(nu, l, cfg), lo, hi, 1e-9)
            }
            FluxChannel::NoiseTe => quad::integrate(
                &|nu| noise_flux_density(nu, l, cfg).map(|p| p.0).unwrap_or(0.0),
                lo,
                hi,
                1e-9,
            ),
            FluxChannel::NoiseTm => quad::integrate(
                &|nu| noise_flux_density(nu, l, cfg).map(|p| p.1).unwrap_or(0.0),
                lo,
                hi,
                1e-9,
            ),
        }
    }
}
