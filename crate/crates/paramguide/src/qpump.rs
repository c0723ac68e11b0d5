//! Spatial Schrödinger propagation of the state vector for a quantized
//! single-photon pump: discrete-band amplitude equations, the two-band
//! closed-form Rabi solution (Bell-state generation), an N-band numerical
//! solver, and the broadband asymptotics.
//!
//! State space: energy conservation confines the dynamics to
//! {|1_p, vac>} u {|0_p, 1_TE(nu), 1_TM(-nu)>}, so the amplitudes are
//! C_p plus one C_W per band. The amplitude equations are
//!
//!   dC_p/dz     = -i G* sqrt(Q0) sum_nu C_W(nu)
//!   dC_W(nu)/dz =  i delta_nu C_W(nu) - i G sqrt(Q0) C_p
//!
//! with Q0 = Delta_omega / (2 pi) and the per-band walk-off
//! delta_nu = nu (1/v_TM - 1/v_TE).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{derive_g, DeviceConfig, ModeParams};

/// Discrete symmetric band grid for the decay-photon spectrum.
#[derive(Debug, Clone)]
pub struct BandGrid {
    /// Band centers nu, rad/s; symmetric about 0, non-overlapping.
    pub nu_values: Vec<f64>,
    /// Common band width Delta_omega, rad/s.
    pub band_width: f64,
    /// Total covered width Delta_Omega = count * Delta_omega, rad/s.
    pub total_width: f64,
    /// Q0 = Delta_omega / (2 pi), 1/s.
    pub q0: f64,
}

impl BandGrid {
    /// `count` contiguous bands of width `band_width` centered on nu = 0.
    pub fn uniform(count: usize, band_width: f64) -> Result<Self> {
        if count == 0 || !(band_width > 0.0) {
            return Err(Error::InvalidParameter(
                "band grid needs count >= 1 and positive width".into(),
            ));
        }
        let nu_values = (0..count)
            .map(|m| (m as f64 - (count as f64 - 1.0) / 2.0) * band_width)
            .collect();
        Ok(Self {
            nu_values,
            band_width,
            total_width: count as f64 * band_width,
            q0: band_width / (2.0 * std::f64::consts::PI),
        })
    }

    /// The two symmetric bands +-nu of the closed-form Rabi problem.
    pub fn two_band(nu: f64, band_width: f64) -> Result<Self> {
        if !(nu > 0.0) || !(band_width > 0.0) {
            return Err(Error::InvalidParameter(
                "two_band needs nu > 0 and positive width".into(),
            ));
        }
        Ok(Self {
            nu_values: vec![-nu, nu],
            band_width,
            total_width: 2.0 * band_width,
            q0: band_width / (2.0 * std::f64::consts::PI),
        })
    }
}

/// Pump and per-band amplitudes at a cross-section z.
#[derive(Debug, Clone)]
pub struct StateAmplitudes {
    pub c_p: Complex64,
    pub c_w: Vec<Complex64>,
    pub z: f64,
}

impl StateAmplitudes {
    pub fn initial_pump(n_bands: usize) -> Self {
        Self {
            c_p: Complex64::new(1.0, 0.0),
            c_w: vec![Complex64::new(0.0, 0.0); n_bands],
            z: 0.0,
        }
    }

    /// |C_p|^2 + sum |C_W|^2; conserved at 1 for the lossless system.
    pub fn norm_sq(&self) -> f64 {
        self.c_p.norm_sqr() + self.c_w.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

/// RK4 propagation of the amplitude system from z = 0 to z_max, recording
/// every `record_every`-th step (and always the final one). The initial
/// state defaults to the single-photon pump C_p = 1 and must be normalized
/// to 1 within 1e-9.
pub fn propagate_amplitudes(
    grid: &BandGrid,
    cfg: &DeviceConfig,
    z_max: f64,
    n_steps: usize,
    initial: Option<StateAmplitudes>,
    record_every: usize,
) -> Result<Vec<StateAmplitudes>> {
    if n_steps == 0 || !(z_max > 0.0) {
        return Err(Error::InvalidParameter(
            "propagation needs z_max > 0 and n_steps >= 1".into(),
        ));
    }
    let n = grid.nu_values.len();
    let state = initial.unwrap_or_else(|| StateAmplitudes::initial_pump(n));
    if state.c_w.len() != n {
        return Err(Error::Precondition(format!(
            "initial state has {} bands, grid has {n}",
            state.c_w.len()
        )));
    }
    if (state.norm_sq() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "initial state norm^2 = {:.12}, expected 1",
            state.norm_sq()
        )));
    }

    let dinv = 1.0 / cfg.tm.group_velocity - 1.0 / cfg.te.group_velocity;
    let deltas: Vec<f64> = grid.nu_values.iter().map(|&nu| nu * dinv).collect();
    let g_eff = cfg.big_g() * grid.q0.sqrt(); // G sqrt(Q0), 1/cm
    let record_every = record_every.max(1);

    // flat state vector: [C_p, C_W...]
    let mut c: Vec<Complex64> = Vec::with_capacity(n + 1);
    c.push(state.c_p);
    c.extend_from_slice(&state.c_w);

    let rhs = |c: &[Complex64], out: &mut [Complex64]| {
        let i = Complex64::new(0.0, 1.0);
        let sum: Complex64 = c[1..].iter().sum();
        out[0] = -i * g_eff.conj() * sum;
        for (k, &d) in deltas.iter().enumerate() {
            out[k + 1] = i * d * c[k + 1] - i * g_eff * c[0];
        }
    };

    let h = z_max / n_steps as f64;
    let mut traj = Vec::with_capacity(n_steps / record_every + 2);
    let snapshot = |c: &[Complex64], z: f64| StateAmplitudes {
        c_p: c[0],
        c_w: c[1..].to_vec(),
        z,
    };
    traj.push(snapshot(&c, 0.0));

    let dim = n + 1;
    let mut k1 = vec![Complex64::default(); dim];
    let mut k2 = vec![Complex64::default(); dim];
    let mut k3 = vec![Complex64::default(); dim];
    let mut k4 = vec![Complex64::default(); dim];
    let mut tmp = vec![Complex64::default(); dim];
    for step in 0..n_steps {
        rhs(&c, &mut k1);
        for j in 0..dim {
            tmp[j] = c[j] + 0.5 * h * k1[j];
        }
        rhs(&tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = c[j] + 0.5 * h * k2[j];
        }
        rhs(&tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = c[j] + h * k3[j];
        }
        rhs(&tmp, &mut k4);
        for j in 0..dim {
            c[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if (step + 1) % record_every == 0 || step + 1 == n_steps {
            traj.push(snapshot(&c, (step + 1) as f64 * h));
        }
    }
    Ok(traj)
}

/// Closed-form two-band solution at distance z.
#[derive(Debug, Clone, Copy)]
pub struct TwoBandState {
    pub c_p: Complex64,
    pub c_w1: Complex64,
    pub c_w2: Complex64,
    /// Rabi wavenumber K_R = sqrt(delta^2 + 2 Q0 |G|^2), 1/cm.
    pub k_r: f64,
    /// Relative phase between the two decay branches.
    pub phi_z: f64,
}

/// Two-band Rabi solution for the initial condition C_p = 1:
///
///   C_W1,2 = -i (G sqrt(Q0) / K_R) [sin(K_R z) -+ i (delta/K_R)(cos(K_R z) - 1)]
///   C_p    = delta^2 / K_R^2 + (2 Q0 |G|^2 / K_R^2) cos(K_R z)
///
/// |C_W1| = |C_W2| for all z; at delta = 0 and K_R z = pi/2 the decay
/// branches form a Bell state with |C_W|^2 = 1/2 each.
pub fn two_band_closed_form(
    delta: f64,
    big_g: Complex64,
    q0: f64,
    z: f64,
) -> Result<TwoBandState> {
    if !(q0 > 0.0) {
        return Err(Error::InvalidParameter("Q0 must be positive".into()));
    }
    let k_r = (delta * delta + 2.0 * q0 * big_g.norm_sqr()).sqrt();
    if k_r == 0.0 {
        return Ok(TwoBandState {
            c_p: Complex64::new(1.0, 0.0),
            c_w1: Complex64::default(),
            c_w2: Complex64::default(),
            k_r,
            phi_z: 0.0,
        });
    }
    let i = Complex64::new(0.0, 1.0);
    let (s, cth) = ((k_r * z).sin(), (k_r * z).cos());
    let d_over = delta / k_r;
    let pre = -i * big_g * q0.sqrt() / k_r;
    let c_w1 = pre * (Complex64::new(s, 0.0) - i * d_over * (cth - 1.0));
    let c_w2 = pre * (Complex64::new(s, 0.0) + i * d_over * (cth - 1.0));
    let c_p = Complex64::new(
        d_over * d_over + (2.0 * q0 * big_g.norm_sqr() / (k_r * k_r)) * cth,
        0.0,
    );
    let num = Complex64::new(s, d_over * (cth - 1.0));
    let den = Complex64::new(s, -d_over * (cth - 1.0));
    let phi_z = if den.norm() > 0.0 { (num / den).arg() } else { 0.0 };
    Ok(TwoBandState {
        c_p,
        c_w1,
        c_w2,
        k_r,
        phi_z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BroadbandRegime {
    /// alpha < 0.1: spatial Rabi oscillations with K_R = |G| sqrt(DOm/2pi).
    Rabi,
    /// alpha > 10: exponential decay of C_p.
    Decay,
    Intermediate,
}

/// Broadband classification. alpha = sqrt(Delta_Omega) |1/v_TM - 1/v_TE| / |G|
/// controls whether the pump amplitude Rabi-oscillates or decays. Both
/// analytic candidates for the decay exponent are reported: the factor-2
/// question between them is settled numerically by [`fit_decay_exponent`]
/// against the N-band solver (the half value wins).
#[derive(Debug, Clone, Copy)]
pub struct BroadbandReport {
    pub alpha: f64,
    pub regime: BroadbandRegime,
    /// K_R = |G| sqrt(Delta_Omega / 2 pi), meaningful in the Rabi regime.
    pub rabi_wavenumber: f64,
    /// kappa = |G|^2 / (2 |1/v_TM - 1/v_TE|).
    pub decay_exponent_half: f64,
    /// kappa = |G|^2 / |1/v_TM - 1/v_TE|.
    pub decay_exponent_full: f64,
}

pub fn broadband_regime(cfg: &DeviceConfig, total_width: f64) -> Result<BroadbandReport> {
    if !(total_width > 0.0) {
        return Err(Error::InvalidParameter(
            "total bandwidth must be positive".into(),
        ));
    }
    let dinv = (1.0 / cfg.tm.group_velocity - 1.0 / cfg.te.group_velocity).abs();
    let g = cfg.coupling_big_g;
    if g == 0.0 {
        return Err(Error::InvalidParameter(
            "broadband regime needs |G| > 0".into(),
        ));
    }
    let alpha = total_width.sqrt() * dinv / g;
    let regime = if alpha < 0.1 {
        BroadbandRegime::Rabi
    } else if alpha > 10.0 {
        BroadbandRegime::Decay
    } else {
        BroadbandRegime::Intermediate
    };
    let (half, full) = if dinv > 0.0 {
        (0.5 * g * g / dinv, g * g / dinv)
    } else {
        (0.0, 0.0)
    };
    Ok(BroadbandReport {
        alpha,
        regime,
        rabi_wavenumber: g * (total_width / (2.0 * std::f64::consts::PI)).sqrt(),
        decay_exponent_half: half,
        decay_exponent_full: full,
    })
}

/// Least-squares decay exponent of ln|C_p| over the window where |C_p|
/// lies in [e^-3, e^-1/2]. Errors when the trajectory oscillates (Rabi
/// regime) or never drops below e^-1.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub kappa: f64,
    pub rms_residual: f64,
}

pub fn fit_decay_exponent(trajectory: &[StateAmplitudes]) -> Result<DecayFit> {
    if trajectory.len() < 8 {
        return Err(Error::Precondition("trajectory too short to fit".into()));
    }
    let amps: Vec<(f64, f64)> = trajectory.iter().map(|s| (s.z, s.c_p.norm())).collect();
    // Reject non-monotone |C_p| (spatial Rabi oscillation).
    let mut fell_below = f64::INFINITY;
    for w in amps.windows(2) {
        if w[1].1 > w[0].1 * (1.0 + 1e-9) {
            return Err(Error::WrongRegime(format!(
                "|C_p| increases near z = {:.3e}; trajectory is oscillatory, not decaying",
                w[1].0
            )));
        }
        fell_below = fell_below.min(w[1].1);
    }
    if fell_below > (-1.0f64).exp() {
        return Err(Error::Precondition(
            "trajectory too short: |C_p| never drops below e^-1".into(),
        ));
    }
    let lo = (-3.0f64).exp();
    let hi = (-0.5f64).exp();
    let pts: Vec<(f64, f64)> = amps
        .iter()
        .filter(|(_, a)| *a > lo && *a < hi)
        .map(|&(z, a)| (z, a.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Precondition(
            "too few samples inside the fit window; record more steps".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let rms = (pts
        .iter()
        .map(|&(z, y)| (y - slope * z - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        kappa: -slope,
        rms_residual: rms,
    })
}

/// Both readings of the single-pump-photon conversion probability after a
/// propagation length l: (K_R l, (K_R l)^2). The quoted device estimate
/// matches the linear reading while the amplitude dynamics give the
/// quadratic one; both are reported, neither is asserted.
pub fn pump_depletion_estimates(k_r: f64, length: f64) -> (f64, f64) {
    let x = k_r * length;
    (x, x * x)
}

/// The classical coupling g that corresponds to a classical pump carrying
/// the same power as the quantized single-photon flux,
/// P = hbar omega_p Q0. Built through the overlap-integral route so the
/// identity K_R(delta = 0) = g is a genuine cross-formalism check.
pub fn equivalent_classical_coupling(
    big_g_mag: f64,
    pump: &ModeParams,
    q0: f64,
    te: &ModeParams,
    tm: &ModeParams,
) -> Result<f64> {
    if !(q0 > 0.0) {
        return Err(Error::InvalidParameter("Q0 must be positive".into()));
    }
    pump.validate()?;
    // The quantized-pump overlap integral, reconstructed from G.
    let a_quantum = big_g_mag
        * crate::model::HBAR
        * (te.group_velocity * tm.group_velocity * pump.group_velocity).sqrt();
    // Classical pump field with power hbar omega_p Q0 has amplitude
    // sqrt(2 Q0 / v_p) times the single-photon mode amplitude.
    let a_classical = a_quantum * (2.0 * q0 / pump.group_velocity).sqrt();
    let g = derive_g(Complex64::new(a_classical, 0.0), te, tm)?;
    Ok(g.re)
}
