//! Independent brute-force verification of the closed forms: fundamental-
//! matrix integration of the coupled mode equations, deterministic
//! second-moment quadrature of the Langevin noise, and Wick-theorem
//! evaluation of the fourth-order flux moments.
//!
//! The integrators here never touch the kappa / mu+- / K+- algebra of the
//! spectral module; the ODE coefficients are assembled directly from the
//! device configuration so the cross-check is genuine.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::DeviceConfig;
use crate::quad::pairwise_sum;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub const IDENTITY: Mat2 = [
    [Complex64::new(1.0, 0.0), ZERO],
    [ZERO, Complex64::new(1.0, 0.0)],
];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat_axpy(c: &mut Mat2, s: Complex64, a: &Mat2) {
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] += s * a[i][j];
        }
    }
}

fn mat_max_abs(a: &Mat2) -> f64 {
    a.iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Raw per-mode ODE coefficients taken straight from the config.
#[derive(Debug, Clone, Copy)]
struct RawSystem {
    inv_v_te: f64,
    inv_v_tm: f64,
    gamma_te: f64,
    gamma_tm: f64,
    g: Complex64,
    dk: f64,
    nu: f64,
}

impl RawSystem {
    fn new(nu: f64, cfg: &DeviceConfig, include_loss: bool) -> Self {
        Self {
            inv_v_te: 1.0 / cfg.te.group_velocity,
            inv_v_tm: 1.0 / cfg.tm.group_velocity,
            gamma_te: if include_loss { cfg.gamma_te() } else { 0.0 },
            gamma_tm: if include_loss { cfg.gamma_tm() } else { 0.0 },
            g: cfg.g(),
            dk: cfg.phase_mismatch_dk,
            nu,
        }
    }

    /// Mean of the diagonal of the coefficient matrix. Factoring it out
    /// keeps the fast common phase exp(i nu (1/v_TE + 1/v_TM) z / 2) out of
    /// the stepped system, which would otherwise dominate the RK4 error.
    fn mean_trace(&self) -> Complex64 {
        Complex64::new(
            -0.5 * (self.gamma_te + self.gamma_tm),
            0.5 * self.nu * (self.inv_v_te + self.inv_v_tm),
        )
    }

    /// Coefficient matrix of d/dz (a_TE(nu), a_TM(-nu)^dag) minus the mean
    /// trace.
    fn a_tilde(&self, z: f64) -> Mat2 {
        let m = self.mean_trace();
        let a11 = Complex64::new(-self.gamma_te, self.nu * self.inv_v_te) - m;
        let a22 = Complex64::new(-self.gamma_tm, self.nu * self.inv_v_tm) - m;
        let phase = Complex64::from_polar(1.0, -self.dk * z);
        [
            [a11, I * self.g * phase],
            [-I * self.g.conj() * phase.conj(), a22],
        ]
    }
}

/// Numerically integrated fundamental matrix of the coupled mode
/// equations, mapping boundary operators (a_TE(nu), a_TM(-nu)^dag) at
/// z = 0 to z = L.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub nu: f64,
    pub entries: Mat2,
    /// Richardson estimate of the integration error, relative to the
    /// largest entry.
    pub error_estimate: f64,
}

fn rk4_transfer(sys: &RawSystem, length: f64, n_steps: usize) -> Mat2 {
    let h = length / n_steps as f64;
    let mut t = IDENTITY;
    for i in 0..n_steps {
        let z = i as f64 * h;
        let a1 = sys.a_tilde(z);
        let a2 = sys.a_tilde(z + 0.5 * h);
        let a3 = a2;
        let a4 = sys.a_tilde(z + h);

        let k1 = mat_mul(&a1, &t);
        let mut t2 = t;
        mat_axpy(&mut t2, Complex64::new(0.5 * h, 0.0), &k1);
        let k2 = mat_mul(&a2, &t2);
        let mut t3 = t;
        mat_axpy(&mut t3, Complex64::new(0.5 * h, 0.0), &k2);
        let k3 = mat_mul(&a3, &t3);
        let mut t4 = t;
        mat_axpy(&mut t4, Complex64::new(h, 0.0), &k3);
        let k4 = mat_mul(&a4, &t4);

        mat_axpy(&mut t, Complex64::new(h / 6.0, 0.0), &k1);
        mat_axpy(&mut t, Complex64::new(h / 3.0, 0.0), &k2);
        mat_axpy(&mut t, Complex64::new(h / 3.0, 0.0), &k3);
        mat_axpy(&mut t, Complex64::new(h / 6.0, 0.0), &k4);
    }
    t
}

fn transfer_with_loss_mode(
    nu: f64,
    length: f64,
    cfg: &DeviceConfig,
    step: f64,
    include_loss: bool,
) -> Result<TransferMatrix> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter("step must be positive".into()));
    }
    let sys = RawSystem::new(nu, cfg, include_loss);
    if length == 0.0 {
        return Ok(TransferMatrix {
            nu,
            entries: IDENTITY,
            error_estimate: 0.0,
        });
    }
    let n = (length / step).ceil().max(1.0) as usize;
    let coarse = rk4_transfer(&sys, length, n);
    let fine = rk4_transfer(&sys, length, 2 * n);
    let mut diff: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            diff = diff.max((coarse[i][j] - fine[i][j]).norm());
        }
    }
    let scale = mat_max_abs(&fine).max(1e-300);
    let err = diff / 15.0 / scale;
    if err > 1e-6 {
        return Err(Error::Accuracy(format!(
            "transfer-matrix step {step:e} too coarse: Richardson estimate {err:e} > 1e-6"
        )));
    }
    // undo the mean-trace factor
    let back = (sys.mean_trace() * length).exp();
    let mut entries = fine;
    for row in entries.iter_mut() {
        for v in row.iter_mut() {
            *v *= back;
        }
    }
    Ok(TransferMatrix {
        nu,
        entries,
        error_estimate: err,
    })
}

/// Fixed-step RK4 fundamental matrix with a step-halving Richardson check.
/// Errors out when the estimated relative error exceeds 1e-6.
pub fn integrate_transfer(
    nu: f64,
    length: f64,
    cfg: &DeviceConfig,
    step: f64,
) -> Result<TransferMatrix> {
    transfer_with_loss_mode(nu, length, cfg, step, true)
}

/// Same integration with the loss rates set to zero; used by the
/// correlation cross-checks, which treat attenuation as a common factor.
pub fn integrate_transfer_lossless(
    nu: f64,
    length: f64,
    cfg: &DeviceConfig,
    step: f64,
) -> Result<TransferMatrix> {
    transfer_with_loss_mode(nu, length, cfg, step, false)
}

/// Signal spectral flux density from the numerically integrated transfer
/// matrix: |T_12|^2 / (2 pi) for vacuum inputs.
pub fn signal_flux_from_transfer(
    nu: f64,
    length: f64,
    cfg: &DeviceConfig,
    step: f64,
) -> Result<f64> {
    let t = integrate_transfer(nu, length, cfg, step)?;
    Ok(t.entries[0][1].norm_sqr() / (2.0 * std::f64::consts::PI))
}

/// Second-moment Langevin blocks. W' = 2 Re(m) W + A~ W + W A~^dag + S with
/// the diagonal source S; W_11(L) is a normally ordered noise flux.
fn rk4_second_moment(sys: &RawSystem, length: f64, n_steps: usize, source: [f64; 2]) -> Mat2 {
    let h = length / n_steps as f64;
    let two_re_m = Complex64::new(2.0 * sys.mean_trace().re, 0.0);
    let s_mat: Mat2 = [
        [Complex64::new(source[0], 0.0), ZERO],
        [ZERO, Complex64::new(source[1], 0.0)],
    ];
    let rhs = |z: f64, w: &Mat2| -> Mat2 {
        let a = sys.a_tilde(z);
        // A~ W + W A~^dag
        let aw = mat_mul(&a, w);
        let mut adag = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                adag[i][j] = a[j][i].conj();
            }
        }
        let wad = mat_mul(w, &adag);
        let mut out = s_mat;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += two_re_m * w[i][j] + aw[i][j] + wad[i][j];
            }
        }
        out
    };
    let mut w = [[ZERO; 2]; 2];
    for i in 0..n_steps {
        let z = i as f64 * h;
        let k1 = rhs(z, &w);
        let mut w2 = w;
        mat_axpy(&mut w2, Complex64::new(0.5 * h, 0.0), &k1);
        let k2 = rhs(z + 0.5 * h, &w2);
        let mut w3 = w;
        mat_axpy(&mut w3, Complex64::new(0.5 * h, 0.0), &k2);
        let k3 = rhs(z + 0.5 * h, &w3);
        let mut w4 = w;
        mat_axpy(&mut w4, Complex64::new(h, 0.0), &k3);
        let k4 = rhs(z + h, &w4);
        mat_axpy(&mut w, Complex64::new(h / 6.0, 0.0), &k1);
        mat_axpy(&mut w, Complex64::new(h / 3.0, 0.0), &k2);
        mat_axpy(&mut w, Complex64::new(h / 3.0, 0.0), &k3);
        mat_axpy(&mut w, Complex64::new(h / 6.0, 0.0), &k4);
    }
    w
}

/// Sampled propagated Green's kernel G(L, xi) = T(L) T(xi)^-1 of the
/// coupled system: the response at z = L to a unit injection at xi.
/// Causality along z sets the kernel to zero for xi > L; at xi = L it is
/// the identity.
#[derive(Debug, Clone)]
pub struct NoiseGreens {
    pub nu: f64,
    pub xi: Vec<f64>,
    pub kernel: Vec<Mat2>,
}

fn mat_inv(a: &Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

/// Sample the noise Green's kernel on a uniform xi grid over [0, L].
pub fn noise_greens(
    nu: f64,
    length: f64,
    cfg: &DeviceConfig,
    step: f64,
    samples: usize,
) -> Result<NoiseGreens> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let t_l = integrate_transfer(nu, length, cfg, step)?.entries;
    let mut xi = Vec::with_capacity(samples);
    let mut kernel = Vec::with_capacity(samples);
    for i in 0..samples {
        let x = length * i as f64 / (samples - 1) as f64;
        let t_x = integrate_transfer(nu, x, cfg, step)?.entries;
        xi.push(x);
        kernel.push(mat_mul(&t_l, &mat_inv(&t_x)));
    }
    Ok(NoiseGreens { nu, xi, kernel })
}

/// Langevin noise fluxes (noise_te, noise_tm) by deterministic
/// second-moment integration of the reservoir correlators, at reservoir
/// occupation n_T. Reduces to the closed form at n_T = 0; for n_T > 0 each
/// mode additionally picks up its own-loss contribution (no closed form to
/// compare against).
pub fn noise_flux_quadrature(
    nu: f64,
    length: f64,
    cfg: &DeviceConfig,
    n_t: f64,
    step: f64,
) -> Result<(f64, f64)> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter("step must be positive".into()));
    }
    if length == 0.0 {
        return Ok((0.0, 0.0));
    }
    if n_t < 0.0 {
        return Err(Error::InvalidParameter("n_T must be >= 0".into()));
    }
    let sys = RawSystem::new(nu, cfg, true);
    let n = (length / step).ceil().max(1.0) as usize;
    let pi = std::f64::consts::PI;
    // TE flux moments: sources (gamma_TE n_T, gamma_TM (n_T + 1)) / pi
    let s_te = [sys.gamma_te * n_t / pi, sys.gamma_tm * (n_t + 1.0) / pi];
    // TM flux moments: sources (gamma_TE (n_T + 1), gamma_TM n_T) / pi
    let s_tm = [sys.gamma_te * (n_t + 1.0) / pi, sys.gamma_tm * n_t / pi];
    let w_coarse = rk4_second_moment(&sys, length, n, s_te);
    let w_fine = rk4_second_moment(&sys, length, 2 * n, s_te);
    let v_fine = rk4_second_moment(&sys, length, 2 * n, s_tm);
    let err = (w_coarse[0][0].re - w_fine[0][0].re).abs()
        / 15.0
        / w_fine[0][0].re.abs().max(1e-300);
    if err > 1e-6 && w_fine[0][0].re > 1e-280 {
        return Err(Error::Accuracy(format!(
            "noise second-moment step too coarse: Richardson estimate {err:e}"
        )));
    }
    Ok((w_fine[0][0].re, v_fine[1][1].re))
}

/// Commutator sum rule: |T_11|^2 - |T_12|^2 plus the Langevin commutator
/// integral must equal 1 in the presence of loss (and from T alone when
/// the losses vanish). Returns the full sum.
pub fn commutator_sum(nu: f64, length: f64, cfg: &DeviceConfig, step: f64) -> Result<f64> {
    let t = integrate_transfer(nu, length, cfg, step)?;
    let homo = t.entries[0][0].norm_sqr() - t.entries[0][1].norm_sqr();
    if length == 0.0 {
        return Ok(homo);
    }
    let sys = RawSystem::new(nu, cfg, true);
    let n = (length / step).ceil().max(1.0) as usize;
    let x = rk4_second_moment(&sys, length, 2 * n, [2.0 * sys.gamma_te, -2.0 * sys.gamma_tm]);
    Ok(homo + x[0][0].re)
}

/// Fourth-order flux moments of the band-filtered TE/TM fluxes by
/// Gaussian-state (Wick) factorization over a discretized spectrum.
///
/// The detection windows sit at detunings +-window_center with common
/// width window_width; TE is detected in the upper window, TM in the
/// mirror window. The kernels come from numerically integrated lossless
/// transfer matrices (the regime in which the Langevin terms are
/// negligible in the windows); propagation attenuation enters as the
/// common factor e^{-(gamma_TE + gamma_TM) L}. Converges to the
/// correlations-module closed forms at second order in the bin width.
pub fn wick_fourth_moment(
    window_center: f64,
    window_width: f64,
    length: f64,
    tau: f64,
    cfg: &DeviceConfig,
    n_bins: usize,
) -> Result<(f64, f64, f64)> {
    if !(window_width > 0.0) || n_bins == 0 {
        return Err(Error::Precondition(
            "window width and bin count must be positive".into(),
        ));
    }
    if window_center - 0.5 * window_width <= 0.0 {
        return Err(Error::Precondition(
            "detection windows overlap: require window_center > window_width / 2".into(),
        ));
    }
    let lo = window_center - 0.5 * window_width;
    let dn = window_width / n_bins as f64;
    let step = length / 1024.0;

    let rows: Vec<(f64, f64, f64, f64, Complex64)> = (0..n_bins)
        .into_par_iter()
        .map(|i| {
            let nu = lo + (i as f64 + 0.5) * dn;
            let t = integrate_transfer_lossless(nu, length, cfg, step)?;
            let u = t.entries[0][0];
            let w = t.entries[0][1];
            let wt = t.entries[1][0];
            let ut = t.entries[1][1];
            let phase = Complex64::from_polar(1.0, -nu * tau);
            Ok((
                w.norm_sqr(),
                u.norm_sqr(),
                wt.norm_sqr(),
                ut.norm_sqr(),
                u * wt.conj() * phase,
            ))
        })
        .collect::<Result<_>>()?;

    let two_pi = 2.0 * std::f64::consts::PI;
    let att = (-cfg.gamma_sum() * length).exp();
    let weight = att * dn / two_pi;
    let sw: f64 = pairwise_sum(&rows.iter().map(|r| r.0).collect::<Vec<_>>()) * weight;
    let su: f64 = pairwise_sum(&rows.iter().map(|r| r.1).collect::<Vec<_>>()) * weight;
    let swt: f64 = pairwise_sum(&rows.iter().map(|r| r.2).collect::<Vec<_>>()) * weight;
    let sut: f64 = pairwise_sum(&rows.iter().map(|r| r.3).collect::<Vec<_>>()) * weight;
    let cross = crate::quad::pairwise_sum_complex(&rows.iter().map(|r| r.4).collect::<Vec<_>>())
        * Complex64::new(weight, 0.0);

    let d_te = sw * su;
    let d_tm = swt * sut;
    let k = cross.norm_sqr();
    Ok((k, d_te, d_tm))
}
