//! Deterministic numerical helpers: pairwise summation, adaptive
//! Gauss-Kronrod quadrature, and stable removable-singularity kernels.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fixed-order pairwise summation. Deterministic for a given slice and
/// accurate to O(eps log n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
        }
    }
}

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule,
// on [-1, 1]. Standard QUADPACK values.
const XGK: [f64; 15] = [
    -0.991455371120813,
    -0.949107912342759,
    -0.864864423359769,
    -0.741531185599394,
    -0.586087235467691,
    -0.405845151377397,
    -0.207784955007898,
    0.0,
    0.207784955007898,
    0.405845151377397,
    0.586087235467691,
    0.741531185599394,
    0.864864423359769,
    0.949107912342759,
    0.991455371120813,
];
const WGK: [f64; 15] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
    0.204432940075298,
    0.190350578064785,
    0.169004726639267,
    0.140653259715525,
    0.104790010322250,
    0.063092092629979,
    0.022935322010529,
];
const WG: [f64; 7] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
    0.381830050505119,
    0.279705391489277,
    0.129484966168870,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let v = f(mid + half * x);
        kron += wk * v;
        if i % 2 == 1 {
            gauss += WG[i / 2] * v;
        }
    }
    kron *= half;
    gauss *= half;
    (kron, (kron - gauss).norm())
}

/// Adaptive Gauss-Kronrod integration of a complex-valued integrand with a
/// relative tolerance. Bisection refinement, deterministic order.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (whole, _) = gk15(f, a, b);
    let scale = whole.norm().max(1e-300);
    let mut total = Complex64::new(0.0, 0.0);
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(f, lo, hi);
        if e <= rel_tol * scale.max(v.norm()) * 0.5 || depth >= 48 {
            if depth >= 48 && e > 1e3 * rel_tol * scale {
                return Err(Error::Accuracy(format!(
                    "quadrature failed to converge on [{lo}, {hi}] (err {e:.3e})"
                )));
            }
            total += v;
        } else {
            let m = 0.5 * (lo + hi);
            // push right first so the left half is processed first (ordered)
            stack.push((m, hi, depth + 1));
            stack.push((lo, m, depth + 1));
        }
    }
    Ok(total)
}

/// Adaptive quadrature of a real integrand; see [`integrate_complex`].
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let wrapped = |x: f64| Complex64::new(f(x), 0.0);
    integrate_complex(&wrapped, a, b, rel_tol).map(|v| v.re)
}

/// (e^z - 1)/z, stable near z = 0 (value 1 there).
pub fn em1_over(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        // 1 + z/2 + z^2/6 + z^3/24 + z^4/120; truncation < 1e-22 relative
        Complex64::new(1.0, 0.0)
            + z * (Complex64::new(0.5, 0.0)
                + z * (Complex64::new(1.0 / 6.0, 0.0)
                    + z * (Complex64::new(1.0 / 24.0, 0.0) + z * (1.0 / 120.0))))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Real (e^x - 1)/x via expm1.
pub fn em1_over_real(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// sinh(z)/z, stable near z = 0 (value 1 there).
pub fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) + z2 * (Complex64::new(1.0 / 6.0, 0.0) + z2 * (1.0 / 120.0))
    } else {
        z.sinh() / z
    }
}

/// sin(x)/x with the removable singularity at 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Moment integral I_k(a, l) = int_0^l u^k e^{a u} du for even k,
/// stable for small |a l|.
pub fn exp_moment(k: u32, a: f64, l: f64) -> f64 {
    let al = a * l;
    if al.abs() < 0.5 {
        // l^{k+1} * sum_m (a l)^m / (m! (k + m + 1)); converges fast
        let mut term = 1.0;
        let mut sum = 1.0 / (k as f64 + 1.0);
        for m in 1..30 {
            term *= al / m as f64;
            sum += term / (k as f64 + m as f64 + 1.0);
            if term.abs() < 1e-20 {
                break;
            }
        }
        l.powi(k as i32 + 1) * sum
    } else {
        // integrate by parts: I_k = (l^k e^{al} - k I_{k-1}) / a
        let mut i_prev = (al.exp() - 1.0) / a; // k = 0
        let mut lk = 1.0;
        for j in 1..=k {
            lk *= l;
            i_prev = (lk * al.exp() - j as f64 * i_prev) / a;
        }
        i_prev
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (0..1001).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert_relative_eq!(pairwise_sum(&v), naive, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_constant_rectangle() {
        let q = integrate(&|_| 2.5, -1.0, 3.0, 1e-9).unwrap();
        assert_relative_eq!(q, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_zero() {
        assert_eq!(integrate(&|_| 0.0, 0.0, 1.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_oscillatory() {
        // int_0^10 sin(40 x) dx = (1 - cos 400)/40
        let q = integrate(&|x: f64| (40.0 * x).sin(), 0.0, 10.0, 1e-11).unwrap();
        let exact = (1.0 - (400.0f64).cos()) / 40.0;
        assert_relative_eq!(q, exact, max_relative = 1e-9);
    }

    #[test]
    fn em1_over_series_joins_smoothly() {
        // The naive reference itself cancels to ~eps/|z| accuracy, so
        // compare in norm with headroom for that.
        for &x in &[1e-6, 9.9e-5, 1.01e-4, 0.3] {
            let z = Complex64::new(x, 0.5 * x);
            let direct = (z.exp() - 1.0) / z;
            assert!(
                (em1_over(z) - direct).norm() < 1e-10 * direct.norm(),
                "mismatch at {z}"
            );
        }
        assert_eq!(em1_over(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn exp_moment_against_quadrature() {
        for &(k, a, l) in &[(2u32, -7.0, 0.2), (4, -7.0, 0.2), (2, 1e-6, 0.3), (6, -0.01, 1.0)] {
            let q = integrate(&|u: f64| u.powi(k as i32) * (a * u).exp(), 0.0, l, 1e-12).unwrap();
            assert_relative_eq!(exp_moment(k, a, l), q, max_relative = 1e-9);
        }
    }

    #[test]
    fn sinc_and_sinhc_limits() {
        assert_eq!(sinc(0.0), 1.0);
        assert_relative_eq!(sinc(2.0), (2.0f64).sin() / 2.0, max_relative = 1e-14);
        let z = Complex64::new(0.0, 1.5);
        assert_relative_eq!(sinhc(z).im.abs(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(sinhc(z).re, (1.5f64).sin() / 1.5, max_relative = 1e-13);
    }
}
