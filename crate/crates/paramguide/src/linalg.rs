//! Small dense complex linear algebra: matrix exponential and singular
//! values, sized for truncated Fock blocks (tens of rows).

use ndarray::Array2;
use num_complex::Complex64;

/// 1-norm (max column sum of moduli).
fn one_norm(a: &Array2<Complex64>) -> f64 {
    let (n, m) = a.dim();
    (0..m)
        .map(|j| (0..n).map(|i| a[[i, j]].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
///
/// The argument is scaled so that its 1-norm is below 0.25, expanded to
/// 24 Taylor terms (remainder far below f64 resolution), then squared
/// back. Accuracy on the anti-Hermitian generators used here is at the
/// 1e-14 level, well inside the 1e-12 target.
pub fn expm(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let norm = one_norm(a);
    let s = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|v| v / (2f64.powi(s as i32)));

    let mut result = Array2::<Complex64>::eye(n);
    let mut term = Array2::<Complex64>::eye(n);
    for k in 1..=24u32 {
        term = term.dot(&scaled).mapv(|v| v / k as f64);
        result += &term;
        if one_norm(&term) < 1e-20 {
            break;
        }
    }
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

/// Singular values of a complex matrix, descending, by one-sided Jacobi
/// (Hestenes) orthogonalization of the columns. Working on the matrix
/// itself rather than its Gram matrix keeps small singular values
/// accurate to machine precision instead of sqrt(eps) * sigma_max.
pub fn singular_values(m: &Array2<Complex64>) -> Vec<f64> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    // orthogonalize the thinner side
    let mut a = if rows >= cols {
        m.to_owned()
    } else {
        m.t().to_owned()
    };
    let (nr, nc) = a.dim();
    for _sweep in 0..60 {
        let mut converged = true;
        for i in 0..nc.saturating_sub(1) {
            for j in (i + 1)..nc {
                let mut gamma = Complex64::new(0.0, 0.0);
                let mut aii = 0.0;
                let mut ajj = 0.0;
                for k in 0..nr {
                    let u = a[[k, i]];
                    let v = a[[k, j]];
                    gamma += u.conj() * v;
                    aii += u.norm_sqr();
                    ajj += v.norm_sqr();
                }
                let scale = (aii * ajj).sqrt();
                if gamma.norm() <= 1e-300 || gamma.norm() <= 1e-16 * scale {
                    continue;
                }
                converged = false;
                // rotate (col_i, col_j) by theta with the phase of gamma
                // folded in, zeroing the inner product
                let theta = 0.5 * (2.0 * gamma.norm()).atan2(aii - ajj);
                let (c, s) = (theta.cos(), theta.sin());
                let phase = gamma / gamma.norm();
                for k in 0..nr {
                    let u = a[[k, i]];
                    let v = a[[k, j]];
                    a[[k, i]] = u * c + v * phase.conj() * s;
                    a[[k, j]] = -u * phase * s + v * c;
                }
            }
        }
        if converged {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..nc)
        .map(|j| (0..nr).map(|k| a[[k, j]].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Array2::<Complex64>::zeros((4, 4));
        let e = expm(&z);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(e[[i, j]].re, want, epsilon = 1e-15);
                assert_relative_eq!(e[[i, j]].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn expm_pauli_rotation() {
        // exp(i t sigma_x) = cos t I + i sin t sigma_x
        let t = 0.7;
        let it = Complex64::new(0.0, t);
        let a = array![
            [Complex64::new(0.0, 0.0), it],
            [it, Complex64::new(0.0, 0.0)]
        ];
        let e = expm(&a);
        assert_relative_eq!(e[[0, 0]].re, t.cos(), max_relative = 1e-13);
        assert_relative_eq!(e[[0, 1]].im, t.sin(), max_relative = 1e-13);
    }

    #[test]
    fn expm_large_norm_scaling() {
        // exp of a diagonal with large entries
        let a = array![
            [Complex64::new(0.0, 40.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(-3.0, 0.0)]
        ];
        let e = expm(&a);
        assert_relative_eq!(e[[0, 0]].re, (40.0f64).cos(), max_relative = 1e-11);
        assert_relative_eq!(e[[0, 0]].im, (40.0f64).sin(), max_relative = 1e-11);
        assert_relative_eq!(e[[1, 1]].re, (-3.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn singular_values_of_known_matrix() {
        // diag(3, 2i) has singular values 3, 2 regardless of phases.
        let m = array![
            [Complex64::new(3.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 2.0)]
        ];
        let sv = singular_values(&m);
        assert_relative_eq!(sv[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(sv[1], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn singular_values_rank_one_outer_product() {
        // u v^T has exactly one nonzero singular value |u||v|.
        let u = [Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0)];
        let v = [
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 3.0),
        ];
        let mut m = Array2::<Complex64>::zeros((2, 3));
        for i in 0..2 {
            for j in 0..3 {
                m[[i, j]] = u[i] * v[j];
            }
        }
        let sv = singular_values(&m);
        let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert_relative_eq!(sv[0], nu * nv, max_relative = 1e-11);
        assert!(sv[1].abs() < 1e-10 * sv[0]);
    }
}
