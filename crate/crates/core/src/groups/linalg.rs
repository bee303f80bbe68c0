//! Dense kernels for the 2x2, 3x3 and 4x4 row-major matrices used by the group code.

/// Row-major product of two `n x n` matrices.
pub(crate) fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub(crate) fn transpose(n: usize, a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
    out
}

pub(crate) fn frobenius_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn det(n: usize, a: &[f64]) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap_or(col);
        let p = m[pivot * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
        }
    }
    det
}

/// Hadamard's bound: product of the Euclidean row norms, an upper bound for `|det a|`.
pub(crate) fn hadamard_bound(n: usize, a: &[f64]) -> f64 {
    (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().map(|x| x * x).sum::<f64>().sqrt())
        .product()
}

/// Cofactor matrix of a 3x3 matrix (the transpose of the adjugate).
pub(crate) fn cofactor3(a: &[f64]) -> [f64; 9] {
    let m = |i: usize, j: usize| a[i * 3 + j];
    let mut c = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
            let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
            // cyclic index choice absorbs the checkerboard sign
            c[i * 3 + j] = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
        }
    }
    c
}

/// Eigenvalues of a symmetric `n x n` matrix by the cyclic Jacobi method, sorted descending.
pub(crate) fn symmetric_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `ln(sinh x)` for `x > 0`, accurate for large arguments.
pub(crate) fn ln_sinh(x: f64) -> f64 {
    if x < 1.0 {
        x.sinh().ln()
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2
    }
}

/// `asinh(exp(l))` without overflow.
pub(crate) fn asinh_exp(l: f64) -> f64 {
    if l < 20.0 {
        l.exp().asinh()
    } else {
        l + (1.0 + (1.0 + (-2.0 * l).exp()).sqrt()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_matches_cofactor_expansion() {
        let a = [2.0, -1.0, 0.5, 3.0, 0.0, 1.0, -2.0, 4.0, 1.5];
        let c = cofactor3(&a);
        let by_row: f64 = (0..3).map(|j| a[j] * c[j]).sum();
        assert!((det(3, &a) - by_row).abs() < 1e-12);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // Q diag(5, 2, -1) Q^T for a rotation Q about the z axis
        let (c, s) = (0.6_f64, 0.8_f64);
        let q = [c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0];
        let d = [5.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -1.0];
        let a = matmul(3, &matmul(3, &q, &d), &transpose(3, &q));
        let ev = symmetric_eigenvalues(3, &a);
        for (got, want) in ev.iter().zip([5.0, 2.0, -1.0]) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }

    #[test]
    fn log_sinh_helpers_agree_with_direct_forms() {
        for x in [0.01, 0.5, 1.0, 3.0, 20.0, 200.0] {
            assert!((ln_sinh(x) - x.sinh().ln()).abs() < 1e-13 * x.max(1.0));
        }
        for l in [-3.0, 0.0, 5.0, 19.9, 20.1, 40.0] {
            assert!((asinh_exp(l) - l.exp().asinh()).abs() < 1e-13 * l.abs().max(1.0));
        }
        assert!((asinh_exp(1000.0) - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
    }
}
