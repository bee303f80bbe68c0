//! From sampled functions on a double-coset space to spherical coefficients.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CompactMultiplier, GelfandError};
use crate::groups::{random_su2, random_u2, rng_from_seed, RNG_ALGORITHM};
use crate::orthopoly::{gauss_legendre, legendre_table, JacobiRecurrence, PairId, SphericalIndex};

/// Gauss–Legendre nodes at which [`expand_legendre`] expects its samples.
pub fn legendre_nodes(count: usize) -> Vec<f64> {
    gauss_legendre(count).0
}

/// `c_n = (2n+1)/2 ∫ f P_n dr`, `n <= degree`, from samples of `f` at `legendre_nodes(samples.len())`.
/// Exact for polynomial `f` of degree at most `degree` whenever `degree < samples.len()`.
pub fn expand_legendre(pair: PairId, samples: &[f64], degree: usize) -> Result<CompactMultiplier, GelfandError> {
    if pair == PairId::U2U1 {
        return Err(GelfandError::PairMismatch { expected: PairId::SU2SO2, got: pair });
    }
    let nodes = samples.len();
    if degree >= nodes {
        return Err(GelfandError::DegreeTooHigh { degree, nodes });
    }
    let (xs, ws) = gauss_legendre(nodes);
    let mut acc = vec![0.0; degree + 1];
    for ((x, w), f) in xs.iter().zip(&ws).zip(samples) {
        for (a, p) in acc.iter_mut().zip(legendre_table(degree, *x)) {
            *a += w * f * p;
        }
    }
    let terms = acc
        .iter()
        .enumerate()
        .map(|(n, a)| (SphericalIndex::N { n: n as u32 }, Complex64::new((2 * n + 1) as f64 / 2.0 * a, 0.0)));
    CompactMultiplier::new(pair, terms)
}

/// Samples `f` at `nodes` Gauss–Legendre nodes and expands to `degree`.
pub fn expand_legendre_fn(
    pair: PairId,
    f: impl Fn(f64) -> f64,
    degree: usize,
    nodes: usize,
) -> Result<CompactMultiplier, GelfandError> {
    let samples: Vec<f64> = legendre_nodes(nodes).into_iter().map(f).collect();
    expand_legendre(pair, &samples, degree)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub name: String,
    pub estimate: f64,
    pub expected: f64,
    pub standard_error: f64,
}

impl MomentCheck {
    fn within(&self, sigmas: f64) -> bool {
        (self.estimate - self.expected).abs() <= sigmas * self.standard_error
    }
}

/// Monte-Carlo confirmation that Haar measure pushes forward to the uniform
/// density on the disc (for `u_11` on U(2)) and on `[-1, 1]` (for the SU(2) coordinate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityCheck {
    pub samples: usize,
    pub seed: u64,
    pub rng: String,
    pub sigmas: f64,
    pub moments: Vec<MomentCheck>,
    pub passed: bool,
}

const UNIFORMITY_SEED: u64 = 0x5eed_d15c;
const UNIFORMITY_SAMPLES: usize = 1_000_000;

/// The cached 10^6-sample check run before any disc least-squares step.
pub fn haar_uniformity_check() -> &'static UniformityCheck {
    static CHECK: OnceLock<UniformityCheck> = OnceLock::new();
    CHECK.get_or_init(|| run_uniformity_check(UNIFORMITY_SAMPLES, UNIFORMITY_SEED, 3.0))
}

pub(crate) fn run_uniformity_check(samples: usize, seed: u64, sigmas: f64) -> UniformityCheck {
    let mut rng = rng_from_seed(seed);
    // running sums of Re z, Im z, |z|^2, |z|^4, r, r^2
    let mut s = [0.0f64; 6];
    for _ in 0..samples {
        let u = random_u2(&mut rng);
        let z = u.u11();
        let m2 = z.norm_sqr();
        let r = crate::orthopoly::su2_coset_coordinate(&random_su2(&mut rng));
        for (acc, v) in s.iter_mut().zip([z.re, z.im, m2, m2 * m2, r, r * r]) {
            *acc += v;
        }
    }
    let n = samples as f64;
    // (name, expected mean, variance) under the uniform laws
    let targets = [
        ("E Re u11", 0.0, 0.25),
        ("E Im u11", 0.0, 0.25),
        ("E |u11|^2", 0.5, 1.0 / 12.0),
        ("E |u11|^4", 1.0 / 3.0, 1.0 / 5.0 - 1.0 / 9.0),
        ("E r", 0.0, 1.0 / 3.0),
        ("E r^2", 1.0 / 3.0, 1.0 / 5.0 - 1.0 / 9.0),
    ];
    let moments: Vec<MomentCheck> = targets
        .iter()
        .zip(s)
        .map(|((name, expected, var), sum)| MomentCheck {
            name: name.to_string(),
            estimate: sum / n,
            expected: *expected,
            standard_error: (var / n).sqrt(),
        })
        .collect();
    let passed = moments.iter().all(|m| m.within(sigmas));
    UniformityCheck { samples, seed, rng: RNG_ALGORITHM.to_string(), sigmas, moments, passed }
}

/// Product quadrature on the disc with density `1/pi`: Gauss–Legendre in `|z|^2`, uniform in angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscQuadrature {
    pub radial: usize,
    pub angular: usize,
}

impl DiscQuadrature {
    /// Exact on `h_i conj(h_j)` and on polynomial samples in `z, conj z` up to total degree `degree + 8`.
    pub fn for_degree(degree: u32) -> Self {
        Self { radial: degree as usize + 8, angular: 2 * degree as usize + 16 }
    }
}

/// Result of a least-squares disc expansion together with its diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct U2U1Expansion {
    pub multiplier: CompactMultiplier,
    pub truncation_degree: u32,
    pub quadrature: DiscQuadrature,
    /// `max |G_ii (p+q+1) - 1|` over the diagonal of the numerical Gram matrix.
    pub gram_diagonal_error: f64,
    /// Largest off-diagonal Gram entry.
    pub gram_offdiagonal: f64,
    pub uniformity: UniformityCheck,
}

/// Least-squares projection of `f` onto `span{h_{p,q} : p + q <= degree}` in `L^2(disc, dA/pi)`.
///
/// Spherical functions of different `p - q` are orthogonal under the angular rule,
/// so the Gram matrix is assembled and Cholesky-factored one angular mode at a time.
pub fn expand_u2u1(
    f: impl Fn(Complex64) -> Complex64,
    degree: u32,
    quadrature: DiscQuadrature,
) -> Result<U2U1Expansion, GelfandError> {
    let uniformity = haar_uniformity_check().clone();
    if !uniformity.passed {
        return Err(GelfandError::UniformityCheckFailed(format!("{:?}", uniformity.moments)));
    }
    let d = degree as usize;
    if quadrature.angular <= 2 * d {
        return Err(GelfandError::DegreeTooHigh { degree: d, nodes: quadrature.angular });
    }
    if 2 * quadrature.radial <= d {
        return Err(GelfandError::DegreeTooHigh { degree: d, nodes: quadrature.radial });
    }
    let (xs, ws) = gauss_legendre(quadrature.radial);
    let rho: Vec<f64> = xs.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let wrho: Vec<f64> = ws.iter().map(|w| 0.5 * w).collect();
    let m = quadrature.angular;

    // samples[j][l] = f(sqrt(rho_j) e^{i phi_l})
    let samples: Vec<Vec<Complex64>> = rho
        .iter()
        .map(|&r| (0..m).map(|l| f(Complex64::from_polar(r.sqrt(), TAU * l as f64 / m as f64))).collect())
        .collect();

    let mut terms = Vec::new();
    let (mut diag_err, mut offdiag): (f64, f64) = (0.0, 0.0);
    for k in -(degree as i64)..=degree as i64 {
        let gap = k.unsigned_abs() as u32;
        let l_max = ((degree - gap) / 2) as usize;
        let rec = JacobiRecurrence::new(gap, l_max);
        // radial parts R_l(rho) = rho^{gap/2} P_l^(0,gap)(2 rho - 1) at every node
        let radial: Vec<Vec<f64>> = rho
            .iter()
            .map(|&r| {
                let scale = r.powf(gap as f64 / 2.0);
                let mut row = Vec::with_capacity(l_max + 1);
                rec.for_each(l_max, 2.0 * r - 1.0, |_, v| row.push(scale * v));
                row
            })
            .collect();
        // angular Fourier coefficient F_k(rho_j) = mean_l f e^{-i k phi_l}
        let fourier: Vec<Complex64> = samples
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(l, v)| v * Complex64::from_polar(1.0, -(k as f64) * TAU * l as f64 / m as f64))
                    .sum::<Complex64>()
                    / m as f64
            })
            .collect();
        let size = l_max + 1;
        let mut gram = vec![0.0; size * size];
        let mut rhs = vec![Complex64::new(0.0, 0.0); size];
        for j in 0..rho.len() {
            for a in 0..size {
                rhs[a] += wrho[j] * fourier[j] * radial[j][a];
                for b in 0..=a {
                    gram[a * size + b] += wrho[j] * radial[j][a] * radial[j][b];
                }
            }
        }
        for a in 0..size {
            for b in 0..a {
                gram[b * size + a] = gram[a * size + b];
                offdiag = offdiag.max(gram[a * size + b].abs());
            }
            let total = gap as f64 + 2.0 * a as f64;
            diag_err = diag_err.max((gram[a * size + a] * (total + 1.0) - 1.0).abs());
        }
        let coeffs = cholesky_solve(&mut gram, size, rhs).ok_or(GelfandError::SingularGram { mode: k })?;
        for (l, c) in coeffs.into_iter().enumerate() {
            let l = l as u32;
            let index = if k >= 0 { SphericalIndex::PQ { p: l + gap, q: l } } else { SphericalIndex::PQ { p: l, q: l + gap } };
            terms.push((index, c));
        }
    }
    Ok(U2U1Expansion {
        multiplier: CompactMultiplier::new(PairId::U2U1, terms)?,
        truncation_degree: degree,
        quadrature,
        gram_diagonal_error: diag_err,
        gram_offdiagonal: offdiag,
        uniformity,
    })
}

/// Solves `G c = b` for symmetric positive definite `G` (overwritten by its factor).
fn cholesky_solve(g: &mut [f64], n: usize, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    for j in 0..n {
        let mut d = g[j * n + j];
        for k in 0..j {
            d -= g[j * n + k] * g[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        g[j * n + j] = d;
        for i in j + 1..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= g[i * n + k] * g[j * n + k];
            }
            g[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= g[i * n + k] * b[k];
        }
        b[i] = s / g[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= g[k * n + i] * b[k];
        }
        b[i] = s / g[i * n + i];
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gelfand::{eval_multiplier, CosetPoint};
    use crate::orthopoly::legendre;

    fn n(n: u32) -> SphericalIndex {
        SphericalIndex::N { n }
    }

    #[test]
    fn legendre_expansion_of_simple_functions() {
        let m = expand_legendre_fn(PairId::SU2SO2, |_| 1.0, 10, 16).unwrap();
        assert!((m.coefficient(n(0)) - 1.0).norm() < 1e-14);
        for k in 1..=10 {
            assert!(m.coefficient(n(k)).norm() <= 1e-12);
        }
        let m = expand_legendre_fn(PairId::SU2SO2, |r| r, 10, 16).unwrap();
        assert!((m.coefficient(n(1)) - 1.0).norm() < 1e-14);
        assert!(m.coefficient(n(0)).norm() <= 1e-12 && m.coefficient(n(2)).norm() <= 1e-12);
        let m = expand_legendre_fn(PairId::SU2SO2, |r| legendre(7, r).unwrap(), 12, 13).unwrap();
        for k in 0..=12 {
            let want = if k == 7 { 1.0 } else { 0.0 };
            assert!((m.coefficient(n(k)) - want).norm() <= 1e-10, "k={k}");
        }
    }

    #[test]
    fn degree_must_be_resolved() {
        assert!(matches!(
            expand_legendre_fn(PairId::SU2SO2, |r| r, 8, 8),
            Err(GelfandError::DegreeTooHigh { degree: 8, nodes: 8 })
        ));
        assert!(matches!(expand_legendre(PairId::U2U1, &[1.0; 4], 1), Err(GelfandError::PairMismatch { .. })));
    }

    #[test]
    fn expand_then_eval_reproduces_polynomials() {
        let f = |r: f64| 3.0 * r.powi(9) - r.powi(4) + 0.5;
        let m = expand_legendre_fn(PairId::SO3SO2, f, 9, 10).unwrap();
        for i in 0..=20 {
            let r = -1.0 + 0.1 * i as f64;
            assert!((eval_multiplier(&m, CosetPoint::Interval(r)).unwrap().re - f(r)).abs() < 1e-10);
        }
    }

    #[test]
    fn small_sample_uniformity_check_has_teeth() {
        let ok = run_uniformity_check(20_000, 1, 4.0);
        assert!(ok.passed, "{ok:?}");
        let mut biased = ok.clone();
        biased.moments[2].estimate += 10.0 * biased.moments[2].standard_error;
        assert!(!biased.moments.iter().all(|m| m.within(biased.sigmas)));
    }

    #[test]
    fn disc_expansion_recovers_spherical_coefficients() {
        let target = CompactMultiplier::new(
            PairId::U2U1,
            [
                (SphericalIndex::PQ { p: 0, q: 0 }, Complex64::new(0.5, 0.0)),
                (SphericalIndex::PQ { p: 3, q: 1 }, Complex64::new(0.0, -1.0)),
                (SphericalIndex::PQ { p: 0, q: 2 }, Complex64::new(0.25, 0.25)),
            ],
        )
        .unwrap();
        let f = |z: Complex64| eval_multiplier(&target, CosetPoint::Disc(z)).unwrap();
        let out = expand_u2u1(f, 6, DiscQuadrature::for_degree(6)).unwrap();
        assert!(out.uniformity.passed);
        assert!(out.gram_diagonal_error < 1e-12 && out.gram_offdiagonal < 1e-12);
        for total in 0..=6u32 {
            for p in 0..=total {
                let i = SphericalIndex::PQ { p, q: total - p };
                let diff = (out.multiplier.coefficient(i) - target.coefficient(i)).norm();
                assert!(diff < 1e-12, "{i:?}: {diff}");
            }
        }
    }

    #[test]
    fn disc_expansion_of_a_non_polynomial_is_bounded() {
        let f = |z: Complex64| Complex64::new((-z.norm_sqr()).exp(), 0.0);
        let out = expand_u2u1(f, 10, DiscQuadrature::for_degree(10)).unwrap();
        let z = Complex64::new(0.3, 0.2);
        let approx = eval_multiplier(&out.multiplier, CosetPoint::Disc(z)).unwrap();
        assert!((approx - f(z)).norm() < 1e-4);
    }
}
