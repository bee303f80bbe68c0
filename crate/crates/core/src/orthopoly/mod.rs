//! Legendre and Jacobi `P_n^(0,b)` polynomials, the spherical functions of
//! (U(2),U(1)), (SU(2),SO(2)) and (SO(3),SO(2)), and the uniform polynomial
//! bounds used downstream.

pub mod campaigns;

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{GroupError, GroupMatrix, GroupTag, U2Param, DEFAULT_MEMBERSHIP_TOL};

/// Slack allowed when an argument is nominally on the boundary of its domain.
pub const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrthoError {
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("quadrature needs at least {required} nodes, got {nodes}")]
    TooFewNodes { nodes: usize, required: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
}

fn in_interval(x: f64, lo: f64, hi: f64, domain: &'static str) -> Result<f64, OrthoError> {
    if !(x >= lo - DOMAIN_TOL && x <= hi + DOMAIN_TOL) {
        return Err(OrthoError::Domain { value: x, domain });
    }
    Ok(x.clamp(lo, hi))
}

fn unit_interval(x: f64) -> Result<f64, OrthoError> {
    in_interval(x, -1.0, 1.0, "[-1, 1]")
}

/// The three compact Gelfand pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairId {
    #[serde(rename = "U2_U1")]
    U2U1,
    #[serde(rename = "SU2_SO2")]
    SU2SO2,
    #[serde(rename = "SO3_SO2")]
    SO3SO2,
}

/// Label of a spherical function: `(p, q)` on (U(2),U(1)), `n` on the Legendre pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SphericalIndex {
    PQ { p: u32, q: u32 },
    N { n: u32 },
}

impl SphericalIndex {
    pub fn fits(&self, pair: PairId) -> bool {
        matches!(
            (self, pair),
            (SphericalIndex::PQ { .. }, PairId::U2U1)
                | (SphericalIndex::N { .. }, PairId::SU2SO2 | PairId::SO3SO2)
        )
    }
}

/// `P_0(x), ..., P_{n_max}(x)` by the three-term recurrence. `x` is not range-checked.
pub fn legendre_table(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(x);
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    // (P_n, P_{n-1}); P_{-1} is taken as 0
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

pub fn legendre(n: usize, x: f64) -> Result<f64, OrthoError> {
    let x = unit_interval(x)?;
    Ok(legendre_pair(n, x).0)
}

/// `(P_n(x), P_n'(x))` for `|x| < 1`.
pub fn legendre_with_derivative(n: usize, x: f64) -> Result<(f64, f64), OrthoError> {
    if !(x.abs() < 1.0) {
        return Err(OrthoError::Domain { value: x, domain: "(-1, 1)" });
    }
    let (p, pm1) = legendre_pair(n, x);
    let d = if n == 0 { 0.0 } else { n as f64 * (pm1 - x * p) / (1.0 - x * x) };
    Ok((p, d))
}

/// Node count used by default for the integral representation of `P_n`.
pub fn default_oracle_nodes(n: usize) -> usize {
    4 * (n + 16)
}

/// `P_n(x)` from `(1/pi) ∫_0^pi (x + i sqrt(1-x^2) cos t)^n dt`, midpoint rule.
///
/// The integrand is a trigonometric polynomial of degree `n`, integrated exactly
/// once `nodes > n / 2`; the imaginary part cancels by the symmetry `t -> pi - t`.
pub fn legendre_integral_oracle(n: usize, x: f64, nodes: usize) -> Result<f64, OrthoError> {
    let x = unit_interval(x)?;
    let required = 2 * (n + 8);
    if nodes < required {
        return Err(OrthoError::TooFewNodes { nodes, required });
    }
    let y = (1.0 - x * x).sqrt();
    let h = PI / nodes as f64;
    let sum: Complex64 = (0..nodes)
        .map(|k| {
            let t = (k as f64 + 0.5) * h;
            Complex64::new(x, y * t.cos()).powu(n as u32)
        })
        .sum();
    Ok(sum.re / nodes as f64)
}

/// Three-term recurrence for `P_k^(0,b)`, normalised by `P_k^(0,b)(1) = 1`:
/// `P_{k+1} = (a_k x + b_k) P_k - c_k P_{k-1}`.
#[derive(Clone, Debug)]
pub struct JacobiRecurrence {
    b: f64,
    coeffs: Vec<[f64; 3]>,
}

impl JacobiRecurrence {
    pub fn new(b: u32, n_max: usize) -> Self {
        let bf = b as f64;
        let coeffs = (1..n_max.max(1))
            .map(|k| {
                let k = k as f64;
                let s = 2.0 * k + bf;
                let denom = 2.0 * (k + 1.0) * (k + bf + 1.0) * s;
                [
                    (s + 1.0) * (s + 2.0) * s / denom,
                    -(s + 1.0) * bf * bf / denom,
                    2.0 * k * (k + bf) * (s + 2.0) / denom,
                ]
            })
            .collect();
        Self { b: bf, coeffs }
    }

    /// Calls `f(k, P_k(x))` for `k = 0..=n_max`, where `n_max` is at most the construction bound.
    #[inline]
    pub fn for_each(&self, n_max: usize, x: f64, mut f: impl FnMut(usize, f64)) {
        f(0, 1.0);
        if n_max == 0 {
            return;
        }
        let mut prev = 1.0;
        let mut cur = 1.0 + (self.b + 2.0) * (x - 1.0) / 2.0;
        f(1, cur);
        for (k, [a, b, c]) in self.coeffs.iter().enumerate().take(n_max - 1) {
            let next = (a * x + b) * cur - c * prev;
            prev = cur;
            cur = next;
            f(k + 2, cur);
        }
    }

    pub fn eval(&self, n: usize, x: f64) -> f64 {
        let mut out = 1.0;
        self.for_each(n, x, |k, v| {
            if k == n {
                out = v;
            }
        });
        out
    }
}

/// `P_n^(0,b)(x)` with `P_n^(0,b)(1) = 1`.
pub fn jacobi(n: usize, b: u32, x: f64) -> Result<f64, OrthoError> {
    let x = unit_interval(x)?;
    Ok(JacobiRecurrence::new(b, n).eval(n, x))
}

/// `h_{p,q}(z) = z^{p-q} P_q^(0,p-q)(2|z|^2 - 1)` for `p >= q`, and the conjugate form otherwise.
pub fn spherical_u2u1(p: u32, q: u32, z: Complex64) -> Result<Complex64, OrthoError> {
    let r = z.norm();
    if !(r <= 1.0 + DOMAIN_TOL) {
        return Err(OrthoError::Domain { value: r, domain: "closed unit disc" });
    }
    let x = (2.0 * z.norm_sqr() - 1.0).clamp(-1.0, 1.0);
    let (w, lo, gap) = if p >= q { (z, q, p - q) } else { (z.conj(), p, q - p) };
    let radial = JacobiRecurrence::new(gap, lo as usize).eval(lo as usize, x);
    Ok(w.powu(gap) * radial)
}

/// Double-coset coordinate `a^2 - b^2 + c^2 - d^2` of an SU(2) element under SO(2).
pub fn su2_coset_coordinate(u: &U2Param) -> f64 {
    let (a, b, c, d) = u.su2_coords();
    (a * a - b * b + c * c - d * d).clamp(-1.0, 1.0)
}

/// `P_n(a^2 - b^2 + c^2 - d^2)`.
pub fn spherical_su2so2(n: usize, u: &U2Param) -> Result<f64, OrthoError> {
    u.check_su2(DEFAULT_MEMBERSHIP_TOL)?;
    legendre(n, su2_coset_coordinate(u))
}

/// `P_n(g_11)`.
pub fn spherical_so3so2(n: usize, g: &GroupMatrix) -> Result<f64, OrthoError> {
    if g.dim() != 3 {
        return Err(GroupError::DimensionMismatch { expected: 3, got: g.dim() }.into());
    }
    g.clone().with_tag(GroupTag::SO3)?.check_membership(DEFAULT_MEMBERSHIP_TOL)?;
    legendre(n, g.get(0, 0).clamp(-1.0, 1.0))
}

/// Empirical maximum of `sqrt2 (sin t)^(1/2) (cos t)^(b+1/2) |P_n^(0,b)(cos 2t)| (2n+b+1)^(1/4)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsConstantEstimate {
    pub c_hat: f64,
    pub n_max: usize,
    pub beta_max: u32,
    pub theta_grid_size: usize,
    pub argmax_n: usize,
    pub argmax_beta: u32,
    pub argmax_theta: f64,
}

/// Angle grid `t_j = j pi / (2M)`, `j = 1..=M`; nested under doubling and
/// containing `pi/4` for even `M`. The excluded endpoint `t = 0` has weight zero,
/// and `t -> pi - t` leaves the weighted quantity unchanged.
pub fn hs_theta(j: usize, m: usize) -> f64 {
    j as f64 * FRAC_PI_2 / m as f64
}

/// The weighted Jacobi quantity at a single `(n, b, t)`, with `|cos t|` in the weight.
pub fn hs_weighted_value(n: usize, b: u32, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let p = JacobiRecurrence::new(b, n).eval(n, (2.0 * theta).cos());
    SQRT_2 * s.abs().sqrt() * c.abs().powf(b as f64 + 0.5) * p.abs() * ((2 * n) as f64 + b as f64 + 1.0).powf(0.25)
}

pub fn hs_constant_estimate(n_max: usize, beta_max: u32, theta_grid: usize) -> HsConstantEstimate {
    let m = theta_grid.max(1);
    let per_beta: Vec<(f64, usize, usize)> = (0..=beta_max)
        .into_par_iter()
        .map(|b| {
            let rec = JacobiRecurrence::new(b, n_max);
            let growth: Vec<f64> =
                (0..=n_max).map(|n| ((2 * n) as f64 + b as f64 + 1.0).powf(0.25)).collect();
            let mut best = (f64::NEG_INFINITY, 0usize, 1usize);
            for j in 1..=m {
                let theta = hs_theta(j, m);
                let (s, c) = theta.sin_cos();
                let weight = SQRT_2 * s.sqrt() * c.abs().powf(b as f64 + 0.5);
                if weight == 0.0 {
                    continue;
                }
                let x = (2.0 * theta).cos();
                rec.for_each(n_max, x, |n, p| {
                    let v = weight * p.abs() * growth[n];
                    if v > best.0 {
                        best = (v, n, j);
                    }
                });
            }
            best
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0u32, 0usize, 1usize);
    for (b, (v, n, j)) in per_beta.into_iter().enumerate() {
        if v > best.0 {
            best = (v, b as u32, n, j);
        }
    }
    HsConstantEstimate {
        c_hat: best.0.max(0.0),
        n_max,
        beta_max,
        theta_grid_size: m,
        argmax_n: best.2,
        argmax_beta: best.1,
        argmax_theta: hs_theta(best.3, m),
    }
}

fn half_interval(x: f64) -> Result<f64, OrthoError> {
    in_interval(x, -0.5, 0.5, "[-1/2, 1/2]")
}

/// `4 |x - y|^(1/2) - |P_n(x) - P_n(y)|` on `[-1/2, 1/2]`.
pub fn legendre_holder_margin(n: usize, x: f64, y: f64) -> Result<f64, OrthoError> {
    let (x, y) = (half_interval(x)?, half_interval(y)?);
    let diff = (legendre_pair(n, x).0 - legendre_pair(n, y).0).abs();
    Ok(4.0 * (x - y).abs().sqrt() - diff)
}

/// Margins of `|P_n(x)| <= 2/sqrt n` and `|P_n'(x)| <= 4 sqrt n` on `[-1/2, 1/2]`, `n >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorMargins {
    pub sup: f64,
    pub derivative: f64,
}

pub fn legendre_interior_margins(n: usize, x: f64) -> Result<Option<InteriorMargins>, OrthoError> {
    let x = half_interval(x)?;
    if n < 2 {
        return Ok(None);
    }
    let (p, d) = legendre_with_derivative(n, x)?;
    let rn = (n as f64).sqrt();
    Ok(Some(InteriorMargins { sup: 2.0 / rn - p.abs(), derivative: 4.0 * rn - d.abs() }))
}

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`, by Newton iteration.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, pm1) = legendre_pair(m, x);
            deriv = m as f64 * (pm1 - x * p) / (1.0 - x * x);
            let dx = p / deriv;
            x -= dx;
            if dx.abs() <= 1e-16 {
                let (p, pm1) = legendre_pair(m, x);
                deriv = m as f64 * (pm1 - x * p) / (1.0 - x * x);
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}
