//! The sinh coupling between the Sp(2,R) chamber `(beta, gamma)` and the
//! diagonal points `D(2s, s)`, `D(2t, t)`:
//!
//! `sinh^2(2s) + sinh^2 s = sinh^2 beta + sinh^2 gamma` and
//! `sinh(2t) sinh t = sinh beta sinh gamma`,
//!
//! together with explicit matrices realising each link of the decay chain.

pub mod campaigns;

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{
    asinh_exp, dalpha, dprime, embed_u2_to_k, ln_sinh, sl2_polar_q, sl3_chamber, sl3_diag, so3_rotation_z,
    sp2_chamber, v_element, ChamberPoint, ChamberSl3, ChamberSp2, GroupError, GroupMatrix, U2Param,
};

/// Largest accepted sup-distance between a witness's recovered chamber point and its target.
pub const WITNESS_TOL: f64 = 1e-7;

/// Largest accepted relative residual of a coupling equation.
pub const EQUATION_TOL: f64 = 1e-10;

/// Above this `beta` (or `s`) the equations are handled through `ln sinh`.
pub const LOG_SWITCH: f64 = 25.0;

const MAX_ITERATIONS: usize = 200;
const MAX_DOUBLINGS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("bisection did not converge: {0}")]
    NonConvergence(String),
    #[error("order violated: {0}")]
    OrderViolation(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("outside the witness regime: {0}")]
    OutOfRegime(String),
    #[error("{kind} witness misses its target by {residual:e}")]
    WitnessResidual { kind: WitnessKind, residual: f64 },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Solution `(s, t)` of the coupling equations with their relative residuals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSolution {
    pub s: f64,
    pub t: f64,
    pub residuals: [f64; 2],
}

/// `sinh^2(2s) + sinh^2 s`.
pub fn rho(s: f64) -> f64 {
    (2.0 * s).sinh().powi(2) + s.sinh().powi(2)
}

/// `2 sinh(2t) sinh t`.
pub fn sigma(t: f64) -> f64 {
    2.0 * (2.0 * t).sinh() * t.sinh()
}

fn ln_rho(s: f64) -> f64 {
    if s == 0.0 {
        return f64::NEG_INFINITY;
    }
    let (a, b) = (ln_sinh(2.0 * s), ln_sinh(s));
    2.0 * a + (2.0 * (b - a)).exp().ln_1p()
}

fn ln_sigma(t: f64) -> f64 {
    LN_2 + ln_sinh(2.0 * t) + ln_sinh(t)
}

/// Smallest `x >= 0` with `f(x) = target` for increasing `f`, by bracketed bisection.
fn bisect(f: impl Fn(f64) -> f64, target: f64, first_hi: f64) -> Result<f64, CouplingError> {
    if target.is_nan() {
        return Err(CouplingError::NonConvergence("NaN target".into()));
    }
    if target <= f(0.0) {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = first_hi;
    let mut doublings = 0;
    while !(f(hi) >= target) {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(CouplingError::NonConvergence(format!("no bracket for target {target}")));
        }
    }
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if (f(lo) - target).abs() <= (f(hi) - target).abs() { lo } else { hi })
}

fn relative(value: f64, target: f64) -> f64 {
    if target == 0.0 {
        value.abs()
    } else {
        ((value - target) / target).abs()
    }
}

fn check_order(beta: f64, gamma: f64) -> Result<(), CouplingError> {
    ChamberSp2::new(beta, gamma).map_err(|e| match e {
        GroupError::OrderViolation(m) => CouplingError::OrderViolation(m),
        other => CouplingError::Group(other),
    })?;
    Ok(())
}

fn solve_st_direct(beta: f64, gamma: f64) -> Result<CouplingSolution, CouplingError> {
    let (sb, sg) = (beta.sinh(), gamma.sinh());
    let (sum, prod) = (sb * sb + sg * sg, sb * sg);
    let hi = beta.max(1.0) + 1.0;
    let s = bisect(rho, sum, hi)?;
    let t = bisect(|t| 0.5 * sigma(t), prod, hi)?;
    Ok(CouplingSolution { s, t, residuals: [relative(rho(s), sum), relative(0.5 * sigma(t), prod)] })
}

/// Same equations after taking logarithms; residuals are absolute in log space, i.e. relative.
fn solve_st_log(beta: f64, gamma: f64) -> Result<CouplingSolution, CouplingError> {
    let (lb, lg) = (ln_sinh(beta), ln_sinh(gamma));
    let ln_sum = if gamma == 0.0 { 2.0 * lb } else { 2.0 * lb + (2.0 * (lg - lb)).exp().ln_1p() };
    let ln_prod = lb + lg;
    let hi = beta.max(1.0) + 1.0;
    let s = bisect(ln_rho, ln_sum, hi)?;
    let half_sigma = |t: f64| ln_sigma(t) - LN_2;
    let t = if gamma == 0.0 { 0.0 } else { bisect(half_sigma, ln_prod, hi)? };
    let res_t = if gamma == 0.0 { 0.0 } else { (half_sigma(t) - ln_prod).abs() };
    Ok(CouplingSolution { s, t, residuals: [(ln_rho(s) - ln_sum).abs(), res_t] })
}

/// The unique `(s, t)` solving the coupling equations for `beta >= gamma >= 0`.
pub fn solve_st(beta: f64, gamma: f64) -> Result<CouplingSolution, CouplingError> {
    if beta.is_nan() || gamma.is_nan() {
        return Err(CouplingError::NonConvergence("NaN input".into()));
    }
    check_order(beta, gamma)?;
    if beta > LOG_SWITCH {
        solve_st_log(beta, gamma)
    } else {
        solve_st_direct(beta, gamma)
    }
}

/// Inverse of [`solve_st`] for `s >= t >= 0`:
/// `sinh beta, sinh gamma = (sqrt(rho + sigma) +- sqrt(rho - sigma)) / 2`.
pub fn solve_betagamma(s: f64, t: f64) -> Result<ChamberSp2, CouplingError> {
    if !(s.is_finite() && t.is_finite()) || !(s >= t && t >= 0.0) {
        return Err(CouplingError::OrderViolation(format!("need s >= t >= 0, got ({s}, {t})")));
    }
    let (beta, gamma) = if s <= LOG_SWITCH {
        let (s2, s1) = ((2.0 * s).sinh(), s.sinh());
        let sig = sigma(t);
        // rho - sigma = (sinh 2s - sinh s)^2 + (sigma(s) - sigma(t)), both terms nonnegative
        let minus = ((s2 - s1).powi(2) + (sigma(s) - sig).max(0.0)).sqrt();
        let x = 0.5 * ((rho(s) + sig).sqrt() + minus);
        let y = if x > 0.0 { sig / (2.0 * x) } else { 0.0 };
        (x.asinh(), y.asinh())
    } else {
        let (lr, ls) = (ln_rho(s), ln_sigma(t));
        let q = (ls - lr).exp();
        let ln_x = 0.5 * lr + (0.5 * ((1.0 + q).sqrt() + (1.0 - q).max(0.0).sqrt())).ln();
        (asinh_exp(ln_x), asinh_exp(ls - LN_2 - ln_x))
    };
    Ok(ChamberSp2 { beta, gamma: gamma.min(beta) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessKind {
    Circle,
    Hyperbola,
    Sl3,
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessKind::Circle => "circle",
            WitnessKind::Hyperbola => "hyperbola",
            WitnessKind::Sl3 => "sl3",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WitnessParams {
    Circle { r1: f64, a1: f64, b1: f64 },
    Sl3 { r: f64, q: f64, theta: f64 },
    Hyperbola { a1: f64, b1: f64 },
}

/// An explicit group element whose chamber point is `target`, verified by
/// recomputing the chamber from the matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: WitnessKind,
    pub alpha: f64,
    pub params: WitnessParams,
    pub matrix: GroupMatrix,
    pub target: ChamberPoint,
    pub recovered: ChamberPoint,
    /// Sup-distance between `recovered` and `target`.
    pub membership_residual: f64,
    /// Relative residuals of the equations tying `alpha` and `params` to `target`.
    pub equation_residuals: Vec<f64>,
}

fn finish(
    kind: WitnessKind,
    alpha: f64,
    params: WitnessParams,
    matrix: GroupMatrix,
    target: ChamberPoint,
    equation_residuals: Vec<f64>,
) -> Result<Witness, CouplingError> {
    let recovered = match target {
        ChamberPoint::Sp2(_) => ChamberPoint::Sp2(sp2_chamber(&matrix)?),
        ChamberPoint::Sl3(_) => ChamberPoint::Sl3(sl3_chamber(&matrix)?),
    };
    let residual = recovered.sup_distance(&target);
    if !(residual <= WITNESS_TOL) {
        return Err(CouplingError::WitnessResidual { kind, residual });
    }
    Ok(Witness { kind, alpha, params, matrix, target, recovered, membership_residual: residual, equation_residuals })
}

/// `D'_alpha u v D'_alpha` with `u = diag(a + ib, a - ib)`, where
/// `sinh^2(2 alpha) = sinh^2 beta + sinh^2 gamma` and `a^2 - b^2 = 2 sinh beta sinh gamma / sinh^2(2 alpha)`.
pub fn circle_witness(beta: f64, gamma: f64) -> Result<Witness, CouplingError> {
    check_order(beta, gamma)?;
    if beta == 0.0 {
        return Err(CouplingError::Degenerate("the origin has alpha = 0".into()));
    }
    let (sb, sg) = (beta.sinh(), gamma.sinh());
    let sum = sb * sb + sg * sg;
    let alpha = 0.5 * sum.sqrt().asinh();
    let r1 = (2.0 * sb * sg / sum).min(1.0);
    let (a1, b1) = ((0.5 * (1.0 + r1)).sqrt(), (0.5 * (1.0 - r1)).sqrt());
    let u = U2Param::diag(Complex64::new(a1, b1), Complex64::new(a1, -b1));
    let d = dprime(alpha);
    let matrix = d.mul(&embed_u2_to_k(&u)?).mul(&v_element()).mul(&d);
    let s2a = (2.0 * alpha).sinh().powi(2);
    let residuals = vec![relative(s2a, sum), (a1 * a1 - b1 * b1 - r1).abs()];
    finish(
        WitnessKind::Circle,
        alpha,
        WitnessParams::Circle { r1, a1, b1 },
        matrix,
        ChamberPoint::Sp2(ChamberSp2 { beta, gamma }),
        residuals,
    )
}

/// `D_alpha u D_alpha` with `u = [[a + ib, -1/sqrt2], [1/sqrt2, a - ib]]`, where
/// `sinh beta sinh gamma = sinh^2(alpha) / 2` and `sinh beta - sinh gamma = sinh(2 alpha) a`.
pub fn hyperbola_witness(beta: f64, gamma: f64) -> Result<Witness, CouplingError> {
    check_order(beta, gamma)?;
    let (sb, sg) = (beta.sinh(), gamma.sinh());
    let prod = sb * sg;
    if prod == 0.0 {
        return Err(CouplingError::Degenerate("sinh beta sinh gamma = 0".into()));
    }
    let alpha = (2.0 * prod).sqrt().asinh();
    let s2a = (2.0 * alpha).sinh();
    let a1 = (sb - sg) / s2a;
    if a1 * a1 > 0.5 {
        return Err(CouplingError::OutOfRegime(format!("a1^2 = {} exceeds 1/2", a1 * a1)));
    }
    let b1 = (0.5 - a1 * a1).sqrt();
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let u = U2Param::new([[Complex64::new(a1, b1), -h], [h, Complex64::new(a1, -b1)]])?;
    let d = dalpha(alpha);
    let matrix = d.mul(&embed_u2_to_k(&u)?).mul(&d);
    let residuals = vec![relative(0.5 * alpha.sinh().powi(2), prod), (s2a * a1 - (sb - sg)).abs() / sb];
    finish(
        WitnessKind::Hyperbola,
        alpha,
        WitnessParams::Hyperbola { a1, b1 },
        matrix,
        ChamberPoint::Sp2(ChamberSp2 { beta, gamma }),
        residuals,
    )
}

/// `D(r,0) R(theta) D(r,0)` with `R` the rotation in the first two coordinates; its
/// chamber point is `(2q, r - q)` with `sinh q = |cos theta| sinh r`.
pub fn sl3_witness(r: f64, theta: f64) -> Result<Witness, CouplingError> {
    if !(r > 0.0 && r.is_finite()) || !theta.is_finite() {
        return Err(CouplingError::Degenerate(format!("need r > 0 and finite theta, got ({r}, {theta})")));
    }
    let q = sl2_polar_q(r, theta);
    let d = sl3_diag(r, 0.0);
    let matrix = d.mul(&so3_rotation_z(theta)).mul(&d);
    let residuals = vec![relative(q.sinh(), theta.cos().abs() * r.sinh())];
    finish(
        WitnessKind::Sl3,
        r,
        WitnessParams::Sl3 { r, q, theta },
        matrix,
        ChamberPoint::Sl3(ChamberSl3 { s: 2.0 * q, t: r - q }),
        residuals,
    )
}
