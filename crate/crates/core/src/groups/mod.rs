//! Small fixed-dimension matrix groups: Sp(2,R) in M4(R), SL(3,R), SO(3) and the
//! compact subgroups K = U(2), K2 = SU(2) and SO(2) embedded in them.
//!
//! Only the chamber (A) part of a polar decomposition `g = k1 a k2` is ever
//! computed. For Sp(2,R) it is read off from the two K-bi-invariant quantities
//! `c1 = |g - g^-T|^2 / 8` and `c2 = det(g - g^-T) / 16`, which equal
//! `sinh^2 b + sinh^2 g` and `sinh^2 b sinh^2 g` on the double coset of `D(b, g)`.
//! For SL(3,R) it comes from the ordered singular values.

pub mod campaigns;
mod linalg;
mod random;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use linalg::{asinh_exp, ln_sinh};
pub use random::{
    random_k, random_k_with, random_so2_angle, random_so3, random_so3_with, random_su2,
    random_u2, rng_from_seed, ChaChaRng, RNG_ALGORITHM,
};

/// Default membership tolerance (relative).
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("matrix is numerically singular")]
    Singular,
    #[error("matrix is not symplectic: |g^T J g - J| residual {residual:.3e}")]
    NotSymplectic { residual: f64 },
    #[error("determinant differs from 1: residual {residual:.3e}")]
    NotUnimodular { residual: f64 },
    #[error("matrix is not in {group}: residual {residual:.3e}")]
    NotInGroup { group: GroupTag, residual: f64 },
    #[error("2x2 complex matrix is not unitary: residual {residual:.3e}")]
    NotUnitary { residual: f64 },
    #[error("2x2 unitary matrix is not in SU(2): |det - 1| = {residual:.3e}")]
    NotSpecialUnitary { residual: f64 },
    #[error("negative discriminant c1^2 - 4 c2 = {discriminant:.3e} (input is not symplectic)")]
    NegativeDiscriminant { discriminant: f64 },
    #[error("expected a {expected}x{expected} matrix, got {got}x{got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("chamber point violates ordering: {0}")]
    OrderViolation(String),
    #[error("malformed matrix: {0}")]
    Malformed(String),
}

/// Which group a matrix is claimed to belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupTag {
    Sp2,
    SL3,
    SO3,
    SO2,
    /// The maximal compact subgroup K = U(2) of Sp(2,R).
    #[serde(rename = "K_U2")]
    KU2,
    /// The copy K2 = SU(2) inside K.
    #[serde(rename = "K2_SU2")]
    K2SU2,
    #[serde(rename = "generic")]
    Generic,
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupTag::Sp2 => "Sp(2,R)",
            GroupTag::SL3 => "SL(3,R)",
            GroupTag::SO3 => "SO(3)",
            GroupTag::SO2 => "SO(2)",
            GroupTag::KU2 => "K = U(2)",
            GroupTag::K2SU2 => "K2 = SU(2)",
            GroupTag::Generic => "GL(n,R)",
        };
        f.write_str(s)
    }
}

impl GroupTag {
    fn dim(self) -> Option<usize> {
        match self {
            GroupTag::Sp2 | GroupTag::KU2 | GroupTag::K2SU2 => Some(4),
            GroupTag::SL3 | GroupTag::SO3 => Some(3),
            GroupTag::SO2 => Some(2),
            GroupTag::Generic => None,
        }
    }

    fn is_sp2_family(self) -> bool {
        matches!(self, GroupTag::Sp2 | GroupTag::KU2 | GroupTag::K2SU2)
    }

    fn is_compact(self) -> bool {
        matches!(self, GroupTag::KU2 | GroupTag::K2SU2 | GroupTag::SO3 | GroupTag::SO2)
    }

    /// Smallest tag containing both operands of a product.
    fn join(self, other: GroupTag) -> GroupTag {
        if self == other {
            return self;
        }
        match (self, other) {
            (a, b) if a.is_sp2_family() && b.is_sp2_family() => {
                if a != GroupTag::Sp2 && b != GroupTag::Sp2 {
                    GroupTag::KU2
                } else {
                    GroupTag::Sp2
                }
            }
            (GroupTag::SL3 | GroupTag::SO3, GroupTag::SL3 | GroupTag::SO3) => GroupTag::SL3,
            _ => GroupTag::Generic,
        }
    }
}

/// A real square matrix of dimension 2, 3 or 4 tagged with its group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct GroupMatrix {
    dim: usize,
    group_tag: GroupTag,
    entries: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    dim: usize,
    group_tag: GroupTag,
    entries: Vec<f64>,
}

impl TryFrom<RawMatrix> for GroupMatrix {
    type Error = GroupError;

    fn try_from(raw: RawMatrix) -> Result<Self, Self::Error> {
        GroupMatrix::new(raw.dim, raw.group_tag, raw.entries)
    }
}

impl GroupMatrix {
    /// Builds a matrix from row-major entries. Membership is not checked here;
    /// see [`GroupMatrix::check_membership`].
    pub fn new(dim: usize, group_tag: GroupTag, entries: Vec<f64>) -> Result<Self, GroupError> {
        if !(2..=4).contains(&dim) {
            return Err(GroupError::Malformed(format!("dimension {dim} not in {{2,3,4}}")));
        }
        if entries.len() != dim * dim {
            return Err(GroupError::Malformed(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(GroupError::Malformed("non-finite entry".into()));
        }
        if let Some(d) = group_tag.dim() {
            if d != dim {
                return Err(GroupError::DimensionMismatch { expected: d, got: dim });
            }
        }
        Ok(Self { dim, group_tag, entries })
    }

    pub fn identity(dim: usize, group_tag: GroupTag) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, group_tag, entries }
    }

    fn diagonal(group_tag: GroupTag, diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, d) in diag.iter().enumerate() {
            entries[i * dim + i] = *d;
        }
        Self { dim, group_tag, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn group_tag(&self) -> GroupTag {
        self.group_tag
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entry at zero-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    /// Re-tags the matrix without touching its entries.
    pub fn with_tag(mut self, tag: GroupTag) -> Result<Self, GroupError> {
        if let Some(d) = tag.dim() {
            if d != self.dim {
                return Err(GroupError::DimensionMismatch { expected: d, got: self.dim });
            }
        }
        self.group_tag = tag;
        Ok(self)
    }

    pub fn mul(&self, rhs: &GroupMatrix) -> GroupMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in product");
        GroupMatrix {
            dim: self.dim,
            group_tag: self.group_tag.join(rhs.group_tag),
            entries: linalg::matmul(self.dim, &self.entries, &rhs.entries),
        }
    }

    pub fn transpose(&self) -> GroupMatrix {
        GroupMatrix {
            dim: self.dim,
            group_tag: self.group_tag,
            entries: linalg::transpose(self.dim, &self.entries),
        }
    }

    pub fn hs_norm(&self) -> f64 {
        linalg::frobenius_sq(&self.entries).sqrt()
    }

    pub fn det(&self) -> f64 {
        linalg::det(self.dim, &self.entries)
    }

    /// Max-entry distance to another matrix of the same dimension.
    pub fn max_abs_diff(&self, other: &GroupMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn symplectic_residual(&self) -> f64 {
        let j = symplectic_form();
        let gtjg = linalg::matmul(4, &linalg::transpose(4, &self.entries), &linalg::matmul(4, &j, &self.entries));
        let diff: Vec<f64> = gtjg.iter().zip(&j).map(|(a, b)| a - b).collect();
        linalg::frobenius_sq(&diff).sqrt() / linalg::frobenius_sq(&self.entries).max(1.0)
    }

    fn orthogonality_residual(&self) -> f64 {
        let n = self.dim;
        let mut gtg = linalg::matmul(n, &linalg::transpose(n, &self.entries), &self.entries);
        for i in 0..n {
            gtg[i * n + i] -= 1.0;
        }
        let orth = linalg::frobenius_sq(&gtg).sqrt();
        orth.max((self.det() - 1.0).abs())
    }

    fn unimodular_residual(&self) -> f64 {
        let scale = linalg::hadamard_bound(self.dim, &self.entries).max(1.0);
        (self.det() - 1.0).abs() / scale
    }

    /// Residual of the defining equations of the tagged group (0 for `generic`).
    pub fn membership_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        if self.group_tag.is_sp2_family() {
            r = r.max(self.symplectic_residual());
        }
        if self.group_tag == GroupTag::SL3 {
            r = r.max(self.unimodular_residual());
        }
        if self.group_tag.is_compact() {
            r = r.max(self.orthogonality_residual());
        }
        if self.group_tag == GroupTag::K2SU2 {
            // SU(2) inside U(2): the complex determinant A+iB must be 1
            let u = self.k_to_u2();
            r = r.max((u.det() - Complex64::new(1.0, 0.0)).norm());
        }
        r
    }

    pub fn check_membership(&self, tol: f64) -> Result<(), GroupError> {
        let residual = self.membership_residual();
        if residual <= tol {
            return Ok(());
        }
        Err(match self.group_tag {
            GroupTag::Sp2 => GroupError::NotSymplectic { residual },
            GroupTag::SL3 => GroupError::NotUnimodular { residual },
            group => GroupError::NotInGroup { group, residual },
        })
    }

    /// Reads back `A + iB` from a matrix of the block form `[[A, -B], [B, A]]`.
    pub fn k_to_u2(&self) -> U2Param {
        assert_eq!(self.dim, 4);
        let g = |i, j| self.get(i, j);
        U2Param {
            entries: [
                [Complex64::new(g(0, 0), g(2, 0)), Complex64::new(g(0, 1), g(2, 1))],
                [Complex64::new(g(1, 0), g(3, 0)), Complex64::new(g(1, 1), g(3, 1))],
            ],
        }
    }
}

/// The 4x4 form `J = [[0, I], [-I, 0]]`.
pub fn symplectic_form() -> Vec<f64> {
    let mut j = vec![0.0; 16];
    j[2] = 1.0;
    j[7] = 1.0;
    j[8] = -1.0;
    j[13] = -1.0;
    j
}

/// A 2x2 complex matrix, used for elements of U(2) and SU(2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct U2Param {
    pub entries: [[Complex64; 2]; 2],
}

impl U2Param {
    /// Checks unitarity before accepting the entries.
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self, GroupError> {
        let u = Self { entries };
        let residual = u.unitarity_residual();
        if residual > DEFAULT_MEMBERSHIP_TOL {
            return Err(GroupError::NotUnitary { residual });
        }
        Ok(u)
    }

    pub fn identity() -> Self {
        Self::diag(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn diag(z1: Complex64, z2: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { entries: [[z1, zero], [zero, z2]] }
    }

    /// The SU(2) element `[[a+ib, -c+id], [c+id, a-ib]]`. Not normalised.
    pub fn su2(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            entries: [
                [Complex64::new(a, b), Complex64::new(-c, d)],
                [Complex64::new(c, d), Complex64::new(a, -b)],
            ],
        }
    }

    /// The real rotation `[[cos t, -sin t], [sin t, cos t]]` in SO(2) ⊂ SU(2).
    pub fn rotation(theta: f64) -> Self {
        Self::su2(theta.cos(), 0.0, theta.sin(), 0.0)
    }

    pub fn u11(&self) -> Complex64 {
        self.entries[0][0]
    }

    /// `(a, b, c, d)` of the SU(2) parametrisation.
    pub fn su2_coords(&self) -> (f64, f64, f64, f64) {
        let u11 = self.entries[0][0];
        let u21 = self.entries[1][0];
        (u11.re, u11.im, u21.re, u21.im)
    }

    pub fn det(&self) -> Complex64 {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    pub fn mul(&self, rhs: &U2Param) -> U2Param {
        let (a, b) = (&self.entries, &rhs.entries);
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        U2Param { entries: out }
    }

    pub fn adjoint(&self) -> U2Param {
        let e = &self.entries;
        U2Param { entries: [[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]] }
    }

    /// Frobenius norm of `U^* U - I`.
    pub fn unitarity_residual(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut r = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                r += (p.entries[i][j] - target).norm_sqr();
            }
        }
        r.sqrt()
    }

    /// Unitary with determinant one, within `tol`.
    pub fn check_su2(&self, tol: f64) -> Result<(), GroupError> {
        let residual = self.unitarity_residual();
        if residual > tol {
            return Err(GroupError::NotUnitary { residual });
        }
        let residual = (self.det() - 1.0).norm();
        if residual > tol {
            return Err(GroupError::NotSpecialUnitary { residual });
        }
        Ok(())
    }
}

/// Weyl-chamber point `D(beta, gamma)` of Sp(2,R), `beta >= gamma >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChamberSp2 {
    pub beta: f64,
    pub gamma: f64,
}

impl ChamberSp2 {
    pub fn new(beta: f64, gamma: f64) -> Result<Self, GroupError> {
        if !(beta.is_finite() && gamma.is_finite()) || !(beta >= gamma && gamma >= 0.0) {
            return Err(GroupError::OrderViolation(format!(
                "need beta >= gamma >= 0, got ({beta}, {gamma})"
            )));
        }
        Ok(Self { beta, gamma })
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.beta.hypot(self.gamma)
    }
}

/// Weyl-chamber point `D(s, t)` of SL(3,R), `s, t >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChamberSl3 {
    pub s: f64,
    pub t: f64,
}

impl ChamberSl3 {
    pub fn new(s: f64, t: f64) -> Result<Self, GroupError> {
        if !(s.is_finite() && t.is_finite()) || s < 0.0 || t < 0.0 {
            return Err(GroupError::OrderViolation(format!("need s, t >= 0, got ({s}, {t})")));
        }
        Ok(Self { s, t })
    }
}

/// A chamber point of either group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChamberPoint {
    Sp2(ChamberSp2),
    Sl3(ChamberSl3),
}

impl ChamberPoint {
    /// Componentwise sup-distance; infinite across groups.
    pub fn sup_distance(&self, other: &ChamberPoint) -> f64 {
        match (self, other) {
            (ChamberPoint::Sp2(a), ChamberPoint::Sp2(b)) => {
                (a.beta - b.beta).abs().max((a.gamma - b.gamma).abs())
            }
            (ChamberPoint::Sl3(a), ChamberPoint::Sl3(b)) => (a.s - b.s).abs().max((a.t - b.t).abs()),
            _ => f64::INFINITY,
        }
    }
}

/// The K-bi-invariants of an element of Sp(2,R).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HSInvariants {
    /// `|g - g^-T|_HS^2 / 8`
    pub c1: f64,
    /// `det(g - g^-T) / 16`
    pub c2: f64,
}

impl HSInvariants {
    pub fn discriminant(&self) -> f64 {
        self.c1 * self.c1 - 4.0 * self.c2
    }
}

/// Embeds `A + iB` in U(2) as `[[A, -B], [B, A]]` in K ⊂ Sp(2,R).
pub fn embed_u2_to_k(u: &U2Param) -> Result<GroupMatrix, GroupError> {
    let residual = u.unitarity_residual();
    if residual > DEFAULT_MEMBERSHIP_TOL {
        return Err(GroupError::NotUnitary { residual });
    }
    let [[p, q], [r, s]] = u.entries;
    // rows (a e -b -f), (c g -d -h), (b f a e), (d h c g)
    let entries = vec![
        p.re, q.re, -p.im, -q.im, //
        r.re, s.re, -r.im, -s.im, //
        p.im, q.im, p.re, q.re, //
        r.im, s.im, r.re, s.re,
    ];
    Ok(GroupMatrix { dim: 4, group_tag: GroupTag::KU2, entries })
}

/// `D(beta, gamma) = diag(e^beta, e^gamma, e^-beta, e^-gamma)`.
pub fn dmat_sp2(c: ChamberSp2) -> GroupMatrix {
    sp2_diag(c.beta, c.gamma)
}

/// `diag(e^a1, e^a2, e^-a1, e^-a2)` for arbitrary real `a1, a2`.
pub fn sp2_diag(a1: f64, a2: f64) -> GroupMatrix {
    GroupMatrix::diagonal(GroupTag::Sp2, &[a1.exp(), a2.exp(), (-a1).exp(), (-a2).exp()])
}

/// `D_alpha = diag(e^alpha, 1, e^-alpha, 1)`, commuting with K1.
pub fn dalpha(alpha: f64) -> GroupMatrix {
    sp2_diag(alpha, 0.0)
}

/// `D'_alpha = diag(e^alpha, e^alpha, e^-alpha, e^-alpha)`, commuting with K3.
pub fn dprime(alpha: f64) -> GroupMatrix {
    sp2_diag(alpha, alpha)
}

/// The central element `v = (1+i)/sqrt2 · I` of K.
pub fn v_element() -> GroupMatrix {
    let z = Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    embed_u2_to_k(&U2Param::diag(z, z)).expect("v is unitary")
}

/// Embedded element of K1 = U(1): `diag(1, e^{i theta})` in U(2).
pub fn k1_element(theta: f64) -> GroupMatrix {
    let u = U2Param::diag(Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, theta));
    embed_u2_to_k(&u).expect("unitary")
}

/// Embedded element of K3 = SO(2) ⊂ SU(2).
pub fn k3_element(theta: f64) -> GroupMatrix {
    embed_u2_to_k(&U2Param::rotation(theta)).expect("unitary")
}

/// Embedded SU(2) element, tagged K2.
pub fn embed_su2(u: &U2Param) -> Result<GroupMatrix, GroupError> {
    u.check_su2(DEFAULT_MEMBERSHIP_TOL)?;
    embed_u2_to_k(u)?.with_tag(GroupTag::K2SU2)
}

pub fn hs_invariants(g: &GroupMatrix) -> Result<HSInvariants, GroupError> {
    hs_invariants_tol(g, DEFAULT_MEMBERSHIP_TOL)
}

/// K-bi-invariants of `g`. The inverse transpose is formed as `J g J^T`,
/// which equals `(g^T)^-1` exactly on Sp(2,R); the membership check guards it.
pub fn hs_invariants_tol(g: &GroupMatrix, tol: f64) -> Result<HSInvariants, GroupError> {
    if g.dim != 4 {
        return Err(GroupError::DimensionMismatch { expected: 4, got: g.dim });
    }
    let scale = linalg::hadamard_bound(4, &g.entries);
    let residual = g.symplectic_residual();
    // A singular g is at distance >= 1 from satisfying g^T J g = J; the determinant
    // of a large symplectic matrix is too ill-conditioned to decide on its own.
    let absolute = residual * linalg::frobenius_sq(&g.entries).max(1.0);
    if scale == 0.0 || (g.det().abs() <= f64::EPSILON * scale && absolute >= 0.5) {
        return Err(GroupError::Singular);
    }
    if residual > tol {
        return Err(GroupError::NotSymplectic { residual });
    }
    let j = symplectic_form();
    let jt = linalg::transpose(4, &j);
    let inv_t = linalg::matmul(4, &linalg::matmul(4, &j, &g.entries), &jt);
    let m: Vec<f64> = g.entries.iter().zip(&inv_t).map(|(a, b)| a - b).collect();
    Ok(HSInvariants { c1: linalg::frobenius_sq(&m) / 8.0, c2: linalg::det(4, &m) / 16.0 })
}

pub fn sp2_chamber(g: &GroupMatrix) -> Result<ChamberSp2, GroupError> {
    sp2_chamber_tol(g, DEFAULT_MEMBERSHIP_TOL)
}

/// Chamber part `(beta, gamma)` of `g ∈ K D(beta, gamma) K`: `sinh^2 beta` and
/// `sinh^2 gamma` are the roots of `x^2 - c1 x + c2 = 0`.
pub fn sp2_chamber_tol(g: &GroupMatrix, tol: f64) -> Result<ChamberSp2, GroupError> {
    let inv = hs_invariants_tol(g, tol)?;
    chamber_from_invariants(inv, tol)
}

pub fn chamber_from_invariants(inv: HSInvariants, tol: f64) -> Result<ChamberSp2, GroupError> {
    let HSInvariants { c1, c2 } = inv;
    let mut disc = inv.discriminant();
    if disc < 0.0 {
        if disc < -tol * c1 * c1 {
            return Err(GroupError::NegativeDiscriminant { discriminant: disc });
        }
        disc = 0.0;
    }
    let x_plus = 0.5 * (c1 + disc.sqrt());
    // product of the roots avoids cancellation in the smaller one
    let x_minus = if x_plus > 0.0 { (c2 / x_plus).clamp(0.0, x_plus) } else { 0.0 };
    if c2 < -tol * c1 * c1 - tol {
        return Err(GroupError::NegativeDiscriminant { discriminant: disc });
    }
    let beta = x_plus.sqrt().asinh();
    let gamma = x_minus.sqrt().asinh().min(beta);
    Ok(ChamberSp2 { beta, gamma })
}

/// `D(s,t) = e^{-(s+2t)/3} diag(e^{s+t}, e^t, 1)`.
pub fn sl3_dmat(c: ChamberSl3) -> GroupMatrix {
    sl3_diag(c.s, c.t)
}

/// `D(s,t)` for arbitrary real `s, t`.
pub fn sl3_diag(s: f64, t: f64) -> GroupMatrix {
    let shift = -(s + 2.0 * t) / 3.0;
    GroupMatrix::diagonal(GroupTag::SL3, &[(s + t + shift).exp(), (t + shift).exp(), shift.exp()])
}

pub fn sl3_chamber(g: &GroupMatrix) -> Result<ChamberSl3, GroupError> {
    sl3_chamber_tol(g, DEFAULT_MEMBERSHIP_TOL)
}

/// `(s, t) = (log sigma1/sigma2, log sigma2/sigma3)` from the singular values of `g`.
///
/// `sigma1` and `sigma1 sigma2` are both taken as the largest singular value
/// (of `g` and of its cofactor matrix), and `sigma1 sigma2 sigma3 = 1` once
/// membership is established, so no small eigenvalue of `g^T g` is ever needed.
/// The computed determinant is not used here: its rounding error grows like
/// `eps * sigma1^2 sigma2`.
pub fn sl3_chamber_tol(g: &GroupMatrix, tol: f64) -> Result<ChamberSl3, GroupError> {
    if g.dim != 3 {
        return Err(GroupError::DimensionMismatch { expected: 3, got: g.dim });
    }
    let scale = linalg::hadamard_bound(3, &g.entries);
    let det = g.det();
    // a determinant near 1 settles invertibility even when it is small against the Hadamard bound
    if scale == 0.0 || (det.abs() <= f64::EPSILON * scale && det.abs() < 0.5) {
        return Err(GroupError::Singular);
    }
    let residual = g.unimodular_residual();
    if residual > tol {
        return Err(GroupError::NotUnimodular { residual });
    }
    let gram = linalg::matmul(3, &linalg::transpose(3, &g.entries), &g.entries);
    let cof = linalg::cofactor3(&g.entries);
    let cof_gram = linalg::matmul(3, &linalg::transpose(3, &cof), &cof);
    let ln_p1 = 0.5 * linalg::symmetric_eigenvalues(3, &gram)[0].ln();
    let ln_p2 = 0.5 * linalg::symmetric_eigenvalues(3, &cof_gram)[0].ln();
    let s = (2.0 * ln_p1 - ln_p2).max(0.0);
    let t = (2.0 * ln_p2 - ln_p1).max(0.0);
    Ok(ChamberSl3 { s, t })
}

/// Chamber parameter `q` of `[[e^r cos th, -sin th], [sin th, e^-r cos th]]` in SL(2,R):
/// `sinh q = |cos th| sinh r`.
pub fn sl2_polar_q(r: f64, theta: f64) -> f64 {
    assert!(r >= 0.0, "r must be nonnegative");
    let c = theta.cos().abs();
    if c == 0.0 || r == 0.0 {
        return 0.0;
    }
    let q = if r <= 20.0 { (c * r.sinh()).asinh() } else { asinh_exp(c.ln() + ln_sinh(r)) };
    q.min(r)
}

/// The rotation `[[cos th, -sin th, 0], [sin th, cos th, 0], [0, 0, 1]]`.
pub fn so3_rotation_z(theta: f64) -> GroupMatrix {
    let (s, c) = theta.sin_cos();
    GroupMatrix {
        dim: 3,
        group_tag: GroupTag::SO3,
        entries: vec![c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0],
    }
}

/// Element of K0 = SO(2) embedded in the lower-right block of SO(3).
pub fn k0_element(theta: f64) -> GroupMatrix {
    let (s, c) = theta.sin_cos();
    GroupMatrix {
        dim: 3,
        group_tag: GroupTag::SO3,
        entries: vec![1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_embeds_to_identity() {
        let k = embed_u2_to_k(&U2Param::identity()).unwrap();
        assert_eq!(k.entries(), GroupMatrix::identity(4, GroupTag::KU2).entries());
    }

    #[test]
    fn phase_in_second_slot_gives_k1_rotation() {
        let theta = 0.7_f64;
        let k = k1_element(theta);
        let (s, co) = theta.sin_cos();
        let expected = [
            1.0, 0.0, 0.0, 0.0, //
            0.0, co, 0.0, -s, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, s, 0.0, co,
        ];
        for (a, b) in k.entries().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn v_has_inverse_sqrt2_blocks() {
        let v = v_element();
        let h = FRAC_1_SQRT_2;
        let expected = [
            h, 0.0, -h, 0.0, //
            0.0, h, 0.0, -h, //
            h, 0.0, h, 0.0, //
            0.0, h, 0.0, h,
        ];
        assert_eq!(v.entries(), &expected);
        assert!(v.membership_residual() < 1e-15);
    }

    #[test]
    fn non_unitary_input_is_rejected() {
        let u = U2Param::diag(c(1.0, 0.0), c(2.0, 0.0));
        assert!(matches!(embed_u2_to_k(&u), Err(GroupError::NotUnitary { .. })));
        assert!(matches!(
            U2Param::new([[c(1.0, 0.0), c(0.1, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]),
            Err(GroupError::NotUnitary { .. })
        ));
    }

    #[test]
    fn diagonal_constructors() {
        assert_eq!(dmat_sp2(ChamberSp2::new(0.0, 0.0).unwrap()).entries(), GroupMatrix::identity(4, GroupTag::Sp2).entries());
        let d = dalpha(1.0);
        let e = std::f64::consts::E;
        assert_eq!(d.entries()[0], e);
        assert_eq!(d.entries()[5], 1.0);
        assert!((d.entries()[10] - 1.0 / e).abs() < 1e-16);
        assert_eq!(d.entries()[15], 1.0);
        let dp = dprime(0.3);
        assert_eq!(dp.get(1, 1), dp.get(0, 0));
        for g in [d, dp, sp2_diag(2.0, -1.0), v_element()] {
            assert!(g.membership_residual() <= 1e-12, "{g:?}");
        }
    }

    #[test]
    fn invariants_of_identity_and_diagonal() {
        let inv = hs_invariants(&GroupMatrix::identity(4, GroupTag::Sp2)).unwrap();
        assert_eq!((inv.c1, inv.c2), (0.0, 0.0));
        let (b, g) = (1.3_f64, 0.4_f64);
        let inv = hs_invariants(&sp2_diag(b, g)).unwrap();
        let (sb, sg) = (b.sinh().powi(2), g.sinh().powi(2));
        assert!((inv.c1 - (sb + sg)).abs() < 1e-14 * (sb + sg));
        assert!((inv.c2 - sb * sg).abs() < 1e-14 * sb * sg);
    }

    #[test]
    fn chamber_of_diagonal_is_fixed() {
        let ch = sp2_chamber(&sp2_diag(1.0, 0.5)).unwrap();
        assert!((ch.beta - 1.0).abs() < 1e-14 && (ch.gamma - 0.5).abs() < 1e-14);
        let ch = sp2_chamber(&GroupMatrix::identity(4, GroupTag::Sp2)).unwrap();
        assert_eq!((ch.beta, ch.gamma), (0.0, 0.0));
        // wall beta = gamma
        let ch = sp2_chamber(&sp2_diag(3.0, 3.0)).unwrap();
        assert!((ch.beta - 3.0).abs() < 1e-7 && (ch.gamma - 3.0).abs() < 1e-7);
        // unordered diagonal lands in the chamber
        let ch = sp2_chamber(&sp2_diag(-0.5, 2.0)).unwrap();
        assert!((ch.beta - 2.0).abs() < 1e-13 && (ch.gamma - 0.5).abs() < 1e-13);
    }

    #[test]
    fn chamber_recovery_through_random_k_factors() {
        let mut rng = rng_from_seed(7);
        let target = ChamberSp2::new(2.0, 1.0).unwrap();
        let d = dmat_sp2(target);
        let base = hs_invariants(&d).unwrap();
        for _ in 0..50 {
            let g = random_k_with(&mut rng).mul(&d).mul(&random_k_with(&mut rng));
            let inv = hs_invariants(&g).unwrap();
            assert!((inv.c1 - base.c1).abs() <= 1e-9 * base.c1);
            assert!((inv.c2 - base.c2).abs() <= 1e-9 * base.c2);
            let ch = sp2_chamber(&g).unwrap();
            assert!((ch.beta - 2.0).abs() < 1e-10 && (ch.gamma - 1.0).abs() < 1e-10, "{ch:?}");
        }
    }

    #[test]
    fn perturbed_identity_is_not_symplectic() {
        let mut e = GroupMatrix::identity(4, GroupTag::Sp2).entries().to_vec();
        e[1] += 0.1;
        let g = GroupMatrix::new(4, GroupTag::Sp2, e).unwrap();
        assert!(matches!(sp2_chamber(&g), Err(GroupError::NotSymplectic { .. })));
        assert!(g.check_membership(DEFAULT_MEMBERSHIP_TOL).is_err());
    }

    #[test]
    fn singular_input_is_reported() {
        let g = GroupMatrix::new(4, GroupTag::Generic, vec![0.0; 16]).unwrap();
        assert_eq!(hs_invariants(&g), Err(GroupError::Singular));
        let g = GroupMatrix::new(3, GroupTag::Generic, vec![1.0; 9]).unwrap();
        assert_eq!(sl3_chamber(&g), Err(GroupError::Singular));
    }

    #[test]
    fn negative_discriminant_is_rejected() {
        let inv = HSInvariants { c1: 1.0, c2: 1.0 };
        assert!(matches!(
            chamber_from_invariants(inv, 1e-9),
            Err(GroupError::NegativeDiscriminant { .. })
        ));
        // roundoff-sized negatives are clamped
        let inv = HSInvariants { c1: 2.0, c2: 1.0 + 1e-15 };
        let ch = chamber_from_invariants(inv, 1e-9).unwrap();
        assert!((ch.beta - 1f64.asinh()).abs() < 1e-7);
    }

    #[test]
    fn sl3_round_trip_and_identity() {
        let ch = sl3_chamber(&GroupMatrix::identity(3, GroupTag::SL3)).unwrap();
        assert!(ch.s.abs() < 1e-15 && ch.t.abs() < 1e-15);
        let ch = sl3_chamber(&sl3_dmat(ChamberSl3::new(2.0, 1.0).unwrap())).unwrap();
        assert!((ch.s - 2.0).abs() < 1e-13 && (ch.t - 1.0).abs() < 1e-13);
        assert!(sl3_diag(4.0, 0.5).membership_residual() < 1e-15);
    }

    #[test]
    fn sl3_chamber_through_so3_factors() {
        let d = sl3_dmat(ChamberSl3::new(3.0, 0.5).unwrap());
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let g = random_so3_with(&mut rng).mul(&d).mul(&random_so3_with(&mut rng));
            let ch = sl3_chamber(&g).unwrap();
            assert!((ch.s - 3.0).abs() < 1e-11 && (ch.t - 0.5).abs() < 1e-11, "{ch:?}");
        }
    }

    #[test]
    fn sl2_q_special_angles() {
        assert!(sl2_polar_q(1.7, FRAC_PI_2).abs() < 1e-15);
        assert!((sl2_polar_q(1.7, 0.0) - 1.7).abs() < 1e-15);
        let q = sl2_polar_q(2.0, FRAC_PI_3);
        assert!((q - (0.5 * 2f64.sinh()).asinh()).abs() < 1e-15);
        assert!((sl2_polar_q(40.0, 0.0) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn sl2_q_matches_singular_values() {
        // singular values of [[e^r c, -s], [s, e^-r c]] are e^{±q}
        for (r, th) in [(2.0_f64, FRAC_PI_3), (0.7, 1.1), (3.5, 0.2), (1.0, 2.5)] {
            let (s, c) = th.sin_cos();
            let m = [r.exp() * c, -s, s, (-r).exp() * c];
            let hs2: f64 = m.iter().map(|x| x * x).sum();
            // sigma1^2 + sigma2^2 = hs2 and sigma1 sigma2 = 1
            let sigma1_sq = 0.5 * (hs2 + (hs2 * hs2 - 4.0).max(0.0).sqrt());
            let q_svd = 0.5 * sigma1_sq.ln();
            assert!((sl2_polar_q(r, th) - q_svd).abs() < 1e-12, "r={r} th={th}");
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let g = sp2_diag(0.25, 0.125);
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"group_tag\":\"Sp2\""));
        let back: GroupMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"dim":4,"group_tag":"Sp2","entries":[1,2,3]}"#;
        assert!(serde_json::from_str::<GroupMatrix>(bad).is_err());
        let ch = serde_json::to_string(&ChamberSp2::new(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(ch, r#"{"beta":1.0,"gamma":0.5}"#);
    }

    #[test]
    fn chamber_constructors_validate() {
        assert!(ChamberSp2::new(1.0, 2.0).is_err());
        assert!(ChamberSp2::new(1.0, -0.1).is_err());
        assert!(ChamberSl3::new(-1.0, 0.0).is_err());
        assert!(ChamberSl3::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn k_to_u2_inverts_embedding() {
        let u = random_u2(&mut rng_from_seed(11));
        let back = embed_u2_to_k(&u).unwrap().k_to_u2();
        for i in 0..2 {
            for j in 0..2 {
                assert!((back.entries[i][j] - u.entries[i][j]).norm() < 1e-15);
            }
        }
    }
}
