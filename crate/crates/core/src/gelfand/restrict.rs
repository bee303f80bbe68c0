//! Bi-invariant functions on Sp(2,R) and SL(3,R) given through their chamber
//! values, and their restrictions to compact subgroups.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::GelfandError;
use crate::groups::{
    dalpha, dprime, sl3_chamber, sl3_diag, sp2_chamber, v_element, ChamberPoint, GroupMatrix, GroupTag,
    DEFAULT_MEMBERSHIP_TOL,
};

pub type ChamberFn = Arc<dyn Fn(ChamberPoint) -> Complex64 + Send + Sync>;

/// `g -> chamber_fn(chamber(g))`; K-bi-invariant by construction. Its multiplier norm is not modelled.
#[derive(Clone)]
pub struct SyntheticGMultiplier {
    group: GroupTag,
    label: String,
    chamber_fn: ChamberFn,
}

impl fmt::Debug for SyntheticGMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SyntheticGMultiplier").field("group", &self.group).field("label", &self.label).finish()
    }
}

impl SyntheticGMultiplier {
    /// `group` must be `Sp2` or `SL3`.
    pub fn new(
        group: GroupTag,
        label: impl Into<String>,
        chamber_fn: impl Fn(ChamberPoint) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self, GelfandError> {
        if !matches!(group, GroupTag::Sp2 | GroupTag::SL3) {
            return Err(GelfandError::WrongGroup { expected: "Sp2 or SL3".into(), got: group.to_string() });
        }
        Ok(Self { group, label: label.into(), chamber_fn: Arc::new(chamber_fn) })
    }

    /// `exp(-rate (beta + gamma))` on Sp(2,R), or `exp(-rate (s + t))` on SL(3,R).
    pub fn exponential(group: GroupTag, rate: f64) -> Result<Self, GelfandError> {
        Self::new(group, format!("exp(-{rate} * chamber sum)"), move |c| {
            let sum = match c {
                ChamberPoint::Sp2(c) => c.beta + c.gamma,
                ChamberPoint::Sl3(c) => c.s + c.t,
            };
            Complex64::new((-rate * sum).exp(), 0.0)
        })
    }

    pub fn group(&self) -> GroupTag {
        self.group
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn at_chamber(&self, c: ChamberPoint) -> Complex64 {
        (self.chamber_fn)(c)
    }

    /// Evaluates at a group element through its chamber point.
    pub fn eval(&self, g: &GroupMatrix) -> Result<Complex64, GelfandError> {
        let c = match self.group {
            GroupTag::Sp2 => ChamberPoint::Sp2(sp2_chamber(g)?),
            _ => ChamberPoint::Sl3(sl3_chamber(g)?),
        };
        Ok(self.at_chamber(c))
    }
}

fn require_group(phi: &SyntheticGMultiplier, group: GroupTag) -> Result<(), GelfandError> {
    if phi.group != group {
        return Err(GelfandError::WrongGroup { expected: group.to_string(), got: phi.group.to_string() });
    }
    Ok(())
}

fn require_k(k: &GroupMatrix) -> Result<(), GelfandError> {
    if !matches!(k.group_tag(), GroupTag::KU2 | GroupTag::K2SU2) {
        return Err(GelfandError::WrongGroup { expected: "K".into(), got: k.group_tag().to_string() });
    }
    k.check_membership(DEFAULT_MEMBERSHIP_TOL)?;
    Ok(())
}

/// `psi_alpha(k) = phi(D_alpha k D_alpha)`; invariant under K1 on both sides.
pub fn restrict_psi(phi: &SyntheticGMultiplier, alpha: f64, k: &GroupMatrix) -> Result<Complex64, GelfandError> {
    require_group(phi, GroupTag::Sp2)?;
    require_k(k)?;
    let d = dalpha(alpha);
    phi.eval(&d.mul(k).mul(&d))
}

/// `chi_alpha(k) = phi(D'_alpha k v D'_alpha)`; invariant under K3 on both sides.
pub fn restrict_chi(phi: &SyntheticGMultiplier, alpha: f64, k: &GroupMatrix) -> Result<Complex64, GelfandError> {
    require_group(phi, GroupTag::Sp2)?;
    require_k(k)?;
    let d = dprime(alpha);
    phi.eval(&d.mul(k).mul(&v_element()).mul(&d))
}

/// `psi_r(k) = phi(D(r,0) k D(r,0))` for `k` in SO(3); invariant under the SO(2) fixing the first axis.
pub fn restrict_psi_sl3(phi: &SyntheticGMultiplier, r: f64, k: &GroupMatrix) -> Result<Complex64, GelfandError> {
    require_group(phi, GroupTag::SL3)?;
    if k.group_tag() != GroupTag::SO3 {
        return Err(GelfandError::WrongGroup { expected: "SO(3)".into(), got: k.group_tag().to_string() });
    }
    k.check_membership(DEFAULT_MEMBERSHIP_TOL)?;
    let d = sl3_diag(r, 0.0);
    phi.eval(&d.mul(k).mul(&d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{k0_element, k1_element, k3_element, random_k_with, random_so3_with, rng_from_seed, ChamberSp2};
    use rand::Rng;

    /// Depends on the chamber only through `sinh^2 beta + sinh^2 gamma`, which is
    /// recovered without the square roots that amplify rounding at the walls.
    fn smooth_sp2() -> SyntheticGMultiplier {
        SyntheticGMultiplier::new(GroupTag::Sp2, "gaussian in c1", |c| match c {
            ChamberPoint::Sp2(c) => Complex64::new((-(c.beta.sinh().powi(2) + c.gamma.sinh().powi(2)) / 4.0).exp(), 0.0),
            _ => unreachable!(),
        })
        .unwrap()
    }

    #[test]
    fn alpha_zero_is_plain_restriction() {
        let phi = SyntheticGMultiplier::new(GroupTag::Sp2, "identity coset", |c| match c {
            ChamberPoint::Sp2(ChamberSp2 { beta, .. }) if beta < 1e-6 => Complex64::new(1.0, 0.0),
            _ => Complex64::new(0.0, 0.0),
        })
        .unwrap();
        let mut rng = rng_from_seed(2);
        for _ in 0..10 {
            let k = random_k_with(&mut rng);
            assert_eq!(restrict_psi(&phi, 0.0, &k).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn psi_is_k1_bi_invariant() {
        let phi = smooth_sp2();
        let mut rng = rng_from_seed(21);
        for _ in 0..200 {
            let k = random_k_with(&mut rng);
            let alpha = rng.random::<f64>() * 2.0;
            let (t1, t2) = (rng.random::<f64>() * 6.3, rng.random::<f64>() * 6.3);
            let base = restrict_psi(&phi, alpha, &k).unwrap();
            let moved = restrict_psi(&phi, alpha, &k1_element(t1).mul(&k).mul(&k1_element(t2))).unwrap();
            assert!((base - moved).norm() < 1e-9);
        }
    }

    #[test]
    fn chi_is_k3_bi_invariant() {
        let phi = smooth_sp2();
        let mut rng = rng_from_seed(22);
        for _ in 0..200 {
            let k = random_k_with(&mut rng);
            let alpha = rng.random::<f64>() * 2.0;
            let (t1, t2) = (rng.random::<f64>() * 6.3, rng.random::<f64>() * 6.3);
            let base = restrict_chi(&phi, alpha, &k).unwrap();
            let moved = restrict_chi(&phi, alpha, &k3_element(t1).mul(&k).mul(&k3_element(t2))).unwrap();
            assert!((base - moved).norm() < 1e-9);
        }
    }

    #[test]
    fn sl3_restriction_is_k0_bi_invariant() {
        let phi = SyntheticGMultiplier::exponential(GroupTag::SL3, 0.3).unwrap();
        let mut rng = rng_from_seed(23);
        for _ in 0..100 {
            let k = random_so3_with(&mut rng);
            let base = restrict_psi_sl3(&phi, 1.5, &k).unwrap();
            let moved = restrict_psi_sl3(&phi, 1.5, &k0_element(0.7).mul(&k).mul(&k0_element(-2.0))).unwrap();
            assert!((base - moved).norm() < 1e-9);
        }
    }

    #[test]
    fn group_mismatches_are_rejected() {
        let phi = SyntheticGMultiplier::exponential(GroupTag::SL3, 1.0).unwrap();
        let k = random_k_with(&mut rng_from_seed(0));
        assert!(matches!(restrict_psi(&phi, 1.0, &k), Err(GelfandError::WrongGroup { .. })));
        assert!(SyntheticGMultiplier::exponential(GroupTag::SO3, 1.0).is_err());
        let phi = smooth_sp2();
        let d = dalpha(1.0);
        assert!(matches!(restrict_chi(&phi, 1.0, &d), Err(GelfandError::WrongGroup { .. })));
    }
}
