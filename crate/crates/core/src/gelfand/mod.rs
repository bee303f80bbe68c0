//! Multipliers on the compact Gelfand pairs as finite spherical expansions,
//! their Hölder certificates, and restrictions of bi-invariant functions on
//! Sp(2,R) and SL(3,R) to the compact subgroups.

pub mod campaigns;
mod expand;
mod restrict;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::groups::{rng_from_seed, GroupError};
use crate::orthopoly::{legendre_table, JacobiRecurrence, OrthoError, PairId, SphericalIndex, DOMAIN_TOL};

pub use expand::{
    expand_legendre, expand_legendre_fn, expand_u2u1, haar_uniformity_check, legendre_nodes,
    DiscQuadrature, MomentCheck, UniformityCheck, U2U1Expansion,
};
pub use restrict::{restrict_chi, restrict_psi, restrict_psi_sl3, ChamberFn, SyntheticGMultiplier};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GelfandError {
    #[error("index {index:?} does not label a spherical function of {pair:?}")]
    IndexMismatch { pair: PairId, index: SphericalIndex },
    #[error("operation needs pair {expected:?}, multiplier is on {got:?}")]
    PairMismatch { expected: PairId, got: PairId },
    #[error("point {0} is not a coordinate of the double-coset space")]
    Domain(String),
    #[error("degree {degree} is not resolved by {nodes} quadrature nodes")]
    DegreeTooHigh { degree: usize, nodes: usize },
    #[error("coefficient list is inconsistent: {0}")]
    Malformed(String),
    #[error("Haar uniformity pre-check failed: {0}")]
    UniformityCheckFailed(String),
    #[error("Gram matrix is not positive definite at mode {mode}")]
    SingularGram { mode: i64 },
    #[error("multiplier is defined on {expected}, got a matrix tagged {got}")]
    WrongGroup { expected: String, got: String },
    #[error(transparent)]
    Ortho(#[from] OrthoError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Finite spherical expansion `sum c_i h_i` on a compact Gelfand pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactMultiplier {
    pair_id: PairId,
    coefficients: BTreeMap<SphericalIndex, Complex64>,
    l1_norm: f64,
}

/// Point of a double-coset space: a disc coordinate `u_11` or an interval coordinate `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CosetPoint {
    Disc(Complex64),
    Interval(f64),
}

impl CompactMultiplier {
    /// Repeated indices are summed.
    pub fn new(
        pair_id: PairId,
        terms: impl IntoIterator<Item = (SphericalIndex, Complex64)>,
    ) -> Result<Self, GelfandError> {
        let mut coefficients = BTreeMap::new();
        for (index, c) in terms {
            if !index.fits(pair_id) {
                return Err(GelfandError::IndexMismatch { pair: pair_id, index });
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(GelfandError::Malformed(format!("non-finite coefficient at {index:?}")));
            }
            *coefficients.entry(index).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let l1_norm = coefficients.values().map(|c| c.norm()).sum();
        Ok(Self { pair_id, coefficients, l1_norm })
    }

    pub fn single(pair_id: PairId, index: SphericalIndex) -> Result<Self, GelfandError> {
        Self::new(pair_id, [(index, Complex64::new(1.0, 0.0))])
    }

    pub fn pair_id(&self) -> PairId {
        self.pair_id
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn coefficients(&self) -> &BTreeMap<SphericalIndex, Complex64> {
        &self.coefficients
    }

    pub fn coefficient(&self, index: SphericalIndex) -> Complex64 {
        self.coefficients.get(&index).copied().unwrap_or_default()
    }

    /// Largest `p + q` or `n` carried.
    pub fn degree(&self) -> u32 {
        self.coefficients
            .keys()
            .map(|i| match *i {
                SphericalIndex::PQ { p, q } => p + q,
                SphericalIndex::N { n } => n,
            })
            .max()
            .unwrap_or(0)
    }

    /// Rescaled to unit `l1_norm`; the zero multiplier is returned unchanged.
    pub fn normalized(&self) -> Self {
        if self.l1_norm == 0.0 {
            return self.clone();
        }
        let s = 1.0 / self.l1_norm;
        Self::new(self.pair_id, self.coefficients.iter().map(|(i, c)| (*i, c * s))).expect("same indices")
    }

    /// Gaussian coefficients on every index of total degree at most `degree`, normalised to `l1_norm = 1`.
    pub fn random(pair_id: PairId, degree: u32, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut draw = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let terms: Vec<(SphericalIndex, Complex64)> = match pair_id {
            PairId::U2U1 => (0..=degree)
                .flat_map(|total| (0..=total).map(move |p| SphericalIndex::PQ { p, q: total - p }))
                .map(|i| (i, draw()))
                .collect(),
            _ => (0..=degree).map(|n| (SphericalIndex::N { n }, draw())).collect(),
        };
        Self::new(pair_id, terms).expect("indices fit").normalized()
    }
}

#[derive(Serialize, Deserialize)]
struct CoefficientEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct MultiplierJson {
    pair_id: PairId,
    coefficients: Vec<CoefficientEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l1_norm: Option<f64>,
}

impl Serialize for CompactMultiplier {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let coefficients = self
            .coefficients
            .iter()
            .map(|(index, c)| {
                let (p, q, n) = match *index {
                    SphericalIndex::PQ { p, q } => (Some(p), Some(q), None),
                    SphericalIndex::N { n } => (None, None, Some(n)),
                };
                CoefficientEntry { p, q, n, re: c.re, im: c.im }
            })
            .collect();
        MultiplierJson { pair_id: self.pair_id, coefficients, l1_norm: Some(self.l1_norm) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CompactMultiplier {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = MultiplierJson::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(raw.coefficients.len());
        for e in raw.coefficients {
            let index = match (e.p, e.q, e.n) {
                (Some(p), Some(q), None) => SphericalIndex::PQ { p, q },
                (None, None, Some(n)) => SphericalIndex::N { n },
                _ => return Err(D::Error::custom("each coefficient needs either {p, q} or {n}")),
            };
            terms.push((index, Complex64::new(e.re, e.im)));
        }
        let m = CompactMultiplier::new(raw.pair_id, terms).map_err(D::Error::custom)?;
        if let Some(stated) = raw.l1_norm {
            if (stated - m.l1_norm).abs() > 1e-9 * m.l1_norm.max(1.0) {
                return Err(D::Error::custom(format!(
                    "stated l1_norm {stated} differs from the coefficient sum {}",
                    m.l1_norm
                )));
            }
        }
        Ok(m)
    }
}

fn coset_point_for(pair: PairId, point: CosetPoint) -> Result<CosetPoint, GelfandError> {
    match (pair, point) {
        (PairId::U2U1, CosetPoint::Disc(z)) => {
            if !(z.norm() <= 1.0 + DOMAIN_TOL) {
                return Err(GelfandError::Domain(format!("|z| = {} > 1", z.norm())));
            }
            Ok(point)
        }
        (PairId::U2U1, CosetPoint::Interval(r)) => {
            // a real point of the disc
            coset_point_for(pair, CosetPoint::Disc(Complex64::new(r, 0.0)))
        }
        (_, CosetPoint::Interval(r)) => {
            if !(r.abs() <= 1.0 + DOMAIN_TOL) {
                return Err(GelfandError::Domain(format!("r = {r} outside [-1, 1]")));
            }
            Ok(CosetPoint::Interval(r.clamp(-1.0, 1.0)))
        }
        (_, CosetPoint::Disc(z)) => {
            if z.im != 0.0 {
                return Err(GelfandError::Domain(format!("{z} is not a real coordinate")));
            }
            coset_point_for(pair, CosetPoint::Interval(z.re))
        }
    }
}

/// All `h_{p,q}(z)` with `p + q <= degree`, keyed by `(p - q, min(p, q))`.
pub(crate) struct U2U1Table {
    degree: u32,
    rows: Vec<Vec<Complex64>>,
}

impl U2U1Table {
    pub(crate) fn new(degree: u32, z: Complex64) -> Self {
        let x = (2.0 * z.norm_sqr() - 1.0).clamp(-1.0, 1.0);
        let d = degree as i64;
        let rows = (-d..=d)
            .map(|k| {
                let gap = k.unsigned_abs() as u32;
                let l_max = ((degree - gap) / 2) as usize;
                let w = if k >= 0 { z } else { z.conj() }.powu(gap);
                let mut row = Vec::with_capacity(l_max + 1);
                JacobiRecurrence::new(gap, l_max).for_each(l_max, x, |_, v| row.push(w * v));
                row
            })
            .collect();
        Self { degree, rows }
    }

    pub(crate) fn get(&self, p: u32, q: u32) -> Complex64 {
        let k = p as i64 - q as i64;
        self.rows[(k + self.degree as i64) as usize][p.min(q) as usize]
    }
}

/// `sum c_i h_i(point)`.
pub fn eval_multiplier(m: &CompactMultiplier, point: CosetPoint) -> Result<Complex64, GelfandError> {
    let point = coset_point_for(m.pair_id, point)?;
    let degree = m.degree();
    let mut sum = Complex64::new(0.0, 0.0);
    match point {
        CosetPoint::Disc(z) => {
            let table = U2U1Table::new(degree, z);
            for (index, c) in &m.coefficients {
                if let SphericalIndex::PQ { p, q } = *index {
                    sum += c * table.get(p, q);
                }
            }
        }
        CosetPoint::Interval(r) => {
            let table = legendre_table(degree as usize, r);
            for (index, c) in &m.coefficients {
                if let SphericalIndex::N { n } = *index {
                    sum += c * table[n as usize];
                }
            }
        }
    }
    Ok(sum)
}

/// One evaluated inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertLine {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub inputs: Value,
}

impl CertLine {
    pub fn new(lhs: f64, rhs: f64, inputs: Value) -> Self {
        Self { lhs, rhs, margin: rhs - lhs, inputs }
    }

    pub fn holds(&self) -> bool {
        !crate::report::is_violation(self.margin, self.lhs, self.rhs)
    }
}

/// `|phi(e^{i t1}/sqrt2) - phi(e^{i t2}/sqrt2)| <= c_tilde |t1 - t2|^(1/4) l1_norm`.
pub fn holder_certify_u2u1(
    m: &CompactMultiplier,
    theta1: f64,
    theta2: f64,
    c_tilde: f64,
) -> Result<CertLine, GelfandError> {
    if m.pair_id != PairId::U2U1 {
        return Err(GelfandError::PairMismatch { expected: PairId::U2U1, got: m.pair_id });
    }
    let at = |t: f64| eval_multiplier(m, CosetPoint::Disc(Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, t)));
    let lhs = (at(theta1)? - at(theta2)?).norm();
    let rhs = c_tilde * (theta1 - theta2).abs().powf(0.25) * m.l1_norm;
    Ok(CertLine::new(lhs, rhs, json!({ "theta1": theta1, "theta2": theta2, "c_tilde": c_tilde, "l1_norm": m.l1_norm })))
}

/// `|chi(r1) - chi(r2)| <= 4 |r1 - r2|^(1/2) l1_norm` on `[-1/2, 1/2]`.
pub fn holder_certify_su2so2(m: &CompactMultiplier, r1: f64, r2: f64) -> Result<CertLine, GelfandError> {
    if m.pair_id == PairId::U2U1 {
        return Err(GelfandError::PairMismatch { expected: PairId::SU2SO2, got: m.pair_id });
    }
    for r in [r1, r2] {
        if !(r.abs() <= 0.5 + DOMAIN_TOL) {
            return Err(GelfandError::Domain(format!("r = {r} outside [-1/2, 1/2]")));
        }
    }
    let lhs = (eval_multiplier(m, CosetPoint::Interval(r1))? - eval_multiplier(m, CosetPoint::Interval(r2))?).norm();
    let rhs = 4.0 * (r1 - r2).abs().sqrt() * m.l1_norm;
    Ok(CertLine::new(lhs, rhs, json!({ "r1": r1, "r2": r2, "l1_norm": m.l1_norm })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::{legendre, spherical_u2u1};

    fn pq(p: u32, q: u32) -> SphericalIndex {
        SphericalIndex::PQ { p, q }
    }

    #[test]
    fn constant_and_identity_multipliers() {
        let one = CompactMultiplier::single(PairId::U2U1, pq(0, 0)).unwrap();
        let z = Complex64::new(0.2, -0.7);
        assert_eq!(eval_multiplier(&one, CosetPoint::Disc(z)).unwrap(), Complex64::new(1.0, 0.0));
        let ident = CompactMultiplier::single(PairId::U2U1, pq(1, 0)).unwrap();
        assert!((eval_multiplier(&ident, CosetPoint::Disc(z)).unwrap() - z).norm() < 1e-15);
    }

    #[test]
    fn evaluation_matches_termwise_sum() {
        let m = CompactMultiplier::random(PairId::U2U1, 12, 4);
        assert!((m.l1_norm() - 1.0).abs() < 1e-14);
        for z in [Complex64::new(0.1, 0.5), Complex64::new(-0.6, 0.3), Complex64::from_polar(1.0, 2.0)] {
            let naive: Complex64 = m
                .coefficients()
                .iter()
                .map(|(i, c)| match *i {
                    SphericalIndex::PQ { p, q } => c * spherical_u2u1(p, q, z).unwrap(),
                    _ => unreachable!(),
                })
                .sum();
            let fast = eval_multiplier(&m, CosetPoint::Disc(z)).unwrap();
            assert!((naive - fast).norm() < 1e-12);
            assert!(fast.norm() <= m.l1_norm() + 1e-12);
        }
        let m = CompactMultiplier::random(PairId::SU2SO2, 20, 5);
        let r = 0.37;
        let naive: Complex64 = m
            .coefficients()
            .iter()
            .map(|(i, c)| match *i {
                SphericalIndex::N { n } => c * legendre(n as usize, r).unwrap(),
                _ => unreachable!(),
            })
            .sum();
        assert!((naive - eval_multiplier(&m, CosetPoint::Interval(r)).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn index_and_domain_validation() {
        assert!(matches!(
            CompactMultiplier::single(PairId::U2U1, SphericalIndex::N { n: 1 }),
            Err(GelfandError::IndexMismatch { .. })
        ));
        let m = CompactMultiplier::single(PairId::SU2SO2, SphericalIndex::N { n: 2 }).unwrap();
        assert!(matches!(eval_multiplier(&m, CosetPoint::Interval(1.5)), Err(GelfandError::Domain(_))));
        assert!(matches!(holder_certify_su2so2(&m, 0.6, 0.0), Err(GelfandError::Domain(_))));
        assert!(matches!(holder_certify_u2u1(&m, 0.0, 1.0, 1.0), Err(GelfandError::PairMismatch { .. })));
    }

    #[test]
    fn json_round_trip() {
        let m = CompactMultiplier::new(
            PairId::U2U1,
            [(pq(1, 0), Complex64::new(0.5, 0.0)), (pq(2, 3), Complex64::new(0.0, -0.25))],
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"pair_id\":\"U2_U1\""));
        assert!(s.contains("\"l1_norm\":0.75"));
        let back: CompactMultiplier = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"pair_id":"SU2_SO2","coefficients":[{"n":1,"re":1.0,"im":0.0}],"l1_norm":3.0}"#;
        assert!(serde_json::from_str::<CompactMultiplier>(bad).is_err());
        let mixed = r#"{"pair_id":"SU2_SO2","coefficients":[{"p":1,"n":1,"re":1.0,"im":0.0}]}"#;
        assert!(serde_json::from_str::<CompactMultiplier>(mixed).is_err());
    }

    #[test]
    fn holder_lines() {
        let m = CompactMultiplier::single(PairId::U2U1, pq(3, 1)).unwrap();
        let line = holder_certify_u2u1(&m, 0.4, 0.4, 2f64.powf(0.75)).unwrap();
        assert_eq!(line.lhs, 0.0);
        assert!(line.margin >= 0.0);
        let line = holder_certify_u2u1(&m, 0.1, 2.0, 2f64.powf(0.75)).unwrap();
        assert!(line.holds());
        let m = CompactMultiplier::single(PairId::SU2SO2, SphericalIndex::N { n: 40 }).unwrap();
        assert!(holder_certify_su2so2(&m, 0.2, 0.2).unwrap().margin >= 0.0);
        assert!(holder_certify_su2so2(&m, -0.5, 0.31).unwrap().holds());
    }
}
