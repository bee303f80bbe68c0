//! The scalar inequalities behind each link of the decay chain, evaluated pointwise.

use std::f64::consts::{E, LN_2, SQRT_2};

use serde_json::{json, Value};

use super::{ConstantsLedger, CertifyError, LEDGER_TOL};
use crate::coupling::{rho, sigma, solve_betagamma, solve_st};
use crate::groups::ChamberSp2;
use crate::report::{LemmaReport, MarginAccumulator};

/// One accumulator per inequality family, each active only in its regime.
#[derive(Default)]
pub(crate) struct ChainAccs {
    pub circle_far: MarginAccumulator,
    pub circle_near: MarginAccumulator,
    pub hyperbola_far: MarginAccumulator,
    pub hyperbola_near: MarginAccumulator,
    pub rhosigma: MarginAccumulator,
    pub comparest: MarginAccumulator,
    /// Points where a solver failed; reported only when non-empty.
    pub failures: MarginAccumulator,
}

impl ChainAccs {
    pub(crate) fn merge(&mut self, other: ChainAccs) {
        self.circle_far.merge(other.circle_far);
        self.circle_near.merge(other.circle_near);
        self.hyperbola_far.merge(other.hyperbola_far);
        self.hyperbola_near.merge(other.hyperbola_near);
        self.rhosigma.merge(other.rhosigma);
        self.comparest.merge(other.comparest);
        self.failures.merge(other.failures);
    }

    pub(crate) fn fail(&mut self, location: Value) {
        self.failures.margin(f64::NEG_INFINITY, true, || location);
    }

    pub(crate) fn into_report(self, lemma_id: &str, grid_spec: Value) -> LemmaReport {
        let parts = [
            ("circle_far", "beta >= gamma + 8", self.circle_far),
            ("circle_near", "beta < gamma + 8", self.circle_near),
            ("hyperbola_far", "gamma >= 2", self.hyperbola_far),
            ("hyperbola_near", "gamma < 2", self.hyperbola_near),
            ("rhosigma", "s >= t >= 1", self.rhosigma),
            ("comparest", "2 <= t <= s <= 6t/5", self.comparest),
        ];
        let mut skipped = Vec::new();
        let mut reports = Vec::new();
        for (name, regime, acc) in parts {
            if acc.checks == 0 {
                skipped.push(format!("{name} ({regime})"));
            }
            reports.push(acc.into_report(name, json!({ "regime": regime })));
        }
        if self.failures.checks > 0 {
            reports.push(self.failures.into_report("solver_failures", json!({})));
        }
        let report = LemmaReport::combine(lemma_id, grid_spec, reports);
        if skipped.is_empty() {
            report
        } else {
            report.with_note(format!("not applicable: {}", skipped.join(", ")))
        }
    }
}

/// Circle link between `D(beta, gamma)` and `D(2s, s)`.
fn circle(acc: &mut ChainAccs, beta: f64, gamma: f64, s: f64) {
    let at = |what: &str| json!({ "beta": beta, "gamma": gamma, "s": s, "step": what });
    let gap = beta - gamma;
    if gap < 8.0 {
        acc.circle_near.bound(2.0, 4.0 * SQRT_2 * (-gap / 8.0).exp(), || at("2 <= C3 exp(-(beta-gamma)/8)"));
        return;
    }
    let a = &mut acc.circle_far;
    let (sb, sg) = (beta.sinh(), gamma.sinh());
    let r1 = 2.0 * sb * sg / (sb * sb + sg * sg);
    let r2 = sigma(s) / rho(s);
    let e = |x: f64| x.exp();
    a.bound(r1, 2.0 * e(-gap), || at("r1 <= 2 exp(gamma-beta)"));
    a.bound(2.0 * e(-gap), 2.0 * e(-8.0), || at("2 exp(gamma-beta) <= 2 exp(-8)"));
    a.bound(2.0 * e(-8.0), 0.5, || at("2 exp(-8) <= 1/2"));
    a.bound(r2, 1.0 / s.cosh(), || at("r2 <= 1/cosh s"));
    a.bound(1.0 / s.cosh(), 2.0 * e(-s), || at("1/cosh s <= 2 exp(-s)"));
    a.bound(2.0 * e(-s), 2.0 * e(-beta / 4.0), || at("2 exp(-s) <= 2 exp(-beta/4)"));
    a.bound(2.0 * e(-beta / 4.0), 2.0 * e(-gap / 4.0), || at("2 exp(-beta/4) <= 2 exp((gamma-beta)/4)"));
    a.bound(2.0 * e(-gap / 4.0), 2.0 * e(-2.0), || at("2 exp((gamma-beta)/4) <= 2 exp(-2)"));
    a.bound(2.0 * e(-2.0), 0.5, || at("2 exp(-2) <= 1/2"));
    a.bound(4.0 * (r1 - r2).abs().sqrt(), 4.0 * SQRT_2 * e(-gap / 8.0), || at("4 |r1-r2|^(1/2) <= C3 exp(-(beta-gamma)/8)"));
}

/// Hyperbola link between `D(beta, gamma)` and `D(2t, t)`; both share the same `alpha`.
fn hyperbola(acc: &mut ChainAccs, beta: f64, gamma: f64, t: f64) {
    let at = |what: &str| json!({ "beta": beta, "gamma": gamma, "t": t, "step": what });
    if gamma < 2.0 {
        acc.hyperbola_near.bound(2.0, 2.0 * 0.25f64.exp() * (-gamma / 8.0).exp(), || {
            at("2 <= 2 exp(1/4) exp(-gamma/8)")
        });
        return;
    }
    let a = &mut acc.hyperbola_far;
    let (sb, sg) = (beta.sinh(), gamma.sinh());
    let alpha = (2.0 * sb * sg).sqrt().asinh();
    let s2a = (2.0 * alpha).sinh();
    let a1 = (sb - sg) / s2a;
    let a2 = ((2.0 * t).sinh() - t.sinh()) / s2a;
    let angle = |x: f64| (0.5 - x * x).max(0.0).sqrt().atan2(x);
    let dtheta = (angle(a1) - angle(a2)).abs();
    a.bound(a1, 1.0 / (4.0 * sg), || at("a1 <= 1/(4 sinh gamma)"));
    a.bound(0.0, a2, || at("a2 >= 0"));
    a.bound(a2, 1.0 / (4.0 * t.sinh()), || at("a2 <= 1/(4 sinh t)"));
    a.bound(1.0 / (4.0 * t.sinh()), 1.0 / (4.0 * 1f64.sinh()), || at("1/(4 sinh t) <= 1/(4 sinh 1)"));
    a.bound(gamma / 2.0, t, || at("t >= gamma/2"));
    a.bound(dtheta, 2.0 * (a1 - a2).abs(), || at("|theta1-theta2| <= 2 |a1-a2|"));
    a.bound(dtheta, (-gamma / 2.0).exp(), || at("|theta1-theta2| <= exp(-gamma/2)"));
    a.bound(dtheta.powf(0.25), (-gamma / 8.0).exp(), || at("|theta1-theta2|^(1/4) <= exp(-gamma/8)"));
}

/// Envelopes of `rho`, `sigma` and of the closed-form `(beta, gamma)`, then the comparison step.
fn rhosigma(acc: &mut ChainAccs, s: f64, t: f64, beta: f64, gamma: f64) {
    let at = |what: &str| json!({ "s": s, "t": t, "beta": beta, "gamma": gamma, "step": what });
    if t >= 1.0 && s >= t {
        // exponential envelopes compared on the log scale, so margins are relative
        let a = &mut acc.rhosigma;
        let (lr, lg) = (rho(s).ln(), sigma(t).ln());
        let (ln3, ln5, ln10) = (3f64.ln(), 5f64.ln(), 10f64.ln());
        a.bound(4.0 * s - ln5, lr, || at("rho(s) >= e^(4s)/5"));
        a.bound(lr, 4.0 * s - ln3, || at("rho(s) <= e^(4s)/3"));
        a.bound(3.0 * t - ln3, lg, || at("sigma(t) >= e^(3t)/3"));
        a.bound(lg, 3.0 * t - LN_2, || at("sigma(t) <= e^(3t)/2"));
        let (lb, lgam) = (beta.sinh().ln(), gamma.sinh().ln());
        let (x, y) = (2.0 * s, 3.0 * t - 2.0 * s);
        a.bound(x - 0.5 * ln10, lb, || at("sinh beta >= e^(2s)/sqrt10"));
        a.bound(lb, x - 0.5 * ln3, || at("sinh beta <= e^(2s)/sqrt3"));
        a.bound(y - LN_2 - 0.5 * ln3, lgam, || at("sinh gamma >= e^(3t-2s)/(2 sqrt3)"));
        a.bound(lgam, y + 0.5 * (5.0f64 / 8.0).ln(), || at("sinh gamma <= sqrt(5/8) e^(3t-2s)"));
        a.bound((beta - 2.0 * s).abs(), 1.0, || at("|beta - 2s| <= 1"));
        if s <= 1.5 * t {
            a.bound((gamma + 2.0 * s - 3.0 * t).abs(), 1.0, || at("|gamma + 2s - 3t| <= 1"));
        }
    }
    if t >= 2.0 && s >= t && s <= 1.2 * t {
        let a = &mut acc.comparest;
        a.bound(4.0 * s - 3.0 * t - 2.0, beta - gamma, || at("beta - gamma >= 4s - 3t - 2"));
        a.bound(s - 2.0, 4.0 * s - 3.0 * t - 2.0, || at("4s - 3t - 2 >= s - 2"));
        a.bound(3.0 * t - 2.0 * s - 1.0, gamma, || at("gamma >= 3t - 2s - 1"));
        a.bound((s - 2.0) / 2.0, 3.0 * t - 2.0 * s - 1.0, || at("3t - 2s - 1 >= (s-2)/2"));
        let target = (0.125f64).exp() * (-s / 16.0).exp();
        a.bound((-(beta - gamma) / 8.0).exp(), target, || at("exp(-(beta-gamma)/8) <= e^(1/8) exp(-s/16)"));
        a.bound((-gamma / 8.0).exp(), target, || at("exp(-gamma/8) <= e^(1/8) exp(-s/16)"));
    }
}

pub(crate) fn scalar_chain_into(acc: &mut ChainAccs, beta: f64, gamma: f64) -> Result<(), CertifyError> {
    ChamberSp2::new(beta, gamma)?;
    let sol = solve_st(beta, gamma)?;
    circle(acc, beta, gamma, sol.s);
    hyperbola(acc, beta, gamma, sol.t);
    rhosigma(acc, sol.s, sol.t, beta, gamma);
    Ok(())
}

pub(crate) fn rhosigma_chain_into(acc: &mut ChainAccs, s: f64, t: f64) -> Result<(), CertifyError> {
    let c = solve_betagamma(s, t)?;
    rhosigma(acc, s, t, c.beta, c.gamma);
    Ok(())
}

/// Every scalar step of the circle, hyperbola, envelope and comparison links at
/// `(beta, gamma)` and at its coupled `(s, t)`; families outside their regime are
/// listed as not applicable.
pub fn scalar_chain_check(beta: f64, gamma: f64) -> Result<LemmaReport, CertifyError> {
    let mut acc = ChainAccs::default();
    scalar_chain_into(&mut acc, beta, gamma)?;
    Ok(acc.into_report("scalar_chain", json!({ "beta": beta, "gamma": gamma })))
}

/// The envelope and comparison families at `(s, t)`, through the closed-form `(beta, gamma)`.
pub fn rhosigma_chain_check(s: f64, t: f64) -> Result<LemmaReport, CertifyError> {
    let mut acc = ChainAccs::default();
    rhosigma_chain_into(&mut acc, s, t)?;
    Ok(acc.into_report("rhosigma_chain", json!({ "s": s, "t": t })))
}

/// Partial sums of `e^{-(t+j)/16}` against `e^{-t/16} / (1 - e^{-1/16})` for
/// `t_points` values of `t` in `[t_min, t_max]`, and every `n` in `n_values`.
pub fn limit_series_check(t_min: f64, t_max: f64) -> Result<LemmaReport, CertifyError> {
    limit_series(t_min, t_max, 11, &[0, 1, 2, 5, 10, 100, 1000, 10_000])
}

pub(crate) fn limit_series(t_min: f64, t_max: f64, t_points: usize, n_values: &[usize]) -> Result<LemmaReport, CertifyError> {
    if !(5.0 <= t_min && t_min <= t_max && t_max.is_finite()) {
        return Err(CertifyError::InvalidInput(format!("need 5 <= t_min <= t_max, got [{t_min}, {t_max}]")));
    }
    let q = (-1.0f64 / 16.0).exp();
    let factor = 1.0 / (1.0 - q);
    let n_max = n_values.iter().copied().max().unwrap_or(0);
    let mut bound_acc = MarginAccumulator::default();
    let mut closed_acc = MarginAccumulator::default();
    let mut tight_acc = MarginAccumulator::default();
    let mut steps_acc = MarginAccumulator::default();
    let points = t_points.max(1);
    for i in 0..points {
        let t = if points == 1 { t_min } else { t_min + (t_max - t_min) * i as f64 / (points - 1) as f64 };
        let head = (-t / 16.0).exp();
        let bound = factor * head;
        let mut partial = 0.0;
        let mut comp = 0.0;
        for j in 0..=n_max {
            // compensated summation keeps the closed-form comparison at rounding level
            let y = (-(t + j as f64) / 16.0).exp() - comp;
            let next = partial + y;
            comp = (next - partial) - y;
            partial = next;
            if n_values.contains(&j) {
                let loc = || json!({ "t": t, "n": j });
                bound_acc.bound(partial, bound, loc);
                let closed = head * (1.0 - q.powi(j as i32 + 1)) * factor;
                closed_acc.bound((partial - closed).abs() / closed, 1e-12, loc);
                if j == n_max && n_max >= 1000 {
                    tight_acc.bound(1.0 - partial / bound, 1e-10, loc);
                }
            }
            if j < 4 {
                // the chain uses D(2u,u) -> D(2u+2, u+1), admissible when u >= 5
                let u = t + j as f64;
                steps_acc.bound(u + 1.0, 1.2 * u, || json!({ "t": t, "j": j, "step": "u + 1 <= 6u/5" }));
            }
        }
    }
    let mut short = MarginAccumulator::default();
    for i in 0..=50 {
        let t = 5.0 * i as f64 / 50.0;
        short.bound(2.0, 2.0 * (5.0f64 / 16.0).exp() * (-t / 16.0).exp(), || json!({ "t": t, "step": "2 <= 2 e^(5/16) e^(-t/16)" }));
    }
    Ok(LemmaReport::combine(
        "limit",
        json!({ "t_min": t_min, "t_max": t_max, "t_points": points, "n_values": n_values }),
        vec![
            bound_acc.into_report("partial_sum_bound", json!({})),
            closed_acc.into_report("closed_form", json!({})),
            tight_acc.into_report("tightness", json!({})),
            steps_acc.into_report("step_admissible", json!({})),
            short.into_report("short_range", json!({ "t": [0.0, 5.0] })),
        ],
    ))
}

/// Each ledger entry against an independently spelled formula.
pub(crate) fn verify_ledger(l: &ConstantsLedger) -> LemmaReport {
    let mut acc = MarginAccumulator::default();
    let mut eq = |name: &str, stored: f64, recomputed: f64| {
        acc.bound((stored - recomputed).abs(), LEDGER_TOL * stored.abs().max(1.0), || {
            json!({ "entry": name, "stored": stored, "recomputed": recomputed })
        });
    };
    let quarter = E.powf(0.25);
    eq("c_tilde", l.c_tilde, l.c_hat * 8f64.sqrt().sqrt());
    eq("C3", l.c3, 32f64.sqrt());
    eq("C4", l.c4, if l.c_tilde > 2.0 * quarter { l.c_tilde } else { 2.0 * quarter });
    eq("C5", l.c5, E.powf(0.125) * l.c3 + E.powf(0.125) * l.c4);
    eq("C5p", l.c5p, -l.c5 / (-1.0f64 / 16.0).exp_m1());
    eq("C6", l.c6, if l.c5p > 2.0 * E.powf(0.3125) { l.c5p } else { 2.0 * E.powf(0.3125) });
    eq("C1_sp2 (as written)", l.c1_sp2, f64::max(l.c3 + l.c6, l.c4 + l.c6));
    eq("C1_sp2 (shared C6)", l.c1_sp2, l.c3.max(l.c4) + l.c6);
    eq("C2_sp2_beta", l.c2_sp2_beta, 0.015625);
    eq("C2_sp2_norm", l.c2_sp2_norm, l.c2_sp2_beta / SQRT_2);
    eq("C1_sl3", l.c1_sl3, 8.0 + 112.0);
    eq("C2_sl3", l.c2_sl3, 1.0 / 12.0);
    // geometric series cross-check of C5p / C5
    let partial: f64 = (0..4000).rev().map(|j| (-(j as f64) / 16.0).exp()).sum();
    eq("C5p / C5 (geometric series)", l.c5p / l.c5, partial);
    // the series bound of the limit step must dominate 2 e^{5/16} only through C6
    acc.bound(2.0 * E.powf(0.3125), l.c6, || json!({ "entry": "C6 >= 2 e^(5/16)" }));
    acc.bound(l.c5p, l.c6, || json!({ "entry": "C6 >= C5p" }));
    acc.bound(2.0, l.c1_sp2, || json!({ "entry": "C1_sp2 >= 2" }));
    acc.into_report("constants", json!({ "c_hat": l.c_hat, "tol": LEDGER_TOL }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::build_ledger;

    #[test]
    fn spec_examples() {
        let r = scalar_chain_check(9.0, 1.0).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert!(r.checks > 10);
        let r = scalar_chain_check(2.0, 1.0).unwrap();
        assert!(r.passed());
        let r = scalar_chain_check(3.0, 3.0).unwrap();
        assert!(r.notes.iter().any(|n| n.contains("circle_far")), "{:?}", r.notes);
        assert!(r.passed());
        assert!(scalar_chain_check(1.0, 2.0).is_err());
    }

    #[test]
    fn envelopes_at_one() {
        let r = rhosigma_chain_check(1.0, 1.0).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert!((rho(1.0) - (2f64.sinh().powi(2) + 1f64.sinh().powi(2))).abs() < 1e-14);
        assert!(rho(1.0) >= E.powi(4) / 5.0 && rho(1.0) <= E.powi(4) / 3.0);
        assert!(sigma(1.0) >= E.powi(3) / 3.0 && sigma(1.0) <= E.powi(3) / 2.0);
    }

    #[test]
    fn limit_series_examples() {
        let r = limit_series_check(5.0, 40.0).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert!(limit_series_check(4.0, 10.0).is_err());
        // the tail vanishes: the bound is attained in the limit
        let q = (-1.0f64 / 16.0).exp();
        let partial: f64 = (0..=10_000).map(|j| (-(5.0 + j as f64) / 16.0).exp()).sum();
        assert!((partial / ((-5.0f64 / 16.0).exp() / (1.0 - q)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ledger_verification_passes_and_catches_tampering() {
        let mut l = build_ledger(1.0).unwrap();
        assert!(verify_ledger(&l).passed());
        l.c5 *= 1.0 + 1e-12;
        assert!(!verify_ledger(&l).passed());
    }
}
