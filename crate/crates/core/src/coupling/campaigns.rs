//! Grid campaigns for the coupling solvers and the witness constructors.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    circle_witness, hyperbola_witness, sl3_witness, solve_betagamma, solve_st, CouplingError, Witness,
    EQUATION_TOL, WITNESS_TOL,
};
use crate::report::{LemmaReport, MarginAccumulator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BetagammaGrid {
    /// Round trip over `0 <= t <= s <= st_max`.
    pub st_max: f64,
    pub st_step: f64,
    /// Residuals, lower bounds and monotonicity over `0 <= gamma <= beta <= bg_max`.
    pub bg_max: f64,
    pub bg_step: f64,
    /// Window bounds over `1 <= t <= s <= 1.5 t`, `t <= window_t_max`.
    pub window_t_max: f64,
    pub window_step: f64,
    pub tol: f64,
}

impl Default for BetagammaGrid {
    fn default() -> Self {
        Self { st_max: 15.0, st_step: 0.1, bg_max: 20.0, bg_step: 0.1, window_t_max: 15.0, window_step: 0.05, tol: 1e-10 }
    }
}

/// `0, h, 2h, ...` up to `max` inclusive (within rounding).
fn ladder(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

fn failure(acc: &mut MarginAccumulator, loc: serde_json::Value) {
    acc.margin(f64::NEG_INFINITY, true, || loc);
}

pub fn betagamma_campaign(grid: &BetagammaGrid) -> LemmaReport {
    let st = ladder(grid.st_max, grid.st_step);
    let round_trip: Vec<MarginAccumulator> = st
        .par_iter()
        .map(|&s| {
            let mut acc = MarginAccumulator::default();
            for &t in st.iter().take_while(|&&t| t <= s) {
                let loc = || json!({ "s": s, "t": t });
                match solve_betagamma(s, t).and_then(|c| solve_st(c.beta, c.gamma)) {
                    Ok(back) => acc.bound((back.s - s).abs().max((back.t - t).abs()), grid.tol, loc),
                    Err(_) => failure(&mut acc, loc()),
                }
            }
            acc
        })
        .collect();

    let bg = ladder(grid.bg_max, grid.bg_step);
    // one row per beta: residuals, lower bounds, and monotonicity in gamma
    let rows: Vec<(Vec<Option<(f64, f64)>>, [MarginAccumulator; 3])> = bg
        .par_iter()
        .map(|&beta| {
            let mut residual = MarginAccumulator::default();
            let mut lower = MarginAccumulator::default();
            let mut mono = MarginAccumulator::default();
            let mut row = Vec::new();
            let mut prev: Option<(f64, f64)> = None;
            for &gamma in bg.iter().take_while(|&&g| g <= beta) {
                let loc = || json!({ "beta": beta, "gamma": gamma });
                match solve_st(beta, gamma) {
                    Ok(sol) => {
                        residual.bound(sol.residuals[0].max(sol.residuals[1]), EQUATION_TOL, loc);
                        lower.bound(beta / 4.0, sol.s, || json!({ "beta": beta, "gamma": gamma, "bound": "s >= beta/4" }));
                        lower.bound(gamma / 2.0, sol.t, || json!({ "beta": beta, "gamma": gamma, "bound": "t >= gamma/2" }));
                        if let Some((ps, pt)) = prev {
                            mono.bound(ps, sol.s, || json!({ "beta": beta, "gamma": gamma, "in": "gamma", "of": "s" }));
                            mono.bound(pt, sol.t, || json!({ "beta": beta, "gamma": gamma, "in": "gamma", "of": "t" }));
                        }
                        prev = Some((sol.s, sol.t));
                        row.push(Some((sol.s, sol.t)));
                    }
                    Err(_) => {
                        failure(&mut residual, loc());
                        row.push(None);
                    }
                }
            }
            (row, [residual, lower, mono])
        })
        .collect();
    let mut merged: [MarginAccumulator; 3] = Default::default();
    let mut table = Vec::with_capacity(rows.len());
    for (row, accs) in rows {
        for (m, a) in merged.iter_mut().zip(accs) {
            m.merge(a);
        }
        table.push(row);
    }
    let [residual, lower, mut mono] = merged;
    // monotonicity in beta for fixed gamma: column j of consecutive rows
    for i in 1..table.len() {
        for j in 0..table[i - 1].len() {
            if let (Some((ps, pt)), Some((s, t))) = (table[i - 1][j], table[i][j]) {
                let loc = || json!({ "beta": bg[i], "gamma": bg[j], "in": "beta" });
                mono.bound(ps, s, loc);
                mono.bound(pt, t, loc);
            }
        }
    }

    let ts: Vec<f64> = ladder(grid.window_t_max, grid.window_step).into_iter().filter(|&t| t >= 1.0).collect();
    let window: Vec<MarginAccumulator> = ts
        .par_iter()
        .map(|&t| {
            let mut acc = MarginAccumulator::default();
            let n = ((0.5 * t) / grid.window_step + 1e-9).floor() as usize;
            for k in 0..=n {
                let s = (t + k as f64 * grid.window_step).min(1.5 * t);
                let loc = || json!({ "s": s, "t": t });
                match solve_betagamma(s, t) {
                    Ok(c) => {
                        acc.bound((c.beta - 2.0 * s).abs(), 1.0, || json!({ "s": s, "t": t, "bound": "|beta - 2s| <= 1" }));
                        acc.bound((c.gamma + 2.0 * s - 3.0 * t).abs(), 1.0, || {
                            json!({ "s": s, "t": t, "bound": "|gamma + 2s - 3t| <= 1" })
                        });
                    }
                    Err(_) => failure(&mut acc, loc()),
                }
            }
            acc
        })
        .collect();

    LemmaReport::combine(
        "betagamma",
        json!(grid),
        vec![
            MarginAccumulator::merged(round_trip).into_report("round_trip", json!({ "st_max": grid.st_max, "step": grid.st_step })),
            residual.into_report("equation_residuals", json!({ "bg_max": grid.bg_max, "step": grid.bg_step })),
            lower.into_report("lower_bounds", json!({ "bg_max": grid.bg_max, "step": grid.bg_step })),
            mono.into_report("monotonicity", json!({ "bg_max": grid.bg_max, "step": grid.bg_step })),
            MarginAccumulator::merged(window).into_report("window_bounds", json!({ "t_max": grid.window_t_max, "step": grid.window_step })),
        ],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WitnessGrid {
    /// Circle witnesses on `0 <= gamma <= beta <= circle_max`, origin excluded.
    pub circle_max: f64,
    pub circle_step: f64,
    /// Hyperbola witnesses on `2 <= gamma <= beta <= hyperbola_max`.
    pub hyperbola_max: f64,
    pub hyperbola_step: f64,
    /// SL(3,R) witnesses for `r` in `(0, sl3_r_max]` and `theta` in `[0, pi]`.
    pub sl3_r_max: f64,
    pub sl3_r_points: usize,
    pub sl3_theta_points: usize,
}

impl Default for WitnessGrid {
    fn default() -> Self {
        Self {
            circle_max: 16.0,
            circle_step: 0.25,
            hyperbola_max: 16.0,
            hyperbola_step: 0.25,
            sl3_r_max: 10.0,
            sl3_r_points: 100,
            sl3_theta_points: 64,
        }
    }
}

fn record(acc: &mut MarginAccumulator, built: Result<Witness, CouplingError>, loc: serde_json::Value) {
    match built {
        Ok(w) => {
            acc.bound(w.membership_residual, WITNESS_TOL, || loc.clone());
            let eq = w.equation_residuals.iter().copied().fold(0.0, f64::max);
            acc.bound(eq, EQUATION_TOL, || json!({ "at": loc, "equations": w.equation_residuals }));
        }
        Err(CouplingError::WitnessResidual { residual, .. }) => {
            acc.margin(WITNESS_TOL - residual, true, || loc)
        }
        Err(e) => acc.margin(f64::NEG_INFINITY, true, || json!({ "at": loc, "error": e.to_string() })),
    }
}

pub fn witnesses_campaign(grid: &WitnessGrid) -> LemmaReport {
    let cb = ladder(grid.circle_max, grid.circle_step);
    let circle: Vec<MarginAccumulator> = cb
        .par_iter()
        .map(|&beta| {
            let mut acc = MarginAccumulator::default();
            for &gamma in cb.iter().take_while(|&&g| g <= beta) {
                if beta == 0.0 {
                    continue;
                }
                record(&mut acc, circle_witness(beta, gamma), json!({ "beta": beta, "gamma": gamma }));
            }
            acc
        })
        .collect();

    let hb: Vec<f64> = ladder(grid.hyperbola_max, grid.hyperbola_step).into_iter().filter(|&x| x >= 2.0).collect();
    let hyperbola: Vec<MarginAccumulator> = hb
        .par_iter()
        .map(|&beta| {
            let mut acc = MarginAccumulator::default();
            for &gamma in hb.iter().take_while(|&&g| g <= beta) {
                record(&mut acc, hyperbola_witness(beta, gamma), json!({ "beta": beta, "gamma": gamma }));
            }
            acc
        })
        .collect();

    let m = grid.sl3_theta_points.max(2);
    let sl3: Vec<MarginAccumulator> = (1..=grid.sl3_r_points)
        .into_par_iter()
        .map(|i| {
            let r = grid.sl3_r_max * i as f64 / grid.sl3_r_points as f64;
            let mut acc = MarginAccumulator::default();
            for j in 0..m {
                let theta = PI * j as f64 / (m - 1) as f64;
                record(&mut acc, sl3_witness(r, theta), json!({ "r": r, "theta": theta }));
            }
            acc
        })
        .collect();

    LemmaReport::combine(
        "witnesses",
        json!(grid),
        vec![
            MarginAccumulator::merged(circle).into_report("circle", json!({ "max": grid.circle_max, "step": grid.circle_step })),
            MarginAccumulator::merged(hyperbola)
                .into_report("hyperbola", json!({ "gamma_min": 2.0, "max": grid.hyperbola_max, "step": grid.hyperbola_step })),
            MarginAccumulator::merged(sl3).into_report(
                "sl3",
                json!({ "r_max": grid.sl3_r_max, "r_points": grid.sl3_r_points, "theta_points": grid.sl3_theta_points }),
            ),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_grids_pass() {
        let bg = betagamma_campaign(&BetagammaGrid {
            st_max: 15.0,
            st_step: 1.5,
            bg_max: 20.0,
            bg_step: 2.0,
            window_t_max: 15.0,
            window_step: 1.0,
            tol: 1e-10,
        });
        assert!(bg.passed(), "{bg:#?}");
        let w = witnesses_campaign(&WitnessGrid {
            circle_step: 2.0,
            hyperbola_step: 2.0,
            sl3_r_points: 5,
            sl3_theta_points: 7,
            ..WitnessGrid::default()
        });
        assert!(w.passed(), "{w:#?}");
    }

    #[test]
    fn ladder_includes_endpoint() {
        assert_eq!(ladder(1.0, 0.1).len(), 11);
        assert_eq!(*ladder(15.0, 0.05).last().unwrap(), 300.0 * 0.05);
    }
}
