//! Dispatch of the named verification campaigns, with default and reduced grids.

use std::time::Instant;

use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::chains::{limit_series, rhosigma_chain_into, scalar_chain_into, ChainAccs};
use super::{build_ledger_with, sl3_decay_bound, sp2_decay_bound, CertifyError};
use crate::coupling::campaigns::{betagamma_campaign, witnesses_campaign, BetagammaGrid, WitnessGrid};
use crate::gelfand::campaigns::{hoelder_campaign, HoelderGrid};
use crate::groups::campaigns::{kak_campaign, KakGrid};
use crate::orthopoly::campaigns::{
    hs_campaign, legendre_oracle_campaign, lpestimates_campaign, spherical_equation_campaign, HsGrid,
    LegendreOracleGrid, LpEstimatesGrid, SphericalEqGrid,
};
use crate::orthopoly::hs_constant_estimate;
use crate::report::{LemmaReport, MarginAccumulator};

/// Every id accepted by [`run_campaign`], in execution order; `all` runs the others.
pub const LEMMA_IDS: &[&str] = &[
    "kakeqs",
    "legendre_oracle",
    "lpestimates",
    "hs",
    "hoelder",
    "spherical_eq",
    "betagamma",
    "witnesses",
    "scalar_chains",
    "limit",
    "constants",
    "all",
];

/// Where the weighted-Jacobi constant comes from: `c_hat` if given, else a fresh
/// estimate on the `hs_*` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CHatSource {
    pub c_hat: Option<f64>,
    pub hs_n_max: usize,
    pub hs_beta_max: u32,
    pub hs_theta_grid: usize,
}

impl Default for CHatSource {
    fn default() -> Self {
        Self { c_hat: None, hs_n_max: 200, hs_beta_max: 200, hs_theta_grid: 4096 }
    }
}

impl CHatSource {
    fn resolve(&self) -> (f64, String) {
        match self.c_hat {
            Some(c) => (c, "supplied in the grid spec".into()),
            None => {
                let est = hs_constant_estimate(self.hs_n_max, self.hs_beta_max, self.hs_theta_grid);
                (est.c_hat, provenance(&est))
            }
        }
    }
}

fn provenance(est: &crate::orthopoly::HsConstantEstimate) -> String {
    format!(
        "estimated on n <= {}, beta <= {}, {} angle nodes; max at n = {}, beta = {}, theta = {}",
        est.n_max, est.beta_max, est.theta_grid_size, est.argmax_n, est.argmax_beta, est.argmax_theta
    )
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct HoelderSpec {
    #[serde(flatten)]
    grid: HoelderGrid,
    #[serde(flatten)]
    source: CHatSource,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstantsGrid {
    #[serde(flatten)]
    pub source: CHatSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalarChainGrid {
    /// `(beta, gamma)` over `0 <= gamma <= beta <= bg_max`.
    pub bg_max: f64,
    pub bg_step: f64,
    /// `(s, t)` over `0 <= t <= s <= st_max` for the envelope families.
    pub st_max: f64,
    pub st_step: f64,
}

impl Default for ScalarChainGrid {
    fn default() -> Self {
        Self { bg_max: 40.0, bg_step: 0.25, st_max: 20.0, st_step: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimitGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub n_values: Vec<usize>,
}

impl Default for LimitGrid {
    fn default() -> Self {
        Self { t_min: 5.0, t_max: 50.0, t_points: 91, n_values: vec![0, 1, 2, 5, 10, 100, 1000, 10_000] }
    }
}

fn points(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

fn scalar_chains(grid: &ScalarChainGrid) -> LemmaReport {
    let bg = points(grid.bg_max, grid.bg_step);
    let mut acc = bg
        .par_iter()
        .map(|&beta| {
            let mut acc = ChainAccs::default();
            for &gamma in bg.iter().take_while(|&&g| g <= beta) {
                if let Err(e) = scalar_chain_into(&mut acc, beta, gamma) {
                    acc.fail(json!({ "beta": beta, "gamma": gamma, "error": e.to_string() }));
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(ChainAccs::default(), |mut a, b| {
            a.merge(b);
            a
        });
    let st = points(grid.st_max, grid.st_step);
    let rows: Vec<ChainAccs> = st
        .par_iter()
        .map(|&s| {
            let mut acc = ChainAccs::default();
            for &t in st.iter().take_while(|&&t| t <= s) {
                if let Err(e) = rhosigma_chain_into(&mut acc, s, t) {
                    acc.fail(json!({ "s": s, "t": t, "error": e.to_string() }));
                }
            }
            acc
        })
        .collect();
    for r in rows {
        acc.merge(r);
    }
    acc.into_report("scalar_chains", json!(grid))
}

fn limit(grid: &LimitGrid) -> Result<LemmaReport, CertifyError> {
    limit_series(grid.t_min, grid.t_max, grid.t_points, &grid.n_values)
}

fn constants(grid: &ConstantsGrid) -> Result<LemmaReport, CertifyError> {
    let (c_hat, prov) = grid.source.resolve();
    let ledger = build_ledger_with(c_hat, prov.clone())?;
    let table = ledger.verify();
    let mut acc = MarginAccumulator::default();
    let exact = |acc: &mut MarginAccumulator, what: &str, got: f64, want: f64| {
        acc.bound((got - want).abs(), 0.0, || json!({ "check": what, "got": got, "want": want }));
    };
    let sl3 = sl3_decay_bound(0.0, 0.0, 1.0)?;
    exact(&mut acc, "SL(3) certificate at the origin", sl3.final_bound, 120.0);
    exact(&mut acc, "SL(3) decay rate", sl3.envelope.c2, 1.0 / 12.0);
    let sp2 = sp2_decay_bound(0.0, 0.0, 1.0, &ledger)?;
    exact(&mut acc, "Sp(2) certificate at the origin", sp2.final_bound, ledger.c1_sp2);
    exact(&mut acc, "Sp(2) decay rate", sp2.envelope.c2, 1.0 / 64.0);
    Ok(LemmaReport::combine(
        "constants",
        json!({ "c_hat": c_hat, "c_hat_provenance": prov }),
        vec![table, acc.into_report("certificates_at_origin", json!({}))],
    ))
}

fn parse<T: DeserializeOwned + Serialize + Default>(id: &str, spec: Option<&Value>) -> Result<T, CertifyError> {
    let Some(spec) = spec else { return Ok(T::default()) };
    let invalid = |message: String| CertifyError::InvalidGrid { lemma: id.into(), message };
    let obj = spec.as_object().ok_or_else(|| invalid("grid spec must be a JSON object".into()))?;
    // reject misspelt keys instead of silently running the default grid
    let known = serde_json::to_value(T::default()).map_err(|e| invalid(e.to_string()))?;
    if let Some(known) = known.as_object() {
        if let Some(k) = obj.keys().find(|k| !known.contains_key(*k)) {
            return Err(invalid(format!("unknown field `{k}`; expected one of {:?}", known.keys().collect::<Vec<_>>())));
        }
    }
    serde_json::from_value(spec.clone()).map_err(|e| invalid(e.to_string()))
}

fn dispatch(id: &str, spec: Option<&Value>, seed: u64) -> Result<LemmaReport, CertifyError> {
    Ok(match id {
        "kakeqs" => kak_campaign(&parse::<KakGrid>(id, spec)?, seed),
        "legendre_oracle" => legendre_oracle_campaign(&parse::<LegendreOracleGrid>(id, spec)?),
        "lpestimates" => lpestimates_campaign(&parse::<LpEstimatesGrid>(id, spec)?),
        "hs" => {
            let (est, report) = hs_campaign(&parse::<HsGrid>(id, spec)?);
            report.with_note(format!("c_hat = {} ({})", est.c_hat, provenance(&est)))
        }
        "hoelder" => {
            let s = parse::<HoelderSpec>(id, spec)?;
            let (c_hat, prov) = s.source.resolve();
            let ledger = build_ledger_with(c_hat, prov.clone())?;
            hoelder_campaign(&s.grid, ledger.c_tilde, seed).with_note(format!("c_hat = {c_hat} ({prov})"))
        }
        "spherical_eq" => spherical_equation_campaign(&parse::<SphericalEqGrid>(id, spec)?, seed),
        "betagamma" => betagamma_campaign(&parse::<BetagammaGrid>(id, spec)?),
        "witnesses" => witnesses_campaign(&parse::<WitnessGrid>(id, spec)?),
        "scalar_chains" => scalar_chains(&parse::<ScalarChainGrid>(id, spec)?),
        "limit" => limit(&parse::<LimitGrid>(id, spec)?)?,
        "constants" => constants(&parse::<ConstantsGrid>(id, spec)?)?,
        "all" => {
            let grids = match spec {
                None => Map::new(),
                Some(Value::Object(m)) => m.clone(),
                Some(_) => return Err(CertifyError::InvalidGrid { lemma: id.into(), message: "expected an object keyed by lemma id".into() }),
            };
            run_all_with(&grids, seed)?.combined
        }
        other => return Err(CertifyError::UnknownLemma(other.into())),
    })
}

/// Runs one campaign; `grid` overrides fields of the default grid, `None` means the default.
/// The report's `wall_time_ms` is the only field that varies between identical runs.
pub fn run_campaign(lemma_id: &str, grid: Option<&Value>, seed: u64) -> Result<LemmaReport, CertifyError> {
    let start = Instant::now();
    let mut report = dispatch(lemma_id, grid, seed)?;
    report.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    Ok(report)
}

/// The grid `run_campaign` uses when given none.
pub fn default_grid(lemma_id: &str) -> Result<Value, CertifyError> {
    let v = match lemma_id {
        "kakeqs" => json!(KakGrid::default()),
        "legendre_oracle" => json!(LegendreOracleGrid::default()),
        "lpestimates" => json!(LpEstimatesGrid::default()),
        "hs" => json!(HsGrid::default()),
        "hoelder" => json!(HoelderSpec::default()),
        "spherical_eq" => json!(SphericalEqGrid::default()),
        "betagamma" => json!(BetagammaGrid::default()),
        "witnesses" => json!(WitnessGrid::default()),
        "scalar_chains" => json!(ScalarChainGrid::default()),
        "limit" => json!(LimitGrid::default()),
        "constants" => json!(ConstantsGrid::default()),
        "all" => {
            let mut m = Map::new();
            for id in &LEMMA_IDS[..LEMMA_IDS.len() - 1] {
                m.insert((*id).into(), default_grid(id)?);
            }
            Value::Object(m)
        }
        other => return Err(CertifyError::UnknownLemma(other.into())),
    };
    Ok(v)
}

/// A reduced grid that exercises every check of the campaign in well under a second or two.
pub fn quick_grid(lemma_id: &str) -> Result<Value, CertifyError> {
    let v = match lemma_id {
        "kakeqs" => json!(KakGrid { samples: 1000, ..KakGrid::default() }),
        "legendre_oracle" => json!(LegendreOracleGrid { n_max: 30, x_points: 50, ..LegendreOracleGrid::default() }),
        "lpestimates" => json!(LpEstimatesGrid { n_max: 300, points: 80 }),
        "hs" => json!(HsGrid { n_max: 40, beta_max: 40, theta_grid: 512, pq_max: 80, ..HsGrid::default() }),
        "hoelder" => json!(HoelderSpec {
            grid: HoelderGrid { pq_max: 40, theta_points: 48, random_multipliers: 4, random_degree: 12, r_points: 64 },
            source: quick_source(),
        }),
        "spherical_eq" => json!(SphericalEqGrid { n_max: 12, pairs: 16, nodes: 256, ..SphericalEqGrid::default() }),
        "betagamma" => json!(BetagammaGrid { st_step: 0.5, bg_step: 0.5, window_step: 0.25, ..BetagammaGrid::default() }),
        "witnesses" => json!(WitnessGrid {
            circle_step: 1.0,
            hyperbola_step: 1.0,
            sl3_r_points: 20,
            sl3_theta_points: 17,
            ..WitnessGrid::default()
        }),
        "scalar_chains" => json!(ScalarChainGrid { bg_step: 1.0, st_step: 0.25, ..ScalarChainGrid::default() }),
        "limit" => json!(LimitGrid { t_points: 10, ..LimitGrid::default() }),
        "constants" => json!(ConstantsGrid { source: quick_source() }),
        "all" => {
            let mut m = Map::new();
            for id in &LEMMA_IDS[..LEMMA_IDS.len() - 1] {
                m.insert((*id).into(), quick_grid(id)?);
            }
            Value::Object(m)
        }
        other => return Err(CertifyError::UnknownLemma(other.into())),
    };
    Ok(v)
}

fn quick_source() -> CHatSource {
    CHatSource { hs_n_max: 40, hs_beta_max: 40, hs_theta_grid: 512, ..CHatSource::default() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllReport {
    pub parts: Vec<LemmaReport>,
    pub combined: LemmaReport,
    /// The estimate from the `hs` campaign, fed to `hoelder` and `constants`.
    pub c_hat: f64,
}

/// Every campaign on its default (or reduced) grid; the `hs` estimate of `c_hat`
/// is passed on to the campaigns that depend on it.
pub fn run_all(quick: bool, seed: u64) -> Result<AllReport, CertifyError> {
    let grids = if quick { quick_grid("all")? } else { default_grid("all")? };
    match grids {
        Value::Object(m) => run_all_with(&m, seed),
        _ => unreachable!("grids for `all` are an object"),
    }
}

fn run_all_with(grids: &Map<String, Value>, seed: u64) -> Result<AllReport, CertifyError> {
    if let Some(k) = grids.keys().find(|k| !LEMMA_IDS[..LEMMA_IDS.len() - 1].contains(&k.as_str())) {
        return Err(CertifyError::InvalidGrid { lemma: "all".into(), message: format!("unknown lemma id `{k}`") });
    }
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut c_hat = None;
    for id in &LEMMA_IDS[..LEMMA_IDS.len() - 1] {
        let mut spec = grids.get(*id).cloned();
        if *id == "hs" {
            let g = parse::<HsGrid>(id, spec.as_ref())?;
            let part_start = Instant::now();
            let (est, report) = hs_campaign(&g);
            let mut report = report.with_note(format!("c_hat = {} ({})", est.c_hat, provenance(&est)));
            report.wall_time_ms = Some(part_start.elapsed().as_millis() as u64);
            c_hat = Some((est.c_hat, provenance(&est)));
            parts.push(report);
            continue;
        }
        if let (Some((c, prov)), "hoelder" | "constants") = (&c_hat, *id) {
            let mut m = match spec {
                Some(Value::Object(m)) => m,
                Some(_) => return Err(CertifyError::InvalidGrid { lemma: (*id).into(), message: "grid spec must be a JSON object".into() }),
                None => Map::new(),
            };
            if m.get("c_hat").is_none_or(Value::is_null) {
                m.insert("c_hat".into(), json!(c));
                parts.push(run_campaign(id, Some(&Value::Object(m)), seed)?.with_note(format!("c_hat from the hs campaign: {prov}")));
                continue;
            }
            spec = Some(Value::Object(m));
        }
        parts.push(run_campaign(id, spec.as_ref(), seed)?);
    }
    let mut combined = LemmaReport::combine("all", json!(grids), parts.clone());
    combined.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    Ok(AllReport { parts, combined, c_hat: c_hat.map(|c| c.0).unwrap_or(f64::NAN) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_lemma_and_bad_grids() {
        assert!(matches!(run_campaign("bogus", None, 0), Err(CertifyError::UnknownLemma(_))));
        assert!(matches!(default_grid("bogus"), Err(CertifyError::UnknownLemma(_))));
        let bad = json!({ "t_mni": 5.0 });
        assert!(matches!(run_campaign("limit", Some(&bad), 0), Err(CertifyError::InvalidGrid { .. })));
        let bad = json!({ "t_min": 1.0 });
        assert!(matches!(run_campaign("limit", Some(&bad), 0), Err(CertifyError::InvalidInput(_))));
        assert!(matches!(run_campaign("limit", Some(&json!([1])), 0), Err(CertifyError::InvalidGrid { .. })));
    }

    #[test]
    fn every_default_grid_parses_back() {
        for id in LEMMA_IDS {
            let d = default_grid(id).unwrap();
            let q = quick_grid(id).unwrap();
            assert!(d.is_object() && q.is_object(), "{id}");
        }
        let spec = default_grid("hoelder").unwrap();
        assert_eq!(parse::<HoelderSpec>("hoelder", Some(&spec)).unwrap(), HoelderSpec::default());
    }

    #[test]
    fn quick_light_campaigns_pass() {
        for id in ["scalar_chains", "limit", "betagamma", "witnesses", "kakeqs"] {
            let r = run_campaign(id, Some(&quick_grid(id).unwrap()), 7).unwrap();
            assert!(r.passed(), "{id}: {r:#?}");
            assert!(r.wall_time_ms.is_some());
        }
        let r = run_campaign("constants", Some(&json!({ "c_hat": 1.0 })), 0).unwrap();
        assert!(r.passed(), "{r:#?}");
    }

    #[test]
    fn scalar_chain_default_grid_covers_every_family() {
        let r = run_campaign("scalar_chains", Some(&json!({ "bg_step": 2.0, "st_step": 1.0 })), 0).unwrap();
        assert!(r.passed());
        assert!(r.notes.is_empty(), "{:?}", r.notes);
    }
}
