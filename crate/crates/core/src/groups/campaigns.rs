//! Chamber recovery from random polar products.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    dmat_sp2, random_k_with, random_so3_with, rng_from_seed, sl3_chamber, sl3_dmat, sp2_chamber, ChamberSl3,
    ChamberSp2, RNG_ALGORITHM,
};
use crate::report::{LemmaReport, MarginAccumulator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KakGrid {
    /// Random products per group.
    pub samples: usize,
    /// Chamber coordinates are drawn uniformly from `[0, chamber_max]`.
    pub chamber_max: f64,
    pub tol: f64,
}

impl Default for KakGrid {
    fn default() -> Self {
        Self { samples: 10_000, chamber_max: 12.0, tol: 1e-6 }
    }
}

const SHARD: usize = 256;

/// `g = k1 D k2` with Haar `k1, k2`; the recovered chamber point must match `D`.
pub fn kak_campaign(grid: &KakGrid, seed: u64) -> LemmaReport {
    let shards = grid.samples.div_ceil(SHARD);
    let run = |sl3: bool| -> MarginAccumulator {
        let parts: Vec<MarginAccumulator> = (0..shards)
            .into_par_iter()
            .map(|shard| {
                let mut rng = rng_from_seed(seed ^ ((shard as u64) << 20) ^ if sl3 { 1 << 63 } else { 0 });
                let mut acc = MarginAccumulator::default();
                let end = ((shard + 1) * SHARD).min(grid.samples);
                for idx in shard * SHARD..end {
                    let a = rng.random::<f64>() * grid.chamber_max;
                    let b = rng.random::<f64>() * grid.chamber_max;
                    let err = if sl3 {
                        let target = ChamberSl3 { s: a, t: b };
                        let g = random_so3_with(&mut rng).mul(&sl3_dmat(target)).mul(&random_so3_with(&mut rng));
                        sl3_chamber(&g).map(|c| (c.s - a).abs().max((c.t - b).abs()))
                    } else {
                        let target = ChamberSp2 { beta: a.max(b), gamma: a.min(b) };
                        let g = random_k_with(&mut rng).mul(&dmat_sp2(target)).mul(&random_k_with(&mut rng));
                        sp2_chamber(&g).map(|c| (c.beta - target.beta).abs().max((c.gamma - target.gamma).abs()))
                    };
                    let loc = || json!({ "sample": idx, "a": a, "b": b });
                    match err {
                        Ok(e) => acc.bound(e, grid.tol, loc),
                        Err(_) => acc.margin(f64::NEG_INFINITY, true, loc),
                    }
                }
                acc
            })
            .collect();
        MarginAccumulator::merged(parts)
    };
    LemmaReport::combine(
        "kakeqs",
        json!({ "grid": grid, "seed": seed, "rng": RNG_ALGORITHM }),
        vec![run(false).into_report("sp2", json!(grid)), run(true).into_report("sl3", json!(grid))],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaign_passes_and_is_deterministic() {
        let grid = KakGrid { samples: 600, ..KakGrid::default() };
        let a = kak_campaign(&grid, 7);
        assert!(a.passed(), "{a:?}");
        assert_eq!(a.checks, 1200);
        assert_eq!(a, kak_campaign(&grid, 7));
    }
}
