use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamcore::multiset::multisets;
use crate::kamlab::aa::RadiiWindow;
use crate::kamlab::frequency::FrequencyMap;
use crate::seed::derived_rng;

const BLOCK: u64 = 1024;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SmallDivisorConfig {
    pub window: RadiiWindow,
    /// Number of exterior modes in each divisor.
    pub d: u32,
    /// `k` ranges over `[-kBox, kBox]^S \ {0}` unless `kList` is given.
    pub k_box: i32,
    pub k_list: Option<Vec<Vec<i32>>>,
    /// Pool for exterior modes; defaults to the non-site modes of the frequency map.
    pub exterior_modes: Option<Vec<i32>>,
    /// Keep only combinations conserving mass and momentum.
    pub conservative_only: bool,
    pub gamma: f64,
    /// Defaults to `d + 1`.
    pub alpha: Option<f64>,
    pub samples: u64,
    pub seed: u64,
}

impl Default for SmallDivisorConfig {
    fn default() -> Self {
        SmallDivisorConfig {
            window: RadiiWindow { r: 0.1, nu: 0.75 },
            d: 0,
            k_box: 2,
            k_list: None,
            exterior_modes: None,
            conservative_only: true,
            gamma: 0.01,
            alpha: None,
            samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DivisorWitness {
    pub xi: Vec<f64>,
    pub k: Vec<i32>,
    pub exterior: Vec<(i32, i32)>,
    pub divisor: f64,
    pub threshold: f64,
    /// `|divisor| / threshold`; below 1 means bad.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SmallDivisorReport {
    pub samples: u64,
    pub bad: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    pub candidates: usize,
    pub worst: Option<DivisorWitness>,
}

/// 95% Wilson score interval.
pub fn wilson_interval(bad: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (n, p) = (n as f64, bad as f64 / n as f64);
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

struct Candidate {
    k: Vec<i32>,
    exterior: Vec<(i32, i32)>,
    /// `(mode index, weight)` over the evaluated frequency list.
    terms: Vec<(usize, f64)>,
    knorm: i32,
}

fn k_vectors(ns: usize, k_box: i32) -> Vec<Vec<i32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..ns {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-k_box..=k_box).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out.retain(|v| v.iter().any(|&x| x != 0));
    out
}

fn candidates(map: &FrequencyMap, cfg: &SmallDivisorConfig, modes: &[i32]) -> Result<Vec<Candidate>> {
    let sites = map.sites();
    let ns = sites.len();
    let index: BTreeMap<i32, usize> = modes.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let ks = match &cfg.k_list {
        Some(list) => {
            if list.iter().any(|k| k.len() != ns) {
                return Err(Error::InvalidArgument("each k must have one entry per site".into()));
            }
            list.clone()
        }
        None => {
            let mut ks = k_vectors(ns, cfg.k_box);
            if cfg.d > 0 {
                ks.push(vec![0; ns]);
            }
            ks
        }
    };
    let pool: Vec<i32> = match &cfg.exterior_modes {
        Some(p) => p.clone(),
        None => modes.iter().copied().filter(|m| !sites.contains(m)).collect(),
    };
    let items: Vec<(i32, i32)> = pool.iter().flat_map(|&m| [(m, 1), (m, -1)]).collect();
    let ext_sets: Vec<Vec<(i32, i32)>> = if cfg.d == 0 {
        vec![Vec::new()]
    } else if items.is_empty() {
        Vec::new()
    } else {
        multisets(0, items.len() as i32 - 1, cfg.d as usize)
            .into_iter()
            .map(|ix| ix.into_iter().map(|i| items[i as usize]).collect())
            .collect()
    };
    let mut out = Vec::new();
    for k in &ks {
        for ext in &ext_sets {
            let mut weights: BTreeMap<i32, i64> = BTreeMap::new();
            for (i, &s) in sites.iter().enumerate() {
                if k[i] != 0 {
                    *weights.entry(s).or_default() += i64::from(k[i]);
                }
            }
            for &(m, s) in ext {
                *weights.entry(m).or_default() += i64::from(s);
            }
            weights.retain(|_, w| *w != 0);
            // Identically vanishing combination (an integrable monomial).
            if weights.is_empty() {
                continue;
            }
            if cfg.conservative_only {
                let mass: i64 = k.iter().map(|&x| i64::from(x)).sum::<i64>() + ext.iter().map(|p| i64::from(p.1)).sum::<i64>();
                let mom: i64 = k.iter().zip(sites).map(|(&x, &s)| i64::from(x) * i64::from(s)).sum::<i64>()
                    + ext.iter().map(|p| i64::from(p.0) * i64::from(p.1)).sum::<i64>();
                if mass != 0 || mom != 0 {
                    continue;
                }
            }
            let mut terms = Vec::with_capacity(weights.len());
            for (m, w) in weights {
                let i = *index.get(&m).ok_or_else(|| Error::InvalidArgument(format!("mode {m} has no frequency")))?;
                terms.push((i, w as f64));
            }
            let knorm = k.iter().map(|x| x.abs()).max().unwrap_or(0).max(1);
            out.push(Candidate { k: k.clone(), exterior: ext.clone(), terms, knorm });
        }
    }
    Ok(out)
}

/// Monte Carlo measure of `ξ` in the window for which some divisor
/// `k·ω_S + Σ σ_p ω_{ℓ_p}` falls below `γ·(r^{2ν}/‖k‖_∞^{#S})^{α}`.
pub fn small_divisor_bad_measure(map: &FrequencyMap, cfg: &SmallDivisorConfig) -> Result<SmallDivisorReport> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    if cfg.d > 4 {
        return Err(Error::InvalidArgument(format!("d must be at most 4, got {}", cfg.d)));
    }
    if !(cfg.gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("γ must be nonnegative, got {}", cfg.gamma)));
    }
    cfg.window.validate()?;
    let alpha = cfg.alpha.unwrap_or(f64::from(cfg.d) + 1.0);
    let ns = map.sites().len();
    let modes: Vec<i32> = map.modes().collect();
    let cands = candidates(map, cfg, &modes)?;
    let omegas: Vec<_> = modes.iter().map(|&m| map.omega(m).expect("listed mode").clone()).collect();
    let (lo, hi) = cfg.window.bounds();
    let scale = lo;
    let thresholds: Vec<f64> = cands
        .iter()
        .map(|c| cfg.gamma * (scale / f64::from(c.knorm).powi(ns as i32)).powf(alpha))
        .collect();

    let nblocks = cfg.samples.div_ceil(BLOCK);
    type Worst = Option<(f64, u64, DivisorWitness)>;
    let run_block = |b: u64| -> (u64, Worst) {
        let mut rng = derived_rng(cfg.seed, "small-divisor", b);
        let n = BLOCK.min(cfg.samples - b * BLOCK);
        let mut bad = 0;
        let mut worst: Worst = None;
        for s in 0..n {
            let xi: Vec<f64> = (0..ns).map(|_| rng.gen_range(lo..hi)).collect();
            let om: Vec<f64> = omegas.iter().map(|p| p.eval(&xi)).collect();
            let mut hit = false;
            for (c, &thr) in cands.iter().zip(&thresholds) {
                let div: f64 = c.terms.iter().map(|&(i, w)| w * om[i]).sum();
                if div.abs() < thr {
                    hit = true;
                }
                let ratio = if thr > 0.0 { div.abs() / thr } else { f64::INFINITY };
                let id = b * BLOCK + s;
                if worst.as_ref().is_none_or(|(r, _, _)| ratio < *r) {
                    worst = Some((
                        ratio,
                        id,
                        DivisorWitness { xi: xi.clone(), k: c.k.clone(), exterior: c.exterior.clone(), divisor: div, threshold: thr, ratio },
                    ));
                }
            }
            if hit {
                bad += 1;
            }
        }
        (bad, worst)
    };
    let pick = |a: Worst, b: Worst| match (a, b) {
        (Some(x), Some(y)) => {
            if (y.0, y.1) < (x.0, x.1) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    };
    let (bad, worst) = (0..nblocks)
        .into_par_iter()
        .map(run_block)
        .reduce(|| (0, None), |(b1, w1), (b2, w2)| (b1 + b2, pick(w1, w2)));
    let (ci_low, ci_high) = wilson_interval(bad, cfg.samples);
    Ok(SmallDivisorReport {
        samples: cfg.samples,
        bad,
        fraction: bad as f64 / cfg.samples as f64,
        ci_low,
        ci_high,
        alpha,
        candidates: cands.len(),
        worst: worst.map(|w| w.2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_estimate() {
        let (lo, hi) = wilson_interval(50, 1000);
        assert!(lo < 0.05 && hi > 0.05);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }

    #[test]
    fn k_box_enumeration() {
        assert_eq!(k_vectors(2, 1).len(), 8);
    }
}
