use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birkhoff::{birkhoff_normal_form, NormalFormResult, Selection};
use crate::dynamics::field::NlsField;
use crate::dynamics::integrate::{action_drift, integrate, Scheme};
use crate::dynamics::nfmap::NormalFormMap;
use crate::error::{Error, Result};
use crate::hamcore::{Hamiltonian, NumericHamiltonian, State, C64};
use crate::nlsham::{build_nls_hamiltonian, NonlinearitySpec};
use crate::seed::derived_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct InvarianceConfig {
    /// `f^(m)(0)` for `m = 1, 2, …`, as rationals.
    pub derivatives: Vec<String>,
    pub polynomial: bool,
    pub cutoff: usize,
    /// Normal-form order `2r`.
    pub order: u32,
    pub sites: Vec<i32>,
    /// Relative actions on the sites; the torus point has `|v_k|² = ε²ξ_k`.
    pub xi: Vec<f64>,
    pub eps: f64,
    pub t_final: f64,
    pub dt: f64,
    pub record_every: usize,
    /// PASS needs `raw drift ≥ factor · normal-form drift`.
    pub factor: f64,
    pub flow_steps: usize,
    pub seed: u64,
}

impl Default for InvarianceConfig {
    fn default() -> Self {
        InvarianceConfig {
            derivatives: vec!["1".into()],
            polynomial: true,
            cutoff: 8,
            order: 6,
            sites: vec![1, 2, 3],
            xi: vec![1.0, 0.5, 0.75],
            eps: 1e-2,
            t_final: 100.0,
            dt: 1e-3,
            record_every: 500,
            factor: 10.0,
            flow_steps: 8,
            seed: 0,
        }
    }
}

impl InvarianceConfig {
    pub fn model(&self) -> Result<NonlinearitySpec> {
        NonlinearitySpec::parse(&self.derivatives, self.polynomial)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || self.order % 2 != 0 {
            return Err(Error::InvalidArgument(format!("order must be even and ≥ 2, got {}", self.order)));
        }
        if self.sites.len() != self.xi.len() || self.sites.is_empty() {
            return Err(Error::InvalidArgument("one ξ per site, at least one site".into()));
        }
        if let Some(&s) = self.sites.iter().find(|s| s.unsigned_abs() as usize > self.cutoff) {
            return Err(Error::ModeOutOfRange { mode: s, cutoff: self.cutoff });
        }
        if !(self.eps > 0.0) || !(self.dt > 0.0) || !(self.t_final > 0.0) || self.xi.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidArgument("ε, dt, T and ξ must be positive".into()));
        }
        Ok(())
    }

    /// `rmax` of the raw Hamiltonian: enough degree for the requested order.
    fn rmax(&self) -> u32 {
        (self.order / 2).max(2)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InvarianceReport {
    pub config: InvarianceConfig,
    pub raw_drift: f64,
    pub normal_form_drift: f64,
    /// `raw / normal-form` drift.
    pub ratio: f64,
    pub pass: bool,
    pub mass_drift: f64,
    pub normal_form_terms: usize,
    pub generator_terms: usize,
    pub samples: usize,
}

/// Raw Hamiltonian and its normal form for a configuration.
pub fn prepare(cfg: &InvarianceConfig) -> Result<(Hamiltonian, NormalFormResult)> {
    cfg.validate()?;
    let spec = cfg.model()?;
    let h = build_nls_hamiltonian(&spec, cfg.cutoff as i32, cfg.rmax())?;
    let nf = birkhoff_normal_form(&h, cfg.order, &Selection::default())?;
    Ok((h, nf))
}

fn torus_point(cfg: &InvarianceConfig) -> State {
    let mut rng = derived_rng(cfg.seed, "torus-phases", 0);
    let mut v = State::zeros(cfg.cutoff);
    for (&s, &x) in cfg.sites.iter().zip(&cfg.xi) {
        let phase = rand::Rng::gen_range(&mut rng, 0.0..std::f64::consts::TAU);
        v.set(s, C64::from_polar(cfg.eps * x.sqrt(), phase));
    }
    v
}

/// Starts on `T_ξ` in normal-form coordinates, integrates the raw truncated NLS, and
/// compares the site-action drift seen in both coordinate systems.
pub fn invariance_experiment(cfg: &InvarianceConfig) -> Result<InvarianceReport> {
    let (_, nf) = prepare(cfg)?;
    invariance_with(cfg, &nf)
}

/// Same, reusing a normal form computed for `cfg`.
pub fn invariance_with(cfg: &InvarianceConfig, nf: &NormalFormResult) -> Result<InvarianceReport> {
    cfg.validate()?;
    let map = NormalFormMap::new(nf, cfg.cutoff, cfg.flow_steps)?;
    let field = NlsField::new(&cfg.model()?, cfg.cutoff, cfg.rmax())?;
    let v0 = torus_point(cfg);
    let u0 = map.to_physical(&v0)?;
    let traj = integrate(&field, &u0, cfg.dt, cfg.t_final, Scheme::split_step(), cfg.record_every)?;
    let raw = action_drift(&traj, &cfg.sites, None)?;
    let mut nf_traj = traj.clone();
    nf_traj.states = traj.states.par_iter().map(|u| map.to_normal(u)).collect::<Result<Vec<_>>>()?;
    let nfd = action_drift(&nf_traj, &cfg.sites, None)?;
    let ratio = if nfd.max_mode_drift > 0.0 { raw.max_mode_drift / nfd.max_mode_drift } else { f64::INFINITY };
    Ok(InvarianceReport {
        config: cfg.clone(),
        raw_drift: raw.max_mode_drift,
        normal_form_drift: nfd.max_mode_drift,
        ratio,
        pass: raw.max_mode_drift >= cfg.factor * nfd.max_mode_drift,
        mass_drift: raw.mass,
        normal_form_terms: nf.normal_form.len(),
        generator_terms: nf.generators.iter().map(|g| g.1.len()).sum(),
        samples: traj.states.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompositionReport {
    /// `(ε, |H(τ(v)) − Z(v)|)` with `v = ε·v̂`.
    pub points: Vec<(f64, f64)>,
    pub fitted_exponent: f64,
    pub expected_exponent: f64,
    pub pass: bool,
}

/// Least-squares slope of `ln err` against `ln ε`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(e, r)| (e.ln(), r.ln())).unzip();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Composition error of the numerical coordinate change against the truncated normal form,
/// along a fixed random direction `v̂` with `‖v̂‖ = 1`. The exponent should be `2r + 2`.
pub fn composition_error_sweep(cfg: &InvarianceConfig, nf: &NormalFormResult, raw: &Hamiltonian, eps: &[f64]) -> Result<CompositionReport> {
    if eps.len() < 2 {
        return Err(Error::InvalidArgument("an ε sweep needs at least two points".into()));
    }
    let map = NormalFormMap::new(nf, cfg.cutoff, cfg.flow_steps)?;
    let h = NumericHamiltonian::compile(raw, cfg.cutoff)?;
    let z = NumericHamiltonian::compile(&nf.normal_form, cfg.cutoff)?;
    let mut rng = derived_rng(cfg.seed, "composition-direction", 0);
    let dir = State::random(cfg.cutoff, cfg.cutoff, 1.0, &mut rng);
    let points = eps
        .par_iter()
        .map(|&e| {
            let v = dir.scaled(e);
            let u = map.to_physical(&v)?;
            Ok((e, (h.evaluate(&u)? - z.evaluate(&v)?).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = log_log_slope(&points);
    let expected = f64::from(cfg.order + 2);
    Ok(CompositionReport { points, fitted_exponent: slope, expected_exponent: expected, pass: (slope - expected).abs() <= 0.3 })
}
