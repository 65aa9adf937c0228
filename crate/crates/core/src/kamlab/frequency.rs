use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamcore::{rat, rational_to_f64};
use crate::kamlab::aa::AAHamiltonian;
use crate::kamlab::xipoly::XiPoly;

/// Frequencies `ω_j(ξ)` read off the integrable quadratic part of an opened Hamiltonian,
/// with the split `ω_j = ε^{-2}j² + κ·𝟙_{j∈S}ξ_j + ε·λ_j(ξ)`.
///
/// `κ = 2` matches the usual statement of the frequencies; `κ = 1` is the template
/// without the factor two.
#[derive(Clone, Debug, Serialize)]
pub struct FrequencyMap {
    sites: Vec<i32>,
    #[serde(serialize_with = "ser_rational")]
    eps: BigRational,
    #[serde(serialize_with = "ser_rational")]
    kappa: BigRational,
    omega: BTreeMap<i32, XiPoly>,
}

fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// `(Σ_S ξ_i)^n`.
fn mass_on_torus(nsites: usize, n: u32) -> XiPoly {
    let sum = (0..nsites).fold(XiPoly::new(), |acc, i| acc.add(&XiPoly::linear(nsites, i, BigRational::one())));
    let mut out = XiPoly::constant(nsites, BigRational::one());
    for _ in 0..n {
        out = out.mul(&sum);
    }
    out
}

impl FrequencyMap {
    /// Extracts `ω_j` for `j` in `window` (sites are always included).
    ///
    /// A site frequency is `2∂_{y_j}` and an exterior one twice the `|u_j|²` coefficient,
    /// both at `y = 0`, `u_ext = 0`; `‖u‖²` then equals `Σ_S ξ_i`.
    pub fn from_normal_form(h: &AAHamiltonian, window: &[i32], eps: BigRational, kappa: BigRational) -> Result<Self> {
        if !(eps > BigRational::zero()) {
            return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
        }
        let sites = h.sites().to_vec();
        let ns = sites.len();
        let mut omega: BTreeMap<i32, XiPoly> = BTreeMap::new();
        for &s in &sites {
            omega.insert(s, XiPoly::new());
        }
        for &j in window {
            omega.entry(j).or_default();
        }
        let mut found = false;
        let mut mass_cache: BTreeMap<u32, XiPoly> = BTreeMap::new();
        let mut mass_pow = |n: u32| mass_cache.entry(n).or_insert_with(|| mass_on_torus(ns, n)).clone();
        for (k, c) in h.terms() {
            if k.angle.iter().any(|&a| a != 0) {
                continue;
            }
            let m1 = k.action_order();
            let base = {
                let mut p = XiPoly::new();
                p.add_term(k.xi_half.clone(), BigRational::one());
                p
            };
            let real = |c: &crate::hamcore::Coeff| -> Result<BigRational> {
                if !c.im.is_zero() {
                    return Err(Error::Structural(format!("complex integrable coefficient {c} on {k:?}")));
                }
                Ok(c.re.clone())
            };
            let ext = k.exterior.factors();
            if m1 == 1 && ext.is_empty() {
                let i = k.actions.iter().position(|&m| m == 1).expect("one action");
                let v = base.mul(&mass_pow(k.mass_power)).scale(&(real(c)? * rat(2)));
                let e = omega.get_mut(&sites[i]).expect("site present");
                *e = e.add(&v);
                found = true;
            } else if m1 == 0 && ext.len() == 1 && ext[0].plus == 1 && ext[0].minus == 1 {
                if let Some(e) = omega.get_mut(&ext[0].mode) {
                    let v = base.mul(&mass_pow(k.mass_power)).scale(&(real(c)? * rat(2)));
                    *e = e.add(&v);
                }
                found = true;
            } else if m1 == 0 && ext.is_empty() && k.mass_power > 0 {
                // ‖u‖^{2n} contributes n‖u‖^{2n-2} to every frequency.
                let v = base.mul(&mass_pow(k.mass_power - 1)).scale(&(real(c)? * rat(2 * i64::from(k.mass_power))));
                for e in omega.values_mut() {
                    *e = e.add(&v);
                }
                found = true;
            }
        }
        if !found {
            return Err(Error::MissingQuadraticData("no y-linear or |u|² coefficient in the normal form".into()));
        }
        Ok(FrequencyMap { sites, eps, kappa, omega })
    }

    pub fn sites(&self) -> &[i32] {
        &self.sites
    }

    pub fn eps(&self) -> &BigRational {
        &self.eps
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> + '_ {
        self.omega.keys().copied()
    }

    pub fn omega(&self, j: i32) -> Option<&XiPoly> {
        self.omega.get(&j)
    }

    /// `ε^{-2}j² + κ·𝟙_{j∈S}ξ_j`.
    pub fn template(&self, j: i32) -> XiPoly {
        let ns = self.sites.len();
        let j2 = rat(i64::from(j) * i64::from(j));
        let mut t = XiPoly::constant(ns, j2 / (&self.eps * &self.eps));
        if let Some(i) = self.sites.iter().position(|&s| s == j) {
            t = t.add(&XiPoly::linear(ns, i, self.kappa.clone()));
        }
        t
    }

    pub fn lambda(&self, j: i32) -> Option<XiPoly> {
        let om = self.omega.get(&j)?;
        Some(om.sub(&self.template(j)).scale(&(BigRational::one() / &self.eps)))
    }

    pub fn eval_omega(&self, j: i32, xi: &[f64]) -> Option<f64> {
        self.omega.get(&j).map(|p| p.eval(xi))
    }

    pub fn eval_lambda(&self, j: i32, xi: &[f64]) -> Option<f64> {
        self.lambda(j).map(|p| p.eval(xi))
    }

    /// Exact `ω_j` at `ξ_i = sqrt_i²`.
    pub fn omega_exact(&self, j: i32, sqrt_xi: &[BigRational]) -> Option<BigRational> {
        self.omega.get(&j).map(|p| p.eval_exact(sqrt_xi))
    }

    pub fn eps_f64(&self) -> f64 {
        rational_to_f64(&self.eps)
    }
}

/// `|∂_{ξ_k} λ_j|` at one point: rows `j`, columns `k ∈ S`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LipschitzMatrix {
    pub rows: Vec<i32>,
    pub cols: Vec<i32>,
    pub xi0: Vec<f64>,
    pub step: f64,
    pub central: Vec<Vec<f64>>,
    pub forward: Vec<Vec<f64>>,
    pub exact: Vec<Vec<f64>>,
}

impl LipschitzMatrix {
    pub fn max_central_forward_gap(&self) -> f64 {
        gap(&self.central, &self.forward)
    }

    pub fn max_central_exact_gap(&self) -> f64 {
        gap(&self.central, &self.exact)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j");
        for k in &self.cols {
            out.push_str(&format!(",d_xi{k}"));
        }
        out.push('\n');
        for (r, j) in self.rows.iter().enumerate() {
            out.push_str(&j.to_string());
            for v in &self.central[r] {
                out.push_str(&format!(",{v:e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

/// Rows default to every mode the map knows.
pub fn lambda_lipschitz_matrix(map: &FrequencyMap, rows: Option<&[i32]>, xi0: &[f64], h: f64) -> Result<LipschitzMatrix> {
    let ns = map.sites.len();
    if xi0.len() != ns {
        return Err(Error::InvalidArgument("one ξ value per site is required".into()));
    }
    if !(h > 0.0) || xi0.iter().any(|&x| x - h <= 0.0) {
        return Err(Error::InvalidArgument(format!("step {h} must be positive and smaller than every ξ")));
    }
    let rows: Vec<i32> = match rows {
        Some(r) => r.to_vec(),
        None => map.modes().collect(),
    };
    let (mut central, mut forward, mut exact) = (Vec::new(), Vec::new(), Vec::new());
    for &j in &rows {
        let lam = map.lambda(j).ok_or_else(|| Error::InvalidArgument(format!("mode {j} outside the frequency window")))?;
        let (mut c, mut f, mut e) = (Vec::new(), Vec::new(), Vec::new());
        for k in 0..ns {
            let mut p = xi0.to_vec();
            let mut m = xi0.to_vec();
            p[k] += h;
            m[k] -= h;
            let v0 = lam.eval(xi0);
            c.push(((lam.eval(&p) - lam.eval(&m)) / (2.0 * h)).abs());
            f.push(((lam.eval(&p) - v0) / h).abs());
            e.push(lam.derivative(k).eval(xi0).abs());
        }
        central.push(c);
        forward.push(f);
        exact.push(e);
    }
    Ok(LipschitzMatrix { rows, cols: map.sites.clone(), xi0: xi0.to_vec(), step: h, central, forward, exact })
}

/// `sup_k Σ_j |entry_{jk}|`.
pub fn twist_margin(rows: &[Vec<f64>]) -> f64 {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    (0..ncols)
        .map(|k| rows.iter().map(|r| r.get(k).map_or(0.0, |v| v.abs())).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn twist_passes(eps: f64, margin: f64) -> bool {
    eps * margin < 1.0
}

fn bracket(k: f64) -> f64 {
    k.hypot(1.0)
}

/// `(1 ∧ ⟨j⟩^{-δ}⟨k⟩^{2s₀} ∧ ⟨k⟩^{-δ}⟨j⟩^{2s₀}) ∨ ⟨j⟩^{-δ}`.
pub fn lipschitz_shape(j: i32, k: i32, delta: f64, s0: f64) -> f64 {
    let (bj, bk) = (bracket(f64::from(j)), bracket(f64::from(k)));
    let a = 1f64.min(bj.powf(-delta) * bk.powf(2.0 * s0)).min(bk.powf(-delta) * bj.powf(2.0 * s0));
    a.max(bj.powf(-delta))
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LipschitzReport {
    pub delta: f64,
    pub s0: f64,
    /// Smallest `C` with `entry ≤ C·shape` on the whole matrix.
    pub fitted_constant: f64,
    pub worst: Option<(i32, i32)>,
    pub twist_margin: f64,
    pub eps: f64,
    pub twist_pass: bool,
}

impl LipschitzReport {
    pub fn new(m: &LipschitzMatrix, eps: f64, delta: f64, s0: f64) -> Self {
        let mut fitted = 0.0;
        let mut worst = None;
        for (r, &j) in m.rows.iter().enumerate() {
            for (c, &k) in m.cols.iter().enumerate() {
                let ratio = m.central[r][c] / lipschitz_shape(j, k, delta, s0);
                if ratio > fitted {
                    fitted = ratio;
                    worst = Some((j, k));
                }
            }
        }
        let margin = twist_margin(&m.central);
        LipschitzReport { delta, s0, fitted_constant: fitted, worst, twist_margin: margin, eps, twist_pass: twist_passes(eps, margin) }
    }

    /// `δ = 1`, `s₀ = 2`.
    pub fn standard(m: &LipschitzMatrix, eps: f64) -> Self {
        Self::new(m, eps, 1.0, 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_margin() {
        let id: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        assert_eq!(twist_margin(&id), 1.0);
        assert_eq!(twist_margin(&vec![vec![0.0; 3]; 2]), 0.0);
        assert!(twist_passes(0.5, 1.0));
    }

    #[test]
    fn shape_at_origin() {
        assert!((lipschitz_shape(0, 0, 1.0, 2.0) - 1.0).abs() < 1e-15);
        // Far rows decay like ⟨j⟩^{-δ}.
        let v = lipschitz_shape(100, 1, 1.0, 2.0);
        assert!((v - 4.0 / 100f64.hypot(1.0)).abs() < 1e-12);
    }
}
