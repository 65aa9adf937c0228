use num::rational::BigRational;
use num::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamcore::{rational_to_f64, Coeff};
use crate::kamlab::aa::{aa_bracket, project, AAHamiltonian, OpeningSpec, Projection, TbrParams};
use crate::kamlab::frequency::FrequencyMap;

/// A point `ξ` given through exact square roots, so that `ξ^{1/2}` stays rational.
#[derive(Clone, Debug, PartialEq)]
pub struct XiPoint {
    pub sqrt_xi: Vec<BigRational>,
}

impl XiPoint {
    pub fn new(sqrt_xi: Vec<BigRational>) -> Result<Self> {
        if sqrt_xi.iter().any(|s| *s <= BigRational::zero()) {
            return Err(Error::InvalidArgument("square roots of ξ must be positive".into()));
        }
        Ok(XiPoint { sqrt_xi })
    }

    /// Rounds `sqrt(ξ_i)` to a rational with denominator `denom`.
    pub fn from_f64(xi: &[f64], denom: i64) -> Result<Self> {
        let v = xi
            .iter()
            .map(|&x| {
                let n = (x.sqrt() * denom as f64).round() as i64;
                BigRational::new(n.into(), denom.into())
            })
            .collect();
        Self::new(v)
    }

    pub fn xi_exact(&self) -> Vec<BigRational> {
        self.sqrt_xi.iter().map(|s| s * s).collect()
    }

    pub fn xi(&self) -> Vec<f64> {
        self.xi_exact().iter().map(rational_to_f64).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PreconditionReport {
    pub targeted_terms: usize,
    pub tbr_before: f64,
    pub tbr_after: f64,
    pub ajet_before: f64,
    pub ajet_after: f64,
    pub min_abs_divisor: f64,
    pub lie_order: u32,
    #[serde(skip)]
    pub generator: AAHamiltonian,
    #[serde(skip)]
    pub transformed: AAHamiltonian,
    #[serde(skip)]
    pub opened: AAHamiltonian,
}

/// One Birkhoff step on the terms to be removed before opening `tbr.new_site`,
/// followed by that opening.
///
/// The Hamiltonian is first evaluated in `ξ` at `point`; each targeted term is divided by
/// `iΩ` from `map`, and the Lie series is cut after `lie_order` brackets.
pub fn precondition_and_open(
    h: &AAHamiltonian,
    map: &FrequencyMap,
    point: &XiPoint,
    tbr: TbrParams,
    next: &OpeningSpec,
    lie_order: u32,
) -> Result<PreconditionReport> {
    if point.sqrt_xi.len() != h.sites().len() || map.sites() != h.sites() {
        return Err(Error::InvalidArgument("point, map and Hamiltonian must share the opened sites".into()));
    }
    if next.sites != [tbr.new_site] {
        return Err(Error::InvalidArgument(format!("the next opening must be exactly site {}", tbr.new_site)));
    }
    let hs = h.specialize(&point.sqrt_xi);
    let target = project(&hs, Projection::Tbr(tbr));
    let site_freq: Vec<BigRational> = h
        .sites()
        .iter()
        .map(|&s| map.omega_exact(s, &point.sqrt_xi).expect("sites always carry frequencies"))
        .collect();
    for (k, _) in target.terms() {
        if let Some(f) = k.exterior.factors().iter().find(|f| map.omega(f.mode).is_none()) {
            return Err(Error::InvalidArgument(format!("mode {} is outside the frequency window", f.mode)));
        }
    }
    let ext_freq = |m: i32| map.omega_exact(m, &point.sqrt_xi).expect("checked above");
    let mut chi = hs.filter(|_, _| false);
    let mut min_div = f64::INFINITY;
    let divisors: Vec<_> = target.terms().map(|(k, c)| (k.clone(), c.clone(), k.divisor_with(&site_freq, ext_freq))).collect();
    for (k, c, om) in divisors {
        if om.is_zero() {
            return Err(Error::PolicyViolation(format!("targeted term {k:?} has a vanishing divisor")));
        }
        min_div = min_div.min(rational_to_f64(&om).abs());
        chi.insert(k, c.div(&Coeff::imag(om)));
    }
    let bound = hs.terms().map(|(k, _)| k.degree()).max();
    let mut out = hs.clone();
    let mut term = hs.clone();
    for n in 1..=lie_order {
        term = aa_bracket(&chi, &term, bound)?.scale(&Coeff::from_ratio(1, i64::from(n)));
        if term.is_empty() {
            break;
        }
        out = out.add(&term);
    }
    let xi = point.xi();
    let tbr_norm = |a: &AAHamiltonian| project(a, Projection::Tbr(tbr)).majorant_norm(&xi);
    let ajet_norm = |a: &AAHamiltonian| project(a, Projection::Ajet).majorant_norm(&xi);
    let opened = out.open(next)?;
    Ok(PreconditionReport {
        targeted_terms: chi.len(),
        tbr_before: tbr_norm(&hs),
        tbr_after: tbr_norm(&out),
        ajet_before: ajet_norm(&hs),
        ajet_after: ajet_norm(&out),
        min_abs_divisor: min_div,
        lie_order,
        generator: chi,
        transformed: out,
        opened,
    })
}
