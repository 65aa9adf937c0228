use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{One, Zero};
use serde::ser::SerializeSeq;
use serde::Serialize;

use crate::hamcore::rational_to_f64;

/// Laurent polynomial in `ξ_i^{1/2}` over the opened sites, exact rational coefficients.
///
/// Keys are exponent vectors in half units: `[3, -2]` means `ξ₁^{3/2} ξ₂^{-1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct XiPoly {
    terms: BTreeMap<Vec<i32>, BigRational>,
}

impl XiPoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(nsites: usize, c: BigRational) -> Self {
        let mut p = XiPoly::new();
        p.add_term(vec![0; nsites], c);
        p
    }

    /// `c·ξ_site`.
    pub fn linear(nsites: usize, site: usize, c: BigRational) -> Self {
        let mut e = vec![0; nsites];
        e[site] = 2;
        let mut p = XiPoly::new();
        p.add_term(e, c);
        p
    }

    pub fn add_term(&mut self, exps: Vec<i32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &BigRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &XiPoly) -> XiPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &XiPoly) -> XiPoly {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, s: &BigRational) -> XiPoly {
        let mut out = XiPoly::new();
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &XiPoly) -> XiPoly {
        let mut out = XiPoly::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = e.iter().zip(xi).map(|(&h, &x)| x.powf(f64::from(h) / 2.0)).product();
                rational_to_f64(c) * m
            })
            .sum()
    }

    /// Exact value at `ξ_i = sqrt_i²`.
    pub fn eval_exact(&self, sqrt_xi: &[BigRational]) -> BigRational {
        let mut total = BigRational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (&h, s) in e.iter().zip(sqrt_xi) {
                let p = num::pow::pow(s.clone(), h.unsigned_abs() as usize);
                m = if h >= 0 { m * p } else { m / p };
            }
            total += m;
        }
        total
    }

    /// `∂/∂ξ_site`, exact.
    pub fn derivative(&self, site: usize) -> XiPoly {
        let mut out = XiPoly::new();
        for (e, c) in &self.terms {
            let h = e[site];
            if h == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[site] -= 2;
            out.add_term(ne, c * BigRational::new(h.into(), 2.into()));
        }
        out
    }

    /// Appends `extra` zero exponents (after opening more sites).
    pub fn widen(&self, extra: usize) -> XiPoly {
        XiPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut ne = e.clone();
                    ne.extend(std::iter::repeat_n(0, extra));
                    (ne, c.clone())
                })
                .collect(),
        }
    }
}

impl Serialize for XiPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(rename_all = "camelCase")]
        struct Term<'a> {
            xi_half_powers: &'a [i32],
            coeff: String,
        }
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for (e, c) in &self.terms {
            seq.serialize_element(&Term { xi_half_powers: e, coeff: c.to_string() })?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamcore::{rat, ratio};

    #[test]
    fn derivative_of_half_power() {
        let mut p = XiPoly::new();
        p.add_term(vec![3], rat(2));
        let d = p.derivative(0);
        assert_eq!(d.terms().next().unwrap(), (&vec![1], &rat(3)));
        assert_eq!(p.eval_exact(&[ratio(1, 2)]), ratio(1, 4));
        assert!((p.eval(&[0.25]) - 0.25).abs() < 1e-15);
    }
}
