use std::collections::{BTreeMap, BTreeSet, HashMap};

use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamcore::coeff::Coeff;
use crate::hamcore::monomial::{MonoKey, Monomial, Sign};

/// What a degree bound discarded while building a Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Truncation {
    pub dropped_terms: u64,
    pub max_dropped_degree: u32,
}

impl Truncation {
    pub fn record(&mut self, degree: u32) {
        self.dropped_terms += 1;
        self.max_dropped_degree = self.max_dropped_degree.max(degree);
    }

    pub fn merge(&mut self, other: &Truncation) {
        self.dropped_terms += other.dropped_terms;
        self.max_dropped_degree = self.max_dropped_degree.max(other.max_dropped_degree);
    }
}

/// Sparse polynomial in the Fourier modes with exact coefficients.
///
/// Every stored key satisfies zero mass and zero momentum, and no stored
/// coefficient is zero. Terms of degree above `degree_bound` are never stored;
/// attempts to create them are counted in `truncation`.
#[derive(Clone, Debug, Default)]
pub struct Hamiltonian {
    terms: BTreeMap<MonoKey, Coeff>,
    degree_bound: Option<u32>,
    truncation: Truncation,
}

impl PartialEq for Hamiltonian {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for Hamiltonian {}

impl Hamiltonian {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_degree_bound(bound: Option<u32>) -> Self {
        Hamiltonian { degree_bound: bound, ..Self::default() }
    }

    pub fn degree_bound(&self) -> Option<u32> {
        self.degree_bound
    }

    pub fn set_degree_bound(&mut self, bound: Option<u32>) {
        self.degree_bound = bound;
        if let Some(b) = bound {
            let mut trunc = self.truncation;
            self.terms.retain(|k, _| {
                let keep = k.degree() <= b;
                if !keep {
                    trunc.record(k.degree());
                }
                keep
            });
            self.truncation = trunc;
        }
    }

    pub fn truncation(&self) -> &Truncation {
        &self.truncation
    }

    /// Merges `coeff` into `key`, rejecting keys that violate conservation.
    pub fn insert(&mut self, key: MonoKey, coeff: Coeff) -> Result<()> {
        key.check_conservation()?;
        self.insert_unchecked(key, coeff);
        Ok(())
    }

    pub fn insert_monomial(&mut self, m: Monomial) -> Result<()> {
        self.insert(m.key, m.coeff)
    }

    /// Inserts a key known to be conservative (built by closed operations).
    pub(crate) fn insert_unchecked(&mut self, key: MonoKey, coeff: Coeff) {
        if coeff.is_zero() {
            return;
        }
        if let Some(b) = self.degree_bound {
            if key.degree() > b {
                self.truncation.record(key.degree());
                return;
            }
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += &coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub(crate) fn from_accumulator(
        acc: HashMap<MonoKey, Coeff>,
        degree_bound: Option<u32>,
        truncation: Truncation,
    ) -> Self {
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Hamiltonian { terms, degree_bound, truncation }
    }

    pub fn from_monomials(monomials: impl IntoIterator<Item = Monomial>) -> Result<Self> {
        let mut h = Hamiltonian::new();
        for m in monomials {
            h.insert_monomial(m)?;
        }
        Ok(h)
    }

    /// Single term from raw pairs (canonicalized and checked).
    pub fn monomial(pairs: &[(i32, Sign)], mass_power: u32, coeff: Coeff) -> Result<Self> {
        let mut h = Hamiltonian::new();
        h.insert(MonoKey::from_pairs(pairs, mass_power)?, coeff)?;
        Ok(h)
    }

    pub fn constant(c: Coeff) -> Self {
        let mut h = Hamiltonian::new();
        h.insert_unchecked(MonoKey::pure_mass(0), c);
        h
    }

    /// `Z₂ = ½ Σ_{|k|≤K} k² |u_k|²`.
    pub fn z2(cutoff: i32) -> Self {
        let mut h = Hamiltonian::new();
        for k in -cutoff..=cutoff {
            let k2 = i64::from(k) * i64::from(k);
            h.insert_unchecked(MonoKey::action(k, 1), Coeff::from_ratio(k2, 2));
        }
        h
    }

    /// `Σ_{|k|≤K} |u_k|²` written in Fourier form.
    pub fn mass(cutoff: i32) -> Self {
        let mut h = Hamiltonian::new();
        for k in -cutoff..=cutoff {
            h.insert_unchecked(MonoKey::action(k, 1), Coeff::one());
        }
        h
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonoKey, &Coeff)> {
        self.terms.iter()
    }

    pub fn term_map(&self) -> &BTreeMap<MonoKey, Coeff> {
        &self.terms
    }

    pub fn into_terms(self) -> BTreeMap<MonoKey, Coeff> {
        self.terms
    }

    pub fn coeff(&self, key: &MonoKey) -> Coeff {
        self.terms.get(key).cloned().unwrap_or_default()
    }

    pub fn max_abs_mode(&self) -> u32 {
        self.terms.keys().map(MonoKey::max_abs_mode).max().unwrap_or(0)
    }

    pub fn degrees(&self) -> BTreeSet<u32> {
        self.terms.keys().map(MonoKey::degree).collect()
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(MonoKey::degree).max().unwrap_or(0)
    }

    /// Sub-Hamiltonian of the terms accepted by `pred`.
    pub fn filter(&self, mut pred: impl FnMut(&MonoKey, &Coeff) -> bool) -> Self {
        Hamiltonian {
            terms: self.terms.iter().filter(|(k, c)| pred(k, c)).map(|(k, c)| (k.clone(), c.clone())).collect(),
            degree_bound: self.degree_bound,
            truncation: Truncation::default(),
        }
    }

    pub fn homogeneous(&self, degree: u32) -> Self {
        self.filter(|k, _| k.degree() == degree)
    }

    pub fn add(&self, other: &Hamiltonian) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Hamiltonian) {
        for (k, c) in &other.terms {
            self.insert_unchecked(k.clone(), c.clone());
        }
        self.truncation.merge(&other.truncation);
    }

    pub fn sub(&self, other: &Hamiltonian) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert_unchecked(k.clone(), -c);
        }
        out
    }

    pub fn scale(&self, factor: &Coeff) -> Self {
        if factor.is_zero() {
            return Hamiltonian::with_degree_bound(self.degree_bound);
        }
        Hamiltonian {
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c * factor)).collect(),
            degree_bound: self.degree_bound,
            truncation: self.truncation,
        }
    }

    pub fn scale_rational(&self, factor: &BigRational) -> Self {
        self.scale(&Coeff::real(factor.clone()))
    }

    /// Polynomial product, honoring the tighter of the two degree bounds.
    pub fn mul(&self, other: &Hamiltonian) -> Self {
        let bound = min_bound(self.degree_bound, other.degree_bound);
        let mut acc: HashMap<MonoKey, Coeff> = HashMap::new();
        let mut trunc = Truncation::default();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let deg = ka.degree() + kb.degree();
                if bound.is_some_and(|b| deg > b) {
                    trunc.record(deg);
                    continue;
                }
                *acc.entry(ka.mul(kb)).or_default() += &(ca * cb);
            }
        }
        Hamiltonian::from_accumulator(acc, bound, trunc)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Hamiltonian::constant(Coeff::one());
        out.degree_bound = self.degree_bound;
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Replaces every `‖u‖^{2n}` prefactor by the explicit Fourier sum
    /// `(Σ_{|k|≤K} |u_k|²)^n`, returning a Hamiltonian with mass power 0.
    pub fn expand_mass_powers(&self, cutoff: i32) -> Self {
        let mass = Hamiltonian::mass(cutoff);
        let max_n = self.terms.keys().map(MonoKey::mass_power).max().unwrap_or(0);
        let mut powers = vec![Hamiltonian::constant(Coeff::one())];
        for n in 1..=max_n {
            powers.push(powers[n as usize - 1].mul(&mass));
        }
        let mut acc: HashMap<MonoKey, Coeff> = HashMap::new();
        for (k, c) in &self.terms {
            let stripped = k.with_mass_power(0);
            for (pk, pc) in powers[k.mass_power() as usize].terms() {
                *acc.entry(stripped.mul(pk)).or_default() += &(c * pc);
            }
        }
        Hamiltonian::from_accumulator(acc, self.degree_bound, self.truncation)
    }

    /// Real-valuedness: the coefficient of `conj(m)` is the conjugate coefficient of `m`.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(k, c)| self.coeff(&k.conj()) == c.conj())
    }

    /// `ε^{-4} H(εu)`: a degree-`D` term is multiplied by `ε^{D-4}`.
    pub fn amplitude_rescaled(&self, eps: &BigRational) -> Self {
        let inv = BigRational::one() / eps;
        let factor = |deg: u32| -> BigRational {
            let mut f = BigRational::one();
            if deg >= 4 {
                for _ in 0..deg - 4 {
                    f *= eps;
                }
            } else {
                for _ in 0..4 - deg {
                    f *= &inv;
                }
            }
            f
        };
        Hamiltonian {
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.scale(&factor(k.degree())))).collect(),
            degree_bound: self.degree_bound,
            truncation: self.truncation,
        }
    }

    /// `Σ_terms |coeff| · Π_j w(ℓ_j)`, a stand-in norm for Hamiltonian classes.
    pub fn majorant_norm(&self, weight: impl Fn(i32) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let w: f64 = k.factors().iter().map(|f| weight(f.mode).powi(f.count() as i32)).product();
                c.abs_f64() * w
            })
            .sum()
    }

    pub fn monomials(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|(k, c)| Monomial::new(k.clone(), c.clone()))
    }
}

pub(crate) fn min_bound(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Unit weights for [`Hamiltonian::majorant_norm`].
pub fn unit_weight(_: i32) -> f64 {
    1.0
}

/// `⟨k⟩ = (1 + k²)^{1/2}`.
pub fn japanese(k: f64) -> f64 {
    1.0f64.hypot(k)
}

// ---- JSON ----

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct TermJson {
    pairs: Vec<(i32, Sign)>,
    mass_power: u32,
    coeff: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct HamiltonianJson {
    #[serde(default)]
    degree_bound: Option<u32>,
    terms: Vec<TermJson>,
}

impl Serialize for Hamiltonian {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HamiltonianJson {
            degree_bound: self.degree_bound,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| TermJson { pairs: k.pairs(), mass_power: k.mass_power(), coeff: c.to_string() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Hamiltonian {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = HamiltonianJson::deserialize(d)?;
        let mut h = Hamiltonian::with_degree_bound(raw.degree_bound);
        for t in raw.terms {
            let coeff: Coeff = t.coeff.parse().map_err(D::Error::custom)?;
            let key = MonoKey::from_pairs(&t.pairs, t.mass_power).map_err(D::Error::custom)?;
            h.insert(key, coeff).map_err(D::Error::custom)?;
        }
        Ok(h)
    }
}

impl Hamiltonian {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(Error::from)
    }
}
