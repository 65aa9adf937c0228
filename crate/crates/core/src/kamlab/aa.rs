use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamcore::{rat, Coeff, Factor, Hamiltonian, MonoKey, State, C64};
use crate::kamlab::xipoly::XiPoly;

/// Term of an opened Hamiltonian:
/// `c · ξ^{h/2} · y^m · e^{ik·θ} · (exterior monomial) · ‖u‖^{2n}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AAKey {
    pub angle: Vec<i32>,
    pub actions: Vec<u32>,
    pub exterior: MonoKey,
    pub mass_power: u32,
    /// Exponents of `ξ_i` in half units; negative values come from the binomial series.
    pub xi_half: Vec<i32>,
}

impl AAKey {
    /// `2|m|₁ + q`, the order in `(y, u_ext)` around the torus.
    pub fn degree(&self) -> u32 {
        2 * self.actions.iter().sum::<u32>() + self.exterior.num_pairs() as u32
    }

    pub fn action_order(&self) -> u32 {
        self.actions.iter().sum()
    }

    pub fn is_integrable(&self) -> bool {
        self.angle.iter().all(|&k| k == 0) && self.exterior.is_integrable()
    }

    pub fn mass(&self, _sites: &[i32]) -> i64 {
        self.angle.iter().map(|&k| i64::from(k)).sum::<i64>() + self.exterior.mass()
    }

    pub fn momentum(&self, sites: &[i32]) -> i64 {
        self.angle.iter().zip(sites).map(|(&k, &s)| i64::from(k) * i64::from(s)).sum::<i64>() + self.exterior.momentum()
    }

    /// `Ω = k·ω_S + Σ σ ω_ℓ` for frequencies given per site and per exterior mode.
    pub fn divisor_with(&self, site_freq: &[BigRational], ext_freq: impl Fn(i32) -> BigRational) -> BigRational {
        let mut om = BigRational::zero();
        for (&k, w) in self.angle.iter().zip(site_freq) {
            om += w * BigRational::from_integer(k.into());
        }
        for f in self.exterior.factors() {
            let s = i64::from(f.plus) - i64::from(f.minus);
            if s != 0 {
                om += ext_freq(f.mode) * BigRational::from_integer(s.into());
            }
        }
        om
    }

    fn widen(&self, extra: usize) -> AAKey {
        let mut k = self.clone();
        k.angle.extend(std::iter::repeat_n(0, extra));
        k.actions.extend(std::iter::repeat_n(0, extra));
        k.xi_half.extend(std::iter::repeat_n(0, extra));
        k
    }
}

/// `ξ` window `(r^{2ν}, 2r^{2ν})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiiWindow {
    pub r: f64,
    pub nu: f64,
}

impl RadiiWindow {
    pub fn bounds(&self) -> (f64, f64) {
        let lo = self.r.powf(2.0 * self.nu);
        (lo, 2.0 * lo)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.5 && self.nu < 1.0) {
            return Err(Error::InvalidArgument(format!("ν must lie in (1/2, 1), got {}", self.nu)));
        }
        if !(self.r > 0.0) {
            return Err(Error::InvalidArgument(format!("r must be positive, got {}", self.r)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OpeningSpec {
    pub sites: Vec<i32>,
    /// Values used for validation and numerics; the opened Hamiltonian keeps `ξ` symbolic.
    pub xi: Vec<f64>,
    #[serde(default)]
    pub window: Option<RadiiWindow>,
    pub y_order: u32,
}

impl OpeningSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sites.len() != self.xi.len() {
            return Err(Error::InvalidArgument("one ξ value per site is required".into()));
        }
        if self.y_order < 2 {
            return Err(Error::InvalidArgument(format!("yOrder must be at least 2, got {}", self.y_order)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (&s, &x) in self.sites.iter().zip(&self.xi) {
            if !seen.insert(s) {
                return Err(Error::InvalidArgument(format!("site {s} listed twice")));
            }
            if x == 0.0 {
                return Err(Error::SingularOpening { site: s });
            }
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::InvalidArgument(format!("ξ_{s} must be positive, got {x}")));
            }
            if let Some(w) = &self.window {
                w.validate()?;
                let (lo, hi) = w.bounds();
                if !(x > lo && x < hi) {
                    return Err(Error::InvalidArgument(format!("ξ_{s} = {x} outside the window ({lo}, {hi})")));
                }
            }
        }
        Ok(())
    }
}

/// Hamiltonian in mixed variables: action-angle on `sites`, Fourier elsewhere.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AAHamiltonian {
    sites: Vec<i32>,
    y_order: u32,
    terms: BTreeMap<AAKey, Coeff>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AATermJson<'a> {
    angle: &'a [i32],
    actions: &'a [u32],
    exterior: Vec<(i32, i8)>,
    mass_power: u32,
    xi_half: &'a [i32],
    coeff: String,
}

impl Serialize for AAHamiltonian {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let terms: Vec<AATermJson> = self
            .terms
            .iter()
            .map(|(k, c)| AATermJson {
                angle: &k.angle,
                actions: &k.actions,
                exterior: k.exterior.pairs(),
                mass_power: k.mass_power,
                xi_half: &k.xi_half,
                coeff: c.to_string(),
            })
            .collect();
        let mut st = s.serialize_struct("AAHamiltonian", 3)?;
        st.serialize_field("sites", &self.sites)?;
        st.serialize_field("yOrder", &self.y_order)?;
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

/// `C(α, m)` for rational `α`.
fn gen_binomial(alpha: &BigRational, m: u32) -> BigRational {
    let mut out = BigRational::one();
    for j in 0..m {
        out = out * (alpha - rat(i64::from(j))) / rat(i64::from(j) + 1);
    }
    out
}

/// `(ξ + y)^{p/2}` as `[(half-exponent of ξ, power of y, coefficient)]`, `y`-powers ≤ `y_order`.
fn action_series(p: u32, y_order: u32) -> Vec<(i32, u32, BigRational)> {
    let alpha = BigRational::new(p.into(), 2.into());
    (0..=y_order)
        .map(|m| (p as i32 - 2 * m as i32, m, gen_binomial(&alpha, m)))
        .filter(|(_, _, c)| !c.is_zero())
        .collect()
}

impl AAHamiltonian {
    /// Empty Hamiltonian over already-opened `sites`.
    pub fn new(sites: Vec<i32>, y_order: u32) -> Self {
        AAHamiltonian { sites, y_order, terms: BTreeMap::new() }
    }

    /// No site opened yet.
    pub fn from_fourier(h: &Hamiltonian) -> Self {
        let terms = h
            .terms()
            .map(|(k, c)| {
                let key = AAKey {
                    angle: Vec::new(),
                    actions: Vec::new(),
                    exterior: k.with_mass_power(0),
                    mass_power: k.mass_power(),
                    xi_half: Vec::new(),
                };
                (key, c.clone())
            })
            .collect();
        AAHamiltonian { sites: Vec::new(), y_order: 0, terms }
    }

    pub fn sites(&self) -> &[i32] {
        &self.sites
    }

    pub fn y_order(&self) -> u32 {
        self.y_order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&AAKey, &Coeff)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, key: &AAKey) -> Coeff {
        self.terms.get(key).cloned().unwrap_or_default()
    }

    pub fn site_index(&self, site: i32) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    fn empty_like(&self) -> Self {
        AAHamiltonian { sites: self.sites.clone(), y_order: self.y_order, terms: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: AAKey, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn filter(&self, mut pred: impl FnMut(&AAKey, &Coeff) -> bool) -> Self {
        let mut out = self.empty_like();
        out.terms = self.terms.iter().filter(|(k, c)| pred(k, c)).map(|(k, c)| (k.clone(), c.clone())).collect();
        out
    }

    pub fn add(&self, other: &AAHamiltonian) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &AAHamiltonian) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(k.clone(), -c);
        }
        out
    }

    pub fn scale(&self, s: &Coeff) -> Self {
        let mut out = self.empty_like();
        for (k, c) in &self.terms {
            out.insert(k.clone(), c * s);
        }
        out
    }

    /// Opens further sites; they must be new and present only as exterior modes so far.
    pub fn open(&self, spec: &OpeningSpec) -> Result<Self> {
        spec.validate()?;
        for &s in &spec.sites {
            if self.sites.contains(&s) {
                return Err(Error::InvalidArgument(format!("site {s} is already open")));
            }
        }
        let max_mode = self.terms.keys().map(|k| k.exterior.max_abs_mode()).max().unwrap_or(0);
        for &s in &spec.sites {
            if s.unsigned_abs() > max_mode {
                return Err(Error::ModeOutOfRange { mode: s, cutoff: max_mode as usize });
            }
        }
        let base = self.sites.len();
        let extra = spec.sites.len();
        let mut out = AAHamiltonian {
            sites: self.sites.iter().chain(&spec.sites).copied().collect(),
            y_order: spec.y_order,
            terms: BTreeMap::new(),
        };
        let mut cache: HashMap<u32, Vec<(i32, u32, BigRational)>> = HashMap::new();
        for (key, c) in &self.terms {
            let wide = key.widen(extra);
            // Split the exterior monomial into opened factors and the rest.
            let mut rest: Vec<Factor> = Vec::new();
            let mut opened: Vec<(usize, Factor)> = Vec::new();
            for f in key.exterior.factors() {
                match spec.sites.iter().position(|&s| s == f.mode) {
                    Some(i) => opened.push((base + i, *f)),
                    None => rest.push(*f),
                }
            }
            let exterior = MonoKey::from_factors(rest, 0);
            let mut partial: Vec<(AAKey, Coeff)> = vec![(AAKey { exterior, ..wide }, c.clone())];
            for (idx, f) in opened {
                let p = u32::from(f.plus) + u32::from(f.minus);
                let series = cache.entry(p).or_insert_with(|| action_series(p, spec.y_order));
                let mut next = Vec::with_capacity(partial.len() * series.len());
                for (k, c) in &partial {
                    for (h, m, b) in series.iter() {
                        let mut nk = k.clone();
                        nk.angle[idx] = i32::from(f.plus) - i32::from(f.minus);
                        nk.actions[idx] = *m;
                        nk.xi_half[idx] = *h;
                        next.push((nk, c.scale(b)));
                    }
                }
                partial = next;
            }
            for (k, c) in partial {
                out.insert(k, c);
            }
        }
        Ok(out)
    }

    /// Fails on the first term violating mass or momentum conservation.
    pub fn check_conservation(&self) -> Result<()> {
        for k in self.terms.keys() {
            if k.mass(&self.sites) != 0 || k.momentum(&self.sites) != 0 {
                return Err(Error::Structural(format!("opened term {k:?} is not conservative")));
            }
        }
        Ok(())
    }

    /// Substitutes exact `ξ_i = sqrt_i²`, leaving a `ξ`-free Hamiltonian.
    pub fn specialize(&self, sqrt_xi: &[BigRational]) -> Self {
        let mut out = self.empty_like();
        let zeros = vec![0; self.sites.len()];
        for (k, c) in &self.terms {
            let mut p = XiPoly::new();
            p.add_term(k.xi_half.clone(), BigRational::one());
            let v = p.eval_exact(sqrt_xi);
            out.insert(AAKey { xi_half: zeros.clone(), ..k.clone() }, c.scale(&v));
        }
        out
    }

    /// Numerical value at `(ξ, y, θ)` on the sites, exterior amplitudes from `ext`, and `‖u‖² = mu`.
    pub fn evaluate(&self, xi: &[f64], y: &[f64], theta: &[f64], ext: &State, mu: f64) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let mut v = c.to_c64() * mu.powi(k.mass_power as i32);
            for i in 0..self.sites.len() {
                v *= xi[i].powf(f64::from(k.xi_half[i]) / 2.0) * y[i].powi(k.actions[i] as i32);
                v *= C64::from_polar(1.0, f64::from(k.angle[i]) * theta[i]);
            }
            for f in k.exterior.factors() {
                if f.mode.unsigned_abs() as usize > ext.cutoff() {
                    return Err(Error::ModeOutOfRange { mode: f.mode, cutoff: ext.cutoff() });
                }
                let z = ext.get(f.mode);
                v *= z.powu(u32::from(f.plus)) * z.conj().powu(u32::from(f.minus));
            }
            total += v;
        }
        Ok(total)
    }

    /// `Σ |c|·ξ^{h/2}` at the given `ξ`: size of the terms on the torus scale.
    pub fn majorant_norm(&self, xi: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let m: f64 = k.xi_half.iter().zip(xi).map(|(&h, &x)| x.powf(f64::from(h) / 2.0)).product();
                c.abs_f64() * m
            })
            .sum()
    }
}

/// `open_sites(H, spec)`: opens `spec.sites` in a Fourier Hamiltonian.
pub fn open_sites(h: &Hamiltonian, spec: &OpeningSpec) -> Result<AAHamiltonian> {
    AAHamiltonian::from_fourier(h).open(spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TbrParams {
    /// The next site to be opened, still exterior here.
    pub new_site: i32,
    pub exterior_degree_max: u32,
    pub action_power_max: u32,
}

impl TbrParams {
    pub fn new(new_site: i32) -> Self {
        TbrParams { new_site, exterior_degree_max: 3, action_power_max: 10000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "class")]
pub enum Projection {
    Int,
    Ajet,
    Nor,
    Rem,
    Tbr(TbrParams),
}

impl FromStr for Projection {
    type Err = Error;

    /// `int`, `ajet`, `nor`, `rem`, or `tbr:<site>` (default limits).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "int" => Ok(Projection::Int),
            "ajet" => Ok(Projection::Ajet),
            "nor" => Ok(Projection::Nor),
            "rem" => Ok(Projection::Rem),
            _ => match s.strip_prefix("tbr:").map(str::parse::<i32>) {
                Some(Ok(site)) => Ok(Projection::Tbr(TbrParams::new(site))),
                _ => Err(Error::UnknownProjection(s.to_string())),
            },
        }
    }
}

impl Projection {
    pub fn contains(&self, k: &AAKey) -> bool {
        let q = k.exterior.num_pairs() as u32;
        match self {
            Projection::Int => k.is_integrable(),
            Projection::Ajet => !k.is_integrable() && k.action_order() <= 2 && q <= 3,
            Projection::Nor => k.is_integrable() && 2 * k.action_order() + q <= 4,
            Projection::Rem => !Projection::Nor.contains(k) && !Projection::Ajet.contains(k),
            Projection::Tbr(p) => {
                if k.is_integrable() {
                    return false;
                }
                let (mut own, mut other) = (0u32, 0u32);
                for f in k.exterior.factors() {
                    if f.mode == p.new_site {
                        own += f.count();
                    } else {
                        other += f.count();
                    }
                }
                other <= p.exterior_degree_max && own <= p.action_power_max
            }
        }
    }
}

pub fn project(h: &AAHamiltonian, class: Projection) -> AAHamiltonian {
    h.filter(|k, _| class.contains(k))
}

/// `{F, G} = 2 Σ_S (∂_y F ∂_θ G − ∂_θ F ∂_y G) + 2i Σ_ext (∂_ū F ∂_u G − ∂_u F ∂_ū G)`,
/// keeping terms of degree `≤ bound`. Mass powers are carried along untouched, which is exact
/// when both arguments conserve mass.
pub fn aa_bracket(a: &AAHamiltonian, b: &AAHamiltonian, bound: Option<u32>) -> Result<AAHamiltonian> {
    if a.sites != b.sites {
        return Err(Error::InvalidArgument("brackets need the same opened sites".into()));
    }
    let mut out = a.empty_like();
    let n = a.sites.len();
    let two_i = Coeff::imag(rat(2));
    for (ka, ca) in &a.terms {
        for (kb, cb) in &b.terms {
            let cc = ca * cb;
            let merged = |ext: MonoKey, actions: Vec<u32>| AAKey {
                angle: ka.angle.iter().zip(&kb.angle).map(|(x, y)| x + y).collect(),
                actions,
                exterior: ext,
                mass_power: ka.mass_power + kb.mass_power,
                xi_half: ka.xi_half.iter().zip(&kb.xi_half).map(|(x, y)| x + y).collect(),
            };
            let base_deg = ka.degree() + kb.degree();
            if bound.is_some_and(|bd| base_deg >= 2 && base_deg - 2 > bd) {
                continue;
            }
            // Site part: ∂_θ brings i·k, ∂_y lowers the action power.
            for i in 0..n {
                let w = i64::from(ka.actions[i]) * i64::from(kb.angle[i]) - i64::from(ka.angle[i]) * i64::from(kb.actions[i]);
                if w == 0 {
                    continue;
                }
                // Both contributions land on the same monomial, with one y_i removed.
                let mut m: Vec<u32> = ka.actions.iter().zip(&kb.actions).map(|(x, y)| x + y).collect();
                m[i] -= 1;
                let key = merged(ka.exterior.mul(&kb.exterior), m);
                out.insert(key, (&cc * &two_i).scale(&rat(w)));
            }
            // Exterior part.
            for fa in ka.exterior.factors() {
                let Some(fb) = kb.exterior.factor(fa.mode) else { continue };
                let w = i64::from(fa.minus) * i64::from(fb.plus) - i64::from(fa.plus) * i64::from(fb.minus);
                if w == 0 {
                    continue;
                }
                let actions = ka.actions.iter().zip(&kb.actions).map(|(x, y)| x + y).collect();
                let key = merged(ka.exterior.contract(&kb.exterior, fa.mode), actions);
                out.insert(key, (&cc * &two_i).scale(&rat(w)));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamcore::ratio;

    fn spec(sites: &[i32], y_order: u32) -> OpeningSpec {
        OpeningSpec { sites: sites.to_vec(), xi: vec![0.1; sites.len()], window: None, y_order }
    }

    #[test]
    fn opening_an_action_is_exact() {
        let h = Hamiltonian::monomial(&[(1, 1), (1, -1)], 0, Coeff::one()).unwrap();
        let aa = open_sites(&h, &spec(&[1], 4)).unwrap();
        assert_eq!(aa.len(), 2);
        for (k, c) in aa.terms() {
            assert_eq!(*c, Coeff::one());
            assert!((k.xi_half == vec![2] && k.actions == vec![0]) || (k.xi_half == vec![0] && k.actions == vec![1]));
        }
    }

    #[test]
    fn opening_a_square_action() {
        let h = Hamiltonian::monomial(&[(1, 1), (1, 1), (1, -1), (1, -1)], 0, Coeff::one()).unwrap();
        let aa = open_sites(&h, &spec(&[1], 4)).unwrap();
        let coeffs: Vec<(i32, u32, Coeff)> = aa.terms().map(|(k, c)| (k.xi_half[0], k.actions[0], c.clone())).collect();
        assert_eq!(coeffs.len(), 3);
        assert!(coeffs.contains(&(4, 0, Coeff::one())));
        assert!(coeffs.contains(&(2, 1, Coeff::from_int(2))));
        assert!(coeffs.contains(&(0, 2, Coeff::one())));
    }

    #[test]
    fn half_power_series() {
        let s = action_series(1, 3);
        assert_eq!(s[0], (1, 0, rat(1)));
        assert_eq!(s[1], (-1, 1, ratio(1, 2)));
        assert_eq!(s[2], (-3, 2, ratio(-1, 8)));
        assert_eq!(s[3], (-5, 3, ratio(1, 16)));
    }

    #[test]
    fn zero_xi_is_singular() {
        let h = Hamiltonian::z2(2);
        let mut sp = spec(&[1], 2);
        sp.xi = vec![0.0];
        assert!(matches!(open_sites(&h, &sp), Err(Error::SingularOpening { site: 1 })));
    }

    #[test]
    fn unknown_projection() {
        assert!(matches!("abc".parse::<Projection>(), Err(Error::UnknownProjection(_))));
        assert_eq!("tbr:3".parse::<Projection>().unwrap(), Projection::Tbr(TbrParams::new(3)));
    }

    #[test]
    fn bracket_of_action_and_angle() {
        // {y, e^{iθ}} = 2·(i·1)·e^{iθ}.
        let mut a = AAHamiltonian { sites: vec![1], y_order: 2, terms: BTreeMap::new() };
        let mut b = a.clone();
        let ext = MonoKey::pure_mass(0);
        a.insert(AAKey { angle: vec![0], actions: vec![1], exterior: ext.clone(), mass_power: 0, xi_half: vec![0] }, Coeff::one());
        b.insert(AAKey { angle: vec![1], actions: vec![0], exterior: ext, mass_power: 0, xi_half: vec![0] }, Coeff::one());
        let br = aa_bracket(&a, &b, None).unwrap();
        assert_eq!(br.len(), 1);
        assert_eq!(br.terms().next().unwrap().1, &Coeff::imag(rat(2)));
    }
}
