//! Divisors, pairing classes, exhaustive resonance scans and the Birkhoff
//! normal-form engine.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use num::rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamcore::multiset::multisets;
use crate::hamcore::{japanese, poisson_bracket_bounded, Coeff, Factor, Hamiltonian, MonoKey, Sign, Truncation};

pub fn divisor(key: &MonoKey) -> i64 {
    key.divisor()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingClass {
    Paired,
    Unpaired,
}

pub fn pairing_class(key: &MonoKey) -> PairingClass {
    if key.is_paired() {
        PairingClass::Paired
    } else {
        PairingClass::Unpaired
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DivisorRecord {
    pub pairs: Vec<(i32, Sign)>,
    pub mass_power: u32,
    pub omega: i64,
    pub paired: bool,
    pub l1_star: u32,
    pub l3_star: u32,
}

impl DivisorRecord {
    pub fn new(key: &MonoKey) -> Self {
        DivisorRecord {
            pairs: key.pairs(),
            mass_power: key.mass_power(),
            omega: key.divisor(),
            paired: key.is_paired(),
            l1_star: key.l_star(1).unwrap_or(0),
            l3_star: key.l_star(3).unwrap_or(0),
        }
    }
}

/// `(G, M)` with `M` the paired terms and `G = H − M`.
pub fn split_gm(h: &Hamiltonian) -> (Hamiltonian, Hamiltonian) {
    (h.filter(|k, _| !k.is_paired()), h.filter(|k, _| k.is_paired()))
}

/// `|ℓ₃*|` with the value 1 substituted when it is 0 or absent.
fn l3_or_one(key: &MonoKey) -> i64 {
    key.l_star(3).filter(|&v| v > 0).map_or(1, i64::from)
}

/// Non-negative exact ratio `num/den`, compared by cross-multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Frac {
    num: i64,
    den: i64,
}

impl Frac {
    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        (i128::from(self.num) * i128::from(other.den)).cmp(&(i128::from(other.num) * i128::from(self.den)))
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanParameters {
    pub q: u32,
    pub n: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divisor_bound: Option<i64>,
}

/// Result of an exhaustive scan over unpaired conservative tuples.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanReport {
    /// Extremal constant, `None` on an empty set.
    pub constant: Option<f64>,
    /// Exact value as `p/q`.
    pub constant_exact: Option<String>,
    pub witness: Option<DivisorRecord>,
    pub set_size: u64,
    /// Unpaired tuples with `Ω = 0` (excluded from the lower-bound minimum).
    pub zero_divisor_count: u64,
    pub parameters: ScanParameters,
}

/// Visits every zero-mass, zero-momentum, unpaired key with `q` plus and `q`
/// minus factors in `[−N, N]`. Work is split over groups of equal momentum.
fn scan_unpaired<T, F, R>(q: u32, n: i32, init: impl Fn() -> T + Sync + Send, visit: F, reduce: R) -> T
where
    T: Send,
    F: Fn(&mut T, &MonoKey) + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    let mut by_sum: BTreeMap<i64, Vec<Vec<i32>>> = BTreeMap::new();
    for m in multisets(-n, n, q as usize) {
        by_sum.entry(m.iter().map(|&x| i64::from(x)).sum()).or_default().push(m);
    }
    let groups: Vec<Vec<Vec<i32>>> = by_sum.into_values().collect();
    groups
        .par_iter()
        .fold(&init, |mut acc, group| {
            for a in group {
                for b in group {
                    let mut fs: Vec<Factor> = a.iter().map(|&m| Factor::new(m, 1, 0)).collect();
                    fs.extend(b.iter().map(|&m| Factor::new(m, 0, 1)));
                    let key = MonoKey::from_factors(fs, 0);
                    if !key.is_paired() {
                        visit(&mut acc, &key);
                    }
                }
            }
            acc
        })
        .reduce(&init, &reduce)
}

type Extremum = Option<(Frac, MonoKey)>;

struct ScanAcc {
    best: Extremum,
    size: u64,
    zeros: u64,
}

fn better(a: Extremum, b: Extremum, want_max: bool) -> Extremum {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            let ord = if want_max { y.0.cmp(&x.0) } else { x.0.cmp(&y.0) };
            // Ties go to the smaller key, so the witness does not depend on scheduling.
            Some(if ord.then_with(|| x.1.cmp(&y.1)) != Ordering::Greater { x } else { y })
        }
    }
}

fn finish(acc: ScanAcc, params: ScanParameters) -> ScanReport {
    ScanReport {
        constant: acc.best.as_ref().map(|(f, _)| f.value()),
        constant_exact: acc.best.as_ref().map(|(f, _)| BigRational::new(f.num.into(), f.den.into()).to_string()),
        witness: acc.best.as_ref().map(|(_, k)| DivisorRecord::new(k)),
        set_size: acc.size,
        zero_divisor_count: acc.zeros,
        parameters: params,
    }
}

/// Max of `|ℓ₁*|/|ℓ₃*|²` over unpaired conservative tuples with `|Ω| ≤ divisor_bound`.
pub fn verify_quasi_resonant_implication(q: u32, n: i32, divisor_bound: i64) -> Result<ScanReport> {
    if q < 2 || n < 1 {
        return Err(Error::InvalidArgument(format!("need q ≥ 2 and N ≥ 1, got q = {q}, N = {n}")));
    }
    let acc = scan_unpaired(
        q,
        n,
        || ScanAcc { best: None, size: 0, zeros: 0 },
        |acc, key| {
            let omega = key.divisor();
            if omega.abs() > divisor_bound {
                return;
            }
            acc.size += 1;
            if omega == 0 {
                acc.zeros += 1;
            }
            let l3 = l3_or_one(key);
            let cand = Some((Frac { num: i64::from(key.l_star(1).unwrap_or(0)), den: l3 * l3 }, key.clone()));
            acc.best = better(acc.best.take(), cand, true);
        },
        |a, b| ScanAcc { best: better(a.best, b.best, true), size: a.size + b.size, zeros: a.zeros + b.zeros },
    );
    Ok(finish(acc, ScanParameters { q, n, divisor_bound: Some(divisor_bound) }))
}

/// Min of `|Ω|·|ℓ₃*|²/|ℓ₁*|` over unpaired conservative tuples with `Ω ≠ 0`.
pub fn verify_divisor_lower_bound(q: u32, n: i32) -> Result<ScanReport> {
    if q < 2 || n < 1 {
        return Err(Error::InvalidArgument(format!("need q ≥ 2 and N ≥ 1, got q = {q}, N = {n}")));
    }
    let acc = scan_unpaired(
        q,
        n,
        || ScanAcc { best: None, size: 0, zeros: 0 },
        |acc, key| {
            let omega = key.divisor();
            if omega == 0 {
                acc.zeros += 1;
                return;
            }
            acc.size += 1;
            let l3 = l3_or_one(key);
            let l1 = i64::from(key.l_star(1).unwrap_or(1)).max(1);
            let cand = Some((Frac { num: omega.abs() * l3 * l3, den: l1 }, key.clone()));
            acc.best = better(acc.best.take(), cand, false);
        },
        |a, b| ScanAcc { best: better(a.best, b.best, false), size: a.size + b.size, zeros: a.zeros + b.zeros },
    );
    Ok(finish(acc, ScanParameters { q, n, divisor_bound: None }))
}

/// Which degree-`d` terms a Birkhoff step removes: `|Ω| ≥ bound(q)`, `2q` Fourier factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum ThresholdPolicy {
    /// Every non-integrable term with `Ω ≠ 0`.
    AllNonresonant,
    /// Only terms with `|Ω| ≥ c·q⁹`.
    Q9 { c: f64 },
    /// `|Ω| ≥ bounds[q]`; orders without an entry are left alone.
    Custom { bounds: BTreeMap<u32, f64> },
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::AllNonresonant
    }
}

impl ThresholdPolicy {
    pub fn bound(&self, q: u32) -> f64 {
        match self {
            ThresholdPolicy::AllNonresonant => 1.0,
            ThresholdPolicy::Q9 { c } => c * f64::from(q).powi(9),
            ThresholdPolicy::Custom { bounds } => bounds.get(&q).copied().unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Selection {
    pub policy: ThresholdPolicy,
    /// Leave paired terms in place even when their divisor is large.
    #[serde(default)]
    pub exclude_paired: bool,
}

impl Selection {
    pub fn new(policy: ThresholdPolicy) -> Self {
        Selection { policy, exclude_paired: false }
    }

    pub fn excluding_paired(mut self) -> Self {
        self.exclude_paired = true;
        self
    }

    /// Whether `key` is removed; a selected resonant term is an error.
    pub fn selects(&self, key: &MonoKey) -> Result<bool> {
        if key.is_integrable() || (self.exclude_paired && key.is_paired()) {
            return Ok(false);
        }
        let q = (key.num_pairs() / 2) as u32;
        let omega = key.divisor();
        if (omega.abs() as f64) < self.policy.bound(q) {
            return Ok(false);
        }
        if omega == 0 {
            return Err(Error::PolicyViolation(format!("{:?}", key.pairs())));
        }
        Ok(true)
    }
}

/// `exp(ad_χ) H = Σ_j ad_χ^j H / j!`, truncated at `bound`.
pub fn lie_transform(h: &Hamiltonian, chi: &Hamiltonian, bound: Option<u32>) -> Result<Hamiltonian> {
    if chi.is_empty() {
        return Ok(h.clone());
    }
    let bound = bound.or(h.degree_bound()).ok_or_else(|| {
        Error::InvalidArgument("a Lie transform needs a finite degree bound".into())
    })?;
    let mut out = h.clone();
    out.set_degree_bound(Some(bound));
    let mut term = out.clone();
    let mut j = 1i64;
    loop {
        term = poisson_bracket_bounded(chi, &term, Some(bound));
        term = term.scale_rational(&BigRational::new(1.into(), j.into()));
        out.add_assign(&term);
        if term.is_empty() {
            break;
        }
        j += 1;
    }
    Ok(out)
}

/// One cohomological step at degree `d`.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub degree: u32,
    pub hamiltonian: Hamiltonian,
    pub generator: Hamiltonian,
    /// Degree-`d` terms of the input that the generator removes.
    pub removed: Hamiltonian,
    pub min_abs_divisor: Option<i64>,
}

/// Removes the selected degree-`d` terms: `χ_m = H_m/(iΩ_m)` and `H' = exp(ad_χ) H`.
///
/// In coordinates `u = τ(v)` with `τ` the time-one flow of `−χ`, `H'(v) = H(u)`.
pub fn bnf_step(h: &Hamiltonian, degree: u32, selection: &Selection) -> Result<StepResult> {
    let mut generator = Hamiltonian::new();
    let mut removed = Hamiltonian::new();
    let mut min_abs: Option<i64> = None;
    for (k, c) in h.terms().filter(|(k, _)| k.degree() == degree) {
        if !selection.selects(k)? {
            continue;
        }
        let omega = k.divisor();
        min_abs = Some(min_abs.map_or(omega.abs(), |m| m.min(omega.abs())));
        generator.insert(k.clone(), c.div(&Coeff::imag(BigRational::from_integer(omega.into()))))?;
        removed.insert(k.clone(), c.clone())?;
    }
    let hamiltonian = lie_transform(h, &generator, h.degree_bound())?;
    Ok(StepResult { degree, hamiltonian, generator, removed, min_abs_divisor: min_abs })
}

#[derive(Clone, Debug)]
pub struct NormalFormResult {
    pub order: u32,
    pub normal_form: Hamiltonian,
    /// `(degree, χ)` in the order applied.
    pub generators: Vec<(u32, Hamiltonian)>,
    pub removed: Vec<(u32, Hamiltonian)>,
    pub min_abs_divisor: Option<i64>,
    pub truncation: Truncation,
}

/// Runs `bnf_step` for `d = 4, 6, …, order`.
pub fn birkhoff_normal_form(h: &Hamiltonian, order: u32, selection: &Selection) -> Result<NormalFormResult> {
    if let Some(b) = h.degree_bound() {
        if order > b {
            return Err(Error::InvalidArgument(format!("order {order} exceeds the degree bound {b}")));
        }
    }
    let mut cur = h.clone();
    let mut generators = Vec::new();
    let mut removed = Vec::new();
    let mut min_abs: Option<i64> = None;
    let mut d = 4;
    while d <= order {
        let step = bnf_step(&cur, d, selection)?;
        if let Some(m) = step.min_abs_divisor {
            min_abs = Some(min_abs.map_or(m, |x| x.min(m)));
        }
        cur = step.hamiltonian;
        generators.push((d, step.generator));
        removed.push((d, step.removed));
        d += 2;
    }
    let truncation = *cur.truncation();
    Ok(NormalFormResult { order, normal_form: cur, generators, removed, min_abs_divisor: min_abs, truncation })
}

/// Fully paired (action-product) terms of the given degree.
pub fn extract_integrable_part(h: &Hamiltonian, degree: u32) -> Hamiltonian {
    h.filter(|k, _| k.is_integrable() && k.degree() == degree)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SmoothingViolation {
    pub pairs: Vec<(i32, Sign)>,
    pub mass_power: u32,
    pub coeff: String,
    /// `|coeff|` divided by the allowed bound.
    pub excess: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SmoothingReport {
    pub delta: f64,
    pub c: f64,
    pub terms: usize,
    pub pass_ratio: f64,
    pub worst: Option<SmoothingViolation>,
    /// Smallest `C` for which every term satisfies the bound.
    pub minimal_c: f64,
}

/// `min(1, ⟨ℓ₃*⟩^{2δ}/⟨ℓ₁*⟩^δ)`.
fn smoothing_shape(key: &MonoKey, delta: f64) -> f64 {
    let l1 = japanese(f64::from(key.l_star(1).unwrap_or(0)));
    let l3 = if key.num_pairs() < 3 { 1.0 } else { japanese(f64::from(key.l_star(3).unwrap_or(0))) };
    (l3.powf(2.0 * delta) / l1.powf(delta)).min(1.0)
}

/// Checks `|coeff| ≤ C^{q+2n}·min(1, ⟨ℓ₃*⟩^{2δ}/⟨ℓ₁*⟩^δ)` term by term.
pub fn smoothing_bound_report(h: &Hamiltonian, delta: f64, c: f64) -> Result<SmoothingReport> {
    if delta < 0.0 || c <= 0.0 {
        return Err(Error::InvalidArgument(format!("need δ ≥ 0 and C > 0, got δ = {delta}, C = {c}")));
    }
    let mut pass = 0usize;
    let mut worst: Option<SmoothingViolation> = None;
    let mut minimal_c = 0.0f64;
    for (k, coeff) in h.terms() {
        let shape = smoothing_shape(k, delta);
        let deg = k.degree() as i32;
        let a = coeff.abs_f64();
        let excess = a / (c.powi(deg) * shape);
        if excess <= 1.0 {
            pass += 1;
        }
        if deg > 0 {
            minimal_c = minimal_c.max((a / shape).powf(1.0 / f64::from(deg)));
        }
        if worst.as_ref().is_none_or(|w| excess > w.excess) {
            worst = Some(SmoothingViolation { pairs: k.pairs(), mass_power: k.mass_power(), coeff: coeff.to_string(), excess });
        }
    }
    let terms = h.len();
    Ok(SmoothingReport {
        delta,
        c,
        terms,
        pass_ratio: if terms == 0 { 1.0 } else { pass as f64 / terms as f64 },
        worst,
        minimal_c,
    })
}

/// Divisor control for paired monomials created by `{χ-term, H-term}`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PairedGenerationReport {
    pub generated: u64,
    /// Min over generated paired terms of `|Ω_source|·|h₃*|²/|h₁*|`.
    pub constant: Option<f64>,
    pub source: Option<DivisorRecord>,
    pub product: Option<DivisorRecord>,
}

/// Scans monomial-level brackets of every generator term against every term of `h`.
pub fn paired_generation_report(chi: &Hamiltonian, h: &Hamiltonian) -> PairedGenerationReport {
    let h_terms: Vec<&MonoKey> = h.terms().map(|(k, _)| k).collect();
    let mut by_mode: HashMap<i32, Vec<usize>> = HashMap::new();
    for (i, k) in h_terms.iter().enumerate() {
        for f in k.factors() {
            by_mode.entry(f.mode).or_default().push(i);
        }
    }
    let chi_terms: Vec<&MonoKey> = chi.terms().map(|(k, _)| k).collect();
    type Best = Option<(Frac, MonoKey, MonoKey)>;
    let pick = |a: Best, b: Best| -> Best {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => Some(if (x.0, &x.1, &x.2) <= (y.0, &y.1, &y.2) { x } else { y }),
        }
    };
    let (count, best) = chi_terms
        .par_iter()
        .fold(
            || (0u64, None),
            |(mut count, mut best): (u64, Best), ka| {
                let omega = ka.divisor().abs();
                for fa in ka.factors() {
                    let Some(partners) = by_mode.get(&fa.mode) else { continue };
                    for &i in partners {
                        let kb = h_terms[i];
                        let fb = kb.factor(fa.mode).expect("indexed");
                        let w = i64::from(fa.minus) * i64::from(fb.plus) - i64::from(fa.plus) * i64::from(fb.minus);
                        if w == 0 {
                            continue;
                        }
                        let prod = ka.contract(kb, fa.mode);
                        if prod.is_integrable() || !prod.is_paired() {
                            continue;
                        }
                        count += 1;
                        let l3 = l3_or_one(&prod);
                        let l1 = i64::from(prod.l_star(1).unwrap_or(1)).max(1);
                        let cand = Some((Frac { num: omega * l3 * l3, den: l1 }, (*ka).clone(), prod));
                        best = pick(best, cand);
                    }
                }
                (count, best)
            },
        )
        .reduce(|| (0, None), |a, b| (a.0 + b.0, pick(a.1, b.1)));
    PairedGenerationReport {
        generated: count,
        constant: best.as_ref().map(|b| b.0.value()),
        source: best.as_ref().map(|b| DivisorRecord::new(&b.1)),
        product: best.as_ref().map(|b| DivisorRecord::new(&b.2)),
    }
}

/// Two-site sixth-order integrable terms `c·|u_k|²|u_ℓ|⁴`, `k ≠ ℓ`.
pub fn two_site_sextic_terms(h: &Hamiltonian) -> Vec<(i32, i32, Coeff)> {
    let mut out = Vec::new();
    for (k, c) in h.terms() {
        if k.mass_power() != 0 || !k.is_integrable() || k.degree() != 6 {
            continue;
        }
        if let [a, b] = k.factors() {
            let (single, double) = match (a.plus, b.plus) {
                (1, 2) => (a.mode, b.mode),
                (2, 1) => (b.mode, a.mode),
                _ => continue,
            };
            out.push((single, double, c.clone()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;

    fn key(pairs: &[(i32, Sign)]) -> MonoKey {
        MonoKey::from_pairs(pairs, 0).unwrap()
    }

    #[test]
    fn divisor_examples() {
        assert_eq!(divisor(&key(&[(3, 1), (1, -1), (-1, 1), (1, -1)])), 8);
        assert_eq!(divisor(&key(&[(5, 1), (5, -1), (2, 1), (2, -1)])), 0);
        assert_eq!(divisor(&key(&[(4, 1), (3, -1), (2, 1), (3, -1)])), 2);
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pairing_class(&key(&[(5, 1), (5, -1), (1, 1), (1, -1)])), PairingClass::Paired);
        assert_eq!(pairing_class(&key(&[(4, 1), (3, -1), (2, 1), (3, -1)])), PairingClass::Unpaired);
    }

    #[test]
    fn split_of_z2_and_of_an_unpaired_term() {
        let z2 = Hamiltonian::z2(3);
        let (g, m) = split_gm(&z2);
        assert!(g.is_empty());
        assert_eq!(m, z2);
        let h = Hamiltonian::monomial(&[(4, 1), (3, -1), (2, 1), (3, -1)], 0, Coeff::one()).unwrap();
        let (g, m) = split_gm(&h);
        assert_eq!(g, h);
        assert!(m.is_empty());
    }

    #[test]
    fn resonant_selection_is_a_policy_violation() {
        let k = key(&[(7, -1), (6, 1), (5, 1), (3, -1), (2, -1), (1, 1)]);
        assert_eq!(k.divisor(), 0);
        assert!(!k.is_integrable());
        let sel = Selection::new(ThresholdPolicy::Custom { bounds: [(3, 0.0)].into() });
        assert!(matches!(sel.selects(&k), Err(Error::PolicyViolation(_))));
        assert!(!Selection::default().selects(&k).unwrap());
    }

    #[test]
    fn threshold_above_divisor_selects_nothing() {
        let mut h = Hamiltonian::z2(4);
        let m = Hamiltonian::monomial(&[(3, 1), (1, -1), (-1, 1), (1, -1)], 0, Coeff::one()).unwrap();
        h.add_assign(&m);
        h.add_assign(&Hamiltonian::monomial(&[(3, -1), (1, 1), (-1, -1), (1, 1)], 0, Coeff::one()).unwrap());
        h.set_degree_bound(Some(6));
        let sel = Selection::new(ThresholdPolicy::Custom { bounds: [(2, 9.0)].into() });
        let step = bnf_step(&h, 4, &sel).unwrap();
        assert!(step.generator.is_empty());
        assert_eq!(step.hamiltonian, h);
        let step = bnf_step(&h, 4, &Selection::default()).unwrap();
        assert_eq!(step.generator.len(), 2);
        assert!(step.hamiltonian.homogeneous(4).is_empty());
    }

    #[test]
    fn generator_times_divisor_recovers_removed_terms() {
        let mut h = Hamiltonian::z2(4);
        h.add_assign(&crate::nlsham::expand_lp_norm(2, 4).scale(&Coeff::from_ratio(1, 4)));
        h.set_degree_bound(Some(6));
        let step = bnf_step(&h, 4, &Selection::default()).unwrap();
        assert_eq!(step.generator.len(), step.removed.len());
        for (k, c) in step.generator.terms() {
            let back = c * &Coeff::imag(BigRational::from_integer(k.divisor().into()));
            assert_eq!(back, step.removed.coeff(k));
        }
    }

    #[test]
    fn order_two_is_the_identity() {
        let h = crate::nlsham::build_nls_hamiltonian(&crate::nlsham::NonlinearitySpec::cubic(), 3, 2).unwrap();
        let r = birkhoff_normal_form(&h, 2, &Selection::default()).unwrap();
        assert_eq!(r.normal_form, h);
        assert!(r.generators.is_empty());
    }

    #[test]
    fn smoothing_planted_violator() {
        let mut h = Hamiltonian::z2(3);
        let r = smoothing_bound_report(&h, 1.0, 10.0).unwrap();
        assert!(r.minimal_c.is_finite());
        h.add_assign(&Hamiltonian::monomial(&[(3, 1), (1, -1), (-1, 1), (1, -1)], 0, Coeff::from_int(1000)).unwrap());
        let r = smoothing_bound_report(&h, 1.0, 2.0).unwrap();
        assert_eq!(r.worst.unwrap().coeff, "1000");
    }
}
