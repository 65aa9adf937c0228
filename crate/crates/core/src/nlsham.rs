//! NLS Hamiltonian from Taylor data of the nonlinearity, and its Wick-ordered blocks.

use std::collections::{BTreeMap, HashMap};

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamcore::multiset::{binomial, factorial, multiplicity_factorial, multisets};
use crate::hamcore::{Coeff, Factor, Hamiltonian, MonoKey, NumericHamiltonian, State, Truncation};

/// Finite Taylor data `f^(m)(0)`, `m = 1, 2, ...`, of the nonlinearity `f`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NonlinearitySpec {
    #[serde(serialize_with = "ser_rationals")]
    derivatives: Vec<BigRational>,
    /// `f` is a polynomial: derivatives past the list are zero instead of missing.
    polynomial: bool,
}

fn ser_rationals<S: serde::Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

impl NonlinearitySpec {
    /// `derivatives[m-1] = f^(m)(0)`; requires `f'(0) ≠ 0`.
    pub fn new(derivatives: Vec<BigRational>, polynomial: bool) -> Result<Self> {
        match derivatives.first() {
            Some(d) if !d.is_zero() => Ok(NonlinearitySpec { derivatives, polynomial }),
            _ => Err(Error::InvalidArgument("the nonlinearity needs f'(0) ≠ 0".into())),
        }
    }

    /// Parses derivative strings such as `"1"`, `"-3/2"`.
    pub fn parse(derivatives: &[impl AsRef<str>], polynomial: bool) -> Result<Self> {
        let ds = derivatives
            .iter()
            .map(|s| {
                s.as_ref()
                    .trim()
                    .parse::<BigRational>()
                    .map_err(|e| Error::Parse(format!("derivative `{}`: {e}", s.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ds, polynomial)
    }

    /// `f(z) = z`.
    pub fn cubic() -> Self {
        NonlinearitySpec { derivatives: vec![BigRational::one()], polynomial: true }
    }

    pub fn derivatives(&self) -> &[BigRational] {
        &self.derivatives
    }

    pub fn is_polynomial(&self) -> bool {
        self.polynomial
    }

    pub fn derivative(&self, order: usize) -> Result<BigRational> {
        if order == 0 {
            return Ok(BigRational::zero());
        }
        match self.derivatives.get(order - 1) {
            Some(d) => Ok(d.clone()),
            None if self.polynomial => Ok(BigRational::zero()),
            None => Err(Error::MissingDerivative { order }),
        }
    }
}

/// `a_{2q} = f^(q-1)(0) / (2 q!)` for `2 ≤ q ≤ qmax`.
pub fn taylor_coefficients(spec: &NonlinearitySpec, qmax: u32) -> Result<BTreeMap<u32, BigRational>> {
    if qmax < 2 {
        return Err(Error::InvalidArgument(format!("qmax must be at least 2, got {qmax}")));
    }
    (2..=qmax)
        .map(|q| {
            let d = spec.derivative(q as usize - 1)?;
            Ok((q, d / BigRational::from_integer(BigInt::from(2 * factorial(u64::from(q))))))
        })
        .collect()
}

/// `‖u‖_{L^{2q}}^{2q} = Σ u_{a₁}···u_{a_q} ū_{b₁}···ū_{b_q}` over `Σa = Σb`, all modes in `[−K, K]`.
///
/// The merged coefficient of a key with plus multiplicities `α` and minus
/// multiplicities `β` is `(q!)² / (α! β!)`.
pub fn expand_lp_norm(q: u32, cutoff: i32) -> Hamiltonian {
    if q == 0 {
        return Hamiltonian::constant(Coeff::one());
    }
    let qf = factorial(u64::from(q));
    let mut by_sum: BTreeMap<i64, Vec<(Vec<i32>, u64)>> = BTreeMap::new();
    for m in multisets(-cutoff, cutoff, q as usize) {
        let s = m.iter().map(|&x| i64::from(x)).sum();
        let w = multiplicity_factorial(&m);
        by_sum.entry(s).or_default().push((m, w));
    }
    let groups: Vec<&Vec<(Vec<i32>, u64)>> = by_sum.values().collect();
    let acc: HashMap<MonoKey, Coeff> = groups
        .par_iter()
        .map(|group| {
            let mut acc = HashMap::new();
            for (a, wa) in group.iter() {
                for (b, wb) in group.iter() {
                    let mut fs: Vec<Factor> = a.iter().map(|&m| Factor::new(m, 1, 0)).collect();
                    fs.extend(b.iter().map(|&m| Factor::new(m, 0, 1)));
                    let key = MonoKey::from_factors(fs, 0);
                    let c = BigRational::new(BigInt::from(qf * qf), BigInt::from(wa * wb));
                    acc.insert(key, Coeff::real(c));
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut x, y| {
            x.extend(y);
            x
        });
    Hamiltonian::from_accumulator(acc, None, Truncation::default())
}

/// `Z₂ + Σ_{q=2}^{rmax} a_{2q} ‖u‖_{L^{2q}}^{2q}` on `|k| ≤ K`, with degree bound `2·rmax`.
pub fn build_nls_hamiltonian(spec: &NonlinearitySpec, cutoff: i32, rmax: u32) -> Result<Hamiltonian> {
    let coeffs = taylor_coefficients(spec, rmax)?;
    let mut h = Hamiltonian::z2(cutoff);
    for (q, a) in &coeffs {
        if a.is_zero() {
            continue;
        }
        h.add_assign(&expand_lp_norm(*q, cutoff).scale_rational(a));
    }
    h.set_degree_bound(Some(2 * rmax));
    Ok(h)
}

/// `Σ_{|k|≤K} |u_k|^{2p}`.
pub fn newton_sum(p: u32, cutoff: i32) -> Hamiltonian {
    let mut h = Hamiltonian::new();
    for k in -cutoff..=cutoff {
        h.insert(MonoKey::action(k, p as u16), Coeff::one()).expect("actions are conservative");
    }
    h
}

/// `(p!/q!)·C(p, q)`, the weight shared by the Wick expansion and its inverse.
fn wick_weight(p: u32, q: u32) -> BigRational {
    let (p, q) = (u64::from(p), u64::from(q));
    BigRational::from_integer(BigInt::from(factorial(p) / factorial(q) * binomial(p, q)))
}

/// Wick-ordered block `W_{2p} = Σ_{q=0}^{p} (−1)^{p−q} (p!/q!) C(p,q) ‖u‖^{2(p−q)} ‖u‖_{L^{2q}}^{2q}`.
#[derive(Clone, Debug)]
pub struct WickBlock {
    pub order: u32,
    pub cutoff: i32,
    /// Mass-power form: `‖u‖²` kept as a prefactor.
    pub hamiltonian: Hamiltonian,
}

pub fn wick_hamiltonian(p: u32, cutoff: i32) -> WickBlock {
    let mut h = Hamiltonian::new();
    for q in 0..=p {
        let mut w = wick_weight(p, q);
        if (p - q) % 2 == 1 {
            w = -w;
        }
        let lp = expand_lp_norm(q, cutoff);
        for (k, c) in lp.terms() {
            h.insert(k.with_mass_power(p - q), c.scale(&w)).expect("conservative");
        }
    }
    WickBlock { order: p, cutoff, hamiltonian: h }
}

impl WickBlock {
    /// Fourier form with every `‖u‖²` written as `Σ|u_k|²`.
    pub fn expanded(&self) -> Hamiltonian {
        self.hamiltonian.expand_mass_powers(self.cutoff)
    }

    /// Per-key coefficients of the expanded block under three normalizations.
    pub fn coefficient_table(&self) -> Vec<WickCoefficient> {
        self.expanded()
            .terms()
            .map(|(k, c)| WickCoefficient::new(k, &c.re))
            .collect()
    }
}

/// One coefficient of a Fourier polynomial with `2q` factors.
///
/// `merged` is the coefficient of the canonical key. `symmetric` spreads it
/// over the `(q!)²/(α!β!)` orderings that keep plus and minus slots apart,
/// `ordered` over all `(2q)!/(α!β!)` orderings of the factor list.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WickCoefficient {
    pub pairs: Vec<(i32, i8)>,
    #[serde(serialize_with = "ser_rational")]
    pub merged: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub symmetric: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub ordered: BigRational,
}

fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl WickCoefficient {
    fn new(key: &MonoKey, merged: &BigRational) -> Self {
        let nf = key.num_pairs() as u64;
        let half = nf / 2;
        let mult: u64 = key.factors().iter().map(|f| factorial(u64::from(f.plus)) * factorial(u64::from(f.minus))).product();
        let hq = factorial(half);
        let symmetric = merged * BigRational::new(BigInt::from(mult), BigInt::from(hq * hq));
        let ordered = merged * BigRational::new(BigInt::from(mult), BigInt::from(factorial(nf)));
        WickCoefficient { pairs: key.pairs(), merged: merged.clone(), symmetric, ordered }
    }
}

/// Outcome of the `|W| ≤ 2^p p!` check on a block.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoefficientBoundReport {
    pub order: u32,
    pub cutoff: i32,
    pub bound: u64,
    pub terms: usize,
    pub max_symmetric: f64,
    pub max_merged: f64,
    pub max_ordered: f64,
    pub worst: Option<Vec<(i32, i8)>>,
    pub pass: bool,
}

/// Checks the symmetric-slot coefficients of the expanded block against `2^p p!`.
pub fn coefficient_bound_report(block: &WickBlock) -> CoefficientBoundReport {
    let p = u64::from(block.order);
    let bound = (1u64 << p) * factorial(p);
    let bound_r = BigRational::from_integer(BigInt::from(bound));
    let table = block.coefficient_table();
    let mut worst: Option<&WickCoefficient> = None;
    let (mut ms, mut mm, mut mo) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
    for c in &table {
        if c.symmetric.abs() > ms {
            ms = c.symmetric.abs();
            worst = Some(c);
        }
        mm = mm.max(c.merged.abs());
        mo = mo.max(c.ordered.abs());
    }
    CoefficientBoundReport {
        order: block.order,
        cutoff: block.cutoff,
        bound,
        terms: table.len(),
        max_symmetric: crate::hamcore::rational_to_f64(&ms),
        max_merged: crate::hamcore::rational_to_f64(&mm),
        max_ordered: crate::hamcore::rational_to_f64(&mo),
        worst: worst.map(|w| w.pairs.clone()),
        pass: ms <= bound_r,
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OverpairingReport {
    pub monomials_checked: usize,
    pub pairings_checked: usize,
    pub violations: Vec<Vec<(i32, i8)>>,
    pub pass: bool,
}

/// Every conjugate pair `ℓ_i = ℓ_j`, `σ_iσ_j = −1` must have a third factor at the same mode.
pub fn overpairing_check(h: &Hamiltonian) -> OverpairingReport {
    let mut pairings = 0usize;
    let mut violations = Vec::new();
    for (k, _) in h.terms() {
        let mut bad = false;
        for f in k.factors() {
            if f.plus > 0 && f.minus > 0 {
                pairings += usize::from(f.plus) * usize::from(f.minus);
                if f.count() < 3 {
                    bad = true;
                }
            }
        }
        if bad {
            violations.push(k.pairs());
        }
    }
    OverpairingReport { monomials_checked: h.len(), pairings_checked: pairings, pass: violations.is_empty(), violations }
}

/// Over-pairing scan on the Fourier form of a Wick block.
pub fn overpairing_report(block: &WickBlock) -> OverpairingReport {
    overpairing_check(&block.expanded())
}

/// `Σ_{0≤q≤p, q≠1} ‖u‖^{2(p−q)} (p!/q!) C(p,q) W_{2q}` in mass-power form.
fn wick_recombination(p: u32, cutoff: i32) -> Hamiltonian {
    let mut h = Hamiltonian::new();
    for q in (0..=p).filter(|&q| q != 1) {
        let w = wick_weight(p, q);
        for (k, c) in wick_hamiltonian(q, cutoff).hamiltonian.terms() {
            h.insert(k.with_mass_power(k.mass_power() + p - q), c.scale(&w)).expect("conservative");
        }
    }
    h
}

/// Exact difference between `‖u‖_{L^{2p}}^{2p}` and its Wick recombination, in Fourier form.
pub fn wick_identity_difference(p: u32, cutoff: i32) -> Result<Hamiltonian> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("Wick identity needs p ≥ 2, got {p}")));
    }
    let rhs = wick_recombination(p, cutoff).expand_mass_powers(cutoff);
    Ok(expand_lp_norm(p, cutoff).sub(&rhs))
}

/// `|LHS − RHS|` of the Wick identity on one state, each side evaluated numerically.
pub fn wick_identity_residual(p: u32, cutoff: i32, state: &State) -> Result<f64> {
    Ok(wick_identity_residuals(p, cutoff, std::slice::from_ref(state))?[0])
}

/// Same over many states, compiling both sides once.
pub fn wick_identity_residuals(p: u32, cutoff: i32, states: &[State]) -> Result<Vec<f64>> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("Wick identity needs p ≥ 2, got {p}")));
    }
    if cutoff < 0 {
        return Err(Error::InvalidArgument(format!("negative cutoff {cutoff}")));
    }
    let k = cutoff as usize;
    let lhs = NumericHamiltonian::compile(&expand_lp_norm(p, cutoff), k)?;
    let blocks = (0..=p)
        .filter(|&q| q != 1)
        .map(|q| Ok((q, crate::hamcore::rational_to_f64(&wick_weight(p, q)), NumericHamiltonian::compile(&wick_hamiltonian(q, cutoff).hamiltonian, k)?)))
        .collect::<Result<Vec<_>>>()?;
    states
        .iter()
        .map(|s| {
            let mu = s.mass();
            let mut rhs = 0.0;
            for (q, w, h) in &blocks {
                rhs += mu.powi((p - q) as i32) * w * h.evaluate(s)?;
            }
            Ok((lhs.evaluate(s)? - rhs).abs())
        })
        .collect()
}
