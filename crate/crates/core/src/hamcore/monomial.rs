//! Canonical Fourier monomials `‖u‖^{2n} · Π_j u_{ℓ_j}^{σ_j}` with `u^{-1} = ū`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::hamcore::coeff::Coeff;

/// Sign of a Fourier factor: `+1` for `u_ℓ`, `-1` for `ū_ℓ`.
pub type Sign = i8;

/// All occurrences of one mode inside a monomial: `u_mode^plus · ū_mode^minus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub mode: i32,
    pub plus: u16,
    pub minus: u16,
}

impl Factor {
    pub fn new(mode: i32, plus: u16, minus: u16) -> Self {
        Factor { mode, plus, minus }
    }

    fn order_key(&self) -> (u32, i32) {
        (self.mode.unsigned_abs(), self.mode)
    }

    pub fn count(&self) -> u32 {
        u32::from(self.plus) + u32::from(self.minus)
    }
}

impl PartialOrd for Factor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Descending in `(|ℓ|, ℓ)`; ties (equal modes) never coexist in a canonical key.
impl Ord for Factor {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .order_key()
            .cmp(&self.order_key())
            .then(other.plus.cmp(&self.plus))
            .then(other.minus.cmp(&self.minus))
    }
}

/// Canonical key of a monomial: merged factors in canonical order plus the
/// mass power `n` of the `‖u‖_{L²}^{2n}` prefactor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct MonoKey {
    factors: Vec<Factor>,
    mass_power: u32,
}

impl PartialOrd for MonoKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MonoKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then(self.mass_power.cmp(&other.mass_power))
            .then_with(|| self.factors.cmp(&other.factors))
    }
}

impl MonoKey {
    /// Builds a key from factors in any order; repeated modes are merged and
    /// empty factors dropped.
    pub fn from_factors(mut factors: Vec<Factor>, mass_power: u32) -> Self {
        factors.sort_by_key(|f| std::cmp::Reverse((f.mode.unsigned_abs(), f.mode)));
        let mut merged: Vec<Factor> = Vec::with_capacity(factors.len());
        for f in factors {
            match merged.last_mut() {
                Some(last) if last.mode == f.mode => {
                    last.plus += f.plus;
                    last.minus += f.minus;
                }
                _ => merged.push(f),
            }
        }
        merged.retain(|f| f.count() > 0);
        MonoKey { factors: merged, mass_power }
    }

    /// Canonicalizes a raw list of `(mode, sign)` pairs.
    pub fn from_pairs(pairs: &[(i32, Sign)], mass_power: u32) -> Result<Self> {
        let mut factors = Vec::with_capacity(pairs.len());
        for &(mode, sign) in pairs {
            match sign {
                1 => factors.push(Factor::new(mode, 1, 0)),
                -1 => factors.push(Factor::new(mode, 0, 1)),
                s => return Err(Error::Structural(format!("sign must be ±1, got {s}"))),
            }
        }
        Ok(Self::from_factors(factors, mass_power))
    }

    /// `u_a^{pa} ū_b^{pb}` helpers for hand-built keys.
    pub fn action(mode: i32, power: u16) -> Self {
        Self::from_factors(vec![Factor::new(mode, power, power)], 0)
    }

    pub fn pure_mass(mass_power: u32) -> Self {
        MonoKey { factors: Vec::new(), mass_power }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn mass_power(&self) -> u32 {
        self.mass_power
    }

    pub fn with_mass_power(&self, mass_power: u32) -> Self {
        MonoKey { factors: self.factors.clone(), mass_power }
    }

    /// Expanded pairs in canonical order: descending `(|ℓ|, ℓ, σ)`.
    pub fn pairs(&self) -> Vec<(i32, Sign)> {
        let mut out = Vec::with_capacity(self.num_pairs());
        for f in &self.factors {
            out.extend(std::iter::repeat_n((f.mode, 1), f.plus as usize));
            out.extend(std::iter::repeat_n((f.mode, -1), f.minus as usize));
        }
        out
    }

    /// Number of Fourier factors `q` (the paper's `2q` for even degree).
    pub fn num_pairs(&self) -> usize {
        self.factors.iter().map(|f| f.count() as usize).sum()
    }

    /// Polynomial degree `q + 2n`.
    pub fn degree(&self) -> u32 {
        self.num_pairs() as u32 + 2 * self.mass_power
    }

    pub fn mass(&self) -> i64 {
        self.factors.iter().map(|f| i64::from(f.plus) - i64::from(f.minus)).sum()
    }

    pub fn momentum(&self) -> i64 {
        self.factors
            .iter()
            .map(|f| (i64::from(f.plus) - i64::from(f.minus)) * i64::from(f.mode))
            .sum()
    }

    /// `Ω = Σ_j σ_j ℓ_j²`.
    pub fn divisor(&self) -> i64 {
        self.factors
            .iter()
            .map(|f| {
                let m = i64::from(f.mode);
                (i64::from(f.plus) - i64::from(f.minus)) * m * m
            })
            .sum()
    }

    pub fn check_conservation(&self) -> Result<()> {
        if self.mass() != 0 {
            return Err(Error::Structural(format!(
                "monomial {:?} violates zero mass (Σσ = {})",
                self.pairs(),
                self.mass()
            )));
        }
        if self.momentum() != 0 {
            return Err(Error::Structural(format!(
                "monomial {:?} violates zero momentum (Σσℓ = {})",
                self.pairs(),
                self.momentum()
            )));
        }
        Ok(())
    }

    /// Complex conjugate: `σ ↦ −σ`.
    pub fn conj(&self) -> Self {
        MonoKey {
            factors: self.factors.iter().map(|f| Factor::new(f.mode, f.minus, f.plus)).collect(),
            mass_power: self.mass_power,
        }
    }

    /// Product of actions `Π |u_k|^{2p_k}` (times the mass power).
    pub fn is_integrable(&self) -> bool {
        self.factors.iter().all(|f| f.plus == f.minus)
    }

    /// j-th largest modulus `|ℓ*_j|` (1-based), if the monomial has that many factors.
    pub fn l_star(&self, j: usize) -> Option<u32> {
        let mut seen = 0usize;
        for f in &self.factors {
            seen += f.count() as usize;
            if seen >= j {
                return Some(f.mode.unsigned_abs());
            }
        }
        None
    }

    /// Membership in the pairing set: a conjugate pair sits at the top modulus.
    pub fn is_paired(&self) -> bool {
        let Some(top) = self.factors.first().map(|f| f.mode.unsigned_abs()) else {
            return false;
        };
        self.factors
            .iter()
            .take_while(|f| f.mode.unsigned_abs() == top)
            .any(|f| f.plus > 0 && f.minus > 0)
    }

    pub fn max_abs_mode(&self) -> u32 {
        self.factors.first().map_or(0, |f| f.mode.unsigned_abs())
    }

    /// Product key (factor multiset union, mass powers add).
    pub fn mul(&self, other: &MonoKey) -> MonoKey {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].order_key().cmp(&b[j].order_key()) {
                Ordering::Greater => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push(Factor::new(a[i].mode, a[i].plus + b[j].plus, a[i].minus + b[j].minus));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        MonoKey { factors: out, mass_power: self.mass_power + other.mass_power }
    }

    /// `self · other / (u_mode ū_mode)`; the caller guarantees both exist.
    pub(crate) fn contract(&self, other: &MonoKey, mode: i32) -> MonoKey {
        let mut key = self.mul(other);
        if let Some(pos) = key.factors.iter().position(|f| f.mode == mode) {
            let f = &mut key.factors[pos];
            f.plus -= 1;
            f.minus -= 1;
            if f.count() == 0 {
                key.factors.remove(pos);
            }
        }
        key
    }

    pub fn factor(&self, mode: i32) -> Option<&Factor> {
        self.factors.iter().find(|f| f.mode == mode)
    }
}

/// A monomial with its coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub key: MonoKey,
    pub coeff: Coeff,
}

impl Monomial {
    pub fn new(key: MonoKey, coeff: Coeff) -> Self {
        Monomial { key, coeff }
    }

    /// Sorts raw pairs into canonical order; equal multisets give equal keys.
    pub fn canonicalize(pairs: &[(i32, Sign)], mass_power: u32, coeff: Coeff) -> Result<Self> {
        Ok(Monomial { key: MonoKey::from_pairs(pairs, mass_power)?, coeff })
    }

    pub fn pairs(&self) -> Vec<(i32, Sign)> {
        self.key.pairs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_order_example() {
        let key = MonoKey::from_pairs(&[(-2, 1), (3, 1), (3, -1), (-2, -1)], 0).unwrap();
        assert_eq!(key.pairs(), vec![(3, 1), (3, -1), (-2, 1), (-2, -1)]);
    }

    #[test]
    fn positive_mode_precedes_negative_of_same_modulus() {
        let key = MonoKey::from_pairs(&[(-2, 1), (2, -1), (0, 1), (0, -1)], 0).unwrap();
        assert_eq!(key.pairs(), vec![(2, -1), (-2, 1), (0, 1), (0, -1)]);
    }

    #[test]
    fn conservation_checks() {
        let bad = MonoKey::from_pairs(&[(1, 1), (2, -1)], 0).unwrap();
        assert!(bad.check_conservation().is_err());
        let bad_mass = MonoKey::from_pairs(&[(1, 1), (1, 1)], 0).unwrap();
        assert!(bad_mass.check_conservation().is_err());
        let good = MonoKey::from_pairs(&[(3, 1), (1, -1), (-1, 1), (1, -1)], 0).unwrap();
        good.check_conservation().unwrap();
        assert_eq!(good.divisor(), 8);
    }

    #[test]
    fn star_accessors_and_pairing() {
        let paired = MonoKey::from_pairs(&[(5, 1), (5, -1), (1, 1), (1, -1)], 0).unwrap();
        assert!(paired.is_paired());
        assert_eq!(paired.l_star(1), Some(5));
        assert_eq!(paired.l_star(3), Some(1));
        let unpaired = MonoKey::from_pairs(&[(4, 1), (3, -1), (2, 1), (3, -1)], 0).unwrap();
        assert!(!unpaired.is_paired());
        assert_eq!(unpaired.l_star(3), Some(3));
        // u_M ū_{-M} is not a pairing.
        let cross = MonoKey::from_pairs(&[(2, 1), (-2, -1), (2, -1), (-2, 1)], 0).unwrap();
        assert!(cross.is_paired());
        let cross2 = MonoKey::from_pairs(&[(2, 1), (-2, 1), (1, -1), (-1, -1)], 0).unwrap();
        assert!(!cross2.is_paired());
    }

    fn raw_pairs() -> impl Strategy<Value = Vec<(i32, Sign)>> {
        prop::collection::vec((-6i32..=6, prop_oneof![Just(1i8), Just(-1i8)]), 0..8)
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(pairs in raw_pairs(), n in 0u32..3) {
            let key = MonoKey::from_pairs(&pairs, n).unwrap();
            let again = MonoKey::from_pairs(&key.pairs(), n).unwrap();
            prop_assert_eq!(&key, &again);
            prop_assert_eq!(key.pairs(), again.pairs());
        }

        #[test]
        fn canonicalize_ignores_permutation(pairs in raw_pairs(), seed in any::<u64>()) {
            let mut shuffled = pairs.clone();
            // Deterministic Fisher-Yates from the seed.
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            prop_assert_eq!(MonoKey::from_pairs(&pairs, 0).unwrap(), MonoKey::from_pairs(&shuffled, 0).unwrap());
        }

        #[test]
        fn pairs_are_sorted_descending(pairs in raw_pairs()) {
            let key = MonoKey::from_pairs(&pairs, 0).unwrap();
            let out = key.pairs();
            for w in out.windows(2) {
                let a = (w[0].0.unsigned_abs(), w[0].0, w[0].1);
                let b = (w[1].0.unsigned_abs(), w[1].0, w[1].1);
                prop_assert!(a >= b);
            }
        }
    }
}
