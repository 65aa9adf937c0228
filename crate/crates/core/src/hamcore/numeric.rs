//! Floating-point evaluation of exact Hamiltonians on truncated Fourier states.

use num::Complex;
use num::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamcore::hamiltonian::Hamiltonian;

pub type C64 = Complex<f64>;

/// Fourier coefficients `u_k`, `|k| ≤ K`, stored at index `k + K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    cutoff: usize,
    amps: Vec<C64>,
}

impl State {
    pub fn zeros(cutoff: usize) -> Self {
        State { cutoff, amps: vec![C64::zero(); 2 * cutoff + 1] }
    }

    pub fn from_amplitudes(cutoff: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 2 * cutoff + 1 {
            return Err(Error::InvalidArgument(format!(
                "state with cutoff {cutoff} needs {} amplitudes, got {}",
                2 * cutoff + 1,
                amps.len()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(State { cutoff, amps })
    }

    /// Random amplitudes on `|k| ≤ support`, rescaled to `‖u‖_{L²} = norm`.
    pub fn random<R: Rng>(cutoff: usize, support: usize, norm: f64, rng: &mut R) -> Self {
        let mut s = State::zeros(cutoff);
        let support = support.min(cutoff) as i32;
        for k in -support..=support {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            s.set(k, z);
        }
        let m = s.mass().sqrt();
        if m > 0.0 {
            s.scale_mut(norm / m);
        }
        s
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn index(&self, k: i32) -> Option<usize> {
        let idx = i64::from(k) + self.cutoff as i64;
        (0..self.amps.len() as i64).contains(&idx).then_some(idx as usize)
    }

    pub fn get(&self, k: i32) -> C64 {
        self.index(k).map_or(C64::zero(), |i| self.amps[i])
    }

    pub fn set(&mut self, k: i32, z: C64) {
        let i = self.index(k).expect("mode within cutoff");
        self.amps[i] = z;
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> {
        let k = self.cutoff as i32;
        -k..=k
    }

    pub fn mass(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn action(&self, k: i32) -> f64 {
        self.get(k).norm_sqr()
    }

    pub fn scale_mut(&mut self, s: f64) {
        for z in &mut self.amps {
            *z *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale_mut(s);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
struct NumTerm {
    coeff: C64,
    mass_power: u32,
    start: usize,
    end: usize,
}

/// A Hamiltonian compiled against a fixed cutoff for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct NumericHamiltonian {
    cutoff: usize,
    terms: Vec<NumTerm>,
    // (state index, plus exponent, minus exponent)
    factors: Vec<(usize, u16, u16)>,
    max_factors: usize,
}

/// `(∇H)_k` split as in `∂H/∂ū_k = (∂_μH)·u_k + (∇_vH)_k`.
#[derive(Clone, Debug)]
pub struct Gradient {
    /// Wirtinger derivative `∂H/∂ū_k` of the full Hamiltonian.
    pub full: State,
    /// Derivative with respect to `μ = ‖u‖²` acting on mass-power prefactors only.
    pub mu_part: C64,
    /// Derivative acting on the explicit Fourier factors only.
    pub v_part: State,
}

fn ipow(z: C64, n: u16) -> C64 {
    let mut out = C64::new(1.0, 0.0);
    for _ in 0..n {
        out *= z;
    }
    out
}

impl NumericHamiltonian {
    pub fn compile(h: &Hamiltonian, cutoff: usize) -> Result<Self> {
        let mut terms = Vec::with_capacity(h.len());
        let mut factors = Vec::new();
        let mut max_factors = 0;
        for (key, coeff) in h.terms() {
            let start = factors.len();
            for f in key.factors() {
                if f.mode.unsigned_abs() as usize > cutoff {
                    return Err(Error::ModeOutOfRange { mode: f.mode, cutoff });
                }
                factors.push(((f.mode + cutoff as i32) as usize, f.plus, f.minus));
            }
            max_factors = max_factors.max(factors.len() - start);
            terms.push(NumTerm { coeff: coeff.to_c64(), mass_power: key.mass_power(), start, end: factors.len() });
        }
        Ok(NumericHamiltonian { cutoff, terms, factors, max_factors })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check(&self, state: &State) -> Result<()> {
        if state.cutoff() != self.cutoff {
            return Err(Error::InvalidArgument(format!(
                "state cutoff {} does not match compiled cutoff {}",
                state.cutoff(),
                self.cutoff
            )));
        }
        Ok(())
    }

    /// Complex value; the imaginary part vanishes for real Hamiltonians.
    pub fn evaluate_complex(&self, state: &State) -> Result<C64> {
        self.check(state)?;
        let u = state.amplitudes();
        let mu = state.mass();
        let (mut re, mut im) = (Compensated::default(), Compensated::default());
        for t in &self.terms {
            let mut p = t.coeff * mu.powi(t.mass_power as i32);
            for &(i, a, b) in &self.factors[t.start..t.end] {
                p *= ipow(u[i], a) * ipow(u[i].conj(), b);
            }
            re.add(p.re);
            im.add(p.im);
        }
        Ok(C64::new(re.value(), im.value()))
    }

    pub fn evaluate(&self, state: &State) -> Result<f64> {
        Ok(self.evaluate_complex(state)?.re)
    }

    pub fn gradient(&self, state: &State) -> Result<Gradient> {
        self.check(state)?;
        let u = state.amplitudes();
        let mu = state.mass();
        let mut v_part = State::zeros(self.cutoff);
        let mut mu_part = C64::zero();
        let mut vals = vec![C64::zero(); self.max_factors];
        let mut suffix = vec![C64::zero(); self.max_factors + 1];
        for t in &self.terms {
            let fs = &self.factors[t.start..t.end];
            for (slot, &(i, a, b)) in vals.iter_mut().zip(fs) {
                *slot = ipow(u[i], a) * ipow(u[i].conj(), b);
            }
            suffix[fs.len()] = C64::new(1.0, 0.0);
            for j in (0..fs.len()).rev() {
                suffix[j] = suffix[j + 1] * vals[j];
            }
            let n = t.mass_power as i32;
            if n > 0 {
                mu_part += t.coeff * f64::from(n) * mu.powi(n - 1) * suffix[0];
            }
            let scale = t.coeff * mu.powi(n);
            let mut prefix = C64::new(1.0, 0.0);
            for (j, &(i, a, b)) in fs.iter().enumerate() {
                if b > 0 {
                    let d = f64::from(b) * ipow(u[i], a) * ipow(u[i].conj(), b - 1);
                    v_part.amplitudes_mut()[i] += scale * prefix * suffix[j + 1] * d;
                }
                prefix *= vals[j];
            }
        }
        let mut full = v_part.clone();
        for (f, z) in full.amplitudes_mut().iter_mut().zip(u) {
            *f += mu_part * z;
        }
        Ok(Gradient { full, mu_part, v_part })
    }

    /// Hamiltonian vector field `u̇ = −2i ∂H/∂ū`.
    pub fn vector_field(&self, state: &State) -> Result<State> {
        let mut g = self.gradient(state)?.full;
        for z in g.amplitudes_mut() {
            *z *= C64::new(0.0, -2.0);
        }
        Ok(g)
    }
}

/// Neumaier summation: long sums of cancelling terms stay accurate to a few ulps.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// One-shot evaluation; errors if a mode of `h` exceeds the state cutoff.
pub fn evaluate(h: &Hamiltonian, state: &State) -> Result<f64> {
    NumericHamiltonian::compile(h, state.cutoff())?.evaluate(state)
}

pub fn gradient(h: &Hamiltonian, state: &State) -> Result<Gradient> {
    NumericHamiltonian::compile(h, state.cutoff())?.gradient(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamcore::coeff::Coeff;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn z2_on_unit_mode() {
        let mut s = State::zeros(3);
        s.set(1, C64::new(1.0, 0.0));
        assert_eq!(evaluate(&Hamiltonian::z2(3), &s).unwrap(), 0.5);
    }

    #[test]
    fn pure_mass_term() {
        let h = Hamiltonian::monomial(&[], 1, Coeff::from_int(1)).unwrap();
        let mut s = State::zeros(2);
        s.set(0, C64::new(2.0, 0.0));
        assert_eq!(evaluate(&h, &s).unwrap(), 4.0);
    }

    #[test]
    fn mode_outside_cutoff_is_rejected() {
        let s = State::zeros(2);
        assert!(matches!(evaluate(&Hamiltonian::z2(3), &s), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn gradient_of_single_action() {
        let h = Hamiltonian::monomial(&[(1, 1), (1, -1)], 0, Coeff::from_int(1)).unwrap();
        let s = State::random(3, 3, 1.0, &mut ChaCha8Rng::seed_from_u64(4));
        let g = gradient(&h, &s).unwrap();
        for k in s.modes() {
            let expect = if k == 1 { s.get(1) } else { C64::zero() };
            assert!((g.full.get(k) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn gradient_of_mass_squared() {
        let h = Hamiltonian::monomial(&[], 2, Coeff::from_int(1)).unwrap();
        let s = State::random(3, 3, 0.7, &mut ChaCha8Rng::seed_from_u64(5));
        let g = gradient(&h, &s).unwrap();
        assert!((g.mu_part.re - 2.0 * s.mass()).abs() < 1e-14);
        assert!(g.v_part.amplitudes().iter().all(|z| z.norm() == 0.0));
    }
}
