use std::sync::Arc;

use num::Zero;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::hamcore::{rational_to_f64, Hamiltonian, NumericHamiltonian, State, C64};
use crate::nlsham::NonlinearitySpec;

/// Right-hand side `u̇ = F(u)` of a truncated system.
pub trait VectorField: Send + Sync {
    fn cutoff(&self) -> usize;

    /// `ω` (indexed `k + K`) if the field carries a diagonal linear part `u̇_k = −iω_k u_k`.
    fn linear_frequencies(&self) -> Option<&[f64]> {
        None
    }

    /// The field minus its diagonal linear part.
    fn nonlinear(&self, u: &State) -> Result<State>;

    fn eval(&self, u: &State) -> Result<State> {
        let mut out = self.nonlinear(u)?;
        if let Some(w) = self.linear_frequencies() {
            for ((o, z), &w) in out.amplitudes_mut().iter_mut().zip(u.amplitudes()).zip(w) {
                *o += C64::new(0.0, -w) * z;
            }
        }
        Ok(out)
    }
}

/// Truncated NLS `u̇_k = −ik²u_k − i P_K[f(|u|²)u]_k`, nonlinearity on a dealiased grid.
pub struct NlsField {
    cutoff: usize,
    grid: usize,
    /// `f(z) = Σ_m poly[m-1] z^m`.
    poly: Vec<f64>,
    freqs: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl NlsField {
    /// Keeps the Taylor terms of `f` up to `z^{rmax-1}`, matching a Hamiltonian of degree `2·rmax`.
    pub fn new(spec: &NonlinearitySpec, cutoff: usize, rmax: u32) -> Result<Self> {
        if rmax < 2 {
            return Err(Error::InvalidArgument(format!("rmax must be at least 2, got {rmax}")));
        }
        let mut poly = Vec::new();
        let mut fact = 1.0;
        for m in 1..rmax as usize {
            fact *= m as f64;
            poly.push(rational_to_f64(&spec.derivative(m)?) / fact);
        }
        // Products of 2·rmax − 1 modes reach (2·rmax − 1)K; aliases stay outside |k| ≤ K.
        let grid = (2 * rmax as usize * cutoff + 1).max(4 * cutoff + 1);
        let mut planner = FftPlanner::new();
        let k = cutoff as i64;
        Ok(NlsField {
            cutoff,
            grid,
            poly,
            freqs: (-k..=k).map(|j| (j * j) as f64).collect(),
            forward: planner.plan_fft_forward(grid),
            inverse: planner.plan_fft_inverse(grid),
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    fn f(&self, z: f64) -> f64 {
        self.poly.iter().rev().fold(0.0, |acc, c| (acc + c) * z)
    }
}

impl VectorField for NlsField {
    fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn linear_frequencies(&self) -> Option<&[f64]> {
        Some(&self.freqs)
    }

    fn nonlinear(&self, u: &State) -> Result<State> {
        if u.cutoff() != self.cutoff {
            return Err(Error::InvalidArgument("state cutoff does not match the field".into()));
        }
        let m = self.grid;
        let k = self.cutoff as i64;
        let mut buf = vec![C64::zero(); m];
        for (i, z) in u.amplitudes().iter().enumerate() {
            let j = i as i64 - k;
            buf[j.rem_euclid(m as i64) as usize] = *z;
        }
        self.inverse.process(&mut buf);
        for z in buf.iter_mut() {
            *z *= self.f(z.norm_sqr());
        }
        self.forward.process(&mut buf);
        let mut out = State::zeros(self.cutoff);
        let scale = C64::new(0.0, -1.0 / m as f64);
        for (i, o) in out.amplitudes_mut().iter_mut().enumerate() {
            let j = i as i64 - k;
            *o = scale * buf[j.rem_euclid(m as i64) as usize];
        }
        Ok(out)
    }
}

/// `u̇ = −2i ∂H/∂ū` for an exact Hamiltonian, with its diagonal quadratic part split off.
pub struct HamiltonianField {
    cutoff: usize,
    freqs: Vec<f64>,
    rest: NumericHamiltonian,
}

impl HamiltonianField {
    pub fn new(h: &Hamiltonian, cutoff: usize) -> Result<Self> {
        let k = cutoff as i32;
        let mut freqs = vec![0.0; 2 * cutoff + 1];
        let diag = h.filter(|key, c| {
            let f = key.factors();
            key.mass_power() == 0 && f.len() == 1 && f[0].plus == 1 && f[0].minus == 1 && c.im.is_zero()
        });
        for (key, c) in diag.terms() {
            let j = key.factors()[0].mode;
            if j.abs() > k {
                return Err(Error::ModeOutOfRange { mode: j, cutoff });
            }
            freqs[(j + k) as usize] = 2.0 * rational_to_f64(&c.re);
        }
        let rest = NumericHamiltonian::compile(&h.sub(&diag), cutoff)?;
        Ok(HamiltonianField { cutoff, freqs, rest })
    }
}

impl VectorField for HamiltonianField {
    fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn linear_frequencies(&self) -> Option<&[f64]> {
        Some(&self.freqs)
    }

    fn nonlinear(&self, u: &State) -> Result<State> {
        self.rest.vector_field(u)
    }
}

/// `u̇ = ∓2i ∂χ/∂ū`: the flow of `±χ`, used for normal-form coordinate changes.
pub struct GeneratorField {
    compiled: NumericHamiltonian,
    sign: f64,
}

impl GeneratorField {
    pub fn new(chi: &Hamiltonian, cutoff: usize, sign: f64) -> Result<Self> {
        Ok(GeneratorField { compiled: NumericHamiltonian::compile(chi, cutoff)?, sign })
    }
}

impl VectorField for GeneratorField {
    fn cutoff(&self) -> usize {
        self.compiled.cutoff()
    }

    fn nonlinear(&self, u: &State) -> Result<State> {
        let mut v = self.compiled.vector_field(u)?;
        if self.sign != 1.0 {
            v.scale_mut(self.sign);
        }
        Ok(v)
    }
}
