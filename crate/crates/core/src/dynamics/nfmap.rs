use crate::birkhoff::NormalFormResult;
use crate::dynamics::field::GeneratorField;
use crate::dynamics::integrate::{integrate, Scheme};
use crate::error::Result;
use crate::hamcore::State;

/// Numerical coordinate changes of a normal-form computation.
///
/// Each step was `H ↦ H∘Φ_{−χ}`, so physical coordinates are `u = Φ_{−χ₄}(Φ_{−χ₆}(…v))`.
pub struct NormalFormMap {
    generators: Vec<GeneratorField>,
    steps: usize,
}

impl NormalFormMap {
    /// `steps` RK4 steps per unit-time flow.
    pub fn new(nf: &NormalFormResult, cutoff: usize, steps: usize) -> Result<Self> {
        let generators = nf
            .generators
            .iter()
            .filter(|(_, chi)| !chi.is_empty())
            .map(|(_, chi)| GeneratorField::new(chi, cutoff, 1.0))
            .collect::<Result<Vec<_>>>()?;
        Ok(NormalFormMap { generators, steps: steps.max(1) })
    }

    pub fn is_identity(&self) -> bool {
        self.generators.is_empty()
    }

    fn flow(&self, g: &GeneratorField, u: &State, time: f64) -> Result<State> {
        let dt = time / self.steps as f64;
        Ok(integrate(g, u, dt, time, Scheme::Rk4, self.steps)?.final_state().clone())
    }

    /// Normal-form coordinates to physical ones.
    pub fn to_physical(&self, v: &State) -> Result<State> {
        let mut u = v.clone();
        for g in self.generators.iter().rev() {
            u = self.flow(g, &u, -1.0)?;
        }
        Ok(u)
    }

    pub fn to_normal(&self, u: &State) -> Result<State> {
        let mut v = u.clone();
        for g in &self.generators {
            v = self.flow(g, &v, 1.0)?;
        }
        Ok(v)
    }
}
