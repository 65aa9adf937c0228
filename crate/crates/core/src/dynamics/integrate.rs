use serde::{Deserialize, Serialize};

use crate::dynamics::field::VectorField;
use crate::error::{Error, Result};
use crate::hamcore::{NumericHamiltonian, State, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum Scheme {
    /// Strang splitting: exact linear half steps around an implicit-midpoint nonlinear step.
    SplitStep {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_iters")]
        max_iter: u32,
    },
    Rk4,
    /// Integrating-factor RK4 on the diagonal linear part.
    LawsonRk4,
}

fn default_tol() -> f64 {
    1e-15
}

fn default_iters() -> u32 {
    100
}

impl Scheme {
    pub fn split_step() -> Self {
        Scheme::SplitStep { tol: default_tol(), max_iter: default_iters() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::SplitStep { .. } => "split-step",
            Scheme::Rk4 => "rk4",
            Scheme::LawsonRk4 => "lawson-rk4",
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            Scheme::SplitStep { .. } => 2,
            Scheme::Rk4 | Scheme::LawsonRk4 => 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub dt: f64,
    pub method: String,
    pub cutoff: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectories hold the initial state")
    }

    /// One row per recorded time: `t, re(u_{-K}), im(u_{-K}), …`.
    pub fn to_csv(&self) -> String {
        let k = self.cutoff as i32;
        let mut out = String::from("t");
        for j in -k..=k {
            out.push_str(&format!(",re_{j},im_{j}"));
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:e}"));
            for z in s.amplitudes() {
                out.push_str(&format!(",{:e},{:e}", z.re, z.im));
            }
            out.push('\n');
        }
        out
    }
}

fn axpy(a: C64, x: &State, y: &State) -> State {
    let mut out = y.clone();
    for (o, z) in out.amplitudes_mut().iter_mut().zip(x.amplitudes()) {
        *o += a * z;
    }
    out
}

/// `u_k ← e^{−iω_k τ} u_k`.
fn rotate(w: &[f64], tau: f64, u: &State) -> State {
    let mut out = u.clone();
    for (z, &w) in out.amplitudes_mut().iter_mut().zip(w) {
        *z *= C64::from_polar(1.0, -w * tau);
    }
    out
}

fn rk4_step(f: &dyn VectorField, u: &State, h: f64) -> Result<State> {
    let k1 = f.eval(u)?;
    let k2 = f.eval(&axpy(C64::from(h / 2.0), &k1, u))?;
    let k3 = f.eval(&axpy(C64::from(h / 2.0), &k2, u))?;
    let k4 = f.eval(&axpy(C64::from(h), &k3, u))?;
    let mut out = u.clone();
    for (i, o) in out.amplitudes_mut().iter_mut().enumerate() {
        let s = k1.amplitudes()[i] + 2.0 * k2.amplitudes()[i] + 2.0 * k3.amplitudes()[i] + k4.amplitudes()[i];
        *o += h / 6.0 * s;
    }
    Ok(out)
}

fn lawson_step(f: &dyn VectorField, w: &[f64], u: &State, h: f64) -> Result<State> {
    let half = |x: &State| rotate(w, h / 2.0, x);
    let n1 = f.nonlinear(u)?;
    let n2 = f.nonlinear(&half(&axpy(C64::from(h / 2.0), &n1, u)))?;
    let n3 = f.nonlinear(&axpy(C64::from(h / 2.0), &n2, &half(u)))?;
    let n4 = f.nonlinear(&axpy(C64::from(h), &half(&n3), &rotate(w, h, u)))?;
    let e1 = rotate(w, h, &n1);
    let e23 = half(&axpy(C64::from(1.0), &n2, &n3));
    let mut out = rotate(w, h, u);
    for (i, o) in out.amplitudes_mut().iter_mut().enumerate() {
        *o += h / 6.0 * (e1.amplitudes()[i] + 2.0 * e23.amplitudes()[i] + n4.amplitudes()[i]);
    }
    Ok(out)
}

fn midpoint_step(f: &dyn VectorField, u: &State, h: f64, tol: f64, max_iter: u32) -> Result<Option<State>> {
    let scale = u.amplitudes().iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut m = u.clone();
    for _ in 0..max_iter {
        let next = axpy(C64::from(h / 2.0), &f.nonlinear(&m)?, u);
        let diff = next.max_abs_diff(&m);
        m = next;
        if diff <= tol * scale {
            let mut out = m;
            for (o, z) in out.amplitudes_mut().iter_mut().zip(u.amplitudes()) {
                *o = 2.0 * *o - z;
            }
            return Ok(Some(out));
        }
    }
    Ok(None)
}

/// Integrates `steps = T/dt` fixed steps (negative `dt` runs backward), recording every
/// `record_every` steps. `T/dt` must be an integer multiple of `record_every`.
pub fn integrate(f: &dyn VectorField, u0: &State, dt: f64, t_final: f64, scheme: Scheme, record_every: usize) -> Result<Trajectory> {
    if dt == 0.0 || !dt.is_finite() || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!("bad time step {dt} or horizon {t_final}")));
    }
    if u0.cutoff() != f.cutoff() {
        return Err(Error::InvalidArgument("initial state cutoff does not match the field".into()));
    }
    let ratio = t_final / dt;
    let steps = ratio.round();
    if steps < 0.0 || (ratio - steps).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!("T = {t_final} is not a nonnegative multiple of dt = {dt}")));
    }
    let steps = steps as usize;
    let record_every = record_every.max(1);
    if steps % record_every != 0 {
        return Err(Error::InvalidArgument(format!("{steps} steps are not a multiple of record_every = {record_every}")));
    }
    let lin = f.linear_frequencies();
    if matches!(scheme, Scheme::SplitStep { .. } | Scheme::LawsonRk4) && lin.is_none() {
        return Err(Error::InvalidArgument(format!("{} needs a field with a linear part", scheme.name())));
    }
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u0.clone()],
        dt,
        method: scheme.name().to_string(),
        cutoff: u0.cutoff(),
    };
    let mut u = u0.clone();
    for n in 1..=steps {
        let t_prev = (n - 1) as f64 * dt;
        let next = match scheme {
            Scheme::Rk4 => Some(rk4_step(f, &u, dt)?),
            Scheme::LawsonRk4 => Some(lawson_step(f, lin.expect("checked"), &u, dt)?),
            Scheme::SplitStep { tol, max_iter } => {
                let w = lin.expect("checked");
                midpoint_step(f, &rotate(w, dt / 2.0, &u), dt, tol, max_iter)?.map(|m| rotate(w, dt / 2.0, &m))
            }
        };
        match next {
            Some(s) if s.is_finite() => u = s,
            _ => return Err(Error::Divergence { last_valid_time: t_prev }),
        }
        if n % record_every == 0 {
            traj.times.push(n as f64 * dt);
            traj.states.push(u.clone());
        }
    }
    Ok(traj)
}

/// `w = exp(2i ∫₀ᵗ ∂_μP(u) ds)·u`, trapezoidal in time.
pub fn gauge_align(traj: &Trajectory, p: &NumericHamiltonian) -> Result<Trajectory> {
    let mut out = traj.clone();
    let mut phase = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (i, s) in traj.states.iter().enumerate() {
        let g = p.gradient(s)?.mu_part.re;
        let t = traj.times[i];
        if let Some((t0, g0)) = prev {
            phase += 0.5 * (t - t0) * (g + g0);
        }
        prev = Some((t, g));
        let rot = C64::from_polar(1.0, 2.0 * phase);
        for z in out.states[i].amplitudes_mut() {
            *z *= rot;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DriftReport {
    /// `(k, sup_t ||u_k(t)|² − |u_k(0)|²|)`.
    pub per_mode: Vec<(i32, f64)>,
    pub max_mode_drift: f64,
    /// Same for `Σ_{k∈modes} |u_k|²`.
    pub aggregate: f64,
    pub mass: f64,
    pub energy: Option<f64>,
}

pub fn action_drift(traj: &Trajectory, modes: &[i32], energy: Option<&NumericHamiltonian>) -> Result<DriftReport> {
    let s0 = &traj.states[0];
    let mut per_mode: Vec<(i32, f64)> = modes.iter().map(|&k| (k, 0.0)).collect();
    let (mut agg, mut mass) = (0.0f64, 0.0f64);
    let agg0: f64 = modes.iter().map(|&k| s0.action(k)).sum();
    let e0 = energy.map(|h| h.evaluate(s0)).transpose()?;
    let mut de = 0.0f64;
    for s in &traj.states {
        for (slot, &k) in per_mode.iter_mut().zip(modes) {
            slot.1 = slot.1.max((s.action(k) - s0.action(k)).abs());
        }
        agg = agg.max((modes.iter().map(|&k| s.action(k)).sum::<f64>() - agg0).abs());
        mass = mass.max((s.mass() - s0.mass()).abs());
        if let (Some(h), Some(e0)) = (energy, e0) {
            de = de.max((h.evaluate(s)? - e0).abs());
        }
    }
    let max_mode_drift = per_mode.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(DriftReport { per_mode, max_mode_drift, aggregate: agg, mass, energy: e0.map(|_| de) })
}
