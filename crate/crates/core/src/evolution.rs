//! Time propagation of component states.
//!
//! Two independent routes: fixed-step classical Runge–Kutta on the coupled
//! component equations, and the matrix exponential of the extended-space
//! Liouvillian applied to the block-diagonal embedding. The reduced density
//! matrix alone does not obey a closed evolution law, so everything here
//! propagates the full component list.

use alloc::vec::Vec;

use nalgebra::DVector;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::generator::{GeneralizedLindblad, RelevantConservedSet};
use crate::operator::{expm, unvectorize, vectorize, ComplexMatrix, TOL_PSD};
use crate::state::ComponentState;

/// Default cap on the vectorized extended dimension `(dim_sys · n)²`.
pub const DEFAULT_SIZE_CAP: usize = 4096;

/// Diagnostics recorded at one output point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDiagnostics {
    pub min_eigenvalue: f64,
    pub hermiticity_defect: f64,
    pub total_trace: f64,
    /// One value per registered conserved set.
    pub conserved: Vec<f64>,
    /// Minimum eigenvalue below `-1e-9` or normalization off by more than `1e-9`.
    pub flagged: bool,
}

/// States and diagnostics on a uniform output grid including `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<ComponentState>,
    diagnostics: Vec<PointDiagnostics>,
}

impl Trajectory {
    fn with_capacity(cap: usize) -> Self {
        Self { times: Vec::with_capacity(cap), states: Vec::with_capacity(cap), diagnostics: Vec::with_capacity(cap) }
    }

    fn record(&mut self, t: f64, state: ComponentState, conserved: &[RelevantConservedSet]) -> Result<()> {
        self.diagnostics.push(diagnose(&state, conserved)?);
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[ComponentState] {
        &self.states
    }

    pub fn diagnostics(&self) -> &[PointDiagnostics] {
        &self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &ComponentState {
        self.states.last().expect("trajectories contain t = 0")
    }

    /// `p_e = ⟨1|Σ_i ρ_i|1⟩` for two-level systems (excited state first).
    pub fn excited_population(&self) -> Option<Vec<f64>> {
        if self.states.first()?.dim_sys() != 2 {
            return None;
        }
        Some(self.states.iter().map(excited_population).collect())
    }

    pub fn any_flagged(&self) -> bool {
        self.diagnostics.iter().any(|d| d.flagged)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    /// `max_t |Σ tr ρ_i(t) − Σ tr ρ_i(0)|`.
    pub fn trace_drift(&self) -> f64 {
        let t0 = self.diagnostics[0].total_trace;
        self.diagnostics.iter().map(|d| (d.total_trace - t0).abs()).fold(0.0, f64::max)
    }
}

/// `⟨1|Σ_i ρ_i|1⟩` in the excited-first basis.
pub fn excited_population(state: &ComponentState) -> f64 {
    state.components().iter().map(|c| c[(0, 0)].re).sum()
}

fn diagnose(state: &ComponentState, conserved: &[RelevantConservedSet]) -> Result<PointDiagnostics> {
    let d = state.check(TOL_PSD);
    let conserved = conserved.iter().map(|cs| cs.value(state)).collect::<Result<Vec<_>>>()?;
    Ok(PointDiagnostics {
        min_eigenvalue: d.min_eigenvalue,
        hermiticity_defect: d.hermiticity_defect,
        total_trace: d.total_trace,
        conserved,
        flagged: d.violation,
    })
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Precondition(alloc::format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

/// Classical fourth-order Runge–Kutta with `steps` uniform steps on
/// `[0, t_max]`; every step is an output point.
pub fn evolve_rk(
    gen: &GeneralizedLindblad,
    init: &ComponentState,
    t_max: f64,
    steps: usize,
    conserved: &[RelevantConservedSet],
) -> Result<Trajectory> {
    check_time(t_max)?;
    gen.rhs(init)?;
    let mut traj = Trajectory::with_capacity(steps + 1);
    traj.record(0.0, init.clone(), conserved)?;
    if steps == 0 {
        return Ok(traj);
    }
    let dt = t_max / steps as f64;
    let mut y = init.clone();
    for step in 1..=steps {
        let k1 = gen.rhs(&y)?;
        let k2 = gen.rhs(&y.add_scaled(&k1, dt / 2.0))?;
        let k3 = gen.rhs(&y.add_scaled(&k2, dt / 2.0))?;
        let k4 = gen.rhs(&y.add_scaled(&k3, dt))?;
        y = y
            .add_scaled(&k1, dt / 6.0)
            .add_scaled(&k2, dt / 3.0)
            .add_scaled(&k3, dt / 3.0)
            .add_scaled(&k4, dt / 6.0);
        if !y.is_finite() {
            return Err(Error::Divergence { step });
        }
        traj.record(step as f64 * dt, y.clone(), conserved)?;
    }
    Ok(traj)
}

fn extended_liouvillian(gen: &GeneralizedLindblad, size_cap: usize) -> Result<ComplexMatrix> {
    let dim = gen.dim_sys() * gen.n();
    let vec_dim = dim * dim;
    if vec_dim > size_cap {
        return Err(Error::SizeCap { size: vec_dim, cap: size_cap });
    }
    Ok(gen.embed().liouvillian())
}

/// Full extended-space operator `ϱ(t) = e^{Lt} ϱ(0)` for the block-diagonal
/// embedding of `init`.
pub fn evolve_expm_extended(
    gen: &GeneralizedLindblad,
    init: &ComponentState,
    t: f64,
    size_cap: usize,
) -> Result<ComplexMatrix> {
    check_time(t)?;
    gen.rhs(init)?;
    let l = extended_liouvillian(gen, size_cap)?;
    let prop = expm(&l.scale(t))?;
    let dim = gen.dim_sys() * gen.n();
    unvectorize(&(prop * vectorize(&init.to_extended())), dim)
}

/// Component state at time `t` via the extended-space exponential.
pub fn evolve_expm(gen: &GeneralizedLindblad, init: &ComponentState, t: f64, size_cap: usize) -> Result<ComponentState> {
    if t == 0.0 {
        gen.rhs(init)?;
        return Ok(init.clone());
    }
    let ext = evolve_expm_extended(gen, init, t, size_cap)?;
    ComponentState::from_extended(&ext, gen.dim_sys(), gen.n())
}

/// Exponential route on the same output grid as [`evolve_rk`], stepping with
/// the one-step propagator `e^{L dt}`.
pub fn evolve_expm_grid(
    gen: &GeneralizedLindblad,
    init: &ComponentState,
    t_max: f64,
    steps: usize,
    conserved: &[RelevantConservedSet],
    size_cap: usize,
) -> Result<Trajectory> {
    check_time(t_max)?;
    gen.rhs(init)?;
    let mut traj = Trajectory::with_capacity(steps + 1);
    traj.record(0.0, init.clone(), conserved)?;
    if steps == 0 {
        return Ok(traj);
    }
    let dt = t_max / steps as f64;
    let prop = expm(&extended_liouvillian(gen, size_cap)?.scale(dt))?;
    let dim = gen.dim_sys() * gen.n();
    let mut v: DVector<Complex64> = vectorize(&init.to_extended());
    for step in 1..=steps {
        v = &prop * v;
        let varrho = unvectorize(&v, dim)?;
        let state = ComponentState::from_extended(&varrho, gen.dim_sys(), gen.n())?;
        if !state.is_finite() {
            return Err(Error::Divergence { step });
        }
        traj.record(step as f64 * dt, state, conserved)?;
    }
    Ok(traj)
}
