//! Oseen fixed point for the stream function.
//!
//! Each step freezes density, viscosity and the advecting velocity at the previous
//! iterate and solves `(E(μ) - K(ρ, w)) φ = F + T(lift) - E(μ) lift` for the clamped
//! part `φ`; the full stream function is `lift + φ`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::fields::{discrete_norms, discrete_norms_with, ProblemSpec, RunReport, ScalarField};
use crate::lift::{boundary_stream, lift_padded, BoundaryTrace};
use crate::linalg::LuSolver;
use crate::operators::{
    assemble_oseen, convection_lift_load, energy_load, energy_product, force_load, grad_perp, BoundaryMode, DofMap,
    Padded,
};

/// Relative residual demanded from every linear solve.
pub const LINEAR_TOL: f64 = 1e-10;
/// Relaxation is never halved below this value.
pub const MIN_RELAXATION: f64 = 1.0 / 16.0;
/// Growth of the iterate norm, relative to the first iterate, that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
/// Safety factor applied to the a-priori bound before flagging a run.
pub const BOUND_SAFETY: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct IterateState {
    /// Clamped part of the stream function.
    pub phi: ScalarField,
    /// `lift + phi`.
    pub stream: ScalarField,
    pub rho: ScalarField,
    pub mu: ScalarField,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct StepInfo {
    pub solved: ScalarField,
    pub linear_residual: f64,
    pub update_norm: f64,
}

/// H² norm used for updates and iterates of the clamped part.
pub fn clamped_h2_norm(phi: &ScalarField) -> f64 {
    discrete_norms_with(phi, BoundaryMode::Clamped).h2_full()
}

/// Everything that stays fixed during a solve: boundary trace, lift, force load and the
/// symbolic factorization.
pub struct OseenContext {
    pub trace: BoundaryTrace,
    pub lift: Padded,
    pub lift_field: ScalarField,
    pub dofs: DofMap,
    force: Vec<f64>,
    lu: LuSolver,
}

impl OseenContext {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let trace = boundary_stream(&spec.u0_samples, &spec.grid, spec.c0, spec.flux, spec.flux_tol)?;
        let lift = lift_padded(&trace, spec.delta)?;
        let lift_field = lift.interior();
        let dofs = DofMap::new(spec.grid);
        let force = force_load(&spec.force, &dofs);
        Ok(OseenContext { trace, lift, lift_field, dofs, force, lu: LuSolver::new() })
    }

    /// Density and mollified viscosity of a full stream function.
    pub fn coefficients(&self, spec: &ProblemSpec, stream: &ScalarField) -> Result<(ScalarField, ScalarField)> {
        let rho = spec.eta.apply(stream)?;
        let mu = crate::lift::mollify(&spec.b.apply(&rho)?, spec.eps_mollify)?;
        let lo = spec.b.declared_min() * (1.0 - 1e-12);
        if let Some(node) = mu.values.iter().position(|&m| m < lo) {
            return Err(Error::ViscosityBelowBound { node, value: mu.values[node], bound: spec.b.declared_min() });
        }
        Ok((rho, mu))
    }

    pub fn state_from(&self, spec: &ProblemSpec, phi: ScalarField, k: usize) -> Result<IterateState> {
        let stream = self.lift_field.zip_with(&phi, |a, b| a + b);
        if !stream.all_finite() {
            return Err(Error::Divergence { iteration: k, norm: f64::INFINITY });
        }
        let (rho, mu) = self.coefficients(spec, &stream)?;
        Ok(IterateState { phi, stream, rho, mu, k })
    }

    pub fn initial_state(&self, spec: &ProblemSpec) -> Result<IterateState> {
        self.state_from(spec, ScalarField::zeros(spec.grid), 0)
    }

    /// Right-hand side of the linear system for the given frozen coefficients.
    pub fn load(&self, state: &IterateState) -> Vec<f64> {
        let w = grad_perp(&state.stream);
        let conv = convection_lift_load(&state.rho, &w, &self.lift, &self.dofs);
        let lift = energy_load(&state.mu, &self.lift, &self.dofs);
        self.force.iter().zip(&conv).zip(&lift).map(|((f, c), l)| f + c - l).collect()
    }

    pub fn step(&mut self, spec: &ProblemSpec, state: &IterateState, omega: f64) -> Result<(IterateState, StepInfo)> {
        let w = grad_perp(&state.stream);
        let op = assemble_oseen(&state.mu, &state.rho, &w)?;
        let rhs = self.load(state);
        let sol = self.lu.solve(&op.matrix, &rhs, LINEAR_TOL)?;
        let solved = self.dofs.to_field(&sol.x);
        let phi = state.phi.zip_with(&solved, |old, new| (1.0 - omega) * old + omega * new);
        let update_norm = clamped_h2_norm(&phi.zip_with(&state.phi, |a, b| a - b));
        let next = self.state_from(spec, phi, state.k + 1)?;
        Ok((next, StepInfo { solved, linear_residual: sol.relative_residual, update_norm }))
    }
}

/// One relaxed Oseen step from `state`, with a fresh context.
pub fn oseen_step(spec: &ProblemSpec, state: &IterateState) -> Result<IterateState> {
    let mut ctx = OseenContext::new(spec)?;
    Ok(ctx.step(spec, state, spec.omega)?.0)
}

/// Energy-norm bound `μ^* B²` with
/// `B = (ρ^* + 1 + μ^*)(‖lift‖_{H²} + ‖f‖_{L²})(1 + ‖lift‖_{H²}) / μ_*`.
pub fn apriori_bound(spec: &ProblemSpec, lift: &ScalarField) -> f64 {
    let lift_h2 = discrete_norms(lift).h2_full();
    let f_l2 = spec.force.l2_norm();
    let (mu_lo, mu_hi) = (spec.b.declared_min(), spec.b.declared_max());
    let rho_hi = spec.eta.declared_max();
    let b = (rho_hi + 1.0 + mu_hi) * (lift_h2 + f_l2) * (1.0 + lift_h2) / mu_lo;
    mu_hi * b * b
}

/// Runs the fixed point from `φ = 0`; returns the final iterate.
pub fn solve_stream_state(spec: &ProblemSpec) -> Result<(IterateState, RunReport)> {
    let t0 = Instant::now();
    let mut ctx = OseenContext::new(spec)?;
    let mut state = ctx.initial_state(spec)?;
    let mut report = RunReport { apriori_bound: apriori_bound(spec, &ctx.lift_field), ..RunReport::default() };
    let mut omega = spec.omega;
    let mut first_norm = None;
    let mut increases = 0;
    for k in 1..=spec.max_iter {
        let (next, info) = ctx.step(spec, &state, omega)?;
        let norm = clamped_h2_norm(&next.phi);
        if !norm.is_finite() || !info.update_norm.is_finite() {
            return Err(Error::Divergence { iteration: k, norm });
        }
        let first = *first_norm.get_or_insert(norm);
        if first > 0.0 && norm > DIVERGENCE_FACTOR * first {
            return Err(Error::Divergence { iteration: k, norm });
        }
        let energy = energy_product(&next.mu, &next.phi, &next.phi);
        report.iterations = k;
        report.relaxation.push(omega);
        report.linear_residuals.push(info.linear_residual);
        if let Some(&prev) = report.update_norms.last() {
            increases = if info.update_norm > prev { increases + 1 } else { 0 };
        }
        report.update_norms.push(info.update_norm);
        report.energy.push(energy);
        state = next;
        if info.update_norm <= spec.tol_rel * norm + spec.tol_abs {
            report.converged = true;
            break;
        }
        if increases >= 2 && omega > MIN_RELAXATION {
            omega = (0.5 * omega).max(MIN_RELAXATION);
            increases = 0;
        }
    }
    let last_energy = report.energy.last().copied().unwrap_or(0.0);
    report.bound_exceeded = last_energy > BOUND_SAFETY * report.apriori_bound;
    report.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok((state, report))
}

/// Full stream function and iteration report.
pub fn solve_stream(spec: &ProblemSpec) -> Result<(ScalarField, RunReport)> {
    let (state, report) = solve_stream_state(spec)?;
    Ok((state.stream, report))
}
