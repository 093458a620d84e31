//! Manufactured solutions on the unit square and grid-refinement studies.
//!
//! The exact stream function is `A p(x1) p(x2)` with `p(s) = s²(1-s)²`, which is clamped on
//! every wall. Density and viscosity follow from linear laws in `Φ`, and the force is chosen
//! so that the momentum balance holds without pressure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{ClosureTable, Grid, ProblemSpec, ScalarField, VectorField};
use crate::picard::solve_stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManufacturedCase {
    pub amplitude: f64,
    /// When false, density and viscosity are both 1.
    pub variable_coefficients: bool,
}

impl Default for ManufacturedCase {
    fn default() -> Self {
        ManufacturedCase { amplitude: 16.0, variable_coefficients: true }
    }
}

fn p(s: f64) -> [f64; 4] {
    let t = 1.0 - s;
    [s * s * t * t, 2.0 * s * t * (1.0 - 2.0 * s), 2.0 - 12.0 * s + 12.0 * s * s, -12.0 + 24.0 * s]
}

impl ManufacturedCase {
    pub fn stream_max(&self) -> f64 {
        self.amplitude / 256.0
    }

    /// Slope of both linear laws `ρ = μ = 1 + slope Φ`; they reach 1.5 where `Φ` peaks.
    fn slope(&self) -> f64 {
        if self.variable_coefficients {
            0.5 / self.stream_max()
        } else {
            0.0
        }
    }

    pub fn stream(&self, x: f64, y: f64) -> f64 {
        self.amplitude * p(x)[0] * p(y)[0]
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let (px, py) = (p(x), p(y));
        [self.amplitude * px[0] * py[1], -self.amplitude * px[1] * py[0]]
    }

    /// `ρ (u·∇)u - (S u)∇μ - μ Δu`.
    pub fn force(&self, x: f64, y: f64) -> [f64; 2] {
        let a = self.amplitude;
        let (px, py) = (p(x), p(y));
        let phi = a * px[0] * py[0];
        let grad_phi = [a * px[1] * py[0], a * px[0] * py[1]];
        let s = self.slope();
        let (rho, mu) = (1.0 + s * phi, 1.0 + s * phi);
        let grad_mu = [s * grad_phi[0], s * grad_phi[1]];
        let u = self.velocity(x, y);
        // g[i][j] = ∂_j u_i
        let g = [[a * px[1] * py[1], a * px[0] * py[2]], [-a * px[2] * py[0], -a * px[1] * py[1]]];
        let lap = [a * (px[2] * py[1] + px[0] * py[3]), -a * (px[3] * py[0] + px[1] * py[2])];
        let mut f = [0.0; 2];
        for i in 0..2 {
            let conv = u[0] * g[i][0] + u[1] * g[i][1];
            let shear: f64 = (0..2).map(|j| (g[i][j] + g[j][i]) * grad_mu[j]).sum();
            f[i] = rho * conv - shear - mu * lap[i];
        }
        f
    }

    pub fn spec(&self, n: usize) -> Result<ProblemSpec> {
        let grid = Grid::unit_square(n)?;
        let law = if self.variable_coefficients {
            ClosureTable::piecewise_linear(vec![0.0, self.stream_max()], vec![1.0, 1.5])?
        } else {
            ClosureTable::constant(1.0)?
        };
        let identity = if self.variable_coefficients {
            ClosureTable::piecewise_linear(vec![1.0, 1.5], vec![1.0, 1.5])?
        } else {
            ClosureTable::constant(1.0)?
        };
        let mut spec = ProblemSpec::new(grid, law, identity);
        spec.force = VectorField::from_fn(grid, |x, y| self.force(x, y));
        spec.tol_rel = 1e-11;
        spec.tol_abs = 1e-13;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceLevel {
    pub n: usize,
    pub h: f64,
    pub l2_error: f64,
    pub max_error: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `log2(e_prev / e)`; absent on the coarsest level.
    pub order: Option<f64>,
}

/// Weighted discrete L² norm of `a - b`.
pub fn l2_difference(a: &ScalarField, b: &ScalarField) -> f64 {
    let g = a.grid;
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let d = a.at(i, j) - b.at(i, j);
            s += g.quad_weight(i, j) * d * d;
        }
    }
    s.sqrt()
}

/// Solves on `levels` grids with `n = (base - 1) 2^k + 1` nodes per side.
pub fn convergence_study(case: &ManufacturedCase, base: usize, levels: usize) -> Result<Vec<ConvergenceLevel>> {
    if levels < 2 {
        return Err(Error::InvalidProblem("a convergence study needs at least two levels".into()));
    }
    let mut out: Vec<ConvergenceLevel> = Vec::with_capacity(levels);
    for k in 0..levels {
        let n = (base - 1) * (1 << k) + 1;
        let spec = case.spec(n)?;
        let (phi, report) = solve_stream(&spec)?;
        let exact = ScalarField::from_fn(spec.grid, |x, y| case.stream(x, y));
        let l2_error = l2_difference(&phi, &exact);
        let max_error = phi.values.iter().zip(&exact.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let order = out.last().map(|prev| (prev.l2_error / l2_error).log2());
        out.push(ConvergenceLevel {
            n,
            h: spec.grid.h1(),
            l2_error,
            max_error,
            iterations: report.iterations,
            converged: report.converged,
            order,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_derivatives_are_consistent() {
        let c = ManufacturedCase::default();
        let d = 1e-5;
        for (x, y) in [(0.3, 0.6), (0.71, 0.2)] {
            let u = c.velocity(x, y);
            let d2 = (c.stream(x, y + d) - c.stream(x, y - d)) / (2.0 * d);
            let d1 = (c.stream(x + d, y) - c.stream(x - d, y)) / (2.0 * d);
            assert!((u[0] - d2).abs() < 1e-9 && (u[1] + d1).abs() < 1e-9);
        }
        assert_eq!(c.stream(0.5, 0.5), c.stream_max());
    }

    #[test]
    fn force_matches_finite_difference_momentum() {
        // Independent evaluation of ρ(u·∇)u - div(μ S u) by nested central differences.
        let c = ManufacturedCase::default();
        let s = 0.5 / c.stream_max();
        let coef = |x: f64, y: f64| 1.0 + s * c.stream(x, y);
        let d = 1e-3;
        let grad = |x: f64, y: f64| {
            let (xp, xm, yp, ym) = (c.velocity(x + d, y), c.velocity(x - d, y), c.velocity(x, y + d), c.velocity(x, y - d));
            [[(xp[0] - xm[0]) / (2.0 * d), (yp[0] - ym[0]) / (2.0 * d)], [(xp[1] - xm[1]) / (2.0 * d), (yp[1] - ym[1]) / (2.0 * d)]]
        };
        let stress = |x: f64, y: f64, i: usize, j: usize| {
            let g = grad(x, y);
            coef(x, y) * (g[i][j] + g[j][i])
        };
        for (x, y) in [(0.3, 0.6), (0.55, 0.45), (0.8, 0.15)] {
            let u = c.velocity(x, y);
            let g = grad(x, y);
            let f = c.force(x, y);
            for i in 0..2 {
                let conv = coef(x, y) * (u[0] * g[i][0] + u[1] * g[i][1]);
                let div = (stress(x + d, y, i, 0) - stress(x - d, y, i, 0)) / (2.0 * d)
                    + (stress(x, y + d, i, 1) - stress(x, y - d, i, 1)) / (2.0 * d);
                assert!((conv - div - f[i]).abs() < 1e-4 * (1.0 + f[i].abs()), "{} vs {}", conv - div, f[i]);
            }
        }
    }

    #[test]
    fn single_level_is_rejected() {
        assert!(convergence_study(&ManufacturedCase::default(), 9, 1).is_err());
    }

    #[test]
    fn coarse_study_converges() {
        let levels = convergence_study(&ManufacturedCase::default(), 9, 2).unwrap();
        assert!(levels.iter().all(|l| l.converged));
        assert!(levels[1].l2_error < levels[0].l2_error);
    }
}
