//! Radial flow `u = h(θ)/r e_r` in a sector.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use super::profile::{Coordinate, Piece, PiecewiseProfile, Term};
use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;

const MAX_NEWTON_STEPS: usize = 50;
const NEWTON_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct RadialExample {
    pub h: PiecewiseProfile,
    pub rho: PiecewiseProfile,
    pub mu: PiecewiseProfile,
}

/// Two-level viscosity on `[0, π/2]` with the piecewise-linear `h` that keeps `μ h'` constant
/// and the density `ρ = -4μ/h` that cancels the remaining terms.
pub fn radial_example() -> RadialExample {
    let breaks = vec![0.0, FRAC_PI_4, FRAC_PI_2];
    let h = PiecewiseProfile::new(
        Coordinate::Angle,
        breaks.clone(),
        vec![
            Piece::Analytic(vec![Term::pow(-1.0, 1), Term::pow(-FRAC_PI_2, 0)]),
            Piece::Analytic(vec![Term::pow(-2.0, 1), Term::pow(-FRAC_PI_4, 0)]),
        ],
    )
    .expect("static breakpoints");
    let rho = PiecewiseProfile::new(
        Coordinate::Angle,
        breaks.clone(),
        vec![
            Piece::Analytic(vec![Term::inv_shift(8.0, FRAC_PI_2)]),
            Piece::Analytic(vec![Term::inv_shift(2.0, FRAC_PI_8)]),
        ],
    )
    .expect("static breakpoints");
    let mu = PiecewiseProfile::piecewise_constant(Coordinate::Angle, breaks, &[2.0, 1.0]).expect("static breakpoints");
    RadialExample { h, rho, mu }
}

/// Nodal residual of `ρh² + (μh')' + 4μh - C` with the flux differenced at midpoints.
fn residual(h: &[f64], rho: &[f64], mu_node: &[f64], mu_mid: &[f64], c: f64, dt: f64, out: &mut [f64]) {
    let n = h.len() - 1;
    out[0] = 0.0;
    out[n] = 0.0;
    for k in 1..n {
        let diff = (mu_mid[k] * (h[k + 1] - h[k]) - mu_mid[k - 1] * (h[k] - h[k - 1])) / (dt * dt);
        out[k] = rho[k] * h[k] * h[k] + diff + 4.0 * mu_node[k] * h[k] - c;
    }
}

/// Damped Newton on a uniform angular grid over the viscosity profile's domain.
/// Returns the nodal solution as Hermite pieces split at grid-aligned viscosity breakpoints.
pub fn radial_bvp(
    rho: &PiecewiseProfile,
    mu: &PiecewiseProfile,
    c: f64,
    h_left: f64,
    h_right: f64,
    n_theta: usize,
) -> Result<PiecewiseProfile> {
    let (ts, h) = radial_bvp_nodes(rho, mu, c, h_left, h_right, n_theta)?;
    nodal_profile(mu, &ts, &h)
}

/// Richardson combination `(4 h_{2n} - h_n) / 3` of two Newton solves, sampled on the coarse grid.
pub fn radial_bvp_richardson(
    rho: &PiecewiseProfile,
    mu: &PiecewiseProfile,
    c: f64,
    h_left: f64,
    h_right: f64,
    n_theta: usize,
) -> Result<PiecewiseProfile> {
    let (ts, coarse) = radial_bvp_nodes(rho, mu, c, h_left, h_right, n_theta)?;
    let (_, fine) = radial_bvp_nodes(rho, mu, c, h_left, h_right, 2 * n_theta)?;
    let h: Vec<f64> = coarse.iter().enumerate().map(|(k, &v)| (4.0 * fine[2 * k] - v) / 3.0).collect();
    nodal_profile(mu, &ts, &h)
}

fn radial_bvp_nodes(
    rho: &PiecewiseProfile,
    mu: &PiecewiseProfile,
    c: f64,
    h_left: f64,
    h_right: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 16 {
        return Err(Error::InvalidProblem(format!("n_theta must be at least 16, got {n}")));
    }
    let (a, b) = mu.domain();
    let dt = (b - a) / n as f64;
    let ts: Vec<f64> = (0..=n).map(|k| if k == n { b } else { a + k as f64 * dt }).collect();
    let rho_n: Vec<f64> = ts.iter().map(|&t| rho.value(t)).collect();
    let mu_n: Vec<f64> = ts.iter().map(|&t| mu.value(t)).collect();
    let mu_m: Vec<f64> = (0..n).map(|k| mu.value(a + (k as f64 + 0.5) * dt)).collect();
    if mu_n.iter().chain(&mu_m).any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidProblem("viscosity profile must be positive".into()));
    }
    let mut h: Vec<f64> = ts.iter().map(|&t| h_left + (h_right - h_left) * (t - a) / (b - a)).collect();
    h[n] = h_right;
    let mu_max = mu_n.iter().chain(&mu_m).copied().fold(0.0, f64::max);
    let mut f = vec![0.0; n + 1];
    let mut trace = Vec::new();
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = |h: &[f64]| mu_max / (dt * dt) * norm(h).max(1.0) + c.abs();
    residual(&h, &rho_n, &mu_n, &mu_m, c, dt, &mut f);
    let mut fnorm = norm(&f);
    for _ in 0..MAX_NEWTON_STEPS {
        trace.push(fnorm);
        if fnorm <= NEWTON_TOL * scale(&h) {
            return Ok((ts, h));
        }
        let m = n - 1;
        let (mut lower, mut diag, mut upper) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for k in 1..n {
            diag[k - 1] = 2.0 * rho_n[k] * h[k] - (mu_m[k] + mu_m[k - 1]) / (dt * dt) + 4.0 * mu_n[k];
            if k > 1 {
                lower[k - 1] = mu_m[k - 1] / (dt * dt);
            }
            if k < n - 1 {
                upper[k - 1] = mu_m[k] / (dt * dt);
            }
        }
        let rhs: Vec<f64> = f[1..n].iter().map(|v| -v).collect();
        let step = solve_tridiagonal(&lower, &diag, &upper, &rhs)
            .ok_or_else(|| Error::NewtonFailure { steps: trace.len(), trace: trace.clone() })?;
        let mut lambda = 1.0;
        let mut trial = h.clone();
        let mut ft = vec![0.0; n + 1];
        loop {
            for k in 1..n {
                trial[k] = h[k] + lambda * step[k - 1];
            }
            residual(&trial, &rho_n, &mu_n, &mu_m, c, dt, &mut ft);
            if norm(&ft) < fnorm || lambda < 1e-4 {
                break;
            }
            lambda *= 0.5;
        }
        let moved = lambda * norm(&step);
        h = trial;
        f = ft;
        fnorm = norm(&f);
        if moved <= 4.0 * f64::EPSILON * norm(&h).max(1.0) {
            trace.push(fnorm);
            return Ok((ts, h));
        }
    }
    trace.push(fnorm);
    Err(Error::NewtonFailure { steps: MAX_NEWTON_STEPS, trace })
}

/// Hermite pieces through nodal values, with second-order one-sided slopes at piece ends.
fn nodal_profile(mu: &PiecewiseProfile, ts: &[f64], h: &[f64]) -> Result<PiecewiseProfile> {
    let n = ts.len() - 1;
    let dt = ts[1] - ts[0];
    let mut cuts = vec![0];
    for &b in &mu.breaks[1..mu.breaks.len() - 1] {
        let k = ((b - ts[0]) / dt).round() as usize;
        if k > 1 && k + 1 < n && (ts[k] - b).abs() <= 1e-9 * dt {
            cuts.push(k);
        }
    }
    cuts.push(n);
    let mut breaks = vec![ts[0]];
    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        let xs = ts[s..=e].to_vec();
        let ys = h[s..=e].to_vec();
        let m = ys.len() - 1;
        let mut dys = vec![0.0; m + 1];
        for k in 1..m {
            dys[k] = (ys[k + 1] - ys[k - 1]) / (2.0 * dt);
        }
        dys[0] = (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) / (2.0 * dt);
        dys[m] = (3.0 * ys[m] - 4.0 * ys[m - 1] + ys[m - 2]) / (2.0 * dt);
        breaks.push(ts[e]);
        pieces.push(Piece::Sampled { xs, ys, dys });
    }
    *breaks.last_mut().unwrap() = ts[n];
    PiecewiseProfile::new(Coordinate::Angle, breaks, pieces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn example_values() {
        let ex = radial_example();
        assert!((ex.h.value(0.0) + FRAC_PI_2).abs() < 1e-15);
        assert!((ex.h.value(FRAC_PI_2) + 1.25 * PI).abs() < 1e-15);
        let ((l, r), (dl, dr)) = ex.h.limits(1);
        assert!((l + 0.75 * PI).abs() < 1e-15 && (r + 0.75 * PI).abs() < 1e-15);
        assert_eq!((2.0 * dl, 1.0 * dr), (-2.0, -2.0));
        assert!((ex.rho.value(0.0) - 16.0 / PI).abs() < 1e-14);
        for (t, v, _) in ex.h.sample(20) {
            assert!((ex.rho.value(t) + 4.0 * ex.mu.value(t) / v).abs() < 1e-13);
        }
    }

    #[test]
    fn bvp_reproduces_example() {
        let ex = radial_example();
        let sol = radial_bvp(&ex.rho, &ex.mu, 0.0, -FRAC_PI_2, -1.25 * PI, 512).unwrap();
        let err = (0..=512).map(|k| k as f64 * FRAC_PI_2 / 512.0).map(|t| (sol.value(t) - ex.h.value(t)).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-6, "{err}");
        assert_eq!(sol.pieces.len(), 2);
    }

    #[test]
    fn linear_case_is_a_sine() {
        let mu = PiecewiseProfile::piecewise_constant(Coordinate::Angle, vec![0.0, FRAC_PI_4], &[1.0]).unwrap();
        let rho = PiecewiseProfile::piecewise_constant(Coordinate::Angle, vec![0.0, FRAC_PI_4], &[0.0]).unwrap();
        let plain = radial_bvp(&rho, &mu, 0.0, 0.0, 1.0, 512).unwrap();
        let extra = radial_bvp_richardson(&rho, &mu, 0.0, 0.0, 1.0, 512).unwrap();
        let err = |p: &PiecewiseProfile| {
            (0..=512).map(|k| k as f64 * FRAC_PI_4 / 512.0).map(|t| (p.value(t) - (2.0 * t).sin()).abs()).fold(0.0, f64::max)
        };
        assert!(err(&plain) < 1e-5);
        assert!(err(&extra) <= 1e-8, "{}", err(&extra));
    }

    #[test]
    fn zero_data_gives_zero() {
        let ex = radial_example();
        let sol = radial_bvp(&ex.rho, &ex.mu, 0.0, 0.0, 0.0, 64).unwrap();
        assert!(sol.sample(10).iter().all(|&(_, v, _)| v == 0.0));
        assert!(radial_bvp(&ex.rho, &ex.mu, 0.0, 0.0, 0.0, 8).is_err());
    }

    #[test]
    fn newton_failure_reports_trace() {
        // Forcing far beyond what the quadratic term can balance.
        let mu = PiecewiseProfile::piecewise_constant(Coordinate::Angle, vec![0.0, 1.0], &[1.0]).unwrap();
        let rho = PiecewiseProfile::piecewise_constant(Coordinate::Angle, vec![0.0, 1.0], &[1e3]).unwrap();
        match radial_bvp(&rho, &mu, -1e9, 0.0, 0.0, 32) {
            Err(Error::NewtonFailure { trace, .. }) => assert!(!trace.is_empty()),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
