//! Stream-function residuals of the one-dimensional families and polar identity checks.

use super::profile::PiecewiseProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Family {
    /// `profile = u1(x2)`; residual of `(μ u1')'' = 0`.
    Couette,
    /// `profile = g(r)`; residual of `(μ r³ g')'' + C = 0`.
    Concentric,
    /// `profile = h(θ)`; residual of `ρh² + (μh')' + 4μh - C = 0`.
    Radial,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "couette" => Ok(Family::Couette),
            "concentric" => Ok(Family::Concentric),
            "radial" => Ok(Family::Radial),
            _ => Err(Error::Config(format!("unknown family {s:?}"))),
        }
    }
}

const SAMPLES_PER_PIECE: usize = 40;

/// Max-norm residual of the fourth-order stream equation, by conservative central differences
/// at sample points whose stencils stay inside a single viscosity piece.
pub fn symmetric_stream_residual(
    family: Family,
    profile: &PiecewiseProfile,
    mu: &PiecewiseProfile,
    rho: Option<&PiecewiseProfile>,
    c: f64,
) -> Result<f64> {
    if family == Family::Radial && rho.is_none() {
        return Err(Error::InvalidProblem("radial residual needs a density profile".into()));
    }
    let mut breaks: Vec<f64> = mu.breaks.iter().chain(&profile.breaks).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut worst = 0.0f64;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = (b - a) / 400.0;
        for s in 1..SAMPLES_PER_PIECE {
            let x = a + (b - a) * s as f64 / SAMPLES_PER_PIECE as f64;
            let r = match family {
                Family::Couette => {
                    let q = |y: f64| mu.value(y) * profile.derivative(y);
                    (q(x + d) - 2.0 * q(x) + q(x - d)) / (d * d)
                }
                Family::Concentric => {
                    let q = |y: f64| mu.value(y) * y.powi(3) * profile.derivative(y);
                    (q(x + d) - 2.0 * q(x) + q(x - d)) / (d * d) + c
                }
                Family::Radial => {
                    let rho = rho.unwrap();
                    let q = |y: f64| mu.value(y) * profile.derivative(y);
                    let h = profile.value(x);
                    rho.value(x) * h * h + (q(x + 0.5 * d) - q(x - 0.5 * d)) / d + 4.0 * mu.value(x) * h - c
                }
            };
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

type Radial = dyn Fn(f64) -> f64;

fn central(f: impl Fn(f64, f64) -> [f64; 2], x: f64, y: f64, d: f64) -> ([f64; 2], [f64; 2]) {
    let (xp, xm, yp, ym) = (f(x + d, y), f(x - d, y), f(x, y + d), f(x, y - d));
    let dx = [(xp[0] - xm[0]) / (2.0 * d), (xp[1] - xm[1]) / (2.0 * d)];
    let dy = [(yp[0] - ym[0]) / (2.0 * d), (yp[1] - ym[1]) / (2.0 * d)];
    (dx, dy)
}

/// Largest relative mismatch between `ρ(u·∇)u` computed by Cartesian differences and
/// `-r ρ g² e_r` for `u = r g(r) e_θ`, over a polar sample of `r_range × [0, 2π)`.
pub fn concentric_convection_check(g: &Radial, rho: &Radial, r_range: (f64, f64), d: f64) -> f64 {
    let u = |x: f64, y: f64| {
        let gr = g(x.hypot(y));
        [-y * gr, x * gr]
    };
    let mut worst = 0.0f64;
    for (x, y) in polar_samples(r_range, (0.0, 2.0 * std::f64::consts::PI)) {
        let v = u(x, y);
        let (dx, dy) = central(u, x, y, d);
        let r = x.hypot(y);
        let rh = rho(r);
        let lhs = [rh * (v[0] * dx[0] + v[1] * dy[0]), rh * (v[0] * dx[1] + v[1] * dy[1])];
        let gr = g(r);
        let rhs = [-rh * gr * gr * x, -rh * gr * gr * y];
        let scale = rh.abs() * gr * gr * r + 1e-300;
        worst = worst.max((lhs[0] - rhs[0]).hypot(lhs[1] - rhs[1]) / scale);
    }
    worst
}

/// Largest relative mismatch between `div(μ S u)` computed by nested Cartesian differences and
/// `(μh')'/r³ e_r + 2(μh)'/r³ e_θ` for `u = h(θ)/r e_r` with `μ = μ(θ)`.
/// `h` and `mu` return value and derivative.
pub fn radial_viscous_check(
    h: &dyn Fn(f64) -> (f64, f64),
    mu: &dyn Fn(f64) -> (f64, f64),
    flux_derivative: &dyn Fn(f64) -> f64,
    r_range: (f64, f64),
    theta_range: (f64, f64),
    d: f64,
) -> f64 {
    let u = |x: f64, y: f64| {
        let r2 = x * x + y * y;
        let hv = h(y.atan2(x)).0;
        [hv * x / r2, hv * y / r2]
    };
    let stress_row = |row: usize| {
        move |x: f64, y: f64| {
            let (dx, dy) = central(u, x, y, d);
            let m = mu(y.atan2(x)).0;
            // rows of μ (∇u + ∇uᵀ), with (∇u)_{ij} = ∂_j u_i
            let s = [[2.0 * dx[0], dy[0] + dx[1]], [dx[1] + dy[0], 2.0 * dy[1]]];
            [m * s[row][0], m * s[row][1]]
        }
    };
    let mut worst = 0.0f64;
    for (x, y) in polar_samples(r_range, theta_range) {
        let mut div = [0.0; 2];
        for (row, out) in div.iter_mut().enumerate() {
            let (dx, dy) = central(stress_row(row), x, y, d);
            *out = dx[0] + dy[1];
        }
        let (r, t) = (x.hypot(y), y.atan2(x));
        let ((hv, hd), (mv, md)) = (h(t), mu(t));
        let r3 = r * r * r;
        let radial = flux_derivative(t) / r3;
        let azimuthal = 2.0 * (md * hv + mv * hd) / r3;
        let (c, s) = (t.cos(), t.sin());
        let rhs = [radial * c - azimuthal * s, radial * s + azimuthal * c];
        let scale = radial.abs() + azimuthal.abs() + 1e-300;
        worst = worst.max((div[0] - rhs[0]).hypot(div[1] - rhs[1]) / scale);
    }
    worst
}

/// Largest relative mismatch between the Cartesian vector Laplacian of `u = h(θ)/r e_r` and
/// `h''/r³ e_r + 2h'/r³ e_θ`. `h` returns value, first and second derivative.
pub fn radial_laplacian_check(h: &dyn Fn(f64) -> [f64; 3], r_range: (f64, f64), theta_range: (f64, f64), d: f64) -> f64 {
    let u = |x: f64, y: f64| {
        let r2 = x * x + y * y;
        let hv = h(y.atan2(x))[0];
        [hv * x / r2, hv * y / r2]
    };
    let mut worst = 0.0f64;
    for (x, y) in polar_samples(r_range, theta_range) {
        let c0 = u(x, y);
        let (xp, xm, yp, ym) = (u(x + d, y), u(x - d, y), u(x, y + d), u(x, y - d));
        let lap = [
            (xp[0] + xm[0] + yp[0] + ym[0] - 4.0 * c0[0]) / (d * d),
            (xp[1] + xm[1] + yp[1] + ym[1] - 4.0 * c0[1]) / (d * d),
        ];
        let (r, t) = (x.hypot(y), y.atan2(x));
        let [_, h1, h2] = h(t);
        let r3 = r * r * r;
        let (er, et) = (h2 / r3, 2.0 * h1 / r3);
        let (c, s) = (t.cos(), t.sin());
        let rhs = [er * c - et * s, er * s + et * c];
        let scale = er.abs() + et.abs() + 1e-300;
        worst = worst.max((lap[0] - rhs[0]).hypot(lap[1] - rhs[1]) / scale);
    }
    worst
}

fn polar_samples(r_range: (f64, f64), theta_range: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for a in 1..8 {
        let r = r_range.0 + (r_range.1 - r_range.0) * a as f64 / 8.0;
        for b in 1..12 {
            let t = theta_range.0 + (theta_range.1 - theta_range.0) * b as f64 / 12.0;
            out.push((r * t.cos(), r * t.sin()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::concentric::{concentric_constants, concentric_profile, concentric_viscosity};
    use super::super::couette::{couette_constants, couette_profile, couette_viscosity};
    use super::super::profile::Coordinate;
    use super::super::radial::radial_example;
    use super::*;

    #[test]
    fn closed_forms_annihilate_their_operators() {
        let (c, c2) = couette_constants(1.0, 2.0, 0.4);
        let r = symmetric_stream_residual(Family::Couette, &couette_profile(c, 0.4, c2), &couette_viscosity(), None, c).unwrap();
        assert!(r <= 1e-8, "{r}");
        let (c, c2) = concentric_constants(1.0, 2.0, 0.3);
        let g = concentric_profile(c, 0.3, c2);
        let r = symmetric_stream_residual(Family::Concentric, &g, &concentric_viscosity(), None, c).unwrap();
        assert!(r <= 1e-8, "{r}");
        let wrong = symmetric_stream_residual(Family::Concentric, &g, &concentric_viscosity(), None, c + 1.0).unwrap();
        assert!(wrong > 0.5);
        let ex = radial_example();
        let r = symmetric_stream_residual(Family::Radial, &ex.h, &ex.mu, Some(&ex.rho), 0.0).unwrap();
        assert!(r <= 1e-8, "{r}");
    }

    #[test]
    fn zero_profile_has_zero_residual() {
        let z = PiecewiseProfile::piecewise_constant(Coordinate::X2, vec![-1.0, 1.0], &[0.0]).unwrap();
        for f in [Family::Couette, Family::Concentric, Family::Radial] {
            assert_eq!(symmetric_stream_residual(f, &z, &z.clone(), Some(&z), 0.0).unwrap(), 0.0);
        }
        assert!(symmetric_stream_residual(Family::Radial, &z, &z, None, 0.0).is_err());
    }

    #[test]
    fn polar_identities_hold() {
        let g = |r: f64| 0.3 + 1.0 / (r * r) - 0.2 * r.ln();
        let rho = |r: f64| 1.0 + 0.5 * r;
        assert!(concentric_convection_check(&g, &rho, (0.5, 2.0), 1e-4) < 1e-6);
        let h = |t: f64| ((2.0 * t).sin() + t * t, 2.0 * (2.0 * t).cos() + 2.0 * t);
        let mu = |t: f64| (1.0 + t / 3.0, 1.0 / 3.0);
        // (μh')' = μ'h' + μh''
        let flux_prime = |t: f64| {
            let (_, hd) = h(t);
            let hdd = -4.0 * (2.0 * t).sin() + 2.0;
            (1.0 / 3.0) * hd + (1.0 + t / 3.0) * hdd
        };
        let e = radial_viscous_check(&h, &mu, &flux_prime, (1.0, 2.0), (0.1, 1.4), 1e-3);
        assert!(e < 1e-4, "{e}");
        let hl = |t: f64| [(3.0 * t).cos(), -3.0 * (3.0 * t).sin(), -9.0 * (3.0 * t).cos()];
        let e = radial_laplacian_check(&hl, (1.0, 2.0), (0.1, 1.4), 1e-3);
        assert!(e < 1e-4, "{e}");
    }
}
