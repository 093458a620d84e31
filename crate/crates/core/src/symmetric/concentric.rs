//! Azimuthal flow `u = r g(r) e_θ` in the annulus `1/2 <= r <= 2`.

use super::profile::{Coordinate, Piece, PiecewiseProfile, Term};
use super::quadrature::integrate_flux_law;
use crate::error::Result;

pub const INNER_RADIUS: f64 = 0.5;
pub const OUTER_RADIUS: f64 = 2.0;

/// `(C, C2)` matching `g(1/2) = g_minus`, `g(2) = g_plus` for the two-level viscosity.
pub fn concentric_constants(g_minus: f64, g_plus: f64, c1: f64) -> (f64, f64) {
    let c = 4.0 / (3.0 * std::f64::consts::LN_2) * (9.0 / 8.0 * c1 - g_plus + g_minus);
    let c2 = (9.0 / 8.0 * c1 + g_plus + 2.0 * g_minus) / 3.0;
    (c, c2)
}

/// Viscosity 2 inside `r < 1` and 1 outside.
pub fn concentric_viscosity() -> PiecewiseProfile {
    PiecewiseProfile::piecewise_constant(Coordinate::Radius, vec![INNER_RADIUS, 1.0, OUTER_RADIUS], &[2.0, 1.0])
        .expect("static profile")
}

pub fn concentric_profile(c: f64, c1: f64, c2: f64) -> PiecewiseProfile {
    let branch = |m: f64| {
        Piece::Analytic(vec![Term::ln(-c / (2.0 * m)), Term::pow(-c1 / (2.0 * m), -2), Term::pow(c1 / (2.0 * m) + c2, 0)])
    };
    PiecewiseProfile::new(Coordinate::Radius, vec![INNER_RADIUS, 1.0, OUTER_RADIUS], vec![branch(2.0), branch(1.0)])
        .expect("static breakpoints")
}

/// Solves `(r³ μ g')' = -C r` with flux `r³ μ g'(1) = -C/2 + C1` and `g(1) = C2`.
pub fn concentric_ode(mu: &PiecewiseProfile, c: f64, c1: f64, c2: f64) -> Result<PiecewiseProfile> {
    integrate_flux_law(
        mu,
        1.0,
        c2,
        |r| (-0.5 * c * r * r + c1) / (r * r * r),
        vec![Term::ln(-0.5 * c), Term::pow(-0.5 * c1, -2)],
    )
}

/// `μ r³ g'`, the conserved angular-momentum flux.
pub fn concentric_flux(g: &PiecewiseProfile, mu: &PiecewiseProfile, r: f64) -> f64 {
    mu.value(r) * r.powi(3) * g.derivative(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants_examples() {
        assert_eq!(concentric_constants(0.0, 0.0, 0.0), (0.0, 0.0));
        let (c, c2) = concentric_constants(0.7, 0.7, 0.0);
        assert_eq!(c, 0.0);
        assert!((c2 - 0.7).abs() < 1e-15);
        let (c, c2) = concentric_constants(1.0, 2.0, 0.0);
        assert!((c + 4.0 / (3.0 * 2f64.ln())).abs() < 1e-15);
        assert!((c + 1.9235933878519513).abs() < 1e-15, "{c}");
        assert!((c2 - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rigid_rotation_has_no_shear() {
        let p = concentric_profile(0.0, 0.0, 1.3);
        for (_, v, d) in p.sample(20) {
            assert!((v - 1.3).abs() < 1e-15 && d == 0.0);
        }
        let mu = PiecewiseProfile::piecewise_constant(Coordinate::Radius, vec![0.5, 2.0], &[3.0]).unwrap();
        let q = concentric_ode(&mu, 0.0, 0.0, 1.3).unwrap();
        assert!(q.sample(20).iter().all(|&(_, v, d)| v == 1.3 && d == 0.0));
    }

    #[test]
    fn ode_matches_closed_form() {
        let (c, c2) = concentric_constants(0.4, -1.1, 0.9);
        let exact = concentric_profile(c, 0.9, c2);
        let num = concentric_ode(&concentric_viscosity(), c, 0.9, c2).unwrap();
        for (r, _, _) in exact.sample(64) {
            let (v, d) = (exact.value(r), exact.derivative(r));
            assert!((num.value(r) - v).abs() <= 1e-12 * v.abs().max(1.0), "{r}");
            assert!((num.derivative(r) - d).abs() <= 1e-12 * d.abs().max(1.0), "{r}");
        }
        assert!(exact.eval(0.0).is_err());
    }

    #[test]
    fn smooth_viscosity_residual_is_second_order() {
        // Central residual of (r³ μ g')' + C r for a quadrature solution with smooth μ.
        let m = |r: f64| 1.0 + 0.3 * r;
        let xs: Vec<f64> = (0..=300).map(|k| 0.5 + 1.5 * k as f64 / 300.0).collect();
        let mu = PiecewiseProfile::new(
            Coordinate::Radius,
            vec![0.5, 2.0],
            vec![Piece::Sampled { ys: xs.iter().map(|&r| m(r)).collect(), dys: vec![0.3; xs.len()], xs }],
        )
        .unwrap();
        let (c, c1) = (1.2, 0.4);
        let g = concentric_ode(&mu, c, c1, 0.5).unwrap();
        let res = |h: f64| {
            let mut worst = 0.0f64;
            let mut r = 0.7;
            while r < 1.8 {
                let flux = |s: f64| s.powi(3) * m(s) * (g.value(s + 0.5 * h) - g.value(s - 0.5 * h)) / h;
                let lhs = (flux(r + 0.5 * h) - flux(r - 0.5 * h)) / h;
                worst = worst.max((lhs + c * r).abs());
                r += 0.1;
            }
            worst
        };
        let (e1, e2) = (res(0.04), res(0.02));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    proptest! {
        #[test]
        fn boundary_round_trip_and_flux(gm in -5.0..5.0f64, gp in -5.0..5.0f64, c1 in -5.0..5.0f64) {
            let (c, c2) = concentric_constants(gm, gp, c1);
            let p = concentric_profile(c, c1, c2);
            let scale = 1.0 + gm.abs() + gp.abs() + c1.abs();
            prop_assert!((p.value(0.5) - gm).abs() <= 1e-12 * scale);
            prop_assert!((p.value(2.0) - gp).abs() <= 1e-12 * scale);
            let ((vl, vr), (dl, dr)) = p.limits(1);
            prop_assert!((vl - c2).abs() <= 1e-14 * scale && (vr - c2).abs() <= 1e-14 * scale);
            let flux = -0.5 * c + c1;
            prop_assert!((2.0 * dl - flux).abs() <= 1e-13 * scale);
            prop_assert!((1.0 * dr - flux).abs() <= 1e-13 * scale);
        }
    }
}
