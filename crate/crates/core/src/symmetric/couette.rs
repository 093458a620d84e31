//! Unidirectional shear flow `u = u1(x2) e1` on the strip `-1 <= x2 <= 1`.

use super::profile::{Coordinate, Piece, PiecewiseProfile, Term};
use super::quadrature::integrate_flux_law;
use crate::error::{Error, Result};
use crate::fields::ClosureTable;

/// `(C, C2)` matching `u1(-1) = a_minus`, `u1(1) = a_plus` for the two-level viscosity.
pub fn couette_constants(a_minus: f64, a_plus: f64, c1: f64) -> (f64, f64) {
    (4.0 * (a_minus - a_plus) + 6.0 * c1, 2.0 * a_plus - a_minus - 2.0 * c1)
}

/// Viscosity 1 below `x2 = 0` and 2 above.
pub fn couette_viscosity() -> PiecewiseProfile {
    PiecewiseProfile::piecewise_constant(Coordinate::X2, vec![-1.0, 0.0, 1.0], &[1.0, 2.0]).expect("static profile")
}

pub fn couette_profile(c: f64, c1: f64, c2: f64) -> PiecewiseProfile {
    PiecewiseProfile::new(
        Coordinate::X2,
        vec![-1.0, 0.0, 1.0],
        vec![Piece::quadratic(0.5 * c, c1, c2), Piece::quadratic(0.25 * c, 0.5 * c1, c2)],
    )
    .expect("static breakpoints")
}

/// Solves `(μ u1')' = C` with flux `μ u1'(0) = C1` and `u1(0) = C2`.
pub fn couette_ode(mu: &PiecewiseProfile, c: f64, c1: f64, c2: f64) -> Result<PiecewiseProfile> {
    integrate_flux_law(
        mu,
        0.0,
        c2,
        |s| c * s + c1,
        vec![Term::pow(0.5 * c, 2), Term::pow(c1, 1)],
    )
}

/// Stream function `Φ = C3 + ∫_0^{x2} u1` of the closed-form profile, evaluated at `x2`.
pub fn couette_stream(c: f64, c1: f64, c2: f64, c3: f64, x2: f64) -> f64 {
    if x2 <= 0.0 {
        c3 + c / 6.0 * x2.powi(3) + 0.5 * c1 * x2 * x2 + c2 * x2
    } else {
        c3 + c / 12.0 * x2.powi(3) + 0.25 * c1 * x2 * x2 + c2 * x2
    }
}

#[derive(Debug, Clone)]
pub struct CouetteDensity {
    pub eta: ClosureTable,
    pub stream_bottom: f64,
    pub stream_top: f64,
}

/// Density law that produces the two viscosity levels on either side of `Φ = C3`.
/// `b` is the viscosity law, inverted at 1 and 2; `ramp` is the width of the linear transition.
pub fn couette_eta_table(
    a_minus: f64,
    a_plus: f64,
    c1: f64,
    c3: f64,
    b: &ClosureTable,
    ramp: f64,
) -> Result<CouetteDensity> {
    if !(a_plus < a_minus && a_minus < 2.0 * a_plus) {
        return Err(Error::Precondition(format!("need a_plus < a_minus < 2 a_plus, got {a_minus}, {a_plus}")));
    }
    let c1_max = 0.5 * (2.0 * a_plus - a_minus);
    if !(c1 > 0.0 && c1 < c1_max) {
        return Err(Error::Precondition(format!("need 0 < C1 < {c1_max}, got {c1}")));
    }
    let stream_bottom = 1.5 * c1 + c3 - 4.0 / 3.0 * a_plus + a_minus / 3.0;
    let stream_top = c3 - 2.0 / 3.0 * a_minus + 5.0 / 3.0 * a_plus - 1.25 * c1;
    let eta = ClosureTable::step(c3, b.invert(1.0)?, b.invert(2.0)?, ramp)?;
    Ok(CouetteDensity { eta, stream_bottom, stream_top })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants_examples() {
        assert_eq!(couette_constants(0.0, 0.0, 0.0), (0.0, 0.0));
        assert_eq!(couette_constants(1.0, 2.0, 0.0), (-4.0, 3.0));
        assert_eq!(couette_constants(2.5, 2.5, 0.0), (0.0, 2.5));
        let p = couette_profile(-4.0, 0.0, 3.0);
        assert_eq!(p.value(-1.0), 1.0);
        assert_eq!(p.value(0.0), 3.0);
        assert_eq!(p.value(1.0), 2.0);
        let flat = couette_profile(0.0, 0.0, 1.7);
        assert!(flat.sample(10).iter().all(|&(_, v, d)| v == 1.7 && d == 0.0));
    }

    #[test]
    fn ode_matches_closed_form_on_breakpoints() {
        let mu = couette_viscosity();
        let (c, c1, c2) = (-3.1, 0.7, 1.9);
        let exact = couette_profile(c, c1, c2);
        let num = couette_ode(&mu, c, c1, c2).unwrap();
        for x in [-1.0, 0.0, 1.0] {
            assert_eq!(num.value(x), exact.value(x));
        }
        for (x, v, _) in exact.sample(50) {
            assert!((num.value(x) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn ode_constant_viscosity_is_classical() {
        let nu = 0.8;
        let mu = PiecewiseProfile::piecewise_constant(Coordinate::X2, vec![-1.0, 1.0], &[nu]).unwrap();
        let (c, c1, c2) = (2.0, -0.5, 0.3);
        let p = couette_ode(&mu, c, c1, c2).unwrap();
        for x in [-0.9, -0.2, 0.4, 1.0] {
            let e = c / (2.0 * nu) * x * x + c1 / nu * x + c2;
            assert!((p.value(x) - e).abs() < 1e-14);
        }
        let z = couette_ode(&mu, 0.0, 0.0, 4.0).unwrap();
        assert!(z.sample(8).iter().all(|&(_, v, _)| v == 4.0));
    }

    #[test]
    fn ode_smooth_viscosity_uses_quadrature() {
        let xs: Vec<f64> = (0..=200).map(|k| -1.0 + k as f64 / 100.0).collect();
        let m = |x: f64| 1.0 + 0.25 * x * x;
        let mu = PiecewiseProfile::new(
            Coordinate::X2,
            vec![-1.0, 1.0],
            vec![Piece::Sampled {
                ys: xs.iter().map(|&x| m(x)).collect(),
                dys: xs.iter().map(|&x| 0.5 * x).collect(),
                xs,
            }],
        )
        .unwrap();
        // u1' = 1/μ, u1 = 2 atan(x/2)
        let p = couette_ode(&mu, 0.0, 1.0, 0.0).unwrap();
        for x in [-0.8, 0.3, 1.0] {
            assert!((p.value(x) - 2.0 * (0.5 * x).atan()).abs() < 1e-7, "{x}");
            assert!((p.derivative(x) - 1.0 / m(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn eta_table_example() {
        let b = ClosureTable::piecewise_linear(vec![0.0, 4.0], vec![0.0, 4.0]).unwrap();
        let d = couette_eta_table(1.5, 1.0, 0.2, 0.0, &b, 0.01).unwrap();
        assert!((d.stream_bottom + 0.5333333333333333).abs() < 1e-14);
        assert!((d.stream_top - 0.4166666666666667).abs() < 1e-14);
        assert_eq!(d.eta.eval(-0.1).unwrap(), 1.0);
        assert_eq!(d.eta.eval(0.1).unwrap(), 2.0);
        assert!(matches!(couette_eta_table(2.5, 1.0, 0.1, 0.0, &b, 0.01), Err(Error::Precondition(_))));
        assert!(couette_eta_table(1.5, 1.0, 0.3, 0.0, &b, 0.01).is_err());
    }

    #[test]
    fn stream_endpoints_match_printed_values() {
        let (am, ap, c1, c3) = (1.5, 1.0, 0.2, 0.4);
        let (c, c2) = couette_constants(am, ap, c1);
        let b = ClosureTable::piecewise_linear(vec![0.0, 4.0], vec![0.0, 4.0]).unwrap();
        let d = couette_eta_table(am, ap, c1, c3, &b, 0.01).unwrap();
        assert!((couette_stream(c, c1, c2, c3, -1.0) - d.stream_bottom).abs() < 1e-14);
        assert!((couette_stream(c, c1, c2, c3, 1.0) - d.stream_top).abs() < 1e-14);
    }

    #[test]
    fn second_derivative_blows_up_across_interface() {
        let c1 = 0.6;
        let p = couette_profile(-1.0, c1, 1.0);
        let mut prev = 0.0;
        for h in [1e-2, 5e-3, 2.5e-3] {
            let d2 = (p.value(h) - 2.0 * p.value(0.0) + p.value(-h)) / (h * h);
            let expect = -0.5 * c1 / h;
            assert!((d2 - expect).abs() < 2.0, "{d2} vs {expect}");
            assert!(d2.abs() > prev);
            prev = d2.abs();
        }
    }

    proptest! {
        #[test]
        fn boundary_round_trip_and_flux(am in -5.0..5.0f64, ap in -5.0..5.0f64, c1 in -5.0..5.0f64) {
            let (c, c2) = couette_constants(am, ap, c1);
            let p = couette_profile(c, c1, c2);
            prop_assert!((p.value(-1.0) - am).abs() <= 1e-13 * (1.0 + am.abs()));
            prop_assert!((p.value(1.0) - ap).abs() <= 1e-13 * (1.0 + ap.abs()));
            let ((vl, vr), (dl, dr)) = p.limits(1);
            prop_assert_eq!(vl, vr);
            prop_assert!((1.0 * dl - c1).abs() < 1e-14 && (2.0 * dr - c1).abs() < 1e-14);
            if c1 != 0.0 {
                prop_assert!((dl / dr - 2.0).abs() < 1e-12);
            }
        }
    }
}
