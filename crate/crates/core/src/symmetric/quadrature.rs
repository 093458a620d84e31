use super::profile::{Piece, PiecewiseProfile, Term};
use crate::error::{Error, Result};

/// Subintervals per piece when the viscosity is not constant on it.
const TRAPEZOID_STEPS: usize = 2000;

/// Integrates `y' = q(x) / μ(x)` with `y(anchor) = value`, where `antiderivative` is an exact
/// antiderivative of `q`. Constant-viscosity pieces are integrated in closed form, the others
/// by the trapezoidal rule and returned as Hermite samples.
pub(crate) fn integrate_flux_law(
    mu: &PiecewiseProfile,
    anchor: f64,
    value: f64,
    q: impl Fn(f64) -> f64,
    antiderivative: Vec<Term>,
) -> Result<PiecewiseProfile> {
    check_positive(mu)?;
    let p = Piece::Analytic(antiderivative);
    let (lo, hi) = mu.domain();
    let start = anchor.clamp(lo, hi);
    let k0 = mu.piece_index(start);
    let anchored = value + segment_integral(&mu.pieces[k0], &p, &q, anchor, start);

    let n = mu.pieces.len();
    let mut out: Vec<Option<Piece>> = vec![None; n];
    out[k0] = Some(solve_piece(&mu.pieces[k0], &p, &q, (mu.breaks[k0], mu.breaks[k0 + 1]), start, anchored));
    for k in k0 + 1..n {
        let x = mu.breaks[k];
        let v = out[k - 1].as_ref().unwrap().value(x);
        out[k] = Some(solve_piece(&mu.pieces[k], &p, &q, (x, mu.breaks[k + 1]), x, v));
    }
    for k in (0..k0).rev() {
        let x = mu.breaks[k + 1];
        let v = out[k + 1].as_ref().unwrap().value(x);
        out[k] = Some(solve_piece(&mu.pieces[k], &p, &q, (mu.breaks[k], x), x, v));
    }
    PiecewiseProfile::new(mu.coordinate, mu.breaks.clone(), out.into_iter().map(Option::unwrap).collect())
}

fn check_positive(mu: &PiecewiseProfile) -> Result<()> {
    for piece in &mu.pieces {
        let ok = match piece {
            Piece::Analytic(_) => match piece.as_constant() {
                Some(c) => c > 0.0,
                None => true,
            },
            Piece::Sampled { ys, .. } => ys.iter().all(|&y| y > 0.0),
        };
        if !ok {
            return Err(Error::InvalidProblem("viscosity profile must be positive".into()));
        }
    }
    Ok(())
}

fn segment_integral(mu: &Piece, p: &Piece, q: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if let Some(m) = mu.as_constant() {
        return (p.value(b) - p.value(a)) / m;
    }
    let f = |x: f64| q(x) / mu.value(x);
    let h = (b - a) / TRAPEZOID_STEPS as f64;
    let inner: f64 = (1..TRAPEZOID_STEPS).map(|s| f(a + s as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

fn solve_piece(mu: &Piece, p: &Piece, q: &impl Fn(f64) -> f64, (a, b): (f64, f64), x0: f64, v0: f64) -> Piece {
    if let Some(m) = mu.as_constant() {
        let Piece::Analytic(terms) = p else { unreachable!() };
        let mut t: Vec<Term> = terms.iter().map(|t| Term { coef: t.coef / m, ..*t }).collect();
        t.push(Term::pow(v0 - p.value(x0) / m, 0));
        return Piece::Analytic(t);
    }
    let mut xs: Vec<f64> = (0..=TRAPEZOID_STEPS).map(|s| a + (b - a) * s as f64 / TRAPEZOID_STEPS as f64).collect();
    *xs.last_mut().unwrap() = b;
    let k0 = match xs.binary_search_by(|v| v.total_cmp(&x0)) {
        Ok(k) => k,
        Err(k) => {
            xs.insert(k, x0);
            k
        }
    };
    let dys: Vec<f64> = xs.iter().map(|&x| q(x) / mu.value(x)).collect();
    let mut ys = vec![0.0; xs.len()];
    ys[k0] = v0;
    for k in k0 + 1..xs.len() {
        ys[k] = ys[k - 1] + 0.5 * (xs[k] - xs[k - 1]) * (dys[k] + dys[k - 1]);
    }
    for k in (0..k0).rev() {
        ys[k] = ys[k + 1] - 0.5 * (xs[k + 1] - xs[k]) * (dys[k] + dys[k + 1]);
    }
    Piece::Sampled { xs, ys, dys }
}
