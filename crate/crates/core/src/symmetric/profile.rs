use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Coordinate {
    X2,
    Radius,
    Angle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermKind {
    /// `x^p`
    Pow(i32),
    /// `ln x`
    Ln,
    /// `1 / (x + s)`
    InvShift(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub kind: TermKind,
}

impl Term {
    pub fn pow(coef: f64, p: i32) -> Self {
        Term { coef, kind: TermKind::Pow(p) }
    }

    pub fn ln(coef: f64) -> Self {
        Term { coef, kind: TermKind::Ln }
    }

    pub fn inv_shift(coef: f64, s: f64) -> Self {
        Term { coef, kind: TermKind::InvShift(s) }
    }

    fn value(&self, x: f64) -> f64 {
        self.coef
            * match self.kind {
                TermKind::Pow(0) => 1.0,
                TermKind::Pow(p) => x.powi(p),
                TermKind::Ln => x.ln(),
                TermKind::InvShift(s) => 1.0 / (x + s),
            }
    }

    fn derivative(&self, x: f64) -> f64 {
        self.coef
            * match self.kind {
                TermKind::Pow(0) => 0.0,
                TermKind::Pow(p) => p as f64 * x.powi(p - 1),
                TermKind::Ln => 1.0 / x,
                TermKind::InvShift(s) => -1.0 / ((x + s) * (x + s)),
            }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Analytic(Vec<Term>),
    /// Nodal values and slopes, cubic Hermite in between.
    Sampled { xs: Vec<f64>, ys: Vec<f64>, dys: Vec<f64> },
}

impl Piece {
    pub fn constant(c: f64) -> Self {
        Piece::Analytic(vec![Term::pow(c, 0)])
    }

    /// `c2 x² + c1 x + c0`.
    pub fn quadratic(c2: f64, c1: f64, c0: f64) -> Self {
        Piece::Analytic(vec![Term::pow(c2, 2), Term::pow(c1, 1), Term::pow(c0, 0)])
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Piece::Analytic(t) => {
                let mut c = 0.0;
                for term in t {
                    match term.kind {
                        TermKind::Pow(0) => c += term.coef,
                        _ if term.coef == 0.0 => {}
                        _ => return None,
                    }
                }
                Some(c)
            }
            Piece::Sampled { .. } => None,
        }
    }

    fn locate(xs: &[f64], x: f64) -> usize {
        let k = xs.partition_point(|&v| v <= x);
        k.clamp(1, xs.len() - 1) - 1
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Piece::Analytic(t) => t.iter().map(|term| term.value(x)).sum(),
            Piece::Sampled { xs, ys, dys } => {
                let k = Piece::locate(xs, x);
                let h = xs[k + 1] - xs[k];
                let t = (x - xs[k]) / h;
                let (h00, h10, h01, h11) = (
                    (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
                    t * (1.0 - t) * (1.0 - t),
                    t * t * (3.0 - 2.0 * t),
                    t * t * (t - 1.0),
                );
                h00 * ys[k] + h10 * h * dys[k] + h01 * ys[k + 1] + h11 * h * dys[k + 1]
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Piece::Analytic(t) => t.iter().map(|term| term.derivative(x)).sum(),
            Piece::Sampled { xs, ys, dys } => {
                let k = Piece::locate(xs, x);
                let h = xs[k + 1] - xs[k];
                let t = (x - xs[k]) / h;
                let (d00, d10, d01, d11) =
                    (6.0 * t * t - 6.0 * t, 3.0 * t * t - 4.0 * t + 1.0, -6.0 * t * t + 6.0 * t, 3.0 * t * t - 2.0 * t);
                (d00 * ys[k] + d01 * ys[k + 1]) / h + d10 * dys[k] + d11 * dys[k + 1]
            }
        }
    }
}

/// Function of one coordinate, defined piece by piece on `[breaks[k], breaks[k+1]]`.
/// Evaluation at an interior breakpoint uses the piece on its right.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseProfile {
    pub coordinate: Coordinate,
    pub breaks: Vec<f64>,
    pub pieces: Vec<Piece>,
}

impl PiecewiseProfile {
    pub fn new(coordinate: Coordinate, breaks: Vec<f64>, pieces: Vec<Piece>) -> Result<Self> {
        if breaks.len() != pieces.len() + 1 || pieces.is_empty() {
            return Err(Error::InvalidProblem("profile needs one more breakpoint than pieces".into()));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProblem("profile breakpoints must increase".into()));
        }
        Ok(PiecewiseProfile { coordinate, breaks, pieces })
    }

    pub fn piecewise_constant(coordinate: Coordinate, breaks: Vec<f64>, values: &[f64]) -> Result<Self> {
        PiecewiseProfile::new(coordinate, breaks, values.iter().map(|&v| Piece::constant(v)).collect())
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    pub fn piece_index(&self, x: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= x);
        k.clamp(1, self.pieces.len()) - 1
    }

    pub fn value(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].value(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].derivative(x)
    }

    /// Value with a domain check: radii must be positive.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || (self.coordinate == Coordinate::Radius && x <= 0.0) {
            return Err(Error::InvalidProblem(format!("profile evaluated at invalid coordinate {x}")));
        }
        Ok(self.value(x))
    }

    /// One-sided limits `(left, right)` of value and derivative at an interior breakpoint.
    pub fn limits(&self, k: usize) -> ((f64, f64), (f64, f64)) {
        let x = self.breaks[k];
        let (l, r) = (&self.pieces[k - 1], &self.pieces[k]);
        ((l.value(x), r.value(x)), (l.derivative(x), r.derivative(x)))
    }

    pub fn constant_values(&self) -> Option<Vec<f64>> {
        self.pieces.iter().map(|p| p.as_constant()).collect()
    }

    /// `(x, value, derivative)` on `n` uniform samples per piece.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            let (a, b) = (self.breaks[k], self.breaks[k + 1]);
            let start = if k == 0 { 0 } else { 1 };
            for s in start..=n {
                let x = a + (b - a) * s as f64 / n as f64;
                out.push((x, p.value(x), p.derivative(x)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_terms() {
        let p = Piece::Analytic(vec![Term::pow(2.0, 2), Term::ln(1.0), Term::inv_shift(3.0, 1.0), Term::pow(-1.0, -2)]);
        let x: f64 = 1.7;
        let v = 2.0 * x * x + x.ln() + 3.0 / (x + 1.0) - 1.0 / (x * x);
        let d = 4.0 * x + 1.0 / x - 3.0 / ((x + 1.0) * (x + 1.0)) + 2.0 / (x * x * x);
        assert!((p.value(x) - v).abs() < 1e-14);
        assert!((p.derivative(x) - d).abs() < 1e-14);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let xs: Vec<f64> = (0..6).map(|k| k as f64 * 0.3).collect();
        let p = Piece::Sampled { ys: xs.iter().map(|&x| f(x)).collect(), dys: xs.iter().map(|&x| df(x)).collect(), xs };
        for x in [0.05, 0.61, 1.3, 1.49] {
            assert!((p.value(x) - f(x)).abs() < 1e-13);
            assert!((p.derivative(x) - df(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn right_continuous_lookup() {
        let p = PiecewiseProfile::piecewise_constant(Coordinate::X2, vec![-1.0, 0.0, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(p.value(-0.5), 1.0);
        assert_eq!(p.value(0.0), 2.0);
        assert_eq!(p.value(1.0), 2.0);
        assert_eq!(p.value(-3.0), 1.0);
        assert_eq!(p.constant_values(), Some(vec![1.0, 2.0]));
        let r = PiecewiseProfile::piecewise_constant(Coordinate::Radius, vec![0.5, 2.0], &[1.0]).unwrap();
        assert!(r.eval(0.0).is_err() && r.eval(-1.0).is_err());
    }
}
