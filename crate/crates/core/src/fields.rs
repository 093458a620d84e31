//! Grids, node fields, closure tables and problem descriptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{self, BoundaryMode};

/// Uniform node lattice over a rectangle, optionally periodic in x1.
///
/// With `periodic_x1` the last node column duplicates the first one; it is
/// stored so that fields can be written out on the closed rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub periodic_x1: bool,
}

impl Grid {
    pub fn new(
        nx: usize,
        ny: usize,
        (x1_min, x1_max): (f64, f64),
        (x2_min, x2_max): (f64, f64),
        periodic_x1: bool,
    ) -> Result<Self> {
        let g = Grid { nx, ny, x1_min, x1_max, x2_min, x2_max, periodic_x1 };
        g.validate()?;
        Ok(g)
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Grid::new(n, n, (0.0, 1.0), (0.0, 1.0), false)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 5 || self.ny < 5 {
            return Err(Error::InvalidGrid(format!(
                "need at least 5 nodes per axis, got {}x{}",
                self.nx, self.ny
            )));
        }
        let bounds = [self.x1_min, self.x1_max, self.x2_min, self.x2_max];
        if bounds.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if !(self.x1_max > self.x1_min && self.x2_max > self.x2_min) {
            return Err(Error::InvalidGrid("empty domain".into()));
        }
        Ok(())
    }

    pub fn h1(&self) -> f64 {
        (self.x1_max - self.x1_min) / (self.nx - 1) as f64
    }

    pub fn h2(&self) -> f64 {
        (self.x2_max - self.x2_min) / (self.ny - 1) as f64
    }

    pub fn min_spacing(&self) -> f64 {
        self.h1().min(self.h2())
    }

    pub fn min_extent(&self) -> f64 {
        (self.x1_max - self.x1_min).min(self.x2_max - self.x2_min)
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of distinct node columns (the duplicate column is dropped when periodic).
    pub fn columns(&self) -> usize {
        if self.periodic_x1 {
            self.nx - 1
        } else {
            self.nx
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        self.x1_min + i as f64 * self.h1()
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        self.x2_min + j as f64 * self.h2()
    }

    pub fn coords(&self, n: usize) -> (f64, f64) {
        (self.x1(n % self.nx), self.x2(n / self.nx))
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        j == 0 || j == self.ny - 1 || (!self.periodic_x1 && (i == 0 || i == self.nx - 1))
    }

    /// Trapezoidal quadrature weight of node (i, j); zero on the duplicate periodic column.
    pub fn quad_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if self.periodic_x1 {
            if i == self.nx - 1 {
                0.0
            } else {
                1.0
            }
        } else if i == 0 || i == self.nx - 1 {
            0.5
        } else {
            1.0
        };
        let wy = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
        wx * wy * self.h1() * self.h2()
    }

    /// Euclidean distance from node (i, j) to the boundary walls.
    pub fn wall_distance(&self, i: usize, j: usize) -> f64 {
        let (x1, x2) = (self.x1(i), self.x2(j));
        let mut d = (x2 - self.x2_min).min(self.x2_max - x2);
        if !self.periodic_x1 {
            d = d.min(x1 - self.x1_min).min(self.x1_max - x1);
        }
        d.max(0.0)
    }

    /// Doubles the resolution, keeping the domain.
    pub fn refined(&self) -> Grid {
        Grid { nx: 2 * self.nx - 1, ny: 2 * self.ny - 1, ..*self }
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::InvalidField(format!("{what}: non-finite entry at {k}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        check_finite(&values, "scalar field")?;
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.node_count()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField { grid, values: vec![c; grid.node_count()] }
    }

    /// Samples `f` at the nodes. On periodic grids the last column copies the first.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x1(i), grid.x2(j)));
            }
        }
        let mut s = ScalarField { grid, values };
        s.sync_periodic();
        s
    }

    pub fn sync_periodic(&mut self) {
        if self.grid.periodic_x1 {
            let nx = self.grid.nx;
            for j in 0..self.grid.ny {
                self.values[j * nx + nx - 1] = self.values[j * nx];
            }
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ScalarField { grid: self.grid, values }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidField(format!(
                "expected {} vectors, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        let flat: Vec<f64> = values.iter().flatten().copied().collect();
        check_finite(&flat, "vector field")?;
        Ok(VectorField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField { grid, values: vec![[0.0; 2]; grid.node_count()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x1(i), grid.x2(j)));
            }
        }
        if grid.periodic_x1 {
            for j in 0..grid.ny {
                values[j * grid.nx + grid.nx - 1] = values[j * grid.nx];
            }
        }
        VectorField { grid, values }
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|v| v[c]).collect() }
    }

    pub fn from_components(a: &ScalarField, b: &ScalarField) -> Self {
        let values = a.values.iter().zip(&b.values).map(|(&x, &y)| [x, y]).collect();
        VectorField { grid: a.grid, values }
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorField { grid: self.grid, values: self.values.iter().map(|v| [s * v[0], s * v[1]]).collect() }
    }

    /// Trapezoidal L2 norm.
    pub fn l2_norm(&self) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let v = self.values[g.idx(i, j)];
                s += g.quad_weight(i, j) * (v[0] * v[0] + v[1] * v[1]);
            }
        }
        s.sqrt()
    }
}

/// 2x2 tensor per node, row-major `[t11, t12, t21, t22]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: Grid,
    pub values: Vec<[f64; 4]>,
}

impl TensorField {
    pub fn new(grid: Grid, values: Vec<[f64; 4]>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidField(format!(
                "expected {} tensors, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        let flat: Vec<f64> = values.iter().flatten().copied().collect();
        check_finite(&flat, "tensor field")?;
        Ok(TensorField { grid, values })
    }

    pub fn trace(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|t| t[0] + t[3]).collect() }
    }

    pub fn scaled_by(&self, s: &ScalarField) -> TensorField {
        let values = self
            .values
            .iter()
            .zip(&s.values)
            .map(|(t, &c)| [c * t[0], c * t[1], c * t[2], c * t[3]])
            .collect();
        TensorField { grid: self.grid, values }
    }
}

/// Clamped piecewise-linear map used for the density law and the viscosity law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureTable {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    lo_clamp: f64,
    hi_clamp: f64,
    declared_min: f64,
    declared_max: f64,
}

impl ClosureTable {
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        lo_clamp: f64,
        hi_clamp: f64,
        declared_min: f64,
        declared_max: f64,
    ) -> Result<Self> {
        let t = ClosureTable { breakpoints, values, lo_clamp, hi_clamp, declared_min, declared_max };
        t.validate()?;
        Ok(t)
    }

    /// Table with clamps equal to the end values and declared range equal to the value range.
    pub fn piecewise_linear(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let (lo, hi) = match (values.first(), values.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::InvalidClosure("empty table".into())),
        };
        let dmin = values.iter().copied().fold(f64::INFINITY, f64::min);
        let dmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ClosureTable::new(breakpoints, values, lo, hi, dmin, dmax)
    }

    pub fn constant(v: f64) -> Result<Self> {
        ClosureTable::new(vec![0.0], vec![v], v, v, v, v)
    }

    /// Ramp of total width `width` centred at `at`, from `lo` to `hi`.
    pub fn step(at: f64, lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidClosure("step width must be positive".into()));
        }
        ClosureTable::piecewise_linear(vec![at - 0.5 * width, at + 0.5 * width], vec![lo, hi])
    }

    fn validate(&self) -> Result<()> {
        let all = self
            .breakpoints
            .iter()
            .chain(&self.values)
            .chain([&self.lo_clamp, &self.hi_clamp, &self.declared_min, &self.declared_max]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidClosure("non-finite entry".into()));
        }
        if self.breakpoints.is_empty() || self.breakpoints.len() != self.values.len() {
            return Err(Error::InvalidClosure("breakpoints and values must have equal nonzero length".into()));
        }
        if self.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidClosure("breakpoints must be strictly increasing".into()));
        }
        if self.lo_clamp != self.values[0] || self.hi_clamp != *self.values.last().unwrap() {
            return Err(Error::InvalidClosure("clamps must equal the end values (continuity)".into()));
        }
        if self.declared_min > self.declared_max {
            return Err(Error::InvalidClosure("declared_min > declared_max".into()));
        }
        if self.values.iter().any(|&v| v < self.declared_min || v > self.declared_max) {
            return Err(Error::InvalidClosure("value outside the declared range".into()));
        }
        Ok(())
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::NonFiniteArgument(y));
        }
        Ok(self.eval_finite(y))
    }

    /// Evaluation for arguments already known to be finite.
    pub fn eval_finite(&self, y: f64) -> f64 {
        let b = &self.breakpoints;
        let n = b.len();
        if y <= b[0] {
            return self.lo_clamp;
        }
        if y >= b[n - 1] {
            return self.hi_clamp;
        }
        let k = b.partition_point(|&x| x <= y) - 1;
        let t = (y - b[k]) / (b[k + 1] - b[k]);
        let v = self.values[k] + t * (self.values[k + 1] - self.values[k]);
        v.clamp(self.declared_min, self.declared_max)
    }

    pub fn apply(&self, field: &ScalarField) -> Result<ScalarField> {
        if let Some(&bad) = field.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteArgument(bad));
        }
        Ok(field.map(|v| self.eval_finite(v)))
    }

    /// Largest slope of the table.
    pub fn lipschitz(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(b, v)| ((v[1] - v[0]) / (b[1] - b[0])).abs())
            .fold(0.0, f64::max)
    }

    /// Inverse of a strictly monotone table, restricted to its breakpoint range.
    pub fn invert(&self, v: f64) -> Result<f64> {
        let vals = &self.values;
        let inc = vals.windows(2).all(|w| w[1] > w[0]);
        let dec = vals.windows(2).all(|w| w[1] < w[0]);
        if vals.len() < 2 || !(inc || dec) {
            return Err(Error::InvalidClosure("table is not strictly monotone".into()));
        }
        let (lo, hi) = if inc { (vals[0], vals[vals.len() - 1]) } else { (vals[vals.len() - 1], vals[0]) };
        if !(v >= lo && v <= hi) {
            return Err(Error::InvalidClosure(format!("{v} outside the table range [{lo}, {hi}]")));
        }
        for k in 0..vals.len() - 1 {
            let (a, b) = (vals[k], vals[k + 1]);
            if (a <= v && v <= b) || (b <= v && v <= a) {
                let t = if a == b { 0.0 } else { (v - a) / (b - a) };
                return Ok(self.breakpoints[k] + t * (self.breakpoints[k + 1] - self.breakpoints[k]));
            }
        }
        unreachable!("value inside range must fall in a segment")
    }

    pub fn shifted(&self, s: f64) -> ClosureTable {
        ClosureTable { breakpoints: self.breakpoints.iter().map(|b| b + s).collect(), ..self.clone() }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn declared_min(&self) -> f64 {
        self.declared_min
    }

    pub fn declared_max(&self) -> f64 {
        self.declared_max
    }
}

/// Full description of one solve.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: Grid,
    /// Boundary velocity, one pair per boundary node in traversal order (see [`crate::lift`]).
    pub u0_samples: Vec<[f64; 2]>,
    pub c0: f64,
    /// Jump of the stream function from the bottom to the top wall; only used on periodic strips.
    pub flux: f64,
    pub force: VectorField,
    pub eta: ClosureTable,
    pub b: ClosureTable,
    pub delta: f64,
    pub eps_mollify: f64,
    pub omega: f64,
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_iter: usize,
    pub flux_tol: f64,
}

impl ProblemSpec {
    /// Zero boundary data and force, default solver parameters.
    pub fn new(grid: Grid, eta: ClosureTable, b: ClosureTable) -> Self {
        ProblemSpec {
            grid,
            u0_samples: vec![[0.0; 2]; crate::lift::boundary_node_count(&grid)],
            c0: 0.0,
            flux: 0.0,
            force: VectorField::zeros(grid),
            eta,
            b,
            delta: 0.1 * grid.min_extent(),
            eps_mollify: 2.0 * grid.min_spacing(),
            omega: 1.0,
            tol_rel: 1e-9,
            tol_abs: 1e-10,
            max_iter: 100,
            flux_tol: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let bad = |m: &str| Err(Error::InvalidProblem(m.to_string()));
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(self.eps_mollify >= 0.0) {
            return bad("eps_mollify must be nonnegative");
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return bad("omega must lie in (0, 1]");
        }
        if !(self.tol_rel > 0.0 && self.tol_abs > 0.0 && self.flux_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.b.declared_min() > 0.0) {
            return bad("viscosity law needs a positive lower bound");
        }
        if self.eta.declared_min() < 0.0 {
            return bad("density law must be nonnegative");
        }
        if self.force.grid != self.grid {
            return bad("force lives on a different grid");
        }
        if !self.c0.is_finite() || !self.flux.is_finite() {
            return bad("non-finite gauge or flux");
        }
        Ok(())
    }
}

/// Iteration history of a solve.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub iterations: usize,
    pub update_norms: Vec<f64>,
    pub energy: Vec<f64>,
    pub linear_residuals: Vec<f64>,
    pub relaxation: Vec<f64>,
    pub apriori_bound: f64,
    pub bound_exceeded: bool,
    pub converged: bool,
    pub wall_ms: f64,
}

impl RunReport {
    /// Ratios of consecutive update norms.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.update_norms.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub h2_semi: f64,
}

impl Norms {
    pub fn h2_full(&self) -> f64 {
        (self.l2 * self.l2 + self.h1_semi * self.h1_semi + self.h2_semi * self.h2_semi).sqrt()
    }
}

pub fn discrete_norms(phi: &ScalarField) -> Norms {
    discrete_norms_with(phi, BoundaryMode::Extrapolate)
}

pub fn discrete_norms_with(phi: &ScalarField, mode: BoundaryMode) -> Norms {
    let g = phi.grid;
    let (d11, d22, d12) = operators::second_derivatives_with(phi, mode);
    let u = operators::grad_perp_with(phi, mode);
    let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let w = g.quad_weight(i, j);
            let n = g.idx(i, j);
            let v = phi.values[n];
            let [a, b] = u.values[n];
            l2 += w * v * v;
            h1 += w * (a * a + b * b);
            let (p, q, r) = (d11.values[n], d22.values[n], d12.values[n]);
            h2 += w * (p * p + q * q + 2.0 * r * r);
        }
    }
    Norms { l2: l2.sqrt(), h1_semi: h1.sqrt(), h2_semi: h2.sqrt() }
}
