//! Finite differences, the energy form of the fourth-order operator and the convection form.
//!
//! The energy form is assembled as `Aᵀ W A`. Rows of `A` are the node values of
//! `(D22 - D11)φ` (compact three-point differences, trapezoidal weights) and the cell
//! values of `2 δ1⁺δ2⁺ φ` (cell weight `h1 h2`, viscosity averaged over the four
//! corners). Clamped fields are continued across the walls by mirror ghosts, so the
//! boundary rows see a vanishing normal derivative.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, TensorField, VectorField};
use crate::linalg::CsrMatrix;

/// How one-dimensional differences are closed at non-periodic walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// One-sided second-order formulas; exact on quadratics.
    #[default]
    Extrapolate,
    /// Mirror ghost values, i.e. zero normal slope.
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X1,
    X2,
}

/// Samples of one grid line together with its spacing and topology.
struct Line<'a> {
    f: &'a [f64],
    n: usize,
    h: f64,
    periodic: bool,
}

impl Line<'_> {
    fn wrap(&self, k: isize) -> f64 {
        self.f[k.rem_euclid(self.n as isize) as usize]
    }

    fn d1(&self, k: usize, mode: BoundaryMode) -> f64 {
        let (f, n, h) = (self.f, self.n, self.h);
        if self.periodic {
            let k = k as isize;
            return (self.wrap(k + 1) - self.wrap(k - 1)) / (2.0 * h);
        }
        match (k, mode) {
            (0, BoundaryMode::Clamped) => 0.0,
            (0, BoundaryMode::Extrapolate) => (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h),
            (k, BoundaryMode::Clamped) if k == n - 1 => 0.0,
            (k, BoundaryMode::Extrapolate) if k == n - 1 => (3.0 * f[k] - 4.0 * f[k - 1] + f[k - 2]) / (2.0 * h),
            (k, _) => (f[k + 1] - f[k - 1]) / (2.0 * h),
        }
    }

    fn d2(&self, k: usize, mode: BoundaryMode) -> f64 {
        let (f, n, h2) = (self.f, self.n, self.h * self.h);
        if self.periodic {
            let k = k as isize;
            return (self.wrap(k + 1) - 2.0 * self.wrap(k) + self.wrap(k - 1)) / h2;
        }
        match (k, mode) {
            (0, BoundaryMode::Clamped) => 2.0 * (f[1] - f[0]) / h2,
            (0, BoundaryMode::Extrapolate) => (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2,
            (k, BoundaryMode::Clamped) if k == n - 1 => 2.0 * (f[k - 1] - f[k]) / h2,
            (k, BoundaryMode::Extrapolate) if k == n - 1 => {
                (2.0 * f[k] - 5.0 * f[k - 1] + 4.0 * f[k - 2] - f[k - 3]) / h2
            }
            (k, _) => (f[k + 1] - 2.0 * f[k] + f[k - 1]) / h2,
        }
    }
}

fn along(phi: &ScalarField, axis: Axis, mode: BoundaryMode, second: bool) -> ScalarField {
    let g = phi.grid;
    let mut out = ScalarField::zeros(g);
    match axis {
        Axis::X1 => {
            let n = g.columns();
            for j in 0..g.ny {
                let row = &phi.values[j * g.nx..j * g.nx + n];
                let line = Line { f: row, n, h: g.h1(), periodic: g.periodic_x1 };
                for i in 0..n {
                    out.values[g.idx(i, j)] = if second { line.d2(i, mode) } else { line.d1(i, mode) };
                }
            }
        }
        Axis::X2 => {
            let mut col = vec![0.0; g.ny];
            for i in 0..g.columns() {
                for (j, c) in col.iter_mut().enumerate() {
                    *c = phi.values[g.idx(i, j)];
                }
                let line = Line { f: &col, n: g.ny, h: g.h2(), periodic: false };
                for j in 0..g.ny {
                    out.values[g.idx(i, j)] = if second { line.d2(j, mode) } else { line.d1(j, mode) };
                }
            }
        }
    }
    out.sync_periodic();
    out
}

pub fn d1(phi: &ScalarField, mode: BoundaryMode) -> ScalarField {
    along(phi, Axis::X1, mode, false)
}

pub fn d2(phi: &ScalarField, mode: BoundaryMode) -> ScalarField {
    along(phi, Axis::X2, mode, false)
}

/// `(φ11, φ22, φ12)` with compact second differences and `φ12 = D1(D2 φ)`.
pub fn second_derivatives(phi: &ScalarField) -> (ScalarField, ScalarField, ScalarField) {
    second_derivatives_with(phi, BoundaryMode::Extrapolate)
}

pub fn second_derivatives_with(phi: &ScalarField, mode: BoundaryMode) -> (ScalarField, ScalarField, ScalarField) {
    let p11 = along(phi, Axis::X1, mode, true);
    let p22 = along(phi, Axis::X2, mode, true);
    let p12 = d1(&d2(phi, mode), mode);
    (p11, p22, p12)
}

/// `(∂2 φ, -∂1 φ)`.
pub fn grad_perp(phi: &ScalarField) -> VectorField {
    grad_perp_with(phi, BoundaryMode::Extrapolate)
}

pub fn grad_perp_with(phi: &ScalarField, mode: BoundaryMode) -> VectorField {
    let a = d2(phi, mode);
    let b = d1(phi, mode).map(|v| -v);
    VectorField::from_components(&a, &b)
}

pub fn gradient(phi: &ScalarField, mode: BoundaryMode) -> VectorField {
    VectorField::from_components(&d1(phi, mode), &d2(phi, mode))
}

pub fn divergence(u: &VectorField, mode: BoundaryMode) -> ScalarField {
    let a = d1(&u.component(0), mode);
    let b = d2(&u.component(1), mode);
    a.zip_with(&b, |x, y| x + y)
}

/// `S u = ∇u + ∇uᵀ`.
pub fn deformation(u: &VectorField) -> TensorField {
    deformation_with(u, BoundaryMode::Extrapolate)
}

pub fn deformation_with(u: &VectorField, mode: BoundaryMode) -> TensorField {
    let (u1, u2) = (u.component(0), u.component(1));
    let (a11, a12) = (d1(&u1, mode), d2(&u1, mode));
    let (a21, a22) = (d1(&u2, mode), d2(&u2, mode));
    let values = (0..u.grid.node_count())
        .map(|n| {
            let off = a12.values[n] + a21.values[n];
            [2.0 * a11.values[n], off, off, 2.0 * a22.values[n]]
        })
        .collect();
    TensorField { grid: u.grid, values }
}

/// Row-wise divergence `(∂1 T11 + ∂2 T12, ∂1 T21 + ∂2 T22)`.
pub fn tensor_divergence(t: &TensorField, mode: BoundaryMode) -> VectorField {
    let comp = |c: usize| ScalarField { grid: t.grid, values: t.values.iter().map(|v| v[c]).collect() };
    let r1 = d1(&comp(0), mode).zip_with(&d2(&comp(1), mode), |a, b| a + b);
    let r2 = d1(&comp(2), mode).zip_with(&d2(&comp(3), mode), |a, b| a + b);
    VectorField::from_components(&r1, &r2)
}

/// Node values extended by one ghost layer on every side.
#[derive(Debug, Clone, PartialEq)]
pub struct Padded {
    pub grid: Grid,
    data: Vec<f64>,
}

impl Padded {
    #[inline]
    fn pidx(&self, i: isize, j: isize) -> usize {
        let i = if self.grid.periodic_x1 && !(-1..=self.grid.nx as isize).contains(&i) {
            i.rem_euclid(self.grid.nx as isize - 1)
        } else {
            i
        };
        ((j + 1) as usize) * (self.grid.nx + 2) + (i + 1) as usize
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize) -> f64 {
        self.data[self.pidx(i, j)]
    }

    /// Fills every padded position from `f(i, j)`; periodic columns are wrapped afterwards.
    pub fn from_fn(grid: Grid, f: impl Fn(isize, isize) -> f64) -> Self {
        let mut p = Padded { grid, data: vec![0.0; (grid.nx + 2) * (grid.ny + 2)] };
        for j in -1..=grid.ny as isize {
            for i in -1..=grid.nx as isize {
                let k = p.pidx(i, j);
                p.data[k] = f(i, j);
            }
        }
        if grid.periodic_x1 {
            p.wrap_columns();
        }
        p
    }

    fn wrap_columns(&mut self) {
        let g = self.grid;
        let n = g.columns() as isize;
        for j in -1..=g.ny as isize {
            for i in [-1, n, n + 1] {
                let src = self.pidx(i.rem_euclid(n), j);
                let dst = self.pidx(i, j);
                self.data[dst] = self.data[src];
            }
        }
    }

    /// Mirror continuation of a node field across the non-periodic walls.
    pub fn mirrored(phi: &ScalarField) -> Self {
        let g = phi.grid;
        let (nx, ny) = (g.nx as isize, g.ny as isize);
        let reflect = |k: isize, n: isize| {
            if k < 0 {
                -k
            } else if k >= n {
                2 * (n - 1) - k
            } else {
                k
            }
        };
        Padded::from_fn(g, |i, j| {
            let ii = if g.periodic_x1 { i.clamp(0, nx - 1) } else { reflect(i, nx) };
            let jj = reflect(j, ny);
            phi.values[g.idx(ii as usize, jj as usize)]
        })
    }

    pub fn interior(&self) -> ScalarField {
        let g = self.grid;
        let mut s = ScalarField::zeros(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                s.values[g.idx(i, j)] = self.get(i as isize, j as isize);
            }
        }
        s.sync_periodic();
        s
    }
}

/// Degrees of freedom of clamped fields: the nodes off the non-periodic walls.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub grid: Grid,
    cols: usize,
    i0: usize,
}

impl DofMap {
    pub fn new(grid: Grid) -> Self {
        let (cols, i0) = if grid.periodic_x1 { (grid.nx - 1, 0) } else { (grid.nx - 2, 1) };
        DofMap { grid, cols, i0 }
    }

    pub fn len(&self) -> usize {
        self.cols * (self.grid.ny - 2)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dof carrying the value of padded position (i, j) for a mirrored clamped field.
    pub fn resolve(&self, i: isize, j: isize) -> Option<usize> {
        let g = self.grid;
        let (nx, ny) = (g.nx as isize, g.ny as isize);
        let jj = match j {
            -1 => 1,
            j if j == ny => ny - 2,
            j => j,
        };
        if jj <= 0 || jj >= ny - 1 {
            return None;
        }
        let ii = if g.periodic_x1 {
            i.rem_euclid(nx - 1)
        } else {
            let ii = match i {
                -1 => 1,
                i if i == nx => nx - 2,
                i => i,
            };
            if ii <= 0 || ii >= nx - 1 {
                return None;
            }
            ii
        };
        Some((jj as usize - 1) * self.cols + (ii as usize - self.i0))
    }

    pub fn node(&self, dof: usize) -> (usize, usize) {
        (dof % self.cols + self.i0, dof / self.cols + 1)
    }

    pub fn to_field(&self, x: &[f64]) -> ScalarField {
        let mut s = ScalarField::zeros(self.grid);
        for (k, &v) in x.iter().enumerate() {
            let (i, j) = self.node(k);
            s.values[self.grid.idx(i, j)] = v;
        }
        s.sync_periodic();
        s
    }

    pub fn restrict(&self, phi: &ScalarField) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.node(k);
                phi.values[self.grid.idx(i, j)]
            })
            .collect()
    }

    /// Interior nodes reached by the convection sums.
    fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let g = self.grid;
        (1..g.ny - 1).flat_map(move |j| (self.i0..self.i0 + self.cols).map(move |i| (i, j)))
    }
}

type Stencil = [(isize, isize, f64)];

/// Maps a stencil at (i, j) onto dofs, merging coincident mirror images.
fn stencil_dofs(dofs: &DofMap, i: usize, j: usize, st: &Stencil, out: &mut Vec<(usize, f64)>) {
    out.clear();
    for &(di, dj, c) in st {
        if let Some(d) = dofs.resolve(i as isize + di, j as isize + dj) {
            match out.iter_mut().find(|e| e.0 == d) {
                Some(e) => e.1 += c,
                None => out.push((d, c)),
            }
        }
    }
}

fn apply_stencil(p: &Padded, i: usize, j: usize, st: &Stencil) -> f64 {
    st.iter().map(|&(di, dj, c)| c * p.get(i as isize + di, j as isize + dj)).sum()
}

struct EnergyStencils {
    node: [(isize, isize, f64); 5],
    cell: [(isize, isize, f64); 4],
}

impl EnergyStencils {
    fn new(g: &Grid) -> Self {
        let (a, b) = (1.0 / (g.h1() * g.h1()), 1.0 / (g.h2() * g.h2()));
        let q = 2.0 / (g.h1() * g.h2());
        EnergyStencils {
            node: [(0, 0, 2.0 * a - 2.0 * b), (1, 0, -a), (-1, 0, -a), (0, 1, b), (0, -1, b)],
            cell: [(0, 0, q), (1, 1, q), (1, 0, -q), (0, 1, -q)],
        }
    }
}

/// Visits every row of `A` with its location, stencil and weight `w μ`.
fn for_each_energy_row(mu: &ScalarField, mut visit: impl FnMut(usize, usize, &Stencil, f64)) {
    let g = mu.grid;
    let st = EnergyStencils::new(&g);
    for j in 0..g.ny {
        for i in 0..g.columns() {
            visit(i, j, &st.node, g.quad_weight(i, j) * mu.values[g.idx(i, j)]);
        }
    }
    let cell_area = g.h1() * g.h2();
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let m = 0.25
                * (mu.values[g.idx(i, j)]
                    + mu.values[g.idx(i + 1, j)]
                    + mu.values[g.idx(i, j + 1)]
                    + mu.values[g.idx(i + 1, j + 1)]);
            visit(i, j, &st.cell, cell_area * m);
        }
    }
}

/// Sparse operator on the clamped dofs.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub matrix: CsrMatrix,
    pub dofs: DofMap,
}

impl LinearOperator {
    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }

    /// Applies the operator to the dof values of `phi`; wall values are ignored.
    pub fn apply_field(&self, phi: &ScalarField) -> ScalarField {
        self.dofs.to_field(&self.apply(&self.dofs.restrict(phi)))
    }

    pub fn write_matrix_market(&self, w: impl Write) -> std::io::Result<()> {
        self.matrix.write_matrix_market(w)
    }
}

fn check_viscosity(mu: &ScalarField) -> Result<()> {
    match mu.values.iter().position(|&m| !(m > 0.0) || !m.is_finite()) {
        Some(node) => Err(Error::ViscosityBelowBound { node, value: mu.values[node], bound: 0.0 }),
        None => Ok(()),
    }
}

fn energy_triplets(mu: &ScalarField, dofs: &DofMap, scale: f64, trip: &mut Vec<(usize, usize, f64)>) {
    let mut ent = Vec::with_capacity(8);
    for_each_energy_row(mu, |i, j, st, w| {
        stencil_dofs(dofs, i, j, st, &mut ent);
        for &(r, a) in &ent {
            for &(c, b) in &ent {
                trip.push((r, c, scale * w * a * b));
            }
        }
    });
}

/// The symmetric matrix `E` with `φᵀ E ψ = 2 ⟨φ, ψ⟩` on clamped fields.
pub fn assemble_energy_operator(mu: &ScalarField) -> Result<LinearOperator> {
    check_viscosity(mu)?;
    let dofs = DofMap::new(mu.grid);
    let mut trip = Vec::with_capacity(dofs.len() * 41);
    energy_triplets(mu, &dofs, 1.0, &mut trip);
    let matrix = CsrMatrix::from_triplets(dofs.len(), dofs.len(), trip);
    Ok(LinearOperator { matrix, dofs })
}

/// `Σ w μ (Aφ)(Aψ)` over padded fields, without the factor one half.
pub fn energy_form_padded(mu: &ScalarField, phi: &Padded, psi: &Padded) -> f64 {
    let mut s = 0.0;
    for_each_energy_row(mu, |i, j, st, w| {
        s += w * apply_stencil(phi, i, j, st) * apply_stencil(psi, i, j, st);
    });
    s
}

/// The energy inner product of two clamped fields.
pub fn energy_product(mu: &ScalarField, phi: &ScalarField, psi: &ScalarField) -> f64 {
    0.5 * energy_form_padded(mu, &Padded::mirrored(phi), &Padded::mirrored(psi))
}

/// Dof load `ψ ↦ Σ w μ (A lift)(A ψ)`.
pub fn energy_load(mu: &ScalarField, lift: &Padded, dofs: &DofMap) -> Vec<f64> {
    let mut out = vec![0.0; dofs.len()];
    let mut ent = Vec::with_capacity(8);
    for_each_energy_row(mu, |i, j, st, w| {
        let v = apply_stencil(lift, i, j, st);
        if v != 0.0 {
            stencil_dofs(dofs, i, j, st, &mut ent);
            for &(d, c) in &ent {
                out[d] += w * v * c;
            }
        }
    });
    out
}

/// Trapezoidal L2 norm of the five-point Laplacian of a mirrored field.
pub fn laplacian_norm(phi: &ScalarField) -> f64 {
    let g = phi.grid;
    let p = Padded::mirrored(phi);
    let (a, b) = (1.0 / (g.h1() * g.h1()), 1.0 / (g.h2() * g.h2()));
    let lap: [(isize, isize, f64); 5] = [(0, 0, -2.0 * a - 2.0 * b), (1, 0, a), (-1, 0, a), (0, 1, b), (0, -1, b)];
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..g.columns() {
            let v = apply_stencil(&p, i, j, &lap);
            s += g.quad_weight(i, j) * v * v;
        }
    }
    s.sqrt()
}

struct ConvectionStencils {
    /// `(∇⊥ψ)_1 = D2 ψ` and `(∇⊥ψ)_2 = -D1 ψ`.
    vel: [[(isize, isize, f64); 2]; 2],
    /// `D_i (∇⊥ψ)_j` indexed `[i][j]`, built from central first differences.
    grad: [[Vec<(isize, isize, f64)>; 2]; 2],
}

impl ConvectionStencils {
    fn new(g: &Grid) -> Self {
        let (h1, h2) = (g.h1(), g.h2());
        let a = 1.0 / (2.0 * h1);
        let b = 1.0 / (2.0 * h2);
        let q = 1.0 / (4.0 * h1 * h2);
        let w1 = 1.0 / (4.0 * h1 * h1);
        let w2 = 1.0 / (4.0 * h2 * h2);
        let cross = vec![(1, 1, q), (1, -1, -q), (-1, 1, -q), (-1, -1, q)];
        let neg = |v: &Vec<(isize, isize, f64)>| v.iter().map(|&(i, j, c)| (i, j, -c)).collect::<Vec<_>>();
        let d11 = vec![(2, 0, w1), (0, 0, -2.0 * w1), (-2, 0, w1)];
        let d22 = vec![(0, 2, w2), (0, 0, -2.0 * w2), (0, -2, w2)];
        ConvectionStencils {
            vel: [[(0, 1, b), (0, -1, -b)], [(1, 0, -a), (-1, 0, a)]],
            grad: [[cross.clone(), neg(&d11)], [d22, neg(&cross)]],
        }
    }

    /// `g_j = Σ_i w_i D_i(∇⊥·)_j` for a fixed advecting vector.
    fn advected(&self, w: [f64; 2], j: usize) -> Vec<(isize, isize, f64)> {
        let mut out: Vec<(isize, isize, f64)> = Vec::with_capacity(8);
        for (i, &wi) in w.iter().enumerate() {
            for &(di, dj, c) in &self.grad[i][j] {
                match out.iter_mut().find(|e| e.0 == di && e.1 == dj) {
                    Some(e) => e.2 += wi * c,
                    None => out.push((di, dj, wi * c)),
                }
            }
        }
        out
    }
}

fn convection_triplets(
    rho: &ScalarField,
    w: &VectorField,
    dofs: &DofMap,
    scale: f64,
    trip: &mut Vec<(usize, usize, f64)>,
) {
    let g = rho.grid;
    let st = ConvectionStencils::new(&g);
    let area = g.h1() * g.h2();
    let (mut ev, mut eg) = (Vec::with_capacity(2), Vec::with_capacity(8));
    for (i, j) in dofs.interior_nodes() {
        let n = g.idx(i, j);
        let c = scale * area * rho.values[n];
        for jj in 0..2 {
            stencil_dofs(dofs, i, j, &st.vel[jj], &mut ev);
            stencil_dofs(dofs, i, j, &st.advected(w.values[n], jj), &mut eg);
            for &(col, a) in &ev {
                for &(row, b) in &eg {
                    trip.push((row, col, c * a * b));
                }
            }
        }
    }
}

/// Oseen convection matrix `K` with `ψᵀ K φ = t(ρ, w, φ, ψ)`. Entries are stored even when zero.
pub fn assemble_convection(rho: &ScalarField, w: &VectorField) -> LinearOperator {
    let dofs = DofMap::new(rho.grid);
    let mut trip = Vec::with_capacity(dofs.len() * 28);
    convection_triplets(rho, w, &dofs, 1.0, &mut trip);
    let matrix = CsrMatrix::from_triplets(dofs.len(), dofs.len(), trip);
    LinearOperator { matrix, dofs }
}

/// `E(μ) - K(ρ, w)` assembled in one pass.
pub fn assemble_oseen(mu: &ScalarField, rho: &ScalarField, w: &VectorField) -> Result<LinearOperator> {
    check_viscosity(mu)?;
    let dofs = DofMap::new(mu.grid);
    let mut trip = Vec::with_capacity(dofs.len() * 69);
    energy_triplets(mu, &dofs, 1.0, &mut trip);
    convection_triplets(rho, w, &dofs, -1.0, &mut trip);
    let matrix = CsrMatrix::from_triplets(dofs.len(), dofs.len(), trip);
    Ok(LinearOperator { matrix, dofs })
}

/// `t(ρ, w, φ, ψ) = Σ h1 h2 ρ w_i (∇⊥φ)_j D_i (∇⊥ψ)_j` over interior nodes, for clamped φ, ψ.
pub fn trilinear(rho: &ScalarField, w: &VectorField, phi: &ScalarField, psi: &ScalarField) -> f64 {
    let g = rho.grid;
    let (pp, qq) = (Padded::mirrored(phi), Padded::mirrored(psi));
    let st = ConvectionStencils::new(&g);
    let area = g.h1() * g.h2();
    let dofs = DofMap::new(g);
    let mut s = 0.0;
    for (i, j) in dofs.interior_nodes() {
        let n = g.idx(i, j);
        let mut t = 0.0;
        for jj in 0..2 {
            t += apply_stencil(&pp, i, j, &st.vel[jj]) * apply_stencil(&qq, i, j, &st.advected(w.values[n], jj));
        }
        s += area * rho.values[n] * t;
    }
    s
}

/// Dof load `ψ ↦ -Σ h1 h2 ρ w_i D_i(∇⊥lift)_j (∇⊥ψ)_j`, the convection of the lift in
/// non-integrated form.
pub fn convection_lift_load(rho: &ScalarField, w: &VectorField, lift: &Padded, dofs: &DofMap) -> Vec<f64> {
    let g = rho.grid;
    let st = ConvectionStencils::new(&g);
    let area = g.h1() * g.h2();
    let mut out = vec![0.0; dofs.len()];
    let mut ev = Vec::with_capacity(2);
    for (i, j) in dofs.interior_nodes() {
        let n = g.idx(i, j);
        let c = area * rho.values[n];
        for jj in 0..2 {
            let grad = apply_stencil(lift, i, j, &st.advected(w.values[n], jj));
            if grad == 0.0 {
                continue;
            }
            stencil_dofs(dofs, i, j, &st.vel[jj], &mut ev);
            for &(d, a) in &ev {
                out[d] -= c * grad * a;
            }
        }
    }
    out
}

/// Dof load `ψ ↦ Σ h1 h2 f·∇⊥ψ` over interior nodes.
pub fn force_load(f: &VectorField, dofs: &DofMap) -> Vec<f64> {
    let g = f.grid;
    let st = ConvectionStencils::new(&g);
    let area = g.h1() * g.h2();
    let mut out = vec![0.0; dofs.len()];
    let mut ev = Vec::with_capacity(2);
    for (i, j) in dofs.interior_nodes() {
        let fv = f.values[g.idx(i, j)];
        for jj in 0..2 {
            if fv[jj] == 0.0 {
                continue;
            }
            stencil_dofs(dofs, i, j, &st.vel[jj], &mut ev);
            for &(d, a) in &ev {
                out[d] += area * fv[jj] * a;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn square(n: usize) -> Grid {
        Grid::unit_square(n).unwrap()
    }

    fn max_abs(s: &ScalarField) -> f64 {
        s.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Deterministic pseudo-random clamped field.
    fn clamped(g: Grid, seed: u64) -> ScalarField {
        let dofs = DofMap::new(g);
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let x: Vec<f64> = (0..dofs.len())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect();
        dofs.to_field(&x)
    }

    #[test]
    fn second_derivative_examples() {
        let g = square(9);
        let (a, b, c) = second_derivatives(&ScalarField::from_fn(g, |x, _| x * x));
        assert!(a.values.iter().all(|v| (v - 2.0).abs() < 1e-11));
        assert!(max_abs(&b) < 1e-11 && max_abs(&c) < 1e-11);
        let (a, b, c) = second_derivatives(&ScalarField::constant(g, 4.0));
        assert!(max_abs(&a) == 0.0 && max_abs(&b) == 0.0 && max_abs(&c) == 0.0);
        let (_, _, c) = second_derivatives(&ScalarField::from_fn(g, |x, y| x * y));
        assert!(c.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn grad_perp_examples() {
        let g = square(9);
        let u = grad_perp(&ScalarField::from_fn(g, |_, y| y));
        assert!(u.values.iter().all(|v| (v[0] - 1.0).abs() < 1e-13 && v[1].abs() < 1e-13));
        let z = grad_perp(&ScalarField::constant(g, 2.0));
        assert!(z.values.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn grad_perp_is_divergence_free() {
        for g in [square(11), Grid::new(12, 9, (0.0, 2.0), (-1.0, 1.0), true).unwrap()] {
            let phi = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() * y.exp() + x * x * y);
            let div = divergence(&grad_perp(&phi), BoundaryMode::Extrapolate);
            for j in 1..g.ny - 1 {
                for i in 1..g.nx - 1 {
                    assert!(div.at(i, j).abs() < 1e-10, "div at ({i},{j}) = {}", div.at(i, j));
                }
            }
        }
    }

    #[test]
    fn deformation_examples() {
        let g = square(9);
        let s = deformation(&VectorField::from_fn(g, |_, y| [y, 0.0]));
        assert!(s.values.iter().all(|t| t[0].abs() < 1e-13
            && (t[1] - 1.0).abs() < 1e-13
            && (t[2] - 1.0).abs() < 1e-13
            && t[3].abs() < 1e-13));
        let z = deformation(&VectorField::from_fn(g, |_, _| [1.0, -2.0]));
        assert!(z.values.iter().all(|t| t.iter().all(|v| *v == 0.0)));
        let u = grad_perp(&ScalarField::from_fn(g, |x, y| x * x * y * y));
        let tr = deformation(&u).trace();
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                assert!(tr.at(i, j).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn energy_operator_biharmonic_monomial() {
        let g = square(13);
        let e = assemble_energy_operator(&ScalarField::constant(g, 1.0)).unwrap();
        let out = e.apply_field(&ScalarField::from_fn(g, |x, y| x * x * y * y));
        let w = g.h1() * g.h2();
        for j in 3..g.ny - 3 {
            for i in 3..g.nx - 3 {
                assert!((out.at(i, j) / w - 8.0).abs() < 1e-8, "{}", out.at(i, j) / w);
            }
        }
        assert_eq!(e.apply(&vec![0.0; e.dim()]), vec![0.0; e.dim()]);
    }

    #[test]
    fn energy_operator_symmetric_and_consistent_with_product() {
        let g = Grid::new(9, 11, (0.0, 1.0), (0.0, 1.5), false).unwrap();
        let mu = ScalarField::from_fn(g, |x, y| 1.0 + 0.5 * (x * 7.0).sin() * y);
        let e = assemble_energy_operator(&mu).unwrap();
        assert!(e.matrix.asymmetry() < 1e-14);
        let (p, q) = (clamped(g, 1), clamped(g, 2));
        let (xp, xq) = (e.dofs.restrict(&p), e.dofs.restrict(&q));
        let via_matrix = 0.5 * dot(&xq, &e.apply(&xp));
        let direct = energy_product(&mu, &p, &q);
        assert!((via_matrix - direct).abs() < 1e-12 * direct.abs().max(1.0));
        assert!((energy_product(&mu, &p, &q) - energy_product(&mu, &q, &p)).abs() < 1e-12 * direct.abs().max(1.0));
        assert_eq!(energy_product(&mu, &ScalarField::zeros(g), &ScalarField::zeros(g)), 0.0);
    }

    #[test]
    fn constant_viscosity_product_is_half_laplacian_norm() {
        for g in [square(10), Grid::new(10, 8, (0.0, 1.0), (0.0, 0.7), true).unwrap()] {
            for seed in 0..5 {
                let p = clamped(g, seed);
                let mu0 = 1.7;
                let lhs = energy_product(&ScalarField::constant(g, mu0), &p, &p);
                let a_h = 0.5 * laplacian_norm(&p).powi(2);
                assert!((lhs - mu0 * a_h).abs() <= 1e-12 * lhs, "{lhs} vs {}", mu0 * a_h);
            }
        }
    }

    #[test]
    fn energy_rejects_nonpositive_viscosity() {
        let g = square(7);
        let mut mu = ScalarField::constant(g, 1.0);
        mu.values[10] = 0.0;
        assert!(matches!(assemble_energy_operator(&mu), Err(Error::ViscosityBelowBound { node: 10, .. })));
    }

    #[test]
    fn convection_zero_cases() {
        let g = square(9);
        let phi = ScalarField::from_fn(g, |x, y| x * y);
        let w = grad_perp(&phi);
        let zero_w = assemble_convection(&ScalarField::constant(g, 1.0), &VectorField::zeros(g));
        assert!(zero_w.matrix.values.iter().all(|v| *v == 0.0));
        let zero_rho = assemble_convection(&ScalarField::zeros(g), &w);
        assert!(zero_rho.matrix.values.iter().all(|v| *v == 0.0));
        let p = clamped(g, 3);
        assert_eq!(trilinear(&ScalarField::constant(g, 1.0), &w, &p, &ScalarField::zeros(g)), 0.0);
    }

    #[test]
    fn convection_matrix_matches_trilinear() {
        let g = Grid::new(10, 9, (0.0, 1.0), (0.0, 1.0), true).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| 1.0 + x * y);
        let w = VectorField::from_fn(g, |x, y| [(6.0 * x).cos() + y, x - y * y]);
        let k = assemble_convection(&rho, &w);
        let (p, q) = (clamped(g, 7), clamped(g, 8));
        let t = trilinear(&rho, &w, &p, &q);
        let m = dot(&k.dofs.restrict(&q), &k.apply(&k.dofs.restrict(&p)));
        assert!((t - m).abs() < 1e-12 * t.abs().max(1.0));
    }

    #[test]
    fn trilinear_is_linear_in_test_field() {
        let g = square(10);
        let rho = ScalarField::from_fn(g, |x, _| 1.0 + x);
        let w = VectorField::from_fn(g, |x, y| [y, -x]);
        let (p, q1, q2) = (clamped(g, 1), clamped(g, 2), clamped(g, 3));
        let (a, b) = (0.3, -1.7);
        let comb = q1.zip_with(&q2, |u, v| a * u + b * v);
        let lhs = trilinear(&rho, &w, &p, &comb);
        let rhs = a * trilinear(&rho, &w, &p, &q1) + b * trilinear(&rho, &w, &p, &q2);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn dof_map_round_trip() {
        for g in [square(7), Grid::new(8, 6, (0.0, 1.0), (0.0, 1.0), true).unwrap()] {
            let d = DofMap::new(g);
            let x: Vec<f64> = (0..d.len()).map(|k| k as f64).collect();
            assert_eq!(d.restrict(&d.to_field(&x)), x);
            for k in 0..d.len() {
                let (i, j) = d.node(k);
                assert_eq!(d.resolve(i as isize, j as isize), Some(k));
            }
        }
    }

    #[test]
    fn matrix_market_dump() {
        let g = square(5);
        let e = assemble_energy_operator(&ScalarField::constant(g, 1.0)).unwrap();
        let mut buf = Vec::new();
        e.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), format!("9 9 {}", e.matrix.nnz()));
    }
}
