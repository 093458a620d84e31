//! Boundary stream data, cutoff, lift and mollification.
//!
//! Boundary nodes are traversed with tangent `τ = (n2, -n1)`, `n` the outward normal.
//! On a rectangle this is a single clockwise loop starting at the lower-left corner and
//! going up the left wall. On an x1-periodic strip there are two loops: the bottom wall
//! from `(0, 0)` towards decreasing x1, then the top wall from `(0, ny-1)` towards
//! increasing x1. Velocity samples are expected in exactly this order.

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::operators::Padded;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    Left,
    Top,
    Right,
    Bottom,
}

impl Wall {
    pub fn normal(self) -> [f64; 2] {
        match self {
            Wall::Left => [-1.0, 0.0],
            Wall::Top => [0.0, 1.0],
            Wall::Right => [1.0, 0.0],
            Wall::Bottom => [0.0, -1.0],
        }
    }

    pub fn tangent(self) -> [f64; 2] {
        let n = self.normal();
        [n[1], -n[0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub i: usize,
    pub j: usize,
    /// Wall followed by the segment leaving this node.
    pub wall: Wall,
    pub arc: f64,
}

pub fn boundary_node_count(grid: &Grid) -> usize {
    if grid.periodic_x1 {
        2 * (grid.nx - 1)
    } else {
        2 * (grid.nx + grid.ny) - 4
    }
}

/// Boundary loops in traversal order.
pub fn boundary_loops(grid: &Grid) -> Vec<Vec<BoundaryNode>> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut loops = Vec::new();
    let mut raw: Vec<Vec<(usize, usize, Wall)>> = Vec::new();
    if grid.periodic_x1 {
        let mut bottom = vec![(0, 0, Wall::Bottom)];
        bottom.extend((1..nx - 1).rev().map(|i| (i, 0, Wall::Bottom)));
        let top = (0..nx - 1).map(|i| (i, ny - 1, Wall::Top)).collect();
        raw.push(bottom);
        raw.push(top);
    } else {
        let mut l = Vec::with_capacity(boundary_node_count(grid));
        l.extend((0..ny - 1).map(|j| (0, j, Wall::Left)));
        l.extend((0..nx - 1).map(|i| (i, ny - 1, Wall::Top)));
        l.extend((1..ny).rev().map(|j| (nx - 1, j, Wall::Right)));
        l.extend((1..nx).rev().map(|i| (i, 0, Wall::Bottom)));
        raw.push(l);
    }
    let mut arc = 0.0;
    for r in raw {
        let mut nodes = Vec::with_capacity(r.len());
        for (i, j, wall) in r {
            nodes.push(BoundaryNode { i, j, wall, arc });
            arc += match wall {
                Wall::Left | Wall::Right => grid.h2(),
                Wall::Top | Wall::Bottom => grid.h1(),
            };
        }
        loops.push(nodes);
    }
    loops
}

fn segment_length(grid: &Grid, wall: Wall) -> f64 {
    match wall {
        Wall::Left | Wall::Right => grid.h2(),
        Wall::Top | Wall::Bottom => grid.h1(),
    }
}

/// Per-loop trapezoidal `∮ u0·n ds`.
fn loop_fluxes(u0: &[[f64; 2]], grid: &Grid) -> Result<Vec<f64>> {
    let expected = boundary_node_count(grid);
    if u0.len() != expected {
        return Err(Error::IncompleteBoundary { expected, got: u0.len() });
    }
    if u0.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidProblem("non-finite boundary velocity".into()));
    }
    let mut out = Vec::new();
    let mut k0 = 0;
    for lp in boundary_loops(grid) {
        let m = lp.len();
        let mut s = 0.0;
        for (a, node) in lp.iter().enumerate() {
            let (ua, ub) = (u0[k0 + a], u0[k0 + (a + 1) % m]);
            let n = node.wall.normal();
            s += 0.5 * ((ua[0] + ub[0]) * n[0] + (ua[1] + ub[1]) * n[1]) * segment_length(grid, node.wall);
        }
        out.push(s);
        k0 += m;
    }
    Ok(out)
}

/// Boundary flux of the samples; on strips, the loop flux of largest magnitude.
pub fn check_flux(u0: &[[f64; 2]], grid: &Grid) -> Result<f64> {
    let f = loop_fluxes(u0, grid)?;
    Ok(f.into_iter().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m }))
}

/// Stream function values on the boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub grid: Grid,
    pub nodes: Vec<BoundaryNode>,
    pub values: Vec<f64>,
    pub u0: Vec<[f64; 2]>,
    pub c0: f64,
    /// Value after each full loop minus its starting value.
    pub closure_defects: Vec<f64>,
    lookup: Vec<Option<usize>>,
}

impl BoundaryTrace {
    /// Trace index of boundary node (i, j).
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        self.lookup[self.grid.idx(i, j)]
    }

    pub fn value_at(&self, i: usize, j: usize) -> Option<f64> {
        self.index(i, j).map(|k| self.values[k])
    }
}

/// Integrates `-u0·n` along the boundary starting from `c0`; strips start the top wall at `c0 + flux`.
pub fn boundary_stream(u0: &[[f64; 2]], grid: &Grid, c0: f64, flux: f64, flux_tol: f64) -> Result<BoundaryTrace> {
    let fluxes = loop_fluxes(u0, grid)?;
    if let Some(&bad) = fluxes.iter().find(|f| f.abs() > flux_tol) {
        return Err(Error::FluxViolation { flux: bad, tol: flux_tol });
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    let mut defects = Vec::new();
    let mut k0 = 0;
    for (l, lp) in boundary_loops(grid).into_iter().enumerate() {
        let m = lp.len();
        let start = if l == 0 { c0 } else { c0 + flux };
        let mut v = start;
        for (a, node) in lp.iter().enumerate() {
            values.push(v);
            let (ua, ub) = (u0[k0 + a], u0[k0 + (a + 1) % m]);
            let n = node.wall.normal();
            v -= 0.5 * ((ua[0] + ub[0]) * n[0] + (ua[1] + ub[1]) * n[1]) * segment_length(grid, node.wall);
        }
        defects.push(v - start);
        nodes.extend(lp);
        k0 += m;
    }
    let mut lookup = vec![None; grid.node_count()];
    for (k, nd) in nodes.iter().enumerate() {
        lookup[grid.idx(nd.i, nd.j)] = Some(k);
        if grid.periodic_x1 && nd.i == 0 {
            lookup[grid.idx(grid.nx - 1, nd.j)] = Some(k);
        }
    }
    Ok(BoundaryTrace { grid: *grid, nodes, values, u0: u0.to_vec(), c0, closure_defects: defects, lookup })
}

/// Smoothstep profile `1 - (3t² - 2t³)` clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    1.0 - t * t * (3.0 - 2.0 * t)
}

/// Cutoff equal to one on the walls and zero at distance `delta` and beyond.
pub fn cutoff(grid: &Grid, delta: f64) -> Result<ScalarField> {
    if !(delta > 0.0) {
        return Err(Error::InvalidProblem("cutoff width must be positive".into()));
    }
    let mut z = ScalarField::zeros(*grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            z.values[grid.idx(i, j)] = smoothstep(grid.wall_distance(i, j) / delta);
        }
    }
    Ok(z)
}

/// Nearest boundary node of padded position (i, j) and the offset to it.
fn nearest_boundary(trace: &BoundaryTrace, i: isize, j: isize) -> (usize, [f64; 2]) {
    let g = &trace.grid;
    let (nx, ny) = (g.nx as isize, g.ny as isize);
    let i = if g.periodic_x1 { i.rem_euclid(nx - 1) } else { i };
    let (x1, x2) = (g.x1_min + i as f64 * g.h1(), g.x2_min + j as f64 * g.h2());
    let outside_x1 = !g.periodic_x1 && (i < 0 || i > nx - 1);
    let outside_x2 = j < 0 || j > ny - 1;
    let foot: (isize, isize) = if outside_x1 || outside_x2 {
        let pi = if g.periodic_x1 { i } else { i.clamp(0, nx - 1) };
        (pi, j.clamp(0, ny - 1))
    } else {
        let mut cands: Vec<(f64, (isize, isize))> = vec![(x2 - g.x2_min, (i, 0)), (g.x2_max - x2, (i, ny - 1))];
        if !g.periodic_x1 {
            cands.push((x1 - g.x1_min, (0, j)));
            cands.push((g.x1_max - x1, (nx - 1, j)));
        }
        let dmin = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * g.min_spacing();
        cands
            .into_iter()
            .filter(|c| c.0 <= dmin + tol)
            .map(|c| c.1)
            .min_by(|a, b| {
                let arc = |p: &(isize, isize)| trace.nodes[trace.index(p.0 as usize, p.1 as usize).unwrap()].arc;
                arc(a).total_cmp(&arc(b))
            })
            .unwrap()
    };
    let k = trace.index(foot.0 as usize, foot.1 as usize).expect("foot point lies on the boundary");
    let dx = [(i - foot.0) as f64 * g.h1(), (j - foot.1) as f64 * g.h2()];
    (k, dx)
}

/// Lift on the nodes and one ghost layer. Nodes take `(Φ0(p) + (x - p)·∇Φ0(p)) ζ(x)` with
/// `∇Φ0 = (-u0_2, u0_1)` at the nearest boundary node `p`. A ghost takes the value at its mirror
/// node plus the offset to the mirror times `∇Φ0(p)`, so the central difference across the wall
/// reproduces the boundary velocity exactly.
pub fn lift_padded(trace: &BoundaryTrace, delta: f64) -> Result<Padded> {
    if !(delta > 0.0) {
        return Err(Error::InvalidProblem("cutoff width must be positive".into()));
    }
    let g = trace.grid;
    let (nx, ny) = (g.nx as isize, g.ny as isize);
    let node = |i: isize, j: isize| {
        let (k, dx) = nearest_boundary(trace, i, j);
        let z = smoothstep(g.wall_distance(i.rem_euclid(nx) as usize, j as usize) / delta);
        if z == 0.0 {
            0.0
        } else if dx == [0.0, 0.0] {
            trace.values[k]
        } else {
            let u = trace.u0[k];
            (trace.values[k] + dx[0] * (-u[1]) + dx[1] * u[0]) * z
        }
    };
    let reflect = |a: isize, n: isize| {
        if a < 0 {
            -a
        } else if a >= n {
            2 * (n - 1) - a
        } else {
            a
        }
    };
    Ok(Padded::from_fn(g, |i, j| {
        let ghost_x1 = !g.periodic_x1 && (i < 0 || i >= nx);
        let ghost_x2 = j < 0 || j >= ny;
        let i = if g.periodic_x1 { i.rem_euclid(nx - 1) } else { i };
        if !(ghost_x1 || ghost_x2) {
            return node(i, j);
        }
        let (mi, mj) = (if ghost_x1 { reflect(i, nx) } else { i }, reflect(j, ny));
        let (k, _) = nearest_boundary(trace, i, j);
        let u = trace.u0[k];
        let off = [(i - mi) as f64 * g.h1(), (j - mj) as f64 * g.h2()];
        node(mi, mj) + off[0] * (-u[1]) + off[1] * u[0]
    }))
}

pub fn build_lift(trace: &BoundaryTrace, delta: f64) -> Result<ScalarField> {
    Ok(lift_padded(trace, delta)?.interior())
}

/// Normalized truncated-Gaussian weights, `σ = eps/2`, half-width `floor(eps/h)`.
pub fn mollifier_weights(eps: f64, h: f64) -> Vec<f64> {
    let m = (eps / h + 1e-12).floor() as isize;
    if eps <= 0.0 || m < 1 {
        return vec![1.0];
    }
    let sigma = 0.5 * eps;
    let w: Vec<f64> = (-m..=m).map(|k| (-(k as f64 * h).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn convolve_line(src: &[f64], dst: &mut [f64], w: &[f64], periodic: bool) {
    let n = src.len() as isize;
    let m = (w.len() / 2) as isize;
    for k in 0..n {
        let (mut s, mut ws) = (0.0, 0.0);
        for (t, &wt) in w.iter().enumerate() {
            let q = k + t as isize - m;
            let q = if periodic {
                q.rem_euclid(n)
            } else if q < 0 || q >= n {
                continue;
            } else {
                q
            };
            s += wt * src[q as usize];
            ws += wt;
        }
        dst[k as usize] = s / ws;
    }
}

/// Separable smoothing with renormalized weights near walls and wrap-around when periodic.
pub fn mollify(field: &ScalarField, eps: f64) -> Result<ScalarField> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidProblem("mollification radius must be nonnegative".into()));
    }
    let g = field.grid;
    let (w1, w2) = (mollifier_weights(eps, g.h1()), mollifier_weights(eps, g.h2()));
    if w1.len() == 1 && w2.len() == 1 {
        return Ok(field.clone());
    }
    let mut out = field.clone();
    let n = g.columns();
    let mut buf = vec![0.0; n.max(g.ny)];
    if w1.len() > 1 {
        for j in 0..g.ny {
            let row = &mut out.values[j * g.nx..j * g.nx + n];
            convolve_line(row, &mut buf[..n], &w1, g.periodic_x1);
            row.copy_from_slice(&buf[..n]);
        }
    }
    if w2.len() > 1 {
        let mut col = vec![0.0; g.ny];
        for i in 0..n {
            for (j, c) in col.iter_mut().enumerate() {
                *c = out.values[g.idx(i, j)];
            }
            convolve_line(&col, &mut buf[..g.ny], &w2, false);
            for j in 0..g.ny {
                out.values[g.idx(i, j)] = buf[j];
            }
        }
    }
    out.sync_periodic();
    Ok(out)
}

/// Boundary samples of a velocity field given by a closure, in traversal order.
pub fn sample_boundary(grid: &Grid, u: impl Fn(f64, f64) -> [f64; 2]) -> Vec<[f64; 2]> {
    boundary_loops(grid).into_iter().flatten().map(|n| u(grid.x1(n.i), grid.x2(n.j))).collect()
}
