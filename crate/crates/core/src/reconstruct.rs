//! Velocity, density, viscosity and pressure from a stream function.

use crate::error::Result;
use crate::fields::{ClosureTable, ScalarField, TensorField, VectorField};
use crate::linalg::{CsrMatrix, LuSolver};
use crate::operators::{deformation, grad_perp, gradient, tensor_divergence, BoundaryMode};

pub fn recover_state(
    stream: &ScalarField,
    eta: &ClosureTable,
    b: &ClosureTable,
) -> Result<(VectorField, ScalarField, ScalarField)> {
    let u = grad_perp(stream);
    let rho = eta.apply(stream)?;
    let mu = b.apply(&rho)?;
    Ok((u, rho, mu))
}

/// `ρ u ⊗ u` per node.
pub fn convective_flux(u: &VectorField, rho: &ScalarField) -> TensorField {
    let values = u
        .values
        .iter()
        .zip(&rho.values)
        .map(|(v, &r)| [r * v[0] * v[0], r * v[0] * v[1], r * v[1] * v[0], r * v[1] * v[1]])
        .collect();
    TensorField { grid: u.grid, values }
}

/// `f - div(ρ u⊗u) + div(μ S u)`, the field the pressure gradient has to match.
pub fn pressure_target(u: &VectorField, rho: &ScalarField, mu: &ScalarField, f: &VectorField) -> VectorField {
    let conv = tensor_divergence(&convective_flux(u, rho), BoundaryMode::Extrapolate);
    let visc = tensor_divergence(&deformation(u).scaled_by(mu), BoundaryMode::Extrapolate);
    let values = (0..u.grid.node_count())
        .map(|n| {
            let (c, v, s) = (conv.values[n], visc.values[n], f.values[n]);
            [s[0] - c[0] + v[0], s[1] - c[1] + v[1]]
        })
        .collect();
    VectorField { grid: u.grid, values }
}

#[derive(Debug, Clone)]
pub struct Pressure {
    pub pi: ScalarField,
    /// Weighted L2 defect of the least-squares fit `∇Π ≈ G`.
    pub compat: f64,
    /// Mean pressure gradient along x1 on periodic strips (zero otherwise).
    pub mean_slope: f64,
}

struct Edge {
    a: usize,
    b: usize,
    h: f64,
    w: f64,
    target: f64,
}

/// Least-squares pressure with staggered edge gradients, zero mean over interior nodes.
/// On periodic strips the pressure may carry a linear part `β (x1 - x1_min)`.
pub fn pressure_recover(u: &VectorField, rho: &ScalarField, mu: &ScalarField, f: &VectorField) -> Result<Pressure> {
    let g = u.grid;
    let target = pressure_target(u, rho, mu, f);
    let ncols = g.columns();
    let n = ncols * g.ny;
    let node = |i: usize, j: usize| j * ncols + (i % ncols);
    let (h1, h2) = (g.h1(), g.h2());
    let wx = |i: usize| if !g.periodic_x1 && (i == 0 || i == g.nx - 1) { 0.5 } else { 1.0 };
    let wy = |j: usize| if j == 0 || j == g.ny - 1 { 0.5 } else { 1.0 };
    let mut edges = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx - 1 {
            let t = 0.5 * (target.values[g.idx(i, j)][0] + target.values[g.idx(i + 1, j)][0]);
            edges.push(Edge { a: node(i, j), b: node(i + 1, j), h: h1, w: h1 * h2 * wy(j), target: t });
        }
    }
    let n_x_edges = edges.len();
    for j in 0..g.ny - 1 {
        for i in 0..ncols {
            let t = 0.5 * (target.values[g.idx(i, j)][1] + target.values[g.idx(i, j + 1)][1]);
            edges.push(Edge { a: node(i, j), b: node(i, j + 1), h: h2, w: h1 * h2 * wx(i), target: t });
        }
    }
    let mean_slope = if g.periodic_x1 {
        let (s, w) = edges[..n_x_edges].iter().fold((0.0, 0.0), |(s, w), e| (s + e.w * e.target, w + e.w));
        s / w
    } else {
        0.0
    };
    for e in &mut edges[..n_x_edges] {
        e.target -= mean_slope;
    }
    // Normal equations with node 0 pinned.
    let mut trip = Vec::with_capacity(edges.len() * 4);
    let mut rhs = vec![0.0; n - 1];
    for e in &edges {
        let k = e.w / (e.h * e.h);
        let r = e.w * e.target / e.h;
        for (p, sp) in [(e.a, -1.0), (e.b, 1.0)] {
            if p == 0 {
                continue;
            }
            rhs[p - 1] += sp * r;
            for (q, sq) in [(e.a, -1.0), (e.b, 1.0)] {
                if q != 0 {
                    trip.push((p - 1, q - 1, k * sp * sq));
                }
            }
        }
    }
    let m = CsrMatrix::from_triplets(n - 1, n - 1, trip);
    let sol = LuSolver::new().solve(&m, &rhs, 1e-10)?;
    let mut p = vec![0.0; n];
    p[1..].copy_from_slice(&sol.x);
    let compat = edges
        .iter()
        .map(|e| {
            let d = (p[e.b] - p[e.a]) / e.h - e.target;
            e.w * d * d
        })
        .sum::<f64>()
        .sqrt();
    let mut pi = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            pi.values[g.idx(i, j)] = p[node(i, j)] + mean_slope * (g.x1(i) - g.x1_min);
        }
    }
    let interior: Vec<usize> =
        (0..g.ny).flat_map(|j| (0..ncols).map(move |i| (i, j))).filter(|&(i, j)| !g.is_boundary(i, j)).map(|(i, j)| g.idx(i, j)).collect();
    let mean = interior.iter().map(|&k| pi.values[k]).sum::<f64>() / interior.len() as f64;
    for v in &mut pi.values {
        *v -= mean;
    }
    Ok(Pressure { pi, compat, mean_slope })
}

/// Norms of `div(ρu⊗u) - div(μSu) + ∇Π - f` over nodes at least two spacings from the walls.
pub fn momentum_residual(
    u: &VectorField,
    rho: &ScalarField,
    mu: &ScalarField,
    pi: &ScalarField,
    f: &VectorField,
) -> (f64, f64) {
    let g = u.grid;
    let target = pressure_target(u, rho, mu, f);
    let gp = gradient(pi, BoundaryMode::Extrapolate);
    let (mut l2, mut max) = (0.0f64, 0.0f64);
    let area = g.h1() * g.h2();
    for j in 2..g.ny - 2 {
        for i in 0..g.columns() {
            if !g.periodic_x1 && (i < 2 || i + 2 >= g.nx) {
                continue;
            }
            let n = g.idx(i, j);
            let r = [gp.values[n][0] - target.values[n][0], gp.values[n][1] - target.values[n][1]];
            let m = r[0].hypot(r[1]);
            l2 += area * m * m;
            max = max.max(m);
        }
    }
    (l2.sqrt(), max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn recover_linear_stream() {
        let g = Grid::unit_square(9).unwrap();
        let (u, rho, mu) = recover_state(
            &ScalarField::from_fn(g, |_, y| y),
            &ClosureTable::constant(1.0).unwrap(),
            &ClosureTable::constant(0.3).unwrap(),
        )
        .unwrap();
        assert!(u.values.iter().all(|v| (v[0] - 1.0).abs() < 1e-13 && v[1].abs() < 1e-13));
        assert!(rho.values.iter().all(|&r| r == 1.0));
        assert!(mu.values.iter().all(|&m| m == 0.3));
    }

    #[test]
    fn zero_state_has_zero_pressure() {
        let g = Grid::unit_square(9).unwrap();
        let z = VectorField::zeros(g);
        let one = ScalarField::constant(g, 1.0);
        let p = pressure_recover(&z, &one, &one, &z).unwrap();
        assert!(p.pi.values.iter().all(|&v| v == 0.0));
        assert_eq!(p.compat, 0.0);
        assert_eq!(momentum_residual(&z, &one, &one, &p.pi, &z), (0.0, 0.0));
    }

    #[test]
    fn gradient_force_is_absorbed_by_pressure() {
        let g = Grid::unit_square(33).unwrap();
        let z = VectorField::zeros(g);
        let one = ScalarField::constant(g, 1.0);
        let f = VectorField::from_fn(g, |x, y| [2.0 * x * y, x * x]);
        let p = pressure_recover(&z, &one, &one, &f).unwrap();
        let exact = ScalarField::from_fn(g, |x, y| x * x * y);
        let shift = p.pi.at(5, 5) - exact.at(5, 5);
        let err = p.pi.values.iter().zip(&exact.values).map(|(a, b)| (a - b - shift).abs()).fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
        assert!(p.compat < 1e-2);
    }

    #[test]
    fn rigid_rotation_balances_centripetal_pressure() {
        let g = Grid::new(33, 33, (-1.0, 1.0), (-1.0, 1.0), false).unwrap();
        let g0 = 0.7;
        let rho0 = 1.3;
        let stream = ScalarField::from_fn(g, |x, y| -0.5 * g0 * (x * x + y * y));
        let (u, rho, mu) = recover_state(
            &stream,
            &ClosureTable::constant(rho0).unwrap(),
            &ClosureTable::constant(2.0).unwrap(),
        )
        .unwrap();
        let pi = ScalarField::from_fn(g, |x, y| 0.5 * rho0 * g0 * g0 * (x * x + y * y));
        let (l2, max) = momentum_residual(&u, &rho, &mu, &pi, &VectorField::zeros(g));
        assert!(l2 < 1e-11 && max < 1e-11, "{l2} {max}");
        let p = pressure_recover(&u, &rho, &mu, &VectorField::zeros(g)).unwrap();
        let (l2, _) = momentum_residual(&u, &rho, &mu, &p.pi, &VectorField::zeros(g));
        assert!(l2 < 1e-2, "{l2}");
    }
}
