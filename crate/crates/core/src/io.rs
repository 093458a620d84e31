//! JSON case files and CSV output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ClosureTable, Grid, ProblemSpec, ScalarField, VectorField};
use crate::lift::{boundary_loops, Wall};
use crate::symmetric::PiecewiseProfile;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    #[serde(default)]
    pub domain: DomainConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub force: ForceConfig,
    pub closures: ClosuresConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { x1: [0.0, 1.0], x2: [0.0, 1.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub periodic_x1: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    /// Velocity per boundary node in traversal order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<Vec<[f64; 2]>>,
    /// Constant velocity per wall; ignored when `u0` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walls: Option<WallVelocities>,
    #[serde(default, rename = "C0")]
    pub c0: f64,
    #[serde(default)]
    pub flux: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallVelocities {
    #[serde(default)]
    pub bottom: [f64; 2],
    #[serde(default)]
    pub top: [f64; 2],
    #[serde(default)]
    pub left: [f64; 2],
    #[serde(default)]
    pub right: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceConfig {
    Constant([f64; 2]),
    /// One pair per grid node, row-major with x1 fastest.
    Values(Vec<[f64; 2]>),
}

impl Default for ForceConfig {
    fn default() -> Self {
        ForceConfig::Constant([0.0, 0.0])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosuresConfig {
    pub eta: ClosureConfig,
    pub b: ClosureConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClosureConfig {
    Constant {
        constant: f64,
    },
    Step {
        step: StepConfig,
    },
    Table {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        declared_min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        declared_max: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub at: f64,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

impl ClosureConfig {
    pub fn build(&self) -> Result<ClosureTable> {
        match self {
            ClosureConfig::Constant { constant } => ClosureTable::constant(*constant),
            ClosureConfig::Step { step } => ClosureTable::step(step.at, step.lo, step.hi, step.width),
            ClosureConfig::Table { breakpoints, values, declared_min, declared_max } => {
                let t = ClosureTable::piecewise_linear(breakpoints.clone(), values.clone())?;
                match (declared_min, declared_max) {
                    (None, None) => Ok(t),
                    (lo, hi) => ClosureTable::new(
                        breakpoints.clone(),
                        values.clone(),
                        values[0],
                        *values.last().unwrap(),
                        lo.unwrap_or(t.declared_min()),
                        hi.unwrap_or(t.declared_max()),
                    ),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub omega: Option<f64>,
    pub tol_rel: Option<f64>,
    pub tol_abs: Option<f64>,
    pub max_iter: Option<usize>,
    pub flux_tol: Option<f64>,
}

impl CaseConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        CaseConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_spec(&self) -> Result<ProblemSpec> {
        let d = &self.domain;
        let grid = Grid::new(
            self.grid.nx,
            self.grid.ny,
            (d.x1[0], d.x1[1]),
            (d.x2[0], d.x2[1]),
            self.grid.periodic_x1,
        )?;
        let mut spec = ProblemSpec::new(grid, self.closures.eta.build()?, self.closures.b.build()?);
        let bc = &self.boundary;
        if let Some(u0) = &bc.u0 {
            spec.u0_samples = u0.clone();
        } else if let Some(w) = &bc.walls {
            spec.u0_samples = wall_samples(&grid, w);
        }
        spec.c0 = bc.c0;
        spec.flux = bc.flux;
        spec.force = match &self.force {
            ForceConfig::Constant(f) => VectorField::from_fn(grid, |_, _| *f),
            ForceConfig::Values(v) => VectorField::new(grid, v.clone())?,
        };
        let s = &self.solver;
        spec.delta = s.delta.unwrap_or(spec.delta);
        spec.eps_mollify = s.eps.unwrap_or(spec.eps_mollify);
        spec.omega = s.omega.unwrap_or(spec.omega);
        spec.tol_rel = s.tol_rel.unwrap_or(spec.tol_rel);
        spec.tol_abs = s.tol_abs.unwrap_or(spec.tol_abs);
        spec.max_iter = s.max_iter.unwrap_or(spec.max_iter);
        spec.flux_tol = s.flux_tol.unwrap_or(spec.flux_tol);
        spec.validate()?;
        Ok(spec)
    }
}

/// Boundary samples from per-wall constants. Corner nodes take the wall that leaves them.
pub fn wall_samples(grid: &Grid, w: &WallVelocities) -> Vec<[f64; 2]> {
    boundary_loops(grid)
        .into_iter()
        .flatten()
        .map(|n| {
            if grid.periodic_x1 {
                return if n.j == 0 { w.bottom } else { w.top };
            }
            match n.wall {
                Wall::Left => w.left,
                Wall::Top => w.top,
                Wall::Right => w.right,
                Wall::Bottom => w.bottom,
            }
        })
        .collect()
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_scalar_csv(mut w: impl Write, f: &ScalarField) -> Result<()> {
    writeln!(w, "x1,x2,value")?;
    for (n, v) in f.values.iter().enumerate() {
        let (x, y) = f.grid.coords(n);
        writeln!(w, "{},{},{}", fmt_num(x), fmt_num(y), fmt_num(*v))?;
    }
    Ok(())
}

pub fn write_vector_csv(mut w: impl Write, f: &VectorField) -> Result<()> {
    writeln!(w, "x1,x2,v1,v2")?;
    for (n, v) in f.values.iter().enumerate() {
        let (x, y) = f.grid.coords(n);
        writeln!(w, "{},{},{},{}", fmt_num(x), fmt_num(y), fmt_num(v[0]), fmt_num(v[1]))?;
    }
    Ok(())
}

pub struct StateFields<'a> {
    pub stream: &'a ScalarField,
    pub velocity: &'a VectorField,
    pub rho: &'a ScalarField,
    pub mu: &'a ScalarField,
    pub pressure: &'a ScalarField,
}

pub fn write_state_csv(mut w: impl Write, s: &StateFields<'_>) -> Result<()> {
    let g = s.stream.grid;
    if [s.velocity.grid, s.rho.grid, s.mu.grid, s.pressure.grid].iter().any(|o| *o != g) {
        return Err(Error::InvalidField("state fields live on different grids".into()));
    }
    writeln!(w, "x1,x2,Phi,u1,u2,rho,mu,Pi")?;
    for n in 0..g.node_count() {
        let (x, y) = g.coords(n);
        let u = s.velocity.values[n];
        let row = [x, y, s.stream.values[n], u[0], u[1], s.rho.values[n], s.mu.values[n], s.pressure.values[n]];
        writeln!(w, "{}", row.map(fmt_num).join(","))?;
    }
    Ok(())
}

/// `coordinate,value,derivative` on `per_piece` uniform samples of each piece.
pub fn write_profile_csv(mut w: impl Write, p: &PiecewiseProfile, per_piece: usize) -> Result<()> {
    writeln!(w, "coordinate,value,derivative")?;
    for (x, v, d) in p.sample(per_piece) {
        writeln!(w, "{},{},{}", fmt_num(x), fmt_num(v), fmt_num(d))?;
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
