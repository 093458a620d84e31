use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use vvs_core::io::{write_json, write_profile_csv, write_state_csv, CaseConfig, StateFields};
use vvs_core::mms::{convergence_study, ManufacturedCase};
use vvs_core::picard::solve_stream;
use vvs_core::reconstruct::{momentum_residual, pressure_recover, recover_state};
use vvs_core::symmetric::{
    concentric_constants, concentric_flux, concentric_profile, concentric_viscosity, couette_constants,
    couette_profile, couette_viscosity, radial_bvp, radial_example, symmetric_stream_residual, Family,
    PiecewiseProfile,
};
use vvs_core::verify::{run_all, run_criterion, CRITERIA};
use vvs_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;
const PROFILE_SAMPLES: usize = 200;

#[derive(Parser)]
#[command(name = "vvs", version, about = "Stationary variable-viscosity Navier-Stokes in stream-function form")]
struct Cli {
    /// Directory for output files (defaults to the config's directory for `solve`, else `.`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the case described by a JSON config.
    Solve { config: PathBuf },
    /// Evaluate a closed-form symmetric flow.
    Symmetric {
        #[command(subcommand)]
        family: SymmetricCmd,
    },
    /// Grid-refinement study on the manufactured solution.
    Mms {
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Nodes per side on the coarsest grid.
        #[arg(long, default_value_t = 33)]
        base: usize,
        /// Use unit density and viscosity.
        #[arg(long)]
        constant: bool,
    },
    /// Run the acceptance checks.
    Verify {
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum SymmetricCmd {
    Couette {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        a_minus: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        a_plus: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        c1: f64,
    },
    Concentric {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        g_minus: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        g_plus: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        c1: f64,
    },
    /// The two-level sector example, also solved as a boundary-value problem.
    Radial {
        #[arg(long, default_value_t = 512)]
        n_theta: usize,
    },
}

enum Failure {
    Usage(String),
    NotConverged(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } | Error::NewtonFailure { .. } => Failure::NotConverged(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn configure_threads() {
    let n = std::env::var("VVS_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    let par = match n {
        Some(0) | Some(1) => faer::Par::Seq,
        Some(n) => faer::Par::rayon(n),
        None => faer::Par::Seq,
    };
    faer::set_global_parallelism(par);
}

fn out_dir(cli: &Cli, fallback: &Path) -> std::io::Result<PathBuf> {
    let dir = cli.out_dir.clone().unwrap_or_else(|| fallback.to_path_buf());
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn say(cli: &Cli, msg: impl AsRef<str>) {
    if !cli.quiet {
        println!("{}", msg.as_ref());
    }
}

fn cmd_solve(cli: &Cli, config: &Path) -> Outcome {
    let case = CaseConfig::load(config)?;
    let spec = case.to_spec()?;
    let (stream, report) = solve_stream(&spec)?;
    let (u, rho, mu) = recover_state(&stream, &spec.eta, &spec.b)?;
    let p = pressure_recover(&u, &rho, &mu, &spec.force)?;
    let (res_l2, res_max) = momentum_residual(&u, &rho, &mu, &p.pi, &spec.force);

    let parent = config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let dir = out_dir(cli, parent)?;
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("case");
    let csv = dir.join(format!("{stem}_state.csv"));
    let mut w = BufWriter::new(File::create(&csv)?);
    write_state_csv(&mut w, &StateFields { stream: &stream, velocity: &u, rho: &rho, mu: &mu, pressure: &p.pi })?;
    drop(w);
    let json_path = dir.join(format!("{stem}_report.json"));
    let doc = json!({
        "run": report,
        "pressure_compatibility": p.compat,
        "mean_pressure_slope": p.mean_slope,
        "momentum_residual_l2": res_l2,
        "momentum_residual_max": res_max,
    });
    write_json(&json_path, &doc)?;
    say(
        cli,
        format!(
            "{} iterations, converged {}, energy {:.6e}, bound {:.6e}\nwrote {} and {}",
            report.iterations,
            report.converged,
            report.energy.last().copied().unwrap_or(0.0),
            report.apriori_bound,
            csv.display(),
            json_path.display()
        ),
    );
    if report.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!("no convergence after {} iterations", report.iterations)))
    }
}

fn write_profile(dir: &Path, name: &str, p: &PiecewiseProfile) -> std::result::Result<PathBuf, Failure> {
    let path = dir.join(format!("{name}_profile.csv"));
    let mut w = BufWriter::new(File::create(&path)?);
    write_profile_csv(&mut w, p, PROFILE_SAMPLES)?;
    Ok(path)
}

fn max_shear(p: &PiecewiseProfile) -> f64 {
    p.sample(PROFILE_SAMPLES).iter().map(|s| s.2.abs()).fold(0.0, f64::max)
}

fn cmd_symmetric(cli: &Cli, family: &SymmetricCmd) -> Outcome {
    let dir = out_dir(cli, Path::new("."))?;
    let (name, doc, csv) = match *family {
        SymmetricCmd::Couette { a_minus, a_plus, c1 } => {
            let (c, c2) = couette_constants(a_minus, a_plus, c1);
            let p = couette_profile(c, c1, c2);
            let residual = symmetric_stream_residual(Family::Couette, &p, &couette_viscosity(), None, c)?;
            let ((_, _), (dl, dr)) = p.limits(1);
            let doc = json!({
                "family": "couette",
                "a_minus": a_minus, "a_plus": a_plus, "C1": c1,
                "C": c, "C2": c2,
                "flux_below": dl, "flux_above": 2.0 * dr,
                "residual": residual,
            });
            ("couette", doc, write_profile(&dir, "couette", &p)?)
        }
        SymmetricCmd::Concentric { g_minus, g_plus, c1 } => {
            let (c, c2) = concentric_constants(g_minus, g_plus, c1);
            let p = concentric_profile(c, c1, c2);
            let mu = concentric_viscosity();
            let residual = symmetric_stream_residual(Family::Concentric, &p, &mu, None, c)?;
            let doc = json!({
                "family": "concentric",
                "g_minus": g_minus, "g_plus": g_plus, "C1": c1,
                "C": c, "C2": c2,
                "flux_inner": concentric_flux(&p, &mu, 0.75),
                "flux_outer": concentric_flux(&p, &mu, 1.5),
                "max_shear": max_shear(&p),
                "residual": residual,
            });
            ("concentric", doc, write_profile(&dir, "concentric", &p)?)
        }
        SymmetricCmd::Radial { n_theta } => {
            let ex = radial_example();
            let (a, b) = ex.mu.domain();
            let sol = radial_bvp(&ex.rho, &ex.mu, 0.0, ex.h.value(a), ex.h.value(b), n_theta)?;
            let err = (0..=n_theta)
                .map(|k| a + (b - a) * k as f64 / n_theta as f64)
                .map(|t| (sol.value(t) - ex.h.value(t)).abs())
                .fold(0.0, f64::max);
            let residual = symmetric_stream_residual(Family::Radial, &ex.h, &ex.mu, Some(&ex.rho), 0.0)?;
            let triple: Vec<_> = [a, 0.5 * (a + b), b]
                .iter()
                .map(|&t| json!({"theta": t, "h": ex.h.value(t), "rho": ex.rho.value(t), "mu": ex.mu.value(t)}))
                .collect();
            let doc = json!({
                "family": "radial",
                "C": 0.0,
                "h_left": ex.h.value(a), "h_right": ex.h.value(b),
                "samples": triple,
                "n_theta": n_theta,
                "bvp_max_error": err,
                "residual": residual,
            });
            write_profile(&dir, "radial_exact", &ex.h)?;
            ("radial", doc, write_profile(&dir, "radial", &sol)?)
        }
    };
    let report = dir.join(format!("{name}_report.json"));
    write_json(&report, &doc)?;
    say(cli, serde_json::to_string_pretty(&doc).unwrap_or_default());
    say(cli, format!("wrote {} and {}", csv.display(), report.display()));
    Ok(())
}

fn cmd_mms(cli: &Cli, levels: usize, base: usize, constant: bool) -> Outcome {
    let case = ManufacturedCase { variable_coefficients: !constant, ..Default::default() };
    let table = convergence_study(&case, base, levels)?;
    say(cli, format!("{:>6} {:>12} {:>14} {:>14} {:>8}", "n", "h", "L2 error", "max error", "order"));
    for l in &table {
        let order = l.order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".into());
        say(cli, format!("{:>6} {:>12.4e} {:>14.6e} {:>14.6e} {:>8}", l.n, l.h, l.l2_error, l.max_error, order));
    }
    let dir = out_dir(cli, Path::new("."))?;
    write_json(&dir.join("mms.json"), &json!({ "case": case, "levels": table }))?;
    if table.iter().all(|l| l.converged) {
        Ok(())
    } else {
        Err(Failure::NotConverged("a refinement level did not converge".into()))
    }
}

fn cmd_verify(cli: &Cli, only: &[usize]) -> Outcome {
    let dir = out_dir(cli, Path::new("."))?;
    let outcomes = if only.is_empty() {
        run_all()
    } else {
        let mut v = Vec::new();
        for &id in only {
            let known: Vec<usize> = CRITERIA.iter().map(|c| c.0).collect();
            v.push(run_criterion(id).ok_or_else(|| Failure::Usage(format!("unknown criterion {id}, known {known:?}")))?);
        }
        v
    };
    for o in &outcomes {
        say(cli, o.line());
    }
    write_json(&dir.join("verify_report.json"), &outcomes)?;
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!("failed criteria {failed:?}")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Solve { config } => cmd_solve(&cli, config),
        Command::Symmetric { family } => cmd_symmetric(&cli, family),
        Command::Mms { levels, base, constant } => cmd_mms(&cli, *levels, *base, *constant),
        Command::Verify { only } => cmd_verify(&cli, only),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::NotConverged(m)) => {
            eprintln!("not converged: {m}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(Failure::Verify(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(EXIT_VERIFY_FAILED)
        }
    }
}
