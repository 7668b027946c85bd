//! Command-line front end. Four subcommands share one config format:
//!
//! * `run`: integrate, write the diagnostics CSV (and optionally an SVG of
//!   the entropy decay), report the fitted rate and invariant summary.
//! * `steady`: solve and print the constant steady state for the config's
//!   discrete conserved quantity.
//! * `check`: seeded randomized verification of the gap identity, the
//!   Jacobian against central differences, and the Poincare/Jensen
//!   inequalities; exits nonzero when a gate fails.
//! * `oracle`: first-order convergence study of the implicit stepper
//!   against a high-order reference on the space-free reduction.
//!
//! Exit codes: 0 success, 1 configuration or domain errors, 2 solver
//! failures (including aborted runs), 3 failed checks or, under `--strict`,
//! violated run invariants.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Resolved, RunConfig};
use crate::diagnostics::{self, fit_decay_rate};
use crate::error::{Error, Result};
use crate::inequality;
use crate::mesh::{Mesh, State};
use crate::output;
use crate::scheme::{jacobian, residual};
use crate::solver::{self, RunOutcome};
use crate::tolerances;

#[derive(Parser)]
#[command(
    name = "fieldroad",
    version,
    about = "Conservative finite-volume solver for nonlinear field-road diffusion systems"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration and write diagnostics
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Exit nonzero when conservation, monotonicity, or nonnegativity
        /// fail along the run
        #[arg(long)]
        strict: bool,
        /// Also render the entropy decay to this SVG file
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Print the constant steady state of a configuration
    Steady {
        #[arg(long)]
        config: PathBuf,
    },
    /// Randomized identity, Jacobian, and inequality verification
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convergence study of the implicit stepper on the space-free reduction
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Io(_) => 1,
        Error::Linear(_) | Error::Newton(_) => 2,
        Error::Check(_) => 3,
    }
}

/// Parses arguments, dispatches, and returns the process exit code.
pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, strict, svg } => cmd_run(&config, strict, svg.as_deref()),
        Command::Steady { config } => cmd_steady(&config),
        Command::Check { config } => cmd_check(&config),
        Command::Oracle { config } => cmd_oracle(&config),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn load(path: &Path) -> Result<Resolved> {
    RunConfig::load(path)?.resolve()
}

fn cmd_run(config: &Path, strict: bool, svg: Option<&Path>) -> Result<i32> {
    let r = load(config)?;
    println!(
        "run: alpha = {}, beta = {}, mesh {}x{}, dt = {}, tEnd = {}",
        r.params.alpha, r.params.beta, r.mesh.nx, r.mesh.ny, r.options.dt, r.options.t_end
    );
    let out = solver::run(&r.mesh, &r.params, &r.initial, &r.options)?;
    output::write_csv(Path::new(&r.csv_path), &out.records)?;
    println!("csv written: {}", r.csv_path);

    println!("eq: vInf = {}, uInf = {}", out.eq.v_inf, out.eq.u_inf);
    let first = out.records.first().expect("at least the initial record");
    let last = out.records.last().expect("at least the initial record");
    println!("records = {}", out.records.len());
    println!("H: {} -> {}", first.h, last.h);
    println!("final deviation: linf_v = {}, linf_u = {}", last.linf_v, last.linf_u);
    println!("newton retries = {}", out.retries);

    let fit = fit_decay_rate(&out.records, r.fit_window);
    match &fit {
        Ok(f) => println!(
            "decay fit: lambda = {}, r2 = {}, points = {}, window t = [{}, {}]",
            f.lambda, f.r_squared, f.n_points, f.t_first, f.t_last
        ),
        Err(e) => println!("decay fit: not available ({e})"),
    }
    if let Some(svg_path) = svg {
        output::render_svg(svg_path, &out.records, fit.as_ref().ok())?;
        println!("svg written: {}", svg_path.display());
    }

    let report = diagnostics::check_invariants(&out.records, &r.params, out.min_entry);
    println!(
        "invariants: conserved drift = {} ({}), entropy uptick = {} ({}), min entry = {} ({})",
        report.conserved_drift_rel,
        if report.conserved_ok { "ok" } else { "VIOLATED" },
        report.max_uptick_rel,
        if report.monotone_ok { "ok" } else { "VIOLATED" },
        report.min_entry,
        if report.nonneg_ok { "ok" } else { "VIOLATED" },
    );

    if let RunOutcome::Aborted { t, reason } = &out.outcome {
        eprintln!("run aborted at t = {t}: {reason}");
        return Ok(2);
    }
    println!("outcome = completed");
    if strict && !report.all_ok() {
        eprintln!("strict: invariant violations detected");
        return Ok(3);
    }
    Ok(0)
}

fn discrete_conserved(r: &Resolved, state: &State) -> f64 {
    if r.params.alpha == r.params.beta {
        r.mesh.mass(state)
    } else {
        r.mesh.weighted_mass(state, r.params.alpha, r.params.beta)
    }
}

fn cmd_steady(config: &Path) -> Result<i32> {
    let r = load(config)?;
    let state = r.mesh.project_initial(&r.initial);
    let conserved = discrete_conserved(&r, &state);
    let kind = if r.params.alpha == r.params.beta { "mass" } else { "weighted mass" };
    let eq = diagnostics::steady_state(&r.params, &r.geometry, conserved)?;
    println!("conserved {kind} = {conserved}");
    println!("vInf = {}", eq.v_inf);
    println!("uInf = {}", eq.u_inf);
    let balance = r.params.nu0 * eq.v_inf.powf(r.params.alpha)
        - r.params.mu0 * eq.u_inf.powf(r.params.beta);
    println!(
        "rate balance residual = {}",
        balance.abs() / (r.params.nu0 * eq.v_inf.powf(r.params.alpha))
    );
    let held = if r.params.alpha == r.params.beta {
        r.geometry.area_field() * eq.v_inf + r.geometry.length_road() * eq.u_inf
    } else {
        r.geometry.area_field() / r.params.alpha * eq.v_inf
            + r.geometry.length_road() / r.params.beta * eq.u_inf
    };
    println!("budget residual = {}", (held - conserved).abs() / conserved);
    Ok(0)
}

/// Central-difference verification of the analytic Jacobian at one state:
/// max absolute deviation over all matrix entries, relative to the largest
/// entry magnitude.
fn jacobian_fd_deviation(state: &State, dt: f64, mesh: &Mesh, params: &crate::model::Params) -> f64 {
    let n = mesh.n_unknowns();
    let jac = jacobian(state, dt, mesh, params);
    let eps = 1e-6
        * state
            .v
            .iter()
            .chain(state.u.iter())
            .fold(0.0_f64, |m, &x| m.max(x.abs()))
            .max(1.0);
    let mut max_entry = 0.0_f64;
    for &v in &jac.values {
        max_entry = max_entry.max(v.abs());
    }
    let perturb = |base: &State, c: usize, delta: f64| -> State {
        let mut s = base.clone();
        if c < mesh.n_field() {
            s.v[c] += delta;
        } else {
            s.u[c - mesh.n_field()] += delta;
        }
        s
    };
    let mut worst = 0.0_f64;
    for c in 0..n {
        let rp = residual(&perturb(state, c, eps), state, dt, mesh, params);
        let rm = residual(&perturb(state, c, -eps), state, dt, mesh, params);
        for row in 0..n {
            let fd = (rp[row] - rm[row]) / (2.0 * eps);
            let analytic = jac.entry(row, c);
            worst = worst.max((analytic - fd).abs());
        }
    }
    worst / max_entry
}

fn cmd_check(config: &Path) -> Result<i32> {
    let r = load(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let state0 = r.mesh.project_initial(&r.initial);
    let eq0 = diagnostics::steady_state(&r.params, &r.geometry, discrete_conserved(&r, &state0))?;

    let equal_exponents = r.params.alpha == r.params.beta;
    let mut max_gap_err = 0.0_f64;
    let mut max_ratio = 0.0_f64;
    let mut flat_states = 0_usize;
    let mut poincare_violations = 0_usize;
    let mut jensen_failures = 0_usize;
    for _ in 0..500 {
        let mut s = State::zeros(&r.mesh);
        for x in s.v.iter_mut() {
            *x = rng.gen_range(0.0..4.0) * eq0.v_inf;
        }
        for x in s.u.iter_mut() {
            *x = rng.gen_range(0.0..4.0) * eq0.u_inf;
        }
        if equal_exponents {
            // Equilibrium from the state's own mass removes the first-order
            // mass term; the identity then holds to reporting precision.
            let m = r.mesh.mass(&s);
            if m > 0.0 {
                let eq = diagnostics::steady_state(&r.params, &r.geometry, m)?;
                let rho = inequality::RhoWeights::build(&eq, &r.mesh);
                let gap = inequality::beckner_gap(&s, &eq, &r.mesh, &r.params);
                let h = diagnostics::entropy(&s, &eq, &r.mesh, &r.params)?;
                let rel = (gap - r.params.alpha * h / rho.m0_ref).abs() / gap.max(1e-30);
                max_gap_err = max_gap_err.max(rel);
            }
        }
        let pw = inequality::pw_ratio(&s, &eq0, &r.mesh, &r.params);
        match pw.ratio {
            Some(c) => {
                if !c.is_finite() {
                    poincare_violations += 1;
                } else {
                    max_ratio = max_ratio.max(c);
                }
            }
            None => {
                flat_states += 1;
                if pw.lhs > 1e-20 {
                    poincare_violations += 1;
                }
            }
        }
        if !inequality::jensen(&s, &eq0, &r.mesh, &r.params).holds() {
            jensen_failures += 1;
        }
    }

    // Jacobian spot check on a small fixed mesh; cost stays bounded no
    // matter how fine the configured run mesh is.
    let fd_mesh = Mesh::build(r.geometry, 8, 4)?;
    let mut max_fd_err = 0.0_f64;
    for _ in 0..20 {
        let mut s = State::zeros(&fd_mesh);
        for x in s.v.iter_mut().chain(s.u.iter_mut()) {
            *x = rng.gen_range(0.1..5.0);
        }
        max_fd_err = max_fd_err.max(jacobian_fd_deviation(&s, 0.1, &fd_mesh, &r.params));
    }

    if equal_exponents {
        println!("gap identity max rel error = {max_gap_err} (500 states)");
    } else {
        println!("gap identity check skipped (alpha != beta)");
    }
    println!("jacobian fd max rel error = {max_fd_err} (20 states, 8x4 mesh)");
    println!("poincare ratio C = {max_ratio} ({flat_states} flat states)");
    println!("jensen failures = {jensen_failures} / 500");

    let mut failures = Vec::new();
    if equal_exponents && max_gap_err > tolerances::GAP_IDENTITY_REL {
        failures.push(format!("gap identity error {max_gap_err:e}"));
    }
    if max_fd_err > tolerances::JACOBIAN_FD_REL {
        failures.push(format!("jacobian fd error {max_fd_err:e}"));
    }
    if poincare_violations > 0 {
        failures.push(format!("{poincare_violations} poincare violations"));
    }
    if jensen_failures > 0 {
        failures.push(format!("{jensen_failures} jensen failures"));
    }
    if failures.is_empty() {
        println!("check: all gates passed");
        Ok(0)
    } else {
        Err(Error::Check(failures.join("; ")))
    }
}

fn cmd_oracle(config: &Path) -> Result<i32> {
    let r = load(config)?;
    // The space-free reduction of the configured problem: cell averages of
    // the initial data over one field cell and one road cell.
    let coarse = Mesh::build(r.geometry, 1, 1)?;
    let reduced = coarse.project_initial(&r.initial);
    let (v0, u0) = (reduced.v[0], reduced.u[0]);
    let t_end = r.options.t_end.min(1.0);
    let mut dt0 = r.options.dt;
    if dt0 > t_end / 2.0 {
        dt0 = t_end / 2.0;
        println!("note: coarsest step clamped to {dt0} so at least two steps fit");
    }
    let dt_fine = 1e-4 * t_end;
    if dt0 / 4.0 <= 10.0 * dt_fine {
        println!(
            "warning: finest tested step {} is within 10x of the reference step {dt_fine}; \
             ratios may be polluted",
            dt0 / 4.0
        );
    }
    let fine = solver::reference_ode_solve(&r.params, &r.geometry, v0, u0, dt_fine, t_end);
    let reference_at = |t: f64| -> (f64, f64) {
        let k = ((t / dt_fine).round() as usize).min(fine.len() - 1);
        (fine[k].1, fine[k].2)
    };
    println!("reduction: v0 = {v0}, u0 = {u0}, tEnd = {t_end}");

    let mut errors = Vec::new();
    for level in 0..3 {
        let dt = dt0 / 2.0_f64.powi(level);
        let path = solver::be_scalar_trajectory(&r.params, &r.geometry, v0, u0, dt, t_end)?;
        let &(t, v, u) = path.last().expect("at least the initial point");
        let (vr, ur) = reference_at(t);
        let err = (v - vr).abs() + (u - ur).abs();
        println!("dt = {dt}: final error = {err}");
        errors.push(err);
    }
    let mut all_in_band = true;
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        let in_band = (1.5..=2.5).contains(&ratio);
        all_in_band &= in_band;
        println!(
            "halving ratio = {ratio} ({})",
            if in_band { "ok" } else { "OUTSIDE [1.5, 2.5]" }
        );
    }
    if all_in_band {
        println!("oracle: first-order convergence confirmed");
        Ok(0)
    } else {
        Err(Error::Check(format!(
            "error ratios {errors:?} not consistent with first-order convergence"
        )))
    }
}
