use anyhow::{bail, Context, Result};
use serde::Serialize;

use stokes_darcy_nn::fem::{BoundarySetup, ProblemParams};
use stokes_darcy_nn::krylov::{cg, pcg, richardson, SolveReport, SolverOptions};
use stokes_darcy_nn::manufactured::{
    convergence_study, error_norms, CaseConfig, CaseLabel, ConvergenceStudy, ErrorNorms, INTERFACE_LENGTH,
};
use stokes_darcy_nn::report::{sci3, table1 as compute_table1, Table1Config, Table1Record, Table1Row, ROBIN_ROBIN};
use stokes_darcy_nn::weights::{
    asymptotic_weights, k_star, max_abs_rho, rho_scan as sample_rho, rho_zeros, sampled_max_abs_rho, weight_grid_scan,
    FrequencyBand, GridPoint, KmaxConvention, WeightPair,
};
use stokes_darcy_nn::Execution;

use crate::output::{out_dir, write_csv, write_json, Envelope};
use crate::{ConvergenceArgs, MethodArg, RunArgs, ScanArgs, Table1Args, WeightChoice, WeightsArg};

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        bail!("tolerance must lie in (0, 1), got {tol}");
    }
    Ok(())
}

fn case_config(label: CaseLabel, level: u32, conv: KmaxConvention) -> Result<CaseConfig> {
    let mut c = CaseConfig::new(label, level)?;
    c.kmax_convention = conv;
    Ok(c)
}

fn resolve_weights(choice: &WeightChoice, case: &CaseConfig) -> Result<(WeightsArg, WeightPair)> {
    let source = if choice.alpha_f.is_some() || choice.alpha_p.is_some() { WeightsArg::Manual } else { choice.weights };
    let w = match source {
        WeightsArg::Optimal => case.optimal_weights(),
        WeightsArg::Asymptotic => {
            let a = asymptotic_weights(INTERFACE_LENGTH, case.kmax_convention.spacing(case.h()), case.analysis());
            WeightPair::new(a.alpha_f, a.alpha_p).context("asymptotic weights are not admissible here")?
        }
        WeightsArg::Manual => {
            let (Some(f), Some(p)) = (choice.alpha_f, choice.alpha_p) else {
                bail!("manual weights need both --alpha-f and --alpha-p");
            };
            if !(f > 0.0 && p > 0.0) {
                bail!("manual weights must be positive, got ({f}, {p})");
            }
            WeightPair::new(f, p)?
        }
    };
    Ok((source, w))
}

#[derive(Serialize)]
struct Table1Settings {
    tolerance: f64,
    max_iter: usize,
    initial_guess: &'static str,
    kmax_convention: KmaxConvention,
    alpha_bj: f64,
    boundary: BoundarySetup,
    pcg_slack: usize,
    cg_relative: f64,
    levels: Vec<u32>,
    robin_robin: &'static str,
}

pub fn table1(args: &Table1Args, exec: Execution) -> Result<bool> {
    check_tol(args.tol)?;
    let mut levels = [false; 4];
    for &l in &args.levels {
        if !(1..=4).contains(&l) {
            bail!("table levels run from 1 to 4, got {l}");
        }
        levels[l as usize - 1] = true;
    }
    let config = Table1Config {
        solver: SolverOptions::with_tol(args.tol),
        kmax_convention: args.shared.kmax_convention,
        levels,
        ..Table1Config::default()
    };
    let rows = compute_table1(&config, exec)?;
    print_table1(&rows);

    if let Some(dir) = out_dir(&args.shared.out)? {
        write_csv(&dir.join("table1.csv"), rows.iter().map(Table1Record::from))?;
        let settings = Table1Settings {
            tolerance: config.solver.tol,
            max_iter: config.solver.max_iter,
            initial_guess: "zero",
            kmax_convention: config.kmax_convention,
            alpha_bj: 1.0,
            boundary: BoundarySetup::default(),
            pcg_slack: config.tolerances.pcg_slack,
            cg_relative: config.tolerances.cg_relative,
            levels: args.levels.clone(),
            robin_robin: ROBIN_ROBIN,
        };
        write_json(&dir.join("table1.json"), &Envelope::new("table1", settings, &rows))?;
    }
    Ok(rows.iter().all(Table1Row::passed))
}

fn count(n: Option<usize>) -> String {
    n.map_or_else(|| "-".into(), |v| v.to_string())
}

fn print_table1(rows: &[Table1Row]) {
    println!(
        "{:<5}{:<6}{:>10} {:>10}{:>10} {:>10}{:>5} {:>4}{:>5} {:>4}  {:<14}status",
        "case", "mesh", "alpha_f", "(ref)", "alpha_p", "(ref)", "PCG", "(ref)", "CG", "(ref)", "RR"
    );
    for r in rows {
        let status = match (&r.error, r.passed()) {
            (Some(e), _) => format!("error: {e}"),
            (None, true) => "pass".into(),
            (None, false) => {
                let c = r.checks;
                let failed: Vec<&str> = [(c.alpha_f, "alpha_f"), (c.alpha_p, "alpha_p"), (c.pcg, "pcg"), (c.cg, "cg")]
                    .iter()
                    .filter(|(ok, _)| !ok)
                    .map(|(_, n)| *n)
                    .collect();
                format!("FAIL ({})", failed.join(", "))
            }
        };
        println!(
            "{:<5}{:<6}{:>10} {:>10}{:>10} {:>10}{:>5} {:>4}{:>5} {:>4}  {:<14}{}",
            r.case.letter(),
            format!("h{}", r.level),
            sci3(r.weights.alpha_f),
            sci3(r.reference.alpha_f),
            sci3(r.weights.alpha_p),
            sci3(r.reference.alpha_p),
            count(r.pcg_iterations()),
            r.reference.pcg,
            count(r.cg_iterations()),
            r.reference.cg,
            ROBIN_ROBIN,
            status
        );
    }
}

#[derive(Serialize)]
struct RunConfig {
    case: CaseConfig,
    params: ProblemParams,
    method: MethodArg,
    weights_source: Option<WeightsArg>,
    tolerance: f64,
    max_iter: usize,
    initial_guess: &'static str,
    execution: Execution,
}

#[derive(Serialize)]
struct RunResult {
    interface_unknowns: usize,
    weights: Option<WeightPair>,
    iterations: usize,
    converged: bool,
    solve: Option<SolveReport>,
    errors: ErrorNorms,
}

#[derive(Serialize)]
struct VelocityRecord {
    x: f64,
    y: f64,
    u1: f64,
    u2: f64,
}

pub fn run(args: &RunArgs, exec: Execution) -> Result<bool> {
    check_tol(args.tol)?;
    if args.fields && args.shared.out.is_none() {
        bail!("--fields needs --out");
    }
    let case = case_config(args.case, args.level, args.shared.kmax_convention)?;
    let needs_weights = matches!(args.method, MethodArg::Pcg | MethodArg::Richardson | MethodArg::Nn);
    let resolved = if needs_weights { Some(resolve_weights(&args.weights, &case)?) } else { None };
    let weights = resolved.map(|r| r.1);
    let opts = SolverOptions { tol: args.tol, max_iter: args.max_iter, ..SolverOptions::default() };

    let disc = case.discretization()?;
    let exact = case.exact();
    let ip = case.interface_problem(exec)?;
    let (solution, report) = if args.method == MethodArg::Monolithic {
        (ip.monolithic_solve()?, None)
    } else {
        let b = ip.reduced_rhs()?;
        let sigma = ip.sigma_operator();
        let mut sol = match (args.method, weights) {
            (MethodArg::Cg, _) => cg(&sigma, &b, &opts)?,
            (MethodArg::Pcg, Some(w)) => pcg(&sigma, &ip.preconditioner(w), &b, &opts)?,
            (MethodArg::Richardson, Some(w)) => richardson(&sigma, &ip.preconditioner(w), &b, &opts)?,
            (MethodArg::Nn, Some(w)) => ip.nn_iterate(w, &opts)?,
            _ => unreachable!("weights resolved for every preconditioned method"),
        };
        sol.report.weights = weights;
        sol.report.context = Some(format!("case {} level {}", case.label, case.level));
        (ip.recover_full_solution(&sol.x)?, Some(sol.report))
    };

    let errors = error_norms(&disc, ip.system(), &solution, &exact);
    let result = RunResult {
        interface_unknowns: ip.dim(),
        weights,
        iterations: report.as_ref().map_or(0, |r| r.iterations),
        converged: report.as_ref().is_none_or(|r| r.converged),
        solve: report,
        errors,
    };
    let config = RunConfig {
        case,
        params: case.params(),
        method: args.method,
        weights_source: resolved.map(|r| r.0),
        tolerance: args.tol,
        max_iter: args.max_iter,
        initial_guess: "zero",
        execution: exec,
    };
    let env = Envelope::new("run", config, &result);
    println!("{}", serde_json::to_string_pretty(&env)?);

    if let Some(dir) = out_dir(&args.shared.out)? {
        write_json(&dir.join("run.json"), &env)?;
        if args.fields {
            let nodal = solution.nodal(&disc, ip.system());
            let vel = nodal.velocity_x.iter().zip(&nodal.velocity_y);
            write_csv(&dir.join("velocity.csv"), vel.map(|(a, b)| VelocityRecord { x: a.x, y: a.y, u1: a.value, u2: b.value }))?;
            write_csv(&dir.join("fluid_pressure.csv"), &nodal.fluid_pressure)?;
            write_csv(&dir.join("porous_pressure.csv"), &nodal.porous_pressure)?;
        }
    }
    Ok(result.converged)
}

#[derive(Serialize)]
struct ScanConfig {
    case: CaseConfig,
    weights_source: WeightsArg,
    samples: usize,
    grid: usize,
}

#[derive(Serialize)]
struct ScanSummary {
    weights: WeightPair,
    band: FrequencyBand,
    k_star: Option<f64>,
    zeros: Option<(f64, f64)>,
    max_abs_rho: f64,
    sampled_max_abs_rho: f64,
    grid_best: Option<GridPoint>,
}

#[derive(Serialize)]
struct RhoRecord {
    k: f64,
    rho: f64,
    abs_rho: f64,
}

const GRID_RANGE: (f64, f64) = (-16.0, 0.5);

pub fn rho_scan(args: &ScanArgs, exec: Execution) -> Result<()> {
    if args.samples < 2 {
        bail!("need at least two samples");
    }
    let case = case_config(args.case, args.level, args.shared.kmax_convention)?;
    let (source, w) = resolve_weights(&args.weights, &case)?;
    let (a, band) = (case.analysis(), case.band());
    let scan = sample_rho(w, a, band, args.samples);
    let grid = (args.grid > 0).then(|| weight_grid_scan(a, band, GRID_RANGE, GRID_RANGE, args.grid, exec));
    let grid_best =
        grid.as_ref().and_then(|g| g.iter().copied().min_by(|x, y| x.max_abs_rho.total_cmp(&y.max_abs_rho)));
    let ks: Vec<f64> = scan.iter().map(|s| s.0).collect();
    let summary = ScanSummary {
        weights: w,
        band,
        k_star: k_star(w, a).ok(),
        zeros: rho_zeros(w, a).ok().flatten(),
        max_abs_rho: max_abs_rho(w, a, band),
        sampled_max_abs_rho: sampled_max_abs_rho(w, a, &ks),
        grid_best,
    };
    let config = ScanConfig { case, weights_source: source, samples: args.samples, grid: args.grid };
    let env = Envelope::new("rho-scan", config, &summary);
    println!("{}", serde_json::to_string_pretty(&env)?);

    if let Some(dir) = out_dir(&args.shared.out)? {
        write_json(&dir.join("rho_scan.json"), &env)?;
        write_csv(&dir.join("rho_scan.csv"), scan.iter().map(|&(k, rho)| RhoRecord { k, rho, abs_rho: rho.abs() }))?;
        if let Some(g) = &grid {
            write_csv(&dir.join("weight_grid.csv"), g)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceRecord {
    case: char,
    level: u32,
    h: f64,
    velocity_l2: f64,
    velocity_h1: f64,
    fluid_pressure_l2: f64,
    porous_pressure_l2: f64,
    porous_pressure_h1: f64,
}

#[derive(Serialize)]
struct StudyResult<'a> {
    study: &'a ConvergenceStudy,
    porous_decay_is_monotone: bool,
}

pub fn convergence(args: &ConvergenceArgs, exec: Execution) -> Result<()> {
    let cases = if args.case.is_empty() { CaseLabel::ALL.to_vec() } else { args.case.clone() };
    let studies =
        cases.iter().map(|&c| convergence_study(c, &args.levels, exec)).collect::<stokes_darcy_nn::Result<Vec<_>>>()?;
    for s in &studies {
        println!("case ({})", s.case);
        println!("{:<6}{:>8}{:>12}{:>12}{:>12}{:>12}{:>12}", "mesh", "h", "|u|_0", "|u|_1", "|p_f|_0", "|p_p|_0", "|p_p|_1");
        for r in &s.rows {
            let e = r.errors;
            println!(
                "{:<6}{:>8}{:>12.3e}{:>12.3e}{:>12.3e}{:>12.3e}{:>12.3e}",
                format!("h{}", r.level),
                r.h,
                e.velocity_l2,
                e.velocity_h1,
                e.fluid_pressure_l2,
                e.porous_pressure_l2,
                e.porous_pressure_h1
            );
        }
        println!(
            "order {:>20.2}{:>12.2}  (porous pressure L2, H1)\n",
            s.orders.porous_pressure_l2, s.orders.porous_pressure_h1
        );
    }

    if let Some(dir) = out_dir(&args.shared.out)? {
        let records = studies.iter().flat_map(|s| {
            s.rows.iter().map(|r| ConvergenceRecord {
                case: s.case.letter(),
                level: r.level,
                h: r.h,
                velocity_l2: r.errors.velocity_l2,
                velocity_h1: r.errors.velocity_h1,
                fluid_pressure_l2: r.errors.fluid_pressure_l2,
                porous_pressure_l2: r.errors.porous_pressure_l2,
                porous_pressure_h1: r.errors.porous_pressure_h1,
            })
        });
        write_csv(&dir.join("convergence.csv"), records)?;
        let results: Vec<StudyResult> =
            studies.iter().map(|s| StudyResult { study: s, porous_decay_is_monotone: s.porous_decay_is_monotone() }).collect();
        write_json(&dir.join("convergence.json"), &Envelope::new("convergence", &args.levels, &results))?;
    }
    Ok(())
}
