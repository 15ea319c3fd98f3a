//! `utm`: command-line front end for the multipoint spectral solver.
//!
//! Exit codes: 0 success, 1 usage, 2 validation failure, 3 numerical failure.

mod csv;
mod io;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use io::{Loaded, ProblemFile};
use manifest::{sha256_hex, RunManifest};
use utm_core::model::{validate, ProblemSpec};
use utm_core::oracle::{fd_solve_with, FdOptions, OracleError};
use utm_core::reduce::{audit_text, reduce_nonlocal, NonlocalProblem, ReduceOptions};
use utm_core::representation::{
    check_grid, check_supported, evaluate_solution, plan_for_grid, ContourOptions, RepresentationError, SolutionField,
};
use utm_core::scalar::C64;
use utm_core::spectral::{delta, SpectralPoint};
use utm_core::wellposed::{admissibility_check, choose_r, gamma_pm, locate_zeros, AdmissibilityOptions, Rect, WellposedError};

const THREADS_VAR: &str = "UTM_THREADS";
/// Outer radius of the zero-free certificate when `--lmax` is not given.
const DEFAULT_CERTIFICATE_RADIUS: f64 = 64.0;

#[derive(Parser)]
#[command(name = "utm", version, about = "Spectral solver for multipoint and nonlocal evolution problems on (0,1)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Input {
    /// Problem description (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Where to write the run manifest; defaults to `<out>.manifest.json`, or stderr.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Grid {
    /// Space grid `a:b:n`.
    #[arg(long, default_value = "0:1:11")]
    xgrid: String,
    /// Time grid `a:b:n`.
    #[arg(long)]
    tgrid: String,
}

#[derive(Args, Clone)]
struct Representation {
    /// Time the unknown final-time transforms refer to; defaults to `T`.
    #[arg(long)]
    tau: Option<f64>,
    /// Contour radius, or `auto` for the smallest certified zero-free radius.
    #[arg(long = "R", default_value = "1")]
    r: String,
    /// Truncation radius of the contour rays; chosen from decay when absent.
    #[arg(long)]
    lmax: Option<f64>,
    /// Evaluate even when the equation is not dissipative (a = ±i, order 2).
    #[arg(long)]
    allow_nondissipative: bool,
}

#[derive(Args, Clone)]
struct FiniteDifference {
    /// Number of cells.
    #[arg(long = "N", default_value_t = 200)]
    cells: usize,
    /// Time step; defaults to `1e-4·T`.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a problem file and report every finding.
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// Turn nonlocal conditions into multipoint ones.
    Reduce {
        #[command(flatten)]
        input: Input,
        /// Reduced problem (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Audit text; printed when absent.
        #[arg(long)]
        audit: Option<PathBuf>,
        /// Differentiate sampled data numerically.
        #[arg(long)]
        numeric_derivative: bool,
    },
    /// Evaluate the contour representation on a grid.
    Solve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        rep: Representation,
        /// CSV output; printed when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference reference solution on a grid.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        fd: FiniteDifference,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Admissibility of the conditions and a zero-free contour radius.
    CheckWellposed {
        #[command(flatten)]
        input: Input,
        /// Time at which the boundary-data terms are checked (order 2).
        #[arg(long)]
        tau: Option<f64>,
        /// Outer radius of the zero-free check.
        #[arg(long)]
        lmax: Option<f64>,
    },
    /// Zeros of the determinant in a rectangle.
    Zeros {
        #[command(flatten)]
        input: Input,
        /// `re_min:re_max:im_min:im_max`
        #[arg(long)]
        region: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Representation against finite differences on the same grid.
    Compare {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        rep: Representation,
        #[command(flatten)]
        fd: FiniteDifference,
        /// Fail (exit 3) when the largest deviation exceeds this.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Reduce { .. } => "reduce",
            Command::Solve { .. } => "solve",
            Command::Oracle { .. } => "oracle",
            Command::CheckWellposed { .. } => "check-wellposed",
            Command::Zeros { .. } => "zeros",
            Command::Compare { .. } => "compare",
        }
    }

    fn input(&self) -> &Input {
        match self {
            Command::Validate { input }
            | Command::Reduce { input, .. }
            | Command::Solve { input, .. }
            | Command::Oracle { input, .. }
            | Command::CheckWellposed { input, .. }
            | Command::Zeros { input, .. }
            | Command::Compare { input, .. } => input,
        }
    }

    fn out(&self) -> Option<&Path> {
        match self {
            Command::Reduce { out, .. } => Some(out),
            Command::Solve { out, .. }
            | Command::Oracle { out, .. }
            | Command::Zeros { out, .. }
            | Command::Compare { out, .. } => out.as_deref(),
            _ => None,
        }
    }
}

struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 1, msg: msg.into() }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn numerical(msg: impl Into<String>) -> Failure {
    Failure { code: 3, msg: msg.into() }
}

fn from_representation(e: RepresentationError) -> Failure {
    match e {
        RepresentationError::NotDissipative(_) | RepresentationError::Unsupported(_) => invalid(e.to_string()),
        RepresentationError::BadGrid(_) => usage(e.to_string()),
        _ => numerical(e.to_string()),
    }
}

fn from_wellposed(e: WellposedError) -> Failure {
    match e {
        WellposedError::Unsupported(_) => invalid(e.to_string()),
        WellposedError::Representation(r) => from_representation(r),
        _ => numerical(e.to_string()),
    }
}

fn from_oracle(e: OracleError) -> Failure {
    match e {
        OracleError::Unsupported(_) => invalid(e.to_string()),
        OracleError::GridMismatch { .. } | OracleError::InsufficientLevels(_) | OracleError::BadArgument(_) => {
            usage(format!("{} (grid points must be finite-difference nodes and time levels)", e))
        }
        OracleError::Representation(r) => from_representation(r),
        _ => numerical(e.to_string()),
    }
}

fn threads() -> Result<usize, Failure> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(usage(format!("{} must be a positive integer, got {:?}", THREADS_VAR, v))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn parse_grid(spec: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let bad = || usage(format!("{} must look like a:b:n, got {:?}", what, spec));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
}

fn parse_region(spec: &str) -> Result<Rect, Failure> {
    let bad = || usage(format!("--region must look like re_min:re_max:im_min:im_max, got {:?}", spec));
    let v: Vec<f64> = spec.split(':').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    if v.len() != 4 || !(v[0] < v[1] && v[2] < v[3]) {
        return Err(bad());
    }
    Ok(Rect::new(v[0], v[1], v[2], v[3]))
}

fn read_problem(input: &Input, man: &mut RunManifest) -> Result<Loaded, Failure> {
    let bytes = std::fs::read(&input.problem).map_err(|e| usage(format!("cannot read {}: {}", input.problem.display(), e)))?;
    man.input_sha256 = Some(sha256_hex(&bytes));
    man.param("problem", input.problem.display().to_string());
    let text = String::from_utf8(bytes).map_err(|_| invalid("problem file is not UTF-8"))?;
    ProblemFile::parse(&text).map_err(invalid)?.load().map_err(invalid)
}

fn reduce(nl: &NonlocalProblem, numeric_derivative: bool, man: &mut RunManifest) -> Result<ProblemSpec, Failure> {
    let res = reduce_nonlocal(nl, ReduceOptions { numeric_derivative }).map_err(|e| invalid(e.to_string()))?;
    man.warnings.push("nonlocal conditions were reduced to multipoint form".into());
    Ok(res.problem)
}

/// The multipoint problem behind an input file, reducing nonlocal conditions.
fn multipoint(input: &Input, man: &mut RunManifest) -> Result<ProblemSpec, Failure> {
    match read_problem(input, man)? {
        Loaded::Multipoint(p) => Ok(p),
        Loaded::Nonlocal(nl) => reduce(&nl, false, man),
    }
}

fn require_valid(p: &ProblemSpec, man: &mut RunManifest) -> Result<(), Failure> {
    let rep = validate(p);
    for f in rep.findings.iter().filter(|f| f.approximate) {
        man.warnings.push(format!("{} at {}: approximate ({})", f.check, f.location, f.detail));
    }
    if rep.passed() {
        return Ok(());
    }
    let lines: Vec<String> = rep.failures().map(|f| format!("  {} at {}: {}", f.check, f.location, f.detail)).collect();
    Err(invalid(format!("validation failed:\n{}", lines.join("\n"))))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {}", path.display(), e))),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn solve_field(
    p: &ProblemSpec,
    xs: &[f64],
    ts: &[f64],
    rep: &Representation,
    threads: usize,
    man: &mut RunManifest,
) -> Result<SolutionField, Failure> {
    if let Some(w) = check_supported(&p.pde, rep.allow_nondissipative).map_err(from_representation)? {
        man.warnings.push(w);
    }
    require_valid(p, man)?;
    let tau = rep.tau.unwrap_or(p.horizon);
    check_grid(p, xs, ts, tau).map_err(from_representation)?;
    let mut template = ContourOptions::new(1.0, 0.0, 0.0);
    template.lambda_max = rep.lmax;
    template.allow_nondissipative = rep.allow_nondissipative;
    let plan = if rep.r.trim() == "auto" {
        // the probe plan fixes the outer radius the certificate has to cover
        let probe = plan_for_grid(p, ts, &template).map_err(from_representation)?;
        let choice = choose_r(p, 1.0, probe.lambda_max).map_err(from_wellposed)?;
        man.param("R_certificate", format!("{:?}", choice.certificate));
        if choice.r == template.r {
            probe
        } else {
            template.r = choice.r;
            plan_for_grid(p, ts, &template).map_err(from_representation)?
        }
    } else {
        template.r = rep
            .r
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|r| *r > 0.0)
            .ok_or_else(|| usage(format!("--R must be positive or auto, got {:?}", rep.r)))?;
        plan_for_grid(p, ts, &template).map_err(from_representation)?
    };
    man.param("tau", tau);
    man.param("R", plan.r);
    man.param("lambda_max", plan.lambda_max);
    man.param("quadrature_nodes", plan.node_count());

    // time slices are independent; each worker evaluates a contiguous block
    let block = ts.len().div_ceil(threads.max(1));
    let parts: Vec<Result<SolutionField, RepresentationError>> = std::thread::scope(|s| {
        let handles: Vec<_> = ts.chunks(block).map(|chunk| s.spawn(|| evaluate_solution(p, xs, chunk, tau, &plan))).collect();
        handles.into_iter().map(|h| h.join().expect("evaluation thread panicked")).collect()
    });
    let mut field: Option<SolutionField> = None;
    for part in parts {
        let part = part.map_err(from_representation)?;
        match field.as_mut() {
            None => field = Some(part),
            Some(f) => {
                f.ts.extend(part.ts);
                f.values.extend(part.values);
                f.trunc_est.extend(part.trunc_est);
            }
        }
    }
    let field = field.expect("at least one time");
    for w in &field.warnings {
        if !man.warnings.contains(w) {
            man.warnings.push(w.clone());
        }
    }
    if field.values.iter().flatten().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(numerical("the representation produced non-finite values"));
    }
    Ok(field)
}

fn oracle_values(
    p: &ProblemSpec,
    xs: &[f64],
    ts: &[f64],
    fd: &FiniteDifference,
    man: &mut RunManifest,
) -> Result<Vec<Vec<C64>>, Failure> {
    require_valid(p, man)?;
    let dt = fd.dt.unwrap_or(1e-4 * p.horizon);
    if !(dt > 0.0) || fd.cells < 2 {
        return Err(usage("--dt must be positive and --N at least 2"));
    }
    if let Some(t) = ts.iter().find(|t| !(**t >= 0.0 && **t <= p.horizon)) {
        return Err(usage(format!("t = {} outside [0, T]", t)));
    }
    let t_end = ts.iter().cloned().fold(0.0, f64::max);
    man.param("N", fd.cells);
    man.param("dt", dt);
    let sol = fd_solve_with(p, &FdOptions::new(fd.cells, dt, t_end)).map_err(from_oracle)?;
    man.param("scheme", sol.scheme.clone());
    man.param("constraint_residual", sol.constraint_residual);
    ts.iter()
        .map(|&t| xs.iter().map(|&x| sol.value_at(x, t).map_err(from_oracle)).collect())
        .collect()
}

fn grids(grid: &Grid, man: &mut RunManifest) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let xs = parse_grid(&grid.xgrid, "--xgrid")?;
    let ts = parse_grid(&grid.tgrid, "--tgrid")?;
    man.param("xgrid", grid.xgrid.clone());
    man.param("tgrid", grid.tgrid.clone());
    Ok((xs, ts))
}

fn field_csv(xs: &[f64], ts: &[f64], values: &[Vec<C64>], trunc: Option<&[Vec<f64>]>) -> String {
    let mut table = csv::Table::new(&["x", "t", "re_q", "im_q", "trunc_est"]);
    for (it, t) in ts.iter().enumerate() {
        for (ix, x) in xs.iter().enumerate() {
            let v = values[it][ix];
            // the finite-difference solution carries no truncation estimate
            let e = trunc.map_or(f64::NAN, |tr| tr[it][ix]);
            table.row(&[*x, *t, v.re, v.im, e]);
        }
    }
    table.into_string()
}

fn run(cmd: &Command, threads: usize, man: &mut RunManifest) -> Result<(), Failure> {
    match cmd {
        Command::Validate { input } => {
            let p = multipoint(input, man)?;
            let rep = validate(&p);
            for f in &rep.findings {
                println!(
                    "{} {} at {}: {}{}",
                    if f.passed { "PASS" } else { "FAIL" },
                    f.check,
                    f.location,
                    f.detail,
                    if f.approximate { " (approximate)" } else { "" }
                );
            }
            require_valid(&p, man)
        }
        Command::Reduce { input, out, audit, numeric_derivative } => {
            let nl = match read_problem(input, man)? {
                Loaded::Nonlocal(nl) => nl,
                Loaded::Multipoint(_) => return Err(invalid("the problem has no \"nonlocal\" block to reduce")),
            };
            man.param("numeric_derivative", *numeric_derivative);
            let res = reduce_nonlocal(&nl, ReduceOptions { numeric_derivative: *numeric_derivative })
                .map_err(|e| invalid(e.to_string()))?;
            let file = ProblemFile::from_problem(&res.problem).map_err(invalid)?;
            write_output(Some(out), &file.to_json())?;
            let text = audit_text(&nl, &res);
            match audit {
                Some(path) => write_output(Some(path), &text),
                None => write_output(None, &text),
            }
        }
        Command::Solve { input, grid, rep, out } => {
            let p = multipoint(input, man)?;
            let (xs, ts) = grids(grid, man)?;
            let f = solve_field(&p, &xs, &ts, rep, threads, man)?;
            man.param("max_trunc_est", f.max_trunc());
            write_output(out.as_deref(), &field_csv(&xs, &ts, &f.values, Some(&f.trunc_est)))
        }
        Command::Oracle { input, grid, fd, out } => {
            let p = multipoint(input, man)?;
            let (xs, ts) = grids(grid, man)?;
            let values = oracle_values(&p, &xs, &ts, fd, man)?;
            write_output(out.as_deref(), &field_csv(&xs, &ts, &values, None))
        }
        Command::CheckWellposed { input, tau, lmax } => {
            let p = multipoint(input, man)?;
            require_valid(&p, man)?;
            let rep = admissibility_check(&p, &AdmissibilityOptions::default()).map_err(from_wellposed)?;
            println!("admissible: {}", if rep.admissible { "yes" } else { "no" });
            for f in &rep.fits {
                println!("  ray {:.6} ({:?}): decay exponent {:.3} from {} samples", f.angle, f.half, f.exponent, f.used_samples);
            }
            if let Some(pred) = rep.predicted {
                println!("order-2 asymptotics predict admissible: {}", if pred { "yes" } else { "no" });
            }
            for note in &rep.notes {
                println!("note: {}", note);
            }
            if p.order() == 2 {
                let tau = tau.unwrap_or(p.horizon);
                let g = gamma_pm(&p, tau).map_err(from_wellposed)?;
                println!("boundary-data terms vanish at tau = {}: {}", tau, if g.vanishes() { "yes" } else { "no" });
            }
            let lmax = lmax.unwrap_or(DEFAULT_CERTIFICATE_RADIUS);
            man.param("lmax", lmax);
            match choose_r(&p, 1.0, lmax) {
                Ok(choice) => {
                    println!("zero-free contour radius: R = {} (checked up to {})", choice.r, lmax);
                    man.param("R", choice.r);
                }
                Err(e) => {
                    println!("zero-free contour radius: none ({})", e);
                    man.warnings.push(e.to_string());
                }
            }
            man.param("admissible", rep.admissible);
            if rep.admissible {
                Ok(())
            } else {
                Err(invalid("the conditions are not admissible: the final-time terms do not decay in the contour sectors"))
            }
        }
        Command::Zeros { input, region, out } => {
            let p = multipoint(input, man)?;
            let rect = parse_region(region)?;
            man.param("region", region.clone());
            let set = locate_zeros(&p, rect).map_err(from_wellposed)?;
            let n = p.order();
            let mut table = csv::Table::new(&["re", "im", "abs_delta", "region"]);
            for z in &set.zeros {
                let d: C64 = delta(&p, &SpectralPoint::new(n, z.lambda)).map_err(|e| numerical(e.to_string()))?;
                table.row_labelled(&[z.lambda.re, z.lambda.im, d.norm()], z.region);
                if z.multiplicity > 1 {
                    man.warnings.push(format!("zero near {} has multiplicity {}", z.lambda, z.multiplicity));
                }
            }
            man.param("count", set.count_check);
            man.param("zeros", set.zeros.len());
            if out.is_some() {
                println!("{} zeros (argument-principle count {})", set.zeros.len(), set.count_check);
            }
            write_output(out.as_deref(), &table.into_string())
        }
        Command::Compare { input, grid, rep, fd, tol, out } => {
            let p = multipoint(input, man)?;
            let (xs, ts) = grids(grid, man)?;
            let f = solve_field(&p, &xs, &ts, rep, threads, man)?;
            let reference = oracle_values(&p, &xs, &ts, fd, man)?;
            let mut table = csv::Table::new(&["x", "t", "re_solve", "im_solve", "re_oracle", "im_oracle", "abs_dev"]);
            let mut max_dev: f64 = 0.0;
            let mut sum = 0.0;
            for (it, t) in ts.iter().enumerate() {
                for (ix, x) in xs.iter().enumerate() {
                    let (a, b) = (f.values[it][ix], reference[it][ix]);
                    let d = (a - b).norm();
                    max_dev = max_dev.max(d);
                    sum += d;
                    table.row(&[*x, *t, a.re, a.im, b.re, b.im, d]);
                }
            }
            let mean = sum / (xs.len() * ts.len()) as f64;
            man.param("max_dev", max_dev);
            man.param("mean_dev", mean);
            println!("max deviation {}, mean deviation {} over {} points", csv::num(max_dev), csv::num(mean), xs.len() * ts.len());
            if let Some(path) = out {
                write_output(Some(path), &table.into_string())?;
            }
            match tol {
                Some(tol) if !(max_dev <= *tol) => Err(numerical(format!("max deviation {:e} exceeds {:e}", max_dev, tol))),
                _ => Ok(()),
            }
        }
    }
}

fn manifest_path(cmd: &Command) -> Option<PathBuf> {
    if let Some(p) = &cmd.input().manifest {
        return Some(p.clone());
    }
    cmd.out().map(|o| {
        let mut s = o.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let start = Instant::now();
    let (threads, result) = match threads() {
        Ok(n) => (n, None),
        Err(f) => (1, Some(f)),
    };
    let mut man = RunManifest::new(cli.command.name(), threads);
    let result = match result {
        Some(f) => Err(f),
        None => run(&cli.command, threads, &mut man),
    };
    let code = match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    };
    man.exit_code = code as i32;
    man.wall_time_s = start.elapsed().as_secs_f64();
    for w in &man.warnings {
        eprintln!("warning: {}", w);
    }
    match manifest_path(&cli.command) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, man.to_json()) {
                eprintln!("error: cannot write manifest {}: {}", path.display(), e);
            }
        }
        None => eprint!("{}", man.to_json()),
    }
    ExitCode::from(code)
}
