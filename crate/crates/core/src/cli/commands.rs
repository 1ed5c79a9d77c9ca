use clap::ValueEnum;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{
    Cli, Command, Failure, Method, RunManifest, SolveArgs, SolverArgs, Stop,
    DEFAULT_STEPS_PER_DELAY, EXIT_ANALYSIS, EXIT_BLOW_UP, EXIT_INVALID, EXIT_NON_CONVERGENCE,
};
use crate::fracquad::{caputo_residual, QuadError};
use crate::growth::{
    certify_growth, check_h2, counterexample_solution, exponential_bound_probe, GrowthCertificate,
    GrowthError, ProbeResult,
};
use crate::io::{read_trajectory, write_trajectory, ProblemConfig};
use crate::mlf::{ml_eval, ml_log_eval, MlfError};
use crate::model::{norm, validate_problem, DelayProblem, Lipschitz, Trajectory};
use crate::pece::{solve_pece, PeceConfig, PeceError};
use crate::picard::{solve_picard, PicardConfig, PicardError, SegmentReport, StopRule};

/// Inputs read, outputs written and flags used by one command.
struct Session<'a> {
    cli: &'a Cli,
    inputs: Vec<Vec<u8>>,
    params: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
}

impl<'a> Session<'a> {
    fn new(cli: &'a Cli) -> Self {
        Session {
            cli,
            inputs: Vec::new(),
            params: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }

    fn warn(&self, message: impl std::fmt::Display) {
        if !self.cli.quiet {
            eprintln!("warning: {message}");
        }
    }

    fn info(&self, message: impl std::fmt::Display) {
        if !self.cli.quiet {
            eprintln!("{message}");
        }
    }

    fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes = std::fs::read(path)
            .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
        self.inputs.push(bytes.clone());
        Ok(bytes)
    }

    fn config(&mut self) -> Result<(ProblemConfig, DelayProblem), Failure> {
        let path = self
            .cli
            .config
            .clone()
            .ok_or_else(|| Failure::invalid("--config is required"))?;
        self.param("config", path.display());
        let bytes = self.read_input(&path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Failure::invalid(format!("{}: not UTF-8", path.display())))?;
        let cfg = ProblemConfig::from_json(&text).map_err(Failure::invalid)?;
        let p = cfg.to_problem().map_err(Failure::invalid)?;
        validate_problem(&p).map_err(Failure::invalid)?;
        if matches!(p.lipschitz, Lipschitz::Estimate) {
            self.warn(
                "Lipschitz constant is estimated by sampling; contraction bounds are not rigorous",
            );
        }
        Ok((cfg, p))
    }

    fn trajectory(&mut self, path: &Path, delay: f64) -> Result<Trajectory, Failure> {
        self.param("traj", path.display());
        let bytes = self.read_input(path)?;
        read_trajectory(bytes.as_slice(), Some(delay))
            .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
    }

    /// Writes to `path`, or to standard output when there is none.
    fn emit(&mut self, path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
        match path {
            Some(path) => {
                std::fs::write(path, bytes)
                    .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
                self.outputs.push(path.to_path_buf());
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(bytes)
                    .and_then(|_| stdout.flush())
                    .map_err(|e| Failure::invalid(format!("standard output: {e}")))?;
            }
        }
        Ok(())
    }

    fn finish(self, command: &str) -> Result<(), Failure> {
        let Some(first) = self.outputs.first() else {
            return Ok(());
        };
        let inputs: Vec<&[u8]> = self.inputs.iter().map(Vec::as_slice).collect();
        let mut manifest = RunManifest::new(command, &inputs, self.params);
        manifest.outputs = self
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect();
        let path = RunManifest::path_for(first);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, json + "\n")
            .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
    }
}

pub(super) fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let mut s = Session::new(cli);
    let name = match &cli.command {
        Command::Solve(args) => {
            solve(&mut s, args)?;
            "solve"
        }
        Command::Residual { traj } => {
            residual(&mut s, traj)?;
            "residual"
        }
        Command::Certify {
            traj,
            beta,
            lambdas,
        } => {
            certify(&mut s, traj, *beta, lambdas)?;
            "certify"
        }
        Command::Counterexample {
            alpha,
            x0,
            horizon,
            steps_per_delay,
            lambdas,
        } => {
            let lambdas = lambdas
                .clone()
                .unwrap_or_else(|| (1..=50).map(f64::from).collect());
            counterexample(&mut s, *alpha, *x0, *horizon, *steps_per_delay, &lambdas)?;
            "counterexample"
        }
        Command::Mlf { alpha, z, log } => {
            mlf(&mut s, *alpha, *z, *log)?;
            "mlf"
        }
        Command::Convergence {
            solver,
            m_start,
            levels,
        } => {
            convergence(&mut s, solver, *m_start, *levels)?;
            "convergence"
        }
    };
    s.finish(name)
}

fn picard_failure(e: PicardError) -> Failure {
    let code = if e.is_blow_up() {
        EXIT_BLOW_UP
    } else {
        match e {
            PicardError::NonConvergence { .. } | PicardError::Beta { .. } | PicardError::Mlf(_) => {
                EXIT_NON_CONVERGENCE
            }
            _ => EXIT_INVALID,
        }
    };
    Failure::new(code, e)
}

fn pece_failure(e: PeceError) -> Failure {
    let code = if e.is_blow_up() {
        EXIT_BLOW_UP
    } else {
        EXIT_INVALID
    };
    Failure::new(code, e)
}

fn growth_failure(e: GrowthError) -> Failure {
    let code = match e {
        GrowthError::Rate(_) | GrowthError::EmptyProbe | GrowthError::Input(_) => EXIT_INVALID,
        _ => EXIT_ANALYSIS,
    };
    Failure::new(code, e)
}

enum Solved {
    Picard(Trajectory, Vec<SegmentReport>),
    Pece(Trajectory),
}

impl Solved {
    fn trajectory(&self) -> &Trajectory {
        match self {
            Solved::Picard(t, _) | Solved::Pece(t) => t,
        }
    }
}

fn run_solver(p: &DelayProblem, m: usize, args: &SolverArgs) -> Result<Solved, Failure> {
    match args.method {
        Method::Picard => {
            let stop = match args.stop {
                Stop::Weighted => StopRule::Weighted,
                Stop::WeightedAndSup => StopRule::WeightedAndSup,
            };
            let cfg = PicardConfig::new(args.tol, args.max_iter).with_stop(stop);
            let sol = solve_picard(p, m, &cfg).map_err(picard_failure)?;
            Ok(Solved::Picard(sol.trajectory, sol.reports))
        }
        Method::Pece => {
            let sol =
                solve_pece(p, m, &PeceConfig::with_sweeps(args.sweeps)).map_err(pece_failure)?;
            Ok(Solved::Pece(sol))
        }
    }
}

fn record_solver(s: &mut Session, args: &SolverArgs) {
    match args.method {
        Method::Picard => {
            s.param("method", "picard");
            s.param("tol", format!("{:e}", args.tol));
            s.param("max_iter", args.max_iter);
            s.param(
                "stop",
                args.stop
                    .to_possible_value()
                    .map_or_else(String::new, |v| v.get_name().to_string()),
            );
        }
        Method::Pece => {
            s.param("method", "pece");
            s.param("sweeps", args.sweeps);
        }
    }
}

fn solve(s: &mut Session, args: &SolveArgs) -> Result<(), Failure> {
    let (cfg, p) = s.config()?;
    let m = args
        .steps_per_delay
        .or(cfg.steps_per_delay)
        .unwrap_or(DEFAULT_STEPS_PER_DELAY);
    s.param("steps_per_delay", m);
    record_solver(s, &args.solver);
    if args.report.is_some() && args.solver.method == Method::Pece {
        return Err(Failure::invalid(
            "--report is only available with --method picard",
        ));
    }

    let solved = run_solver(&p, m, &args.solver)?;
    let mut csv = Vec::new();
    write_trajectory(solved.trajectory(), &mut csv).map_err(Failure::invalid)?;
    let out = s.cli.out.clone();
    s.emit(out.as_deref(), &csv)?;

    if let Solved::Picard(_, reports) = &solved {
        let iterations = reports.iter().map(|r| r.iterations).max().unwrap_or(0);
        s.info(format!(
            "picard: {} segments, at most {iterations} iterations per segment",
            reports.len()
        ));
        if let Some(path) = &args.report {
            s.param("report", path.display());
            let json = serde_json::to_string_pretty(reports).expect("reports serialize") + "\n";
            s.emit(Some(path), json.as_bytes())?;
        }
    }
    Ok(())
}

fn residual(s: &mut Session, traj: &Path) -> Result<(), Failure> {
    let (_, p) = s.config()?;
    let traj = s.trajectory(traj, p.delay)?;
    let r = caputo_residual(&p, &traj).map_err(|e| match e {
        QuadError::Mismatch(_) | QuadError::Dimension { .. } | QuadError::Param(_) => {
            Failure::invalid(e)
        }
        QuadError::Model(_) => Failure::new(EXIT_ANALYSIS, e),
    })?;
    let out = s.cli.out.clone();
    s.emit(out.as_deref(), format!("{r:.6e}\n").as_bytes())
}

#[derive(Serialize)]
struct CertifyOutput {
    #[serde(flatten)]
    certificate: GrowthCertificate,
    probe: Vec<ProbeResult>,
}

fn certify(s: &mut Session, traj: &Path, beta: f64, lambdas: &[f64]) -> Result<(), Failure> {
    let (_, p) = s.config()?;
    let traj = s.trajectory(traj, p.delay)?;
    s.param("beta", beta);
    s.param("lambdas", join(lambdas));
    if traj.dim() != p.dim {
        return Err(Failure::invalid(format!(
            "trajectory has {} components, problem has {}",
            traj.dim(),
            p.dim
        )));
    }

    let mut certificate = certify_growth(&traj, p.alpha, beta).map_err(growth_failure)?;
    let grid = traj.grid();
    match check_h2(&p, beta, grid.horizon(), grid.steps_per_delay()) {
        Ok(h2) => {
            if h2.beta_exceeds_2l == Some(false) {
                s.warn(format!("beta = {beta} does not exceed 2L"));
            }
            certificate.h2 = Some(h2);
        }
        Err(e) => s.warn(format!("forcing check skipped: {e}")),
    }
    let probe = exponential_bound_probe(&traj, lambdas).map_err(growth_failure)?;
    s.info(format!(
        "verdict: {}, C = {:e}",
        certificate.verdict, certificate.c
    ));

    let json = serde_json::to_string_pretty(&CertifyOutput { certificate, probe })
        .expect("certificate serializes")
        + "\n";
    let out = s.cli.out.clone();
    s.emit(out.as_deref(), json.as_bytes())
}

fn counterexample(
    s: &mut Session,
    alpha: f64,
    x0: f64,
    horizon: f64,
    m: usize,
    lambdas: &[f64],
) -> Result<(), Failure> {
    s.param("alpha", alpha);
    s.param("x0", x0);
    s.param("horizon", horizon);
    s.param("steps_per_delay", m);
    s.param("lambdas", join(lambdas));
    let traj = counterexample_solution(alpha, x0, horizon, m).map_err(growth_failure)?;
    let probe = exponential_bound_probe(&traj, lambdas).map_err(growth_failure)?;

    if let Some(out) = s.cli.out.clone() {
        let mut csv = Vec::new();
        write_trajectory(&traj, &mut csv).map_err(Failure::invalid)?;
        s.emit(Some(&out), &csv)?;
    }
    let mut table = format!(
        "{:>8} {:>14} {:>14} {:>14}  verdict\n",
        "lambda", "log_C", "trend", "curvature"
    );
    for r in &probe {
        table += &format!(
            "{:>8} {:>14.6e} {:>14.6e} {:>14.6e}  {}\n",
            r.lambda, r.fit.log_c, r.fit.tail_trend, r.fit.log_norm_curvature, r.fit.verdict
        );
    }
    s.emit(None, table.as_bytes())
}

fn mlf(s: &mut Session, alpha: f64, z: f64, log: bool) -> Result<(), Failure> {
    s.param("alpha", alpha);
    s.param("z", z);
    s.param("log", log);
    let value = if log {
        ml_log_eval(alpha, z)
    } else {
        ml_eval(alpha, z)
    }
    .map_err(|e| match e {
        MlfError::Domain(_) => Failure::invalid(e),
        _ => Failure::new(EXIT_ANALYSIS, e),
    })?;
    let out = s.cli.out.clone();
    s.emit(
        out.as_deref(),
        format!("{}\n", significant15(value)).as_bytes(),
    )
}

/// Decimal notation with 15 significant digits; scientific outside [1e−5, 1e15).
pub fn significant15(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return format!("{:.14}", 0.0);
    }
    let rounded: f64 = format!("{v:.14e}").parse().expect("formatted float parses");
    let exponent = rounded.abs().log10().floor() as i32;
    if (-5..15).contains(&exponent) {
        format!("{:.*}", (14 - exponent) as usize, v)
    } else {
        format!("{v:.14e}")
    }
}

fn convergence(
    s: &mut Session,
    args: &SolverArgs,
    m_start: usize,
    levels: usize,
) -> Result<(), Failure> {
    if levels < 3 {
        return Err(Failure::invalid(format!(
            "--levels must be at least 3, got {levels}"
        )));
    }
    if m_start == 0 {
        return Err(Failure::invalid("--m-start must be at least 1"));
    }
    if m_start
        .checked_shl(levels as u32 - 1)
        .is_none_or(|m| m > 1 << 24)
    {
        return Err(Failure::invalid("too many levels for --m-start"));
    }
    let (_, p) = s.config()?;
    s.param("m_start", m_start);
    s.param("levels", levels);
    record_solver(s, args);

    let ms: Vec<usize> = (0..levels).map(|i| m_start << i).collect();
    let solved: Vec<Result<Solved, Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ms
            .iter()
            .map(|&m| {
                let p = &p;
                scope.spawn(move || run_solver(p, m, args))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let trajs = solved
        .into_iter()
        .map(|r| r.map(|s| s.trajectory().clone()))
        .collect::<Result<Vec<_>, _>>()?;

    let diffs: Vec<f64> = trajs
        .windows(2)
        .map(|w| level_difference(&w[0], &w[1]))
        .collect();
    let mut table = String::from("m,sup_difference,ratio,order\n");
    table += &format!("{},,,\n", ms[0]);
    let mut finite = true;
    for (i, d) in diffs.iter().enumerate() {
        finite &= d.is_finite();
        let (ratio, order) = if i == 0 {
            (String::new(), String::new())
        } else {
            let prev = diffs[i - 1];
            if *d == 0.0 && prev.is_finite() {
                ("exact".into(), "exact".into())
            } else {
                let r = prev / d;
                finite &= r.is_finite();
                (format!("{r:.6}"), format!("{:.6}", r.log2()))
            }
        };
        table += &format!("{},{d:.6e},{ratio},{order}\n", ms[i + 1]);
    }
    let out = s.cli.out.clone();
    s.emit(out.as_deref(), table.as_bytes())?;
    if out.is_some() {
        s.info(table.trim_end());
    }
    if finite {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_ANALYSIS,
            "observed orders are not finite",
        ))
    }
}

/// Sup over the coarse nodes `t ≥ 0` of `‖coarse_j − fine_{2j}‖`.
fn level_difference(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    let n = coarse.grid().n_total().min(fine.grid().n_total() / 2);
    let mut diff = vec![0.0; coarse.dim()];
    let mut worst = 0.0f64;
    for j in 0..=n as isize {
        for (k, d) in diff.iter_mut().enumerate() {
            *d = coarse.at(j)[k] - fine.at(2 * j)[k];
        }
        let e = norm(&diff);
        if e.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(e);
    }
    worst
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}
