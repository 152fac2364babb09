//! Batch experiment runner behind the `mlp-harness` binary.
//!
//! Every mode produces a table with a fixed, versioned column set. The last
//! three columns are always `status`, `margin` and `wall_time_s`; only the
//! last one varies between identical runs.

pub mod config;
pub mod suites;

use std::fmt::Write as _;
use std::time::Instant;

pub use config::{ExperimentConfig, Levels, Mode};

use crate::error::{Error, Result};
use crate::mlp::{l2_error_estimate, realize_estimate, terminal_samples, Z95};
use crate::models::{OracleKind, Problem};
use crate::particle::{ensemble_stats, simulate_particles, EnsembleStats};
use crate::recursion::{
    complexity_certificate, cost_bound, cost_budget, error_bound, gronwall_beta, log_cost_bound,
    moment_bound, BoundInputs,
};
use config::fmt_float;
use suites::{ClosedForm, SuiteReport};

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Standard errors allowed between two estimates of the same quantity.
pub const AGREEMENT_SE: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub cells: Vec<Cell>,
    pub status: Status,
    /// Signed distance to the assertion threshold; positive means passing.
    pub margin: f64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub se: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub mode: Mode,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
    pub config: ExperimentConfig,
    pub slope: Option<SlopeFit>,
}

impl ExperimentResult {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.status == Status::Fail)
    }

    /// 0 when every assertion holds, 1 on a statistical or bound failure.
    pub fn exit_code(&self) -> i32 {
        if self.failed() {
            1
        } else {
            0
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# mckean-mlp csv v{CSV_SCHEMA_VERSION} mode={} version={}",
            self.mode,
            env!("CARGO_PKG_VERSION")
        )
        .unwrap();
        let echo = self
            .config
            .echo()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "# config {echo}").unwrap();
        if let Some(fit) = &self.slope {
            writeln!(
                out,
                "# fitted_log_rmse_slope={} se={}",
                fmt_float(fit.slope),
                fmt_float(fit.se)
            )
            .unwrap();
        }
        let mut header: Vec<&str> = self.columns.clone();
        header.extend(["status", "margin", "wall_time_s"]);
        writeln!(out, "{}", header.join(",")).unwrap();
        for row in &self.rows {
            let mut fields: Vec<String> = row.cells.iter().map(Cell::render).collect();
            fields.push(row.status.as_str().into());
            fields.push(fmt_float(row.margin));
            fields.push(format!("{:.6}", row.wall_time));
            writeln!(out, "{}", fields.join(",")).unwrap();
        }
        out
    }
}

/// Drops the trailing `wall_time_s` field of every data line.
pub fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            if line.starts_with('#') {
                line.to_string()
            } else {
                match line.rfind(',') {
                    Some(i) => line[..i].to_string(),
                    None => line.to_string(),
                }
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Refusal or failure row for the machine-readable output when a run aborts.
pub fn error_csv(mode: Mode, err: &Error) -> String {
    let status = match err {
        Error::ResourceLimit { .. } => "refused",
        Error::Config(_) => "config_error",
        _ => "error",
    };
    let msg = err.to_string().replace([',', '\n'], ";");
    format!(
        "# mckean-mlp csv v{CSV_SCHEMA_VERSION} mode={mode} version={}\nrow_kind,message,status\nerror,{msg},{status}\n",
        env!("CARGO_PKG_VERSION")
    )
}

/// Exit status for an aborted run: 3 for resource refusals and overflowing
/// budgets, 2 otherwise.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::ResourceLimit { .. } | Error::Overflow(_) => 3,
        _ => 2,
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let problem = config.build_problem()?;
    match config.mode {
        Mode::Convergence => convergence(config, &problem),
        Mode::CostTable => cost_table(config, &problem),
        Mode::VerifyBounds => verify_bounds(config, &problem),
        Mode::OracleCompare => oracle_compare(config, &problem),
        Mode::RecursionSelftest => recursion_selftest(config),
        Mode::Certificate => certificate(config, &problem),
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64()))
}

fn blank(count: usize) -> impl Iterator<Item = Cell> {
    std::iter::repeat(Cell::Empty).take(count)
}

const CONVERGENCE_COLUMNS: [&str; 15] = [
    "row_kind",
    "n",
    "m",
    "reps",
    "rmse",
    "ci_half_width",
    "ci_upper",
    "error_bound",
    "bound_satisfied",
    "scalar_draws",
    "drift_evals",
    "cost_budget",
    "cost_bound",
    "slope",
    "slope_se",
];

fn convergence(config: &ExperimentConfig, problem: &Problem) -> Result<ExperimentResult> {
    if problem.oracle_kind() != OracleKind::Pathwise {
        return Err(Error::Config(format!(
            "convergence mode needs a pathwise oracle; '{}' has none",
            problem.name()
        )));
    }
    let levels = config.levels()?;
    let inputs = BoundInputs::of(problem);
    let d = problem.dim() as u64;
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for (n, m) in levels.cells() {
        let (est, secs) = timed(|| {
            l2_error_estimate(problem, n, m, config.reps, config.seed, config.cost_ceiling)
        })?;
        let bound = error_bound(n, m, problem.horizon(), &inputs)?;
        let ok = est.upper() <= bound;
        let mut cells: Vec<Cell> = vec![
            "cell".into(),
            n.into(),
            m.into(),
            config.reps.into(),
            est.rmse.into(),
            est.ci_half_width.into(),
            est.upper().into(),
            bound.into(),
            ok.into(),
            est.first_cost.scalar_draws.into(),
            est.first_cost.drift_evals.into(),
            cost_budget(n, m, d, true, true)?.into(),
            cost_bound(n, m, d, true, true)?.into(),
        ];
        cells.extend(blank(2));
        rows.push(Row {
            cells,
            status: Status::from_bool(ok),
            margin: bound - est.upper(),
            wall_time: secs,
        });
        estimates.push((n, est));
    }

    let mut slope = None;
    if levels.is_diagonal() && estimates.len() >= 2 {
        let usable = estimates.iter().all(|(_, e)| e.rmse > 0.0);
        let fit = usable.then(|| {
            // least squares of ln RMSE on k; var(ln RMSE) ≈ (se/RMSE)²
            let xs: Vec<f64> = estimates.iter().map(|(k, _)| *k as f64).collect();
            let mean_x = xs.iter().sum::<f64>() / xs.len() as f64;
            let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
            let mut s = 0.0;
            let mut var = 0.0;
            for (x, (_, e)) in xs.iter().zip(&estimates) {
                let w = (x - mean_x) / sxx;
                s += w * e.rmse.ln();
                var += w * w * (e.ci_half_width / Z95 / e.rmse).powi(2);
            }
            SlopeFit {
                slope: s,
                se: var.sqrt(),
            }
        });
        let mut cells: Vec<Cell> = vec!["slope".into()];
        cells.extend(blank(12));
        match &fit {
            Some(f) => {
                cells.push(f.slope.into());
                cells.push(f.se.into());
                let upper = f.slope + Z95 * f.se;
                rows.push(Row {
                    cells,
                    status: Status::from_bool(upper < 0.0),
                    margin: -upper,
                    wall_time: 0.0,
                });
            }
            None => {
                cells.extend(blank(2));
                rows.push(Row {
                    cells,
                    status: Status::Skipped,
                    margin: f64::NAN,
                    wall_time: 0.0,
                });
            }
        }
        slope = fit;

        // finest cell beats coarsest cell: disjoint 95% intervals
        let (k_lo, first) = &estimates[0];
        let (k_hi, last) = &estimates[estimates.len() - 1];
        let margin = first.lower() - last.upper();
        let mut cells: Vec<Cell> = vec![
            "compare".into(),
            (*k_hi).into(),
            (*k_lo).into(),
            Cell::Empty,
            (last.rmse - first.rmse).into(),
        ];
        cells.extend(blank(10));
        rows.push(Row {
            cells,
            status: Status::from_bool(margin > 0.0),
            margin,
            wall_time: 0.0,
        });
    }

    Ok(ExperimentResult {
        mode: Mode::Convergence,
        columns: CONVERGENCE_COLUMNS.to_vec(),
        rows,
        config: config.clone(),
        slope,
    })
}

const COST_COLUMNS: [&str; 11] = [
    "n",
    "m",
    "d",
    "scalar_draws",
    "drift_evals",
    "budget_draws",
    "budget_evals",
    "instrumented_total",
    "cost_budget",
    "cost_bound",
    "top_path_draws",
];

fn cost_table(config: &ExperimentConfig, problem: &Problem) -> Result<ExperimentResult> {
    let d = problem.dim() as u64;
    let mut rows = Vec::new();
    for (n, m) in config.levels()?.cells() {
        let (r, secs) =
            timed(|| realize_estimate(problem, n, m, config.seed, config.cost_ceiling))?;
        let budget_draws = cost_budget(n, m, d, true, false)?;
        let budget_evals = cost_budget(n, m, d, false, true)?;
        let budget = cost_budget(n, m, d, true, true)?;
        let bound = cost_bound(n, m, d, true, true)?;
        let top = (m as u64).pow(n) * d;
        let c = r.cost;
        let ok = c.scalar_draws <= budget_draws
            && c.drift_evals <= budget_evals
            && c.total() <= budget
            && budget <= bound
            && c.scalar_draws >= top;
        rows.push(Row {
            cells: vec![
                n.into(),
                m.into(),
                d.into(),
                c.scalar_draws.into(),
                c.drift_evals.into(),
                budget_draws.into(),
                budget_evals.into(),
                c.total().into(),
                budget.into(),
                bound.into(),
                top.into(),
            ],
            status: Status::from_bool(ok),
            margin: budget as f64 - c.total() as f64,
            wall_time: secs,
        });
    }
    Ok(ExperimentResult {
        mode: Mode::CostTable,
        columns: COST_COLUMNS.to_vec(),
        rows,
        config: config.clone(),
        slope: None,
    })
}

const SUITE_COLUMNS: [&str; 5] = ["row_kind", "cases", "statistic", "bound", "detail"];

fn suite_row(report: &SuiteReport, secs: f64) -> Row {
    Row {
        cells: vec![
            report.name.into(),
            report.cases.into(),
            report.worst.into(),
            report.tolerance.into(),
            Cell::Empty,
        ],
        status: Status::from_bool(report.passed()),
        margin: report.tolerance - report.worst,
        wall_time: secs,
    }
}

fn verify_bounds(config: &ExperimentConfig, problem: &Problem) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    let inputs = BoundInputs::of(problem);

    let (samples, secs) = timed(|| {
        simulate_particles(
            problem,
            config.particles,
            config.steps,
            config.seed,
            config.pair_ceiling,
        )
    })?;
    let stats = ensemble_stats(&samples)?;
    let bound = moment_bound(problem.horizon(), &inputs)?;
    let lower = stats.second_moment_root - AGREEMENT_SE * stats.second_moment_root_se;
    rows.push(Row {
        cells: vec![
            "moment_bound".into(),
            config.particles.into(),
            stats.second_moment_root.into(),
            bound.into(),
            format!("se={}", fmt_float(stats.second_moment_root_se))
                .as_str()
                .into(),
        ],
        status: Status::from_bool(lower <= bound),
        margin: bound - lower,
        wall_time: secs,
    });

    let (report, secs) = timed(|| {
        Ok(suites::gronwall_soundness_suite(
            config.soundness_draws,
            suites::SOUNDNESS_HORIZON,
            config.seed,
        ))
    })?;
    rows.push(suite_row(&report, secs));
    let (report, secs) = timed(|| Ok(suites::cost_domination_suite()))?;
    rows.push(suite_row(&report, secs));

    let beta = gronwall_beta(2.0, 2.0);
    rows.push(Row {
        cells: vec![
            "beta_kappa2_lambda2".into(),
            1usize.into(),
            beta.into(),
            4.0.into(),
            Cell::Empty,
        ],
        status: Status::from_bool(beta <= 4.0),
        margin: 4.0 - beta,
        wall_time: 0.0,
    });

    Ok(ExperimentResult {
        mode: Mode::VerifyBounds,
        columns: SUITE_COLUMNS.to_vec(),
        rows,
        config: config.clone(),
        slope: None,
    })
}

const COMPARE_COLUMNS: [&str; 9] = [
    "row_kind",
    "n",
    "m",
    "coordinate",
    "estimate",
    "estimate_se",
    "reference",
    "reference_se",
    "distance_se",
];

fn compare_rows(
    kind: &str,
    cell: (u32, u32),
    est: &EnsembleStats,
    reference: &[f64],
    reference_se: &[f64],
    secs: f64,
) -> Vec<Row> {
    (0..est.mean.len())
        .map(|i| {
            let se = (est.mean_se[i].powi(2) + reference_se[i].powi(2)).sqrt();
            let gap = (est.mean[i] - reference[i]).abs();
            let dist = if se > 0.0 {
                gap / se
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            Row {
                cells: vec![
                    kind.into(),
                    cell.0.into(),
                    cell.1.into(),
                    i.into(),
                    est.mean[i].into(),
                    est.mean_se[i].into(),
                    reference[i].into(),
                    reference_se[i].into(),
                    dist.into(),
                ],
                status: Status::from_bool(dist <= AGREEMENT_SE),
                margin: AGREEMENT_SE - dist,
                wall_time: if i == 0 { secs } else { 0.0 },
            }
        })
        .collect()
}

fn oracle_compare(config: &ExperimentConfig, problem: &Problem) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    let (particles, particle_secs) = timed(|| {
        simulate_particles(
            problem,
            config.particles,
            config.steps,
            config.seed,
            config.pair_ceiling,
        )
    })?;
    let particle = ensemble_stats(&particles)?;
    let analytic = problem.oracle_mean(problem.horizon());
    let zeros = vec![0.0; problem.dim()];
    if let Some(mean) = &analytic {
        rows.extend(compare_rows(
            "particle_vs_analytic",
            (0, 0),
            &particle,
            mean,
            &zeros,
            particle_secs,
        ));
    }
    // low levels carry a visible Picard bias; compare at the finest desk
    // level unless levels are given explicitly
    let levels = if config.k.is_none() && config.n.is_none() && config.m.is_none() {
        Levels::Diagonal(vec![config.max_level()])
    } else {
        config.levels()?
    };
    for cell in levels.cells() {
        let (samples, secs) = timed(|| {
            terminal_samples(
                problem,
                cell.0,
                cell.1,
                config.reps,
                config.seed,
                config.cost_ceiling,
            )
        })?;
        let mlp = ensemble_stats(&samples)?;
        rows.extend(compare_rows(
            "mlp_vs_particle",
            cell,
            &mlp,
            &particle.mean,
            &particle.mean_se,
            secs,
        ));
        if let Some(mean) = &analytic {
            rows.extend(compare_rows(
                "mlp_vs_analytic",
                cell,
                &mlp,
                mean,
                &zeros,
                0.0,
            ));
        }
    }
    Ok(ExperimentResult {
        mode: Mode::OracleCompare,
        columns: COMPARE_COLUMNS.to_vec(),
        rows,
        config: config.clone(),
        slope: None,
    })
}

fn recursion_selftest(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    for which in [ClosedForm::TwoStep, ClosedForm::Gronwall] {
        let (r, secs) = timed(|| {
            Ok(suites::closed_form_suite(
                which,
                config.selftest_cases,
                suites::CLOSED_FORM_HORIZON,
                config.seed,
            ))
        })?;
        rows.push(suite_row(&r, secs));
    }
    let (r, secs) = timed(|| {
        Ok(suites::complex_closed_form_suite(
            config.selftest_cases,
            suites::CLOSED_FORM_HORIZON,
            config.seed,
        ))
    })?;
    rows.push(suite_row(&r, secs));
    let (r, secs) = timed(|| {
        Ok(suites::gronwall_soundness_suite(
            config.soundness_draws,
            suites::SOUNDNESS_HORIZON,
            config.seed,
        ))
    })?;
    rows.push(suite_row(&r, secs));
    Ok(ExperimentResult {
        mode: Mode::RecursionSelftest,
        columns: SUITE_COLUMNS.to_vec(),
        rows,
        config: config.clone(),
        slope: None,
    })
}

const CERTIFICATE_COLUMNS: [&str; 10] = [
    "row_kind",
    "delta",
    "k_max",
    "argmax_k",
    "log_sup",
    "epsilon",
    "n_epsilon",
    "cost_bound",
    "log_lhs",
    "log_rhs",
];

fn certificate(config: &ExperimentConfig, problem: &Problem) -> Result<ExperimentResult> {
    let inputs = BoundInputs::of(problem);
    let d = problem.dim() as u64;
    let (cert, secs) = timed(|| complexity_certificate(config.delta, &inputs, config.k_scan))?;
    let mut rows = vec![Row {
        cells: vec![
            "supremand".into(),
            config.delta.into(),
            cert.k_max.into(),
            cert.argmax.into(),
            cert.log_sup.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ],
        status: Status::from_bool(cert.attained),
        margin: (cert.k_max - cert.argmax) as f64,
        wall_time: secs,
    }];
    // (𝔳d + 𝔣)·sup with both switches on, compared in log space
    let log_rhs = ((d + 1) as f64).ln() + cert.log_sup;
    for &eps in &config.epsilons {
        let row = match cert.n_epsilon(eps) {
            Some(n_eps) => {
                let bound = cost_bound(n_eps, n_eps, d, true, true);
                let (bound_cell, log_lhs) = match bound {
                    Ok(b) => (
                        Cell::from(b),
                        (b as f64).ln() + (2.0 + config.delta) * eps.ln(),
                    ),
                    Err(_) => (
                        Cell::Text("overflow".into()),
                        log_cost_bound(n_eps, n_eps, d, true, true)
                            + (2.0 + config.delta) * eps.ln(),
                    ),
                };
                Row {
                    cells: vec![
                        "epsilon".into(),
                        config.delta.into(),
                        cert.k_max.into(),
                        Cell::Empty,
                        Cell::Empty,
                        eps.into(),
                        n_eps.into(),
                        bound_cell,
                        log_lhs.into(),
                        log_rhs.into(),
                    ],
                    status: Status::from_bool(log_lhs <= log_rhs),
                    margin: log_rhs - log_lhs,
                    wall_time: 0.0,
                }
            }
            None => Row {
                cells: vec![
                    "epsilon".into(),
                    config.delta.into(),
                    cert.k_max.into(),
                    Cell::Empty,
                    Cell::Empty,
                    eps.into(),
                    "unreached".into(),
                    Cell::Empty,
                    Cell::Empty,
                    log_rhs.into(),
                ],
                status: Status::Fail,
                margin: f64::NAN,
                wall_time: 0.0,
            },
        };
        rows.push(row);
    }
    Ok(ExperimentResult {
        mode: Mode::Certificate,
        columns: CERTIFICATE_COLUMNS.to_vec(),
        rows,
        config: config.clone(),
        slope: None,
    })
}
