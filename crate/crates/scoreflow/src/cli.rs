//! Command-line front end: wires configs to the experiment layer and writes
//! CSV/JSON artifacts.
//!
//! Conventions shared by all subcommands:
//!
//! * numbers in data rows are printed with 17 significant digits, so files
//!   round-trip bit-exactly and identical configs produce identical bytes;
//! * every output starts with `#`-prefixed comment lines echoing the fully
//!   resolved configuration (JSON outputs carry a `config` object instead);
//! * `--config FILE` supplies defaults from JSON (unknown keys rejected);
//!   explicit flags override file values;
//! * exit code 0 on success, 1 on usage errors, 2 on numerical/backend
//!   errors.

use crate::densities::{golden_dataset, Density, SampleSet};
use crate::error::{Error, Result};
use crate::expectation::ExpectationBackend;
use crate::experiments::{
    estimate_theta, region_width, robustness_sweep, run_sweep, transformed_density_table,
    DataSource, GradMode, Objective, RegionReport, SweepRow, SweepSpec, SweepTable,
};
use crate::ode::{drift_by_name, euler_pushforward_check};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Parser)]
#[command(
    name = "scoreflow",
    version,
    about = "Score-matching landscape experiments in 1-D"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep objective losses over a grid of model locations.
    Sweep(SweepArgs),
    /// Measure where a sweep's gradient magnitude exceeds a threshold.
    #[command(name = "region-width")]
    RegionWidth(RegionWidthArgs),
    /// Sweep argmins and region widths across degrees of freedom.
    Robustness(RobustnessArgs),
    /// Tabulate log-densities transformed by the bounded arctan map.
    #[command(name = "transformed-density")]
    TransformedDensity(TransformedArgs),
    /// Estimate the model location by gradient descent.
    Estimate(EstimateArgs),
    /// Compare the analytic ODE rate with its Euler-step quotient.
    #[command(name = "ode-check")]
    OdeCheck(OdeArgs),
    /// Run the numeric self-check suite.
    Verify,
}

/// `lo:hi:step` range strings.
fn parse_range(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("range must be lo:hi:step, got '{s}'")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad range part '{p}': {e}")))
        })
        .collect::<Result<_>>()?;
    Ok((nums[0], nums[1], nums[2]))
}

fn parse_objectives(s: &str) -> Result<Vec<Objective>> {
    s.split(',')
        .map(|p| Objective::from_str(p.trim()))
        .collect()
}

/// 17-significant-digit form used for every data cell.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// JSON file with default parameter values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma list among sm, dsm_manual, dsm_gaussian.
    #[arg(long)]
    objectives: Option<String>,
    /// Model-location grid as lo:hi:step.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// quadrature (exact density) or samples (dataset).
    #[arg(long)]
    backend: Option<String>,
    /// Dataset file for the samples backend; generated from --seed if absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    dof: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    /// Shape constant of the manual diffusion.
    #[arg(long)]
    manual_b: Option<f64>,
    #[arg(long)]
    quad_points: Option<usize>,
    /// Sample count when generating a dataset in-process.
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// File-supplied defaults for `sweep`; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFileConfig {
    objectives: Option<Vec<Objective>>,
    theta: Option<String>,
    backend: Option<String>,
    data: Option<PathBuf>,
    dof: Option<f64>,
    scale: Option<f64>,
    manual_b: Option<f64>,
    quad_points: Option<usize>,
    n_samples: Option<usize>,
    seed: Option<u64>,
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config file: {e}")))
        }
    }
}

struct ResolvedSweep {
    spec: SweepSpec,
    backend_kind: String,
    data_path: Option<PathBuf>,
    n_samples: usize,
    seed: u64,
}

impl ResolvedSweep {
    fn resolve(a: &SweepArgs) -> Result<Self> {
        let file: SweepFileConfig = load_config(&a.config)?;
        let objectives = match (&a.objectives, file.objectives) {
            (Some(s), _) => parse_objectives(s)?,
            (None, Some(v)) => v,
            (None, None) => Objective::ALL.to_vec(),
        };
        let theta = a
            .theta
            .clone()
            .or(file.theta)
            .unwrap_or_else(|| "-10:10:0.01".into());
        let (theta_lo, theta_hi, step) = parse_range(&theta)?;
        let backend_kind = a
            .backend
            .clone()
            .or(file.backend)
            .unwrap_or_else(|| "quadrature".into());
        if backend_kind != "quadrature" && backend_kind != "samples" {
            return Err(Error::Parse(format!(
                "backend must be quadrature or samples, got '{backend_kind}'"
            )));
        }
        let spec = SweepSpec {
            theta_lo,
            theta_hi,
            step,
            objectives,
            dof: a.dof.or(file.dof).unwrap_or(5.0),
            scale: a.scale.or(file.scale).unwrap_or(0.3),
            manual_b: a.manual_b.or(file.manual_b).unwrap_or(0.6),
            n_quad_points: a.quad_points.or(file.quad_points).unwrap_or(2048),
        };
        Ok(Self {
            spec,
            backend_kind,
            data_path: a.data.clone().or(file.data),
            n_samples: a.n_samples.or(file.n_samples).unwrap_or(300),
            seed: a.seed.or(file.seed).unwrap_or(42),
        })
    }

    fn source(&self) -> Result<DataSource> {
        if self.backend_kind == "quadrature" {
            Ok(DataSource::Density(Density::student_t(
                0.0,
                self.spec.scale,
                self.spec.dof,
            )?))
        } else {
            let set = match &self.data_path {
                Some(p) => SampleSet::read_file(p)?,
                None => Density::student_t(0.0, self.spec.scale, self.spec.dof)?
                    .sample(self.n_samples, self.seed)?,
            };
            Ok(DataSource::Samples(set))
        }
    }

    fn echo(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# scoreflow sweep").unwrap();
        let names: Vec<&str> = self.spec.objectives.iter().map(|o| o.name()).collect();
        writeln!(s, "# objectives={}", names.join(",")).unwrap();
        writeln!(
            s,
            "# theta={}:{}:{}",
            self.spec.theta_lo, self.spec.theta_hi, self.spec.step
        )
        .unwrap();
        writeln!(s, "# backend={}", self.backend_kind).unwrap();
        if let Some(p) = &self.data_path {
            writeln!(s, "# data={}", p.display()).unwrap();
        }
        writeln!(
            s,
            "# dof={} scale={} manual_b={}",
            self.spec.dof, self.spec.scale, self.spec.manual_b
        )
        .unwrap();
        writeln!(s, "# quad_points={}", self.spec.n_quad_points).unwrap();
        writeln!(s, "# n_samples={} seed={}", self.n_samples, self.seed).unwrap();
        s
    }
}

fn sweep_csv(table: &SweepTable, echo: &str) -> String {
    let mut out = String::from(echo);
    let names: Vec<&str> = table.objectives.iter().map(|o| o.name()).collect();
    let grads: Vec<String> = names.iter().map(|n| format!("grad_{n}")).collect();
    writeln!(out, "theta,{},{}", names.join(","), grads.join(",")).unwrap();
    for row in &table.rows {
        let mut cells = vec![fmt17(row.theta)];
        cells.extend(row.losses.iter().map(|&v| fmt17(v)));
        cells.extend(row.grads.iter().map(|g| g.map(fmt17).unwrap_or_default()));
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

/// Parse a sweep CSV back into a table (used by `region-width --in`).
pub fn parse_sweep_csv(text: &str) -> Result<SweepTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = loop {
        match lines.next() {
            Some(l) if l.starts_with('#') => continue,
            Some(l) => break l,
            None => return Err(Error::Parse("sweep csv has no header row".into())),
        }
    };
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"theta") {
        return Err(Error::Parse(
            "sweep csv must start with a theta column".into(),
        ));
    }
    let n_obj = cols
        .iter()
        .filter(|c| !c.starts_with("grad_") && **c != "theta")
        .count();
    if cols.len() != 1 + 2 * n_obj {
        return Err(Error::Parse(
            "sweep csv has mismatched loss/grad columns".into(),
        ));
    }
    let objectives: Vec<Objective> = cols[1..=n_obj]
        .iter()
        .map(|c| Objective::from_str(c))
        .collect::<Result<_>>()?;
    for (i, c) in cols[1 + n_obj..].iter().enumerate() {
        let expect = format!("grad_{}", objectives[i].name());
        if *c != expect {
            return Err(Error::Parse(format!("expected column {expect}, found {c}")));
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(Error::Parse(format!(
                "row has {} cells, expected {}",
                cells.len(),
                cols.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number '{s}': {e}")))
        };
        let theta = parse(cells[0])?;
        let losses: Vec<f64> = cells[1..=n_obj]
            .iter()
            .map(|c| parse(c))
            .collect::<Result<_>>()?;
        let grads: Vec<Option<f64>> = cells[1 + n_obj..]
            .iter()
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    parse(c).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        rows.push(SweepRow {
            theta,
            losses,
            grads,
        });
    }
    Ok(SweepTable { objectives, rows })
}

#[derive(Debug, Args)]
struct RegionWidthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Sweep CSV produced by `scoreflow sweep`.
    #[arg(long = "in")]
    input: PathBuf,
    /// JSON report path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionFileConfig {
    objective: Option<Objective>,
    threshold: Option<f64>,
}

fn run_region_width(a: &RegionWidthArgs) -> Result<()> {
    let file: RegionFileConfig = load_config(&a.config)?;
    let objective = match (&a.objective, file.objective) {
        (Some(s), _) => Objective::from_str(s)?,
        (None, Some(o)) => o,
        (None, None) => Objective::DsmGaussian,
    };
    let threshold = a.threshold.or(file.threshold).unwrap_or(1.0);
    let table = parse_sweep_csv(&std::fs::read_to_string(&a.input)?)?;
    let report = region_width(&table, objective, threshold)?;
    let json = region_report_json(&report, &a.input);
    match &a.out {
        Some(p) => std::fs::write(p, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn region_report_json(report: &RegionReport, input: &Path) -> String {
    let value = serde_json::json!({
        "command": "region-width",
        "config": {
            "objective": report.objective.name(),
            "threshold": report.threshold,
            "in": input.display().to_string(),
        },
        "total_width": report.total_width,
        "intervals": report.intervals,
        "empty": report.empty,
    });
    serde_json::to_string_pretty(&value).expect("report serializes")
}

#[derive(Debug, Args)]
struct RobustnessArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma list of degrees of freedom.
    #[arg(long)]
    dofs: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    manual_b: Option<f64>,
    #[arg(long)]
    quad_points: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobustnessFileConfig {
    dofs: Option<Vec<f64>>,
    theta: Option<String>,
    scale: Option<f64>,
    manual_b: Option<f64>,
    quad_points: Option<usize>,
}

fn run_robustness(a: &RobustnessArgs) -> Result<()> {
    let file: RobustnessFileConfig = load_config(&a.config)?;
    let dofs: Vec<f64> = match (&a.dofs, file.dofs) {
        (Some(s), _) => s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad dof '{p}': {e}")))
            })
            .collect::<Result<_>>()?,
        (None, Some(v)) => v,
        (None, None) => vec![3.0, 5.0, 10.0, 30.0],
    };
    let theta = a
        .theta
        .clone()
        .or(file.theta)
        .unwrap_or_else(|| "-10:10:0.01".into());
    let (theta_lo, theta_hi, step) = parse_range(&theta)?;
    let spec = SweepSpec {
        theta_lo,
        theta_hi,
        step,
        scale: a.scale.or(file.scale).unwrap_or(0.3),
        manual_b: a.manual_b.or(file.manual_b).unwrap_or(0.6),
        n_quad_points: a.quad_points.or(file.quad_points).unwrap_or(2048),
        ..SweepSpec::default()
    };
    let rows = robustness_sweep(&dofs, &spec)?;
    let mut out = String::new();
    writeln!(out, "# scoreflow robustness").unwrap();
    let dstr: Vec<String> = dofs.iter().map(|d| d.to_string()).collect();
    writeln!(out, "# dofs={}", dstr.join(",")).unwrap();
    writeln!(out, "# theta={theta_lo}:{theta_hi}:{step}").unwrap();
    writeln!(
        out,
        "# scale={} manual_b={} quad_points={}",
        spec.scale, spec.manual_b, spec.n_quad_points
    )
    .unwrap();
    writeln!(
        out,
        "dof,manual_argmin,gaussian_argmin,manual_width,gaussian_width"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(r.dof),
            fmt17(r.manual_argmin),
            fmt17(r.gaussian_argmin),
            fmt17(r.manual_width),
            fmt17(r.gaussian_width)
        )
        .unwrap();
    }
    std::fs::write(&a.out, out)?;
    Ok(())
}

#[derive(Debug, Args)]
struct TransformedArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model location (the map is centered here too).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// y grid as lo:hi:step; must stay inside the map image.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformedFileConfig {
    theta: Option<f64>,
    b: Option<f64>,
    grid: Option<String>,
}

fn run_transformed(a: &TransformedArgs) -> Result<()> {
    let file: TransformedFileConfig = load_config(&a.config)?;
    let theta = a.theta.or(file.theta).unwrap_or(-2.5);
    let b = a.b.or(file.b).unwrap_or(0.6);
    let grid_str = a
        .grid
        .clone()
        .or(file.grid)
        .unwrap_or_else(|| "-3.3:3.3:0.05".into());
    let (lo, hi, step) = parse_range(&grid_str)?;
    let n = ((hi - lo) / step).round() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    let rows = transformed_density_table(theta, b, &grid)?;
    let mut out = String::new();
    writeln!(out, "# scoreflow transformed-density").unwrap();
    writeln!(out, "# theta={theta} b={b} grid={lo}:{hi}:{step}").unwrap();
    writeln!(out, "y,log_p_y,log_q_y").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{}",
            fmt17(r.y),
            fmt17(r.log_p_y),
            fmt17(r.log_q_y)
        )
        .unwrap();
    }
    std::fs::write(&a.out, out)?;
    Ok(())
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta_init: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// plug-in (freeze the flow each step) or full (move it with the model).
    #[arg(long)]
    grad_mode: Option<String>,
    /// Dataset file; the canonical 300-sample set if omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateFileConfig {
    objective: Option<Objective>,
    theta_init: Option<f64>,
    lr: Option<f64>,
    max_iters: Option<usize>,
    grad_mode: Option<GradMode>,
    data: Option<PathBuf>,
}

fn run_estimate(a: &EstimateArgs) -> Result<()> {
    let file: EstimateFileConfig = load_config(&a.config)?;
    let objective = match (&a.objective, file.objective) {
        (Some(s), _) => Objective::from_str(s)?,
        (None, Some(o)) => o,
        (None, None) => Objective::DsmGaussian,
    };
    let theta_init = a.theta_init.or(file.theta_init).unwrap_or(3.0);
    let lr = a.lr.or(file.lr).unwrap_or(0.05);
    let max_iters = a.max_iters.or(file.max_iters).unwrap_or(500);
    let grad_mode = match (&a.grad_mode, file.grad_mode) {
        (Some(s), _) => GradMode::from_str(s)?,
        (None, Some(g)) => g,
        (None, None) => GradMode::PlugIn,
    };
    let data_path = a.data.clone().or(file.data);
    let set = match &data_path {
        Some(p) => SampleSet::read_file(p)?,
        None => golden_dataset(),
    };
    let trace = estimate_theta(
        &DataSource::Samples(set),
        objective,
        theta_init,
        lr,
        max_iters,
        grad_mode,
    )?;
    let mut out = String::new();
    writeln!(out, "# scoreflow estimate").unwrap();
    writeln!(
        out,
        "# objective={objective} theta_init={theta_init} lr={lr} max_iters={max_iters}"
    )
    .unwrap();
    writeln!(out, "# grad_mode={grad_mode}").unwrap();
    match &data_path {
        Some(p) => writeln!(out, "# data={}", p.display()).unwrap(),
        None => writeln!(out, "# data=<golden dataset seed=42 n=300>").unwrap(),
    }
    writeln!(
        out,
        "# final_theta={} converged={} diverged={}",
        fmt17(trace.final_theta),
        trace.converged,
        trace.diverged
    )
    .unwrap();
    writeln!(out, "iter,theta,loss,grad").unwrap();
    for s in &trace.steps {
        writeln!(
            out,
            "{},{},{},{}",
            s.iter,
            fmt17(s.theta),
            fmt17(s.loss),
            fmt17(s.grad)
        )
        .unwrap();
    }
    std::fs::write(&a.out, out)?;
    println!(
        "final_theta={} converged={} diverged={} iters={}",
        trace.final_theta,
        trace.converged,
        trace.diverged,
        trace.steps.len()
    );
    Ok(())
}

#[derive(Debug, Args)]
struct OdeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Drift registry name: linear, tanh or cubic_damped.
    #[arg(long)]
    drift: Option<String>,
    /// Coefficient for the linear drift.
    #[arg(long, allow_hyphen_values = true)]
    drift_coeff: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Model location of p (data density q sits at 0).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// JSON report path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OdeFileConfig {
    drift: Option<String>,
    drift_coeff: Option<f64>,
    delta: Option<f64>,
    theta: Option<f64>,
}

fn run_ode_check(a: &OdeArgs) -> Result<()> {
    let file: OdeFileConfig = load_config(&a.config)?;
    let drift_name = a
        .drift
        .clone()
        .or(file.drift)
        .unwrap_or_else(|| "tanh".into());
    let coeff = a.drift_coeff.or(file.drift_coeff).unwrap_or(1.0);
    let delta = a.delta.or(file.delta).unwrap_or(1e-5);
    let theta = a.theta.or(file.theta).unwrap_or(0.8);
    let drift = drift_by_name(&drift_name, coeff)?;

    let q = Density::student_t(0.0, 0.3, 5.0)?;
    let p = Density::student_t(theta, 0.3, 5.0)?;
    let e = ExpectationBackend::default_quadrature(&q, 2048)?;
    let check = euler_pushforward_check(&q, &p, &drift, delta, &e)?;
    let mut convergence = Vec::new();
    for d in [1e-3, 1e-4, 1e-5] {
        let c = euler_pushforward_check(&q, &p, &drift, d, &e)?;
        convergence.push(serde_json::json!({
            "delta": d,
            "finite_diff": c.finite_diff,
            "relative_gap": c.relative_gap(),
        }));
    }
    let report = serde_json::json!({
        "command": "ode-check",
        "config": {
            "drift": drift_name,
            "drift_coeff": coeff,
            "delta": delta,
            "theta": theta,
        },
        "analytic": check.analytic,
        "finite_diff": check.finite_diff,
        "relative_gap": check.relative_gap(),
        "convergence": convergence,
    });
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &a.out {
        Some(p) => std::fs::write(p, &json)?,
        None => println!("{json}"),
    }
    if check.relative_gap() > 1e-3 {
        return Err(Error::Backend(format!(
            "ode-check: analytic {} vs finite difference {} disagree beyond 1e-3",
            check.analytic, check.finite_diff
        )));
    }
    Ok(())
}

fn run_verify() -> Result<()> {
    let results = crate::verify::run_all()?;
    let mut all_ok = true;
    for r in &results {
        println!(
            "{} {} — {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        all_ok &= r.passed;
    }
    if !all_ok {
        return Err(Error::Backend(
            "one or more verification checks failed".into(),
        ));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(a) => {
            let resolved = ResolvedSweep::resolve(&a)?;
            let table = run_sweep(&resolved.spec, &resolved.source()?)?;
            std::fs::write(&a.out, sweep_csv(&table, &resolved.echo()))?;
            Ok(())
        }
        Command::RegionWidth(a) => run_region_width(&a),
        Command::Robustness(a) => run_robustness(&a),
        Command::TransformedDensity(a) => run_transformed(&a),
        Command::Estimate(a) => run_estimate(&a),
        Command::OdeCheck(a) => run_ode_check(&a),
        Command::Verify => run_verify(),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::InvalidParam(_) => 1,
        _ => 2,
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version through Error::print with exit 0
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { 0 } else { 1 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
