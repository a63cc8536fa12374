//! Loss-landscape experiments: parameter sweeps, gradient-region widths,
//! degrees-of-freedom robustness, transformed-density tables, and location
//! estimation by gradient descent.
//!
//! The data density is Student-t(0, scale, dof); the model is Student-t with
//! the same scale and dof and a movable location theta. Three objectives are
//! swept:
//!
//! * `sm`           — plain score matching,
//! * `dsm_manual`   — diffusion score matching with m(x) = 1 + (x-theta)^2/b,
//! * `dsm_gaussian` — diffusion score matching with m from the CDF map of
//!   the model onto the standard normal.
//!
//! Both diffusion flows are rebuilt at every grid theta, so each loss column
//! is the curve traced by moving the model and its preconditioner together.

use crate::densities::{Density, SampleSet};
use crate::divergences::{dsm_integrand, score_matching_loss};
use crate::error::{Error, Result};
use crate::expectation::{ExpectationBackend, QuadratureRule};
use crate::flows::{ArctanPrefactor, Flow};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Sm,
    DsmManual,
    DsmGaussian,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Sm, Objective::DsmManual, Objective::DsmGaussian];

    pub fn name(&self) -> &'static str {
        match self {
            Objective::Sm => "sm",
            Objective::DsmManual => "dsm_manual",
            Objective::DsmGaussian => "dsm_gaussian",
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sm" => Ok(Objective::Sm),
            "dsm_manual" => Ok(Objective::DsmManual),
            "dsm_gaussian" => Ok(Objective::DsmGaussian),
            other => Err(Error::Parse(format!(
                "unknown objective '{other}' (expected sm, dsm_manual or dsm_gaussian)"
            ))),
        }
    }
}

/// Where E_q[.] comes from: an exact density (quadrature) or a dataset
/// (Monte Carlo).
#[derive(Debug, Clone)]
pub enum DataSource {
    Density(Density),
    Samples(SampleSet),
}

/// Sweep description. The grid is theta_lo, theta_lo + step, ..., theta_hi
/// (inclusive); a degenerate single-point grid (theta_lo == theta_hi) is
/// allowed but carries no gradient column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub step: f64,
    pub objectives: Vec<Objective>,
    pub dof: f64,
    pub scale: f64,
    /// Shape constant b of the manual diffusion m(x) = 1 + (x-theta)^2/b.
    pub manual_b: f64,
    pub n_quad_points: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            theta_lo: -10.0,
            theta_hi: 10.0,
            step: 0.01,
            objectives: Objective::ALL.to_vec(),
            dof: 5.0,
            scale: 0.3,
            manual_b: 0.6,
            n_quad_points: 2048,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidParam(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if !(self.theta_lo.is_finite()
            && self.theta_hi.is_finite()
            && self.theta_lo <= self.theta_hi)
        {
            return Err(Error::InvalidParam(format!(
                "need theta_lo <= theta_hi, got [{}, {}]",
                self.theta_lo, self.theta_hi
            )));
        }
        if self.objectives.is_empty() {
            return Err(Error::InvalidParam("no objectives requested".into()));
        }
        if self.dof <= 0.0 || self.scale <= 0.0 || self.manual_b <= 0.0 {
            return Err(Error::InvalidParam(
                "dof, scale and manual_b must all be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.theta_hi - self.theta_lo) / self.step).round() as usize + 1;
        (0..n)
            .map(|i| self.theta_lo + i as f64 * self.step)
            .collect()
    }
}

/// One grid point of a sweep: losses and grid-FD gradients aligned with the
/// table's objective list.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub theta: f64,
    pub losses: Vec<f64>,
    pub grads: Vec<Option<f64>>,
}

/// A completed sweep.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub objectives: Vec<Objective>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn objective_index(&self, objective: Objective) -> Result<usize> {
        self.objectives
            .iter()
            .position(|&o| o == objective)
            .ok_or_else(|| Error::InvalidParam(format!("table has no column for {objective}")))
    }

    /// Grid theta of the smallest loss.
    pub fn argmin(&self, objective: Objective) -> Result<f64> {
        let j = self.objective_index(objective)?;
        let row = self
            .rows
            .iter()
            .min_by(|a, b| a.losses[j].total_cmp(&b.losses[j]))
            .ok_or_else(|| Error::InvalidParam("empty sweep table".into()))?;
        Ok(row.theta)
    }

    /// Thetas of strict interior local minima.
    pub fn interior_local_minima(&self, objective: Objective) -> Result<Vec<f64>> {
        let j = self.objective_index(objective)?;
        Ok(self
            .rows
            .windows(3)
            .filter(|w| w[1].losses[j] < w[0].losses[j] && w[1].losses[j] < w[2].losses[j])
            .map(|w| w[1].theta)
            .collect())
    }

    /// Thetas of strict interior local maxima.
    pub fn interior_local_maxima(&self, objective: Objective) -> Result<Vec<f64>> {
        let j = self.objective_index(objective)?;
        Ok(self
            .rows
            .windows(3)
            .filter(|w| w[1].losses[j] > w[0].losses[j] && w[1].losses[j] > w[2].losses[j])
            .map(|w| w[1].theta)
            .collect())
    }
}

fn backend_for(source: &DataSource, spec: &SweepSpec) -> Result<(Density, ExpectationBackend)> {
    match source {
        DataSource::Density(d) => {
            let e = ExpectationBackend::default_quadrature(d, spec.n_quad_points)?;
            Ok((d.clone(), e))
        }
        DataSource::Samples(s) => {
            // q is never evaluated on the Monte Carlo path; the model family
            // stands in as the nominal data law.
            let q = Density::student_t(0.0, spec.scale, spec.dof)?;
            let e = ExpectationBackend::monte_carlo(s.clone())?;
            Ok((q, e))
        }
    }
}

/// One objective value at model location `theta_model` with the diffusion
/// flow (if any) built at `theta_flow`.
pub fn objective_loss(
    objective: Objective,
    theta_model: f64,
    theta_flow: f64,
    spec: &SweepSpec,
    q: &Density,
    e: &ExpectationBackend,
) -> Result<f64> {
    let p = Density::student_t(theta_model, spec.scale, spec.dof)?;
    match objective {
        Objective::Sm => Ok(score_matching_loss(q, &p, e)?.value),
        Objective::DsmManual => {
            let flow = Flow::arctan(theta_flow, spec.manual_b, ArctanPrefactor::MatchDiffusion)?;
            Ok(e.expect(q, |x| dsm_integrand(&p, &flow, x))?.value)
        }
        Objective::DsmGaussian => {
            let source = Density::student_t(theta_flow, spec.scale, spec.dof)?;
            let flow = Flow::gaussian_cdf_map(source)?;
            Ok(e.expect(q, |x| dsm_integrand(&p, &flow, x))?.value)
        }
    }
}

/// Sweep every objective across the theta grid. Rows are computed in
/// parallel and assembled in grid order; gradients are central differences
/// over the grid, absent at the endpoints.
pub fn run_sweep(spec: &SweepSpec, source: &DataSource) -> Result<SweepTable> {
    spec.validate()?;
    let (q, e) = backend_for(source, spec)?;
    let grid = spec.grid();

    let losses: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&theta| {
            spec.objectives
                .iter()
                .map(|&obj| objective_loss(obj, theta, theta, spec, &q, &e))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let n = grid.len();
    let mut rows = Vec::with_capacity(n);
    for (i, (&theta, loss)) in grid.iter().zip(&losses).enumerate() {
        let grads = (0..spec.objectives.len())
            .map(|j| {
                if i == 0 || i + 1 == n {
                    None
                } else {
                    Some((losses[i + 1][j] - losses[i - 1][j]) / (2.0 * spec.step))
                }
            })
            .collect();
        rows.push(SweepRow {
            theta,
            losses: loss.clone(),
            grads,
        });
    }
    Ok(SweepTable {
        objectives: spec.objectives.clone(),
        rows,
    })
}

/// Maximal intervals where the gradient magnitude exceeds a threshold.
#[derive(Debug, Clone, Serialize)]
pub struct RegionReport {
    pub objective: Objective,
    pub threshold: f64,
    pub intervals: Vec<(f64, f64)>,
    pub total_width: f64,
    pub empty: bool,
}

/// Find where |d loss / d theta| > threshold, interpolating the crossing
/// points linearly between grid nodes. Regions that reach the first or last
/// interior point extend to the grid boundary; touching intervals merge.
pub fn region_width(
    table: &SweepTable,
    objective: Objective,
    threshold: f64,
) -> Result<RegionReport> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidParam(format!(
            "threshold must be >= 0, got {threshold}"
        )));
    }
    let j = table.objective_index(objective)?;
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter_map(|r| r.grads[j].map(|g| (r.theta, g.abs())))
        .collect();
    if pts.is_empty() {
        return Err(Error::InvalidParam(
            "sweep has no gradient column (fewer than 3 grid points)".into(),
        ));
    }
    let grid_lo = table.rows.first().expect("nonempty").theta;
    let grid_hi = table.rows.last().expect("nonempty").theta;
    let n = pts.len();

    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        if pts[i].1 > threshold {
            let mut k = i;
            while k + 1 < n && pts[k + 1].1 > threshold {
                k += 1;
            }
            let lo = if i == 0 {
                grid_lo
            } else {
                let (t0, g0) = pts[i - 1];
                t0 + (threshold - g0) / (pts[i].1 - g0) * (pts[i].0 - t0)
            };
            let hi = if k + 1 == n {
                grid_hi
            } else {
                let (t0, g0) = pts[k];
                let (t1, g1) = pts[k + 1];
                t0 + (threshold - g0) / (g1 - g0) * (t1 - t0)
            };
            match intervals.last_mut() {
                Some(prev) if lo <= prev.1 => prev.1 = hi,
                _ => intervals.push((lo, hi)),
            }
            i = k + 1;
        } else {
            i += 1;
        }
    }
    let total_width = intervals.iter().map(|(a, b)| b - a).sum();
    Ok(RegionReport {
        objective,
        threshold,
        empty: intervals.is_empty(),
        intervals,
        total_width,
    })
}

/// Robustness of the two diffusion objectives to the degrees of freedom:
/// the manual flow keeps its fixed shape constant while the CDF map is
/// rebuilt from the matching-dof model.
#[derive(Debug, Clone, Serialize)]
pub struct RobustnessRow {
    pub dof: f64,
    pub manual_argmin: f64,
    pub gaussian_argmin: f64,
    pub manual_width: f64,
    pub gaussian_width: f64,
}

pub fn robustness_sweep(dofs: &[f64], spec: &SweepSpec) -> Result<Vec<RobustnessRow>> {
    let mut out = Vec::with_capacity(dofs.len());
    for &dof in dofs {
        if dof <= 2.0 {
            return Err(Error::InvalidParam(format!(
                "robustness sweep needs dof > 2 (finite variance), got {dof}"
            )));
        }
        let mut s = spec.clone();
        s.dof = dof;
        s.objectives = vec![Objective::DsmManual, Objective::DsmGaussian];
        let q = Density::student_t(0.0, s.scale, dof)?;
        let table = run_sweep(&s, &DataSource::Density(q))?;
        out.push(RobustnessRow {
            dof,
            manual_argmin: table.argmin(Objective::DsmManual)?,
            gaussian_argmin: table.argmin(Objective::DsmGaussian)?,
            manual_width: region_width(&table, Objective::DsmManual, 1.0)?.total_width,
            gaussian_width: region_width(&table, Objective::DsmGaussian, 1.0)?.total_width,
        });
    }
    Ok(out)
}

/// One row of the transformed-density table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransformedDensityRow {
    pub y: f64,
    pub log_p_y: f64,
    pub log_q_y: f64,
}

/// Log-densities of model (location `theta`) and data (location 0) pushed
/// through the bounded arctan map centered at `theta`. Grid points at or
/// beyond the image boundary surface as [`Error::OutOfImage`].
pub fn transformed_density_table(
    theta: f64,
    b: f64,
    grid: &[f64],
) -> Result<Vec<TransformedDensityRow>> {
    let flow = Flow::arctan(theta, b, ArctanPrefactor::MatchTransform)?;
    let p = Density::pushforward(Density::student_t(theta, 0.3, 5.0)?, flow.clone());
    let q = Density::pushforward(Density::student_t(0.0, 0.3, 5.0)?, flow);
    grid.iter()
        .map(|&y| {
            Ok(TransformedDensityRow {
                y,
                log_p_y: p.log_pdf(y)?,
                log_q_y: q.log_pdf(y)?,
            })
        })
        .collect()
}

/// Total mass of the two transformed densities over the flow image,
/// integrated by quadrature; both should come back as 1.
pub fn transformed_density_mass(theta: f64, b: f64) -> Result<(f64, f64)> {
    let flow = Flow::arctan(theta, b, ArctanPrefactor::MatchTransform)?;
    let (lo, hi) = flow.image();
    let p = Density::pushforward(Density::student_t(theta, 0.3, 5.0)?, flow.clone());
    let q = Density::pushforward(Density::student_t(0.0, 0.3, 5.0)?, flow);
    // Gauss-Legendre nodes stay strictly inside the open image interval
    let e = ExpectationBackend::quadrature(lo, hi, 4096, QuadratureRule::GaussLegendreComposite)?;
    let mass_p = e.expect(&p, |_| Ok(1.0))?.value;
    let mass_q = e.expect(&q, |_| Ok(1.0))?.value;
    Ok((mass_p, mass_q))
}

/// How the estimation loop differentiates through the preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMode {
    /// Freeze the flow at the current theta; differentiate the model
    /// location only (stop-gradient updates).
    PlugIn,
    /// Move the flow with the model: the gradient of the plotted curve.
    Full,
}

impl std::fmt::Display for GradMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GradMode::PlugIn => f.write_str("plug-in"),
            GradMode::Full => f.write_str("full"),
        }
    }
}

impl std::str::FromStr for GradMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plug-in" | "plug_in" => Ok(GradMode::PlugIn),
            "full" => Ok(GradMode::Full),
            other => Err(Error::Parse(format!(
                "unknown grad mode '{other}' (expected plug-in or full)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceStep {
    pub iter: usize,
    pub theta: f64,
    pub loss: f64,
    pub grad: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimationTrace {
    pub steps: Vec<TraceStep>,
    pub final_theta: f64,
    pub converged: bool,
    pub diverged: bool,
}

const GRAD_FD_STEP: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-4;
const DIVERGENCE_BOUND: f64 = 1e3;

/// Gradient descent on one objective. Each step records (theta, loss, grad)
/// before updating theta <- theta - lr * grad; stops when |grad| < 1e-4,
/// the iteration budget runs out, or |theta| exceeds 1e3 (diverged).
pub fn estimate_theta(
    source: &DataSource,
    objective: Objective,
    theta_init: f64,
    lr: f64,
    max_iters: usize,
    grad_mode: GradMode,
) -> Result<EstimationTrace> {
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::InvalidParam(format!(
            "learning rate must be > 0, got {lr}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParam("max_iters must be >= 1".into()));
    }
    let spec = SweepSpec::default();
    let (q, e) = backend_for(source, &spec)?;

    let loss_at = |theta_model: f64, theta_flow: f64| -> Result<f64> {
        objective_loss(objective, theta_model, theta_flow, &spec, &q, &e)
    };

    let mut theta = theta_init;
    let mut steps = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    for iter in 0..max_iters {
        let h = GRAD_FD_STEP;
        let grad = match grad_mode {
            GradMode::PlugIn => {
                (loss_at(theta + h, theta)? - loss_at(theta - h, theta)?) / (2.0 * h)
            }
            GradMode::Full => {
                (loss_at(theta + h, theta + h)? - loss_at(theta - h, theta - h)?) / (2.0 * h)
            }
        };
        let loss = loss_at(theta, theta)?;
        steps.push(TraceStep {
            iter,
            theta,
            loss,
            grad,
        });
        if grad.abs() < GRAD_TOL {
            converged = true;
            break;
        }
        theta -= lr * grad;
        if theta.abs() > DIVERGENCE_BOUND {
            diverged = true;
            break;
        }
    }
    Ok(EstimationTrace {
        steps,
        final_theta: theta,
        converged,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::golden_dataset;
    use crate::divergences::fisher_divergence;

    fn quick_spec(lo: f64, hi: f64, step: f64) -> SweepSpec {
        SweepSpec {
            theta_lo: lo,
            theta_hi: hi,
            step,
            ..SweepSpec::default()
        }
    }

    fn q_density() -> DataSource {
        DataSource::Density(Density::student_t(0.0, 0.3, 5.0).unwrap())
    }

    #[test]
    fn grid_is_inclusive_and_evenly_spaced() {
        let spec = quick_spec(-1.0, 1.0, 0.5);
        let g = spec.grid();
        assert_eq!(g.len(), 5);
        assert!((g[0] + 1.0).abs() < 1e-15 && (g[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_single_point_grid() {
        // single point: losses computed, no gradients anywhere
        let spec = quick_spec(0.0, 0.0, 0.01);
        let table = run_sweep(&spec, &q_density()).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].grads.iter().all(|g| g.is_none()));
        // q = p at theta 0: the SM row sits at its integration-by-parts
        // offset below Fisher (= 0 here)
        let q = Density::student_t(0.0, 0.3, 5.0).unwrap();
        let e = ExpectationBackend::default_quadrature(&q, 2048).unwrap();
        assert!(fisher_divergence(&q, &q, &e).unwrap().value.abs() < 1e-12);
        let sm_col = table.objective_index(Objective::Sm).unwrap();
        let expected_sm = score_matching_loss(&q, &q, &e).unwrap().value;
        assert!((table.rows[0].losses[sm_col] - expected_sm).abs() < 1e-12);
        assert!(expected_sm < 0.0);
        // region_width demands a gradient column
        assert!(region_width(&table, Objective::Sm, 1.0).is_err());
    }

    #[test]
    fn sweep_gradients_reconstruct_losses() {
        let spec = quick_spec(-0.5, 0.5, 0.05);
        let table = run_sweep(&spec, &q_density()).unwrap();
        let j = table.objective_index(Objective::DsmManual).unwrap();
        for i in 1..table.rows.len() - 1 {
            let fd = (table.rows[i + 1].losses[j] - table.rows[i - 1].losses[j]) / (2.0 * 0.05);
            assert!((table.rows[i].grads[j].unwrap() - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn sweep_rejects_bad_specs() {
        assert!(run_sweep(&quick_spec(1.0, -1.0, 0.1), &q_density()).is_err());
        assert!(run_sweep(&quick_spec(-1.0, 1.0, -0.1), &q_density()).is_err());
        let mut spec = quick_spec(-1.0, 1.0, 0.1);
        spec.objectives.clear();
        assert!(run_sweep(&spec, &q_density()).is_err());
    }

    #[test]
    fn sm_landscape_has_walls_and_central_minimum() {
        let spec = quick_spec(-3.0, 3.0, 0.05);
        let table = run_sweep(&spec, &q_density()).unwrap();
        let maxima = table.interior_local_maxima(Objective::Sm).unwrap();
        let minima = table.interior_local_minima(Objective::Sm).unwrap();
        assert_eq!(maxima.len(), 2, "walls: {maxima:?}");
        assert!(maxima[0] < 0.0 && maxima[1] > 0.0);
        assert_eq!(minima.len(), 1, "minima: {minima:?}");
        assert!(minima[0].abs() < 0.1);
    }

    #[test]
    fn region_width_threshold_extremes() {
        let spec = quick_spec(-2.0, 2.0, 0.05);
        let table = run_sweep(&spec, &q_density()).unwrap();
        // threshold 0: whole grid span (gradient magnitudes are almost
        // everywhere nonzero; touching intervals merge)
        let full = region_width(&table, Objective::DsmGaussian, 0.0).unwrap();
        assert!(
            (full.total_width - 4.0).abs() < 1e-9,
            "width {}",
            full.total_width
        );
        assert!(!full.empty);
        // threshold inf: empty
        let none = region_width(&table, Objective::DsmGaussian, f64::INFINITY).unwrap();
        assert!(none.empty && none.total_width == 0.0);
        assert!(region_width(&table, Objective::DsmGaussian, -1.0).is_err());
    }

    #[test]
    fn region_intervals_sorted_disjoint_and_summed() {
        let spec = quick_spec(-4.0, 4.0, 0.02);
        let table = run_sweep(&spec, &q_density()).unwrap();
        let rep = region_width(&table, Objective::DsmManual, 1.0).unwrap();
        assert!(!rep.empty);
        let mut prev_hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &(lo, hi) in &rep.intervals {
            assert!(lo >= prev_hi && hi > lo, "intervals {:?}", rep.intervals);
            prev_hi = hi;
            sum += hi - lo;
        }
        assert!((sum - rep.total_width).abs() < 1e-12);
    }

    #[test]
    fn transformed_density_table_and_boundary() {
        // the map is centered at the model location; its median lands on 0
        let rows = transformed_density_table(-2.5, 0.6, &[0.0]).unwrap();
        let flow = Flow::arctan(-2.5, 0.6, ArctanPrefactor::MatchTransform).unwrap();
        assert!((flow.forward(-2.5).unwrap() - rows[0].y).abs() < 1e-14);
        assert!(rows[0].log_p_y.is_finite() && rows[0].log_q_y.is_finite());

        // at/beyond the image boundary: OutOfImage
        assert!(matches!(
            transformed_density_table(-2.5, 0.6, &[3.379815563311343]),
            Err(Error::OutOfImage { .. })
        ));
        assert!(transformed_density_table(-2.5, 0.6, &[3.39]).is_err());

        // both transformed densities integrate to 1 over the image
        let (mp, mq) = transformed_density_mass(-2.5, 0.6).unwrap();
        assert!((mp - 1.0).abs() < 1e-4, "mass p_Y = {mp}");
        assert!((mq - 1.0).abs() < 1e-4, "mass q_Y = {mq}");
    }

    #[test]
    fn estimation_converges_at_the_optimum_immediately() {
        // theta_init = 0 on the quadrature backend: gradient ~ 0 at once
        for obj in Objective::ALL {
            let tr = estimate_theta(&q_density(), obj, 0.0, 0.05, 50, GradMode::PlugIn).unwrap();
            assert!(tr.converged, "{obj} did not converge instantly");
            assert_eq!(tr.steps.len(), 1);
            assert!(tr.final_theta.abs() < 1e-12);
        }
    }

    #[test]
    fn estimation_full_gradient_descends_monotonically() {
        let tr = estimate_theta(
            &q_density(),
            Objective::DsmGaussian,
            3.0,
            0.05,
            500,
            GradMode::Full,
        )
        .unwrap();
        assert!(tr.converged, "final theta {}", tr.final_theta);
        assert!(tr.final_theta.abs() < 0.05);
        for w in tr.steps.windows(2).skip(3) {
            assert!(
                w[1].loss <= w[0].loss + 1e-12,
                "loss rose at iter {}: {} -> {}",
                w[1].iter,
                w[0].loss,
                w[1].loss
            );
        }
    }

    #[test]
    fn estimation_sm_stuck_outside_walls() {
        let src = DataSource::Samples(golden_dataset());
        let tr = estimate_theta(&src, Objective::Sm, 3.0, 0.05, 500, GradMode::PlugIn).unwrap();
        assert!(tr.final_theta.abs() > 0.5, "SM escaped: {}", tr.final_theta);
    }

    #[test]
    fn estimation_flags_divergence() {
        // plug-in updates on the recentered manual flow blow up from
        // theta = 3; the trace must say so rather than loop forever
        let src = DataSource::Samples(golden_dataset());
        let tr = estimate_theta(
            &src,
            Objective::DsmManual,
            3.0,
            0.05,
            2000,
            GradMode::PlugIn,
        )
        .unwrap();
        assert!(tr.diverged);
        assert!(tr.final_theta.abs() > DIVERGENCE_BOUND);
    }

    #[test]
    fn robustness_rejects_small_dof() {
        let spec = quick_spec(-1.0, 1.0, 0.5);
        assert!(robustness_sweep(&[2.0], &spec).is_err());
    }

    #[test]
    fn golden_dataset_dsm_manual_has_unique_minimum_near_truth() {
        // the recentered-flow curve stays single-welled on the committed
        // 300-sample dataset, not just under quadrature
        let spec = SweepSpec {
            objectives: vec![Objective::DsmManual],
            ..quick_spec(-3.0, 3.0, 0.01)
        };
        let src = DataSource::Samples(golden_dataset());
        let table = run_sweep(&spec, &src).unwrap();
        let mins = table.interior_local_minima(Objective::DsmManual).unwrap();
        assert_eq!(mins.len(), 1, "minima {mins:?}");
        assert!(mins[0].abs() <= 0.1, "minimum at {}", mins[0]);
    }

    #[test]
    fn golden_dataset_sm_loss_is_finite_with_minimum_near_truth() {
        let spec = SweepSpec {
            objectives: vec![Objective::Sm],
            ..quick_spec(-1.0, 1.0, 0.01)
        };
        let src = DataSource::Samples(golden_dataset());
        let table = run_sweep(&spec, &src).unwrap();
        assert!(table.rows.iter().all(|r| r.losses[0].is_finite()));
        // sampling noise shifts the well slightly; the gradient still
        // vanishes within a few grid steps of zero
        let argmin = table.argmin(Objective::Sm).unwrap();
        assert!(argmin.abs() <= 0.1, "argmin {argmin}");
    }

    #[test]
    fn losses_are_grid_converged() {
        // doubling the quadrature resolution moves no loss by more than
        // 1e-6 relative
        let mut spec = quick_spec(-2.0, 2.0, 0.5);
        spec.n_quad_points = 2048;
        let coarse = run_sweep(&spec, &q_density()).unwrap();
        spec.n_quad_points = 4096;
        let fine = run_sweep(&spec, &q_density()).unwrap();
        for (a, b) in coarse.rows.iter().zip(&fine.rows) {
            for (x, y) in a.losses.iter().zip(&b.losses) {
                assert!(
                    (x - y).abs() <= 1e-6 * (1.0 + x.abs()),
                    "theta {}: {x} vs {y}",
                    a.theta
                );
            }
        }
    }
}
