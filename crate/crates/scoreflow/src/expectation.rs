//! Expectation backends: E_q[f] by deterministic quadrature or by a fixed
//! Monte Carlo sample set.

use crate::densities::{Density, SampleSet};
use crate::error::{Error, Result};
use crate::flows::Flow;
use crate::numeric::gauss_legendre;
use serde::{Deserialize, Serialize};

const PANEL_ORDER: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    GaussLegendreComposite,
    Trapezoid,
}

impl std::fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuadratureRule::GaussLegendreComposite => write!(f, "gauss_legendre_composite"),
            QuadratureRule::Trapezoid => write!(f, "trapezoid"),
        }
    }
}

/// Precomputed integration grid on [lo, hi].
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub lo: f64,
    pub hi: f64,
    pub rule: QuadratureRule,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    fn new(lo: f64, hi: f64, n_points: usize, rule: QuadratureRule) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParam(format!(
                "bad quadrature range [{lo}, {hi}]"
            )));
        }
        if n_points < 64 {
            return Err(Error::InvalidParam(format!(
                "quadrature needs at least 64 points, got {n_points}"
            )));
        }
        let (points, weights) = match rule {
            QuadratureRule::GaussLegendreComposite => {
                let panels = n_points.div_ceil(PANEL_ORDER);
                let (xs, ws) = gauss_legendre(PANEL_ORDER);
                let width = (hi - lo) / panels as f64;
                let mut points = Vec::with_capacity(panels * PANEL_ORDER);
                let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
                for p in 0..panels {
                    let a = lo + p as f64 * width;
                    let mid = a + 0.5 * width;
                    for (x, w) in xs.iter().zip(&ws) {
                        points.push(mid + 0.5 * width * x);
                        weights.push(0.5 * width * w);
                    }
                }
                (points, weights)
            }
            QuadratureRule::Trapezoid => {
                let h = (hi - lo) / (n_points - 1) as f64;
                let points: Vec<f64> = (0..n_points).map(|i| lo + i as f64 * h).collect();
                let mut weights = vec![h; n_points];
                weights[0] = 0.5 * h;
                weights[n_points - 1] = 0.5 * h;
                (points, weights)
            }
        };
        Ok(Self {
            lo,
            hi,
            rule,
            points,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Result of one expectation evaluation, with diagnostics for the
/// divergence layer.
#[derive(Debug, Clone)]
pub struct Expectation {
    pub value: f64,
    pub integrand_min: f64,
    pub integrand_max: f64,
    /// Monte Carlo standard error; absent for quadrature.
    pub std_error: Option<f64>,
    pub n: usize,
}

/// Evaluates E_q[f] either exactly (weighted quadrature against q's pdf) or
/// empirically (mean over a sample set drawn from q).
#[derive(Debug, Clone)]
pub enum ExpectationBackend {
    MonteCarlo(SampleSet),
    Quadrature(QuadratureGrid),
}

impl ExpectationBackend {
    pub fn monte_carlo(samples: SampleSet) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParam("sample set is empty".into()));
        }
        Ok(ExpectationBackend::MonteCarlo(samples))
    }

    pub fn quadrature(lo: f64, hi: f64, n_points: usize, rule: QuadratureRule) -> Result<Self> {
        Ok(ExpectationBackend::Quadrature(QuadratureGrid::new(
            lo, hi, n_points, rule,
        )?))
    }

    /// Default rule over the density's own integration window.
    pub fn default_quadrature(q: &Density, n_points: usize) -> Result<Self> {
        let (lo, hi) = q.default_integration_range();
        Self::quadrature(lo, hi, n_points, QuadratureRule::GaussLegendreComposite)
    }

    pub fn describe(&self) -> String {
        match self {
            ExpectationBackend::MonteCarlo(s) => {
                format!("monte_carlo n={} seed={}", s.len(), s.seed)
            }
            ExpectationBackend::Quadrature(g) => format!(
                "quadrature[{}] on [{}, {}] n={}",
                g.rule,
                g.lo,
                g.hi,
                g.len()
            ),
        }
    }

    /// Mass of q that a quadrature window fails to cover (0 for Monte Carlo).
    pub fn coverage_gap(&self, q: &Density) -> Result<f64> {
        match self {
            ExpectationBackend::MonteCarlo(_) => Ok(0.0),
            ExpectationBackend::Quadrature(g) => Ok(q.cdf(g.lo)? + q.survival(g.hi)?),
        }
    }

    /// E_q[f] with min/max diagnostics of the integrand f itself.
    pub fn expect<F>(&self, q: &Density, f: F) -> Result<Expectation>
    where
        F: Fn(f64) -> Result<f64>,
    {
        match self {
            ExpectationBackend::MonteCarlo(samples) => {
                let n = samples.len();
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for &x in &samples.values {
                    let v = f(x)?;
                    sum += v;
                    sum_sq += v * v;
                    min = min.min(v);
                    max = max.max(v);
                }
                let mean = sum / n as f64;
                let var = (sum_sq / n as f64 - mean * mean).max(0.0);
                let se = (var / n as f64).sqrt();
                Ok(Expectation {
                    value: mean,
                    integrand_min: min,
                    integrand_max: max,
                    std_error: Some(se),
                    n,
                })
            }
            ExpectationBackend::Quadrature(grid) => {
                let mut sum = 0.0;
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for (&x, &w) in grid.points.iter().zip(&grid.weights) {
                    let v = f(x)?;
                    sum += w * q.pdf(x)? * v;
                    min = min.min(v);
                    max = max.max(v);
                }
                Ok(Expectation {
                    value: sum,
                    integrand_min: min,
                    integrand_max: max,
                    std_error: None,
                    n: grid.len(),
                })
            }
        }
    }

    /// Push the backend through an increasing flow so the same expectation
    /// can be taken in the transformed space: quadrature windows map their
    /// endpoints, Monte Carlo maps each sample.
    pub fn map_through(&self, flow: &Flow) -> Result<Self> {
        match self {
            ExpectationBackend::MonteCarlo(s) => {
                let values = s
                    .values
                    .iter()
                    .map(|&x| flow.forward(x))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(ExpectationBackend::MonteCarlo(SampleSet {
                    values,
                    seed: s.seed,
                    label: format!("{} (mapped)", s.label),
                }))
            }
            ExpectationBackend::Quadrature(g) => {
                let lo = flow.forward(g.lo)?;
                let hi = flow.forward(g.hi)?;
                Self::quadrature(lo, hi, g.len(), g.rule)
            }
        }
    }
}
