//! Score-based divergences and their flow-preconditioned variants.
//!
//! With s_p = d/dx log p and Delta = s_p - s_q, the objectives are (all as
//! E_q[...], one-dimensional):
//!
//! * Fisher divergence:        1/2 Delta^2
//! * score matching:           1/2 s_p^2 + s_p'            (= Fisher - C_q)
//! * diffusion Fisher:         1/2 (m Delta)^2
//! * diffusion score matching: 1/2 (m s_p)^2 + (m^2 s_p)'  (= diff. Fisher - C_{q,m})
//! * Stein value at f:         s_p f + f'
//! * diffusion Stein value:    (m s_p) f + (m f)'
//! * Riemannian Fisher:        1/2 Delta^2 / G
//!
//! m is a flow's diffusion coefficient (inverse Jacobian). Preconditioning
//! by m is the same thing as evaluating the plain objective on the
//! flow-transformed densities; the equivalence is exercised heavily in the
//! test and verification suites.

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::expectation::{Expectation, ExpectationBackend};
use crate::flows::Flow;
use crate::numeric::central_diff_auto;
use std::sync::Arc;

/// Largest fraction of q's mass a quadrature window may miss.
pub const MASS_COVERAGE_TOL: f64 = 1e-4;

/// Scalar loss value plus evaluation diagnostics.
#[derive(Debug, Clone)]
pub struct DivergenceResult {
    pub value: f64,
    pub integrand_min: f64,
    pub integrand_max: f64,
    /// Monte Carlo standard error when the backend is a sample set.
    pub std_error: Option<f64>,
    pub backend_info: String,
}

impl DivergenceResult {
    fn from_expectation(e: Expectation, backend: &ExpectationBackend) -> Self {
        Self {
            value: e.value,
            integrand_min: e.integrand_min,
            integrand_max: e.integrand_max,
            std_error: e.std_error,
            backend_info: backend.describe(),
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar test function with its derivative.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    eval: ScalarFn,
    deriv: ScalarFn,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TestFunction({})", self.name)
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
        }
    }

    /// Build from the evaluator alone; the derivative falls back to central
    /// differences.
    pub fn from_eval_fd(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let eval = Arc::new(eval);
        let e2 = Arc::clone(&eval);
        Self {
            name: name.into(),
            eval,
            deriv: Arc::new(move |x| central_diff_auto(|t| e2(t), x)),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }

    pub fn linear() -> Self {
        Self::new("x", |x| x, |_| 1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const {c}"), move |_| c, |_| 0.0)
    }

    pub fn tanh_fn() -> Self {
        Self::new("tanh", f64::tanh, |x| {
            let t = x.tanh();
            1.0 - t * t
        })
    }

    pub fn gaussian_bump() -> Self {
        Self::new(
            "exp(-x^2)",
            |x| (-x * x).exp(),
            |x| -2.0 * x * (-x * x).exp(),
        )
    }

    pub fn rational_bump() -> Self {
        Self::new(
            "1/(1+x^2)",
            |x| 1.0 / (1.0 + x * x),
            |x| {
                let d = 1.0 + x * x;
                -2.0 * x / (d * d)
            },
        )
    }

    pub fn sine_bump() -> Self {
        Self::new(
            "sin(x) exp(-x^2/2)",
            |x| x.sin() * (-0.5 * x * x).exp(),
            |x| (x.cos() - x * x.sin()) * (-0.5 * x * x).exp(),
        )
    }

    pub fn odd_bump() -> Self {
        Self::new(
            "x exp(-x^2)",
            |x| x * (-x * x).exp(),
            |x| (1.0 - 2.0 * x * x) * (-x * x).exp(),
        )
    }

    /// Five bounded smooth functions with vanishing tails, the workhorses of
    /// the Stein-identity checks.
    pub fn bounded_family() -> Vec<Self> {
        vec![
            Self::tanh_fn(),
            Self::gaussian_bump(),
            Self::rational_bump(),
            Self::sine_bump(),
            Self::odd_bump(),
        ]
    }

    /// g(y) = t(T^{-1}(y)), the transformed-space twin of `t`.
    ///
    /// Evaluations must stay strictly inside the flow image; the derivative
    /// is taken by finite differences in y so the pair (evaluator,
    /// derivative) is an independent route, not a chain-rule transcription.
    pub fn compose_inverse(t: &TestFunction, flow: &Flow) -> Self {
        let t = t.clone();
        let flow = flow.clone();
        let name = format!("{} ∘ inverse", t.name);
        Self::from_eval_fd(name, move |y| {
            let x = flow
                .inverse(y)
                .unwrap_or_else(|e| panic!("compose_inverse evaluated outside image: {e}"));
            t.eval(x)
        })
    }
}

/// Strictly positive 1-D metric tensor G(x).
#[derive(Clone)]
pub struct RiemannianMetric {
    pub name: String,
    g: ScalarFn,
}

impl std::fmt::Debug for RiemannianMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RiemannianMetric({})", self.name)
    }
}

impl RiemannianMetric {
    pub fn new(name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            g: Arc::new(g),
        }
    }

    pub fn euclidean() -> Self {
        Self::new("euclidean", |_| 1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const {c}"), move |_| c)
    }

    /// G = m^{-2} built from a flow; the choice that turns the Riemannian
    /// objective into the diffusion one.
    pub fn inverse_diffusion_squared(flow: &Flow) -> Self {
        let flow = flow.clone();
        Self::new("1/m(x)^2", move |x| {
            let m = flow.diffusion(x).expect("diffusion evaluation failed");
            1.0 / (m * m)
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = (self.g)(x);
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonPositiveMetric { x, value: v });
        }
        Ok(v)
    }
}

fn check_coverage(q: &Density, e: &ExpectationBackend) -> Result<()> {
    let gap = e.coverage_gap(q)?;
    if gap > MASS_COVERAGE_TOL {
        return Err(Error::Backend(format!(
            "quadrature range misses {gap:.3e} of q's mass (> {MASS_COVERAGE_TOL:.0e})"
        )));
    }
    Ok(())
}

/// Fisher divergence 1/2 E_q[(s_p - s_q)^2].
pub fn fisher_divergence(
    q: &Density,
    p: &Density,
    e: &ExpectationBackend,
) -> Result<DivergenceResult> {
    check_coverage(q, e)?;
    let exp = e.expect(q, |x| {
        let d = p.score(x)? - q.score(x)?;
        Ok(0.5 * d * d)
    })?;
    Ok(DivergenceResult::from_expectation(exp, e))
}

/// Score matching E_q[1/2 s_p^2 + s_p'], the integration-by-parts form that
/// never touches q's score.
pub fn score_matching_loss(
    q: &Density,
    p: &Density,
    e: &ExpectationBackend,
) -> Result<DivergenceResult> {
    check_coverage(q, e)?;
    let exp = e.expect(q, |x| {
        let s = p.score(x)?;
        Ok(0.5 * s * s + p.score_derivative(x)?)
    })?;
    Ok(DivergenceResult::from_expectation(exp, e))
}

/// Diffusion Fisher divergence 1/2 E_q[(m (s_p - s_q))^2].
pub fn diffusion_fisher(
    q: &Density,
    p: &Density,
    flow: &Flow,
    e: &ExpectationBackend,
) -> Result<DivergenceResult> {
    check_coverage(q, e)?;
    let exp = e.expect(q, |x| {
        let m = flow.diffusion(x)?;
        let d = p.score(x)? - q.score(x)?;
        Ok(0.5 * m * m * d * d)
    })?;
    Ok(DivergenceResult::from_expectation(exp, e))
}

/// Diffusion score matching E_q[1/2 (m s_p)^2 + (m^2 s_p)'].
pub fn dsm_loss(
    q: &Density,
    p: &Density,
    flow: &Flow,
    e: &ExpectationBackend,
) -> Result<DivergenceResult> {
    check_coverage(q, e)?;
    let exp = e.expect(q, |x| dsm_integrand(p, flow, x))?;
    Ok(DivergenceResult::from_expectation(exp, e))
}

pub(crate) fn dsm_integrand(p: &Density, flow: &Flow, x: f64) -> Result<f64> {
    let (m, mp) = flow.diffusion_with_derivative(x)?;
    let s = p.score(x)?;
    let sd = p.score_derivative(x)?;
    Ok(0.5 * m * m * s * s + 2.0 * m * mp * s + m * m * sd)
}

/// Stein value E_q[s_p t + t'] at a fixed test function (no supremum).
pub fn stein_value(
    q: &Density,
    p: &Density,
    t: &TestFunction,
    e: &ExpectationBackend,
) -> Result<DivergenceResult> {
    check_coverage(q, e)?;
    let exp = e.expect(q, |x| Ok(p.score(x)? * t.eval(x) + t.derivative(x)))?;
    Ok(DivergenceResult::from_expectation(exp, e))
}

/// The score difference s_p - s_q, the test function that saturates the
/// Stein objective (proportionality constant fixed at 1).
pub fn optimal_test_function(q: &Density, p: &Density) -> TestFunction {
    let (q1, p1) = (q.clone(), p.clone());
    let (q2, p2) = (q.clone(), p.clone());
    TestFunction::new(
        "score difference",
        move |x| p1.score(x).unwrap() - q1.score(x).unwrap(),
        move |x| p2.score_derivative(x).unwrap() - q2.score_derivative(x).unwrap(),
    )
}

/// Diffusion Stein value E_q[(m s_p) t + (m t)'].
pub fn dsd_value(
    q: &Density,
    p: &Density,
    flow: &Flow,
    t: &TestFunction,
    e: &ExpectationBackend,
) -> Result<DivergenceResult> {
    check_coverage(q, e)?;
    let exp = e.expect(q, |x| stein_operator_pointwise(p, flow, t, x))?;
    Ok(DivergenceResult::from_expectation(exp, e))
}

/// The diffusion Stein operator at a point:
/// (m s_p)(x) t(x) + (m t)'(x) = m s_p t + m' t + m t'.
pub fn stein_operator_pointwise(p: &Density, flow: &Flow, t: &TestFunction, x: f64) -> Result<f64> {
    let (m, mp) = flow.diffusion_with_derivative(x)?;
    Ok(m * p.score(x)? * t.eval(x) + mp * t.eval(x) + m * t.derivative(x))
}

/// The plain Stein operator applied in the transformed space at y = T(x):
/// s_{p_Y}(y) g(y) + g'(y) with g = t ∘ T^{-1}.
///
/// Both derivatives on this route are finite differences in y against the
/// pushforward log-density, so agreement with
/// [`stein_operator_pointwise`] is a two-route check, not an algebraic
/// identity between copies of one formula.
pub fn stein_operator_pointwise_transformed(
    p: &Density,
    flow: &Flow,
    t: &TestFunction,
    x: f64,
) -> Result<f64> {
    let y = flow.forward(x)?;
    let p_y = Density::pushforward(p.clone(), flow.clone());
    let h = f64::EPSILON.cbrt() * (1.0 + y.abs());
    let score_fd = (p_y.log_pdf(y + h)? - p_y.log_pdf(y - h)?) / (2.0 * h);
    let g = |yy: f64| -> Result<f64> { Ok(t.eval(flow.inverse(yy)?)) };
    let g_prime_fd = (g(y + h)? - g(y - h)?) / (2.0 * h);
    Ok(score_fd * g(y)? + g_prime_fd)
}

/// Riemannian form 1/2 E_q[Delta^2 / G].
pub fn riemannian_fisher(
    q: &Density,
    p: &Density,
    metric: &RiemannianMetric,
    e: &ExpectationBackend,
) -> Result<DivergenceResult> {
    check_coverage(q, e)?;
    let exp = e.expect(q, |x| {
        let d = p.score(x)? - q.score(x)?;
        Ok(0.5 * d * d / metric.eval(x)?)
    })?;
    Ok(DivergenceResult::from_expectation(exp, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::SampleSet;
    use crate::expectation::QuadratureRule;
    use crate::flows::ArctanPrefactor;

    fn qt(theta: f64) -> Density {
        Density::student_t(theta, 0.3, 5.0).unwrap()
    }

    fn quad(n: usize) -> ExpectationBackend {
        ExpectationBackend::default_quadrature(&qt(0.0), n).unwrap()
    }

    fn wide_quad(n: usize) -> ExpectationBackend {
        ExpectationBackend::quadrature(-60.0, 60.0, n, QuadratureRule::GaussLegendreComposite)
            .unwrap()
    }

    #[test]
    fn fisher_gaussian_closed_forms() {
        let q = Density::gaussian(0.0, 1.0).unwrap();
        let e = ExpectationBackend::default_quadrature(&q, 1024).unwrap();
        let zero = fisher_divergence(&q, &q, &e).unwrap().value;
        assert!(zero.abs() < 1e-14);
        // scores differ by the constant mu: F = mu^2/2
        for mu in [0.5, 1.0, 2.5] {
            let p = Density::gaussian(mu, 1.0).unwrap();
            let f = fisher_divergence(&q, &p, &e).unwrap().value;
            assert!((f - mu * mu / 2.0).abs() < 1e-9, "mu={mu} F={f}");
        }
    }

    #[test]
    fn fisher_student_t_pair_against_resolution_and_rule_change() {
        let e = ExpectationBackend::quadrature(
            -20.0,
            20.0,
            2048,
            QuadratureRule::GaussLegendreComposite,
        )
        .unwrap();
        let v = fisher_divergence(&qt(0.0), &qt(1.0), &e).unwrap().value;
        // oracle 1: same integral on a dense trapezoid grid
        let tz =
            ExpectationBackend::quadrature(-20.0, 20.0, 65536, QuadratureRule::Trapezoid).unwrap();
        let v_tz = fisher_divergence(&qt(0.0), &qt(1.0), &tz).unwrap().value;
        assert!(
            (v - v_tz).abs() <= 1e-6 * v.abs(),
            "GL {v} vs trapezoid {v_tz}"
        );
        // oracle 2: double resolution
        let e2 = ExpectationBackend::quadrature(
            -20.0,
            20.0,
            4096,
            QuadratureRule::GaussLegendreComposite,
        )
        .unwrap();
        let v2 = fisher_divergence(&qt(0.0), &qt(1.0), &e2).unwrap().value;
        assert!((v - v2).abs() <= 1e-9 * v.abs());
        assert!((v - 12.604_557_128_974).abs() < 1e-6 * 12.6);
    }

    #[test]
    fn fisher_rejects_uncovered_range() {
        let narrow =
            ExpectationBackend::quadrature(-1.0, 1.0, 128, QuadratureRule::GaussLegendreComposite)
                .unwrap();
        assert!(matches!(
            fisher_divergence(&qt(0.0), &qt(1.0), &narrow),
            Err(Error::Backend(_))
        ));
    }

    #[test]
    fn score_matching_gaussian_closed_form() {
        let q = Density::gaussian(0.0, 1.0).unwrap();
        let e = ExpectationBackend::default_quadrature(&q, 1024).unwrap();
        for mu in [0.0, 1.0, 3.0] {
            let p = Density::gaussian(mu, 1.0).unwrap();
            let sm = score_matching_loss(&q, &p, &e).unwrap().value;
            assert!((sm - (mu * mu - 1.0) / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn integration_by_parts_constant_in_location() {
        // F - SM and F_m - DSM must not move with p's location when the
        // flow is held fixed.
        let e = wide_quad(8192);
        let flow = Flow::arctan(0.0, 0.6, ArctanPrefactor::MatchDiffusion).unwrap();
        let mut c_sm = Vec::new();
        let mut c_dsm = Vec::new();
        for theta in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            let p = qt(theta);
            let f = fisher_divergence(&qt(0.0), &p, &e).unwrap().value;
            let sm = score_matching_loss(&qt(0.0), &p, &e).unwrap().value;
            c_sm.push(f - sm);
            let fm = diffusion_fisher(&qt(0.0), &p, &flow, &e).unwrap().value;
            let dsm = dsm_loss(&qt(0.0), &p, &flow, &e).unwrap().value;
            c_dsm.push(fm - dsm);
        }
        let spread = |v: &[f64]| {
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        assert!(spread(&c_sm) < 1e-5, "F - SM spread {}", spread(&c_sm));
        assert!(spread(&c_dsm) < 1e-5, "F_m - DSM spread {}", spread(&c_dsm));
    }

    #[test]
    fn diffusion_fisher_identity_flow_reduces_to_fisher() {
        let e = quad(2048);
        let id = Flow::identity();
        let a = fisher_divergence(&qt(0.0), &qt(0.7), &e).unwrap().value;
        let b = diffusion_fisher(&qt(0.0), &qt(0.7), &id, &e).unwrap().value;
        assert_eq!(a, b);
        // q = p with a nontrivial flow is 0
        let fl = Flow::arctan(0.7, 0.6, ArctanPrefactor::MatchDiffusion).unwrap();
        assert!(diffusion_fisher(&qt(0.3), &qt(0.3), &fl, &e).unwrap().value < 1e-10);
    }

    #[test]
    fn dsm_identity_flow_reduces_to_score_matching() {
        let e = quad(2048);
        let id = Flow::identity();
        let a = score_matching_loss(&qt(0.0), &qt(0.7), &e).unwrap().value;
        let b = dsm_loss(&qt(0.0), &qt(0.7), &id, &e).unwrap().value;
        assert!((a - b).abs() < 1e-13 * (1.0 + a.abs()));
    }

    #[test]
    fn dsm_single_point_gaussian() {
        // backend concentrated at x = 0: 1/2 * 0 + d/dx(s_p) = -1
        let single = ExpectationBackend::monte_carlo(SampleSet {
            values: vec![0.0],
            seed: 0,
            label: "x=0".into(),
        })
        .unwrap();
        let p = Density::gaussian(0.0, 1.0).unwrap();
        let v = dsm_loss(&p, &p, &Flow::identity(), &single).unwrap().value;
        assert!((v + 1.0).abs() < 1e-14);
    }

    #[test]
    fn equivalence_diffusion_fisher_vs_pushforward() {
        // the central identity: F_m(q, p) = F(q_Y, p_Y) with m = 1/T'
        let e = quad(2048);
        for flow in [
            Flow::arctan(1.0, 0.6, ArctanPrefactor::MatchDiffusion).unwrap(),
            Flow::arctan(-0.4, 1.3, ArctanPrefactor::MatchTransform).unwrap(),
            Flow::gaussian_cdf_map(qt(1.0)).unwrap(),
        ] {
            let lhs = diffusion_fisher(&qt(0.0), &qt(1.0), &flow, &e)
                .unwrap()
                .value;
            let qy = Density::pushforward(qt(0.0), flow.clone());
            let py = Density::pushforward(qt(1.0), flow.clone());
            let ey = e.map_through(&flow).unwrap();
            let rhs = fisher_divergence(&qy, &py, &ey).unwrap().value;
            assert!(
                (lhs - rhs).abs() <= 1e-5 * (1.0 + lhs.abs()),
                "flow {flow:?}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn stein_identities_and_linear_score() {
        let q = Density::gaussian(0.0, 1.0).unwrap();
        let e = ExpectationBackend::default_quadrature(&q, 1024).unwrap();
        // E_q[-x * x + 1] = 0
        let v = stein_value(&q, &q, &TestFunction::linear(), &e)
            .unwrap()
            .value;
        assert!(v.abs() < 1e-12);
        // constant test function exposes the mean shift
        let p = Density::gaussian(0.7, 1.0).unwrap();
        let v = stein_value(&q, &p, &TestFunction::constant(1.0), &e)
            .unwrap()
            .value;
        assert!((v - 0.7).abs() < 1e-10);
    }

    #[test]
    fn optimal_test_function_doubles_fisher() {
        let e = quad(2048);
        for theta in [-1.5, 0.4, 2.0] {
            let p = qt(theta);
            let t = optimal_test_function(&qt(0.0), &p);
            let sv = stein_value(&qt(0.0), &p, &t, &e).unwrap().value;
            let f = fisher_divergence(&qt(0.0), &p, &e).unwrap().value;
            assert!(
                (sv - 2.0 * f).abs() <= 1e-6 * (1.0 + 2.0 * f),
                "theta={theta}: stein {sv} vs 2F {}",
                2.0 * f
            );
            // pointwise it is exactly the score difference
            let x = 0.3;
            let expect = p.score(x).unwrap() - qt(0.0).score(x).unwrap();
            assert_eq!(t.eval(x), expect);
        }
        // p = q collapses to the zero function
        let t = optimal_test_function(&qt(0.0), &qt(0.0));
        assert_eq!(t.eval(1.23), 0.0);
    }

    #[test]
    fn dsd_reduces_and_vanishes() {
        let e = quad(2048);
        let t = TestFunction::tanh_fn();
        // identity flow: DSD == Stein value, same arithmetic
        let a = stein_value(&qt(0.0), &qt(1.0), &t, &e).unwrap().value;
        let b = dsd_value(&qt(0.0), &qt(1.0), &Flow::identity(), &t, &e)
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-13 * (1.0 + a.abs()));
        // diffusion Stein identity at p = q
        let flow = Flow::arctan(0.0, 0.6, ArctanPrefactor::MatchDiffusion).unwrap();
        let wide = wide_quad(8192);
        let v = dsd_value(&qt(0.0), &qt(0.0), &flow, &t, &wide)
            .unwrap()
            .value;
        assert!(v.abs() < 1e-6, "diffusion Stein identity broke: {v}");
    }

    #[test]
    fn dsd_matches_transformed_space_stein() {
        // two-route check through the pushforward
        let e = quad(2048);
        let t = TestFunction::tanh_fn();
        let flow = Flow::arctan(0.5, 0.6, ArctanPrefactor::MatchDiffusion).unwrap();
        let lhs = dsd_value(&qt(0.0), &qt(1.0), &flow, &t, &e).unwrap().value;
        let qy = Density::pushforward(qt(0.0), flow.clone());
        let py = Density::pushforward(qt(1.0), flow.clone());
        let g = TestFunction::compose_inverse(&t, &flow);
        let ey = e.map_through(&flow).unwrap();
        let rhs = stein_value(&qy, &py, &g, &ey).unwrap().value;
        assert!(
            (lhs - rhs).abs() <= 1e-5 * (1.0 + lhs.abs()),
            "x-space {lhs} vs y-space {rhs}"
        );
    }

    #[test]
    fn stein_operator_pointwise_both_spaces() {
        // trivial anchors
        let p = Density::gaussian(0.0, 1.0).unwrap();
        let v =
            stein_operator_pointwise(&p, &Flow::identity(), &TestFunction::linear(), 1.0).unwrap();
        assert!(v.abs() < 1e-14);
        let z = stein_operator_pointwise(&p, &Flow::identity(), &TestFunction::constant(0.0), 0.7)
            .unwrap();
        assert_eq!(z, 0.0);

        // two-route agreement on a Student-t / arctan configuration
        let p = qt(0.0);
        let flow = Flow::arctan(0.2, 0.6, ArctanPrefactor::MatchDiffusion).unwrap();
        let t = TestFunction::tanh_fn();
        for x in [-1.1, 0.0, 0.7, 1.9] {
            let a = stein_operator_pointwise(&p, &flow, &t, x).unwrap();
            let b = stein_operator_pointwise_transformed(&p, &flow, &t, x).unwrap();
            assert!(
                (a - b).abs() <= 1e-6 * (1.0 + a.abs()),
                "x={x}: x-space {a} vs y-space {b}"
            );
        }
    }

    #[test]
    fn riemannian_metric_choices() {
        let e = quad(2048);
        let (q, p) = (qt(0.0), qt(1.0));
        let f = fisher_divergence(&q, &p, &e).unwrap().value;
        // Euclidean metric collapses to Fisher
        let r = riemannian_fisher(&q, &p, &RiemannianMetric::euclidean(), &e)
            .unwrap()
            .value;
        assert!((r - f).abs() < 1e-12 * (1.0 + f));
        // constant metric 4 scales by 1/4
        let r4 = riemannian_fisher(&q, &p, &RiemannianMetric::constant(4.0), &e)
            .unwrap()
            .value;
        assert!((r4 - f / 4.0).abs() < 1e-12 * (1.0 + f));
        // G = m^-2 recovers the diffusion objective
        let flow = Flow::arctan(1.0, 0.6, ArctanPrefactor::MatchDiffusion).unwrap();
        let g = RiemannianMetric::inverse_diffusion_squared(&flow);
        let r = riemannian_fisher(&q, &p, &g, &e).unwrap().value;
        let dfm = diffusion_fisher(&q, &p, &flow, &e).unwrap().value;
        assert!((r - dfm).abs() <= 1e-8 * (1.0 + dfm.abs()), "{r} vs {dfm}");
    }

    #[test]
    fn riemannian_rejects_nonpositive_metric() {
        let e = quad(128);
        let bad = RiemannianMetric::new("x", |x| x); // negative on half the line
        assert!(matches!(
            riemannian_fisher(&qt(0.0), &qt(1.0), &bad, &e),
            Err(Error::NonPositiveMetric { .. })
        ));
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature_within_3_se() {
        let q = qt(0.0);
        let set = q.sample(1_000_000, 2024).unwrap();
        let mc = ExpectationBackend::monte_carlo(set).unwrap();
        let mcr = fisher_divergence(&q, &qt(1.0), &mc).unwrap();
        let qr = fisher_divergence(&q, &qt(1.0), &quad(2048)).unwrap();
        let se = mcr.std_error.unwrap();
        assert!(
            (mcr.value - qr.value).abs() <= 3.0 * se,
            "MC {} vs quad {} (3se = {})",
            mcr.value,
            qr.value,
            3.0 * se
        );
    }

    #[test]
    fn test_function_derivatives_match_fd() {
        for t in TestFunction::bounded_family() {
            for x in [-2.0, -0.3, 0.0, 0.9, 2.4] {
                let fd = central_diff_auto(|u| t.eval(u), x);
                let an = t.derivative(x);
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                    "{}: x={x} fd={fd} analytic={an}",
                    t.name
                );
            }
        }
    }
}
