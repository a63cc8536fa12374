//! Numeric self-checks: every structural identity the library is built on,
//! runnable as one suite (the CLI's `verify` subcommand and the acceptance
//! tests both drive these).
//!
//! All randomized configurations draw from fixed-seed streams, so a verify
//! run is deterministic.

use crate::densities::Density;
use crate::divergences::{
    diffusion_fisher, dsd_value, dsm_loss, fisher_divergence, optimal_test_function,
    riemannian_fisher, score_matching_loss, stein_operator_pointwise,
    stein_operator_pointwise_transformed, stein_value, RiemannianMetric, TestFunction,
};
use crate::error::Result;
use crate::expectation::{ExpectationBackend, QuadratureRule};
use crate::flows::{ArctanPrefactor, Flow};
use crate::ode::{
    drift_cubic_damped, drift_linear, drift_tanh, euler_pushforward_check, instantaneous_change,
};
use crate::rng::UniformStream;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn t_density(loc: f64) -> Density {
    Density::student_t(loc, 0.3, 5.0).expect("valid parameters")
}

fn default_backend() -> ExpectationBackend {
    ExpectationBackend::default_quadrature(&t_density(0.0), 2048).expect("valid backend")
}

fn wide_backend() -> ExpectationBackend {
    ExpectationBackend::quadrature(-60.0, 60.0, 8192, QuadratureRule::GaussLegendreComposite)
        .expect("valid backend")
}

/// A randomized family of flows for the equivalence checks.
fn flow_menu(stream: &mut UniformStream, theta_p: f64) -> Result<Flow> {
    let pick = (stream.next_uniform() * 5.0) as usize;
    let u = stream.next_uniform();
    let v = stream.next_uniform();
    Ok(match pick {
        0 => Flow::arctan(
            2.0 * u - 1.0,
            0.4 + 1.6 * v,
            ArctanPrefactor::MatchDiffusion,
        )?,
        1 => Flow::arctan(
            2.0 * u - 1.0,
            0.4 + 1.6 * v,
            ArctanPrefactor::MatchTransform,
        )?,
        2 => Flow::gaussian_cdf_map(t_density(theta_p))?,
        3 => Flow::affine(0.5 + 2.0 * u, 2.0 * v - 1.0)?,
        _ => Flow::euler_step(drift_tanh(), 0.01 + 0.29 * u)?,
    })
}

/// Scores match finite differences of the log density at random interior
/// points, for all three density kinds.
pub fn check_density_scores() -> Result<CheckResult> {
    let mut stream = UniformStream::new(101);
    let arctan = Flow::arctan(0.2, 0.6, ArctanPrefactor::MatchTransform)?;
    let densities: Vec<Density> = vec![
        t_density(0.0),
        Density::student_t(-1.0, 0.7, 12.0)?,
        Density::gaussian(0.4, 1.3)?,
        Density::pushforward(t_density(0.0), arctan),
        Density::pushforward(t_density(0.3), Flow::gaussian_cdf_map(t_density(0.3))?),
    ];
    let mut worst: f64 = 0.0;
    for d in &densities {
        for _ in 0..200 {
            // interior point via the density's own quantile
            let u = 0.002 + 0.996 * stream.next_uniform();
            let x = d.quantile(u)?;
            let h = 1e-5 * (1.0 + x.abs());
            let fd = (d.log_pdf(x + h)? - d.log_pdf(x - h)?) / (2.0 * h);
            let s = d.score(x)?;
            worst = worst.max((fd - s).abs() / (1.0 + s.abs()));
        }
    }
    Ok(CheckResult::new(
        "density scores vs finite differences",
        worst <= 1e-5,
        format!("max relative deviation {worst:.3e} (tol 1e-5)"),
    ))
}

/// quantile(cdf(x)) = x and cdf(quantile(u)) = u on the central mass.
pub fn check_quantile_cdf_identity() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for d in [
        t_density(0.0),
        Density::gaussian(-0.5, 2.0)?,
        Density::student_t(1.0, 1.0, 3.0)?,
    ] {
        let mut u = 5e-5;
        while u < 1.0 - 5e-5 {
            let x = d.quantile(u)?;
            worst = worst.max((d.cdf(x)? - u).abs());
            let x2 = d.quantile(d.cdf(x)?)?;
            worst = worst.max((x2 - x).abs() / (1.0 + x.abs()));
            u += 0.0117;
        }
    }
    Ok(CheckResult::new(
        "quantile / cdf round trip",
        worst <= 1e-8,
        format!("max deviation {worst:.3e} (tol 1e-8)"),
    ))
}

/// Densities integrate to 1: base kinds over [loc - 50 s, loc + 50 s],
/// pushforwards over their flow image.
pub fn check_normalization() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for (d, lo, hi, tol) in [
        (t_density(0.0), -15.0, 15.0, 1e-6),
        (Density::gaussian(0.3, 0.9)?, -44.7, 45.3, 1e-6),
    ] {
        let e =
            ExpectationBackend::quadrature(lo, hi, 4096, QuadratureRule::GaussLegendreComposite)?;
        let mass = e.expect(&d, |_| Ok(1.0))?.value;
        worst = worst.max((mass - 1.0).abs() / tol * 1e-5);
        if (mass - 1.0).abs() > tol {
            return Ok(CheckResult::new(
                "density normalization",
                false,
                format!("mass {mass} is off by more than {tol:.0e}"),
            ));
        }
    }
    // pushforward with bounded image
    let flow = Flow::arctan(-2.5, 0.6, ArctanPrefactor::MatchTransform)?;
    let (lo, hi) = flow.image();
    let push = Density::pushforward(t_density(-2.5), flow);
    let e = ExpectationBackend::quadrature(lo, hi, 4096, QuadratureRule::GaussLegendreComposite)?;
    let mass = e.expect(&push, |_| Ok(1.0))?.value;
    let ok = (mass - 1.0).abs() <= 1e-5;
    Ok(CheckResult::new(
        "density normalization",
        ok,
        format!("pushforward mass {mass:.12} (tol 1e-5), base deviations <= {worst:.3e}"),
    ))
}

/// Flow round trips, monotonicity, diffusion positivity and the inverse
/// function theorem over 500 central-mass grid points.
pub fn check_flow_round_trips() -> Result<CheckResult> {
    let q = t_density(0.0);
    let (x_lo, x_hi) = (q.quantile(0.0005)?, q.quantile(0.9995)?);
    let flows = vec![
        Flow::identity(),
        Flow::affine(1.7, -0.4)?,
        Flow::arctan(0.4, 0.6, ArctanPrefactor::MatchDiffusion)?,
        Flow::arctan(-0.2, 1.1, ArctanPrefactor::MatchTransform)?,
        Flow::gaussian_cdf_map(t_density(0.4))?,
        Flow::euler_step(drift_tanh(), 0.05)?,
    ];
    let mut worst_rt: f64 = 0.0;
    let mut worst_ift: f64 = 0.0;
    for f in &flows {
        let mut prev_y = f64::NEG_INFINITY;
        for i in 0..500 {
            let x = x_lo + (x_hi - x_lo) * i as f64 / 499.0;
            let y = f.forward(x)?;
            if y <= prev_y {
                return Ok(CheckResult::new(
                    "flow round trips / monotonicity",
                    false,
                    format!("forward not increasing at x = {x}"),
                ));
            }
            prev_y = y;
            let back = f.inverse(y)?;
            worst_rt = worst_rt.max((back - x).abs() / (1.0 + x.abs()));
            let m = f.diffusion(x)?;
            if m.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Ok(CheckResult::new(
                    "flow round trips / monotonicity",
                    false,
                    format!("diffusion not positive at x = {x}"),
                ));
            }
            // inverse function theorem: d inverse/dy = 1/jacobian
            if i % 25 == 0 {
                let h = 1e-6 * (1.0 + y.abs());
                let d_inv = (f.inverse(y + h)? - f.inverse(y - h)?) / (2.0 * h);
                let expect = 1.0 / f.jacobian(x)?;
                worst_ift = worst_ift.max((d_inv - expect).abs() / (1.0 + expect.abs()));
            }
        }
    }
    let ok = worst_rt <= 1e-9 && worst_ift <= 1e-6;
    Ok(CheckResult::new(
        "flow round trips / monotonicity",
        ok,
        format!("round trip {worst_rt:.3e} (tol 1e-9), inverse-slope {worst_ift:.3e} (tol 1e-6)"),
    ))
}

/// Preconditioning by m equals the plain divergence on the transformed
/// densities, over randomized (theta_q, theta_p, flow) configurations.
pub fn check_flow_equivalence(configs: usize) -> Result<CheckResult> {
    let mut stream = UniformStream::new(7);
    let e = default_backend();
    let mut worst: f64 = 0.0;
    for _ in 0..configs {
        let theta_q = 3.0 * stream.next_uniform() - 1.5;
        let theta_p = 3.0 * stream.next_uniform() - 1.5;
        let flow = flow_menu(&mut stream, theta_p)?;
        let q = t_density(theta_q);
        let p = t_density(theta_p);
        let lhs = diffusion_fisher(&q, &p, &flow, &e)?.value;
        let qy = Density::pushforward(q, flow.clone());
        let py = Density::pushforward(p, flow.clone());
        let ey = e.map_through(&flow)?;
        let rhs = fisher_divergence(&qy, &py, &ey)?.value;
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    Ok(CheckResult::new(
        "flow equivalence of the diffusion objective",
        worst <= 1e-5,
        format!("{configs} configs, max relative gap {worst:.3e} (tol 1e-5)"),
    ))
}

/// Pointwise agreement of the diffusion Stein operator with the plain Stein
/// operator in the transformed space: 200 points x 3 test functions x 2
/// flows.
pub fn check_stein_operator_pointwise() -> Result<CheckResult> {
    let p = t_density(0.0);
    let flows = [
        Flow::arctan(0.3, 0.6, ArctanPrefactor::MatchDiffusion)?,
        Flow::gaussian_cdf_map(t_density(0.5))?,
    ];
    let funcs = [
        TestFunction::tanh_fn(),
        TestFunction::gaussian_bump(),
        TestFunction::rational_bump(),
    ];
    let (x_lo, x_hi) = (p.quantile(0.001)?, p.quantile(0.999)?);
    let mut worst: f64 = 0.0;
    for flow in &flows {
        for t in &funcs {
            for i in 0..200 {
                let x = x_lo + (x_hi - x_lo) * i as f64 / 199.0;
                let a = stein_operator_pointwise(&p, flow, t, x)?;
                let b = stein_operator_pointwise_transformed(&p, flow, t, x)?;
                worst = worst.max((a - b).abs() / (1.0 + a.abs()));
            }
        }
    }
    Ok(CheckResult::new(
        "Stein operator pointwise in both spaces",
        worst <= 1e-6,
        format!("1200 evaluations, max relative gap {worst:.3e} (tol 1e-6)"),
    ))
}

/// Riemannian objective with G = m^-2 equals the diffusion objective.
pub fn check_riemannian_equivalence(configs: usize) -> Result<CheckResult> {
    let mut stream = UniformStream::new(31);
    let e = default_backend();
    let mut worst: f64 = 0.0;
    for _ in 0..configs {
        let theta_q = 2.0 * stream.next_uniform() - 1.0;
        let theta_p = 2.0 * stream.next_uniform() - 1.0;
        let flow = flow_menu(&mut stream, theta_p)?;
        let q = t_density(theta_q);
        let p = t_density(theta_p);
        let metric = RiemannianMetric::inverse_diffusion_squared(&flow);
        let a = riemannian_fisher(&q, &p, &metric, &e)?.value;
        let b = diffusion_fisher(&q, &p, &flow, &e)?.value;
        worst = worst.max((a - b).abs() / (1.0 + b.abs()));
    }
    Ok(CheckResult::new(
        "Riemannian metric form of the diffusion objective",
        worst <= 1e-8,
        format!("{configs} configs, max relative gap {worst:.3e} (tol 1e-8)"),
    ))
}

/// Analytic instantaneous rate vs the Euler-step pushforward difference
/// quotient, plus first-order convergence in the step size.
pub fn check_ode_rate() -> Result<CheckResult> {
    let q = t_density(0.0);
    let p = t_density(0.8);
    let e = default_backend();
    let mut detail = String::new();
    let mut ok = true;
    for drift in [drift_linear(1.3), drift_tanh(), drift_cubic_damped()] {
        let c = euler_pushforward_check(&q, &p, &drift, 1e-5, &e)?;
        let gap = c.relative_gap();
        ok &= gap <= 1e-3;
        // convergence order from delta halvings
        let g1 = euler_pushforward_check(&q, &p, &drift, 1e-3, &e)?.relative_gap();
        let g2 = euler_pushforward_check(&q, &p, &drift, 5e-4, &e)?.relative_gap();
        ok &= g2 < g1;
        detail.push_str(&format!(
            "{}: gap {gap:.2e}, order {:.2}; ",
            drift.name,
            (g1 / g2).log2()
        ));
    }
    Ok(CheckResult::new(
        "ODE instantaneous rate vs Euler step",
        ok,
        format!("{detail}(tol 1e-3 at delta 1e-5)"),
    ))
}

/// Stein identities: both objectives vanish at p = q for bounded smooth
/// test functions.
pub fn check_stein_identities() -> Result<CheckResult> {
    let q = t_density(0.0);
    let e = wide_backend();
    let flow = Flow::arctan(0.0, 0.6, ArctanPrefactor::MatchDiffusion)?;
    let mut worst: f64 = 0.0;
    for t in TestFunction::bounded_family() {
        worst = worst.max(stein_value(&q, &q, &t, &e)?.value.abs());
        worst = worst.max(dsd_value(&q, &q, &flow, &t, &e)?.value.abs());
    }
    Ok(CheckResult::new(
        "Stein identities at p = q",
        worst <= 1e-6,
        format!("5 test functions, max |value| {worst:.3e} (tol 1e-6)"),
    ))
}

/// The dropped integration-by-parts terms are constant in the model
/// location (fixed flow).
pub fn check_integration_by_parts_constants() -> Result<CheckResult> {
    let e = wide_backend();
    let q = t_density(0.0);
    let flow = Flow::arctan(0.0, 0.6, ArctanPrefactor::MatchDiffusion)?;
    let mut sm_consts = Vec::new();
    let mut dsm_consts = Vec::new();
    for theta in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        let p = t_density(theta);
        sm_consts
            .push(fisher_divergence(&q, &p, &e)?.value - score_matching_loss(&q, &p, &e)?.value);
        dsm_consts
            .push(diffusion_fisher(&q, &p, &flow, &e)?.value - dsm_loss(&q, &p, &flow, &e)?.value);
    }
    let spread = |v: &[f64]| {
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let (s1, s2) = (spread(&sm_consts), spread(&dsm_consts));
    Ok(CheckResult::new(
        "integration-by-parts constants",
        s1 <= 1e-5 && s2 <= 1e-5,
        format!("spreads {s1:.3e} / {s2:.3e} over 5 locations (tol 1e-5)"),
    ))
}

/// Evaluating the Stein objective at the score difference doubles the
/// Fisher divergence.
pub fn check_optimal_test_function() -> Result<CheckResult> {
    let e = default_backend();
    let q = t_density(0.0);
    let mut worst: f64 = 0.0;
    for theta in [-2.0, -0.5, 0.4, 1.2, 2.5] {
        let p = t_density(theta);
        let t = optimal_test_function(&q, &p);
        let sv = stein_value(&q, &p, &t, &e)?.value;
        let f = fisher_divergence(&q, &p, &e)?.value;
        worst = worst.max((sv - 2.0 * f).abs() / (1.0 + 2.0 * f));
    }
    Ok(CheckResult::new(
        "optimal test function doubles Fisher",
        worst <= 1e-6,
        format!("max relative gap {worst:.3e} over 5 locations (tol 1e-6)"),
    ))
}

/// The diffusion objective is a valid divergence: zero at p = q.
pub fn check_divergence_validity() -> Result<CheckResult> {
    let e = default_backend();
    let q = t_density(0.3);
    let mut stream = UniformStream::new(55);
    let mut worst: f64 = 0.0;
    for _ in 0..6 {
        let flow = flow_menu(&mut stream, 0.3)?;
        worst = worst.max(diffusion_fisher(&q, &q, &flow, &e)?.value.abs());
    }
    Ok(CheckResult::new(
        "diffusion divergence vanishes at p = q",
        worst <= 1e-10,
        format!("6 flows, max value {worst:.3e} (tol 1e-10)"),
    ))
}

/// Monte Carlo and quadrature agree on the Fisher divergence within three
/// standard errors.
pub fn check_backend_agreement() -> Result<CheckResult> {
    let q = t_density(0.0);
    let p = t_density(1.0);
    let samples = q.sample(1_000_000, 2024)?;
    let mc = ExpectationBackend::monte_carlo(samples)?;
    let mcr = fisher_divergence(&q, &p, &mc)?;
    let qr = fisher_divergence(&q, &p, &default_backend())?;
    let se = mcr.std_error.expect("monte carlo has a standard error");
    let gap = (mcr.value - qr.value).abs();
    Ok(CheckResult::new(
        "Monte Carlo vs quadrature backend",
        gap <= 3.0 * se,
        format!(
            "|{:.6} - {:.6}| = {gap:.2e} vs 3 se = {:.2e}",
            mcr.value,
            qr.value,
            3.0 * se
        ),
    ))
}

/// The instantaneous ODE rate at a linear unit drift is minus twice the
/// Fisher divergence.
pub fn check_ode_linear_identity() -> Result<CheckResult> {
    let e = default_backend();
    let q = t_density(0.0);
    let p = t_density(0.9);
    let rate = instantaneous_change(&q, &p, &drift_linear(1.0), &e)?;
    let f = fisher_divergence(&q, &p, &e)?.value;
    let gap = (rate + 2.0 * f).abs() / (1.0 + 2.0 * f);
    Ok(CheckResult::new(
        "linear drift rate is -2 Fisher",
        gap <= 1e-8,
        format!("relative gap {gap:.3e} (tol 1e-8)"),
    ))
}

/// Run every check.
pub fn run_all() -> Result<Vec<CheckResult>> {
    Ok(vec![
        check_density_scores()?,
        check_quantile_cdf_identity()?,
        check_normalization()?,
        check_flow_round_trips()?,
        check_flow_equivalence(20)?,
        check_stein_operator_pointwise()?,
        check_riemannian_equivalence(10)?,
        check_ode_rate()?,
        check_ode_linear_identity()?,
        check_stein_identities()?,
        check_integration_by_parts_constants()?,
        check_optimal_test_function()?,
        check_divergence_validity()?,
        check_backend_agreement()?,
    ])
}
