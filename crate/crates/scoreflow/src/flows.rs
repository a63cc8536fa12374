//! Invertible, strictly increasing scalar maps and the diffusion
//! coefficients they induce.
//!
//! A flow `T` carries five evaluations: `forward` (y = T(x)), `inverse`,
//! `jacobian` (dT/dx > 0), `diffusion` (m = 1/(dT/dx), the preconditioner
//! the divergence layer multiplies into scores) and `diffusion_derivative`
//! (dm/dx). Where an analytic dm/dx exists it is used; otherwise a central
//! difference with step cbrt(eps)*(1+|x|) stands in.

use crate::densities::{Density, GaussianParams};
use crate::error::{Error, Result};
use crate::numeric::try_central_diff;
use crate::ode::OdeDrift;
use std::f64::consts::FRAC_PI_2;

/// Which constant multiplies the arctan map.
///
/// Two published conventions for the same family disagree by a factor
/// `shape^2` in the induced diffusion, so both are first-class:
/// `MatchDiffusion` normalizes the diffusion, m(x) = 1 + (x-center)^2/shape
/// exactly; `MatchTransform` normalizes the map itself,
/// T(x) = arctan((x-center)/sqrt(shape)) / (shape*sqrt(shape)) with image
/// (-pi/(2 shape^1.5), +pi/(2 shape^1.5)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArctanPrefactor {
    MatchDiffusion,
    MatchTransform,
}

#[derive(Debug, Clone)]
pub struct ArctanFlowParams {
    pub center: f64,
    pub shape: f64,
    pub prefactor: ArctanPrefactor,
}

impl ArctanFlowParams {
    fn pref(&self) -> f64 {
        match self.prefactor {
            ArctanPrefactor::MatchDiffusion => self.shape.sqrt(),
            ArctanPrefactor::MatchTransform => 1.0 / (self.shape * self.shape.sqrt()),
        }
    }
}

/// CDF-matching map onto a Gaussian: T(x) = F_target^{-1}(F_source(x)).
///
/// Upper-tail evaluations go through the survival function so the map keeps
/// full relative precision where the CDF would round to 1.
#[derive(Debug, Clone)]
pub struct GaussianMapParams {
    pub source: Box<Density>,
    pub target: GaussianParams,
}

/// Single forward-Euler step of an ODE drift: T(x) = x + delta * g(x).
#[derive(Debug, Clone)]
pub struct EulerStepParams {
    pub drift: OdeDrift,
    pub delta: f64,
}

/// An invertible differentiable scalar map.
#[derive(Debug, Clone)]
pub enum Flow {
    Identity,
    Affine { scale: f64, shift: f64 },
    Arctan(ArctanFlowParams),
    GaussianMap(GaussianMapParams),
    EulerStep(EulerStepParams),
}

impl Flow {
    pub fn identity() -> Self {
        Flow::Identity
    }

    pub fn affine(scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParam(format!(
                "affine scale must be > 0 so the map is increasing, got {scale}"
            )));
        }
        Ok(Flow::Affine { scale, shift })
    }

    pub fn arctan(center: f64, shape: f64, prefactor: ArctanPrefactor) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::InvalidParam(format!(
                "arctan shape must be > 0, got {shape}"
            )));
        }
        Ok(Flow::Arctan(ArctanFlowParams {
            center,
            shape,
            prefactor,
        }))
    }

    /// CDF map from `source` onto the standard normal.
    pub fn gaussian_cdf_map(source: Density) -> Result<Self> {
        Self::gaussian_cdf_map_to(source, GaussianParams::standard())
    }

    pub fn gaussian_cdf_map_to(source: Density, target: GaussianParams) -> Result<Self> {
        Ok(Flow::GaussianMap(GaussianMapParams {
            source: Box::new(source),
            target,
        }))
    }

    pub fn euler_step(drift: OdeDrift, delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::InvalidParam(format!(
                "euler delta must be finite, got {delta}"
            )));
        }
        Ok(Flow::EulerStep(EulerStepParams { drift, delta }))
    }

    /// The open interval T maps onto.
    pub fn image(&self) -> (f64, f64) {
        match self {
            Flow::Identity | Flow::Affine { .. } | Flow::GaussianMap(_) | Flow::EulerStep(_) => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Flow::Arctan(p) => {
                let bound = p.pref() * FRAC_PI_2;
                (-bound, bound)
            }
        }
    }

    /// y = T(x).
    pub fn forward(&self, x: f64) -> Result<f64> {
        match self {
            Flow::Identity => Ok(x),
            Flow::Affine { scale, shift } => Ok(scale * x + shift),
            Flow::Arctan(p) => Ok(p.pref() * ((x - p.center) / p.shape.sqrt()).atan()),
            Flow::GaussianMap(p) => {
                // route through whichever tail is small
                let c = p.source.cdf(x)?;
                if c <= 0.5 {
                    Ok(p.target.mean + p.target.std * crate::special::normal_quantile(c))
                } else {
                    let s = p.source.survival(x)?;
                    Ok(p.target.mean - p.target.std * crate::special::normal_quantile(s))
                }
            }
            Flow::EulerStep(p) => {
                self.jacobian(x)?; // detects non-invertibility at x
                Ok(x + p.delta * p.drift.eval(x))
            }
        }
    }

    /// x = T^{-1}(y); errors with [`Error::OutOfImage`] outside the range.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.image();
        if y <= lo || y >= hi {
            return Err(Error::OutOfImage { value: y, lo, hi });
        }
        match self {
            Flow::Identity => Ok(y),
            Flow::Affine { scale, shift } => Ok((y - shift) / scale),
            Flow::Arctan(p) => Ok(p.shape.sqrt() * (y / p.pref()).tan() + p.center),
            Flow::GaussianMap(p) => {
                let z = (y - p.target.mean) / p.target.std;
                if z <= 0.0 {
                    p.source.quantile(crate::special::normal_cdf(z))
                } else {
                    p.source.quantile_upper(crate::special::normal_sf(z))
                }
            }
            Flow::EulerStep(p) => {
                // Newton from x0 = y; T' stays near 1 for the step sizes the
                // invertibility precondition allows.
                let mut x = y;
                for _ in 0..100 {
                    let slope = 1.0 + p.delta * p.drift.eval_prime(x);
                    if slope <= 0.0 {
                        return Err(Error::NonInvertible(format!(
                            "euler step slope {slope} <= 0 at x = {x}"
                        )));
                    }
                    let f = x + p.delta * p.drift.eval(x) - y;
                    let step = f / slope;
                    x -= step;
                    if step.abs() <= 1e-15 * (1.0 + x.abs()) {
                        return Ok(x);
                    }
                }
                Err(Error::NonInvertible(format!(
                    "euler inverse did not converge at y = {y}"
                )))
            }
        }
    }

    /// dT/dx, strictly positive.
    pub fn jacobian(&self, x: f64) -> Result<f64> {
        match self {
            Flow::Identity => Ok(1.0),
            Flow::Affine { scale, .. } => Ok(*scale),
            Flow::Arctan(p) => {
                let u = (x - p.center) / p.shape.sqrt();
                Ok(p.pref() / p.shape.sqrt() / (1.0 + u * u))
            }
            Flow::GaussianMap(p) => {
                let y = self.forward(x)?;
                let z = (y - p.target.mean) / p.target.std;
                let target_pdf = crate::special::normal_pdf(z) / p.target.std;
                Ok(p.source.pdf(x)? / target_pdf)
            }
            Flow::EulerStep(p) => {
                let slope = 1.0 + p.delta * p.drift.eval_prime(x);
                if slope <= 0.0 {
                    return Err(Error::NonInvertible(format!(
                        "euler step slope {slope} <= 0 at x = {x}"
                    )));
                }
                Ok(slope)
            }
        }
    }

    /// Diffusion coefficient m(x) = 1/(dT/dx).
    pub fn diffusion(&self, x: f64) -> Result<f64> {
        match self {
            Flow::Arctan(p) => {
                // exact form; for MatchDiffusion this is 1 + (x-center)^2/shape
                let u = x - p.center;
                Ok(p.shape.sqrt() / p.pref() * (1.0 + u * u / p.shape))
            }
            _ => Ok(1.0 / self.jacobian(x)?),
        }
    }

    /// dm/dx; analytic for the arctan and Gaussian maps, central difference
    /// otherwise.
    pub fn diffusion_derivative(&self, x: f64) -> Result<f64> {
        Ok(self.diffusion_with_derivative(x)?.1)
    }

    /// (m, dm/dx) in one evaluation. The Gaussian map computes its forward
    /// value once and derives both quantities from it, which matters in the
    /// sweep hot loop.
    pub fn diffusion_with_derivative(&self, x: f64) -> Result<(f64, f64)> {
        match self {
            Flow::Identity => Ok((1.0, 0.0)),
            Flow::Affine { scale, .. } => Ok((1.0 / scale, 0.0)),
            Flow::Arctan(p) => {
                let u = x - p.center;
                let k = p.shape.sqrt() / p.pref();
                Ok((k * (1.0 + u * u / p.shape), k * 2.0 * u / p.shape))
            }
            Flow::GaussianMap(p) => {
                // m = f_T(T(x))/f_s(x)  =>  m' = s_T(T(x)) - m(x) s_s(x)
                let y = self.forward(x)?;
                let z = (y - p.target.mean) / p.target.std;
                let target_pdf = crate::special::normal_pdf(z) / p.target.std;
                let m = (target_pdf.ln() - p.source.log_pdf(x)?).exp();
                let target_score = -z / p.target.std;
                Ok((m, target_score - m * p.source.score(x)?))
            }
            Flow::EulerStep(_) => {
                let m = self.diffusion(x)?;
                let h = f64::EPSILON.cbrt() * (1.0 + x.abs());
                let mp = try_central_diff(|t| self.diffusion(t), x, h)?;
                Ok((m, mp))
            }
        }
    }
}
