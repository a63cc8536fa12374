//! One-dimensional densities with exact scores, CDFs and quantiles.
//!
//! Three kinds are supported: Student-t, Gaussian, and the pushforward of a
//! base density through an invertible flow. Scores are analytic; CDF and
//! quantile are accurate enough (|cdf(quantile(u)) - u| <= 1e-10) to compose
//! into CDF-matching flows. Sampling is inverse-CDF only, driven by the
//! pinned uniform stream in [`crate::rng`], so datasets are reproducible
//! bit-for-bit from their seed.

use crate::error::{Error, Result};
use crate::flows::Flow;
use crate::numeric::{newton_bisect, try_central_diff};
use crate::rng::UniformStream;
use crate::special::{inc_beta_with_complement, ln_gamma, normal_cdf, normal_quantile, normal_sf};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

/// Student-t location/scale family.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentTParams {
    pub location: f64,
    pub scale: f64,
    pub dof: f64,
}

impl StudentTParams {
    pub fn new(location: f64, scale: f64, dof: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::InvalidParam(format!(
                "location must be finite, got {location}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParam(format!(
                "scale must be > 0, got {scale}"
            )));
        }
        if !(dof.is_finite() && dof > 0.0) {
            return Err(Error::InvalidParam(format!("dof must be > 0, got {dof}")));
        }
        Ok(Self {
            location,
            scale,
            dof,
        })
    }

    fn log_norm(&self) -> f64 {
        ln_gamma((self.dof + 1.0) / 2.0)
            - ln_gamma(self.dof / 2.0)
            - 0.5 * (self.dof * PI).ln()
            - self.scale.ln()
    }

    fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        self.log_norm() - 0.5 * (self.dof + 1.0) * (z * z / self.dof).ln_1p()
    }

    fn score(&self, x: f64) -> f64 {
        let u = x - self.location;
        -(self.dof + 1.0) * u / (self.dof * self.scale * self.scale + u * u)
    }

    fn score_derivative(&self, x: f64) -> f64 {
        let u = x - self.location;
        let d = self.dof * self.scale * self.scale + u * u;
        -(self.dof + 1.0) * (self.dof * self.scale * self.scale - u * u) / (d * d)
    }

    /// Lower tail mass; evaluated through the incomplete beta so both tails
    /// keep full relative precision. The beta argument and its complement
    /// are formed directly from t^2 to avoid cancellation near the median.
    fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.location) / self.scale;
        if t == 0.0 {
            return 0.5;
        }
        let t2 = t * t;
        let denom = self.dof + t2;
        let tail =
            0.5 * inc_beta_with_complement(self.dof / 2.0, 0.5, self.dof / denom, t2 / denom);
        if t < 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }

    fn survival(&self, x: f64) -> f64 {
        self.cdf(2.0 * self.location - x)
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::DomainError(format!(
                "quantile needs u in (0,1), got {u}"
            )));
        }
        // Solve the lower-tail problem; the distribution is symmetric.
        if u == 0.5 {
            return Ok(self.location);
        }
        if u > 0.5 {
            return Ok(2.0 * self.location - self.quantile(1.0 - u)?);
        }
        // bracket [location - k*scale, location], expanding k until covered
        let mut k = 1.0;
        while self.cdf(self.location - k * self.scale) > u {
            k *= 2.0;
            if k > 1e300 {
                return Err(Error::DomainError(format!(
                    "quantile bracket failed for u={u}"
                )));
            }
        }
        let lo = self.location - k * self.scale;
        let f_tol = 1e-13 * u;
        let x = newton_bisect(
            |x| self.cdf(x) - u,
            |x| self.log_pdf(x).exp(),
            lo,
            self.location,
            f_tol,
            1e-15,
        );
        Ok(x)
    }

    fn quantile_upper(&self, s: f64) -> Result<f64> {
        Ok(2.0 * self.location - self.quantile(s)?)
    }
}

/// Gaussian parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub mean: f64,
    pub std: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidParam(format!(
                "mean must be finite, got {mean}"
            )));
        }
        if !(std.is_finite() && std > 0.0) {
            return Err(Error::InvalidParam(format!("std must be > 0, got {std}")));
        }
        Ok(Self { mean, std })
    }

    pub fn standard() -> Self {
        Self {
            mean: 0.0,
            std: 1.0,
        }
    }

    fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        -0.5 * (2.0 * PI).ln() - self.std.ln() - 0.5 * z * z
    }
}

/// Pushforward of `base` through the strictly increasing map `flow`:
/// the density of y = T(x) with x ~ base.
#[derive(Debug, Clone)]
pub struct PushforwardDensity {
    pub base: Density,
    pub flow: Flow,
}

/// A one-dimensional probability density.
#[derive(Debug, Clone)]
pub enum Density {
    StudentT(StudentTParams),
    Gaussian(GaussianParams),
    Pushforward(Box<PushforwardDensity>),
}

impl Density {
    pub fn student_t(location: f64, scale: f64, dof: f64) -> Result<Self> {
        Ok(Density::StudentT(StudentTParams::new(
            location, scale, dof,
        )?))
    }

    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        Ok(Density::Gaussian(GaussianParams::new(mean, std)?))
    }

    pub fn standard_normal() -> Self {
        Density::Gaussian(GaussianParams::standard())
    }

    /// Density of `flow(X)` for `X ~ base`.
    pub fn pushforward(base: Density, flow: Flow) -> Self {
        Density::Pushforward(Box::new(PushforwardDensity { base, flow }))
    }

    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        match self {
            Density::StudentT(p) => Ok(p.log_pdf(x)),
            Density::Gaussian(p) => Ok(p.log_pdf(x)),
            Density::Pushforward(p) => {
                let x0 = p.flow.inverse(x)?;
                Ok(p.base.log_pdf(x0)? - p.flow.jacobian(x0)?.ln())
            }
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.log_pdf(x)?.exp())
    }

    /// d/dx log pdf(x).
    pub fn score(&self, x: f64) -> Result<f64> {
        match self {
            Density::StudentT(p) => Ok(p.score(x)),
            Density::Gaussian(p) => Ok(-(x - p.mean) / (p.std * p.std)),
            Density::Pushforward(p) => {
                // change of variables: s_Y(y) = m(x) s_X(x) + m'(x), x = T^-1(y)
                let x0 = p.flow.inverse(x)?;
                let (m, mp) = p.flow.diffusion_with_derivative(x0)?;
                Ok(m * p.base.score(x0)? + mp)
            }
        }
    }

    /// d/dx score(x); analytic for the closed-form kinds, central difference
    /// for pushforwards.
    pub fn score_derivative(&self, x: f64) -> Result<f64> {
        match self {
            Density::StudentT(p) => Ok(p.score_derivative(x)),
            Density::Gaussian(p) => Ok(-1.0 / (p.std * p.std)),
            Density::Pushforward(_) => {
                let h = f64::EPSILON.cbrt() * (1.0 + x.abs());
                try_central_diff(|y| self.score(y), x, h)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            Density::StudentT(p) => Ok(p.cdf(x)),
            Density::Gaussian(p) => Ok(normal_cdf((x - p.mean) / p.std)),
            Density::Pushforward(p) => {
                let (lo, hi) = p.flow.image();
                if x <= lo {
                    return Ok(0.0);
                }
                if x >= hi {
                    return Ok(1.0);
                }
                p.base.cdf(p.flow.inverse(x)?)
            }
        }
    }

    /// Upper tail mass 1 - cdf(x), computed without cancellation.
    pub fn survival(&self, x: f64) -> Result<f64> {
        match self {
            Density::StudentT(p) => Ok(p.survival(x)),
            Density::Gaussian(p) => Ok(normal_sf((x - p.mean) / p.std)),
            Density::Pushforward(p) => {
                let (lo, hi) = p.flow.image();
                if x <= lo {
                    return Ok(1.0);
                }
                if x >= hi {
                    return Ok(0.0);
                }
                p.base.survival(p.flow.inverse(x)?)
            }
        }
    }

    /// Inverse CDF. Refined until |cdf(quantile(u)) - u| is far below the
    /// 1e-10 contract.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::DomainError(format!(
                "quantile needs u in (0,1), got {u}"
            )));
        }
        match self {
            Density::StudentT(p) => p.quantile(u),
            Density::Gaussian(p) => Ok(p.mean + p.std * normal_quantile(u)),
            Density::Pushforward(p) => p.flow.forward(p.base.quantile(u)?),
        }
    }

    /// Point with upper tail mass `s`; the tail-precision twin of
    /// [`Density::quantile`].
    pub fn quantile_upper(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::DomainError(format!(
                "quantile_upper needs s in (0,1), got {s}"
            )));
        }
        match self {
            Density::StudentT(p) => p.quantile_upper(s),
            Density::Gaussian(p) => Ok(p.mean - p.std * normal_quantile(s)),
            Density::Pushforward(p) => p.flow.forward(p.base.quantile_upper(s)?),
        }
    }

    /// Deterministic inverse-CDF sampling from the seeded uniform stream.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::InvalidParam("sample size must be >= 1".into()));
        }
        let mut stream = UniformStream::new(seed);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(self.quantile(stream.next_uniform())?);
        }
        Ok(SampleSet {
            values,
            seed,
            label: self.label(),
        })
    }

    /// Integration range covering all but ~1e-10 of the mass, used as the
    /// default quadrature window.
    pub fn default_integration_range(&self) -> (f64, f64) {
        match self {
            Density::StudentT(p) => (p.location - 40.0 * p.scale, p.location + 40.0 * p.scale),
            Density::Gaussian(p) => (p.mean - 12.0 * p.std, p.mean + 12.0 * p.std),
            Density::Pushforward(p) => {
                let (lo, hi) = p.base.default_integration_range();
                let flo = p.flow.forward(lo).unwrap_or(f64::NEG_INFINITY);
                let fhi = p.flow.forward(hi).unwrap_or(f64::INFINITY);
                (flo, fhi)
            }
        }
    }

    fn label(&self) -> String {
        match self {
            Density::StudentT(p) => format!(
                "dist=student_t loc={} scale={} dof={}",
                p.location, p.scale, p.dof
            ),
            Density::Gaussian(p) => format!("dist=gaussian mean={} std={}", p.mean, p.std),
            Density::Pushforward(_) => "dist=pushforward".to_string(),
        }
    }
}

/// An immutable set of draws plus the seed that produced them.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub seed: u64,
    pub label: String,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Serialize in the dataset file format: a `# seed=.. n=.. <label>`
    /// header followed by one sample per line at 17 significant digits.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# seed={} n={} {}", self.seed, self.len(), self.label).unwrap();
        for v in &self.values {
            writeln!(out, "{v:.16e}").unwrap();
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_file_string(&text)
    }

    pub fn from_file_string(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset file".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("dataset file must start with a # header".into()))?
            .trim();
        let mut seed = None;
        let mut n = None;
        let mut label_parts = Vec::new();
        for tok in header.split_whitespace() {
            if let Some(v) = tok.strip_prefix("seed=") {
                seed = Some(v.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?);
            } else if let Some(v) = tok.strip_prefix("n=") {
                n = Some(
                    v.parse::<usize>()
                        .map_err(|e| Error::Parse(e.to_string()))?,
                );
            } else {
                label_parts.push(tok);
            }
        }
        let seed = seed.ok_or_else(|| Error::Parse("header missing seed=".into()))?;
        let n = n.ok_or_else(|| Error::Parse("header missing n=".into()))?;
        let mut values = Vec::with_capacity(n);
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            values.push(
                line.parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))?,
            );
        }
        if values.len() != n {
            return Err(Error::Parse(format!(
                "header says n={n} but file holds {} samples",
                values.len()
            )));
        }
        Ok(SampleSet {
            values,
            seed,
            label: label_parts.join(" "),
        })
    }
}

/// The canonical experiment dataset: 300 draws from Student-t(0, 0.3, 5)
/// with seed 42.
pub fn golden_dataset() -> SampleSet {
    Density::student_t(0.0, 0.3, 5.0)
        .expect("fixed parameters are valid")
        .sample(300, 42)
        .expect("sampling a Student-t cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{ArctanPrefactor, Flow};
    use proptest::prelude::*;

    fn t_std() -> Density {
        Density::student_t(0.0, 0.3, 5.0).unwrap()
    }

    /// Adaptive Simpson integration, the oracle for CDF values.
    #[allow(clippy::too_many_arguments)]
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let c = 0.5 * (a + b);
        let h = b - a;
        let (fa, fb, fc) = (f(a), f(b), f(c));
        let whole = h / 6.0 * (fa + 4.0 * fc + fb);
        fn step<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fb: f64,
            fc: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let c = 0.5 * (a + b);
            let (lc, rc) = (0.5 * (a + c), 0.5 * (c + b));
            let (flc, frc) = (f(lc), f(rc));
            let left = (c - a) / 6.0 * (fa + 4.0 * flc + fc);
            let right = (b - c) / 6.0 * (fc + 4.0 * frc + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                step(f, a, c, fa, fc, flc, left, tol / 2.0, depth - 1)
                    + step(f, c, b, fc, fb, frc, right, tol / 2.0, depth - 1)
            }
        }
        step(f, a, b, fa, fb, fc, whole, tol, depth)
    }

    #[test]
    fn log_pdf_anchors() {
        let n01 = Density::gaussian(0.0, 1.0).unwrap();
        assert!((n01.log_pdf(0.0).unwrap() + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        let cauchy = Density::student_t(0.0, 1.0, 1.0).unwrap();
        assert!((cauchy.log_pdf(0.0).unwrap() + PI.ln()).abs() < 1e-14);
        // closed form, independent of the ln_gamma path:
        // pdf(0.3; 0, 0.3, 5) = 2 / (0.75 sqrt(pi) * sqrt(5 pi) * 0.3) * 1.2^-3
        let expected =
            (2.0 / (0.75 * PI.sqrt() * (5.0 * PI).sqrt() * 0.3)).ln() - 3.0 * 1.2_f64.ln();
        assert!((t_std().log_pdf(0.3).unwrap() - expected).abs() < 1e-13);
        assert!((expected - (-0.311_611_455_110_652)).abs() < 1e-14);
    }

    #[test]
    fn score_anchors() {
        let n01 = Density::gaussian(0.0, 1.0).unwrap();
        assert_eq!(n01.score(2.0).unwrap(), -2.0);
        assert_eq!(t_std().score(0.0).unwrap(), 0.0);
        let s = t_std().score(1.0).unwrap();
        assert!((s - (-6.0 / 1.45)).abs() < 1e-14);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(Density::student_t(0.0, 0.0, 5.0).is_err());
        assert!(Density::student_t(0.0, 0.3, -1.0).is_err());
        assert!(Density::gaussian(0.0, 0.0).is_err());
        assert!(Density::gaussian(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn cdf_anchors_and_oracle() {
        let n01 = Density::gaussian(0.0, 1.0).unwrap();
        assert!((n01.cdf(0.0).unwrap() - 0.5).abs() < 1e-15);
        let t = Density::student_t(1.7, 0.4, 6.0).unwrap();
        assert!((t.cdf(1.7).unwrap() - 0.5).abs() < 1e-14);

        // oracle: adaptive Simpson of the pdf from the median
        let t15 = Density::student_t(0.0, 1.0, 5.0).unwrap();
        let oracle = 0.5 + simpson(&|x| t15.pdf(x).unwrap(), 0.0, 1.0, 1e-12, 30);
        let got = t15.cdf(1.0).unwrap();
        assert!((got - oracle).abs() < 1e-9, "cdf {got} vs simpson {oracle}");
        assert!((got - 0.818_391_266_175_438_7).abs() < 1e-12);
    }

    #[test]
    fn quantile_anchors_and_bisection_oracle() {
        let n01 = Density::gaussian(0.0, 1.0).unwrap();
        assert!(n01.quantile(0.5).unwrap().abs() < 1e-15);
        let t = Density::student_t(2.0, 1.0, 5.0).unwrap();
        assert!((t.quantile(0.5).unwrap() - 2.0).abs() < 1e-14);

        // oracle: plain bisection on the cdf
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if n01.cdf(mid).unwrap() < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = n01.quantile(0.975).unwrap();
        assert!((q - 0.5 * (lo + hi)).abs() < 1e-9);
        assert!((q - 1.959_963_984_540_054).abs() < 1e-10);
    }

    #[test]
    fn quantile_rejects_bad_u() {
        let t = t_std();
        assert!(matches!(t.quantile(0.0), Err(Error::DomainError(_))));
        assert!(matches!(t.quantile(1.0), Err(Error::DomainError(_))));
        assert!(t.quantile(-0.2).is_err());
    }

    #[test]
    fn quantile_cdf_identity_central_mass() {
        // u spanning the central 99.99% mass
        for d in [t_std(), Density::gaussian(-1.0, 2.0).unwrap()] {
            let mut u = 5e-5;
            while u < 1.0 - 5e-5 {
                let x = d.quantile(u).unwrap();
                assert!(
                    (d.cdf(x).unwrap() - u).abs() < 1e-10,
                    "identity broke at u={u}"
                );
                u += 0.0203;
            }
        }
    }

    #[test]
    fn cdf_saturates_at_infinities() {
        for d in [t_std(), Density::gaussian(1.0, 0.5).unwrap()] {
            assert_eq!(d.cdf(f64::NEG_INFINITY).unwrap(), 0.0);
            assert_eq!(d.cdf(f64::INFINITY).unwrap(), 1.0);
        }
        let push = Density::pushforward(
            t_std(),
            Flow::arctan(0.0, 0.6, ArctanPrefactor::MatchTransform).unwrap(),
        );
        assert_eq!(push.cdf(f64::NEG_INFINITY).unwrap(), 0.0);
        assert_eq!(push.cdf(f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn sample_rejects_zero_draws() {
        assert!(t_std().sample(0, 1).is_err());
    }

    #[test]
    fn survival_matches_cdf() {
        let t = t_std();
        for x in [-3.0, -0.2, 0.0, 0.4, 2.0, 8.0] {
            let s = t.survival(x).unwrap();
            let c = t.cdf(x).unwrap();
            assert!((s + c - 1.0).abs() < 1e-13);
        }
        // far tail keeps relative precision instead of rounding to 0
        let s = t.survival(40.0).unwrap();
        assert!(s > 0.0 && s < 1e-9);
    }

    #[test]
    fn sampling_is_deterministic_inverse_cdf() {
        let n01 = Density::gaussian(0.0, 1.0).unwrap();
        let set = n01.sample(100_000, 7).unwrap();
        let mean = set.values.iter().sum::<f64>() / set.len() as f64;
        assert!(mean.abs() < 3.0 / (set.len() as f64).sqrt());

        // n = 1: by definition the quantile of the first uniform
        let mut stream = UniformStream::new(99);
        let u = stream.next_uniform();
        let one = t_std().sample(1, 99).unwrap();
        assert_eq!(one.values[0], t_std().quantile(u).unwrap());
    }

    #[test]
    fn sample_file_round_trip() {
        let set = t_std().sample(25, 3).unwrap();
        let text = set.to_file_string();
        assert!(text.starts_with("# seed=3 n=25 dist=student_t loc=0 scale=0.3 dof=5\n"));
        let back = SampleSet::from_file_string(&text).unwrap();
        assert_eq!(back.seed, 3);
        assert_eq!(back.values, set.values);
    }

    #[test]
    fn pushforward_density_change_of_variables() {
        let base = t_std();
        let flow = Flow::arctan(0.4, 0.6, ArctanPrefactor::MatchTransform).unwrap();
        let push = Density::pushforward(base.clone(), flow.clone());

        // log-density identity at a grid of y values
        for y in [-2.0, -0.5, 0.0, 0.3, 1.9] {
            let x = flow.inverse(y).unwrap();
            let expected = base.log_pdf(x).unwrap() - flow.jacobian(x).unwrap().ln();
            assert!((push.log_pdf(y).unwrap() - expected).abs() < 1e-12);

            // score identity against finite differences of the pushforward log-pdf
            let h = 1e-6 * (1.0 + y.abs());
            let fd = (push.log_pdf(y + h).unwrap() - push.log_pdf(y - h).unwrap()) / (2.0 * h);
            let an = push.score(y).unwrap();
            assert!(
                (fd - an).abs() < 1e-6 * (1.0 + an.abs()),
                "y={y} fd={fd} an={an}"
            );
        }

        // outside the image is an error, not -inf
        let (_, hi) = flow.image();
        assert!(matches!(
            push.log_pdf(hi + 0.01),
            Err(Error::OutOfImage { .. })
        ));
        // ... but the cdf saturates
        assert_eq!(push.cdf(hi + 0.01).unwrap(), 1.0);
    }

    #[test]
    fn pushforward_quantile_is_mapped_base_quantile() {
        let base = t_std();
        let flow = Flow::gaussian_cdf_map(base.clone()).unwrap();
        let push = Density::pushforward(base.clone(), flow.clone());
        for u in [0.1, 0.5, 0.9] {
            let expected = flow.forward(base.quantile(u).unwrap()).unwrap();
            assert!((push.quantile(u).unwrap() - expected).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        /// score == d/dx log_pdf for the closed-form densities
        #[test]
        fn score_matches_log_pdf_slope(
            x in -8.0..8.0f64,
            loc in -2.0..2.0f64,
            scale in 0.2..2.0f64,
            dof in 2.0..30.0f64,
        ) {
            let t = Density::student_t(loc, scale, dof).unwrap();
            let h = 1e-5 * (1.0 + x.abs());
            let fd = (t.log_pdf(x + h).unwrap() - t.log_pdf(x - h).unwrap()) / (2.0 * h);
            let s = t.score(x).unwrap();
            prop_assert!((fd - s).abs() <= 1e-5 * (1.0 + s.abs()));

            let g = Density::gaussian(loc, scale).unwrap();
            let fd = (g.log_pdf(x + h).unwrap() - g.log_pdf(x - h).unwrap()) / (2.0 * h);
            let s = g.score(x).unwrap();
            prop_assert!((fd - s).abs() <= 1e-5 * (1.0 + s.abs()));
        }

        /// cdf(quantile(u)) = u within the contract tolerance
        #[test]
        fn quantile_inverts_cdf(u in 1e-6..0.999999f64, dof in 2.0..20.0f64) {
            let t = Density::student_t(0.7, 0.5, dof).unwrap();
            let x = t.quantile(u).unwrap();
            prop_assert!((t.cdf(x).unwrap() - u).abs() < 1e-10);
        }
    }
}
