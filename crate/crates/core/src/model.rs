//! Distribution models for the log-factor X.
//!
//! A model exposes its cumulant generating function φ(t) = log E[e^{tX}]
//! on t ≥ 0 together with φ′, φ″, φ‴, the support bounds β₀ = E X and
//! β∞ = esssup X, an optional lattice descriptor and an exact sampler.
//!
//! The built-in catalog is closed under exponential tilting:
//!
//! | model              | φ(t)                      | tilt by α               |
//! |--------------------|---------------------------|-------------------------|
//! | `Gaussian{μ,σ}`    | μt + σ²t²/2               | `Gaussian{μ+ασ², σ}`    |
//! | `LogBeta{a}`       | log a − log(a+t)          | `LogBeta{a+α}`          |
//! | `Bernoulli{p,h}`   | log(1−p+pe^{th})          | `Bernoulli{p̃,h}`        |
//!
//! `LogBeta{1}` is the log-uniform (stick-breaking) model X = log U.

use crate::error::{Error, Result};
use crate::special::{ln_binomial_range, ln_gamma_regularized, log_normal_cdf, log_normal_sf};
use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution, Gamma, StandardNormal};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Absolute tolerance for lattice membership of sampled values.
pub const LATTICE_TOL: f64 = 1e-12;

/// Lattice structure of X in normal form: values lie in `offset + span·ℤ`,
/// with `span` maximal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub span: f64,
    pub offset: f64,
}

impl Lattice {
    /// Maximal lattice containing every support point, if any.
    ///
    /// The span is the real gcd of the pairwise differences (Euclid with
    /// tolerance `tol`); the offset is reduced into `[0, span)`.
    pub fn from_support(points: &[f64], tol: f64) -> Option<Lattice> {
        let base = points.iter().copied().fold(f64::INFINITY, f64::min);
        if !base.is_finite() {
            return None;
        }
        let mut span = 0.0_f64;
        for &p in points {
            span = real_gcd(span, (p - base).abs(), tol);
        }
        if span <= tol {
            return None;
        }
        let mut offset = base - (base / span).floor() * span;
        if (offset - span).abs() <= tol || offset.abs() <= tol {
            offset = 0.0;
        }
        Some(Lattice { span, offset })
    }

    /// Whether `x` lies on the lattice up to `tol`.
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        let k = (x - self.offset) / self.span;
        ((k - k.round()) * self.span).abs() <= tol
    }
}

fn real_gcd(mut a: f64, mut b: f64, tol: f64) -> f64 {
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    while b > tol {
        let r = a % b;
        a = b;
        b = if r > b - tol { 0.0 } else { r };
    }
    a
}

/// Central and one-sided finite differences for models that only provide φ.
pub mod fd {
    /// Step used for φ′.
    pub fn step1(t: f64) -> f64 {
        1e-5_f64.max(1e-5 * t.abs())
    }
    fn step2(t: f64) -> f64 {
        1e-4_f64.max(1e-4 * t.abs())
    }
    fn step3(t: f64) -> f64 {
        1e-3_f64.max(1e-3 * t.abs())
    }

    pub fn d1(f: impl Fn(f64) -> f64, t: f64) -> f64 {
        let h = step1(t);
        if t >= 2.0 * h {
            (f(t + h) - f(t - h)) / (2.0 * h)
        } else {
            (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h)
        }
    }

    pub fn d2(f: impl Fn(f64) -> f64, t: f64) -> f64 {
        let h = step2(t);
        if t >= 2.0 * h {
            (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
        } else {
            (2.0 * f(t) - 5.0 * f(t + h) + 4.0 * f(t + 2.0 * h) - f(t + 3.0 * h)) / (h * h)
        }
    }

    pub fn d3(f: impl Fn(f64) -> f64, t: f64) -> f64 {
        let h = step3(t);
        if t >= 3.0 * h {
            (f(t + 2.0 * h) - 2.0 * f(t + h) + 2.0 * f(t - h) - f(t - 2.0 * h)) / (2.0 * h * h * h)
        } else {
            (-5.0 * f(t) + 18.0 * f(t + h) - 24.0 * f(t + 2.0 * h) + 14.0 * f(t + 3.0 * h)
                - 3.0 * f(t + 4.0 * h))
                / (2.0 * h * h * h)
        }
    }
}

/// Cumulant generating function of X on t ≥ 0.
///
/// Only `phi`, `beta0` and `beta_inf` are required; the derivatives default
/// to finite differences of `phi`.
pub trait Cgf: Send + Sync {
    fn name(&self) -> String;

    /// φ(t). Callers guarantee t ≥ 0.
    fn phi(&self, t: f64) -> f64;

    fn phi_d1(&self, t: f64) -> f64 {
        fd::d1(|s| self.phi(s), t)
    }

    fn phi_d2(&self, t: f64) -> f64 {
        fd::d2(|s| self.phi(s), t)
    }

    fn phi_d3(&self, t: f64) -> f64 {
        fd::d3(|s| self.phi(s), t)
    }

    /// β₀ = E X (may be −∞).
    fn beta0(&self) -> f64;

    /// β∞ = esssup X (may be +∞).
    fn beta_inf(&self) -> f64;

    fn lattice(&self) -> Option<Lattice> {
        None
    }
}

impl<T: Cgf + ?Sized> Cgf for &T {
    fn name(&self) -> String {
        (**self).name()
    }
    fn phi(&self, t: f64) -> f64 {
        (**self).phi(t)
    }
    fn phi_d1(&self, t: f64) -> f64 {
        (**self).phi_d1(t)
    }
    fn phi_d2(&self, t: f64) -> f64 {
        (**self).phi_d2(t)
    }
    fn phi_d3(&self, t: f64) -> f64 {
        (**self).phi_d3(t)
    }
    fn beta0(&self) -> f64 {
        (**self).beta0()
    }
    fn beta_inf(&self) -> f64 {
        (**self).beta_inf()
    }
    fn lattice(&self) -> Option<Lattice> {
        (**self).lattice()
    }
}

/// φ(t) with a domain check.
pub fn phi_eval<M: Cgf + ?Sized>(model: &M, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("phi requires t >= 0, got {t}")));
    }
    Ok(model.phi(t))
}

/// A user model given by φ alone (no sampler). Suitable for rate-function
/// analytics; derivatives come from finite differences.
#[derive(Clone)]
pub struct CgfFn {
    name: String,
    phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    beta0: f64,
    beta_inf: f64,
}

impl CgfFn {
    pub fn new(
        name: impl Into<String>,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        beta0: f64,
        beta_inf: f64,
    ) -> Self {
        CgfFn {
            name: name.into(),
            phi: Arc::new(phi),
            beta0,
            beta_inf,
        }
    }
}

impl fmt::Debug for CgfFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CgfFn").field("name", &self.name).finish()
    }
}

impl Cgf for CgfFn {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }
    fn beta0(&self) -> f64 {
        self.beta0
    }
    fn beta_inf(&self) -> f64 {
        self.beta_inf
    }
}

/// A user model that can also be sampled, for use in simulation.
pub trait CustomModel: Cgf + fmt::Debug {
    fn sample_dyn(&self, rng: &mut dyn RngCore) -> f64;
}

/// Law of X: the built-in catalog plus user extensions.
#[derive(Debug, Clone)]
pub enum Model {
    /// X ~ N(mu, sigma²).
    Gaussian { mu: f64, sigma: f64 },
    /// X = log V with V ~ Beta(shape, 1); shape 1 is the log-uniform model.
    LogBeta { shape: f64 },
    /// X ∈ {0, h} with P[X = h] = p.
    Bernoulli { p: f64, h: f64 },
    Custom(Arc<dyn CustomModel>),
}

impl Model {
    pub fn gaussian(mu: f64, sigma: f64) -> Result<Model> {
        if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
            return Err(Error::Domain(format!("gaussian needs finite mu and sigma > 0, got mu={mu}, sigma={sigma}")));
        }
        Ok(Model::Gaussian { mu, sigma })
    }

    pub fn log_uniform() -> Model {
        Model::LogBeta { shape: 1.0 }
    }

    pub fn log_beta(shape: f64) -> Result<Model> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::Domain(format!("log-beta needs shape > 0, got {shape}")));
        }
        Ok(Model::LogBeta { shape })
    }

    pub fn bernoulli(p: f64, h: f64) -> Result<Model> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("bernoulli needs p in (0,1), got {p}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("bernoulli needs span h > 0, got {h}")));
        }
        let lat = Lattice::from_support(&[0.0, h], LATTICE_TOL * h.max(1.0));
        debug_assert!(lat.is_some_and(|l| (l.span - h).abs() <= 1e-12 * h && l.offset == 0.0));
        Ok(Model::Bernoulli { p, h })
    }

    pub fn custom(model: impl CustomModel + 'static) -> Model {
        Model::Custom(Arc::new(model))
    }

    /// One draw of X.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Model::Gaussian { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            Model::LogBeta { shape } => open_unit(rng).ln() / shape,
            Model::Bernoulli { p, h } => {
                if rng.random::<f64>() < p {
                    h
                } else {
                    0.0
                }
            }
            Model::Custom(ref m) => {
                let mut dynrng = DynRng(rng);
                m.sample_dyn(&mut dynrng)
            }
        }
    }

    /// One draw of S_n = X_1 + … + X_n.
    ///
    /// Catalog models draw S_n from its exact law in O(1) (normal, gamma,
    /// binomial); custom models add n independent draws.
    pub fn sample_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> f64 {
        assert!(n >= 1, "sample_sum requires n >= 1");
        match *self {
            Model::Gaussian { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu * n as f64 + sigma * (n as f64).sqrt() * z
            }
            Model::LogBeta { shape } => {
                let g = Gamma::new(n as f64, 1.0 / shape).expect("valid gamma parameters");
                -g.sample(rng)
            }
            Model::Bernoulli { p, h } => {
                let b = Binomial::new(n, p).expect("valid binomial parameters");
                h * b.sample(rng) as f64
            }
            Model::Custom(_) => (0..n).map(|_| self.sample(rng)).sum(),
        }
    }

    /// Exponentially tilted law dF̃/dF = e^{αx − φ(α)}, whose CGF is
    /// φ(t+α) − φ(α).
    pub fn tilt(&self, alpha: f64) -> Result<Model> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("tilt requires alpha > 0, got {alpha}")));
        }
        match *self {
            Model::Gaussian { mu, sigma } => Ok(Model::Gaussian {
                mu: mu + alpha * sigma * sigma,
                sigma,
            }),
            Model::LogBeta { shape } => Ok(Model::LogBeta { shape: shape + alpha }),
            Model::Bernoulli { p, h } => Ok(Model::Bernoulli {
                p: tilted_bernoulli_p(p, h, alpha),
                h,
            }),
            Model::Custom(ref m) => Err(Error::Unsupported(format!(
                "exact tilting of custom model `{}`",
                m.name()
            ))),
        }
    }

    /// Whether exact finite-n sum distributions are available.
    pub fn has_exact_sum_law(&self) -> bool {
        !matches!(self, Model::Custom(_))
    }

    /// ln P[S_n ≤ x], exact for catalog models.
    pub fn sum_log_cdf(&self, n: u64, x: f64) -> Result<f64> {
        let nf = n as f64;
        match *self {
            Model::Gaussian { mu, sigma } => Ok(log_normal_cdf((x - mu * nf) / (sigma * nf.sqrt()))),
            Model::LogBeta { shape } => {
                // S_n = −G, G ~ Gamma(n, rate = shape)
                if x >= 0.0 {
                    return Ok(0.0);
                }
                Ok(ln_gamma_regularized(nf, -shape * x).1)
            }
            Model::Bernoulli { p, h } => {
                let k = (x / h + 1e-9).floor();
                if k < 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(ln_binomial_range(n, p, 0, (k as u64).min(n)))
            }
            Model::Custom(ref m) => Err(Error::Unsupported(format!("exact sum law of custom model `{}`", m.name()))),
        }
    }

    /// ln P[S_n ≥ x], exact for catalog models.
    pub fn sum_log_sf(&self, n: u64, x: f64) -> Result<f64> {
        let nf = n as f64;
        match *self {
            Model::Gaussian { mu, sigma } => Ok(log_normal_sf((x - mu * nf) / (sigma * nf.sqrt()))),
            Model::LogBeta { shape } => {
                if x >= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(ln_gamma_regularized(nf, -shape * x).0)
            }
            Model::Bernoulli { p, h } => {
                let k = (x / h - 1e-9).ceil().max(0.0);
                if k > nf {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(ln_binomial_range(n, p, k as u64, n))
            }
            Model::Custom(ref m) => Err(Error::Unsupported(format!("exact sum law of custom model `{}`", m.name()))),
        }
    }

    /// ln P[S_n = x] for lattice models.
    pub fn sum_log_pmf(&self, n: u64, x: f64) -> Result<f64> {
        match *self {
            Model::Bernoulli { p, h } => {
                let k = x / h;
                if (k - k.round()).abs() * h > 1e-9 || k.round() < 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(crate::special::ln_binomial_pmf(n, p, k.round() as u64))
            }
            _ => Err(Error::NonLatticeModel(self.name())),
        }
    }
}

/// p̃ = p e^{αh} / (1 − p + p e^{αh}).
fn tilted_bernoulli_p(p: f64, h: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + (1.0 - p) / p * (-alpha * h).exp())
}

/// Uniform on (0, 1].
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

struct DynRng<'a, R: ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

impl Cgf for Model {
    fn name(&self) -> String {
        self.to_string()
    }

    fn phi(&self, t: f64) -> f64 {
        match *self {
            Model::Gaussian { mu, sigma } => mu * t + 0.5 * sigma * sigma * t * t,
            Model::LogBeta { shape } => -(t / shape).ln_1p(),
            Model::Bernoulli { p, h } => (p * (t * h).exp_m1()).ln_1p(),
            Model::Custom(ref m) => m.phi(t),
        }
    }

    fn phi_d1(&self, t: f64) -> f64 {
        match *self {
            Model::Gaussian { mu, sigma } => mu + sigma * sigma * t,
            Model::LogBeta { shape } => -1.0 / (shape + t),
            Model::Bernoulli { p, h } => h * tilted_bernoulli_p_at(p, h, t),
            Model::Custom(ref m) => m.phi_d1(t),
        }
    }

    fn phi_d2(&self, t: f64) -> f64 {
        match *self {
            Model::Gaussian { sigma, .. } => sigma * sigma,
            Model::LogBeta { shape } => 1.0 / ((shape + t) * (shape + t)),
            Model::Bernoulli { p, h } => {
                let q = tilted_bernoulli_p_at(p, h, t);
                h * h * q * (1.0 - q)
            }
            Model::Custom(ref m) => m.phi_d2(t),
        }
    }

    fn phi_d3(&self, t: f64) -> f64 {
        match *self {
            Model::Gaussian { .. } => 0.0,
            Model::LogBeta { shape } => -2.0 / (shape + t).powi(3),
            Model::Bernoulli { p, h } => {
                let q = tilted_bernoulli_p_at(p, h, t);
                h * h * h * q * (1.0 - q) * (1.0 - 2.0 * q)
            }
            Model::Custom(ref m) => m.phi_d3(t),
        }
    }

    fn beta0(&self) -> f64 {
        match *self {
            Model::Gaussian { mu, .. } => mu,
            Model::LogBeta { shape } => -1.0 / shape,
            Model::Bernoulli { p, h } => p * h,
            Model::Custom(ref m) => m.beta0(),
        }
    }

    fn beta_inf(&self) -> f64 {
        match *self {
            Model::Gaussian { .. } => f64::INFINITY,
            Model::LogBeta { .. } => 0.0,
            Model::Bernoulli { h, .. } => h,
            Model::Custom(ref m) => m.beta_inf(),
        }
    }

    fn lattice(&self) -> Option<Lattice> {
        match *self {
            Model::Bernoulli { h, .. } => Some(Lattice { span: h, offset: 0.0 }),
            Model::Custom(ref m) => m.lattice(),
            _ => None,
        }
    }
}

fn tilted_bernoulli_p_at(p: f64, h: f64, t: f64) -> f64 {
    if t == 0.0 {
        p
    } else {
        tilted_bernoulli_p(p, h, t)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Model::Gaussian { mu, sigma } => write!(f, "gaussian:mu={mu},sigma={sigma}"),
            Model::LogBeta { shape: 1.0 } => write!(f, "loguniform"),
            Model::LogBeta { shape } => write!(f, "logbeta:a={shape}"),
            Model::Bernoulli { p, h } => write!(f, "bernoulli:p={p},h={h}"),
            Model::Custom(ref m) => write!(f, "custom:{}", m.name()),
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    /// Parses `gaussian:mu=0,sigma=1`, `loguniform`, `logbeta:a=2`,
    /// `bernoulli:p=0.5,h=1`. Omitted parameters take the defaults shown.
    fn from_str(s: &str) -> Result<Model> {
        let parse_err = |reason: String| Error::Parse {
            kind: "model spec",
            input: s.to_string(),
            reason,
        };
        let (kind, rest) = match s.trim().split_once(':') {
            Some((k, r)) => (k.trim(), r.trim()),
            None => (s.trim(), ""),
        };
        let params = parse_params(rest).map_err(&parse_err)?;
        let get = |key: &str, default: f64| -> Result<f64> {
            Ok(params.iter().find(|(k, _)| k == key).map(|(_, v)| *v).unwrap_or(default))
        };
        let allow = |keys: &[&str]| -> Result<()> {
            for (k, _) in &params {
                if !keys.contains(&k.as_str()) {
                    return Err(parse_err(format!("unknown parameter `{k}`")));
                }
            }
            Ok(())
        };
        match kind.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => {
                allow(&["mu", "sigma"])?;
                Model::gaussian(get("mu", 0.0)?, get("sigma", 1.0)?)
            }
            "loguniform" | "stickbreaking" => {
                allow(&[])?;
                Ok(Model::log_uniform())
            }
            "logbeta" => {
                allow(&["a"])?;
                Model::log_beta(get("a", 1.0)?)
            }
            "bernoulli" => {
                allow(&["p", "h"])?;
                Model::bernoulli(get("p", 0.5)?, get("h", 1.0)?)
            }
            other => Err(parse_err(format!("unknown model `{other}`"))),
        }
    }
}

/// `k=v,k=v` → pairs.
pub(crate) fn parse_params(s: &str) -> std::result::Result<Vec<(String, f64)>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("bad number `{}`", v.trim()))?;
        out.push((k.trim().to_ascii_lowercase(), v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn catalog() -> Vec<Model> {
        vec![
            Model::gaussian(0.0, 1.0).unwrap(),
            Model::gaussian(-0.3, 0.7).unwrap(),
            Model::log_uniform(),
            Model::log_beta(2.5).unwrap(),
            Model::bernoulli(0.5, 1.0).unwrap(),
            Model::bernoulli(0.2, 0.7).unwrap(),
        ]
    }

    const PROBES: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 3.5, 7.0];

    #[test]
    fn phi_examples() {
        assert_relative_eq!(phi_eval(&Model::log_uniform(), 1.0).unwrap(), -std::f64::consts::LN_2, max_relative = 1e-15);
        for m in catalog() {
            assert_eq!(phi_eval(&m, 0.0).unwrap(), 0.0);
        }
        assert_relative_eq!(phi_eval(&Model::gaussian(0.0, 1.0).unwrap(), 2.0).unwrap(), 2.0);
        assert!(matches!(phi_eval(&Model::log_uniform(), -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn gaussian_phi_matches_numeric_integration() {
        // ∫ e^{2x} φ(x) dx by composite Simpson on [-12, 16]
        let n = 20_000;
        let (a, b) = (-12.0_f64, 16.0_f64);
        let h = (b - a) / n as f64;
        let f = |x: f64| (2.0 * x).exp() * crate::special::normal_pdf(x);
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let integral = s * h / 3.0;
        let m = Model::gaussian(0.0, 1.0).unwrap();
        assert_relative_eq!(m.phi(2.0), integral.ln(), max_relative = 1e-9);
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        for m in catalog() {
            for &t in &PROBES {
                let h = 1e-5;
                let d1 = (m.phi(t + h) - m.phi(t - h)) / (2.0 * h);
                let d2 = (m.phi_d1(t + h) - m.phi_d1(t - h)) / (2.0 * h);
                let d3 = (m.phi_d2(t + h) - m.phi_d2(t - h)) / (2.0 * h);
                assert_relative_eq!(m.phi_d1(t), d1, max_relative = 1e-6, epsilon = 1e-9);
                assert_relative_eq!(m.phi_d2(t), d2, max_relative = 1e-6, epsilon = 1e-9);
                assert_relative_eq!(m.phi_d3(t), d3, max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn finite_difference_defaults_track_closed_forms() {
        let user = CgfFn::new("loguniform-fd", |t| -(t.ln_1p()), -1.0, 0.0);
        let exact = Model::log_uniform();
        for &t in &[0.0, 1e-6, 0.05, 0.5, 1.0, 2.0, 10.0] {
            assert_relative_eq!(user.phi_d1(t), exact.phi_d1(t), max_relative = 1e-8);
            assert_relative_eq!(user.phi_d2(t), exact.phi_d2(t), max_relative = 1e-6);
            assert_relative_eq!(user.phi_d3(t), exact.phi_d3(t), max_relative = 1e-4);
        }
    }

    #[test]
    fn convexity_and_monotone_derivative() {
        for m in catalog() {
            let mut prev = m.beta0();
            for &t in &PROBES {
                assert!(m.phi_d2(t) > 0.0);
                let d1 = m.phi_d1(t);
                assert!(d1 > prev && d1 < m.beta_inf(), "{m}: φ′({t}) = {d1}");
                prev = d1;
            }
            for &(s, t) in &[(0.2, 1.0), (0.5, 3.0), (1.0, 6.0)] {
                assert!(m.phi(0.5 * (s + t)) < 0.5 * (m.phi(s) + m.phi(t)) - 1e-6);
            }
        }
    }

    #[test]
    fn support_bounds() {
        let lu = Model::log_uniform();
        assert_eq!((lu.beta0(), lu.beta_inf()), (-1.0, 0.0));
        let g = Model::gaussian(0.4, 2.0).unwrap();
        assert_eq!(g.beta0(), 0.4);
        assert!(g.beta_inf().is_infinite());
        let b = Model::bernoulli(0.3, 2.0).unwrap();
        assert_eq!(b.lattice(), Some(Lattice { span: 2.0, offset: 0.0 }));
    }

    #[test]
    fn lattice_from_support_finds_maximal_span() {
        let l = Lattice::from_support(&[0.0, 1.5, 4.5], 1e-12).unwrap();
        assert_relative_eq!(l.span, 1.5);
        assert_eq!(l.offset, 0.0);
        let shifted = Lattice::from_support(&[0.3, 0.8, 1.3], 1e-12).unwrap();
        assert_relative_eq!(shifted.span, 0.5, epsilon = 1e-12);
        assert_relative_eq!(shifted.offset, 0.3, epsilon = 1e-12);
        assert!(Lattice::from_support(&[0.0], 1e-12).is_none());
    }

    #[test]
    fn sample_sum_examples() {
        let mut rng = substream(1, 0);
        let b = Model::bernoulli(0.5, 1.0).unwrap();
        let n = 40u64;
        let reps = 100_000;
        let mut sum = 0.0;
        let lat = b.lattice().unwrap();
        for _ in 0..reps {
            let s = b.sample_sum(n, &mut rng);
            assert!(s >= 0.0 && s <= n as f64 && lat.contains(s, LATTICE_TOL));
            sum += s;
        }
        let mean = sum / reps as f64;
        let sd = (n as f64 * 0.25 / reps as f64).sqrt();
        assert!((mean - n as f64 / 2.0).abs() < 3.0 * sd, "mean {mean}");

        let lu = Model::log_uniform();
        for _ in 0..10_000 {
            assert!(lu.sample_sum(7, &mut rng) <= 0.0);
            assert!(lu.sample(&mut rng) <= 0.0);
        }
    }

    #[test]
    fn gaussian_single_draw_passes_ks() {
        let g = Model::gaussian(0.0, 1.0).unwrap();
        let mut rng = substream(2, 0);
        let mut xs: Vec<f64> = (0..10_000).map(|_| g.sample_sum(1, &mut rng)).collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        let m = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = crate::special::normal_cdf(x);
                (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 0.02, "KS {d}");
    }

    #[test]
    fn tilt_examples() {
        let g = Model::gaussian(0.0, 1.0).unwrap().tilt(2.0).unwrap();
        assert_relative_eq!(g.phi_d1(0.0), 2.0);
        let b = Model::bernoulli(0.5, 1.0).unwrap().tilt(3.0_f64.ln()).unwrap();
        match b {
            Model::Bernoulli { p, .. } => assert_relative_eq!(p, 0.75, max_relative = 1e-15),
            _ => unreachable!(),
        }
        for m in catalog() {
            assert_eq!(m.tilt(0.7).unwrap().phi(0.0), 0.0);
        }
        assert!(matches!(Model::log_uniform().tilt(0.0), Err(Error::Domain(_))));
        assert!(matches!(Model::log_uniform().tilt(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn tilted_cgf_is_shifted_cgf() {
        for m in catalog() {
            for &a in &[0.3, 1.0, 2.5] {
                let tm = m.tilt(a).unwrap();
                for &t in &PROBES {
                    assert_relative_eq!(tm.phi(t), m.phi(t + a) - m.phi(a), max_relative = 1e-12, epsilon = 1e-12);
                }
                assert_relative_eq!(tm.phi_d1(0.0), m.phi_d1(a), max_relative = 1e-12);
                assert_relative_eq!(tm.phi_d2(0.0), m.phi_d2(a), max_relative = 1e-12);
                assert_eq!(tm.lattice(), m.lattice());
            }
        }
    }

    #[test]
    fn tilting_composes() {
        for m in catalog() {
            let ab = m.tilt(0.4).unwrap().tilt(1.3).unwrap();
            let direct = m.tilt(1.7).unwrap();
            for &t in &PROBES {
                assert!((ab.phi(t) - direct.phi(t)).abs() <= 1e-12 * direct.phi(t).abs().max(1.0));
            }
        }
    }

    #[test]
    fn tilted_samples_have_tilted_moments() {
        let reps = 100_000;
        for (k, m) in catalog().into_iter().enumerate() {
            let alpha = 1.2;
            let tm = m.tilt(alpha).unwrap();
            let mut rng = substream(3, k as u64);
            let xs: Vec<f64> = (0..reps).map(|_| tm.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / reps as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
            let target_var = m.phi_d2(alpha);
            let se_mean = (target_var / reps as f64).sqrt();
            assert!((mean - m.phi_d1(alpha)).abs() < 4.0 * se_mean, "{m}: mean {mean}");
            // standard error of the sample variance: sqrt((μ4 − σ⁴)/reps)
            let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / reps as f64;
            let se_var = ((m4 - var * var) / reps as f64).sqrt();
            assert!((var - target_var).abs() < 4.0 * se_var, "{m}: var {var} vs {target_var}");
        }
    }

    #[test]
    fn exact_sum_laws_are_consistent() {
        for m in catalog() {
            let n = 12;
            for &x in &[-8.0, -3.0, -0.5, 0.5, 3.0, 6.5] {
                let lc = m.sum_log_cdf(n, x).unwrap();
                // P[S ≥ x] shares the atom at x with P[S ≤ x] on a lattice
                let shift = if m.lattice().is_some() { 1e-7 } else { 0.0 };
                let ls = m.sum_log_sf(n, x + shift).unwrap();
                let total = lc.exp() + ls.exp();
                assert!((total - 1.0).abs() < 1e-9, "{m} at {x}: {total}");
            }
        }
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["gaussian:mu=0,sigma=1", "loguniform", "bernoulli:p=0.5,h=1", "logbeta:a=2.5"] {
            let m: Model = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("gaussian:sigma=-1".parse::<Model>().is_err());
        assert!("cauchy".parse::<Model>().is_err());
        assert!("bernoulli:p=0.5,q=1".parse::<Model>().is_err());
        assert!("bernoulli:p=x".parse::<Model>().is_err());
    }

    #[derive(Debug)]
    struct Exponentialish;
    impl Cgf for Exponentialish {
        fn name(&self) -> String {
            "neg-exp".into()
        }
        // X = −E with E ~ Exp(1): φ(t) = −log(1+t), same law as log-uniform
        fn phi(&self, t: f64) -> f64 {
            -(t.ln_1p())
        }
        fn beta0(&self) -> f64 {
            -1.0
        }
        fn beta_inf(&self) -> f64 {
            0.0
        }
    }
    impl CustomModel for Exponentialish {
        fn sample_dyn(&self, rng: &mut dyn RngCore) -> f64 {
            (1.0 - rng.random::<f64>()).ln()
        }
    }

    #[test]
    fn custom_models_sample_but_do_not_tilt() {
        let m = Model::custom(Exponentialish);
        let mut rng = substream(4, 0);
        let s = m.sample_sum(5, &mut rng);
        assert!(s <= 0.0);
        assert!(matches!(m.tilt(1.0), Err(Error::Unsupported(_))));
        assert!(matches!(m.sum_log_cdf(3, -1.0), Err(Error::Unsupported(_))));
        assert_relative_eq!(m.phi_d1(1.0), -0.5, max_relative = 1e-8);
    }
}
