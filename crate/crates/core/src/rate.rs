//! The Legendre–Fenchel rate function I(β) = sup_{t≥0}(βt − φ(t)).
//!
//! On (β₀, β∞) the supremum is attained at the unique α > 0 with φ′(α) = β,
//! so I(φ′(α)) = αφ′(α) − φ(α) =: g(α) and I′(φ′(α)) = α. Everything here is
//! driven by two monotone root problems: φ′(α) = β and g(α) = c, where
//! g′(α) = αφ″(α) > 0.

use crate::error::{Error, Result};
use crate::model::Cgf;

/// Relative tolerance of the α solvers.
pub const SOLVER_RTOL: f64 = 1e-12;
/// Iteration cap of the α solvers.
pub const SOLVER_MAX_ITER: usize = 200;

const BRACKET_LO: f64 = 1e-8;
const BRACKET_HI: f64 = 1.0;
const ALPHA_CEILING: f64 = 1e12;

/// Rate function of a model, with its critical points cached.
#[derive(Debug, Clone)]
pub struct RateFunction<M: Cgf> {
    model: M,
    c1: f64,
    c2: f64,
    c_inf: f64,
}

impl<M: Cgf> RateFunction<M> {
    /// Builds the rate function and checks 0 < c₁ < c₂ < c∞.
    pub fn new(model: M) -> Result<Self> {
        let c1 = model.phi_d1(1.0) - model.phi(1.0);
        let c2 = 2.0 * model.phi_d1(2.0) - model.phi(2.0);
        let mut rf = RateFunction {
            model,
            c1,
            c2,
            c_inf: f64::INFINITY,
        };
        rf.c_inf = rf.limit_of_g();
        if !(0.0 < c1 && c1 < c2 && c2 < rf.c_inf) {
            return Err(Error::Domain(format!(
                "model `{}` violates 0 < c1 < c2 < c_inf: c1={c1}, c2={c2}, c_inf={}",
                rf.model.name(),
                rf.c_inf
            )));
        }
        Ok(rf)
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    /// (c₁, c₂) = (φ′(1) − φ(1), 2φ′(2) − φ(2)).
    pub fn critical_points(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// c∞ = lim_{α→∞} I(φ′(α)), possibly +∞.
    pub fn c_inf(&self) -> f64 {
        self.c_inf
    }

    /// g(α) = αφ′(α) − φ(α) = I(φ′(α)).
    pub fn g(&self, alpha: f64) -> f64 {
        alpha * self.model.phi_d1(alpha) - self.model.phi(alpha)
    }

    /// The unique α > 0 with φ′(α) = β, for β ∈ (β₀, β∞).
    pub fn alpha_of_beta(&self, beta: f64) -> Result<f64> {
        alpha_of_beta(&self.model, beta)
    }

    /// I(β). +∞ above β∞; at a finite β∞ the left limit c∞ (which may be +∞).
    pub fn rate(&self, beta: f64) -> Result<f64> {
        let (b0, binf) = (self.model.beta0(), self.model.beta_inf());
        if !(beta > b0) {
            return Err(Error::Domain(format!("rate function requires beta > beta0 = {b0}, got {beta}")));
        }
        if beta > binf {
            return Ok(f64::INFINITY);
        }
        if beta == binf {
            return Ok(self.c_inf);
        }
        let alpha = self.alpha_of_beta(beta)?;
        Ok(alpha * beta - self.model.phi(alpha))
    }

    /// I′(β) = α(β).
    pub fn rate_prime(&self, beta: f64) -> Result<f64> {
        self.alpha_of_beta(beta)
    }

    /// The unique α > 0 with I(φ′(α)) = c, and β = φ′(α).
    pub fn alpha_of_c(&self, c: f64) -> Result<(f64, f64)> {
        if !(c > 0.0 && c < self.c_inf) {
            return Err(Error::OutOfRange {
                what: "c",
                value: c,
                range: format!("(0, {})", self.c_inf),
            });
        }
        let alpha = solve_increasing(
            "alpha_of_c",
            |a| self.g(a) - c,
            |a| a * self.model.phi_d2(a),
        )?;
        Ok((alpha, self.model.phi_d1(alpha)))
    }

    /// I⁻¹(c) = φ′(α(c)).
    pub fn rate_inverse(&self, c: f64) -> Result<f64> {
        Ok(self.alpha_of_c(c)?.1)
    }

    /// lim_{α→∞} g(α) along α = 2^k.
    ///
    /// g is increasing, so the limit is finite exactly when the increments
    /// die out; the sequence is declared convergent once an increment falls
    /// below 1e−13 relative, and divergent if that never happens by α = 2^64
    /// (logarithmic growth, as for the log-uniform model, keeps increments
    /// near a constant).
    fn limit_of_g(&self) -> f64 {
        let mut prev = self.g(1.0);
        for k in 1..=64 {
            let a = 2f64.powi(k);
            let cur = self.g(a);
            if !cur.is_finite() {
                return f64::INFINITY;
            }
            if (cur - prev).abs() <= 1e-13 * cur.abs().max(1.0) {
                return cur;
            }
            prev = cur;
        }
        f64::INFINITY
    }
}

/// The unique α > 0 with φ′(α) = β, for β ∈ (β₀, β∞). Needs no
/// assumption on the critical points, unlike [`RateFunction::new`].
pub fn alpha_of_beta<M: Cgf + ?Sized>(model: &M, beta: f64) -> Result<f64> {
    let (b0, binf) = (model.beta0(), model.beta_inf());
    if !(beta > b0 && beta < binf) {
        return Err(Error::OutOfRange {
            what: "beta",
            value: beta,
            range: format!("({b0}, {binf})"),
        });
    }
    solve_increasing("alpha_of_beta", |a| model.phi_d1(a) - beta, |a| model.phi_d2(a))
}

/// Root of a strictly increasing function on (0, ∞): geometric bracketing
/// from [1e−8, 1] followed by Newton steps safeguarded by bisection.
fn solve_increasing(what: &'static str, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Result<f64> {
    let mut lo = BRACKET_LO;
    let mut hi = BRACKET_HI;
    while f(lo) > 0.0 {
        lo *= 0.1;
        if lo < 1e-300 {
            return Err(Error::NonConvergence { what, iterations: 0 });
        }
    }
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > ALPHA_CEILING {
            return Err(Error::NonConvergence { what, iterations: 0 });
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..SOLVER_MAX_ITER {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= SOLVER_RTOL * next.abs() * 0.01 || (hi - lo) <= SOLVER_RTOL * 0.01 * hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NonConvergence {
        what,
        iterations: SOLVER_MAX_ITER,
    })
}
