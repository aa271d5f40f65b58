//! Totally skewed (β = +1) α-stable laws, parametrised by their Lévy
//! measure α x^{−α−1} dx on (0, ∞):
//!
//!   log φ(u) = −Γ(1−α)|u|^α e^{−iπα sgn(u)/2},               α ≠ 1,
//!   log φ(u) = iu(1−γ) − |u|(π/2 + i sgn(u) log|u|),        α = 1.
//!
//! With this normalisation P[X > x] ~ x^{−α}; for α < 1 the law lives on
//! [0, ∞), for α ∈ (1, 2) it has mean zero.

use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::limit::inversion::{euler_laplace_cdf, CacheSet, GilPelaez};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// |φ(u)| below e^{−CF_CUTOFF} is treated as zero.
const CF_CUTOFF: f64 = 40.0;
/// For α ≥ 1, once x^{−α} drops below this the CDF is 1 − x^{−α}; the next
/// term of the tail expansion is O(x^{−2α}) (times log x at α = 1).
const TAIL_SWITCH: f64 = 1e-4;
/// Left of −LEFT_CUT the CDF of an α ≥ 1 law is below any double.
const LEFT_CUT: f64 = 1e3;
const GP_TOL: f64 = 1e-7;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: "(0, 2)".into(),
        });
    }
    Ok(())
}

/// k with |φ(u)| = e^{−k|u|^α}: Γ(1−α)cos(πα/2), or π/2 at α = 1.
pub fn tail_exponent(alpha: f64) -> f64 {
    if alpha == 1.0 {
        FRAC_PI_2
    } else {
        gamma(1.0 - alpha) * (FRAC_PI_2 * alpha).cos()
    }
}

fn log_cf_unchecked(alpha: f64, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let a = u.abs();
    if alpha == 1.0 {
        Complex64::new(-a * FRAC_PI_2, u * (1.0 - EULER_GAMMA) - u * a.ln())
    } else {
        let m = -gamma(1.0 - alpha) * a.powf(alpha);
        let phase = FRAC_PI_2 * alpha;
        Complex64::new(m * phase.cos(), -m * u.signum() * phase.sin())
    }
}

/// log φ(u) of the totally skewed α-stable law.
pub fn stable_log_cf(alpha: f64, u: f64) -> Result<Complex64> {
    check_alpha(alpha)?;
    Ok(log_cf_unchecked(alpha, u))
}

/// F(x) of the totally skewed α-stable law.
pub fn stable_cdf(alpha: f64, x: f64) -> Result<f64> {
    StableLaw::new(alpha)?.cdf(x)
}

/// A totally skewed α-stable law with its inversion set-up precomputed.
#[derive(Debug, Clone, Copy)]
pub struct StableLaw {
    alpha: f64,
    gp: GilPelaez,
}

impl StableLaw {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let cutoff = (CF_CUTOFF / tail_exponent(alpha)).powf(1.0 / alpha);
        // u = v^p keeps the Gil-Pelaez integrand bounded at v = 0
        let power = if alpha < 1.0 {
            1.0 / alpha
        } else if alpha == 1.0 {
            2.0
        } else {
            1.0
        };
        let gp = GilPelaez::new(|u| log_cf_unchecked(alpha, u), cutoff, power, GP_TOL);
        Ok(StableLaw { alpha, gp })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_cf(&self, u: f64) -> Complex64 {
        log_cf_unchecked(self.alpha, u)
    }

    /// ln E e^{−sX} = −Γ(1−α)s^α, defined for α < 1 only.
    fn laplace_exponent(&self, s: Complex64) -> Complex64 {
        -gamma(1.0 - self.alpha) * s.powf(self.alpha)
    }

    /// F(x) by Gil-Pelaez inversion, without any shortcuts.
    pub fn cdf_gil_pelaez(&self, x: f64) -> Result<f64> {
        self.gil_pelaez_cached(x, &mut CacheSet::default())
    }

    fn gil_pelaez_cached(&self, x: f64, caches: &mut CacheSet) -> Result<f64> {
        let alpha = self.alpha;
        self.gp.cdf(|u| log_cf_unchecked(alpha, u), x, caches.entry(0).or_default())
    }

    fn cdf_cached(&self, x: f64, caches: &mut CacheSet) -> Result<f64> {
        if self.alpha < 1.0 {
            return Ok(euler_laplace_cdf(|s| self.laplace_exponent(s), x));
        }
        if x < -LEFT_CUT {
            return Ok(0.0);
        }
        if x > 0.0 {
            let tail = x.powf(-self.alpha);
            if tail < TAIL_SWITCH {
                return Ok(1.0 - tail);
            }
        }
        self.gil_pelaez_cached(x, caches)
    }

    /// F(x) to about 1e−6 absolute. Laws with α < 1 are supported on
    /// [0, ∞) and are inverted from their Laplace transform; the others by
    /// Gil-Pelaez.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.cdf_cached(x, &mut CacheSet::default())
    }

    /// F at many points, sharing characteristic-function evaluations.
    pub fn cdf_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        super::map_chunks(xs, |x, caches| self.cdf_cached(x, caches))
    }
}

/// Lévy(½) closed form for the α = ½ member: F(x) = erfc(√(π/(4x))).
pub fn levy_half_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        statrs::function::erf::erfc((PI / (4.0 * x)).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_cf_examples() {
        let v = stable_log_cf(0.5, 1.0).unwrap();
        assert_relative_eq!(v.re, -1.253_314_137_315_500_3, max_relative = 1e-12);
        assert_relative_eq!(v.im, 1.253_314_137_315_500_3, max_relative = 1e-12);
        let v = stable_log_cf(1.0, 1.0).unwrap();
        assert_relative_eq!(v.re, -FRAC_PI_2, max_relative = 1e-15);
        assert_relative_eq!(v.im, 1.0 - EULER_GAMMA, max_relative = 1e-15);
        for a in [0.3, 1.0, 1.7] {
            assert_eq!(stable_log_cf(a, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        }
        assert!(stable_log_cf(2.0, 1.0).is_err());
        assert!(stable_log_cf(0.0, 1.0).is_err());
    }

    #[test]
    fn levy_half_oracle() {
        let law = StableLaw::new(0.5).unwrap();
        for &x in &[0.5, 1.0, 2.0, 5.0, 1e6] {
            assert!((law.cdf(x).unwrap() - levy_half_cdf(x)).abs() < 1e-7, "x = {x}");
        }
        for &x in &[0.5, 1.0, 2.0, 5.0] {
            let gp = law.cdf_gil_pelaez(x).unwrap();
            assert!((gp - levy_half_cdf(x)).abs() < 1e-5, "x = {x}: {gp}");
        }
        assert_eq!(law.cdf(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn right_tail_is_x_to_the_minus_alpha() {
        let law = StableLaw::new(1.5).unwrap();
        let tail = 1.0 - law.cdf_gil_pelaez(50.0).unwrap();
        assert!((tail / 50f64.powf(-1.5) - 1.0).abs() < 0.01, "{tail}");
        assert!(law.cdf(50.0).unwrap() < 1.0 - 1e-3);
    }

    fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
        xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
    }

    #[test]
    fn mean_is_zero_above_one() {
        for alpha in [1.25, 1.5, 1.75] {
            let law = StableLaw::new(alpha).unwrap();
            let neg: Vec<f64> = (0..=2000).map(|i| -20.0 + 0.01 * i as f64).collect();
            let x_max = TAIL_SWITCH.powf(-1.0 / alpha);
            let pos: Vec<f64> = (0..=200)
                .map(|i| 0.005 * i as f64)
                .chain((1..=3000).map(|i| x_max.powf(i as f64 / 3000.0)))
                .collect();
            let f_neg = law.cdf_many(&neg).unwrap();
            let f_pos: Vec<f64> = law.cdf_many(&pos).unwrap().iter().map(|f| 1.0 - f).collect();
            let beyond = x_max.powf(1.0 - alpha) / (alpha - 1.0);
            let mean = trapezoid(&pos, &f_pos) + beyond - trapezoid(&neg, &f_neg);
            assert!(mean.abs() < 1e-3, "alpha {alpha}: {mean}");
        }
    }

    #[test]
    fn laplace_and_fourier_agree_for_small_alpha() {
        for alpha in [0.3, 0.65, 0.9] {
            let law = StableLaw::new(alpha).unwrap();
            for &x in &[0.2, 1.0, 3.0, 10.0] {
                let a = law.cdf(x).unwrap();
                let b = law.cdf_gil_pelaez(x).unwrap();
                assert!((a - b).abs() < 1e-5, "alpha {alpha}, x {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tail_switch_is_seamless() {
        for alpha in [1.0, 1.4325, 1.9] {
            let law = StableLaw::new(alpha).unwrap();
            let x_switch = TAIL_SWITCH.powf(-1.0 / alpha);
            let below = law.cdf_gil_pelaez(x_switch * 0.999).unwrap();
            let above = law.cdf(x_switch * 1.001).unwrap();
            assert!((below - above).abs() < 2e-6, "alpha {alpha}: {below} vs {above}");
        }
    }

    #[test]
    fn exponent_positive() {
        for i in 1..40 {
            let a = 0.05 * i as f64;
            assert!(tail_exponent(a) > 0.0, "alpha {a}");
        }
    }
}
