//! Special functions and summation helpers, mostly in log-space.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// ln(2π)/2
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal survival function 1 − Φ(z), accurate in the upper tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// ln(1 − Φ(z)). Uses the asymptotic series once `erfc` would underflow.
pub fn log_normal_sf(z: f64) -> f64 {
    if z < 30.0 {
        return normal_sf(z).ln();
    }
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
    -0.5 * z2 - z.ln() - HALF_LN_2PI + series.ln()
}

/// ln Φ(z).
pub fn log_normal_cdf(z: f64) -> f64 {
    log_normal_sf(-z)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - HALF_LN_2PI).exp()
}

/// ln(1 − e^x) for x < 0.
pub fn log1mexp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// ln Σ e^{x_i}; −∞ for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let terms: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    m + pairwise_sum(&terms).ln()
}

/// Pairwise (cascade) summation; rounding error grows as O(log n) ulp.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// ln C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// ln P[K = k] for K ~ Binomial(n, p).
pub fn ln_binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let kf = k as f64;
    let rest = (n - k) as f64;
    let a = if k == 0 { 0.0 } else { kf * p.ln() };
    let b = if k == n { 0.0 } else { rest * (-p).ln_1p() };
    ln_choose(n, k) + a + b
}

/// ln P[lo ≤ K ≤ hi] for K ~ Binomial(n, p), by log-space summation.
pub fn ln_binomial_range(n: u64, p: f64, lo: u64, hi: u64) -> f64 {
    if lo > hi || lo > n {
        return f64::NEG_INFINITY;
    }
    let hi = hi.min(n);
    let terms: Vec<f64> = (lo..=hi).map(|k| ln_binomial_pmf(n, p, k)).collect();
    log_sum_exp(&terms)
}

/// ln P(a, x) and ln Q(a, x): log regularized lower and upper incomplete gamma.
pub fn ln_gamma_regularized(a: f64, x: f64) -> (f64, f64) {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x.is_infinite() {
        return (0.0, f64::NEG_INFINITY);
    }
    let ln_pref = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series for P
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        let ln_p = ln_pref + sum.ln();
        (ln_p, log1mexp(ln_p.min(-1e-300)))
    } else {
        // modified Lentz continued fraction for Q
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let ln_q = ln_pref + h.ln();
        (log1mexp(ln_q.min(-1e-300)), ln_q)
    }
}

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// 2π
pub const TWO_PI: f64 = 2.0 * PI;
