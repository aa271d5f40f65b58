//! Infinitely divisible laws with Lévy measure Σ_{x ∈ e^{hℤ−Δ}} x^{−α} δ_x,
//! the limits of normalised sums when X is lattice:
//!
//!   log φ(u) = iCu + Σ_x (e^{iux} − 1 − iux·1{x<1}) x^{−α}.
//!
//! The constant C is pinned so that the law matches the centring used for
//! the sums: no centring for α < 1 (C = Σ_{x<1} x^{1−α}, so the law is that
//! of Σ_x x·Poisson(x^{−α}) ≥ 0), full mean centring for α ∈ (1, 2)
//! (C = −Σ_{x≥1} x^{1−α}, so the law has mean zero).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::limit::inversion::{cexpm1, euler_laplace_cdf, sin_minus_id, CacheSet, GilPelaez};

/// Series terms are dropped once a geometric bound on everything left is
/// below this.
const SERIES_TOL: f64 = 1e-17;
const CF_CUTOFF: f64 = 40.0;
/// For α > 1, once the Lévy tail mass beyond x drops below this the CDF is
/// 1 − ν((x, ∞)).
const TAIL_SWITCH: f64 = 1e-5;
const LEFT_CUT: f64 = 1e3;
const GP_TOL: f64 = 1e-5;

fn check(alpha: f64, delta: f64, h: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: "(0, 2)".into(),
        });
    }
    if alpha == 1.0 {
        return Err(Error::Unsupported(
            "lattice limit law at alpha = 1 (shift constant not determined)".into(),
        ));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("span h must be positive, got {h}")));
    }
    if !(delta >= 0.0 && delta < h) {
        return Err(Error::OutOfRange {
            what: "delta",
            value: delta,
            range: format!("[0, {h})"),
        });
    }
    Ok(())
}

/// Largest k with e^{hk−Δ} < 1.
fn last_below_one(delta: f64, h: f64) -> i64 {
    (delta / h).ceil() as i64 - 1
}

fn atom(k: i64, delta: f64, h: f64) -> f64 {
    (h * k as f64 - delta).exp()
}

/// C_{α,Δ} in closed form (geometric series).
pub fn lattice_shift_constant(alpha: f64, delta: f64, h: f64) -> Result<f64> {
    check(alpha, delta, h)?;
    let k0 = last_below_one(delta, h);
    let q = 1.0 - alpha;
    Ok(if alpha < 1.0 {
        // Σ_{k ≤ k0} e^{q(hk−Δ)}
        (q * (h * k0 as f64 - delta)).exp() / (-(-q * h).exp_m1())
    } else {
        // −Σ_{k ≥ k0+1} e^{q(hk−Δ)}, q < 0
        -(q * (h * (k0 + 1) as f64 - delta)).exp() / (-(q * h).exp_m1())
    })
}

/// ν((τ, ∞)) = Σ_{x > τ} x^{−α} in closed form.
pub fn levy_tail_mass(alpha: f64, delta: f64, h: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return f64::INFINITY;
    }
    // smallest k with e^{hk−Δ} > τ
    let mut k = ((tau.ln() + delta) / h).floor() as i64;
    while atom(k, delta, h) <= tau {
        k += 1;
    }
    while k > i64::MIN + 1 && atom(k - 1, delta, h) > tau {
        k -= 1;
    }
    (-alpha * (h * k as f64 - delta)).exp() / (-(-alpha * h).exp_m1())
}

/// The Lévy–Khintchine series without the drift term, over atoms with
/// index k ≤ `k_max` (all atoms when `None`).
fn jump_part(alpha: f64, delta: f64, h: f64, u: f64, k_max: Option<i64>) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let k0 = last_below_one(delta, h);
    let (step, wstep) = (h.exp(), (-alpha * h).exp());
    let mut re = 0.0;
    let mut im = 0.0;
    // x < 1: |e^{iux} − 1 − iux| x^{−α} ≤ u²x^{2−α}/2, ratio e^{−(2−α)h}
    let r_small = (-(2.0 - alpha) * h).exp();
    let mut x = atom(k0, delta, h);
    let mut w = x.powf(-alpha);
    loop {
        let t = u * x;
        let s = (0.5 * t).sin();
        re -= 2.0 * s * s * w;
        im += sin_minus_id(t) * w;
        if 0.5 * t * t * w * r_small / (1.0 - r_small) < SERIES_TOL {
            break;
        }
        x /= step;
        w /= wstep;
    }
    // x ≥ 1: |e^{iux} − 1| x^{−α} ≤ 2x^{−α}, ratio e^{−αh}
    let r_large = wstep;
    // x is recomputed exactly each step: u·x is a phase, and a product of
    // many factors e^h drifts by far more than a radian at large x
    let mut k = k0 + 1;
    let mut w = atom(k, delta, h).powf(-alpha);
    while k_max.is_none_or(|m| k <= m) {
        let x = atom(k, delta, h);
        let (s, c) = (0.5 * u * x).sin_cos();
        re -= 2.0 * s * s * w;
        im += 2.0 * s * c * w;
        if 2.0 * w * r_large / (1.0 - r_large) < SERIES_TOL {
            break;
        }
        k += 1;
        w *= wstep;
    }
    Complex64::new(re, im)
}

/// log φ(u) of the lattice infinitely divisible law.
pub fn lattice_id_log_cf(alpha: f64, delta: f64, h: f64, u: f64) -> Result<Complex64> {
    let c = lattice_shift_constant(alpha, delta, h)?;
    Ok(jump_part(alpha, delta, h, u, None) + Complex64::new(0.0, c * u))
}

/// F(x) of the lattice infinitely divisible law.
pub fn lattice_id_cdf(alpha: f64, delta: f64, h: f64, x: f64) -> Result<f64> {
    LatticeIdLaw::new(alpha, delta, h)?.cdf(x)
}

/// A lattice infinitely divisible law with inversion set-up precomputed.
#[derive(Debug, Clone, Copy)]
pub struct LatticeIdLaw {
    alpha: f64,
    delta: f64,
    h: f64,
    shift: f64,
    gp: GilPelaez,
}

impl LatticeIdLaw {
    pub fn new(alpha: f64, delta: f64, h: f64) -> Result<Self> {
        let shift = lattice_shift_constant(alpha, delta, h)?;
        let lcf = |u: f64| jump_part(alpha, delta, h, u, None) + Complex64::new(0.0, shift * u);
        // Re log φ(u e^h) = e^{αh} Re log φ(u): once Re log φ < −40 over a
        // whole period [U, U e^h] it stays below for all larger u
        let below = |u: f64| (0..=32).all(|j| lcf(u * (h * j as f64 / 32.0).exp()).re < -CF_CUTOFF);
        let mut cutoff = 1.0;
        while !below(cutoff) {
            cutoff *= 2.0;
            if cutoff > 1e12 {
                return Err(Error::Quadrature("characteristic function does not decay".into()));
            }
        }
        let power = if alpha < 1.0 { 1.0 / alpha } else { 1.0 };
        let gp = GilPelaez::new(lcf, cutoff, power, GP_TOL);
        Ok(LatticeIdLaw {
            alpha,
            delta,
            h,
            shift,
            gp,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn span(&self) -> f64 {
        self.h
    }
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn log_cf(&self, u: f64) -> Complex64 {
        jump_part(self.alpha, self.delta, self.h, u, None) + Complex64::new(0.0, self.shift * u)
    }

    /// ln E e^{−sX} = Σ_x (e^{−sx} − 1) x^{−α} for α < 1, Re s > 0.
    fn laplace_exponent(&self, s: Complex64) -> Complex64 {
        let (alpha, delta, h) = (self.alpha, self.delta, self.h);
        let k0 = last_below_one(delta, h);
        let mut acc = Complex64::new(0.0, 0.0);
        // x < 1: |e^{−sx} − 1| x^{−α} ≲ |s| x^{1−α}, ratio e^{−(1−α)h}
        let r_small = (-(1.0 - alpha) * h).exp();
        let mut k = k0;
        loop {
            let x = atom(k, delta, h);
            let w = x.powf(-alpha);
            acc += cexpm1(-s * x) * w;
            if s.norm() * x * w / (1.0 - r_small) < SERIES_TOL {
                break;
            }
            k -= 1;
        }
        // x ≥ 1: once e^{−Re(s)x} is negligible the rest is −Σ x^{−α}
        let r_large = (-alpha * h).exp();
        let mut k = k0 + 1;
        loop {
            let x = atom(k, delta, h);
            let w = x.powf(-alpha);
            if s.re * x > 45.0 {
                acc -= w / (1.0 - r_large);
                break;
            }
            acc += cexpm1(-s * x) * w;
            if 2.0 * w * r_large / (1.0 - r_large) < SERIES_TOL {
                break;
            }
            k += 1;
        }
        acc
    }

    /// F(x) by Gil-Pelaez inversion, without the tail shortcuts.
    ///
    /// Atoms far above x make the characteristic function wiggle at
    /// frequencies no quadrature can follow, so they are split off: with
    /// J the sum of jumps above X ≫ |x| (rate λ = ν((X, ∞))) and Y the rest,
    /// F(x) = e^{−λ}F_Y(x) + E[F_Y(x − J); J > 0]. The second term vanishes
    /// for α < 1 (Y ≥ 0) and is below F_Y(x − X) ≈ 0 for α > 1, whose left
    /// tail is thinner than Gaussian.
    pub fn cdf_gil_pelaez(&self, x: f64) -> Result<f64> {
        self.gil_pelaez_cached(x, &mut CacheSet::default())
    }

    fn gil_pelaez_cached(&self, x: f64, caches: &mut CacheSet) -> Result<f64> {
        let (alpha, delta, h) = (self.alpha, self.delta, self.h);
        let x_cut = 4.0 * x.abs().max(1.0) + 64.0 * h;
        let k_cut = ((x_cut.ln() + delta) / h).ceil() as i64;
        let lambda = levy_tail_mass(alpha, delta, h, atom(k_cut, delta, h));
        let shift = self.shift;
        let lcf = |u: f64| jump_part(alpha, delta, h, u, Some(k_cut)) + Complex64::new(0.0, shift * u);
        let gp = GilPelaez {
            phase_variation: self.gp.phase_variation + x_cut * self.gp.cutoff,
            ..self.gp
        };
        let f_y = gp.cdf(lcf, x, caches.entry(k_cut).or_default())?;
        Ok((-lambda).exp() * f_y)
    }

    fn cdf_cached(&self, x: f64, caches: &mut CacheSet) -> Result<f64> {
        if self.alpha < 1.0 {
            return Ok(euler_laplace_cdf(|s| self.laplace_exponent(s), x));
        }
        if x < -LEFT_CUT {
            return Ok(0.0);
        }
        if x > 0.0 {
            let tail = levy_tail_mass(self.alpha, self.delta, self.h, x);
            if tail < TAIL_SWITCH {
                return Ok(1.0 - tail);
            }
        }
        self.gil_pelaez_cached(x, caches)
    }

    /// F(x) to about 1e−4 absolute. For α < 1 the law is supported on
    /// [0, ∞) and is inverted from its Laplace transform.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.cdf_cached(x, &mut CacheSet::default())
    }

    pub fn cdf_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        super::map_chunks(xs, |x, caches| self.cdf_cached(x, caches))
    }
}
