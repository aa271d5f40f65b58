//! Sharp large-deviation asymptotics for S_n = X_1 + … + X_n, exact tails
//! for the catalog models, and importance-sampling estimators built on the
//! exponential change of measure dF̃/dF = e^{αx − φ(α)}.
//!
//! Every probability is carried in log-space: e^{−nI(β)} underflows double
//! precision long before n reaches a few thousand.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{Cgf, Model};
use crate::rate::alpha_of_beta;
use crate::rng::{substream, StreamRng};
use crate::special::{normal_cdf, normal_pdf, pairwise_sum};

/// Replicates per independent random stream in the parallel estimators.
const CHUNK: u64 = 4096;
/// Tolerance for "nβ lies on the lattice".
const ON_LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailKind {
    NonLatticeTail,
    LatticePointMass,
    LatticeTail,
    ChernoffBound,
}

/// An asymptotic approximation (or bound) of a tail probability of S_n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailAsymptotic {
    pub log_value: f64,
    pub n: u64,
    pub beta: f64,
    pub alpha: f64,
    pub kind: TailKind,
}

impl TailAsymptotic {
    /// The approximation itself; may underflow to 0 for large n.
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Monte Carlo estimate of a (possibly tiny) expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// ln(mean), finite even when `mean` underflows.
    pub log_mean: f64,
    pub reps: u64,
    pub seed: u64,
}

impl IsEstimate {
    /// stderr / mean.
    pub fn relative_error(&self) -> f64 {
        self.stderr / self.mean
    }

    /// |estimate − target| / stderr, computed from log-values so that it
    /// works when both are far below the smallest double.
    pub fn z_score_log(&self, log_target: f64) -> f64 {
        let r = (self.log_mean - log_target).exp();
        (r - 1.0).abs() / (self.relative_error() * r)
    }

    fn scaled(self, log_factor: f64) -> IsEstimate {
        let f = log_factor.exp();
        IsEstimate {
            mean: self.mean * f,
            stderr: self.stderr * f,
            log_mean: self.log_mean + log_factor,
            ..self
        }
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Ok(())
}

/// ln[(α√(2πφ″(α)n))⁻¹ e^{−nI(β)}]; P[S_n ≥ nβ] for non-lattice X.
pub fn bahadur_rao_tail<M: Cgf + ?Sized>(model: &M, beta: f64, n: u64) -> Result<TailAsymptotic> {
    check_n(n)?;
    if model.lattice().is_some() {
        return Err(Error::LatticeModel(model.name()));
    }
    let alpha = alpha_of_beta(model, beta)?;
    let nf = n as f64;
    let rate = alpha * beta - model.phi(alpha);
    let log_value = -(alpha * (2.0 * PI * model.phi_d2(alpha) * nf).sqrt()).ln() - nf * rate;
    Ok(TailAsymptotic {
        log_value,
        n,
        beta,
        alpha,
        kind: TailKind::NonLatticeTail,
    })
}

fn lattice_pieces<M: Cgf + ?Sized>(model: &M, beta: f64, n: u64) -> Result<(f64, f64, f64)> {
    check_n(n)?;
    let lat = model.lattice().ok_or_else(|| Error::NonLatticeModel(model.name()))?;
    let nf = n as f64;
    let k = (nf * beta - nf * lat.offset) / lat.span;
    if (k - k.round()).abs() * lat.span > ON_LATTICE_TOL * (nf * beta).abs().max(1.0) {
        return Err(Error::OffLattice(nf * beta, lat.span));
    }
    let alpha = alpha_of_beta(model, beta)?;
    let rate = alpha * beta - model.phi(alpha);
    let log_mass = lat.span.ln() - 0.5 * (2.0 * PI * model.phi_d2(alpha) * nf).ln() - nf * rate;
    Ok((alpha, lat.span, log_mass))
}

/// ln[h(2πφ″(α)n)^{−1/2} e^{−nI(β)}]; P[S_n = nβ] for lattice X of span h.
pub fn lattice_point_mass<M: Cgf + ?Sized>(model: &M, beta: f64, n: u64) -> Result<TailAsymptotic> {
    let (alpha, _, log_value) = lattice_pieces(model, beta, n)?;
    Ok(TailAsymptotic {
        log_value,
        n,
        beta,
        alpha,
        kind: TailKind::LatticePointMass,
    })
}

/// Point mass times (1 − e^{−αh})⁻¹; P[S_n ≥ nβ] for lattice X.
pub fn lattice_tail<M: Cgf + ?Sized>(model: &M, beta: f64, n: u64) -> Result<TailAsymptotic> {
    let (alpha, h, log_mass) = lattice_pieces(model, beta, n)?;
    let log_geom = -crate::special::log1mexp(-alpha * h);
    Ok(TailAsymptotic {
        log_value: log_mass + log_geom,
        n,
        beta,
        alpha,
        kind: TailKind::LatticeTail,
    })
}

/// ln e^{−nI(β)}, an upper bound for P[S_n ≥ nβ] whenever β > β₀.
pub fn chernoff_bound<M: Cgf + ?Sized>(model: &M, beta: f64, n: u64) -> Result<TailAsymptotic> {
    check_n(n)?;
    let b0 = model.beta0();
    if !(beta > b0) {
        return Err(Error::Domain(format!("Chernoff bound requires beta > beta0 = {b0}, got {beta}")));
    }
    let (alpha, rate) = if beta < model.beta_inf() {
        let a = alpha_of_beta(model, beta)?;
        (a, a * beta - model.phi(a))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(TailAsymptotic {
        log_value: -(n as f64) * rate,
        n,
        beta,
        alpha,
        kind: TailKind::ChernoffBound,
    })
}

/// Exact ln P[S_n ≥ nβ] for catalog models.
pub fn exact_log_tail(model: &Model, beta: f64, n: u64) -> Result<f64> {
    check_n(n)?;
    model.sum_log_sf(n, n as f64 * beta)
}

/// Mean and sample standard deviation of `f` over `reps` draws, split into
/// fixed chunks of consecutive replicates that each own a random stream.
/// The result does not depend on how rayon schedules the chunks.
fn chunked_moments<F>(reps: u64, seed: u64, f: F) -> (f64, f64)
where
    F: Fn(&mut StreamRng) -> f64 + Sync,
{
    let chunks = reps.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(seed, j);
            let len = CHUNK.min(reps - j * CHUNK) as usize;
            let xs: Vec<f64> = (0..len).map(|_| f(&mut rng)).collect();
            let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
            (pairwise_sum(&xs), pairwise_sum(&sq))
        })
        .collect();
    let sum = pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    let sumsq = pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
    let r = reps as f64;
    let mean = sum / r;
    let var = ((sumsq - r * mean * mean) / (r - 1.0)).max(0.0);
    (mean, var.sqrt())
}

fn require_reps(reps: u64) -> Result<()> {
    if reps < 100 {
        return Err(Error::Precondition(format!("at least 100 replicates required, got {reps}")));
    }
    Ok(())
}

/// Importance-sampling estimate of P[S_n ≥ nβ] under the law tilted at
/// α = α(β). Weights e^{−α(S̃−nβ)} ≤ 1 are accumulated after factoring out
/// e^{−nI(β)}, so nothing underflows.
pub fn estimate_tail_is(model: &Model, beta: f64, n: u64, reps: u64, seed: u64) -> Result<IsEstimate> {
    check_n(n)?;
    require_reps(reps)?;
    let alpha = alpha_of_beta(model, beta)?;
    let tilted = model.tilt(alpha)?;
    let nf = n as f64;
    let threshold = nf * beta;
    // lattice sums land on nβ exactly in exact arithmetic
    let slack = if model.lattice().is_some() {
        ON_LATTICE_TOL * threshold.abs().max(1.0)
    } else {
        0.0
    };
    let (mean, sd) = chunked_moments(reps, seed, |rng| {
        let s = tilted.sample_sum(n, rng);
        if s >= threshold - slack {
            (-alpha * (s - threshold)).exp().min(1.0)
        } else {
            0.0
        }
    });
    let log_scale = -nf * (alpha * beta - model.phi(alpha));
    let raw = IsEstimate {
        mean,
        stderr: sd / (reps as f64).sqrt(),
        log_mean: mean.ln(),
        reps,
        seed,
    };
    Ok(raw.scaled(log_scale))
}

/// How [`truncated_moment`] evaluates P[S̃_n ≤ b_n].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    /// Exact CDF of the tilted sum (catalog models).
    ExactTilt,
    /// Sampling: tilted draws when the tilt is available, otherwise
    /// weighted draws of S_n.
    MonteCarlo { reps: u64, seed: u64 },
}

/// M_α(n) = e^{−φ(α)n} E[e^{αS_n}; S_n ≤ b_n] = P[S̃_n ≤ b_n].
pub fn truncated_moment(model: &Model, alpha: f64, b_n: f64, n: u64, mode: MomentMode) -> Result<f64> {
    check_n(n)?;
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    match mode {
        MomentMode::ExactTilt => {
            let tilted = model.tilt(alpha)?;
            Ok(tilted.sum_log_cdf(n, b_n)?.exp())
        }
        MomentMode::MonteCarlo { reps, seed } => {
            require_reps(reps)?;
            let mean = match model.tilt(alpha) {
                Ok(tilted) => {
                    chunked_moments(reps, seed, |rng| if tilted.sample_sum(n, rng) <= b_n { 1.0 } else { 0.0 }).0
                }
                Err(Error::Unsupported(_)) => {
                    let shift = model.phi(alpha) * n as f64;
                    chunked_moments(reps, seed, |rng| {
                        let s = model.sample_sum(n, rng);
                        if s <= b_n {
                            (alpha * s - shift).exp()
                        } else {
                            0.0
                        }
                    })
                    .0
                }
                Err(e) => return Err(e),
            };
            Ok(mean)
        }
    }
}

/// ½ + (r_n + φ‴(α)/(6φ″(α)))/√(2πφ″(α)n) with r_n = b_n − φ′(α)n: the
/// first-order expansion of M_α(n) for non-lattice X.
pub fn truncated_moment_expansion<M: Cgf + ?Sized>(model: &M, alpha: f64, b_n: f64, n: u64) -> f64 {
    let nf = n as f64;
    let d2 = model.phi_d2(alpha);
    let r_n = b_n - model.phi_d1(alpha) * nf;
    0.5 + (r_n + model.phi_d3(alpha) / (6.0 * d2)) / (2.0 * PI * d2 * nf).sqrt()
}

/// Φ(x) + μ₃(1−x²)e^{−x²/2}/(6√(2πn)μ₂^{3/2}).
pub fn edgeworth_cdf(mu2: f64, mu3: f64, n: u64, x: f64) -> f64 {
    let nf = n as f64;
    // normal_pdf(x)·√(2π) = e^{−x²/2}
    let bump = normal_pdf(x) * (2.0 * PI).sqrt();
    normal_cdf(x) + mu3 * (1.0 - x * x) * bump / (6.0 * (2.0 * PI * nf).sqrt() * mu2.powf(1.5))
}

/// The level b_n around which the largest terms e^{S_{i,n}} sit when
/// N_n ≈ e^{nI(β)}:
/// non-lattice: b_n = βn − α⁻¹ log(α√(2πφ″(α)n)),
/// lattice of span h: b_n = βn − α⁻¹ log(h⁻¹√(2πφ″(α)n)).
pub fn stable_centering<M: Cgf + ?Sized>(model: &M, alpha: f64, n: u64) -> f64 {
    let nf = n as f64;
    let beta = model.phi_d1(alpha);
    let root = (2.0 * PI * model.phi_d2(alpha) * nf).sqrt();
    let pref = match model.lattice() {
        Some(l) => root / l.span,
        None => alpha * root,
    };
    beta * nf - pref.ln() / alpha
}

/// ln A_n from the first-order expansion of the truncated mean at c = c₁:
/// ln(½N) + φ(1)n + ln{1 − (2πφ″(1)n)^{−1/2}(ln(2πφ″(1)n) − φ‴(1)/(3φ″(1)))}.
pub fn an_expansion_c1<M: Cgf + ?Sized>(model: &M, n: u64, log_count: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::NTooSmall {
            n,
            reason: "the expansion needs n >= 2".into(),
        });
    }
    let nf = n as f64;
    let d2 = model.phi_d2(1.0);
    let v = 2.0 * PI * d2 * nf;
    let braces = 1.0 - (v.ln() - model.phi_d3(1.0) / (3.0 * d2)) / v.sqrt();
    if !(braces > 0.0) {
        return Err(Error::NTooSmall {
            n,
            reason: format!("correction factor {braces} is not positive"),
        });
    }
    Ok(log_count - std::f64::consts::LN_2 + model.phi(1.0) * nf + braces.ln())
}

/// Estimate of N_n·P[S_n − b_n > log τ] with N_n = round(e^{cn}); the
/// limit is τ^{−α}.
pub fn diagnostic_tau_tail(model: &Model, c: f64, n: u64, tau: f64, reps: u64, seed: u64) -> Result<IsEstimate> {
    if model.lattice().is_some() {
        return Err(Error::LatticeModel(model.name()));
    }
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let rf = crate::rate::RateFunction::new(model)?;
    if !(c > 0.0 && c < rf.c2()) {
        return Err(Error::OutOfRange {
            what: "c",
            value: c,
            range: format!("(0, {})", rf.c2()),
        });
    }
    let (alpha, _) = rf.alpha_of_c(c)?;
    let b_n = stable_centering(model, alpha, n);
    let beta = (b_n + tau.ln()) / n as f64;
    let est = estimate_tail_is(model, beta, n, reps, seed)?;
    Ok(est.scaled(crate::log_population(c, n)))
}

/// N_n·P[W_n = x] for one lattice point x = e^{kh − Δ_n} of
/// W_n = e^{S_n − b_n}; it tends to x^{−α} along n with Δ_n → Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomCheck {
    pub k: i64,
    pub x: f64,
    pub scaled_mass: f64,
    pub target: f64,
}

impl AtomCheck {
    pub fn ratio(&self) -> f64 {
        self.scaled_mass / self.target
    }
}

/// Exact N_n·P[W_n = e^{kh − Δ_n}] for each k, with N_n = round(e^{cn}).
pub fn lattice_atom_check(model: &Model, c: f64, n: u64, ks: &[i64]) -> Result<Vec<AtomCheck>> {
    let lattice = model.lattice().ok_or_else(|| Error::NonLatticeModel(model.name()))?;
    let rf = crate::rate::RateFunction::new(model)?;
    if !(c > 0.0 && c < rf.c2()) {
        return Err(Error::OutOfRange {
            what: "c",
            value: c,
            range: format!("(0, {})", rf.c2()),
        });
    }
    let (alpha, _) = rf.alpha_of_c(c)?;
    let b_n = stable_centering(model, alpha, n);
    let shifted = b_n - n as f64 * lattice.offset;
    let delta = shifted - (shifted / lattice.span).floor() * lattice.span;
    let log_count = crate::log_population(c, n);
    ks.iter()
        .map(|&k| {
            let log_x = k as f64 * lattice.span - delta;
            let log_mass = log_count + model.sum_log_pmf(n, b_n - delta + k as f64 * lattice.span)?;
            Ok(AtomCheck {
                k,
                x: log_x.exp(),
                scaled_mass: log_mass.exp(),
                target: (-alpha * log_x).exp(),
            })
        })
        .collect()
}

/// Nine values of β spread over the middle 80% of (β₀, β∞); when β∞ = ∞
/// the interval (β₀, φ′(4)) stands in for it.
pub fn uniformity_grid<M: Cgf + ?Sized>(model: &M) -> Vec<f64> {
    let lo = model.beta0();
    let hi = if model.beta_inf().is_finite() {
        model.beta_inf()
    } else {
        model.phi_d1(4.0)
    };
    (0..9).map(|i| lo + (0.1 + 0.1 * i as f64) * (hi - lo)).collect()
}
