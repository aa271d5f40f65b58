//! Which limit theorem applies to Z_n = Σ_{i≤N_n} e^{S_{i,n}} with
//! N_n ≈ e^{cn}, and the matching normalising sequences.

use std::fmt;

use crate::error::{Error, Result};
use crate::ld::{an_expansion_c1, stable_centering, truncated_moment, MomentMode};
use crate::model::{Cgf, Model};
use crate::rate::RateFunction;
use crate::special::log1mexp;

/// Relative width of the band in which c counts as equal to c₁ or c₂.
pub const EQUALITY_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeTag {
    /// c > c₂: Gaussian fluctuations.
    Supercritical,
    /// c = c₂: Gaussian with half the variance.
    Critical,
    /// c₁ < c < c₂: stable, α ∈ (1, 2).
    StableHigh,
    /// c = c₁: stable, α = 1.
    StableBoundary,
    /// 0 < c < c₁: stable, α ∈ (0, 1).
    StableLow,
}

impl RegimeTag {
    pub fn is_stable(self) -> bool {
        matches!(self, RegimeTag::StableHigh | RegimeTag::StableBoundary | RegimeTag::StableLow)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeTag::Supercritical => "supercritical",
            RegimeTag::Critical => "critical",
            RegimeTag::StableHigh => "stable-high",
            RegimeTag::StableBoundary => "stable-boundary",
            RegimeTag::StableLow => "stable-low",
        }
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Stable index, for the stable tags only.
    pub alpha: Option<f64>,
    /// φ′(α), alongside `alpha`.
    pub beta: Option<f64>,
    pub is_lattice: bool,
}

fn near(c: f64, ci: f64) -> bool {
    (c - ci).abs() <= EQUALITY_BAND * ci.max(1.0)
}

/// Classifies c against the critical points of the model.
pub fn classify<M: Cgf>(rf: &RateFunction<M>, c: f64) -> Result<Regime> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("c must be positive and finite, got {c}")));
    }
    let (c1, c2) = rf.critical_points();
    let is_lattice = rf.model().lattice().is_some();
    let tag = if near(c, c2) {
        RegimeTag::Critical
    } else if c > c2 {
        RegimeTag::Supercritical
    } else if near(c, c1) {
        RegimeTag::StableBoundary
    } else if c > c1 {
        RegimeTag::StableHigh
    } else {
        RegimeTag::StableLow
    };
    let (alpha, beta) = match tag {
        RegimeTag::StableBoundary => (Some(1.0), Some(rf.model().phi_d1(1.0))),
        t if t.is_stable() => {
            let (a, b) = rf.alpha_of_c(c)?;
            (Some(a), Some(b))
        }
        _ => (None, None),
    };
    Ok(Regime {
        tag,
        alpha,
        beta,
        is_lattice,
    })
}

/// How A_n is obtained at c = c₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCentering {
    /// The first-order expansion for non-lattice models, the exact truncated
    /// moment for lattice ones (the expansion does not apply there).
    #[default]
    Auto,
    Expansion,
    TruncatedMoment(MomentMode),
}

/// Normalising sequences: (Z_n − A_n)/B_n converges in law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// ln A_n; −∞ when A_n = 0.
    pub log_a: f64,
    pub log_b: f64,
    /// Centring level b_n = ln B_n, stable regimes only.
    pub b_n: Option<f64>,
    /// {b_n}_h, lattice stable regimes only.
    pub delta_n: Option<f64>,
}

/// Regime and normalisation for (model, c, n) with population ln N_n.
pub fn normalization(
    model: &Model,
    c: f64,
    n: u64,
    log_count: f64,
    centering: BoundaryCentering,
) -> Result<(Regime, Normalization)> {
    if n < 2 {
        return Err(Error::NTooSmall {
            n,
            reason: "normalisation needs n >= 2".into(),
        });
    }
    if !(log_count >= 0.0) {
        return Err(Error::Domain(format!("population must be at least 1, got ln N = {log_count}")));
    }
    let rf = RateFunction::new(model)?;
    let regime = classify(&rf, c)?;
    let nf = n as f64;
    let log_mean = log_count + model.phi(1.0) * nf;
    let norm = match regime.tag {
        RegimeTag::Supercritical | RegimeTag::Critical => {
            // Var Z_n = N(e^{φ(2)n} − e^{2φ(1)n})
            let gap = (2.0 * model.phi(1.0) - model.phi(2.0)) * nf;
            Normalization {
                log_a: log_mean,
                log_b: 0.5 * (log_count + model.phi(2.0) * nf + log1mexp(gap)),
                b_n: None,
                delta_n: None,
            }
        }
        tag => {
            let alpha = regime.alpha.expect("stable regimes carry alpha");
            let b_n = stable_centering(model, alpha, n);
            let log_a = match tag {
                RegimeTag::StableHigh => log_mean,
                RegimeTag::StableLow => f64::NEG_INFINITY,
                _ => boundary_log_a(model, n, log_count, b_n, centering)?,
            };
            let delta_n = model.lattice().map(|l| {
                let shifted = b_n - nf * l.offset;
                shifted - (shifted / l.span).floor() * l.span
            });
            Normalization {
                log_a,
                log_b: b_n,
                b_n: Some(b_n),
                delta_n,
            }
        }
    };
    Ok((regime, norm))
}

/// First n in `n_range` whose Δ_n lies within `window`·h of `target`, with
/// that Δ_n: a finite stand-in for a subsequence along which Δ_n → Δ.
pub fn select_lattice_n(
    model: &Model,
    c: f64,
    target: f64,
    n_range: std::ops::RangeInclusive<u64>,
    window: f64,
) -> Result<(u64, f64)> {
    let lattice = model.lattice().ok_or_else(|| Error::NonLatticeModel(model.name()))?;
    let rf = RateFunction::new(model)?;
    let regime = classify(&rf, c)?;
    let alpha = regime
        .alpha
        .ok_or_else(|| Error::Precondition(format!("c = {c} is not in a stable regime")))?;
    for n in n_range.clone() {
        let b_n = stable_centering(model, alpha, n);
        let shifted = b_n - n as f64 * lattice.offset;
        let delta = shifted - (shifted / lattice.span).floor() * lattice.span;
        if (delta - target).abs() < window * lattice.span {
            return Ok((n, delta));
        }
    }
    Err(Error::Precondition(format!(
        "no n in {n_range:?} has Delta_n within {window} of {target}"
    )))
}

fn boundary_log_a(model: &Model, n: u64, log_count: f64, b_n: f64, centering: BoundaryCentering) -> Result<f64> {
    let lattice = model.lattice().is_some();
    let mode = match centering {
        BoundaryCentering::Auto if !lattice => return an_expansion_c1(model, n, log_count),
        BoundaryCentering::Auto => MomentMode::ExactTilt,
        BoundaryCentering::Expansion if lattice => {
            return Err(Error::LatticeModel(format!(
                "{}: the c = c1 expansion needs a non-lattice model",
                model.name()
            )))
        }
        BoundaryCentering::Expansion => return an_expansion_c1(model, n, log_count),
        BoundaryCentering::TruncatedMoment(mode) => mode,
    };
    let m = truncated_moment(model, 1.0, b_n, n, mode)?;
    Ok(log_count + model.phi(1.0) * n as f64 + m.ln())
}
