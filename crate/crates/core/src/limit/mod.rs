//! Limit regimes, normalising sequences and the limit laws themselves.

pub mod finite;
mod inversion;
pub mod lattice;
pub mod regime;
pub mod stable;

use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{parse_params, Cgf, Model};
use crate::special::normal_cdf;

use inversion::CacheSet;
pub use finite::FiniteLatticeSum;
pub use inversion::CfNode;
pub use lattice::{lattice_id_cdf, lattice_id_log_cf, lattice_shift_constant, levy_tail_mass, LatticeIdLaw};
pub use regime::{
    classify, normalization, select_lattice_n, BoundaryCentering, Normalization, Regime, RegimeTag, EQUALITY_BAND,
};
pub use stable::{stable_cdf, stable_log_cf, StableLaw, EULER_GAMMA};

/// Evaluates `f` over `xs` in fixed chunks run in parallel; each chunk owns
/// one node cache, so results do not depend on the thread count.
pub(crate) fn map_chunks<F>(xs: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut CacheSet) -> Result<f64> + Sync,
{
    let parts: Vec<Result<Vec<f64>>> = xs
        .par_chunks(64)
        .map(|chunk| {
            let mut caches = CacheSet::default();
            chunk.iter().map(|&x| f(x, &mut caches)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(xs.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// A limit law of (Z_n − A_n)/B_n.
#[derive(Debug, Clone, Copy)]
pub enum LimitLaw {
    Normal01,
    /// Normal with variance ½.
    NormalHalf,
    Stable(StableLaw),
    LatticeId(LatticeIdLaw),
}

impl LimitLaw {
    /// The law for a classified regime; lattice stable regimes need Δ.
    pub fn for_regime(regime: &Regime, model: &Model, delta: Option<f64>) -> Result<LimitLaw> {
        match regime.tag {
            RegimeTag::Supercritical => Ok(LimitLaw::Normal01),
            RegimeTag::Critical => Ok(LimitLaw::NormalHalf),
            _ => {
                let alpha = regime.alpha.expect("stable regimes carry alpha");
                match model.lattice() {
                    None => Ok(LimitLaw::Stable(StableLaw::new(alpha)?)),
                    Some(l) => {
                        let delta = delta.ok_or_else(|| Error::Precondition("lattice limit law needs delta".into()))?;
                        Ok(LimitLaw::LatticeId(LatticeIdLaw::new(alpha, delta, l.span)?))
                    }
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            LimitLaw::Normal01 => Ok(normal_cdf(x)),
            LimitLaw::NormalHalf => Ok(normal_cdf(x * std::f64::consts::SQRT_2)),
            LimitLaw::Stable(s) => s.cdf(x),
            LimitLaw::LatticeId(l) => l.cdf(x),
        }
    }

    pub fn cdf_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        match self {
            LimitLaw::Stable(s) => s.cdf_many(xs),
            LimitLaw::LatticeId(l) => l.cdf_many(xs),
            _ => xs.iter().map(|&x| self.cdf(x)).collect(),
        }
    }

    pub fn log_cf(&self, u: f64) -> Complex64 {
        match self {
            LimitLaw::Normal01 => Complex64::new(-0.5 * u * u, 0.0),
            LimitLaw::NormalHalf => Complex64::new(-0.25 * u * u, 0.0),
            LimitLaw::Stable(s) => s.log_cf(u),
            LimitLaw::LatticeId(l) => l.log_cf(u),
        }
    }
}

impl fmt::Display for LimitLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitLaw::Normal01 => write!(f, "normal01"),
            LimitLaw::NormalHalf => write!(f, "normalhalf"),
            LimitLaw::Stable(s) => write!(f, "stable:alpha={}", s.alpha()),
            LimitLaw::LatticeId(l) => write!(f, "lattice:alpha={},delta={},h={}", l.alpha(), l.delta(), l.span()),
        }
    }
}

impl FromStr for LimitLaw {
    type Err = Error;

    /// `normal01`, `normalhalf`, `stable:alpha=1.4`,
    /// `lattice:alpha=0.5,delta=0,h=1`.
    fn from_str(s: &str) -> Result<LimitLaw> {
        let parse_err = |reason: String| Error::Parse {
            kind: "limit law",
            input: s.to_string(),
            reason,
        };
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let params = parse_params(rest).map_err(&parse_err)?;
        let get = |key: &str, default: Option<f64>| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .or(default)
                .ok_or_else(|| parse_err(format!("missing `{key}`")))
        };
        match kind.to_ascii_lowercase().as_str() {
            "normal01" => Ok(LimitLaw::Normal01),
            "normalhalf" => Ok(LimitLaw::NormalHalf),
            "stable" => Ok(LimitLaw::Stable(StableLaw::new(get("alpha", None)?)?)),
            "lattice" => Ok(LimitLaw::LatticeId(LatticeIdLaw::new(
                get("alpha", None)?,
                get("delta", Some(0.0))?,
                get("h", Some(1.0))?,
            )?)),
            other => Err(parse_err(format!("unknown law `{other}`"))),
        }
    }
}
