//! Exact finite-n laws of normalised sums, where they are cheap enough to
//! serve as oracles for the simulations and for the distance between a
//! finite n and its limit.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::limit::inversion::{cexpm1, euler_laplace_cdf};
use crate::limit::regime::{classify, RegimeTag};
use crate::ld::stable_centering;
use crate::model::{Cgf, Model};
use crate::rate::RateFunction;

/// The law of Σ_{i≤N} e^{S_{i,n} − b_n} for a lattice model with exact
/// point masses, in the regime 0 < c < c₁ (where A_n = 0). With
/// p_k = P[S_n = kh] its Laplace exponent is
///   N ln(1 + Σ_k p_k (e^{−s e^{kh − b_n}} − 1)).
#[derive(Debug, Clone)]
pub struct FiniteLatticeSum {
    count: f64,
    /// (e^{kh − b_n}, p_k)
    atoms: Vec<(f64, f64)>,
    b_n: f64,
}

impl FiniteLatticeSum {
    pub fn new(model: &Model, c: f64, n: u64, log_count: f64) -> Result<FiniteLatticeSum> {
        let lattice = model.lattice().ok_or_else(|| Error::NonLatticeModel(model.name()))?;
        let rf = RateFunction::new(model)?;
        let regime = classify(&rf, c)?;
        if regime.tag != RegimeTag::StableLow {
            return Err(Error::Precondition(format!(
                "exact finite-n law needs 0 < c < c1, got {} regime",
                regime.tag
            )));
        }
        let alpha = regime.alpha.expect("stable regime carries alpha");
        let b_n = stable_centering(model, alpha, n);
        let mut atoms = Vec::new();
        for k in 0..=n {
            let s = k as f64 * lattice.span + n as f64 * lattice.offset;
            let lp = model.sum_log_pmf(n, s)?;
            if lp > -745.0 {
                atoms.push(((s - b_n).exp(), lp.exp()));
            }
        }
        Ok(FiniteLatticeSum {
            count: log_count.exp(),
            atoms,
            b_n,
        })
    }

    pub fn b_n(&self) -> f64 {
        self.b_n
    }

    fn laplace_exponent(&self, s: Complex64) -> Complex64 {
        let z: Complex64 = self.atoms.iter().map(|&(x, p)| cexpm1(-s * x) * p).sum();
        // ln(1 + z) without cancellation for small |z|
        let (a, b) = (z.re, z.im);
        let re = 0.5 * (2.0 * a + a * a + b * b).ln_1p();
        let im = b.atan2(1.0 + a);
        Complex64::new(re, im) * self.count
    }

    /// F(x) by Euler inversion. Where the law is dominated by a few
    /// isolated large atoms the inversion rings at the 1e−4 level.
    pub fn cdf(&self, x: f64) -> f64 {
        euler_laplace_cdf(|s| self.laplace_exponent(s), x)
    }

    pub fn cdf_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        super::map_chunks(xs, |x, _| Ok(self.cdf(x)))
    }
}
