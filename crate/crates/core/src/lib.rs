//! Sums of random exponentials Z_n = Σ_{i≤N_n} e^{S_{i,n}}: rate functions,
//! sharp large-deviation asymptotics, limit laws and Monte Carlo checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod ld;
pub mod limit;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod rate;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use limit::{LimitLaw, Regime, RegimeTag};
pub use model::{Cgf, CgfFn, CustomModel, Lattice, Model};
pub use rate::RateFunction;

/// ln N_n for the population size N_n = round(e^{cn}) (at least 1).
pub fn log_population(c: f64, n: u64) -> f64 {
    let cn = c * n as f64;
    // beyond 2^53 rounding is the identity, and e^{cn} may overflow
    if cn > 40.0 {
        cn
    } else {
        population(c, n).ln()
    }
}

/// N_n = round(e^{cn}), at least 1, as a float (it can exceed u64 range).
pub fn population(c: f64, n: u64) -> f64 {
    (c * n as f64).exp().round().max(1.0)
}
