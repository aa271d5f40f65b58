//! Monte Carlo simulation of Z_n = Σ_{i≤N_n} e^{S_{i,n}} and statistics
//! derived from it.
//!
//! Replicate r always draws from `substream(master_seed, r)` and reduces its
//! N_n terms sequentially in blocks of [`BLOCK`], so a sample set is a pure
//! function of its configuration: the thread count only decides which core
//! runs which replicate.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::limit::{normalization, BoundaryCentering, LimitLaw, Normalization, Regime, RegimeTag};
use crate::model::{Cgf, Model};
use crate::rate::{alpha_of_beta, RateFunction};
use crate::rng::{substream, StreamRng};
use crate::special::{log1mexp, pairwise_sum};

/// Terms per summation block.
pub const BLOCK: usize = 4096;
/// Default budget on N_n · replicates · n.
pub const DEFAULT_MAX_OPS: f64 = 5e9;
/// Default expected number of exact exceedances in the split method.
pub const DEFAULT_EXCEEDANCES: u64 = 4096;
/// `SumMethod::Auto` sums directly up to this population.
pub const AUTO_DIRECT_LIMIT: f64 = 1e7;
/// Nominal cost, in draws of X per exceedance and unit of n, charged for
/// the split method's rejection sampler.
const SPLIT_COST: f64 = 16.0;

/// What each replicate reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    /// (Z_n − A_n)/B_n with the regime's normalisation.
    NormalizedZ,
    /// (1/n) ln Z_n.
    FreeEnergy,
    /// e^{−(φ(1)+c)n} Z_n.
    Lln,
    /// (1/n) max_i S_{i,n}.
    MaxRate,
}

impl Statistic {
    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::NormalizedZ => "normalized-z",
            Statistic::FreeEnergy => "free-energy",
            Statistic::Lln => "lln",
            Statistic::MaxRate => "max-rate",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Statistic> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "normalized-z" | "normalizedz" | "z" => Ok(Statistic::NormalizedZ),
            "free-energy" | "freeenergy" => Ok(Statistic::FreeEnergy),
            "lln" => Ok(Statistic::Lln),
            "max-rate" | "maxrate" | "max" => Ok(Statistic::MaxRate),
            _ => Err(Error::Parse {
                kind: "statistic",
                input: s.to_string(),
                reason: "expected normalized-z, free-energy, lln or max-rate".into(),
            }),
        }
    }
}

/// How the N_n terms of a replicate are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMethod {
    /// Direct up to [`AUTO_DIRECT_LIMIT`] terms, split beyond.
    #[default]
    Auto,
    /// Every S_{i,n} is drawn.
    Direct,
    /// Terms above a threshold t with N_n P[S_n > t] ≈ `exceedances` are
    /// drawn exactly (their count is binomial, their values come from
    /// rejection under the law tilted to t); the sum of the remaining terms
    /// is drawn from the normal law with its exact mean and variance.
    Split { exceedances: u64 },
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: Model,
    pub c: f64,
    pub n: u64,
    /// Population size; defaults to round(e^{cn}).
    pub count: Option<u64>,
    pub replicates: u64,
    pub master_seed: u64,
    pub statistic: Statistic,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
    pub max_ops: f64,
    pub method: SumMethod,
    pub centering: BoundaryCentering,
}

impl SimConfig {
    pub fn new(model: Model, c: f64, n: u64, replicates: u64, master_seed: u64, statistic: Statistic) -> SimConfig {
        SimConfig {
            model,
            c,
            n,
            count: None,
            replicates,
            master_seed,
            statistic,
            threads: None,
            max_ops: DEFAULT_MAX_OPS,
            method: SumMethod::Auto,
            centering: BoundaryCentering::Auto,
        }
    }

    /// N_n as a float (it may exceed the u64 range).
    pub fn population(&self) -> f64 {
        match self.count {
            Some(k) => k as f64,
            None => crate::population(self.c, self.n),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Precondition("replicates must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Precondition("n must be at least 1".into()));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Domain(format!("c must be positive and finite, got {}", self.c)));
        }
        if self.count == Some(0) {
            return Err(Error::Precondition("population override must be at least 1".into()));
        }
        Ok(())
    }
}

/// Summation plan actually used for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Plan {
    Direct { count: u64 },
    Split(SplitPlan),
}

/// Pre-computed ingredients of the split method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPlan {
    pub count: u64,
    /// Threshold on S_n.
    pub threshold: f64,
    /// P[S_n > t].
    pub p_exceed: f64,
    /// ln E[e^{S}|S ≤ t] and ln E[e^{2S}|S ≤ t].
    pub log_m1: f64,
    pub log_m2: f64,
    /// Upper bound on the skewness of the bulk sum: the error of its normal
    /// approximation is of this order.
    pub bulk_skewness: f64,
    /// Tilt used by the exceedance sampler.
    pub alpha_t: f64,
}

impl SplitPlan {
    pub fn new(model: &Model, n: u64, count: u64, exceedances: u64) -> Result<SplitPlan> {
        if !model.has_exact_sum_law() {
            return Err(Error::Unsupported(format!("split summation for custom model `{}`", model.name())));
        }
        if exceedances == 0 {
            return Err(Error::Precondition("split method needs at least one expected exceedance".into()));
        }
        let nf = n as f64;
        let target = (exceedances as f64).ln() - (count as f64).ln();
        if target > (0.25f64).ln() {
            return Err(Error::Precondition(format!(
                "population {count} too small for {exceedances} expected exceedances"
            )));
        }
        let log_sf = |t: f64| model.sum_log_sf(n, t);
        // bracket t: log_sf(lo) ≥ target > log_sf(hi)
        let lo0 = nf * model.beta0();
        let spread = (nf * model.phi_d2(1e-6)).sqrt().max(1e-3);
        let mut lo = lo0;
        let mut hi = if model.beta_inf().is_finite() {
            nf * model.beta_inf()
        } else {
            let mut hi = lo0 + spread;
            while log_sf(hi)? >= target {
                hi = lo0 + 2.0 * (hi - lo0);
            }
            hi
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if log_sf(mid)? >= target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.abs().max(1.0) {
                break;
            }
        }
        let mut threshold = 0.5 * (lo + hi);
        if let Some(l) = model.lattice() {
            // halfway between atoms, so that "S > t" is unambiguous
            threshold = ((threshold / l.span).floor() + 0.5) * l.span;
        }
        let log_p = log_sf(threshold)?;
        let p_exceed = log_p.exp();
        let beta_t = threshold / nf;
        if !(beta_t > model.beta0() && beta_t < model.beta_inf()) {
            return Err(Error::Precondition("split threshold is not in the large-deviation range".into()));
        }
        let alpha_t = alpha_of_beta(model, beta_t)?;
        let log_below = log1mexp(log_p);
        let log_moment = |k: f64| -> Result<f64> {
            Ok(model.phi(k) * nf + model.tilt(k)?.sum_log_cdf(n, threshold)? - log_below)
        };
        let log_m1 = log_moment(1.0)?;
        let log_m2 = log_moment(2.0)?;
        let log_m3 = log_moment(3.0)?;
        let bulk = (count as f64) * (1.0 - p_exceed);
        let log_var = log_m2 + log1mexp(2.0 * log_m1 - log_m2);
        // central third moment ≤ raw third moment for positive terms
        let bulk_skewness = (log_m3 - 1.5 * log_var).exp() / bulk.sqrt();
        Ok(SplitPlan {
            count,
            threshold,
            p_exceed,
            log_m1,
            log_m2,
            bulk_skewness,
            alpha_t,
        })
    }
}

/// Streaming log-sum-exp over a replicate's terms.
#[derive(Debug, Clone, Copy)]
struct LogSumAcc {
    max_term: f64,
    /// Σ e^{x − shift} with Neumaier compensation.
    shift: f64,
    sum: f64,
    comp: f64,
}

impl LogSumAcc {
    fn new() -> Self {
        LogSumAcc {
            max_term: f64::NEG_INFINITY,
            shift: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }

    /// Adds a block of exponents, summed pairwise relative to its maximum.
    fn add_block(&mut self, xs: &[f64], scratch: &mut Vec<f64>) {
        let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return;
        }
        scratch.clear();
        scratch.extend(xs.iter().map(|&x| (x - m).exp()));
        self.add_scaled(m, pairwise_sum(scratch));
        self.max_term = self.max_term.max(m);
    }

    /// Adds e^{log_scale}·value.
    fn add_scaled(&mut self, log_scale: f64, value: f64) {
        if value == 0.0 {
            return;
        }
        if log_scale > self.shift {
            let r = (self.shift - log_scale).exp();
            self.sum *= r;
            self.comp *= r;
            self.shift = log_scale;
        }
        let v = value * (log_scale - self.shift).exp();
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn log_sum(&self) -> f64 {
        self.shift + (self.sum + self.comp).ln()
    }
}

/// ln Z_n and max_i S_{i,n} of one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateSums {
    pub log_z: f64,
    pub max_s: f64,
}

fn replicate_direct(model: &Model, n: u64, count: u64, rng: &mut StreamRng) -> ReplicateSums {
    let mut acc = LogSumAcc::new();
    let mut buf = Vec::with_capacity(BLOCK);
    let mut scratch = Vec::with_capacity(BLOCK);
    let mut left = count;
    while left > 0 {
        let len = (left as usize).min(BLOCK);
        buf.clear();
        buf.extend((0..len).map(|_| model.sample_sum(n, rng)));
        acc.add_block(&buf, &mut scratch);
        left -= len as u64;
    }
    ReplicateSums {
        log_z: acc.log_sum(),
        max_s: acc.max_term,
    }
}

fn replicate_split(model: &Model, tilted: &Model, n: u64, plan: &SplitPlan, rng: &mut StreamRng) -> ReplicateSums {
    let k = Binomial::new(plan.count, plan.p_exceed)
        .expect("valid binomial parameters")
        .sample(rng);
    let t = plan.threshold;
    let mut acc = LogSumAcc::new();
    let mut scratch = Vec::with_capacity(BLOCK);
    let mut buf = Vec::with_capacity(BLOCK);
    let mut left = k;
    while left > 0 {
        let len = (left as usize).min(BLOCK);
        buf.clear();
        while buf.len() < len {
            let s = tilted.sample_sum(n, rng);
            if s > t && rng.random::<f64>() < (-plan.alpha_t * (s - t)).exp() {
                buf.push(s);
            }
        }
        acc.add_block(&buf, &mut scratch);
        left -= len as u64;
    }
    let exceed_max = acc.max_term;
    let bulk = (plan.count - k) as f64;
    if bulk > 0.0 {
        let log_mean = bulk.ln() + plan.log_m1;
        let log_sd = 0.5 * (bulk.ln() + plan.log_m2 + log1mexp(2.0 * plan.log_m1 - plan.log_m2));
        let z: f64 = rng.sample(StandardNormal);
        // a bulk draw at or below zero would need a skewness far beyond the
        // plan's bound; it is clamped rather than allowed to poison ln Z
        let rel = (1.0 + z * (log_sd - log_mean).exp()).max(1e-12);
        acc.add_scaled(log_mean, rel);
    }
    // the bulk maximum lies below t; it is only needed when nothing exceeds
    let max_s = if k > 0 { exceed_max } else { bulk_max(model, n, plan, rng) };
    ReplicateSums {
        log_z: acc.log_sum(),
        max_s,
    }
}

/// Maximum of the N_n terms given that none exceeds t, by inversion of the
/// conditional CDF F(s)^N on a bisection grid.
fn bulk_max(model: &Model, n: u64, plan: &SplitPlan, rng: &mut StreamRng) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    // P[max ≤ s | max ≤ t] = (F(s)/F(t))^N
    let target = u.ln() / plan.count as f64;
    let log_ft = (-plan.p_exceed).ln_1p();
    let (mut lo, mut hi) = (plan.threshold - 1.0, plan.threshold);
    while model.sum_log_cdf(n, lo).unwrap_or(f64::NEG_INFINITY) - log_ft > target {
        lo -= 2.0 * (hi - lo);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if model.sum_log_cdf(n, mid).unwrap_or(f64::NEG_INFINITY) - log_ft > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Simulated values of a statistic, one per replicate.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub config: SimConfig,
    pub population: f64,
    pub plan: Plan,
    /// Present for [`Statistic::NormalizedZ`].
    pub normalization: Option<(Regime, Normalization)>,
    pub wall_time: Duration,
}

impl SampleSet {
    /// (master seed, stream id) of replicate r.
    pub fn replicate_seed(&self, r: u64) -> (u64, u64) {
        (self.config.master_seed, r)
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// Sample standard deviation (0 for a single value).
    pub fn sd(&self) -> f64 {
        let m = self.values.len();
        if m < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let sq: Vec<f64> = self.values.iter().map(|v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&sq) / (m - 1) as f64).sqrt()
    }

    /// The limit law of the values, for [`Statistic::NormalizedZ`].
    pub fn limit_law(&self) -> Result<LimitLaw> {
        let (regime, norm) = self
            .normalization
            .ok_or_else(|| Error::Precondition("limit law is defined for normalized-z samples only".into()))?;
        LimitLaw::for_regime(&regime, &self.config.model, norm.delta_n)
    }
}

/// Chooses the summation plan and checks the budget.
pub fn plan_for(config: &SimConfig) -> Result<Plan> {
    let pop = config.population();
    let nf = config.n as f64;
    let reps = config.replicates as f64;
    let method = match config.method {
        SumMethod::Auto if pop <= AUTO_DIRECT_LIMIT => SumMethod::Direct,
        SumMethod::Auto => SumMethod::Split {
            exceedances: DEFAULT_EXCEEDANCES,
        },
        m => m,
    };
    if pop >= u64::MAX as f64 {
        return Err(Error::Resource {
            required: pop,
            budget: u64::MAX as f64,
        });
    }
    let count = pop as u64;
    match method {
        SumMethod::Direct => {
            let required = pop * reps * nf;
            if required > config.max_ops {
                return Err(Error::Resource {
                    required,
                    budget: config.max_ops,
                });
            }
            Ok(Plan::Direct { count })
        }
        SumMethod::Split { exceedances } => {
            let required = exceedances as f64 * reps * nf * SPLIT_COST;
            if required > config.max_ops {
                return Err(Error::Resource {
                    required,
                    budget: config.max_ops,
                });
            }
            Ok(Plan::Split(SplitPlan::new(&config.model, config.n, count, exceedances)?))
        }
        SumMethod::Auto => unreachable!("resolved above"),
    }
}

/// ln Z_n and max S for every replicate.
pub fn simulate_sums(config: &SimConfig, plan: &Plan) -> Result<Vec<ReplicateSums>> {
    config.validate()?;
    let model = &config.model;
    let n = config.n;
    let tilted = match plan {
        Plan::Split(p) => Some(model.tilt(p.alpha_t)?),
        Plan::Direct { .. } => None,
    };
    let run = || -> Vec<ReplicateSums> {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = substream(config.master_seed, r);
                match plan {
                    Plan::Direct { count } => replicate_direct(model, n, *count, &mut rng),
                    Plan::Split(p) => replicate_split(model, tilted.as_ref().expect("tilt for split"), n, p, &mut rng),
                }
            })
            .collect()
    };
    match config.threads {
        None => Ok(run()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Precondition(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

/// Simulates the configured statistic.
pub fn simulate_statistic(config: &SimConfig) -> Result<SampleSet> {
    config.validate()?;
    let start = Instant::now();
    let plan = plan_for(config)?;
    let pop = config.population();
    let log_count = pop.ln();
    let nf = config.n as f64;
    let normalization = match config.statistic {
        Statistic::NormalizedZ => Some(normalization(
            &config.model,
            config.c,
            config.n,
            log_count,
            config.centering,
        )?),
        _ => None,
    };
    let sums = simulate_sums(config, &plan)?;
    let phi1 = config.model.phi(1.0);
    let values = sums
        .iter()
        .map(|s| match config.statistic {
            Statistic::NormalizedZ => {
                let (_, norm) = normalization.expect("normalisation computed above");
                (s.log_z - norm.log_b).exp() - (norm.log_a - norm.log_b).exp()
            }
            Statistic::FreeEnergy => s.log_z / nf,
            Statistic::Lln => (s.log_z - (phi1 + config.c) * nf).exp(),
            Statistic::MaxRate => s.max_s / nf,
        })
        .collect();
    Ok(SampleSet {
        values,
        config: config.clone(),
        population: pop,
        plan,
        normalization,
        wall_time: start.elapsed(),
    })
}

/// Kolmogorov–Smirnov distance between the empirical law of `sample` and F.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let mut xs = sorted(sample)?;
    for x in xs.iter_mut() {
        *x = cdf(*x);
    }
    ks_from_sorted_cdf(&xs)
}

/// KS distance against a limit law, evaluating its CDF in one batch.
pub fn ks_distance_law(sample: &[f64], law: &LimitLaw) -> Result<f64> {
    let xs = sorted(sample)?;
    ks_from_sorted_cdf(&law.cdf_many(&xs)?)
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::Precondition("KS distance of an empty sample".into()));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::Precondition("sample contains NaN".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// sup_i max(|i/m − F_i|, |(i−1)/m − F_i|) for CDF values at the sorted sample.
fn ks_from_sorted_cdf(f: &[f64]) -> Result<f64> {
    let m = f.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &fi) in f.iter().enumerate() {
        if !(0.0..=1.0).contains(&fi) {
            return Err(Error::Precondition(format!("CDF value {fi} outside [0, 1]")));
        }
        let i = i as f64;
        d = d.max(((i + 1.0) / m - fi).abs()).max((i / m - fi).abs());
    }
    Ok(d)
}

/// Theoretical limit of a statistic as n → ∞, where one exists.
pub fn statistic_limit(model: &Model, c: f64, statistic: Statistic) -> Result<Option<f64>> {
    let rf = RateFunction::new(model)?;
    let c1 = rf.c1();
    let at_c1 = (c - c1).abs() <= crate::limit::EQUALITY_BAND * c1.max(1.0);
    Ok(match statistic {
        Statistic::FreeEnergy => Some(if c >= c1 || at_c1 {
            model.phi(1.0) + c
        } else {
            rf.rate_inverse(c)?
        }),
        Statistic::Lln if at_c1 => Some(0.5),
        Statistic::Lln if c > c1 => Some(1.0),
        Statistic::Lln => None,
        Statistic::MaxRate => {
            if c < rf.c_inf() {
                Some(rf.rate_inverse(c)?)
            } else {
                None
            }
        }
        Statistic::NormalizedZ => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    pub population: f64,
    pub mean: f64,
    pub sd: f64,
    /// KS distance to the limit law (normalized-z, non-lattice or with the
    /// row's Δ_n for lattice models).
    pub ks: Option<f64>,
    pub limit: Option<f64>,
}

/// One simulation per n; every row uses the same master seed (common
/// random numbers across rows).
pub fn convergence_table(
    model: &Model,
    c: f64,
    n_list: &[u64],
    statistic: Statistic,
    reps: u64,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    convergence_table_with(model, c, n_list, statistic, reps, seed, |cfg| cfg)
}

/// [`convergence_table`] with a hook to adjust each row's configuration.
pub fn convergence_table_with(
    model: &Model,
    c: f64,
    n_list: &[u64],
    statistic: Statistic,
    reps: u64,
    seed: u64,
    adjust: impl Fn(SimConfig) -> SimConfig,
) -> Result<Vec<ConvergenceRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("n_list must be strictly increasing".into()));
    }
    let limit = statistic_limit(model, c, statistic)?;
    n_list
        .iter()
        .map(|&n| {
            let cfg = adjust(SimConfig::new(model.clone(), c, n, reps, seed, statistic));
            let set = simulate_statistic(&cfg)?;
            let ks = match statistic {
                Statistic::NormalizedZ => match set.limit_law() {
                    Ok(law) => Some(ks_distance_law(&set.values, &law)?),
                    Err(Error::Unsupported(_)) => None,
                    Err(e) => return Err(e),
                },
                _ => None,
            };
            Ok(ConvergenceRow {
                n,
                population: set.population,
                mean: set.mean(),
                sd: set.sd(),
                ks,
                limit,
            })
        })
        .collect()
}

/// Whether `tag` has a Gaussian limit.
pub fn is_gaussian_regime(tag: RegimeTag) -> bool {
    matches!(tag, RegimeTag::Supercritical | RegimeTag::Critical)
}
