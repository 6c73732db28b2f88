//! Per-temperature MCMC: a random-walk Metropolis engine for arbitrary
//! tempered paths and a conjugate Gibbs sampler for the tempered normal
//! linear-regression posterior, plus ladder orchestration.
//!
//! Reproducibility contract: identical inputs and seed give bit-identical
//! output, including when the ladder runs its chains in parallel. Each
//! chain's seed is derived from the base seed and the schedule index with a
//! fixed mixing function, warm starts are computed sequentially before the
//! parallel phase, and results are assembled in schedule order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::densities::{LogDensity, ParamVector, TemperedPath, TemperedTarget};
use crate::math::derive_seed;
use crate::schedules::TemperatureSchedule;
use crate::{Error, Result};

use std::sync::Arc;

/// Stream tags for seed derivation; fixed forever.
const STREAM_CHAIN: u64 = 0x636861696e; // "chain"
const STREAM_PILOT: u64 = 0x70696c6f74; // "pilot"

/// Acceptance-rate targets for proposal adaptation.
const TARGET_ACC_1D: f64 = 0.44;
const TARGET_ACC_ND: f64 = 0.234;
const ADAPT_WINDOW: usize = 50;

/// Chain length, burn-in, thinning, seed and proposal settings.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Per-coordinate proposal standard deviations (RWM only); `None` means
    /// unit scales, usually combined with `adapt`.
    pub step_scale: Option<Vec<f64>>,
    /// Tune a global step multiplier during burn-in, frozen afterwards so the
    /// retained chain has a fixed kernel.
    pub adapt: bool,
}

impl ChainConfig {
    pub fn new(iterations: usize, burn_in: usize, thin: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            iterations,
            burn_in,
            thin,
            seed,
            step_scale: None,
            adapt: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_step_scale(mut self, scale: Vec<f64>) -> Self {
        self.step_scale = Some(scale);
        self
    }

    pub fn with_adapt(mut self, adapt: bool) -> Self {
        self.adapt = adapt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Argument("thin must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Argument(format!(
                "burn_in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.retained() < 2 {
            return Err(Error::Argument(format!(
                "(iterations - burn_in) / thin = {} retained samples; need at least 2",
                self.retained()
            )));
        }
        if let Some(scales) = &self.step_scale {
            if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                return Err(Error::Argument("step scales must be positive".into()));
            }
        }
        Ok(())
    }

    /// Number of retained samples per chain.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Output of one chain: retained samples, their U-values, and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub t: f64,
    pub samples: Vec<ParamVector>,
    pub u_values: Vec<f64>,
    pub acceptance_rate: f64,
    pub seed_used: u64,
}

/// One chain per schedule point, ordered by temperature.
#[derive(Debug, Clone)]
pub struct LadderOutput {
    schedule: TemperatureSchedule,
    chains: Vec<ChainOutput>,
}

impl LadderOutput {
    pub fn new(schedule: TemperatureSchedule, chains: Vec<ChainOutput>) -> Result<Self> {
        if schedule.len() != chains.len() {
            return Err(Error::Argument(format!(
                "schedule has {} points but {} chains were supplied",
                schedule.len(),
                chains.len()
            )));
        }
        for (point, chain) in schedule.points().iter().zip(&chains) {
            if chain.t != *point {
                return Err(Error::Argument(format!(
                    "chain at t={} does not match schedule point {point}",
                    chain.t
                )));
            }
            // chains may drop the samples and keep only U-values (batch
            // sub-ladders do this); when present, lengths must agree
            if !chain.samples.is_empty() && chain.samples.len() != chain.u_values.len() {
                return Err(Error::Argument(
                    "chain samples and u_values lengths differ".into(),
                ));
            }
        }
        Ok(Self { schedule, chains })
    }

    pub fn schedule(&self) -> &TemperatureSchedule {
        &self.schedule
    }

    pub fn chains(&self) -> &[ChainOutput] {
        &self.chains
    }

    /// Chain at an exact temperature, if present.
    pub fn chain_at(&self, t: f64) -> Option<&ChainOutput> {
        self.chains.iter().find(|c| c.t == t)
    }
}

struct RwmState<'a> {
    target: &'a TemperedTarget,
    rng: ChaCha12Rng,
    theta: ParamVector,
    log_q: f64,
    scales: Vec<f64>,
    multiplier: f64,
    target_acc: f64,
    adapt_batches: usize,
}

impl<'a> RwmState<'a> {
    fn new(
        target: &'a TemperedTarget,
        init: &ParamVector,
        scales: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let log_q = target.log_density(init);
        if log_q == f64::NEG_INFINITY {
            return Err(Error::Support {
                label: target.label().to_string(),
                point: init.values().to_vec(),
            });
        }
        check_finite_log(log_q, target.t(), init)?;
        let dim = init.dim();
        let target_acc = if dim == 1 { TARGET_ACC_1D } else { TARGET_ACC_ND };
        Ok(Self {
            target,
            rng: ChaCha12Rng::seed_from_u64(seed),
            theta: init.clone(),
            log_q,
            scales,
            multiplier: 1.0,
            target_acc,
            adapt_batches: 0,
        })
    }

    fn step(&mut self) -> Result<bool> {
        let mut proposal = Vec::with_capacity(self.theta.dim());
        for (x, s) in self.theta.values().iter().zip(&self.scales) {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            proposal.push(x + self.multiplier * s * z);
        }
        let proposal = ParamVector::new(proposal).map_err(|_| Error::Numeric {
            message: "proposal left the finite range".into(),
            t: Some(self.target.t()),
            point: self.theta.values().to_vec(),
        })?;
        let log_q_prop = self.target.log_density(&proposal);
        if log_q_prop == f64::NEG_INFINITY {
            return Ok(false);
        }
        check_finite_log(log_q_prop, self.target.t(), &proposal)?;
        let log_ratio = log_q_prop - self.log_q;
        let accept = log_ratio >= 0.0 || {
            let u: f64 = self.rng.gen::<f64>();
            u.ln() < log_ratio
        };
        if accept {
            self.theta = proposal;
            self.log_q = log_q_prop;
        }
        Ok(accept)
    }

    /// Robbins-Monro update of the global step multiplier on log scale.
    fn adapt(&mut self, window_acc: f64) {
        self.adapt_batches += 1;
        let gain = 1.0 / (self.adapt_batches as f64).sqrt();
        let log_mult = self.multiplier.ln() + gain * (window_acc - self.target_acc);
        self.multiplier = log_mult.clamp(-20.0, 20.0).exp();
    }
}

fn check_finite_log(v: f64, t: f64, theta: &ParamVector) -> Result<()> {
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::Numeric {
            message: format!("log-density returned {v}"),
            t: Some(t),
            point: theta.values().to_vec(),
        });
    }
    Ok(())
}

/// Gaussian-proposal Metropolis chain targeting the tempered path density.
///
/// U-values are recorded through the path's U-statistic at each retained
/// sample; the run is fully reproducible from `cfg.seed`.
pub fn rwm_chain(
    target: &TemperedTarget,
    init: &ParamVector,
    cfg: &ChainConfig,
) -> Result<ChainOutput> {
    cfg.validate()?;
    let scales = proposal_scales(cfg, init.dim())?;
    let mut state = RwmState::new(target, init, scales, cfg.seed)?;
    let retained = cfg.retained();
    let mut samples = Vec::with_capacity(retained);
    let mut u_values = Vec::with_capacity(retained);
    let mut accepted_main = 0usize;
    let mut window_accepted = 0usize;

    for i in 0..cfg.iterations {
        let accepted = state.step().map_err(|e| e.at_temperature(target.t()))?;
        if i < cfg.burn_in {
            if cfg.adapt {
                window_accepted += usize::from(accepted);
                if (i + 1) % ADAPT_WINDOW == 0 {
                    state.adapt(window_accepted as f64 / ADAPT_WINDOW as f64);
                    window_accepted = 0;
                }
            }
        } else {
            accepted_main += usize::from(accepted);
            if (i - cfg.burn_in) % cfg.thin == 0 && samples.len() < retained {
                let u = state
                    .target
                    .u_value(&state.theta)
                    .map_err(|e| e.at_temperature(target.t()))?;
                samples.push(state.theta.clone());
                u_values.push(u);
            }
        }
    }

    let main_iters = cfg.iterations - cfg.burn_in;
    Ok(ChainOutput {
        t: target.t(),
        samples,
        u_values,
        acceptance_rate: accepted_main as f64 / main_iters as f64,
        seed_used: cfg.seed,
    })
}

fn proposal_scales(cfg: &ChainConfig, dim: usize) -> Result<Vec<f64>> {
    match &cfg.step_scale {
        Some(s) => {
            if s.len() != dim {
                return Err(Error::Argument(format!(
                    "step_scale has length {} but the parameter dimension is {dim}",
                    s.len()
                )));
            }
            Ok(s.clone())
        }
        None => Ok(vec![1.0; dim]),
    }
}

/// Short adaptive run used to carry a state along the ladder; returns the
/// final state.
fn pilot_run(
    target: &TemperedTarget,
    init: &ParamVector,
    iters: usize,
    scales: Vec<f64>,
    seed: u64,
) -> Result<ParamVector> {
    let mut state = RwmState::new(target, init, scales, seed)?;
    let mut window_accepted = 0usize;
    for i in 0..iters {
        let accepted = state.step().map_err(|e| e.at_temperature(target.t()))?;
        window_accepted += usize::from(accepted);
        if (i + 1) % ADAPT_WINDOW == 0 {
            state.adapt(window_accepted as f64 / ADAPT_WINDOW as f64);
            window_accepted = 0;
        }
    }
    Ok(state.theta)
}

/// How ladder chains are initialized.
#[derive(Debug, Clone)]
pub enum LadderInit {
    /// Sequential pilot runs carry a state from `t_0` upward; each chain
    /// starts at its pilot's final state (the default).
    WarmStart(ParamVector),
    /// Every chain starts at the same point.
    Fixed(ParamVector),
}

impl LadderInit {
    fn start_point(&self) -> &ParamVector {
        match self {
            LadderInit::WarmStart(p) | LadderInit::Fixed(p) => p,
        }
    }
}

/// Run one RWM chain per schedule point over a tempered path.
///
/// Chains execute in parallel; per-temperature seeds come from
/// `derive_seed(cfg.seed, stream, index)`, so the output does not depend on
/// the worker pool or execution order.
pub fn run_path_ladder(
    path: &Arc<dyn TemperedPath>,
    schedule: &TemperatureSchedule,
    cfg: &ChainConfig,
    init: &LadderInit,
) -> Result<LadderOutput> {
    cfg.validate()?;
    let points = schedule.points();
    let inits = warm_starts(path, points, cfg, init)?;

    let chains: Vec<ChainOutput> = points
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let target = TemperedTarget::new(Arc::clone(path), t)?;
            let chain_cfg = ChainConfig {
                seed: derive_seed(cfg.seed, STREAM_CHAIN, i as u64),
                ..cfg.clone()
            };
            rwm_chain(&target, &inits[i], &chain_cfg).map_err(|e| e.at_temperature(t))
        })
        .collect::<Result<Vec<_>>>()?;

    LadderOutput::new(schedule.clone(), chains)
}

fn warm_starts(
    path: &Arc<dyn TemperedPath>,
    points: &[f64],
    cfg: &ChainConfig,
    init: &LadderInit,
) -> Result<Vec<ParamVector>> {
    let start = init.start_point().clone();
    match init {
        LadderInit::Fixed(_) => Ok(vec![start; points.len()]),
        LadderInit::WarmStart(_) => {
            let pilot_iters = cfg.burn_in.min(500);
            if pilot_iters < ADAPT_WINDOW {
                return Ok(vec![start; points.len()]);
            }
            let scales = proposal_scales(cfg, start.dim())?;
            let mut inits = Vec::with_capacity(points.len());
            let mut carry = start;
            for (i, &t) in points.iter().enumerate() {
                let target = TemperedTarget::new(Arc::clone(path), t)?;
                carry = pilot_run(
                    &target,
                    &carry,
                    pilot_iters,
                    scales.clone(),
                    derive_seed(cfg.seed, STREAM_PILOT, i as u64),
                )
                .map_err(|e| e.at_temperature(t))?;
                inits.push(carry.clone());
            }
            Ok(inits)
        }
    }
}

/// Normal linear regression `y_i = alpha + beta (x_i - xbar) + eps_i` with
/// independent normal priors on `(alpha, beta)` and an inverse-gamma prior
/// (shape, rate) on the error variance. The covariate is centered internally.
#[derive(Debug, Clone)]
pub struct RegressionModel {
    y: Vec<f64>,
    x_centered: Vec<f64>,
    x_mean: f64,
    pub prior_mean: [f64; 2],
    pub prior_var: [f64; 2],
    pub prior_shape: f64,
    pub prior_rate: f64,
}

impl RegressionModel {
    pub fn new(
        y: Vec<f64>,
        x: Vec<f64>,
        prior_mean: [f64; 2],
        prior_var: [f64; 2],
        prior_shape: f64,
        prior_rate: f64,
    ) -> Result<Self> {
        if y.len() != x.len() || y.len() < 3 {
            return Err(Error::Argument(format!(
                "y and x must have equal length >= 3, got {} and {}",
                y.len(),
                x.len()
            )));
        }
        if y.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::Argument("data must be finite".into()));
        }
        for &v in &prior_var {
            if !(v > 0.0) {
                return Err(Error::Domain {
                    what: "prior variance",
                    value: v,
                    constraint: "(0, inf)",
                });
            }
        }
        if !(prior_shape > 0.0) || !(prior_rate > 0.0) {
            return Err(Error::Domain {
                what: "inverse-gamma hyperparameter",
                value: if prior_shape > 0.0 { prior_rate } else { prior_shape },
                constraint: "(0, inf)",
            });
        }
        let n = x.len() as f64;
        let x_mean = x.iter().sum::<f64>() / n;
        let x_centered = x.iter().map(|v| v - x_mean).collect();
        Ok(Self {
            y,
            x_centered,
            x_mean,
            prior_mean,
            prior_var,
            prior_shape,
            prior_rate,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_centered(&self) -> &[f64] {
        &self.x_centered
    }

    pub fn x_mean(&self) -> f64 {
        self.x_mean
    }

    /// Log-likelihood `log f(y | alpha, beta, sigma2)`.
    pub fn log_likelihood(&self, alpha: f64, beta: f64, sigma2: f64) -> f64 {
        if sigma2 <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let n = self.y.len() as f64;
        let ssr = self.ssr(alpha, beta);
        -0.5 * n * (sigma2.ln() + LN_2PI) - 0.5 * ssr / sigma2
    }

    fn ssr(&self, alpha: f64, beta: f64) -> f64 {
        self.y
            .iter()
            .zip(&self.x_centered)
            .map(|(yi, xi)| {
                let r = yi - alpha - beta * xi;
                r * r
            })
            .sum()
    }

    fn sum_y(&self) -> f64 {
        self.y.iter().sum()
    }

    fn sxx(&self) -> f64 {
        self.x_centered.iter().map(|x| x * x).sum()
    }

    fn sxy(&self) -> f64 {
        self.x_centered.iter().zip(&self.y).map(|(x, y)| x * y).sum()
    }

    /// Conditional mean and variance of `alpha` given `(sigma2, t)`.
    ///
    /// With the covariate centered the cross term between alpha and beta
    /// vanishes, so the bivariate conditional factorizes.
    pub(crate) fn alpha_conditional(&self, sigma2: f64, t: f64) -> (f64, f64) {
        let n = self.y.len() as f64;
        let precision = t * n / sigma2 + 1.0 / self.prior_var[0];
        let mean = (t * self.sum_y() / sigma2 + self.prior_mean[0] / self.prior_var[0]) / precision;
        (mean, 1.0 / precision)
    }

    /// Conditional mean and variance of `beta` given `(sigma2, t)`.
    pub(crate) fn beta_conditional(&self, sigma2: f64, t: f64) -> (f64, f64) {
        let precision = t * self.sxx() / sigma2 + 1.0 / self.prior_var[1];
        let mean = (t * self.sxy() / sigma2 + self.prior_mean[1] / self.prior_var[1]) / precision;
        (mean, 1.0 / precision)
    }

    /// Conditional inverse-gamma (shape, rate) of `sigma2` given
    /// `(alpha, beta, t)`.
    pub(crate) fn sigma2_conditional(&self, alpha: f64, beta: f64, t: f64) -> (f64, f64) {
        let n = self.y.len() as f64;
        (
            self.prior_shape + 0.5 * t * n,
            self.prior_rate + 0.5 * t * self.ssr(alpha, beta),
        )
    }
}

const LN_2PI: f64 = 1.8378770664093453;

fn draw_inverse_gamma(rng: &mut ChaCha12Rng, shape: f64, rate: f64) -> f64 {
    let gamma = Gamma::new(shape, 1.0 / rate).expect("positive inverse-gamma parameters");
    let g: f64 = gamma.sample(rng);
    // guard against a zero draw from very small shapes
    if g <= f64::MIN_POSITIVE {
        1.0 / f64::MIN_POSITIVE.sqrt()
    } else {
        1.0 / g
    }
}

/// Exact conditional Gibbs sampler for the tempered regression posterior
/// `f(y|theta)^t pi(theta)`.
///
/// At `t = 0` the sweep samples the prior exactly. U-values record the
/// log-likelihood, the U-statistic of the prior-posterior path.
pub fn gibbs_regression_chain(
    model: &RegressionModel,
    t: f64,
    cfg: &ChainConfig,
) -> Result<ChainOutput> {
    crate::densities::check_temperature(t)?;
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    // only sigma2 carries across sweeps; start it at the prior mode
    let mut sigma2 = model.prior_rate / (model.prior_shape + 1.0);

    let retained = cfg.retained();
    let mut samples = Vec::with_capacity(retained);
    let mut u_values = Vec::with_capacity(retained);

    for i in 0..cfg.iterations {
        let (ma, va) = model.alpha_conditional(sigma2, t);
        let za: f64 = StandardNormal.sample(&mut rng);
        let alpha = ma + va.sqrt() * za;
        let (mb, vb) = model.beta_conditional(sigma2, t);
        let zb: f64 = StandardNormal.sample(&mut rng);
        let beta = mb + vb.sqrt() * zb;
        let (shape, rate) = model.sigma2_conditional(alpha, beta, t);
        sigma2 = draw_inverse_gamma(&mut rng, shape, rate);

        if i >= cfg.burn_in && (i - cfg.burn_in) % cfg.thin == 0 && samples.len() < retained {
            samples.push(ParamVector::new(vec![alpha, beta, sigma2])?);
            u_values.push(model.log_likelihood(alpha, beta, sigma2));
        }
    }

    Ok(ChainOutput {
        t,
        samples,
        u_values,
        acceptance_rate: 1.0,
        seed_used: cfg.seed,
    })
}

/// Run one Gibbs chain per schedule point on the prior-posterior path of a
/// regression model.
pub fn run_gibbs_ladder(
    model: &RegressionModel,
    schedule: &TemperatureSchedule,
    cfg: &ChainConfig,
) -> Result<LadderOutput> {
    cfg.validate()?;
    let chains: Vec<ChainOutput> = schedule
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let chain_cfg = ChainConfig {
                seed: derive_seed(cfg.seed, STREAM_CHAIN, i as u64),
                ..cfg.clone()
            };
            gibbs_regression_chain(model, t, &chain_cfg).map_err(|e| e.at_temperature(t))
        })
        .collect::<Result<Vec<_>>>()?;
    LadderOutput::new(schedule.clone(), chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{Gaussian, GeometricPath};
    use crate::math::{mean, sample_std};
    use approx::assert_relative_eq;

    fn gaussian_pair_path() -> Arc<dyn TemperedPath> {
        Arc::new(GeometricPath::new(
            Gaussian::kernel(vec![0.0], vec![1.0]).unwrap().shared(),
            Gaussian::kernel(vec![1.0], vec![1.0]).unwrap().shared(),
        ))
    }

    fn degenerate_path() -> Arc<dyn TemperedPath> {
        let q = Gaussian::kernel(vec![0.0], vec![1.0]).unwrap().shared();
        Arc::new(GeometricPath::new(Arc::clone(&q), q))
    }

    /// Standard error of a chain mean from non-overlapping batch means.
    fn batch_se(values: &[f64], n_batches: usize) -> f64 {
        let bs = values.len() / n_batches;
        let means: Vec<f64> = (0..n_batches)
            .map(|b| mean(&values[b * bs..(b + 1) * bs]))
            .collect();
        sample_std(&means) / (n_batches as f64).sqrt()
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(100, 50, 1, 0).is_ok());
        assert!(ChainConfig::new(100, 100, 1, 0).is_err());
        assert!(ChainConfig::new(100, 99, 1, 0).is_err()); // 1 retained
        assert!(ChainConfig::new(100, 0, 0, 0).is_err());
        assert!(ChainConfig::new(100, 0, 60, 0).is_err()); // 1 retained
    }

    #[test]
    fn degenerate_path_yields_zero_u_everywhere() {
        let path = degenerate_path();
        let schedule = TemperatureSchedule::explicit(vec![0.0, 1.0]).unwrap();
        let cfg = ChainConfig::new(500, 100, 1, 3).unwrap();
        let init = LadderInit::Fixed(ParamVector::new(vec![0.0]).unwrap());
        let ladder = run_path_ladder(&path, &schedule, &cfg, &init).unwrap();
        for chain in ladder.chains() {
            assert!(chain.u_values.iter().all(|&u| u == 0.0));
        }
    }

    #[test]
    fn rwm_mean_u_matches_gaussian_oracle() {
        // E_t(U) = (2t - 1) / 2 for the unit-gap equal-variance pair
        let path = gaussian_pair_path();
        let cfg = ChainConfig::new(55_000, 5_000, 1, 42).unwrap();
        for (t, expected) in [(0.5, 0.0), (1.0, 0.5)] {
            let target = TemperedTarget::new(Arc::clone(&path), t).unwrap();
            let chain = rwm_chain(&target, &ParamVector::new(vec![t]).unwrap(), &cfg).unwrap();
            let m = mean(&chain.u_values);
            let se = batch_se(&chain.u_values, 50);
            assert!(
                (m - expected).abs() < 3.0 * se,
                "t={t}: mean {m} vs {expected} (se {se})"
            );
        }
    }

    #[test]
    fn rwm_adaptation_reaches_target_acceptance() {
        let path = gaussian_pair_path();
        let target = TemperedTarget::new(path, 0.5).unwrap();
        let cfg = ChainConfig::new(20_000, 5_000, 1, 9)
            .unwrap()
            .with_step_scale(vec![25.0]); // deliberately poor initial scale
        let chain = rwm_chain(&target, &ParamVector::new(vec![0.0]).unwrap(), &cfg).unwrap();
        assert!(
            (chain.acceptance_rate - TARGET_ACC_1D).abs() < 0.1,
            "acceptance {} far from target",
            chain.acceptance_rate
        );
    }

    #[test]
    fn rwm_rejects_init_outside_support() {
        let ig = crate::densities::InverseGamma::new(2.0, 1.0).unwrap().shared();
        let path: Arc<dyn TemperedPath> =
            Arc::new(GeometricPath::new(Arc::clone(&ig), ig));
        let target = TemperedTarget::new(path, 0.5).unwrap();
        let cfg = ChainConfig::new(100, 10, 1, 0).unwrap();
        let err = rwm_chain(&target, &ParamVector::new(vec![-1.0]).unwrap(), &cfg);
        assert!(matches!(err, Err(Error::Support { .. })));
    }

    #[test]
    fn ladder_is_bit_identical_across_reruns() {
        let path = gaussian_pair_path();
        let schedule = TemperatureSchedule::uniform(5).unwrap();
        let cfg = ChainConfig::new(800, 200, 2, 1234).unwrap();
        let init = LadderInit::WarmStart(ParamVector::new(vec![0.0]).unwrap());
        let a = run_path_ladder(&path, &schedule, &cfg, &init).unwrap();
        let b = run_path_ladder(&path, &schedule, &cfg, &init).unwrap();
        assert_eq!(a.chains().len(), b.chains().len());
        for (ca, cb) in a.chains().iter().zip(b.chains()) {
            assert_eq!(ca, cb);
        }
    }

    #[test]
    fn ladder_validates_chain_bijection() {
        let schedule = TemperatureSchedule::uniform(2).unwrap();
        let chain = ChainOutput {
            t: 0.3,
            samples: vec![],
            u_values: vec![],
            acceptance_rate: 1.0,
            seed_used: 0,
        };
        assert!(LadderOutput::new(schedule, vec![chain]).is_err());
    }

    fn toy_model() -> RegressionModel {
        // alpha = 2, beta = 1.5, sigma = 0.7 over centered x
        let x: Vec<f64> = (0..24).map(|i| i as f64 / 4.0).collect();
        let mut y = Vec::new();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let xm = x.iter().sum::<f64>() / x.len() as f64;
        for xi in &x {
            let eps: f64 = StandardNormal.sample(&mut rng);
            y.push(2.0 + 1.5 * (xi - xm) + 0.7 * eps);
        }
        RegressionModel::new(y, x, [0.0, 0.0], [4.0, 4.0], 3.0, 2.0).unwrap()
    }

    #[test]
    fn gibbs_prior_sampling_at_t_zero() {
        let model = toy_model();
        let cfg = ChainConfig::new(42_000, 2_000, 1, 5).unwrap();
        let chain = gibbs_regression_chain(&model, 0.0, &cfg).unwrap();
        let alphas: Vec<f64> = chain.samples.iter().map(|s| s[0]).collect();
        let betas: Vec<f64> = chain.samples.iter().map(|s| s[1]).collect();
        // independent draws: plain sqrt(n) standard errors apply
        let se = (4.0 / alphas.len() as f64).sqrt();
        assert!(mean(&alphas).abs() < 3.0 * se, "alpha mean {}", mean(&alphas));
        assert!(mean(&betas).abs() < 3.0 * se, "beta mean {}", mean(&betas));
        assert_eq!(chain.acceptance_rate, 1.0);
    }

    #[test]
    fn gibbs_t_zero_u_matches_prior_monte_carlo() {
        // E_prior[log f(y|theta)] cross-checked against direct prior sampling
        let model = toy_model();
        let cfg = ChainConfig::new(22_000, 2_000, 1, 6).unwrap();
        let chain = gibbs_regression_chain(&model, 0.0, &cfg).unwrap();

        let mut rng = ChaCha12Rng::seed_from_u64(991);
        let mut direct = Vec::with_capacity(20_000);
        for _ in 0..20_000 {
            let a = 2.0 * rng.sample::<f64, _>(StandardNormal);
            let b = 2.0 * rng.sample::<f64, _>(StandardNormal);
            let s2 = draw_inverse_gamma(&mut rng, 3.0, 2.0);
            direct.push(model.log_likelihood(a, b, s2));
        }
        let se = (sample_std(&chain.u_values).powi(2) / chain.u_values.len() as f64
            + sample_std(&direct).powi(2) / direct.len() as f64)
            .sqrt();
        let diff = mean(&chain.u_values) - mean(&direct);
        assert!(diff.abs() < 3.0 * se, "diff {diff} vs se {se}");
    }

    #[test]
    fn gibbs_conditionals_match_direct_formulas() {
        // conditional draw moments vs closed-form conditional parameters
        let model = toy_model();
        let sigma2 = 0.49;
        let t = 0.8;
        let (ma, va) = model.alpha_conditional(sigma2, t);
        let (mb, vb) = model.beta_conditional(sigma2, t);

        // independent re-derivation from sufficient statistics
        let n = model.n() as f64;
        let sum_y: f64 = model.y().iter().sum();
        let prec_a = t * n / sigma2 + 0.25;
        assert_relative_eq!(va, 1.0 / prec_a, epsilon = 1e-12);
        assert_relative_eq!(ma, (t * sum_y / sigma2) / prec_a, epsilon = 1e-12);
        let sxx: f64 = model.x_centered().iter().map(|x| x * x).sum();
        let sxy: f64 = model
            .x_centered()
            .iter()
            .zip(model.y())
            .map(|(x, y)| x * y)
            .sum();
        let prec_b = t * sxx / sigma2 + 0.25;
        assert_relative_eq!(vb, 1.0 / prec_b, epsilon = 1e-12);
        assert_relative_eq!(mb, (t * sxy / sigma2) / prec_b, epsilon = 1e-12);

        // sampled conditional moments agree with the formulas
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let r = 200_000;
        let draws: Vec<f64> = (0..r)
            .map(|_| ma + va.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        assert!((mean(&draws) - ma).abs() < 3.0 * (va / r as f64).sqrt());
    }

    #[test]
    fn gibbs_ladder_reproducible_and_ordered() {
        let model = toy_model();
        let schedule = TemperatureSchedule::uniform(4).unwrap();
        let cfg = ChainConfig::new(300, 100, 1, 17).unwrap();
        let a = run_gibbs_ladder(&model, &schedule, &cfg).unwrap();
        let b = run_gibbs_ladder(&model, &schedule, &cfg).unwrap();
        for ((ca, cb), t) in a.chains().iter().zip(b.chains()).zip(schedule.points()) {
            assert_eq!(ca.t, *t);
            assert_eq!(ca, cb);
        }
    }
}
