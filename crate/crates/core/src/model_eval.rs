//! Marginal-likelihood and Bayes-factor estimation by path choice.
//!
//! Every route pairs a thermodynamic (trapezoid) and a stepping-stone
//! aggregation over the same ladder:
//!
//! - prior-posterior (PP): endpoints prior and unnormalized posterior;
//!   `log lambda` is the log marginal likelihood.
//! - importance-posterior (IP): a proper moment-matched density `g` replaces
//!   the prior, shrinking the path when `g` approximates the posterior.
//! - model-switch (MS): endpoints are two models' unnormalized posteriors;
//!   `log lambda` is the log Bayes factor.
//! - quadrivial: a geometric hyper-path between two nested PP or IP paths,
//!   melting one model while annealing the other; the Bayes factor comes out
//!   directly.
//!
//! Positive parameters are handled on log scale throughout: both endpoint
//! densities of a path receive the same change of variables, so normalizing
//! constants and U-statistics are unchanged while the samplers work on an
//! unconstrained space.

use std::sync::Arc;

use serde::Serialize;

use crate::densities::{
    density_from_fn, DensityRef, GeometricPath, LogScaleView, ParamVector, ProductDensity,
    QuadrivialPath, Support, TemperedPath,
};
use crate::diagnostics::{batch_means, BatchSpec, EstimateWithError};
use crate::math::{logmeanexp, mean, sample_variance};
use crate::sampler::{run_path_ladder, ChainConfig, ChainOutput, LadderInit, LadderOutput};
use crate::schedules::TemperatureSchedule;
use crate::ss;
use crate::ti::{e_hat_curve, ti_trapezoid};
use crate::{Error, Result};

/// Which estimator(s) to aggregate from the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ti,
    Ss,
    Both,
}

impl Method {
    pub fn wants_ti(self) -> bool {
        matches!(self, Method::Ti | Method::Both)
    }
    pub fn wants_ss(self) -> bool {
        matches!(self, Method::Ss | Method::Both)
    }
}

/// Estimates produced from one ladder run.
#[derive(Debug, Clone)]
pub struct RunEstimates {
    pub ti: Option<EstimateWithError>,
    pub ss: Option<EstimateWithError>,
    pub ladder: LadderOutput,
    pub warnings: Vec<String>,
}

/// A Bayesian model: a likelihood map, a proper prior, the coordinate
/// supports, and a starting point inside the prior's support. The data is
/// bound into the likelihood closure at construction.
pub struct BayesModel {
    log_lik: Arc<dyn Fn(&ParamVector) -> f64 + Send + Sync>,
    log_prior: DensityRef,
    layout: Vec<Support>,
    init: ParamVector,
    label: String,
}

impl BayesModel {
    pub fn new(
        label: impl Into<String>,
        log_prior: DensityRef,
        layout: Vec<Support>,
        init: ParamVector,
        log_lik: impl Fn(&ParamVector) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if init.dim() != layout.len() {
            return Err(Error::Argument(format!(
                "init has dimension {} but layout describes {} coordinates",
                init.dim(),
                layout.len()
            )));
        }
        if let Some(d) = log_prior.dim() {
            if d != layout.len() {
                return Err(Error::Argument(format!(
                    "prior expects dimension {d} but layout describes {} coordinates",
                    layout.len()
                )));
            }
        }
        if log_prior.log_density(&init) == f64::NEG_INFINITY {
            return Err(Error::Support {
                label: log_prior.label().to_string(),
                point: init.values().to_vec(),
            });
        }
        Ok(Self {
            log_lik: Arc::new(log_lik),
            log_prior,
            layout,
            init,
            label: label.into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    pub fn layout(&self) -> &[Support] {
        &self.layout
    }

    pub fn log_likelihood(&self, theta: &ParamVector) -> f64 {
        (self.log_lik)(theta)
    }

    /// Prior over the working (log-transformed) space.
    pub fn working_prior(&self) -> Result<DensityRef> {
        Ok(LogScaleView::new(Arc::clone(&self.log_prior), self.layout.clone())?.shared())
    }

    /// Unnormalized posterior over the working space.
    pub fn working_posterior(&self) -> Result<DensityRef> {
        let prior = self.working_prior()?;
        let lik = Arc::clone(&self.log_lik);
        let layout = self.layout.clone();
        let label = format!("{}-posterior", self.label);
        Ok(density_from_fn(label, layout.len(), move |x| {
            let p = prior.log_density(x);
            if p == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            match LogScaleView::to_natural(&layout, x) {
                Some(theta) => {
                    let l = lik(&theta);
                    if l == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        p + l
                    }
                }
                None => f64::NEG_INFINITY,
            }
        }))
    }

    /// The prior-posterior path in the working space; its U-statistic is the
    /// log-likelihood.
    pub fn pp_path(&self) -> Result<GeometricPath> {
        Ok(GeometricPath::new(
            self.working_prior()?,
            self.working_posterior()?,
        ))
    }

    pub fn working_init(&self) -> Result<ParamVector> {
        LogScaleView::from_natural(&self.layout, &self.init)
    }
}

/// A proper moment-matched importance density: independent normals over the
/// working coordinates, which means positive parameters are matched on log
/// scale with the Jacobian carried by the change of variables.
#[derive(Clone)]
pub struct ImportanceDensity {
    working: DensityRef,
    layout: Vec<Support>,
    pub mean_working: Vec<f64>,
    pub var_working: Vec<f64>,
}

impl ImportanceDensity {
    /// Density over the working space (a proper normal).
    pub fn working(&self) -> &DensityRef {
        &self.working
    }

    pub fn layout(&self) -> &[Support] {
        &self.layout
    }

    /// Density over the natural parameters, Jacobian included; proper with
    /// `z = 1` by construction.
    pub fn natural(&self) -> DensityRef {
        let working = Arc::clone(&self.working);
        let layout = self.layout.clone();
        density_from_fn("importance", layout.len(), move |theta| {
            match LogScaleView::from_natural(&layout, theta) {
                Ok(x) => {
                    let jacobian: f64 = x
                        .values()
                        .iter()
                        .zip(&layout)
                        .filter(|(_, s)| **s == Support::Positive)
                        .map(|(xi, _)| xi)
                        .sum();
                    working.log_density(&x) - jacobian
                }
                Err(_) => f64::NEG_INFINITY,
            }
        })
    }

    pub fn working_mean(&self) -> Result<ParamVector> {
        ParamVector::new(self.mean_working.clone())
    }
}

/// Moment-match an importance density from a posterior chain whose samples
/// are on the natural scale.
pub fn build_importance(chain: &ChainOutput, layout: &[Support]) -> Result<ImportanceDensity> {
    if chain.samples.len() < 100 {
        return Err(Error::Argument(format!(
            "importance construction needs at least 100 retained samples, got {}",
            chain.samples.len()
        )));
    }
    let working: Vec<ParamVector> = chain
        .samples
        .iter()
        .map(|s| LogScaleView::from_natural(layout, s))
        .collect::<Result<_>>()?;
    build_importance_working(&working, layout)
}

/// Moment-match from samples already on the working scale.
pub fn build_importance_from_working(
    chain: &ChainOutput,
    layout: &[Support],
) -> Result<ImportanceDensity> {
    if chain.samples.len() < 100 {
        return Err(Error::Argument(format!(
            "importance construction needs at least 100 retained samples, got {}",
            chain.samples.len()
        )));
    }
    build_importance_working(&chain.samples, layout)
}

fn build_importance_working(
    samples: &[ParamVector],
    layout: &[Support],
) -> Result<ImportanceDensity> {
    let dim = layout.len();
    let mut mean_w = vec![0.0; dim];
    let mut var_w = vec![0.0; dim];
    for j in 0..dim {
        let coord: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        mean_w[j] = mean(&coord);
        var_w[j] = sample_variance(&coord);
        if !(var_w[j] > 0.0) {
            return Err(Error::DegenerateImportance(format!(
                "coordinate {j} has zero sample variance"
            )));
        }
    }
    let gaussian = crate::densities::Gaussian::new(mean_w.clone(), var_w.clone())?
        .with_label("importance")
        .shared();
    Ok(ImportanceDensity {
        working: gaussian,
        layout: layout.to_vec(),
        mean_working: mean_w,
        var_working: var_w,
    })
}

/// Aggregate TI and/or SS estimates (with paired batch-means errors) from a
/// ladder. `path` enables midpoint re-evaluation for compound paths and can
/// be omitted for geometric ones.
pub fn aggregate_estimates(
    ladder: LadderOutput,
    path: Option<&dyn TemperedPath>,
    method: Method,
    spec: &BatchSpec,
) -> Result<RunEstimates> {
    let ti = if method.wants_ti() {
        Some(batch_means(&ladder, spec, |sub| {
            Ok(ti_trapezoid(&e_hat_curve(sub)?))
        })?)
    } else {
        None
    };

    let mut warnings = Vec::new();
    let ss_est = if method.wants_ss() {
        let weights = ss::panel_log_weights(&ladder, path)?;
        let full = ss::stepping_stone_from_weights(ladder.schedule(), &weights)?;
        let retained = ladder.chains()[0].u_values.len().max(1);
        for step in &full.steps {
            if step.ess < 0.05 * spec.batch_size as f64 * spec.n_batches as f64
                && step.ess < 0.05 * retained as f64
            {
                warnings.push(format!(
                    "stepping-stone weights degenerate on panel ({:.4}, {:.4}): ESS {:.1} of {}",
                    step.t_lo, step.t_hi, step.ess, retained
                ));
            }
        }
        // per-batch stepping stone from slices of the same panel weights
        let mut batch_values = Vec::with_capacity(spec.n_batches);
        for b in 0..spec.n_batches {
            let lo = b * spec.batch_size;
            let hi = lo + spec.batch_size;
            for w in &weights {
                if w.len() < hi {
                    return Err(Error::InsufficientSamples {
                        required: hi,
                        available: w.len(),
                    });
                }
            }
            let value: f64 = weights.iter().map(|w| logmeanexp(&w[lo..hi])).sum();
            batch_values.push(value);
        }
        Some(EstimateWithError::from_batches(batch_values))
    } else {
        None
    };

    Ok(RunEstimates {
        ti,
        ss: ss_est,
        ladder,
        warnings,
    })
}

/// Marginal likelihood over the prior-posterior path, sampled by the
/// random-walk engine.
pub fn marginal_pp(
    model: &BayesModel,
    schedule: &TemperatureSchedule,
    cfg: &ChainConfig,
    spec: &BatchSpec,
    method: Method,
) -> Result<RunEstimates> {
    let path: Arc<dyn TemperedPath> = Arc::new(model.pp_path()?);
    let init = LadderInit::WarmStart(model.working_init()?);
    let ladder = run_path_ladder(&path, schedule, cfg, &init)?;
    aggregate_estimates(ladder, Some(path.as_ref()), method, spec)
}

/// Marginal likelihood over the prior-posterior path of a regression model,
/// sampled by the conjugate Gibbs sampler.
pub fn marginal_pp_gibbs(
    model: &crate::sampler::RegressionModel,
    schedule: &TemperatureSchedule,
    cfg: &ChainConfig,
    spec: &BatchSpec,
    method: Method,
) -> Result<RunEstimates> {
    let ladder = crate::sampler::run_gibbs_ladder(model, schedule, cfg)?;
    aggregate_estimates(ladder, None, method, spec)
}

/// Marginal likelihood over the importance-posterior path
/// `q_t = (f pi)^t g^(1-t)`; its U-statistic is
/// `log f + log pi - log g`.
pub fn marginal_ip(
    model: &BayesModel,
    g: &ImportanceDensity,
    schedule: &TemperatureSchedule,
    cfg: &ChainConfig,
    spec: &BatchSpec,
    method: Method,
) -> Result<RunEstimates> {
    if g.layout() != model.layout() {
        return Err(Error::Config(
            "importance density layout does not match the model".into(),
        ));
    }
    let path: Arc<dyn TemperedPath> = Arc::new(GeometricPath::new(
        Arc::clone(g.working()),
        model.working_posterior()?,
    ));
    let init = LadderInit::WarmStart(g.working_mean()?);
    let ladder = run_path_ladder(&path, schedule, cfg, &init)?;
    aggregate_estimates(ladder, Some(path.as_ref()), method, spec)
}

/// How two models' parameter blocks are linked along a model-switch or
/// quadrivial path.
pub enum BlockLinking {
    /// The models share one parameter space; the path is directly applicable.
    SharedBlock,
    /// Blocks differ: the joint vector concatenates both blocks and each
    /// model's block is held by a proper pseudo-prior at the endpoint where
    /// that model is inactive. Densities are over the working space of the
    /// respective block.
    PseudoPriors { psi1: DensityRef, psi0: DensityRef },
}

impl BlockLinking {
    /// Default pseudo-priors from the models' importance densities.
    pub fn from_importance(g1: &ImportanceDensity, g0: &ImportanceDensity) -> Self {
        BlockLinking::PseudoPriors {
            psi1: Arc::clone(g1.working()),
            psi0: Arc::clone(g0.working()),
        }
    }

    /// Pseudo-priors given on the natural scale of each block.
    pub fn pseudo_from_natural(
        psi1: DensityRef,
        layout1: &[Support],
        psi0: DensityRef,
        layout0: &[Support],
    ) -> Result<Self> {
        Ok(BlockLinking::PseudoPriors {
            psi1: LogScaleView::new(psi1, layout1.to_vec())?.shared(),
            psi0: LogScaleView::new(psi0, layout0.to_vec())?.shared(),
        })
    }
}

struct JointSpace {
    q1: DensityRef,
    q0: DensityRef,
    link1: Option<DensityRef>,
    link0: Option<DensityRef>,
    init: ParamVector,
}

/// Assemble joint working-space endpoint densities for MS/quadrivial paths.
///
/// `link1`/`link0` are the nested-path link densities (importance or prior)
/// per model; pass `None` when only the MS endpoints are needed.
fn joint_space(
    m1: &BayesModel,
    m0: &BayesModel,
    linking: &BlockLinking,
    link1: Option<DensityRef>,
    link0: Option<DensityRef>,
) -> Result<JointSpace> {
    match linking {
        BlockLinking::SharedBlock => {
            if m1.layout() != m0.layout() {
                return Err(Error::Config(format!(
                    "models '{}' and '{}' have different parameter blocks; supply pseudo-priors",
                    m1.label(),
                    m0.label()
                )));
            }
            Ok(JointSpace {
                q1: m1.working_posterior()?,
                q0: m0.working_posterior()?,
                link1,
                link0,
                init: m1.working_init()?,
            })
        }
        BlockLinking::PseudoPriors { psi1, psi0 } => {
            let d1 = m1.dim();
            let d0 = m0.dim();
            let product = |a: DensityRef, b: DensityRef| -> Result<DensityRef> {
                Ok(ProductDensity::new(vec![(a, d1), (b, d0)])?.shared())
            };
            let q1 = product(m1.working_posterior()?, Arc::clone(psi0))?;
            let q0 = product(Arc::clone(psi1), m0.working_posterior()?)?;
            let link1 = match link1 {
                Some(l) => Some(product(l, Arc::clone(psi0))?),
                None => None,
            };
            let link0 = match link0 {
                Some(l) => Some(product(Arc::clone(psi1), l)?),
                None => None,
            };
            let mut init = m1.working_init()?.into_values();
            init.extend(m0.working_init()?.into_values());
            Ok(JointSpace {
                q1,
                q0,
                link1,
                link0,
                init: ParamVector::new(init)?,
            })
        }
    }
}

/// Direct Bayes-factor estimate over the model-switch path
/// `q_t = (f1 pi1)^t (f0 pi0)^(1-t)`.
pub fn bayes_factor_ms(
    m1: &BayesModel,
    m0: &BayesModel,
    linking: &BlockLinking,
    schedule: &TemperatureSchedule,
    cfg: &ChainConfig,
    spec: &BatchSpec,
    method: Method,
) -> Result<RunEstimates> {
    let joint = joint_space(m1, m0, linking, None, None)?;
    let path: Arc<dyn TemperedPath> = Arc::new(GeometricPath::new(joint.q0, joint.q1));
    let init = LadderInit::WarmStart(joint.init);
    let ladder = run_path_ladder(&path, schedule, cfg, &init)?;
    aggregate_estimates(ladder, Some(path.as_ref()), method, spec)
}

/// Nested path choice for the quadrivial Bayes factor.
pub enum NestedPath<'a> {
    PriorPosterior,
    ImportancePosterior {
        g1: &'a ImportanceDensity,
        g0: &'a ImportanceDensity,
    },
}

/// Direct Bayes-factor estimate over the compound (quadrivial) path: the
/// hyper-path melts model 1 while annealing model 0, and each model's nested
/// path links its posterior with its prior (PP) or importance density (IP).
pub fn bayes_factor_quadrivial(
    m1: &BayesModel,
    m0: &BayesModel,
    nested: &NestedPath<'_>,
    linking: &BlockLinking,
    schedule: &TemperatureSchedule,
    cfg: &ChainConfig,
    spec: &BatchSpec,
    method: Method,
) -> Result<RunEstimates> {
    let (link1, link0) = match nested {
        NestedPath::PriorPosterior => (m1.working_prior()?, m0.working_prior()?),
        NestedPath::ImportancePosterior { g1, g0 } => {
            if g1.layout() != m1.layout() || g0.layout() != m0.layout() {
                return Err(Error::Config(
                    "importance density layouts do not match the models".into(),
                ));
            }
            (Arc::clone(g1.working()), Arc::clone(g0.working()))
        }
    };
    let joint = joint_space(m1, m0, linking, Some(link1), Some(link0))?;
    let path: Arc<dyn TemperedPath> = Arc::new(QuadrivialPath::new(
        joint.q1,
        joint.link1.expect("link supplied above"),
        joint.link0.expect("link supplied above"),
        joint.q0,
    ));
    let init = LadderInit::WarmStart(joint.init);
    let ladder = run_path_ladder(&path, schedule, cfg, &init)?;
    aggregate_estimates(ladder, Some(path.as_ref()), method, spec)
}

/// Paired difference of two batch-means estimates (`a - b`), batch by batch.
pub fn combine_difference(
    a: &EstimateWithError,
    b: &EstimateWithError,
) -> Result<EstimateWithError> {
    if a.n_batches != b.n_batches {
        return Err(Error::Argument(format!(
            "cannot pair {} batches with {}",
            a.n_batches, b.n_batches
        )));
    }
    Ok(EstimateWithError::from_batches(
        a.batch_values
            .iter()
            .zip(&b.batch_values)
            .map(|(x, y)| x - y)
            .collect(),
    ))
}

/// Normal likelihood with known variance and a normal prior on the mean:
/// the conjugate toy whose marginal likelihood is available in closed form.
pub fn normal_known_variance_model(
    y: Vec<f64>,
    sigma2: f64,
    prior_mean: f64,
    prior_var: f64,
) -> Result<BayesModel> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain {
            what: "sigma2",
            value: sigma2,
            constraint: "(0, inf)",
        });
    }
    let prior = crate::densities::Gaussian::new(vec![prior_mean], vec![prior_var])?
        .with_label("prior")
        .shared();
    let init = ParamVector::new(vec![prior_mean])?;
    BayesModel::new(
        "normal-known-variance",
        prior,
        vec![Support::Real],
        init,
        move |theta| {
            let mu = theta[0];
            let n = y.len() as f64;
            let ss: f64 = y.iter().map(|yi| (yi - mu) * (yi - mu)).sum();
            -0.5 * n * (sigma2.ln() + LN_2PI) - 0.5 * ss / sigma2
        },
    )
}

/// The linear-regression model as a [`BayesModel`] over
/// `(alpha, beta, sigma2)`, for the IP/MS/quadrivial routes that need the
/// generic sampler.
pub fn regression_bayes_model(
    model: &crate::sampler::RegressionModel,
    label: impl Into<String>,
) -> Result<BayesModel> {
    let prior = ProductDensity::new(vec![
        (
            crate::densities::Gaussian::new(vec![model.prior_mean[0]], vec![model.prior_var[0]])?
                .with_label("alpha-prior")
                .shared(),
            1,
        ),
        (
            crate::densities::Gaussian::new(vec![model.prior_mean[1]], vec![model.prior_var[1]])?
                .with_label("beta-prior")
                .shared(),
            1,
        ),
        (
            crate::densities::InverseGamma::new(model.prior_shape, model.prior_rate)?.shared(),
            1,
        ),
    ])?
    .shared();
    let init = ParamVector::new(vec![
        model.prior_mean[0],
        model.prior_mean[1],
        model.prior_rate / (model.prior_shape + 1.0),
    ])?;
    let m = model.clone();
    BayesModel::new(
        label,
        prior,
        vec![Support::Real, Support::Real, Support::Positive],
        init,
        move |theta| m.log_likelihood(theta[0], theta[1], theta[2]),
    )
}

const LN_2PI: f64 = 1.8378770664093453;
