//! Thermodynamic-integration estimators over ladder output: per-temperature
//! means, the trapezoid log-ratio estimate, functional-KL curves, bisection
//! for the crossing temperature `t*`, Chernoff t-divergences and information,
//! and the derived f-divergence report.
//!
//! The normalized thermodynamic integral (NTI) over [0, 1] is identically
//! zero; its partial integral up to `t` equals minus the Chernoff
//! t-divergence of the endpoint distributions. The functional KL of order t,
//! `KL_t = E_t - log lambda`, is increasing in t and crosses zero at `t*`,
//! where the partial integral is minimized. The Chernoff information is the
//! negation of that minimum.
//!
//! Sign conventions: the partial NTI is nonpositive on [0, t*], so the
//! Chernoff information is reported as `-NTI(t*) >= 0`, and the Tsallis
//! entry uses `[1 - exp(-C_t)]/(1 - t) >= 0`; the mirrored variant
//! `[exp(-C_t) - 1]/(1 - t)` is exposed alongside it for callers who want
//! the opposite convention.

use serde::Serialize;

use std::sync::Arc;

use crate::densities::{ParamVector, TemperedPath, TemperedTarget};
use crate::diagnostics::{batch_means, BatchSpec, EstimateWithError};
use crate::math::{derive_seed, mean, normal_cdf, sample_variance};
use crate::sampler::{rwm_chain, ChainConfig, ChainOutput, LadderInit, LadderOutput};
use crate::schedules::TemperatureSchedule;
use crate::{Error, Result};

const STREAM_REFINE: u64 = 0x7265666e; // "refn"

/// Hard cap on bisection refinement runs; hitting it leaves a warning on the
/// result instead of looping on Monte Carlo noise.
const MAX_EXTRA_RUNS: usize = 64;

/// Per-temperature means and variances of the U-statistic.
#[derive(Debug, Clone, Serialize)]
pub struct EtCurve {
    pub schedule: TemperatureSchedule,
    /// Sample mean of the U-values at each schedule point.
    pub e_hat: Vec<f64>,
    /// Unbiased sample variance of the U-values at each schedule point.
    pub v_hat: Vec<f64>,
    /// Retained samples per point.
    pub r: Vec<usize>,
}

/// The functional-KL curve `KL_t = E_t - log lambda`, constructed by
/// subtraction so the identity holds exactly.
#[derive(Debug, Clone, Serialize)]
pub struct KlTCurve {
    pub schedule: TemperatureSchedule,
    pub kl_t_hat: Vec<f64>,
    pub log_lambda_hat: f64,
}

/// Estimate the U-statistic mean and variance at every schedule point.
pub fn e_hat_curve(ladder: &LadderOutput) -> Result<EtCurve> {
    let mut e_hat = Vec::with_capacity(ladder.chains().len());
    let mut v_hat = Vec::with_capacity(ladder.chains().len());
    let mut r = Vec::with_capacity(ladder.chains().len());
    for chain in ladder.chains() {
        if chain.u_values.len() < 2 {
            return Err(Error::Argument(format!(
                "chain at t={} has {} retained samples; need at least 2",
                chain.t,
                chain.u_values.len()
            )));
        }
        e_hat.push(mean(&chain.u_values));
        v_hat.push(sample_variance(&chain.u_values));
        r.push(chain.u_values.len());
    }
    Ok(EtCurve {
        schedule: ladder.schedule().clone(),
        e_hat,
        v_hat,
        r,
    })
}

/// Trapezoid estimate of `log lambda` over the schedule.
pub fn ti_trapezoid(curve: &EtCurve) -> f64 {
    trapezoid(curve.schedule.points(), &curve.e_hat)
}

fn trapezoid(points: &[f64], values: &[f64]) -> f64 {
    points
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1] - t[0]) * (v[1] + v[0]) * 0.5)
        .sum()
}

/// Pointwise `KL_t = E_t - log lambda`.
pub fn kl_t_curve(curve: &EtCurve, log_lambda_hat: f64) -> KlTCurve {
    KlTCurve {
        schedule: curve.schedule.clone(),
        kl_t_hat: curve.e_hat.iter().map(|e| e - log_lambda_hat).collect(),
        log_lambda_hat,
    }
}

impl KlTCurve {
    /// Cumulative trapezoid of `KL_t` up to each schedule point (the partial
    /// NTI sums). The last entry is the full-schedule NTI residual.
    pub fn nti_partial_sums(&self) -> Vec<f64> {
        let points = self.schedule.points();
        let mut sums = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        sums.push(0.0);
        for i in 0..points.len() - 1 {
            acc += (points[i + 1] - points[i]) * (self.kl_t_hat[i + 1] + self.kl_t_hat[i]) * 0.5;
            sums.push(acc);
        }
        sums
    }

    /// Partial NTI up to an arbitrary `t`, linearly interpolating the curve
    /// inside the containing panel (consistent with the trapezoid order).
    pub fn nti_partial_at(&self, t: f64) -> Result<f64> {
        crate::densities::check_temperature(t)?;
        let points = self.schedule.points();
        let sums = self.nti_partial_sums();
        if let Some(idx) = points.iter().position(|p| *p == t) {
            return Ok(sums[idx]);
        }
        let panel = points
            .windows(2)
            .position(|w| w[0] < t && t < w[1])
            .expect("t in [0,1] lies in some panel");
        let (lo, hi) = (points[panel], points[panel + 1]);
        let frac = (t - lo) / (hi - lo);
        let kl_at_t =
            self.kl_t_hat[panel] + frac * (self.kl_t_hat[panel + 1] - self.kl_t_hat[panel]);
        Ok(sums[panel] + (t - lo) * (self.kl_t_hat[panel] + kl_at_t) * 0.5)
    }
}

/// Samples a single ladder rung at an arbitrary temperature; used by the
/// bisection refinement and by pipelines that must add runs (for example at
/// `t = 0.5` for the Bhattacharyya distance).
pub trait RungSampler: Sync {
    fn sample_rung(&self, t: f64, seed: u64, warm: Option<&ParamVector>) -> Result<ChainOutput>;
}

/// RWM-backed rung sampler over a tempered path.
pub struct PathRungSampler {
    pub path: Arc<dyn TemperedPath>,
    pub cfg: ChainConfig,
    pub fallback_init: ParamVector,
}

impl RungSampler for PathRungSampler {
    fn sample_rung(&self, t: f64, seed: u64, warm: Option<&ParamVector>) -> Result<ChainOutput> {
        let target = TemperedTarget::new(Arc::clone(&self.path), t)?;
        let cfg = ChainConfig {
            seed,
            ..self.cfg.clone()
        };
        let init = warm.unwrap_or(&self.fallback_init);
        rwm_chain(&target, init, &cfg).map_err(|e| e.at_temperature(t))
    }
}

/// Gibbs-backed rung sampler for the regression prior-posterior path.
pub struct GibbsRungSampler {
    pub model: crate::sampler::RegressionModel,
    pub cfg: ChainConfig,
}

impl RungSampler for GibbsRungSampler {
    fn sample_rung(&self, t: f64, seed: u64, _warm: Option<&ParamVector>) -> Result<ChainOutput> {
        let cfg = ChainConfig {
            seed,
            ..self.cfg.clone()
        };
        crate::sampler::gibbs_regression_chain(&self.model, t, &cfg)
    }
}

/// Result of the `t*` search.
#[derive(Debug, Clone)]
pub struct TStarResult {
    /// Midpoint of the final bisection interval.
    pub t_star: f64,
    /// Half-width of the final interval.
    pub half_width: f64,
    /// Probability (normal approximation) that the lower bracket's KL sign
    /// is a Monte Carlo artifact; same for the upper bracket.
    pub sign_risk_lo: f64,
    pub sign_risk_hi: f64,
    /// Conservative combined uncertainty: half-width plus the two
    /// sign-classification risks.
    pub uncertainty: f64,
    /// Number of refinement MCMC runs performed.
    pub extra_runs: usize,
    /// The input ladder augmented with every refinement run.
    pub ladder: LadderOutput,
    /// Diagnostics, e.g. non-monotone sign patterns beyond noise.
    pub warnings: Vec<String>,
}

/// Locate the sign change of `KL_t` and bisect it down to `tol` with new
/// MCMC runs, returning the enriched ladder.
///
/// Fails with the degenerate-path condition when `KL_t` never changes sign
/// (equal endpoint distributions).
pub fn estimate_t_star(
    ladder: LadderOutput,
    sampler: &dyn RungSampler,
    tol: f64,
    base_seed: u64,
) -> Result<TStarResult> {
    if !(tol > 0.0) {
        return Err(Error::Domain {
            what: "tol",
            value: tol,
            constraint: "(0, inf)",
        });
    }
    let mut ladder = ladder;
    let mut warnings = Vec::new();
    let mut extra_runs = 0usize;

    loop {
        let curve = e_hat_curve(&ladder)?;
        let log_lambda = ti_trapezoid(&curve);
        let kl = kl_t_curve(&curve, log_lambda);
        let bracket = locate_sign_change(&kl, &mut warnings)?;
        let points = ladder.schedule().points();
        let (lo, hi) = (points[bracket], points[bracket + 1]);

        if hi - lo <= tol || extra_runs >= MAX_EXTRA_RUNS {
            if extra_runs >= MAX_EXTRA_RUNS && hi - lo > tol {
                warnings.push(format!(
                    "bisection stopped after {MAX_EXTRA_RUNS} refinement runs with interval width {:.3e} > tol {tol:.3e}",
                    hi - lo
                ));
            }
            let (risk_lo, risk_hi) = bracket_sign_risks(&curve, &kl, bracket);
            let half_width = 0.5 * (hi - lo);
            return Ok(TStarResult {
                t_star: 0.5 * (lo + hi),
                half_width,
                sign_risk_lo: risk_lo,
                sign_risk_hi: risk_hi,
                uncertainty: half_width + risk_lo + risk_hi,
                extra_runs,
                ladder,
                warnings,
            });
        }

        let mid = 0.5 * (lo + hi);
        let refined = ladder.schedule().refine_interval(lo, hi, 2)?;
        let warm = ladder
            .chain_at(lo)
            .and_then(|c| c.samples.last())
            .cloned();
        let chain = sampler.sample_rung(
            mid,
            derive_seed(base_seed, STREAM_REFINE, extra_runs as u64),
            warm.as_ref(),
        )?;
        extra_runs += 1;
        let mut chains = ladder.chains().to_vec();
        chains.insert(bracket + 1, chain);
        ladder = LadderOutput::new(refined, chains)?;
    }
}

/// Index `i` such that `kl[i] < 0 < kl[i+1]`.
fn locate_sign_change(kl: &KlTCurve, warnings: &mut Vec<String>) -> Result<usize> {
    let v = &kl.kl_t_hat;
    let candidates: Vec<usize> = (0..v.len() - 1)
        .filter(|&i| v[i] < 0.0 && v[i + 1] > 0.0)
        .collect();
    if candidates.is_empty() {
        return Err(Error::DegeneratePath);
    }
    let monotone_single = candidates.len() == 1
        && v[..=candidates[0]].iter().all(|x| *x < 0.0)
        && v[candidates[0] + 1..].iter().all(|x| *x > 0.0);
    if !monotone_single {
        let msg = format!(
            "KL_t sign pattern is non-monotone beyond noise ({} sign changes); KL_t is increasing in theory — consider longer chains",
            candidates.len()
        );
        if !warnings.iter().any(|w| w == &msg) {
            warnings.push(msg);
        }
    }
    // the theoretical curve crosses once; take the last crossing, matching
    // t^- = max{t : KL_t < 0}
    Ok(*candidates.last().unwrap())
}

fn bracket_sign_risks(curve: &EtCurve, kl: &KlTCurve, bracket: usize) -> (f64, f64) {
    let risk = |i: usize| -> f64 {
        let se = (curve.v_hat[i] / curve.r[i] as f64).sqrt();
        if se == 0.0 {
            0.0
        } else {
            normal_cdf(-kl.kl_t_hat[i].abs() / se)
        }
    };
    (risk(bracket), risk(bracket + 1))
}

/// Chernoff information `C = -NTI(t*)`: the negated trapezoid sum of `KL_t`
/// over schedule points up to `t*`, with batch-means error from re-running
/// the pipeline on each batch (the crossing location stays fixed).
pub fn chernoff_information(
    ladder: &LadderOutput,
    t_star: f64,
    log_lambda_hat: f64,
    spec: &BatchSpec,
) -> Result<EstimateWithError> {
    check_bracketed(ladder, t_star)?;
    // the supplied log-lambda anchors every batch's KL curve, so by
    // linearity the batch mean equals the full-sample partial sum
    batch_means(ladder, spec, |sub| {
        let curve = e_hat_curve(sub)?;
        let kl = kl_t_curve(&curve, log_lambda_hat);
        Ok(-partial_sum_to(&kl, t_star))
    })
}

/// Trapezoid of `KL_t` over panels whose upper edge is at most `t_star`.
fn partial_sum_to(kl: &KlTCurve, t_star: f64) -> f64 {
    let points = kl.schedule.points();
    let mut acc = 0.0;
    for i in 0..points.len() - 1 {
        if points[i + 1] > t_star {
            break;
        }
        acc += (points[i + 1] - points[i]) * (kl.kl_t_hat[i + 1] + kl.kl_t_hat[i]) * 0.5;
    }
    acc
}

fn check_bracketed(ladder: &LadderOutput, t_star: f64) -> Result<()> {
    crate::densities::check_temperature(t_star)?;
    let points = ladder.schedule().points();
    if points.iter().any(|p| *p >= t_star) && points.iter().any(|p| *p <= t_star) {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "t* = {t_star} is not bracketed by the schedule"
        )))
    }
}

/// Chernoff t-divergence `C_t = -NTI(t)` at an arbitrary temperature, with
/// linear interpolation inside the containing panel.
pub fn chernoff_t_divergence(
    ladder: &LadderOutput,
    log_lambda_hat: f64,
    t: f64,
    spec: &BatchSpec,
) -> Result<EstimateWithError> {
    crate::densities::check_temperature(t)?;
    batch_means(ladder, spec, |sub| {
        let curve = e_hat_curve(sub)?;
        let kl = kl_t_curve(&curve, log_lambda_hat);
        Ok(-kl.nti_partial_at(t)?)
    })
}

/// Point estimate plus batch-means error for every divergence in the report.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub kl_1_0: EstimateWithError,
    pub kl_0_1: EstimateWithError,
    pub j: EstimateWithError,
    pub bhattacharyya: EstimateWithError,
    pub hellinger: EstimateWithError,
    pub chernoff_info: EstimateWithError,
    pub t_star: f64,
    pub renyi_at_t_star: EstimateWithError,
    pub tsallis_at_t_star: EstimateWithError,
    /// The mirrored Tsallis convention `[exp(-C) - 1]/(1 - t*)`, nonpositive
    /// for positive Chernoff information.
    pub tsallis_mirrored: EstimateWithError,
    pub log_lambda: EstimateWithError,
}

/// Assemble the divergence report from an enriched ladder.
///
/// Requires runs at `t = 0`, `t = 0.5` and `t = 1`; `t*` must be bracketed
/// by the schedule. Every entry carries a batch-means Monte Carlo error from
/// re-running the estimator pipeline per batch with the crossing location
/// fixed at `t_star`.
pub fn divergence_report(
    ladder: &LadderOutput,
    t_star: f64,
    spec: &BatchSpec,
) -> Result<DivergenceReport> {
    for required in [0.0, 0.5, 1.0] {
        if ladder.chain_at(required).is_none() {
            return Err(Error::Argument(format!(
                "divergence report requires a run at t = {required}"
            )));
        }
    }
    check_bracketed(ladder, t_star)?;

    let n_points = ladder.schedule().len();
    let half_idx = ladder
        .schedule()
        .points()
        .iter()
        .position(|p| *p == 0.5)
        .unwrap();

    // one pass per batch: all divergences from that batch's curve
    let per_batch = batch_means_vector(ladder, spec, |sub| {
        let curve = e_hat_curve(sub)?;
        let log_lambda = ti_trapezoid(&curve);
        let kl = kl_t_curve(&curve, log_lambda);
        let kl_1_0 = kl.kl_t_hat[n_points - 1];
        let kl_0_1 = -kl.kl_t_hat[0];
        let j = kl_1_0 + kl_0_1;
        let bh = -kl.nti_partial_sums()[half_idx];
        let he = (1.0 - (-bh).exp()).max(0.0).sqrt();
        let c = -partial_sum_to(&kl, t_star);
        let renyi = c / (1.0 - t_star);
        let tsallis = (1.0 - (-c).exp()) / (1.0 - t_star);
        let tsallis_mirrored = ((-c).exp() - 1.0) / (1.0 - t_star);
        Ok(vec![
            kl_1_0,
            kl_0_1,
            j,
            bh,
            he,
            c,
            renyi,
            tsallis,
            tsallis_mirrored,
            log_lambda,
        ])
    })?;

    let mut it = per_batch.into_iter();
    let mut next = || it.next().expect("ten entries");
    Ok(DivergenceReport {
        kl_1_0: next(),
        kl_0_1: next(),
        j: next(),
        bhattacharyya: next(),
        hellinger: next(),
        chernoff_info: next(),
        t_star,
        renyi_at_t_star: next(),
        tsallis_at_t_star: next(),
        tsallis_mirrored: next(),
        log_lambda: next(),
    })
}

/// Batch-means over a vector-valued estimator: batch `b` of every chain
/// feeds one evaluation; components are aggregated independently.
fn batch_means_vector(
    ladder: &LadderOutput,
    spec: &BatchSpec,
    estimator: impl Fn(&LadderOutput) -> Result<Vec<f64>>,
) -> Result<Vec<EstimateWithError>> {
    let subs = crate::diagnostics::batch_sub_ladders(ladder, spec)?;
    let mut per_component: Vec<Vec<f64>> = Vec::new();
    for sub in &subs {
        let values = estimator(sub)?;
        if per_component.is_empty() {
            per_component = vec![Vec::with_capacity(subs.len()); values.len()];
        }
        for (comp, v) in per_component.iter_mut().zip(values) {
            comp.push(v);
        }
    }
    Ok(per_component
        .into_iter()
        .map(EstimateWithError::from_batches)
        .collect())
}

/// Ensure the ladder has a run at an exact temperature, sampling one if
/// needed (e.g. `t = 0.5` for the Bhattacharyya distance on non-uniform
/// schedules).
pub fn ensure_rung(
    ladder: LadderOutput,
    t: f64,
    sampler: &dyn RungSampler,
    base_seed: u64,
) -> Result<LadderOutput> {
    crate::densities::check_temperature(t)?;
    if ladder.chain_at(t).is_some() {
        return Ok(ladder);
    }
    let points = ladder.schedule().points();
    let panel = points
        .windows(2)
        .position(|w| w[0] < t && t < w[1])
        .ok_or_else(|| Error::Argument(format!("t = {t} lies outside the schedule")))?;
    let warm = ladder
        .chain_at(points[panel])
        .and_then(|c| c.samples.last())
        .cloned();
    let chain = sampler.sample_rung(
        t,
        derive_seed(base_seed, STREAM_REFINE, 0xE0 + panel as u64),
        warm.as_ref(),
    )?;
    let mut new_points = points.to_vec();
    new_points.insert(panel + 1, t);
    let schedule = TemperatureSchedule::explicit(new_points)?;
    let mut chains = ladder.chains().to_vec();
    chains.insert(panel + 1, chain);
    LadderOutput::new(schedule, chains)
}

/// Convenience wrapper: run the initial ladder over a path, then refine for
/// `t*`.
pub fn estimate_t_star_path(
    path: &Arc<dyn TemperedPath>,
    schedule: &TemperatureSchedule,
    cfg: &ChainConfig,
    init: &LadderInit,
    tol: f64,
) -> Result<TStarResult> {
    let ladder = crate::sampler::run_path_ladder(path, schedule, cfg, init)?;
    let fallback = match init {
        LadderInit::WarmStart(p) | LadderInit::Fixed(p) => p.clone(),
    };
    let sampler = PathRungSampler {
        path: Arc::clone(path),
        cfg: cfg.clone(),
        fallback_init: fallback,
    };
    estimate_t_star(ladder, &sampler, tol, cfg.seed)
}
