//! Batch-means Monte Carlo errors, secant/J-divergence geometry of the
//! expectation curve, and the discretisation-error indicator.
//!
//! The batch-means protocol splits each chain's retained samples into
//! consecutive batches and re-evaluates the full estimator pipeline per
//! batch index, pairing batch `b` across all temperatures so thermodynamic
//! and stepping-stone comparisons stay paired. The final estimate is the
//! mean over batches and the reported Monte Carlo error (MCE) is the
//! standard deviation of the batch values.

use serde::Serialize;

use crate::math::{mean, sample_std};
use crate::sampler::{ChainOutput, LadderOutput};
use crate::ti::EtCurve;
use crate::{Error, Result};

/// Batch layout: `n_batches * batch_size` samples are used per chain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BatchSpec {
    pub n_batches: usize,
    pub batch_size: usize,
}

/// Default number of batches.
pub const DEFAULT_N_BATCHES: usize = 30;

impl BatchSpec {
    pub fn new(n_batches: usize, batch_size: usize) -> Result<Self> {
        if n_batches < 2 || batch_size < 2 {
            return Err(Error::Argument(format!(
                "need n_batches >= 2 and batch_size >= 2, got {n_batches} and {batch_size}"
            )));
        }
        Ok(Self {
            n_batches,
            batch_size,
        })
    }

    /// Derive the batch size from the shortest chain of a ladder.
    pub fn derive(n_batches: usize, ladder: &LadderOutput) -> Result<Self> {
        let shortest = ladder
            .chains()
            .iter()
            .map(|c| c.u_values.len())
            .min()
            .unwrap_or(0);
        let batch_size = shortest / n_batches;
        if batch_size < 2 {
            return Err(Error::InsufficientSamples {
                required: 2 * n_batches,
                available: shortest,
            });
        }
        Self::new(n_batches, batch_size)
    }
}

/// A point estimate with its batch-means Monte Carlo error.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateWithError {
    pub value: f64,
    /// Standard deviation of the batch values.
    pub mce: f64,
    pub batch_values: Vec<f64>,
    pub n_batches: usize,
}

impl EstimateWithError {
    pub fn from_batches(batch_values: Vec<f64>) -> Self {
        Self {
            value: mean(&batch_values),
            mce: sample_std(&batch_values),
            n_batches: batch_values.len(),
            batch_values,
        }
    }
}

/// Build the per-batch sub-ladders: sub-ladder `b` holds batch `b` of every
/// chain's retained samples.
pub(crate) fn batch_sub_ladders(
    ladder: &LadderOutput,
    spec: &BatchSpec,
) -> Result<Vec<LadderOutput>> {
    let needed = spec.n_batches * spec.batch_size;
    for chain in ladder.chains() {
        if chain.u_values.len() < needed {
            return Err(Error::InsufficientSamples {
                required: needed,
                available: chain.u_values.len(),
            });
        }
    }
    (0..spec.n_batches)
        .map(|b| {
            let lo = b * spec.batch_size;
            let hi = lo + spec.batch_size;
            // estimator pipelines work on U-values; dropping the samples
            // keeps the per-batch copies cheap
            let chains = ladder
                .chains()
                .iter()
                .map(|c| ChainOutput {
                    t: c.t,
                    samples: Vec::new(),
                    u_values: c.u_values[lo..hi].to_vec(),
                    acceptance_rate: c.acceptance_rate,
                    seed_used: c.seed_used,
                })
                .collect();
            LadderOutput::new(ladder.schedule().clone(), chains)
        })
        .collect()
}

/// Evaluate an estimator pipeline per batch and aggregate mean and MCE.
pub fn batch_means(
    ladder: &LadderOutput,
    spec: &BatchSpec,
    estimator: impl Fn(&LadderOutput) -> Result<f64>,
) -> Result<EstimateWithError> {
    let subs = batch_sub_ladders(ladder, spec)?;
    let mut values = Vec::with_capacity(subs.len());
    for sub in &subs {
        values.push(estimator(sub)?);
    }
    Ok(EstimateWithError::from_batches(values))
}

/// Per-panel secant geometry of the expectation curve.
#[derive(Debug, Clone, Serialize)]
pub struct PanelGeometry {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Secant slope `(E_hi - E_lo) / (t_hi - t_lo)`.
    pub slope: f64,
    /// J-divergence proxy between the panel's sampling distributions:
    /// `slope * (t_hi - t_lo)^2`.
    pub j_proxy: f64,
    pub v_hat_lo: f64,
    pub v_hat_hi: f64,
}

/// Secant slopes per panel plus the local variances for comparison; the
/// slope of the curve's tangent equals the local variance, so a secant far
/// above the neighbouring `v_hat` flags a panel that under-resolves the
/// curve.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub panels: Vec<PanelGeometry>,
    pub v_hat: Vec<f64>,
}

impl GeometryReport {
    /// Panel with the steepest secant.
    pub fn max_slope_panel(&self) -> Option<&PanelGeometry> {
        self.panels
            .iter()
            .max_by(|a, b| a.slope.abs().total_cmp(&b.slope.abs()))
    }
}

/// Compute per-panel secant slopes and J-divergence proxies.
pub fn secant_slopes(curve: &EtCurve) -> GeometryReport {
    let points = curve.schedule.points();
    let panels = points
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let delta = w[1] - w[0];
            let slope = (curve.e_hat[i + 1] - curve.e_hat[i]) / delta;
            PanelGeometry {
                t_lo: w[0],
                t_hi: w[1],
                slope,
                j_proxy: slope * delta * delta,
                v_hat_lo: curve.v_hat[i],
                v_hat_hi: curve.v_hat[i + 1],
            }
        })
        .collect();
    GeometryReport {
        panels,
        v_hat: curve.v_hat.clone(),
    }
}

/// Trapezoid of `KL_t = E_t - log_lambda_hat` over the full schedule: the
/// discretisation-plus-Monte-Carlo error indicator. With a reference
/// `log_lambda_hat` (e.g. the stepping-stone estimate) a residual beyond
/// noise flags a schedule that under-resolves the curve; with the
/// self-consistent thermodynamic estimate it is zero by construction.
pub fn nti_residual(curve: &EtCurve, log_lambda_hat: f64) -> f64 {
    crate::ti::ti_trapezoid(curve) - log_lambda_hat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::ParamVector;
    use crate::schedules::TemperatureSchedule;
    use crate::ti::{e_hat_curve, kl_t_curve, ti_trapezoid};
    use approx::assert_relative_eq;

    fn ladder_with(u_fn: impl Fn(f64, usize) -> f64, points: Vec<f64>, r: usize) -> LadderOutput {
        let schedule = TemperatureSchedule::explicit(points).unwrap();
        let chains = schedule
            .points()
            .iter()
            .map(|&t| ChainOutput {
                t,
                samples: (0..r).map(|k| ParamVector::new(vec![k as f64]).unwrap()).collect(),
                u_values: (0..r).map(|k| u_fn(t, k)).collect(),
                acceptance_rate: 1.0,
                seed_used: 0,
            })
            .collect();
        LadderOutput::new(schedule, chains).unwrap()
    }

    #[test]
    fn batch_means_of_constant_estimator_has_zero_mce() {
        let ladder = ladder_with(|t, _| t, vec![0.0, 0.5, 1.0], 20);
        let spec = BatchSpec::new(5, 4).unwrap();
        let est = batch_means(&ladder, &spec, |sub| {
            Ok(ti_trapezoid(&e_hat_curve(sub).unwrap()))
        })
        .unwrap();
        assert_eq!(est.mce, 0.0);
        assert_relative_eq!(est.value, 0.5, epsilon = 1e-14);
        assert_eq!(est.n_batches, 5);
    }

    #[test]
    fn batch_means_detects_insufficient_samples() {
        let ladder = ladder_with(|_, _| 0.0, vec![0.0, 1.0], 10);
        let spec = BatchSpec::new(6, 2).unwrap();
        match batch_means(&ladder, &spec, |_| Ok(0.0)) {
            Err(Error::InsufficientSamples {
                required: 12,
                available: 10,
            }) => {}
            other => panic!("expected insufficient-samples error, got {other:?}"),
        }
    }

    #[test]
    fn batch_pairing_is_by_index() {
        // batch b of the sub-ladder must be slice [b*size, (b+1)*size) of
        // every chain
        let ladder = ladder_with(|t, k| t * 100.0 + k as f64, vec![0.0, 1.0], 6);
        let spec = BatchSpec::new(3, 2).unwrap();
        let subs = batch_sub_ladders(&ladder, &spec).unwrap();
        assert_eq!(subs.len(), 3);
        assert_eq!(subs[1].chains()[0].u_values, vec![2.0, 3.0]);
        assert_eq!(subs[1].chains()[1].u_values, vec![102.0, 103.0]);
    }

    #[test]
    fn batch_spec_validation_and_derivation() {
        assert!(BatchSpec::new(1, 10).is_err());
        assert!(BatchSpec::new(10, 1).is_err());
        let ladder = ladder_with(|_, _| 0.0, vec![0.0, 1.0], 61);
        let spec = BatchSpec::derive(30, &ladder).unwrap();
        assert_eq!(spec.batch_size, 2);
        let short = ladder_with(|_, _| 0.0, vec![0.0, 1.0], 30);
        assert!(BatchSpec::derive(30, &short).is_err());
    }

    #[test]
    fn secant_slopes_constant_curve_is_flat() {
        let ladder = ladder_with(|_, _| 3.0, vec![0.0, 0.25, 1.0], 4);
        let curve = e_hat_curve(&ladder).unwrap();
        let geom = secant_slopes(&curve);
        for p in &geom.panels {
            assert_eq!(p.slope, 0.0);
            assert_eq!(p.j_proxy, 0.0);
        }
    }

    #[test]
    fn secant_slopes_linear_curve_matches_unit_slope() {
        let ladder = ladder_with(|t, _| t, vec![0.0, 0.3, 0.7, 1.0], 4);
        let curve = e_hat_curve(&ladder).unwrap();
        let geom = secant_slopes(&curve);
        for p in &geom.panels {
            assert_relative_eq!(p.slope, 1.0, epsilon = 1e-12);
            let d = p.t_hi - p.t_lo;
            assert_relative_eq!(p.j_proxy, d * d, epsilon = 1e-12);
        }
        assert_relative_eq!(geom.max_slope_panel().unwrap().slope, 1.0);
    }

    #[test]
    fn single_panel_j_proxy_estimates_endpoint_j_divergence() {
        // on the single panel (0,1) the secant slope is J(p1, p0) itself:
        // slope = E_1 - E_0 = KL(p1||p0) + KL(p0||p1)
        let e0 = -0.5;
        let e1 = 0.5;
        let ladder = ladder_with(|t, _| if t == 0.0 { e0 } else { e1 }, vec![0.0, 1.0], 4);
        let curve = e_hat_curve(&ladder).unwrap();
        let geom = secant_slopes(&curve);
        assert_relative_eq!(geom.panels[0].j_proxy, e1 - e0, epsilon = 1e-14);
    }

    #[test]
    fn nti_residual_telescopes_and_flags() {
        let ladder = ladder_with(|t, _| 2.0 * t, vec![0.0, 0.25, 0.5, 1.0], 4);
        let curve = e_hat_curve(&ladder).unwrap();
        let ti = ti_trapezoid(&curve);
        // self-consistent reference: residual identically zero
        assert_eq!(nti_residual(&curve, ti), 0.0);
        // external reference: residual is the difference
        assert_relative_eq!(nti_residual(&curve, ti - 0.3), 0.3, epsilon = 1e-14);
        // telescoping: the full residual equals the sum of panel-wise
        // contributions of the KL curve
        let kl = kl_t_curve(&curve, ti - 0.3);
        let partials = kl.nti_partial_sums();
        assert_relative_eq!(
            *partials.last().unwrap(),
            nti_residual(&curve, ti - 0.3),
            epsilon = 1e-14
        );
    }
}
