//! Stepping-stone estimation of `log lambda` from ladder output.
//!
//! Each panel `(t_i, t_{i+1})` contributes an importance-sampling estimate
//! of `log(z_{t_{i+1}} / z_{t_i})` computed from the chain at `t_i`: the
//! log-mean-exp of `delta * U` over its samples, with the maximum subtracted
//! before exponentiation. The per-panel exponents can span hundreds of log
//! units on prior-posterior paths, so the stabilization is mandatory, not an
//! optimization.
//!
//! For compound paths the U-statistic depends on the temperature and the
//! panel weight uses `U(theta, T_i)` at the panel midpoint
//! `T_i = (t_i + t_{i+1}) / 2`, which reproduces the exact log-ratio
//! `log q_{t_{i+1}} - log q_{t_i}` of the quadratic exponents.
//!
//! The chain at `t = 1` never contributes; a ladder whose final chain is
//! empty is accepted.

use serde::Serialize;

use crate::densities::TemperedPath;
use crate::math::{logmeanexp, sample_variance};
use crate::sampler::{ChainOutput, LadderOutput};
use crate::schedules::TemperatureSchedule;
use crate::{Error, Result};

/// One panel's contribution.
#[derive(Debug, Clone, Serialize)]
pub struct StepEstimate {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Estimate of `log(z_hi / z_lo)`.
    pub log_ratio: f64,
    /// Effective-sample-size proxy `r / (1 + Var(normalized weights))`;
    /// a collapsed value flags a panel where the importance approximation
    /// degenerates. Diagnostic only.
    pub ess: f64,
}

/// Stepping-stone estimate: the per-panel log-ratios and their exact sum.
#[derive(Debug, Clone, Serialize)]
pub struct SteppingStoneResult {
    pub log_lambda_hat: f64,
    pub steps: Vec<StepEstimate>,
}

impl SteppingStoneResult {
    fn from_steps(steps: Vec<StepEstimate>) -> Self {
        Self {
            log_lambda_hat: steps.iter().map(|s| s.log_ratio).sum(),
            steps,
        }
    }
}

/// Log-mean-exp of `delta * u` over a chain's recorded U-values: the
/// stepping-stone ratio for one panel of a geometric path.
pub fn ss_step_log_ratio(chain: &ChainOutput, delta: f64) -> Result<f64> {
    if chain.u_values.is_empty() {
        return Err(Error::Argument(format!(
            "chain at t={} has no retained samples",
            chain.t
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain {
            what: "delta",
            value: delta,
            constraint: "(0, inf)",
        });
    }
    let weights: Vec<f64> = chain.u_values.iter().map(|u| delta * u).collect();
    Ok(logmeanexp(&weights))
}

/// Per-panel log-weights `delta * U` for every sample of each contributing
/// chain. Temperature-free paths reuse the recorded U-values; compound paths
/// re-evaluate at the panel midpoint (requires the chains to carry samples).
pub fn panel_log_weights(
    ladder: &LadderOutput,
    path: Option<&dyn TemperedPath>,
) -> Result<Vec<Vec<f64>>> {
    let points = ladder.schedule().points();
    let needs_midpoint = path.map(|p| p.u_depends_on_t()).unwrap_or(false);
    let mut panels = Vec::with_capacity(points.len() - 1);
    for i in 0..points.len() - 1 {
        let chain = &ladder.chains()[i];
        let delta = points[i + 1] - points[i];
        let weights = if needs_midpoint {
            let path = path.unwrap();
            if chain.samples.is_empty() {
                return Err(Error::Argument(format!(
                    "chain at t={} carries no samples for midpoint re-evaluation",
                    chain.t
                )));
            }
            let t_mid = 0.5 * (points[i] + points[i + 1]);
            let mut w = Vec::with_capacity(chain.samples.len());
            for theta in &chain.samples {
                let u = path
                    .u_value(theta, t_mid)
                    .map_err(|e| e.at_temperature(chain.t))?;
                w.push(delta * u);
            }
            w
        } else {
            if chain.u_values.is_empty() {
                return Err(Error::Argument(format!(
                    "chain at t={} has no retained samples",
                    chain.t
                )));
            }
            chain.u_values.iter().map(|u| delta * u).collect()
        };
        panels.push(weights);
    }
    Ok(panels)
}

/// Assemble a stepping-stone result from per-panel log-weights.
pub fn stepping_stone_from_weights(
    schedule: &TemperatureSchedule,
    weights: &[Vec<f64>],
) -> Result<SteppingStoneResult> {
    let points = schedule.points();
    if weights.len() != points.len() - 1 {
        return Err(Error::Argument(format!(
            "{} weight panels for {} schedule panels",
            weights.len(),
            points.len() - 1
        )));
    }
    let steps = weights
        .iter()
        .enumerate()
        .map(|(i, w)| step_from_log_weights(points[i], points[i + 1], w))
        .collect();
    Ok(SteppingStoneResult::from_steps(steps))
}

fn step_from_log_weights(t_lo: f64, t_hi: f64, log_weights: &[f64]) -> StepEstimate {
    let log_ratio = logmeanexp(log_weights);
    // normalized weights have mean one by construction
    let normalized: Vec<f64> = log_weights.iter().map(|w| (w - log_ratio).exp()).collect();
    let r = normalized.len() as f64;
    let ess = r / (1.0 + sample_variance(&normalized));
    StepEstimate {
        t_lo,
        t_hi,
        log_ratio,
        ess,
    }
}

/// Stepping-stone estimate over a ladder sampled from a geometric path,
/// using the recorded U-values (which are temperature-free there).
pub fn stepping_stone(ladder: &LadderOutput) -> Result<SteppingStoneResult> {
    let weights = panel_log_weights(ladder, None)?;
    stepping_stone_from_weights(ladder.schedule(), &weights)
}

/// Stepping-stone estimate for an arbitrary tempered path; compound paths
/// re-evaluate the U-statistic at each panel midpoint.
pub fn stepping_stone_with_path(
    ladder: &LadderOutput,
    path: &dyn TemperedPath,
) -> Result<SteppingStoneResult> {
    let weights = panel_log_weights(ladder, Some(path))?;
    stepping_stone_from_weights(ladder.schedule(), &weights)
}

/// Smallest per-panel ESS fraction, for quick degeneracy checks.
pub fn min_ess_fraction(result: &SteppingStoneResult, retained: usize) -> f64 {
    result
        .steps
        .iter()
        .map(|s| s.ess / retained as f64)
        .fold(f64::INFINITY, f64::min)
}
