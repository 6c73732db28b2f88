//! Temperature schedules: ordered discretisations of [0, 1] with both
//! endpoints included.
//!
//! A schedule concentrating points near `t = 0` reduces discretisation error
//! when the integrand is steep at the prior end of the path, which is the
//! usual situation for prior-posterior paths under diffuse priors.

use serde::Serialize;

use crate::{Error, Result};

/// How a schedule was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Uniform,
    PoweredFraction,
    BetaQuantile,
    Refined,
    Explicit,
}

/// A strictly increasing sequence `0 = t_0 < ... < t_n = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureSchedule {
    points: Vec<f64>,
    kind: ScheduleKind,
}

impl TemperatureSchedule {
    /// `n + 1` evenly spaced points `t_i = i / n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain {
                what: "n",
                value: 0.0,
                constraint: "n >= 1",
            });
        }
        let points = (0..=n).map(|i| i as f64 / n as f64).collect();
        Ok(Self {
            points: pin_endpoints(points),
            kind: ScheduleKind::Uniform,
        })
    }

    /// Powered-fraction schedule `t_i = (i/n)^C` with `C >= 1`; larger `C`
    /// places more points towards the zero endpoint.
    pub fn powered_fraction(n: usize, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain {
                what: "n",
                value: 0.0,
                constraint: "n >= 1",
            });
        }
        if !(c >= 1.0) || !c.is_finite() {
            return Err(Error::Domain {
                what: "C",
                value: c,
                constraint: "C >= 1",
            });
        }
        let points = (0..=n).map(|i| (i as f64 / n as f64).powf(c)).collect();
        Ok(Self {
            points: pin_endpoints(points),
            kind: ScheduleKind::PoweredFraction,
        })
    }

    /// Evenly spaced quantiles of a Beta(a, 1) distribution, `0 < a <= 1`;
    /// the quantile function is `u^(1/a)`, so this equals
    /// `powered_fraction(n, 1/a)` pointwise.
    pub fn beta_quantile(n: usize, a: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain {
                what: "n",
                value: 0.0,
                constraint: "n >= 1",
            });
        }
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Domain {
                what: "a",
                value: a,
                constraint: "(0, 1]",
            });
        }
        let c = 1.0 / a;
        let points = (0..=n).map(|i| (i as f64 / n as f64).powf(c)).collect();
        Ok(Self {
            points: pin_endpoints(points),
            kind: ScheduleKind::BetaQuantile,
        })
    }

    /// Validate an explicit list of points.
    pub fn explicit(points: Vec<f64>) -> Result<Self> {
        let s = Self {
            points,
            kind: ScheduleKind::Explicit,
        };
        s.validate()?;
        Ok(s)
    }

    /// Insert `k - 1` uniformly spaced interior points between two adjacent
    /// schedule points; all original points are retained.
    pub fn refine_interval(&self, lo: f64, hi: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain {
                what: "k",
                value: 0.0,
                constraint: "k >= 1",
            });
        }
        let idx = self
            .points
            .windows(2)
            .position(|w| w[0] == lo && w[1] == hi)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "({lo}, {hi}) is not an adjacent pair of schedule points"
                ))
            })?;
        let mut points = Vec::with_capacity(self.points.len() + k - 1);
        points.extend_from_slice(&self.points[..=idx]);
        for j in 1..k {
            points.push(lo + (hi - lo) * j as f64 / k as f64);
        }
        points.extend_from_slice(&self.points[idx + 1..]);
        let refined = Self {
            points,
            kind: ScheduleKind::Refined,
        };
        refined.validate()?;
        Ok(refined)
    }

    fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Argument(
                "schedule needs at least the two endpoints".into(),
            ));
        }
        if self.points[0] != 0.0 || *self.points.last().unwrap() != 1.0 {
            return Err(Error::Argument(
                "schedule must start at exactly 0 and end at exactly 1".into(),
            ));
        }
        if self
            .points
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::Argument(
                "schedule points must be strictly increasing and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Number of panels (one less than the number of points).
    pub fn n_panels(&self) -> usize {
        self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn pin_endpoints(mut points: Vec<f64>) -> Vec<f64> {
    // constructors compute endpoints as 0^c and (n/n)^c; pin them so the
    // invariant holds bit-exactly
    points[0] = 0.0;
    *points.last_mut().unwrap() = 1.0;
    points
}
