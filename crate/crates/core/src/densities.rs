//! Parameter vectors, unnormalized log-densities, geometric and quadrivial
//! paths, tempered targets, and the U-statistic each path induces.
//!
//! All density evaluation is in log space; linear-space values underflow for
//! realistic data sizes. A log-density returns a finite value inside its
//! support and `-inf` outside; `+inf` and `NaN` are contract violations.
//!
//! At the exact endpoints `t = 0` and `t = 1` the zero-weighted term of a
//! path is dropped before evaluation, so `0 * (-inf)` never arises and the
//! path agrees with its limit even when the endpoint densities have
//! different supports.

use std::sync::Arc;

use serde::Serialize;

use crate::math::{cholesky, cholesky_logdet};
use crate::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// A point in parameter space. Entries are finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument(
                "parameter vector must have positive dimension".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "parameter vector entries must be finite, got {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// An unnormalized log-density over a [`ParamVector`].
///
/// Implementations must be deterministic (same input, same output bits) and
/// safe to call concurrently; evaluation never returns `+inf` or `NaN` and
/// returns `-inf` exactly outside the support.
pub trait LogDensity: Send + Sync {
    fn log_density(&self, theta: &ParamVector) -> f64;

    fn label(&self) -> &str;

    /// Dimension this density expects, when fixed.
    fn dim(&self) -> Option<usize> {
        None
    }

    fn supports(&self, theta: &ParamVector) -> bool {
        self.log_density(theta) > f64::NEG_INFINITY
    }
}

/// Shared handle to a log-density; paths and targets are immutable after
/// construction and freely shareable across workers.
pub type DensityRef = Arc<dyn LogDensity>;

/// Wrap a closure as a log-density.
pub fn density_from_fn<F>(label: impl Into<String>, dim: usize, f: F) -> DensityRef
where
    F: Fn(&ParamVector) -> f64 + Send + Sync + 'static,
{
    Arc::new(FnDensity {
        f,
        dim,
        label: label.into(),
    })
}

struct FnDensity<F> {
    f: F,
    dim: usize,
    label: String,
}

impl<F> LogDensity for FnDensity<F>
where
    F: Fn(&ParamVector) -> f64 + Send + Sync,
{
    fn log_density(&self, theta: &ParamVector) -> f64 {
        (self.f)(theta)
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }
}

/// Multiply a density by a positive constant (add `log_c` in log space).
pub fn scaled(inner: DensityRef, log_c: f64) -> DensityRef {
    let label = format!("{}*exp({log_c:.4})", inner.label());
    Arc::new(ScaledDensity {
        inner,
        log_c,
        label,
    })
}

struct ScaledDensity {
    inner: DensityRef,
    log_c: f64,
    label: String,
}

impl LogDensity for ScaledDensity {
    fn log_density(&self, theta: &ParamVector) -> f64 {
        let v = self.inner.log_density(theta);
        if v == f64::NEG_INFINITY {
            v
        } else {
            v + self.log_c
        }
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn dim(&self) -> Option<usize> {
        self.inner.dim()
    }
}

enum GaussianCov {
    Diagonal(Vec<f64>),
    Full { chol: Vec<Vec<f64>> },
}

/// Multivariate normal density with diagonal or full covariance.
///
/// `new`/`full` include the normalizer (a proper density); `kernel` omits it.
pub struct Gaussian {
    mean: Vec<f64>,
    cov: GaussianCov,
    log_norm: f64,
    label: String,
}

impl Gaussian {
    /// Proper normal density with diagonal covariance.
    pub fn new(mean: Vec<f64>, var_diag: Vec<f64>) -> Result<Self> {
        Self::diag_impl(mean, var_diag, true)
    }

    /// Unnormalized normal kernel with diagonal covariance.
    pub fn kernel(mean: Vec<f64>, var_diag: Vec<f64>) -> Result<Self> {
        Self::diag_impl(mean, var_diag, false)
    }

    fn diag_impl(mean: Vec<f64>, var_diag: Vec<f64>, normalized: bool) -> Result<Self> {
        if mean.len() != var_diag.len() || mean.is_empty() {
            return Err(Error::Argument(
                "gaussian mean and variance vectors must have equal positive length".into(),
            ));
        }
        if let Some(&v) = var_diag.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain {
                what: "variance",
                value: v,
                constraint: "(0, inf)",
            });
        }
        let d = mean.len() as f64;
        let logdet: f64 = var_diag.iter().map(|v| v.ln()).sum();
        let log_norm = if normalized {
            -0.5 * (d * LN_2PI + logdet)
        } else {
            0.0
        };
        Ok(Self {
            mean,
            cov: GaussianCov::Diagonal(var_diag),
            log_norm,
            label: "gaussian".into(),
        })
    }

    /// Proper normal density with full covariance (must be symmetric
    /// positive definite).
    pub fn full(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || cov.len() != d || cov.iter().any(|row| row.len() != d) {
            return Err(Error::Argument(
                "covariance matrix shape must match mean dimension".into(),
            ));
        }
        let chol = cholesky(&cov).ok_or(Error::Argument(
            "covariance matrix is not positive definite".into(),
        ))?;
        let log_norm = -0.5 * (d as f64 * LN_2PI + cholesky_logdet(&chol));
        Ok(Self {
            mean,
            cov: GaussianCov::Full { chol },
            log_norm,
            label: "gaussian".into(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn shared(self) -> DensityRef {
        Arc::new(self)
    }
}

impl LogDensity for Gaussian {
    fn log_density(&self, theta: &ParamVector) -> f64 {
        let x = theta.values();
        debug_assert_eq!(x.len(), self.mean.len());
        let quad = match &self.cov {
            GaussianCov::Diagonal(var) => x
                .iter()
                .zip(&self.mean)
                .zip(var)
                .map(|((xi, mi), vi)| (xi - mi) * (xi - mi) / vi)
                .sum::<f64>(),
            GaussianCov::Full { chol, .. } => {
                // forward-substitute L z = (x - mu); quad = |z|^2
                let n = chol.len();
                let mut z = vec![0.0; n];
                let mut quad = 0.0;
                for i in 0..n {
                    let mut s = x[i] - self.mean[i];
                    for k in 0..i {
                        s -= chol[i][k] * z[k];
                    }
                    z[i] = s / chol[i][i];
                    quad += z[i] * z[i];
                }
                quad
            }
        };
        self.log_norm - 0.5 * quad
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> Option<usize> {
        Some(self.mean.len())
    }
}

/// Proper inverse-gamma density over a single positive coordinate,
/// parameterized by shape and rate.
pub struct InverseGamma {
    shape: f64,
    rate: f64,
    log_norm: f64,
    label: String,
}

impl InverseGamma {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::Domain {
                what: "shape",
                value: shape,
                constraint: "(0, inf)",
            });
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Domain {
                what: "rate",
                value: rate,
                constraint: "(0, inf)",
            });
        }
        let log_norm = shape * rate.ln() - statrs::function::gamma::ln_gamma(shape);
        Ok(Self {
            shape,
            rate,
            log_norm,
            label: "inverse-gamma".into(),
        })
    }

    pub fn shared(self) -> DensityRef {
        Arc::new(self)
    }
}

impl LogDensity for InverseGamma {
    fn log_density(&self, theta: &ParamVector) -> f64 {
        let x = theta[0];
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.log_norm - (self.shape + 1.0) * x.ln() - self.rate / x
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> Option<usize> {
        Some(1)
    }
}

/// Product of densities over consecutive coordinate blocks.
///
/// Each factor consumes the stated number of coordinates; the product density
/// lives on the concatenation. Proper factors make a proper product.
pub struct ProductDensity {
    parts: Vec<(DensityRef, usize)>,
    total_dim: usize,
    label: String,
}

impl ProductDensity {
    pub fn new(parts: Vec<(DensityRef, usize)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Argument("product density needs at least one factor".into()));
        }
        for (part, len) in &parts {
            if *len == 0 {
                return Err(Error::Argument("product density block must be non-empty".into()));
            }
            if let Some(d) = part.dim() {
                if d != *len {
                    return Err(Error::Argument(format!(
                        "factor '{}' expects dimension {d}, block has {len}",
                        part.label()
                    )));
                }
            }
        }
        let total_dim = parts.iter().map(|(_, len)| len).sum();
        let label = parts
            .iter()
            .map(|(p, _)| p.label().to_string())
            .collect::<Vec<_>>()
            .join("*");
        Ok(Self {
            parts,
            total_dim,
            label,
        })
    }

    pub fn shared(self) -> DensityRef {
        Arc::new(self)
    }
}

impl LogDensity for ProductDensity {
    fn log_density(&self, theta: &ParamVector) -> f64 {
        debug_assert_eq!(theta.dim(), self.total_dim);
        let mut offset = 0;
        let mut total = 0.0;
        for (part, len) in &self.parts {
            let block = ParamVector {
                values: theta.values()[offset..offset + len].to_vec(),
            };
            let v = part.log_density(&block);
            if v == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            total += v;
            offset += len;
        }
        total
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> Option<usize> {
        Some(self.total_dim)
    }
}

/// Support of one working coordinate of a sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Support {
    Real,
    /// Strictly positive coordinate, handled on log scale by samplers.
    Positive,
}

/// Change of variables mapping positive coordinates to log scale.
///
/// The wrapped density is defined over the natural parameters; this view is a
/// density over the working vector `x` with `theta_i = exp(x_i)` on positive
/// coordinates and the log-scale Jacobian included. Normalizing constants are
/// preserved, so a geometric path between two transformed densities has the
/// same `z`-ratio and the same U-statistic as the natural-scale path.
pub struct LogScaleView {
    inner: DensityRef,
    layout: Vec<Support>,
    label: String,
}

impl LogScaleView {
    pub fn new(inner: DensityRef, layout: Vec<Support>) -> Result<Self> {
        if let Some(d) = inner.dim() {
            if d != layout.len() {
                return Err(Error::Argument(format!(
                    "layout length {} does not match density dimension {d}",
                    layout.len()
                )));
            }
        }
        let label = format!("log-scale({})", inner.label());
        Ok(Self {
            inner,
            layout,
            label,
        })
    }

    pub fn shared(self) -> DensityRef {
        Arc::new(self)
    }

    /// Map a working-space point to natural parameters.
    pub fn to_natural(layout: &[Support], x: &ParamVector) -> Option<ParamVector> {
        let mut out = Vec::with_capacity(x.dim());
        for (xi, s) in x.values().iter().zip(layout) {
            let v = match s {
                Support::Real => *xi,
                Support::Positive => xi.exp(),
            };
            if !v.is_finite() {
                return None;
            }
            out.push(v);
        }
        Some(ParamVector { values: out })
    }

    /// Map natural parameters to the working space.
    pub fn from_natural(layout: &[Support], theta: &ParamVector) -> Result<ParamVector> {
        let mut out = Vec::with_capacity(theta.dim());
        for (v, s) in theta.values().iter().zip(layout) {
            match s {
                Support::Real => out.push(*v),
                Support::Positive => {
                    if *v <= 0.0 {
                        return Err(Error::Argument(format!(
                            "coordinate {v} must be positive for log-scale transform"
                        )));
                    }
                    out.push(v.ln());
                }
            }
        }
        ParamVector::new(out)
    }
}

impl LogDensity for LogScaleView {
    fn log_density(&self, x: &ParamVector) -> f64 {
        let Some(theta) = Self::to_natural(&self.layout, x) else {
            // exp overflow: treat as outside the representable support
            return f64::NEG_INFINITY;
        };
        let base = self.inner.log_density(&theta);
        if base == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let jacobian: f64 = x
            .values()
            .iter()
            .zip(&self.layout)
            .filter(|(_, s)| **s == Support::Positive)
            .map(|(xi, _)| xi)
            .sum();
        base + jacobian
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> Option<usize> {
        Some(self.layout.len())
    }
}

/// The geometric path `q_t = q1^t * q0^(1-t)` between two unnormalized
/// densities. Equal endpoints are accepted; downstream `t*` estimation
/// reports the degenerate-path condition instead of failing here.
#[derive(Clone)]
pub struct GeometricPath {
    q0: DensityRef,
    q1: DensityRef,
}

impl GeometricPath {
    pub fn new(q0: DensityRef, q1: DensityRef) -> Self {
        Self { q0, q1 }
    }

    pub fn q0(&self) -> &DensityRef {
        &self.q0
    }

    pub fn q1(&self) -> &DensityRef {
        &self.q1
    }

    /// Path with the endpoints exchanged (negates the U-statistic).
    pub fn swapped(&self) -> Self {
        Self {
            q0: Arc::clone(&self.q1),
            q1: Arc::clone(&self.q0),
        }
    }

    /// Tempered log-density `t log q1 + (1-t) log q0`.
    ///
    /// At `t = 0` and `t = 1` the zero-weighted endpoint is not evaluated.
    pub fn log_q(&self, theta: &ParamVector, t: f64) -> Result<f64> {
        check_temperature(t)?;
        Ok(self.log_q_unchecked(theta, t))
    }

    fn log_q_unchecked(&self, theta: &ParamVector, t: f64) -> f64 {
        if t == 0.0 {
            return self.q0.log_density(theta);
        }
        if t == 1.0 {
            return self.q1.log_density(theta);
        }
        let l0 = self.q0.log_density(theta);
        if l0 == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let l1 = self.q1.log_density(theta);
        if l1 == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        t * l1 + (1.0 - t) * l0
    }

    /// `U = log q1 - log q0`, the t-free integrand of the geometric path.
    pub fn u_stat(&self, theta: &ParamVector) -> Result<f64> {
        let l0 = self.q0.log_density(theta);
        if l0 == f64::NEG_INFINITY {
            return Err(Error::Support {
                label: self.q0.label().to_string(),
                point: theta.values().to_vec(),
            });
        }
        let l1 = self.q1.log_density(theta);
        if l1 == f64::NEG_INFINITY {
            return Err(Error::Support {
                label: self.q1.label().to_string(),
                point: theta.values().to_vec(),
            });
        }
        Ok(l1 - l0)
    }
}

/// A compound path: a geometric hyper-path between two nested geometric
/// paths, with endpoint functions `q_i(theta, j)` for `i, j` in `{0, 1}`.
///
/// `log (Q.q)_t = t^2 L11 + t(1-t) L01 + t(1-t) L10 + (1-t)^2 L00`
/// where `Lij = log q_i(theta, j)`. At `t = 1` the path is `q_1(theta, 1)`
/// and at `t = 0` it is `q_0(theta, 0)`, so the path's z-ratio links those
/// two endpoint integrals directly.
#[derive(Clone)]
pub struct QuadrivialPath {
    q11: DensityRef,
    q01: DensityRef,
    q10: DensityRef,
    q00: DensityRef,
}

impl QuadrivialPath {
    /// Arguments in the order `q_1(.,1), q_0(.,1), q_1(.,0), q_0(.,0)`.
    pub fn new(q11: DensityRef, q01: DensityRef, q10: DensityRef, q00: DensityRef) -> Self {
        Self { q11, q01, q10, q00 }
    }

    pub fn log_q(&self, theta: &ParamVector, t: f64) -> Result<f64> {
        check_temperature(t)?;
        Ok(self.log_q_unchecked(theta, t))
    }

    fn log_q_unchecked(&self, theta: &ParamVector, t: f64) -> f64 {
        if t == 0.0 {
            return self.q00.log_density(theta);
        }
        if t == 1.0 {
            return self.q11.log_density(theta);
        }
        let terms = [
            self.q11.log_density(theta),
            self.q01.log_density(theta),
            self.q10.log_density(theta),
            self.q00.log_density(theta),
        ];
        if terms.contains(&f64::NEG_INFINITY) {
            return f64::NEG_INFINITY;
        }
        let s = 1.0 - t;
        t * t * terms[0] + t * s * (terms[1] + terms[2]) + s * s * terms[3]
    }

    /// Derivative of `log (Q.q)_t` in `t`; unlike the geometric case this
    /// depends on the temperature.
    pub fn u_stat(&self, theta: &ParamVector, t: f64) -> Result<f64> {
        check_temperature(t)?;
        let mut vals = [0.0; 4];
        for (v, d) in vals
            .iter_mut()
            .zip([&self.q11, &self.q01, &self.q10, &self.q00])
        {
            *v = d.log_density(theta);
            if *v == f64::NEG_INFINITY {
                return Err(Error::Support {
                    label: d.label().to_string(),
                    point: theta.values().to_vec(),
                });
            }
        }
        let [l11, l01, l10, l00] = vals;
        Ok(2.0 * t * l11 + (1.0 - 2.0 * t) * (l01 + l10) - 2.0 * (1.0 - t) * l00)
    }
}

/// A path that can be tempered and differentiated at any `t`; implemented by
/// [`GeometricPath`] and [`QuadrivialPath`] and consumed by the sampler and
/// the estimators.
pub trait TemperedPath: Send + Sync {
    /// Unnormalized tempered log-density at a valid temperature.
    fn log_tempered(&self, theta: &ParamVector, t: f64) -> f64;

    /// The path's U-statistic at `(theta, t)`.
    fn u_value(&self, theta: &ParamVector, t: f64) -> Result<f64>;

    /// Whether the U-statistic varies with `t` (true for compound paths).
    /// When it does, stepping-stone weights must be re-evaluated at each
    /// panel midpoint instead of reusing the values recorded at the chain's
    /// own temperature.
    fn u_depends_on_t(&self) -> bool {
        false
    }

    fn path_label(&self) -> String;
}

impl TemperedPath for GeometricPath {
    fn log_tempered(&self, theta: &ParamVector, t: f64) -> f64 {
        self.log_q_unchecked(theta, t)
    }

    fn u_value(&self, theta: &ParamVector, _t: f64) -> Result<f64> {
        self.u_stat(theta)
    }

    fn path_label(&self) -> String {
        format!("geometric[{} -> {}]", self.q0.label(), self.q1.label())
    }
}

impl TemperedPath for QuadrivialPath {
    fn log_tempered(&self, theta: &ParamVector, t: f64) -> f64 {
        self.log_q_unchecked(theta, t)
    }

    fn u_value(&self, theta: &ParamVector, t: f64) -> Result<f64> {
        self.u_stat(theta, t)
    }

    fn u_depends_on_t(&self) -> bool {
        true
    }

    fn path_label(&self) -> String {
        format!(
            "quadrivial[{} | {} | {} | {}]",
            self.q11.label(),
            self.q01.label(),
            self.q10.label(),
            self.q00.label()
        )
    }
}

/// Shared handle to a tempered path.
pub type PathRef = Arc<dyn TemperedPath>;

/// A path frozen at one temperature: the unnormalized sampling target of a
/// single ladder rung. Implements [`LogDensity`] so it can be fed to the
/// Metropolis engine or to quadrature.
#[derive(Clone)]
pub struct TemperedTarget {
    path: PathRef,
    t: f64,
    label: String,
}

impl TemperedTarget {
    pub fn new(path: PathRef, t: f64) -> Result<Self> {
        check_temperature(t)?;
        let label = format!("{}@t={t}", path.path_label());
        Ok(Self { path, t, label })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn path(&self) -> &PathRef {
        &self.path
    }

    pub fn u_value(&self, theta: &ParamVector) -> Result<f64> {
        self.path.u_value(theta, self.t)
    }
}

impl LogDensity for TemperedTarget {
    fn log_density(&self, theta: &ParamVector) -> f64 {
        self.path.log_tempered(theta, self.t)
    }

    fn label(&self) -> &str {
        &self.label
    }
}

pub(crate) fn check_temperature(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) || t.is_nan() {
        return Err(Error::Domain {
            what: "t",
            value: t,
            constraint: "[0, 1]",
        });
    }
    Ok(())
}
