//! Closed-form and quadrature reference values for validating estimators:
//! exact `log lambda`, expectation and variance curves, divergences and `t*`
//! for Gaussian endpoint pairs, 1-D grid quadrature for arbitrary densities,
//! and conjugate/semi-analytic marginal likelihoods for the built-in models.
//!
//! These oracles ship with the library rather than living in test code, so
//! the same tooling is available for validating custom paths.

use serde::Serialize;

use crate::densities::{LogDensity, ParamVector};
use crate::math::logsumexp;
use crate::sampler::RegressionModel;
use crate::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// A pair of scaled Gaussian kernels `q_i = c_i * N(mean_i, var_i)` with
/// diagonal covariance, closed under geometric tempering.
#[derive(Debug, Clone)]
pub struct GaussianPair {
    mean0: Vec<f64>,
    var0: Vec<f64>,
    mean1: Vec<f64>,
    var1: Vec<f64>,
    log_c0: f64,
    log_c1: f64,
}

/// Closed-form divergence record for a Gaussian pair.
#[derive(Debug, Clone, Serialize)]
pub struct ExactDivergences {
    pub kl_1_0: f64,
    pub kl_0_1: f64,
    pub j: f64,
    pub bhattacharyya: f64,
    pub hellinger: f64,
    pub chernoff_info: f64,
    pub t_star: f64,
    pub renyi_at_t_star: f64,
    pub tsallis_at_t_star: f64,
    pub log_lambda: f64,
}

impl GaussianPair {
    pub fn new(mean0: Vec<f64>, var0: Vec<f64>, mean1: Vec<f64>, var1: Vec<f64>) -> Result<Self> {
        let d = mean0.len();
        if d == 0 || mean1.len() != d || var0.len() != d || var1.len() != d {
            return Err(Error::Argument(
                "gaussian pair vectors must share one positive dimension".into(),
            ));
        }
        for &v in var0.iter().chain(&var1) {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain {
                    what: "variance",
                    value: v,
                    constraint: "(0, inf)",
                });
            }
        }
        Ok(Self {
            mean0,
            var0,
            mean1,
            var1,
            log_c0: 0.0,
            log_c1: 0.0,
        })
    }

    /// Attach positive scale constants multiplying the kernels.
    pub fn with_scales(mut self, c0: f64, c1: f64) -> Result<Self> {
        for c in [c0, c1] {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Domain {
                    what: "scale",
                    value: c,
                    constraint: "(0, inf)",
                });
            }
        }
        self.log_c0 = c0.ln();
        self.log_c1 = c1.ln();
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mean0.len()
    }

    /// `log(z1/z0) = log(c1/c0) + (1/2) log(det V1 / det V0)`.
    pub fn exact_log_lambda(&self) -> f64 {
        let logdet: f64 = self
            .var1
            .iter()
            .zip(&self.var0)
            .map(|(v1, v0)| v1.ln() - v0.ln())
            .sum();
        self.log_c1 - self.log_c0 + 0.5 * logdet
    }

    /// Moments of the tempered Gaussian `p_t` per coordinate:
    /// precision `t/v1 + (1-t)/v0`.
    fn tempered_moments(&self, t: f64, j: usize) -> (f64, f64) {
        let lam = t / self.var1[j] + (1.0 - t) / self.var0[j];
        let var = 1.0 / lam;
        let mean = var * (t * self.mean1[j] / self.var1[j] + (1.0 - t) * self.mean0[j] / self.var0[j]);
        (mean, var)
    }

    /// Exact `E_t = E_{p_t}[U]` with
    /// `U = log c1 - log c0 - (theta-m1)^2/(2 v1) + (theta-m0)^2/(2 v0)`
    /// summed over coordinates.
    pub fn exact_e_t(&self, t: f64) -> Result<f64> {
        crate::densities::check_temperature(t)?;
        let mut e = self.log_c1 - self.log_c0;
        for j in 0..self.dim() {
            let (m, s) = self.tempered_moments(t, j);
            let d1 = m - self.mean1[j];
            let d0 = m - self.mean0[j];
            e += (s + d0 * d0) / (2.0 * self.var0[j]) - (s + d1 * d1) / (2.0 * self.var1[j]);
        }
        Ok(e)
    }

    /// Exact `V_t = Var_{p_t}[U]`; per coordinate `U` is the quadratic
    /// `a theta^2 + b theta + const` with `a = (1/v0 - 1/v1)/2`, and for
    /// `theta ~ N(m, s)`: `Var = s (2 a m + b)^2 + 2 a^2 s^2`.
    pub fn exact_v_t(&self, t: f64) -> Result<f64> {
        crate::densities::check_temperature(t)?;
        let mut v = 0.0;
        for j in 0..self.dim() {
            let (m, s) = self.tempered_moments(t, j);
            let a = 0.5 * (1.0 / self.var0[j] - 1.0 / self.var1[j]);
            let b = self.mean1[j] / self.var1[j] - self.mean0[j] / self.var0[j];
            let lin = 2.0 * a * m + b;
            v += s * lin * lin + 2.0 * a * a * s * s;
        }
        Ok(v)
    }

    /// `log mu(t) = log integral p1^t p0^(1-t)` of the normalized densities.
    pub fn exact_log_mu(&self, t: f64) -> Result<f64> {
        crate::densities::check_temperature(t)?;
        let mut log_mu = 0.0;
        for j in 0..self.dim() {
            let l1 = 1.0 / self.var1[j];
            let l0 = 1.0 / self.var0[j];
            let lt = t * l1 + (1.0 - t) * l0;
            let mt = (t * self.mean1[j] * l1 + (1.0 - t) * self.mean0[j] * l0) / lt;
            let residual = t * self.mean1[j] * self.mean1[j] * l1
                + (1.0 - t) * self.mean0[j] * self.mean0[j] * l0
                - mt * mt * lt;
            log_mu += 0.5 * (t * l1.ln() + (1.0 - t) * l0.ln() - lt.ln()) - 0.5 * residual;
        }
        Ok(log_mu)
    }

    /// KL divergence `KL(N(ma,va) || N(mb,vb))` summed over coordinates.
    fn gaussian_kl(ma: &[f64], va: &[f64], mb: &[f64], vb: &[f64]) -> f64 {
        ma.iter()
            .zip(va)
            .zip(mb.iter().zip(vb))
            .map(|((ma, va), (mb, vb))| {
                let d = ma - mb;
                0.5 * (va / vb + d * d / vb - 1.0 + (vb / va).ln())
            })
            .sum()
    }

    /// Closed-form divergence record; `t*` is found by golden-section search
    /// on the smooth strictly convex `log mu(t)`.
    pub fn exact_divergences(&self) -> Result<ExactDivergences> {
        let kl_1_0 = Self::gaussian_kl(&self.mean1, &self.var1, &self.mean0, &self.var0);
        let kl_0_1 = Self::gaussian_kl(&self.mean0, &self.var0, &self.mean1, &self.var1);
        let t_star = golden_section_min(|t| self.exact_log_mu(t).unwrap(), 0.0, 1.0, 1e-10);
        let chernoff_info = -self.exact_log_mu(t_star)?;
        let bhattacharyya = -self.exact_log_mu(0.5)?;
        let hellinger = (1.0 - (-bhattacharyya).exp()).max(0.0).sqrt();
        Ok(ExactDivergences {
            kl_1_0,
            kl_0_1,
            j: kl_1_0 + kl_0_1,
            bhattacharyya,
            hellinger,
            chernoff_info,
            t_star,
            renyi_at_t_star: chernoff_info / (1.0 - t_star),
            tsallis_at_t_star: (1.0 - (-chernoff_info).exp()) / (1.0 - t_star),
            log_lambda: self.exact_log_lambda(),
        })
    }

    /// The pair as unnormalized kernel densities, for feeding the sampler.
    pub fn kernels(&self) -> Result<(crate::densities::DensityRef, crate::densities::DensityRef)> {
        let q0 = crate::densities::scaled(
            crate::densities::Gaussian::kernel(self.mean0.clone(), self.var0.clone())?
                .with_label("q0")
                .shared(),
            self.log_c0,
        );
        let q1 = crate::densities::scaled(
            crate::densities::Gaussian::kernel(self.mean1.clone(), self.var1.clone())?
                .with_label("q1")
                .shared(),
            self.log_c1,
        );
        Ok((q0, q1))
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Trapezoid quadrature of `exp(log_density)` on a 1-D grid, computed with
/// log-sum-exp stabilization. The density must be effectively supported
/// inside the grid: each boundary value has to sit at least 30 log-units
/// below the maximum.
pub fn quadrature_log_z(
    density: &dyn LogDensity,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0) || !(hi > lo) {
        return Err(Error::Argument(format!(
            "invalid quadrature grid [{lo}, {hi}] with step {step}"
        )));
    }
    let n = ((hi - lo) / step).round() as usize;
    if n < 2 {
        return Err(Error::Argument("quadrature grid needs at least 2 panels".into()));
    }
    let h = (hi - lo) / n as f64;
    let mut terms = Vec::with_capacity(n + 1);
    let mut max_val = f64::NEG_INFINITY;
    let mut first = 0.0;
    let mut last = 0.0;
    for j in 0..=n {
        let x = lo + h * j as f64;
        let v = density.log_density(&ParamVector::new(vec![x])?);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::Numeric {
                message: format!("density returned {v} on the quadrature grid"),
                t: None,
                point: vec![x],
            });
        }
        max_val = max_val.max(v);
        if j == 0 {
            first = v;
        }
        if j == n {
            last = v;
        }
        let weight = if j == 0 || j == n { 0.5 * h } else { h };
        terms.push(v + weight.ln());
    }
    if max_val - first < 30.0 || max_val - last < 30.0 {
        return Err(Error::Grid(format!(
            "density is not contained: boundary log-values ({first:.2}, {last:.2}) are within 30 log-units of the maximum {max_val:.2}"
        )));
    }
    Ok(logsumexp(&terms))
}

/// Closed-form log marginal likelihood of the conjugate normal toy:
/// `y_i ~ N(mu, sigma2)` with known `sigma2` and `mu ~ N(m, v)`.
pub fn normal_known_variance_log_marginal(
    y: &[f64],
    sigma2: f64,
    prior_mean: f64,
    prior_var: f64,
) -> f64 {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let ss: f64 = y.iter().map(|yi| (yi - ybar) * (yi - ybar)).sum();
    let total_var = sigma2 + n * prior_var;
    let d = ybar - prior_mean;
    -0.5 * n * LN_2PI - 0.5 * (n - 1.0) * sigma2.ln() - 0.5 * total_var.ln()
        - 0.5 * ss / sigma2
        - 0.5 * n * d * d / total_var
}

/// Semi-analytic log marginal likelihood of the linear-regression model:
/// `(alpha, beta)` are integrated in closed form given `sigma2`, and the
/// remaining 1-D integral over `log sigma2` is evaluated by trapezoid
/// quadrature on an adaptive grid.
pub fn regression_log_marginal(model: &RegressionModel, grid_points: usize) -> Result<f64> {
    if grid_points < 100 {
        return Err(Error::Argument("need at least 100 grid points".into()));
    }
    let n = model.n();
    let y = model.y();
    let xc = model.x_centered();

    // conditional marginal f(y | sigma2): y ~ N(mean, sigma2 I + va J + vb xc xc')
    let cond_log_marginal = |sigma2: f64| -> f64 {
        let mut cov = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                cov[i][j] = model.prior_var[0] + model.prior_var[1] * xc[i] * xc[j];
                if i == j {
                    cov[i][j] += sigma2;
                }
            }
        }
        let chol = match crate::math::cholesky(&cov) {
            Some(c) => c,
            None => return f64::NEG_INFINITY,
        };
        let resid: Vec<f64> = (0..n)
            .map(|i| y[i] - model.prior_mean[0] - model.prior_mean[1] * xc[i])
            .collect();
        let z = crate::math::cholesky_solve(&chol, &resid);
        let quad: f64 = resid.iter().zip(&z).map(|(r, s)| r * s).sum();
        -0.5 * (n as f64) * LN_2PI - 0.5 * crate::math::cholesky_logdet(&chol) - 0.5 * quad
    };

    let prior = crate::densities::InverseGamma::new(model.prior_shape, model.prior_rate)?;
    // integrand over w = log sigma2, Jacobian included
    let integrand = |w: f64| -> f64 {
        let sigma2 = w.exp();
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let point = ParamVector::new(vec![sigma2]).expect("finite positive sigma2");
        let v = cond_log_marginal(sigma2) + prior.log_density(&point) + w;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    // coarse scan to locate the mode, then a fine grid around it
    let ybar = y.iter().sum::<f64>() / n as f64;
    let scale = (y.iter().map(|v| (v - ybar) * (v - ybar)).sum::<f64>() / n as f64).max(1e-12);
    let w_center = scale.ln();
    let coarse: Vec<f64> = (0..=400)
        .map(|k| w_center - 40.0 + 80.0 * k as f64 / 400.0)
        .collect();
    let w_mode = coarse
        .iter()
        .copied()
        .max_by(|a, b| integrand(*a).total_cmp(&integrand(*b)))
        .unwrap();

    let (w_lo, w_hi) = (w_mode - 18.0, w_mode + 18.0);
    let h = (w_hi - w_lo) / grid_points as f64;
    let mut terms = Vec::with_capacity(grid_points + 1);
    for k in 0..=grid_points {
        let w = w_lo + h * k as f64;
        let weight = if k == 0 || k == grid_points { 0.5 * h } else { h };
        terms.push(integrand(w) + weight.ln());
    }
    let max_term = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_term - terms[0] < 30.0 || max_term - terms[terms.len() - 1] < 30.0 {
        return Err(Error::Grid(
            "regression marginal integrand is not contained in the grid".into(),
        ));
    }
    Ok(logsumexp(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{density_from_fn, scaled, Gaussian};
    use approx::assert_relative_eq;

    fn unit_pair() -> GaussianPair {
        GaussianPair::new(vec![0.0], vec![1.0], vec![1.0], vec![1.0]).unwrap()
    }

    #[test]
    fn log_lambda_special_cases() {
        assert_eq!(unit_pair().exact_log_lambda(), 0.0);
        let scaled_pair = unit_pair().with_scales(1.0, 2.0).unwrap();
        assert_relative_eq!(scaled_pair.exact_log_lambda(), 2.0f64.ln(), epsilon = 1e-14);
        let var_pair = GaussianPair::new(vec![0.0], vec![1.0], vec![0.0], vec![4.0]).unwrap();
        assert_relative_eq!(var_pair.exact_log_lambda(), 0.5 * 4.0f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn e_t_and_v_t_for_unit_gap() {
        let pair = unit_pair();
        assert_relative_eq!(pair.exact_e_t(0.5).unwrap(), 0.0, epsilon = 1e-14);
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert_relative_eq!(
                pair.exact_e_t(t).unwrap(),
                (2.0 * t - 1.0) / 2.0,
                epsilon = 1e-13
            );
            assert_relative_eq!(pair.exact_v_t(t).unwrap(), 1.0, epsilon = 1e-13);
        }
        // J equals the expectation gap
        let e1 = pair.exact_e_t(1.0).unwrap();
        let e0 = pair.exact_e_t(0.0).unwrap();
        assert_relative_eq!(e1 - e0, 1.0, epsilon = 1e-13);

        let degenerate = GaussianPair::new(vec![0.3], vec![2.0], vec![0.3], vec![2.0]).unwrap();
        assert_eq!(degenerate.exact_e_t(0.4).unwrap(), 0.0);
        assert_eq!(degenerate.exact_v_t(0.4).unwrap(), 0.0);
    }

    #[test]
    fn e_t_derivative_equals_local_variance() {
        let pair = GaussianPair::new(vec![0.0, 1.0], vec![1.0, 2.0], vec![1.5, 0.5], vec![1.0, 2.0])
            .unwrap();
        let h = 1e-5;
        for t in [0.2, 0.5, 0.8] {
            let fd = (pair.exact_e_t(t + h).unwrap() - pair.exact_e_t(t - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(fd, pair.exact_v_t(t).unwrap(), epsilon = 1e-7);
        }
    }

    #[test]
    fn divergences_unit_gap() {
        let d = unit_pair().exact_divergences().unwrap();
        assert_relative_eq!(d.kl_1_0, 0.5, epsilon = 1e-12);
        assert_relative_eq!(d.kl_0_1, 0.5, epsilon = 1e-12);
        assert_relative_eq!(d.j, 1.0, epsilon = 1e-12);
        assert_relative_eq!(d.t_star, 0.5, epsilon = 1e-8);
        assert_relative_eq!(d.chernoff_info, 0.125, epsilon = 1e-10);
        assert_relative_eq!(d.bhattacharyya, 0.125, epsilon = 1e-12);
        assert_relative_eq!(d.hellinger, (1.0 - (-0.125f64).exp()).sqrt(), epsilon = 1e-12);
        // scale constants never change the divergences
        let ds = unit_pair()
            .with_scales(3.0, 0.5)
            .unwrap()
            .exact_divergences()
            .unwrap();
        assert_relative_eq!(ds.chernoff_info, d.chernoff_info, epsilon = 1e-12);
        assert_relative_eq!(ds.kl_1_0, d.kl_1_0, epsilon = 1e-12);
    }

    #[test]
    fn divergences_identical_pair_are_zero() {
        let pair = GaussianPair::new(vec![0.7], vec![2.0], vec![0.7], vec![2.0]).unwrap();
        let d = pair.exact_divergences().unwrap();
        assert!(d.kl_1_0.abs() < 1e-12);
        assert!(d.kl_0_1.abs() < 1e-12);
        assert!(d.chernoff_info.abs() < 1e-10);
        assert!(d.hellinger < 1e-5);
    }

    #[test]
    fn divergences_variance_mismatch() {
        // q1 = N(0,1), q0 = N(0,4)
        let pair = GaussianPair::new(vec![0.0], vec![4.0], vec![0.0], vec![1.0]).unwrap();
        let d = pair.exact_divergences().unwrap();
        assert_relative_eq!(d.kl_1_0, 0.5 * (0.25 - 1.0 + 4.0f64.ln()), epsilon = 1e-10);
        assert_relative_eq!(d.kl_0_1, 0.5 * (4.0 - 1.0 - 4.0f64.ln()), epsilon = 1e-10);
        assert_relative_eq!(d.kl_1_0, 0.3181, epsilon = 1e-4);
        assert_relative_eq!(d.kl_0_1, 0.8069, epsilon = 1e-4);
    }

    #[test]
    fn chernoff_coefficient_balance() {
        let pair = GaussianPair::new(vec![0.2], vec![1.5], vec![1.1], vec![0.7]).unwrap();
        // mu(0) = mu(1) = 1
        assert!(pair.exact_log_mu(0.0).unwrap().abs() < 1e-8);
        assert!(pair.exact_log_mu(1.0).unwrap().abs() < 1e-8);
        // KL identity: KL(p1 || p0) = E_1 - log lambda
        let d = pair.exact_divergences().unwrap();
        assert_relative_eq!(
            d.kl_1_0,
            pair.exact_e_t(1.0).unwrap() - pair.exact_log_lambda(),
            epsilon = 1e-10
        );
        assert_relative_eq!(
            d.kl_0_1,
            -(pair.exact_e_t(0.0).unwrap() - pair.exact_log_lambda()),
            epsilon = 1e-10
        );
        // closed-form C_t for equal variances: t(1-t)/2 * gap^2 / v
        let eq = GaussianPair::new(vec![0.0], vec![1.0], vec![1.0], vec![1.0]).unwrap();
        for t in [0.25, 0.5, 0.6] {
            assert_relative_eq!(
                -eq.exact_log_mu(t).unwrap(),
                t * (1.0 - t) / 2.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn quadrature_standard_normal_kernel() {
        let q = Gaussian::kernel(vec![0.0], vec![1.0]).unwrap();
        let log_z = quadrature_log_z(&q, -10.0, 10.0, 1e-3).unwrap();
        assert_relative_eq!(log_z, 0.5 * LN_2PI, epsilon = 1e-6);
    }

    #[test]
    fn quadrature_laplace_kernel() {
        let q = density_from_fn("laplace", 1, |theta: &ParamVector| -theta[0].abs());
        let log_z = quadrature_log_z(q.as_ref(), -35.0, 35.0, 1e-3).unwrap();
        assert_relative_eq!(log_z, 2.0f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn quadrature_scaling_is_exact() {
        let q = Gaussian::kernel(vec![0.0], vec![1.0]).unwrap().shared();
        let base = quadrature_log_z(q.as_ref(), -10.0, 10.0, 1e-3).unwrap();
        let scaled_density = scaled(q, 3.0f64.ln());
        let shifted = quadrature_log_z(scaled_density.as_ref(), -10.0, 10.0, 1e-3).unwrap();
        assert_relative_eq!(shifted - base, 3.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn quadrature_rejects_uncontained_support() {
        let q = Gaussian::kernel(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            quadrature_log_z(&q, -2.0, 2.0, 1e-3),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn quadrature_profile_locates_t_star() {
        // log z_t - log z_0 - t log lambda = log mu(t); its minimizer matches
        // the oracle t*
        use crate::densities::{GeometricPath, TemperedPath, TemperedTarget};
        use std::sync::Arc;
        let pair = GaussianPair::new(vec![0.0], vec![1.0], vec![1.2], vec![0.6]).unwrap();
        let (q0, q1) = pair.kernels().unwrap();
        let path: Arc<dyn TemperedPath> = Arc::new(GeometricPath::new(q0, q1));
        let d = pair.exact_divergences().unwrap();

        let log_z = |t: f64| {
            let target = TemperedTarget::new(Arc::clone(&path), t).unwrap();
            quadrature_log_z(&target, -12.0, 12.0, 1e-3).unwrap()
        };
        let z0 = log_z(0.0);
        let ts: Vec<f64> = (0..=40).map(|k| k as f64 / 40.0).collect();
        let profile: Vec<f64> = ts
            .iter()
            .map(|&t| log_z(t) - z0 - t * pair.exact_log_lambda())
            .collect();
        // profile equals log mu(t) on the grid
        for (t, p) in ts.iter().zip(&profile) {
            assert_relative_eq!(*p, pair.exact_log_mu(*t).unwrap(), epsilon = 1e-5);
        }
        let min_idx = (0..ts.len())
            .min_by(|a, b| profile[*a].total_cmp(&profile[*b]))
            .unwrap();
        assert!((ts[min_idx] - d.t_star).abs() <= 0.025);
    }

    #[test]
    fn conjugate_normal_marginal_matches_quadrature() {
        let y = vec![0.3, -0.1, 0.7, 0.2, -0.4, 0.9];
        let (sigma2, m, v) = (0.8, 0.1, 2.0);
        let closed = normal_known_variance_log_marginal(&y, sigma2, m, v);

        // brute force: integrate f(y|mu) pi(mu) over mu
        let yc = y.clone();
        let integrand = density_from_fn("joint", 1, move |theta: &ParamVector| {
            let mu = theta[0];
            let lik: f64 = yc
                .iter()
                .map(|yi| -0.5 * ((yi - mu) * (yi - mu) / sigma2 + sigma2.ln() + LN_2PI))
                .sum();
            let d = mu - m;
            lik - 0.5 * (d * d / v + v.ln() + LN_2PI)
        });
        let quad = quadrature_log_z(integrand.as_ref(), -15.0, 15.0, 1e-4).unwrap();
        assert_relative_eq!(closed, quad, epsilon = 1e-6);
    }

    #[test]
    fn regression_marginal_quadrature_is_stable_in_grid_size() {
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|xi| 2.0 + 0.5 * xi + 0.3 * (xi * 0.7).sin()).collect();
        let model =
            RegressionModel::new(y, x, [0.0, 0.0], [4.0, 4.0], 2.5, 1.2).unwrap();
        let a = regression_log_marginal(&model, 2_000).unwrap();
        let b = regression_log_marginal(&model, 4_000).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-6);
    }
}
