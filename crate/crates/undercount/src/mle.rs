//! Maximum-likelihood fitting of the Gamma-count regression.
//!
//! The regression acts on the waiting-time scale, E(τ|x) = exp(−x'γ), so
//! with unit exposure the count y contributes
//!
//!   log[ G(yα, α·e^{x'γ}) − G((y+1)α, α·e^{x'γ}) ]
//!
//! to the log-likelihood. Optimization runs unconstrained in θ = (ln α, γ);
//! the covariance is a numerically differenced Hessian on that scale with
//! the dispersion row/column delta-transformed back to α.

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::glm::GlmFit;
use crate::optim::{central_gradient, central_hessian, minimize_bfgs, OptimOptions};
use crate::special::{chi2_sf, p_gamma};
use nalgebra::{DMatrix, DVector};

/// Probabilities are floored here before taking logs so a bad line-search
/// step cannot poison the objective with −∞.
const PROB_FLOOR: f64 = 1e-300;

/// A fitted Gamma-count regression. `cov` is ordered (α, γ₁..γ_p).
#[derive(Debug, Clone)]
pub struct GammaCountFit {
    pub gamma: DVector<f64>,
    pub alpha: f64,
    pub loglik: f64,
    pub cov: Option<DMatrix<f64>>,
    pub n: usize,
    pub p: usize,
    pub converged: bool,
    pub iterations: usize,
    pub scaled_grad_norm: f64,
    pub names: Vec<String>,
    pub predictor_id: u8,
}

impl GammaCountFit {
    /// Free parameter count including α.
    pub fn n_params(&self) -> usize {
        self.p + 1
    }

    pub fn aic(&self) -> f64 {
        2.0 * self.n_params() as f64 - 2.0 * self.loglik
    }

    /// SE of α (α-scale, via the delta method applied inside `covariance`).
    pub fn se_alpha(&self) -> Option<f64> {
        self.cov.as_ref().map(|c| c[(0, 0)].sqrt())
    }

    /// SE of coefficient j.
    pub fn se_gamma(&self, j: usize) -> Option<f64> {
        self.cov.as_ref().map(|c| c[(j + 1, j + 1)].sqrt())
    }
}

fn log_pmf_term(y: u64, alpha: f64, bt: f64) -> f64 {
    let upper = p_gamma(alpha * (y + 1) as f64, bt).expect("valid arguments");
    let lower = if y == 0 {
        1.0
    } else {
        p_gamma(alpha * y as f64, bt).expect("valid arguments")
    };
    (lower - upper).max(PROB_FLOOR).ln()
}

/// Log-likelihood of (γ, α) for counts under the given design.
pub fn loglik(gamma: &[f64], alpha: f64, design: &DesignMatrix, counts: &[u64]) -> Result<f64> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    let x = &design.matrix;
    if gamma.len() != x.ncols() || counts.len() != x.nrows() {
        return Err(Error::domain("dimension mismatch in loglik"));
    }
    let mut total = 0.0;
    for (i, &y) in counts.iter().enumerate() {
        let eta: f64 = (0..x.ncols()).map(|j| x[(i, j)] * gamma[j]).sum();
        if !eta.is_finite() {
            return Err(Error::Evaluation(format!("non-finite linear predictor at row {i}")));
        }
        let bt = alpha * eta.exp();
        if !bt.is_finite() || bt <= 0.0 {
            return Err(Error::Evaluation(format!("linear predictor overflow at row {i}")));
        }
        total += log_pmf_term(y, alpha, bt);
    }
    Ok(total)
}

/// Same objective on the unconstrained θ = (λ = ln α, γ) scale; returns
/// +inf-safe values for the minimizer (it negates internally).
fn neg_loglik_theta(theta: &[f64], design: &DesignMatrix, counts: &[u64]) -> f64 {
    let alpha = theta[0].exp();
    if !alpha.is_finite() || alpha <= 0.0 {
        return f64::INFINITY;
    }
    match loglik(&theta[1..], alpha, design, counts) {
        Ok(l) => -l,
        Err(_) => f64::INFINITY,
    }
}

/// Fit the Gamma-count regression. `init` optionally supplies (γ, α);
/// by default γ starts at the Poisson MLE (via a fresh IRLS fit) and α at 1.
pub fn fit_gamma_count(
    design: &DesignMatrix,
    counts: &[u64],
    init: Option<(&[f64], f64)>,
) -> Result<GammaCountFit> {
    let p = design.p();
    let mut theta0 = vec![0.0; p + 1];
    match init {
        Some((gamma, alpha)) => {
            if gamma.len() != p || alpha <= 0.0 {
                return Err(Error::domain("invalid initial values"));
            }
            theta0[0] = alpha.ln();
            theta0[1..].copy_from_slice(gamma);
        }
        None => {
            let pois = crate::glm::fit_poisson(design, counts)?;
            theta0[1..].copy_from_slice(pois.coefficients.as_slice());
        }
    }

    let obj = |theta: &[f64]| neg_loglik_theta(theta, design, counts);
    let opts = OptimOptions { max_iter: 500, ..OptimOptions::default() };
    let res = minimize_bfgs(&obj, &theta0, &opts);

    let alpha = res.x[0].exp();
    let gamma = DVector::from_column_slice(&res.x.as_slice()[1..]);
    let mut fit = GammaCountFit {
        gamma,
        alpha,
        loglik: -res.f,
        cov: None,
        n: counts.len(),
        p,
        converged: res.converged,
        iterations: res.iterations,
        scaled_grad_norm: res.scaled_grad_norm,
        names: design.names.clone(),
        predictor_id: design.predictor_id,
    };
    // covariance failure is reported but keeps the point estimates usable;
    // non-convergence likewise comes back as a result with converged=false
    // so callers can still inspect the diagnostics
    fit.cov = covariance(&fit, design, counts).ok();
    Ok(fit)
}

/// Observed-information covariance: central-difference Hessian of ℓ on the
/// (λ, γ) scale, negated and inverted, then the λ row/column mapped to the
/// α scale (×α̂ off-diagonal, ×α̂² on the diagonal).
pub fn covariance(
    fit: &GammaCountFit,
    design: &DesignMatrix,
    counts: &[u64],
) -> Result<DMatrix<f64>> {
    let mut theta = vec![fit.alpha.ln()];
    theta.extend(fit.gamma.iter().copied());
    let ll = |t: &[f64]| -neg_loglik_theta(t, design, counts);
    let hess = central_hessian(&ll, &theta, 1e-4);
    let neg_hess = -hess;
    let chol = neg_hess.cholesky().ok_or(Error::Curvature)?;
    let mut cov = chol.inverse();
    let k = cov.nrows();
    for j in 1..k {
        cov[(0, j)] *= fit.alpha;
        cov[(j, 0)] *= fit.alpha;
    }
    cov[(0, 0)] *= fit.alpha * fit.alpha;
    Ok(cov)
}

/// Scaled ∞-norm of the finite-difference gradient at the fitted optimum.
pub fn gradient_norm_at_optimum(
    fit: &GammaCountFit,
    design: &DesignMatrix,
    counts: &[u64],
) -> f64 {
    let mut theta = vec![fit.alpha.ln()];
    theta.extend(fit.gamma.iter().copied());
    let obj = |t: &[f64]| neg_loglik_theta(t, design, counts);
    let g = central_gradient(&obj, &theta, 1e-6);
    let denom = 1.0 + fit.loglik.abs();
    g.iter()
        .zip(theta.iter())
        .map(|(gj, tj)| gj.abs() * (1.0 + tj.abs()) / denom)
        .fold(0.0, f64::max)
}

/// Likelihood-ratio test between two nested Gamma-count fits.
pub fn lrt(nested: &GammaCountFit, full: &GammaCountFit) -> Result<(f64, usize, f64)> {
    if nested.n != full.n {
        return Err(Error::NotNested("fits use different data sizes".into()));
    }
    if nested.p >= full.p {
        return Err(Error::NotNested(format!(
            "nested model must have fewer parameters ({} vs {})",
            nested.p, full.p
        )));
    }
    let stat = (2.0 * (full.loglik - nested.loglik)).max(0.0);
    let df = full.p - nested.p;
    let p = chi2_sf(stat, df as f64)?;
    Ok((stat, df, p))
}

/// Two-sided dispersion test of α = 1 against the Poisson fit on the same
/// design, via the likelihood ratio on one degree of freedom.
pub fn test_alpha_one(gc: &GammaCountFit, pois: &GlmFit) -> Result<(f64, f64)> {
    if gc.n != pois.n || gc.p != pois.p {
        return Err(Error::NotNested("dispersion test requires identical designs".into()));
    }
    let stat = (2.0 * (gc.loglik - pois.loglik)).max(0.0);
    let p = chi2_sf(stat, 1.0)?;
    Ok((stat, p))
}

/// AIC with `n_params` free parameters.
pub fn aic(loglik: f64, n_params: usize) -> f64 {
    2.0 * n_params as f64 - 2.0 * loglik
}
