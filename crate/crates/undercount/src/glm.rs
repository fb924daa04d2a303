//! Poisson log-link GLM via iteratively reweighted least squares, plus the
//! quasi-Poisson layer: Pearson dispersion, scaled summaries and nested
//! F-tests.

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::special::{f_sf, log_gamma_unchecked};
use nalgebra::{DMatrix, DVector};

/// A converged Poisson fit. `cov` is (X'ŴX)⁻¹; the log-likelihood includes
/// the log y! constant so AIC arithmetic matches full-likelihood reports.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub coefficients: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub loglik: f64,
    pub deviance: f64,
    pub pearson: f64,
    pub fitted: DVector<f64>,
    pub n: usize,
    pub p: usize,
    pub names: Vec<String>,
    pub predictor_id: u8,
    pub iterations: usize,
}

impl GlmFit {
    pub fn aic(&self) -> f64 {
        2.0 * self.p as f64 - 2.0 * self.loglik
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.p).map(|j| self.cov[(j, j)].sqrt()).collect()
    }
}

fn poisson_loglik(counts: &[u64], mu: &DVector<f64>) -> f64 {
    counts
        .iter()
        .zip(mu.iter())
        .map(|(&y, &m)| y as f64 * m.ln() - m - log_gamma_unchecked(y as f64 + 1.0))
        .sum()
}

fn poisson_deviance(counts: &[u64], mu: &DVector<f64>) -> f64 {
    2.0 * counts
        .iter()
        .zip(mu.iter())
        .map(|(&y, &m)| {
            let y = y as f64;
            let term = if y > 0.0 { y * (y / m).ln() } else { 0.0 };
            term - (y - m)
        })
        .sum::<f64>()
}

/// Fit the Poisson log-link model by IRLS.
pub fn fit_poisson(design: &DesignMatrix, counts: &[u64]) -> Result<GlmFit> {
    let x = &design.matrix;
    let n = x.nrows();
    let p = x.ncols();
    if counts.len() != n {
        return Err(Error::domain(format!(
            "counts length {} does not match design rows {n}",
            counts.len()
        )));
    }
    let y = DVector::from_iterator(n, counts.iter().map(|&c| c as f64));

    // start at mu = y + 0.5 to guard log 0
    let mut mu = y.map(|v| v + 0.5);
    let mut eta = mu.map(f64::ln);
    let mut deviance = poisson_deviance(counts, &mu);
    let mut xtwx = DMatrix::zeros(p, p);
    let max_iter = 50;
    let mut iterations = 0;

    for iter in 1..=max_iter {
        iterations = iter;
        // log link, Poisson variance: weight = mu, working response z = eta + (y-mu)/mu
        let z = DVector::from_fn(n, |i, _| eta[i] + (y[i] - mu[i]) / mu[i]);
        let w = &mu;

        xtwx.fill(0.0);
        let mut xtwz = DVector::zeros(p);
        for i in 0..n {
            let wi = w[i];
            for a in 0..p {
                let xa = x[(i, a)];
                xtwz[a] += wi * xa * z[i];
                for b in a..p {
                    xtwx[(a, b)] += wi * xa * x[(i, b)];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[(a, b)] = xtwx[(b, a)];
            }
        }

        let chol = xtwx.clone().cholesky().ok_or(Error::SingularDesign(p))?;
        let beta = chol.solve(&xtwz);
        eta = x * &beta;
        if eta.iter().any(|e| !e.is_finite() || *e > 700.0) {
            return Err(Error::Evaluation("linear predictor diverged".into()));
        }
        mu = eta.map(f64::exp);
        let new_dev = poisson_deviance(counts, &mu);
        let rel = (deviance - new_dev).abs() / (new_dev.abs() + 0.1);
        deviance = new_dev;
        if rel < 1e-12 {
            let cov = chol.inverse();
            let pearson = counts
                .iter()
                .zip(mu.iter())
                .map(|(&yv, &m)| {
                    let r = yv as f64 - m;
                    r * r / m
                })
                .sum();
            return Ok(GlmFit {
                coefficients: beta,
                cov,
                loglik: poisson_loglik(counts, &mu),
                deviance,
                pearson,
                fitted: mu,
                n,
                p,
                names: design.names.clone(),
                predictor_id: design.predictor_id,
                iterations,
            });
        }
    }
    Err(Error::IterationLimit { iterations, loglik: poisson_loglik(counts, &mu) })
}

/// Pearson dispersion φ̂ = Σ (y−μ̂)²/μ̂ / (n−p).
pub fn pearson_dispersion(fit: &GlmFit) -> Result<f64> {
    if fit.n <= fit.p {
        return Err(Error::DegreesOfFreedom { n: fit.n, p: fit.p });
    }
    Ok(fit.pearson / (fit.n - fit.p) as f64)
}

/// One row of a coefficient summary.
#[derive(Debug, Clone)]
pub struct CoefSummary {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub t_ratio: f64,
}

/// Quasi-Poisson summary: same estimates, SEs scaled by √φ̂.
pub fn quasi_summary(fit: &GlmFit) -> Result<Vec<CoefSummary>> {
    let phi = pearson_dispersion(fit)?;
    let scale = phi.sqrt();
    Ok(fit
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = fit.cov[(j, j)].sqrt() * scale;
            CoefSummary {
                name: name.clone(),
                estimate: fit.coefficients[j],
                se,
                t_ratio: fit.coefficients[j] / se,
            }
        })
        .collect())
}

/// Plain Poisson summary (unscaled SEs).
pub fn poisson_summary(fit: &GlmFit) -> Vec<CoefSummary> {
    fit.names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = fit.cov[(j, j)].sqrt();
            CoefSummary {
                name: name.clone(),
                estimate: fit.coefficients[j],
                se,
                t_ratio: fit.coefficients[j] / se,
            }
        })
        .collect()
}

/// Quasi-Poisson F-test between nested fits on the same data.
pub fn quasi_f_test(nested: &GlmFit, full: &GlmFit) -> Result<(f64, usize, usize, f64)> {
    if nested.n != full.n {
        return Err(Error::NotNested("fits use different data sizes".into()));
    }
    if nested.p >= full.p {
        return Err(Error::NotNested(format!(
            "nested model must have fewer parameters ({} vs {})",
            nested.p, full.p
        )));
    }
    let phi = pearson_dispersion(full)?;
    let df1 = full.p - nested.p;
    let df2 = full.n - full.p;
    let f = ((nested.deviance - full.deviance) / (df1 as f64 * phi)).max(0.0);
    let p = f_sf(f, df1 as f64, df2 as f64)?;
    Ok((f, df1, df2, p))
}
