//! Machine-readable fit reports emitted by the CLI.

use crate::design::DesignMatrix;
use crate::glm::{pearson_dispersion, poisson_summary, quasi_summary, GlmFit};
use crate::mle::{test_alpha_one, GammaCountFit};
use serde::{Deserialize, Serialize};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Notes on modelling conventions a reader comparing against other software
/// should know about.
pub fn normative_deviations() -> Vec<String> {
    vec![
        "count PMF uses index (y+1)*alpha for the upper incomplete-gamma term".into(),
        "defoliation covariate is coded as a proportion in [0,1]; percent inputs are divided by 100".into(),
        "per-observation probabilities are floored at 1e-300 before taking logs".into(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Poisson,
    QuasiPoisson,
    GammaCount,
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(ModelKind::Poisson),
            "quasipoisson" | "quasi-poisson" => Ok(ModelKind::QuasiPoisson),
            "gammacount" | "gamma-count" => Ok(ModelKind::GammaCount),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub est_over_se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionReport {
    /// "alpha" for Gamma-count, "phi" for quasi-Poisson
    pub name: String,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    /// dispersion-equal-to-baseline test (alpha = 1), when applicable
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaled_gradient_norm: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ModelKind,
    pub predictor: u8,
    pub coefficients: Vec<CoefficientRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionReport>,
    pub loglik: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviance: Option<f64>,
    /// absent for quasi-Poisson, which has no likelihood
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aic: Option<f64>,
    pub n: usize,
    pub convergence: ConvergenceReport,
    pub data_sha256: String,
    pub toolkit_version: String,
    pub normative_deviations: Vec<String>,
}

pub fn poisson_report(fit: &GlmFit, quasi: bool, data_sha256: &str) -> FitReport {
    let rows: Vec<CoefficientRow> = if quasi {
        quasi_summary(fit)
            .expect("quasi summary requires n > p")
            .into_iter()
            .map(|c| CoefficientRow {
                name: c.name,
                estimate: c.estimate,
                se: c.se,
                est_over_se: c.t_ratio,
            })
            .collect()
    } else {
        poisson_summary(fit)
            .into_iter()
            .map(|c| CoefficientRow {
                name: c.name,
                estimate: c.estimate,
                se: c.se,
                est_over_se: c.t_ratio,
            })
            .collect()
    };
    let dispersion = if quasi {
        Some(DispersionReport {
            name: "phi".into(),
            estimate: pearson_dispersion(fit).expect("n > p"),
            se: None,
            test_statistic: None,
            p_value: None,
        })
    } else {
        None
    };
    FitReport {
        model: if quasi { ModelKind::QuasiPoisson } else { ModelKind::Poisson },
        predictor: fit.predictor_id,
        coefficients: rows,
        dispersion,
        loglik: if quasi { None } else { Some(fit.loglik) },
        deviance: Some(fit.deviance),
        aic: if quasi { None } else { Some(fit.aic()) },
        n: fit.n,
        convergence: ConvergenceReport {
            converged: true,
            iterations: fit.iterations,
            scaled_gradient_norm: None,
        },
        data_sha256: data_sha256.to_string(),
        toolkit_version: TOOLKIT_VERSION.to_string(),
        normative_deviations: normative_deviations(),
    }
}

pub fn gamma_count_report(
    fit: &GammaCountFit,
    design: &DesignMatrix,
    counts: &[u64],
    data_sha256: &str,
) -> FitReport {
    let rows: Vec<CoefficientRow> = fit
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = fit.se_gamma(j).unwrap_or(f64::NAN);
            CoefficientRow {
                name: name.clone(),
                estimate: fit.gamma[j],
                se,
                est_over_se: fit.gamma[j] / se,
            }
        })
        .collect();
    let (stat, p) = crate::glm::fit_poisson(design, counts)
        .ok()
        .and_then(|pois| test_alpha_one(fit, &pois).ok())
        .map(|(s, p)| (Some(s), Some(p)))
        .unwrap_or((None, None));
    let se_alpha = fit.se_alpha();
    FitReport {
        model: ModelKind::GammaCount,
        predictor: fit.predictor_id,
        coefficients: rows,
        dispersion: Some(DispersionReport {
            name: "alpha".into(),
            estimate: fit.alpha,
            se: se_alpha,
            test_statistic: stat,
            p_value: p,
        }),
        loglik: Some(fit.loglik),
        deviance: None,
        aic: Some(fit.aic()),
        n: fit.n,
        convergence: ConvergenceReport {
            converged: fit.converged,
            iterations: fit.iterations,
            scaled_gradient_norm: Some(fit.scaled_grad_norm),
        },
        data_sha256: data_sha256.to_string(),
        toolkit_version: TOOLKIT_VERSION.to_string(),
        normative_deviations: normative_deviations(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
