//! The Gamma-count distribution.
//!
//! Counts in a window (0, T] when the times between events are iid
//! Gamma(α, β). With G(a, x) the regularized lower incomplete gamma,
//!
//!   Pr(N = n) = G(αn, βT) − G(α(n+1), βT),       G(0, x) := 1,
//!
//! so α = 1 recovers the Poisson distribution with mean βT. α > 1 gives
//! underdispersed counts, α < 1 overdispersed.

use crate::error::{Error, Result};
use crate::special::{p_gamma, q_gamma};
use serde::Serialize;

/// A Gamma-count distribution with dispersion `alpha`, rate `beta` and
/// exposure window `horizon` (default 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCountDist {
    alpha: f64,
    beta: f64,
    horizon: f64,
}

impl GammaCountDist {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::with_horizon(alpha, beta, 1.0)
    }

    pub fn with_horizon(alpha: f64, beta: f64, horizon: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::domain(format!("beta must be positive, got {beta}")));
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        Ok(GammaCountDist { alpha, beta, horizon })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// βT, the scaled exposure entering every incomplete-gamma evaluation.
    fn bt(&self) -> f64 {
        self.beta * self.horizon
    }

    /// G(αn, βT), with the n = 0 boundary fixed at 1.
    fn g(&self, n: u64) -> f64 {
        if n == 0 {
            1.0
        } else {
            p_gamma(self.alpha * n as f64, self.bt()).expect("valid arguments")
        }
    }

    /// Pr(N = n).
    pub fn pmf(&self, n: u64) -> f64 {
        (self.g(n) - self.g(n + 1)).max(0.0)
    }

    /// Pr(N ≤ n) = 1 − G(α(n+1), βT).
    pub fn cdf(&self, n: u64) -> f64 {
        if self.bt() < self.alpha * (n + 1) as f64 + 1.0 {
            1.0 - self.g(n + 1)
        } else {
            // Q is computed directly so the tail keeps relative precision.
            q_gamma(self.alpha * (n + 1) as f64, self.bt()).expect("valid arguments")
        }
    }

    /// E(N) = Σ_{i ≥ 1} G(αi, βT), truncated when the term drops below
    /// 1e-12 and the index has cleared 2βT/α + 30. The terms stay near 1
    /// until i ≈ βT/α, so both conditions are needed.
    pub fn mean(&self) -> f64 {
        let cutoff = (2.0 * self.bt() / self.alpha + 30.0) as u64;
        let mut sum = 0.0;
        let mut i = 1u64;
        loop {
            let term = self.g(i);
            sum += term;
            if term < 1e-12 && i > cutoff {
                break;
            }
            if i > cutoff + 10_000 {
                break;
            }
            i += 1;
        }
        sum
    }

    /// Var(N) = Σ n²·pmf(n) − mean², truncated under the same rule as `mean`.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let cutoff = (2.0 * self.bt() / self.alpha + 30.0) as u64;
        let mut second = 0.0;
        let mut n = 1u64;
        loop {
            let p = self.pmf(n);
            second += (n * n) as f64 * p;
            if p < 1e-14 && n > cutoff {
                break;
            }
            if n > cutoff + 10_000 {
                break;
            }
            n += 1;
        }
        (second - mean * mean).max(0.0)
    }

    /// PMF over n = 0..=n_max plus the remaining tail mass.
    pub fn pmf_table(&self, n_max: u64) -> PmfTable {
        let probs: Vec<f64> = (0..=n_max).map(|n| self.pmf(n)).collect();
        let tail_mass = 1.0 - self.cdf(n_max);
        PmfTable { probs, n_max, tail_mass }
    }
}

/// Tabulated PMF with explicit tail mass, so the entries plus the tail
/// always account for the full unit of probability.
#[derive(Debug, Clone, Serialize)]
pub struct PmfTable {
    pub probs: Vec<f64>,
    pub n_max: u64,
    pub tail_mass: f64,
}

impl PmfTable {
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let second: f64 = self.probs.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum();
        second - m * m
    }
}

/// Hazard of the Gamma(α, β) interarrival law: f(t)/(1 − F(t)).
///
/// Increasing in t for α > 1, constant β at α = 1, decreasing for α < 1.
pub fn interarrival_hazard(t: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::domain(format!("hazard requires t > 0, got {t}")));
    }
    if alpha <= 0.0 || beta <= 0.0 {
        return Err(Error::domain("hazard requires alpha > 0 and beta > 0"));
    }
    let ln_pdf = alpha * beta.ln() + (alpha - 1.0) * t.ln()
        - beta * t
        - crate::special::log_gamma_unchecked(alpha);
    let survival = q_gamma(alpha, beta * t)?;
    if survival <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((ln_pdf - survival.ln()).exp())
}
