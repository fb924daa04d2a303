//! Likelihood-based inference: Wald and profile confidence intervals,
//! two-dimensional profile confidence regions, prediction bands for the
//! expected count, and fitted PMF tables.

use crate::design::{design_row, DesignMatrix, Stage};
use crate::error::{Error, Result};
use crate::gamma_count::{GammaCountDist, PmfTable};
use crate::glm::{pearson_dispersion, GlmFit};
use crate::mle::{loglik, GammaCountFit};
use crate::optim::{minimize_bfgs, OptimOptions};
use crate::special::{chi2_quantile, normal_quantile};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Profiled log-likelihood over a grid of one parameter.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileTrace {
    pub param_name: String,
    pub grid: Vec<f64>,
    pub profile_loglik: Vec<f64>,
    pub mle_value: f64,
    pub mle_loglik: f64,
}

/// A confidence interval whose endpoints may be open when the profile
/// deviance never reaches the cutoff on that side.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileCi {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Wald interval: estimate ± z·SE.
pub fn wald_interval(estimate: f64, se: f64, level: f64) -> Result<(f64, f64)> {
    let z = normal_quantile((1.0 + level) / 2.0)?;
    Ok((estimate - z * se, estimate + z * se))
}

/// Wald CI for a Gamma-count fit parameter. Index 0 is α, indices 1.. are
/// the regression coefficients. The α interval is symmetric on the α scale
/// (matching how the dispersion estimate is reported) with the lower
/// endpoint truncated at 0.
pub fn wald_ci(fit: &GammaCountFit, param: usize, level: f64) -> Result<(f64, f64)> {
    let cov = fit.cov.as_ref().ok_or(Error::Curvature)?;
    if param > fit.p {
        return Err(Error::UnknownParameter(format!("index {param}")));
    }
    let se = cov[(param, param)].sqrt();
    let est = if param == 0 { fit.alpha } else { fit.gamma[param - 1] };
    let (lo, hi) = wald_interval(est, se, level)?;
    if param == 0 {
        Ok((lo.max(0.0), hi))
    } else {
        Ok((lo, hi))
    }
}

/// Profile the log-likelihood in one scalar parameter of an arbitrary
/// objective. `loglik_at(t, nuisance)` evaluates the full log-likelihood;
/// the nuisance parameters are re-maximized here at every grid value,
/// warm-started from the neighboring solution.
///
/// The grid spans the MLE ± 4 Wald SEs at 41 points and extends adaptively
/// until the chi-squared cutoff is bracketed (or gives up with an open
/// endpoint on that side).
pub fn profile_scalar<F>(
    loglik_at: &F,
    param_name: &str,
    mle_value: f64,
    mle_nuisance: &[f64],
    mle_loglik: f64,
    wald_se: f64,
    level: f64,
    lower_bound: Option<f64>,
) -> Result<(ProfileTrace, ProfileCi)>
where
    F: Fn(f64, &[f64]) -> f64,
{
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(Error::domain(format!("level must be in (0,1), got {level}")));
    }
    let cutoff = chi2_quantile(level, 1.0)?;
    let opts = OptimOptions { max_iter: 300, ..OptimOptions::default() };

    let clip = |v: f64| match lower_bound {
        Some(lb) => v.max(lb + 1e-9 * (1.0 + lb.abs())),
        None => v,
    };

    let profile_at = |t: f64, warm: &[f64]| -> (f64, Vec<f64>) {
        if warm.is_empty() {
            return (loglik_at(t, warm), Vec::new());
        }
        let obj = |nu: &[f64]| -loglik_at(t, nu);
        let res = minimize_bfgs(&obj, warm, &opts);
        (-res.f, res.x.as_slice().to_vec())
    };

    let step = 4.0 * wald_se / 20.0;
    // two monotone sweeps outward from the MLE, 21 points each side incl. center
    let side = |dir: f64| -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut warm = mle_nuisance.to_vec();
        for k in 1..=20 {
            let t = clip(mle_value + dir * step * k as f64);
            let (l, w) = profile_at(t, &warm);
            warm = w;
            out.push((t, l));
            if let Some(lb) = lower_bound {
                if dir < 0.0 && t <= lb + 1e-8 {
                    break;
                }
            }
        }
        // adaptive extension until the cutoff is bracketed
        let mut extensions = 0;
        while 2.0 * (mle_loglik - out.last().unwrap().1) < cutoff && extensions < 60 {
            let t = clip(out.last().unwrap().0 + dir * step);
            if let Some(lb) = lower_bound {
                if dir < 0.0 && t <= lb + 1e-8 {
                    break;
                }
            }
            let (l, w) = profile_at(t, &warm);
            warm = w;
            out.push((t, l));
            extensions += 1;
        }
        out
    };

    let left = side(-1.0);
    let right = side(1.0);

    let mut grid: Vec<f64> = left.iter().rev().map(|&(t, _)| t).collect();
    let mut prof: Vec<f64> = left.iter().rev().map(|&(_, l)| l).collect();
    grid.push(mle_value);
    prof.push(mle_loglik);
    grid.extend(right.iter().map(|&(t, _)| t));
    prof.extend(right.iter().map(|&(_, l)| l));

    // CI endpoint on one side: walk outward until the deviance crosses the
    // cutoff, then refine the crossing by bisection on the profile deviance.
    let endpoint = |sweep: &[(f64, f64)]| -> Option<f64> {
        let mut prev = (mle_value, mle_loglik);
        for &(t, l) in sweep {
            let d = 2.0 * (mle_loglik - l);
            if d >= cutoff {
                let (mut lo, mut hi) = (prev.0, t);
                let mut warm = mle_nuisance.to_vec();
                for _ in 0..80 {
                    if (hi - lo).abs() <= 1e-10 * (1.0 + lo.abs().max(hi.abs())) {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let (l_mid, w) = profile_at(mid, &warm);
                    warm = w;
                    if 2.0 * (mle_loglik - l_mid) >= cutoff {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
            prev = (t, l);
        }
        None
    };

    let ci = ProfileCi { lower: endpoint(&left), upper: endpoint(&right) };
    let trace = ProfileTrace {
        param_name: param_name.to_string(),
        grid,
        profile_loglik: prof,
        mle_value,
        mle_loglik,
    };
    Ok((trace, ci))
}

/// Resolve a parameter name ("alpha" or a coefficient name) to the (α, γ)
/// index used by `wald_ci`.
pub fn param_index(fit: &GammaCountFit, name: &str) -> Result<usize> {
    if name.eq_ignore_ascii_case("alpha") {
        return Ok(0);
    }
    fit.names
        .iter()
        .position(|n| n == name)
        .map(|j| j + 1)
        .ok_or_else(|| Error::UnknownParameter(name.to_string()))
}

/// Profile-likelihood CI for one parameter of a Gamma-count fit.
pub fn profile(
    design: &DesignMatrix,
    counts: &[u64],
    fit: &GammaCountFit,
    param_name: &str,
    level: f64,
) -> Result<(ProfileTrace, ProfileCi)> {
    let idx = param_index(fit, param_name)?;
    let cov = fit.cov.as_ref().ok_or(Error::Curvature)?;
    let se = cov[(idx, idx)].sqrt();

    if idx == 0 {
        // profile α; nuisance = γ
        let f = |alpha: f64, gamma: &[f64]| {
            loglik(gamma, alpha, design, counts).unwrap_or(f64::NEG_INFINITY)
        };
        profile_scalar(
            &f,
            param_name,
            fit.alpha,
            fit.gamma.as_slice(),
            fit.loglik,
            se,
            level,
            Some(0.0),
        )
    } else {
        // profile γ_j; nuisance = (ln α, other γ)
        let j = idx - 1;
        let mut nuisance = vec![fit.alpha.ln()];
        nuisance.extend(fit.gamma.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v));
        let f = |t: f64, nu: &[f64]| {
            let alpha = nu[0].exp();
            let mut gamma = Vec::with_capacity(fit.p);
            let mut it = nu[1..].iter();
            for k in 0..fit.p {
                if k == j {
                    gamma.push(t);
                } else {
                    gamma.push(*it.next().unwrap());
                }
            }
            loglik(&gamma, alpha, design, counts).unwrap_or(f64::NEG_INFINITY)
        };
        profile_scalar(&f, param_name, fit.gamma[j], &nuisance, fit.loglik, se, level, None)
    }
}

/// Contour-ready 2-D profile deviance grid.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileRegion2d {
    pub x_name: String,
    pub y_name: String,
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    /// deviance[i][j] = D(x_grid[i], y_grid[j])
    pub deviance: Vec<Vec<f64>>,
    /// (level, chi-squared threshold on 2 df)
    pub thresholds: Vec<(f64, f64)>,
}

/// Profile deviance D(θ₁, θ₂) = 2(ℓ̂ − max_nuisance ℓ) on a 41×41 grid
/// spanning ±4 Wald SEs around the MLE of the two named parameters.
pub fn profile_region_2d(
    design: &DesignMatrix,
    counts: &[u64],
    fit: &GammaCountFit,
    params: (&str, &str),
    levels: &[f64],
) -> Result<ProfileRegion2d> {
    let ix = param_index(fit, params.0)?;
    let iy = param_index(fit, params.1)?;
    if ix == iy {
        return Err(Error::domain("the two region parameters must be distinct"));
    }
    let cov = fit.cov.as_ref().ok_or(Error::Curvature)?;
    let value_of = |idx: usize| if idx == 0 { fit.alpha } else { fit.gamma[idx - 1] };
    let (vx, vy) = (value_of(ix), value_of(iy));
    let (sx, sy) = (cov[(ix, ix)].sqrt(), cov[(iy, iy)].sqrt());

    let n_pts = 41usize;
    let axis = |center: f64, se: f64, positive: bool| -> Vec<f64> {
        (0..n_pts)
            .map(|k| {
                let v = center + se * (-4.0 + 8.0 * k as f64 / (n_pts - 1) as f64);
                if positive {
                    v.max(1e-9)
                } else {
                    v
                }
            })
            .collect()
    };
    let x_grid = axis(vx, sx, ix == 0);
    let y_grid = axis(vy, sy, iy == 0);

    // full parameter vector on the (ln α, γ) optimization scale, with the two
    // fixed coordinates substituted and the rest free
    let theta_hat: Vec<f64> = {
        let mut t = vec![fit.alpha.ln()];
        t.extend(fit.gamma.iter().copied());
        t
    };
    let free: Vec<usize> = (0..=fit.p).filter(|&k| k != ix && k != iy).collect();
    let opts = OptimOptions { max_iter: 200, ..OptimOptions::default() };

    let eval = |x: f64, y: f64, warm: &[f64]| -> (f64, Vec<f64>) {
        let assemble = |nu: &[f64]| -> Vec<f64> {
            let mut full = theta_hat.clone();
            full[ix] = if ix == 0 { x.ln() } else { x };
            full[iy] = if iy == 0 { y.ln() } else { y };
            for (slot, &k) in free.iter().enumerate() {
                full[k] = nu[slot];
            }
            full
        };
        let ll = |nu: &[f64]| {
            let full = assemble(nu);
            let alpha = full[0].exp();
            loglik(&full[1..], alpha, design, counts).unwrap_or(f64::NEG_INFINITY)
        };
        if free.is_empty() {
            (ll(&[]), Vec::new())
        } else {
            let obj = |nu: &[f64]| -ll(nu);
            let res = minimize_bfgs(&obj, warm, &opts);
            (-res.f, res.x.as_slice().to_vec())
        }
    };

    let warm0: Vec<f64> = free.iter().map(|&k| theta_hat[k]).collect();
    let mut deviance = vec![vec![0.0; y_grid.len()]; x_grid.len()];
    for (i, &x) in x_grid.iter().enumerate() {
        let mut warm = warm0.clone();
        for (j, &y) in y_grid.iter().enumerate() {
            let (l, w) = eval(x, y, &warm);
            warm = w;
            deviance[i][j] = (2.0 * (fit.loglik - l)).max(0.0);
        }
    }

    let mut thresholds = Vec::new();
    for &lv in levels {
        thresholds.push((lv, chi2_quantile(lv, 2.0)?));
    }
    Ok(ProfileRegion2d {
        x_name: params.0.to_string(),
        y_name: params.1.to_string(),
        x_grid,
        y_grid,
        deviance,
        thresholds,
    })
}

/// One prediction-band row.
#[derive(Debug, Clone, Serialize)]
pub struct BandRow {
    pub stage: Stage,
    pub def: f64,
    pub eta_hat: f64,
    pub se_eta: f64,
    pub mean_count: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Pointwise confidence band for the expected count over a covariate grid.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionBand {
    pub rows: Vec<BandRow>,
    pub level: f64,
}

/// V_{γ|α} = V_γγ − V_γα V_αα⁻¹ V_αγ from the (α, γ)-ordered covariance.
fn gamma_given_alpha_cov(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let p = cov.nrows() - 1;
    let v_gg = cov.view((1, 1), (p, p)).into_owned();
    let v_ga = DVector::from_fn(p, |j, _| cov[(j + 1, 0)]);
    let v_aa = cov[(0, 0)];
    &v_gg - &v_ga * v_ga.transpose() / v_aa
}

fn check_grid(newdata: &[(Stage, f64)]) -> Result<()> {
    for &(_, def) in newdata {
        if !(0.0..=1.0).contains(&def) {
            return Err(Error::domain(format!(
                "prediction refused outside def in [0,1], got {def}"
            )));
        }
    }
    Ok(())
}

/// Prediction band for a Gamma-count fit. The expected count is an
/// increasing function of the linear predictor, so interval endpoints are
/// mapped directly through the mean function.
pub fn predict_gamma_count(
    fit: &GammaCountFit,
    newdata: &[(Stage, f64)],
    level: f64,
) -> Result<PredictionBand> {
    check_grid(newdata)?;
    let cov = fit.cov.as_ref().ok_or(Error::Curvature)?;
    let v_cond = gamma_given_alpha_cov(cov);
    let z = normal_quantile((1.0 + level) / 2.0)?;

    let mean_at = |eta: f64| -> Result<f64> {
        let d = GammaCountDist::new(fit.alpha, fit.alpha * eta.exp())?;
        Ok(d.mean())
    };

    let mut rows = Vec::with_capacity(newdata.len());
    for &(stage, def) in newdata {
        let xrow = design_row(def, stage, fit.predictor_id)?;
        let x = DVector::from_column_slice(&xrow);
        let eta_hat = x.dot(&fit.gamma);
        let se_eta = (x.transpose() * &v_cond * &x)[(0, 0)].max(0.0).sqrt();
        rows.push(BandRow {
            stage,
            def,
            eta_hat,
            se_eta,
            mean_count: mean_at(eta_hat)?,
            lower: mean_at(eta_hat - z * se_eta)?,
            upper: mean_at(eta_hat + z * se_eta)?,
        });
    }
    Ok(PredictionBand { rows, level })
}

/// Prediction band for a Poisson fit; `quasi` scales the SE by √φ̂.
pub fn predict_poisson(
    fit: &GlmFit,
    newdata: &[(Stage, f64)],
    level: f64,
    quasi: bool,
) -> Result<PredictionBand> {
    check_grid(newdata)?;
    let scale = if quasi { pearson_dispersion(fit)?.sqrt() } else { 1.0 };
    let z = normal_quantile((1.0 + level) / 2.0)?;
    let mut rows = Vec::with_capacity(newdata.len());
    for &(stage, def) in newdata {
        let xrow = design_row(def, stage, fit.predictor_id)?;
        let x = DVector::from_column_slice(&xrow);
        let eta_hat = x.dot(&fit.coefficients);
        let se_eta = scale * (x.transpose() * &fit.cov * &x)[(0, 0)].max(0.0).sqrt();
        rows.push(BandRow {
            stage,
            def,
            eta_hat,
            se_eta,
            mean_count: eta_hat.exp(),
            lower: (eta_hat - z * se_eta).exp(),
            upper: (eta_hat + z * se_eta).exp(),
        });
    }
    Ok(PredictionBand { rows, level })
}

/// Fitted count PMFs from both models at one covariate point.
pub fn estimated_pmfs(
    gc_fit: &GammaCountFit,
    pois_fit: &GlmFit,
    at: (Stage, f64),
    n_max: u64,
) -> Result<(PmfTable, PmfTable)> {
    if gc_fit.predictor_id != pois_fit.predictor_id {
        return Err(Error::domain("fits use different predictors"));
    }
    let xrow = design_row(at.1, at.0, gc_fit.predictor_id)?;
    let x = DVector::from_column_slice(&xrow);
    let eta_gc = x.dot(&gc_fit.gamma);
    let gc = GammaCountDist::new(gc_fit.alpha, gc_fit.alpha * eta_gc.exp())?;
    let eta_p = x.dot(&pois_fit.coefficients);
    let pois = GammaCountDist::new(1.0, eta_p.exp())?;
    Ok((gc.pmf_table(n_max), pois.pmf_table(n_max)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_design, CountDataset, Observation, STAGES};
    use crate::glm::fit_poisson;
    use crate::mle::fit_gamma_count;
    use crate::renewal::{first_window_count, rng_for_replicate};

    fn dataset(counts: &[u64]) -> CountDataset {
        let rows = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| Observation {
                count: c,
                defoliation: (i % 5) as f64 * 0.25,
                stage: STAGES[i % 5],
                replicate: (i / 5) as i64,
            })
            .collect();
        CountDataset { rows }
    }

    fn simulate_counts(gamma0: f64, alpha: f64, n: usize, seed: u64) -> Vec<u64> {
        let beta = alpha * gamma0.exp();
        let mut rng = rng_for_replicate(seed, 0);
        (0..n).map(|_| first_window_count(alpha, beta, 1.0, &mut rng)).collect()
    }

    #[test]
    fn wald_interval_basics() {
        let (lo, hi) = wald_interval(0.0, 1.0, 0.95).unwrap();
        assert!((lo + 1.959964).abs() < 1e-5);
        assert!((hi - 1.959964).abs() < 1e-5);
        let (lo, hi) = wald_interval(2.0, 0.0, 0.95).unwrap();
        assert_eq!((lo, hi), (2.0, 2.0));
    }

    #[test]
    fn profile_equals_wald_on_exact_quadratic() {
        // ℓ(t, u) = −½ [ (t−1)²/0.04 + (u+2)²/0.25 ], independent coordinates
        let f = |t: f64, nu: &[f64]| {
            -0.5 * ((t - 1.0).powi(2) / 0.04 + (nu[0] + 2.0).powi(2) / 0.25)
        };
        let (trace, ci) =
            profile_scalar(&f, "t", 1.0, &[-2.0], 0.0, 0.2, 0.95, None).unwrap();
        let (wlo, whi) = wald_interval(1.0, 0.2, 0.95).unwrap();
        assert!((ci.lower.unwrap() - wlo).abs() < 1e-6, "{:?} vs {wlo}", ci.lower);
        assert!((ci.upper.unwrap() - whi).abs() < 1e-6);
        // dominance: profiled loglik never exceeds the MLE value
        assert!(trace.profile_loglik.iter().all(|&l| l <= trace.mle_loglik + 1e-8));
    }

    #[test]
    fn profile_poisson_intercept_matches_root_oracle() {
        // ℓ(γ0) = S·γ0 − n·e^{γ0} + const with n=25, ȳ=4
        let n = 25.0;
        let s = 100.0;
        let ll = |g: f64| s * g - n * g.exp();
        let g_hat = (s / n).ln();
        let l_hat = ll(g_hat);
        let cutoff = 3.841458820694124; // 95% chi-squared on 1 df
        // independent bisection oracle on each side
        let solve = |mut lo: f64, mut hi: f64| -> f64 {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if 2.0 * (l_hat - ll(mid)) < cutoff {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        // deviance increases away from the MLE on both sides
        let oracle_hi = solve(g_hat, g_hat + 2.0);
        let oracle_lo = {
            let mut lo = g_hat - 2.0;
            let mut hi = g_hat;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if 2.0 * (l_hat - ll(mid)) >= cutoff {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };

        let f = |t: f64, _: &[f64]| ll(t);
        let se = 1.0 / (n * g_hat.exp()).sqrt(); // Fisher information n·e^{γ̂₀}
        let (_, ci) = profile_scalar(&f, "gamma0", g_hat, &[], l_hat, se, 0.95, None).unwrap();
        assert!((ci.lower.unwrap() - oracle_lo).abs() < 1e-6);
        assert!((ci.upper.unwrap() - oracle_hi).abs() < 1e-6);
    }

    #[test]
    fn profile_alpha_on_simulated_fit() {
        let counts = simulate_counts(2.0, 3.0, 400, 77);
        let data = dataset(&counts);
        let design = build_design(&data, 1).unwrap();
        let fit = fit_gamma_count(&design, &counts, None).unwrap();
        let (trace, ci) = profile(&design, &counts, &fit, "alpha", 0.95).unwrap();
        let lo = ci.lower.unwrap();
        let hi = ci.upper.unwrap();
        assert!(lo < fit.alpha && fit.alpha < hi);
        assert!(lo > 0.0);
        assert!(trace.profile_loglik.iter().all(|&l| l <= fit.loglik + 1e-8));
        // interval comparable to Wald
        let (wlo, whi) = wald_ci(&fit, 0, 0.95).unwrap();
        assert!((lo - wlo).abs() < 0.5 && (hi - whi).abs() < 0.5);
    }

    #[test]
    fn region_2d_deviance_zero_at_mle() {
        let counts = simulate_counts(1.5, 2.0, 300, 5);
        let data = dataset(&counts);
        let design = build_design(&data, 1).unwrap();
        let fit = fit_gamma_count(&design, &counts, None).unwrap();
        let region =
            profile_region_2d(&design, &counts, &fit, ("gamma0", "alpha"), &[0.90, 0.95, 0.99])
                .unwrap();
        let min: f64 = region
            .deviance
            .iter()
            .flatten()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(min < 1e-4, "min deviance {min}");
        let t: Vec<f64> = region.thresholds.iter().map(|&(_, t)| t).collect();
        assert!((t[0] - 4.605).abs() < 1e-3);
        assert!((t[1] - 5.991).abs() < 1e-3);
        assert!((t[2] - 9.210).abs() < 1e-3);
    }

    #[test]
    fn predict_reduces_to_poisson_at_alpha_one() {
        let counts = simulate_counts(1.8, 1.0, 3000, 55);
        let data = dataset(&counts);
        let design = build_design(&data, 1).unwrap();
        let gc = fit_gamma_count(&design, &counts, None).unwrap();
        let pois = fit_poisson(&design, &counts).unwrap();
        let grid: Vec<(Stage, f64)> = vec![(Stage::Vegetative, 0.0)];
        let band_gc = predict_gamma_count(&gc, &grid, 0.95).unwrap();
        let band_p = predict_poisson(&pois, &grid, 0.95, false).unwrap();
        // α̂ ≈ 1 so the two mean maps nearly coincide
        let r = &band_gc.rows[0];
        let q = &band_p.rows[0];
        assert!((r.mean_count - q.mean_count).abs() / q.mean_count < 0.02);
        assert!(r.lower < r.mean_count && r.mean_count < r.upper);
    }

    #[test]
    fn prediction_bands_nest_across_levels() {
        let counts = simulate_counts(2.0, 4.0, 500, 31);
        let data = dataset(&counts);
        let design = build_design(&data, 1).unwrap();
        let fit = fit_gamma_count(&design, &counts, None).unwrap();
        let grid: Vec<(Stage, f64)> = vec![(Stage::Fig, 0.0), (Stage::Fig, 0.5), (Stage::Fig, 1.0)];
        let b95 = predict_gamma_count(&fit, &grid, 0.95).unwrap();
        let b99 = predict_gamma_count(&fit, &grid, 0.99).unwrap();
        for (a, b) in b95.rows.iter().zip(b99.rows.iter()) {
            assert!(b.lower <= a.lower && a.upper <= b.upper);
        }
    }

    #[test]
    fn predict_refuses_extrapolation() {
        let counts = simulate_counts(2.0, 4.0, 200, 32);
        let data = dataset(&counts);
        let design = build_design(&data, 1).unwrap();
        let fit = fit_gamma_count(&design, &counts, None).unwrap();
        assert!(predict_gamma_count(&fit, &[(Stage::Fig, 1.5)], 0.95).is_err());
    }

    #[test]
    fn estimated_pmfs_normalize_and_compare() {
        let counts = simulate_counts(2.2, 5.0, 1000, 41);
        let data = dataset(&counts);
        let design = build_design(&data, 1).unwrap();
        let gc = fit_gamma_count(&design, &counts, None).unwrap();
        let pois = fit_poisson(&design, &counts).unwrap();
        let (t_gc, t_p) = estimated_pmfs(&gc, &pois, (Stage::Vegetative, 0.0), 60).unwrap();
        let sum_gc: f64 = t_gc.probs.iter().sum::<f64>() + t_gc.tail_mass;
        let sum_p: f64 = t_p.probs.iter().sum::<f64>() + t_p.tail_mass;
        assert!((sum_gc - 1.0).abs() < 1e-10);
        assert!((sum_p - 1.0).abs() < 1e-10);
        // same data, so close means; underdispersed fit concentrates harder
        assert!((t_gc.mean() - t_p.mean()).abs() < 0.2);
        assert!(t_gc.variance() < t_p.variance());
    }
}
