//! Unconstrained minimization used by the likelihood fitters: quasi-Newton
//! (BFGS) with central finite-difference gradients and a backtracking line
//! search, falling back to Nelder–Mead when the line search stalls.

use nalgebra::{DMatrix, DVector};

pub struct OptimOptions {
    pub max_iter: usize,
    /// stop when |Δf| < f_tol · (1 + |f|)
    pub f_tol: f64,
    /// stop when the scaled gradient ∞-norm drops below this
    pub grad_tol: f64,
    /// relative step for central-difference gradients
    pub grad_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions { max_iter: 500, f_tol: 1e-10, grad_tol: 1e-6, grad_step: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: DVector<f64>,
    pub f: f64,
    pub scaled_grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn central_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel_step: f64) -> DVector<f64> {
    let mut xs = x.to_vec();
    let mut g = DVector::zeros(x.len());
    for j in 0..x.len() {
        let h = rel_step * (1.0 + x[j].abs());
        let orig = xs[j];
        xs[j] = orig + h;
        let fp = f(&xs);
        xs[j] = orig - h;
        let fm = f(&xs);
        xs[j] = orig;
        g[j] = (fp - fm) / (2.0 * h);
    }
    g
}

fn scaled_grad_norm(g: &DVector<f64>, x: &DVector<f64>, fx: f64) -> f64 {
    let denom = 1.0 + fx.abs();
    g.iter()
        .zip(x.iter())
        .map(|(gj, xj)| gj.abs() * (1.0 + xj.abs()) / denom)
        .fold(0.0, f64::max)
}

/// BFGS minimization of `f` from `x0`.
pub fn minimize_bfgs<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    if n == 0 {
        return OptimResult { x, f: fx, scaled_grad_norm: 0.0, iterations: 0, converged: true };
    }
    let mut g = central_gradient(f, x.as_slice(), opts.grad_step);
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;

    for iter in 1..=opts.max_iter {
        iterations = iter;
        let sg = scaled_grad_norm(&g, &x, fx);
        if sg < opts.grad_tol {
            return OptimResult { x, f: fx, scaled_grad_norm: sg, iterations, converged: true };
        }

        let mut dir = -(&h_inv * &g);
        if dir.dot(&g) >= 0.0 {
            // not a descent direction; reset curvature
            h_inv = DMatrix::identity(n, n);
            dir = -g.clone();
        }

        // backtracking Armijo search
        let mut step = 1.0;
        let slope = g.dot(&dir);
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        for _ in 0..60 {
            x_new = &x + &dir * step;
            f_new = f(x_new.as_slice());
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // stall: try a simplex restart around the current point
            let nm = nelder_mead(f, x.as_slice(), opts);
            if nm.f < fx - opts.f_tol * (1.0 + fx.abs()) {
                x = nm.x;
                fx = nm.f;
                g = central_gradient(f, x.as_slice(), opts.grad_step);
                h_inv = DMatrix::identity(n, n);
                continue;
            }
            let sg = scaled_grad_norm(&g, &x, fx);
            return OptimResult {
                x,
                f: fx,
                scaled_grad_norm: sg,
                iterations,
                converged: sg < 10.0 * opts.grad_tol,
            };
        }

        let g_new = central_gradient(f, x_new.as_slice(), opts.grad_step);
        let s = &x_new - &x;
        let yv = &g_new - &g;
        let sy = s.dot(&yv);
        if sy > 1e-12 {
            // BFGS inverse update
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - &s * yv.transpose() * rho;
            let right = &eye - &yv * s.transpose() * rho;
            h_inv = &left * h_inv * right + &s * s.transpose() * rho;
        }

        let df = (fx - f_new).abs();
        let f_converged = df < opts.f_tol * (1.0 + f_new.abs());
        x = x_new;
        fx = f_new;
        g = g_new;
        if f_converged {
            let sg = scaled_grad_norm(&g, &x, fx);
            if sg < opts.grad_tol {
                return OptimResult { x, f: fx, scaled_grad_norm: sg, iterations, converged: true };
            }
        }
    }
    let sg = scaled_grad_norm(&g, &x, fx);
    OptimResult { x, f: fx, scaled_grad_norm: sg, iterations, converged: false }
}

/// Nelder–Mead simplex minimization (standard reflection/expansion/
/// contraction/shrink coefficients).
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let n = x0.len();
    if n == 0 {
        let fx = f(x0);
        return OptimResult {
            x: DVector::zeros(0),
            f: fx,
            scaled_grad_norm: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut simplex: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
    simplex.push(DVector::from_column_slice(x0));
    for j in 0..n {
        let mut v = DVector::from_column_slice(x0);
        v[j] += 0.05 * (1.0 + x0[j].abs());
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| f(v.as_slice())).collect();

    let max_iter = opts.max_iter * 4;
    let mut iterations = 0;
    for iter in 1..=max_iter {
        iterations = iter;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        if (fv[worst] - fv[best]).abs() < opts.f_tol * (1.0 + fv[best].abs()) {
            return OptimResult {
                x: simplex[best].clone(),
                f: fv[best],
                scaled_grad_norm: f64::NAN,
                iterations,
                converged: true,
            };
        }

        let mut centroid = DVector::zeros(n);
        for &i in order.iter().take(n) {
            centroid += &simplex[i];
        }
        centroid /= n as f64;

        let reflect = &centroid + (&centroid - &simplex[worst]);
        let f_ref = f(reflect.as_slice());
        if f_ref < fv[best] {
            let expand = &centroid + (&centroid - &simplex[worst]) * 2.0;
            let f_exp = f(expand.as_slice());
            if f_exp < f_ref {
                simplex[worst] = expand;
                fv[worst] = f_exp;
            } else {
                simplex[worst] = reflect;
                fv[worst] = f_ref;
            }
        } else if f_ref < fv[second_worst] {
            simplex[worst] = reflect;
            fv[worst] = f_ref;
        } else {
            let contract = &centroid + (&simplex[worst] - &centroid) * 0.5;
            let f_con = f(contract.as_slice());
            if f_con < fv[worst] {
                simplex[worst] = contract;
                fv[worst] = f_con;
            } else {
                let best_pt = simplex[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    simplex[i] = (&simplex[i] + &best_pt) * 0.5;
                    fv[i] = f(simplex[i].as_slice());
                }
            }
        }
    }
    let best = fv
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    OptimResult {
        x: simplex[best].clone(),
        f: fv[best],
        scaled_grad_norm: f64::NAN,
        iterations,
        converged: false,
    }
}

/// Central-difference Hessian with per-coordinate relative steps.
pub fn central_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel_step: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let f0 = f(x);
    let step: Vec<f64> = x.iter().map(|xi| rel_step * (1.0 + xi.abs())).collect();
    let mut xs = x.to_vec();
    for i in 0..n {
        // diagonal
        xs[i] = x[i] + step[i];
        let fp = f(&xs);
        xs[i] = x[i] - step[i];
        let fm = f(&xs);
        xs[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (step[i] * step[i]);
        for j in (i + 1)..n {
            xs[i] = x[i] + step[i];
            xs[j] = x[j] + step[j];
            let fpp = f(&xs);
            xs[j] = x[j] - step[j];
            let fpm = f(&xs);
            xs[i] = x[i] - step[i];
            xs[j] = x[j] + step[j];
            let fmp = f(&xs);
            xs[j] = x[j] - step[j];
            let fmm = f(&xs);
            xs[i] = x[i];
            xs[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * step[i] * step[j]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bfgs_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 5.0 * (x[1] + 1.0).powi(2);
        let r = minimize_bfgs(&f, &[0.0, 0.0], &OptimOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-6);
        assert!((r.x[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn bfgs_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize_bfgs(&f, &[-1.2, 1.0], &OptimOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-4, "x = {:?}", r.x.as_slice());
        assert!((r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn nelder_mead_quadratic() {
        let f = |x: &[f64]| x[0] * x[0] + (x[1] - 2.0).powi(2);
        let r = nelder_mead(&f, &[5.0, 5.0], &OptimOptions::default());
        assert!(r.x[0].abs() < 1e-4);
        assert!((r.x[1] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn hessian_of_quadratic_is_exact() {
        // f = ½ x'Ax with A = [[4,1],[1,3]]
        let f = |x: &[f64]| {
            0.5 * (4.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + 3.0 * x[1] * x[1])
        };
        let h = central_hessian(&f, &[0.3, -0.7], 1e-4);
        assert!((h[(0, 0)] - 4.0).abs() < 1e-5);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-5);
        assert!((h[(1, 1)] - 3.0).abs() < 1e-5);
    }

    #[test]
    fn zero_dimension_is_trivially_converged() {
        let f = |_: &[f64]| 7.0;
        let r = minimize_bfgs(&f, &[], &OptimOptions::default());
        assert!(r.converged);
        assert_eq!(r.f, 7.0);
    }
}
