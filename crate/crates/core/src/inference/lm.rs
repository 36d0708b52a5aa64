//! Levenberg-Marquardt for small weighted curve fits.

use nalgebra::{DMatrix, DVector};

/// A curve model `y = f(x; theta)` in the solver's (unconstrained)
/// parameterization.
pub trait CurveFn {
    fn n_params(&self) -> usize;

    /// Returns `f(x; theta)` and writes `df/dtheta` into `grad`.
    fn eval(&self, x: f64, theta: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers chi² by less than this fraction.
    pub chi2_rtol: f64,
    /// Stop when `max |J^T W r| <` this.
    pub gradient_tol: f64,
    pub lambda_init: f64,
    pub lambda_factor: f64,
    /// Damping above which no further progress is possible.
    pub lambda_max: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            chi2_rtol: 1e-10,
            gradient_tol: 1e-10,
            lambda_init: 1e-3,
            lambda_factor: 10.0,
            lambda_max: 1e16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub theta: DVector<f64>,
    pub chi2: f64,
    /// `J^T W J` at `theta`.
    pub normal_matrix: DMatrix<f64>,
    pub gradient_max: f64,
    pub iterations: usize,
    pub converged: bool,
    pub message: &'static str,
}

struct Linearization {
    chi2: f64,
    normal: DMatrix<f64>,
    gradient: DVector<f64>,
}

fn chi2_at<M: CurveFn>(model: &M, x: &[f64], y: &[f64], w: &[f64], theta: &[f64]) -> f64 {
    let mut grad = vec![0.0; model.n_params()];
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| {
            let r = yi - model.eval(xi, theta, &mut grad);
            wi * r * r
        })
        .sum()
}

fn linearize<M: CurveFn>(
    model: &M,
    x: &[f64],
    y: &[f64],
    w: &[f64],
    theta: &[f64],
) -> Linearization {
    let p = model.n_params();
    let mut normal = DMatrix::zeros(p, p);
    let mut gradient = DVector::zeros(p);
    let mut chi2 = 0.0;
    let mut grad = vec![0.0; p];
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        let r = yi - model.eval(xi, theta, &mut grad);
        chi2 += wi * r * r;
        for a in 0..p {
            gradient[a] += wi * grad[a] * r;
            for b in 0..=a {
                normal[(a, b)] += wi * grad[a] * grad[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            normal[(b, a)] = normal[(a, b)];
        }
    }
    Linearization {
        chi2,
        normal,
        gradient,
    }
}

/// Minimizes `sum_i w_i (y_i - f(x_i; theta))^2` from `theta0`.
///
/// The damped system is `(A + lambda diag(A)) delta = J^T W r`. The fit is
/// reported converged when the gradient max-norm falls below
/// `gradient_tol`, when an accepted step lowers chi² by a relative amount
/// below `chi2_rtol`, when a rejected step was predicted to lower it by
/// less than that, or when chi² reaches zero. Running out of iterations
/// or saturating the damping leaves `converged = false`.
pub fn minimize<M: CurveFn>(
    model: &M,
    x: &[f64],
    y: &[f64],
    w: &[f64],
    theta0: &[f64],
    cfg: &LmConfig,
) -> LmOutcome {
    let p = model.n_params();
    let mut theta = DVector::from_column_slice(theta0);
    let mut lin = linearize(model, x, y, w, theta.as_slice());
    let mut lambda = cfg.lambda_init;
    let mut iterations = 0;

    let finish = |theta: DVector<f64>, lin: Linearization, iterations, converged, message| {
        let gradient_max = lin.gradient.amax();
        LmOutcome {
            theta,
            chi2: lin.chi2,
            normal_matrix: lin.normal,
            gradient_max,
            iterations,
            converged,
            message,
        }
    };

    if !lin.chi2.is_finite() {
        return finish(theta, lin, 0, false, "non-finite chi2 at the initial guess");
    }

    while iterations < cfg.max_iterations {
        if lin.chi2 == 0.0 {
            return finish(theta, lin, iterations, true, "exact fit");
        }
        if lin.gradient.amax() < cfg.gradient_tol {
            return finish(theta, lin, iterations, true, "gradient below tolerance");
        }
        iterations += 1;

        let mut damped = lin.normal.clone();
        for a in 0..p {
            let d = lin.normal[(a, a)];
            damped[(a, a)] += lambda * if d > 0.0 { d } else { 1.0 };
        }
        let step = damped.cholesky().map(|c| c.solve(&lin.gradient));
        let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) else {
            lambda *= cfg.lambda_factor;
            if lambda > cfg.lambda_max {
                return finish(theta, lin, iterations, false, "damped system is singular");
            }
            continue;
        };

        let trial = &theta + &step;
        let trial_chi2 = chi2_at(model, x, y, w, trial.as_slice());
        if trial_chi2.is_finite() && trial_chi2 < lin.chi2 {
            let reduction = (lin.chi2 - trial_chi2) / lin.chi2;
            theta = trial;
            lin = linearize(model, x, y, w, theta.as_slice());
            lambda = (lambda / cfg.lambda_factor).max(1e-12);
            if reduction < cfg.chi2_rtol {
                return finish(
                    theta,
                    lin,
                    iterations,
                    true,
                    "relative chi2 change below tolerance",
                );
            }
        } else {
            // Reduction promised by the linearized model; when even that is
            // below tolerance the rejection is roundoff at the minimum.
            let predicted = 2.0 * lin.gradient.dot(&step) - step.dot(&(&lin.normal * &step));
            if predicted.abs() < cfg.chi2_rtol * lin.chi2 {
                return finish(
                    theta,
                    lin,
                    iterations,
                    true,
                    "predicted chi2 change below tolerance",
                );
            }
            lambda *= cfg.lambda_factor;
            if lambda > cfg.lambda_max {
                return finish(
                    theta,
                    lin,
                    iterations,
                    false,
                    "damping saturated without progress",
                );
            }
        }
    }
    finish(theta, lin, iterations, false, "iteration limit reached")
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line;

    impl CurveFn for Line {
        fn n_params(&self) -> usize {
            2
        }
        fn eval(&self, x: f64, t: &[f64], g: &mut [f64]) -> f64 {
            g[0] = 1.0;
            g[1] = x;
            t[0] + t[1] * x
        }
    }

    #[test]
    fn solves_linear_problem() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.1, 4.9, 7.0];
        let w = [1.0; 4];
        let out = minimize(&Line, &x, &y, &w, &[0.0, 0.0], &LmConfig::default());
        assert!(out.converged, "{}", out.message);
        // ordinary least squares by hand
        assert!((out.theta[1] - 1.98).abs() < 1e-8);
        assert!((out.theta[0] - 1.03).abs() < 1e-8);
    }
}
