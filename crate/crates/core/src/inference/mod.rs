//! Weighted nonlinear least squares for relaxation data.
//!
//! Positive parameters (rates, power-law amplitude, bulk rate) are fitted
//! through their logarithm so the solver stays unconstrained. Uncertainties
//! come from the inverse weighted normal matrix in the fitted
//! parameterization and are mapped back with the delta method.

mod decay;
pub mod lm;
mod power_law;
mod temperature;

use nalgebra::DMatrix;

pub use decay::{default_init, extract_rates, fit_decay, DecayModel, InitialGuess, RateEstimate};
pub use power_law::{fit_power_law, PowerLawFit, PowerLawModel, PowerLawPoint, SURFACE_VISIBILITY};
pub use temperature::{fit_temperature_law, TempLawFit};

use crate::error::{invalid, Result};
use lm::{CurveFn, LmConfig, LmOutcome};

/// Outcome of a nonlinear fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// One standard deviation, `sqrt(diag(covariance))`.
    pub sigmas: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub chi2_reduced: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Why the solver stopped.
    pub message: String,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.values[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.sigmas[i])
    }
}

/// Per-point weights `1/sigma^2`, or unit weights when no sigmas are given.
///
/// Returns whether real sigmas were used.
pub(crate) fn weights_from_sigma(sigma: &[f64], n: usize) -> Result<(Vec<f64>, bool)> {
    if sigma.is_empty() || sigma.iter().all(|&s| s == 0.0) {
        return Ok((vec![1.0; n], false));
    }
    if sigma.len() != n {
        return Err(invalid("sigma column length does not match the data"));
    }
    if let Some(i) = sigma.iter().position(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(invalid(format!(
            "sigma[{i}] = {} but sigmas must be all positive or all absent",
            sigma[i]
        )));
    }
    Ok((sigma.iter().map(|s| 1.0 / (s * s)).collect(), true))
}

/// Runs the solver and maps the outcome to natural parameters.
///
/// `to_natural` maps fitted parameters to reported ones and returns the
/// diagonal of the Jacobian of that map.
pub(crate) fn run_fit<M: CurveFn>(
    model: &M,
    names: &[&str],
    x: &[f64],
    y: &[f64],
    sigma: &[f64],
    theta0: &[f64],
    to_natural: impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>),
) -> Result<FitResult> {
    let n = x.len();
    let p = model.n_params();
    if n < p {
        return Err(invalid(format!(
            "{n} points cannot determine {p} parameters"
        )));
    }
    let (w, has_sigma) = weights_from_sigma(sigma, n)?;
    let out: LmOutcome = lm::minimize(model, x, y, &w, theta0, &LmConfig::default());

    let dof = n - p;
    let chi2_reduced = if dof > 0 {
        out.chi2 / dof as f64
    } else {
        f64::NAN
    };
    let (values, jac) = to_natural(out.theta.as_slice());

    let mut converged = out.converged;
    let mut message = out.message.to_string();
    let cov_internal = match out.normal_matrix.clone().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => {
            let scale = if has_sigma { 1.0 } else { chi2_reduced };
            inv * scale
        }
        _ => {
            converged = false;
            message.push_str("; normal matrix is singular");
            DMatrix::from_element(p, p, f64::INFINITY)
        }
    };
    let mut covariance = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            let v = 0.5 * (cov_internal[(a, b)] + cov_internal[(b, a)]);
            covariance[(a, b)] = jac[a] * v * jac[b];
        }
    }
    let sigmas: Vec<f64> = (0..p).map(|a| covariance[(a, a)].max(0.0).sqrt()).collect();
    if sigmas.iter().any(|s| !s.is_finite()) {
        converged = false;
    }
    Ok(FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        values,
        sigmas,
        covariance,
        chi2: out.chi2,
        chi2_reduced,
        iterations: out.iterations,
        converged,
        message,
    })
}
