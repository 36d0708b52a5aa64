use super::lm::CurveFn;
use super::{run_fit, FitResult};
use crate::error::{ensure_finite, invalid, Result};

/// One DQ-rate measurement at splitting `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawPoint {
    /// MHz.
    pub f: f64,
    /// kHz.
    pub gamma: f64,
    /// kHz; zero when unknown.
    pub sigma: f64,
}

/// `gamma(f) = A / (f - 2E)^a + gamma_inf`.
///
/// Solver parameterization is `(ln A, a, ln gamma_inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawModel {
    /// MHz.
    pub e_mhz: f64,
}

impl PowerLawModel {
    /// Evaluates the model in natural parameters.
    pub fn gamma(&self, f: f64, amplitude: f64, exponent: f64, gamma_inf: f64) -> f64 {
        amplitude * (f - 2.0 * self.e_mhz).powf(-exponent) + gamma_inf
    }
}

impl CurveFn for PowerLawModel {
    fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, f: f64, theta: &[f64], grad: &mut [f64]) -> f64 {
        let lx = (f - 2.0 * self.e_mhz).ln();
        let surface = (theta[0] - theta[1] * lx).exp();
        let bulk = theta[2].exp();
        grad[0] = surface;
        grad[1] = -lx * surface;
        grad[2] = bulk;
        surface + bulk
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    /// kHz·MHz^a.
    pub amplitude: f64,
    pub exponent: f64,
    /// kHz.
    pub gamma_inf: f64,
    /// MHz.
    pub e_used: f64,
    /// Set when the fit did not converge or the exponent is unconstrained
    /// (its sigma is not finite or exceeds `max(1, |a|)`).
    pub near_degenerate: bool,
    pub fit: FitResult,
}

impl PowerLawFit {
    pub fn amplitude_sigma(&self) -> f64 {
        self.fit.sigmas[0]
    }

    pub fn exponent_sigma(&self) -> f64 {
        self.fit.sigmas[1]
    }

    pub fn gamma_inf_sigma(&self) -> f64 {
        self.fit.sigmas[2]
    }

    pub fn model(&self) -> PowerLawModel {
        PowerLawModel { e_mhz: self.e_used }
    }

    /// Fitted rate at splitting `f`, kHz.
    pub fn predict(&self, f: f64) -> f64 {
        self.model()
            .gamma(f, self.amplitude, self.exponent, self.gamma_inf)
    }
}

/// Relative size the surface term must reach at one or more points for the
/// exponent to count as identifiable.
pub const SURFACE_VISIBILITY: f64 = 1e-6;

/// Weighted fit of the surface-noise power law plus bulk plateau.
///
/// The start point is `gamma_inf = min gamma`, `a = 2`, and `A` matched to
/// the two extreme-frequency points.
pub fn fit_power_law(points: &[PowerLawPoint], e_mhz: f64) -> Result<PowerLawFit> {
    ensure_finite("e_mhz", e_mhz)?;
    if points.len() < 4 {
        return Err(invalid(format!(
            "power-law fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    for (i, p) in points.iter().enumerate() {
        ensure_finite("f", p.f)?;
        ensure_finite("gamma", p.gamma)?;
        if p.f <= 2.0 * e_mhz {
            return Err(invalid(format!(
                "point {i}: f = {} MHz is not above 2E = {} MHz",
                p.f,
                2.0 * e_mhz
            )));
        }
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.f.total_cmp(&b.f));
    let model = PowerLawModel { e_mhz };

    let max_gamma = sorted.iter().map(|p| p.gamma.abs()).fold(0.0, f64::max);
    let floor = 1e-6 * max_gamma.max(1e-6);
    let min_gamma = sorted.iter().map(|p| p.gamma).fold(f64::INFINITY, f64::min);
    let gamma_inf0 = min_gamma.max(floor);
    let exponent0 = 2.0;
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let x_lo = lo.f - 2.0 * e_mhz;
    let x_hi = hi.f - 2.0 * e_mhz;
    let a0 = (lo.gamma - hi.gamma) / (x_lo.powf(-exponent0) - x_hi.powf(-exponent0));
    let a0 = if a0.is_finite() && a0 > 0.0 {
        a0
    } else {
        floor * x_lo.powf(exponent0)
    };

    let f: Vec<f64> = sorted.iter().map(|p| p.f).collect();
    let g: Vec<f64> = sorted.iter().map(|p| p.gamma).collect();
    let s: Vec<f64> = sorted.iter().map(|p| p.sigma).collect();
    let fit = run_fit(
        &model,
        &["amplitude", "exponent", "gamma_inf_khz"],
        &f,
        &g,
        &s,
        &[a0.ln(), exponent0, gamma_inf0.ln()],
        |t| {
            let (a, b) = (t[0].exp(), t[2].exp());
            (vec![a, t[1], b], vec![a, 1.0, b])
        },
    )?;
    let exp_sigma = fit.sigmas[1];
    // With noiseless data and no sigmas the chi²-scaled covariance vanishes,
    // so also check that the surface term is visible at some point at all.
    let surface_visible = f.iter().any(|&fi| {
        let surface = fit.values[0] * (fi - 2.0 * e_mhz).powf(-fit.values[1]);
        surface > SURFACE_VISIBILITY * (surface + fit.values[2])
    });
    let near_degenerate = !fit.converged
        || !exp_sigma.is_finite()
        || exp_sigma > fit.values[1].abs().max(1.0)
        || !surface_visible;
    Ok(PowerLawFit {
        amplitude: fit.values[0],
        exponent: fit.values[1],
        gamma_inf: fit.values[2],
        e_used: e_mhz,
        near_degenerate,
        fit,
    })
}
