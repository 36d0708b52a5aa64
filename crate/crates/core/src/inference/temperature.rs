use crate::error::{ensure_finite, invalid, Result};

/// Power law `1/T1 = exp(log_prefactor) * T^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempLawFit {
    pub exponent: f64,
    pub exponent_sigma: f64,
    pub log_prefactor: f64,
    pub log_prefactor_sigma: f64,
    pub n_points: usize,
}

impl TempLawFit {
    /// Predicted `1/T1` (kHz) at `t_kelvin`.
    pub fn predict(&self, t_kelvin: f64) -> f64 {
        (self.log_prefactor + self.exponent * t_kelvin.ln()).exp()
    }
}

/// Ordinary least squares of `ln(1/T1)` against `ln T`.
///
/// Standard errors come from the residual variance and are zero for two
/// points.
pub fn fit_temperature_law(points: &[(f64, f64)]) -> Result<TempLawFit> {
    if points.len() < 2 {
        return Err(invalid(format!(
            "temperature fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for (i, &(t, rate)) in points.iter().enumerate() {
        ensure_finite("temperature", t)?;
        ensure_finite("inv_t1", rate)?;
        if t <= 0.0 || rate <= 0.0 {
            return Err(invalid(format!(
                "point {i}: temperature and rate must be > 0, got ({t}, {rate})"
            )));
        }
        xs.push(t.ln());
        ys.push(rate.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(invalid("temperatures must not all be equal"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_se, intercept_se) = if points.len() > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        let s2 = ssr / (n - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(TempLawFit {
        exponent: slope,
        exponent_sigma: slope_se,
        log_prefactor: intercept,
        log_prefactor_sigma: intercept_se,
        n_points: points.len(),
    })
}
