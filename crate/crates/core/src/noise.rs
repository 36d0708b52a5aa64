//! Transverse electric-field noise from DQ relaxation rates.
//!
//! The DQ rate above the bulk plateau converts to a field noise intensity
//! through the transverse susceptibility `d_perp / h`:
//!
//! ```text
//! S_E = (gamma - gamma_inf) / (d_perp / h)^2
//! ```
//!
//! With rates in Hz and `d_perp / h` in Hz·m/V the result is in
//! (V/m)²/Hz.

use crate::error::{ensure_finite, invalid, Result};

/// Hz per kHz.
const HZ_PER_KHZ: f64 = 1e3;

/// Ground-state transverse electric susceptibility, Hz·m/V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibility {
    pub d_perp_over_h: f64,
}

impl Susceptibility {
    pub const DEFAULT_HZ_M_PER_V: f64 = 0.4;

    pub fn new(d_perp_over_h: f64) -> Result<Self> {
        if !(d_perp_over_h.is_finite() && d_perp_over_h > 0.0) {
            return Err(invalid(format!(
                "susceptibility must be > 0, got {d_perp_over_h}"
            )));
        }
        Ok(Self { d_perp_over_h })
    }

    /// Converts a rate in kHz to (V/m)²/Hz. Dividing twice keeps decimal
    /// inputs such as 50 kHz at 0.4 Hz·m/V exact.
    fn rate_to_noise(&self, rate_khz: f64) -> f64 {
        rate_khz * HZ_PER_KHZ / self.d_perp_over_h / self.d_perp_over_h
    }
}

impl Default for Susceptibility {
    fn default() -> Self {
        Self {
            d_perp_over_h: Self::DEFAULT_HZ_M_PER_V,
        }
    }
}

/// Noise intensity in (V/m)²/Hz for rates in kHz.
///
/// A rate below the plateau gives a negative value; it is returned as is
/// and reported by [`NoisePoint::is_unphysical`].
pub fn electric_noise(gamma_khz: f64, gamma_inf_khz: f64, sus: &Susceptibility) -> f64 {
    sus.rate_to_noise(gamma_khz - gamma_inf_khz)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePoint {
    /// Splitting frequency, MHz.
    pub f: f64,
    /// (V/m)²/Hz.
    pub s_e_perp: f64,
    /// (V/m)²/Hz.
    pub sigma: f64,
}

impl NoisePoint {
    pub fn is_unphysical(&self) -> bool {
        self.s_e_perp < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    /// Strictly ascending in `f`.
    pub points: Vec<NoisePoint>,
    /// Free-text sample descriptor.
    pub meta: String,
}

impl NoiseSpectrum {
    /// Sorts the points and checks the spectrum invariants.
    pub fn new(mut points: Vec<NoisePoint>, meta: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("spectrum has no points"));
        }
        for (i, p) in points.iter().enumerate() {
            ensure_finite("f", p.f)?;
            ensure_finite("s_e_perp", p.s_e_perp)?;
            if p.f <= 0.0 {
                return Err(invalid(format!("point {i}: f must be > 0, got {}", p.f)));
            }
            if !(p.sigma.is_finite() && p.sigma >= 0.0) {
                return Err(invalid(format!(
                    "point {i}: sigma must be >= 0, got {}",
                    p.sigma
                )));
            }
        }
        points.sort_by(|a, b| a.f.total_cmp(&b.f));
        if let Some(w) = points.windows(2).find(|w| w[0].f == w[1].f) {
            return Err(invalid(format!("duplicate frequency {} MHz", w[0].f)));
        }
        Ok(Self {
            points,
            meta: meta.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.f).collect()
    }

    pub fn unphysical_points(&self) -> impl Iterator<Item = &NoisePoint> {
        self.points.iter().filter(|p| p.is_unphysical())
    }

    /// Every intensity and sigma multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| NoisePoint {
                    f: p.f,
                    s_e_perp: p.s_e_perp * factor,
                    sigma: p.sigma * factor.abs(),
                })
                .collect(),
            meta: self.meta.clone(),
        }
    }
}

/// A measured DQ rate at one splitting, as fed to [`build_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEntry {
    /// MHz.
    pub f: f64,
    /// kHz.
    pub gamma: f64,
    /// kHz.
    pub sigma: f64,
}

/// Converts a gamma table to a noise spectrum.
///
/// Sigmas propagate linearly from the rate sigmas only.
pub fn build_spectrum(
    entries: &[GammaEntry],
    gamma_inf_khz: f64,
    sus: &Susceptibility,
) -> Result<NoiseSpectrum> {
    build_spectrum_with_plateau_error(entries, gamma_inf_khz, 0.0, sus)
}

/// [`build_spectrum`], adding the plateau uncertainty in quadrature.
pub fn build_spectrum_with_plateau_error(
    entries: &[GammaEntry],
    gamma_inf_khz: f64,
    gamma_inf_sigma_khz: f64,
    sus: &Susceptibility,
) -> Result<NoiseSpectrum> {
    ensure_finite("gamma_inf", gamma_inf_khz)?;
    if !(gamma_inf_sigma_khz.is_finite() && gamma_inf_sigma_khz >= 0.0) {
        return Err(invalid("gamma_inf sigma must be >= 0"));
    }
    if entries.is_empty() {
        return Err(invalid("no gamma entries"));
    }
    let points = entries
        .iter()
        .map(|e| NoisePoint {
            f: e.f,
            s_e_perp: electric_noise(e.gamma, gamma_inf_khz, sus),
            sigma: sus.rate_to_noise(e.sigma.hypot(gamma_inf_sigma_khz)),
        })
        .collect();
    NoiseSpectrum::new(points, String::new())
}

/// Passivation-layer comparison of two spectra on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SuppressionReport {
    /// `(f, 100 (1 - coated/raw))` for every point with nonzero raw noise.
    pub per_point: Vec<(f64, f64)>,
    /// Unweighted mean of `per_point`, percent. `None` if every raw point was
    /// zero.
    pub average: Option<f64>,
    /// Frequencies skipped because the raw noise is zero.
    pub excluded: Vec<f64>,
}

/// Frequencies must agree to this many MHz.
pub const GRID_TOLERANCE_MHZ: f64 = 1e-9;

pub fn suppression(raw: &NoiseSpectrum, coated: &NoiseSpectrum) -> Result<SuppressionReport> {
    if raw.len() != coated.len() {
        return Err(invalid(format!(
            "spectra have different lengths ({} vs {})",
            raw.len(),
            coated.len()
        )));
    }
    let mut per_point = Vec::with_capacity(raw.len());
    let mut excluded = Vec::new();
    for (i, (r, c)) in raw.points.iter().zip(&coated.points).enumerate() {
        if (r.f - c.f).abs() > GRID_TOLERANCE_MHZ {
            return Err(invalid(format!(
                "frequency grids differ at point {i}: {} vs {} MHz",
                r.f, c.f
            )));
        }
        if r.s_e_perp == 0.0 {
            excluded.push(r.f);
        } else {
            per_point.push((r.f, 100.0 * (1.0 - c.s_e_perp / r.s_e_perp)));
        }
    }
    let average = if per_point.is_empty() {
        None
    } else {
        Some(per_point.iter().map(|p| p.1).sum::<f64>() / per_point.len() as f64)
    };
    Ok(SuppressionReport {
        per_point,
        average,
        excluded,
    })
}
