use super::lm::CurveFn;
use super::{run_fit, FitResult};
use crate::error::{invalid, Result};
use crate::rate_dynamics::KHZ_US;
use crate::synth::DecayCurve;

/// Exponential decay models for relaxation curves. Rates are in kHz and
/// times in µs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    /// `r exp(-k tau)`.
    SingleExp,
    /// `r exp(-k tau) + c`.
    SingleExpOffset,
}

impl DecayModel {
    pub fn n_params(self) -> usize {
        match self {
            Self::SingleExp => 2,
            Self::SingleExpOffset => 3,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Self::SingleExp => &["amplitude", "rate_khz"],
            Self::SingleExpOffset => &["amplitude", "rate_khz", "offset"],
        }
    }
}

/// Solver parameterization: `(r, ln k[, c])`.
impl CurveFn for DecayModel {
    fn n_params(&self) -> usize {
        DecayModel::n_params(*self)
    }

    fn eval(&self, tau: f64, theta: &[f64], grad: &mut [f64]) -> f64 {
        let r = theta[0];
        let k = theta[1].exp();
        let e = (-k * tau * KHZ_US).exp();
        grad[0] = e;
        grad[1] = -r * k * tau * KHZ_US * e;
        match self {
            Self::SingleExp => r * e,
            Self::SingleExpOffset => {
                grad[2] = 1.0;
                r * e + theta[2]
            }
        }
    }
}

/// Starting point for a decay fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialGuess {
    pub amplitude: f64,
    pub rate_khz: f64,
    pub offset: f64,
    /// True when the log-linear estimate was unusable and the rate fell back
    /// to `1 / tau_max`.
    pub fallback: bool,
}

/// Initial guess from a log-linear regression on baseline-subtracted
/// positive samples.
///
/// The offset guess is the last sample (zero for [`DecayModel::SingleExp`]).
/// The regression weights each sample by its squared height, which keeps
/// the noisy tail from flattening the slope.
pub fn default_init(curve: &DecayCurve, model: DecayModel) -> Result<InitialGuess> {
    if curve.is_empty() {
        return Err(invalid("curve has no points"));
    }
    let offset = match model {
        DecayModel::SingleExp => 0.0,
        DecayModel::SingleExpOffset => *curve.signal.last().unwrap_or(&0.0),
    };
    let amplitude = curve.signal[0] - offset;

    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut used = 0;
    for (&t, &y) in curve.tau.iter().zip(&curve.signal) {
        let z = y - offset;
        if z > 0.0 {
            let (w, ly) = (z * z, z.ln());
            sw += w;
            sx += w * t;
            sy += w * ly;
            sxx += w * t * t;
            sxy += w * t * ly;
            used += 1;
        }
    }
    let denom = sw * sxx - sx * sx;
    let slope = if used >= 2 && denom > 0.0 {
        (sw * sxy - sx * sy) / denom
    } else {
        f64::NAN
    };
    let tau_max = curve.tau.last().copied().unwrap_or(0.0);
    // A slope that does not decay measurably over the window is treated as
    // flat.
    if slope.is_finite() && slope * tau_max < -1e-9 {
        Ok(InitialGuess {
            amplitude,
            rate_khz: -slope / KHZ_US,
            offset,
            fallback: false,
        })
    } else {
        let rate_khz = if tau_max > 0.0 {
            1.0 / (tau_max * KHZ_US)
        } else {
            1.0
        };
        Ok(InitialGuess {
            amplitude,
            rate_khz,
            offset,
            fallback: true,
        })
    }
}

/// Weighted fit of one decay curve.
///
/// With per-point sigmas the covariance is the inverse weighted normal
/// matrix as is; without them it is rescaled by the reduced chi².
pub fn fit_decay(curve: &DecayCurve, model: DecayModel) -> Result<FitResult> {
    curve.validate()?;
    if curve.len() < 3 {
        return Err(invalid(format!(
            "decay fit needs at least 3 points, got {}",
            curve.len()
        )));
    }
    let guess = default_init(curve, model)?;
    let amplitude = if guess.amplitude != 0.0 {
        guess.amplitude
    } else {
        1.0
    };
    let mut theta0 = vec![amplitude, guess.rate_khz.ln()];
    if model == DecayModel::SingleExpOffset {
        theta0.push(guess.offset);
    }
    run_fit(
        &model,
        model.param_names(),
        &curve.tau,
        &curve.signal,
        &curve.sigma,
        &theta0,
        |t| {
            let k = t[1].exp();
            let mut values = vec![t[0], k];
            let mut jac = vec![1.0, k];
            if t.len() == 3 {
                values.push(t[2]);
                jac.push(1.0);
            }
            (values, jac)
        },
    )
}

/// Relaxation rates recovered from an F1/F2 pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// kHz.
    pub omega: f64,
    pub omega_sigma: f64,
    /// kHz, clamped at zero.
    pub gamma: f64,
    pub gamma_sigma: f64,
    /// `(k2 - Omega) / 2` before clamping.
    pub gamma_raw: f64,
    /// Set when the F2 rate is below Omega, i.e. the raw gamma is negative.
    pub unphysical: bool,
    pub f1_fit: FitResult,
    pub f2_fit: FitResult,
}

impl RateEstimate {
    pub fn converged(&self) -> bool {
        self.f1_fit.converged && self.f2_fit.converged
    }
}

/// Fits F1 for `3 Omega` and F2 for `Omega + 2 gamma`, then solves for the
/// two rates, propagating the fit sigmas as independent errors.
pub fn extract_rates(f1: &DecayCurve, f2: &DecayCurve) -> Result<RateEstimate> {
    let fit1 = fit_decay(f1, DecayModel::SingleExp)?;
    let fit2 = fit_decay(f2, DecayModel::SingleExp)?;
    let (k1, s1) = (fit1.values[1], fit1.sigmas[1]);
    let (k2, s2) = (fit2.values[1], fit2.sigmas[1]);
    let omega = k1 / 3.0;
    let omega_sigma = s1 / 3.0;
    let gamma_raw = (k2 - omega) / 2.0;
    let gamma_sigma = 0.5 * s2.hypot(omega_sigma);
    Ok(RateEstimate {
        omega,
        omega_sigma,
        gamma: gamma_raw.max(0.0),
        gamma_sigma,
        gamma_raw,
        unphysical: gamma_raw < 0.0,
        f1_fit: fit1,
        f2_fit: fit2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(tau: &[f64], f: impl Fn(f64) -> f64) -> DecayCurve {
        DecayCurve::new(
            tau.to_vec(),
            tau.iter().map(|&t| f(t)).collect(),
            vec![0.0; tau.len()],
        )
        .unwrap()
    }

    fn grid() -> Vec<f64> {
        (0..30).map(|i| i as f64 * 1.5).collect()
    }

    #[test]
    fn noiseless_recovery() {
        let c = curve(&grid(), |t| (-105.3 * t * 1e-3_f64).exp());
        let fit = fit_decay(&c, DecayModel::SingleExp).unwrap();
        assert!(fit.converged, "{}", fit.message);
        let k = fit.value("rate_khz").unwrap();
        assert!((k - 105.3).abs() / 105.3 < 1e-6, "{k}");
        assert!((fit.value("amplitude").unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn noiseless_recovery_with_offset() {
        let c = curve(&grid(), |t| 0.3 * (-60.0 * t * 1e-3_f64).exp() + 0.8);
        let fit = fit_decay(&c, DecayModel::SingleExpOffset).unwrap();
        assert!(fit.converged, "{}", fit.message);
        assert!((fit.values[1] - 60.0).abs() / 60.0 < 1e-6);
        assert!((fit.values[2] - 0.8).abs() < 1e-6);
    }

    #[test]
    fn flat_curve_is_not_identifiable() {
        let t = grid();
        let c = DecayCurve::new(t.clone(), vec![0.5; t.len()], vec![0.01; t.len()]).unwrap();
        let fit = fit_decay(&c, DecayModel::SingleExp).unwrap();
        let s = fit.sigma("rate_khz").unwrap();
        let k = fit.value("rate_khz").unwrap();
        assert!(
            !fit.converged || !s.is_finite() || s > 1e3 * k.abs(),
            "{fit:?}"
        );
    }

    #[test]
    fn too_few_points() {
        let c = curve(&[0.0, 1.0], |t| (-t).exp());
        assert!(fit_decay(&c, DecayModel::SingleExp).is_err());
        let c = curve(&[0.0, 1.0, 2.0], |t| (-t).exp());
        assert!(fit_decay(&c, DecayModel::SingleExp).is_ok());
    }

    #[test]
    fn mixed_sigmas_rejected() {
        let c = DecayCurve::new(
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.9, 0.8],
            vec![0.1, 0.0, 0.1],
        )
        .unwrap();
        assert!(fit_decay(&c, DecayModel::SingleExp).is_err());
    }

    #[test]
    fn init_exact_exponential() {
        let c = curve(&grid(), |t| 2.0 * (-80.0 * t * 1e-3_f64).exp());
        let g = default_init(&c, DecayModel::SingleExp).unwrap();
        assert!(!g.fallback);
        assert!((g.rate_khz - 80.0).abs() / 80.0 < 0.2);
        assert_eq!(g.amplitude, 2.0);
    }

    #[test]
    fn init_constant_curve_falls_back() {
        let c = curve(&[0.0, 10.0, 20.0, 40.0], |_| 1.0);
        let g = default_init(&c, DecayModel::SingleExpOffset).unwrap();
        assert!(g.fallback);
        assert_eq!(g.rate_khz, 1.0 / (40.0 * 1e-3));
    }

    #[test]
    fn init_two_points() {
        let c = curve(&[0.0, 10.0], |t| (-50.0 * t * 1e-3_f64).exp());
        let g = default_init(&c, DecayModel::SingleExp).unwrap();
        assert!((g.rate_khz - 50.0).abs() < 1e-9);
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        for model in [DecayModel::SingleExp, DecayModel::SingleExpOffset] {
            let theta = [0.7, 4.2, -0.3];
            let theta = &theta[..model.n_params()];
            for tau in [0.0, 3.0, 17.0] {
                let mut g = vec![0.0; theta.len()];
                model.eval(tau, theta, &mut g);
                for j in 0..theta.len() {
                    let h = 1e-6 * theta[j].abs().max(1.0);
                    let mut up = theta.to_vec();
                    let mut dn = theta.to_vec();
                    up[j] += h;
                    dn[j] -= h;
                    let mut scratch = vec![0.0; theta.len()];
                    let fd = (model.eval(tau, &up, &mut scratch)
                        - model.eval(tau, &dn, &mut scratch))
                        / (2.0 * h);
                    let err = (fd - g[j]).abs() / g[j].abs().max(1e-12);
                    assert!(err < 1e-6 || (fd - g[j]).abs() < 1e-12, "{model:?} j={j}");
                }
            }
        }
    }

    #[test]
    fn rates_from_noiseless_pair() {
        let t = grid();
        let f1 = curve(&t, |t| (-3.0 * 35.1 * t * 1e-3_f64).exp());
        let f2 = curve(&t, |t| (-(35.1 + 2.0 * 99.8) * t * 1e-3_f64).exp());
        let est = extract_rates(&f1, &f2).unwrap();
        assert!((est.omega - 35.1).abs() / 35.1 < 1e-6);
        assert!((est.gamma - 99.8).abs() / 99.8 < 1e-6);
        assert!(!est.unphysical);
    }

    #[test]
    fn zero_gamma_pair() {
        let t = grid();
        let f1 = curve(&t, |t| (-3.0 * 35.1 * t * 1e-3_f64).exp());
        let f2 = curve(&t, |t| (-35.1 * t * 1e-3_f64).exp());
        let est = extract_rates(&f1, &f2).unwrap();
        assert!(est.gamma_raw.abs() < 1e-5, "{}", est.gamma_raw);
    }

    #[test]
    fn negative_gamma_is_flagged() {
        let t = grid();
        let f1 = curve(&t, |t| (-3.0 * 35.1 * t * 1e-3_f64).exp());
        let f2 = curve(&t, |t| (-20.0 * t * 1e-3_f64).exp());
        let est = extract_rates(&f1, &f2).unwrap();
        assert!(est.unphysical);
        assert_eq!(est.gamma, 0.0);
        assert!((est.gamma_raw - (20.0 - 35.1) / 2.0).abs() < 1e-5);
    }
}
