//! Classical three-level relaxation model and the pulse protocols that
//! isolate its two rates.
//!
//! Rates are in kHz and times in µs, so every exponent is
//! `rate * tau * 1e-3`. Populations are ordered `(p_-1, p_0, p_+1)`.
//!
//! The generator couples `|0>` to each of `|+-1>` with rate `Omega` and
//! `|+1>` to `|-1>` with rate `gamma`:
//!
//! ```text
//!       [ -Omega-gamma   Omega    gamma       ]
//! G  =  [  Omega        -2 Omega  Omega       ]
//!       [  gamma         Omega   -Omega-gamma ]
//! ```
//!
//! Its eigenvectors are the uniform vector (eigenvalue 0), `(1, -2, 1)`
//! (eigenvalue `-3 Omega`) and `(1, 0, -1)` (eigenvalue `-(Omega + 2 gamma)`).

use nalgebra::{Matrix3, Vector3};

use crate::error::{ensure_finite, invalid, Error, Result};

/// Converts `kHz * µs` to a dimensionless exponent.
pub const KHZ_US: f64 = 1e-3;

/// The two relaxation rates, kHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Single-quantum rate between `|0>` and `|+-1>`.
    pub omega: f64,
    /// Double-quantum rate between `|+1>` and `|-1>`.
    pub gamma: f64,
}

impl RateParams {
    pub fn new(omega: f64, gamma: f64) -> Result<Self> {
        let r = Self { omega, gamma };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("omega", self.omega)?;
        ensure_finite("gamma", self.gamma)?;
        if self.omega < 0.0 || self.gamma < 0.0 {
            return Err(invalid(format!(
                "rates must be >= 0, got omega={} gamma={}",
                self.omega, self.gamma
            )));
        }
        Ok(())
    }

    /// Decay rate of the F1 observable, `3 Omega`.
    pub fn sq_mode_rate(&self) -> f64 {
        3.0 * self.omega
    }

    /// Decay rate of the F2 observable, `Omega + 2 gamma`.
    pub fn dq_mode_rate(&self) -> f64 {
        self.omega + 2.0 * self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations {
    pub p_minus: f64,
    pub p_zero: f64,
    pub p_plus: f64,
}

impl Populations {
    pub const POLARIZED: Self = Self {
        p_minus: 0.0,
        p_zero: 1.0,
        p_plus: 0.0,
    };
    pub const UNIFORM: Self = Self {
        p_minus: 1.0 / 3.0,
        p_zero: 1.0 / 3.0,
        p_plus: 1.0 / 3.0,
    };

    pub fn new(p_minus: f64, p_zero: f64, p_plus: f64) -> Result<Self> {
        let p = Self {
            p_minus,
            p_zero,
            p_plus,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        const TOL: f64 = 1e-9;
        for (name, v) in [
            ("p_minus", self.p_minus),
            ("p_zero", self.p_zero),
            ("p_plus", self.p_plus),
        ] {
            ensure_finite(name, v)?;
            if !(-TOL..=1.0 + TOL).contains(&v) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        let sum = self.total();
        if (sum - 1.0).abs() > TOL {
            return Err(invalid(format!("populations must sum to 1, got {sum}")));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.p_minus + self.p_zero + self.p_plus
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.p_minus, self.p_zero, self.p_plus)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self {
            p_minus: v[0],
            p_zero: v[1],
            p_plus: v[2],
        }
    }
}

/// Rate generator `G` in kHz, with `dp/dt = G p`.
pub fn rate_generator(rates: &RateParams) -> Matrix3<f64> {
    let (o, g) = (rates.omega, rates.gamma);
    Matrix3::new(
        -o - g,
        o,
        g, //
        o,
        -2.0 * o,
        o, //
        g,
        o,
        -o - g,
    )
}

fn ensure_time(tau: f64) -> Result<()> {
    ensure_finite("tau", tau)?;
    if tau < 0.0 {
        return Err(invalid(format!("tau must be >= 0, got {tau}")));
    }
    Ok(())
}

/// Exact evolution for `tau` µs via the generator's three eigenmodes.
pub fn evolve_analytic(p: &Populations, rates: &RateParams, tau: f64) -> Result<Populations> {
    rates.validate()?;
    ensure_time(tau)?;
    let mean = p.total() / 3.0;
    // p = mean (1,1,1) + a (1,-2,1) + b (1,0,-1)
    let a = (p.p_minus - 2.0 * p.p_zero + p.p_plus) / 6.0;
    let b = (p.p_minus - p.p_plus) / 2.0;
    let a_t = a * (-rates.sq_mode_rate() * tau * KHZ_US).exp();
    let b_t = b * (-rates.dq_mode_rate() * tau * KHZ_US).exp();
    Ok(Populations {
        p_minus: mean + a_t + b_t,
        p_zero: mean - 2.0 * a_t,
        p_plus: mean + a_t - b_t,
    })
}

/// Fixed-step classical RK4 integration of `dp/dt = G p`.
///
/// The interval is split into `ceil(tau / step)` equal steps.
pub fn evolve_numeric(
    p: &Populations,
    rates: &RateParams,
    tau: f64,
    step: f64,
) -> Result<Populations> {
    rates.validate()?;
    ensure_time(tau)?;
    ensure_finite("step", step)?;
    if step <= 0.0 {
        return Err(invalid(format!("step must be > 0, got {step}")));
    }
    if tau == 0.0 {
        return Ok(*p);
    }
    let g = rate_generator(rates) * KHZ_US;
    let n = (tau / step).ceil().max(1.0) as usize;
    let h = tau / n as f64;
    let mut y = p.to_vector();
    for _ in 0..n {
        let k1 = g * y;
        let k2 = g * (y + k1 * (h / 2.0));
        let k3 = g * (y + k2 * (h / 2.0));
        let k4 = g * (y + k3 * h);
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(Populations::from_vector(&y))
}

/// State preparation after optical polarization into `|0>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPulse {
    PolarizeOnly,
    PolarizeThenPiPlus,
    PolarizeThenPiMinus,
}

/// Operation applied before the optical readout of `|0>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadPulse {
    Direct,
    PiPlusThenRead,
    PiMinusThenRead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub init: InitPulse,
    pub read: ReadPulse,
    pub label: String,
}

impl Protocol {
    pub fn new(init: InitPulse, read: ReadPulse) -> Self {
        Self {
            init,
            read,
            label: format!("{init:?}/{read:?}"),
        }
    }
}

/// Maps populations to the optical signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutModel {
    /// Contrast `r`.
    pub amplitude: f64,
    pub baseline: f64,
    /// Probability that a pi pulse performs the full swap.
    pub pulse_fidelity: f64,
}

impl ReadoutModel {
    pub fn new(amplitude: f64, baseline: f64, pulse_fidelity: f64) -> Result<Self> {
        let m = Self {
            amplitude,
            baseline,
            pulse_fidelity,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("amplitude", self.amplitude)?;
        ensure_finite("baseline", self.baseline)?;
        ensure_finite("pulse_fidelity", self.pulse_fidelity)?;
        if self.amplitude <= 0.0 {
            return Err(invalid(format!(
                "amplitude must be > 0, got {}",
                self.amplitude
            )));
        }
        if !(0.0..=1.0).contains(&self.pulse_fidelity) {
            return Err(invalid(format!(
                "pulse_fidelity must lie in [0, 1], got {}",
                self.pulse_fidelity
            )));
        }
        Ok(())
    }
}

impl Default for ReadoutModel {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            baseline: 0.0,
            pulse_fidelity: 1.0,
        }
    }
}

/// Population swap between `|0>` and `target`, mixed with the identity by
/// `1 - fidelity`.
fn pi_pulse(p: Populations, target: usize, fidelity: f64) -> Populations {
    let mut v = p.to_vector();
    let (zero, other) = (v[1], v[target]);
    v[1] = fidelity * other + (1.0 - fidelity) * zero;
    v[target] = fidelity * zero + (1.0 - fidelity) * other;
    Populations::from_vector(&v)
}

/// Signal of a single pulse sequence after a dark time of `tau` µs.
pub fn simulate_protocol(
    protocol: &Protocol,
    rates: &RateParams,
    readout: &ReadoutModel,
    tau: f64,
) -> Result<f64> {
    readout.validate()?;
    let fid = readout.pulse_fidelity;
    let start = match protocol.init {
        InitPulse::PolarizeOnly => Populations::POLARIZED,
        InitPulse::PolarizeThenPiPlus => pi_pulse(Populations::POLARIZED, 2, fid),
        InitPulse::PolarizeThenPiMinus => pi_pulse(Populations::POLARIZED, 0, fid),
    };
    let evolved = evolve_analytic(&start, rates, tau)?;
    let read = match protocol.read {
        ReadPulse::Direct => evolved,
        ReadPulse::PiPlusThenRead => pi_pulse(evolved, 2, fid),
        ReadPulse::PiMinusThenRead => pi_pulse(evolved, 0, fid),
    };
    Ok(readout.baseline + readout.amplitude * read.p_zero)
}

/// `S[init |0>, read |0>] - S[init |+1>, read |0>]`; equals
/// `r exp(-3 Omega tau)` for perfect pulses.
pub fn f1_signal(rates: &RateParams, readout: &ReadoutModel, tau: f64) -> Result<f64> {
    let a = simulate_protocol(
        &Protocol::new(InitPulse::PolarizeOnly, ReadPulse::Direct),
        rates,
        readout,
        tau,
    )?;
    let b = simulate_protocol(
        &Protocol::new(InitPulse::PolarizeThenPiPlus, ReadPulse::Direct),
        rates,
        readout,
        tau,
    )?;
    Ok(a - b)
}

/// `S[init |+1>, read |+1>] - S[init |+1>, read |-1>]`; equals
/// `r exp(-(2 gamma + Omega) tau)` for perfect pulses.
pub fn f2_signal(rates: &RateParams, readout: &ReadoutModel, tau: f64) -> Result<f64> {
    let a = simulate_protocol(
        &Protocol::new(InitPulse::PolarizeThenPiPlus, ReadPulse::PiPlusThenRead),
        rates,
        readout,
        tau,
    )?;
    let b = simulate_protocol(
        &Protocol::new(InitPulse::PolarizeThenPiPlus, ReadPulse::PiMinusThenRead),
        rates,
        readout,
        tau,
    )?;
    Ok(a - b)
}

/// Full relaxation time `1 / (3 Omega + gamma)`, µs.
pub fn t1_full(rates: &RateParams) -> Result<f64> {
    rates.validate()?;
    let total = 3.0 * rates.omega + rates.gamma;
    if total <= 0.0 {
        return Err(Error::UndefinedRate(
            "3 * omega + gamma must be > 0".to_string(),
        ));
    }
    Ok(1.0 / (total * KHZ_US))
}

/// Conventional relaxation time `1 / (3 Omega)` that ignores `gamma`, µs.
pub fn t1_conventional(rates: &RateParams) -> Result<f64> {
    rates.validate()?;
    if rates.omega <= 0.0 {
        return Err(Error::UndefinedRate("omega must be > 0".to_string()));
    }
    Ok(1.0 / (3.0 * rates.omega * KHZ_US))
}
