//! Spin-1 defect relaxometry.
//!
//! The crate follows a measurement from the spin Hamiltonian to a noise
//! spectrum:
//!
//! - [`spin_model`]: ground-state Hamiltonian, ODMR lines and the
//!   `|-1>`/`|+1>` splitting, implantation depth table.
//! - [`rate_dynamics`]: three-level rate equations, pulse protocols and the
//!   F1/F2 observables, T1.
//! - [`synth`]: seeded synthetic decay curves.
//! - [`inference`]: weighted decay fits, rate extraction, the surface-noise
//!   power law and the temperature law.
//! - [`noise`]: electric-field noise spectra and passivation suppression.
//! - [`io`] and [`cli`]: file formats, reports and the `spinrelax` command.
//!
//! ```
//! use spinrelax::rate_dynamics::{f1_signal, f2_signal, RateParams, ReadoutModel};
//! use spinrelax::synth::{paired_f1_f2, linear_tau_grid, AcquisitionConfig};
//! use spinrelax::inference::extract_rates;
//!
//! let rates = RateParams::new(35.1, 99.8)?;
//! let acq = AcquisitionConfig {
//!     tau_grid: linear_tau_grid(0.0, 30.0, 31)?,
//!     shots: 1,
//!     noise_scale: 0.0,
//!     seed: 7,
//! };
//! let (f1, f2) = paired_f1_f2(&rates, &ReadoutModel::default(), &acq)?;
//! let est = extract_rates(&f1, &f2)?;
//! assert!((est.omega - 35.1).abs() < 1e-4);
//! assert!((est.gamma - 99.8).abs() < 1e-4);
//! # Ok::<(), spinrelax::Error>(())
//! ```

pub mod cli;
mod error;
pub mod inference;
pub mod io;
pub mod noise;
pub mod rate_dynamics;
pub mod spin_model;
pub mod synth;

pub use error::{Error, Result};

// Code blocks in the guide under book/ are compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spin-levels.md")]
    mod spin_levels {}
    #[doc = include_str!("../../../book/src/rate-dynamics.md")]
    mod rate_dynamics {}
    #[doc = include_str!("../../../book/src/synthetic-data.md")]
    mod synthetic_data {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/noise-spectra.md")]
    mod noise_spectra {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
