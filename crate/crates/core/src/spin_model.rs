//! Ground-state spin-1 Hamiltonian and its level structure.
//!
//! Everything in this module works in ordinary frequency units (MHz) and in
//! the fixed basis `{|-1>, |0>, |+1>}`: row/column 0 is `m_s = -1`, row/column
//! 1 is `m_s = 0` and row/column 2 is `m_s = +1`. In that basis
//!
//! ```text
//! Sz = diag(-1, 0, 1)
//! Sx = 1/sqrt(2) [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
//! Sy = 1/sqrt(2) [[0, i, 0], [-i, 0, i], [0, -i, 0]]
//! ```
//!
//! and the Hamiltonian is
//!
//! ```text
//! H = D (Sz^2 - 2/3) + E (Sx^2 - Sy^2) + g (mu_B / h) B . S
//! ```

use nalgebra::{Complex, Matrix3, Vector3};

use crate::error::{ensure_finite, invalid, Error, Result};

pub type Complex64 = Complex<f64>;

/// 3x3 complex Hermitian matrix in MHz, basis `{|-1>, |0>, |+1>}`.
pub type Hamiltonian = Matrix3<Complex64>;

/// Index of `|-1>` in the basis.
pub const M_MINUS: usize = 0;
/// Index of `|0>` in the basis.
pub const M_ZERO: usize = 1;
/// Index of `|+1>` in the basis.
pub const M_PLUS: usize = 2;

/// Fixed physical constants used by the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    bohr_frequency_per_gauss: f64,
}

impl PhysicalConstants {
    /// Bohr magneton over Planck's constant, in MHz per gauss.
    pub const BOHR_MHZ_PER_GAUSS: f64 = 1.3996245;

    pub const fn new() -> Self {
        Self {
            bohr_frequency_per_gauss: Self::BOHR_MHZ_PER_GAUSS,
        }
    }

    pub const fn bohr_frequency_per_gauss(&self) -> f64 {
        self.bohr_frequency_per_gauss
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// Static constants of one defect ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectParams {
    /// Axial zero-field splitting `D`, MHz.
    pub d_gs: f64,
    /// Transverse zero-field splitting `E`, MHz.
    pub e_gs: f64,
    pub g_factor: f64,
    /// Defect depth below the surface, nm.
    pub depth: Option<f64>,
    pub label: String,
}

impl DefectParams {
    pub const DEFAULT_D_MHZ: f64 = 3480.0;
    pub const DEFAULT_E_MHZ: f64 = 48.0;
    pub const DEFAULT_G: f64 = 2.0;

    pub fn new(d_gs: f64, e_gs: f64) -> Result<Self> {
        let p = Self {
            d_gs,
            e_gs,
            g_factor: Self::DEFAULT_G,
            depth: None,
            label: String::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_g_factor(mut self, g: f64) -> Result<Self> {
        self.g_factor = g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_depth(mut self, depth_nm: f64) -> Result<Self> {
        self.depth = Some(depth_nm);
        self.validate()?;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("d_gs", self.d_gs)?;
        ensure_finite("e_gs", self.e_gs)?;
        ensure_finite("g_factor", self.g_factor)?;
        if self.d_gs <= 0.0 {
            return Err(invalid(format!("d_gs must be > 0, got {}", self.d_gs)));
        }
        if self.e_gs < 0.0 {
            return Err(invalid(format!("e_gs must be >= 0, got {}", self.e_gs)));
        }
        if self.g_factor <= 0.0 {
            return Err(invalid(format!(
                "g_factor must be > 0, got {}",
                self.g_factor
            )));
        }
        if let Some(depth) = self.depth {
            if !(depth.is_finite() && depth > 0.0) {
                return Err(invalid(format!("depth must be > 0, got {depth}")));
            }
        }
        Ok(())
    }

    /// Electron Zeeman frequency per gauss, `g * mu_B / h`, MHz/G.
    pub fn gyromagnetic_mhz_per_gauss(&self) -> f64 {
        self.g_factor * PhysicalConstants::BOHR_MHZ_PER_GAUSS
    }
}

impl Default for DefectParams {
    fn default() -> Self {
        Self {
            d_gs: Self::DEFAULT_D_MHZ,
            e_gs: Self::DEFAULT_E_MHZ,
            g_factor: Self::DEFAULT_G,
            depth: None,
            label: String::new(),
        }
    }
}

/// Static magnetic field, given in spherical coordinates about the c-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    /// Gauss.
    pub b_magnitude: f64,
    /// Radians from the c-axis.
    pub polar_angle: f64,
    /// Radians.
    pub azimuth: f64,
}

impl FieldConfig {
    /// Field of `b_gauss` along the c-axis.
    pub fn axial(b_gauss: f64) -> Result<Self> {
        Self::new(b_gauss, 0.0, 0.0)
    }

    pub fn new(b_magnitude: f64, polar_angle: f64, azimuth: f64) -> Result<Self> {
        let f = Self {
            b_magnitude,
            polar_angle,
            azimuth,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("b_magnitude", self.b_magnitude)?;
        ensure_finite("polar_angle", self.polar_angle)?;
        ensure_finite("azimuth", self.azimuth)?;
        if self.b_magnitude < 0.0 {
            return Err(invalid(format!(
                "b_magnitude must be >= 0, got {}",
                self.b_magnitude
            )));
        }
        Ok(())
    }

    /// True when the field has no component transverse to the c-axis.
    pub fn is_axial(&self) -> bool {
        self.b_magnitude == 0.0 || self.polar_angle.sin().abs() < 1e-12
    }

    /// Cartesian components `(Bx, By, Bz)` in gauss.
    pub fn components(&self) -> [f64; 3] {
        let (st, ct) = self.polar_angle.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        let b = self.b_magnitude;
        [b * st * cp, b * st * sp, b * ct]
    }

    /// Signed field along the c-axis, gauss. Exact for axial fields.
    fn axial_component(&self) -> f64 {
        if self.polar_angle == 0.0 {
            self.b_magnitude
        } else {
            self.b_magnitude * self.polar_angle.cos()
        }
    }
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            b_magnitude: 0.0,
            polar_angle: 0.0,
            azimuth: 0.0,
        }
    }
}

/// Eigen-decomposition of a spin Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinLevels {
    /// Level energies in MHz, ascending.
    pub energies: [f64; 3],
    /// Normalized eigenvectors, `states[i]` belongs to `energies[i]`.
    pub states: [Vector3<Complex64>; 3],
}

impl SpinLevels {
    /// Energies measured from the lowest level.
    pub fn relative_energies(&self) -> [f64; 3] {
        let e0 = self.energies[0];
        self.energies.map(|e| e - e0)
    }

    /// Index of the level with the largest `|0>` weight.
    pub fn zero_like_index(&self) -> usize {
        (0..3)
            .max_by(|&a, &b| {
                let wa = self.states[a][M_ZERO].norm_sqr();
                let wb = self.states[b][M_ZERO].norm_sqr();
                wa.total_cmp(&wb)
            })
            .unwrap_or(0)
    }

    fn sorted(mut pairs: Vec<(f64, Vector3<Complex64>)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            energies: [pairs[0].0, pairs[1].0, pairs[2].0],
            states: [pairs[0].1, pairs[1].1, pairs[2].1],
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Spin-1 operators `(Sx, Sy, Sz)` in the `{|-1>, |0>, |+1>}` basis.
pub fn spin_operators() -> [Matrix3<Complex64>; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0);
    let sx = Matrix3::new(z, c(s), z, c(s), z, c(s), z, c(s), z);
    let i = Complex64::new(0.0, s);
    let sy = Matrix3::new(z, i, z, -i, z, i, z, -i, z);
    let sz = Matrix3::from_diagonal(&Vector3::new(c(-1.0), z, c(1.0)));
    [sx, sy, sz]
}

/// Builds the ground-state Hamiltonian in MHz.
pub fn build_hamiltonian(params: &DefectParams, field: &FieldConfig) -> Result<Hamiltonian> {
    params.validate()?;
    field.validate()?;
    let d = params.d_gs;
    let e = params.e_gs;
    let gamma_e = params.gyromagnetic_mhz_per_gauss();
    let [bx, by, bz] = field.components();
    let (bx, by, bz) = (gamma_e * bx, gamma_e * by, gamma_e * bz);

    // Written out element by element rather than via operator products so
    // the zero-field part is exactly traceless.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = Hamiltonian::zeros();
    h[(M_MINUS, M_MINUS)] = c(d / 3.0 - bz);
    h[(M_ZERO, M_ZERO)] = c(-2.0 * d / 3.0);
    h[(M_PLUS, M_PLUS)] = c(d / 3.0 + bz);
    h[(M_MINUS, M_PLUS)] = c(e);
    h[(M_PLUS, M_MINUS)] = c(e);
    // <-1| (Bx Sx + By Sy) |0> = (Bx + i By)/sqrt(2), <0|..|+1> likewise.
    let off = Complex64::new(s * bx, s * by);
    h[(M_MINUS, M_ZERO)] = off;
    h[(M_ZERO, M_MINUS)] = off.conj();
    h[(M_ZERO, M_PLUS)] = off;
    h[(M_PLUS, M_ZERO)] = off.conj();
    Ok(h)
}

fn hermiticity_defect(h: &Hamiltonian) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..3 {
        for k in 0..3 {
            worst = worst.max((h[(r, k)] - h[(k, r)].conj()).norm());
        }
    }
    worst
}

/// General Hermitian eigensolve of a 3x3 Hamiltonian.
pub fn spin_levels(h: &Hamiltonian) -> Result<SpinLevels> {
    if h.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(invalid("Hamiltonian has non-finite entries"));
    }
    let defect = hermiticity_defect(h);
    if defect > 1e-9 {
        return Err(invalid(format!(
            "matrix is not Hermitian (max |H - H^dagger| = {defect:e})"
        )));
    }
    let herm = (h + h.adjoint()).map(|z| z * 0.5);
    let eig = herm.symmetric_eigen();
    let pairs = (0..3)
        .map(|i| {
            let v: Vector3<Complex64> = eig.eigenvectors.column(i).into_owned();
            (eig.eigenvalues[i], v.normalize())
        })
        .collect();
    Ok(SpinLevels::sorted(pairs))
}

/// Closed-form levels for a field along the c-axis.
///
/// `|0>` decouples at `-2D/3`; the `{|-1>, |+1>}` block has eigenvalues
/// `D/3 +- sqrt(b^2 + E^2)` with `b` the Zeeman frequency.
pub fn axial_levels(params: &DefectParams, field: &FieldConfig) -> Result<SpinLevels> {
    params.validate()?;
    field.validate()?;
    if !field.is_axial() {
        return Err(invalid("axial_levels requires a field along the c-axis"));
    }
    let d = params.d_gs;
    let e = params.e_gs;
    let b = params.gyromagnetic_mhz_per_gauss() * field.axial_component();
    let rho = b.hypot(e);

    let zero = c(0.0);
    let basis = |minus: f64, plus: f64| {
        let n = minus.hypot(plus);
        Vector3::new(c(minus / n), zero, c(plus / n))
    };
    let (upper, lower) = if rho == 0.0 {
        (basis(0.0, 1.0), basis(1.0, 0.0))
    } else if b >= 0.0 {
        (basis(e, rho + b), basis(rho + b, -e))
    } else {
        (basis(rho - b, e), basis(e, b - rho))
    };
    let zero_state = Vector3::new(zero, c(1.0), zero);
    Ok(SpinLevels::sorted(vec![
        (-2.0 * d / 3.0, zero_state),
        (d / 3.0 - rho, lower),
        (d / 3.0 + rho, upper),
    ]))
}

/// The two ODMR lines, MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdmrLines {
    pub nu_minus: f64,
    pub nu_plus: f64,
}

/// Transition frequencies out of the `|0>`-like level and the splitting
/// between the two other levels.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Transitions {
    lines: OdmrLines,
    splitting: f64,
}

fn transitions_from_levels(levels: &SpinLevels) -> Transitions {
    let z = levels.zero_like_index();
    let mut others: Vec<f64> = (0..3)
        .filter(|&i| i != z)
        .map(|i| levels.energies[i])
        .collect();
    others.sort_by(f64::total_cmp);
    let e0 = levels.energies[z];
    let mut nu = [(others[0] - e0).abs(), (others[1] - e0).abs()];
    nu.sort_by(f64::total_cmp);
    Transitions {
        lines: OdmrLines {
            nu_minus: nu[0],
            nu_plus: nu[1],
        },
        splitting: others[1] - others[0],
    }
}

fn transitions(params: &DefectParams, field: &FieldConfig) -> Result<Transitions> {
    params.validate()?;
    field.validate()?;
    if field.is_axial() {
        let d = params.d_gs;
        let b = params.gyromagnetic_mhz_per_gauss() * field.axial_component();
        let rho = b.hypot(params.e_gs);
        let mut nu = [(d - rho).abs(), d + rho];
        nu.sort_by(f64::total_cmp);
        Ok(Transitions {
            lines: OdmrLines {
                nu_minus: nu[0],
                nu_plus: nu[1],
            },
            splitting: 2.0 * rho,
        })
    } else {
        let h = build_hamiltonian(params, field)?;
        Ok(transitions_from_levels(&spin_levels(&h)?))
    }
}

/// ODMR resonance frequencies from the `|0>`-like level, ascending.
///
/// Axial fields use the closed form; other orientations go through the
/// general eigensolve.
pub fn odmr_frequencies(params: &DefectParams, field: &FieldConfig) -> Result<OdmrLines> {
    Ok(transitions(params, field)?.lines)
}

/// Same as [`odmr_frequencies`] but always through the general eigensolve.
pub fn odmr_frequencies_numeric(params: &DefectParams, field: &FieldConfig) -> Result<OdmrLines> {
    let h = build_hamiltonian(params, field)?;
    Ok(transitions_from_levels(&spin_levels(&h)?).lines)
}

/// Energy splitting between the two non-`|0>` levels, MHz.
///
/// Below the level anticrossing (`sqrt(b^2 + E^2) < D`) this is
/// `nu_plus - nu_minus`.
pub fn dq_splitting(params: &DefectParams, field: &FieldConfig) -> Result<f64> {
    Ok(transitions(params, field)?.splitting)
}

/// [`dq_splitting`] through the general eigensolve.
pub fn dq_splitting_numeric(params: &DefectParams, field: &FieldConfig) -> Result<f64> {
    let h = build_hamiltonian(params, field)?;
    Ok(transitions_from_levels(&spin_levels(&h)?).splitting)
}

/// Bare Zeeman splitting `2 g (mu_B/h) |B|`, MHz, ignoring `E`.
pub fn zeeman_splitting(params: &DefectParams, field: &FieldConfig) -> Result<f64> {
    params.validate()?;
    field.validate()?;
    Ok(2.0 * params.gyromagnetic_mhz_per_gauss() * field.b_magnitude)
}

/// Which frequency plays the role of the splitting `f` in the noise model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplittingConvention {
    /// `nu_plus - nu_minus` of the full Hamiltonian.
    #[default]
    Odmr,
    /// `2 g mu_B B / h`.
    Zeeman,
}

impl SplittingConvention {
    pub fn splitting(self, params: &DefectParams, field: &FieldConfig) -> Result<f64> {
        match self {
            Self::Odmr => dq_splitting(params, field),
            Self::Zeeman => zeeman_splitting(params, field),
        }
    }
}

/// Implantation energy (keV) to most probable depth (nm) anchor points.
pub const IMPLANT_DEPTH_TABLE: [(f64, f64); 3] = [(2.5, 4.8), (5.0, 9.2), (7.5, 14.5)];

/// Piecewise-linear depth for an implantation energy in keV.
///
/// No extrapolation beyond the table.
pub fn depth_for_energy(implant_kev: f64) -> Result<f64> {
    let (lo, hi) = (IMPLANT_DEPTH_TABLE[0].0, IMPLANT_DEPTH_TABLE[2].0);
    if !(implant_kev >= lo && implant_kev <= hi) {
        return Err(Error::OutOfRange {
            value: implant_kev,
            min: lo,
            max: hi,
        });
    }
    for w in IMPLANT_DEPTH_TABLE.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if implant_kev <= x1 {
            let t = (implant_kev - x0) / (x1 - x0);
            return Ok(y0 + t * (y1 - y0));
        }
    }
    unreachable!("energy within table range")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(e: f64) -> DefectParams {
        DefectParams::new(3480.0, e).unwrap()
    }

    #[test]
    fn pure_zfs_levels() {
        let h = build_hamiltonian(&params(0.0), &FieldConfig::default()).unwrap();
        let lv = spin_levels(&h).unwrap();
        let rel = lv.relative_energies();
        assert!(rel[0].abs() < 1e-12);
        assert!((rel[1] - 3480.0).abs() < 1e-9);
        assert!((rel[2] - 3480.0).abs() < 1e-9);
        // traceless zero-field part
        let tr: f64 = (0..3).map(|i| h[(i, i)].re).sum();
        assert!(tr.abs() < 1e-12);
    }

    #[test]
    fn zero_field_lines() {
        let lines = odmr_frequencies(&params(48.0), &FieldConfig::default()).unwrap();
        assert_eq!(lines.nu_minus, 3432.0);
        assert_eq!(lines.nu_plus, 3528.0);
        let deg = odmr_frequencies(&params(0.0), &FieldConfig::default()).unwrap();
        assert_eq!((deg.nu_minus, deg.nu_plus), (3480.0, 3480.0));
    }

    #[test]
    fn zero_field_splitting_is_exactly_2e() {
        for e in [0.0, 48.0, 61.5, 75.0] {
            assert_eq!(
                dq_splitting(&params(e), &FieldConfig::default()).unwrap(),
                2.0 * e
            );
        }
    }

    #[test]
    fn identity_and_diagonal_matrices() {
        let lv = spin_levels(&Hamiltonian::identity()).unwrap();
        assert_eq!(lv.energies, [1.0, 1.0, 1.0]);
        let d = Hamiltonian::from_diagonal(&Vector3::new(c(3528.0), c(0.0), c(3432.0)));
        let lv = spin_levels(&d).unwrap();
        for (got, want) in lv.energies.iter().zip([0.0, 3432.0, 3528.0]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = Hamiltonian::identity();
        h[(0, 1)] = c(1.0);
        assert!(matches!(spin_levels(&h), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(DefectParams::new(f64::NAN, 48.0).is_err());
        assert!(DefectParams::new(-1.0, 48.0).is_err());
        assert!(DefectParams::new(3480.0, -1.0).is_err());
        assert!(FieldConfig::axial(-3.0).is_err());
        assert!(FieldConfig::new(10.0, f64::INFINITY, 0.0).is_err());
        let bad = DefectParams {
            g_factor: 0.0,
            ..DefectParams::default()
        };
        assert!(build_hamiltonian(&bad, &FieldConfig::default()).is_err());
    }

    #[test]
    fn large_field_approaches_bare_zeeman() {
        let p = params(48.0);
        let f = FieldConfig::axial(1000.0).unwrap();
        let full = dq_splitting(&p, &f).unwrap();
        let bare = zeeman_splitting(&p, &f).unwrap();
        assert!(full > bare);
        assert!((full - bare) / bare < 1e-3);
    }

    #[test]
    fn axial_closed_form_states_are_eigenvectors() {
        let p = params(48.0);
        for (b, theta) in [(0.0, 0.0), (14.0, 0.0), (36.0, std::f64::consts::PI)] {
            let f = FieldConfig::new(b, theta, 0.0).unwrap();
            let h = build_hamiltonian(&p, &f).unwrap();
            let lv = axial_levels(&p, &f).unwrap();
            for i in 0..3 {
                let v = lv.states[i];
                let r = h * v - v * c(lv.energies[i]);
                assert!(r.norm() < 1e-9, "b={b} level {i} residual {}", r.norm());
            }
        }
    }

    #[test]
    fn depth_table() {
        assert_eq!(depth_for_energy(2.5).unwrap(), 4.8);
        assert_eq!(depth_for_energy(5.0).unwrap(), 9.2);
        assert_eq!(depth_for_energy(7.5).unwrap(), 14.5);
        assert!((depth_for_energy(3.75).unwrap() - 7.0).abs() < 1e-12);
        assert!(matches!(
            depth_for_energy(8.0),
            Err(Error::OutOfRange { .. })
        ));
        assert!(depth_for_energy(2.0).is_err());
        assert!(depth_for_energy(f64::NAN).is_err());
    }
}
