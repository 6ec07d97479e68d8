//! Physical constants and the ħ bookkeeping between natural-unit formulas and SI.
//!
//! Everything in this crate is computed in SI. Closed forms that are usually
//! quoted with ħ = 1 are transcribed with explicit powers of ħ; the placement
//! for each one is fixed by dimensional analysis:
//!
//! | quantity | SI form |
//! |---|---|
//! | oscillator threshold | `4 G m1 m2 ħ / d³` |
//! | two-state threshold | `G m1 m2 δx² / (ħ d³)` |
//! | hybrid coupling | `G M m δx / (d³ √(2 M ω ħ))` |
//! | force noise of a kernel | `S_FF = ħ² ∫ d³k k_x² f(k)`, with `f` in m³/s |
//!
//! A radial kernel quoted in natural units is therefore `f_SI = f_nat / ħ`, and a
//! force-noise closed form is `S_SI = ħ · S_nat`.

use crate::error::{require_non_negative, require_positive, Result};

/// Newtonian gravitational constant, m³ kg⁻¹ s⁻².
pub const G_N: f64 = 6.674e-11;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Bundle of the constants used by the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhysicalConstants {
    pub g_n: f64,
    pub hbar: f64,
    pub atomic_mass_unit: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        g_n: G_N,
        hbar: HBAR,
        atomic_mass_unit: ATOMIC_MASS_UNIT,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Ground-state spreads of a harmonic oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZeroPointScales {
    /// Momentum scale `√(m ω ħ)`, kg m/s.
    pub p0: f64,
    /// Length scale `√(ħ / (m ω))`, m.
    pub x0: f64,
}

impl ZeroPointScales {
    pub fn new(mass: f64, omega: f64) -> Result<Self> {
        require_positive("mass", mass)?;
        require_positive("angular frequency", omega)?;
        Ok(Self {
            p0: libm::sqrt(mass * omega * HBAR),
            x0: libm::sqrt(HBAR / (mass * omega)),
        })
    }
}

/// Gravitational coupling `α_G = G m1 m2 / d³` in N/m.
pub fn alpha_g(m1: f64, m2: f64, d: f64) -> Result<f64> {
    require_positive("mass m1", m1)?;
    require_positive("mass m2", m2)?;
    require_positive("separation d", d)?;
    Ok(G_N * m1 * m2 / (d * d * d))
}

/// Coupling rate of two trapped masses.
///
/// In zero-point units the coupling term of `H/ħ` is `2 α_G x1,0 x2,0 / ħ · M1 M3`.
/// Since `x1,0 x2,0 = ħ / √(m1 ω1 m2 ω2)` the ħ cancels, leaving
/// `g = α_G / √(m1 ω1 m2 ω2)`.
pub fn g_rate_oscillators(m1: f64, omega1: f64, m2: f64, omega2: f64, d: f64) -> Result<f64> {
    require_positive("angular frequency omega1", omega1)?;
    require_positive("angular frequency omega2", omega2)?;
    let alpha = alpha_g(m1, m2, d)?;
    Ok(alpha / libm::sqrt(m1 * omega1 * m2 * omega2))
}

/// Acceleration amplitude spectral density `√S_FF / m`, m s⁻² Hz^-1/2.
pub fn force_noise_to_acceleration_asd(s_ff: f64, mass: f64) -> Result<f64> {
    require_non_negative("force noise S_FF", s_ff)?;
    require_positive("mass", mass)?;
    Ok(libm::sqrt(s_ff) / mass)
}

/// Converts a natural-unit (ħ = 1) value carrying `ħ^power` in SI to SI.
pub fn natural_to_si(value: f64, hbar_power: i32) -> f64 {
    value * libm::pow(HBAR, f64::from(hbar_power))
}

/// Inverse of [`natural_to_si`].
pub fn si_to_natural(value: f64, hbar_power: i32) -> f64 {
    value / libm::pow(HBAR, f64::from(hbar_power))
}

/// Powers of ħ carried by the quantities the crate converts.
pub mod hbar_power {
    /// Force noise `S_FF` and correlated noise `d⟨p1 p2⟩/dt`.
    pub const FORCE_NOISE: i32 = 1;
    /// Radial kernel densities `f(k)`.
    pub const KERNEL_DENSITY: i32 = -1;
    /// Rates built from `α_G δx²` (two-state coupling and threshold).
    pub const QUBIT_RATE: i32 = -1;
}
