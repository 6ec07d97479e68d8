//! Classical-quantum gravity with a decoherence coefficient `D0` (m²), a
//! diffusion coefficient `D2` (m⁻²), a hard UV cutoff `1/ℓ` and an IR
//! regulator `m_φ`.

use alloc::string::ToString;
use core::f64::consts::PI;

use super::{Correlation, DissipationKernel, ModelKind, RadialProfile};
use crate::error::{require_non_negative, require_positive, Result};
use crate::float::powi;
use crate::quadrature::{self, QuadratureSpec};
use crate::units::{G_N, HBAR};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CqParams {
    pub d0: f64,
    pub d2: f64,
    pub ell: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub m_phi: f64,
}

impl CqParams {
    pub fn new(d0: f64, d2: f64, ell: f64) -> Result<Self> {
        let p = Self {
            d0,
            d2,
            ell,
            m_phi: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("cq D0", self.d0)?;
        require_positive("cq D2", self.d2)?;
        require_positive("cq ell", self.ell)?;
        require_non_negative("cq m_phi", self.m_phi)?;
        Ok(())
    }

    /// The decoherence–diffusion tradeoff `D0 · D2 ≥ 1`.
    pub fn satisfies_tradeoff(&self) -> bool {
        self.d0 * self.d2 >= 1.0
    }
}

fn spectrum_coefficient(m: f64) -> f64 {
    G_N * m * m / (2.0 * PI * PI * HBAR)
}

/// Kernel `f_a = G m_a² / (2π² ħ) · [D2 / (k² + m_φ²)² + D0]` on `(0, 1/ℓ]`.
///
/// The correlated noise keeps the `cos(d/ℓ)` regulator of the closed form;
/// this is recorded in the kernel notes.
pub fn cq_kernel(p: &CqParams, m1: f64, m2: f64) -> Result<DissipationKernel> {
    p.validate()?;
    require_positive("mass m1", m1)?;
    require_positive("mass m2", m2)?;
    let profile = |m: f64| RadialProfile::Cq {
        coef: spectrum_coefficient(m),
        d0: p.d0,
        d2: p.d2,
        m_phi: p.m_phi,
        k_max: 1.0 / p.ell,
    };
    let amplitude = -2.0 * G_N * m1 * m2 * HBAR * (p.d0 + p.d2 * powi(p.ell, 4)) / (PI * powi(p.ell, 3));
    let mut notes = alloc::vec!["correlated noise carries the oscillatory cos(d/ell) regulator factor".to_string()];
    if !p.satisfies_tradeoff() {
        notes.push("parameters violate the decoherence-diffusion tradeoff D0*D2 >= 1".to_string());
    }
    Ok(DissipationKernel {
        kind: ModelKind::Cq,
        f: [profile(m1), profile(m2)],
        quadratic: [0.0; 2],
        correlation: Correlation::CqRegulated { amplitude, ell: p.ell },
        notes,
    })
}

/// Closed-form single-mass force noise at `m_φ = 0`:
/// `2 G m² ħ D0 / (15π ℓ⁵) + 2 G m² ħ D2 / (3π ℓ)`.
pub fn cq_force_noise_single(p: &CqParams, m: f64) -> Result<f64> {
    p.validate()?;
    require_positive("mass", m)?;
    let ell = p.ell;
    Ok(2.0 * G_N * m * m * HBAR * (p.d0 / (15.0 * PI * powi(ell, 5)) + p.d2 / (3.0 * PI * ell)))
}

/// Total force noise of two equal masses, `4 G m² ħ (D0 + 5 ℓ⁴ D2) / (15π ℓ⁵)`.
pub fn cq_sff_closed(p: &CqParams, m: f64) -> Result<f64> {
    p.validate()?;
    require_positive("mass", m)?;
    let ell = p.ell;
    Ok(4.0 * G_N * m * m * HBAR * (p.d0 + 5.0 * powi(ell, 4) * p.d2) / (15.0 * PI * powi(ell, 5)))
}

/// `D0` minimizing [`cq_sff_closed`] on the tradeoff boundary `D0 D2 = 1`.
pub fn cq_min_d0(ell: f64) -> Result<f64> {
    require_positive("cq ell", ell)?;
    Ok(libm::sqrt(5.0) * ell * ell)
}

/// Smallest force noise compatible with the tradeoff, `8√5 G m² ħ / (15π ℓ³)`.
pub fn cq_min_sff(ell: f64, m: f64) -> Result<f64> {
    require_positive("cq ell", ell)?;
    require_positive("mass", m)?;
    Ok(8.0 * libm::sqrt(5.0) * G_N * m * m * HBAR / (15.0 * PI * powi(ell, 3)))
}

/// Whether the minimal noise exceeds the oscillator entangling threshold
/// `4 G m² ħ / d³` at separation `d ≥ ℓ`.
pub fn cq_min_exceeds_threshold(ell: f64, m: f64, d: f64) -> Result<bool> {
    require_positive("separation d", d)?;
    if d < ell {
        return Err(crate::Error::domain(
            "separation d",
            alloc::format!("must be at least ell = {ell:e}, got {d:e}"),
        ));
    }
    let threshold = 4.0 * G_N * m * m * HBAR / powi(d, 3);
    Ok(cq_min_sff(ell, m)? > threshold)
}

/// Exact and order-of-magnitude single-mass dephasing rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqDephasing {
    /// Quadrature of the kernel, 1/s.
    pub exact: f64,
    /// `G m² / (2π² ħ) · [D0 / ℓ³ + 4π² D2 δx]`, 1/s.
    pub order_of_magnitude: f64,
}

pub fn cq_single_mass_dephasing(p: &CqParams, m: f64, delta_x: f64, spec: &QuadratureSpec) -> Result<CqDephasing> {
    p.validate()?;
    require_positive("superposition width", delta_x)?;
    let kernel = cq_kernel(p, m, m)?;
    let exact = quadrature::dephasing_moment(&kernel.f[0], delta_x, spec)?;
    let coef = spectrum_coefficient(m);
    Ok(CqDephasing {
        exact,
        order_of_magnitude: coef * (p.d0 / powi(p.ell, 3) + 4.0 * PI * PI * p.d2 * delta_x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const M: f64 = 1e-6;

    #[test]
    fn flat_limit_is_constant() {
        let p = CqParams {
            d0: 3e-8,
            d2: 0.0,
            ell: 1e-4,
            m_phi: 0.0,
        };
        let k = cq_kernel(&CqParams { d2: 1e-30, ..p }, M, M).unwrap();
        use crate::quadrature::RadialFunction;
        let expected = G_N * M * M * 3e-8 / (2.0 * PI * PI * HBAR);
        assert_relative_eq!(k.f[0].value(10.0), expected, max_relative = 1e-9);
        assert_relative_eq!(k.f[0].value(5000.0), expected, max_relative = 1e-9);
        assert_eq!(k.f[0].value(2e4), 0.0);
    }

    #[test]
    fn heating_matches_closed_form() {
        let p = CqParams::new(2e-7, 3e7, 1e-4).unwrap();
        let k = cq_kernel(&p, M, M).unwrap();
        let spec = QuadratureSpec::default();
        assert_relative_eq!(
            k.force_noise(0, &spec).unwrap(),
            cq_force_noise_single(&p, M).unwrap(),
            max_relative = 1e-8
        );
        assert_relative_eq!(
            k.total_force_noise(&spec).unwrap(),
            cq_sff_closed(&p, M).unwrap(),
            max_relative = 1e-8
        );
    }

    #[test]
    fn closed_form_scalings() {
        let p = CqParams::new(1e-8, 1e-30, 1e-3).unwrap();
        let doubled = CqParams { d0: 2e-8, ..p };
        assert_relative_eq!(
            cq_sff_closed(&doubled, M).unwrap(),
            2.0 * cq_sff_closed(&p, M).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cq_min_sff(2e-3, M).unwrap(),
            cq_min_sff(1e-3, M).unwrap() / 8.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn minimum_on_tradeoff_boundary() {
        let ell = 2e-4;
        let d0 = cq_min_d0(ell).unwrap();
        let at = |d0: f64| cq_sff_closed(&CqParams::new(d0, 1.0 / d0, ell).unwrap(), M).unwrap();
        let best = at(d0);
        assert_relative_eq!(best, cq_min_sff(ell, M).unwrap(), max_relative = 1e-12);
        assert!(at(d0 * 1.01) > best && at(d0 * 0.99) > best);
    }

    #[test]
    fn threshold_comparison() {
        let ell = 1e-4;
        assert!(cq_min_exceeds_threshold(ell, M, 3.0 * ell).unwrap());
        assert!(cq_min_exceeds_threshold(ell, M, 100.0 * ell).unwrap());
        // d = ℓ: 8√5/15π ≈ 0.38 < 4
        assert!(!cq_min_exceeds_threshold(ell, M, ell).unwrap());
        assert!(cq_min_exceeds_threshold(ell, M, 0.5 * ell).is_err());
    }

    #[test]
    fn correlated_noise_sign_and_form() {
        let p = CqParams::new(1e-8, 1e8, 1e-4).unwrap();
        let k = cq_kernel(&p, M, 2.0 * M).unwrap();
        let d = 1e-3;
        let expected = -2.0 * G_N * 2.0 * M * M * HBAR * (p.d0 + p.d2 * 1e-16) * libm::cos(10.0) / (PI * 1e-12 * d * d);
        assert_relative_eq!(k.correlated_noise(d).unwrap(), expected, max_relative = 1e-12);
        assert!(!k.notes.is_empty());
    }

    #[test]
    fn tradeoff_flag() {
        assert!(CqParams::new(2.0, 0.5, 1.0).unwrap().satisfies_tradeoff());
        assert!(!CqParams::new(0.5, 1.0, 1.0).unwrap().satisfies_tradeoff());
        let k = cq_kernel(&CqParams::new(0.5, 1.0, 1.0).unwrap(), M, M).unwrap();
        assert_eq!(k.notes.len(), 2);
        assert!(CqParams::new(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn dephasing_asymptotics() {
        let spec = QuadratureSpec::default();
        let ell = 1e-6;
        // D2 term: linear in δx with slope G m² D2 / (4ħ)
        let p = CqParams {
            d0: 1e-300,
            d2: 1.0,
            ell,
            m_phi: 0.0,
        };
        let r1 = cq_single_mass_dephasing(&p, M, 1e-2, &spec).unwrap();
        let r2 = cq_single_mass_dephasing(&p, M, 2e-2, &spec).unwrap();
        assert_relative_eq!(r2.exact / r1.exact, 2.0, max_relative = 5e-4);
        assert_relative_eq!(r1.exact, G_N * M * M * 1e-2 / (4.0 * HBAR), max_relative = 5e-4);
        // D0 term saturates at G m² D0 / (3π ħ ℓ³)
        let p0 = CqParams {
            d0: 1e-12,
            d2: 1e-300,
            ell,
            m_phi: 0.0,
        };
        let sat = cq_single_mass_dephasing(&p0, M, 1e-2, &spec).unwrap();
        assert_relative_eq!(
            sat.exact,
            G_N * M * M * 1e-12 / (3.0 * PI * HBAR * ell.powi(3)),
            max_relative = 1e-3
        );
    }

    #[test]
    fn dephasing_vanishes_for_small_width() {
        let spec = QuadratureSpec::default();
        let p = CqParams::new(1e-8, 1e8, 1e-6).unwrap();
        let small = cq_single_mass_dephasing(&p, M, 1e-12, &spec).unwrap().exact;
        let smaller = cq_single_mass_dephasing(&p, M, 1e-13, &spec).unwrap().exact;
        assert_relative_eq!(small / smaller, 100.0, max_relative = 1e-6);
    }
}
