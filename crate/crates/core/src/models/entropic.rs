//! Entropic gravity: the non-local (Gaussian) and local (lattice) variants.
//!
//! Temperatures and the thermalization rate of the local model are expressed
//! as rates (s⁻¹), so `η = T (1 − σ*) / γ_th` is dimensionless; the emergent-G
//! constraint then fixes the units of `L⁴` to m⁶ kg⁻¹ s⁻³.

use alloc::string::ToString;
use core::f64::consts::PI;

use super::{Correlation, DissipationKernel, ModelKind, RadialProfile};
use crate::error::{require_positive, Error, Result};
use crate::float::powi;
use crate::quadrature::{self, QuadratureSpec};
use crate::units::{G_N, HBAR};

/// Relative tolerance on the emergent-G constraints.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-6;

/// Ratio between the quoted mediator integrals and the bare
/// `∫ ν² g±(ν) dν`: the continuum sum over mediator modes contributes
/// `2 T² ℓ² = 24 G m1 m2 / π²`, which the quoted values absorb.
pub const MEDIATOR_NORMALIZATION: f64 = 24.0 / (PI * PI);

/// Upper limit of the mediator integrals; `ν² g±(ν) < 1e-12` beyond ν = 60.
pub const NU_MAX: f64 = 80.0;

/// `g₊(ν)`, with its series below ν = 0.05.
pub fn g_plus(nu: f64) -> f64 {
    if nu < 0.05 {
        let v2 = nu * nu;
        return 1.0 / 32.0 - 5.0 * v2 / 1152.0 + v2 * v2 / 2304.0;
    }
    let h = 0.5 * nu;
    let bracket = -2.0 + (2.0 + nu * nu) * libm::cosh(nu) - 2.0 * nu * libm::sinh(nu);
    bracket / (64.0 * nu * powi(libm::sinh(h), 3) * libm::cosh(h))
}

/// `g₋(ν)`, with its series below ν = 0.05.
pub fn g_minus(nu: f64) -> f64 {
    if nu < 0.05 {
        let v2 = nu * nu;
        return 1.0 / 8.0 - v2 / 24.0 + 17.0 * v2 * v2 / 1920.0;
    }
    2.0 * powi(libm::sinh(0.5 * nu), 4) / (nu * powi(libm::sinh(nu), 3))
}

/// Mediator integrals of the non-local model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediatorIntegrals {
    /// `I₊` in the normalization of the correlated-noise formula.
    pub plus: f64,
    pub minus: f64,
    /// Bare `∫₀^∞ ν² g₊(ν) dν`.
    pub plus_raw: f64,
    pub minus_raw: f64,
}

pub fn entropic_i_integrals(spec: &QuadratureSpec) -> Result<MediatorIntegrals> {
    spec.validate()?;
    let integral = |g: fn(f64) -> f64| {
        quadrature::integrate(|nu| nu * nu * g(nu), 0.0, NU_MAX, &[1.0, 5.0, 20.0], spec).map(|r| r.value)
    };
    let plus_raw = integral(g_plus)?;
    let minus_raw = integral(g_minus)?;
    Ok(MediatorIntegrals {
        plus: MEDIATOR_NORMALIZATION * plus_raw,
        minus: MEDIATOR_NORMALIZATION * minus_raw,
        plus_raw,
        minus_raw,
    })
}

/// Parameters of the non-local model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropicNonlocalParams {
    /// λ, m.
    pub lambda_len: f64,
    /// ℓ², m².
    pub ell2: f64,
    /// Mediator damping control ζ.
    pub zeta: f64,
    /// Mediator temperature, in units where `T² ℓ²` is in J m.
    pub temperature: f64,
}

impl EntropicNonlocalParams {
    /// Chooses the temperature that satisfies `π² T² ℓ² / 12 = G m1 m2`.
    pub fn on_constraint(lambda_len: f64, ell2: f64, zeta: f64, m1: f64, m2: f64) -> Result<Self> {
        require_positive("ell2", ell2)?;
        require_positive("mass m1", m1)?;
        require_positive("mass m2", m2)?;
        let temperature = libm::sqrt(12.0 * G_N * m1 * m2 / (PI * PI * ell2));
        let p = Self {
            lambda_len,
            ell2,
            zeta,
            temperature,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_len >= 0.0 && self.lambda_len.is_finite()) {
            return Err(Error::domain("lambda_len", "must be non-negative and finite"));
        }
        require_positive("ell2", self.ell2)?;
        require_positive("zeta", self.zeta)?;
        require_positive("temperature", self.temperature)?;
        Ok(())
    }

    /// Relative residual of the emergent-G constraint.
    pub fn constraint_residual(&self, m1: f64, m2: f64) -> f64 {
        let target = G_N * m1 * m2;
        (PI * PI * self.temperature * self.temperature * self.ell2 / 12.0 - target).abs() / target
    }
}

/// Correlated force noise `G m1 m2 ħ / (d³ (1 + λd/ℓ²)) · (ζ I₊ + I₋/ζ)`.
///
/// Fails if the emergent-G constraint is violated; see
/// [`entropic_nonlocal_beta_unchecked`] to explore off the constraint.
pub fn entropic_nonlocal_beta(
    p: &EntropicNonlocalParams,
    m1: f64,
    m2: f64,
    d: f64,
    integrals: &MediatorIntegrals,
) -> Result<f64> {
    p.validate()?;
    require_positive("mass m1", m1)?;
    require_positive("mass m2", m2)?;
    let residual = p.constraint_residual(m1, m2);
    if residual > CONSTRAINT_TOLERANCE {
        return Err(Error::domain(
            "entropic non-local parameters",
            alloc::format!("emergent-G constraint violated (relative residual {residual:e})"),
        ));
    }
    entropic_nonlocal_beta_unchecked(p, m1, m2, d, integrals)
}

pub fn entropic_nonlocal_beta_unchecked(
    p: &EntropicNonlocalParams,
    m1: f64,
    m2: f64,
    d: f64,
    integrals: &MediatorIntegrals,
) -> Result<f64> {
    p.validate()?;
    require_positive("separation d", d)?;
    let screening = 1.0 + p.lambda_len * d / p.ell2;
    Ok(G_N * m1 * m2 * HBAR / (d * d * d * screening) * (p.zeta * integrals.plus + integrals.minus / p.zeta))
}

/// The non-local kernel: purely quadratic, with single-body noise equal to the
/// correlated noise on each mass.
pub fn entropic_nonlocal_kernel(
    p: &EntropicNonlocalParams,
    m1: f64,
    m2: f64,
    d: f64,
    integrals: &MediatorIntegrals,
) -> Result<DissipationKernel> {
    let beta = entropic_nonlocal_beta(p, m1, m2, d, integrals)?;
    Ok(nonlocal_kernel_from_beta(beta))
}

pub(crate) fn nonlocal_kernel_from_beta(beta: f64) -> DissipationKernel {
    DissipationKernel {
        kind: ModelKind::EntropicNonlocal,
        f: [RadialProfile::Zero, RadialProfile::Zero],
        quadratic: [beta, beta],
        correlation: Correlation::Constant(beta),
        notes: alloc::vec!["Gaussian approximation for separations much larger than the superposition".to_string()],
    }
}

/// Parameters of the local (lattice) model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropicLocalParams {
    /// Lattice spacing, m.
    pub a: f64,
    /// `L⁴`, m⁶ kg⁻¹ s⁻³.
    pub l4: f64,
    /// Mediator temperature, s⁻¹.
    pub temperature: f64,
    pub sigma_star: f64,
    /// Thermalization rate, s⁻¹.
    pub gamma_th: f64,
}

impl EntropicLocalParams {
    /// Solves the emergent-G constraint for `L⁴`.
    pub fn on_constraint(a: f64, temperature: f64, sigma_star: f64, gamma_th: f64) -> Result<Self> {
        let mut p = Self {
            a,
            l4: 1.0,
            temperature,
            sigma_star,
            gamma_th,
        };
        p.validate()?;
        p.l4 = G_N * temperature * powi(a, 3) / (sigma_star * (1.0 - sigma_star) * powi(PI, 3));
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("lattice spacing a", self.a)?;
        require_positive("L^4", self.l4)?;
        require_positive("temperature", self.temperature)?;
        require_positive("gamma_th", self.gamma_th)?;
        if !(self.sigma_star > 0.0 && self.sigma_star < 1.0) {
            return Err(Error::domain(
                "sigma_star",
                alloc::format!("must lie in (0, 1), got {}", self.sigma_star),
            ));
        }
        Ok(())
    }

    /// `σ* (1 − σ*) π³ L⁴ / (T a³)`.
    pub fn emergent_g(&self) -> f64 {
        self.sigma_star * (1.0 - self.sigma_star) * powi(PI, 3) * self.l4 / (self.temperature * powi(self.a, 3))
    }

    pub fn constraint_residual(&self) -> f64 {
        (self.emergent_g() - G_N).abs() / G_N
    }

    pub fn eta(&self) -> f64 {
        self.temperature * (1.0 - self.sigma_star) / self.gamma_th
    }

    /// `λ₊² + λ₋² = σ* γ / (4T²) + 2σ* (σ* − 1)² / γ`, s.
    pub fn lambda_sq_sum(&self) -> f64 {
        let s = self.sigma_star;
        s * self.gamma_th / (4.0 * self.temperature * self.temperature) + 2.0 * s * powi(s - 1.0, 2) / self.gamma_th
    }

    fn check(&self) -> Result<()> {
        self.validate()?;
        let residual = self.constraint_residual();
        if residual > CONSTRAINT_TOLERANCE {
            return Err(Error::domain(
                "entropic local parameters",
                alloc::format!("emergent-G constraint violated (relative residual {residual:e})"),
            ));
        }
        Ok(())
    }
}

/// Radial truncation of the lattice spectrum, where `e^(−2ak) < 1e-16`.
pub fn lattice_k_max(a: f64) -> f64 {
    20.0 / a
}

/// Correlated noise of the lattice model,
/// `ħ 4π² Λ L⁴ m1 m2 / a³ · [4a(2a² + d²) / (d² (4a² + d²)²) − arctan(d/2a) / d³]`.
pub fn entropic_local_beta(p: &EntropicLocalParams, m1: f64, m2: f64, d: f64) -> Result<f64> {
    p.check()?;
    require_positive("separation d", d)?;
    let a = p.a;
    let bracket = 4.0 * a * (2.0 * a * a + d * d) / (d * d * powi(4.0 * a * a + d * d, 2))
        - libm::atan(d / (2.0 * a)) / powi(d, 3);
    Ok(HBAR * 4.0 * PI * PI * p.lambda_sq_sum() * p.l4 * m1 * m2 / powi(a, 3) * bracket)
}

/// `f_a = π Λ m_a² L⁴ e^(−2ak) / (2 a³ k² ħ)`; correlated noise from the full
/// bracket of [`entropic_local_beta`].
pub fn entropic_local_kernel(p: &EntropicLocalParams, m1: f64, m2: f64, d: f64) -> Result<DissipationKernel> {
    p.check()?;
    require_positive("mass m1", m1)?;
    require_positive("mass m2", m2)?;
    let beta = entropic_local_beta(p, m1, m2, d)?;
    let profile = |m: f64| RadialProfile::LatticeDecay {
        amp: PI * p.lambda_sq_sum() * m * m * p.l4 / (2.0 * powi(p.a, 3) * HBAR),
        a: p.a,
        k_max: lattice_k_max(p.a),
    };
    let mut notes = alloc::vec::Vec::new();
    if d < p.a {
        notes.push("separation is below the lattice spacing".to_string());
    }
    Ok(DissipationKernel {
        kind: ModelKind::EntropicLocal,
        f: [profile(m1), profile(m2)],
        quadratic: [0.0; 2],
        correlation: Correlation::Constant(beta),
        notes,
    })
}

/// Total two-mass force noise after the constraint substitution,
/// `G m² ħ / (12π a³) · (1/η + 8η)`.
pub fn entropic_local_sff_closed(a: f64, m: f64, eta: f64) -> Result<f64> {
    require_positive("lattice spacing a", a)?;
    require_positive("mass", m)?;
    require_positive("eta", eta)?;
    Ok(G_N * m * m * HBAR / (12.0 * PI * powi(a, 3)) * (1.0 / eta + 8.0 * eta))
}

/// Minimum over η of [`entropic_local_sff_closed`], `√2 G m² ħ / (3π a³)`.
pub fn entropic_local_min_sff(a: f64, m: f64) -> Result<f64> {
    require_positive("lattice spacing a", a)?;
    require_positive("mass", m)?;
    Ok(libm::sqrt(2.0) * G_N * m * m * HBAR / (3.0 * PI * powi(a, 3)))
}

/// The minimizing `η* = 1/(2√2)`.
pub const ENTROPIC_LOCAL_ETA_STAR: f64 = 0.353_553_390_593_273_8;
