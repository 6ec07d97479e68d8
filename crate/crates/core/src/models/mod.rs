//! The model catalog: every model is reduced to a [`DissipationKernel`].
//!
//! A kernel holds the two single-body radial spectra `f_a(k)` (SI, m³/s), an
//! optional quadratic single-body term, and the correlated two-body noise.
//! Both the quadratic term and the correlated noise are stored as force-noise
//! spectral densities in N²/Hz: `S_12 = d⟨p1 p2⟩/dt` is the coefficient of the
//! double commutator `[x1, [ρ, x2]]` multiplied by ħ².

mod cq;
mod entropic;

pub use cq::*;
pub use entropic::*;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{require_positive, Error, Result};
use crate::quadrature::{self, QuadratureSpec, RadialFunction};
use crate::units::HBAR;

/// Isotropic single-body spectrum `f(k)` in m³/s.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// `f ≡ 0`.
    Zero,
    /// `coef · [d2 / (k² + m_φ²)² + d0]` on `(0, k_max]`.
    Cq {
        coef: f64,
        d0: f64,
        d2: f64,
        m_phi: f64,
        k_max: f64,
    },
    /// `amp · e^(−2 a k) / k²`, truncated at `k_max`.
    LatticeDecay { amp: f64, a: f64, k_max: f64 },
    /// Linear interpolation of samples; zero outside `[k[0], k[last]]`.
    Tabulated { k: Vec<f64>, f: Vec<f64> },
}

impl RadialProfile {
    pub fn tabulated(k: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if k.len() != f.len() {
            return Err(Error::domain(
                "tabulated kernel",
                alloc::format!("{} k samples but {} f samples", k.len(), f.len()),
            ));
        }
        if k.len() < 2 {
            return Err(Error::domain("tabulated kernel", "need at least two samples"));
        }
        if !(k[0] >= 0.0) || k.windows(2).any(|w| !(w[1] > w[0])) || !k[k.len() - 1].is_finite() {
            return Err(Error::domain(
                "tabulated kernel",
                "k must be non-negative, finite and strictly increasing",
            ));
        }
        if let Some(bad) = f.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::domain(
                "tabulated kernel",
                alloc::format!("f must be non-negative and finite, found {bad:e}"),
            ));
        }
        Ok(RadialProfile::Tabulated { k, f })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RadialProfile::Zero => true,
            RadialProfile::Cq { coef, d0, d2, .. } => *coef == 0.0 || (*d0 == 0.0 && *d2 == 0.0),
            RadialProfile::LatticeDecay { amp, .. } => *amp == 0.0,
            RadialProfile::Tabulated { f, .. } => f.iter().all(|v| *v == 0.0),
        }
    }

    /// Multiplies the spectrum by a non-negative constant.
    pub fn scaled(&self, factor: f64) -> RadialProfile {
        match self.clone() {
            RadialProfile::Zero => RadialProfile::Zero,
            RadialProfile::Cq {
                coef,
                d0,
                d2,
                m_phi,
                k_max,
            } => RadialProfile::Cq {
                coef: coef * factor,
                d0,
                d2,
                m_phi,
                k_max,
            },
            RadialProfile::LatticeDecay { amp, a, k_max } => RadialProfile::LatticeDecay {
                amp: amp * factor,
                a,
                k_max,
            },
            RadialProfile::Tabulated { k, f } => RadialProfile::Tabulated {
                k,
                f: f.into_iter().map(|v| v * factor).collect(),
            },
        }
    }
}

impl RadialFunction for RadialProfile {
    fn value(&self, k: f64) -> f64 {
        match self {
            RadialProfile::Zero => 0.0,
            RadialProfile::Cq {
                coef,
                d0,
                d2,
                m_phi,
                k_max,
            } => {
                if k > *k_max {
                    return 0.0;
                }
                let q = k * k + m_phi * m_phi;
                let d2_term = if *d2 == 0.0 { 0.0 } else { d2 / (q * q) };
                coef * (d2_term + d0)
            }
            RadialProfile::LatticeDecay { amp, a, k_max } => {
                if k > *k_max || k == 0.0 {
                    return 0.0;
                }
                amp * libm::exp(-2.0 * a * k) / (k * k)
            }
            RadialProfile::Tabulated { k: ks, f } => {
                let last = ks.len() - 1;
                if k < ks[0] || k > ks[last] {
                    return 0.0;
                }
                let j = ks.partition_point(|&x| x <= k).clamp(1, last);
                let t = (k - ks[j - 1]) / (ks[j] - ks[j - 1]);
                f[j - 1] + t * (f[j] - f[j - 1])
            }
        }
    }

    fn k_max(&self) -> f64 {
        match self {
            RadialProfile::Zero => 1.0,
            RadialProfile::Cq { k_max, .. } | RadialProfile::LatticeDecay { k_max, .. } => *k_max,
            RadialProfile::Tabulated { k, .. } => k[k.len() - 1],
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::Tabulated { k, .. } => k.clone(),
            _ => Vec::new(),
        }
    }
}

/// How the correlated noise depends on the separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    /// A fixed `S_12` in N²/Hz, already evaluated at the kernel's separation.
    Constant(f64),
    /// `amplitude · cos(d / ℓ) / d²`, the regulated classical-quantum form.
    CqRegulated { amplitude: f64, ell: f64 },
}

impl Correlation {
    pub fn at(&self, d: f64) -> f64 {
        match *self {
            Correlation::Constant(s) => s,
            Correlation::CqRegulated { amplitude, ell } => amplitude * libm::cos(d / ell) / (d * d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelKind {
    Graviton,
    Cq,
    EntropicLocal,
    EntropicNonlocal,
    Custom,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Graviton => "graviton",
            ModelKind::Cq => "cq",
            ModelKind::EntropicLocal => "entropic_local",
            ModelKind::EntropicNonlocal => "entropic_nonlocal",
            ModelKind::Custom => "custom",
        }
    }
}

/// The reduced `(f1, f2, β)` description of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationKernel {
    pub kind: ModelKind,
    pub f: [RadialProfile; 2],
    /// Force noise of quadratic single-body terms `[x_a, [x_a, ρ]]`, N²/Hz.
    pub quadratic: [f64; 2],
    pub correlation: Correlation,
    /// Free-form notes carried into reports (regime caveats and the like).
    pub notes: Vec<String>,
}

impl DissipationKernel {
    /// Reversible dynamics: no noise of any kind.
    pub fn graviton() -> Self {
        Self {
            kind: ModelKind::Graviton,
            f: [RadialProfile::Zero, RadialProfile::Zero],
            quadratic: [0.0; 2],
            correlation: Correlation::Constant(0.0),
            notes: Vec::new(),
        }
    }

    /// User-supplied tabulated spectra and a fixed correlated noise `S_12`.
    pub fn custom(f1: RadialProfile, f2: RadialProfile, s12: f64) -> Result<Self> {
        if !s12.is_finite() {
            return Err(Error::domain("custom beta", "must be finite"));
        }
        Ok(Self {
            kind: ModelKind::Custom,
            f: [f1, f2],
            quadratic: [0.0; 2],
            correlation: Correlation::Constant(s12),
            notes: Vec::new(),
        })
    }

    fn check_index(a: usize) -> Result<()> {
        if a > 1 {
            return Err(Error::domain("mass index", alloc::format!("must be 0 or 1, got {a}")));
        }
        Ok(())
    }

    /// Single-body force noise `S_FF,a = ħ² ∫ d³k k_x² f_a + quadratic_a`, N²/Hz.
    pub fn force_noise(&self, a: usize, spec: &QuadratureSpec) -> Result<f64> {
        Self::check_index(a)?;
        let moment = if self.f[a].is_zero() {
            0.0
        } else {
            quadrature::heating_moment(&self.f[a], spec)?
        };
        Ok(HBAR * HBAR * moment + self.quadratic[a])
    }

    /// Sum of both single-body force noises.
    pub fn total_force_noise(&self, spec: &QuadratureSpec) -> Result<f64> {
        Ok(self.force_noise(0, spec)? + self.force_noise(1, spec)?)
    }

    /// Loss rate of a two-branch superposition of width `δx`, 1/s.
    pub fn dephasing_rate(&self, a: usize, delta_x: f64, spec: &QuadratureSpec) -> Result<f64> {
        Self::check_index(a)?;
        let moment = if self.f[a].is_zero() {
            0.0
        } else {
            quadrature::dephasing_moment(&self.f[a], delta_x, spec)?
        };
        Ok(moment + self.quadratic[a] * delta_x * delta_x / (4.0 * HBAR * HBAR))
    }

    /// Correlated force noise `S_12` at separation `d`, N²/Hz.
    pub fn correlated_noise(&self, d: f64) -> Result<f64> {
        require_positive("separation d", d)?;
        Ok(self.correlation.at(d))
    }

    pub fn is_reversible(&self) -> bool {
        self.f.iter().all(RadialProfile::is_zero)
            && self.quadratic == [0.0; 2]
            && self.correlation == Correlation::Constant(0.0)
    }
}
