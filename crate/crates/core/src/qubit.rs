//! Two masses each in a superposition of two positions.
//!
//! The 4×4 density matrix is indexed by `(i, j)` with `i, j ∈ {+1, −1}` the
//! `σ_z` eigenvalues of the two masses; row `2·bit(i) + bit(j)` with
//! `bit(+1) = 0`. Under the reduced dynamics every matrix element evolves
//! independently, `ρ_ijhk(t) = e^(f_ijhk t) ρ_ijhk(0)`.

use alloc::vec::Vec;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMat, C64};
use crate::models::DissipationKernel;
use crate::quadrature::QuadratureSpec;
use crate::units::{alpha_g, HBAR};

/// `σ_z` eigenvalue of basis index `b ∈ {0, 1}`.
pub fn spin(b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitPairState {
    pub rho: CMat,
    pub t: f64,
}

impl QubitPairState {
    pub fn new(rho: CMat, t: f64) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::domain("two-qubit state", "density matrix must be 4x4"));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::domain("two-qubit state", alloc::format!("trace is {tr}")));
        }
        if rho.hermiticity_defect() > 1e-12 {
            return Err(Error::domain("two-qubit state", "density matrix must be Hermitian"));
        }
        let min = hermitian_eigenvalues(&rho)?[0];
        if min < -1e-10 {
            return Err(Error::domain(
                "two-qubit state",
                alloc::format!("negative eigenvalue {min:e}"),
            ));
        }
        Ok(Self { rho, t })
    }

    /// `(|L⟩ + |R⟩) ⊗ (|L⟩ + |R⟩) / 2`: every element equals 1/4.
    pub fn product_superposition() -> Self {
        Self {
            rho: CMat::from_fn(4, |_, _| C64::new(0.25, 0.0)),
            t: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QubitRates {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Correlated rate `S_12 δx² / (4ħ²)`, 1/s.
    pub beta_term: f64,
    /// `α_G δx² / (2ħ)`, 1/s.
    pub coupling: f64,
    pub delta_x: f64,
}

impl QubitRates {
    pub fn validate(&self) -> Result<()> {
        require_non_negative("gamma1", self.gamma1)?;
        require_non_negative("gamma2", self.gamma2)?;
        require_non_negative("coupling", self.coupling)?;
        require_positive("superposition width", self.delta_x)?;
        if !self.beta_term.is_finite() {
            return Err(Error::domain("beta term", "must be finite"));
        }
        if self.positivity_defect() > 0.0 {
            return Err(Error::domain(
                "qubit rates",
                alloc::format!(
                    "complete positivity needs 16*gamma1*gamma2 >= (4*beta_term)^2, got gamma1={:e}, gamma2={:e}, beta_term={:e}",
                    self.gamma1,
                    self.gamma2,
                    self.beta_term
                ),
            ));
        }
        Ok(())
    }

    /// `(4 β_term)² − 16 Γ1 Γ2` beyond rounding.
    pub fn positivity_defect(&self) -> f64 {
        let lhs = 16.0 * self.beta_term * self.beta_term;
        let rhs = 16.0 * self.gamma1 * self.gamma2;
        let excess = lhs - rhs;
        if excess > 1e-12 * lhs.max(rhs) {
            excess
        } else {
            0.0
        }
    }

    /// Rates of a kernel; the positivity bound is not enforced here.
    pub fn from_kernel(
        kernel: &DissipationKernel,
        masses: [f64; 2],
        d: f64,
        delta_x: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        require_positive("superposition width", delta_x)?;
        let alpha = alpha_g(masses[0], masses[1], d)?;
        Ok(Self {
            gamma1: kernel.dephasing_rate(0, delta_x, spec)?,
            gamma2: kernel.dephasing_rate(1, delta_x, spec)?,
            beta_term: kernel.correlated_noise(d)? * delta_x * delta_x / (4.0 * HBAR * HBAR),
            coupling: alpha * delta_x * delta_x / (2.0 * HBAR),
            delta_x,
        })
    }
}

/// `f_ijhk = −i c (ij − hk) + Γ1 (ih − 1) + Γ2 (jk − 1) + b (ik + jh − ij − hk)`.
pub fn rate_exponent(i: f64, j: f64, h: f64, k: f64, rates: &QubitRates) -> C64 {
    let re =
        rates.gamma1 * (i * h - 1.0) + rates.gamma2 * (j * k - 1.0) + rates.beta_term * (i * k + j * h - i * j - h * k);
    C64::new(re, -rates.coupling * (i * j - h * k))
}

fn exponent_at(row: usize, col: usize, rates: &QubitRates) -> C64 {
    rate_exponent(spin(row >> 1), spin(row & 1), spin(col >> 1), spin(col & 1), rates)
}

pub fn evolve_analytic(state: &QubitPairState, rates: &QubitRates, t: f64) -> Result<QubitPairState> {
    require_non_negative("time", t)?;
    let rho = CMat::from_fn(4, |r, c| state.rho[(r, c)] * (exponent_at(r, c, rates) * t).exp());
    Ok(QubitPairState { rho, t: state.t + t })
}

/// Transpose on the second mass: `ρ^T2_{ij,hk} = ρ_{ik,hj}`.
pub fn partial_transpose(rho: &CMat) -> CMat {
    CMat::from_fn(4, |r, c| {
        let (i, j, h, k) = (r >> 1, r & 1, c >> 1, c & 1);
        rho[((i << 1) | k, (h << 1) | j)]
    })
}

/// `Σ (|λ| − λ) / 2` over the partial-transpose spectrum.
pub fn negativity(state: &QubitPairState) -> Result<f64> {
    let eig = hermitian_eigenvalues(&partial_transpose(&state.rho))?;
    Ok(eig.iter().map(|l| 0.5 * (l.abs() - l)).sum())
}

/// `dN/dt` at `t = 0` from [`QubitPairState::product_superposition`].
pub fn negativity_rate(rates: &QubitRates) -> f64 {
    let QubitRates {
        gamma1: g1,
        gamma2: g2,
        beta_term: b,
        coupling: c,
        ..
    } = *rates;
    let root = libm::sqrt((g1 - g2) * (g1 - g2) + 4.0 * b * b + 4.0 * c * c);
    (0.5 * (root - g1 - g2)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QubitVerdict {
    /// `Γ1 + Γ2 < √((Γ1 − Γ2)² + β²δx⁴/4ħ² + α_G²δx⁴/ħ²)`.
    pub exact: bool,
    /// `Γ1 + Γ2 < α_G δx² / ħ`.
    pub conservative: bool,
}

pub fn qubits_entangling(rates: &QubitRates) -> QubitVerdict {
    let QubitRates {
        gamma1: g1,
        gamma2: g2,
        beta_term: b,
        coupling: c,
        ..
    } = *rates;
    QubitVerdict {
        exact: g1 + g2 < libm::sqrt((g1 - g2) * (g1 - g2) + 4.0 * b * b + 4.0 * c * c),
        conservative: g1 + g2 < 2.0 * c,
    }
}

/// One row of a trajectory trace.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitSample {
    pub state: QubitPairState,
    pub negativity: f64,
}

/// Samples the analytic solution at `steps + 1` evenly spaced times.
pub fn trajectory(state: &QubitPairState, rates: &QubitRates, t_final: f64, steps: usize) -> Result<Vec<QubitSample>> {
    require_non_negative("duration", t_final)?;
    if steps == 0 {
        return Err(Error::domain("trajectory steps", "must be at least 1"));
    }
    (0..=steps)
        .map(|n| {
            let s = evolve_analytic(state, rates, t_final * n as f64 / steps as f64)?;
            let negativity = negativity(&s)?;
            Ok(QubitSample { state: s, negativity })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rates(g1: f64, g2: f64, b: f64, c: f64) -> QubitRates {
        QubitRates {
            gamma1: g1,
            gamma2: g2,
            beta_term: b,
            coupling: c,
            delta_x: 1e-6,
        }
    }

    #[test]
    fn populations_are_frozen() {
        let r = rates(0.3, 0.7, -0.2, 1.1);
        for row in 0..4 {
            assert_eq!(exponent_at(row, row, &r), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn pure_phase_without_noise() {
        let r = rates(0.0, 0.0, 0.0, 0.8);
        // (+,+,−,−): ij = hk = 1, phase 0
        assert_eq!(rate_exponent(1.0, 1.0, -1.0, -1.0, &r), C64::new(0.0, 0.0));
        // (+,−,+,+): ij = −1, hk = 1
        assert_eq!(rate_exponent(1.0, -1.0, 1.0, 1.0, &r), C64::new(0.0, 1.6));
    }

    #[test]
    fn fully_flipped_coherence() {
        // (+,+,−,−): Γ terms −2Γ1 −2Γ2, β term (−1 −1 −1 −1) b
        let r = rates(0.3, 0.5, 0.1, 0.0);
        assert_relative_eq!(rate_exponent(1.0, 1.0, -1.0, -1.0, &r).re, -0.6 - 1.0 - 0.4);
    }

    #[test]
    fn trace_preserved() {
        let r = rates(0.3, 0.5, 0.2, 2.0);
        let s = QubitPairState::product_superposition();
        for &t in &[0.0, 0.5, 3.0] {
            let e = evolve_analytic(&s, &r, t).unwrap();
            assert!((e.rho.trace().re - 1.0).abs() < 1e-12);
        }
        assert_eq!(evolve_analytic(&s, &r, 0.0).unwrap().rho, s.rho);
    }

    #[test]
    fn negativity_closed_forms() {
        assert!(negativity(&QubitPairState::product_superposition()).unwrap().abs() < 1e-14);
        let h = 0.5;
        let mut bell = CMat::zeros(4);
        for &(r, c) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            bell[(r, c)] = C64::new(h, 0.0);
        }
        let bell = QubitPairState::new(bell, 0.0).unwrap();
        assert_relative_eq!(negativity(&bell).unwrap(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn negativity_rate_limits() {
        assert_relative_eq!(negativity_rate(&rates(0.0, 0.0, 0.0, 0.7)), 0.7);
        assert_eq!(negativity_rate(&rates(0.5, 0.5, 0.5, 0.0)), 0.0);
        let boundary = rates(0.7, 0.7, 0.0, 0.7);
        let v = qubits_entangling(&boundary);
        assert!(!v.exact && !v.conservative);
        assert!(negativity_rate(&boundary).abs() < 1e-15);
    }

    #[test]
    fn negativity_rate_matches_finite_difference() {
        let r = rates(0.1, 0.3, 0.05, 0.9);
        let t = 1e-4 / 0.9;
        let s = evolve_analytic(&QubitPairState::product_superposition(), &r, t).unwrap();
        assert_relative_eq!(negativity(&s).unwrap() / t, negativity_rate(&r), max_relative = 1e-2);
    }

    #[test]
    fn positivity_bound() {
        let mut r = rates(0.1, 0.4, 0.2, 1.0);
        assert!(r.validate().is_ok());
        r.beta_term = 0.21;
        assert!(r.validate().is_err());
    }

    #[test]
    fn trajectory_samples() {
        let r = rates(0.1, 0.1, 0.0, 1.0);
        let tr = trajectory(&QubitPairState::product_superposition(), &r, 1.0, 4).unwrap();
        assert_eq!(tr.len(), 5);
        assert_eq!(tr[0].negativity, 0.0);
        assert!(tr[2].negativity > 0.0);
        assert!(trajectory(&QubitPairState::product_superposition(), &r, 1.0, 0).is_err());
    }
}
