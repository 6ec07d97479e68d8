//! Two trapped oscillators: covariance dynamics and the Simon criterion.
//!
//! Quadratures are normalized by the zero-point scales,
//! `M = (x1/x1,0, p1/p1,0, x2/x2,0, p2/p2,0)`, and the covariance is
//! `γ_ij = ⟨{ΔM_i, ΔM_j}⟩`, so the vacuum is the identity.

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::linalg::{hermitian_min_eigenvalue, CMat, C64};
use crate::models::DissipationKernel;
use crate::quadrature::QuadratureSpec;
use crate::units::{alpha_g, ZeroPointScales};

/// Row-major 4×4 real matrix.
pub type Mat4 = [f64; 16];

const fn idx(i: usize, j: usize) -> usize {
    4 * i + j
}

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [0.0; 16];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[idx(i, k)];
            if aik == 0.0 {
                continue;
            }
            for j in 0..4 {
                out[idx(i, j)] += aik * b[idx(k, j)];
            }
        }
    }
    out
}

fn transpose(a: &Mat4) -> Mat4 {
    let mut out = [0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            out[idx(j, i)] = a[idx(i, j)];
        }
    }
    out
}

fn identity() -> Mat4 {
    let mut out = [0.0; 16];
    for i in 0..4 {
        out[idx(i, i)] = 1.0;
    }
    out
}

/// `K = diag(1, 1, 1, −1)` and the symplectic form `Δ₂`.
pub struct SymplecticFixtures;

impl SymplecticFixtures {
    pub fn k() -> Mat4 {
        let mut k = identity();
        k[idx(3, 3)] = -1.0;
        k
    }

    pub fn delta2() -> Mat4 {
        let mut d = [0.0; 16];
        d[idx(0, 1)] = 1.0;
        d[idx(1, 0)] = -1.0;
        d[idx(2, 3)] = 1.0;
        d[idx(3, 2)] = -1.0;
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceState {
    pub gamma: Mat4,
    pub t: f64,
}

impl CovarianceState {
    /// Both oscillators in their ground state.
    pub fn vacuum() -> Self {
        Self {
            gamma: identity(),
            t: 0.0,
        }
    }

    pub fn new(gamma: Mat4, t: f64) -> Result<Self> {
        let scale = gamma.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        for i in 0..4 {
            for j in 0..i {
                if (gamma[idx(i, j)] - gamma[idx(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::domain("covariance matrix", "must be symmetric"));
                }
            }
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("covariance matrix", "entries must be finite"));
        }
        Ok(Self { gamma, t })
    }

    /// Whether `γ + iΔ₂ ⪰ 0` up to `tol`.
    pub fn is_physical(&self, tol: f64) -> Result<bool> {
        let h = hermitian_with_delta(&self.gamma);
        Ok(hermitian_min_eigenvalue(&h)? >= -tol)
    }

    pub fn determinant(&self) -> f64 {
        det4(&self.gamma)
    }
}

fn det4(m: &Mat4) -> f64 {
    let minor = |r: [usize; 3], c: [usize; 3]| {
        let e = |i: usize, j: usize| m[idx(r[i], c[j])];
        e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
    };
    let rows = [1, 2, 3];
    let cols = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
    (0..4)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[idx(0, j)] * minor(rows, cols[j])
        })
        .sum()
}

fn hermitian_with_delta(gamma: &Mat4) -> CMat {
    let delta = SymplecticFixtures::delta2();
    CMat::from_fn(4, |i, j| C64::new(gamma[idx(i, j)], delta[idx(i, j)]))
}

/// Noise and coupling rates in zero-point units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OscillatorRates {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma12: f64,
    pub g: f64,
    /// `p1,0 / p2,0`; converts rates back to force noise for the AM–GM form.
    pub p0_ratio: f64,
}

impl OscillatorRates {
    pub fn new(gamma1: f64, gamma2: f64, gamma12: f64, g: f64) -> Result<Self> {
        let r = Self {
            gamma1,
            gamma2,
            gamma12,
            g,
            p0_ratio: 1.0,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("gamma1", self.gamma1)?;
        require_non_negative("gamma2", self.gamma2)?;
        require_non_negative("coupling g", self.g)?;
        require_positive("p0 ratio", self.p0_ratio)?;
        if !self.gamma12.is_finite() {
            return Err(Error::domain("gamma12", "must be finite"));
        }
        if self.positivity_defect() > 0.0 {
            return Err(Error::domain(
                "oscillator rates",
                alloc::format!(
                    "correlated rate violates gamma12^2 <= gamma1*gamma2 ({:e}^2 > {:e}*{:e})",
                    self.gamma12,
                    self.gamma1,
                    self.gamma2
                ),
            ));
        }
        Ok(())
    }

    /// `Γ12² − Γ1Γ2` beyond rounding; positive means the channel is not CP.
    pub fn positivity_defect(&self) -> f64 {
        let lhs = self.gamma12 * self.gamma12;
        let rhs = self.gamma1 * self.gamma2;
        let excess = lhs - rhs;
        if excess > 1e-12 * rhs.max(lhs) {
            excess
        } else {
            0.0
        }
    }

    /// Rates of a kernel for masses at separation `d` in traps of bare
    /// frequencies `ω1'`, `ω2'`. The positivity bound is not enforced here so
    /// that reports can flag violations; call [`OscillatorRates::validate`].
    pub fn from_kernel(
        kernel: &DissipationKernel,
        masses: [f64; 2],
        bare_omegas: [f64; 2],
        d: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        let omegas = shifted_frequencies(masses, bare_omegas, d)?;
        let z1 = ZeroPointScales::new(masses[0], omegas[0])?;
        let z2 = ZeroPointScales::new(masses[1], omegas[1])?;
        let alpha = alpha_g(masses[0], masses[1], d)?;
        let rates = Self {
            gamma1: kernel.force_noise(0, spec)? / (z1.p0 * z1.p0),
            gamma2: kernel.force_noise(1, spec)? / (z2.p0 * z2.p0),
            gamma12: kernel.correlated_noise(d)? / (z1.p0 * z2.p0),
            g: alpha / libm::sqrt(masses[0] * omegas[0] * masses[1] * omegas[1]),
            p0_ratio: z1.p0 / z2.p0,
        };
        Ok(rates)
    }
}

/// `ω_a = √(ω_a'² − 2 α_G / m_a)`; fails when gravity overwhelms the trap.
pub fn shifted_frequencies(masses: [f64; 2], bare_omegas: [f64; 2], d: f64) -> Result<[f64; 2]> {
    let alpha = alpha_g(masses[0], masses[1], d)?;
    let mut out = [0.0; 2];
    for a in 0..2 {
        require_positive("trap frequency", bare_omegas[a])?;
        let omega_sq = bare_omegas[a] * bare_omegas[a] - 2.0 * alpha / masses[a];
        if !(omega_sq > 0.0) {
            return Err(Error::Instability {
                mass_index: a + 1,
                omega_sq,
            });
        }
        out[a] = libm::sqrt(omega_sq);
    }
    Ok(out)
}

/// Drift `x = −X Δ₂`, with `X` carrying the shifted frequencies on the
/// diagonal and `2g` between the two positions.
pub fn build_drift(m1: f64, bare_omega1: f64, m2: f64, bare_omega2: f64, d: f64) -> Result<Mat4> {
    let [w1, w2] = shifted_frequencies([m1, m2], [bare_omega1, bare_omega2], d)?;
    let g = alpha_g(m1, m2, d)? / libm::sqrt(m1 * w1 * m2 * w2);
    Ok(drift_from_frequencies(w1, w2, g))
}

/// Drift for already-shifted frequencies and a given coupling rate.
pub fn drift_from_frequencies(omega1: f64, omega2: f64, g: f64) -> Mat4 {
    let mut x_mat = [0.0; 16];
    x_mat[idx(0, 0)] = omega1;
    x_mat[idx(1, 1)] = omega1;
    x_mat[idx(2, 2)] = omega2;
    x_mat[idx(3, 3)] = omega2;
    x_mat[idx(0, 2)] = 2.0 * g;
    x_mat[idx(2, 0)] = 2.0 * g;
    let prod = mat_mul(&x_mat, &SymplecticFixtures::delta2());
    prod.map(|v| -v)
}

/// Diffusion `y`: `2Γ1`, `2Γ2` on the momentum diagonal, `2Γ12` between them.
pub fn build_diffusion(rates: &OscillatorRates) -> Result<Mat4> {
    rates.validate()?;
    let mut y = [0.0; 16];
    y[idx(1, 1)] = 2.0 * rates.gamma1;
    y[idx(3, 3)] = 2.0 * rates.gamma2;
    y[idx(1, 3)] = 2.0 * rates.gamma12;
    y[idx(3, 1)] = 2.0 * rates.gamma12;
    Ok(y)
}

fn rhs(gamma: &Mat4, x: &Mat4, x_t: &Mat4, y: &Mat4) -> Mat4 {
    let a = mat_mul(x_t, gamma);
    let b = mat_mul(gamma, x);
    let mut out = [0.0; 16];
    for i in 0..16 {
        out[i] = a[i] + b[i] + y[i];
    }
    out
}

fn infinity_norm(x: &Mat4) -> f64 {
    (0..4)
        .map(|i| (0..4).map(|j| x[idx(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Integrates `γ̇ = xᵀγ + γx + y` with classical RK4, calling `observe` after
/// every step. The step is shortened so that it divides `t_final` evenly.
pub fn propagate_with(
    state: &CovarianceState,
    x: &Mat4,
    y: &Mat4,
    t_final: f64,
    dt: f64,
    mut observe: impl FnMut(&CovarianceState),
) -> Result<CovarianceState> {
    require_positive("time step", dt)?;
    require_non_negative("duration", t_final)?;
    let limit = 0.1 / infinity_norm(x).max(f64::MIN_POSITIVE);
    if dt >= limit {
        return Err(Error::StepSize { dt, limit });
    }
    let steps = libm::ceil(t_final / dt) as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let x_t = transpose(x);
    let mut gamma = state.gamma;
    let combine = |g: &Mat4, k: &Mat4, s: f64| {
        let mut out = *g;
        for i in 0..16 {
            out[i] += s * k[i];
        }
        out
    };
    for step in 0..steps {
        let k1 = rhs(&gamma, x, &x_t, y);
        let k2 = rhs(&combine(&gamma, &k1, 0.5 * h), x, &x_t, y);
        let k3 = rhs(&combine(&gamma, &k2, 0.5 * h), x, &x_t, y);
        let k4 = rhs(&combine(&gamma, &k3, h), x, &x_t, y);
        for i in 0..16 {
            gamma[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        // keep exact symmetry against rounding drift
        for i in 0..4 {
            for j in 0..i {
                let m = 0.5 * (gamma[idx(i, j)] + gamma[idx(j, i)]);
                gamma[idx(i, j)] = m;
                gamma[idx(j, i)] = m;
            }
        }
        observe(&CovarianceState {
            gamma,
            t: state.t + (step + 1) as f64 * h,
        });
    }
    Ok(CovarianceState {
        gamma,
        t: state.t + t_final,
    })
}

pub fn propagate(state: &CovarianceState, x: &Mat4, y: &Mat4, t_final: f64, dt: f64) -> Result<CovarianceState> {
    propagate_with(state, x, y, t_final, dt, |_| {})
}

/// Short-time form `γ(t) ≈ γ₀ + t (xᵀγ₀ + γ₀x + y)`.
pub fn propagate_first_order(state: &CovarianceState, x: &Mat4, y: &Mat4, t: f64) -> CovarianceState {
    let slope = rhs(&state.gamma, x, &transpose(x), y);
    let mut gamma = state.gamma;
    for i in 0..16 {
        gamma[i] += t * slope[i];
    }
    CovarianceState { gamma, t: state.t + t }
}

/// Smallest eigenvalue of `KγK + iΔ₂`; negative means entangled.
pub fn simon_min_eig(state: &CovarianceState) -> Result<f64> {
    let k = SymplecticFixtures::k();
    let tilde = mat_mul(&mat_mul(&k, &state.gamma), &k);
    hermitian_min_eigenvalue(&hermitian_with_delta(&tilde))
}

/// `dλ/dt` at `t = 0` from the vacuum:
/// `½ (Γ1 + Γ2 − √((Γ1 − Γ2)² + 4Γ12² + 16g²))`.
pub fn onset_rate(rates: &OscillatorRates) -> f64 {
    let OscillatorRates {
        gamma1: g1,
        gamma2: g2,
        gamma12: g12,
        g,
        ..
    } = *rates;
    0.5 * (g1 + g2 - libm::sqrt((g1 - g2) * (g1 - g2) + 4.0 * g12 * g12 + 16.0 * g * g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OscillatorVerdict {
    /// `Γ1 + Γ2 < √((Γ1 − Γ2)² + 4Γ12² + 16g²)`.
    pub exact: bool,
    /// `Γ1 + Γ2 < 4g`.
    pub conservative: bool,
    /// `S1 + S2 < 4 α_G ħ`, written in rates.
    pub am_gm: bool,
}

pub fn oscillators_entangling(rates: &OscillatorRates) -> OscillatorVerdict {
    let OscillatorRates {
        gamma1: g1,
        gamma2: g2,
        gamma12: g12,
        g,
        p0_ratio: r,
    } = *rates;
    OscillatorVerdict {
        exact: g1 + g2 < libm::sqrt((g1 - g2) * (g1 - g2) + 4.0 * g12 * g12 + 16.0 * g * g),
        conservative: g1 + g2 < 4.0 * g,
        am_gm: g1 * r + g2 / r < 4.0 * g,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fixtures() {
        let k = SymplecticFixtures::k();
        assert_eq!(mat_mul(&k, &k), identity());
        let d = SymplecticFixtures::delta2();
        assert_eq!(transpose(&d), d.map(|v| -v));
    }

    #[test]
    fn uncoupled_drift_is_rotation() {
        let x = drift_from_frequencies(2.0, 3.0, 0.0);
        // x = −XΔ: for one mode [[0, −ω], [ω, 0]]
        assert_eq!(x[idx(0, 1)], -2.0);
        assert_eq!(x[idx(1, 0)], 2.0);
        assert_eq!(x[idx(2, 3)], -3.0);
        assert_eq!(x[idx(3, 2)], 3.0);
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 0), (3, 0), (2, 1), (3, 1)] {
            assert_eq!(x[idx(i, j)], 0.0);
        }
    }

    #[test]
    fn benchmark_drift_coupling_entries() {
        let (m, w, d) = (1e-6, 1.0, 1e-3);
        let x = build_drift(m, w, m, w, d).unwrap();
        let alpha = 6.674e-14;
        let shifted = libm::sqrt(1.0 - 2.0 * alpha / m);
        let g = alpha / (m * shifted);
        // −(XΔ)[0][3] = −X[0][2]·Δ[2][3] = −2g
        assert_relative_eq!(x[idx(0, 3)], -2.0 * g, max_relative = 1e-12);
        assert_relative_eq!(x[idx(2, 1)], -2.0 * g, max_relative = 1e-12);
    }

    #[test]
    fn swap_symmetry() {
        let x = build_drift(1e-6, 2.0, 1e-6, 2.0, 1e-3).unwrap();
        let perm = [2, 3, 0, 1];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(x[idx(i, j)], x[idx(perm[i], perm[j])]);
            }
        }
    }

    #[test]
    fn instability_is_reported() {
        // 2α/m = 2 G m / d³ exceeds ω'² for a soft trap
        let err = build_drift(1.0, 1e-5, 1.0, 1e-5, 1e-2).unwrap_err();
        assert!(matches!(err, Error::Instability { mass_index: 1, .. }));
    }

    #[test]
    fn diffusion_structure() {
        let zero = build_diffusion(&OscillatorRates::new(0.0, 0.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(zero, [0.0; 16]);
        let r = OscillatorRates::new(1.0, 4.0, -1.5, 0.0).unwrap();
        let y = build_diffusion(&r).unwrap();
        let trace: f64 = (0..4).map(|i| y[idx(i, i)]).sum();
        assert_eq!(trace, 10.0);
        assert_eq!(y[idx(1, 3)], -3.0);
        assert!(OscillatorRates::new(1.0, 4.0, 2.5, 0.0).is_err());
    }

    #[test]
    fn free_diffusion_is_linear() {
        let r = OscillatorRates::new(0.3, 0.2, 0.1, 0.0).unwrap();
        let y = build_diffusion(&r).unwrap();
        let out = propagate(&CovarianceState::vacuum(), &[0.0; 16], &y, 2.0, 0.01).unwrap();
        for ((g, id), y) in out.gamma.iter().zip(identity()).zip(y) {
            assert_relative_eq!(*g, id + 2.0 * y, epsilon = 1e-13);
        }
    }

    #[test]
    fn rotation_conserves_determinant() {
        let x = drift_from_frequencies(1.0, 1.7, 0.05);
        let mut gamma = identity();
        gamma[idx(0, 0)] = 3.0;
        gamma[idx(1, 1)] = 1.0 / 3.0 + 0.5;
        gamma[idx(0, 2)] = 0.2;
        gamma[idx(2, 0)] = 0.2;
        let s = CovarianceState::new(gamma, 0.0).unwrap();
        let period = 2.0 * core::f64::consts::PI;
        let out = propagate(&s, &x, &[0.0; 16], 100.0 * period, 0.004).unwrap();
        assert_relative_eq!(out.determinant(), s.determinant(), max_relative = 1e-8);
    }

    #[test]
    fn step_size_guard() {
        let x = drift_from_frequencies(10.0, 10.0, 0.0);
        assert!(matches!(
            propagate(&CovarianceState::vacuum(), &x, &[0.0; 16], 1.0, 0.05),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn first_order_error_is_quadratic() {
        let x = drift_from_frequencies(1.0, 1.3, 0.2);
        let y = build_diffusion(&OscillatorRates::new(0.1, 0.2, 0.05, 0.2).unwrap()).unwrap();
        let s = CovarianceState::vacuum();
        let err = |t: f64| {
            let a = propagate(&s, &x, &y, t, t / 50.0).unwrap();
            let b = propagate_first_order(&s, &x, &y, t);
            (0..16).map(|i| (a.gamma[i] - b.gamma[i]).abs()).fold(0.0, f64::max)
        };
        let ratio = err(0.02) / err(0.01);
        assert_relative_eq!(ratio, 4.0, max_relative = 0.05);
    }

    #[test]
    fn simon_closed_forms() {
        assert!(simon_min_eig(&CovarianceState::vacuum()).unwrap().abs() < 1e-12);
        let thermal = CovarianceState::new(identity().map(|v| 2.0 * v), 0.0).unwrap();
        assert_relative_eq!(simon_min_eig(&thermal).unwrap(), 1.0, max_relative = 1e-12);
        // two-mode squeezed vacuum: PT symplectic eigenvalue e^{−2r}, so the
        // minimum eigenvalue is e^{−2r} − 1
        let r: f64 = 0.4;
        let (c, s) = (libm::cosh(2.0 * r), libm::sinh(2.0 * r));
        let mut gamma = identity().map(|v| c * v);
        gamma[idx(0, 2)] = s;
        gamma[idx(2, 0)] = s;
        gamma[idx(1, 3)] = -s;
        gamma[idx(3, 1)] = -s;
        let tms = CovarianceState::new(gamma, 0.0).unwrap();
        assert!(tms.is_physical(1e-12).unwrap());
        assert_relative_eq!(
            simon_min_eig(&tms).unwrap(),
            libm::exp(-2.0 * r) - 1.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn onset_closed_forms() {
        let g = 0.3;
        assert_relative_eq!(onset_rate(&OscillatorRates::new(0.0, 0.0, 0.0, g).unwrap()), -2.0 * g);
        let boundary = OscillatorRates::new(2.0 * g, 2.0 * g, 0.0, g).unwrap();
        assert!(onset_rate(&boundary).abs() < 1e-15);
        let v = oscillators_entangling(&OscillatorRates::new(0.0, 0.0, 0.0, g).unwrap());
        assert!(v.exact && v.conservative && v.am_gm);
    }

    #[test]
    fn onset_matches_simon_slope() {
        let rates = OscillatorRates::new(0.02, 0.05, -0.01, 0.04).unwrap();
        let x = drift_from_frequencies(1.0, 1.0, rates.g);
        let y = build_diffusion(&rates).unwrap();
        let t = 1e-4;
        let evolved = propagate(&CovarianceState::vacuum(), &x, &y, t, t / 10.0).unwrap();
        let slope = simon_min_eig(&evolved).unwrap() / t;
        assert_relative_eq!(slope, onset_rate(&rates), max_relative = 1e-2);
    }
}
