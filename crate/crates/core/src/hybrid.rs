//! A mechanical oscillator coupled to a mass in a two-position superposition.
//!
//! The joint state lives on `C² ⊗ C^(N+1)` with the oscillator truncated at
//! Fock level `N`; basis index `s·(N+1) + n`, where `s = 0` is the `σ_z = +1`
//! branch. Rates are in 1/s and `H/ħ = ω a†a + g (a + a†) σ_z`.
//!
//! The momentum-kick channel `∫ d³k f₁(k) [D(α) ρ D(α)† − ρ]`, `α = i k_x x₀`,
//! is discretized on Gauss–Legendre nodes in `(k, cos θ)`. Every displacement
//! `D(iκ) = e^(iκX)` is diagonal in the eigenbasis of the position quadrature
//! `X = a + a†`, so the whole node sum collapses to one Hadamard product in
//! that basis. `X` is diagonalized on a padded space of `N + 1 + padding`
//! levels, which makes the truncated `D` agree with the exact matrix elements
//! on the first `N + 1` levels.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::linalg::{hermitian_min_eigenvalue, solve_real, symmetric_tridiagonal_eigen, CMat, C64, ZERO};
use crate::models::DissipationKernel;
use crate::quadrature::{gauss_legendre, gaussian_weighted_moment, QuadratureSpec, RadialFunction};
use crate::qubit::spin;
use crate::units::{G_N, HBAR};

pub const DEFAULT_FOCK_LEVELS: usize = 30;
pub const DEFAULT_PADDING: usize = 48;
pub const DEFAULT_QUAD_NODES: usize = 16;
/// Largest allowed population of the top Fock level.
pub const TRUNCATION_LIMIT: f64 = 1e-8;
/// Upper bound on `dt · (ω + g + total rate)`.
pub const STEP_LIMIT: f64 = 0.05;
/// Geometric panel edges `k_max 2^(−j)`, `j = 1..=6`.
const GEOMETRIC_PANELS: i32 = 6;
const MAX_KERNEL_BREAKPOINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub rho: CMat,
    pub n_max: usize,
    pub t: f64,
}

impl HybridState {
    pub fn new(rho: CMat, n_max: usize, t: f64) -> Result<Self> {
        if rho.dim() != 2 * (n_max + 1) {
            return Err(Error::domain(
                "hybrid state",
                alloc::format!("dimension {} does not match 2(N+1) = {}", rho.dim(), 2 * (n_max + 1)),
            ));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::domain("hybrid state", alloc::format!("trace is {tr}")));
        }
        if rho.hermiticity_defect() > 1e-10 {
            return Err(Error::domain("hybrid state", "density matrix must be Hermitian"));
        }
        let min = hermitian_min_eigenvalue(&rho)?;
        if min < -1e-8 {
            return Err(Error::domain(
                "hybrid state",
                alloc::format!("negative eigenvalue {min:e}"),
            ));
        }
        Ok(Self { rho, n_max, t })
    }

    /// Oscillator in its ground state, the mass in `(|L⟩ + |R⟩)/√2`.
    pub fn ground_superposition(n_max: usize) -> Self {
        let levels = n_max + 1;
        let mut rho = CMat::zeros(2 * levels);
        for s in 0..2 {
            for s2 in 0..2 {
                rho[(s * levels, s2 * levels)] = C64::new(0.5, 0.0);
            }
        }
        Self { rho, n_max, t: 0.0 }
    }

    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    /// Reduced Fock-level populations of the oscillator.
    pub fn oscillator_populations(&self) -> Vec<f64> {
        let l = self.levels();
        (0..l)
            .map(|n| self.rho[(n, n)].re + self.rho[(l + n, l + n)].re)
            .collect()
    }

    pub fn top_population(&self) -> f64 {
        let l = self.levels();
        self.rho[(l - 1, l - 1)].re + self.rho[(2 * l - 1, 2 * l - 1)].re
    }
}

/// `⟨σ⁻⟩ = Σ_n ρ_(+n),(−n)`.
pub fn sigma_minus(state: &HybridState) -> C64 {
    let l = state.levels();
    (0..l).map(|n| state.rho[(n, l + n)]).sum()
}

/// Transpose on the two-state factor: swaps the blocks `(s, s')` and `(s', s)`.
pub fn partial_transpose(rho: &CMat, levels: usize) -> CMat {
    CMat::from_fn(rho.dim(), |r, c| {
        let (s, n) = (r / levels, r % levels);
        let (s2, m) = (c / levels, c % levels);
        rho[(s2 * levels + n, s * levels + m)]
    })
}

pub fn pt_min_eig(state: &HybridState) -> Result<f64> {
    hermitian_min_eigenvalue(&partial_transpose(&state.rho, state.levels()))
}

/// `√(ħ / 2Mω)`, the length with `x = x₀ (a + a†)`.
pub fn fock_length(oscillator_mass: f64, omega: f64) -> Result<f64> {
    require_positive("oscillator mass", oscillator_mass)?;
    require_positive("oscillator frequency", omega)?;
    Ok(libm::sqrt(HBAR / (2.0 * oscillator_mass * omega)))
}

/// `g = G M m δx / (d³ √(2Mωħ))`, 1/s.
pub fn hybrid_coupling(oscillator_mass: f64, atom_mass: f64, d: f64, delta_x: f64, omega: f64) -> Result<f64> {
    require_positive("oscillator mass", oscillator_mass)?;
    require_positive("atom mass", atom_mass)?;
    require_positive("separation d", d)?;
    require_non_negative("superposition width", delta_x)?;
    require_positive("oscillator frequency", omega)?;
    Ok(G_N * oscillator_mass * atom_mass * delta_x / (d * d * d * libm::sqrt(2.0 * oscillator_mass * omega * HBAR)))
}

/// The entangling threshold `2g`, 1/s.
pub fn hybrid_threshold(oscillator_mass: f64, atom_mass: f64, d: f64, delta_x: f64, omega: f64) -> Result<f64> {
    Ok(2.0 * hybrid_coupling(oscillator_mass, atom_mass, d, delta_x, omega)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridParams {
    pub oscillator_mass: f64,
    pub omega: f64,
    pub atom_mass: f64,
    pub d: f64,
    pub delta_x: f64,
    pub g: f64,
    /// Dephasing rate of the two-state mass.
    pub gamma2: f64,
    /// Coefficient of `[X, [ρ, σ_z]]`, `S_12 δx x₀ / (2ħ²)`.
    pub beta_term: f64,
    pub kernel: DissipationKernel,
}

impl HybridParams {
    /// Mass 1 of the kernel is the oscillator, mass 2 the two-state system.
    pub fn from_kernel(
        kernel: DissipationKernel,
        oscillator_mass: f64,
        omega: f64,
        atom_mass: f64,
        d: f64,
        delta_x: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        require_positive("superposition width", delta_x)?;
        let g = hybrid_coupling(oscillator_mass, atom_mass, d, delta_x, omega)?;
        let x0 = fock_length(oscillator_mass, omega)?;
        Ok(Self {
            oscillator_mass,
            omega,
            atom_mass,
            d,
            delta_x,
            g,
            gamma2: kernel.dephasing_rate(1, delta_x, spec)?,
            beta_term: kernel.correlated_noise(d)? * delta_x * x0 / (2.0 * HBAR * HBAR),
            kernel,
        })
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("oscillator mass", self.oscillator_mass)?;
        require_positive("oscillator frequency", self.omega)?;
        require_positive("atom mass", self.atom_mass)?;
        require_positive("separation d", self.d)?;
        require_positive("superposition width", self.delta_x)?;
        require_non_negative("coupling g", self.g)?;
        require_non_negative("gamma2", self.gamma2)?;
        if !self.beta_term.is_finite() {
            return Err(Error::domain("beta term", "must be finite"));
        }
        Ok(())
    }

    /// Relative deviation of `g` from its geometric value.
    pub fn coupling_deviation(&self) -> Result<f64> {
        let geometric = hybrid_coupling(self.oscillator_mass, self.atom_mass, self.d, self.delta_x, self.omega)?;
        Ok((self.g - geometric).abs() / geometric.abs().max(f64::MIN_POSITIVE))
    }

    pub fn x0(&self) -> Result<f64> {
        fock_length(self.oscillator_mass, self.omega)
    }

    /// Coefficient `q` of `−(q/2)[X, [X, ρ]]` from the kernel's quadratic term.
    pub fn osc_quadratic(&self) -> Result<f64> {
        let x0 = self.x0()?;
        Ok(self.kernel.quadratic[0] * x0 * x0 / (HBAR * HBAR))
    }

    /// `(1/2Mωħ) d⟨p₁²⟩_e/dt`, 1/s.
    pub fn heating_rate(&self, spec: &QuadratureSpec) -> Result<f64> {
        Ok(self.kernel.force_noise(0, spec)? / (2.0 * self.oscillator_mass * self.omega * HBAR))
    }
}

impl HybridParams {
    /// Oscillator with `x₀ = 1 m` and `ω = 1/s`: a flat `f1 = 4.8e-3` on
    /// `k ≤ 1`, `q = 1e-3`, `Γ2 = 5e-3`, `g = 0.02` and the mixed coefficient
    /// at half its positivity bound. Rates are of order 1e-2/s, so the Fock
    /// dynamics resolve the perturbative slope.
    pub fn scaled_benchmark() -> Self {
        let amplitude = 4.8e-3;
        let flat = crate::models::RadialProfile::Tabulated {
            k: vec![0.0, 1.0],
            f: vec![amplitude, amplitude],
        };
        let q = 1e-3;
        let gamma2 = 5e-3;
        let mut kernel =
            DissipationKernel::custom(flat, crate::models::RadialProfile::Zero, 0.0).expect("finite correlated noise");
        kernel.quadratic = [q * HBAR * HBAR, 0.0];
        Self {
            oscillator_mass: HBAR / 2.0,
            omega: 1.0,
            atom_mass: 1.0,
            d: 1.0,
            delta_x: 1e-3,
            g: 0.02,
            gamma2,
            beta_term: 0.5 * libm::sqrt(q * gamma2),
            kernel,
        }
    }
}

/// One displacement channel `w [D(iκ) ρ D(iκ)† − ρ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpNode {
    pub k: f64,
    pub u: f64,
    /// Channel rate, 1/s.
    pub weight: f64,
    /// `k u x₀`.
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpSet {
    pub nodes: Vec<JumpNode>,
    pub gamma2: f64,
    pub beta_term: f64,
}

impl JumpSet {
    /// `Σ w |α|²`; equals `(1/2Mωħ) ħ² ∫ d³k k_x² f₁`.
    pub fn heating_sum(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight * n.kappa * n.kappa).sum()
    }

    /// `Σ w (1 − e^(−|α|²))`, the rate at which kicks leave the ground state.
    pub fn effective_rate(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.weight * -libm::expm1(-n.kappa * n.kappa))
            .sum()
    }
}

fn panel_edges(f: &dyn RadialFunction) -> Vec<f64> {
    let k_max = f.k_max();
    let mut edges: Vec<f64> = (0..=GEOMETRIC_PANELS).map(|j| k_max * libm::ldexp(1.0, -j)).collect();
    edges.push(0.0);
    let breaks = f.breakpoints();
    if breaks.len() <= MAX_KERNEL_BREAKPOINTS {
        edges.extend(breaks.into_iter().filter(|&b| b > 0.0 && b < k_max));
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * k_max);
    edges
}

/// Discretizes the momentum-kick channel of mass 1 with `n_quad_nodes`
/// Gauss–Legendre nodes per radial panel and in `cos θ`.
pub fn build_jump_operators(params: &HybridParams, n_quad_nodes: usize) -> Result<JumpSet> {
    if n_quad_nodes < 8 {
        return Err(Error::domain("quadrature nodes", "need at least 8"));
    }
    params.validate()?;
    let x0 = params.x0()?;
    let (gl_x, gl_w) = gauss_legendre(n_quad_nodes)?;
    let f = &params.kernel.f[0];
    let mut nodes = Vec::new();
    if !f.is_zero() {
        for panel in panel_edges(f).windows(2) {
            let (a, b) = (panel[0], panel[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (xk, wk) in gl_x.iter().zip(&gl_w) {
                let k = mid + half * xk;
                let radial = 2.0 * core::f64::consts::PI * k * k * f.value(k) * wk * half;
                if radial == 0.0 {
                    continue;
                }
                if !radial.is_finite() {
                    return Err(Error::domain(
                        "kernel f1",
                        alloc::format!("non-finite value at k = {k:e}"),
                    ));
                }
                for (u, wu) in gl_x.iter().zip(&gl_w) {
                    nodes.push(JumpNode {
                        k,
                        u: *u,
                        weight: radial * wu,
                        kappa: k * u * x0,
                    });
                }
            }
        }
    }
    Ok(JumpSet {
        nodes,
        gamma2: params.gamma2,
        beta_term: params.beta_term,
    })
}

/// Eigenbasis of the position quadrature `X = a + a†` on a padded Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionBasis {
    levels: usize,
    padded: usize,
    values: Vec<f64>,
    /// Rows `0..levels` of the eigenvector matrix, row-major `levels × padded`.
    vectors: Vec<f64>,
}

impl PositionBasis {
    pub fn new(n_max: usize, padding: usize) -> Result<Self> {
        let levels = n_max + 1;
        let padded = levels + padding;
        let off: Vec<f64> = (1..padded).map(|n| libm::sqrt(n as f64)).collect();
        let (values, full) = symmetric_tridiagonal_eigen(&vec![0.0; padded], &off)?;
        Ok(Self {
            levels,
            padded,
            values,
            vectors: full[..levels * padded].to_vec(),
        })
    }

    fn v(&self, n: usize, a: usize) -> f64 {
        self.vectors[n * self.padded + a]
    }

    /// `⟨n|D(iκ)|m⟩` on the first `N + 1` levels.
    pub fn displacement(&self, kappa: f64) -> CMat {
        let phases: Vec<C64> = self.values.iter().map(|l| C64::new(0.0, kappa * l).exp()).collect();
        CMat::from_fn(self.levels, |n, m| {
            (0..self.padded)
                .map(|a| phases[a] * (self.v(n, a) * self.v(m, a)))
                .sum()
        })
    }

    /// `V_cᵀ B V_c`, then `M ∘ ·`, then back: `V_c (M ∘ V_cᵀ B V_c) V_cᵀ`.
    fn hadamard_conjugate(&self, b: &CMat, m: &[f64]) -> CMat {
        let (l, p) = (self.levels, self.padded);
        let mut t = vec![ZERO; l * p];
        for n in 0..l {
            for k in 0..l {
                let bnk = b[(n, k)];
                if bnk == ZERO {
                    continue;
                }
                for a in 0..p {
                    t[n * p + a] += bnk * self.v(k, a);
                }
            }
        }
        let mut w = vec![ZERO; p * p];
        for n in 0..l {
            for a in 0..p {
                let vna = self.v(n, a);
                for c in 0..p {
                    w[a * p + c] += t[n * p + c] * vna;
                }
            }
        }
        for (wi, mi) in w.iter_mut().zip(m) {
            *wi *= *mi;
        }
        let mut u = vec![ZERO; p * l];
        for a in 0..p {
            for c in 0..p {
                let wac = w[a * p + c];
                for k in 0..l {
                    u[a * l + k] += wac * self.v(k, c);
                }
            }
        }
        let mut out = CMat::zeros(l);
        for n in 0..l {
            for a in 0..p {
                let vna = self.v(n, a);
                for k in 0..l {
                    out[(n, k)] += u[a * l + k] * vna;
                }
            }
        }
        out
    }
}

/// Construction options for [`HybridGenerator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridOptions {
    pub n_max: usize,
    pub padding: usize,
    pub quad_nodes: usize,
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_FOCK_LEVELS,
            padding: DEFAULT_PADDING,
            quad_nodes: DEFAULT_QUAD_NODES,
        }
    }
}

/// The Lindblad generator on the truncated space, ready to apply.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridGenerator {
    levels: usize,
    basis: PositionBasis,
    /// `Σ_w w (cos κ(λ_a − λ_b) − 1)` over the padded eigenbasis.
    kick: Vec<f64>,
    has_kicks: bool,
    omega: f64,
    g: f64,
    gamma2: f64,
    mix: f64,
    quad: f64,
    jump_rate: f64,
    heating: f64,
}

impl HybridGenerator {
    pub fn new(params: &HybridParams, options: &HybridOptions) -> Result<Self> {
        let jumps = build_jump_operators(params, options.quad_nodes)?;
        let basis = PositionBasis::new(options.n_max, options.padding)?;
        let p = basis.padded;
        let mut kick = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..a {
                let delta = basis.values[a] - basis.values[b];
                let sum: f64 = jumps
                    .nodes
                    .iter()
                    .map(|node| {
                        let s = libm::sin(0.5 * node.kappa * delta);
                        node.weight * s * s
                    })
                    .sum();
                kick[a * p + b] = -2.0 * sum;
                kick[b * p + a] = -2.0 * sum;
            }
        }
        Ok(Self {
            levels: options.n_max + 1,
            basis,
            kick,
            has_kicks: !jumps.nodes.is_empty(),
            omega: params.omega,
            g: params.g,
            gamma2: params.gamma2,
            mix: params.beta_term,
            quad: params.osc_quadratic()?,
            jump_rate: jumps.effective_rate(),
            heating: jumps.heating_sum(),
        })
    }

    pub fn n_max(&self) -> usize {
        self.levels - 1
    }

    /// Heating rate of the discretized kick channel, `Σ w |α|²`.
    pub fn heating_sum(&self) -> f64 {
        self.heating
    }

    /// Sum of the dissipative rates entering the step-size criterion.
    pub fn total_rate(&self) -> f64 {
        self.jump_rate + 2.0 * self.gamma2 + self.quad + 2.0 * self.mix.abs()
    }

    /// Largest `dt` the integrator accepts.
    pub fn max_step(&self) -> f64 {
        STEP_LIMIT / (self.omega + self.g + self.total_rate())
    }

    fn x_left(&self, b: &CMat) -> CMat {
        let l = self.levels;
        CMat::from_fn(l, |n, m| {
            let mut acc = ZERO;
            if n > 0 {
                acc += b[(n - 1, m)] * libm::sqrt(n as f64);
            }
            if n + 1 < l {
                acc += b[(n + 1, m)] * libm::sqrt((n + 1) as f64);
            }
            acc
        })
    }

    fn x_right(&self, b: &CMat) -> CMat {
        let l = self.levels;
        CMat::from_fn(l, |n, m| {
            let mut acc = ZERO;
            if m > 0 {
                acc += b[(n, m - 1)] * libm::sqrt(m as f64);
            }
            if m + 1 < l {
                acc += b[(n, m + 1)] * libm::sqrt((m + 1) as f64);
            }
            acc
        })
    }

    fn block(&self, rho: &CMat, s: usize, s2: usize) -> CMat {
        let l = self.levels;
        CMat::from_fn(l, |n, m| rho[(s * l + n, s2 * l + m)])
    }

    /// Dissipative part acting on the block `(s, s')`.
    fn dissipate_block(&self, b: &CMat, s: usize, s2: usize) -> CMat {
        let mut out = if self.has_kicks {
            self.basis.hadamard_conjugate(b, &self.kick)
        } else {
            CMat::zeros(self.levels)
        };
        if s != s2 && self.gamma2 != 0.0 {
            out.add_assign_scaled(b, C64::new(-2.0 * self.gamma2, 0.0));
        }
        if self.quad != 0.0 || (s != s2 && self.mix != 0.0) {
            let xb = self.x_left(b);
            let bx = self.x_right(b);
            if self.quad != 0.0 {
                let xxb = self.x_left(&xb);
                let bxx = self.x_right(&bx);
                let xbx = self.x_right(&xb);
                let q = -0.5 * self.quad;
                out.add_assign_scaled(&xxb, C64::new(q, 0.0));
                out.add_assign_scaled(&bxx, C64::new(q, 0.0));
                out.add_assign_scaled(&xbx, C64::new(-2.0 * q, 0.0));
            }
            if s != s2 && self.mix != 0.0 {
                let c = self.mix * (spin(s2) - spin(s));
                out.add_assign_scaled(&xb, C64::new(c, 0.0));
                out.add_assign_scaled(&bx, C64::new(-c, 0.0));
            }
        }
        out
    }

    fn assemble(&self, mut per_block: impl FnMut(&CMat, usize, usize) -> CMat, rho: &CMat) -> CMat {
        let l = self.levels;
        let mut out = CMat::zeros(2 * l);
        for s in 0..2 {
            for s2 in 0..2 {
                let b = self.block(rho, s, s2);
                let r = per_block(&b, s, s2);
                for n in 0..l {
                    for m in 0..l {
                        out[(s * l + n, s2 * l + m)] = r[(n, m)];
                    }
                }
            }
        }
        out
    }

    /// The dissipator alone.
    pub fn dissipator(&self, rho: &CMat) -> CMat {
        self.assemble(|b, s, s2| self.dissipate_block(b, s, s2), rho)
    }

    /// The full generator `−i[H, ρ] + 𝒟(ρ)`.
    pub fn apply(&self, rho: &CMat) -> CMat {
        self.assemble(
            |b, s, s2| {
                let mut out = self.dissipate_block(b, s, s2);
                let l = self.levels;
                // −i (H_s B − B H_s'), H_s = ω n + g z_s X
                let xb = self.x_left(b);
                let bx = self.x_right(b);
                for n in 0..l {
                    for m in 0..l {
                        let diag = self.omega * (n as f64 - m as f64) * b[(n, m)];
                        let coupling = xb[(n, m)] * (self.g * spin(s)) - bx[(n, m)] * (self.g * spin(s2));
                        out[(n, m)] += C64::new(0.0, -1.0) * (diag + coupling);
                    }
                }
                out
            },
            rho,
        )
    }

    /// `tr[𝒟(ρ) p] / p₀`, with `p/p₀ = i(a† − a)`.
    pub fn momentum_drift(&self, rho: &CMat) -> C64 {
        let d = self.dissipator(rho);
        let l = self.levels;
        let mut acc = ZERO;
        for s in 0..2 {
            let o = s * l;
            for n in 0..l - 1 {
                let root = libm::sqrt((n + 1) as f64);
                // ⟨n+1|p|n⟩ = i√(n+1), ⟨n|p|n+1⟩ = −i√(n+1)
                acc += C64::new(0.0, root) * d[(o + n, o + n + 1)] - C64::new(0.0, root) * d[(o + n + 1, o + n)];
            }
        }
        acc
    }

    pub fn evolve(&self, state0: &HybridState, t_final: f64, dt: f64) -> Result<(HybridState, EvolutionDiagnostics)> {
        self.evolve_with(state0, t_final, dt, |_| Ok(()))
    }

    /// Fixed-step RK4. `observe` sees the initial state and every step.
    pub fn evolve_with(
        &self,
        state0: &HybridState,
        t_final: f64,
        dt: f64,
        mut observe: impl FnMut(&HybridState) -> Result<()>,
    ) -> Result<(HybridState, EvolutionDiagnostics)> {
        require_non_negative("duration", t_final)?;
        require_positive("time step", dt)?;
        if state0.n_max != self.n_max() {
            return Err(Error::domain(
                "hybrid state",
                alloc::format!("state has N = {} but generator has N = {}", state0.n_max, self.n_max()),
            ));
        }
        let limit = self.max_step();
        if dt > limit {
            return Err(Error::StepSize { dt, limit });
        }
        let steps = libm::ceil(t_final / dt).max(if t_final > 0.0 { 1.0 } else { 0.0 }) as usize;
        let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
        let mut diag = EvolutionDiagnostics {
            steps,
            ..EvolutionDiagnostics::default()
        };
        let mut state = state0.clone();
        observe(&state)?;
        for _ in 0..steps {
            let rho = &state.rho;
            let k1 = self.apply(rho);
            let k2 = self.apply(&rho.add(&k1.scale_real(0.5 * h)));
            let k3 = self.apply(&rho.add(&k2.scale_real(0.5 * h)));
            let k4 = self.apply(&rho.add(&k3.scale_real(h)));
            let mut next = rho.clone();
            next.add_assign_scaled(&k1, C64::new(h / 6.0, 0.0));
            next.add_assign_scaled(&k2, C64::new(h / 3.0, 0.0));
            next.add_assign_scaled(&k3, C64::new(h / 3.0, 0.0));
            next.add_assign_scaled(&k4, C64::new(h / 6.0, 0.0));
            diag.max_hermiticity_defect = diag.max_hermiticity_defect.max(next.hermiticity_defect());
            next.symmetrize();
            let tr = next.trace().re;
            diag.max_trace_deviation = diag.max_trace_deviation.max((tr - 1.0).abs());
            next = next.scale_real(1.0 / tr);
            state = HybridState {
                rho: next,
                n_max: state.n_max,
                t: state.t + h,
            };
            let top = state.top_population();
            diag.max_top_population = diag.max_top_population.max(top);
            if top > TRUNCATION_LIMIT {
                return Err(Error::Truncation {
                    level: state.n_max,
                    population: top,
                });
            }
            observe(&state)?;
        }
        Ok((state, diag))
    }
}

/// `tr[𝒟(ρ) p] / p₀` for a state on `N + 1` levels, evaluated in an engine
/// with [`DEFAULT_PADDING`] extra levels so the truncation edge stays out of
/// reach.
pub fn ehrenfest_drift(params: &HybridParams, state: &HybridState, quad_nodes: usize) -> Result<C64> {
    let l = state.levels();
    let generator = HybridGenerator::new(
        params,
        &HybridOptions {
            n_max: state.n_max + DEFAULT_PADDING,
            padding: DEFAULT_PADDING,
            quad_nodes,
        },
    )?;
    let big = generator.levels;
    let mut rho = CMat::zeros(2 * big);
    for r in 0..2 * l {
        for c in 0..2 * l {
            rho[((r / l) * big + r % l, (c / l) * big + c % l)] = state.rho[(r, c)];
        }
    }
    Ok(generator.momentum_drift(&rho))
}

/// Deviations removed by the per-step symmetrization, and truncation health.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvolutionDiagnostics {
    pub steps: usize,
    pub max_trace_deviation: f64,
    pub max_hermiticity_defect: f64,
    pub max_top_population: f64,
}

/// Evolves with the default padding and quadrature nodes.
pub fn evolve_numeric(
    state0: &HybridState,
    params: &HybridParams,
    t_final: f64,
    dt: f64,
) -> Result<(HybridState, EvolutionDiagnostics)> {
    let options = HybridOptions {
        n_max: state0.n_max,
        ..HybridOptions::default()
    };
    HybridGenerator::new(params, &options)?.evolve(state0, t_final, dt)
}

/// One row of a trajectory trace.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridSample {
    pub t: f64,
    pub populations: Vec<f64>,
    pub sigma_minus: C64,
    pub pt_min_eig: f64,
}

impl HybridSample {
    pub fn of(state: &HybridState) -> Result<Self> {
        Ok(Self {
            t: state.t,
            populations: state.oscillator_populations(),
            sigma_minus: sigma_minus(state),
            pt_min_eig: pt_min_eig(state)?,
        })
    }
}

/// The real symmetric projection `D_nm`, `1 ≤ n, m ≤ size`, in 1/s.
#[derive(Debug, Clone, PartialEq)]
pub struct DnmMatrix {
    pub size: usize,
    /// Row-major; entry `(n−1, m−1)` holds `D_nm`.
    pub entries: Vec<f64>,
}

impl DnmMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            entries: vec![0.0; size * size],
        }
    }

    /// `D_nm` with 1-based indices.
    pub fn at(&self, n: usize, m: usize) -> f64 {
        self.entries[(n - 1) * self.size + (m - 1)]
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(crate::linalg::symmetric_eigenvalues(&self.entries, self.size)?[0])
    }
}

/// `D_nm = i^(n−m)/√(n!m!) ∫ d³k f₁ e^(−k_x² x₀²) (k_x x₀)^(n+m)`, plus the
/// quadratic single-body term on `D₁₁`. Only even `n + m` survive, where the
/// phase is real.
pub fn dnm_matrix(
    kernel: &DissipationKernel,
    oscillator_mass: f64,
    omega: f64,
    n_max_pert: usize,
    spec: &QuadratureSpec,
) -> Result<DnmMatrix> {
    if n_max_pert < 2 {
        return Err(Error::domain("perturbative truncation", "need at least 2 levels"));
    }
    let x0 = fock_length(oscillator_mass, omega)?;
    let s = x0 * x0;
    let mut d = DnmMatrix::zeros(n_max_pert);
    if !kernel.f[0].is_zero() {
        for n in 1..=n_max_pert {
            for m in (n..=n_max_pert).step_by(2) {
                let v = gaussian_weighted_moment(&kernel.f[0], n, m, s, spec)?.re;
                d.entries[(n - 1) * n_max_pert + (m - 1)] = v;
                d.entries[(m - 1) * n_max_pert + (n - 1)] = v;
            }
        }
    }
    d.entries[0] += kernel.quadratic[0] * s / (HBAR * HBAR);
    Ok(d)
}

/// `γ(λ) = D₁₁ + D₁ₙ (λ − D)⁻¹ₙₘ D_m1`, `n, m ≥ 2`.
pub fn gamma_of_lambda(lambda: f64, d: &DnmMatrix) -> Result<f64> {
    let k = d.size - 1;
    if k == 0 {
        return Ok(d.at(1, 1));
    }
    let v: Vec<f64> = (2..=d.size).map(|n| d.at(1, n)).collect();
    if v.iter().all(|x| *x == 0.0) {
        return Ok(d.at(1, 1));
    }
    let mut a = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            a[i * k + j] = -d.at(i + 2, j + 2);
        }
        a[i * k + i] += lambda;
    }
    let y = solve_real(&a, &v, k)?;
    Ok(d.at(1, 1) + v.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSolution {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Both roots of the implicit first-order eigenvalue equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda1 {
    pub minus: BranchSolution,
    pub plus: BranchSolution,
}

pub const LAMBDA1_TOLERANCE: f64 = 1e-12;
pub const LAMBDA1_MAX_ITERATIONS: usize = 200;

/// On the outer intervals `λ < min spec(D')` and `λ > max spec(D')` the map
/// `h(λ) = λ − F(λ)` is increasing, so the iteration keeps a bracket and
/// bisects whenever a damped step would leave it.
fn lambda_branch(
    sign: f64,
    gamma2: f64,
    coupling_sq: f64,
    d: &DnmMatrix,
    bracket: (f64, f64),
    scale: f64,
) -> Result<BranchSolution> {
    let map = |gamma: f64| {
        let root = libm::sqrt((gamma2 - gamma) * (gamma2 - gamma) + 4.0 * coupling_sq);
        0.5 * (gamma2 + gamma + sign * root)
    };
    let (mut lo, mut hi) = bracket;
    let mut lambda = map(d.at(1, 1));
    if !(lambda > lo && lambda < hi) {
        lambda = 0.5 * (lo + hi);
    }
    let mut damping = 1.0;
    let mut last_step = 0.0f64;
    let mut residual = f64::INFINITY;
    for iteration in 1..=LAMBDA1_MAX_ITERATIONS {
        let step = map(gamma_of_lambda(lambda, d)?) - lambda;
        residual = step.abs();
        if residual <= LAMBDA1_TOLERANCE * scale {
            return Ok(BranchSolution {
                value: lambda + step,
                residual,
                iterations: iteration,
            });
        }
        if step > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        if step * last_step < 0.0 {
            damping *= 0.5;
        }
        last_step = step;
        let candidate = lambda + damping * step;
        lambda = if candidate > lo && candidate < hi {
            candidate
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NoConvergence {
        what: "first-order eigenvalue",
        residual,
        iterations: LAMBDA1_MAX_ITERATIONS,
    })
}

/// Damped fixed-point iteration on
/// `λ = (Γ₂ + γ(λ) ± √((Γ₂ − γ(λ))² + 4g² + 4b²)) / 2`, seeded from `γ = D₁₁`.
///
/// The minus branch is the root below the spectrum of `D_nm` (`n, m ≥ 2`) and
/// the plus branch the root above it; these are the extreme eigenvalues of
/// [`perturbation_matrix`] whenever the eigenvector has `a₀ ≠ 0`.
pub fn lambda1_solve(gamma2: f64, g: f64, beta_term: f64, d: &DnmMatrix) -> Result<Lambda1> {
    require_non_negative("gamma2", gamma2)?;
    let scale = d
        .entries
        .iter()
        .fold(gamma2.max(g.abs()).max(beta_term.abs()), |s, v| s.max(v.abs()));
    if scale == 0.0 {
        let zero = BranchSolution {
            value: 0.0,
            residual: 0.0,
            iterations: 0,
        };
        return Ok(Lambda1 {
            minus: zero,
            plus: zero,
        });
    }
    let coupling_sq = g * g + beta_term * beta_term;
    let c = perturbation_matrix(gamma2, g, beta_term, d);
    let (mut lower, mut upper) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..c.dim() {
        let radius: f64 = (0..c.dim()).filter(|&j| j != i).map(|j| c[(i, j)].norm()).sum();
        lower = lower.min(c[(i, i)].re - radius);
        upper = upper.max(c[(i, i)].re + radius);
    }
    let pad = scale * 1e-6;
    let (lower, upper) = (lower - pad, upper + pad);
    let coupled = (2..=d.size).any(|n| d.at(1, n) != 0.0);
    let (inner_lo, inner_hi) = if coupled {
        let k = d.size - 1;
        let block: Vec<f64> = (0..k * k).map(|i| d.at(i / k + 2, i % k + 2)).collect();
        let mu = crate::linalg::symmetric_eigenvalues(&block, k)?;
        (mu[0], mu[k - 1])
    } else {
        (upper, lower)
    };
    Ok(Lambda1 {
        minus: lambda_branch(-1.0, gamma2, coupling_sq, d, (lower, inner_lo), scale)?,
        plus: lambda_branch(1.0, gamma2, coupling_sq, d, (inner_hi, upper), scale)?,
    })
}

/// The projected first-order matrix `C` on `{φ₀, φ₊¹, φ₊², …}`.
pub fn perturbation_matrix(gamma2: f64, g: f64, beta_term: f64, d: &DnmMatrix) -> CMat {
    CMat::from_fn(d.size + 1, |i, j| match (i, j) {
        (0, 0) => C64::new(gamma2, 0.0),
        (0, 1) => C64::new(beta_term, -g),
        (1, 0) => C64::new(beta_term, g),
        (0, _) | (_, 0) => ZERO,
        _ => C64::new(d.at(i, j), 0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HybridVerdict {
    /// `Γ_e < 2g`: sufficient for entanglement.
    pub sufficient: bool,
    /// `(1/2Mωħ) d⟨p₁²⟩_e/dt + |d|⟨σ⁻⟩|_e/dt|`, 1/s.
    pub noise: f64,
    /// `2g`, 1/s.
    pub threshold: f64,
}

pub fn hybrid_entangling(params: &HybridParams, spec: &QuadratureSpec) -> Result<HybridVerdict> {
    params.validate()?;
    let noise = params.heating_rate(spec)? + params.gamma2;
    let threshold = 2.0 * params.g;
    Ok(HybridVerdict {
        sufficient: noise < threshold,
        noise,
        threshold,
    })
}
