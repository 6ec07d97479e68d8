//! Noise reports: rates of a kernel in a given experiment, the entangling
//! threshold of the architecture, and the verdicts of its engine.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{require_positive, Error, Result};
use crate::gaussian::{onset_rate, oscillators_entangling, OscillatorRates};
use crate::hybrid::{self, dnm_matrix, lambda1_solve, HybridParams};
use crate::models::{DissipationKernel, ModelKind};
use crate::quadrature::QuadratureSpec;
use crate::qubit::{negativity_rate, qubits_entangling, QubitRates};
use crate::units::{force_noise_to_acceleration_asd, G_N, HBAR};

/// Paper benchmark inputs and quoted values.
pub mod benchmarks {
    /// 1 mg.
    pub const OSCILLATOR_MASS: f64 = 1e-6;
    pub const OSCILLATOR_D: f64 = 1e-3;
    /// Quoted `S_FF` threshold, N²/Hz.
    pub const OSCILLATOR_SFF: f64 = 2.8e-47;
    /// 10 fg.
    pub const QUBIT_MASS: f64 = 1e-17;
    pub const QUBIT_D: f64 = 1e-3;
    pub const QUBIT_DELTA_X: f64 = 1e-4;
    /// Quoted qubit threshold, Hz.
    pub const QUBIT_RATE: f64 = 6.0;
    /// 1 g.
    pub const HYBRID_OSCILLATOR_MASS: f64 = 1e-3;
    /// 132 u, in atomic mass units.
    pub const HYBRID_ATOM_MASS_U: f64 = 132.0;
    pub const HYBRID_D: f64 = 1e-3;
    pub const HYBRID_DELTA_X: f64 = 1e-6;
    pub const HYBRID_OMEGA: f64 = 1.0;
    /// Quoted order of magnitude of the hybrid threshold, Hz.
    pub const HYBRID_RATE: f64 = 1e-16;
}

/// Reports disagree with the paper's scaling law beyond this factor.
pub const DISCREPANCY_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Architecture {
    Oscillators,
    Qubits,
    Hybrid,
}

impl Architecture {
    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Oscillators => "oscillators",
            Architecture::Qubits => "qubits",
            Architecture::Hybrid => "hybrid",
        }
    }
}

/// Masses, geometry and trap data of one experiment. For the hybrid
/// architecture mass 1 is the oscillator and mass 2 the two-state system.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    pub architecture: Architecture,
    pub m1: f64,
    pub m2: f64,
    pub d: f64,
    /// Bare trap frequencies, 1/s.
    #[cfg_attr(feature = "serde", serde(default))]
    pub omega1: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub omega2: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub delta_x: Option<f64>,
}

fn required(value: Option<f64>, what: &'static str, architecture: Architecture) -> Result<f64> {
    let v = value.ok_or_else(|| {
        Error::domain(
            what,
            alloc::format!("is required for the {} architecture", architecture.name()),
        )
    })?;
    require_positive(what, v)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("m1", self.m1)?;
        require_positive("m2", self.m2)?;
        require_positive("d", self.d)?;
        match self.architecture {
            Architecture::Oscillators => {
                required(self.omega1, "omega1", self.architecture)?;
                required(self.omega2, "omega2", self.architecture)?;
            }
            Architecture::Qubits => {
                required(self.delta_x, "delta_x", self.architecture)?;
            }
            Architecture::Hybrid => {
                required(self.omega1, "omega1", self.architecture)?;
                required(self.delta_x, "delta_x", self.architecture)?;
            }
        }
        Ok(())
    }
}

/// `4 G m1 m2 ħ / d³`, N²/Hz.
pub fn threshold_oscillators(m1: f64, m2: f64, d: f64) -> Result<f64> {
    require_positive("m1", m1)?;
    require_positive("m2", m2)?;
    require_positive("d", d)?;
    Ok(4.0 * G_N * m1 * m2 * HBAR / (d * d * d))
}

/// `G m1 m2 δx² / (ħ d³)`, 1/s.
pub fn threshold_qubits(m1: f64, m2: f64, d: f64, delta_x: f64) -> Result<f64> {
    require_positive("m1", m1)?;
    require_positive("m2", m2)?;
    require_positive("d", d)?;
    crate::error::require_non_negative("delta_x", delta_x)?;
    Ok(G_N * m1 * m2 * delta_x * delta_x / (HBAR * d * d * d))
}

/// `2 G M m δx / (d³ √(2Mωħ))`, 1/s.
pub fn threshold_hybrid(oscillator_mass: f64, atom_mass: f64, d: f64, delta_x: f64, omega: f64) -> Result<f64> {
    hybrid::hybrid_threshold(oscillator_mass, atom_mass, d, delta_x, omega)
}

/// The paper's quoted scaling law evaluated at a configuration, next to the
/// value computed here.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PaperComparison {
    pub paper: f64,
    pub computed: f64,
    /// `computed / paper`.
    pub ratio: f64,
    /// The two differ by more than [`DISCREPANCY_FACTOR`].
    pub discrepant: bool,
}

impl PaperComparison {
    pub fn new(paper: f64, computed: f64) -> Self {
        let ratio = computed / paper;
        Self {
            paper,
            computed,
            ratio,
            discrepant: !(1.0 / DISCREPANCY_FACTOR..=DISCREPANCY_FACTOR).contains(&ratio),
        }
    }
}

/// `2.8e-47 N²/Hz × (m/1 mg)² (1 mm/d)³` with `m² → m1 m2`.
pub fn paper_oscillator_threshold(m1: f64, m2: f64, d: f64) -> f64 {
    use benchmarks::*;
    OSCILLATOR_SFF * (m1 * m2 / (OSCILLATOR_MASS * OSCILLATOR_MASS)) * libm::pow(OSCILLATOR_D / d, 3.0)
}

/// `6 Hz × (m/10 fg)² (δx/100 μm)² (1 mm/d)³` with `m² → m1 m2`.
pub fn paper_qubit_threshold(m1: f64, m2: f64, d: f64, delta_x: f64) -> f64 {
    use benchmarks::*;
    QUBIT_RATE
        * (m1 * m2 / (QUBIT_MASS * QUBIT_MASS))
        * libm::pow(delta_x / QUBIT_DELTA_X, 2.0)
        * libm::pow(QUBIT_D / d, 3.0)
}

/// `1e-16 Hz × (δx/1 μm)(1 mm/d)³(1 Hz/ω)^(1/2)`.
pub fn paper_hybrid_threshold(d: f64, delta_x: f64, omega: f64) -> f64 {
    use benchmarks::*;
    HYBRID_RATE * (delta_x / HYBRID_DELTA_X) * libm::pow(HYBRID_D / d, 3.0) * libm::sqrt(HYBRID_OMEGA / omega)
}

/// The architecture threshold at a configuration, with the paper comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Threshold {
    pub architecture: Architecture,
    pub value: f64,
    pub unit: &'static str,
    /// Acceleration form `√S / m` of the oscillator threshold, m/s²/√Hz.
    pub acceleration_asd: Option<f64>,
    pub paper: PaperComparison,
}

pub fn threshold_for(config: &ExperimentConfig) -> Result<Threshold> {
    config.validate()?;
    let ExperimentConfig { m1, m2, d, .. } = *config;
    Ok(match config.architecture {
        Architecture::Oscillators => {
            let value = threshold_oscillators(m1, m2, d)?;
            Threshold {
                architecture: config.architecture,
                value,
                unit: "N^2/Hz",
                acceleration_asd: Some(force_noise_to_acceleration_asd(value, libm::sqrt(m1 * m2))?),
                paper: PaperComparison::new(paper_oscillator_threshold(m1, m2, d), value),
            }
        }
        Architecture::Qubits => {
            let dx = required(config.delta_x, "delta_x", config.architecture)?;
            let value = threshold_qubits(m1, m2, d, dx)?;
            Threshold {
                architecture: config.architecture,
                value,
                unit: "Hz",
                acceleration_asd: None,
                paper: PaperComparison::new(paper_qubit_threshold(m1, m2, d, dx), value),
            }
        }
        Architecture::Hybrid => {
            let dx = required(config.delta_x, "delta_x", config.architecture)?;
            let omega = required(config.omega1, "omega1", config.architecture)?;
            let value = threshold_hybrid(m1, m2, d, dx, omega)?;
            Threshold {
                architecture: config.architecture,
                value,
                unit: "Hz",
                acceleration_asd: None,
                paper: PaperComparison::new(paper_hybrid_threshold(d, dx, omega), value),
            }
        }
    })
}

/// Noise rates of a kernel in an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Rates {
    /// Architecture-normalized single-body rates, 1/s.
    pub gamma1: f64,
    pub gamma2: f64,
    /// `Γ12` (oscillators), `S_12 δx²/4ħ²` (qubits) or the mixed coefficient
    /// (hybrid), 1/s.
    pub correlated: f64,
    /// `g` (oscillators, hybrid) or `α_G δx²/2ħ` (qubits), 1/s.
    pub coupling: f64,
    /// Single-body force noise, N²/Hz.
    pub sff1: f64,
    pub sff2: f64,
    pub sff_total: f64,
    /// Correlated force noise `S_12`, N²/Hz.
    pub s12: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Verdicts {
    /// Exact condition of the architecture (hybrid: first-order
    /// partial-transpose eigenvalue is negative).
    pub exact: bool,
    /// Conservative condition (hybrid: the sufficient noise bound).
    pub conservative: bool,
    /// The force-noise form for oscillators.
    pub am_gm: Option<bool>,
    /// Onset rate of entanglement: Simon eigenvalue slope (oscillators),
    /// negativity slope (qubits), first-order eigenvalue (hybrid), 1/s.
    pub onset: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Flag {
    pub code: &'static str,
    pub message: String,
}

impl Flag {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

pub mod flag_codes {
    pub const SMALL_DISPLACEMENT: &str = "small_displacement_violated";
    pub const POSITIVITY: &str = "positivity_violated";
    pub const BENCHMARK_DISCREPANCY: &str = "benchmark_discrepancy";
    pub const MODEL_NOTE: &str = "model_note";
    pub const UPPER_BOUND: &str = "gravitational_noise_only";
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NoiseReport {
    pub model: ModelKind,
    pub config: ExperimentConfig,
    pub rates: Rates,
    pub threshold: Threshold,
    pub verdicts: Verdicts,
    pub flags: Vec<Flag>,
}

impl NoiseReport {
    pub fn has_flag(&self, code: &str) -> bool {
        self.flags.iter().any(|f| f.code == code)
    }
}

/// Perturbative Fock levels used for the hybrid exact verdict.
pub const HYBRID_PERTURBATIVE_LEVELS: usize = 6;

/// All rates, the threshold and the verdicts of `kernel` in `config`.
pub fn noise_report(
    kernel: &DissipationKernel,
    config: &ExperimentConfig,
    spec: &QuadratureSpec,
) -> Result<NoiseReport> {
    spec.validate()?;
    let threshold = threshold_for(config)?;
    let ExperimentConfig { m1, m2, d, .. } = *config;
    let masses = [m1, m2];
    let sff1 = kernel.force_noise(0, spec)?;
    let sff2 = kernel.force_noise(1, spec)?;
    let s12 = kernel.correlated_noise(d)?;
    let mut flags: Vec<Flag> = kernel
        .notes
        .iter()
        .map(|n| Flag::new(flag_codes::MODEL_NOTE, n.clone()))
        .collect();
    flags.push(Flag::new(
        flag_codes::UPPER_BOUND,
        "rates include gravitational dissipation only; a measured rate bounds them from above",
    ));
    if threshold.paper.discrepant {
        flags.push(Flag::new(
            flag_codes::BENCHMARK_DISCREPANCY,
            alloc::format!(
                "computed threshold {:e} differs from the quoted scaling law {:e} by a factor {:.3e}",
                threshold.paper.computed,
                threshold.paper.paper,
                threshold.paper.ratio
            ),
        ));
    }
    if let Some(dx) = config.delta_x {
        if dx >= d {
            flags.push(Flag::new(
                flag_codes::SMALL_DISPLACEMENT,
                alloc::format!("superposition width {dx:e} is not small against the separation {d:e}"),
            ));
        }
    }
    let (rates, verdicts) = match config.architecture {
        Architecture::Oscillators => {
            let omegas = [config.omega1.unwrap_or(0.0), config.omega2.unwrap_or(0.0)];
            let r = OscillatorRates::from_kernel(kernel, masses, omegas, d, spec)?;
            if r.positivity_defect() > 0.0 {
                flags.push(Flag::new(
                    flag_codes::POSITIVITY,
                    alloc::format!("gamma12^2 exceeds gamma1*gamma2 by {:e}", r.positivity_defect()),
                ));
            }
            let v = oscillators_entangling(&r);
            (
                Rates {
                    gamma1: r.gamma1,
                    gamma2: r.gamma2,
                    correlated: r.gamma12,
                    coupling: r.g,
                    sff1,
                    sff2,
                    sff_total: sff1 + sff2,
                    s12,
                },
                Verdicts {
                    exact: v.exact,
                    conservative: v.conservative,
                    am_gm: Some(v.am_gm),
                    onset: onset_rate(&r),
                },
            )
        }
        Architecture::Qubits => {
            let dx = required(config.delta_x, "delta_x", config.architecture)?;
            let r = QubitRates::from_kernel(kernel, masses, d, dx, spec)?;
            if r.positivity_defect() > 0.0 {
                flags.push(Flag::new(
                    flag_codes::POSITIVITY,
                    alloc::format!(
                        "(4 beta_term)^2 exceeds 16 gamma1 gamma2 by {:e}",
                        r.positivity_defect()
                    ),
                ));
            }
            let v = qubits_entangling(&r);
            (
                Rates {
                    gamma1: r.gamma1,
                    gamma2: r.gamma2,
                    correlated: r.beta_term,
                    coupling: r.coupling,
                    sff1,
                    sff2,
                    sff_total: sff1 + sff2,
                    s12,
                },
                Verdicts {
                    exact: v.exact,
                    conservative: v.conservative,
                    am_gm: None,
                    onset: negativity_rate(&r),
                },
            )
        }
        Architecture::Hybrid => {
            let dx = required(config.delta_x, "delta_x", config.architecture)?;
            let omega = required(config.omega1, "omega1", config.architecture)?;
            let params = HybridParams::from_kernel(kernel.clone(), m1, omega, m2, d, dx, spec)?;
            let sufficient = hybrid::hybrid_entangling(&params, spec)?;
            let dnm = dnm_matrix(kernel, m1, omega, HYBRID_PERTURBATIVE_LEVELS, spec)?;
            let lambda = lambda1_solve(params.gamma2, params.g, params.beta_term, &dnm)?;
            let heating = params.heating_rate(spec)?;
            let mix_bound = (dnm.at(1, 1) * params.gamma2).max(0.0);
            if params.beta_term * params.beta_term > mix_bound * (1.0 + 1e-12) && params.beta_term != 0.0 {
                flags.push(Flag::new(
                    flag_codes::POSITIVITY,
                    "mixed coefficient exceeds the geometric mean of the oscillator and two-state rates",
                ));
            }
            (
                Rates {
                    gamma1: heating,
                    gamma2: params.gamma2,
                    correlated: params.beta_term,
                    coupling: params.g,
                    sff1,
                    sff2,
                    sff_total: sff1 + sff2,
                    s12,
                },
                Verdicts {
                    exact: lambda.minus.value < 0.0,
                    conservative: sufficient.sufficient,
                    am_gm: None,
                    onset: lambda.minus.value,
                },
            )
        }
    };
    Ok(NoiseReport {
        model: kernel.kind,
        config: *config,
        rates,
        threshold,
        verdicts,
        flags,
    })
}

/// The paper's qubit benchmark row: quoted 6 Hz against the computed value.
pub fn qubit_benchmark() -> Result<PaperComparison> {
    use benchmarks::*;
    let computed = threshold_qubits(QUBIT_MASS, QUBIT_MASS, QUBIT_D, QUBIT_DELTA_X)?;
    Ok(PaperComparison::new(QUBIT_RATE, computed))
}

/// Short description of a verdict pair, for human-readable output.
pub fn verdict_summary(v: &Verdicts) -> String {
    match (v.conservative, v.exact) {
        (true, _) => "entangling".to_string(),
        (false, true) => "entangling (exact condition only)".to_string(),
        (false, false) => "not guaranteed".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{cq_kernel, entropic_local_kernel, CqParams, EntropicLocalParams};
    use crate::units::ATOMIC_MASS_UNIT;
    use approx::assert_relative_eq;

    fn osc(m: f64, d: f64) -> ExperimentConfig {
        ExperimentConfig {
            architecture: Architecture::Oscillators,
            m1: m,
            m2: m,
            d,
            omega1: Some(1.0),
            omega2: Some(1.0),
            delta_x: None,
        }
    }

    #[test]
    fn oscillator_benchmark() {
        let t = threshold_for(&osc(1e-6, 1e-3)).unwrap();
        assert_relative_eq!(t.value, 2.8e-47, max_relative = 0.05);
        let asd = t.acceleration_asd.unwrap();
        assert!(asd > 4e-18 && asd < 6e-18, "{asd}");
        assert!(!t.paper.discrepant);
        assert_relative_eq!(
            threshold_oscillators(1e-6, 1e-6, 2e-3).unwrap(),
            t.value / 8.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn qubit_benchmark_is_flagged() {
        let b = qubit_benchmark().unwrap();
        assert_eq!(b.paper, 6.0);
        assert_relative_eq!(b.computed, 6.33e-10, max_relative = 1e-2);
        assert!(b.discrepant);
        assert_eq!(threshold_qubits(1.0, 1.0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hybrid_benchmark() {
        let m = benchmarks::HYBRID_ATOM_MASS_U * ATOMIC_MASS_UNIT;
        let v = threshold_hybrid(1e-3, m, 1e-3, 1e-6, 1.0).unwrap();
        assert!(v > 3e-17 && v < 3e-16);
        let c = PaperComparison::new(paper_hybrid_threshold(1e-3, 1e-6, 1.0), v);
        assert!(!c.discrepant);
    }

    #[test]
    fn config_validation_names_the_field() {
        let mut c = osc(1e-6, 1e-3);
        c.omega2 = None;
        let err = c.validate().unwrap_err();
        assert!(alloc::format!("{err}").contains("omega2"));
        c.architecture = Architecture::Qubits;
        assert!(c.validate().is_err());
        c.delta_x = Some(1e-6);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn graviton_reports_are_entangling() {
        let spec = QuadratureSpec::default();
        let k = DissipationKernel::graviton();
        let m_atom = 132.0 * ATOMIC_MASS_UNIT;
        for config in [
            osc(1e-6, 1e-3),
            ExperimentConfig {
                architecture: Architecture::Qubits,
                m1: 1e-14,
                m2: 1e-14,
                d: 1e-3,
                omega1: None,
                omega2: None,
                delta_x: Some(1e-4),
            },
            ExperimentConfig {
                architecture: Architecture::Hybrid,
                m1: 1e-3,
                m2: m_atom,
                d: 1e-3,
                omega1: Some(1.0),
                omega2: None,
                delta_x: Some(1e-6),
            },
        ] {
            let r = noise_report(&k, &config, &spec).unwrap();
            assert_eq!(r.rates.sff_total, 0.0);
            assert_eq!(r.rates.gamma1, 0.0);
            assert!(r.verdicts.exact && r.verdicts.conservative, "{:?}", config.architecture);
        }
    }

    #[test]
    fn cq_oscillator_benchmark_not_guaranteed() {
        let spec = QuadratureSpec::default();
        let d = 1e-3;
        let ell = d / 10.0;
        for (d0, d2) in [(1.0, 1.0), (1e-6, 1e6), (1e-8, 1e9), (10.0, 10.0)] {
            let p = CqParams::new(d0, d2, ell).unwrap();
            let k = cq_kernel(&p, 1e-6, 1e-6).unwrap();
            let r = noise_report(&k, &osc(1e-6, d), &spec).unwrap();
            assert!(!r.verdicts.conservative);
            assert!(r.rates.sff_total > r.threshold.value);
            assert!(r.has_flag(flag_codes::MODEL_NOTE));
        }
    }

    #[test]
    fn lattice_regime_flag() {
        let spec = QuadratureSpec::default();
        let a = 1e-3;
        let p = EntropicLocalParams::on_constraint(a, 1e3, 0.5, 1e4).unwrap();
        let k = entropic_local_kernel(&p, 1e-6, 1e-6, 0.5 * a).unwrap();
        let r = noise_report(&k, &osc(1e-6, 0.5 * a), &spec).unwrap();
        assert!(r.flags.iter().any(|f| f.message.contains("lattice spacing")));
    }

    #[test]
    fn small_displacement_flag() {
        let spec = QuadratureSpec::default();
        let c = ExperimentConfig {
            architecture: Architecture::Qubits,
            m1: 1e-14,
            m2: 1e-14,
            d: 1e-4,
            omega1: None,
            omega2: None,
            delta_x: Some(2e-4),
        };
        let r = noise_report(&DissipationKernel::graviton(), &c, &spec).unwrap();
        assert!(r.has_flag(flag_codes::SMALL_DISPLACEMENT));
        assert!(r.has_flag(flag_codes::BENCHMARK_DISCREPANCY));
    }
}
