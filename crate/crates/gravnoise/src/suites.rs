//! Invariant suites behind `gravnoise validate`.

use gravnoise_core::gaussian::OscillatorRates;
use gravnoise_core::hybrid::{ehrenfest_drift, HybridParams, HybridState, DEFAULT_QUAD_NODES};
use gravnoise_core::linalg::{CMat, C64};
use gravnoise_core::models::{
    cq_kernel, cq_min_sff, cq_sff_closed, entropic_i_integrals, entropic_local_kernel, entropic_nonlocal_kernel,
    CqParams, DissipationKernel, EntropicLocalParams, EntropicNonlocalParams, MediatorIntegrals, RadialProfile,
};
use gravnoise_core::quadrature::QuadratureSpec;
use gravnoise_core::qubit::{qubits_entangling, QubitRates};
use gravnoise_core::scanner::{classify, scan_cq, Label, LogAxis, ScanSpec};
use gravnoise_core::thresholds::threshold_oscillators;
use gravnoise_core::units::HBAR;
use gravnoise_core::Result;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Ehrenfest defect allowed on random states.
pub const EHRENFEST_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checked: usize,
    pub failures: usize,
    /// Largest violation measure seen (suite-specific).
    pub worst: f64,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            failures: 0,
            worst: 0.0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, measure: f64, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if measure.is_finite() {
            self.worst = self.worst.max(measure);
        }
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

/// Tradeoff labelling and the constrained noise floor of the CQ model.
pub fn tradeoff_suite(rng: &mut impl Rng, draws: usize) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("tradeoff");
    let spec = ScanSpec::default();
    for _ in 0..draws {
        let d0 = log_uniform(rng, 1e-8, 1e8);
        let d2 = log_uniform(rng, 1e-8, 1e8);
        let cell = classify(&spec, d0, d2)?;
        let forbidden = d0 * d2 < 1.0;
        r.record((cell.label == Label::ForbiddenTradeoff) == forbidden, 0.0, || {
            format!("D0={d0:e} D2={d2:e} labelled {}", cell.label)
        });
        if !forbidden {
            let ell = log_uniform(rng, 1e-6, 1e-1);
            let m = log_uniform(rng, 1e-17, 1e-3);
            let s = cq_sff_closed(&CqParams::new(d0, d2, ell)?, m)?;
            let floor = cq_min_sff(ell, m)?;
            r.record(s >= floor * (1.0 - 1e-12), floor / s, || {
                format!("D0={d0:e} D2={d2:e} below the floor")
            });
        }
    }
    Ok(r)
}

/// Predicted CQ noise exceeds the oscillator threshold once `d ≥ 3ℓ`.
pub fn cq_never_entangles(rng: &mut impl Rng, draws: usize) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("cq_never_entangles");
    for _ in 0..draws {
        let d0 = log_uniform(rng, 1e-8, 1e8);
        let d2 = log_uniform(rng, 1.0, 1e4) / d0;
        let ell = log_uniform(rng, 1e-7, 1e-2);
        let d = ell * rng.gen_range(3.0..100.0);
        let m = log_uniform(rng, 1e-17, 1e-2);
        let s = cq_sff_closed(&CqParams::new(d0, d2, ell)?, m)?;
        let t = threshold_oscillators(m, m, d)?;
        r.record(s > t, t / s, || format!("D0={d0:e} D2={d2:e} ell={ell:e} d={d:e}"));
    }
    Ok(r)
}

/// A random kernel from the catalog in the regime where the small-width
/// qubit rates apply (`δx` at most a tenth of every kernel length).
pub struct CatalogDraw {
    pub name: &'static str,
    pub kernel: DissipationKernel,
    pub masses: [f64; 2],
    pub d: f64,
    pub delta_x: f64,
}

pub fn catalog_draw(rng: &mut impl Rng, integrals: &MediatorIntegrals, which: usize) -> Result<CatalogDraw> {
    let masses = [log_uniform(rng, 1e-17, 1e-3), log_uniform(rng, 1e-17, 1e-3)];
    Ok(match which % 5 {
        0 => {
            let d = log_uniform(rng, 1e-5, 1e-1);
            CatalogDraw {
                name: "graviton",
                kernel: DissipationKernel::graviton(),
                masses,
                d,
                delta_x: d * 1e-2,
            }
        }
        1 => {
            let ell = log_uniform(rng, 1e-7, 1e-3);
            let d0 = log_uniform(rng, 1e-6, 1e6);
            let p = CqParams::new(d0, log_uniform(rng, 1.0, 1e3) / d0, ell)?;
            CatalogDraw {
                name: "cq",
                kernel: cq_kernel(&p, masses[0], masses[1])?,
                masses,
                d: ell * rng.gen_range(4.0..50.0),
                delta_x: ell * rng.gen_range(1e-3..0.1),
            }
        }
        2 => {
            let a = log_uniform(rng, 1e-7, 1e-4);
            let p = EntropicLocalParams::on_constraint(
                a,
                log_uniform(rng, 0.1, 1e3),
                rng.gen_range(0.05..0.95),
                log_uniform(rng, 0.1, 1e3),
            )?;
            let d = a * log_uniform(rng, 1.0, 1e3);
            CatalogDraw {
                name: "entropic_local",
                kernel: entropic_local_kernel(&p, masses[0], masses[1], d)?,
                masses,
                d,
                delta_x: a * rng.gen_range(1e-3..0.1),
            }
        }
        3 => {
            let d = log_uniform(rng, 1e-5, 1e-1);
            let p = EntropicNonlocalParams::on_constraint(
                rng.gen_range(0.0..1e-2),
                log_uniform(rng, 1e-8, 1e-2),
                log_uniform(rng, 0.1, 10.0),
                masses[0],
                masses[1],
            )?;
            CatalogDraw {
                name: "entropic_nonlocal",
                kernel: entropic_nonlocal_kernel(&p, masses[0], masses[1], d, integrals)?,
                masses,
                d,
                delta_x: d * rng.gen_range(1e-4..0.1),
            }
        }
        _ => {
            let k_max = log_uniform(rng, 1e2, 1e5);
            let ks: Vec<f64> = (0..6).map(|i| k_max * i as f64 / 5.0).collect();
            let f1: Vec<f64> = ks.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
            let f2: Vec<f64> = ks.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
            let (p1, p2) = (
                RadialProfile::tabulated(ks.clone(), f1)?,
                RadialProfile::tabulated(ks, f2)?,
            );
            let spec = QuadratureSpec::default();
            let s1 = HBAR * HBAR * gravnoise_core::quadrature::heating_moment(&p1, &spec)?;
            let s2 = HBAR * HBAR * gravnoise_core::quadrature::heating_moment(&p2, &spec)?;
            CatalogDraw {
                name: "custom",
                kernel: DissipationKernel::custom(p1, p2, rng.gen_range(-0.9..0.9) * (s1 * s2).sqrt())?,
                masses,
                d: log_uniform(rng, 1e-4, 1e-1),
                delta_x: 0.1 / k_max * rng.gen_range(1e-3..1.0),
            }
        }
    })
}

/// `Γ12² ≤ Γ1Γ2` and `16 Γ1 Γ2 ≥ (4 β_term)²` on catalog draws, and
/// rejection of rates that break them.
pub fn positivity_suite(rng: &mut impl Rng, draws: usize, spec: &QuadratureSpec) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("positivity");
    let integrals = entropic_i_integrals(spec)?;
    for n in 0..draws {
        let c = catalog_draw(rng, &integrals, n)?;
        let osc = OscillatorRates::from_kernel(&c.kernel, c.masses, [1e8, 1e8], c.d, spec)?;
        let osc_ratio = if osc.gamma1 * osc.gamma2 > 0.0 {
            osc.gamma12 * osc.gamma12 / (osc.gamma1 * osc.gamma2)
        } else {
            0.0
        };
        r.record(
            osc.positivity_defect() == 0.0 && osc.validate().is_ok(),
            osc_ratio - 1.0,
            || format!("{}: gamma12^2/(gamma1 gamma2) = {osc_ratio}", c.name),
        );
        let q = QubitRates::from_kernel(&c.kernel, c.masses, c.d, c.delta_x, spec)?;
        let q_ratio = if q.gamma1 * q.gamma2 > 0.0 {
            q.beta_term * q.beta_term / (q.gamma1 * q.gamma2)
        } else {
            0.0
        };
        r.record(
            q.positivity_defect() == 0.0 && q.validate().is_ok(),
            q_ratio - 1.0,
            || format!("{}: beta_term^2/(gamma1 gamma2) = {q_ratio}", c.name),
        );
        // Enforcement: push the correlated term past the bound.
        let broken = OscillatorRates {
            gamma12: 1.01 * (osc.gamma1 * osc.gamma2).sqrt() + 1e-30,
            ..osc
        };
        r.record(broken.validate().is_err(), 0.0, || {
            format!("{}: violating oscillator rates accepted", c.name)
        });
        let broken = QubitRates {
            beta_term: 1.01 * (q.gamma1 * q.gamma2).sqrt() + 1e-30,
            ..q
        };
        r.record(broken.validate().is_err(), 0.0, || {
            format!("{}: violating qubit rates accepted", c.name)
        });
    }
    Ok(r)
}

/// Non-local model: the exact two-qubit condition holds for every draw.
pub fn nonlocal_entangles(rng: &mut impl Rng, draws: usize, spec: &QuadratureSpec) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("nonlocal_entangles");
    let integrals = entropic_i_integrals(spec)?;
    for _ in 0..draws {
        let c = catalog_draw(rng, &integrals, 3)?;
        let q = QubitRates::from_kernel(&c.kernel, c.masses, c.d, c.delta_x, spec)?;
        let equal = (q.gamma1 - q.beta_term).abs() <= 1e-12 * q.beta_term
            && (q.gamma2 - q.beta_term).abs() <= 1e-12 * q.beta_term;
        let v = qubits_entangling(&q);
        r.record(equal && v.exact, 0.0, || format!("rates {q:?}"));
    }
    Ok(r)
}

/// Random density matrix on `N + 1` oscillator levels times two states.
pub fn random_hybrid_state(rng: &mut impl Rng, n_max: usize) -> Result<HybridState> {
    let dim = 2 * (n_max + 1);
    let a = CMat::from_fn(dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut rho = a.matmul_adjoint(&a);
    rho = rho.scale_real(1.0 / rho.trace().re);
    rho.symmetrize();
    HybridState::new(rho, n_max, 0.0)
}

/// `|tr[𝒟(ρ) p]| / p₀` on random states and random flat kernels.
pub fn ehrenfest_suite(rng: &mut impl Rng, draws: usize) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("ehrenfest");
    for _ in 0..draws {
        let mut params = HybridParams::scaled_benchmark();
        let amplitude = log_uniform(rng, 1e-4, 1e-2);
        let k_max = rng.gen_range(0.3..2.0);
        params.kernel.f[0] =
            RadialProfile::tabulated(vec![0.0, k_max], vec![amplitude, amplitude * rng.gen_range(0.0..1.0)])?;
        params.kernel.quadratic[0] = log_uniform(rng, 1e-5, 1e-2) * HBAR * HBAR;
        let n_max = rng.gen_range(2..8);
        let state = random_hybrid_state(rng, n_max)?;
        let drift = ehrenfest_drift(&params, &state, DEFAULT_QUAD_NODES)?.norm();
        r.record(drift < EHRENFEST_LIMIT, drift, || format!("drift {drift:e}"));
    }
    Ok(r)
}

/// Tradeoff correctness, upward closure and refinement of a coarse scan.
pub fn grid_suite(resolution: usize) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("grid");
    let base = ScanSpec::default();
    let spec = ScanSpec {
        d0: LogAxis::new(base.d0.min, base.d0.max, resolution)?,
        d2: LogAxis::new(base.d2.min, base.d2.max, resolution)?,
        ..base
    };
    let coarse = scan_cq(&spec)?;
    let fine = scan_cq(&spec.refined())?;
    for g in [&coarse, &fine] {
        let check = g.check();
        r.record(check.ok(), 0.0, || check.failures().join("; "));
    }
    let bad = coarse.disagreements_with_refinement(&fine);
    r.record(bad == 0, bad as f64, || {
        format!("{bad} cells change label under refinement")
    });
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_small_samples() {
        let spec = QuadratureSpec::default();
        let mut g = rng(5);
        assert!(tradeoff_suite(&mut g, 50).unwrap().passed());
        assert!(cq_never_entangles(&mut g, 50).unwrap().passed());
        let p = positivity_suite(&mut g, 10, &spec).unwrap();
        assert!(p.passed(), "{p:?}");
        assert!(nonlocal_entangles(&mut g, 5, &spec).unwrap().passed());
        let e = ehrenfest_suite(&mut g, 2).unwrap();
        assert!(e.passed(), "{e:?}");
        assert!(grid_suite(9).unwrap().passed());
    }

    #[test]
    fn random_states_are_deterministic() {
        let a = random_hybrid_state(&mut rng(9), 3).unwrap();
        let b = random_hybrid_state(&mut rng(9), 3).unwrap();
        assert_eq!(a, b);
    }
}
