use gravnoise_core::gaussian::{oscillators_entangling, OscillatorRates};
use gravnoise_core::linalg::hermitian_eigenvalues;
use gravnoise_core::models::{cq_min_sff, cq_sff_closed, CqParams};
use gravnoise_core::qubit::{evolve_analytic, negativity_rate, qubits_entangling, QubitPairState, QubitRates};
use gravnoise_core::scanner::{scan_cq, Detector, LogAxis, ScanSpec};
use proptest::prelude::*;

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

prop_compose! {
    fn oscillator_rates()(g1 in 0.0..2.0f64, g2 in 0.0..2.0f64, rho in -1.0..1.0f64, g in 0.0..1.0f64, r in log_uniform(0.1, 10.0))
        -> OscillatorRates {
        OscillatorRates { gamma1: g1, gamma2: g2, gamma12: rho * (g1 * g2).sqrt(), g, p0_ratio: r }
    }
}

prop_compose! {
    fn qubit_rates()(g1 in 0.0..2.0f64, g2 in 0.0..2.0f64, rho in -1.0..1.0f64, c in 0.0..1.0f64) -> QubitRates {
        QubitRates { gamma1: g1, gamma2: g2, beta_term: rho * (g1 * g2).sqrt(), coupling: c, delta_x: 1e-6 }
    }
}

proptest! {
    #[test]
    fn oscillator_sufficient_forms_imply_exact(r in oscillator_rates()) {
        let v = oscillators_entangling(&r);
        prop_assert!(!v.conservative || v.exact);
        prop_assert!(!v.am_gm || v.exact);
    }

    #[test]
    fn qubit_conservative_implies_exact(r in qubit_rates()) {
        let v = qubits_entangling(&r);
        prop_assert!(!v.conservative || v.exact);
        prop_assert_eq!(v.exact, negativity_rate(&r) > 0.0);
    }

    #[test]
    fn qubit_evolution_is_physical(r in qubit_rates(), t in 0.0..5.0f64) {
        prop_assume!(r.validate().is_ok());
        let s = evolve_analytic(&QubitPairState::product_superposition(), &r, t).unwrap();
        prop_assert!((s.rho.trace().re - 1.0).abs() < 1e-13);
        prop_assert!(s.rho.hermiticity_defect() < 1e-14);
        prop_assert!(hermitian_eigenvalues(&s.rho).unwrap()[0] > -1e-12);
    }

    #[test]
    fn cq_noise_is_monotone(d0 in log_uniform(1e-6, 1e6), d2 in log_uniform(1e-6, 1e6), ell in log_uniform(1e-6, 1e-1), f in 1.0..10.0f64) {
        let m = 1e-6;
        let base = cq_sff_closed(&CqParams::new(d0, d2, ell).unwrap(), m).unwrap();
        prop_assert!(cq_sff_closed(&CqParams::new(d0 * f, d2, ell).unwrap(), m).unwrap() >= base);
        prop_assert!(cq_sff_closed(&CqParams::new(d0, d2 * f, ell).unwrap(), m).unwrap() >= base);
    }

    #[test]
    fn cq_tradeoff_floor(d0 in log_uniform(1e-9, 1e9), excess in 1.0..100.0f64, ell in log_uniform(1e-6, 1e-1)) {
        let p = CqParams::new(d0, excess / d0, ell).unwrap();
        let m = 1e-9;
        prop_assert!(cq_sff_closed(&p, m).unwrap() >= cq_min_sff(ell, m).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn scans_are_consistent(ell in log_uniform(1e-3, 1e-1), s_aa in log_uniform(1e-18, 1e-14), n in 8usize..14) {
        let spec = ScanSpec {
            d0: LogAxis::new(1e-4, 1e10, n).unwrap(),
            d2: LogAxis::new(1e-4, 1e16, n + 1).unwrap(),
            measured: Detector::new(ell, s_aa),
            threshold: Detector::new(ell, s_aa * 1e-3),
        };
        let coarse = scan_cq(&spec).unwrap();
        let check = coarse.check();
        prop_assert!(check.ok(), "{:?}", check.failures());
        let fine = scan_cq(&spec.refined()).unwrap();
        prop_assert!(fine.check().ok());
        prop_assert_eq!(coarse.disagreements_with_refinement(&fine), 0);
    }
}
