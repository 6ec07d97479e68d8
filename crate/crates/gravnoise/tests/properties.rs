use gravnoise::config::RunConfig;
use gravnoise::output::{fmt_float, grid_from_csv, grid_to_csv, Provenance};
use gravnoise::scan::scan_parallel;
use gravnoise_core::scanner::{Detector, LogAxis, ScanSpec};
use proptest::prelude::*;

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

prop_compose! {
    fn scan_specs()(
        d0_lo in log_uniform(1e-8, 1e-2), d0_span in log_uniform(1e2, 1e16),
        d2_lo in log_uniform(1e-8, 1e-2), d2_span in log_uniform(1e2, 1e20),
        n0 in 8usize..20, n2 in 8usize..20,
        ell in log_uniform(1e-3, 1e-1), s_aa in log_uniform(1e-18, 1e-14),
    ) -> ScanSpec {
        ScanSpec {
            d0: LogAxis::new(d0_lo, d0_lo * d0_span, n0).unwrap(),
            d2: LogAxis::new(d2_lo, d2_lo * d2_span, n2).unwrap(),
            measured: Detector::new(ell, s_aa),
            ..ScanSpec::default()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn floats_round_trip_through_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = fmt_float(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        prop_assert!(s.contains('e'));
    }

    #[test]
    fn grids_round_trip_through_csv(spec in scan_specs(), threads in 1usize..5) {
        let grid = scan_parallel(&spec, Some(threads)).unwrap();
        let p = Provenance::new("scan", &RunConfig::default(), 0);
        let csv = grid_to_csv(&grid, &p);
        prop_assert_eq!(grid_from_csv(&csv).unwrap(), grid.clone());
        prop_assert!(grid.check().ok(), "{:?}", grid.check().failures());
        prop_assert_eq!(&csv, &grid_to_csv(&scan_parallel(&spec, None).unwrap(), &p));
    }

    #[test]
    fn configurations_round_trip_through_toml(spec in scan_specs(), rel_tol in log_uniform(1e-12, 1e-6)) {
        let mut config = RunConfig {
            scan: Some(spec),
            ..RunConfig::default()
        };
        config.quadrature.rel_tol = rel_tol;
        let text = toml::to_string(&config).unwrap();
        prop_assert_eq!(RunConfig::parse(&text).unwrap(), config);
    }
}
