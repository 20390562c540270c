use deadcore::config::ExperimentConfig;
use deadcore::field::{BoundaryData, GridSpec};
use deadcore::params::ProblemParams;
use deadcore::solver::{cfl_dt, step};
use proptest::prelude::*;

fn config_text(p: f64, q: f64, nx: usize, t_end: f64, every: f64, amp: f64, width: f64, left: f64, right: f64) -> String {
    format!(
        "name = prop\nparams.p = {p}\nparams.q = {q}\ngrid.nx = {nx}\ngrid.t_end = {t_end}\n\
         grid.snapshot_every = {every}\ninitial.kind = bump\ninitial.amplitude = {amp}\n\
         initial.width = {width}\nboundary.left = {left}\nboundary.right = {right}\n\
         analyses = positivity, growth\nanalysis.growth.center_x = free_boundary\n\
         analysis.growth.near_x = {width}\nanalysis.growth.radii = 1/4, 1/8, 1/16\n\
         analysis.growth.tolerance = 0.25\n"
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip_is_idempotent(
        p in 2.0f64..5.0,
        q in 0.0f64..0.99,
        nx in 16usize..512,
        t_end in 0.01f64..10.0,
        frac in 0.05f64..1.0,
        amp in 0.0f64..3.0,
        width in 0.05f64..0.9,
        left in 0.0f64..1.0,
        right in 0.0f64..1.0,
    ) {
        let text = config_text(p, q, nx, t_end, t_end * frac, amp, width, left, right);
        let parsed = ExperimentConfig::parse(&text).unwrap();
        let again = ExperimentConfig::parse(&parsed.to_text()).unwrap();
        prop_assert_eq!(&again, &parsed);
        prop_assert_eq!(again.to_text(), parsed.to_text());
    }

    #[test]
    fn one_step_preserves_order(
        base in prop::collection::vec(0.0f64..1.0, 17),
        gap in prop::collection::vec(0.0f64..0.5, 17),
        p in 2.0f64..4.0,
        q in 0.0f64..0.9,
    ) {
        let params = ProblemParams::new(p, q, 1, 1.0).unwrap();
        let grid = GridSpec::interval(-1.0, 1.0, 16, 1.0, 1.0);
        let hi: Vec<f64> = base.iter().zip(&gap).map(|(a, b)| a + b).collect();
        let lo_bc = BoundaryData::constant(base[0], base[16]);
        let hi_bc = BoundaryData::constant(hi[0], hi[16]);
        let dt = cfl_dt(&base, &params, &grid).min(cfl_dt(&hi, &params, &grid));
        let (lo1, _) = step(&base, 0.0, &params, &grid, &lo_bc, dt).unwrap();
        let (hi1, _) = step(&hi, 0.0, &params, &grid, &hi_bc, dt).unwrap();
        for (a, b) in lo1.iter().zip(&hi1) {
            prop_assert!(a <= &(b + 1e-12), "{} > {}", a, b);
            prop_assert!(*a >= 0.0);
        }
    }
}
