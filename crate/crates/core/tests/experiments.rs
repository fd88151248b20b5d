use stirap::cli::csv::sweep_csv;
use stirap::experiments::{
    find_optimal_amplitude, log_grid, run_single, sweep_amplitude, sweep_amplitude_with,
    transmon_checkpoint, Execution, SweepSpec, DEFAULT_BRACKET, DEFAULT_TOL, REFERENCE_GAMMA_TILDES,
};
use stirap::units::PhysicalScale;

const P2_STAR: f64 = 0.999741237248;

#[test]
fn small_amplitude_without_cross_terms_is_ideal() {
    let r = run_single(0.05, 0.0, false, &SweepSpec::default()).unwrap();
    assert!((r.p2() - P2_STAR).abs() < 1e-9);
}

#[test]
fn cross_terms_cost_fidelity_at_large_amplitude() {
    let spec = SweepSpec::default();
    let on = run_single(1.0, 0.0, true, &spec).unwrap().p2();
    let off = run_single(1.0, 0.0, false, &spec).unwrap().p2();
    assert!(on < off - 0.05, "on {on}, off {off}");
}

#[test]
fn cross_terms_negligible_at_small_amplitude() {
    let spec = SweepSpec::default();
    let on = run_single(0.05, 0.0, true, &spec).unwrap().p2();
    let off = run_single(0.05, 0.0, false, &spec).unwrap().p2();
    assert!((on - off).abs() <= 0.01);
}

#[test]
fn more_decoherence_never_helps() {
    let mut rates = vec![0.0];
    rates.extend(REFERENCE_GAMMA_TILDES);
    let spec = SweepSpec {
        omega_over_delta_grid: log_grid(0.05, 1.0, 7),
        gamma_tilde_list: rates.clone(),
        cross_variants: vec![true],
        ..SweepSpec::default()
    };
    let rows = sweep_amplitude(&spec).unwrap();
    for chunk in rows.chunks(rates.len()) {
        for w in chunk.windows(2) {
            assert!(w[1].p2() <= w[0].p2() + 1e-12, "{w:?}");
        }
    }
}

#[test]
fn sweep_is_deterministic_and_schedule_independent() {
    let spec = SweepSpec {
        omega_over_delta_grid: log_grid(0.1, 1.0, 5),
        gamma_tilde_list: vec![0.0, 1e-3],
        ..SweepSpec::default()
    };
    let a = sweep_csv(&sweep_amplitude(&spec).unwrap());
    let b = sweep_csv(&sweep_amplitude(&spec).unwrap());
    let c = sweep_csv(&sweep_amplitude_with(&spec, Execution::Serial).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn zero_decoherence_optimum_sits_at_lower_edge() {
    let o = find_optimal_amplitude(0.0, &SweepSpec::default(), DEFAULT_BRACKET, DEFAULT_TOL).unwrap();
    assert!(
        o.boundary && o.omega_star_over_delta == DEFAULT_BRACKET.0,
        "optimum at omega/delta = {} with p2 = {} (boundary: {})",
        o.omega_star_over_delta,
        o.p2_star,
        o.boundary
    );
}

#[test]
fn optimum_beats_its_neighbours() {
    let spec = SweepSpec::default();
    let o = find_optimal_amplitude(1e-3, &spec, DEFAULT_BRACKET, DEFAULT_TOL).unwrap();
    assert!(!o.boundary && !o.multimodal);
    for dx in [-0.02, 0.02] {
        let p = run_single(o.omega_star_over_delta + dx, 1e-3, true, &spec).unwrap().p2();
        assert!(p <= o.p2_star + 1e-9);
    }
    assert!((o.sigma_star_times_delta * o.omega_star_over_delta - spec.a_param).abs() < 1e-12);
}

#[test]
fn transmon_units_round_trip() {
    let r = transmon_checkpoint().unwrap();
    let back = PhysicalScale::new(300.0).unwrap();
    let x = r.omega_star_mhz / back.delta_mhz;
    let t = r.sigma_star_ns * back.delta_rad_per_ns();
    assert!((x - r.optimum.omega_star_over_delta).abs() <= 1e-15 * x);
    assert!((t - r.optimum.sigma_star_times_delta).abs() <= 1e-14 * t);
    assert!((r.omega_star_mhz * 1e-3 * 2.0 * std::f64::consts::PI * r.sigma_star_ns - 3.0 * std::f64::consts::PI).abs() < 1e-10);
}
