use stirap::dynamics::{
    evolve, liouvillian_oracle, liouvillian_oracle_from, simulate, DensityMatrix, EvolutionGrid,
};
use stirap::experiments::SweepSpec;
use stirap::model::{CommutatorSign, DriveConfig, SystemConfig, DEFAULT_A_PARAM, DEFAULT_T_S_OVER_SIGMA};

/// Ideal transfer (γ̃ = 0, cross off, a = 3π, t_s = −1.5σ), from the oracle
/// at ×32 and ×64 refinement extrapolated in dt².
const P2_STAR: f64 = 0.999741237248;

fn reference(x: f64, g: f64, cross: bool) -> (DriveConfig, SystemConfig) {
    SweepSpec::default().configs(x, g, cross).unwrap()
}

#[test]
fn ideal_transfer_matches_frozen_value() {
    let (d, s) = reference(0.1, 0.0, false);
    let p2 = simulate(&d, &s).unwrap().p2();
    assert!((p2 - P2_STAR).abs() < 1e-9, "{p2}");
    let grid = EvolutionGrid::for_run(&d, &s).unwrap().refined(8);
    let ex = liouvillian_oracle(&d, &s, &grid).unwrap().p2();
    assert!((ex - P2_STAR).abs() < 1e-6, "{ex}");
}

#[test]
fn halving_dt_is_below_1e9() {
    let (d, s) = reference(0.1, 0.0, false);
    let grid = EvolutionGrid::for_run(&d, &s).unwrap();
    let a = evolve(&d, &s, &grid, &DensityMatrix::ground()).unwrap().p2();
    let b = evolve(&d, &s, &grid.refined(2), &DensityMatrix::ground()).unwrap().p2();
    assert!((a - b).abs() <= 1e-9, "{:e}", (a - b).abs());
}

#[test]
fn window_sensitivity() {
    for x in [0.05, 0.367, 1.0] {
        let (d, s) = reference(x, 0.0, false);
        let p: Vec<f64> = [4.0, 5.0, 6.0]
            .iter()
            .map(|&m| simulate(&d, &SystemConfig { window_mult: m, ..s }).unwrap().p2())
            .collect();
        for v in &p {
            assert!((v - p[1]).abs() <= 1e-6, "x = {x}: {p:?}");
        }
    }
}

#[test]
fn commutator_sign_does_not_change_populations() {
    for (x, g) in [(0.367, 0.0), (0.5, 16.7e-4)] {
        let (d, s) = reference(x, g, true);
        let a = simulate(&d, &s).unwrap();
        let b = simulate(&d, &SystemConfig { commutator_sign: CommutatorSign::Reversed, ..s }).unwrap();
        for i in 0..3 {
            assert!((a.populations[i] - b.populations[i]).abs() < 1e-12);
        }
        // With zero detunings H has only 0-1 and 1-2 entries, so
        // P = diag(1, −1, 1) maps H to −H and the reversed run is PρP.
        let (ra, rb) = (a.rho_final.matrix(), b.rho_final.matrix());
        assert!((ra[(0, 1)] + rb[(0, 1)]).norm() < 1e-12);
        assert!((ra[(0, 2)] - rb[(0, 2)]).norm() < 1e-12);
    }
}

#[test]
fn oracle_converges_at_second_order() {
    let (d, s) = reference(0.367, 16.7e-4, true);
    let base = EvolutionGrid::for_run(&d, &s).unwrap();
    let p: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&f| liouvillian_oracle(&d, &s, &base.refined(f)).unwrap().p2())
        .collect();
    let order = ((p[0] - p[1]) / (p[1] - p[2])).abs().log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}, {p:?}");
}

#[test]
fn closed_system_stays_pure() {
    for cross in [false, true] {
        let (d, s) = reference(0.367, 0.0, cross);
        let grid = EvolutionGrid::for_run(&d, &s).unwrap();
        let rk = evolve(&d, &s, &grid, &DensityMatrix::ground()).unwrap();
        assert!((rk.rho_final.purity() - 1.0).abs() < 1e-7);
        let ex = liouvillian_oracle(&d, &s, &grid).unwrap();
        assert!((ex.rho_final.purity() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn frequency_time_rescaling_leaves_populations() {
    let (d, s) = reference(0.367, 16.7e-4, true);
    let base = simulate(&d, &s).unwrap();
    for c in [0.1, 3.0, 10.0] {
        let dc = DriveConfig::new(
            d.omega01_peak * c,
            d.omega12_peak * c,
            d.sigma / c,
            d.t_s / c,
            d.delta01 * c,
            d.delta12 * c,
        )
        .unwrap();
        let sc = SystemConfig { delta_anh: c, ..s };
        let r = simulate(&dc, &sc).unwrap();
        for i in 0..3 {
            assert!((r.populations[i] - base.populations[i]).abs() < 1e-8, "c = {c}");
        }
    }
}

#[test]
fn transfer_is_amplitude_independent_without_cross_terms() {
    let p: Vec<f64> = [0.05, 0.2, 0.5, 1.0]
        .iter()
        .map(|&x| {
            let d = DriveConfig::symmetric(x, DEFAULT_A_PARAM, DEFAULT_T_S_OVER_SIGMA).unwrap();
            let s = SystemConfig { cross_coupling: false, ..Default::default() };
            simulate(&d, &s).unwrap().p2()
        })
        .collect();
    for v in &p {
        assert!((v - p[0]).abs() <= 1e-3);
    }
}

#[test]
fn oracle_agrees_on_drive_free_examples() {
    let off = DriveConfig::new(0.0, 0.0, 10.0, 0.0, 0.0, 0.0).unwrap();

    // cascade from |2⟩
    let g = 0.01;
    let s = SystemConfig { gamma_tilde: g, ..Default::default() };
    let grid = EvolutionGrid::new(0.0, 200.0, 0.05).unwrap();
    let rho0 = DensityMatrix::basis(2);
    let rk = evolve(&off, &s, &grid, &rho0).unwrap();
    let ex = liouvillian_oracle_from(&off, &s, &grid, &rho0).unwrap();
    let t: f64 = 200.0;
    let e = (-g * t).exp();
    let want = [1.0 - g * t * e - e, g * t * e, e];
    for i in 0..3 {
        assert!((rk.populations[i] - want[i]).abs() < 1e-7);
        assert!((ex.populations[i] - want[i]).abs() < 1e-7);
    }

    // closed system with no drive: nothing moves
    let s0 = SystemConfig::default();
    let rho0 = DensityMatrix::basis(1);
    let ex = liouvillian_oracle_from(&off, &s0, &grid, &rho0).unwrap();
    assert!(ex.rho_final.matrix().approx_eq(rho0.matrix(), 1e-12));
}
