mod common;

use common::{dense_film_oracle, Lcg};
use flowid_core::lubrication::*;
use flowid_core::reference;
use std::f64::consts::PI;

fn max_rel_pressure_error(a: &FilmFields, b: &FilmFields) -> f64 {
    let peak = b.pressure.iter().copied().fold(0.0, f64::max);
    a.pressure
        .iter()
        .zip(&b.pressure)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / peak
}

#[test]
fn gauss_seidel_matches_dense_oracle_on_8x8() {
    let g = reference::bearing_geometry();
    let grid = FilmGrid::new(&g, 8, 8).unwrap();
    let state = ShaftState::stationary(3e-5, -5e-5, reference::operating_speed());
    let q = reference::threshold_flowrate();
    let opts = SolverOptions {
        tolerance: 1e-12,
        ..Default::default()
    };
    let gs = solve_film(&g, &state, &grid, q, &opts).unwrap();
    let oracle = dense_film_oracle(&g, &state, &grid, q);
    let err = max_rel_pressure_error(&gs.fields, &oracle);
    assert!(err < 1e-6, "relative pressure error {err:e}");
    let theta_err = gs
        .theta()
        .iter()
        .zip(&oracle.theta)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(theta_err < 1e-6, "θ error {theta_err:e}");
}

#[test]
fn converged_fields_respect_complementarity() {
    let g = reference::bearing_geometry();
    let grid = FilmGrid::new(&g, 24, 16).unwrap();
    let mut rng = Lcg::new(7);
    for _ in 0..5 {
        let r = rng.uniform(0.0, 0.85) * g.radial_clearance;
        let a = rng.uniform(0.0, 2.0 * PI);
        let state = ShaftState::stationary(r * a.cos(), r * a.sin(), reference::operating_speed());
        let q = rng.uniform(0.25, 2.0) * reference::threshold_flowrate();
        let sol = solve_film(&g, &state, &grid, q, &SolverOptions::default()).unwrap();
        let peak = sol.peak_pressure();
        for (p, t) in sol.pressure().iter().zip(sol.theta()) {
            assert!(*p >= 0.0 && (0.0..=1.0).contains(t));
            assert!(p * (1.0 - t) <= 1e-9 * peak);
        }
    }
}

#[test]
fn edges_hold_boundary_values() {
    let g = reference::bearing_geometry();
    let grid = FilmGrid::new(&g, 20, 12).unwrap();
    let state = ShaftState::stationary(1e-5, -7e-5, reference::operating_speed());
    let sol = solve_film(
        &g,
        &state,
        &grid,
        reference::threshold_flowrate(),
        &SolverOptions::default(),
    )
    .unwrap();
    for i in 0..20 {
        for j in [0, 11] {
            let k = grid.index(i, j);
            assert_eq!(sol.pressure()[k], 0.0);
            assert_eq!(sol.theta()[k], 1.0);
        }
    }
}

#[test]
fn rotating_the_problem_by_one_column_shifts_the_fields() {
    // Periodicity: the seam at α = 0 must be invisible.
    let mut g = reference::bearing_geometry();
    let grid = FilmGrid::new(&g, 24, 10).unwrap();
    let w = reference::operating_speed();
    let q = reference::threshold_flowrate();
    let (r, a) = (6e-5, -2.0);
    let opts = SolverOptions {
        tolerance: 1e-11,
        ..Default::default()
    };
    // e = r·(−sin β, cos β) points at the surface angle β
    let at = |beta: f64| ShaftState::stationary(-r * beta.sin(), r * beta.cos(), w);
    let base = solve_film(&g, &at(a), &grid, q, &opts).unwrap();
    let shift = grid.dalpha();
    g.groove_angle += shift;
    let grid_shifted = FilmGrid::new(&g, 24, 10).unwrap();
    let shifted = solve_film(&g, &at(a + shift), &grid_shifted, q, &opts).unwrap();
    let peak = base.peak_pressure();
    for j in 0..10 {
        for i in 0..24 {
            let k0 = grid.index(i, j);
            let k1 = grid.index((i + 1) % 24, j);
            assert!((base.pressure()[k0] - shifted.pressure()[k1]).abs() < 1e-6 * peak);
            assert!((base.theta()[k0] - shifted.theta()[k1]).abs() < 1e-6);
        }
    }
}

#[test]
fn concentric_journal_without_supply_carries_no_load() {
    let g = reference::bearing_geometry();
    let grid = FilmGrid::new(&g, 32, 16).unwrap();
    let w = reference::operating_speed();
    let state = ShaftState::stationary(0.0, 0.0, w);
    let sol = solve_film(&g, &state, &grid, 0.0, &SolverOptions::default()).unwrap();
    let f = sol.force[0].hypot(sol.force[1]);
    assert!(f < 1e-6 * g.force_scale(w), "force {f}");
}

#[test]
fn concentric_journal_with_supply_is_pushed_away_from_groove() {
    // Surplus supply must leave axially, which needs groove pressure; the
    // resulting load points away from the groove (groove at +Y).
    let g = reference::bearing_geometry();
    let grid = FilmGrid::new(&g, 32, 16).unwrap();
    let state = ShaftState::stationary(0.0, 0.0, reference::operating_speed());
    let sol = solve_film(
        &g,
        &state,
        &grid,
        reference::threshold_flowrate(),
        &SolverOptions::default(),
    )
    .unwrap();
    assert!(sol.force[1] < 0.0);
}

#[test]
fn mass_balance_holds_at_convergence_and_fails_after_one_sweep() {
    let g = reference::bearing_geometry();
    let w = reference::operating_speed();
    let state = ShaftState::stationary(2e-5, -5e-5, w);
    let q = 0.8 * reference::threshold_flowrate();
    let mut last = f64::INFINITY;
    for n in [16, 32] {
        let grid = FilmGrid::new(&g, n, n).unwrap();
        let sol = solve_film(
            &g,
            &state,
            &grid,
            q,
            &SolverOptions {
                tolerance: 1e-9,
                ..Default::default()
            },
        )
        .unwrap();
        let mb = global_mass_balance(&sol, &g, &grid, &state, q).unwrap();
        assert!(mb.imbalance < 1e-3, "imbalance {}", mb.imbalance);
        assert!(mb.imbalance <= last.max(1e-6));
        last = mb.imbalance;
    }
    let grid = FilmGrid::new(&g, 16, 16).unwrap();
    let one = sweep_fixed(&g, &state, &grid, q, 1);
    let mb = global_mass_balance(&one, &g, &grid, &state, q).unwrap();
    assert!(mb.imbalance > 1e-2, "one-sweep imbalance {}", mb.imbalance);
    let capped = solve_film(
        &g,
        &state,
        &grid,
        q,
        &SolverOptions {
            max_sweeps: 1,
            ..Default::default()
        },
    );
    assert!(matches!(
        capped,
        Err(flowid_core::Error::FilmDiverged { sweeps: 1, .. })
    ));
}

#[test]
fn negative_supply_is_rejected() {
    let g = reference::bearing_geometry();
    let grid = FilmGrid::new(&g, 8, 8).unwrap();
    let state = ShaftState::stationary(0.0, 0.0, 100.0);
    assert!(matches!(
        solve_film(&g, &state, &grid, -1e-6, &SolverOptions::default()),
        Err(flowid_core::Error::InvalidInput(_))
    ));
}

#[test]
fn warm_start_reaches_the_same_solution() {
    let g = reference::bearing_geometry();
    let grid = FilmGrid::new(&g, 24, 12).unwrap();
    let w = reference::operating_speed();
    let q = reference::threshold_flowrate();
    let opts = SolverOptions {
        tolerance: 1e-11,
        ..Default::default()
    };
    let a = solve_film(&g, &ShaftState::stationary(1e-5, -4e-5, w), &grid, q, &opts).unwrap();
    let target = ShaftState::stationary(1.2e-5, -4.3e-5, w);
    let cold = solve_film(&g, &target, &grid, q, &opts).unwrap();
    let warm = solve_film_from(&g, &target, &grid, q, &opts, Some(&a.fields)).unwrap();
    assert!(warm.iterations < cold.iterations);
    assert!(max_rel_pressure_error(&warm.fields, &cold.fields) < 1e-8);
}
