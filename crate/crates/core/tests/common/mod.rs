//! Test-only oracles, independent of the solution paths they check.
#![allow(dead_code)]

use flowid_core::lubrication::{
    assemble_volume_equation, BearingGeometry, FilmFields, FilmGrid, ShaftState,
};
use nalgebra::{DMatrix, DVector};

/// Dense active-set solution of the discrete p-θ complementarity system of a
/// stationary journal. Each interior volume is either pressurised (`θ = 1`,
/// unknown `p`) or cavitated (`p = 0`, unknown `θ`); the partition is updated
/// until `p ≥ 0` on pressurised and `θ ≤ 1` on cavitated volumes.
pub fn dense_film_oracle(
    geometry: &BearingGeometry,
    state: &ShaftState,
    grid: &FilmGrid,
    supply: f64,
) -> FilmFields {
    assert!(
        state.vx == 0.0 && state.vy == 0.0,
        "oracle covers stationary journals"
    );
    let n = grid.n_circ();
    let rows = grid.n_axial() - 2;
    let unknowns = n * rows;
    let flooded = FilmFields::flooded(grid);
    let coeffs: Vec<_> = (0..unknowns)
        .map(|u| {
            assemble_volume_equation(geometry, state, grid, (u % n, u / n + 1), &flooded, supply)
                .unwrap()
        })
        .collect();
    let cell = |i: usize, j: usize| -> Option<usize> {
        if j == 0 || j == grid.n_axial() - 1 {
            None
        } else {
            Some((j - 1) * n + i)
        }
    };

    let mut pressurised = vec![true; unknowns];
    for _ in 0..500 {
        let mut a = DMatrix::<f64>::zeros(unknowns, unknowns);
        let mut b = DVector::<f64>::zeros(unknowns);
        for u in 0..unknowns {
            let (i, j) = (u % n, u / n + 1);
            let c = coeffs[u];
            b[u] = c.source;
            // θ_P C1 + p_P D − θ_W C2 − p_E C3 − p_W C4 − (p_N + p_S) C5 = source
            let w = (i + n - 1) % n;
            let e = (i + 1) % n;
            let add_theta = |m: usize, coef: f64, a: &mut DMatrix<f64>, b: &mut DVector<f64>| {
                if pressurised[m] {
                    b[u] -= coef
                } else {
                    a[(u, m)] += coef
                }
            };
            add_theta(u, c.c1, &mut a, &mut b);
            add_theta(cell(w, j).unwrap(), -c.c2, &mut a, &mut b);
            let add_p = |m: Option<usize>, coef: f64, a: &mut DMatrix<f64>| {
                if let Some(m) = m {
                    if pressurised[m] {
                        a[(u, m)] += coef;
                    }
                }
            };
            add_p(Some(u), c.diagonal(), &mut a);
            add_p(cell(e, j), -c.c3, &mut a);
            add_p(cell(w, j), -c.c4, &mut a);
            add_p(cell(i, j - 1), -c.c5, &mut a);
            add_p(cell(i, j + 1), -c.c5, &mut a);
        }
        let x = a.lu().solve(&b).expect("oracle system is singular");
        let mut changed = false;
        for u in 0..unknowns {
            if pressurised[u] && x[u] < 0.0 {
                pressurised[u] = false;
                changed = true;
            } else if !pressurised[u] && x[u] > 1.0 {
                pressurised[u] = true;
                changed = true;
            }
        }
        if !changed {
            let mut fields = FilmFields::flooded(grid);
            for u in 0..unknowns {
                let k = grid.index(u % n, u / n + 1);
                if pressurised[u] {
                    fields.pressure[k] = x[u];
                } else {
                    fields.theta[k] = x[u];
                }
            }
            return fields;
        }
    }
    panic!("active-set oracle did not settle");
}

/// Small deterministic generator for randomised test cases.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(
            seed.wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407),
        )
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let u = (self.0 >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}
