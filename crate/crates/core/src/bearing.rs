//! Static equilibrium and linearised dynamic coefficients of a journal bearing.
//!
//! About the equilibrium `e₀` the hydrodynamic force is written
//!
//! ```text
//! F_H(e, ė) ≈ F_H(e₀, 0) − K (e − e₀) − C ė
//! K_ij = −∂F_Hi/∂e_j,   C_ij = −∂F_Hi/∂ė_j
//! ```
//!
//! so `K` and `C` are restoring: for a stable bearing both have positive
//! diagonals and they are added to the rotor matrices with a plus sign.
//! Cross-coupled terms are not symmetric in general.

use std::io::{BufRead, Write};

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lubrication::{
    solve_film_from, BearingGeometry, FilmFields, FilmGrid, FilmSolution, ShaftState, SolverOptions,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BearingCoefficients {
    /// Equilibrium eccentricity (e_X0, e_Y0) [m].
    pub equilibrium: [f64; 2],
    /// `[[K_XX, K_XY], [K_YX, K_YY]]` [N/m].
    pub stiffness: Matrix2<f64>,
    /// `[[C_XX, C_XY], [C_YX, C_YY]]` [N·s/m].
    pub damping: Matrix2<f64>,
    pub supply: f64,
    pub speed: f64,
}

impl BearingCoefficients {
    pub fn zero() -> Self {
        Self {
            equilibrium: [0.0; 2],
            stiffness: Matrix2::zeros(),
            damping: Matrix2::zeros(),
            supply: 0.0,
            speed: 0.0,
        }
    }

    pub fn eccentricity(&self) -> f64 {
        self.equilibrium[0].hypot(self.equilibrium[1])
    }

    /// Linearised force change for a displacement and velocity about equilibrium.
    pub fn linear_force(&self, displacement: [f64; 2], velocity: [f64; 2]) -> [f64; 2] {
        let f = -(self.stiffness * Vector2::from(displacement))
            - self.damping * Vector2::from(velocity);
        [f[0], f[1]]
    }

    pub fn is_finite(&self) -> bool {
        self.stiffness
            .iter()
            .chain(self.damping.iter())
            .chain(self.equilibrium.iter())
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterizationOptions {
    pub solver: SolverOptions,
    /// Displacement perturbation as a fraction of the radial clearance.
    pub displacement_step: f64,
    /// Velocity perturbation as a fraction of `c_r · Ω`.
    pub velocity_step: f64,
    /// Equilibrium is accepted when `|F_H + W| < force_tolerance · |W|`.
    pub force_tolerance: f64,
    pub max_newton_iterations: usize,
    /// Largest eccentricity ratio the Newton search may visit.
    pub max_eccentricity_ratio: f64,
}

impl Default for CharacterizationOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions {
                tolerance: 1e-9,
                ..SolverOptions::default()
            },
            displacement_step: 1e-3,
            velocity_step: 1e-3,
            force_tolerance: 1e-7,
            max_newton_iterations: 40,
            max_eccentricity_ratio: 0.98,
        }
    }
}

/// Converged static equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub position: [f64; 2],
    pub film: FilmSolution,
    /// `|F_H + W|` [N].
    pub residual: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    geometry: &'a BearingGeometry,
    grid: &'a FilmGrid,
    supply: f64,
    speed: f64,
    options: &'a CharacterizationOptions,
}

impl Problem<'_> {
    fn solve(&self, state: ShaftState, warm: Option<&FilmFields>) -> Result<FilmSolution> {
        solve_film_from(
            self.geometry,
            &state,
            self.grid,
            self.supply,
            &self.options.solver,
            warm,
        )
    }

    fn solve_at(&self, e: Vector2<f64>, warm: Option<&FilmFields>) -> Result<FilmSolution> {
        self.solve(ShaftState::stationary(e[0], e[1], self.speed), warm)
    }

    /// `∂F/∂e` by central differences, warm-started from `base`.
    fn force_jacobian(
        &self,
        e: Vector2<f64>,
        base: &FilmFields,
        step: f64,
    ) -> Result<Matrix2<f64>> {
        let stencil = [(0, step), (0, -step), (1, step), (1, -step)];
        let forces: Vec<Result<[f64; 2]>> = stencil
            .par_iter()
            .map(|&(axis, h)| {
                let mut p = e;
                p[axis] += h;
                self.solve_at(p, Some(base)).map(|s| s.force)
            })
            .collect();
        let f: Vec<[f64; 2]> = forces.into_iter().collect::<Result<_>>()?;
        let mut j = Matrix2::zeros();
        for axis in 0..2 {
            for comp in 0..2 {
                j[(comp, axis)] = (f[2 * axis][comp] - f[2 * axis + 1][comp]) / (2.0 * step);
            }
        }
        Ok(j)
    }
}

/// Finds the journal position where the hydrodynamic force balances the
/// applied load `(W_X, W_Y)`, i.e. `F_H(e₀) + W = 0`.
///
/// Damped Newton iteration on the force residual with a finite-difference
/// Jacobian. If Newton stalls, the search restarts from the point on the load
/// line whose force component along the load balances it.
pub fn find_equilibrium(
    geometry: &BearingGeometry,
    grid: &FilmGrid,
    supply: f64,
    speed: f64,
    load: [f64; 2],
    options: &CharacterizationOptions,
) -> Result<Equilibrium> {
    let w = Vector2::from(load);
    let w_norm = w.norm();
    if !(w_norm > 0.0 && w_norm.is_finite()) {
        return Err(Error::InvalidInput("applied load must be non-zero".into()));
    }
    if !(supply >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "supply flowrate must be non-negative, got {supply}"
        )));
    }
    let problem = Problem {
        geometry,
        grid,
        supply,
        speed,
        options,
    };
    let c = geometry.radial_clearance;
    let dir = w / w_norm;

    let start = dir * (0.3 * c);
    match newton(&problem, start, w, None) {
        Ok(eq) => Ok(eq),
        Err(first) => {
            log::debug!("equilibrium Newton failed ({first}); retrying from the load line");
            let restart = load_line_point(&problem, dir, w_norm)?;
            newton(&problem, restart, w, None).map_err(|second| match (first, second) {
                (
                    Error::NoEquilibrium {
                        residual: r1,
                        best_x,
                        best_y,
                        iterations: i1,
                    },
                    Error::NoEquilibrium {
                        residual: r2,
                        iterations: i2,
                        ..
                    },
                ) if r1 < r2 => Error::NoEquilibrium {
                    iterations: i1 + i2,
                    best_x,
                    best_y,
                    residual: r1,
                },
                (_, e) => e,
            })
        }
    }
}

fn newton(
    problem: &Problem,
    start: Vector2<f64>,
    w: Vector2<f64>,
    warm: Option<&FilmFields>,
) -> Result<Equilibrium> {
    let opts = problem.options;
    let c = problem.geometry.radial_clearance;
    let e_max = opts.max_eccentricity_ratio * c;
    let tol = opts.force_tolerance * w.norm();
    let step = opts.displacement_step * c;

    let mut e = start;
    let mut film = problem.solve_at(e, warm)?;
    let mut r = Vector2::from(film.force) + w;
    let mut best = (e, r.norm());
    for it in 0..=opts.max_newton_iterations {
        if r.norm() < tol {
            return Ok(Equilibrium {
                position: [e[0], e[1]],
                residual: r.norm(),
                iterations: it,
                film,
            });
        }
        if it == opts.max_newton_iterations {
            break;
        }
        let j = problem.force_jacobian(e, &film.fields, step)?;
        let Some(delta) = j.lu().solve(&(-r)) else {
            break;
        };
        let mut scale = 1.0;
        let limit = 0.25 * c;
        if delta.norm() > limit {
            scale = limit / delta.norm();
        }
        let mut accepted = false;
        for _ in 0..12 {
            let mut trial = e + delta * scale;
            if trial.norm() > e_max {
                trial *= e_max / trial.norm();
            }
            if let Ok(sol) = problem.solve_at(trial, Some(&film.fields)) {
                let r_trial = Vector2::from(sol.force) + w;
                if r_trial.norm() < r.norm() {
                    e = trial;
                    film = sol;
                    r = r_trial;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if r.norm() < best.1 {
            best = (e, r.norm());
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NoEquilibrium {
        iterations: opts.max_newton_iterations,
        best_x: best.0[0],
        best_y: best.0[1],
        residual: best.1,
    })
}

/// Bisection on the eccentricity magnitude along the load direction so that
/// the force component opposing the load matches its magnitude.
fn load_line_point(problem: &Problem, dir: Vector2<f64>, w_norm: f64) -> Result<Vector2<f64>> {
    let c = problem.geometry.radial_clearance;
    let mut lo = 0.0;
    let mut hi = problem.options.max_eccentricity_ratio * c;
    let support = |s: f64| -> Result<f64> {
        let f = problem.solve_at(dir * s, None)?.force;
        Ok(-(f[0] * dir[0] + f[1] * dir[1]))
    };
    if support(hi)? < w_norm {
        return Ok(dir * hi);
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if support(mid)? < w_norm {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(dir * (0.5 * (lo + hi)))
}

/// Stiffness and damping by central differences of full film solves about the
/// equilibrium. Perturbations that leave the clearance are halved and retried.
pub fn linearized_coefficients(
    geometry: &BearingGeometry,
    grid: &FilmGrid,
    supply: f64,
    speed: f64,
    equilibrium: &Equilibrium,
    options: &CharacterizationOptions,
) -> Result<BearingCoefficients> {
    let problem = Problem {
        geometry,
        grid,
        supply,
        speed,
        options,
    };
    let c = geometry.radial_clearance;
    let e0 = equilibrium.position;
    if !(e0[0].hypot(e0[1]) < c) {
        return Err(Error::Contact {
            eccentricity: e0[0].hypot(e0[1]),
            clearance: c,
        });
    }
    let mut dx = options.displacement_step * c;
    let dv = options.velocity_step * c * speed;
    let base = &equilibrium.film.fields;

    for _ in 0..5 {
        let mut states = Vec::with_capacity(8);
        for axis in 0..2 {
            for sign in [1.0, -1.0] {
                let mut s = ShaftState::stationary(e0[0], e0[1], speed);
                if axis == 0 {
                    s.ex += sign * dx
                } else {
                    s.ey += sign * dx
                }
                states.push(s);
            }
        }
        for axis in 0..2 {
            for sign in [1.0, -1.0] {
                let mut s = ShaftState::stationary(e0[0], e0[1], speed);
                if axis == 0 {
                    s.vx = sign * dv
                } else {
                    s.vy = sign * dv
                }
                states.push(s);
            }
        }
        if states.iter().any(|s| s.eccentricity() >= c) {
            dx *= 0.5;
            continue;
        }
        let forces: Vec<[f64; 2]> = states
            .par_iter()
            .map(|s| problem.solve(*s, Some(base)).map(|sol| sol.force))
            .collect::<Result<_>>()?;
        let mut stiffness = Matrix2::zeros();
        let mut damping = Matrix2::zeros();
        for axis in 0..2 {
            for comp in 0..2 {
                stiffness[(comp, axis)] =
                    -(forces[2 * axis][comp] - forces[2 * axis + 1][comp]) / (2.0 * dx);
                damping[(comp, axis)] =
                    -(forces[4 + 2 * axis][comp] - forces[4 + 2 * axis + 1][comp]) / (2.0 * dv);
            }
        }
        let coeffs = BearingCoefficients {
            equilibrium: e0,
            stiffness,
            damping,
            supply,
            speed,
        };
        if !coeffs.is_finite() {
            return Err(Error::Coefficients("non-finite coefficient".into()));
        }
        return Ok(coeffs);
    }
    Err(Error::Coefficients(
        "perturbation keeps leaving the clearance".into(),
    ))
}

/// Equilibrium followed by coefficient extraction.
pub fn characterize(
    geometry: &BearingGeometry,
    grid: &FilmGrid,
    supply: f64,
    speed: f64,
    load: [f64; 2],
    options: &CharacterizationOptions,
) -> Result<BearingCoefficients> {
    let eq = find_equilibrium(geometry, grid, supply, speed, load, options)?;
    linearized_coefficients(geometry, grid, supply, speed, &eq, options)
}

const CSV_HEADER: &str = "speed_rad_s,supply_m3_s,ex_m,ey_m,kxx,kxy,kyx,kyy,cxx,cxy,cyx,cyy";

/// Writes a coefficient table keyed by (Ω, Q_s). Values use shortest
/// round-trip formatting so a reread table is bit-identical.
pub fn write_coefficients_csv<W: Write>(
    mut out: W,
    table: &[BearingCoefficients],
) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for c in table {
        let k = &c.stiffness;
        let d = &c.damping;
        let row = [
            c.speed,
            c.supply,
            c.equilibrium[0],
            c.equilibrium[1],
            k[(0, 0)],
            k[(0, 1)],
            k[(1, 0)],
            k[(1, 1)],
            d[(0, 0)],
            d[(0, 1)],
            d[(1, 0)],
            d[(1, 1)],
        ];
        let fields: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Reads a table written by [`write_coefficients_csv`].
pub fn read_coefficients_csv<R: BufRead>(input: R) -> Result<Vec<BearingCoefficients>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::InvalidInput(e.to_string()))?
        .ok_or_else(|| Error::InvalidInput("empty coefficient table".into()))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::InvalidInput(format!(
            "unexpected coefficient table header `{header}`"
        )));
    }
    let mut table = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::InvalidInput(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("coefficient table line {}: {e}", n + 2)))?;
        if v.len() != 12 {
            return Err(Error::InvalidInput(format!(
                "coefficient table line {}: expected 12 fields",
                n + 2
            )));
        }
        table.push(BearingCoefficients {
            speed: v[0],
            supply: v[1],
            equilibrium: [v[2], v[3]],
            stiffness: Matrix2::new(v[4], v[5], v[6], v[7]),
            damping: Matrix2::new(v[8], v[9], v[10], v[11]),
        });
    }
    Ok(table)
}

/// Entry of a coefficient table matching (Ω, Q_s) to a relative tolerance.
pub fn lookup_coefficients(
    table: &[BearingCoefficients],
    speed: f64,
    supply: f64,
    rel_tol: f64,
) -> Option<&BearingCoefficients> {
    let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs());
    table
        .iter()
        .find(|c| close(c.speed, speed) && close(c.supply, supply))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BearingCoefficients {
        BearingCoefficients {
            equilibrium: [1.5e-5, -7.25e-6],
            stiffness: Matrix2::new(3.1e8, -1.2e8, 4.4e8, 5.0e8),
            damping: Matrix2::new(2.0e6, 1.0e5, 1.1e5, 3.3e6),
            supply: 9.1e-6,
            speed: 471.238898038469,
        }
    }

    #[test]
    fn linear_force_vanishes_at_equilibrium_and_restores() {
        let c = sample();
        assert_eq!(c.linear_force([0.0; 2], [0.0; 2]), [0.0, 0.0]);
        let f = c.linear_force([1e-6, 0.0], [0.0; 2]);
        assert_eq!(f, [-310.0, -440.0]);
        let f = c.linear_force([0.0; 2], [0.0, 1e-3]);
        assert!((f[0] + 100.0).abs() < 1e-9 && (f[1] + 3300.0).abs() < 1e-9);
    }

    #[test]
    fn zero_coefficients_are_finite() {
        assert!(BearingCoefficients::zero().is_finite());
        let mut c = sample();
        c.damping[(0, 1)] = f64::NAN;
        assert!(!c.is_finite());
    }

    #[test]
    fn coefficient_table_round_trips_exactly() {
        let mut other = sample();
        other.supply = 4.55e-6;
        other.stiffness[(1, 1)] = 1.0 / 3.0;
        let table = vec![sample(), other];
        let mut buf = Vec::new();
        write_coefficients_csv(&mut buf, &table).unwrap();
        let back = read_coefficients_csv(buf.as_slice()).unwrap();
        assert_eq!(back, table);
        let hit =
            lookup_coefficients(&back, 471.238898038469, 4.55e-6 * (1.0 + 1e-12), 1e-9).unwrap();
        assert_eq!(hit.stiffness[(1, 1)], 1.0 / 3.0);
        assert!(lookup_coefficients(&back, 100.0, 4.55e-6, 1e-9).is_none());
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(read_coefficients_csv("a,b\n".as_bytes()).is_err());
        assert!(read_coefficients_csv("".as_bytes()).is_err());
        let bad = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(
            matches!(read_coefficients_csv(bad.as_bytes()), Err(Error::InvalidInput(m)) if m.contains("line 2"))
        );
    }

    #[test]
    fn zero_load_is_rejected() {
        let g = crate::reference::bearing_geometry();
        let grid = FilmGrid::new(&g, 8, 8).unwrap();
        let r = find_equilibrium(
            &g,
            &grid,
            1e-6,
            400.0,
            [0.0, 0.0],
            &CharacterizationOptions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
