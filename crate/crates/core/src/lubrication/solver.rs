//! Projected Gauss-Seidel solution of the p-θ system.
//!
//! Sweeps run lexicographically, axial rows outside and columns inside, in the
//! direction of the Couette flow. Each volume is updated in place and the
//! cavitation switch is applied immediately:
//!
//! - assume a full film (`θ = 1`) and solve the volume equation for `p`;
//! - if that pressure is positive keep it, otherwise set `p = 0` and solve the
//!   same equation for `θ`, clamped to `[0, 1]`.
//!
//! The two branches are mutually exclusive since `p_trial ≤ 0` is equivalent to
//! `θ_trial ≤ 1`, so every accepted state satisfies `p · (1 − θ) = 0`.

use super::assembly::{column_coefficients, ColumnCoefficients};
use super::postprocess::integrate_force;
use super::{BearingGeometry, FilmFields, FilmGrid, FilmSolution, ShaftState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_sweeps: usize,
    /// Stop when the largest pressure change relative to the peak pressure and
    /// the largest oil-fraction change of a sweep both fall below this value.
    pub tolerance: f64,
    /// Over-relaxation factor applied to pressure updates. `None` picks the
    /// optimal SOR factor of the axial Laplacian, `2 / (1 + sin(π / (n_axial − 1)))`.
    pub pressure_relaxation: Option<f64>,
    /// Relaxation factor applied to oil-fraction updates.
    pub theta_relaxation: f64,
    /// Oil-fraction relaxation used once oscillation is detected.
    pub fallback_theta_relaxation: f64,
    /// Sweeps without a new best residual before switching to the fallback.
    pub stall_window: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 100_000,
            tolerance: 1e-6,
            pressure_relaxation: None,
            theta_relaxation: 1.0,
            fallback_theta_relaxation: 0.5,
            stall_window: 2_000,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput(
                "solver needs max_sweeps > 0 and tolerance > 0".into(),
            ));
        }
        let pressure = self.pressure_relaxation.unwrap_or(1.0);
        for w in [
            pressure,
            self.theta_relaxation,
            self.fallback_theta_relaxation,
        ] {
            if !(w > 0.0 && w < 2.0) {
                return Err(Error::InvalidInput(format!(
                    "relaxation factor {w} outside (0, 2)"
                )));
            }
        }
        Ok(())
    }

    pub fn pressure_relaxation_for(&self, grid: &FilmGrid) -> f64 {
        self.pressure_relaxation.unwrap_or_else(|| {
            let s = (std::f64::consts::PI / (grid.n_axial() - 1) as f64).sin();
            (2.0 / (1.0 + s)).min(1.95)
        })
    }
}

/// Solves the film from a flooded, unloaded initial state.
pub fn solve_film(
    geometry: &BearingGeometry,
    state: &ShaftState,
    grid: &FilmGrid,
    supply: f64,
    options: &SolverOptions,
) -> Result<FilmSolution> {
    solve_film_from(geometry, state, grid, supply, options, None)
}

/// Solves the film starting from `initial` fields when given.
pub fn solve_film_from(
    geometry: &BearingGeometry,
    state: &ShaftState,
    grid: &FilmGrid,
    supply: f64,
    options: &SolverOptions,
    initial: Option<&FilmFields>,
) -> Result<FilmSolution> {
    geometry.validate()?;
    options.validate()?;
    if !(supply >= 0.0 && supply.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "supply flowrate must be non-negative, got {supply}"
        )));
    }
    if !(state.speed > 0.0 && state.speed.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "rotational speed must be positive, got {}",
            state.speed
        )));
    }
    state.check_clearance(geometry)?;

    let mut fields = match initial {
        Some(f) if f.pressure.len() == grid.len() && f.theta.len() == grid.len() => f.clone(),
        Some(_) => {
            return Err(Error::InvalidInput(
                "initial fields do not match the grid".into(),
            ))
        }
        None => FilmFields::flooded(grid),
    };
    enforce_edges(grid, &mut fields);

    let columns = column_coefficients(geometry, state, grid);
    let groove_share = supply / grid.groove_count() as f64;
    let groove_source: Vec<f64> = (0..grid.len())
        .map(|k| if grid.is_groove(k) { groove_share } else { 0.0 })
        .collect();
    let pressure_floor =
        1e-6 * geometry.force_scale(state.speed) / (geometry.radius * geometry.width);

    let omega_p = options.pressure_relaxation_for(grid);
    let mut theta_relaxation = options.theta_relaxation;
    let mut best = f64::INFINITY;
    let mut best_at = 0usize;
    let mut residual = f64::INFINITY;
    for sweep in 1..=options.max_sweeps {
        let (dp, dtheta) = sweep_once(
            grid,
            &columns,
            &groove_source,
            &mut fields,
            omega_p,
            theta_relaxation,
        );
        let p_max = fields.pressure.iter().copied().fold(0.0, f64::max);
        residual = (dp / p_max.max(pressure_floor)).max(dtheta);
        if !residual.is_finite() {
            return Err(Error::FilmDiverged {
                sweeps: sweep,
                residual,
            });
        }
        if residual <= options.tolerance {
            let force = integrate_force(geometry, grid, &fields.pressure);
            return Ok(FilmSolution {
                fields,
                force,
                iterations: sweep,
                residual,
            });
        }
        if residual < best {
            best = residual;
            best_at = sweep;
        } else if sweep - best_at > options.stall_window
            && theta_relaxation != options.fallback_theta_relaxation
        {
            log::debug!(
                "film solver stalled at residual {best:.3e}; relaxing θ to {}",
                options.fallback_theta_relaxation
            );
            theta_relaxation = options.fallback_theta_relaxation;
            best_at = sweep;
        }
    }
    Err(Error::FilmDiverged {
        sweeps: options.max_sweeps,
        residual,
    })
}

/// Runs exactly `sweeps` unrelaxed Gauss-Seidel sweeps from a flooded state
/// without a convergence test. Useful for diagnostics of partial solutions.
pub fn sweep_fixed(
    geometry: &BearingGeometry,
    state: &ShaftState,
    grid: &FilmGrid,
    supply: f64,
    sweeps: usize,
) -> FilmSolution {
    let mut fields = FilmFields::flooded(grid);
    let columns = column_coefficients(geometry, state, grid);
    let share = supply / grid.groove_count() as f64;
    let groove_source: Vec<f64> = (0..grid.len())
        .map(|k| if grid.is_groove(k) { share } else { 0.0 })
        .collect();
    let mut residual = f64::INFINITY;
    for _ in 0..sweeps {
        let (dp, dt) = sweep_once(grid, &columns, &groove_source, &mut fields, 1.0, 1.0);
        residual = dp.max(dt);
    }
    let force = integrate_force(geometry, grid, &fields.pressure);
    FilmSolution {
        fields,
        force,
        iterations: sweeps,
        residual,
    }
}

fn enforce_edges(grid: &FilmGrid, fields: &mut FilmFields) {
    let n = grid.n_circ();
    let last = grid.n_axial() - 1;
    for i in 0..n {
        for j in [0, last] {
            let k = grid.index(i, j);
            fields.pressure[k] = 0.0;
            fields.theta[k] = 1.0;
        }
    }
}

/// One in-place sweep; returns the largest pressure and oil-fraction changes.
fn sweep_once(
    grid: &FilmGrid,
    columns: &[ColumnCoefficients],
    groove_source: &[f64],
    fields: &mut FilmFields,
    omega_p: f64,
    omega_theta: f64,
) -> (f64, f64) {
    let n = grid.n_circ();
    let p = &mut fields.pressure;
    let theta = &mut fields.theta;
    let mut dp_max = 0.0f64;
    let mut dt_max = 0.0f64;
    for j in 1..grid.n_axial() - 1 {
        let row = j * n;
        for (i, c) in columns[..n].iter().enumerate() {
            let k = row + i;
            let w = row + if i == 0 { n - 1 } else { i - 1 };
            let e = row + if i + 1 == n { 0 } else { i + 1 };
            let p_old = p[k];
            let t_old = theta[k];
            let rhs = c.c2 * theta[w]
                + c.c3 * p[e]
                + c.c4 * p[w]
                + c.c5 * (p[k - n] + p[k + n])
                + groove_source[k]
                - c.squeeze * t_old;
            let p_trial = (rhs - c.c1) / (c.c3 + c.c4 + 2.0 * c.c5);
            let (p_new, t_new) = if p_trial > 0.0 {
                ((p_old + omega_p * (p_trial - p_old)).max(0.0), 1.0)
            } else {
                let t_trial = (rhs / c.c1).clamp(0.0, 1.0);
                (
                    0.0,
                    (t_old + omega_theta * (t_trial - t_old)).clamp(0.0, 1.0),
                )
            };
            dp_max = dp_max.max((p_new - p_old).abs());
            dt_max = dt_max.max((t_new - t_old).abs());
            p[k] = p_new;
            theta[k] = t_new;
        }
    }
    (dp_max, dt_max)
}
