use std::io::Write;

use super::assembly::column_coefficients;
use super::{BearingGeometry, FilmGrid, FilmSolution, ShaftState};
use crate::error::{Error, Result};

/// Force on the journal from a pressure field. Pressure pushes the journal away
/// from the bearing surface, i.e. along `−n(α) = (sin α, −cos α)`.
pub(crate) fn integrate_force(
    geometry: &BearingGeometry,
    grid: &FilmGrid,
    pressure: &[f64],
) -> [f64; 2] {
    let n = grid.n_circ();
    let area = geometry.radius * grid.dalpha() * grid.dz(geometry);
    let mut fx = 0.0;
    let mut fy = 0.0;
    for i in 0..n {
        let a = grid.alpha(i);
        let column: f64 = (1..grid.n_axial() - 1)
            .map(|j| pressure[grid.index(i, j)])
            .sum();
        fx += column * a.sin();
        fy -= column * a.cos();
    }
    [fx * area, fy * area]
}

/// Hydrodynamic force (F_HX, F_HY) [N] of a solved film.
pub fn integrate_hydrodynamic_force(
    solution: &FilmSolution,
    geometry: &BearingGeometry,
    grid: &FilmGrid,
) -> [f64; 2] {
    integrate_force(geometry, grid, solution.pressure())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBalance {
    /// `|Q_s − outflow| / Q_s`, or the absolute imbalance [m³/s] when `Q_s = 0`.
    pub imbalance: f64,
    /// Net Poiseuille outflow through both axial edges [m³/s].
    pub outflow: f64,
    /// Set when `Q_s = 0` and `imbalance` is absolute.
    pub absolute: bool,
}

/// Compares the groove supply with the axial leakage of a steady film.
pub fn global_mass_balance(
    solution: &FilmSolution,
    geometry: &BearingGeometry,
    grid: &FilmGrid,
    state: &ShaftState,
    supply: f64,
) -> Result<MassBalance> {
    if state.vx != 0.0 || state.vy != 0.0 {
        return Err(Error::InvalidInput(
            "mass balance requires a stationary journal".into(),
        ));
    }
    let columns = column_coefficients(geometry, state, grid);
    let p = solution.pressure();
    let n = grid.n_circ();
    let last = grid.n_axial() - 1;
    let mut outflow = 0.0;
    for (i, c) in columns.iter().enumerate() {
        // edge rows hold p = 0
        outflow += c.c5 * (p[grid.index(i, 1)] - p[grid.index(i, 0)]);
        outflow += c.c5 * (p[grid.index(i, last - 1)] - p[grid.index(i, last)]);
    }
    debug_assert_eq!(columns.len(), n);
    if supply > 0.0 {
        Ok(MassBalance {
            imbalance: (supply - outflow).abs() / supply,
            outflow,
            absolute: false,
        })
    } else {
        Ok(MassBalance {
            imbalance: outflow.abs(),
            outflow,
            absolute: true,
        })
    }
}

/// Writes the fields as CSV with columns `i,j,alpha_rad,z_m,p_Pa,theta`.
pub fn write_field_csv<W: Write>(
    mut out: W,
    solution: &FilmSolution,
    geometry: &BearingGeometry,
    grid: &FilmGrid,
) -> std::io::Result<()> {
    writeln!(out, "i,j,alpha_rad,z_m,p_Pa,theta")?;
    let dz = grid.dz(geometry);
    for j in 0..grid.n_axial() {
        for i in 0..grid.n_circ() {
            let k = grid.index(i, j);
            writeln!(
                out,
                "{},{},{:.10e},{:.10e},{:.10e},{:.10e}",
                i,
                j,
                grid.alpha(i),
                j as f64 * dz,
                solution.fields.pressure[k],
                solution.fields.theta[k]
            )?;
        }
    }
    Ok(())
}
