//! Finite-volume coefficients of the p-θ Reynolds equation.
//!
//! Integrating
//!
//! ```text
//! ∂x(h³/12μ ∂x p) + ∂z(h³/12μ ∂z p) = ∂x(U h θ / 2) + ∂t(h θ)
//! ```
//!
//! over the volume `Δx × Δz` centred at `P`, with `U = Ω R`:
//!
//! - Poiseuille terms, central differences. The east/west face conductances use
//!   the film thickness at the face angles `α_P ± Δα/2`; the film is uniform in
//!   `z` so north and south share the centre thickness:
//!   `C3 = h_e³ Δz / (12 μ Δx)`, `C4 = h_w³ Δz / (12 μ Δx)`, `C5 = h_P³ Δx / (12 μ Δz)`.
//! - Couette term, first-order upwind for `U > 0`. The face flux through `e` is
//!   carried by `P` and through `w` by `W`:
//!   `C1 = U h_P Δz / 2`, `C2 = U h_W Δz / 2`.
//! - Squeeze term, explicit: `ḣ_P θ_P⁰ Δx Δz` with `θ_P⁰` the previous iterate and
//!   `ḣ = ė_x sin α − ė_y cos α`. It is moved to the right-hand side as part of the
//!   source, so it vanishes for a stationary journal.
//!
//! Every term is a volumetric flux [m³/s], so the groove supply enters directly
//! as `+Q_s / N_g` in each groove volume:
//!
//! ```text
//! θ_P C1 + p_P (C3 + C4 + 2 C5) = θ_W C2 + p_E C3 + p_W C4 + (p_N + p_S) C5 + source
//! source = Q_s / N_g · [P in groove] − ḣ_P θ_P⁰ Δx Δz
//! ```
//!
//! Because `C3` of a volume equals `C4` of its east neighbour and `C1` of a volume
//! equals `C2` of its east neighbour, summing all equations telescopes to
//! `Q_s = axial edge outflow + squeeze`, which is what
//! [`global_mass_balance`](super::global_mass_balance) checks.

use super::{thickness, thickness_rate, BearingGeometry, FilmFields, FilmGrid, ShaftState};
use crate::error::{Error, Result};

/// Coefficients of one volume equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub source: f64,
}

impl VolumeCoefficients {
    /// Diagonal pressure coefficient `C3 + C4 + 2 C5`.
    #[inline]
    pub fn diagonal(&self) -> f64 {
        self.c3 + self.c4 + 2.0 * self.c5
    }
}

/// Column-wise coefficients. The film thickness depends on `α` only, so every
/// interior volume of a column shares them.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ColumnCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    /// `ḣ Δx Δz`, multiplied by the explicit θ at assembly time.
    pub squeeze: f64,
}

pub(crate) fn column_coefficients(
    geometry: &BearingGeometry,
    state: &ShaftState,
    grid: &FilmGrid,
) -> Vec<ColumnCoefficients> {
    let dalpha = grid.dalpha();
    let dx = geometry.radius * dalpha;
    let dz = grid.dz(geometry);
    let u = state.speed * geometry.radius;
    let mu12 = 12.0 * geometry.viscosity;
    let n = grid.n_circ();
    // East face conductance and centre thickness per column; shared between
    // neighbours so the fluxes telescope exactly.
    let east_face: Vec<f64> = (0..n)
        .map(|i| {
            thickness(geometry, state, grid.alpha(i) + 0.5 * dalpha).powi(3) * dz / (mu12 * dx)
        })
        .collect();
    let centre: Vec<f64> = (0..n)
        .map(|i| thickness(geometry, state, grid.alpha(i)))
        .collect();
    (0..n)
        .map(|i| {
            let w = (i + n - 1) % n;
            let h = centre[i];
            ColumnCoefficients {
                c1: 0.5 * u * h * dz,
                c2: 0.5 * u * centre[w] * dz,
                c3: east_face[i],
                c4: east_face[w],
                c5: h.powi(3) * dx / (mu12 * dz),
                squeeze: thickness_rate(state, grid.alpha(i)) * dx * dz,
            }
        })
        .collect()
}

/// Assembles the equation of volume `(i, j)` given the previous fields, which
/// provide the explicit oil fraction of the squeeze term.
pub fn assemble_volume_equation(
    geometry: &BearingGeometry,
    state: &ShaftState,
    grid: &FilmGrid,
    cell: (usize, usize),
    previous: &FilmFields,
    supply: f64,
) -> Result<VolumeCoefficients> {
    let (i, j) = cell;
    if i >= grid.n_circ() || j >= grid.n_axial() {
        return Err(Error::InvalidInput(format!(
            "cell ({i}, {j}) outside the grid"
        )));
    }
    if previous.theta.len() != grid.len() {
        return Err(Error::InvalidInput(
            "field size does not match the grid".into(),
        ));
    }
    if !(supply >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "supply flowrate must be non-negative, got {supply}"
        )));
    }
    state.check_clearance(geometry)?;
    let col = column_coefficients(geometry, state, grid)[i];
    let k = grid.index(i, j);
    let mut source = -col.squeeze * previous.theta[k];
    if grid.is_groove(k) {
        source += supply / grid.groove_count() as f64;
    }
    Ok(VolumeCoefficients {
        c1: col.c1,
        c2: col.c2,
        c3: col.c3,
        c4: col.c4,
        c5: col.c5,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn uniform_film_has_symmetric_poiseuille_coefficients() {
        let g = reference::bearing_geometry();
        let grid = FilmGrid::new(&g, 16, 8).unwrap();
        let s = ShaftState::stationary(0.0, 0.0, 400.0);
        let f = FilmFields::flooded(&grid);
        for i in 0..16 {
            let c = assemble_volume_equation(&g, &s, &grid, (i, 3), &f, 1e-6).unwrap();
            assert!((c.c3 - c.c4).abs() <= 1e-14 * c.c3);
            assert!((c.c1 - c.c2).abs() <= 1e-14 * c.c1);
        }
    }

    #[test]
    fn static_solve_has_no_squeeze_source() {
        let g = reference::bearing_geometry();
        let grid = FilmGrid::new(&g, 16, 8).unwrap();
        let s = ShaftState::stationary(2e-5, -5e-5, 400.0);
        let mut f = FilmFields::flooded(&grid);
        f.theta.iter_mut().for_each(|t| *t = 0.7);
        for i in 0..16 {
            let k = grid.index(i, 3);
            if grid.is_groove(k) {
                continue;
            }
            let c = assemble_volume_equation(&g, &s, &grid, (i, 3), &f, 1e-6).unwrap();
            assert_eq!(c.source, 0.0);
        }
    }

    #[test]
    fn groove_source_adds_share_of_supply() {
        let g = reference::bearing_geometry();
        let grid = FilmGrid::new(&g, 40, 21).unwrap();
        let s = ShaftState {
            ex: 1e-5,
            ey: -4e-5,
            vx: 1e-3,
            vy: -2e-3,
            speed: 400.0,
        };
        let f = FilmFields::flooded(&grid);
        let q = 9.1e-6;
        let k = grid.groove_cells()[0];
        let (i, j) = (k % 40, k / 40);
        let with = assemble_volume_equation(&g, &s, &grid, (i, j), &f, q).unwrap();
        let without = assemble_volume_equation(&g, &s, &grid, (i, j), &f, 0.0).unwrap();
        assert!((with.source - without.source - q / grid.groove_count() as f64).abs() < 1e-20);
        assert_eq!(with.c1, without.c1);
    }

    #[test]
    fn couette_coefficients_telescope() {
        let g = reference::bearing_geometry();
        let grid = FilmGrid::new(&g, 24, 5).unwrap();
        let s = ShaftState::stationary(3e-5, -6e-5, 400.0);
        let cols = column_coefficients(&g, &s, &grid);
        for i in 0..24 {
            let e = (i + 1) % 24;
            assert_eq!(cols[i].c1, cols[e].c2);
            assert_eq!(cols[i].c3, cols[e].c4);
        }
    }

    #[test]
    fn rejects_out_of_bounds_cell() {
        let g = reference::bearing_geometry();
        let grid = FilmGrid::new(&g, 8, 8).unwrap();
        let s = ShaftState::stationary(0.0, 0.0, 400.0);
        let f = FilmFields::flooded(&grid);
        assert!(assemble_volume_equation(&g, &s, &grid, (8, 1), &f, 0.0).is_err());
    }
}
