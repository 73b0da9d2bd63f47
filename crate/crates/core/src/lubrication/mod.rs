//! Mass-conserving (p-θ) lubrication model of a grooved journal bearing.
//!
//! The film is unwrapped onto the rectangle `x ∈ [0, 2πR)`, `z ∈ [0, L]` and
//! discretised with finite volumes. Column `i` is centred at `α_i = i·Δα`,
//! row `j` at `z_j = j·Δz` with `Δz = L / (n_axial − 1)`. Rows `0` and
//! `n_axial − 1` lie on the bearing edges and hold the boundary values
//! `p = 0`, `θ = 1`; only interior rows are solved.
//!
//! Angular convention: `α` is measured from the global `+Y` axis towards `−X`
//! (counter-clockwise, the direction of shaft rotation). The bearing surface
//! point at `α` lies in direction `n(α) = (−sin α, cos α)` so that the film
//! thickness is `h = c_r − e·n = c_r + e_x sin α − e_y cos α`.

mod assembly;
mod postprocess;
mod solver;

pub use assembly::{assemble_volume_equation, VolumeCoefficients};
pub use postprocess::{
    global_mass_balance, integrate_hydrodynamic_force, write_field_csv, MassBalance,
};
pub use solver::{solve_film, solve_film_from, sweep_fixed, SolverOptions};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Bearing and lubricant properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BearingGeometry {
    /// Journal radius R [m].
    pub radius: f64,
    /// Bearing width L [m].
    pub width: f64,
    /// Radial clearance c_r [m].
    pub radial_clearance: f64,
    /// Angular position of the groove centre [rad], same convention as `α`.
    pub groove_angle: f64,
    /// Groove circumferential length b [m].
    pub groove_length: f64,
    /// Groove axial width a [m].
    pub groove_width: f64,
    /// Dynamic viscosity μ [Pa·s].
    pub viscosity: f64,
}

impl BearingGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius", self.radius),
            ("width", self.width),
            ("radial_clearance", self.radial_clearance),
            ("viscosity", self.viscosity),
            ("groove_length", self.groove_length),
            ("groove_width", self.groove_width),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "bearing {name} must be positive, got {v}"
                )));
            }
        }
        if self.groove_length >= 2.0 * PI * self.radius {
            return Err(Error::InvalidInput(
                "groove length exceeds the circumference".into(),
            ));
        }
        if self.groove_width > self.width {
            return Err(Error::InvalidInput(
                "groove width exceeds the bearing width".into(),
            ));
        }
        if !self.groove_angle.is_finite() {
            return Err(Error::InvalidInput("groove angle must be finite".into()));
        }
        Ok(())
    }

    /// Scale of the hydrodynamic force, `μ Ω R³ L / c_r²`.
    pub fn force_scale(&self, speed: f64) -> f64 {
        self.viscosity * speed.abs() * self.radius.powi(3) * self.width
            / self.radial_clearance.powi(2)
    }
}

/// Journal position and velocity relative to the bearing centre.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShaftState {
    pub ex: f64,
    pub ey: f64,
    pub vx: f64,
    pub vy: f64,
    /// Rotational speed Ω [rad/s].
    pub speed: f64,
}

impl ShaftState {
    pub fn stationary(ex: f64, ey: f64, speed: f64) -> Self {
        Self {
            ex,
            ey,
            vx: 0.0,
            vy: 0.0,
            speed,
        }
    }

    pub fn eccentricity(&self) -> f64 {
        self.ex.hypot(self.ey)
    }

    pub fn check_clearance(&self, geometry: &BearingGeometry) -> Result<()> {
        let e = self.eccentricity();
        if !(e < geometry.radial_clearance) {
            return Err(Error::Contact {
                eccentricity: e,
                clearance: geometry.radial_clearance,
            });
        }
        Ok(())
    }
}

/// Oil film thickness at angular coordinate `alpha`.
pub fn film_thickness(geometry: &BearingGeometry, state: &ShaftState, alpha: f64) -> Result<f64> {
    state.check_clearance(geometry)?;
    Ok(thickness(geometry, state, alpha))
}

#[inline]
pub(crate) fn thickness(geometry: &BearingGeometry, state: &ShaftState, alpha: f64) -> f64 {
    geometry.radial_clearance + state.ex * alpha.sin() - state.ey * alpha.cos()
}

/// Time derivative of the film thickness from the journal velocity.
#[inline]
pub(crate) fn thickness_rate(state: &ShaftState, alpha: f64) -> f64 {
    state.vx * alpha.sin() - state.vy * alpha.cos()
}

/// Finite-volume discretisation of the unwrapped film.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmGrid {
    n_circ: usize,
    n_axial: usize,
    groove: Vec<usize>,
    is_groove: Vec<bool>,
}

impl FilmGrid {
    /// Builds the grid and flags the cells whose centres fall inside the groove
    /// rectangle. If the mesh is too coarse to put a centre inside the groove,
    /// the cells nearest to the groove centre are used.
    pub fn new(geometry: &BearingGeometry, n_circ: usize, n_axial: usize) -> Result<Self> {
        geometry.validate()?;
        if n_circ < 3 || n_axial < 3 {
            return Err(Error::InvalidInput(format!(
                "film grid needs at least 3x3 volumes, got {n_circ}x{n_axial}"
            )));
        }
        let dalpha = 2.0 * PI / n_circ as f64;
        let dz = geometry.width / (n_axial - 1) as f64;
        let half_angle = 0.5 * geometry.groove_length / geometry.radius;
        let eps = 1e-12;

        let angular_offset = |i: usize| wrap_angle(i as f64 * dalpha - geometry.groove_angle).abs();
        let mut columns: Vec<usize> = (0..n_circ)
            .filter(|&i| angular_offset(i) <= half_angle + eps)
            .collect();
        if columns.is_empty() {
            let nearest = (0..n_circ)
                .min_by(|&a, &b| angular_offset(a).total_cmp(&angular_offset(b)))
                .unwrap_or(0);
            columns.push(nearest);
        }

        let mid = 0.5 * geometry.width;
        let axial_offset = |j: usize| (j as f64 * dz - mid).abs();
        let mut rows: Vec<usize> = (1..n_axial - 1)
            .filter(|&j| axial_offset(j) <= 0.5 * geometry.groove_width + eps * geometry.width)
            .collect();
        if rows.is_empty() {
            let nearest = (1..n_axial - 1)
                .min_by(|&a, &b| axial_offset(a).total_cmp(&axial_offset(b)))
                .unwrap_or(1);
            rows.push(nearest);
        }

        let mut is_groove = vec![false; n_circ * n_axial];
        let mut groove = Vec::with_capacity(rows.len() * columns.len());
        for &j in &rows {
            for &i in &columns {
                let k = j * n_circ + i;
                is_groove[k] = true;
                groove.push(k);
            }
        }
        groove.sort_unstable();
        Ok(Self {
            n_circ,
            n_axial,
            groove,
            is_groove,
        })
    }

    pub fn n_circ(&self) -> usize {
        self.n_circ
    }

    /// Number of rows including the two edge rows.
    pub fn n_axial(&self) -> usize {
        self.n_axial
    }

    pub fn len(&self) -> usize {
        self.n_circ * self.n_axial
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_circ + i
    }

    /// Flat indices of the groove volumes.
    pub fn groove_cells(&self) -> &[usize] {
        &self.groove
    }

    pub fn groove_count(&self) -> usize {
        self.groove.len()
    }

    #[inline]
    pub fn is_groove(&self, k: usize) -> bool {
        self.is_groove[k]
    }

    pub fn dalpha(&self) -> f64 {
        2.0 * PI / self.n_circ as f64
    }

    pub fn dz(&self, geometry: &BearingGeometry) -> f64 {
        geometry.width / (self.n_axial - 1) as f64
    }

    pub fn alpha(&self, i: usize) -> f64 {
        i as f64 * self.dalpha()
    }

    pub fn is_edge_row(&self, j: usize) -> bool {
        j == 0 || j + 1 == self.n_axial
    }
}

/// Pressure and oil-fraction fields, row-major with `index = j·n_circ + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmFields {
    pub pressure: Vec<f64>,
    pub theta: Vec<f64>,
}

impl FilmFields {
    /// Fully flooded, unloaded film.
    pub fn flooded(grid: &FilmGrid) -> Self {
        Self {
            pressure: vec![0.0; grid.len()],
            theta: vec![1.0; grid.len()],
        }
    }
}

/// Converged film state.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmSolution {
    pub fields: FilmFields,
    /// Hydrodynamic force on the journal (F_HX, F_HY) [N].
    pub force: [f64; 2],
    pub iterations: usize,
    pub residual: f64,
}

impl FilmSolution {
    pub fn pressure(&self) -> &[f64] {
        &self.fields.pressure
    }

    pub fn theta(&self) -> &[f64] {
        &self.fields.theta
    }

    pub fn peak_pressure(&self) -> f64 {
        self.fields.pressure.iter().copied().fold(0.0, f64::max)
    }
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}
