//! Shaft and disc element matrices.
//!
//! Each node carries four DOFs `[u_x, u_y, β_x, β_y]`: the two lateral
//! translations and the slopes `β_x = ∂u_x/∂z`, `β_y = ∂u_y/∂z`. Using slopes in
//! both planes keeps the planar bending matrices identical for the two planes;
//! the gyroscopic coupling then reads `G[β_x, β_y] = +I_p`, `G[β_y, β_x] = −I_p`,
//! which stiffens forward whirl for positive spin.

use nalgebra::{Matrix4, SMatrix};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Matrix8 = SMatrix<f64, 8, 8>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Young modulus E [Pa].
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Density ρ [kg/m³].
    pub density: f64,
}

impl Material {
    pub fn steel() -> Self {
        Self {
            youngs_modulus: 210e9,
            poisson_ratio: 0.3,
            density: 7850.0,
        }
    }

    pub fn shear_modulus(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// Shear correction factor of a solid circular section.
    pub fn shear_factor(&self) -> f64 {
        let nu = self.poisson_ratio;
        6.0 * (1.0 + nu) / (7.0 + 6.0 * nu)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0 && self.density > 0.0) {
            return Err(Error::InvalidInput(
                "material modulus and density must be positive".into(),
            ));
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(Error::InvalidInput(format!(
                "Poisson ratio {} outside (0, 0.5)",
                self.poisson_ratio
            )));
        }
        Ok(())
    }
}

/// Cylindrical Timoshenko shaft element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShaftElement {
    pub length: f64,
    pub diameter: f64,
    pub material: Material,
}

impl ShaftElement {
    pub fn new(length: f64, diameter: f64, material: Material) -> Self {
        Self {
            length,
            diameter,
            material,
        }
    }

    pub fn area(&self) -> f64 {
        PI * self.diameter * self.diameter / 4.0
    }

    pub fn second_moment(&self) -> f64 {
        PI * self.diameter.powi(4) / 64.0
    }

    pub fn mass(&self) -> f64 {
        self.material.density * self.area() * self.length
    }

    /// Shear deformation parameter `Φ = 12 E I / (κ G A L²)`.
    pub fn shear_parameter(&self) -> f64 {
        let m = &self.material;
        12.0 * m.youngs_modulus * self.second_moment()
            / (m.shear_factor() * m.shear_modulus() * self.area() * self.length * self.length)
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if !(self.length > 0.0 && self.diameter > 0.0) {
            return Err(Error::InvalidInput(
                "shaft element length and diameter must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Element matrices in node DOF order `[u_x1, u_y1, β_x1, β_y1, u_x2, u_y2, β_x2, β_y2]`.
/// The gyroscopic matrix is speed independent and enters the equation of motion as `Ω G`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub mass: Matrix8,
    pub stiffness: Matrix8,
    pub gyroscopic: Matrix8,
}

// Planar DOF order [u1, β1, u2, β2] mapped into the 8-DOF element.
const X_PLANE: [usize; 4] = [0, 2, 4, 6];
const Y_PLANE: [usize; 4] = [1, 3, 5, 7];

pub fn beam_element_matrices(element: &ShaftElement) -> ElementMatrices {
    let l = element.length;
    let phi = element.shear_parameter();
    let e = element.material.youngs_modulus;
    let rho = element.material.density;
    let i = element.second_moment();
    let a = element.area();

    let kb = e * i / ((1.0 + phi) * l.powi(3));
    let k = Matrix4::new(
        12.0,
        6.0 * l,
        -12.0,
        6.0 * l,
        6.0 * l,
        (4.0 + phi) * l * l,
        -6.0 * l,
        (2.0 - phi) * l * l,
        -12.0,
        -6.0 * l,
        12.0,
        -6.0 * l,
        6.0 * l,
        (2.0 - phi) * l * l,
        -6.0 * l,
        (4.0 + phi) * l * l,
    ) * kb;

    let p2 = phi * phi;
    let m1 = 312.0 + 588.0 * phi + 280.0 * p2;
    let m2 = (44.0 + 77.0 * phi + 35.0 * p2) * l;
    let m3 = 108.0 + 252.0 * phi + 140.0 * p2;
    let m4 = -(26.0 + 63.0 * phi + 35.0 * p2) * l;
    let m5 = (8.0 + 14.0 * phi + 7.0 * p2) * l * l;
    let m6 = -(6.0 + 14.0 * phi + 7.0 * p2) * l * l;
    let mt = Matrix4::new(
        m1, m2, m3, m4, m2, m5, -m4, m6, m3, -m4, m1, -m2, m4, m6, -m2, m5,
    ) * (rho * a * l / (840.0 * (1.0 + phi).powi(2)));

    let r1 = 36.0;
    let r2 = (3.0 - 15.0 * phi) * l;
    let r3 = (4.0 + 5.0 * phi + 10.0 * p2) * l * l;
    let r4 = (-1.0 - 5.0 * phi + 5.0 * p2) * l * l;
    let mr = Matrix4::new(
        r1, r2, -r1, r2, r2, r3, -r2, r4, -r1, -r2, r1, -r2, r2, r4, -r2, r3,
    ) * (rho * i / (30.0 * l * (1.0 + phi).powi(2)));

    let mut mass = Matrix8::zeros();
    let mut stiffness = Matrix8::zeros();
    let mut gyroscopic = Matrix8::zeros();
    for r in 0..4 {
        for c in 0..4 {
            let m = mt[(r, c)] + mr[(r, c)];
            mass[(X_PLANE[r], X_PLANE[c])] = m;
            mass[(Y_PLANE[r], Y_PLANE[c])] = m;
            stiffness[(X_PLANE[r], X_PLANE[c])] = k[(r, c)];
            stiffness[(Y_PLANE[r], Y_PLANE[c])] = k[(r, c)];
            // polar inertia is twice the diametral one for a circular section
            gyroscopic[(X_PLANE[r], Y_PLANE[c])] = 2.0 * mr[(r, c)];
            gyroscopic[(Y_PLANE[r], X_PLANE[c])] = -2.0 * mr[(r, c)];
        }
    }
    ElementMatrices {
        mass,
        stiffness,
        gyroscopic,
    }
}

/// Rigid disc mounted at a node. `bore_diameter` is the part of the disc
/// occupied by the shaft and excluded from its inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidDisc {
    pub node: usize,
    pub width: f64,
    pub outer_diameter: f64,
    #[serde(default)]
    pub bore_diameter: f64,
    pub density: f64,
}

impl RigidDisc {
    pub fn mass(&self) -> f64 {
        self.density * PI / 4.0
            * (self.outer_diameter.powi(2) - self.bore_diameter.powi(2))
            * self.width
    }

    pub fn polar_inertia(&self) -> f64 {
        self.mass() / 8.0 * (self.outer_diameter.powi(2) + self.bore_diameter.powi(2))
    }

    pub fn diametral_inertia(&self) -> f64 {
        self.polar_inertia() / 2.0 + self.mass() * self.width * self.width / 12.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width >= 0.0 && self.outer_diameter > 0.0 && self.density > 0.0) {
            return Err(Error::InvalidInput(
                "disc dimensions and density must be positive".into(),
            ));
        }
        if !(self.bore_diameter >= 0.0 && self.bore_diameter < self.outer_diameter) {
            return Err(Error::InvalidInput(
                "disc bore must be smaller than its outer diameter".into(),
            ));
        }
        Ok(())
    }
}

/// Nodal disc matrices in `[u_x, u_y, β_x, β_y]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscMatrices {
    pub mass: Matrix4<f64>,
    pub gyroscopic: Matrix4<f64>,
}

pub fn disc_matrices(disc: &RigidDisc) -> DiscMatrices {
    let m = disc.mass();
    let id = disc.diametral_inertia();
    let ip = disc.polar_inertia();
    let mass = Matrix4::from_diagonal(&nalgebra::Vector4::new(m, m, id, id));
    let mut gyroscopic = Matrix4::zeros();
    gyroscopic[(2, 3)] = ip;
    gyroscopic[(3, 2)] = -ip;
    DiscMatrices { mass, gyroscopic }
}
