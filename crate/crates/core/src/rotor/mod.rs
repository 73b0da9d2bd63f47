//! Finite element rotor model.

mod element;

pub use element::{
    beam_element_matrices, disc_matrices, DiscMatrices, ElementMatrices, Material, Matrix8,
    RigidDisc, ShaftElement,
};

use nalgebra::{Complex, DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::bearing::BearingCoefficients;
use crate::error::{Error, Result};
use crate::units::GRAVITY;

pub const DOF_PER_NODE: usize = 4;

/// Global DOF index of a node DOF (`0 = u_x`, `1 = u_y`, `2 = β_x`, `3 = β_y`).
#[inline]
pub fn dof(node: usize, local: usize) -> usize {
    node * DOF_PER_NODE + local
}

/// Rotor geometry: a chain of shaft elements (element `k` joins nodes `k` and
/// `k + 1`), rigid discs and the nodes carrying bearings. Node indices are
/// zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotorDescription {
    pub elements: Vec<ShaftElement>,
    pub discs: Vec<RigidDisc>,
    pub bearing_nodes: Vec<usize>,
    /// Stiffness-proportional damping coefficient β [s].
    pub proportional_damping: f64,
}

impl RotorDescription {
    pub fn node_count(&self) -> usize {
        self.elements.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::Topology("rotor has no shaft elements".into()));
        }
        for e in &self.elements {
            e.validate()?;
        }
        let n = self.node_count();
        for d in &self.discs {
            d.validate()?;
            if d.node >= n {
                return Err(Error::Topology(format!(
                    "disc at node {} but the rotor has {n} nodes",
                    d.node
                )));
            }
        }
        for &b in &self.bearing_nodes {
            if b >= n {
                return Err(Error::Topology(format!(
                    "bearing at node {b} but the rotor has {n} nodes"
                )));
            }
        }
        if !(self.proportional_damping >= 0.0) {
            return Err(Error::InvalidInput(
                "proportional damping must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Splits every element into `factor` equal elements. Node `n` of the
    /// original mesh becomes node `n · factor`.
    pub fn subdivided(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let elements = self
            .elements
            .iter()
            .flat_map(|e| {
                std::iter::repeat_n(
                    ShaftElement {
                        length: e.length / factor as f64,
                        ..*e
                    },
                    factor,
                )
            })
            .collect();
        Self {
            elements,
            discs: self
                .discs
                .iter()
                .map(|d| RigidDisc {
                    node: d.node * factor,
                    ..*d
                })
                .collect(),
            bearing_nodes: self.bearing_nodes.iter().map(|&b| b * factor).collect(),
            proportional_damping: self.proportional_damping,
        }
    }

    /// Axial coordinate of every node [m].
    pub fn node_positions(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.elements.iter().scan(0.0, |z, e| {
                *z += e.length;
                Some(*z)
            }))
            .collect()
    }
}

/// Assembled global matrices of the rotor, `M q̈ + (C + Ω G) q̇ + K q = F`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorModel {
    pub node_count: usize,
    pub node_positions: Vec<f64>,
    pub mass: DMatrix<f64>,
    /// Shaft stiffness plus any attached bearing stiffness.
    pub stiffness: DMatrix<f64>,
    /// Proportional damping plus any attached bearing damping.
    pub damping: DMatrix<f64>,
    /// Speed-independent gyroscopic matrix.
    pub gyroscopic: DMatrix<f64>,
    pub shaft_stiffness: DMatrix<f64>,
    /// Weight of shaft and discs as nodal forces [N].
    pub gravity: DVector<f64>,
    pub bearing_nodes: Vec<usize>,
    pub disc_nodes: Vec<usize>,
    pub total_mass: f64,
}

impl RotorModel {
    pub fn dofs(&self) -> usize {
        self.node_count * DOF_PER_NODE
    }

    pub fn total_weight(&self) -> f64 {
        self.total_mass * GRAVITY
    }

    /// Eigenvalues of the first-order form of the free equation of motion at speed `speed`.
    pub fn eigenvalues(&self, speed: f64) -> Result<Vec<Complex<f64>>> {
        let n = self.dofs();
        let minv = self
            .mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?
            .inverse();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, n), (n, n)).fill_with_identity();
        let damping = &self.damping + &self.gyroscopic * speed;
        a.view_mut((n, 0), (n, n))
            .copy_from(&(-&minv * &self.stiffness));
        a.view_mut((n, n), (n, n)).copy_from(&(-&minv * damping));
        Ok(a.complex_eigenvalues().iter().copied().collect())
    }

    /// Undamped, non-rotating natural frequencies [rad/s] in ascending order.
    /// Requires a symmetric stiffness matrix.
    pub fn undamped_frequencies(&self) -> Result<Vec<f64>> {
        let chol = self
            .mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("mass factor is singular".into()))?;
        let mut a = &linv * &self.stiffness * linv.transpose();
        a = (&a + a.transpose()) * 0.5;
        let mut w: Vec<f64> = a
            .symmetric_eigenvalues()
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .collect();
        w.sort_by(f64::total_cmp);
        Ok(w)
    }

    /// Static displacement under a constant load.
    pub fn static_response(&self, load: &DVector<f64>) -> Result<DVector<f64>> {
        self.stiffness.clone().lu().solve(load).ok_or_else(|| {
            Error::Singular("stiffness matrix is singular; is the rotor supported?".into())
        })
    }
}

pub fn assemble_rotor(description: &RotorDescription) -> Result<RotorModel> {
    description.validate()?;
    let n_nodes = description.node_count();
    let n = n_nodes * DOF_PER_NODE;
    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    let mut gyroscopic = DMatrix::zeros(n, n);
    let mut total_mass = 0.0;

    for (k, e) in description.elements.iter().enumerate() {
        let em = beam_element_matrices(e);
        let base = dof(k, 0);
        for r in 0..8 {
            for c in 0..8 {
                mass[(base + r, base + c)] += em.mass[(r, c)];
                stiffness[(base + r, base + c)] += em.stiffness[(r, c)];
                gyroscopic[(base + r, base + c)] += em.gyroscopic[(r, c)];
            }
        }
        total_mass += e.mass();
    }
    for d in &description.discs {
        let dm = disc_matrices(d);
        let base = dof(d.node, 0);
        for r in 0..4 {
            for c in 0..4 {
                mass[(base + r, base + c)] += dm.mass[(r, c)];
                gyroscopic[(base + r, base + c)] += dm.gyroscopic[(r, c)];
            }
        }
        total_mass += d.mass();
    }

    let mut down = DVector::zeros(n);
    for node in 0..n_nodes {
        down[dof(node, 1)] = -GRAVITY;
    }
    let gravity = &mass * down;
    let damping = &stiffness * description.proportional_damping;

    Ok(RotorModel {
        node_count: n_nodes,
        node_positions: description.node_positions(),
        mass,
        shaft_stiffness: stiffness.clone(),
        stiffness,
        damping,
        gyroscopic,
        gravity,
        bearing_nodes: description.bearing_nodes.clone(),
        disc_nodes: description.discs.iter().map(|d| d.node).collect(),
        total_mass,
    })
}

/// Adds the bearing stiffness and damping blocks to the translational DOFs of
/// the given nodes.
///
/// The hydrodynamic force on the journal about equilibrium is
/// `F_H = F_H0 − K δ − C δ̇` with `K = −∂F_H/∂e` and `C = −∂F_H/∂ė`, so the
/// blocks enter the left-hand side with a positive sign.
pub fn attach_bearings(
    model: &RotorModel,
    supports: &[(usize, &BearingCoefficients)],
) -> Result<RotorModel> {
    let mut out = model.clone();
    for &(node, coeffs) in supports {
        if node >= model.node_count {
            return Err(Error::Topology(format!(
                "bearing node {node} does not exist"
            )));
        }
        add_block(&mut out.stiffness, node, &coeffs.stiffness);
        add_block(&mut out.damping, node, &coeffs.damping);
    }
    Ok(out)
}

fn add_block(target: &mut DMatrix<f64>, node: usize, block: &Matrix2<f64>) {
    for r in 0..2 {
        for c in 0..2 {
            target[(dof(node, r), dof(node, c))] += block[(r, c)];
        }
    }
}

/// Unbalance on a node. `moment` is mass times eccentricity [kg·m] so that the
/// rotating force amplitude is `moment · Ω²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnbalanceSpec {
    pub node: usize,
    pub moment: f64,
}

/// Nodal unbalance force `(m_u Ω² cos Ωt, m_u Ω² sin Ωt, 0, 0)`.
pub fn unbalance_force(spec: &UnbalanceSpec, speed: f64, t: f64) -> [f64; 4] {
    let f = spec.moment * speed * speed;
    let (s, c) = (speed * t).sin_cos();
    [f * c, f * s, 0.0, 0.0]
}
