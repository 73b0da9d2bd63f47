//! The reference rotor-bearing system: a 21-node steel shaft with three discs,
//! two identical grooved journal bearings at nodes 6 and 20, unbalance on the
//! central disc, running at 75 Hz.
//!
//! Node indices here are zero-based, so drawing node `n` is index `n − 1`.

use crate::lubrication::BearingGeometry;
use crate::rotor::{Material, RigidDisc, RotorDescription, ShaftElement, UnbalanceSpec};
use crate::units::{hz_to_rad_s, ml_min_to_m3_s};

/// Threshold flowrate for flooded lubrication, 546 ml/min.
pub const THRESHOLD_FLOWRATE_ML_MIN: f64 = 546.0;

pub const OPERATING_SPEED_HZ: f64 = 75.0;

/// Unbalance on the central disc [kg·m].
pub const UNBALANCE_MOMENT: f64 = 1.24e-2;

/// Total rotor weight carried equally by the two bearings [N].
pub const ROTOR_WEIGHT: f64 = 6545.6;

/// Stiffness-proportional damping β [s].
pub const PROPORTIONAL_DAMPING: f64 = 1e-5;

/// Shaft elements as (length, diameter) in mm.
pub const SHAFT_ELEMENTS_MM: [(f64, f64); 20] = [
    (30.0, 30.0),
    (60.0, 52.5),
    (30.0, 112.5),
    (45.0, 52.5),
    (45.0, 90.0),
    (45.0, 90.0),
    (120.0, 135.0),
    (135.0, 112.5),
    (180.0, 187.5),
    (180.0, 187.5),
    (45.0, 262.5),
    (240.0, 187.5),
    (240.0, 187.5),
    (210.0, 165.0),
    (210.0, 165.0),
    (210.0, 150.0),
    (30.0, 165.0),
    (60.0, 135.0),
    (78.4, 90.0),
    (41.6, 90.0),
];

/// Discs as (zero-based node, width, outer diameter) in mm.
pub const DISCS_MM: [(usize, f64, f64); 3] =
    [(9, 50.0, 525.0), (12, 50.0, 600.0), (14, 50.0, 697.5)];

/// Zero-based bearing nodes (drawing nodes 6 and 20).
pub const BEARING_NODES: [usize; 2] = [5, 19];

/// Zero-based nodes just outside the bearings towards the shaft ends (drawing nodes 5 and 21).
pub const OUTSIDE_NODES: [usize; 2] = [4, 20];

/// Zero-based unbalance node (drawing node 13, central disc).
pub const UNBALANCE_NODE: usize = 12;

pub fn threshold_flowrate() -> f64 {
    ml_min_to_m3_s(THRESHOLD_FLOWRATE_ML_MIN)
}

pub fn operating_speed() -> f64 {
    hz_to_rad_s(OPERATING_SPEED_HZ)
}

pub fn bearing_geometry() -> BearingGeometry {
    BearingGeometry {
        radius: 45.0e-3,
        width: 70.0e-3,
        radial_clearance: 120e-6,
        groove_angle: 0.0,
        groove_length: 16.2e-3,
        groove_width: 35.0e-3,
        viscosity: 0.094,
    }
}

/// Discs are bored to the local shaft diameter, which reproduces the stated
/// rotor weight.
pub fn rotor_description() -> RotorDescription {
    let steel = Material::steel();
    let elements: Vec<ShaftElement> = SHAFT_ELEMENTS_MM
        .iter()
        .map(|&(l, d)| ShaftElement::new(l * 1e-3, d * 1e-3, steel))
        .collect();
    let discs = DISCS_MM
        .iter()
        .map(|&(node, w, od)| RigidDisc {
            node,
            width: w * 1e-3,
            outer_diameter: od * 1e-3,
            bore_diameter: elements[node].diameter.min(elements[node - 1].diameter),
            density: steel.density,
        })
        .collect();
    RotorDescription {
        elements,
        discs,
        bearing_nodes: BEARING_NODES.to_vec(),
        proportional_damping: PROPORTIONAL_DAMPING,
    }
}

pub fn unbalance() -> UnbalanceSpec {
    UnbalanceSpec {
        node: UNBALANCE_NODE,
        moment: UNBALANCE_MOMENT,
    }
}
