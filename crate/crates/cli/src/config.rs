//! TOML run configuration.
//!
//! Lengths follow the drawing units of the reference rotor (mm, µm), the
//! supply flowrates are in ml/min and nodes are numbered from 1. Everything is
//! converted to SI with zero-based nodes in [`RunConfig::simulation`].

use std::path::{Path, PathBuf};

use flowid_core::bearing::CharacterizationOptions;
use flowid_core::identification::{Parameter, SearchConfig, Selector};
use flowid_core::lubrication::BearingGeometry;
use flowid_core::rotor::{Material, RigidDisc, RotorDescription, ShaftElement, UnbalanceSpec};
use flowid_core::system::{NoiseSpec, SimulationConfig};
use flowid_core::units::{hz_to_rad_s, ml_min_to_m3_s};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub operating: Operating,
    pub mesh: Mesh,
    pub rotor: Rotor,
    pub bearing: Bearing,
    pub unbalance: Vec<Unbalance>,
    pub measurement: Measurement,
    pub flow: Flow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Noise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identification: Option<Identification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<Sensitivity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign: Option<Campaign>,
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operating {
    pub speed_hz: f64,
    pub dt_s: f64,
    pub duration_s: f64,
    /// Initial transient excluded from the record.
    pub discard_s: f64,
    /// Spectral analysis window at the end of the record.
    pub analysis_window_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mesh {
    pub n_circ: usize,
    pub n_axial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rotor {
    pub youngs_modulus_pa: f64,
    pub poisson_ratio: f64,
    pub density_kg_m3: f64,
    /// Stiffness-proportional damping coefficient β.
    pub proportional_damping_s: f64,
    pub bearing_nodes: [usize; 2],
    /// Shaft elements from the left end as `[length, diameter]`.
    pub elements_mm: Vec<[f64; 2]>,
    #[serde(default)]
    pub discs: Vec<Disc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disc {
    pub node: usize,
    pub width_mm: f64,
    pub outer_diameter_mm: f64,
    /// Defaults to the smaller diameter of the adjacent shaft elements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bore_diameter_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bearing {
    pub radius_mm: f64,
    pub width_mm: f64,
    pub radial_clearance_um: f64,
    /// Groove centre angle measured from the top of the bearing.
    pub groove_angle_deg: f64,
    pub groove_length_mm: f64,
    pub groove_width_mm: f64,
    pub viscosity_pa_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Unbalance {
    pub node: usize,
    pub moment_kg_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flow {
    pub threshold_ml_min: f64,
    pub q1_ml_min: f64,
    pub q2_ml_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub snr_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Identification {
    /// Reference flowrates used to synthesise the measurement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_ml_min: Option<[f64; 2]>,
    /// Summary JSON of a previous `simulate` run used as the measurement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_file: Option<PathBuf>,
    #[serde(default = "default_parameters")]
    pub parameters: Vec<Parameter>,
    /// Search bounds as fractions of the threshold flowrate.
    #[serde(default = "default_bounds")]
    pub bounds: [f64; 2],
    /// Initial guesses per bearing as fractions of the threshold flowrate.
    #[serde(default = "default_guesses")]
    pub guesses: Vec<f64>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_fd_spacing")]
    pub fd_spacing: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_memo_resolution")]
    pub memo_resolution: f64,
    #[serde(default)]
    pub line_search: bool,
}

fn default_parameters() -> Vec<Parameter> {
    vec![Parameter::Fb, Parameter::Phi]
}
fn default_bounds() -> [f64; 2] {
    SearchConfig::default().bounds
}
fn default_guesses() -> Vec<f64> {
    SearchConfig::default().guesses
}
fn default_max_iterations() -> usize {
    SearchConfig::default().max_iterations
}
fn default_fd_spacing() -> f64 {
    SearchConfig::default().fd_spacing
}
fn default_tolerance() -> f64 {
    SearchConfig::default().tolerance
}
fn default_memo_resolution() -> f64 {
    SearchConfig::default().memo_resolution
}

impl Default for Identification {
    fn default() -> Self {
        Self {
            reference_ml_min: None,
            reference_file: None,
            parameters: default_parameters(),
            bounds: default_bounds(),
            guesses: default_guesses(),
            max_iterations: default_max_iterations(),
            fd_spacing: default_fd_spacing(),
            tolerance: default_tolerance(),
            memo_resolution: default_memo_resolution(),
            line_search: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Q₁ = Q₂ along the range.
    Equal,
    /// Every combination of the range with itself.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensitivity {
    pub mode: SweepMode,
    pub start_ml_min: f64,
    pub stop_ml_min: f64,
    /// Number of equally spaced flowrates including both ends.
    pub points: usize,
}

impl Sensitivity {
    pub fn flowrates_ml_min(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start_ml_min];
        }
        let span = self.stop_ml_min - self.start_ml_min;
        (0..self.points)
            .map(|i| self.start_ml_min + span * i as f64 / (self.points - 1) as f64)
            .collect()
    }

    /// Flowrate pairs in ml/min, bearing 1 outer in grid mode.
    pub fn pairs_ml_min(&self) -> Vec<[f64; 2]> {
        let q = self.flowrates_ml_min();
        match self.mode {
            SweepMode::Equal => q.iter().map(|&v| [v, v]).collect(),
            SweepMode::Grid => q
                .iter()
                .flat_map(|&a| q.iter().map(move |&b| [a, b]))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    /// Reference flowrates of bearing 1; the cases are all combinations with `q2_ml_min`.
    pub q1_ml_min: Vec<f64>,
    pub q2_ml_min: Vec<f64>,
    /// Case `i` (row-major, bearing 1 outer) uses noise seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    /// Concurrent cases; defaults to one less than the available cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
}

impl Campaign {
    pub fn cases_ml_min(&self) -> Vec<[f64; 2]> {
        self.q1_ml_min
            .iter()
            .flat_map(|&a| self.q2_ml_min.iter().map(move |&b| [a, b]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub directory: PathBuf,
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mesh: Option<Mesh>,
    pub duration_s: Option<f64>,
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("must be a positive number, got {v}"),
        ))
    }
}

impl RunConfig {
    /// Parses and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let config = Self::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok(config.resolve_paths(path.parent().unwrap_or(Path::new("."))))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical TOML text; the configuration hash is taken over this.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    fn resolve_paths(mut self, base: &Path) -> Self {
        if let Some(id) = self.identification.as_mut() {
            if let Some(f) = id.reference_file.as_mut() {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
        self
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<(), CliError> {
        if let Some(out) = &overrides.out {
            self.output.directory = out.clone();
        }
        if let Some(seed) = overrides.seed {
            if let Some(noise) = self.noise.as_mut() {
                noise.seed = seed;
            }
            if let Some(campaign) = self.campaign.as_mut() {
                campaign.seed = seed;
            }
        }
        if let Some(mesh) = overrides.mesh {
            self.mesh = mesh;
        }
        if let Some(d) = overrides.duration_s {
            self.operating.duration_s = d;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let op = &self.operating;
        positive("operating.speed_hz", op.speed_hz)?;
        positive("operating.dt_s", op.dt_s)?;
        positive("operating.duration_s", op.duration_s)?;
        if !(op.discard_s >= 0.0 && op.discard_s < op.duration_s) {
            return Err(invalid(
                "operating.discard_s",
                "must lie in [0, duration_s)",
            ));
        }
        positive("operating.analysis_window_s", op.analysis_window_s)?;
        if op.analysis_window_s > op.duration_s - op.discard_s + 1e-12 {
            return Err(invalid(
                "operating.analysis_window_s",
                "exceeds the recorded time duration_s − discard_s",
            ));
        }
        if self.mesh.n_circ < 4 {
            return Err(invalid("mesh.n_circ", "needs at least 4 volumes"));
        }
        if self.mesh.n_axial < 3 {
            return Err(invalid("mesh.n_axial", "needs at least 3 volumes"));
        }

        let r = &self.rotor;
        positive("rotor.youngs_modulus_pa", r.youngs_modulus_pa)?;
        positive("rotor.density_kg_m3", r.density_kg_m3)?;
        if !(r.poisson_ratio > 0.0 && r.poisson_ratio < 0.5) {
            return Err(invalid("rotor.poisson_ratio", "must lie in (0, 0.5)"));
        }
        if r.proportional_damping_s.is_nan() || r.proportional_damping_s < 0.0 {
            return Err(invalid(
                "rotor.proportional_damping_s",
                "must be non-negative",
            ));
        }
        if r.elements_mm.is_empty() {
            return Err(invalid("rotor.elements_mm", "needs at least one element"));
        }
        for (i, [l, d]) in r.elements_mm.iter().enumerate() {
            positive(&format!("rotor.elements_mm[{i}]"), l.min(*d))?;
        }
        let nodes = r.elements_mm.len() + 1;
        let node_ok = |n: usize| (1..=nodes).contains(&n);
        for (i, &n) in r.bearing_nodes.iter().enumerate() {
            if !node_ok(n) {
                return Err(invalid(
                    &format!("rotor.bearing_nodes[{i}]"),
                    format!("node {n} outside 1..={nodes}"),
                ));
            }
        }
        if r.bearing_nodes[0] == r.bearing_nodes[1] {
            return Err(invalid(
                "rotor.bearing_nodes",
                "the two bearings need distinct nodes",
            ));
        }
        for (i, disc) in r.discs.iter().enumerate() {
            let f = |name: &str| format!("rotor.discs[{i}].{name}");
            if !node_ok(disc.node) {
                return Err(invalid(
                    &f("node"),
                    format!("node {} outside 1..={nodes}", disc.node),
                ));
            }
            positive(&f("width_mm"), disc.width_mm)?;
            positive(&f("outer_diameter_mm"), disc.outer_diameter_mm)?;
            if let Some(b) = disc.bore_diameter_mm {
                if !(b >= 0.0 && b < disc.outer_diameter_mm) {
                    return Err(invalid(
                        &f("bore_diameter_mm"),
                        "must lie in [0, outer_diameter_mm)",
                    ));
                }
            }
        }

        let b = &self.bearing;
        positive("bearing.radius_mm", b.radius_mm)?;
        positive("bearing.width_mm", b.width_mm)?;
        positive("bearing.radial_clearance_um", b.radial_clearance_um)?;
        positive("bearing.groove_length_mm", b.groove_length_mm)?;
        positive("bearing.groove_width_mm", b.groove_width_mm)?;
        positive("bearing.viscosity_pa_s", b.viscosity_pa_s)?;
        if !b.groove_angle_deg.is_finite() {
            return Err(invalid("bearing.groove_angle_deg", "must be finite"));
        }
        if b.groove_width_mm >= b.width_mm {
            return Err(invalid(
                "bearing.groove_width_mm",
                "must be smaller than bearing.width_mm",
            ));
        }

        for (i, u) in self.unbalance.iter().enumerate() {
            if !node_ok(u.node) {
                return Err(invalid(
                    &format!("unbalance[{i}].node"),
                    format!("node {} outside 1..={nodes}", u.node),
                ));
            }
            if !u.moment_kg_m.is_finite() {
                return Err(invalid(
                    &format!("unbalance[{i}].moment_kg_m"),
                    "must be finite",
                ));
            }
        }
        if self.measurement.nodes.is_empty() {
            return Err(invalid("measurement.nodes", "needs at least one node"));
        }
        for (i, &n) in self.measurement.nodes.iter().enumerate() {
            if !node_ok(n) {
                return Err(invalid(
                    &format!("measurement.nodes[{i}]"),
                    format!("node {n} outside 1..={nodes}"),
                ));
            }
        }

        positive("flow.threshold_ml_min", self.flow.threshold_ml_min)?;
        if !(self.flow.q1_ml_min >= 0.0 && self.flow.q1_ml_min.is_finite()) {
            return Err(invalid("flow.q1_ml_min", "must be non-negative"));
        }
        if !(self.flow.q2_ml_min >= 0.0 && self.flow.q2_ml_min.is_finite()) {
            return Err(invalid("flow.q2_ml_min", "must be non-negative"));
        }
        if let Some(n) = &self.noise {
            if n.snr_db.is_nan() {
                return Err(invalid("noise.snr_db", "must be a number"));
            }
        }
        if let Some(id) = &self.identification {
            if id.reference_ml_min.is_some() && id.reference_file.is_some() {
                return Err(invalid(
                    "identification.reference_file",
                    "give either reference_ml_min or reference_file",
                ));
            }
            if let Some(q) = id.reference_ml_min {
                positive("identification.reference_ml_min", q[0].min(q[1]))?;
            }
            if id.parameters.is_empty() {
                return Err(invalid(
                    "identification.parameters",
                    "needs at least one parameter",
                ));
            }
            if id.parameters.len() * self.measurement.nodes.len() < 2 {
                return Err(invalid(
                    "identification.parameters",
                    "two flowrates need at least two error functions",
                ));
            }
            self.search_config()
                .validate()
                .map_err(|e| invalid("identification", e.to_string()))?;
        }
        if let Some(s) = &self.sensitivity {
            if s.points == 0 {
                return Err(invalid("sensitivity.points", "must be at least 1"));
            }
            positive("sensitivity.start_ml_min", s.start_ml_min)?;
            positive("sensitivity.stop_ml_min", s.stop_ml_min)?;
        }
        if let Some(c) = &self.campaign {
            if c.q1_ml_min.is_empty() {
                return Err(invalid("campaign.q1_ml_min", "needs at least one flowrate"));
            }
            if c.q2_ml_min.is_empty() {
                return Err(invalid("campaign.q2_ml_min", "needs at least one flowrate"));
            }
            if c.parallelism == Some(0) {
                return Err(invalid("campaign.parallelism", "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        ml_min_to_m3_s(self.flow.threshold_ml_min)
    }

    pub fn supplies(&self) -> [f64; 2] {
        [
            ml_min_to_m3_s(self.flow.q1_ml_min),
            ml_min_to_m3_s(self.flow.q2_ml_min),
        ]
    }

    pub fn noise_spec(&self) -> Option<NoiseSpec> {
        self.noise.map(|n| NoiseSpec {
            snr_db: n.snr_db,
            seed: n.seed,
        })
    }

    /// Zero-based measurement nodes.
    pub fn measurement_nodes(&self) -> Vec<usize> {
        self.measurement.nodes.iter().map(|n| n - 1).collect()
    }

    pub fn identification(&self) -> Identification {
        self.identification.clone().unwrap_or_default()
    }

    pub fn search_config(&self) -> SearchConfig {
        let id = self.identification();
        SearchConfig {
            threshold_flowrate: self.threshold(),
            bounds: id.bounds,
            guesses: id.guesses,
            max_iterations: id.max_iterations,
            fd_spacing: id.fd_spacing,
            tolerance: id.tolerance,
            memo_resolution: id.memo_resolution,
            line_search: id.line_search,
            parallel: true,
        }
    }

    /// Error-function selectors: each parameter at each measurement node.
    pub fn selectors(&self) -> Vec<Selector> {
        let nodes = self.measurement_nodes();
        self.identification()
            .parameters
            .iter()
            .flat_map(|&parameter| nodes.iter().map(move |&node| Selector { parameter, node }))
            .collect()
    }

    pub fn simulation(&self) -> SimulationConfig {
        let r = &self.rotor;
        let material = Material {
            youngs_modulus: r.youngs_modulus_pa,
            poisson_ratio: r.poisson_ratio,
            density: r.density_kg_m3,
        };
        let elements: Vec<ShaftElement> = r
            .elements_mm
            .iter()
            .map(|&[l, d]| ShaftElement::new(l * 1e-3, d * 1e-3, material))
            .collect();
        let discs = r
            .discs
            .iter()
            .map(|d| {
                let node = d.node - 1;
                let adjacent = [node.checked_sub(1), Some(node)]
                    .into_iter()
                    .flatten()
                    .filter_map(|i| elements.get(i))
                    .map(|e| e.diameter)
                    .fold(f64::INFINITY, f64::min);
                RigidDisc {
                    node,
                    width: d.width_mm * 1e-3,
                    outer_diameter: d.outer_diameter_mm * 1e-3,
                    bore_diameter: d.bore_diameter_mm.map_or(adjacent, |b| b * 1e-3),
                    density: r.density_kg_m3,
                }
            })
            .collect();
        let b = &self.bearing;
        SimulationConfig {
            rotor: RotorDescription {
                elements,
                discs,
                bearing_nodes: r.bearing_nodes.iter().map(|n| n - 1).collect(),
                proportional_damping: r.proportional_damping_s,
            },
            bearing: BearingGeometry {
                radius: b.radius_mm * 1e-3,
                width: b.width_mm * 1e-3,
                radial_clearance: b.radial_clearance_um * 1e-6,
                groove_angle: b.groove_angle_deg.to_radians(),
                groove_length: b.groove_length_mm * 1e-3,
                groove_width: b.groove_width_mm * 1e-3,
                viscosity: b.viscosity_pa_s,
            },
            n_circ: self.mesh.n_circ,
            n_axial: self.mesh.n_axial,
            speed: hz_to_rad_s(self.operating.speed_hz),
            unbalance: self
                .unbalance
                .iter()
                .map(|u| UnbalanceSpec {
                    node: u.node - 1,
                    moment: u.moment_kg_m,
                })
                .collect(),
            dt: self.operating.dt_s,
            duration: self.operating.duration_s,
            discard: self.operating.discard_s,
            analysis_window: self.operating.analysis_window_s,
            measurement_nodes: self.measurement_nodes(),
            characterization: CharacterizationOptions::default(),
        }
    }
}

/// Parses `--mesh` values of the form `N` or `NxM`.
pub fn parse_mesh(text: &str) -> Result<Mesh, String> {
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|e| format!("invalid mesh size {s:?}: {e}"))
    };
    match text.split_once(['x', 'X']) {
        Some((a, b)) => Ok(Mesh {
            n_circ: parse(a)?,
            n_axial: parse(b)?,
        }),
        None => {
            let n = parse(text)?;
            Ok(Mesh {
                n_circ: n,
                n_axial: n,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowid_core::reference;

    pub(crate) const REFERENCE: &str = include_str!("../../../configs/reference_rotor.toml");

    #[test]
    fn reference_config_encodes_the_reference_system() {
        let config = RunConfig::parse(REFERENCE).unwrap();
        let sim = config.simulation();
        let expected = flowid_core::system::SimulationConfig::reference();
        assert_eq!(sim.rotor.bearing_nodes, expected.rotor.bearing_nodes);
        assert_eq!(sim.measurement_nodes, expected.measurement_nodes);
        assert_eq!(sim.unbalance, expected.unbalance);
        assert_eq!((sim.n_circ, sim.n_axial), (100, 100));
        assert!((sim.speed - expected.speed).abs() < 1e-12);
        for (a, b) in sim.rotor.elements.iter().zip(&expected.rotor.elements) {
            assert!((a.length - b.length).abs() < 1e-15 && (a.diameter - b.diameter).abs() < 1e-15);
        }
        for (a, b) in sim.rotor.discs.iter().zip(&expected.rotor.discs) {
            assert_eq!(a.node, b.node);
            assert!((a.bore_diameter - b.bore_diameter).abs() < 1e-15);
            assert!((a.outer_diameter - b.outer_diameter).abs() < 1e-15);
        }
        let g = &sim.bearing;
        let e = &expected.bearing;
        for (a, b) in [
            (g.radius, e.radius),
            (g.width, e.width),
            (g.radial_clearance, e.radial_clearance),
            (g.groove_length, e.groove_length),
            (g.groove_width, e.groove_width),
            (g.viscosity, e.viscosity),
            (g.groove_angle, e.groove_angle),
        ] {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12), "{a} vs {b}");
        }
        assert_eq!(config.threshold(), reference::threshold_flowrate());
    }

    #[test]
    fn round_trip_preserves_parameters() {
        let config = RunConfig::parse(REFERENCE).unwrap();
        let again = RunConfig::parse(&config.to_toml()).unwrap();
        assert_eq!(config, again);
        assert_eq!(config.simulation(), again.simulation());
    }

    #[test]
    fn flowrates_convert_exactly() {
        let config = RunConfig::parse(REFERENCE).unwrap();
        let q = config.supplies();
        assert_eq!(q[0] * 6e7, config.flow.q1_ml_min);
    }

    #[test]
    fn missing_section_is_named() {
        let text = REFERENCE.replace("[mesh]", "[unused_mesh]");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("unused_mesh") || err.contains("mesh"), "{err}");
        let text: String = REFERENCE
            .lines()
            .filter(|l| !l.starts_with("n_axial"))
            .collect::<Vec<_>>()
            .join("\n");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("n_axial"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let text = REFERENCE.replace("radial_clearance_um = 120.0", "radial_clearance_um = -1.0");
        match RunConfig::parse(&text) {
            Err(CliError::Validation { field, .. }) => {
                assert_eq!(field, "bearing.radial_clearance_um")
            }
            other => panic!("{other:?}"),
        }
        let text = REFERENCE.replace("\nnodes = [6, 20]", "\nnodes = [6, 40]");
        match RunConfig::parse(&text) {
            Err(CliError::Validation { field, .. }) => assert_eq!(field, "measurement.nodes[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_apply() {
        let mut config = RunConfig::parse(REFERENCE).unwrap();
        config
            .apply(&Overrides {
                mesh: Some(parse_mesh("30x20").unwrap()),
                duration_s: Some(16.0),
                seed: Some(9),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(
            config.mesh,
            Mesh {
                n_circ: 30,
                n_axial: 20
            }
        );
        assert_eq!(config.operating.duration_s, 16.0);
        assert_eq!(config.noise.unwrap().seed, 9);
        assert!(config
            .apply(&Overrides {
                duration_s: Some(11.0),
                ..Default::default()
            })
            .is_err());
        assert_eq!(
            parse_mesh("40").unwrap(),
            Mesh {
                n_circ: 40,
                n_axial: 40
            }
        );
        assert!(parse_mesh("4x").is_err());
    }

    #[test]
    fn sweep_pairs() {
        let s = Sensitivity {
            mode: SweepMode::Grid,
            start_ml_min: 273.0,
            stop_ml_min: 819.0,
            points: 3,
        };
        assert_eq!(s.pairs_ml_min().len(), 9);
        assert_eq!(s.flowrates_ml_min(), vec![273.0, 546.0, 819.0]);
        let s = Sensitivity {
            mode: SweepMode::Equal,
            ..s
        };
        assert_eq!(
            s.pairs_ml_min(),
            vec![[273.0, 273.0], [546.0, 546.0], [819.0, 819.0]]
        );
    }
}
