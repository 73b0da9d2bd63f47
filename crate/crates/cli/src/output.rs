//! Result files. CSV files start with `#` comment lines carrying the run
//! metadata, followed by a standard RFC-4180 table; JSON files embed the same
//! metadata under `metadata`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use flowid_core::bearing::BearingCoefficients;
use flowid_core::response::DirectionalResponse;
use flowid_core::system::Simulation;
use flowid_core::units::m3_s_to_ml_min;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the canonical configuration after command-line overrides.
    pub config_sha256: String,
    pub seeds: Vec<u64>,
}

impl Metadata {
    pub fn new(config: &RunConfig, seeds: Vec<u64>) -> Self {
        Self {
            tool: env!("CARGO_BIN_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_hash(config),
            seeds,
        }
    }

    fn header(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        format!(
            "# tool={} version={}\n# config_sha256={}\n# seeds={}\n",
            self.tool,
            self.version,
            self.config_sha256,
            seeds.join(" ")
        )
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    hex::encode(Sha256::digest(config.to_toml().as_bytes()))
}

/// Creates a file and writes the metadata comment lines.
pub fn create_csv(path: &Path, metadata: &Metadata) -> Result<BufWriter<File>, CliError> {
    let mut out = BufWriter::new(File::create(path).map_err(CliError::io(path))?);
    out.write_all(metadata.header().as_bytes())
        .map_err(CliError::io(path))?;
    Ok(out)
}

/// CSV table writer after the metadata header.
pub fn csv_writer(
    path: &Path,
    metadata: &Metadata,
) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    Ok(csv::Writer::from_writer(create_csv(path, metadata)?))
}

pub fn finish_csv(mut writer: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), CliError> {
    writer.flush().map_err(CliError::io(path))
}

pub fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Internal(format!("{}: {e}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BearingSummary {
    pub node: usize,
    pub supply_ml_min: f64,
    pub equilibrium_m: [f64; 2],
    pub eccentricity_ratio: f64,
    /// `[[K_XX, K_XY], [K_YX, K_YY]]`.
    pub stiffness_n_m: [[f64; 2]; 2],
    /// `[[C_XX, C_XY], [C_YX, C_YY]]`.
    pub damping_n_s_m: [[f64; 2]; 2],
}

impl BearingSummary {
    fn new(node: usize, c: &BearingCoefficients, clearance: f64) -> Self {
        Self {
            node,
            supply_ml_min: m3_s_to_ml_min(c.supply),
            equilibrium_m: c.equilibrium,
            eccentricity_ratio: c.eccentricity() / clearance,
            stiffness_n_m: rows(&c.stiffness),
            damping_n_s_m: rows(&c.damping),
        }
    }
}

fn rows<M: std::ops::Index<(usize, usize), Output = f64>>(a: &M) -> [[f64; 2]; 2] {
    [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    /// One-based node number.
    pub node: usize,
    pub forward_amplitude_m: f64,
    pub forward_phase_rad: f64,
    pub backward_amplitude_m: f64,
    pub backward_phase_rad: f64,
    /// Forward-to-backward ratio; floored backward amplitude when `fb_floored`.
    pub fb: f64,
    pub fb_floored: bool,
    /// Orbit angle.
    pub phi_rad: f64,
}

impl NodeSummary {
    pub fn new(node: usize, d: &DirectionalResponse) -> Self {
        let (fb, fb_floored) = d.fb_floored();
        Self {
            node: node + 1,
            forward_amplitude_m: d.forward_amplitude,
            forward_phase_rad: d.forward_phase,
            backward_amplitude_m: d.backward_amplitude,
            backward_phase_rad: d.backward_phase,
            fb,
            fb_floored,
            phi_rad: flowid_core::response::circular_mean(d.forward_phase, d.backward_phase),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub snr_db: f64,
    pub seed: u64,
}

/// Contents of `summary.json`; also accepted as an identification reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub metadata: Metadata,
    pub speed_hz: f64,
    pub supplies_ml_min: [f64; 2],
    #[serde(default)]
    pub noise: Option<NoiseSummary>,
    pub bearings: Vec<BearingSummary>,
    pub nodes: Vec<NodeSummary>,
}

impl SimulationSummary {
    pub fn new(config: &RunConfig, metadata: Metadata, run: &Simulation) -> Self {
        let sim = config.simulation();
        Self {
            metadata,
            speed_hz: config.operating.speed_hz,
            supplies_ml_min: [
                m3_s_to_ml_min(run.supplies[0]),
                m3_s_to_ml_min(run.supplies[1]),
            ],
            noise: config.noise.map(|n| NoiseSummary {
                snr_db: n.snr_db,
                seed: n.seed,
            }),
            bearings: run
                .bearings
                .iter()
                .zip(&config.rotor.bearing_nodes)
                .map(|(c, &node)| BearingSummary::new(node, c, sim.bearing.radial_clearance))
                .collect(),
            nodes: run
                .measurement
                .nodes
                .iter()
                .zip(&run.measurement.directional)
                .map(|(&n, d)| NodeSummary::new(n, d))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation {
            field: "identification.reference_file".into(),
            message: format!("{}: {e}", path.display()),
        })
    }

    pub fn node(&self, node: usize) -> Option<&NodeSummary> {
        self.nodes.iter().find(|n| n.node == node)
    }
}
