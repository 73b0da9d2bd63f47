//! The full simulation chain: supply flowrates → bearing equilibria and
//! coefficients → rotor unbalance response → directional components at the
//! measurement nodes.

use rayon::prelude::*;

use crate::bearing::{characterize, BearingCoefficients, CharacterizationOptions};
use crate::error::{Error, Result};
use crate::lubrication::{BearingGeometry, FilmGrid};
use crate::reference;
use crate::response::{
    add_measurement_noise, integrate_response, response_parameters, DirectionalResponse,
    InitialState, IntegrationOptions, ResponseParameters, TransientResponse,
};
use crate::rotor::{assemble_rotor, attach_bearings, RotorDescription, RotorModel, UnbalanceSpec};

/// Everything needed to turn a pair of supply flowrates into a response.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub rotor: RotorDescription,
    /// Geometry shared by both bearings.
    pub bearing: BearingGeometry,
    pub n_circ: usize,
    pub n_axial: usize,
    /// Rotational speed Ω [rad/s].
    pub speed: f64,
    pub unbalance: Vec<UnbalanceSpec>,
    pub dt: f64,
    /// Simulated time [s].
    pub duration: f64,
    /// Transient excluded from the record [s].
    pub discard: f64,
    /// Length of the spectral analysis window at the end of the record [s].
    pub analysis_window: f64,
    /// Zero-based nodes whose response parameters are reported.
    pub measurement_nodes: Vec<usize>,
    pub characterization: CharacterizationOptions,
}

impl SimulationConfig {
    /// The reference system at full fidelity: 100×100 film mesh, 15 s
    /// simulated with the first 10 s discarded, 5 s analysis window.
    pub fn reference() -> Self {
        Self {
            rotor: reference::rotor_description(),
            bearing: reference::bearing_geometry(),
            n_circ: 100,
            n_axial: 100,
            speed: reference::operating_speed(),
            unbalance: vec![reference::unbalance()],
            dt: 1e-4,
            duration: 15.0,
            discard: 10.0,
            analysis_window: 5.0,
            measurement_nodes: reference::BEARING_NODES.to_vec(),
            characterization: CharacterizationOptions::default(),
        }
    }

    /// Reduced fidelity for quick studies: 30×30 mesh, 4 s simulated, last 2 s analysed.
    pub fn desk_scale() -> Self {
        Self {
            n_circ: 30,
            n_axial: 30,
            duration: 4.0,
            discard: 2.0,
            analysis_window: 2.0,
            ..Self::reference()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rotor.validate()?;
        self.bearing.validate()?;
        if self.rotor.bearing_nodes.len() != 2 {
            return Err(Error::Topology(format!(
                "the system needs exactly two bearings, got {}",
                self.rotor.bearing_nodes.len()
            )));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "speed must be positive, got {}",
                self.speed
            )));
        }
        if !(self.analysis_window > 0.0
            && self.analysis_window <= self.duration - self.discard + 1e-12)
        {
            return Err(Error::InvalidInput(format!(
                "analysis window {} s does not fit in the recorded {} s",
                self.analysis_window,
                self.duration - self.discard
            )));
        }
        if self.measurement_nodes.is_empty() {
            return Err(Error::InvalidInput("no measurement nodes".into()));
        }
        let nodes = self.rotor.node_count();
        if let Some(n) = self
            .measurement_nodes
            .iter()
            .chain(self.unbalance.iter().map(|u| &u.node))
            .find(|&&n| n >= nodes)
        {
            return Err(Error::Topology(format!("node {n} does not exist")));
        }
        Ok(())
    }

    fn integration(&self) -> IntegrationOptions {
        IntegrationOptions {
            dt: self.dt,
            duration: self.duration,
            discard: self.discard,
            recorded_nodes: Some(self.measurement_nodes.clone()),
            gravity: true,
            initial: InitialState::StaticEquilibrium,
            divergence_limit: 10.0 * self.bearing.radial_clearance,
        }
    }
}

/// Measurement noise applied to the displacement histories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

/// Directional components at the measurement nodes, in configuration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub nodes: Vec<usize>,
    pub directional: Vec<DirectionalResponse>,
}

impl Measurement {
    /// fb and φ per node.
    pub fn parameters(&self) -> Result<Vec<ResponseParameters>> {
        self.directional.iter().map(response_parameters).collect()
    }

    pub fn at(&self, node: usize) -> Option<&DirectionalResponse> {
        self.nodes
            .iter()
            .position(|&n| n == node)
            .map(|i| &self.directional[i])
    }
}

/// One run of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub supplies: [f64; 2],
    pub bearings: [BearingCoefficients; 2],
    pub response: TransientResponse,
    pub measurement: Measurement,
}

/// Simulator with the unsupported rotor assembled once.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimulationConfig,
    rotor: RotorModel,
    grid: FilmGrid,
}

impl Simulator {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let rotor = assemble_rotor(&config.rotor)?;
        let grid = FilmGrid::new(&config.bearing, config.n_circ, config.n_axial)?;
        Ok(Self {
            config,
            rotor,
            grid,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn rotor(&self) -> &RotorModel {
        &self.rotor
    }

    /// Static load on each bearing: half the rotor weight, downwards.
    pub fn bearing_load(&self) -> [f64; 2] {
        [0.0, -0.5 * self.rotor.total_weight()]
    }

    /// Equilibrium and coefficients of one bearing at supply `q` [m³/s].
    pub fn characterize(&self, q: f64) -> Result<BearingCoefficients> {
        characterize(
            &self.config.bearing,
            &self.grid,
            q,
            self.config.speed,
            self.bearing_load(),
            &self.config.characterization,
        )
    }

    /// Characterises both bearings, once when the supplies are equal.
    pub fn characterize_pair(&self, q1: f64, q2: f64) -> Result<[BearingCoefficients; 2]> {
        if q1 == q2 {
            let c = self.characterize(q1)?;
            return Ok([c.clone(), c]);
        }
        let (a, b) = rayon::join(|| self.characterize(q1), || self.characterize(q2));
        Ok([a?, b?])
    }

    /// Rotor with both bearings attached.
    pub fn supported_rotor(&self, bearings: &[BearingCoefficients; 2]) -> Result<RotorModel> {
        let nodes = &self.config.rotor.bearing_nodes;
        attach_bearings(
            &self.rotor,
            &[(nodes[0], &bearings[0]), (nodes[1], &bearings[1])],
        )
    }

    /// Runs the chain at supplies `(q1, q2)` [m³/s] with optional noise.
    pub fn simulate(&self, q1: f64, q2: f64, noise: Option<NoiseSpec>) -> Result<Simulation> {
        let wrap = |e: Error| Error::Evaluation {
            q1,
            q2,
            source: Box::new(e),
        };
        let bearings = self.characterize_pair(q1, q2).map_err(wrap)?;
        let model = self.supported_rotor(&bearings).map_err(wrap)?;
        let clean = integrate_response(
            &model,
            &self.config.unbalance,
            self.config.speed,
            &self.config.integration(),
        )
        .map_err(wrap)?;
        let response = match noise {
            Some(n) => add_measurement_noise(&clean, n.snr_db, n.seed),
            None => clean,
        };
        let directional = self
            .config
            .measurement_nodes
            .iter()
            .map(|&node| response.directional(node, Some(self.config.analysis_window)))
            .collect::<Result<Vec<_>>>()
            .map_err(wrap)?;
        let measurement = Measurement {
            nodes: self.config.measurement_nodes.clone(),
            directional,
        };
        Ok(Simulation {
            supplies: [q1, q2],
            bearings,
            response,
            measurement,
        })
    }

    /// Noise-free response parameters at the measurement nodes.
    pub fn measure(&self, q1: f64, q2: f64) -> Result<Measurement> {
        self.simulate(q1, q2, None).map(|s| s.measurement)
    }

    /// Equal-supply sweep evaluated in parallel.
    pub fn sweep(&self, pairs: &[(f64, f64)]) -> Vec<Result<Measurement>> {
        pairs
            .par_iter()
            .map(|&(q1, q2)| self.measure(q1, q2))
            .collect()
    }
}
