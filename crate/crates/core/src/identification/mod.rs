//! Identification of the two supply flowrates from response parameters.
//!
//! For each selected response parameter `f` the relative error between the
//! simulated and the measured value is
//!
//! ```text
//! ε_i(Q₁, Q₂) = (f_s,i − f_m,i) / f_m,i
//! ```
//!
//! and the flowrates solve `ε(Q₁, Q₂) = 0` in the least-squares sense with a
//! bounded, multi-start Gauss-Newton iteration. The total error is
//! `ε_T = Σ |ε_i|`.

mod search;

pub use search::{
    identify, newton_step, GuessOutcome, GuessRecord, IdentificationResult, NewtonStep, PathPoint,
};

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lubrication::wrap_angle;
use crate::reference;
use crate::system::{Measurement, Simulator};

/// Below this measured orbit angle magnitude [rad] the relative φ error is
/// ill-posed and the wrapped difference is scaled by π instead.
pub const PHI_SCALE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    /// Forward-to-backward amplitude ratio.
    Fb,
    /// Orbit angle.
    Phi,
}

/// A response parameter at a measurement node (zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selector {
    pub parameter: Parameter,
    pub node: usize,
}

impl Selector {
    /// fb and φ at both nodes: `[fb₁, fb₂, φ₁, φ₂]`.
    pub fn all(nodes: [usize; 2]) -> Vec<Selector> {
        vec![
            Selector {
                parameter: Parameter::Fb,
                node: nodes[0],
            },
            Selector {
                parameter: Parameter::Fb,
                node: nodes[1],
            },
            Selector {
                parameter: Parameter::Phi,
                node: nodes[0],
            },
            Selector {
                parameter: Parameter::Phi,
                node: nodes[1],
            },
        ]
    }

    /// Reads the selected values from a measurement.
    pub fn extract(selectors: &[Selector], measurement: &Measurement) -> Result<Vec<f64>> {
        let params = measurement.parameters()?;
        selectors
            .iter()
            .map(|s| {
                let i = measurement
                    .nodes
                    .iter()
                    .position(|&n| n == s.node)
                    .ok_or_else(|| {
                        Error::InvalidInput(format!("node {} is not a measurement node", s.node))
                    })?;
                Ok(match s.parameter {
                    Parameter::Fb => params[i].fb,
                    Parameter::Phi => params[i].phi,
                })
            })
            .collect()
    }
}

/// Maps a flowrate pair to simulated response parameters.
pub trait Evaluator: Sync {
    fn evaluate(&self, q: [f64; 2]) -> Result<Vec<f64>>;
}

impl<F> Evaluator for F
where
    F: Fn([f64; 2]) -> Result<Vec<f64>> + Sync,
{
    fn evaluate(&self, q: [f64; 2]) -> Result<Vec<f64>> {
        self(q)
    }
}

/// The simulation chain as an evaluator.
pub struct SimulatorEvaluator<'a> {
    pub simulator: &'a Simulator,
    pub selectors: Vec<Selector>,
}

impl Evaluator for SimulatorEvaluator<'_> {
    fn evaluate(&self, q: [f64; 2]) -> Result<Vec<f64>> {
        let m = self.simulator.measure(q[0], q[1])?;
        Selector::extract(&self.selectors, &m).map_err(|e| Error::Evaluation {
            q1: q[0],
            q2: q[1],
            source: Box::new(e),
        })
    }
}

/// Measured values and the kinds of the error functions built from them.
pub struct ErrorSystem<E> {
    pub parameters: Vec<Parameter>,
    pub measured: Vec<f64>,
    pub evaluator: E,
}

/// Error vector at a point with its total.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEvaluation {
    pub errors: Vec<f64>,
    /// `Σ |ε_i|`.
    pub total: f64,
    /// Set when a φ error was scaled by π because `|φ_m|` is small.
    pub phi_scaled: bool,
}

impl<E: Evaluator> ErrorSystem<E> {
    pub fn new(parameters: Vec<Parameter>, measured: Vec<f64>, evaluator: E) -> Result<Self> {
        if parameters.len() != measured.len() {
            return Err(Error::InvalidInput(
                "one measured value per error function is required".into(),
            ));
        }
        if parameters.len() < 2 {
            return Err(Error::InvalidInput(
                "at least two error functions are needed for two flowrates".into(),
            ));
        }
        if let Some(i) = parameters
            .iter()
            .zip(&measured)
            .position(|(p, m)| *p == Parameter::Fb && !(m.abs() > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "measured fb #{i} must be non-zero"
            )));
        }
        Ok(Self {
            parameters,
            measured,
            evaluator,
        })
    }

    /// Relative errors from simulated values.
    pub fn errors_from(&self, simulated: &[f64]) -> Result<ErrorEvaluation> {
        if simulated.len() != self.measured.len() {
            return Err(Error::InvalidInput(
                "simulated and measured parameter counts differ".into(),
            ));
        }
        let mut phi_scaled = false;
        let errors: Vec<f64> = self
            .parameters
            .iter()
            .zip(simulated.iter().zip(&self.measured))
            .map(|(p, (&s, &m))| match p {
                Parameter::Fb => (s - m) / m,
                Parameter::Phi => {
                    let d = orientation_difference(s, m);
                    if m.abs() < PHI_SCALE_THRESHOLD {
                        phi_scaled = true;
                        d / PI
                    } else {
                        d / m.abs()
                    }
                }
            })
            .collect();
        let total = errors.iter().map(|e| e.abs()).sum();
        Ok(ErrorEvaluation {
            errors,
            total,
            phi_scaled,
        })
    }

    /// `ε(Q₁, Q₂)`.
    pub fn error_vector(&self, q: [f64; 2]) -> Result<ErrorEvaluation> {
        let s = self.evaluator.evaluate(q)?;
        self.errors_from(&s)
    }
}

/// Difference of two orbit angles. The orbit angle is an orientation and is
/// defined modulo π, so the difference is reduced to (−π/2, π/2].
pub fn orientation_difference(a: f64, b: f64) -> f64 {
    0.5 * wrap_angle(2.0 * (a - b))
}

/// Bounded multi-start search settings. Flowrates in m³/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Threshold flowrate Q_T used to scale the settings below.
    pub threshold_flowrate: f64,
    /// Search bounds as fractions of Q_T.
    pub bounds: [f64; 2],
    /// Initial guesses per bearing as fractions of Q_T; the grid is their product.
    pub guesses: Vec<f64>,
    pub max_iterations: usize,
    /// Central-difference spacing as a fraction of Q_T.
    pub fd_spacing: f64,
    /// Convergence when `ε_T` falls below this value.
    pub tolerance: f64,
    /// Simulator results are memoised on flowrates snapped to this fraction of Q_T.
    pub memo_resolution: f64,
    /// Optional step halving until `ε_T` decreases.
    pub line_search: bool,
    /// Evaluate guesses and Jacobian stencils concurrently.
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            threshold_flowrate: reference::threshold_flowrate(),
            bounds: [0.25, 2.0],
            guesses: vec![0.7, 1.0, 1.3],
            max_iterations: 15,
            fd_spacing: 0.02,
            tolerance: 1e-2,
            memo_resolution: 1e-4,
            line_search: false,
            parallel: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.bounds;
        if !(self.threshold_flowrate > 0.0 && lo > 0.0 && lo < hi) {
            return Err(Error::InvalidInput(format!(
                "invalid search bounds [{lo}, {hi}]·Q_T"
            )));
        }
        if self.guesses.is_empty() || self.guesses.iter().any(|g| !(*g >= lo && *g <= hi)) {
            return Err(Error::InvalidInput(
                "initial guesses must lie inside the bounds".into(),
            ));
        }
        if self.max_iterations == 0
            || !(self.fd_spacing > 0.0)
            || !(self.tolerance > 0.0)
            || !(self.memo_resolution > 0.0)
        {
            return Err(Error::InvalidInput(
                "iterations, spacing, tolerance and memo resolution must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn lower(&self) -> f64 {
        self.bounds[0] * self.threshold_flowrate
    }

    pub fn upper(&self) -> f64 {
        self.bounds[1] * self.threshold_flowrate
    }

    pub fn in_bounds(&self, q: [f64; 2]) -> bool {
        let tol = 1e-12 * self.threshold_flowrate;
        q.iter()
            .all(|&v| v >= self.lower() - tol && v <= self.upper() + tol)
    }

    /// Guess grid in row-major order (bearing 1 outer).
    pub fn guess_grid(&self) -> Vec<[f64; 2]> {
        let qt = self.threshold_flowrate;
        self.guesses
            .iter()
            .flat_map(|&a| self.guesses.iter().map(move |&b| [a * qt, b * qt]))
            .collect()
    }

    /// Upper bound on simulator evaluations of one identification.
    pub fn evaluation_budget(&self) -> usize {
        let guesses = self.guesses.len().pow(2);
        guesses * self.max_iterations * 5 + guesses
    }
}

/// Memoised, counted evaluations snapped to a grid.
pub(crate) struct Memo<'a, E> {
    system: &'a ErrorSystem<E>,
    step: f64,
    cache: Mutex<HashMap<(i64, i64), Result<ErrorEvaluation>>>,
    evaluations: AtomicUsize,
}

impl<'a, E: Evaluator> Memo<'a, E> {
    pub(crate) fn new(system: &'a ErrorSystem<E>, step: f64) -> Self {
        Self {
            system,
            step,
            cache: Mutex::new(HashMap::new()),
            evaluations: AtomicUsize::new(0),
        }
    }

    pub(crate) fn snap(&self, q: [f64; 2]) -> [f64; 2] {
        let k = self.key(q);
        [k.0 as f64 * self.step, k.1 as f64 * self.step]
    }

    fn key(&self, q: [f64; 2]) -> (i64, i64) {
        (
            (q[0] / self.step).round() as i64,
            (q[1] / self.step).round() as i64,
        )
    }

    pub(crate) fn get(&self, q: [f64; 2]) -> Result<ErrorEvaluation> {
        let key = self.key(q);
        if let Some(hit) = self.cache.lock().expect("memo poisoned").get(&key) {
            return hit.clone();
        }
        let snapped = self.snap(q);
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let value = self.system.error_vector(snapped);
        self.cache
            .lock()
            .expect("memo poisoned")
            .entry(key)
            .or_insert(value)
            .clone()
    }

    pub(crate) fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }
}

/// Relative errors `(Q_identified − Q_ref)/Q_ref` per bearing.
pub fn relative_errors(identified: [f64; 2], reference: [f64; 2]) -> [f64; 2] {
    [
        (identified[0] - reference[0]) / reference[0],
        (identified[1] - reference[1]) / reference[1],
    ]
}
