//! Unbalance response in time and its full-spectrum directional components.
//!
//! The lateral displacements of a node form the complex signal `Z = V + iW`.
//! Its spectrum separates forward whirl (`+Ω`) from backward whirl (`−Ω`):
//! an elliptical orbit `V = a cos Ωt`, `W = b sin Ωt` is
//! `Z = (a+b)/2 · e^{iΩt} + (a−b)/2 · e^{−iΩt}`.

mod directional;
mod newmark;
mod noise;

pub use directional::{
    analysis_window, circular_mean, directional_components, response_parameters, spectrum,
    write_spectrum_csv, DirectionalResponse, ResponseParameters, SpectrumLine, RATIO_FLOOR,
};
pub use newmark::{integrate_response, InitialState, IntegrationOptions};
pub use noise::{add_measurement_noise, channel_power};

use std::io::Write;

use crate::error::{Error, Result};

/// Recorded lateral displacement histories after the discarded transient.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientResponse {
    /// Absolute sample times [s], uniformly spaced by `dt`.
    pub time: Vec<f64>,
    /// Zero-based node indices of the recorded histories.
    pub nodes: Vec<usize>,
    /// Horizontal displacement V(t) per recorded node [m].
    pub v: Vec<Vec<f64>>,
    /// Vertical displacement W(t) per recorded node [m].
    pub w: Vec<Vec<f64>>,
    /// Rotational speed Ω [rad/s].
    pub speed: f64,
    pub dt: f64,
    /// Simulated time including the discarded transient [s].
    pub duration: f64,
    /// Discarded initial time [s].
    pub discarded: f64,
}

impl TransientResponse {
    pub fn samples(&self) -> usize {
        self.time.len()
    }

    /// Position of `node` among the recorded histories.
    pub fn channel(&self, node: usize) -> Result<usize> {
        self.nodes
            .iter()
            .position(|&n| n == node)
            .ok_or_else(|| Error::InvalidInput(format!("node {node} was not recorded")))
    }

    /// Directional components of `node` over the longest integer-period window
    /// not exceeding `window` seconds (the whole record when `None`).
    pub fn directional(&self, node: usize, window: Option<f64>) -> Result<DirectionalResponse> {
        let (v, w) = self.window(node, window)?;
        directional_components(v, w, self.speed, self.dt)
    }

    /// Full spectrum of `node` over the same integer-period window.
    pub fn spectrum(&self, node: usize, window: Option<f64>) -> Result<Vec<SpectrumLine>> {
        let (v, w) = self.window(node, window)?;
        let n = analysis_window(v.len(), self.speed, self.dt)?;
        Ok(spectrum(&v[v.len() - n..], &w[w.len() - n..], self.dt))
    }

    fn window(&self, node: usize, window: Option<f64>) -> Result<(&[f64], &[f64])> {
        let c = self.channel(node)?;
        let len = match window {
            // allow for the closing sample of a record that includes both ends
            Some(w) => ((w / self.dt).round() as usize + 1).min(self.samples()),
            None => self.samples(),
        };
        let start = self.samples() - len;
        Ok((&self.v[c][start..], &self.w[c][start..]))
    }

    /// Largest relative change of the whirl phasors between consecutive
    /// blocks of whole revolutions over the last `revolutions` revolutions.
    ///
    /// Blocks span the fewest revolutions that hold an integer number of
    /// samples, so each block is free of spectral leakage.
    pub fn steady_state_drift(&self, node: usize, revolutions: usize) -> Result<f64> {
        let c = self.channel(node)?;
        let f = self.speed.abs() / (2.0 * std::f64::consts::PI);
        let per_rev = 1.0 / (f * self.dt);
        let block_revs = (1..=1000)
            .find(|&r| {
                let s = r as f64 * per_rev;
                (s - s.round()).abs() < 1e-6 * s
            })
            .unwrap_or(1);
        let block = (block_revs as f64 * per_rev).round() as usize;
        let span = ((revolutions.max(2 * block_revs)) as f64 * per_rev).round() as usize;
        let blocks = (span / block).max(2);
        if blocks * block > self.samples() {
            return Err(Error::InsufficientData(format!(
                "drift needs {} samples, {} recorded",
                blocks * block,
                self.samples()
            )));
        }
        let start = self.samples() - blocks * block;
        let mut phasors = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let s = start + b * block;
            let d = directional::phasors(
                &self.v[c][s..s + block],
                &self.w[c][s..s + block],
                self.speed,
                self.dt,
            );
            phasors.push(d);
        }
        let scale = phasors
            .iter()
            .map(|(p, m)| p.norm().max(m.norm()))
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(0.0);
        }
        let mut drift = 0.0f64;
        for pair in phasors.windows(2) {
            // block starts differ by whole revolutions, so phases are comparable
            let d = (pair[1].0 - pair[0].0)
                .norm()
                .max((pair[1].1 - pair[0].1).norm());
            drift = drift.max(d / scale);
        }
        Ok(drift)
    }
}

/// Writes `t,node,V,W` rows; node numbers are one-based.
pub fn write_response_csv<W: Write>(
    mut out: W,
    response: &TransientResponse,
) -> std::io::Result<()> {
    writeln!(out, "t,node,V,W")?;
    for (c, node) in response.nodes.iter().enumerate() {
        for (k, t) in response.time.iter().enumerate() {
            writeln!(
                out,
                "{:.6},{},{:e},{:e}",
                t,
                node + 1,
                response.v[c][k],
                response.w[c][k]
            )?;
        }
    }
    Ok(())
}
