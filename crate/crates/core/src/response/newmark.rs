//! Newmark average-acceleration integration of
//! `M q̈ + (C + Ω G) q̇ + K q = F_g + F_u(t)`.

use nalgebra::{DMatrix, DVector};

use super::TransientResponse;
use crate::error::{Error, Result};
use crate::rotor::{dof, unbalance_force, RotorModel, UnbalanceSpec};

const GAMMA: f64 = 0.5;
const BETA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// Zero displacement and velocity.
    Rest,
    /// Static deflection under gravity, at rest.
    StaticEquilibrium,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOptions {
    pub dt: f64,
    /// Total simulated time [s].
    pub duration: f64,
    /// Initial time excluded from the record [s].
    pub discard: f64,
    /// Nodes to record; all nodes when `None`.
    pub recorded_nodes: Option<Vec<usize>>,
    pub gravity: bool,
    pub initial: InitialState,
    /// Any lateral displacement beyond this magnitude aborts the run [m].
    pub divergence_limit: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            duration: 15.0,
            discard: 10.0,
            recorded_nodes: None,
            gravity: true,
            initial: InitialState::StaticEquilibrium,
            divergence_limit: 1e-2,
        }
    }
}

impl IntegrationOptions {
    fn validate(&self, model: &RotorModel) -> Result<()> {
        if !(self.dt > 0.0
            && self.duration > 0.0
            && self.discard >= 0.0
            && self.discard < self.duration)
        {
            return Err(Error::InvalidInput(format!(
                "need dt > 0 and 0 ≤ discard < duration, got dt {}, discard {}, duration {}",
                self.dt, self.discard, self.duration
            )));
        }
        if !(self.divergence_limit > 0.0) {
            return Err(Error::InvalidInput(
                "divergence limit must be positive".into(),
            ));
        }
        if let Some(nodes) = &self.recorded_nodes {
            if let Some(n) = nodes.iter().find(|&&n| n >= model.node_count) {
                return Err(Error::Topology(format!("recorded node {n} does not exist")));
            }
        }
        Ok(())
    }
}

/// Integrates the equation of motion with the unconditionally stable
/// trapezoidal Newmark scheme (γ = 1/2, β = 1/4) and records the lateral
/// displacements of the requested nodes after the discard window.
pub fn integrate_response(
    model: &RotorModel,
    unbalance: &[UnbalanceSpec],
    speed: f64,
    options: &IntegrationOptions,
) -> Result<TransientResponse> {
    options.validate(model)?;
    if let Some(u) = unbalance.iter().find(|u| u.node >= model.node_count) {
        return Err(Error::Topology(format!(
            "unbalance node {} does not exist",
            u.node
        )));
    }
    let n = model.dofs();
    let dt = options.dt;
    let steps = (options.duration / dt).round() as usize;
    let first_recorded = (options.discard / dt).round() as usize;
    let nodes: Vec<usize> = options
        .recorded_nodes
        .clone()
        .unwrap_or_else(|| (0..model.node_count).collect());

    let mass = &model.mass;
    let stiffness = &model.stiffness;
    let damping = &model.damping + &model.gyroscopic * speed;
    let gravity = if options.gravity {
        model.gravity.clone()
    } else {
        DVector::zeros(n)
    };

    let load = |t: f64| -> DVector<f64> {
        let mut f = gravity.clone();
        for u in unbalance {
            let fu = unbalance_force(u, speed, t);
            f[dof(u.node, 0)] += fu[0];
            f[dof(u.node, 1)] += fu[1];
        }
        f
    };

    let mut q = match options.initial {
        InitialState::Rest => DVector::zeros(n),
        InitialState::StaticEquilibrium => model.static_response(&gravity)?,
    };
    let mut qd = DVector::<f64>::zeros(n);
    let mass_lu = mass.clone().lu();
    let mut qdd = mass_lu
        .solve(&(load(0.0) - &damping * &qd - stiffness * &q))
        .ok_or_else(|| Error::Singular("mass matrix is singular".into()))?;

    let a0 = 1.0 / (BETA * dt * dt);
    let a1 = GAMMA / (BETA * dt);
    let effective: DMatrix<f64> = stiffness + &damping * a1 + mass * a0;
    let effective = effective.lu();
    if !effective.is_invertible() {
        return Err(Error::Singular(
            "effective Newmark matrix is singular".into(),
        ));
    }
    let (m_u, m_v, m_a) = (a0, 1.0 / (BETA * dt), 1.0 / (2.0 * BETA) - 1.0);
    let (c_u, c_v, c_a) = (a1, GAMMA / BETA - 1.0, dt * (GAMMA / (2.0 * BETA) - 1.0));

    let kept = steps + 1 - first_recorded.min(steps + 1);
    let mut time = Vec::with_capacity(kept);
    let mut v = vec![Vec::with_capacity(kept); nodes.len()];
    let mut w = vec![Vec::with_capacity(kept); nodes.len()];
    let mut record = |k: usize, q: &DVector<f64>| {
        if k >= first_recorded {
            time.push(k as f64 * dt);
            for (c, &node) in nodes.iter().enumerate() {
                v[c].push(q[dof(node, 0)]);
                w[c].push(q[dof(node, 1)]);
            }
        }
    };
    record(0, &q);

    for k in 1..=steps {
        let t = k as f64 * dt;
        let rhs = load(t)
            + mass * (&q * m_u + &qd * m_v + &qdd * m_a)
            + &damping * (&q * c_u + &qd * c_v + &qdd * c_a);
        let q_next = effective
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("Newmark solve failed".into()))?;
        let qdd_next = (&q_next - &q) * a0 - &qd * m_v - &qdd * m_a;
        qd += (&qdd * (1.0 - GAMMA) + &qdd_next * GAMMA) * dt;
        q = q_next;
        qdd = qdd_next;
        if k % 64 == 0 || k == steps {
            let amplitude = (0..model.node_count)
                .map(|node| q[dof(node, 0)].hypot(q[dof(node, 1)]))
                .fold(0.0, f64::max);
            if !(amplitude <= options.divergence_limit) {
                return Err(Error::IntegrationDiverged { time: t, amplitude });
            }
        }
        record(k, &q);
    }

    Ok(TransientResponse {
        time,
        nodes,
        v,
        w,
        speed,
        dt,
        duration: steps as f64 * dt,
        discarded: first_recorded as f64 * dt,
    })
}
