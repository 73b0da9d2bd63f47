//! Multi-start bounded Gauss-Newton search.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use super::{ErrorEvaluation, ErrorSystem, Evaluator, Memo, SearchConfig};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one are treated as a
/// rank deficiency of the Jacobian.
const RANK_TOLERANCE: f64 = 1e-8;

/// One Gauss-Newton update.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub next: [f64; 2],
    pub step: [f64; 2],
    pub jacobian: DMatrix<f64>,
    /// Set when the Jacobian was rank deficient and a Tikhonov-regularised
    /// step was taken instead of the plain least-squares one.
    pub regularized: bool,
}

/// Least-squares step `J S = −ε` from `q` with a central-difference Jacobian
/// of spacing `config.fd_spacing · Q_T`.
pub fn newton_step<E: Evaluator>(
    q: [f64; 2],
    errors: &[f64],
    system: &ErrorSystem<E>,
    config: &SearchConfig,
) -> Result<NewtonStep> {
    let memo = Memo::new(system, config.memo_resolution * config.threshold_flowrate);
    step_with(&memo, q, errors, config)
}

fn step_with<E: Evaluator>(
    memo: &Memo<E>,
    q: [f64; 2],
    errors: &[f64],
    config: &SearchConfig,
) -> Result<NewtonStep> {
    let h = config.fd_spacing * config.threshold_flowrate;
    let stencil = [
        [q[0] + h, q[1]],
        [q[0] - h, q[1]],
        [q[0], q[1] + h],
        [q[0], q[1] - h],
    ];
    let points: Vec<Result<ErrorEvaluation>> = if config.parallel {
        stencil.par_iter().map(|&p| memo.get(p)).collect()
    } else {
        stencil.iter().map(|&p| memo.get(p)).collect()
    };
    let points: Vec<ErrorEvaluation> = points.into_iter().collect::<Result<_>>()?;
    let m = errors.len();
    let mut j = DMatrix::zeros(m, 2);
    for col in 0..2 {
        // the memo snaps the stencil, so use the snapped spacing
        let a = memo.snap(stencil[2 * col]);
        let b = memo.snap(stencil[2 * col + 1]);
        let span = a[col] - b[col];
        for row in 0..m {
            j[(row, col)] = (points[2 * col].errors[row] - points[2 * col + 1].errors[row]) / span;
        }
    }
    let (step, regularized) = least_squares_step(&j, errors)?;
    Ok(NewtonStep {
        next: [q[0] + step[0], q[1] + step[1]],
        step,
        jacobian: j,
        regularized,
    })
}

/// Solves `J S ≈ −ε`. Uses the normal equations through the SVD; when the
/// Jacobian is rank deficient, adds Tikhonov damping `λ = 1e-6 σ_max²`.
fn least_squares_step(j: &DMatrix<f64>, errors: &[f64]) -> Result<([f64; 2], bool)> {
    if j.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite Jacobian".into()));
    }
    let rhs = -DVector::from_column_slice(errors);
    let svd = j.clone().svd(true, true);
    let s = &svd.singular_values;
    let s_max = s.max();
    if s_max == 0.0 {
        return Err(Error::Singular("Jacobian is zero".into()));
    }
    let s_min = s.min();
    if s_min > RANK_TOLERANCE * s_max {
        let x = svd
            .solve(&rhs, 0.0)
            .map_err(|e| Error::Singular(e.to_string()))?;
        return Ok(([x[0], x[1]], false));
    }
    let jt = j.transpose();
    let normal: Matrix2<f64> = (&jt * j).fixed_view::<2, 2>(0, 0).into_owned()
        + Matrix2::identity() * (1e-6 * s_max * s_max);
    let g = &jt * rhs;
    let x = normal
        .lu()
        .solve(&Vector2::new(g[0], g[1]))
        .ok_or_else(|| Error::Singular("regularised normal equations are singular".into()))?;
    Ok(([x[0], x[1]], true))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessOutcome {
    Converged,
    /// The next iterate left the bounds.
    Overshoot,
    MaxIterations,
    /// The simulator failed at a required point.
    EvaluationFailed,
    /// No descent could be found (line search exhausted or singular step).
    Stalled,
    /// Not started because an earlier guess converged.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuessRecord {
    /// Initial guess [m³/s].
    pub start: [f64; 2],
    pub initial_error: f64,
    pub iterations: usize,
    pub outcome: GuessOutcome,
}

/// A point visited by the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathPoint {
    /// Index into `IdentificationResult::guesses`.
    pub guess: usize,
    pub q: [f64; 2],
    pub total_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationResult {
    /// Identified (or best-effort) flowrates [m³/s].
    pub q: [f64; 2],
    pub total_error: f64,
    pub errors: Vec<f64>,
    pub converged: bool,
    /// Newton iterations of the final trajectory.
    pub iterations: usize,
    /// Newton iterations over all trajectories.
    pub total_iterations: usize,
    /// Guesses in the order tried (ascending initial `ε_T`), then untried ones.
    pub guesses: Vec<GuessRecord>,
    pub path: Vec<PathPoint>,
    /// Distinct simulator evaluations.
    pub evaluations: usize,
    pub regularized: bool,
    pub phi_scaled: bool,
}

/// Multi-start search: evaluates `ε_T` on the guess grid, then runs
/// Gauss-Newton from the guesses in ascending order of their initial error
/// (ties keep grid order). A trajectory stops on `ε_T < tolerance`
/// (converged), on leaving the bounds or after `max_iterations`; the search
/// then moves on to the next guess. Without convergence the best point seen
/// is returned with `converged = false`.
pub fn identify<E: Evaluator>(
    system: &ErrorSystem<E>,
    config: &SearchConfig,
) -> Result<IdentificationResult> {
    config.validate()?;
    let memo = Memo::new(system, config.memo_resolution * config.threshold_flowrate);
    let grid = config.guess_grid();
    let initial: Vec<Result<ErrorEvaluation>> = if config.parallel {
        grid.par_iter().map(|&q| memo.get(q)).collect()
    } else {
        grid.iter().map(|&q| memo.get(q)).collect()
    };
    let mut order: Vec<usize> = (0..grid.len()).collect();
    let initial_total = |i: usize| {
        initial[i]
            .as_ref()
            .map(|e| e.total)
            .unwrap_or(f64::INFINITY)
    };
    order.sort_by(|&a, &b| initial_total(a).total_cmp(&initial_total(b)));

    let mut guesses: Vec<GuessRecord> = order
        .iter()
        .map(|&i| GuessRecord {
            start: memo.snap(grid[i]),
            initial_error: initial_total(i),
            iterations: 0,
            outcome: if initial[i].is_ok() {
                GuessOutcome::Skipped
            } else {
                GuessOutcome::EvaluationFailed
            },
        })
        .collect();
    let mut path = Vec::new();
    let mut best: Option<([f64; 2], ErrorEvaluation)> = None;
    let mut regularized = false;
    let mut phi_scaled = false;
    let mut total_iterations = 0;
    let mut converged_at: Option<(usize, [f64; 2], ErrorEvaluation)> = None;

    let consider =
        |q: [f64; 2], e: &ErrorEvaluation, best: &mut Option<([f64; 2], ErrorEvaluation)>| {
            if config.in_bounds(q) && best.as_ref().is_none_or(|(_, b)| e.total < b.total) {
                *best = Some((q, e.clone()));
            }
        };

    for (g, &i) in order.iter().enumerate() {
        let Ok(start) = initial[i].clone() else {
            guesses[g].outcome = GuessOutcome::EvaluationFailed;
            continue;
        };
        let mut q = memo.snap(grid[i]);
        let mut e = start;
        phi_scaled |= e.phi_scaled;
        path.push(PathPoint {
            guess: g,
            q,
            total_error: e.total,
        });
        consider(q, &e, &mut best);
        let mut outcome = GuessOutcome::MaxIterations;
        let mut iterations = 0;
        if e.total < config.tolerance {
            outcome = GuessOutcome::Converged;
        }
        while outcome == GuessOutcome::MaxIterations && iterations < config.max_iterations {
            iterations += 1;
            let step = match step_with(&memo, q, &e.errors, config) {
                Ok(s) => s,
                Err(Error::Singular(_)) => {
                    outcome = GuessOutcome::Stalled;
                    break;
                }
                Err(_) => {
                    outcome = GuessOutcome::EvaluationFailed;
                    break;
                }
            };
            regularized |= step.regularized;
            let mut next = step.next;
            if !config.in_bounds(next) {
                // record where the search would leave the box, clamped to it
                let clamped = [
                    next[0].clamp(config.lower(), config.upper()),
                    next[1].clamp(config.lower(), config.upper()),
                ];
                if let Ok(ec) = memo.get(clamped) {
                    let c = memo.snap(clamped);
                    path.push(PathPoint {
                        guess: g,
                        q: c,
                        total_error: ec.total,
                    });
                    consider(c, &ec, &mut best);
                }
                outcome = GuessOutcome::Overshoot;
                break;
            }
            let mut trial = memo.get(next);
            if config.line_search {
                let mut scale = 1.0;
                while scale > 1.0 / 16.0
                    && trial.as_ref().map(|t| t.total >= e.total).unwrap_or(true)
                {
                    scale *= 0.5;
                    next = [q[0] + scale * step.step[0], q[1] + scale * step.step[1]];
                    trial = memo.get(next);
                }
            }
            let Ok(te) = trial else {
                outcome = GuessOutcome::EvaluationFailed;
                break;
            };
            if config.line_search && te.total >= e.total {
                outcome = GuessOutcome::Stalled;
                break;
            }
            q = memo.snap(next);
            e = te;
            phi_scaled |= e.phi_scaled;
            path.push(PathPoint {
                guess: g,
                q,
                total_error: e.total,
            });
            consider(q, &e, &mut best);
            if e.total < config.tolerance {
                outcome = GuessOutcome::Converged;
            }
        }
        total_iterations += iterations;
        guesses[g].iterations = iterations;
        guesses[g].outcome = outcome;
        if outcome == GuessOutcome::Converged {
            converged_at = Some((iterations, q, e));
            break;
        }
    }

    let evaluations = memo.evaluations();
    if let Some((iterations, q, e)) = converged_at {
        return Ok(IdentificationResult {
            q,
            total_error: e.total,
            errors: e.errors,
            converged: true,
            iterations,
            total_iterations,
            guesses,
            path,
            evaluations,
            regularized,
            phi_scaled,
        });
    }
    let Some((q, e)) = best else {
        return Err(Error::InsufficientData(
            "no guess could be evaluated".into(),
        ));
    };
    Ok(IdentificationResult {
        q,
        total_error: e.total,
        errors: e.errors,
        converged: false,
        iterations: guesses
            .iter()
            .rev()
            .find(|g| g.outcome != GuessOutcome::Skipped)
            .map_or(0, |g| g.iterations),
        total_iterations,
        guesses,
        path,
        evaluations,
        regularized,
        phi_scaled,
    })
}
