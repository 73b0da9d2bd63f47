//! The four subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use flowid_core::bearing::write_coefficients_csv;
use flowid_core::identification::{
    identify as run_search, relative_errors, ErrorSystem, GuessOutcome, IdentificationResult,
    Parameter, Selector, SimulatorEvaluator,
};
use flowid_core::response::{response_parameters, write_response_csv, write_spectrum_csv};
use flowid_core::system::{NoiseSpec, Simulator};
use flowid_core::units::{m3_s_to_ml_min, ml_min_to_m3_s};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{
    create_csv, csv_error, csv_writer, finish_csv, write_json, Metadata, SimulationSummary,
};

fn output_dir(config: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = config.output.directory.clone();
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    Ok(dir)
}

fn noise_seeds(noise: Option<NoiseSpec>) -> Vec<u64> {
    noise.map(|n| vec![n.seed]).unwrap_or_default()
}

/// Transient response, spectra, bearing coefficients and a summary at the
/// configured supply flowrates.
pub fn simulate(config: &RunConfig) -> Result<SimulationSummary, CliError> {
    let dir = output_dir(config)?;
    let simulator = Simulator::new(config.simulation())?;
    let [q1, q2] = config.supplies();
    let noise = config.noise_spec();
    info!(
        "simulating Q = ({}, {}) ml/min",
        config.flow.q1_ml_min, config.flow.q2_ml_min
    );
    let run = simulator.simulate(q1, q2, noise)?;
    let metadata = Metadata::new(config, noise_seeds(noise));

    let path = dir.join("response.csv");
    let mut out = create_csv(&path, &metadata)?;
    write_response_csv(&mut out, &run.response).map_err(CliError::io(&path))?;

    for &node in &run.measurement.nodes {
        let path = dir.join(format!("spectrum_node{}.csv", node + 1));
        let lines = run
            .response
            .spectrum(node, Some(config.operating.analysis_window_s))?;
        let mut out = create_csv(&path, &metadata)?;
        write_spectrum_csv(&mut out, &lines).map_err(CliError::io(&path))?;
    }

    let path = dir.join("coefficients.csv");
    let mut out = create_csv(&path, &metadata)?;
    write_coefficients_csv(&mut out, &run.bearings).map_err(CliError::io(&path))?;

    let summary = SimulationSummary::new(config, metadata, &run);
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    q1_ml_min: f64,
    q2_ml_min: f64,
    node: usize,
    forward_amplitude_m: Option<f64>,
    backward_amplitude_m: Option<f64>,
    fb: Option<f64>,
    phi_rad: Option<f64>,
    status: String,
}

/// Noise-free response parameters over the configured flowrate sweep. Failed
/// points are recorded in the table and reported through the return value.
pub fn sensitivity(config: &RunConfig) -> Result<usize, CliError> {
    let sweep = config
        .sensitivity
        .as_ref()
        .ok_or_else(|| CliError::Validation {
            field: "sensitivity".into(),
            message: "the sensitivity command needs a [sensitivity] section".into(),
        })?;
    let dir = output_dir(config)?;
    let simulator = Simulator::new(config.simulation())?;
    let pairs = sweep.pairs_ml_min();
    info!("sweeping {} flowrate pairs", pairs.len());
    let si: Vec<(f64, f64)> = pairs
        .iter()
        .map(|&[a, b]| (ml_min_to_m3_s(a), ml_min_to_m3_s(b)))
        .collect();
    let results = simulator.sweep(&si);

    let path = dir.join("sweep.csv");
    let mut out = csv_writer(&path, &Metadata::new(config, vec![]))?;
    let mut failures = 0;
    for (&(q1, q2), result) in si.iter().zip(&results) {
        let (q1_ml_min, q2_ml_min) = (m3_s_to_ml_min(q1), m3_s_to_ml_min(q2));
        match result {
            Ok(m) => {
                for (&node, d) in m.nodes.iter().zip(&m.directional) {
                    let (fb, phi, status) = match response_parameters(d) {
                        Ok(p) => (Some(p.fb), Some(p.phi), "ok".to_string()),
                        Err(e) => (None, None, e.to_string()),
                    };
                    out.serialize(SweepRow {
                        q1_ml_min,
                        q2_ml_min,
                        node: node + 1,
                        forward_amplitude_m: Some(d.forward_amplitude),
                        backward_amplitude_m: Some(d.backward_amplitude),
                        fb,
                        phi_rad: phi,
                        status,
                    })
                    .map_err(csv_error(&path))?;
                }
            }
            Err(e) => {
                failures += 1;
                warn!("sweep point ({q1_ml_min}, {q2_ml_min}) ml/min failed: {e}");
                for &node in &config.measurement.nodes {
                    out.serialize(SweepRow {
                        q1_ml_min,
                        q2_ml_min,
                        node,
                        forward_amplitude_m: None,
                        backward_amplitude_m: None,
                        fb: None,
                        phi_rad: None,
                        status: e.to_string(),
                    })
                    .map_err(csv_error(&path))?;
                }
            }
        }
    }
    finish_csv(out, &path)?;
    Ok(failures)
}

#[derive(Debug, Clone, Serialize)]
pub struct GuessReport {
    pub start_ml_min: [f64; 2],
    pub initial_error: Option<f64>,
    pub iterations: usize,
    pub outcome: GuessOutcome,
}

/// Contents of `result.json`.
#[derive(Debug, Clone, Serialize)]
pub struct IdentificationReport {
    pub metadata: Metadata,
    pub converged: bool,
    pub identified_ml_min: [f64; 2],
    pub reference_ml_min: Option<[f64; 2]>,
    pub relative_errors_percent: Option<[f64; 2]>,
    pub total_error: f64,
    pub errors: Vec<f64>,
    /// Iterations of the trajectory that produced the result.
    pub iterations: usize,
    pub total_iterations: usize,
    pub guesses_tried: usize,
    pub guesses: Vec<GuessReport>,
    pub evaluations: usize,
    pub regularized: bool,
    pub phi_scaled: bool,
    pub wall_time_s: f64,
}

fn ml_min_pair(q: [f64; 2]) -> [f64; 2] {
    [m3_s_to_ml_min(q[0]), m3_s_to_ml_min(q[1])]
}

impl IdentificationReport {
    fn new(
        metadata: Metadata,
        result: &IdentificationResult,
        reference: Option<[f64; 2]>,
        wall_time_s: f64,
    ) -> Self {
        let guesses: Vec<GuessReport> = result
            .guesses
            .iter()
            .map(|g| GuessReport {
                start_ml_min: ml_min_pair(g.start),
                initial_error: g.initial_error.is_finite().then_some(g.initial_error),
                iterations: g.iterations,
                outcome: g.outcome,
            })
            .collect();
        Self {
            metadata,
            converged: result.converged,
            identified_ml_min: ml_min_pair(result.q),
            reference_ml_min: reference.map(ml_min_pair),
            relative_errors_percent: reference
                .map(|r| relative_errors(result.q, r).map(|e| 100.0 * e)),
            total_error: result.total_error,
            errors: result.errors.clone(),
            iterations: result.iterations,
            total_iterations: result.total_iterations,
            guesses_tried: guesses
                .iter()
                .filter(|g| g.outcome != GuessOutcome::Skipped)
                .count(),
            guesses,
            evaluations: result.evaluations,
            regularized: result.regularized,
            phi_scaled: result.phi_scaled,
            wall_time_s,
        }
    }
}

/// Measured error-function targets from a `simulate` summary.
fn measured_from_file(
    config: &RunConfig,
    path: &Path,
    selectors: &[Selector],
) -> Result<Vec<f64>, CliError> {
    let field = "identification.reference_file";
    let summary = SimulationSummary::load(path)?;
    let expected = config.operating.speed_hz;
    if (summary.speed_hz - expected).abs() > 1e-9 * expected {
        return Err(CliError::Validation {
            field: field.into(),
            message: format!(
                "reference recorded at {} Hz but operating.speed_hz is {expected} Hz",
                summary.speed_hz
            ),
        });
    }
    selectors
        .iter()
        .map(|s| {
            let node = summary
                .node(s.node + 1)
                .ok_or_else(|| CliError::Validation {
                    field: field.into(),
                    message: format!("reference has no data for node {}", s.node + 1),
                })?;
            match s.parameter {
                Parameter::Fb if node.fb_floored => Err(CliError::Validation {
                    field: field.into(),
                    message: format!(
                        "fb at node {} is not resolved (backward amplitude below floor)",
                        node.node
                    ),
                }),
                Parameter::Fb => Ok(node.fb),
                Parameter::Phi => Ok(node.phi_rad),
            }
        })
        .collect()
}

/// Runs one identification against a measurement synthesised at `reference`
/// [m³/s] or read from the configured reference file.
fn identify_case(
    config: &RunConfig,
    simulator: &Simulator,
    reference: Option<[f64; 2]>,
    noise: Option<NoiseSpec>,
) -> Result<(IdentificationResult, f64), CliError> {
    let start = Instant::now();
    let selectors = config.selectors();
    let measured = match (reference, &config.identification().reference_file) {
        (Some(q), _) => {
            let run = simulator.simulate(q[0], q[1], noise)?;
            Selector::extract(&selectors, &run.measurement)?
        }
        (None, Some(path)) => measured_from_file(config, path, &selectors)?,
        (None, None) => {
            return Err(CliError::Validation {
                field: "identification.reference_ml_min".into(),
                message: "identification needs reference_ml_min or reference_file".into(),
            })
        }
    };
    let evaluator = SimulatorEvaluator {
        simulator,
        selectors: selectors.clone(),
    };
    let system = ErrorSystem::new(
        selectors.iter().map(|s| s.parameter).collect(),
        measured,
        evaluator,
    )?;
    let result = run_search(&system, &config.search_config())?;
    Ok((result, start.elapsed().as_secs_f64()))
}

fn write_path_csv(
    path: &Path,
    metadata: &Metadata,
    result: &IdentificationResult,
) -> Result<(), CliError> {
    let mut out = csv_writer(path, metadata)?;
    out.write_record(["guess", "q1_ml_min", "q2_ml_min", "total_error"])
        .map_err(csv_error(path))?;
    for p in &result.path {
        out.write_record([
            (p.guess + 1).to_string(),
            m3_s_to_ml_min(p.q[0]).to_string(),
            m3_s_to_ml_min(p.q[1]).to_string(),
            p.total_error.to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    finish_csv(out, path)
}

/// Identifies the supply flowrates; writes `result.json` and `search_path.csv`.
/// A non-converged search still writes its results.
pub fn identify(config: &RunConfig) -> Result<IdentificationReport, CliError> {
    let dir = output_dir(config)?;
    let simulator = Simulator::new(config.simulation())?;
    let reference = config
        .identification()
        .reference_ml_min
        .map(|q| q.map(ml_min_to_m3_s));
    let noise = reference.and(config.noise_spec());
    let metadata = Metadata::new(config, noise_seeds(noise));
    let (result, wall) = identify_case(config, &simulator, reference, noise)?;
    let report = IdentificationReport::new(metadata.clone(), &result, reference, wall);
    write_json(&dir.join("result.json"), &report)?;
    write_path_csv(&dir.join("search_path.csv"), &metadata, &result)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignRow {
    pub case: usize,
    pub q1_ref_ml_min: f64,
    pub q2_ref_ml_min: f64,
    pub seed: Option<u64>,
    pub q1_ml_min: Option<f64>,
    pub q2_ml_min: Option<f64>,
    pub error1_percent: Option<f64>,
    pub error2_percent: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub guesses_tried: Option<usize>,
    pub evaluations: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignSummary {
    pub metadata: Metadata,
    pub cases: usize,
    pub completed: usize,
    pub converged: usize,
    pub mean_abs_error_percent: Option<[f64; 2]>,
    pub max_abs_error_percent: Option<[f64; 2]>,
    pub total_wall_time_s: f64,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get().saturating_sub(1).max(1))
}

fn run_case(
    config: &RunConfig,
    simulator: &Simulator,
    dir: &Path,
    case: usize,
    reference_ml_min: [f64; 2],
) -> CampaignRow {
    let campaign = config.campaign.as_ref().expect("campaign section checked");
    let reference = reference_ml_min.map(ml_min_to_m3_s);
    let seed = campaign.seed + case as u64;
    let noise = config.noise.map(|n| NoiseSpec {
        snr_db: n.snr_db,
        seed,
    });
    let mut row = CampaignRow {
        case: case + 1,
        q1_ref_ml_min: reference_ml_min[0],
        q2_ref_ml_min: reference_ml_min[1],
        seed: noise.map(|n| n.seed),
        q1_ml_min: None,
        q2_ml_min: None,
        error1_percent: None,
        error2_percent: None,
        converged: None,
        iterations: None,
        guesses_tried: None,
        evaluations: None,
        wall_time_s: None,
        status: String::new(),
    };
    if !config.search_config().in_bounds(reference) {
        row.status = "out_of_bounds".into();
        return row;
    }
    info!(
        "case {}: reference ({}, {}) ml/min",
        case + 1,
        reference_ml_min[0],
        reference_ml_min[1]
    );
    let outcome =
        identify_case(config, simulator, Some(reference), noise).and_then(|(result, wall)| {
            let case_dir = dir.join(format!("case_{:03}", case + 1));
            std::fs::create_dir_all(&case_dir).map_err(CliError::io(&case_dir))?;
            let metadata = Metadata::new(config, noise_seeds(noise));
            let report =
                IdentificationReport::new(metadata.clone(), &result, Some(reference), wall);
            write_json(&case_dir.join("result.json"), &report)?;
            write_path_csv(&case_dir.join("search_path.csv"), &metadata, &result)?;
            Ok(report)
        });
    match outcome {
        Ok(report) => {
            let errors = report.relative_errors_percent.expect("reference known");
            row.q1_ml_min = Some(report.identified_ml_min[0]);
            row.q2_ml_min = Some(report.identified_ml_min[1]);
            row.error1_percent = Some(errors[0]);
            row.error2_percent = Some(errors[1]);
            row.converged = Some(report.converged);
            row.iterations = Some(report.iterations);
            row.guesses_tried = Some(report.guesses_tried);
            row.evaluations = Some(report.evaluations);
            row.wall_time_s = Some(report.wall_time_s);
            row.status = if report.converged {
                "converged"
            } else {
                "not_converged"
            }
            .into();
        }
        Err(e) => {
            warn!("case {} failed: {e}", case + 1);
            row.status = format!("failed: {e}");
        }
    }
    row
}

/// Matrix layout: rows are bearing 1 references, columns bearing 2 references.
fn write_table(
    path: &Path,
    metadata: &Metadata,
    q1: &[f64],
    q2: &[f64],
    rows: &[CampaignRow],
    value: impl Fn(&CampaignRow) -> Option<f64>,
) -> Result<(), CliError> {
    let mut out = csv_writer(path, metadata)?;
    let mut header = vec!["q1_ref_ml_min\\q2_ref_ml_min".to_string()];
    header.extend(q2.iter().map(|q| q.to_string()));
    out.write_record(&header).map_err(csv_error(path))?;
    for (i, a) in q1.iter().enumerate() {
        let mut record = vec![a.to_string()];
        record.extend(
            (0..q2.len())
                .map(|j| value(&rows[i * q2.len() + j]).map_or(String::new(), |v| v.to_string())),
        );
        out.write_record(&record).map_err(csv_error(path))?;
    }
    finish_csv(out, path)
}

/// Batch identification over the reference grid. Cases run concurrently and
/// failures are recorded per case.
pub fn campaign(config: &RunConfig) -> Result<CampaignSummary, CliError> {
    let spec = config
        .campaign
        .as_ref()
        .ok_or_else(|| CliError::Validation {
            field: "campaign".into(),
            message: "the campaign command needs a [campaign] section".into(),
        })?;
    let dir = output_dir(config)?;
    let simulator = Simulator::new(config.simulation())?;
    let cases = spec.cases_ml_min();
    let threads = spec.parallelism.unwrap_or_else(default_parallelism);
    info!("running {} cases on {threads} threads", cases.len());
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let rows: Vec<CampaignRow> = pool.install(|| {
        cases
            .par_iter()
            .enumerate()
            .map(|(i, &q)| run_case(config, &simulator, &dir, i, q))
            .collect()
    });
    let total_wall_time_s = start.elapsed().as_secs_f64();

    let seeds = match config.noise {
        Some(_) => (0..cases.len() as u64).map(|i| spec.seed + i).collect(),
        None => vec![],
    };
    let metadata = Metadata::new(config, seeds);
    let completed: Vec<&CampaignRow> = rows.iter().filter(|r| r.error1_percent.is_some()).collect();
    let abs = |r: &CampaignRow| {
        [
            r.error1_percent.unwrap().abs(),
            r.error2_percent.unwrap().abs(),
        ]
    };
    let (mean, max) = if completed.is_empty() {
        (None, None)
    } else {
        let n = completed.len() as f64;
        let sum = completed
            .iter()
            .fold([0.0; 2], |acc, r| [acc[0] + abs(r)[0], acc[1] + abs(r)[1]]);
        let max = completed.iter().fold([0.0f64; 2], |acc, r| {
            [acc[0].max(abs(r)[0]), acc[1].max(abs(r)[1])]
        });
        (Some([sum[0] / n, sum[1] / n]), Some(max))
    };

    let path = dir.join("campaign.csv");
    let mut out = csv_writer(&path, &metadata)?;
    for row in &rows {
        out.serialize(row).map_err(csv_error(&path))?;
    }
    for (label, values) in [("mean_abs", mean), ("max_abs", max)] {
        let [e1, e2] = values.map_or([String::new(), String::new()], |v| v.map(|x| x.to_string()));
        let mut record = vec![label.to_string(); 1];
        record.extend(std::iter::repeat_n(String::new(), 5));
        record.extend([e1, e2]);
        record.extend(std::iter::repeat_n(String::new(), 5));
        record.push("aggregate".into());
        out.write_record(&record).map_err(csv_error(&path))?;
    }
    finish_csv(out, &path)?;

    write_table(
        &dir.join("error_bearing1.csv"),
        &metadata,
        &spec.q1_ml_min,
        &spec.q2_ml_min,
        &rows,
        |r| r.error1_percent,
    )?;
    write_table(
        &dir.join("error_bearing2.csv"),
        &metadata,
        &spec.q1_ml_min,
        &spec.q2_ml_min,
        &rows,
        |r| r.error2_percent,
    )?;
    write_table(
        &dir.join("time.csv"),
        &metadata,
        &spec.q1_ml_min,
        &spec.q2_ml_min,
        &rows,
        |r| r.wall_time_s,
    )?;

    let summary = CampaignSummary {
        metadata,
        cases: rows.len(),
        completed: completed.len(),
        converged: rows.iter().filter(|r| r.converged == Some(true)).count(),
        mean_abs_error_percent: mean,
        max_abs_error_percent: max,
        total_wall_time_s,
    };
    write_json(&dir.join("campaign_summary.json"), &summary)?;
    Ok(summary)
}
