//! Implementations behind the `rotavg` command-line tool.
//!
//! Exit code conventions:
//!   0 — success (flow converged, or non-flow method finished);
//!   1 — I/O or internal failure;
//!   2 — parse or validation failure (including degenerate projections);
//!   3 — flow ended in a non-consensus equilibrium;
//!   4 — iteration budget exhausted (flow time cap, Karcher iterations).

use crate::dataset::{
    read_dataset, write_atomic, write_matrix_dataset, write_quaternion_dataset, DatasetError,
    LoadedDataset, RecordKind, RepairPolicy,
};
use crate::flow::{run_flow, FlowConfig, FlowError, FlowResult, FlowStatus};
use crate::means::{geodesic_mean, projected_mean, KarcherConfig, MeanError, WeightedDataset};
use crate::report::{MethodResult, Report, RunMetadata};
use crate::sampling::{sample_vmf_s3, sample_weights, VmfParams, RNG_NAME};
use crate::so3::{So3Error, UnitQuaternion};
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Stream separation for the weight column of `sample --weights`: weights
/// use `seed ^ WEIGHT_SEED_SALT` so they never alias the rotation stream.
pub const WEIGHT_SEED_SALT: u64 = 0x0057_4549_4748_5453;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Mean(#[from] MeanError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Sampling(#[from] crate::sampling::SamplingError),
    #[error("method '{method}' requires a weight column in the dataset")]
    MissingWeights { method: &'static str },
    #[error("invalid mean direction: {0}")]
    BadMu(So3Error),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Dataset(DatasetError::Io { .. }) => 1,
            CommandError::Dataset(_) => 2,
            CommandError::Mean(MeanError::NoConvergence { .. }) => 4,
            CommandError::Mean(_) => 2,
            CommandError::Flow(FlowError::So3(_)) => 2,
            CommandError::Flow(_) => 2,
            CommandError::Sampling(_) => 2,
            CommandError::MissingWeights { .. } => 2,
            CommandError::BadMu(_) => 2,
        }
    }
}

pub fn exit_code_for_status(status: FlowStatus) -> i32 {
    match status {
        FlowStatus::Converged => 0,
        FlowStatus::NonConsensus => 3,
        FlowStatus::MaxTimeExceeded => 4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Kl,
    Klw,
    Projected,
    Geodesic,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Kl => "kl",
            Method::Klw => "klw",
            Method::Projected => "projected",
            Method::Geodesic => "geodesic",
        }
    }
}

/// Everything a command needs beyond its positional inputs.
#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    pub flow: FlowConfig,
    pub karcher: KarcherConfig,
    pub repair: bool,
    pub seed: Option<u64>,
    /// Where to write the JSON report, if anywhere.
    pub out: Option<PathBuf>,
}

impl CommandOptions {
    fn policy(&self) -> RepairPolicy {
        if self.repair {
            RepairPolicy::Repair
        } else {
            RepairPolicy::Strict
        }
    }

    fn metadata(&self, input: Option<&Path>, rng: Option<&str>) -> RunMetadata {
        RunMetadata {
            input: input.map(|p| p.display().to_string()),
            epsilon: self.flow.epsilon,
            delta: self.flow.delta,
            t_max: self.flow.t_max,
            karcher_tolerance: self.karcher.tolerance,
            karcher_max_iterations: self.karcher.max_iterations,
            repair: self.repair,
            seed: self.seed,
            rng: rng.map(|s| s.to_string()),
        }
    }
}

/// A finished command: the report, the worst flow status encountered (if
/// any flow ran), and warnings for the console.
#[derive(Debug)]
pub struct CommandOutput {
    pub report: Report,
    pub status: Option<FlowStatus>,
    pub warnings: Vec<String>,
}

impl CommandOutput {
    pub fn exit_code(&self) -> i32 {
        self.status.map_or(0, exit_code_for_status)
    }
}

fn strip_weights(data: &WeightedDataset) -> Result<WeightedDataset, MeanError> {
    WeightedDataset::unweighted(data.rotations().to_vec())
}

fn run_method(
    method: Method,
    loaded: &LoadedDataset,
    options: &CommandOptions,
    warnings: &mut Vec<String>,
) -> Result<(MethodResult, Option<FlowStatus>), CommandError> {
    match method {
        Method::Kl => {
            let data = if loaded.has_weights {
                warnings
                    .push("dataset has a weight column; method 'kl' ignores it (use 'klw')".into());
                strip_weights(&loaded.data)?
            } else {
                loaded.data.clone()
            };
            let result = run_flow(&data, &options.flow)?;
            Ok((flow_method_result("kl", &result), Some(result.status)))
        }
        Method::Klw => {
            if !loaded.has_weights {
                return Err(CommandError::MissingWeights { method: "klw" });
            }
            let result = run_flow(&loaded.data, &options.flow)?;
            Ok((flow_method_result("klw", &result), Some(result.status)))
        }
        Method::Projected => {
            let average = projected_mean(&loaded.data)?;
            Ok((MethodResult::new("projected", &average, None, None), None))
        }
        Method::Geodesic => {
            let average = geodesic_mean(&loaded.data, &options.karcher)?;
            Ok((MethodResult::new("geodesic", &average, None, None), None))
        }
    }
}

fn flow_method_result(name: &str, result: &FlowResult) -> MethodResult {
    MethodResult::new(
        name,
        &result.average,
        Some(result.termination_time),
        Some(result.status),
    )
}

/// `rotavg average`: one method, one report.
pub fn cmd_average(
    input: &Path,
    method: Method,
    options: &CommandOptions,
) -> Result<CommandOutput, CommandError> {
    let loaded = read_dataset(input, options.policy())?;
    let mut warnings = Vec::new();
    let (result, status) = run_method(method, &loaded, options, &mut warnings)?;
    let report = Report::new(options.metadata(Some(input), None), vec![result]);
    Ok(CommandOutput {
        report,
        status,
        warnings,
    })
}

/// `rotavg compare`: every method applicable to the dataset, plus the full
/// pairwise distance table. Weighted files compare the weighted flow and
/// weighted baselines; weightless files compare the unweighted set.
pub fn cmd_compare(input: &Path, options: &CommandOptions) -> Result<CommandOutput, CommandError> {
    let loaded = read_dataset(input, options.policy())?;
    let methods: &[Method] = if loaded.has_weights {
        &[Method::Klw, Method::Projected, Method::Geodesic]
    } else {
        &[Method::Kl, Method::Projected, Method::Geodesic]
    };
    let mut warnings = Vec::new();
    let mut results = Vec::new();
    let mut status: Option<FlowStatus> = None;
    for &method in methods {
        let (result, method_status) = run_method(method, &loaded, options, &mut warnings)?;
        results.push(result);
        if let Some(s) = method_status {
            status = Some(s);
        }
    }
    let report = Report::new(options.metadata(Some(input), None), results);
    Ok(CommandOutput {
        report,
        status,
        warnings,
    })
}

/// Sidecar contents describing a generated dataset.
#[derive(Debug, Serialize)]
struct SampleMetadata<'a> {
    mu: [f64; 4],
    kappa: f64,
    n: usize,
    seed: u64,
    rng: &'a str,
    format: &'a str,
    weights: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight_seed: Option<u64>,
    columns: usize,
}

/// `rotavg sample`: vMF rotations (optionally with uniform weights) plus a
/// JSON sidecar `<out>.meta.json` recording every parameter.
pub fn cmd_sample(
    mu: UnitQuaternion,
    kappa: f64,
    n: usize,
    seed: u64,
    with_weights: bool,
    format: RecordKind,
    out: &Path,
) -> Result<(), CommandError> {
    let params = VmfParams::new(mu, kappa, n, seed)?;
    let quaternions = sample_vmf_s3(&params);
    let weight_seed = with_weights.then_some(seed ^ WEIGHT_SEED_SALT);
    let weights = weight_seed.map(|s| sample_weights(n, s));

    match format {
        RecordKind::Matrix => {
            let rotations: Vec<_> = quaternions.iter().map(|q| q.to_rotation()).collect();
            write_matrix_dataset(out, &rotations, weights.as_deref())?;
        }
        RecordKind::Quaternion => {
            write_quaternion_dataset(out, &quaternions, weights.as_deref())?;
        }
    }

    let columns = match (format, with_weights) {
        (RecordKind::Matrix, false) => 9,
        (RecordKind::Matrix, true) => 10,
        (RecordKind::Quaternion, false) => 4,
        (RecordKind::Quaternion, true) => 5,
    };
    let metadata = SampleMetadata {
        mu: mu.components(),
        kappa,
        n,
        seed,
        rng: RNG_NAME,
        format: format.name(),
        weights: with_weights,
        weight_seed,
        columns,
    };
    let sidecar = sidecar_path(out);
    let mut text = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    text.push('\n');
    write_atomic(&sidecar, &text)?;
    Ok(())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

pub fn spheres_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".spheres.csv");
    out.with_file_name(name)
}

/// `rotavg trace`: runs the flow and writes the `(t, P, det R̂)` records,
/// plus a sphere-point sidecar holding the three column vectors of every
/// input rotation and of the computed average, for external plotting.
pub fn cmd_trace(
    input: &Path,
    method: Method,
    options: &CommandOptions,
    out: &Path,
) -> Result<CommandOutput, CommandError> {
    let loaded = read_dataset(input, options.policy())?;
    let mut warnings = Vec::new();
    let data = match method {
        Method::Kl => {
            if loaded.has_weights {
                warnings
                    .push("dataset has a weight column; method 'kl' ignores it (use 'klw')".into());
                strip_weights(&loaded.data)?
            } else {
                loaded.data.clone()
            }
        }
        Method::Klw => {
            if !loaded.has_weights {
                return Err(CommandError::MissingWeights { method: "klw" });
            }
            loaded.data.clone()
        }
        _ => {
            return Err(CommandError::MissingWeights {
                method: "trace supports kl and klw only",
            })
        }
    };

    let cfg = FlowConfig {
        record_trace: true,
        ..options.flow
    };
    let result = run_flow(&data, &cfg)?;

    let mut trace_text = String::from("t,potential,order_parameter\n");
    for sample in &result.trace {
        trace_text.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            sample.time, sample.potential, sample.order_parameter
        ));
    }
    write_atomic(out, &trace_text)?;

    let mut spheres = String::from(
        "# member_index,vector_index,x,y,z  (member_index N = computed average)\n\
         member_index,vector_index,x,y,z\n",
    );
    let members = loaded.data.rotations().iter().chain([&result.average]);
    for (index, rotation) in members.enumerate() {
        for (axis, point) in rotation.sphere_points().iter().enumerate() {
            spheres.push_str(&format!(
                "{index},{axis},{:.16e},{:.16e},{:.16e}\n",
                point.x, point.y, point.z
            ));
        }
    }
    write_atomic(&spheres_path(out), &spheres)?;

    let report = Report::new(
        options.metadata(Some(input), None),
        vec![flow_method_result(method.name(), &result)],
    );
    Ok(CommandOutput {
        report,
        status: Some(result.status),
        warnings,
    })
}
