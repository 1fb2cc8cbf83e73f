//! Method comparison reports: one entry per averaging method plus the
//! pairwise chordal/geodesic distances between their results, rendered as a
//! console table and serialized as JSON on request.

use crate::dataset::{write_atomic, DatasetError};
use crate::flow::FlowStatus;
use crate::so3::Rotation;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One method's average and how the run ended.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    /// `converged` / `non-consensus` / `max-time-exceeded` for the flow
    /// methods, `ok` for the closed-form and iterative baselines.
    pub status: String,
    /// Flow termination time, where applicable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination_time: Option<f64>,
    pub average_matrix: [[f64; 3]; 3],
    /// Canonical (w ≥ 0) quaternion of the average.
    pub average_quaternion: [f64; 4],
}

impl MethodResult {
    pub fn new(
        method: &str,
        average: &Rotation,
        termination_time: Option<f64>,
        status: Option<FlowStatus>,
    ) -> Self {
        let m = average.matrix();
        let q = average.to_quaternion().components();
        MethodResult {
            method: method.to_string(),
            status: status.map_or_else(|| "ok".to_string(), |s| s.to_string()),
            termination_time,
            average_matrix: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])),
            average_quaternion: q,
        }
    }

    pub fn rotation(&self) -> Rotation {
        let m = nalgebra::Matrix3::from_fn(|i, j| self.average_matrix[i][j]);
        // Entries came from a valid rotation; re-validate cheaply.
        Rotation::from_matrix(m).expect("report stores valid rotations")
    }
}

/// Distances between two methods' averages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceEntry {
    pub method_a: String,
    pub method_b: String,
    pub chordal: f64,
    pub geodesic: f64,
}

/// Provenance of a run: input, flow parameters, sampler identification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub epsilon: f64,
    pub delta: f64,
    pub t_max: f64,
    pub karcher_tolerance: f64,
    pub karcher_max_iterations: usize,
    pub repair: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub metadata: RunMetadata,
    pub results: Vec<MethodResult>,
    /// Unordered method pairs, each listed once.
    pub distances: Vec<DistanceEntry>,
}

impl Report {
    /// Builds a report and fills in the pairwise distance table.
    pub fn new(metadata: RunMetadata, results: Vec<MethodResult>) -> Self {
        let mut distances = Vec::new();
        for i in 0..results.len() {
            for j in (i + 1)..results.len() {
                let a = results[i].rotation();
                let b = results[j].rotation();
                distances.push(DistanceEntry {
                    method_a: results[i].method.clone(),
                    method_b: results[j].method.clone(),
                    chordal: a.chordal_distance(&b),
                    geodesic: a.geodesic_distance(&b),
                });
            }
        }
        Report {
            metadata,
            results,
            distances,
        }
    }

    /// Console rendering: per-method blocks, then the distance table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for result in &self.results {
            out.push_str(&format!("method: {}\n", result.method));
            out.push_str(&format!("  status: {}\n", result.status));
            if let Some(t) = result.termination_time {
                out.push_str(&format!("  termination time: {t:.4}\n"));
            }
            out.push_str("  average (matrix rows):\n");
            for row in &result.average_matrix {
                out.push_str(&format!(
                    "    [{:>12.8} {:>12.8} {:>12.8}]\n",
                    row[0], row[1], row[2]
                ));
            }
            let q = result.average_quaternion;
            out.push_str(&format!(
                "  average (quaternion w x y z): {:.8} {:.8} {:.8} {:.8}\n",
                q[0], q[1], q[2], q[3]
            ));
        }
        if !self.distances.is_empty() {
            out.push_str("pairwise distances (chordal | geodesic):\n");
            for d in &self.distances {
                out.push_str(&format!(
                    "  {:<12} vs {:<12} {:.6e} | {:.6e}\n",
                    d.method_a, d.method_b, d.chordal, d.geodesic
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<(), DatasetError> {
        let mut text = self.to_json();
        text.push('\n');
        write_atomic(path, &text)
    }
}
