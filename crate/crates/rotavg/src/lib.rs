//! Rotation averaging on SO(3).
//!
//! The crate computes single rotation averages — unweighted and weighted —
//! three ways:
//!
//!   - **projected mean**: the Euclidean (entrywise) average projected back
//!     onto SO(3), minimizing the summed squared chordal distances;
//!   - **geodesic mean**: the Karcher fixed point minimizing summed squared
//!     geodesic distances, found by iterative tangent-space averaging;
//!   - **consensus flow**: the non-Abelian Kuramoto gradient flow, in which
//!     the input rotations evolve toward a common alignment whose value is
//!     reported as the average.
//!
//! [`sampling`] generates reproducible synthetic datasets (von Mises–Fisher
//! draws on S³ pushed through the double cover), and [`dataset`] / [`report`]
//! handle the numeric text formats used by the `rotavg` command-line tool.

pub mod dataset;
pub mod flow;
pub mod means;
pub mod report;
pub mod sampling;
pub mod so3;

pub mod commands;

pub use flow::{run_flow, FlowConfig, FlowError, FlowResult, FlowState, FlowStatus, TraceSample};
pub use means::{
    euclidean_mean, geodesic_mean, projected_mean, KarcherConfig, MeanError, WeightedDataset,
};
pub use sampling::{sample_rotations, sample_vmf_s3, sample_weights, SamplingError, VmfParams};
pub use so3::{
    project_to_so3, rotation_defect, Rotation, RotationVector, So3Error, UnitQuaternion,
};
