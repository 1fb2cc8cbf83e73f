//! C ABI over the rotation-averaging library.
//!
//! Conventions:
//!   - rotation matrices cross the boundary as 9 doubles, row-major;
//!   - quaternions as 4 doubles, `w x y z`;
//!   - datasets are opaque handles created by the `rotavg_dataset_*`
//!     constructors and released with [`rotavg_dataset_free`];
//!   - every fallible call returns a [`RotavgStatus`]; outputs are written
//!     only on `Ok` (the flow call also fills outputs for the
//!     `NonConsensus` / `MaxTimeExceeded` statuses, which carry a usable
//!     average).
//!
//! The generated header lands in `include/rotavg.h`.

use nalgebra::Matrix3;
use rotavg::flow::{run_flow, FlowConfig, FlowError, FlowStatus};
use rotavg::means::{geodesic_mean, projected_mean, KarcherConfig, MeanError, WeightedDataset};
use rotavg::sampling::{sample_rotations, sample_weights, VmfParams};
use rotavg::so3::{Rotation, So3Error, UnitQuaternion};
use std::os::raw::c_char;

/// Result of a C-API call. `Ok` is zero; everything else describes why the
/// requested value was not produced.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotavgStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Inputs failed validation (not a rotation / not unit / bad weights
    /// or parameters).
    InvalidInput = 2,
    /// The nearest-rotation projection was not unique.
    DegenerateProjection = 3,
    /// The geodesic-mean iteration hit its iteration cap.
    NoConvergence = 4,
    /// The flow stagnated away from consensus; the reported average is the
    /// projected mean of the stagnant population.
    NonConsensus = 5,
    /// The flow hit its time cap before converging.
    MaxTimeExceeded = 6,
}

/// Opaque dataset handle: rotations plus weights.
pub struct RotavgDataset {
    inner: WeightedDataset,
}

fn mean_error_status(err: &MeanError) -> RotavgStatus {
    match err {
        MeanError::NoConvergence { .. } => RotavgStatus::NoConvergence,
        MeanError::So3(So3Error::DegenerateProjection { .. }) => RotavgStatus::DegenerateProjection,
        _ => RotavgStatus::InvalidInput,
    }
}

fn flow_error_status(err: &FlowError) -> RotavgStatus {
    match err {
        FlowError::So3(So3Error::DegenerateProjection { .. }) => RotavgStatus::DegenerateProjection,
        _ => RotavgStatus::InvalidInput,
    }
}

unsafe fn read_matrix(entries: *const f64) -> Matrix3<f64> {
    let slice = std::slice::from_raw_parts(entries, 9);
    Matrix3::from_row_slice(slice)
}

unsafe fn write_matrix(rotation: &Rotation, out: *mut f64) {
    let out = std::slice::from_raw_parts_mut(out, 9);
    let m = rotation.matrix();
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = m[(i, j)];
        }
    }
}

unsafe fn build_dataset(
    rotations: Vec<Rotation>,
    weights: *const f64,
    count: usize,
    out: *mut *mut RotavgDataset,
) -> RotavgStatus {
    let data = if weights.is_null() {
        WeightedDataset::unweighted(rotations)
    } else {
        let w = std::slice::from_raw_parts(weights, count).to_vec();
        WeightedDataset::new(rotations, w)
    };
    match data {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(RotavgDataset { inner }));
            RotavgStatus::Ok
        }
        Err(_) => RotavgStatus::InvalidInput,
    }
}

/// Creates a dataset from `count` row-major 3x3 rotation matrices
/// (`entries` holds `9 * count` doubles). `weights` may be null for the
/// unweighted case, otherwise it holds `count` nonnegative values.
///
/// # Safety
/// `entries` must point to `9 * count` readable doubles, `weights` to
/// `count` readable doubles when non-null, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rotavg_dataset_from_matrices(
    entries: *const f64,
    weights: *const f64,
    count: usize,
    out: *mut *mut RotavgDataset,
) -> RotavgStatus {
    if entries.is_null() || out.is_null() {
        return RotavgStatus::NullArgument;
    }
    let mut rotations = Vec::with_capacity(count);
    for index in 0..count {
        match Rotation::from_matrix(read_matrix(entries.add(9 * index))) {
            Ok(rotation) => rotations.push(rotation),
            Err(_) => return RotavgStatus::InvalidInput,
        }
    }
    build_dataset(rotations, weights, count, out)
}

/// Creates a dataset from `count` unit quaternions (`w x y z`, `4 * count`
/// doubles), mapped to rotations through the double cover.
///
/// # Safety
/// `quaternions` must point to `4 * count` readable doubles, `weights` to
/// `count` readable doubles when non-null, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rotavg_dataset_from_quaternions(
    quaternions: *const f64,
    weights: *const f64,
    count: usize,
    out: *mut *mut RotavgDataset,
) -> RotavgStatus {
    if quaternions.is_null() || out.is_null() {
        return RotavgStatus::NullArgument;
    }
    let mut rotations = Vec::with_capacity(count);
    for index in 0..count {
        let q = std::slice::from_raw_parts(quaternions.add(4 * index), 4);
        match UnitQuaternion::new(q[0], q[1], q[2], q[3]) {
            Ok(q) => rotations.push(q.to_rotation()),
            Err(_) => return RotavgStatus::InvalidInput,
        }
    }
    build_dataset(rotations, weights, count, out)
}

/// Number of rotations in the dataset (0 for a null handle).
///
/// # Safety
/// `dataset` must be null or a live handle from a `rotavg_dataset_*`
/// constructor.
#[no_mangle]
pub unsafe extern "C" fn rotavg_dataset_len(dataset: *const RotavgDataset) -> usize {
    if dataset.is_null() {
        0
    } else {
        (*dataset).inner.len()
    }
}

/// Releases a dataset handle; null is a no-op.
///
/// # Safety
/// `dataset` must be null or a live handle, and must not be used again.
#[no_mangle]
pub unsafe extern "C" fn rotavg_dataset_free(dataset: *mut RotavgDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Weighted projected (chordal) mean; writes 9 doubles, row-major.
///
/// # Safety
/// `dataset` must be a live handle; `out_matrix` must point to 9 writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn rotavg_projected_mean(
    dataset: *const RotavgDataset,
    out_matrix: *mut f64,
) -> RotavgStatus {
    if dataset.is_null() || out_matrix.is_null() {
        return RotavgStatus::NullArgument;
    }
    match projected_mean(&(*dataset).inner) {
        Ok(average) => {
            write_matrix(&average, out_matrix);
            RotavgStatus::Ok
        }
        Err(err) => mean_error_status(&err),
    }
}

/// Weighted geodesic (Karcher) mean. Pass `tolerance <= 0` or
/// `max_iterations == 0` to use the defaults (1e-10, 100).
///
/// # Safety
/// `dataset` must be a live handle; `out_matrix` must point to 9 writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn rotavg_geodesic_mean(
    dataset: *const RotavgDataset,
    tolerance: f64,
    max_iterations: usize,
    out_matrix: *mut f64,
) -> RotavgStatus {
    if dataset.is_null() || out_matrix.is_null() {
        return RotavgStatus::NullArgument;
    }
    let defaults = KarcherConfig::default();
    let cfg = KarcherConfig {
        tolerance: if tolerance > 0.0 {
            tolerance
        } else {
            defaults.tolerance
        },
        max_iterations: if max_iterations > 0 {
            max_iterations
        } else {
            defaults.max_iterations
        },
    };
    match geodesic_mean(&(*dataset).inner, &cfg) {
        Ok(average) => {
            write_matrix(&average, out_matrix);
            RotavgStatus::Ok
        }
        Err(err) => mean_error_status(&err),
    }
}

/// Consensus-flow average (weighted when the dataset carries weights).
/// Pass non-positive `epsilon` / `delta` / `t_max` to use the defaults
/// (1e-5, 0.01, 1000). On `Ok`, `NonConsensus`, and `MaxTimeExceeded` the
/// average and (optionally) the termination time are written.
///
/// # Safety
/// `dataset` must be a live handle; `out_matrix` must point to 9 writable
/// doubles; `out_time` must be null or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn rotavg_flow_average(
    dataset: *const RotavgDataset,
    epsilon: f64,
    delta: f64,
    t_max: f64,
    out_matrix: *mut f64,
    out_time: *mut f64,
) -> RotavgStatus {
    if dataset.is_null() || out_matrix.is_null() {
        return RotavgStatus::NullArgument;
    }
    let defaults = FlowConfig::default();
    let cfg = FlowConfig {
        epsilon: if epsilon > 0.0 {
            epsilon
        } else {
            defaults.epsilon
        },
        delta: if delta > 0.0 { delta } else { defaults.delta },
        t_max: if t_max > 0.0 { t_max } else { defaults.t_max },
        record_trace: false,
    };
    match run_flow(&(*dataset).inner, &cfg) {
        Ok(result) => {
            write_matrix(&result.average, out_matrix);
            if !out_time.is_null() {
                *out_time = result.termination_time;
            }
            match result.status {
                FlowStatus::Converged => RotavgStatus::Ok,
                FlowStatus::NonConsensus => RotavgStatus::NonConsensus,
                FlowStatus::MaxTimeExceeded => RotavgStatus::MaxTimeExceeded,
            }
        }
        Err(err) => flow_error_status(&err),
    }
}

unsafe fn distance(
    a: *const f64,
    b: *const f64,
    out: *mut f64,
    metric: fn(&Rotation, &Rotation) -> f64,
) -> RotavgStatus {
    if a.is_null() || b.is_null() || out.is_null() {
        return RotavgStatus::NullArgument;
    }
    let (Ok(ra), Ok(rb)) = (
        Rotation::from_matrix(read_matrix(a)),
        Rotation::from_matrix(read_matrix(b)),
    ) else {
        return RotavgStatus::InvalidInput;
    };
    *out = metric(&ra, &rb);
    RotavgStatus::Ok
}

/// Frobenius (chordal) distance between two rotations, each 9 row-major
/// doubles.
///
/// # Safety
/// `a` and `b` must point to 9 readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rotavg_chordal_distance(
    a: *const f64,
    b: *const f64,
    out: *mut f64,
) -> RotavgStatus {
    distance(a, b, out, |x, y| x.chordal_distance(y))
}

/// Geodesic distance (relative rotation angle, radians) between two
/// rotations, each 9 row-major doubles.
///
/// # Safety
/// `a` and `b` must point to 9 readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rotavg_geodesic_distance(
    a: *const f64,
    b: *const f64,
    out: *mut f64,
) -> RotavgStatus {
    distance(a, b, out, |x, y| x.geodesic_distance(y))
}

/// Draws `count` rotations from the von Mises-Fisher distribution on the
/// quaternion sphere (mean direction `mu`, 4 doubles `w x y z`) pushed
/// through the double cover; writes `9 * count` row-major doubles.
/// Deterministic in `seed`.
///
/// # Safety
/// `mu` must point to 4 readable doubles and `out_entries` to `9 * count`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rotavg_sample_rotations(
    mu: *const f64,
    kappa: f64,
    count: usize,
    seed: u64,
    out_entries: *mut f64,
) -> RotavgStatus {
    if mu.is_null() || out_entries.is_null() {
        return RotavgStatus::NullArgument;
    }
    let m = std::slice::from_raw_parts(mu, 4);
    let Ok(mu) = UnitQuaternion::new(m[0], m[1], m[2], m[3]) else {
        return RotavgStatus::InvalidInput;
    };
    let Ok(params) = VmfParams::new(mu, kappa, count, seed) else {
        return RotavgStatus::InvalidInput;
    };
    for (index, rotation) in sample_rotations(&params).iter().enumerate() {
        write_matrix(rotation, out_entries.add(9 * index));
    }
    RotavgStatus::Ok
}

/// Draws `count` uniform [0, 1) weights, deterministic in `seed`.
///
/// # Safety
/// `out_weights` must point to `count` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rotavg_sample_weights(
    count: usize,
    seed: u64,
    out_weights: *mut f64,
) -> RotavgStatus {
    if out_weights.is_null() {
        return RotavgStatus::NullArgument;
    }
    if count == 0 {
        return RotavgStatus::InvalidInput;
    }
    let weights = sample_weights(count, seed);
    std::slice::from_raw_parts_mut(out_weights, count).copy_from_slice(&weights);
    RotavgStatus::Ok
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn rotavg_status_name(status: RotavgStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        RotavgStatus::Ok => b"ok\0",
        RotavgStatus::NullArgument => b"null argument\0",
        RotavgStatus::InvalidInput => b"invalid input\0",
        RotavgStatus::DegenerateProjection => b"degenerate projection\0",
        RotavgStatus::NoConvergence => b"no convergence\0",
        RotavgStatus::NonConsensus => b"non-consensus\0",
        RotavgStatus::MaxTimeExceeded => b"max time exceeded\0",
    };
    name.as_ptr() as *const c_char
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rotavg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
