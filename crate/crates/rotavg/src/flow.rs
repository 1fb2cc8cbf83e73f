//! Consensus gradient flow on SO(3).
//!
//! The population `R_1(t), …, R_N(t)` starts at the input rotations and
//! evolves by
//!
//! ```text
//! dR_j/dt = (1/N) Σ_i κ_i (R_i − R_j R_iᵀ R_j)
//! ```
//!
//! which is gradient descent for the alignment potential
//! `P = −(1/2N²) Σ_i Σ_j κ_i Tr(R_iᵀ R_j)`. The flow preserves SO(3) and
//! drives the population toward consensus `R_1 = … = R_N`, the global
//! minimum of `P`; the consensus value is the rotation average (weights all
//! 1 give the unweighted variant). Progress is monitored by the order
//! parameter `det R̂`, the determinant of the entrywise average, which
//! reaches 1 exactly at consensus; integration stops once
//! `1 − det R̂ < ε`.
//!
//! Integration uses the classical fourth-order Runge–Kutta scheme with a
//! fixed step, followed by projection of every member back onto SO(3): the
//! continuous flow stays on the manifold but the discrete step drifts off
//! it by the local truncation error, and the projection keeps the group
//! invariant machine-tight without affecting the order of accuracy.
//!
//! The right-hand side is evaluated in `O(N)` per member set through the
//! weighted sum `S = Σ κ_i R_i`, giving `dR_j/dt = (S − R_j Sᵀ R_j)/N`;
//! summation order is fixed so results do not depend on evaluation order.

use crate::means::{MeanError, WeightedDataset};
use crate::so3::{project_to_so3, Rotation, So3Error};
use nalgebra::Matrix3;
use thiserror::Error;

/// Potential change over one flow-time unit below which the run is declared
/// stagnant (a non-consensus equilibrium).
pub const STAGNATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("state has {state} members but the dataset has {data}")]
    SizeMismatch { state: usize, data: usize },
    #[error("invalid flow configuration: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error(transparent)]
    So3(#[from] So3Error),
    #[error(transparent)]
    Mean(#[from] MeanError),
}

/// The evolving population and the current flow time.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    rotations: Vec<Rotation>,
    time: f64,
}

impl FlowState {
    pub fn new(rotations: Vec<Rotation>) -> Self {
        FlowState {
            rotations,
            time: 0.0,
        }
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

/// Integration parameters. Defaults follow the reference protocol:
/// tolerance `ε = 1e-5`, step `δ = 0.01`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    /// Stopping tolerance on `1 − det R̂`.
    pub epsilon: f64,
    /// Fixed integration step, in flow-time units.
    pub delta: f64,
    /// Hard cap on the flow time.
    pub t_max: f64,
    /// Record `(t, P, det R̂)` at every step.
    pub record_trace: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            epsilon: 1e-5,
            delta: 0.01,
            t_max: 1000.0,
            record_trace: true,
        }
    }
}

impl FlowConfig {
    fn validate(&self) -> Result<(), FlowError> {
        if !(self.epsilon > 0.0) {
            return Err(FlowError::InvalidConfig {
                reason: "epsilon must be positive",
            });
        }
        if !(self.delta > 0.0) {
            return Err(FlowError::InvalidConfig {
                reason: "delta must be positive",
            });
        }
        if !(self.t_max >= self.delta) {
            return Err(FlowError::InvalidConfig {
                reason: "t_max must be at least delta",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    /// The stopping test `1 − det R̂ < ε` passed.
    Converged,
    /// The potential stagnated while the population stayed dispersed.
    NonConsensus,
    /// `t_max` was reached first.
    MaxTimeExceeded,
}

impl std::fmt::Display for FlowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FlowStatus::Converged => write!(f, "converged"),
            FlowStatus::NonConsensus => write!(f, "non-consensus"),
            FlowStatus::MaxTimeExceeded => write!(f, "max-time-exceeded"),
        }
    }
}

/// One recorded step of the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub time: f64,
    pub potential: f64,
    pub order_parameter: f64,
}

/// Outcome of [`run_flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// Projected Euclidean mean of the final population — a deterministic,
    /// member-order-independent representative of the near-consensus state.
    pub average: Rotation,
    /// Flow time at which the run stopped.
    pub termination_time: f64,
    pub status: FlowStatus,
    /// Per-step samples (empty unless `record_trace` was set).
    pub trace: Vec<TraceSample>,
}

fn check_sizes(state: &FlowState, data: &WeightedDataset) -> Result<(), FlowError> {
    if state.len() != data.len() {
        return Err(FlowError::SizeMismatch {
            state: state.len(),
            data: data.len(),
        });
    }
    Ok(())
}

// S = Σ κ_i M_i in fixed index order.
fn weighted_sum(members: &[Matrix3<f64>], weights: &[f64]) -> Matrix3<f64> {
    let mut sum = Matrix3::zeros();
    for (m, &k) in members.iter().zip(weights) {
        sum += k * m;
    }
    sum
}

// dM_j/dt = (S − M_j Sᵀ M_j)/N, evaluated on raw matrices so it can serve
// the interior Runge–Kutta stages, which sit slightly off the manifold.
fn rhs_raw(members: &[Matrix3<f64>], weights: &[f64]) -> Vec<Matrix3<f64>> {
    let n = members.len() as f64;
    let s = weighted_sum(members, weights);
    let s_t = s.transpose();
    members.iter().map(|m| (s - m * s_t * m) / n).collect()
}

/// Time derivative of every member under the consensus flow.
///
/// Each returned matrix is a tangent direction at its member:
/// `R_jᵀ·(dR_j/dt)` is skew-symmetric.
pub fn flow_rhs(state: &FlowState, data: &WeightedDataset) -> Result<Vec<Matrix3<f64>>, FlowError> {
    check_sizes(state, data)?;
    let members: Vec<Matrix3<f64>> = state.rotations.iter().map(|r| *r.matrix()).collect();
    Ok(rhs_raw(&members, data.weights()))
}

/// The classical four-stage Runge–Kutta update *without* the final
/// re-projection; exposed so the off-manifold drift of a step can be
/// measured directly.
pub fn rk4_update(
    state: &FlowState,
    data: &WeightedDataset,
    delta: f64,
) -> Result<Vec<Matrix3<f64>>, FlowError> {
    check_sizes(state, data)?;
    let weights = data.weights();
    let y0: Vec<Matrix3<f64>> = state.rotations.iter().map(|r| *r.matrix()).collect();

    let k1 = rhs_raw(&y0, weights);
    let y1: Vec<Matrix3<f64>> = y0
        .iter()
        .zip(&k1)
        .map(|(y, k)| y + k * (delta / 2.0))
        .collect();
    let k2 = rhs_raw(&y1, weights);
    let y2: Vec<Matrix3<f64>> = y0
        .iter()
        .zip(&k2)
        .map(|(y, k)| y + k * (delta / 2.0))
        .collect();
    let k3 = rhs_raw(&y2, weights);
    let y3: Vec<Matrix3<f64>> = y0.iter().zip(&k3).map(|(y, k)| y + k * delta).collect();
    let k4 = rhs_raw(&y3, weights);

    Ok(y0
        .iter()
        .enumerate()
        .map(|(j, y)| y + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (delta / 6.0))
        .collect())
}

/// One fixed-step Runge–Kutta step followed by re-projection of every
/// member onto SO(3); advances the state time by `delta`.
pub fn rk4_step(
    state: &FlowState,
    data: &WeightedDataset,
    delta: f64,
) -> Result<FlowState, FlowError> {
    let raw = rk4_update(state, data, delta)?;
    let rotations = raw
        .iter()
        .map(project_to_so3)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FlowState {
        rotations,
        time: state.time + delta,
    })
}

/// Alignment energy `−(1/2N²) Σ_i Σ_j κ_i Tr(R_iᵀ R_j)`.
///
/// For unit weights the value lies in `[−3/2, 3/2]`, with the minimum
/// `−3/2` attained exactly at consensus. Computed in `O(N)` through
/// `Tr(S_κᵀ S_1)` with `S_κ = Σ κ_i R_i`, `S_1 = Σ R_j`.
pub fn potential(state: &FlowState, data: &WeightedDataset) -> Result<f64, FlowError> {
    check_sizes(state, data)?;
    let members: Vec<Matrix3<f64>> = state.rotations.iter().map(|r| *r.matrix()).collect();
    let n = members.len() as f64;
    let s_weighted = weighted_sum(&members, data.weights());
    let mut s_plain = Matrix3::zeros();
    for m in &members {
        s_plain += m;
    }
    Ok(-(s_weighted.transpose() * s_plain).trace() / (2.0 * n * n))
}

/// Order parameter `det R̂`: determinant of the unweighted entrywise mean.
/// At most 1, with equality exactly at consensus.
pub fn order_parameter(state: &FlowState) -> f64 {
    let n = state.len() as f64;
    let mut sum = Matrix3::zeros();
    for r in &state.rotations {
        sum += r.matrix();
    }
    (sum / n).determinant()
}

/// Integrates the consensus flow from the dataset until the stopping test,
/// stagnation, or the time cap.
///
/// The stopping test `1 − det R̂ < ε` is evaluated at `t = 0` and after
/// every step. A non-consensus equilibrium is declared when the potential
/// changed by less than [`STAGNATION_TOLERANCE`] over one flow-time unit
/// while the stopping test kept failing. The returned average is the
/// projected Euclidean mean of the final population.
pub fn run_flow(data: &WeightedDataset, cfg: &FlowConfig) -> Result<FlowResult, FlowError> {
    cfg.validate()?;
    let mut state = FlowState::new(data.rotations().to_vec());
    // Steps per stagnation window of 1.0 flow-time units.
    let window = (1.0 / cfg.delta).round().max(1.0) as usize;
    let max_steps = (cfg.t_max / cfg.delta + 0.5).floor() as usize;

    let mut potentials: Vec<f64> = Vec::new();
    let mut trace: Vec<TraceSample> = Vec::new();
    let mut step_index: usize = 0;
    let status;

    loop {
        let p = potential(&state, data)?;
        let r = order_parameter(&state);
        potentials.push(p);
        if cfg.record_trace {
            trace.push(TraceSample {
                time: state.time,
                potential: p,
                order_parameter: r,
            });
        }

        if 1.0 - r < cfg.epsilon {
            status = FlowStatus::Converged;
            break;
        }
        if step_index >= window
            && (p - potentials[step_index - window]).abs() < STAGNATION_TOLERANCE
        {
            status = FlowStatus::NonConsensus;
            break;
        }
        if step_index >= max_steps {
            status = FlowStatus::MaxTimeExceeded;
            break;
        }

        state = rk4_step(&state, data, cfg.delta)?;
        step_index += 1;
        // Keep the clock exact on the step grid.
        state.time = step_index as f64 * cfg.delta;
    }

    let mut sum = Matrix3::zeros();
    for r in &state.rotations {
        sum += r.matrix();
    }
    let average = project_to_so3(&(sum / state.len() as f64))?;

    Ok(FlowResult {
        average,
        termination_time: state.time,
        status,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::means::{geodesic_mean, KarcherConfig};
    use crate::so3::{RotationVector, UnitQuaternion};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    fn random_rotation(rng: &mut ChaCha12Rng) -> Rotation {
        loop {
            let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.1 {
                return UnitQuaternion::new(c[0] / norm, c[1] / norm, c[2] / norm, c[3] / norm)
                    .unwrap()
                    .to_rotation();
            }
        }
    }

    fn random_dataset(rng: &mut ChaCha12Rng, n: usize, weighted: bool) -> WeightedDataset {
        let rotations = (0..n).map(|_| random_rotation(rng)).collect();
        if weighted {
            let weights = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            WeightedDataset::new(rotations, weights).unwrap()
        } else {
            WeightedDataset::unweighted(rotations).unwrap()
        }
    }

    // O(N²) evaluation of the right-hand side, straight from the definition.
    fn rhs_double_loop(state: &FlowState, data: &WeightedDataset) -> Vec<Matrix3<f64>> {
        let n = state.len() as f64;
        state
            .rotations()
            .iter()
            .map(|rj| {
                let mut sum = Matrix3::zeros();
                for (ri, &k) in state.rotations().iter().zip(data.weights()) {
                    sum += k * (ri.matrix() - rj.matrix() * ri.matrix().transpose() * rj.matrix());
                }
                sum / n
            })
            .collect()
    }

    #[test]
    fn consensus_states_are_equilibria() {
        let mut rng = ChaCha12Rng::seed_from_u64(101);
        let r = random_rotation(&mut rng);
        let data = WeightedDataset::unweighted(vec![r; 5]).unwrap();
        let state = FlowState::new(vec![r; 5]);
        for d in flow_rhs(&state, &data).unwrap() {
            assert!(d.norm() < 1e-14);
        }
        // Distinct members give a nonvanishing derivative somewhere.
        let dispersed_data = random_dataset(&mut rng, 5, false);
        let dispersed = FlowState::new(dispersed_data.rotations().to_vec());
        let max = flow_rhs(&dispersed, &dispersed_data)
            .unwrap()
            .iter()
            .map(|d| d.norm())
            .fold(0.0f64, f64::max);
        assert!(max > 1e-3);
    }

    #[test]
    fn two_member_rhs_matches_direct_substitution() {
        let mut rng = ChaCha12Rng::seed_from_u64(102);
        let a = random_rotation(&mut rng);
        let b = random_rotation(&mut rng);
        let data = WeightedDataset::unweighted(vec![a, b]).unwrap();
        let state = FlowState::new(vec![a, b]);
        let rhs = flow_rhs(&state, &data).unwrap();
        let expected0 = (b.matrix() - a.matrix() * b.matrix().transpose() * a.matrix()) / 2.0;
        let self_term0 = (a.matrix() - a.matrix() * a.matrix().transpose() * a.matrix()) / 2.0;
        assert!((rhs[0] - (expected0 + self_term0)).norm() < 1e-15);
        assert!(self_term0.norm() < 1e-14);
    }

    #[test]
    fn fast_rhs_agrees_with_double_loop() {
        let mut rng = ChaCha12Rng::seed_from_u64(103);
        for n in [3usize, 17, 60] {
            let data = random_dataset(&mut rng, n, true);
            let state = FlowState::new(data.rotations().to_vec());
            let fast = flow_rhs(&state, &data).unwrap();
            let slow = rhs_double_loop(&state, &data);
            for (f, s) in fast.iter().zip(&slow) {
                assert!((f - s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rhs_is_tangent_to_the_manifold() {
        let mut rng = ChaCha12Rng::seed_from_u64(104);
        let data = random_dataset(&mut rng, 10, true);
        let state = FlowState::new(data.rotations().to_vec());
        for (r, d) in state
            .rotations()
            .iter()
            .zip(flow_rhs(&state, &data).unwrap())
        {
            let tangent = r.matrix().transpose() * d;
            assert!((tangent + tangent.transpose()).norm() < 1e-12);
        }
    }

    #[test]
    fn rhs_rejects_size_mismatch() {
        let mut rng = ChaCha12Rng::seed_from_u64(105);
        let data = random_dataset(&mut rng, 4, false);
        let state = FlowState::new(data.rotations()[..3].to_vec());
        assert!(matches!(
            flow_rhs(&state, &data),
            Err(FlowError::SizeMismatch { state: 3, data: 4 })
        ));
    }

    #[test]
    fn zero_weight_members_exert_no_influence() {
        let mut rng = ChaCha12Rng::seed_from_u64(106);
        let rotations: Vec<Rotation> = (0..6).map(|_| random_rotation(&mut rng)).collect();
        let mut weights: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..1.0)).collect();
        weights[4] = 0.0;
        let data = WeightedDataset::new(rotations.clone(), weights.clone()).unwrap();
        let state = FlowState::new(rotations.clone());
        let rhs = flow_rhs(&state, &data).unwrap();

        // Oracle: the same sums with member 4 physically absent (but the
        // same 1/N prefactor).
        let n = rotations.len() as f64;
        for (j, rj) in rotations.iter().enumerate() {
            let mut sum = Matrix3::zeros();
            for (i, (ri, &k)) in rotations.iter().zip(&weights).enumerate() {
                if i == 4 {
                    continue;
                }
                sum += k * (ri.matrix() - rj.matrix() * ri.matrix().transpose() * rj.matrix());
            }
            assert!((rhs[j] - sum / n).norm() < 1e-12, "member {j}");
        }
        // The zero-weight member itself still moves.
        assert!(rhs[4].norm() > 1e-3);
    }

    #[test]
    fn stepping_at_consensus_only_advances_time() {
        let mut rng = ChaCha12Rng::seed_from_u64(107);
        let r = random_rotation(&mut rng);
        let data = WeightedDataset::unweighted(vec![r; 4]).unwrap();
        let state = FlowState::new(vec![r; 4]);
        let next = rk4_step(&state, &data, 0.01).unwrap();
        assert_eq!(next.time(), 0.01);
        for member in next.rotations() {
            assert!(member.geodesic_distance(&r) < 1e-13);
        }
    }

    #[test]
    fn step_does_not_increase_the_potential() {
        let mut rng = ChaCha12Rng::seed_from_u64(108);
        for _ in 0..10 {
            let data = random_dataset(&mut rng, 8, true);
            let state = FlowState::new(data.rotations().to_vec());
            let before = potential(&state, &data).unwrap();
            let after = potential(&rk4_step(&state, &data, 0.01).unwrap(), &data).unwrap();
            assert!(after <= before + 1e-10);
        }
    }

    #[test]
    fn step_halving_is_consistent_with_order_four() {
        let mut rng = ChaCha12Rng::seed_from_u64(109);
        let data = random_dataset(&mut rng, 5, false);
        let state = FlowState::new(data.rotations().to_vec());
        let delta = 0.1;

        let advance = |steps: usize| -> Vec<Matrix3<f64>> {
            let mut s = state.clone();
            for _ in 0..steps {
                s = rk4_step(&s, &data, delta / steps as f64).unwrap();
            }
            s.rotations().iter().map(|r| *r.matrix()).collect()
        };

        let coarse = advance(1);
        let medium = advance(2);
        let fine = advance(4);

        let diff = |a: &[Matrix3<f64>], b: &[Matrix3<f64>]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0f64, f64::max)
        };
        let d1 = diff(&coarse, &medium);
        let d2 = diff(&medium, &fine);
        let ratio = d1 / d2;
        // Order-4 one-step error shrinks ~2⁵ per halving; successive
        // differences shrink by ~2⁴ after cancellation. Allow a wide band.
        assert!(
            (8.0..40.0).contains(&ratio),
            "order ratio {ratio} (d1 {d1:.3e}, d2 {d2:.3e})"
        );
    }

    #[test]
    fn members_stay_on_the_manifold_with_small_drift() {
        let mut rng = ChaCha12Rng::seed_from_u64(110);
        let data = random_dataset(&mut rng, 12, false);
        let mut state = FlowState::new(data.rotations().to_vec());
        for _ in 0..50 {
            let raw = rk4_update(&state, &data, 0.01).unwrap();
            for m in &raw {
                let (orth, _) = crate::so3::rotation_defect(m);
                assert!(orth <= 1e-8, "pre-projection drift {orth:.3e}");
            }
            state = rk4_step(&state, &data, 0.01).unwrap();
            for r in state.rotations() {
                let (orth, det) = crate::so3::rotation_defect(r.matrix());
                assert!(orth <= 1e-9 && det <= 1e-9);
            }
        }
    }

    #[test]
    fn potential_examples() {
        let mut rng = ChaCha12Rng::seed_from_u64(111);
        let r = random_rotation(&mut rng);
        let data = WeightedDataset::unweighted(vec![r; 7]).unwrap();
        let state = FlowState::new(vec![r; 7]);
        assert!((potential(&state, &data).unwrap() + 1.5).abs() < 1e-12);

        let half = Rotation::from_axis_angle(&Vector3::z(), PI);
        let pair_data = WeightedDataset::unweighted(vec![Rotation::identity(), half]).unwrap();
        let pair_state = FlowState::new(vec![Rotation::identity(), half]);
        assert!((potential(&pair_state, &pair_data).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn potential_stays_in_the_stated_band() {
        let mut rng = ChaCha12Rng::seed_from_u64(112);
        for _ in 0..20 {
            let data = random_dataset(&mut rng, 9, false);
            let state = FlowState::new(data.rotations().to_vec());
            let p = potential(&state, &data).unwrap();
            assert!((-1.5..=1.5).contains(&p));
        }
    }

    #[test]
    fn order_parameter_examples() {
        let mut rng = ChaCha12Rng::seed_from_u64(113);
        let r = random_rotation(&mut rng);
        let state = FlowState::new(vec![r; 5]);
        assert!((order_parameter(&state) - 1.0).abs() < 1e-12);

        let half = Rotation::from_axis_angle(&Vector3::z(), PI);
        let pair = FlowState::new(vec![Rotation::identity(), half]);
        assert!(order_parameter(&pair).abs() < 1e-15);

        for _ in 0..50 {
            let state = FlowState::new((0..6).map(|_| random_rotation(&mut rng)).collect());
            assert!(order_parameter(&state) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn identical_rotations_converge_immediately() {
        let mut rng = ChaCha12Rng::seed_from_u64(114);
        let r = random_rotation(&mut rng);
        let data = WeightedDataset::unweighted(vec![r; 9]).unwrap();
        let result = run_flow(&data, &FlowConfig::default()).unwrap();
        assert_eq!(result.status, FlowStatus::Converged);
        assert_eq!(result.termination_time, 0.0);
        assert!(result.average.geodesic_distance(&r) < 1e-12);
        assert_eq!(result.trace.len(), 1);
    }

    #[test]
    fn symmetric_pair_converges_to_the_identity() {
        let plus = Rotation::from_axis_angle(&Vector3::z(), 0.4);
        let minus = Rotation::from_axis_angle(&Vector3::z(), -0.4);
        let data = WeightedDataset::unweighted(vec![plus, minus]).unwrap();
        let result = run_flow(&data, &FlowConfig::default()).unwrap();
        assert_eq!(result.status, FlowStatus::Converged);
        assert!(result.average.geodesic_distance(&Rotation::identity()) < 1e-6);
        assert!(result.termination_time > 0.0);

        let karcher = geodesic_mean(&data, &KarcherConfig::default()).unwrap();
        assert!(result.average.geodesic_distance(&karcher) < 1e-6);
    }

    #[test]
    fn trace_is_monotone_and_on_the_step_grid() {
        let mut rng = ChaCha12Rng::seed_from_u64(115);
        let data = random_dataset(&mut rng, 10, true);
        let cfg = FlowConfig::default();
        let result = run_flow(&data, &cfg).unwrap();
        assert_eq!(result.status, FlowStatus::Converged);
        for (k, sample) in result.trace.iter().enumerate() {
            assert!((sample.time - k as f64 * cfg.delta).abs() < 1e-12);
        }
        for pair in result.trace.windows(2) {
            assert!(pair[1].potential <= pair[0].potential + 1e-10);
        }
        let last = result.trace.last().unwrap();
        assert!(1.0 - last.order_parameter < cfg.epsilon);
        assert!((last.time - result.termination_time).abs() < 1e-12);
    }

    #[test]
    fn record_trace_can_be_disabled() {
        let mut rng = ChaCha12Rng::seed_from_u64(116);
        let data = random_dataset(&mut rng, 6, false);
        let cfg = FlowConfig {
            record_trace: false,
            ..FlowConfig::default()
        };
        let result = run_flow(&data, &cfg).unwrap();
        assert!(result.trace.is_empty());
        assert_eq!(result.status, FlowStatus::Converged);
    }

    #[test]
    fn flow_is_bi_equivariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(117);
        let data = random_dataset(&mut rng, 8, true);
        let q = random_rotation(&mut rng);
        let cfg = FlowConfig::default();

        let base = run_flow(&data, &cfg).unwrap();
        let left = WeightedDataset::new(
            data.rotations().iter().map(|r| &q * r).collect(),
            data.weights().to_vec(),
        )
        .unwrap();
        let right = WeightedDataset::new(
            data.rotations().iter().map(|r| r * &q).collect(),
            data.weights().to_vec(),
        )
        .unwrap();
        let left_result = run_flow(&left, &cfg).unwrap();
        let right_result = run_flow(&right, &cfg).unwrap();
        assert!(left_result.average.geodesic_distance(&(&q * &base.average)) < 1e-8);
        assert!(
            right_result
                .average
                .geodesic_distance(&(&base.average * &q))
                < 1e-8
        );
        assert_eq!(left_result.termination_time, base.termination_time);
        assert_eq!(right_result.termination_time, base.termination_time);
    }

    #[test]
    fn exact_antipodal_pair_is_a_degenerate_stagnation() {
        // {I, Rz(π)} is a saddle: the flow never leaves it and the mean has
        // no unique projection.
        let half = Rotation::from_axis_angle(&Vector3::z(), PI);
        let data = WeightedDataset::unweighted(vec![Rotation::identity(), half]).unwrap();
        let err = run_flow(&data, &FlowConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            FlowError::So3(So3Error::DegenerateProjection { .. })
        ));
    }

    #[test]
    fn near_antipodal_pair_reports_non_consensus() {
        // Nudging one member along the shared axis keeps the projection
        // well defined (the mean's small singular values grow linearly in
        // the nudge) while the potential stays flat near the saddle.
        let tilt = RotationVector::new(Vector3::new(0.0, 0.0, 3e-8))
            .unwrap()
            .exp();
        let half = Rotation::from_axis_angle(&Vector3::z(), PI);
        let data = WeightedDataset::unweighted(vec![tilt, half]).unwrap();
        let result = run_flow(&data, &FlowConfig::default()).unwrap();
        assert_eq!(result.status, FlowStatus::NonConsensus);
        assert!((result.termination_time - 1.0).abs() < 1e-9);
    }

    #[test]
    fn time_cap_yields_max_time_exceeded() {
        let mut rng = ChaCha12Rng::seed_from_u64(118);
        let data = random_dataset(&mut rng, 10, false);
        let cfg = FlowConfig {
            t_max: 0.05,
            ..FlowConfig::default()
        };
        let result = run_flow(&data, &cfg).unwrap();
        assert_eq!(result.status, FlowStatus::MaxTimeExceeded);
        assert!((result.termination_time - 0.05).abs() < 1e-12);
    }

    #[test]
    fn config_is_validated() {
        let data = WeightedDataset::unweighted(vec![Rotation::identity()]).unwrap();
        for cfg in [
            FlowConfig {
                epsilon: 0.0,
                ..FlowConfig::default()
            },
            FlowConfig {
                delta: -0.01,
                ..FlowConfig::default()
            },
            FlowConfig {
                t_max: 0.001,
                ..FlowConfig::default()
            },
        ] {
            assert!(matches!(
                run_flow(&data, &cfg),
                Err(FlowError::InvalidConfig { .. })
            ));
        }
    }
}
