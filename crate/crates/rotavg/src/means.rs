//! Baseline rotation averages: the projected arithmetic mean and the
//! geodesic (Karcher) mean, both in weighted form.
//!
//! A weighted dataset holds rotations `R_i` with weights `κ_i ≥ 0`
//! (unweighted data uses `κ_i = 1`). The projected mean minimizes
//! `Σ κ_i·d_F(R_i, R)²` over SO(3) and is computed in closed form by
//! projecting the weight-normalized Euclidean average. The geodesic mean
//! minimizes `Σ κ_i·d_R(R_i, R)²`; it is found by the standard fixed-point
//! iteration `R ← R·exp(Σ κ_i·log(RᵀR_i) / Σ κ_i)`, started from the
//! projected mean, and declared converged when the weighted tangent mean —
//! the first-order optimality residual — drops below the tolerance.

use crate::so3::{project_to_so3, Rotation, RotationVector, So3Error};
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanError {
    #[error("dataset must contain at least one rotation")]
    EmptyDataset,
    #[error("{rotations} rotations but {weights} weights")]
    LengthMismatch { rotations: usize, weights: usize },
    #[error("weight {index} is {value}; weights must be finite and nonnegative")]
    InvalidWeight { index: usize, value: f64 },
    #[error("all weights are zero")]
    ZeroTotalWeight,
    #[error("invalid Karcher configuration: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error(
        "Karcher iteration stopped after {max_iterations} iterations with \
         residual {residual:.3e} (tolerance {tolerance:.1e})"
    )]
    NoConvergence {
        tolerance: f64,
        max_iterations: usize,
        residual: f64,
    },
    #[error(transparent)]
    So3(#[from] So3Error),
}

/// Rotations paired with nonnegative weights; at least one weight positive.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDataset {
    rotations: Vec<Rotation>,
    weights: Vec<f64>,
}

impl WeightedDataset {
    pub fn new(rotations: Vec<Rotation>, weights: Vec<f64>) -> Result<Self, MeanError> {
        if rotations.is_empty() {
            return Err(MeanError::EmptyDataset);
        }
        if rotations.len() != weights.len() {
            return Err(MeanError::LengthMismatch {
                rotations: rotations.len(),
                weights: weights.len(),
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(MeanError::InvalidWeight { index, value });
            }
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(MeanError::ZeroTotalWeight);
        }
        Ok(WeightedDataset { rotations, weights })
    }

    /// All weights set to 1.
    pub fn unweighted(rotations: Vec<Rotation>) -> Result<Self, MeanError> {
        let weights = vec![1.0; rotations.len()];
        WeightedDataset::new(rotations, weights)
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Whether every weight equals 1 (the unweighted convention).
    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }
}

/// Weight-normalized entrywise average `Σ κ_i·R_i / Σ κ_i`. The result is
/// generally *not* a rotation.
pub fn euclidean_mean(data: &WeightedDataset) -> Matrix3<f64> {
    let mut sum = Matrix3::zeros();
    for (rotation, &weight) in data.rotations().iter().zip(data.weights()) {
        sum += weight * rotation.matrix();
    }
    sum / data.total_weight()
}

/// Minimizer of `Σ κ_i·d_F(R_i, R)²` over SO(3): the Euclidean average
/// projected onto the manifold.
pub fn projected_mean(data: &WeightedDataset) -> Result<Rotation, MeanError> {
    Ok(project_to_so3(&euclidean_mean(data))?)
}

/// Stopping parameters for the Karcher iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KarcherConfig {
    /// Threshold on the weighted tangent-mean norm, in radians.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for KarcherConfig {
    fn default() -> Self {
        KarcherConfig {
            tolerance: 1e-10,
            max_iterations: 100,
        }
    }
}

impl KarcherConfig {
    fn validate(&self) -> Result<(), MeanError> {
        if !(self.tolerance > 0.0) {
            return Err(MeanError::InvalidConfig {
                reason: "tolerance must be positive",
            });
        }
        if self.max_iterations == 0 {
            return Err(MeanError::InvalidConfig {
                reason: "max_iterations must be at least 1",
            });
        }
        Ok(())
    }
}

/// Minimizer of `Σ κ_i·d_R(R_i, R)²`: the Karcher fixed point.
///
/// Initialized from [`projected_mean`]. On return the weighted tangent mean
/// `Σ κ_i·log(RᵀR_i) / Σ κ_i` has norm below `cfg.tolerance`. Uniqueness
/// requires the data to sit inside a geodesic ball of radius π/2; this is
/// not checked, and on widely dispersed data the iteration returns whichever
/// stationary point it reaches.
pub fn geodesic_mean(data: &WeightedDataset, cfg: &KarcherConfig) -> Result<Rotation, MeanError> {
    cfg.validate()?;
    let total = data.total_weight();
    let mut current = projected_mean(data)?;
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        let mut tangent = Vector3::zeros();
        for (rotation, &weight) in data.rotations().iter().zip(data.weights()) {
            if weight == 0.0 {
                continue;
            }
            tangent += weight * current.relative_to(rotation).log().vector();
        }
        tangent /= total;
        residual = tangent.norm();
        if residual < cfg.tolerance {
            return Ok(current);
        }
        // Convex combination of logarithms, so the step stays within π.
        let step = RotationVector::new(tangent)?;
        current = &current * &step.exp();
    }
    Err(MeanError::NoConvergence {
        tolerance: cfg.tolerance,
        max_iterations: cfg.max_iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::UnitQuaternion;
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
            let weights = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            WeightedDataset::new(rotations, weights).unwrap()
        } else {
            WeightedDataset::unweighted(rotations).unwrap()
        }
    }

    fn weighted_chordal_objective(data: &WeightedDataset, r: &Rotation) -> f64 {
        data.rotations()
            .iter()
            .zip(data.weights())
            .map(|(ri, &k)| k * ri.chordal_distance(r).powi(2))
            .sum()
    }

    fn weighted_geodesic_objective(data: &WeightedDataset, r: &Rotation) -> f64 {
        data.rotations()
            .iter()
            .zip(data.weights())
            .map(|(ri, &k)| k * ri.geodesic_distance(r).powi(2))
            .sum()
    }

    #[test]
    fn dataset_validation() {
        assert!(matches!(
            WeightedDataset::unweighted(vec![]),
            Err(MeanError::EmptyDataset)
        ));
        let r = Rotation::identity();
        assert!(matches!(
            WeightedDataset::new(vec![r, r], vec![1.0]),
            Err(MeanError::LengthMismatch { .. })
        ));
        assert!(matches!(
            WeightedDataset::new(vec![r], vec![-0.5]),
            Err(MeanError::InvalidWeight { .. })
        ));
        assert!(matches!(
            WeightedDataset::new(vec![r, r], vec![0.0, 0.0]),
            Err(MeanError::ZeroTotalWeight)
        ));
        assert!(WeightedDataset::new(vec![r, r], vec![0.0, 2.0]).is_ok());
    }

    #[test]
    fn euclidean_mean_examples() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let r = random_rotation(&mut rng);
        let copies = WeightedDataset::unweighted(vec![r; 5]).unwrap();
        assert!((euclidean_mean(&copies) - r.matrix()).norm() < 1e-15);

        let half = Rotation::from_axis_angle(&nalgebra::Vector3::z(), PI);
        let pair = WeightedDataset::unweighted(vec![Rotation::identity(), half]).unwrap();
        let expected = Matrix3::from_diagonal(&Vector3::new(0.0, 0.0, 1.0));
        assert!((euclidean_mean(&pair) - expected).norm() < 1e-15);

        let a = random_rotation(&mut rng);
        let b = random_rotation(&mut rng);
        let dropped = WeightedDataset::new(vec![a, b], vec![1.0, 0.0]).unwrap();
        assert!((euclidean_mean(&dropped) - a.matrix()).norm() < 1e-15);
    }

    #[test]
    fn projected_mean_of_copies_is_the_rotation() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let r = random_rotation(&mut rng);
        let data = WeightedDataset::unweighted(vec![r; 4]).unwrap();
        assert!(projected_mean(&data).unwrap().geodesic_distance(&r) < 1e-12);
    }

    #[test]
    fn projected_mean_bisects_same_axis_pairs() {
        // Oracle: 1-D brute-force minimization of Σ d_F² over the axis family.
        let axis = Vector3::new(0.3, -1.0, 0.7).normalize();
        let cases = [(0.2, 1.1), (-0.9, 0.4), (2.0, 2.8)];
        for &(theta1, theta2) in &cases {
            let data = WeightedDataset::unweighted(vec![
                Rotation::from_axis_angle(&axis, theta1),
                Rotation::from_axis_angle(&axis, theta2),
            ])
            .unwrap();
            let mean = projected_mean(&data).unwrap();
            let expected = Rotation::from_axis_angle(&axis, (theta1 + theta2) / 2.0);
            assert!(
                mean.geodesic_distance(&expected) < 1e-9,
                "midpoint mismatch for ({theta1}, {theta2})"
            );

            let mut best_angle = 0.0;
            let mut best_val = f64::INFINITY;
            let samples = 20000;
            for i in 0..samples {
                let angle = -PI + 2.0 * PI * (i as f64) / (samples as f64);
                let candidate = Rotation::from_axis_angle(&axis, angle);
                let val = weighted_chordal_objective(&data, &candidate);
                if val < best_val {
                    best_val = val;
                    best_angle = angle;
                }
            }
            assert!(
                mean.geodesic_distance(&Rotation::from_axis_angle(&axis, best_angle)) < 1e-3,
                "grid oracle disagrees"
            );
        }
    }

    #[test]
    fn projected_mean_propagates_degenerate_projection() {
        let half = Rotation::from_axis_angle(&Vector3::z(), PI);
        let data = WeightedDataset::unweighted(vec![Rotation::identity(), half]).unwrap();
        assert!(matches!(
            projected_mean(&data),
            Err(MeanError::So3(So3Error::DegenerateProjection { .. }))
        ));
    }

    #[test]
    fn geodesic_mean_of_copies_is_the_rotation() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let r = random_rotation(&mut rng);
        let data = WeightedDataset::unweighted(vec![r; 6]).unwrap();
        let mean = geodesic_mean(&data, &KarcherConfig::default()).unwrap();
        assert!(mean.geodesic_distance(&r) < 1e-12);
    }

    #[test]
    fn geodesic_mean_of_two_is_the_midpoint() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..10 {
            let a = random_rotation(&mut rng);
            let b = random_rotation(&mut rng);
            let data = WeightedDataset::unweighted(vec![a, b]).unwrap();
            let mean = geodesic_mean(&data, &KarcherConfig::default()).unwrap();
            let half_log = a.relative_to(&b).log().vector() / 2.0;
            let midpoint = &a * &RotationVector::new(half_log).unwrap().exp();
            assert!(mean.geodesic_distance(&midpoint) < 1e-9);
        }
    }

    #[test]
    fn geodesic_mean_matches_scalar_mean_on_one_axis() {
        // Oracle: brute-force the 1-D geodesic objective over the angle.
        let axis = Vector3::new(1.0, 0.5, -0.25).normalize();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..5 {
            let angles: Vec<f64> = (0..7).map(|_| rng.random_range(-1.5..1.5)).collect();
            let rotations = angles
                .iter()
                .map(|&t| Rotation::from_axis_angle(&axis, t))
                .collect();
            let data = WeightedDataset::unweighted(rotations).unwrap();
            let mean = geodesic_mean(&data, &KarcherConfig::default()).unwrap();
            let arithmetic = angles.iter().sum::<f64>() / angles.len() as f64;
            assert!(mean.geodesic_distance(&Rotation::from_axis_angle(&axis, arithmetic)) < 1e-8);

            let mut best_angle = 0.0;
            let mut best_val = f64::INFINITY;
            for i in 0..40000 {
                let angle = -PI / 2.0 + PI * (i as f64) / 40000.0;
                let candidate = Rotation::from_axis_angle(&axis, angle);
                let val = weighted_geodesic_objective(&data, &candidate);
                if val < best_val {
                    best_val = val;
                    best_angle = angle;
                }
            }
            assert!(
                (best_angle - arithmetic).abs() < 1e-3,
                "grid oracle disagrees"
            );
        }
    }

    #[test]
    fn geodesic_mean_satisfies_first_order_optimality() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let cfg = KarcherConfig::default();
        for _ in 0..5 {
            let data = random_dataset(&mut rng, 15, true);
            let mean = geodesic_mean(&data, &cfg).unwrap();
            let mut tangent = Vector3::zeros();
            for (r, &k) in data.rotations().iter().zip(data.weights()) {
                tangent += k * mean.relative_to(r).log().vector();
            }
            assert!(tangent.norm() / data.total_weight() < cfg.tolerance);
        }
    }

    #[test]
    fn projected_mean_is_locally_optimal() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let data = random_dataset(&mut rng, 12, true);
        let mean = projected_mean(&data).unwrap();
        let base = weighted_chordal_objective(&data, &mean);
        for _ in 0..100 {
            let direction = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let perturbed = &mean * &RotationVector::new(direction * 1e-3).unwrap().exp();
            assert!(weighted_chordal_objective(&data, &perturbed) >= base - 1e-12);
        }
    }

    #[test]
    fn means_are_bi_equivariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let cfg = KarcherConfig::default();
        for _ in 0..5 {
            let data = random_dataset(&mut rng, 8, true);
            let q = random_rotation(&mut rng);
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

            let p = projected_mean(&data).unwrap();
            assert!(projected_mean(&left).unwrap().geodesic_distance(&(&q * &p)) < 1e-8);
            assert!(
                projected_mean(&right)
                    .unwrap()
                    .geodesic_distance(&(&p * &q))
                    < 1e-8
            );

            let g = geodesic_mean(&data, &cfg).unwrap();
            assert!(
                geodesic_mean(&left, &cfg)
                    .unwrap()
                    .geodesic_distance(&(&q * &g))
                    < 1e-8
            );
            assert!(
                geodesic_mean(&right, &cfg)
                    .unwrap()
                    .geodesic_distance(&(&g * &q))
                    < 1e-8
            );
        }
    }

    #[test]
    fn weight_scaling_leaves_means_unchanged() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let data = random_dataset(&mut rng, 10, true);
        let scaled = WeightedDataset::new(
            data.rotations().to_vec(),
            data.weights().iter().map(|w| w * 37.5).collect(),
        )
        .unwrap();
        let cfg = KarcherConfig::default();
        assert!(
            projected_mean(&data)
                .unwrap()
                .geodesic_distance(&projected_mean(&scaled).unwrap())
                < 1e-10
        );
        assert!(
            geodesic_mean(&data, &cfg)
                .unwrap()
                .geodesic_distance(&geodesic_mean(&scaled, &cfg).unwrap())
                < 1e-10
        );
    }

    #[test]
    fn duplicating_a_point_equals_adding_its_weight() {
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let rotations: Vec<Rotation> = (0..6).map(|_| random_rotation(&mut rng)).collect();
        let mut weights: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..1.0)).collect();
        let extra = 0.4;

        let mut duplicated_rotations = rotations.clone();
        duplicated_rotations.push(rotations[2]);
        let mut duplicated_weights = weights.clone();
        duplicated_weights.push(extra);
        let duplicated = WeightedDataset::new(duplicated_rotations, duplicated_weights).unwrap();

        weights[2] += extra;
        let merged = WeightedDataset::new(rotations, weights).unwrap();

        let cfg = KarcherConfig::default();
        assert!(
            projected_mean(&duplicated)
                .unwrap()
                .geodesic_distance(&projected_mean(&merged).unwrap())
                < 1e-10
        );
        assert!(
            geodesic_mean(&duplicated, &cfg)
                .unwrap()
                .geodesic_distance(&geodesic_mean(&merged, &cfg).unwrap())
                < 1e-10
        );
    }

    #[test]
    fn karcher_config_is_validated() {
        let data = WeightedDataset::unweighted(vec![Rotation::identity()]).unwrap();
        let bad_tol = KarcherConfig {
            tolerance: 0.0,
            ..KarcherConfig::default()
        };
        assert!(matches!(
            geodesic_mean(&data, &bad_tol),
            Err(MeanError::InvalidConfig { .. })
        ));
        let bad_iter = KarcherConfig {
            max_iterations: 0,
            ..KarcherConfig::default()
        };
        assert!(matches!(
            geodesic_mean(&data, &bad_iter),
            Err(MeanError::InvalidConfig { .. })
        ));
    }
}
