use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{reject, Result};
use crate::nnet::Matrix;
use crate::rng::RunRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseShape {
    TwoMoons,
    TwoGaussians,
}

/// A synthetic 2-D classification domain: a base shape rotated about the
/// origin, standing in for a continuous appearance shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub base_shape: BaseShape,
    pub rotation_deg: f64,
    pub noise_std: f64,
    pub n_per_class: usize,
}

impl DomainSpec {
    pub fn with_n_per_class(mut self, n: usize) -> Self {
        self.n_per_class = n;
        self
    }
}

/// A batch of points with optional class labels (labels are present only
/// for supervised/source domains and for evaluation sets).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledBatch {
    pub points: Matrix,
    pub labels: Option<Vec<usize>>,
    pub domain_id: usize,
}

impl LabelledBatch {
    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }
}

/// Canonical (unrotated, noiseless) sample for one class.
///
/// Two moons are centered so the cloud's midpoint sits at the origin and
/// rotation leaves it in place: class 0 is `(cos t - 0.5, sin t - 0.25)`,
/// class 1 its point reflection, `t ~ U[0, pi]`. Two gaussians place the
/// class means at `(-1, 0)` / `(1, 0)`; all spread comes from the noise.
fn canonical_point(shape: BaseShape, class: usize, rng: &mut RunRng) -> (f64, f64) {
    match shape {
        BaseShape::TwoMoons => {
            let t: f64 = rng.gen::<f64>() * std::f64::consts::PI;
            let (x, y) = (t.cos() - 0.5, t.sin() - 0.25);
            if class == 0 {
                (x, y)
            } else {
                (-x, -y)
            }
        }
        BaseShape::TwoGaussians => {
            if class == 0 {
                (-1.0, 0.0)
            } else {
                (1.0, 0.0)
            }
        }
    }
}

/// Draws a labelled batch: canonical points rotated about the origin by
/// `rotation_deg`, then independent Gaussian noise on each coordinate.
/// Class 0 points come first; labels survive the rotation.
pub fn sample_domain(spec: &DomainSpec, domain_id: usize, rng: &mut RunRng) -> Result<LabelledBatch> {
    if !(spec.noise_std > 0.0) || !spec.noise_std.is_finite() {
        return reject(format!("noise_std must be positive, got {}", spec.noise_std));
    }
    if spec.n_per_class == 0 {
        return reject("n_per_class must be at least 1");
    }
    let theta = spec.rotation_deg.to_radians();
    let (cos_t, sin_t) = (theta.cos(), theta.sin());
    let normal = Normal::new(0.0, spec.noise_std).expect("validated std");

    let n = 2 * spec.n_per_class;
    let mut data = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for class in 0..2 {
        for _ in 0..spec.n_per_class {
            let (x, y) = canonical_point(spec.base_shape, class, rng);
            let rx = cos_t * x - sin_t * y;
            let ry = sin_t * x + cos_t * y;
            data.push(rx + normal.sample(rng));
            data.push(ry + normal.sample(rng));
            labels.push(class);
        }
    }
    Ok(LabelledBatch {
        points: Matrix::from_vec(n, 2, data)?,
        labels: Some(labels),
        domain_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seed_rng;

    fn moons(rotation_deg: f64, n: usize) -> DomainSpec {
        DomainSpec {
            base_shape: BaseShape::TwoMoons,
            rotation_deg,
            noise_std: 0.1,
            n_per_class: n,
        }
    }

    #[test]
    fn batch_layout_and_labels() {
        let b = sample_domain(&moons(0.0, 50), 0, &mut seed_rng(3)).unwrap();
        assert_eq!(b.len(), 100);
        assert_eq!(b.points.cols(), 2);
        let labels = b.labels.as_ref().unwrap();
        assert!(labels[..50].iter().all(|&l| l == 0));
        assert!(labels[50..].iter().all(|&l| l == 1));
    }

    #[test]
    fn zero_rotation_yields_canonical_shape() {
        // Class 0 moon lives in the upper half after centering:
        // y in [-0.25, 0.75]; check the bulk respects that up to noise.
        let b = sample_domain(&moons(0.0, 500), 0, &mut seed_rng(11)).unwrap();
        let mut mean_y0 = 0.0;
        for i in 0..500 {
            mean_y0 += b.points.get(i, 1);
        }
        mean_y0 /= 500.0;
        let expected = 2.0 / std::f64::consts::PI - 0.25;
        assert!((mean_y0 - expected).abs() < 0.05);
    }

    #[test]
    fn full_turn_equals_identity_with_shared_seed() {
        let a = sample_domain(&moons(0.0, 40), 0, &mut seed_rng(21)).unwrap();
        let b = sample_domain(&moons(360.0, 40), 0, &mut seed_rng(21)).unwrap();
        for (x, y) in a.points.data().iter().zip(b.points.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_batch() {
        let a = sample_domain(&moons(30.0, 64), 1, &mut seed_rng(5)).unwrap();
        let b = sample_domain(&moons(30.0, 64), 1, &mut seed_rng(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rotated_class_means_match_closed_form() {
        // Unrotated class-0 moon mean is (-0.5, 2/pi - 1/4); rotating by
        // 90 degrees maps (x, y) to (-y, x). Noise has zero mean.
        let n = 10_000;
        let b = sample_domain(&moons(90.0, n), 0, &mut seed_rng(99)).unwrap();
        let (mut mx, mut my) = (0.0, 0.0);
        for i in 0..n {
            mx += b.points.get(i, 0);
            my += b.points.get(i, 1);
        }
        mx /= n as f64;
        my /= n as f64;
        let expected = (0.25 - 2.0 / std::f64::consts::PI, -0.5);
        // Per-coordinate spread is below sqrt(1/2) + noise; 3 sigma / sqrt(n).
        let tol = 3.0 * (0.5f64 + 0.01).sqrt() / (n as f64).sqrt();
        assert!((mx - expected.0).abs() < tol, "mx {mx} vs {}", expected.0);
        assert!((my - expected.1).abs() < tol, "my {my} vs {}", expected.1);
    }

    #[test]
    fn gaussians_separate_along_rotated_axis() {
        let spec = DomainSpec {
            base_shape: BaseShape::TwoGaussians,
            rotation_deg: 90.0,
            noise_std: 0.2,
            n_per_class: 2000,
        };
        let b = sample_domain(&spec, 0, &mut seed_rng(4)).unwrap();
        // Means rotate to (0, -1) and (0, 1).
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for i in 0..2000 {
            m0 += b.points.get(i, 1);
            m1 += b.points.get(i + 2000, 1);
        }
        assert!((m0 / 2000.0 + 1.0).abs() < 0.05);
        assert!((m1 / 2000.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = moons(0.0, 10);
        s.noise_std = 0.0;
        assert!(sample_domain(&s, 0, &mut seed_rng(0)).is_err());
        let s2 = moons(0.0, 0);
        assert!(sample_domain(&s2, 0, &mut seed_rng(0)).is_err());
    }
}
