//! Gaussian landmark belief, confidence ellipses and map sampling.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("map has no landmarks")]
    Empty,
    #[error("landmark {landmark}: covariance must be finite, symmetric and positive semidefinite")]
    BadCovariance { landmark: usize },
    #[error("landmark {landmark}: mean must be finite")]
    BadMean { landmark: usize },
    #[error("confidence level {0} is outside (0, 1)")]
    BadConfidence(f64),
    #[error("landmark index {0} out of range")]
    UnknownLandmark(usize),
    #[error("sampled map has {got} landmarks, belief has {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Landmark {
    pub mean: Vec2,
    pub covariance: Matrix2<f64>,
    pub class: String,
}

impl Landmark {
    pub fn new(mean: Vec2, covariance: Matrix2<f64>, class: impl Into<String>) -> Self {
        Landmark { mean, covariance, class: class.into() }
    }

    fn validate(&self, landmark: usize) -> Result<(), MapError> {
        if !self.mean.iter().all(|v| v.is_finite()) {
            return Err(MapError::BadMean { landmark });
        }
        let c = &self.covariance;
        let tol = 1e-12 * (1.0 + c.abs().max());
        let ok = c.iter().all(|v| v.is_finite())
            && (c[(0, 1)] - c[(1, 0)]).abs() <= tol
            && sym_eigen(c).values.1 >= -tol;
        if ok {
            Ok(())
        } else {
            Err(MapError::BadCovariance { landmark })
        }
    }
}

/// Eigen decomposition of a symmetric 2x2 matrix: values in descending
/// order and the unit eigenvector of the larger one.
#[derive(Clone, Copy, Debug)]
struct SymEigen {
    values: (f64, f64),
    major: Vec2,
}

fn sym_eigen(m: &Matrix2<f64>) -> SymEigen {
    let p = m[(0, 0)];
    let r = m[(1, 1)];
    let q = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mid = 0.5 * (p + r);
    let d = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    let l1 = mid + d;
    let l2 = mid - d;
    let major = if q.abs() > 1e-300 {
        // Pick the better conditioned of the two row-derived vectors.
        let a = Vec2::new(l1 - r, q);
        let b = Vec2::new(q, l1 - p);
        if a.norm() >= b.norm() {
            a.normalize()
        } else {
            b.normalize()
        }
    } else if p >= r {
        Vec2::new(1.0, 0.0)
    } else {
        Vec2::new(0.0, 1.0)
    };
    SymEigen { values: (l1, l2), major }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapBelief {
    landmarks: Vec<Landmark>,
    class_priors: Vec<Option<BTreeMap<String, f64>>>,
}

impl MapBelief {
    pub fn new(landmarks: Vec<Landmark>) -> Result<Self, MapError> {
        if landmarks.is_empty() {
            return Err(MapError::Empty);
        }
        for (i, l) in landmarks.iter().enumerate() {
            l.validate(i)?;
        }
        let n = landmarks.len();
        Ok(MapBelief { landmarks, class_priors: vec![None; n] })
    }

    /// Attaches a class distribution to a landmark. It is kept for
    /// round-tripping only; classes are treated as known.
    pub fn set_class_prior(
        &mut self,
        landmark: usize,
        prior: BTreeMap<String, f64>,
    ) -> Result<(), MapError> {
        let slot = self
            .class_priors
            .get_mut(landmark)
            .ok_or(MapError::UnknownLandmark(landmark))?;
        *slot = Some(prior);
        Ok(())
    }

    pub fn class_prior(&self, landmark: usize) -> Option<&BTreeMap<String, f64>> {
        self.class_priors.get(landmark).and_then(|p| p.as_ref())
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn landmark(&self, i: usize) -> Result<&Landmark, MapError> {
        self.landmarks.get(i).ok_or(MapError::UnknownLandmark(i))
    }

    /// Marginal δ-confidence ellipse of landmark `i`.
    pub fn ellipse(&self, i: usize, delta: f64) -> Result<ConfidenceEllipse, MapError> {
        let l = self.landmark(i)?;
        ConfidenceEllipse::new(l.mean, l.covariance, chi2_quantile_2dof(delta)?)
    }

    /// Ellipses of every landmark at level δ.
    pub fn ellipses(&self, delta: f64) -> Result<Vec<ConfidenceEllipse>, MapError> {
        (0..self.len()).map(|i| self.ellipse(i, delta)).collect()
    }

    /// Draws one map. Equal `(seed, index)` pairs give identical maps, and
    /// different indices use independent streams.
    pub fn sample_indexed(&self, seed: u64, index: u64) -> SampledMap {
        let mut rng = stream(seed, index);
        let poses = self
            .landmarks
            .iter()
            .map(|l| l.mean + gaussian_offset(&l.covariance, &mut rng))
            .collect();
        SampledMap { poses, classes: self.classes() }
    }

    pub fn sample(&self, seed: u64) -> SampledMap {
        self.sample_indexed(seed, 0)
    }

    /// Draws one map conditioned on every landmark lying in its δ-ellipse,
    /// by per-landmark rejection.
    pub fn sample_in_region_indexed(
        &self,
        delta: f64,
        seed: u64,
        index: u64,
    ) -> Result<SampledMap, MapError> {
        let ellipses = self.ellipses(delta)?;
        let mut rng = stream(seed, index);
        let poses = self
            .landmarks
            .iter()
            .zip(&ellipses)
            .map(|(l, e)| loop {
                let z = l.mean + gaussian_offset(&l.covariance, &mut rng);
                if e.contains(&z) {
                    break z;
                }
            })
            .collect();
        Ok(SampledMap { poses, classes: self.classes() })
    }

    fn classes(&self) -> Vec<String> {
        self.landmarks.iter().map(|l| l.class.clone()).collect()
    }

    /// True iff every sampled pose lies in its landmark's δ-ellipse.
    pub fn in_confidence_region(&self, s: &SampledMap, delta: f64) -> Result<bool, MapError> {
        if s.poses.len() != self.len() {
            return Err(MapError::LengthMismatch { expected: self.len(), got: s.poses.len() });
        }
        let ellipses = self.ellipses(delta)?;
        Ok(ellipses.iter().zip(&s.poses).all(|(e, z)| e.contains(z)))
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_offset(cov: &Matrix2<f64>, rng: &mut ChaCha8Rng) -> Vec2 {
    let e = sym_eigen(cov);
    let minor = Vec2::new(-e.major.y, e.major.x);
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    e.major * (e.values.0.max(0.0).sqrt() * z1) + minor * (e.values.1.max(0.0).sqrt() * z2)
}

/// One realization of the landmark poses.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledMap {
    pub poses: Vec<Vec2>,
    pub classes: Vec<String>,
}

/// Quantile of the chi-square distribution with two degrees of freedom,
/// `-2 ln(1 - δ)`.
pub fn chi2_quantile_2dof(delta: f64) -> Result<f64, MapError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MapError::BadConfidence(delta));
    }
    Ok(-2.0 * (-delta).ln_1p())
}

/// `{z : (z - center)ᵀ shape⁻¹ (z - center) ≤ scale}`, stored in its
/// principal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceEllipse {
    pub center: Vec2,
    pub shape: Matrix2<f64>,
    pub scale: f64,
    /// Major and minor semi-axes, `major >= minor >= 0`.
    pub semi_axes: (f64, f64),
    /// Unit vector along the major axis.
    pub major_dir: Vec2,
}

impl ConfidenceEllipse {
    pub fn new(center: Vec2, shape: Matrix2<f64>, scale: f64) -> Result<Self, MapError> {
        let e = sym_eigen(&shape);
        let a = (scale * e.values.0.max(0.0)).sqrt();
        let b = (scale * e.values.1.max(0.0)).sqrt();
        Ok(ConfidenceEllipse { center, shape, scale, semi_axes: (a, b), major_dir: e.major })
    }

    /// Absolute coordinates of `x - center` in the principal frame.
    fn local(&self, x: &Vec2) -> (f64, f64) {
        let d = x - self.center;
        let minor = Vec2::new(-self.major_dir.y, self.major_dir.x);
        (d.dot(&self.major_dir).abs(), d.dot(&minor).abs())
    }

    pub fn is_point(&self) -> bool {
        self.semi_axes.0 == 0.0
    }

    pub fn contains(&self, x: &Vec2) -> bool {
        let (u, v) = self.local(x);
        let (a, b) = self.semi_axes;
        const EPS: f64 = 1e-12;
        if a == 0.0 {
            u <= EPS && v <= EPS
        } else if b == 0.0 {
            v <= EPS * a && u <= a * (1.0 + EPS)
        } else {
            (u / a).powi(2) + (v / b).powi(2) <= 1.0 + EPS
        }
    }

    /// Exact minimum and maximum Euclidean distance from `x` to the closed
    /// region. The minimum is 0 inside.
    pub fn dist_bounds(&self, x: &Vec2) -> (f64, f64) {
        let (u, v) = self.local(x);
        let (a, b) = self.semi_axes;
        let r = u.hypot(v);
        if a == 0.0 {
            return (r, r);
        }
        if a == b {
            return ((r - a).max(0.0), r + a);
        }
        (min_dist(u, v, a, b), max_dist(u, v, a, b))
    }
}

fn min_dist(u: f64, v: f64, a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return (u - a).max(0.0).hypot(v);
    }
    if (u / a).powi(2) + (v / b).powi(2) <= 1.0 {
        return 0.0;
    }
    let (a2, b2) = (a * a, b * b);
    let f = |t: f64| {
        let p = a * u / (t + a2);
        let q = b * v / (t + b2);
        (p * p + q * q - 1.0, -2.0 * (p * p / (t + a2) + q * q / (t + b2)))
    };
    let hi = (a2 * u * u + b2 * v * v).sqrt();
    let t = solve_decreasing(f, 0.0, hi);
    let x = a2 * u / (t + a2);
    let y = b2 * v / (t + b2);
    (u - x).hypot(v - y)
}

fn max_dist(u: f64, v: f64, a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    if u == 0.0 {
        // Boundary point (a cos φ, b sin φ); maximise over s = sin φ.
        let s = if b == 0.0 { 0.0 } else { (b * v / (a2 - b2)).min(1.0) };
        return ((b2 - a2) * s * s + 2.0 * b * v * s + a2 + v * v).max(0.0).sqrt();
    }
    if b == 0.0 {
        return (u + a).hypot(v);
    }
    let f = |t: f64| {
        let p = a * u / (t - a2);
        let q = b * v / (t - b2);
        (p * p + q * q - 1.0, -2.0 * (p * p / (t - a2) + q * q / (t - b2)))
    };
    let s = (a2 * u * u + b2 * v * v).sqrt();
    let t = solve_decreasing(f, a2, a2 + s);
    (u * t / (t - a2)).hypot(v * t / (t - b2))
}

/// Root of a decreasing function on `(lo, hi]` with `f(lo+) > 0 >= f(hi)`,
/// by Newton steps kept inside a shrinking bracket.
fn solve_decreasing(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let mut t = hi;
    for _ in 0..100 {
        let (val, der) = f(t);
        if val == 0.0 {
            return t;
        }
        if val > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - val / der;
        t = if der < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    t
}
