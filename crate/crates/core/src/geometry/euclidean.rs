use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GeodesicSpace, GeometryError, NonexpansiveMap, POINT_EQ_TOL};

/// Closed Euclidean ball of radius `r` about the origin of `ℝ^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanBall {
    dim: usize,
    radius: f64,
    m: u64,
}

impl EuclideanBall {
    /// Ball with the smallest integer diameter bound `⌈2r⌉`.
    pub fn new(dim: usize, radius: f64) -> Result<Self, GeometryError> {
        Self::with_bound(dim, radius, (2.0 * radius).ceil().max(1.0) as u64)
    }

    pub fn with_bound(dim: usize, radius: f64, m: u64) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::InvalidModel("dimension must be positive".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidModel(format!("radius {radius} must be positive")));
        }
        if m == 0 || (m as f64) < 2.0 * radius {
            return Err(GeometryError::DiameterBound { declared: m, actual: 2.0 * radius });
        }
        Ok(EuclideanBall { dim, radius, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn check_point(&self, p: &[f64], what: &str) -> Result<(), GeometryError> {
        if p.len() != self.dim || !self.contains(&p.to_vec()) {
            return Err(GeometryError::Argument(format!("{what} {p:?} is not a point of {}", self.descriptor())));
        }
        Ok(())
    }

    /// Rotation by `angle` in the coordinate plane `(i, j)` about `center`.
    ///
    /// Only rotations about the ball's center map the ball into itself.
    pub fn rotation(&self, angle: f64, plane: (usize, usize), center: &[f64]) -> Result<NonexpansiveMap<Vec<f64>>, GeometryError> {
        let (i, j) = plane;
        if i >= self.dim || j >= self.dim || i == j {
            return Err(GeometryError::Argument(format!("rotation plane ({i},{j}) invalid in dimension {}", self.dim)));
        }
        self.check_point(center, "rotation center")?;
        if center.iter().any(|c| c.abs() > POINT_EQ_TOL) {
            return Err(GeometryError::Argument("rotations must fix the center of the ball".into()));
        }
        let (s, c) = angle.sin_cos();
        Ok(NonexpansiveMap::new(format!("rotate({angle},{i},{j})"), move |x: &Vec<f64>| {
            let mut y = x.clone();
            y[i] = c * x[i] - s * x[j];
            y[j] = s * x[i] + c * x[j];
            y
        }))
    }

    /// Coordinatewise clamp onto the box `[lo, hi]`, which must contain the origin.
    pub fn box_projection(&self, lo: &[f64], hi: &[f64]) -> Result<NonexpansiveMap<Vec<f64>>, GeometryError> {
        if lo.len() != self.dim || hi.len() != self.dim {
            return Err(GeometryError::Argument("box corners must match the dimension".into()));
        }
        if lo.iter().zip(hi).any(|(a, b)| !(*a <= 0.0 && 0.0 <= *b)) {
            return Err(GeometryError::Argument("box must contain the origin".into()));
        }
        let (lo, hi) = (lo.to_vec(), hi.to_vec());
        let desc = format!("project_box({lo:?},{hi:?})");
        Ok(NonexpansiveMap::new(desc, move |x: &Vec<f64>| {
            x.iter().zip(lo.iter().zip(&hi)).map(|(v, (a, b))| v.clamp(*a, *b)).collect()
        }))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl GeodesicSpace for EuclideanBall {
    type Point = Vec<f64>;

    fn descriptor(&self) -> String {
        format!("euclidean:ball:{}:{}", self.dim, self.radius)
    }

    fn distance(&self, x: &Vec<f64>, y: &Vec<f64>) -> f64 {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    fn geodesic_point(&self, x: &Vec<f64>, y: &Vec<f64>, lambda: f64) -> Vec<f64> {
        x.iter().zip(y).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect()
    }

    fn contains(&self, p: &Vec<f64>) -> bool {
        p.len() == self.dim && p.iter().all(|v| v.is_finite()) && norm(p) <= self.radius * (1.0 + 1e-12)
    }

    fn diameter_bound(&self) -> u64 {
        self.m
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let p: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if norm(&p) <= 1.0 {
                return p.into_iter().map(|v| v * self.radius).collect();
            }
        }
    }

    fn coordinates(&self, p: &Vec<f64>) -> Vec<f64> {
        p.clone()
    }

    fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}
