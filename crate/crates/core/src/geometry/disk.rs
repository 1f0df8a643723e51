use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GeodesicSpace, GeometryError, NonexpansiveMap, POINT_EQ_TOL};

/// Margin keeping points away from the ideal boundary.
const BOUNDARY_MARGIN: f64 = 1e-12;

/// Closed hyperbolic ball of radius `R` about the origin of the Poincaré disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareDisk {
    radius: f64,
    euclid_radius: f64,
    m: u64,
}

fn c(p: &[f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn p(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Möbius translation taking `a` to the origin.
fn to_origin(a: Complex64, z: Complex64) -> Complex64 {
    (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z)
}

fn from_origin(a: Complex64, w: Complex64) -> Complex64 {
    (w + a) / (Complex64::new(1.0, 0.0) + a.conj() * w)
}

impl PoincareDisk {
    /// Ball of hyperbolic radius `radius` with diameter bound `⌈2·radius⌉`.
    pub fn new(radius: f64) -> Result<Self, GeometryError> {
        Self::with_bound(radius, (2.0 * radius).ceil().max(1.0) as u64)
    }

    pub fn with_bound(radius: f64, m: u64) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidModel(format!("radius {radius} must be positive")));
        }
        let euclid_radius = (radius / 2.0).tanh();
        if euclid_radius > 1.0 - BOUNDARY_MARGIN {
            return Err(GeometryError::InvalidModel(format!("radius {radius} reaches the boundary margin")));
        }
        if m == 0 || (m as f64) < 2.0 * radius {
            return Err(GeometryError::DiameterBound { declared: m, actual: 2.0 * radius });
        }
        Ok(PoincareDisk { radius, euclid_radius, m })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Euclidean radius of the domain inside the unit disk.
    pub fn euclidean_radius(&self) -> f64 {
        self.euclid_radius
    }

    /// Hyperbolic rotation by `angle` about `center`, which must be the origin.
    pub fn rotation(&self, angle: f64, center: &[f64; 2]) -> Result<NonexpansiveMap<[f64; 2]>, GeometryError> {
        if c(center).norm() > POINT_EQ_TOL {
            return Err(GeometryError::Argument("rotations must fix the center of the domain".into()));
        }
        let r = Complex64::from_polar(1.0, angle);
        Ok(NonexpansiveMap::new(format!("rotate({angle})"), move |x: &[f64; 2]| p(r * c(x))))
    }
}

impl GeodesicSpace for PoincareDisk {
    type Point = [f64; 2];

    fn descriptor(&self) -> String {
        format!("disk:{}", self.radius)
    }

    fn distance(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        let r = to_origin(c(x), c(y)).norm().min(1.0 - f64::EPSILON);
        2.0 * r.atanh()
    }

    fn geodesic_point(&self, x: &[f64; 2], y: &[f64; 2], lambda: f64) -> [f64; 2] {
        if lambda <= 0.0 {
            return *x;
        }
        if lambda >= 1.0 {
            return *y;
        }
        let a = c(x);
        let w = to_origin(a, c(y));
        let r = w.norm();
        if r == 0.0 {
            return *x;
        }
        let target = (lambda * r.atanh()).tanh();
        p(from_origin(a, w * (target / r)))
    }

    fn contains(&self, q: &[f64; 2]) -> bool {
        let n = c(q).norm();
        n.is_finite() && n <= self.euclid_radius * (1.0 + 1e-12) && n <= 1.0 - BOUNDARY_MARGIN
    }

    fn diameter_bound(&self) -> u64 {
        self.m
    }

    /// Uniform with respect to hyperbolic area.
    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        let rho = self.euclid_radius;
        let floor = 1.0 - rho * rho;
        loop {
            let z = Complex64::new(rng.gen_range(-rho..=rho), rng.gen_range(-rho..=rho));
            let n2 = z.norm_sqr();
            if n2 > rho * rho {
                continue;
            }
            let accept = (floor / (1.0 - n2)).powi(2);
            if rng.gen::<f64>() <= accept {
                return p(z);
            }
        }
    }

    fn coordinates(&self, q: &[f64; 2]) -> Vec<f64> {
        q.to_vec()
    }

    fn origin(&self) -> [f64; 2] {
        [0.0, 0.0]
    }
}
