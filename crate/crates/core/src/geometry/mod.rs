//! W-hyperbolic spaces: the abstract interface, concrete CAT(0) models and
//! nonexpansive map combinators.
//!
//! The convexity map follows the convention `W(x, y, λ) = (1−λ)x ⊕ λy`, so
//! `W(x, y, 0) = x` and `W(x, y, 1) = y`.

mod disk;
mod euclidean;
mod maps;
mod tree;

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use disk::PoincareDisk;
pub use euclidean::EuclideanBall;
pub use maps::{verify_map, MapReport, NonexpansiveMap};
pub use tree::{MetricTree, TreePoint};

/// Relative slack allowed in inequality checks: `slack ≥ −REL_TOL·(1+|RHS|)`.
pub const REL_TOL: f64 = 1e-9;
/// Distance under which two points are considered equal.
pub const POINT_EQ_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {0} lies outside the domain")]
    OutsideDomain(String),
    #[error("convexity parameter {0} is outside [0, 1]")]
    BadLambda(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("declared diameter bound {declared} is below the domain diameter {actual}")]
    DiameterBound { declared: u64, actual: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// A uniquely geodesic metric space with a convex, bounded domain.
pub trait GeodesicSpace: Send + Sync {
    type Point: Clone + fmt::Debug + PartialEq + Send + Sync;

    /// Descriptor string this space was built from.
    fn descriptor(&self) -> String;

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> f64;

    /// `W(x, y, λ)`: the point at distance `λ·d(x,y)` from `x` on `[x, y]`.
    fn geodesic_point(&self, x: &Self::Point, y: &Self::Point, lambda: f64) -> Self::Point;

    fn contains(&self, p: &Self::Point) -> bool;

    /// Declared integer diameter bound `M`.
    fn diameter_bound(&self) -> u64;

    /// A random point of the domain.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Self::Point;

    /// Flat coordinates, used for export and coordinate comparisons.
    fn coordinates(&self, p: &Self::Point) -> Vec<f64>;

    /// A distinguished interior point of the domain.
    fn origin(&self) -> Self::Point;
}

fn check_member<S: GeodesicSpace>(space: &S, p: &S::Point) -> Result<(), GeometryError> {
    if space.contains(p) {
        Ok(())
    } else {
        Err(GeometryError::OutsideDomain(format!("{p:?}")))
    }
}

/// `d(x, y)` with domain checks.
pub fn dist<S: GeodesicSpace>(space: &S, x: &S::Point, y: &S::Point) -> Result<f64, GeometryError> {
    check_member(space, x)?;
    check_member(space, y)?;
    Ok(space.distance(x, y))
}

/// `(1−λ)x ⊕ λy` with domain and argument checks.
pub fn combine<S: GeodesicSpace>(space: &S, x: &S::Point, y: &S::Point, lambda: f64) -> Result<S::Point, GeometryError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(GeometryError::BadLambda(lambda));
    }
    check_member(space, x)?;
    check_member(space, y)?;
    Ok(space.geodesic_point(x, y, lambda))
}

/// `RHS − LHS` of `d²((1−λ)x⊕λy, z) ≤ (1−λ)d²(x,z) + λd²(y,z) − λ(1−λ)d²(x,y)`.
pub fn check_cn<S: GeodesicSpace>(space: &S, x: &S::Point, y: &S::Point, z: &S::Point, lambda: f64) -> f64 {
    let (lhs, rhs) = cn_sides(space, x, y, z, lambda);
    rhs - lhs
}

fn cn_sides<S: GeodesicSpace>(space: &S, x: &S::Point, y: &S::Point, z: &S::Point, lambda: f64) -> (f64, f64) {
    let m = space.geodesic_point(x, y, lambda);
    let sq = |a: &S::Point, b: &S::Point| space.distance(a, b).powi(2);
    let lhs = sq(&m, z);
    let rhs = (1.0 - lambda) * sq(x, z) + lambda * sq(y, z) - lambda * (1.0 - lambda) * sq(x, y);
    (lhs, rhs)
}

/// Maximum normalized violations found by [`check_w_axioms`].
///
/// Each entry is `max (LHS − RHS)/(1 + |RHS|)` over the samples (absolute
/// deviation for equalities), so a value `≤ REL_TOL` means the axiom held.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxiomReport {
    pub samples: usize,
    pub metric: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub cn: f64,
    /// `d(x, W(x,y,λ)) = λ d(x,y)` and `d(y, W(x,y,λ)) = (1−λ) d(x,y)`.
    pub geodesic: f64,
    pub diameter: f64,
}

impl AxiomReport {
    pub fn entries(&self) -> [(&'static str, f64); 8] {
        [
            ("metric", self.metric),
            ("W1", self.w1),
            ("W2", self.w2),
            ("W3", self.w3),
            ("W4", self.w4),
            ("CN", self.cn),
            ("geodesic", self.geodesic),
            ("diameter", self.diameter),
        ]
    }

    pub fn pass(&self) -> bool {
        self.entries().iter().all(|(_, v)| *v <= REL_TOL)
    }

    pub fn worst(&self) -> f64 {
        self.entries().iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / (1.0 + rhs.abs())
}

fn deviation(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (1.0 + rhs.abs())
}

fn sample_lambda(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen::<f64>(),
    }
}

/// Evaluates the metric axioms, (W1)–(W4), the CN inequality, the geodesic
/// identities and the declared diameter bound on `samples` random tuples.
pub fn check_w_axioms<S: GeodesicSpace>(space: &S, samples: usize, seed: u64) -> Result<AxiomReport, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = AxiomReport { samples, ..Default::default() };
    let mut worst = [f64::NEG_INFINITY; 8];
    let m = space.diameter_bound() as f64;
    for _ in 0..samples {
        let x = space.sample(&mut rng);
        let y = space.sample(&mut rng);
        let z = space.sample(&mut rng);
        let w = space.sample(&mut rng);
        for p in [&x, &y, &z, &w] {
            check_member(space, p)?;
        }
        let lam = sample_lambda(&mut rng);
        let lam2 = sample_lambda(&mut rng);
        let d = |a: &S::Point, b: &S::Point| space.distance(a, b);
        let dxy = d(&x, &y);

        let metric = excess(d(&x, &z), dxy + d(&y, &z))
            .max(deviation(dxy, d(&y, &x)))
            .max(d(&x, &x));
        let wxy = space.geodesic_point(&x, &y, lam);
        let w1 = excess(d(&z, &wxy), (1.0 - lam) * d(&z, &x) + lam * d(&z, &y));
        let wxy2 = space.geodesic_point(&x, &y, lam2);
        let w2 = deviation(d(&wxy, &wxy2), (lam - lam2).abs() * dxy).max(deviation(
            d(&space.geodesic_point(&x, &y, 0.0), &space.geodesic_point(&x, &y, 1.0)),
            dxy,
        ));
        let w3 = d(&wxy, &space.geodesic_point(&y, &x, 1.0 - lam));
        let w4 = excess(
            d(&space.geodesic_point(&x, &z, lam), &space.geodesic_point(&y, &w, lam)),
            (1.0 - lam) * dxy + lam * d(&z, &w),
        );
        let (cl, cr) = cn_sides(space, &x, &y, &z, lam);
        let cn = excess(cl, cr);
        let geo = deviation(d(&x, &wxy), lam * dxy).max(deviation(d(&y, &wxy), (1.0 - lam) * dxy));
        let diam = excess(dxy, m);
        for (slot, v) in worst.iter_mut().zip([metric, w1, w2, w3, w4, cn, geo, diam]) {
            *slot = slot.max(v);
        }
    }
    [r.metric, r.w1, r.w2, r.w3, r.w4, r.cn, r.geodesic, r.diameter] = worst;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_examples() {
        let s = EuclideanBall::new(2, 10.0).unwrap();
        assert_eq!(dist(&s, &vec![0.0, 0.0], &vec![3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(combine(&s, &vec![0.0, 0.0], &vec![4.0, 0.0], 0.25).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(combine(&s, &vec![0.0, 0.0], &vec![4.0, 0.0], 1.5), Err(GeometryError::BadLambda(_))));
        assert!(matches!(dist(&s, &vec![11.0, 0.0], &vec![0.0, 0.0]), Err(GeometryError::OutsideDomain(_))));
        let slack = check_cn(&s, &vec![0.0, 0.0], &vec![2.0, 0.0], &vec![1.0, 1.0], 0.5);
        assert!(slack.abs() < 1e-15);
    }

    #[test]
    fn cn_trivial_at_endpoints() {
        let s = PoincareDisk::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (x, y, z) = (s.sample(&mut rng), s.sample(&mut rng), s.sample(&mut rng));
            assert!(check_cn(&s, &x, &y, &z, 0.0).abs() < 1e-12);
            assert!(check_cn(&s, &x, &y, &z, rng.gen()) >= -1e-9);
        }
    }

    /// A space whose convexity map always returns the midpoint.
    struct Broken(EuclideanBall);

    impl GeodesicSpace for Broken {
        type Point = Vec<f64>;
        fn descriptor(&self) -> String {
            "broken".into()
        }
        fn distance(&self, x: &Vec<f64>, y: &Vec<f64>) -> f64 {
            self.0.distance(x, y)
        }
        fn geodesic_point(&self, x: &Vec<f64>, y: &Vec<f64>, _: f64) -> Vec<f64> {
            self.0.geodesic_point(x, y, 0.5)
        }
        fn contains(&self, p: &Vec<f64>) -> bool {
            self.0.contains(p)
        }
        fn diameter_bound(&self) -> u64 {
            self.0.diameter_bound()
        }
        fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
            self.0.sample(rng)
        }
        fn coordinates(&self, p: &Vec<f64>) -> Vec<f64> {
            p.clone()
        }
        fn origin(&self) -> Vec<f64> {
            self.0.origin()
        }
    }

    #[test]
    fn broken_combine_is_detected() {
        let r = check_w_axioms(&Broken(EuclideanBall::new(2, 1.0).unwrap()), 100, 1).unwrap();
        assert!(r.w2 > REL_TOL);
        assert!(!r.pass());
    }

    #[test]
    fn models_pass_axioms() {
        for d in [1, 2, 4, 8] {
            let r = check_w_axioms(&EuclideanBall::new(d, 1.0).unwrap(), 2000, 11).unwrap();
            assert!(r.pass(), "euclidean d={d}: {r:?}");
        }
        let r = check_w_axioms(&MetricTree::tripod(1.0, 2.0, 3.0).unwrap(), 2000, 5).unwrap();
        assert!(r.pass(), "{r:?}");
        let r = check_w_axioms(&MetricTree::random(10, 99, 2.0).unwrap(), 2000, 5).unwrap();
        assert!(r.pass(), "{r:?}");
        let r = check_w_axioms(&PoincareDisk::new(1.0).unwrap(), 2000, 5).unwrap();
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn euclidean_combine_is_affine() {
        let s = EuclideanBall::new(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let (x, y) = (s.sample(&mut rng), s.sample(&mut rng));
            let l: f64 = rng.gen();
            let w = s.geodesic_point(&x, &y, l);
            for i in 0..3 {
                assert_eq!(w[i], (1.0 - l) * x[i] + l * y[i]);
            }
        }
    }
}
