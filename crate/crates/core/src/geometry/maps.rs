use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GeodesicSpace, GeometryError, REL_TOL};

type MapFn<P> = dyn Fn(&P) -> P + Send + Sync;

/// A map `T: C → C` that is expected to satisfy `d(Tx, Ty) ≤ d(x, y)`.
///
/// Nonexpansiveness is not checked at construction; see [`verify_map`].
pub struct NonexpansiveMap<P> {
    f: Arc<MapFn<P>>,
    descriptor: String,
}

impl<P> Clone for NonexpansiveMap<P> {
    fn clone(&self) -> Self {
        NonexpansiveMap { f: Arc::clone(&self.f), descriptor: self.descriptor.clone() }
    }
}

impl<P> fmt::Debug for NonexpansiveMap<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NonexpansiveMap({})", self.descriptor)
    }
}

impl<P: Clone + fmt::Debug + Send + Sync + 'static> NonexpansiveMap<P> {
    pub fn new(descriptor: impl Into<String>, f: impl Fn(&P) -> P + Send + Sync + 'static) -> Self {
        NonexpansiveMap { f: Arc::new(f), descriptor: descriptor.into() }
    }

    pub fn apply(&self, x: &P) -> P {
        (self.f)(x)
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn identity() -> Self {
        Self::new("identity", |x: &P| x.clone())
    }

    pub fn constant<S: GeodesicSpace<Point = P>>(space: &S, c: P) -> Result<Self, GeometryError> {
        if !space.contains(&c) {
            return Err(GeometryError::Argument(format!("constant {c:?} lies outside the domain")));
        }
        let coords = space.coordinates(&c);
        Ok(Self::new(format!("const({coords:?})"), move |_: &P| c.clone()))
    }

    /// `T₁ ∘ T₂`.
    pub fn compose(t1: &Self, t2: &Self) -> Self {
        let (f1, f2) = (Arc::clone(&t1.f), Arc::clone(&t2.f));
        Self::new(format!("compose({},{})", t1.descriptor, t2.descriptor), move |x: &P| f1(&f2(x)))
    }

    /// `x ↦ (1−λ)T₁x ⊕ λT₂x`; nonexpansive by (W4).
    pub fn w_blend<S>(space: Arc<S>, t1: &Self, t2: &Self, lambda: f64) -> Result<Self, GeometryError>
    where
        S: GeodesicSpace<Point = P> + 'static,
    {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(GeometryError::BadLambda(lambda));
        }
        let (f1, f2) = (Arc::clone(&t1.f), Arc::clone(&t2.f));
        let desc = format!("blend({},{},{lambda})", t1.descriptor, t2.descriptor);
        Ok(Self::new(desc, move |x: &P| space.geodesic_point(&f1(x), &f2(x), lambda)))
    }

    /// Metric projection onto the closed ball `B(center, radius)`.
    ///
    /// In a CAT(0) space this is `x ↦ W(c, x, r/d(c,x))` outside the ball.
    pub fn ball_projection<S>(space: Arc<S>, center: P, radius: f64) -> Result<Self, GeometryError>
    where
        S: GeodesicSpace<Point = P> + 'static,
    {
        if !space.contains(&center) {
            return Err(GeometryError::Argument(format!("projection center {center:?} lies outside the domain")));
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(GeometryError::Argument(format!("projection radius {radius} must be nonnegative")));
        }
        let desc = format!("project_ball({:?},{radius})", space.coordinates(&center));
        Ok(Self::new(desc, move |x: &P| {
            let d = space.distance(&center, x);
            if d <= radius {
                x.clone()
            } else {
                space.geodesic_point(&center, x, radius / d)
            }
        }))
    }
}

/// Sampled evidence for nonexpansiveness and self-mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct MapReport {
    pub samples: usize,
    /// Largest `d(Tx,Ty) − d(x,y)` seen.
    pub max_excess: f64,
    /// Largest `d(Tx,Ty)/d(x,y)` over pairs with `d(x,y) > 1e-6`.
    pub max_quotient: f64,
    /// Number of sampled images outside the domain.
    pub escapes: usize,
}

impl MapReport {
    pub fn pass(&self) -> bool {
        self.max_excess <= REL_TOL && self.max_quotient <= 1.0 + REL_TOL && self.escapes == 0
    }
}

/// Samples pairs of points and measures how far `map` is from being a
/// nonexpansive self-map of the domain.
pub fn verify_map<S: GeodesicSpace>(space: &S, map: &NonexpansiveMap<S::Point>, samples: usize, seed: u64) -> MapReport
where
    S::Point: 'static,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MapReport { samples, max_excess: f64::NEG_INFINITY, max_quotient: 0.0, escapes: 0 };
    for _ in 0..samples {
        let x = space.sample(&mut rng);
        let y = space.sample(&mut rng);
        let (tx, ty) = (map.apply(&x), map.apply(&y));
        for t in [&tx, &ty] {
            if !space.contains(t) {
                report.escapes += 1;
            }
        }
        let dxy = space.distance(&x, &y);
        let dt = space.distance(&tx, &ty);
        report.max_excess = report.max_excess.max(dt - dxy);
        if dxy > 1e-6 {
            report.max_quotient = report.max_quotient.max(dt / dxy);
        }
    }
    report
}
