use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::geometry::{EuclideanBall, GeodesicSpace, GeometryError, NonexpansiveMap};

/// `Tx = c + ρR(x − c)` on a Euclidean ball about the origin, where `R`
/// rotates every coordinate pair `(2i, 2i+1)` by `2πp/q` (a trailing odd
/// coordinate is only scaled).
///
/// Under the harmonic schedule `λ_n = 1/(n+1)` the Halpern orbit has a
/// closed form: with `y_n = (n+1)(x_n − c)` one gets `y_{n+1} = ρR y_n + (u − c)`,
/// so `y_n = (ρR)^n y_0 + Σ_{i<n} (ρR)^i (u − c)`. This allows jumping to
/// any index without running the orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRotation {
    center: Vec<f64>,
    rho: f64,
    p: u64,
    q: u64,
}

impl ScaledRotation {
    /// Requires `|c|(1+ρ) ≤ r(1−ρ)`, which makes `T` a self-map of the ball.
    pub fn new(ball: &EuclideanBall, center: Vec<f64>, rho: f64, p: u64, q: u64) -> Result<Self, GeometryError> {
        if center.len() != ball.dim() {
            return Err(GeometryError::Argument("center dimension mismatch".into()));
        }
        if !(0.0..=1.0).contains(&rho) || q == 0 {
            return Err(GeometryError::Argument(format!("need ρ ∈ [0,1] and q ≥ 1, got ρ = {rho}, q = {q}")));
        }
        let c = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        if c * (1.0 + rho) > ball.radius() * (1.0 - rho) * (1.0 + 1e-12) {
            return Err(GeometryError::Argument(format!("|c| = {c} too large for ρ = {rho} in radius {}", ball.radius())));
        }
        Ok(ScaledRotation { center, rho, p: p % q, q })
    }

    pub fn descriptor(&self) -> String {
        format!("scaled_rotation({:?},{},{}/{})", self.center, self.rho, self.p, self.q)
    }

    /// `e^{2πi·(n·p mod q)/q}`, with the reduction done in integers.
    fn turn(&self, n: u64) -> Complex64 {
        let k = (n as u128 * self.p as u128 % self.q as u128) as f64;
        Complex64::from_polar(1.0, TAU * k / self.q as f64)
    }

    fn blocks(&self) -> usize {
        self.center.len().div_ceil(2)
    }

    fn block(v: &[f64], b: usize) -> Complex64 {
        Complex64::new(v[2 * b], v.get(2 * b + 1).copied().unwrap_or(0.0))
    }

    fn put(v: &mut [f64], b: usize, z: Complex64) {
        v[2 * b] = z.re;
        if let Some(slot) = v.get_mut(2 * b + 1) {
            *slot = z.im;
        }
    }

    /// Multiplier of block `b` raised to the `n`-th power.
    fn power(&self, b: usize, n: u64) -> Complex64 {
        let r = self.rho.powf(n as f64);
        if 2 * b + 1 < self.center.len() {
            self.turn(n) * r
        } else {
            Complex64::new(r, 0.0)
        }
    }

    fn multiplier(&self, b: usize) -> Complex64 {
        self.power(b, 1)
    }

    pub fn map(&self) -> NonexpansiveMap<Vec<f64>> {
        let me = self.clone();
        NonexpansiveMap::new(self.descriptor(), move |x: &Vec<f64>| {
            let mut out = me.center.clone();
            for b in 0..me.blocks() {
                let w = Self::block(x, b) - Self::block(&me.center, b);
                Self::put(&mut out, b, Self::block(&me.center, b) + me.multiplier(b) * w);
            }
            out
        })
    }

    /// `x_n` of the Halpern orbit with `λ_n = 1/(n+1)`, anchor `u`, start `x0`.
    pub fn harmonic_iterate(&self, u: &[f64], x0: &[f64], n: u64) -> Vec<f64> {
        let mut out = self.center.clone();
        for b in 0..self.blocks() {
            let c = Self::block(&self.center, b);
            let (y0, du) = (Self::block(x0, b) - c, Self::block(u, b) - c);
            let a = self.multiplier(b);
            let an = self.power(b, n);
            let one = Complex64::new(1.0, 0.0);
            let geometric = if (one - a).norm() < 1e-300 { Complex64::new(n as f64, 0.0) } else { (one - an) / (one - a) };
            let y = an * y0 + geometric * du;
            Self::put(&mut out, b, c + y / (n as f64 + 1.0));
        }
        out
    }

    /// The resolvent point `z_t`: `(z − c) = t(u − c) / (1 − (1−t)ρR)` blockwise.
    pub fn resolvent(&self, u: &[f64], t: f64) -> Vec<f64> {
        let mut out = self.center.clone();
        for b in 0..self.blocks() {
            let c = Self::block(&self.center, b);
            let w = (Self::block(u, b) - c) * t / (Complex64::new(1.0, 0.0) - self.multiplier(b) * (1.0 - t));
            Self::put(&mut out, b, c + w);
        }
        out
    }

    /// `d(x_n, Tx_n)` for the closed-form orbit, computed from its point.
    pub fn asreg_at(&self, ball: &EuclideanBall, u: &[f64], x0: &[f64], n: u64) -> f64 {
        let x = self.harmonic_iterate(u, x0, n);
        let tx = self.map().apply(&x);
        ball.distance(&x, &tx)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::halpern::{halpern_run, resolvent_point, HalpernConfig};
    use crate::moduli::harmonic_schedule;

    #[test]
    fn matches_stepwise_orbit() {
        for dim in [1usize, 2, 3, 4, 8] {
            let ball = Arc::new(EuclideanBall::new(dim, 0.5).unwrap());
            let center: Vec<f64> = (0..dim).map(|i| 0.01 * (i as f64 + 1.0) / dim as f64).collect();
            let rot = ScaledRotation::new(&ball, center, 0.9, 3, 7).unwrap();
            let u: Vec<f64> = (0..dim).map(|i| if i == 0 { 0.3 } else { -0.1 / dim as f64 }).collect();
            let x0: Vec<f64> = (0..dim).map(|i| if i == 1 { -0.4 } else { 0.05 }).collect();
            let cfg = HalpernConfig {
                space: ball.clone(),
                map: rot.map(),
                anchor: u.clone(),
                start: x0.clone(),
                schedule: harmonic_schedule(),
                horizon: 3000,
            };
            let traj = halpern_run(&cfg).unwrap();
            for n in [0u64, 1, 2, 10, 500, 2999, 3000] {
                let closed = rot.harmonic_iterate(&u, &x0, n);
                assert!(ball.distance(&closed, &traj.points[n as usize]) < 1e-12, "dim {dim}, n {n}");
            }
            let z = resolvent_point(&*ball, &cfg.map, &u, 0.2, 1e-13).unwrap();
            assert!(ball.distance(&z.z, &rot.resolvent(&u, 0.2)) < 1e-12);
        }
    }

    #[test]
    fn rejects_non_self_maps() {
        let ball = EuclideanBall::new(2, 0.5).unwrap();
        assert!(ScaledRotation::new(&ball, vec![0.1, 0.0], 0.9, 1, 4).is_err());
        assert!(ScaledRotation::new(&ball, vec![0.01, 0.0], 1.5, 1, 4).is_err());
        assert!(ScaledRotation::new(&ball, vec![0.01, 0.0], 0.9, 1, 0).is_err());
    }
}
