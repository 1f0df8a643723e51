//! Halpern iteration `x_{n+1} = λ_{n+1}u ⊕ (1−λ_{n+1})Tx_n`, resolvent
//! points `z_t = tu ⊕ (1−t)Tz_t`, and per-step inequality checks.

mod closed_form;
mod inequalities;

use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{GeodesicSpace, GeometryError, NonexpansiveMap};
use crate::moduli::{Counterexample, ScalarSchedule};

pub use closed_form::ScaledRotation;
pub use inequalities::{check_trajectory_inequalities, SlackColumn, SlackKind, SlackReport, SLACK_TOL};

/// Step cap for the resolvent's Banach iteration.
pub const RESOLVENT_MAX_STEPS: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HalpernError {
    #[error("iterate left the domain at step {step}: {point}")]
    LeftDomain { step: u64, point: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("resolvent residual {residual:e} exceeds tolerance {tol:e} after {steps} steps (t = {t})")]
    Residual { t: f64, residual: f64, tol: f64, steps: u64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Everything needed to run one Halpern orbit.
pub struct HalpernConfig<S: GeodesicSpace> {
    pub space: Arc<S>,
    pub map: NonexpansiveMap<S::Point>,
    pub anchor: S::Point,
    pub start: S::Point,
    pub schedule: ScalarSchedule,
    pub horizon: u64,
}

impl<S: GeodesicSpace> Clone for HalpernConfig<S> {
    fn clone(&self) -> Self {
        HalpernConfig {
            space: Arc::clone(&self.space),
            map: self.map.clone(),
            anchor: self.anchor.clone(),
            start: self.start.clone(),
            schedule: self.schedule.clone(),
            horizon: self.horizon,
        }
    }
}

impl<S: GeodesicSpace> HalpernConfig<S>
where
    S::Point: 'static,
{
    pub fn validate(&self) -> Result<(), HalpernError> {
        if self.horizon == 0 {
            return Err(HalpernError::Argument("horizon must be at least 1".into()));
        }
        for (what, p) in [("anchor", &self.anchor), ("start", &self.start)] {
            if !self.space.contains(p) {
                return Err(HalpernError::Argument(format!("{what} {p:?} lies outside {}", self.space.descriptor())));
            }
        }
        Ok(())
    }

    /// Streams `(n, x_n, Tx_n)` for `n = 0, 1, …` without storing the orbit.
    pub fn iter(&self) -> HalpernIter<'_, S> {
        HalpernIter { cfg: self, n: 0, x: Some(self.start.clone()) }
    }
}

/// Streaming Halpern orbit; see [`HalpernConfig::iter`]. Unbounded: the
/// caller decides when to stop.
pub struct HalpernIter<'a, S: GeodesicSpace> {
    cfg: &'a HalpernConfig<S>,
    n: u64,
    x: Option<S::Point>,
}

impl<S: GeodesicSpace> Iterator for HalpernIter<'_, S>
where
    S::Point: 'static,
{
    type Item = Result<(u64, S::Point, S::Point), HalpernError>;

    fn next(&mut self) -> Option<Self::Item> {
        let x = self.x.take()?;
        let space = &*self.cfg.space;
        let tx = self.cfg.map.apply(&x);
        if !space.contains(&tx) {
            return Some(Err(HalpernError::LeftDomain { step: self.n, point: format!("T x_{} = {tx:?}", self.n) }));
        }
        let lambda = self.cfg.schedule.lambda_f64(self.n + 1);
        let next = space.geodesic_point(&self.cfg.anchor, &tx, 1.0 - lambda);
        if !space.contains(&next) {
            return Some(Err(HalpernError::LeftDomain { step: self.n + 1, point: format!("{next:?}") }));
        }
        let n = self.n;
        self.n += 1;
        self.x = Some(next);
        Some(Ok((n, x, tx)))
    }
}

/// A stored orbit `x_0..x_H` with the distances the bounds talk about.
#[derive(Debug, Clone)]
pub struct Trajectory<P> {
    pub points: Vec<P>,
    /// `Tx_0..Tx_H`.
    pub images: Vec<P>,
    /// `λ_0..λ_{H+1}` (index 0 unused).
    pub lambdas: Vec<f64>,
    /// `d(x_n, Tx_n)` for `n ≤ H`.
    pub asreg: Vec<f64>,
    /// `d(x_n, x_{n+1})` for `n < H`.
    pub step: Vec<f64>,
    /// `d(x_n, u)` for `n ≤ H`.
    pub to_anchor: Vec<f64>,
    /// `d(Tx_n, u)` for `n ≤ H`.
    pub image_to_anchor: Vec<f64>,
    /// `d(x_{n+1}, Tx_n)` for `n < H`.
    pub next_to_image: Vec<f64>,
    pub anchor: P,
    /// `d(u, Tu)`.
    pub anchor_defect: f64,
    pub m: u64,
}

impl<P> Trajectory<P> {
    pub fn horizon(&self) -> u64 {
        self.points.len() as u64 - 1
    }
}

/// Runs the orbit for `horizon` steps and caches every distance.
pub fn halpern_run<S: GeodesicSpace>(cfg: &HalpernConfig<S>) -> Result<Trajectory<S::Point>, HalpernError>
where
    S::Point: 'static,
{
    cfg.validate()?;
    let h = cfg.horizon as usize;
    let space = &*cfg.space;
    let mut points = Vec::with_capacity(h + 1);
    let mut images = Vec::with_capacity(h + 1);
    for item in cfg.iter().take(h + 1) {
        let (_, x, tx) = item?;
        points.push(x);
        images.push(tx);
    }
    let u = &cfg.anchor;
    let d = |a: &S::Point, b: &S::Point| space.distance(a, b);
    let asreg = points.iter().zip(&images).map(|(x, tx)| d(x, tx)).collect();
    let step = points.windows(2).map(|w| d(&w[0], &w[1])).collect();
    let to_anchor = points.iter().map(|x| d(x, u)).collect();
    let image_to_anchor = images.iter().map(|tx| d(tx, u)).collect();
    let next_to_image = points[1..].iter().zip(&images).map(|(x1, tx)| d(x1, tx)).collect();
    let tu = cfg.map.apply(u);
    Ok(Trajectory {
        lambdas: cfg.schedule.lambdas_f64(h + 1),
        asreg,
        step,
        to_anchor,
        image_to_anchor,
        next_to_image,
        anchor_defect: d(u, &tu),
        anchor: u.clone(),
        m: space.diameter_bound(),
        points,
        images,
    })
}

/// The fixed point `z_t` of `y ↦ tu ⊕ (1−t)Ty`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventPoint<P> {
    pub t: f64,
    pub anchor: P,
    pub z: P,
    /// `Tz`.
    pub image: P,
    /// `d(z, tu ⊕ (1−t)Tz)`.
    pub residual: f64,
    pub steps: u64,
}

/// Banach iteration from `y_0 = u` for `⌈ln(tol/M)/ln(1−t)⌉` steps, then
/// further steps until the residual is at most `tol` (capped at
/// [`RESOLVENT_MAX_STEPS`] in total). `t = 1` gives `z = u`.
pub fn resolvent_point<S: GeodesicSpace>(
    space: &S,
    map: &NonexpansiveMap<S::Point>,
    anchor: &S::Point,
    t: f64,
    tol: f64,
) -> Result<ResolventPoint<S::Point>, HalpernError>
where
    S::Point: 'static,
{
    if !(t > 0.0 && t <= 1.0) {
        return Err(HalpernError::Argument(format!("resolvent parameter t = {t} must lie in (0, 1]")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(HalpernError::Argument(format!("tolerance {tol} must be positive")));
    }
    if !space.contains(anchor) {
        return Err(HalpernError::Argument(format!("anchor {anchor:?} lies outside the domain")));
    }
    let m = space.diameter_bound() as f64;
    let step = |y: &S::Point| {
        let ty = map.apply(y);
        let next = space.geodesic_point(anchor, &ty, 1.0 - t);
        (next, ty)
    };
    let a_priori = if t >= 1.0 || tol >= m {
        1
    } else {
        ((tol / m).ln() / (1.0 - t).ln()).ceil().clamp(1.0, RESOLVENT_MAX_STEPS as f64) as u64
    };
    let mut y = anchor.clone();
    let mut steps = 0;
    let (mut next, mut ty) = step(&y);
    loop {
        if steps >= a_priori {
            let residual = space.distance(&y, &next);
            if residual <= tol || steps >= RESOLVENT_MAX_STEPS {
                if residual > tol {
                    return Err(HalpernError::Residual { t, residual, tol, steps });
                }
                return Ok(ResolventPoint { t, anchor: anchor.clone(), z: y, image: ty, residual, steps });
            }
        }
        y = next;
        (next, ty) = step(&y);
        if !space.contains(&y) {
            return Err(HalpernError::LeftDomain { step: steps, point: format!("resolvent iterate {y:?}") });
        }
        steps += 1;
    }
}

fn check_resolvent<P: PartialEq>(traj: &Trajectory<P>, z: &ResolventPoint<P>, t: f64) -> Result<(), HalpernError> {
    if z.anchor != traj.anchor {
        return Err(HalpernError::Argument("resolvent and trajectory use different anchors".into()));
    }
    if (z.t - t).abs() > 1e-15 * t.max(1.0) {
        return Err(HalpernError::Argument(format!("resolvent computed at t = {}, expected {t}", z.t)));
    }
    Ok(())
}

/// `γ_n^k = (k/(k+1))·d²(u, Tz) − d²(x_{n+1}, u)` for `n = 1..H−1`
/// (element 0 is `γ_1`), where `z` is the resolvent at `t = 1/(k+1)`.
pub fn gamma_sequence<S: GeodesicSpace>(
    space: &S,
    traj: &Trajectory<S::Point>,
    k: u64,
    z: &ResolventPoint<S::Point>,
) -> Result<Vec<f64>, HalpernError> {
    check_resolvent(traj, z, 1.0 / (k as f64 + 1.0))?;
    let c = gamma_constant(space, k, z);
    Ok(traj.to_anchor[2..].iter().map(|d| c - d * d).collect())
}

/// `(k/(k+1))·d²(u, Tz_k)`, the constant part of `γ_n^k`.
pub fn gamma_constant<S: GeodesicSpace>(space: &S, k: u64, z: &ResolventPoint<S::Point>) -> f64 {
    let d = space.distance(&z.anchor, &z.image);
    k as f64 / (k as f64 + 1.0) * d * d
}

/// `a_n = d²(y_n, Ty_n) + 2M·d(y_n, Ty_n)` with `y_n = x_{n+1}`, for
/// `n = 1..H−1` (element 0 is `a_1`).
pub fn a_sequence<P>(traj: &Trajectory<P>, m: u64) -> Vec<f64> {
    let m = m as f64;
    traj.asreg[2..].iter().map(|d| d * d + 2.0 * m * d).collect()
}

/// Which cached quantity [`first_index_satisfying`] watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Watched {
    /// `d(x_n, Tx_n)`.
    AsymptoticRegularity,
    /// `d(x_n, x_{n+1})`.
    Step,
}

/// Least `n` such that the watched quantity is `≤ ε` at every index from
/// `n` to the end of the trajectory.
pub fn first_index_satisfying<P>(traj: &Trajectory<P>, what: Watched, eps: f64) -> Option<u64> {
    let values = match what {
        Watched::AsymptoticRegularity => &traj.asreg,
        Watched::Step => &traj.step,
    };
    let bad = values.iter().rposition(|v| *v > eps);
    match bad {
        None if values.is_empty() => None,
        None => Some(0),
        Some(i) if i + 1 == values.len() => None,
        Some(i) => Some(i as u64 + 1),
    }
}

/// Outcome of a metastable-window search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSearch {
    Found(u64),
    /// No `N ≤ N_max` passed.
    NotFound,
    /// The window of this `N` runs past the data.
    Inconclusive(u64),
}

/// Least `N ≤ n_max` with `|a_n − a_m| ≤ ε` for all `n, m ∈ [N, N+g(N)]`.
/// Indices are 0-based: `seq[0] = a_0`.
pub fn find_metastable_window(seq: &[f64], eps: f64, g: &Counterexample, n_max: u64) -> WindowSearch {
    search_windows(seq.len(), g, n_max, |lo, hi| {
        let w = &seq[lo..=hi];
        let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min <= eps
    })
}

/// Metric version: `d(x_n, x_m) ≤ ε` for all `n, m ∈ [N, N+g(N)]`.
pub fn find_metastable_window_metric<S: GeodesicSpace>(
    space: &S,
    points: &[S::Point],
    eps: f64,
    g: &Counterexample,
    n_max: u64,
) -> WindowSearch {
    search_windows(points.len(), g, n_max, |lo, hi| {
        let w = &points[lo..=hi];
        // Cheap triangle-inequality bounds on the diameter first.
        let radius = w.iter().map(|p| space.distance(&w[0], p)).fold(0.0, f64::max);
        if radius > eps {
            return false;
        }
        if 2.0 * radius <= eps {
            return true;
        }
        (0..w.len()).all(|i| (i + 1..w.len()).all(|j| space.distance(&w[i], &w[j]) <= eps))
    })
}

fn search_windows(len: usize, g: &Counterexample, n_max: u64, mut passes: impl FnMut(usize, usize) -> bool) -> WindowSearch {
    for n in 0..=n_max {
        let end = n.saturating_add(g.eval_u64(n));
        if end >= len as u64 {
            return WindowSearch::Inconclusive(n);
        }
        if passes(n as usize, end as usize) {
            return WindowSearch::Found(n);
        }
    }
    WindowSearch::NotFound
}

/// Writes `n, asreg, step, to_anchor` and one column per slack series.
pub fn write_trajectory_csv<P>(traj: &Trajectory<P>, slacks: Option<&SlackReport>, mut out: impl Write) -> io::Result<()> {
    let cols: &[SlackColumn] = slacks.map(|r| r.columns.as_slice()).unwrap_or(&[]);
    write!(out, "n,asreg,step,to_anchor")?;
    for c in cols {
        write!(out, ",{}", c.name)?;
    }
    writeln!(out)?;
    let cell = |v: Option<&f64>| v.filter(|x| !x.is_nan()).map(|x| format!("{x:e}")).unwrap_or_default();
    for n in 0..traj.points.len() {
        write!(out, "{n},{},{},{}", cell(traj.asreg.get(n)), cell(traj.step.get(n)), cell(traj.to_anchor.get(n)))?;
        for c in cols {
            write!(out, ",{}", cell(c.values.get(n)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
