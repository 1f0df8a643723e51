use crate::geometry::GeodesicSpace;

use super::{HalpernError, ResolventPoint, Trajectory};

/// Absolute slack allowed for trajectory inequalities and equalities.
pub const SLACK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackKind {
    /// Value is `RHS − LHS`; passes when `≥ −SLACK_TOL`.
    Inequality,
    /// Value is `|LHS − RHS|`; passes when `≤ SLACK_TOL`.
    Equality,
}

/// One checked relation evaluated along the trajectory.
///
/// `values[n]` belongs to step `n`; NaN where the relation does not apply.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackColumn {
    pub name: String,
    pub kind: SlackKind,
    pub values: Vec<f64>,
}

impl SlackColumn {
    fn new(name: impl Into<String>, kind: SlackKind, len: usize) -> Self {
        SlackColumn { name: name.into(), kind, values: vec![f64::NAN; len] }
    }

    /// Worst value and its index: minimum slack, or maximum deviation.
    pub fn worst(&self) -> Option<(usize, f64)> {
        let valid = self.values.iter().enumerate().filter(|(_, v)| !v.is_nan());
        match self.kind {
            SlackKind::Inequality => valid.min_by(|a, b| a.1.total_cmp(b.1)),
            SlackKind::Equality => valid.max_by(|a, b| a.1.total_cmp(b.1)),
        }
        .map(|(i, v)| (i, *v))
    }

    pub fn violations(&self) -> usize {
        self.values
            .iter()
            .filter(|v| match self.kind {
                SlackKind::Inequality => **v < -SLACK_TOL,
                SlackKind::Equality => **v > SLACK_TOL,
            })
            .count()
    }

    pub fn pass(&self) -> bool {
        self.violations() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackReport {
    pub columns: Vec<SlackColumn>,
}

impl SlackReport {
    pub fn pass(&self) -> bool {
        self.columns.iter().all(SlackColumn::pass)
    }

    pub fn violations(&self) -> usize {
        self.columns.iter().map(SlackColumn::violations).sum()
    }

    pub fn column(&self, name: &str) -> Option<&SlackColumn> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// Evaluates the per-step relations of the Halpern orbit, plus, for each
/// resolvent point `z_t`, the distance recursion towards `z_t` and the
/// bound on `d²(y_n, z_t)` with `y_n = x_{n+1}`.
pub fn check_trajectory_inequalities<S: GeodesicSpace>(
    space: &S,
    traj: &Trajectory<S::Point>,
    resolvents: &[ResolventPoint<S::Point>],
) -> Result<SlackReport, HalpernError> {
    let len = traj.points.len();
    let h = len - 1;
    let m = traj.m as f64;
    let lam = &traj.lambdas;
    let du_tu = traj.anchor_defect;
    let (asreg, step, xu, txu) = (&traj.asreg, &traj.step, &traj.to_anchor, &traj.image_to_anchor);

    use SlackKind::{Equality, Inequality};
    let mut eq_image = SlackColumn::new("eq_next_image", Equality, len);
    let mut eq_anchor = SlackColumn::new("eq_next_anchor", Equality, len);
    let mut image_anchor = SlackColumn::new("image_anchor", Inequality, len);
    let mut asreg_step = SlackColumn::new("asreg_via_step", Inequality, len);
    let mut next_anchor = SlackColumn::new("next_anchor", Inequality, len);
    let mut step_direct = SlackColumn::new("step_direct", Inequality, len);
    let mut step_recursive = SlackColumn::new("step_recursive", Inequality, len);
    let mut asreg_bounded = SlackColumn::new("asreg_via_step_bounded", Inequality, len);
    let mut step_bounded = SlackColumn::new("step_recursive_bounded", Inequality, len);

    for n in 0..h {
        let l1 = lam[n + 1];
        eq_image.values[n] = (traj.next_to_image[n] - l1 * txu[n]).abs();
        eq_anchor.values[n] = (xu[n + 1] - (1.0 - l1) * txu[n]).abs();
        image_anchor.values[n] = du_tu + xu[n] - txu[n];
        asreg_step.values[n] = step[n] + l1 * txu[n] - asreg[n];
        next_anchor.values[n] = (1.0 - l1) * (du_tu + xu[n]) - xu[n + 1];
        step_direct.values[n] = l1 * xu[n] + (1.0 - l1) * asreg[n] - step[n];
        if n >= 1 {
            let dl = (l1 - lam[n]).abs();
            step_recursive.values[n] = (1.0 - l1) * step[n - 1] + dl * txu[n - 1] - step[n];
            asreg_bounded.values[n] = step[n] + 2.0 * m * l1 - asreg[n];
            step_bounded.values[n] = (1.0 - l1) * step[n - 1] + 2.0 * m * dl - step[n];
        }
    }
    let mut columns =
        vec![eq_image, eq_anchor, image_anchor, asreg_step, next_anchor, step_direct, step_recursive, asreg_bounded, step_bounded];

    for z in resolvents {
        if z.anchor != traj.anchor {
            return Err(HalpernError::Argument(format!("resolvent at t = {} uses a different anchor", z.t)));
        }
        let t = z.t;
        let du_tz = space.distance(&z.anchor, &z.image);
        let c = (1.0 - t) * du_tz * du_tz;
        let dz: Vec<f64> = traj.points.iter().map(|x| space.distance(x, &z.z)).collect();
        let mut recursion = SlackColumn::new(format!("resolvent_recursion[t={t}]"), Inequality, len);
        let mut yn_bound = SlackColumn::new(format!("resolvent_distance[t={t}]"), Inequality, len);
        for n in 0..h {
            let l1 = lam[n + 1];
            let rhs = (1.0 - l1) * dz[n] * dz[n] + l1 * (c - xu[n + 1] * xu[n + 1]) + m * m * t;
            recursion.values[n] = rhs - dz[n + 1] * dz[n + 1];
            if n >= 1 {
                // y_n = x_{n+1}
                let (dy_u, dy_ty, dy_z) = (xu[n + 1], asreg[n + 1], dz[n + 1]);
                let a_n = dy_ty * dy_ty + 2.0 * m * dy_ty;
                yn_bound.values[n] = dy_u * dy_u + a_n / t - c - dy_z * dy_z;
            }
        }
        columns.push(recursion);
        columns.push(yn_bound);
    }
    Ok(SlackReport { columns })
}
