use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::geometry::{check_w_axioms, GeodesicSpace};
use crate::halpern::{
    check_trajectory_inequalities, find_metastable_window_metric, halpern_run, resolvent_point, HalpernConfig, Trajectory,
    WindowSearch,
};
use crate::moduli::exact::{format_rational, rat_to_f64, to_u64};
use crate::moduli::{Budget, Counterexample, Rat, RateError, ScalarSchedule};
use crate::rates::{asreg_rate_div, asreg_rate_harmonic, asreg_rate_prod, browder_k, meta_div, meta_harmonic, meta_prod, RegularityRates};
use crate::realseq::AoyamaVariant;
use crate::with_model;

use super::config::{CellSpec, Check, ExperimentSpec, Horizon, PointSpec};
use super::models::{build_map, parse_space, Expr, ModelSpace};
use super::{BoundReport, Row, Status};

/// Longest trajectory an `auto` horizon will allocate.
pub const MAX_AUTO_HORIZON: u64 = 2_000_000;
/// `auto` horizon when metastability is checked.
pub const META_HORIZON: u64 = 100_000;
const MIN_HORIZON: u64 = 1000;

fn asreg_rates(cell: &CellSpec, eps: &Rat, m: u64) -> Result<RegularityRates, RateError> {
    let schedule = ScalarSchedule::by_name(&cell.schedule)?;
    match cell.variant() {
        AoyamaVariant::Harmonic => asreg_rate_harmonic(eps, m),
        AoyamaVariant::Product => asreg_rate_prod(eps, m, &schedule),
        AoyamaVariant::Divergence => asreg_rate_div(eps, m, &schedule),
    }
}

fn meta_range_ok(cell: &CellSpec, eps: &Rat) -> Result<(), String> {
    let hi = if cell.variant() == AoyamaVariant::Harmonic { 1 } else { 2 };
    if *eps <= Rat::from_integer(0.into()) || *eps >= Rat::from_integer(hi.into()) {
        return Err(format!("meta needs eps in (0, {hi}) for {} rates, got {}", cell.variant(), format_rational(eps)));
    }
    Ok(())
}

/// Everything that can be rejected before any computation starts.
pub(crate) fn validate_cell(cell: &CellSpec) -> Result<(), String> {
    if cell.space.is_empty() {
        return Err("missing `space`".into());
    }
    if cell.checks.is_empty() {
        return Err("no checks requested".into());
    }
    let model = parse_space(&cell.space)?;
    let schedule = ScalarSchedule::by_name(&cell.schedule).map_err(|e| e.to_string())?;
    if cell.variant() == AoyamaVariant::Harmonic && schedule.name() != "harmonic" {
        return Err("harmonic rates need the harmonic schedule".into());
    }
    let needs_eps = cell.checks.iter().any(|c| matches!(c, Check::Asreg | Check::Meta | Check::Resolvent));
    if needs_eps && cell.eps.is_empty() {
        return Err("checks need a nonempty `eps` list".into());
    }
    let m = with_model!(&model, s => {
        let expr = Expr::parse(&cell.map)?;
        build_map(s, &expr)?;
        for p in [&cell.anchor, &cell.start] {
            if let PointSpec::Literal(text) = p {
                s.parse_point(text)?;
            }
        }
        s.diameter_bound()
    });
    for c in &cell.checks {
        match c {
            Check::Asreg => {
                for e in &cell.eps {
                    asreg_rates(cell, e, m).map_err(|e| e.to_string())?;
                }
            }
            Check::Meta => {
                for e in &cell.eps {
                    meta_range_ok(cell, e)?;
                }
                match cell.variant() {
                    AoyamaVariant::Divergence => drop(schedule.require_theta_div().map_err(|e| e.to_string())?),
                    AoyamaVariant::Product => drop(schedule.require_theta_prod().map_err(|e| e.to_string())?),
                    AoyamaVariant::Harmonic => {}
                }
            }
            Check::Resolvent | Check::Inequalities => {
                let zero = Rat::from_integer(0.into());
                if c == &Check::Resolvent && cell.eps.iter().any(|e| *e <= zero) {
                    return Err("resolvent needs eps > 0".into());
                }
                if c == &Check::Inequalities && cell.t_values.iter().any(|t| *t <= zero || *t > Rat::from_integer(1.into())) {
                    return Err("t_values must lie in (0, 1]".into());
                }
            }
            Check::Axioms => {}
        }
    }
    Ok(())
}

/// Runs every cell, concurrently, and concatenates rows in spec order.
pub fn run_experiment(spec: &ExperimentSpec) -> BoundReport {
    let rows: Vec<Vec<Row>> = spec.cells.par_iter().map(|c| run_cell(c, spec.timing)).collect();
    BoundReport { rows: rows.into_iter().flatten().collect() }
}

/// Runs one validated cell.
pub fn run_cell(cell: &CellSpec, timing: bool) -> Vec<Row> {
    match parse_space(&cell.space) {
        Ok(model) => with_model!(model, s => CellRun::new(s, cell, timing).run()),
        Err(e) => cell.checks.iter().map(|c| error_row(cell, c.name(), "", "", &e)).collect(),
    }
}

fn error_row(cell: &CellSpec, check: &str, eps: &str, g: &str, msg: &str) -> Row {
    Row {
        check: check.into(),
        space: cell.space.clone(),
        map: cell.map.clone(),
        schedule: cell.schedule.clone(),
        eps: eps.into(),
        g: g.into(),
        bound: String::new(),
        empirical: String::new(),
        status: Status::Fail,
        seconds: None,
        seed: cell.seed,
        cell: cell.name.clone(),
        detail: format!("error: {msg}"),
    }
}

struct CellRun<'a, S: ModelSpace>
where
    S::Point: 'static,
{
    space: Arc<S>,
    cell: &'a CellSpec,
    timing: bool,
    m: u64,
    budget: Budget,
}

/// A bound column value plus whether it is exact.
struct Bound {
    value: BigUint,
    exact: bool,
}

impl Bound {
    fn text(&self) -> String {
        if self.exact {
            self.value.to_string()
        } else {
            format!(">={}", self.value)
        }
    }
}

/// First index in `[lo, values.len())` with a value above `eps`.
fn first_violation(values: &[f64], lo: u64, eps: f64) -> Option<u64> {
    let lo = usize::try_from(lo).ok()?;
    values.get(lo..)?.iter().position(|v| *v > eps).map(|i| (i + lo) as u64)
}

/// Window verdict for one watched series: every index from `bound` on must
/// be `≤ eps`, and the data must reach `bound + window`.
fn window_verdict(values: &[f64], bound: &BigUint, window: u64, eps: f64, what: &str) -> (Status, String) {
    let last = values.len() as u64 - 1;
    let Some(b) = to_u64(bound) else {
        return (Status::Inconclusive, format!("{what}: bound {bound} exceeds any horizon"));
    };
    if let Some(n) = first_violation(values, b, eps) {
        return (Status::Fail, format!("{what}: value {:e} > eps at n = {n}", values[n as usize]));
    }
    if b.saturating_add(window) > last {
        return (Status::Inconclusive, format!("{what}: data ends at n = {last}, before bound + window = {}", b.saturating_add(window)));
    }
    (Status::Pass, format!("{what}: all n in [{b}, {last}] within eps"))
}

fn combine(a: Status, b: Status) -> Status {
    match (a, b) {
        (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
        (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
        _ => Status::Pass,
    }
}

impl<'a, S: ModelSpace> CellRun<'a, S>
where
    S::Point: 'static,
{
    fn new(space: Arc<S>, cell: &'a CellSpec, timing: bool) -> Self {
        let m = space.diameter_bound();
        let budget = Budget::new(cell.budget_steps, cell.budget_bits);
        CellRun { space, cell, timing, m, budget }
    }

    fn row(&self, check: Check, eps: Option<&Rat>, g: Option<&Counterexample>) -> Row {
        Row {
            check: check.name().into(),
            space: self.cell.space.clone(),
            map: self.cell.map.clone(),
            schedule: self.cell.schedule.clone(),
            eps: eps.map(format_rational).unwrap_or_default(),
            g: g.map(Counterexample::descriptor).unwrap_or_default(),
            bound: String::new(),
            empirical: String::new(),
            status: Status::Inconclusive,
            seconds: None,
            seed: self.cell.seed,
            cell: self.cell.name.clone(),
            detail: String::new(),
        }
    }

    fn timed(&self, start: Instant) -> Option<f64> {
        self.timing.then(|| start.elapsed().as_secs_f64())
    }

    fn run(&self) -> Vec<Row> {
        let setup = match self.setup() {
            Ok(s) => s,
            Err(e) => return self.cell.checks.iter().map(|c| error_row(self.cell, c.name(), "", "", &e)).collect(),
        };
        // Bounds are a priori: computed before the trajectory exists.
        let asreg_bounds: Vec<_> = if self.cell.checks.contains(&Check::Asreg) {
            self.cell.eps.iter().map(|e| asreg_rates(self.cell, e, self.m)).collect()
        } else {
            Vec::new()
        };
        let needs_traj = self.cell.checks.iter().any(|c| matches!(c, Check::Asreg | Check::Meta | Check::Inequalities));
        let traj = if needs_traj {
            let horizon = self.horizon(&asreg_bounds);
            let cfg = HalpernConfig {
                space: Arc::clone(&self.space),
                map: setup.map.clone(),
                anchor: setup.anchor.clone(),
                start: setup.start.clone(),
                schedule: setup.schedule.clone(),
                horizon,
            };
            Some(halpern_run(&cfg).map_err(|e| e.to_string()))
        } else {
            None
        };
        let mut rows = Vec::new();
        for check in &self.cell.checks {
            let traj = match (&traj, check) {
                (Some(Err(e)), Check::Asreg | Check::Meta | Check::Inequalities) => {
                    rows.push(error_row(self.cell, check.name(), "", "", e));
                    continue;
                }
                (Some(Ok(t)), _) => Some(t),
                _ => None,
            };
            match check {
                Check::Axioms => rows.push(self.axioms()),
                Check::Asreg => {
                    for (eps, b) in self.cell.eps.iter().zip(&asreg_bounds) {
                        rows.push(self.asreg(eps, b, traj.expect("trajectory")));
                    }
                }
                Check::Meta => {
                    for eps in &self.cell.eps {
                        for g in &self.cell.g {
                            rows.push(self.meta(eps, g, traj.expect("trajectory")));
                        }
                    }
                }
                Check::Resolvent => rows.extend(self.resolvent(&setup)),
                Check::Inequalities => rows.push(self.inequalities(&setup, traj.expect("trajectory"))),
            }
        }
        rows
    }

    fn setup(&self) -> Result<Setup<S>, String> {
        let s = &self.space;
        let map = build_map(s, &Expr::parse(&self.cell.map)?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cell.seed);
        let mut point = |p: &PointSpec| match p {
            PointSpec::Random => Ok(s.sample(&mut rng)),
            PointSpec::Literal(t) => s.parse_point(t),
        };
        let anchor = point(&self.cell.anchor)?;
        let start = point(&self.cell.start)?;
        let schedule = ScalarSchedule::by_name(&self.cell.schedule).map_err(|e| e.to_string())?;
        Ok(Setup { map, anchor, start, schedule })
    }

    fn horizon(&self, asreg: &[Result<RegularityRates, RateError>]) -> u64 {
        if let Horizon::Fixed(h) = self.cell.horizon {
            return h.max(1);
        }
        let mut h = MIN_HORIZON;
        if self.cell.checks.contains(&Check::Meta) {
            h = h.max(META_HORIZON);
        }
        for r in asreg.iter().flatten() {
            let need = to_u64(&r.phi.clone().max(r.phi_tilde.clone() + 1u32)).map_or(u64::MAX, |b| b.saturating_add(self.cell.window));
            h = h.max(need.min(MAX_AUTO_HORIZON));
        }
        h
    }

    fn axioms(&self) -> Row {
        let t0 = Instant::now();
        let mut row = self.row(Check::Axioms, None, None);
        match check_w_axioms(&*self.space, self.cell.samples, self.cell.seed) {
            Ok(r) => {
                row.empirical = format!("{:e}", r.worst());
                row.status = if r.pass() { Status::Pass } else { Status::Fail };
                let worst = r.entries().iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|e| e.0).unwrap_or("");
                row.detail = json!({"samples": r.samples, "worst_axiom": worst, "entries": r.entries().iter().map(|(k, v)| (k.to_string(), *v)).collect::<std::collections::BTreeMap<_, _>>()}).to_string();
            }
            Err(e) => {
                row.status = Status::Fail;
                row.detail = format!("error: {e}");
            }
        }
        row.seconds = self.timed(t0);
        row
    }

    fn asreg(&self, eps: &Rat, rates: &Result<RegularityRates, RateError>, traj: &Trajectory<S::Point>) -> Row {
        let t0 = Instant::now();
        let mut row = self.row(Check::Asreg, Some(eps), None);
        let rates = match rates {
            Ok(r) => r,
            Err(e) => return error_row(self.cell, "asreg", &row.eps, "", &e.to_string()),
        };
        let e = rat_to_f64(eps);
        row.bound = rates.phi.to_string();
        row.empirical = crate::halpern::first_index_satisfying(traj, crate::halpern::Watched::AsymptoticRegularity, e)
            .map(|n| n.to_string())
            .unwrap_or_default();
        let (s1, w1) = window_verdict(&traj.asreg, &rates.phi, self.cell.window, e, "d(x_n,Tx_n)");
        let (s2, w2) = window_verdict(&traj.step, &rates.phi_tilde, self.cell.window, e, "d(x_n,x_n+1)");
        let step_first = crate::halpern::first_index_satisfying(traj, crate::halpern::Watched::Step, e);
        row.status = combine(s1, s2);
        row.detail = json!({
            "rates": rates.variant.to_string(),
            "Phi_tilde": rates.phi_tilde.to_string(),
            "step_empirical": step_first.map(|n| n.to_string()),
            "horizon": traj.horizon(),
            "asreg": w1,
            "step": w2,
        })
        .to_string();
        row.seconds = self.timed(t0);
        row
    }

    fn meta(&self, eps: &Rat, g: &Counterexample, traj: &Trajectory<S::Point>) -> Row {
        let t0 = Instant::now();
        let mut row = self.row(Check::Meta, Some(eps), Some(g));
        let computed = match self.cell.variant() {
            AoyamaVariant::Harmonic => meta_harmonic(eps, g, self.m, &self.budget),
            AoyamaVariant::Divergence => {
                ScalarSchedule::by_name(&self.cell.schedule).and_then(|s| meta_div(eps, g, self.m, &s, &self.budget))
            }
            AoyamaVariant::Product => {
                ScalarSchedule::by_name(&self.cell.schedule).and_then(|s| meta_prod(eps, g, self.m, &s, None, &self.budget))
            }
        };
        let sigma = match computed {
            Ok(s) => s,
            Err(RateError::BudgetExhausted(n)) => {
                row.detail = format!("budget exhausted after {n} steps");
                row.seconds = self.timed(t0);
                return row;
            }
            Err(e) => return error_row(self.cell, "meta", &row.eps, &row.g, &e.to_string()),
        };
        let bound = Bound { value: sigma.sigma.clone(), exact: sigma.is_complete() };
        row.bound = bound.text();
        // Independent side: only trajectory data from here on.
        let h = traj.horizon();
        let n_max = if bound.exact { to_u64(&bound.value).map_or(h, |s| s.min(h)) } else { h };
        let search = find_metastable_window_metric(&*self.space, &traj.points, rat_to_f64(eps), g, n_max);
        let found = match search {
            WindowSearch::Found(n) => {
                row.empirical = n.to_string();
                format!("window found at N = {n}")
            }
            WindowSearch::NotFound => format!("no window for N <= {n_max}"),
            WindowSearch::Inconclusive(n) => format!("window at N = {n} runs past the horizon {h}"),
        };
        row.status = match (search, bound.exact) {
            (WindowSearch::Found(_), true) => Status::Pass,
            (WindowSearch::NotFound, true) if to_u64(&bound.value).is_some_and(|s| s <= h) => Status::Fail,
            _ => Status::Inconclusive,
        };
        let reason = match &sigma.status {
            crate::rates::MetaStatus::Complete => None,
            crate::rates::MetaStatus::Partial { reason } => Some(reason.clone()),
        };
        row.detail = json!({
            "search": found,
            "sigma_partial_reason": reason,
            "tower_steps": sigma.steps,
            "iter_count": sigma.iter_count.to_string(),
            "N_le_sigma_lower_bound": row.empirical.parse::<u64>().ok().map(|n| BigUint::from(n) <= bound.value),
        })
        .to_string();
        row.seconds = self.timed(t0);
        row
    }

    fn resolvent(&self, setup: &Setup<S>) -> Vec<Row> {
        let t0 = Instant::now();
        let k_max = self.cell.resolvent_k;
        let zs: Result<Vec<S::Point>, String> = (0..=k_max)
            .map(|k| {
                resolvent_point(&*self.space, &setup.map, &setup.anchor, 1.0 / (k as f64 + 1.0), self.cell.resolvent_tol)
                    .map(|z| z.z)
                    .map_err(|e| format!("z_t for k = {k}: {e}"))
            })
            .collect();
        let shared = t0.elapsed();
        let mut rows = Vec::new();
        for eps in &self.cell.eps {
            for g in &self.cell.g {
                let t1 = Instant::now();
                let mut row = self.row(Check::Resolvent, Some(eps), Some(g));
                let zs = match &zs {
                    Ok(z) => z,
                    Err(e) => {
                        rows.push(error_row(self.cell, "resolvent", &row.eps, &row.g, e));
                        continue;
                    }
                };
                let k = match browder_k(eps, g, self.m, &self.budget) {
                    Ok(k) => k,
                    Err(e) => {
                        rows.push(error_row(self.cell, "resolvent", &row.eps, &row.g, &e.to_string()));
                        continue;
                    }
                };
                let bound = Bound { value: k.value.clone(), exact: k.complete };
                row.bound = bound.text();
                let n_max = to_u64(&bound.value).map_or(k_max, |v| v.min(k_max));
                let search = find_metastable_window_metric(&*self.space, zs, rat_to_f64(eps), g, n_max);
                row.status = match search {
                    WindowSearch::Found(n) if bound.exact || BigUint::from(n) <= bound.value => {
                        row.empirical = n.to_string();
                        if bound.exact {
                            Status::Pass
                        } else {
                            Status::Inconclusive
                        }
                    }
                    WindowSearch::NotFound if bound.exact && n_max == to_u64(&bound.value).unwrap_or(u64::MAX) => Status::Fail,
                    _ => Status::Inconclusive,
                };
                row.detail = json!({
                    "search": format!("{search:?}"),
                    "k_max": k_max,
                    "iterations": k.iterations.to_string(),
                })
                .to_string();
                row.seconds = self.timing.then(|| (shared + t1.elapsed()).as_secs_f64());
                rows.push(row);
            }
        }
        rows
    }

    fn inequalities(&self, setup: &Setup<S>, traj: &Trajectory<S::Point>) -> Row {
        let t0 = Instant::now();
        let mut row = self.row(Check::Inequalities, None, None);
        let zs: Result<Vec<_>, String> = self
            .cell
            .t_values
            .iter()
            .map(|t| {
                resolvent_point(&*self.space, &setup.map, &setup.anchor, rat_to_f64(t), self.cell.resolvent_tol).map_err(|e| e.to_string())
            })
            .collect();
        let report = zs.and_then(|zs| check_trajectory_inequalities(&*self.space, traj, &zs).map_err(|e| e.to_string()));
        match report {
            Ok(r) => {
                row.bound = "0".into();
                row.empirical = r.violations().to_string();
                row.status = if r.pass() { Status::Pass } else { Status::Fail };
                let worst: Vec<_> = r
                    .columns
                    .iter()
                    .filter(|c| !c.pass())
                    .map(|c| {
                        let (n, v) = c.worst().unwrap_or((0, f64::NAN));
                        json!({"relation": c.name, "violations": c.violations(), "worst_n": n, "worst_value": v})
                    })
                    .collect();
                row.detail = json!({"relations": r.columns.len(), "horizon": traj.horizon(), "failing": worst}).to_string();
            }
            Err(e) => {
                row.status = Status::Fail;
                row.detail = format!("error: {e}");
            }
        }
        row.seconds = self.timed(t0);
        row
    }
}

struct Setup<S: GeodesicSpace> {
    map: crate::geometry::NonexpansiveMap<S::Point>,
    anchor: S::Point,
    start: S::Point,
    schedule: ScalarSchedule,
}
