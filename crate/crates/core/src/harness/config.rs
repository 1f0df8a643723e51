use std::str::FromStr;

use crate::moduli::exact::parse_rational;
use crate::moduli::{Counterexample, Rat};
use crate::realseq::AoyamaVariant;

use super::HarnessError;

/// A check a cell can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    Axioms,
    Asreg,
    Meta,
    Resolvent,
    Inequalities,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Axioms => "axioms",
            Check::Asreg => "asreg",
            Check::Meta => "meta",
            Check::Resolvent => "resolvent",
            Check::Inequalities => "inequalities",
        }
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.trim() {
            "axioms" => Check::Axioms,
            "asreg" => Check::Asreg,
            "meta" => Check::Meta,
            "resolvent" => Check::Resolvent,
            "inequalities" => Check::Inequalities,
            other => return Err(format!("unknown check `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointSpec {
    /// Drawn from the cell's seeded generator.
    Random,
    Literal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Auto,
    Fixed(u64),
}

/// One grid cell: a space, a map, a starting configuration and the checks
/// to run on it.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub name: String,
    pub space: String,
    pub map: String,
    pub schedule: String,
    /// Which rate family to use; defaults by schedule.
    pub rates: Option<AoyamaVariant>,
    pub anchor: PointSpec,
    pub start: PointSpec,
    pub eps: Vec<Rat>,
    pub g: Vec<Counterexample>,
    pub horizon: Horizon,
    /// Indices past a bound that must also satisfy it.
    pub window: u64,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub budget_steps: u64,
    pub budget_bits: u64,
    pub resolvent_k: u64,
    pub resolvent_tol: f64,
    pub t_values: Vec<Rat>,
    pub samples: usize,
}

impl CellSpec {
    pub fn variant(&self) -> AoyamaVariant {
        self.rates.unwrap_or(if self.schedule == "harmonic" { AoyamaVariant::Harmonic } else { AoyamaVariant::Divergence })
    }
}

impl Default for CellSpec {
    fn default() -> Self {
        let budget = crate::moduli::Budget::default();
        CellSpec {
            name: String::new(),
            space: String::new(),
            map: "identity".into(),
            schedule: "harmonic".into(),
            rates: None,
            anchor: PointSpec::Random,
            start: PointSpec::Random,
            eps: Vec::new(),
            g: vec![Counterexample::zero()],
            horizon: Horizon::Auto,
            window: 1000,
            seed: 0,
            checks: Vec::new(),
            budget_steps: budget.max_steps,
            budget_bits: budget.max_bits,
            resolvent_k: 64,
            resolvent_tol: 1e-10,
            t_values: vec![Rat::new(1.into(), 2.into()), Rat::new(1.into(), 10.into()), Rat::new(1.into(), 100.into())],
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentSpec {
    pub cells: Vec<CellSpec>,
    /// Record wall-clock seconds per row; off keeps reports byte-stable.
    pub timing: bool,
}

/// Splits on commas that are not nested inside `()` or `[]`.
pub fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn point_spec(v: &str) -> PointSpec {
    if v == "random" {
        PointSpec::Random
    } else {
        PointSpec::Literal(v.to_string())
    }
}

fn parse_u64(v: &str) -> Result<u64, String> {
    v.replace('_', "").parse().map_err(|_| format!("expected a nonnegative integer, got `{v}`"))
}

fn apply_key(cell: &mut CellSpec, key: &str, v: &str) -> Result<(), String> {
    let rats = |v: &str| -> Result<Vec<Rat>, String> {
        split_top_level(v).iter().map(|x| parse_rational(x).map_err(|e| e.to_string())).collect()
    };
    match key {
        "space" => cell.space = v.to_string(),
        "map" => cell.map = v.to_string(),
        "schedule" => cell.schedule = v.to_string(),
        "rates" => {
            cell.rates = Some(match v {
                "harmonic" => AoyamaVariant::Harmonic,
                "prod" => AoyamaVariant::Product,
                "div" => AoyamaVariant::Divergence,
                _ => return Err(format!("unknown rates `{v}` (harmonic, prod or div)")),
            })
        }
        "anchor" => cell.anchor = point_spec(v),
        "start" => cell.start = point_spec(v),
        "eps" => cell.eps = rats(v)?,
        "g" => {
            cell.g = split_top_level(v).iter().map(|x| x.parse::<Counterexample>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?
        }
        "horizon" => cell.horizon = if v == "auto" { Horizon::Auto } else { Horizon::Fixed(parse_u64(v)?) },
        "window" => cell.window = parse_u64(v)?,
        "seed" => cell.seed = parse_u64(v)?,
        "checks" => cell.checks = split_top_level(v).iter().map(|c| c.parse()).collect::<Result<_, _>>()?,
        "budget" | "budget_steps" => cell.budget_steps = parse_u64(v)?,
        "budget_bits" => cell.budget_bits = parse_u64(v)?,
        "resolvent_k" => cell.resolvent_k = parse_u64(v)?,
        "resolvent_tol" => {
            cell.resolvent_tol = v.parse().ok().filter(|t: &f64| *t > 0.0).ok_or_else(|| format!("bad tolerance `{v}`"))?
        }
        "t_values" => cell.t_values = rats(v)?,
        "samples" => cell.samples = parse_u64(v)? as usize,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Parses the experiment format: `key = value` lines, `#` comments, and
/// `[cell name]` sections. Keys before the first section are defaults for
/// every cell; `timing = true` may only appear there.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, HarnessError> {
    let mut defaults = CellSpec::default();
    let mut timing = false;
    let mut cells: Vec<(usize, CellSpec)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let bad = |msg: String| HarnessError::Config { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| bad("section header needs a closing `]`".into()))?.trim();
            if name.is_empty() {
                return Err(bad("empty section name".into()));
            }
            if cells.iter().any(|(_, c)| c.name == name) {
                return Err(bad(format!("duplicate cell `{name}`")));
            }
            cells.push((line_no, CellSpec { name: name.to_string(), ..defaults.clone() }));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match cells.last_mut() {
            None if key == "timing" => timing = value.parse().map_err(|_| bad(format!("timing must be true or false, got `{value}`")))?,
            None => apply_key(&mut defaults, key, value).map_err(bad)?,
            Some(_) if key == "timing" => return Err(bad("`timing` is a top-level key".into())),
            Some((_, cell)) => apply_key(cell, key, value).map_err(bad)?,
        }
    }
    for (line, cell) in &cells {
        super::run::validate_cell(cell).map_err(|msg| HarnessError::Config { line: *line, msg: format!("cell `{}`: {msg}", cell.name) })?;
    }
    Ok(ExperimentSpec { cells: cells.into_iter().map(|(_, c)| c).collect(), timing })
}
