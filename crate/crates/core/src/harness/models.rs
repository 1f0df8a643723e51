use std::f64::consts::PI;
use std::sync::Arc;

use crate::geometry::{EuclideanBall, GeodesicSpace, MetricTree, NonexpansiveMap, PoincareDisk, TreePoint};
use crate::halpern::ScaledRotation;

/// A parsed map or point expression: `name(arg, ...)`, or a bare token.
/// Bracketed lists such as `[0.1,0.2]` stay a single atom.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Atom(String),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn parse(s: &str) -> Result<Expr, String> {
        let chars: Vec<char> = s.chars().collect();
        let mut pos = 0;
        let e = parse_expr(&chars, &mut pos)?;
        skip_ws(&chars, &mut pos);
        if pos != chars.len() {
            return Err(format!("trailing input at column {} of `{s}`", pos + 1));
        }
        Ok(e)
    }

    fn atom(&self) -> Result<&str, String> {
        match self {
            Expr::Atom(a) => Ok(a),
            Expr::Call(name, _) => Err(format!("expected a value, found call `{name}(...)`")),
        }
    }
}

fn skip_ws(c: &[char], pos: &mut usize) {
    while *pos < c.len() && c[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_expr(c: &[char], pos: &mut usize) -> Result<Expr, String> {
    skip_ws(c, pos);
    if *pos < c.len() && c[*pos] == '[' {
        let start = *pos;
        let mut depth = 0usize;
        while *pos < c.len() {
            match c[*pos] {
                '[' => depth += 1,
                ']' => {
                    depth -= 1;
                    if depth == 0 {
                        *pos += 1;
                        return Ok(Expr::Atom(c[start..*pos].iter().collect::<String>()));
                    }
                }
                _ => {}
            }
            *pos += 1;
        }
        return Err("unbalanced `[`".into());
    }
    let start = *pos;
    while *pos < c.len() && !"(),[]".contains(c[*pos]) {
        *pos += 1;
    }
    let name = c[start..*pos].iter().collect::<String>().trim().to_string();
    if name.is_empty() {
        return Err(format!("expected an expression at column {}", start + 1));
    }
    skip_ws(c, pos);
    if *pos < c.len() && c[*pos] == '(' {
        *pos += 1;
        let mut args = Vec::new();
        skip_ws(c, pos);
        if *pos < c.len() && c[*pos] == ')' {
            *pos += 1;
            return Ok(Expr::Call(name, args));
        }
        loop {
            args.push(parse_expr(c, pos)?);
            skip_ws(c, pos);
            match c.get(*pos) {
                Some(',') => *pos += 1,
                Some(')') => {
                    *pos += 1;
                    return Ok(Expr::Call(name, args));
                }
                _ => return Err(format!("expected `,` or `)` in call to `{name}`")),
            }
        }
    }
    Ok(Expr::Atom(name))
}

/// Reads a float; accepts `pi`, `pi/K` and `K*pi/L` style angles too.
pub fn parse_f64(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().map_err(|_| format!("bad number `{s}`"))?),
        None => (t, 1.0),
    };
    let num = match num {
        "pi" => PI,
        _ => match num.strip_suffix("*pi") {
            Some(k) => k.trim().parse::<f64>().map_err(|_| format!("bad number `{s}`"))? * PI,
            None => num.parse::<f64>().map_err(|_| format!("bad number `{s}`"))?,
        },
    };
    Ok(num / den)
}

pub fn parse_vec(s: &str) -> Result<Vec<f64>, String> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("expected `[x1,...]`, got `{s}`"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(parse_f64).collect()
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.trim().parse().map_err(|_| format!("expected a nonnegative integer, got `{s}`"))
}

fn arity(name: &str, args: &[Expr], n: std::ops::RangeInclusive<usize>) -> Result<(), String> {
    if n.contains(&args.len()) {
        Ok(())
    } else {
        Err(format!("`{name}` takes {} to {} arguments, got {}", n.start(), n.end(), args.len()))
    }
}

/// Model-specific parsing on top of [`GeodesicSpace`].
pub trait ModelSpace: GeodesicSpace + Sized + 'static
where
    Self::Point: 'static,
{
    fn parse_point(&self, s: &str) -> Result<Self::Point, String>;

    /// Maps only this model knows; `None` when `name` is not one of them.
    fn special_map(space: &Arc<Self>, name: &str, args: &[Expr]) -> Option<Result<NonexpansiveMap<Self::Point>, String>>;
}

/// Builds a map from an expression. Generic combinators:
/// `identity`, `constant(p)`, `compose(T1,T2)` (= T1∘T2), `blend(T1,T2,λ)`,
/// `projection(p,r)`.
pub fn build_map<S: ModelSpace>(space: &Arc<S>, e: &Expr) -> Result<NonexpansiveMap<S::Point>, String>
where
    S::Point: 'static,
{
    let (name, args): (&str, &[Expr]) = match e {
        Expr::Atom(a) => (a.as_str(), &[]),
        Expr::Call(n, a) => (n.as_str(), a.as_slice()),
    };
    let err = |e: crate::geometry::GeometryError| e.to_string();
    match name {
        "identity" | "id" => {
            arity(name, args, 0..=0)?;
            Ok(NonexpansiveMap::identity())
        }
        "constant" => {
            arity(name, args, 1..=1)?;
            NonexpansiveMap::constant(&**space, space.parse_point(args[0].atom()?)?).map_err(err)
        }
        "compose" => {
            arity(name, args, 2..=usize::MAX)?;
            let maps = args.iter().map(|a| build_map(space, a)).collect::<Result<Vec<_>, _>>()?;
            let mut it = maps.into_iter().rev();
            let mut acc = it.next().expect("arity checked");
            for outer in it {
                acc = NonexpansiveMap::compose(&outer, &acc);
            }
            Ok(acc)
        }
        "blend" => {
            arity(name, args, 3..=3)?;
            let (t1, t2) = (build_map(space, &args[0])?, build_map(space, &args[1])?);
            NonexpansiveMap::w_blend(Arc::clone(space), &t1, &t2, parse_f64(args[2].atom()?)?).map_err(err)
        }
        "projection" | "project" => {
            arity(name, args, 2..=2)?;
            let c = space.parse_point(args[0].atom()?)?;
            NonexpansiveMap::ball_projection(Arc::clone(space), c, parse_f64(args[1].atom()?)?).map_err(err)
        }
        _ => S::special_map(space, name, args).unwrap_or_else(|| Err(format!("unknown map `{name}`"))),
    }
}

impl ModelSpace for EuclideanBall {
    /// `origin` or `[x1,...,xd]`.
    fn parse_point(&self, s: &str) -> Result<Vec<f64>, String> {
        let p = if s.trim() == "origin" { self.origin() } else { parse_vec(s)? };
        if p.len() != self.dim() {
            return Err(format!("point `{s}` has {} coordinates, expected {}", p.len(), self.dim()));
        }
        if !self.contains(&p) {
            return Err(format!("point `{s}` lies outside {}", self.descriptor()));
        }
        Ok(p)
    }

    /// `rotation(angle[,i,j])`, `box([lo],[hi])`, `scaled_rotation([c],ρ,p,q)`.
    fn special_map(space: &Arc<Self>, name: &str, args: &[Expr]) -> Option<Result<NonexpansiveMap<Vec<f64>>, String>> {
        let build = || -> Result<NonexpansiveMap<Vec<f64>>, String> {
            match name {
                "rotation" => {
                    arity(name, args, 1..=3)?;
                    let angle = parse_f64(args[0].atom()?)?;
                    let plane = match args.len() {
                        1 => (0, 1),
                        3 => (parse_u64(args[1].atom()?)? as usize, parse_u64(args[2].atom()?)? as usize),
                        _ => return Err("`rotation` takes an angle and optionally two axes".into()),
                    };
                    space.rotation(angle, plane, &space.origin()).map_err(|e| e.to_string())
                }
                "box" => {
                    arity(name, args, 2..=2)?;
                    space.box_projection(&parse_vec(args[0].atom()?)?, &parse_vec(args[1].atom()?)?).map_err(|e| e.to_string())
                }
                "scaled_rotation" => {
                    arity(name, args, 4..=4)?;
                    let c = parse_vec(args[0].atom()?)?;
                    let rho = parse_f64(args[1].atom()?)?;
                    let (p, q) = (parse_u64(args[2].atom()?)?, parse_u64(args[3].atom()?)?);
                    Ok(ScaledRotation::new(space, c, rho, p, q).map_err(|e| e.to_string())?.map())
                }
                _ => unreachable!(),
            }
        };
        matches!(name, "rotation" | "box" | "scaled_rotation").then(build)
    }
}

impl ModelSpace for PoincareDisk {
    /// `origin` or `[x,y]` in the unit-disk model.
    fn parse_point(&self, s: &str) -> Result<[f64; 2], String> {
        let p = if s.trim() == "origin" {
            self.origin()
        } else {
            let v = parse_vec(s)?;
            <[f64; 2]>::try_from(v.as_slice()).map_err(|_| format!("disk point `{s}` needs two coordinates"))?
        };
        if !self.contains(&p) {
            return Err(format!("point `{s}` lies outside {}", self.descriptor()));
        }
        Ok(p)
    }

    /// `rotation(angle)` about the origin.
    fn special_map(space: &Arc<Self>, name: &str, args: &[Expr]) -> Option<Result<NonexpansiveMap<[f64; 2]>, String>> {
        (name == "rotation").then(|| {
            arity(name, args, 1..=1)?;
            space.rotation(parse_f64(args[0].atom()?)?, &[0.0, 0.0]).map_err(|e| e.to_string())
        })
    }
}

impl ModelSpace for MetricTree {
    /// `origin`, `vK` (vertex K) or `vA:vB:T` (distance T from vertex A toward B).
    fn parse_point(&self, s: &str) -> Result<TreePoint, String> {
        let t = s.trim();
        if t == "origin" {
            return Ok(self.origin());
        }
        let vertex = |v: &str| -> Result<usize, String> {
            v.trim().strip_prefix('v').and_then(|k| k.parse().ok()).ok_or_else(|| format!("bad vertex `{v}` in `{s}`"))
        };
        let parts: Vec<&str> = t.split(':').collect();
        match parts.as_slice() {
            [v] => self.vertex(vertex(v)?).ok_or_else(|| format!("no vertex `{v}`")),
            [a, b, d] => self.point_on_edge(vertex(a)?, vertex(b)?, parse_f64(d)?).map_err(|e| e.to_string()),
            _ => Err(format!("tree point `{s}` must be `vK` or `vA:vB:T`")),
        }
    }

    fn special_map(_: &Arc<Self>, _: &str, _: &[Expr]) -> Option<Result<NonexpansiveMap<TreePoint>, String>> {
        None
    }
}

/// One of the supported model spaces, built from its descriptor.
#[derive(Debug, Clone)]
pub enum Model {
    Euclidean(Arc<EuclideanBall>),
    Tree(Arc<MetricTree>),
    Disk(Arc<PoincareDisk>),
}

/// Parses `euclidean:ball:D:R[:M]`, `tree:tripod:A:B:C[:M]`,
/// `tree:random:E:SEED:DIAM[:M]` or `disk:R[:M]`. The optional `M` overrides
/// the default integer diameter bound.
pub fn parse_space(desc: &str) -> Result<Model, String> {
    let parts: Vec<&str> = desc.trim().split(':').map(str::trim).collect();
    let f = |s: &str| parse_f64(s);
    let bound = |extra: &[&str]| -> Result<Option<u64>, String> {
        match extra {
            [] => Ok(None),
            [m] => parse_u64(m).map(Some),
            _ => Err(format!("too many fields in `{desc}`")),
        }
    };
    let e = |e: crate::geometry::GeometryError| format!("`{desc}`: {e}");
    match parts.as_slice() {
        ["euclidean", "ball", d, r, extra @ ..] => {
            let (d, r) = (parse_u64(d)? as usize, f(r)?);
            let ball = match bound(extra)? {
                Some(m) => EuclideanBall::with_bound(d, r, m),
                None => EuclideanBall::new(d, r),
            };
            Ok(Model::Euclidean(Arc::new(ball.map_err(e)?)))
        }
        ["tree", "tripod", a, b, c, extra @ ..] => {
            let mut t = MetricTree::tripod(f(a)?, f(b)?, f(c)?).map_err(e)?;
            if let Some(m) = bound(extra)? {
                t = t.with_bound(m).map_err(e)?;
            }
            Ok(Model::Tree(Arc::new(t)))
        }
        ["tree", "random", n, seed, diam, extra @ ..] => {
            let mut t = MetricTree::random(parse_u64(n)? as usize, parse_u64(seed)?, f(diam)?).map_err(e)?;
            if let Some(m) = bound(extra)? {
                t = t.with_bound(m).map_err(e)?;
            }
            Ok(Model::Tree(Arc::new(t)))
        }
        ["disk", r, extra @ ..] => {
            let disk = match bound(extra)? {
                Some(m) => PoincareDisk::with_bound(f(r)?, m),
                None => PoincareDisk::new(f(r)?),
            };
            Ok(Model::Disk(Arc::new(disk.map_err(e)?)))
        }
        _ => Err(format!("unknown space descriptor `{desc}`")),
    }
}

/// Runs a generic body against whichever model a [`Model`] holds.
#[macro_export]
macro_rules! with_model {
    ($model:expr, $space:ident => $body:expr) => {
        match $model {
            $crate::harness::Model::Euclidean($space) => $body,
            $crate::harness::Model::Tree($space) => $body,
            $crate::harness::Model::Disk($space) => $body,
        }
    };
}
