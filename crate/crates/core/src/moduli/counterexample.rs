use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::RateError;

type GFn = dyn Fn(&BigUint) -> BigUint + Send + Sync;

/// A counterexample function `g: ℕ → ℕ` challenged by a metastability bound.
///
/// Descriptors: `g:const:K`, `g:affine:A:B` (`n ↦ A·n + B`) and
/// `g:table:[v0,v1,...]` (zero past the end).
#[derive(Clone)]
pub enum Counterexample {
    Constant(BigUint),
    Affine { a: BigUint, b: BigUint },
    Table(Vec<BigUint>),
    Custom { name: String, f: Arc<GFn> },
}

impl Counterexample {
    pub fn zero() -> Self {
        Counterexample::Constant(BigUint::zero())
    }

    pub fn constant(k: u64) -> Self {
        Counterexample::Constant(k.into())
    }

    pub fn affine(a: u64, b: u64) -> Self {
        Counterexample::Affine { a: a.into(), b: b.into() }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(&BigUint) -> BigUint + Send + Sync + 'static) -> Self {
        Counterexample::Custom { name: name.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, n: &BigUint) -> BigUint {
        match self {
            Counterexample::Constant(k) => k.clone(),
            Counterexample::Affine { a, b } => a * n + b,
            Counterexample::Table(v) => n.to_usize().and_then(|i| v.get(i)).cloned().unwrap_or_default(),
            Counterexample::Custom { f, .. } => f(n),
        }
    }

    /// `g` on machine integers, saturating at `u64::MAX`.
    pub fn eval_u64(&self, n: u64) -> u64 {
        self.eval(&BigUint::from(n)).to_u64().unwrap_or(u64::MAX)
    }

    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Counterexample::Constant(k) => write!(f, "g:const:{k}"),
            Counterexample::Affine { a, b } => write!(f, "g:affine:{a}:{b}"),
            Counterexample::Table(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "g:table:[{}]", items.join(","))
            }
            Counterexample::Custom { name, .. } => write!(f, "g:custom:{name}"),
        }
    }
}

impl fmt::Debug for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Counterexample {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| RateError::Descriptor(s.to_string(), why.to_string());
        let nat = |t: &str| t.trim().parse::<BigUint>().map_err(|_| bad("expected a nonnegative integer"));
        let rest = s.trim().strip_prefix("g:").ok_or_else(|| bad("must start with `g:`"))?;
        let (kind, args) = rest.split_once(':').ok_or_else(|| bad("missing arguments"))?;
        match kind {
            "const" => Ok(Counterexample::Constant(nat(args)?)),
            "affine" => {
                let (a, b) = args.split_once(':').ok_or_else(|| bad("affine needs A:B"))?;
                Ok(Counterexample::Affine { a: nat(a)?, b: nat(b)? })
            }
            "table" => {
                let inner = args
                    .trim()
                    .strip_prefix('[')
                    .and_then(|t| t.strip_suffix(']'))
                    .ok_or_else(|| bad("table needs [v0,v1,...]"))?;
                if inner.trim().is_empty() {
                    return Ok(Counterexample::Table(Vec::new()));
                }
                inner.split(',').map(nat).collect::<Result<_, _>>().map(Counterexample::Table)
            }
            _ => Err(bad("unknown g family")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let g: Counterexample = "g:const:10".parse().unwrap();
        assert_eq!(g.eval_u64(123), 10);
        let g: Counterexample = "g:affine:2:3".parse().unwrap();
        assert_eq!(g.eval_u64(5), 13);
        let g: Counterexample = "g:table:[4, 5,6]".parse().unwrap();
        assert_eq!((g.eval_u64(0), g.eval_u64(2), g.eval_u64(3)), (4, 6, 0));
        assert_eq!(g.to_string(), "g:table:[4,5,6]");
        assert!("g:bogus:1".parse::<Counterexample>().is_err());
        assert!("const:1".parse::<Counterexample>().is_err());
        assert!("g:affine:1".parse::<Counterexample>().is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        for d in ["g:const:0", "g:affine:1:0", "g:table:[]", "g:table:[1,2]"] {
            assert_eq!(d.parse::<Counterexample>().unwrap().to_string(), d);
        }
    }
}
