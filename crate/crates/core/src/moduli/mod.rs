//! Modulus functions, exact evaluation helpers and step-size schedules.

pub mod exact;
mod counterexample;
mod schedule;
mod validate;

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use counterexample::Counterexample;
pub use exact::{ceil_exp, ceil_ln, Rat};
pub use schedule::{harmonic_schedule, sqrt_schedule, ScalarSchedule};
pub use validate::{validate_divergence, validate_modulus, ModulusCheck};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RateError {
    #[error("{what} must lie in {range}, got {value}")]
    OutOfRange { what: &'static str, range: &'static str, value: String },
    #[error("schedule `{schedule}` has no {modulus}")]
    MissingModulus { schedule: String, modulus: &'static str },
    #[error("value too large to evaluate exactly: {0}")]
    TooLarge(String),
    #[error("invalid descriptor `{0}`: {1}")]
    Descriptor(String, String),
    #[error("modulus `{0}` returned 0; moduli take values in the positive integers")]
    ZeroModulus(String),
    #[error("evaluation budget exhausted after {0} steps")]
    BudgetExhausted(u64),
}

/// Which defining property an [`EpsModulus`] witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModulusKind {
    RateOfConvergence,
    CauchyModulus,
    ProductRate,
    LimsupRate,
}

impl fmt::Display for ModulusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModulusKind::RateOfConvergence => "rate_of_convergence",
            ModulusKind::CauchyModulus => "cauchy_modulus",
            ModulusKind::ProductRate => "product_rate",
            ModulusKind::LimsupRate => "limsup_rate",
        })
    }
}

type EpsFn = dyn Fn(&Rat) -> Result<BigUint, RateError> + Send + Sync;
type NatFn = dyn Fn(&BigUint) -> Result<BigUint, RateError> + Send + Sync;

/// A map from positive rationals ε to positive integers.
#[derive(Clone)]
pub struct EpsModulus {
    kind: ModulusKind,
    name: String,
    antitone: bool,
    f: Arc<EpsFn>,
}

impl EpsModulus {
    pub fn new(
        kind: ModulusKind,
        name: impl Into<String>,
        f: impl Fn(&Rat) -> BigUint + Send + Sync + 'static,
    ) -> Self {
        Self::try_new(kind, name, move |e| Ok(f(e)))
    }

    pub fn try_new(
        kind: ModulusKind,
        name: impl Into<String>,
        f: impl Fn(&Rat) -> Result<BigUint, RateError> + Send + Sync + 'static,
    ) -> Self {
        EpsModulus { kind, name: name.into(), antitone: false, f: Arc::new(f) }
    }

    /// Declares that smaller ε never yields a smaller value.
    pub fn with_antitone(mut self) -> Self {
        self.antitone = true;
        self
    }

    /// `ε ↦ c`.
    pub fn constant(kind: ModulusKind, c: u64) -> Self {
        Self::new(kind, format!("const:{c}"), move |_| BigUint::from(c.max(1))).with_antitone()
    }

    /// `ε ↦ max(1, ⌈c/ε⌉)`.
    pub fn ceil_inverse(kind: ModulusKind, c: Rat) -> Self {
        let name = format!("ceil({}/eps)", exact::format_rational(&c));
        Self::new(kind, name, move |e| exact::ceil_nat(&(&c / e)).max(BigUint::one())).with_antitone()
    }

    pub fn kind(&self) -> ModulusKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_antitone(&self) -> bool {
        self.antitone
    }

    pub fn eval(&self, eps: &Rat) -> Result<BigUint, RateError> {
        if !eps.is_positive() {
            return Err(RateError::OutOfRange {
                what: "modulus argument",
                range: "(0, ∞)",
                value: exact::format_rational(eps),
            });
        }
        let v = (self.f)(eps)?;
        if v.is_zero() {
            return Err(RateError::ZeroModulus(self.name.clone()));
        }
        Ok(v)
    }
}

impl fmt::Debug for EpsModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EpsModulus({}, {})", self.kind, self.name)
    }
}

/// A rate of divergence `n ↦ θ(n)` for a series of nonnegative terms.
#[derive(Clone)]
pub struct DivergenceRate {
    name: String,
    monotone: bool,
    f: Arc<NatFn>,
}

impl DivergenceRate {
    pub fn new(name: impl Into<String>, f: impl Fn(&BigUint) -> BigUint + Send + Sync + 'static) -> Self {
        Self::try_new(name, move |n| Ok(f(n)))
    }

    pub fn try_new(
        name: impl Into<String>,
        f: impl Fn(&BigUint) -> Result<BigUint, RateError> + Send + Sync + 'static,
    ) -> Self {
        DivergenceRate { name: name.into(), monotone: false, f: Arc::new(f) }
    }

    /// Declares θ nondecreasing, so that `θ⁺ = θ`.
    pub fn with_monotone(mut self) -> Self {
        self.monotone = true;
        self
    }

    /// `n ↦ a·n`.
    pub fn linear(a: u64) -> Self {
        Self::new(format!("{a}n"), move |n| n * a).with_monotone()
    }

    /// Explicit values `θ(1), θ(2), ...`; evaluation past the end is an error.
    pub fn table(values: Vec<u64>) -> Self {
        let name = format!("table{values:?}");
        let monotone = values.windows(2).all(|w| w[0] <= w[1]);
        let mut r = Self::try_new(name.clone(), move |n| {
            n.to_usize()
                .and_then(|i| values.get(i.checked_sub(1)?))
                .map(|&v| BigUint::from(v))
                .ok_or_else(|| RateError::OutOfRange { what: "table index", range: "table range", value: n.to_string() })
        });
        r.monotone = monotone;
        r
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn eval(&self, n: &BigUint) -> Result<BigUint, RateError> {
        if n.is_zero() {
            return Err(RateError::OutOfRange { what: "divergence-rate argument", range: "positive integers", value: "0".into() });
        }
        (self.f)(n)
    }
}

impl fmt::Debug for DivergenceRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DivergenceRate({})", self.name)
    }
}

/// Largest argument for which a non-monotone θ⁺ is enumerated.
pub const THETA_PLUS_ENUMERATION_LIMIT: u64 = 10_000_000;

/// `θ⁺(n) = max{θ(i) | 1 ≤ i ≤ n}`.
pub fn theta_plus(theta: &DivergenceRate, n: &BigUint) -> Result<BigUint, RateError> {
    if n.is_zero() {
        return Err(RateError::OutOfRange { what: "theta_plus argument", range: "positive integers", value: "0".into() });
    }
    if theta.is_monotone() {
        return theta.eval(n);
    }
    let m = n
        .to_u64()
        .filter(|&m| m <= THETA_PLUS_ENUMERATION_LIMIT)
        .ok_or_else(|| RateError::TooLarge(format!("theta_plus over 1..{n} for non-monotone {}", theta.name())))?;
    let mut best = BigUint::zero();
    for i in 1..=m {
        best = best.max(theta.eval(&BigUint::from(i))?);
    }
    Ok(best)
}

/// Cancellable resource limit for long exact computations.
#[derive(Debug, Clone)]
pub struct Budget {
    /// Maximum number of functional applications.
    pub max_steps: u64,
    /// Maximum bit length of any intermediate integer.
    pub max_bits: u64,
    cancel: Option<Arc<AtomicBool>>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_steps: 10_000_000, max_bits: 1 << 14, cancel: None }
    }
}

impl Budget {
    pub fn new(max_steps: u64, max_bits: u64) -> Self {
        Budget { max_steps, max_bits, cancel: None }
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    pub fn exceeded(&self, steps: u64, value: &BigUint) -> bool {
        steps >= self.max_steps || value.bits() > self.max_bits || self.cancelled()
    }
}

/// Result of [`iterate_functional`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iterated {
    pub value: BigUint,
    pub steps: u64,
    pub complete: bool,
}

/// Applies `f` to `start` `count` times, stopping early if `budget` runs out.
pub fn iterate_functional(
    mut f: impl FnMut(&BigUint) -> Result<BigUint, RateError>,
    count: &BigUint,
    start: BigUint,
    budget: &Budget,
) -> Result<Iterated, RateError> {
    let mut value = start;
    let mut steps = 0u64;
    let mut remaining = count.clone();
    while !remaining.is_zero() {
        if budget.exceeded(steps, &value) {
            log::debug!("iterate_functional stopped after {steps} steps");
            return Ok(Iterated { value, steps, complete: false });
        }
        value = f(&value)?;
        steps += 1;
        remaining -= 1u32;
        if steps.is_multiple_of(1_000_000) {
            log::debug!("iterate_functional: {steps} steps done");
        }
    }
    Ok(Iterated { value, steps, complete: true })
}

#[cfg(test)]
mod tests {
    use super::exact::{nat, rat};
    use super::*;

    #[test]
    fn theta_plus_examples() {
        assert_eq!(theta_plus(&DivergenceRate::linear(2), &nat(3)).unwrap(), nat(6));
        let t = DivergenceRate::table(vec![5, 2, 7]);
        assert!(!t.is_monotone());
        assert_eq!(theta_plus(&t, &nat(2)).unwrap(), nat(5));
        assert_eq!(theta_plus(&t, &nat(3)).unwrap(), nat(7));
        assert!(theta_plus(&t, &nat(0)).is_err());
    }

    #[test]
    fn iterate_examples() {
        let b = Budget::default();
        let r = iterate_functional(|k| Ok(k + 1u32), &nat(5), nat(0), &b).unwrap();
        assert_eq!((r.value, r.complete), (nat(5), true));
        let r = iterate_functional(|k| Ok(k * 2u32 + 1u32), &nat(4), nat(0), &b).unwrap();
        assert_eq!(r.value, nat(15));
        let r = iterate_functional(|k| Ok(k * 2u32 + 1u32), &nat(0), nat(9), &b).unwrap();
        assert_eq!(r.value, nat(9));
    }

    #[test]
    fn iterate_respects_budget() {
        let b = Budget::new(3, 1 << 20);
        let r = iterate_functional(|k| Ok(k + 1u32), &nat(10), nat(0), &b).unwrap();
        assert_eq!(r, Iterated { value: nat(3), steps: 3, complete: false });
        let flag = Arc::new(AtomicBool::new(true));
        let b = Budget::default().with_cancel(flag);
        let r = iterate_functional(|k| Ok(k + 1u32), &nat(10), nat(0), &b).unwrap();
        assert!(!r.complete);
    }

    #[test]
    fn moduli_reject_bad_input() {
        let m = EpsModulus::new(ModulusKind::RateOfConvergence, "zero", |_| BigUint::zero());
        assert!(matches!(m.eval(&rat(1, 2)), Err(RateError::ZeroModulus(_))));
        let c = EpsModulus::ceil_inverse(ModulusKind::RateOfConvergence, rat(1, 1));
        assert!(c.eval(&rat(0, 1)).is_err());
        assert_eq!(c.eval(&rat(1, 10)).unwrap(), nat(10));
        assert_eq!(c.eval(&rat(3, 1)).unwrap(), nat(1));
    }
}
