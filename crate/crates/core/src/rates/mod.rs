//! Asymptotic-regularity rates, the metastability towers, the resolvent
//! bound and the Cesàro/limsup rates for `γ_n^t`.

mod meta;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::moduli::exact::{ceil_nat, format_rational, nat_to_rat, rat};
use crate::moduli::{
    ceil_ln, iterate_functional, Budget, Counterexample, EpsModulus, Rat, RateError, ScalarSchedule,
};
use crate::realseq::{check_m, check_open, out_of_range, AoyamaVariant};

pub use meta::{meta_div, meta_harmonic, meta_prod, KRow, MetaStatus, MetastabilityBound, ENUMERATION_LIMIT};

type RateFn = dyn Fn(&Rat) -> Result<BigUint, RateError> + Send + Sync;

fn m_rat(m: u64) -> Rat {
    Rat::from_integer(m.into())
}

/// `Φ̃` (for `d(x_n, x_{n+1}) → 0`) and `Φ` (for `d(x_n, Tx_n) → 0`) at one ε.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityRates {
    pub variant: AoyamaVariant,
    pub eps: Rat,
    pub m: u64,
    pub phi_tilde: BigUint,
    pub phi: BigUint,
    /// The product lower bound used by the product-rate form.
    pub d: Option<Rat>,
}

impl RegularityRates {
    pub fn to_json(&self) -> Value {
        json!({
            "variant": self.variant.to_string(),
            "eps": format_rational(&self.eps),
            "M": self.m,
            "Phi_tilde": self.phi_tilde.to_string(),
            "Phi": self.phi.to_string(),
            "D": self.d.as_ref().map(format_rational),
        })
    }
}

/// The pair `ε ↦ (Φ̃(ε), Φ(ε))` with `M` and the schedule moduli bound in.
///
/// The metastability towers evaluate these at very small ε, so no range
/// check is applied here; the public `asreg_rate_*` wrappers check ranges.
#[derive(Clone)]
pub struct RegularityModel {
    variant: AoyamaVariant,
    name: String,
    m: u64,
    phi_tilde: Arc<RateFn>,
    phi: Arc<RateFn>,
    d: Option<Arc<RateDFn>>,
}

type RateDFn = dyn Fn(&Rat) -> Result<Rat, RateError> + Send + Sync;

impl fmt::Debug for RegularityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RegularityModel({}, M = {})", self.name, self.m)
    }
}

impl RegularityModel {
    /// Divergence-rate form:
    /// `Φ̃(ε) = θ(β(ε/4M) + 1 + ⌈ln(2M/ε)⌉) + 1`,
    /// `Φ(ε) = max{Φ̃(ε/2), α(ε/4M)}`.
    pub fn divergence(schedule: &ScalarSchedule, m: u64) -> Result<Self, RateError> {
        check_m(m)?;
        let theta = schedule.require_theta_div()?.clone();
        let beta = schedule.beta.clone();
        let alpha = schedule.alpha.clone();
        let pt: Arc<RateFn> = Arc::new(move |e: &Rat| {
            let b = beta.eval(&(e / m_rat(4 * m)))?;
            let ln = ceil_ln(&(m_rat(2 * m) / e));
            Ok(theta.eval(&(b + 1u32 + ln))? + 1u32)
        });
        let pt2 = pt.clone();
        let phi: Arc<RateFn> = Arc::new(move |e: &Rat| {
            let a = pt2(&(e / rat(2, 1)))?;
            Ok(a.max(alpha.eval(&(e / m_rat(4 * m)))?))
        });
        Ok(RegularityModel {
            variant: AoyamaVariant::Divergence,
            name: format!("div[{}]", schedule.name()),
            m,
            phi_tilde: pt,
            phi,
            d: None,
        })
    }

    /// Product-rate form with `D ≤ Π_{n=1}^{β(ε/4M)} (1 − λ_{n+1})`:
    /// `Φ̃(ε) = θ(Dε/2M) + 1`, `Φ(ε) = max{θ(Dε/4M) + 1, α(ε/4M)}`.
    ///
    /// `Φ` reuses the `D` taken at `β(ε/4M)`, exactly as stated for this
    /// form, rather than recomputing it at `β(ε/8M)`.
    pub fn product(schedule: &ScalarSchedule, m: u64) -> Result<Self, RateError> {
        check_m(m)?;
        let theta = schedule.require_theta_prod()?.clone();
        schedule.d_lower_bound(&BigUint::one())?;
        let sched = schedule.clone();
        let d: Arc<RateDFn> = Arc::new(move |e: &Rat| {
            let b = sched.beta.eval(&(e / m_rat(4 * m)))?;
            let d = sched.d_lower_bound(&b)?;
            if !d.is_positive() {
                return Err(out_of_range("D", "(0, ∞)", &d));
            }
            Ok(d)
        });
        let (d1, d2) = (d.clone(), d.clone());
        let theta2 = theta.clone();
        let alpha = schedule.alpha.clone();
        let pt: Arc<RateFn> = Arc::new(move |e: &Rat| {
            let d = d1(e)?;
            Ok(theta.eval(&(d * e / m_rat(2 * m)))? + 1u32)
        });
        let phi: Arc<RateFn> = Arc::new(move |e: &Rat| {
            let d = d2(e)?;
            let first = theta2.eval(&(d * e / m_rat(4 * m)))? + 1u32;
            Ok(first.max(alpha.eval(&(e / m_rat(4 * m)))?))
        });
        Ok(RegularityModel {
            variant: AoyamaVariant::Product,
            name: format!("prod[{}]", schedule.name()),
            m,
            phi_tilde: pt,
            phi,
            d: Some(d),
        })
    }

    /// Closed forms for `λ_n = 1/(n+1)`:
    /// `Ψ̃(ε) = ⌈2M/ε + 8M²/ε²⌉ − 1`, `Ψ(ε) = ⌈4M/ε + 16M²/ε²⌉ − 1`.
    pub fn harmonic(m: u64) -> Result<Self, RateError> {
        check_m(m)?;
        let closed = move |a: u64, b: u64| -> Arc<RateFn> {
            Arc::new(move |e: &Rat| {
                let mr = m_rat(m);
                let v = rat(a as i64, 1) * &mr / e + rat(b as i64, 1) * &mr * &mr / (e * e);
                Ok((ceil_nat(&v) - 1u32).max(BigUint::one()))
            })
        };
        Ok(RegularityModel {
            variant: AoyamaVariant::Harmonic,
            name: "harmonic".into(),
            m,
            phi_tilde: closed(2, 8),
            phi: closed(4, 16),
            d: None,
        })
    }

    pub fn variant(&self) -> AoyamaVariant {
        self.variant
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn phi_tilde(&self, eps: &Rat) -> Result<BigUint, RateError> {
        positive(eps)?;
        (self.phi_tilde)(eps)
    }

    pub fn phi(&self, eps: &Rat) -> Result<BigUint, RateError> {
        positive(eps)?;
        (self.phi)(eps)
    }

    pub fn rates(&self, eps: &Rat) -> Result<RegularityRates, RateError> {
        Ok(RegularityRates {
            variant: self.variant,
            eps: eps.clone(),
            m: self.m,
            phi_tilde: self.phi_tilde(eps)?,
            phi: self.phi(eps)?,
            d: self.d.as_ref().map(|d| d(eps)).transpose()?,
        })
    }

    /// `Φ̃` and `Φ` as [`EpsModulus`] values.
    pub fn as_moduli(&self) -> (EpsModulus, EpsModulus) {
        use crate::moduli::ModulusKind::RateOfConvergence;
        let (a, b) = (self.phi_tilde.clone(), self.phi.clone());
        (
            EpsModulus::try_new(RateOfConvergence, format!("Phi_tilde[{}]", self.name), move |e| a(e)),
            EpsModulus::try_new(RateOfConvergence, format!("Phi[{}]", self.name), move |e| b(e)),
        )
    }
}

fn positive(eps: &Rat) -> Result<(), RateError> {
    if !eps.is_positive() {
        return Err(out_of_range("eps", "(0, ∞)", eps));
    }
    Ok(())
}

/// Rates under a divergence rate `θ` of `Σ λ_{n+1}`; `ε ∈ (0, 2)`.
pub fn asreg_rate_div(eps: &Rat, m: u64, schedule: &ScalarSchedule) -> Result<RegularityRates, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    RegularityModel::divergence(schedule, m)?.rates(eps)
}

/// Rates under a product rate `θ` of `Π (1 − λ_{n+1}) → 0`; `ε ∈ (0, 2)`.
pub fn asreg_rate_prod(eps: &Rat, m: u64, schedule: &ScalarSchedule) -> Result<RegularityRates, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    RegularityModel::product(schedule, m)?.rates(eps)
}

/// Closed-form rates for `λ_n = 1/(n+1)`; `ε ∈ (0, 1)`.
pub fn asreg_rate_harmonic(eps: &Rat, m: u64) -> Result<RegularityRates, RateError> {
    check_open(eps, 1, "(0, 1)")?;
    RegularityModel::harmonic(m)?.rates(eps)
}

/// Outcome of an iterated index bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexBound {
    /// The bound, or a lower bound on it when `complete` is false.
    pub value: BigUint,
    pub iterations: BigUint,
    pub steps: u64,
    pub complete: bool,
}

impl IndexBound {
    pub fn to_json(&self) -> Value {
        json!({
            "K": self.value.to_string(),
            "iterations": self.iterations.to_string(),
            "steps": self.steps,
            "status": if self.complete { "complete" } else { "partial" },
        })
    }
}

fn ceil_sq_ratio(num: u64, m: u64, eps: &Rat) -> BigUint {
    ceil_nat(&(m_rat(num * m * m) / (eps * eps)))
}

/// `K(ε, g, M) = g̃^(⌈M²/ε²⌉)(0)` with `g̃(k) = k + g(k)`.
///
/// Some `K₀ ≤ K` has `d(z_{t_i}, z_{t_j}) ≤ ε` for all `i, j ∈ [K₀, K₀ + g(K₀)]`,
/// where `t_k = 1/(k+1)`.
pub fn browder_k(eps: &Rat, g: &Counterexample, m: u64, budget: &Budget) -> Result<IndexBound, RateError> {
    positive(eps)?;
    check_m(m)?;
    let count = ceil_sq_ratio(1, m, eps);
    let it = iterate_functional(|k| Ok(k + g.eval(k)), &count, BigUint::zero(), budget)?;
    Ok(IndexBound { value: it.value, iterations: count, steps: it.steps, complete: it.complete })
}

type IndexFn = dyn Fn(&BigUint) -> BigUint + Send + Sync;

/// A map `ℕ → ℕ` used as an index transformer.
#[derive(Clone)]
pub struct IndexMap {
    name: String,
    monotone: bool,
    f: Arc<IndexFn>,
}

impl fmt::Debug for IndexMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexMap({})", self.name)
    }
}

impl IndexMap {
    pub fn new(name: impl Into<String>, f: impl Fn(&BigUint) -> BigUint + Send + Sync + 'static) -> Self {
        IndexMap { name: name.into(), monotone: false, f: Arc::new(f) }
    }

    pub fn with_monotone(mut self) -> Self {
        self.monotone = true;
        self
    }

    /// `k ↦ k + c`.
    pub fn shift(c: u64) -> Self {
        Self::new(format!("k+{c}"), move |k| k + c).with_monotone()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, k: &BigUint) -> BigUint {
        (self.f)(k)
    }

    /// `max{f(i) | i ≤ n}`; enumerated unless the map is monotone.
    pub fn running_max(&self, n: &BigUint) -> Result<BigUint, RateError> {
        if self.monotone {
            return Ok(self.eval(n));
        }
        let top = n
            .to_u64()
            .filter(|&t| t <= ENUMERATION_LIMIT)
            .ok_or_else(|| RateError::TooLarge(format!("running max of {} over 0..={n}", self.name)))?;
        Ok((0..=top).map(|i| self.eval(&i.into())).max().unwrap_or_default())
    }
}

/// `K(ε, g, M, χ, h) = χ⁺(g_{h,χ}^(⌈4M²/ε²⌉)(0))` with
/// `g_{h,χ}(k) = max{h(i) | i ≤ χ(k) + g(χ(k))}` and `χ⁺` the running max of `χ`.
///
/// `χ(k) = β(1/(k+1))` for a rate `β` of `t_k → 0`, and `t_k ≥ 1/(h(k)+1)`.
pub fn browder_k_general(
    eps: &Rat,
    g: &Counterexample,
    m: u64,
    chi: &IndexMap,
    h: &IndexMap,
    budget: &Budget,
) -> Result<IndexBound, RateError> {
    positive(eps)?;
    check_m(m)?;
    let count = ceil_sq_ratio(4, m, eps);
    let it = iterate_functional(
        |k| {
            let c = chi.eval(k);
            let top = &c + g.eval(&c);
            h.running_max(&top)
        },
        &count,
        BigUint::zero(),
        budget,
    )?;
    Ok(IndexBound { value: chi.running_max(&it.value)?, iterations: count, steps: it.steps, complete: it.complete })
}

fn check_t(t: &Rat) -> Result<(), RateError> {
    if !t.is_positive() || *t >= Rat::one() {
        return Err(out_of_range("t", "(0, 1)", t));
    }
    Ok(())
}

/// `P(ε, t, M, φ) = ⌈(6M²/(tε)) φ(tε/(6M))⌉`.
///
/// With `φ` a rate of asymptotic regularity of `(y_n)`, every Cesàro mean
/// `C_{m,p}(γ_n^t)` with `p ≥ P` is at most ε.
pub fn gamma_cesaro_p(eps: &Rat, t: &Rat, m: u64, phi: &EpsModulus) -> Result<BigUint, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    check_t(t)?;
    check_m(m)?;
    let te = t * eps;
    let ph = phi.eval(&(&te / m_rat(6 * m)))?;
    Ok(ceil_nat(&(m_rat(6 * m * m) / te * nat_to_rat(&ph))))
}

/// `ψ = φ̃(ε/(2M(P(ε/2)+1))) + P(ε/2)`: `γ_n^t ≤ ε` for all `n ≥ ψ`,
/// where `φ̃` is a rate for `d(y_n, y_{n+1}) → 0`.
pub fn gamma_limsup_psi(
    eps: &Rat,
    t: &Rat,
    m: u64,
    phi: &EpsModulus,
    phi_tilde: &EpsModulus,
) -> Result<BigUint, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    let p = gamma_cesaro_p(&(eps / rat(2, 1)), t, m, phi)?;
    let arg = eps / (m_rat(2 * m) * nat_to_rat(&(&p + 1u32)));
    Ok(phi_tilde.eval(&arg)? + p)
}

/// `(ε, M) ↦ (ε/M, 1)`: bounds for `M = 1` applied to the metric `d/M`.
pub fn rescale(eps: &Rat, m: u64) -> Result<(Rat, u64), RateError> {
    check_m(m)?;
    positive(eps)?;
    Ok((eps / m_rat(m), 1))
}
