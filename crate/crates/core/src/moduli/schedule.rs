use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};

use super::exact::{self, ceil_nat, nat_to_rat, Rat};
use super::{DivergenceRate, EpsModulus, ModulusKind, RateError};

type LambdaFn = dyn Fn(u64) -> Rat + Send + Sync;
type LambdaF64Fn = dyn Fn(u64) -> f64 + Send + Sync;
type DFn = dyn Fn(&BigUint) -> Rat + Send + Sync;

/// A step-size sequence `(λ_n)_{n≥1}` in `[0,1]` together with its moduli.
///
/// * `alpha`: rate of convergence of `λ_n → 0`.
/// * `beta`: Cauchy modulus of `s_n = Σ_{i≤n} |λ_{i+1} − λ_i|`.
/// * `theta_div`: rate of divergence of `Σ λ_{n+1}`.
/// * `theta_prod`: rate of convergence of `Π (1 − λ_{n+1}) → 0`.
/// * the D provider: `m ↦` a positive lower bound of `Π_{n=1}^{m} (1 − λ_{n+1})`.
#[derive(Clone)]
pub struct ScalarSchedule {
    name: String,
    lambda: Arc<LambdaFn>,
    lambda_f64: Arc<LambdaF64Fn>,
    pub alpha: EpsModulus,
    pub beta: EpsModulus,
    pub theta_div: Option<DivergenceRate>,
    pub theta_prod: Option<EpsModulus>,
    d_provider: Option<Arc<DFn>>,
    cache: Arc<RwLock<Vec<f64>>>,
}

impl ScalarSchedule {
    pub fn new(
        name: impl Into<String>,
        lambda: impl Fn(u64) -> Rat + Send + Sync + 'static,
        lambda_f64: impl Fn(u64) -> f64 + Send + Sync + 'static,
        alpha: EpsModulus,
        beta: EpsModulus,
    ) -> Self {
        ScalarSchedule {
            name: name.into(),
            lambda: Arc::new(lambda),
            lambda_f64: Arc::new(lambda_f64),
            alpha,
            beta,
            theta_div: None,
            theta_prod: None,
            d_provider: None,
            cache: Arc::new(RwLock::new(vec![f64::NAN])),
        }
    }

    pub fn with_theta_div(mut self, theta: DivergenceRate) -> Self {
        self.theta_div = Some(theta);
        self
    }

    pub fn with_theta_prod(mut self, theta: EpsModulus) -> Self {
        self.theta_prod = Some(theta);
        self
    }

    pub fn with_d_provider(mut self, d: impl Fn(&BigUint) -> Rat + Send + Sync + 'static) -> Self {
        self.d_provider = Some(Arc::new(d));
        self
    }

    /// Looks up a canonical schedule by name.
    pub fn by_name(name: &str) -> Result<Self, RateError> {
        match name.trim() {
            "harmonic" => Ok(harmonic_schedule()),
            "sqrt" => Ok(sqrt_schedule()),
            other => Err(RateError::Descriptor(other.to_string(), "unknown schedule (expected harmonic or sqrt)".into())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Exact `λ_n`, `n ≥ 1`.
    pub fn lambda(&self, n: u64) -> Rat {
        assert!(n >= 1, "schedules are indexed from 1");
        (self.lambda)(n)
    }

    pub fn lambda_f64(&self, n: u64) -> f64 {
        (self.lambda_f64)(n)
    }

    /// `λ_0..=λ_upto` as doubles (index 0 is unused and holds NaN). Cached.
    pub fn lambdas_f64(&self, upto: usize) -> Vec<f64> {
        {
            let c = self.cache.read().expect("lambda cache poisoned");
            if c.len() > upto {
                return c[..=upto].to_vec();
            }
        }
        let mut c = self.cache.write().expect("lambda cache poisoned");
        while c.len() <= upto {
            let n = c.len() as u64;
            c.push((self.lambda_f64)(n));
        }
        c[..=upto].to_vec()
    }

    /// Lower bound for `Π_{n=1}^{m} (1 − λ_{n+1})`.
    pub fn d_lower_bound(&self, m: &BigUint) -> Result<Rat, RateError> {
        let d = self
            .d_provider
            .as_ref()
            .ok_or_else(|| RateError::MissingModulus { schedule: self.name.clone(), modulus: "product lower bound D" })?;
        Ok(d(m))
    }

    pub fn has_d_provider(&self) -> bool {
        self.d_provider.is_some()
    }

    pub fn require_theta_div(&self) -> Result<&DivergenceRate, RateError> {
        self.theta_div
            .as_ref()
            .ok_or_else(|| RateError::MissingModulus { schedule: self.name.clone(), modulus: "divergence rate θ" })
    }

    pub fn require_theta_prod(&self) -> Result<&EpsModulus, RateError> {
        self.theta_prod
            .as_ref()
            .ok_or_else(|| RateError::MissingModulus { schedule: self.name.clone(), modulus: "product rate θ" })
    }
}

impl fmt::Debug for ScalarSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarSchedule({})", self.name)
    }
}

fn one_over_eps(e: &Rat) -> BigUint {
    ceil_nat(&e.recip())
}

fn sat_sub_at_least_one(v: BigUint, k: u32) -> BigUint {
    if v > BigUint::from(k) {
        v - k
    } else {
        BigUint::one()
    }
}

/// `λ_n = 1/(n+1)`.
pub fn harmonic_schedule() -> ScalarSchedule {
    let alpha = EpsModulus::new(ModulusKind::RateOfConvergence, "ceil(1/eps)-1", |e| {
        sat_sub_at_least_one(one_over_eps(e), 1)
    })
    .with_antitone();
    let beta = EpsModulus::new(ModulusKind::CauchyModulus, "ceil(1/eps)-1|2", |e| {
        let k = if *e >= exact::rat(1, 2) { 1 } else { 2 };
        sat_sub_at_least_one(one_over_eps(e), k)
    })
    .with_antitone();
    let theta_prod = EpsModulus::new(ModulusKind::ProductRate, "ceil(2/eps)-2", |e| {
        sat_sub_at_least_one(ceil_nat(&(exact::rat(2, 1) / e)), 2)
    })
    .with_antitone();
    let theta_div = DivergenceRate::try_new("ceil(e^(n+2))", |n| {
        let k = n.to_u64().ok_or_else(|| RateError::TooLarge(format!("e^({n}+2)")))?;
        exact::ceil_exp(k.checked_add(2).ok_or_else(|| RateError::TooLarge(format!("e^({n}+2)")))?)
    })
    .with_monotone();
    ScalarSchedule::new(
        "harmonic",
        |n| Rat::new(BigInt::one(), BigInt::from(n) + 1),
        |n| 1.0 / (n as f64 + 1.0),
        alpha,
        beta,
    )
    .with_theta_div(theta_div)
    .with_theta_prod(theta_prod)
    .with_d_provider(|m| Rat::new(BigInt::from(2), BigInt::from(m.clone()) + 2))
}

/// Bits of working precision for the `n`-th term of the sqrt schedule.
fn sqrt_precision(n: u64) -> usize {
    42 + 3 * (64 - (n + 1).leading_zeros() as usize) / 2 + 1
}

fn sqrt_lambda_parts(n: u64) -> (BigUint, usize) {
    let k = sqrt_precision(n);
    let four_k = BigUint::one() << (2 * k);
    let v = exact::ceil_div(&four_k, &BigUint::from(n + 1));
    let mut a = v.sqrt();
    if &a * &a < v {
        a += 1u32;
    }
    (a, k)
}

/// `λ_n = ⌈2^k/√(n+1)⌉ / 2^k`, an upper approximation of `1/√(n+1)`
/// within `2^-41·(n+1)^-3/2`. The sequence is decreasing.
pub fn sqrt_schedule() -> ScalarSchedule {
    let inv_sq = |e: &Rat| ceil_nat(&(e * e).recip()).max(BigUint::one());
    let alpha = EpsModulus::new(ModulusKind::RateOfConvergence, "ceil(1/eps^2)", inv_sq).with_antitone();
    let beta = EpsModulus::new(ModulusKind::CauchyModulus, "ceil(1/eps^2)", inv_sq).with_antitone();
    let theta_div = DivergenceRate::new("ceil((n/2+2)^2)", |n| {
        let m = n + 4u32;
        exact::ceil_div(&(&m * &m), &BigUint::from(4u32))
    })
    .with_monotone();
    ScalarSchedule::new(
        "sqrt",
        |n| {
            let (a, k) = sqrt_lambda_parts(n);
            nat_to_rat(&a) / nat_to_rat(&(BigUint::one() << k))
        },
        |n| {
            let (a, k) = sqrt_lambda_parts(n);
            a.to_f64().expect("finite") / 2f64.powi(k as i32)
        },
        alpha,
        beta,
    )
    .with_theta_div(theta_div)
}
