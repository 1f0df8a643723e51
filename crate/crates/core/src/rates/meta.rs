use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::moduli::exact::{ceil_nat, format_rational, nat_to_rat, pred, rat};
use crate::moduli::{
    ceil_ln, theta_plus, Budget, Counterexample, DivergenceRate, EpsModulus, Rat, RateError, ScalarSchedule,
};
use crate::realseq::{check_m, check_open, AoyamaVariant};

use super::{m_rat, RegularityModel};

/// Largest index range the Γ / Σ maximum is enumerated over.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetaStatus {
    Complete,
    /// Stopped early. `sigma` and `l` are then certified lower bounds.
    Partial { reason: String },
}

impl MetaStatus {
    pub fn is_complete(&self) -> bool {
        matches!(self, MetaStatus::Complete)
    }
}

/// Intermediates recorded at one visited `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KRow {
    pub k: BigUint,
    /// `P̃_k(ε²/24)`, the inner Cesàro length used by `χ*_k(ε²/12)`.
    pub p_tilde: BigUint,
    /// `χ*_k(ε²/12)`.
    pub chi: BigUint,
    /// `Θ_k(ε²/4)`.
    pub theta: BigUint,
    /// Product lower bound `D_k` (product-rate form only).
    pub d_k: Option<Rat>,
    /// `g_{ε²/4,k}(Θ_k − χ*_k)`.
    pub g_width: BigUint,
    /// `Δ*_k(ε²/4, g)`.
    pub delta: Rat,
    /// `f(k) = max{⌈M²/Δ*_k⌉, k} − k`.
    pub f: BigUint,
}

impl KRow {
    fn to_json(&self) -> Value {
        json!({
            "k": self.k.to_string(),
            "P_tilde": self.p_tilde.to_string(),
            "chi_star": self.chi.to_string(),
            "Theta": self.theta.to_string(),
            "D_k": self.d_k.as_ref().map(format_rational),
            "g_width": self.g_width.to_string(),
            "Delta_star": format_rational(&self.delta),
            "f": self.f.to_string(),
        })
    }
}

/// Σ together with every intermediate of the tower.
#[derive(Debug, Clone, PartialEq)]
pub struct MetastabilityBound {
    pub variant: AoyamaVariant,
    pub eps: Rat,
    pub m: u64,
    pub g: String,
    pub rates: String,
    /// `ε₀ = ε²/(24(M+1)²)`.
    pub eps0: Rat,
    /// `⌈1/ε₀⌉`.
    pub c: BigUint,
    /// `⌈M²/ε₀²⌉`, the number of `f̃*` applications.
    pub iter_count: BigUint,
    pub steps: u64,
    /// `f̃*^(i)(0)` for `i = 1..=steps`.
    pub trace: Vec<BigUint>,
    /// `L = f̃*^(iter_count)(0) + ⌈1/ε₀⌉`.
    pub l: BigUint,
    /// `Γ` (divergence form only).
    pub gamma: Option<BigUint>,
    /// `⌈ln(12M²/ε²)⌉` (divergence form only).
    pub ln_term: Option<u64>,
    pub sigma: BigUint,
    /// One row per visited `k`, sorted by `k`.
    pub rows: Vec<KRow>,
    pub status: MetaStatus,
}

impl MetastabilityBound {
    pub fn is_complete(&self) -> bool {
        self.status.is_complete()
    }

    pub fn row(&self, k: &BigUint) -> Option<&KRow> {
        self.rows.binary_search_by(|r| r.k.cmp(k)).ok().map(|i| &self.rows[i])
    }

    pub fn to_json(&self) -> Value {
        let (status, reason) = match &self.status {
            MetaStatus::Complete => ("complete", None),
            MetaStatus::Partial { reason } => ("partial", Some(reason.clone())),
        };
        let gamma_or_l = self.gamma.as_ref().unwrap_or(&self.l);
        json!({
            "variant": self.variant.to_string(),
            "eps": format_rational(&self.eps),
            "M": self.m,
            "g": self.g,
            "rates": self.rates,
            "status": status,
            "reason": reason,
            "eps0": format_rational(&self.eps0),
            "ceil_inv_eps0": self.c.to_string(),
            "iter_count": self.iter_count.to_string(),
            "steps": self.steps,
            "Gamma_or_L": gamma_or_l.to_string(),
            "L": self.l.to_string(),
            "ln_term": self.ln_term,
            "Sigma": self.sigma.to_string(),
            "trace": self.trace.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "per_k": self.rows.iter().map(KRow::to_json).collect::<Vec<_>>(),
        })
    }
}

enum ThetaRule {
    /// `Θ_k(ε) = θ(χ*_k(ε/3) − 1 + ⌈ln(3M²/ε)⌉) + 1`.
    Div(DivergenceRate),
    /// `Θ_k(ε) = max{θ(D_k ε/3M²) + 1, χ*_k(ε/3) + 1}` with
    /// `D_k ≤ Π_{n=1}^{χ*_k(ε/3)−1} (1 − λ_{n+1})`.
    Prod { theta: EpsModulus, schedule: ScalarSchedule },
    /// `Θ_k(ε) = ⌈3M²(χ*_k(ε/3) + 1)/ε⌉ − 1`.
    Harmonic,
}

struct Tower<'a> {
    m: u64,
    g: &'a Counterexample,
    model: RegularityModel,
    rule: ThetaRule,
    /// `ε²/12`, the argument of `χ*_k` throughout.
    e_chi: Rat,
    /// `ε²/4`, the argument of `Θ_k` and `Δ*_k`.
    e_theta: Rat,
    ln_term: u64,
    rows: BTreeMap<BigUint, KRow>,
}

impl Tower<'_> {
    /// `P̃_k(ε) = ⌈(12M²(k+1)/ε) Φ(ε/(12M(k+1)))⌉`.
    fn p_tilde(&self, k: &BigUint, e: &Rat) -> Result<BigUint, RateError> {
        let k1 = nat_to_rat(&(k + 1u32));
        let phi = self.model.phi(&(e / (m_rat(12 * self.m) * &k1)))?;
        Ok(ceil_nat(&(m_rat(12 * self.m * self.m) * k1 / e * nat_to_rat(&phi))))
    }

    /// `χ*_k(ε) = Φ̃(ε/(4M(P̃_k(ε/2)+1))) + P̃_k(ε/2)`; returns `(P̃_k(ε/2), χ*_k(ε))`.
    fn chi(&self, k: &BigUint, e: &Rat) -> Result<(BigUint, BigUint), RateError> {
        let p = self.p_tilde(k, &(e / rat(2, 1)))?;
        let arg = e / (m_rat(4 * self.m) * nat_to_rat(&(&p + 1u32)));
        let chi = self.model.phi_tilde(&arg)? + &p;
        Ok((p, chi))
    }

    fn row(&mut self, k: &BigUint) -> Result<&KRow, RateError> {
        if !self.rows.contains_key(k) {
            let row = self.compute_row(k)?;
            self.rows.insert(k.clone(), row);
        }
        Ok(&self.rows[k])
    }

    fn compute_row(&self, k: &BigUint) -> Result<KRow, RateError> {
        let (p_tilde, chi) = self.chi(k, &self.e_chi)?;
        let m2 = m_rat(self.m * self.m);
        let (theta, d_k) = match &self.rule {
            ThetaRule::Div(theta) => {
                let arg = pred(&chi) + self.ln_term;
                let t = theta.eval(&arg)?;
                if t < arg {
                    return Err(RateError::OutOfRange {
                        what: "divergence rate value θ(k)",
                        range: "[k, ∞) for terms in [0,1]",
                        value: format!("θ({arg}) = {t}"),
                    });
                }
                (t + 1u32, None)
            }
            ThetaRule::Prod { theta, schedule } => {
                let d = schedule.d_lower_bound(&pred(&chi))?;
                let t = theta.eval(&(&d * &self.e_theta / (rat(3, 1) * &m2)))? + 1u32;
                (t.max(&chi + 1u32), Some(d))
            }
            ThetaRule::Harmonic => {
                let v = rat(3, 1) * &m2 * nat_to_rat(&(&chi + 1u32)) / &self.e_theta;
                (pred(&ceil_nat(&v)), None)
            }
        };
        if theta <= chi {
            return Err(RateError::OutOfRange {
                what: "Θ_k − χ*_k",
                range: "positive integers",
                value: format!("{theta} − {chi}"),
            });
        }
        let width = &theta - &chi;
        let g_width = &width + self.g.eval(&theta);
        let delta = &self.e_theta / (rat(3, 1) * nat_to_rat(&g_width));
        let f = ceil_nat(&(&m2 / &delta)).max(k.clone()) - k;
        Ok(KRow { k: k.clone(), p_tilde, chi, theta, d_k, g_width, delta, f })
    }

    fn max_over_rows(&self, pick: impl Fn(&KRow) -> &BigUint) -> Option<BigUint> {
        self.rows.values().map(pick).max().cloned()
    }
}

fn too_large_is_partial(e: RateError) -> Result<String, RateError> {
    match e {
        RateError::TooLarge(what) => Ok(format!("value too large to evaluate exactly: {what}")),
        other => Err(other),
    }
}

fn run(
    variant: AoyamaVariant,
    eps: &Rat,
    m: u64,
    g: &Counterexample,
    model: RegularityModel,
    rule: ThetaRule,
    budget: &Budget,
) -> Result<MetastabilityBound, RateError> {
    check_m(m)?;
    if model.m() != m {
        return Err(RateError::OutOfRange { what: "M of the regularity model", range: "equal to M", value: model.m().to_string() });
    }
    let eps2 = eps * eps;
    let eps0 = &eps2 / m_rat(24 * (m + 1) * (m + 1));
    let c = ceil_nat(&eps0.recip());
    let iter_count = ceil_nat(&(m_rat(m * m) / (&eps0 * &eps0)));
    let ln_term = ceil_ln(&(m_rat(12 * m * m) / &eps2));
    let mut tower = Tower {
        m,
        g,
        model,
        rule,
        e_chi: &eps2 / rat(12, 1),
        e_theta: &eps2 / rat(4, 1),
        ln_term,
        rows: BTreeMap::new(),
    };

    // f̃*(k) = k + f(k + c) + c.
    let mut k = BigUint::zero();
    let mut steps = 0u64;
    let mut trace = Vec::new();
    let mut stop: Option<String> = None;
    let mut remaining = iter_count.clone();
    while !remaining.is_zero() {
        if budget.exceeded(steps, &k) {
            stop = Some(format!(
                "budget exhausted after {steps} of {iter_count} steps (current iterate has {} bits)",
                k.bits()
            ));
            break;
        }
        let f = match tower.row(&(&k + &c)) {
            Ok(row) => row.f.clone(),
            Err(e) => {
                stop = Some(too_large_is_partial(e)?);
                break;
            }
        };
        k = &k + f + &c;
        steps += 1;
        remaining -= 1u32;
        trace.push(k.clone());
    }
    let l = &k + &c;

    if stop.is_none() {
        stop = match variant {
            AoyamaVariant::Harmonic => tower.row(&l).err().map(too_large_is_partial).transpose()?,
            _ => enumerate(&mut tower, &c, &l, budget)?,
        };
    }

    let theta_div = match &tower.rule {
        ThetaRule::Div(t) => Some(t.clone()),
        _ => None,
    };
    let (sigma, gamma) = match (&theta_div, stop.is_some()) {
        (Some(theta), partial) => {
            let gamma = tower.max_over_rows(|r| &r.chi);
            let sigma = match &gamma {
                Some(gm) => {
                    let arg = pred(gm) + ln_term;
                    match theta_plus(theta, &arg) {
                        Ok(v) => v + 1u32,
                        // θ⁺(n) ≥ θ(n) ≥ n, so the argument itself is a lower bound.
                        Err(RateError::TooLarge(_)) if partial => arg + 1u32,
                        Err(e) => return Err(e),
                    }
                }
                None => BigUint::one(),
            };
            (sigma, Some(gamma.unwrap_or_else(BigUint::one)))
        }
        (None, _) => {
            let sigma = match variant {
                AoyamaVariant::Harmonic if stop.is_none() => tower.rows[&l].theta.clone(),
                _ => tower.max_over_rows(|r| &r.theta).unwrap_or_else(BigUint::one),
            };
            (sigma, None)
        }
    };

    let status = match stop {
        None => MetaStatus::Complete,
        Some(reason) => {
            log::info!("metastability bound is partial: {reason}");
            MetaStatus::Partial { reason }
        }
    };
    Ok(MetastabilityBound {
        variant,
        eps: eps.clone(),
        m,
        g: g.descriptor(),
        rates: tower.model.name().to_string(),
        eps0,
        c,
        iter_count,
        steps,
        trace,
        l,
        gamma,
        ln_term: theta_div.map(|_| ln_term),
        sigma,
        rows: tower.rows.into_values().collect(),
        status,
    })
}

/// Visits every `k ∈ [c, L]`; returns a stop reason if that is not possible.
fn enumerate(tower: &mut Tower<'_>, c: &BigUint, l: &BigUint, budget: &Budget) -> Result<Option<String>, RateError> {
    let span = l - c + 1u32;
    if span.to_u64().is_none_or(|s| s > ENUMERATION_LIMIT) {
        return Ok(Some(format!("the range [{c}, {l}] has more than {ENUMERATION_LIMIT} indices")));
    }
    let mut k = c.clone();
    while &k <= l {
        if budget.cancelled() {
            return Ok(Some("cancelled".into()));
        }
        if let Err(e) = tower.row(&k) {
            return too_large_is_partial(e).map(Some);
        }
        k += 1u32;
    }
    Ok(None)
}

/// Σ under a divergence rate `θ` of `Σ λ_{n+1}`, with `Φ̃`, `Φ` from the
/// divergence-rate regularity form; `ε ∈ (0, 2)`.
///
/// `Σ = θ⁺(Γ − 1 + ⌈ln(12M²/ε²)⌉) + 1` with `Γ` the maximum of `χ*_k(ε²/12)`
/// over `k ∈ [⌈1/ε₀⌉, L]`.
pub fn meta_div(
    eps: &Rat,
    g: &Counterexample,
    m: u64,
    schedule: &ScalarSchedule,
    budget: &Budget,
) -> Result<MetastabilityBound, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    let theta = schedule.require_theta_div()?.clone();
    let model = RegularityModel::divergence(schedule, m)?;
    run(AoyamaVariant::Divergence, eps, m, g, model, ThetaRule::Div(theta), budget)
}

/// Σ under a product rate `θ` of `Π (1 − λ_{n+1}) → 0`; `ε ∈ (0, 2)`.
///
/// `Σ = max{Θ_k(ε²/4) | k ∈ [⌈1/ε₀⌉, L]}`. `model` supplies `Φ̃` and `Φ`;
/// pass `None` for the product-rate form on `schedule`.
pub fn meta_prod(
    eps: &Rat,
    g: &Counterexample,
    m: u64,
    schedule: &ScalarSchedule,
    model: Option<&RegularityModel>,
    budget: &Budget,
) -> Result<MetastabilityBound, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    let theta = schedule.require_theta_prod()?.clone();
    schedule.d_lower_bound(&BigUint::one())?;
    let model = match model {
        Some(m) => m.clone(),
        None => RegularityModel::product(schedule, m)?,
    };
    let rule = ThetaRule::Prod { theta, schedule: schedule.clone() };
    run(AoyamaVariant::Product, eps, m, g, model, rule, budget)
}

/// Σ for `λ_n = 1/(n+1)` in closed form; `ε ∈ (0, 1)`.
///
/// `Σ = Θ_L(ε²/4) = ⌈12M²(χ*_L(ε²/12) + 1)/ε²⌉ − 1`, using that `χ*_k`
/// increases with `k`.
pub fn meta_harmonic(eps: &Rat, g: &Counterexample, m: u64, budget: &Budget) -> Result<MetastabilityBound, RateError> {
    check_open(eps, 1, "(0, 1)")?;
    let model = RegularityModel::harmonic(m)?;
    run(AoyamaVariant::Harmonic, eps, m, g, model, ThetaRule::Harmonic, budget)
}
