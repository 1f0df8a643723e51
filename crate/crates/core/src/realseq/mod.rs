//! Quantitative bounds for recursive inequalities on real sequences, and
//! checkers that evaluate their conclusions on concrete data.

mod window;

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};

use crate::moduli::exact::{ceil_nat, format_rational, nat, nat_to_rat, rat};
use crate::moduli::{ceil_ln, Counterexample, DivergenceRate, EpsModulus, Rat, RateError};

pub use window::{cesaro, cesaro_f64, first_passing_window, check_window, RealSequenceWindow, WindowCheck, WindowMode};

pub(crate) fn out_of_range(what: &'static str, range: &'static str, v: &Rat) -> RateError {
    RateError::OutOfRange { what, range, value: format_rational(v) }
}

pub(crate) fn check_open(eps: &Rat, hi: i64, range: &'static str) -> Result<(), RateError> {
    if !eps.is_positive() || *eps >= rat(hi, 1) {
        return Err(out_of_range("eps", range, eps));
    }
    Ok(())
}

pub(crate) fn check_m(m: u64) -> Result<(), RateError> {
    if m == 0 {
        return Err(RateError::OutOfRange { what: "M", range: "positive integers", value: "0".into() });
    }
    Ok(())
}

pub(crate) fn check_d(d: &Rat) -> Result<(), RateError> {
    if !d.is_positive() {
        return Err(out_of_range("D", "(0, ∞)", d));
    }
    Ok(())
}

/// Which recurrence hypothesis produced an [`AoyamaBound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoyamaVariant {
    /// Rate of divergence for `Σα_n`.
    Divergence,
    /// Rate of convergence of `Π(1−α_n)` to 0 plus a lower bound `D`.
    Product,
    /// `α_n = 1/(n+1)`.
    Harmonic,
}

impl fmt::Display for AoyamaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AoyamaVariant::Divergence => "div",
            AoyamaVariant::Product => "prod",
            AoyamaVariant::Harmonic => "harmonic",
        })
    }
}

/// Window start `Θ` and error allowance `Δ` for
/// `s_{n+1} ≤ (1−α_n)s_n + α_n t_n + Δ`, with every intermediate kept.
///
/// The conclusion is `s_n ≤ ε` for all `n ∈ [Θ, Θ+g(Θ)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AoyamaBound {
    pub variant: AoyamaVariant,
    pub eps: Rat,
    pub m: u64,
    /// `ψ(ε/3)`.
    pub psi: BigUint,
    pub theta: BigUint,
    pub delta: Rat,
    /// `L = Θ − ψ(ε/3)`.
    pub l: BigUint,
    /// `g_ε(L) = L + g(Θ)`.
    pub g_eps_l: BigUint,
    /// `Θ + g(Θ)`.
    pub window_end: BigUint,
    /// `⌈ln(3M/ε)⌉`, divergence variant only.
    pub ln_term: Option<u64>,
    /// Product lower bound used (explicit, or `1/ψ(ε/3)` for the harmonic form).
    pub d: Option<Rat>,
    pub theta_name: String,
    pub psi_name: String,
    pub g: String,
}

/// Fills in `L`, `g_ε(L)`, `Δ` once `Θ` is known.
fn finish_bound(
    variant: AoyamaVariant,
    eps: &Rat,
    m: u64,
    psi: BigUint,
    theta: BigUint,
    g: &Counterexample,
    names: (String, String),
) -> Result<AoyamaBound, RateError> {
    if theta <= psi {
        return Err(RateError::OutOfRange {
            what: "Θ − ψ(ε/3)",
            range: "positive integers",
            value: format!("{theta} − {psi}"),
        });
    }
    let l = &theta - &psi;
    let g_theta = g.eval(&theta);
    let g_eps_l = &l + &g_theta;
    let delta = eps / (rat(3, 1) * nat_to_rat(&g_eps_l));
    Ok(AoyamaBound {
        variant,
        eps: eps.clone(),
        m,
        window_end: &theta + &g_theta,
        psi,
        theta,
        delta,
        l,
        g_eps_l,
        ln_term: None,
        d: None,
        theta_name: names.0,
        psi_name: names.1,
        g: g.descriptor(),
    })
}

/// `Θ = θ(ψ(ε/3) − 1 + ⌈ln(3M/ε)⌉) + 1`, `Δ = ε / (3 g_ε(Θ − ψ(ε/3)))`.
///
/// Requires `θ(k) ≥ k` at the point of evaluation, which every divergence
/// rate of a series with terms in `[0,1]` satisfies.
pub fn aoyama_bounds_div(
    eps: &Rat,
    g: &Counterexample,
    m: u64,
    theta: &DivergenceRate,
    psi: &EpsModulus,
) -> Result<AoyamaBound, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    check_m(m)?;
    let psi_v = psi.eval(&(eps / rat(3, 1)))?;
    let ln_term = ceil_ln(&(rat(3 * m as i64, 1) / eps));
    let arg = &psi_v - 1u32 + ln_term;
    let t = theta.eval(&arg)?;
    if t < arg {
        return Err(RateError::OutOfRange {
            what: "divergence rate value θ(k)",
            range: "[k, ∞) for terms in [0,1]",
            value: format!("θ({arg}) = {t}"),
        });
    }
    let names = (theta.name().to_string(), psi.name().to_string());
    let mut b = finish_bound(AoyamaVariant::Divergence, eps, m, psi_v, t + 1u32, g, names)?;
    b.ln_term = Some(ln_term);
    Ok(b)
}

/// `Θ = max{θ(Dε/3M) + 1, ψ(ε/3) + 1}`, `Δ = ε / (3 g_ε(Θ − ψ(ε/3)))`.
///
/// The second entry is `ψ(ε/3) + 1` rather than `ψ(ε/3)`: with `Θ = ψ(ε/3)`
/// the window would start at an index the recurrence does not control and
/// `g_ε(0)` could vanish. Whenever `θ(Dε/3M) ≥ ψ(ε/3)` both forms agree.
pub fn aoyama_bounds_prod(
    eps: &Rat,
    g: &Counterexample,
    m: u64,
    theta: &EpsModulus,
    psi: &EpsModulus,
    d: &Rat,
) -> Result<AoyamaBound, RateError> {
    if !eps.is_positive() {
        return Err(out_of_range("eps", "(0, ∞)", eps));
    }
    check_m(m)?;
    check_d(d)?;
    let psi_v = psi.eval(&(eps / rat(3, 1)))?;
    let t = theta.eval(&(d * eps / rat(3 * m as i64, 1)))? + 1u32;
    let big = t.max(&psi_v + 1u32);
    let names = (theta.name().to_string(), psi.name().to_string());
    let mut b = finish_bound(AoyamaVariant::Product, eps, m, psi_v, big, g, names)?;
    b.d = Some(d.clone());
    Ok(b)
}

/// `Θ = ⌈3Mψ(ε/3)/ε⌉ + 1` for `α_n = 1/(n+1)`.
pub fn aoyama_bounds_harmonic(eps: &Rat, g: &Counterexample, m: u64, psi: &EpsModulus) -> Result<AoyamaBound, RateError> {
    check_open(eps, 3, "(0, 3)")?;
    check_m(m)?;
    let psi_v = psi.eval(&(eps / rat(3, 1)))?;
    let t = ceil_nat(&(rat(3 * m as i64, 1) * nat_to_rat(&psi_v) / eps)) + 1u32;
    let d = Rat::new(1.into(), psi_v.clone().into());
    let names = ("ceil(1/eps)".to_string(), psi.name().to_string());
    let mut b = finish_bound(AoyamaVariant::Harmonic, eps, m, psi_v, t, g, names)?;
    b.d = Some(d);
    Ok(b)
}

/// `Π_{n=1}^{k} (1 − α_n)` in exact arithmetic; 1 for `k = 0`.
pub fn product_prefix(alpha: impl Fn(u64) -> Rat, k: u64) -> Rat {
    (1..=k).fold(Rat::one(), |acc, n| acc * (Rat::one() - alpha(n)))
}

/// Whether `D ≤ Π_{n=1}^{k} (1 − α_n)`.
pub fn certify_product_bound(alpha: impl Fn(u64) -> Rat, k: u64, d: &Rat) -> bool {
    *d <= product_prefix(alpha, k)
}

/// `Φ = θ(γ(ε/2) + 1 + ⌈ln(2M/ε)⌉) + 1` for
/// `a_{n+1} ≤ (1−λ_{n+1})a_n + b_n` under a divergence rate `θ`.
pub fn quant_liu_phi_div(eps: &Rat, m: u64, theta: &DivergenceRate, gamma: &EpsModulus) -> Result<BigUint, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    check_m(m)?;
    let gam = gamma.eval(&(eps / rat(2, 1)))?;
    let ln_term = ceil_ln(&(rat(2 * m as i64, 1) / eps));
    Ok(theta.eval(&(gam + 1u32 + ln_term))? + 1u32)
}

/// `Φ = θ(Dε/2M) + 1` under a product rate `θ`, where `D` bounds
/// `Π_{n=1}^{γ(ε/2)} (1−λ_{n+1})` from below.
pub fn quant_liu_phi_prod(eps: &Rat, m: u64, theta: &EpsModulus, gamma: &EpsModulus, d: &Rat) -> Result<BigUint, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    check_m(m)?;
    check_d(d)?;
    // γ(ε/2) ≥ 1 is enforced by the modulus itself; evaluating it here
    // surfaces a zero-valued γ as an error.
    gamma.eval(&(eps / rat(2, 1)))?;
    Ok(theta.eval(&(d * eps / rat(2 * m as i64, 1)))? + 1u32)
}

/// `ψ = θ(ε/(P̃+1)) + P̃` with `P̃ = P(ε/2)`: a rate for `limsup a_n ≤ a`
/// from Cesàro control `C_{n,P(ε)} ≤ a + ε` and a rate `θ` for
/// `limsup (a_{k+1} − a_k) ≤ 0`.
pub fn lorentz_limsup_rate(eps: &Rat, p: &EpsModulus, theta: &EpsModulus) -> Result<BigUint, RateError> {
    if !eps.is_positive() {
        return Err(out_of_range("eps", "(0, ∞)", eps));
    }
    let pt = p.eval(&(eps / rat(2, 1)))?;
    let arg = eps / nat_to_rat(&(&pt + 1u32));
    Ok(theta.eval(&arg)? + pt)
}

/// `P = ⌈2Lφ(ε/2)/ε⌉`: every Cesàro mean of length `≥ P` of a nonnegative
/// sequence bounded by `L` with rate of convergence `φ` to 0 is `≤ ε`.
pub fn cesaro_vanish_p(eps: &Rat, phi: &EpsModulus, l: &Rat) -> Result<BigUint, RateError> {
    check_open(eps, 2, "(0, 2)")?;
    if !l.is_positive() {
        return Err(out_of_range("L", "(0, ∞)", l));
    }
    let ph = phi.eval(&(eps / rat(2, 1)))?;
    Ok(ceil_nat(&(rat(2, 1) * l * nat_to_rat(&ph) / eps)).max(nat(1)))
}

/// `g_ε(n) = n + g(n + ψ(ε/3))`.
pub fn g_eps(g: &Counterexample, psi: &BigUint, n: &BigUint) -> BigUint {
    n + g.eval(&(n + psi))
}

impl AoyamaBound {
    /// Whether `Δ` equals `ε / (3 g_ε(L))` and `Θ > ψ(ε/3)`.
    pub fn is_consistent(&self) -> bool {
        !self.l.is_zero()
            && self.theta == &self.psi + &self.l
            && self.delta.is_positive()
            && self.delta == &self.eps / (rat(3, 1) * nat_to_rat(&self.g_eps_l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::{harmonic_schedule, ModulusKind};

    fn inv(kind: ModulusKind) -> EpsModulus {
        EpsModulus::ceil_inverse(kind, rat(1, 1))
    }

    #[test]
    fn divergence_example() {
        let psi = inv(ModulusKind::RateOfConvergence);
        let b = aoyama_bounds_div(&rat(1, 1), &Counterexample::zero(), 1, &DivergenceRate::linear(2), &psi).unwrap();
        assert_eq!(b.ln_term, Some(2));
        assert_eq!(b.theta, nat(9));
        assert_eq!(b.delta, rat(1, 18));
        assert_eq!(b.g_eps_l, b.l);
        assert!(b.theta >= b.psi && b.is_consistent());
        assert!(aoyama_bounds_div(&rat(2, 1), &Counterexample::zero(), 1, &DivergenceRate::linear(2), &psi).is_err());
        // θ(k) < k cannot come from terms in [0,1].
        let bogus = DivergenceRate::new("half", |n: &BigUint| (n / 2u32).max(nat(1)));
        assert!(aoyama_bounds_div(&rat(1, 1), &Counterexample::zero(), 1, &bogus, &psi).is_err());
    }

    #[test]
    fn product_and_harmonic_examples() {
        let psi = inv(ModulusKind::RateOfConvergence);
        let theta = inv(ModulusKind::ProductRate);
        let g = Counterexample::affine(1, 2);
        let p = aoyama_bounds_prod(&rat(1, 1), &g, 1, &theta, &psi, &rat(1, 3)).unwrap();
        assert_eq!(p.theta, nat(10));
        let h = aoyama_bounds_harmonic(&rat(1, 1), &g, 1, &psi).unwrap();
        assert_eq!(h.theta, nat(10));
        assert_eq!((h.delta.clone(), h.l.clone()), (p.delta.clone(), p.l.clone()));
        assert!(aoyama_bounds_prod(&rat(1, 1), &g, 1, &theta, &psi, &rat(0, 1)).is_err());
        assert!(aoyama_bounds_harmonic(&rat(3, 1), &g, 1, &psi).is_err());

        let one = EpsModulus::constant(ModulusKind::RateOfConvergence, 1);
        let h1 = aoyama_bounds_harmonic(&rat(1, 1), &g, 1, &one).unwrap();
        assert_eq!(h1.theta, nat(4));
        // Empty product: D = 1 is admissible when ψ(ε/3) = 1.
        let alpha = |n: u64| rat(1, n as i64 + 1);
        assert!(certify_product_bound(alpha, 0, &rat(1, 1)));
        assert!(certify_product_bound(alpha, 2, &rat(1, 3)));
        assert!(!certify_product_bound(alpha, 2, &rat(1, 2)));
    }

    #[test]
    fn product_window_never_starts_at_psi() {
        let psi = EpsModulus::constant(ModulusKind::RateOfConvergence, 50);
        let theta = EpsModulus::constant(ModulusKind::ProductRate, 3);
        let b = aoyama_bounds_prod(&rat(1, 2), &Counterexample::zero(), 1, &theta, &psi, &rat(1, 1)).unwrap();
        assert_eq!(b.theta, nat(51));
        assert_eq!(b.l, nat(1));
        assert!(b.is_consistent());
    }

    #[test]
    fn harmonic_matches_product_form() {
        let theta = inv(ModulusKind::ProductRate);
        for (num, den) in [(1, 1), (1, 2), (2, 7), (5, 2), (1, 10)] {
            for m in 1..4 {
                for c in 1..4 {
                    let psi = EpsModulus::ceil_inverse(ModulusKind::RateOfConvergence, rat(c, 1));
                    let eps = rat(num, den);
                    let g = Counterexample::affine(2, 1);
                    let h = aoyama_bounds_harmonic(&eps, &g, m, &psi).unwrap();
                    let d = h.d.clone().unwrap();
                    let p = aoyama_bounds_prod(&eps, &g, m, &theta, &psi, &d).unwrap();
                    assert_eq!((h.theta.clone(), h.delta.clone()), (p.theta, p.delta));
                    assert!(h.theta > h.psi);
                }
            }
        }
    }

    #[test]
    fn liu_examples() {
        let one = EpsModulus::constant(ModulusKind::CauchyModulus, 1);
        assert_eq!(quant_liu_phi_div(&rat(1, 1), 1, &DivergenceRate::linear(2), &one).unwrap(), nat(7));
        let near_two = rat(1999, 1000);
        let phi = quant_liu_phi_div(&near_two, 1, &DivergenceRate::linear(1), &one).unwrap();
        assert_eq!(phi, nat(4));
        let h = harmonic_schedule();
        let theta = h.require_theta_prod().unwrap();
        let gamma = EpsModulus::constant(ModulusKind::CauchyModulus, 2);
        assert_eq!(quant_liu_phi_prod(&rat(1, 1), 1, theta, &gamma, &rat(1, 2)).unwrap(), nat(7));
        let smaller = quant_liu_phi_prod(&rat(1, 1), 1, theta, &gamma, &rat(1, 5)).unwrap();
        assert!(smaller >= nat(7));
        assert!(quant_liu_phi_prod(&rat(1, 1), 1, theta, &gamma, &rat(-1, 5)).is_err());
        assert!(quant_liu_phi_div(&rat(0, 1), 1, &DivergenceRate::linear(2), &one).is_err());
    }

    #[test]
    fn lorentz_and_cesaro_examples() {
        let p = inv(ModulusKind::RateOfConvergence);
        let th = inv(ModulusKind::LimsupRate);
        assert_eq!(lorentz_limsup_rate(&rat(1, 1), &p, &th).unwrap(), nat(5));
        let one = EpsModulus::constant(ModulusKind::LimsupRate, 1);
        let p1 = EpsModulus::constant(ModulusKind::RateOfConvergence, 1);
        assert_eq!(lorentz_limsup_rate(&rat(1, 1), &p1, &one).unwrap(), nat(2));
        assert_eq!(cesaro_vanish_p(&rat(1, 1), &p, &rat(2, 1)).unwrap(), nat(8));
        assert_eq!(cesaro_vanish_p(&rat(1, 2), &p, &rat(1, 1)).unwrap(), nat(16));
        let phi1 = EpsModulus::constant(ModulusKind::RateOfConvergence, 1);
        assert_eq!(cesaro_vanish_p(&rat(1, 2), &phi1, &rat(3, 2)).unwrap(), nat(6));
    }
}
