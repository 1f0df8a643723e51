use num_bigint::BigUint;
use num_traits::{Signed, ToPrimitive, Zero};

use super::exact::{format_rational, Rat};
use super::{DivergenceRate, EpsModulus, ModulusKind, RateError};

/// Outcome of checking a modulus against a concrete sequence prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModulusCheck {
    Pass,
    /// The defining property fails at argument `arg` and index `n`.
    Fail { arg: String, n: u64 },
    /// The modulus value `needed` at `arg` lies beyond the horizon.
    Inconclusive { arg: String, needed: BigUint },
}

impl ModulusCheck {
    pub fn is_pass(&self) -> bool {
        matches!(self, ModulusCheck::Pass)
    }
}

/// Checks the defining property of `modulus` pointwise for every ε in
/// `grid` and every index up to `horizon`.
///
/// `seq` is called exactly once per index, in increasing order from 1.
/// Rates of convergence and product rates check `|a_n − limit| ≤ ε` for
/// `n ≥ γ(ε)`; limsup rates check `a_n − limit ≤ ε`; Cauchy moduli check
/// `a_{γ(ε)+n} − a_{γ(ε)} ≤ ε`.
pub fn validate_modulus(
    kind: ModulusKind,
    seq: &mut dyn FnMut(u64) -> Rat,
    limit: &Rat,
    modulus: &EpsModulus,
    grid: &[Rat],
    horizon: u64,
) -> Result<ModulusCheck, RateError> {
    let mut gammas = Vec::with_capacity(grid.len());
    for eps in grid {
        let g = modulus.eval(eps)?;
        match g.to_u64().filter(|&v| v <= horizon) {
            Some(v) => gammas.push(v),
            None => return Ok(ModulusCheck::Inconclusive { arg: format_rational(eps), needed: g }),
        }
    }
    let mut anchors: Vec<Option<Rat>> = vec![None; grid.len()];
    for n in 1..=horizon {
        let a = seq(n);
        for (i, eps) in grid.iter().enumerate() {
            let g = gammas[i];
            if n < g {
                continue;
            }
            let ok = match kind {
                ModulusKind::RateOfConvergence | ModulusKind::ProductRate => (&a - limit).abs() <= *eps,
                ModulusKind::LimsupRate => &a - limit <= *eps,
                ModulusKind::CauchyModulus => {
                    if n == g {
                        anchors[i] = Some(a.clone());
                        true
                    } else {
                        let base = anchors[i].as_ref().expect("anchor recorded at n = γ(ε)");
                        &a - base <= *eps
                    }
                }
            };
            if !ok {
                return Ok(ModulusCheck::Fail { arg: format_rational(eps), n });
            }
        }
    }
    Ok(ModulusCheck::Pass)
}

/// Checks `Σ_{k=1}^{θ(n)} a_k ≥ n` for each `n` in `ns`.
///
/// `terms` is called once per index, in increasing order from 1.
pub fn validate_divergence(
    terms: &mut dyn FnMut(u64) -> Rat,
    theta: &DivergenceRate,
    ns: &[u64],
    horizon: u64,
) -> Result<ModulusCheck, RateError> {
    let mut targets = Vec::with_capacity(ns.len());
    for &n in ns {
        let t = theta.eval(&BigUint::from(n))?;
        match t.to_u64().filter(|&v| v <= horizon) {
            Some(v) => targets.push((v, n)),
            None => return Ok(ModulusCheck::Inconclusive { arg: n.to_string(), needed: t }),
        }
    }
    targets.sort_unstable();
    let mut sum = Rat::zero();
    let mut next = 0;
    let last = targets.last().map_or(0, |t| t.0);
    for k in 1..=last {
        sum += terms(k);
        while next < targets.len() && targets[next].0 == k {
            let n = targets[next].1;
            if sum < Rat::from_integer(n.into()) {
                return Ok(ModulusCheck::Fail { arg: n.to_string(), n: k });
            }
            next += 1;
        }
    }
    Ok(ModulusCheck::Pass)
}
