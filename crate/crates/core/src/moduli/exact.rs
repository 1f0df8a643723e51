//! Exact rational and integer helpers.
//!
//! Everything here is certified: logarithms and exponentials are bracketed
//! by fixed-point intervals with directed rounding and refined until the
//! requested integer is decided.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::RateError;

/// Exact rational number.
pub type Rat = BigRational;

/// Largest exponent accepted by [`ceil_exp`].
pub const MAX_EXP_ARG: u64 = 100_000;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn nat(n: u64) -> BigUint {
    BigUint::from(n)
}

pub fn nat_to_rat(n: &BigUint) -> Rat {
    Rat::from_integer(BigInt::from_biguint(Sign::Plus, n.clone()))
}

/// Parses `3`, `-2`, `1/2`, `0.125` or `1e-3` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rat, RateError> {
    let bad = |why: &str| RateError::Descriptor(s.to_string(), why.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(bad("empty number"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad("bad numerator"))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad("bad denominator"))?;
        if d.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(Rat::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| bad("bad exponent"))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad("no digits"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad("not a number"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad("not a number"))? };
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i64;
    if scale.unsigned_abs() > 10_000 {
        return Err(bad("exponent too large"));
    }
    let ten = BigInt::from(10u32);
    let r = if scale >= 0 {
        Rat::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rat::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(r)
}

/// Canonical string form: `n` for integers, `n/d` otherwise.
pub fn format_rational(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `⌈x⌉` for a rational, clamped at zero.
pub fn ceil_nat(x: &Rat) -> BigUint {
    let c = x.ceil().to_integer();
    c.to_biguint().unwrap_or_default()
}

/// `⌈a/b⌉` for naturals, `b > 0`.
pub fn ceil_div(a: &BigUint, b: &BigUint) -> BigUint {
    a.div_ceil(b)
}

/// Saturating `n - 1`.
pub fn pred(n: &BigUint) -> BigUint {
    if n.is_zero() {
        BigUint::zero()
    } else {
        n - 1u32
    }
}

pub fn to_u64(n: &BigUint) -> Option<u64> {
    n.to_u64()
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    // Scale so that both parts fit comfortably in f64 range before dividing.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 900).max(0);
    let shift_d = (db - 900).max(0);
    let n = (r.numer() >> shift_n as usize).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(f64::NAN);
    let e = shift_n - shift_d;
    (n / d) * 2f64.powi(e.clamp(-2000, 2000) as i32)
}

fn floor_div_int(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn ceil_div_int(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Fixed-point bracket of `atanh(z)` at scale `2^w`, for
/// `z ∈ [z_lo, z_hi]·2^-w` with `0 ≤ z_hi ≤ 2^w/2`.
fn atanh_fixed(z_lo: &BigInt, z_hi: &BigInt, w: usize) -> (BigInt, BigInt) {
    let one = BigInt::one() << w;
    // Lower sum: truncation of a positive series, rounded down.
    let mut lo = BigInt::zero();
    let q = (z_lo * z_lo) >> w;
    let mut p = z_lo.clone();
    let mut j = 0u64;
    while !p.is_zero() {
        lo += &p / BigInt::from(2 * j + 1);
        p = (&p * &q) >> w;
        j += 1;
    }
    // Upper sum: rounded up, plus a geometric tail bound once the power is
    // at most one unit (the ratio z² ≤ 1/4 leaves a tail below one unit).
    let mut hi = BigInt::zero();
    let q = ceil_div_int(&(z_hi * z_hi), &one);
    let mut p = z_hi.clone();
    let mut j = 0u64;
    loop {
        hi += ceil_div_int(&p, &BigInt::from(2 * j + 1));
        if p <= BigInt::one() {
            break;
        }
        p = ceil_div_int(&(&p * &q), &one);
        j += 1;
    }
    hi += 2;
    (lo, hi)
}

/// Bracket of `ln x` at scale `2^w`; `x > 0`.
fn ln_fixed(x: &Rat, w: usize) -> (BigInt, BigInt) {
    let p = x.numer().magnitude().clone();
    let q = x.denom().magnitude().clone();
    let b = p.bits() as i64 - q.bits() as i64;
    // m = x / 2^b = pm / qm, with m ∈ (1/2, 2).
    let (pm, qm) = if b >= 0 { (p, q << b as usize) } else { (p << (-b) as usize, q) };
    let pm = BigInt::from_biguint(Sign::Plus, pm);
    let qm = BigInt::from_biguint(Sign::Plus, qm);
    let scale = |n: &BigInt, d: &BigInt| -> (BigInt, BigInt) {
        let shifted = n << w;
        (floor_div_int(&shifted, d), ceil_div_int(&shifted, d))
    };
    let (lnm_lo, lnm_hi) = if pm >= qm {
        let (zl, zh) = scale(&(&pm - &qm), &(&pm + &qm));
        let (t_lo, t_hi) = atanh_fixed(&zl, &zh, w);
        (t_lo * 2u32, t_hi * 2u32)
    } else {
        let (zl, zh) = scale(&(&qm - &pm), &(&pm + &qm));
        let (t_lo, t_hi) = atanh_fixed(&zl, &zh, w);
        (-(t_hi * 2u32), -(t_lo * 2u32))
    };
    let (zl, zh) = scale(&BigInt::one(), &BigInt::from(3));
    let (l2a, l2b) = atanh_fixed(&zl, &zh, w);
    let (ln2_lo, ln2_hi): (BigInt, BigInt) = (l2a * 2u32, l2b * 2u32);
    let bb = BigInt::from(b);
    if b >= 0 {
        (&bb * ln2_lo + lnm_lo, &bb * ln2_hi + lnm_hi)
    } else {
        (&bb * ln2_hi + lnm_lo, &bb * ln2_lo + lnm_hi)
    }
}

/// Least `k ≥ 0` with `x ≤ e^k`.
///
/// Arguments below one clamp to 0 with a warning.
pub fn ceil_ln(x: &Rat) -> u64 {
    if !x.is_positive() || *x < Rat::one() {
        log::warn!("ceil_ln argument {} is below 1; clamping to 0", format_rational(x));
        return 0;
    }
    if x.is_one() {
        return 0;
    }
    // ln x is irrational for rational x ≠ 1, so refinement terminates.
    let mut w = 96usize;
    loop {
        let (lo, hi) = ln_fixed(x, w);
        let unit = BigInt::one() << w;
        let k = ceil_div_int(&hi, &unit);
        if lo > (&k - 1) * &unit {
            return k.to_u64().expect("ln of a rational fits in u64");
        }
        w *= 2;
        assert!(w <= 1 << 20, "ceil_ln failed to separate ln x from an integer");
    }
}

/// Fixed-point bracket of `e` at scale `2^w`.
fn e_fixed(w: usize) -> (BigInt, BigInt) {
    let one = BigInt::one() << w;
    let mut lo = one.clone();
    let mut hi = one.clone();
    let mut t_lo = one.clone();
    let mut t_hi = one;
    let mut j = 1u64;
    loop {
        let jj = BigInt::from(j);
        t_lo = floor_div_int(&t_lo, &jj);
        t_hi = ceil_div_int(&t_hi, &jj);
        lo += &t_lo;
        hi += &t_hi;
        if t_hi <= BigInt::one() {
            break;
        }
        j += 1;
    }
    // Remaining terms are bounded by t_hi·(1/(j+1) + 1/(j+1)² + ...) < 1.
    hi += 1;
    (lo, hi)
}

fn pow_fixed(lo: &BigInt, hi: &BigInt, k: u64, w: usize) -> (BigInt, BigInt) {
    let one = BigInt::one() << w;
    let mut r_lo = one.clone();
    let mut r_hi = one.clone();
    let mut b_lo = lo.clone();
    let mut b_hi = hi.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            r_lo = (&r_lo * &b_lo) >> w;
            r_hi = ceil_div_int(&(&r_hi * &b_hi), &one);
        }
        e >>= 1;
        if e > 0 {
            b_lo = (&b_lo * &b_lo) >> w;
            b_hi = ceil_div_int(&(&b_hi * &b_hi), &one);
        }
    }
    (r_lo, r_hi)
}

/// Certified bracket `[lo, hi]` (in exact rationals) of `e^k`, with
/// relative width roughly `2^-extra`.
pub fn exp_bracket(k: u64, extra: usize) -> (Rat, Rat) {
    let w = extra + 2 * (64 - k.leading_zeros() as usize) + 16;
    let (el, eh) = e_fixed(w);
    let (lo, hi) = pow_fixed(&el, &eh, k, w);
    let den = BigInt::one() << w;
    (Rat::new(lo, den.clone()), Rat::new(hi, den))
}

/// `⌈e^k⌉`, for `k ≤ MAX_EXP_ARG`.
pub fn ceil_exp(k: u64) -> Result<BigUint, RateError> {
    if k == 0 {
        return Ok(BigUint::one());
    }
    if k > MAX_EXP_ARG {
        return Err(RateError::TooLarge(format!("e^{k}")));
    }
    // Integer part of e^k has about 1.45k bits; add working precision.
    let mut extra = (k as usize) * 3 / 2 + 64;
    loop {
        let (lo, hi) = exp_bracket(k, extra);
        let fl = lo.floor().to_integer();
        if fl == hi.floor().to_integer() {
            // e^k is irrational, so it lies strictly above its floor.
            return Ok((fl + 1u32).to_biguint().expect("positive"));
        }
        extra *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("3").unwrap(), rat(3, 1));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn format_round_trip() {
        for s in ["7", "1/3", "-5/2"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
    }

    #[test]
    fn ceil_ln_spot_values() {
        assert_eq!(ceil_ln(&rat(1, 1)), 0);
        assert_eq!(ceil_ln(&rat(8, 1)), 3);
        assert_eq!(ceil_ln(&rat(2, 1)), 1);
        assert_eq!(ceil_ln(&rat(3, 1)), 2);
        assert_eq!(ceil_ln(&rat(1, 2)), 0);
        // e ≈ 2.718281828459045: just below and above.
        assert_eq!(ceil_ln(&rat(2718281828, 1_000_000_000)), 1);
        assert_eq!(ceil_ln(&rat(2718281829, 1_000_000_000)), 2);
        assert_eq!(ceil_ln(&rat(7389056098, 1_000_000_000)), 2);
        assert_eq!(ceil_ln(&rat(7389056099, 1_000_000_000)), 3);
    }

    #[test]
    fn ceil_ln_huge_argument() {
        let x = Rat::from_integer(BigInt::one() << 100_000usize);
        // 100000·ln 2 = 69314.718...
        assert_eq!(ceil_ln(&x), 69315);
        let y = Rat::new(BigInt::from(3) << 5000usize, BigInt::from(7));
        let f = 5000.0 * std::f64::consts::LN_2 + (3.0f64 / 7.0).ln();
        assert_eq!(ceil_ln(&y), f.ceil() as u64);
    }

    #[test]
    fn ceil_exp_spot_values() {
        assert_eq!(ceil_exp(0).unwrap(), nat(1));
        assert_eq!(ceil_exp(1).unwrap(), nat(3));
        assert_eq!(ceil_exp(2).unwrap(), nat(8));
        assert_eq!(ceil_exp(3).unwrap(), nat(21));
        assert_eq!(ceil_exp(10).unwrap(), nat(22027));
        assert_eq!(ceil_exp(20).unwrap(), nat(485165196));
        assert!(ceil_exp(MAX_EXP_ARG + 1).is_err());
    }

    #[test]
    fn ceil_ln_brackets_against_exp() {
        for (n, d) in [(5u64, 1u64), (100, 3), (12345, 17), (10_000_000, 1), (999, 998)] {
            let x = Rat::new(BigInt::from(n), BigInt::from(d));
            let k = ceil_ln(&x);
            let (lo_k, _) = exp_bracket(k, 80);
            if k > 0 {
                let (_, hi_prev) = exp_bracket(k - 1, 80);
                assert!(hi_prev < x, "e^(k-1) must be below x for {n}/{d}");
            }
            assert!(x <= lo_k, "x must be at most e^k for {n}/{d}");
        }
    }

    #[test]
    fn ceil_helpers() {
        assert_eq!(ceil_nat(&rat(7, 2)), nat(4));
        assert_eq!(ceil_nat(&rat(-7, 2)), nat(0));
        assert_eq!(ceil_div(&nat(7), &nat(2)), nat(4));
        assert_eq!(pred(&nat(0)), nat(0));
        assert!((rat_to_f64(&rat(1, 3)) - 1.0 / 3.0).abs() < 1e-16);
    }
}
