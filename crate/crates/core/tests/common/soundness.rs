//! Premise-exact synthetic instances for the real-sequence bounds.
//!
//! Each generator builds sequences that satisfy the hypotheses of one bound
//! with equality wherever the hypothesis is an inequality, runs them in exact
//! rational arithmetic and checks the conclusion window with zero tolerance.

use halpern_core::moduli::exact::{rat, to_u64};
use halpern_core::moduli::{Counterexample, DivergenceRate, EpsModulus, ModulusKind, Rat};
use halpern_core::realseq::{
    aoyama_bounds_div, aoyama_bounds_harmonic, aoyama_bounds_prod, cesaro_vanish_p, lorentz_limsup_rate, product_prefix,
    quant_liu_phi_div, quant_liu_phi_prod, AoyamaBound,
};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Default)]
pub struct Outcome {
    pub instances: usize,
    pub checked_points: usize,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.instances > 0
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < 10 {
            self.failures.push(msg);
        }
    }
}

fn dyadic(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rat {
    rat(rng.gen_range(lo..=hi), 64)
}

fn random_eps(rng: &mut ChaCha8Rng, below: i64) -> Rat {
    rat(rng.gen_range(1..32 * below), 32)
}

fn random_g(rng: &mut ChaCha8Rng) -> Counterexample {
    match rng.gen_range(0..3) {
        0 => Counterexample::zero(),
        1 => Counterexample::constant(rng.gen_range(1..40)),
        _ => Counterexample::affine(rng.gen_range(1..3), rng.gen_range(0..10)),
    }
}

/// Least `n ≥ 1` with `q^n ≤ e`, for `0 < q < 1`.
fn geometric_rate(q: &Rat, e: &Rat) -> BigUint {
    let mut p = q.clone();
    let mut n = 1u64;
    while p > *e {
        p *= q;
        n += 1;
    }
    BigUint::from(n)
}

/// Runs `s_{n+1} = (1−α_n)s_n + α_n t_n + Δ` with `t_n` as large as allowed
/// and checks `s_n ≤ ε` on `[Θ, Θ+g(Θ)]`.
fn run_recurrence(rng: &mut ChaCha8Rng, b: &AoyamaBound, alpha: &dyn Fn(u64) -> Rat, out: &mut Outcome, tag: &str) {
    let m = rat(b.m as i64, 1);
    let psi = to_u64(&b.psi).expect("small ψ");
    let theta = to_u64(&b.theta).expect("small Θ");
    let end = to_u64(&b.window_end).expect("small window");
    let worst = rng.gen_bool(0.5);
    let mut s = if worst { m.clone() } else { m.clone() * dyadic(rng, 0, 64) };
    for n in 1..=end {
        if n >= theta && s > b.eps {
            out.fail(format!("{tag}: s_{n} = {s} > ε = {} (Θ={theta}, end={end})", b.eps));
            return;
        }
        if n >= theta {
            out.checked_points += 1;
        }
        if n == end {
            break;
        }
        let a = alpha(n);
        let mut t = if n >= psi {
            if worst { &b.eps / rat(3, 1) } else { &b.eps / rat(3, 1) - dyadic(rng, 0, 16) }
        } else {
            m.clone() * dyadic(rng, -64, 64)
        };
        // Keep s ≤ M, as the premises demand.
        if !a.is_zero() {
            let cap = (&m - &b.delta - (Rat::one() - &a) * &s) / &a;
            if t > cap {
                t = cap;
            }
        }
        s = (Rat::one() - &a) * &s + &a * &t + &b.delta;
        if s > m {
            out.fail(format!("{tag}: generator left the bound M at n={n}"));
            return;
        }
    }
}

pub fn aoyama_div(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let q = rng.gen_range(1..=4u64);
        let lo = (64 + q as i64 - 1) / q as i64;
        let alphas: Vec<Rat> = (0..4000).map(|_| dyadic(&mut rng, lo, 64)).collect();
        let eps = random_eps(&mut rng, 2);
        let m = rng.gen_range(1..=3);
        let psi = EpsModulus::constant(ModulusKind::RateOfConvergence, rng.gen_range(1..=6));
        let g = random_g(&mut rng);
        let b = match aoyama_bounds_div(&eps, &g, m, &DivergenceRate::linear(q), &psi) {
            Ok(b) => b,
            Err(e) => {
                out.fail(format!("instance {i}: {e}"));
                continue;
            }
        };
        run_recurrence(&mut rng, &b, &|n| alphas[n as usize - 1].clone(), &mut out, &format!("div #{i}"));
        out.instances += 1;
    }
    out
}

pub fn aoyama_prod(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let lo = rng.gen_range(4..=16);
        let hi = rng.gen_range(lo..=48);
        let alphas: Vec<Rat> = (0..4000).map(|_| dyadic(&mut rng, lo, hi)).collect();
        let q = Rat::one() - rat(lo, 64);
        let theta = EpsModulus::new(ModulusKind::ProductRate, "geometric", move |e| geometric_rate(&q, e));
        let eps = random_eps(&mut rng, 2);
        let m = rng.gen_range(1..=3);
        let psi_v = rng.gen_range(1..=6u64);
        let psi = EpsModulus::constant(ModulusKind::RateOfConvergence, psi_v);
        let alpha = |n: u64| alphas[n as usize - 1].clone();
        let d = product_prefix(alpha, psi_v - 1);
        let g = random_g(&mut rng);
        match aoyama_bounds_prod(&eps, &g, m, &theta, &psi, &d) {
            Ok(b) => run_recurrence(&mut rng, &b, &alpha, &mut out, &format!("prod #{i}")),
            Err(e) => out.fail(format!("instance {i}: {e}")),
        }
        out.instances += 1;
    }
    out
}

pub fn aoyama_harmonic(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let eps = random_eps(&mut rng, 3);
        let m = rng.gen_range(1..=2);
        let psi = EpsModulus::constant(ModulusKind::RateOfConvergence, rng.gen_range(1..=5));
        let g = random_g(&mut rng);
        match aoyama_bounds_harmonic(&eps, &g, m, &psi) {
            Ok(b) => run_recurrence(&mut rng, &b, &|n| rat(1, n as i64 + 1), &mut out, &format!("harmonic #{i}")),
            Err(e) => out.fail(format!("instance {i}: {e}")),
        }
        out.instances += 1;
    }
    out
}

/// `b_n = c·2^{−n}`; `γ(ε)` is the least `k ≥ 1` with `c·2^{−k} ≤ ε`.
fn geometric_tail(c: Rat) -> EpsModulus {
    EpsModulus::new(ModulusKind::CauchyModulus, "log2(c/eps)", move |e| {
        let mut k = 1u64;
        let mut tail = &c / rat(2, 1);
        while tail > *e {
            tail /= rat(2, 1);
            k += 1;
        }
        BigUint::from(k)
    })
}

/// Runs `a_{n+1} = (1−λ_{n+1})a_n + b_n` with `b_n = 2^{−(r+n)}` and checks
/// `a_n ≤ ε` on `[Φ, Φ+10³]`. All terms are dyadic, so `a_n` is kept as
/// `num / 2^exp` to avoid rational normalisation.
fn run_liu(a1_64ths: i64, r: u64, lambda_64ths: &[i64], phi: u64, eps: &Rat, out: &mut Outcome, tag: &str) {
    let mut num = BigInt::from(a1_64ths);
    let mut exp = 6u64;
    let (p, q) = (eps.numer().clone(), eps.denom().clone());
    for n in 1..=phi + 1000 {
        if n >= phi {
            out.checked_points += 1;
            if &num * &q > &p << exp {
                out.fail(format!("{tag}: a_{n} = {num}/2^{exp} > ε = {eps} (Φ = {phi})"));
                return;
            }
        }
        num *= 64 - lambda_64ths[n as usize + 1];
        exp += 6;
        let b_exp = r + n;
        if exp < b_exp {
            num <<= b_exp - exp;
            exp = b_exp;
        }
        num += BigInt::one() << (exp - b_exp);
        let tz = num.trailing_zeros().unwrap_or(0).min(exp);
        num >>= tz;
        exp -= tz;
    }
}

pub fn liu_div(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let r = rng.gen_range(0..3u64);
        let c = rat(1, 1 << r);
        let a1 = rng.gen_range(0..=64);
        let m = 2;
        let eps = random_eps(&mut rng, 2);
        let lambdas: Vec<i64> = (0..3000).map(|_| rng.gen_range(32..=64)).collect();
        match quant_liu_phi_div(&eps, m, &DivergenceRate::linear(2), &geometric_tail(c.clone())) {
            Ok(phi) => run_liu(a1, r, &lambdas, to_u64(&phi).unwrap(), &eps, &mut out, &format!("liu-div #{i}")),
            Err(e) => out.fail(format!("instance {i}: {e}")),
        }
        out.instances += 1;
    }
    out
}

pub fn liu_prod(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let r = rng.gen_range(0..3u64);
        let c = rat(1, 1 << r);
        let a1 = rng.gen_range(0..=64);
        let m = 2;
        let eps = random_eps(&mut rng, 2);
        let lambdas: Vec<i64> = (0..4000).map(|_| rng.gen_range(8..=32)).collect();
        let q = rat(7, 8);
        let theta = EpsModulus::new(ModulusKind::ProductRate, "geometric", move |e| geometric_rate(&q, e));
        let gamma = geometric_tail(c.clone());
        let k = to_u64(&gamma.eval(&(&eps / rat(2, 1))).unwrap()).unwrap();
        let d = product_prefix(|n| rat(lambdas[n as usize + 1], 64), k);
        match quant_liu_phi_prod(&eps, m, &theta, &gamma, &d) {
            Ok(phi) => run_liu(a1, r, &lambdas, to_u64(&phi).unwrap(), &eps, &mut out, &format!("liu-prod #{i}")),
            Err(e) => out.fail(format!("instance {i}: {e}")),
        }
        out.instances += 1;
    }
    out
}

/// `a_k = a + r/k − e_k` with `0 ≤ e_k ≤ E/k`. Cesàro means are dominated
/// by those of `a + r/k`, so `P(ε)` = least `p` with `r·H_p/p ≤ ε`; the
/// differences are at most `E/k`, so `θ(ε) = ⌈E/ε⌉`.
pub fn lorentz(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let a = dyadic(&mut rng, -64, 64);
        let r = rat(rng.gen_range(1..=16), 8);
        let big_e = rat(rng.gen_range(1..=16), 8);
        let eps = rat(rng.gen_range(4..=64), 32);
        let r2 = r.clone();
        let p = EpsModulus::new(ModulusKind::RateOfConvergence, "harmonic-mean", move |e| {
            let (mut h, mut k) = (Rat::zero(), 0i64);
            loop {
                k += 1;
                h += rat(1, k);
                if &r2 * &h / rat(k, 1) <= *e {
                    return BigUint::from(k as u64);
                }
            }
        });
        let theta = EpsModulus::ceil_inverse(ModulusKind::LimsupRate, big_e.clone());
        let psi = match lorentz_limsup_rate(&eps, &p, &theta) {
            Ok(v) => to_u64(&v).unwrap(),
            Err(e) => {
                out.fail(format!("instance {i}: {e}"));
                continue;
            }
        };
        let limit = &a + &eps;
        for n in psi..=psi + 1000 {
            let e_n = &big_e * rat(rng.gen_range(0..=64), 64 * n as i64);
            let a_n = &a + &r / rat(n as i64, 1) - e_n;
            out.checked_points += 1;
            if a_n > limit {
                out.fail(format!("lorentz #{i}: a_{n} = {a_n} > a + ε = {limit}"));
                break;
            }
        }
        out.instances += 1;
    }
    out
}

/// `a_k = c·u_k / 2^{⌊log₂ k⌋}` with `u_k ∈ [0,1]`, so `a_k ≤ 2c/k`,
/// `φ(ε) = ⌈2c/ε⌉` and `L = c`. Checks every `n ≤ 10³` and
/// `p ∈ [P, P+50] ∪ {2P, 5P}`.
pub fn cesaro_vanish(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for i in 0..instances {
        let c = rat(rng.gen_range(1..=16), 8);
        let eps = rat(rng.gen_range(4..=63), 32);
        let phi = EpsModulus::ceil_inverse(ModulusKind::RateOfConvergence, &c * rat(2, 1));
        let p = match cesaro_vanish_p(&eps, &phi, &c) {
            Ok(v) => to_u64(&v).unwrap(),
            Err(e) => {
                out.fail(format!("instance {i}: {e}"));
                continue;
            }
        };
        let horizon = 1000 + (5 * p).max(p + 50);
        // a_k = (c8/8)·(u/64)/2^j, stored exactly as integers over 2^(9+J).
        let c8 = (&c * rat(8, 1)).to_integer().to_string().parse::<i128>().unwrap();
        let big_j = 64 - horizon.leading_zeros() as i128;
        let mut prefix: Vec<i128> = Vec::with_capacity(horizon as usize + 1);
        prefix.push(0);
        for k in 1..=horizon {
            let j = 63 - k.leading_zeros() as i128;
            let u: i128 = rng.gen_range(0..=64);
            prefix.push(prefix.last().unwrap() + ((c8 * u) << (big_j - j)));
        }
        let (e_num, e_den) = (eps.numer().to_string().parse::<i128>().unwrap(), eps.denom().to_string().parse::<i128>().unwrap());
        let lengths: Vec<u64> = (p..=p + 50).chain([2 * p, 5 * p]).collect();
        'outer: for n in 1..=1000u64 {
            for &len in &lengths {
                let sum = prefix[(n + len - 1) as usize] - prefix[(n - 1) as usize];
                out.checked_points += 1;
                // sum / (2^(9+J) · len) > e_num / e_den
                if sum * e_den > (e_num * len as i128) << (9 + big_j) {
                    let mean = Rat::new(sum.into(), BigInt::from(len) << (9 + big_j as usize));
                    out.fail(format!("cesaro #{i}: C_({n},{len}) = {mean} > ε = {eps} (P = {p})"));
                    break 'outer;
                }
            }
        }
        out.instances += 1;
    }
    out
}
