//! Second, independent evaluator for the harmonic-schedule bounds.
//!
//! Every quantity is a closed form over unreduced integer fractions
//! `num/den`; nothing here calls into the library's rate code.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use halpern_core::moduli::Counterexample;

/// Unreduced nonnegative fraction.
#[derive(Clone, Debug)]
pub struct Frac {
    pub num: BigUint,
    pub den: BigUint,
}

impl Frac {
    pub fn new(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Frac {
        let den = den.into();
        assert!(!den.is_zero());
        Frac { num: num.into(), den }
    }

    fn mul(&self, o: &Frac) -> Frac {
        Frac { num: &self.num * &o.num, den: &self.den * &o.den }
    }

    fn div(&self, o: &Frac) -> Frac {
        Frac { num: &self.num * &o.den, den: &self.den * &o.num }
    }

    fn add(&self, o: &Frac) -> Frac {
        Frac { num: &self.num * &o.den + &o.num * &self.den, den: &self.den * &o.den }
    }

    fn int(n: &BigUint) -> Frac {
        Frac { num: n.clone(), den: BigUint::one() }
    }

    fn small(n: u64) -> Frac {
        Frac::int(&BigUint::from(n))
    }

    pub fn ceil(&self) -> BigUint {
        (&self.num + &self.den - 1u32) / &self.den
    }

    /// Exact equality with a reduced rational given as numerator/denominator.
    pub fn equals(&self, num: &BigUint, den: &BigUint) -> bool {
        &self.num * den == num * &self.den
    }
}

fn minus_one(n: BigUint) -> BigUint {
    if n.is_zero() {
        n
    } else {
        n - 1u32
    }
}

/// `Ψ(ε, M) = ⌈4M/ε + 16M²/ε²⌉ − 1`.
pub fn psi(e: &Frac, m: u64) -> BigUint {
    let inv = Frac::new(e.den.clone(), e.num.clone());
    let v = Frac::small(4 * m).mul(&inv).add(&Frac::small(16 * m * m).mul(&inv).mul(&inv));
    minus_one(v.ceil())
}

/// `Ψ̃(ε, M) = ⌈2M/ε + 8M²/ε²⌉ − 1`.
pub fn psi_tilde(e: &Frac, m: u64) -> BigUint {
    let inv = Frac::new(e.den.clone(), e.num.clone());
    let v = Frac::small(2 * m).mul(&inv).add(&Frac::small(8 * m * m).mul(&inv).mul(&inv));
    minus_one(v.ceil())
}

/// One visited index of the harmonic tower, at `k` (already shifted by `⌈1/ε₀⌉`).
#[derive(Clone, Debug)]
pub struct OracleRow {
    pub k: BigUint,
    pub p_tilde: BigUint,
    pub chi: BigUint,
    pub theta: BigUint,
    pub g_width: BigUint,
    pub delta: Frac,
    pub f: BigUint,
}

pub struct HarmonicTower<'a> {
    pub m: u64,
    pub eps: Frac,
    pub g: &'a Counterexample,
}

impl HarmonicTower<'_> {
    fn eps2(&self) -> Frac {
        self.eps.mul(&self.eps)
    }

    /// `⌈1/ε₀⌉` with `ε₀ = ε²/(24(M+1)²)`.
    pub fn c(&self) -> BigUint {
        let e2 = self.eps2();
        Frac::new(&e2.den * (24 * (self.m + 1) * (self.m + 1)), e2.num).ceil()
    }

    /// `⌈M²/ε₀²⌉`.
    pub fn iter_count(&self) -> BigUint {
        let e2 = self.eps2();
        let s = 24 * (self.m + 1) * (self.m + 1);
        let num = BigUint::from(self.m * self.m) * &e2.den * &e2.den * s * s;
        Frac::new(num, &e2.num * &e2.num).ceil()
    }

    /// `P̃_k(e) = ⌈12M²(k+1)/e · (⌈48M²(k+1)/e + 2304M⁴(k+1)²/e²⌉ − 1)⌉`.
    ///
    /// The inner bracket is `Ψ(e/(12M(k+1)))`, written out.
    pub fn p_tilde(&self, k: &BigUint, e: &Frac) -> BigUint {
        let m = self.m;
        let k1 = Frac::int(&(k + 1u32));
        let inv = Frac::new(e.den.clone(), e.num.clone());
        let inner = Frac::small(48 * m * m)
            .mul(&k1)
            .mul(&inv)
            .add(&Frac::small(2304 * m * m * m * m).mul(&k1).mul(&k1).mul(&inv).mul(&inv));
        let psi = minus_one(inner.ceil());
        Frac::small(12 * m * m).mul(&k1).mul(&inv).mul(&Frac::int(&psi)).ceil()
    }

    /// `χ*_k(e) = ⌈8M²(P+1)/e + 128M⁴(P+1)²/e²⌉ − 1 + P` with `P = P̃_k(e/2)`.
    pub fn chi(&self, k: &BigUint, e: &Frac) -> (BigUint, BigUint) {
        let m = self.m;
        let p = self.p_tilde(k, &e.div(&Frac::small(2)));
        let p1 = Frac::int(&(&p + 1u32));
        let inv = Frac::new(e.den.clone(), e.num.clone());
        let v = Frac::small(8 * m * m).mul(&p1).mul(&inv).add(&Frac::small(128 * m * m * m * m).mul(&p1).mul(&p1).mul(&inv).mul(&inv));
        let chi = minus_one(v.ceil()) + &p;
        (p, chi)
    }

    /// `Θ_k(e) = ⌈3M²(χ*_k(e/3) + 1)/e⌉ − 1`, given `χ*_k(e/3)`.
    fn theta_from_chi(&self, chi: &BigUint, e: &Frac) -> BigUint {
        let v = Frac::small(3 * self.m * self.m).mul(&Frac::int(&(chi + 1u32))).div(e);
        minus_one(v.ceil())
    }

    pub fn row(&self, k: &BigUint) -> OracleRow {
        let e = self.eps2().div(&Frac::small(4)); // ε²/4
        let e3 = e.div(&Frac::small(3)); // ε²/12
        let (p_tilde, chi) = self.chi(k, &e3);
        let theta = self.theta_from_chi(&chi, &e);
        // g_{e,k}(n) = n + g(n + χ*_k(e/3)) at n = Θ_k(e) − χ*_k(e/3).
        let n = &theta - &chi;
        let g_width = &n + self.g.eval(&(&n + &chi));
        let delta = e.div(&Frac::small(3).mul(&Frac::int(&g_width)));
        let m2 = Frac::small(self.m * self.m);
        let f = m2.div(&delta).ceil().max(k.clone()) - k;
        OracleRow { k: k.clone(), p_tilde, chi, theta, g_width, delta, f }
    }

    /// `Θ_L(ε²/4)`, the closed-form Σ once `L` is known.
    pub fn sigma_at(&self, l: &BigUint) -> BigUint {
        self.row(l).theta
    }

    /// The first `steps` iterates of `f̃*(k) = k + f(k + c) + c` from 0,
    /// with the rows visited on the way.
    pub fn iterate(&self, steps: u64) -> (Vec<BigUint>, Vec<OracleRow>) {
        let c = self.c();
        let mut k = BigUint::zero();
        let mut trace = Vec::new();
        let mut rows = Vec::new();
        for _ in 0..steps {
            let row = self.row(&(&k + &c));
            k = &k + &row.f + &c;
            rows.push(row);
            trace.push(k.clone());
        }
        (trace, rows)
    }
}

/// `K(ε, g, M) = g̃^(⌈M²/ε²⌉)(0)`, `g̃(k) = k + g(k)`; `None` past `max_bits`.
pub fn browder_k(eps: &Frac, g: &Counterexample, m: u64, max_bits: u64) -> Option<BigUint> {
    let count = Frac::new(BigUint::from(m * m) * &eps.den * &eps.den, &eps.num * &eps.num).ceil();
    let mut k = BigUint::zero();
    let mut i = BigUint::zero();
    while i < count {
        k = &k + g.eval(&k);
        if k.bits() > max_bits {
            return None;
        }
        i += 1u32;
    }
    Some(k)
}

/// `P(ε, t, M, φ) = ⌈6M²/(tε) · φ(tε/(6M))⌉`.
pub fn gamma_p(eps: &Frac, t: &Frac, m: u64, phi: impl Fn(&Frac) -> BigUint) -> BigUint {
    let te = t.mul(eps);
    let ph = phi(&te.div(&Frac::small(6 * m)));
    Frac::small(6 * m * m).div(&te).mul(&Frac::int(&ph)).ceil()
}

/// `ψ = φ̃(ε/(2M(P(ε/2)+1))) + P(ε/2)`.
pub fn gamma_psi(eps: &Frac, t: &Frac, m: u64, phi: impl Fn(&Frac) -> BigUint, phi_tilde: impl Fn(&Frac) -> BigUint) -> BigUint {
    let p = gamma_p(&eps.div(&Frac::small(2)), t, m, phi);
    let arg = eps.div(&Frac::small(2 * m).mul(&Frac::int(&(&p + 1u32))));
    phi_tilde(&arg) + p
}
