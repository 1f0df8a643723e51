use std::ops::Sub;

use num_traits::Zero;

use crate::moduli::{Counterexample, Rat, RateError};

/// `C_{n,p}(a) = (1/p) Σ_{i=n}^{n+p−1} a_i`, with `a[0] = a_1`.
pub fn cesaro(a: &[Rat], n: u64, p: u64) -> Result<Rat, RateError> {
    let (lo, hi) = cesaro_range(a.len(), n, p)?;
    let sum = a[lo..hi].iter().fold(Rat::zero(), |acc, x| acc + x);
    Ok(sum / Rat::from_integer(p.into()))
}

/// Floating-point [`cesaro`].
pub fn cesaro_f64(a: &[f64], n: u64, p: u64) -> Result<f64, RateError> {
    let (lo, hi) = cesaro_range(a.len(), n, p)?;
    Ok(a[lo..hi].iter().sum::<f64>() / p as f64)
}

fn cesaro_range(len: usize, n: u64, p: u64) -> Result<(usize, usize), RateError> {
    if n == 0 || p == 0 {
        return Err(RateError::OutOfRange { what: "Cesàro indices n, p", range: "positive integers", value: format!("n={n}, p={p}") });
    }
    let end = n.checked_add(p - 1).filter(|&e| e <= len as u64).ok_or_else(|| RateError::OutOfRange {
        what: "Cesàro window end n+p−1",
        range: "1..=sequence length",
        value: format!("{} > {len}", n as u128 + p as u128 - 1),
    })?;
    Ok((n as usize - 1, end as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    /// Every `a_n` in the window is `≤ ε`.
    Sup,
    /// Every pair in the window satisfies `|a_n − a_m| ≤ ε`.
    Metastable,
}

/// The values `a_1..a_H` together with a window `[N, N+g(N)]` and threshold ε.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSequenceWindow<'a, T> {
    pub values: &'a [T],
    pub start: u64,
    /// `g(N)`, the window length minus one.
    pub extent: u64,
    pub eps: T,
    pub mode: WindowMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WindowCheck {
    Pass,
    /// Offending index (sup mode) or pair `(n, m)` (metastable mode).
    Fail { n: u64, m: Option<u64> },
    /// The window reaches past the available data.
    Inconclusive { needed: u64, available: u64 },
}

impl WindowCheck {
    pub fn is_pass(&self) -> bool {
        matches!(self, WindowCheck::Pass)
    }
}

/// Evaluates the window conclusion on the stored values.
pub fn check_window<T>(w: &RealSequenceWindow<'_, T>) -> WindowCheck
where
    T: Clone + PartialOrd,
    for<'x> &'x T: Sub<&'x T, Output = T>,
{
    let available = w.values.len() as u64;
    let end = match w.start.checked_add(w.extent) {
        Some(e) if w.start >= 1 && e <= available => e,
        _ => return WindowCheck::Inconclusive { needed: w.start.saturating_add(w.extent), available },
    };
    let slice = &w.values[w.start as usize - 1..end as usize];
    let index = |i: usize| w.start + i as u64;
    match w.mode {
        WindowMode::Sup => match slice.iter().position(|a| *a > w.eps) {
            Some(i) => WindowCheck::Fail { n: index(i), m: None },
            None => WindowCheck::Pass,
        },
        WindowMode::Metastable => {
            // The worst pair is (argmax, argmin).
            let (mut hi, mut lo) = (0, 0);
            for (i, a) in slice.iter().enumerate() {
                if *a > slice[hi] {
                    hi = i;
                }
                if *a < slice[lo] {
                    lo = i;
                }
            }
            if &slice[hi] - &slice[lo] > w.eps {
                WindowCheck::Fail { n: index(hi.min(lo)), m: Some(index(hi.max(lo))) }
            } else {
                WindowCheck::Pass
            }
        }
    }
}

/// Least `N ≥ 1` whose window `[N, N+g(N)]` passes, scanning while the
/// window fits in the data. `None` when no fitting window passes.
pub fn first_passing_window<T>(values: &[T], eps: &T, g: &Counterexample, mode: WindowMode) -> Option<u64>
where
    T: Clone + PartialOrd,
    for<'x> &'x T: Sub<&'x T, Output = T>,
{
    (1..=values.len() as u64)
        .map(|n| RealSequenceWindow { values, start: n, extent: g.eval_u64(n), eps: eps.clone(), mode })
        .map(|w| (w.start, check_window(&w)))
        .take_while(|(_, c)| !matches!(c, WindowCheck::Inconclusive { .. }))
        .find(|(_, c)| c.is_pass())
        .map(|(n, _)| n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::exact::rat;
    use num_traits::Signed;
    use proptest::prelude::*;

    #[test]
    fn cesaro_examples() {
        let a: Vec<Rat> = (1..=10).map(|k| rat(k, 1)).collect();
        assert_eq!(cesaro(&a, 2, 3).unwrap(), rat(3, 1));
        assert_eq!(cesaro(&a, 7, 1).unwrap(), rat(7, 1));
        let h: Vec<Rat> = (1..=4).map(|k| rat(1, k)).collect();
        assert_eq!(cesaro(&h, 1, 2).unwrap(), rat(3, 4));
        assert!(cesaro(&h, 3, 3).is_err());
        assert!(cesaro(&h, 0, 1).is_err());
        assert_eq!(cesaro_f64(&[1.0, 2.0, 3.0], 1, 3).unwrap(), 2.0);
    }

    #[test]
    fn window_examples() {
        let constant = vec![0.3f64; 40];
        for (n, g) in [(1, 0), (3, 10), (20, 20)] {
            let w = RealSequenceWindow { values: &constant, start: n, extent: g, eps: 0.0, mode: WindowMode::Metastable };
            assert!(check_window(&w).is_pass());
        }
        let a: Vec<f64> = (1..=100).map(|n| 1.0 / (n as f64 + 1.0)).collect();
        let g = Counterexample::affine(1, 5);
        assert_eq!(first_passing_window(&a, &0.1, &g, WindowMode::Metastable), Some(6));
        let w = RealSequenceWindow { values: &a, start: 5, extent: 10, eps: 0.1, mode: WindowMode::Metastable };
        assert_eq!(check_window(&w), WindowCheck::Fail { n: 5, m: Some(15) });
        let alt: Vec<f64> = (1..=30).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
        for n in 1..20 {
            let w = RealSequenceWindow { values: &alt, start: n, extent: 1, eps: 0.5, mode: WindowMode::Metastable };
            assert!(!check_window(&w).is_pass());
        }
        let w = RealSequenceWindow { values: &alt, start: 25, extent: 10, eps: 0.5, mode: WindowMode::Sup };
        assert_eq!(check_window(&w), WindowCheck::Inconclusive { needed: 35, available: 30 });
        let w = RealSequenceWindow { values: &alt, start: 1, extent: 3, eps: 0.5, mode: WindowMode::Sup };
        assert_eq!(check_window(&w), WindowCheck::Fail { n: 2, m: None });
    }

    #[test]
    fn exact_window() {
        let a: Vec<Rat> = (1..=20).map(|n| rat(1, n)).collect();
        let w = RealSequenceWindow { values: &a, start: 4, extent: 6, eps: rat(1, 4), mode: WindowMode::Sup };
        assert!(check_window(&w).is_pass());
    }

    fn rats(len: usize) -> impl Strategy<Value = Vec<Rat>> {
        prop::collection::vec((-50i64..50, 1i64..9), len).prop_map(|v| v.into_iter().map(|(n, d)| rat(n, d)).collect())
    }

    proptest! {
        #[test]
        fn cesaro_is_linear(a in rats(30), b in rats(30), n in 1u64..15, p in 1u64..16, c in -5i64..5) {
            let sum: Vec<Rat> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let scaled: Vec<Rat> = a.iter().map(|x| x * rat(c, 1)).collect();
            prop_assert_eq!(cesaro(&sum, n, p).unwrap(), cesaro(&a, n, p).unwrap() + cesaro(&b, n, p).unwrap());
            prop_assert_eq!(cesaro(&scaled, n, p).unwrap(), cesaro(&a, n, p).unwrap() * rat(c, 1));
        }

        #[test]
        fn cesaro_is_monotone_and_fixes_constants(a in rats(30), bump in rats(30), start in 1u64..10, n in 1u64..15, p in 1u64..16) {
            // b_k ≥ a_k for k ≥ start.
            let b: Vec<Rat> = a.iter().zip(&bump).enumerate()
                .map(|(i, (x, d))| if i as u64 + 1 >= start { x + d.abs() } else { x - d.abs() })
                .collect();
            if n >= start {
                prop_assert!(cesaro(&a, n, p).unwrap() <= cesaro(&b, n, p).unwrap());
            }
            let mut c = a.clone();
            for v in c.iter_mut().skip(start as usize - 1) {
                *v = rat(7, 3);
            }
            if n >= start {
                prop_assert_eq!(cesaro(&c, n, p).unwrap(), rat(7, 3));
            }
        }
    }
}
