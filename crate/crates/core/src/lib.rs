//! Effective rates for Halpern iterations in CAT(0) and W-hyperbolic spaces.
//!
//! The crate is split along the lines of the mathematics:
//!
//! * [`geometry`]: the space interface, three concrete model spaces and a
//!   small algebra of nonexpansive maps.
//! * [`moduli`]: modulus functions, exact rational helpers and the canonical
//!   step-size schedules.
//! * [`realseq`]: the quantitative real-sequence lemmas and Cesàro averages.
//! * [`halpern`]: the iteration engines and per-step inequality checks.
//! * [`rates`]: asymptotic-regularity rates, the metastability towers and the
//!   resolvent bound.
//! * [`harness`]: config parsing, experiment runner and report emission.
//!
//! All bounds are computed in exact arithmetic. Trajectories use `f64`.

pub mod geometry;
pub mod halpern;
pub mod harness;
pub mod moduli;
pub mod rates;
pub mod realseq;
