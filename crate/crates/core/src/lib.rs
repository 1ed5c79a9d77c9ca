//! Caputo fractional differential equations with a constant delay,
//! `D^α x(t) = f(t, x(t), x(t − r))` on `[0, T]` with `x = φ` on `[−r, 0]`.
//!
//! [`picard`] solves segment by segment with a Picard iteration in a
//! Mittag-Leffler weighted norm, [`pece`] is an independent predictor-corrector
//! and [`growth`] compares computed trajectories against growth bounds.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod fracquad;
pub mod growth;
pub mod io;
pub mod mlf;
pub mod model;
pub mod pece;
pub mod picard;
pub mod rhs_expr;
mod sum;
