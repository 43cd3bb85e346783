//! Penetration trajectory optimization for a hypersonic glide vehicle (HGV)
//! that has to slip past two interceptors and still reach its target area.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, configuration and the command-line
//! front end live in the `glide-evade` companion crate.
//!
//! Pipeline:
//!
//! 1. [`strategy`] turns the initial lines of sight to the interceptors into
//!    an expected flight-path/heading pair.
//! 2. [`vehicle`] propagates a constant-control initial guess in the
//!    downrange domain.
//! 3. [`scp`] repeatedly linearizes ([`linearize`]), transcribes
//!    ([`transcription`]) and solves ([`conic`]) a second-order cone program
//!    inside a shrinking trust region until iterates stop moving.
//! 4. [`engagement`] flies the result against proportional-navigation
//!    interceptors and reports miss distances.
#![no_std]
// `num_traits::Float` imports go unused in builds that also link std.
#![allow(unused_imports)]
// `!(x < y)` is used on purpose so NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod conic;
pub mod engagement;
mod error;
pub mod geometry;
pub mod jacobian_check;
pub mod linearize;
pub mod mission;
pub mod scp;
pub mod strategy;
pub mod transcription;
pub mod vehicle;

pub use error::{Error, Result};
