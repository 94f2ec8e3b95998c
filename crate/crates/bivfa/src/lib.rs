//! Bisection-based value-function solver for simple bilevel convex optimization.
//!
//! The problem solved here is
//!
//! ```text
//! minimize   f(x) = f1(x) + f2(x)
//! subject to x ∈ argmin { g(z) = g1(z) + g2(z) }
//! ```
//!
//! where `f1`, `g1` are smooth convex functions with Lipschitz gradients and
//! `f2`, `g2` are prox-friendly convex functions. The solver recasts the
//! bilevel problem as locating the left-most root of the value function
//! `ḡ(c) = min { g(x) : f(x) ≤ c }` and runs an outer bisection on the level
//! `c`. Each level subproblem is handled by a Lagrangian dual approach: a
//! perturbed strongly convex reformulation, a doubling search for a multiplier
//! interval, and an inner bisection on the multiplier, with accelerated
//! proximal gradient (APG) methods as the workhorse subsolvers.
//!
//! Crate layout:
//!
//! * [`prox`] — closed-form proximal operators and projections.
//! * [`composite`] — composite objectives, smooth oracles, query accounting.
//! * [`apg`] — APG for strongly convex and convex composite problems.
//! * [`dual`] — the perturbed subproblem, multiplier interval search and
//!   dual bisection, and the ε-KKT residual checker.
//! * [`solver`] — the outer bisection driver and its report/trace types.
//! * [`problems`] — synthetic instance generators and an independent
//!   high-accuracy reference oracle.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std` feature
//! enables nothing beyond standard float intrinsics. IO, file formats and the
//! command line live in the companion `bivfa-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod apg;
pub mod composite;
pub mod dual;
mod error;
pub mod linalg;
pub mod problems;
pub mod prox;
pub mod solver;

pub use error::{Error, Result};
