//! Optimal replication of a terminal random vector by the ordinary integral
//! of an adapted control.
//!
//! The plant `dx/dt = A x + b u` must reach `x(T) = f` almost surely, where
//! `f` is measurable with respect to a Brownian filtration, while minimising
//! `E ∫ uᵀ Γ u dt` with a weight `Γ(t) = g(t) G` that degenerates at `T`.
//! The optimal control is `Γ^{-1} bᵀ e^{Aᵀ(T-t)} μ(t)` for an explicit
//! martingale `μ` built from the Gramian `R` and the martingale
//! representation kernel of `f`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod claims;
pub mod controller;
pub mod error;
pub mod experiments;
pub mod gramian;
pub mod linalg;
pub mod quadrature;
pub mod simulator;
pub mod system;
pub mod weight;

pub use error::{Error, Result};
