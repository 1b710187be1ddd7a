//! Driven spin-boson dynamo.
//!
//! A spin-1/2 in a rotating field coupled through `σz/2` to a bosonic bath.
//! Solvers: truncated-Fock exact propagation ([`ed`]), stochastic Schrödinger
//! equation ([`sse`]), non-interacting blip approximation ([`niba`]) and the
//! Floquet-Markov master equation ([`gkls`]). Energy accounting and Chern
//! numbers live in [`energetics`], closed forms in [`analytic`].

pub mod analytic;
pub mod ed;
pub mod energetics;
pub mod error;
pub mod gkls;
pub mod harness;
pub mod io;
pub mod model;
pub mod niba;
pub mod ode;
pub mod special;
pub mod sse;

pub use error::{DynamoError, Result};
pub use model::{
    Cutoff, FieldSource, FieldTrajectory, Mode, ModeSet, ModelParams, Preparation, SpinTrajectory,
    TimeGrid,
};
