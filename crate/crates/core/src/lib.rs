//! Attribute-conditioned continuous normalizing flows for speaker-style
//! embeddings.
//!
//! The library covers the full desk-scale pipeline:
//!
//! - [`nn`] — a small dense network with exact reverse-mode gradients,
//!   used to parameterize the flow's vector field `f(z, t, a)`.
//! - [`odeint`] — fixed-step RK4 (training, unrolled gradients) and an
//!   adaptive Dormand–Prince 5(4) integrator (inference).
//! - [`flow`] — the conditional continuous normalizing flow itself:
//!   divergence accounting (exact and Hutchinson), base-space transforms
//!   in both directions, log-likelihood and the manipulation procedure.
//! - [`training`] — maximum-likelihood training by backpropagation
//!   through the unrolled integrator, with an Adam optimizer and a
//!   finite-difference self-test gate.
//! - [`attributes`] — global attribute estimation from frame-wise
//!   probabilities (energy VAD followed by masked averaging).
//! - [`synthdata`] — ground-truth generators: attribute-conditioned
//!   embeddings with a known attribute direction, consistent frame
//!   probability tracks, and a surrogate frame-embedding synthesizer.
//! - [`analysis`] — frame-wise Δ MAE between unmanipulated and
//!   manipulated sequences, class summaries and Pearson correlations.
//! - [`io`] — binary checkpoint/dataset formats and the
//!   delimiter-separated text formats used by the CLI.

pub mod analysis;
pub mod attributes;
pub mod error;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod nn;
pub mod odeint;
pub mod rng;
pub mod synthdata;
pub mod training;

pub use error::{Error, Result};
