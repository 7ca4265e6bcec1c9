//! Desk-scale cross-modal symbol grounding.
//!
//! The crate covers the full loop from controlled natural-language
//! instructions to per-symbol perceptual concept models:
//!
//! * [`plan`] — parse instruction sentences into an abstract plan
//!   `(action target location)` via a small dependency grammar.
//! * [`scene`] — generate synthetic tabletop scenes, render overhead
//!   frames, and simulate demonstrations with eye-fixation traces.
//! * [`segment`] — MAP changepoint inference assigning fixations to plan
//!   actions, location estimation, and labelled patch extraction.
//! * [`features`] — background subtraction and normalized
//!   `[R, G, B, area]` feature vectors grouped per symbol.
//! * [`learner`] — per-symbol Gaussian fits, 2σ noise cleaning,
//!   invariant-feature discovery, concept groups, and classification.
//! * [`eval`] — three-category test sets, confusion matrices, and the
//!   end-to-end pipeline.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats, and the
//! command-line front end live in the companion `symground-cli` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod eval;
pub mod features;
pub mod learner;
pub mod plan;
pub mod rng;
pub mod scene;
pub mod segment;
mod stats;

pub use eval::{run_pipeline, PipelineConfig, Report};
pub use plan::{parse_plan, AbstractStep, Action, Plan};
