//! File formats and command implementations behind the `symground`
//! binary. Everything IO-shaped lives here; the algorithms sit in
//! `symground-core`.

pub mod commands;
pub mod config;
pub mod formats;
