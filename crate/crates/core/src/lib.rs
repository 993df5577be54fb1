//! Cycle-failure analysis for cooperative relaying protocols over
//! Rayleigh-fading links: closed-form engines for star and generic
//! information topologies, a Monte Carlo simulator that acts as an
//! independent oracle, and the search layers (minimum SNR, phase
//! allocation, relay/hop counts, duty cycling) built on top of them.
//!
//! The crate is `no_std` + `alloc`; all file and terminal I/O lives in
//! the companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analytic_generic;
pub mod analytic_star;
pub mod fading;
pub(crate) mod num;
pub mod optimizer;
pub mod rng;
pub mod scenario;
pub mod simulator;
