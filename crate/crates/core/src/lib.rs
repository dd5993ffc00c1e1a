//! Simulation and game-theoretic analysis of label-poisoning attacks on a
//! federated BPSK/QPSK signal classifier.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of explicit seeds and inputs; file formats, parallel campaigns
//! and the command-line front end live in the `fedgame` crate.
//!
//! Layout follows the pipeline:
//!
//! - [`signal`]: synthetic per-client spectrum datasets.
//! - [`nn`]: the fixed feed-forward classifier, its gradients and RMSprop.
//! - [`fl`]: federated averaging with poisoned clients and the Monte Carlo
//!   accuracy table `U(k|i)`.
//! - [`game`]: attacker and defender utilities over an accuracy table.
//! - [`equilibrium`]: two-client mixed and n-client pure Nash equilibria.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod equilibrium;
pub mod error;
pub mod fl;
pub mod game;
pub mod nn;
pub mod seed;
pub mod signal;
pub mod table;

pub use error::{Error, Result};
