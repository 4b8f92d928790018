//! Exact models of quantum and classical networks whose sources may fail.
//!
//! Covers the Finner inequality and its saturation, the rigidity structure of
//! saturating quantum models, fair-sampling detection with loophole-free
//! post-selection, the photonic CHSH example, and the triangle RGB4 bound.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod classical;
pub mod distribution;
pub mod entropy;
pub mod error;
pub mod failing;
pub mod fair_sampling;
pub mod finner;
pub mod linalg;
pub mod network;
pub mod optim;
pub mod quantum;
pub mod rgb4;
pub mod spdc;

pub use distribution::{Outcome, OutcomeDistribution, FAIL_SYMBOL};
pub use error::{Error, Result};
pub use network::{dress_inputs, half_weights, FractionalIndependentSet, NetworkGraph, ValidationReport, Violation};
pub use quantum::{schmidt_decompose, PartyPOVM, QuantumNetworkModel, Schmidt, SourceState};
