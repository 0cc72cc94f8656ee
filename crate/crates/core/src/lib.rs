//! Deterministic simulator for desk-scale spiking networks built from
//! three-compartment pyramidal neurons, interneurons and readout neurons,
//! with local hysteretic plasticity and fixed conductance-based feedback.
//!
//! The crate ships the simulation engine, the network fabric with a device
//! mismatch model, the stimulus generators, the two benchmark experiments
//! (pattern recognition and pattern discrimination) and the CSV/SVG output
//! layer used by the command-line tool.

pub mod config;
pub mod csvio;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fabric;
pub mod plasticity;
pub mod stimulus;
pub mod svg;

pub use error::{Error, Result};
