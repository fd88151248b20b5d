//! Simulation and drive-amplitude optimization of stimulated Raman adiabatic
//! passage (STIRAP) in a weakly anharmonic three-level ladder, including the
//! parasitic cross-couplings of the two drive tones.

pub mod smallmat;
pub mod model;
pub mod dynamics;
pub mod search;
pub mod units;
pub mod experiments;
pub mod checks;
pub mod cli;
