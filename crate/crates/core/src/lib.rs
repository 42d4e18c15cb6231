//! Giant atoms in a synthetic frequency lattice.
//!
//! The crate builds single-excitation Hamiltonians for a four-level atom whose
//! lower transitions couple to two modes of a dynamically modulated ring
//! resonator, together with the effective two-level giant atom they reduce to,
//! a real-space reference model, auxiliary-mode and ladder variants, and the
//! giant–small atom model with its delay equations.

pub mod dynamics;
pub mod effective;
pub mod model;
pub mod observables;
pub mod scenarios;
