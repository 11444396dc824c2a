//! Exact state-vector simulation of Landau-Zener bias sweeps and sudden
//! quenches in a two-leg Bose-Hubbard ladder.

pub mod doublewell;
pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod observables;
pub mod propagator;
pub mod protocols;
pub mod sparse;
pub mod thermal;

pub use error::{Error, Result};
