//! Gibbs measures of the Ising-Vannimenus model (nearest-neighbour coupling
//! `J`, prolonged next-nearest-neighbour coupling `Jp`) on Cayley trees.
//!
//! * [`lattice`] builds finite truncations of the semi-infinite tree.
//! * [`model`] holds couplings, Boltzmann weights and the Hamiltonian.
//! * [`oracle`] enumerates finite-volume Gibbs distributions exactly.
//! * [`recursion`] implements the boundary-field compatibility equations.
//! * [`solver`] finds and classifies translation-invariant solutions.
//! * [`thermo`] evaluates closed-form free energies and entropies.
//! * [`scan`] sweeps parameter grids and writes CSV/JSON tables.
//! * [`findings`] collects the cross-checks between closed forms and enumeration.

pub mod error;
pub mod findings;
pub mod lattice;
pub mod model;
pub mod newton;
pub mod oracle;
pub mod poly;
pub mod recursion;
pub mod scan;
pub mod solver;
pub mod thermo;

pub use error::{Error, Result};
pub use lattice::{Configuration, FiniteTree, Region};
pub use model::{ModelParams, ReducedWeights};
