//! Photon-subtracted displaced Fock states in a truncated Fock basis.
//!
//! Builds `N a^k D(alpha)|n>`, evaluates its Wigner and characteristic
//! functions, computes four nonclassicality / non-Gaussianity measures,
//! evolves the state through a photon-loss channel and simulates lossy
//! homodyne detection.

pub mod channels;
pub mod cli;
pub mod error;
pub mod fock;
pub mod measures;
pub mod quad;
pub mod specfun;
pub mod state;
pub mod tomography;
pub mod wigner;

pub use error::{PsdfsError, Result};
pub use fock::C64;
pub use state::{DensityMatrix, FockVector, StateParams};
