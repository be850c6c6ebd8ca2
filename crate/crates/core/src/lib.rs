//! Variational workbench for the stationary Keller-Segel problem
//!
//! ```text
//!   -Δu + βu = ρ (e^u / ∫ e^u − 1/|Ω|)   in Ω,    ∂_ν u = 0 on ∂Ω,    ∫ u = 0
//! ```
//!
//! on triangulated planar domains. The crate discretizes the energy
//!
//! ```text
//!   J(u) = ½ ∫ (|∇u|² + βu²) − ρ log ∫ e^u
//! ```
//!
//! with P1 finite elements and provides:
//!
//! * [`domain`]: meshes, builtin domains and geometry queries,
//! * [`spectrum`]: Neumann eigenpairs and the eigenvalue bracket indices,
//! * [`energy`]: the functional, its gradient, Hessian and spectral projection,
//! * [`barycenter`]: barycenter measures, the bounded-Lipschitz distance,
//!   the covering construction and the projection onto barycenters,
//! * [`testfn`]: the concentrating test-function family and its energy probes,
//! * [`topology`]: index and homology arithmetic deciding existence,
//! * [`solver`]: gradient flow, Newton, Morse indices, blow-up diagnostics and
//!   continuation.
//!
//! Data-parallel inner loops go through [`exec::Exec`]; with the `parallel`
//! feature disabled every path runs sequentially.

pub mod barycenter;
pub mod domain;
pub mod energy;
mod error;
pub mod exec;
pub mod linalg;
pub mod quadrature;
pub mod solver;
pub mod spectrum;
pub mod testfn;
pub mod topology;

pub use error::{Error, Result};

pub use barycenter::{AtomTag, BarycenterMeasure, JoinPoint};
pub use domain::{Builtin, Mesh};
pub use energy::{Field, Parameters};
pub use exec::Exec;
pub use spectrum::{FeSpace, SpectralBasis};
pub use topology::{ConditionReport, Verdict};
