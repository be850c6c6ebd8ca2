//! Sparse and dense linear algebra used by the discretization.

mod eigen;
mod ldlt;
mod sparse;

pub use eigen::{dense_constrained_eigen, project_out_constant, ConstrainedEigen, Eigenpairs, Target};
pub use ldlt::{rcm, Bordered, Ldlt};
pub use sparse::{axpy, dot, norm2, CsrMatrix};
