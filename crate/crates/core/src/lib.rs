//! Analysis toolkit for discrete double Hilbert transforms along polynomial
//! surfaces: exact bivariate integer polynomials, Newton polyhedra with the
//! even-vertex boundedness criterion, Dirichlet approximation and the
//! two-parameter circle-method arc taxonomy, Gauss/Weyl sums, high-accuracy
//! exponential summation, oscillatory singular integrals, and end-to-end
//! numerical verification of the identities tying them together.

pub mod arcs;
pub mod expsum;
pub mod fixed;
pub mod newton;
pub mod numtheory;
pub mod oscint;
pub mod polynomial;
pub mod rational;
pub mod stats;
pub mod verify;

pub use fixed::FixedReal;
pub use newton::{BoundednessVerdict, NewtonPolyhedron};
pub use polynomial::Polynomial;
