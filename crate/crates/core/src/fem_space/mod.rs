//! Continuous Lagrange P1/P2 spaces, reference basis, quadrature and field transfer.

pub mod basis;
pub mod field;
pub mod geometry;
pub mod quadrature;
pub mod space;

pub use basis::eval_basis;
pub use field::{
    integrate_field, interpolate_scalar, interpolate_vector, ConstantScalar, ConstantVector, ScalarField, ScalarFn,
    VectorField, VectorFn, ZERO_VECTOR,
};
pub use geometry::ElementMap;
pub use quadrature::{EdgeRule, QuadratureRule};
pub use space::{DiscreteField, FeSpace, PointEval, SpaceError};
