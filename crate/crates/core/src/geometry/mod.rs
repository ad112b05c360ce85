//! Differential geometry of the boundary curve and its tubular neighborhood.

mod curve;
mod field;
mod fourier;
mod layer;

pub use curve::{
    tangent_angle, uniform_parameters, ClosedCurve, Frame, TubularCoords, DEFAULT_MODES,
};
pub use field::BoundaryField;
pub use fourier::FourierSeries;
pub use layer::{
    jacobians_at, shifted_curvature, Direction, FiberTarget, Jacobians, LayerGeometry,
    QuadratureRule,
};
