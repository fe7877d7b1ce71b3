pub mod approximator;
pub mod convex_core;
pub mod dual_ma;
pub mod error;
pub mod error_eval;
pub mod functionals;
pub mod harness;
pub mod quadrature;
pub mod quantizer;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations of the generic types.
pub type Function = convex_core::SmoothConvexFunction<f64>;
pub type Weight = convex_core::WeightFunction<f64>;
pub type Envelope = convex_core::PiecewiseAffineMax<f64>;
pub type Affine = convex_core::AffineFunction<f64>;
pub type Region = convex_core::Domain<f64>;
pub type Metric = convex_core::QuadraticForm<f64>;
pub type Zeta = functionals::ZetaFunction<f64>;
pub type Zador = functionals::ZadorConstant<f64>;
pub type Points = quantizer::PointSet<f64>;
pub type Record = harness::SweepRecord<f64>;
pub type Grid = dual_ma::GridFunction<f64>;
pub type Body = dual_ma::ConvexBodySpec<f64>;
