//! Generalized Jacobians of singular curves and their theta functions.
//!
//! A singular curve is described through its desingularization (the
//! projective line or a complex torus) together with the preimages of its
//! singular points and the pole orders of the dual singular differentials.
//! From that data the crate builds
//!
//! * the Abel map into the generalized Jacobian ([`rational`], [`periods`]),
//! * Riemann theta series with certified truncation and the derivative
//!   operators built from the higher-order periods ([`theta`]),
//! * the generalized theta sections and their translates ([`gen_theta`]),
//! * a verification harness that locates the zeros of the pulled-back
//!   sections and checks the generalized Abel theorem ([`harness`]).

pub mod chart;
pub mod contour;
pub mod curve;
pub mod error;
pub mod gen_theta;
pub mod harness;
pub mod periods;
pub mod point;
pub mod poly;
pub mod rational;
pub mod theta;
pub mod wire;

pub use chart::{AbelPoint, ChartIndex};
pub use curve::{genus_accounting, parse_curve_spec, CurveSpec, GenusReport, SingularPoint};
pub use error::{Error, ErrorCategory, Result};
pub use gen_theta::{ShiftParams, ThetaValue};
pub use periods::{PeriodData, TorusCurve};
pub use point::Point;
pub use theta::{MultiIndexSet, RiemannMatrix, TruncationPolicy};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) const TWO_PI_I: C64 = C64::new(0.0, 2.0 * std::f64::consts::PI);
