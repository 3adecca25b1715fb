//! Horizontal and Riemannian curves: integration, length, upper bounds on
//! `d_c` and `d_0`, and the certified coordinate lower bound.

mod bounds;
mod integrate;
mod optimizer;
mod signals;

pub use bounds::{
    blend_upper_bound, cc_upper_bound, cc_upper_bound_detailed, coordinate_lower_bound, metric_bounds, r0_upper_bound,
    r0_upper_bound_detailed, straight_r0_bound, DistanceEstimate,
};
pub use integrate::{endpoint, integrate};
pub use optimizer::OptimizerOpts;
pub use signals::{length, ControlSignal, CurveSignal, Signal};
