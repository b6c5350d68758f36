//! Linearized operator about a profile, the Evans function and argument
//! principle checks of its zeros.

pub mod coefficients;
pub mod compound;
mod contour;
mod evans;
mod system;

pub use coefficients::{apply_operator, translation_residual, Blocks, LinearizedCoefficients};
pub use contour::{
    circle_mean, condition_d_verdict, default_big_radius, verify_condition_d, winding_number, Contour, ContourFunction,
    ContourRun, EvansContourResult, FnContour, Piece, Verdict, WindingSettings,
};
pub use evans::{AnalyticBasis, Evans, EvansSettings, EvansValue};
pub use system::{eigenvalue_system, EigenvalueOde, EigenvalueSystem, Side, Splitting};
