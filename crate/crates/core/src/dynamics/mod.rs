//! Extremal surfaces: direct Euler–Lagrange solves, characteristic flows,
//! parametric actions and fields of extremals.

mod action;
mod direct;
mod export;
mod field;
mod flow;
mod mol;
mod spectral;

pub use action::action_over_patch;
pub use direct::{solve_el_direct, DirectSolution, InitialData, OVERFLOW_GUARD};
pub use export::{element_rows, patch_rows, SliceRow};
pub use field::{build_field_of_extremals, s_functional_eval, Extremal, ExtremalField, UForm};
pub use flow::{characteristics_flow, Flow, FlowOptions, Gauge, ShearedGauge, SlabGauge, TimeGauge};
