//! Cycle and capacity model of the accelerator.

pub mod cost;
pub mod estimate;
pub mod hardware;
pub mod residency;
pub mod trace;

pub use cost::{keyswitch_cost, replay, CostReport, KeySwitchPlan};
pub use estimate::{
    estimate_bootstrap, estimate_lr, estimate_op_time, explore_params, onchip_residency_check, BasicOp,
    EvalModShape, ExploreRow, LrCostShape,
};
pub use hardware::{ciphertext_bytes, key_bytes, poly_bytes, ElemOp, HardwareProfile};
pub use trace::{OpKind, OpTrace, TraceBuilder, TraceRecord};
