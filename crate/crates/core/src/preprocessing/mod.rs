//! Gap repair, seasonal adjustment, embedding selection and input selection.

mod delta;
mod gaps;
mod pacf;
mod seasonal;

pub use delta::{
    delta_test, forward_backward_select, SelectionTrace, TargetSpec, TraceEntry,
    DEFAULT_FBS_MAX_ITER,
};
pub use gaps::repair_gaps;
pub use pacf::{acf_values, pacf, pacf_from_acf, pacf_values, select_embedding};
pub use seasonal::{
    deseasonalize, fit_seasonal, reseasonalize, reseasonalize_values, SeasonalModel,
};
