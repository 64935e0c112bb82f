//! File formats: JSON workloads, NDJSON traces, and report rendering.

pub mod report;
pub mod trace_file;
pub mod workload_file;

pub use report::{render_human, render_machine};
pub use trace_file::{parse_trace, render_trace, TraceFileError};
pub use workload_file::{parse_workload, InputError, WorkloadFile};
