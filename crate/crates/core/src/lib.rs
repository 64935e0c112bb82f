//! Discrete-event simulation and trace checking for a preemptive
//! uniprocessor EDF scheduler with an optional mixed-criticality
//! (EDF-VD) fault-tolerant mode.

pub mod engine;
pub mod io;
pub mod model;
pub mod monitor;
pub mod planner;
pub mod time;
pub mod trace;
pub mod verdict;
pub mod workload;

pub use engine::{run_simulation, Engine, EngineConfig, EngineError, JobRelease, LoOverrunPolicy};
pub use model::{HiCrit, JobId, JobInfo, JobType, Mode, State, Task, TaskSet};
pub use monitor::{check_trace, Classification, ModeUpRule, MonitorConfig, Report};
pub use time::Tick;
pub use trace::{Arrival, ArrivalModel, EventKind, Sample, Trace, TraceEvent};
pub use verdict::{Status, Verdict, Witness};
pub use workload::{generate_releases, random_taskset, Fault, WorkloadSpec};
