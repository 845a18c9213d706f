//! Operational semantics: per-expression step distributions, thread-pool
//! steps, scheduler-driven steps, finite-horizon execution and partial
//! execution, plus tape presampling and configuration censoring.

mod exec;
mod scheduler;
mod state;
mod step;

pub use exec::{
    erasability_check, exec_n, pexec_n, presample, sched_step, ErasabilityVerdict,
    PresampleError,
};
pub use scheduler::{censor, Policy, RoundRobin, SchedView, Scripted, UniformRandom};
pub use state::{Config, State, Tape};
pub use step::{step, tpstep, StepResult};
