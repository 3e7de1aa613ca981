//! Scheduling core for moldable task DAGs on clustered heterogeneous
//! multicores.
//!
//! A task DAG is made of TAOs: parallel sub-computations that carry a
//! resource hint (how many contiguous cores they want) and that can be
//! molded to a different width at runtime. This crate holds the parts of
//! the scheduler that need nothing but `alloc`:
//!
//! - [`graph`]: DAG representation, criticality, degree of parallelism and a
//!   seeded layered generator.
//! - [`ptt`]: the per-task-type performance trace table (EWMA times indexed by
//!   core and width).
//! - [`place`]: contiguous core partitions and the central reservation step.
//! - [`policies`]: placement and molding decisions taken at wakeup.
//! - [`machine`]: the clustered machine model and its task-time formula.
//! - [`sim`]: a deterministic discrete-event backend.
//!
//! IO, file formats, the threaded backend and the CLI live in the `taosched`
//! crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod graph;
pub mod machine;
pub mod metrics;
pub mod place;
pub mod policies;
pub mod ptt;
pub mod sim;

pub use error::Error;
pub use graph::{DagBuilder, TaoDag, TaoId, TaoNode, TaskType};
pub use machine::MachineModel;
pub use metrics::RunMetrics;
pub use place::{Place, PlaceAllocator};
pub use policies::{Placement, PolicyConfig};
pub use ptt::{PttSet, PttTable};

pub type Result<T, E = Error> = core::result::Result<T, E>;
