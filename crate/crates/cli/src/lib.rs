//! Drivers for the V-notch solver: configuration, single runs, sweeps and
//! convergence tables. The `vnotch` binary is a thin layer over this crate.
//!
//! Output files of a run directory:
//!
//! | file | content |
//! |------|---------|
//! | `mesh_level<k>.vcmesh` | mesh of level `k` |
//! | `field_<model>.csv` | `dof,x1,x2,A` on the finest level |
//! | `report_<model>.json` | Newton reports per level and error norms |
//! | `convergence.csv`, `convergence.txt` | [`table::ConvergenceTable`] |
//! | `maxima.csv` | `alpha,rc,model,maxT23,maxE23,x1,x2` |
//! | `distances.csv` | `alpha,rc,model,DT2,DT3,DE1` |
//! | `profile_<model>_<phi>.csv` | `r,T13,T23,E13,E23` along `phi = 0, 90` |
//! | `field_<model>.vtk` | with `vtk = true` |
//! | `status.json` | completion marker |

pub mod config;
pub mod error;
pub mod run;
pub mod sweep;
pub mod table;

pub use config::{ConfigMap, RunConfig, Settings, SweepConfig};
pub use error::{CliError, Result};
pub use run::{run_single, solve_geometry};
pub use sweep::run_sweep;
pub use table::ConvergenceTable;
