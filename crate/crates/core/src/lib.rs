//! Energy-minimising placement of fog processing servers in a GPON access
//! network carrying ECG monitoring traffic.
//!
//! The pipeline is: build a [`topology::Topology`] from [`topology::GponParams`],
//! derive a [`scenario::Scenario`] for a server patient cap, then either
//! [`placement::formulate`] and [`placement::solve`] the placement or
//! [`energy::evaluate`] a given one. [`oracle`] holds a brute-force reference
//! optimiser used to check the solver.

pub mod catalog;
pub mod energy;
pub mod oracle;
pub mod placement;
pub mod scenario;
pub mod topology;

use thiserror::Error;

pub use catalog::{default_catalog, DeviceCatalog, DeviceSpec};
pub use energy::{evaluate, EnergyBreakdown, EnergyOptions, IdleWindow};
pub use placement::{
    check_feasibility, export_lp, formulate, solve, MilpModel, Mode, ModelOptions, Optimality, Placement,
    PlacementSolution,
};
pub use scenario::{Scenario, ScenarioParams};
pub use topology::{build_gpon, GponParams, Topology};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Catalog(#[from] catalog::CatalogError),
    #[error(transparent)]
    Topology(#[from] topology::TopologyError),
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
    #[error(transparent)]
    Energy(#[from] energy::EnergyError),
    #[error(transparent)]
    Placement(#[from] placement::PlacementError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
}
