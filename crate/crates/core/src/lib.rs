//! Discrete-event simulator for 5G core placement across a datacenter,
//! cloudlet and edge continuum.
//!
//! Modules build on each other in order: [`topology`] describes nodes and
//! links, [`placement`] schedules network-function pods onto nodes, [`engine`]
//! moves timestamped messages over the result, [`core5g`] plays the signaling
//! and data flows, [`workload`] generates UE arrivals, [`metrics`] turns runs
//! into KPIs and [`runner`] ties it together behind scenario files.

pub mod core5g;
pub mod engine;
pub mod metrics;
pub mod placement;
pub mod runner;
pub mod topology;
pub mod workload;
