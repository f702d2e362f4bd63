//! Per-second MIG instance planning for GPUs shared between inference and
//! retraining tasks, with a trace-driven simulator to score the plans.
//!
//! The pipeline is `workload` (scenario + trace) → `predictor` (arrival
//! forecast) → `planner` (exact DP, brute force, baselines, LP export) →
//! `preinit` (hide reconfiguration overhead on free slices) → `simulator`
//! (fluid and per-request replay).

pub mod catalog;
pub mod cli;
pub mod planner;
pub mod predictor;
pub mod preinit;
pub mod simulator;
pub mod workload;

pub use catalog::{
    load_catalog, reconfiguration_diff, validate_allocation, Allocation, Catalog, ConfigId, DiffReport,
    Footprint, InstanceSlot, MigConfiguration, Placement, SlotId, SlotMask, TaskId, TaskKind,
};
pub use workload::{load_scenario, ModelProfile, RetrainingSpec, Scenario};
