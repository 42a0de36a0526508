//! Time-varying-environment path planning for buoyancy-driven underwater
//! gliders.
//!
//! The planner searches a lattice graph for the earliest-arrival route
//! through an analytic, depth- and time-dependent current field. Every edge
//! is costed by simulating the glider along it with each candidate sawtooth
//! dive profile and keeping the fastest; those per-profile simulations are
//! the unit of parallel work handed to the master/worker [`engine`].
//!
//! - [`ocean`]: meandering-jet stream function, velocity and surface term
//! - [`profiles`]: candidate dive-profile generation
//! - [`grid`]: lattice graph with sector connectivity and terminals
//! - [`cost`]: edge traversal integrator and per-edge profile selection
//! - [`search`]: time-dependent label-setting search and brute-force oracle
//! - [`engine`]: worker pool with delegation rounds and sleep mode
//! - [`mission`], [`report`], [`bench`]: configuration, outputs, benchmarks

pub mod bench;
pub mod cost;
pub mod engine;
pub mod grid;
pub mod mission;
pub mod ocean;
pub mod profiles;
pub mod report;
pub mod search;

pub use cost::{edge_cost, traverse_edge, CostModel, EdgeCostResult, ProfileEvaluator, SerialEvaluator};
pub use engine::{rounds_required, EngineConfig, Task, WorkerPool, WorkerState};
pub use grid::{build_grid, Graph, GridSpec, TerminalRole};
pub use mission::{parse_mission, run_mission, ExecutionMode, MissionConfig};
pub use ocean::{FlowEnvironment, FlowMode, FlowSample, JetParams, SurfaceCurrentParams};
pub use profiles::{generate_dive_profiles, DiveProfile, DiveProfileParams};
pub use search::{brute_force_plan, plan, PathResult};
