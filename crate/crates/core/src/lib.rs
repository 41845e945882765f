//! Cooperative multi-ship air-defense evaluation.
//!
//! Each ship is modelled as an M/M/m queue whose customers are incoming
//! missiles and whose servers are fire units. A missile penetrates when its
//! queueing delay exceeds the flight time it spends inside the ship's
//! interception disc. The crate provides:
//!
//! - [`scenario`]: configuration ingest, validation and stability diagnostics,
//! - [`geometry`]: trajectory/disc chord lengths,
//! - [`assignment`]: proportional task assignment for both engagement modes,
//! - [`analytic`]: Erlang B/C, the waiting-time CCDF and penetration aggregation,
//! - [`simulator`]: a discrete-event Monte-Carlo oracle for the same model,
//! - [`sweep`]: parameter sweeps and the published experiment presets,
//! - [`cli`]: command implementations behind the `coopdef` binary.

pub mod analytic;
pub mod assignment;
pub mod cli;
pub mod geometry;
pub mod matrix;
pub mod scenario;
pub mod simulator;
pub mod sweep;

pub use analytic::{
    erlang_b, erlang_c, penetration_pair, penetration_ship, penetration_system, wait_ccdf,
    AnalyticError, LoadModel, PairPenetration, PenetrationReport, QueueParams,
    DEFAULT_THRESHOLD,
};
pub use assignment::{compute_assignment, AssignmentMatrix};
pub use geometry::{segment_disc_intersection, ChordResult, GeometryError};
pub use matrix::Matrix;
pub use scenario::{
    load_scenario, validate_stability, Diagnostic, EngagementMode, MissileThreat, ModeKind,
    Point2, Scenario, ScenarioError, Ship,
};
pub use simulator::{simulate, QueueMode, SimConfig, SimError, SimReport, Spacing};
pub use sweep::{run_preset, run_sweep, SweepError, SweepSpec, SweepTable};

/// Package version embedded in provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
