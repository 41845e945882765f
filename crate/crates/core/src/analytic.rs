//! Closed-form M/M/m kernel and penetration-probability aggregation.
//!
//! The per-pair penetration probability is the steady-state probability that a
//! missile's queueing delay exceeds its flight time across the ship's disc:
//!
//! ```text
//! P_ij = C(m_j, a_ij) * exp(-m_j * mu_j * (1 - rho_ij) * W_ij)
//! ```
//!
//! with `a_ij = lambda_ij / mu_j`, `rho_ij = a_ij / m_j` and `W_ij = line_ij / v_i`.
//! Ship probabilities sum over directions (clamped to 1) and the system
//! probability is the maximum over ships.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::assignment::AssignmentMatrix;
use crate::matrix::Matrix;
use crate::scenario::{validate_stability, Diagnostic, ModeKind, Scenario, Ship};

/// Penetration probability above which the defence counts as breached.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("offered load must be finite and >= 0, got {0}")]
    InvalidLoad(f64),
    #[error("queue needs at least one server")]
    NoServers,
    #[error("unstable queue: offered load {offered_load} >= {servers} servers")]
    Unstable { offered_load: f64, servers: u32 },
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Erlang B blocking probability `B(m, a)` via `B(n) = a B(n-1) / (n + a B(n-1))`.
pub fn erlang_b(servers: u32, offered_load: f64) -> Result<f64, AnalyticError> {
    if !(offered_load.is_finite() && offered_load >= 0.0) {
        return Err(AnalyticError::InvalidLoad(offered_load));
    }
    let mut b = 1.0;
    for n in 1..=servers {
        let ab = offered_load * b;
        b = ab / (f64::from(n) + ab);
    }
    Ok(b)
}

/// Erlang C delay probability `C(m, a) = m B / (m - a (1 - B))`; requires `a < m`.
pub fn erlang_c(servers: u32, offered_load: f64) -> Result<f64, AnalyticError> {
    if servers == 0 {
        return Err(AnalyticError::NoServers);
    }
    let b = erlang_b(servers, offered_load)?;
    let m = f64::from(servers);
    if offered_load >= m {
        return Err(AnalyticError::Unstable {
            offered_load,
            servers,
        });
    }
    Ok((m * b / (m - offered_load * (1.0 - b))).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueParams {
    pub servers: u32,
    pub service_rate: f64,
    pub arrival_rate: f64,
    /// `a = lambda / mu`.
    pub offered_load: f64,
    /// `rho = a / m`.
    pub utilization: f64,
}

impl QueueParams {
    pub fn new(servers: u32, service_rate: f64, arrival_rate: f64) -> Result<Self, AnalyticError> {
        if servers == 0 {
            return Err(AnalyticError::NoServers);
        }
        if !(service_rate.is_finite() && service_rate > 0.0) {
            return Err(AnalyticError::InvalidParameter {
                name: "service rate",
                value: service_rate,
            });
        }
        if !(arrival_rate.is_finite() && arrival_rate >= 0.0) {
            return Err(AnalyticError::InvalidParameter {
                name: "arrival rate",
                value: arrival_rate,
            });
        }
        let offered_load = arrival_rate / service_rate;
        Ok(Self {
            servers,
            service_rate,
            arrival_rate,
            offered_load,
            utilization: offered_load / f64::from(servers),
        })
    }

    pub fn is_stable(&self) -> bool {
        self.utilization < 1.0
    }
}

/// `P(W_q > x) = C(m, a) exp(-m mu (1 - rho) x)` for the stationary M/M/m queue.
pub fn wait_ccdf(params: &QueueParams, x: f64) -> Result<f64, AnalyticError> {
    if x.is_nan() || x < 0.0 {
        return Err(AnalyticError::InvalidParameter {
            name: "waiting time",
            value: x,
        });
    }
    if !params.is_stable() {
        return Err(AnalyticError::Unstable {
            offered_load: params.offered_load,
            servers: params.servers,
        });
    }
    let c = erlang_c(params.servers, params.offered_load)?;
    let decay = f64::from(params.servers) * params.service_rate * (1.0 - params.utilization) * x;
    Ok(c * (-decay).exp())
}

/// Outcome of one (direction, ship) stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPenetration {
    pub probability: f64,
    /// The stream saturates the ship (`a >= m`); probability is pinned to 1.
    pub unstable: bool,
}

/// Penetration probability of a stream of rate `lambda_ij` against `ship`
/// given `deadline_ij` seconds of exposure.
///
/// Total by construction: an empty stream never penetrates and a saturated
/// stream always does.
pub fn penetration_pair(ship: &Ship, lambda_ij: f64, deadline_ij: f64) -> PairPenetration {
    if lambda_ij <= 0.0 {
        return PairPenetration {
            probability: 0.0,
            unstable: false,
        };
    }
    let params = QueueParams::new(ship.fire_units, ship.intercept_rate, lambda_ij)
        .expect("validated ship parameters");
    if !params.is_stable() {
        return PairPenetration {
            probability: 1.0,
            unstable: true,
        };
    }
    PairPenetration {
        probability: wait_ccdf(&params, deadline_ij.max(0.0)).expect("stable queue"),
        unstable: false,
    }
}

/// Ship penetration: the sum over directions, clamped to 1.
pub fn penetration_ship(p_row: &[f64]) -> f64 {
    p_row.iter().sum::<f64>().min(1.0)
}

/// Which arrival rate feeds a pair's queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadModel {
    /// Each (direction, ship) pair is its own M/M/m queue with rate `lambda_ij`.
    #[default]
    PerStream,
    /// Extension: all directions assigned to a ship share one queue with rate
    /// `sum_i lambda_ij`; each direction keeps its own deadline.
    SharedShip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenetrationReport {
    pub mode: ModeKind,
    pub load_model: LoadModel,
    pub direction_ids: Vec<String>,
    pub ship_ids: Vec<String>,
    pub p_pair: Matrix<f64>,
    pub p_ship: Vec<f64>,
    /// Ship sums before clamping to 1.
    pub p_ship_unclamped: Vec<f64>,
    pub p_system: f64,
    pub unstable_streams: Vec<(usize, usize)>,
    pub uncovered_directions: Vec<usize>,
    pub threshold: f64,
    pub breached: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl PenetrationReport {
    /// Index of the ship attaining `p_system` (first on ties).
    pub fn weakest_ship(&self) -> usize {
        let mut best = 0;
        for (j, &p) in self.p_ship.iter().enumerate() {
            if p > self.p_ship[best] {
                best = j;
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Header matching [`Self::csv_row`].
    pub fn csv_header(&self) -> String {
        let mut out = String::from("mode,p_system,breached,threshold");
        for id in &self.ship_ids {
            write!(out, ",p_ship[{id}]").unwrap();
        }
        for d in &self.direction_ids {
            for s in &self.ship_ids {
                write!(out, ",p_pair[{d}:{s}]").unwrap();
            }
        }
        out
    }

    pub fn csv_row(&self) -> String {
        let mut out = format!(
            "{},{},{},{}",
            self.mode, self.p_system, self.breached, self.threshold
        );
        for p in &self.p_ship {
            write!(out, ",{p}").unwrap();
        }
        for (_, p) in self.p_pair.iter_indexed() {
            write!(out, ",{p}").unwrap();
        }
        out
    }
}

/// Full per-stream evaluation with the default 5% threshold.
pub fn penetration_system(scenario: &Scenario, assignment: &AssignmentMatrix) -> PenetrationReport {
    penetration_system_with(scenario, assignment, LoadModel::PerStream, DEFAULT_THRESHOLD)
}

pub fn penetration_system_with(
    scenario: &Scenario,
    assignment: &AssignmentMatrix,
    load_model: LoadModel,
    threshold: f64,
) -> PenetrationReport {
    let n_t = assignment.n_directions();
    let n_c = assignment.n_ships();
    let lambda = assignment.lambda();
    let mut p_pair = Matrix::filled(n_t, n_c, 0.0);
    let mut unstable_streams = Vec::new();

    for (j, ship) in scenario.ships().iter().enumerate() {
        let ship_total: f64 = lambda.column(j).sum();
        for i in 0..n_t {
            let lambda_ij = lambda[(i, j)];
            if lambda_ij <= 0.0 {
                continue;
            }
            let feed = match load_model {
                LoadModel::PerStream => lambda_ij,
                LoadModel::SharedShip => ship_total,
            };
            let pair = penetration_pair(ship, feed, assignment.deadline()[(i, j)]);
            if pair.unstable {
                unstable_streams.push((i, j));
            }
            p_pair[(i, j)] = pair.probability;
        }
    }

    let p_ship_unclamped: Vec<f64> = (0..n_c).map(|j| p_pair.column(j).sum()).collect();
    let p_ship: Vec<f64> = p_ship_unclamped.iter().map(|&s| s.min(1.0)).collect();
    let uncovered_directions = assignment.uncovered().to_vec();
    let p_system = if uncovered_directions.is_empty() {
        p_ship.iter().copied().fold(0.0, f64::max)
    } else {
        1.0
    };

    let mut diagnostics = validate_stability(scenario, assignment);
    if load_model == LoadModel::SharedShip {
        diagnostics.retain(|d| !matches!(d, Diagnostic::UnstableStream { .. }));
        for &(i, j) in &unstable_streams {
            let ship = &scenario.ships()[j];
            diagnostics.push(Diagnostic::UnstableStream {
                direction: i,
                ship: j,
                offered_load: lambda.column(j).sum::<f64>() / ship.intercept_rate,
                servers: ship.fire_units,
            });
        }
    }

    PenetrationReport {
        mode: scenario.mode().kind(),
        load_model,
        direction_ids: scenario.missiles().iter().map(|m| m.id.clone()).collect(),
        ship_ids: scenario.ships().iter().map(|s| s.id.clone()).collect(),
        p_pair,
        p_ship,
        p_ship_unclamped,
        p_system,
        unstable_streams,
        uncovered_directions,
        threshold,
        breached: p_system > threshold,
        diagnostics,
    }
}

/// Convenience: assignment plus per-stream evaluation.
pub fn evaluate(scenario: &Scenario, threshold: f64) -> PenetrationReport {
    let assignment = crate::assignment::compute_assignment(scenario);
    penetration_system_with(scenario, &assignment, LoadModel::PerStream, threshold)
}
