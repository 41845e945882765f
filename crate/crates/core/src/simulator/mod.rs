//! Discrete-event Monte-Carlo counterpart of the analytic evaluator.
//!
//! Each engaged (direction, ship) stream is simulated as Poisson arrivals into
//! an FCFS queue with `m_j` exponential servers. A recorded arrival counts as
//! a penetration when its queueing delay exceeds the stream's deadline.

pub mod queue;
pub mod rng;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::AssignmentMatrix;
use crate::matrix::Matrix;
use crate::scenario::Scenario;
use queue::{run_queue, ArrivalStream, QueueModel, RunPlan};

pub use rng::sample_exponential;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("scenario has no engaged stream to simulate")]
    NoStreams,
    #[error("exponential rate must be finite and > 0, got {0}")]
    InvalidRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueueMode {
    /// Every (direction, ship) pair is an isolated queue.
    #[default]
    PerStream,
    /// One queue per ship fed by all of its streams.
    Shared,
}

impl std::str::FromStr for QueueMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-stream" => Ok(QueueMode::PerStream),
            "shared" => Ok(QueueMode::Shared),
            other => Err(format!(
                "unknown queue mode `{other}` (expected per-stream|shared)"
            )),
        }
    }
}

/// Simulated arrivals per recorded observation.
///
/// Successive waiting times are strongly correlated near saturation, so
/// recording every arrival understates the estimator's variance. Spacing the
/// recorded arrivals apart restores approximately independent samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Every(u64),
    /// `ceil(rho / (1 - sqrt(rho))^2 + 5 a)`: the queue's relaxation time in
    /// arrivals plus five mean service times' worth of arrivals, over which
    /// the occupancy correlation falls below one percent.
    Auto,
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing::Every(1)
    }
}

impl Spacing {
    pub fn resolve(self, offered_load: f64, servers: u32) -> u64 {
        match self {
            Spacing::Every(k) => k.max(1),
            Spacing::Auto => {
                let rho = offered_load / f64::from(servers);
                let relax = rho / (1.0 - rho.sqrt()).powi(2);
                ((relax + 5.0 * offered_load).ceil() as u64).max(1)
            }
        }
    }
}

impl std::str::FromStr for Spacing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Spacing::Auto);
        }
        match s.parse::<u64>() {
            Ok(k) if k > 0 => Ok(Spacing::Every(k)),
            _ => Err(format!("spacing must be `auto` or a positive integer, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Recorded post-warmup arrivals per stream and replication.
    pub arrivals_per_stream: u64,
    /// Arrivals discarded per stream before recording starts; raised to ten
    /// spacings when that is longer.
    pub warmup_arrivals: u64,
    pub replications: u32,
    pub queue_mode: QueueMode,
    pub spacing: Spacing,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            arrivals_per_stream: 100_000,
            warmup_arrivals: 1_000,
            replications: 1,
            queue_mode: QueueMode::PerStream,
            spacing: Spacing::Every(1),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.arrivals_per_stream == 0 {
            return Err(SimError::Config("arrivals_per_stream must be > 0".into()));
        }
        if self.arrivals_per_stream <= self.warmup_arrivals {
            return Err(SimError::Config(format!(
                "arrivals_per_stream ({}) must exceed warmup_arrivals ({})",
                self.arrivals_per_stream, self.warmup_arrivals
            )));
        }
        if self.replications == 0 {
            return Err(SimError::Config("replications must be >= 1".into()));
        }
        if self.spacing == Spacing::Every(0) {
            return Err(SimError::Config("spacing must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub queue_mode: QueueMode,
    pub seed: u64,
    pub replications: u32,
    pub direction_ids: Vec<String>,
    pub ship_ids: Vec<String>,
    pub p_pair_hat: Matrix<f64>,
    /// Three normal-approximation standard errors.
    pub ci_half_width: Matrix<f64>,
    pub arrivals_counted: Matrix<u64>,
    /// Streams whose queue has no steady state; reported as certain penetration.
    pub censored: Vec<(usize, usize)>,
    pub p_ship_hat: Vec<f64>,
    pub ship_ci_half_width: Vec<f64>,
    pub p_system_hat: f64,
    pub uncovered_directions: Vec<usize>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Long-form CSV: `kind,direction,ship,estimate,ci_half_width,arrivals_counted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,direction,ship,estimate,ci_half_width,arrivals_counted\n");
        for ((i, j), p) in self.p_pair_hat.iter_indexed() {
            writeln!(
                out,
                "pair,{},{},{},{},{}",
                self.direction_ids[i],
                self.ship_ids[j],
                p,
                self.ci_half_width[(i, j)],
                self.arrivals_counted[(i, j)]
            )
            .unwrap();
        }
        for (j, p) in self.p_ship_hat.iter().enumerate() {
            let counted: u64 = self.arrivals_counted.column(j).sum();
            writeln!(
                out,
                "ship,,{},{},{},{}",
                self.ship_ids[j], p, self.ship_ci_half_width[j], counted
            )
            .unwrap();
        }
        let total: u64 = self.arrivals_counted.iter_indexed().map(|(_, c)| c).sum();
        let j = self.weakest_ship();
        writeln!(
            out,
            "system,,,{},{},{}",
            self.p_system_hat, self.ship_ci_half_width[j], total
        )
        .unwrap();
        out
    }

    pub fn weakest_ship(&self) -> usize {
        let mut best = 0;
        for (j, &p) in self.p_ship_hat.iter().enumerate() {
            if p > self.p_ship_hat[best] {
                best = j;
            }
        }
        best
    }
}

struct QueueJob {
    ship: usize,
    /// (direction, rate, deadline)
    members: Vec<(usize, f64, f64)>,
}

/// Simulates every engaged stream of `assignment` and aggregates the
/// empirical penetration probabilities like the analytic evaluator does.
pub fn simulate(
    scenario: &Scenario,
    assignment: &AssignmentMatrix,
    config: &SimConfig,
) -> Result<SimReport, SimError> {
    config.validate()?;
    let n_t = assignment.n_directions();
    let n_c = assignment.n_ships();
    let lambda = assignment.lambda();
    let deadline = assignment.deadline();

    let jobs: Vec<QueueJob> = match config.queue_mode {
        QueueMode::PerStream => lambda
            .iter_indexed()
            .filter(|(_, &l)| l > 0.0)
            .map(|((i, j), &l)| QueueJob {
                ship: j,
                members: vec![(i, l, deadline[(i, j)])],
            })
            .collect(),
        QueueMode::Shared => (0..n_c)
            .filter_map(|j| {
                let members: Vec<_> = (0..n_t)
                    .filter(|&i| lambda[(i, j)] > 0.0)
                    .map(|i| (i, lambda[(i, j)], deadline[(i, j)]))
                    .collect();
                (!members.is_empty()).then_some(QueueJob { ship: j, members })
            })
            .collect(),
    };
    if jobs.is_empty() {
        return Err(SimError::NoStreams);
    }

    let mut p_pair_hat = Matrix::filled(n_t, n_c, 0.0);
    let mut ci_half_width = Matrix::filled(n_t, n_c, 0.0);
    let mut arrivals_counted = Matrix::filled(n_t, n_c, 0u64);
    let mut censored = Vec::new();

    let mut runnable = Vec::new();
    for job in &jobs {
        let ship = &scenario.ships()[job.ship];
        let model = QueueModel {
            servers: ship.fire_units,
            service_rate: ship.intercept_rate,
            streams: job
                .members
                .iter()
                .map(|&(i, rate, _)| ArrivalStream {
                    rate,
                    stream_id: rng::stream_id(i, job.ship),
                })
                .collect(),
        };
        if model.utilization() >= 1.0 {
            for &(i, _, _) in &job.members {
                p_pair_hat[(i, job.ship)] = 1.0;
                censored.push((i, job.ship));
            }
            continue;
        }
        let k = job.members.len() as u64;
        let spacing = config.spacing.resolve(model.offered_load(), model.servers);
        let plan = RunPlan {
            warmup: (config.warmup_arrivals * k).max(10 * spacing),
            recorded: config.arrivals_per_stream * k,
            spacing,
        };
        runnable.push((job, model, plan));
    }
    censored.sort_unstable();

    // (job, replication) units are independent; results merge in index order.
    let units: Vec<(usize, u32)> = (0..runnable.len())
        .flat_map(|q| (0..config.replications).map(move |r| (q, r)))
        .collect();
    let outcomes: Vec<Vec<(u64, u64)>> = units
        .par_iter()
        .map(|&(q, r)| {
            let (job, model, plan) = &runnable[q];
            let mut tally = vec![(0u64, 0u64); job.members.len()];
            run_queue(
                model,
                plan,
                rng::replication_seed(config.seed, r),
                |k, wait| {
                    tally[k].1 += 1;
                    if wait > job.members[k].2 {
                        tally[k].0 += 1;
                    }
                },
                None,
            );
            tally
        })
        .collect();

    let mut misses = Matrix::filled(n_t, n_c, 0u64);
    for (&(q, _), tally) in units.iter().zip(&outcomes) {
        let job = runnable[q].0;
        for (&(i, _, _), &(miss, seen)) in job.members.iter().zip(tally) {
            misses[(i, job.ship)] += miss;
            arrivals_counted[(i, job.ship)] += seen;
        }
    }
    for ((i, j), &n) in arrivals_counted.clone().iter_indexed() {
        if n == 0 {
            continue;
        }
        let p = misses[(i, j)] as f64 / n as f64;
        p_pair_hat[(i, j)] = p;
        ci_half_width[(i, j)] = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
    }

    let p_ship_hat: Vec<f64> = (0..n_c)
        .map(|j| p_pair_hat.column(j).sum::<f64>().min(1.0))
        .collect();
    let ship_ci_half_width: Vec<f64> = (0..n_c)
        .map(|j| ci_half_width.column(j).map(|h| h * h).sum::<f64>().sqrt())
        .collect();
    let uncovered_directions = assignment.uncovered().to_vec();
    let p_system_hat = if uncovered_directions.is_empty() {
        p_ship_hat.iter().copied().fold(0.0, f64::max)
    } else {
        1.0
    };

    Ok(SimReport {
        queue_mode: config.queue_mode,
        seed: config.seed,
        replications: config.replications,
        direction_ids: scenario.missiles().iter().map(|m| m.id.clone()).collect(),
        ship_ids: scenario.ships().iter().map(|s| s.id.clone()).collect(),
        p_pair_hat,
        ci_half_width,
        arrivals_counted,
        censored,
        p_ship_hat,
        ship_ci_half_width,
        p_system_hat,
        uncovered_directions,
    })
}
