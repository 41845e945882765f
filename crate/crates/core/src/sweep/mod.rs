//! Parameter sweeps over the analytic pipeline, optionally paired with simulation.

mod presets;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::analytic::{penetration_system_with, LoadModel, PenetrationReport, DEFAULT_THRESHOLD};
use crate::assignment::compute_assignment;
use crate::scenario::{ModeKind, Scenario, ScenarioDoc, ScenarioError};
use crate::simulator::{simulate, SimConfig, SimError, SimReport};

pub use presets::{preset, PRESETS};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("cannot resolve parameter path `{path}`: {reason}")]
    Path { path: String, reason: String },
    #[error("fire_units must be a positive integer, got {0}")]
    FireUnits(f64),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error("unknown preset `{name}`; available presets: {}", PRESETS.join(", "))]
    UnknownPreset { name: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("simulation failed at {parameter} = {value}: {source}")]
    Simulation {
        parameter: String,
        value: f64,
        source: SimError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    Index(usize),
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissileField {
    LaunchRate,
    /// Mean time between launches, `1 / launch_rate`.
    LaunchInterval,
    Speed,
    /// Rotation of the launch point about the target, measured from its base bearing.
    BearingDegrees,
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShipField {
    Radius,
    InterceptRate,
    FireUnits,
    X,
    Y,
}

/// A settable scalar such as `missile[0].launch_rate` or `ship[*].radius`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamPath {
    Missile(Selector, MissileField),
    Ship(Selector, ShipField),
}

impl FromStr for ParamPath {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| SweepError::Path {
            path: s.to_string(),
            reason: reason.to_string(),
        };
        let (head, field) = s
            .split_once('.')
            .ok_or_else(|| fail("expected `<entity>[<index>|*].<field>`"))?;
        let (entity, rest) = head
            .split_once('[')
            .ok_or_else(|| fail("missing `[index]`"))?;
        let index = rest.strip_suffix(']').ok_or_else(|| fail("missing `]`"))?;
        let selector = match index {
            "*" => Selector::All,
            n => Selector::Index(n.parse().map_err(|_| fail("index must be an integer or `*`"))?),
        };
        match entity {
            "missile" | "missiles" => {
                let f = match field {
                    "launch_rate" => MissileField::LaunchRate,
                    "launch_interval" => MissileField::LaunchInterval,
                    "speed" => MissileField::Speed,
                    "bearing_degrees" => MissileField::BearingDegrees,
                    "x" => MissileField::X,
                    "y" => MissileField::Y,
                    _ => return Err(fail("unknown missile field")),
                };
                Ok(ParamPath::Missile(selector, f))
            }
            "ship" | "ships" => {
                let f = match field {
                    "radius" => ShipField::Radius,
                    "intercept_rate" => ShipField::InterceptRate,
                    "fire_units" => ShipField::FireUnits,
                    "x" => ShipField::X,
                    "y" => ShipField::Y,
                    _ => return Err(fail("unknown ship field")),
                };
                Ok(ParamPath::Ship(selector, f))
            }
            _ => Err(fail("entity must be `missile` or `ship`")),
        }
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sel = |s: &Selector| match s {
            Selector::Index(i) => i.to_string(),
            Selector::All => "*".into(),
        };
        match self {
            ParamPath::Missile(s, field) => {
                let name = match field {
                    MissileField::LaunchRate => "launch_rate",
                    MissileField::LaunchInterval => "launch_interval",
                    MissileField::Speed => "speed",
                    MissileField::BearingDegrees => "bearing_degrees",
                    MissileField::X => "x",
                    MissileField::Y => "y",
                };
                write!(f, "missile[{}].{name}", sel(s))
            }
            ParamPath::Ship(s, field) => {
                let name = match field {
                    ShipField::Radius => "radius",
                    ShipField::InterceptRate => "intercept_rate",
                    ShipField::FireUnits => "fire_units",
                    ShipField::X => "x",
                    ShipField::Y => "y",
                };
                write!(f, "ship[{}].{name}", sel(s))
            }
        }
    }
}

fn selected(selector: Selector, len: usize, path: &ParamPath) -> Result<Vec<usize>, SweepError> {
    match selector {
        Selector::All => Ok((0..len).collect()),
        Selector::Index(i) if i < len => Ok(vec![i]),
        Selector::Index(i) => Err(SweepError::Path {
            path: path.to_string(),
            reason: format!("index {i} out of range (len {len})"),
        }),
    }
}

impl ParamPath {
    /// Checks the path against a scenario without changing anything.
    pub fn resolve(&self, scenario: &Scenario) -> Result<(), SweepError> {
        match *self {
            ParamPath::Missile(s, _) => selected(s, scenario.n_directions(), self).map(drop),
            ParamPath::Ship(s, _) => selected(s, scenario.n_ships(), self).map(drop),
        }
    }

    /// Returns a copy of `scenario` with the parameter set to `value`.
    pub fn apply(&self, scenario: &Scenario, value: f64) -> Result<Scenario, SweepError> {
        let path = *self;
        let targets = match path {
            ParamPath::Missile(s, _) => selected(s, scenario.n_directions(), &path)?,
            ParamPath::Ship(s, _) => selected(s, scenario.n_ships(), &path)?,
        };
        if let ParamPath::Ship(_, ShipField::FireUnits) = path {
            if !(value >= 1.0 && value.fract() == 0.0 && value <= f64::from(u32::MAX)) {
                return Err(SweepError::FireUnits(value));
            }
        }
        let edited = scenario.edited(|missiles, ships| {
            for &k in &targets {
                match path {
                    ParamPath::Missile(_, field) => {
                        let m = &mut missiles[k];
                        match field {
                            MissileField::LaunchRate => m.launch_rate = value,
                            MissileField::LaunchInterval => m.launch_rate = 1.0 / value,
                            MissileField::Speed => m.speed = value,
                            MissileField::BearingDegrees => {
                                m.launch_pos = m.launch_pos.rotated(value.to_radians())
                            }
                            MissileField::X => m.launch_pos.x = value,
                            MissileField::Y => m.launch_pos.y = value,
                        }
                    }
                    ParamPath::Ship(_, field) => {
                        let s = &mut ships[k];
                        match field {
                            ShipField::Radius => s.radius = value,
                            ShipField::InterceptRate => s.intercept_rate = value,
                            ShipField::FireUnits => s.fire_units = value as u32,
                            ShipField::X => s.pos.x = value,
                            ShipField::Y => s.pos.y = value,
                        }
                    }
                }
            }
            Ok(())
        })?;
        Ok(edited)
    }
}

/// One curve of a sweep: an engagement mode plus fixed parameter overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub mode: ModeKind,
    pub overrides: Vec<(ParamPath, f64)>,
}

impl Series {
    pub fn plain(mode: ModeKind) -> Self {
        Self {
            label: mode.as_str().to_string(),
            mode,
            overrides: Vec::new(),
        }
    }

    fn scenario(&self, base: &Scenario) -> Result<Scenario, SweepError> {
        let mut s = base.with_mode(self.mode)?;
        for (path, value) in &self.overrides {
            s = path.apply(&s, *value)?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub base: Scenario,
    pub parameter: ParamPath,
    pub grid: Vec<f64>,
    pub series: Vec<Series>,
    pub with_simulation: bool,
    pub sim: SimConfig,
    pub threshold: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    name: Option<String>,
    base: BaseDoc,
    parameter: String,
    grid: Vec<f64>,
    #[serde(default)]
    modes: Option<Vec<ModeKind>>,
    #[serde(default)]
    series: Option<Vec<SeriesDoc>>,
    #[serde(default)]
    with_simulation: bool,
    #[serde(default)]
    sim: Option<SimConfig>,
    #[serde(default)]
    threshold: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BaseDoc {
    File(String),
    Inline(Box<ScenarioDoc>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesDoc {
    label: Option<String>,
    mode: ModeKind,
    #[serde(default)]
    overrides: BTreeMap<String, f64>,
}

impl SweepSpec {
    /// Parses a JSON sweep spec. A string `base` is a scenario path relative to `dir`.
    pub fn from_json(document: &str, dir: &Path) -> Result<Self, SweepError> {
        let doc: SpecDoc =
            serde_json::from_str(document).map_err(|e| SweepError::Spec(e.to_string()))?;
        let base = match doc.base {
            BaseDoc::File(p) => crate::scenario::load_scenario_file(dir.join(p))?,
            BaseDoc::Inline(d) => d.into_scenario()?,
        };
        let series = match (doc.series, doc.modes) {
            (Some(_), Some(_)) => {
                return Err(SweepError::Spec("give either `series` or `modes`, not both".into()))
            }
            (Some(list), None) => list
                .into_iter()
                .map(|s| {
                    let overrides = s
                        .overrides
                        .into_iter()
                        .map(|(k, v)| Ok((k.parse::<ParamPath>()?, v)))
                        .collect::<Result<Vec<_>, SweepError>>()?;
                    Ok(Series {
                        label: s.label.unwrap_or_else(|| s.mode.to_string()),
                        mode: s.mode,
                        overrides,
                    })
                })
                .collect::<Result<Vec<_>, SweepError>>()?,
            (None, modes) => modes
                .unwrap_or_else(|| vec![ModeKind::Cooperative, ModeKind::Independent])
                .into_iter()
                .map(Series::plain)
                .collect(),
        };
        let spec = SweepSpec {
            name: doc.name.unwrap_or_else(|| "custom".into()),
            base,
            parameter: doc.parameter.parse()?,
            grid: doc.grid,
            series,
            with_simulation: doc.with_simulation,
            sim: doc.sim.unwrap_or_default(),
            threshold: doc.threshold.unwrap_or(DEFAULT_THRESHOLD),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SweepError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            SweepError::Spec(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.grid.is_empty() {
            return Err(SweepError::Grid("grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(SweepError::Grid("grid values must be finite".into()));
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(SweepError::Grid("grid must be strictly monotone".into()));
        }
        if self.series.is_empty() {
            return Err(SweepError::Spec("at least one series is required".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(SweepError::Spec(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        self.parameter.resolve(&self.base)?;
        if self.with_simulation {
            self.sim.validate().map_err(|e| SweepError::Spec(e.to_string()))?;
        }
        Ok(())
    }
}

/// Results at one grid value, one entry per series.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub reports: Vec<PenetrationReport>,
    pub simulated: Vec<Option<SimReport>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub name: String,
    pub parameter: ParamPath,
    pub baseline_sha256: String,
    pub seed: Option<u64>,
    pub threshold: f64,
    pub labels: Vec<String>,
    pub ship_ids: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn column(&self, series: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.reports[series].p_system).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    /// First grid value whose `p_system` is at or below the threshold.
    pub fn threshold_crossing(&self, series: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.reports[series].p_system <= self.threshold)
            .map(|r| r.value)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# preset: {}\n", self.name));
        out.push_str(&format!("# parameter: {}\n", self.parameter));
        out.push_str(&format!("# baseline_sha256: {}\n", self.baseline_sha256));
        match self.seed {
            Some(seed) => out.push_str(&format!("# seed: {seed}\n")),
            None => out.push_str("# seed: none\n"),
        }
        out.push_str(&format!("# version: {}\n", crate::VERSION));
        out.push_str(&format!("# threshold: {}\n", self.threshold));
        for (k, label) in self.labels.iter().enumerate() {
            match self.threshold_crossing(k) {
                Some(v) => out.push_str(&format!("# threshold_crossing[{label}]: {v}\n")),
                None => out.push_str(&format!("# threshold_crossing[{label}]: none\n")),
            }
        }

        let simulated = self.seed.is_some();
        let mut header = vec!["param".to_string()];
        for label in &self.labels {
            header.push(format!("{label}_p_system"));
            header.push(format!("{label}_breached"));
            for id in &self.ship_ids {
                header.push(format!("{label}_p_ship[{id}]"));
            }
            if simulated {
                header.push(format!("{label}_sim_p_system"));
                header.push(format!("{label}_sim_ci"));
            }
        }
        let gap = self.labels.len() == 2;
        if gap {
            header.push("gap".into());
        }

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.value.to_string()];
            for (report, sim) in row.reports.iter().zip(&row.simulated) {
                rec.push(report.p_system.to_string());
                rec.push(report.breached.to_string());
                rec.extend(report.p_ship.iter().map(|p| p.to_string()));
                if simulated {
                    match sim {
                        Some(s) => {
                            rec.push(s.p_system_hat.to_string());
                            rec.push(s.ship_ci_half_width[s.weakest_ship()].to_string());
                        }
                        None => rec.extend([String::new(), String::new()]),
                    }
                }
            }
            if gap {
                rec.push((row.reports[0].p_system - row.reports[1].p_system).to_string());
            }
            w.write_record(&rec).expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory flush");
        out.push_str(std::str::from_utf8(&body).expect("csv is utf-8"));
        out
    }
}

/// Evaluates every series at every grid value. Grid points run in parallel;
/// rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable, SweepError> {
    spec.validate()?;
    let bases = spec
        .series
        .iter()
        .map(|s| s.scenario(&spec.base))
        .collect::<Result<Vec<_>, _>>()?;

    let rows = spec
        .grid
        .par_iter()
        .map(|&value| {
            let mut reports = Vec::with_capacity(bases.len());
            let mut simulated = Vec::with_capacity(bases.len());
            for base in &bases {
                let scenario = spec.parameter.apply(base, value)?;
                let assignment = compute_assignment(&scenario);
                reports.push(penetration_system_with(
                    &scenario,
                    &assignment,
                    LoadModel::PerStream,
                    spec.threshold,
                ));
                let sim = if spec.with_simulation {
                    let report = simulate(&scenario, &assignment, &spec.sim).map_err(|source| {
                        SweepError::Simulation {
                            parameter: spec.parameter.to_string(),
                            value,
                            source,
                        }
                    })?;
                    Some(report)
                } else {
                    None
                };
                simulated.push(sim);
            }
            Ok(SweepRow {
                value,
                reports,
                simulated,
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;

    Ok(SweepTable {
        name: spec.name.clone(),
        parameter: spec.parameter,
        baseline_sha256: spec.base.canonical_hash(),
        seed: spec.with_simulation.then_some(spec.sim.seed),
        threshold: spec.threshold,
        labels: spec.series.iter().map(|s| s.label.clone()).collect(),
        ship_ids: spec.base.ships().iter().map(|s| s.id.clone()).collect(),
        rows,
    })
}

/// Runs a named preset with its default settings.
pub fn run_preset(name: &str) -> Result<SweepTable, SweepError> {
    run_sweep(&preset(name)?)
}
