//! Scenario configuration: threats, ships and engagement mode.
//!
//! Scenarios are always held in a canonical frame with the defended target at
//! the origin; [`Scenario::new`] and [`load_scenario`] translate every position
//! by the negated target location.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assignment::AssignmentMatrix;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// A planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise rotation about the origin.
    pub fn rotated(self, radians: f64) -> Point2 {
        let (s, c) = radians.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;

    fn add(self, other: Point2) -> Point2 {
        Point2::new(self.x + other.x, self.y + other.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;

    fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// One attack direction: a Poisson stream of missiles launched from a fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissileThreat {
    pub id: String,
    #[serde(rename = "pos")]
    pub launch_pos: Point2,
    /// Poisson launch rate, 1/s.
    pub launch_rate: f64,
    /// Flight speed, m/s.
    pub speed: f64,
}

/// A defending ship: an interception disc served by `fire_units` parallel servers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ship {
    pub id: String,
    pub pos: Point2,
    /// Interception radius, m.
    pub radius: f64,
    /// Per-fire-unit exponential interception rate, 1/s.
    pub intercept_rate: f64,
    pub fire_units: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Cooperative,
    Independent,
}

impl ModeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeKind::Cooperative => "cooperative",
            ModeKind::Independent => "independent",
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cooperative" => Ok(ModeKind::Cooperative),
            "independent" => Ok(ModeKind::Independent),
            other => Err(format!(
                "unknown mode `{other}` (expected cooperative|independent)"
            )),
        }
    }
}

/// Missile index -> ship index for one-to-one interception.
///
/// Missiles without an entry are not engaged by any ship.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    ship_for: Vec<Option<usize>>,
}

impl Pairing {
    /// Missile `k` paired with ship `k`.
    pub fn index_order(n: usize) -> Self {
        Self {
            ship_for: (0..n).map(Some).collect(),
        }
    }

    pub fn ship_for(&self, missile: usize) -> Option<usize> {
        self.ship_for.get(missile).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.ship_for.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ship_for.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngagementMode {
    /// Many-to-many: every ship whose disc a trajectory crosses takes a share.
    Cooperative,
    /// One-to-one: each direction is handled only by its paired ship.
    Independent(Pairing),
}

impl EngagementMode {
    pub fn kind(&self) -> ModeKind {
        match self {
            EngagementMode::Cooperative => ModeKind::Cooperative,
            EngagementMode::Independent(_) => ModeKind::Independent,
        }
    }
}

/// Mode as requested by a caller, before ids are resolved against the fleet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModeSpec {
    Cooperative,
    /// `None` requests the index-order default, which needs `N_T == N_C`.
    Independent(Option<Vec<(String, String)>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    target: Point2,
    missiles: Vec<MissileThreat>,
    ships: Vec<Ship>,
    mode: EngagementMode,
}

impl Scenario {
    /// Validates the configuration and translates it so that `target` sits at the origin.
    pub fn new(
        target: Point2,
        mut missiles: Vec<MissileThreat>,
        mut ships: Vec<Ship>,
        mode: ModeSpec,
    ) -> Result<Self, ScenarioError> {
        if !target.is_finite() {
            return Err(invalid("target", "coordinates must be finite"));
        }
        for m in &mut missiles {
            m.launch_pos = m.launch_pos - target;
        }
        for s in &mut ships {
            s.pos = s.pos - target;
        }
        validate_fleet(&missiles, &ships)?;
        let mode = resolve_mode(&missiles, &ships, mode)?;
        Ok(Self {
            target: Point2::ORIGIN,
            missiles,
            ships,
            mode,
        })
    }

    pub fn from_json(document: &str) -> Result<Self, ScenarioError> {
        let doc: ScenarioDoc = serde_json::from_str(document)?;
        doc.into_scenario()
    }

    /// Canonical JSON document (target at the origin).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario serializes")
    }

    pub fn to_document(&self) -> ScenarioDoc {
        let mode = match &self.mode {
            EngagementMode::Cooperative => ModeDoc::Name("cooperative".into()),
            EngagementMode::Independent(p) => {
                let map = (0..self.missiles.len())
                    .filter_map(|i| {
                        p.ship_for(i)
                            .map(|j| (self.missiles[i].id.clone(), self.ships[j].id.clone()))
                    })
                    .collect();
                ModeDoc::Tagged(TaggedMode { independent: map })
            }
        };
        ScenarioDoc {
            target: self.target,
            missiles: self.missiles.clone(),
            ships: self.ships.clone(),
            mode,
        }
    }

    /// Hex SHA-256 of the canonical compact JSON.
    pub fn canonical_hash(&self) -> String {
        let json = serde_json::to_vec(&self.to_document()).expect("scenario serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn target(&self) -> Point2 {
        self.target
    }

    pub fn missiles(&self) -> &[MissileThreat] {
        &self.missiles
    }

    pub fn ships(&self) -> &[Ship] {
        &self.ships
    }

    pub fn mode(&self) -> &EngagementMode {
        &self.mode
    }

    pub fn n_directions(&self) -> usize {
        self.missiles.len()
    }

    pub fn n_ships(&self) -> usize {
        self.ships.len()
    }

    /// Same fleet under another mode. An already independent scenario keeps its pairing;
    /// otherwise independent mode falls back to index order.
    pub fn with_mode(&self, kind: ModeKind) -> Result<Scenario, ScenarioError> {
        let mode = match (kind, &self.mode) {
            (ModeKind::Cooperative, _) => EngagementMode::Cooperative,
            (ModeKind::Independent, EngagementMode::Independent(p)) => {
                EngagementMode::Independent(p.clone())
            }
            (ModeKind::Independent, EngagementMode::Cooperative) => {
                resolve_mode(&self.missiles, &self.ships, ModeSpec::Independent(None))?
            }
        };
        Ok(Scenario {
            mode,
            ..self.clone()
        })
    }

    /// Applies `edit` to copies of the threat and ship lists and revalidates.
    /// The lists must keep their lengths so the pairing stays meaningful.
    pub fn edited<F>(&self, edit: F) -> Result<Scenario, ScenarioError>
    where
        F: FnOnce(&mut [MissileThreat], &mut [Ship]) -> Result<(), ScenarioError>,
    {
        let mut missiles = self.missiles.clone();
        let mut ships = self.ships.clone();
        edit(&mut missiles, &mut ships)?;
        validate_fleet(&missiles, &ships)?;
        Ok(Scenario {
            target: self.target,
            missiles,
            ships,
            mode: self.mode.clone(),
        })
    }

    /// Rigid rotation of every position about the target.
    pub fn rotated(&self, radians: f64) -> Scenario {
        let mut out = self.clone();
        for m in &mut out.missiles {
            m.launch_pos = m.launch_pos.rotated(radians);
        }
        for s in &mut out.ships {
            s.pos = s.pos.rotated(radians);
        }
        out
    }
}

fn validate_fleet(missiles: &[MissileThreat], ships: &[Ship]) -> Result<(), ScenarioError> {
    if missiles.is_empty() {
        return Err(invalid("missiles", "at least one missile threat is required"));
    }
    if ships.is_empty() {
        return Err(invalid("ships", "at least one ship is required"));
    }
    let mut seen = HashSet::new();
    for (k, m) in missiles.iter().enumerate() {
        let field = |name: &str| format!("missiles[{k}].{name}");
        if !seen.insert(m.id.as_str()) {
            return Err(invalid(field("id"), format!("duplicate id `{}`", m.id)));
        }
        if !m.launch_pos.is_finite() {
            return Err(invalid(field("pos"), "coordinates must be finite"));
        }
        if m.launch_pos == Point2::ORIGIN {
            return Err(invalid(field("pos"), "launch position coincides with the target"));
        }
        if !(m.launch_rate.is_finite() && m.launch_rate > 0.0) {
            return Err(invalid(field("launch_rate"), "must be finite and > 0"));
        }
        if !(m.speed.is_finite() && m.speed > 0.0) {
            return Err(invalid(field("speed"), "must be finite and > 0"));
        }
    }
    for (k, s) in ships.iter().enumerate() {
        let field = |name: &str| format!("ships[{k}].{name}");
        if !seen.insert(s.id.as_str()) {
            return Err(invalid(field("id"), format!("duplicate id `{}`", s.id)));
        }
        if !s.pos.is_finite() {
            return Err(invalid(field("pos"), "coordinates must be finite"));
        }
        if !(s.radius.is_finite() && s.radius > 0.0) {
            return Err(invalid(field("radius"), "must be finite and > 0"));
        }
        if !(s.intercept_rate.is_finite() && s.intercept_rate > 0.0) {
            return Err(invalid(field("intercept_rate"), "must be finite and > 0"));
        }
        if s.fire_units == 0 {
            return Err(invalid(field("fire_units"), "must be >= 1"));
        }
    }
    Ok(())
}

fn resolve_mode(
    missiles: &[MissileThreat],
    ships: &[Ship],
    mode: ModeSpec,
) -> Result<EngagementMode, ScenarioError> {
    match mode {
        ModeSpec::Cooperative => Ok(EngagementMode::Cooperative),
        ModeSpec::Independent(None) => {
            if missiles.len() != ships.len() {
                return Err(invalid(
                    "mode.independent",
                    format!(
                        "explicit pairing required when missile count ({}) differs from ship count ({})",
                        missiles.len(),
                        ships.len()
                    ),
                ));
            }
            Ok(EngagementMode::Independent(Pairing::index_order(
                missiles.len(),
            )))
        }
        ModeSpec::Independent(Some(pairs)) if pairs.is_empty() => {
            resolve_mode(missiles, ships, ModeSpec::Independent(None))
        }
        ModeSpec::Independent(Some(pairs)) => {
            let mut ship_for = vec![None; missiles.len()];
            let mut used = HashSet::new();
            for (missile_id, ship_id) in &pairs {
                let field = format!("mode.independent.{missile_id}");
                let i = missiles
                    .iter()
                    .position(|m| &m.id == missile_id)
                    .ok_or_else(|| invalid(&field, "unknown missile id"))?;
                let j = ships
                    .iter()
                    .position(|s| &s.id == ship_id)
                    .ok_or_else(|| invalid(&field, format!("unknown ship id `{ship_id}`")))?;
                if ship_for[i].is_some() {
                    return Err(invalid(&field, "missile paired more than once"));
                }
                if !used.insert(j) {
                    return Err(invalid(
                        &field,
                        format!("ship `{ship_id}` already paired (pairing must be one-to-one)"),
                    ));
                }
                ship_for[i] = Some(j);
            }
            Ok(EngagementMode::Independent(Pairing { ship_for }))
        }
    }
}

/// Wire form of a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub target: Point2,
    pub missiles: Vec<MissileThreat>,
    pub ships: Vec<Ship>,
    #[serde(default)]
    pub mode: ModeDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeDoc {
    Name(String),
    Tagged(TaggedMode),
}

impl Default for ModeDoc {
    fn default() -> Self {
        ModeDoc::Name("cooperative".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedMode {
    pub independent: BTreeMap<String, String>,
}

impl ScenarioDoc {
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let mode = match self.mode {
            ModeDoc::Name(name) => match name.parse::<ModeKind>() {
                Ok(ModeKind::Cooperative) => ModeSpec::Cooperative,
                Ok(ModeKind::Independent) => ModeSpec::Independent(None),
                Err(reason) => return Err(invalid("mode", reason)),
            },
            ModeDoc::Tagged(t) => ModeSpec::Independent(Some(t.independent.into_iter().collect())),
        };
        Scenario::new(self.target, self.missiles, self.ships, mode)
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_json(document)
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_scenario(&text)
}

/// Non-fatal findings about a scenario/assignment pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// Offered load `a_ij` reaches the server count: no steady state exists.
    UnstableStream {
        direction: usize,
        ship: usize,
        offered_load: f64,
        servers: u32,
    },
    /// No engaged ship's disc intersects this direction's trajectory.
    UncoveredDirection { direction: usize },
    /// An engaged disc does not contain the target, so the chord is not the
    /// entry-to-impact flight path.
    TargetOutsideDisc { direction: usize, ship: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnstableStream {
                direction,
                ship,
                offered_load,
                servers,
            } => write!(
                f,
                "unstable stream (direction {direction}, ship {ship}): offered load {offered_load} >= {servers} fire units"
            ),
            Diagnostic::UncoveredDirection { direction } => {
                write!(f, "direction {direction} is not covered by any engaged ship")
            }
            Diagnostic::TargetOutsideDisc { direction, ship } => write!(
                f,
                "ship {ship} engages direction {direction} but its disc excludes the target"
            ),
        }
    }
}

/// Lists unstable streams, uncovered directions and engaged discs that exclude the target.
pub fn validate_stability(scenario: &Scenario, assignment: &AssignmentMatrix) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for i in 0..assignment.n_directions() {
        for (j, ship) in scenario.ships().iter().enumerate() {
            let lambda = assignment.lambda()[(i, j)];
            if lambda <= 0.0 {
                continue;
            }
            let offered_load = lambda / ship.intercept_rate;
            if offered_load >= f64::from(ship.fire_units) {
                out.push(Diagnostic::UnstableStream {
                    direction: i,
                    ship: j,
                    offered_load,
                    servers: ship.fire_units,
                });
            }
            if ship.pos.distance(scenario.target()) > ship.radius {
                out.push(Diagnostic::TargetOutsideDisc {
                    direction: i,
                    ship: j,
                });
            }
        }
    }
    out.extend(
        assignment
            .uncovered()
            .iter()
            .map(|&direction| Diagnostic::UncoveredDirection { direction }),
    );
    out
}
