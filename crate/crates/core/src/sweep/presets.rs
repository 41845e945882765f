//! Built-in sweeps on the four-ship baseline.

use super::{ParamPath, Series, SweepError, SweepSpec};
use crate::analytic::DEFAULT_THRESHOLD;
use crate::scenario::{load_scenario, ModeKind, Scenario};
use crate::simulator::SimConfig;

pub const PRESETS: &[&str] = &[
    "fig5a", "fig5b", "fig6", "fig7a", "fig7b", "fig7c", "fig7d", "fig7e", "fig7f", "fig8a",
    "fig8b", "fig8c", "fig8d", "fig8e", "fig8f",
];

const BASELINE: &str = include_str!("../../scenarios/baseline_cooperative.json");

pub fn baseline() -> Scenario {
    load_scenario(BASELINE).expect("embedded baseline is valid")
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let ratio = hi / lo;
    (0..n)
        .map(|k| lo * ratio.powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// 8.0, 8.1, ..., 10.0 seconds.
fn launch_intervals() -> Vec<f64> {
    (80..=100).map(|k| k as f64 / 10.0).collect()
}

/// Rates for the interval grid, ascending.
fn launch_rates() -> Vec<f64> {
    (80..=100).rev().map(|k| 10.0 / k as f64).collect()
}

fn intercept_rates() -> Vec<f64> {
    geomspace(1.0 / 200.0, 1.0 / 10.0, 20)
}

fn radii() -> Vec<f64> {
    linspace(100.0, 1000.0, 19)
}

fn fire_units() -> Vec<f64> {
    (1..=12).map(f64::from).collect()
}

fn speeds() -> Vec<f64> {
    linspace(340.0, 3400.0, 19)
}

fn extended_speeds() -> Vec<f64> {
    (1..=100).map(|k| 340.0 * k as f64).collect()
}

fn bearings() -> Vec<f64> {
    (-180..=180).map(f64::from).collect()
}

fn path(s: &str) -> ParamPath {
    s.parse().expect("preset path is well formed")
}

fn both_modes() -> Vec<Series> {
    vec![
        Series::plain(ModeKind::Cooperative),
        Series::plain(ModeKind::Independent),
    ]
}

/// Cooperative curves, one per launch interval in seconds.
fn interval_cluster() -> Vec<Series> {
    [8.0, 9.0, 10.0]
        .into_iter()
        .map(|t| Series {
            label: format!("interval_{t}"),
            mode: ModeKind::Cooperative,
            overrides: vec![(path("missile[*].launch_interval"), t)],
        })
        .collect()
}

/// Cooperative curves, one per interception radius in meters.
fn radius_cluster() -> Vec<Series> {
    [300.0, 400.0, 500.0]
        .into_iter()
        .map(|r| Series {
            label: format!("radius_{r}"),
            mode: ModeKind::Cooperative,
            overrides: vec![(path("ship[*].radius"), r)],
        })
        .collect()
}

/// Builds the spec behind a preset name.
pub fn preset(name: &str) -> Result<SweepSpec, SweepError> {
    let (parameter, grid, series) = match name {
        "fig5a" => ("missile[*].launch_interval", launch_intervals(), both_modes()),
        "fig5b" => ("missile[*].speed", speeds(), both_modes()),
        "fig6" => (
            "missile[*].launch_interval",
            launch_intervals(),
            vec![
                Series {
                    label: "cooperative_m4_mu88".into(),
                    mode: ModeKind::Cooperative,
                    overrides: vec![
                        (path("ship[*].fire_units"), 4.0),
                        (path("ship[*].intercept_rate"), 1.0 / 88.0),
                    ],
                },
                Series {
                    label: "independent_m7_mu60".into(),
                    mode: ModeKind::Independent,
                    overrides: Vec::new(),
                },
            ],
        ),
        "fig7a" => ("ship[*].intercept_rate", intercept_rates(), both_modes()),
        "fig7b" => ("ship[*].radius", radii(), both_modes()),
        "fig7c" => ("ship[*].fire_units", fire_units(), both_modes()),
        "fig7d" => ("ship[*].intercept_rate", intercept_rates(), interval_cluster()),
        "fig7e" => ("ship[*].radius", radii(), interval_cluster()),
        "fig7f" => ("ship[*].fire_units", fire_units(), interval_cluster()),
        "fig8a" => ("missile[*].launch_rate", launch_rates(), both_modes()),
        "fig8b" => ("missile[*].speed", speeds(), both_modes()),
        "fig8c" => ("missile[0].bearing_degrees", bearings(), both_modes()),
        "fig8d" => ("missile[*].launch_rate", launch_rates(), radius_cluster()),
        "fig8e" => ("missile[*].speed", extended_speeds(), radius_cluster()),
        "fig8f" => ("missile[0].bearing_degrees", bearings(), radius_cluster()),
        _ => {
            return Err(SweepError::UnknownPreset {
                name: name.to_string(),
            })
        }
    };
    Ok(SweepSpec {
        name: name.to_string(),
        base: baseline(),
        parameter: path(parameter),
        grid,
        series,
        with_simulation: false,
        sim: SimConfig::default(),
        threshold: DEFAULT_THRESHOLD,
    })
}
