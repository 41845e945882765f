//! Proportional task assignment of launch rates to ships.

use std::fmt::Write as _;

use serde::Serialize;

use crate::geometry::segment_disc_intersection;
use crate::matrix::Matrix;
use crate::scenario::{EngagementMode, Scenario};

/// Per (direction, ship) chord lengths, assigned rates and deadlines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentMatrix {
    n_directions: usize,
    n_ships: usize,
    /// `line_ij`, meters.
    line: Matrix<f64>,
    /// `lambda_ij`, 1/s.
    lambda: Matrix<f64>,
    /// Flight time across the chord, `line_ij / v_i`, seconds.
    deadline: Matrix<f64>,
    uncovered: Vec<usize>,
}

impl AssignmentMatrix {
    pub fn n_directions(&self) -> usize {
        self.n_directions
    }

    pub fn n_ships(&self) -> usize {
        self.n_ships
    }

    pub fn line(&self) -> &Matrix<f64> {
        &self.line
    }

    pub fn lambda(&self) -> &Matrix<f64> {
        &self.lambda
    }

    pub fn deadline(&self) -> &Matrix<f64> {
        &self.deadline
    }

    /// Directions that no engaged ship intercepts, ascending.
    pub fn uncovered(&self) -> &[usize] {
        &self.uncovered
    }

    /// Three stacked blocks (`line`, `lambda`, `deadline`), one row per direction.
    pub fn to_csv(&self, scenario: &Scenario) -> String {
        let mut out = String::from("block,direction");
        for ship in scenario.ships() {
            write!(out, ",{}", ship.id).unwrap();
        }
        out.push('\n');
        for (name, block) in [
            ("line", &self.line),
            ("lambda", &self.lambda),
            ("deadline", &self.deadline),
        ] {
            for (i, missile) in scenario.missiles().iter().enumerate() {
                write!(out, "{name},{}", missile.id).unwrap();
                for v in block.row(i) {
                    write!(out, ",{v}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Builds the engagement matrix for the scenario's mode.
///
/// Cooperative: `lambda_ij = lambda_i * line_ij / sum_j line_ij`.
/// Independent: the paired ship takes the whole stream.
pub fn compute_assignment(scenario: &Scenario) -> AssignmentMatrix {
    let n_t = scenario.n_directions();
    let n_c = scenario.n_ships();
    let target = scenario.target();
    let mut line = Matrix::filled(n_t, n_c, 0.0);
    let mut lambda = Matrix::filled(n_t, n_c, 0.0);
    let mut deadline = Matrix::filled(n_t, n_c, 0.0);
    let mut uncovered = Vec::new();

    // Scenario validation guarantees a non-degenerate segment and positive radius.
    let chord = |i: usize, j: usize| {
        let m = &scenario.missiles()[i];
        let s = &scenario.ships()[j];
        segment_disc_intersection(m.launch_pos, target, s.pos, s.radius)
            .expect("validated scenario geometry")
            .length
    };

    for (i, missile) in scenario.missiles().iter().enumerate() {
        match scenario.mode() {
            EngagementMode::Cooperative => {
                for j in 0..n_c {
                    line[(i, j)] = chord(i, j);
                }
                let total: f64 = line.row(i).iter().sum();
                if total > 0.0 {
                    for j in 0..n_c {
                        let l = line[(i, j)];
                        if l > 0.0 {
                            lambda[(i, j)] = missile.launch_rate * (l / total);
                            deadline[(i, j)] = l / missile.speed;
                        }
                    }
                } else {
                    uncovered.push(i);
                }
            }
            EngagementMode::Independent(pairing) => match pairing.ship_for(i) {
                Some(j) => {
                    let l = chord(i, j);
                    line[(i, j)] = l;
                    if l > 0.0 {
                        lambda[(i, j)] = missile.launch_rate;
                        deadline[(i, j)] = l / missile.speed;
                    } else {
                        uncovered.push(i);
                    }
                }
                None => uncovered.push(i),
            },
        }
    }

    AssignmentMatrix {
        n_directions: n_t,
        n_ships: n_c,
        line,
        lambda,
        deadline,
        uncovered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{load_scenario, ModeKind, Point2};
    use proptest::prelude::*;

    fn baseline() -> Scenario {
        load_scenario(include_str!("../scenarios/baseline_cooperative.json")).unwrap()
    }

    #[test]
    fn baseline_cooperative_first_row() {
        let a = compute_assignment(&baseline());
        let half = (400.0f64 * 400.0 - 200.0 * 200.0).sqrt();
        let expected = [600.0, half, half, 200.0];
        for (got, want) in a.line().row(0).iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        let total: f64 = expected.iter().sum();
        assert!((total - 1492.8203).abs() < 1e-4);
        let lambda_11 = a.lambda()[(0, 0)];
        assert!((lambda_11 - (1.0 / 9.0) * 600.0 / total).abs() < 1e-15);
        assert!((lambda_11 - 0.044658).abs() < 1e-6);
        assert!((a.deadline()[(0, 0)] - 600.0 / 1020.0).abs() < 1e-15);
        assert!(a.uncovered().is_empty());
    }

    #[test]
    fn baseline_independent_first_row() {
        let s = baseline().with_mode(ModeKind::Independent).unwrap();
        let a = compute_assignment(&s);
        assert_eq!(a.lambda().row(0), &[1.0 / 9.0, 0.0, 0.0, 0.0]);
        assert_eq!(a.line().row(0)[1..], [0.0, 0.0, 0.0]);
        assert!((a.line()[(0, 0)] - 600.0).abs() < 1e-9);
    }

    #[test]
    fn missed_direction_is_uncovered() {
        let doc = r#"{"target": [0, 0],
            "missiles": [{"id": "T1", "pos": [-800, 0], "launch_rate": 0.1, "speed": 300}],
            "ships": [{"id": "C1", "pos": [0, 600], "radius": 100, "intercept_rate": 0.1, "fire_units": 2}],
            "mode": "cooperative"}"#;
        let a = compute_assignment(&load_scenario(doc).unwrap());
        assert_eq!(a.uncovered(), &[0]);
        assert_eq!(a.lambda().row(0), &[0.0]);
    }

    #[test]
    fn cyclic_symmetry_of_baseline() {
        // A 90 degree turn sends T1->T3, T2->T1, T3->T4, T4->T2 and likewise for ships.
        let a = compute_assignment(&baseline());
        let perm = [2, 0, 3, 1];
        for i in 0..4 {
            for j in 0..4 {
                let diff = (a.lambda()[(i, j)] - a.lambda()[(perm[i], perm[j])]).abs();
                assert!(diff < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn csv_has_three_blocks() {
        let s = baseline();
        let csv = compute_assignment(&s).to_csv(&s);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "block,direction,C1,C2,C3,C4");
        assert_eq!(lines.len(), 1 + 3 * 4);
        assert!(lines[5].starts_with("lambda,T1,"));
        assert!(lines[9].starts_with("deadline,T1,"));
    }

    fn random_scenario() -> impl Strategy<Value = Scenario> {
        let missile = (0.0..std::f64::consts::TAU, 300.0..1500.0f64, 0.01..1.0f64, 100.0..3000.0f64);
        let ship = (-600.0..600.0f64, -600.0..600.0f64, 50.0..800.0f64, 0.005..0.5f64, 1u32..10);
        (prop::collection::vec(missile, 1..5), prop::collection::vec(ship, 1..5), any::<bool>())
            .prop_map(|(ms, ss, coop)| {
                let missiles = ms
                    .into_iter()
                    .enumerate()
                    .map(|(k, (ang, dist, rate, speed))| crate::scenario::MissileThreat {
                        id: format!("T{k}"),
                        launch_pos: Point2::new(dist * ang.cos(), dist * ang.sin()),
                        launch_rate: rate,
                        speed,
                    })
                    .collect::<Vec<_>>();
                let n = missiles.len();
                let ships = ss
                    .into_iter()
                    .enumerate()
                    .map(|(k, (x, y, r, mu, m))| crate::scenario::Ship {
                        id: format!("C{k}"),
                        pos: Point2::new(x, y),
                        radius: r,
                        intercept_rate: mu,
                        fire_units: m,
                    })
                    .collect::<Vec<_>>();
                let mode = if coop || ships.len() != n {
                    crate::scenario::ModeSpec::Cooperative
                } else {
                    crate::scenario::ModeSpec::Independent(None)
                };
                Scenario::new(Point2::ORIGIN, missiles, ships, mode).unwrap()
            })
    }

    proptest! {
        #[test]
        fn rate_conservation_and_deadlines(s in random_scenario()) {
            let a = compute_assignment(&s);
            for (i, m) in s.missiles().iter().enumerate() {
                let row_sum: f64 = a.lambda().row(i).iter().sum();
                if a.uncovered().contains(&i) {
                    prop_assert_eq!(row_sum, 0.0);
                } else {
                    prop_assert!((row_sum - m.launch_rate).abs() <= 1e-12 * m.launch_rate);
                }
                for j in 0..s.n_ships() {
                    let (l, lam, d) = (a.line()[(i, j)], a.lambda()[(i, j)], a.deadline()[(i, j)]);
                    prop_assert!(l >= 0.0 && lam >= 0.0 && d >= 0.0);
                    if lam > 0.0 {
                        prop_assert!(l > 0.0);
                        prop_assert_eq!(d, l / m.speed);
                    }
                }
            }
        }

        #[test]
        fn rate_scaling_equivariance(s in random_scenario()) {
            let doubled = s.edited(|ms, _| {
                for m in ms.iter_mut() { m.launch_rate *= 2.0; }
                Ok(())
            }).unwrap();
            let a = compute_assignment(&s);
            let b = compute_assignment(&doubled);
            prop_assert_eq!(a.line(), b.line());
            prop_assert_eq!(a.deadline(), b.deadline());
            for ((_, x), (_, y)) in a.lambda().iter_indexed().zip(b.lambda().iter_indexed()) {
                prop_assert_eq!(2.0 * x, *y);
            }
        }

        #[test]
        fn rotation_invariance(s in random_scenario(), angle in -7.0..7.0f64) {
            let a = compute_assignment(&s);
            let b = compute_assignment(&s.rotated(angle));
            for ((_, x), (_, y)) in a.line().iter_indexed().zip(b.line().iter_indexed()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
            for ((_, x), (_, y)) in a.lambda().iter_indexed().zip(b.lambda().iter_indexed()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }
}
