//! Length of a missile trajectory inside a ship's interception disc.

use thiserror::Error;

use crate::scenario::Point2;

/// Relative tolerance on the line/circle discriminant below which the line is
/// treated as tangent (zero chord).
const TANGENCY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate trajectory: launch point equals target {0}")]
    DegenerateSegment(Point2),
    #[error("interception radius must be finite and > 0, got {0}")]
    InvalidRadius(f64),
}

/// Portion of the launch-to-target segment lying inside a closed disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordResult {
    /// `line_ij`, meters.
    pub length: f64,
    /// First point of the segment inside the disc, in travel order.
    pub entry_point: Option<Point2>,
    /// Last point of the segment inside the disc; the target itself when the
    /// target lies inside.
    pub exit_point: Option<Point2>,
}

impl ChordResult {
    pub const EMPTY: ChordResult = ChordResult {
        length: 0.0,
        entry_point: None,
        exit_point: None,
    };
}

/// Intersects the closed segment `p_launch -> p_target` with the disc of
/// `radius` around `center`.
///
/// Tangent contacts and contacts reduced to a single endpoint have zero
/// length and report no points.
pub fn segment_disc_intersection(
    p_launch: Point2,
    p_target: Point2,
    center: Point2,
    radius: f64,
) -> Result<ChordResult, GeometryError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(GeometryError::InvalidRadius(radius));
    }
    let d = p_target - p_launch;
    let a = d.dot(d);
    if a == 0.0 {
        return Err(GeometryError::DegenerateSegment(p_target));
    }
    // |f + t d|^2 = r^2 with f = p_launch - center, t in [0, 1]
    let f = p_launch - center;
    let b = 2.0 * f.dot(d);
    let c = f.dot(f) - radius * radius;
    let disc = b * b - 4.0 * a * c;
    let scale = (b * b).max((4.0 * a * c).abs());
    if disc <= TANGENCY_TOLERANCE * scale {
        return Ok(ChordResult::EMPTY);
    }
    let sq = disc.sqrt();
    // Citardauq form avoids cancellation in the smaller root.
    let q = -0.5 * (b + b.signum() * sq);
    let (mut t0, mut t1) = if q == 0.0 {
        let h = sq / (2.0 * a);
        (-h, h)
    } else {
        (q / a, c / q)
    };
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    let t_in = t0.max(0.0);
    let t_out = t1.min(1.0);
    if t_out <= t_in {
        return Ok(ChordResult::EMPTY);
    }
    let at = |t: f64| {
        if t == 0.0 {
            p_launch
        } else if t == 1.0 {
            p_target
        } else {
            p_launch + d.scale(t)
        }
    };
    Ok(ChordResult {
        length: (t_out - t_in) * a.sqrt(),
        entry_point: Some(at(t_in)),
        exit_point: Some(at(t_out)),
    })
}
