//! Jumps of the principal argument of `a(zeta)` along the boundary of the
//! search rectangle.
//!
//! The contour runs counterclockwise: bottom left to right, right side up,
//! top right to left, left side down. A pair of neighbouring samples carries
//! a jump when their arguments have opposite signs and differ by more than
//! the jump threshold (1.3 pi by default).

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::SearchDomain;
use crate::error::{Error, Result};
use crate::scatter::Analytic;

pub const DEFAULT_JUMP_THRESHOLD: f64 = 1.3 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Quadrant index `k` of the orientation `phi = k pi / 2`.
    pub fn quadrant(self) -> u8 {
        match self {
            Side::Bottom => 0,
            Side::Right => 1,
            Side::Top => 2,
            Side::Left => 3,
        }
    }

    pub fn orientation(self) -> f64 {
        self.quadrant() as f64 * FRAC_PI_2
    }

    /// Start and end corner in contour order.
    pub fn endpoints(self, d: &SearchDomain) -> (Complex64, Complex64) {
        let bl = Complex64::new(d.left, 0.0);
        let br = Complex64::new(d.right, 0.0);
        let tr = Complex64::new(d.right, d.top);
        let tl = Complex64::new(d.left, d.top);
        match self {
            Side::Bottom => (bl, br),
            Side::Right => (br, tr),
            Side::Top => (tr, tl),
            Side::Left => (tl, bl),
        }
    }
}

/// Principal argument in `(-pi, pi]`; `-pi` is snapped to `pi`.
pub fn principal_arg(a: Complex64) -> f64 {
    let arg = a.arg();
    if arg <= -PI {
        PI
    } else {
        arg
    }
}

/// Jump criterion between two principal arguments.
pub fn is_jump(arg1: f64, arg2: f64, threshold: f64) -> bool {
    arg1 * arg2 < 0.0 && (arg1 - arg2).abs() > threshold
}

/// Difference of two principal arguments reduced to `(-pi, pi]`.
pub fn wrapped_diff(to: f64, from: f64) -> f64 {
    let mut d = to - from;
    while d > PI {
        d -= 2.0 * PI;
    }
    while d <= -PI {
        d += 2.0 * PI;
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub z: Complex64,
    pub arg: f64,
    /// Side of the segment that ends at this node.
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryJump {
    pub location: Complex64,
    pub side: Side,
    pub start_eligible: bool,
    /// Bracketing nodes in contour order and their arguments.
    pub bracket: (Complex64, Complex64),
    pub neighbor_args: (f64, f64),
    /// Index `j` of the later bracketing node in the sample list it was detected on.
    pub index: usize,
}

impl BoundaryJump {
    pub fn orientation(&self) -> f64 {
        self.side.orientation()
    }

    pub fn width(&self) -> f64 {
        (self.bracket.1 - self.bracket.0).norm()
    }
}

/// Evenly spaced nodes on one side, at most `step` apart, including both corners.
pub fn side_nodes(side: Side, domain: &SearchDomain, step: f64) -> Vec<Complex64> {
    let (a, b) = side.endpoints(domain);
    let len = (b - a).norm();
    let n = ((len / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (0..=n).map(|k| a + (b - a) * (k as f64 / n as f64)).collect()
}

/// Closed node list over `sides`, sharing corners; the first node is repeated at
/// the end when the full contour is requested.
pub fn contour_nodes(domain: &SearchDomain, sides: &[Side]) -> Vec<(Complex64, Side)> {
    let mut nodes: Vec<(Complex64, Side)> = Vec::new();
    for &side in sides {
        let step = if side == Side::Bottom { domain.step_real } else { domain.step_other };
        let pts = side_nodes(side, domain, step);
        let skip = usize::from(!nodes.is_empty());
        nodes.extend(pts.into_iter().skip(skip).map(|z| (z, side)));
    }
    nodes
}

/// Evaluates `arg a` on the given nodes in parallel.
pub fn sample_nodes<A: Analytic + ?Sized>(evaluator: &A, nodes: &[(Complex64, Side)]) -> Result<Vec<BoundarySample>> {
    nodes
        .par_iter()
        .map(|&(z, side)| Ok(BoundarySample { z, arg: principal_arg(evaluator.value(z)?), side }))
        .collect()
}

/// Jump detection over an ordered sample list.
pub fn detect_jumps(samples: &[BoundarySample], threshold: f64) -> Result<Vec<BoundaryJump>> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    Ok(samples
        .windows(2)
        .enumerate()
        .filter(|(_, w)| is_jump(w[0].arg, w[1].arg, threshold))
        .map(|(j, w)| BoundaryJump {
            location: (w[0].z + w[1].z) * 0.5,
            side: w[1].side,
            start_eligible: false,
            bracket: (w[0].z, w[1].z),
            neighbor_args: (w[0].arg, w[1].arg),
            index: j + 1,
        })
        .collect())
}

/// Bisects the jump bracket until its width is at most `target_width`.
pub fn refine_jump<A: Analytic + ?Sized>(
    jump: &BoundaryJump,
    evaluator: &A,
    target_width: f64,
    threshold: f64,
) -> Result<BoundaryJump> {
    let (mut p, mut q) = jump.bracket;
    let (mut arg_p, mut arg_q) = jump.neighbor_args;
    while (q - p).norm() > target_width {
        let mid = (p + q) * 0.5;
        let arg_m = principal_arg(evaluator.value(mid)?);
        if is_jump(arg_p, arg_m, threshold) {
            q = mid;
            arg_q = arg_m;
        } else if is_jump(arg_m, arg_q, threshold) {
            p = mid;
            arg_p = arg_m;
        } else {
            return Err(Error::JumpLost(mid));
        }
    }
    Ok(BoundaryJump {
        location: (p + q) * 0.5,
        bracket: (p, q),
        neighbor_args: (arg_p, arg_q),
        ..*jump
    })
}

/// Marks jumps whose one-sided slopes of `arg a` along the contour are positive
/// on both sides. `closed` treats the sample list as a ring whose last node
/// repeats the first.
pub fn filter_starts(jumps: &[BoundaryJump], samples: &[BoundarySample], closed: bool) -> Vec<BoundaryJump> {
    let n = samples.len();
    let ring = if closed { n - 1 } else { n };
    let at = |i: isize| -> Option<f64> {
        if closed {
            Some(samples[i.rem_euclid(ring as isize) as usize].arg)
        } else if i >= 0 && (i as usize) < n {
            Some(samples[i as usize].arg)
        } else {
            None
        }
    };
    jumps
        .iter()
        .map(|jump| {
            let j = jump.index as isize;
            let before = at(j - 1).zip(at(j - 2)).map(|(b, a)| wrapped_diff(b, a));
            let after = at(j + 1).zip(at(j)).map(|(b, a)| wrapped_diff(b, a));
            let eligible = matches!((before, after), (Some(l), Some(r)) if l > 0.0 && r > 0.0);
            BoundaryJump { start_eligible: eligible, ..*jump }
        })
        .collect()
}

/// Step for the non-real sides: `min(0.5 min |g_k - g_j|, 0.01 (U + R - L))`
/// over the real-axis jumps; the second term alone when fewer than two exist.
pub fn boundary_steps(real_axis_jumps: &[BoundaryJump], domain: &SearchDomain) -> f64 {
    let cap = 0.01 * (domain.top + domain.width());
    match min_pairwise_distance(real_axis_jumps.iter().map(|j| j.location)) {
        Some(d) => (0.5 * d).min(cap),
        None => cap,
    }
}

pub fn min_pairwise_distance(points: impl Iterator<Item = Complex64>) -> Option<f64> {
    let pts: Vec<Complex64> = points.collect();
    let mut best: Option<f64> = None;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i] - pts[j]).norm();
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
    }
    best
}

/// Total argument change along a closed sample list divided by `2 pi`.
pub fn winding_of_samples(samples: &[BoundarySample]) -> f64 {
    samples.windows(2).map(|w| wrapped_diff(w[1].arg, w[0].arg)).sum::<f64>() / (2.0 * PI)
}
