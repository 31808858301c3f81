//! Marching along the discontinuity curves of `arg a(zeta)` from boundary
//! jumps to the zeros they end on.
//!
//! A trajectory keeps a straddling pair `(l, r)` a distance `h` apart with the
//! jump between them. Each step probes the square ahead of the pair: the right
//! edge first, then the far edge, then the left edge. When none of them carries
//! the jump, the zero lies inside the square and its center is returned.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{is_jump, min_pairwise_distance, principal_arg, BoundaryJump, Side};
use crate::domain::SearchDomain;
use crate::error::Result;
use crate::scatter::Analytic;

/// `e^{i k pi / 2}` without rounding.
fn unit(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `h = C_h min |g_k - g_j|`, or `C_h min(R - L, U)` with fewer than two jumps.
pub fn tracking_step_size(jumps: &[BoundaryJump], ch: f64, domain: &SearchDomain) -> f64 {
    match min_pairwise_distance(jumps.iter().map(|j| j.location)) {
        Some(d) if d > 0.0 => ch * d,
        _ => ch * domain.width().min(domain.top),
    }
}

/// Default cap on accepted steps: `10 * perimeter / h`.
pub fn default_step_limit(domain: &SearchDomain, h: f64) -> usize {
    (10.0 * domain.perimeter() / h).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "side")]
pub enum TrajectoryExit {
    Converged,
    /// A probe fell outside `G` across the given side. Leaving through the top
    /// suggests the upper bound `U` is too small.
    LeftDomain(Side),
    StepLimit,
    /// The initial pair did not satisfy the jump criterion.
    StraddleLost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub start: Complex64,
    pub side: Side,
    /// Center of the last square; meaningful when converged.
    pub terminal: Complex64,
    pub steps: usize,
    pub evaluations: usize,
    pub exit: TrajectoryExit,
    /// Midpoints of `(l, r)` after every accepted step, when requested.
    pub path: Vec<Complex64>,
}

impl TrajectoryResult {
    pub fn converged(&self) -> bool {
        self.exit == TrajectoryExit::Converged
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrackOptions {
    pub threshold: f64,
    pub step_limit: usize,
    pub record_path: bool,
}

fn exit_side(domain: &SearchDomain, z: Complex64) -> Side {
    let over = [
        (Side::Bottom, -z.im),
        (Side::Right, z.re - domain.right),
        (Side::Top, z.im - domain.top),
        (Side::Left, domain.left - z.re),
    ];
    over.iter().cloned().fold(over[0], |best, c| if c.1 > best.1 { c } else { best }).0
}

/// Moves the jump location along its side so that `l` and `r` stay on the side.
fn clamp_to_side(jump: &BoundaryJump, h: f64, domain: &SearchDomain) -> Complex64 {
    let (a, b) = jump.side.endpoints(domain);
    let len = (b - a).norm();
    let dir = (b - a) / len;
    let s = ((jump.location - a) * dir.conj()).re;
    let s = if len <= h { 0.5 * len } else { s.clamp(0.5 * h, len - 0.5 * h) };
    a + dir * s
}

/// Follows one jump until its trajectory terminates.
pub fn track<A: Analytic + ?Sized>(
    jump: &BoundaryJump,
    h: f64,
    evaluator: &A,
    domain: &SearchDomain,
    opts: &TrackOptions,
) -> Result<TrajectoryResult> {
    let mut k = jump.side.quadrant() as i64;
    let g = clamp_to_side(jump, h, domain);
    let mut l = g - unit(k) * (0.5 * h);
    let mut r = g + unit(k) * (0.5 * h);
    let arg = |z: Complex64| evaluator.value(z).map(principal_arg);
    let mut arg_l = arg(l)?;
    let mut arg_r = arg(r)?;
    let mut evaluations = 2;
    let mut steps = 0;
    let mut path = Vec::new();
    let thr = opts.threshold;

    let finish = |terminal, steps, evaluations, exit, path| TrajectoryResult {
        start: jump.location,
        side: jump.side,
        terminal,
        steps,
        evaluations,
        exit,
        path,
    };

    if !is_jump(arg_l, arg_r, thr) {
        return Ok(finish((l + r) * 0.5, 0, evaluations, TrajectoryExit::StraddleLost, path));
    }

    loop {
        if steps >= opts.step_limit {
            return Ok(finish((l + r) * 0.5, steps, evaluations, TrajectoryExit::StepLimit, path));
        }
        let shift = unit(k + 1) * h;
        let r_star = r + shift;
        let l_star = l + shift;
        for z in [r_star, l_star] {
            if !domain.contains(z) {
                let exit = TrajectoryExit::LeftDomain(exit_side(domain, z));
                return Ok(finish((l + r) * 0.5, steps, evaluations, exit, path));
            }
        }

        let arg_rs = arg(r_star)?;
        evaluations += 1;
        if is_jump(arg_r, arg_rs, thr) {
            (l, arg_l) = (r_star, arg_rs);
            k -= 1;
        } else {
            let arg_ls = arg(l_star)?;
            evaluations += 1;
            if is_jump(arg_ls, arg_rs, thr) {
                (l, arg_l, r, arg_r) = (l_star, arg_ls, r_star, arg_rs);
            } else if is_jump(arg_l, arg_ls, thr) {
                (r, arg_r) = (l_star, arg_ls);
                k += 1;
            } else {
                let terminal = (l + r + l_star + r_star) * 0.25;
                return Ok(finish(terminal, steps, evaluations, TrajectoryExit::Converged, path));
            }
        }
        steps += 1;
        debug_assert!(is_jump(arg_l, arg_r, thr));
        debug_assert!(((r - l).norm() - h).abs() <= 1e-9 * h.max(1.0));
        if opts.record_path {
            path.push((l + r) * 0.5);
        }
    }
}

/// Tracks every jump in parallel; results keep the order of `jumps`.
pub fn track_all<A: Analytic + ?Sized>(
    jumps: &[BoundaryJump],
    h: f64,
    evaluator: &A,
    domain: &SearchDomain,
    opts: &TrackOptions,
) -> Result<Vec<TrajectoryResult>> {
    jumps.par_iter().map(|j| track(j, h, evaluator, domain, opts)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub center: Complex64,
    pub multiplicity: usize,
}

/// Clusters converged terminals lying within `2 h` of each other (single
/// linkage); the cluster size is the multiplicity. Sorted by `(Im desc, Re asc)`.
pub fn merge_multiplicities(results: &[TrajectoryResult], h: f64) -> Vec<Candidate> {
    let pts: Vec<Complex64> = results.iter().filter(|r| r.converged()).map(|r| r.terminal).collect();
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if (pts[i] - pts[j]).norm() <= 2.0 * h {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    let mut slot = vec![usize::MAX; pts.len()];
    for (i, &p) in pts.iter().enumerate() {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = clusters.len();
            clusters.push((Complex64::new(0.0, 0.0), 0));
        }
        let c = &mut clusters[slot[r]];
        c.0 += p;
        c.1 += 1;
    }
    let mut out: Vec<Candidate> = clusters
        .into_iter()
        .map(|(sum, n)| Candidate { center: sum / n as f64, multiplicity: n })
        .collect();
    sort_spectrum(&mut out, |c| c.center);
    out
}

/// Orders by imaginary part descending, then real part ascending.
pub fn sort_spectrum<T>(items: &mut [T], key: impl Fn(&T) -> Complex64) {
    items.sort_by(|a, b| {
        let (za, zb) = (key(a), key(b));
        zb.im.total_cmp(&za.im).then(za.re.total_cmp(&zb.re))
    });
}
