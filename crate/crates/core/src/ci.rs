//! Contour-integral baseline: zero counting by the argument principle,
//! recursive quadrisection down to at most four zeros per box, power sums by
//! the trapezoidal rule and Newton's identities for the seed polynomial.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::wrapped_diff;
use crate::error::{Error, Result};
use crate::scatter::Analytic;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiConfig {
    pub max_per_box: usize,
    /// Upper limit on nodes per contour, doublings included.
    pub node_cap: usize,
    /// Left edge is `-left_factor * R`.
    pub left_factor: f64,
    /// Resample at double density when the raw winding is this far from an integer.
    pub winding_guard: f64,
    /// Resample when one argument increment exceeds this.
    pub max_increment: f64,
    pub max_depth: usize,
}

impl Default for CiConfig {
    fn default() -> Self {
        CiConfig {
            max_per_box: 4,
            node_cap: 50_000,
            left_factor: 1.1,
            winding_guard: 0.2,
            max_increment: 0.5 * PI,
            max_depth: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourBox {
    pub left: f64,
    pub right: f64,
    pub bottom: f64,
    pub top: f64,
}

impl ContourBox {
    pub fn new(left: f64, right: f64, bottom: f64, top: f64) -> Result<Self> {
        if !(left < right && bottom < top) || ![left, right, bottom, top].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!("degenerate contour box [{left}, {right}] x [{bottom}, {top}]")));
        }
        Ok(ContourBox { left, right, bottom, top })
    }

    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.left, self.bottom),
            Complex64::new(self.right, self.bottom),
            Complex64::new(self.right, self.top),
            Complex64::new(self.left, self.top),
        ]
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * ((self.right - self.left) + (self.top - self.bottom))
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.left - slack && z.re <= self.right + slack && z.im >= self.bottom - slack && z.im <= self.top + slack
    }

    /// Counterclockwise nodes at most `step` apart, closed (last equals first).
    pub fn nodes(&self, step: f64) -> Vec<Complex64> {
        let c = self.corners();
        let mut out = Vec::new();
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            let n = (((b - a).norm() / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            out.extend((0..n).map(|j| a + (b - a) * (j as f64 / n as f64)));
        }
        out.push(c[0]);
        out
    }

    /// Quadrisection at `(x, y)`; children in the order SW, SE, NE, NW.
    pub fn split_at(&self, x: f64, y: f64) -> [ContourBox; 4] {
        let b = |l, r, lo, hi| ContourBox { left: l, right: r, bottom: lo, top: hi };
        [
            b(self.left, x, self.bottom, y),
            b(x, self.right, self.bottom, y),
            b(x, self.right, y, self.top),
            b(self.left, x, y, self.top),
        ]
    }
}

/// Values of `f` on a closed contour.
#[derive(Debug, Clone)]
pub struct ContourSamples {
    pub nodes: Vec<Complex64>,
    pub values: Vec<Complex64>,
}

impl ContourSamples {
    pub fn evaluate<A: Analytic + ?Sized>(evaluator: &A, nodes: Vec<Complex64>) -> Result<Self> {
        // The closing node repeats the first; evaluate it once.
        let open = &nodes[..nodes.len() - 1];
        let mut values = open.par_iter().map(|&z| evaluator.value(z)).collect::<Result<Vec<_>>>()?;
        values.push(values[0]);
        Ok(ContourSamples { nodes, values })
    }

    fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| wrapped_diff(w[1].arg(), w[0].arg()))
    }

    pub fn raw_winding(&self) -> f64 {
        self.increments().sum::<f64>() / (2.0 * PI)
    }

    pub fn max_increment(&self) -> f64 {
        self.increments().map(f64::abs).fold(0.0, f64::max)
    }

    /// `s_p = (1/2 pi i) sum zeta_mid^p (log a_{j+1} - log a_j)` for `p = 1..=count`.
    pub fn power_sums(&self, count: usize) -> Vec<Complex64> {
        let mut sums = vec![Complex64::new(0.0, 0.0); count];
        for (z, v) in self.nodes.windows(2).zip(self.values.windows(2)) {
            let mid = (z[0] + z[1]) * 0.5;
            let dlog = Complex64::new((v[1].norm() / v[0].norm()).ln(), wrapped_diff(v[1].arg(), v[0].arg()));
            let mut pw = mid;
            for s in sums.iter_mut() {
                *s += pw * dlog;
                pw *= mid;
            }
        }
        let scale = Complex64::new(0.0, 2.0 * PI).inv();
        sums.iter().map(|s| s * scale).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Winding {
    pub count: usize,
    pub raw: f64,
    pub samples: ContourSamples,
    pub step: f64,
}

/// Argument-principle zero count on `bx`, doubling the density until the raw
/// winding is within the guard of an integer and no increment is too large.
pub fn winding_count<A: Analytic + ?Sized>(bx: &ContourBox, step: f64, evaluator: &A, cfg: &CiConfig) -> Result<Winding> {
    let mut step = step;
    loop {
        let nodes = bx.nodes(step);
        if nodes.len() > cfg.node_cap {
            return Err(Error::UndersampledContour(format!(
                "box {bx:?} needs more than {} nodes",
                cfg.node_cap
            )));
        }
        let samples = ContourSamples::evaluate(evaluator, nodes)?;
        let raw = samples.raw_winding();
        if (raw - raw.round()).abs() <= cfg.winding_guard && samples.max_increment() <= cfg.max_increment {
            if raw.round() < 0.0 {
                return Err(Error::UndersampledContour(format!("negative winding {raw} on {bx:?}")));
            }
            return Ok(Winding { count: raw.round() as usize, raw, samples, step });
        }
        log::debug!("resampling {bx:?}: raw winding {raw}, step {step}");
        step *= 0.5;
    }
}

/// Elementary symmetric polynomials from power sums; returns the monic
/// coefficients `[1, c_1, ..., c_n]` of `z^n + c_1 z^{n-1} + ... + c_n`.
pub fn newton_identities(power_sums: &[Complex64]) -> Vec<Complex64> {
    let n = power_sums.len();
    let mut e = vec![Complex64::new(1.0, 0.0)];
    for k in 1..=n {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * power_sums[i - 1];
        }
        e.push(acc / k as f64);
    }
    e.iter().enumerate().map(|(k, v)| if k % 2 == 1 { -v } else { *v }).collect()
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Roots of a monic polynomial (coefficients highest first) by Durand-Kerner.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    match n {
        0 => return vec![],
        1 => return vec![-coeffs[1]],
        _ => {}
    }
    let radius = 1.0 + coeffs[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::from_polar(1.0, 0.4);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius * 0.5).collect();
    for _ in 0..2000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let delta = horner(coeffs, roots[i]) / den;
            roots[i] -= delta;
            moved = moved.max(delta.norm());
        }
        if moved <= 1e-15 * radius {
            break;
        }
    }
    roots
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxStat {
    pub bx: ContourBox,
    pub depth: usize,
    pub nodes: usize,
    pub zero_count: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CiResult {
    pub seeds: Vec<Complex64>,
    pub boxes: Vec<BoxStat>,
}

const JITTER: [(f64, f64); 5] = [(0.0, 0.0), (0.037, -0.029), (-0.053, 0.041), (0.071, 0.063), (-0.089, -0.077)];

fn seeds_for(w: &Winding, bx: &ContourBox) -> Option<Vec<Complex64>> {
    let sums = w.samples.power_sums(w.count);
    let roots = polynomial_roots(&newton_identities(&sums));
    let slack = 0.05 * (bx.right - bx.left).max(bx.top - bx.bottom);
    roots.iter().all(|z| z.is_finite() && bx.contains(*z, slack)).then_some(roots)
}

fn solve_box<A: Analytic + ?Sized>(
    bx: &ContourBox,
    winding: Winding,
    step: f64,
    depth: usize,
    evaluator: &A,
    cfg: &CiConfig,
    out: &mut CiResult,
) -> Result<()> {
    out.boxes.push(BoxStat { bx: *bx, depth, nodes: winding.samples.nodes.len() - 1, zero_count: winding.count });
    if winding.count == 0 {
        return Ok(());
    }
    if winding.count <= cfg.max_per_box {
        if let Some(seeds) = seeds_for(&winding, bx) {
            out.seeds.extend(seeds);
            return Ok(());
        }
        if depth >= cfg.max_depth {
            return Err(Error::UndersampledContour(format!("seeds escape leaf {bx:?}")));
        }
        log::debug!("seeds escaped {bx:?}; subdividing");
    }
    if depth >= cfg.max_depth {
        return Err(Error::UndersampledContour(format!("recursion limit at {bx:?}")));
    }
    let (cx, cy) = (0.5 * (bx.left + bx.right), 0.5 * (bx.bottom + bx.top));
    let (w, h) = (bx.right - bx.left, bx.top - bx.bottom);
    let mut last_err = None;
    for (jx, jy) in JITTER {
        let children = bx.split_at(cx + jx * w, cy + jy * h);
        let windings: Result<Vec<Winding>> = children.iter().map(|c| winding_count(c, step, evaluator, cfg)).collect();
        match windings {
            Ok(ws) if ws.iter().map(|w| w.count).sum::<usize>() == winding.count => {
                let mut local = CiResult::default();
                let solved: Result<()> = children
                    .iter()
                    .zip(ws)
                    .try_for_each(|(c, w)| solve_box(c, w, step, depth + 1, evaluator, cfg, &mut local));
                match solved {
                    Ok(()) => {
                        out.seeds.extend(local.seeds);
                        out.boxes.extend(local.boxes);
                        return Ok(());
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            Ok(ws) => {
                log::debug!("children of {bx:?} count {:?}, parent {}; jittering", ws.iter().map(|w| w.count).collect::<Vec<_>>(), winding.count);
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::UndersampledContour(format!("no lossless partition of {bx:?}"))))
}

/// Recursive quadrisection of `bx` down to boxes with at most
/// `cfg.max_per_box` zeros; returns polynomial-root seeds for every zero.
/// Child boxes keep the node spacing `step` and evaluate their own contours.
pub fn subdivide_and_solve<A: Analytic + ?Sized>(bx: &ContourBox, step: f64, evaluator: &A, cfg: &CiConfig) -> Result<CiResult> {
    let winding = winding_count(bx, step, evaluator, cfg)?;
    let mut out = CiResult::default();
    solve_box(bx, winding, step, 0, evaluator, cfg, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scatter::FnAnalytic;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(zeros: Vec<Complex64>) -> impl Fn(Complex64) -> Complex64 + Sync {
        move |z| zeros.iter().map(|&w| z - w).product()
    }

    #[test]
    fn counts_one_of_two_zeros() {
        let f = FnAnalytic::new(poly(vec![c(0.0, 1.0), c(0.0, 2.0)]));
        let bx = ContourBox::new(-1.0, 1.0, 0.5, 1.5).unwrap();
        let w = winding_count(&bx, 0.05, &f, &CiConfig::default()).unwrap();
        assert_eq!(w.count, 1);
    }

    #[test]
    fn empty_far_box() {
        let f = FnAnalytic::new(poly(vec![c(0.0, 1.0)]));
        let bx = ContourBox::new(5.0, 6.0, 5.0, 6.0).unwrap();
        assert_eq!(winding_count(&bx, 0.05, &f, &CiConfig::default()).unwrap().count, 0);
    }

    #[test]
    fn double_zero_power_sums_and_polynomial() {
        let f = FnAnalytic::new(poly(vec![c(0.0, 1.0), c(0.0, 1.0)]));
        let bx = ContourBox::new(-1.0, 1.0, 0.2, 2.0).unwrap();
        let w = winding_count(&bx, 0.002, &f, &CiConfig::default()).unwrap();
        assert_eq!(w.count, 2);
        let s = w.samples.power_sums(2);
        assert!((s[0] - c(0.0, 2.0)).norm() < 1e-5, "{s:?}");
        assert!((s[1] - c(-2.0, 0.0)).norm() < 1e-5, "{s:?}");
        let exact = newton_identities(&[c(0.0, 2.0), c(-2.0, 0.0)]);
        assert_eq!(exact, vec![c(1.0, 0.0), c(0.0, -2.0), c(-1.0, 0.0)]);
    }

    #[test]
    fn single_zero_seed_is_first_power_sum() {
        let coeffs = newton_identities(&[c(0.3, 0.7)]);
        assert_eq!(polynomial_roots(&coeffs), vec![c(0.3, 0.7)]);
    }

    #[test]
    fn quartic_roots_recovered() {
        let zeros = [c(0.0, 0.83), c(0.0, 1.83), c(0.0, 2.83), c(0.0, 3.83)];
        let sums: Vec<Complex64> = (1..=4).map(|p| zeros.iter().map(|z| z.powu(p)).sum()).collect();
        let roots = polynomial_roots(&newton_identities(&sums));
        for z in zeros {
            assert!(roots.iter().any(|r| (r - z).norm() < 1e-10), "{roots:?}");
        }
    }

    #[test]
    fn quadrisection_is_lossless() {
        let f = FnAnalytic::new(poly(vec![c(-0.5, 0.4), c(0.3, 0.6), c(0.61, 1.3), c(-0.2, 1.7), c(0.0, 0.9)]));
        let cfg = CiConfig::default();
        let bx = ContourBox::new(-1.0, 1.0, 0.0, 2.0).unwrap();
        let parent = winding_count(&bx, 0.02, &f, &cfg).unwrap().count;
        let sum: usize = bx
            .split_at(0.013, 1.027)
            .iter()
            .map(|c| winding_count(c, 0.02, &f, &cfg).unwrap().count)
            .sum();
        assert_eq!(parent, 5);
        assert_eq!(sum, parent);
    }

    #[test]
    fn power_sum_error_is_second_order() {
        let f = FnAnalytic::new(poly(vec![c(0.0, 1.0), c(0.0, 2.0)]));
        let bx = ContourBox::new(-0.7, 1.3, 0.3, 2.4).unwrap();
        let err = |step: f64| {
            let w = winding_count(&bx, step, &f, &CiConfig::default()).unwrap();
            let s = w.samples.power_sums(3);
            ((s[0] - c(0.0, 3.0)).norm(), (s[1] - c(-5.0, 0.0)).norm(), (s[2] - c(0.0, -9.0)).norm())
        };
        let (a, b) = (err(0.1), err(0.05));
        for (e1, e2) in [(a.0, b.0), (a.1, b.1), (a.2, b.2)] {
            let order = (e1 / e2).log2();
            assert!(order >= 1.8, "{e1} {e2} {order}");
        }
    }

    #[test]
    fn subdivision_finds_every_zero() {
        let zeros = vec![c(-0.7, 0.3), c(-0.2, 0.5), c(0.4, 0.35), c(0.8, 1.1), c(0.1, 1.4), c(-0.5, 1.6)];
        let f = FnAnalytic::new(poly(zeros.clone()));
        let bx = ContourBox::new(-1.1, 1.0, 0.0, 2.0).unwrap();
        let res = subdivide_and_solve(&bx, 0.01, &f, &CiConfig::default()).unwrap();
        assert_eq!(res.seeds.len(), 6);
        for z in zeros {
            assert!(res.seeds.iter().any(|s| (s - z).norm() < 1e-3), "{z} not in {:?}", res.seeds);
        }
        assert!(res.boxes.iter().all(|b| b.depth == 0 || b.zero_count <= 4));
        assert!(res.boxes.len() > 1);
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(ContourBox::new(1.0, 1.0, 0.0, 1.0).is_err());
    }
}
