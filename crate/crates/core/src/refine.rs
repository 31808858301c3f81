//! Polishing of tracker candidates with Muller's or Newton's method.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::SearchDomain;
use crate::error::{Error, Result};
use crate::scatter::Analytic;
use crate::tracker::Candidate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineMethod {
    #[default]
    Muller,
    Newton,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub method: RefineMethod,
    /// Stop once the step is shorter than this.
    pub tolerance: f64,
    /// `None` iterates until the step criterion is met.
    pub max_iterations: Option<usize>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { method: RefineMethod::Muller, tolerance: 1e-14, max_iterations: Some(100) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub candidate: Complex64,
    pub value: Complex64,
    /// `|a(value)|`.
    pub residual: f64,
    pub multiplicity: usize,
    pub iterations: usize,
    /// Whether the step criterion was met before the iteration cap.
    pub converged: bool,
    /// Iterates in order, starting points included.
    pub history: Vec<Complex64>,
}

struct Best {
    z: Complex64,
    modulus: f64,
}

impl Best {
    fn offer(&mut self, z: Complex64, f: Complex64) {
        if f.norm() < self.modulus {
            self.z = z;
            self.modulus = f.norm();
        }
    }
}

fn check_escape(domain: Option<&SearchDomain>, start: Complex64, z: Complex64) -> Result<()> {
    match domain {
        Some(d) if !z.is_finite() || d.distance(z) > d.width().max(d.top) => {
            Err(Error::Divergence { start, last: z })
        }
        None if !z.is_finite() => Err(Error::Divergence { start, last: z }),
        _ => Ok(()),
    }
}

/// Muller iteration from the triple `center`, `center + h/4`, `center + i h/4`.
///
/// Each iteration costs one evaluation. The returned point never has a larger
/// `|f|` than `center`; when no iterate improves on it, `center` comes back.
pub fn muller_polish<A: Analytic + ?Sized>(
    center: Complex64,
    h: f64,
    evaluator: &A,
    cfg: &RefineConfig,
    domain: Option<&SearchDomain>,
) -> Result<Refined> {
    let mut x = [center, center + 0.25 * h, center + Complex64::new(0.0, 0.25 * h)];
    let mut f = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        f[i] = evaluator.value(x[i])?;
    }
    let mut best = Best { z: center, modulus: f[0].norm() };
    for i in 1..3 {
        best.offer(x[i], f[i]);
    }
    let mut history = x.to_vec();
    let mut iterations = 0;
    let mut converged = f.iter().any(|v| v.norm() == 0.0);

    while !converged && cfg.max_iterations.is_none_or(|cap| iterations < cap) {
        let d01 = (f[1] - f[0]) / (x[1] - x[0]);
        let d12 = (f[2] - f[1]) / (x[2] - x[1]);
        let d02 = (f[2] - f[0]) / (x[2] - x[0]);
        let g = (d12 - d01) / (x[2] - x[0]);
        let w = d12 + d02 - d01;
        let root = (w * w - 4.0 * f[2] * g).sqrt();
        let (p, m) = (w + root, w - root);
        let den = if p.norm() >= m.norm() { p } else { m };
        if den.norm() == 0.0 || !den.is_finite() {
            return Err(Error::DegenerateStep(x[2]));
        }
        let step = -2.0 * f[2] / den;
        let next = x[2] + step;
        check_escape(domain, center, next)?;
        let f_next = evaluator.value(next)?;
        iterations += 1;
        history.push(next);
        best.offer(next, f_next);
        x = [x[1], x[2], next];
        f = [f[1], f[2], f_next];
        converged = step.norm() < cfg.tolerance || f_next.norm() == 0.0;
    }
    if !converged {
        log::debug!("muller from {center} hit the iteration cap; keeping best iterate");
    }
    Ok(Refined {
        candidate: center,
        value: best.z,
        residual: best.modulus,
        multiplicity: 1,
        iterations,
        converged,
        history,
    })
}

/// Newton iteration `x - m f / f'`; `m = 1` is the plain method.
pub fn newton_polish<A: Analytic + ?Sized>(
    candidate: Complex64,
    multiplicity: usize,
    evaluator: &A,
    cfg: &RefineConfig,
    domain: Option<&SearchDomain>,
) -> Result<Refined> {
    let m = multiplicity.max(1) as f64;
    let mut x = candidate;
    let mut best: Option<Best> = None;
    let mut history = vec![x];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let (f, df) = evaluator.value_and_derivative(x)?;
        iterations += 1;
        match best.as_mut() {
            Some(b) => b.offer(x, f),
            None => best = Some(Best { z: x, modulus: f.norm() }),
        }
        if f.norm() == 0.0 {
            converged = true;
            break;
        }
        if df.norm() == 0.0 || !df.is_finite() {
            return Err(Error::DegenerateStep(x));
        }
        let step = -m * f / df;
        if step.norm() < cfg.tolerance {
            converged = true;
            break;
        }
        if cfg.max_iterations.is_some_and(|cap| iterations >= cap) {
            break;
        }
        x += step;
        check_escape(domain, candidate, x)?;
        history.push(x);
    }
    let best = best.expect("at least one evaluation");
    Ok(Refined {
        candidate,
        value: best.z,
        residual: best.modulus,
        multiplicity: multiplicity.max(1),
        iterations,
        converged,
        history,
    })
}

/// Centroid of the `m` zeros inside the circle `|z - center| = radius`:
/// `s_1 / s_0` with `s_p = (1/2 pi i) ∮ z^p a'/a dz` by the trapezoidal rule on
/// `nodes` points. A discretized multiple zero splits into a tight cluster of
/// simple zeros whose centroid is far closer to the multiple zero than any
/// member. Returns `None` when the circle does not hold exactly `m` zeros.
pub fn cluster_centroid<A: Analytic + ?Sized>(
    center: Complex64,
    radius: f64,
    m: usize,
    nodes: usize,
    evaluator: &A,
) -> Result<Option<Complex64>> {
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let u = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / nodes as f64);
        let (f, df) = evaluator.value_and_derivative(center + u)?;
        let w = u * df / f;
        s0 += w;
        s1 += u * w;
    }
    s0 /= nodes as f64;
    s1 /= nodes as f64;
    if (s0 - m as f64).norm() > 0.1 {
        log::debug!("circle at {center} (r = {radius}) encloses {s0} zeros, expected {m}");
        return Ok(None);
    }
    Ok(Some(center + s1 / s0))
}

/// Replaces a refined point of a multiple candidate by its cluster centroid.
fn centroid_of_multiple<A: Analytic + ?Sized>(r: &mut Refined, radius: f64, evaluator: &A) -> Result<()> {
    if let Some(c) = cluster_centroid(r.value, radius, r.multiplicity, 64, evaluator)? {
        r.value = c;
        r.residual = evaluator.value(c)?.norm();
    } else {
        log::warn!("no clean cluster of {} zeros around {}; keeping the polished point", r.multiplicity, r.value);
    }
    Ok(())
}

/// Polishes all candidates in parallel with the configured method; order is kept.
/// Candidates of multiplicity `m > 1` are finished with [`cluster_centroid`] on
/// a circle of radius `h / 4`. `RefineMethod::None` returns the candidates with their `|f|`.
pub fn polish_all<A: Analytic + ?Sized>(
    candidates: &[Candidate],
    h: f64,
    evaluator: &A,
    cfg: &RefineConfig,
    domain: Option<&SearchDomain>,
) -> Result<Vec<Refined>> {
    candidates
        .par_iter()
        .map(|c| {
            let mut r = match cfg.method {
                RefineMethod::Muller => muller_polish(c.center, h, evaluator, cfg, domain)?,
                RefineMethod::Newton => newton_polish(c.center, c.multiplicity, evaluator, cfg, domain)?,
                RefineMethod::None => {
                    let f = evaluator.value(c.center)?;
                    Refined {
                        candidate: c.center,
                        value: c.center,
                        residual: f.norm(),
                        multiplicity: 1,
                        iterations: 0,
                        converged: true,
                        history: vec![c.center],
                    }
                }
            };
            r.multiplicity = c.multiplicity;
            if r.multiplicity > 1 && cfg.method != RefineMethod::None {
                centroid_of_multiple(&mut r, 0.25 * h, evaluator)?;
            }
            Ok(r)
        })
        .collect()
}

/// Order of convergence `ln e_{n+1} / ln e_n` at the last pair of iterates
/// whose distances to `limit` both lie in `(floor, 1e-2)`.
pub fn observed_order(history: &[Complex64], limit: Complex64, floor: f64) -> Option<f64> {
    let e: Vec<f64> = history.iter().map(|z| (z - limit).norm()).collect();
    e.windows(2)
        .rfind(|w| w.iter().all(|&x| x > floor && x < 1e-2))
        .map(|w| w[1].ln() / w[0].ln())
}
