//! End-to-end solvers: phase-jump tracking and the contour-integral baseline.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{
    boundary_steps, contour_nodes, detect_jumps, filter_starts, refine_jump, sample_nodes, side_nodes, BoundaryJump,
    BoundarySample, Side, DEFAULT_JUMP_THRESHOLD,
};
use crate::ci::{subdivide_and_solve, CiConfig, CiResult, ContourBox};
use crate::domain::{
    parseval_check, real_axis_bounds, upper_bound, ContinuousSamples, EnergyBalance, FourierMapping, SearchDomain,
    DEFAULT_CQ,
};
use crate::error::{Error, Result};
use crate::refine::{cluster_centroid, newton_polish, polish_all, RefineConfig, RefineMethod, Refined};
use crate::scatter::{AccurateA, AlVariant, Analytic, EvalCounter, EvalCounts, FastA, Scatterer};
use crate::signal::SampledSignal;
use crate::tracker::{
    default_step_limit, merge_multiplicities, sort_spectrum, track_all, tracking_step_size, Candidate, TrackOptions,
    TrajectoryExit, TrajectoryResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub cq: f64,
    pub fourier_mapping: FourierMapping,
    /// Zero-padding factor of the transform behind `[L, R]`.
    pub fft_padding: usize,
    /// Real-axis node spacing; `pi / (2 T)` when absent.
    pub real_axis_step: Option<f64>,
    /// Replaces the energy-based `U` when set.
    pub upper_bound: Option<f64>,
    pub ch: f64,
    /// Boundary jumps are bisected to `jump_width_factor * h`.
    pub jump_width_factor: f64,
    pub jump_threshold: f64,
    pub step_limit: Option<usize>,
    pub refine: RefineConfig,
    /// Refined values closer than this (relative to `max(1, |zeta|)`) are one eigenvalue.
    pub comparison_tolerance: f64,
    pub al_variant: AlVariant,
    pub ci: CiConfig,
    /// Newton-polished seeds of the contour-integral method closer than this form
    /// one multiple eigenvalue.
    pub ci_cluster_distance: f64,
    /// Relative Parseval residual above which the run is flagged.
    pub parseval_tolerance: f64,
    pub record_paths: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cq: DEFAULT_CQ,
            fourier_mapping: FourierMapping::HalfNegative,
            fft_padding: 1,
            real_axis_step: None,
            upper_bound: None,
            ch: 1.0 / 15.0,
            jump_width_factor: 0.5,
            jump_threshold: DEFAULT_JUMP_THRESHOLD,
            step_limit: None,
            refine: RefineConfig::default(),
            comparison_tolerance: 2e-14,
            al_variant: AlVariant::Normalized,
            ci: CiConfig::default(),
            ci_cluster_distance: 1e-3,
            parseval_tolerance: 1e-2,
            record_paths: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    /// `|a|` at the returned value.
    pub residual: f64,
}

impl Eigenvalue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Complete,
    /// A trajectory left through the top side: `U` may be too small.
    #[serde(rename = "suspect_U")]
    SuspectU,
    UnmatchedTrajectories,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub boundary: f64,
    pub tracking: f64,
    pub refine: f64,
    pub verify: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    /// Search-stage AL evaluations (boundary, bisection, tracking or contours).
    pub al_calls: u64,
    pub hi_order_calls: u64,
    pub newton_or_muller_iters: usize,
    /// AL evaluations spent on the Parseval check, kept apart from the search.
    pub verification_al_calls: u64,
    pub stage_ms: StageTimes,
    pub jumps_detected: usize,
    pub eligible_starts: usize,
    pub h_gamma: Option<f64>,
    pub domain: Option<SearchDomain>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
    pub energy: EnergyBalance,
    pub stats: Stats,
    pub status: Status,
}

impl Spectrum {
    /// Total count with multiplicity.
    pub fn count(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }

    pub fn pairs(&self) -> Vec<(Complex64, usize)> {
        self.eigenvalues.iter().map(|e| (e.value(), e.multiplicity)).collect()
    }
}

/// Everything a PJT run produced, for figure export and diagnostics.
#[derive(Debug, Clone)]
pub struct PjtRun {
    pub spectrum: Spectrum,
    pub boundary: Vec<BoundarySample>,
    pub jumps: Vec<BoundaryJump>,
    pub trajectories: Vec<TrajectoryResult>,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone)]
pub struct CiRun {
    pub spectrum: Spectrum,
    pub ci: CiResult,
    /// Zero count of the initial box.
    pub winding: usize,
    pub search_box: ContourBox,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Parseval check with a private counter so the search statistics stay clean.
fn verify(signal: &SampledSignal, cfg: &SolverConfig, pairs: &[(Complex64, usize)]) -> Result<(EnergyBalance, u64)> {
    if signal.is_zero() {
        return Ok((EnergyBalance { total: 0.0, discrete: 0.0, continuous: 0.0, residual: 0.0 }, 0));
    }
    let counter = EvalCounter::new();
    let sc = Scatterer::new(signal, cfg.al_variant, counter.clone());
    let (lo, hi, n) = ContinuousSamples::default_interval(signal);
    let cont = ContinuousSamples::sample(&sc, lo, hi, n)?;
    Ok((parseval_check(signal, pairs, &cont), counter.snapshot().al_calls))
}

fn empty_spectrum(signal: &SampledSignal, cfg: &SolverConfig) -> Result<Spectrum> {
    let t = Instant::now();
    let (energy, verification_al_calls) = verify(signal, cfg, &[])?;
    Ok(Spectrum {
        eigenvalues: vec![],
        energy,
        stats: Stats {
            al_calls: 0,
            hi_order_calls: 0,
            newton_or_muller_iters: 0,
            verification_al_calls,
            stage_ms: StageTimes { verify: ms(t), ..Default::default() },
            jumps_detected: 0,
            eligible_starts: 0,
            h_gamma: None,
            domain: None,
        },
        status: Status::Complete,
    })
}

/// `G` from the spectral bounds and the energy budget; `None` when no discrete
/// spectrum is possible.
pub fn search_domain(signal: &SampledSignal, cfg: &SolverConfig) -> Result<Option<(f64, f64, f64, f64)>> {
    if signal.is_zero() {
        return Ok(None);
    }
    let (left, right) = real_axis_bounds(signal, cfg.cq, cfg.fourier_mapping, cfg.fft_padding)?;
    let top = match cfg.upper_bound {
        Some(u) => u,
        None => match upper_bound(signal, None) {
            Ok(u) => u,
            Err(Error::NoEnergyBudget(b)) => {
                log::info!("no discrete-spectrum energy budget ({b}); spectrum is empty");
                return Ok(None);
            }
            Err(e) => return Err(e),
        },
    };
    let step = cfg.real_axis_step.unwrap_or(PI / (2.0 * signal.half_width()));
    let step = step.min(0.1 * (right - left));
    Ok(Some((left, right, top, step)))
}

/// Drops refined values that left the upper half-plane; the scheme error can
/// move a spurious candidate onto a zero of the analytic continuation below
/// the axis. Returns the survivors and the number dropped.
fn keep_upper(refined: Vec<Refined>) -> (Vec<Refined>, usize) {
    let (kept, dropped): (Vec<_>, Vec<_>) = refined.into_iter().partition(|r| r.value.im > 0.0);
    for r in &dropped {
        log::warn!("refinement from {} ended at {} outside the upper half-plane; dropped", r.candidate, r.value);
    }
    (kept, dropped.len())
}

/// Collapses refined values closer than the comparison tolerance.
fn merge_refined(refined: Vec<Refined>, tol: f64) -> Vec<Eigenvalue> {
    let mut out: Vec<Eigenvalue> = Vec::new();
    for r in refined {
        let z = r.value;
        match out.iter_mut().find(|e| (e.value() - z).norm() <= tol * z.norm().max(1.0)) {
            Some(e) => e.multiplicity += r.multiplicity,
            None => out.push(Eigenvalue { re: z.re, im: z.im, multiplicity: r.multiplicity, residual: r.residual }),
        }
    }
    sort_spectrum(&mut out, |e| e.value());
    out
}

/// Phase-jump tracking: domain, boundary scan, tracking, merge, refinement and
/// the Parseval check.
pub fn run_pjt_detailed(signal: &SampledSignal, cfg: &SolverConfig) -> Result<PjtRun> {
    let empty = |spectrum| PjtRun { spectrum, boundary: vec![], jumps: vec![], trajectories: vec![], candidates: vec![] };
    let Some((left, right, top, step_real)) = search_domain(signal, cfg)? else {
        return Ok(empty(empty_spectrum(signal, cfg)?));
    };
    let counter = EvalCounter::new();
    let sc = Scatterer::new(signal, cfg.al_variant, counter.clone());
    let fast = FastA(&sc);
    let thr = cfg.jump_threshold;

    // Real axis first: its jumps set the step on the other three sides.
    let t_boundary = Instant::now();
    let provisional = SearchDomain { left, right, top, step_real, step_other: step_real };
    let bottom: Vec<(Complex64, Side)> =
        side_nodes(Side::Bottom, &provisional, step_real).into_iter().map(|z| (z, Side::Bottom)).collect();
    let bottom_samples = sample_nodes(&fast, &bottom)?;
    let real_jumps = detect_jumps(&bottom_samples, thr)?;
    let step_other = boundary_steps(&real_jumps, &provisional);
    let domain = SearchDomain::new(left, right, top, step_real, step_other)?;

    let rest: Vec<_> = contour_nodes(&domain, &[Side::Right, Side::Top, Side::Left]).into_iter().skip(1).collect();
    let mut samples = bottom_samples;
    samples.extend(sample_nodes(&fast, &rest)?);
    samples.push(BoundarySample { side: Side::Left, ..samples[0] });
    let jumps = detect_jumps(&samples, thr)?;
    let h = tracking_step_size(&jumps, cfg.ch, &domain);
    let eligible: Vec<BoundaryJump> = filter_starts(&jumps, &samples, true).into_iter().filter(|j| j.start_eligible).collect();
    let mut starts = Vec::with_capacity(eligible.len());
    for j in &eligible {
        match refine_jump(j, &fast, cfg.jump_width_factor * h, thr) {
            Ok(r) => starts.push(r),
            Err(Error::JumpLost(z)) => log::warn!("discarding boundary jump near {z}: criterion lost under bisection"),
            Err(e) => return Err(e),
        }
    }
    let boundary_ms = ms(t_boundary);

    let t_tracking = Instant::now();
    let opts = TrackOptions {
        threshold: thr,
        step_limit: cfg.step_limit.unwrap_or_else(|| default_step_limit(&domain, h)),
        record_path: cfg.record_paths,
    };
    let trajectories = track_all(&starts, h, &fast, &domain, &opts)?;
    let candidates = merge_multiplicities(&trajectories, h);
    let tracking_ms = ms(t_tracking);

    let t_refine = Instant::now();
    let accurate = AccurateA(&sc);
    let refined = polish_all(&candidates, h, &accurate, &cfg.refine, Some(&domain))?;
    let iterations = refined.iter().map(|r| r.iterations).sum();
    let (refined, dropped) = keep_upper(refined);
    let eigenvalues = merge_refined(refined, cfg.comparison_tolerance);
    let refine_ms = ms(t_refine);
    let search_counts = counter.snapshot();

    let t_verify = Instant::now();
    let pairs: Vec<_> = eigenvalues.iter().map(|e| (e.value(), e.multiplicity)).collect();
    let (energy, verification_al_calls) = verify(signal, cfg, &pairs)?;
    let verify_ms = ms(t_verify);

    let status = if trajectories.iter().any(|t| t.exit == TrajectoryExit::LeftDomain(Side::Top)) {
        Status::SuspectU
    } else if trajectories.iter().any(|t| matches!(t.exit, TrajectoryExit::StepLimit | TrajectoryExit::StraddleLost))
        || dropped > 0
        || energy.residual > cfg.parseval_tolerance * energy.total
    {
        Status::UnmatchedTrajectories
    } else {
        Status::Complete
    };
    // Side exits are re-entrant curves that start and end on the boundary.
    for t in trajectories.iter().filter(|t| !t.converged()) {
        log::info!("trajectory from {} ended with {:?} after {} steps", t.start, t.exit, t.steps);
    }

    let spectrum = Spectrum {
        eigenvalues,
        energy,
        stats: stats(
            search_counts,
            iterations,
            verification_al_calls,
            StageTimes { boundary: boundary_ms, tracking: tracking_ms, refine: refine_ms, verify: verify_ms },
            jumps.len(),
            starts.len(),
            Some(h),
            Some(domain),
        ),
        status,
    };
    Ok(PjtRun { spectrum, boundary: samples, jumps, trajectories, candidates })
}

#[allow(clippy::too_many_arguments)]
fn stats(
    counts: EvalCounts,
    iterations: usize,
    verification_al_calls: u64,
    stage_ms: StageTimes,
    jumps_detected: usize,
    eligible_starts: usize,
    h_gamma: Option<f64>,
    domain: Option<SearchDomain>,
) -> Stats {
    Stats {
        al_calls: counts.al_calls,
        hi_order_calls: counts.hi_order_calls,
        newton_or_muller_iters: iterations,
        verification_al_calls,
        stage_ms,
        jumps_detected,
        eligible_starts,
        h_gamma,
        domain,
    }
}

pub fn run_pjt(signal: &SampledSignal, cfg: &SolverConfig) -> Result<Spectrum> {
    Ok(run_pjt_detailed(signal, cfg)?.spectrum)
}

/// Initial contour of the baseline: `G` with the left edge pushed out to
/// `c - f (R - c)`, `c` the center of `[L, R]` (`-1.1 R` for symmetric spectra).
pub fn ci_box(left: f64, right: f64, top: f64, factor: f64) -> Result<ContourBox> {
    let c = 0.5 * (left + right);
    ContourBox::new(c - factor * (right - c), right, 0.0, top)
}

/// Contour-integral baseline: quadrisection, seed polynomials, Newton polish
/// and clustering of seeds that converge together.
pub fn run_ci_detailed(signal: &SampledSignal, cfg: &SolverConfig) -> Result<CiRun> {
    let Some((left, right, top, step)) = search_domain(signal, cfg)? else {
        let bx = ContourBox { left: -1.0, right: 1.0, bottom: 0.0, top: 1.0 };
        return Ok(CiRun { spectrum: empty_spectrum(signal, cfg)?, ci: CiResult::default(), winding: 0, search_box: bx });
    };
    let counter = EvalCounter::new();
    let sc = Scatterer::new(signal, cfg.al_variant, counter.clone());
    let bx = ci_box(left, right, top, cfg.ci.left_factor)?;

    let t_search = Instant::now();
    let ci = subdivide_and_solve(&bx, step, &FastA(&sc), &cfg.ci)?;
    let winding = ci.boxes.first().map_or(0, |b| b.zero_count);
    let search_ms = ms(t_search);

    let t_refine = Instant::now();
    let accurate = AccurateA(&sc);
    let newton_cfg = RefineConfig { method: RefineMethod::Newton, ..cfg.refine };
    let domain = SearchDomain { left: bx.left, right: bx.right, top, step_real: step, step_other: step };
    let first: Vec<Refined> = ci
        .seeds
        .iter()
        .map(|&s| newton_polish(s, 1, &accurate, &newton_cfg, Some(&domain)))
        .collect::<Result<_>>()?;
    // A discretized multiple zero splits into nearby simple zeros; seeds that
    // land together are reported once, at the centroid of the group.
    let mut groups: Vec<(Complex64, usize)> = Vec::new();
    for r in &first {
        match groups.iter_mut().find(|g| (g.0 / g.1 as f64 - r.value).norm() <= cfg.ci_cluster_distance) {
            Some(g) => {
                g.0 += r.value;
                g.1 += 1;
            }
            None => groups.push((r.value, 1)),
        }
    }
    let iterations: usize = first.iter().map(|r| r.iterations).sum();
    let mut refined = Vec::new();
    for (sum, m) in groups {
        let center = sum / m as f64;
        if m == 1 {
            refined.push(first.iter().find(|r| r.value == center).cloned().expect("group member"));
        } else {
            let spread = first.iter().map(|r| (r.value - center).norm()).filter(|d| *d <= cfg.ci_cluster_distance).fold(0.0, f64::max);
            let radius = (10.0 * spread).max(cfg.ci_cluster_distance);
            let value = cluster_centroid(center, radius, m, 64, &accurate)?.unwrap_or(center);
            refined.push(Refined {
                candidate: center,
                value,
                residual: accurate.value(value)?.norm(),
                multiplicity: m,
                iterations: 0,
                converged: true,
                history: vec![center, value],
            });
        }
    }
    let (refined, dropped) = keep_upper(refined);
    let eigenvalues = merge_refined(refined, cfg.comparison_tolerance);
    let refine_ms = ms(t_refine);
    let counts = counter.snapshot();

    let t_verify = Instant::now();
    let pairs: Vec<_> = eigenvalues.iter().map(|e| (e.value(), e.multiplicity)).collect();
    let (energy, verification_al_calls) = verify(signal, cfg, &pairs)?;
    let verify_ms = ms(t_verify);
    let count: usize = eigenvalues.iter().map(|e| e.multiplicity).sum();
    let status = if count != winding || dropped > 0 || energy.residual > cfg.parseval_tolerance * energy.total {
        Status::UnmatchedTrajectories
    } else {
        Status::Complete
    };
    let spectrum = Spectrum {
        eigenvalues,
        energy,
        stats: stats(
            counts,
            iterations,
            verification_al_calls,
            StageTimes { boundary: search_ms, tracking: 0.0, refine: refine_ms, verify: verify_ms },
            0,
            0,
            None,
            Some(domain),
        ),
        status,
    };
    Ok(CiRun { spectrum, ci, winding, search_box: bx })
}

pub fn run_ci(signal: &SampledSignal, cfg: &SolverConfig) -> Result<Spectrum> {
    Ok(run_ci_detailed(signal, cfg)?.spectrum)
}
