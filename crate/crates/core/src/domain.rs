//! Search rectangle `G = [L, R] x [0, U]` and the energy balance check.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scatter::Scatterer;
use crate::signal::SampledSignal;

/// Default spectral power ratio that bounds the real parts.
pub const DEFAULT_CQ: f64 = 1e-4;

/// How a linear frequency `omega` maps onto the real part of `zeta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourierMapping {
    /// `xi = -omega / 2`, the low-amplitude limit of the ZS problem.
    #[default]
    HalfNegative,
    /// `xi = omega`.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchDomain {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub step_real: f64,
    pub step_other: f64,
}

impl SearchDomain {
    pub fn new(left: f64, right: f64, top: f64, step_real: f64, step_other: f64) -> Result<Self> {
        let d = SearchDomain { left, right, top, step_real, step_other };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.left, self.right, self.top, self.step_real, self.step_other]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.left >= self.right || self.top <= 0.0 {
            return Err(Error::InvalidParameter(format!("degenerate search domain {self:?}")));
        }
        if !(self.step_real > 0.0 && self.step_real < self.width()) {
            return Err(Error::InvalidParameter(format!(
                "real-axis step {} must lie in (0, {})",
                self.step_real,
                self.width()
            )));
        }
        if !(self.step_other > 0.0 && self.step_other < self.width().min(self.top)) {
            return Err(Error::InvalidParameter(format!(
                "boundary step {} must lie in (0, {})",
                self.step_other,
                self.width().min(self.top)
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.top)
    }

    /// Inclusive containment with a relative slack for rounding on the edges.
    pub fn contains(&self, z: Complex64) -> bool {
        let eps = 1e-12 * (self.width() + self.top);
        z.re >= self.left - eps && z.re <= self.right + eps && z.im >= -eps && z.im <= self.top + eps
    }

    /// Euclidean distance from `z` to the rectangle (0 inside).
    pub fn distance(&self, z: Complex64) -> f64 {
        let dx = (self.left - z.re).max(0.0).max(z.re - self.right);
        let dy = (-z.im).max(0.0).max(z.im - self.top);
        dx.hypot(dy)
    }
}

/// `[L, R]` from the linear Fourier transform: the extreme frequencies whose
/// power is at least `cq` times the peak, mapped to `xi` and widened by one bin.
pub fn real_axis_bounds(signal: &SampledSignal, cq: f64, mapping: FourierMapping, padding: usize) -> Result<(f64, f64)> {
    if signal.is_zero() {
        return Err(Error::ZeroSignal);
    }
    if !(cq > 0.0 && cq < 1.0) {
        return Err(Error::InvalidParameter(format!("C_q must lie in (0, 1), got {cq}")));
    }
    let m = signal.intervals();
    let n = m * padding.max(1);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..m].copy_from_slice(&signal.samples()[..m]);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let peak = power.iter().cloned().fold(0.0, f64::max);
    let d_omega = 2.0 * PI / (n as f64 * signal.tau());
    let omega = |k: usize| {
        let k = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
        k * d_omega
    };
    let (lo, hi) = power
        .iter()
        .enumerate()
        .filter(|(_, p)| **p >= cq * peak)
        .map(|(k, _)| omega(k))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w), hi.max(w)));

    let (left, right, bin) = match mapping {
        FourierMapping::HalfNegative => (-0.5 * hi, -0.5 * lo, 0.5 * d_omega),
        FourierMapping::Identity => (lo, hi, d_omega),
    };
    Ok((left - bin, right + bin))
}

/// Largest `Im zeta` for which `e^{U T}` stays below `0.9 L_MAX`.
pub fn representable_top(half_width: f64) -> f64 {
    (0.9 * f64::MAX).ln() / half_width
}

/// `U = min(1.1 * 0.25 * (E_t - E_c), log(0.9 L_MAX) / T)`.
pub fn upper_bound(signal: &SampledSignal, continuous_energy: Option<f64>) -> Result<f64> {
    let budget = signal.energy() - continuous_energy.unwrap_or(0.0);
    if budget.is_nan() || budget <= 0.0 {
        return Err(Error::NoEnergyBudget(budget));
    }
    Ok((1.1 * 0.25 * budget).min(representable_top(signal.half_width())))
}

/// `|a(xi)|` on a uniform real grid, used for the continuous-spectrum energy.
#[derive(Debug, Clone)]
pub struct ContinuousSamples {
    pub xi: Vec<f64>,
    pub modulus: Vec<f64>,
}

impl ContinuousSamples {
    /// `N = M` points covering `[-pi / (2 tau), pi / (2 tau)]`.
    pub fn default_interval(signal: &SampledSignal) -> (f64, f64, usize) {
        let half = PI / (2.0 * signal.tau());
        (-half, half, signal.intervals())
    }

    pub fn sample(scatterer: &Scatterer<'_>, lo: f64, hi: f64, count: usize) -> Result<Self> {
        let count = count.max(2);
        let step = (hi - lo) / (count - 1) as f64;
        let xi: Vec<f64> = (0..count).map(|k| lo + step * k as f64).collect();
        let modulus = xi
            .par_iter()
            .map(|&x| scatterer.a_fast(Complex64::new(x, 0.0)).map(|e| e.a.norm()))
            .collect::<Result<Vec<_>>>()?;
        Ok(ContinuousSamples { xi, modulus })
    }

    /// `E_c = -(1/pi) integral log |a(xi)|^2 dxi` by the trapezoidal rule.
    pub fn energy(&self) -> f64 {
        let f: Vec<f64> = self.modulus.iter().map(|m| -(m * m).ln() / PI).collect();
        self.xi
            .windows(2)
            .zip(f.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    #[serde(rename = "E_t")]
    pub total: f64,
    #[serde(rename = "E_d")]
    pub discrete: f64,
    #[serde(rename = "E_c")]
    pub continuous: f64,
    pub residual: f64,
}

/// `E_t = 4 sum m_k Im zeta_k + E_c`; reports `|E_t - E_d - E_c|`.
pub fn parseval_check(signal: &SampledSignal, eigenvalues: &[(Complex64, usize)], continuous: &ContinuousSamples) -> EnergyBalance {
    let total = signal.energy();
    let discrete = 4.0 * eigenvalues.iter().map(|(z, m)| *m as f64 * z.im).sum::<f64>();
    let continuous = continuous.energy();
    EnergyBalance { total, discrete, continuous, residual: (total - discrete - continuous).abs() }
}
