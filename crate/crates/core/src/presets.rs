//! Test signals with known spectra and the solver settings they need.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pipeline::SolverConfig;
use crate::scatter::a_exact_rectangle;
use crate::signal::{make_double_eigenvalue, make_oversoliton, make_rectangle, DoubleEigenvalue, SampledSignal};

pub const DEFAULT_HALF_WIDTH: f64 = 30.0;
pub const DEFAULT_INTERVALS: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `A sech(t)^{1 + iC}`.
    Oversoliton { amplitude: f64, chirp: f64 },
    /// Height `A` on `[-T, T]`; the grid half-width defaults to `T` so that
    /// the pulse fills the window.
    Rectangle { amplitude: f64, pulse_half_width: f64, grid_half_width: Option<f64> },
    DoubleEigenvalue(DoubleEigenvalue),
    Zero,
}

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("preset parameter `{p}` is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("preset parameter `{p}` is not a number")))?;
            Ok((k.trim().to_ascii_lowercase(), v))
        })
        .collect()
}

struct Params {
    name: &'static str,
    values: Vec<(String, f64)>,
}

impl Params {
    fn take(&mut self, key: &str) -> Option<f64> {
        let i = self.values.iter().position(|(k, _)| k == key)?;
        Some(self.values.remove(i).1)
    }

    fn get(&mut self, key: &str, default: f64) -> f64 {
        self.take(key).unwrap_or(default)
    }

    fn finish(self) -> Result<()> {
        match self.values.first() {
            None => Ok(()),
            Some((k, _)) => Err(Error::InvalidParameter(format!("unknown parameter `{k}` for preset {}", self.name))),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// `name` or `name:key=value,...`, e.g. `oversoliton:A=5,C=0`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let values = parse_params(body)?;
        let name = name.trim().to_ascii_lowercase();
        let preset = match name.as_str() {
            "oversoliton" => {
                let mut p = Params { name: "oversoliton", values };
                let preset = Preset::Oversoliton { amplitude: p.get("a", 5.0), chirp: p.get("c", 0.0) };
                p.finish()?;
                preset
            }
            "rectangle" => {
                let mut p = Params { name: "rectangle", values };
                let preset = Preset::Rectangle {
                    amplitude: p.get("a", 10.0),
                    pulse_half_width: p.get("t", 1.0),
                    grid_half_width: p.take("grid_t"),
                };
                p.finish()?;
                preset
            }
            "double_eigenvalue" | "double" => {
                let mut p = Params { name: "double_eigenvalue", values };
                let params = DoubleEigenvalue {
                    xi: p.get("xi", 1.0),
                    eta: p.get("eta", 1.0),
                    q11: Complex64::new(p.get("q11", 1.0), p.get("q11_im", 0.0)),
                    q10: Complex64::new(p.get("q10", 1.0), p.get("q10_im", 0.0)),
                };
                p.finish()?;
                params.validate()?;
                Preset::DoubleEigenvalue(params)
            }
            "zero" => {
                Params { name: "zero", values }.finish()?;
                Preset::Zero
            }
            _ => return Err(Error::InvalidParameter(format!("unknown preset `{name}`"))),
        };
        Ok(preset)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Oversoliton { amplitude, chirp } => write!(f, "oversoliton:A={amplitude},C={chirp}"),
            Preset::Rectangle { amplitude, pulse_half_width, grid_half_width } => {
                write!(f, "rectangle:A={amplitude},T={pulse_half_width}")?;
                match grid_half_width {
                    Some(g) => write!(f, ",grid_T={g}"),
                    None => Ok(()),
                }
            }
            Preset::DoubleEigenvalue(p) => {
                write!(f, "double_eigenvalue:xi={},eta={},q11={},q10={}", p.xi, p.eta, p.q11.re, p.q10.re)?;
                if p.q11.im != 0.0 {
                    write!(f, ",q11_im={}", p.q11.im)?;
                }
                if p.q10.im != 0.0 {
                    write!(f, ",q10_im={}", p.q10.im)?;
                }
                Ok(())
            }
            Preset::Zero => write!(f, "zero"),
        }
    }
}

impl Preset {
    /// Grid half-width used when none is given.
    pub fn default_half_width(&self) -> f64 {
        match self {
            Preset::Rectangle { pulse_half_width, grid_half_width, .. } => grid_half_width.unwrap_or(*pulse_half_width),
            _ => DEFAULT_HALF_WIDTH,
        }
    }

    pub fn signal(&self, half_width: Option<f64>, intervals: usize) -> Result<SampledSignal> {
        let t = half_width.unwrap_or_else(|| self.default_half_width());
        match *self {
            Preset::Oversoliton { amplitude, chirp } => make_oversoliton(amplitude, chirp, t, intervals),
            Preset::Rectangle { amplitude, pulse_half_width, .. } => make_rectangle(amplitude, pulse_half_width, t, intervals),
            Preset::DoubleEigenvalue(p) => make_double_eigenvalue(p, t, intervals),
            Preset::Zero => SampledSignal::zeros(t, intervals),
        }
    }

    /// Settings the preset needs on top of `base`. A window-filling rectangle
    /// has a slowly decaying transform and a short window, so the real-axis
    /// bounds use a padded transform and the real-axis step is set explicitly.
    pub fn tune(&self, base: SolverConfig) -> SolverConfig {
        match self {
            Preset::Rectangle { .. } => SolverConfig {
                fft_padding: base.fft_padding.max(8),
                real_axis_step: base.real_axis_step.or(Some(PI / 60.0)),
                ..base
            },
            _ => base,
        }
    }

    /// Known discrete spectrum of the continuous signal, sorted by
    /// `(Im desc, Re asc)`.
    pub fn exact_spectrum(&self) -> Option<Vec<(Complex64, usize)>> {
        match *self {
            Preset::Oversoliton { amplitude, chirp } => Some(oversoliton_spectrum(amplitude, chirp)),
            Preset::Rectangle { amplitude, pulse_half_width, .. } => {
                Some(rectangle_zeros(amplitude, pulse_half_width).into_iter().map(|eta| (Complex64::new(0.0, eta), 1)).collect())
            }
            Preset::DoubleEigenvalue(p) => Some(vec![(Complex64::new(p.xi, p.eta), 2)]),
            Preset::Zero => Some(vec![]),
        }
    }
}

/// `i (sqrt(A^2 - C^2/4) - 1/2 - k)` for every `k` giving a positive imaginary part.
pub fn oversoliton_spectrum(amplitude: f64, chirp: f64) -> Vec<(Complex64, usize)> {
    let d = amplitude * amplitude - chirp * chirp / 4.0;
    if d <= 0.0 {
        return vec![];
    }
    let top = d.sqrt() - 0.5;
    (0..)
        .map(|k| top - k as f64)
        .take_while(|&eta| eta > 1e-12)
        .map(|eta| (Complex64::new(0.0, eta), 1))
        .collect()
}

/// `a(i eta)` of the rectangle, real for real `eta`.
fn rectangle_on_axis(amplitude: f64, pulse_half_width: f64, eta: f64) -> f64 {
    a_exact_rectangle(amplitude, pulse_half_width, Complex64::new(0.0, eta)).re
}

/// Zeros of the rectangle's `a` on the imaginary axis, descending. A dense
/// sign-change sweep of `a(i eta)` on `(0, A)` is followed by Newton steps on
/// the closed form with a bisection fallback.
pub fn rectangle_zeros(amplitude: f64, pulse_half_width: f64) -> Vec<f64> {
    let a = amplitude.abs();
    if a == 0.0 {
        return vec![];
    }
    let f = |eta: f64| rectangle_on_axis(a, pulse_half_width, eta);
    let n = 20_000;
    let grid: Vec<f64> = (1..n).map(|i| a * i as f64 / n as f64).collect();
    let mut zeros = Vec::new();
    for w in grid.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            zeros.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = f(x);
            if fx == 0.0 {
                break;
            }
            if fx.signum() == flo.signum() {
                lo = x;
            } else {
                hi = x;
            }
            let dx = 1e-7 * x.max(1.0);
            let newton = x - fx * 2.0 * dx / (f(x + dx) - f(x - dx));
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= 1e-15 * x.max(1.0) || hi - lo <= 1e-15 * x.max(1.0) {
                x = next;
                break;
            }
            x = next;
        }
        zeros.push(x);
    }
    zeros.sort_by(|a, b| b.total_cmp(a));
    zeros
}
