//! Sampled complex pulses on a uniform time grid, analytic test potentials
//! and CSV ingestion.
//!
//! A signal with `M` intervals holds `M + 1` samples at `t_n = -T + tau * n`,
//! `tau = 2T / M`, `n = 0..=M`. Integrators consume the `M` intervals using
//! the left-endpoint sample of each interval, so the last sample is carried
//! for completeness only.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance on grid spacing accepted by [`load_signal`].
pub const GRID_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    half_width: f64,
}

impl SampledSignal {
    /// Wraps `samples` taken at `t_n = -half_width + tau * n`.
    pub fn new(samples: Vec<Complex64>, half_width: f64) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::InvalidSignal(format!(
                "need at least 3 samples (M >= 2), got {}",
                samples.len()
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if let Some(n) = samples.iter().position(|q| !(q.re.is_finite() && q.im.is_finite())) {
            return Err(Error::InvalidSignal(format!("non-finite sample at index {n}")));
        }
        let signal = Self { samples, half_width };
        let tau = signal.tau();
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidSignal(format!("degenerate grid step {tau}")));
        }
        Ok(signal)
    }

    /// Samples `f` on the `M + 1` node grid over `[-half_width, half_width]`.
    pub fn from_fn(half_width: f64, intervals: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_grid(half_width, intervals)?;
        let tau = 2.0 * half_width / intervals as f64;
        let samples = (0..=intervals)
            .map(|n| f(-half_width + tau * n as f64))
            .collect();
        Self::new(samples, half_width)
    }

    pub fn zeros(half_width: f64, intervals: usize) -> Result<Self> {
        Self::from_fn(half_width, intervals, |_| Complex64::new(0.0, 0.0))
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Number of grid intervals `M`.
    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn tau(&self) -> f64 {
        2.0 * self.half_width / self.intervals() as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        -self.half_width + self.tau() * n as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |n| self.time(n))
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|q| q.re == 0.0 && q.im == 0.0)
    }

    /// Signal energy `E_t = integral |q|^2 dt` by the trapezoidal rule.
    pub fn energy(&self) -> f64 {
        let n = self.samples.len();
        let inner: f64 = self.samples[1..n - 1].iter().map(|q| q.norm_sqr()).sum();
        let ends = 0.5 * (self.samples[0].norm_sqr() + self.samples[n - 1].norm_sqr());
        self.tau() * (inner + ends)
    }

    /// `integral |q| dt` by the trapezoidal rule.
    pub fn l1_norm(&self) -> f64 {
        let n = self.samples.len();
        let inner: f64 = self.samples[1..n - 1].iter().map(|q| q.norm()).sum();
        let ends = 0.5 * (self.samples[0].norm() + self.samples[n - 1].norm());
        self.tau() * (inner + ends)
    }

    /// Returns the signal multiplied by a real scalar.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.samples.iter().map(|q| q * factor).collect(), self.half_width)
    }
}

fn check_grid(half_width: f64, intervals: usize) -> Result<()> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::InvalidParameter(format!("T must be positive, got {half_width}")));
    }
    if intervals < 2 {
        return Err(Error::InvalidParameter(format!("M must be >= 2, got {intervals}")));
    }
    Ok(())
}

/// `sech(t)` written as `2 e^{-|t|} / (1 + e^{-2|t|})` so it never overflows.
pub fn sech(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Chirped oversoliton `q(t) = A sech(t)^{1 + iC}`.
pub fn make_oversoliton(amplitude: f64, chirp: f64, half_width: f64, intervals: usize) -> Result<SampledSignal> {
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::InvalidParameter(format!("A must be positive, got {amplitude}")));
    }
    if !chirp.is_finite() {
        return Err(Error::InvalidParameter(format!("C must be finite, got {chirp}")));
    }
    SampledSignal::from_fn(half_width, intervals, |t| {
        let s = sech(t);
        if chirp == 0.0 {
            Complex64::new(amplitude * s, 0.0)
        } else {
            // sech^{iC} = exp(iC log sech)
            Complex64::from_polar(amplitude * s, chirp * s.ln())
        }
    })
}

/// Rectangular pulse of height `A` on the closed interval `[-T_pulse, T_pulse]`.
pub fn make_rectangle(amplitude: f64, pulse_half_width: f64, half_width: f64, intervals: usize) -> Result<SampledSignal> {
    if !amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!("A must be finite, got {amplitude}")));
    }
    if !(pulse_half_width > 0.0 && pulse_half_width <= half_width) {
        return Err(Error::InvalidParameter(format!(
            "pulse half width {pulse_half_width} must lie in (0, {half_width}]"
        )));
    }
    check_grid(half_width, intervals)?;
    let tau = 2.0 * half_width / intervals as f64;
    // Nodes are classified by index so that edges landing on the grid are
    // included exactly, independent of rounding in t_n.
    let edge = pulse_half_width / tau;
    let centre = intervals as f64 / 2.0;
    let samples = (0..=intervals)
        .map(|n| {
            let offset = (n as f64 - centre).abs();
            if offset <= edge * (1.0 + 1e-12) {
                Complex64::new(amplitude, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    SampledSignal::new(samples, half_width)
}

/// Parameters of the soliton with one eigenvalue `xi + i eta` of multiplicity two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleEigenvalue {
    pub xi: f64,
    pub eta: f64,
    pub q11: Complex64,
    pub q10: Complex64,
}

impl DoubleEigenvalue {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if self.q11.norm() == 0.0 {
            return Err(Error::InvalidParameter("Q11 must be nonzero".into()));
        }
        if !(self.xi.is_finite() && self.q10.re.is_finite() && self.q10.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        Ok(())
    }

    fn x(&self, t: f64) -> f64 {
        2.0 * self.eta * t - (self.q11.norm() / (4.0 * self.eta * self.eta)).ln()
    }

    /// Numerator and denominator of `q = h / f`, both scaled by `e^{-2|X|}`.
    pub fn scaled_parts(&self, t: f64) -> (Complex64, f64) {
        let Self { xi, eta, q11, q10 } = *self;
        let x = self.x(t);
        let ax = x.abs();
        let m2 = q11.norm_sqr();
        let i = Complex64::i();

        let lower = -m2 * (2.0 * eta * t + 2.0) - eta * q11.conj() * q10;
        let upper = m2 * (2.0 * eta * t) + eta * q11 * q10.conj();
        let bracket = lower * (-x - 2.0 * ax).exp() + upper * (x - 2.0 * ax).exp();
        let prefactor = -i * 4.0 * eta * Complex64::from_polar(1.0, -q11.arg() - 2.0 * xi * t);
        let h = prefactor * bracket;

        let e2 = (-2.0 * ax).exp();
        let lin = q10 * eta + q11 * (2.0 * eta * t + 1.0);
        let f = m2 * (0.5 * (1.0 + e2 * e2) + e2) + 2.0 * lin.norm_sqr() * e2;
        (h, f)
    }

    pub fn value(&self, t: f64) -> Complex64 {
        let (h, f) = self.scaled_parts(t);
        h / f
    }
}

pub fn make_double_eigenvalue(params: DoubleEigenvalue, half_width: f64, intervals: usize) -> Result<SampledSignal> {
    params.validate()?;
    SampledSignal::from_fn(half_width, intervals, |t| params.value(t))
}

#[derive(Debug, serde::Deserialize, serde::Serialize)]
struct SignalRow {
    t: f64,
    re: f64,
    im: f64,
}

/// Writes the `t,re,im` CSV format read by [`load_signal`].
pub fn save_signal(signal: &SampledSignal, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = BufWriter::new(File::create(path)?);
    let mut writer = csv::Writer::from_writer(file);
    let io_err = |e: csv::Error| Error::SignalFile { path: path.display().to_string(), reason: e.to_string() };
    for (t, q) in signal.times().zip(signal.samples()) {
        writer.serialize(SignalRow { t, re: q.re, im: q.im }).map_err(io_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_signal(path: impl AsRef<Path>) -> Result<SampledSignal> {
    let path = path.as_ref();
    let bad = |reason: String| Error::SignalFile { path: path.display().to_string(), reason };
    let file = BufReader::new(File::open(path)?);
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() != 3 || &headers[0] != "t" || &headers[1] != "re" || &headers[2] != "im" {
        return Err(bad(format!("expected header `t,re,im`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (line, row) in reader.deserialize::<SignalRow>().enumerate() {
        let row = row.map_err(|e| bad(format!("row {}: {e}", line + 2)))?;
        if !(row.t.is_finite() && row.re.is_finite() && row.im.is_finite()) {
            return Err(bad(format!("row {}: non-finite value", line + 2)));
        }
        times.push(row.t);
        samples.push(Complex64::new(row.re, row.im));
    }
    if times.len() < 3 {
        return Err(bad(format!("need at least 3 rows, got {}", times.len())));
    }

    let intervals = times.len() - 1;
    let first = times[0];
    let last = times[intervals];
    let tau = (last - first) / intervals as f64;
    if tau.is_nan() || tau <= 0.0 {
        return Err(bad("time column must increase".into()));
    }
    for (n, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if ((step - tau) / tau).abs() > GRID_TOLERANCE {
            return Err(bad(format!("non-uniform grid between rows {} and {}", n + 2, n + 3)));
        }
    }
    let half_width = 0.5 * (last - first);
    let centre = 0.5 * (last + first);
    if centre.abs() > GRID_TOLERANCE * half_width {
        return Err(bad(format!("grid must be symmetric about t = 0, centre is {centre}")));
    }
    SampledSignal::new(samples, half_width).map_err(|e| bad(e.to_string()))
}
