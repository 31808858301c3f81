//! Timing and call-count comparison of the solvers over grid sizes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{run_ci, run_pjt, SolverConfig, Spectrum};
use crate::presets::Preset;
use crate::refine::{RefineConfig, RefineMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pjt,
    Ci,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pjt" => Ok(Method::Pjt),
            "ci" => Ok(Method::Ci),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pjt => "pjt",
            Method::Ci => "ci",
        })
    }
}

pub fn run_method(method: Method, signal: &crate::signal::SampledSignal, cfg: &SolverConfig) -> Result<Spectrum> {
    match method {
        Method::Pjt => run_pjt(signal, cfg),
        Method::Ci => run_ci(signal, cfg),
    }
}

/// One `(method, M)` cell. Times exclude the Parseval check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    #[serde(rename = "M")]
    pub intervals: usize,
    pub ms_no_refine: Option<f64>,
    pub ms_refine: Option<f64>,
    pub al_calls: Option<u64>,
    pub refine_calls: Option<u64>,
    #[serde(rename = "K")]
    pub count: Option<usize>,
    /// `None` when no reference spectrum exists.
    pub correct: Option<bool>,
    pub error: Option<String>,
}

/// Absolute tolerance for a benchmark eigenvalue to count as correct.
pub const BENCH_TOLERANCE: f64 = 1e-6;

/// True when `found` matches `exact` one-to-one, with multiplicity, within `tol`.
pub fn spectrum_matches(found: &[(Complex64, usize)], exact: &[(Complex64, usize)], tol: f64) -> bool {
    if found.iter().map(|e| e.1).sum::<usize>() != exact.iter().map(|e| e.1).sum::<usize>() {
        return false;
    }
    let mut used = vec![false; exact.len()];
    found.iter().all(|&(z, m)| {
        let best = exact
            .iter()
            .enumerate()
            .filter(|(i, e)| !used[*i] && e.1 == m)
            .min_by(|a, b| (a.1 .0 - z).norm().total_cmp(&(b.1 .0 - z).norm()));
        match best {
            Some((i, e)) if (e.0 - z).norm() <= tol => {
                used[i] = true;
                true
            }
            _ => false,
        }
    })
}

fn search_ms(s: &Spectrum) -> f64 {
    let t = s.stats.stage_ms;
    t.boundary + t.tracking + t.refine
}

fn cell(preset: &Preset, method: Method, intervals: usize, base: &SolverConfig) -> Result<BenchRow> {
    let signal = preset.signal(None, intervals)?;
    let cfg = preset.tune(*base);
    let bare = SolverConfig { refine: RefineConfig { method: RefineMethod::None, ..cfg.refine }, ..cfg };
    let unrefined = run_method(method, &signal, &bare)?;
    let full = run_method(method, &signal, &cfg)?;
    let correct = preset.exact_spectrum().map(|exact| spectrum_matches(&full.pairs(), &exact, BENCH_TOLERANCE));
    Ok(BenchRow {
        method,
        intervals,
        ms_no_refine: Some(search_ms(&unrefined)),
        ms_refine: Some(search_ms(&full)),
        al_calls: Some(full.stats.al_calls),
        refine_calls: Some(full.stats.hi_order_calls),
        count: Some(full.count()),
        correct,
        error: None,
    })
}

/// Runs every `(method, M)` pair; failures are recorded in the row.
pub fn run_bench(preset: &Preset, methods: &[Method], m_list: &[usize], base: &SolverConfig) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &m in m_list {
        for &method in methods {
            let row = cell(preset, method, m, base).unwrap_or_else(|e| BenchRow {
                method,
                intervals: m,
                ms_no_refine: None,
                ms_refine: None,
                al_calls: None,
                refine_calls: None,
                count: None,
                correct: Some(false),
                error: Some(e.to_string()),
            });
            rows.push(row);
        }
    }
    rows
}

pub fn write_bench<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_signal_is_trivially_correct() {
        let rows = run_bench(&Preset::Zero, &[Method::Pjt, Method::Ci], &[256], &SolverConfig::default());
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert_eq!(r.count, Some(0));
            assert_eq!(r.correct, Some(true));
            assert_eq!(r.al_calls, Some(0));
        }
    }

    #[test]
    fn matching_respects_multiplicity_and_tolerance() {
        let z = Complex64::new(1.0, 1.0);
        let w = Complex64::new(0.0, 2.0);
        assert!(spectrum_matches(&[(w, 1), (z, 2)], &[(z, 2), (w, 1)], 1e-9));
        assert!(!spectrum_matches(&[(z, 1), (z + 1e-12, 1)], &[(z, 2)], 1e-9));
        assert!(!spectrum_matches(&[(z + 1e-6, 2)], &[(z, 2)], 1e-9));
        assert!(!spectrum_matches(&[(z, 2)], &[(z, 2), (w, 1)], 1e-9));
    }

    #[test]
    fn bad_cells_record_errors() {
        let rows = run_bench(&Preset::Zero, &[Method::Pjt], &[1], &SolverConfig::default());
        assert!(rows[0].error.is_some());
        assert_eq!(rows[0].correct, Some(false));
    }

    #[test]
    fn csv_has_header() {
        let rows = run_bench(&Preset::Zero, &[Method::Ci], &[128], &SolverConfig::default());
        let mut buf = Vec::new();
        write_bench(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,M,ms_no_refine,ms_refine,al_calls,refine_calls,K,correct,error"), "{text}");
    }

    #[test]
    fn methods_parse() {
        assert_eq!("PJT".parse::<Method>().unwrap(), Method::Pjt);
        assert!("fft".parse::<Method>().is_err());
        assert_eq!(Method::Ci.to_string(), "ci");
    }
}
