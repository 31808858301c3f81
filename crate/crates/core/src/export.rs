//! CSV dumps behind the figures: `arg a` over `G`, boundary samples and
//! tracked paths.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{BoundarySample, Side};
use crate::error::{Error, Result};
use crate::pipeline::{search_domain, PjtRun, SolverConfig};
use crate::scatter::{Analytic, FastA, Scatterer};
use crate::signal::SampledSignal;
use crate::tracker::TrajectoryResult;

/// Raster of `arg a` on cell centers of `G`, row-major from the real axis up.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgRaster {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl ArgRaster {
    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        let dx = (self.right - self.left) / self.nx as f64;
        let dy = self.top / self.ny as f64;
        Complex64::new(self.left + (ix as f64 + 0.5) * dx, (iy as f64 + 0.5) * dy)
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }
}

/// `arg a` sampled over the search domain of `signal`. A signal without
/// discrete spectrum gets the unit box and a constant zero raster.
pub fn arg_field(signal: &SampledSignal, cfg: &SolverConfig, nx: usize, ny: usize) -> Result<ArgRaster> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter(format!("raster size {nx}x{ny} must be positive")));
    }
    let Some((left, right, top, _)) = search_domain(signal, cfg)? else {
        return Ok(ArgRaster { left: -1.0, right: 1.0, top: 1.0, nx, ny, values: vec![0.0; nx * ny] });
    };
    let sc = Scatterer::standalone(signal);
    let fast = FastA(&sc);
    let mut raster = ArgRaster { left, right, top, nx, ny, values: vec![] };
    let points: Vec<Complex64> = (0..ny).flat_map(|iy| (0..nx).map(move |ix| (ix, iy))).map(|(ix, iy)| raster.point(ix, iy)).collect();
    raster.values = points.par_iter().map(|&z| fast.value(z).map(|a| a.arg())).collect::<Result<_>>()?;
    Ok(raster)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

#[derive(Serialize)]
struct FieldRow {
    re: f64,
    im: f64,
    arg: f64,
}

pub fn write_arg_field<W: Write>(raster: &ArgRaster, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for iy in 0..raster.ny {
        for ix in 0..raster.nx {
            let z = raster.point(ix, iy);
            w.serialize(FieldRow { re: z.re, im: z.im, arg: raster.get(ix, iy) }).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BoundaryRow {
    re: f64,
    im: f64,
    arg: f64,
    side: &'static str,
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Bottom => "bottom",
        Side::Right => "right",
        Side::Top => "top",
        Side::Left => "left",
    }
}

pub fn write_boundary<W: Write>(samples: &[BoundarySample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(BoundaryRow { re: s.z.re, im: s.z.im, arg: s.arg, side: side_name(s.side) }).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PathRow {
    trajectory: usize,
    step: usize,
    re: f64,
    im: f64,
}

/// One row per accepted step; needs paths recorded during tracking.
pub fn write_trajectories<W: Write>(trajectories: &[TrajectoryResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (id, t) in trajectories.iter().enumerate() {
        for (step, z) in t.path.iter().enumerate() {
            w.serialize(PathRow { trajectory: id, step: step + 1, re: z.re, im: z.im }).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Boundary and trajectory dumps of a finished run.
pub fn write_run<W1: Write, W2: Write>(run: &PjtRun, boundary: Option<W1>, trajectories: Option<W2>) -> Result<()> {
    if let Some(b) = boundary {
        write_boundary(&run.boundary, b)?;
    }
    if let Some(t) = trajectories {
        write_trajectories(&run.trajectories, t)?;
    }
    Ok(())
}
