//! Parameter sweeps of the three MSEs over the noisy component's shape.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mixture::GaussianMixture;
use super::mse::MseReport;
use super::TheoryError;
use crate::fmt::sig9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Mu2,
    Sigma2,
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(param: SweepParam, min: f64, max: f64, step: f64) -> Result<Self, TheoryError> {
        let axis = Self { param, min, max, step };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(TheoryError::InvalidGrid("axis bounds must be finite".into()));
        }
        if self.max < self.min {
            return Err(TheoryError::InvalidGrid(format!("axis max {} below min {}", self.max, self.min)));
        }
        if self.step <= 0.0 {
            return Err(TheoryError::InvalidGrid(format!("axis step {} must be positive", self.step)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid values `min + i * step`, endpoint included when it lies on the lattice.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.min + i as f64 * self.step).collect()
    }
}

/// Parameters held fixed across a sweep. Swept entries are overwritten per point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceBase {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub tau: f64,
    pub n: usize,
    pub k: usize,
}

impl SurfaceBase {
    fn mixture_at(&self, assignments: &[(SweepParam, f64)]) -> GaussianMixture {
        let mut gm = GaussianMixture {
            mu1: self.mu1,
            sigma1: self.sigma1,
            mu2: self.mu2,
            sigma2: self.sigma2,
            tau: self.tau,
        };
        for &(param, value) in assignments {
            match param {
                SweepParam::Mu2 => gm.mu2 = value,
                SweepParam::Sigma2 => gm.sigma2 = value,
                SweepParam::Tau => gm.tau = value,
            }
        }
        gm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceGrid {
    pub axes: Vec<Axis>,
    pub base: SurfaceBase,
    /// Row-major: the last axis varies fastest.
    pub reports: Vec<MseReport>,
}

impl SurfaceGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SURFACE_HEADER}")?;
        for r in &self.reports {
            write_report_row(&mut out, r)?;
        }
        Ok(())
    }
}

pub const SURFACE_HEADER: &str =
    "mu1,sigma1,mu2,sigma2,tau,n,k,mse_sgd,mse_mkl,mse_adk,mkl_beats_sgd,adk_beats_mkl";

pub fn write_report_row<W: Write>(out: &mut W, r: &MseReport) -> io::Result<()> {
    let p = &r.params;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        sig9(p.mu1),
        sig9(p.sigma1),
        sig9(p.mu2),
        sig9(p.sigma2),
        sig9(p.tau),
        r.n,
        r.k,
        sig9(r.mse_sgd),
        sig9(r.mse_mkl),
        sig9(r.mse_adk),
        u8::from(r.mkl_beats_sgd()),
        u8::from(r.adk_beats_mkl()),
    )
}

/// Evaluates an [`MseReport`] at every point of a one- or two-axis grid.
/// Points are computed in parallel; the output order is fixed.
pub fn mse_surface(axes: &[Axis], base: &SurfaceBase) -> Result<SurfaceGrid, TheoryError> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(TheoryError::InvalidGrid(format!("expected 1 or 2 axes, got {}", axes.len())));
    }
    if axes.len() == 2 && axes[0].param == axes[1].param {
        return Err(TheoryError::InvalidGrid("both axes sweep the same parameter".into()));
    }
    for a in axes {
        a.validate()?;
    }
    base.mixture_at(&[]).validate()?;

    let values: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
    let points: Vec<Vec<(SweepParam, f64)>> = match values.as_slice() {
        [only] => only.iter().map(|&v| vec![(axes[0].param, v)]).collect(),
        [outer, inner] => outer
            .iter()
            .flat_map(|&a| inner.iter().map(move |&b| vec![(axes[0].param, a), (axes[1].param, b)]))
            .collect(),
        _ => unreachable!(),
    };

    let reports = points
        .par_iter()
        .map(|assign| {
            let gm = base.mixture_at(assign);
            gm.validate()?;
            MseReport::compute(&gm, base.n, base.k)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SurfaceGrid { axes: axes.to_vec(), base: *base, reports })
}
