//! Parameter scans: theta-u phase diagram, EP trajectories, OBC spectra and IPR curves.
//!
//! Every point is independent; results come back in axis order regardless of scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::lattice::{critical_points, ep1_locus, ep2_locus, ModelParams, ParamError};
use crate::realspace::{
    self, build_chain, class_ipr, detect_edge_modes, full_spectrum, Boundary, ChainSpec,
    EdgeCriteria, ModeClass, ModeReport, RealSpaceError,
};
use crate::topology::{classify_phase, PhaseCell, TopologyError};

pub const DEFAULT_GRID: usize = 101;
pub const DEFAULT_PHASE_NK: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("axis `{0}` must be nonempty and sorted ascending")]
    BadAxis(&'static str),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("cell theta={theta}, u={u}: {source}")]
    Cell { theta: f64, u: f64, source: TopologyError },
    #[error("u={u}: {source}")]
    Chain { u: f64, source: RealSpaceError },
}

/// n evenly spaced values from a to b inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<(), SweepError> {
    if axis.is_empty() || axis.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(SweepError::BadAxis(name));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub theta_axis: Vec<f64>,
    pub u_axis: Vec<f64>,
    /// `cells[i][j]` belongs to (theta_axis[i], u_axis[j]).
    pub cells: Vec<Vec<PhaseCell>>,
}

/// Classify every (theta, u) cell with `base` supplying w and delta.
pub fn phase_diagram(
    base: &ModelParams,
    theta_axis: &[f64],
    u_axis: &[f64],
    n_k: usize,
) -> Result<PhaseGrid, SweepError> {
    check_axis("theta", theta_axis)?;
    check_axis("u", u_axis)?;
    let nu = u_axis.len();
    let flat: Vec<PhaseCell> = (0..theta_axis.len() * nu)
        .into_par_iter()
        .map(|idx| {
            let (theta, u) = (theta_axis[idx / nu], u_axis[idx % nu]);
            let p = ModelParams::new(base.w(), base.delta(), theta, u)?;
            classify_phase(&p, n_k).map_err(|source| SweepError::Cell { theta, u, source })
        })
        .collect::<Result<_, _>>()?;
    let cells = flat.chunks(nu).map(|c| c.to_vec()).collect();
    Ok(PhaseGrid { theta_axis: theta_axis.to_vec(), u_axis: u_axis.to_vec(), cells })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EPTrajectory {
    pub theta: f64,
    pub u_axis: Vec<f64>,
    pub ep1_k: Vec<Option<f64>>,
    pub ep2_k: Vec<Option<f64>>,
}

pub fn ep_trajectories(base: &ModelParams, u_axis: &[f64]) -> Result<EPTrajectory, SweepError> {
    check_axis("u", u_axis)?;
    let mut ep1_k = Vec::with_capacity(u_axis.len());
    let mut ep2_k = Vec::with_capacity(u_axis.len());
    for &u in u_axis {
        let p = base.with_u(u)?;
        ep1_k.push(ep1_locus(&p));
        ep2_k.push(ep2_locus(&p));
    }
    Ok(EPTrajectory { theta: base.theta(), u_axis: u_axis.to_vec(), ep1_k, ep2_k })
}

impl EPTrajectory {
    /// Closest approach of the two loci, if it is within `tol`. The curves touch
    /// tangentially, so a first-crossing search would fire early.
    pub fn meeting_point(&self, tol: f64) -> Option<(f64, f64)> {
        self.u_axis
            .iter()
            .enumerate()
            .filter_map(|(i, &u)| match (self.ep1_k[i], self.ep2_k[i]) {
                (Some(a), Some(b)) => Some(((a - b).abs(), u, 0.5 * (a + b))),
                _ => None,
            })
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .filter(|m| m.0 <= tol)
            .map(|m| (m.1, m.2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObcSlice {
    pub u: f64,
    pub modes: Vec<ModeReport>,
}

impl ObcSlice {
    pub fn zero_edge_modes(&self) -> impl Iterator<Item = &ModeReport> {
        self.modes.iter().filter(|m| m.is_zero_mode && m.edge_side != realspace::EdgeSide::Bulk)
    }
}

fn obc_reports(p: &ModelParams, n_cells: usize, criteria: &EdgeCriteria) -> Result<Vec<ModeReport>, RealSpaceError> {
    let spec = ChainSpec::new(*p, n_cells, Boundary::Open)?;
    Ok(detect_edge_modes(&full_spectrum(&build_chain(&spec))?, criteria))
}

pub fn obc_spectrum_sweep(
    base: &ModelParams,
    u_axis: &[f64],
    n_cells: usize,
    criteria: &EdgeCriteria,
) -> Result<Vec<ObcSlice>, SweepError> {
    check_axis("u", u_axis)?;
    u_axis
        .par_iter()
        .map(|&u| {
            let p = base.with_u(u)?;
            let modes = obc_reports(&p, n_cells, criteria).map_err(|source| SweepError::Chain { u, source })?;
            Ok(ObcSlice { u, modes })
        })
        .collect()
}

/// Class IPRs at one u; `None` marks an absent class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IprPoint {
    pub u: f64,
    pub left_zero: Option<f64>,
    pub right_zero: Option<f64>,
    pub right_nonzero: Option<f64>,
}

pub fn ipr_sweep(
    base: &ModelParams,
    u_axis: &[f64],
    n_cells: usize,
    criteria: &EdgeCriteria,
) -> Result<Vec<IprPoint>, SweepError> {
    Ok(obc_spectrum_sweep(base, u_axis, n_cells, criteria)?
        .into_iter()
        .map(|s| IprPoint {
            u: s.u,
            left_zero: class_ipr(&s.modes, ModeClass::LeftZero),
            right_zero: class_ipr(&s.modes, ModeClass::RightZero),
            right_nonzero: class_ipr(&s.modes, ModeClass::RightNonzero),
        })
        .collect())
}

/// Closed-form (u1c, u2c) per theta row, for comparing against a PhaseGrid.
pub fn gapless_window(base: &ModelParams, theta: f64) -> Result<(f64, f64), SweepError> {
    let cp = critical_points(&base.with_theta(theta)?);
    Ok((cp.u1c, cp.u2c))
}
