//! One function per subcommand, each producing a Table.

use std::f64::consts::PI;

use nhssh_core::lattice::{analytic_eigenvalues, critical_points, ModelParams, ParamError};
use nhssh_core::realspace::{
    build_chain, detect_edge_modes, full_spectrum, robustness_trial, Boundary, ChainSpec, DisorderSpec,
    EdgeCriteria, EdgeSide, RealSpaceError,
};
use nhssh_core::sweep::{ep_trajectories, ipr_sweep, linspace, obc_spectrum_sweep, phase_diagram, SweepError};
use nhssh_core::topology::{all_band_winding, occupied_bands, track_bands, zak_phase, TopologyError};

use crate::config::{Command, RunConfig};
use crate::emit::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    RealSpace(#[from] RealSpaceError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

pub fn params(c: &RunConfig) -> Result<ModelParams, ParamError> {
    ModelParams::new(c.w, c.delta, c.theta, c.u)
}

fn criteria(c: &RunConfig) -> EdgeCriteria {
    EdgeCriteria { zero_tol: c.zero_tol, edge_fraction: c.edge_fraction, ipr_floor: c.ipr_floor }
}

fn u_axis(c: &RunConfig) -> Vec<f64> {
    linspace(c.u_min, c.u_max, c.n_u)
}

fn side(s: EdgeSide) -> Value {
    match s {
        EdgeSide::Left => "left".into(),
        EdgeSide::Right => "right".into(),
        EdgeSide::Bulk => "bulk".into(),
    }
}

pub fn run(c: &RunConfig) -> Result<Table, RunError> {
    match c.subcommand {
        Command::Bands => bands(c),
        Command::Zak => zak(c),
        Command::PhaseDiagram => phase(c),
        Command::Obc => obc(c),
        Command::ComparePbcObc => compare(c),
        Command::Ipr => ipr(c),
        Command::Robustness => robustness(c),
        Command::EpTrace => ep_trace(c),
        Command::CriticalPoints => critical(c),
    }
}

/// Bands 1, 2 are +sqrt(t+), +sqrt(t-); bands 3, 4 their negatives.
fn bands(c: &RunConfig) -> Result<Table, RunError> {
    let p = params(c)?;
    let mut t = Table::new(&["k", "band", "re_z", "im_z"]);
    for k in linspace(-PI, PI, c.n_k) {
        for (n, z) in analytic_eigenvalues(&p, k).iter().enumerate() {
            t.push(vec![k.into(), (n + 1).into(), z.re.into(), z.im.into()]);
        }
    }
    Ok(t)
}

fn zak(c: &RunConfig) -> Result<Table, RunError> {
    let p = params(c)?;
    let cols = ["subset", "bands", "omega", "winding", "integer_class", "distance", "gapless_flag", "refined_points"];
    let mut t = Table::new(&cols);
    let all = all_band_winding(&p, c.n_k)?;
    t.push(vec![
        "all".into(),
        "1 2 3 4".into(),
        all.omega.into(),
        all.winding.into(),
        all.integer_class.into(),
        all.distance.into(),
        all.ep_on_loop.into(),
        all.refined_points.into(),
    ]);
    let tracked = track_bands(&p, c.n_k)?;
    let occ = occupied_bands(&tracked);
    let z = zak_phase(&tracked, &occ)?;
    let list = occ.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ");
    t.push(vec![
        "occupied".into(),
        list.as_str().into(),
        z.omega.into(),
        z.winding.into(),
        z.integer_class.into(),
        z.distance.into(),
        z.gapless_flag.into(),
        z.refined_points.into(),
    ]);
    Ok(t)
}

fn phase(c: &RunConfig) -> Result<Table, RunError> {
    let p = params(c)?;
    let grid = phase_diagram(&p, &linspace(c.theta_min, c.theta_max, c.n_theta), &u_axis(c), c.n_k)?;
    let cols = ["theta", "u", "label", "min_gap", "winding", "gapless_flag", "closed_form_gapless", "numeric_gapless"];
    let mut t = Table::new(&cols);
    for (i, row) in grid.cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            t.push(vec![
                grid.theta_axis[i].into(),
                grid.u_axis[j].into(),
                cell.label.as_str().into(),
                cell.min_gap.into(),
                cell.winding.into(),
                cell.gapless_flag.into(),
                cell.closed_form_gapless.into(),
                cell.numeric_gapless.into(),
            ]);
        }
    }
    Ok(t)
}

const MODE_COLS: [&str; 6] = ["index", "re_z", "im_z", "ipr", "edge_side", "is_zero_mode"];

fn obc(c: &RunConfig) -> Result<Table, RunError> {
    let p = params(c)?;
    let slices = obc_spectrum_sweep(&p, &u_axis(c), c.n_cells, &criteria(c))?;
    let mut cols = vec!["u"];
    cols.extend(MODE_COLS);
    let mut t = Table::new(&cols);
    for s in &slices {
        for m in &s.modes {
            t.push(vec![
                s.u.into(),
                m.index.into(),
                m.eigenvalue.re.into(),
                m.eigenvalue.im.into(),
                m.ipr.into(),
                side(m.edge_side),
                m.is_zero_mode.into(),
            ]);
        }
    }
    Ok(t)
}

/// Open chain, periodic chain and the Bloch spectrum sampled at k = 2 pi m / N.
fn compare(c: &RunConfig) -> Result<Table, RunError> {
    let p = params(c)?;
    let crit = criteria(c);
    let mut cols = vec!["source"];
    cols.extend(MODE_COLS);
    let mut t = Table::new(&cols);
    for (name, boundary) in [("open", Boundary::Open), ("periodic", Boundary::Periodic)] {
        let spec = ChainSpec::new(p, c.n_cells, boundary)?;
        for m in detect_edge_modes(&full_spectrum(&build_chain(&spec))?, &crit) {
            t.push(vec![
                name.into(),
                m.index.into(),
                m.eigenvalue.re.into(),
                m.eigenvalue.im.into(),
                m.ipr.into(),
                side(m.edge_side),
                m.is_zero_mode.into(),
            ]);
        }
    }
    let n = c.n_cells;
    let mut index = 0usize;
    for m in 0..n {
        let k = 2.0 * PI * m as f64 / n as f64;
        for z in analytic_eigenvalues(&p, k) {
            t.push(vec![
                "bloch".into(),
                index.into(),
                z.re.into(),
                z.im.into(),
                Value::Null,
                Value::Null,
                (z.re.abs() < c.zero_tol).into(),
            ]);
            index += 1;
        }
    }
    Ok(t)
}

fn ipr(c: &RunConfig) -> Result<Table, RunError> {
    let p = params(c)?;
    let mut t = Table::new(&["u", "left_zero", "right_zero", "right_nonzero"]);
    for pt in ipr_sweep(&p, &u_axis(c), c.n_cells, &criteria(c))? {
        t.push(vec![pt.u.into(), pt.left_zero.into(), pt.right_zero.into(), pt.right_nonzero.into()]);
    }
    Ok(t)
}

fn robustness(c: &RunConfig) -> Result<Table, RunError> {
    let p = params(c)?;
    let spec = ChainSpec::new(p, c.n_cells, Boundary::Open)?;
    let d = DisorderSpec::new(c.sigma, c.seed, c.trials)?;
    let rep = robustness_trial(&spec, &d, &criteria(c))?;
    let failed = rep.trials.iter().filter(|t| t.error.is_some()).count();
    let cols = ["class", "unperturbed_ipr", "survival", "strict_survival", "trials", "failed_trials"];
    let mut t = Table::new(&cols);
    for s in &rep.classes {
        t.push(vec![
            s.class.as_str().into(),
            s.unperturbed_ipr.into(),
            s.survival.into(),
            s.strict_survival.into(),
            c.trials.into(),
            failed.into(),
        ]);
    }
    Ok(t)
}

fn ep_trace(c: &RunConfig) -> Result<Table, RunError> {
    let p = params(c)?;
    let tr = ep_trajectories(&p, &u_axis(c))?;
    let mut t = Table::new(&["u", "ep1_k", "ep2_k"]);
    for (i, &u) in tr.u_axis.iter().enumerate() {
        t.push(vec![u.into(), tr.ep1_k[i].into(), tr.ep2_k[i].into()]);
    }
    Ok(t)
}

fn critical(c: &RunConfig) -> Result<Table, RunError> {
    let p = params(c)?;
    let (w1, w2) = p.hoppings();
    let cp = critical_points(&p);
    let mut t = Table::new(&["theta", "w1", "w2", "u1c", "um", "u2c"]);
    t.push(vec![p.theta().into(), w1.into(), w2.into(), cp.u1c.into(), cp.um.into(), cp.u2c.into()]);
    Ok(t)
}
