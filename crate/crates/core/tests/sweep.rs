use std::f64::consts::PI;

use nhssh_core::lattice::{critical_points, ModelParams};
use nhssh_core::realspace::EdgeCriteria;
use nhssh_core::sweep::*;
use nhssh_core::topology::{PhaseLabel, GAP_TOL};

fn base(theta: f64) -> ModelParams {
    ModelParams::standard(theta, 0.0).unwrap()
}

#[test]
fn linspace_endpoints() {
    assert_eq!(linspace(0.0, 1.0, 0), Vec::<f64>::new());
    assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    let v = linspace(-PI, PI, 5);
    assert_eq!(v[0], -PI);
    assert_eq!(v[4], PI);
    assert!((v[2]).abs() < 1e-15);
}

#[test]
fn axes_are_validated() {
    let b = base(0.0);
    assert_eq!(phase_diagram(&b, &[], &[0.0], 256).unwrap_err(), SweepError::BadAxis("theta"));
    assert_eq!(phase_diagram(&b, &[0.0], &[1.0, 0.5], 256).unwrap_err(), SweepError::BadAxis("u"));
    assert_eq!(ep_trajectories(&b, &[1.0, f64::NAN]).unwrap_err(), SweepError::BadAxis("u"));
    assert!(matches!(
        phase_diagram(&b, &[0.0], &[-1.0], 256).unwrap_err(),
        SweepError::Param(_)
    ));
}

fn labels(theta: f64, us: &[f64]) -> Vec<PhaseLabel> {
    let g = phase_diagram(&base(0.0), &[theta], us, 256).unwrap();
    g.cells[0].iter().map(|c| c.label).collect()
}

#[test]
fn theta_half_pi_row() {
    let us = [0.0, 0.5, 1.0, 1.5, 1.99, 2.01, 2.5, 3.5];
    let want = [PhaseLabel::GL; 5].into_iter().chain([PhaseLabel::NTR; 3]).collect::<Vec<_>>();
    assert_eq!(labels(PI / 2.0, &us), want);
}

#[test]
fn theta_zero_row() {
    let us = [0.0, 1.0, 1.7, 1.72, 2.5, 3.1, 3.12, 4.0];
    use PhaseLabel::*;
    assert_eq!(labels(0.0, &us), vec![NTR, NTR, NTR, GL, GL, GL, NTR, NTR]);
}

#[test]
fn grid_layout_and_insulating_gap() {
    let th = linspace(-PI, PI, 5);
    let us = linspace(0.0, 4.0, 9);
    let g = phase_diagram(&base(0.0), &th, &us, 256).unwrap();
    assert_eq!(g.cells.len(), 5);
    assert!(g.cells.iter().all(|r| r.len() == 9));
    for (i, row) in g.cells.iter().enumerate() {
        let cp = critical_points(&base(th[i]));
        for (j, cell) in row.iter().enumerate() {
            assert_eq!(cell.label == PhaseLabel::GL, cp.in_gapless_window(us[j], 1e-9));
            if cell.label != PhaseLabel::GL {
                assert!(cell.min_gap > GAP_TOL, "cell ({},{}) {:?}", th[i], us[j], cell);
            }
        }
        // theta -> -theta
        assert_eq!(
            row.iter().map(|c| c.label).collect::<Vec<_>>(),
            g.cells[4 - i].iter().map(|c| c.label).collect::<Vec<_>>()
        );
    }
}

#[test]
fn ep_curves_meet_at_um_for_quarter_pi() {
    let us = linspace(0.0, 3.0, 3001);
    let tr = ep_trajectories(&base(PI / 4.0), &us).unwrap();
    let (u, _) = tr.meeting_point(1e-3).unwrap();
    assert!((u - 2.0445).abs() < 2e-3, "{u}");
    let cp = critical_points(&base(PI / 4.0));
    assert!((cp.um - 2.0445).abs() < 1e-3);
}

#[test]
fn ep_curves_never_meet_at_three_quarter_pi() {
    let us = linspace(0.0, 3.0, 3001);
    let tr = ep_trajectories(&base(3.0 * PI / 4.0), &us).unwrap();
    assert!(tr.meeting_point(1e-3).is_none());
    let last = us.iter().zip(&tr.ep2_k).filter(|(_, k)| k.is_some()).map(|(u, _)| *u).last().unwrap();
    assert!((last - 1.7242).abs() < 2e-3, "{last}");
}

#[test]
fn ep1_is_non_monotone_at_half_pi() {
    let us = linspace(0.0, 2.0, 401);
    let tr = ep_trajectories(&base(PI / 2.0), &us).unwrap();
    let ks: Vec<f64> = tr.ep1_k.iter().flatten().copied().collect();
    let (imin, kmin) = ks.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert!(imin > 0 && imin < ks.len() - 1, "minimum at the end of the axis");
    assert!(ks[0] > kmin + 0.1 && ks[ks.len() - 1] > kmin + 0.1);
}

#[test]
fn obc_sweep_zero_modes() {
    let crit = EdgeCriteria::default();
    let us = linspace(0.0, 4.0, 9);
    for s in obc_spectrum_sweep(&base(PI / 4.0), &us, 30, &crit).unwrap() {
        assert!(s.zero_edge_modes().count() >= 1, "u={}", s.u);
    }
    let cp = critical_points(&base(3.0 * PI / 4.0));
    let below: Vec<f64> = linspace(0.0, cp.u1c - 0.05, 5);
    for s in obc_spectrum_sweep(&base(3.0 * PI / 4.0), &below, 30, &crit).unwrap() {
        assert_eq!(s.zero_edge_modes().count(), 0, "u={}", s.u);
    }
    let s = &obc_spectrum_sweep(&base(0.5), &[0.0], 30, &crit).unwrap()[0];
    assert!(s.modes.iter().all(|m| m.eigenvalue.im.abs() < 1e-10));
}

#[test]
fn ipr_curves() {
    let crit = EdgeCriteria::default();
    let us = linspace(0.0, 4.0, 11);
    let pts = ipr_sweep(&base(PI / 4.0), &us, 50, &crit).unwrap();
    // right-zero weakens with u and is gone inside the gapless window
    let rz: Vec<f64> = pts.iter().map_while(|p| p.right_zero).collect();
    assert!(rz.len() >= 3 && rz.len() < pts.len());
    assert!(rz.windows(2).all(|w| w[1] < w[0]));
    // right-nonzero strengthens past the window
    let cp = critical_points(&base(PI / 4.0));
    let rn: Vec<f64> = pts.iter().filter(|p| p.u > cp.u2c).map(|p| p.right_nonzero.unwrap()).collect();
    assert!(rn.len() >= 2 && rn.windows(2).all(|w| w[1] > w[0]));
    let other = ipr_sweep(&base(3.0 * PI / 4.0), &us, 50, &crit).unwrap();
    assert!(other.iter().all(|p| p.right_zero.is_none()));
}

#[test]
fn sweeps_are_deterministic() {
    let th = linspace(0.0, PI, 3);
    let us = linspace(0.0, 4.0, 5);
    let a = phase_diagram(&base(0.0), &th, &us, 256).unwrap();
    let b = phase_diagram(&base(0.0), &th, &us, 256).unwrap();
    assert_eq!(a, b);
}
