use std::f64::consts::PI;

use nhssh_core::eigen::eig;
use nhssh_core::lattice::*;
use nhssh_core::topology::*;
use nhssh_core::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(theta: f64, u: f64) -> ModelParams {
    ModelParams::standard(theta, u).unwrap()
}

fn matvec(h: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [C64::new(0.0, 0.0); 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] += h[i][j] * v[j];
        }
    }
    out
}

fn vecmat(v: &Vec4, h: &Mat4) -> Vec4 {
    let mut out = [C64::new(0.0, 0.0); 4];
    for j in 0..4 {
        for i in 0..4 {
            out[j] += v[i] * h[i][j];
        }
    }
    out
}

/// Winding of det q(k), q the (a, c) x (b, d) block, on a fine grid. Valid only at u = 0.
fn hermitian_winding(params: &ModelParams) -> f64 {
    let n = 4096;
    let det_q = |k: f64| {
        let h = *bloch_hamiltonian(params, k).entries();
        h[0][1] * h[2][3] - h[0][3] * h[2][1]
    };
    let mut acc = 0.0;
    for j in 0..n {
        let k0 = -PI + 2.0 * PI * j as f64 / n as f64;
        let k1 = k0 + 2.0 * PI / n as f64;
        acc += (det_q(k1) / det_q(k0)).arg();
    }
    acc / (2.0 * PI)
}

/// Brute-force all-band winding: dense eigenvectors scaled to last component 1, then
/// -(1/2pi) sum (1/2) arg((det Psi_{j+1} / det Psi_j)^2) on a uniform grid.
fn dense_det_winding(params: &ModelParams, n: usize) -> f64 {
    let det_psi = |k: f64| {
        let m = nhssh_core::eigen::to_faer(bloch_hamiltonian(params, k).entries());
        let (_, u) = eig(m.as_ref()).unwrap();
        let cols: Vec<Vec4> = (0..4)
            .map(|c| {
                let v4 = u[(3, c)];
                [u[(0, c)] / v4, u[(1, c)] / v4, u[(2, c)] / v4, C64::new(1.0, 0.0)]
            })
            .collect();
        let mut mat = [[C64::new(0.0, 0.0); 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                mat[r][c] = cols[c][r];
            }
        }
        nhssh_core::eigen::det4(&mat)
    };
    let dets: Vec<C64> = (0..=n).map(|j| det_psi(-PI + 2.0 * PI * j as f64 / n as f64)).collect();
    let mut acc = 0.0;
    for j in 0..n {
        let r = dets[j + 1] / dets[j];
        acc -= 0.5 * (r * r).arg();
    }
    acc / (2.0 * PI)
}

#[test]
fn eigenpairs_are_biorthonormal_and_solve_h() {
    for &(th, u, k) in &[(0.0, 0.5, 0.4), (PI / 4.0, 3.0, -2.2), (3.0 * PI / 4.0, 0.5, 1.0), (PI / 2.0, 2.5, 3.0)] {
        let params = p(th, u);
        let h = *bloch_hamiltonian(&params, k).entries();
        let pt = bloch_eigenpairs(&params, k).unwrap();
        assert!(!pt.self_orthogonal);
        for (m, a) in pt.pairs.iter().enumerate() {
            let hr = matvec(&h, &a.right);
            let lh = vecmat(&a.left, &h);
            for i in 0..4 {
                assert!((hr[i] - a.value * a.right[i]).norm() < 1e-9, "right th={th} u={u} k={k}");
                assert!((lh[i] - a.value * a.left[i]).norm() < 1e-9, "left th={th} u={u} k={k}");
            }
            for (n, b) in pt.pairs.iter().enumerate() {
                let o: C64 = (0..4).map(|i| a.left[i] * b.right[i]).sum();
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((o - want).norm() < 1e-10, "overlap {m}{n} = {o}");
            }
        }
    }
}

#[test]
fn closed_form_vector_solves_h() {
    let params = p(PI / 4.0, 1.7);
    let k = 0.9;
    let h = *bloch_hamiltonian(&params, k).entries();
    for z in analytic_eigenvalues(&params, k) {
        let v = analytic_right_eigenvector(&params, k, z).unwrap();
        let hv = matvec(&h, &v);
        let scale = norm(&v);
        for i in 0..4 {
            assert!((hv[i] - z * v[i]).norm() < 1e-10 * scale);
        }
    }
}

#[test]
fn self_orthogonality_at_eps() {
    let params = p(PI / 4.0, 0.5);
    let c = check_exceptional_point(&params, EpKind::Ep1).unwrap().unwrap();
    assert!(c.splitting < 1e-6, "{c:?}");
    assert!(c.self_orthogonal, "{c:?}");
    let params = p(PI / 2.0, 1.0);
    let c = check_exceptional_point(&params, EpKind::Ep2).unwrap().unwrap();
    assert!(c.splitting < 1e-6 && c.self_orthogonal, "{c:?}");
    // no EP2 above u2c
    assert!(check_exceptional_point(&p(PI / 4.0, 3.0), EpKind::Ep2).unwrap().is_none());
}

#[test]
fn hermitian_limit_matches_block_winding() {
    for th in [0.0, PI / 4.0, 3.0 * PI / 4.0, -PI / 3.0, 2.5] {
        let params = p(th, 0.0);
        // det q carries e^{-ik}, so its orientation is opposite; compare magnitudes
        let oracle = hermitian_winding(&params).round().abs() as i64;
        let lw = all_band_winding(&params, 256).unwrap();
        assert_eq!(lw.integer_class, oracle, "th={th}: {lw:?}");
        assert!(lw.distance < 1e-6, "th={th}: {lw:?}");
    }
}

#[test]
fn all_band_winding_matches_dense_brute_force() {
    for &(th, u) in &[(PI / 4.0, 3.0), (PI / 2.0, 3.0), (3.0 * PI / 4.0, 3.0), (0.0, 0.8), (3.0 * PI / 4.0, 0.5)] {
        let params = p(th, u);
        let oracle = dense_det_winding(&params, 8000);
        let lw = all_band_winding(&params, 512).unwrap();
        assert!((oracle - oracle.round()).abs() < 1e-6, "oracle not integer at th={th} u={u}: {oracle}");
        assert_eq!(lw.integer_class, oracle.round() as i64, "th={th} u={u}");
        assert!(lw.distance < 1e-6);
    }
}

#[test]
fn tracked_and_direct_paths_agree() {
    for &(th, u) in &[(PI / 4.0, 0.5), (PI / 4.0, 3.0), (3.0 * PI / 4.0, 0.5)] {
        let params = p(th, u);
        let bands = track_bands(&params, 512).unwrap();
        let z = zak_phase(&bands, &ALL_BANDS).unwrap();
        let lw = all_band_winding(&params, 512).unwrap();
        assert!((z.omega - lw.omega).abs() < 1e-9, "th={th} u={u}");
    }
}

#[test]
fn tracked_bands_are_continuous_away_from_eps() {
    let bands = track_bands(&p(3.0 * PI / 4.0, 0.3), 256).unwrap();
    assert_eq!(bands.flagged_count(), 0);
    for j in 0..bands.n_k() - 1 {
        for s in 0..4 {
            let jump = (bands.points[j + 1].pairs[s].value - bands.points[j].pairs[s].value).norm();
            assert!(jump < 0.1, "slot {s} jumps {jump} at j={j}");
        }
    }
}

fn rescale(bands: &mut BandSet, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for pt in bands.points.iter_mut() {
        for pair in pt.pairs.iter_mut() {
            let c = C64::from_polar(rng.random_range(0.2..5.0), rng.random_range(-PI..PI));
            for i in 0..4 {
                pair.right[i] *= c;
                pair.left[i] /= c;
            }
        }
    }
}

#[test]
fn wilson_loop_is_gauge_invariant() {
    let params = p(PI / 4.0, 3.0);
    let bands = track_bands(&params, 256).unwrap();
    let occ = occupied_bands(&bands);
    let before_all = zak_phase(&bands, &ALL_BANDS).unwrap().omega;
    let before_occ = zak_phase(&bands, &occ).unwrap().omega;
    let raw_before = raw_wilson_loop(&bands, &occ);
    let mut moved = bands.clone();
    rescale(&mut moved, 7);
    assert!((zak_phase(&moved, &ALL_BANDS).unwrap().omega - before_all).abs() < 1e-6);
    assert!((zak_phase(&moved, &occ).unwrap().omega - before_occ).abs() < 1e-6);
    // the uncanonicalized loop only keeps its value mod 2 pi
    let d = (raw_wilson_loop(&moved, &occ) - raw_before) / (2.0 * PI);
    assert!((d - d.round()).abs() < 1e-6, "{d}");
}

#[test]
fn phase_labels_at_reference_points() {
    let cases = [
        (PI / 2.0, 1.0, PhaseLabel::GL),
        (PI / 2.0, 3.0, PhaseLabel::NTR),
        (0.0, 1.0, PhaseLabel::NTR),
        (0.0, 2.0, PhaseLabel::GL),
        (0.0, 3.5, PhaseLabel::NTR),
        (3.0 * PI / 4.0, 0.5, PhaseLabel::TR),
        (3.0 * PI / 4.0, 3.0, PhaseLabel::NTR),
        (PI / 4.0, 0.5, PhaseLabel::NTR),
    ];
    for (th, u, want) in cases {
        let cell = classify_phase(&p(th, u), 256).unwrap();
        assert_eq!(cell.label, want, "th={th} u={u}: {cell:?}");
        if want != PhaseLabel::GL {
            assert!(cell.min_gap > GAP_TOL, "insulating cell with small gap: {cell:?}");
        }
    }
}

#[test]
fn input_errors() {
    let params = p(0.0, 0.5);
    assert!(matches!(all_band_winding(&params, 10), Err(TopologyError::GridTooSmall { .. })));
    assert!(matches!(classify_phase(&params, 128), Err(TopologyError::GridTooSmall { .. })));
    let bands = track_bands(&params, 64).unwrap();
    for bad in [&[][..], &[0][..], &[5][..], &[1, 1][..]] {
        assert_eq!(zak_phase(&bands, bad).unwrap_err(), TopologyError::BadSubset);
    }
}

#[test]
fn midpoint_grid_avoids_zone_edges() {
    let g = k_grid(4);
    assert_eq!(g.len(), 4);
    assert!((g[0] + 3.0 * PI / 4.0).abs() < 1e-15);
    assert!((g[3] - 3.0 * PI / 4.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn insulating_windings_are_integers(th in -PI..PI, s in 0.0f64..1.0) {
        let cp = critical_points(&p(th, 0.0));
        // sample either below the window or above it, keeping clear of both edges
        let u = if s < 0.5 { (cp.u1c - 0.05).max(0.0) * 2.0 * s } else { cp.u2c + 0.05 + 3.0 * (s - 0.5) };
        prop_assume!(!cp.in_gapless_window(u, 0.02));
        let lw = all_band_winding(&p(th, u), 256).unwrap();
        prop_assert!(lw.distance < 0.05, "th={} u={} {:?}", th, u, lw);
    }

    #[test]
    fn winding_ignores_theta_sign(th in 0.0f64..PI, u in 0.0f64..4.0) {
        let a = all_band_winding(&p(th, u), 256).unwrap();
        let b = all_band_winding(&p(-th, u), 256).unwrap();
        prop_assert_eq!(a.omega, b.omega);
    }

    #[test]
    fn random_rescaling_leaves_omega(seed in any::<u64>()) {
        let bands = track_bands(&p(0.0, 0.5), 128).unwrap();
        let before = zak_phase(&bands, &ALL_BANDS).unwrap().omega;
        let mut moved = bands.clone();
        rescale(&mut moved, seed);
        prop_assert!((zak_phase(&moved, &ALL_BANDS).unwrap().omega - before).abs() < 1e-6);
    }
}
