//! Biorthogonal eigenpairs, band tracking over the Brillouin zone, the Wilson-loop
//! Zak phase and the TR / NTR / GL classification.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::eigen::{self, EigenError};
use crate::lattice::{
    self, bloch_hamiltonian, critical_points, ep1_locus, ep2_locus, Mat4,
    ModelParams, PERMS4,
};

pub type Vec4 = [C64; 4];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Below this |z(1+e^{ik}) - iu| the closed-form eigenvector is not used.
pub const DENOMINATOR_TOL: f64 = 1e-8;
/// Relative |phi psi| below which a pair counts as self-orthogonal.
pub const SELF_ORTHOGONAL_TOL: f64 = 1e-8;
/// Relative off-diagonal overlap allowed on input to `biorthonormalize`.
pub const OFF_DIAGONAL_TOL: f64 = 1e-6;
/// Assignment margin under which a k-step is flagged as an EP neighbourhood.
pub const MARGIN_TOL: f64 = 1e-3;
pub const MIN_TRACK_POINTS: usize = 64;
pub const MIN_CLASSIFY_POINTS: usize = 256;
/// Gap tolerance for the numeric gapless indicator.
pub const GAP_TOL: f64 = 1e-3;
/// The Hermitian point is evaluated as the limit u -> 0+ at this u / w.
pub const U_REGULATOR: f64 = 1e-6;

const MATCH_TOL: f64 = 1e-6;
const LINK_MAX: f64 = 0.3;
const MIN_STEP: f64 = 1e-14;
const MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("closed-form eigenvector denominator |z(1+e^ik) - iu| = {0:e} is below 1e-8")]
    DegenerateFormula(f64),
    #[error("band identity between k and -k is ambiguous near z = {0}")]
    IdentityMismatch(C64),
    #[error("band {band} is self-orthogonal (|phi psi| / |phi||psi| = {overlap:e})")]
    SelfOrthogonal { band: usize, overlap: f64 },
    #[error("overlap between bands {m} and {n} is {ratio:e} of the diagonal")]
    NotBiorthogonal { m: usize, n: usize, ratio: f64 },
    #[error("k-grid of {got} points is below the minimum of {min}")]
    GridTooSmall { got: usize, min: usize },
    #[error("band subset must be nonempty indices in 1..=4 without repeats")]
    BadSubset,
    #[error("winding {winding} is {distance} away from the nearest integer")]
    Unresolved { winding: f64, distance: f64 },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochEigenpair {
    /// 1..=4
    pub band_index: usize,
    pub value: C64,
    pub right: Vec4,
    pub left: Vec4,
}

pub fn dot(a: &Vec4, b: &Vec4) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &Vec4) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn scale(a: &Vec4, s: C64) -> Vec4 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

fn mat_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [ZERO; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = dot(row, v);
    }
    out
}

fn vec_mat(v: &Vec4, m: &Mat4) -> Vec4 {
    let mut out = [ZERO; 4];
    for (j, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|i| v[i] * m[i][j]).sum();
    }
    out
}

/// ||H psi - z psi|| / (||H|| ||psi||)
pub fn right_residual(params: &ModelParams, k: f64, z: C64, psi: &Vec4) -> f64 {
    let h = bloch_hamiltonian(params, k);
    let hp = mat_vec(h.entries(), psi);
    let r: Vec4 = std::array::from_fn(|i| hp[i] - z * psi[i]);
    norm(&r) / (lattice::frobenius(h.entries()) * norm(psi))
}

/// ||phi H - z phi|| / (||H|| ||phi||)
pub fn left_residual(params: &ModelParams, k: f64, z: C64, phi: &Vec4) -> f64 {
    let h = bloch_hamiltonian(params, k);
    let ph = vec_mat(phi, h.entries());
    let r: Vec4 = std::array::from_fn(|i| ph[i] - z * phi[i]);
    norm(&r) / (lattice::frobenius(h.entries()) * norm(phi))
}

/// Closed-form right eigenvector with fourth component 1.
pub fn analytic_right_eigenvector(
    params: &ModelParams,
    k: f64,
    z: C64,
) -> Result<Vec4, TopologyError> {
    let (w1, w2) = params.hoppings();
    let iu = C64::new(0.0, params.u());
    let e = C64::from_polar(1.0, k);
    let den = z * (ONE + e) - iu;
    if den.norm() < DENOMINATOR_TOL {
        return Err(TopologyError::DegenerateFormula(den.norm()));
    }
    let (a, b) = (w1 * w1, w2 * w2);
    let z2 = z * z;
    let p1 = (z2 - a + b * e.conj()) / (w2 * den);
    let p2 = (z2 * z - iu * z2 - (a + b) * z + iu * a) / (w1 * w2 * den);
    let p3 = (z * (z - iu) + a * e - b) / (w1 * den);
    Ok([p1, p2, p3, ONE])
}

/// Right eigenvector in the gauge psi_4 = 1: the closed form when it is well conditioned,
/// otherwise the numeric vector rescaled.
fn canonical_right(params: &ModelParams, k: f64, z: C64, numeric: &Vec4) -> Vec4 {
    if let Ok(a) = analytic_right_eigenvector(params, k, z) {
        if right_residual(params, k, z, &a) <= 1e-10 {
            return a;
        }
    }
    canonicalize(numeric)
}

fn canonicalize(v: &Vec4) -> Vec4 {
    let n = norm(v);
    if v[3].norm() > 1e-300 && v[3].norm() > 1e-14 * n {
        scale(v, ONE / v[3])
    } else {
        scale(v, C64::new(1.0 / n, 0.0))
    }
}

struct Spectrum {
    values: [C64; 4],
    vectors: [Vec4; 4],
}

fn spectrum(params: &ModelParams, k: f64) -> Result<Spectrum, EigenError> {
    let h = bloch_hamiltonian(params, k);
    let (vals, u) = eigen::eig(eigen::to_faer(h.entries()).as_ref())?;
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&a, &b| {
        vals[a]
            .re
            .total_cmp(&vals[b].re)
            .then(vals[a].im.total_cmp(&vals[b].im))
    });
    let values = idx.map(|i| vals[i]);
    let vectors = idx.map(|c| std::array::from_fn(|r| u[(r, c)]));
    Ok(Spectrum { values, vectors })
}

fn match_energy(values: &[C64; 4], z: C64) -> Result<usize, TopologyError> {
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| (values[a] - z).norm().total_cmp(&(values[b] - z).norm()));
    let scale = 1.0 + z.norm();
    let best = (values[order[0]] - z).norm();
    let second = (values[order[1]] - z).norm();
    if best > MATCH_TOL * scale || second < MATCH_TOL * scale {
        return Err(TopologyError::IdentityMismatch(z));
    }
    Ok(order[0])
}

/// phi(k) = psi(-k)^T for the band with energy `z`, in the gauge psi_4(-k) = 1.
///
/// The band is identified by its energy, which is even in k.
pub fn left_eigenvector(params: &ModelParams, k: f64, z: C64) -> Result<Vec4, TopologyError> {
    let s = spectrum(params, -k)?;
    let m = match_energy(&s.values, z)?;
    Ok(canonical_right(params, -k, s.values[m], &s.vectors[m]))
}

/// Rescale psi so that phi_n psi_n = 1; phi is left untouched.
pub fn biorthonormalize(
    pairs: [BlochEigenpair; 4],
) -> Result<[BlochEigenpair; 4], TopologyError> {
    let mut overlaps = [ZERO; 4];
    for (n, p) in pairs.iter().enumerate() {
        let o = dot(&p.left, &p.right);
        let rel = o.norm() / (norm(&p.left) * norm(&p.right));
        if !(rel >= SELF_ORTHOGONAL_TOL) {
            return Err(TopologyError::SelfOrthogonal { band: p.band_index, overlap: rel });
        }
        overlaps[n] = o;
    }
    for m in 0..4 {
        for n in 0..4 {
            if m == n {
                continue;
            }
            let ratio = dot(&pairs[m].left, &pairs[n].right).norm()
                / overlaps[m].norm().max(overlaps[n].norm());
            if ratio > OFF_DIAGONAL_TOL {
                return Err(TopologyError::NotBiorthogonal {
                    m: pairs[m].band_index,
                    n: pairs[n].band_index,
                    ratio,
                });
            }
        }
    }
    let mut out = pairs;
    for (p, o) in out.iter_mut().zip(overlaps) {
        p.right = scale(&p.right, ONE / o);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KPoint {
    pub k: f64,
    pub pairs: [BlochEigenpair; 4],
    /// Some pair failed the biorthonormalization (EP at this k); pairs are left raw.
    pub self_orthogonal: bool,
}

fn inverse_rows(right: &[Vec4; 4]) -> [Vec4; 4] {
    let r: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| right[j][i]));
    eigen::inverse4(&r)
}

/// The four biorthonormal eigenpairs at k, sorted by (Re z, Im z).
pub fn bloch_eigenpairs(params: &ModelParams, k: f64) -> Result<KPoint, TopologyError> {
    let s = spectrum(params, k)?;
    let sm = spectrum(params, -k)?;
    let right: [Vec4; 4] =
        std::array::from_fn(|n| canonical_right(params, k, s.values[n], &s.vectors[n]));
    let matched: Result<Vec<usize>, _> = s.values.iter().map(|&z| match_energy(&sm.values, z)).collect();
    let left: [Vec4; 4] = match matched {
        Ok(m) if distinct(&m) => std::array::from_fn(|n| {
            let j = m[n];
            canonical_right(params, -k, sm.values[j], &sm.vectors[j])
        }),
        // ambiguous identity across +-k: rows of the inverse are the dual basis
        _ => inverse_rows(&right),
    };
    let raw: [BlochEigenpair; 4] = std::array::from_fn(|n| BlochEigenpair {
        band_index: n + 1,
        value: s.values[n],
        right: right[n],
        left: left[n],
    });
    match biorthonormalize(raw) {
        Ok(pairs) => Ok(KPoint { k, pairs, self_orthogonal: false }),
        Err(TopologyError::SelfOrthogonal { .. }) => {
            Ok(KPoint { k, pairs: raw, self_orthogonal: true })
        }
        Err(TopologyError::NotBiorthogonal { .. }) => {
            let dual = inverse_rows(&right);
            let mut pairs = raw;
            for (p, l) in pairs.iter_mut().zip(dual) {
                p.left = l;
            }
            Ok(KPoint { k, pairs, self_orthogonal: false })
        }
        Err(e) => Err(e),
    }
}

fn distinct(m: &[usize]) -> bool {
    (0..m.len()).all(|i| (i + 1..m.len()).all(|j| m[i] != m[j]))
}

/// Midpoint grid k_j = -pi + 2 pi (j + 1/2) / n; avoids k = 0 and k = +-pi.
pub fn k_grid(n_k: usize) -> Vec<f64> {
    (0..n_k)
        .map(|j| -PI + 2.0 * PI * (j as f64 + 0.5) / n_k as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSet {
    pub params: ModelParams,
    pub k_grid: Vec<f64>,
    /// Slot n at point j continues slot n at point j-1.
    pub points: Vec<KPoint>,
    /// `ep_flags[j]`: the step from j-1 to j had an assignment margin below 1e-3.
    /// Index 0 refers to the wrap-around step.
    pub ep_flags: Vec<bool>,
    /// Slot n at the last point continues as slot `closure[n]` at the first point.
    pub closure: [usize; 4],
}

impl BandSet {
    pub fn n_k(&self) -> usize {
        self.k_grid.len()
    }

    pub fn flagged_count(&self) -> usize {
        self.ep_flags.iter().filter(|&&f| f).count()
    }

    pub fn any_self_orthogonal(&self) -> bool {
        self.points.iter().any(|p| p.self_orthogonal)
    }

    /// Smallest |z| over the grid: the distance of the spectrum from zero energy.
    pub fn min_gap(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.pairs.iter().map(|q| q.value.norm()))
            .fold(f64::INFINITY, f64::min)
    }
}

fn best_assignment(prev: &KPoint, next: &KPoint) -> ([usize; 4], f64) {
    let mut o = [[0.0; 4]; 4];
    for (m, a) in prev.pairs.iter().enumerate() {
        let na = norm(&a.left);
        for (n, b) in next.pairs.iter().enumerate() {
            o[m][n] = dot(&a.left, &b.right).norm() / (na * norm(&b.right));
        }
    }
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut second = f64::NEG_INFINITY;
    for (i, p) in PERMS4.iter().enumerate() {
        let s: f64 = (0..4).map(|m| o[m][p[m]]).sum();
        if s > best.0 {
            second = best.0;
            best = (s, i);
        } else if s > second {
            second = s;
        }
    }
    (PERMS4[best.1], best.0 - second)
}

/// Eigenpairs on the midpoint grid with band identity continued by maximal overlap.
pub fn track_bands(params: &ModelParams, n_k: usize) -> Result<BandSet, TopologyError> {
    if n_k < MIN_TRACK_POINTS {
        return Err(TopologyError::GridTooSmall { got: n_k, min: MIN_TRACK_POINTS });
    }
    let grid = k_grid(n_k);
    let mut points = Vec::with_capacity(n_k);
    let mut ep_flags = vec![false; n_k];
    for (j, &k) in grid.iter().enumerate() {
        let mut pt = bloch_eigenpairs(params, k)?;
        if let Some(prev) = points.last() {
            let (perm, margin) = best_assignment(prev, &pt);
            ep_flags[j] = margin < MARGIN_TOL;
            let pairs = pt.pairs;
            pt.pairs = std::array::from_fn(|m| BlochEigenpair { band_index: m + 1, ..pairs[perm[m]] });
        }
        points.push(pt);
    }
    let (closure, margin) = best_assignment(&points[n_k - 1], &points[0]);
    ep_flags[0] = margin < MARGIN_TOL;
    Ok(BandSet { params: *params, k_grid: grid, points, ep_flags, closure })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZakResult {
    pub omega: f64,
    pub winding: f64,
    pub integer_class: i64,
    /// |winding - integer_class|
    pub distance: f64,
    pub gapless_flag: bool,
    pub band_indices: Vec<usize>,
    /// Extra k-points inserted by the adaptive link refinement.
    pub refined_points: usize,
}

impl ZakResult {
    fn new(omega: f64, gapless_flag: bool, band_indices: Vec<usize>, refined_points: usize) -> Self {
        let winding = omega / (2.0 * PI);
        let integer_class = winding.round() as i64;
        ZakResult {
            omega,
            winding,
            integer_class,
            distance: (winding - integer_class as f64).abs(),
            gapless_flag,
            band_indices,
            refined_points,
        }
    }
}

pub const ALL_BANDS: [usize; 4] = [1, 2, 3, 4];

/// The two bands with negative real energy at the grid point nearest k = pi/2; ties
/// broken by the more negative imaginary part.
pub fn occupied_bands(bands: &BandSet) -> Vec<usize> {
    let j = bands
        .k_grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - PI / 2.0).abs().total_cmp(&(b.1 - PI / 2.0).abs()))
        .map(|(j, _)| j)
        .unwrap_or(0);
    let mut slots: Vec<(usize, C64)> =
        bands.points[j].pairs.iter().map(|p| (p.band_index, p.value)).collect();
    slots.sort_by(|a, b| a.1.re.total_cmp(&b.1.re).then(a.1.im.total_cmp(&b.1.im)));
    let mut out: Vec<usize> = slots[..2].iter().map(|s| s.0).collect();
    out.sort_unstable();
    out
}

/// Per-point data entering the all-band determinant links.
#[derive(Clone, Copy)]
struct Frame {
    det_left: C64,
    det_right: C64,
    gap: f64,
    min_v4: f64,
    min_abs: f64,
}

fn det_of_columns(cols: &[Vec4; 4]) -> C64 {
    let m: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i]));
    eigen::det4(&m)
}

fn min_spacing(values: &[C64; 4]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..4 {
        for j in 0..i {
            g = g.min((values[i] - values[j]).norm());
        }
    }
    g
}

/// Stored pairs re-expressed in the gauge psi_4 = 1 with phi psi unchanged.
fn stored_frame(pt: &KPoint) -> Frame {
    let mut right = [[ZERO; 4]; 4];
    let mut left = [[ZERO; 4]; 4];
    let mut min_v4 = f64::INFINITY;
    for (n, p) in pt.pairs.iter().enumerate() {
        let c = p.right[3];
        min_v4 = min_v4.min(c.norm() / norm(&p.right));
        right[n] = scale(&p.right, ONE / c);
        left[n] = scale(&p.left, c);
    }
    Frame {
        det_left: det_of_columns(&left),
        det_right: det_of_columns(&right),
        gap: min_spacing(&pt.pairs.map(|p| p.value)),
        min_v4,
        min_abs: pt.pairs.iter().map(|p| p.value.norm()).fold(f64::INFINITY, f64::min),
    }
}

fn fresh_frame(params: &ModelParams, k: f64) -> Result<Frame, EigenError> {
    let s = spectrum(params, k)?;
    let mut min_v4 = f64::INFINITY;
    let cols = s.vectors.map(|v| {
        min_v4 = min_v4.min(v[3].norm() / norm(&v));
        canonicalize(&v)
    });
    let d = det_of_columns(&cols);
    Ok(Frame {
        det_left: ONE / d,
        det_right: d,
        gap: min_spacing(&s.values),
        min_v4,
        min_abs: s.values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min),
    })
}

/// -Im log det(Phi_a Psi_b), reduced mod pi so it does not depend on band order.
fn link_phase(a: &Frame, b: &Frame) -> f64 {
    let d = a.det_left * b.det_right;
    -0.5 * (d * d).arg()
}

struct Refiner<'a> {
    params: &'a ModelParams,
    w2: f64,
    inserted: usize,
    unresolved: usize,
}

impl Refiner<'_> {
    fn segment(&mut self, ka: f64, kb: f64, a: &Frame, b: &Frame, depth: u32) -> Result<f64, EigenError> {
        let l = link_phase(a, b);
        let h = kb - ka;
        let rate = (self.w2 / a.gap.min(b.gap)).max(1.0);
        let smooth = l.abs() < LINK_MAX && h * rate < LINK_MAX * a.min_v4.min(b.min_v4);
        if smooth {
            return Ok(l);
        }
        if depth == 0 || h < MIN_STEP {
            self.unresolved += 1;
            return Ok(l);
        }
        let km = 0.5 * (ka + kb);
        let m = fresh_frame(self.params, wrap(km))?;
        self.inserted += 1;
        Ok(self.segment(ka, km, a, &m, depth - 1)? + self.segment(km, kb, &m, b, depth - 1)?)
    }
}

fn wrap(k: f64) -> f64 {
    if k > PI {
        k - 2.0 * PI
    } else {
        k
    }
}

/// The Hermitian point is replaced by u = U_REGULATOR * w (the limit u -> 0+).
fn regularized(params: &ModelParams) -> (ModelParams, bool) {
    let floor = U_REGULATOR * params.w();
    if params.u() < floor {
        (params.with_u(floor).expect("regulated u is valid"), true)
    } else {
        (*params, false)
    }
}

/// Outcome of the all-band loop: total phase, inserted points, and links that could not
/// be resolved (an EP or a degeneracy sits on the loop).
struct LoopSum {
    omega: f64,
    inserted: usize,
    unresolved: usize,
}

/// Sum of mod-pi determinant links over the periodic grid, each link refined where the
/// psi_4 = 1 gauge or the eigenvectors vary faster than the grid resolves.
fn loop_sum(params: &ModelParams, grid: &[f64], frames: &[Frame]) -> Result<LoopSum, EigenError> {
    let mut r = Refiner { params, w2: params.hoppings().1, inserted: 0, unresolved: 0 };
    let n = frames.len();
    let mut omega = 0.0;
    for j in 0..n {
        let ka = grid[j];
        let kb = if j + 1 < n { grid[j + 1] } else { grid[0] + 2.0 * PI };
        omega += r.segment(ka, kb, &frames[j], &frames[(j + 1) % n], MAX_DEPTH)?;
    }
    Ok(LoopSum { omega, inserted: r.inserted, unresolved: r.unresolved })
}

fn all_band_omega(bands: &BandSet) -> Result<LoopSum, EigenError> {
    let (params, reg) = regularized(&bands.params);
    let frames: Vec<Frame> = if reg {
        bands.k_grid.iter().map(|&k| fresh_frame(&params, k)).collect::<Result<_, _>>()?
    } else {
        bands.points.iter().map(stored_frame).collect()
    };
    loop_sum(&params, &bands.k_grid, &frames)
}

/// All-band winding computed directly from the Hamiltonian, without band tracking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopWinding {
    pub omega: f64,
    pub winding: f64,
    pub integer_class: i64,
    pub distance: f64,
    pub refined_points: usize,
    /// Links that stayed unresolved at the finest step: an EP lies on the loop.
    pub ep_on_loop: bool,
    /// Smallest |z| over the base grid.
    pub min_gap: f64,
}

pub fn all_band_winding(params: &ModelParams, n_k: usize) -> Result<LoopWinding, TopologyError> {
    if n_k < MIN_TRACK_POINTS {
        return Err(TopologyError::GridTooSmall { got: n_k, min: MIN_TRACK_POINTS });
    }
    let grid = k_grid(n_k);
    let (eff, reg) = regularized(params);
    let frames: Vec<Frame> = grid.iter().map(|&k| fresh_frame(&eff, k)).collect::<Result<_, _>>()?;
    let min_gap = if reg {
        let mut g = f64::INFINITY;
        for &k in &grid {
            g = spectrum(params, k)?.values.iter().map(|z| z.norm()).fold(g, f64::min);
        }
        g
    } else {
        frames.iter().map(|f| f.min_abs).fold(f64::INFINITY, f64::min)
    };
    let sum = loop_sum(&eff, &grid, &frames)?;
    let winding = sum.omega / (2.0 * PI);
    let integer_class = winding.round() as i64;
    Ok(LoopWinding {
        omega: sum.omega,
        winding,
        integer_class,
        distance: (winding - integer_class as f64).abs(),
        refined_points: sum.inserted,
        ep_on_loop: sum.unresolved > 0,
        min_gap,
    })
}

fn subset_omega(bands: &BandSet, subset: &[usize]) -> f64 {
    let n = bands.n_k();
    let canon: Vec<([Vec4; 4], [Vec4; 4])> = bands
        .points
        .iter()
        .map(|pt| {
            let r = pt.pairs.map(|p| scale(&p.right, ONE / p.right[3]));
            let l = pt.pairs.map(|p| scale(&p.left, p.right[3]));
            (r, l)
        })
        .collect();
    let slots: Vec<usize> = subset.iter().map(|b| b - 1).collect();
    let mut omega = 0.0;
    for j in 0..n {
        let (_, left) = &canon[j];
        let (right, _) = &canon[(j + 1) % n];
        let target = |s: usize| if j + 1 < n { s } else { bands.closure[s] };
        let dim = slots.len();
        let m = faer::Mat::<C64>::from_fn(dim, dim, |a, b| dot(&left[slots[a]], &right[target(slots[b])]));
        omega -= m.determinant().arg();
    }
    omega
}

/// Discrete Wilson loop over `subset` (1-based band slots).
///
/// For the full set the result is independent of band tracking. Any other subset follows
/// the tracked slots, closing the loop through the recorded permutation.
pub fn zak_phase(bands: &BandSet, subset: &[usize]) -> Result<ZakResult, TopologyError> {
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.len() != subset.len() || sorted.iter().any(|&b| !(1..=4).contains(&b)) {
        return Err(TopologyError::BadSubset);
    }
    let gapless = bands.flagged_count() > 0 || bands.any_self_orthogonal();
    if sorted == ALL_BANDS {
        let sum = all_band_omega(bands)?;
        Ok(ZakResult::new(sum.omega, gapless, sorted, sum.inserted))
    } else {
        Ok(ZakResult::new(subset_omega(bands, &sorted), gapless, sorted, 0))
    }
}

/// Plain Wilson loop -Im sum log(phi_n(k_j) psi_n(k_j+1)) on the stored vectors, in
/// whatever gauge they carry. Only its value mod 2 pi is gauge invariant.
pub fn raw_wilson_loop(bands: &BandSet, subset: &[usize]) -> f64 {
    let n = bands.n_k();
    let mut omega = 0.0;
    for j in 0..n {
        for &b in subset {
            let s = b - 1;
            let t = if j + 1 < n { s } else { bands.closure[s] };
            let link = dot(&bands.points[j].pairs[s].left, &bands.points[(j + 1) % n].pairs[t].right);
            omega -= link.arg();
        }
    }
    omega
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseLabel {
    TR,
    NTR,
    GL,
}

impl PhaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseLabel::TR => "TR",
            PhaseLabel::NTR => "NTR",
            PhaseLabel::GL => "GL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCell {
    pub label: PhaseLabel,
    /// Smallest |z| over the k-grid.
    pub min_gap: f64,
    pub winding: f64,
    /// An EP sits on the Brillouin-zone loop.
    pub gapless_flag: bool,
    pub closed_form_gapless: bool,
    pub numeric_gapless: bool,
}

/// Window tolerance used when comparing u against u1c and u2c.
pub const WINDOW_TOL: f64 = 1e-9;

/// GL inside the closed-form window u1c <= u <= u2c, otherwise TR / NTR from the
/// all-band winding. The numeric gap indicator is recorded alongside.
pub fn classify_phase(params: &ModelParams, n_k: usize) -> Result<PhaseCell, TopologyError> {
    if n_k < MIN_CLASSIFY_POINTS {
        return Err(TopologyError::GridTooSmall { got: n_k, min: MIN_CLASSIFY_POINTS });
    }
    let lw = all_band_winding(params, n_k)?;
    let closed_form_gapless = critical_points(params).in_gapless_window(params.u(), WINDOW_TOL);
    let label = if closed_form_gapless {
        PhaseLabel::GL
    } else {
        match lw.integer_class {
            0 if lw.distance <= 0.25 => PhaseLabel::TR,
            1 if lw.distance <= 0.25 => PhaseLabel::NTR,
            _ => return Err(TopologyError::Unresolved { winding: lw.winding, distance: lw.distance }),
        }
    };
    Ok(PhaseCell {
        label,
        min_gap: lw.min_gap,
        winding: lw.winding,
        gapless_flag: lw.ep_on_loop,
        closed_form_gapless,
        numeric_gapless: lw.min_gap < GAP_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EpKind {
    Ep1,
    Ep2,
}

/// Coalescence diagnostics at a closed-form EP locus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpCheck {
    pub kind: EpKind,
    pub k: f64,
    /// Distance between the two closest numeric eigenvalues at the locus.
    pub splitting: f64,
    /// Relative biorthogonal norm |phi psi| / (|phi||psi|) of the coalesced state.
    pub self_overlap: f64,
    pub self_orthogonal: bool,
}

/// Evaluate the coalescing pair at the EP locus of the given kind, if it exists.
///
/// The coalesced state is built from the closed-form vectors at the mean of the two
/// closest eigenvalues, which is far less sensitive to the square-root splitting than
/// either eigenvalue alone. Where the closed form degenerates (u = 0 at the zone edge)
/// the dense eigenvectors of H(k) and H(-k) are used instead.
pub fn check_exceptional_point(params: &ModelParams, kind: EpKind) -> Result<Option<EpCheck>, TopologyError> {
    let Some(k) = (match kind {
        EpKind::Ep1 => ep1_locus(params),
        EpKind::Ep2 => ep2_locus(params),
    }) else {
        return Ok(None);
    };
    let here = spectrum(params, k)?;
    let there = spectrum(params, -k)?;
    let vals = here.values;
    let (mut bi, mut bj, mut split) = (0, 1, f64::INFINITY);
    for i in 0..4 {
        for j in 0..i {
            let d = (vals[i] - vals[j]).norm();
            if d < split {
                (bi, bj, split) = (i, j, d);
            }
        }
    }
    let zbar = 0.5 * (vals[bi] + vals[bj]);
    let nearest = |z: C64| {
        (0..4).min_by(|&a, &b| (there.values[a] - z).norm().total_cmp(&(there.values[b] - z).norm())).unwrap_or(0)
    };
    let order = [bi, bj].into_iter().chain((0..4).filter(|&i| i != bi && i != bj));
    let mut raw = Vec::with_capacity(4);
    for (n, i) in order.enumerate() {
        let z = if n < 2 { zbar } else { vals[i] };
        let pair = match (analytic_right_eigenvector(params, k, z), analytic_right_eigenvector(params, -k, z)) {
            (Ok(right), Ok(left)) => (right, left),
            _ => (here.vectors[i], there.vectors[nearest(vals[i])]),
        };
        raw.push(BlochEigenpair { band_index: n + 1, value: z, right: pair.0, left: pair.1 });
    }
    let first = raw[0];
    let self_overlap = dot(&first.left, &first.right).norm() / (norm(&first.left) * norm(&first.right));
    let pairs: [BlochEigenpair; 4] = [raw[0], raw[1], raw[2], raw[3]];
    let self_orthogonal = matches!(biorthonormalize(pairs), Err(TopologyError::SelfOrthogonal { .. }));
    Ok(Some(EpCheck { kind, k, splitting: split, self_overlap, self_orthogonal }))
}
