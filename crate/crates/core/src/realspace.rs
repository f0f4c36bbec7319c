//! Finite chains under open and periodic boundaries: spectra, IPR, edge-mode
//! classification, Gaussian disorder and robustness trials.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{self, EigenError};
use crate::lattice::{ModelParams, SUBLATTICE};

pub const DEFAULT_N_CELLS: usize = 50;
pub const DEFAULT_SITE_CAP: usize = 2048;
/// Zero-mode tolerance used when matching modes in disordered chains.
pub const RELAXED_ZERO_TOL: f64 = 0.1;
/// Share of the weight that must sit inside the edge window.
pub const EDGE_WEIGHT: f64 = 0.6;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RealSpaceError {
    #[error("a chain needs at least 2 cells (got {0})")]
    TooFewCells(usize),
    #[error("matrix has {sites} sites, above the cap of {cap}")]
    TooLarge { sites: usize, cap: usize },
    #[error("IPR of the zero vector is undefined")]
    ZeroVector,
    #[error("disorder is only defined on open chains")]
    NotOpen,
    #[error("sigma must be finite and >= 0 (got {0})")]
    BadSigma(f64),
    #[error("trials must be positive")]
    NoTrials,
    #[error("the unperturbed chain has no edge modes")]
    NoEdgeModes,
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainSpec {
    pub params: ModelParams,
    n_cells: usize,
    pub boundary: Boundary,
}

impl ChainSpec {
    pub fn new(params: ModelParams, n_cells: usize, boundary: Boundary) -> Result<Self, RealSpaceError> {
        if n_cells < 2 {
            return Err(RealSpaceError::TooFewCells(n_cells));
        }
        Ok(Self { params, n_cells, boundary })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn sites(&self) -> usize {
        4 * self.n_cells
    }
}

/// One hopping bond (i, j) with amplitude t, i < j except for the periodic wrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub t: f64,
}

/// Bonds in site order: w1, w2, w1 inside each cell, w2 to the next cell, then the wrap.
pub fn bonds(spec: &ChainSpec) -> Vec<Bond> {
    let (w1, w2) = spec.params.hoppings();
    let n = spec.sites();
    let mut out = Vec::with_capacity(n);
    for s in 0..n - 1 {
        let t = if s % 2 == 0 { w1 } else { w2 };
        out.push(Bond { i: s, j: s + 1, t });
    }
    if spec.boundary == Boundary::Periodic {
        out.push(Bond { i: n - 1, j: 0, t: w2 });
    }
    out
}

/// Gain/loss on site s: +iu on a, -iu on b, 0 on c and d.
fn onsite(u: f64, s: usize) -> C64 {
    match s % 4 {
        0 => C64::new(0.0, u),
        1 => C64::new(0.0, -u),
        _ => ZERO,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealSpaceMatrix {
    pub spec: ChainSpec,
    data: Mat<C64>,
}

impl RealSpaceMatrix {
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn as_faer(&self) -> faer::MatRef<'_, C64> {
        self.data.as_ref()
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.data[(i, j)]).collect()).collect()
    }
}

fn assemble(spec: &ChainSpec, bond_scale: &[f64], onsite_scale: &[f64]) -> RealSpaceMatrix {
    let n = spec.sites();
    let mut data = Mat::<C64>::zeros(n, n);
    for (b, s) in bonds(spec).iter().zip(bond_scale) {
        let t = C64::new(b.t * s, 0.0);
        data[(b.i, b.j)] = t;
        data[(b.j, b.i)] = t;
    }
    let u = spec.params.u();
    for (site, s) in (0..n).zip(onsite_scale) {
        data[(site, site)] = onsite(u, site) * *s;
    }
    RealSpaceMatrix { spec: *spec, data }
}

pub fn build_chain(spec: &ChainSpec) -> RealSpaceMatrix {
    let nb = bonds(spec).len();
    assemble(spec, &vec![1.0; nb], &vec![1.0; spec.sites()])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenpair {
    pub value: C64,
    /// Unit 2-norm right eigenvector.
    pub vector: Vec<C64>,
}

pub fn full_spectrum(m: &RealSpaceMatrix) -> Result<Vec<Eigenpair>, RealSpaceError> {
    full_spectrum_capped(m, DEFAULT_SITE_CAP)
}

/// All eigenpairs sorted by (Re z, Im z). Near-degenerate clusters (the Hermitian
/// zero-mode pair) are rotated into sublattice-polarized states.
pub fn full_spectrum_capped(m: &RealSpaceMatrix, cap: usize) -> Result<Vec<Eigenpair>, RealSpaceError> {
    let n = m.dim();
    if n > cap {
        return Err(RealSpaceError::TooLarge { sites: n, cap });
    }
    let (values, u) = eigen::eig(m.as_faer())?;
    let mut pairs: Vec<Eigenpair> = values
        .iter()
        .enumerate()
        .map(|(c, &value)| Eigenpair { value, vector: normalized((0..n).map(|r| u[(r, c)]).collect()) })
        .collect();
    pairs.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    polarize_clusters(&mut pairs, cluster_tol(m));
    Ok(pairs)
}

fn cluster_tol(m: &RealSpaceMatrix) -> f64 {
    let (w1, w2) = m.spec.params.hoppings();
    1e-6 * (w1 + w2 + m.spec.params.u())
}

/// Unit norm, with the largest component made real and positive.
fn normalized(mut v: Vec<C64>) -> Vec<C64> {
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(ZERO);
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { C64::new(1.0, 0.0) };
    for x in v.iter_mut() {
        *x = *x * phase / n;
    }
    v
}

fn polarize_clusters(pairs: &mut [Eigenpair], tol: f64) {
    let mut done = vec![false; pairs.len()];
    for start in 0..pairs.len() {
        if done[start] {
            continue;
        }
        let members: Vec<usize> = (start..pairs.len())
            .filter(|&j| !done[j] && (pairs[j].value - pairs[start].value).norm() < tol)
            .collect();
        for &m in &members {
            done[m] = true;
        }
        if members.len() > 1 && members.len() <= 8 {
            polarize(pairs, &members);
        }
    }
}

/// Orthonormalize the cluster span and diagonalize the sublattice operator inside it.
fn polarize(pairs: &mut [Eigenpair], members: &[usize]) {
    let dim = pairs[members[0]].vector.len();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for &m in members {
        let mut v = pairs[m].vector.clone();
        for b in &basis {
            let p: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n < 1e-8 {
            return;
        }
        basis.push(v.into_iter().map(|x| x / n).collect());
    }
    let k = basis.len();
    let g = Mat::<C64>::from_fn(k, k, |a, b| {
        (0..dim).map(|s| basis[a][s].conj() * SUBLATTICE[s % 4] * basis[b][s]).sum()
    });
    let Ok(e) = g.self_adjoint_eigen(Side::Lower) else { return };
    let vecs = e.U();
    for (col, &m) in members.iter().enumerate() {
        let v: Vec<C64> = (0..dim).map(|s| (0..k).map(|a| basis[a][s] * vecs[(a, col)]).sum()).collect();
        pairs[m].vector = normalized(v);
    }
}

pub fn ipr(state: &[C64]) -> Result<f64, RealSpaceError> {
    let p2: f64 = state.iter().map(|x| x.norm_sqr()).sum();
    if p2 == 0.0 {
        return Err(RealSpaceError::ZeroVector);
    }
    let p4: f64 = state.iter().map(|x| x.norm_sqr() * x.norm_sqr()).sum();
    Ok(p4 / (p2 * p2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSide {
    Left,
    Right,
    Bulk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeCriteria {
    pub zero_tol: f64,
    pub edge_fraction: f64,
    pub ipr_floor: f64,
}

impl Default for EdgeCriteria {
    fn default() -> Self {
        EdgeCriteria { zero_tol: 1e-3, edge_fraction: 0.1, ipr_floor: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeReport {
    /// Position in the sorted spectrum.
    pub index: usize,
    pub eigenvalue: C64,
    pub ipr: f64,
    pub edge_side: EdgeSide,
    /// |Re z| < zero_tol
    pub is_zero_mode: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeClass {
    LeftZero,
    RightZero,
    LeftNonzero,
    RightNonzero,
}

impl ModeClass {
    pub const ALL: [ModeClass; 4] =
        [ModeClass::LeftZero, ModeClass::RightZero, ModeClass::LeftNonzero, ModeClass::RightNonzero];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModeClass::LeftZero => "left-zero",
            ModeClass::RightZero => "right-zero",
            ModeClass::LeftNonzero => "left-nonzero",
            ModeClass::RightNonzero => "right-nonzero",
        }
    }
}

impl ModeReport {
    pub fn class(&self) -> Option<ModeClass> {
        match (self.edge_side, self.is_zero_mode) {
            (EdgeSide::Left, true) => Some(ModeClass::LeftZero),
            (EdgeSide::Right, true) => Some(ModeClass::RightZero),
            (EdgeSide::Left, false) => Some(ModeClass::LeftNonzero),
            (EdgeSide::Right, false) => Some(ModeClass::RightNonzero),
            (EdgeSide::Bulk, _) => None,
        }
    }
}

/// One report per eigenpair.
pub fn detect_edge_modes(spectrum: &[Eigenpair], criteria: &EdgeCriteria) -> Vec<ModeReport> {
    spectrum
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let n = p.vector.len();
            let window = ((criteria.edge_fraction * n as f64).ceil() as usize).clamp(1, n);
            let total: f64 = p.vector.iter().map(|x| x.norm_sqr()).sum();
            let left: f64 = p.vector[..window].iter().map(|x| x.norm_sqr()).sum();
            let right: f64 = p.vector[n - window..].iter().map(|x| x.norm_sqr()).sum();
            let ipr = ipr(&p.vector).unwrap_or(0.0);
            let localized = ipr >= criteria.ipr_floor;
            let edge_side = if localized && left >= EDGE_WEIGHT * total {
                EdgeSide::Left
            } else if localized && right >= EDGE_WEIGHT * total {
                EdgeSide::Right
            } else {
                EdgeSide::Bulk
            };
            ModeReport {
                index,
                eigenvalue: p.value,
                ipr,
                edge_side,
                is_zero_mode: p.value.re.abs() < criteria.zero_tol,
            }
        })
        .collect()
}

/// Largest IPR among modes of the given class.
pub fn class_ipr(reports: &[ModeReport], class: ModeClass) -> Option<f64> {
    reports
        .iter()
        .filter(|r| r.class() == Some(class))
        .map(|r| r.ipr)
        .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("skin asymmetry needs zero edge modes on both sides (left IPR {left:?}, right IPR {right:?})")]
pub struct MissingSide {
    pub left: Option<f64>,
    pub right: Option<f64>,
}

/// Max left zero-mode IPR over max right zero-mode IPR.
pub fn skin_asymmetry(reports: &[ModeReport]) -> Result<f64, MissingSide> {
    let left = class_ipr(reports, ModeClass::LeftZero);
    let right = class_ipr(reports, ModeClass::RightZero);
    match (left, right) {
        (Some(l), Some(r)) => Ok(l / r),
        _ => Err(MissingSide { left, right }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisorderSpec {
    sigma: f64,
    pub seed: u64,
    trials: usize,
}

impl DisorderSpec {
    pub fn new(sigma: f64, seed: u64, trials: usize) -> Result<Self, RealSpaceError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(RealSpaceError::BadSigma(sigma));
        }
        if trials == 0 {
            return Err(RealSpaceError::NoTrials);
        }
        Ok(Self { sigma, seed, trials })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn trials(&self) -> usize {
        self.trials
    }
}

/// Fluctuation coefficients (per bond, per gain/loss site) for one trial.
///
/// Each trial reads its own ChaCha stream, so trials do not depend on each other.
pub fn disorder_coefficients(spec: &ChainSpec, d: &DisorderSpec, trial_index: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
    rng.set_stream(trial_index);
    let normal = Normal::new(1.0, d.sigma).expect("sigma validated");
    let nb = bonds(spec).len();
    let eps_w: Vec<f64> = (0..nb).map(|_| normal.sample(&mut rng)).collect();
    let eps_u: Vec<f64> = (0..2 * spec.n_cells()).map(|_| normal.sample(&mut rng)).collect();
    (eps_w, eps_u)
}

pub fn apply_disorder(spec: &ChainSpec, d: &DisorderSpec, trial_index: u64) -> Result<RealSpaceMatrix, RealSpaceError> {
    if spec.boundary != Boundary::Open {
        return Err(RealSpaceError::NotOpen);
    }
    let (eps_w, eps_u) = disorder_coefficients(spec, d, trial_index);
    let onsite: Vec<f64> = (0..spec.sites())
        .map(|s| match s % 4 {
            0 => eps_u[2 * (s / 4)],
            1 => eps_u[2 * (s / 4) + 1],
            _ => 1.0,
        })
        .collect();
    Ok(assemble(spec, &eps_w, &onsite))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    /// Classes found again under the relaxed zero tolerance.
    pub survived: Vec<ModeClass>,
    /// Classes that also kept at least half their unperturbed IPR.
    pub survived_strict: Vec<ModeClass>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassSurvival {
    pub class: ModeClass,
    pub unperturbed_ipr: f64,
    pub survival: f64,
    pub strict_survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub classes: Vec<ClassSurvival>,
    pub trials: Vec<TrialRecord>,
    pub relaxed_zero_tol: f64,
    pub criteria: EdgeCriteria,
}

impl RobustnessReport {
    pub fn survival(&self, class: ModeClass) -> Option<&ClassSurvival> {
        self.classes.iter().find(|c| c.class == class)
    }
}

/// Re-diagonalize `d.trials()` perturbed chains and count, per unperturbed edge-mode
/// class, how often the class is detected again with zero_tol relaxed to 0.1.
pub fn robustness_trial(
    spec: &ChainSpec,
    d: &DisorderSpec,
    criteria: &EdgeCriteria,
) -> Result<RobustnessReport, RealSpaceError> {
    if spec.boundary != Boundary::Open {
        return Err(RealSpaceError::NotOpen);
    }
    let base = detect_edge_modes(&full_spectrum(&build_chain(spec))?, criteria);
    let present: Vec<(ModeClass, f64)> = ModeClass::ALL
        .iter()
        .filter_map(|&c| class_ipr(&base, c).map(|ipr| (c, ipr)))
        .collect();
    if present.is_empty() {
        return Err(RealSpaceError::NoEdgeModes);
    }
    let relaxed = EdgeCriteria { zero_tol: RELAXED_ZERO_TOL, ..*criteria };
    let trials: Vec<TrialRecord> = (0..d.trials() as u64)
        .into_par_iter()
        .map(|t| {
            let run = apply_disorder(spec, d, t).and_then(|m| full_spectrum(&m));
            match run {
                Ok(sp) => {
                    let reports = detect_edge_modes(&sp, &relaxed);
                    let mut survived = Vec::new();
                    let mut survived_strict = Vec::new();
                    for &(c, ipr0) in &present {
                        if let Some(ipr) = class_ipr(&reports, c) {
                            survived.push(c);
                            if ipr >= 0.5 * ipr0 {
                                survived_strict.push(c);
                            }
                        }
                    }
                    TrialRecord { trial_index: t, survived, survived_strict, error: None }
                }
                Err(e) => TrialRecord {
                    trial_index: t,
                    survived: vec![],
                    survived_strict: vec![],
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let ok: Vec<&TrialRecord> = trials.iter().filter(|t| t.error.is_none()).collect();
    let frac = |hit: &dyn Fn(&TrialRecord) -> bool| {
        if ok.is_empty() {
            0.0
        } else {
            ok.iter().filter(|t| hit(t)).count() as f64 / ok.len() as f64
        }
    };
    let classes = present
        .iter()
        .map(|&(class, unperturbed_ipr)| ClassSurvival {
            class,
            unperturbed_ipr,
            survival: frac(&|t| t.survived.contains(&class)),
            strict_survival: frac(&|t| t.survived_strict.contains(&class)),
        })
        .collect();
    Ok(RobustnessReport { classes, trials, relaxed_zero_tol: RELAXED_ZERO_TOL, criteria: *criteria })
}

/// Symmetric Hausdorff distance between two point clouds in the complex plane.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let directed = |x: &[C64], y: &[C64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}
