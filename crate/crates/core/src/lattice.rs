//! Model parameters, the 4x4 Bloch Hamiltonian and its closed-form spectrum.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::eigen::{self, EigenError};

pub type Mat4 = [[C64; 4]; 4];

const ZERO: C64 = C64::new(0.0, 0.0);
const THETA_SLACK: f64 = 1e-12;
const ARCCOS_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("w must be finite and positive (got {0})")]
    Scale(f64),
    #[error("delta must satisfy 0 < delta < 1 (got {0})")]
    Delta(f64),
    #[error("theta must satisfy -pi <= theta <= pi (got {0})")]
    Theta(f64),
    #[error("u must satisfy u >= 0 (got {0})")]
    Gain(f64),
}

/// Physical parameters (w, delta, theta, u). Construction validates every range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    w: f64,
    delta: f64,
    theta: f64,
    u: f64,
}

impl ModelParams {
    pub fn new(w: f64, delta: f64, theta: f64, u: f64) -> Result<Self, ParamError> {
        if !(w.is_finite() && w > 0.0) {
            return Err(ParamError::Scale(w));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ParamError::Delta(delta));
        }
        if !(theta.is_finite() && theta.abs() <= PI + THETA_SLACK) {
            return Err(ParamError::Theta(theta));
        }
        if !(u.is_finite() && u >= 0.0) {
            return Err(ParamError::Gain(u));
        }
        Ok(Self { w, delta, theta: theta.clamp(-PI, PI), u })
    }

    /// w = 1, delta = 0.3 with the given theta and u.
    pub fn standard(theta: f64, u: f64) -> Result<Self, ParamError> {
        Self::new(1.0, 0.3, theta, u)
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn with_u(&self, u: f64) -> Result<Self, ParamError> {
        Self::new(self.w, self.delta, self.theta, u)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self, ParamError> {
        Self::new(self.w, self.delta, theta, self.u)
    }

    pub fn hoppings(&self) -> (f64, f64) {
        let c = self.delta * self.theta.cos();
        (self.w * (1.0 - c), self.w * (1.0 + c))
    }
}

pub fn hopping_amplitudes(params: &ModelParams) -> (f64, f64) {
    params.hoppings()
}

/// H(k) together with its wavenumber. Entries are only produced by `bloch_hamiltonian`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochMatrix {
    k: f64,
    entries: Mat4,
}

impl BlochMatrix {
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn entries(&self) -> &Mat4 {
        &self.entries
    }
}

pub fn bloch_hamiltonian(params: &ModelParams, k: f64) -> BlochMatrix {
    let (w1, w2) = params.hoppings();
    let u = params.u();
    let mut h = [[ZERO; 4]; 4];
    h[0][0] = C64::new(0.0, u);
    h[1][1] = C64::new(0.0, -u);
    h[0][1] = C64::new(w1, 0.0);
    h[1][0] = h[0][1];
    h[1][2] = C64::new(w2, 0.0);
    h[2][1] = h[1][2];
    h[2][3] = C64::new(w1, 0.0);
    h[3][2] = h[2][3];
    h[0][3] = C64::from_polar(w2, -k);
    h[3][0] = C64::from_polar(w2, k);
    BlochMatrix { k, entries: h }
}

/// X, Y and D = X^2 - 4Y, with D in a cancellation-free form.
pub(crate) fn xyd(params: &ModelParams, k: f64) -> (f64, f64, f64) {
    let (w1, w2) = params.hoppings();
    let u2 = params.u() * params.u();
    let (a, b) = (w1 * w1, w2 * w2);
    let x = 2.0 * (a + b) - u2;
    let y = a * a + b * b - 2.0 * a * b * k.cos() - a * u2;
    let half = (0.5 * k).cos();
    let d = u2 * u2 - 4.0 * b * u2 + 16.0 * a * b * half * half;
    (x, y, d)
}

/// z1, z2 = sqrt((X +- sqrt(D))/2) on the principal branch, z3,4 = -z1,2.
///
/// The smaller root of t^2 - X t + Y is taken as Y / t_large to keep accuracy near z = 0.
pub fn analytic_eigenvalues(params: &ModelParams, k: f64) -> [C64; 4] {
    let (x, y, d) = xyd(params, k);
    let s = C64::new(d, 0.0).sqrt();
    let tp = (x + s) * 0.5;
    let tm = (x - s) * 0.5;
    let (tp, tm) = if tp.norm() >= tm.norm() {
        let other = if tp.norm() > 0.0 { y / tp } else { ZERO };
        (tp, other)
    } else {
        (y / tm, tm)
    };
    let z1 = tp.sqrt();
    let z2 = tm.sqrt();
    [z1, z2, -z1, -z2]
}

pub fn numeric_eigenvalues(m: &BlochMatrix) -> Result<[C64; 4], EigenError> {
    let v = eigen::eigvals(eigen::to_faer(&m.entries).as_ref())?;
    Ok([v[0], v[1], v[2], v[3]])
}

fn clamped_arccos(arg: f64) -> Option<f64> {
    if !(-1.0 - ARCCOS_CLAMP..=1.0 + ARCCOS_CLAMP).contains(&arg) {
        return None;
    }
    Some(arg.clamp(-1.0, 1.0).acos())
}

/// Non-negative k of the EP1 pair +-k, if the pair exists.
pub fn ep1_locus(params: &ModelParams) -> Option<f64> {
    let (w1, w2) = params.hoppings();
    let u2 = params.u() * params.u();
    let ab8 = 8.0 * w1 * w1 * w2 * w2;
    clamped_arccos((4.0 * u2 * w2 * w2 - u2 * u2 - ab8) / ab8)
}

/// Non-negative k of the EP2 pair +-k, if the pair exists.
pub fn ep2_locus(params: &ModelParams) -> Option<f64> {
    let (w1, w2) = params.hoppings();
    let (a, b) = (w1 * w1, w2 * w2);
    let u2 = params.u() * params.u();
    clamped_arccos((a * a + b * b - a * u2) / (2.0 * a * b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoints {
    pub u1c: f64,
    pub um: f64,
    pub u2c: f64,
}

impl CriticalPoints {
    /// Gapless window u1c <= u <= u2c, widened by `tol` on both sides.
    pub fn in_gapless_window(&self, u: f64, tol: f64) -> bool {
        u >= self.u1c - tol && u <= self.u2c + tol
    }
}

pub fn critical_points(params: &ModelParams) -> CriticalPoints {
    let (w1, w2) = params.hoppings();
    let (a, b) = (w1 * w1, w2 * w2);
    CriticalPoints {
        u1c: (a - b).abs() / w1,
        um: (2.0 * (a + b)).sqrt(),
        u2c: (a + b) / w1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryResiduals {
    pub trs: f64,
    pub phs: f64,
    pub cs: f64,
}

/// Sublattice matrix diag(1, -1, 1, -1) in the (a, b, c, d) basis; used for both T and Gamma.
pub const SUBLATTICE: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

/// Frobenius residuals of the three relations for an arbitrary pair (H(k), H(-k)).
pub fn residuals_between(hk: &Mat4, hmk: &Mat4) -> SymmetryResiduals {
    let (mut trs, mut phs, mut cs) = (0.0, 0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            let g = SUBLATTICE[i] * SUBLATTICE[j];
            trs += (hk[i][j].conj() * g + hmk[i][j]).norm_sqr();
            phs += (hk[j][i] - hmk[i][j]).norm_sqr();
            cs += (hk[j][i].conj() * g + hk[i][j]).norm_sqr();
        }
    }
    SymmetryResiduals { trs: trs.sqrt(), phs: phs.sqrt(), cs: cs.sqrt() }
}

pub fn symmetry_residuals(params: &ModelParams, k: f64) -> SymmetryResiduals {
    let hk = bloch_hamiltonian(params, k);
    let hmk = bloch_hamiltonian(params, -k);
    residuals_between(&hk.entries, &hmk.entries)
}

/// Frobenius norm of H - H^dagger.
pub fn hermiticity_residual(m: &Mat4) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += (m[i][j] - m[j][i].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn frobenius(m: &Mat4) -> f64 {
    m.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest max-distance over all pairings of two four-element multisets.
pub fn multiset_distance(a: &[C64; 4], b: &[C64; 4]) -> f64 {
    PERMS4
        .iter()
        .map(|p| (0..4).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

pub(crate) const PERMS4: [[usize; 4]; 24] = [
    [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
    [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
    [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
    [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
];
