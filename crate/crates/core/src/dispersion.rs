//! The dispersion function `ρ(c, k)`, the vertical coefficient `κ(|k|)`, hyperbola
//! geometry of the solution curves and lattice scans for roots and resonances.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{dot, norm, perp, Lattice, LatticePoint, PhysicalParams, Vec2};

/// Below this value of `|α² - |k|²| d²` the shared series is used.
pub const BRANCH_SERIES_THRESHOLD: f64 = 1e-6;
/// Minimal distance of `√(α² - |k|²) d` to `πℤ₊` before a pole is reported.
pub const POLE_TOLERANCE: f64 = 1e-8;

/// Series of `x cot x` (and `x coth x`) in `u = x²` (negated for coth).
fn xcot_series(u: f64) -> f64 {
    1.0 - u / 3.0 - u * u / 45.0 - 2.0 * u.powi(3) / 945.0 - u.powi(4) / 4725.0
}

/// Distance of `x` to the nearest positive multiple of π, with that multiple.
pub(crate) fn pole_distance(x: f64) -> (f64, u64) {
    let n = (x / PI).round().max(1.0);
    ((x - n * PI).abs(), n as u64)
}

/// `κ(|k|) = φ'(0; |k|)`.
pub fn kappa(k_norm: f64, params: &PhysicalParams) -> Result<f64> {
    if !(k_norm >= 0.0) {
        return Err(Error::InvalidParameter(format!("|k| must be non-negative, got {k_norm}")));
    }
    let d = params.d;
    let t = params.alpha * params.alpha - k_norm * k_norm;
    let u = t * d * d;
    if u.abs() < BRANCH_SERIES_THRESHOLD {
        return Ok(xcot_series(u) / d);
    }
    if t > 0.0 {
        let s = t.sqrt();
        let x = s * d;
        let (dist, n) = pole_distance(x);
        if dist <= POLE_TOLERANCE {
            return Err(Error::ResonancePole { arg: x, n });
        }
        Ok(s / x.tan())
    } else {
        let s = (-t).sqrt();
        Ok(s / (s * d).tanh())
    }
}

/// `ρ(c, k) = g + σ|k|² - (c·k)² κ/|k|² + α (c·k)(c·k⊥)/|k|²`.
pub fn rho(c: Vec2, k: Vec2, params: &PhysicalParams) -> Result<f64> {
    let k2 = dot(k, k);
    if k2 == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let kn = k2.sqrt();
    let kap = kappa(kn, params)?;
    let ck = dot(c, k);
    let ckp = dot(c, perp(k));
    Ok(params.restoring(kn) - ck * ck * kap / k2 + params.alpha * ck * ckp / k2)
}

/// Analytic gradient `∇_c ρ(c, k)`.
pub fn grad_rho(c: Vec2, k: Vec2, params: &PhysicalParams) -> Result<Vec2> {
    let k2 = dot(k, k);
    if k2 == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let kap = kappa(k2.sqrt(), params)?;
    let kp = perp(k);
    let ck = dot(c, k);
    let ckp = dot(c, kp);
    let a = params.alpha;
    Ok([
        (-2.0 * ck * kap * k[0] + a * (ckp * k[0] + ck * kp[0])) / k2,
        (-2.0 * ck * kap * k[1] + a * (ckp * k[1] + ck * kp[1])) / k2,
    ])
}

/// Symmetric 2x2 matrix `A_k` with `ρ(c, k) = (g + σ|k|²)(1 - cᵀ A_k c)`.
pub fn conic_matrix(k: Vec2, params: &PhysicalParams) -> Result<[[f64; 2]; 2]> {
    let k2 = dot(k, k);
    if k2 == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let kn = k2.sqrt();
    let kap = kappa(kn, params)?;
    let kp = perp(k);
    let s = 1.0 / (k2 * params.restoring(kn));
    let a = params.alpha;
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = s * (kap * k[i] * k[j] - 0.5 * a * (k[i] * kp[j] + kp[i] * k[j]));
        }
    }
    Ok(m)
}

#[cfg(test)]
fn quad_form(a: &[[f64; 2]; 2], c: Vec2) -> f64 {
    a[0][0] * c[0] * c[0] + 2.0 * a[0][1] * c[0] * c[1] + a[1][1] * c[1] * c[1]
}

/// The solution set `C(k)` of `ρ(c, k) = 0` for `α ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    pub k: Vec2,
    pub conic: [[f64; 2]; 2],
    /// Angle between the asymptotes of one branch.
    pub gamma: f64,
    /// Polar angle of `k`.
    pub theta: f64,
    /// Sampled points, first branch (`x > 0`) then second (`x < 0`).
    pub points: Vec<Vec2>,
}

/// Rotates `(x, y)` in the frame of `k` back to `(c1, c2)`.
fn from_frame(theta: f64, x: f64, y: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [c * x - s * y, s * x + c * y]
}

pub fn dispersion_curve(k: Vec2, params: &PhysicalParams, samples_per_branch: usize) -> Result<DispersionCurve> {
    if params.alpha == 0.0 {
        return Err(Error::AlphaZero("use irrotational_lines"));
    }
    let kn = norm(k);
    if kn == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let kap = kappa(kn, params)?;
    let a = params.restoring(kn);
    let alpha = params.alpha;
    let theta = k[1].atan2(k[0]);
    let gamma = PI / 2.0 + (kap / alpha.abs()).atan();
    // x spans geometric scales around the vertex scale √(a / (|κ| + |α|))
    let x0 = (a / (kap.abs() + alpha.abs())).sqrt();
    let mut points = Vec::with_capacity(2 * samples_per_branch);
    for sign in [1.0, -1.0] {
        for i in 0..samples_per_branch {
            let f = if samples_per_branch > 1 { i as f64 / (samples_per_branch - 1) as f64 } else { 0.5 };
            let x = sign * x0 * 10f64.powf(-1.0 + 2.0 * f);
            let y = kap / alpha * x - a / (alpha * x);
            points.push(from_frame(theta, x, y));
        }
    }
    Ok(DispersionCurve { k, conic: conic_matrix(k, params)?, gamma, theta, points })
}

/// The pair of parallel lines `c·k/|k| = ±x0` solving `ρ = 0` when `α = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrrotationalLines {
    /// Unit normal `k / |k|`.
    pub normal: Vec2,
    /// Offsets `x0` and `-x0` along the normal.
    pub offsets: [f64; 2],
}

impl IrrotationalLines {
    /// Point on line `which` at tangential coordinate `s`.
    pub fn point(&self, which: usize, s: f64) -> Vec2 {
        let x = self.offsets[which];
        let t = perp(self.normal);
        [x * self.normal[0] + s * t[0], x * self.normal[1] + s * t[1]]
    }
}

pub fn irrotational_lines(k: Vec2, params: &PhysicalParams) -> Result<IrrotationalLines> {
    if params.alpha != 0.0 {
        return Err(Error::AlphaNonZero);
    }
    let kn = norm(k);
    if kn == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let x0 = (params.restoring(kn) / kappa(kn, params)?).sqrt();
    Ok(IrrotationalLines { normal: [k[0] / kn, k[1] / kn], offsets: [x0, -x0] })
}

/// Outcome of the non-resonance scan over `|k| < |α|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceReport {
    pub offending: Vec<LatticePoint>,
    pub pass: bool,
    /// Smallest distance of `√(α² - |k|²) d` to `πℤ₊` over the scan (infinite if empty).
    pub margin: f64,
}

pub fn check_nonresonance(lat: &Lattice, params: &PhysicalParams, tol: f64) -> ResonanceReport {
    let a = params.alpha.abs();
    let mut offending = Vec::new();
    let mut margin = f64::INFINITY;
    for p in lat.enumerate(a) {
        let kn = norm(p.k);
        if kn >= a {
            continue;
        }
        let x = (a * a - kn * kn).sqrt() * params.d;
        let (dist, _) = pole_distance(x);
        margin = margin.min(dist);
        if dist <= tol {
            offending.push(p);
        }
    }
    ResonanceReport { pass: offending.is_empty(), offending, margin }
}

/// A dispersion root found in the lattice scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub n1: i32,
    pub n2: i32,
    pub k: Vec2,
    /// `ρ(c, k) / (g + σ|k|²)`.
    pub normalized_rho: f64,
}

/// Result of [`enumerate_dispersion_roots`].
#[derive(Debug, Clone, PartialEq)]
pub struct RootScan {
    pub roots: Vec<Root>,
    /// Modes where `κ` has a pole (vertical resonance); reported, not evaluated.
    pub resonant: Vec<LatticePoint>,
    /// Scan radius used.
    pub radius: f64,
    /// Smallest `|ρ| / (g + σ|k|²)` among the scanned non-roots.
    pub nonroot_margin: f64,
}

/// Radius beyond which `ρ(c, k) > 0` for every `k`.
///
/// Uses `κ(|k|) <= |k| + 1/d` for `|k| >= |α|`, so
/// `ρ >= g + σR² - |c|²R - |c|²/d - |α||c|²/2`.
pub fn root_scan_radius(c: Vec2, params: &PhysicalParams) -> f64 {
    let c2 = dot(c, c);
    let s = params.sigma;
    let disc = c2 * c2 + 4.0 * s * (c2 / params.d + 0.5 * params.alpha.abs() * c2);
    let r = (c2 + disc.sqrt()) / (2.0 * s);
    r.max(params.alpha.abs()) * (1.0 + 1e-9) + 1e-12
}

pub fn enumerate_dispersion_roots(c: Vec2, lat: &Lattice, params: &PhysicalParams, tol: f64) -> RootScan {
    let radius = root_scan_radius(c, params);
    let mut roots = Vec::new();
    let mut resonant = Vec::new();
    let mut nonroot_margin = f64::INFINITY;
    for p in lat.enumerate(radius) {
        if p.n1 == 0 && p.n2 == 0 {
            continue;
        }
        match rho(c, p.k, params) {
            Ok(r) => {
                let rn = r / params.restoring(norm(p.k));
                if rn.abs() <= tol {
                    roots.push(Root { n1: p.n1, n2: p.n2, k: p.k, normalized_rho: rn });
                } else {
                    nonroot_margin = nonroot_margin.min(rn.abs());
                }
            }
            Err(_) => resonant.push(p),
        }
    }
    RootScan { roots, resonant, radius, nonroot_margin }
}
