//! Explicit kernel elements of the linearised problem and the four resonance cases.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dispersion::{check_nonresonance, enumerate_dispersion_roots, pole_distance, rho, POLE_TOLERANCE};
use crate::error::{Error, Result};
use crate::model::{dot, norm, Field3D, Lattice, PhysicalParams, Vec2};
use crate::spectral::{ChebGrid, ModeSet};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Vertical-eigenvalue cases of the linearised problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// `k ≠ 0`, no vertical resonance: one kernel mode per dispersion root.
    I,
    /// `k = 0`, `|α| ∉ (π/d)ℤ₊`: no kernel.
    II,
    /// `k ≠ 0`, `√(α² - |k|²) = nπ/d`; profile `sin(nπz/d)`.
    III { n: u64 },
    /// `k = 0`, `|α| = nπ/d`; even `n` leaves `(c̃1, c̃2)` free with `η̂ = -c·c̃/g`.
    IV { n: u64, even: bool },
}

pub fn classify_case(k: Vec2, params: &PhysicalParams) -> Case {
    let kn = norm(k);
    let t = params.alpha * params.alpha - kn * kn;
    let resonant = if t > 0.0 {
        let (dist, n) = pole_distance(t.sqrt() * params.d);
        (dist <= POLE_TOLERANCE).then_some(n)
    } else {
        None
    };
    match (kn == 0.0, resonant) {
        (false, None) => Case::I,
        (true, None) => Case::II,
        (false, Some(n)) => Case::III { n },
        (true, Some(n)) => Case::IV { n, even: n % 2 == 0 },
    }
}

/// `S(y) = sin(√t y)/√t` and its derivative `C(y)` with the shared series near `t = 0`.
fn s_and_c(t: f64, y: f64, d: f64) -> (f64, f64) {
    if (t * d * d).abs() < crate::dispersion::BRANCH_SERIES_THRESHOLD {
        let ty2 = t * y * y;
        let s = y * (1.0 - ty2 / 6.0 + ty2 * ty2 / 120.0 - ty2.powi(3) / 5040.0 + ty2.powi(4) / 362_880.0);
        let c = 1.0 - ty2 / 2.0 + ty2 * ty2 / 24.0 - ty2.powi(3) / 720.0 + ty2.powi(4) / 40_320.0;
        (s, c)
    } else if t > 0.0 {
        let r = t.sqrt();
        ((r * y).sin() / r, (r * y).cos())
    } else {
        let r = (-t).sqrt();
        ((r * y).sinh() / r, (r * y).cosh())
    }
}

fn check_profile_pole(k_norm: f64, params: &PhysicalParams) -> Result<f64> {
    let t = params.alpha * params.alpha - k_norm * k_norm;
    if t > 0.0 && (t * params.d * params.d).abs() >= crate::dispersion::BRANCH_SERIES_THRESHOLD {
        let x = t.sqrt() * params.d;
        let (dist, n) = pole_distance(x);
        if dist <= POLE_TOLERANCE {
            return Err(Error::ResonancePole { arg: x, n });
        }
    }
    Ok(t)
}

/// `(φ(z), φ'(z))` for the Case I profile.
pub fn phi_with_derivative(z: f64, k_norm: f64, params: &PhysicalParams) -> Result<(f64, f64)> {
    let t = check_profile_pole(k_norm, params)?;
    let d = params.d;
    let (sd, _) = s_and_c(t, d, d);
    let (s, c) = s_and_c(t, z + d, d);
    Ok((s / sd, c / sd))
}

/// Case I vertical profile: `sin(√(α²-|k|²)(z+d)) / sin(√(α²-|k|²)d)` and its limits.
pub fn phi_profile(z: f64, k_norm: f64, params: &PhysicalParams) -> Result<f64> {
    phi_with_derivative(z, k_norm, params).map(|p| p.0)
}

/// A Case I kernel element at a single wave vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMode {
    pub k: Vec2,
    pub eta_hat: f64,
    pub case: Case,
    /// `v̂1, v̂2, v̂3` on the z-grid.
    pub profiles: [Vec<Complex64>; 3],
    /// Analytic z-derivatives of the profiles.
    pub derivatives: [Vec<Complex64>; 3],
    pub z: Vec<f64>,
}

/// Normalised residuals of the six linearised equations for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeResiduals {
    pub beltrami: f64,
    pub divergence: f64,
    pub surface_kinematic: f64,
    pub bottom: f64,
    pub integral: f64,
    pub surface_dynamic: f64,
}

impl ModeResiduals {
    pub fn max(&self) -> f64 {
        [self.beltrami, self.divergence, self.surface_kinematic, self.bottom, self.integral, self.surface_dynamic]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Kernel mode at `k` for parameters `c` satisfying `ρ(c, k) = 0` to `tol` (relative).
pub fn build_kernel_mode(
    k: Vec2,
    c: Vec2,
    eta_hat: f64,
    params: &PhysicalParams,
    grid: &ChebGrid,
    tol: f64,
) -> Result<KernelMode> {
    let k2 = dot(k, k);
    if k2 == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let case = classify_case(k, params);
    if let Case::III { n } = case {
        return Err(Error::ResonancePole { arg: (params.alpha.powi(2) - k2).sqrt() * params.d, n });
    }
    let r = rho(c, k, params)? / params.restoring(k2.sqrt());
    if r.abs() > tol {
        return Err(Error::DispersionMismatch(r));
    }
    let kn = k2.sqrt();
    let t = params.alpha * params.alpha - k2;
    let a = params.alpha;
    let lambda = I * dot(c, k);
    let (kx, ky) = (k[0], k[1]);
    let nz = grid.len();
    let mut profiles = [vec![Complex64::new(0.0, 0.0); nz], vec![Complex64::new(0.0, 0.0); nz], vec![Complex64::new(0.0, 0.0); nz]];
    let mut derivatives = profiles.clone();
    for (j, &z) in grid.nodes().iter().enumerate() {
        let (phi, dphi) = phi_with_derivative(z, kn, params)?;
        let ddphi = -t * phi;
        let pre = I * lambda * eta_hat / k2;
        profiles[0][j] = pre * (kx * dphi + a * ky * phi);
        profiles[1][j] = pre * (ky * dphi - a * kx * phi);
        profiles[2][j] = lambda * eta_hat * phi;
        derivatives[0][j] = pre * (kx * ddphi + a * ky * dphi);
        derivatives[1][j] = pre * (ky * ddphi - a * kx * dphi);
        derivatives[2][j] = lambda * eta_hat * dphi;
    }
    Ok(KernelMode { k, eta_hat, case, profiles, derivatives, z: grid.nodes().to_vec() })
}

impl KernelMode {
    /// Residuals of the linearised system evaluated mode-wise with analytic derivatives.
    pub fn residuals(&self, c: Vec2, params: &PhysicalParams, grid: &ChebGrid) -> ModeResiduals {
        let [v1, v2, v3] = &self.profiles;
        let [d1, d2, d3] = &self.derivatives;
        let (kx, ky) = (self.k[0], self.k[1]);
        let a = params.alpha;
        let kn = norm(self.k);
        let mut bel: f64 = 0.0;
        let mut bel_scale: f64 = 0.0;
        let mut div: f64 = 0.0;
        let mut div_scale: f64 = 0.0;
        for j in 0..v1.len() {
            let r1 = I * ky * v3[j] - d2[j] - a * v1[j];
            let r2 = d1[j] - I * kx * v3[j] - a * v2[j];
            let r3 = I * kx * v2[j] - I * ky * v1[j] - a * v3[j];
            bel = bel.max(r1.norm()).max(r2.norm()).max(r3.norm());
            let vmag = v1[j].norm().max(v2[j].norm()).max(v3[j].norm());
            let dmag = d1[j].norm().max(d2[j].norm()).max(d3[j].norm());
            bel_scale = bel_scale.max(a.abs() * vmag + dmag + kn * vmag);
            let dv = I * kx * v1[j] + I * ky * v2[j] + d3[j];
            div = div.max(dv.norm());
            div_scale = div_scale.max(kn * v1[j].norm().max(v2[j].norm()) + d3[j].norm());
        }
        let last = v1.len() - 1;
        let ck = dot(c, self.k);
        let target = I * ck * self.eta_hat;
        let amp = (ck * self.eta_hat).abs().max(1e-300);
        let restoring = params.restoring(kn) * self.eta_hat;
        let dyn_res = c[0] * v1[0] + c[1] * v2[0] + restoring;
        // integral conditions only constrain k = 0, so they hold trivially here
        let integral = if kn == 0.0 {
            (grid.integrate(v1).norm() + grid.integrate(v2).norm()) / amp
        } else {
            0.0
        };
        ModeResiduals {
            beltrami: bel / bel_scale.max(1e-300),
            divergence: div / div_scale.max(1e-300),
            surface_kinematic: (v3[0] - target).norm() / amp,
            bottom: v3[last].norm() / amp,
            integral,
            surface_dynamic: dyn_res.norm() / restoring.abs().max(1e-300),
        }
    }

    /// Adds this mode at `(n1, n2)` and its conjugate partner at `-(n1, n2)`.
    pub fn insert_into(&self, field: &mut Field3D, n1: i32, n2: i32) -> Result<()> {
        let modes: ModeSet = field.modes();
        let idx = modes.index(n1, n2).ok_or(Error::KernelOutsideTruncation)?;
        let neg = modes.neg(idx);
        for c in 0..3 {
            for j in 0..self.profiles[c].len() {
                field.profile_mut(c, idx)[j] += self.profiles[c][j];
                field.profile_mut(c, neg)[j] += self.profiles[c][j].conj();
            }
        }
        Ok(())
    }
}

/// Symmetric kernel dimension at `c` with one representative mode (`η̂ = 1/2`) per `±k`.
pub fn kernel_dimension(
    c: Vec2,
    lat: &Lattice,
    params: &PhysicalParams,
    grid: &ChebGrid,
) -> Result<(usize, Vec<((i32, i32), KernelMode)>)> {
    let report = check_nonresonance(lat, params, POLE_TOLERANCE);
    if let Some(p) = report.offending.first() {
        let x = (params.alpha.powi(2) - dot(p.k, p.k)).sqrt() * params.d;
        return Err(Error::ResonancePole { arg: x, n: pole_distance(x).1 });
    }
    let scan = enumerate_dispersion_roots(c, lat, params, crate::bifurcation::ROOT_TOLERANCE);
    let mut out = Vec::new();
    for r in &scan.roots {
        if r.n1 > 0 || (r.n1 == 0 && r.n2 > 0) {
            let mode = build_kernel_mode(r.k, c, 0.5, params, grid, crate::bifurcation::ROOT_TOLERANCE)?;
            out.push(((r.n1, r.n2), mode));
        }
    }
    Ok((scan.roots.len() / 2, out))
}

/// Diagnostic Case III profile `sin(nπ z / d)`.
pub fn case_three_profile(z: f64, n: u64, d: f64) -> f64 {
    (PI * n as f64 * z / d).sin()
}
