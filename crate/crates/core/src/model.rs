//! Problem constants, lattices, surface and field representations, laminar flows and the
//! flattening geometry.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{ChebGrid, ModeSet, Transform2D};

/// Gravity, surface tension, depth and Beltrami constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub g: f64,
    pub sigma: f64,
    pub d: f64,
    pub alpha: f64,
}

impl PhysicalParams {
    pub fn new(g: f64, sigma: f64, d: f64, alpha: f64) -> Result<Self> {
        let p = PhysicalParams { g, sigma, d, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| Error::InvalidParameter(format!("{name} must be positive and finite, got {v}"));
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(bad("g", self.g));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(bad("sigma", self.sigma));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(bad("d", self.d));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be finite, got {}", self.alpha)));
        }
        Ok(())
    }

    /// `g + sigma |k|^2`, the natural scale of the dispersion function.
    pub fn restoring(&self, k_norm: f64) -> f64 {
        self.g + self.sigma * k_norm * k_norm
    }
}

pub type Vec2 = [f64; 2];

pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn perp(k: Vec2) -> Vec2 {
    [-k[1], k[0]]
}

/// A period lattice `Λ` together with its dual `Λ'`, `k_i · λ_j = 2π δ_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    lambda1: Vec2,
    lambda2: Vec2,
    k1: Vec2,
    k2: Vec2,
}

/// One dual-lattice point `k = n1 k1 + n2 k2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePoint {
    pub n1: i32,
    pub n2: i32,
    pub k: Vec2,
}

fn dual_pair(a: Vec2, b: Vec2) -> Result<(Vec2, Vec2)> {
    let det = a[0] * b[1] - a[1] * b[0];
    let scale = norm(a) * norm(b);
    if !(det.abs() > 1e-12 * scale) || !det.is_finite() {
        return Err(Error::DegenerateLattice(det));
    }
    // rows of 2π (A^T)^{-1}, A with rows a, b
    let s = 2.0 * PI / det;
    Ok(([s * b[1], -s * b[0]], [-s * a[1], s * a[0]]))
}

impl Lattice {
    pub fn from_generators(lambda1: Vec2, lambda2: Vec2) -> Result<Self> {
        let (k1, k2) = dual_pair(lambda1, lambda2)?;
        Ok(Lattice { lambda1, lambda2, k1, k2 })
    }

    pub fn from_dual(k1: Vec2, k2: Vec2) -> Result<Self> {
        let (lambda1, lambda2) = dual_pair(k1, k2)?;
        Ok(Lattice { lambda1, lambda2, k1, k2 })
    }

    /// `k1 = k (cos ω, sin ω)`, `k2 = k (cos ω, -sin ω)`.
    pub fn symmetric(k: f64, omega: f64) -> Result<Self> {
        if !(k > 0.0) || !(omega > 0.0 && omega < PI / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "symmetric lattice needs k > 0 and omega in (0, pi/2), got k = {k}, omega = {omega}"
            )));
        }
        Self::from_dual([k * omega.cos(), k * omega.sin()], [k * omega.cos(), -k * omega.sin()])
    }

    pub fn lambda1(&self) -> Vec2 {
        self.lambda1
    }

    pub fn lambda2(&self) -> Vec2 {
        self.lambda2
    }

    pub fn k1(&self) -> Vec2 {
        self.k1
    }

    pub fn k2(&self) -> Vec2 {
        self.k2
    }

    pub fn k(&self, n1: i32, n2: i32) -> Vec2 {
        let (a, b) = (n1 as f64, n2 as f64);
        [a * self.k1[0] + b * self.k2[0], a * self.k1[1] + b * self.k2[1]]
    }

    /// Physical point `a1 λ1 + a2 λ2`.
    pub fn point(&self, a1: f64, a2: f64) -> Vec2 {
        [a1 * self.lambda1[0] + a2 * self.lambda2[0], a1 * self.lambda1[1] + a2 * self.lambda2[1]]
    }

    /// Area of the periodic cell.
    pub fn cell_area(&self) -> f64 {
        (self.lambda1[0] * self.lambda2[1] - self.lambda1[1] * self.lambda2[0]).abs()
    }

    /// All dual-lattice points with `|k| <= radius`, ordered by `(n1, n2)`.
    pub fn enumerate(&self, radius: f64) -> Vec<LatticePoint> {
        if !(radius >= 0.0) {
            return Vec::new();
        }
        // n_i = k · λ_i / 2π
        let b1 = (radius * norm(self.lambda1) / (2.0 * PI)).floor() as i32 + 1;
        let b2 = (radius * norm(self.lambda2) / (2.0 * PI)).floor() as i32 + 1;
        let mut out = Vec::new();
        for n1 in -b1..=b1 {
            for n2 in -b2..=b2 {
                let k = self.k(n1, n2);
                if norm(k) <= radius {
                    out.push(LatticePoint { n1, n2, k });
                }
            }
        }
        out
    }
}

/// Free-function form of [`Lattice::enumerate`].
pub fn lattice_enumerate(lat: &Lattice, radius: f64) -> Vec<LatticePoint> {
    lat.enumerate(radius)
}

/// Laminar flow `U[c1, c2] = c1 U^(1) + c2 U^(2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaminarFlow {
    pub c1: f64,
    pub c2: f64,
}

impl LaminarFlow {
    pub fn new(c1: f64, c2: f64) -> Self {
        LaminarFlow { c1, c2 }
    }

    pub fn from_vec(c: Vec2) -> Self {
        LaminarFlow { c1: c[0], c2: c[1] }
    }

    pub fn c(&self) -> Vec2 {
        [self.c1, self.c2]
    }

    pub fn eval(&self, alpha: f64, z: f64) -> [f64; 3] {
        let (s, c) = (alpha * z).sin_cos();
        [self.c1 * c + self.c2 * s, -self.c1 * s + self.c2 * c, 0.0]
    }

    /// Bernoulli constant `(c1^2 + c2^2) / 2`.
    pub fn bernoulli_q(&self) -> f64 {
        0.5 * (self.c1 * self.c1 + self.c2 * self.c2)
    }
}

pub fn laminar_eval(flow: &LaminarFlow, params: &PhysicalParams, z: f64) -> Result<[f64; 3]> {
    let tol = 1e-12 * params.d;
    if z > tol || z < -params.d - tol {
        return Err(Error::OutOfRange(z));
    }
    Ok(flow.eval(params.alpha, z))
}

pub fn bernoulli_q(flow: &LaminarFlow) -> f64 {
    flow.bernoulli_q()
}

/// Real even surface elevation, stored as real coefficients over `|n1|, |n2| <= N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProfile {
    modes: ModeSet,
    coeffs: Vec<f64>,
}

impl SurfaceProfile {
    pub fn zeros(n: usize) -> Self {
        let modes = ModeSet::new(n);
        SurfaceProfile { modes, coeffs: vec![0.0; modes.len()] }
    }

    /// Builds a profile from raw coefficients, symmetrising `η̂(k) = η̂(-k)`.
    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        let modes = ModeSet::new(n);
        if coeffs.len() != modes.len() {
            return Err(Error::Shape(format!("expected {} coefficients, got {}", modes.len(), coeffs.len())));
        }
        let mut s = SurfaceProfile { modes, coeffs };
        s.symmetrize();
        Ok(s)
    }

    /// `amp cos(k · x')` for `k = n1 k1 + n2 k2`.
    pub fn cosine(n: usize, n1: i32, n2: i32, amp: f64) -> Result<Self> {
        let mut s = Self::zeros(n);
        s.add_cosine(n1, n2, amp)?;
        Ok(s)
    }

    pub fn truncation(&self) -> usize {
        self.modes.truncation()
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, n1: i32, n2: i32) -> f64 {
        self.modes.index(n1, n2).map(|i| self.coeffs[i]).unwrap_or(0.0)
    }

    /// Sets `η̂` at `±k`.
    pub fn set(&mut self, n1: i32, n2: i32, v: f64) -> Result<()> {
        let i = self.modes.index(n1, n2).ok_or(Error::KernelOutsideTruncation)?;
        self.coeffs[i] = v;
        self.coeffs[self.modes.neg(i)] = v;
        Ok(())
    }

    pub fn add_cosine(&mut self, n1: i32, n2: i32, amp: f64) -> Result<()> {
        if n1 == 0 && n2 == 0 {
            let i = self.modes.zero();
            self.coeffs[i] += amp;
            return Ok(());
        }
        let i = self.modes.index(n1, n2).ok_or(Error::KernelOutsideTruncation)?;
        let j = self.modes.neg(i);
        self.coeffs[i] += 0.5 * amp;
        self.coeffs[j] += 0.5 * amp;
        Ok(())
    }

    fn symmetrize(&mut self) {
        for i in 0..self.modes.len() {
            let j = self.modes.neg(i);
            if i < j {
                let m = 0.5 * (self.coeffs[i] + self.coeffs[j]);
                self.coeffs[i] = m;
                self.coeffs[j] = m;
            }
        }
    }

    pub fn as_complex(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect()
    }

    pub fn scaled(&self, a: f64) -> Self {
        SurfaceProfile { modes: self.modes, coeffs: self.coeffs.iter().map(|c| a * c).collect() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        SurfaceProfile {
            modes: self.modes,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    /// The same profile at truncation `n`, zero-padding or dropping harmonics.
    pub fn resized(&self, n: usize) -> Self {
        let mut out = Self::zeros(n);
        for (i, n1, n2) in self.modes.iter() {
            if let Some(j) = out.modes.index(n1, n2) {
                out.coeffs[j] = self.coeffs[i];
            }
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `(η, η_x, η_y)` at a physical point by direct summation.
    pub fn eval_with_gradient(&self, lat: &Lattice, x: Vec2) -> (f64, f64, f64) {
        let (mut e, mut ex, mut ey) = (0.0, 0.0, 0.0);
        for (i, n1, n2) in self.modes.iter() {
            let c = self.coeffs[i];
            if c == 0.0 {
                continue;
            }
            let k = lat.k(n1, n2);
            let (s, co) = dot(k, x).sin_cos();
            e += c * co;
            ex -= c * k[0] * s;
            ey -= c * k[1] * s;
        }
        (e, ex, ey)
    }

    pub fn eval(&self, lat: &Lattice, x: Vec2) -> f64 {
        self.eval_with_gradient(lat, x).0
    }

    /// Minimum over a collocation grid.
    pub fn grid_min(&self, transform: &Transform2D) -> f64 {
        transform.synth(&self.as_complex()).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Checks `min η > -d` on the collocation grid.
    pub fn check_domain(&self, transform: &Transform2D, d: f64) -> Result<()> {
        let m = self.grid_min(transform) + d;
        if !(m > 0.0) {
            return Err(Error::DegenerateDomain(m));
        }
        Ok(())
    }
}

/// Periodic vector field on the flat slab: per-mode complex vertical profiles.
///
/// Layout: `data[c][mode * nz + j]`, with `j` indexing the z-grid from the surface down.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3D {
    modes: ModeSet,
    nz: usize,
    data: [Vec<Complex64>; 3],
}

impl Field3D {
    pub fn zeros(n: usize, nz: usize) -> Self {
        let modes = ModeSet::new(n);
        let z = vec![Complex64::new(0.0, 0.0); modes.len() * nz];
        Field3D { modes, nz, data: [z.clone(), z.clone(), z] }
    }

    pub fn truncation(&self) -> usize {
        self.modes.truncation()
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.data[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c]
    }

    pub fn profile(&self, c: usize, mode: usize) -> &[Complex64] {
        &self.data[c][mode * self.nz..(mode + 1) * self.nz]
    }

    pub fn profile_mut(&mut self, c: usize, mode: usize) -> &mut [Complex64] {
        let nz = self.nz;
        &mut self.data[c][mode * nz..(mode + 1) * nz]
    }

    pub fn at(&self, c: usize, mode: usize, j: usize) -> Complex64 {
        self.data[c][mode * self.nz + j]
    }

    pub fn axpy(&mut self, a: f64, x: &Field3D) {
        for c in 0..3 {
            for (y, xv) in self.data[c].iter_mut().zip(&x.data[c]) {
                *y += xv * a;
            }
        }
    }

    pub fn plus(&self, other: &Field3D) -> Field3D {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn minus(&self, other: &Field3D) -> Field3D {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn scaled(&self, a: f64) -> Field3D {
        let mut out = self.clone();
        for c in 0..3 {
            for v in &mut out.data[c] {
                *v *= a;
            }
        }
        out
    }

    /// Largest coefficient magnitude over all components.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().flatten().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest coefficient magnitude over the modes where `pred(n1, n2)` holds.
    pub fn max_abs_where(&self, mut pred: impl FnMut(i32, i32) -> bool) -> f64 {
        let mut m: f64 = 0.0;
        for (idx, n1, n2) in self.modes.iter() {
            if pred(n1, n2) {
                for c in 0..3 {
                    for v in self.profile(c, idx) {
                        m = m.max(v.norm());
                    }
                }
            }
        }
        m
    }

    /// Adds a laminar profile to the `k = 0` mode.
    pub fn add_laminar(&mut self, flow: &LaminarFlow, alpha: f64, z: &[f64]) {
        let zero = self.modes.zero();
        for (j, &zj) in z.iter().enumerate() {
            let u = flow.eval(alpha, zj);
            for (c, uc) in u.iter().enumerate() {
                self.data[c][zero * self.nz + j] += Complex64::new(*uc, 0.0);
            }
        }
    }

    /// Largest violation of the symmetry classes: components 1, 2 real and even in k,
    /// component 3 imaginary and odd.
    pub fn symmetry_leakage(&self) -> f64 {
        let mut m: f64 = 0.0;
        for idx in 0..self.modes.len() {
            let neg = self.modes.neg(idx);
            for j in 0..self.nz {
                for c in 0..2 {
                    let a = self.at(c, idx, j);
                    let b = self.at(c, neg, j);
                    m = m.max(a.im.abs()).max((a - b).norm());
                }
                let a = self.at(2, idx, j);
                let b = self.at(2, neg, j);
                m = m.max(a.re.abs()).max((a + b).norm());
            }
        }
        m
    }
}

/// Basis vectors `f1, f2, f3` of the flattening map and its Jacobian `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub f: [[f64; 3]; 3],
    pub jacobian: f64,
}

/// Geometry of the flattening map at horizontal point `x` and flattened depth `zdot`.
pub fn flatten_geometry(eta: &SurfaceProfile, lat: &Lattice, d: f64, x: Vec2, zdot: f64) -> Result<Geometry> {
    let (e, ex, ey) = eta.eval_with_gradient(lat, x);
    if !(e + d > 0.0) {
        return Err(Error::DegenerateDomain(e + d));
    }
    let tol = 1e-12 * d;
    if zdot > tol || zdot < -d - tol {
        return Err(Error::OutOfRange(zdot));
    }
    let s = (zdot + d) / d;
    let j = (e + d) / d;
    Ok(Geometry { f: [[1.0, 0.0, ex * s], [0.0, 1.0, ey * s], [0.0, 0.0, j]], jacobian: j })
}

/// Shared discretisation context: constants, lattice, truncation, z-grid and transforms.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    pub params: PhysicalParams,
    pub lattice: Lattice,
    modes: ModeSet,
    grid: ChebGrid,
    transform: Transform2D,
    wave: Vec<Vec2>,
}

impl SpectralModel {
    pub fn new(params: PhysicalParams, lattice: Lattice, n: usize, nz: usize) -> Result<Self> {
        params.validate()?;
        if n == 0 {
            return Err(Error::InvalidParameter("truncation must be at least 1".into()));
        }
        let modes = ModeSet::new(n);
        let grid = ChebGrid::new(nz, params.d)?;
        let transform = Transform2D::new(modes);
        let wave = modes.iter().map(|(_, a, b)| lattice.k(a, b)).collect();
        Ok(SpectralModel { params, lattice, modes, grid, transform, wave })
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn truncation(&self) -> usize {
        self.modes.truncation()
    }

    pub fn grid(&self) -> &ChebGrid {
        &self.grid
    }

    pub fn nz(&self) -> usize {
        self.grid.len()
    }

    pub fn transform(&self) -> &Transform2D {
        &self.transform
    }

    /// Wave vector of mode `idx`.
    pub fn wave(&self, idx: usize) -> Vec2 {
        self.wave[idx]
    }

    pub fn zero_field(&self) -> Field3D {
        Field3D::zeros(self.truncation(), self.nz())
    }

    pub fn zero_surface(&self) -> SurfaceProfile {
        SurfaceProfile::zeros(self.truncation())
    }

    /// Physical coordinates of grid point `g`.
    pub fn grid_point(&self, g: usize) -> Vec2 {
        let (a1, a2) = self.transform.lattice_coords(g);
        self.lattice.point(a1, a2)
    }

    /// Fourier synthesis of a field at `(x', z)`, interpolating barycentrically in z.
    pub fn eval_field(&self, field: &Field3D, x: Vec2, z: f64) -> Result<[f64; 3]> {
        self.eval_field_complex(field, x, z).map(|v| [v[0].re, v[1].re, v[2].re])
    }

    /// Physical point and velocity `u = Σ u̇_l f_l / J` above `(x', ż)` for a dotted field
    /// on the domain bounded by `eta`. Returns `(z, u)` with `z = ż + η (ż + d)/d`.
    pub fn eval_physical(&self, dotted: &Field3D, eta: &SurfaceProfile, x: Vec2, zdot: f64) -> Result<(f64, [f64; 3])> {
        let geo = flatten_geometry(eta, &self.lattice, self.params.d, x, zdot)?;
        let ud = self.eval_field(dotted, x, zdot)?;
        let mut u = [0.0; 3];
        for (l, f) in geo.f.iter().enumerate() {
            for (ui, fi) in u.iter_mut().zip(f) {
                *ui += ud[l] * fi / geo.jacobian;
            }
        }
        let z = zdot + eta.eval(&self.lattice, x) * (zdot + self.params.d) / self.params.d;
        Ok((z, u))
    }

    /// Like [`eval_field`](Self::eval_field) but keeps the imaginary residue.
    pub fn eval_field_complex(&self, field: &Field3D, x: Vec2, z: f64) -> Result<[Complex64; 3]> {
        if field.truncation() != self.truncation() || field.nz() != self.nz() {
            return Err(Error::Shape("field does not match the model discretisation".into()));
        }
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (idx, _, _) in self.modes.iter() {
            let phase = Complex64::from_polar(1.0, dot(self.wave[idx], x));
            for (c, o) in out.iter_mut().enumerate() {
                let prof = field.profile(c, idx);
                if prof.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                *o += self.grid.interpolate(prof, z)? * phase;
            }
        }
        if out.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            // still validate z for the all-zero field
            let tol = 1e-12 * self.params.d;
            if z > tol || z < -self.params.d - tol {
                return Err(Error::OutOfRange(z));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_lattice_identity() {
        let lat = Lattice::from_generators([1.3, 0.2], [-0.4, 2.1]).unwrap();
        let (k1, k2, l1, l2) = (lat.k1(), lat.k2(), lat.lambda1(), lat.lambda2());
        assert!((dot(k1, l1) - 2.0 * PI).abs() < 1e-12 * 2.0 * PI);
        assert!((dot(k2, l2) - 2.0 * PI).abs() < 1e-12 * 2.0 * PI);
        assert!(dot(k1, l2).abs() < 1e-12 * 2.0 * PI);
        assert!(dot(k2, l1).abs() < 1e-12 * 2.0 * PI);
        assert!(Lattice::from_generators([1.0, 1.0], [2.0, 2.0]).is_err());
    }

    #[test]
    fn laminar_examples() {
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(laminar_eval(&LaminarFlow::new(1.0, 0.0), &p, -0.5).unwrap(), [1.0, 0.0, 0.0]);
        let p = PhysicalParams::new(1.0, 1.0, 4.0, PI / 2.0).unwrap();
        let u = laminar_eval(&LaminarFlow::new(0.0, 1.0), &p, 1.0 - 2.0).unwrap();
        assert!((u[0] + 1.0).abs() < 1e-15 && u[1].abs() < 1e-15);
        assert_eq!(bernoulli_q(&LaminarFlow::new(3.0, 4.0)), 12.5);
        assert!(laminar_eval(&LaminarFlow::new(1.0, 0.0), &p, 0.5).is_err());
    }

    #[test]
    fn geometry_examples() {
        let lat = Lattice::symmetric(2.0, PI / 3.0).unwrap();
        let g = flatten_geometry(&SurfaceProfile::zeros(2), &lat, 1.0, [0.3, 0.1], -0.4).unwrap();
        assert_eq!(g.f, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(g.jacobian, 1.0);
        let mut eta = SurfaceProfile::zeros(2);
        eta.add_cosine(0, 0, 1.0).unwrap();
        let g = flatten_geometry(&eta, &lat, 1.0, [0.3, 0.1], -0.4).unwrap();
        assert_eq!(g.jacobian, 2.0);
        let mut eta = SurfaceProfile::zeros(2);
        eta.add_cosine(0, 0, -1.5).unwrap();
        assert!(matches!(flatten_geometry(&eta, &lat, 1.0, [0.0, 0.0], 0.0), Err(Error::DegenerateDomain(_))));
    }
}
