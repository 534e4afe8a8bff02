//! The flattened nonlinear system on the fixed slab `-d < ż < 0`.
//!
//! Fields are stored in dotted (flattened) components `u̇`, related to the physical field
//! by `Σ u̇_l f_l = J u`. With `a_j = f_j · u` the covariant components, the dotted
//! representation of the physical curl is the flat curl of `a`, so
//! `curl u = α u ⇔ curl_flat(a(u̇)) = α u̇`, and `N(u̇, η) = u̇ - a(u̇)`.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::dispersion::{check_nonresonance, pole_distance, POLE_TOLERANCE};
use crate::error::{Error, Result};
use crate::model::{dot, Field3D, LaminarFlow, SpectralModel, SurfaceProfile, Vec2};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Maximum Picard iterations for `v(η, c)`.
pub const PICARD_MAX_ITER: usize = 50;
/// Relative successive-iterate tolerance for `v(η, c)`.
pub const PICARD_TOL: f64 = 1e-12;
/// Successive-change ratio above which the Picard map is declared non-contracting.
pub const CONTRACTION_LIMIT: f64 = 0.9;

/// Right-hand side `(w, f)` of `C_α v = (curl v - α v, v_3|_{ż=0})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurlRhs {
    pub w: Field3D,
    /// Surface trace coefficients, one per mode.
    pub f: Vec<Complex64>,
}

/// Explicit shift field `w^η` and laminar correction `Ũ^η = U[c̃]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftData {
    pub w_eta: Field3D,
    pub c_tilde: Vec2,
}

impl ShiftData {
    pub fn u_tilde(&self) -> LaminarFlow {
        LaminarFlow::from_vec(self.c_tilde)
    }
}

/// Surface elevation and its derivatives on the collocation grid.
#[derive(Debug, Clone)]
pub struct EtaGrid {
    pub eta: Vec<f64>,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
    pub exx: Vec<f64>,
    pub exy: Vec<f64>,
    pub eyy: Vec<f64>,
}

/// Output of [`FlatSolver::solve_v_of_eta`].
#[derive(Debug, Clone, PartialEq)]
pub struct VSolution {
    pub v: Field3D,
    pub shift: ShiftData,
    pub iterations: usize,
    /// Last observed ratio of successive Picard changes.
    pub contraction: f64,
}

impl VSolution {
    /// Full dotted field `u̇ = U[c] + w^η + U[c̃] + v`.
    pub fn u_dot(&self, solver: &FlatSolver, c: Vec2) -> Field3D {
        let m = solver.model();
        let mut u = self.v.plus(&self.shift.w_eta);
        u.add_laminar(&LaminarFlow::from_vec(c), m.params.alpha, m.grid().nodes());
        u.add_laminar(&self.shift.u_tilde(), m.params.alpha, m.grid().nodes());
        u
    }
}

/// `H(η, c)` together with the field it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct HEvaluation {
    pub h: Vec<Complex64>,
    pub solution: VSolution,
}

/// Normalised residuals of the flattened system. Velocity equations are scaled by
/// `U0 = max(|c|, tiny)` and `d`; the Bernoulli equation by `g d + U0²`. Norms are sums of
/// coefficient magnitudes over modes (bounding the sup over the cell), maximised over z.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualReport {
    pub beltrami: f64,
    pub divergence: f64,
    pub surface_kinematic: f64,
    pub bottom: f64,
    pub integral: f64,
    pub bernoulli: f64,
    /// Direct form `½B + gη - σ·curvature - Q(c)`.
    pub physical_bernoulli: f64,
}

impl ResidualReport {
    /// Largest of the velocity equations.
    pub fn max_velocity(&self) -> f64 {
        [self.beltrami, self.divergence, self.surface_kinematic, self.bottom, self.integral]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.max_velocity().max(self.bernoulli).max(self.physical_bernoulli)
    }
}

/// Flattened-system operators plus the factorised mode-wise inverse of `C_α`.
#[derive(Debug, Clone)]
pub struct FlatSolver {
    model: SpectralModel,
    lu_modes: Vec<Option<LU<f64, Dyn, Dyn>>>,
    lu_zero: LU<f64, Dyn, Dyn>,
}

fn sum_abs(v: impl Iterator<Item = Complex64>) -> f64 {
    v.map(|c| c.norm()).sum()
}

impl FlatSolver {
    /// Factorises the mode-wise boundary value problems. Fails if any lattice mode is
    /// vertically resonant.
    pub fn new(model: SpectralModel) -> Result<Self> {
        let p = model.params;
        let report = check_nonresonance(&model.lattice, &p, POLE_TOLERANCE);
        if let Some(bad) = report.offending.first() {
            let x = (p.alpha * p.alpha - dot(bad.k, bad.k)).sqrt() * p.d;
            return Err(Error::ResonancePole { arg: x, n: pole_distance(x).1 });
        }
        let nz = model.nz();
        let d2 = model.grid().diff2().clone();
        let mut lu_modes = Vec::with_capacity(model.modes().len());
        for idx in 0..model.modes().len() {
            if idx == model.modes().zero() {
                lu_modes.push(None);
                continue;
            }
            let k = model.wave(idx);
            let mut a = d2.clone();
            let shift = p.alpha * p.alpha - dot(k, k);
            for j in 0..nz {
                a[(j, j)] += shift;
            }
            for row in [0, nz - 1] {
                for j in 0..nz {
                    a[(row, j)] = 0.0;
                }
                a[(row, row)] = 1.0;
            }
            lu_modes.push(Some(a.lu()));
        }
        let d1 = model.grid().diff();
        let w = model.grid().weights();
        let mut m = DMatrix::<f64>::zeros(2 * nz, 2 * nz);
        for i in 0..nz {
            for j in 0..nz {
                m[(i, nz + j)] = -d1[(i, j)];
                m[(nz + i, j)] = d1[(i, j)];
            }
            m[(i, i)] = -p.alpha;
            m[(nz + i, nz + i)] = -p.alpha;
        }
        for j in 0..2 * nz {
            m[(nz - 1, j)] = 0.0;
            m[(2 * nz - 1, j)] = 0.0;
        }
        for j in 0..nz {
            m[(nz - 1, j)] = w[j];
            m[(2 * nz - 1, nz + j)] = w[j];
        }
        let lu_zero = m.lu();
        if !lu_zero.is_invertible() {
            return Err(Error::ShiftSingular(p.alpha * p.d));
        }
        Ok(FlatSolver { model, lu_modes, lu_zero })
    }

    pub fn model(&self) -> &SpectralModel {
        &self.model
    }

    // ---------------------------------------------------------------- flat operators

    /// Flat-coordinate curl of a dotted field.
    pub fn curl(&self, f: &Field3D) -> Field3D {
        let m = &self.model;
        let nz = m.nz();
        let mut out = m.zero_field();
        for idx in 0..m.modes().len() {
            let k = m.wave(idx);
            let d1 = m.grid().apply_diff(f.profile(0, idx));
            let d2 = m.grid().apply_diff(f.profile(1, idx));
            let (x1, x2, x3) = (f.profile(0, idx), f.profile(1, idx), f.profile(2, idx));
            let mut c1 = vec![ZERO; nz];
            let mut c2 = vec![ZERO; nz];
            let mut c3 = vec![ZERO; nz];
            for j in 0..nz {
                c1[j] = I * k[1] * x3[j] - d2[j];
                c2[j] = d1[j] - I * k[0] * x3[j];
                c3[j] = I * k[0] * x2[j] - I * k[1] * x1[j];
            }
            out.profile_mut(0, idx).copy_from_slice(&c1);
            out.profile_mut(1, idx).copy_from_slice(&c2);
            out.profile_mut(2, idx).copy_from_slice(&c3);
        }
        out
    }

    /// Flat divergence, laid out as `mode * nz + j`.
    pub fn divergence(&self, f: &Field3D) -> Vec<Complex64> {
        let m = &self.model;
        let nz = m.nz();
        let mut out = vec![ZERO; m.modes().len() * nz];
        for idx in 0..m.modes().len() {
            let k = m.wave(idx);
            let d3 = m.grid().apply_diff(f.profile(2, idx));
            for j in 0..nz {
                out[idx * nz + j] = I * k[0] * f.at(0, idx, j) + I * k[1] * f.at(1, idx, j) + d3[j];
            }
        }
        out
    }

    /// Grid values of each component: `vals[c][j * P² + g]`.
    pub fn synth_field(&self, f: &Field3D) -> [Vec<f64>; 3] {
        let m = &self.model;
        let nz = m.nz();
        let gl = m.transform().grid_len();
        let nm = m.modes().len();
        let mut out = [vec![0.0; nz * gl], vec![0.0; nz * gl], vec![0.0; nz * gl]];
        let mut level = vec![ZERO; nm];
        for (c, o) in out.iter_mut().enumerate() {
            for j in 0..nz {
                for (idx, l) in level.iter_mut().enumerate() {
                    *l = f.at(c, idx, j);
                }
                o[j * gl..(j + 1) * gl].copy_from_slice(&m.transform().synth(&level));
            }
        }
        out
    }

    /// Grid values of one component at z-node `j`.
    pub fn synth_level(&self, f: &Field3D, c: usize, j: usize) -> Vec<f64> {
        let level: Vec<Complex64> = (0..self.model.modes().len()).map(|idx| f.at(c, idx, j)).collect();
        self.model.transform().synth(&level)
    }

    pub fn analyze_field(&self, vals: &[Vec<f64>; 3]) -> Field3D {
        let m = &self.model;
        let nz = m.nz();
        let gl = m.transform().grid_len();
        let mut out = m.zero_field();
        for (c, v) in vals.iter().enumerate() {
            for j in 0..nz {
                let coeffs = m.transform().analyze(&v[j * gl..(j + 1) * gl]);
                for (idx, val) in coeffs.into_iter().enumerate() {
                    out.profile_mut(c, idx)[j] = val;
                }
            }
        }
        out
    }

    pub fn eta_grid(&self, eta: &SurfaceProfile) -> Result<EtaGrid> {
        eta_grid(&self.model, eta)
    }

    /// Covariant components `a_j = Σ_l (f_j · f_l / J) u̇_l` on the grid.
    fn covariant(&self, u: &[Vec<f64>; 3], eg: &EtaGrid) -> [Vec<f64>; 3] {
        let m = &self.model;
        let d = m.params.d;
        let gl = m.transform().grid_len();
        let nz = m.nz();
        let mut a = [vec![0.0; nz * gl], vec![0.0; nz * gl], vec![0.0; nz * gl]];
        for (j, &z) in m.grid().nodes().iter().enumerate() {
            let s = (z + d) / d;
            for g in 0..gl {
                let i = j * gl + g;
                let (ex, ey) = (eg.ex[g] * s, eg.ey[g] * s);
                let jac = 1.0 + eg.eta[g] / d;
                let (u1, u2, u3) = (u[0][i], u[1][i], u[2][i]);
                a[0][i] = ((1.0 + ex * ex) * u1 + ex * ey * u2) / jac + ex * u3;
                a[1][i] = (ex * ey * u1 + (1.0 + ey * ey) * u2) / jac + ey * u3;
                a[2][i] = ex * u1 + ey * u2 + jac * u3;
            }
        }
        a
    }

    fn n_grid(&self, u: &[Vec<f64>; 3], eg: &EtaGrid) -> [Vec<f64>; 3] {
        let mut a = self.covariant(u, eg);
        for c in 0..3 {
            for (ai, ui) in a[c].iter_mut().zip(&u[c]) {
                *ai = ui - *ai;
            }
        }
        a
    }

    /// Flat divergence `∇_ẋ · u̇`; its vanishing is physical incompressibility.
    pub fn flattened_div(&self, f: &Field3D, eta: &SurfaceProfile) -> Result<Vec<Complex64>> {
        self.eta_grid(eta)?;
        Ok(self.divergence(f))
    }

    /// Dotted representation of the physical curl.
    pub fn flattened_curl(&self, f: &Field3D, eta: &SurfaceProfile) -> Result<Field3D> {
        let eg = self.eta_grid(eta)?;
        let a = self.covariant(&self.synth_field(f), &eg);
        Ok(self.curl(&self.analyze_field(&a)))
    }

    /// `N(u̇, η) = u̇ - a(u̇)`, linear in `u̇` and vanishing at `η = 0`.
    pub fn nonlinearity_n(&self, f: &Field3D, eta: &SurfaceProfile) -> Result<Field3D> {
        let eg = self.eta_grid(eta)?;
        Ok(self.analyze_field(&self.n_grid(&self.synth_field(f), &eg)))
    }

    /// `B(u̇, η)` at the surface: `J^{-2}[u̇1² + u̇2² + (η_x u̇1 + η_y u̇2 + J u̇3)²]`.
    pub fn nonlinearity_b(&self, f: &Field3D, eta: &SurfaceProfile) -> Result<Vec<Complex64>> {
        let eg = self.eta_grid(eta)?;
        let d = self.model.params.d;
        let u: Vec<Vec<f64>> = (0..3).map(|c| self.synth_level(f, c, 0)).collect();
        let b: Vec<f64> = (0..eg.eta.len())
            .map(|g| {
                let jac = 1.0 + eg.eta[g] / d;
                let a3 = eg.ex[g] * u[0][g] + eg.ey[g] * u[1][g] + jac * u[2][g];
                (u[0][g].powi(2) + u[1][g].powi(2) + a3 * a3) / (jac * jac)
            })
            .collect();
        Ok(self.model.transform().analyze(&b))
    }

    // ------------------------------------------------------------------- C_α

    /// `C_α v = (curl v - α v, v_3 at the surface)`.
    pub fn apply_c_alpha(&self, v: &Field3D) -> CurlRhs {
        let mut w = self.curl(v);
        w.axpy(-self.model.params.alpha, v);
        let f = (0..self.model.modes().len()).map(|idx| v.at(2, idx, 0)).collect();
        CurlRhs { w, f }
    }

    /// Relative divergence of `w`: max |div| over max of its term magnitudes.
    pub fn relative_divergence(&self, w: &Field3D) -> f64 {
        let m = &self.model;
        let nz = m.nz();
        let div = self.divergence(w);
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for idx in 0..m.modes().len() {
            let k = m.wave(idx);
            let d3 = m.grid().apply_diff(w.profile(2, idx));
            for j in 0..nz {
                num = num.max(div[idx * nz + j].norm());
                let t = (k[0] * w.at(0, idx, j) + k[1] * w.at(1, idx, j)).norm() + d3[j].norm();
                den = den.max(t);
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Inverse of `C_α` on divergence-free right-hand sides.
    pub fn solve_c_alpha(&self, rhs: &CurlRhs) -> Result<Field3D> {
        let rel = self.relative_divergence(&rhs.w);
        if rel > 1e-9 {
            return Err(Error::NotDivergenceFree(rel));
        }
        Ok(self.solve_c_alpha_unchecked(&rhs.w, &rhs.f))
    }

    fn lu_solve(lu: &LU<f64, Dyn, Dyn>, b: &[Complex64]) -> Vec<Complex64> {
        let re = DVector::from_iterator(b.len(), b.iter().map(|c| c.re));
        let im = DVector::from_iterator(b.len(), b.iter().map(|c| c.im));
        let xr = lu.solve(&re).expect("factorisation checked at construction");
        let xi = lu.solve(&im).expect("factorisation checked at construction");
        xr.iter().zip(xi.iter()).map(|(a, b)| Complex64::new(*a, *b)).collect()
    }

    fn solve_c_alpha_unchecked(&self, w: &Field3D, f: &[Complex64]) -> Field3D {
        let m = &self.model;
        let nz = m.nz();
        let alpha = m.params.alpha;
        let mut v = m.zero_field();
        for idx in 0..m.modes().len() {
            let (w1, w2, w3) = (w.profile(0, idx), w.profile(1, idx), w.profile(2, idx));
            match &self.lu_modes[idx] {
                Some(lu) => {
                    let k = m.wave(idx);
                    let k2 = dot(k, k);
                    let mut b: Vec<Complex64> =
                        (0..nz).map(|j| -alpha * w3[j] - I * (k[0] * w2[j] - k[1] * w1[j])).collect();
                    b[0] = f[idx];
                    b[nz - 1] = ZERO;
                    let v3 = Self::lu_solve(lu, &b);
                    let dv3 = m.grid().apply_diff(&v3);
                    for j in 0..nz {
                        let s = w3[j] + alpha * v3[j];
                        v.profile_mut(0, idx)[j] = I * (k[0] * dv3[j] + k[1] * s) / k2;
                        v.profile_mut(1, idx)[j] = I * (k[1] * dv3[j] - k[0] * s) / k2;
                    }
                    v.profile_mut(2, idx).copy_from_slice(&v3);
                }
                None => {
                    let mut b: Vec<Complex64> = w1.iter().chain(w2.iter()).cloned().collect();
                    b[nz - 1] = ZERO;
                    b[2 * nz - 1] = ZERO;
                    let x = Self::lu_solve(&self.lu_zero, &b);
                    v.profile_mut(0, idx).copy_from_slice(&x[..nz]);
                    v.profile_mut(1, idx).copy_from_slice(&x[nz..]);
                }
            }
        }
        v
    }

    // ---------------------------------------------------------- shift and G

    /// Linear part `L̃(η)` of `N(U + ṽ, η)` in `η`.
    pub fn l_tilde(&self, eta: &SurfaceProfile, flow: &LaminarFlow) -> Field3D {
        laminar_fields(&self.model, eta, flow, false)
    }

    /// `w^η` and `c̃^η`.
    pub fn shift_data(&self, eta: &SurfaceProfile, flow: &LaminarFlow) -> Result<ShiftData> {
        shift_data(&self.model, eta, flow)
    }

    fn kinematic_trace(&self, eta: &SurfaceProfile, c: Vec2) -> Vec<Complex64> {
        eta.coeffs().iter().enumerate().map(|(idx, &e)| I * dot(c, self.model.wave(idx)) * e).collect()
    }

    fn base_field(&self, shift: &ShiftData, c: Vec2) -> Field3D {
        let m = &self.model;
        let mut u = shift.w_eta.clone();
        u.add_laminar(&LaminarFlow::from_vec(c), m.params.alpha, m.grid().nodes());
        u.add_laminar(&shift.u_tilde(), m.params.alpha, m.grid().nodes());
        u
    }

    fn g_zero(&self, eta: &SurfaceProfile, eg: &EtaGrid, c: Vec2, shift: &ShiftData) -> Field3D {
        let base = self.base_field(shift, c);
        let mut n = self.analyze_field(&self.n_grid(&self.synth_field(&base), eg));
        n.axpy(-1.0, &self.l_tilde(eta, &LaminarFlow::from_vec(c)));
        self.curl(&n)
    }

    /// `G(v, η) = curl Ñ(v + w^η + Ũ^η, η)`.
    pub fn g_operator(&self, v: &Field3D, eta: &SurfaceProfile, c: Vec2) -> Result<Field3D> {
        let eg = self.eta_grid(eta)?;
        let shift = shift_data_with(&self.model, eta, &eg, &LaminarFlow::from_vec(c))?;
        let mut g = self.g_zero(eta, &eg, c, &shift);
        g.axpy(1.0, &self.curl(&self.analyze_field(&self.n_grid(&self.synth_field(v), &eg))));
        Ok(g)
    }

    // --------------------------------------------------------------- v(η, c)

    pub fn solve_v_of_eta(&self, eta: &SurfaceProfile, c: Vec2) -> Result<VSolution> {
        self.solve_v_of_eta_from(eta, c, None)
    }

    /// Picard iteration `v ← C_α⁻¹(G(v, η), c·∇η)`, warm-started from `guess`.
    pub fn solve_v_of_eta_from(&self, eta: &SurfaceProfile, c: Vec2, guess: Option<&Field3D>) -> Result<VSolution> {
        let eg = self.eta_grid(eta)?;
        let shift = shift_data_with(&self.model, eta, &eg, &LaminarFlow::from_vec(c))?;
        let f = self.kinematic_trace(eta, c);
        let g0 = self.g_zero(eta, &eg, c, &shift);
        let mut v = match guess {
            Some(g) => g.clone(),
            None => self.model.zero_field(),
        };
        let mut prev = f64::NAN;
        let mut ratio = 0.0;
        for it in 1..=PICARD_MAX_ITER {
            let mut w = g0.clone();
            if v.max_abs() > 0.0 {
                w.axpy(1.0, &self.curl(&self.analyze_field(&self.n_grid(&self.synth_field(&v), &eg))));
            }
            let next = self.solve_c_alpha_unchecked(&w, &f);
            let change = next.minus(&v).max_abs();
            let scale = next.max_abs();
            v = next;
            if change <= PICARD_TOL * scale || change == 0.0 {
                return Ok(VSolution { v, shift, iterations: it, contraction: ratio });
            }
            if prev.is_finite() && prev > 0.0 {
                ratio = change / prev;
                if it >= 3 && ratio > CONTRACTION_LIMIT {
                    return Err(Error::NonContraction { ratio, iteration: it });
                }
            }
            prev = change;
        }
        Err(Error::NonConvergence { iterations: PICARD_MAX_ITER, residual: prev })
    }

    // ------------------------------------------------------------------ H

    pub fn reduced_h(&self, eta: &SurfaceProfile, c: Vec2) -> Result<HEvaluation> {
        self.reduced_h_from(eta, c, None)
    }

    pub fn reduced_h_from(&self, eta: &SurfaceProfile, c: Vec2, guess: Option<&Field3D>) -> Result<HEvaluation> {
        let solution = self.solve_v_of_eta_from(eta, c, guess)?;
        let h = self.h_of(eta, c, &solution)?;
        Ok(HEvaluation { h, solution })
    }

    /// Surface traces used by the Bernoulli forms: `(v(0), ṽ(0))` on the grid where
    /// `ṽ = w^η + Ũ + v`.
    fn surface_traces(&self, sol: &VSolution) -> ([Vec<f64>; 2], [Vec<f64>; 3]) {
        let mut vt = sol.v.plus(&sol.shift.w_eta);
        let m = &self.model;
        vt.add_laminar(&sol.shift.u_tilde(), m.params.alpha, m.grid().nodes());
        let v = [self.synth_level(&sol.v, 0, 0), self.synth_level(&sol.v, 1, 0)];
        let t = [self.synth_level(&vt, 0, 0), self.synth_level(&vt, 1, 0), self.synth_level(&vt, 2, 0)];
        (v, t)
    }

    /// `H = c·v(0) + gη - σΔη - R(v, η)`, with `R = -rem + σ(κ_s - Δη) - c·c̃` where `κ_s`
    /// is the surface curvature and `rem` the quadratic part of `½B - Q` written without
    /// cancellation.
    pub fn h_of(&self, eta: &SurfaceProfile, c: Vec2, sol: &VSolution) -> Result<Vec<Complex64>> {
        let eg = self.eta_grid(eta)?;
        let p = self.model.params;
        let (v, vt) = self.surface_traces(sol);
        let cc = dot(c, c);
        let ct = dot(c, sol.shift.c_tilde);
        let h: Vec<f64> = (0..eg.eta.len())
            .map(|g| {
                let e = eg.eta[g] / p.d;
                let jac = 1.0 + e;
                let inv = 1.0 / (jac * jac);
                let (t1, t2, t3) = (vt[0][g], vt[1][g], vt[2][g]);
                let a3 = eg.ex[g] * (c[0] + t1) + eg.ey[g] * (c[1] + t2) + jac * t3;
                let cv = c[0] * t1 + c[1] * t2;
                let rem = 0.5
                    * (cc * (2.0 * e * (1.0 - inv) - e * e * inv)
                        + 2.0 * cv * (inv - 1.0)
                        + (t1 * t1 + t2 * t2 + a3 * a3) * inv);
                let lap = eg.exx[g] + eg.eyy[g];
                let r = -rem + p.sigma * (curvature(&eg, g) - lap) - ct;
                c[0] * v[0][g] + c[1] * v[1][g] + p.g * eg.eta[g] - p.sigma * lap - r
            })
            .collect();
        Ok(self.model.transform().analyze(&h))
    }

    /// Direct surface Bernoulli residual `½B(u̇, η) + gη - σ·curvature - Q(c)`.
    pub fn bernoulli_residual(&self, eta: &SurfaceProfile, c: Vec2, sol: &VSolution) -> Result<Vec<Complex64>> {
        let eg = self.eta_grid(eta)?;
        let p = self.model.params;
        let u = sol.u_dot(self, c);
        let u: Vec<Vec<f64>> = (0..3).map(|k| self.synth_level(&u, k, 0)).collect();
        let q = 0.5 * dot(c, c);
        let r: Vec<f64> = (0..eg.eta.len())
            .map(|g| {
                let jac = 1.0 + eg.eta[g] / p.d;
                let a3 = eg.ex[g] * u[0][g] + eg.ey[g] * u[1][g] + jac * u[2][g];
                let b = (u[0][g].powi(2) + u[1][g].powi(2) + a3 * a3) / (jac * jac);
                0.5 * b + p.g * eg.eta[g] - p.sigma * curvature(&eg, g) - q
            })
            .collect();
        Ok(self.model.transform().analyze(&r))
    }

    /// Residuals of the flattened system for `v = sol.v`.
    pub fn residual_report(&self, eta: &SurfaceProfile, c: Vec2, sol: &VSolution) -> Result<ResidualReport> {
        let m = &self.model;
        let p = m.params;
        let nz = m.nz();
        let nm = m.modes().len();
        let u0 = dot(c, c).sqrt().max(1e-300);
        let v = &sol.v;

        let mut lhs = self.curl(v);
        lhs.axpy(-p.alpha, v);
        lhs.axpy(-1.0, &self.g_operator(v, eta, c)?);
        let mut beltrami: f64 = 0.0;
        for j in 0..nz {
            for comp in 0..3 {
                beltrami = beltrami.max(sum_abs((0..nm).map(|idx| lhs.at(comp, idx, j))));
            }
        }
        let div = self.divergence(v);
        let divergence = (0..nz).map(|j| sum_abs((0..nm).map(|idx| div[idx * nz + j]))).fold(0.0, f64::max);
        let f = self.kinematic_trace(eta, c);
        let kin = sum_abs((0..nm).map(|idx| v.at(2, idx, 0) - f[idx]));
        let bottom = sum_abs((0..nm).map(|idx| v.at(2, idx, nz - 1)));
        let zero = m.modes().zero();
        let integral = m.grid().integrate(v.profile(0, zero)).norm().max(m.grid().integrate(v.profile(1, zero)).norm());
        let hscale = p.g * p.d + u0 * u0;
        let h = self.h_of(eta, c, sol)?;
        let b = self.bernoulli_residual(eta, c, sol)?;
        Ok(ResidualReport {
            beltrami: beltrami * p.d / u0,
            divergence: divergence * p.d / u0,
            surface_kinematic: kin / u0,
            bottom: bottom / u0,
            integral: integral / (u0 * p.d),
            bernoulli: sum_abs(h.into_iter()) / hscale,
            physical_bernoulli: sum_abs(b.into_iter()) / hscale,
        })
    }
}

/// Samples `η` and its first and second derivatives on the collocation grid.
pub fn eta_grid(m: &SpectralModel, eta: &SurfaceProfile) -> Result<EtaGrid> {
    if eta.truncation() != m.truncation() {
        return Err(Error::Shape("surface truncation does not match the model".into()));
    }
    let base = eta.as_complex();
    let apply = |f: &dyn Fn(Vec2) -> Complex64| {
        let c: Vec<Complex64> = base.iter().enumerate().map(|(i, v)| v * f(m.wave(i))).collect();
        m.transform().synth(&c)
    };
    let g = EtaGrid {
        eta: m.transform().synth(&base),
        ex: apply(&|k| I * k[0]),
        ey: apply(&|k| I * k[1]),
        exx: apply(&|k| Complex64::new(-k[0] * k[0], 0.0)),
        exy: apply(&|k| Complex64::new(-k[0] * k[1], 0.0)),
        eyy: apply(&|k| Complex64::new(-k[1] * k[1], 0.0)),
    };
    let min = g.eta.iter().cloned().fold(f64::INFINITY, f64::min) + m.params.d;
    if !(min > 0.0) {
        return Err(Error::DegenerateDomain(min));
    }
    Ok(g)
}

fn laminar_fields(m: &SpectralModel, eta: &SurfaceProfile, flow: &LaminarFlow, alpha_shift: bool) -> Field3D {
    let p = m.params;
    let (d, a) = (p.d, p.alpha);
    let mut out = m.zero_field();
    for (idx, &eh) in eta.coeffs().iter().enumerate() {
        if eh == 0.0 {
            continue;
        }
        let k = m.wave(idx);
        for (j, &z) in m.grid().nodes().iter().enumerate() {
            let s = (z + d) / d;
            let u = flow.eval(a, z);
            let rot = if alpha_shift { a * s } else { 0.0 };
            out.profile_mut(0, idx)[j] = Complex64::new(eh * (u[0] / d + rot * u[1]), 0.0);
            out.profile_mut(1, idx)[j] = Complex64::new(eh * (u[1] / d - rot * u[0]), 0.0);
            out.profile_mut(2, idx)[j] = -I * (s * eh * (k[0] * u[0] + k[1] * u[1]));
        }
    }
    out
}

/// `w^η` and `c̃^η` for the laminar flow `flow`. Fails when `αd ∈ 2πℤ∖{0}`.
pub fn shift_data(m: &SpectralModel, eta: &SurfaceProfile, flow: &LaminarFlow) -> Result<ShiftData> {
    let eg = eta_grid(m, eta)?;
    shift_data_with(m, eta, &eg, flow)
}

fn shift_data_with(m: &SpectralModel, eta: &SurfaceProfile, eg: &EtaGrid, flow: &LaminarFlow) -> Result<ShiftData> {
    let p = m.params;
    let (a, d) = (p.alpha, p.d);
    let w_eta = laminar_fields(m, eta, flow, true);
    let (c1, c2) = (flow.c1, flow.c2);
    // mean over the cell of ∫_0^η U_j dz
    let mut r = [0.0; 2];
    for &e in &eg.eta {
        if a == 0.0 {
            r[0] += c1 * e;
            r[1] += c2 * e;
        } else {
            let s = (a * e).sin() / a;
            let h = 2.0 * (0.5 * a * e).sin().powi(2) / a;
            r[0] += c1 * s + c2 * h;
            r[1] += -c1 * h + c2 * s;
        }
    }
    let np = eg.eta.len() as f64;
    let zero = m.modes().zero();
    for (j, rj) in r.iter_mut().enumerate() {
        *rj = *rj / np - m.grid().integrate(w_eta.profile(j, zero)).re;
    }
    let (ms, mc) = if a == 0.0 {
        (d, 0.0)
    } else {
        let half = (0.5 * a * d).sin();
        if half.abs() < 1e-10 {
            return Err(Error::ShiftSingular(a * d));
        }
        ((a * d).sin() / a, -2.0 * half * half / a)
    };
    // [[ms, mc], [-mc, ms]] c̃ = r
    let det = ms * ms + mc * mc;
    let c_tilde = [(ms * r[0] - mc * r[1]) / det, (mc * r[0] + ms * r[1]) / det];
    Ok(ShiftData { w_eta, c_tilde })
}

/// Mean curvature `∇·(∇η / √(1 + |∇η|²))` at grid point `g`.
fn curvature(eg: &EtaGrid, g: usize) -> f64 {
    let (ex, ey) = (eg.ex[g], eg.ey[g]);
    let q = 1.0 + ex * ex + ey * ey;
    ((1.0 + ey * ey) * eg.exx[g] - 2.0 * ex * ey * eg.exy[g] + (1.0 + ex * ex) * eg.eyy[g]) / (q * q.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Lattice, PhysicalParams};

    fn solver(alpha: f64) -> FlatSolver {
        let p = PhysicalParams::new(1.0, 1.0, 1.0, alpha).unwrap();
        let lat = Lattice::symmetric(2.0, std::f64::consts::PI / 3.0).unwrap();
        FlatSolver::new(SpectralModel::new(p, lat, 3, 16).unwrap()).unwrap()
    }

    #[test]
    fn laminar_flow_is_beltrami() {
        let s = solver(0.5);
        let mut u = s.model().zero_field();
        u.add_laminar(&LaminarFlow::new(0.7, -1.1), 0.5, s.model().grid().nodes());
        let c = s.curl(&u).minus(&u.scaled(0.5));
        assert!(c.max_abs() < 1e-12);
    }

    #[test]
    fn n_vanishes_for_flat_surface() {
        let s = solver(0.5);
        let mut u = s.model().zero_field();
        u.add_laminar(&LaminarFlow::new(0.7, -1.1), 0.5, s.model().grid().nodes());
        let n = s.nonlinearity_n(&u, &s.model().zero_surface()).unwrap();
        assert!(n.max_abs() < 1e-15);
    }

    #[test]
    fn flat_surface_gives_zero_v() {
        let s = solver(0.5);
        let sol = s.solve_v_of_eta(&s.model().zero_surface(), [1.0, 0.4]).unwrap();
        assert_eq!(sol.v.max_abs(), 0.0);
        assert_eq!(sol.shift.c_tilde, [0.0, 0.0]);
    }
}
