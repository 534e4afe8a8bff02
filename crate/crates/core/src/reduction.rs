//! Lyapunov–Schmidt reduction: the orthogonal equation for `η̃`, the 2×2 bifurcation
//! system for `c`, and the resulting two-parameter wave family.
//!
//! The surface is split as `η = t1 cos(k1·x') + t2 cos(k2·x') + η̃` where `η̃` has no
//! content at `±k1, ±k2`. With `δ = c - c*`, the reduced operator decomposes as
//! `H = L η + δ1 L1 η + δ2 L2 η + H_r`, where `L`, `L1`, `L2` are the Fourier multipliers
//! `ρ(c*, k)`, `∂_{c_j} ρ(c*, k)` (and `g`, `0`, `0` at `k = 0`).

use num_complex::Complex64;

use crate::bifurcation::BifurcationPoint;
use crate::dispersion::{grad_rho, rho};
use crate::error::{Error, Result};
use crate::flattened::{FlatSolver, HEvaluation, ResidualReport};
use crate::model::{dot, norm, Field3D, SpectralModel, SurfaceProfile, Vec2};

/// Relative threshold below which a non-kernel multiplier counts as near-resonant.
pub const NEAR_RESONANCE: f64 = 1e-6;
/// Threshold on the normalised transversality sine.
pub const TRANSVERSALITY_MIN: f64 = 1e-10;

/// Iteration controls. Tolerances are relative to `g d + |c|²` (orthogonal equation)
/// and to `g + σ|k1|²` (bifurcation equations).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub orthogonal_tol: f64,
    pub outer_tol: f64,
    pub max_orthogonal: usize,
    pub max_outer: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { orthogonal_tol: 1e-13, outer_tol: 1e-11, max_orthogonal: 80, max_outer: 40 }
    }
}

/// Converged orthogonal problem at fixed `(t, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalState {
    pub t: Vec2,
    pub c: Vec2,
    pub eta_tilde: SurfaceProfile,
    pub eta: SurfaceProfile,
    pub evaluation: HEvaluation,
    /// Largest normalised non-kernel coefficient of `H` at exit.
    pub residual: f64,
    pub iterations: usize,
}

/// A nonlinear wave together with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSolution {
    pub t: Vec2,
    pub c: Vec2,
    pub delta: Vec2,
    pub eta: SurfaceProfile,
    /// `v(η, c)`.
    pub v: Field3D,
    /// Full dotted velocity `U[c] + w^η + U[c̃] + v`.
    pub u_dot: Field3D,
    pub c_tilde: Vec2,
    /// Bernoulli constant `(c1² + c2²)/2`.
    pub q: f64,
    pub residuals: ResidualReport,
    /// Bifurcation-equation residuals at exit (normalised).
    pub bifurcation_residual: f64,
    pub outer_iterations: usize,
    pub orthogonal_iterations: usize,
}

/// Reduction around a fixed bifurcation point on a fixed discretisation.
#[derive(Debug, Clone)]
pub struct WaveSolver {
    flat: FlatSolver,
    c_star: Vec2,
    kernel: [(i32, i32); 2],
    kernel_idx: [usize; 2],
    grads: [Vec2; 2],
    rho_star: Vec<f64>,
    grad_modes: Vec<Vec2>,
    pub options: SolverOptions,
}

fn locate(model: &SpectralModel, k: Vec2) -> Result<((i32, i32), usize)> {
    let scale = norm(k).max(1.0);
    model
        .modes()
        .iter()
        .find(|&(idx, _, _)| {
            let w = model.wave(idx);
            ((w[0] - k[0]).powi(2) + (w[1] - k[1]).powi(2)).sqrt() < 1e-9 * scale
        })
        .map(|(idx, a, b)| ((a, b), idx))
        .ok_or(Error::KernelOutsideTruncation)
}

impl WaveSolver {
    pub fn new(model: SpectralModel, bif: &BifurcationPoint) -> Result<Self> {
        Self::from_parts(model, bif.c_star, bif.k1, bif.k2)
    }

    /// Builds the solver from `c*` and the two kernel wave vectors. Fails if a non-kernel
    /// multiplier in the truncation is nearly zero or the gradients are parallel.
    pub fn from_parts(model: SpectralModel, c_star: Vec2, k1: Vec2, k2: Vec2) -> Result<Self> {
        let p = model.params;
        let (pair1, i1) = locate(&model, k1)?;
        let (pair2, i2) = locate(&model, k2)?;
        let kernel_like = |idx: usize| {
            let modes = model.modes();
            idx == i1 || idx == i2 || idx == modes.neg(i1) || idx == modes.neg(i2)
        };
        let mut rho_star = Vec::with_capacity(model.modes().len());
        let mut grad_modes = Vec::with_capacity(model.modes().len());
        for (idx, n1, n2) in model.modes().iter() {
            if idx == model.modes().zero() {
                rho_star.push(p.g);
                grad_modes.push([0.0, 0.0]);
                continue;
            }
            let k = model.wave(idx);
            let r = rho(c_star, k, &p)?;
            if !kernel_like(idx) {
                let ratio = r.abs() / p.restoring(norm(k));
                if ratio < NEAR_RESONANCE {
                    return Err(Error::NearResonant { n1, n2, ratio });
                }
            }
            rho_star.push(r);
            grad_modes.push(grad_rho(c_star, k, &p)?);
        }
        let grads = [grad_modes[i1], grad_modes[i2]];
        let sine = (grads[0][0] * grads[1][1] - grads[0][1] * grads[1][0]) / (norm(grads[0]) * norm(grads[1]));
        if !(sine.abs() >= TRANSVERSALITY_MIN) {
            return Err(Error::DegenerateTransversality(sine));
        }
        let flat = FlatSolver::new(model)?;
        Ok(WaveSolver {
            flat,
            c_star,
            kernel: [pair1, pair2],
            kernel_idx: [i1, i2],
            grads,
            rho_star,
            grad_modes,
            options: SolverOptions::default(),
        })
    }

    pub fn flat(&self) -> &FlatSolver {
        &self.flat
    }

    pub fn model(&self) -> &SpectralModel {
        self.flat.model()
    }

    pub fn c_star(&self) -> Vec2 {
        self.c_star
    }

    /// Residuals of a solution re-evaluated with `extra` more harmonics per direction.
    /// `v(η, c)` is re-solved on the finer model, so the Bernoulli entry exposes the
    /// truncation error of `η`.
    pub fn refined_residuals(&self, w: &WaveSolution, extra: usize) -> Result<ResidualReport> {
        let m = self.model();
        let fine = FlatSolver::new(SpectralModel::new(m.params, m.lattice, m.truncation() + extra, m.nz())?)?;
        let eta = w.eta.resized(m.truncation() + extra);
        let sol = fine.solve_v_of_eta(&eta, w.c)?;
        fine.residual_report(&eta, w.c, &sol)
    }

    /// Mode pairs `(n1, n2)` of `k1` and `k2`.
    pub fn kernel_modes(&self) -> [(i32, i32); 2] {
        self.kernel
    }

    /// `v_lj = ∂_{c_j} ρ(c*, k_l)`.
    pub fn transversality_matrix(&self) -> [[f64; 2]; 2] {
        [self.grads[0], self.grads[1]]
    }

    fn is_kernel(&self, idx: usize) -> bool {
        let m = self.model().modes();
        self.kernel_idx.iter().any(|&k| idx == k || idx == m.neg(k))
    }

    /// `t1 cos(k1·x') + t2 cos(k2·x')`.
    pub fn kernel_profile(&self, t: Vec2) -> SurfaceProfile {
        let mut eta = self.model().zero_surface();
        for (j, &(a, b)) in self.kernel.iter().enumerate() {
            eta.add_cosine(a, b, t[j]).expect("kernel modes lie in the truncation");
        }
        eta
    }

    /// `(L η, L1 η, L2 η)`.
    pub fn linear_operators(&self, eta: &SurfaceProfile) -> [SurfaceProfile; 3] {
        let n = self.model().truncation();
        let apply = |f: &dyn Fn(usize) -> f64| {
            let c = eta.coeffs().iter().enumerate().map(|(i, v)| v * f(i)).collect();
            SurfaceProfile::from_coeffs(n, c).expect("same truncation")
        };
        [apply(&|i| self.rho_star[i]), apply(&|i| self.grad_modes[i][0]), apply(&|i| self.grad_modes[i][1])]
    }

    /// `H_r = H - Lη - δ1 L1 η - δ2 L2 η` from an already evaluated `H`.
    pub fn remainder(&self, eta: &SurfaceProfile, c: Vec2, h: &[Complex64]) -> Vec<Complex64> {
        let delta = [c[0] - self.c_star[0], c[1] - self.c_star[1]];
        h.iter()
            .enumerate()
            .map(|(i, v)| v - eta.coeffs()[i] * (self.rho_star[i] + dot(delta, self.grad_modes[i])))
            .collect()
    }

    fn h_scale(&self, c: Vec2) -> f64 {
        let p = self.model().params;
        p.g * p.d + dot(c, c)
    }

    /// Solves `P̃ H(t1 η1 + t2 η2 + η̃, c) = 0` for `η̃` by a chord iteration preconditioned
    /// with the diagonal multiplier of `L + δ·(L1, L2)`.
    pub fn solve_orthogonal(&self, t: Vec2, c: Vec2) -> Result<OrthogonalState> {
        self.solve_orthogonal_from(t, c, None, None)
    }

    pub fn solve_orthogonal_from(
        &self,
        t: Vec2,
        c: Vec2,
        eta_tilde: Option<&SurfaceProfile>,
        v_guess: Option<&Field3D>,
    ) -> Result<OrthogonalState> {
        let m = self.model();
        let n = m.truncation();
        let modes = m.modes();
        let delta = [c[0] - self.c_star[0], c[1] - self.c_star[1]];
        let kernel = self.kernel_profile(t);
        let mut coeffs = match eta_tilde {
            Some(e) => e.coeffs().to_vec(),
            None => vec![0.0; modes.len()],
        };
        for idx in 0..modes.len() {
            if self.is_kernel(idx) {
                coeffs[idx] = 0.0;
            }
        }
        let scale = self.h_scale(c);
        let mut v = v_guess.cloned();
        let mut last = f64::NAN;
        for it in 1..=self.options.max_orthogonal {
            let et = SurfaceProfile::from_coeffs(n, coeffs.clone())?;
            let eta = kernel.plus(&et);
            let evaluation = self.flat.reduced_h_from(&eta, c, v.as_ref())?;
            let h = &evaluation.h;
            let mut res: f64 = 0.0;
            for idx in 0..modes.len() {
                if self.is_kernel(idx) {
                    continue;
                }
                let sym = 0.5 * (h[idx].re + h[modes.neg(idx)].re);
                res = res.max(sym.abs());
            }
            last = res / scale;
            if last < self.options.orthogonal_tol {
                return Ok(OrthogonalState {
                    t,
                    c,
                    eta_tilde: et,
                    eta,
                    evaluation,
                    residual: last,
                    iterations: it,
                });
            }
            for idx in 0..modes.len() {
                if self.is_kernel(idx) {
                    continue;
                }
                let sym = 0.5 * (h[idx].re + h[modes.neg(idx)].re);
                coeffs[idx] -= sym / (self.rho_star[idx] + dot(delta, self.grad_modes[idx]));
            }
            v = Some(evaluation.solution.v);
        }
        Err(Error::NonConvergence { iterations: self.options.max_orthogonal, residual: last })
    }

    /// `P_j H_r` for `j = 1, 2`: twice the real part of the `k_j` coefficient of `H_r`.
    pub fn kernel_projection(&self, state: &OrthogonalState) -> [f64; 2] {
        let hr = self.remainder(&state.eta, state.c, &state.evaluation.h);
        [2.0 * hr[self.kernel_idx[0]].re, 2.0 * hr[self.kernel_idx[1]].re]
    }

    /// Bracketed residuals `Σ_j v_lj δ_j + Ψ_l(t, c)` with `Ψ_l = P_l H_r / t_l`. An equation
    /// with `t_l = 0` is satisfied identically in factored form and reported as 0.
    pub fn bifurcation_system(&self, state: &OrthogonalState) -> [f64; 2] {
        let delta = [state.c[0] - self.c_star[0], state.c[1] - self.c_star[1]];
        let proj = self.kernel_projection(state);
        let mut out = [0.0; 2];
        for l in 0..2 {
            if state.t[l] != 0.0 {
                out[l] = dot(self.grads[l], delta) + proj[l] / state.t[l];
            }
        }
        out
    }

    fn bracket_scale(&self) -> f64 {
        let k = self.model().wave(self.kernel_idx[0]);
        self.model().params.restoring(norm(k))
    }

    /// Equation `l` of the bifurcation system at `(t, c)`. For `t_l = 0` the limit
    /// `t_l → 0` is taken by Richardson extrapolation from two small probes, using that the
    /// bracket is even in `t_l`.
    fn bracket(&self, l: usize, t: Vec2, state: &OrthogonalState) -> Result<f64> {
        if t[l] != 0.0 {
            return Ok(self.bifurcation_system(state)[l]);
        }
        let h = 0.05 * norm(t);
        let mut vals = [0.0; 2];
        for (i, step) in [h, 2.0 * h].into_iter().enumerate() {
            let mut tp = t;
            tp[l] = step;
            let probe = self.solve_orthogonal_from(tp, state.c, Some(&state.eta_tilde), Some(&state.evaluation.solution.v))?;
            vals[i] = self.bifurcation_system(&probe)[l];
        }
        Ok((4.0 * vals[0] - vals[1]) / 3.0)
    }

    fn trivial(&self, t: Vec2, c: Vec2) -> Result<WaveSolution> {
        let eta = self.model().zero_surface();
        let sol = self.flat.solve_v_of_eta(&eta, c)?;
        let residuals = self.flat.residual_report(&eta, c, &sol)?;
        let u_dot = sol.u_dot(&self.flat, c);
        Ok(WaveSolution {
            t,
            c,
            delta: [c[0] - self.c_star[0], c[1] - self.c_star[1]],
            eta,
            v: sol.v,
            u_dot,
            c_tilde: sol.shift.c_tilde,
            q: 0.5 * dot(c, c),
            residuals,
            bifurcation_residual: 0.0,
            outer_iterations: 0,
            orthogonal_iterations: 0,
        })
    }

    fn finish(&self, state: OrthogonalState, bif_res: f64, outer: usize, inner: usize) -> Result<WaveSolution> {
        let c = state.c;
        let sol = state.evaluation.solution;
        let residuals = self.flat.residual_report(&state.eta, c, &sol)?;
        let u_dot = sol.u_dot(&self.flat, c);
        Ok(WaveSolution {
            t: state.t,
            c,
            delta: [c[0] - self.c_star[0], c[1] - self.c_star[1]],
            eta: state.eta,
            v: sol.v,
            u_dot,
            c_tilde: sol.shift.c_tilde,
            q: 0.5 * dot(c, c),
            residuals,
            bifurcation_residual: bif_res,
            outer_iterations: outer,
            orthogonal_iterations: inner,
        })
    }

    /// Wave with kernel amplitudes `t`: chord iteration `δ ← δ - V⁻¹F(δ)` on the
    /// bifurcation system with `V = (∂_{c_j} ρ(c*, k_l))`, re-solving `η̃` at every step.
    pub fn solve_wave(&self, t: Vec2) -> Result<WaveSolution> {
        if t == [0.0, 0.0] {
            return self.trivial(t, self.c_star);
        }
        let v = self.grads;
        let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
        let scale = self.bracket_scale();
        let mut c = self.c_star;
        let mut prev: Option<OrthogonalState> = None;
        let mut inner = 0;
        let mut last = f64::NAN;
        for outer in 1..=self.options.max_outer {
            let state = match &prev {
                Some(s) => self.solve_orthogonal_from(t, c, Some(&s.eta_tilde), Some(&s.evaluation.solution.v))?,
                None => self.solve_orthogonal(t, c)?,
            };
            inner += state.iterations;
            let f = [self.bracket(0, t, &state)?, self.bracket(1, t, &state)?];
            last = f[0].abs().max(f[1].abs()) / scale;
            if last < self.options.outer_tol {
                return self.finish(state, last, outer, inner);
            }
            c[0] -= (v[1][1] * f[0] - v[0][1] * f[1]) / det;
            c[1] -= (-v[1][0] * f[0] + v[0][0] * f[1]) / det;
            prev = Some(state);
        }
        Err(Error::NonConvergence { iterations: self.options.max_outer, residual: last })
    }

    /// 2½-dimensional branch `t = (0, t2)`: holds `c[held]` at `held_value` (default `c*`)
    /// and solves the single remaining bifurcation equation for the other component.
    pub fn solve_2halfd_branch(&self, t2: f64, held: usize, held_value: Option<f64>) -> Result<WaveSolution> {
        if held > 1 {
            return Err(Error::InvalidParameter(format!("held index must be 0 or 1, got {held}")));
        }
        let free = 1 - held;
        let slope = self.grads[1][free];
        if slope.abs() < TRANSVERSALITY_MIN * norm(self.grads[1]).max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateTransversality(slope));
        }
        let mut c = self.c_star;
        c[held] = held_value.unwrap_or(self.c_star[held]);
        let t = [0.0, t2];
        if t2 == 0.0 {
            return self.trivial(t, c);
        }
        let scale = self.bracket_scale();
        let mut prev: Option<OrthogonalState> = None;
        let mut inner = 0;
        let mut last = f64::NAN;
        for outer in 1..=self.options.max_outer {
            let state = match &prev {
                Some(s) => self.solve_orthogonal_from(t, c, Some(&s.eta_tilde), Some(&s.evaluation.solution.v))?,
                None => self.solve_orthogonal(t, c)?,
            };
            inner += state.iterations;
            let f = self.bifurcation_system(&state)[1];
            last = f.abs() / scale;
            if last < self.options.outer_tol {
                return self.finish(state, last, outer, inner);
            }
            c[free] -= f / slope;
            prev = Some(state);
        }
        Err(Error::NonConvergence { iterations: self.options.max_outer, residual: last })
    }
}
