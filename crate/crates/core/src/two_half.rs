//! 2½-dimensional waves: fields that vary along one horizontal direction `ē` only, and
//! their description by a two-dimensional stream function with affine vorticity.
//!
//! Everything is expressed in flattened coordinates `(x̄, ż)` with `ż ∈ [-d, 0]`.
//! If `Ψ(x̄, ż) = ψ(x̄, z)`, the dotted velocity of
//! `u = -ψ_z ē + (αψ + β) e⊥ + ψ_x̄ e3` is
//! `u̇_h = -Ψ_ż ē + J(αΨ + β) e⊥`, `u̇3 = Ψ_x̄`.
//! On the surface `½|u|² = ½|∇ψ|² + ½(α m2 + β)²`, so the 3D Bernoulli constant is
//! `Q = Q0 + ½(α m2 + β)²`.

use std::f64::consts::PI;

use nalgebra::{DVector, Dyn, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{norm, Field3D, SpectralModel, SurfaceProfile, Vec2};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coefficient leakage (relative) tolerated outside the multiples of the axis mode.
pub const LEAKAGE_TOL: f64 = 1e-10;
/// Relative tolerance on `u⊥ = αΨ + β`.
pub const AFFINE_TOL: f64 = 1e-8;

/// Stream function `Ψ(x̄, ż) = Σ_n Ψ̂_n(ż) e^{i n κ x̄}` with `κ = |k_axis|` and `x̄ = ē·x'`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFunction2D {
    /// Lattice mode `(a, b)` whose multiples carry the variation.
    pub axis: (i32, i32),
    pub direction: Vec2,
    pub wavenumber: f64,
    /// `Ψ̂_n` on the z-grid, index `n + n_max`.
    pub psi: Vec<Vec<Complex64>>,
    /// Surface coefficients `η̂_n`, index `n + n_max`.
    pub eta: Vec<f64>,
    pub beta: f64,
    pub m1: f64,
    pub m2: f64,
    pub q0: f64,
}

/// Residuals of the two-dimensional system, normalised like the 3D report.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals2D {
    pub pde: f64,
    pub bottom: f64,
    pub surface: f64,
    pub bernoulli: f64,
}

impl Residuals2D {
    pub fn max(&self) -> f64 {
        self.pde.max(self.bottom).max(self.surface).max(self.bernoulli)
    }
}

impl StreamFunction2D {
    /// Builds a stream function from harmonic profiles `psi[n + n_max]` and surface
    /// coefficients. `m1`, `m2` are read off the mean mode and `Q0` is the mean of the
    /// Bernoulli expression.
    pub fn new(model: &SpectralModel, axis: (i32, i32), psi: Vec<Vec<Complex64>>, eta: Vec<f64>, beta: f64) -> Result<Self> {
        let (e, kappa, n_cap) = axis_vector(model, axis)?;
        if psi.len() % 2 == 0 || psi.len() != eta.len() || (psi.len() - 1) / 2 > n_cap {
            return Err(Error::Shape("stream function harmonics do not fit the truncation".into()));
        }
        if psi.iter().any(|p| p.len() != model.nz()) {
            return Err(Error::Shape("stream function profiles do not match the z-grid".into()));
        }
        let n_max = (psi.len() - 1) / 2;
        let nz = model.nz();
        let mut sf = StreamFunction2D {
            axis,
            direction: e,
            wavenumber: kappa,
            m1: psi[n_max][nz - 1].re,
            m2: psi[n_max][0].re,
            psi,
            eta,
            beta,
            q0: 0.0,
        };
        let line = Line::new(n_max, kappa);
        sf.q0 = bernoulli_line(model, &sf, &line)?.iter().sum::<f64>() / line.points as f64;
        Ok(sf)
    }

    /// Highest harmonic `n_max`.
    pub fn n_max(&self) -> usize {
        (self.psi.len() - 1) / 2
    }

    /// `e⊥ = e3 × ē`.
    pub fn perp(&self) -> Vec2 {
        [-self.direction[1], self.direction[0]]
    }

    /// Replaces `(Ψ, β)` by `(Ψ + s, β - α s)`, which leaves the velocity unchanged.
    pub fn regauge(&self, shift: f64, alpha: f64) -> Self {
        let mut out = self.clone();
        let n = self.n_max();
        out.psi[n].iter_mut().for_each(|v| *v += shift);
        out.beta -= alpha * shift;
        out.m1 += shift;
        out.m2 += shift;
        out
    }

    /// Bernoulli constant of the corresponding 3D flow.
    pub fn q_3d(&self, alpha: f64) -> f64 {
        self.q0 + 0.5 * (alpha * self.m2 + self.beta).powi(2)
    }
}

fn axis_vector(model: &SpectralModel, axis: (i32, i32)) -> Result<(Vec2, f64, usize)> {
    if axis == (0, 0) {
        return Err(Error::ZeroWaveVector);
    }
    let k = model.lattice.k(axis.0, axis.1);
    let kn = norm(k);
    let step = axis.0.unsigned_abs().max(axis.1.unsigned_abs()) as usize;
    let n_max = model.truncation() / step;
    Ok(([k[0] / kn, k[1] / kn], kn, n_max))
}

/// Uniform x̄ grid over one period and the matching direct DFT.
struct Line {
    n_max: usize,
    points: usize,
    kappa: f64,
}

impl Line {
    fn new(n_max: usize, kappa: f64) -> Self {
        Line { n_max, points: 2 * (2 * n_max + 1), kappa }
    }

    fn x(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / (self.points as f64 * self.kappa)
    }

    fn synth(&self, c: &[Complex64]) -> Vec<f64> {
        let n = self.n_max as i64;
        (0..self.points)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / self.points as f64;
                (-n..=n).map(|m| (c[(m + n) as usize] * Complex64::from_polar(1.0, m as f64 * th)).re).sum()
            })
            .collect()
    }

    fn analyze(&self, v: &[f64]) -> Vec<Complex64> {
        let n = self.n_max as i64;
        let p = self.points as f64;
        (-n..=n)
            .map(|m| {
                v.iter()
                    .enumerate()
                    .map(|(i, x)| x * Complex64::from_polar(1.0, -(m as f64) * 2.0 * PI * i as f64 / p))
                    .sum::<Complex64>()
                    / p
            })
            .collect()
    }

    fn deriv(&self, c: &[Complex64], order: i32) -> Vec<Complex64> {
        let n = self.n_max as i64;
        c.iter().enumerate().map(|(i, v)| v * (I * ((i as i64 - n) as f64 * self.kappa)).powi(order)).collect()
    }
}

/// Surface and geometry samples along the x̄ grid.
struct Surface1D {
    eta: Vec<f64>,
    ex: Vec<f64>,
    exx: Vec<f64>,
}

fn surface_line(line: &Line, eta: &[f64]) -> Surface1D {
    let c: Vec<Complex64> = eta.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    Surface1D { eta: line.synth(&c), ex: line.synth(&line.deriv(&c, 1)), exx: line.synth(&line.deriv(&c, 2)) }
}

/// Per-harmonic profiles `[n][j]` of a z-grid quantity sampled on `(x̄_i, ż_j)`.
fn analyze_columns(line: &Line, vals: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
    let nz = vals.len();
    let mut out = vec![vec![ZERO; nz]; 2 * line.n_max + 1];
    for (j, row) in vals.iter().enumerate() {
        for (n, v) in line.analyze(row).into_iter().enumerate() {
            out[n][j] = v;
        }
    }
    out
}

fn synth_columns(line: &Line, prof: &[Vec<Complex64>], nz: usize) -> Vec<Vec<f64>> {
    (0..nz)
        .map(|j| {
            let level: Vec<Complex64> = prof.iter().map(|p| p[j]).collect();
            line.synth(&level)
        })
        .collect()
}

fn integration_lu(model: &SpectralModel) -> LU<f64, Dyn, Dyn> {
    let nz = model.nz();
    let mut a = model.grid().diff().clone();
    for j in 0..nz {
        a[(nz - 1, j)] = 0.0;
    }
    a[(nz - 1, nz - 1)] = 1.0;
    a.lu()
}

fn lu_solve(lu: &LU<f64, Dyn, Dyn>, b: &[Complex64]) -> Vec<Complex64> {
    let re = lu.solve(&DVector::from_iterator(b.len(), b.iter().map(|c| c.re))).expect("invertible");
    let im = lu.solve(&DVector::from_iterator(b.len(), b.iter().map(|c| c.im))).expect("invertible");
    re.iter().zip(im.iter()).map(|(a, b)| Complex64::new(*a, *b)).collect()
}

/// Dotted 3D field of a stream function, on the surface described by `sf.eta`.
pub fn lift_2d_to_3d(model: &SpectralModel, sf: &StreamFunction2D) -> Result<Field3D> {
    let (e, kappa, n_cap) = axis_vector(model, sf.axis)?;
    let n_max = sf.n_max();
    if n_max > n_cap || sf.eta.len() != sf.psi.len() {
        return Err(Error::Shape("stream function exceeds the model truncation".into()));
    }
    if sf.psi.iter().any(|p| p.len() != model.nz()) {
        return Err(Error::Shape("stream function profiles do not match the z-grid".into()));
    }
    let alpha = model.params.alpha;
    let d = model.params.d;
    let nz = model.nz();
    let ep = [-e[1], e[0]];
    let line = Line::new(n_max, kappa);
    let surf = surface_line(&line, &sf.eta);
    let psi_grid = synth_columns(&line, &sf.psi, nz);
    let perp_vals: Vec<Vec<f64>> = psi_grid
        .iter()
        .map(|row| row.iter().zip(&surf.eta).map(|(p, h)| (1.0 + h / d) * (alpha * p + sf.beta)).collect())
        .collect();
    let perp = analyze_columns(&line, &perp_vals);
    let mut out = model.zero_field();
    let modes = model.modes();
    for n in -(n_max as i32)..=(n_max as i32) {
        let i = (n + n_max as i32) as usize;
        let idx = modes.index(n * sf.axis.0, n * sf.axis.1).expect("checked against truncation");
        let dpsi = model.grid().apply_diff(&sf.psi[i]);
        let ikn = I * (n as f64 * kappa);
        for j in 0..nz {
            let along = -dpsi[j];
            out.profile_mut(0, idx)[j] = along * e[0] + perp[i][j] * ep[0];
            out.profile_mut(1, idx)[j] = along * e[1] + perp[i][j] * ep[1];
            out.profile_mut(2, idx)[j] = ikn * sf.psi[i][j];
        }
    }
    Ok(out)
}

/// Stream function of a dotted field that only depends on `k_axis · x'`. Uses the gauge
/// `m1 = 0` and fits `β` by least squares over the collocation grid.
pub fn extract_2d(
    model: &SpectralModel,
    field: &Field3D,
    eta: &SurfaceProfile,
    axis: (i32, i32),
) -> Result<StreamFunction2D> {
    let (e, kappa, n_max) = axis_vector(model, axis)?;
    let modes = model.modes();
    let on_axis = |n1: i32, n2: i32| -> bool {
        // (n1, n2) = n · axis for some integer n
        let (a, b) = axis;
        n1 * b == n2 * a && (if a != 0 { n1 % a == 0 } else { n2 % b == 0 })
    };
    let scale = field.max_abs().max(f64::MIN_POSITIVE);
    let leak = field.max_abs_where(|n1, n2| !on_axis(n1, n2)) / scale;
    let eta_scale = eta.max_coeff().max(f64::MIN_POSITIVE);
    let eta_leak = modes
        .iter()
        .filter(|&(_, a, b)| !on_axis(a, b))
        .map(|(idx, _, _)| eta.coeffs()[idx].abs())
        .fold(0.0, f64::max)
        / eta_scale;
    if leak > LEAKAGE_TOL || eta_leak > LEAKAGE_TOL {
        return Err(Error::NotTwoHalfD(leak.max(eta_leak)));
    }
    let alpha = model.params.alpha;
    let d = model.params.d;
    let nz = model.nz();
    let ep = [-e[1], e[0]];
    let lu = integration_lu(model);
    let line = Line::new(n_max, kappa);
    let mut psi = Vec::with_capacity(2 * n_max + 1);
    let mut perp = Vec::with_capacity(2 * n_max + 1);
    let mut eta1 = Vec::with_capacity(2 * n_max + 1);
    for n in -(n_max as i32)..=(n_max as i32) {
        let idx = modes.index(n * axis.0, n * axis.1).expect("within truncation");
        let mut rhs: Vec<Complex64> =
            (0..nz).map(|j| -(field.at(0, idx, j) * e[0] + field.at(1, idx, j) * e[1])).collect();
        rhs[nz - 1] = ZERO;
        psi.push(lu_solve(&lu, &rhs));
        perp.push((0..nz).map(|j| field.at(0, idx, j) * ep[0] + field.at(1, idx, j) * ep[1]).collect::<Vec<_>>());
        eta1.push(eta.coeffs()[idx]);
    }
    let surf = surface_line(&line, &eta1);
    if let Some(min) = surf.eta.iter().map(|h| h + d).reduce(f64::min) {
        if !(min > 0.0) {
            return Err(Error::DegenerateDomain(min));
        }
    }
    let psi_grid = synth_columns(&line, &psi, nz);
    let perp_grid = synth_columns(&line, &perp, nz);
    let mut diffs = Vec::with_capacity(nz * line.points);
    let mut vel: f64 = 0.0;
    for j in 0..nz {
        for i in 0..line.points {
            let jac = 1.0 + surf.eta[i] / d;
            let up = perp_grid[j][i] / jac;
            vel = vel.max(up.abs());
            diffs.push(up - alpha * psi_grid[j][i]);
        }
    }
    let beta = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let dev = diffs.iter().map(|v| (v - beta).abs()).fold(0.0, f64::max) / vel.max(f64::MIN_POSITIVE);
    if dev > AFFINE_TOL {
        return Err(Error::AffineViolation(dev));
    }
    StreamFunction2D::new(model, axis, psi, eta1, beta)
}

/// Derivatives of the physical `ψ` expressed through `Ψ` on the flattened grid.
struct PhysicalDerivatives {
    psi: Vec<Vec<f64>>,
    px: Vec<Vec<f64>>,
    pz: Vec<Vec<f64>>,
    laplacian: Vec<Vec<f64>>,
}

fn physical_derivatives(model: &SpectralModel, sf: &StreamFunction2D, line: &Line, surf: &Surface1D) -> PhysicalDerivatives {
    let nz = model.nz();
    let d = model.params.d;
    let g = model.grid();
    let dz: Vec<Vec<Complex64>> = sf.psi.iter().map(|p| g.apply_diff(p)).collect();
    let dzz: Vec<Vec<Complex64>> = dz.iter().map(|p| g.apply_diff(p)).collect();
    let xderiv = |prof: &[Vec<Complex64>], order: i32| -> Vec<Vec<Complex64>> {
        let n = line.n_max as i64;
        prof.iter()
            .enumerate()
            .map(|(i, p)| {
                let f = (I * ((i as i64 - n) as f64 * line.kappa)).powi(order);
                p.iter().map(|v| v * f).collect()
            })
            .collect()
    };
    let psi = synth_columns(line, &sf.psi, nz);
    let p_x = synth_columns(line, &xderiv(&sf.psi, 1), nz);
    let p_xx = synth_columns(line, &xderiv(&sf.psi, 2), nz);
    let p_z = synth_columns(line, &dz, nz);
    let p_zz = synth_columns(line, &dzz, nz);
    let p_xz = synth_columns(line, &xderiv(&dz, 1), nz);
    let mut out = PhysicalDerivatives {
        psi: psi.clone(),
        px: vec![vec![0.0; line.points]; nz],
        pz: vec![vec![0.0; line.points]; nz],
        laplacian: vec![vec![0.0; line.points]; nz],
    };
    for (j, &zd) in g.nodes().iter().enumerate() {
        for i in 0..line.points {
            let h = d + surf.eta[i];
            let jac = h / d;
            let (ex, exx) = (surf.ex[i], surf.exx[i]);
            let zeta = -(zd + d) * ex / h;
            let zeta_z = -ex / h;
            let zeta_x = -(zd + d) * (exx / h - ex * ex / (h * h));
            let xx = p_xx[j][i] + 2.0 * zeta * p_xz[j][i] + zeta * zeta * p_zz[j][i] + (zeta_x + zeta * zeta_z) * p_z[j][i];
            let zz = p_zz[j][i] / (jac * jac);
            out.px[j][i] = p_x[j][i] + zeta * p_z[j][i];
            out.pz[j][i] = p_z[j][i] / jac;
            out.laplacian[j][i] = xx + zz;
        }
    }
    out
}

/// `½|∇ψ|² + gη - σ ∂_x̄(η_x̄ / √(1 + η_x̄²))` along the surface.
fn bernoulli_line(model: &SpectralModel, sf: &StreamFunction2D, line: &Line) -> Result<Vec<f64>> {
    let p = model.params;
    let surf = surface_line(line, &sf.eta);
    let pd = physical_derivatives(model, sf, line, &surf);
    Ok((0..line.points)
        .map(|i| {
            let ex = surf.ex[i];
            let curv = surf.exx[i] / (1.0 + ex * ex).powf(1.5);
            0.5 * (pd.px[0][i].powi(2) + pd.pz[0][i].powi(2)) + p.g * surf.eta[i] - p.sigma * curv
        })
        .collect())
}

/// Residuals of the PDE, both boundary conditions and the Bernoulli condition. The PDE is
/// scaled by `U0/d`, the boundary values by `U0 d` and Bernoulli by `g d + U0²`, with `U0`
/// the largest velocity magnitude on the grid.
pub fn residuals_2d(model: &SpectralModel, sf: &StreamFunction2D) -> Result<Residuals2D> {
    let (_, kappa, n_cap) = axis_vector(model, sf.axis)?;
    if sf.n_max() > n_cap {
        return Err(Error::Shape("stream function exceeds the model truncation".into()));
    }
    let p = model.params;
    let d = p.d;
    let nz = model.nz();
    let line = Line::new(sf.n_max(), kappa);
    let surf = surface_line(&line, &sf.eta);
    let pd = physical_derivatives(model, sf, &line, &surf);
    let mut u0: f64 = 0.0;
    let mut pde: f64 = 0.0;
    for j in 0..nz {
        for i in 0..line.points {
            let perp = p.alpha * pd.psi[j][i] + sf.beta;
            u0 = u0.max((pd.px[j][i].powi(2) + pd.pz[j][i].powi(2) + perp * perp).sqrt());
            pde = pde.max((pd.laplacian[j][i] + p.alpha * perp).abs());
        }
    }
    let u0 = u0.max(f64::MIN_POSITIVE);
    let bottom = pd.psi[nz - 1].iter().map(|v| (v - sf.m1).abs()).fold(0.0, f64::max);
    let surface = pd.psi[0].iter().map(|v| (v - sf.m2).abs()).fold(0.0, f64::max);
    let b = bernoulli_line(model, sf, &line)?;
    let bern = b.iter().map(|v| (v - sf.q0).abs()).fold(0.0, f64::max);
    Ok(Residuals2D {
        pde: pde * d / u0,
        bottom: bottom / (u0 * d),
        surface: surface / (u0 * d),
        bernoulli: bern / (p.g * d + u0 * u0),
    })
}

/// x̄ coordinates of the sampling grid used by [`residuals_2d`].
pub fn line_points(model: &SpectralModel, sf: &StreamFunction2D) -> Result<Vec<f64>> {
    let (_, kappa, _) = axis_vector(model, sf.axis)?;
    let line = Line::new(sf.n_max(), kappa);
    Ok((0..line.points).map(|i| line.x(i)).collect())
}
