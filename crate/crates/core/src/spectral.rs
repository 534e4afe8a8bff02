//! Discretisation machinery: mode indexing over the truncated dual lattice, the
//! Chebyshev–Gauss–Lobatto grid in z, and FFT transforms on the periodic cell.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Square index set `|n1|, |n2| <= n` of the truncated dual lattice.
///
/// Modes are stored row-major in `(n1, n2)`, so the index of `-k` is `len - 1 - idx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSet {
    n: usize,
}

impl ModeSet {
    pub fn new(n: usize) -> Self {
        ModeSet { n }
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, n1: i32, n2: i32) -> Option<usize> {
        let n = self.n as i32;
        if n1.abs() > n || n2.abs() > n {
            return None;
        }
        Some(((n1 + n) as usize) * self.side() + (n2 + n) as usize)
    }

    pub fn pair(&self, idx: usize) -> (i32, i32) {
        let n = self.n as i32;
        let s = self.side();
        ((idx / s) as i32 - n, (idx % s) as i32 - n)
    }

    pub fn neg(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    pub fn zero(&self) -> usize {
        self.len() / 2
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i32, i32)> + '_ {
        (0..self.len()).map(move |i| {
            let (a, b) = self.pair(i);
            (i, a, b)
        })
    }
}

/// Chebyshev–Gauss–Lobatto grid on `[-d, 0]`. Node 0 is the surface `z = 0`, the last
/// node is the bottom `z = -d`.
#[derive(Debug, Clone)]
pub struct ChebGrid {
    d: f64,
    z: Vec<f64>,
    diff: DMatrix<f64>,
    diff2: DMatrix<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
}

impl ChebGrid {
    pub fn new(nodes: usize, d: f64) -> Result<Self> {
        if nodes < 4 {
            return Err(Error::InvalidParameter(format!("need at least 4 z-nodes, got {nodes}")));
        }
        if !(d > 0.0) {
            return Err(Error::InvalidParameter(format!("depth must be positive, got {d}")));
        }
        let n = nodes - 1;
        let x: Vec<f64> = (0..nodes).map(|j| (PI * j as f64 / n as f64).cos()).collect();
        let z: Vec<f64> = x.iter().map(|&xi| 0.5 * d * (xi - 1.0)).collect();

        let c = |j: usize| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                2.0 * s
            } else {
                s
            }
        };
        let mut dx = DMatrix::<f64>::zeros(nodes, nodes);
        for i in 0..nodes {
            for j in 0..nodes {
                if i != j {
                    dx[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
                }
            }
        }
        // negative-sum trick for the diagonal
        for i in 0..nodes {
            let s: f64 = (0..nodes).filter(|&j| j != i).map(|j| dx[(i, j)]).sum();
            dx[(i, i)] = -s;
        }
        let diff = dx * (2.0 / d);
        let diff2 = &diff * &diff;

        // Clenshaw–Curtis weights on [-1, 1], scaled to [-d, 0]
        let mut w = vec![0.0; nodes];
        let theta: Vec<f64> = (0..nodes).map(|j| PI * j as f64 / n as f64).collect();
        let nf = n as f64;
        if n % 2 == 0 {
            w[0] = 1.0 / (nf * nf - 1.0);
            w[n] = w[0];
            for (i, wi) in w.iter_mut().enumerate().take(n).skip(1) {
                let mut v = 1.0;
                for k in 1..n / 2 {
                    let kf = k as f64;
                    v -= 2.0 * (2.0 * kf * theta[i]).cos() / (4.0 * kf * kf - 1.0);
                }
                v -= (nf * theta[i]).cos() / (nf * nf - 1.0);
                *wi = 2.0 * v / nf;
            }
        } else {
            w[0] = 1.0 / (nf * nf);
            w[n] = w[0];
            for (i, wi) in w.iter_mut().enumerate().take(n).skip(1) {
                let mut v = 1.0;
                for k in 1..=(n - 1) / 2 {
                    let kf = k as f64;
                    v -= 2.0 * (2.0 * kf * theta[i]).cos() / (4.0 * kf * kf - 1.0);
                }
                *wi = 2.0 * v / nf;
            }
        }
        for wi in &mut w {
            *wi *= 0.5 * d;
        }

        let bary = (0..nodes)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();

        Ok(ChebGrid { d, z, diff, diff2, weights: w, bary })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn depth(&self) -> f64 {
        self.d
    }

    pub fn nodes(&self) -> &[f64] {
        &self.z
    }

    /// First-derivative matrix in z.
    pub fn diff(&self) -> &DMatrix<f64> {
        &self.diff
    }

    /// Second-derivative matrix, exactly `diff * diff`.
    pub fn diff2(&self) -> &DMatrix<f64> {
        &self.diff2
    }

    /// Clenshaw–Curtis quadrature weights for `∫_{-d}^0 dz`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply_diff(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += f[j] * self.diff[(i, j)];
            }
            *o = acc;
        }
        out
    }

    pub fn apply_diff_real(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.diff[(i, j)] * f[j]).sum()).collect()
    }

    pub fn integrate(&self, f: &[Complex64]) -> Complex64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Barycentric interpolation of nodal values at `z`.
    pub fn interpolate(&self, f: &[Complex64], z: f64) -> Result<Complex64> {
        let tol = 1e-12 * self.d;
        if z > tol || z < -self.d - tol {
            return Err(Error::OutOfRange(z));
        }
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for (j, &zj) in self.z.iter().enumerate() {
            let dz = z - zj;
            if dz.abs() < 1e-15 * self.d {
                return Ok(f[j]);
            }
            let w = self.bary[j] / dz;
            num += f[j] * w;
            den += w;
        }
        Ok(num / den)
    }
}

/// FFT transforms between truncated mode coefficients and values on the uniform
/// `P x P` grid in lattice coordinates `(a1, a2) in [0,1)^2`.
#[derive(Clone)]
pub struct Transform2D {
    modes: ModeSet,
    p: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform2D").field("modes", &self.modes).field("p", &self.p).finish()
    }
}

impl Transform2D {
    /// Grid with `2 (2N + 1)` points per direction, twice the number of retained modes.
    pub fn new(modes: ModeSet) -> Self {
        Self::with_points(modes, 2 * modes.side())
    }

    pub fn with_points(modes: ModeSet, p: usize) -> Self {
        assert!(p > 2 * modes.truncation(), "grid too coarse for the truncation");
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(p);
        let inv = planner.plan_fft_inverse(p);
        Transform2D { modes, p, fwd, inv }
    }

    pub fn points(&self) -> usize {
        self.p
    }

    pub fn grid_len(&self) -> usize {
        self.p * self.p
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    /// Lattice coordinates of grid point `g = i1 * P + i2`.
    pub fn lattice_coords(&self, g: usize) -> (f64, f64) {
        let p = self.p as f64;
        ((g / self.p) as f64 / p, (g % self.p) as f64 / p)
    }

    fn fft2(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let p = self.p;
        plan.process(buf);
        transpose(buf, p);
        plan.process(buf);
        transpose(buf, p);
    }

    fn slot(&self, n: i32) -> usize {
        n.rem_euclid(self.p as i32) as usize
    }

    /// Real part of the Fourier synthesis on the grid.
    pub fn synth(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid_len()];
        for (idx, n1, n2) in self.modes.iter() {
            buf[self.slot(n1) * self.p + self.slot(n2)] = coeffs[idx];
        }
        self.fft2(&mut buf, &self.inv);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Complex synthesis, used to check realness.
    pub fn synth_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid_len()];
        for (idx, n1, n2) in self.modes.iter() {
            buf[self.slot(n1) * self.p + self.slot(n2)] = coeffs[idx];
        }
        self.fft2(&mut buf, &self.inv);
        buf
    }

    /// Fourier analysis of grid values, truncated to the mode set.
    pub fn analyze(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, &self.fwd);
        let scale = 1.0 / (self.grid_len() as f64);
        let mut out = vec![Complex64::new(0.0, 0.0); self.modes.len()];
        for (idx, n1, n2) in self.modes.iter() {
            out[idx] = buf[self.slot(n1) * self.p + self.slot(n2)] * scale;
        }
        out
    }
}

fn transpose(buf: &mut [Complex64], p: usize) {
    for i in 0..p {
        for j in i + 1..p {
            buf.swap(i * p + j, j * p + i);
        }
    }
}
