#![allow(dead_code)]

use beltrami::bifurcation::{find_bifurcations, BifurcationPoint};
use beltrami::{Field3D, Lattice, PhysicalParams, SpectralModel};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

pub fn ref_params() -> PhysicalParams {
    PhysicalParams::new(1.0, 1.0, 1.0, 0.5).unwrap()
}

pub fn ref_lattice() -> Lattice {
    Lattice::symmetric(2.0, PI / 3.0).unwrap()
}

pub fn ref_model(n: usize, nz: usize) -> SpectralModel {
    SpectralModel::new(ref_params(), ref_lattice(), n, nz).unwrap()
}

pub fn ref_bifurcation() -> BifurcationPoint {
    find_bifurcations(&ref_lattice(), &ref_params()).unwrap().remove(0)
}

/// Values at the grid nodes of `Σ a_n T_n(2z/d + 1)`.
pub fn cheb_values(nodes: &[f64], d: f64, coeffs: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .map(|&z| {
            let x = (2.0 * z / d + 1.0).clamp(-1.0, 1.0);
            let th = x.acos();
            coeffs.iter().enumerate().map(|(n, a)| a * (n as f64 * th).cos()).sum()
        })
        .collect()
}

fn random_poly(rng: &mut impl Rng, degree: usize, nodes: &[f64], d: f64) -> Vec<f64> {
    let coeffs: Vec<f64> = (0..=degree).map(|n| rng.gen_range(-1.0..1.0) * 0.6f64.powi(n as i32)).collect();
    cheb_values(nodes, d, &coeffs)
}

/// Random real field in the discrete space Y: divergence-free, `v3(-d) = 0`, zero-mean
/// horizontal components at `k = 0`, in the symmetry classes of the problem.
pub fn random_y_field(model: &SpectralModel, rng: &mut impl Rng) -> Field3D {
    let nz = model.nz();
    let d = model.params.d;
    let nodes = model.grid().nodes().to_vec();
    let mut v = model.zero_field();
    let modes = model.modes();
    for (idx, n1, n2) in modes.iter() {
        let amp = (-0.3 * ((n1 * n1 + n2 * n2) as f64).sqrt()).exp();
        if n1 == 0 && n2 == 0 {
            for c in 0..2 {
                let p = random_poly(rng, nz - 2, &nodes, d);
                let mean = model.grid().integrate(&p.iter().map(|x| Complex64::new(*x, 0.0)).collect::<Vec<_>>()).re / d;
                for j in 0..nz {
                    v.profile_mut(c, idx)[j] = Complex64::new(amp * (p[j] - mean), 0.0);
                }
            }
            continue;
        }
        if !(n1 > 0 || (n1 == 0 && n2 > 0)) {
            continue;
        }
        let neg = modes.neg(idx);
        let k = model.wave(idx);
        let k2 = k[0] * k[0] + k[1] * k[1];
        let p = random_poly(rng, nz - 3, &nodes, d);
        let a: Vec<f64> = nodes.iter().zip(&p).map(|(z, p)| amp * (z + d) * p).collect();
        let da = model.grid().apply_diff_real(&a);
        let s = random_poly(rng, nz - 2, &nodes, d);
        for j in 0..nz {
            let h1 = -k[0] * da[j] / k2 - k[1] * amp * s[j];
            let h2 = -k[1] * da[j] / k2 + k[0] * amp * s[j];
            for (i, val) in [(idx, 1.0), (neg, -1.0)] {
                v.profile_mut(0, i)[j] = Complex64::new(h1, 0.0);
                v.profile_mut(1, i)[j] = Complex64::new(h2, 0.0);
                v.profile_mut(2, i)[j] = Complex64::new(0.0, val * a[j]);
            }
        }
    }
    v
}
