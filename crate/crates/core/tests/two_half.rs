mod common;

use beltrami::flattened::FlatSolver;
use beltrami::model::laminar_eval;
use beltrami::two_half::{extract_2d, lift_2d_to_3d, residuals_2d, StreamFunction2D};
use beltrami::{Error, LaminarFlow, SpectralModel, SurfaceProfile};
use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AXIS: (i32, i32) = (0, 1);

fn real(v: Vec<f64>) -> Vec<Complex64> {
    v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()
}

fn laminar_stream(model: &SpectralModel, c: [f64; 2]) -> StreamFunction2D {
    let n = model.truncation();
    let a = model.params.alpha;
    let k = model.lattice.k(AXIS.0, AXIS.1);
    let kn = (k[0] * k[0] + k[1] * k[1]).sqrt();
    let ep = [-k[1] / kn, k[0] / kn];
    let flow = LaminarFlow::from_vec(c);
    let perp = |z: f64| {
        let u = flow.eval(a, z);
        ep[0] * u[0] + ep[1] * u[1]
    };
    let beta = perp(-model.params.d);
    let mut psi = vec![vec![Complex64::new(0.0, 0.0); model.nz()]; 2 * n + 1];
    psi[n] = real(model.grid().nodes().iter().map(|&z| (perp(z) - beta) / a).collect());
    StreamFunction2D::new(model, AXIS, psi, vec![0.0; 2 * n + 1], beta).unwrap()
}

#[test]
fn laminar_flow_as_stream_function() {
    let m = ref_model(4, 20);
    let c = [0.4, -1.3];
    let sf = laminar_stream(&m, c);
    let u = lift_2d_to_3d(&m, &sf).unwrap();
    let zero = m.modes().zero();
    for (j, &z) in m.grid().nodes().iter().enumerate() {
        let exact = laminar_eval(&LaminarFlow::from_vec(c), &m.params, z).unwrap();
        for comp in 0..3 {
            assert!((u.at(comp, zero, j).re - exact[comp]).abs() < 1e-12);
        }
    }
    assert!(u.max_abs_where(|a, b| (a, b) != (0, 0)) < 1e-14);

    let back = extract_2d(&m, &u, &m.zero_surface(), AXIS).unwrap();
    assert!((back.beta - sf.beta).abs() < 1e-12);
    for (a, b) in back.psi[4].iter().zip(&sf.psi[4]) {
        assert!((a - b).norm() < 1e-12);
    }
}

fn manufactured(model: &SpectralModel, beta: f64) -> StreamFunction2D {
    // ψ = cos(κ x̄) sinh(μ(z + d)) - β/α solves ψ_x̄x̄ + ψ_zz + α²ψ + αβ = 0
    let n = model.truncation();
    let a = model.params.alpha;
    let k = model.lattice.k(AXIS.0, AXIS.1);
    let kappa = (k[0] * k[0] + k[1] * k[1]).sqrt();
    let mu = (kappa * kappa - a * a).sqrt();
    let mut psi = vec![vec![Complex64::new(0.0, 0.0); model.nz()]; 2 * n + 1];
    let prof: Vec<f64> = model.grid().nodes().iter().map(|&z| 0.5 * (mu * (z + 1.0)).sinh()).collect();
    psi[n + 1] = real(prof.clone());
    psi[n - 1] = real(prof);
    psi[n] = vec![Complex64::new(-beta / a, 0.0); model.nz()];
    StreamFunction2D::new(model, AXIS, psi, vec![0.0; 2 * n + 1], beta).unwrap()
}

#[test]
fn lifted_solution_is_beltrami() {
    let s = FlatSolver::new(ref_model(3, 24)).unwrap();
    let m = s.model();
    let sf = manufactured(m, 0.3);
    let u = lift_2d_to_3d(m, &sf).unwrap();
    let r = s.curl(&u).minus(&u.scaled(m.params.alpha));
    assert!(r.max_abs() < 1e-9 * u.max_abs(), "{}", r.max_abs());
    assert!(residuals_2d(m, &sf).unwrap().pde < 1e-9);
    assert!(residuals_2d(m, &sf).unwrap().bottom < 1e-13);
}

#[test]
fn beta_can_be_absorbed() {
    let m = ref_model(3, 16);
    let sf = manufactured(&m, 0.3);
    let a = m.params.alpha;
    let shifted = sf.regauge(sf.beta / a, a);
    assert!(shifted.beta.abs() < 1e-15);
    let u1 = lift_2d_to_3d(&m, &sf).unwrap();
    let u2 = lift_2d_to_3d(&m, &shifted).unwrap();
    assert!(u1.minus(&u2).max_abs() < 1e-13);
}

fn random_stream(model: &SpectralModel, rng: &mut impl Rng) -> StreamFunction2D {
    let n = model.truncation();
    let nz = model.nz();
    let mut psi = vec![vec![Complex64::new(0.0, 0.0); nz]; 2 * n + 1];
    let nodes = model.grid().nodes().to_vec();
    for h in 0..=(n - 2) {
        let coeffs: Vec<f64> = (0..nz - 2).map(|j| rng.gen_range(-1.0..1.0) * 0.5f64.powi(j as i32)).collect();
        let im: Vec<f64> = (0..nz - 2).map(|j| rng.gen_range(-1.0..1.0) * 0.5f64.powi(j as i32)).collect();
        let amp = 0.5f64.powi(h as i32);
        let re = cheb_values(&nodes, 1.0, &coeffs);
        let imv = cheb_values(&nodes, 1.0, &im);
        for j in 0..nz {
            let v = if h == 0 {
                Complex64::new(amp * re[j], 0.0)
            } else {
                Complex64::new(re[j], imv[j]) * amp * (nodes[j] + 1.0)
            };
            psi[n + h][j] = v;
            psi[n - h][j] = v.conj();
        }
    }
    let mut eta = vec![0.0; 2 * n + 1];
    for h in 1..=2 {
        let v = rng.gen_range(-0.05..0.05);
        eta[n + h] = v;
        eta[n - h] = v;
    }
    eta[n] = rng.gen_range(-0.02..0.02);
    StreamFunction2D::new(model, AXIS, psi, eta, rng.gen_range(-1.0..1.0)).unwrap()
}

#[test]
fn extract_inverts_lift_up_to_gauge() {
    let m = ref_model(6, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let sf = random_stream(&m, &mut rng);
        let mut eta = m.zero_surface();
        let n = m.truncation() as i32;
        for h in 0..=2 {
            eta.set(0, h, sf.eta[(n + h) as usize]).unwrap();
        }
        let u = lift_2d_to_3d(&m, &sf).unwrap();
        let back = extract_2d(&m, &u, &eta, AXIS).unwrap();
        let expect = sf.regauge(-sf.m1, m.params.alpha);
        assert!((back.beta - expect.beta).abs() < 1e-10);
        assert!((back.m2 - expect.m2).abs() < 1e-10);
        for (a, b) in back.psi.iter().zip(&expect.psi) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn extract_rejects_three_dimensional_fields() {
    let m = ref_model(3, 12);
    let mut u = m.zero_field();
    u.add_laminar(&LaminarFlow::new(1.0, 0.0), 0.5, m.grid().nodes());
    let idx = m.modes().index(1, 0).unwrap();
    u.profile_mut(0, idx)[3] = Complex64::new(0.1, 0.0);
    assert!(matches!(extract_2d(&m, &u, &m.zero_surface(), AXIS), Err(Error::NotTwoHalfD(_))));
    let eta = SurfaceProfile::cosine(3, 1, 1, 0.01).unwrap();
    let mut u = m.zero_field();
    u.add_laminar(&LaminarFlow::new(1.0, 0.0), 0.5, m.grid().nodes());
    assert!(matches!(extract_2d(&m, &u, &eta, AXIS), Err(Error::NotTwoHalfD(_))));
}

#[test]
fn extract_rejects_non_affine_shear() {
    let m = ref_model(3, 12);
    let k = m.lattice.k(AXIS.0, AXIS.1);
    let kn = (k[0] * k[0] + k[1] * k[1]).sqrt();
    let ep = [-k[1] / kn, k[0] / kn];
    let mut u = m.zero_field();
    let zero = m.modes().zero();
    for (j, &z) in m.grid().nodes().iter().enumerate() {
        u.profile_mut(0, zero)[j] = Complex64::new(ep[0] * z * z, 0.0);
        u.profile_mut(1, zero)[j] = Complex64::new(ep[1] * z * z, 0.0);
    }
    assert!(matches!(extract_2d(&m, &u, &m.zero_surface(), AXIS), Err(Error::AffineViolation(_))));
}
