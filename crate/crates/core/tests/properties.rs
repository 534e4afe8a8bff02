mod common;

use beltrami::bifurcation::transversality;
use beltrami::dispersion::{conic_matrix, dispersion_curve, kappa, rho};
use beltrami::flattened::FlatSolver;
use beltrami::model::flatten_geometry;
use beltrami::{Lattice, PhysicalParams, SurfaceProfile};
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn solver() -> &'static FlatSolver {
    static S: OnceLock<FlatSolver> = OnceLock::new();
    S.get_or_init(|| FlatSolver::new(ref_model(4, 16)).unwrap())
}

fn vec2(r: f64) -> impl Strategy<Value = [f64; 2]> {
    (-r..r, -r..r).prop_map(|(a, b)| [a, b])
}

fn wave_vector() -> impl Strategy<Value = [f64; 2]> {
    (0.1f64..6.0, 0.0..2.0 * PI).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

/// Physical parameters kept away from vertical resonances for `|k| <= 6`.
fn params() -> impl Strategy<Value = PhysicalParams> {
    (0.1f64..10.0, 0.05f64..5.0, 0.2f64..3.0, -1.0f64..1.0)
        .prop_map(|(g, s, d, a)| PhysicalParams::new(g, s, d, a / d).unwrap())
}

fn rotate(v: [f64; 2], t: f64) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

fn random_eta(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> SurfaceProfile {
    let mut eta = SurfaceProfile::zeros(n);
    let n = n as i32;
    for a in 0..=n.min(2) {
        for b in -n.min(2)..=n.min(2) {
            if a > 0 || b >= 0 {
                eta.add_cosine(a, b, amp * rng.gen_range(-1.0..1.0) / (1 + a * a + b * b) as f64).unwrap();
            }
        }
    }
    eta
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_lattice_identity(l1 in vec2(5.0), l2 in vec2(5.0)) {
        let det = l1[0] * l2[1] - l1[1] * l2[0];
        prop_assume!(det.abs() > 1e-2 * (l1[0].hypot(l1[1]) * l2[0].hypot(l2[1])).max(1e-3));
        let lat = Lattice::from_generators(l1, l2).unwrap();
        let tp = 2.0 * PI;
        let d = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        prop_assert!((d(lat.k1(), lat.lambda1()) - tp).abs() < 1e-12 * tp);
        prop_assert!((d(lat.k2(), lat.lambda2()) - tp).abs() < 1e-12 * tp);
        prop_assert!(d(lat.k1(), lat.lambda2()).abs() < 1e-12 * tp);
        prop_assert!(d(lat.k2(), lat.lambda1()).abs() < 1e-12 * tp);
        let back = Lattice::from_dual(lat.k1(), lat.k2()).unwrap();
        for (a, b) in [(back.lambda1(), l1), (back.lambda2(), l2)] {
            prop_assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-12 * (b[0].abs() + b[1].abs()).max(1.0));
        }
    }

    #[test]
    fn rho_is_even_in_k(p in params(), c in vec2(3.0), k in wave_vector()) {
        let r = rho(c, k, &p).unwrap();
        let m = rho(c, [-k[0], -k[1]], &p).unwrap();
        let scale = p.restoring(k[0].hypot(k[1])) + (c[0] * c[0] + c[1] * c[1]) * (kappa(k[0].hypot(k[1]), &p).unwrap().abs() + p.alpha.abs());
        prop_assert!((r - m).abs() <= 1e-13 * scale);
    }

    #[test]
    fn rho_is_rotation_equivariant(p in params(), c in vec2(3.0), k in wave_vector(), t in 0.0..2.0 * PI) {
        let r = rho(c, k, &p).unwrap();
        let q = rho(rotate(c, t), rotate(k, t), &p).unwrap();
        let scale = p.restoring(k[0].hypot(k[1])) + (c[0] * c[0] + c[1] * c[1]) * (kappa(k[0].hypot(k[1]), &p).unwrap().abs() + p.alpha.abs());
        prop_assert!((r - q).abs() <= 1e-12 * scale);
    }

    #[test]
    fn conic_form_encodes_rho(p in params(), c in vec2(3.0), k in wave_vector()) {
        let m = conic_matrix(k, &p).unwrap();
        let q = m[0][0] * c[0] * c[0] + 2.0 * m[0][1] * c[0] * c[1] + m[1][1] * c[1] * c[1];
        let a = p.restoring(k[0].hypot(k[1]));
        let r = rho(c, k, &p).unwrap();
        prop_assert!((r - a * (1.0 - q)).abs() <= 1e-12 * (a + a * q.abs()));
    }

    #[test]
    fn curve_samples_are_roots(p in params(), k in wave_vector()) {
        prop_assume!(p.alpha.abs() > 1e-3);
        let curve = dispersion_curve(k, &p, 50).unwrap();
        let a = p.restoring(k[0].hypot(k[1]));
        let m = curve.conic;
        for c in &curve.points {
            let q = m[0][0] * c[0] * c[0] + 2.0 * m[0][1] * c[0] * c[1] + m[1][1] * c[1] * c[1];
            // far out on the branches, and for small |α|, the form cancels large terms
            let cond = (m[0][0] * c[0] * c[0]).abs() + 2.0 * (m[0][1] * c[0] * c[1]).abs() + (m[1][1] * c[1] * c[1]).abs();
            prop_assert!((q - 1.0).abs() < 1e-10 * cond.max(1.0));
            prop_assert!(rho(*c, k, &p).unwrap().abs() < 1e-9 * a * cond.max(1.0));
        }
        let kap = kappa(k[0].hypot(k[1]), &p).unwrap();
        prop_assert!(curve.gamma > 0.0 && curve.gamma < PI);
        prop_assert_eq!((curve.gamma - PI / 2.0).signum(), kap.signum());
    }

    #[test]
    fn transversality_is_antisymmetric(p in params(), c in vec2(3.0), k1 in wave_vector(), k2 in wave_vector()) {
        let a = transversality(c, k1, k2, &p).unwrap();
        let b = transversality(c, k2, k1, &p).unwrap();
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn flat_geometry_is_identity(x in vec2(10.0), z in -1.0f64..0.0) {
        let g = flatten_geometry(&SurfaceProfile::zeros(3), &ref_lattice(), 1.0, x, z).unwrap();
        prop_assert_eq!(g.f, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        prop_assert_eq!(g.jacobian, 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fourier_round_trip(seed in any::<u64>()) {
        let m = ref_model(5, 4);
        let modes = m.modes();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); modes.len()];
        for (i, _, _) in modes.iter() {
            let j = modes.neg(i);
            if i < j {
                let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                coeffs[i] = v;
                coeffs[j] = v.conj();
            } else if i == j {
                coeffs[i] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            }
        }
        let back = m.transform().analyze(&m.transform().synth(&coeffs));
        for (a, b) in back.iter().zip(&coeffs) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesis_is_real(seed in any::<u64>(), x in vec2(5.0), z in -1.0f64..0.0) {
        let m = solver().model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_y_field(m, &mut rng);
        let v = m.eval_field_complex(&u, x, z).unwrap();
        let scale = v.iter().map(|c| c.norm()).fold(1.0, f64::max);
        for c in v {
            prop_assert!(c.im.abs() < 1e-13 * scale);
        }
    }

    #[test]
    fn nonlinearity_is_linear_in_field(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let s = solver();
        let m = s.model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_y_field(m, &mut rng);
        let v = random_y_field(m, &mut rng);
        let eta = random_eta(&mut rng, m.truncation(), 0.05);
        let combo = u.scaled(a).plus(&v.scaled(b));
        let lhs = s.nonlinearity_n(&combo, &eta).unwrap();
        let rhs = s.nonlinearity_n(&u, &eta).unwrap().scaled(a).plus(&s.nonlinearity_n(&v, &eta).unwrap().scaled(b));
        let scale = lhs.max_abs().max(rhs.max_abs()).max(1e-300);
        prop_assert!(lhs.minus(&rhs).max_abs() < 1e-12 * scale.max(combo.max_abs()));
    }

    #[test]
    fn operators_preserve_symmetry(seed in any::<u64>()) {
        let s = solver();
        let m = s.model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_y_field(m, &mut rng);
        let eta = random_eta(&mut rng, m.truncation(), 0.05);
        let scale = u.max_abs();
        prop_assert!(u.symmetry_leakage() < 1e-14 * scale);
        prop_assert!(s.nonlinearity_n(&u, &eta).unwrap().symmetry_leakage() < 1e-12 * scale);
        prop_assert!(s.curl(&u).symmetry_leakage() < 1e-12 * scale * 10.0);
        let c = ref_bifurcation().c_star;
        prop_assert!(s.g_operator(&u.scaled(1e-3), &eta.scaled(0.02), c).unwrap().symmetry_leakage() < 1e-12);
        let back = s.solve_c_alpha(&s.apply_c_alpha(&u)).unwrap();
        prop_assert!(back.symmetry_leakage() < 1e-11 * scale);
        let sol = s.solve_v_of_eta(&eta.scaled(0.02), c).unwrap();
        prop_assert!(sol.v.symmetry_leakage() < 1e-13);
    }

    #[test]
    fn c_alpha_round_trip(seed in any::<u64>()) {
        let s = solver();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_y_field(s.model(), &mut rng);
        let back = s.solve_c_alpha(&s.apply_c_alpha(&u)).unwrap();
        prop_assert!(back.minus(&u).max_abs() < 1e-9 * u.max_abs());
    }
}
