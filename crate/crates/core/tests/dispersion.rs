mod common;

use beltrami::bifurcation::symmetric_c_star;
use beltrami::dispersion::{
    check_nonresonance, conic_matrix, dispersion_curve, enumerate_dispersion_roots, irrotational_lines, kappa, rho,
};
use beltrami::{Error, Lattice, PhysicalParams};
use common::*;
use std::f64::consts::PI;

fn params(g: f64, sigma: f64, d: f64, alpha: f64) -> PhysicalParams {
    PhysicalParams::new(g, sigma, d, alpha).unwrap()
}

/// `coth x` from its continued fraction `1/x + x/(3 + x²/(5 + x²/(7 + ...)))`.
fn coth_cf(x: f64) -> f64 {
    let x2 = x * x;
    let mut t = 0.0;
    for n in (1..60).rev() {
        t = x2 / ((2 * n + 1) as f64 + t);
    }
    1.0 / x + t / x
}

/// `tan x` from Lambert's continued fraction `x/(1 - x²/(3 - x²/(5 - ...)))`.
fn tan_cf(x: f64) -> f64 {
    let x2 = x * x;
    let mut t = 0.0;
    for n in (1..60).rev() {
        t = x2 / ((2 * n + 1) as f64 - t);
    }
    x / (1.0 - t)
}

#[test]
fn kappa_examples() {
    for (alpha, d) in [(0.5, 1.0), (2.0, 0.3), (-1.5, 2.0)] {
        let p = params(1.0, 1.0, d, alpha);
        assert!((kappa(f64::abs(alpha), &p).unwrap() - 1.0 / d).abs() < 1e-15);
    }
    let p0 = params(1.0, 1.0, 1.0, 0.0);
    let r = kappa(40.0, &p0).unwrap() / 40.0;
    assert!((1.0..=1.0 + 1e-6).contains(&r), "{r}");
    assert!((kappa(1.0, &p0).unwrap() - coth_cf(1.0)).abs() < 1e-15);

    // oscillatory branch √3 cot √3
    let p = params(1.0, 1.0, 1.0, 2.0);
    let s = 3f64.sqrt();
    assert!((kappa(1.0, &p).unwrap() - s / tan_cf(s)).abs() < 1e-13);
    // exponential branch with α ≠ 0: √(k² - α²) coth(√(k² - α²) d)
    let p = params(1.0, 1.0, 0.7, 0.5);
    let s = (4.0f64 - 0.25).sqrt();
    assert!((kappa(2.0, &p).unwrap() - s * coth_cf(s * 0.7)).abs() < 1e-14);
}

#[test]
fn kappa_pole_and_domain() {
    let p = params(1.0, 1.0, 1.0, PI);
    assert!(matches!(kappa(0.0, &p), Err(Error::ResonancePole { n: 1, .. })));
    let p = params(1.0, 1.0, 1.0, (4.0 * PI * PI + 1.0).sqrt());
    assert!(matches!(kappa(1.0, &p), Err(Error::ResonancePole { n: 2, .. })));
    assert!(kappa(-1.0, &p).is_err());
}

#[test]
fn kappa_is_continuous_across_branch_point() {
    // Near |k| = |α| the deviation from 1/d is linear in ε; after removing the
    // first-order term -(α² - |k|²) d / 3 what remains is O(ε²).
    for (alpha, d) in [(0.5, 1.0), (3.0, 0.4)] {
        let p = params(1.0, 1.0, d, alpha);
        for &e in &[1e-6, 1e-5, 1e-4, 1e-3] {
            let eps = e / d;
            for k in [alpha + eps, alpha - eps] {
                let t = alpha * alpha - k * k;
                let linear = (1.0 - t * d * d / 3.0) / d;
                let rem = (kappa(k, &p).unwrap() - linear).abs();
                assert!(rem <= 2.0 * alpha * alpha * d * d * d * eps * eps + 1e-15, "{alpha} {k} {rem}");
            }
        }
        // the two evaluation paths agree at the switch point
        let kb = (alpha * alpha - 1e-6 / (d * d)).sqrt();
        let below = kappa(kb * (1.0 - 1e-12), &p).unwrap();
        let above = kappa(kb * (1.0 + 1e-12), &p).unwrap();
        assert!((below - above).abs() < 1e-8);
    }
}

#[test]
fn rho_examples() {
    let p = ref_params();
    let k = [1.2, -0.7];
    let a = p.g + p.sigma * (k[0] * k[0] + k[1] * k[1]);
    assert!((rho([0.0, 0.0], k, &p).unwrap() - a).abs() < 1e-15);
    let c = [0.7 * 3.0, 1.2 * 3.0];
    assert!((rho(c, k, &p).unwrap() - a).abs() < 1e-14);
    assert!(matches!(rho(c, [0.0, 0.0], &p), Err(Error::ZeroWaveVector)));

    // c* is a root; oracle: plain Newton with a finite-difference Jacobian from a
    // perturbed start.
    let lat = ref_lattice();
    let cfg = symmetric_c_star(2.0, PI / 3.0, &p).unwrap()[0];
    let f = |c: [f64; 2]| [rho(c, lat.k1(), &p).unwrap(), rho(c, lat.k2(), &p).unwrap()];
    let mut c = [cfg.c_star[0] * 1.05, cfg.c_star[1] * 0.97];
    for _ in 0..40 {
        let r = f(c);
        let h = 1e-7;
        let fx = f([c[0] + h, c[1]]);
        let fy = f([c[0], c[1] + h]);
        let j = [[(fx[0] - r[0]) / h, (fy[0] - r[0]) / h], [(fx[1] - r[1]) / h, (fy[1] - r[1]) / h]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        c[0] -= (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        c[1] -= (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
    }
    assert!((c[0] - cfg.c_star[0]).abs() < 1e-10 && (c[1] - cfg.c_star[1]).abs() < 1e-10);
    for k in [lat.k1(), lat.k2()] {
        assert!(rho(cfg.c_star, k, &p).unwrap().abs() < 1e-10);
    }
}

#[test]
fn irrotational_limit_matches_classical_form() {
    let p = params(1.3, 0.6, 0.8, 0.0);
    for (c, k) in [([0.4, -1.1], [1.0, 2.0]), ([2.0, 0.3], [-0.5, 0.1]), ([-0.7, 0.9], [3.0, -1.0])] {
        let kn = f64::hypot(k[0], k[1]);
        let ck = c[0] * k[0] + c[1] * k[1];
        let classical = p.g + p.sigma * kn * kn - ck * ck * coth_cf(kn * p.d) * kn / (kn * kn);
        assert!((rho(c, k, &p).unwrap() - classical).abs() < 1e-12 * classical.abs().max(1.0));
    }
}

#[test]
fn hyperbola_geometry() {
    let p = ref_params();
    let k = ref_lattice().k1();
    let curve = dispersion_curve(k, &p, 40).unwrap();
    assert!(kappa(2.0, &p).unwrap() > 0.0);
    assert!(curve.gamma > PI / 2.0 && curve.gamma < PI);
    let kn2 = k[0] * k[0] + k[1] * k[1];
    let a = p.restoring(kn2.sqrt());
    for c in &curve.points {
        assert!(rho(*c, k, &p).unwrap().abs() < 1e-9 * a);
        let m = curve.conic;
        let q = m[0][0] * c[0] * c[0] + 2.0 * m[0][1] * c[0] * c[1] + m[1][1] * c[1] * c[1];
        assert!((q - 1.0).abs() < 1e-10);
    }
    // the conic matrix is indefinite for α ≠ 0
    let m = conic_matrix(k, &p).unwrap();
    assert!(m[0][0] * m[1][1] - m[0][1] * m[0][1] < 0.0);

    // κ = 0 when √(α² - |k|²) d = π/2
    let alpha = 2.0;
    let p = params(1.0, 1.0, 1.0, alpha);
    let kn = (alpha * alpha - PI * PI / 4.0).sqrt();
    let curve = dispersion_curve([kn, 0.0], &p, 4).unwrap();
    assert!((curve.gamma - PI / 2.0).abs() < 1e-15);

    // κ < 0 gives an acute angle
    let alpha = 4.0;
    let p = params(1.0, 1.0, 1.0, alpha);
    let kn = (alpha * alpha - 0.8 * PI * 0.8 * PI).sqrt();
    assert!(kappa(kn, &p).unwrap() < 0.0);
    assert!(dispersion_curve([0.0, kn], &p, 4).unwrap().gamma < PI / 2.0);

    assert!(matches!(dispersion_curve(k, &params(1.0, 1.0, 1.0, 0.0), 4), Err(Error::AlphaZero(_))));
}

#[test]
fn irrotational_lines_examples() {
    let p = params(1.0, 1.0, 1.0, 0.0);
    let k = [0.6, 0.8];
    let lines = irrotational_lines(k, &p).unwrap();
    let x0 = (2.0 / coth_cf(1.0)).sqrt();
    assert!((lines.offsets[0] - x0).abs() < 1e-14);
    assert!((lines.offsets[1] + x0).abs() < 1e-14);

    // oracle: bisection for ρ(x k/|k|) = 0 on x > 0
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rho([mid * 0.6, mid * 0.8], k, &p).unwrap() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo - x0).abs() < 1e-14);

    for s in [-3.0, -0.2, 0.0, 1.7] {
        for w in 0..2 {
            let c = lines.point(w, s);
            assert!(rho(c, k, &p).unwrap().abs() < 1e-10);
            let other = lines.point(1 - w, -s);
            assert!((c[0] + other[0]).abs() < 1e-15 && (c[1] + other[1]).abs() < 1e-15);
        }
    }
    assert!(matches!(irrotational_lines(k, &ref_params()), Err(Error::AlphaNonZero)));
}

/// Exhaustive oracle: lattice points with `|k| < |α|` whose vertical number is within
/// `tol` of a positive multiple of π.
fn brute_resonances(lat: &Lattice, p: &PhysicalParams, tol: f64) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for n1 in -50..=50 {
        for n2 in -50..=50 {
            let k = lat.k(n1, n2);
            let k2 = k[0] * k[0] + k[1] * k[1];
            if k2 < p.alpha * p.alpha {
                let x = (p.alpha * p.alpha - k2).sqrt() * p.d;
                let n = (x / PI).round().max(1.0);
                if (x - n * PI).abs() <= tol {
                    out.push((n1, n2));
                }
            }
        }
    }
    out.sort();
    out
}

#[test]
fn nonresonance_scan() {
    let sq = Lattice::from_dual([1.0, 0.0], [0.0, 1.0]).unwrap();
    let r = check_nonresonance(&sq, &params(1.0, 1.0, 1.0, 0.0), 1e-8);
    assert!(r.pass && r.offending.is_empty());

    let r = check_nonresonance(&sq, &params(1.0, 1.0, 1.0, PI), 1e-8);
    assert!(!r.pass);
    assert_eq!(r.offending.iter().map(|q| (q.n1, q.n2)).collect::<Vec<_>>(), vec![(0, 0)]);

    let p = params(1.0, 1.0, 1.0, 1.0);
    let r = check_nonresonance(&sq, &p, 1e-8);
    assert!(r.pass);
    assert!((r.margin - (PI - 1.0)).abs() < 1e-15);

    // a lattice with a genuine Case III mode: √(α² - 1) = π
    let p = params(1.0, 1.0, 1.0, (PI * PI + 1.0).sqrt());
    let r = check_nonresonance(&sq, &p, 1e-8);
    let mut got: Vec<(i32, i32)> = r.offending.iter().map(|q| (q.n1, q.n2)).collect();
    got.sort();
    assert_eq!(got, brute_resonances(&sq, &p, 1e-8));
    assert_eq!(got.len(), 4);

    let lat = ref_lattice();
    let p = ref_params();
    assert!(check_nonresonance(&lat, &p, 1e-8).pass);
    assert!(brute_resonances(&lat, &p, 1e-8).is_empty());
}

#[test]
fn root_enumeration() {
    let lat = ref_lattice();
    let p = ref_params();
    assert!(enumerate_dispersion_roots([0.0, 0.0], &lat, &p, 1e-8).roots.is_empty());

    let bif = ref_bifurcation();
    let scan = enumerate_dispersion_roots(bif.c_star, &lat, &p, 1e-8);
    let mut got: Vec<(i32, i32)> = scan.roots.iter().map(|r| (r.n1, r.n2)).collect();
    got.sort();
    assert_eq!(got, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);

    // closed under negation, and no root outside the scan radius (brute force)
    for r in &scan.roots {
        assert!(got.contains(&(-r.n1, -r.n2)));
    }
    for n1 in -30..=30 {
        for n2 in -30..=30 {
            let k = lat.k(n1, n2);
            let kn = (k[0] * k[0] + k[1] * k[1]).sqrt();
            if kn > scan.radius {
                assert!(rho(bif.c_star, k, &p).unwrap() > 0.0);
            }
        }
    }
}
