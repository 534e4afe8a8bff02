//! Bifurcation points `c*` with `ρ(c*, k1) = ρ(c*, k2) = 0` and the hypotheses needed to
//! continue them into nonlinear waves.

use std::f64::consts::PI;

use crate::dispersion::{
    check_nonresonance, dispersion_curve, enumerate_dispersion_roots, grad_rho, irrotational_lines, kappa,
    rho, Root, POLE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::model::{dot, norm, Lattice, LatticePoint, PhysicalParams, Vec2};

/// Default relative tolerance for root detection.
pub const ROOT_TOLERANCE: f64 = 1e-8;

/// Asymptote angles and the sufficient intersection condition `γ1 - γ2 < θ < π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCondition {
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta: f64,
    pub pass: bool,
    /// True when the labels of `k1`, `k2` were exchanged to get `γ1 >= γ2`.
    pub swapped: bool,
}

pub fn asymptote_gap_condition(k1: Vec2, k2: Vec2, params: &PhysicalParams) -> Result<GapCondition> {
    let a = params.alpha;
    if !(a > 0.0) {
        return Err(Error::Regime(format!("alpha = {a} is not positive")));
    }
    let (n1, n2) = (norm(k1), norm(k2));
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroWaveVector);
    }
    let (kap1, kap2) = (kappa(n1, params)?, kappa(n2, params)?);
    if !(kap1 > 0.0 && kap2 > 0.0) {
        return Err(Error::Regime(format!("kappa values {kap1}, {kap2} are not both positive")));
    }
    let g1 = PI / 2.0 + (kap1 / a).atan();
    let g2 = PI / 2.0 + (kap2 / a).atan();
    let (first, second, gamma1, gamma2, swapped) =
        if g1 >= g2 { (k1, k2, g1, g2, false) } else { (k2, k1, g2, g1, true) };
    // counterclockwise angle from the first to the second generator, reduced mod π
    // (replacing a generator by its negative does not change its hyperbola)
    let cross = first[0] * second[1] - first[1] * second[0];
    let theta = cross.atan2(dot(first, second)).rem_euclid(PI);
    if theta == 0.0 {
        return Err(Error::DependentWaveVectors);
    }
    Ok(GapCondition { gamma1, gamma2, theta, pass: gamma1 - gamma2 < theta, swapped })
}

/// Bifurcation data for the symmetric lattice `k1 = k(cos ω, sin ω)`, `k2 = k(cos ω, -sin ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricLatticeConfig {
    pub k: f64,
    pub omega: f64,
    pub phi_c: f64,
    pub c_len: f64,
    pub nu: f64,
    pub c_star: Vec2,
}

/// Solves `tan 2φ = -α/κ(k)` on both branches and keeps those with `ν > 0`.
pub fn symmetric_c_star(k: f64, omega: f64, params: &PhysicalParams) -> Result<Vec<SymmetricLatticeConfig>> {
    if params.alpha == 0.0 {
        return Err(Error::AlphaZero("symmetric_c_star needs alpha != 0"));
    }
    if !(omega > 0.0 && omega < PI / 2.0) || !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("need k > 0 and omega in (0, pi/2), got {k}, {omega}")));
    }
    let kap = kappa(k, params)?;
    let a = params.alpha;
    let phi0 = 0.5 * (-a).atan2(kap);
    let s2 = omega.sin().powi(2);
    let mut out = Vec::new();
    for phi in [phi0, phi0 + PI / 2.0] {
        let (sp, cp) = phi.sin_cos();
        let nu = (1.0 - 2.0 * s2) * (kap * cp * cp - a * cp * sp) + kap * s2;
        if nu > 0.0 {
            let c_len = (params.restoring(k) / nu).sqrt();
            out.push(SymmetricLatticeConfig { k, omega, phi_c: phi, c_len, nu, c_star: [c_len * cp, c_len * sp] });
        }
    }
    if out.is_empty() {
        return Err(Error::NoPositiveNu);
    }
    Ok(out)
}

/// A common point of the two dispersion curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicIntersection {
    pub c: Vec2,
    /// Largest normalised residual `|ρ(c, k_j)| / (g + σ|k_j|²)`.
    pub residual: f64,
}

fn normalized_system(c: Vec2, k1: Vec2, k2: Vec2, p: &PhysicalParams) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let (a1, a2) = (p.restoring(norm(k1)), p.restoring(norm(k2)));
    let f = [rho(c, k1, p)? / a1, rho(c, k2, p)? / a2];
    let g1 = grad_rho(c, k1, p)?;
    let g2 = grad_rho(c, k2, p)?;
    Ok((f, [[g1[0] / a1, g1[1] / a1], [g2[0] / a2, g2[1] / a2]]))
}

fn newton_intersection(seed: Vec2, k1: Vec2, k2: Vec2, p: &PhysicalParams) -> Option<ConicIntersection> {
    let mut c = seed;
    let fnorm = |f: [f64; 2]| f[0].abs().max(f[1].abs());
    let (mut f, mut jac) = normalized_system(c, k1, k2, p).ok()?;
    for _ in 0..50 {
        if fnorm(f) < 1e-12 {
            return Some(ConicIntersection { c, residual: fnorm(f) });
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [(jac[1][1] * f[0] - jac[0][1] * f[1]) / det, (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det];
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=8 {
            let trial = [c[0] - step * dx[0], c[1] - step * dx[1]];
            if let Ok((ft, jt)) = normalized_system(trial, k1, k2, p) {
                if fnorm(ft) < fnorm(f) {
                    c = trial;
                    f = ft;
                    jac = jt;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (fnorm(f) < 1e-12).then_some(ConicIntersection { c, residual: fnorm(f) })
}

/// Seeds spread along both branches of both solution curves.
pub fn default_seeds(k1: Vec2, k2: Vec2, params: &PhysicalParams) -> Result<Vec<Vec2>> {
    let mut seeds = Vec::new();
    for k in [k1, k2] {
        if params.alpha != 0.0 {
            seeds.extend(dispersion_curve(k, params, 16)?.points);
        } else {
            let lines = irrotational_lines(k, params)?;
            let scale = lines.offsets[0];
            for which in 0..2 {
                for i in 0..16 {
                    let s = scale * 10f64.powf(-1.0 + 2.0 * i as f64 / 15.0);
                    let s = if i % 2 == 0 { s } else { -s };
                    seeds.push(lines.point(which, s));
                }
            }
        }
    }
    Ok(seeds)
}

/// All isolated intersections of the two solution curves reached from the seeds
/// (default seeds when `seeds` is empty), sorted lexicographically.
pub fn general_c_star(k1: Vec2, k2: Vec2, params: &PhysicalParams, seeds: &[Vec2]) -> Result<Vec<ConicIntersection>> {
    let cross = k1[0] * k2[1] - k1[1] * k2[0];
    if !(cross.abs() > 1e-12 * norm(k1) * norm(k2)) {
        return Err(Error::DependentWaveVectors);
    }
    // surface pole errors before seeding
    kappa(norm(k1), params)?;
    kappa(norm(k2), params)?;
    let owned;
    let seeds = if seeds.is_empty() {
        owned = default_seeds(k1, k2, params)?;
        &owned[..]
    } else {
        seeds
    };
    let mut found: Vec<ConicIntersection> = Vec::new();
    for &s in seeds {
        if let Some(p) = newton_intersection(s, k1, k2, params) {
            let scale = norm(p.c).max(1e-300);
            let dup = found.iter().any(|q| norm([q.c[0] - p.c[0], q.c[1] - p.c[1]]) < 1e-8 * scale);
            if !dup {
                found.push(p);
            }
        }
    }
    found.sort_by(|a, b| a.c[0].total_cmp(&b.c[0]).then(a.c[1].total_cmp(&b.c[1])));
    Ok(found)
}

/// `det[∇_c ρ(c, k1); ∇_c ρ(c, k2)]`.
pub fn transversality(c: Vec2, k1: Vec2, k2: Vec2, params: &PhysicalParams) -> Result<f64> {
    let g1 = grad_rho(c, k1, params)?;
    let g2 = grad_rho(c, k2, params)?;
    Ok(g1[0] * g2[1] - g1[1] * g2[0])
}

/// Certification record for a candidate `c*`.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationPoint {
    pub c_star: Vec2,
    pub k1: Vec2,
    pub k2: Vec2,
    pub roots: Vec<Root>,
    pub resonant_modes: Vec<LatticePoint>,
    /// Normalised `ρ(c*, k_j) / (g + σ|k_j|²)`.
    pub rho_residuals: [f64; 2],
    pub transversality_det: f64,
    /// Determinant divided by the product of the gradient norms.
    pub transversality_sine: f64,
    /// `(γ1, γ2, θ)` when the configuration lies in the analysed regime.
    pub gap: Option<GapCondition>,
    pub nonresonance_pass: bool,
    pub multiplicity_pass: bool,
    /// `None` outside the regime `α, κ(|k1|), κ(|k2|) > 0`.
    pub gap_condition_pass: Option<bool>,
    pub transversality_pass: bool,
    /// Smallest `|ρ(c*, k)| / (g + σ|k|²)` over non-kernel modes.
    pub nonkernel_margin: f64,
}

impl BifurcationPoint {
    /// All hypotheses hold (the gap condition only when it applies).
    pub fn certified(&self) -> bool {
        self.nonresonance_pass
            && self.multiplicity_pass
            && self.transversality_pass
            && self.gap_condition_pass.unwrap_or(true)
            && self.rho_residuals.iter().all(|r| r.abs() <= 1e-10)
    }
}

pub fn certify_bifurcation(lat: &Lattice, params: &PhysicalParams, c_star: Vec2) -> BifurcationPoint {
    let (k1, k2) = (lat.k1(), lat.k2());
    let nonres = check_nonresonance(lat, params, POLE_TOLERANCE);
    let scan = enumerate_dispersion_roots(c_star, lat, params, ROOT_TOLERANCE);
    let mut found: Vec<(i32, i32)> = scan.roots.iter().map(|r| (r.n1, r.n2)).collect();
    found.sort();
    let mut expected = vec![(1, 0), (-1, 0), (0, 1), (0, -1)];
    expected.sort();
    let multiplicity_pass = found == expected && scan.resonant.is_empty();

    let rr = |k: Vec2| rho(c_star, k, params).map(|r| r / params.restoring(norm(k))).unwrap_or(f64::NAN);
    let rho_residuals = [rr(k1), rr(k2)];

    let (det, sine) = match (grad_rho(c_star, k1, params), grad_rho(c_star, k2, params)) {
        (Ok(g1), Ok(g2)) => {
            let det = g1[0] * g2[1] - g1[1] * g2[0];
            (det, det / (norm(g1) * norm(g2)).max(1e-300))
        }
        _ => (f64::NAN, f64::NAN),
    };
    let gap = asymptote_gap_condition(k1, k2, params).ok();
    BifurcationPoint {
        c_star,
        k1,
        k2,
        roots: scan.roots,
        resonant_modes: scan.resonant,
        rho_residuals,
        transversality_det: det,
        transversality_sine: sine,
        gap,
        nonresonance_pass: nonres.pass,
        multiplicity_pass,
        gap_condition_pass: gap.map(|g| g.pass),
        transversality_pass: sine.abs() > 1e-10,
        nonkernel_margin: scan.nonroot_margin,
    }
}

/// Certified bifurcation points on the generators of `lat`, best separated from other
/// lattice modes first.
pub fn find_bifurcations(lat: &Lattice, params: &PhysicalParams) -> Result<Vec<BifurcationPoint>> {
    let candidates = general_c_star(lat.k1(), lat.k2(), params, &[])?;
    let mut out: Vec<BifurcationPoint> =
        candidates.into_iter().map(|c| certify_bifurcation(lat, params, c.c)).filter(|b| b.certified()).collect();
    out.sort_by(|a, b| b.nonkernel_margin.total_cmp(&a.nonkernel_margin));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (PhysicalParams, Lattice) {
        (PhysicalParams::new(1.0, 1.0, 1.0, 0.5).unwrap(), Lattice::symmetric(2.0, PI / 3.0).unwrap())
    }

    #[test]
    fn symmetric_branches_are_roots() {
        let (p, lat) = reference();
        let cfgs = symmetric_c_star(2.0, PI / 3.0, &p).unwrap();
        assert_eq!(cfgs.len(), 2);
        for cfg in cfgs {
            for k in [lat.k1(), lat.k2()] {
                assert!(rho(cfg.c_star, k, &p).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn swapping_generators_flips_determinant() {
        let (p, lat) = reference();
        let c = symmetric_c_star(2.0, PI / 3.0, &p).unwrap()[0].c_star;
        let a = transversality(c, lat.k1(), lat.k2(), &p).unwrap();
        let b = transversality(c, lat.k2(), lat.k1(), &p).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn dependent_generators_rejected() {
        let (p, lat) = reference();
        let k1 = lat.k1();
        assert_eq!(general_c_star(k1, [-k1[0], -k1[1]], &p, &[]), Err(Error::DependentWaveVectors));
    }
}
