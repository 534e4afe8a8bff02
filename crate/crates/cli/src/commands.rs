//! Subcommand implementations. Each returns the artifacts of a successful run.

use std::fmt::Write as _;

use beltrami::bifurcation::{certify_bifurcation, find_bifurcations, general_c_star, symmetric_c_star, BifurcationPoint};
use beltrami::dispersion::{check_nonresonance, dispersion_curve, irrotational_lines, kappa, rho};
use beltrami::flattened::FlatSolver;
use beltrami::modes::{build_kernel_mode, kernel_dimension};
use beltrami::reduction::WaveSolver;
use beltrami::spectral::ChebGrid;
use beltrami::two_half::{extract_2d, lift_2d_to_3d, residuals_2d, StreamFunction2D};
use beltrami::{Lattice, PhysicalParams, SpectralModel, SurfaceProfile};
use num_complex::Complex64;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{self, coefficient_table, kv, num, physical_table, surface_table, Artifacts, Table};

/// Root-scan and resonance tolerance.
const ROOT_TOL: f64 = 1e-8;
/// Acceptance threshold for the flattened-system residuals in `check`.
const CHECK_TOL: f64 = 1e-9;
/// Acceptance threshold for the 2D residuals in `lift` / `extract`.
const PLANAR_TOL: f64 = 1e-8;

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

fn header(a: &mut Artifacts, title: &str, cfg: &RunConfig, p: &PhysicalParams, lat: &Lattice) {
    a.line(title);
    let mut s = String::new();
    kv(&mut s, "g, sigma, d, alpha", format!("{}, {}, {}, {}", num(p.g), num(p.sigma), num(p.d), num(p.alpha)));
    kv(&mut s, "k1", format!("{:?}", lat.k1()));
    kv(&mut s, "k2", format!("{:?}", lat.k2()));
    kv(&mut s, "truncation N, z-nodes M", format!("{}, {}", cfg.truncation, cfg.z_nodes));
    a.report.push_str(&s);
}

fn setup(cfg: &RunConfig) -> Result<(PhysicalParams, Lattice), CliError> {
    Ok((cfg.params()?, cfg.lattice()?))
}

fn model(cfg: &RunConfig, p: PhysicalParams, lat: Lattice) -> Result<SpectralModel, CliError> {
    SpectralModel::new(p, lat, cfg.truncation, cfg.z_nodes).map_err(|e| CliError::Config(e.to_string()))
}

fn describe_failures(b: &BifurcationPoint) -> String {
    let mut failed = Vec::new();
    if !b.nonresonance_pass {
        failed.push("non-resonance");
    }
    if !b.multiplicity_pass {
        failed.push("multiplicity");
    }
    if b.gap_condition_pass == Some(false) {
        failed.push("asymptote gap");
    }
    if !b.transversality_pass {
        failed.push("transversality");
    }
    failed.join(", ")
}

/// The configured bifurcation point: an explicit `c_star` that must certify, or the
/// selected entry of the certified points of the lattice.
fn bifurcation_point(cfg: &RunConfig, p: &PhysicalParams, lat: &Lattice) -> Result<BifurcationPoint, CliError> {
    if let Some(c) = cfg.bifurcation.c_star {
        let b = certify_bifurcation(lat, p, c);
        if !b.certified() {
            return Err(CliError::Precondition(format!("c_star {c:?} fails: {}", describe_failures(&b))));
        }
        return Ok(b);
    }
    let mut all = find_bifurcations(lat, p)?;
    if all.is_empty() {
        return Err(CliError::Precondition("no certified bifurcation point on the lattice generators".into()));
    }
    let i = cfg.bifurcation.point;
    if i >= all.len() {
        return Err(CliError::Config(format!("bifurcation.point = {i} but only {} certified points exist", all.len())));
    }
    Ok(all.swap_remove(i))
}

fn report_point(a: &mut Artifacts, b: &BifurcationPoint) {
    let mut s = String::new();
    kv(&mut s, "c*", format!("[{}, {}]", num(b.c_star[0]), num(b.c_star[1])));
    kv(&mut s, "rho residuals", format!("{:e}, {:e}", b.rho_residuals[0], b.rho_residuals[1]));
    kv(&mut s, "transversality det", num(b.transversality_det));
    kv(&mut s, "transversality sine", num(b.transversality_sine));
    kv(&mut s, "non-resonance", flag(b.nonresonance_pass));
    kv(&mut s, "multiplicity", flag(b.multiplicity_pass));
    kv(&mut s, "asymptote gap", b.gap_condition_pass.map(flag).unwrap_or("n/a"));
    kv(&mut s, "transversality", flag(b.transversality_pass));
    kv(&mut s, "non-kernel margin", format!("{:e}", b.nonkernel_margin));
    let roots: Vec<String> = b.roots.iter().map(|r| format!("({}, {})", r.n1, r.n2)).collect();
    kv(&mut s, "lattice roots", roots.join(" "));
    if !b.resonant_modes.is_empty() {
        let res: Vec<String> = b.resonant_modes.iter().map(|r| format!("({}, {})", r.n1, r.n2)).collect();
        kv(&mut s, "resonant modes", res.join(" "));
    }
    kv(&mut s, "certified", flag(b.certified()));
    a.report.push_str(&s);
}

pub fn dispersion(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (p, lat) = setup(cfg)?;
    let tol = cfg.tol_or(ROOT_TOL);
    let spec = &cfg.dispersion;
    let mut a = Artifacts::default();
    header(&mut a, "dispersion", cfg, &p, &lat);

    let mut kt = Table::new(&["k_norm", "kappa"]);
    for &k in &spec.k_norms {
        kt.push(vec![num(k), num(kappa(k, &p).unwrap_or(f64::NAN))]);
    }
    a.field("kappa.csv", kt);

    let waves = if spec.wave_vectors.is_empty() { vec![lat.k1(), lat.k2()] } else { spec.wave_vectors.clone() };
    let mut summary = Table::new(&["curve", "k1", "k2", "kappa", "gamma", "theta", "points"]);
    for (i, &k) in waves.iter().enumerate() {
        let kn = k[0].hypot(k[1]);
        let kap = kappa(kn, &p)?;
        let mut ct = Table::new(&["branch", "c1", "c2"]);
        let (gamma, theta, count) = if p.alpha == 0.0 {
            let lines = irrotational_lines(k, &p)?;
            let half = 2.0 * lines.offsets[0].abs().max(1.0);
            for which in 0..2 {
                for j in 0..spec.samples {
                    let s = -half + 2.0 * half * j as f64 / (spec.samples - 1) as f64;
                    let c = lines.point(which, s);
                    ct.push(vec![which.to_string(), num(c[0]), num(c[1])]);
                }
            }
            (f64::NAN, f64::NAN, 2 * spec.samples)
        } else {
            let curve = dispersion_curve(k, &p, spec.samples)?;
            let per = curve.points.len() / 2;
            for (j, c) in curve.points.iter().enumerate() {
                ct.push(vec![(j / per.max(1)).min(1).to_string(), num(c[0]), num(c[1])]);
            }
            (curve.gamma, curve.theta, curve.points.len())
        };
        summary.push(vec![i.to_string(), num(k[0]), num(k[1]), num(kap), num(gamma), num(theta), count.to_string()]);
        a.field(format!("curve_{i}.csv"), ct);
    }
    a.summary = Some(summary);

    if !spec.c.is_empty() {
        let mut rt = Table::new(&["c1", "c2", "k1", "k2", "rho"]);
        for c in &spec.c {
            for k in &waves {
                rt.push(vec![num(c[0]), num(c[1]), num(k[0]), num(k[1]), num(rho(*c, *k, &p)?)]);
            }
        }
        a.field("rho.csv", rt);
    }

    let res = check_nonresonance(&lat, &p, tol);
    a.line("non-resonance");
    let mut s = String::new();
    kv(&mut s, "pass", flag(res.pass));
    kv(&mut s, "margin", format!("{:e}", res.margin));
    let off: Vec<String> = res.offending.iter().map(|r| format!("({}, {})", r.n1, r.n2)).collect();
    kv(&mut s, "offending modes", if off.is_empty() { "none".to_string() } else { off.join(" ") });
    a.report.push_str(&s);
    Ok(a)
}

pub fn bifurcate(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (p, lat) = setup(cfg)?;
    let mut a = Artifacts::default();
    header(&mut a, "bifurcate", cfg, &p, &lat);
    let candidates: Vec<[f64; 2]> = match cfg.bifurcation.c_star {
        Some(c) => vec![c],
        None => general_c_star(lat.k1(), lat.k2(), &p, &[])?.into_iter().map(|c| c.c).collect(),
    };
    if let Some(s) = &cfg.lattice.symmetric {
        if let Ok(cfgs) = symmetric_c_star(s.k, s.omega, &p) {
            a.line("symmetric-lattice branches");
            for c in cfgs {
                let mut t = String::new();
                kv(&mut t, "phi_c, |c*|", format!("{}, {}", num(c.phi_c), num(c.c_len)));
                a.report.push_str(&t);
            }
        }
    }
    let mut summary = Table::new(&[
        "c1",
        "c2",
        "det",
        "rho_residual1",
        "rho_residual2",
        "nonresonance",
        "multiplicity",
        "gap",
        "transversality",
        "certified",
    ]);
    let mut certified = 0;
    for (i, c) in candidates.iter().enumerate() {
        let b = certify_bifurcation(&lat, &p, *c);
        a.line(format!("candidate {i}"));
        report_point(&mut a, &b);
        certified += b.certified() as usize;
        summary.push(vec![
            num(b.c_star[0]),
            num(b.c_star[1]),
            num(b.transversality_det),
            num(b.rho_residuals[0]),
            num(b.rho_residuals[1]),
            flag(b.nonresonance_pass).into(),
            flag(b.multiplicity_pass).into(),
            b.gap_condition_pass.map(flag).unwrap_or("n/a").into(),
            flag(b.transversality_pass).into(),
            flag(b.certified()).into(),
        ]);
    }
    a.line(format!("{certified} of {} candidates certified", candidates.len()));
    a.summary = Some(summary);
    Ok(a)
}

pub fn kernel(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (p, lat) = setup(cfg)?;
    let tol = cfg.tol_or(ROOT_TOL);
    let mut a = Artifacts::default();
    header(&mut a, "kernel", cfg, &p, &lat);
    let b = bifurcation_point(cfg, &p, &lat)?;
    report_point(&mut a, &b);
    let grid = ChebGrid::new(cfg.z_nodes, p.d).map_err(|e| CliError::Config(e.to_string()))?;
    let (dim, mut modes) = kernel_dimension(b.c_star, &lat, &p, &grid)?;
    modes.sort_by_key(|(id, _)| *id);
    let mut s = String::new();
    kv(&mut s, "kernel dimension", dim);
    a.report.push_str(&s);

    let mut summary = Table::new(&[
        "n1",
        "n2",
        "case",
        "beltrami",
        "divergence",
        "surface_kinematic",
        "bottom",
        "integral",
        "surface_dynamic",
    ]);
    for ((n1, n2), _) in &modes {
        let k = lat.k(*n1, *n2);
        let mode = build_kernel_mode(k, b.c_star, 0.5, &p, &grid, tol)?;
        let r = mode.residuals(b.c_star, &p, &grid);
        summary.push(vec![
            n1.to_string(),
            n2.to_string(),
            format!("{:?}", mode.case),
            num(r.beltrami),
            num(r.divergence),
            num(r.surface_kinematic),
            num(r.bottom),
            num(r.integral),
            num(r.surface_dynamic),
        ]);
        let mut t = Table::new(&["z", "u1_re", "u1_im", "u2_re", "u2_im", "u3_re", "u3_im"]);
        for (j, z) in mode.z.iter().enumerate() {
            let mut row = vec![num(*z)];
            for c in 0..3 {
                row.push(num(mode.profiles[c][j].re));
                row.push(num(mode.profiles[c][j].im));
            }
            t.push(row);
        }
        a.field(format!("mode_{n1}_{n2}.csv"), t);
        let mut s = String::new();
        kv(&mut s, &format!("mode ({n1}, {n2}) residual"), format!("{:e}", r.max()));
        a.report.push_str(&s);
    }
    a.summary = Some(summary);
    Ok(a)
}

fn key_value_table(rows: &[(&str, f64)]) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in rows {
        t.push(vec![k.to_string(), num(*v)]);
    }
    t
}

pub fn check(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (p, lat) = setup(cfg)?;
    let tol = cfg.tol_or(CHECK_TOL);
    let path = cfg.input(&cfg.check.eta, "check.eta")?;
    let eta = output::read_surface(&path, cfg.truncation)?;
    let mut a = Artifacts::default();
    header(&mut a, "check", cfg, &p, &lat);
    let c = match cfg.check.c {
        Some(c) => c,
        None => bifurcation_point(cfg, &p, &lat)?.c_star,
    };
    let solver = FlatSolver::new(model(cfg, p, lat)?)?;
    let sol = solver.solve_v_of_eta(&eta, c)?;
    let r = solver.residual_report(&eta, c, &sol)?;
    let mut s = String::new();
    kv(&mut s, "c", format!("[{}, {}]", num(c[0]), num(c[1])));
    kv(&mut s, "picard iterations", sol.iterations);
    kv(&mut s, "contraction ratio", format!("{:.3e}", sol.contraction));
    for (k, v) in [
        ("beltrami", r.beltrami),
        ("divergence", r.divergence),
        ("surface kinematic", r.surface_kinematic),
        ("bottom", r.bottom),
        ("integral", r.integral),
    ] {
        kv(&mut s, k, format!("{v:e}"));
    }
    kv(&mut s, "bernoulli (not imposed by v)", format!("{:e}", r.bernoulli));
    kv(&mut s, &format!("pass (< {tol:e})"), flag(r.max_velocity() < tol));
    a.report.push_str(&s);
    a.summary = Some(key_value_table(&[
        ("beltrami", r.beltrami),
        ("divergence", r.divergence),
        ("surface_kinematic", r.surface_kinematic),
        ("bottom", r.bottom),
        ("integral", r.integral),
        ("bernoulli", r.bernoulli),
        ("iterations", sol.iterations as f64),
    ]));
    a.field("v_coeffs.csv", coefficient_table(&sol.v));
    Ok(a)
}

pub fn solve(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (p, lat) = setup(cfg)?;
    if cfg.solve.t.is_empty() {
        return Err(CliError::Config("solve.t is empty".into()));
    }
    let mut a = Artifacts::default();
    header(&mut a, "solve", cfg, &p, &lat);
    let b = bifurcation_point(cfg, &p, &lat)?;
    report_point(&mut a, &b);
    let m = model(cfg, p, lat)?;
    let mut ws = WaveSolver::new(m, &b)?;
    if let Some(t) = cfg.tol {
        ws.options.outer_tol = t;
    }
    let mut summary = Table::new(&[
        "t1",
        "t2",
        "c1",
        "c2",
        "delta1",
        "delta2",
        "residual_max",
        "residual_max_refined",
        "q",
        "outer_iterations",
        "orthogonal_iterations",
    ]);
    for (i, t) in cfg.solve.t.iter().enumerate() {
        let w = if cfg.solve.two_half { ws.solve_2halfd_branch(t[1], 0, None) } else { ws.solve_wave(*t) }
            .map_err(|e| annotate(e, i, *t))?;
        let rmax = w.residuals.max();
        let refined = if cfg.solve.refine > 0 { Some(ws.refined_residuals(&w, cfg.solve.refine)?.max()) } else { None };
        summary.push(vec![
            num(w.t[0]),
            num(w.t[1]),
            num(w.c[0]),
            num(w.c[1]),
            num(w.delta[0]),
            num(w.delta[1]),
            num(rmax),
            refined.map(num).unwrap_or_default(),
            num(w.q),
            w.outer_iterations.to_string(),
            w.orthogonal_iterations.to_string(),
        ]);
        let mut s = String::new();
        let _ = writeln!(s, "wave {i}: t = [{}, {}]", num(t[0]), num(t[1]));
        kv(&mut s, "c", format!("[{}, {}]", num(w.c[0]), num(w.c[1])));
        kv(&mut s, "delta", format!("[{:e}, {:e}]", w.delta[0], w.delta[1]));
        kv(&mut s, "residual max", format!("{rmax:e}"));
        if let Some(r) = refined {
            kv(&mut s, &format!("residual max at N + {}", cfg.solve.refine), format!("{r:e}"));
        }
        kv(&mut s, "bifurcation residual", format!("{:e}", w.bifurcation_residual));
        a.report.push_str(&s);
        a.field(format!("wave_{i}_eta.csv"), surface_table(&w.eta));
        a.field(format!("wave_{i}_coeffs.csv"), coefficient_table(&w.u_dot));
        if cfg.solve.field_points > 0 {
            let t = physical_table(ws.model(), &w.u_dot, &w.eta, cfg.solve.field_points, cfg.solve.field_levels)?;
            a.field(format!("wave_{i}_field.csv"), t);
        }
    }
    a.summary = Some(summary);
    Ok(a)
}

fn annotate(e: beltrami::Error, i: usize, t: [f64; 2]) -> CliError {
    match CliError::from(e) {
        CliError::NonConvergence(m) => CliError::NonConvergence(format!("wave {i} (t = {t:?}): {m}")),
        CliError::Precondition(m) => CliError::Precondition(format!("wave {i} (t = {t:?}): {m}")),
        other => other,
    }
}

fn axis(v: Option<[i32; 2]>) -> (i32, i32) {
    let [a, b] = v.unwrap_or([0, 1]);
    (a, b)
}

fn planar_rows(sf: &StreamFunction2D, alpha: f64, r: &beltrami::two_half::Residuals2D) -> Table {
    key_value_table(&[
        ("beta", sf.beta),
        ("m1", sf.m1),
        ("m2", sf.m2),
        ("q0", sf.q0),
        ("q_3d", sf.q_3d(alpha)),
        ("pde", r.pde),
        ("bottom", r.bottom),
        ("surface", r.surface),
        ("bernoulli", r.bernoulli),
    ])
}

fn planar_report(a: &mut Artifacts, sf: &StreamFunction2D, alpha: f64, r: &beltrami::two_half::Residuals2D, tol: f64) {
    let mut s = String::new();
    kv(&mut s, "axis", format!("({}, {})", sf.axis.0, sf.axis.1));
    kv(&mut s, "beta, m1, m2", format!("{}, {}, {}", num(sf.beta), num(sf.m1), num(sf.m2)));
    kv(&mut s, "Q0, Q (3D)", format!("{}, {}", num(sf.q0), num(sf.q_3d(alpha))));
    for (k, v) in [("pde", r.pde), ("bottom", r.bottom), ("surface", r.surface), ("bernoulli", r.bernoulli)] {
        kv(&mut s, k, format!("{v:e}"));
    }
    kv(&mut s, &format!("pass (< {tol:e})"), flag(r.max() < tol));
    a.report.push_str(&s);
}

pub fn lift(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (p, lat) = setup(cfg)?;
    let tol = cfg.tol_or(PLANAR_TOL);
    let psi_path = cfg.input(&cfg.lift.psi, "lift.psi")?;
    let eta_path = cfg.input(&cfg.lift.eta, "lift.eta")?;
    let psi_rows = output::read_psi(&psi_path)?;
    let eta_rows = output::read_line_surface(&eta_path)?;
    let m = model(cfg, p, lat)?;
    let ax = axis(cfg.lift.axis);

    let n_max = psi_rows.iter().map(|r| r.0.unsigned_abs()).chain(eta_rows.iter().map(|r| r.0.unsigned_abs())).max().unwrap_or(0) as usize;
    let mut psi = vec![vec![Complex64::new(0.0, 0.0); m.nz()]; 2 * n_max + 1];
    for (n, j, v) in psi_rows {
        if j >= m.nz() {
            return Err(CliError::Precondition(format!("{}: z_index {j} outside 0..{}", psi_path.display(), m.nz())));
        }
        psi[(n + n_max as i32) as usize][j] = v;
    }
    let mut eta = vec![0.0; 2 * n_max + 1];
    for (n, v) in eta_rows {
        eta[(n + n_max as i32) as usize] = v;
    }
    let sf = StreamFunction2D::new(&m, ax, psi, eta, cfg.lift.beta)?;
    let field = lift_2d_to_3d(&m, &sf)?;
    let surface = surface_of(&m, &sf)?;
    let r = residuals_2d(&m, &sf)?;

    let mut a = Artifacts::default();
    header(&mut a, "lift", cfg, &m.params, &m.lattice);
    planar_report(&mut a, &sf, m.params.alpha, &r, tol);
    a.summary = Some(planar_rows(&sf, m.params.alpha, &r));
    a.field("coeffs.csv", coefficient_table(&field));
    a.field("eta.csv", surface_table(&surface));
    Ok(a)
}

/// Lattice surface carried by the multiples of the stream function's axis.
fn surface_of(m: &SpectralModel, sf: &StreamFunction2D) -> Result<SurfaceProfile, CliError> {
    let mut s = m.zero_surface();
    let n_max = sf.n_max() as i32;
    for n in 0..=n_max {
        let v = sf.eta[(n + n_max) as usize];
        if v != 0.0 {
            s.set(n * sf.axis.0, n * sf.axis.1, v)?;
        }
    }
    Ok(s)
}

pub fn extract(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (p, lat) = setup(cfg)?;
    let tol = cfg.tol_or(PLANAR_TOL);
    let field_path = cfg.input(&cfg.extract.field, "extract.field")?;
    let eta_path = cfg.input(&cfg.extract.eta, "extract.eta")?;
    let m = model(cfg, p, lat)?;
    let field = output::read_field(&field_path, &m)?;
    let eta = output::read_surface(&eta_path, cfg.truncation)?;
    let sf = extract_2d(&m, &field, &eta, axis(cfg.extract.axis))?;
    let r = residuals_2d(&m, &sf)?;

    let mut a = Artifacts::default();
    header(&mut a, "extract", cfg, &m.params, &m.lattice);
    planar_report(&mut a, &sf, m.params.alpha, &r, tol);
    a.summary = Some(planar_rows(&sf, m.params.alpha, &r));
    let n_max = sf.n_max() as i32;
    let mut pt = Table::new(&["n", "z_index", "re", "im"]);
    let mut et = Table::new(&["n", "value"]);
    for n in -n_max..=n_max {
        let i = (n + n_max) as usize;
        for (j, v) in sf.psi[i].iter().enumerate() {
            if *v != Complex64::new(0.0, 0.0) {
                pt.push(vec![n.to_string(), j.to_string(), num(v.re), num(v.im)]);
            }
        }
        if sf.eta[i] != 0.0 {
            et.push(vec![n.to_string(), num(sf.eta[i])]);
        }
    }
    a.field("psi.csv", pt);
    a.field("eta_line.csv", et);
    Ok(a)
}
