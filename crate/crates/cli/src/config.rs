//! Run configuration (TOML).

use std::path::{Path, PathBuf};

use beltrami::{Lattice, PhysicalParams, Vec2};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub g: f64,
    pub sigma: f64,
    pub d: f64,
    pub alpha: f64,
    pub lattice: LatticeSpec,
    /// Fourier truncation `N` (modes `|n1|, |n2| <= N`).
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    /// Chebyshev nodes `M` in the vertical.
    #[serde(default = "default_z_nodes")]
    pub z_nodes: usize,
    /// Subcommand tolerance; see [`RunConfig::tol_or`].
    pub tol: Option<f64>,
    #[serde(default)]
    pub bifurcation: BifurcationSpec,
    #[serde(default)]
    pub dispersion: DispersionSpec,
    #[serde(default)]
    pub check: CheckSpec,
    #[serde(default)]
    pub solve: SolveSpec,
    #[serde(default)]
    pub lift: LiftSpec,
    #[serde(default)]
    pub extract: ExtractSpec,

    /// Directory of the config file; relative input paths resolve against it.
    #[serde(skip)]
    pub base: PathBuf,
}

fn default_truncation() -> usize {
    8
}

fn default_z_nodes() -> usize {
    32
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricSpec {
    pub k: f64,
    pub omega: f64,
}

/// Exactly one of: dual generators `k1, k2`; periods `lambda1, lambda2`; or a symmetric
/// lattice `|k1| = |k2| = k` at half-angle `omega`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub k1: Option<Vec2>,
    pub k2: Option<Vec2>,
    pub lambda1: Option<Vec2>,
    pub lambda2: Option<Vec2>,
    pub symmetric: Option<SymmetricSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcationSpec {
    /// Index into the certified points, best separated first.
    #[serde(default)]
    pub point: usize,
    /// Explicit base point; skips the search and only certifies.
    pub c_star: Option<Vec2>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSpec {
    /// Wave vectors whose curves are sampled; defaults to the lattice generators.
    #[serde(default)]
    pub wave_vectors: Vec<Vec2>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// `|k|` values for the κ table.
    #[serde(default = "default_k_norms")]
    pub k_norms: Vec<f64>,
    /// Shear parameters at which ρ is tabulated against every wave vector.
    #[serde(default)]
    pub c: Vec<Vec2>,
}

impl Default for DispersionSpec {
    fn default() -> Self {
        DispersionSpec { wave_vectors: Vec::new(), samples: default_samples(), k_norms: default_k_norms(), c: Vec::new() }
    }
}

fn default_samples() -> usize {
    50
}

fn default_k_norms() -> Vec<f64> {
    (1..=16).map(|i| 0.25 * i as f64).collect()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    /// Surface coefficient file (`n1,n2,value`).
    pub eta: Option<PathBuf>,
    /// Shear parameters; defaults to the bifurcation point.
    pub c: Option<Vec2>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    /// Kernel amplitudes `(t1, t2)`.
    #[serde(default)]
    pub t: Vec<Vec2>,
    /// Solve the 2½-dimensional branch `t = (0, t2)` holding `c1` at its bifurcation value.
    #[serde(default)]
    pub two_half: bool,
    /// Physical samples per lattice direction in the field dumps (0 disables them).
    #[serde(default = "default_field_points")]
    pub field_points: usize,
    /// Vertical levels in the field dumps.
    #[serde(default = "default_field_levels")]
    pub field_levels: usize,
    /// Extra harmonics per direction for the refined residual check (0 disables it).
    #[serde(default = "default_refine")]
    pub refine: usize,
}

fn default_refine() -> usize {
    4
}

impl Default for SolveSpec {
    fn default() -> Self {
        SolveSpec {
            t: Vec::new(),
            two_half: false,
            field_points: default_field_points(),
            field_levels: default_field_levels(),
            refine: default_refine(),
        }
    }
}

fn default_field_points() -> usize {
    8
}

fn default_field_levels() -> usize {
    5
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSpec {
    /// Stream function profiles (`n,z_index,re,im`).
    pub psi: Option<PathBuf>,
    /// Surface harmonics (`n,value`).
    pub eta: Option<PathBuf>,
    #[serde(default)]
    pub beta: f64,
    pub axis: Option<[i32; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractSpec {
    /// Dotted coefficient dump (`n1,n2,z_index,component,re,im`).
    pub field: Option<PathBuf>,
    /// Surface coefficient file (`n1,n2,value`).
    pub eta: Option<PathBuf>,
    pub axis: Option<[i32; 2]>,
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub truncation: Option<usize>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path, ov: Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(n) = ov.truncation {
            cfg.truncation = n;
        }
        if ov.tol.is_some() {
            cfg.tol = ov.tol;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        self.lattice()?;
        if self.truncation == 0 {
            return Err(CliError::Config("truncation must be at least 1".into()));
        }
        if self.z_nodes < 4 {
            return Err(CliError::Config("z_nodes must be at least 4".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("tol must be positive, got {t}")));
            }
        }
        if self.dispersion.samples < 2 {
            return Err(CliError::Config("dispersion.samples must be at least 2".into()));
        }
        if self.solve.two_half && self.solve.t.iter().any(|t| t[0] != 0.0) {
            return Err(CliError::Config("solve.two_half requires t1 = 0 in every entry".into()));
        }
        if self.solve.field_points > 0 && self.solve.field_levels < 2 {
            return Err(CliError::Config("solve.field_levels must be at least 2".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams, CliError> {
        PhysicalParams::new(self.g, self.sigma, self.d, self.alpha).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn lattice(&self) -> Result<Lattice, CliError> {
        let l = &self.lattice;
        let lat = match (l.k1, l.k2, l.lambda1, l.lambda2, &l.symmetric) {
            (Some(k1), Some(k2), None, None, None) => Lattice::from_dual(k1, k2),
            (None, None, Some(a), Some(b), None) => Lattice::from_generators(a, b),
            (None, None, None, None, Some(s)) => Lattice::symmetric(s.k, s.omega),
            _ => {
                return Err(CliError::Config(
                    "lattice: give exactly one of {k1, k2}, {lambda1, lambda2} or symmetric".into(),
                ))
            }
        };
        lat.map_err(|e| CliError::Config(format!("lattice: {e}")))
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    /// Resolves an input path relative to the config file.
    pub fn input(&self, p: &Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        let p = p.as_ref().ok_or_else(|| CliError::Config(format!("missing key {key}")))?;
        Ok(if p.is_absolute() { p.clone() } else { self.base.join(p) })
    }
}
