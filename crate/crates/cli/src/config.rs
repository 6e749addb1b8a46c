use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use oscnh::cell::CellConfig;
use oscnh::domain::DomainSpec;
use oscnh::fbar::FbarConfig;
use oscnh::multiscale::{BarrierConfig, BarrierKind, ScaleBook, ScaleGates};
use oscnh::{Direction, Expr, NeumannData, OperatorSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    Directions,
    Slope,
    Sweep,
    Multiscale,
    Fbar,
    Domain,
}

impl Module {
    pub fn name(self) -> &'static str {
        match self {
            Module::Directions => "directions",
            Module::Slope => "slope",
            Module::Sweep => "sweep",
            Module::Multiscale => "multiscale",
            Module::Fbar => "fbar",
            Module::Domain => "domain",
        }
    }
}

/// Numerical parameters shared by the pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Strictly decreasing list of ε values.
    pub eps_list: Vec<f64>,
    /// Normal angles (radians) for slope tables and sweeps.
    pub angle_list: Vec<f64>,
    pub cell: CellConfig,
    pub fbar: FbarConfig,
    /// Number of eigenvalue angles in tabulated F̄.
    pub fbar_count: usize,
    /// Random rotations in the eigenvalue invariance check.
    pub rotations: usize,
    pub margin: f64,
}

/// Sixteen angles offset from every rational direction of small height.
pub fn default_angles() -> Vec<f64> {
    let offset = 0.5 / std::f64::consts::SQRT_2;
    (0..16).map(|k| std::f64::consts::TAU * (k as f64 + offset) / 16.0).collect()
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            eps_list: vec![0.125, 0.0625, 0.03125],
            angle_list: default_angles(),
            cell: CellConfig::default(),
            fbar: FbarConfig::default(),
            fbar_count: 32,
            rotations: 8,
            margin: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionsParams {
    /// One query per entry.
    pub nu: Vec<[f64; 2]>,
    #[serde(default = "default_q")]
    pub denominator_bound: u64,
    #[serde(default = "default_dir_eps")]
    pub eps: f64,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_q() -> u64 {
    1_000_000
}
fn default_dir_eps() -> f64 {
    0.01
}
fn default_window() -> f64 {
    100.0
}
fn default_samples() -> usize {
    4096
}

/// Directions are given by polar angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiscaleParams {
    pub nu: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub delta: f64,
    pub eps: f64,
    #[serde(default)]
    pub gates: ScaleGates,
    #[serde(default)]
    pub barrier: BarrierConfig,
    /// Far-field slope; the slab mean is used when absent.
    #[serde(default)]
    pub mu_bar_guess: Option<f64>,
    #[serde(default = "default_kind")]
    pub kind: BarrierKind,
}

fn default_kind() -> BarrierKind {
    BarrierKind::Super
}

impl MultiscaleParams {
    pub fn scale_book(&self) -> oscnh::Result<ScaleBook> {
        ScaleBook::new(
            self.delta,
            &Direction::from_angle(self.nu),
            &Direction::from_angle(self.nu1),
            &Direction::from_angle(self.nu2),
            self.eps,
            self.gates.clone(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub module: Module,
    #[serde(default = "OperatorSpec::laplacian")]
    pub operator: OperatorSpec,
    /// Neumann data `g(y)` as an expression tree.
    #[serde(default = "default_g")]
    pub g: Expr,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub directions: Option<DirectionsParams>,
    #[serde(default)]
    pub multiscale: Option<MultiscaleParams>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    /// Output directory, relative to the output root.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `1` runs sequentially.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

pub fn default_g() -> Expr {
    NeumannData::standard_trig().g.source().clone()
}

/// A validated configuration with the warnings found while loading it.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn minimal(module: Module) -> Self {
        RunConfig {
            module,
            operator: OperatorSpec::laplacian(),
            g: default_g(),
            numerics: Numerics::default(),
            directions: None,
            multiscale: None,
            domain: None,
            output_dir: None,
            threads: None,
            seed: 0,
        }
    }

    pub fn neumann_data(&self) -> anyhow::Result<NeumannData> {
        NeumannData::new(self.g.clone()).context("g")
    }

    /// Checks every field and returns the warnings of a valid config.
    pub fn validate(&self) -> anyhow::Result<Vec<String>> {
        let op = &self.operator;
        OperatorSpec::new(op.kind.clone(), op.lambda, op.big_lambda).context("operator")?;
        self.g.validate().context("g")?;
        self.neumann_data()?;
        let n = &self.numerics;
        if n.eps_list.is_empty() || n.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            bail!("numerics.eps_list: must be nonempty and strictly decreasing");
        }
        for (k, &eps) in n.eps_list.iter().enumerate() {
            n.cell.spacing(eps).with_context(|| format!("numerics.eps_list[{k}]"))?;
        }
        let tau = std::f64::consts::TAU;
        let mut angles: Vec<f64> = n.angle_list.iter().map(|a| a.rem_euclid(tau)).collect();
        angles.sort_by(f64::total_cmp);
        if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) || angles.windows(2).any(|w| w[1] - w[0] < 1e-12) {
            bail!("numerics.angle_list: must be nonempty, finite and distinct modulo 2π");
        }
        if !(n.cell.lateral_extent > 0.0) {
            bail!("numerics.cell.lateral_extent: must be positive");
        }
        n.cell.solve.validate().context("numerics.cell.solve")?;
        n.fbar.validate().context("numerics.fbar")?;
        if n.fbar_count < 8 {
            bail!("numerics.fbar_count: need at least 8 angles");
        }
        if !(n.margin > 0.0) {
            bail!("numerics.margin: must be positive");
        }
        if self.threads == Some(0) {
            bail!("threads: must be at least 1");
        }
        let mut warnings = Vec::new();
        match self.module {
            Module::Directions => {
                let d = self.directions.as_ref().context("directions: section required for the directions module")?;
                if d.nu.is_empty() {
                    bail!("directions.nu: need at least one query");
                }
                for (k, v) in d.nu.iter().enumerate() {
                    Direction::new(*v).with_context(|| format!("directions.nu[{k}]"))?;
                }
                if d.denominator_bound == 0 || !(d.eps > 0.0 && d.eps < 1.0) || !(d.window > 0.0) || d.samples < 2 {
                    bail!("directions: need Q ≥ 1, ε in (0, 1), positive window and at least two samples");
                }
            }
            Module::Sweep | Module::Slope if n.eps_list.len() < 3 => {
                bail!("numerics.eps_list: the extrapolation needs at least three values");
            }
            Module::Domain => {
                let d = self.domain.as_ref().context("domain: section required for the domain module")?;
                d.validate().context("domain")?;
                if n.eps_list.len() < 3 {
                    bail!("numerics.eps_list: the convergence study needs at least three values");
                }
            }
            Module::Multiscale => {
                self.multiscale.as_ref().context("multiscale: section required for the multiscale module")?;
            }
            _ => {}
        }
        if let Some(ms) = &self.multiscale {
            let book = ms.scale_book().context("multiscale")?;
            warnings.extend(book.warnings);
        }
        Ok(warnings)
    }
}

/// Parses a JSON config, reporting the path of the offending node on error,
/// then validates it.
pub fn parse_config(text: &str) -> anyhow::Result<LoadedConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow::anyhow!("at {path} (line {}, column {}): {inner}", inner.line(), inner.column())
    })?;
    let warnings = config.validate()?;
    Ok(LoadedConfig { config, warnings })
}

pub fn load_config(path: &Path) -> anyhow::Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("loading {}", path.display()))
}
