//! TOML sweep configuration.
//!
//! ```toml
//! schema_version = 1
//!
//! [chain]
//! n_left = 1
//! n_middle = 2
//! n_right = 1
//! omega0 = 1.0      # on-site energy, sets the energy unit
//! eps0 = 0.0        # relative bias of the upper half of the chain
//! g = 0.01          # exchange coupling, same unit as omega0
//!
//! [baths]
//! gammas = [1.0]    # one per attached site, or one shared value
//! omega_c = 10.0    # Ohmic cutoff, same unit as omega0
//! beta_left = 1.0   # inverse temperatures, 1/omega0 units
//! beta_right = 1.0
//! # betas = [1.0, 1.5, 2.0]   per attached site; excludes beta_left/right axes
//!
//! [optimization]
//! objectives = ["pop", "pop_coh"]
//!
//! [[sweep]]
//! axis = "beta_left"
//! log = { start = 0.1, stop = 100.0, points = 8 }
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath::QuadratureConfig;
use crate::error::{Error, Result};
use crate::pipeline::PointSpec;
use crate::sdp::Objective;
use crate::spin_chain::ChainSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainTemplate {
    pub n_left: usize,
    #[serde(default)]
    pub n_middle: usize,
    #[serde(default)]
    pub n_right: usize,
    #[serde(default = "one")]
    pub omega0: f64,
    #[serde(default)]
    pub eps0: f64,
    pub g: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathTemplate {
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_cutoff")]
    pub omega_c: f64,
    #[serde(default)]
    pub beta_left: Option<f64>,
    #[serde(default)]
    pub beta_right: Option<f64>,
    #[serde(default)]
    pub betas: Option<Vec<f64>>,
    #[serde(default)]
    pub mu: f64,
}

fn default_gammas() -> Vec<f64> {
    vec![1.0]
}

fn default_cutoff() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationSettings {
    #[serde(default = "default_objectives")]
    pub objectives: Vec<Objective>,
    #[serde(default = "one")]
    pub t_left: f64,
    #[serde(default = "one")]
    pub t_right: f64,
    #[serde(default = "default_delta")]
    pub delta_tol: f64,
    #[serde(default)]
    pub free_trace: bool,
    /// System-bath coupling; cancels from both objectives, kept as metadata.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_trials")]
    pub conservation_trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_objectives() -> Vec<Objective> {
    vec![Objective::Pop, Objective::PopCoh]
}

fn default_delta() -> f64 {
    1e-6
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_trials() -> usize {
    8
}

impl Default for OptimizationSettings {
    fn default() -> Self {
        Self {
            objectives: default_objectives(),
            t_left: 1.0,
            t_right: 1.0,
            delta_tol: default_delta(),
            free_trace: false,
            epsilon: default_epsilon(),
            conservation_trials: default_trials(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    BetaLeft,
    BetaRight,
    G,
    Eps0,
    Geometry,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::BetaLeft => "beta_left",
            Axis::BetaRight => "beta_right",
            Axis::G => "g",
            Axis::Eps0 => "eps0",
            Axis::Geometry => "geometry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub axis: Axis,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub log: Option<GridSpec>,
    #[serde(default)]
    pub linear: Option<GridSpec>,
    /// `(N_L, N_M, N_R)` triples, geometry axis only.
    #[serde(default)]
    pub geometries: Option<Vec<[usize; 3]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AxisValue {
    Number(f64),
    Geometry([usize; 3]),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Number(x) => write!(f, "{x}"),
            AxisValue::Geometry([l, m, r]) => write!(f, "{l}-{m}-{r}"),
        }
    }
}

fn grid(spec: &GridSpec, log: bool) -> Result<Vec<f64>> {
    if spec.points == 0 {
        return Err(Error::Config("grid needs at least one point".into()));
    }
    if log && !(spec.start > 0.0 && spec.stop > 0.0) {
        return Err(Error::Config("log grid endpoints must be positive".into()));
    }
    if spec.points == 1 {
        return Ok(vec![spec.start]);
    }
    let n = (spec.points - 1) as f64;
    Ok((0..spec.points)
        .map(|k| {
            let s = k as f64 / n;
            if k == 0 {
                spec.start
            } else if k + 1 == spec.points {
                spec.stop
            } else if log {
                10f64.powf(spec.start.log10() + s * (spec.stop.log10() - spec.start.log10()))
            } else {
                spec.start + s * (spec.stop - spec.start)
            }
        })
        .collect())
}

impl SweepAxis {
    pub fn values(&self) -> Result<Vec<AxisValue>> {
        let label = self.axis.name();
        if self.axis == Axis::Geometry {
            if self.values.is_some() || self.log.is_some() || self.linear.is_some() {
                return Err(Error::Config("geometry axis takes `geometries` only".into()));
            }
            let g = self.geometries.as_ref().ok_or_else(|| Error::Config("geometry axis needs `geometries`".into()))?;
            if g.is_empty() {
                return Err(Error::Config("sweep axis geometry is empty".into()));
            }
            return Ok(g.iter().map(|&t| AxisValue::Geometry(t)).collect());
        }
        if self.geometries.is_some() {
            return Err(Error::Config(format!("axis {label} does not take `geometries`")));
        }
        let given = [self.values.is_some(), self.log.is_some(), self.linear.is_some()];
        if given.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::Config(format!("axis {label} needs exactly one of values, log, linear")));
        }
        let v = if let Some(v) = &self.values {
            v.clone()
        } else if let Some(g) = &self.log {
            grid(g, true)?
        } else {
            grid(self.linear.as_ref().expect("checked above"), false)?
        };
        if v.is_empty() {
            return Err(Error::Config(format!("sweep axis {label} is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("sweep axis {label} has non-finite values")));
        }
        Ok(v.into_iter().map(AxisValue::Number).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_csv")]
    pub csv: String,
    /// Worker threads; zero picks the rayon default.
    #[serde(default)]
    pub parallelism: usize,
    /// Write a dump for every `maybe_possible` row.
    #[serde(default = "yes")]
    pub dump_candidates: bool,
    /// Write a dump for every certified row, regardless of verdict.
    #[serde(default)]
    pub dump_all: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_csv() -> String {
    "results.csv".into()
}

fn yes() -> bool {
    true
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            csv: default_csv(),
            parallelism: 0,
            dump_candidates: true,
            dump_all: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub chain: ChainTemplate,
    pub baths: BathTemplate,
    #[serde(default)]
    pub optimization: OptimizationSettings,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default)]
    pub output: OutputSettings,
}

/// One grid point: its multi-index and the resolved physical inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: Vec<usize>,
    pub values: Vec<(Axis, AxisValue)>,
    pub spec: PointSpec,
    /// Absent when that side has no bath (or per-site betas differ within it).
    pub beta_left: Option<f64>,
    pub beta_right: Option<f64>,
}

impl GridPoint {
    pub fn label(&self) -> String {
        if self.values.is_empty() {
            return "(single point)".into();
        }
        self.values
            .iter()
            .map(|(a, v)| format!("{}={v}", a.name()))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn selector(&self) -> String {
        self.index.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    }
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let opt = &self.optimization;
        if opt.objectives.is_empty() {
            return Err(Error::Config("at least one objective is required".into()));
        }
        if !(opt.delta_tol > 0.0) {
            return Err(Error::Config("delta_tol must be positive".into()));
        }
        let mut seen = Vec::new();
        for ax in &self.sweep {
            if seen.contains(&ax.axis) {
                return Err(Error::Config(format!("axis {} is swept twice", ax.axis.name())));
            }
            seen.push(ax.axis);
            ax.values()?;
        }
        let b = &self.baths;
        if b.betas.is_some() {
            if b.beta_left.is_some() || b.beta_right.is_some() {
                return Err(Error::Config("give either betas or beta_left/beta_right".into()));
            }
            if seen.iter().any(|a| matches!(a, Axis::BetaLeft | Axis::BetaRight)) {
                return Err(Error::Config("per-site betas cannot be combined with a beta sweep".into()));
            }
        } else {
            for (axis, value, name) in [(Axis::BetaLeft, b.beta_left, "beta_left"), (Axis::BetaRight, b.beta_right, "beta_right")] {
                if value.is_none() && !seen.contains(&axis) {
                    return Err(Error::Config(format!("{name} must be given or swept")));
                }
            }
        }
        self.quadrature.validate()?;
        // every point must resolve
        self.grid()?;
        Ok(())
    }

    pub fn axis_values(&self) -> Result<Vec<Vec<AxisValue>>> {
        self.sweep.iter().map(SweepAxis::values).collect()
    }

    pub fn n_points(&self) -> Result<usize> {
        Ok(self.axis_values()?.iter().map(Vec::len).product())
    }

    /// Grid points in lexicographic order of their multi-index.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let axes = self.axis_values()?;
        let total: usize = axes.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut index = vec![0; axes.len()];
            let mut rem = flat;
            for (k, vals) in axes.iter().enumerate().rev() {
                index[k] = rem % vals.len();
                rem /= vals.len();
            }
            out.push(self.point(&index, &axes)?);
        }
        Ok(out)
    }

    fn point(&self, index: &[usize], axes: &[Vec<AxisValue>]) -> Result<GridPoint> {
        let mut c = self.chain.clone();
        let mut beta_left = self.baths.beta_left;
        let mut beta_right = self.baths.beta_right;
        let mut values = Vec::with_capacity(index.len());
        for ((ax, vals), &i) in self.sweep.iter().zip(axes).zip(index) {
            let v = vals[i];
            values.push((ax.axis, v));
            match (ax.axis, v) {
                (Axis::BetaLeft, AxisValue::Number(x)) => beta_left = Some(x),
                (Axis::BetaRight, AxisValue::Number(x)) => beta_right = Some(x),
                (Axis::G, AxisValue::Number(x)) => c.g = x,
                (Axis::Eps0, AxisValue::Number(x)) => c.eps0 = x,
                (Axis::Geometry, AxisValue::Geometry([l, m, r])) => {
                    c.n_left = l;
                    c.n_middle = m;
                    c.n_right = r;
                }
                _ => unreachable!("axis values are typed by axis"),
            }
        }
        let chain = ChainSpec::from_geometry(c.n_left, c.n_middle, c.n_right, c.omega0, c.eps0, c.g)?;
        let mut spec = match &self.baths.betas {
            Some(betas) => PointSpec::per_site(chain, betas, &self.baths.gammas, self.baths.omega_c, self.baths.mu)?,
            None => {
                let (bl, br) = (beta_left.expect("validated"), beta_right.expect("validated"));
                let betas: Vec<f64> = chain
                    .attached_sites()
                    .into_iter()
                    .map(|s| if s <= chain.n_left { bl } else { br })
                    .collect();
                PointSpec::per_site(chain, &betas, &self.baths.gammas, self.baths.omega_c, self.baths.mu)?
            }
        };
        spec.quadrature = self.quadrature;
        let side_beta = |left: bool| {
            let mut b = spec.baths.iter().filter(|b| (b.site <= chain.n_left) == left).map(|b| b.inv_temperature);
            let first = b.next()?;
            b.all(|x| x == first).then_some(first)
        };
        Ok(GridPoint {
            index: index.to_vec(),
            values,
            beta_left: side_beta(true),
            beta_right: side_beta(false),
            spec,
        })
    }

    /// Resolves `"i,j,..."` (one index per axis; empty for an unswept config).
    pub fn select(&self, selector: &str) -> Result<GridPoint> {
        let grid = self.grid()?;
        let listing = || {
            grid.iter()
                .map(|p| format!("  [{}] {}", p.selector(), p.label()))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let parsed: std::result::Result<Vec<usize>, _> = selector
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse::<usize>)
            .collect();
        match parsed {
            Ok(idx) => grid
                .iter()
                .find(|p| p.index == idx)
                .cloned()
                .ok_or_else(|| Error::Config(format!("no grid point {selector:?}; valid points:\n{}", listing()))),
            Err(_) => Err(Error::Config(format!(
                "malformed selector {selector:?} (expected comma-separated indices); valid points:\n{}",
                listing()
            ))),
        }
    }
}
