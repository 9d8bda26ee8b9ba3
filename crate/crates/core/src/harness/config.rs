//! Experiment configuration: TOML on disk, validated as a whole at load.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{ikeda_inui_data, R0Policy};
use crate::error::{Error, Result};
use crate::exponents::RegimeParams;
use crate::free::{effective_max_frequency, BoxSizing};
use crate::integrator::StepConfig;
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{io, Field, GridSpec, C64};

pub const CONFIG_SCHEMA: u32 = 1;

fn default_schema() -> u32 {
    CONFIG_SCHEMA
}
fn default_tail_tol() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    pub regime: RegimeParams,
    pub grid: GridSpec,
    pub nonlinearity: NonlinearitySpec,
    pub initial_data: InitialData,
    pub step: StepConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Optional `L >= factor · k_max · t_max` check of the box against the data.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_sizing: Option<BoxSizing>,
    /// Directory that relative `from_file` paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `e^{-a|x|²}`.
    Gaussian { a: f64 },
    /// `exp(1 - 1/(1 - |x|²/w²))` on `|x| < w`.
    Bump { width: f64 },
    /// `i·1_{|x|>1}|x|^{-k}`.
    IkedaInui { k: f64 },
    /// Sum of `count` Gaussian packets with seeded centres, widths, momenta.
    Packets { count: usize },
    /// A binary field written by `fields/` or `spectral::io`.
    FromFile { path: PathBuf },
}

/// A real or `[re, im]` scale factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Default for Amplitude {
    fn default() -> Self {
        Amplitude::Real(1.0)
    }
}

impl Amplitude {
    pub fn value(self) -> C64 {
        match self {
            Amplitude::Real(a) => C64::new(a, 0.0),
            Amplitude::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    #[serde(flatten)]
    pub profile: Profile,
    #[serde(default)]
    pub amplitude: Amplitude,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(rename = "R", default)]
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_cap: Option<f64>,
    #[serde(default)]
    pub r0: R0Policy,
    /// Capped rows enter slope fits only if the free-flow surrogate puts less
    /// than this fraction of `I(R)` beyond the cap.
    #[serde(default = "default_tail_tol")]
    pub cap_tail_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            radii: Vec::new(),
            horizon_cap: None,
            r0: R0Policy::default(),
            cap_tail_tol: default_tail_tol(),
        }
    }
}

pub(crate) fn config_error(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Re-home a module error under `prefix`; parameter names become the last
/// path segment.
pub(crate) fn scoped(prefix: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => {
            config_error(format!("{prefix}.{name}"), reason)
        }
        e @ (Error::Config { .. } | Error::Aborted { .. }) => e,
        other => config_error(prefix, other.to_string()),
    }
}

impl ExperimentConfig {
    /// Parse and validate; every failure names the offending key path.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| config_error("<toml>", e.to_string().trim_end()))?;
        let mut unknown = Vec::new();
        let mut track = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
        let ignored = serde_ignored::Deserializer::new(de, &mut track);
        let config: Self = serde_path_to_error::deserialize(ignored).map_err(|e| {
            let mut path = e.path().to_string();
            let message = e.into_inner().message().trim_end().to_string();
            if let Some(field) = message
                .strip_prefix("missing field `")
                .and_then(|m| m.split('`').next())
            {
                path = if path == "." {
                    field.to_string()
                } else {
                    format!("{path}.{field}")
                };
            }
            config_error(path, message)
        })?;
        if let Some(path) = unknown.first() {
            return Err(config_error(path.clone(), "unknown key"));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config { path: key, reason } => {
                config_error(key, format!("{reason} (in {})", path.display()))
            }
            e => e,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        config.validate()?;
        Ok(config)
    }

    /// Canonical TOML text; parsing it back gives an equal config.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn power(&self) -> f64 {
        self.regime.p
    }

    /// `min(R², cap)`.
    pub fn horizon(&self, r: f64) -> f64 {
        match self.sweep.horizon_cap {
            Some(c) => (r * r).min(c),
            None => r * r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(config_error(
                "schema",
                format!(
                    "unsupported schema {} (expected {CONFIG_SCHEMA})",
                    self.schema
                ),
            ));
        }
        if self.seed > i64::MAX as u64 {
            return Err(config_error("seed", "must fit in a signed 64-bit integer"));
        }
        self.regime.validate().map_err(|e| scoped("regime", e))?;
        self.grid.validate().map_err(|e| scoped("grid", e))?;
        if self.grid.dim as u32 != self.regime.d {
            return Err(config_error(
                "grid.dim",
                format!(
                    "grid is {}-dimensional but regime.d = {}",
                    self.grid.dim, self.regime.d
                ),
            ));
        }
        self.nonlinearity
            .validate()
            .map_err(|e| scoped("nonlinearity", e))?;
        if self.nonlinearity.p != self.regime.p {
            return Err(config_error(
                "nonlinearity.p",
                format!(
                    "power {} differs from regime.p = {}",
                    self.nonlinearity.p, self.regime.p
                ),
            ));
        }
        self.validate_data()?;
        self.step.validate().map_err(|e| scoped("step", e))?;
        self.validate_sweep()?;
        if let Some(b) = &self.box_sizing {
            if !(b.t_max > 0.0 && b.factor > 0.0) {
                return Err(config_error("box", "t_max and factor must be positive"));
            }
            if b.t_max < self.step.t_end {
                return Err(config_error(
                    "box.t_max",
                    format!(
                        "box sized for t <= {} but step.t_end = {}",
                        b.t_max, self.step.t_end
                    ),
                ));
            }
            let kmax = effective_max_frequency(&self.initial_field()?, self.step.boundary_mass_tol);
            let need = b.half_length(kmax);
            if self.grid.half_length < need {
                return Err(config_error(
                    "grid.half_length",
                    format!(
                        "{} is below factor·k_max·t_max = {need:.4} (k_max = {kmax:.4})",
                        self.grid.half_length
                    ),
                ));
            }
        }
        Ok(())
    }

    fn validate_data(&self) -> Result<()> {
        let a = self.initial_data.amplitude.value();
        if !(a.re.is_finite() && a.im.is_finite()) {
            return Err(config_error("initial_data.amplitude", "must be finite"));
        }
        match &self.initial_data.profile {
            Profile::Gaussian { a } if !(*a > 0.0 && a.is_finite()) => Err(config_error(
                "initial_data.a",
                format!("need finite a > 0, got {a}"),
            )),
            Profile::Bump { width } if !(*width > 0.0 && *width < self.grid.half_length) => {
                Err(config_error(
                    "initial_data.width",
                    format!(
                        "need 0 < width < grid.half_length = {}, got {width}",
                        self.grid.half_length
                    ),
                ))
            }
            Profile::IkedaInui { k } if !(*k > 0.0 && k.is_finite()) => Err(config_error(
                "initial_data.k",
                format!("need finite k > 0, got {k}"),
            )),
            Profile::Packets { count: 0 } => Err(config_error(
                "initial_data.count",
                "need at least one packet",
            )),
            Profile::FromFile { path } => {
                let full = self.resolve(path);
                // Relative paths are only checkable once the config location is known.
                if path.is_relative() && self.base_dir.is_none() {
                    return Ok(());
                }
                let f = read_field(&full)
                    .map_err(|e| config_error("initial_data.path", e.to_string()))?;
                if !f.grid().same_as(&self.grid) {
                    return Err(config_error(
                        "initial_data.path",
                        format!(
                            "{} is on {:?}, not the configured grid",
                            full.display(),
                            f.grid()
                        ),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn validate_sweep(&self) -> Result<()> {
        let s = &self.sweep;
        if !(s.cap_tail_tol > 0.0 && s.cap_tail_tol < 1.0) {
            return Err(config_error(
                "sweep.cap_tail_tol",
                format!("need 0 < tol < 1, got {}", s.cap_tail_tol),
            ));
        }
        if let Some(c) = s.horizon_cap {
            if !(c > 0.0 && c.is_finite()) {
                return Err(config_error(
                    "sweep.horizon_cap",
                    format!("need finite cap > 0, got {c}"),
                ));
            }
        }
        match s.r0 {
            R0Policy::Fraction { fraction } if !(fraction > 0.0 && fraction < 1.0) => {
                return Err(config_error(
                    "sweep.r0.fraction",
                    format!("need 0 < fraction < 1, got {fraction}"),
                ));
            }
            R0Policy::Fixed { r0 } if !(r0 > 0.0 && r0.is_finite()) => {
                return Err(config_error(
                    "sweep.r0.r0",
                    format!("need finite r0 > 0, got {r0}"),
                ));
            }
            _ => {}
        }
        let l = self.grid.half_length;
        let t_end = self.step.t_end;
        for (i, &r) in s.radii.iter().enumerate() {
            let path = format!("sweep.R[{i}]");
            if !(r > 2.0 && r.is_finite()) {
                return Err(config_error(path, format!("need finite R > 2, got {r}")));
            }
            if i > 0 && r <= s.radii[i - 1] {
                return Err(config_error(path, "radii must be strictly increasing"));
            }
            if r > l {
                return Err(config_error(
                    path,
                    format!("cutoff support |x| < {r} does not fit in the box L = {l}"),
                ));
            }
            let horizon = self.horizon(r);
            if horizon > t_end * (1.0 + 1e-12) {
                return Err(config_error(
                    path,
                    format!("horizon min(R², cap) = {horizon} exceeds step.t_end = {t_end}; set sweep.horizon_cap"),
                ));
            }
            if let R0Policy::Fixed { r0 } = s.r0 {
                self.check_slab(i, r0)?;
            }
        }
        Ok(())
    }

    /// The slab `R/(4r0) <= t <= R/(2r0)`, `|x| <= r0 t` must be simulated.
    pub(crate) fn check_slab(&self, i: usize, r0: f64) -> Result<()> {
        let r = self.sweep.radii[i];
        let t1 = r / (2.0 * r0);
        if t1 > self.step.t_end * (1.0 + 1e-12) {
            return Err(config_error(
                format!("sweep.R[{i}]"),
                format!(
                    "slab ends at t = {t1:.4} (r0 = {r0:.4}) after step.t_end = {}",
                    self.step.t_end
                ),
            ));
        }
        Ok(())
    }

    /// The configured initial data `u_0` on the grid.
    pub fn initial_field(&self) -> Result<Field> {
        let g = self.grid;
        let amp = self.initial_data.amplitude.value();
        let f = match &self.initial_data.profile {
            Profile::Gaussian { a } => {
                let a = *a;
                Field::from_fn(g, move |[x, y]| C64::new((-a * (x * x + y * y)).exp(), 0.0))
            }
            Profile::Bump { width } => {
                let w2 = width * width;
                Field::from_fn(g, move |[x, y]| {
                    let s = (x * x + y * y) / w2;
                    C64::new(
                        if s < 1.0 {
                            (1.0 - 1.0 / (1.0 - s)).exp()
                        } else {
                            0.0
                        },
                        0.0,
                    )
                })
            }
            Profile::IkedaInui { k } => {
                ikeda_inui_data(g, *k).map_err(|e| scoped("initial_data", e))?
            }
            Profile::Packets { count } => packets(g, *count, self.seed),
            Profile::FromFile { path } => {
                let f = read_field(&self.resolve(path))
                    .map_err(|e| config_error("initial_data.path", e.to_string()))?;
                if !f.grid().same_as(&g) {
                    return Err(config_error(
                        "initial_data.path",
                        "field is not on the configured grid",
                    ));
                }
                f
            }
        };
        Ok(f.scale(amp))
    }
}

fn read_field(path: &Path) -> Result<Field> {
    io::read_binary(std::io::BufReader::new(fs::File::open(path)?))
}

fn packets(grid: GridSpec, count: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.1 * grid.half_length;
    let list: Vec<([f64; 2], f64, [f64; 2], f64)> = (0..count)
        .map(|_| {
            let c = [
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
            ];
            let w = rng.random_range(0.5..1.5);
            let k = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (c, w, k, phase)
        })
        .collect();
    let dim = grid.dim;
    Field::from_fn(grid, move |[x, y]| {
        list.iter()
            .map(|&(c, w, k, phase)| {
                let (dx, dy) = (x - c[0], if dim == 2 { y - c[1] } else { 0.0 });
                let ky = if dim == 2 { k[1] * y } else { 0.0 };
                C64::from_polar(
                    (-(dx * dx + dy * dy) / (2.0 * w * w)).exp(),
                    k[0] * x + ky + phase,
                )
            })
            .sum()
    })
}
