//! Flat `key = value` configuration with command-line overrides.
//!
//! ```text
//! # comment
//! alpha_deg = 100
//! rc = 0.001
//! models = LIN2, NLB2, NLS2
//! refinements = 5
//! newton.rel_tol = 1e-9
//! ```
//!
//! Later assignments win, so a file loaded first and `--set key=value` flags
//! applied afterwards override it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use vnotch_core::constitutive::{MaterialModel, MaterialRegistry};
use vnotch_core::geometry::DEFAULT_TRACTION;
use vnotch_core::mesh::MeshOptions;
use vnotch_core::par::Execution;
use vnotch_core::solver::{InitialGuess, NewtonConfig};

use crate::error::{config_err, CliError, Result};

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "VNOTCH_OUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "vnotch-out";

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    origin: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, Entry>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines; `source` names the input in error messages.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut map = Self::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = format!("{source}:{}", n + 1);
            let (k, v) = split_assignment(line).ok_or_else(|| config_err(&origin, format!("expected `key = value`, got `{line}`")))?;
            map.set(k, v, origin);
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(path.display().to_string(), e.to_string()))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str, origin: impl Into<String>) {
        self.entries.insert(
            key.trim().to_string(),
            Entry {
                value: value.trim().to_string(),
                origin: origin.into(),
            },
        );
    }

    /// Applies a `key=value` override from the command line.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = split_assignment(assignment)
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{assignment}`")))?;
        self.set(k, v, "--set");
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn take_raw(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|err| config_err(e.origin, format!("{key} = `{}`: {err}", e.value))),
        }
    }

    fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => parse_list(&e.value)
                .map(Some)
                .map_err(|err| config_err(e.origin, format!("{key}: {err}"))),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(Some(true)),
                "false" | "no" | "off" | "0" => Ok(Some(false)),
                _ => Err(config_err(e.origin, format!("{key} = `{}` is not a boolean", e.value))),
            },
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, e)) => Err(config_err(e.origin, format!("unknown key `{k}`"))),
        }
    }
}

fn split_assignment(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    (!k.is_empty()).then_some((k, v.trim()))
}

/// Comma- or whitespace-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// [`MeshOptions::standard`] level-0 sizes.
    Full,
    /// Twice the standard element sizes.
    Half,
}

impl FromStr for Resolution {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Resolution::Full),
            "half" => Ok(Resolution::Half),
            _ => Err(format!("unknown resolution `{s}` (expected full or half)")),
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::Full => "full",
            Resolution::Half => "half",
        })
    }
}

/// A material model with the label used in file names and table columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub model: MaterialModel,
}

impl ModelSpec {
    pub fn registry(name: &str) -> Result<Self> {
        let model = MaterialRegistry::get(name).ok_or_else(|| {
            let known: Vec<_> = MaterialRegistry::names().collect();
            CliError::Usage(format!("unknown model `{name}` (registry: {}, or `custom`)", known.join(", ")))
        })?;
        Ok(ModelSpec { name: name.to_string(), model })
    }
}

fn take_custom_model(map: &mut ConfigMap) -> Result<ModelSpec> {
    let kind: String = map
        .take("model.kind")?
        .ok_or_else(|| CliError::Usage("model `custom` needs model.kind".into()))?;
    let mut need = |key: &str| -> Result<f64> {
        map.take(key)?
            .ok_or_else(|| CliError::Usage(format!("custom {kind} model needs {key}")))
    };
    let model = match kind.as_str() {
        "hooke" => MaterialModel::hooke(need("model.mu")?)?,
        "power_law" => {
            let mu = need("model.mu")?;
            let tau0 = need("model.tau0")?;
            MaterialModel::power_law(mu, tau0, need("model.qprime")?)?
        }
        "strain_limiting" => {
            let mu = need("model.mu")?;
            let tau_mu = need("model.tau_mu")?;
            MaterialModel::strain_limiting(mu, tau_mu, need("model.a")?)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown model.kind `{other}` (expected hooke, power_law or strain_limiting)"
            )))
        }
    };
    let name = map.take::<String>("model.name")?.unwrap_or_else(|| "custom".into());
    Ok(ModelSpec { name, model })
}

/// Settings shared by single runs and sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub models: Vec<ModelSpec>,
    pub refinements: usize,
    pub theta: f64,
    pub resolution: Resolution,
    pub target_h: Option<f64>,
    pub tip_h: Option<f64>,
    pub grading: Option<f64>,
    pub traction: f64,
    pub newton: NewtonConfig,
    pub parallel: bool,
    pub profile_samples: usize,
    pub vtk: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            models: Vec::new(),
            refinements: 5,
            theta: 0.5,
            resolution: Resolution::Full,
            target_h: None,
            tip_h: None,
            grading: None,
            traction: DEFAULT_TRACTION,
            newton: NewtonConfig::default(),
            parallel: cfg!(feature = "parallel"),
            profile_samples: 200,
            vtk: false,
        }
    }
}

impl Settings {
    fn take(map: &mut ConfigMap) -> Result<Self> {
        let mut s = Settings::default();
        let models = match map.take_list::<String>("models")? {
            Some(m) => Some(m),
            None => map.take_list::<String>("model")?,
        };
        let names = models.unwrap_or_default();
        if names.is_empty() {
            return Err(CliError::Usage("no models given".into()));
        }
        for name in names {
            let spec = if name == "custom" { take_custom_model(map)? } else { ModelSpec::registry(&name)? };
            if s.models.iter().any(|m| m.name == spec.name) {
                return Err(CliError::Usage(format!("model `{}` listed twice", spec.name)));
            }
            s.models.push(spec);
        }
        if let Some(v) = map.take("refinements")? {
            s.refinements = v;
        }
        if let Some(v) = map.take("theta")? {
            s.theta = v;
        }
        if let Some(v) = map.take("resolution")? {
            s.resolution = v;
        }
        s.target_h = map.take("mesh.target_h")?;
        s.tip_h = map.take("mesh.tip_h")?;
        s.grading = map.take("mesh.grading")?;
        if let Some(v) = map.take("traction")? {
            s.traction = v;
        }
        let n = &mut s.newton;
        if let Some(v) = map.take("newton.abs_tol")? {
            n.abs_tol = v;
        }
        if let Some(v) = map.take("newton.rel_tol")? {
            n.rel_tol = v;
        }
        if let Some(v) = map.take("newton.max_iters")? {
            n.max_iters = v;
        }
        if let Some(v) = map.take("newton.backtrack")? {
            n.backtrack = v;
        }
        if let Some(v) = map.take("newton.min_step")? {
            n.min_step = v;
        }
        if let Some(v) = map.take("newton.linear_tol")? {
            n.linear_tol = v;
        }
        if let Some(v) = map.take::<String>("newton.initial_guess")? {
            n.initial_guess = match v.as_str() {
                "auto" => InitialGuess::Auto,
                "lift" => InitialGuess::Lift,
                "linear" => InitialGuess::Linear,
                _ => return Err(CliError::Usage(format!("newton.initial_guess `{v}` (expected auto, lift or linear)"))),
            };
        }
        if let Some(v) = map.take_bool("newton.fallback_to_linear")? {
            n.fallback_to_linear = v;
        }
        if let Some(v) = map.take_bool("parallel")? {
            s.parallel = v;
        }
        if let Some(v) = map.take("profile_samples")? {
            s.profile_samples = v;
        }
        if let Some(v) = map.take_bool("vtk")? {
            s.vtk = v;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.newton.validate()?;
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(CliError::Usage(format!("theta = {} must lie in (0, 1]", self.theta)));
        }
        if !(self.traction.is_finite() && self.traction != 0.0) {
            return Err(CliError::Usage("traction must be finite and nonzero".into()));
        }
        if self.profile_samples < 2 {
            return Err(CliError::Usage("profile_samples must be at least 2".into()));
        }
        Ok(())
    }

    /// Level-0 mesh sizing for a tip radius `rc`.
    pub fn mesh_options(&self, rc: f64) -> MeshOptions {
        let mut m = match self.resolution {
            Resolution::Full => MeshOptions::standard(rc),
            Resolution::Half => MeshOptions::half_resolution(rc),
        };
        if let Some(h) = self.target_h {
            m.target_h = h;
        }
        if let Some(h) = self.tip_h {
            m.tip_h = h;
        }
        if let Some(g) = self.grading {
            m.grading = g;
        }
        m
    }

    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Output root: `$VNOTCH_OUT` when set, else `vnotch-out` in the working
/// directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Directory name of one geometry, e.g. `a100_rc0.001`.
pub fn geometry_key(alpha_deg: f64, rc: f64) -> String {
    format!("a{alpha_deg}_rc{rc}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha_deg: f64,
    pub rc: f64,
    pub settings: Settings,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn from_map(mut map: ConfigMap) -> Result<Self> {
        let alpha_deg = map
            .take("alpha_deg")?
            .ok_or_else(|| CliError::Usage("alpha_deg is required".into()))?;
        let rc = map.take("rc")?.ok_or_else(|| CliError::Usage("rc is required".into()))?;
        let output = map.take::<PathBuf>("output")?;
        let settings = Settings::take(&mut map)?;
        map.finish()?;
        let output = output.unwrap_or_else(|| output_root().join(format!("run_{}", geometry_key(alpha_deg, rc))));
        Ok(RunConfig { alpha_deg, rc, settings, output })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub rcs: Vec<f64>,
    pub settings: Settings,
    /// Number of geometries solved concurrently.
    pub jobs: usize,
    pub output: PathBuf,
}

impl SweepConfig {
    pub fn from_map(mut map: ConfigMap) -> Result<Self> {
        let alphas: Vec<f64> = map.take_list("alphas")?.unwrap_or_default();
        let rcs: Vec<f64> = map.take_list("rcs")?.unwrap_or_default();
        if alphas.is_empty() || rcs.is_empty() {
            return Err(CliError::Usage("a sweep needs nonempty alphas and rcs".into()));
        }
        let jobs = map.take("jobs")?.unwrap_or(1usize);
        if jobs == 0 {
            return Err(CliError::Usage("jobs must be at least 1".into()));
        }
        let output = map.take::<PathBuf>("output")?.unwrap_or_else(|| output_root().join("sweep"));
        let settings = Settings::take(&mut map)?;
        map.finish()?;
        Ok(SweepConfig { alphas, rcs, settings, jobs, output })
    }

    /// Geometries in sweep order (alpha-major).
    pub fn geometries(&self) -> Vec<(f64, f64)> {
        self.alphas.iter().flat_map(|&a| self.rcs.iter().map(move |&r| (a, r))).collect()
    }
}
