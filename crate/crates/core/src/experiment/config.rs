//! Flat `key = value` configuration with dotted section prefixes.
//!
//! ```text
//! # comments start with '#'
//! mesh.nx = 255
//! model.q = 5
//! init.family = sine-mode
//! init.amplitude = 1e-3
//! time.dt = 1e-4
//! analysis.verify_decay = true
//! ```
//!
//! Unknown keys, malformed values and invariant violations are all collected
//! and reported together.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::discretization::{Field, Mesh};
use crate::error::{KirchhoffError, Result};
use crate::evolution::{Scheme, TimeStepConfig};
use crate::functionals::ModelParams;
use crate::sampling::{bump, fourier_field, rng_for, stream, FOURIER_MODES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitFamily {
    SineMode,
    GaussianBump,
    FourierRandom,
    File,
}

impl InitFamily {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sine-mode" => Ok(Self::SineMode),
            "gaussian-bump" => Ok(Self::GaussianBump),
            "fourier-random" => Ok(Self::FourierRandom),
            "file" => Ok(Self::File),
            _ => Err(format!(
                "unknown family '{s}' (expected sine-mode, gaussian-bump, fourier-random, file)"
            )),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshSpec {
    pub dim: usize,
    pub extent: [f64; 2],
    pub nodes: [usize; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelSpec {
    pub a: f64,
    pub b: f64,
    pub q: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InitSpec {
    pub family: InitFamily,
    /// Multiplier `μ`; defaults to `1e-3`, or `1` for `file`.
    pub amplitude: Option<f64>,
    /// Sine mode number along each axis.
    pub mode: usize,
    /// Bump center as fractions of the extents.
    pub center: [f64; 2],
    /// Bump width as a fraction of the extents.
    pub width: f64,
    /// Seed of `fourier-random`; falls back to the global seed.
    pub seed: Option<u64>,
    pub path: Option<PathBuf>,
}

impl InitSpec {
    pub fn amplitude(&self) -> f64 {
        self.amplitude.unwrap_or(match self.family {
            InitFamily::File => 1.0,
            _ => 1e-3,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub blowup_cap: f64,
    /// Defaults to `dt * 1e-8`.
    pub dt_min: Option<f64>,
    pub adaptive: bool,
    pub snapshot_stride: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisSpec {
    pub verify_decay: bool,
    pub omega_limit: bool,
    pub well_depth: bool,
    pub bounds: bool,
    /// Level `s = bounds_s_factor * d_est`.
    pub bounds_s_factor: f64,
    /// Directions generated for the level-set sample.
    pub bounds_samples: usize,
    pub gn_samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub mesh: MeshSpec,
    pub model: ModelSpec,
    pub init: InitSpec,
    pub time: TimeSpec,
    pub analysis: AnalysisSpec,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSpec {
                dim: 1,
                extent: [1.0, 1.0],
                nodes: [255, 255],
            },
            model: ModelSpec {
                a: 1.0,
                b: 1.0,
                q: 5.0,
            },
            init: InitSpec {
                family: InitFamily::SineMode,
                amplitude: None,
                mode: 1,
                center: [0.5, 0.5],
                width: 0.1,
                seed: None,
                path: None,
            },
            time: TimeSpec {
                dt: 1e-4,
                t_end: 1.0,
                scheme: Scheme::SemiImplicit,
                blowup_cap: 1e6,
                dt_min: None,
                adaptive: true,
                snapshot_stride: 1,
            },
            analysis: AnalysisSpec {
                verify_decay: true,
                omega_limit: false,
                well_depth: false,
                bounds: false,
                bounds_s_factor: 2.0,
                bounds_samples: 8000,
                gn_samples: 1000,
            },
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Keys accepted by [`ExperimentConfig::set`].
pub const KEYS: &[&str] = &[
    "mesh.dim",
    "mesh.lx",
    "mesh.ly",
    "mesh.nx",
    "mesh.ny",
    "model.a",
    "model.b",
    "model.q",
    "init.family",
    "init.amplitude",
    "init.mode",
    "init.center_x",
    "init.center_y",
    "init.width",
    "init.seed",
    "init.path",
    "time.dt",
    "time.t_end",
    "time.scheme",
    "time.blowup_cap",
    "time.dt_min",
    "time.adaptive",
    "time.snapshot_stride",
    "analysis.verify_decay",
    "analysis.omega_limit",
    "analysis.well_depth",
    "analysis.bounds",
    "analysis.bounds_s_factor",
    "analysis.bounds_samples",
    "analysis.gn_samples",
    "output.dir",
    "seed",
];

/// Keys holding a single number; valid sweep axes.
pub fn is_numeric_key(key: &str) -> bool {
    !matches!(
        key,
        "init.family"
            | "init.path"
            | "time.scheme"
            | "time.adaptive"
            | "analysis.verify_decay"
            | "analysis.omega_limit"
            | "analysis.well_depth"
            | "analysis.bounds"
            | "output.dir"
    ) && KEYS.contains(&key)
}

fn num(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>()
        .map_err(|_| format!("expected a number, got '{v}'"))
}

fn count(v: &str) -> std::result::Result<usize, String> {
    // accept "255" and "255.0" (sweeps format values as floats)
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => Ok(x as usize),
        _ => Err(format!("expected a non-negative integer, got '{v}'")),
    }
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

impl ExperimentConfig {
    /// Assign one key. The value is checked for type only; invariants are
    /// checked by [`ExperimentConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "mesh.dim" => self.mesh.dim = count(v)?,
            "mesh.lx" => self.mesh.extent[0] = num(v)?,
            "mesh.ly" => self.mesh.extent[1] = num(v)?,
            "mesh.nx" => self.mesh.nodes[0] = count(v)?,
            "mesh.ny" => self.mesh.nodes[1] = count(v)?,
            "model.a" => self.model.a = num(v)?,
            "model.b" => self.model.b = num(v)?,
            "model.q" => self.model.q = num(v)?,
            "init.family" => self.init.family = InitFamily::parse(v)?,
            "init.amplitude" => self.init.amplitude = Some(num(v)?),
            "init.mode" => self.init.mode = count(v)?,
            "init.center_x" => self.init.center[0] = num(v)?,
            "init.center_y" => self.init.center[1] = num(v)?,
            "init.width" => self.init.width = num(v)?,
            "init.seed" => self.init.seed = Some(count(v)? as u64),
            "init.path" => self.init.path = Some(PathBuf::from(v)),
            "time.dt" => self.time.dt = num(v)?,
            "time.t_end" => self.time.t_end = num(v)?,
            "time.scheme" => {
                self.time.scheme = match v {
                    "semi-implicit" => Scheme::SemiImplicit,
                    "fully-implicit" => Scheme::FullyImplicit,
                    _ => {
                        return Err(format!(
                            "unknown scheme '{v}' (expected semi-implicit or fully-implicit)"
                        ))
                    }
                }
            }
            "time.blowup_cap" => self.time.blowup_cap = num(v)?,
            "time.dt_min" => self.time.dt_min = Some(num(v)?),
            "time.adaptive" => self.time.adaptive = flag(v)?,
            "time.snapshot_stride" => self.time.snapshot_stride = count(v)?,
            "analysis.verify_decay" => self.analysis.verify_decay = flag(v)?,
            "analysis.omega_limit" => self.analysis.omega_limit = flag(v)?,
            "analysis.well_depth" => self.analysis.well_depth = flag(v)?,
            "analysis.bounds" => self.analysis.bounds = flag(v)?,
            "analysis.bounds_s_factor" => self.analysis.bounds_s_factor = num(v)?,
            "analysis.bounds_samples" => self.analysis.bounds_samples = count(v)?,
            "analysis.gn_samples" => self.analysis.gn_samples = count(v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "seed" => self.seed = count(v)? as u64,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Every invariant violation, or an empty list.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let m = &self.mesh;
        if !(1..=2).contains(&m.dim) {
            errs.push(format!("mesh.dim: must be 1 or 2, got {}", m.dim));
        }
        for axis in 0..m.dim.min(2) {
            let name = ["x", "y"][axis];
            if !(m.extent[axis] > 0.0 && m.extent[axis].is_finite()) {
                errs.push(format!(
                    "mesh.l{name}: extent must be positive, got {}",
                    m.extent[axis]
                ));
            }
            if m.nodes[axis] < 3 {
                errs.push(format!(
                    "mesh.n{name}: need at least 3 interior nodes, got {}",
                    m.nodes[axis]
                ));
            }
        }
        let md = &self.model;
        if md.q == 3.0 {
            // checked against S when the run starts
            if !(md.a > 0.0) {
                errs.push(format!("model.a: must be positive, got {}", md.a));
            }
            if !(md.b > 0.0) {
                errs.push(format!("model.b: must be positive, got {}", md.b));
            }
        } else if let Err(e) = ModelParams::new(md.a, md.b, md.q, m.dim.clamp(1, 2)) {
            errs.push(format!(
                "model: {}",
                e.to_string().trim_start_matches("domain error: ")
            ));
        }
        let i = &self.init;
        if let Some(mu) = i.amplitude {
            if !mu.is_finite() {
                errs.push(format!("init.amplitude: must be finite, got {mu}"));
            }
        }
        if i.family == InitFamily::SineMode && i.mode == 0 {
            errs.push("init.mode: must be at least 1".into());
        }
        if i.family == InitFamily::GaussianBump && !(i.width > 0.0) {
            errs.push(format!("init.width: must be positive, got {}", i.width));
        }
        if i.family == InitFamily::File && i.path.is_none() {
            errs.push("init.path: required for family = file".into());
        }
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            errs.push(format!("time.dt: must be positive, got {}", t.dt));
        }
        if !(t.t_end > 0.0 && t.t_end.is_finite()) {
            errs.push(format!("time.t_end: must be positive, got {}", t.t_end));
        }
        if !(t.blowup_cap > 0.0) {
            errs.push(format!(
                "time.blowup_cap: must be positive, got {}",
                t.blowup_cap
            ));
        }
        if let Some(dm) = t.dt_min {
            if !(dm > 0.0 && dm <= t.dt) {
                errs.push(format!(
                    "time.dt_min: must satisfy 0 < dt_min <= dt, got {dm}"
                ));
            }
        }
        if t.snapshot_stride == 0 {
            errs.push("time.snapshot_stride: must be at least 1".into());
        }
        let a = &self.analysis;
        if !(a.bounds_s_factor > 1.0) {
            errs.push(format!(
                "analysis.bounds_s_factor: must exceed 1 so that s > d, got {}",
                a.bounds_s_factor
            ));
        }
        if a.bounds && a.bounds_samples == 0 {
            errs.push("analysis.bounds_samples: must be at least 1".into());
        }
        if a.bounds && a.gn_samples == 0 {
            errs.push("analysis.gn_samples: must be at least 1".into());
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.validation_errors();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(KirchhoffError::Config(errs))
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        let d = self.mesh.dim;
        Mesh::new(&self.mesh.extent[..d], &self.mesh.nodes[..d])
    }

    pub fn time_step_config(&self) -> TimeStepConfig {
        let t = &self.time;
        let mut c = TimeStepConfig::new(t.dt, t.t_end);
        c.scheme = t.scheme;
        c.blowup_cap = t.blowup_cap;
        if let Some(dm) = t.dt_min {
            c.dt_min = dm;
        }
        c.adaptive = t.adaptive;
        c.snapshot_stride = t.snapshot_stride;
        c
    }

    /// Initial datum `u₀` on `mesh`. Relative file paths resolve against `base`.
    pub fn initial_field(&self, mesh: &Mesh, base: Option<&Path>) -> Result<Field> {
        let i = &self.init;
        let mu = i.amplitude();
        let f = match i.family {
            InitFamily::SineMode => {
                let k = i.mode as f64;
                let (lx, ly) = (mesh.extent(0), mesh.extent(mesh.dim() - 1));
                let two_d = mesh.dim() == 2;
                Field::from_fn(*mesh, |x, y| {
                    let s = (k * std::f64::consts::PI * x / lx).sin();
                    if two_d {
                        s * (k * std::f64::consts::PI * y / ly).sin()
                    } else {
                        s
                    }
                })
            }
            InitFamily::GaussianBump => {
                let mut c = [0.0; 2];
                let mut w = [1.0; 2];
                for axis in 0..mesh.dim() {
                    c[axis] = i.center[axis] * mesh.extent(axis);
                    w[axis] = i.width * mesh.extent(axis);
                }
                bump(mesh, c, w, 1.0)
            }
            InitFamily::FourierRandom => {
                let seed = i.seed.unwrap_or(self.seed);
                let mut rng = rng_for(seed, stream::INITIAL_DATA, 0);
                let f = fourier_field(mesh, FOURIER_MODES, &mut rng);
                let m = f.max_abs();
                if m > 0.0 {
                    f.scaled(1.0 / m)
                } else {
                    f
                }
            }
            InitFamily::File => {
                let path = i.path.as_ref().ok_or_else(|| {
                    KirchhoffError::Config(vec!["init.path: required for family = file".into()])
                })?;
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                read_field_csv(&path, mesh)?
            }
        };
        Ok(f.scaled(mu))
    }
}

/// Parse configuration text, collecting every problem with its line number.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut errs = Vec::new();
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errs.push(format!(
                "line {line_no}: expected 'key = value', got '{line}'"
            ));
            continue;
        };
        let key = key.trim();
        if let Some((_, first)) = seen.iter().find(|(k, _)| *k == key) {
            errs.push(format!(
                "line {line_no}: key '{key}' repeated (first set on line {first})"
            ));
            continue;
        }
        seen.push((key, line_no));
        if let Err(e) = cfg.set(key, value) {
            errs.push(format!("line {line_no}: {key}: {e}"));
        }
    }
    errs.extend(cfg.validation_errors());
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(KirchhoffError::Config(errs))
    }
}

/// Read a field CSV (`x,u` or `x,y,u` rows in node order, optional header);
/// the last column holds the values.
pub fn read_field_csv(path: &Path, mesh: &Mesh) -> Result<Field> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(mesh.len());
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or("").trim();
        match last.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if no == 0 => {}
            Err(_) => {
                return Err(KirchhoffError::Structure(format!(
                    "{}: line {}: cannot parse value '{last}'",
                    path.display(),
                    no + 1
                )))
            }
        }
    }
    if values.len() != mesh.len() {
        return Err(KirchhoffError::Structure(format!(
            "{}: {} values for a mesh with {} nodes",
            path.display(),
            values.len(),
            mesh.len()
        )));
    }
    Field::new(*mesh, values)
}
