//! Configuration files, run manifests and plot-ready output files.

pub mod commands;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compare::CompareOptions;
use crate::lattice::LatticeConfig;
use crate::propagator::{default_step, PropagationPlan};
use crate::{Error, Result};

pub const TOOL: &str = "zbsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionOptions {
    /// Wavenumbers across `[-pi/a, pi/a]`.
    pub n_q: usize,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        Self { n_q: 257 }
    }
}

/// Configuration for `simulate`, `analytic`, `compare` and `dispersion`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub plan: PropagationPlan,
    pub compare: CompareOptions,
    pub dispersion: DispersionOptions,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.plan.validate(self.lattice.omega)?;
        if !(self.compare.periods > 0.0 && self.compare.tolerance > 0.0 && self.compare.nodes >= 2) {
            return Err(Error::InvalidConfig("compare options must be positive".into()));
        }
        if self.dispersion.n_q < 2 {
            return Err(Error::InvalidConfig("dispersion.n_q must be >= 2".into()));
        }
        Ok(())
    }
}

fn config_error(e: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(e.to_string())
}

type Json = serde_json::Value;

/// Parses `key.path=value`; the value is read as a TOML literal, falling
/// back to a bare string.
fn apply_override(root: &mut Json, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_error(format!("override '{spec}' is not key=value")))?;
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => serde_json::to_value(t.remove("v").unwrap()).map_err(config_error)?,
        Err(_) => Json::String(raw.trim().to_string()),
    };
    let keys: Vec<&str> = path.trim().split('.').collect();
    let mut node = root;
    for k in &keys[..keys.len() - 1] {
        let map = node
            .as_object_mut()
            .ok_or_else(|| config_error(format!("override path '{path}' crosses a non-table")))?;
        node = map.entry(k.to_string()).or_insert_with(|| Json::Object(Default::default()));
        if node.is_null() {
            *node = Json::Object(Default::default());
        }
    }
    node.as_object_mut()
        .ok_or_else(|| config_error(format!("override path '{path}' crosses a non-table")))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Reads a TOML config, or the `config` object of a JSON manifest.
fn read_value(path: Option<&Path>) -> Result<Json> {
    let Some(path) = path else {
        return Ok(Json::Object(Default::default()));
    };
    let text = fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let mut manifest: Json = serde_json::from_str(&text).map_err(config_error)?;
        manifest
            .get_mut("config")
            .map(Json::take)
            .ok_or_else(|| config_error("manifest has no config object"))
    } else {
        let table = text.parse::<toml::Table>().map_err(config_error)?;
        serde_json::to_value(table).map_err(config_error)
    }
}

/// Overlays `user` onto `base`, table by table.
fn merge(base: &mut Json, user: Json) {
    match (base, user) {
        (Json::Object(b), Json::Object(u)) => {
            for (k, v) in u {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Defaults, then the file, then `--set` overrides. Also returns the
/// user-supplied part alone.
fn resolve<T: DeserializeOwned + Serialize + Default>(path: Option<&Path>, overrides: &[String]) -> Result<(T, Json)> {
    let mut user = read_value(path)?;
    for o in overrides {
        apply_override(&mut user, o)?;
    }
    let mut value = serde_json::to_value(T::default()).map_err(config_error)?;
    merge(&mut value, user.clone());
    let parsed = T::deserialize(&value).map_err(config_error)?;
    Ok((parsed, user))
}

/// Loads a run config; an unset plan step follows the modulation period.
pub fn load_run_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let (mut cfg, table): (RunConfig, _) = resolve(path, overrides)?;
    let step_given = table
        .get("plan")
        .and_then(|p| p.as_object())
        .is_some_and(|p| p.contains_key("step"));
    if !step_given {
        cfg.plan.step = default_step(cfg.lattice.omega).min(cfg.plan.z_max);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_sweep_spec(path: Option<&Path>, overrides: &[String]) -> Result<crate::sweep::SweepSpec> {
    let (spec, _): (crate::sweep::SweepSpec, _) = resolve(path, overrides)?;
    spec.validate()?;
    Ok(spec)
}

pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest<C> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: C,
    pub config_sha256: String,
    pub outputs: Vec<String>,
    pub termination: Vec<String>,
    pub wall_clock_seconds: f64,
    pub workers: Option<usize>,
    pub notes: Vec<String>,
}

/// Accumulates the files of one command run in an output directory.
pub struct OutputDir {
    pub dir: PathBuf,
    pub command: String,
    pub hash: String,
    pub files: Vec<String>,
}

impl OutputDir {
    pub fn create<C: Serialize>(dir: &Path, command: &str, config: &C) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), command: command.into(), hash: config_hash(config), files: Vec::new() })
    }

    fn preamble(&self, lines: &[&str]) -> String {
        let mut s = format!("# {TOOL} {VERSION} {}\n# manifest: {MANIFEST_FILE} (config sha256 {})\n", self.command, self.hash);
        for l in lines {
            let _ = writeln!(s, "# {l}");
        }
        s
    }

    /// Writes a CSV with a comment preamble, a header row and numeric rows.
    pub fn write_csv(&mut self, name: &str, notes: &[&str], header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        let mut s = self.preamble(notes);
        s.push_str(&header.join(","));
        s.push('\n');
        for row in rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        fs::write(self.dir.join(name), s)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            manifest: &'a str,
            config_sha256: &'a str,
            #[serde(flatten)]
            body: &'a T,
        }
        let w = Wrapped { manifest: MANIFEST_FILE, config_sha256: &self.hash, body: value };
        let mut text = serde_json::to_string_pretty(&w).map_err(|e| Error::Io(e.into()))?;
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn write_manifest<C: Serialize + Clone>(
        &self,
        config: &C,
        termination: Vec<String>,
        seconds: f64,
        notes: Vec<String>,
    ) -> Result<()> {
        let m = RunManifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: self.command.clone(),
            config: config.clone(),
            config_sha256: self.hash.clone(),
            outputs: self.files.clone(),
            termination,
            wall_clock_seconds: seconds,
            workers: crate::exec::requested_workers(),
            notes,
        };
        let mut text = serde_json::to_string_pretty(&m).map_err(|e| Error::Io(e.into()))?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

/// A CSV field.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    F(f64),
    I(i64),
    Empty,
}

impl Cell {
    /// Shortest text that round-trips to the same `f64`.
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:?}"),
            Cell::I(v) => v.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
