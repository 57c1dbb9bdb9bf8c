//! TOML run configuration.
//!
//! Relative paths in `[output]` and `[converge]` are resolved against the
//! directory holding the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ipfc::model::DEFAULT_C1;
use ipfc::{Dealias, IpfcModel, ModelParams, PMLattice, SpectralField};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::presets;

/// Lattices with more modes than this need an explicit opt-in.
pub const LARGE_LATTICE_MODES: usize = 131_072;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub lattice: LatticeSection,
    #[serde(default)]
    pub time: Option<TimeSection>,
    pub init: InitSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub converge: Option<ConvergeSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub scales: Vec<f64>,
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
}

fn default_c1() -> f64 {
    DEFAULT_C1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    #[default]
    Periodic,
    Dodecagonal,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DealiasSetting {
    #[default]
    Off,
    ThreeHalves,
}

impl From<DealiasSetting> for Dealias {
    fn from(d: DealiasSetting) -> Self {
        match d {
            DealiasSetting::Off => Dealias::Off,
            DealiasSetting::ThreeHalves => Dealias::ThreeHalves,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default)]
    pub kind: LatticeKind,
    pub sizes: Vec<usize>,
    /// `d × n` rows, only for `kind = "custom"`.
    #[serde(default)]
    pub projection: Option<Vec<Vec<f64>>>,
    /// `n × n` rows, only for `kind = "custom"`.
    #[serde(default)]
    pub basis: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub dealias: DealiasSetting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Cn,
    CnSdc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub scheme: Scheme,
    pub t_end: f64,
    pub steps: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
}

fn default_sweeps() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Sine,
    Ddqc,
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub preset: Preset,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl InitSection {
    pub fn amplitude(&self) -> f64 {
        self.amplitude.unwrap_or(match self.preset {
            Preset::Sine => 1.0,
            Preset::Ddqc => presets::DDQC_AMPLITUDE,
            Preset::Random => 0.1,
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub energy_csv: Option<PathBuf>,
    #[serde(default)]
    pub dump_dir: Option<PathBuf>,
    #[serde(default)]
    pub dump_every: Option<usize>,
    /// Extra dump times; each snaps to the nearest time node.
    #[serde(default)]
    pub dump_times: Vec<f64>,
    #[serde(default)]
    pub render: Option<RenderSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSection {
    /// `[x_min, x_max]` in 1D, `[x_min, x_max, y_min, y_max]` in 2D.
    pub bbox: Vec<f64>,
    /// `[width, height]`; 1D renders use the width only.
    pub resolution: [usize; 2],
    #[serde(default)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    pub steps: Vec<usize>,
    pub reference: usize,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Parses and validates, resolving relative paths against the file's directory.
    pub fn load(path: &Path, allow_large: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        cfg.validate(allow_large)?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        join(&mut self.output.energy_csv);
        join(&mut self.output.dump_dir);
        if let Some(c) = &mut self.converge {
            join(&mut c.csv);
        }
    }

    pub fn validate(&self, allow_large: bool) -> Result<()> {
        self.model_params()?;
        let lattice = self.build_lattice()?;
        if lattice.num_modes() > LARGE_LATTICE_MODES && !allow_large {
            return Err(CliError::Config(format!(
                "lattice has {} modes (limit {LARGE_LATTICE_MODES}); pass --allow-large to run it",
                lattice.num_modes()
            )));
        }
        if let Some(t) = &self.time {
            if !(t.t_end.is_finite() && t.t_end > 0.0) {
                return Err(CliError::Config(format!("time.t_end must be positive, got {}", t.t_end)));
            }
            if t.steps == 0 {
                return Err(CliError::Config("time.steps must be at least 1".into()));
            }
            if t.scheme == Scheme::CnSdc && t.steps < 2 {
                return Err(CliError::Config("cn_sdc needs time.steps >= 2".into()));
            }
        }
        if !self.init.amplitude().is_finite() {
            return Err(CliError::Config("init.amplitude must be finite".into()));
        }
        if self.output.dump_every == Some(0) {
            return Err(CliError::Config("output.dump_every must be at least 1".into()));
        }
        if let Some(r) = &self.output.render {
            let want = 2 * lattice.dim();
            if r.bbox.len() != want {
                return Err(CliError::Config(format!(
                    "output.render.bbox needs {want} numbers for a {}D lattice",
                    lattice.dim()
                )));
            }
            if r.bbox.iter().any(|v| !v.is_finite()) || r.bbox.chunks(2).any(|b| b[0] >= b[1]) {
                return Err(CliError::Config("output.render.bbox ranges must be increasing".into()));
            }
            if r.resolution.iter().any(|&n| n < 2) {
                return Err(CliError::Config("output.render.resolution must be at least 2x2".into()));
            }
            if lattice.dim() > 2 {
                return Err(CliError::Config(format!(
                    "rendering supports 1D and 2D lattices, this one is {}D",
                    lattice.dim()
                )));
            }
        }
        if let Some(c) = &self.converge {
            check_convergence_steps(&c.steps, c.reference)?;
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        Ok(ModelParams::new(m.scales.clone(), m.epsilon, m.alpha, m.c1)?)
    }

    pub fn build_lattice(&self) -> Result<PMLattice> {
        let l = &self.lattice;
        let custom = l.projection.is_some() || l.basis.is_some();
        let lattice = match l.kind {
            LatticeKind::Periodic | LatticeKind::Dodecagonal if custom => {
                return Err(CliError::Config(
                    "lattice.projection/basis are only read with kind = \"custom\"".into(),
                ))
            }
            LatticeKind::Periodic => PMLattice::periodic(&l.sizes)?,
            LatticeKind::Dodecagonal => PMLattice::dodecagonal(&l.sizes)?,
            LatticeKind::Custom => match (&l.projection, &l.basis) {
                (Some(p), Some(b)) => PMLattice::new(p, b, &l.sizes)?,
                _ => {
                    return Err(CliError::Config(
                        "kind = \"custom\" needs lattice.projection and lattice.basis".into(),
                    ))
                }
            },
        };
        Ok(lattice)
    }

    pub fn build_model(&self) -> Result<IpfcModel> {
        let lattice = Arc::new(self.build_lattice()?);
        Ok(IpfcModel::new(self.model_params()?, lattice)?.with_dealias(self.lattice.dealias.into()))
    }

    pub fn initial_field(&self, model: &IpfcModel) -> Result<SpectralField> {
        let lattice = model.lattice();
        let amp = self.init.amplitude();
        match self.init.preset {
            Preset::Sine => presets::sine(lattice, amp),
            Preset::Ddqc => presets::ddqc_seed(lattice, amp),
            Preset::Random => presets::random(lattice, amp, self.init.seed),
        }
    }

    pub fn time(&self) -> Result<&TimeSection> {
        self.time
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [time] section".into()))
    }
}

/// The reference resolution must exceed every tested one.
pub fn check_convergence_steps(steps: &[usize], reference: usize) -> Result<()> {
    if steps.is_empty() {
        return Err(CliError::Config("converge.steps is empty".into()));
    }
    if let Some(&bad) = steps.iter().find(|&&s| s >= reference) {
        return Err(CliError::Config(format!(
            "converge.reference ({reference}) must be larger than every tested step count, got {bad}"
        )));
    }
    if steps.contains(&0) {
        return Err(CliError::Config("converge.steps entries must be positive".into()));
    }
    Ok(())
}
