use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use pnn_core::{BoundSpec, Mode};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Where the learning pipeline takes its samples from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    /// A `t,x1,...,xn` file.
    Csv(PathBuf),
    StandingWave(WaveParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveParams {
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    pub amplitude: f64,
}

impl Default for WaveParams {
    fn default() -> Self {
        WaveParams {
            t0: 0.0,
            t1: TAU,
            step: 0.2,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmdConfig {
    pub enabled: bool,
    /// Regeneration step.
    pub step: f64,
    /// End of the regenerated window; defaults to the end of the source.
    pub t_end: Option<f64>,
    pub rank_tol: f64,
}

impl Default for KmdConfig {
    fn default() -> Self {
        KmdConfig {
            enabled: true,
            step: 0.001,
            t_end: None,
            rank_tol: pnn_core::kmd::DEFAULT_RANK_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub source: Source,
    /// 1-based sample columns to learn from; all when absent.
    pub components: Option<Vec<usize>>,
    pub kmd: KmdConfig,
    /// Bins per axis; 1000 in one dimension and 300 otherwise when absent.
    pub bins: Option<usize>,
    pub dictionary: String,
    /// Replace the recovered density by the disk density `p_a` (moment mode, two axes).
    pub auxiliary: bool,
    pub knot_stride: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Frequency,
            source: Source::StandingWave(WaveParams::default()),
            components: None,
            kmd: KmdConfig::default(),
            bins: None,
            dictionary: "max-order:10".into(),
            auxiliary: false,
            knot_stride: None,
            output_dir: PathBuf::from("pnn-out"),
        }
    }
}

impl PipelineConfig {
    /// Loads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Source::Csv(p) = &mut cfg.source {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn bound(&self) -> CliResult<BoundSpec> {
        self.dictionary
            .parse()
            .map_err(|e: pnn_core::Error| CliError::config("config", e.to_string()))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.bound()?;
        if self.auxiliary && self.mode != Mode::Moment {
            return Err(CliError::config(
                "config",
                "the auxiliary density is a moment-mode option",
            ));
        }
        if let Some(b) = self.bins {
            if b < 4 {
                return Err(CliError::config(
                    "config",
                    format!("bins = {b}; need at least 4"),
                ));
            }
        }
        if self.kmd.enabled && !(self.kmd.step > 0.0) {
            return Err(CliError::config(
                "config",
                format!("kmd step {} must be positive", self.kmd.step),
            ));
        }
        if matches!(&self.components, Some(c) if c.is_empty()) {
            return Err(CliError::config("config", "components list is empty"));
        }
        Ok(())
    }
}
