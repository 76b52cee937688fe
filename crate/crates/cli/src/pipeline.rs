//! Learning pipeline stages: load → regenerate → ECDF → density → learn → rate.

use pnn_core::density::default_bins;
use pnn_core::{
    auxiliary_density, build_dictionary, cdf_to_grid_with, density_from_cdf, dmd_fit_samples,
    frequency_learning_rate, learn_frequency_grid, learn_moment_grid, moment_learning_rate,
    simulate_standing_wave, CdfGrid, DensityGrid, Dictionary, EmpiricalCdf, GridSpec, Learned,
    Mode, SampleWeights, SpacingVectors, SplineSmoothing,
};

use crate::config::{PipelineConfig, Source};
use crate::error::{CliError, CliResult, Stage};
use crate::format::fmt_g;
use crate::io::{read_samples, Samples};

pub fn load(source: &Source) -> CliResult<Samples> {
    match source {
        Source::Csv(path) => read_samples(path, "load"),
        Source::StandingWave(w) => {
            let m = simulate_standing_wave(w.t0, w.t1, w.step, w.amplitude).stage("load")?;
            Ok(Samples::from(&m))
        }
    }
}

/// Fits a DMD model on the samples and evaluates it from their first time to `t_end`.
pub fn regenerate(
    samples: &Samples,
    step: f64,
    t_end: Option<f64>,
    rank_tol: f64,
) -> CliResult<Samples> {
    let matrix = samples.to_matrix("kmd")?;
    let model = dmd_fit_samples(&matrix, rank_tol).stage("kmd")?;
    let t_end = t_end.unwrap_or(*samples.times.last().expect("non-empty samples"));
    let dense = model.regenerate(t_end, step).stage("kmd")?;
    Ok(Samples::from(&dense))
}

/// Samples the pipeline learns from, after optional regeneration and column selection.
pub fn prepare(cfg: &PipelineConfig) -> CliResult<Samples> {
    let raw = load(&cfg.source)?;
    let raw = if cfg.kmd.enabled {
        let t_end = cfg.kmd.t_end.or(match &cfg.source {
            Source::StandingWave(w) => Some(w.t1),
            Source::Csv(_) => None,
        });
        regenerate(&raw, cfg.kmd.step, t_end, cfg.kmd.rank_tol)?
    } else {
        raw
    };
    match &cfg.components {
        Some(c) => raw.select(c, "load"),
        None => Ok(raw),
    }
}

pub fn cdf(
    samples: &Samples,
    bins: Option<usize>,
    knot_stride: Option<usize>,
) -> CliResult<CdfGrid> {
    let n = samples.dim();
    let ecdf = EmpiricalCdf::new(samples.states.clone()).stage("ecdf")?;
    let bins = bins.unwrap_or_else(|| default_bins(n));
    cdf_to_grid_with(&ecdf, bins, SplineSmoothing { knot_stride }).stage("ecdf")
}

pub fn auxiliary_grid(bins: usize) -> CliResult<DensityGrid> {
    let grid = GridSpec::torus(2, bins).stage("density")?;
    DensityGrid::from_fn(grid, |x| auxiliary_density(x[0], x[1])).stage("density")
}

pub fn dictionary(cfg: &PipelineConfig, n: usize) -> CliResult<Dictionary> {
    build_dictionary(n, cfg.mode, &cfg.bound()?).stage("learn")
}

pub fn learn(density: &DensityGrid, dict: &Dictionary) -> CliResult<Learned> {
    match dict.mode() {
        Mode::Frequency => learn_frequency_grid(density, dict).stage("learn"),
        Mode::Moment => learn_moment_grid(density, dict).stage("learn"),
    }
}

/// Learning-rate report.
pub struct Rate {
    pub mode: Mode,
    pub samples: usize,
    pub dictionary: usize,
    pub rate: f64,
    pub clamped_cells: usize,
}

impl Rate {
    pub fn render(&self) -> String {
        format!(
            "mode {}\nsamples {}\ndictionary {}\nclamped_cells {}\nlearning_rate {}\n",
            self.mode,
            self.samples,
            self.dictionary,
            self.clamped_cells,
            fmt_g(self.rate)
        )
    }
}

/// Frequency mode: connection-variance rate with Voronoi weights. Moment
/// mode: reciprocal of the widest time step.
pub fn rate_from_samples(samples: &Samples, dict: &Dictionary) -> CliResult<f64> {
    match dict.mode() {
        Mode::Frequency => {
            let w = SampleWeights::voronoi(&samples.states).stage("rate")?;
            frequency_learning_rate(&samples.states, &w, dict).stage("rate")
        }
        Mode::Moment => {
            let gaps = samples
                .times
                .windows(2)
                .map(|w| vec![w[1] - w[0]])
                .collect();
            let spacing = SpacingVectors::from_gaps(gaps).stage("rate")?;
            if spacing.gaps().is_empty() {
                return Err(CliError::data("rate", "need at least two samples"));
            }
            moment_learning_rate(&spacing).stage("rate")
        }
    }
}

/// Rate when only a density grid is available: cell centers stand in for samples.
pub fn rate_from_grid(grid: &GridSpec, dict: &Dictionary) -> CliResult<f64> {
    match dict.mode() {
        Mode::Frequency => {
            let centers: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.center(i)).collect();
            let w = SampleWeights::from_grid(grid).stage("rate")?;
            frequency_learning_rate(&centers, &w, dict).stage("rate")
        }
        Mode::Moment => {
            let widths = grid.axes().iter().map(|a| a.width()).collect();
            moment_learning_rate(&SpacingVectors::from_gaps(vec![widths]).stage("rate")?)
                .stage("rate")
        }
    }
}

/// Full pipeline from the config: samples (or the auxiliary density) to neurons.
pub struct Outcome {
    pub density: DensityGrid,
    pub learned: Learned,
    pub rate: Rate,
}

pub fn run(cfg: &PipelineConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let samples = prepare(cfg)?;
    let n = samples.dim();
    let density = if cfg.auxiliary {
        if n != 2 {
            return Err(CliError::config(
                "config",
                format!("the auxiliary density needs 2 axes, found {n}"),
            ));
        }
        auxiliary_grid(cfg.bins.unwrap_or_else(|| default_bins(2)))?
    } else {
        density_from_cdf(&cdf(&samples, cfg.bins, cfg.knot_stride)?).stage("density")?
    };
    let dict = dictionary(cfg, n)?;
    let learned = learn(&density, &dict)?;
    let rate = Rate {
        mode: cfg.mode,
        samples: samples.len(),
        dictionary: dict.len(),
        rate: rate_from_samples(&samples, &dict)?,
        clamped_cells: learned.clamped_cells,
    };
    Ok(Outcome {
        density,
        learned,
        rate,
    })
}
