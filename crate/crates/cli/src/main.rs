//! `pnn`: learning and estimation pipelines for probabilistic neural networks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod format;
mod io;
mod pipeline;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pnn_core::kmd::{DmdModelRepr, DEFAULT_RANK_TOL};
use pnn_core::{
    auxiliary_density, build_dictionary, density_from_cdf, dmd_fit_samples, estimate,
    simulate_standing_wave, BoundSpec, CdfGrid, DensityGrid, EstimationReport, Mode, NeuronSet,
};

use crate::config::{PipelineConfig, Source, WaveParams};
use crate::error::{CliError, CliResult, Stage};
use crate::format::fmt_g;
use crate::io::{
    ensure_dir, read_grid, read_json, read_samples, read_signals, write_grid, write_json,
    write_samples, write_text, Samples,
};

#[derive(Parser)]
#[command(name = "pnn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the standing wave (sin t, cos t) on a uniform time grid.
    Simulate {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        t1: f64,
        #[arg(long, default_value_t = 0.2)]
        step: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        amplitude: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fit a DMD model on uniformly spaced samples and regenerate them on a finer grid.
    Kmd {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.001)]
        step: f64,
        /// End of the regenerated window (default: last input time).
        #[arg(long, allow_hyphen_values = true)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        /// Also write the fitted model as JSON.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Spline-smoothed empirical CDF of samples on a grid over [-1,1]^n.
    Ecdf {
        #[arg(short, long)]
        input: PathBuf,
        /// 1-based columns to keep, e.g. `1,2`.
        #[arg(long, value_delimiter = ',')]
        components: Option<Vec<usize>>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        knot_stride: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Finite-difference density from a CDF grid file.
    Density {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the learning pipeline; writes neurons.json, density.csv and rate.txt.
    Learn(LearnArgs),
    /// Likelihood, active path, POAN and topological statistics of signals.
    Estimate {
        #[command(flatten)]
        target: EstimateArgs,
        /// Report file (default: stdout); one JSON line per signal in batch mode.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Likelihood table of p_a and the recovered phase-space density at (x, 0).
    Table1 {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Topological statistics of active paths as tidy CSV tables.
    Topo {
        #[command(flatten)]
        target: EstimateArgs,
        #[arg(long)]
        output_dir: PathBuf,
    },
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Learn from an existing density grid file instead of samples.
    #[arg(long, conflicts_with_all = ["samples", "auxiliary"])]
    density: Option<PathBuf>,
}

/// Pipeline config file plus per-field overrides.
#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Sample file replacing the configured source.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    components: Option<Vec<usize>>,
    #[arg(long, overrides_with = "no_kmd")]
    kmd: bool,
    #[arg(long)]
    no_kmd: bool,
    #[arg(long)]
    kmd_step: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    /// `max-order:N` or `box:b1,...,bn`.
    #[arg(long)]
    dict: Option<String>,
    #[arg(long)]
    auxiliary: bool,
    #[arg(long)]
    knot_stride: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl PipelineArgs {
    fn resolve(&self) -> CliResult<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(p) = &self.samples {
            cfg.source = Source::Csv(p.clone());
        }
        if let Some(c) = &self.components {
            cfg.components = Some(c.clone());
        }
        if self.kmd {
            cfg.kmd.enabled = true;
        }
        if self.no_kmd {
            cfg.kmd.enabled = false;
        }
        if let Some(s) = self.kmd_step {
            cfg.kmd.step = s;
        }
        if self.t_end.is_some() {
            cfg.kmd.t_end = self.t_end;
        }
        if let Some(r) = self.rank_tol {
            cfg.kmd.rank_tol = r;
        }
        if self.bins.is_some() {
            cfg.bins = self.bins;
        }
        if let Some(d) = &self.dict {
            cfg.dictionary = d.clone();
        }
        if self.auxiliary {
            cfg.auxiliary = true;
        }
        if self.knot_stride.is_some() {
            cfg.knot_stride = self.knot_stride;
        }
        if let Some(o) = &self.output_dir {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    neurons: PathBuf,
    /// Comma-separated signal, e.g. `-0.8,0.8`.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required_unless_present = "batch",
        conflicts_with = "batch"
    )]
    signal: Option<Vec<f64>>,
    /// File of signals, one per row (`x1,...,xn` or a sample file).
    #[arg(long)]
    batch: Option<PathBuf>,
    /// Dictionary the active path is restricted to (default: every learned index).
    #[arg(long)]
    dict: Option<String>,
    /// Map frequency-mode signals onto [-1,1)^n periodically.
    #[arg(long)]
    wrap: bool,
}

fn wrap_unit(x: f64) -> f64 {
    (x + 1.0).rem_euclid(2.0) - 1.0
}

fn reports(args: &EstimateArgs) -> CliResult<Vec<EstimationReport>> {
    let neurons: NeuronSet = read_json(&args.neurons, "load")?;
    let bound = match &args.dict {
        Some(d) => d
            .parse()
            .map_err(|e: pnn_core::Error| CliError::config("config", e.to_string()))?,
        None => BoundSpec::MaxOrder(neurons.max_order()),
    };
    let dict = build_dictionary(neurons.dim(), neurons.mode(), &bound).stage("config")?;
    let signals = match (&args.signal, &args.batch) {
        (Some(s), _) => vec![s.clone()],
        (None, Some(path)) => read_signals(path, "load")?,
        (None, None) => return Err(CliError::config("config", "no signal given")),
    };
    signals
        .into_iter()
        .map(|mut x| {
            if args.wrap && neurons.mode() == Mode::Frequency {
                x.iter_mut().for_each(|v| *v = wrap_unit(*v));
            }
            estimate(&neurons, &x, &dict).stage("estimate")
        })
        .collect()
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => write_text(path, "write", text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::data("write", e.to_string())),
    }
}

fn json_line<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string(value).map_err(|e| CliError::data("write", e.to_string()))
}

fn cmd_learn(args: &LearnArgs) -> CliResult<()> {
    let cfg = args.pipeline.resolve()?;
    ensure_dir(&cfg.output_dir, "write")?;
    let (density, learned, rate) = match &args.density {
        Some(path) => {
            let (grid, values) = read_grid(path, "load", "p0")?;
            let density = DensityGrid::new(grid, values).stage("load")?;
            let dict = pipeline::dictionary(&cfg, density.dim())?;
            let learned = pipeline::learn(&density, &dict)?;
            let rate = pipeline::Rate {
                mode: cfg.mode,
                samples: density.grid.len(),
                dictionary: dict.len(),
                rate: pipeline::rate_from_grid(&density.grid, &dict)?,
                clamped_cells: learned.clamped_cells,
            };
            (density, learned, rate)
        }
        None => {
            let out = pipeline::run(&cfg)?;
            (out.density, out.learned, out.rate)
        }
    };
    let dir = &cfg.output_dir;
    write_json(&dir.join("neurons.json"), "write", &learned.neurons)?;
    write_grid(
        &dir.join("density.csv"),
        "write",
        &density.grid,
        &density.values,
        "p0",
    )?;
    write_text(&dir.join("rate.txt"), "write", &rate.render())
}

fn cmd_table1(pipeline_args: &PipelineArgs, output: &Path) -> CliResult<()> {
    let cfg = pipeline_args.resolve()?;
    let samples = pipeline::prepare(&cfg)?;
    if samples.dim() != 2 {
        return Err(CliError::config(
            "config",
            format!(
                "the table needs (x, xdot) samples, found {} columns",
                samples.dim()
            ),
        ));
    }
    let p0 =
        density_from_cdf(&pipeline::cdf(&samples, cfg.bins, cfg.knot_stride)?).stage("density")?;
    let mut text = String::from("x,p_a,p0\n");
    for x in [0.0, FRAC_1_SQRT_2, 1.0, 2.0] {
        let row = [
            x,
            auxiliary_density(x, 0.0),
            p0.value_at(&[x, 0.0]).unwrap_or(0.0),
        ];
        text.push_str(&row.map(fmt_g).join(","));
        text.push('\n');
    }
    write_text(output, "write", &text)
}

fn cmd_topo(args: &EstimateArgs, dir: &Path) -> CliResult<()> {
    let reports = reports(args)?;
    ensure_dir(dir, "write")?;
    let n = reports.first().map_or(0, |r| r.signal.len());
    let signal_cols = io::axis_names(n);
    let mut counts = format!("row,{},k,count\n", signal_cols.join(","));
    let mut means = format!("row,{},k,axis,mean\n", signal_cols.join(","));
    let mut variances = format!("row,{},k,axis,variance\n", signal_cols.join(","));
    let alpha_cols: Vec<String> = (1..=n).map(|j| format!("a{j}")).collect();
    let mut paths = format!("row,{},{}\n", signal_cols.join(","), alpha_cols.join(","));
    for (row, r) in reports.iter().enumerate() {
        let sig = r
            .signal
            .iter()
            .map(|&v| fmt_g(v))
            .collect::<Vec<_>>()
            .join(",");
        for (k, c) in &r.topo.counts {
            counts.push_str(&format!("{row},{sig},{k},{c}\n"));
        }
        let per_axis = |out: &mut String, table: &BTreeMap<u64, Vec<f64>>| {
            for (k, v) in table {
                for (axis, value) in v.iter().enumerate() {
                    out.push_str(&format!("{row},{sig},{k},{},{}\n", axis + 1, fmt_g(*value)));
                }
            }
        };
        per_axis(&mut means, &r.topo.means);
        per_axis(&mut variances, &r.topo.variances);
        for a in &r.active_path {
            let comps = a
                .components()
                .iter()
                .map(i64::to_string)
                .collect::<Vec<_>>()
                .join(",");
            paths.push_str(&format!("{row},{sig},{comps}\n"));
        }
    }
    write_text(&dir.join("topo_counts.csv"), "write", &counts)?;
    write_text(&dir.join("topo_means.csv"), "write", &means)?;
    write_text(&dir.join("topo_variances.csv"), "write", &variances)?;
    write_text(&dir.join("active_paths.csv"), "write", &paths)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            t0,
            t1,
            step,
            amplitude,
            output,
        } => {
            let w = WaveParams {
                t0,
                t1,
                step,
                amplitude,
            };
            let m = simulate_standing_wave(w.t0, w.t1, w.step, w.amplitude).stage("simulate")?;
            write_samples(&output, "write", &Samples::from(&m))
        }
        Command::Kmd {
            input,
            step,
            t_end,
            rank_tol,
            model,
            output,
        } => {
            let samples = read_samples(&input, "load")?;
            if let Some(path) = model {
                let fitted = dmd_fit_samples(&samples.to_matrix("kmd")?, rank_tol).stage("kmd")?;
                write_json(&path, "write", &DmdModelRepr::from(&fitted))?;
            }
            let dense = pipeline::regenerate(&samples, step, t_end, rank_tol)?;
            write_samples(&output, "write", &dense)
        }
        Command::Ecdf {
            input,
            components,
            bins,
            knot_stride,
            output,
        } => {
            let mut samples = read_samples(&input, "load")?;
            if let Some(c) = components {
                samples = samples.select(&c, "load")?;
            }
            let cdf = pipeline::cdf(&samples, bins, knot_stride)?;
            write_grid(&output, "write", &cdf.grid, &cdf.values, "F")
        }
        Command::Density { input, output } => {
            let (grid, values) = read_grid(&input, "load", "F")?;
            let cdf = CdfGrid::new(grid, values).stage("load")?;
            let p = density_from_cdf(&cdf).stage("density")?;
            write_grid(&output, "write", &p.grid, &p.values, "p0")
        }
        Command::Learn(args) => cmd_learn(&args),
        Command::Estimate { target, output } => {
            let reports = reports(&target)?;
            let mut text = String::new();
            for r in &reports {
                text.push_str(&json_line(r)?);
                text.push('\n');
            }
            emit(output.as_deref(), &text)
        }
        Command::Table1 { pipeline, output } => cmd_table1(&pipeline, &output),
        Command::Topo { target, output_dir } => cmd_topo(&target, &output_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_lands_in_half_open_torus() {
        for (x, want) in [
            (0.5, 0.5),
            (1.0, -1.0),
            (1.5, -0.5),
            (-1.0, -1.0),
            (-3.25, 0.75),
        ] {
            assert!((wrap_unit(x) - want).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
