//! Frequency learning: Fourier neurons of `ln(1/p₀)` on the torus, the
//! connection function, the frequency learning rate and partition functions.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::index::{Dictionary, Mode, MultiIndex};
use crate::neurons::{BasisTables, NeuronSet};

/// Neurons together with the number of density cells that hit the log floor.
#[derive(Debug, Clone, PartialEq)]
pub struct Learned {
    pub neurons: NeuronSet,
    pub clamped_cells: usize,
}

/// Per-sample volumes `Δ_x`, positive and summing to `2ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights {
    values: Vec<f64>,
}

impl SampleWeights {
    /// Validates and rescales `values` to total `2ⁿ`.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewSamples {
                needed: 1,
                found: 0,
            });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "sample weight {v} is not positive"
            )));
        }
        let total: f64 = values.iter().sum();
        let scale = torus_volume(n) / total;
        Ok(SampleWeights {
            values: values.into_iter().map(|v| v * scale).collect(),
        })
    }

    /// Voronoi lengths of the marginals, clipped to `[-1, 1]`; coincident
    /// coordinates share their cell equally. In several dimensions the weight
    /// of a sample is the product of its marginal lengths, rescaled to `2ⁿ`.
    pub fn voronoi(samples: &[Vec<f64>]) -> Result<Self> {
        let n = check_samples(samples)?;
        let mut weights = vec![1.0; samples.len()];
        for axis in 0..n {
            let lengths = voronoi_1d(&samples.iter().map(|s| s[axis]).collect::<Vec<_>>());
            for (w, l) in weights.iter_mut().zip(lengths) {
                *w *= l;
            }
        }
        SampleWeights::new(n, weights)
    }

    /// Cell volumes of a grid, matching the midpoint rule.
    pub fn from_grid(grid: &GridSpec) -> Result<Self> {
        SampleWeights::new(grid.dim(), vec![grid.cell_volume(); grid.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn torus_volume(n: usize) -> f64 {
    2f64.powi(n as i32)
}

fn check_samples(samples: &[Vec<f64>]) -> Result<usize> {
    let n = samples.first().map(Vec::len).ok_or(Error::TooFewSamples {
        needed: 1,
        found: 0,
    })?;
    for s in samples {
        Error::check_dim(n, s.len())?;
        if !s.iter().all(|v| (-1.0..=1.0).contains(v)) {
            return Err(Error::OutsideTorus(s.clone()));
        }
    }
    Ok(n)
}

fn voronoi_1d(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some((v, members)) if *v == xs[i] => members.push(i),
            _ => groups.push((xs[i], vec![i])),
        }
    }
    for g in 0..groups.len() {
        let lo = if g == 0 {
            -1.0
        } else {
            0.5 * (groups[g - 1].0 + groups[g].0)
        };
        let hi = if g + 1 == groups.len() {
            1.0
        } else {
            0.5 * (groups[g].0 + groups[g + 1].0)
        };
        let share = (hi - lo) / groups[g].1.len() as f64;
        for &i in &groups[g].1 {
            out[i] = share;
        }
    }
    out
}

fn require_frequency(dict: &Dictionary) -> Result<()> {
    if dict.mode() != Mode::Frequency {
        return Err(Error::ModeMismatch {
            expected: Mode::Frequency,
            found: dict.mode(),
        });
    }
    Ok(())
}

fn require_torus(grid: &GridSpec) -> Result<()> {
    if grid
        .axes()
        .iter()
        .any(|a| a.lower != -1.0 || a.upper != 1.0)
    {
        return Err(Error::InvalidArgument(
            "frequency learning needs a grid over [-1,1)^n".into(),
        ));
    }
    Ok(())
}

/// `y_α = 2⁻ⁿ Σ_c conj(ω_α(x_c)) ln(1/p₀(x_c)) vol` over the grid cells; the
/// zero index gives `D_c`.
pub fn learn_frequency_grid(density: &DensityGrid, dict: &Dictionary) -> Result<Learned> {
    require_frequency(dict)?;
    Error::check_dim(density.dim(), dict.dim())?;
    require_torus(&density.grid)?;
    let grid = &density.grid;
    let (logs, clamped_cells) = density.log_reciprocal();
    let tables = BasisTables::new(grid, Mode::Frequency, dict.iter());
    let shape = grid.shape();
    let scale = grid.cell_volume() / torus_volume(grid.dim());
    let coefficients: Vec<Complex64> = dict
        .indexes()
        .par_iter()
        .map(|a| {
            let factors = tables.factors(a);
            let mut idx = vec![0usize; shape.len()];
            let mut sum = Complex64::new(0.0, 0.0);
            for &l in &logs {
                let mut b = Complex64::new(1.0, 0.0);
                for (f, &i) in factors.iter().zip(&idx) {
                    b *= f[i];
                }
                sum += b.conj() * l;
                for k in (0..shape.len()).rev() {
                    idx[k] += 1;
                    if idx[k] < shape[k] {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            sum * scale
        })
        .collect();
    Ok(Learned {
        neurons: assemble(dict, coefficients)?,
        clamped_cells,
    })
}

fn assemble(dict: &Dictionary, coefficients: Vec<Complex64>) -> Result<NeuronSet> {
    let mut set = NeuronSet::new(dict.mode(), dict.dim())?;
    for (a, y) in dict.iter().zip(coefficients) {
        if a.is_zero() {
            set.set_dc(y.re);
        } else {
            set.insert(a.clone(), y)?;
        }
    }
    Ok(set)
}

/// `ỹ_α = 2⁻ⁿ Σ_k conj(ω_α(x_k)) ln(1/p₀(x_k)) Δ_{x_k}` over scattered samples.
pub fn learn_frequency_samples(
    samples: &[Vec<f64>],
    weights: &SampleWeights,
    log_density: &[f64],
    dict: &Dictionary,
) -> Result<NeuronSet> {
    require_frequency(dict)?;
    let n = check_samples(samples)?;
    Error::check_dim(dict.dim(), n)?;
    Error::check_dim(samples.len(), weights.len())?;
    Error::check_dim(samples.len(), log_density.len())?;
    let scale = 1.0 / torus_volume(n);
    let coefficients = dict
        .indexes()
        .par_iter()
        .map(|a| {
            let sum: Complex64 = samples
                .iter()
                .zip(weights.values())
                .zip(log_density)
                .map(|((x, w), l)| a.fourier(x).conj() * (l * w))
                .sum();
            sum * scale
        })
        .collect();
    assemble(dict, coefficients)
}

fn upsilon_of_difference(
    samples: &[Vec<f64>],
    weights: &SampleWeights,
    d: &MultiIndex,
) -> Complex64 {
    let n = d.dim();
    let sum: Complex64 = samples
        .iter()
        .zip(weights.values())
        .map(|(x, w)| d.fourier(x).conj() * *w)
        .sum();
    sum / torus_volume(n)
}

/// Connection `Υ_α(γ) = 2⁻ⁿ Σ_k conj(ω_{α−γ}(x_k)) Δ_{x_k}`.
pub fn connection_upsilon(
    samples: &[Vec<f64>],
    weights: &SampleWeights,
    alpha: &MultiIndex,
    gamma: &MultiIndex,
) -> Result<Complex64> {
    let n = check_samples(samples)?;
    Error::check_dim(n, alpha.dim())?;
    Error::check_dim(samples.len(), weights.len())?;
    let d = alpha.checked_sub(gamma)?;
    Ok(upsilon_of_difference(samples, weights, &d))
}

/// `1 / max_α Var_γ Υ_α(γ)` with the complex variance over `γ ∈ D`
/// (`mean |Υ|² − |mean Υ|²`). A vanishing variance yields `+∞`.
pub fn frequency_learning_rate(
    samples: &[Vec<f64>],
    weights: &SampleWeights,
    dict: &Dictionary,
) -> Result<f64> {
    require_frequency(dict)?;
    let n = check_samples(samples)?;
    Error::check_dim(dict.dim(), n)?;
    Error::check_dim(samples.len(), weights.len())?;
    if dict.len() < 2 {
        return Err(Error::InvalidArgument(
            "learning rate needs a dictionary beyond the DC index".into(),
        ));
    }
    // Υ_α(γ) only depends on α − γ
    let mut differences = BTreeSet::new();
    for a in dict {
        for g in dict {
            differences.insert(a.checked_sub(g)?);
        }
    }
    let differences: Vec<MultiIndex> = differences.into_iter().collect();
    let values: Vec<Complex64> = differences
        .par_iter()
        .map(|d| upsilon_of_difference(samples, weights, d))
        .collect();
    let upsilon: BTreeMap<&MultiIndex, Complex64> = differences.iter().zip(values).collect();
    let count = dict.len() as f64;
    let mut worst = 0.0f64;
    for a in dict {
        let mut mean = Complex64::new(0.0, 0.0);
        let mut square = 0.0;
        for g in dict {
            let u = upsilon[&a.checked_sub(g)?];
            mean += u;
            square += u.norm_sqr();
        }
        mean /= count;
        worst = worst.max(square / count - mean.norm_sqr());
    }
    if worst <= RATE_VARIANCE_FLOOR {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / worst)
    }
}

/// Variances at or below this are treated as zero (pure roundoff).
const RATE_VARIANCE_FLOOR: f64 = 1e-14;

/// `Z = ∫ e^{-E(x; y)} dx` by the midpoint rule with `bins` cells per axis,
/// shifted by the minimum energy to avoid overflow.
pub fn partition_function(neurons: &NeuronSet, bins: usize) -> Result<f64> {
    let ln_z = log_partition_function(neurons, bins)?;
    let z = ln_z.exp();
    if !z.is_finite() {
        return Err(Error::Numeric(format!(
            "partition function overflows (ln Z = {ln_z})"
        )));
    }
    Ok(z)
}

/// `ln Z`, computed without forming `Z` so that large energies stay finite.
pub fn log_partition_function(neurons: &NeuronSet, bins: usize) -> Result<f64> {
    let grid = GridSpec::torus(neurons.dim(), bins)?;
    let energy = neurons.energy_on_grid(&grid)?;
    let shift = energy
        .par_iter()
        .copied()
        .reduce(|| f64::INFINITY, f64::min);
    if !shift.is_finite() {
        return Err(Error::Numeric("energy is not finite on the grid".into()));
    }
    // fixed chunks keep the summation order, and so the result, reproducible
    let partial: Vec<f64> = energy
        .par_chunks(4096)
        .map(|c| c.iter().map(|e| (shift - e).exp()).sum())
        .collect();
    let sum: f64 = partial.iter().sum();
    Ok(-shift + (sum * grid.cell_volume()).ln())
}

/// Drops neurons with `|α| > max_order`. The bound `(e^{Σ_{|α|>N}|y_α|} − 1)·Z`
/// controls `∫|e^{-E} − e^{-E_N}|`, with `Z` the partition function of the full
/// set on `bins` cells per axis.
pub fn truncate_energy(
    neurons: &NeuronSet,
    max_order: u64,
    bins: usize,
) -> Result<(NeuronSet, f64)> {
    let mut kept = NeuronSet::new(neurons.mode(), neurons.dim())?;
    kept.set_dc(neurons.dc());
    let mut tail = 0.0;
    for (a, y) in neurons.neurons() {
        if a.order() <= max_order {
            kept.insert(a.clone(), y)?;
        } else {
            tail += y.norm();
        }
    }
    if tail == 0.0 {
        return Ok((kept, 0.0));
    }
    let z = partition_function(neurons, bins)?;
    Ok((kept, tail.exp_m1() * z))
}
