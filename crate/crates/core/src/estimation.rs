//! Likelihoods, active paths, POAN and topological statistics of active paths.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{Dictionary, Mode, MultiIndex};
use crate::neurons::NeuronSet;

/// `E(x; y)`, the DC term excluded.
pub fn energy_at(neurons: &NeuronSet, x: &[f64]) -> Result<f64> {
    neurons.energy(x)
}

/// `p(x | y) = exp(−E(x; y) − D_c)`.
pub fn likelihood(neurons: &NeuronSet, x: &[f64]) -> Result<f64> {
    Ok((-neurons.energy(x)? - neurons.dc()).exp())
}

/// One active neuron and its projection `y_α b_α(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveNeuron {
    pub index: MultiIndex,
    pub projection: Complex64,
}

/// Dictionary indexes whose projection at the signal has a strictly negative
/// real part, in ascending index order (hence grouped by cell order).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivePath {
    pub signal: Vec<f64>,
    pub mode: Mode,
    pub neurons: Vec<ActiveNeuron>,
}

impl ActivePath {
    pub fn indexes(&self) -> Vec<MultiIndex> {
        self.neurons.iter().map(|a| a.index.clone()).collect()
    }

    /// `Γ_k` for every order `k` that occurs.
    pub fn cells(&self) -> BTreeMap<u64, Vec<&MultiIndex>> {
        let mut cells: BTreeMap<u64, Vec<&MultiIndex>> = BTreeMap::new();
        for a in &self.neurons {
            cells.entry(a.index.order()).or_default().push(&a.index);
        }
        cells
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }
}

pub fn active_path(neurons: &NeuronSet, x: &[f64], dict: &Dictionary) -> Result<ActivePath> {
    neurons.check_dictionary(dict)?;
    neurons.check_point(x)?;
    let active = neurons
        .neurons()
        .filter(|(a, _)| dict.contains(a))
        .map(|(a, y)| ActiveNeuron {
            index: a.clone(),
            projection: y * a.basis(x, neurons.mode()),
        })
        .filter(|a| a.projection.re < 0.0)
        .collect();
    Ok(ActivePath {
        signal: x.to_vec(),
        mode: neurons.mode(),
        neurons: active,
    })
}

/// Probability of active neurons: `−Re v / |v|` per projection in frequency
/// mode, identically 1 in moment mode.
pub fn poan(neurons: &NeuronSet, x: &[f64], path: &ActivePath) -> Result<Vec<f64>> {
    if path.mode != neurons.mode() {
        return Err(Error::ModeMismatch {
            expected: neurons.mode(),
            found: path.mode,
        });
    }
    if path.signal != x {
        return Err(Error::InvalidArgument(
            "active path was computed for a different signal".into(),
        ));
    }
    path.neurons
        .iter()
        .map(|a| {
            let y = neurons.get(&a.index).ok_or_else(|| {
                Error::InvalidArgument(format!("active index {} is not a neuron", a.index))
            })?;
            match neurons.mode() {
                Mode::Moment => Ok(1.0),
                Mode::Frequency => {
                    let v = y * a.index.fourier(x);
                    let norm = v.norm();
                    if norm == 0.0 {
                        return Err(Error::Numeric(format!("zero projection on {}", a.index)));
                    }
                    Ok(-v.re / norm)
                }
            }
        })
        .collect()
}

/// Pair counts `N(k)` over distinct indexes at ℓ¹ distance `k`, with
/// per-component means and population variances of the pair endpoints
/// (an index counted once per pair it belongs to).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopoStats {
    pub counts: BTreeMap<u64, usize>,
    pub means: BTreeMap<u64, Vec<f64>>,
    pub variances: BTreeMap<u64, Vec<f64>>,
}

pub fn topo_stats(indexes: &[MultiIndex]) -> Result<TopoStats> {
    let mut sorted = indexes.to_vec();
    sorted.sort();
    sorted.dedup();
    if let Some(first) = sorted.first() {
        for a in &sorted {
            Error::check_dim(first.dim(), a.dim())?;
        }
    }
    let mut endpoints: BTreeMap<u64, Vec<&MultiIndex>> = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            let k = a.l1_distance(b)?;
            *counts.entry(k).or_insert(0) += 1;
            endpoints.entry(k).or_default().extend([a, b]);
        }
    }
    let mut means = BTreeMap::new();
    let mut variances = BTreeMap::new();
    for (k, members) in endpoints {
        let n = members[0].dim();
        let count = members.len() as f64;
        let mean: Vec<f64> = (0..n)
            .map(|c| {
                members
                    .iter()
                    .map(|a| a.components()[c] as f64)
                    .sum::<f64>()
                    / count
            })
            .collect();
        let var: Vec<f64> = (0..n)
            .map(|c| {
                members
                    .iter()
                    .map(|a| (a.components()[c] as f64 - mean[c]).powi(2))
                    .sum::<f64>()
                    / count
            })
            .collect();
        means.insert(k, mean);
        variances.insert(k, var);
    }
    Ok(TopoStats {
        counts,
        means,
        variances,
    })
}

/// Everything the estimation pipeline reports for one signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub signal: Vec<f64>,
    pub likelihood: f64,
    pub active_path: Vec<MultiIndex>,
    pub poan: Vec<f64>,
    pub topo: TopoStats,
}

pub fn estimate(neurons: &NeuronSet, x: &[f64], dict: &Dictionary) -> Result<EstimationReport> {
    let path = active_path(neurons, x, dict)?;
    Ok(EstimationReport {
        signal: x.to_vec(),
        likelihood: likelihood(neurons, x)?,
        poan: poan(neurons, x, &path)?,
        topo: topo_stats(&path.indexes())?,
        active_path: path.indexes(),
    })
}
