//! Learned neuron sets and energy evaluation.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::index::{Dictionary, Mode, MultiIndex};

/// Relative tolerance on the imaginary part of an energy: `1e-9·(1 + Σ|y_α|)`.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

/// Neurons `y_α` of an energy `E(x; y) = Σ_{α≠0} y_α b_α(x)` plus the DC value
/// `D_c = ln Z`, which is kept under the zero index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "NeuronSetRepr", try_from = "NeuronSetRepr")]
pub struct NeuronSet {
    mode: Mode,
    n: usize,
    coefficients: BTreeMap<MultiIndex, Complex64>,
}

impl NeuronSet {
    /// Empty set with `dc = 0`.
    pub fn new(mode: Mode, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "neuron dimension must be >= 1".into(),
            ));
        }
        let mut coefficients = BTreeMap::new();
        coefficients.insert(MultiIndex::zero(n), Complex64::new(0.0, 0.0));
        Ok(NeuronSet {
            mode,
            n,
            coefficients,
        })
    }

    pub fn from_neurons<I>(mode: Mode, n: usize, dc: f64, neurons: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        let mut set = NeuronSet::new(mode, n)?;
        set.set_dc(dc);
        for (index, value) in neurons {
            set.insert(index, value)?;
        }
        Ok(set)
    }

    /// Real-valued convenience constructor, mostly for moment mode.
    pub fn from_real<I>(mode: Mode, n: usize, dc: f64, neurons: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, f64)>,
    {
        NeuronSet::from_neurons(
            mode,
            n,
            dc,
            neurons
                .into_iter()
                .map(|(a, v)| (MultiIndex::new(a), Complex64::new(v, 0.0))),
        )
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn dc(&self) -> f64 {
        self.coefficients[&MultiIndex::zero(self.n)].re
    }

    pub fn set_dc(&mut self, dc: f64) {
        self.coefficients
            .insert(MultiIndex::zero(self.n), Complex64::new(dc, 0.0));
    }

    /// Inserts or replaces `y_α`. The zero index sets the DC value and must be real,
    /// as must every moment-mode neuron.
    pub fn insert(&mut self, index: MultiIndex, value: Complex64) -> Result<()> {
        Error::check_dim(self.n, index.dim())?;
        if self.mode == Mode::Moment && !index.is_nonnegative() {
            return Err(Error::InvalidArgument(format!(
                "moment neuron {index} has a negative component"
            )));
        }
        if (self.mode == Mode::Moment || index.is_zero()) && value.im != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "neuron {index} must be real, got imaginary part {}",
                value.im
            )));
        }
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "neuron {index} is not finite"
            )));
        }
        self.coefficients.insert(index, value);
        Ok(())
    }

    pub fn get(&self, index: &MultiIndex) -> Option<Complex64> {
        self.coefficients.get(index).copied()
    }

    /// Non-DC neurons in ascending index order.
    pub fn neurons(&self) -> impl Iterator<Item = (&MultiIndex, Complex64)> + '_ {
        self.coefficients
            .iter()
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, v)| (a, *v))
    }

    /// Number of non-DC neurons.
    pub fn len(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_order(&self) -> u64 {
        self.coefficients
            .keys()
            .map(MultiIndex::order)
            .max()
            .unwrap_or(0)
    }

    /// `Σ_{α≠0} |y_α|`.
    pub fn l1_norm(&self) -> f64 {
        self.neurons().map(|(_, v)| v.norm()).sum()
    }

    /// Keeps only neurons whose index lies in `dict`; the DC value is kept.
    pub fn restrict(&self, dict: &Dictionary) -> Result<NeuronSet> {
        self.check_dictionary(dict)?;
        let mut out = NeuronSet::new(self.mode, self.n)?;
        out.set_dc(self.dc());
        for (a, v) in self.neurons() {
            if dict.contains(a) {
                out.coefficients.insert(a.clone(), v);
            }
        }
        Ok(out)
    }

    pub(crate) fn check_dictionary(&self, dict: &Dictionary) -> Result<()> {
        Error::check_dim(self.n, dict.dim())?;
        if dict.mode() != self.mode {
            return Err(Error::ModeMismatch {
                expected: self.mode,
                found: dict.mode(),
            });
        }
        Ok(())
    }

    pub(crate) fn residue_tolerance(&self) -> f64 {
        IMAGINARY_TOLERANCE * (1.0 + self.l1_norm())
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        Error::check_dim(self.n, x.len())?;
        if self.mode == Mode::Frequency && !x.iter().all(|v| (-1.0..1.0).contains(v)) {
            return Err(Error::OutsideTorus(x.to_vec()));
        }
        Ok(())
    }

    /// Complex energy `Σ_{α≠0} y_α b_α(x)` without any residue check.
    pub fn energy_complex(&self, x: &[f64]) -> Result<Complex64> {
        self.check_point(x)?;
        Ok(self.neurons().map(|(a, y)| y * a.basis(x, self.mode)).sum())
    }

    /// Real energy `E(x; y)`; fails if the imaginary part exceeds the residue tolerance.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        let e = self.energy_complex(x)?;
        let tolerance = self.residue_tolerance();
        if e.im.abs() > tolerance {
            return Err(Error::ImaginaryResidue {
                residue: e.im.abs(),
                tolerance,
            });
        }
        Ok(e.re)
    }

    /// Energy at every cell centre of `grid`, row-major.
    pub fn energy_on_grid(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        Error::check_dim(self.n, grid.dim())?;
        let tables = BasisTables::new(grid, self.mode, self.neurons().map(|(a, _)| a));
        let terms: Vec<(Complex64, Vec<&[Complex64]>)> = self
            .neurons()
            .map(|(a, y)| (y, tables.factors(a)))
            .collect();
        let shape = grid.shape();
        let row: usize = shape[1..].iter().product();
        let mut values = vec![0.0; grid.len()];
        let worst_im = values
            .par_chunks_mut(row)
            .enumerate()
            .map(|(i0, chunk)| {
                let mut idx = vec![0usize; shape.len()];
                idx[0] = i0;
                let mut worst = 0.0f64;
                for v in chunk.iter_mut() {
                    let mut e = Complex64::new(0.0, 0.0);
                    for (y, factors) in &terms {
                        let mut t = *y;
                        for (f, &i) in factors.iter().zip(&idx) {
                            t *= f[i];
                        }
                        e += t;
                    }
                    *v = e.re;
                    worst = worst.max(e.im.abs());
                    // odometer over the trailing axes
                    for k in (1..shape.len()).rev() {
                        idx[k] += 1;
                        if idx[k] < shape[k] {
                            break;
                        }
                        idx[k] = 0;
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max);
        let tolerance = self.residue_tolerance();
        if worst_im > tolerance {
            return Err(Error::ImaginaryResidue {
                residue: worst_im,
                tolerance,
            });
        }
        Ok(values)
    }
}

/// Per-axis basis values `b_a(c_j)` at grid centres, shared between indexes
/// with equal components.
pub(crate) struct BasisTables {
    tables: HashMap<(usize, i64), Vec<Complex64>>,
}

impl BasisTables {
    pub(crate) fn new<'a>(
        grid: &GridSpec,
        mode: Mode,
        indexes: impl Iterator<Item = &'a MultiIndex>,
    ) -> Self {
        let mut tables = HashMap::new();
        for a in indexes {
            for (axis, &c) in a.components().iter().enumerate() {
                tables.entry((axis, c)).or_insert_with(|| {
                    grid.axes()[axis]
                        .centers()
                        .into_iter()
                        .map(|x| MultiIndex::new(vec![c]).basis(&[x], mode))
                        .collect()
                });
            }
        }
        BasisTables { tables }
    }

    pub(crate) fn factors(&self, a: &MultiIndex) -> Vec<&[Complex64]> {
        a.components()
            .iter()
            .enumerate()
            .map(|(axis, c)| self.tables[&(axis, *c)].as_slice())
            .collect()
    }
}

/// `max_{α∈D} |E_{p₀}[b_α] − E_p[b_α]|` with `p = e^{-E}/Z` built from `neurons`,
/// both expectations by midpoint quadrature on the density's grid.
pub fn stationarity_residual(
    density: &DensityGrid,
    neurons: &NeuronSet,
    dict: &Dictionary,
) -> Result<f64> {
    neurons.check_dictionary(dict)?;
    let grid = &density.grid;
    let energy = neurons.energy_on_grid(grid)?;
    let shift = energy.iter().copied().fold(f64::INFINITY, f64::min);
    let mut model: Vec<f64> = energy.iter().map(|e| (shift - e).exp()).collect();
    let z: f64 = model.iter().sum::<f64>() * grid.cell_volume();
    for p in model.iter_mut() {
        *p /= z;
    }
    let tables = BasisTables::new(grid, neurons.mode(), dict.iter());
    let vol = grid.cell_volume();
    let cells: Vec<Vec<usize>> = (0..grid.len()).map(|flat| grid.unravel(flat)).collect();
    let residuals: Vec<f64> = dict
        .indexes()
        .par_iter()
        .map(|a| {
            let factors = tables.factors(a);
            let mut diff = Complex64::new(0.0, 0.0);
            for ((p0, p), idx) in density.values.iter().zip(&model).zip(&cells) {
                let mut b = Complex64::new(1.0, 0.0);
                for (f, &i) in factors.iter().zip(idx) {
                    b *= f[i];
                }
                diff += b * (p0 - p);
            }
            (diff * vol).norm()
        })
        .collect();
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuronRepr {
    pub index: MultiIndex,
    pub re: f64,
    pub im: f64,
}

/// JSON layout: `{"mode", "n", "dc", "neurons": [{"index", "re", "im"}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuronSetRepr {
    pub mode: Mode,
    pub n: usize,
    pub dc: f64,
    pub neurons: Vec<NeuronRepr>,
}

impl From<NeuronSet> for NeuronSetRepr {
    fn from(set: NeuronSet) -> Self {
        NeuronSetRepr {
            mode: set.mode,
            n: set.n,
            dc: set.dc(),
            neurons: set
                .neurons()
                .map(|(a, v)| NeuronRepr {
                    index: a.clone(),
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<NeuronSetRepr> for NeuronSet {
    type Error = Error;

    fn try_from(repr: NeuronSetRepr) -> Result<Self> {
        let mut set = NeuronSet::new(repr.mode, repr.n)?;
        set.set_dc(repr.dc);
        for n in repr.neurons {
            if n.index.is_zero() {
                return Err(Error::Parse("the zero index belongs in `dc`".into()));
            }
            if set.coefficients.contains_key(&n.index) {
                return Err(Error::Parse(format!("duplicate neuron {}", n.index)));
            }
            set.insert(n.index, Complex64::new(n.re, n.im))?;
        }
        Ok(set)
    }
}
