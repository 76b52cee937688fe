//! Standing-wave sampling, snapshot matrices and dynamic mode decomposition.
//!
//! The DMD fit approximates the Koopman mode decomposition of a trajectory with
//! the identity observable ensemble, so regenerated observables *are* states:
//!
//! ```text
//! Y = U Σ V*          (reduced, truncated at rank_tol · σ_max)
//! Ã = U* Y' V Σ⁻¹,    Ã W = W Λ
//! Φ = Y' V Σ⁻¹ W,     Ω = diag(ln λ_k / h_t),   B = Φ⁺ y₀
//! y(t) ≈ Re Φ exp(Ω t) B
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative singular-value cutoff.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Eigenvalues closer than this (relative to the spectral radius) are one cluster.
const CLUSTER_TOL: f64 = 1e-8;

/// A uniformly time-stepped trajectory of state vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    t0: f64,
    step: f64,
    states: Vec<Vec<f64>>,
}

impl SampleMatrix {
    pub fn new(t0: f64, step: f64, states: Vec<Vec<f64>>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time step {step} must be positive"
            )));
        }
        let n = states.first().map(Vec::len).ok_or(Error::TooFewSamples {
            needed: 1,
            found: 0,
        })?;
        if n == 0 {
            return Err(Error::InvalidArgument(
                "states must have dimension >= 1".into(),
            ));
        }
        for s in &states {
            Error::check_dim(n, s.len())?;
        }
        Ok(SampleMatrix { t0, step, states })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn into_states(self) -> Vec<Vec<f64>> {
        self.states
    }

    pub fn time(&self, r: usize) -> f64 {
        self.t0 + r as f64 * self.step
    }

    /// Keeps only the listed state components, in the given order.
    pub fn select(&self, columns: &[usize]) -> Result<SampleMatrix> {
        if columns.is_empty() {
            return Err(Error::InvalidArgument("no columns selected".into()));
        }
        if let Some(&c) = columns.iter().find(|&&c| c >= self.dim()) {
            return Err(Error::InvalidArgument(format!(
                "column {c} out of range for dimension {}",
                self.dim()
            )));
        }
        let states = self
            .states
            .iter()
            .map(|s| columns.iter().map(|&c| s[c]).collect())
            .collect();
        SampleMatrix::new(self.t0, self.step, states)
    }
}

/// Number of grid times `t₀ + r·h ≤ t₁`.
pub fn time_grid_len(t0: f64, t1: f64, step: f64) -> usize {
    // relative slack absorbs representation error in (t₁ − t₀)/h
    ((t1 - t0) / step * (1.0 + 1e-12)).floor() as usize + 1
}

/// Exact solution `(A sin t, A cos t)` of `ẍ + x = 0` on `t₀ + r·h ≤ t₁`.
pub fn simulate_standing_wave(t0: f64, t1: f64, step: f64, amplitude: f64) -> Result<SampleMatrix> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step {step} must be positive"
        )));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "empty time range [{t0}, {t1}]"
        )));
    }
    if !(amplitude.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "amplitude {amplitude} outside [-1, 1]"
        )));
    }
    let m = time_grid_len(t0, t1, step);
    let states = (0..m)
        .map(|r| {
            let t = t0 + r as f64 * step;
            vec![amplitude * t.sin(), amplitude * t.cos()]
        })
        .collect();
    SampleMatrix::new(t0, step, states)
}

/// Snapshot pair `(Y, Y')`: columns `0..m−1` and `1..m` of the trajectory.
pub fn build_snapshots(samples: &SampleMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: m,
        });
    }
    let n = samples.dim();
    let s = samples.states();
    let y = DMatrix::from_fn(n, m - 1, |i, j| s[j][i]);
    let yp = DMatrix::from_fn(n, m - 1, |i, j| s[j + 1][i]);
    Ok((y, yp))
}

/// Fitted DMD approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct DmdModel {
    /// Number of singular directions retained.
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    /// `n × k` modes, one column per kept eigenvalue.
    pub modes: DMatrix<Complex64>,
    /// `ln λ_k / h_t`, principal branch.
    pub exponents: Vec<Complex64>,
    pub amplitudes: Vec<Complex64>,
    pub step: f64,
    pub t0: f64,
    /// Eigenvalues equal to zero; their logarithm is undefined so the mode is dropped.
    pub dropped: Vec<Complex64>,
}

fn null_vectors(a: &DMatrix<f64>, lambda: Complex64, count: usize) -> Vec<Vec<Complex64>> {
    let r = a.nrows();
    let shifted = DMatrix::from_fn(r, r, |i, j| {
        let v = Complex64::new(a[(i, j)], 0.0);
        if i == j {
            v - lambda
        } else {
            v
        }
    });
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    // singular values are sorted descending; the null space sits in the last rows
    (r - count..r)
        .map(|row| (0..r).map(|j| v_t[(row, j)].conj()).collect())
        .collect()
}

/// DMD of the snapshot pair with a relative singular-value cutoff.
pub fn dmd_fit(y: &DMatrix<f64>, yp: &DMatrix<f64>, step: f64, rank_tol: f64) -> Result<DmdModel> {
    dmd_fit_at(y, yp, step, rank_tol, 0.0)
}

/// Like [`dmd_fit`], recording `t0` as the time of the first snapshot.
pub fn dmd_fit_at(
    y: &DMatrix<f64>,
    yp: &DMatrix<f64>,
    step: f64,
    rank_tol: f64,
    t0: f64,
) -> Result<DmdModel> {
    Error::check_dim(y.nrows(), yp.nrows())?;
    Error::check_dim(y.ncols(), yp.ncols())?;
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step {step} must be positive"
        )));
    }
    if y.ncols() == 0 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: 1,
        });
    }
    let n = y.nrows();
    let svd = y.clone().svd(true, true);
    let sigma = svd.singular_values.as_slice();
    let smax = sigma.first().copied().unwrap_or(0.0);
    if !(smax > 0.0) {
        return Err(Error::RankZero);
    }
    let rank = sigma
        .iter()
        .take_while(|&&s| s > 0.0 && s >= rank_tol * smax)
        .count();
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let u_r = u.columns(0, rank).into_owned();
    let v_r = v_t.rows(0, rank).transpose();
    let sigma_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        rank,
        sigma[..rank].iter().map(|s| 1.0 / s),
    ));
    let yv_sinv = yp * &v_r * &sigma_inv;
    let a_tilde = u_r.transpose() * &yv_sinv;

    let mut eigenvalues: Vec<Complex64> = a_tilde.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let radius = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);

    // eigenvectors, one null-space basis per cluster of equal eigenvalues
    let mut w_cols: Vec<Vec<Complex64>> = Vec::with_capacity(rank);
    let mut i = 0;
    while i < eigenvalues.len() {
        let mut j = i + 1;
        while j < eigenvalues.len()
            && (eigenvalues[j] - eigenvalues[i]).norm() <= CLUSTER_TOL * radius.max(1.0)
        {
            j += 1;
        }
        let mean = eigenvalues[i..j].iter().sum::<Complex64>() / (j - i) as f64;
        w_cols.extend(null_vectors(&a_tilde, mean, j - i));
        i = j;
    }

    let zero_tol = 1e-13 * radius.max(f64::MIN_POSITIVE);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (k, lambda) in eigenvalues.iter().enumerate() {
        if lambda.norm() <= zero_tol {
            dropped.push(*lambda);
        } else {
            kept.push(k);
        }
    }
    if kept.is_empty() {
        return Err(Error::Numeric("every DMD eigenvalue is zero".into()));
    }

    let w = DMatrix::from_fn(rank, kept.len(), |i, c| w_cols[kept[c]][i]);
    let yv_c = yv_sinv.map(|x| Complex64::new(x, 0.0));
    let modes = yv_c * w;
    let eigenvalues: Vec<Complex64> = kept.iter().map(|&k| eigenvalues[k]).collect();
    let exponents = eigenvalues.iter().map(|l| l.ln() / step).collect();

    let y0 = DMatrix::from_fn(n, 1, |i, _| Complex64::new(y[(i, 0)], 0.0));
    let pinv = modes
        .clone()
        .pseudo_inverse(1e-14)
        .map_err(|e| Error::Numeric(format!("mode pseudo-inverse: {e}")))?;
    let amplitudes = (pinv * y0).iter().copied().collect();

    Ok(DmdModel {
        rank,
        singular_values: sigma[..rank].to_vec(),
        eigenvalues,
        modes,
        exponents,
        amplitudes,
        step,
        t0,
        dropped,
    })
}

/// Fits a DMD model directly on a trajectory.
pub fn dmd_fit_samples(samples: &SampleMatrix, rank_tol: f64) -> Result<DmdModel> {
    let (y, yp) = build_snapshots(samples)?;
    dmd_fit_at(&y, &yp, samples.step(), rank_tol, samples.t0())
}

impl DmdModel {
    pub fn dim(&self) -> usize {
        self.modes.nrows()
    }

    /// Complex observable `Φ exp(Ω t) B` at elapsed time `t` since the first snapshot.
    pub fn evaluate_complex(&self, t: f64) -> Vec<Complex64> {
        let coeffs: Vec<Complex64> = self
            .exponents
            .iter()
            .zip(&self.amplitudes)
            .map(|(w, b)| (w * t).exp() * b)
            .collect();
        (0..self.dim())
            .map(|i| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| self.modes[(i, k)] * c)
                    .sum()
            })
            .collect()
    }

    /// Real state at elapsed time `t`.
    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        self.evaluate_complex(t).iter().map(|z| z.re).collect()
    }

    /// States at `t₀ + r·h_t` for `r = 0..steps`.
    pub fn reconstruct(&self, steps: usize) -> Result<SampleMatrix> {
        if steps == 0 {
            return Err(Error::InvalidArgument("reconstruction needs R >= 1".into()));
        }
        let states = (0..steps)
            .map(|r| self.evaluate(r as f64 * self.step))
            .collect();
        SampleMatrix::new(self.t0, self.step, states)
    }

    /// States on a new uniform grid `t₀ + r·step ≤ t_end`; `step` need not be a
    /// multiple of the training step.
    pub fn regenerate(&self, t_end: f64, step: f64) -> Result<SampleMatrix> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time step {step} must be positive"
            )));
        }
        if !(t_end > self.t0) {
            return Err(Error::InvalidArgument(format!(
                "regeneration end {t_end} precedes t0 = {}",
                self.t0
            )));
        }
        let m = time_grid_len(self.t0, t_end, step);
        let states = (0..m).map(|r| self.evaluate(r as f64 * step)).collect();
        SampleMatrix::new(self.t0, step, states)
    }

    /// `(λ_k, ln λ_k / h_t)` sorted by the imaginary part of the exponent.
    pub fn spectrum(&self) -> Vec<(Complex64, Complex64)> {
        let mut out: Vec<(Complex64, Complex64)> = self
            .eigenvalues
            .iter()
            .copied()
            .zip(self.exponents.iter().copied())
            .collect();
        out.sort_by(|a, b| a.1.im.total_cmp(&b.1.im).then(a.1.re.total_cmp(&b.1.re)));
        out
    }
}

pub fn dmd_reconstruct(model: &DmdModel, steps: usize) -> Result<SampleMatrix> {
    model.reconstruct(steps)
}

pub fn dmd_spectrum(model: &DmdModel) -> Vec<(Complex64, Complex64)> {
    model.spectrum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRepr {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexRepr {
    fn from(z: Complex64) -> Self {
        ComplexRepr { re: z.re, im: z.im }
    }
}

impl From<ComplexRepr> for Complex64 {
    fn from(z: ComplexRepr) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// JSON form of a [`DmdModel`]; `modes` is stored column by column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DmdModelRepr {
    pub rank: usize,
    pub step: f64,
    pub t0: f64,
    pub singular_values: Vec<f64>,
    pub eigenvalues: Vec<ComplexRepr>,
    pub exponents: Vec<ComplexRepr>,
    pub modes: Vec<Vec<ComplexRepr>>,
    pub amplitudes: Vec<ComplexRepr>,
    #[serde(default)]
    pub dropped: Vec<ComplexRepr>,
}

impl From<&DmdModel> for DmdModelRepr {
    fn from(m: &DmdModel) -> Self {
        let conv = |v: &[Complex64]| v.iter().map(|&z| z.into()).collect::<Vec<ComplexRepr>>();
        DmdModelRepr {
            rank: m.rank,
            step: m.step,
            t0: m.t0,
            singular_values: m.singular_values.clone(),
            eigenvalues: conv(&m.eigenvalues),
            exponents: conv(&m.exponents),
            modes: m
                .modes
                .column_iter()
                .map(|c| c.iter().map(|&z| z.into()).collect())
                .collect(),
            amplitudes: conv(&m.amplitudes),
            dropped: conv(&m.dropped),
        }
    }
}

impl TryFrom<DmdModelRepr> for DmdModel {
    type Error = Error;

    fn try_from(r: DmdModelRepr) -> Result<Self> {
        let k = r.eigenvalues.len();
        if r.modes.len() != k || r.amplitudes.len() != k || r.exponents.len() != k {
            return Err(Error::Parse(
                "DMD model: eigenvalue, mode, exponent and amplitude counts differ".into(),
            ));
        }
        let n = r.modes.first().map_or(0, Vec::len);
        if n == 0 || r.modes.iter().any(|c| c.len() != n) {
            return Err(Error::Parse("DMD model: ragged or empty modes".into()));
        }
        let modes = DMatrix::from_fn(n, k, |i, j| r.modes[j][i].into());
        let conv = |v: Vec<ComplexRepr>| v.into_iter().map(Complex64::from).collect();
        Ok(DmdModel {
            rank: r.rank,
            singular_values: r.singular_values,
            eigenvalues: conv(r.eigenvalues),
            modes,
            exponents: conv(r.exponents),
            amplitudes: conv(r.amplitudes),
            step: r.step,
            t0: r.t0,
            dropped: conv(r.dropped),
        })
    }
}
