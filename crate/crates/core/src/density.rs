//! Smoothed CDF grids, finite-difference density recovery and the analytic
//! auxiliary density of the standing wave.
//!
//! The recovery pipeline is `samples → F̂_m → spline-smoothed CDF grid →
//! ∂ⁿF/∂x₁…∂xₙ by central differences → clamp, renormalize`.

use std::f64::consts::PI;

use crate::ecdf::EmpiricalCdf;
use crate::error::{Error, Result};
use crate::grid::{for_each_line, GridSpec};
use crate::spline::NaturalCubicSpline;

/// Floor applied to densities before taking `ln(1/p)`.
pub const LOG_FLOOR: f64 = 1e-12;

/// Normalizing constant of the auxiliary density, `1/(2π)`.
pub const AUXILIARY_CONSTANT: f64 = 1.0 / (2.0 * PI);

/// Default bins per axis for one- and two-dimensional grids.
pub fn default_bins(n: usize) -> usize {
    if n == 1 {
        1000
    } else {
        300
    }
}

/// CDF values at the cell centres of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfGrid {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl CdfGrid {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        Error::check_dim(grid.len(), values.len())?;
        Ok(CdfGrid { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.center(i))).collect();
        CdfGrid { grid, values }
    }
}

/// Knot thinning for the first smoothing pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SplineSmoothing {
    /// Keep every `q`-th step midpoint as a knot; `None` uses `⌈√k⌉` for a
    /// line with `k` distinct sample values.
    pub knot_stride: Option<usize>,
}

fn step_midpoint_knots(
    mut coords: Vec<f64>,
    m: f64,
    stride: Option<usize>,
) -> (Vec<f64>, Vec<f64>, f64) {
    coords.sort_by(f64::total_cmp);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut before = 0usize;
    let mut i = 0;
    while i < coords.len() {
        let mut j = i + 1;
        while j < coords.len() && coords[j] == coords[i] {
            j += 1;
        }
        let after = before + (j - i);
        xs.push(coords[i]);
        ys.push((before + after) as f64 / (2.0 * m));
        before = after;
        i = j;
    }
    let total = before as f64 / m;
    let q = stride
        .unwrap_or_else(|| (xs.len() as f64).sqrt().ceil() as usize)
        .max(1);
    if q > 1 && xs.len() > 2 {
        let last = xs.len() - 1;
        let keep: Vec<usize> = (0..=last)
            .step_by(q)
            .chain(std::iter::once(last))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        xs = keep.iter().map(|&k| xs[k]).collect();
        ys = keep.iter().map(|&k| ys[k]).collect();
    }
    (xs, ys, total)
}

fn smooth_sample_line(
    coords: Vec<f64>,
    m: f64,
    centers: &[f64],
    stride: Option<usize>,
) -> Vec<f64> {
    if coords.is_empty() {
        return vec![0.0; centers.len()];
    }
    let (xs, ys, total) = step_midpoint_knots(coords, m, stride);
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    let spline = if xs.len() >= 2 {
        NaturalCubicSpline::new(xs, ys).ok()
    } else {
        None
    };
    centers
        .iter()
        .map(|&c| {
            if c < first {
                0.0
            } else if c > last {
                total
            } else {
                match &spline {
                    Some(s) => s.eval(c),
                    // a single distinct value: the step itself
                    None => total,
                }
            }
        })
        .collect()
}

fn smooth_grid_line(line: &mut [f64], centers: &[f64]) {
    let n = line.len();
    let mut xs = vec![centers[0]];
    let mut ys = vec![line[0]];
    for j in 0..n - 1 {
        if line[j + 1] != line[j] {
            xs.push(0.5 * (centers[j] + centers[j + 1]));
            ys.push(0.5 * (line[j] + line[j + 1]));
        }
    }
    if xs.len() == 1 {
        return;
    }
    xs.push(centers[n - 1]);
    ys.push(line[n - 1]);
    if let Ok(s) = NaturalCubicSpline::new(xs, ys) {
        for (v, &c) in line.iter_mut().zip(centers) {
            *v = s.eval(c);
        }
    }
}

/// Spline-smoothed CDF on the `[-1,1)ⁿ` grid with `bins` cells per axis.
pub fn cdf_to_grid(cdf: &EmpiricalCdf, bins: usize) -> Result<CdfGrid> {
    cdf_to_grid_with(cdf, bins, SplineSmoothing::default())
}

/// Smoothing runs axis by axis:
///
/// * along the first axis, each grid line is the exact step function of the
///   samples dominated in the remaining coordinates; a natural cubic spline
///   through (thinned) midpoints of its jumps replaces the steps;
/// * along every further axis, the spline runs through the midpoints of the
///   jumps the line shows on the grid.
///
/// Finally values are clamped to `[0, 1]` and made non-decreasing by a
/// running maximum along each axis.
pub fn cdf_to_grid_with(cdf: &EmpiricalCdf, bins: usize, opts: SplineSmoothing) -> Result<CdfGrid> {
    if bins < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 bins, got {bins}"
        )));
    }
    let n = cdf.dim();
    let samples = cdf.samples();
    if samples.len() >= 2 {
        for axis in 0..n {
            let v0 = samples[0][axis];
            if samples.iter().all(|s| s[axis] == v0) {
                return Err(Error::DegenerateAxis(axis));
            }
        }
    }
    let grid = GridSpec::torus(n, bins)?;
    let shape = grid.shape();
    let centers: Vec<Vec<f64>> = grid.axes().iter().map(|a| a.centers()).collect();
    let m = samples.len() as f64;
    let mut values = vec![0.0; grid.len()];

    for_each_line(&mut values, &shape, 0, |line, idx| {
        let coords: Vec<f64> = samples
            .iter()
            .filter(|s| (1..n).all(|k| s[k] <= centers[k][idx[k]]))
            .map(|s| s[0])
            .collect();
        line.copy_from_slice(&smooth_sample_line(
            coords,
            m,
            &centers[0],
            opts.knot_stride,
        ));
    });
    for (axis, c) in centers.iter().enumerate().skip(1) {
        for_each_line(&mut values, &shape, axis, |line, _| {
            smooth_grid_line(line, c)
        });
    }
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    for axis in 0..n {
        for_each_line(&mut values, &shape, axis, |line, _| {
            for j in 1..line.len() {
                line[j] = line[j].max(line[j - 1]);
            }
        });
    }
    Ok(CdfGrid { grid, values })
}

/// Non-negative density at the cell centres of a grid, normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl DensityGrid {
    /// Wraps raw values; they must be finite, non-negative and of positive mass.
    /// The values are rescaled to unit mass.
    pub fn new(grid: GridSpec, mut values: Vec<f64>) -> Result<Self> {
        Error::check_dim(grid.len(), values.len())?;
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "density value {v} is not a finite non-negative number"
            )));
        }
        let mass: f64 = values.iter().sum::<f64>() * grid.cell_volume();
        if !(mass > 0.0) {
            return Err(Error::Numeric("density has zero mass".into()));
        }
        for v in values.iter_mut() {
            *v /= mass;
        }
        Ok(DensityGrid { grid, values })
    }

    /// Samples `f` at cell centres and normalizes to unit mass.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.center(i))).collect();
        DensityGrid::new(grid, values)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Value of the cell containing `x`, `None` outside the grid.
    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.grid.locate(x).map(|i| self.values[i])
    }

    /// `ln(1/max(p, LOG_FLOOR))` per cell, plus the number of cells that hit the floor.
    pub fn log_reciprocal(&self) -> (Vec<f64>, usize) {
        let mut clamped = 0;
        let logs = self
            .values
            .iter()
            .map(|&p| {
                if p < LOG_FLOOR {
                    clamped += 1;
                }
                -p.max(LOG_FLOOR).ln()
            })
            .collect();
        (logs, clamped)
    }
}

/// Mixed partial `∂ⁿF/∂x₁…∂xₙ` by central differences (one-sided at the
/// ends), negatives clamped to zero, renormalized to unit mass.
pub fn density_from_cdf(cdf: &CdfGrid) -> Result<DensityGrid> {
    let shape = cdf.grid.shape();
    if let Some(axis) = shape.iter().position(|&b| b < 2) {
        return Err(Error::StencilExceedsGrid { axis, order: 1 });
    }
    let mut values = cdf.values.clone();
    for (axis, spec) in cdf.grid.axes().iter().enumerate() {
        let h = spec.width();
        for_each_line(&mut values, &shape, axis, |line, _| {
            let n = line.len();
            let src = line.clone();
            line[0] = (src[1] - src[0]) / h;
            line[n - 1] = (src[n - 1] - src[n - 2]) / h;
            for j in 1..n - 1 {
                line[j] = (src[j + 1] - src[j - 1]) / (2.0 * h);
            }
        });
    }
    for v in values.iter_mut() {
        if !(*v > 0.0) {
            *v = 0.0;
        }
    }
    DensityGrid::new(cdf.grid.clone(), values)
}

/// `C(1 − x² − ẋ²)^{-1/2}` inside the unit disk, `+∞` on the circle, `0` outside.
pub fn auxiliary_density(x: f64, xdot: f64) -> f64 {
    let r2 = x * x + xdot * xdot;
    if r2 < 1.0 {
        AUXILIARY_CONSTANT / (1.0 - r2).sqrt()
    } else if r2 == 1.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    #[test]
    fn equispaced_samples_give_linear_cdf() {
        let mut worst = Vec::new();
        for m in [200usize, 2000, 20000] {
            let samples: Vec<Vec<f64>> = (0..m)
                .map(|i| vec![-1.0 + 2.0 * (i as f64 + 0.5) / m as f64])
                .collect();
            let grid = cdf_to_grid(&EmpiricalCdf::new(samples).unwrap(), 100).unwrap();
            let err = grid
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| (v - (grid.grid.center(i)[0] + 1.0) / 2.0).abs())
                .fold(0.0, f64::max);
            worst.push(err);
        }
        // step midpoints of an equispaced sample sit on the line itself
        assert!(worst.iter().all(|&e| e < 1e-12), "{worst:?}");
    }

    #[test]
    fn single_sample_keeps_endpoints() {
        let g = cdf_to_grid(&EmpiricalCdf::new(vec![vec![0.1]]).unwrap(), 10).unwrap();
        assert_eq!(g.values[0], 0.0);
        assert_eq!(*g.values.last().unwrap(), 1.0);
        assert!(g.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn smoothing_errors() {
        let same = EmpiricalCdf::new(vec![vec![0.2, 0.0], vec![0.2, 0.5]]).unwrap();
        assert!(matches!(
            cdf_to_grid(&same, 10),
            Err(Error::DegenerateAxis(0))
        ));
        let ok = EmpiricalCdf::new(vec![vec![0.2], vec![0.3]]).unwrap();
        assert!(cdf_to_grid(&ok, 3).is_err());
    }

    #[test]
    fn two_dimensional_grid_is_monotone_cdf() {
        let samples: Vec<Vec<f64>> = (0..400)
            .map(|i| {
                let t = i as f64 * 0.05;
                vec![0.9 * t.sin(), 0.9 * t.cos()]
            })
            .collect();
        let g = cdf_to_grid(&EmpiricalCdf::new(samples).unwrap(), 40).unwrap();
        let shape = g.grid.shape();
        assert!(g.values.iter().all(|v| (0.0..=1.0).contains(v)));
        for axis in 0..2 {
            let mut v = g.values.clone();
            for_each_line(&mut v, &shape, axis, |line, _| {
                assert!(line.windows(2).all(|w| w[0] <= w[1]));
            });
        }
        assert!((g.values.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_cdf_differentiates_to_a_quarter() {
        let grid = GridSpec::torus(2, 50).unwrap();
        let cdf = CdfGrid::from_fn(grid, |x| (x[0] + 1.0) * (x[1] + 1.0) / 4.0);
        let d = density_from_cdf(&cdf).unwrap();
        assert!(d.values.iter().all(|v| (v - 0.25).abs() < 1e-12));
        assert!((d.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_is_non_negative_and_normalized() {
        let samples: Vec<Vec<f64>> = (0..3000).map(|i| vec![(i as f64 * 0.0021).sin()]).collect();
        let g = cdf_to_grid(&EmpiricalCdf::new(samples).unwrap(), 500).unwrap();
        let d = density_from_cdf(&g).unwrap();
        assert!(d.values.iter().all(|&v| v >= 0.0));
        assert!((d.mass() - 1.0).abs() < 1e-6);
    }

    fn amplitudes(m: usize, step: f64) -> Vec<Vec<f64>> {
        (0..m).map(|r| vec![(r as f64 * step).sin()]).collect()
    }

    #[test]
    fn amplitude_density_is_arcsine() {
        let g = cdf_to_grid(&EmpiricalCdf::new(amplitudes(6284, 0.001)).unwrap(), 1000).unwrap();
        let d = density_from_cdf(&g).unwrap();
        let mut worst = 0.0f64;
        for (i, &p) in d.values.iter().enumerate() {
            let x = d.grid.center(i)[0];
            if x.abs() <= 0.9 {
                let exact = 1.0 / (PI * (1.0 - x * x).sqrt());
                worst = worst.max((p - exact).abs() / exact);
            }
        }
        assert!(worst <= 0.10, "max relative error {worst}");
    }

    #[test]
    fn amplitude_cdf_distances_shrink() {
        let grid = GridSpec::torus(1, 4000).unwrap();
        let d: Vec<f64> = [500, 1000, 2000]
            .iter()
            .map(|&m| {
                // unit step: an irrational rotation, so every prefix is spread over the orbit
                let a = EmpiricalCdf::new(amplitudes(m, 1.0)).unwrap();
                let b = EmpiricalCdf::new(amplitudes(2 * m, 1.0)).unwrap();
                crate::ecdf::l1_distance(&a, &b, &grid).unwrap()
            })
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }

    #[test]
    fn log_reciprocal_floors() {
        let grid = GridSpec::new(vec![Axis::torus(2).unwrap()]).unwrap();
        let d = DensityGrid::new(grid, vec![0.0, 1.0]).unwrap();
        let (logs, clamped) = d.log_reciprocal();
        assert_eq!(clamped, 1);
        assert!((logs[0] + LOG_FLOOR.ln()).abs() < 1e-12);
        assert!(logs[1].abs() < 1e-15);
    }

    #[test]
    fn auxiliary_density_values() {
        assert!((auxiliary_density(0.0, 0.0) - 0.1592).abs() < 1e-4);
        assert!((auxiliary_density(std::f64::consts::FRAC_1_SQRT_2, 0.0) - 0.2251).abs() < 1e-4);
        assert_eq!(auxiliary_density(2.0, 0.0), 0.0);
        assert_eq!(auxiliary_density(1.0, 0.0), f64::INFINITY);
        assert_eq!(auxiliary_density(0.0, -1.0), f64::INFINITY);
    }

    #[test]
    fn auxiliary_density_has_unit_mass() {
        // polar coordinates with r = sin θ removes the rim singularity:
        // r dr = sin θ cos θ dθ and p_a = C / cos θ
        let n = 200_000;
        let dtheta = std::f64::consts::FRAC_PI_2 / n as f64;
        let radial: f64 = (0..n)
            .map(|k| {
                let th = (k as f64 + 0.5) * dtheta;
                let r = th.sin();
                auxiliary_density(r, 0.0) * r * th.cos() * dtheta
            })
            .sum();
        let mass = 2.0 * PI * radial;
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }
}
