//! Cell-centred tensor grids and row-major axis helpers.

use crate::error::{Error, Result};

/// One uniform axis split into `bins` cells; values live at cell centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub bins: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(upper > lower) {
            return Err(Error::InvalidArgument(format!(
                "axis [{lower}, {upper}) with {bins} bins"
            )));
        }
        Ok(Axis { lower, upper, bins })
    }

    /// `[-1, 1)` split into `bins` cells.
    pub fn torus(bins: usize) -> Result<Self> {
        Axis::new(-1.0, 1.0, bins)
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.bins as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.lower + (j as f64 + 0.5) * self.width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins).map(|j| self.center(j)).collect()
    }

    /// Cell holding `x`; the closed upper end maps to the last cell.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lower && x <= self.upper) {
            return None;
        }
        let j = ((x - self.lower) / self.width()).floor() as usize;
        Some(j.min(self.bins - 1))
    }
}

/// Tensor product of [`Axis`] values, flattened row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument(
                "grid needs at least one axis".into(),
            ));
        }
        Ok(GridSpec { axes })
    }

    /// `[-1,1)ⁿ` with `bins` cells per axis.
    pub fn torus(n: usize, bins: usize) -> Result<Self> {
        GridSpec::new((0..n).map(|_| Axis::torus(bins)).collect::<Result<_>>()?)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.bins).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.bins).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::width).product()
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % axis.bins;
            flat /= axis.bins;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.bins + i)
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&j, a)| a.center(j))
            .collect()
    }

    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let idx = x
            .iter()
            .zip(&self.axes)
            .map(|(&xi, a)| a.locate(xi))
            .collect::<Option<Vec<_>>>()?;
        Some(self.ravel(&idx))
    }
}

/// Runs `f` on every 1-D line of a row-major array along `axis`, writing the
/// line back afterwards. The second argument is the multi-index of the line
/// with the `axis` component set to zero.
pub(crate) fn for_each_line(
    values: &mut [f64],
    shape: &[usize],
    axis: usize,
    mut f: impl FnMut(&mut Vec<f64>, &[usize]),
) {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![0.0; len];
    let mut idx = vec![0; shape.len()];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * len * stride + s;
            for (j, v) in line.iter_mut().enumerate() {
                *v = values[base + j * stride];
            }
            // reconstruct the line's multi-index for callers that need coordinates
            let mut rem = o;
            for k in (0..axis).rev() {
                idx[k] = rem % shape[k];
                rem /= shape[k];
            }
            idx[axis] = 0;
            let mut rem = s;
            for k in (axis + 1..shape.len()).rev() {
                idx[k] = rem % shape[k];
                rem /= shape[k];
            }
            f(&mut line, &idx);
            for (j, v) in line.iter().enumerate() {
                values[base + j * stride] = *v;
            }
        }
    }
}
