//! Moment learning: Taylor neurons of `ln(1/p₀)` at the origin by central
//! difference quotients, and the moment learning rate.

use rayon::prelude::*;

use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::frequency::Learned;
use crate::grid::GridSpec;
use crate::index::{binomial, Dictionary, Mode, MultiIndex};
use crate::neurons::NeuronSet;
use crate::spline::NaturalCubicSpline;

/// Noise level assumed for resampled values when picking stencil widths.
const STENCIL_NOISE: f64 = 1e-12;

/// Values on the symmetric node lattice `{j·h : |j| ≤ J}` per axis, row-major.
/// The origin is always a node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGrid {
    steps: Vec<f64>,
    half: Vec<usize>,
    values: Vec<f64>,
}

impl NodeGrid {
    pub fn from_fn(steps: Vec<f64>, half: Vec<usize>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Error::check_dim(steps.len(), half.len())?;
        if steps.is_empty() || steps.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidArgument("node steps must be positive".into()));
        }
        let shape: Vec<usize> = half.iter().map(|j| 2 * j + 1).collect();
        let len = shape.iter().product();
        let mut point = vec![0.0; shape.len()];
        let values = (0..len)
            .map(|mut flat| {
                for k in (0..shape.len()).rev() {
                    let j = (flat % shape[k]) as f64 - half[k] as f64;
                    point[k] = j * steps[k];
                    flat /= shape[k];
                }
                f(&point)
            })
            .collect();
        Ok(NodeGrid {
            steps,
            half,
            values,
        })
    }

    /// Resamples cell-centre values of `grid` onto the largest symmetric node
    /// lattice inside the span of the centres, one natural-spline pass per axis.
    pub fn resample(grid: &GridSpec, values: &[f64]) -> Result<Self> {
        Error::check_dim(grid.len(), values.len())?;
        let mut shape = grid.shape();
        let mut current = values.to_vec();
        let mut steps = Vec::new();
        let mut half = Vec::new();
        for (axis, spec) in grid.axes().iter().enumerate() {
            let h = spec.width();
            let centers = spec.centers();
            let (first, last) = (centers[0], centers[centers.len() - 1]);
            if !(first <= 0.0 && last >= 0.0) || centers.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "origin is not inside the grid along axis {axis}"
                )));
            }
            // guard the floor against representation error in h
            let j = ((last / h + 1e-9).floor()).min((-first / h + 1e-9).floor()) as usize;
            let nodes: Vec<f64> = (-(j as i64)..=j as i64).map(|k| k as f64 * h).collect();
            current = resample_axis(&current, &shape, axis, &centers, &nodes)?;
            shape[axis] = nodes.len();
            steps.push(h);
            half.push(j);
        }
        Ok(NodeGrid {
            steps,
            half,
            values: current,
        })
    }

    pub fn dim(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Largest node offset `J` per axis.
    pub fn half_widths(&self) -> &[usize] {
        &self.half
    }

    /// Value at integer node offsets from the origin.
    pub fn at(&self, offsets: &[i64]) -> f64 {
        let mut flat = 0usize;
        for (k, &o) in offsets.iter().enumerate() {
            let width = 2 * self.half[k] + 1;
            flat = flat * width + (o + self.half[k] as i64) as usize;
        }
        self.values[flat]
    }

    pub fn origin_value(&self) -> f64 {
        self.at(&vec![0; self.dim()])
    }
}

fn resample_axis(
    values: &[f64],
    shape: &[usize],
    axis: usize,
    centers: &[f64],
    nodes: &[f64],
) -> Result<Vec<f64>> {
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let len = shape[axis];
    let mut out = vec![0.0; outer * nodes.len() * stride];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * len * stride + s;
            let line: Vec<f64> = (0..len).map(|j| values[base + j * stride]).collect();
            let spline = NaturalCubicSpline::new(centers.to_vec(), line)?;
            let out_base = o * nodes.len() * stride + s;
            for (j, &x) in nodes.iter().enumerate() {
                out[out_base + j * stride] = spline.eval(x);
            }
        }
    }
    Ok(out)
}

/// Stencil stride for a derivative of order `order`: the step `r·h` is aimed
/// at `η^{1/(order+2)}`, balancing truncation against noise amplification,
/// and capped so that the stencil fits within `half` nodes.
pub fn default_stride(order: u64, h: f64, half: usize) -> usize {
    if order == 0 {
        return 1;
    }
    let target = STENCIL_NOISE.powf(1.0 / (order as f64 + 2.0));
    let r = ((target / h).round() as usize).max(1);
    r.min(half / order as usize).max(1)
}

/// Tensor-product central difference quotient of order `α` at the origin,
/// `Π_k (2 r_k h_k)^{-α_k} Σ_j Π_k (−1)^{j_k} C(α_k, j_k) f((α_k − 2j_k) r_k h_k)`.
pub fn central_difference(f: &NodeGrid, alpha: &MultiIndex, strides: &[usize]) -> Result<f64> {
    Error::check_dim(f.dim(), alpha.dim())?;
    Error::check_dim(f.dim(), strides.len())?;
    if !alpha.is_nonnegative() {
        return Err(Error::InvalidArgument(format!(
            "negative difference order {alpha}"
        )));
    }
    let mut stencils: Vec<Vec<(i64, f64)>> = Vec::with_capacity(f.dim());
    for (axis, (&a, &r)) in alpha.components().iter().zip(strides).enumerate() {
        let (a, r) = (a as u64, r.max(1) as u64);
        if a * r > f.half[axis] as u64 {
            return Err(Error::StencilExceedsGrid {
                axis,
                order: a as u32,
            });
        }
        let scale = (2.0 * r as f64 * f.steps[axis]).powi(a as i32);
        stencils.push(
            (0..=a)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let offset = (a as i64 - 2 * j as i64) * r as i64;
                    (offset, sign * binomial(a, j) as f64 / scale)
                })
                .collect(),
        );
    }
    let mut total = 0.0;
    let mut pick = vec![0usize; stencils.len()];
    let mut offsets = vec![0i64; stencils.len()];
    loop {
        let mut w = 1.0;
        for (k, s) in stencils.iter().enumerate() {
            offsets[k] = s[pick[k]].0;
            w *= s[pick[k]].1;
        }
        total += w * f.at(&offsets);
        let mut k = stencils.len();
        loop {
            if k == 0 {
                return Ok(total);
            }
            k -= 1;
            pick[k] += 1;
            if pick[k] < stencils[k].len() {
                break;
            }
            pick[k] = 0;
        }
    }
}

/// `y_α = D^α ln(1/p₀)(0) / α!` from central differences on the resampled
/// node lattice; `D_c` is the resampled value at the origin.
pub fn learn_moment_grid(density: &DensityGrid, dict: &Dictionary) -> Result<Learned> {
    if dict.mode() != Mode::Moment {
        return Err(Error::ModeMismatch {
            expected: Mode::Moment,
            found: dict.mode(),
        });
    }
    Error::check_dim(density.dim(), dict.dim())?;
    if let Some(a) = dict.iter().find(|a| a.components().iter().any(|&c| c > 20)) {
        return Err(Error::InvalidArgument(format!(
            "moment index {a} exceeds order 20 in a component"
        )));
    }
    let (logs, clamped_cells) = density.log_reciprocal();
    let nodes = NodeGrid::resample(&density.grid, &logs)?;
    let coefficients: Vec<f64> = dict
        .indexes()
        .par_iter()
        .map(|a| {
            let strides: Vec<usize> = a
                .components()
                .iter()
                .enumerate()
                .map(|(k, &c)| default_stride(c as u64, nodes.steps[k], nodes.half[k]))
                .collect();
            Ok(central_difference(&nodes, a, &strides)? / a.factorial())
        })
        .collect::<Result<_>>()?;
    let mut set = NeuronSet::new(Mode::Moment, dict.dim())?;
    set.set_dc(nodes.origin_value());
    for (a, y) in dict.iter().zip(coefficients) {
        if !a.is_zero() {
            set.insert(a.clone(), y.into())?;
        }
    }
    Ok(Learned {
        neurons: set,
        clamped_cells,
    })
}

/// Spacing vectors `h_k = x_{k+1} − x_k` of per-axis sorted sample coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingVectors {
    gaps: Vec<Vec<f64>>,
}

impl SpacingVectors {
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                found: samples.len(),
            });
        }
        let n = samples[0].len();
        let mut gaps = vec![vec![0.0; n]; samples.len() - 1];
        for axis in 0..n {
            let mut coords = samples
                .iter()
                .map(|s| {
                    Error::check_dim(n, s.len())?;
                    Ok(s[axis])
                })
                .collect::<Result<Vec<f64>>>()?;
            coords.sort_by(f64::total_cmp);
            for (k, w) in coords.windows(2).enumerate() {
                gaps[k][axis] = w[1] - w[0];
            }
        }
        Ok(SpacingVectors { gaps })
    }

    /// One-dimensional spacings of a uniform grid such as a time axis.
    pub fn uniform(step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step {step} is not positive"
            )));
        }
        if count < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                found: count,
            });
        }
        Ok(SpacingVectors {
            gaps: vec![vec![step]; count - 1],
        })
    }

    pub fn from_gaps(gaps: Vec<Vec<f64>>) -> Result<Self> {
        if gaps.iter().flatten().any(|g| !(*g >= 0.0)) {
            return Err(Error::InvalidArgument("gaps must be non-negative".into()));
        }
        Ok(SpacingVectors { gaps })
    }

    pub fn gaps(&self) -> &[Vec<f64>] {
        &self.gaps
    }
}

/// `1 / max_k |h_k|` over the non-zero spacing vectors.
pub fn moment_learning_rate(spacing: &SpacingVectors) -> Result<f64> {
    let widest = spacing
        .gaps
        .iter()
        .map(|h| h.iter().map(|v| v * v).sum::<f64>().sqrt())
        .filter(|&norm| norm > 0.0)
        .fold(0.0, f64::max);
    if widest == 0.0 {
        return Err(Error::InvalidArgument("all samples coincide".into()));
    }
    Ok(1.0 / widest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{build_dictionary, BoundSpec};

    fn dict(n: usize, bound: u64) -> Dictionary {
        build_dictionary(n, Mode::Moment, &BoundSpec::MaxOrder(bound)).unwrap()
    }

    #[test]
    fn difference_quotients() {
        let sq = NodeGrid::from_fn(vec![0.1], vec![5], |x| x[0] * x[0]).unwrap();
        assert_eq!(
            central_difference(&sq, &MultiIndex::new(vec![2]), &[1]).unwrap(),
            2.0
        );
        let xy = NodeGrid::from_fn(vec![0.1, 0.2], vec![3, 3], |x| x[0] * x[1]).unwrap();
        let d = central_difference(&xy, &MultiIndex::new(vec![1, 1]), &[1, 1]).unwrap();
        assert!((d - 1.0).abs() < 1e-14);
        let sin = NodeGrid::from_fn(vec![1e-3], vec![2], |x| x[0].sin()).unwrap();
        let d = central_difference(&sin, &MultiIndex::new(vec![1]), &[1]).unwrap();
        assert!((d - 1.0).abs() < 1e-6);
        assert!(matches!(
            central_difference(&sin, &MultiIndex::new(vec![3]), &[1]),
            Err(Error::StencilExceedsGrid { axis: 0, order: 3 })
        ));
    }

    #[test]
    fn resampling_keeps_the_origin() {
        let grid = GridSpec::torus(2, 40).unwrap();
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.center(i);
                (x[0] + 2.0 * x[1]).cos()
            })
            .collect();
        let nodes = NodeGrid::resample(&grid, &values).unwrap();
        assert_eq!(nodes.half_widths(), &[19, 19]);
        assert!((nodes.origin_value() - 1.0).abs() < 1e-6);
        assert!((nodes.at(&[3, -2]) - (3.0 * 0.05 - 4.0 * 0.05f64).cos()).abs() < 1e-6);
    }

    #[test]
    fn memoryless_moment_neurons() {
        let grid = GridSpec::torus(1, 1000).unwrap();
        let d = DensityGrid::from_fn(grid, |x| (-2.0 * x[0]).exp()).unwrap();
        let set = learn_moment_grid(&d, &dict(1, 5)).unwrap().neurons;
        assert!((set.get(&MultiIndex::new(vec![1])).unwrap().re - 2.0).abs() < 1e-3);
        assert!((set.dc() - 2f64.sinh().ln()).abs() < 1e-3);
        for k in 2..=5 {
            assert!(set.get(&MultiIndex::new(vec![k])).unwrap().re.abs() < 1e-3);
        }
    }

    #[test]
    fn quadratic_neurons() {
        let energy = |x: &[f64]| -0.5 * x[0] - 2.0 * x[1] + 4.0 * x[0] * x[1] + 3.0 * x[1] * x[1];
        let grid = GridSpec::torus(2, 300).unwrap();
        let d = DensityGrid::from_fn(grid, |x| (-energy(x)).exp()).unwrap();
        let set = learn_moment_grid(&d, &dict(2, 2)).unwrap().neurons;
        let want = [
            ([1, 0], -0.5),
            ([0, 1], -2.0),
            ([1, 1], 4.0),
            ([0, 2], 3.0),
            ([2, 0], 0.0),
        ];
        for (a, y) in want {
            let got = set.get(&MultiIndex::new(a.to_vec())).unwrap().re;
            assert!((got - y).abs() < 1e-6, "{a:?}: {got}");
        }
        assert!((set.dc() - 1.455892).abs() < 1e-3, "{}", set.dc());
    }

    #[test]
    fn auxiliary_density_taylor_terms() {
        let grid = GridSpec::torus(2, 300).unwrap();
        let d =
            DensityGrid::from_fn(grid, |x| crate::density::auxiliary_density(x[0], x[1])).unwrap();
        let set = learn_moment_grid(&d, &dict(2, 2)).unwrap().neurons;
        for a in [[2, 0], [0, 2]] {
            let y = set.get(&MultiIndex::new(a.to_vec())).unwrap().re;
            assert!((y + 0.5).abs() < 1e-3, "{a:?}: {y}");
        }
        for a in [[1, 0], [0, 1], [1, 1]] {
            assert!(set.get(&MultiIndex::new(a.to_vec())).unwrap().re.abs() < 1e-6);
        }
    }

    #[test]
    fn uniform_density_and_mode_checks() {
        let grid = GridSpec::torus(2, 20).unwrap();
        let d = DensityGrid::from_fn(grid, |_| 1.0).unwrap();
        let set = learn_moment_grid(&d, &dict(2, 3)).unwrap().neurons;
        assert!((set.dc() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!(set.neurons().all(|(_, y)| y.norm() < 1e-9));
        let freq = build_dictionary(2, Mode::Frequency, &BoundSpec::MaxOrder(1)).unwrap();
        assert!(matches!(
            learn_moment_grid(&d, &freq),
            Err(Error::ModeMismatch { .. })
        ));
        let shifted = GridSpec::new(vec![crate::grid::Axis::new(0.5, 1.0, 10).unwrap()]).unwrap();
        let d = DensityGrid::from_fn(shifted, |_| 1.0).unwrap();
        assert!(learn_moment_grid(&d, &dict(1, 1)).is_err());
    }

    #[test]
    fn learning_rates() {
        let rate = moment_learning_rate(&SpacingVectors::uniform(0.001, 6284).unwrap()).unwrap();
        assert_eq!(rate, 1000.0);
        let gaps = SpacingVectors::from_gaps(vec![vec![0.1], vec![0.2]]).unwrap();
        assert_eq!(moment_learning_rate(&gaps).unwrap(), 5.0);
        let two = SpacingVectors::from_samples(&[vec![0.25], vec![-0.75]]).unwrap();
        assert_eq!(moment_learning_rate(&two).unwrap(), 1.0);
        let dup = SpacingVectors::from_samples(&[vec![0.5], vec![0.5], vec![0.0]]).unwrap();
        assert_eq!(moment_learning_rate(&dup).unwrap(), 2.0);
        let same = SpacingVectors::from_samples(&[vec![0.5], vec![0.5]]).unwrap();
        assert!(moment_learning_rate(&same).is_err());
    }
}
