//! Multivariate empirical distribution functions and their L¹ distance.

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Step CDF `F̂_m(x) = #{r : X_r ≤ x componentwise} / m` backed by its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    dim: usize,
    samples: Vec<Vec<f64>>,
}

impl EmpiricalCdf {
    pub fn new(samples: Vec<Vec<f64>>) -> Result<Self> {
        let dim = samples.first().map(Vec::len).ok_or(Error::TooFewSamples {
            needed: 1,
            found: 0,
        })?;
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "samples must have dimension >= 1".into(),
            ));
        }
        for s in &samples {
            Error::check_dim(dim, s.len())?;
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite sample {s:?}")));
            }
        }
        Ok(EmpiricalCdf { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.dim, x.len())?;
        let count = self
            .samples
            .iter()
            .filter(|s| s.iter().zip(x).all(|(a, b)| a <= b))
            .count();
        Ok(count as f64 / self.len() as f64)
    }

    /// Evaluates on the tensor product of per-axis ascending node lists,
    /// row-major. Each sample is binned once and the counts are prefix-summed
    /// along every axis, so the cost is `O(m·n·log N + Nⁿ·n)`.
    pub fn eval_on_nodes(&self, nodes: &[Vec<f64>]) -> Result<Vec<f64>> {
        Error::check_dim(self.dim, nodes.len())?;
        let shape: Vec<usize> = nodes.iter().map(Vec::len).collect();
        let total: usize = shape.iter().product();
        let mut counts = vec![0.0; total];
        'samples: for s in &self.samples {
            let mut flat = 0;
            for ((&x, axis_nodes), &len) in s.iter().zip(nodes).zip(&shape) {
                // first node not below the sample: every node from there on counts it
                let j = axis_nodes.partition_point(|&g| g < x);
                if j == len {
                    continue 'samples;
                }
                flat = flat * len + j;
            }
            counts[flat] += 1.0;
        }
        for axis in 0..shape.len() {
            crate::grid::for_each_line(&mut counts, &shape, axis, |line, _| {
                for j in 1..line.len() {
                    line[j] += line[j - 1];
                }
            });
        }
        let m = self.len() as f64;
        Ok(counts.into_iter().map(|c| c / m).collect())
    }

    /// Evaluates at the cell centres of `grid`.
    pub fn eval_on_grid(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let nodes: Vec<Vec<f64>> = grid.axes().iter().map(|a| a.centers()).collect();
        self.eval_on_nodes(&nodes)
    }
}

pub fn empirical_cdf(samples: Vec<Vec<f64>>) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(samples)
}

/// Midpoint-rule approximation of `∫|F̂_a − F̂_b|` over the grid's bounding box.
pub fn l1_distance(a: &EmpiricalCdf, b: &EmpiricalCdf, grid: &GridSpec) -> Result<f64> {
    Error::check_dim(a.dim(), b.dim())?;
    Error::check_dim(a.dim(), grid.dim())?;
    let fa = a.eval_on_grid(grid)?;
    let fb = b.eval_on_grid(grid)?;
    let sum: f64 = fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum * grid.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use proptest::prelude::*;

    #[test]
    fn point_evaluations() {
        let one = EmpiricalCdf::new(vec![vec![0.2, -0.3]]).unwrap();
        assert_eq!(one.eval(&[0.2, -0.3]).unwrap(), 1.0);
        assert_eq!(one.eval(&[0.5, 0.0]).unwrap(), 1.0);
        assert_eq!(one.eval(&[0.1, 0.0]).unwrap(), 0.0);

        let three = EmpiricalCdf::new(vec![vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        assert!((three.eval(&[0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(three.eval(&[-2.0]).unwrap(), 0.0);
        assert!(three.eval(&[0.0, 1.0]).is_err());
        assert!(EmpiricalCdf::new(vec![]).is_err());
    }

    #[test]
    fn grid_evaluation_matches_pointwise() {
        let samples: Vec<Vec<f64>> = (0..97)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin() * 0.9, (1.7 * t).cos() * 0.8]
            })
            .collect();
        let cdf = EmpiricalCdf::new(samples).unwrap();
        let grid = GridSpec::new(vec![
            Axis::torus(13).unwrap(),
            Axis::new(-1.0, 1.0, 7).unwrap(),
        ])
        .unwrap();
        let fast = cdf.eval_on_grid(&grid).unwrap();
        for (flat, v) in fast.iter().enumerate() {
            assert_eq!(*v, cdf.eval(&grid.center(flat)).unwrap());
        }
    }

    #[test]
    fn l1_of_two_point_masses() {
        let a = EmpiricalCdf::new(vec![vec![0.0]]).unwrap();
        let b = EmpiricalCdf::new(vec![vec![1.0]]).unwrap();
        let grid = GridSpec::new(vec![Axis::new(-1.0, 1.0, 20_000).unwrap()]).unwrap();
        assert!((l1_distance(&a, &b, &grid).unwrap() - 1.0).abs() < 2e-4);
        assert_eq!(l1_distance(&a, &a, &grid).unwrap(), 0.0);
    }

    fn cloud(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..n)
    }

    proptest! {
        #[test]
        fn monotone_in_each_component(
            s in cloud(40),
            x in prop::collection::vec(-1.2f64..1.2, 2),
            dx in prop::collection::vec(0.0f64..0.5, 2),
        ) {
            let cdf = EmpiricalCdf::new(s).unwrap();
            let y: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            prop_assert!(cdf.eval(&x).unwrap() <= cdf.eval(&y).unwrap());
        }

        #[test]
        fn l1_is_a_metric_on_grids(a in cloud(20), b in cloud(20), c in cloud(20)) {
            let grid = GridSpec::torus(2, 24).unwrap();
            let (fa, fb, fc) = (
                EmpiricalCdf::new(a).unwrap(),
                EmpiricalCdf::new(b).unwrap(),
                EmpiricalCdf::new(c).unwrap(),
            );
            let ab = l1_distance(&fa, &fb, &grid).unwrap();
            let ba = l1_distance(&fb, &fa, &grid).unwrap();
            let bc = l1_distance(&fb, &fc, &grid).unwrap();
            let ac = l1_distance(&fa, &fc, &grid).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
