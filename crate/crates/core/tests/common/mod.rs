//! Strategies and invariant checks shared by the property tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::cmp::Ordering;

use nalgebra::DMatrix;
use pnn_core::index::binomial;
use pnn_core::*;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = std::result::Result<(), TestCaseError>;

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// Conjugate-symmetric frequency neurons with components in `-order..=order`
/// and `Σ|y_α| ≤ budget`.
pub fn trig_energy(
    n: usize,
    order: i64,
    max_terms: usize,
    budget: f64,
) -> impl Strategy<Value = NeuronSet> {
    prop::collection::vec(
        (
            prop::collection::vec(-order..=order, n),
            -1.0f64..1.0,
            -1.0f64..1.0,
        ),
        0..=max_terms,
    )
    .prop_map(move |terms| {
        let mut set = NeuronSet::new(Mode::Frequency, n).unwrap();
        for (a, re, im) in terms {
            let alpha = MultiIndex::new(a);
            if alpha.is_zero() {
                continue;
            }
            let y = Complex64::new(re, im);
            set.insert(alpha.neg(), y.conj()).unwrap();
            set.insert(alpha, y).unwrap();
        }
        let norm = set.l1_norm();
        if norm > budget {
            let scale = budget / norm;
            let scaled: Vec<(MultiIndex, Complex64)> =
                set.neurons().map(|(a, y)| (a.clone(), y * scale)).collect();
            set = NeuronSet::from_neurons(Mode::Frequency, n, 0.0, scaled).unwrap();
        }
        set
    })
}

fn density_of(set: &NeuronSet, bins: usize) -> DensityGrid {
    let grid = GridSpec::torus(set.dim(), bins).unwrap();
    let energy = set.energy_on_grid(&grid).unwrap();
    DensityGrid::new(grid, energy.iter().map(|e| (-e).exp()).collect()).unwrap()
}

fn freq_dict(n: usize, order: u64) -> Dictionary {
    build_dictionary(n, Mode::Frequency, &BoundSpec::MaxOrder(order)).unwrap()
}

/// Learning `e^{-E}/Z` on a grid recovers every neuron of `E`.
pub fn check_round_trip(set: &NeuronSet) -> Check {
    let d = density_of(set, 32);
    let dict = freq_dict(set.dim(), 2 * 3);
    let learned = learn_frequency_grid(&d, &dict).unwrap().neurons;
    for a in dict.iter().filter(|a| !a.is_zero()) {
        let want = set.get(a).unwrap_or_default();
        let got = learned.get(a).unwrap();
        if (got - want).norm() > 1e-6 {
            return Err(fail(format!("{a}: learned {got}, expected {want}")));
        }
    }
    Ok(())
}

/// Learned neurons of a real positive grid satisfy `y_{-α} = conj(y_α)`.
pub fn check_conjugate_symmetry(values: &[f64], bins: usize) -> Check {
    let grid = GridSpec::torus(2, bins).unwrap();
    let d = DensityGrid::new(grid, values.to_vec()).unwrap();
    let learned = learn_frequency_grid(&d, &freq_dict(2, 4)).unwrap().neurons;
    for (a, y) in learned.neurons() {
        let mirror = learned.get(&a.neg()).unwrap();
        if (mirror - y.conj()).norm() > 1e-10 {
            return Err(fail(format!("{a}: {y} vs mirror {mirror}")));
        }
    }
    Ok(())
}

pub fn check_stationarity(set: &NeuronSet) -> Check {
    let d = density_of(set, 32);
    let dict = freq_dict(set.dim(), 6);
    let learned = learn_frequency_grid(&d, &dict).unwrap().neurons;
    let residual = stationarity_residual(&d, &learned, &dict).unwrap();
    if residual > 1e-5 {
        return Err(fail(format!("stationarity residual {residual}")));
    }
    Ok(())
}

/// `min ln(1/p₀) − D_c ≤ E ≤ max ln(1/p₀) − D_c` on the grid.
pub fn check_energy_bounds(set: &NeuronSet) -> Check {
    let d = density_of(set, 32);
    let learned = learn_frequency_grid(&d, &freq_dict(set.dim(), 6))
        .unwrap()
        .neurons;
    let (logs, _) = d.log_reciprocal();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min) - learned.dc();
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - learned.dc();
    for e in learned.energy_on_grid(&d.grid).unwrap() {
        if e < lo - 1e-6 || e > hi + 1e-6 {
            return Err(fail(format!("energy {e} outside [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// `∫|e^{-E} − e^{-E_N}| ≤ (e^{Σ_{|α|>N}|y_α|} − 1)·Z`, both sides on one grid.
pub fn check_truncation(set: &NeuronSet, max_order: u64) -> Check {
    let bins = 64;
    let (cut, bound) = truncate_energy(set, max_order, bins).unwrap();
    let grid = GridSpec::torus(set.dim(), bins).unwrap();
    let full = set.energy_on_grid(&grid).unwrap();
    let part = cut.energy_on_grid(&grid).unwrap();
    let gap: f64 = full
        .iter()
        .zip(&part)
        .map(|(a, b)| ((-a).exp() - (-b).exp()).abs())
        .sum::<f64>()
        * grid.cell_volume();
    if gap > bound * (1.0 + 1e-12) + 1e-300 {
        return Err(fail(format!("gap {gap} exceeds bound {bound}")));
    }
    Ok(())
}

fn profile(coeffs: &[f64], x: f64) -> f64 {
    // a smooth positive 1-D density factor
    let s: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * ((k + 1) as f64 * x + 0.3 * k as f64).sin())
        .sum();
    s.exp()
}

pub fn separable_profiles() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-0.5f64..0.5, 1..4),
        prop::collection::vec(-0.5f64..0.5, 1..4),
    )
}

/// Product densities have no frequency neurons with two non-zero components.
pub fn check_frequency_separability(f: &[f64], g: &[f64]) -> Check {
    let grid = GridSpec::torus(2, 48).unwrap();
    let d = DensityGrid::from_fn(grid, |x| profile(f, x[0]) * profile(g, x[1])).unwrap();
    let learned = learn_frequency_grid(&d, &freq_dict(2, 6)).unwrap().neurons;
    for (a, y) in learned.neurons() {
        if a.support() >= 2 && y.norm() > 1e-8 {
            return Err(fail(format!("{a}: off-axis neuron {y}")));
        }
    }
    Ok(())
}

pub fn check_moment_separability(f: &[f64], g: &[f64]) -> Check {
    let grid = GridSpec::torus(2, 120).unwrap();
    let d = DensityGrid::from_fn(grid, |x| profile(f, x[0]) * profile(g, x[1])).unwrap();
    let dict = build_dictionary(2, Mode::Moment, &BoundSpec::MaxOrder(4)).unwrap();
    let learned = learn_moment_grid(&d, &dict).unwrap().neurons;
    for (a, y) in learned.neurons() {
        if a.support() >= 2 && y.norm() > 1e-6 {
            return Err(fail(format!("{a}: off-axis neuron {y}")));
        }
    }
    Ok(())
}

/// `q(x) = Σ c_α x^α` over `1 ≤ |α| ≤ 2` in two variables.
pub fn quadratic() -> impl Strategy<Value = Vec<(Vec<i64>, f64)>> {
    prop::collection::vec(-1.5f64..1.5, 5).prop_map(|c| {
        let exps = [vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]];
        exps.into_iter().zip(c).collect()
    })
}

pub fn check_polynomial_exactness(q: &[(Vec<i64>, f64)]) -> Check {
    let set = NeuronSet::from_real(Mode::Moment, 2, 0.0, q.to_vec()).unwrap();
    let grid = GridSpec::torus(2, 300).unwrap();
    let d = DensityGrid::from_fn(grid, |x| (-set.energy(x).unwrap()).exp()).unwrap();
    let dict = build_dictionary(2, Mode::Moment, &BoundSpec::MaxOrder(2)).unwrap();
    let learned = learn_moment_grid(&d, &dict).unwrap().neurons;
    for (a, c) in q {
        let got = learned.get(&MultiIndex::new(a.clone())).unwrap().re;
        if (got - c).abs() > 1e-6 {
            return Err(fail(format!("{a:?}: learned {got}, expected {c}")));
        }
    }
    let residual = stationarity_residual(&d, &learned, &dict).unwrap();
    if residual > 1e-4 {
        return Err(fail(format!("moment stationarity residual {residual}")));
    }
    Ok(())
}

pub fn cloud(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..max)
}

pub fn check_ecdf_monotone(samples: Vec<Vec<f64>>, x: &[f64], dx: &[f64]) -> Check {
    let cdf = EmpiricalCdf::new(samples).unwrap();
    let y: Vec<f64> = x.iter().zip(dx).map(|(a, d)| a + d).collect();
    let (fx, fy) = (cdf.eval(x).unwrap(), cdf.eval(&y).unwrap());
    if fx > fy {
        return Err(fail(format!("F({x:?}) = {fx} > F({y:?}) = {fy}")));
    }
    Ok(())
}

pub fn check_l1_metric(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>>) -> Check {
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
    let aa = l1_distance(&fa, &fa, &grid).unwrap();
    if !(ab >= 0.0 && aa == 0.0 && (ab - ba).abs() < 1e-15 && ac <= ab + bc + 1e-12) {
        return Err(fail(format!("ab={ab} ba={ba} bc={bc} ac={ac} aa={aa}")));
    }
    Ok(())
}

pub fn index_triple() -> impl Strategy<Value = (MultiIndex, MultiIndex, MultiIndex)> {
    let one = || prop::collection::vec(-3i64..=3, 3).prop_map(MultiIndex::new);
    (one(), one(), one())
}

pub fn check_total_order(a: &MultiIndex, b: &MultiIndex, c: &MultiIndex) -> Check {
    let ab = compare(a, b).unwrap();
    let ba = compare(b, a).unwrap();
    if ab != ba.reverse() {
        return Err(fail(format!("antisymmetry fails for {a}, {b}")));
    }
    if (ab == Ordering::Equal) != (a == b) {
        return Err(fail(format!("equality mismatch for {a}, {b}")));
    }
    let bc = compare(b, c).unwrap();
    if ab != Ordering::Greater
        && bc != Ordering::Greater
        && compare(a, c).unwrap() == Ordering::Greater
    {
        return Err(fail(format!("transitivity fails for {a} <= {b} <= {c}")));
    }
    if a.order() < b.order() && ab != Ordering::Less {
        return Err(fail(format!("order rule fails for {a}, {b}")));
    }
    Ok(())
}

/// Real `n × n` dynamics with a prescribed spectrum: a real eigenvalue, or a
/// rotation-scaling block for a conjugate pair, conjugated by a perturbed identity.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub spectrum: Vec<Complex64>,
    pub x0: Vec<f64>,
}

pub fn linear_system() -> impl Strategy<Value = LinearSystem> {
    (
        2usize..=3,
        0.4f64..1.05,
        0.3f64..2.5,
        prop::collection::vec(-0.95f64..0.95, 3),
        prop::collection::vec(-0.25f64..0.25, 9),
        prop::collection::vec(0.5f64..1.0, 3),
        any::<bool>(),
    )
        .prop_filter_map(
            "eigenvalues must be well separated",
            |(n, r, theta, reals, p, x0, pair)| {
                let mut block = DMatrix::zeros(n, n);
                let mut spectrum = Vec::new();
                let mut k = 0;
                if pair {
                    block[(0, 0)] = r * theta.cos();
                    block[(0, 1)] = -r * theta.sin();
                    block[(1, 0)] = r * theta.sin();
                    block[(1, 1)] = r * theta.cos();
                    spectrum.push(Complex64::from_polar(r, theta));
                    spectrum.push(Complex64::from_polar(r, -theta));
                    k = 2;
                }
                for (i, &l) in reals.iter().enumerate().take(n - k) {
                    block[(k + i, k + i)] = l;
                    spectrum.push(Complex64::new(l, 0.0));
                }
                for i in 0..spectrum.len() {
                    if spectrum[i].norm() < 0.2 {
                        return None;
                    }
                    for j in 0..i {
                        if (spectrum[i] - spectrum[j]).norm() < 0.2 {
                            return None;
                        }
                    }
                }
                let p =
                    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + p[i * 3 + j]);
                let p_inv = p.clone().try_inverse()?;
                Some(LinearSystem {
                    matrix: &p * block * p_inv,
                    spectrum,
                    x0: x0[..n].to_vec(),
                })
            },
        )
}

pub fn check_dmd_spectrum(sys: &LinearSystem) -> Check {
    let n = sys.matrix.nrows();
    let mut x = nalgebra::DVector::from_column_slice(&sys.x0);
    let mut states = Vec::new();
    for _ in 0..(3 * n + 4) {
        states.push(x.as_slice().to_vec());
        x = &sys.matrix * x;
    }
    let samples = SampleMatrix::new(0.0, 0.1, states.clone()).unwrap();
    let model = dmd_fit_samples(&samples, 1e-10).unwrap();
    if model.rank > n.min(states.len() - 1) {
        return Err(fail(format!("rank {} too large", model.rank)));
    }
    let mut got = model.eigenvalues.clone();
    let mut want = sys.spectrum.clone();
    let key = |a: &Complex64, b: &Complex64| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re));
    got.sort_by(key);
    want.sort_by(key);
    if got.len() != want.len() {
        return Err(fail(format!("eigenvalues {got:?} vs {want:?}")));
    }
    for (g, w) in got.iter().zip(&want) {
        if (g - w).norm() > 1e-9 {
            return Err(fail(format!("eigenvalue {g} vs {w}")));
        }
    }
    let first = model.evaluate_complex(0.0);
    for (z, s) in first.iter().zip(&states[0]) {
        if (z.re - s).abs() > 1e-9 || z.im.abs() > 1e-9 {
            return Err(fail(format!("reconstruction at r=0: {z} vs {s}")));
        }
    }
    for r in 0..states.len() {
        if model
            .evaluate_complex(r as f64 * 0.1)
            .iter()
            .any(|z| z.im.abs() > 1e-9)
        {
            return Err(fail(format!("imaginary residue at step {r}")));
        }
    }
    Ok(())
}

pub fn check_moment_cell_sizes() -> Check {
    for n in 1..=4usize {
        for k in 0..=6u64 {
            let cell = enumerate_cell(n, k, Mode::Moment);
            let want = binomial(n as u64 + k - 1, k) as usize;
            if cell.len() != want {
                return Err(fail(format!("n={n}, k={k}: {} vs {want}", cell.len())));
            }
        }
    }
    Ok(())
}
