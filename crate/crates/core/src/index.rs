//! Multi-indexes, the neuron ordering, cells, dictionaries and evaluation vectors.
//!
//! Neurons are addressed by multi-indexes `α ∈ ℤⁿ` (frequency mode) or `α ∈ ℕⁿ`
//! (moment mode). They are ordered first by total order `|α| = Σ|αᵢ|` and then,
//! among indexes of equal order, by the component at the *largest* position
//! where the two differ. For `n = 2` the first cells read
//!
//! ```text
//! (0,0) < (0,-1) < (-1,0) < (1,0) < (0,1) < (0,-2) < (-1,-1) < (1,-1) < ...
//! ```

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which basis the neurons expand the energy in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Fourier basis `ω_α(x) = exp(iπ α·x)` on the torus `[-1,1)ⁿ`.
    Frequency,
    /// Power basis `x^α` around the origin.
    Moment,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Frequency => "frequency",
            Mode::Moment => "moment",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "frequency" | "freq" => Ok(Mode::Frequency),
            "moment" => Ok(Mode::Moment),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// An n-tuple of integers addressing one neuron.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(components: Vec<i64>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    /// Total order `|α| = Σ|αᵢ|`.
    pub fn order(&self) -> u64 {
        self.0.iter().map(|a| a.unsigned_abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&a| a >= 0)
    }

    /// Number of nonzero components.
    pub fn support(&self) -> usize {
        self.0.iter().filter(|&&a| a != 0).count()
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Result<MultiIndex> {
        Error::check_dim(self.dim(), other.dim())?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn neg(&self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| -a).collect())
    }

    /// ℓ¹ distance `Σ|αᵢ − βᵢ|`.
    pub fn l1_distance(&self, other: &MultiIndex) -> Result<u64> {
        Error::check_dim(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).unsigned_abs())
            .sum())
    }

    /// `α! = Π αᵢ!` for non-negative indexes, exact up to 20! per component.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| factorial(a.unsigned_abs()) as f64)
            .product()
    }

    /// Frequency-mode basis value `exp(iπ α·x)`.
    pub fn fourier(&self, x: &[f64]) -> Complex64 {
        let phase: f64 = self.0.iter().zip(x).map(|(&a, &xi)| a as f64 * xi).sum();
        Complex64::from_polar(1.0, PI * phase)
    }

    /// Moment-mode basis value `x^α`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }

    pub fn basis(&self, x: &[f64], mode: Mode) -> Complex64 {
        match mode {
            Mode::Frequency => self.fourier(x),
            Mode::Moment => Complex64::new(self.monomial(x), 0.0),
        }
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

fn order_then_colex(a: &[i64], b: &[i64]) -> Ordering {
    let oa: u64 = a.iter().map(|x| x.unsigned_abs()).sum();
    let ob: u64 = b.iter().map(|x| x.unsigned_abs()).sum();
    oa.cmp(&ob).then_with(|| {
        a.iter()
            .zip(b)
            .rev()
            .map(|(x, y)| x.cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        // mixed dimensions never meet inside a dictionary; length keeps Ord total
        self.dim()
            .cmp(&other.dim())
            .then_with(|| order_then_colex(&self.0, &other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The neuron ordering: total order first, then the component at the largest
/// differing position.
pub fn compare(a: &MultiIndex, b: &MultiIndex) -> Result<Ordering> {
    Error::check_dim(a.dim(), b.dim())?;
    Ok(order_then_colex(&a.0, &b.0))
}

pub(crate) fn factorial(k: u64) -> u64 {
    assert!(k <= 20, "factorial overflows u64 beyond 20!");
    (1..=k).product()
}

/// `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// All indexes of one total order, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub order: u64,
    pub indexes: Vec<MultiIndex>,
}

impl Cell {
    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }
}

fn push_compositions(
    n: usize,
    remaining: i64,
    signed: bool,
    prefix: &mut Vec<i64>,
    out: &mut Vec<MultiIndex>,
) {
    if prefix.len() == n - 1 {
        prefix.push(remaining);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        if signed && remaining != 0 {
            prefix.push(-remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
        }
        return;
    }
    for a in 0..=remaining {
        prefix.push(a);
        push_compositions(n, remaining - a, signed, prefix, out);
        prefix.pop();
        if signed && a != 0 {
            prefix.push(-a);
            push_compositions(n, remaining - a, signed, prefix, out);
            prefix.pop();
        }
    }
}

/// Every index of order `k` in dimension `n`, sorted by [`compare`].
///
/// Moment cells keep non-negative indexes only and hold `C(n+k−1, k)` entries.
pub fn enumerate_cell(n: usize, k: u64, mode: Mode) -> Cell {
    assert!(n >= 1, "cells need dimension n >= 1");
    let mut indexes = Vec::new();
    push_compositions(
        n,
        k as i64,
        mode == Mode::Frequency,
        &mut Vec::with_capacity(n),
        &mut indexes,
    );
    indexes.sort();
    Cell { order: k, indexes }
}

/// Predicate that bounds a finite dictionary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSpec {
    /// `|α| ≤ N`.
    MaxOrder(u64),
    /// `|αⱼ| ≤ bⱼ` (frequency) or `0 ≤ αⱼ ≤ bⱼ` (moment), per axis.
    PerComponent(Vec<u64>),
}

impl FromStr for BoundSpec {
    type Err = Error;

    /// Parses `max-order:N` or `box:b1,b2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("dictionary spec `{s}`: expected kind:value")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("dictionary bound `{t}`: {e}")))
        };
        match kind.trim() {
            "max-order" | "order" => Ok(BoundSpec::MaxOrder(num(rest)?)),
            "box" | "per-component" => {
                let bounds = rest
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(num)
                    .collect::<Result<Vec<_>>>()?;
                Ok(BoundSpec::PerComponent(bounds))
            }
            other => Err(Error::Parse(format!("unknown dictionary kind `{other}`"))),
        }
    }
}

impl fmt::Display for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundSpec::MaxOrder(n) => write!(f, "max-order:{n}"),
            BoundSpec::PerComponent(b) => {
                let parts: Vec<String> = b.iter().map(u64::to_string).collect();
                write!(f, "box:{}", parts.join(","))
            }
        }
    }
}

/// A finite, sorted, duplicate-free set of indexes that always holds the zero index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DictionaryRepr")]
pub struct Dictionary {
    n: usize,
    mode: Mode,
    indexes: Vec<MultiIndex>,
}

#[derive(Deserialize)]
struct DictionaryRepr {
    n: usize,
    mode: Mode,
    indexes: Vec<MultiIndex>,
}

impl TryFrom<DictionaryRepr> for Dictionary {
    type Error = Error;

    fn try_from(r: DictionaryRepr) -> Result<Self> {
        Dictionary::from_indexes(r.n, r.mode, r.indexes)
    }
}

impl Dictionary {
    /// Builds a dictionary from an explicit index list; the list is sorted,
    /// deduplicated and completed with the zero index.
    pub fn from_indexes(n: usize, mode: Mode, mut indexes: Vec<MultiIndex>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySpec);
        }
        for a in &indexes {
            Error::check_dim(n, a.dim())?;
            if mode == Mode::Moment && !a.is_nonnegative() {
                return Err(Error::InvalidArgument(format!(
                    "moment index {a} has a negative component"
                )));
            }
        }
        indexes.push(MultiIndex::zero(n));
        indexes.sort();
        indexes.dedup();
        Ok(Dictionary { n, mode, indexes })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn indexes(&self) -> &[MultiIndex] {
        &self.indexes
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }

    pub fn contains(&self, a: &MultiIndex) -> bool {
        self.indexes.binary_search(a).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indexes.iter()
    }

    pub fn max_order(&self) -> u64 {
        self.indexes.last().map_or(0, MultiIndex::order)
    }

    pub fn is_subset_of(&self, other: &Dictionary) -> bool {
        self.indexes.iter().all(|a| other.contains(a))
    }
}

impl<'a> IntoIterator for &'a Dictionary {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.indexes.iter()
    }
}

fn push_box(bounds: &[u64], signed: bool, prefix: &mut Vec<i64>, out: &mut Vec<MultiIndex>) {
    let axis = prefix.len();
    if axis == bounds.len() {
        out.push(MultiIndex(prefix.clone()));
        return;
    }
    let b = bounds[axis] as i64;
    let lo = if signed { -b } else { 0 };
    for a in lo..=b {
        prefix.push(a);
        push_box(bounds, signed, prefix, out);
        prefix.pop();
    }
}

pub fn build_dictionary(n: usize, mode: Mode, bound: &BoundSpec) -> Result<Dictionary> {
    if n == 0 {
        return Err(Error::EmptySpec);
    }
    let indexes = match bound {
        BoundSpec::MaxOrder(max) => (0..=*max)
            .flat_map(|k| enumerate_cell(n, k, mode).indexes)
            .collect(),
        BoundSpec::PerComponent(bounds) => {
            if bounds.is_empty() {
                return Err(Error::EmptySpec);
            }
            Error::check_dim(n, bounds.len())?;
            let mut out = Vec::new();
            push_box(bounds, mode == Mode::Frequency, &mut Vec::new(), &mut out);
            out
        }
    };
    Dictionary::from_indexes(n, mode, indexes)
}

/// Basis values at a signal, in cell order.
#[derive(Debug, Clone, PartialEq)]
pub enum EvaluationVector {
    Frequency(Vec<Complex64>),
    Moment(Vec<f64>),
}

impl EvaluationVector {
    pub fn len(&self) -> usize {
        match self {
            EvaluationVector::Frequency(v) => v.len(),
            EvaluationVector::Moment(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            EvaluationVector::Frequency(v) => v.clone(),
            EvaluationVector::Moment(v) => v.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
        }
    }
}

pub fn evaluation_vector(x: &[f64], cell: &Cell, mode: Mode) -> Result<EvaluationVector> {
    if let Some(a) = cell.indexes.first() {
        Error::check_dim(a.dim(), x.len())?;
    }
    Ok(match mode {
        Mode::Frequency => {
            EvaluationVector::Frequency(cell.indexes.iter().map(|a| a.fourier(x)).collect())
        }
        Mode::Moment => {
            EvaluationVector::Moment(cell.indexes.iter().map(|a| a.monomial(x)).collect())
        }
    })
}
