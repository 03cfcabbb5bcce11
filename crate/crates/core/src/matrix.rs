//! Dense stochastic matrices, probability vectors and the basic metrics on them.
//!
//! Matrices act on row vectors from the left: a distribution `nu` steps to
//! `nu * P`. The matrix norm used throughout is the maximum absolute row sum,
//! which coincides with `max_nu ||nu M||_1` over probability vectors `nu`
//! because that map is convex on the simplex and peaks at a vertex.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::structure::{classify_digraph, Mode, Structure};

/// Default tolerance on `|row sum - 1|` for ingest.
pub const DEFAULT_ROW_TOL: f64 = 1e-9;
/// Entries within this distance of 0 or 1 are clamped on ingest.
pub const CLAMP_TOL: f64 = 1e-15;
/// Tolerance on `sum - 1` for probability vectors.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Required residual `||pi P - pi||_1` of a stationary solve.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

/// A validated row-stochastic `n x n` matrix with its structural record.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    data: Vec<f64>,
    structure: Structure,
}

impl StochasticMatrix {
    /// Validate and normalize a raw square array.
    pub fn ingest(raw: &[Vec<f64>], row_tol: f64) -> Result<Self> {
        let n = raw.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in raw.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    bad_row: i,
                    cols: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if x < -CLAMP_TOL {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: x,
                    });
                }
                data.push(clamp_unit(x));
            }
        }
        for i in 0..n {
            let row = &mut data[i * n..(i + 1) * n];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > row_tol {
                return Err(Error::RowSumViolation {
                    row: i,
                    sum,
                    tol: row_tol,
                });
            }
            renormalize(row, sum);
        }
        Ok(Self::from_normalized(n, data))
    }

    /// Ingest with the default row tolerance.
    pub fn from_rows(raw: &[Vec<f64>]) -> Result<Self> {
        Self::ingest(raw, DEFAULT_ROW_TOL)
    }

    /// Build from row-major data that is already clamped and row-normalized.
    pub(crate) fn from_normalized(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        let structure = classify_digraph(&support_lists(n, &data));
        Self {
            n,
            data,
            structure,
        }
    }

    /// Wrap arbitrary row-major data without any validation.
    ///
    /// Exists so verification batteries can inject deliberately broken
    /// matrices; everything else must go through [`StochasticMatrix::ingest`].
    #[doc(hidden)]
    pub fn from_raw_unchecked(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "data length must be n*n");
        Self::from_normalized(n, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_normalized(n, data)
    }

    /// Every entry `1/n`.
    pub fn uniform(n: usize) -> Self {
        Self::from_normalized(n, vec![1.0 / n as f64; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// `I - P` as a dense matrix.
    pub fn identity_minus(&self) -> DMatrix<f64> {
        let mut m = -self.to_dmatrix();
        for i in 0..self.n {
            m[(i, i)] += 1.0;
        }
        m
    }

    /// `||self - other||` in the max-absolute-row-sum norm.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        check_dim(self.n, other.n)?;
        Ok(self
            .data
            .chunks(self.n)
            .zip(other.data.chunks(self.n))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .fold(0.0, f64::max))
    }

    /// Check the matrix against a validation mode.
    pub fn require(&self, mode: Mode) -> Result<()> {
        let s = &self.structure;
        if s.recurrent_classes.len() > 1 {
            return Err(Error::MultipleRecurrentClasses {
                count: s.recurrent_classes.len(),
            });
        }
        if let Some(&p) = s.class_periods.iter().find(|&&p| p > 1) {
            return Err(Error::PeriodicRecurrentClass { period: p });
        }
        if mode == Mode::Strict && !s.irreducible {
            return Err(Error::NotIrreducible);
        }
        Ok(())
    }
}

impl Serialize for StochasticMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StochasticMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        StochasticMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

fn clamp_unit(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else if x > 1.0 && x <= 1.0 + CLAMP_TOL {
        1.0
    } else {
        x
    }
}

fn renormalize(row: &mut [f64], sum: f64) {
    if sum != 1.0 {
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
}

/// Clamp tiny rounding excursions and renormalize rows in place.
pub(crate) fn normalize_rows(n: usize, data: &mut [f64]) {
    for row in data.chunks_mut(n) {
        for x in row.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        let sum: f64 = row.iter().sum();
        renormalize(row, sum);
    }
}

fn support_lists(n: usize, data: &[f64]) -> Vec<Vec<usize>> {
    data.chunks(n)
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Structural classification of `p`'s support digraph.
pub fn classify_structure(p: &StochasticMatrix) -> Structure {
    p.structure.clone()
}

/// Nonnegative vector summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if let Some((i, x)) = entries
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} = {x} is negative or non-finite"
            )));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(entries))
    }

    /// Clamp entries above `-neg_tol` to zero and rescale to unit mass.
    pub(crate) fn from_approx(mut entries: Vec<f64>, neg_tol: f64) -> Result<Self> {
        for (i, x) in entries.iter_mut().enumerate() {
            if !x.is_finite() || *x < -neg_tol {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} = {x} is negative or non-finite"
                )));
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let sum: f64 = entries.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidDistribution("zero mass".into()));
        }
        if sum != 1.0 {
            for x in entries.iter_mut() {
                *x /= sum;
            }
        }
        Ok(Self(entries))
    }

    pub fn point_mass(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// One step `nu -> nu P`, kept on the simplex.
    pub fn step(&self, p: &StochasticMatrix) -> Result<Self> {
        check_dim(p.n, self.len())?;
        let out = vec_mat(&self.0, p);
        Self::from_approx(out, 1e-12)
    }

    pub fn to_signed(&self) -> SignedVector {
        SignedVector(self.0.clone())
    }
}

impl<'de> Deserialize<'de> for ProbabilityVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(deserializer)?;
        ProbabilityVector::new(v).map_err(serde::de::Error::custom)
    }
}

/// Real vector with no sign or mass constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedVector(Vec<f64>);

impl SignedVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is not finite"
            )));
        }
        Ok(Self(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    /// `self - other`.
    pub fn sub(&self, other: &SignedVector) -> Result<SignedVector> {
        check_dim(self.len(), other.len())?;
        Ok(SignedVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }
}

fn vec_mat(nu: &[f64], p: &StochasticMatrix) -> Vec<f64> {
    let n = p.n;
    let mut out = vec![0.0; n];
    for (i, &w) in nu.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(p.row(i)) {
            *o += w * x;
        }
    }
    out
}

/// Row-vector product `nu P`. Never increases the l1 norm.
pub fn propagate(nu: &SignedVector, p: &StochasticMatrix) -> Result<SignedVector> {
    check_dim(p.n, nu.len())?;
    Ok(SignedVector(vec_mat(&nu.0, p)))
}

/// Total variation distance `(1/2) sum |mu_i - nu_i|`.
pub fn tv_distance(mu: &ProbabilityVector, nu: &ProbabilityVector) -> Result<f64> {
    check_dim(mu.len(), nu.len())?;
    Ok(tv_slices(mu.as_slice(), nu.as_slice()))
}

pub(crate) fn tv_slices(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Max absolute row sum of a square matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Unique stationary distribution of `p`.
///
/// `mode` decides which structures are accepted: relaxed needs exactly one
/// aperiodic recurrent class, strict needs irreducibility on top.
pub fn stationary_distribution(p: &StochasticMatrix, mode: Mode) -> Result<ProbabilityVector> {
    p.require(mode)?;
    solve_stationary(p)
}

/// Stationary solve without structural validation.
///
/// Replaces the last equation of `pi (I - P) = 0` by the normalization row and
/// solves directly; power iteration is used only if that system is singular or
/// the residual is out of tolerance.
pub(crate) fn solve_stationary(p: &StochasticMatrix) -> Result<ProbabilityVector> {
    let n = p.n;
    if n == 1 {
        return Ok(ProbabilityVector(vec![1.0]));
    }
    // (I - P)^T with the last row replaced by ones.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            a[(j, i)] = delta - p.get(i, j);
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;

    if let Some(x) = a.lu().solve(&b) {
        if let Ok(pi) = ProbabilityVector::from_approx(x.iter().copied().collect(), 1e-9) {
            if stationary_residual(&pi, p) <= STATIONARY_RESIDUAL_TOL {
                return Ok(pi);
            }
        }
    }
    power_iteration(p)
}

fn power_iteration(p: &StochasticMatrix) -> Result<ProbabilityVector> {
    let n = p.n;
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        let next = vec_mat(&v, p);
        let change: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if change < 1e-15 {
            break;
        }
    }
    let pi = ProbabilityVector::from_approx(v, 1e-12)?;
    let residual = stationary_residual(&pi, p);
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(Error::StationarySolve { residual });
    }
    Ok(pi)
}

/// `||pi P - pi||_1`.
pub fn stationary_residual(pi: &ProbabilityVector, p: &StochasticMatrix) -> f64 {
    vec_mat(&pi.0, p)
        .iter()
        .zip(&pi.0)
        .map(|(a, b)| (a - b).abs())
        .sum()
}
