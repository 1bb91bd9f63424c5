//! Legendre polynomials, total-degree multi-index sets and evaluation of a
//! polynomial chaos expansion on inputs scaled to `[-1, 1]`.
//!
//! Polynomials use the unnormalized convention `P_n(1) = 1`. Orthogonality
//! only holds on `[-1, 1]`; evaluation outside that interval is permitted for
//! the unchecked helpers and is how the surrogate extrapolates.

use crate::error::{Error, Result};

/// Slack allowed when checking that a scaled value lies in `[-1, 1]`.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;

/// Evaluates `P_degree(x)` with the Bonnet recurrence.
///
/// `x` must lie in `[-1, 1]` up to [`DOMAIN_TOLERANCE`]; values within the
/// tolerance are clamped.
pub fn legendre_eval(degree: usize, x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_TOLERANCE {
        return Err(Error::Domain(format!(
            "legendre argument x = {x} lies outside [-1, 1]"
        )));
    }
    Ok(legendre(degree, x.clamp(-1.0, 1.0)))
}

/// Unchecked `P_degree(x)`, defined for every real `x`.
pub fn legendre(degree: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if degree == 0 {
        return prev;
    }
    for n in 1..degree {
        let n = n as f64;
        let next = ((2.0 * n + 1.0) * x * cur - n * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `values[n] = P_n(x)` and `derivs[n] = P_n'(x)` for `n` in `0..values.len()`.
pub fn legendre_table(x: f64, values: &mut [f64], derivs: &mut [f64]) {
    debug_assert_eq!(values.len(), derivs.len());
    let len = values.len();
    if len == 0 {
        return;
    }
    values[0] = 1.0;
    derivs[0] = 0.0;
    if len == 1 {
        return;
    }
    values[1] = x;
    derivs[1] = 1.0;
    for n in 1..len - 1 {
        let nf = n as f64;
        values[n + 1] = ((2.0 * nf + 1.0) * x * values[n] - nf * values[n - 1]) / (nf + 1.0);
        // P'_{n+1} = P'_{n-1} + (2n + 1) P_n
        derivs[n + 1] = derivs[n - 1] + (2.0 * nf + 1.0) * values[n];
    }
}

/// Total-degree set of multi-indices in graded lexicographic order.
///
/// Tuples are sorted by total degree, and within one degree so that the
/// first input carries the highest power first: for two inputs the order
/// is `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dims: usize,
    max_degree: usize,
    indices: Vec<Vec<usize>>,
}

impl MultiIndexSet {
    pub fn total_degree(dims: usize, max_degree: usize) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidInput(
                "multi-index set needs at least one input dimension".into(),
            ));
        }
        let mut indices = Vec::new();
        for degree in 0..=max_degree {
            let mut current = vec![0; dims];
            push_compositions(degree, 0, &mut current, &mut indices);
        }
        Ok(Self {
            dims,
            max_degree,
            indices,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    /// Position of `index` in the ordering, if present.
    pub fn position(&self, index: &[usize]) -> Option<usize> {
        self.indices.iter().position(|i| i.as_slice() == index)
    }

    /// Evaluates every basis polynomial at an unchecked point.
    pub fn evaluate(&self, point: &[f64], out: &mut [f64]) {
        let mut ws = BasisWorkspace::new(self);
        ws.fill_values(self, point);
        out.copy_from_slice(&ws.psi);
    }
}

fn push_compositions(
    remaining: usize,
    pos: usize,
    current: &mut [usize],
    out: &mut Vec<Vec<usize>>,
) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(current.to_vec());
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        push_compositions(remaining - k, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Scratch buffers for evaluating a basis and its input derivatives.
#[derive(Debug, Clone)]
pub struct BasisWorkspace {
    table: Vec<Vec<f64>>,
    dtable: Vec<Vec<f64>>,
    /// `psi[i]` holds the i-th basis polynomial at the last point.
    pub psi: Vec<f64>,
    /// `dpsi[k][i]` holds the derivative of `psi[i]` with respect to input `k`
    /// (in scaled coordinates). Only filled by [`BasisWorkspace::fill_with_derivatives`].
    pub dpsi: Vec<Vec<f64>>,
}

impl BasisWorkspace {
    pub fn new(set: &MultiIndexSet) -> Self {
        let width = set.max_degree + 1;
        Self {
            table: vec![vec![0.0; width]; set.dims],
            dtable: vec![vec![0.0; width]; set.dims],
            psi: vec![0.0; set.len()],
            dpsi: vec![vec![0.0; set.len()]; set.dims],
        }
    }

    pub fn fill_values(&mut self, set: &MultiIndexSet, point: &[f64]) {
        debug_assert_eq!(point.len(), set.dims);
        for (k, &x) in point.iter().enumerate() {
            legendre_table(x, &mut self.table[k], &mut self.dtable[k]);
        }
        for (psi, alpha) in self.psi.iter_mut().zip(&set.indices) {
            *psi = alpha
                .iter()
                .enumerate()
                .map(|(k, &a)| self.table[k][a])
                .product();
        }
    }

    /// Fills values and derivatives with respect to the inputs listed in `wrt`.
    pub fn fill_with_derivatives(&mut self, set: &MultiIndexSet, point: &[f64], wrt: &[usize]) {
        self.fill_values(set, point);
        for &k in wrt {
            for (i, alpha) in set.indices.iter().enumerate() {
                let mut d = self.dtable[k][alpha[k]];
                for (j, &a) in alpha.iter().enumerate() {
                    if j != k {
                        d *= self.table[j][a];
                    }
                }
                self.dpsi[k][i] = d;
            }
        }
    }
}

/// Affine map from per-input bounds onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSpec {
    bounds: Vec<(f64, f64)>,
}

impl ScalingSpec {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!(
                    "scaling bounds for input {k} must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Scales a point that must lie inside the bounds (up to `1e-9` relative slack).
    pub fn scale_point(&self, raw: &[f64]) -> Result<Vec<f64>> {
        self.check_len(raw)?;
        raw.iter()
            .zip(&self.bounds)
            .enumerate()
            .map(|(k, (&v, &(lo, hi)))| {
                let slack = DOMAIN_TOLERANCE * (hi - lo).max(1.0);
                if !v.is_finite() || v < lo - slack || v > hi + slack {
                    return Err(Error::Domain(format!(
                        "input {k} = {v} lies outside its bounds [{lo}, {hi}]"
                    )));
                }
                Ok(scale_one(v, lo, hi).clamp(-1.0, 1.0))
            })
            .collect()
    }

    /// Scales without checking the bounds; used when extrapolating.
    pub fn scale_unchecked(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| scale_one(v, lo, hi))
            .collect()
    }

    pub fn unscale(&self, scaled: &[f64]) -> Result<Vec<f64>> {
        self.check_len(scaled)?;
        Ok(scaled
            .iter()
            .zip(&self.bounds)
            .map(|(&u, &(lo, hi))| lo + (u + 1.0) * 0.5 * (hi - lo))
            .collect())
    }

    /// Derivative of the scaled coordinate `k` with respect to its raw input.
    pub fn jacobian(&self, k: usize) -> f64 {
        let (lo, hi) = self.bounds[k];
        2.0 / (hi - lo)
    }

    pub fn contains(&self, raw: &[f64]) -> bool {
        raw.len() == self.bounds.len()
            && raw
                .iter()
                .zip(&self.bounds)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.bounds.len() {
            return Err(Error::Dimension(format!(
                "point has {} components, scaling expects {}",
                v.len(),
                self.bounds.len()
            )));
        }
        Ok(())
    }
}

fn scale_one(v: f64, lo: f64, hi: f64) -> f64 {
    (2.0 * v - lo - hi) / (hi - lo)
}

/// Expansion coefficients aligned with a [`MultiIndexSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub Vec<f64>);

impl CoefficientVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
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
}

impl From<Vec<f64>> for CoefficientVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Evaluates `sum_i c_i psi_i(point)` for a point already in scaled coordinates.
pub fn pce_eval(
    coeffs: &CoefficientVector,
    scaled_point: &[f64],
    set: &MultiIndexSet,
) -> Result<f64> {
    if coeffs.len() != set.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for a basis of {} polynomials",
            coeffs.len(),
            set.len()
        )));
    }
    if scaled_point.len() != set.dims() {
        return Err(Error::Dimension(format!(
            "point has {} components, basis has {} inputs",
            scaled_point.len(),
            set.dims()
        )));
    }
    let mut ws = BasisWorkspace::new(set);
    ws.fill_values(set, scaled_point);
    Ok(dot(&coeffs.0, &ws.psi))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
