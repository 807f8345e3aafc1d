//! Dense symmetric matrices and per-distance reductions.
//!
//! Every estimator in this crate is Toeplitz in its weights, so most
//! quantities reduce to sums over the diagonals `|i - j| = d`. The
//! [`SymMatrix::distance_sums`] family computes those reductions once so
//! profile sweeps over τ cost O(p) instead of O(p²) per τ.

use ndarray::Array2;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};

/// Dense symmetric `p × p` real matrix.
///
/// Storage is full (both triangles); constructors guarantee that
/// `a[(i, j)]` and `a[(j, i)]` are bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle
    /// (`i <= j`) and mirroring it.
    pub fn from_fn(p: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Array2::zeros((p, p));
        for i in 0..p {
            for j in i..p {
                let v = f(i, j);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Self { data }
    }

    /// Wraps an existing array, rejecting non-square, asymmetric or
    /// non-finite-diagonal input.
    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::DimensionMismatch { left: r, right: c });
        }
        for i in 0..r {
            if !data[(i, i)].is_finite() {
                return Err(Error::Parameter(format!("diagonal entry {i} is not finite")));
            }
            for j in (i + 1)..r {
                if data[(i, j)].to_bits() != data[(j, i)].to_bits() {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(Self { data })
    }

    /// Copies the upper triangle onto the lower one. Used after BLAS-style
    /// products whose two triangles may differ in the last bit.
    pub(crate) fn from_upper(mut data: Array2<f64>) -> Self {
        let p = data.nrows();
        debug_assert_eq!(p, data.ncols());
        for i in 0..p {
            for j in (i + 1)..p {
                data[(j, i)] = data[(i, j)];
            }
        }
        Self { data }
    }

    pub fn identity(p: usize) -> Self {
        Self::from_fn(p, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(p: usize) -> Self {
        Self { data: Array2::zeros((p, p)) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        self.data.diag().to_vec()
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    /// Returns `s * self`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { data: &self.data * s }
    }

    /// Smallest `k >= 1` such that every entry with `|i - j| >= k` is zero.
    pub fn bandwidth(&self) -> usize {
        let p = self.dim();
        (1..p)
            .rev()
            .find(|&d| (0..p - d).any(|i| self.data[(i, i + d)] != 0.0))
            .map_or(1, |d| d + 1)
    }

    /// `Σ_{|i-j| = d} f(i, j)` over ordered pairs, for every `d` in `0..p`.
    ///
    /// Off-diagonal distances count both triangles, matching the
    /// `Σ_{1 <= i, j <= p}` convention of the Frobenius norm.
    pub fn distance_sums(&self, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let p = self.dim();
        let mut buf = Vec::with_capacity(p);
        (0..p)
            .map(|d| {
                buf.clear();
                buf.extend((0..p - d).map(|i| f(i, i + d)));
                let s = pairwise_sum(&buf);
                if d == 0 {
                    s
                } else {
                    2.0 * s
                }
            })
            .collect()
    }

    /// Per-distance sums of `a_ij²` and `a_ii a_jj`.
    pub fn square_and_diag_sums(&self) -> (Vec<f64>, Vec<f64>) {
        let diag = self.diag();
        let sq = self.distance_sums(|i, j| self.data[(i, j)] * self.data[(i, j)]);
        let dd = self.distance_sums(|i, j| diag[i] * diag[j]);
        (sq, dd)
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim()))?;
        for row in self.data.rows() {
            seq.serialize_element(&row.to_vec())?;
        }
        seq.end()
    }
}

/// Pairwise (cascade) summation; rounding error grows as O(log n) rather
/// than O(n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}
