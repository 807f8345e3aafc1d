//! True covariance models and Gaussian sampling.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Parametric family of the true covariance matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelKind {
    /// `σ_ii = 1`, `σ_ij = ρ |i - j|^{-(α + 1)}`.
    PolyDecay { rho: f64, alpha: f64 },
    /// `σ_ij = ρ^{|i - j|}`.
    ArDecay { rho: f64 },
    /// `σ_ij = I(i = j) + offdiag · I(|i - j| <= k0 - 1)`.
    ///
    /// Taken literally the diagonal is `1 + offdiag`; `unit_diagonal`
    /// forces it back to 1.
    BandedUniform { k0: usize, offdiag: f64, unit_diagonal: bool },
    Explicit { matrix: SymMatrix },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovModel {
    pub p: usize,
    #[serde(flatten)]
    pub kind: ModelKind,
}

impl CovModel {
    pub fn new(p: usize, kind: ModelKind) -> Result<Self> {
        let model = Self { p, kind };
        model.validate()?;
        Ok(model)
    }

    pub fn poly_decay(p: usize, rho: f64, alpha: f64) -> Result<Self> {
        Self::new(p, ModelKind::PolyDecay { rho, alpha })
    }

    pub fn ar_decay(p: usize, rho: f64) -> Result<Self> {
        Self::new(p, ModelKind::ArDecay { rho })
    }

    pub fn banded_uniform(p: usize, k0: usize, offdiag: f64) -> Result<Self> {
        Self::new(p, ModelKind::BandedUniform { k0, offdiag, unit_diagonal: false })
    }

    pub fn explicit(matrix: SymMatrix) -> Result<Self> {
        Self::new(matrix.dim(), ModelKind::Explicit { matrix })
    }

    pub fn identity(p: usize) -> Result<Self> {
        Self::explicit(SymMatrix::identity(p))
    }

    /// Switches a `BandedUniform` model to a unit diagonal; no-op otherwise.
    pub fn with_unit_diagonal(mut self, unit: bool) -> Self {
        if let ModelKind::BandedUniform { unit_diagonal, .. } = &mut self.kind {
            *unit_diagonal = unit;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Parameter("dimension p must be positive".into()));
        }
        match &self.kind {
            ModelKind::PolyDecay { rho, alpha } => {
                if !(0.0..1.0).contains(rho) {
                    return Err(Error::Parameter(format!("PolyDecay needs 0 <= rho < 1, got {rho}")));
                }
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Parameter(format!("PolyDecay needs alpha > 0, got {alpha}")));
                }
            }
            ModelKind::ArDecay { rho } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::Parameter(format!("ArDecay needs |rho| < 1, got {rho}")));
                }
            }
            ModelKind::BandedUniform { k0, offdiag, .. } => {
                if *k0 < 1 || *k0 > self.p {
                    return Err(Error::Parameter(format!(
                        "BandedUniform needs 1 <= k0 <= p = {}, got {k0}",
                        self.p
                    )));
                }
                if !offdiag.is_finite() {
                    return Err(Error::Parameter("BandedUniform offdiag must be finite".into()));
                }
            }
            ModelKind::Explicit { matrix } => {
                if matrix.dim() != self.p {
                    return Err(Error::DimensionMismatch { left: matrix.dim(), right: self.p });
                }
                if let Some(i) = (0..self.p).find(|&i| !(matrix.get(i, i) > 0.0)) {
                    return Err(Error::Parameter(format!("explicit matrix diagonal entry {i} is not positive")));
                }
            }
        }
        Ok(())
    }

    pub fn sigma(&self) -> Result<SymMatrix> {
        build_sigma(self)
    }

    pub fn bandwidth(&self) -> Option<usize> {
        model_bandwidth(self)
    }
}

/// Materializes Σ for a model.
pub fn build_sigma(model: &CovModel) -> Result<SymMatrix> {
    model.validate()?;
    let p = model.p;
    let sigma = match &model.kind {
        ModelKind::PolyDecay { rho, alpha } => SymMatrix::from_fn(p, |i, j| {
            if i == j {
                1.0
            } else {
                rho * ((j - i) as f64).powf(-(alpha + 1.0))
            }
        }),
        ModelKind::ArDecay { rho } => SymMatrix::from_fn(p, |i, j| rho.powi((j - i) as i32)),
        ModelKind::BandedUniform { k0, offdiag, unit_diagonal } => SymMatrix::from_fn(p, |i, j| {
            let d = j - i;
            match (d, unit_diagonal) {
                (0, true) => 1.0,
                (0, false) => 1.0 + offdiag,
                (d, _) if d < *k0 => *offdiag,
                _ => 0.0,
            }
        }),
        ModelKind::Explicit { matrix } => matrix.clone(),
    };
    Ok(sigma)
}

/// Exact bandwidth of the model when it has one.
///
/// Decay models never vanish exactly off the diagonal and report `None`.
pub fn model_bandwidth(model: &CovModel) -> Option<usize> {
    match &model.kind {
        ModelKind::BandedUniform { k0, offdiag, .. } => Some(if *offdiag == 0.0 { 1 } else { *k0 }),
        ModelKind::Explicit { matrix } => Some(matrix.bandwidth()),
        ModelKind::PolyDecay { rho, .. } | ModelKind::ArDecay { rho } if *rho == 0.0 => Some(1),
        _ => None,
    }
}

/// `n × p` data matrix; rows are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Array2<f64>,
    seed: u64,
}

impl Dataset {
    /// Wraps ingested data (seed recorded as 0).
    pub fn from_rows(rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() < 3 {
            return Err(Error::SampleSize { n: rows.nrows(), min: 3 });
        }
        if rows.ncols() == 0 {
            return Err(Error::Parameter("dataset has no columns".into()));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("dataset contains non-finite values".into()));
        }
        Ok(Self { rows, seed: 0 })
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn p(&self) -> usize {
        self.rows.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = Σ`.
///
/// Factor once, then draw as many datasets as needed.
#[derive(Debug, Clone)]
pub struct NormalSampler {
    factor: Array2<f64>,
    jittered: bool,
}

impl NormalSampler {
    /// Factorizes Σ. On failure a single diagonal jitter of
    /// `1e-10 · trace(Σ) / p` is tried before giving up.
    pub fn new(sigma: &SymMatrix) -> Result<Self> {
        match cholesky(sigma.as_array(), 0.0) {
            Ok(factor) => Ok(Self { factor, jittered: false }),
            Err(_) => {
                let jitter = 1e-10 * sigma.trace() / sigma.dim() as f64;
                let factor = cholesky(sigma.as_array(), jitter.max(0.0))?;
                Ok(Self { factor, jittered: true })
            }
        }
    }

    pub fn factor(&self) -> &Array2<f64> {
        &self.factor
    }

    /// Whether the jitter fallback was needed.
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    pub fn p(&self) -> usize {
        self.factor.nrows()
    }

    /// Draws `n` i.i.d. rows from `N(0, Σ)`. Bit-deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n < 3 {
            return Err(Error::SampleSize { n, min: 3 });
        }
        let p = self.p();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Array2::from_shape_simple_fn((n, p), || StandardNormal.sample(&mut rng));
        let rows = z.dot(&self.factor.t());
        Ok(Dataset { rows, seed })
    }
}

/// Draws `n` rows from `N(0, sigma)`.
pub fn sample_dataset(sigma: &SymMatrix, n: usize, seed: u64) -> Result<Dataset> {
    if n < 3 {
        return Err(Error::SampleSize { n, min: 3 });
    }
    NormalSampler::new(sigma)?.sample(n, seed)
}

fn cholesky(a: &Array2<f64>, jitter: f64) -> Result<Array2<f64>> {
    let p = a.nrows();
    // Row-major working copy so inner products run over contiguous slices.
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let (ri, rj) = (&l[i * p..i * p + j], &l[j * p..j * p + j]);
            let dot: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
            if i == j {
                let pivot = a[(i, i)] + jitter - dot;
                if !(pivot > 0.0) || !pivot.is_finite() {
                    return Err(Error::NotPositiveDefinite { pivot: i, value: pivot });
                }
                l[i * p + i] = pivot.sqrt();
            } else {
                l[i * p + j] = (a[(i, j)] - dot) / l[j * p + j];
            }
        }
    }
    Ok(Array2::from_shape_vec((p, p), l).expect("shape matches buffer"))
}
