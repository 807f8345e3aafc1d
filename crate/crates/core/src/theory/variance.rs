//! `Var_n(τ)`: the leading-order variance of `SURE_c(τ) - R_c(τ)`.
//!
//! With `Ā_ij`, `B̄_ij` evaluated at `ω^(τ)(|i-j|)`,
//!
//! ```text
//! Var_n = Σ_{i,j,s,t} { 2(n-2)/n⁴       B̄_ij B̄_st (σ_ii σ_ss σ_jt² + σ_ii σ_tt σ_js² + σ_jj σ_ss σ_it² + σ_jj σ_tt σ_is²)
//!                     + 2(n-1)(n-2)/n⁴  Ā_ij Ā_st (σ_is σ_jt + σ_it σ_js)²
//!                     + 4(n-2)³/n⁴      Ā_ij Ā_st σ_ij σ_st (σ_is σ_jt + σ_it σ_js)
//!                     + 8(n-2)²/n⁴      Ā_ij B̄_st σ_ij (σ_ss σ_it σ_jt + σ_tt σ_is σ_js) }
//! ```
//!
//! [`VarMethod::Exact`] evaluates the quadruple sum literally (O(p⁴)).
//! [`VarMethod::BandedTruncated`] treats `σ_ij` as zero for
//! `|i - j| >= band` and uses the symmetries of the sum to loop only over
//! band neighbourhoods; it is lossless when Σ is banded within `band`.

use serde::Serialize;

use super::coeffs;
use crate::criterion::sure_constants;
use crate::error::{Error, Result};
use crate::estimate::WeightScheme;
use crate::matrix::{pairwise_sum, SymMatrix};

/// Largest p accepted by the literal O(p⁴) evaluation.
pub const EXACT_VAR_MAX_P: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarMethod {
    Exact,
    BandedTruncated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarApprox {
    pub tau: usize,
    pub value: f64,
    pub method: VarMethod,
    pub truncation_band: Option<usize>,
}

struct Factors {
    k1: f64,
    k2: f64,
    k3: f64,
    k4: f64,
}

impl Factors {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        let n4 = nf.powi(4);
        Self {
            k1: 2.0 * (nf - 2.0) / n4,
            k2: 2.0 * (nf - 1.0) * (nf - 2.0) / n4,
            k3: 4.0 * (nf - 2.0).powi(3) / n4,
            k4: 8.0 * (nf - 2.0).powi(2) / n4,
        }
    }
}

pub fn var_n(
    sigma: &SymMatrix,
    n: usize,
    scheme: &WeightScheme,
    tau: usize,
    c: f64,
    method: VarMethod,
    truncation_band: Option<usize>,
) -> Result<VarApprox> {
    if n < 4 {
        return Err(Error::SampleSize { n, min: 4 });
    }
    sure_constants(n, c)?;
    scheme.check_tau(tau)?;
    let p = sigma.dim();
    // Ā and B̄ as functions of distance.
    let (big_a, big_b): (Vec<f64>, Vec<f64>) = (0..p)
        .map(|d| {
            let k = coeffs(n, c, scheme.weight(tau, d));
            (k.big_a, k.big_b)
        })
        .unzip();
    let factors = Factors::new(n);
    let value = match method {
        VarMethod::Exact => {
            if p > EXACT_VAR_MAX_P {
                return Err(Error::Infeasible(format!(
                    "exact Var_n is capped at p = {EXACT_VAR_MAX_P} (got p = {p}); use the banded-truncated method with a truncation band"
                )));
            }
            exact_sum(sigma, &big_a, &big_b, &factors)
        }
        VarMethod::BandedTruncated => {
            let band = truncation_band.ok_or_else(|| {
                Error::Infeasible("banded-truncated Var_n needs a truncation band".into())
            })?;
            if band == 0 {
                return Err(Error::Parameter("truncation band must be >= 1".into()));
            }
            banded_sum(sigma, band.min(p), &big_a, &big_b, &factors)
        }
    };
    if !(value > 0.0) {
        return Err(Error::Infeasible(format!("Var_n evaluated to a non-positive value {value:e}")));
    }
    Ok(VarApprox {
        tau,
        value,
        method,
        truncation_band: if method == VarMethod::BandedTruncated { truncation_band } else { None },
    })
}

/// Runs `f(i)` for each row index and sums the results in index order, so
/// the total does not depend on how rows are scheduled.
fn sum_rows(p: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    #[cfg(feature = "parallel")]
    let rows: Vec<f64> = {
        use rayon::prelude::*;
        (0..p).into_par_iter().map(f).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<f64> = (0..p).map(f).collect();
    pairwise_sum(&rows)
}

fn exact_sum(sigma: &SymMatrix, big_a: &[f64], big_b: &[f64], k: &Factors) -> f64 {
    let p = sigma.dim();
    let s = |a: usize, b: usize| sigma.get(a, b);
    sum_rows(p, |i| {
        let mut acc = 0.0;
        for j in 0..p {
            let (a_ij, b_ij, s_ij) = (big_a[i.abs_diff(j)], big_b[i.abs_diff(j)], s(i, j));
            for st in 0..p {
                for t in 0..p {
                    let (a_st, b_st) = (big_a[st.abs_diff(t)], big_b[st.abs_diff(t)]);
                    let (s_is, s_it, s_js, s_jt) = (s(i, st), s(i, t), s(j, st), s(j, t));
                    let t1 = b_ij
                        * b_st
                        * (s(i, i) * s(st, st) * s_jt * s_jt
                            + s(i, i) * s(t, t) * s_js * s_js
                            + s(j, j) * s(st, st) * s_it * s_it
                            + s(j, j) * s(t, t) * s_is * s_is);
                    let cross = s_is * s_jt + s_it * s_js;
                    let t2 = a_ij * a_st * cross * cross;
                    let t3 = a_ij * a_st * s_ij * s(st, t) * cross;
                    let t4 = a_ij * b_st * s_ij * (s(st, st) * s_it * s_jt + s(t, t) * s_is * s_js);
                    acc += k.k1 * t1 + k.k2 * t2 + k.k3 * t3 + k.k4 * t4;
                }
            }
        }
        acc
    })
}

fn banded_sum(sigma: &SymMatrix, band: usize, big_a: &[f64], big_b: &[f64], k: &Factors) -> f64 {
    let p = sigma.dim();
    let near = |i: usize| i.saturating_sub(band - 1)..(i + band).min(p);
    let s = |a: usize, b: usize| if a.abs_diff(b) < band { sigma.get(a, b) } else { 0.0 };
    let a = |x: usize, y: usize| big_a[x.abs_diff(y)];
    let diag = sigma.diag();

    // u_t = Σ_s B̄_st σ_ss
    let u: Vec<f64> = (0..p)
        .map(|t| pairwise_sum(&(0..p).map(|x| big_b[x.abs_diff(t)] * diag[x]).collect::<Vec<_>>()))
        .collect();
    // (Q Ā)_{it} with Q = Σ∘Σ restricted to the band; dense in t.
    let qa: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|t| near(i).map(|x| s(i, x) * s(i, x) * a(x, t)).sum())
                .collect()
        })
        .collect();

    sum_rows(p, |i| {
        // Σ_{j,t} u_j u_t σ_jt² with j = i; the four B̄B̄ pieces coincide.
        let t1 = 4.0 * near(i).map(|t| u[i] * u[t] * s(i, t) * s(i, t)).sum::<f64>();

        // Σ_{j,s,t} Ā_ij Ā_st σ_is² σ_jt²  =  Σ_j Ā_ij Σ_t (QĀ)_it σ_tj²
        let t2a: f64 = (0..p)
            .map(|j| a(i, j) * near(j).map(|t| qa[i][t] * s(t, j) * s(t, j)).sum::<f64>())
            .sum();
        // Σ_{j,s,t} Ā_ij Ā_st σ_is σ_js σ_it σ_jt; needs |i - j| < 2 band - 1.
        let mut t2b = 0.0;
        for j in i.saturating_sub(2 * band - 2)..(i + 2 * band - 1).min(p) {
            let lo = near(i).start.max(near(j).start);
            let hi = near(i).end.min(near(j).end);
            let mut inner = 0.0;
            for x in lo..hi {
                let wx = s(i, x) * s(j, x);
                for y in lo..hi {
                    inner += a(x, y) * wx * s(i, y) * s(j, y);
                }
            }
            t2b += a(i, j) * inner;
        }
        let t2 = 2.0 * t2a + 2.0 * t2b;

        // 2 Σ_{j,s,t} W_ij W_st σ_is σ_jt with W = Ā ∘ Σ
        let mut t3 = 0.0;
        // 2 Σ_{j,t} W_ij σ_it σ_jt u_t
        let mut t4 = 0.0;
        for j in near(i) {
            let w_ij = a(i, j) * s(i, j);
            let mut inner3 = 0.0;
            for x in near(i) {
                for y in near(x) {
                    inner3 += a(x, y) * s(x, y) * s(i, x) * s(j, y);
                }
            }
            t3 += w_ij * inner3;
            let lo = near(i).start.max(near(j).start);
            let hi = near(i).end.min(near(j).end);
            t4 += w_ij * (lo..hi).map(|t| s(i, t) * s(j, t) * u[t]).sum::<f64>();
        }

        k.k1 * t1 + k.k2 * t2 + k.k3 * 2.0 * t3 + k.k4 * 2.0 * t4
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CovModel;
    use approx::assert_relative_eq;

    #[test]
    fn hand_enumerated_identity_case() {
        // Σ = I_2, n = 5, τ = 1, c = 2. With B̄ = B̄(1) δ_ij and σ = δ:
        // T1 = 8 B1², T2 = 8 A1² + 4 A0², T3 = 4 A1², T4 = 4 A1 B1.
        let n = 5;
        let one = coeffs(n, 2.0, 1.0);
        let zero = coeffs(n, 2.0, 0.0);
        let f = Factors::new(n);
        let expected = f.k1 * 8.0 * one.big_b.powi(2)
            + f.k2 * (8.0 * one.big_a.powi(2) + 4.0 * zero.big_a.powi(2))
            + f.k3 * 4.0 * one.big_a.powi(2)
            + f.k4 * 4.0 * one.big_a * one.big_b;
        let sigma = SymMatrix::identity(2);
        let exact = var_n(&sigma, n, &WeightScheme::Banding, 1, 2.0, VarMethod::Exact, None).unwrap();
        assert_relative_eq!(exact.value, expected, max_relative = 1e-13);
        let banded = var_n(&sigma, n, &WeightScheme::Banding, 1, 2.0, VarMethod::BandedTruncated, Some(1)).unwrap();
        assert_relative_eq!(banded.value, expected, max_relative = 1e-13);
    }

    #[test]
    fn truncation_is_lossless_for_banded_sigma() {
        let sigma = CovModel::banded_uniform(30, 3, 0.25).unwrap().sigma().unwrap();
        for scheme in [WeightScheme::Banding, WeightScheme::CzzTaper] {
            let exact = var_n(&sigma, 50, &scheme, 4, 2.0, VarMethod::Exact, None).unwrap();
            let banded = var_n(&sigma, 50, &scheme, 4, 2.0, VarMethod::BandedTruncated, Some(3)).unwrap();
            assert_relative_eq!(exact.value, banded.value, max_relative = 1e-12);
        }
    }

    #[test]
    fn full_band_truncation_matches_exact_on_dense_sigma() {
        let sigma = CovModel::ar_decay(12, 0.6).unwrap().sigma().unwrap();
        for tau in [1, 3, 7] {
            let exact = var_n(&sigma, 20, &WeightScheme::CzzTaper, tau, 3.0, VarMethod::Exact, None).unwrap();
            let banded = var_n(&sigma, 20, &WeightScheme::CzzTaper, tau, 3.0, VarMethod::BandedTruncated, Some(12)).unwrap();
            assert_relative_eq!(exact.value, banded.value, max_relative = 1e-12);
        }
    }

    #[test]
    fn infeasible_requests() {
        let big = SymMatrix::identity(EXACT_VAR_MAX_P + 1);
        assert!(matches!(
            var_n(&big, 10, &WeightScheme::Banding, 1, 2.0, VarMethod::Exact, None),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            var_n(&big, 10, &WeightScheme::Banding, 1, 2.0, VarMethod::BandedTruncated, None),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn positive_on_assorted_models() {
        let models = [
            CovModel::ar_decay(20, 0.9).unwrap(),
            CovModel::poly_decay(20, 0.6, 0.1).unwrap(),
            CovModel::banded_uniform(20, 5, 0.25).unwrap(),
            CovModel::identity(20).unwrap(),
        ];
        for m in &models {
            let sigma = m.sigma().unwrap();
            for tau in [1, 2, 5, 20] {
                for c in [2.0, 5.5] {
                    let v = var_n(&sigma, 25, &WeightScheme::Banding, tau, c, VarMethod::Exact, None).unwrap();
                    assert!(v.value > 0.0);
                }
            }
        }
    }
}
