//! Gaussian moment oracles.
//!
//! [`exact_sure_variance`] computes `Var(SURE_c(τ))` without any asymptotic
//! approximation. It uses the representation `Σ̃ ~ (1/n) Σ_{k<n} Z_k Z_kᵀ`
//! with `Z_k` i.i.d. `N(0, Σ)`: SURE_c is a quadratic form in the entries of
//! Σ̃, so its second moment needs `E[σ̃_ab σ̃_cd σ̃_ef σ̃_gh]`. Expanding each
//! σ̃ over replicates, the expectation depends only on which of the four
//! replicate indices coincide (a set partition); within each group of equal
//! replicates the moment is a Gaussian product evaluated by Isserlis.

use crate::criterion::sure_constants;
use crate::error::{Error, Result};
use crate::estimate::WeightScheme;
use crate::matrix::SymMatrix;

use super::coeffs;

/// Caps for [`exact_sure_variance`].
pub const EXACT_SURE_MAX_P: usize = 3;
pub const EXACT_SURE_MAX_N: usize = 100;

const ISSERLIS_MAX_LEN: usize = 8;

/// `E[Π_k x_{indices[k]}]` for `x ~ N(0, Σ)`: the sum over all perfect
/// pairings of the product of paired covariances. Odd length gives 0.
pub fn isserlis_moment(sigma: &SymMatrix, indices: &[usize]) -> Result<f64> {
    if indices.len() > ISSERLIS_MAX_LEN {
        return Err(Error::Infeasible(format!(
            "Isserlis moments are capped at {ISSERLIS_MAX_LEN} factors, got {}",
            indices.len()
        )));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= sigma.dim()) {
        return Err(Error::Parameter(format!("index {bad} out of range for p = {}", sigma.dim())));
    }
    if indices.len() % 2 == 1 {
        return Ok(0.0);
    }
    let mut buf = indices.to_vec();
    Ok(pairings(sigma, &mut buf))
}

fn pairings(sigma: &SymMatrix, idx: &mut [usize]) -> f64 {
    match idx.len() {
        0 => 1.0,
        2 => sigma.get(idx[0], idx[1]),
        len => {
            let mut total = 0.0;
            for k in 1..len {
                idx.swap(1, k);
                total += sigma.get(idx[0], idx[1]) * pairings(sigma, &mut idx[2..]);
                idx.swap(1, k);
            }
            total
        }
    }
}

/// All set partitions of `{0, .., k-1}` as block-label vectors
/// (restricted growth strings): `labels[q]` is the block of element `q`.
pub fn set_partitions(k: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, k: usize, blocks: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=blocks {
            prefix.push(b);
            grow(prefix, k, blocks.max(b + 1), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::with_capacity(k), k, 0, &mut out);
    out
}

/// `E[Π_q σ̃_{e_q}]` for `σ̃ = (1/n) Σ_{r=1}^{m} z_r z_rᵀ`, `m = n - 1`.
fn wishart_moment(sigma: &SymMatrix, entries: &[(usize, usize)], n: usize, partitions: &[Vec<usize>]) -> f64 {
    let m = (n - 1) as f64;
    let mut total = 0.0;
    for labels in partitions {
        let blocks = labels.iter().max().map_or(0, |b| b + 1);
        // number of ways to give the blocks distinct replicate indices
        let ways: f64 = (0..blocks).map(|b| m - b as f64).product();
        if ways == 0.0 {
            continue;
        }
        let mut prod = 1.0;
        for b in 0..blocks {
            let idx: Vec<usize> = entries
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == b)
                .flat_map(|(&(x, y), _)| [x, y])
                .collect();
            prod *= isserlis_moment(sigma, &idx).expect("at most 8 indices");
            if prod == 0.0 {
                break;
            }
        }
        total += ways * prod;
    }
    total / (n as f64).powi(entries.len() as i32)
}

/// Coefficient times `σ̂_{ab} σ̂_{cd}`.
type QuadTerm = (f64, (usize, usize), (usize, usize));

/// Exact `Var(SURE_c(τ))` for tiny problems (`p <= 3`, `n <= 100`).
pub fn exact_sure_variance(sigma: &SymMatrix, n: usize, scheme: &WeightScheme, tau: usize, c: f64) -> Result<f64> {
    let p = sigma.dim();
    if p > EXACT_SURE_MAX_P || n > EXACT_SURE_MAX_N {
        return Err(Error::Infeasible(format!(
            "exact SURE variance is capped at p <= {EXACT_SURE_MAX_P}, n <= {EXACT_SURE_MAX_N} (got p = {p}, n = {n})"
        )));
    }
    if n < 4 {
        return Err(Error::SampleSize { n, min: 4 });
    }
    let consts = sure_constants(n, c)?;
    scheme.check_tau(tau)?;

    // SURE_c = Σ_{a,b} Ā_ab σ̃_ab² + b_n b̄_ab σ̃_aa σ̃_bb
    let mut terms: Vec<QuadTerm> = Vec::with_capacity(2 * p * p);
    for a in 0..p {
        for b in 0..p {
            let k = coeffs(n, c, scheme.weight(tau, a.abs_diff(b)));
            terms.push((k.big_a, (a, b), (a, b)));
            terms.push((consts.b_n * k.bbar, (a, a), (b, b)));
        }
    }
    let two = set_partitions(2);
    let four = set_partitions(4);
    let mean: f64 = terms
        .iter()
        .map(|&(w, e1, e2)| w * wishart_moment(sigma, &[e1, e2], n, &two))
        .sum();
    let mut second = 0.0;
    for &(w1, e1, e2) in &terms {
        for &(w2, e3, e4) in &terms {
            second += w1 * w2 * wishart_moment(sigma, &[e1, e2, e3, e4], n, &four);
        }
    }
    Ok(second - mean * mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CovModel;
    use crate::theory::risk_profile;
    use approx::assert_relative_eq;

    fn random_sigma() -> SymMatrix {
        CovModel::explicit(SymMatrix::from_array(ndarray::array![
            [2.0, 0.3, -0.5, 0.1],
            [0.3, 1.5, 0.7, 0.2],
            [-0.5, 0.7, 1.2, -0.4],
            [0.1, 0.2, -0.4, 0.9]
        ]).unwrap())
        .unwrap()
        .sigma()
        .unwrap()
    }

    #[test]
    fn isserlis_four_distinct_indices() {
        let s = random_sigma();
        let expected = s.get(0, 1) * s.get(2, 3) + s.get(0, 2) * s.get(1, 3) + s.get(0, 3) * s.get(1, 2);
        assert_relative_eq!(isserlis_moment(&s, &[0, 1, 2, 3]).unwrap(), expected, max_relative = 1e-15);
    }

    #[test]
    fn isserlis_small_cases() {
        let id = SymMatrix::identity(3);
        assert_eq!(isserlis_moment(&id, &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(isserlis_moment(&id, &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(isserlis_moment(&id, &[]).unwrap(), 1.0);
        // E x⁴ = 3, E x⁶ = 15, E x⁸ = 105 for a standard normal
        assert_eq!(isserlis_moment(&id, &[0; 4]).unwrap(), 3.0);
        assert_eq!(isserlis_moment(&id, &[1; 6]).unwrap(), 15.0);
        assert_eq!(isserlis_moment(&id, &[2; 8]).unwrap(), 105.0);
        assert!(isserlis_moment(&id, &[0; 10]).is_err());
        assert!(isserlis_moment(&id, &[0, 3]).is_err());
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (0..=5).map(|k| set_partitions(k).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52]);
    }

    #[test]
    fn wishart_second_moments_match_closed_forms() {
        // E σ̃_ij² = (n-1)/n σ_ij² + (n-1)/n² σ_ii σ_jj
        let s = random_sigma();
        let n = 9;
        let nf = n as f64;
        let two = set_partitions(2);
        let got = wishart_moment(&s, &[(0, 2), (0, 2)], n, &two);
        let want = (nf - 1.0) / nf * s.get(0, 2).powi(2) + (nf - 1.0) / nf.powi(2) * s.get(0, 0) * s.get(2, 2);
        assert_relative_eq!(got, want, max_relative = 1e-14);
        // E σ̃_ii σ̃_jj = (n-1)²/n² σ_ii σ_jj + 2(n-1)/n² σ_ij²
        let got = wishart_moment(&s, &[(1, 1), (3, 3)], n, &two);
        let want = (nf - 1.0).powi(2) / nf.powi(2) * s.get(1, 1) * s.get(3, 3)
            + 2.0 * (nf - 1.0) / nf.powi(2) * s.get(1, 3).powi(2);
        assert_relative_eq!(got, want, max_relative = 1e-14);
    }

    #[test]
    fn univariate_variance_from_chi_square_moments() {
        // p = 1: SURE = κ σ̃², σ̃ = σ χ²_m / n.
        let (n, sig) = (5usize, 1.7f64);
        let m = (n - 1) as f64;
        let k = coeffs(n, 2.0, 1.0);
        let b_n = n as f64 / ((n as f64 + 1.0) * (n as f64 - 2.0));
        let kappa = k.big_a + b_n * k.bbar;
        let chi4 = m * (m + 2.0);
        let chi8 = m * (m + 2.0) * (m + 4.0) * (m + 6.0);
        let want = kappa * kappa * sig.powi(4) / (n as f64).powi(4) * (chi8 - chi4 * chi4);
        let s = SymMatrix::from_array(ndarray::array![[sig]]).unwrap();
        let got = exact_sure_variance(&s, n, &WeightScheme::Banding, 1, 2.0).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn homogeneous_of_degree_four() {
        let s = SymMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.3 });
        let base = exact_sure_variance(&s, 8, &WeightScheme::Banding, 2, 2.0).unwrap();
        let tiny = exact_sure_variance(&s.scaled(1e-8), 8, &WeightScheme::Banding, 2, 2.0).unwrap();
        assert_relative_eq!(tiny, base * 1e-32, max_relative = 1e-9);
        assert!((0.0..1e-30).contains(&tiny));
    }

    #[test]
    fn mean_route_agrees_with_risk_profile() {
        // E[SURE_c] assembled from Wishart moments equals the closed-form R_c.
        let s = random_sigma();
        let s3 = SymMatrix::from_fn(3, |i, j| s.get(i, j));
        let n = 12;
        let two = set_partitions(2);
        let consts = sure_constants(n, 3.0).unwrap();
        for tau in 1..=3 {
            let mut mean = 0.0;
            for a in 0..3usize {
                for b in 0..3 {
                    let k = coeffs(n, 3.0, WeightScheme::CzzTaper.weight(tau, a.abs_diff(b)));
                    mean += k.big_a * wishart_moment(&s3, &[(a, b), (a, b)], n, &two);
                    mean += consts.b_n * k.bbar * wishart_moment(&s3, &[(a, a), (b, b)], n, &two);
                }
            }
            let r = risk_profile(&s3, n, &WeightScheme::CzzTaper, 3.0, &[tau]).unwrap();
            assert_relative_eq!(mean, r.values[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn caps_enforced() {
        let s = SymMatrix::identity(4);
        assert!(matches!(exact_sure_variance(&s, 10, &WeightScheme::Banding, 1, 2.0), Err(Error::Infeasible(_))));
        let s = SymMatrix::identity(2);
        assert!(matches!(exact_sure_variance(&s, 101, &WeightScheme::Banding, 1, 2.0), Err(Error::Infeasible(_))));
    }
}
