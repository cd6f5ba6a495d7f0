//! Elementary symmetric polynomials of a Hessian spectrum and the cone
//! structure built on them.
//!
//! `σ_k` is evaluated through the coefficient recurrence for the polynomial
//! `Π_i (t + λ_i)`, which is O(n·k) and stable for mixed-sign spectra; subset
//! enumeration exists only as a test oracle.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::CoreError;

/// Ordered list of eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

/// Which Gårding cone to test: the open cone `Γ_k` (`strict`) or its closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeQuery {
    pub k: usize,
    pub strict: bool,
}

impl ConeQuery {
    pub fn strict(k: usize) -> Self {
        ConeQuery { k, strict: true }
    }

    pub fn closure(k: usize) -> Self {
        ConeQuery { k, strict: false }
    }
}

impl Spectrum {
    /// Builds a spectrum, rejecting empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self, CoreError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidSpectrum);
        }
        Ok(Spectrum { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    fn check_order(&self, k: usize) -> Result<(), CoreError> {
        if k == 0 || k > self.len() {
            Err(CoreError::OrderOutOfRange { k, n: self.len() })
        } else {
            Ok(())
        }
    }

    /// `σ_k(λ)`: the sum over all k-subsets of products of entries.
    pub fn sigma(&self, k: usize) -> Result<f64, CoreError> {
        self.check_order(k)?;
        Ok(elem_sym(&self.values, k))
    }

    /// All of `(σ_1, …, σ_n)` in one polynomial-build pass.
    pub fn sigma_all(&self) -> Vec<f64> {
        elem_sym_all(&self.values)
    }

    /// Gradient of `σ_k`: entry `i` is `σ_{k−1}` of the spectrum with `λ_i`
    /// removed (the diagonalized Newton tensor `S_k^{ij}`).
    pub fn sigma_grad(&self, k: usize) -> Result<Vec<f64>, CoreError> {
        self.check_order(k)?;
        Ok(elem_sym_grad(&self.values, k))
    }

    /// Membership in `Γ_k` (strict) or `Γ̄_k` (closure): `σ_j > 0` resp.
    /// `σ_j ≥ 0` for all `j = 1..k`. Exact sign test, no tolerance.
    pub fn in_gamma(&self, q: ConeQuery) -> bool {
        if q.k == 0 || q.k > self.len() {
            return false;
        }
        let sig = self.sigma_all();
        sig[..q.k]
            .iter()
            .all(|&s| if q.strict { s > 0.0 } else { s >= 0.0 })
    }

    /// Normalized Maclaurin means `m_j = (σ_j / C(n,j))^{1/j}`, `j = 1..k`.
    /// Non-increasing on `Γ_k` by Maclaurin's inequality.
    pub fn maclaurin_chain(&self, k: usize) -> Result<Vec<f64>, CoreError> {
        self.check_order(k)?;
        if !self.in_gamma(ConeQuery::strict(k)) {
            return Err(CoreError::OutsideCone { k });
        }
        let n = self.len();
        let sig = self.sigma_all();
        Ok((1..=k)
            .map(|j| math::powf(sig[j - 1] / binomial(n, j), 1.0 / j as f64))
            .collect())
    }

    /// The concave reformulation `F(λ) = σ_k(λ)^{1/k}`.
    pub fn fk_value(&self, k: usize) -> Result<f64, CoreError> {
        let s = self.sigma(k)?;
        if s < 0.0 {
            return Err(CoreError::NegativeSigma { k, value: s });
        }
        Ok(math::powf(s, 1.0 / k as f64))
    }
}

// Entries are fed to the recurrence in sorted order so that permuted inputs
// see bit-identical accumulation.
fn sorted(lam: &[f64]) -> Vec<f64> {
    let mut v = lam.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn elem_sym_sorted(lam: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (cnt, &x) in lam.iter().enumerate() {
        let top = k.min(cnt + 1);
        for j in (1..=top).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[k]
}

/// `σ_k` of a raw slice; callers guarantee `1 ≤ k ≤ lam.len()`.
pub fn elem_sym(lam: &[f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= lam.len());
    elem_sym_sorted(&sorted(lam), k)
}

/// `(σ_1, …, σ_n)` of a raw slice.
pub fn elem_sym_all(lam: &[f64]) -> Vec<f64> {
    let n = lam.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (cnt, &x) in sorted(lam).iter().enumerate() {
        for j in (1..=cnt + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e.remove(0);
    e
}

/// Gradient of `σ_k`: entry `i` is `σ_{k−1}(λ with λ_i deleted)`.
pub fn elem_sym_grad(lam: &[f64], k: usize) -> Vec<f64> {
    debug_assert!(k >= 1 && k <= lam.len());
    let n = lam.len();
    if k == 1 {
        return vec![1.0; n];
    }
    // Rebuild the deleted polynomial per entry: O(n^2 k), fine at n <= 8.
    (0..n)
        .map(|i| {
            let rest: Vec<f64> = lam
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| x)
                .collect();
            elem_sym_sorted(&sorted(&rest), k - 1)
        })
        .collect()
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
