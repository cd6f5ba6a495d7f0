//! Small dense symmetric matrices (Hessians) and their eigendecomposition.
//!
//! Eigenvalues for n ≤ 3 come from closed forms (quadratic formula and the
//! trigonometric method); eigenvector frames, and eigenvalues for larger n,
//! come from cyclic Jacobi rotations. Jacobi is used for every frame so that
//! clustered eigenvalues never hit a closed-form branch.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;

/// An n×n real symmetric matrix stored as the packed lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    a: Vec<f64>,
}

/// Eigendecomposition `A = Q diag(values) Qᵀ`, values in non-increasing order,
/// `vectors` column-major (column `i` pairs with `values[i]`).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    n: usize,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    i * (i + 1) / 2 + j
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1);
        SymMatrix {
            n,
            a: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the lower triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.a[tri(i, j)]
        } else {
            self.a[tri(j, i)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i >= j {
            self.a[tri(i, j)] = v;
        } else {
            self.a[tri(j, i)] = v;
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                s += v * v;
            }
        }
        math::sqrt(s)
    }

    /// Quadratic form `ξᵀ A ξ`.
    pub fn quad_form(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.n);
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += xi[i] * self.get(i, j) * xi[j];
            }
        }
        s
    }

    /// Eigenvalues in non-increasing order.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut vals = match self.n {
            1 => vec![self.get(0, 0)],
            2 => self.eig2(),
            3 => self.eig3(),
            _ => jacobi(self, false).0,
        };
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals
    }

    /// Full eigendecomposition via Jacobi, sorted non-increasing.
    pub fn eigen(&self) -> Eigen {
        let (mut vals, mut vecs) = jacobi(self, true);
        let n = self.n;
        // Sort values descending, permuting columns along.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
        let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
        let mut sorted_vecs = vec![0.0; n * n];
        for (new, &old) in order.iter().enumerate() {
            sorted_vecs[new * n..(new + 1) * n].copy_from_slice(&vecs[old * n..(old + 1) * n]);
        }
        vals = sorted_vals;
        vecs = sorted_vecs;
        Eigen {
            values: vals,
            vectors: vecs,
            n,
        }
    }

    fn eig2(&self) -> Vec<f64> {
        let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(1, 1));
        let t = 0.5 * (a + c);
        let d = math::hypot(0.5 * (a - c), b);
        vec![t + d, t - d]
    }

    // Trigonometric closed form for 3x3 symmetric eigenvalues.
    fn eig3(&self) -> Vec<f64> {
        let a = self;
        let p1 = a.get(0, 1) * a.get(0, 1)
            + a.get(0, 2) * a.get(0, 2)
            + a.get(1, 2) * a.get(1, 2);
        let q = (a.get(0, 0) + a.get(1, 1) + a.get(2, 2)) / 3.0;
        let p2 = (a.get(0, 0) - q) * (a.get(0, 0) - q)
            + (a.get(1, 1) - q) * (a.get(1, 1) - q)
            + (a.get(2, 2) - q) * (a.get(2, 2) - q)
            + 2.0 * p1;
        if p2 <= f64::MIN_POSITIVE * 64.0 {
            return vec![q, q, q];
        }
        let p = math::sqrt(p2 / 6.0);
        // B = (A - q I)/p; r = det(B)/2 in [-1, 1] up to rounding.
        let b = |i: usize, j: usize| (a.get(i, j) - if i == j { q } else { 0.0 }) / p;
        let det_b = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
            - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
            + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        let r = (det_b / 2.0).clamp(-1.0, 1.0);
        let phi = math::acos(r) / 3.0;
        let e1 = q + 2.0 * p * math::cos(phi);
        let e3 = q + 2.0 * p * math::cos(phi + 2.0 * PI / 3.0);
        let e2 = 3.0 * q - e1 - e3;
        vec![e1, e2, e3]
    }
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn vector(&self, col: usize) -> &[f64] {
        &self.vectors[col * self.n..(col + 1) * self.n]
    }

    /// Reassembles `Q diag(d) Qᵀ` in the stored frame; with `d = values`
    /// this reproduces the original matrix.
    pub fn assemble(&self, d: &[f64]) -> SymMatrix {
        debug_assert_eq!(d.len(), self.n);
        let n = self.n;
        SymMatrix::from_fn(n, |i, j| {
            let mut s = 0.0;
            for c in 0..n {
                let q = self.vector(c);
                s += d[c] * q[i] * q[j];
            }
            s
        })
    }
}

/// Cyclic Jacobi. Returns (eigenvalues, eigenvectors column-major); the
/// vector matrix is identity-sized junk when `want_vectors` is false.
fn jacobi(m: &SymMatrix, want_vectors: bool) -> (Vec<f64>, Vec<f64>) {
    let n = m.n;
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = m.get(i, j);
        }
    }
    let mut v = vec![0.0; if want_vectors { n * n } else { 0 }];
    if want_vectors {
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
    }
    let norm = m.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if math::sqrt(off) <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if math::abs(apq) <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if math::abs(theta) > 1e150 {
                    1.0 / (2.0 * theta)
                } else {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (math::abs(theta) + math::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                // Apply the rotation G(p, q; c, s) on both sides.
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                if want_vectors {
                    for i in 0..n {
                        let vip = v[i * n + p];
                        let viq = v[i * n + q];
                        v[i * n + p] = c * vip - s * viq;
                        v[i * n + q] = s * vip + c * viq;
                    }
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[i * n + i]).collect();
    // Column-major: column c is the eigenvector for vals[c].
    let mut vecs = vec![0.0; if want_vectors { n * n } else { 0 }];
    if want_vectors {
        for c in 0..n {
            for i in 0..n {
                vecs[c * n + i] = v[i * n + c];
            }
        }
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_zero() {
        assert_eq!(SymMatrix::identity(3).spectrum(), vec![1.0, 1.0, 1.0]);
        assert_eq!(SymMatrix::zeros(3).spectrum(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn diagonal_3x3() {
        let mut m = SymMatrix::zeros(3);
        m.set(0, 0, 6.0);
        m.set(1, 1, 3.0);
        m.set(2, 2, 3.0);
        let s = m.spectrum();
        assert!((s[0] - 6.0).abs() < 1e-13);
        assert!((s[1] - 3.0).abs() < 1e-13);
        assert!((s[2] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn off_diagonal_2x2() {
        // [[0,1],[1,0]] has eigenvalues +-1.
        let mut m = SymMatrix::zeros(2);
        m.set(0, 1, 1.0);
        let s = m.spectrum();
        assert!((s[0] - 1.0).abs() < 1e-15);
        assert!((s[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_reconstructs() {
        let m = SymMatrix::from_fn(4, |i, j| 1.0 / (1.0 + (i + j) as f64) + if i == j { 2.0 } else { 0.0 });
        let e = m.eigen();
        let back = e.assemble(&e.values);
        for i in 0..4 {
            for j in 0..4 {
                assert!((back.get(i, j) - m.get(i, j)).abs() < 1e-12);
            }
        }
        // Sorted non-increasing.
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1] - 1e-14);
        }
    }

    #[test]
    fn jacobi_matches_closed_form_3x3() {
        let m = SymMatrix::from_fn(3, |i, j| ((i * 3 + j + 1) as f64).sin() + if i == j { 4.0 } else { 0.0 });
        let closed = m.spectrum();
        let jac = m.eigen().values;
        for (a, b) in closed.iter().zip(&jac) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn quad_form_matches_entries() {
        let m = SymMatrix::from_fn(3, |i, j| (i + j) as f64);
        let xi = [1.0, 0.0, 0.0];
        assert_eq!(m.quad_form(&xi), m.get(0, 0));
    }
}
