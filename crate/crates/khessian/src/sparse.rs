//! CSR matrices, ILU(0) factorization and preconditioned BiCGStab for the
//! Newton linear systems. The operators here come from 19-point (3D) or
//! 9-point (2D) stencils, so ILU(0) keeps the stencil sparsity.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinError {
    #[error("BiCGStab did not reach tolerance in {0} iterations (residual {1:.3e})")]
    NotConverged(usize, f64),
    #[error("breakdown in iterative solve (rho or omega vanished)")]
    Breakdown,
    #[error("zero pivot in ILU(0) at row {0}")]
    ZeroPivot(usize),
}

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Builds from per-row (column, value) lists; entries in a row are merged
    /// and sorted.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Csr {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[p] * x[self.indices[p]];
            }
            y[i] = s;
        }
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }
}

/// ILU(0): incomplete LU on the sparsity pattern of `a`. L has unit diagonal;
/// both factors share the CSR layout of `a`.
pub struct Ilu0 {
    pattern: Csr,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Ilu0, LinError> {
        let n = a.n;
        let mut f = a.clone();
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in f.indptr[i]..f.indptr[i + 1] {
                if f.indices[p] == i {
                    diag_pos[i] = p;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(LinError::ZeroPivot(i));
            }
        }
        // Position map for the current row, reused across rows.
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (f.indptr[i], f.indptr[i + 1]);
            for p in start..end {
                pos[f.indices[p]] = p;
            }
            for p in start..end {
                let k = f.indices[p];
                if k >= i {
                    break;
                }
                let pivot = f.data[diag_pos[k]];
                if pivot == 0.0 {
                    return Err(LinError::ZeroPivot(k));
                }
                let lik = f.data[p] / pivot;
                f.data[p] = lik;
                for q in diag_pos[k] + 1..f.indptr[k + 1] {
                    let j = f.indices[q];
                    let target = pos[j];
                    if target != usize::MAX {
                        f.data[target] -= lik * f.data[q];
                    }
                }
            }
            for p in start..end {
                pos[f.indices[p]] = usize::MAX;
            }
            if f.data[diag_pos[i]] == 0.0 {
                return Err(LinError::ZeroPivot(i));
            }
        }
        Ok(Ilu0 {
            pattern: f,
            diag_pos,
        })
    }

    /// Solves `L U x = b` in place.
    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let f = &self.pattern;
        let n = f.n;
        x.copy_from_slice(b);
        for i in 0..n {
            let mut s = x[i];
            for p in f.indptr[i]..self.diag_pos[i] {
                s -= f.data[p] * x[f.indices[p]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag_pos[i] + 1..f.indptr[i + 1] {
                s -= f.data[p] * x[f.indices[p]];
            }
            x[i] = s / f.data[self.diag_pos[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGStab. Returns the solution and iteration count.
pub fn bicgstab(
    a: &Csr,
    m: &Ilu0,
    b: &[f64],
    tol_rel: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize), LinError> {
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let tol = tol_rel * bnorm;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let rhat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho1 = dot(&rhat, &r);
        if rho1.abs() < 1e-300 {
            return Err(LinError::Breakdown);
        }
        let beta = (rho1 / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.solve(&p, &mut phat);
        a.matvec(&phat, &mut v);
        let denom = dot(&rhat, &v);
        if denom.abs() < 1e-300 {
            return Err(LinError::Breakdown);
        }
        alpha = rho1 / denom;
        // s reuses r's storage
        for i in 0..n {
            r[i] -= alpha * v[i];
        }
        if norm(&r) <= tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok((x, it));
        }
        m.solve(&r, &mut shat);
        a.matvec(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(LinError::Breakdown);
        }
        omega = dot(&t, &r) / tt;
        if omega == 0.0 {
            return Err(LinError::Breakdown);
        }
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] -= omega * t[i];
        }
        if norm(&r) <= tol {
            return Ok((x, it));
        }
        rho = rho1;
    }
    Err(LinError::NotConverged(max_iter, norm(&r) / bnorm))
}
