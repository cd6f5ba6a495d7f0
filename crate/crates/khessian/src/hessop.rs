//! Finite-difference Hessians on the grid, pointwise spectra, `S_k[u]`
//! fields, admissibility masks, and assembly of the linearized operator
//! with coefficients `S_k^{ij}[u]`.
//!
//! Stencils: centered second differences on the diagonal, the 4-point
//! centered cross stencil off-diagonal. Both are exact on quadratics.

use khessian_core::{symfun, ConeQuery, Spectrum, SymMatrix};
use thiserror::Error;

use crate::grid::{Grid, GridField, PointClass};
use crate::sparse::Csr;

#[derive(Debug, Error)]
pub enum HessError {
    #[error("point {0} is not interior")]
    NotInterior(usize),
    #[error("order k={k} out of range for dimension {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("inadmissible Hessian spectrum at point {idx} {point:?}")]
    Inadmissible { idx: usize, point: Vec<f64> },
}

/// Discrete Hessian at an interior point.
pub fn hessian_at(u: &GridField, idx: usize) -> Result<SymMatrix, HessError> {
    if u.class(idx) != PointClass::Interior {
        return Err(HessError::NotInterior(idx));
    }
    Ok(hessian_unchecked(u, idx))
}

pub(crate) fn hessian_unchecked(u: &GridField, idx: usize) -> SymMatrix {
    let g = u.grid();
    let n = g.dim();
    let center = u.value(idx);
    let mut h = SymMatrix::zeros(n);
    let mut delta = vec![0isize; n];
    for i in 0..n {
        let hi = g.spacing(i);
        delta.iter_mut().for_each(|d| *d = 0);
        delta[i] = 1;
        let up = u.value(g.offset(idx, &delta).expect("stencil open"));
        delta[i] = -1;
        let dn = u.value(g.offset(idx, &delta).expect("stencil open"));
        h.set(i, i, (up - 2.0 * center + dn) / (hi * hi));
        for j in i + 1..n {
            let hj = g.spacing(j);
            let mut corner = |si: isize, sj: isize| {
                delta.iter_mut().for_each(|d| *d = 0);
                delta[i] = si;
                delta[j] = sj;
                u.value(g.offset(idx, &delta).expect("stencil open"))
            };
            let cross = corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1);
            h.set(i, j, cross / (4.0 * hi * hj));
        }
    }
    h
}

/// Eigenvalues of the discrete Hessian at an interior point, non-increasing.
pub fn spectrum_at(u: &GridField, idx: usize) -> Result<Spectrum, HessError> {
    let h = hessian_at(u, idx)?;
    Ok(Spectrum::new(h.spectrum()).expect("finite spectrum"))
}

/// `S_k[u]` at every interior point; boundary/exterior carry NaN as the
/// unset marker.
pub fn sk_field(u: &GridField, k: usize) -> Result<GridField, HessError> {
    let n = u.grid().dim();
    if k == 0 || k > n {
        return Err(HessError::KOutOfRange { k, n });
    }
    let mut out = GridField::new(u.grid().clone(), u.classes().to_vec());
    for idx in 0..u.grid().len() {
        let v = if u.class(idx) == PointClass::Interior {
            let lam = hessian_unchecked(u, idx).spectrum();
            symfun::elem_sym(&lam, k)
        } else {
            f64::NAN
        };
        out.set(idx, v);
    }
    Ok(out)
}

/// Per-point admissibility: `Some(flag)` at interior points, `None` elsewhere.
pub fn admissibility_mask(u: &GridField, k: usize, strict: bool) -> Vec<Option<bool>> {
    let q = ConeQuery { k, strict };
    (0..u.grid().len())
        .map(|idx| {
            if u.class(idx) == PointClass::Interior {
                let lam = hessian_unchecked(u, idx).spectrum();
                Some(Spectrum::new(lam).expect("finite").in_gamma(q))
            } else {
                None
            }
        })
        .collect()
}

/// Bijection between interior grid points and linear-system unknowns.
#[derive(Debug, Clone)]
pub struct InteriorMap {
    pub unknown_of: Vec<Option<usize>>,
    pub point_of: Vec<usize>,
}

impl InteriorMap {
    pub fn new(class: &[PointClass]) -> InteriorMap {
        let mut unknown_of = vec![None; class.len()];
        let mut point_of = Vec::new();
        for (idx, &c) in class.iter().enumerate() {
            if c == PointClass::Interior {
                unknown_of[idx] = Some(point_of.len());
                point_of.push(idx);
            }
        }
        InteriorMap {
            unknown_of,
            point_of,
        }
    }

    pub fn len(&self) -> usize {
        self.point_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_of.is_empty()
    }
}

/// The linearized k-Hessian operator on interior unknowns, Dirichlet rows
/// eliminated (boundary increments are zero).
pub struct LinearOp {
    pub map: InteriorMap,
    pub matrix: Csr,
}

impl LinearOp {
    /// Applies the operator to a field increment that vanishes on the
    /// boundary.
    pub fn apply(&self, v: &GridField) -> Vec<f64> {
        let x: Vec<f64> = self.map.point_of.iter().map(|&i| v.value(i)).collect();
        let mut y = vec![0.0; x.len()];
        self.matrix.matvec(&x, &mut y);
        y
    }
}

/// Assembles `v ↦ Σ_ij C(p)_ij (D²v)_ij` over interior unknowns, with the
/// coefficient matrix supplied per interior point.
pub fn assemble(
    grid: &Grid,
    map: &InteriorMap,
    coeff_at: impl FnMut(usize) -> SymMatrix,
) -> Csr {
    Csr::from_rows(assemble_rows(grid, map, coeff_at))
}

/// Row-level form of [`assemble`]: one row per entry of `map.point_of`, with
/// columns taken from `map.unknown_of`. Callers may append further equations
/// (e.g. boundary collocation rows) before building the matrix.
pub fn assemble_rows(
    grid: &Grid,
    map: &InteriorMap,
    mut coeff_at: impl FnMut(usize) -> SymMatrix,
) -> Vec<Vec<(usize, f64)>> {
    let n = grid.dim();
    let mut rows = Vec::with_capacity(map.len());
    let mut delta = vec![0isize; n];
    for &idx in &map.point_of {
        let b = coeff_at(idx);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * n + 2 * n * (n - 1) + 1);
        let mut diag = 0.0;
        for i in 0..n {
            let hi = grid.spacing(i);
            let c = b.get(i, i) / (hi * hi);
            diag -= 2.0 * c;
            for s in [-1isize, 1] {
                delta.iter_mut().for_each(|d| *d = 0);
                delta[i] = s;
                let nb = grid.offset(idx, &delta).expect("stencil open");
                if let Some(col) = map.unknown_of[nb] {
                    row.push((col, c));
                }
            }
            for j in i + 1..n {
                let hj = grid.spacing(j);
                let w = b.get(i, j) / (2.0 * hi * hj);
                if w == 0.0 {
                    continue;
                }
                for (si, sj, sign) in
                    [(1isize, 1isize, 1.0), (-1, -1, 1.0), (1, -1, -1.0), (-1, 1, -1.0)]
                {
                    delta.iter_mut().for_each(|d| *d = 0);
                    delta[i] = si;
                    delta[j] = sj;
                    let nb = grid.offset(idx, &delta).expect("stencil open");
                    if let Some(col) = map.unknown_of[nb] {
                        row.push((col, sign * w));
                    }
                }
            }
        }
        row.push((map.unknown_of[idx].unwrap(), diag));
        rows.push(row);
    }
    rows
}

/// Coefficient matrix `S_k^{ij}[u]` at an interior point: the gradient of
/// `σ_k` conjugated back through the eigenvector frame. `k = 1` short-cuts
/// to the identity so the operator is exactly the discrete Laplacian.
pub fn newton_tensor(h: &SymMatrix, k: usize) -> SymMatrix {
    if k == 1 {
        return SymMatrix::identity(h.dim());
    }
    let e = h.eigen();
    let grad = symfun::elem_sym_grad(&e.values, k);
    e.assemble(&grad)
}

/// The linearized operator `v ↦ Σ_ij S_k^{ij}[u]·(D²v)_ij` for a strictly
/// admissible `u`; reports the first inadmissible point otherwise.
pub fn linearized(u: &GridField, k: usize) -> Result<LinearOp, HessError> {
    let n = u.grid().dim();
    if k == 0 || k > n {
        return Err(HessError::KOutOfRange { k, n });
    }
    let map = InteriorMap::new(u.classes());
    for &idx in &map.point_of {
        let lam = hessian_unchecked(u, idx).spectrum();
        if !Spectrum::new(lam).expect("finite").in_gamma(ConeQuery::strict(k)) {
            return Err(HessError::Inadmissible {
                idx,
                point: u.grid().point(idx),
            });
        }
    }
    let matrix = assemble(u.grid(), &map, |idx| {
        newton_tensor(&hessian_unchecked(u, idx), k)
    });
    Ok(LinearOp { map, matrix })
}
