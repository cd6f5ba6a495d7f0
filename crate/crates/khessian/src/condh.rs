//! Right-hand-side audits: the two structural inequalities on f (a gradient
//! bound |Df| ≤ C₀f^{1−1/k} and a Hessian lower bound
//! f·f_ξξ − (1−1/k)f_ξ² ≥ −C₀f^{2−1/k}), the ε-shift, and a probe for the
//! Hölder/Lipschitz behavior of f^{1/k} near the zero set.
//!
//! The direction ξ is eliminated exactly: the minimum over unit ξ of
//! ξᵀMξ with M = f·D²f − (1−1/k)·Df⊗Df is λ_min(M), so no sphere
//! sampling is involved.

use khessian_core::SymMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::expr::Expr;
use crate::grid::{Grid, GridField, PointClass};

#[derive(Debug, Error)]
pub enum CondhError {
    #[error("f is negative beyond tolerance at {point:?}: {value}")]
    Negative { point: Vec<f64>, value: f64 },
    #[error("sampled right-hand side lives on a different grid")]
    GridMismatch,
    #[error("order k must be at least 1")]
    BadOrder,
}

/// Right-hand side, either symbolic (exact derivatives) or sampled on a grid
/// (centered finite differences where the stencil is available).
#[derive(Debug, Clone)]
pub enum RhsKind {
    Expression(Expr),
    Sampled(GridField),
}

#[derive(Debug, Clone)]
pub struct RhsSpec {
    pub kind: RhsKind,
    pub k: usize,
}

impl RhsSpec {
    pub fn expression(e: Expr, k: usize) -> RhsSpec {
        RhsSpec {
            kind: RhsKind::Expression(e),
            k,
        }
    }

    pub fn sampled(field: GridField, k: usize) -> RhsSpec {
        RhsSpec {
            kind: RhsKind::Sampled(field),
            k,
        }
    }

    /// Values at every grid point. The sampled kind requires the identical
    /// grid; its exterior values are carried through as stored (they are
    /// never used by the solver).
    pub fn values_on(&self, grid: &Grid) -> Result<Vec<f64>, CondhError> {
        match &self.kind {
            RhsKind::Expression(e) => {
                Ok((0..grid.len()).map(|idx| e.eval(&grid.point(idx))).collect())
            }
            RhsKind::Sampled(field) => {
                if field.grid() != grid {
                    return Err(CondhError::GridMismatch);
                }
                Ok(field.values().to_vec())
            }
        }
    }
}

/// Audit outcome. The constants are suprema over the sampled points, not a
/// global certificate; the spacing of the sample grid is recorded for that
/// reason.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionHReport {
    pub c0_gradient: f64,
    pub c0_hessian: f64,
    pub worst_point_gradient: Option<Vec<f64>>,
    pub worst_point_hessian: Option<Vec<f64>>,
    pub degenerate_points_checked: usize,
    pub degenerate_failures: usize,
    pub grid_spacing: f64,
    /// Set when the caller supplied a C₀ to test against.
    pub pass: Option<bool>,
}

struct SamplePoint {
    x: Vec<f64>,
    value: f64,
    grad: Option<Vec<f64>>,
    hess: Option<SymMatrix>,
}

fn sample_points(f: &RhsSpec, grid: &Grid) -> Result<Vec<SamplePoint>, CondhError> {
    let n = grid.dim();
    match &f.kind {
        RhsKind::Expression(e) => {
            let grad = e.gradient(n);
            let hess = e.hessian(n);
            Ok((0..grid.len())
                .map(|idx| {
                    let x = grid.point(idx);
                    let g: Vec<f64> = grad.iter().map(|d| d.eval(&x)).collect();
                    let h = SymMatrix::from_fn(n, |i, j| hess[i][j].eval(&x));
                    SamplePoint {
                        value: e.eval(&x),
                        grad: Some(g),
                        hess: Some(h),
                        x,
                    }
                })
                .collect())
        }
        RhsKind::Sampled(field) => {
            if field.grid() != grid {
                return Err(CondhError::GridMismatch);
            }
            let offsets = grid.stencil_offsets();
            let mut out = Vec::new();
            for idx in 0..grid.len() {
                if field.class(idx) == PointClass::Exterior {
                    continue;
                }
                let stencil_ok = offsets.iter().all(|d| {
                    grid.offset(idx, d)
                        .map(|nb| field.class(nb) != PointClass::Exterior)
                        .unwrap_or(false)
                });
                let (grad, hess) = if stencil_ok {
                    let mut g = vec![0.0; n];
                    let mut delta = vec![0isize; n];
                    for a in 0..n {
                        delta.iter_mut().for_each(|d| *d = 0);
                        delta[a] = 1;
                        let up = field.value(grid.offset(idx, &delta).unwrap());
                        delta[a] = -1;
                        let dn = field.value(grid.offset(idx, &delta).unwrap());
                        g[a] = (up - dn) / (2.0 * grid.spacing(a));
                    }
                    (Some(g), Some(fd_hessian(field, idx)))
                } else {
                    (None, None)
                };
                out.push(SamplePoint {
                    x: grid.point(idx),
                    value: field.value(idx),
                    grad,
                    hess,
                });
            }
            Ok(out)
        }
    }
}

fn fd_hessian(field: &GridField, idx: usize) -> SymMatrix {
    let g = field.grid();
    let n = g.dim();
    let c = field.value(idx);
    let mut delta = vec![0isize; n];
    SymMatrix::from_fn(n, |i, j| {
        if i == j {
            let h = g.spacing(i);
            delta.iter_mut().for_each(|d| *d = 0);
            delta[i] = 1;
            let up = field.value(g.offset(idx, &delta).unwrap());
            delta[i] = -1;
            let dn = field.value(g.offset(idx, &delta).unwrap());
            (up - 2.0 * c + dn) / (h * h)
        } else {
            let (hi, hj) = (g.spacing(i), g.spacing(j));
            let mut corner = |si: isize, sj: isize| {
                delta.iter_mut().for_each(|d| *d = 0);
                delta[i] = si;
                delta[j] = sj;
                field.value(g.offset(idx, &delta).unwrap())
            };
            (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * hi * hj)
        }
    })
}

/// Audits f over all grid samples. Non-degenerate points contribute to the
/// two C₀ suprema; degenerate points (f ≤ 1e−12·max f) are held to the
/// limiting requirements |Df| ≈ 0 and −Df⊗Df ⪰ −tol, with failures counted.
pub fn audit(f: &RhsSpec, grid: &Grid, c0: Option<f64>) -> Result<ConditionHReport, CondhError> {
    let k = f.k;
    if k == 0 {
        return Err(CondhError::BadOrder);
    }
    let pts = sample_points(f, grid)?;
    let max_abs = pts.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
    for p in &pts {
        if p.value < -1e-12 * max_abs {
            return Err(CondhError::Negative {
                point: p.x.clone(),
                value: p.value,
            });
        }
    }
    let max_f = pts.iter().map(|p| p.value).fold(0.0, f64::max);
    let eps_f = 1e-12 * max_f;
    let max_grad = pts
        .iter()
        .filter_map(|p| p.grad.as_ref())
        .map(|g| norm(g))
        .fold(0.0, f64::max);
    let h = grid.max_spacing();
    let tol_grad = 1e-6 * (1.0 + max_grad) * h;
    let tol_hess = tol_grad * tol_grad;

    let e_grad = 1.0 - 1.0 / k as f64;
    let e_hess = 2.0 - 1.0 / k as f64;
    let mut c0_gradient = 0.0f64;
    let mut c0_hessian = 0.0f64;
    let mut worst_grad = None;
    let mut worst_hess = None;
    let mut degenerate = 0usize;
    let mut failures = 0usize;
    for p in &pts {
        let (Some(g), Some(hm)) = (&p.grad, &p.hess) else {
            continue;
        };
        let gn = norm(g);
        if p.value > eps_f {
            let q = gn / p.value.powf(e_grad);
            if q > c0_gradient {
                c0_gradient = q;
                worst_grad = Some(p.x.clone());
            }
            let factor = e_grad; // (1 - 1/k)
            let m = SymMatrix::from_fn(grid.dim(), |i, j| {
                p.value * hm.get(i, j) - factor * g[i] * g[j]
            });
            let lam_min = m.spectrum().last().copied().unwrap();
            let q = (-lam_min).max(0.0) / p.value.powf(e_hess);
            if q > c0_hessian {
                c0_hessian = q;
                worst_hess = Some(p.x.clone());
            }
        } else {
            degenerate += 1;
            if gn > tol_grad {
                failures += 1;
            } else if -(gn * gn) < -tol_hess {
                failures += 1;
            }
        }
    }
    let pass = c0.map(|c| c0_gradient <= c && c0_hessian <= c && failures == 0);
    Ok(ConditionHReport {
        c0_gradient,
        c0_hessian,
        worst_point_gradient: worst_grad,
        worst_point_hessian: worst_hess,
        degenerate_points_checked: degenerate,
        degenerate_failures: failures,
        grid_spacing: h,
        pass,
    })
}

/// The shifted right-hand side f + ε; auditing it never increases either
/// constant (the denominators only grow).
pub fn shift(f: &RhsSpec, eps: f64) -> RhsSpec {
    assert!(eps >= 0.0);
    let kind = match &f.kind {
        RhsKind::Expression(e) => {
            RhsKind::Expression(Expr::Add(Box::new(e.clone()), Box::new(Expr::num(eps))))
        }
        RhsKind::Sampled(field) => {
            let mut shifted = field.clone();
            for v in shifted.values_mut() {
                *v += eps;
            }
            RhsKind::Sampled(shifted)
        }
    };
    RhsSpec { kind, k: f.k }
}

#[derive(Debug, Clone, Serialize)]
pub struct RootRegularityReport {
    /// Max first difference quotient of g = f^{1/k}.
    pub lipschitz_estimate: f64,
    /// Max axis second difference quotient of g.
    pub c11_proxy_max: f64,
    /// Fitted slope of log(per-bin max second quotient) against log(distance
    /// to the zero set of f). −1 flags a Lipschitz-only square root.
    pub c11_proxy_growth_exponent: f64,
    pub zero_set_points: usize,
}

/// Probes the regularity of g = f^{1/k} on the grid box.
pub fn root_regularity_probe(f: &RhsSpec, grid: &Grid) -> Result<RootRegularityReport, CondhError> {
    if f.k == 0 {
        return Err(CondhError::BadOrder);
    }
    let vals = f.values_on(grid)?;
    let max_f = vals.iter().cloned().fold(0.0, f64::max);
    let eps_f = 1e-12 * max_f;
    let root = 1.0 / f.k as f64;
    let g: Vec<f64> = vals.iter().map(|&v| v.max(0.0).powf(root)).collect();
    let n = grid.dim();
    let mut delta = vec![0isize; n];

    let mut lipschitz = 0.0f64;
    for idx in 0..grid.len() {
        for a in 0..n {
            delta.iter_mut().for_each(|d| *d = 0);
            delta[a] = 1;
            if let Some(nb) = grid.offset(idx, &delta) {
                lipschitz = lipschitz.max((g[nb] - g[idx]).abs() / grid.spacing(a));
            }
        }
    }

    let zero_set: Vec<Vec<f64>> = (0..grid.len())
        .filter(|&i| vals[i] <= eps_f)
        .map(|i| grid.point(i))
        .collect();

    // Per-point max axis second quotient where both neighbors exist.
    let mut quotients: Vec<(usize, f64)> = Vec::new();
    let mut c11_max = 0.0f64;
    for idx in 0..grid.len() {
        let mut q = 0.0f64;
        let mut any = false;
        for a in 0..n {
            delta.iter_mut().for_each(|d| *d = 0);
            delta[a] = 1;
            let up = grid.offset(idx, &delta);
            delta[a] = -1;
            let dn = grid.offset(idx, &delta);
            if let (Some(up), Some(dn)) = (up, dn) {
                let h = grid.spacing(a);
                q = q.max((g[up] - 2.0 * g[idx] + g[dn]).abs() / (h * h));
                any = true;
            }
        }
        if any {
            c11_max = c11_max.max(q);
            quotients.push((idx, q));
        }
    }

    let exponent = if zero_set.is_empty() || zero_set.len() == grid.len() {
        0.0
    } else {
        fit_growth_exponent(grid, &zero_set, &quotients)
    };
    Ok(RootRegularityReport {
        lipschitz_estimate: lipschitz,
        c11_proxy_max: c11_max,
        c11_proxy_growth_exponent: exponent,
        zero_set_points: zero_set.len(),
    })
}

fn fit_growth_exponent(grid: &Grid, zero_set: &[Vec<f64>], quotients: &[(usize, f64)]) -> f64 {
    let h = grid.max_spacing();
    let extent: f64 = (0..grid.dim())
        .map(|a| grid.hi()[a] - grid.lo()[a])
        .fold(0.0, f64::max);
    let (d_lo, d_hi) = (2.5 * h, 0.45 * extent);
    if d_hi <= d_lo {
        return 0.0;
    }
    const BINS: usize = 10;
    let mut bin_max = vec![f64::NEG_INFINITY; BINS];
    let log_span = (d_hi / d_lo).ln();
    for &(idx, q) in quotients {
        let x = grid.point(idx);
        let d = zero_set
            .iter()
            .map(|z| {
                x.iter()
                    .zip(z)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        if d < d_lo || d > d_hi || q <= 0.0 {
            continue;
        }
        let b = (((d / d_lo).ln() / log_span) * BINS as f64).floor() as usize;
        let b = b.min(BINS - 1);
        bin_max[b] = bin_max[b].max(q);
    }
    // Least-squares slope of log(max quotient) vs log(bin center distance).
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (b, &q) in bin_max.iter().enumerate() {
        if q.is_finite() {
            let center = d_lo * ((b as f64 + 0.5) / BINS as f64 * log_span).exp();
            xs.push(center.ln());
            ys.push(q.ln());
        }
    }
    if xs.len() < 3 {
        return 0.0;
    }
    let nb = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nb;
    let my = ys.iter().sum::<f64>() / nb;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball_example_rhs() -> RhsSpec {
        RhsSpec::expression(Expr::parse("45*(x1^2+x2^2+x3^2)").unwrap(), 2)
    }

    #[test]
    fn ball_example_constants() {
        // |Df|/f^{1/2} = 90r/(sqrt(45) r) = 6 sqrt(5) at every point.
        let grid = Grid::cube(-1.2, 1.2, 17, 3).unwrap();
        let r = audit(&ball_example_rhs(), &grid, None).unwrap();
        let expect = 6.0 * 5f64.sqrt();
        assert!(
            (r.c0_gradient - expect).abs() / expect < 1e-3,
            "c0_gradient = {}",
            r.c0_gradient
        );
        assert!(r.c0_hessian.abs() < 1e-9, "c0_hessian = {}", r.c0_hessian);
        assert_eq!(r.degenerate_failures, 0);
        assert!(audit(&ball_example_rhs(), &grid, Some(14.0)).unwrap().pass.unwrap());
        assert!(!audit(&ball_example_rhs(), &grid, Some(13.0)).unwrap().pass.unwrap());
    }

    #[test]
    fn constant_rhs_has_zero_constants() {
        let f = RhsSpec::expression(Expr::parse("3").unwrap(), 3);
        let grid = Grid::cube(-1.0, 1.0, 9, 3).unwrap();
        let r = audit(&f, &grid, None).unwrap();
        assert_eq!(r.c0_gradient, 0.0);
        assert_eq!(r.c0_hessian, 0.0);
        assert_eq!(r.degenerate_points_checked, 0);
    }

    #[test]
    fn gk_matches_symbolic_oracle() {
        // f = g^2 with g = 1 + |x|^2: |Df|/f^{1/2} = 2|Dg|, and
        // M = 2 g^3 D^2 g is positive definite, so c0_hessian = 0.
        let f = RhsSpec::expression(Expr::parse("(1 + x1^2 + x2^2)^2").unwrap(), 2);
        let grid = Grid::cube(-1.0, 1.0, 21, 2).unwrap();
        let r = audit(&f, &grid, None).unwrap();
        let mut oracle = 0.0f64;
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            let dg = 2.0 * (x[0] * x[0] + x[1] * x[1]).sqrt();
            oracle = oracle.max(2.0 * dg);
        }
        assert!((r.c0_gradient - oracle).abs() / oracle < 1e-6);
        assert!(r.c0_hessian.abs() < 1e-9);
    }

    #[test]
    fn sampled_kind_close_to_expression_kind() {
        let grid = Grid::cube(-1.2, 1.2, 21, 3).unwrap();
        let e = Expr::parse("45*(x1^2+x2^2+x3^2)").unwrap();
        let field = GridField::on_box(grid.clone(), |x| e.eval(x));
        let fs = RhsSpec::sampled(field, 2);
        let r = audit(&fs, &grid, None).unwrap();
        let expect = 6.0 * 5f64.sqrt();
        // Centered differences are exact on this quadratic away from the
        // boundary ring, so the constant matches tightly.
        assert!((r.c0_gradient - expect).abs() / expect < 1e-2);
    }

    #[test]
    fn shift_never_raises_constants() {
        let grid = Grid::cube(-1.2, 1.2, 13, 3).unwrap();
        let base = audit(&ball_example_rhs(), &grid, None).unwrap();
        for eps in [1e-6, 1e-3, 1.0] {
            let r = audit(&shift(&ball_example_rhs(), eps), &grid, None).unwrap();
            assert!(r.c0_gradient <= base.c0_gradient + 1e-9, "eps={eps}");
            assert!(r.c0_hessian <= base.c0_hessian + 1e-9, "eps={eps}");
        }
        // f ≡ 0 shifted is constant: both constants vanish.
        let zero = RhsSpec::expression(Expr::parse("0").unwrap(), 2);
        let r = audit(&shift(&zero, 1.0), &grid, None).unwrap();
        assert_eq!(r.c0_gradient, 0.0);
        assert_eq!(r.c0_hessian, 0.0);
        // eps = 0 is the identity.
        let r0 = audit(&shift(&ball_example_rhs(), 0.0), &grid, None).unwrap();
        assert_eq!(r0.c0_gradient, base.c0_gradient);
        assert_eq!(r0.c0_hessian, base.c0_hessian);
    }

    #[test]
    fn negative_rhs_rejected() {
        let f = RhsSpec::expression(Expr::parse("x1").unwrap(), 2);
        let grid = Grid::cube(-1.0, 1.0, 9, 1).unwrap();
        assert!(matches!(
            audit(&f, &grid, None),
            Err(CondhError::Negative { .. })
        ));
    }

    #[test]
    fn square_root_is_lipschitz_only() {
        // g = sqrt(45) r: Lipschitz constant sqrt(45), second quotient ~ 1/r.
        let grid = Grid::cube(-1.2, 1.2, 33, 3).unwrap();
        let r = root_regularity_probe(&ball_example_rhs(), &grid).unwrap();
        let s45 = 45f64.sqrt();
        assert!((r.lipschitz_estimate - s45).abs() / s45 < 0.05);
        assert!(
            (r.c11_proxy_growth_exponent + 1.0).abs() <= 0.15,
            "exponent = {}",
            r.c11_proxy_growth_exponent
        );
        assert_eq!(r.zero_set_points, 1);
    }

    #[test]
    fn smooth_root_has_flat_growth() {
        // f = (1+r^2)^2, k=2: g = 1+r^2 is smooth; proxy stays bounded.
        let f = RhsSpec::expression(Expr::parse("(1 + x1^2 + x2^2)^2").unwrap(), 2);
        let grid = Grid::cube(-1.0, 1.0, 33, 2).unwrap();
        let r = root_regularity_probe(&f, &grid).unwrap();
        assert!((r.c11_proxy_max - 2.0).abs() < 0.05);
        assert_eq!(r.zero_set_points, 0);
        assert_eq!(r.c11_proxy_growth_exponent, 0.0);
    }
}
