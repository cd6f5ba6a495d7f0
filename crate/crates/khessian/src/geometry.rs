//! Bounded domains, boundary principal curvatures, the (k−1)-convexity test
//! and grid classification with Dirichlet data attachment.
//!
//! Curvatures come from exact derivatives of the implicit function (level-set
//! expressions are differentiated symbolically), never from grid differences:
//! the shape operator is the tangential projection of `∇²φ / |∇φ|`.

use khessian_core::symfun;
use khessian_core::SymMatrix;
use thiserror::Error;

use crate::expr::Expr;
use crate::grid::{Grid, PointClass};

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("boundary not resolvable at {0:?}: |grad phi| below threshold")]
    UnresolvableBoundary(Vec<f64>),
    #[error("projection to the boundary did not converge from {0:?}")]
    ProjectionFailed(Vec<f64>),
    #[error("grid box must contain the domain with a 2h margin (axis {0})")]
    InsufficientMargin(usize),
    #[error("operation unsupported for this domain kind: {0}")]
    Unsupported(&'static str),
    #[error("dimension mismatch between domain ({0}) and grid ({1})")]
    DimensionMismatch(usize, usize),
    #[error("sample count must be at least 1")]
    EmptySampleSet,
}

/// Domain description. Inside is `φ < 0` for every kind.
#[derive(Debug, Clone)]
pub enum DomainSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
    },
    /// Implicit domain `{φ < 0}` clipped to the declared bounding box.
    LevelSet {
        phi: Expr,
        grad: Vec<Expr>,
        hess: Vec<Vec<Expr>>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Axis-aligned box; supports classification and solves, but carries no
    /// curvature (corners).
    Rect {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

/// One boundary point with inward unit normal and principal curvatures.
#[derive(Debug, Clone)]
pub struct BoundarySample {
    pub x: Vec<f64>,
    pub normal: Vec<f64>,
    pub curvatures: Vec<f64>,
}

/// Result of the (k−1)-convexity test.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvexityReport {
    pub pass: bool,
    /// `min over samples, j=1..k-1 of σ_j(κ)`; `+∞` marker when k = 1.
    pub margin: f64,
    pub worst_point: Option<Vec<f64>>,
    pub samples: usize,
}

/// Dirichlet attachment at one boundary grid point.
#[derive(Debug, Clone)]
pub struct BoundaryAttach {
    pub idx: usize,
    /// φ evaluated at the projected boundary point.
    pub value: f64,
    /// Grid point coordinates.
    pub point: Vec<f64>,
    /// Nearest-point projection onto ∂Ω.
    pub proj: Vec<f64>,
}

/// Grid classification plus boundary data.
#[derive(Debug, Clone)]
pub struct Classified {
    pub class: Vec<PointClass>,
    pub boundary: Vec<BoundaryAttach>,
}

const GRAD_FLOOR: f64 = 1e-8;

impl DomainSpec {
    pub fn ball(center: Vec<f64>, radius: f64) -> DomainSpec {
        assert!(radius > 0.0);
        DomainSpec::Ball { center, radius }
    }

    pub fn ellipsoid(center: Vec<f64>, semi_axes: Vec<f64>) -> DomainSpec {
        assert_eq!(center.len(), semi_axes.len());
        assert!(semi_axes.iter().all(|&a| a > 0.0));
        DomainSpec::Ellipsoid { center, semi_axes }
    }

    pub fn level_set(phi: Expr, lo: Vec<f64>, hi: Vec<f64>) -> DomainSpec {
        let dim = lo.len();
        let grad = phi.gradient(dim);
        let hess = phi.hessian(dim);
        DomainSpec::LevelSet {
            phi,
            grad,
            hess,
            lo,
            hi,
        }
    }

    pub fn rect(lo: Vec<f64>, hi: Vec<f64>) -> DomainSpec {
        DomainSpec::Rect { lo, hi }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Ball { center, .. } => center.len(),
            DomainSpec::Ellipsoid { center, .. } => center.len(),
            DomainSpec::LevelSet { lo, .. } | DomainSpec::Rect { lo, .. } => lo.len(),
        }
    }

    /// Implicit function, negative inside.
    pub fn phi(&self, x: &[f64]) -> f64 {
        match self {
            DomainSpec::Ball { center, radius } => {
                sq_dist(x, center) - radius * radius
            }
            DomainSpec::Ellipsoid { center, semi_axes } => {
                x.iter()
                    .zip(center)
                    .zip(semi_axes)
                    .map(|((xi, ci), ai)| ((xi - ci) / ai).powi(2))
                    .sum::<f64>()
                    - 1.0
            }
            DomainSpec::LevelSet { phi, .. } => phi.eval(x),
            DomainSpec::Rect { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(xi, (l, h))| (l - xi).max(xi - h))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            // Closed box: grid points landing exactly on a face become
            // boundary collocation points with an identity projection.
            DomainSpec::Rect { .. } => self.phi(x) <= 0.0,
            _ => self.phi(x) < 0.0,
        }
    }

    fn grad_phi(&self, x: &[f64]) -> Result<Vec<f64>, GeomError> {
        match self {
            DomainSpec::Ball { center, .. } => {
                Ok(x.iter().zip(center).map(|(xi, ci)| 2.0 * (xi - ci)).collect())
            }
            DomainSpec::Ellipsoid { center, semi_axes } => Ok(x
                .iter()
                .zip(center)
                .zip(semi_axes)
                .map(|((xi, ci), ai)| 2.0 * (xi - ci) / (ai * ai))
                .collect()),
            DomainSpec::LevelSet { grad, .. } => Ok(grad.iter().map(|g| g.eval(x)).collect()),
            DomainSpec::Rect { .. } => Err(GeomError::Unsupported("gradient of box levelset")),
        }
    }

    fn hess_phi(&self, x: &[f64]) -> Result<SymMatrix, GeomError> {
        let n = self.dim();
        match self {
            DomainSpec::Ball { .. } => {
                let mut h = SymMatrix::zeros(n);
                for i in 0..n {
                    h.set(i, i, 2.0);
                }
                Ok(h)
            }
            DomainSpec::Ellipsoid { semi_axes, .. } => {
                let mut h = SymMatrix::zeros(n);
                for i in 0..n {
                    h.set(i, i, 2.0 / (semi_axes[i] * semi_axes[i]));
                }
                Ok(h)
            }
            DomainSpec::LevelSet { hess, .. } => {
                Ok(SymMatrix::from_fn(n, |i, j| hess[i][j].eval(x)))
            }
            DomainSpec::Rect { .. } => Err(GeomError::Unsupported("curvature of box domains")),
        }
    }

    /// Declared bounding box of the inside set.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            DomainSpec::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            DomainSpec::Ellipsoid { center, semi_axes } => (
                center.iter().zip(semi_axes).map(|(c, a)| c - a).collect(),
                center.iter().zip(semi_axes).map(|(c, a)| c + a).collect(),
            ),
            DomainSpec::LevelSet { lo, hi, .. } | DomainSpec::Rect { lo, hi } => {
                (lo.clone(), hi.clone())
            }
        }
    }

    /// Nearest-point projection onto ∂Ω. Newton along ∇φ for implicit kinds,
    /// closed form for balls and boxes; `tol` is an absolute distance.
    pub fn project_to_boundary(&self, x: &[f64], tol: f64) -> Result<Vec<f64>, GeomError> {
        match self {
            DomainSpec::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(xi, ci)| xi - ci).collect();
                let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r < 1e-14 {
                    // Center of the ball: any direction works.
                    let mut p = center.clone();
                    p[0] += radius;
                    return Ok(p);
                }
                Ok(center
                    .iter()
                    .zip(&d)
                    .map(|(ci, di)| ci + di * radius / r)
                    .collect())
            }
            DomainSpec::Rect { lo, hi } => {
                let mut p: Vec<f64> = x
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(xi, (l, h))| xi.clamp(*l, *h))
                    .collect();
                // If strictly inside, push the closest coordinate to its face.
                if self.phi(&p) < 0.0 {
                    let mut best = (f64::INFINITY, 0usize, 0.0f64);
                    for a in 0..p.len() {
                        let to_lo = p[a] - lo[a];
                        let to_hi = hi[a] - p[a];
                        if to_lo < best.0 {
                            best = (to_lo, a, lo[a]);
                        }
                        if to_hi < best.0 {
                            best = (to_hi, a, hi[a]);
                        }
                    }
                    p[best.1] = best.2;
                }
                Ok(p)
            }
            _ => {
                let mut p = x.to_vec();
                for _ in 0..50 {
                    let v = self.phi(&p);
                    let g = self.grad_phi(&p)?;
                    let g2: f64 = g.iter().map(|x| x * x).sum();
                    if g2.sqrt() < GRAD_FLOOR {
                        return Err(GeomError::UnresolvableBoundary(p));
                    }
                    if v.abs() / g2.sqrt() <= tol {
                        return Ok(p);
                    }
                    for (pi, gi) in p.iter_mut().zip(&g) {
                        *pi -= v * gi / g2;
                    }
                }
                Err(GeomError::ProjectionFailed(x.to_vec()))
            }
        }
    }

    /// Inward unit normal and principal curvatures at a boundary point.
    /// Positive curvature means the boundary bends around the inside (a ball
    /// with inward normal has κ ≡ 1/R).
    pub fn curvatures_at(&self, x: &[f64]) -> Result<BoundarySample, GeomError> {
        let n = self.dim();
        let g = self.grad_phi(x)?;
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn < GRAD_FLOOR {
            return Err(GeomError::UnresolvableBoundary(x.to_vec()));
        }
        let outward: Vec<f64> = g.iter().map(|v| v / gn).collect();
        let normal: Vec<f64> = outward.iter().map(|v| -v).collect();
        // Orthonormal tangent basis by Gram-Schmidt against the normal.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
        for axis in 0..n {
            if basis.len() == n - 1 {
                break;
            }
            let mut v = vec![0.0; n];
            v[axis] = 1.0;
            let d: f64 = v.iter().zip(&outward).map(|(a, b)| a * b).sum();
            for (vi, oi) in v.iter_mut().zip(&outward) {
                *vi -= d * oi;
            }
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= d * bi;
                }
            }
            let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if vn > 1e-7 {
                for vi in v.iter_mut() {
                    *vi /= vn;
                }
                basis.push(v);
            }
        }
        let hp = self.hess_phi(x)?;
        let shape = SymMatrix::from_fn(n - 1, |a, b| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += basis[a][i] * hp.get(i, j) * basis[b][j];
                }
            }
            s / gn
        });
        let curvatures = shape.spectrum();
        Ok(BoundarySample {
            x: x.to_vec(),
            normal,
            curvatures,
        })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Quasi-uniform boundary samples with curvature data.
pub fn boundary_samples(d: &DomainSpec, count: usize) -> Result<Vec<BoundarySample>, GeomError> {
    if count == 0 {
        return Err(GeomError::EmptySampleSet);
    }
    let points = boundary_points(d, count)?;
    points.iter().map(|x| d.curvatures_at(x)).collect()
}

fn boundary_points(d: &DomainSpec, count: usize) -> Result<Vec<Vec<f64>>, GeomError> {
    let n = d.dim();
    match d {
        DomainSpec::Ball { center, radius } => {
            Ok(sphere_directions(n, count)
                .into_iter()
                .map(|s| {
                    center
                        .iter()
                        .zip(&s)
                        .map(|(c, si)| c + radius * si)
                        .collect()
                })
                .collect())
        }
        DomainSpec::Ellipsoid { center, semi_axes } => Ok(sphere_directions(n, count)
            .into_iter()
            .map(|s| {
                center
                    .iter()
                    .zip(semi_axes)
                    .zip(&s)
                    .map(|((c, a), si)| c + a * si)
                    .collect()
            })
            .collect()),
        DomainSpec::LevelSet { lo, hi, .. } => {
            // Edge scan on a coarse lattice, then Newton projection.
            let res = ((count as f64).powf(1.0 / (n.max(2) - 1) as f64).ceil() as usize + 4)
                .clamp(8, 96);
            let mut m = vec![res; n];
            m.iter_mut().for_each(|v| *v = (*v).max(8));
            let grid = Grid::new(lo.clone(), hi.clone(), m).map_err(|_| {
                GeomError::Unsupported("degenerate level-set bounding box")
            })?;
            let mut pts = Vec::new();
            let scale = grid.max_spacing();
            for idx in 0..grid.len() {
                let x = grid.point(idx);
                let v = d.phi(&x);
                for axis in 0..n {
                    let mut delta = vec![0isize; n];
                    delta[axis] = 1;
                    if let Some(nb) = grid.offset(idx, &delta) {
                        let y = grid.point(nb);
                        let w = d.phi(&y);
                        if v * w < 0.0 {
                            let mid: Vec<f64> =
                                x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                            if let Ok(p) = d.project_to_boundary(&mid, 1e-12 * scale.max(1.0)) {
                                pts.push(p);
                            }
                        }
                    }
                }
            }
            if pts.is_empty() {
                return Err(GeomError::Unsupported("level set has no zero crossing in box"));
            }
            // Thin to roughly the requested count.
            let stride = (pts.len() / count).max(1);
            Ok(pts.into_iter().step_by(stride).take(count.max(1)).collect())
        }
        DomainSpec::Rect { .. } => Err(GeomError::Unsupported("curvature of box domains")),
    }
}

/// Quasi-uniform unit directions: golden-angle spiral for n=3, uniform
/// angles for n=2.
fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            // Deterministic low-discrepancy fallback for general n.
            let mut rng = crate::rng::Lcg64::new(1234);
            (0..count)
                .map(|_| {
                    loop {
                        let v: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
                        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                        if norm > 1e-3 && norm <= 1.0 {
                            return v.into_iter().map(|a| a / norm).collect();
                        }
                    }
                })
                .collect()
        }
    }
}

/// Definition of (k−1)-convexity: `σ_j(κ) ≥ c > 0` for `j = 1..k−1` on ∂Ω.
/// k = 1 imposes nothing and passes with a `+∞` margin marker.
pub fn is_k1_convex(d: &DomainSpec, k: usize, count: usize) -> Result<ConvexityReport, GeomError> {
    if k <= 1 {
        return Ok(ConvexityReport {
            pass: true,
            margin: f64::INFINITY,
            worst_point: None,
            samples: 0,
        });
    }
    let samples = boundary_samples(d, count)?;
    let mut margin = f64::INFINITY;
    let mut worst = None;
    for s in &samples {
        for j in 1..k {
            let v = symfun::elem_sym(&s.curvatures, j);
            if v < margin {
                margin = v;
                worst = Some(s.x.clone());
            }
        }
    }
    Ok(ConvexityReport {
        pass: margin > 0.0,
        margin,
        worst_point: worst,
        samples: samples.len(),
    })
}

/// Classifies grid points against the domain and attaches Dirichlet data.
///
/// Interior: full second-difference stencil inside `{φ<0}`. Boundary: inside
/// but not interior, carrying `φ_b(π(x))` with `π` the nearest-point
/// projection. Exterior: the rest.
pub fn classify(
    d: &DomainSpec,
    grid: &Grid,
    phi_boundary: &Expr,
) -> Result<Classified, GeomError> {
    let n = d.dim();
    if n != grid.dim() {
        return Err(GeomError::DimensionMismatch(n, grid.dim()));
    }
    let (blo, bhi) = d.bounding_box();
    for axis in 0..n {
        let margin = 2.0 * grid.spacing(axis);
        if grid.lo()[axis] > blo[axis] - margin || grid.hi()[axis] < bhi[axis] + margin {
            return Err(GeomError::InsufficientMargin(axis));
        }
    }
    let inside: Vec<bool> = (0..grid.len()).map(|i| d.contains(&grid.point(i))).collect();
    let offsets = grid.stencil_offsets();
    let mut class = vec![PointClass::Exterior; grid.len()];
    for idx in 0..grid.len() {
        if !inside[idx] {
            continue;
        }
        let closed = offsets
            .iter()
            .all(|delta| grid.offset(idx, delta).map(|nb| inside[nb]).unwrap_or(false));
        class[idx] = if closed {
            PointClass::Interior
        } else {
            PointClass::Boundary
        };
    }
    let tol = 1e-10 * grid.max_spacing();
    let mut boundary = Vec::new();
    for idx in 0..grid.len() {
        if class[idx] != PointClass::Boundary {
            continue;
        }
        let x = grid.point(idx);
        let proj = d.project_to_boundary(&x, tol)?;
        let value = phi_boundary.eval(&proj);
        boundary.push(BoundaryAttach {
            idx,
            value,
            point: x,
            proj,
        });
    }
    Ok(Classified { class, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_ball(n: usize) -> DomainSpec {
        DomainSpec::ball(vec![0.0; n], 1.0)
    }

    #[test]
    fn sphere_curvatures() {
        for s in boundary_samples(&unit_ball(3), 50).unwrap() {
            assert_eq!(s.curvatures.len(), 2);
            for k in &s.curvatures {
                assert!((k - 1.0).abs() < 1e-10);
            }
            let nn: f64 = s.normal.iter().map(|v| v * v).sum();
            assert!((nn - 1.0).abs() < 1e-12);
            // Inward normal points to the center.
            let dot: f64 = s.normal.iter().zip(&s.x).map(|(a, b)| a * b).sum();
            assert!(dot < 0.0);
        }
        for s in boundary_samples(&DomainSpec::ball(vec![0.0; 3], 2.0), 20).unwrap() {
            for k in &s.curvatures {
                assert!((k - 0.5).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ellipsoid_pole_curvature() {
        // Semi-axes (1,1,2): at the pole (0,0,2) both curvatures are c/a^2 = 2.
        let d = DomainSpec::ellipsoid(vec![0.0; 3], vec![1.0, 1.0, 2.0]);
        let s = d.curvatures_at(&[0.0, 0.0, 2.0]).unwrap();
        for k in &s.curvatures {
            assert!((k - 2.0).abs() < 1e-8, "kappa = {k}");
        }
        // Against a finite-difference shape operator via a level-set clone.
        let ls = DomainSpec::level_set(
            Expr::parse("x1^2 + x2^2 + (x3/2)^2 - 1").unwrap(),
            vec![-1.5, -1.5, -2.5],
            vec![1.5, 1.5, 2.5],
        );
        let s2 = ls.curvatures_at(&[0.0, 0.0, 2.0]).unwrap();
        for k in &s2.curvatures {
            assert!((k - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn normal_flip_flips_curvature_sign() {
        let inner = DomainSpec::level_set(
            Expr::parse("x1^2 + x2^2 + x3^2 - 1").unwrap(),
            vec![-1.5; 3],
            vec![1.5; 3],
        );
        let outer = DomainSpec::level_set(
            Expr::parse("1 - x1^2 - x2^2 - x3^2").unwrap(),
            vec![-1.5; 3],
            vec![1.5; 3],
        );
        let p = [0.6, 0.0, 0.8];
        let a = inner.curvatures_at(&p).unwrap();
        let b = outer.curvatures_at(&p).unwrap();
        for (ka, kb) in a.curvatures.iter().zip(b.curvatures.iter().rev()) {
            assert!((ka + kb).abs() < 1e-9);
        }
        for (na, nb) in a.normal.iter().zip(&b.normal) {
            assert!((na + nb).abs() < 1e-9);
        }
    }

    #[test]
    fn ball_convexity_margins() {
        let r = is_k1_convex(&unit_ball(3), 2, 500).unwrap();
        assert!(r.pass);
        assert!((r.margin - 2.0).abs() < 1e-8);
        let r3 = is_k1_convex(&unit_ball(3), 3, 500).unwrap();
        assert!(r3.pass);
        assert!((r3.margin - 1.0).abs() < 1e-8);
        let r1 = is_k1_convex(&unit_ball(3), 1, 1).unwrap();
        assert!(r1.pass && r1.margin.is_infinite());
    }

    #[test]
    fn margin_stable_under_refinement() {
        let d = DomainSpec::ellipsoid(vec![0.0; 3], vec![1.0, 1.2, 1.5]);
        let a = is_k1_convex(&d, 3, 1000).unwrap();
        let b = is_k1_convex(&d, 3, 10000).unwrap();
        let rel = (a.margin - b.margin).abs() / b.margin.abs();
        assert!(rel <= 0.02, "margin varied by {rel}");
    }

    #[test]
    fn dumbbell_neck_fails_2_convexity() {
        // Surface of revolution with a thin neck at x1 = 0; the meridian
        // curvature there beats the parallel one, so sigma_1(kappa) < 0.
        let d = DomainSpec::level_set(
            Expr::parse("x2^2 + x3^2 - (0.5 + 2*x1^2)^2 * (1 - (x1/1.2)^2)").unwrap(),
            vec![-1.3, -1.5, -1.5],
            vec![1.3, 1.5, 1.5],
        );
        let r = is_k1_convex(&d, 2, 4000).unwrap();
        assert!(!r.pass, "dumbbell should fail, margin = {}", r.margin);
        assert!(r.margin < 0.0);
        // Analytic check at the neck point (0, rho0, 0) of the revolution
        // profile rho(x): kappa = (1/rho0, -rho''(0)) at a critical neck.
        let s = d.curvatures_at(&[0.0, 0.5, 0.0]).unwrap();
        let sum: f64 = s.curvatures.iter().sum();
        assert!(sum < 0.0, "neck mean curvature should be negative: {:?}", s.curvatures);
    }

    #[test]
    fn classify_unit_ball() {
        let g = Grid::cube(-1.2, 1.2, 33, 3).unwrap();
        let zero = Expr::parse("0").unwrap();
        let c = classify(&unit_ball(3), &g, &zero).unwrap();
        let interior = c.class.iter().filter(|&&p| p == PointClass::Interior).count();
        assert!(interior > 0);
        // Every interior stencil is closed.
        let offsets = g.stencil_offsets();
        for idx in 0..g.len() {
            if c.class[idx] == PointClass::Interior {
                for delta in &offsets {
                    let nb = g.offset(idx, delta).unwrap();
                    assert_ne!(c.class[nb], PointClass::Exterior);
                }
            }
        }
        // Zero boundary data attaches exactly zero.
        assert!(c.boundary.iter().all(|b| b.value == 0.0));
        // Partition: counts add up.
        let boundary = c.class.iter().filter(|&&p| p == PointClass::Boundary).count();
        let exterior = c.class.iter().filter(|&&p| p == PointClass::Exterior).count();
        assert_eq!(interior + boundary + exterior, g.len());
        assert_eq!(boundary, c.boundary.len());
    }

    #[test]
    fn ball_projection_oracle() {
        let g = Grid::cube(-1.4, 1.4, 17, 3).unwrap();
        let phi_b = Expr::parse("x1").unwrap();
        let c = classify(&unit_ball(3), &g, &phi_b).unwrap();
        for b in &c.boundary {
            let norm: f64 = b.point.iter().map(|v| v * v).sum::<f64>().sqrt();
            let expect: Vec<f64> = b.point.iter().map(|v| v / norm).collect();
            for (p, e) in b.proj.iter().zip(&expect) {
                assert!((p - e).abs() < 1e-9);
            }
            assert!((b.value - expect[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn margin_enforced() {
        let g = Grid::cube(-1.05, 1.05, 17, 3).unwrap();
        let zero = Expr::parse("0").unwrap();
        assert!(matches!(
            classify(&unit_ball(3), &g, &zero),
            Err(GeomError::InsufficientMargin(_))
        ));
    }
}
