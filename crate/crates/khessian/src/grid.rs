//! Uniform Cartesian grids and scalar fields on them, with the
//! interior/boundary/exterior classification and the flat text serialization
//! format (header line, one value per line in lexicographic point order,
//! mask as a parallel file).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs at least 5 points per axis, got {0}")]
    TooFewPoints(usize),
    #[error("bounding box is degenerate on axis {0}")]
    DegenerateBox(usize),
    #[error("dimension mismatch: lo/hi/m lengths differ")]
    DimensionMismatch,
    #[error("point {0} is not interior")]
    NotInterior(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("parse error in field file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Point classification. Interior points have their full second-difference
/// stencil inside interior ∪ boundary; exterior values are never read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Interior,
    Boundary,
    Exterior,
}

impl PointClass {
    fn letter(self) -> char {
        match self {
            PointClass::Interior => 'I',
            PointClass::Boundary => 'B',
            PointClass::Exterior => 'E',
        }
    }

    fn from_letter(c: &str) -> Option<Self> {
        match c {
            "I" => Some(PointClass::Interior),
            "B" => Some(PointClass::Boundary),
            "E" => Some(PointClass::Exterior),
            _ => None,
        }
    }
}

/// Uniform Cartesian grid over a bounding box. Points per axis may differ;
/// spacing is `(hi - lo) / (m - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    m: Vec<usize>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, m: Vec<usize>) -> Result<Self, GridError> {
        if lo.len() != hi.len() || lo.len() != m.len() || lo.is_empty() {
            return Err(GridError::DimensionMismatch);
        }
        for (axis, &mi) in m.iter().enumerate() {
            if mi < 5 {
                return Err(GridError::TooFewPoints(mi));
            }
            if !(hi[axis] > lo[axis]) {
                return Err(GridError::DegenerateBox(axis));
            }
        }
        Ok(Grid { lo, hi, m })
    }

    /// Cube grid: same extent and point count on every axis.
    pub fn cube(lo: f64, hi: f64, m: usize, dim: usize) -> Result<Self, GridError> {
        Grid::new(vec![lo; dim], vec![hi; dim], vec![m; dim])
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.m
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.m[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.m.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stride of an axis in the flat lexicographic ordering (axis 0 slowest).
    pub fn stride(&self, axis: usize) -> usize {
        self.m[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        let mut rest = idx;
        let mut out = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            out[axis] = rest % self.m[axis];
            rest /= self.m[axis];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for (axis, &i) in multi.iter().enumerate() {
            idx = idx * self.m[axis] + i;
        }
        idx
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.lo[axis] + i as f64 * self.spacing(axis))
            .collect()
    }

    /// Neighbor at `multi + delta`, or `None` if it leaves the grid.
    pub fn offset(&self, idx: usize, delta: &[isize]) -> Option<usize> {
        let multi = self.multi_index(idx);
        let mut out = 0usize;
        for axis in 0..self.dim() {
            let i = multi[axis] as isize + delta[axis];
            if i < 0 || i >= self.m[axis] as isize {
                return None;
            }
            out = out * self.m[axis] + i as usize;
        }
        Some(out)
    }

    /// The stencil offsets an interior point must have inside the domain:
    /// ±e_i plus the four diagonal combinations per axis pair.
    pub fn stencil_offsets(&self) -> Vec<Vec<isize>> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for s in [-1isize, 1] {
                let mut d = vec![0isize; n];
                d[i] = s;
                out.push(d);
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for si in [-1isize, 1] {
                    for sj in [-1isize, 1] {
                        let mut d = vec![0isize; n];
                        d[i] = si;
                        d[j] = sj;
                        out.push(d);
                    }
                }
            }
        }
        out
    }

    fn header(&self) -> String {
        let mut s = String::new();
        write!(s, "{}", self.dim()).unwrap();
        for &mi in &self.m {
            write!(s, " {}", mi).unwrap();
        }
        for &v in self.lo.iter().chain(self.hi.iter()) {
            write!(s, " {:.16e}", v).unwrap();
        }
        s
    }

    fn parse_header(line: &str) -> Result<Grid, GridError> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = || GridError::Parse(format!("bad header: {line:?}"));
        let n: usize = toks.first().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if toks.len() != 1 + 3 * n {
            return Err(bad());
        }
        let m: Vec<usize> = toks[1..1 + n]
            .iter()
            .map(|t| t.parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let lo: Vec<f64> = toks[1 + n..1 + 2 * n]
            .iter()
            .map(|t| t.parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let hi: Vec<f64> = toks[1 + 2 * n..]
            .iter()
            .map(|t| t.parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        Grid::new(lo, hi, m)
    }
}

/// Scalar values on a grid together with the point classification.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
    class: Vec<PointClass>,
}

impl GridField {
    pub fn new(grid: Grid, class: Vec<PointClass>) -> Self {
        assert_eq!(class.len(), grid.len());
        let values = vec![0.0; grid.len()];
        GridField { grid, values, class }
    }

    pub fn from_fn(grid: Grid, class: Vec<PointClass>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut field = GridField::new(grid, class);
        for idx in 0..field.grid.len() {
            if field.class[idx] != PointClass::Exterior {
                let x = field.grid.point(idx);
                field.values[idx] = f(&x);
            }
        }
        field
    }

    /// Field on the full box: everything with a closed stencil is interior,
    /// the outermost layer is boundary. Convenient for tests and audits.
    pub fn on_box(grid: Grid, f: impl FnMut(&[f64]) -> f64) -> Self {
        let class = box_classes(&grid);
        GridField::from_fn(grid, class, f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn class(&self, idx: usize) -> PointClass {
        self.class[idx]
    }

    pub fn classes(&self) -> &[PointClass] {
        &self.class
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn set(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(|&i| self.class[i] == PointClass::Interior)
    }

    pub fn inside_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(|&i| self.class[i] != PointClass::Exterior)
    }

    /// Sup of |u| over interior ∪ boundary.
    pub fn sup_abs(&self) -> f64 {
        self.inside_indices()
            .map(|i| self.values[i].abs())
            .fold(0.0, f64::max)
    }

    /// Max first-difference quotient over axis-adjacent non-exterior pairs.
    pub fn max_gradient_quotient(&self) -> f64 {
        let g = &self.grid;
        let n = g.dim();
        let mut best: f64 = 0.0;
        for idx in self.inside_indices() {
            for axis in 0..n {
                let mut d = vec![0isize; n];
                d[axis] = 1;
                if let Some(nb) = g.offset(idx, &d) {
                    if self.class[nb] != PointClass::Exterior {
                        best = best
                            .max((self.values[nb] - self.values[idx]).abs() / g.spacing(axis));
                    }
                }
            }
        }
        best
    }

    /// Writes the value file and the parallel mask file.
    pub fn save(&self, field_path: &Path, mask_path: &Path) -> Result<(), GridError> {
        let mut out = String::new();
        writeln!(out, "{}", self.grid.header()).unwrap();
        for v in &self.values {
            writeln!(out, "{:.16e}", v).unwrap();
        }
        fs::write(field_path, out)?;
        let mut mask = String::new();
        writeln!(mask, "{}", self.grid.header()).unwrap();
        for c in &self.class {
            writeln!(mask, "{}", c.letter()).unwrap();
        }
        fs::write(mask_path, mask)?;
        Ok(())
    }

    pub fn load(field_path: &Path, mask_path: &Path) -> Result<Self, GridError> {
        let field_text = fs::read_to_string(field_path)?;
        let mut lines = field_text.lines();
        let grid = Grid::parse_header(
            lines.next().ok_or_else(|| GridError::Parse("empty field file".into()))?,
        )?;
        let values: Vec<f64> = lines
            .map(|l| {
                l.trim()
                    .parse()
                    .map_err(|_| GridError::Parse(format!("bad value line {l:?}")))
            })
            .collect::<Result<_, _>>()?;
        if values.len() != grid.len() {
            return Err(GridError::Parse(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let mask_text = fs::read_to_string(mask_path)?;
        let mut mlines = mask_text.lines();
        let mgrid = Grid::parse_header(
            mlines.next().ok_or_else(|| GridError::Parse("empty mask file".into()))?,
        )?;
        if mgrid != grid {
            return Err(GridError::GridMismatch);
        }
        let class: Vec<PointClass> = mlines
            .map(|l| {
                PointClass::from_letter(l.trim())
                    .ok_or_else(|| GridError::Parse(format!("bad mask line {l:?}")))
            })
            .collect::<Result<_, _>>()?;
        if class.len() != grid.len() {
            return Err(GridError::Parse("mask length mismatch".into()));
        }
        Ok(GridField { grid, values, class })
    }
}

/// Classification for the full box: outermost layers boundary, rest interior.
pub fn box_classes(grid: &Grid) -> Vec<PointClass> {
    let n = grid.dim();
    (0..grid.len())
        .map(|idx| {
            let multi = grid.multi_index(idx);
            let edge = (0..n).any(|a| multi[a] == 0 || multi[a] + 1 == grid.shape()[a]);
            if edge {
                PointClass::Boundary
            } else {
                PointClass::Interior
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = Grid::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![5, 7]).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(idx)), idx);
        }
        assert_eq!(g.stride(0), 7);
        assert_eq!(g.stride(1), 1);
    }

    #[test]
    fn spacing_and_points() {
        let g = Grid::cube(-1.2, 1.2, 33, 3).unwrap();
        assert!((g.spacing(0) - 0.075).abs() < 1e-15);
        let center = g.point(g.flat_index(&[16, 16, 16]));
        assert!(center.iter().all(|&c| c.abs() < 1e-14));
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::cube(0.0, 1.0, 4, 2).is_err());
        assert!(Grid::new(vec![0.0], vec![0.0], vec![5]).is_err());
    }

    #[test]
    fn save_load_bit_exact() {
        let g = Grid::cube(-1.0, 1.0, 6, 2).unwrap();
        let f = GridField::on_box(g, |x| (x[0] * 1.1 + x[1] * 0.3).sin() / 3.0);
        let dir = tempfile::tempdir().unwrap();
        let fp = dir.path().join("u.field");
        let mp = dir.path().join("u.mask");
        f.save(&fp, &mp).unwrap();
        let back = GridField::load(&fp, &mp).unwrap();
        assert_eq!(back, f);
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn box_classification_has_closed_stencils() {
        let g = Grid::cube(0.0, 1.0, 6, 3).unwrap();
        let class = box_classes(&g);
        let offsets = g.stencil_offsets();
        for idx in 0..g.len() {
            if class[idx] == PointClass::Interior {
                for d in &offsets {
                    let nb = g.offset(idx, d).expect("stencil leaves grid");
                    assert_ne!(class[nb], PointClass::Exterior);
                }
            }
        }
    }
}
