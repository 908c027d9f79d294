//! Uniform grids over boxes in R^d (d = 1 or 2), vector-valued grid
//! functions, L^p averages over cubes and the Hardy–Littlewood type maximal
//! operators.
//!
//! All integrals are midpoint sums. A cell belongs to a region iff its center
//! does, so dilated cubes are plain cell sets without partial weights.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with `cells_per_side = 2^J` cells along each axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    d: usize,
    origin: [f64; 2],
    side: f64,
    cells: usize,
}

impl Grid {
    pub fn new(d: usize, origin: &[f64], side: f64, cells_per_side: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {d}")));
        }
        if origin.len() != d {
            return Err(Error::ShapeMismatch(format!("origin has {} coordinates, d = {d}", origin.len())));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidParameter(format!("box side must be positive, got {side}")));
        }
        if cells_per_side < 2 || !cells_per_side.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "cells per side must be 2^J with J >= 1, got {cells_per_side}"
            )));
        }
        let mut o = [0.0; 2];
        o[..d].copy_from_slice(origin);
        Ok(Self { d, origin: o, side, cells: cells_per_side })
    }

    /// Box `[0, side)^d`.
    pub fn unit_origin(d: usize, side: f64, cells_per_side: usize) -> Result<Self> {
        Self::new(d, &vec![0.0; d], side, cells_per_side)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.d]
    }

    pub fn box_side(&self) -> f64 {
        self.side
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    /// `J` with `cells_per_side = 2^J`.
    pub fn levels(&self) -> u32 {
        self.cells.trailing_zeros()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.pow(self.d as u32)
    }

    pub fn cell_side(&self) -> f64 {
        self.side / self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_side().powi(self.d as i32)
    }

    pub fn box_volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    /// Axis coordinates of a flat cell index; axis 0 varies fastest.
    pub fn cell_coords(&self, idx: usize) -> [usize; 2] {
        if self.d == 1 {
            [idx, 0]
        } else {
            [idx % self.cells, idx / self.cells]
        }
    }

    pub fn cell_index(&self, coords: [usize; 2]) -> usize {
        if self.d == 1 {
            coords[0]
        } else {
            coords[0] + self.cells * coords[1]
        }
    }

    pub fn cell_center(&self, idx: usize) -> [f64; 2] {
        let c = self.cell_coords(idx);
        let h = self.cell_side();
        let mut x = [0.0; 2];
        for a in 0..self.d {
            x[a] = self.origin[a] + (c[a] as f64 + 0.5) * h;
        }
        x
    }

    /// Whether the box side is a power of two, so that the box itself is a
    /// dyadic cube and every cell is a lattice cube.
    pub fn is_dyadic(&self) -> bool {
        let l = self.side.log2();
        l.fract() == 0.0 && (2f64).powi(l as i32) == self.side
    }

    /// `log2` of the box side.
    pub fn box_scale(&self) -> Result<i32> {
        if !self.is_dyadic() {
            return Err(Error::NotDyadic(format!("box side {} is not a power of two", self.side)));
        }
        Ok(self.side.log2() as i32)
    }

    /// `log2` of the cell side.
    pub fn cell_scale(&self) -> Result<i32> {
        Ok(self.box_scale()? - self.levels() as i32)
    }

    /// Region covering the whole box.
    pub fn whole_box(&self) -> CubeRegion {
        let mut c = [0.0; 2];
        for (a, ca) in c.iter_mut().enumerate().take(self.d) {
            *ca = self.origin[a] + 0.5 * self.side;
        }
        CubeRegion { center: c, side: self.side }
    }

    pub fn cells_in(&self, q: &CubeRegion) -> Vec<usize> {
        let r = q.cell_ranges(self);
        let mut out = Vec::new();
        if self.d == 1 {
            out.extend(r[0].clone());
        } else {
            for j in r[1].clone() {
                for i in r[0].clone() {
                    out.push(self.cell_index([i, j]));
                }
            }
        }
        out
    }
}

/// Axis-aligned cube given by center and side length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeRegion {
    pub center: [f64; 2],
    pub side: f64,
}

impl CubeRegion {
    pub fn new(center: &[f64], side: f64) -> Self {
        let mut c = [0.0; 2];
        c[..center.len()].copy_from_slice(center);
        Self { center: c, side }
    }

    /// Same center, `factor` times the side.
    pub fn dilate(&self, factor: f64) -> Self {
        Self { center: self.center, side: self.side * factor }
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.center[axis] - 0.5 * self.side
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.center[axis] + 0.5 * self.side
    }

    /// Half-open membership `lower <= x < upper` on every axis.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(a, &xa)| self.lower(a) <= xa && xa < self.upper(a))
    }

    /// Per-axis ranges of cell indices whose centers lie in the region,
    /// clipped to the grid.
    pub fn cell_ranges(&self, grid: &Grid) -> [std::ops::Range<usize>; 2] {
        let h = grid.cell_side();
        let mut out = [0..1, 0..1];
        for (a, r) in out.iter_mut().enumerate().take(grid.dim()) {
            // center (k + 1/2) h + o lies in [lo, hi)  <=>  k in [ceil(lo'), ceil(hi'))
            let lo = ((self.lower(a) - grid.origin[a]) / h - 0.5).ceil();
            let hi = ((self.upper(a) - grid.origin[a]) / h - 0.5).ceil();
            let n = grid.cells_per_side() as f64;
            let lo = lo.clamp(0.0, n) as usize;
            let hi = hi.clamp(0.0, n) as usize;
            *r = lo..hi.max(lo);
        }
        out
    }

    pub fn cell_count(&self, grid: &Grid) -> usize {
        let r = self.cell_ranges(grid);
        r[..grid.dim()].iter().map(|r| r.len()).product()
    }

    pub fn mask(&self, grid: &Grid) -> CellMask {
        let mut m = CellMask::empty(grid);
        for idx in grid.cells_in(self) {
            m.cells[idx] = true;
        }
        m
    }

    /// Measure of the cells that belong to the region.
    pub fn discrete_volume(&self, grid: &Grid) -> f64 {
        self.cell_count(grid) as f64 * grid.cell_volume()
    }
}

/// Set of grid cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellMask {
    pub cells: Vec<bool>,
}

impl CellMask {
    pub fn empty(grid: &Grid) -> Self {
        Self { cells: vec![false; grid.num_cells()] }
    }

    pub fn full(grid: &Grid) -> Self {
        Self { cells: vec![true; grid.num_cells()] }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&b| b)
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.cells[idx]
    }

    pub fn union(&self, other: &Self) -> Self {
        Self { cells: self.cells.iter().zip(&other.cells).map(|(a, b)| *a || *b).collect() }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self { cells: self.cells.iter().zip(&other.cells).map(|(a, b)| *a && *b).collect() }
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self { cells: self.cells.iter().zip(&other.cells).map(|(a, b)| *a && !*b).collect() }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| !*a || *b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Region argument of [`restrict`].
pub enum Support<'a> {
    Cube(&'a CubeRegion),
    Mask(&'a CellMask),
}

/// `C^n`-valued function sampled at cell centers. Values are stored cell-major:
/// entry `cell * n + component`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub n: usize,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid, n: usize) -> Self {
        Self { grid, n, values: vec![Complex64::new(0.0, 0.0); grid.num_cells() * n] }
    }

    pub fn from_values(grid: Grid, n: usize, values: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("vector dimension must be >= 1".into()));
        }
        if values.len() != grid.num_cells() * n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                grid.num_cells() * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("grid function values must be finite".into()));
        }
        Ok(Self { grid, n, values })
    }

    pub fn constant(grid: Grid, c: &[Complex64]) -> Self {
        let n = c.len();
        let mut values = Vec::with_capacity(grid.num_cells() * n);
        for _ in 0..grid.num_cells() {
            values.extend_from_slice(c);
        }
        Self { grid, n, values }
    }

    /// Scalar function from a closure of the cell center.
    pub fn from_fn_scalar(grid: Grid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.num_cells()).map(|i| f(grid.cell_center(i))).collect();
        Self { grid, n: 1, values }
    }

    pub fn at(&self, cell: usize) -> &[Complex64] {
        &self.values[cell * self.n..(cell + 1) * self.n]
    }

    pub fn at_mut(&mut self, cell: usize) -> &mut [Complex64] {
        &mut self.values[cell * self.n..(cell + 1) * self.n]
    }

    /// Euclidean norm of the vector at a cell.
    pub fn abs_at(&self, cell: usize) -> f64 {
        self.at(cell).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scalar component `i`.
    pub fn component(&self, i: usize) -> GridFunction {
        let values = (0..self.grid.num_cells()).map(|c| self.at(c)[i]).collect();
        GridFunction { grid: self.grid, n: 1, values }
    }

    /// Stack scalar functions as components.
    pub fn stack(parts: &[GridFunction]) -> Result<GridFunction> {
        let first = parts.first().ok_or_else(|| Error::InvalidParameter("nothing to stack".into()))?;
        let grid = first.grid;
        if parts.iter().any(|p| p.grid != grid || p.n != 1) {
            return Err(Error::ShapeMismatch("stack needs scalar functions on one grid".into()));
        }
        let n = parts.len();
        let mut values = Vec::with_capacity(grid.num_cells() * n);
        for c in 0..grid.num_cells() {
            for p in parts {
                values.push(p.values[c]);
            }
        }
        Ok(GridFunction { grid, n, values })
    }

    /// Pointwise `x -> f(x) . v = sum_i f_i(x) conj(v_i)`.
    pub fn dot_direction(&self, v: &[Complex64]) -> GridFunction {
        let values = (0..self.grid.num_cells())
            .map(|c| self.at(c).iter().zip(v).map(|(a, b)| a * b.conj()).sum())
            .collect();
        GridFunction { grid: self.grid, n: 1, values }
    }

    /// Pointwise matrix action `x -> A f(x)` with `A` given row-major `m x n`.
    pub fn apply_matrix(&self, a: &nalgebra::DMatrix<Complex64>) -> Result<GridFunction> {
        if a.ncols() != self.n {
            return Err(Error::ShapeMismatch(format!("matrix has {} columns, n = {}", a.ncols(), self.n)));
        }
        let m = a.nrows();
        let mut values = Vec::with_capacity(self.grid.num_cells() * m);
        for c in 0..self.grid.num_cells() {
            let x = self.at(c);
            for r in 0..m {
                let mut s = Complex64::new(0.0, 0.0);
                for (k, xk) in x.iter().enumerate() {
                    s += a[(r, k)] * xk;
                }
                values.push(s);
            }
        }
        Ok(GridFunction { grid: self.grid, n: m, values })
    }

    pub fn scale(&self, lambda: Complex64) -> GridFunction {
        GridFunction { grid: self.grid, n: self.n, values: self.values.iter().map(|v| v * lambda).collect() }
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        check_same(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridFunction { grid: self.grid, n: self.n, values })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        check_same(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridFunction { grid: self.grid, n: self.n, values })
    }

    /// Pointwise product with a scalar function.
    pub fn mul_scalar_fn(&self, b: &GridFunction) -> Result<GridFunction> {
        if b.n != 1 || b.grid != self.grid {
            return Err(Error::ShapeMismatch("multiplier must be scalar on the same grid".into()));
        }
        let mut out = self.clone();
        for c in 0..self.grid.num_cells() {
            let w = b.values[c];
            for z in out.at_mut(c) {
                *z *= w;
            }
        }
        Ok(out)
    }

    /// Support mask (cells where the vector is nonzero).
    pub fn support(&self) -> CellMask {
        CellMask { cells: (0..self.grid.num_cells()).map(|c| self.at(c).iter().any(|z| *z != Complex64::new(0.0, 0.0))).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.grid.num_cells()).map(|c| self.abs_at(c)).fold(0.0, f64::max)
    }

    /// Serialize as an 8-byte little-endian header length, the JSON header
    /// `{d, N, n, box_origin, box_side}`, then `(re, im)` f64 pairs in
    /// cell-major, component-minor order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = SerialHeader {
            d: self.grid.dim(),
            n_cells: self.grid.cells_per_side(),
            n: self.n,
            box_origin: self.grid.origin().to_vec(),
            box_side: self.grid.box_side(),
        };
        let h = serde_json::to_vec(&header)?;
        w.write_all(&(h.len() as u64).to_le_bytes())?;
        w.write_all(&h)?;
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let mut h = vec![0u8; u64::from_le_bytes(len) as usize];
        r.read_exact(&mut h)?;
        let header: SerialHeader = serde_json::from_slice(&h)?;
        let grid = Grid::new(header.d, &header.box_origin, header.box_side, header.n_cells)?;
        let count = grid.num_cells() * header.n;
        let mut values = Vec::with_capacity(count);
        let mut buf = [0u8; 16];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            values.push(Complex64::new(re, im));
        }
        GridFunction::from_values(grid, header.n, values)
    }
}

#[derive(Serialize, Deserialize)]
struct SerialHeader {
    d: usize,
    #[serde(rename = "N")]
    n_cells: usize,
    n: usize,
    box_origin: Vec<f64>,
    box_side: f64,
}

fn check_same(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if f.grid != g.grid || f.n != g.n {
        return Err(Error::ShapeMismatch(format!("grids or vector dimensions differ ({} vs {})", f.n, g.n)));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && !p.is_nan() {
        Ok(())
    } else {
        Err(Error::BadExponent(p))
    }
}

/// `(avg_Q |f|^p)^{1/p}` over the cells of `q`; `p = inf` gives the max.
pub fn lp_average(f: &GridFunction, q: &CubeRegion, p: f64, component: Option<usize>) -> Result<f64> {
    check_p(p)?;
    let cells = f.grid.cells_in(q);
    if cells.is_empty() {
        return Err(Error::DegenerateRegion);
    }
    if let Some(i) = component {
        if i >= f.n {
            return Err(Error::ShapeMismatch(format!("component {i} out of range (n = {})", f.n)));
        }
    }
    let abs = |c: usize| match component {
        Some(i) => f.at(c)[i].norm(),
        None => f.abs_at(c),
    };
    Ok(lp_average_of(cells.iter().map(|&c| abs(c)), cells.len(), p))
}

/// `(mean of a_k^p)^{1/p}` over `count` nonnegative values.
pub(crate) fn lp_average_of(vals: impl Iterator<Item = f64>, count: usize, p: f64) -> f64 {
    if p.is_infinite() {
        return vals.fold(0.0, f64::max);
    }
    let s: f64 = vals.map(|a| a.powf(p)).sum();
    (s / count as f64).powf(1.0 / p)
}

/// Family of cubes swept by [`maximal_fn`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalMode {
    /// Cubes with side `cell * 2^k` at every integer cell offset.
    AllCubes,
    /// Cubes of the ambient dyadic lattice only.
    Dyadic,
}

/// `M_p f(x) = max over swept cubes Q containing x of lp_average(f, Q, p)`.
pub fn maximal_fn(f: &GridFunction, p: f64, mode: MaximalMode) -> Result<GridFunction> {
    check_p(p)?;
    let grid = f.grid;
    let pw: Vec<f64> = (0..grid.num_cells()).map(|c| f.abs_at(c).powf(p)).collect();
    let best = maximal_of_powers(&grid, &pw, mode);
    let values = best.into_iter().map(|m| Complex64::new(m.powf(1.0 / p), 0.0)).collect();
    Ok(GridFunction { grid, n: 1, values })
}

/// Max over swept cubes of the mean of `pw`, per cell.
pub(crate) fn maximal_of_powers(grid: &Grid, pw: &[f64], mode: MaximalMode) -> Vec<f64> {
    let n = grid.cells_per_side();
    let d = grid.dim();
    let prefix = PrefixSum::new(grid, pw);
    let mut best = vec![0.0f64; grid.num_cells()];
    let mut side = 1usize;
    while side <= n {
        let vol = side.pow(d as u32) as f64;
        match mode {
            MaximalMode::Dyadic => {
                let m = n / side;
                let count = m.pow(d as u32);
                for q in 0..count {
                    let (qi, qj) = if d == 1 { (q, 0) } else { (q % m, q / m) };
                    let lo = [qi * side, qj * side];
                    let avg = prefix.rect_sum(lo, side) / vol;
                    for_each_cell_in(grid, lo, side, |c| {
                        if avg > best[c] {
                            best[c] = avg;
                        }
                    });
                }
            }
            MaximalMode::AllCubes => {
                let positions = n - side + 1;
                // averages of every placement, then a sliding-window max per axis
                let mut avg = vec![0.0; positions.pow(d as u32)];
                for (k, a) in avg.iter_mut().enumerate() {
                    let lo = if d == 1 { [k, 0] } else { [k % positions, k / positions] };
                    *a = prefix.rect_sum(lo, side) / vol;
                }
                let covered = window_max(&avg, positions, side, n, d);
                for (b, c) in best.iter_mut().zip(covered) {
                    if c > *b {
                        *b = c;
                    }
                }
            }
        }
        side *= 2;
    }
    best
}

/// For each cell, max of `avg[lo]` over placements `lo` whose window of
/// length `side` covers the cell.
fn window_max(avg: &[f64], positions: usize, side: usize, n: usize, d: usize) -> Vec<f64> {
    let along = |get: &dyn Fn(usize) -> f64, x: usize| -> f64 {
        let lo = x.saturating_sub(side - 1);
        let hi = x.min(positions - 1);
        (lo..=hi).map(get).fold(f64::NEG_INFINITY, f64::max)
    };
    if d == 1 {
        return (0..n).map(|x| along(&|k| avg[k], x)).collect();
    }
    // rows first: placements (i, j) -> cells (x, j)
    let mut rows = vec![0.0; n * positions];
    for j in 0..positions {
        for x in 0..n {
            rows[x + n * j] = along(&|i| avg[i + positions * j], x);
        }
    }
    let mut out = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            out[x + n * y] = along(&|j| rows[x + n * j], y);
        }
    }
    out
}

pub(crate) fn for_each_cell_in(grid: &Grid, lo: [usize; 2], side: usize, mut f: impl FnMut(usize)) {
    if grid.dim() == 1 {
        (lo[0]..lo[0] + side).for_each(&mut f);
    } else {
        for j in lo[1]..lo[1] + side {
            for i in lo[0]..lo[0] + side {
                f(grid.cell_index([i, j]));
            }
        }
    }
}

/// A grid-aligned cube: lower cell corner and side in cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellCube {
    pub lo: [usize; 2],
    pub side: usize,
}

impl CellCube {
    pub fn cells(&self, grid: &Grid) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.side.pow(grid.dim() as u32));
        for_each_cell_in(grid, self.lo, self.side, |c| out.push(c));
        out
    }

    /// `f` with `3Q ∩ box` zeroed.
    pub fn mask_exterior(&self, f: &GridFunction) -> GridFunction {
        let grid = f.grid;
        let n = grid.cells_per_side();
        let lo = [self.lo[0].saturating_sub(self.side), self.lo[1].saturating_sub(self.side)];
        let hi = [(self.lo[0] + 2 * self.side).min(n), (self.lo[1] + 2 * self.side).min(n)];
        let mut out = f.clone();
        for c in 0..grid.num_cells() {
            let x = grid.cell_coords(c);
            let inside = (lo[0]..hi[0]).contains(&x[0]) && (grid.dim() == 1 || (lo[1]..hi[1]).contains(&x[1]));
            if inside {
                for z in out.at_mut(c) {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
        }
        out
    }
}

/// Cubes with side `2^k` cells swept in `mode`.
pub fn cell_cubes(grid: &Grid, mode: MaximalMode) -> Vec<CellCube> {
    let n = grid.cells_per_side();
    let mut out = Vec::new();
    let mut side = 1;
    while side <= n {
        let (pos, step) = match mode {
            MaximalMode::AllCubes => (n - side + 1, 1),
            MaximalMode::Dyadic => (n / side, side),
        };
        if grid.dim() == 1 {
            out.extend((0..pos).map(|i| CellCube { lo: [i * step, 0], side }));
        } else {
            for j in 0..pos {
                out.extend((0..pos).map(|i| CellCube { lo: [i * step, j * step], side }));
            }
        }
        side *= 2;
    }
    out
}

/// Summed-area table over cells.
pub(crate) struct PrefixSum {
    d: usize,
    n: usize,
    table: Vec<f64>,
}

impl PrefixSum {
    pub(crate) fn new(grid: &Grid, vals: &[f64]) -> Self {
        let n = grid.cells_per_side();
        let d = grid.dim();
        if d == 1 {
            let mut table = vec![0.0; n + 1];
            for i in 0..n {
                table[i + 1] = table[i] + vals[i];
            }
            return Self { d, n, table };
        }
        let w = n + 1;
        let mut table = vec![0.0; w * w];
        for j in 0..n {
            for i in 0..n {
                table[(i + 1) + w * (j + 1)] =
                    vals[i + n * j] + table[i + w * (j + 1)] + table[(i + 1) + w * j] - table[i + w * j];
            }
        }
        Self { d, n, table }
    }

    /// Sum over cells `[lo, lo + side)` per axis (must lie inside the grid).
    pub(crate) fn rect_sum(&self, lo: [usize; 2], side: usize) -> f64 {
        self.box_sum(lo, [lo[0] + side, lo[1] + side])
    }

    pub(crate) fn box_sum(&self, lo: [usize; 2], hi: [usize; 2]) -> f64 {
        if self.d == 1 {
            return self.table[hi[0]] - self.table[lo[0]];
        }
        let w = self.n + 1;
        self.table[hi[0] + w * hi[1]] - self.table[lo[0] + w * hi[1]] - self.table[hi[0] + w * lo[1]]
            + self.table[lo[0] + w * lo[1]]
    }
}

/// Zero `f` outside the given support.
pub fn restrict(f: &GridFunction, s: Support<'_>) -> GridFunction {
    let mask = match s {
        Support::Cube(q) => q.mask(&f.grid),
        Support::Mask(m) => m.clone(),
    };
    restrict_mask(f, &mask)
}

pub fn restrict_mask(f: &GridFunction, mask: &CellMask) -> GridFunction {
    let mut out = f.clone();
    for c in 0..f.grid.num_cells() {
        if !mask.cells[c] {
            for z in out.at_mut(c) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// `<f, g> = sum_cells sum_i f_i conj(g_i) * cell_volume`.
pub fn pairing(f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
    check_same(f, g)?;
    let s: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum();
    Ok(s * f.grid.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_cube_counts_1d() {
        let g = Grid::unit_origin(1, 1.0, 8).unwrap();
        assert_eq!(cell_cubes(&g, MaximalMode::AllCubes).len(), 8 + 7 + 5 + 1);
        assert_eq!(cell_cubes(&g, MaximalMode::Dyadic).len(), 8 + 4 + 2 + 1);
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_average_is_modulus() {
        let g = Grid::unit_origin(2, 4.0, 16).unwrap();
        let f = GridFunction::constant(g, &[Complex64::new(3.0, 4.0)]);
        let q = CubeRegion::new(&[1.3, 2.2], 1.0);
        for p in [1.0, 1.5, 2.0, 7.0] {
            assert!((lp_average(&f, &q, p, None).unwrap() - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_indicator_averages() {
        let g = Grid::unit_origin(1, 1.0, 8).unwrap();
        let f = GridFunction::from_fn_scalar(g, |x| c(if x[0] < 0.5 { 1.0 } else { 0.0 }));
        let q = g.whole_box();
        assert!((lp_average(&f, &q, 1.0, None).unwrap() - 0.5).abs() < 1e-15);
        assert!((lp_average(&f, &q, 2.0, None).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_bad_exponent() {
        let g = Grid::unit_origin(1, 1.0, 8).unwrap();
        let f = GridFunction::zeros(g, 1);
        let tiny = CubeRegion::new(&[0.01], 0.01);
        assert!(matches!(lp_average(&f, &tiny, 1.0, None), Err(Error::DegenerateRegion)));
        assert!(matches!(lp_average(&f, &g.whole_box(), 0.5, None), Err(Error::BadExponent(_))));
        assert!(maximal_fn(&f, 0.9, MaximalMode::Dyadic).is_err());
    }

    #[test]
    fn membership_by_center_is_half_open() {
        let g = Grid::unit_origin(1, 1.0, 8).unwrap();
        // [0.25, 0.5) holds centers 0.3125 and 0.4375
        let q = CubeRegion::new(&[0.375], 0.25);
        assert_eq!(g.cells_in(&q), vec![2, 3]);
        // 3-fold dilate [0, 0.75)
        assert_eq!(g.cells_in(&q.dilate(3.0)), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn dyadic_maximal_of_single_cell_indicator() {
        // brute force over all dyadic intervals containing each cell
        let g = Grid::unit_origin(1, 1.0, 8).unwrap();
        let f = GridFunction::from_fn_scalar(g, |x| c(if (0.375..0.5).contains(&x[0]) { 1.0 } else { 0.0 }));
        let m = maximal_fn(&f, 1.0, MaximalMode::Dyadic).unwrap();
        for x in 0..8usize {
            let mut best: f64 = 0.0;
            for k in 0..=3u32 {
                let side = 1usize << k;
                let lo = (x / side) * side;
                let frac = if (lo..lo + side).contains(&3) { 1.0 / side as f64 } else { 0.0 };
                best = best.max(frac);
            }
            assert!((m.values[x].re - best).abs() < 1e-15, "cell {x}");
        }
    }

    #[test]
    fn serialization_round_trip_is_exact() {
        let g = Grid::new(2, &[-1.0, 0.5], 2.0, 4).unwrap();
        let f = GridFunction::from_values(
            g,
            2,
            (0..32).map(|k| Complex64::new((k as f64).sin() * 1e-7, 1.0 / (k as f64 + 0.3))).collect(),
        )
        .unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let back = GridFunction::read_from(&buf[..]).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn orthogonal_components_pair_to_zero() {
        let g = Grid::unit_origin(1, 1.0, 8).unwrap();
        let e1 = GridFunction::constant(g, &[c(1.0), c(0.0)]);
        let e2 = GridFunction::constant(g, &[c(0.0), c(2.0)]);
        assert_eq!(pairing(&e1, &e2).unwrap(), c(0.0));
        assert!((pairing(&e1, &e1).unwrap() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(Grid::unit_origin(3, 1.0, 8).is_err());
        assert!(Grid::unit_origin(1, 1.0, 6).is_err());
        assert!(Grid::unit_origin(1, -1.0, 8).is_err());
        let g = Grid::unit_origin(1, 1.0, 8).unwrap();
        assert!(GridFunction::from_values(g, 1, vec![c(f64::NAN); 8]).is_err());
    }
}
