//! Bochner–Riesz means on the periodic grid box, the grand maximal
//! truncation and the bi-sublinear maximal operator.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{cell_cubes, for_each_cell_in, CellCube, Grid, GridFunction, MaximalMode};

/// Default `cutoff`: `N / 4` discrete frequency units.
pub fn default_cutoff(grid: &Grid) -> f64 {
    grid.cells_per_side() as f64 / 4.0
}

/// `(1 - |ξ|²)^δ` for `|ξ| < 1`, zero otherwise (also at `|ξ| = 1`).
pub fn multiplier(xi: f64, delta: f64) -> f64 {
    if xi < 1.0 {
        (1.0 - xi * xi).powf(delta)
    } else {
        0.0
    }
}

/// Signed frequency of FFT bin `k` on `n` points.
fn freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Precomputed multiplier on the FFT bins of one grid.
#[derive(Clone, Debug)]
pub struct BochnerRiesz {
    pub grid: Grid,
    pub delta: f64,
    pub cutoff: f64,
    symbol: Vec<f64>,
}

impl BochnerRiesz {
    pub fn new(grid: &Grid, delta: f64, cutoff: Option<f64>) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
        }
        let cutoff = cutoff.unwrap_or_else(|| default_cutoff(grid));
        if !(cutoff > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff must be positive, got {cutoff}")));
        }
        let n = grid.cells_per_side();
        let symbol = (0..grid.num_cells())
            .map(|c| {
                let [i, j] = grid.cell_coords(c);
                let k2 = freq(i, n).powi(2) + if grid.dim() == 2 { freq(j, n).powi(2) } else { 0.0 };
                multiplier(k2.sqrt() / cutoff, delta)
            })
            .collect();
        Ok(Self { grid: *grid, delta, cutoff, symbol })
    }

    /// Multiplier value at each FFT bin, in cell order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// `B_δ f`, componentwise.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid != self.grid {
            return Err(Error::ShapeMismatch("function lives on another grid".into()));
        }
        let cells = self.grid.num_cells();
        let mut out = GridFunction::zeros(self.grid, f.n);
        let mut planner = FftPlanner::new();
        for i in 0..f.n {
            let mut buf: Vec<Complex64> = (0..cells).map(|c| f.at(c)[i]).collect();
            fft_nd(&mut planner, &self.grid, &mut buf, false);
            for (b, m) in buf.iter_mut().zip(&self.symbol) {
                *b *= *m;
            }
            fft_nd(&mut planner, &self.grid, &mut buf, true);
            let norm = 1.0 / cells as f64;
            for (c, b) in buf.into_iter().enumerate() {
                out.at_mut(c)[i] = b * norm;
            }
        }
        Ok(out)
    }
}

/// Unnormalized forward or inverse DFT over the grid axes.
fn fft_nd(planner: &mut FftPlanner<f64>, grid: &Grid, buf: &mut [Complex64], inverse: bool) {
    let n = grid.cells_per_side();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    // rows are contiguous (x fastest)
    fft.process(buf);
    if grid.dim() == 2 {
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                col[j] = buf[i + n * j];
            }
            fft.process(&mut col);
            for j in 0..n {
                buf[i + n * j] = col[j];
            }
        }
    }
}

/// `B_δ f` with the given `cutoff` (default `N / 4`).
pub fn bochner_riesz(f: &GridFunction, delta: f64, cutoff: Option<f64>) -> Result<GridFunction> {
    BochnerRiesz::new(&f.grid, delta, cutoff)?.apply(f)
}

/// Per swept cube, `(avg_Q |B_δ(f 1_{(3Q)^c})|^s)^{1/s}`.
pub fn cube_averages(op: &BochnerRiesz, f: &GridFunction, s: f64) -> Result<Vec<(CellCube, f64)>> {
    if !(s >= 1.0) {
        return Err(Error::BadExponent(s));
    }
    let grid = f.grid;
    cell_cubes(&grid, MaximalMode::AllCubes)
        .into_par_iter()
        .map(|q| {
            let t = op.apply(&q.mask_exterior(f))?;
            let cells = q.cells(&grid);
            let avg = crate::grid::lp_average_of(cells.iter().map(|&c| t.abs_at(c)), cells.len(), s);
            Ok((q, avg))
        })
        .collect()
}

/// `M_{B_δ,s} f(x) = sup_{Q ∋ x} (avg_Q |B_δ(f 1_{(3Q)^c})|^s)^{1/s}` over
/// all grid-aligned cubes.
pub fn grand_max_truncation(f: &GridFunction, s: f64, delta: f64, cutoff: Option<f64>) -> Result<GridFunction> {
    let op = BochnerRiesz::new(&f.grid, delta, cutoff)?;
    let grid = f.grid;
    let mut best = vec![0.0f64; grid.num_cells()];
    for (q, avg) in cube_averages(&op, f, s)? {
        for_each_cell_in(&grid, q.lo, q.side, |c| best[c] = best[c].max(avg));
    }
    Ok(GridFunction { grid, n: 1, values: best.into_iter().map(|v| Complex64::new(v, 0.0)).collect() })
}

/// `M_T(f, g)(x) = sup_{Q ∋ x} avg_Q |B_δ(f 1_{(3Q)^c})| |g|`.
pub fn bisublinear_max(f: &GridFunction, g: &GridFunction, delta: f64, cutoff: Option<f64>) -> Result<GridFunction> {
    if f.grid != g.grid {
        return Err(Error::ShapeMismatch("f and g live on different grids".into()));
    }
    let op = BochnerRiesz::new(&f.grid, delta, cutoff)?;
    let grid = f.grid;
    let avgs: Vec<(CellCube, f64)> = cell_cubes(&grid, MaximalMode::AllCubes)
        .into_par_iter()
        .map(|q| {
            let t = op.apply(&q.mask_exterior(f))?;
            let cells = q.cells(&grid);
            let s: f64 = cells.iter().map(|&c| t.abs_at(c) * g.abs_at(c)).sum();
            Ok((q, s / cells.len() as f64))
        })
        .collect::<Result<_>>()?;
    let mut best = vec![0.0f64; grid.num_cells()];
    for (q, avg) in avgs {
        for_each_cell_in(&grid, q.lo, q.side, |c| best[c] = best[c].max(avg));
    }
    Ok(GridFunction { grid, n: 1, values: best.into_iter().map(|v| Complex64::new(v, 0.0)).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_fixed() {
        let g = Grid::unit_origin(2, 1.0, 16).unwrap();
        let f = GridFunction::constant(g, &[Complex64::new(1.5, -0.5)]);
        let b = bochner_riesz(&f, 0.5, None).unwrap();
        for (x, y) in b.values.iter().zip(&f.values) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_frequency_is_removed() {
        assert_eq!(multiplier(1.0, 0.0), 0.0);
        assert_eq!(multiplier(0.0, 0.7), 1.0);
    }

    #[test]
    fn negative_delta_rejected() {
        let g = Grid::unit_origin(1, 1.0, 8).unwrap();
        assert!(BochnerRiesz::new(&g, -0.1, None).is_err());
    }
}
