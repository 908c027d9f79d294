//! Matrix weights, `A_t` characteristics, weighted norms, one-sided bound
//! audits and the scalar quantities of the Bloom setting.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cell_cubes, CellCube, Grid, GridFunction, MaximalMode};
use crate::linalg::{self, CMatrix};

/// Smallest admissible eigenvalue of a weight.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// Hermitian positive definite matrix per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixWeight {
    pub grid: Grid,
    pub n: usize,
    mats: Vec<CMatrix>,
}

impl MatrixWeight {
    /// Takes the Hermitian part of each matrix and lifts eigenvalues below
    /// [`EIGEN_FLOOR`] to the floor.
    pub fn new(grid: Grid, mats: Vec<CMatrix>) -> Result<Self> {
        if mats.len() != grid.num_cells() {
            return Err(Error::ShapeMismatch(format!("expected {} matrices, got {}", grid.num_cells(), mats.len())));
        }
        let n = mats.first().map_or(0, |m| m.nrows());
        if n == 0 || mats.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::ShapeMismatch("weights must be square and of one size".into()));
        }
        let mats = mats.iter().map(|m| linalg::hermitian_apply(m, |x| x.max(EIGEN_FLOOR))).collect();
        Ok(Self { grid, n, mats })
    }

    pub fn identity(grid: Grid, n: usize) -> Self {
        Self { grid, n, mats: vec![linalg::identity(n); grid.num_cells()] }
    }

    pub fn constant(grid: Grid, m: &CMatrix) -> Result<Self> {
        Self::new(grid, vec![m.clone(); grid.num_cells()])
    }

    /// Diagonal weight from per-component scalar weights.
    pub fn diagonal(grid: Grid, diag: &[Vec<f64>]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || diag.iter().any(|w| w.len() != grid.num_cells()) {
            return Err(Error::ShapeMismatch("one scalar weight per component and cell".into()));
        }
        let mats = (0..grid.num_cells())
            .map(|c| {
                let mut m = CMatrix::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = Complex64::new(diag[i][c], 0.0);
                }
                m
            })
            .collect();
        Self::new(grid, mats)
    }

    pub fn scalar(grid: Grid, w: &[f64]) -> Result<Self> {
        Self::diagonal(grid, &[w.to_vec()])
    }

    pub fn at(&self, cell: usize) -> &CMatrix {
        &self.mats[cell]
    }

    /// `W^alpha` per cell.
    pub fn power(&self, alpha: f64) -> Vec<CMatrix> {
        self.mats.par_iter().map(|m| linalg::hermitian_apply(m, |x| x.powf(alpha))).collect()
    }

    /// `U* W U` for a constant unitary `U`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        Self::new(self.grid, self.mats.iter().map(|m| u.adjoint() * m * u).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid, self.mats.iter().map(|m| m * Complex64::new(c, 0.0)).collect())
    }

    /// Per-cell factor `exp(eps * s(x))` with a smooth random profile `s`,
    /// `|s| <= 1`, Lipschitz in `log` scale.
    pub fn log_lipschitz_perturbation(&self, eps: f64, seed: u64) -> Result<Self> {
        use rand::Rng;
        let mut r = crate::rng::seeded(seed);
        let modes: Vec<(f64, f64, f64, f64)> =
            (0..4).map(|_| (r.random_range(-1.0..1.0), r.random_range(1.0..4.0), r.random_range(1.0..4.0), r.random_range(0.0..6.3))).collect();
        let side = self.grid.box_side();
        let origin = self.grid.origin().to_vec();
        let mats = (0..self.grid.num_cells())
            .map(|c| {
                let x = self.grid.cell_center(c);
                let mut s = 0.0;
                for &(a, kx, ky, ph) in &modes {
                    let arg = kx * (x[0] - origin[0]) / side + if self.grid.dim() == 2 { ky * (x[1] - origin[1]) / side } else { 0.0 };
                    s += 0.25 * a * (std::f64::consts::TAU * arg + ph).sin();
                }
                &self.mats[c] * Complex64::new((eps * s).exp(), 0.0)
            })
            .collect();
        Self::new(self.grid, mats)
    }
}

/// Which averaged operator-norm exponent enters the characteristic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AtMode {
    /// `avg_x (avg_y |W^{1/t}(x) W^{-1/t}(y)|^{t'})^{t/t'}`.
    Classical,
    /// Inner exponent `a` in place of `t'`.
    Mixed { a: f64 },
}

/// `a = t q' / (t - q')` for `q' < t`.
pub fn mixed_exponent(t: f64, q: f64) -> Result<f64> {
    let qc = crate::convexbody::conjugate_exponent(q);
    if !(t > qc) {
        return Err(Error::InvalidParameter(format!("need q' < t, got q' = {qc}, t = {t}")));
    }
    Ok(t * qc / (t - qc))
}

fn check_t(t: f64) -> Result<()> {
    if t > 1.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::BadExponent(t))
    }
}

/// `sup_Q avg_{x∈Q} (avg_{y∈Q} |W^{1/t}(x) W^{-1/t}(y)|^e)^{t/e}` over the
/// cubes of `family`, with `e = t'` or `e = a`.
pub fn matrix_at_constant(w: &MatrixWeight, t: f64, mode: AtMode, family: MaximalMode) -> Result<f64> {
    check_t(t)?;
    let e = match mode {
        AtMode::Classical => t / (t - 1.0),
        AtMode::Mixed { a } => {
            if !(a >= 1.0) {
                return Err(Error::BadExponent(a));
            }
            a
        }
    };
    let cells = w.grid.num_cells();
    let pos = w.power(1.0 / t);
    let neg = w.power(-1.0 / t);
    // |W^{1/t}(x) W^{-1/t}(y)|^e for every pair
    let pair: Vec<f64> = (0..cells * cells)
        .into_par_iter()
        .map(|k| {
            let (x, y) = (k / cells, k % cells);
            linalg::op_norm(&(&pos[x] * &neg[y])).powf(e)
        })
        .collect();
    Ok(cube_sup(&w.grid, family, |cs| {
        let m = cs.len() as f64;
        let outer: f64 = cs.iter().map(|&x| (cs.iter().map(|&y| pair[x * cells + y]).sum::<f64>() / m).powf(t / e)).sum();
        outer / m
    }))
}

fn cube_sup(grid: &Grid, family: MaximalMode, f: impl Fn(&[usize]) -> f64 + Sync) -> f64 {
    cell_cubes(grid, family).par_iter().map(|q| f(&q.cells(grid))).reduce(|| 0.0, f64::max)
}

/// Scalar `[w]_{A_t} = sup_Q <w>_Q <w^{-1/(t-1)}>_Q^{t-1}`.
pub fn scalar_at_constant(w: &[f64], grid: &Grid, t: f64, family: MaximalMode) -> Result<f64> {
    check_t(t)?;
    if w.len() != grid.num_cells() || w.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("scalar weight must be positive on every cell".into()));
    }
    Ok(cube_sup(grid, family, |cs| {
        let m = cs.len() as f64;
        let a = cs.iter().map(|&c| w[c]).sum::<f64>() / m;
        let b = cs.iter().map(|&c| w[c].powf(-1.0 / (t - 1.0))).sum::<f64>() / m;
        a * b.powf(t - 1.0)
    }))
}

/// `(Σ |W^{1/t} f|^t vol)^{1/t}`.
pub fn weighted_norm(f: &GridFunction, w: &MatrixWeight, t: f64) -> Result<f64> {
    check_t(t)?;
    if f.grid != w.grid || f.n != w.n {
        return Err(Error::ShapeMismatch("function and weight differ in grid or n".into()));
    }
    let pos = w.power(1.0 / t);
    let s: f64 = (0..f.grid.num_cells()).map(|c| linalg::vnorm(&linalg::matvec(&pos[c], f.at(c))).powf(t)).sum();
    Ok((s * f.grid.cell_volume()).powf(1.0 / t))
}

/// A linear operator on grid functions.
pub type Operator<'a> = dyn Fn(&GridFunction) -> Result<GridFunction> + Sync + 'a;

/// Dense matrix of a linear operator in the cell-major basis.
pub fn operator_matrix(op: &Operator<'_>, grid: Grid, n: usize) -> Result<CMatrix> {
    let dim = grid.num_cells() * n;
    let cols = (0..dim)
        .into_par_iter()
        .map(|k| {
            let mut e = GridFunction::zeros(grid, n);
            e.values[k] = Complex64::new(1.0, 0.0);
            Ok(op(&e)?.values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_fn(dim, dim, |r, c| cols[c][r]))
}

/// `||T||_{L^t(W) -> L^t(W)}`: exact for `t = 2` (largest singular value of
/// `W^{1/2} T W^{-1/2}`), otherwise the best ratio over seeded random inputs.
pub fn weighted_operator_norm(op: &Operator<'_>, w: &MatrixWeight, t: f64, trials: usize, seed: u64) -> Result<f64> {
    check_t(t)?;
    let grid = w.grid;
    let n = w.n;
    if t == 2.0 {
        let m = operator_matrix(op, grid, n)?;
        let half = w.power(0.5);
        let inv = w.power(-0.5);
        let dim = grid.num_cells() * n;
        let block = |mats: &[CMatrix]| {
            let mut b = CMatrix::zeros(dim, dim);
            for (c, mc) in mats.iter().enumerate() {
                for i in 0..n {
                    for j in 0..n {
                        b[(c * n + i, c * n + j)] = mc[(i, j)];
                    }
                }
            }
            b
        };
        return Ok(linalg::op_norm(&(block(&half) * m * block(&inv))));
    }
    let ratios = (0..trials.max(1))
        .into_par_iter()
        .map(|k| {
            let mut r = crate::rng::substream(seed, k as u64);
            let f = crate::rng::gaussian_function(&mut r, grid, n);
            let den = weighted_norm(&f, w, t)?;
            Ok(weighted_norm(&op(&f)?, w, t)? / den)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// `1 + q'/(t(t - q'))`.
pub fn exponent_mixed(t: f64, q: f64) -> f64 {
    let qc = crate::convexbody::conjugate_exponent(q);
    1.0 + qc / (t * (t - qc))
}

/// `1 + 1/(t-1) - 1/t + min{1, 1/(t-1)}`.
pub fn exponent_bounded_omega(t: f64) -> f64 {
    1.0 + 1.0 / (t - 1.0) - 1.0 / t + (1.0 / (t - 1.0)).min(1.0)
}

/// `2 + 2/(t-1) - 1/t`.
pub fn exponent_commutator(t: f64) -> f64 {
    2.0 + 2.0 / (t - 1.0) - 1.0 / t
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditPoint {
    pub family_param: f64,
    pub weight_constant: f64,
    pub observed_ratio: f64,
    pub predicted_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub exponent: f64,
    /// `observed / [W]^exponent` at the reference member.
    pub c_fit: f64,
    pub reference_param: f64,
    pub points: Vec<AuditPoint>,
    /// Members with `observed > C [W]^exponent`.
    pub violations: Vec<f64>,
}

impl AuditReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("family_param,weight_constant,observed_ratio,predicted_bound\n");
        for p in &self.points {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", p.family_param, p.weight_constant, p.observed_ratio, p.predicted_bound));
        }
        s
    }
}

/// One-sided audit `||op||_{L^t(W)} <= C [W]^exponent` over a weight family.
/// `C` is fitted at the member with the smallest characteristic (the
/// identity for power families) and then checked at every other member.
pub fn weighted_bound_audit(
    op: &Operator<'_>,
    family: &[(f64, MatrixWeight)],
    t: f64,
    mode: AtMode,
    at_family: MaximalMode,
    exponent: f64,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty weight family".into()));
    }
    let mut raw = Vec::with_capacity(family.len());
    for (param, w) in family {
        let k = matrix_at_constant(w, t, mode, at_family)?;
        let obs = weighted_operator_norm(op, w, t, trials, seed)?;
        raw.push((*param, k, obs));
    }
    let reference = raw.iter().min_by(|a, b| a.1.total_cmp(&b.1)).copied().unwrap();
    let c_fit = reference.2 / reference.1.powf(exponent);
    let points: Vec<AuditPoint> = raw
        .iter()
        .map(|&(p, k, o)| AuditPoint { family_param: p, weight_constant: k, observed_ratio: o, predicted_bound: c_fit * k.powf(exponent) })
        .collect();
    let violations = points.iter().filter(|p| p.observed_ratio > p.predicted_bound * (1.0 + 1e-9)).map(|p| p.family_param).collect();
    Ok(AuditReport { exponent, c_fit, reference_param: reference.0, points, violations })
}

/// `W_α(x) = diag(|x - x0|^{±α})` with signs alternating over components;
/// `x0` is the box center.
pub fn power_family(grid: Grid, n: usize, alphas: &[f64]) -> Result<Vec<(f64, MatrixWeight)>> {
    let center: Vec<f64> = grid.origin().iter().map(|o| o + grid.box_side() / 2.0).collect();
    let dist: Vec<f64> = (0..grid.num_cells())
        .map(|c| {
            let x = grid.cell_center(c);
            (0..grid.dim()).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    alphas
        .iter()
        .map(|&a| {
            let diag: Vec<Vec<f64>> =
                (0..n).map(|i| dist.iter().map(|r| r.powf(if i % 2 == 0 { a } else { -a })).collect()).collect();
            Ok((a, MatrixWeight::diagonal(grid, &diag)?))
        })
        .collect()
}

/// `[w]_{RH_s} = sup_Q (avg_Q w^s)^{1/s} / avg_Q w`.
pub fn reverse_holder(w: &[f64], grid: &Grid, s: f64, family: MaximalMode) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::BadExponent(s));
    }
    check_positive(w, grid)?;
    Ok(cube_sup(grid, family, |cs| {
        let m = cs.len() as f64;
        let a = (cs.iter().map(|&c| w[c].powf(s)).sum::<f64>() / m).powf(1.0 / s);
        a / (cs.iter().map(|&c| w[c]).sum::<f64>() / m)
    }))
}

fn check_positive(w: &[f64], grid: &Grid) -> Result<()> {
    if w.len() != grid.num_cells() || w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("weight must be positive and finite on every cell".into()));
    }
    Ok(())
}

/// `α = 1/u - 1/v`.
pub fn bloom_alpha(u: f64, v: f64) -> f64 {
    1.0 / u - 1.0 / v
}

/// `ν` solved cellwise from `ν^{1+α} = μ^{1/u} λ^{-1/v}`.
pub fn bloom_weight(mu: &[f64], lambda: &[f64], u: f64, v: f64) -> Result<Vec<f64>> {
    if mu.len() != lambda.len() {
        return Err(Error::ShapeMismatch("μ and λ differ in length".into()));
    }
    if !(u > 1.0 && v > 1.0) {
        return Err(Error::InvalidParameter(format!("need u, v > 1, got {u}, {v}")));
    }
    let alpha = bloom_alpha(u, v);
    Ok(mu.iter().zip(lambda).map(|(m, l)| (m.powf(1.0 / u) * l.powf(-1.0 / v)).powf(1.0 / (1.0 + alpha))).collect())
}

fn oscillation(b: &GridFunction, cs: &[usize]) -> f64 {
    let m = cs.len() as f64;
    let avg: Complex64 = cs.iter().map(|&c| b.values[c]).sum::<Complex64>() / m;
    cs.iter().map(|&c| (b.values[c] - avg).norm()).sum::<f64>() * b.grid.cell_volume()
}

/// `||b||_{BMO^α_ν} = sup_Q ν(Q)^{-(1 + α/d)} ∫_Q |b - <b>_Q|`.
pub fn bmo_alpha_nu(b: &GridFunction, nu: &[f64], alpha: f64, family: MaximalMode) -> Result<f64> {
    check_scalar(b)?;
    check_positive(nu, &b.grid)?;
    let d = b.grid.dim() as f64;
    let vol = b.grid.cell_volume();
    Ok(cube_sup(&b.grid, family, |cs| {
        let nq: f64 = cs.iter().map(|&c| nu[c]).sum::<f64>() * vol;
        oscillation(b, cs) / nq.powf(1.0 + alpha / d)
    }))
}

fn check_scalar(b: &GridFunction) -> Result<()> {
    if b.n != 1 {
        return Err(Error::ShapeMismatch("the symbol b must be scalar".into()));
    }
    Ok(())
}

/// `M^#_ν b(x) = sup_{Q ∋ x} ν(Q)^{-1} ∫_Q |b - <b>_Q|`.
pub fn sharp_maximal(b: &GridFunction, nu: &[f64], family: MaximalMode) -> Result<Vec<f64>> {
    check_scalar(b)?;
    check_positive(nu, &b.grid)?;
    let grid = b.grid;
    let vol = grid.cell_volume();
    let vals: Vec<(CellCube, f64)> = cell_cubes(&grid, family)
        .into_par_iter()
        .map(|q| {
            let cs = q.cells(&grid);
            let nq: f64 = cs.iter().map(|&c| nu[c]).sum::<f64>() * vol;
            (q, oscillation(b, &cs) / nq)
        })
        .collect();
    let mut best = vec![0.0f64; grid.num_cells()];
    for (q, v) in vals {
        crate::grid::for_each_cell_in(&grid, q.lo, q.side, |c| best[c] = best[c].max(v));
    }
    Ok(best)
}

/// `(Σ |h|^τ ν vol)^{1/τ}`.
pub fn weighted_lp(h: &[f64], nu: &[f64], tau: f64, grid: &Grid) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::BadExponent(tau));
    }
    let s: f64 = h.iter().zip(nu).map(|(a, w)| a.abs().powf(tau) * w).sum();
    Ok((s * grid.cell_volume()).powf(1.0 / tau))
}

/// Scalar Bloom-setting quantities.
#[derive(Clone, Debug, Serialize)]
pub struct ScalarQuantities {
    pub rh_s: Option<f64>,
    pub alpha: f64,
    pub bloom_nu: Vec<f64>,
    /// `||b||_{BMO^{αd}_ν}` (the branch `u <= v`).
    pub bmo_alpha_nu: Option<f64>,
    /// `||M^#_ν b||_{L^τ(ν)}` with `τ = -1/α` (the branch `u > v`).
    pub sharp_max_norm: Option<f64>,
    /// `N_{u,v}(b)` from the applicable branch.
    pub n_uv: f64,
}

/// Bloom setup `μ, λ, u, v` with symbol `b`; `rh` optionally evaluates
/// `[μ]_{RH_s}`.
pub fn scalar_weight_quantities(
    mu: &[f64],
    lambda: &[f64],
    u: f64,
    v: f64,
    b: &GridFunction,
    rh: Option<f64>,
    family: MaximalMode,
) -> Result<ScalarQuantities> {
    let grid = b.grid;
    check_positive(mu, &grid)?;
    check_positive(lambda, &grid)?;
    let nu = bloom_weight(mu, lambda, u, v)?;
    let alpha = bloom_alpha(u, v);
    let rh_s = rh.map(|s| reverse_holder(mu, &grid, s, family)).transpose()?;
    let d = grid.dim() as f64;
    let (bmo, sharp) = if u <= v {
        (Some(bmo_alpha_nu(b, &nu, alpha * d, family)?), None)
    } else {
        let tau = -1.0 / alpha;
        let m = sharp_maximal(b, &nu, family)?;
        (None, Some(weighted_lp(&m, &nu, tau, &grid)?))
    };
    Ok(ScalarQuantities { rh_s, alpha, n_uv: bmo.or(sharp).unwrap_or(0.0), bloom_nu: nu, bmo_alpha_nu: bmo, sharp_max_norm: sharp })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_weight_has_unit_characteristic() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let mut r = crate::rng::seeded(4);
        let a = crate::rng::gaussian_matrix(&mut r, 2);
        let w = MatrixWeight::constant(g, &(&a * a.adjoint() + linalg::identity(2))).unwrap();
        let k = matrix_at_constant(&w, 3.0, AtMode::Classical, MaximalMode::Dyadic).unwrap();
        assert!((k - 1.0).abs() < 1e-10);
    }

    #[test]
    fn identity_weight_gives_plain_norm() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let f = GridFunction::constant(g, &[Complex64::new(2.0, 0.0)]);
        let w = MatrixWeight::identity(g, 1);
        assert!((weighted_norm(&f, &w, 3.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn floor_is_enforced() {
        let g = Grid::unit_origin(1, 1.0, 2).unwrap();
        let w = MatrixWeight::scalar(g, &[0.0, -1.0]).unwrap();
        assert!((w.at(0)[(0, 0)].re - EIGEN_FLOOR).abs() < 1e-20);
        assert!((w.at(1)[(0, 0)].re - EIGEN_FLOOR).abs() < 1e-20);
    }

    #[test]
    fn exponents_at_two() {
        assert!((exponent_bounded_omega(2.0) - 2.5).abs() < 1e-15);
        assert!((exponent_commutator(2.0) - 3.5).abs() < 1e-15);
        assert!((exponent_mixed(2.0, 4.0) - 2.0).abs() < 1e-12);
        assert!((mixed_exponent(2.0, 4.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn equal_weights_give_unit_bloom_weight() {
        let mu = vec![0.5, 2.0, 3.0];
        let nu = bloom_weight(&mu, &mu, 2.0, 2.0).unwrap();
        assert!(nu.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }
}
