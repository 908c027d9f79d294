//! L^p convex bodies of vector-valued grid functions, represented through
//! their support functions.
//!
//! For `K = <<f>>_{L^p(Q)}` and a direction `v`, duality gives
//! `h_K(v) = sup_{a in K} Re(a . v) = ||f . v||_{L^p(Q)}`, so every body is
//! evaluated exactly without point clouds.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{lp_average_of, CellMask, CubeRegion, Grid, GridFunction};
use crate::linalg::{self, CMatrix};
use crate::rng;

/// `<<f>>_{L^p(S)}` for a cube or a cell set `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyHandle {
    pub grid: Grid,
    pub n: usize,
    pub p: f64,
    /// Cells of the averaging region.
    pub cells: Vec<usize>,
    /// Values of `f` on `cells`, cell-major.
    values: Vec<Complex64>,
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && !p.is_nan() {
        Ok(())
    } else {
        Err(Error::BadExponent(p))
    }
}

/// Hölder conjugate; `1 -> inf`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

impl BodyHandle {
    pub fn new(f: &GridFunction, q: &CubeRegion, p: f64) -> Result<Self> {
        Self::on_cells(f, f.grid.cells_in(q), p)
    }

    /// Body averaged over an arbitrary cell set.
    pub fn on_mask(f: &GridFunction, s: &CellMask, p: f64) -> Result<Self> {
        Self::on_cells(f, s.indices().collect(), p)
    }

    pub fn on_cells(f: &GridFunction, cells: Vec<usize>, p: f64) -> Result<Self> {
        check_p(p)?;
        if cells.is_empty() {
            return Err(Error::DegenerateRegion);
        }
        let mut values = Vec::with_capacity(cells.len() * f.n);
        for &c in &cells {
            values.extend_from_slice(f.at(c));
        }
        Ok(Self { grid: f.grid, n: f.n, p, cells, values })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn value(&self, k: usize) -> &[Complex64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    /// `x -> f(x) . v` on the region's cells.
    fn dot_values(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.len()).map(|k| linalg::vdot(self.value(k), v)).collect()
    }

    fn check_dir(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::ShapeMismatch(format!("direction has {} entries, n = {}", v.len(), self.n)));
        }
        Ok(())
    }

    /// `h_K(v) = ||f . v||_{L^p}`.
    pub fn support(&self, v: &[Complex64]) -> Result<f64> {
        self.check_dir(v)?;
        let dv = self.dot_values(v);
        Ok(lp_average_of(dv.iter().map(|z| z.norm()), dv.len(), self.p))
    }

    /// `L^{p'}` average norm of a scalar function on the region.
    pub fn dual_norm(&self, phi: &GridFunction) -> f64 {
        let pc = conjugate_exponent(self.p);
        lp_average_of(self.cells.iter().map(|&c| phi.values[c].norm()), self.len(), pc)
    }

    /// `a_i = avg f_i conj(phi)`; requires `||phi||_{L^{p'}} <= 1`.
    pub fn member_point(&self, phi: &GridFunction) -> Result<Vec<Complex64>> {
        if phi.n != 1 || phi.grid != self.grid {
            return Err(Error::ShapeMismatch("dual function must be scalar on the body grid".into()));
        }
        let norm = self.dual_norm(phi);
        if norm > 1.0 + 1e-12 {
            return Err(Error::DualNormViolation { norm });
        }
        let phis: Vec<Complex64> = self.cells.iter().map(|&c| phi.values[c]).collect();
        Ok(self.point_from_dual(&phis))
    }

    /// Member point for a dual function given on the region's cells.
    fn point_from_dual(&self, phis: &[Complex64]) -> Vec<Complex64> {
        let mut a = vec![linalg::czero(); self.n];
        for (k, ph) in phis.iter().enumerate() {
            for (ai, fi) in a.iter_mut().zip(self.value(k)) {
                *ai += fi * ph.conj();
            }
        }
        let m = self.len() as f64;
        a.iter_mut().for_each(|z| *z /= m);
        a
    }

    /// Point of the body attaining `Re(a . v) = h_K(v)`.
    pub fn extreme_point(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_dir(v)?;
        let dv = self.dot_values(v);
        let phis = dual_extremizer(&dv, self.p);
        Ok(self.point_from_dual(&phis))
    }

    /// Gram matrix `G_ij = avg f_i conj(f_j)`.
    pub fn gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.n, self.n);
        for k in 0..self.len() {
            let x = self.value(k);
            for i in 0..self.n {
                for j in 0..self.n {
                    g[(i, j)] += x[i] * x[j].conj();
                }
            }
        }
        g / Complex64::new(self.len() as f64, 0.0)
    }

    /// Closed form `A = G^{1/2}` of an `L^2` body.
    pub fn ellipsoid_form(&self) -> Result<CMatrix> {
        if self.p != 2.0 {
            return Err(Error::InvalidParameter(format!("ellipsoid form needs p = 2, got {}", self.p)));
        }
        Ok(linalg::psd_sqrt(&self.gram()))
    }

    /// Body of `P f` for an orthogonal projection `P`.
    pub fn project(&self, proj: &CMatrix) -> Result<BodyHandle> {
        check_projection(proj, self.n)?;
        self.transform(proj)
    }

    /// Body of `M f` for an arbitrary `m x n` matrix.
    pub fn transform(&self, m: &CMatrix) -> Result<BodyHandle> {
        if m.ncols() != self.n {
            return Err(Error::ShapeMismatch(format!("matrix has {} columns, n = {}", m.ncols(), self.n)));
        }
        let mut values = Vec::with_capacity(self.len() * m.nrows());
        for k in 0..self.len() {
            values.extend(linalg::matvec(m, self.value(k)));
        }
        Ok(BodyHandle { grid: self.grid, n: m.nrows(), p: self.p, cells: self.cells.clone(), values })
    }

    /// Body of `lambda f`.
    pub fn scaled(&self, lambda: Complex64) -> BodyHandle {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= lambda);
        out
    }

    /// Orthonormal basis (columns) of the span of the values of `f` on the
    /// region; directions whose support falls below `1e-12` of the largest
    /// count as absent.
    pub fn span_basis(&self) -> CMatrix {
        let (vals, vecs) = linalg::hermitian_eigen(&self.gram());
        // measure each eigendirection directly; eigenvalues lose half the digits
        let sizes: Vec<f64> = (0..vals.len())
            .map(|i| {
                let v: Vec<Complex64> = vecs.column(i).iter().copied().collect();
                let dv = self.dot_values(&v);
                lp_average_of(dv.iter().map(|z| z.norm()), dv.len(), 2.0)
            })
            .collect();
        let top = sizes.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| top > 0.0 && sizes[i] > 1e-12 * top).collect();
        let mut basis = CMatrix::zeros(self.n, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            basis.set_column(c, &vecs.column(i));
        }
        basis
    }

    pub fn rank(&self) -> usize {
        self.span_basis().ncols()
    }
}

/// `phi` with `||phi||_{p'} <= 1` and `avg F conj(phi) = ||F||_p`.
fn dual_extremizer(dv: &[Complex64], p: f64) -> Vec<Complex64> {
    let unit = |z: &Complex64| if z.norm() > 0.0 { z / z.norm() } else { linalg::czero() };
    if p == 1.0 {
        return dv.iter().map(unit).collect();
    }
    if p.is_infinite() {
        // mass on the cells attaining the max, normalized in L^1 average
        let m = dv.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let hits: Vec<bool> = dv.iter().map(|z| m > 0.0 && z.norm() >= m * (1.0 - 1e-14)).collect();
        let count = hits.iter().filter(|&&h| h).count().max(1) as f64;
        let scale = dv.len() as f64 / count;
        return dv.iter().zip(&hits).map(|(z, &h)| if h { unit(z) * scale } else { linalg::czero() }).collect();
    }
    let norm = lp_average_of(dv.iter().map(|z| z.norm()), dv.len(), p);
    if norm == 0.0 {
        return vec![linalg::czero(); dv.len()];
    }
    dv.iter().map(|z| unit(z) * (z.norm() / norm).powf(p - 1.0)).collect()
}

pub fn check_projection(proj: &CMatrix, n: usize) -> Result<()> {
    if proj.nrows() != n || proj.ncols() != n {
        return Err(Error::ShapeMismatch(format!("projection must be {n} x {n}")));
    }
    let herm = linalg::frobenius(&(proj - proj.adjoint()));
    let idem = linalg::frobenius(&(proj * proj - proj));
    let residual = herm.max(idem);
    if residual > 1e-10 {
        return Err(Error::NotProjection(residual));
    }
    Ok(())
}

/// Disk radius `c` of `K_1 . K_2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiskRadius {
    pub c: f64,
    /// Relative spread between the best and the median restart; zero for
    /// closed forms.
    pub gap_estimate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DotMethod {
    Exact2,
    Alternating,
    Sampling,
}

/// Settings of the iterative and sampled Minkowski dot products.
#[derive(Clone, Copy, Debug)]
pub struct DotOptions {
    pub rounds: usize,
    pub rel_tol: f64,
    pub restarts: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for DotOptions {
    fn default() -> Self {
        Self { rounds: 50, rel_tol: 1e-8, restarts: 8, samples: 10_000, seed: 0 }
    }
}

/// `sup_{a in K1, b in K2} |a . b|`.
pub fn minkowski_dot(b1: &BodyHandle, b2: &BodyHandle, method: DotMethod, opts: &DotOptions) -> Result<DiskRadius> {
    if b1.n != b2.n {
        return Err(Error::ShapeMismatch(format!("bodies live in C^{} and C^{}", b1.n, b2.n)));
    }
    match method {
        DotMethod::Exact2 => {
            let a1 = b1.ellipsoid_form()?;
            let a2 = b2.ellipsoid_form()?;
            Ok(DiskRadius { c: linalg::op_norm(&(a2.adjoint() * a1)), gap_estimate: 0.0 })
        }
        DotMethod::Alternating => Ok(alternating_dot(b1, b2, opts)),
        DotMethod::Sampling => Ok(sampled_dot(b1, b2, opts)),
    }
}

/// Exact closed form for two `L^2` bodies, alternating maximization otherwise.
pub fn default_dot(b1: &BodyHandle, b2: &BodyHandle, opts: &DotOptions) -> Result<DiskRadius> {
    let method = if b1.p == 2.0 && b2.p == 2.0 { DotMethod::Exact2 } else { DotMethod::Alternating };
    minkowski_dot(b1, b2, method, opts)
}

/// Alternating ascent: for fixed `b in K2` the best `a in K1` has
/// `|a . b| = h_{K1}(b)`, and symmetrically. Every iterate is an actual pair
/// of member points, so the value is a certified lower bound.
fn alternating_dot(b1: &BodyHandle, b2: &BodyHandle, opts: &DotOptions) -> DiskRadius {
    let n = b1.n;
    let run = |start: Vec<Complex64>| -> f64 {
        let mut a = match b1.extreme_point(&start) {
            Ok(a) => a,
            Err(_) => return 0.0,
        };
        let mut best = 0.0f64;
        for _ in 0..opts.rounds.max(1) {
            if linalg::vnorm(&a) == 0.0 {
                break;
            }
            let b = b2.extreme_point(&a).expect("same n");
            let val = linalg::vdot(&a, &b).norm();
            let next = if linalg::vnorm(&b) > 0.0 { b1.extreme_point(&b).expect("same n") } else { a.clone() };
            let val2 = linalg::vdot(&next, &b).norm().max(val);
            let done = val2 - best <= opts.rel_tol * val2.max(1e-300);
            best = best.max(val2);
            a = next;
            if done {
                break;
            }
        }
        best
    };
    let mut starts: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect();
    // the principal L^2 directions are good seeds for every p
    let (vals, vecs) = linalg::hermitian_eigen(&b2.gram());
    if let Some(top) = (0..vals.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])) {
        starts.push(vecs.column(top).iter().copied().collect());
    }
    let mut r = rng::seeded(opts.seed);
    while starts.len() < opts.restarts.max(1) + n + 1 {
        starts.push(rng::unit_vector(&mut r, n));
    }
    let mut vals: Vec<f64> = starts.into_par_iter().map(run).collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    let best = *vals.last().unwrap_or(&0.0);
    let median = vals[vals.len() / 2];
    let gap = if best > 0.0 { (best - median) / best } else { 0.0 };
    DiskRadius { c: best, gap_estimate: gap }
}

/// Random dual function on the unit sphere of `L^{p'}` over `len` cells.
pub fn random_dual(r: &mut impl Rng, len: usize, p: f64) -> Vec<Complex64> {
    let pc = conjugate_exponent(p);
    if pc.is_infinite() {
        return (0..len).map(|_| Complex64::from_polar(1.0, r.random::<f64>() * std::f64::consts::TAU)).collect();
    }
    loop {
        let v: Vec<Complex64> = (0..len).map(|_| rng::complex_normal(r)).collect();
        let norm = lp_average_of(v.iter().map(|z| z.norm()), len, pc);
        if norm > 0.0 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Brute-force `max Re(a . v)` over random member points (lower bound of `h_K(v)`).
pub fn sampled_support(body: &BodyHandle, v: &[Complex64], samples: usize, seed: u64) -> f64 {
    let mut r = rng::seeded(seed);
    (0..samples)
        .map(|_| {
            let phi = random_dual(&mut r, body.len(), body.p);
            linalg::vdot(&body.point_from_dual(&phi), v).re
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn sampled_dot(b1: &BodyHandle, b2: &BodyHandle, opts: &DotOptions) -> DiskRadius {
    let chunks = rayon::current_num_threads().max(1) * 4;
    let per = opts.samples.div_ceil(chunks);
    let c = (0..chunks as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::substream(opts.seed, t);
            let mut best = 0.0f64;
            for _ in 0..per {
                let a = b1.point_from_dual(&random_dual(&mut r, b1.len(), b1.p));
                let b = b2.point_from_dual(&random_dual(&mut r, b2.len(), b2.p));
                best = best.max(linalg::vdot(&a, &b).norm());
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    DiskRadius { c, gap_estimate: f64::NAN }
}

/// Support dominance of `inner` by `outer` over the given directions, which
/// for compact convex bodies is inclusion when the directions are dense.
pub fn inclusion_check(inner: &BodyHandle, outer: &BodyHandle, directions: &[Vec<Complex64>]) -> Result<bool> {
    if inner.cells != outer.cells || inner.p != outer.p || inner.n != outer.n {
        return Err(Error::ShapeMismatch("inclusion check needs the same region, exponent and n".into()));
    }
    for v in directions {
        if inner.support(v)? > outer.support(v)? + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `<<1_S f>>` on the region of `body`.
pub fn masked_body(f: &GridFunction, s: &CellMask, body: &BodyHandle) -> Result<BodyHandle> {
    let masked = crate::grid::restrict_mask(f, s);
    BodyHandle::on_cells(&masked, body.cells.clone(), body.p)
}

/// Orthogonal projection onto the span of the body.
pub fn span_projection(body: &BodyHandle) -> CMatrix {
    let v = body.span_basis();
    &v * v.adjoint()
}

/// `count` seeded unit directions in `C^n`.
pub fn random_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut r = rng::seeded(seed);
    (0..count).map(|_| rng::unit_vector(&mut r, n)).collect()
}

/// CSV with the direction components and the support value per row.
pub fn support_profile_csv(body: &BodyHandle, directions: &[Vec<Complex64>]) -> Result<String> {
    let mut out = String::new();
    for i in 0..body.n {
        write!(out, "v{i}_re,v{i}_im,").unwrap();
    }
    out.push_str("support\n");
    for v in directions {
        let h = body.support(v)?;
        for z in v {
            write!(out, "{:.17e},{:.17e},", z.re, z.im).unwrap();
        }
        writeln!(out, "{h:.17e}").unwrap();
    }
    Ok(out)
}

/// Projection onto the listed coordinate axes.
pub fn coordinate_projection(n: usize, keep: &[usize]) -> CMatrix {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j && keep.contains(&i) {
            Complex64::new(1.0, 0.0)
        } else {
            linalg::czero()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_function;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn grid() -> Grid {
        Grid::unit_origin(1, 1.0, 16).unwrap()
    }

    #[test]
    fn constant_e1_support_is_first_modulus() {
        let g = grid();
        let f = GridFunction::constant(g, &[c(1.0), c(0.0)]);
        let q = CubeRegion::new(&[0.5], 0.5);
        for p in [1.0, 2.0, 3.5] {
            let b = BodyHandle::new(&f, &q, p).unwrap();
            let v = [Complex64::new(0.6, 0.3), Complex64::new(-2.0, 1.0)];
            assert!((b.support(&v).unwrap() - v[0].norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn half_split_support() {
        let g = grid();
        let f = GridFunction::from_values(
            g,
            2,
            (0..16).flat_map(|k| if k < 8 { [c(1.0), c(0.0)] } else { [c(0.0), c(1.0)] }).collect(),
        )
        .unwrap();
        let b = BodyHandle::new(&f, &g.whole_box(), 1.0).unwrap();
        assert!((b.support(&[c(1.0), c(0.0)]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn member_points_are_checked() {
        let g = grid();
        let mut r = rng::seeded(3);
        let f = gaussian_function(&mut r, g, 2);
        let b = BodyHandle::new(&f, &g.whole_box(), 2.0).unwrap();
        let one = GridFunction::constant(g, &[c(1.0)]);
        let avg = b.member_point(&one).unwrap();
        let direct: Complex64 = (0..16).map(|k| f.at(k)[1]).sum::<Complex64>() / 16.0;
        assert!((avg[1] - direct).norm() < 1e-14);
        assert_eq!(b.member_point(&GridFunction::zeros(g, 1)).unwrap(), vec![linalg::czero(); 2]);
        let big = GridFunction::constant(g, &[c(1.5)]);
        assert!(matches!(b.member_point(&big), Err(Error::DualNormViolation { .. })));
    }

    #[test]
    fn extreme_point_attains_support() {
        let g = grid();
        let mut r = rng::seeded(4);
        let f = gaussian_function(&mut r, g, 3);
        for p in [1.0, 1.5, 2.0, 4.0] {
            let b = BodyHandle::new(&f, &g.whole_box(), p).unwrap();
            let v = rng::unit_vector(&mut r, 3);
            let a = b.extreme_point(&v).unwrap();
            assert!((linalg::vdot(&a, &v).re - b.support(&v).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipsoid_of_orthonormal_components_is_identity() {
        let g = grid();
        // e1 on the first half, e2 on the second, scaled to unit L^2 averages
        let s = 2f64.sqrt();
        let f = GridFunction::from_values(
            g,
            2,
            (0..16).flat_map(|k| if k < 8 { [c(s), c(0.0)] } else { [c(0.0), c(s)] }).collect(),
        )
        .unwrap();
        let a = BodyHandle::new(&f, &g.whole_box(), 2.0).unwrap().ellipsoid_form().unwrap();
        assert!(linalg::frobenius(&(a - linalg::identity(2))) < 1e-12);
    }

    #[test]
    fn exact2_rejects_other_exponents() {
        let g = grid();
        let f = GridFunction::constant(g, &[c(1.0)]);
        let b1 = BodyHandle::new(&f, &g.whole_box(), 1.0).unwrap();
        let b2 = BodyHandle::new(&f, &g.whole_box(), 2.0).unwrap();
        assert!(minkowski_dot(&b1, &b2, DotMethod::Exact2, &DotOptions::default()).is_err());
    }

    #[test]
    fn e1_bodies_have_unit_dot() {
        let g = grid();
        let f = GridFunction::constant(g, &[c(1.0), c(0.0)]);
        for p in [1.0, 2.0, 3.0] {
            let b = BodyHandle::new(&f, &g.whole_box(), p).unwrap();
            let r = default_dot(&b, &b, &DotOptions::default()).unwrap();
            assert!((r.c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alternating_agrees_with_closed_form_at_p2() {
        let g = grid();
        let mut r = rng::seeded(9);
        let f = gaussian_function(&mut r, g, 2);
        let h = gaussian_function(&mut r, g, 2);
        let b1 = BodyHandle::new(&f, &g.whole_box(), 2.0).unwrap();
        let b2 = BodyHandle::new(&h, &g.whole_box(), 2.0).unwrap();
        let opts = DotOptions::default();
        let exact = minkowski_dot(&b1, &b2, DotMethod::Exact2, &opts).unwrap().c;
        let alt = minkowski_dot(&b1, &b2, DotMethod::Alternating, &opts).unwrap().c;
        assert!(alt <= exact * (1.0 + 1e-12));
        assert!(alt >= exact * (1.0 - 1e-6));
    }

    #[test]
    fn projection_validation() {
        let g = grid();
        let f = GridFunction::constant(g, &[c(1.0), c(2.0)]);
        let b = BodyHandle::new(&f, &g.whole_box(), 2.0).unwrap();
        let mut bad = linalg::identity(2);
        bad[(0, 1)] = c(0.5);
        assert!(matches!(b.project(&bad), Err(Error::NotProjection(_))));
        let zero = b.project(&CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(zero.support(&[c(1.0), c(1.0)]).unwrap(), 0.0);
        assert_eq!(b.rank(), 1);
    }

    #[test]
    fn empty_mask_gives_zero_body() {
        let g = grid();
        let mut r = rng::seeded(1);
        let f = gaussian_function(&mut r, g, 2);
        let full = BodyHandle::new(&f, &g.whole_box(), 1.0).unwrap();
        let none = masked_body(&f, &CellMask::empty(&g), &full).unwrap();
        let dirs = random_directions(2, 20, 5);
        assert!(inclusion_check(&none, &full, &dirs).unwrap());
        assert!(dirs.iter().all(|v| none.support(v).unwrap() == 0.0));
    }

    #[test]
    fn profile_csv_has_header_and_rows() {
        let g = grid();
        let f = GridFunction::constant(g, &[c(1.0)]);
        let b = BodyHandle::new(&f, &g.whole_box(), 2.0).unwrap();
        let csv = support_profile_csv(&b, &random_directions(1, 3, 0)).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("v0_re,v0_im,support"));
    }
}
