//! John ellipsoids of complex-symmetric bodies and the coordinate
//! decomposition `f_i = (R f) . e_i`, `g_i = (R*^{-1} g) . e_i`.
//!
//! The ellipsoid `{A u : |u| <= 1}` with `A` Hermitian maximizes `log det A`
//! subject to `|A u_k| <= h_K(u_k)` on a direction net. The constraints are
//! invariant under phases of `u_k`, so the feasible set describes the
//! complex-symmetric body `{x : |x . u_k| <= h_K(u_k)}` containing `K`, and
//! the solution is its John ellipsoid. It is computed as the polar of the
//! minimum-volume ellipsoid around the points `u_k / h_K(u_k)`, found by a
//! Frank-Wolfe iteration with away steps on the point weights.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::convexbody::{self, BodyHandle, DotOptions};
use crate::error::{Error, Result};
use crate::grid::{lp_average_of, CubeRegion, GridFunction};
use crate::linalg::{self, CMatrix};
use crate::rng;

/// `{A u : |u| <= 1}` with `A` Hermitian positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    pub a: CMatrix,
}

impl Ellipsoid {
    pub fn support(&self, v: &[Complex64]) -> f64 {
        linalg::vnorm(&linalg::matvec(&self.a, v))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n = self.a.nrows();
        let rows: Vec<Vec<[f64; 2]>> =
            (0..n).map(|i| (0..n).map(|j| [self.a[(i, j)].re, self.a[(i, j)].im]).collect()).collect();
        serde_json::json!({ "n": n, "a": rows })
    }
}

/// Ellipsoid with its direction-net certificate.
#[derive(Clone, Debug)]
pub struct JohnResult {
    pub ellipsoid: Ellipsoid,
    /// `max_k h(u_k) / |A u_k|`.
    pub sandwich: f64,
    /// `max_k |A u_k| / h(u_k)`; at most one for inner containment.
    pub inner: f64,
    pub directions: usize,
    pub n: usize,
    /// Weight updates of the enclosing-ellipsoid iteration.
    pub iterations: usize,
}

impl JohnResult {
    /// Whether `|A u| <= h(u) <= sqrt(n) |A u| (1 + tol)` on the net.
    pub fn sandwich_ok(&self, tol: f64) -> bool {
        self.inner <= 1.0 + 1e-9 && self.sandwich <= (self.n as f64).sqrt() * (1.0 + tol)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "ellipsoid": self.ellipsoid.to_json(),
            "sandwich": self.sandwich,
            "inner": self.inner,
            "directions": self.directions,
            "sqrt_n": (self.n as f64).sqrt(),
        })
    }
}

/// Default net size for `n >= 2`.
pub const DEFAULT_NET: usize = 500;
/// Net size for `n = 1` (phases only).
pub const SCALAR_NET: usize = 32;

/// Quasi-uniform direction net: phases for `n = 1`, otherwise the
/// coordinate axes followed by seeded uniform unit vectors.
pub fn direction_net(n: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    if n == 1 {
        return (0..SCALAR_NET)
            .map(|k| vec![Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / SCALAR_NET as f64)])
            .collect();
    }
    let mut out: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect();
    let mut r = rng::seeded(seed);
    while out.len() < count.max(n) {
        out.push(rng::unit_vector(&mut r, n));
    }
    out
}

/// Maximum-volume ellipsoid under `|A u_k| <= h_k`.
///
/// The feasible body is the polar of the circled hull of `p_k = u_k / h_k`,
/// so its John ellipsoid is the polar of that hull's minimum-volume enclosing
/// ellipsoid `{z : z* X^{-1} z <= n}`, `X = Σ w_k p_k p_k*`. The weights come
/// from Frank-Wolfe steps with away steps until every `p_k* X^{-1} p_k` lies
/// within `n (1 ± 1e-10)` on the support of `w`.
pub fn john_from_support(net: &[Vec<Complex64>], h: &[f64]) -> Result<JohnResult> {
    let n = net.first().map(|u| u.len()).ok_or_else(|| Error::InvalidParameter("empty direction net".into()))?;
    if net.len() != h.len() {
        return Err(Error::ShapeMismatch("one support value per direction".into()));
    }
    let hmax = h.iter().cloned().fold(0.0, f64::max);
    if h.iter().any(|&v| !(v > 1e-12 * hmax) || !v.is_finite()) {
        return Err(Error::ProjectFirst);
    }
    let points: Vec<DVector<Complex64>> =
        net.iter().zip(h).map(|(u, &hk)| DVector::from_iterator(n, u.iter().map(|z| z / (hk / hmax)))).collect();
    let m = points.len();
    let nf = n as f64;
    let tol = 1e-10;
    let mut w = vec![1.0 / m as f64; m];
    let mut iterations = 0usize;
    let max_iterations = 200_000;
    let xinv = loop {
        let mut x = CMatrix::zeros(n, n);
        for (p, &wk) in points.iter().zip(&w) {
            if wk > 0.0 {
                x += p * p.adjoint() * Complex64::new(wk, 0.0);
            }
        }
        let xinv = linalg::hermitian_part(&x).try_inverse().ok_or(Error::ProjectFirst)?;
        let g: Vec<f64> = points.iter().map(|p| (p.adjoint() * &xinv * p)[(0, 0)].re).collect();
        let (j, gj) = g.iter().cloned().enumerate().fold((0, f64::NEG_INFINITY), |a, (k, v)| if v > a.1 { (k, v) } else { a });
        let (i, gi) = g
            .iter()
            .cloned()
            .enumerate()
            .filter(|&(k, _)| w[k] > 0.0)
            .fold((0, f64::INFINITY), |a, (k, v)| if v < a.1 { (k, v) } else { a });
        let up = gj / nf - 1.0;
        let down = 1.0 - gi / nf;
        if up.max(down) <= tol || iterations >= max_iterations {
            break xinv * Complex64::new(1.0 / gj, 0.0);
        }
        iterations += 1;
        if up > down {
            let beta = (gj - nf) / (nf * (gj - 1.0));
            for v in w.iter_mut() {
                *v *= 1.0 - beta;
            }
            w[j] += beta;
        } else {
            let beta = ((nf - gi) / (nf * (gi - 1.0))).min(w[i] / (1.0 - w[i]));
            for v in w.iter_mut() {
                *v *= 1.0 + beta;
            }
            w[i] -= beta;
            if w[i] < 1e-300 {
                w[i] = 0.0;
            }
        }
    };
    // |A u_k|^2 = h_k^2 p_k* M p_k with M = X^{-1} / max_k g_k, so every constraint holds
    let a = linalg::psd_sqrt(&linalg::hermitian_part(&xinv)) * Complex64::new(hmax, 0.0);
    Ok(finish(Ellipsoid { a: linalg::hermitian_part(&a) }, net, h, iterations))
}

fn finish(ellipsoid: Ellipsoid, net: &[Vec<Complex64>], h: &[f64], steps: usize) -> JohnResult {
    let mut sandwich: f64 = 0.0;
    let mut inner: f64 = 0.0;
    for (u, &hk) in net.iter().zip(h) {
        let e = ellipsoid.support(u);
        sandwich = sandwich.max(hk / e);
        inner = inner.max(e / hk);
    }
    let n = ellipsoid.a.nrows();
    JohnResult { ellipsoid, sandwich, inner, directions: net.len(), n, iterations: steps }
}

/// John ellipsoid of an `L^p` body on a seeded net of `directions` vectors.
pub fn john_ellipsoid(body: &BodyHandle, directions: usize, seed: u64) -> Result<JohnResult> {
    if body.rank() < body.n {
        return Err(Error::ProjectFirst);
    }
    // spread the net evenly over the body's L^2 shape, so thin axes are sampled
    let whiten = linalg::hermitian_apply(&body.gram(), |x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 });
    let net: Vec<Vec<Complex64>> = direction_net(body.n, directions, seed)
        .into_iter()
        .map(|u| {
            let v = linalg::matvec(&whiten, &u);
            let norm = linalg::vnorm(&v);
            v.into_iter().map(|z| z / norm).collect()
        })
        .collect();
    let h = net.iter().map(|u| body.support(u)).collect::<Result<Vec<_>>>()?;
    john_from_support(&net, &h)
}

/// Settings for [`decompose`].
#[derive(Clone, Copy, Debug)]
pub struct DecomposeOptions {
    pub directions: usize,
    pub seed: u64,
    /// Reduce to the span of the f-body first instead of failing.
    pub project: bool,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { directions: DEFAULT_NET, seed: 0, project: false }
    }
}

/// Coordinates `f_i = (R f') . (U e_i)`, `g_i = (R*^{-1} g') . (U e_i)` on
/// the region, where `f' = V* f`, `g' = V* g` for an orthonormal basis `V`
/// of the span of the f-body (the identity when it has full rank).
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub r: CMatrix,
    pub span: CMatrix,
    pub basis: CMatrix,
    pub f_coords: Vec<GridFunction>,
    pub g_coords: Vec<GridFunction>,
    pub cells: Vec<usize>,
    pub john: JohnResult,
    pub p1: f64,
    pub p2: f64,
}

impl Decomposition {
    /// Dimension after reduction to the span.
    pub fn reduced_n(&self) -> usize {
        self.r.nrows()
    }

    /// Recompute coordinates in the orthonormal basis `U e_i`.
    pub fn with_basis(&self, f: &GridFunction, g: &GridFunction, u: &CMatrix) -> Result<Decomposition> {
        let mut out = self.clone();
        out.basis = u.clone();
        let (fc, gc) = coordinates(f, g, &self.span, &self.r, &self.john.ellipsoid.a, u)?;
        out.f_coords = fc;
        out.g_coords = gc;
        Ok(out)
    }

    /// `||f_i||_{L^{p1}}` and `||g_i||_{L^{p2}}` on the region.
    pub fn coordinate_norms(&self) -> (Vec<f64>, Vec<f64>) {
        let norm = |h: &GridFunction, p: f64| lp_average_of(self.cells.iter().map(|&c| h.values[c].norm()), self.cells.len(), p);
        (
            self.f_coords.iter().map(|h| norm(h, self.p1)).collect(),
            self.g_coords.iter().map(|h| norm(h, self.p2)).collect(),
        )
    }
}

fn coordinates(
    f: &GridFunction,
    g: &GridFunction,
    span: &CMatrix,
    r: &CMatrix,
    a: &CMatrix,
    u: &CMatrix,
) -> Result<(Vec<GridFunction>, Vec<GridFunction>)> {
    let vs = span.adjoint();
    let fmap = u.adjoint() * r * &vs;
    let gmap = u.adjoint() * a * &vs;
    let fr = f.apply_matrix(&fmap)?;
    let gr = g.apply_matrix(&gmap)?;
    let k = fmap.nrows();
    Ok(((0..k).map(|i| fr.component(i)).collect(), (0..k).map(|i| gr.component(i)).collect()))
}

/// Decomposition with `R = A^{-1}` from the John ellipsoid of
/// `<<f>>_{L^{p1}(3Q)}` (the dilate clipped to the box).
pub fn decompose(
    f: &GridFunction,
    g: &GridFunction,
    q: &CubeRegion,
    p1: f64,
    p2: f64,
    opts: &DecomposeOptions,
) -> Result<Decomposition> {
    decompose_on(f, g, f.grid.cells_in(&q.dilate(3.0)), p1, p2, opts)
}

/// [`decompose`] over an explicit cell set.
pub fn decompose_on(
    f: &GridFunction,
    g: &GridFunction,
    cells: Vec<usize>,
    p1: f64,
    p2: f64,
    opts: &DecomposeOptions,
) -> Result<Decomposition> {
    if f.grid != g.grid || f.n != g.n {
        return Err(Error::ShapeMismatch("f and g must share grid and n".into()));
    }
    let body = BodyHandle::on_cells(f, cells.clone(), p1)?;
    let span = body.span_basis();
    if span.ncols() == 0 {
        return Err(Error::NotDecomposable("f vanishes on the region".into()));
    }
    let span = if span.ncols() < f.n {
        if !opts.project {
            return Err(Error::ProjectFirst);
        }
        span
    } else {
        linalg::identity(f.n)
    };
    let reduced = body.transform(&span.adjoint())?;
    let john = john_ellipsoid(&reduced, opts.directions, opts.seed)?;
    let a = john.ellipsoid.a.clone();
    let r = a.clone().try_inverse().ok_or_else(|| Error::Solver("John ellipsoid is singular".into()))?;
    let u = linalg::identity(span.ncols());
    let (fc, gc) = coordinates(f, g, &span, &r, &a, &u)?;
    Ok(Decomposition { r, span, basis: u, f_coords: fc, g_coords: gc, cells, john, p1, p2 })
}

/// Outcome of the `n^{3/2}` coordinate inequality.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Th1Report {
    pub lhs: f64,
    pub rhs: f64,
    pub dot: f64,
    pub n: usize,
    pub slack: f64,
    pub ok: bool,
}

/// Slack covering the lower-bound nature of the iterative dot product.
pub const TH1_SLACK_GENERAL: f64 = 0.05;
/// Slack for the closed-form dot product at `p1 = p2 = 2`.
pub const TH1_SLACK_EXACT: f64 = 1e-9;

/// `sum_i ||f_i|| ||g_i|| <= n^{3/2} <<f>> . <<g>>` with `n` the reduced
/// dimension.
pub fn th1_check(dec: &Decomposition, b1: &BodyHandle, b2: &BodyHandle, opts: &DotOptions) -> Result<Th1Report> {
    let (fnorms, gnorms) = dec.coordinate_norms();
    let lhs: f64 = fnorms.iter().zip(&gnorms).map(|(a, b)| a * b).sum();
    let exact = b1.p == 2.0 && b2.p == 2.0;
    let dot = convexbody::default_dot(b1, b2, opts)?.c;
    let n = dec.reduced_n();
    let rhs = (n as f64).powf(1.5) * dot;
    let slack = if exact { TH1_SLACK_EXACT } else { TH1_SLACK_GENERAL };
    Ok(Th1Report { lhs, rhs, dot, n, slack, ok: lhs <= rhs * (1.0 + slack) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::rng::gaussian_function;

    #[test]
    fn scalar_body_is_a_disk() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let mut r = rng::seeded(2);
        let f = gaussian_function(&mut r, g, 1);
        let b = BodyHandle::new(&f, &g.whole_box(), 1.5).unwrap();
        let j = john_ellipsoid(&b, 0, 0).unwrap();
        let rad = b.support(&[Complex64::new(1.0, 0.0)]).unwrap();
        assert!((j.ellipsoid.a[(0, 0)].re - rad).abs() < 1e-12 * rad);
        assert!(j.sandwich_ok(1e-9));
    }

    #[test]
    fn l2_body_recovers_its_ellipsoid() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let mut r = rng::seeded(5);
        let f = gaussian_function(&mut r, g, 2);
        let b = BodyHandle::new(&f, &g.whole_box(), 2.0).unwrap();
        let exact = b.ellipsoid_form().unwrap();
        let j = john_ellipsoid(&b, DEFAULT_NET, 1).unwrap();
        let rel = linalg::frobenius(&(&j.ellipsoid.a - &exact)) / linalg::frobenius(&exact);
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn degenerate_body_needs_projection() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let f = GridFunction::constant(g, &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        let b = BodyHandle::new(&f, &g.whole_box(), 2.0).unwrap();
        assert!(matches!(john_ellipsoid(&b, 100, 0), Err(Error::ProjectFirst)));
        let q = CubeRegion::new(&[0.5], 0.25);
        assert!(matches!(decompose(&f, &f, &q, 2.0, 2.0, &DecomposeOptions::default()), Err(Error::ProjectFirst)));
        let opts = DecomposeOptions { project: true, ..Default::default() };
        let dec = decompose(&f, &f, &q, 2.0, 2.0, &opts).unwrap();
        assert_eq!(dec.reduced_n(), 1);
    }

    #[test]
    fn scalar_decomposition_normalizes() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let mut r = rng::seeded(8);
        let f = gaussian_function(&mut r, g, 1);
        let h = gaussian_function(&mut r, g, 1);
        let q = CubeRegion::new(&[0.5], 0.25);
        let dec = decompose(&f, &h, &q, 1.0, 2.0, &DecomposeOptions::default()).unwrap();
        let norm = BodyHandle::new(&f, &q.dilate(3.0), 1.0).unwrap().support(&[Complex64::new(1.0, 0.0)]).unwrap();
        assert!((dec.r[(0, 0)].re - 1.0 / norm).abs() < 1e-12 / norm);
        for c in 0..16 {
            assert!((dec.f_coords[0].values[c] - f.values[c] / norm).norm() < 1e-12);
            assert!((dec.g_coords[0].values[c] - h.values[c] * norm).norm() < 1e-12 * norm.max(1.0));
        }
    }

    #[test]
    fn net_has_axes_first() {
        let net = direction_net(3, 10, 0);
        assert_eq!(net.len(), 10);
        assert_eq!(net[1][1], Complex64::new(1.0, 0.0));
        assert_eq!(direction_net(1, 500, 0).len(), SCALAR_NET);
    }
}
