//! Smooth annular decomposition `K_s`, truncated, localized and stopping
//! forms, `T_Ω`, its maximal truncation and commutators.
//!
//! `K_s(x, y) = Ω((x-y)/|x-y|) 2^{-sd} φ(2^{-s}(x-y))` with
//! `φ(z) = |z|^{-d} (ψ(|z|) - ψ(2|z|))`, so that the scale sum telescopes to
//! `|z|^{-d} (ψ(2^{-ν}|z|) - ψ(2^{-μ}|z|))`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::omega::OmegaSpec;
use crate::dyadic::{DyadicCube, Lattice, StoppingCollection};
use crate::error::{Error, Result};
use crate::grid::{CellMask, Grid, GridFunction};

/// Identifier of the radial cutoff, embedded in reports.
pub const CUTOFF_ID: &str = "smoothstep-exp/psi-half-one";

fn smooth_h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: `1` on `[0, 1/2]`, `0` on `[1, ∞)`.
pub fn psi(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let t = 2.0 - 2.0 * r;
        let a = smooth_h(t);
        a / (a + smooth_h(1.0 - t))
    }
}

/// `φ(r) = r^{-d} (ψ(r) - ψ(2r))`, supported in `[1/4, 1]`.
pub fn phi(r: f64, d: usize) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    r.powi(-(d as i32)) * (psi(r) - psi(2.0 * r))
}

/// `2^{-sd} φ(2^{-s} r)`, written so that partial sums telescope exactly.
pub fn radial(s: i32, r: f64, d: usize) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let a = 2f64.powi(-s) * r;
    r.powi(-(d as i32)) * (psi(a) - psi(2.0 * a))
}

/// `2 (∫ |φ(ρ)|^q ρ^{d-1} dρ)^{1/q}`: the size constant of the radial
/// profile in `[K]_q <= c_φ ||Ω||_q`.
pub fn phi_constant(d: usize, q: f64) -> f64 {
    let steps = 20_000;
    let (a, b) = (0.25, 1.0);
    let h = (b - a) / steps as f64;
    let f = |r: f64| phi(r, d).abs().powf(q) * r.powi(d as i32 - 1);
    // composite Simpson
    let mut s = f(a) + f(b);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    2.0 * (s * h / 3.0).powf(1.0 / q)
}

/// Angular part plus scale window `(μ, ν]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub omega: OmegaSpec,
    pub mu: i32,
    pub nu: i32,
}

impl KernelSpec {
    pub fn new(omega: OmegaSpec, mu: i32, nu: i32) -> Self {
        Self { omega, mu, nu }
    }

    pub fn adjoint(&self) -> Self {
        Self { omega: self.omega.adjoint(), mu: self.mu, nu: self.nu }
    }

    pub fn d(&self) -> usize {
        self.omega.d
    }
}

/// `K_s(x, y)` at arbitrary points.
pub fn kernel_value(spec: &KernelSpec, x: &[f64], y: &[f64], s: i32) -> Complex64 {
    let d = spec.d();
    let mut z = [0.0; 2];
    for a in 0..d {
        z[a] = x[a] - y[a];
    }
    let r = z[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
    let rad = radial(s, r, d);
    if rad == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    spec.omega.at(z) * rad
}

/// Per-scale kernel tables on the cell offsets of one grid, accumulated
/// over scales so that any window `(a, b]` costs one subtraction.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub grid: Grid,
    pub spec: KernelSpec,
    /// Lowest scale with a nonzero table (`cell scale + 1`).
    s_lo: i32,
    /// Highest scale with a nonzero table.
    s_hi: i32,
    /// `cum[k]` = sum of `K_s` over `s_lo <= s < s_lo + k`.
    cum: Vec<Vec<Complex64>>,
    width: usize,
}

impl KernelTable {
    pub fn new(spec: &KernelSpec, grid: &Grid) -> Result<Self> {
        if spec.d() != grid.dim() {
            return Err(Error::ShapeMismatch(format!("kernel is {}-dimensional, grid {}", spec.d(), grid.dim())));
        }
        let h = grid.cell_side();
        let n = grid.cells_per_side();
        let d = grid.dim();
        let width = 2 * n - 1;
        let count = width.pow(d as u32);
        // K_s vanishes on distinct cells when 2^s <= h and when 2^{s-2} >= the box diameter
        let s_lo = h.log2().floor() as i32 + 1;
        let diam = grid.box_side() * (d as f64).sqrt();
        let s_hi = diam.log2().ceil() as i32 + 2;
        let offsets: Vec<[f64; 2]> = (0..count)
            .map(|k| {
                let (i, j) = if d == 1 { (k, n - 1) } else { (k % width, k / width) };
                [(i as f64 - (n - 1) as f64) * h, (j as f64 - (n - 1) as f64) * h]
            })
            .collect();
        let mut cum = vec![vec![Complex64::new(0.0, 0.0); count]];
        for s in s_lo..=s_hi {
            let prev = cum.last().unwrap();
            let next: Vec<Complex64> = offsets
                .iter()
                .zip(prev)
                .map(|(z, p)| {
                    let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
                    let rad = radial(s, r, d);
                    if rad == 0.0 {
                        *p
                    } else {
                        p + spec.omega.at(*z) * rad
                    }
                })
                .collect();
            cum.push(next);
        }
        Ok(Self { grid: *grid, spec: spec.clone(), s_lo, s_hi, cum, width })
    }

    fn level(&self, s: i32) -> usize {
        // number of scales <= s included
        (s.clamp(self.s_lo - 1, self.s_hi) - (self.s_lo - 1)) as usize
    }

    /// `Σ_{a < s <= b} K_s` at a cell offset index.
    #[inline]
    fn window_at(&self, a: i32, b: i32, off: usize) -> Complex64 {
        if b <= a {
            return Complex64::new(0.0, 0.0);
        }
        self.cum[self.level(b)][off] - self.cum[self.level(a)][off]
    }

    /// Offset index of `x - y` for cells `x`, `y`.
    #[inline]
    fn offset(&self, x: usize, y: usize) -> usize {
        let n = self.grid.cells_per_side();
        let cx = self.grid.cell_coords(x);
        let cy = self.grid.cell_coords(y);
        let i = cx[0] + n - 1 - cy[0];
        if self.grid.dim() == 1 {
            i
        } else {
            i + self.width * (cx[1] + n - 1 - cy[1])
        }
    }

    /// Scale range with nonzero tables.
    pub fn scale_range(&self) -> (i32, i32) {
        (self.s_lo, self.s_hi)
    }

    /// `K_s` at one cell pair.
    pub fn single(&self, s: i32, x: usize, y: usize) -> Complex64 {
        self.window_at(s - 1, s, self.offset(x, y))
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::ShapeMismatch("function lives on another grid".into()));
        }
        Ok(())
    }

    /// `Σ_x Σ_y Σ_{floor(y) < s <= top} K_s(x, y) h1(y) . h2(x) vol²` where
    /// `floor(y) = None` drops the source cell.
    pub fn form_with_floors(
        &self,
        h1: &GridFunction,
        h2: &GridFunction,
        floors: &[Option<i32>],
        top: i32,
    ) -> Result<Complex64> {
        self.check(h1)?;
        self.check(h2)?;
        if h1.n != h2.n {
            return Err(Error::ShapeMismatch(format!("vector dimensions differ ({} vs {})", h1.n, h2.n)));
        }
        let n = h1.n;
        let src: Vec<(usize, i32)> = (0..self.grid.num_cells())
            .filter_map(|y| floors[y].filter(|&fl| fl < top && h1.at(y).iter().any(|z| z.norm_sqr() > 0.0)).map(|fl| (y, fl)))
            .collect();
        let dst: Vec<usize> = (0..self.grid.num_cells()).filter(|&x| h2.at(x).iter().any(|z| z.norm_sqr() > 0.0)).collect();
        let vol = self.grid.cell_volume();
        let total: Complex64 = dst
            .par_iter()
            .map(|&x| {
                let hx = h2.at(x);
                let mut acc = Complex64::new(0.0, 0.0);
                for &(y, fl) in &src {
                    let k = self.window_at(fl, top, self.offset(x, y));
                    if k == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let hy = h1.at(y);
                    let mut dot = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        dot += hy[i] * hx[i].conj();
                    }
                    acc += k * dot;
                }
                acc
            })
            .sum();
        Ok(total * vol * vol)
    }

    /// `Λ_a^b(h1, h2)`.
    pub fn form(&self, h1: &GridFunction, h2: &GridFunction, a: i32, b: i32) -> Result<Complex64> {
        let floors = vec![Some(a); self.grid.num_cells()];
        self.form_with_floors(h1, h2, &floors, b)
    }

    /// `Λ_μ^ν(h1, h2)` for the table's own window.
    pub fn truncated(&self, h1: &GridFunction, h2: &GridFunction) -> Result<Complex64> {
        self.form(h1, h2, self.spec.mu, self.spec.nu)
    }

    /// `Λ_{Q,μ,ν}(h1, h2) = Λ_μ^{min(s_Q, ν)}(h1 1_Q, h2 1_{3Q})`.
    pub fn localized(&self, lattice: &Lattice, q: &DyadicCube, h1: &GridFunction, h2: &GridFunction) -> Result<Complex64> {
        self.localized_window(lattice, q, h1, h2, self.spec.mu, self.spec.nu)
    }

    /// [`Self::localized`] for a sub-window `(a, b]`.
    pub fn localized_window(
        &self,
        lattice: &Lattice,
        q: &DyadicCube,
        h1: &GridFunction,
        h2: &GridFunction,
        a: i32,
        b: i32,
    ) -> Result<Complex64> {
        let inside = lattice.mask(q);
        let triple = mask_of(lattice, &lattice.cells_of_half(&lattice.dilate_half(q, 3)));
        let floors: Vec<Option<i32>> = inside.cells.iter().map(|&c| c.then_some(a)).collect();
        let h2m = crate::grid::restrict_mask(h2, &triple);
        self.form_with_floors(h1, &h2m, &floors, q.scale.min(b))
    }

    /// `Λ_{𝒬,μ,ν}` evaluated in one pass: a source cell in a member
    /// `L ⊂ Q` keeps only the scales `max(μ, min(s_L, ν)) < s <= min(s_Q, ν)`.
    pub fn stopping(&self, lattice: &Lattice, c: &StoppingCollection, h1: &GridFunction, h2: &GridFunction) -> Result<Complex64> {
        let top = c.top.scale.min(self.spec.nu);
        let mut floors: Vec<Option<i32>> =
            lattice.mask(&c.top).cells.iter().map(|&b| b.then_some(self.spec.mu)).collect();
        for l in c.members_inside_top(lattice) {
            let fl = self.spec.mu.max(l.scale.min(self.spec.nu));
            for y in lattice.cells(&l) {
                floors[y] = Some(fl);
            }
        }
        let triple = mask_of(lattice, &lattice.cells_of_half(&lattice.dilate_half(&c.top, 3)));
        let h2m = crate::grid::restrict_mask(h2, &triple);
        self.form_with_floors(h1, &h2m, &floors, top)
    }

    /// `T f(x) = Σ_y Σ_{a < s <= b} K_s(x, y) f(y) vol`, componentwise.
    pub fn apply(&self, f: &GridFunction, a: i32, b: i32) -> Result<GridFunction> {
        self.check(f)?;
        let n = f.n;
        let cells = self.grid.num_cells();
        let src: Vec<usize> = (0..cells).filter(|&y| f.at(y).iter().any(|z| z.norm_sqr() > 0.0)).collect();
        let vol = self.grid.cell_volume();
        let rows: Vec<Vec<Complex64>> = (0..cells)
            .into_par_iter()
            .map(|x| {
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for &y in &src {
                    let k = self.window_at(a, b, self.offset(x, y));
                    if k == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (o, v) in out.iter_mut().zip(f.at(y)) {
                        *o += k * v;
                    }
                }
                out.iter_mut().for_each(|z| *z *= vol);
                out
            })
            .collect();
        Ok(GridFunction { grid: self.grid, n, values: rows.into_iter().flatten().collect() })
    }
}

fn mask_of(lattice: &Lattice, cells: &[usize]) -> CellMask {
    let mut m = CellMask::empty(&lattice.grid);
    for &c in cells {
        m.cells[c] = true;
    }
    m
}

/// `T_Ω f = Σ_{μ < s <= ν} ∫ K_s(·, y) f(y) dy`.
pub fn t_omega(table: &KernelTable, f: &GridFunction) -> Result<GridFunction> {
    table.apply(f, table.spec.mu, table.spec.nu)
}

/// `max_{μ <= σ < ν} |Σ_{σ < s <= ν} ∫ K_s(·, y) f(y) dy|` (Euclidean modulus).
pub fn max_truncation(table: &KernelTable, f: &GridFunction) -> Result<GridFunction> {
    let (mu, nu) = (table.spec.mu, table.spec.nu);
    let cells = table.grid.num_cells();
    let mut best = vec![0.0f64; cells];
    if nu <= mu {
        return Ok(GridFunction { grid: table.grid, n: 1, values: vec![Complex64::new(0.0, 0.0); cells] });
    }
    let mut partial = GridFunction::zeros(table.grid, f.n);
    for sigma in (mu..nu).rev() {
        let piece = table.apply(f, sigma, sigma + 1)?;
        partial = partial.add(&piece)?;
        for (c, b) in best.iter_mut().enumerate() {
            *b = b.max(partial.abs_at(c));
        }
    }
    Ok(GridFunction { grid: table.grid, n: 1, values: best.into_iter().map(|v| Complex64::new(v, 0.0)).collect() })
}

/// `[b, T] f = T(b f) - b T f`.
pub fn commutator(table: &KernelTable, b: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    if b.n != 1 {
        return Err(Error::ShapeMismatch("the symbol b must be scalar".into()));
    }
    let tbf = t_omega(table, &f.mul_scalar_fn(b)?)?;
    let tf = t_omega(table, f)?;
    tbf.sub(&tf.mul_scalar_fn(b)?)
}

/// `[K]_q` with its per-scale table `(s, 2^{sd/q'} sup_x (||K_s(x,.)||_q + ||K_s(.,x)||_q))`.
#[derive(Clone, Debug, Serialize)]
pub struct KqReport {
    pub value: f64,
    pub per_scale: Vec<(i32, f64)>,
}

pub fn kq_constant(table: &KernelTable, q: f64) -> Result<KqReport> {
    if !(q > 1.0) {
        return Err(Error::BadExponent(q));
    }
    let grid = table.grid;
    let d = grid.dim() as f64;
    let vol = grid.cell_volume();
    let qc = if q.is_infinite() { 1.0 } else { q / (q - 1.0) };
    let cells = grid.num_cells();
    let (lo, hi) = table.scale_range();
    let mut per_scale = Vec::new();
    for s in (table.spec.mu + 1).max(lo)..=table.spec.nu.min(hi) {
        let norm = |vals: &mut dyn Iterator<Item = f64>| -> f64 {
            if q.is_infinite() {
                vals.fold(0.0, f64::max)
            } else {
                (vals.map(|v| v.powf(q)).sum::<f64>() * vol).powf(1.0 / q)
            }
        };
        let sup = (0..cells)
            .into_par_iter()
            .map(|x| {
                let row = norm(&mut (0..cells).map(|y| table.single(s, x, y).norm()));
                let col = norm(&mut (0..cells).map(|y| table.single(s, y, x).norm()));
                row + col
            })
            .reduce(|| 0.0, f64::max);
        per_scale.push((s, 2f64.powf(s as f64 * d / qc) * sup));
    }
    let value = per_scale.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(KqReport { value, per_scale })
}

/// Both sides of the scale-by-scale representation of `Λ_{𝒬,μ,ν}(b, h)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Rep1Report {
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    pub gap: f64,
}

/// Pieces `b_L = b 1_L` for members inside the top and the fine-layer rest.
fn pieces(lattice: &Lattice, c: &StoppingCollection, b: &GridFunction) -> Result<(Vec<(DyadicCube, GridFunction)>, GridFunction)> {
    let top = lattice.mask(&c.top);
    let members = c.members_inside_top(lattice);
    let mut covered = CellMask::empty(&lattice.grid);
    let mut out = Vec::new();
    for l in &members {
        let m = lattice.mask(l);
        covered = covered.union(&m);
        out.push((l.clone(), crate::grid::restrict_mask(b, &m)));
    }
    let fine = c.fine_layer.intersection(&top).difference(&covered);
    let allowed = covered.union(&fine);
    let supp = b.support();
    if !supp.is_subset(&top) {
        return Err(Error::NotDecomposable("b is not supported in the top cube".into()));
    }
    if !supp.is_subset(&allowed) {
        return Err(Error::NotDecomposable("b is not supported on the shadow".into()));
    }
    Ok((out, crate::grid::restrict_mask(b, &fine)))
}

/// Left side `Λ_Q(b, h) - Σ_{L ⊂ Q} Λ_L(b, h)` against the right side
/// `Σ_{j >= 1} Σ_{μ < s <= min(s_Q, ν)} ∬ K_s(x, y) b_{s-j}(y) conj(h(x))`.
/// Fine-layer pieces sit below every resolved scale and so enter every `s`.
pub fn rep1_check(
    table: &KernelTable,
    lattice: &Lattice,
    c: &StoppingCollection,
    b: &GridFunction,
    h: &GridFunction,
) -> Result<Rep1Report> {
    let (parts, fine) = pieces(lattice, c, b)?;
    let mut lhs = table.localized(lattice, &c.top, b, h)?;
    for (l, _) in &parts {
        lhs -= table.localized(lattice, l, b, h)?;
    }
    let (mu, nu) = (table.spec.mu, table.spec.nu);
    let top = c.top.scale.min(nu);
    let (s_lo, _) = table.scale_range();
    let mut rhs = Complex64::new(0.0, 0.0);
    for s in (mu + 1).max(s_lo)..=top {
        // b_{s-j} for every j >= 1: members with s_L < s, plus the fine layer
        let mut bs = fine.clone();
        for (l, bl) in &parts {
            if l.scale < s {
                bs = bs.add(bl)?;
            }
        }
        rhs += table.form(&bs, h, s - 1, s)?;
    }
    let gap = (lhs - rhs).norm();
    Ok(Rep1Report { lhs_re: lhs.re, lhs_im: lhs.im, rhs_re: rhs.re, rhs_im: rhs.im, gap })
}

/// Telescoping ledger `Λ_Q = Λ_𝒬 + Σ_{L ⊂ Q} Λ_L`, with `Λ_𝒬` evaluated in
/// one pass and not as the difference. Returns `(Λ_Q, Λ_𝒬, Σ Λ_L, gap)`.
pub fn telescoping_gap(
    table: &KernelTable,
    lattice: &Lattice,
    c: &StoppingCollection,
    h1: &GridFunction,
    h2: &GridFunction,
) -> Result<(Complex64, Complex64, Complex64, f64)> {
    let whole = table.localized(lattice, &c.top, h1, h2)?;
    let stop = table.stopping(lattice, c, h1, h2)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for l in c.members_inside_top(lattice) {
        sum += table.localized(lattice, &l, h1, h2)?;
    }
    Ok((whole, stop, sum, (whole - stop - sum).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_is_a_smooth_step() {
        assert_eq!(psi(0.1), 1.0);
        assert_eq!(psi(0.5), 1.0);
        assert_eq!(psi(1.0), 0.0);
        assert!((psi(0.75) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = psi(0.5 + 0.005 * k as f64);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn radial_support_is_the_annulus() {
        for s in -3..3 {
            let side = 2f64.powi(s);
            assert_eq!(radial(s, side * 0.25, 1), 0.0);
            assert_eq!(radial(s, side, 2), 0.0);
            assert!(radial(s, side * 0.5, 2) > 0.0);
        }
    }

    #[test]
    fn sign_kernel_sums_to_reciprocal() {
        let spec = KernelSpec::new(OmegaSpec::sign(), -12, 12);
        for &(x, y) in &[(0.3, 0.1), (0.0, 0.75), (1.5, -2.0)] {
            let total: Complex64 = (-12..=12).map(|s| kernel_value(&spec, &[x], &[y], s)).sum();
            assert!((total.re - 1.0 / (x - y)).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_window_gives_zero_form() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let spec = KernelSpec::new(OmegaSpec::sign(), 0, 0);
        let t = KernelTable::new(&spec, &g).unwrap();
        let f = GridFunction::constant(g, &[Complex64::new(1.0, 0.0)]);
        assert_eq!(t.truncated(&f, &f).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn constant_symbol_commutes() {
        let g = Grid::unit_origin(1, 1.0, 32).unwrap();
        let spec = KernelSpec::new(OmegaSpec::sign(), -5, 0);
        let t = KernelTable::new(&spec, &g).unwrap();
        let mut r = crate::rng::seeded(1);
        let f = crate::rng::gaussian_function(&mut r, g, 2);
        let b = GridFunction::constant(g, &[Complex64::new(2.0, -1.0)]);
        assert!(commutator(&t, &b, &f).unwrap().max_abs() < 1e-12);
    }
}
