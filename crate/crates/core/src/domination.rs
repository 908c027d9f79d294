//! Exceptional sets, stopping collections and the recursive builder of the
//! sparse collection, together with sparse forms and the commutator forms.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexbody::{self, BodyHandle, DotOptions};
use crate::dyadic::{self, DyadicCube, Lattice, SparseCollection, StoppingCollection};
use crate::error::{Error, Result};
use crate::grid::{lp_average_of, maximal_fn, CellMask, CubeRegion, Grid, GridFunction, MaximalMode};
use crate::johnell::{decompose_on, DecomposeOptions, DEFAULT_NET};
use crate::kernels::forms::{telescoping_gap, KernelTable};

fn default_p() -> f64 {
    2.0
}
fn default_theta() -> f64 {
    DEFAULT_THETA
}
fn default_theta_check() -> f64 {
    1.0
}
fn default_depth() -> usize {
    64
}
fn default_directions() -> usize {
    DEFAULT_NET
}
fn default_windows() -> usize {
    64
}
fn default_restarts() -> usize {
    8
}
fn default_rounds() -> usize {
    50
}
fn default_mode() -> MaximalMode {
    MaximalMode::AllCubes
}

/// Calibrated default for `Θ`: [`calibrate_theta`] on [`calibration_battery`].
pub const DEFAULT_THETA: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominationConfig {
    #[serde(default = "default_p")]
    pub p1: f64,
    #[serde(default = "default_p")]
    pub p2: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Expected packing exponent `ϑ`.
    #[serde(default = "default_theta_check")]
    pub theta_check: f64,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default)]
    pub seed: u64,
    /// Direction net size of the John solver.
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// Scale windows sampled for the left side.
    #[serde(default = "default_windows")]
    pub max_windows: usize,
    #[serde(default = "default_restarts")]
    pub dot_restarts: usize,
    #[serde(default = "default_rounds")]
    pub dot_rounds: usize,
    #[serde(default = "default_mode")]
    pub maximal_mode: MaximalMode,
}

impl Default for DominationConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl DominationConfig {
    fn check(&self) -> Result<()> {
        for p in [self.p1, self.p2] {
            if !(p >= 1.0) || !p.is_finite() {
                return Err(Error::BadExponent(p));
            }
        }
        if !(self.theta > 0.0) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {}", self.theta)));
        }
        Ok(())
    }

    /// `(2^{Θd/4} n)^{1/p}`.
    pub fn threshold(&self, d: usize, n: usize, p: f64) -> f64 {
        (2f64.powf(self.theta * d as f64 / 4.0) * n as f64).powf(1.0 / p)
    }

    pub fn dot_options(&self, seed: u64) -> DotOptions {
        DotOptions { rounds: self.dot_rounds, restarts: self.dot_restarts, seed, ..DotOptions::default() }
    }
}

/// `E_Q` with per-coordinate measures (in cells).
#[derive(Clone, Debug)]
pub struct ExceptionalSet {
    pub mask: CellMask,
    pub f_counts: Vec<usize>,
    pub g_counts: Vec<usize>,
    /// Dimension after reduction to the span of the f-body.
    pub reduced_n: usize,
    pub r: Option<crate::linalg::CMatrix>,
}

fn node_seed(seed: u64, q: &DyadicCube) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in std::iter::once(q.scale as i64).chain(q.coords.iter().copied()) {
        h = (h ^ v as u64).wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Cells of `3Q ∩ box`.
pub fn triple_cells(lattice: &Lattice, q: &DyadicCube) -> Vec<usize> {
    lattice.cells_of_half(&lattice.dilate_half(q, 3))
}

/// `E_Q`: cells of `3Q` where some coordinate `f_i^Q` or `g_i^Q` has
/// `M_p(h 1_{3Q}) / ||h||_{L^p(3Q)}` above its threshold. When `f` vanishes
/// on `3Q` the set is empty; coordinates with zero norm contribute nothing.
pub fn exceptional_set(
    f: &GridFunction,
    g: &GridFunction,
    lattice: &Lattice,
    q: &DyadicCube,
    cfg: &DominationConfig,
) -> Result<ExceptionalSet> {
    cfg.check()?;
    let grid = lattice.grid;
    let cells = triple_cells(lattice, q);
    let mut inside = CellMask::empty(&grid);
    for &c in &cells {
        inside.cells[c] = true;
    }
    let opts = DecomposeOptions { directions: cfg.directions, seed: cfg.seed, project: true };
    let dec = match decompose_on(f, g, cells.clone(), cfg.p1, cfg.p2, &opts) {
        Ok(d) => d,
        Err(Error::NotDecomposable(_)) => {
            return Ok(ExceptionalSet { mask: CellMask::empty(&grid), f_counts: vec![], g_counts: vec![], reduced_n: 0, r: None })
        }
        Err(e) => return Err(e),
    };
    let n = dec.reduced_n();
    let d = grid.dim();
    let mut mask = CellMask::empty(&grid);
    let mut level = |h: &GridFunction, p: f64| -> Result<usize> {
        let h = crate::grid::restrict_mask(h, &inside);
        let norm = lp_average_of(cells.iter().map(|&c| h.values[c].norm()), cells.len(), p);
        if norm == 0.0 {
            return Ok(0);
        }
        let tau = cfg.threshold(d, n, p);
        let m = maximal_fn(&h, p, cfg.maximal_mode)?;
        let mut count = 0;
        for &c in &cells {
            if m.values[c].re > tau * norm {
                mask.cells[c] = true;
                count += 1;
            }
        }
        Ok(count)
    };
    let f_counts = dec.f_coords.iter().map(|h| level(h, cfg.p1)).collect::<Result<Vec<_>>>()?;
    let g_counts = dec.g_coords.iter().map(|h| level(h, cfg.p2)).collect::<Result<Vec<_>>>()?;
    Ok(ExceptionalSet { mask, f_counts, g_counts, reduced_n: n, r: Some(dec.r) })
}

/// Maximal cubes `L` with `9L ⊂ E`; the rest of `E` forms the fine layer.
/// The result is verified and a violation is an error.
pub fn stopping_from_exceptional(lattice: &Lattice, e: &CellMask, q: &DyadicCube) -> Result<StoppingCollection> {
    let triple = triple_cells(lattice, q);
    let mut allowed = CellMask::empty(&lattice.grid);
    for c in triple {
        allowed.cells[c] = true;
    }
    if !e.is_subset(&allowed) {
        return Err(Error::InvalidParameter("exceptional set leaves 3Q".into()));
    }
    let members = dyadic::maximal_cubes(lattice, e);
    let mut c = StoppingCollection::from_members(lattice, q.clone(), members);
    let covered = dyadic::shadow(lattice, &c);
    c.fine_layer = e.difference(&covered);
    let report = dyadic::verify_stopping(lattice, &c)?;
    if !report.ok {
        return Err(Error::Verification(serde_json::to_string(&report.violations)?));
    }
    if dyadic::shadow(lattice, &c) != *e {
        return Err(Error::Verification("shadow differs from the exceptional set".into()));
    }
    Ok(c)
}

/// Per-node trace of the recursion.
#[derive(Clone, Debug, Serialize)]
pub struct NodeRecord {
    pub cube: DyadicCube,
    pub level: usize,
    pub reduced_n: usize,
    /// `R_Q` rows as `[re, im]` pairs.
    pub r: Vec<Vec<[f64; 2]>>,
    /// `|E_Q| / |Q|`.
    pub exceptional_fraction: f64,
    pub f_counts: Vec<usize>,
    pub g_counts: Vec<usize>,
    pub members: Vec<DyadicCube>,
    /// Fine-layer cells of the node's stopping collection.
    pub fine_layer: Vec<usize>,
    /// Members inside `Q` that are recursed into.
    pub children: Vec<DyadicCube>,
    /// `Σ_{R ∈ S'(Q)} |R| / |Q|`, fine layer inside `Q` included.
    pub packing: f64,
    /// `-log2(packing) / d`.
    pub theta_emp: f64,
    pub ledger_gap: f64,
    pub stopping_form: [f64; 2],
    /// `<<f>>_{3Q} . <<g>>_{3Q}`.
    pub dot: f64,
    pub dot_gap_estimate: f64,
    /// `|3Q ∩ box|`.
    pub weight: f64,
    /// `1 - |3Q ∩ box| / |3Q|`.
    pub clipping: f64,
    #[serde(skip)]
    witness: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub cubes: Vec<DyadicCube>,
    pub packing_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationResult {
    pub config: DominationConfig,
    pub top: DyadicCube,
    pub mu: i32,
    pub nu: i32,
    pub levels: Vec<LevelSummary>,
    pub nodes: Vec<NodeRecord>,
    pub lhs: f64,
    pub lhs_window: (i32, i32),
    pub rhs: f64,
    pub ratio: f64,
    /// Largest per-node telescoping gap.
    pub ledger_gap: f64,
    /// `|Λ_{Q_0} - Σ_nodes Λ_{𝒬(node)}|`.
    pub global_ledger_gap: f64,
    pub eta: f64,
    pub sparse: SparseCollection,
    pub sparse_ok: bool,
    pub stopping_ok: bool,
    /// Levels below the top that were built.
    pub depth: usize,
    /// `s_{Q_0} - μ`.
    pub termination_bound: i64,
    pub max_clipping: f64,
}

fn process_node(
    table: &KernelTable,
    lattice: &Lattice,
    f: &GridFunction,
    g: &GridFunction,
    q: &DyadicCube,
    level: usize,
    cfg: &DominationConfig,
) -> Result<NodeRecord> {
    let grid = lattice.grid;
    let ex = exceptional_set(f, g, lattice, q, cfg)?;
    let coll = stopping_from_exceptional(lattice, &ex.mask, q)?;
    let (_, stop, _, gap) = telescoping_gap(table, lattice, &coll, f, g)?;
    let q_mask = lattice.mask(q);
    let q_cells = q_mask.count() as f64;
    let inner = coll.members_inside_top(lattice);
    let floor = table.spec.mu.max(lattice.cell_scale());
    let children: Vec<DyadicCube> = inner.iter().filter(|l| l.scale > floor).cloned().collect();
    let taken = dyadic::shadow(lattice, &coll).intersection(&q_mask);
    let packing = taken.count() as f64 / q_cells;
    let witness: Vec<usize> = q_mask.difference(&taken).indices().collect();
    let cells3 = triple_cells(lattice, q);
    let b1 = BodyHandle::on_cells(f, cells3.clone(), cfg.p1)?;
    let b2 = BodyHandle::on_cells(g, cells3.clone(), cfg.p2)?;
    let dot = convexbody::default_dot(&b1, &b2, &cfg.dot_options(node_seed(cfg.seed, q)))?;
    let full3 = 3f64.powi(grid.dim() as i32) * lattice.volume(q);
    let weight = cells3.len() as f64 * grid.cell_volume();
    let r = ex
        .r
        .as_ref()
        .map(|m| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
        .unwrap_or_default();
    Ok(NodeRecord {
        cube: q.clone(),
        level,
        reduced_n: ex.reduced_n,
        r,
        exceptional_fraction: ex.mask.count() as f64 / q_cells,
        f_counts: ex.f_counts,
        g_counts: ex.g_counts,
        members: coll.members.clone(),
        fine_layer: coll.fine_layer.indices().collect(),
        children,
        packing,
        theta_emp: if packing > 0.0 { -packing.log2() / grid.dim() as f64 } else { f64::INFINITY },
        ledger_gap: gap,
        stopping_form: [stop.re, stop.im],
        dot: dot.c,
        dot_gap_estimate: dot.gap_estimate,
        weight,
        clipping: 1.0 - weight / full3,
        witness,
    })
}

/// Windows `(a, b]` with `μ <= a < b <= ν`: all of them when there are at most
/// `max` windows, otherwise `max` seeded random ones.
pub fn scale_windows(mu: i32, nu: i32, max: usize, seed: u64) -> Vec<(i32, i32)> {
    use rand::Rng;
    let mut all = Vec::new();
    for a in mu..nu {
        for b in a + 1..=nu {
            all.push((a, b));
        }
    }
    if all.len() <= max {
        return all;
    }
    let mut r = crate::rng::seeded(seed);
    let mut out = vec![(mu, nu)];
    while out.len() < max {
        out.push(all[r.random_range(0..all.len())]);
    }
    out
}

/// The recursive construction from `Q_0` (default: the whole box).
pub fn build_sparse(
    f: &GridFunction,
    g: &GridFunction,
    top: Option<DyadicCube>,
    table: &KernelTable,
    cfg: &DominationConfig,
) -> Result<DominationResult> {
    cfg.check()?;
    let lattice = Lattice::new(&f.grid)?;
    if f.grid != table.grid || g.grid != f.grid || f.n != g.n {
        return Err(Error::ShapeMismatch("f, g and the kernel table must share the grid and n".into()));
    }
    let top = top.unwrap_or_else(|| DyadicCube::new(lattice.top_scale(), &vec![0; lattice.dim()]));
    if !lattice.is_valid(&top) {
        return Err(Error::InvalidParameter(format!("top cube {top:?} is not a lattice cube")));
    }
    if !f.support().is_subset(&lattice.mask(&top)) {
        return Err(Error::InvalidParameter("f is not supported in the top cube".into()));
    }
    let (mu, nu) = (table.spec.mu, table.spec.nu);
    let mut nodes: Vec<NodeRecord> = Vec::new();
    let mut levels = Vec::new();
    let mut frontier = vec![top.clone()];
    let mut level = 0;
    while !frontier.is_empty() {
        if level > cfg.max_depth {
            return Err(Error::DepthExceeded(cfg.max_depth));
        }
        let recs = frontier
            .par_iter()
            .map(|q| process_node(table, &lattice, f, g, q, level, cfg))
            .collect::<Result<Vec<_>>>()?;
        let vol: f64 = recs.iter().map(|r| lattice.volume(&r.cube)).sum();
        let taken: f64 = recs.iter().map(|r| r.packing * lattice.volume(&r.cube)).sum();
        levels.push(LevelSummary { cubes: frontier.clone(), packing_ratio: taken / vol });
        let mut next: Vec<DyadicCube> = recs.iter().flat_map(|r| r.children.iter().cloned()).collect();
        next.sort();
        nodes.extend(recs);
        frontier = next;
        level += 1;
    }
    let windows = scale_windows(mu, nu, cfg.max_windows, cfg.seed);
    let vals = windows
        .par_iter()
        .map(|&(a, b)| table.localized_window(&lattice, &top, f, g, a, b).map(|z| z.norm()))
        .collect::<Result<Vec<_>>>()?;
    let (lhs, lhs_window) = vals
        .iter()
        .zip(&windows)
        .fold((0.0, (mu, nu)), |acc, (&v, &w)| if v > acc.0 { (v, w) } else { acc });
    let rhs: f64 = nodes.iter().map(|r| r.weight * r.dot).sum();
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let whole = table.localized(&lattice, &top, f, g)?;
    let parts: Complex64 = nodes.iter().map(|r| Complex64::new(r.stopping_form[0], r.stopping_form[1])).sum();
    let cubes: Vec<CubeRegion> = nodes.iter().map(|r| lattice.dilate(&r.cube, 3.0)).collect();
    let witness: Vec<Vec<usize>> = nodes.iter().map(|r| r.witness.clone()).collect();
    // 3^{-d} (1 - 2^{-ϑ_emp d}) per node, and |E(Q)| = (1 - packing) |Q|
    let eta = nodes.iter().map(|r| 3f64.powi(-(f.grid.dim() as i32)) * (1.0 - r.packing)).fold(1.0, f64::min);
    let sparse = SparseCollection { cubes, eta, witness };
    let sparse_ok = eta > 0.0 && sparse.verify(&f.grid)?.ok;
    Ok(DominationResult {
        config: cfg.clone(),
        top: top.clone(),
        mu,
        nu,
        levels,
        ledger_gap: nodes.iter().map(|r| r.ledger_gap).fold(0.0, f64::max),
        max_clipping: nodes.iter().map(|r| r.clipping).fold(0.0, f64::max),
        global_ledger_gap: (whole - parts).norm(),
        nodes,
        lhs,
        lhs_window,
        rhs,
        ratio,
        eta,
        sparse,
        sparse_ok,
        stopping_ok: true,
        depth: level - 1,
        termination_bound: top.scale as i64 - mu as i64,
    })
}

impl DominationResult {
    /// `{config, levels, lhs, rhs, ratio, ledger_gap, eta}` plus the trace.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("result serializes")
    }

    pub const CSV_HEADER: &'static str =
        "seed,depth,termination_bound,nodes,lhs,rhs,ratio,ledger_gap,global_ledger_gap,eta,max_clipping,root_packing";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{},{},{}",
            self.config.seed,
            self.depth,
            self.termination_bound,
            self.nodes.len(),
            self.lhs,
            self.rhs,
            self.ratio,
            self.ledger_gap,
            self.global_ledger_gap,
            self.eta,
            self.max_clipping,
            self.levels.first().map_or(0.0, |l| l.packing_ratio),
        )
    }
}

/// `Σ_Q |Q ∩ box| <<f>>_{L^{p1}(Q)} . <<g>>_{L^{p2}(Q)}`; cubes without
/// cells contribute nothing.
pub fn sparse_form(cubes: &[CubeRegion], f: &GridFunction, g: &GridFunction, p1: f64, p2: f64, opts: &DotOptions) -> Result<f64> {
    let terms = cubes
        .par_iter()
        .map(|q| {
            let cells = f.grid.cells_in(q);
            if cells.is_empty() {
                return Ok(0.0);
            }
            let vol = cells.len() as f64 * f.grid.cell_volume();
            let b1 = BodyHandle::on_cells(f, cells.clone(), p1)?;
            let b2 = BodyHandle::on_cells(g, cells, p2)?;
            Ok(vol * convexbody::default_dot(&b1, &b2, opts)?.c)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// Where the oscillation `|b - <b>_Q|` is placed in the commutator form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationVariable {
    /// Paired with `h1` inside the `γ`-average.
    #[default]
    Y,
    /// Paired with `h2` inside the `β`-average.
    X,
}

/// `Σ_Q |Q| (avg_Q |b - <b>_Q|^γ |h1|^γ)^{1/γ} (avg_Q |h2|^β)^{1/β}` (or
/// the `X` placement).
pub fn commutator_sparse_form(
    cubes: &[CubeRegion],
    b: &GridFunction,
    h1: &GridFunction,
    h2: &GridFunction,
    gamma: f64,
    beta: f64,
    osc: OscillationVariable,
) -> Result<f64> {
    if b.n != 1 {
        return Err(Error::ShapeMismatch("the symbol b must be scalar".into()));
    }
    for p in [gamma, beta] {
        if !(p >= 1.0) {
            return Err(Error::BadExponent(p));
        }
    }
    let grid = b.grid;
    let mut total = 0.0;
    for q in cubes {
        let cells = grid.cells_in(q);
        if cells.is_empty() {
            continue;
        }
        let k = cells.len();
        let avg: Complex64 = cells.iter().map(|&c| b.values[c]).sum::<Complex64>() / k as f64;
        let osc_at = |c: usize| (b.values[c] - avg).norm();
        let (a1, a2) = match osc {
            OscillationVariable::Y => (
                lp_average_of(cells.iter().map(|&c| osc_at(c) * h1.abs_at(c)), k, gamma),
                lp_average_of(cells.iter().map(|&c| h2.abs_at(c)), k, beta),
            ),
            OscillationVariable::X => (
                lp_average_of(cells.iter().map(|&c| h1.abs_at(c)), k, gamma),
                lp_average_of(cells.iter().map(|&c| osc_at(c) * h2.abs_at(c)), k, beta),
            ),
        };
        total += k as f64 * grid.cell_volume() * a1 * a2;
    }
    Ok(total)
}

/// Seeded test pair: complex Gaussian `f` with one to three spikes of
/// amplitude 5 to 50, and a complex Gaussian `g`.
pub fn spiked_pair(grid: Grid, n: usize, seed: u64) -> (GridFunction, GridFunction) {
    use rand::Rng;
    let mut r = crate::rng::seeded(seed);
    let mut f = crate::rng::gaussian_function(&mut r, grid, n);
    let spikes = r.random_range(1..=3);
    for _ in 0..spikes {
        let c = r.random_range(0..grid.num_cells());
        let amp: f64 = r.random_range(5.0..50.0);
        for z in f.at_mut(c) {
            *z *= amp;
        }
    }
    let g = crate::rng::gaussian_function(&mut r, grid, n);
    (f, g)
}

/// Forty spiked pairs: ten each for `d = 1, N = 64` and `d = 2, N = 16`
/// with `n = 1, 2`, seeds from 1000.
pub fn calibration_battery() -> Vec<(GridFunction, GridFunction)> {
    let mut out = Vec::new();
    for (d, cells) in [(1, 64), (2, 16)] {
        let grid = Grid::unit_origin(d, 1.0, cells).expect("valid grid");
        for n in [1, 2] {
            for s in 0..10 {
                out.push(spiked_pair(grid, n, 1000 + s));
            }
        }
    }
    out
}

/// Largest `|E_Q| / |Q|` over every node of the recursion from the whole box,
/// recursing into members at scales above `max(mu, cell scale)`.
pub fn max_exceptional_fraction(f: &GridFunction, g: &GridFunction, mu: i32, cfg: &DominationConfig) -> Result<f64> {
    let lattice = Lattice::new(&f.grid)?;
    let floor = mu.max(lattice.cell_scale());
    let mut frontier = vec![DyadicCube::new(lattice.top_scale(), &vec![0; lattice.dim()])];
    let mut worst: f64 = 0.0;
    let mut level = 0;
    while !frontier.is_empty() {
        if level > cfg.max_depth {
            return Err(Error::DepthExceeded(cfg.max_depth));
        }
        let recs = frontier
            .par_iter()
            .map(|q| -> Result<(f64, Vec<DyadicCube>)> {
                let e = exceptional_set(f, g, &lattice, q, cfg)?;
                let coll = stopping_from_exceptional(&lattice, &e.mask, q)?;
                let frac = e.mask.count() as f64 / lattice.mask(q).count() as f64;
                let kids = coll.members_inside_top(&lattice).into_iter().filter(|l| l.scale > floor).collect();
                Ok((frac, kids))
            })
            .collect::<Result<Vec<_>>>()?;
        frontier = Vec::new();
        for (frac, kids) in recs {
            worst = worst.max(frac);
            frontier.extend(kids);
        }
        frontier.sort();
        level += 1;
    }
    Ok(worst)
}

/// Smallest integer `Θ` in `1..=max_theta` with `|E_Q| <= 2^{-d} |Q|` at
/// every recursion node of every battery pair, or `None`.
pub fn calibrate_theta(
    battery: &[(GridFunction, GridFunction)],
    mu: i32,
    cfg: &DominationConfig,
    max_theta: u32,
) -> Result<Option<u32>> {
    for theta in 1..=max_theta {
        let c = DominationConfig { theta: theta as f64, ..cfg.clone() };
        let mut ok = true;
        for (f, g) in battery {
            let bound = 2f64.powi(-(f.grid.dim() as i32));
            if max_exceptional_fraction(f, g, mu, &c)? > bound {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(theta));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernels::{KernelSpec, OmegaSpec};

    fn setup(n_cells: usize) -> (Grid, Lattice) {
        let g = Grid::unit_origin(1, 1.0, n_cells).unwrap();
        (g, Lattice::new(&g).unwrap())
    }

    #[test]
    fn constants_have_no_exceptional_set() {
        let (g, lat) = setup(32);
        let one = Complex64::new(1.0, 0.0);
        let f = GridFunction::constant(g, &[one, Complex64::new(0.0, 2.0)]);
        let top = DyadicCube::new(0, &[0]);
        let e = exceptional_set(&f, &f, &lat, &top, &DominationConfig::default()).unwrap();
        assert!(e.mask.is_empty());
    }

    #[test]
    fn empty_set_gives_empty_collection() {
        let (g, lat) = setup(32);
        let c = stopping_from_exceptional(&lat, &CellMask::empty(&g), &DyadicCube::new(0, &[0])).unwrap();
        assert!(c.members.is_empty() && c.fine_layer.is_empty());
    }

    #[test]
    fn empty_window_is_a_trivial_pass() {
        let (g, _) = setup(32);
        let spec = KernelSpec::new(OmegaSpec::sign(), -2, -2);
        let t = KernelTable::new(&spec, &g).unwrap();
        let mut r = crate::rng::seeded(3);
        let f = crate::rng::gaussian_function(&mut r, g, 1);
        let res = build_sparse(&f, &f, None, &t, &DominationConfig::default()).unwrap();
        assert_eq!(res.lhs, 0.0);
        assert!(res.rhs >= 0.0);
    }

    #[test]
    fn constant_symbol_has_zero_commutator_form() {
        let (g, _) = setup(16);
        let b = GridFunction::constant(g, &[Complex64::new(3.0, 1.0)]);
        let h = GridFunction::constant(g, &[Complex64::new(1.0, 0.0)]);
        let cubes = vec![g.whole_box(), CubeRegion::new(&[0.25], 0.5)];
        for osc in [OscillationVariable::Y, OscillationVariable::X] {
            assert!(commutator_sparse_form(&cubes, &b, &h, &h, 1.0, 2.0, osc).unwrap() < 1e-15);
        }
    }

    #[test]
    fn windows_are_exhaustive_when_few() {
        assert_eq!(scale_windows(0, 3, 64, 0).len(), 6);
        assert_eq!(scale_windows(-10, 10, 64, 0).len(), 64);
        assert!(scale_windows(2, 2, 64, 0).is_empty());
    }
}
