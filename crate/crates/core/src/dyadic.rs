//! Dyadic cubes on the ambient lattice of a grid, stopping collections and
//! sparse collections together with their exact verifiers.
//!
//! The lattice is anchored at the grid box, so every cell is a lattice cube
//! and geometry reduces to integer arithmetic. Dilates are handled in
//! half-cell units, which keeps `λL` exact for every odd `λ` and for
//! `λ = 2, 32`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellMask, CubeRegion, Grid, PrefixSum};

/// Members `L, L'` with scales this far apart need disjoint separation dilates.
pub const SEPARATION_SCALE_GAP: i32 = 8;
/// Dilation used in the separation property.
pub const SEPARATION_DILATION: i64 = 7;
/// Dilation used in the nesting property and in the maximal-cube predicate.
pub const NESTING_DILATION: i64 = 9;
/// Members live inside this dilate of the top cube.
pub const TOP_DILATION: i64 = 3;
/// Nesting is required for members whose `3L` meets this dilate of the top.
pub const NESTING_TOP_DILATION: i64 = 2;
/// The "hat" dilate `2^5 L`.
pub const HAT_DILATION: i64 = 32;

/// Dyadic cube `origin + 2^scale * ([0,1)^d + coords)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    #[serde(rename = "s")]
    pub scale: i32,
    pub coords: Vec<i64>,
}

impl DyadicCube {
    pub fn new(scale: i32, coords: &[i64]) -> Self {
        Self { scale, coords: coords.to_vec() }
    }
}

/// Half-open box in half-cell units, one interval per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfBox {
    pub lo: [i64; 2],
    pub hi: [i64; 2],
    d: usize,
}

impl HalfBox {
    pub fn intersects(&self, other: &HalfBox) -> bool {
        (0..self.d).all(|a| self.lo[a] < other.hi[a] && other.lo[a] < self.hi[a])
    }

    pub fn contains_box(&self, inner: &HalfBox) -> bool {
        (0..self.d).all(|a| self.lo[a] <= inner.lo[a] && inner.hi[a] <= self.hi[a])
    }

    /// Cell index ranges whose centers (`2k + 1` in half units) lie inside,
    /// clipped to `[0, n)`.
    pub fn cell_ranges(&self, n: usize) -> [std::ops::Range<usize>; 2] {
        let mut out = [0..1, 0..1];
        for (a, r) in out.iter_mut().enumerate().take(self.d) {
            // 2k + 1 >= lo  <=>  k >= ceil((lo - 1) / 2);  2k + 1 < hi  <=>  k < ceil((hi - 1) / 2)
            let lo = div_ceil(self.lo[a] - 1, 2).clamp(0, n as i64) as usize;
            let hi = div_ceil(self.hi[a] - 1, 2).clamp(0, n as i64) as usize;
            *r = lo..hi.max(lo);
        }
        out
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// The ambient dyadic lattice of a dyadic grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub grid: Grid,
    cell_scale: i32,
    top_scale: i32,
}

impl Lattice {
    pub fn new(grid: &Grid) -> Result<Self> {
        Ok(Self { grid: *grid, cell_scale: grid.cell_scale()?, top_scale: grid.box_scale()? })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Scale of a single grid cell.
    pub fn cell_scale(&self) -> i32 {
        self.cell_scale
    }

    /// Scale of the whole box.
    pub fn top_scale(&self) -> i32 {
        self.top_scale
    }

    fn check(&self, q: &DyadicCube) -> Result<()> {
        if q.coords.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!("cube has {} coords, d = {}", q.coords.len(), self.dim())));
        }
        if q.scale < self.cell_scale || q.scale > self.top_scale {
            return Err(Error::InvalidParameter(format!(
                "scale {} outside [{}, {}]",
                q.scale, self.cell_scale, self.top_scale
            )));
        }
        let per_axis = 1i64 << (self.top_scale - q.scale);
        if q.coords.iter().any(|&c| c < 0 || c >= per_axis) {
            return Err(Error::InvalidParameter(format!("cube {q:?} lies outside the box")));
        }
        Ok(())
    }

    pub fn is_valid(&self, q: &DyadicCube) -> bool {
        self.check(q).is_ok()
    }

    /// Side length in cells.
    pub fn side_cells(&self, q: &DyadicCube) -> usize {
        1usize << (q.scale - self.cell_scale)
    }

    /// Lower corner in cell indices.
    pub fn cell_lo(&self, q: &DyadicCube) -> [usize; 2] {
        let s = self.side_cells(q) as i64;
        let mut lo = [0usize; 2];
        for (a, c) in q.coords.iter().enumerate() {
            lo[a] = (c * s) as usize;
        }
        lo
    }

    /// `λ`-fold dilate in half-cell units.
    pub fn dilate_half(&self, q: &DyadicCube, lambda: i64) -> HalfBox {
        let s = self.side_cells(q) as i64;
        let lo_cell = self.cell_lo(q);
        let mut hb = HalfBox { lo: [0; 2], hi: [0; 2], d: self.dim() };
        for a in 0..self.dim() {
            let a0 = lo_cell[a] as i64;
            hb.lo[a] = 2 * a0 - (lambda - 1) * s;
            hb.hi[a] = 2 * (a0 + s) + (lambda - 1) * s;
        }
        hb
    }

    /// The box itself in half-cell units.
    pub fn box_half(&self) -> HalfBox {
        let n = 2 * self.grid.cells_per_side() as i64;
        HalfBox { lo: [0, 0], hi: [n, n], d: self.dim() }
    }

    pub fn region(&self, q: &DyadicCube) -> CubeRegion {
        self.dilate(q, 1.0)
    }

    /// Region with the same center and `λ` times the side.
    pub fn dilate(&self, q: &DyadicCube, lambda: f64) -> CubeRegion {
        let side = 2f64.powi(q.scale);
        let origin = self.grid.origin();
        let mut c = [0.0; 2];
        for a in 0..self.dim() {
            c[a] = origin[a] + (q.coords[a] as f64 + 0.5) * side;
        }
        CubeRegion { center: c, side: side * lambda }
    }

    pub fn children(&self, q: &DyadicCube) -> Result<Vec<DyadicCube>> {
        self.check(q)?;
        if q.scale == self.cell_scale {
            return Ok(Vec::new());
        }
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << d);
        for k in 0..(1usize << d) {
            let coords: Vec<i64> = (0..d).map(|a| 2 * q.coords[a] + ((k >> a) & 1) as i64).collect();
            out.push(DyadicCube { scale: q.scale - 1, coords });
        }
        Ok(out)
    }

    pub fn parent(&self, q: &DyadicCube) -> Result<DyadicCube> {
        self.check(q)?;
        if q.scale >= self.top_scale {
            return Err(Error::AboveTopScale);
        }
        Ok(DyadicCube { scale: q.scale + 1, coords: q.coords.iter().map(|c| c.div_euclid(2)).collect() })
    }

    /// Every lattice cube at one scale.
    pub fn cubes_at(&self, scale: i32) -> Vec<DyadicCube> {
        let m = 1i64 << (self.top_scale - scale);
        if self.dim() == 1 {
            (0..m).map(|i| DyadicCube::new(scale, &[i])).collect()
        } else {
            let mut v = Vec::with_capacity((m * m) as usize);
            for j in 0..m {
                for i in 0..m {
                    v.push(DyadicCube::new(scale, &[i, j]));
                }
            }
            v
        }
    }

    /// Cells of the cube.
    pub fn cells(&self, q: &DyadicCube) -> Vec<usize> {
        self.cells_of_half(&self.dilate_half(q, 1))
    }

    pub fn cells_of_half(&self, hb: &HalfBox) -> Vec<usize> {
        let r = hb.cell_ranges(self.grid.cells_per_side());
        let mut out = Vec::new();
        if self.dim() == 1 {
            out.extend(r[0].clone());
        } else {
            for j in r[1].clone() {
                for i in r[0].clone() {
                    out.push(self.grid.cell_index([i, j]));
                }
            }
        }
        out
    }

    pub fn mask(&self, q: &DyadicCube) -> CellMask {
        let mut m = CellMask::empty(&self.grid);
        for c in self.cells(q) {
            m.cells[c] = true;
        }
        m
    }

    /// Lattice cube containing a cell at a given scale.
    pub fn ancestor_of_cell(&self, cell: usize, scale: i32) -> DyadicCube {
        let c = self.grid.cell_coords(cell);
        let s = 1usize << (scale - self.cell_scale);
        let coords: Vec<i64> = (0..self.dim()).map(|a| (c[a] / s) as i64).collect();
        DyadicCube { scale, coords }
    }

    pub fn volume(&self, q: &DyadicCube) -> f64 {
        2f64.powi(q.scale * self.dim() as i32)
    }
}

/// Stopping collection with top `Q`.
///
/// `fine_layer` holds the cells of the stopping set that are covered only by
/// maximal cubes below grid resolution. Those cubes are not listed: every
/// truncated form at a resolved scale vanishes on them. The shadow is
/// `members ∪ fine_layer`.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingCollection {
    pub top: DyadicCube,
    pub members: Vec<DyadicCube>,
    pub fine_layer: CellMask,
}

impl StoppingCollection {
    pub fn empty(lattice: &Lattice, top: DyadicCube) -> Self {
        Self { top, members: Vec::new(), fine_layer: CellMask::empty(&lattice.grid) }
    }

    pub fn from_members(lattice: &Lattice, top: DyadicCube, members: Vec<DyadicCube>) -> Self {
        Self { top, members, fine_layer: CellMask::empty(&lattice.grid) }
    }

    /// Members contained in the top cube itself.
    pub fn members_inside_top(&self, lattice: &Lattice) -> Vec<DyadicCube> {
        let top = lattice.dilate_half(&self.top, 1);
        self.members.iter().filter(|l| top.contains_box(&lattice.dilate_half(l, 1))).cloned().collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "top": self.top,
            "members": self.members,
            "fine_layer": self.fine_layer.indices().collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingViolation {
    /// Two members intersect.
    Overlap { a: DyadicCube, b: DyadicCube },
    /// A member is not contained in `3Q`.
    OutsideTriple { member: DyadicCube },
    /// `|s_L - s_L'| >= 8` but `7L ∩ 7L' ≠ ∅`.
    Separation { a: DyadicCube, b: DyadicCube },
    /// `3L` meets `2Q` but `9L` is not inside the shadow.
    Nesting { member: DyadicCube },
    /// The fine layer meets a member or leaves `3Q`.
    FineLayer { cells: Vec<usize> },
}

#[derive(Clone, Debug, Serialize)]
pub struct StoppingReport {
    pub ok: bool,
    pub violations: Vec<StoppingViolation>,
}

/// Exhaustive check of disjointness, containment in `3Q`, separation and
/// nesting, by exact integer arithmetic.
pub fn verify_stopping(lattice: &Lattice, c: &StoppingCollection) -> Result<StoppingReport> {
    lattice.check(&c.top)?;
    for l in &c.members {
        lattice.check(l)?;
    }
    let mut violations = Vec::new();
    let triple = lattice.dilate_half(&c.top, TOP_DILATION);
    let double = lattice.dilate_half(&c.top, NESTING_TOP_DILATION);
    let bodies: Vec<HalfBox> = c.members.iter().map(|l| lattice.dilate_half(l, 1)).collect();
    let seps: Vec<HalfBox> = c.members.iter().map(|l| lattice.dilate_half(l, SEPARATION_DILATION)).collect();

    for (i, l) in c.members.iter().enumerate() {
        if !triple.contains_box(&bodies[i]) {
            violations.push(StoppingViolation::OutsideTriple { member: l.clone() });
        }
        for j in i + 1..c.members.len() {
            let m = &c.members[j];
            if bodies[i].intersects(&bodies[j]) {
                violations.push(StoppingViolation::Overlap { a: l.clone(), b: m.clone() });
            }
            if (l.scale - m.scale).abs() >= SEPARATION_SCALE_GAP && seps[i].intersects(&seps[j]) {
                violations.push(StoppingViolation::Separation { a: l.clone(), b: m.clone() });
            }
        }
    }

    let sh = shadow(lattice, c);
    let member_cells = members_mask(lattice, &c.members);
    let bad_layer: Vec<usize> = c
        .fine_layer
        .indices()
        .filter(|&k| member_cells.cells[k] || !triple.contains_box(&cell_half(lattice, k)))
        .collect();
    if !bad_layer.is_empty() {
        violations.push(StoppingViolation::FineLayer { cells: bad_layer });
    }

    let whole = lattice.box_half();
    for l in &c.members {
        if !lattice.dilate_half(l, 3).intersects(&double) {
            continue;
        }
        let nine = lattice.dilate_half(l, NESTING_DILATION);
        let inside = whole.contains_box(&nine) && lattice.cells_of_half(&nine).iter().all(|&k| sh.cells[k]);
        if !inside {
            violations.push(StoppingViolation::Nesting { member: l.clone() });
        }
    }
    Ok(StoppingReport { ok: violations.is_empty(), violations })
}

fn cell_half(lattice: &Lattice, cell: usize) -> HalfBox {
    let q = lattice.ancestor_of_cell(cell, lattice.cell_scale());
    lattice.dilate_half(&q, 1)
}

fn members_mask(lattice: &Lattice, members: &[DyadicCube]) -> CellMask {
    let mut m = CellMask::empty(&lattice.grid);
    for l in members {
        for k in lattice.cells(l) {
            m.cells[k] = true;
        }
    }
    m
}

/// Union of the members and the fine layer.
pub fn shadow(lattice: &Lattice, c: &StoppingCollection) -> CellMask {
    members_mask(lattice, &c.members).union(&c.fine_layer)
}

/// Maximal lattice cubes `L` with `9L ⊂ E` (and `9L` inside the box).
/// Maximality: the parent fails the predicate, or `L` is the whole box.
pub fn maximal_cubes(lattice: &Lattice, e: &CellMask) -> Vec<DyadicCube> {
    let grid = &lattice.grid;
    let counts: Vec<f64> = e.cells.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let prefix = PrefixSum::new(grid, &counts);
    let whole = lattice.box_half();
    let n = grid.cells_per_side();
    let pred = |q: &DyadicCube| -> bool {
        let nine = lattice.dilate_half(q, NESTING_DILATION);
        if !whole.contains_box(&nine) {
            return false;
        }
        let r = nine.cell_ranges(n);
        let total: usize = r[..lattice.dim()].iter().map(|r| r.len()).product();
        let hits = prefix.box_sum([r[0].start, r[1].start], [r[0].end, r[1].end]);
        hits.round() as usize == total
    };
    let mut out = Vec::new();
    for scale in (lattice.cell_scale..=lattice.top_scale).rev() {
        for q in lattice.cubes_at(scale) {
            if !pred(&q) {
                continue;
            }
            let parent_ok = scale < lattice.top_scale && pred(&lattice.parent(&q).expect("below top"));
            if !parent_ok {
                out.push(q);
            }
        }
    }
    out
}

/// Pairwise disjoint witness sets `E(Q)` for a list of cubes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseCollection {
    pub cubes: Vec<CubeRegion>,
    pub eta: f64,
    /// Cell indices of `E(Q)` per cube.
    pub witness: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SparseMethod {
    Witness,
    Greedy,
    Exact,
}

#[derive(Clone, Debug, Serialize)]
pub struct SparseReport {
    pub ok: bool,
    pub best_eta: f64,
    pub method: SparseMethod,
    pub witness: Vec<Vec<usize>>,
}

/// Largest instance handed to the exact assignment solver.
pub const EXACT_SPARSE_LIMIT: usize = 12;

fn aligned_cells(grid: &Grid, q: &CubeRegion) -> Result<Vec<usize>> {
    let h = grid.cell_side();
    for a in 0..grid.dim() {
        let lo = (q.lower(a) - grid.origin()[a]) / h;
        let hi = (q.upper(a) - grid.origin()[a]) / h;
        if (lo - lo.round()).abs() > 1e-9 || (hi - hi.round()).abs() > 1e-9 {
            return Err(Error::Unaligned);
        }
    }
    let cells = grid.cells_in(q);
    if cells.is_empty() {
        return Err(Error::DegenerateRegion);
    }
    Ok(cells)
}

/// Achieved `η` of a witness: `min |E(Q)| / |Q ∩ box|`, or `None` when the
/// witness sets are not pairwise disjoint subsets of their cubes.
pub fn witness_eta(cube_cells: &[Vec<usize>], witness: &[Vec<usize>], num_cells: usize) -> Option<f64> {
    if witness.len() != cube_cells.len() {
        return None;
    }
    let mut owner = vec![usize::MAX; num_cells];
    let mut eta = 1.0f64;
    for (j, (cells, w)) in cube_cells.iter().zip(witness).enumerate() {
        let mut inside = vec![false; num_cells];
        for &k in cells {
            inside[k] = true;
        }
        for &k in w {
            if !inside[k] || owner[k] != usize::MAX {
                return None;
            }
            owner[k] = j;
        }
        eta = eta.min(w.len() as f64 / cells.len() as f64);
    }
    Some(if cube_cells.is_empty() { 1.0 } else { eta })
}

impl SparseCollection {
    /// Check the stored witness against the claimed `η`.
    pub fn verify(&self, grid: &Grid) -> Result<SparseReport> {
        let cube_cells = self.cubes.iter().map(|q| aligned_cells(grid, q)).collect::<Result<Vec<_>>>()?;
        let eta = witness_eta(&cube_cells, &self.witness, grid.num_cells()).unwrap_or(0.0);
        Ok(SparseReport {
            ok: eta >= self.eta - 1e-12,
            best_eta: eta,
            method: SparseMethod::Witness,
            witness: self.witness.clone(),
        })
    }
}

/// Greedy witness: smaller cubes first, each keeps its cells that lie in no
/// strictly smaller listed cube and are not yet taken.
pub fn greedy_witness(cube_cells: &[Vec<usize>], num_cells: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..cube_cells.len()).collect();
    order.sort_by_key(|&j| cube_cells[j].len());
    let mut taken = vec![false; num_cells];
    let mut witness = vec![Vec::new(); cube_cells.len()];
    for &j in &order {
        let size = cube_cells[j].len();
        for &k in &cube_cells[j] {
            if taken[k] {
                continue;
            }
            let in_smaller = cube_cells
                .iter()
                .any(|other| other.len() < size && other.binary_search(&k).is_ok());
            if !in_smaller {
                taken[k] = true;
                witness[j].push(k);
            }
        }
    }
    witness
}

/// Best `η` by exact cell assignment: binary search over the candidate
/// ratios `k / |Q_j|` with a max-flow feasibility test.
pub fn exact_witness(cube_cells: &[Vec<usize>], num_cells: usize) -> (f64, Vec<Vec<usize>>) {
    if cube_cells.is_empty() {
        return (1.0, Vec::new());
    }
    let mut cands: Vec<(usize, usize)> = Vec::new();
    for c in cube_cells {
        for k in 0..=c.len() {
            cands.push((k, c.len()));
        }
    }
    cands.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
    cands.dedup_by(|a, b| a.0 * b.1 == b.0 * a.1);
    // demand for ratio k/m on a cube of size s is ceil(k s / m), in integers
    let demands = |(k, m): (usize, usize)| -> Vec<usize> {
        cube_cells.iter().map(|c| (k * c.len()).div_ceil(m)).collect()
    };
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    let mut best = assign(cube_cells, &demands(cands[0]), num_cells).expect("zero demand is feasible");
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        match assign(cube_cells, &demands(cands[mid]), num_cells) {
            Some(w) => {
                best = w;
                lo = mid;
            }
            None => hi = mid - 1,
        }
    }
    if best.iter().zip(cube_cells).any(|(w, c)| w.len() * cands[lo].1 < cands[lo].0 * c.len()) {
        best = assign(cube_cells, &demands(cands[lo]), num_cells).expect("feasible by search");
    }
    let eta = cands[lo].0 as f64 / cands[lo].1 as f64;
    (eta, best)
}

/// Assign `demand[j]` distinct cells to each cube, or `None`.
fn assign(cube_cells: &[Vec<usize>], demand: &[usize], num_cells: usize) -> Option<Vec<Vec<usize>>> {
    let m = cube_cells.len();
    // nodes: source, cubes, cells, sink
    let src = 0;
    let sink = 1 + m + num_cells;
    let mut flow = MaxFlow::new(sink + 1);
    for j in 0..m {
        flow.add_edge(src, 1 + j, demand[j] as i64);
        for &k in &cube_cells[j] {
            flow.add_edge(1 + j, 1 + m + k, 1);
        }
    }
    for k in 0..num_cells {
        flow.add_edge(1 + m + k, sink, 1);
    }
    let total: usize = demand.iter().sum();
    if flow.run(src, sink) as usize != total {
        return None;
    }
    let mut witness = vec![Vec::new(); m];
    for (j, w) in witness.iter_mut().enumerate() {
        for &e in &flow.adj[1 + j] {
            let edge = &flow.edges[e];
            if edge.to > m && edge.to < sink && edge.cap == 0 && e % 2 == 0 {
                w.push(edge.to - 1 - m);
            }
        }
        w.sort_unstable();
    }
    Some(witness)
}

struct FlowEdge {
    to: usize,
    cap: i64,
}

/// Dinic max-flow.
struct MaxFlow {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl MaxFlow {
    fn new(n: usize) -> Self {
        Self { edges: Vec::new(), adj: vec![Vec::new(); n], level: vec![0; n], iter: vec![0; n] }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(FlowEdge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(FlowEdge { to: from, cap: 0 });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &e in &self.adj[v] {
                let to = self.edges[e].to;
                if self.edges[e].cap > 0 && self.level[to] < 0 {
                    self.level[to] = self.level[v] + 1;
                    q.push_back(to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, f: i64) -> i64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.adj[v].len() {
            let e = self.adj[v][self.iter[v]];
            let to = self.edges[e].to;
            if self.edges[e].cap > 0 && self.level[v] < self.level[to] {
                let pushed = self.dfs(to, t, f.min(self.edges[e].cap));
                if pushed > 0 {
                    self.edges[e].cap -= pushed;
                    self.edges[e ^ 1].cap += pushed;
                    return pushed;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    fn run(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

/// Sparseness of a list of grid-aligned cubes: the greedy witness, improved
/// by exact assignment on instances of at most [`EXACT_SPARSE_LIMIT`] cubes.
/// `best_eta` is relative to `|Q ∩ box|`.
pub fn verify_sparse(grid: &Grid, cubes: &[CubeRegion], eta: f64) -> Result<SparseReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    let mut cube_cells = cubes.iter().map(|q| aligned_cells(grid, q)).collect::<Result<Vec<_>>>()?;
    for c in &mut cube_cells {
        c.sort_unstable();
    }
    let greedy = greedy_witness(&cube_cells, grid.num_cells());
    let greedy_eta = witness_eta(&cube_cells, &greedy, grid.num_cells()).expect("greedy is disjoint");
    let (best_eta, witness, method) = if greedy_eta >= eta - 1e-12 || cubes.len() > EXACT_SPARSE_LIMIT {
        (greedy_eta, greedy, SparseMethod::Greedy)
    } else {
        let (e, w) = exact_witness(&cube_cells, grid.num_cells());
        if e > greedy_eta {
            (e, w, SparseMethod::Exact)
        } else {
            (greedy_eta, greedy, SparseMethod::Greedy)
        }
    };
    Ok(SparseReport { ok: best_eta >= eta - 1e-12, best_eta, method, witness })
}

/// Best achievable `η` (exact on small instances, greedy otherwise).
pub fn best_sparse_eta(grid: &Grid, cubes: &[CubeRegion]) -> Result<f64> {
    let mut cube_cells = cubes.iter().map(|q| aligned_cells(grid, q)).collect::<Result<Vec<_>>>()?;
    for c in &mut cube_cells {
        c.sort_unstable();
    }
    let greedy = greedy_witness(&cube_cells, grid.num_cells());
    let g = witness_eta(&cube_cells, &greedy, grid.num_cells()).expect("greedy is disjoint");
    if cubes.len() <= EXACT_SPARSE_LIMIT {
        Ok(exact_witness(&cube_cells, grid.num_cells()).0.max(g))
    } else {
        Ok(g)
    }
}

/// Greedy-only `η`, exposed for cross-checks against the exact solver.
pub fn greedy_sparse_eta(grid: &Grid, cubes: &[CubeRegion]) -> Result<f64> {
    let mut cube_cells = cubes.iter().map(|q| aligned_cells(grid, q)).collect::<Result<Vec<_>>>()?;
    for c in &mut cube_cells {
        c.sort_unstable();
    }
    let greedy = greedy_witness(&cube_cells, grid.num_cells());
    Ok(witness_eta(&cube_cells, &greedy, grid.num_cells()).expect("greedy is disjoint"))
}

/// JSON list of `{s, coords}`.
pub fn cubes_to_json(cubes: &[DyadicCube]) -> serde_json::Value {
    serde_json::to_value(cubes).expect("cubes serialize")
}

pub fn cubes_from_json(v: &serde_json::Value) -> Result<Vec<DyadicCube>> {
    Ok(serde_json::from_value(v.clone())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_lattice(d: usize, cells: usize) -> Lattice {
        Lattice::new(&Grid::unit_origin(d, 1.0, cells).unwrap()).unwrap()
    }

    #[test]
    fn children_and_parent_round_trip() {
        let lat = unit_lattice(1, 8);
        let top = DyadicCube::new(0, &[0]);
        let kids = lat.children(&top).unwrap();
        assert_eq!(kids, vec![DyadicCube::new(-1, &[0]), DyadicCube::new(-1, &[1])]);
        assert_eq!(lat.region(&kids[1]), CubeRegion::new(&[0.75], 0.5));
        for k in &kids {
            assert_eq!(lat.parent(k).unwrap(), top);
        }
        assert!(matches!(lat.parent(&top), Err(Error::AboveTopScale)));

        let lat2 = unit_lattice(2, 8);
        let q = DyadicCube::new(-1, &[1, 0]);
        for k in lat2.children(&q).unwrap() {
            assert_eq!(lat2.parent(&k).unwrap(), q);
        }
    }

    #[test]
    fn dilate_by_three() {
        let lat = unit_lattice(1, 8);
        let q = DyadicCube::new(-2, &[1]); // [1/4, 1/2)
        let r = lat.dilate(&q, 3.0);
        assert_eq!(r.center[0], 0.375);
        assert_eq!(r.side, 0.75);
        // half-cell box agrees: [0, 6) cells
        let hb = lat.dilate_half(&q, 3);
        assert_eq!((hb.lo[0], hb.hi[0]), (0, 12));
    }

    #[test]
    fn empty_collection_is_valid() {
        let lat = Lattice::new(&Grid::unit_origin(1, 4.0, 64).unwrap()).unwrap();
        let c = StoppingCollection::empty(&lat, DyadicCube::new(0, &[1]));
        assert!(verify_stopping(&lat, &c).unwrap().ok);
        assert!(shadow(&lat, &c).is_empty());
    }

    #[test]
    fn overlapping_members_are_reported() {
        let lat = Lattice::new(&Grid::unit_origin(1, 4.0, 64).unwrap()).unwrap();
        let top = DyadicCube::new(0, &[1]);
        let a = DyadicCube::new(-2, &[4]);
        let b = DyadicCube::new(-3, &[8]);
        let c = StoppingCollection::from_members(&lat, top, vec![a, b]);
        let rep = verify_stopping(&lat, &c).unwrap();
        assert!(rep.violations.iter().any(|v| matches!(v, StoppingViolation::Overlap { .. })));
    }

    #[test]
    fn pairwise_disjoint_cubes_have_eta_one() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let cubes = [CubeRegion::new(&[0.125], 0.25), CubeRegion::new(&[0.625], 0.25)];
        let rep = verify_sparse(&g, &cubes, 1.0).unwrap();
        assert!(rep.ok);
        assert_eq!(rep.best_eta, 1.0);
    }

    #[test]
    fn nested_chain_has_eta_half() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let cubes = [CubeRegion::new(&[0.5], 1.0), CubeRegion::new(&[0.25], 0.5), CubeRegion::new(&[0.125], 0.25)];
        let rep = verify_sparse(&g, &cubes, 0.5).unwrap();
        assert!(rep.ok);
        assert_eq!(rep.best_eta, 0.5);
        assert!(!verify_sparse(&g, &cubes, 0.51).unwrap().ok);
    }

    #[test]
    fn exact_beats_greedy_on_split_parent() {
        // parent with both children: greedy gives the parent nothing, exact splits
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let cubes = [CubeRegion::new(&[0.5], 1.0), CubeRegion::new(&[0.25], 0.5), CubeRegion::new(&[0.75], 0.5)];
        assert_eq!(greedy_sparse_eta(&g, &cubes).unwrap(), 0.0);
        let rep = verify_sparse(&g, &cubes, 0.5).unwrap();
        assert_eq!(rep.method, SparseMethod::Exact);
        assert_eq!(rep.best_eta, 0.5);
    }

    #[test]
    fn unaligned_cube_is_rejected() {
        let g = Grid::unit_origin(1, 1.0, 16).unwrap();
        let cubes = [CubeRegion::new(&[0.5], 0.3)];
        assert!(matches!(verify_sparse(&g, &cubes, 0.5), Err(Error::Unaligned)));
    }

    #[test]
    fn maximal_cubes_of_whole_and_empty_box() {
        let lat = unit_lattice(1, 64);
        assert!(maximal_cubes(&lat, &CellMask::empty(&lat.grid)).is_empty());
        let all = maximal_cubes(&lat, &CellMask::full(&lat.grid));
        // side s cells fits iff 9s <= 64 and 4s <= lo, lo + 5s <= 64; largest fitting side is 4 cells
        assert!(all.iter().any(|q| lat.side_cells(q) == 4));
        assert!(all.iter().all(|q| lat.side_cells(q) <= 4));
    }

    #[test]
    fn cube_json_round_trip() {
        let cubes = vec![DyadicCube::new(-3, &[2, 5]), DyadicCube::new(0, &[1, 1])];
        let v = cubes_to_json(&cubes);
        assert_eq!(v[0]["s"], -3);
        assert_eq!(cubes_from_json(&v).unwrap(), cubes);
    }
}
