//! One runner per experiment kind. Trials run concurrently on per-trial
//! seed streams and are collected in trial order.

use cbd_core::convexbody::{BodyHandle, DotOptions};
use cbd_core::domination::{self, build_sparse, DominationConfig};
use cbd_core::dyadic::{self, DyadicCube, Lattice};
use cbd_core::grid::{restrict_mask, CubeRegion, GridFunction, MaximalMode};
use cbd_core::johnell::{self, DecomposeOptions};
use cbd_core::kernels::{self, KernelTable};
use cbd_core::rng::{self, SeededRng};
use cbd_core::weights::{self, AtMode};
use cbd_core::Result;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Kind, Resolved};

/// Exact identities are checked against this tolerance.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Sandwich tolerance of the John ellipsoid on its direction net.
pub const SANDWICH_TOL: f64 = 0.02;

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Invariant {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

pub struct Outcome {
    pub table: Table,
    pub summary: Value,
    pub invariants: Vec<Invariant>,
}

fn cell(v: impl ToString) -> String {
    v.to_string()
}

fn trial_seed(r: &Resolved, i: usize) -> u64 {
    r.config.seed.wrapping_add(i as u64)
}

fn trials<T: Send>(r: &Resolved, f: impl Fn(usize, u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..r.config.trials).into_par_iter().map(|i| f(i, trial_seed(r, i))).collect()
}

fn max_of(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, f64::max)
}

/// A lattice cube at least four cells wide, drawn uniformly over scales.
fn random_cube(r: &mut SeededRng, lattice: &Lattice) -> DyadicCube {
    let lo = (lattice.cell_scale() + 2).min(lattice.top_scale());
    let s = r.random_range(lo..=lattice.top_scale());
    let cubes = lattice.cubes_at(s);
    cubes[r.random_range(0..cubes.len())].clone()
}

pub fn run(r: &Resolved) -> Result<Outcome> {
    match r.config.kind {
        Kind::Domination => run_domination(r),
        Kind::Th1 => run_th1(r),
        Kind::John => run_john(r),
        Kind::Weights => run_weights(r),
        Kind::Bochner => run_bochner(r),
        Kind::Norms => run_norms(r),
        Kind::Rep1 => run_rep1(r),
    }
}

fn domination_config(r: &Resolved, seed: u64) -> DominationConfig {
    let p = &r.config.params;
    DominationConfig {
        p1: p.p1.unwrap_or(2.0),
        p2: p.p2.unwrap_or(2.0),
        theta: p.theta.unwrap_or(domination::DEFAULT_THETA),
        theta_check: p.theta_check.unwrap_or(1.0),
        directions: p.directions.unwrap_or(johnell::DEFAULT_NET),
        seed,
        ..DominationConfig::default()
    }
}

fn run_domination(r: &Resolved) -> Result<Outcome> {
    let table = KernelTable::new(&r.spec, &r.grid)?;
    let p = &r.config.params;
    let results = trials(r, |_, seed| {
        let (f, g) = domination::spiked_pair(r.grid, r.config.components, seed);
        let res = build_sparse(&f, &g, None, &table, &domination_config(r, seed))?;
        let comm = match (p.gamma, p.beta) {
            (Some(gamma), Some(beta)) => {
                let b = rng::gaussian_function(&mut rng::substream(seed, 1), r.grid, 1);
                let osc = p.oscillation.unwrap_or_default();
                Some(domination::commutator_sparse_form(&res.sparse.cubes, &b, &f, &g, gamma, beta, osc)?)
            }
            _ => None,
        };
        Ok((seed, res, comm))
    })?;
    let mut rows = Vec::new();
    let mut per_trial = Vec::new();
    for (i, (seed, res, comm)) in results.iter().enumerate() {
        rows.push(vec![
            cell(i),
            cell(seed),
            cell(res.depth),
            cell(res.termination_bound),
            cell(res.sparse.cubes.len()),
            cell(res.levels.first().map_or(0.0, |l| l.packing_ratio)),
            cell(res.lhs),
            cell(res.rhs),
            cell(res.ratio),
            cell(res.ledger_gap.max(res.global_ledger_gap)),
            cell(res.eta),
            cell(res.sparse_ok),
            cell(res.stopping_ok),
            comm.map(cell).unwrap_or_default(),
        ]);
        per_trial.push(json!({
            "seed": seed,
            "levels": res.levels,
            "lhs": res.lhs,
            "rhs": res.rhs,
            "ratio": res.ratio,
            "ledger_gap": res.ledger_gap.max(res.global_ledger_gap),
            "eta": res.eta,
        }));
    }
    let gap = max_of(results.iter().map(|(_, res, _)| res.ledger_gap.max(res.global_ledger_gap)));
    let deep = results.iter().filter(|(_, res, _)| res.depth as i64 > res.termination_bound).count();
    let unstopped = results.iter().filter(|(_, res, _)| !res.stopping_ok).count();
    let unsparse = results.iter().filter(|(_, res, _)| !(res.sparse_ok && res.eta > 0.0)).count();
    let infinite = results.iter().filter(|(_, res, _)| !res.ratio.is_finite()).count();
    Ok(Outcome {
        table: Table {
            header: vec![
                "trial", "seed", "depth", "termination_bound", "cubes", "root_packing", "lhs", "rhs", "ratio", "ledger_gap", "eta",
                "sparse_ok", "stopping_ok", "commutator_form",
            ],
            rows,
        },
        summary: json!({ "trials": per_trial }),
        invariants: vec![
            Invariant { name: "telescoping_ledger", ok: gap < IDENTITY_TOL, detail: format!("max gap {gap:e}") },
            Invariant { name: "termination", ok: deep == 0, detail: format!("{deep} trials deeper than s_Q0 - mu") },
            Invariant { name: "verify_stopping", ok: unstopped == 0, detail: format!("{unstopped} failing trials") },
            Invariant { name: "verify_sparse", ok: unsparse == 0, detail: format!("{unsparse} failing trials") },
            Invariant { name: "finite_ratio", ok: infinite == 0, detail: format!("{infinite} non-finite ratios") },
        ],
    })
}

fn run_th1(r: &Resolved) -> Result<Outcome> {
    let lattice = Lattice::new(&r.grid)?;
    let p = &r.config.params;
    let (p1, p2) = (p.p1.unwrap_or(2.0), p.p2.unwrap_or(2.0));
    let reports = trials(r, |_, seed| {
        let mut rr = rng::seeded(seed);
        let f = rng::gaussian_function(&mut rr, r.grid, r.config.components);
        let g = rng::gaussian_function(&mut rr, r.grid, r.config.components);
        let q: CubeRegion = lattice.region(&random_cube(&mut rr, &lattice));
        let opts = DecomposeOptions { directions: p.directions.unwrap_or(johnell::DEFAULT_NET), seed, project: true };
        let dec = johnell::decompose(&f, &g, &q, p1, p2, &opts)?;
        let b1 = BodyHandle::on_cells(&f, dec.cells.clone(), p1)?;
        let b2 = BodyHandle::on_cells(&g, dec.cells.clone(), p2)?;
        johnell::th1_check(&dec, &b1, &b2, &DotOptions { seed, ..DotOptions::default() })
    })?;
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, t)| vec![cell(i), cell(trial_seed(r, i)), cell(t.n), cell(t.lhs), cell(t.rhs), cell(t.lhs / t.rhs), cell(t.ok)])
        .collect();
    let bad = reports.iter().filter(|t| !t.ok).count();
    let worst = max_of(reports.iter().map(|t| t.lhs / t.rhs));
    Ok(Outcome {
        table: Table { header: vec!["trial", "seed", "reduced_n", "lhs", "rhs", "ratio", "ok"], rows },
        summary: json!({ "max_ratio": worst, "violations": bad }),
        invariants: vec![Invariant { name: "th1_inequality", ok: bad == 0, detail: format!("{bad} violations, max lhs/rhs {worst}") }],
    })
}

fn run_john(r: &Resolved) -> Result<Outcome> {
    let lattice = Lattice::new(&r.grid)?;
    let p = r.config.params.p.unwrap_or(2.0);
    let directions = r.config.params.directions.unwrap_or(johnell::DEFAULT_NET);
    let results = trials(r, |_, seed| {
        let mut rr = rng::seeded(seed);
        let f = rng::gaussian_function(&mut rr, r.grid, r.config.components);
        let q = random_cube(&mut rr, &lattice);
        let body = BodyHandle::on_cells(&f, lattice.cells(&q), p)?;
        johnell::john_ellipsoid(&body, directions, seed)
    })?;
    let rows = results
        .iter()
        .enumerate()
        .map(|(i, j)| {
            vec![cell(i), cell(trial_seed(r, i)), cell(j.n), cell(j.sandwich), cell(j.inner), cell(j.iterations), cell(j.sandwich_ok(SANDWICH_TOL))]
        })
        .collect();
    let bad = results.iter().filter(|j| !j.sandwich_ok(SANDWICH_TOL)).count();
    let worst = max_of(results.iter().map(|j| j.sandwich / (j.n as f64).sqrt()));
    Ok(Outcome {
        table: Table { header: vec!["trial", "seed", "n", "sandwich", "inner", "iterations", "ok"], rows },
        summary: json!({ "max_sandwich_over_sqrt_n": worst }),
        invariants: vec![Invariant { name: "john_sandwich", ok: bad == 0, detail: format!("{bad} failures, max h/(sqrt(n)|Au|) {worst}") }],
    })
}

fn run_weights(r: &Resolved) -> Result<Outcome> {
    let p = &r.config.params;
    let t = p.t.unwrap_or(2.0);
    let alphas = p.alphas.clone().unwrap_or_default();
    let family = weights::power_family(r.grid, r.config.components, &alphas)?;
    let table = KernelTable::new(&r.spec, &r.grid)?;
    let op = |f: &GridFunction| kernels::t_omega(&table, f);
    let (mode, exponent) = match p.q {
        Some(q) => (AtMode::Mixed { a: weights::mixed_exponent(t, q)? }, weights::exponent_mixed(t, q)),
        None => (AtMode::Classical, weights::exponent_bounded_omega(t)),
    };
    let audit = weights::weighted_bound_audit(&op, &family, t, mode, MaximalMode::AllCubes, exponent, r.config.trials, r.config.seed)?;
    let rows = audit
        .points
        .iter()
        .map(|pt| vec![cell(pt.family_param), cell(pt.weight_constant), cell(pt.observed_ratio), cell(pt.predicted_bound)])
        .collect();
    let below_one = audit.points.iter().filter(|pt| pt.weight_constant < 1.0 - IDENTITY_TOL).count();
    let mut summary = json!({ "exponent": audit.exponent, "c_fit": audit.c_fit, "reference_param": audit.reference_param });
    if let (Some(u), Some(v)) = (p.u, p.v) {
        let grid = r.grid;
        let center: Vec<f64> = grid.origin().iter().map(|o| o + grid.box_side() / 2.0).collect();
        let dist = |c: usize| {
            let x = grid.cell_center(c);
            (0..grid.dim()).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt()
        };
        let a = alphas.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mu: Vec<f64> = (0..grid.num_cells()).map(|c| dist(c).powf(a)).collect();
        let lambda: Vec<f64> = (0..grid.num_cells()).map(|c| dist(c).powf(-a)).collect();
        let b = GridFunction::from_fn_scalar(grid, |x| {
            let d = (0..grid.dim()).map(|k| (x[k] - center[k]).powi(2)).sum::<f64>().sqrt();
            Complex64::new(d.max(grid.cell_side() / 2.0).ln(), 0.0)
        });
        let q = weights::scalar_weight_quantities(&mu, &lambda, u, v, &b, None, MaximalMode::AllCubes)?;
        summary["bloom"] = json!({ "alpha": q.alpha, "n_uv": q.n_uv, "bmo_alpha_nu": q.bmo_alpha_nu, "sharp_max_norm": q.sharp_max_norm });
    }
    Ok(Outcome {
        table: Table { header: vec!["family_param", "weight_constant", "observed_ratio", "predicted_bound"], rows },
        summary,
        invariants: vec![
            Invariant { name: "characteristic_at_least_one", ok: below_one == 0, detail: format!("{below_one} members below 1") },
            Invariant {
                name: "one_sided_audit",
                ok: audit.violations.is_empty(),
                detail: format!("violations at {:?}", audit.violations),
            },
        ],
    })
}

fn run_bochner(r: &Resolved) -> Result<Outcome> {
    let p = &r.config.params;
    let (delta, s) = (p.delta.unwrap_or(0.0), p.s.unwrap_or(1.0));
    let op = kernels::BochnerRiesz::new(&r.grid, delta, None)?;
    let results = trials(r, |_, seed| {
        let mut rr = rng::seeded(seed);
        let f = rng::gaussian_function(&mut rr, r.grid, 1);
        let k = GridFunction::constant(r.grid, &[rng::complex_normal(&mut rr)]);
        let fixed = op.apply(&k)?.sub(&k)?.max_abs() / k.max_abs();
        let grand = kernels::grand_max_truncation(&f, s, delta, None)?;
        let mut shortfall: f64 = 0.0;
        for (q, avg) in kernels::bochner::cube_averages(&op, &f, s)? {
            for c in q.cells(&r.grid) {
                shortfall = shortfall.max(avg - grand.values[c].re);
            }
        }
        Ok((fixed, grand.max_abs(), shortfall))
    })?;
    let rows = results
        .iter()
        .enumerate()
        .map(|(i, (fixed, gmax, short))| vec![cell(i), cell(trial_seed(r, i)), cell(fixed), cell(gmax), cell(short.max(0.0))])
        .collect();
    let fixed = max_of(results.iter().map(|x| x.0));
    let short = max_of(results.iter().map(|x| x.2));
    Ok(Outcome {
        table: Table { header: vec!["trial", "seed", "constant_error", "grand_max", "dominance_shortfall"], rows },
        summary: json!({ "delta": delta, "s": s, "cutoff": op.cutoff }),
        invariants: vec![
            Invariant { name: "fixes_constants", ok: fixed <= 1e-12, detail: format!("max relative error {fixed:e}") },
            Invariant { name: "grand_max_dominance", ok: short <= 0.0, detail: format!("max shortfall {short:e}") },
        ],
    })
}

fn run_norms(r: &Resolved) -> Result<Outcome> {
    let q = r.config.params.q.unwrap_or(2.0);
    let omega = &r.spec.omega;
    let a = kernels::omega_norms(omega, q)?;
    let b = kernels::omega_norms(&omega.adjoint(), q)?;
    let kq = kernels::kq_constant(&KernelTable::new(&r.spec, &r.grid)?, q)?;
    let asym = (a.lq - b.lq)
        .abs()
        .max((a.lorentz_log_bracket - b.lorentz_log_bracket).abs())
        .max((a.lorentz_log_norm - b.lorentz_log_norm).abs());
    let scale = a.lq.max(a.lorentz_log_norm.abs()).max(1.0);
    Ok(Outcome {
        table: Table {
            header: vec!["q", "lq", "lorentz_log_bracket", "lorentz_log_norm", "kq"],
            rows: vec![vec![cell(q), cell(a.lq), cell(a.lorentz_log_bracket), cell(a.lorentz_log_norm), cell(kq.value)]],
        },
        summary: json!({ "norms": { "lq": a.lq, "lorentz_log_bracket": a.lorentz_log_bracket, "lorentz_log_norm": a.lorentz_log_norm }, "kq": kq }),
        invariants: vec![Invariant {
            name: "adjoint_symmetry",
            ok: asym <= 1e-12 * scale,
            detail: format!("max difference {asym:e}"),
        }],
    })
}

fn run_rep1(r: &Resolved) -> Result<Outcome> {
    let lattice = Lattice::new(&r.grid)?;
    let table = KernelTable::new(&r.spec, &r.grid)?;
    let results = trials(r, |_, seed| {
        let (f, g) = domination::spiked_pair(r.grid, r.config.components, seed);
        let top = DyadicCube::new(lattice.top_scale(), &vec![0; lattice.dim()]);
        let cfg = domination_config(r, seed);
        let e = domination::exceptional_set(&f, &g, &lattice, &top, &cfg)?.mask;
        let coll = domination::stopping_from_exceptional(&lattice, &e, &top)?;
        let support = dyadic::shadow(&lattice, &coll).intersection(&lattice.mask(&top));
        let b = restrict_mask(&f, &support);
        let rep = kernels::rep1_check(&table, &lattice, &coll, &b, &g)?;
        let (_, _, _, ledger) = kernels::telescoping_gap(&table, &lattice, &coll, &f, &g)?;
        Ok((coll.members_inside_top(&lattice).len(), coll.fine_layer.count(), rep.gap, ledger))
    })?;
    let rows = results
        .iter()
        .enumerate()
        .map(|(i, (m, fine, rep, led))| vec![cell(i), cell(trial_seed(r, i)), cell(m), cell(fine), cell(rep), cell(led)])
        .collect();
    let rep = max_of(results.iter().map(|x| x.2));
    let led = max_of(results.iter().map(|x| x.3));
    Ok(Outcome {
        table: Table { header: vec!["trial", "seed", "members", "fine_cells", "rep1_gap", "ledger_gap"], rows },
        summary: json!({ "max_rep1_gap": rep, "max_ledger_gap": led }),
        invariants: vec![
            Invariant { name: "scale_representation", ok: rep < IDENTITY_TOL, detail: format!("max gap {rep:e}") },
            Invariant { name: "telescoping_ledger", ok: led < IDENTITY_TOL, detail: format!("max gap {led:e}") },
        ],
    })
}
