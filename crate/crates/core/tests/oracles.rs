use cbd_core::domination::{calibrate_theta, calibration_battery, DominationConfig, DEFAULT_THETA};
use cbd_core::grid::{Grid, GridFunction};
use cbd_core::kernels::{commutator, kernel_value, t_omega, KernelSpec, KernelTable, OmegaSpec};
use cbd_core::rng;
use num_complex::Complex64;

/// `Σ_y Σ_{μ<s≤ν} K_s(x_c, y_c) f(y) vol` straight from the pointwise kernel.
fn direct_apply(spec: &KernelSpec, f: &GridFunction, weight: impl Fn(usize, usize) -> Complex64) -> Vec<Complex64> {
    let g = f.grid;
    let d = g.dim();
    (0..g.num_cells())
        .map(|x| {
            let xc = g.cell_center(x);
            (0..g.num_cells())
                .map(|y| {
                    let yc = g.cell_center(y);
                    let k: Complex64 = (spec.mu + 1..=spec.nu).map(|s| kernel_value(spec, &xc[..d], &yc[..d], s)).sum();
                    k * weight(x, y) * f.values[y] * g.cell_volume()
                })
                .sum()
        })
        .collect()
}

#[test]
fn default_theta_is_the_calibrated_value() {
    let theta = calibrate_theta(&calibration_battery(), i32::MIN, &DominationConfig::default(), 32).unwrap();
    assert_eq!(theta, Some(DEFAULT_THETA as u32));
}

#[test]
fn truncated_operator_matches_pointwise_kernel_sums() {
    for (d, n, omega) in [
        (1, 64, OmegaSpec::sign()),
        (1, 32, OmegaSpec::three_bump(1, 2, 2.0).unwrap()),
        (2, 8, OmegaSpec::three_bump(2, 16, 2.0).unwrap()),
    ] {
        let g = Grid::unit_origin(d, 1.0, n).unwrap();
        let spec = KernelSpec::new(omega, -6, 1);
        let table = KernelTable::new(&spec, &g).unwrap();
        let f = rng::gaussian_function(&mut rng::seeded(n as u64), g, 1);
        let got = t_omega(&table, &f).unwrap();
        let want = direct_apply(&spec, &f, |_, _| Complex64::new(1.0, 0.0));
        for (a, b) in got.values.iter().zip(&want) {
            assert!((a - b).norm() <= 1e-11 * (1.0 + b.norm()));
        }
    }
}

#[test]
fn commutator_matches_the_difference_kernel() {
    let g = Grid::unit_origin(1, 1.0, 32).unwrap();
    let spec = KernelSpec::new(OmegaSpec::sign(), -5, 1);
    let table = KernelTable::new(&spec, &g).unwrap();
    let mut r = rng::seeded(11);
    let f = rng::gaussian_function(&mut r, g, 1);
    let b = rng::gaussian_function(&mut r, g, 1);
    let got = commutator(&table, &b, &f).unwrap();
    let want = direct_apply(&spec, &f, |x, y| b.values[y] - b.values[x]);
    for (a, w) in got.values.iter().zip(&want) {
        assert!((a - w).norm() <= 1e-11 * (1.0 + w.norm()));
    }
}

#[test]
fn sign_kernel_on_an_interval_follows_the_logarithm() {
    // away from the truncation edges, T 1_I(x) = ∫_I sign(x - y)/|x - y| dy
    let n = 256;
    let g = Grid::unit_origin(1, 1.0, n).unwrap();
    let table = KernelTable::new(&KernelSpec::new(OmegaSpec::sign(), -7, 1), &g).unwrap();
    let f = GridFunction::from_fn_scalar(g, |x| Complex64::new(if (0.25..0.5).contains(&x[0]) { 1.0 } else { 0.0 }, 0.0));
    let tf = t_omega(&table, &f).unwrap();
    // with the cutoff inactive between 2^-7 and 2^-1 the smooth annuli sum to 1/|z|
    for x in [0.7, 0.75, 0.8] {
        let cell = (x * n as f64) as usize;
        let xc = g.cell_center(cell)[0];
        let riemann: f64 = (0..n)
            .map(|y| {
                let yc = g.cell_center(y)[0];
                if (0.25..0.5).contains(&yc) {
                    1.0 / (xc - yc) / n as f64
                } else {
                    0.0
                }
            })
            .sum();
        let exact = ((xc - 0.25) / (xc - 0.5)).ln();
        assert!((tf.values[cell].re - riemann).abs() <= 1e-10);
        assert!((riemann - exact).abs() <= 1e-3);
    }
}
