//! Built-in validation suite at reduced resolution.
//!
//! Every check is deterministic (seeded draws, fixed rules, ordered
//! reductions) so the report is byte-identical across runs and thread counts.

use crate::anisotropy::{compute_auto, compute_general, compute_parallel, AnisotropyTensor};
use crate::cell_solver::{exchange_tensor_on, solve_cell_on, CellMesh, MeshParams, Slope};
use crate::error::Result;
use crate::gamma_validator::{sweep, ValidatorParams};
use crate::linalg::{sym_eigen, Mat3};
use crate::profiles::{FilmGeometry, Profile, Rect};
use crate::quadrature::{kernel_mass, CellRule, PlaneRule, PlaneRuleParams};
use crate::report::{Check, SelftestReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn check(name: &str, measured: f64, tolerance: f64) -> Check {
    Check { name: name.into(), passed: measured.is_finite() && measured <= tolerance, measured, tolerance }
}

fn slab(a: f64) -> FilmGeometry<f64> {
    FilmGeometry::new(Profile::constant(0.0), Profile::constant(a), Rect::unit_square()).expect("slab")
}

fn parallel(f: Profile<f64>, a: f64) -> FilmGeometry<f64> {
    FilmGeometry::parallel(f, a, Rect::unit_square()).expect("parallel geometry")
}

fn e33() -> Mat3<f64> {
    Mat3::diag([0.0, 0.0, 1.0])
}

fn random_slopes(rng: &mut ChaCha8Rng, k: usize) -> Vec<Slope<f64>> {
    (0..k)
        .map(|_| {
            let mut xi = [[0.0; 2]; 3];
            for v in xi.iter_mut().flatten() {
                *v = rng.gen_range(-2.0..2.0);
            }
            xi
        })
        .collect()
}

fn xi_norm2(xi: &Slope<f64>) -> f64 {
    xi.iter().flatten().map(|v| v * v).sum()
}

/// Worst violation of the structural invariants of one anisotropy tensor;
/// zero when all hold.
pub fn structural_violation(a: &AnisotropyTensor<f64>, x2_independent: bool, swap_symmetric: bool) -> f64 {
    let mut worst = 0.0f64;
    let lowest = sym_eigen(&a.sym).values[0];
    worst = worst.max((-1e-6 - lowest).max(0.0));
    for t in a.terms.iter().take(2) {
        worst = worst.max(((*t - t.transpose()).max_abs() - 2e-3).max(0.0));
    }
    if x2_independent {
        let mixed = a.total[(0, 1)].abs().max(a.total[(1, 2)].abs());
        worst = worst.max((mixed - 1e-3).max(0.0));
    }
    if swap_symmetric {
        worst = worst.max(((a.total[(0, 0)] - a.total[(1, 1)]).abs() - 2e-3).max(0.0));
    }
    worst
}

pub fn run(config_geometry: Option<(&FilmGeometry<f64>, &CellRule, &PlaneRuleParams)>) -> Result<SelftestReport> {
    let mut checks = Vec::new();
    let plane = PlaneRule::<f64>::default();
    let coarse = PlaneRule::<f64>::new(PlaneRuleParams {
        r_cut: 20.0,
        n_rad: 32,
        n_ang: 64,
        arc_density: 2.0,
        ..Default::default()
    })?;

    // flat film
    let flat = compute_general(&slab(1.0), &CellRule::new(2)?, &plane)?;
    checks.push(check("flat_film_oracle", (flat.total - e33()).frobenius(), 1e-3));
    let again = compute_general(&slab(1.0), &CellRule::new(2)?, &plane)?;
    let same = flat.total.0.iter().flatten().zip(again.total.0.iter().flatten()).all(|(a, b)| a.to_bits() == b.to_bits());
    checks.push(check("repeatable_anisotropy", if same { 0.0 } else { 1.0 }, 0.0));

    // parallel against general
    let cell4 = CellRule::new(4)?;
    let mut tensors = Vec::new();
    for (name, f, a) in [("sine2_1d", Profile::sine2_1d(), 0.5), ("sine2_2d", Profile::sine2_2d(), 1.0)] {
        let g = parallel(f, a);
        let p = compute_parallel(&g, &cell4, &coarse)?;
        let q = compute_general(&g, &cell4, &coarse)?;
        checks.push(check(&format!("parallel_vs_general_{name}"), (p.total - q.total).max_abs(), 2e-3));
        tensors.push((name, q));
    }

    // kernel mass
    let mut worst = 0.0f64;
    let mut bound = 0.0f64;
    for eps in [1.0, 0.1, 0.01] {
        for l in [1.0, PI] {
            let m = kernel_mass(eps, l, &plane)?;
            let exact = 2.0 * PI * eps * l;
            worst = worst.max((m - exact).abs() / exact);
            bound = bound.max(m - PI * PI * eps * l);
        }
    }
    checks.push(check("kernel_mass", worst, 1e-3));
    checks.push(check("kernel_mass_bound", bound.max(0.0), 0.0));

    // cell problem
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    let small = MeshParams { n_h: 8, n_v: 4, ..Default::default() };
    let mut worst = 0.0f64;
    for (xi, a) in random_slopes(&mut rng, 10).iter().zip([0.3, 0.5, 1.0, 2.0].iter().cycle()) {
        let mesh = CellMesh::new(&slab(*a), &small)?;
        let s = solve_cell_on(&mesh, *xi)?;
        let exact = xi_norm2(xi) * a;
        let phi = s.phi.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max((s.energy - exact).abs() / exact).max(phi);
    }
    checks.push(check("slab_exactness", worst, 1e-10));

    let rough = parallel(Profile::sine2_2d(), 0.8);
    let mesh = CellMesh::new(&rough, &small)?;
    let g = exchange_tensor_on(&mesh)?;
    let (mut hom, mut rec) = (0.0f64, 0.0f64);
    for xi in random_slopes(&mut rng, 10) {
        let s = solve_cell_on(&mesh, xi)?;
        rec = rec.max((s.energy - g.energy(&xi)).abs() / (1.0 + xi_norm2(&xi)));
        for lam in [-2.0, 0.5, 3.0] {
            let sl = solve_cell_on(&mesh, xi.map(|r| r.map(|v| lam * v)))?;
            hom = hom.max((sl.energy - lam * lam * s.energy).abs() / (lam * lam * s.energy));
        }
    }
    checks.push(check("homogeneity", hom, 1e-8));
    checks.push(check("reconstruction", rec, 1e-6));

    // both columns orthogonal to s = (0.6, 0, 0.8)
    let s_dir = [0.6, 0.0, 0.8];
    let xi = [[0.8, -0.4], [1.3, 0.7], [-0.6, 0.3]];
    let sol = solve_cell_on(&mesh, xi)?;
    let along = sol.phi.iter().fold(0.0f64, |m, p| m.max((p[0] * s_dir[0] + p[1] * s_dir[1] + p[2] * s_dir[2]).abs()));
    checks.push(check("null_direction", along, 1e-8));

    // finite-ε sweeps
    let vp = ValidatorParams::default();
    let flat_target = AnisotropyTensor::from_total(e33(), vec![], flat.formula);
    let sw = sweep(&slab(1.0), [0.0, 0.0, 1.0], &[0.25, 0.125, 0.0625, 0.03125], &vp, &flat_target)?;
    let increases = sw.records.windows(2).filter(|w| w[1].abs_error >= w[0].abs_error).count();
    checks.push(check("gamma_flat_monotone", increases as f64, 0.0));
    let extrap = sw.extrapolated.unwrap_or(f64::NAN);
    checks.push(check("gamma_flat_extrapolated", (extrap - 1.0).abs(), 0.02));
    let bench = parallel(Profile::sine2_1d(), 0.5);
    let target = compute_parallel(&bench, &CellRule::new(8)?, &plane)?;
    for (name, m) in [("e1", [1.0, 0.0, 0.0]), ("e3", [0.0, 0.0, 1.0])] {
        let sw = sweep(&bench, m, &[0.125, 0.0625, 0.03125], &vp, &target)?;
        let increases = sw.records.windows(2).filter(|w| w[1].abs_error >= w[0].abs_error).count();
        checks.push(check(&format!("gamma_sine2_1d_{name}_monotone"), increases as f64, 0.0));
    }

    // structural invariants
    tensors.push(("sine2_1d_target", target));
    tensors.push(("flat", flat));
    for (name, t) in &tensors {
        let x2_independent = !name.starts_with("sine2_2d");
        checks.push(check(&format!("structure_{name}"), structural_violation(t, x2_independent, !x2_independent), 0.0));
    }

    if let Some((geom, cell, rule)) = config_geometry {
        let a = compute_auto(geom, cell, &PlaneRule::new(*rule)?)?;
        checks.push(check("structure_config_geometry", structural_violation(&a, false, false), 0.0));
    }

    Ok(SelftestReport { passed: checks.iter().all(|c| c.passed), checks })
}
