use proptest::prelude::*;
use roughfilm::anisotropy::{compute_general, AnisotropyTensor, Formula};
use roughfilm::cell_solver::{exchange_tensor_on, solve_cell_on, CellMesh, ExchangeTensor, MeshParams};
use roughfilm::energy::{anisotropy_term, evaluate_e0, exchange_term, EnergyParams, MagnetizationField};
use roughfilm::linalg::{sym_eigen, Mat3};
use roughfilm::profiles::{FilmGeometry, Profile, Rect, SampledGrid};
use roughfilm::quadrature::{integrate_plane, CellRule, PlaneRule, PlaneRuleParams};
use std::f64::consts::PI;
use std::sync::OnceLock;

fn sampled_bump() -> Profile<f64> {
    let grid = SampledGrid::from_fn(64, |p: [f64; 2]| {
        0.3 * (2.0 * PI * p[0]).cos() + 0.2 * (2.0 * PI * (p[0] + 2.0 * p[1])).sin()
    })
    .unwrap();
    Profile::sampled(grid)
}

fn all_kinds() -> Vec<Profile<f64>> {
    vec![Profile::constant(0.7), Profile::sine2_1d(), Profile::sine2_2d(), sampled_bump(), Profile::sine2_2d().shifted(-2.5)]
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [-3.0..3.0f64, -3.0..3.0f64]
}

fn unit() -> impl Strategy<Value = [f64; 3]> {
    [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64]
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / n)
        })
}

proptest! {
    #[test]
    fn profiles_are_unit_periodic(p in point()) {
        for f in all_kinds() {
            let v = f.eval(p);
            prop_assert!((f.eval([p[0] + 1.0, p[1]]) - v).abs() <= 1e-12);
            prop_assert!((f.eval([p[0], p[1] + 1.0]) - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn gradients_match_central_differences(p in point()) {
        let h = 1e-5;
        for f in all_kinds() {
            let g = f.grad(p);
            let fd = [
                (f.eval([p[0] + h, p[1]]) - f.eval([p[0] - h, p[1]])) / (2.0 * h),
                (f.eval([p[0], p[1] + h]) - f.eval([p[0], p[1] - h])) / (2.0 * h),
            ];
            let scale = g[0].hypot(g[1]).max(1.0);
            for c in 0..2 {
                prop_assert!((fd[c] - g[c]).abs() <= 1e-6 * scale, "{:?} at {:?}: {} vs {}", f.kind(), p, fd[c], g[c]);
            }
        }
    }

    #[test]
    fn normals_are_unnormalized(p in point()) {
        for f in all_kinds() {
            let g = f.grad(p);
            prop_assert_eq!(f.normal(p), [-g[0], -g[1], 1.0]);
        }
    }
}

#[test]
fn sampled_profile_tracks_analytic_off_grid() {
    let exact = Profile::<f64>::sine2_2d();
    let grid = SampledGrid::from_fn(64, |p| exact.eval(p)).unwrap();
    let s = Profile::sampled(grid);
    let mut worst = 0.0f64;
    for i in 0..97 {
        for j in 0..89 {
            let p = [(i as f64 + 0.37) / 97.0, (j as f64 + 0.61) / 89.0];
            worst = worst.max((s.eval(p) - exact.eval(p)).abs());
        }
    }
    assert!(worst <= 1e-3, "{worst}");
}

fn coarse_plane() -> &'static PlaneRule<f64> {
    static RULE: OnceLock<PlaneRule<f64>> = OnceLock::new();
    RULE.get_or_init(|| {
        PlaneRule::new(PlaneRuleParams { r_cut: 10.0, n_rad: 16, n_ang: 32, arc_density: 1.0, ..Default::default() }).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plane_integration_is_linear(b1 in 0.05..3.0f64, b2 in 0.05..3.0f64, c1 in -2.0..2.0f64, c2 in -2.0..2.0f64) {
        let rule = coarse_plane();
        let k1 = move |z: [f64; 2], r: f64| 1.0 / r - 1.0 / (r * r + b1 * b1).sqrt() + 0.0 * z[0];
        let k2 = move |z: [f64; 2], r: f64| (1.0 + z[0] * z[1] / (1.0 + r * r)) / (r * r + b2 * b2).powf(1.5);
        let i1 = integrate_plane(rule, |z, r| c1 * k1(z, r)).unwrap();
        let i2 = integrate_plane(rule, |z, r| c2 * k2(z, r)).unwrap();
        let both = integrate_plane(rule, |z, r| c1 * k1(z, r) + c2 * k2(z, r)).unwrap();
        prop_assert!((both - i1 - i2).abs() <= 1e-12 * (i1.abs() + i2.abs() + 1.0));
    }
}

fn rough_tensor() -> &'static AnisotropyTensor<f64> {
    static A: OnceLock<AnisotropyTensor<f64>> = OnceLock::new();
    A.get_or_init(|| {
        let g = FilmGeometry::new(Profile::sine2_1d(), Profile::sine2_2d().shifted(1.2), Rect::unit_square()).unwrap();
        compute_general(&g, &CellRule::new(4).unwrap(), coarse_plane()).unwrap()
    })
}

fn rough_mesh() -> &'static (CellMesh<f64>, ExchangeTensor<f64>) {
    static M: OnceLock<(CellMesh<f64>, ExchangeTensor<f64>)> = OnceLock::new();
    M.get_or_init(|| {
        let g = FilmGeometry::parallel(Profile::sine2_2d(), 0.7, Rect::unit_square()).unwrap();
        let mesh = CellMesh::new(&g, &MeshParams { n_h: 8, n_v: 4, ..Default::default() }).unwrap();
        let t = exchange_tensor_on(&mesh).unwrap();
        (mesh, t)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn only_the_symmetric_part_enters_the_quadratic_form(e in unit()) {
        let a = rough_tensor();
        prop_assert!((a.total.quad_form(&e) - a.sym.quad_form(&e)).abs() <= 1e-12);
    }

    #[test]
    fn cell_energy_is_bounded_by_zero_corrector(xi in prop::array::uniform3([-2.0..2.0f64, -2.0..2.0f64])) {
        let (mesh, _) = rough_mesh();
        let e = solve_cell_on(mesh, xi).unwrap().energy;
        let n2: f64 = xi.iter().flatten().map(|v| v * v).sum();
        prop_assert!(e <= n2 * mesh.volume() * (1.0 + 1e-12));
        prop_assert!(e >= 0.0);
    }

    #[test]
    fn vector_solve_is_sum_of_row_solves(xi in prop::array::uniform3([-2.0..2.0f64, -2.0..2.0f64])) {
        let (mesh, _) = rough_mesh();
        let full = solve_cell_on(mesh, xi).unwrap();
        let mut rows = 0.0;
        for i in 0..3 {
            let mut one = [[0.0; 2]; 3];
            one[i] = xi[i];
            let s = solve_cell_on(mesh, one).unwrap();
            rows += s.energy;
            for (a, b) in full.phi.iter().zip(&s.phi) {
                prop_assert!((a[i] - b[i]).abs() <= 1e-8);
            }
        }
        prop_assert!((full.energy - rows).abs() <= 1e-9 * (1.0 + rows));
    }
}

#[test]
fn cell_energy_is_continuous_along_a_path() {
    let (mesh, _) = rough_mesh();
    let target = [[0.9, -0.2], [0.4, 1.1], [-0.7, 0.5]];
    let e = solve_cell_on(mesh, target).unwrap().energy;
    let mut last = f64::INFINITY;
    for k in 1..=5 {
        let t = 1.0 + 10f64.powi(-k);
        let ek = solve_cell_on(mesh, target.map(|r| r.map(|v| t * v))).unwrap().energy;
        let gap = (ek - e).abs();
        assert!(gap < last, "step {k}: {gap}");
        last = gap;
    }
    assert!(last < 1e-4 * e);
}

fn random_field(n: [usize; 2], seed: [f64; 4]) -> MagnetizationField<f64> {
    MagnetizationField::from_fn(Rect::unit_square(), n, |x: [f64; 2]| {
        let th = seed[0] * (2.0 * PI * x[0]).sin() + seed[1] * x[1];
        let ph = seed[2] * x[0] * x[1] + seed[3];
        [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
    })
    .unwrap()
}

fn rotation(axis: [f64; 3], angle: f64) -> Mat3<f64> {
    let [x, y, z] = axis;
    let (s, c) = angle.sin_cos();
    let k = Mat3([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]]);
    Mat3::identity() + k.scale(s) + k.matmul(&k).scale(1.0 - c)
}

fn energy_params() -> EnergyParams<f64> {
    let g = FilmGeometry::new(Profile::sine2_1d(), Profile::sine2_2d().shifted(1.2), Rect::unit_square()).unwrap();
    EnergyParams::new(0.3, g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constant_fields_give_the_quadratic_form(m in unit()) {
        let (_, g) = rough_mesh();
        let a = rough_tensor();
        let f = MagnetizationField::constant(Rect::unit_square(), [6, 5], m).unwrap();
        let r = evaluate_e0(&f, g, a, &energy_params()).unwrap();
        prop_assert!((r.total - a.sym.quad_form(&m)).abs() <= 1e-12);
    }

    #[test]
    fn constant_minimum_bounds_every_field(seed in prop::array::uniform4(-3.0..3.0f64)) {
        let (_, g) = rough_mesh();
        let a = rough_tensor();
        let f = random_field([16, 12], seed);
        let r = evaluate_e0(&f, g, a, &energy_params()).unwrap();
        prop_assert!(r.total >= sym_eigen(&a.sym).values[0] - 1e-8);
    }

    #[test]
    fn global_rotation_leaves_energy_unchanged(seed in prop::array::uniform4(-3.0..3.0f64), axis in unit(), angle in 0.0..6.3f64) {
        let (_, g) = rough_mesh();
        let a = rough_tensor();
        let r = rotation(axis, angle);
        let f = random_field([10, 14], seed);
        let rf = MagnetizationField::new(*f.omega(), f.shape(), f.values().iter().map(|m| r.mul_vec(m)).collect()).unwrap();
        let ex = exchange_term(&f, g, 0.3);
        prop_assert!((exchange_term(&rf, g, 0.3) - ex).abs() <= 1e-12 * (1.0 + ex));
        let rotated = AnisotropyTensor::from_total(r.matmul(&a.total).matmul(&r.transpose()), vec![], Formula::General);
        let an = anisotropy_term(&f, a);
        prop_assert!((anisotropy_term(&rf, &rotated) - an).abs() <= 1e-12 * (1.0 + an.abs()));
    }
}
