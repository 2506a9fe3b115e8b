//! Homogenized shape-anisotropy matrix and easy-axis extraction.
//!
//! Every entry is a cell average over `x' ∈ Q` of a plane integral over
//! `z' ∈ R²` whose kernel couples the surface normals `n_i = (-∇f_i, 1)` at
//! `x'` and `x' + z'`. The general form has four terms: the self-interaction
//! of each surface, the cross interaction of the two surfaces, and a dipolar
//! in-plane term weighted by the thickness autocorrelation.

use crate::error::{Error, Result};
use crate::linalg::{dot3, sym_eigen, Mat3, Vec2, Vec3};
use crate::profiles::FilmGeometry;
use crate::quadrature::{integrate_plane, CellRule, PlaneRule};
use crate::scalar::{inv_sqrt_diff, Real};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    General,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyTensor<T> {
    /// Self-interaction of f1, of f2, cross term, in-plane thickness term;
    /// empty for the parallel formula.
    pub terms: Vec<Mat3<T>>,
    pub total: Mat3<T>,
    /// `(total + totalᵀ)/2`, the only part the energy sees.
    pub sym: Mat3<T>,
    pub formula: Formula,
}

impl<T: Real> AnisotropyTensor<T> {
    pub fn from_total(total: Mat3<T>, terms: Vec<Mat3<T>>, formula: Formula) -> Self {
        Self { terms, sym: total.sym(), total, formula }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EasyAxis<T> {
    pub axis: Vec3<T>,
    pub value: T,
    /// Eigenvalues of the symmetric part, ascending.
    pub spectrum: Vec3<T>,
    pub degenerate: bool,
}

/// Gap below which the two lowest eigenvalues count as one.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// Sums per-node contributions in cell-rule order after evaluating them on
/// the rayon pool.
fn cell_average<T: Real, V: Send>(
    cell: &CellRule,
    per_node: impl Fn(Vec2<T>) -> Result<V> + Sync + Send,
    mut fold: impl FnMut(T, V),
) -> Result<()> {
    let nodes = cell.nodes::<T>();
    let parts: Vec<Result<V>> = nodes.par_iter().map(|(x, _)| per_node(*x)).collect();
    for ((_, w), part) in nodes.iter().zip(parts) {
        fold(*w, part?);
    }
    Ok(())
}

/// Four-term formula for arbitrary ordered profile pairs.
pub fn compute_general<T: Real>(
    geom: &FilmGeometry<T>,
    cell: &CellRule,
    plane: &PlaneRule<T>,
) -> Result<AnisotropyTensor<T>> {
    let (f1, f2) = (geom.f1(), geom.f2());
    let one = T::one();
    let mut terms = [Mat3::<T>::zeros(); 4];
    cell_average(
        cell,
        |x| {
            let (f1x, _) = f1.value_grad(x);
            let (f2x, _) = f2.value_grad(x);
            // [Σ k1 n1(y) | Σ k2 n2(y) | Σ k3 n2(y) | in-plane dipole 11, 12, 22]
            let acc: [T; 12] = integrate_plane(plane, |z, r| {
                let y = [x[0] + z[0], x[1] + z[1]];
                let (f1y, g1y) = f1.value_grad(y);
                let (f2y, g2y) = f2.value_grad(y);
                let r2 = r * r;
                let k1 = inv_sqrt_diff(r2, f1y - f1x, one);
                let k2 = inv_sqrt_diff(r2, f2y - f2x, one);
                let k3 = inv_sqrt_diff(r2, f2y - f1x, one);
                let s = r2 + one;
                let s32 = one / (s * s.sqrt());
                let s52 = s32 / s;
                let gg = (f2y - f1y) * (f2x - f1x);
                let three = T::lit(3.0);
                [
                    -k1 * g1y[0],
                    -k1 * g1y[1],
                    k1,
                    -k2 * g2y[0],
                    -k2 * g2y[1],
                    k2,
                    -k3 * g2y[0],
                    -k3 * g2y[1],
                    k3,
                    gg * (s32 - three * z[0] * z[0] * s52),
                    gg * (-three * z[0] * z[1] * s52),
                    gg * (s32 - three * z[1] * z[1] * s52),
                ]
            })?;
            let n1x = f1.normal(x);
            let n2x = f2.normal(x);
            let v1 = [acc[0], acc[1], acc[2]];
            let v2 = [acc[3], acc[4], acc[5]];
            let v3 = [acc[6], acc[7], acc[8]];
            let mut t4 = Mat3::zeros();
            t4[(0, 0)] = acc[9];
            t4[(0, 1)] = acc[10];
            t4[(1, 0)] = acc[10];
            t4[(1, 1)] = acc[11];
            Ok([Mat3::outer(&n1x, &v1), Mat3::outer(&n2x, &v2), Mat3::outer(&n1x, &v3), t4])
        },
        |w, part| {
            for (t, p) in terms.iter_mut().zip(part) {
                *t += p * w;
            }
        },
    )?;
    let quarter = T::one() / (T::lit(4.0) * T::PI());
    let half = T::one() / (T::lit(2.0) * T::PI());
    terms[0] = terms[0] * quarter;
    terms[1] = terms[1] * quarter;
    terms[2] = terms[2] * (-half);
    terms[3] = terms[3] * quarter;
    let total = terms[0] + terms[1] + terms[2] + terms[3];
    if !total.is_finite() {
        return Err(Error::NonFinite("anisotropy tensor"));
    }
    Ok(AnisotropyTensor::from_total(total, terms.to_vec(), Formula::General))
}

/// Single-kernel formula valid when `f2 = f1 + a`.
pub fn compute_parallel<T: Real>(
    geom: &FilmGeometry<T>,
    cell: &CellRule,
    plane: &PlaneRule<T>,
) -> Result<AnisotropyTensor<T>> {
    let a = geom.parallel_offset().ok_or(Error::NotParallel)?;
    let f = geom.f1();
    let mut total = Mat3::<T>::zeros();
    cell_average(
        cell,
        |x| {
            let fx = f.eval(x);
            let v: [T; 3] = integrate_plane(plane, |z, r| {
                let (fy, gy) = f.value_grad([x[0] + z[0], x[1] + z[1]]);
                let d = fy - fx;
                let k = inv_sqrt_diff(r * r, d, a + d);
                [-k * gy[0], -k * gy[1], k]
            })?;
            Ok(Mat3::outer(&f.normal(x), &v))
        },
        |w, part| total += part * w,
    )?;
    let total = total * (T::one() / (T::lit(2.0) * T::PI()));
    if !total.is_finite() {
        return Err(Error::NonFinite("anisotropy tensor"));
    }
    Ok(AnisotropyTensor::from_total(total, Vec::new(), Formula::Parallel))
}

/// Parallel formula when the geometry allows it, general otherwise.
pub fn compute_auto<T: Real>(
    geom: &FilmGeometry<T>,
    cell: &CellRule,
    plane: &PlaneRule<T>,
) -> Result<AnisotropyTensor<T>> {
    if geom.parallel_offset().is_some() {
        compute_parallel(geom, cell, plane)
    } else {
        compute_general(geom, cell, plane)
    }
}

/// Minimizer of `A e · e` over the unit sphere.
///
/// In a degenerate lowest eigenspace the axis is the member with the largest
/// `|e3|` component, then the largest `|e1|`, then `|e2|`; the sign always
/// makes the leading nonzero entry positive.
pub fn easy_axis<T: Real>(t: &AnisotropyTensor<T>) -> EasyAxis<T> {
    easy_axis_of(&t.sym)
}

pub fn easy_axis_of<T: Real>(sym: &Mat3<T>) -> EasyAxis<T> {
    let eig = sym_eigen(sym);
    let gap = T::lit(DEGENERACY_GAP);
    let mut dim = 1;
    while dim < 3 && eig.values[dim] - eig.values[0] < gap {
        dim += 1;
    }
    let basis = &eig.vectors[..dim];
    let axis = if dim == 1 {
        eig.vectors[0]
    } else {
        let mut chosen = basis[0];
        let cut = T::lit(1e-10);
        for target in [2usize, 0, 1] {
            // projection of the coordinate vector onto the eigenspace
            let mut p = [T::zero(); 3];
            for b in basis {
                let c = b[target];
                for i in 0..3 {
                    p[i] += c * b[i];
                }
            }
            let n = dot3(&p, &p).sqrt();
            if n > cut {
                chosen = [p[0] / n, p[1] / n, p[2] / n];
                break;
            }
        }
        chosen
    };
    let axis = canonical_sign(axis);
    EasyAxis { axis, value: eig.values[0], spectrum: eig.values, degenerate: dim > 1 }
}

fn canonical_sign<T: Real>(v: Vec3<T>) -> Vec3<T> {
    let cut = T::lit(1e-12);
    match v.iter().find(|c| c.abs() > cut) {
        Some(c) if *c < T::zero() => [-v[0], -v[1], -v[2]],
        _ => v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{Profile, Rect};
    use crate::quadrature::PlaneRuleParams;

    fn coarse_plane() -> PlaneRule<f64> {
        PlaneRule::new(PlaneRuleParams {
            r_cut: 16.0,
            n_rad: 24,
            n_ang: 32,
            arc_density: 3.0,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn easy_axis_diagonal_cases() {
        let e = easy_axis_of(&Mat3::<f64>::diag([2.0, 1.0, 3.0]));
        assert_eq!(e.axis, [0.0, 1.0, 0.0]);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.spectrum, [1.0, 2.0, 3.0]);
        assert!(!e.degenerate);

        let e = easy_axis_of(&Mat3::<f64>::diag([0.2, 0.5, 0.1]));
        assert_eq!(e.axis, [0.0, 0.0, 1.0]);
        assert!((e.value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn easy_axis_flat_film_is_degenerate_in_plane() {
        let e = easy_axis_of(&Mat3::diag([0.0, 0.0, 1.0]));
        assert!(e.degenerate);
        assert_eq!(e.value, 0.0);
        assert_eq!(e.axis[2], 0.0);
        assert_eq!(e.axis, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn easy_axis_degenerate_prefers_vertical_component() {
        // lowest eigenspace spanned by (1,0,1)/√2 and (0,1,0)
        let u = [std::f64::consts::FRAC_1_SQRT_2, 0.0, std::f64::consts::FRAC_1_SQRT_2];
        let w = [-u[0], 0.0, u[2]];
        let a = Mat3::outer(&w, &w) * 2.0;
        let e = easy_axis_of(&a);
        assert!(e.degenerate);
        assert!((e.axis[0] - u[0]).abs() < 1e-12 && (e.axis[2] - u[2]).abs() < 1e-12);
    }

    #[test]
    fn easy_axis_invariants_on_random_matrix() {
        let a = Mat3::<f64>([[0.7, 0.1, -0.2], [0.0, 0.4, 0.3], [0.05, 0.3, 0.9]]);
        let t = AnisotropyTensor::from_total(a, vec![], Formula::General);
        let e = easy_axis(&t);
        let n = dot3(&e.axis, &e.axis).sqrt();
        assert!((n - 1.0).abs() < 1e-12);
        assert!((t.sym.quad_form(&e.axis) - e.value).abs() < 1e-10);
        assert_eq!(e.value, e.spectrum[0]);
    }

    #[test]
    fn parallel_requires_offset() {
        let g = FilmGeometry::new(Profile::sine2_1d(), Profile::constant(1.5), Rect::unit_square())
            .unwrap();
        let e = compute_parallel(&g, &CellRule::new(2).unwrap(), &coarse_plane());
        assert!(matches!(e, Err(Error::NotParallel)));
    }

    #[test]
    fn flat_slab_general_terms() {
        let g = FilmGeometry::new(Profile::constant(0.0), Profile::constant(1.0), Rect::unit_square())
            .unwrap();
        let t = compute_general(&g, &CellRule::new(1).unwrap(), &coarse_plane()).unwrap();
        let e33 = Mat3::diag([0.0, 0.0, 1.0]);
        assert!((t.terms[0] - e33 * 0.5).max_abs() < 1e-3);
        assert!((t.terms[1] - e33 * 0.5).max_abs() < 1e-3);
        assert_eq!(t.terms[2].max_abs(), 0.0);
        assert!(t.terms[3].max_abs() < 1e-3);
        assert!((t.total - e33).frobenius() < 1e-3);
    }
}
