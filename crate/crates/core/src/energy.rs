//! Reduced limiting energy `d² ∫ g_hom(∇m) + ∫ A m · m` on sampled fields.

use crate::anisotropy::{easy_axis, AnisotropyTensor};
use crate::cell_solver::ExchangeTensor;
use crate::error::{Error, Result};
use crate::linalg::{norm3, Vec3};
use crate::profiles::{FilmGeometry, Rect};
use crate::scalar::Real;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct EnergyParams<T> {
    pub d: T,
    pub geom: FilmGeometry<T>,
}

impl<T: Real> EnergyParams<T> {
    pub fn new(d: T, geom: FilmGeometry<T>) -> Result<Self> {
        if !(d > T::zero() && d.is_finite()) {
            return Err(Error::InvalidArgument("exchange constant d must be positive".into()));
        }
        Ok(Self { d, geom })
    }
}

/// Unit vectors at the cell centres of an `nx × ny` grid on `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationField<T> {
    omega: Rect<T>,
    n: [usize; 2],
    /// Index `i * ny + j` holds the node at `(i + ½) hx, (j + ½) hy`.
    values: Vec<Vec3<T>>,
}

impl<T: Real> MagnetizationField<T> {
    pub fn new(omega: Rect<T>, n: [usize; 2], values: Vec<Vec3<T>>) -> Result<Self> {
        if n[0] < 2 || n[1] < 2 || values.len() != n[0] * n[1] {
            return Err(Error::ShapeMismatch(format!(
                "field needs at least 2×2 nodes and {}×{} values, got {}",
                n[0],
                n[1],
                values.len()
            )));
        }
        for (k, v) in values.iter().enumerate() {
            if !((norm3(v) - T::one()).abs() <= T::lit(1e-10)) {
                return Err(Error::InvalidArgument(format!(
                    "|m| != 1 at node ({}, {})",
                    k / n[1],
                    k % n[1]
                )));
            }
        }
        Ok(Self { omega, n, values })
    }

    pub fn from_fn(omega: Rect<T>, n: [usize; 2], f: impl Fn([T; 2]) -> Vec3<T>) -> Result<Self> {
        let h = [omega.width() / T::from_usize(n[0]), omega.height() / T::from_usize(n[1])];
        let mut values = Vec::with_capacity(n[0] * n[1]);
        for i in 0..n[0] {
            for j in 0..n[1] {
                values.push(f([
                    omega.min[0] + (T::from_usize(i) + T::lit(0.5)) * h[0],
                    omega.min[1] + (T::from_usize(j) + T::lit(0.5)) * h[1],
                ]));
            }
        }
        Self::new(omega, n, values)
    }

    pub fn constant(omega: Rect<T>, n: [usize; 2], m: Vec3<T>) -> Result<Self> {
        Self::new(omega, n, vec![m; n[0] * n[1]])
    }

    pub fn omega(&self) -> &Rect<T> {
        &self.omega
    }

    pub fn shape(&self) -> [usize; 2] {
        self.n
    }

    pub fn spacing(&self) -> [T; 2] {
        [self.omega.width() / T::from_usize(self.n[0]), self.omega.height() / T::from_usize(self.n[1])]
    }

    pub fn values(&self) -> &[Vec3<T>] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Vec3<T> {
        self.values[i * self.n[1] + j]
    }

    /// `∂m/∂x_1`, `∂m/∂x_2` at node `(i, j)`: central inside, one-sided on the rim.
    pub fn gradient(&self, i: usize, j: usize) -> [Vec3<T>; 2] {
        let h = self.spacing();
        let diff = |lo: Vec3<T>, hi: Vec3<T>, span: T| {
            [(hi[0] - lo[0]) / span, (hi[1] - lo[1]) / span, (hi[2] - lo[2]) / span]
        };
        let axis = |k: usize, pos: usize, get: &dyn Fn(usize) -> Vec3<T>| {
            let n = self.n[k];
            if pos == 0 {
                diff(get(0), get(1), h[k])
            } else if pos == n - 1 {
                diff(get(n - 2), get(n - 1), h[k])
            } else {
                diff(get(pos - 1), get(pos + 1), T::lit(2.0) * h[k])
            }
        };
        [axis(0, i, &|a| self.at(a, j)), axis(1, j, &|b| self.at(i, b))]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub exchange_term: f64,
    pub anisotropy_term: f64,
    pub total: f64,
}

fn ordered_sum<T: Real>(parts: Vec<T>) -> T {
    parts.into_iter().fold(T::zero(), |a, b| a + b)
}

/// `d² Σ h² Σ_i G ∇m_i · ∇m_i` over the grid.
pub fn exchange_term<T: Real>(field: &MagnetizationField<T>, g: &ExchangeTensor<T>, d: T) -> T {
    let h = field.spacing();
    let rows: Vec<T> = (0..field.n[0])
        .into_par_iter()
        .map(|i| {
            let mut s = T::zero();
            for j in 0..field.n[1] {
                let [dx, dy] = field.gradient(i, j);
                for c in 0..3 {
                    s += g.row_form([dx[c], dy[c]]);
                }
            }
            s
        })
        .collect();
    d * d * h[0] * h[1] * ordered_sum(rows)
}

/// `Σ h² A_sym m · m` over the grid.
pub fn anisotropy_term<T: Real>(field: &MagnetizationField<T>, a: &AnisotropyTensor<T>) -> T {
    let h = field.spacing();
    let rows: Vec<T> = (0..field.n[0])
        .into_par_iter()
        .map(|i| {
            let mut s = T::zero();
            for j in 0..field.n[1] {
                s += a.sym.quad_form(&field.at(i, j));
            }
            s
        })
        .collect();
    h[0] * h[1] * ordered_sum(rows)
}

pub fn evaluate_e0<T: Real>(
    field: &MagnetizationField<T>,
    g: &ExchangeTensor<T>,
    a: &AnisotropyTensor<T>,
    params: &EnergyParams<T>,
) -> Result<EnergyReport> {
    if field.omega() != params.geom.omega() {
        return Err(Error::ShapeMismatch("field domain differs from the geometry's ω".into()));
    }
    let ex = exchange_term(field, g, params.d).to_f64_lossy();
    let an = anisotropy_term(field, a).to_f64_lossy();
    if !(ex.is_finite() && an.is_finite()) {
        return Err(Error::NonFinite("energy"));
    }
    Ok(EnergyReport { exchange_term: ex, anisotropy_term: an, total: ex + an })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantMinimizer<T> {
    pub m: Vec3<T>,
    /// `|ω| min_e A_sym e · e`.
    pub energy: T,
    pub degenerate: bool,
}

/// Global minimizer of the reduced energy; the exchange part vanishes on
/// constants and is nonnegative otherwise.
pub fn constant_minimizer<T: Real>(
    _g: &ExchangeTensor<T>,
    a: &AnisotropyTensor<T>,
    params: &EnergyParams<T>,
) -> ConstantMinimizer<T> {
    let e = easy_axis(a);
    ConstantMinimizer { m: e.axis, energy: params.geom.omega().area() * e.value, degenerate: e.degenerate }
}
