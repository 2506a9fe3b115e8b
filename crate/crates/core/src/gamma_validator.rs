//! Finite-ε boundary interaction for constant magnetizations.
//!
//! With `x' = εX` the double integral over `ω × ω` becomes a sum over pairs
//! of unit cells of `ω/ε`. By periodicity the pair integral only depends on
//! the integer offset `d` between the cells, so
//!
//! ```text
//! I_ε(m) = ε² Σ_d (N1 - |d1|)(N2 - |d2|) mᵀ T(d) m
//! ```
//!
//! where `T(d)` is a 3×3 matrix that does not depend on ε. One table built for
//! the smallest ε serves the whole sweep. Far offsets use tensor Gauss rules;
//! offsets touching the diagonal use, for every outer node, a split of the
//! inner cell into triangles fanned out from the singular point and swept in
//! polar angle.

use crate::anisotropy::AnisotropyTensor;
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::profiles::FilmGeometry;
use crate::quadrature::gauss_legendre;
use crate::scalar::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// Self terms of both surfaces plus their cross term.
    Reduced,
    /// Single kernel for `f2 = f1 + a`.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidatorParams {
    pub kernel: Kernel,
    /// Outer nodes per axis for near offsets.
    pub near_outer: usize,
    /// Radial and angular nodes of each near-field triangle.
    pub near_radial: usize,
    pub near_angular: usize,
    /// Gauss nodes per axis for `|d|∞ ≤ 3`, `≤ 7`, and beyond.
    pub far: [usize; 3],
}

impl Default for ValidatorParams {
    fn default() -> Self {
        Self { kernel: Kernel::Reduced, near_outer: 16, near_radial: 24, near_angular: 32, far: [10, 8, 6] }
    }
}

impl ValidatorParams {
    fn validate(&self) -> Result<()> {
        if self.near_outer == 0 || self.near_radial == 0 || self.near_angular == 0 || self.far.contains(&0) {
            return Err(Error::InvalidArgument("validator rules need positive node counts".into()));
        }
        Ok(())
    }
}

/// Pair table `T(d)` for `|d1| < n1`, `|d2| < n2`.
#[derive(Debug, Clone)]
pub struct PairTable<T> {
    n: [usize; 2],
    entries: Vec<Mat3<T>>,
}

struct Surfaces<'a, T: Real> {
    geom: &'a FilmGeometry<T>,
    shift: [T; 2],
    kernel: Kernel,
}

impl<T: Real> Surfaces<'_, T> {
    /// `(f1, n1, f2, n2)` at cell coordinate `p`.
    fn at(&self, p: [T; 2]) -> (T, Vec3<T>, T, Vec3<T>) {
        let q = [p[0] + self.shift[0], p[1] + self.shift[1]];
        let (a, ga) = self.geom.f1().value_grad(q);
        let (b, gb) = self.geom.f2().value_grad(q);
        (a, [-ga[0], -ga[1], T::one()], b, [-gb[0], -gb[1], T::one()])
    }

    /// Kernel matrix for outer data `x`, inner data `y` and `|Z|² = r2`.
    fn pair(&self, x: &(T, Vec3<T>, T, Vec3<T>), y: &(T, Vec3<T>, T, Vec3<T>), r2: T) -> Mat3<T> {
        let k = |d: T| T::one() / (r2 + d * d).sqrt();
        match self.kernel {
            Kernel::Reduced => {
                let quarter = T::one() / (T::lit(4.0) * T::PI());
                let mut m = Mat3::outer(&x.1, &y.1) * (quarter * k(y.0 - x.0));
                m += Mat3::outer(&x.3, &y.3) * (quarter * k(y.2 - x.2));
                m += Mat3::outer(&x.1, &y.3) * (-T::lit(2.0) * quarter * k(y.2 - x.0));
                m
            }
            Kernel::Parallel => {
                let a = self.geom.parallel_offset().unwrap_or_else(T::zero);
                let d = y.0 - x.0;
                let w = crate::scalar::inv_sqrt_diff(r2, d, a + d) / (T::lit(2.0) * T::PI());
                Mat3::outer(&x.1, &y.1) * w
            }
        }
    }
}

/// Gauss rule pulled through `x = u²(3 - 2u)`, which clusters nodes at both
/// ends of the interval where the near-field inner integral loses smoothness.
fn graded_rule<T: Real>(n: usize) -> Vec<(T, T)> {
    let (x, w) = gauss_legendre(n);
    x.into_iter()
        .zip(w)
        .map(|(u, w)| (T::lit(u * u * (3.0 - 2.0 * u)), T::lit(6.0 * u * (1.0 - u) * w)))
        .collect()
}

fn rule<T: Real>(n: usize) -> Vec<(T, T)> {
    let (x, w) = gauss_legendre(n);
    x.into_iter().zip(w).map(|(x, w)| (T::lit(x), T::lit(w))).collect()
}

impl<T: Real> PairTable<T> {
    /// `n` is the number of cells of `ω/ε` per axis at the smallest ε;
    /// `shift` is the cell coordinate of `ω`'s lower corner.
    pub fn build(
        geom: &FilmGeometry<T>,
        shift: [T; 2],
        n: [usize; 2],
        params: &ValidatorParams,
    ) -> Result<Self> {
        params.validate()?;
        if params.kernel == Kernel::Parallel && geom.parallel_offset().is_none() {
            return Err(Error::NotParallel);
        }
        let s = Surfaces { geom, shift, kernel: params.kernel };
        let far: Vec<Vec<(T, T)>> = params.far.iter().map(|&q| rule(q)).collect();
        let near = (graded_rule::<T>(params.near_outer), rule::<T>(params.near_radial), rule::<T>(params.near_angular));
        let offsets: Vec<[isize; 2]> = (1 - n[0] as isize..n[0] as isize)
            .flat_map(|d1| (1 - n[1] as isize..n[1] as isize).map(move |d2| [d1, d2]))
            .collect();
        let entries: Vec<Mat3<T>> = offsets
            .par_iter()
            .map(|&d| {
                let reach = d[0].unsigned_abs().max(d[1].unsigned_abs());
                match reach {
                    0 | 1 => near_entry(&s, d, &near),
                    2 | 3 => far_entry(&s, d, &far[0]),
                    4..=7 => far_entry(&s, d, &far[1]),
                    _ => far_entry(&s, d, &far[2]),
                }
            })
            .collect();
        if entries.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("pair table"));
        }
        Ok(Self { n, entries })
    }

    pub fn get(&self, d: [isize; 2]) -> Mat3<T> {
        let w = 2 * self.n[1] - 1;
        let i = (d[0] + self.n[0] as isize - 1) as usize;
        let j = (d[1] + self.n[1] as isize - 1) as usize;
        self.entries[i * w + j]
    }

    /// `ε² Σ_d (N1 - |d1|)(N2 - |d2|) T(d)` for a domain of `cells` cells.
    pub fn interaction_matrix(&self, cells: [usize; 2], eps: T) -> Result<Mat3<T>> {
        if cells[0] > self.n[0] || cells[1] > self.n[1] || cells.contains(&0) {
            return Err(Error::InvalidArgument("pair table too small for this ε".into()));
        }
        let mut acc = Mat3::zeros();
        for d1 in 1 - cells[0] as isize..cells[0] as isize {
            for d2 in 1 - cells[1] as isize..cells[1] as isize {
                let c = T::from_usize((cells[0] - d1.unsigned_abs()) * (cells[1] - d2.unsigned_abs()));
                acc += self.get([d1, d2]) * c;
            }
        }
        Ok(acc * (eps * eps))
    }
}

fn far_entry<T: Real>(s: &Surfaces<T>, d: [isize; 2], q: &[(T, T)]) -> Mat3<T> {
    let mut inner = Vec::with_capacity(q.len() * q.len());
    for (u, wu) in q {
        for (v, wv) in q {
            inner.push(([*u, *v], *wu * *wv, s.at([*u, *v])));
        }
    }
    let dd = [T::lit(d[0] as f64), T::lit(d[1] as f64)];
    let mut acc = Mat3::zeros();
    for (xi, wx, dx) in &inner {
        for (eta, wy, dy) in &inner {
            let z = [dd[0] + eta[0] - xi[0], dd[1] + eta[1] - xi[1]];
            acc += s.pair(dx, dy, z[0] * z[0] + z[1] * z[1]) * (*wx * *wy);
        }
    }
    acc
}

/// Inner cell `d + Q` seen from outer node `ξ` in the variable `Z = d + η - ξ`,
/// split into four signed triangles with apex at `Z = 0`.
fn near_entry<T: Real>(
    s: &Surfaces<T>,
    d: [isize; 2],
    (outer, radial, angular): &(Vec<(T, T)>, Vec<(T, T)>, Vec<(T, T)>),
) -> Mat3<T> {
    let dd = [T::lit(d[0] as f64), T::lit(d[1] as f64)];
    let (o, z) = (T::one(), T::zero());
    let mut acc = Mat3::zeros();
    for (u, wu) in outer {
        for (v, wv) in outer {
            let xi = [*u, *v];
            let dx = s.at(xi);
            let c = [dd[0] - xi[0], dd[1] - xi[1]];
            let corners = [c, [c[0] + o, c[1]], [c[0] + o, c[1] + o], [c[0], c[1] + o]];
            let mut cell = Mat3::zeros();
            for k in 0..4 {
                let a = corners[k];
                let b = corners[(k + 1) % 4];
                let cross = a[0] * b[1] - a[1] * b[0];
                if cross == z {
                    continue;
                }
                // sweep the polar angle from a to b; the ray hits segment ab
                // at distance rho, and r dr cancels the 1/|Z| singularity
                let dot = a[0] * b[0] + a[1] * b[1];
                let sweep = cross.atan2(dot);
                let start = a[1].atan2(a[0]);
                let ab = [b[0] - a[0], b[1] - a[1]];
                for (t, wt) in angular {
                    let (sn, cs) = (start + *t * sweep).sin_cos();
                    let lambda = -(cs * a[1] - sn * a[0]) / (cs * ab[1] - sn * ab[0]);
                    let p = [a[0] + lambda * ab[0], a[1] + lambda * ab[1]];
                    let p2 = p[0] * p[0] + p[1] * p[1];
                    for (r, wr) in radial {
                        let zz = [*r * p[0], *r * p[1]];
                        // η = ξ + Z - d
                        let eta = [xi[0] + zz[0] - dd[0], xi[1] + zz[1] - dd[1]];
                        let dy = s.at(eta);
                        cell += s.pair(&dx, &dy, *r * *r * p2) * (*wt * *wr * *r * p2 * sweep);
                    }
                }
            }
            acc += cell * (*wu * *wv);
        }
    }
    acc
}

/// Cell count of `ω/ε` along one axis, requiring `width/ε` to be an integer.
fn cells_along<T: Real>(width: T, eps: T) -> Result<usize> {
    let c = (width / eps).to_f64_lossy();
    let r = c.round();
    if r < 1.0 || (c - r).abs() > 1e-9 * c.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "ω side {} is not an integer multiple of ε = {}",
            width.to_f64_lossy(),
            eps.to_f64_lossy()
        )));
    }
    Ok(r as usize)
}

fn cell_shift<T: Real>(geom: &FilmGeometry<T>, eps: T) -> [T; 2] {
    let min = geom.omega().min;
    [(min[0] / eps).fract(), (min[1] / eps).fract()]
}

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps <= T::one()) {
        return Err(Error::InvalidArgument("ε must lie in (0, 1]".into()));
    }
    Ok(())
}

fn check_unit<T: Real>(m: &Vec3<T>) -> Result<()> {
    let n = crate::linalg::norm3(m);
    if !((n - T::one()).abs() <= T::lit(1e-12)) {
        return Err(Error::InvalidArgument("m must be a unit vector".into()));
    }
    Ok(())
}

/// True when the near-diagonal patch radius `2ε` exceeds `diam(ω)/4`.
pub fn resolution_insufficient<T: Real>(geom: &FilmGeometry<T>, eps: T) -> bool {
    T::lit(2.0) * eps > geom.omega().diameter() / T::lit(4.0)
}

/// `I_ε(m)` for a constant unit magnetization.
pub fn finite_eps_energy<T: Real>(
    geom: &FilmGeometry<T>,
    m: Vec3<T>,
    eps: T,
    params: &ValidatorParams,
) -> Result<T> {
    check_eps(eps)?;
    check_unit(&m)?;
    let cells = [cells_along(geom.omega().width(), eps)?, cells_along(geom.omega().height(), eps)?];
    let table = PairTable::build(geom, cell_shift(geom, eps), cells, params)?;
    Ok(table.interaction_matrix(cells, eps)?.quad_form(&m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsRecord {
    pub eps: f64,
    pub i_eps: f64,
    pub target: f64,
    pub abs_error: f64,
    /// `abs_error / |target|`, or `abs_error` when the target is zero.
    pub rel_error: f64,
    pub resolution_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsSweep {
    pub m: [f64; 3],
    pub eps_list: Vec<f64>,
    pub records: Vec<EpsRecord>,
    /// Fit of `L + a ε ln ε + b ε` through the last three records, or the
    /// first-order estimate when only two exist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolated: Option<f64>,
    /// `L + a ε` through the last two records.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolated_first_order: Option<f64>,
}

/// Runs `finite_eps_energy` along a strictly decreasing ε list against the
/// target `|ω| A_sym m · m`.
pub fn sweep<T: Real>(
    geom: &FilmGeometry<T>,
    m: Vec3<T>,
    eps_list: &[T],
    params: &ValidatorParams,
    anisotropy: &AnisotropyTensor<T>,
) -> Result<EpsSweep> {
    check_unit(&m)?;
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("eps list must be non-empty and strictly decreasing".into()));
    }
    for e in eps_list {
        check_eps(*e)?;
    }
    let target = (geom.omega().area() * anisotropy.sym.quad_form(&m)).to_f64_lossy();
    let cells: Vec<[usize; 2]> = eps_list
        .iter()
        .map(|e| Ok([cells_along(geom.omega().width(), *e)?, cells_along(geom.omega().height(), *e)?]))
        .collect::<Result<_>>()?;

    // one table per distinct cell shift, sized for the finest ε using it
    let mut tables: Vec<([T; 2], PairTable<T>)> = Vec::new();
    let mut records = Vec::with_capacity(eps_list.len());
    for (k, eps) in eps_list.iter().enumerate() {
        let shift = cell_shift(geom, *eps);
        let pos = match tables.iter().position(|(s, _)| *s == shift) {
            Some(p) => p,
            None => {
                let mut n = cells[k];
                for (j, e) in eps_list.iter().enumerate() {
                    if cell_shift(geom, *e) == shift {
                        n = [n[0].max(cells[j][0]), n[1].max(cells[j][1])];
                    }
                }
                tables.push((shift, PairTable::build(geom, shift, n, params)?));
                tables.len() - 1
            }
        };
        let i_eps = tables[pos].1.interaction_matrix(cells[k], *eps)?.quad_form(&m).to_f64_lossy();
        if !i_eps.is_finite() {
            return Err(Error::NonFinite("finite-ε energy"));
        }
        let abs_error = (i_eps - target).abs();
        records.push(EpsRecord {
            eps: eps.to_f64_lossy(),
            i_eps,
            target,
            abs_error,
            rel_error: if target != 0.0 { abs_error / target.abs() } else { abs_error },
            resolution_flag: resolution_insufficient(geom, *eps),
        });
    }
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.i_eps)).collect();
    let first = richardson_first_order(&pts);
    let extrapolated = richardson_log(&pts).or(first);
    Ok(EpsSweep {
        m: m.map(|v| v.to_f64_lossy()),
        eps_list: eps_list.iter().map(|e| e.to_f64_lossy()).collect(),
        records,
        extrapolated,
        extrapolated_first_order: first,
    })
}

/// Limit of `I(ε) = L + a ε` through the last two points.
pub fn richardson_first_order(pts: &[(f64, f64)]) -> Option<f64> {
    let [(e1, i1), (e2, i2)] = pts.get(pts.len().checked_sub(2)?..)? else { return None };
    Some(i2 + (i2 - i1) * e2 / (e1 - e2))
}

/// Limit of `I(ε) = L + a ε ln ε + b ε` through the last three points.
pub fn richardson_log(pts: &[(f64, f64)]) -> Option<f64> {
    let tail = pts.get(pts.len().checked_sub(3)?..)?;
    let rows: Vec<[f64; 4]> = tail.iter().map(|&(e, i)| [1.0, e * e.ln(), e, i]).collect();
    let det3 = |c: [usize; 3]| {
        let m = |r: usize, k: usize| rows[r][c[k]];
        m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
    };
    let den = det3([0, 1, 2]);
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    Some(det3([3, 1, 2]) / den)
}
