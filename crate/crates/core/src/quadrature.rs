//! Integration over the period cell and over the whole plane.
//!
//! Plane integrals target kernels with at worst a `c/|z|` singularity at the
//! origin and `O(|z|^-p)` decay, possibly modulated by unit-periodic factors.
//! The rule is polar throughout:
//!
//! * an inner disc `|z| < r_inner` with the radial variable mapped as
//!   `r = r_inner s⁴` (Gauss–Legendre in `s`), which resolves kernels whose
//!   transition scale is much smaller than `r_inner`;
//! * an annulus up to `R_cut` split into geometrically graded Gauss panels,
//!   capped in width so unit-period oscillations stay resolved, with an
//!   angular count that grows with the circumference;
//! * a smooth window over `[R_cut/2, R_cut]`, a least-squares style fit of
//!   the `C/|z|^p` tail coefficient over that band, and the analytic integral
//!   of the fitted tail beyond the window.
//!
//! All of it collapses into one weight per node, so integration is a plain
//! weighted sum in a fixed node order.

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec2};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Values that can be accumulated by a quadrature rule.
pub trait Accumulate<T>: Sized + Send {
    fn zero() -> Self;
    fn add_scaled(&mut self, w: T, v: &Self);
    fn all_finite(&self) -> bool;
}

impl<T: Real> Accumulate<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn add_scaled(&mut self, w: T, v: &Self) {
        *self += w * *v;
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl<T: Real> Accumulate<T> for Mat3<T> {
    fn zero() -> Self {
        Mat3::zeros()
    }
    fn add_scaled(&mut self, w: T, v: &Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += w * v.0[i][j];
            }
        }
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl<T: Real, const N: usize> Accumulate<T> for [T; N] {
    fn zero() -> Self {
        [T::zero(); N]
    }
    fn add_scaled(&mut self, w: T, v: &Self) {
        for (a, b) in self.iter_mut().zip(v) {
            *a += w * *b;
        }
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Midpoint rule on the unit cell with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRule {
    pub n: usize,
}

impl Default for CellRule {
    fn default() -> Self {
        Self { n: 16 }
    }
}

impl CellRule {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("cell rule needs n >= 1".into()));
        }
        Ok(Self { n })
    }

    /// Nodes in row-major order (first coordinate outer), each with weight `1/n²`.
    pub fn nodes<T: Real>(&self) -> Vec<(Vec2<T>, T)> {
        let h = T::one() / T::from_usize(self.n);
        let w = h * h;
        let mut out = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let p = [(T::from_usize(i) + T::lit(0.5)) * h, (T::from_usize(j) + T::lit(0.5)) * h];
                out.push((p, w));
            }
        }
        out
    }
}

/// `Σ_k w_k g(x_k)` over the cell rule.
pub fn integrate_cell<T: Real, V: Accumulate<T>>(rule: &CellRule, g: impl Fn(Vec2<T>) -> V) -> V {
    let mut acc = V::zero();
    for (p, w) in rule.nodes::<T>() {
        acc.add_scaled(w, &g(p));
    }
    acc
}

/// Parameters of the plane rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaneRuleParams {
    pub r_inner: f64,
    #[serde(rename = "R_cut")]
    pub r_cut: f64,
    /// Gauss nodes in the mapped radial variable of the inner disc.
    pub n_rad: usize,
    /// Angular nodes in the inner disc; lower bound for the annulus.
    pub n_ang: usize,
    /// Gauss nodes per radial panel of the annulus.
    pub n_outer: usize,
    /// Panel width growth ratio in the annulus.
    pub grading: f64,
    /// Upper bound on annulus panel width.
    pub max_panel: f64,
    /// Angular nodes per unit arc length in the annulus.
    pub arc_density: f64,
    /// Decay exponent assumed for the tail.
    pub tail_order: f64,
}

impl Default for PlaneRuleParams {
    fn default() -> Self {
        Self {
            r_inner: 0.5,
            r_cut: 40.0,
            n_rad: 64,
            n_ang: 128,
            n_outer: 6,
            grading: 1.05,
            max_panel: 0.5,
            arc_density: 4.0,
            tail_order: 3.0,
        }
    }
}

impl PlaneRuleParams {
    /// Same rule with every resolution doubled and the cutoff doubled.
    pub fn refined(&self) -> Self {
        Self {
            r_cut: 2.0 * self.r_cut,
            n_rad: 2 * self.n_rad,
            n_ang: 2 * self.n_ang,
            max_panel: 0.5 * self.max_panel,
            arc_density: 2.0 * self.arc_density,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("plane rule: {m}")));
        if !(self.r_inner > 0.0 && self.r_inner < 0.5 * self.r_cut) {
            return bad("need 0 < r_inner < R_cut / 2");
        }
        if self.n_rad == 0 || self.n_outer == 0 {
            return bad("n_rad and n_outer must be positive");
        }
        if self.n_ang == 0 || !self.n_ang.is_multiple_of(4) {
            return bad("n_ang must be a positive multiple of 4");
        }
        if !(self.grading > 1.0 && self.max_panel > 0.0 && self.arc_density > 0.0) {
            return bad("need grading > 1, max_panel > 0, arc_density > 0");
        }
        if !(self.tail_order > 2.0) {
            return bad("tail_order must exceed 2 for an integrable tail");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PlaneNode<T> {
    pub z: Vec2<T>,
    pub r: T,
    pub w: T,
}

/// Precomputed plane rule; see the module docs.
#[derive(Debug, Clone)]
pub struct PlaneRule<T> {
    params: PlaneRuleParams,
    nodes: Vec<PlaneNode<T>>,
}

/// 1 on `t <= 0`, 0 on `t >= 1`, C² in between.
fn window(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - (t - (2.0 * std::f64::consts::PI * t).sin() / (2.0 * std::f64::consts::PI))
    }
}

fn fit_bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (std::f64::consts::PI * t).sin().powi(2)
    }
}

impl<T: Real> PlaneRule<T> {
    pub fn new(params: PlaneRuleParams) -> Result<Self> {
        params.validate()?;
        let two_pi = 2.0 * std::f64::consts::PI;
        // (r, radial weight, angular count) in f64, then one polar ring each
        let mut rings: Vec<(f64, f64, usize)> = Vec::new();

        let (gs, gw) = gauss_legendre(params.n_rad);
        for (s, w) in gs.iter().zip(&gw) {
            let r = params.r_inner * s.powi(4);
            let dr = 4.0 * params.r_inner * s.powi(3) * w;
            rings.push((r, dr, params.n_ang));
        }

        let (go, gwo) = gauss_legendre(params.n_outer);
        let mut a = params.r_inner;
        while a < params.r_cut {
            let width = ((params.grading - 1.0) * a).min(params.max_panel);
            let b = (a + width).min(params.r_cut);
            for (s, w) in go.iter().zip(&gwo) {
                let r = a + (b - a) * s;
                let m = ((params.arc_density * two_pi * r / 8.0).ceil() as usize * 8).max(params.n_ang);
                rings.push((r, (b - a) * w, m));
            }
            a = b;
        }

        let half = 0.5 * params.r_cut;
        let p = params.tail_order;
        let band = |r: f64| (r - half) / half;
        // ∫ (1 - window) r^{-p} over the plane
        let (gt, gwt) = gauss_legendre(64);
        let mut tail = 0.0;
        for (s, w) in gt.iter().zip(&gwt) {
            let r = half + half * s;
            tail += half * w * (1.0 - window(band(r))) * r.powf(1.0 - p);
        }
        tail = two_pi * (tail + params.r_cut.powf(2.0 - p) / (p - 2.0));
        // ∫ bump r^{-p} as seen by the rule itself
        let den: f64 = rings
            .iter()
            .map(|&(r, dr, _)| dr * r * two_pi * fit_bump(band(r)) * r.powf(-p))
            .sum();
        let fit_scale = tail / den;

        let mut nodes = Vec::new();
        for &(r, dr, m) in &rings {
            let t = band(r);
            let eff = window(t) + fit_bump(t) * fit_scale;
            if eff == 0.0 {
                continue;
            }
            let w = dr * r * two_pi / m as f64 * eff;
            for k in 0..m {
                let th = (k as f64 + 0.5) * two_pi / m as f64;
                let (s, c) = th.sin_cos();
                nodes.push(PlaneNode {
                    z: [T::lit(r * c), T::lit(r * s)],
                    r: T::lit(r),
                    w: T::lit(w),
                });
            }
        }
        Ok(Self { params, nodes })
    }

    pub fn params(&self) -> &PlaneRuleParams {
        &self.params
    }

    pub fn nodes(&self) -> &[PlaneNode<T>] {
        &self.nodes
    }
}

impl<T: Real> Default for PlaneRule<T> {
    fn default() -> Self {
        Self::new(PlaneRuleParams::default()).expect("default plane rule is valid")
    }
}

/// `∫_{R²} k(z) dz`; fails on any non-finite kernel value.
pub fn integrate_plane<T: Real, V: Accumulate<T>>(
    rule: &PlaneRule<T>,
    k: impl Fn(Vec2<T>, T) -> V,
) -> Result<V> {
    let mut acc = V::zero();
    for node in &rule.nodes {
        let v = k(node.z, node.r);
        if !v.all_finite() {
            return Err(Error::NonFinite("plane integrand"));
        }
        acc.add_scaled(node.w, &v);
    }
    Ok(acc)
}

/// `∫_{R²} (1/|z| - 1/sqrt(|z|² + ε²L²)) dz`, whose exact value is `2πεL`.
pub fn kernel_mass<T: Real>(eps: T, l: T, rule: &PlaneRule<T>) -> Result<T> {
    if !(eps > T::zero() && l > T::zero()) {
        return Err(Error::InvalidArgument("kernel_mass needs eps > 0 and L > 0".into()));
    }
    let b = eps * l;
    integrate_plane(rule, |_, r| crate::scalar::inv_sqrt_diff(r * r, T::zero(), b))
}
