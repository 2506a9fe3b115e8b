//! Q-periodic surface profiles and the film geometries they bound.
//!
//! All profiles are periodic with the unit square `Q = (0,1)²` as period cell.
//! Arguments are reduced modulo 1 before evaluation, so callers may pass any
//! point of the plane.

use crate::error::{Error, Result};
use crate::linalg::{Vec2, Vec3};
use crate::scalar::Real;

/// Sample count per axis used to verify `f1 < f2`.
pub const ORDERING_CHECK_N: usize = 256;

/// Shape of a profile, without its additive offset.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind<T> {
    Constant(T),
    /// `sin²(π x1)`
    Sine2_1d,
    /// `sin²(π x1) sin²(π x2)`
    Sine2_2d,
    Sampled(SampledGrid<T>),
}

/// Periodic N×N grid of samples, `values[i * n + j] = f(i/n, j/n)`,
/// interpolated by a periodic bicubic B-spline (C², exact at the nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGrid<T> {
    n: usize,
    values: Vec<T>,
    coeffs: Vec<T>,
}

impl<T: Real> SampledGrid<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidProfile(format!("sampled grid needs n >= 4, got {n}")));
        }
        if values.len() != n * n {
            return Err(Error::InvalidProfile(format!(
                "sampled grid expects {} values, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("sampled grid contains non-finite values".into()));
        }
        let mut coeffs = values.clone();
        prefilter_axis(n, &mut coeffs, n, 1);
        prefilter_axis(n, &mut coeffs, 1, n);
        Ok(Self { n, values, coeffs })
    }

    /// Samples `f` at the grid nodes `(i/n, j/n)`.
    pub fn from_fn(n: usize, f: impl Fn(Vec2<T>) -> T) -> Result<Self> {
        let h = T::one() / T::from_usize(n);
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f([T::from_usize(i) * h, T::from_usize(j) * h]));
            }
        }
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    fn at(&self, i: isize, j: isize) -> T {
        let n = self.n as isize;
        self.values[(i.rem_euclid(n) * n + j.rem_euclid(n)) as usize]
    }

    #[inline]
    fn coeff(&self, i: isize, j: isize) -> T {
        let n = self.n as isize;
        self.coeffs[(i.rem_euclid(n) * n + j.rem_euclid(n)) as usize]
    }

    fn value_grad(&self, p: Vec2<T>) -> (T, Vec2<T>) {
        let nf = T::from_usize(self.n);
        let u = p[0] * nf;
        let v = p[1] * nf;
        let iu = u.floor();
        let iv = v.floor();
        let (tu, tv) = (u - iu, v - iv);
        let (i0, j0) = (iu.to_isize().unwrap_or(0), iv.to_isize().unwrap_or(0));
        let (wu, du) = bspline_weights(tu);
        let (wv, dv) = bspline_weights(tv);
        let mut f = T::zero();
        let mut fu = T::zero();
        let mut fv = T::zero();
        for a in 0..4 {
            for b in 0..4 {
                let s = self.coeff(i0 + a as isize - 1, j0 + b as isize - 1);
                f += wu[a] * wv[b] * s;
                fu += du[a] * wv[b] * s;
                fv += wu[a] * dv[b] * s;
            }
        }
        (f, [fu * nf, fv * nf])
    }
}

/// Uniform cubic B-spline weights and their derivatives for the four
/// stencil nodes at offsets -1, 0, 1, 2.
#[inline]
fn bspline_weights<T: Real>(t: T) -> ([T; 4], [T; 4]) {
    let sixth = T::one() / T::lit(6.0);
    let h = T::lit(0.5);
    let s = T::one() - t;
    let t2 = t * t;
    let t3 = t2 * t;
    let w = [
        sixth * s * s * s,
        sixth * (T::lit(3.0) * t3 - T::lit(6.0) * t2 + T::lit(4.0)),
        sixth * (-T::lit(3.0) * t3 + T::lit(3.0) * t2 + T::lit(3.0) * t + T::one()),
        sixth * t3,
    ];
    let d = [
        -h * s * s,
        h * (T::lit(3.0) * t2 - T::lit(4.0) * t),
        h * (-T::lit(3.0) * t2 + T::lit(2.0) * t + T::one()),
        h * t2,
    ];
    (w, d)
}

/// Inverts the periodic `(1, 4, 1) / 6` sampling operator along one axis:
/// its impulse response is `√3 r^|k|` with `r = √3 - 2`, truncated where
/// `|r|^k` drops below 1e-22.
fn prefilter_axis<T: Real>(n: usize, data: &mut [T], stride: usize, step: usize) {
    const REACH: isize = 40;
    let r = T::lit(3f64.sqrt() - 2.0);
    let mut taps = Vec::with_capacity(REACH as usize + 1);
    let mut p = T::lit(3f64.sqrt());
    for _ in 0..=REACH {
        taps.push(p);
        p *= r;
    }
    let ni = n as isize;
    for line in 0..n {
        let base = line * stride;
        let src: Vec<T> = (0..n).map(|i| data[base + i * step]).collect();
        for i in 0..ni {
            let mut acc = taps[0] * src[i as usize];
            for k in 1..=REACH {
                acc += taps[k as usize] * (src[(i + k).rem_euclid(ni) as usize] + src[(i - k).rem_euclid(ni) as usize]);
            }
            data[base + i as usize * step] = acc;
        }
    }
}

/// A Q-periodic Lipschitz surface `f(x') = kind(x') + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    kind: ProfileKind<T>,
    offset: T,
    lipschitz_bound: T,
    range: (T, T),
}

impl<T: Real> Profile<T> {
    pub fn constant(c: T) -> Self {
        Self::from_kind(ProfileKind::Constant(c)).expect("constant profile")
    }

    pub fn sine2_1d() -> Self {
        Self::from_kind(ProfileKind::Sine2_1d).expect("built-in profile")
    }

    pub fn sine2_2d() -> Self {
        Self::from_kind(ProfileKind::Sine2_2d).expect("built-in profile")
    }

    pub fn sampled(grid: SampledGrid<T>) -> Self {
        Self::from_kind(ProfileKind::Sampled(grid)).expect("validated grid")
    }

    pub fn from_kind(kind: ProfileKind<T>) -> Result<Self> {
        let (lipschitz_bound, range) = match &kind {
            ProfileKind::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::InvalidProfile("constant must be finite".into()));
                }
                (T::zero(), (*c, *c))
            }
            // max |∇f| = π for both, attained at (1/4, ·) and (1/2, 1/4) respectively
            ProfileKind::Sine2_1d | ProfileKind::Sine2_2d => (T::PI(), (T::zero(), T::one())),
            ProfileKind::Sampled(g) => sampled_metadata(g),
        };
        Ok(Self { kind, offset: T::zero(), lipschitz_bound, range })
    }

    /// `self + a`.
    pub fn shifted(&self, a: T) -> Self {
        let mut p = self.clone();
        p.offset += a;
        p.range = (p.range.0 + a, p.range.1 + a);
        p
    }

    pub fn kind(&self) -> &ProfileKind<T> {
        &self.kind
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn lipschitz_bound(&self) -> T {
        self.lipschitz_bound
    }

    pub fn range(&self) -> (T, T) {
        self.range
    }

    /// `Some(a)` when `other == self + a` structurally.
    pub fn parallel_offset_to(&self, other: &Self) -> Option<T> {
        match (&self.kind, &other.kind) {
            (ProfileKind::Constant(a), ProfileKind::Constant(b)) => {
                Some((*b + other.offset) - (*a + self.offset))
            }
            (a, b) if a == b => Some(other.offset - self.offset),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, p: Vec2<T>) -> T {
        self.value_grad(p).0
    }

    #[inline]
    pub fn grad(&self, p: Vec2<T>) -> Vec2<T> {
        self.value_grad(p).1
    }

    /// `(-∇f, 1)`, not normalized.
    #[inline]
    pub fn normal(&self, p: Vec2<T>) -> Vec3<T> {
        let g = self.grad(p);
        [-g[0], -g[1], T::one()]
    }

    /// Value and gradient in one pass.
    #[inline]
    pub fn value_grad(&self, p: Vec2<T>) -> (T, Vec2<T>) {
        let x = [p[0] - p[0].floor(), p[1] - p[1].floor()];
        let (f, g) = match &self.kind {
            ProfileKind::Constant(c) => (*c, [T::zero(); 2]),
            ProfileKind::Sine2_1d => {
                let (s, c) = (T::PI() * x[0]).sin_cos();
                (s * s, [T::lit(2.0) * T::PI() * s * c, T::zero()])
            }
            ProfileKind::Sine2_2d => {
                let (s1, c1) = (T::PI() * x[0]).sin_cos();
                let (s2, c2) = (T::PI() * x[1]).sin_cos();
                let (q1, q2) = (s1 * s1, s2 * s2);
                let tp = T::lit(2.0) * T::PI();
                (q1 * q2, [tp * s1 * c1 * q2, tp * s2 * c2 * q1])
            }
            ProfileKind::Sampled(grid) => grid.value_grad(x),
        };
        (f + self.offset, g)
    }
}

fn sampled_metadata<T: Real>(g: &SampledGrid<T>) -> (T, (T, T)) {
    let n = g.n as isize;
    let nf = T::from_usize(g.n);
    let mut slope = T::zero();
    for i in 0..n {
        for j in 0..n {
            let dx = (g.at(i + 1, j) - g.at(i, j)) * nf;
            let dy = (g.at(i, j + 1) - g.at(i, j)) * nf;
            slope = slope.max((dx * dx + dy * dy).sqrt());
        }
    }
    let lip = slope * T::lit(1.1);
    // extrema of the interpolant on a 4x refined grid, padded by the Lipschitz
    // bound over half the refined spacing diagonal
    let m = 4 * g.n;
    let h = T::one() / T::from_usize(m);
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for i in 0..m {
        for j in 0..m {
            let v = g.value_grad([T::from_usize(i) * h, T::from_usize(j) * h]).0;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let pad = lip * h * T::SQRT_2() * T::lit(0.5);
    (lip, (lo - pad, hi + pad))
}

/// Axis-aligned rectangle in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub min: Vec2<T>,
    pub max: Vec2<T>,
}

impl<T: Real> Rect<T> {
    pub fn new(min: Vec2<T>, max: Vec2<T>) -> Result<Self> {
        let r = Self { min, max };
        if !(r.width() > T::zero() && r.height() > T::zero()) || !r.area().is_finite() {
            return Err(Error::InvalidDomain(format!(
                "rectangle [{}, {}] x [{}, {}] has no positive area",
                min[0], max[0], min[1], max[1]
            )));
        }
        Ok(r)
    }

    pub fn unit_square() -> Self {
        Self { min: [T::zero(); 2], max: [T::one(); 2] }
    }

    pub fn width(&self) -> T {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> T {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn diameter(&self) -> T {
        self.width().hypot(self.height())
    }
}

/// Film bounded below by `f1` and above by `f2` over the in-plane domain ω.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmGeometry<T> {
    f1: Profile<T>,
    f2: Profile<T>,
    omega: Rect<T>,
    parallel_offset: Option<T>,
}

impl<T: Real> FilmGeometry<T> {
    /// Validates `f1 < f2` on a 256×256 sample of Q.
    pub fn new(f1: Profile<T>, f2: Profile<T>, omega: Rect<T>) -> Result<Self> {
        Rect::new(omega.min, omega.max)?;
        check_ordering(&f1, &f2)?;
        let parallel_offset = f1.parallel_offset_to(&f2);
        Ok(Self { f1, f2, omega, parallel_offset })
    }

    /// `f2 = f + a` over ω.
    pub fn parallel(f: Profile<T>, a: T, omega: Rect<T>) -> Result<Self> {
        let f2 = f.shifted(a);
        Self::new(f, f2, omega)
    }

    pub fn f1(&self) -> &Profile<T> {
        &self.f1
    }

    pub fn f2(&self) -> &Profile<T> {
        &self.f2
    }

    pub fn omega(&self) -> &Rect<T> {
        &self.omega
    }

    pub fn parallel_offset(&self) -> Option<T> {
        self.parallel_offset
    }

    /// `f2 - f1` at `p`.
    pub fn thickness(&self, p: Vec2<T>) -> T {
        self.f2.eval(p) - self.f1.eval(p)
    }

    /// Same film with ω replaced.
    pub fn with_omega(&self, omega: Rect<T>) -> Result<Self> {
        let omega = Rect::new(omega.min, omega.max)?;
        Ok(Self { omega, ..self.clone() })
    }
}

fn check_ordering<T: Real>(f1: &Profile<T>, f2: &Profile<T>) -> Result<()> {
    let n = ORDERING_CHECK_N;
    let h = T::one() / T::from_usize(n);
    let mut worst: Option<(T, [T; 2], T, T)> = None;
    for i in 0..n {
        for j in 0..n {
            let p = [T::from_usize(i) * h, T::from_usize(j) * h];
            let (a, b) = (f1.eval(p), f2.eval(p));
            let gap = b - a;
            if !(gap > T::zero()) && worst.is_none_or(|w| gap < w.0 || gap.is_nan()) {
                worst = Some((gap, p, a, b));
            }
        }
    }
    match worst {
        None => Ok(()),
        Some((_, p, a, b)) => Err(Error::Ordering {
            x1: p[0].to_f64_lossy(),
            x2: p[1].to_f64_lossy(),
            f1: a.to_f64_lossy(),
            f2: b.to_f64_lossy(),
        }),
    }
}
