//! Small fixed-size vectors and matrices, plus a symmetric 3×3 eigensolver.

use crate::scalar::Real;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

pub type Vec2<T> = [T; 2];
pub type Vec3<T> = [T; 3];

#[inline]
pub fn dot3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm3<T: Real>(a: &Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

/// Dense 3×3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Real> Mat3<T> {
    pub fn zeros() -> Self {
        Mat3([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diag([T::one(); 3])
    }

    pub fn diag(d: Vec3<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn outer(a: &Vec3<T>, b: &Vec3<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = a[i] * b[j];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn sym(&self) -> Self {
        (*self + self.transpose()) * T::lit(0.5)
    }

    pub fn scale(&self, s: T) -> Self {
        *self * s
    }

    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        [dot3(&self.0[0], v), dot3(&self.0[1], v), dot3(&self.0[2], v)]
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = T::zero();
                for k in 0..3 {
                    s += self.0[i][k] * o.0[k][j];
                }
                m.0[i][j] = s;
            }
        }
        m
    }

    /// `A v · v`.
    pub fn quad_form(&self, v: &Vec3<T>) -> T {
        dot3(&self.mul_vec(v), v)
    }

    pub fn frobenius(&self) -> T {
        self.0.iter().flatten().map(|x| *x * *x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |a, x| a.max(x.abs()))
    }

    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn column(&self, j: usize) -> Vec3<T> {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn to_f64(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.0[i][j].to_f64_lossy();
            }
        }
        out
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl<T: Real> AddAssign for Mat3<T> {
    fn add_assign(&mut self, o: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Real> Neg for Mat3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self * (-T::one())
    }
}

impl<T: Real> Mul<T> for Mat3<T> {
    type Output = Self;
    fn mul(mut self, s: T) -> Self {
        for row in self.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        self
    }
}

impl<T> Index<(usize, usize)> for Mat3<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.0[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat3<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.0[i][j]
    }
}

/// Eigen-decomposition of a symmetric 3×3 matrix.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen<T> {
    /// Ascending.
    pub values: Vec3<T>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: [Vec3<T>; 3],
}

/// Cyclic Jacobi rotations; only the upper triangle of `a` is read.
pub fn sym_eigen<T: Real>(a: &Mat3<T>) -> SymEigen<T> {
    let mut m = a.sym();
    let mut v = Mat3::<T>::identity();
    let tiny = T::epsilon() * T::epsilon();
    for _sweep in 0..64 {
        let off = m[(0, 1)] * m[(0, 1)] + m[(0, 2)] * m[(0, 2)] + m[(1, 2)] * m[(1, 2)];
        let diag = m[(0, 0)] * m[(0, 0)] + m[(1, 1)] * m[(1, 1)] + m[(2, 2)] * m[(2, 2)];
        if off <= tiny * diag || off == T::zero() {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = m[(p, q)];
            if apq == T::zero() {
                continue;
            }
            let theta = (m[(q, q)] - m[(p, p)]) / (T::lit(2.0) * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            // m <- Jᵀ m J with J the (p,q) rotation
            for k in 0..3 {
                let mkp = m[(k, p)];
                let mkq = m[(k, q)];
                m[(k, p)] = c * mkp - s * mkq;
                m[(k, q)] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[(p, k)];
                let mqk = m[(q, k)];
                m[(p, k)] = c * mpk - s * mqk;
                m[(q, k)] = s * mpk + c * mqk;
            }
            for k in 0..3 {
                let vkp = v[(k, p)];
                let vkq = v[(k, q)];
                v[(k, p)] = c * vkp - s * vkq;
                v[(k, q)] = s * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = [m[(order[0], order[0])], m[(order[1], order[1])], m[(order[2], order[2])]];
    let vectors = [v.column(order[0]), v.column(order[1]), v.column(order[2])];
    SymEigen { values, vectors }
}
