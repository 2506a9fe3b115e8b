//! Periodic cell problem for the homogenized exchange density.
//!
//! For a 3×2 slope `ξ` the corrector `φ: Q_{f1,f2} → R³` minimizes
//! `∫ |ξ + ∇_{y'}φ|² + |∂_{y3}φ|²`. The integrand is a sum over the three
//! components, so each row `ζ` of `ξ` gives an independent scalar problem
//! `q(ζ) = min ∫ |(ζ, 0) + ∇ψ|²` and `g_hom(ξ) = Σ_i G ξ_i · ξ_i`.
//!
//! The cell is pulled back to `Q × [0, 1]` through `y3 = f1 + t (f2 - f1)`
//! and discretized with trilinear elements on a grid that is periodic in
//! `y'`. Element integrals use 2×2×2 Gauss points; the assembled operator is
//! a 27-point stencil. Components are solved together by one
//! Jacobi-preconditioned conjugate gradient run with shared step sizes.

use crate::error::{Error, Result};
use crate::profiles::FilmGeometry;
use crate::quadrature::gauss_legendre;
use crate::scalar::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Discretization and solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshParams {
    /// Periodic nodes per in-plane axis.
    pub n_h: usize,
    /// Vertical element layers.
    pub n_v: usize,
    /// Relative residual at which CG stops.
    pub tol: f64,
    /// Iteration cap; `None` means `10 n_h² n_v`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self { n_h: 32, n_v: 16, tol: 1e-10, max_iter: None }
    }
}

impl MeshParams {
    pub fn refined(&self) -> Self {
        Self { n_h: 2 * self.n_h, n_v: 2 * self.n_v, ..*self }
    }

    fn validate(&self) -> Result<()> {
        if self.n_h < 3 || self.n_v < 1 {
            return Err(Error::InvalidArgument("mesh needs n_h >= 3 and n_v >= 1".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument("mesh tol must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn iteration_cap(&self) -> usize {
        self.max_iter.unwrap_or(10 * self.n_h * self.n_h * self.n_v)
    }
}

const STENCIL: usize = 27;
const CHUNK: usize = 4096;

fn offset_slot(di: isize, dj: isize, dk: isize) -> usize {
    ((dk + 1) * 9 + (dj + 1) * 3 + (di + 1)) as usize
}

/// Assembled discrete cell operator for one geometry.
#[derive(Debug, Clone)]
pub struct CellMesh<T> {
    params: MeshParams,
    stencil: Vec<[T; STENCIL]>,
    /// `load[c][a] = ∫ e_c · ∇_{y'} N_a` for `c = 0, 1`.
    load: [Vec<T>; 2],
    /// `∫ N_a`, the lumped volume of each node.
    mass: Vec<T>,
    volume: T,
    f1_nodes: Vec<T>,
    thickness_nodes: Vec<T>,
}

impl<T: Real> CellMesh<T> {
    pub fn new(geom: &FilmGeometry<T>, params: &MeshParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_h;
        let nv = params.n_v;
        let nodes = n * n * (nv + 1);
        let h = T::one() / T::from_usize(n);
        let dt = T::one() / T::from_usize(nv);
        let (gx, gw) = gauss_legendre(2);
        let gx: Vec<T> = gx.into_iter().map(T::lit).collect();
        let gw: Vec<T> = gw.into_iter().map(T::lit).collect();
        let (f1, f2) = (geom.f1(), geom.f2());

        let mut f1_nodes = Vec::with_capacity(n * n);
        let mut thickness_nodes = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let p = [T::from_usize(i) * h, T::from_usize(j) * h];
                let (a, b) = (f1.eval(p), f2.eval(p));
                if !(b - a > T::zero()) {
                    return Err(Error::Ordering {
                        x1: p[0].to_f64_lossy(),
                        x2: p[1].to_f64_lossy(),
                        f1: a.to_f64_lossy(),
                        f2: b.to_f64_lossy(),
                    });
                }
                f1_nodes.push(a);
                thickness_nodes.push(b - a);
            }
        }

        let mut stencil = vec![[T::zero(); STENCIL]; nodes];
        let mut load = [vec![T::zero(); nodes], vec![T::zero(); nodes]];
        let mut mass = vec![T::zero(); nodes];
        let mut volume = T::zero();
        let idx = |i: usize, j: usize, k: usize| (k * n + j) * n + i;
        let corner = |c: usize| (c & 1, (c >> 1) & 1, (c >> 2) & 1);
        let lin = |s: T, side: usize| if side == 1 { s } else { T::one() - s };
        let dlin = |side: usize| if side == 1 { T::one() } else { -T::one() };

        for j in 0..n {
            for i in 0..n {
                // horizontal Gauss data is shared by every layer of the column
                let mut hdata = Vec::with_capacity(4);
                for (qv, wv) in gx.iter().zip(&gw) {
                    for (qu, wu) in gx.iter().zip(&gw) {
                        let p = [(T::from_usize(i) + *qu) * h, (T::from_usize(j) + *qv) * h];
                        let (a, ga) = f1.value_grad(p);
                        let (b, gb) = f2.value_grad(p);
                        let g = b - a;
                        if !(g > T::zero()) {
                            return Err(Error::Ordering {
                                x1: p[0].to_f64_lossy(),
                                x2: p[1].to_f64_lossy(),
                                f1: a.to_f64_lossy(),
                                f2: b.to_f64_lossy(),
                            });
                        }
                        let gg = [gb[0] - ga[0], gb[1] - ga[1]];
                        hdata.push((*qu, *qv, *wu * *wv, g, ga, gg));
                    }
                }
                for k in 0..nv {
                    let mut ke = [[T::zero(); 8]; 8];
                    let mut le = [[T::zero(); 8]; 2];
                    let mut me = [T::zero(); 8];
                    for &(qu, qv, wuv, g, ga, gg) in &hdata {
                        for (qw, ww) in gx.iter().zip(&gw) {
                            let t = (T::from_usize(k) + *qw) * dt;
                            let w = wuv * *ww * h * h * dt * g;
                            let s1 = (ga[0] + t * gg[0]) / g;
                            let s2 = (ga[1] + t * gg[1]) / g;
                            let mut grad = [[T::zero(); 3]; 8];
                            let mut val = [T::zero(); 8];
                            for (c, gr) in grad.iter_mut().enumerate() {
                                let (cu, cv, cw) = corner(c);
                                let (lu, lv, lw) = (lin(qu, cu), lin(qv, cv), lin(*qw, cw));
                                let du = dlin(cu) * lv * lw / h;
                                let dv = lu * dlin(cv) * lw / h;
                                let dtt = lu * lv * dlin(cw) / dt;
                                *gr = [du - s1 * dtt, dv - s2 * dtt, dtt / g];
                                val[c] = lu * lv * lw;
                            }
                            volume += w;
                            for a in 0..8 {
                                le[0][a] += w * grad[a][0];
                                le[1][a] += w * grad[a][1];
                                me[a] += w * val[a];
                                for b in 0..8 {
                                    ke[a][b] += w
                                        * (grad[a][0] * grad[b][0]
                                            + grad[a][1] * grad[b][1]
                                            + grad[a][2] * grad[b][2]);
                                }
                            }
                        }
                    }
                    for a in 0..8 {
                        let (au, av, aw) = corner(a);
                        let row = idx((i + au) % n, (j + av) % n, k + aw);
                        load[0][row] += le[0][a];
                        load[1][row] += le[1][a];
                        mass[row] += me[a];
                        for b in 0..8 {
                            let (bu, bv, bw) = corner(b);
                            let o = offset_slot(
                                bu as isize - au as isize,
                                bv as isize - av as isize,
                                bw as isize - aw as isize,
                            );
                            stencil[row][o] += ke[a][b];
                        }
                    }
                }
            }
        }
        if !volume.is_finite() || stencil.iter().any(|r| r.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("cell operator"));
        }
        Ok(Self { params: *params, stencil, load, mass, volume, f1_nodes, thickness_nodes })
    }

    pub fn params(&self) -> &MeshParams {
        &self.params
    }

    pub fn node_count(&self) -> usize {
        self.stencil.len()
    }

    /// Discrete `∫_Q (f2 - f1)`.
    pub fn volume(&self) -> T {
        self.volume
    }

    /// Grid indices `(i, j, k)` of node `a`.
    pub fn node_indices(&self, a: usize) -> (usize, usize, usize) {
        let n = self.params.n_h;
        (a % n, (a / n) % n, a / (n * n))
    }

    /// Physical position of node `a`.
    pub fn node_position(&self, a: usize) -> [T; 3] {
        let n = self.params.n_h;
        let (i, j, k) = self.node_indices(a);
        let col = j * n + i;
        let t = T::from_usize(k) / T::from_usize(self.params.n_v);
        let h = T::one() / T::from_usize(n);
        [
            T::from_usize(i) * h,
            T::from_usize(j) * h,
            self.f1_nodes[col] + t * self.thickness_nodes[col],
        ]
    }

    /// Load vector of the scalar problem with in-plane slope `ζ`.
    fn load_for(&self, zeta: [T; 2]) -> Vec<T> {
        self.load[0].iter().zip(&self.load[1]).map(|(a, b)| zeta[0] * *a + zeta[1] * *b).collect()
    }

    fn apply<const C: usize>(&self, x: &[[T; C]], y: &mut [[T; C]]) {
        let n = self.params.n_h;
        let nv = self.params.n_v;
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, out)| {
            for (off, ya) in out.iter_mut().enumerate() {
                let a = ci * CHUNK + off;
                let (i, j, k) = (a % n, (a / n) % n, a / (n * n));
                let row = &self.stencil[a];
                let mut acc = [T::zero(); C];
                for dk in -1isize..=1 {
                    let kk = k as isize + dk;
                    if kk < 0 || kk > nv as isize {
                        continue;
                    }
                    for dj in -1isize..=1 {
                        let jj = (j + n).wrapping_add_signed(dj) % n;
                        for di in -1isize..=1 {
                            let ii = (i + n).wrapping_add_signed(di) % n;
                            let s = row[offset_slot(di, dj, dk)];
                            let xb = &x[(kk as usize * n + jj) * n + ii];
                            for c in 0..C {
                                acc[c] += s * xb[c];
                            }
                        }
                    }
                }
                *ya = acc;
            }
        });
    }

    /// `|ζ|² Vol + 2 lᵀψ + ψᵀKψ` summed over components.
    fn energy_of<const C: usize>(&self, zetas: &[[T; 2]; C], psi: &[[T; C]]) -> T {
        let mut kpsi = vec![[T::zero(); C]; psi.len()];
        self.apply(psi, &mut kpsi);
        let loads: Vec<Vec<T>> = zetas.iter().map(|z| self.load_for(*z)).collect();
        let mut e = T::zero();
        for (c, z) in zetas.iter().enumerate() {
            let c0 = (z[0] * z[0] + z[1] * z[1]) * self.volume;
            let lin = chunked_sum(psi.len(), |a| loads[c][a] * psi[a][c]);
            let quad = chunked_sum(psi.len(), |a| psi[a][c] * kpsi[a][c]);
            e += c0 + T::lit(2.0) * lin + quad;
        }
        e
    }

    /// Solves `K ψ_c = -l(ζ_c)` for all components at once.
    fn solve<const C: usize>(&self, zetas: &[[T; 2]; C]) -> Result<(Vec<[T; C]>, T, usize)> {
        let nodes = self.node_count();
        let mut b = vec![[T::zero(); C]; nodes];
        for (c, z) in zetas.iter().enumerate() {
            for (a, l) in self.load_for(*z).into_iter().enumerate() {
                b[a][c] = -l;
            }
        }
        let mut x = vec![[T::zero(); C]; nodes];
        let bnorm = block_dot(&b, &b).sqrt();
        if bnorm == T::zero() {
            return Ok((x, T::zero(), 0));
        }
        let diag: Vec<T> = self.stencil.iter().map(|r| T::one() / r[offset_slot(0, 0, 0)]).collect();
        let tol = T::lit(self.params.tol);
        let cap = self.params.iteration_cap();

        let mut r = b;
        remove_mean(&mut r);
        let mut z: Vec<[T; C]> = r.iter().zip(&diag).map(|(ri, d)| ri.map(|v| v * *d)).collect();
        let mut p = z.clone();
        let mut q = vec![[T::zero(); C]; nodes];
        let mut rz = block_dot(&r, &z);
        let mut rel = block_dot(&r, &r).sqrt() / bnorm;
        let mut it = 0;
        while rel > tol && it < cap {
            self.apply(&p, &mut q);
            let pq = block_dot(&p, &q);
            if !(pq > T::zero()) {
                break;
            }
            let alpha = rz / pq;
            for a in 0..nodes {
                for c in 0..C {
                    x[a][c] += alpha * p[a][c];
                    r[a][c] -= alpha * q[a][c];
                }
            }
            remove_mean(&mut r);
            for a in 0..nodes {
                z[a] = r[a].map(|v| v * diag[a]);
            }
            let rz_new = block_dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for a in 0..nodes {
                for c in 0..C {
                    p[a][c] = z[a][c] + beta * p[a][c];
                }
            }
            rel = block_dot(&r, &r).sqrt() / bnorm;
            it += 1;
            if !rel.is_finite() {
                return Err(Error::NonFinite("cell solver residual"));
            }
        }
        if rel > tol {
            return Err(Error::NotConverged { residual: rel.to_f64_lossy(), iterations: it });
        }
        // volume-weighted mean zero
        for c in 0..C {
            let m = chunked_sum(nodes, |a| self.mass[a] * x[a][c]) / self.volume;
            for xa in x.iter_mut() {
                xa[c] -= m;
            }
        }
        Ok((x, rel, it))
    }

    /// Volume-weighted mean of one component of a nodal field.
    pub fn mean(&self, field: &[[T; 3]], c: usize) -> T {
        chunked_sum(field.len(), |a| self.mass[a] * field[a][c]) / self.volume
    }
}

fn chunked_sum<T: Real>(len: usize, f: impl Fn(usize) -> T + Sync) -> T {
    let parts: Vec<T> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut s = T::zero();
            for a in c * CHUNK..((c + 1) * CHUNK).min(len) {
                s += f(a);
            }
            s
        })
        .collect();
    parts.into_iter().fold(T::zero(), |a, b| a + b)
}

fn block_dot<T: Real, const C: usize>(u: &[[T; C]], v: &[[T; C]]) -> T {
    chunked_sum(u.len(), |a| {
        let mut s = T::zero();
        for c in 0..C {
            s += u[a][c] * v[a][c];
        }
        s
    })
}

fn remove_mean<T: Real, const C: usize>(r: &mut [[T; C]]) {
    let len = T::from_usize(r.len());
    for c in 0..C {
        let m = chunked_sum(r.len(), |a| r[a][c]) / len;
        for ra in r.iter_mut() {
            ra[c] -= m;
        }
    }
}

/// Rows of `ξ` are the in-plane gradients of the three components.
pub type Slope<T> = [[T; 2]; 3];

#[derive(Debug, Clone)]
pub struct CellSolution<T> {
    pub xi: Slope<T>,
    /// Corrector per mesh node, volume-weighted mean zero.
    pub phi: Vec<[T; 3]>,
    pub energy: T,
    pub residual: T,
    pub iterations: usize,
}

/// Direct minimization for a full 3×2 slope.
pub fn solve_cell<T: Real>(
    geom: &FilmGeometry<T>,
    params: &MeshParams,
    xi: Slope<T>,
) -> Result<CellSolution<T>> {
    solve_cell_on(&CellMesh::new(geom, params)?, xi)
}

pub fn solve_cell_on<T: Real>(mesh: &CellMesh<T>, xi: Slope<T>) -> Result<CellSolution<T>> {
    if xi.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("xi must be finite".into()));
    }
    let (phi, residual, iterations) = mesh.solve(&xi)?;
    let energy = mesh.energy_of(&xi, &phi);
    Ok(CellSolution { xi, phi, energy, residual, iterations })
}

/// Scalar cell energy `q(ζ)` for one row.
pub fn row_energy<T: Real>(mesh: &CellMesh<T>, zeta: [T; 2]) -> Result<(T, T)> {
    let (psi, residual, _) = mesh.solve(&[zeta])?;
    Ok((mesh.energy_of(&[zeta], &psi), residual))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeTensor<T> {
    pub g: [[T; 2]; 2],
    /// `q(1,0)`, `q(0,1)`, `q(1,1)`.
    pub basis_energies: [T; 3],
    pub residuals: [T; 3],
    pub volume: T,
}

impl<T: Real> ExchangeTensor<T> {
    pub fn from_basis_energies(e: [T; 3], residuals: [T; 3], volume: T) -> Self {
        let g12 = (e[2] - e[0] - e[1]) * T::lit(0.5);
        Self { g: [[e[0], g12], [g12, e[1]]], basis_energies: e, residuals, volume }
    }

    /// `G ζ · ζ`.
    pub fn row_form(&self, z: [T; 2]) -> T {
        let g = &self.g;
        z[0] * (g[0][0] * z[0] + g[0][1] * z[1]) + z[1] * (g[1][0] * z[0] + g[1][1] * z[1])
    }

    /// `Σ_i G ξ_i · ξ_i`.
    pub fn energy(&self, xi: &Slope<T>) -> T {
        xi.iter().map(|z| self.row_form(*z)).fold(T::zero(), |a, b| a + b)
    }

    /// Eigenvalues of `G`, ascending.
    pub fn eigenvalues(&self) -> [T; 2] {
        let g = &self.g;
        let m = (g[0][0] + g[1][1]) * T::lit(0.5);
        let d = ((g[0][0] - g[1][1]) * T::lit(0.5)).hypot(g[0][1]);
        [m - d, m + d]
    }
}

pub fn exchange_tensor<T: Real>(geom: &FilmGeometry<T>, params: &MeshParams) -> Result<ExchangeTensor<T>> {
    exchange_tensor_on(&CellMesh::new(geom, params)?)
}

pub fn exchange_tensor_on<T: Real>(mesh: &CellMesh<T>) -> Result<ExchangeTensor<T>> {
    let (o, z) = (T::one(), T::zero());
    let basis = [[o, z], [z, o], [o, o]];
    let mut e = [z; 3];
    let mut res = [z; 3];
    for (k, zeta) in basis.iter().enumerate() {
        let (ek, rk) = row_energy(mesh, *zeta)?;
        e[k] = ek;
        res[k] = rk;
    }
    Ok(ExchangeTensor::from_basis_energies(e, res, mesh.volume()))
}
