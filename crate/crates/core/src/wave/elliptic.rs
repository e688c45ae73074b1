//! The flattened operator `L^eta` in the variables `(t, z)`, its dense
//! factorization, and a right-preconditioned GMRES for nearby surfaces.
//!
//! With `t = s^2` the axisymmetric contractions become
//! `f_yy = 4t f_tt + 8 f_t`, `y.f_y = 2t f_t`, `y.f_yz = 2t f_tz` and
//! `y y : f_yy = 4t^2 f_tt + 2t f_t`, so
//! `L f = f_zz + D^-2 [(4t + 4t^2 e^2) f_tt + (8 + 6t e^2 - 2t D eta_zz) f_t - 4 D e t f_tz]`
//! with `D = d + eta` and `e = eta_z`.

use super::grid::Discretization;
use super::WaveError;
use nalgebra::{DMatrix, DVector};

/// Surface data at the z-nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub eta_modes: Vec<f64>,
    pub big_d: Vec<f64>,
    pub e: Vec<f64>,
    pub ezz: Vec<f64>,
}

impl Geometry {
    pub fn new(grid: &Discretization, d: f64, eta: &[f64], eps_dom: f64) -> Result<Self, WaveError> {
        let (e0, e, ezz) = grid.eta_nodal(eta);
        let big_d: Vec<f64> = e0.iter().map(|v| d + v).collect();
        let min = grid.min_radius(d, eta).min(big_d.iter().copied().fold(f64::INFINITY, f64::min));
        if !(min >= eps_dom) {
            return Err(WaveError::DomainCollapse(min));
        }
        Ok(Self {
            eta_modes: eta.to_vec(),
            big_d,
            e,
            ezz,
        })
    }

    fn coefficients(&self, t: f64, j: usize) -> (f64, f64, f64) {
        let (dd, e, ezz) = (self.big_d[j], self.e[j], self.ezz[j]);
        let inv = 1.0 / (dd * dd);
        (
            inv * (4.0 * t + 4.0 * t * t * e * e),
            inv * (8.0 + 6.0 * t * e * e - 2.0 * t * dd * ezz),
            -inv * 4.0 * dd * e * t,
        )
    }
}

/// `L^eta f` on the full grid; `f` is `n_s x n_z`.
pub fn apply_operator(grid: &Discretization, geo: &Geometry, f: &DMatrix<f64>) -> DMatrix<f64> {
    let ft = &grid.dt * f;
    let ftt = &grid.dtt * f;
    let fzz = f * grid.dzz.transpose();
    let ftz = &ft * grid.dz.transpose();
    DMatrix::from_fn(grid.n_s, grid.n_z, |i, j| {
        let (a, b, c) = geo.coefficients(grid.t[i], j);
        fzz[(i, j)] + a * ftt[(i, j)] + b * ft[(i, j)] + c * ftz[(i, j)]
    })
}

/// Restriction of `L^eta` to fields vanishing on `t = 1`.
pub fn assemble(grid: &Discretization, geo: &Geometry) -> DMatrix<f64> {
    let (ns, nz) = (grid.n_s - 1, grid.n_z);
    let n = grid.n_phi();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..ns {
        let t = grid.t[i];
        for j in 0..nz {
            let row = grid.idx(i, j);
            let (a, b, c) = geo.coefficients(t, j);
            for l in 0..nz {
                m[(row, grid.idx(i, l))] += grid.dzz[(j, l)];
            }
            for k in 0..ns {
                m[(row, grid.idx(k, j))] += a * grid.dtt[(i, k)] + b * grid.dt[(i, k)];
                if c != 0.0 {
                    let ck = c * grid.dt[(i, k)];
                    for l in 0..nz {
                        m[(row, grid.idx(k, l))] += ck * grid.dz[(j, l)];
                    }
                }
            }
        }
    }
    m
}

/// Interior vector to full grid with the Dirichlet row set to zero.
pub fn pad(grid: &Discretization, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(grid.n_s, grid.n_z, |i, j| {
        if i + 1 == grid.n_s {
            0.0
        } else {
            v[grid.idx(i, j)]
        }
    })
}

pub fn interior(grid: &Discretization, f: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.n_phi());
    for i in 0..grid.n_s - 1 {
        for j in 0..grid.n_z {
            out.push(f[(i, j)]);
        }
    }
    out
}

/// Dense LU of `L^eta` for one surface.
#[derive(Debug, Clone)]
pub struct EllipticSolver {
    pub geometry: Geometry,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl EllipticSolver {
    pub fn new(grid: &Discretization, geometry: Geometry) -> Result<Self, WaveError> {
        let m = assemble(grid, &geometry);
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(WaveError::LinearSolveFailure("singular elliptic operator".into()));
        }
        Ok(Self { geometry, lu })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, WaveError> {
        let b = DVector::from_column_slice(rhs);
        let x = self
            .lu
            .solve(&b)
            .ok_or_else(|| WaveError::LinearSolveFailure("LU solve".into()))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(WaveError::LinearSolveFailure("non-finite solution".into()));
        }
        Ok(x.as_slice().to_vec())
    }

    /// Solves with the operator of `geo`, preconditioned by this factorization.
    pub fn solve_nearby(
        &self,
        grid: &Discretization,
        geo: &Geometry,
        rhs: &[f64],
    ) -> Result<Vec<f64>, WaveError> {
        if *geo == self.geometry {
            return self.solve(rhs);
        }
        let apply = |v: &DVector<f64>| -> DVector<f64> {
            let f = apply_operator(grid, geo, &pad(grid, v.as_slice()));
            DVector::from_vec(interior(grid, &f))
        };
        let precond = |v: &DVector<f64>| -> DVector<f64> {
            self.lu.solve(v).unwrap_or_else(|| v.clone())
        };
        let b = DVector::from_column_slice(rhs);
        let x = gmres(apply, precond, &b, 1e-14, 60)?;
        Ok(x.as_slice().to_vec())
    }
}

/// Right-preconditioned GMRES without restarts, started from zero.
pub fn gmres<A, P>(apply: A, precond: P, b: &DVector<f64>, rtol: f64, max_iter: usize) -> Result<DVector<f64>, WaveError>
where
    A: Fn(&DVector<f64>) -> DVector<f64>,
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = b.len();
    let beta = b.norm();
    if beta == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let mut v: Vec<DVector<f64>> = vec![b / beta];
    let mut h = DMatrix::<f64>::zeros(max_iter + 1, max_iter);
    let mut cs = vec![0.0; max_iter];
    let mut sn = vec![0.0; max_iter];
    let mut g = DVector::<f64>::zeros(max_iter + 1);
    g[0] = beta;
    let mut k_used = 0;
    for k in 0..max_iter {
        let mut w = apply(&precond(&v[k]));
        for (i, vi) in v.iter().enumerate() {
            h[(i, k)] = w.dot(vi);
            w -= vi * h[(i, k)];
        }
        // second pass keeps the basis orthogonal near convergence
        for (i, vi) in v.iter().enumerate() {
            let c = w.dot(vi);
            h[(i, k)] += c;
            w -= vi * c;
        }
        h[(k + 1, k)] = w.norm();
        for i in 0..k {
            let tmp = cs[i] * h[(i, k)] + sn[i] * h[(i + 1, k)];
            h[(i + 1, k)] = -sn[i] * h[(i, k)] + cs[i] * h[(i + 1, k)];
            h[(i, k)] = tmp;
        }
        let r = h[(k, k)].hypot(h[(k + 1, k)]);
        cs[k] = h[(k, k)] / r;
        sn[k] = h[(k + 1, k)] / r;
        h[(k, k)] = r;
        h[(k + 1, k)] = 0.0;
        g[k + 1] = -sn[k] * g[k];
        g[k] *= cs[k];
        k_used = k + 1;
        if g[k + 1].abs() <= rtol * beta {
            break;
        }
        let nw = w.norm();
        if nw == 0.0 {
            break;
        }
        v.push(w / nw);
    }
    if g[k_used].abs() > 1e3 * rtol * beta {
        return Err(WaveError::LinearSolveFailure(format!(
            "GMRES stalled at relative residual {:.3e}",
            g[k_used].abs() / beta
        )));
    }
    let mut y = DVector::<f64>::zeros(k_used);
    for i in (0..k_used).rev() {
        let mut acc = g[i];
        for j in i + 1..k_used {
            acc -= h[(i, j)] * y[j];
        }
        y[i] = acc / h[(i, i)];
    }
    let mut u = DVector::<f64>::zeros(n);
    for (i, yi) in y.iter().enumerate() {
        u += &v[i] * *yi;
    }
    Ok(precond(&u))
}
