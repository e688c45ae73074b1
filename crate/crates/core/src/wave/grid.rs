//! Tensor grid: Chebyshev–Lobatto nodes in `t = s^2` and cosine collocation
//! in `z` on the half period `[0, L/2]`.

use crate::quadrature::{diff_matrix, lobatto_nodes};
use nalgebra::DMatrix;
use std::f64::consts::PI;

use super::WaveError;

#[derive(Debug, Clone)]
pub struct Discretization {
    pub n_s: usize,
    pub n_z: usize,
    pub nu: f64,
    pub period: f64,
    /// Radial nodes in `t = s^2`, `t[0] = 0`, `t[n_s - 1] = 1`.
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    /// Midpoint nodes `z_j = (j + 1/2) L / (2 n_z)`.
    pub z: Vec<f64>,
    pub dt: DMatrix<f64>,
    pub dtt: DMatrix<f64>,
    /// Values to values of the z-derivative (odd output).
    pub dz: DMatrix<f64>,
    pub dzz: DMatrix<f64>,
    cos: DMatrix<f64>,
    to_modes: DMatrix<f64>,
}

impl Discretization {
    pub fn new(n_s: usize, n_z: usize, nu: f64) -> Result<Self, WaveError> {
        if n_s < 4 || n_z < 4 {
            return Err(WaveError::InvalidGrid(format!("n_s={n_s}, n_z={n_z}; both must be >= 4")));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(WaveError::InvalidGrid(format!("nu={nu}")));
        }
        let period = 2.0 * PI / nu;
        let t = lobatto_nodes(n_s);
        let s = t.iter().map(|v| v.sqrt()).collect();
        let nzf = n_z as f64;
        let z: Vec<f64> = (0..n_z).map(|j| (j as f64 + 0.5) * PI / (nu * nzf)).collect();
        let dt = diff_matrix(n_s);
        let dtt = &dt * &dt;
        let kn = |k: usize| k as f64 * nu;
        let cos = DMatrix::from_fn(n_z, n_z, |j, k| (kn(k) * z[j]).cos());
        let to_modes = DMatrix::from_fn(n_z, n_z, |k, j| {
            let w = if k == 0 { 1.0 } else { 2.0 };
            w / nzf * (kn(k) * z[j]).cos()
        });
        let dsin = DMatrix::from_fn(n_z, n_z, |j, k| -kn(k) * (kn(k) * z[j]).sin());
        let dcos2 = DMatrix::from_fn(n_z, n_z, |j, k| -kn(k).powi(2) * (kn(k) * z[j]).cos());
        let dz = &dsin * &to_modes;
        let dzz = &dcos2 * &to_modes;
        Ok(Self {
            n_s,
            n_z,
            nu,
            period,
            t,
            s,
            z,
            dt,
            dtt,
            dz,
            dzz,
            cos,
            to_modes,
        })
    }

    /// Interior unknowns: all rows except the Dirichlet row `t = 1`.
    pub fn n_phi(&self) -> usize {
        (self.n_s - 1) * self.n_z
    }

    /// Zero-mean cosine modes `1..n_z`.
    pub fn n_eta(&self) -> usize {
        self.n_z - 1
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_z + j
    }

    /// Cosine coefficients `0..n_z` of nodal values.
    pub fn modes(&self, values: &[f64]) -> Vec<f64> {
        (0..self.n_z)
            .map(|k| (0..self.n_z).map(|j| self.to_modes[(k, j)] * values[j]).sum())
            .collect()
    }

    pub fn values(&self, modes: &[f64]) -> Vec<f64> {
        (0..self.n_z)
            .map(|j| (0..modes.len()).map(|k| self.cos[(j, k)] * modes[k]).sum())
            .collect()
    }

    /// Period average.
    pub fn average(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / self.n_z as f64
    }

    /// Zero-mean projection of nodal values.
    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        let a = self.average(values);
        values.iter().map(|v| v - a).collect()
    }

    /// Inverse second derivative: nodal values to zero-mean modes `1..n_z`.
    pub fn inv_dzz(&self, values: &[f64]) -> Vec<f64> {
        let m = self.modes(values);
        (1..self.n_z)
            .map(|k| -m[k] / (k as f64 * self.nu).powi(2))
            .collect()
    }

    /// `(eta, eta_z, eta_zz)` at the z-nodes from zero-mean modes.
    pub fn eta_nodal(&self, eta: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut e0 = vec![0.0; self.n_z];
        let mut e1 = vec![0.0; self.n_z];
        let mut e2 = vec![0.0; self.n_z];
        for (j, &zj) in self.z.iter().enumerate() {
            for (m, &a) in eta.iter().enumerate() {
                let kn = (m + 1) as f64 * self.nu;
                let (sn, cs) = (kn * zj).sin_cos();
                e0[j] += a * cs;
                e1[j] -= a * kn * sn;
                e2[j] -= a * kn * kn * cs;
            }
        }
        (e0, e1, e2)
    }

    /// Evaluates zero-mean modes at arbitrary `z`.
    pub fn eta_at(eta: &[f64], nu: f64, z: f64) -> (f64, f64, f64) {
        let mut out = (0.0, 0.0, 0.0);
        for (m, &a) in eta.iter().enumerate() {
            let kn = (m + 1) as f64 * nu;
            let (sn, cs) = (kn * z).sin_cos();
            out.0 += a * cs;
            out.1 -= a * kn * sn;
            out.2 -= a * kn * kn * cs;
        }
        out
    }

    /// Minimum of `d + eta` on a grid four times finer than the nodes.
    pub fn min_radius(&self, d: f64, eta: &[f64]) -> f64 {
        let n = 4 * self.n_z;
        (0..=n)
            .map(|j| d + Self::eta_at(eta, self.nu, j as f64 * self.period / (2.0 * n as f64)).0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Half-period shift `z -> z + L/2` on zero-mean modes.
    pub fn mirror_modes(eta: &[f64]) -> Vec<f64> {
        eta.iter()
            .enumerate()
            .map(|(m, &a)| if (m + 1) % 2 == 1 { -a } else { a })
            .collect()
    }

    /// Half-period shift of a nodal field, row by row.
    pub fn mirror_field(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = f.clone();
        for i in 0..f.nrows() {
            let row: Vec<f64> = (0..self.n_z).map(|j| f[(i, j)]).collect();
            let mut m = self.modes(&row);
            for (k, v) in m.iter_mut().enumerate() {
                if k % 2 == 1 {
                    *v = -*v;
                }
            }
            for (j, v) in self.values(&m).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_second_derivative_round_trip() {
        let g = Discretization::new(6, 12, 1.7).unwrap();
        let modes: Vec<f64> = (1..12).map(|k| 1.0 / (k * k) as f64).collect();
        let (_, _, ezz) = g.eta_nodal(&modes);
        let back = g.inv_dzz(&ezz);
        for (a, b) in modes.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let g = Discretization::new(5, 8, 2.0).unwrap();
        let v: Vec<f64> = g.z.iter().map(|z| 3.0 + z.cos() + (2.0 * z).sin()).collect();
        let p = g.project(&v);
        let pp = g.project(&p);
        assert!(g.average(&p).abs() < 1e-14);
        for (a, b) in p.iter().zip(&pp) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn z_derivatives_exact_on_modes() {
        let g = Discretization::new(5, 10, 2.0).unwrap();
        let f: Vec<f64> = g.z.iter().map(|z| (6.0 * z).cos() + 0.5).collect();
        for j in 0..10 {
            let fz: f64 = (0..10).map(|l| g.dz[(j, l)] * f[l]).sum();
            let fzz: f64 = (0..10).map(|l| g.dzz[(j, l)] * f[l]).sum();
            assert!((fz + 6.0 * (6.0 * g.z[j]).sin()).abs() < 1e-12);
            assert!((fzz + 36.0 * (6.0 * g.z[j]).cos()).abs() < 1e-11);
        }
    }

    #[test]
    fn mirror_is_half_period_shift() {
        let g = Discretization::new(4, 8, 1.0).unwrap();
        let eta = vec![0.3, -0.2, 0.1, 0.05, 0.0, 0.0, 0.0];
        let m = Discretization::mirror_modes(&eta);
        for z in [0.1, 0.7, 2.0] {
            let a = Discretization::eta_at(&eta, 1.0, z + g.period / 2.0).0;
            let b = Discretization::eta_at(&m, 1.0, z).0;
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Discretization::new(3, 8, 1.0).is_err());
        assert!(Discretization::new(8, 2, 1.0).is_err());
    }
}
