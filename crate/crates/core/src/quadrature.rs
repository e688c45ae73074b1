//! Chebyshev–Lobatto nodes on `[0, 1]`, their differentiation and
//! interpolation matrices, and Gauss–Legendre / Clenshaw–Curtis rules.

use nalgebra::DMatrix;
use std::f64::consts::PI;

/// `t_j = (1 - cos(pi j / (n-1))) / 2`, so `t_0 = 0` and `t_{n-1} = 1`.
pub fn lobatto_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let m = (n - 1) as f64;
    (0..n)
        .map(|j| {
            if 2 * j == n - 1 {
                0.5
            } else {
                0.5 * (1.0 - (PI * j as f64 / m).cos())
            }
        })
        .collect()
}

fn bary_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Differentiation matrix in `t` on [`lobatto_nodes`].
pub fn diff_matrix(n: usize) -> DMatrix<f64> {
    let t = lobatto_nodes(n);
    let w = bary_weights(n);
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (t[i] - t[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        // Negative-sum trick keeps D * 1 = 0 to roundoff.
        d[(i, i)] = diag;
    }
    d
}

/// Rows evaluate the nodal interpolant at the points `x`.
pub fn interp_matrix(n: usize, x: &[f64]) -> DMatrix<f64> {
    let t = lobatto_nodes(n);
    let w = bary_weights(n);
    let mut e = DMatrix::zeros(x.len(), n);
    for (r, &xr) in x.iter().enumerate() {
        if let Some(j) = t.iter().position(|&tj| tj == xr) {
            e[(r, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..n).map(|j| w[j] / (xr - t[j])).collect();
        let sum: f64 = terms.iter().sum();
        for j in 0..n {
            e[(r, j)] = terms[j] / sum;
        }
    }
    e
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Clenshaw–Curtis weights on [`lobatto_nodes`].
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let m = n - 1;
    let mf = m as f64;
    let mut w = vec![0.0; n];
    for (j, wj) in w.iter_mut().enumerate() {
        let th = PI * j as f64 / mf;
        let mut v = 1.0;
        let half = m / 2;
        for k in 1..=half {
            let b = if 2 * k == m { 1.0 } else { 2.0 };
            v -= b * (2.0 * k as f64 * th).cos() / (4.0 * (k * k) as f64 - 1.0);
        }
        let c = if j == 0 || j == m { 1.0 } else { 2.0 };
        *wj = c * v / mf * 0.5;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiation_is_exact_for_polynomials() {
        let n = 12;
        let t = lobatto_nodes(n);
        let d = diff_matrix(n);
        let f: Vec<f64> = t.iter().map(|x| x.powi(7) - 3.0 * x * x).collect();
        for i in 0..n {
            let df: f64 = (0..n).map(|j| d[(i, j)] * f[j]).sum();
            let want = 7.0 * t[i].powi(6) - 6.0 * t[i];
            assert!((df - want).abs() < 1e-11, "i={i}");
        }
    }

    #[test]
    fn interpolation_is_exact_for_polynomials() {
        let n = 9;
        let t = lobatto_nodes(n);
        let x = [0.0, 0.013, 0.5, 0.77, 1.0];
        let e = interp_matrix(n, &x);
        let vals: Vec<f64> = t.iter().map(|v| v.powi(8) + v).collect();
        for (r, &xr) in x.iter().enumerate() {
            let p: f64 = (0..n).map(|j| e[(r, j)] * vals[j]).sum();
            assert!((p - (xr.powi(8) + xr)).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_integrates_high_degree() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(19)).sum();
        assert!((s - 1.0 / 20.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials() {
        for n in [9, 10, 33] {
            let t = lobatto_nodes(n);
            let w = clenshaw_curtis(n);
            let s: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(5)).sum();
            assert!((s - 1.0 / 6.0).abs() < 1e-14, "n={n}");
        }
        let t = lobatto_nodes(40);
        let w = clenshaw_curtis(40);
        let s: f64 = t.iter().zip(&w).map(|(t, w)| w * t.exp()).sum();
        assert!((s - (1f64.exp() - 1.0)).abs() < 1e-14);
    }
}
