//! Finite-dimensional approximation of the operator `K`: the singular
//! Sturm–Liouville problem `-d^-2 s^-3 (s^3 phi')' + q phi = mu phi` with the
//! eigenvalue-dependent condition `-g phi'(1) - h phi(1) = mu phi(1)`.
//!
//! The pencil is a Galerkin discretization in `t = s^2` on a nodal polynomial
//! basis. Polynomials in `t` are even in `s`, so regularity at the axis is
//! built into the basis, and the companion unknown `b = phi(1)` is the last
//! nodal value.

use crate::dispersion::{self, DispersionError, DispersionValue};
use crate::output::write_json;
use crate::quadrature::{diff_matrix, gauss_legendre, interp_matrix, lobatto_nodes};
use crate::roots;
use crate::ode::Tolerances;
use crate::trivial_flow::{boundary_coefficients, solve_trivial_with, TrivialFlowError, TrivialFlowProfile};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("surface speed vanishes; the boundary weight g is zero")]
    DegenerateSurfaceSpeed,
    #[error("grid size {0} is below the minimum of 16")]
    GridTooSmall(usize),
    #[error("eigensolver breakdown: {0}")]
    EigensolveFailure(String),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
}

impl From<TrivialFlowError> for SpectralError {
    fn from(e: TrivialFlowError) -> Self {
        match e {
            TrivialFlowError::DegenerateSurfaceSpeed => Self::DegenerateSurfaceSpeed,
            other => Self::Dispersion(other.into()),
        }
    }
}

pub const DEFAULT_N: usize = 40;
pub const RESIDUAL_FILTER: f64 = 1e-8;

/// `S u = mu M u` over nodal values of `phi` in `t`; the last node is `t = 1`.
#[derive(Debug, Clone)]
pub struct MatrixPencil {
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    /// Nodes in `t = s^2`.
    pub t_nodes: Vec<f64>,
    pub g: f64,
    pub h: f64,
    pub d: f64,
}

impl MatrixPencil {
    pub fn size(&self) -> usize {
        self.t_nodes.len()
    }

    /// `[K u, u] = u^T S u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let v = DVector::from_column_slice(u);
        (v.transpose() * &self.stiffness * &v)[(0, 0)]
    }

    /// Indefinite inner product `[u, u] = u^T M u`.
    pub fn indefinite_norm(&self, u: &[f64]) -> f64 {
        let v = DVector::from_column_slice(u);
        (v.transpose() * &self.mass * &v)[(0, 0)]
    }
}

pub fn build_operator_k(profile: &TrivialFlowProfile, n: usize) -> Result<MatrixPencil, SpectralError> {
    if n < 16 {
        return Err(SpectralError::GridTooSmall(n));
    }
    let (g, h) = boundary_coefficients(profile)?;
    let d = profile.model.params.d;
    let d2 = d * d;
    let (xq, wq) = gauss_legendre(2 * n + 16);
    let e = interp_matrix(n, &xq);
    let ed = &e * diff_matrix(n);
    let q: Vec<f64> = xq.iter().map(|&t| profile.q(t.sqrt())).collect();
    let mut stiff = DMatrix::zeros(n, n);
    let mut mass = DMatrix::zeros(n, n);
    for (k, (&t, &w)) in xq.iter().zip(&wq).enumerate() {
        let a = 2.0 * t * t * w;
        let bq = 0.5 * d2 * t * q[k] * w;
        let bm = 0.5 * d2 * t * w;
        for i in 0..n {
            let (ei, edi) = (e[(k, i)], ed[(k, i)]);
            for j in 0..n {
                stiff[(i, j)] += a * edi * ed[(k, j)] + bq * ei * e[(k, j)];
                mass[(i, j)] += bm * ei * e[(k, j)];
            }
        }
    }
    stiff[(n - 1, n - 1)] += h / g;
    mass[(n - 1, n - 1)] -= 1.0 / g;
    Ok(MatrixPencil {
        stiffness: stiff,
        mass,
        t_nodes: lobatto_nodes(n),
        g,
        h,
        d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

impl Eigenvalue {
    pub fn is_real(&self) -> bool {
        self.im.abs() <= 1e-10 * (1.0 + self.re.abs())
    }
}

#[derive(Debug, Clone)]
pub struct Eigenvector {
    /// `phi` at the `t` nodes.
    pub phi: Vec<Complex64>,
    /// Companion value `b = phi(1)`.
    pub b: Complex64,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Eigenvalue>,
    pub eigenvectors: Vec<Eigenvector>,
    pub n_below_threshold: usize,
    pub n_nonreal: usize,
    pub threshold: f64,
    /// Eigenvalues discarded by the residual filter.
    pub n_filtered: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub threshold: f64,
    pub eigenvalues: Vec<Eigenvalue>,
    pub n_below_threshold: usize,
    pub n_nonreal: usize,
}

impl SpectrumResult {
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().filter(|e| e.is_real()).map(|e| e.re).collect()
    }

    pub fn all_real(&self) -> bool {
        self.n_nonreal == 0
    }

    /// Smallest distance between distinct reported eigenvalues.
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (i, a) in self.eigenvalues.iter().enumerate() {
            for b in &self.eigenvalues[i + 1..] {
                gap = gap.min(Complex64::new(a.re - b.re, a.im - b.im).norm());
            }
        }
        gap
    }

    pub fn report(&self) -> SpectrumReport {
        SpectrumReport {
            threshold: self.threshold,
            eigenvalues: self.eigenvalues.clone(),
            n_below_threshold: self.n_below_threshold,
            n_nonreal: self.n_nonreal,
        }
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        write_json(path, &self.report())
    }
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Rayleigh-quotient polishing of one eigenpair of the symmetric pencil.
fn polish(
    s: &DMatrix<Complex64>,
    m: &DMatrix<Complex64>,
    mu0: Complex64,
    scale: f64,
) -> Option<(Complex64, DVector<Complex64>)> {
    let n = s.nrows();
    let mut mu = mu0;
    let mut u = DVector::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..4 {
        let mut next = None;
        for rel in [1e-12, 1e-9, 1e-6] {
            let shift = mu + Complex64::new(rel * scale, 0.0);
            if let Some(v) = (s - m * shift).lu().solve(&u) {
                let norm = v.norm();
                if norm.is_finite() && norm > 0.0 {
                    next = Some(v / Complex64::new(norm, 0.0));
                    break;
                }
            }
        }
        u = next?;
        // uT S u / uT M u is stationary for complex-symmetric pencils.
        let num = (u.transpose() * s * &u)[(0, 0)];
        let den = (u.transpose() * m * &u)[(0, 0)];
        if den.norm() < 1e-300 {
            break;
        }
        let next_mu = num / den;
        if (next_mu - mu).norm() > 1e-3 * (1.0 + mu.norm()) {
            // stay on the Schur estimate if the quotient jumps to another pair
            break;
        }
        mu = next_mu;
    }
    Some((mu, u))
}

pub fn compute_spectrum(
    pencil: &MatrixPencil,
    q_minus_sup: f64,
) -> Result<SpectrumResult, SpectralError> {
    let n = pencil.size();
    let lu = pencil.mass.clone().lu();
    let a = lu
        .solve(&pencil.stiffness)
        .ok_or_else(|| SpectralError::EigensolveFailure("singular mass matrix".into()))?;
    let raw = a.complex_eigenvalues();
    if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SpectralError::EigensolveFailure("non-finite eigenvalue".into()));
    }
    let s = to_complex(&pencil.stiffness);
    let m = to_complex(&pencil.mass);
    let s_norm = pencil.stiffness.norm();
    let m_norm = pencil.mass.norm();
    let mut pairs = Vec::with_capacity(n);
    let mut n_filtered = 0;
    for z in raw.iter() {
        let z = Complex64::new(z.re, z.im);
        let Some((mu, u)) = polish(&s, &m, z, 1.0 + z.norm()) else {
            n_filtered += 1;
            continue;
        };
        let r = (&s * &u - &m * &u * mu).norm() / ((s_norm + mu.norm() * m_norm) * u.norm());
        if !(r <= RESIDUAL_FILTER) {
            n_filtered += 1;
            continue;
        }
        let mut mu = mu;
        if mu.im.abs() <= 1e-10 * (1.0 + mu.re.abs()) {
            mu.im = 0.0;
        }
        pairs.push((mu, r, u));
    }
    pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let threshold = -q_minus_sup;
    let eigenvalues: Vec<Eigenvalue> = pairs
        .iter()
        .map(|(mu, r, _)| Eigenvalue {
            re: mu.re,
            im: mu.im,
            residual: *r,
        })
        .collect();
    let eigenvectors = pairs
        .iter()
        .map(|(_, _, u)| Eigenvector {
            phi: u.iter().copied().collect(),
            b: u[n - 1],
        })
        .collect();
    let n_nonreal = eigenvalues.iter().filter(|e| !e.is_real()).count();
    let n_below_threshold = eigenvalues
        .iter()
        .filter(|e| e.is_real() && e.re < threshold)
        .count();
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        n_below_threshold,
        n_nonreal,
        threshold,
        n_filtered,
    })
}

/// Builds the pencil and computes its spectrum with `sup q_-` on a refined grid.
pub fn spectrum_of(profile: &TrivialFlowProfile, n: usize) -> Result<SpectrumResult, SpectralError> {
    let pencil = build_operator_k(profile, n)?;
    let qm = profile.q_minus_sup_on(10 * profile.options.q_samples);
    compute_spectrum(&pencil, qm)
}

/// Relative change of the `count` lowest real eigenvalues from `n` to `2n`.
pub fn refinement_drift(
    profile: &TrivialFlowProfile,
    n: usize,
    count: usize,
) -> Result<Vec<f64>, SpectralError> {
    let a = spectrum_of(profile, n)?.real_eigenvalues();
    let b = spectrum_of(profile, 2 * n)?.real_eigenvalues();
    Ok(a.iter()
        .zip(&b)
        .take(count)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    /// `(mu, D(mu))` for each real eigenvalue in the window.
    pub checked: Vec<(f64, f64)>,
    /// Eigenvalues whose dispersion value exceeds the tolerance.
    pub eigen_mismatches: Vec<(f64, f64)>,
    /// Roots of `D` with no eigenvalue within tolerance.
    pub root_mismatches: Vec<f64>,
    pub roots: Vec<f64>,
}

impl CrossValidation {
    pub fn is_consistent(&self) -> bool {
        self.eigen_mismatches.is_empty() && self.root_mismatches.is_empty()
    }
}

/// Compares the real spectrum in `[-mu_max, mu_max]` with the roots of `D(., lambda)`.
pub fn cross_validate_with_dispersion(
    result: &SpectrumResult,
    profile: &TrivialFlowProfile,
    mu_max: f64,
    n_scan: usize,
) -> Result<CrossValidation, SpectralError> {
    let tol = 1e-6;
    let mut out = CrossValidation {
        checked: vec![],
        eigen_mismatches: vec![],
        root_mismatches: vec![],
        roots: vec![],
    };
    let eig: Vec<f64> = result
        .real_eigenvalues()
        .into_iter()
        .filter(|m| m.abs() <= mu_max)
        .collect();
    if eig.is_empty() && n_scan == 0 {
        return Ok(out);
    }
    let mut opts = profile.options;
    opts.tol = Tolerances {
        rtol: 1e-13,
        atol: 1e-15,
    };
    let tight = solve_trivial_with(&profile.model, profile.lambda, opts)?;
    for &mu in &eig {
        if let DispersionValue::Finite(v) = dispersion::dispersion_value(mu, &tight)? {
            out.checked.push((mu, v));
            if v.abs() > tol {
                out.eigen_mismatches.push((mu, v));
            }
        }
    }
    if n_scan >= 2 {
        let sample = |mu: f64| -> Result<(f64, f64), SpectralError> {
            let b = dispersion::solve_beta(mu, &tight)?;
            Ok((
                dispersion::dispersion_from_beta(&b, &tight).as_f64(),
                b.beta1 / b.beta_max,
            ))
        };
        let grid: Vec<f64> = (0..n_scan)
            .map(|i| -mu_max + 2.0 * mu_max * i as f64 / (n_scan - 1) as f64)
            .collect();
        let vals: Vec<(f64, f64)> = grid.iter().map(|&m| sample(m)).collect::<Result<_, _>>()?;
        let mut cells = Vec::new();
        for i in 0..n_scan - 1 {
            let (a, b) = (grid[i], grid[i + 1]);
            let ((da, ba), (db, bb)) = (vals[i], vals[i + 1]);
            if ba.signum() == bb.signum() {
                cells.push((a, da, b, db));
                continue;
            }
            // split the cell at the pole of D
            let pole = roots::bisect(|m| sample(m).map(|v| v.1).unwrap_or(f64::NAN), a, b, 1e-13, 200)
                .map_err(DispersionError::from)?;
            let gap = 1e-9 * (1.0 + pole.abs());
            for (lo, hi) in [(a, pole - gap), (pole + gap, b)] {
                if hi > lo {
                    cells.push((lo, sample(lo)?.0, hi, sample(hi)?.0));
                }
            }
        }
        for (a, da, b, db) in cells {
            if !da.is_finite() || !db.is_finite() || da.signum() == db.signum() {
                continue;
            }
            let f = |m: f64| sample(m).map(|v| v.0).unwrap_or(f64::NAN);
            let root = roots::brent(f, a, b, 1e-14, 200).map_err(DispersionError::from)?;
            out.roots.push(root);
            if !eig.iter().any(|&e| (e - root).abs() <= tol * (1.0 + root.abs())) {
                out.root_mismatches.push(root);
            }
        }
    }
    Ok(out)
}
