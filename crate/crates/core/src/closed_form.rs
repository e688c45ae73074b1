//! Closed-form dispersion data for the irrotational and constant-vorticity
//! families, root-count classification, and pointwise certificates of the
//! Bessel inequalities they rely on.

use crate::model::FlowParameters;
use crate::roots::{self, RootError};
use crate::special::{i0, i1, i1_over_x, ratio_i1_i0, SERIES_CROSSOVER};
use serde::Serialize;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("argument {0} outside the domain")]
    DomainError(f64),
    #[error("inequality '{name}' violated at x = {x} (margin {margin:e})")]
    InequalityViolation { name: String, x: f64, margin: f64 },
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Largest argument where `f` and its derivatives come from the power series.
const SERIES_LIMIT: f64 = 1.5;
const N_COEFF: usize = 70;

/// Ascending series of `I0` and `I1/(x/2)` in `y = x^2/4`.
fn bessel_y_series() -> (Vec<f64>, Vec<f64>) {
    let mut s0 = vec![0.0; N_COEFF];
    let mut s1 = vec![0.0; N_COEFF];
    s0[0] = 1.0;
    s1[0] = 1.0;
    for k in 1..N_COEFF {
        let kf = k as f64;
        s0[k] = s0[k - 1] / (kf * kf);
        s1[k] = s1[k - 1] / (kf * (kf + 1.0));
    }
    (s0, s1)
}

fn series_div(num: &[f64], den: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; num.len()];
    for k in 0..num.len() {
        let mut v = num[k];
        for j in 0..k {
            v -= out[j] * den[k - j];
        }
        out[k] = v / den[0];
    }
    out
}

/// Coefficients `f_k` with `f(x) = sum f_k x^{2k}`.
fn f_coeffs() -> &'static [f64] {
    static C: OnceLock<Vec<f64>> = OnceLock::new();
    C.get_or_init(|| {
        let (s0, s1) = bessel_y_series();
        let mut q = series_div(&s0, &s1);
        let mut scale = 2.0;
        for c in q.iter_mut() {
            *c *= scale;
            scale /= 4.0;
        }
        q
    })
}

/// Coefficients in `y` of `(1+y)^{-1/2} - I1/(I0 x/2)`.
fn sandwich_upper_coeffs() -> &'static [f64] {
    static C: OnceLock<Vec<f64>> = OnceLock::new();
    C.get_or_init(|| {
        let (s0, s1) = bessel_y_series();
        let r = series_div(&s1, &s0);
        let mut binom = 1.0;
        (0..N_COEFF)
            .map(|n| {
                if n > 0 {
                    binom *= -(n as f64 - 0.5) / n as f64;
                }
                binom - r[n]
            })
            .collect()
    })
}

#[cfg(test)]
fn poly_even(coeffs: &[f64], x: f64, f: impl Fn(usize, f64) -> f64) -> f64 {
    let x2 = x * x;
    let mut p = 1.0;
    let mut sum = 0.0;
    for (k, &c) in coeffs.iter().enumerate() {
        sum += f(k, c) * p;
        p *= x2;
        if p * c.abs() < 1e-300 {
            break;
        }
    }
    sum
}

/// `f(x) = x I0(x) / I1(x)`, with `f(0) = 2`.
pub fn f_ratio(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_CROSSOVER {
        i0(x) / i1_over_x(x)
    } else {
        x / ratio_i1_i0(x)
    }
}

/// `f'(x) = 2 rho + x - x rho^2` with `rho = I0/I1`.
pub fn f_x(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        let c = f_coeffs();
        let x2 = x * x;
        let mut p = x;
        let mut sum = 0.0;
        for k in 1..c.len() {
            sum += 2.0 * k as f64 * c[k] * p;
            p *= x2;
        }
        sum
    } else {
        let rho = 1.0 / ratio_i1_i0(x);
        2.0 * rho + x - x * rho * rho
    }
}

pub fn f_xx(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        let c = f_coeffs();
        let x2 = x * x;
        let mut p = 1.0;
        let mut sum = 0.0;
        for k in 1..c.len() {
            let kf = k as f64;
            sum += 2.0 * kf * (2.0 * kf - 1.0) * c[k] * p;
            p *= x2;
        }
        sum
    } else {
        let rho = 1.0 / ratio_i1_i0(x);
        let rho_x = 1.0 - rho * rho + rho / x;
        2.0 * rho_x + 1.0 - rho * rho - 2.0 * x * rho * rho_x
    }
}

/// `f_x - x f_xx`, evaluated from the series where the closed form cancels.
pub fn fx_minus_x_fxx(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        let c = f_coeffs();
        let x2 = x * x;
        // -sum 4k(k-1) f_k x^{2k-1}
        let mut p = x * x2;
        let mut sum = 0.0;
        for k in 2..c.len() {
            let kf = k as f64;
            sum -= 4.0 * kf * (kf - 1.0) * c[k] * p;
            p *= x2;
        }
        sum
    } else {
        let rho = 1.0 / ratio_i1_i0(x);
        -2.0 * x * x * rho.powi(3) + 4.0 * x * rho * rho + 2.0 * x * x * rho - 2.0 * x
    }
}

/// `chi(x) = I1(x) / (x (1 - x^2) I0(x))` on `[0, 1)`, with `chi(0) = 1/2`.
pub fn chi(x: f64) -> Result<f64, ClosedFormError> {
    if !(0.0..1.0).contains(&x) {
        return Err(ClosedFormError::DomainError(x));
    }
    Ok(i1_over_x(x) / ((1.0 - x * x) * i0(x)))
}

/// `g(x) = x I0 / ((x^2 - 1) I1)` for `x > 1`.
pub fn g_irrotational(x: f64) -> Result<f64, ClosedFormError> {
    if !(x > 1.0) {
        return Err(ClosedFormError::DomainError(x));
    }
    Ok(f_ratio(x) / (x * x - 1.0))
}

/// `k nu d^2 I0(k nu d) / (((k nu)^2 d^2 - 1) I1(k nu d))`, equal to `sigma / c^2`
/// at an irrotational bifurcation point.
pub fn irrotational_dispersion_rhs(k: u32, nu: f64, d: f64) -> Result<f64, ClosedFormError> {
    let x = k as f64 * nu * d;
    Ok(d * g_irrotational(x)?)
}

/// The positive root `lambda0` of the irrotational dispersion relation.
pub fn irrotational_lambda0(k: u32, params: &FlowParameters) -> Result<f64, ClosedFormError> {
    let rhs = irrotational_dispersion_rhs(k, params.nu, params.d)?;
    Ok(0.5 * (params.sigma / rhs).sqrt())
}

/// `D(-(k nu)^2, lambda)` for `gamma = F = 0` with `x = k nu d`.
pub fn irrotational_dispersion(x: f64, sigma: f64, d: f64, c: f64) -> f64 {
    f_ratio(x) + sigma * (1.0 - x * x) / (d * c * c)
}

/// Root `kappa > 1` of `f(kappa) = sigma (kappa^2 - 1)/(d c^2)`; the negative
/// eigenvalue of the irrotational pencil is `-kappa^2 / d^2`.
pub fn irrotational_kappa(sigma: f64, d: f64, c: f64) -> Result<f64, ClosedFormError> {
    let a = sigma / (d * c * c);
    let h = |k: f64| f_ratio(k) - a * (k * k - 1.0);
    let mut hi = 2.0;
    while h(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(ClosedFormError::DomainError(a));
        }
    }
    Ok(roots::brent(h, 1.0, hi, 1e-15, 200)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstVortCase {
    pub d: f64,
    pub sigma: f64,
    pub gamma0: f64,
    pub nu: Option<f64>,
    pub xi: f64,
    pub x1: Option<f64>,
    /// `b^+(x1) = b^-(x1)` when `x1` exists.
    pub y0: Option<f64>,
    /// `-2 sigma / (d^3 gamma (1 + sqrt(1 - 2 xi)))`, present for `xi <= 1/2`.
    pub y_plus: Option<f64>,
    /// `-2 sigma / (d^3 gamma (1 - sqrt(1 - 2 xi)))`, present for `xi <= 1/2`.
    pub y_minus: Option<f64>,
}

impl ConstVortCase {
    pub fn new(d: f64, sigma: f64, gamma0: f64, nu: Option<f64>) -> Result<Self, ClosedFormError> {
        if gamma0 == 0.0 || !gamma0.is_finite() {
            return Err(ClosedFormError::DomainError(gamma0));
        }
        if !(d > 0.0 && sigma > 0.0) {
            return Err(ClosedFormError::DomainError(d.min(sigma)));
        }
        let xi = 4.0 * sigma / (d.powi(5) * gamma0 * gamma0);
        let lead = 2.0 * sigma / (d.powi(3) * gamma0);
        let (x1, y0) = if xi > 0.5 {
            let x1 = solve_x1(xi)?;
            (Some(x1), Some(lead * (x1 * x1 - 1.0)))
        } else {
            (None, None)
        };
        let (y_plus, y_minus) = if xi <= 0.5 {
            let r = (1.0 - 2.0 * xi).sqrt();
            (Some(-lead / (1.0 + r)), Some(-lead / (1.0 - r)))
        } else {
            (None, None)
        };
        Ok(Self {
            d,
            sigma,
            gamma0,
            nu,
            xi,
            x1,
            y0,
            y_plus,
            y_minus,
        })
    }

    pub fn from_params(params: &FlowParameters, gamma0: f64) -> Result<Self, ClosedFormError> {
        Self::new(params.d, params.sigma, gamma0, Some(params.nu))
    }

    /// Smallest admissible `x`.
    pub fn x_min(&self) -> f64 {
        self.x1.unwrap_or(0.0)
    }

    /// `R(x) = 1 + xi (x^2 - 1) f(x)`, the radicand of `b^pm`.
    pub fn radicand(&self, x: f64) -> f64 {
        1.0 + self.xi * (x * x - 1.0) * f_ratio(x)
    }

    /// `c = b^pm(x)`, the surface speed at which mode `x = k nu d` solves the
    /// dispersion relation.
    pub fn b_pm(&self, x: f64, sign: Sign) -> Result<f64, ClosedFormError> {
        if !(x >= 0.0) || x.is_infinite() {
            return Err(ClosedFormError::DomainError(x));
        }
        let mut r = self.radicand(x);
        if r < 0.0 {
            if r > -1e-13 {
                r = 0.0;
            } else {
                return Err(ClosedFormError::DomainError(x));
            }
        }
        let sq = r.sqrt();
        let d2g = self.d * self.d * self.gamma0;
        Ok(match sign {
            Sign::Plus => 2.0 * self.sigma / (self.d.powi(3) * self.gamma0) * (x * x - 1.0) / (1.0 + sq),
            Sign::Minus => -d2g * (1.0 + sq) / (2.0 * f_ratio(x)),
        })
    }

    /// `b_x = (-b^2 f_x + 2 sigma x / d) / (2 b f + d^2 gamma)`.
    pub fn b_pm_x(&self, x: f64, sign: Sign) -> Result<f64, ClosedFormError> {
        let b = self.b_pm(x, sign)?;
        let den = 2.0 * b * f_ratio(x) + self.d * self.d * self.gamma0;
        Ok((-b * b * f_x(x) + 2.0 * self.sigma * x / self.d) / den)
    }

    /// Second derivative at the origin from the differentiated relation.
    pub fn b_pm_xx_at_zero(&self, sign: Sign) -> Result<f64, ClosedFormError> {
        let b = self.b_pm(0.0, sign)?;
        let den = 2.0 * b * 2.0 + self.d * self.d * self.gamma0;
        Ok((2.0 * self.sigma / self.d - b * b * f_xx(0.0)) / den)
    }

    /// Extremum of `b^-` on `[0, inf)`: the maximum for `gamma > 0`, the
    /// minimum for `gamma < 0`. Returns `(x, b)`; only meaningful for
    /// `xi < 16/81`, where `b^-` has an interior critical point.
    pub fn extremum_b_minus(&self) -> Result<(f64, f64), ClosedFormError> {
        let sgn = self.gamma0.signum();
        let h = |x: f64| sgn * self.b_pm(x, Sign::Minus).unwrap_or(f64::NEG_INFINITY);
        let mut hi = 1.0;
        while sgn * self.b_pm_x(hi, Sign::Minus)? > 0.0 {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(ClosedFormError::DomainError(hi));
            }
        }
        let (x, v) = roots::golden_max(h, self.x_min(), hi, 1e-9);
        Ok((x, sgn * v))
    }

    /// `-d^2 gamma I1(1)/I0(1)`, the speed of the extra root at `k nu d = 1`.
    pub fn axis_speed(&self) -> f64 {
        -self.d * self.d * self.gamma0 * i1(1.0) / i0(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Solves `chi(x1) = xi` for `xi > 1/2`.
pub fn solve_x1(xi: f64) -> Result<f64, ClosedFormError> {
    if !(xi > 0.5) {
        return Err(ClosedFormError::DomainError(xi));
    }
    let h = |x: f64| chi(x).map(|c| c - xi).unwrap_or(f64::NAN);
    let mut b = 0.5;
    while h(b) < 0.0 {
        b = 0.5 * (b + 1.0);
        if 1.0 - b < 1e-15 {
            return Err(ClosedFormError::DomainError(xi));
        }
    }
    Ok(roots::brent(h, 0.0, b, 1e-16, 300)?)
}

pub const XI_CRITICAL: f64 = 16.0 / 81.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootCount {
    AtMostOne,
    None,
    AtMostTwo,
    ExtraAxisRoot,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

/// Number of modes `k` that can satisfy the dispersion relation at surface
/// speed `c`.
pub fn classify_root_count(c_value: f64, case: &ConstVortCase) -> Result<RootCount, ClosedFormError> {
    if let Some(nu) = case.nu {
        let inv = 1.0 / (nu * case.d);
        if inv >= 0.5 && close(inv, inv.round()) && close(c_value, case.axis_speed()) {
            return Ok(RootCount::ExtraAxisRoot);
        }
    }
    // Reduce to gamma > 0.
    let (c, g) = if case.gamma0 < 0.0 {
        (-c_value, -case.gamma0)
    } else {
        (c_value, case.gamma0)
    };
    let pos = ConstVortCase::new(case.d, case.sigma, g, None)?;
    let xi = pos.xi;
    if xi >= XI_CRITICAL {
        if xi < 0.5 {
            let (ym, yp) = (pos.y_minus.unwrap(), pos.y_plus.unwrap());
            if ym < c && c < yp {
                return Ok(RootCount::None);
            }
        }
        return Ok(RootCount::AtMostOne);
    }
    let (ym, yp) = (pos.y_minus.unwrap(), pos.y_plus.unwrap());
    let (_, bmax) = pos.extremum_b_minus()?;
    if close(c, bmax) || c > yp || c <= ym {
        Ok(RootCount::AtMostOne)
    } else if c > bmax {
        Ok(RootCount::None)
    } else {
        Ok(RootCount::AtMostTwo)
    }
}

/// `b^-_xx(0)` by a Richardson-extrapolated second difference, for
/// `d = gamma = 1` and `sigma = xi / 4`.
pub fn b_minus_curvature_numeric(xi: f64) -> Result<f64, ClosedFormError> {
    let case = ConstVortCase::new(1.0, xi / 4.0, 1.0, None)?;
    let b0 = case.b_pm(0.0, Sign::Minus)?;
    let second = |h: f64| -> Result<f64, ClosedFormError> {
        Ok(2.0 * (case.b_pm(h, Sign::Minus)? - b0) / (h * h))
    };
    let (a, b) = (second(1e-3)?, second(5e-4)?);
    Ok((4.0 * b - a) / 3.0)
}

/// The `xi` at which `b^-` changes from a local minimum to a local maximum at
/// the origin, located by bisection on the numerical curvature.
pub fn critical_xi_numeric() -> Result<f64, ClosedFormError> {
    let h = |xi: f64| b_minus_curvature_numeric(xi).unwrap_or(f64::NAN);
    Ok(roots::bisect(h, 0.1, 0.3, 1e-13, 200)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    /// Spacing of the uniform grid on `(0, 1)` used for `chi`.
    pub chi_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: 1e-4,
            x_max: 50.0,
            n: 10_000,
            chi_step: 1e-4,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let (la, lb) = (self.x_min.ln(), self.x_max.ln());
        (0..self.n)
            .map(|i| (la + (lb - la) * i as f64 / (self.n - 1) as f64).exp())
            .map(|x| x.min(self.x_max))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateRow {
    pub name: String,
    pub n_points: usize,
    pub min_margin: f64,
    pub argmin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub rows: Vec<CertificateRow>,
}

impl InequalityReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    pub fn row(&self, name: &str) -> Option<&CertificateRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn certify<I: IntoIterator<Item = (f64, f64)>>(name: &str, samples: I) -> CertificateRow {
    let mut n = 0;
    let mut min = f64::INFINITY;
    let mut arg = f64::NAN;
    let mut ok = true;
    for (x, m) in samples {
        n += 1;
        if !(m > 0.0) {
            ok = false;
        }
        if m < min || m.is_nan() {
            min = m;
            arg = x;
        }
    }
    CertificateRow {
        name: name.to_string(),
        n_points: n,
        min_margin: min,
        argmin: arg,
        holds: ok && n > 0,
    }
}

/// Upper sandwich margin `x/sqrt(x^2+4) - I1/I0`.
pub fn sandwich_upper_margin(x: f64) -> f64 {
    if x <= 0.5 {
        let y = 0.25 * x * x;
        let c = sandwich_upper_coeffs();
        let mut p = 1.0;
        let mut sum = 0.0;
        for &ck in c {
            sum += ck * p;
            p *= y;
        }
        0.5 * x * sum
    } else {
        x / (x * x + 4.0).sqrt() - ratio_i1_i0(x)
    }
}

/// Lower sandwich margin `I1/I0 - x/(1 + sqrt(x^2+1))`.
pub fn sandwich_lower_margin(x: f64) -> f64 {
    ratio_i1_i0(x) - x / (1.0 + (x * x + 1.0).sqrt())
}

/// `-(x^2-1)^2 I1^2 g'(x) / I1^2 = -[x (x^2-1)(1 - rho^2) - 2 rho]`, `rho = I0/I1`.
pub fn g_decrease_margin(x: f64) -> f64 {
    let rho = 1.0 / ratio_i1_i0(x);
    -(x * (x * x - 1.0) * (1.0 - rho * rho) - 2.0 * rho)
}

/// Evaluates every inequality on the grid and reports minimum margins.
///
/// Margins of the sandwich and of `f_x - x f_xx` are divided by their
/// leading small-`x` power so that the reported minimum is scale-free.
pub fn certify_inequalities(grid: &GridSpec) -> InequalityReport {
    let xs = grid.points();
    let fxx = certify(
        "fx_minus_x_fxx",
        xs.iter().map(|&x| (x, fx_minus_x_fxx(x) / (x.powi(3) / (1.0 + x.powi(3))))),
    );
    let lower = certify(
        "bessel_ratio_lower",
        xs.iter().map(|&x| (x, sandwich_lower_margin(x) / (x.powi(3) / (1.0 + x.powi(3))))),
    );
    let upper = certify(
        "bessel_ratio_upper",
        xs.iter().map(|&x| (x, sandwich_upper_margin(x) / (x.powi(5) / (1.0 + x.powi(5))))),
    );
    let n_chi = (1.0 / grid.chi_step).round() as usize;
    let chis: Vec<f64> = (1..n_chi)
        .map(|i| chi(i as f64 * grid.chi_step).unwrap())
        .collect();
    let chi_row = certify(
        "chi_increasing",
        chis.windows(2).enumerate().map(|(i, w)| {
            let x = (i + 1) as f64 * grid.chi_step;
            (x, (w[1] - w[0]) / grid.chi_step)
        }),
    );
    let g_row = certify(
        "g_decreasing",
        xs.iter().filter(|&&x| x > 1.0).map(|&x| (x, g_decrease_margin(x))),
    );
    let fx_row = certify(
        "f_x_positive",
        xs.iter().map(|&x| (x, f_x(x) / (x / (1.0 + x)))),
    );
    InequalityReport {
        rows: vec![fxx, lower, upper, chi_row, g_row, fx_row],
    }
}

/// Like [`certify_inequalities`] but fails on the first violated row.
pub fn verify_inequalities(grid: &GridSpec) -> Result<InequalityReport, ClosedFormError> {
    let report = certify_inequalities(grid);
    if let Some(r) = report.rows.iter().find(|r| !r.holds) {
        return Err(ClosedFormError::InequalityViolation {
            name: r.name.clone(),
            x: r.argmin,
            margin: r.min_margin,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Reference values from a 30-digit evaluation.
    const RHS_D1_NU2_K1: f64 = 0.955418284481541172;
    const LAMBDA0: f64 = 0.511532498221279186;
    const KAPPA_STAR: f64 = 1.95825732856997014;

    #[test]
    fn irrotational_rhs_reference() {
        let r = irrotational_dispersion_rhs(1, 2.0, 1.0).unwrap();
        assert!((r - RHS_D1_NU2_K1).abs() < 1e-14);
        let p = FlowParameters::from_nu(1.0, 1.0, 2.0).unwrap();
        assert!((irrotational_lambda0(1, &p).unwrap() - LAMBDA0).abs() < 1e-14);
        assert!(matches!(
            irrotational_dispersion_rhs(1, 1.0, 1.0),
            Err(ClosedFormError::DomainError(_))
        ));
    }

    #[test]
    fn irrotational_rhs_limits() {
        let near = irrotational_dispersion_rhs(1, 1.0 + 1e-6, 1.0).unwrap();
        assert!(near > 1e5);
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let v = irrotational_dispersion_rhs(k, 1.5, 1.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let x = 1000.0 * 1.5;
        let v = irrotational_dispersion_rhs(1000, 1.5, 1.0).unwrap();
        assert!((v * x - 1.0).abs() < 1e-3);
    }

    #[test]
    fn kappa_reference() {
        let k = irrotational_kappa(1.0, 1.0, 1.0).unwrap();
        assert!((k - KAPPA_STAR).abs() < 1e-13);
    }

    #[test]
    fn f_series_matches_closed_form() {
        for x in [1e-3, 0.1, 0.7, 1.2, 1.5] {
            let direct = x * i0(x) / i1(x);
            assert!((f_ratio(x) - direct).abs() < 1e-14 * direct);
            let s = poly_even(f_coeffs(), x, |_, c| c);
            assert!((s - direct).abs() < 1e-14 * direct, "x={x}");
        }
        assert_eq!(f_ratio(0.0), 2.0);
        assert!((f_xx(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_branches_agree() {
        for x in [1.4, 1.5, 1.6] {
            let rho = 1.0 / ratio_i1_i0(x);
            let direct = 2.0 * rho + x - x * rho * rho;
            assert!((f_x(x) - direct).abs() < 1e-12);
            let closed = -2.0 * x * x * rho.powi(3) + 4.0 * x * rho * rho + 2.0 * x * x * rho - 2.0 * x;
            assert!((fx_minus_x_fxx(x) - closed).abs() < 1e-12);
            assert!((fx_minus_x_fxx(x) - (f_x(x) - x * f_xx(x))).abs() < 1e-11);
        }
        for x in [0.3, 2.0, 7.0] {
            let h = 1e-4 * x;
            let fd = (f_ratio(x + h) - f_ratio(x - h)) / (2.0 * h);
            assert!((fd - f_x(x)).abs() < 1e-7);
            let fd2 = (f_x(x + h) - f_x(x - h)) / (2.0 * h);
            assert!((fd2 - f_xx(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn chi_limits_and_domain() {
        assert!((chi(1e-8).unwrap() - 0.5).abs() < 1e-12);
        assert!(chi(1.0).is_err());
        assert!(chi(-0.1).is_err());
        assert!(chi(0.999).unwrap() > 100.0);
    }

    fn richardson_limit(f: impl Fn(f64) -> f64, x0: f64, side: f64) -> f64 {
        let mut h = 1e-2;
        let mut prev = f(x0 + side * h);
        let mut est = prev;
        for _ in 0..6 {
            h *= 0.5;
            let cur = f(x0 + side * h);
            // first-order removable limit
            est = 2.0 * cur - prev;
            prev = cur;
        }
        est
    }

    fn b_original(case: &ConstVortCase, x: f64, sign: f64) -> f64 {
        let r = case.radicand(x).sqrt();
        2.0 * case.sigma / (case.d.powi(3) * case.gamma0) * (x * x - 1.0) / (1.0 + sign * r)
    }

    #[test]
    fn b_pm_removable_points() {
        let case = ConstVortCase::new(1.2, 0.2, 1.5, None).unwrap();
        assert!(case.xi < 0.5);
        let b1 = case.b_pm(1.0, Sign::Minus).unwrap();
        assert!((b1 - case.axis_speed()).abs() < 1e-14);
        for side in [-1.0, 1.0] {
            let lim = richardson_limit(|x| b_original(&case, x, -1.0), 1.0, side);
            assert!((lim - b1).abs() < 1e-6 * b1.abs(), "{lim} vs {b1}");
        }
        let yp = case.y_plus.unwrap();
        let ym = case.y_minus.unwrap();
        assert!((case.b_pm(0.0, Sign::Plus).unwrap() - yp).abs() < 1e-14 * yp.abs());
        assert!((case.b_pm(0.0, Sign::Minus).unwrap() - ym).abs() < 1e-13 * ym.abs());
        for x in [0.3, 0.8, 1.3, 4.0] {
            for (s, sg) in [(Sign::Plus, 1.0), (Sign::Minus, -1.0)] {
                let a = case.b_pm(x, s).unwrap();
                let b = b_original(&case, x, sg);
                assert!((a - b).abs() < 1e-10 * a.abs());
            }
        }
    }

    #[test]
    fn b_pm_is_odd_in_gamma() {
        let a = ConstVortCase::new(0.9, 0.7, 2.0, None).unwrap();
        let b = ConstVortCase::new(0.9, 0.7, -2.0, None).unwrap();
        for x in [0.0, 0.5, 2.0].map(|t| a.x_min() + t) {
            for s in [Sign::Plus, Sign::Minus] {
                assert_eq!(a.b_pm(x, s).unwrap(), -b.b_pm(x, s).unwrap());
            }
        }
    }

    #[test]
    fn b_pm_solves_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let case = ConstVortCase::new(
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(-4.0..4.0),
                None,
            )
            .unwrap();
            let x = case.x_min() + rng.gen_range(0.0..6.0);
            for s in [Sign::Plus, Sign::Minus] {
                let b = case.b_pm(x, s).unwrap();
                if (x - 1.0).abs() < 1e-9 && s == Sign::Plus {
                    continue;
                }
                let res = b * b * f_ratio(x)
                    + case.sigma / case.d * (1.0 - x * x)
                    + case.d * case.d * case.gamma0 * b;
                let scale = b * b * f_ratio(x) + case.sigma / case.d * (1.0 + x * x);
                assert!(res.abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn b_x_matches_finite_difference() {
        let case = ConstVortCase::new(1.0, 0.1, 2.0, None).unwrap();
        for x in [0.5, 1.7, 3.0] {
            for s in [Sign::Plus, Sign::Minus] {
                let h = 1e-5;
                let fd = (case.b_pm(x + h, s).unwrap() - case.b_pm(x - h, s).unwrap()) / (2.0 * h);
                assert!((fd - case.b_pm_x(x, s).unwrap()).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn x1_solves_chi() {
        for xi in [0.51, 0.8, 2.0, 10.0, 100.0] {
            let x1 = solve_x1(xi).unwrap();
            assert!(x1 > 0.0 && x1 < 1.0);
            assert!((chi(x1).unwrap() - xi).abs() < 1e-10);
        }
        assert!(solve_x1(0.5).is_err());
        let case = ConstVortCase::new(1.0, 1.0, 1.0, None).unwrap();
        let x1 = case.x1.unwrap();
        assert!(case.radicand(x1).abs() < 1e-12);
        assert!(case.b_pm(0.5 * x1, Sign::Plus).is_err());
        let bp = case.b_pm(x1, Sign::Plus).unwrap();
        let bm = case.b_pm(x1, Sign::Minus).unwrap();
        assert!((bp - bm).abs() < 1e-5 * bp.abs());
        assert!((bp - case.y0.unwrap()).abs() < 1e-5 * bp.abs());
    }

    #[test]
    fn critical_xi() {
        let xi = critical_xi_numeric().unwrap();
        assert!((xi - XI_CRITICAL).abs() < 1e-6, "{xi}");
        for xi in [0.12, 0.19, 0.25] {
            let case = ConstVortCase::new(1.0, xi / 4.0, 1.0, None).unwrap();
            let a = case.b_pm_xx_at_zero(Sign::Minus).unwrap();
            let n = b_minus_curvature_numeric(xi).unwrap();
            assert!((a - n).abs() < 1e-6 * a.abs().max(1e-3));
        }
    }

    #[test]
    fn extremum_below_plus_branch() {
        for xi in [0.02, 0.1, 0.19] {
            let gamma = 1.3;
            let d: f64 = 0.8;
            let sigma = xi * d.powi(5) * gamma * gamma / 4.0;
            let case = ConstVortCase::new(d, sigma, gamma, None).unwrap();
            let (x, bmax) = case.extremum_b_minus().unwrap();
            assert!(x > 0.0);
            assert!(bmax > case.b_pm(0.0, Sign::Minus).unwrap());
            assert!(bmax < case.y_plus.unwrap());
            assert!(bmax <= -(2.0 * sigma / d).sqrt());
            assert!(case.b_pm_x(x, Sign::Minus).unwrap().abs() < 1e-5);
        }
    }

    #[test]
    fn b_minus_negative_for_positive_gamma() {
        let case = ConstVortCase::new(1.0, 0.05, 1.0, None).unwrap();
        for x in GridSpec::default().points() {
            assert!(case.b_pm(x, Sign::Minus).unwrap() < 0.0);
        }
    }

    #[test]
    fn classification_windows() {
        // xi >= 1/2
        let c = ConstVortCase::new(1.0, 1.0, 1.0, None).unwrap();
        for v in [-5.0, -0.1, 0.3, 4.0] {
            assert_eq!(classify_root_count(v, &c).unwrap(), RootCount::AtMostOne);
        }
        // 16/81 <= xi < 1/2
        let c = ConstVortCase::new(1.0, 0.3, 2.0, None).unwrap();
        assert!((0.0..0.5).contains(&c.xi) && c.xi >= XI_CRITICAL);
        let mid = 0.5 * (c.y_plus.unwrap() + c.y_minus.unwrap());
        assert_eq!(classify_root_count(mid, &c).unwrap(), RootCount::None);
        assert_eq!(
            classify_root_count(c.y_plus.unwrap() + 0.1, &c).unwrap(),
            RootCount::AtMostOne
        );
        // xi < 16/81
        let c = ConstVortCase::new(1.0, 0.1, 2.0, None).unwrap();
        let (_, bmax) = c.extremum_b_minus().unwrap();
        let (ym, yp) = (c.y_minus.unwrap(), c.y_plus.unwrap());
        assert_eq!(classify_root_count(0.5 * (ym + bmax), &c).unwrap(), RootCount::AtMostTwo);
        assert_eq!(classify_root_count(0.5 * (bmax + yp), &c).unwrap(), RootCount::None);
        assert_eq!(classify_root_count(bmax, &c).unwrap(), RootCount::AtMostOne);
        assert_eq!(classify_root_count(ym - 1.0, &c).unwrap(), RootCount::AtMostOne);
        // gamma < 0 mirrors the speeds
        let n = ConstVortCase::new(1.0, 0.1, -2.0, None).unwrap();
        assert_eq!(classify_root_count(-0.5 * (ym + bmax), &n).unwrap(), RootCount::AtMostTwo);
        // the axis case
        let a = ConstVortCase::new(1.0, 0.1, 2.0, Some(0.5)).unwrap();
        assert_eq!(classify_root_count(a.axis_speed(), &a).unwrap(), RootCount::ExtraAxisRoot);
    }

    #[test]
    fn inequality_certificates_hold() {
        let report = verify_inequalities(&GridSpec::default()).unwrap();
        assert_eq!(report.rows.len(), 6);
        for r in &report.rows {
            assert!(r.min_margin > 0.0, "{}: {}", r.name, r.min_margin);
        }
    }

    #[test]
    fn sandwich_series_matches_direct() {
        for x in [0.3f64, 0.5] {
            let direct = x / (x * x + 4.0).sqrt() - i1(x) / i0(x);
            assert!((sandwich_upper_margin(x) - direct).abs() < 1e-15);
        }
        let x: f64 = 1e-3;
        assert!((sandwich_upper_margin(x) / x.powi(5) - 1.0 / 768.0).abs() < 1e-6);
    }

    #[test]
    fn violation_is_reported() {
        let row = certify("t", [(1.0, 1.0), (2.0, -1.0)]);
        assert_eq!(row.argmin, 2.0);
        assert!(!row.holds);
        let report = InequalityReport { rows: vec![row] };
        assert!(!report.all_hold());
    }
}
