//! Dispersion function `D(mu, lambda)` by shooting the `beta` problem, and
//! the search for bifurcation points of k-mode waves.

use crate::model::JetModel;
use crate::ode::{self, DenseSolution, OdeError, Tolerances};
use crate::output::{csv_table, write_atomic};
use crate::roots::{self, RootError};
use crate::trivial_flow::{
    self, laminar_rhs, q_coefficient, ShootingOptions, TrivialFlowError, TrivialFlowProfile,
    DEGENERATE_C,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("beta problem blew up near s = {0}")]
    BlowUp(f64),
    #[error("surface speed c(lambda) vanishes at lambda = {0}")]
    DegenerateSurfaceSpeed(f64),
    #[error("c(lambda) changes sign in [{a}, {b}]; split the lambda interval there")]
    SplitRequired { a: f64, b: f64 },
    #[error("finite-difference estimates {coarse:e} and {fine:e} of D_lambda disagree")]
    UnstableDerivative { coarse: f64, fine: f64 },
    #[error("invalid scan range: {0}")]
    InvalidRange(String),
    #[error(transparent)]
    Trivial(#[from] TrivialFlowError),
    #[error(transparent)]
    Root(#[from] RootError),
}

impl From<OdeError> for DispersionError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::BlowUp { at, .. } | OdeError::StepUnderflow(at) => Self::BlowUp(at),
            OdeError::TooManySteps(_) => Self::BlowUp(f64::NAN),
        }
    }
}

/// Relative size of `beta~(1)` below which `D` is treated as a pole.
pub const POLE_THRESHOLD: f64 = 1e-12;
const BETA_BLOWUP: f64 = 1e250;

/// Solution `(psi, psi_s, beta~, beta~_s)` of the joint shooting problem.
#[derive(Debug, Clone)]
pub struct BetaSolution {
    pub mu: f64,
    pub lambda: f64,
    sol: DenseSolution,
    eps: f64,
    seed_coeff: f64,
    pub beta1: f64,
    pub beta1_s: f64,
    /// `max |beta~|` over the integration mesh.
    pub beta_max: f64,
}

impl BetaSolution {
    pub fn beta(&self, s: f64) -> f64 {
        if s < self.eps {
            1.0 + self.seed_coeff * s * s / 8.0
        } else {
            self.sol.eval_component(s, 2)
        }
    }

    pub fn beta_s(&self, s: f64) -> f64 {
        if s < self.eps {
            self.seed_coeff * s / 4.0
        } else {
            self.sol.eval_component(s, 3)
        }
    }

    fn beta_ss(&self, s: f64) -> f64 {
        if s < self.eps {
            self.seed_coeff / 4.0
        } else {
            self.sol.eval_derivative_component(s, 3)
        }
    }

    /// `beta = beta~ / beta~(1)`; meaningless at a pole.
    pub fn normalized(&self, s: f64) -> f64 {
        self.beta(s) / self.beta1
    }

    pub fn normalized_s(&self, s: f64) -> f64 {
        self.beta_s(s) / self.beta1
    }

    pub fn is_pole(&self) -> bool {
        self.beta1.abs() < POLE_THRESHOLD * self.beta_max
    }

    /// Residual of `beta'' + 3 beta'/s - d^2 (q - mu) beta`, relative to `max |beta~|`.
    pub fn ode_residual(&self, model: &JetModel, s: f64) -> f64 {
        let d2 = model.params.d.powi(2);
        let psi = self.sol.eval_component(s, 0);
        let q = q_coefficient(model, s, psi);
        (self.beta_ss(s) + 3.0 * self.beta_s(s) / s - d2 * (q - self.mu) * self.beta(s))
            / self.beta_max
    }
}

/// Shoots `beta~'' + 3 beta~'/s = d^2 (q - mu) beta~`, `beta~(0) = 1`, jointly with
/// the laminar profile of `profile.lambda`.
pub fn solve_beta(mu: f64, profile: &TrivialFlowProfile) -> Result<BetaSolution, DispersionError> {
    solve_beta_with(mu, &profile.model, profile.lambda, profile.options)
}

pub fn solve_beta_with(
    mu: f64,
    model: &JetModel,
    lambda: f64,
    options: ShootingOptions,
) -> Result<BetaSolution, DispersionError> {
    let d2 = model.params.d.powi(2);
    let eps = options.eps;
    let a = trivial_flow::axis_curvature(model, lambda);
    let q0 = -model.swirl.ff1_deriv1(0.0);
    let b = d2 * (q0 - mu);
    let y0 = [
        lambda - a * eps * eps / 8.0,
        -a * eps / 4.0,
        1.0 + b * eps * eps / 8.0,
        b * eps / 4.0,
    ];
    let sol = ode::integrate(
        |s, y, dy| {
            dy[0] = y[1];
            dy[1] = laminar_rhs(model, s, y[0], y[1]);
            dy[2] = y[3];
            dy[3] = -3.0 * y[3] / s + d2 * (q_coefficient(model, s, y[0]) - mu) * y[2];
        },
        eps,
        1.0,
        &y0,
        options.tol,
        BETA_BLOWUP,
    )?;
    let beta1 = sol.y_end()[2];
    let beta1_s = sol.y_end()[3];
    let beta_max = sol.max_abs[2];
    Ok(BetaSolution {
        mu,
        lambda,
        sol,
        eps,
        seed_coeff: b,
        beta1,
        beta1_s,
        beta_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum DispersionValue {
    Finite(f64),
    /// `beta~(1) = 0`, where `D` is set to infinity.
    Pole,
}

impl DispersionValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Pole => None,
        }
    }

    /// `+inf` for a pole, for tabulation.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// The terms of `D` that do not involve `beta`.
fn dispersion_tail(mu: f64, profile: &TrivialFlowProfile) -> f64 {
    let p = profile.model.params;
    let (c, m) = (profile.c, profile.m);
    let fm = profile.model.swirl.eval(m);
    p.sigma * (1.0 + mu * p.d * p.d) / (p.d * c * c)
        + 2.0
        + fm * fm / (p.d * p.d * c * c)
        + profile.model.surface_source(m) / c
}

pub fn dispersion_value(
    mu: f64,
    profile: &TrivialFlowProfile,
) -> Result<DispersionValue, DispersionError> {
    if profile.c.abs() < DEGENERATE_C {
        return Err(DispersionError::DegenerateSurfaceSpeed(profile.lambda));
    }
    let beta = solve_beta(mu, profile)?;
    Ok(dispersion_from_beta(&beta, profile))
}

pub fn dispersion_from_beta(beta: &BetaSolution, profile: &TrivialFlowProfile) -> DispersionValue {
    if beta.is_pole() {
        DispersionValue::Pole
    } else {
        DispersionValue::Finite(beta.beta1_s / beta.beta1 + dispersion_tail(beta.mu, profile))
    }
}

/// `D(-(k nu)^2, lambda)` from a fresh laminar solve.
pub fn dispersion_at(
    model: &JetModel,
    k: u32,
    lambda: f64,
    options: ShootingOptions,
) -> Result<DispersionValue, DispersionError> {
    let profile = trivial_flow::solve_trivial_with(model, lambda, options)?;
    let kn = k as f64 * model.params.nu;
    dispersion_value(-kn * kn, &profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub lambda0: f64,
    pub k0: u32,
    pub nu: f64,
    pub d_value: f64,
    pub d_lambda: f64,
    pub kernel_unique: bool,
    pub sl_condition_ok: bool,
    pub c0: f64,
}

/// A `lambda` bracket in which `beta~(1)` changes sign for mode `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleBracket {
    pub k: u32,
    pub lambda_a: f64,
    pub lambda_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub k_min: u32,
    pub k_max: u32,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_scan: usize,
    pub shooting: ShootingOptions,
}

impl ScanOptions {
    pub fn new(k_min: u32, k_max: u32, lambda_min: f64, lambda_max: f64, n_scan: usize) -> Self {
        Self {
            k_min,
            k_max,
            lambda_min,
            lambda_max,
            n_scan,
            shooting: ShootingOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub points: Vec<BifurcationPoint>,
    pub pole_brackets: Vec<PoleBracket>,
    /// Set when the kernel check relied on the large-k cutoff estimate,
    /// which is only a heuristic once `gamma` or `F` is non-trivial.
    pub cutoff_active: bool,
    /// Scan samples `(k, lambda, D)`.
    #[serde(skip)]
    pub samples: Vec<(u32, f64, DispersionValue)>,
}

impl ScanResult {
    pub fn no_roots(&self) -> bool {
        self.points.is_empty()
    }

    pub fn diagram_csv(&self) -> String {
        csv_table(
            &["k", "lambda", "D_value"],
            self.samples
                .iter()
                .map(|&(k, l, v)| vec![k as f64, l, v.as_f64()]),
        )
    }

    pub fn write_diagram_csv(&self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, self.diagram_csv().as_bytes())
    }
}

struct Sample {
    lambda: f64,
    c: f64,
    by_k: Vec<(f64, f64)>,
}

fn scan_sample(
    model: &JetModel,
    lambda: f64,
    ks: &[u32],
    opts: ShootingOptions,
) -> Result<Sample, DispersionError> {
    let profile = trivial_flow::solve_trivial_with(model, lambda, opts)?;
    let mut by_k = Vec::with_capacity(ks.len());
    for &k in ks {
        let kn = k as f64 * model.params.nu;
        if profile.c.abs() < DEGENERATE_C {
            by_k.push((f64::NAN, f64::NAN));
            continue;
        }
        let beta = solve_beta(-kn * kn, &profile)?;
        let b1 = beta.beta1 / beta.beta_max;
        let dv = dispersion_from_beta(&beta, &profile).as_f64();
        by_k.push((dv, b1));
    }
    Ok(Sample {
        lambda,
        c: profile.c,
        by_k,
    })
}

/// Locates roots in `lambda` of `D(-(k nu)^2, lambda)` for each `k` in range.
pub fn find_bifurcation_points(
    model: &JetModel,
    opts: &ScanOptions,
) -> Result<ScanResult, DispersionError> {
    if opts.k_min == 0 || opts.k_max < opts.k_min {
        return Err(DispersionError::InvalidRange(format!(
            "k range {}..={}",
            opts.k_min, opts.k_max
        )));
    }
    if !(opts.lambda_min < opts.lambda_max) || opts.n_scan < 2 {
        return Err(DispersionError::InvalidRange(format!(
            "lambda range [{}, {}] with {} samples",
            opts.lambda_min, opts.lambda_max, opts.n_scan
        )));
    }
    let ks: Vec<u32> = (opts.k_min..=opts.k_max).collect();
    let n = opts.n_scan;
    let grid: Vec<f64> = (0..n)
        .map(|i| opts.lambda_min + (opts.lambda_max - opts.lambda_min) * i as f64 / (n - 1) as f64)
        .collect();
    let samples: Vec<Sample> = grid
        .par_iter()
        .map(|&l| scan_sample(model, l, &ks, opts.shooting))
        .collect::<Result<_, _>>()?;

    for w in samples.windows(2) {
        if w[0].c.signum() != w[1].c.signum() || w[0].c.abs() < DEGENERATE_C {
            return Err(DispersionError::SplitRequired {
                a: w[0].lambda,
                b: w[1].lambda,
            });
        }
    }

    let mut points = Vec::new();
    let mut pole_brackets = Vec::new();
    let mut cutoff_active = false;
    for (ki, &k) in ks.iter().enumerate() {
        for w in samples.windows(2) {
            let (da, ba) = w[0].by_k[ki];
            let (db, bb) = w[1].by_k[ki];
            let pole = ba.signum() != bb.signum();
            if pole {
                pole_brackets.push(PoleBracket {
                    k,
                    lambda_a: w[0].lambda,
                    lambda_b: w[1].lambda,
                });
                continue;
            }
            if !(da.is_finite() && db.is_finite()) || da.signum() == db.signum() {
                continue;
            }
            let point = polish_root(model, k, w[0].lambda, w[1].lambda, opts.shooting)?;
            cutoff_active |= point.1;
            points.push(point.0);
        }
    }
    points.sort_by(|a, b| a.lambda0.total_cmp(&b.lambda0).then(a.k0.cmp(&b.k0)));
    let samples = ks
        .iter()
        .enumerate()
        .flat_map(|(ki, &k)| {
            samples.iter().map(move |s| {
                let (dv, _) = s.by_k[ki];
                let v = if dv.is_finite() {
                    DispersionValue::Finite(dv)
                } else {
                    DispersionValue::Pole
                };
                (k, s.lambda, v)
            })
        })
        .collect();
    Ok(ScanResult {
        points,
        pole_brackets,
        cutoff_active,
        samples,
    })
}

fn polish_root(
    model: &JetModel,
    k: u32,
    a: f64,
    b: f64,
    opts: ShootingOptions,
) -> Result<(BifurcationPoint, bool), DispersionError> {
    let f = |l: f64| {
        dispersion_at(model, k, l, opts)
            .map(|v| v.as_f64())
            .unwrap_or(f64::NAN)
    };
    let lambda0 = roots::brent(f, a, b, 1e-15, 200)?;
    let profile = trivial_flow::solve_trivial_with(model, lambda0, opts)?;
    let kn = k as f64 * model.params.nu;
    let d_value = dispersion_value(-kn * kn, &profile)?.as_f64();
    let (kernel_unique, cutoff) = kernel_is_unique(&profile, k)?;
    let beta0 = solve_beta(0.0, &profile)?;
    let mut point = BifurcationPoint {
        lambda0,
        k0: k,
        nu: model.params.nu,
        d_value,
        d_lambda: f64::NAN,
        kernel_unique,
        sl_condition_ok: !beta0.is_pole(),
        c0: profile.c,
    };
    point.d_lambda = transversality(&point, model)?;
    Ok((point, cutoff))
}

/// Smallest `x = j nu d` beyond which `D(-(j nu)^2, lambda)` is negative.
///
/// Uses `beta_s(1) <= sqrt(x^2 + d^2 sup|q|)` and `x I0/I1 <= 2 + x`.
pub fn kernel_cutoff(profile: &TrivialFlowProfile) -> f64 {
    let p = profile.model.params;
    let c = profile.c;
    let fm = profile.model.swirl.eval(profile.m);
    let qsup = (0..=2000)
        .map(|i| profile.q(i as f64 / 2000.0).abs())
        .fold(0.0, f64::max);
    let extra = fm * fm / (p.d * p.d * c * c) + (profile.model.surface_source(profile.m) / c).abs();
    let a = p.d * c * c / p.sigma;
    let b = 2.0 + extra + p.d * qsup.sqrt();
    (a + (a * a + 4.0 * (a * b + 1.0)).sqrt()) / 2.0
}

/// Checks `D(-(j nu)^2, lambda) != 0` for every `j != k` below the cutoff.
///
/// Returns `(unique, cutoff_is_heuristic)`.
pub fn kernel_is_unique(
    profile: &TrivialFlowProfile,
    k: u32,
) -> Result<(bool, bool), DispersionError> {
    let p = profile.model.params;
    let x_cut = 1.5 * kernel_cutoff(profile);
    let j_max = ((x_cut / (p.nu * p.d)).ceil() as u32).clamp(k + 1, 2000);
    let heuristic = !(profile.model.gamma.is_zero() && profile.model.swirl.is_zero());
    for j in 1..=j_max {
        if j == k {
            continue;
        }
        let jn = j as f64 * p.nu;
        if let DispersionValue::Finite(v) = dispersion_value(-jn * jn, profile)? {
            let scale = 1.0 + jn * p.d + p.sigma * jn * jn * p.d / (profile.c * profile.c);
            if v.abs() < 1e-8 * scale {
                return Ok((false, heuristic));
            }
        }
    }
    Ok((true, heuristic))
}

/// `D_lambda(-(k0 nu)^2, lambda0)` by Richardson-extrapolated central differences.
pub fn transversality(point: &BifurcationPoint, model: &JetModel) -> Result<f64, DispersionError> {
    let mut opts = ShootingOptions::default();
    opts.tol = Tolerances {
        rtol: 1e-13,
        atol: 1e-15,
    };
    let l0 = point.lambda0;
    let h = 1e-5 * (1.0 + l0.abs());
    let d_at = |l: f64| -> Result<f64, DispersionError> {
        match dispersion_at(model, point.k0, l, opts)? {
            DispersionValue::Finite(v) => Ok(v),
            DispersionValue::Pole => Err(DispersionError::UnstableDerivative {
                coarse: f64::NAN,
                fine: f64::NAN,
            }),
        }
    };
    let central = |h: f64| -> Result<f64, DispersionError> {
        Ok((d_at(l0 + h)? - d_at(l0 - h)?) / (2.0 * h))
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    if (coarse - fine).abs() > 1e-4 * fine.abs() {
        return Err(DispersionError::UnstableDerivative { coarse, fine });
    }
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Sign changes of `beta~(1)` in `mu` for a fixed profile, polished by Brent.
pub fn poles_in_mu(
    profile: &TrivialFlowProfile,
    mu_min: f64,
    mu_max: f64,
    n: usize,
) -> Result<Vec<f64>, DispersionError> {
    let b1 = |mu: f64| solve_beta(mu, profile).map(|b| b.beta1 / b.beta_max);
    let mut out = Vec::new();
    let mut prev = (mu_min, b1(mu_min)?);
    for i in 1..n {
        let mu = mu_min + (mu_max - mu_min) * i as f64 / (n - 1) as f64;
        let v = b1(mu)?;
        if v.signum() != prev.1.signum() {
            let f = |m: f64| solve_beta(m, profile).map(|b| b.beta1).unwrap_or(f64::NAN);
            out.push(roots::brent(f, prev.0, mu, 1e-13, 200)?);
        }
        prev = (mu, v);
    }
    Ok(out)
}

/// Linearized solution direction at a bifurcation point.
///
/// The surface component is `-(d/c0) cos(k0 nu z)` and the interior component
/// is `[beta(s) - (2 psi + s psi_s)/c0] cos(k0 nu z)`.
#[derive(Debug, Clone)]
pub struct PredictorField {
    pub k0: u32,
    pub nu: f64,
    pub c0: f64,
    pub eta_amplitude: f64,
    pub beta: BetaSolution,
    pub profile: TrivialFlowProfile,
}

impl PredictorField {
    /// Radial factor of the kernel element `theta`.
    pub fn theta_radial(&self, s: f64) -> f64 {
        self.beta.normalized(s)
    }

    /// Radial factor of the interior component.
    pub fn phi_radial(&self, s: f64) -> f64 {
        let p = &self.profile;
        self.beta.normalized(s) - (2.0 * p.psi(s) + s * p.psi_s(s)) / self.c0
    }

    pub fn mode(&self, z: f64) -> f64 {
        (self.k0 as f64 * self.nu * z).cos()
    }

    pub fn theta(&self, s: f64, z: f64) -> f64 {
        self.theta_radial(s) * self.mode(z)
    }

    pub fn eta(&self, z: f64) -> f64 {
        self.eta_amplitude * self.mode(z)
    }

    pub fn phi(&self, s: f64, z: f64) -> f64 {
        self.phi_radial(s) * self.mode(z)
    }
}

pub fn kernel_predictor(
    point: &BifurcationPoint,
    profile: &TrivialFlowProfile,
) -> Result<PredictorField, DispersionError> {
    let kn = point.k0 as f64 * point.nu;
    let beta = solve_beta(-kn * kn, profile)?;
    let c0 = profile.c;
    Ok(PredictorField {
        k0: point.k0,
        nu: point.nu,
        c0,
        eta_amplitude: -profile.model.params.d / c0,
        beta,
        profile: profile.clone(),
    })
}
