//! Physical parameters and the vorticity/swirl function families.
//!
//! The vorticity function `gamma` and the swirl function `F` are arbitrary
//! functions of the Stokes stream function. Here they are restricted to
//! constants and polynomials so that every derivative the pipeline consumes
//! is evaluated exactly.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name}: {value} (must be positive and finite)")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("swirl function violates F(0) = 0 (constant coefficient {0})")]
    HardViolation(f64),
    #[error("working interval [{0}, {1}] is empty or unbounded")]
    BadInterval(f64, f64),
    #[error("non-finite polynomial coefficient")]
    NonFiniteCoefficient,
}

/// Dense polynomial with coefficients listed lowest degree first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree of the polynomial; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Exact quotient by `x`, dropping the constant coefficient.
    pub fn shift_down(&self) -> Poly {
        Poly::new(self.coeffs.iter().skip(1).copied().collect())
    }
}

/// Physical and geometric constants of the jet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowParameters {
    /// Mean jet radius.
    pub d: f64,
    /// Surface-tension coefficient.
    pub sigma: f64,
    /// Axial period.
    pub period: f64,
    /// Wavenumber unit `2π / period`.
    pub nu: f64,
}

impl FlowParameters {
    pub fn new(d: f64, sigma: f64, period: f64) -> Result<Self, ModelError> {
        for (name, value) in [("d", d), ("sigma", sigma), ("L", period)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        Ok(Self {
            d,
            sigma,
            period,
            nu: 2.0 * PI / period,
        })
    }

    /// Builds the parameters from the wavenumber unit instead of the period.
    pub fn from_nu(d: f64, sigma: f64, nu: f64) -> Result<Self, ModelError> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(ModelError::InvalidParameter { name: "nu", value: nu });
        }
        let mut p = Self::new(d, sigma, 2.0 * PI / nu)?;
        p.nu = nu;
        Ok(p)
    }
}

/// Vorticity function `gamma(Psi)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum VorticityFunction {
    #[default]
    Zero,
    Constant(f64),
    Polynomial(Poly),
}

impl VorticityFunction {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self, ModelError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::NonFiniteCoefficient);
        }
        Ok(Self::Polynomial(Poly::new(coeffs)))
    }

    fn as_poly(&self) -> Poly {
        match self {
            Self::Zero => Poly::zero(),
            Self::Constant(g) => Poly::new(vec![*g]),
            Self::Polynomial(p) => p.clone(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(g) => *g,
            Self::Polynomial(p) => p.eval(x),
        }
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        match self {
            Self::Zero | Self::Constant(_) => 0.0,
            Self::Polynomial(p) => p.derivative().eval(x),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match self {
            Self::Zero | Self::Constant(_) => 0.0,
            Self::Polynomial(p) => p.derivative().derivative().eval(x),
        }
    }

    /// True when `gamma'` is unbounded on the real line.
    pub fn has_unbounded_derivative(&self) -> bool {
        self.as_poly().degree().is_some_and(|n| n >= 2)
    }

    pub fn is_zero(&self) -> bool {
        self.as_poly().is_zero()
    }
}

/// Swirl function `F(Psi)` with `F(0) = 0`.
///
/// The derived polynomials are built once: `F'`, `F''`, `F F'`, `(F F')'`,
/// `(F F')''`, the factored quotient `G(x) = F(x) / x` and `G F'`, which
/// equals `(F F')(x) / x` without any division.
#[derive(Debug, Clone, PartialEq)]
pub struct SwirlFunction {
    f: Poly,
    f1: Poly,
    f2: Poly,
    ff1: Poly,
    ff1_d1: Poly,
    ff1_d2: Poly,
    g: Poly,
    g_f1: Poly,
    g_f1_d1: Poly,
}

impl Default for SwirlFunction {
    fn default() -> Self {
        Self::zero()
    }
}

impl SwirlFunction {
    /// Builds `F` from coefficients listed lowest degree first.
    ///
    /// A nonzero constant coefficient is rejected.
    pub fn new(coeffs: Vec<f64>) -> Result<Self, ModelError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::NonFiniteCoefficient);
        }
        if let Some(&c0) = coeffs.first() {
            if c0 != 0.0 {
                return Err(ModelError::HardViolation(c0));
            }
        }
        let f = Poly::new(coeffs);
        let f1 = f.derivative();
        let f2 = f1.derivative();
        let ff1 = f.mul(&f1);
        let ff1_d1 = ff1.derivative();
        let ff1_d2 = ff1_d1.derivative();
        let g = f.shift_down();
        let g_f1 = g.mul(&f1);
        let g_f1_d1 = g_f1.derivative();
        Ok(Self {
            f,
            f1,
            f2,
            ff1,
            ff1_d1,
            ff1_d2,
            g,
            g_f1,
            g_f1_d1,
        })
    }

    pub fn zero() -> Self {
        Self::new(Vec::new()).expect("zero swirl is admissible")
    }

    pub fn coeffs(&self) -> &[f64] {
        self.f.coeffs()
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_zero()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.f.eval(x)
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        self.f1.eval(x)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        self.f2.eval(x)
    }

    /// `F(x) F'(x)`.
    pub fn ff1(&self, x: f64) -> f64 {
        self.ff1.eval(x)
    }

    /// `(F F')'(x)`.
    pub fn ff1_deriv1(&self, x: f64) -> f64 {
        self.ff1_d1.eval(x)
    }

    /// `(F F')''(x)`.
    pub fn ff1_deriv2(&self, x: f64) -> f64 {
        self.ff1_d2.eval(x)
    }

    /// `G(x) = F(x) / x`, continuous at zero with `G(0) = F'(0)`.
    pub fn g(&self, x: f64) -> f64 {
        self.g.eval(x)
    }

    /// `G(x) F'(x) = (F F')(x) / x`.
    pub fn g_f1(&self, x: f64) -> f64 {
        self.g_f1.eval(x)
    }

    /// Derivative of `G F'`.
    pub fn g_f1_deriv1(&self, x: f64) -> f64 {
        self.g_f1_d1.eval(x)
    }

    pub fn g_poly(&self) -> &Poly {
        &self.g
    }

    /// True when `(F F')'` is unbounded on the real line.
    pub fn has_unbounded_derivative(&self) -> bool {
        self.ff1_d1.degree().is_some_and(|n| n >= 1)
    }
}

/// A complete jet model: parameters plus the two profile functions.
#[derive(Debug, Clone, PartialEq)]
pub struct JetModel {
    pub params: FlowParameters,
    pub gamma: VorticityFunction,
    pub swirl: SwirlFunction,
}

impl JetModel {
    pub fn new(params: FlowParameters, gamma: VorticityFunction, swirl: SwirlFunction) -> Self {
        Self {
            params,
            gamma,
            swirl,
        }
    }

    pub fn irrotational(params: FlowParameters) -> Self {
        Self::new(params, VorticityFunction::Zero, SwirlFunction::zero())
    }

    pub fn constant_vorticity(params: FlowParameters, gamma0: f64) -> Self {
        Self::new(
            params,
            VorticityFunction::Constant(gamma0),
            SwirlFunction::zero(),
        )
    }

    /// `(d^2 gamma + F F')(x)`, the combination entering the surface terms.
    pub fn surface_source(&self, x: f64) -> f64 {
        let d = self.params.d;
        d * d * self.gamma.eval(x) + self.swirl.ff1(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub interval: (f64, f64),
    /// Sampled supremum of `|gamma'|` over the working interval.
    pub gamma_deriv_sup: f64,
    /// Sampled supremum of `|(F F')'|` over the working interval.
    pub swirl_deriv_sup: f64,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.gamma_deriv_sup.is_finite() && self.swirl_deriv_sup.is_finite()
    }
}

const VALIDATION_SAMPLES: usize = 2001;

/// Checks the admissibility assumptions on `gamma` and `F` over a working
/// interval of stream-function values.
///
/// `F(0) = 0` is already enforced by [`SwirlFunction::new`], which returns
/// [`ModelError::HardViolation`]; this routine reports the derivative bounds
/// and warns when a bound holds only locally.
pub fn validate_assumptions(
    gamma: &VorticityFunction,
    swirl: &SwirlFunction,
    interval: (f64, f64),
) -> Result<ValidationReport, ModelError> {
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(ModelError::BadInterval(a, b));
    }
    if swirl.eval(0.0) != 0.0 {
        return Err(ModelError::HardViolation(swirl.eval(0.0)));
    }
    let sup = |f: &dyn Fn(f64) -> f64| {
        (0..VALIDATION_SAMPLES)
            .map(|i| a + (b - a) * i as f64 / (VALIDATION_SAMPLES - 1) as f64)
            .map(|x| f(x).abs())
            .fold(0.0_f64, f64::max)
    };
    let gamma_deriv_sup = sup(&|x| gamma.deriv1(x));
    let swirl_deriv_sup = sup(&|x| swirl.ff1_deriv1(x));
    let mut warnings = Vec::new();
    if gamma.has_unbounded_derivative() {
        warnings.push(
            "gamma' is unbounded on R; the bound holds only on the working interval".to_string(),
        );
    }
    if swirl.has_unbounded_derivative() {
        warnings.push(
            "(F F')' is unbounded on R; the bound holds only on the working interval".to_string(),
        );
    }
    Ok(ValidationReport {
        interval,
        gamma_deriv_sup,
        swirl_deriv_sup,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_functions_have_zero_bounds() {
        let r = validate_assumptions(
            &VorticityFunction::Zero,
            &SwirlFunction::zero(),
            (-3.0, 5.0),
        )
        .unwrap();
        assert_eq!(r.gamma_deriv_sup, 0.0);
        assert_eq!(r.swirl_deriv_sup, 0.0);
        assert!(r.is_valid());
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn constant_vorticity_is_valid() {
        let r = validate_assumptions(
            &VorticityFunction::Constant(2.0),
            &SwirlFunction::zero(),
            (-1.0, 1.0),
        )
        .unwrap();
        assert_eq!(r.gamma_deriv_sup, 0.0);
        assert!(r.is_valid());
    }

    #[test]
    fn nonzero_swirl_constant_is_a_hard_violation() {
        assert_eq!(
            SwirlFunction::new(vec![0.1]).unwrap_err(),
            ModelError::HardViolation(0.1)
        );
    }

    #[test]
    fn quadratic_gamma_warns() {
        let gamma = VorticityFunction::polynomial(vec![1.0, 0.0, 3.0]).unwrap();
        let swirl = SwirlFunction::new(vec![0.0, 0.5, 0.2]).unwrap();
        let r = validate_assumptions(&gamma, &swirl, (-1.0, 2.0)).unwrap();
        assert_eq!(r.warnings.len(), 2);
        assert!((r.gamma_deriv_sup - 12.0).abs() < 1e-12);
        assert!(r.is_valid());
    }

    #[test]
    fn bad_interval_is_rejected() {
        let err = validate_assumptions(
            &VorticityFunction::Zero,
            &SwirlFunction::zero(),
            (1.0, f64::INFINITY),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::BadInterval(..)));
    }

    #[test]
    fn parameters_store_nu() {
        let p = FlowParameters::new(1.0, 1.0, 3.0).unwrap();
        assert!((p.nu * p.period - 2.0 * PI).abs() < 1e-15);
        assert!(FlowParameters::new(0.0, 1.0, 1.0).is_err());
        assert!(FlowParameters::new(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn g_factorization_matches_f_over_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let coeffs = vec![0.0, 0.7, -0.3, 0.25, 0.05];
        let swirl = SwirlFunction::new(coeffs.clone()).unwrap();
        assert_eq!(swirl.g_poly().degree(), Some(3));
        assert_eq!(swirl.g(0.0), swirl.deriv1(0.0));
        for _ in 0..20 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let lhs = x * swirl.g(x);
            let rhs = swirl.eval(x);
            assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs().max(1.0), "x={x}");
            let ff1_over_x = swirl.ff1(x) / x;
            assert!((swirl.g_f1(x) - ff1_over_x).abs() <= 1e-12 * ff1_over_x.abs().max(1.0));
        }
    }

    #[test]
    fn constant_gamma_has_zero_derivative() {
        let g = VorticityFunction::Constant(-4.5);
        for x in [-10.0, 0.0, 0.3, 1e6] {
            assert_eq!(g.deriv1(x), 0.0);
            assert_eq!(g.deriv2(x), 0.0);
        }
    }

    #[test]
    fn polynomial_derivative_matches_central_differences() {
        let g = VorticityFunction::polynomial(vec![0.2, -1.0, 0.5, 0.3]).unwrap();
        let x = 0.7;
        let exact = g.deriv1(x);
        let err = |h: f64| ((g.eval(x + h) - g.eval(x - h)) / (2.0 * h) - exact).abs();
        let (e1, e2) = (err(1e-2), err(5e-3));
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "observed order {order}");
        let exact2 = g.deriv2(x);
        let h = 1e-3;
        let fd2 = (g.deriv1(x + h) - g.deriv1(x - h)) / (2.0 * h);
        assert!((fd2 - exact2).abs() < 1e-6);
    }

    #[test]
    fn swirl_derived_polynomials_are_consistent() {
        let s = SwirlFunction::new(vec![0.0, 1.5, -0.4]).unwrap();
        let x = 0.37;
        let ff1 = s.eval(x) * s.deriv1(x);
        assert!((s.ff1(x) - ff1).abs() < 1e-14);
        let d1 = s.deriv1(x).powi(2) + s.eval(x) * s.deriv2(x);
        assert!((s.ff1_deriv1(x) - d1).abs() < 1e-14);
    }
}
