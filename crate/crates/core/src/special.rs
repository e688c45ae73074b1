//! Modified Bessel functions `I0`, `I1`, `I2` and `K1` for real arguments.
//!
//! Ascending series are used up to [`SERIES_CROSSOVER`]; above it the
//! Hankel asymptotic expansion takes over. Both branches agree to about
//! one ulp at the crossover.

use std::f64::consts::PI;
use thiserror::Error;

/// Largest argument accepted before `exp(x)` would overflow.
pub const OVERFLOW_GUARD: f64 = 700.0;
/// Switch point between the ascending series and the asymptotic expansion.
pub const SERIES_CROSSOVER: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("argument {0} exceeds the overflow guard {OVERFLOW_GUARD}")]
    OverflowRange(f64),
    #[error("argument {0} outside the domain")]
    DomainError(f64),
    #[error("unsupported order {0}; only 0, 1 and 2 are available")]
    UnsupportedOrder(u32),
}

/// `(x/2)^{-n} I_n(x)` as a power series in `(x/2)^2`.
fn scaled_series(n: u32, x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut fact_n = 1.0;
    for j in 1..=n {
        fact_n *= j as f64;
    }
    let mut term = 1.0 / fact_n;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= y / (k * (k + n as f64));
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `sqrt(2 pi x) e^{-x} I_n(x)` from the Hankel expansion.
fn asymptotic_scaled(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_i_unchecked(n: u32, x: f64) -> f64 {
    if x <= SERIES_CROSSOVER {
        (0.5 * x).powi(n as i32) * scaled_series(n, x)
    } else {
        asymptotic_scaled(n, x) * x.exp() / (2.0 * PI * x).sqrt()
    }
}

/// Modified Bessel function of the first kind `I_order(x)` for `x >= 0`.
pub fn bessel_i(order: u32, x: f64) -> Result<f64, BesselError> {
    if order > 2 {
        return Err(BesselError::UnsupportedOrder(order));
    }
    if !(x >= 0.0) {
        return Err(BesselError::DomainError(x));
    }
    if x > OVERFLOW_GUARD {
        return Err(BesselError::OverflowRange(x));
    }
    Ok(bessel_i_unchecked(order, x))
}

pub fn i0(x: f64) -> f64 {
    bessel_i_unchecked(0, x.abs())
}

pub fn i1(x: f64) -> f64 {
    x.signum() * bessel_i_unchecked(1, x.abs())
}

pub fn i2(x: f64) -> f64 {
    bessel_i_unchecked(2, x.abs())
}

/// `I1(x) / x`, finite at the origin with value `1/2`.
pub fn i1_over_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_CROSSOVER {
        0.5 * scaled_series(1, ax)
    } else {
        bessel_i_unchecked(1, ax) / ax
    }
}

/// `I1(x) / I0(x)` without forming the exponentials for large `x`.
pub fn ratio_i1_i0(x: f64) -> f64 {
    let ax = x.abs();
    let r = if ax <= SERIES_CROSSOVER {
        0.5 * ax * scaled_series(1, ax) / scaled_series(0, ax)
    } else {
        asymptotic_scaled(1, ax) / asymptotic_scaled(0, ax)
    };
    x.signum() * r
}

/// Modified Bessel function of the second kind `K1(x)` for `x > 0`.
///
/// Evaluated from `K1(x) = int_0^inf exp(-x cosh t) cosh t dt` with the
/// trapezoidal rule, which converges geometrically for this integrand.
pub fn bessel_k1(x: f64) -> Result<f64, BesselError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(BesselError::DomainError(x));
    }
    let h: f64 = 0.02;
    let mut sum = 0.5 * (-x).exp();
    let mut t = h;
    loop {
        let ch = t.cosh();
        let e = x * ch;
        if e > x + 745.0 {
            break;
        }
        sum += (-e).exp() * ch;
        t += h;
    }
    Ok(sum * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    // x, I0, I1, I2 from a 60-digit evaluation.
    const TABLE: &[(f64, f64, f64, f64)] = &[
        (1e-8, 1.000000000000000025, 5.0000000000000000625e-9, 1.250000000000000010417e-17),
        (0.1, 1.0025015629340956014, 0.05006252604709269211381, 0.001251041992241759124029),
        (1.0, 1.266065877752008335598, 0.5651591039924850272077, 0.1357476697670382811829),
        (2.0, 2.279585302336067267437, 1.590636854637329063382, 0.688948447698738204055),
        (5.0, 27.23987182360444689454, 24.33564214245052719914, 17.50561496662423601489),
        (10.0, 2815.71662846625447147, 2670.988303701254654341, 2281.518967726003540602),
        (15.0, 339649.3732979138795217, 328124.9219702063967337, 295899.3837018863599572),
        (20.0, 43558282.55955353327211, 42454973.38512777018141, 39312785.22104075625397),
        (30.0, 781672297823.9774897174, 768532038938.9569994943, 730436828561.3803564178),
        (50.0, 293255378384933632665.5, 290307859010355679675.1, 281643064024519405478.5),
        (700.0, 1.529593347671873736316e302, 1.528500390233900688145e302, 1.525226203699776877207e302),
    ];

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn matches_high_precision_table() {
        for &(x, e0, e1, e2) in TABLE {
            let tol = if x <= 50.0 { 1e-12 } else { 1e-11 };
            assert!(rel(i0(x), e0) < tol, "I0({x})");
            assert!(rel(i1(x), e1) < tol, "I1({x})");
            assert!(rel(i2(x), e2) < tol, "I2({x})");
        }
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(2, 0.0).unwrap(), 0.0);
        assert_eq!(i1_over_x(0.0), 0.5);
    }

    #[test]
    fn guards() {
        assert_eq!(
            bessel_i(0, 701.0).unwrap_err(),
            BesselError::OverflowRange(701.0)
        );
        assert!(matches!(bessel_i(1, -1.0), Err(BesselError::DomainError(_))));
        assert!(matches!(bessel_i(3, 1.0), Err(BesselError::UnsupportedOrder(3))));
        assert!(matches!(bessel_k1(0.0), Err(BesselError::DomainError(_))));
    }

    #[test]
    fn branches_agree_at_crossover() {
        for n in 0..3 {
            let x = SERIES_CROSSOVER;
            let s = (0.5 * x).powi(n as i32) * scaled_series(n, x);
            let a = asymptotic_scaled(n, x) * x.exp() / (2.0 * PI * x).sqrt();
            assert!(rel(s, a) < 1e-13, "order {n}: {s} vs {a}");
        }
    }

    #[test]
    fn k1_values() {
        let table = [
            (1e-6, 999999.9999927842789632),
            (0.5, 1.656441120003300893696),
            (1.0, 0.6019072301972345747375),
            (2.0, 0.1398658818165224272846),
            (10.0, 1.864877345382558459682e-5),
            (20.0, 5.88305796955703817765e-10),
        ];
        for (x, e) in table {
            assert!(rel(bessel_k1(x).unwrap(), e) < 1e-12, "K1({x})");
        }
        assert!(bessel_k1(1e-6).unwrap() > 1e5);
        assert!(bessel_k1(10.0).unwrap() < 1e-4);
    }

    fn log_grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
        let (la, lb) = (a.ln(), b.ln());
        (0..n).map(move |i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
    }

    #[test]
    fn recurrence_holds_on_log_grid() {
        for x in log_grid(1e-4, 50.0, 400) {
            let lhs = i0(x) - i2(x);
            let rhs = 2.0 * i1(x) / x;
            assert!(rel(lhs, rhs) < 1e-11, "x={x}");
        }
    }

    #[test]
    fn derivative_identity_converges() {
        for x in [0.3, 1.0, 4.0, 12.0, 25.0] {
            let exact = i0(x) - i1(x) / x;
            let err = |h: f64| ((i1(x + h) - i1(x - h)) / (2.0 * h) - exact).abs();
            let (e1, e2) = (err(1e-2 * x), err(5e-3 * x));
            assert!((e1 / e2).log2() >= 1.9, "x={x}");
        }
    }

    #[test]
    fn ordering_and_ratio_bounds() {
        let mut prev = [0.0; 3];
        for x in log_grid(1e-3, 50.0, 2000) {
            let v = [i0(x), i1(x), i2(x)];
            assert!(v[0] >= v[1] && v[1] >= v[2] && v[2] > 0.0);
            for k in 0..3 {
                assert!(v[k] > prev[k]);
            }
            prev = v;
            let r = ratio_i1_i0(x);
            assert!(rel(r, v[1] / v[0]) < 1e-14);
            assert!(x / (1.0 + (x * x + 1.0).sqrt()) <= r);
            assert!(r <= x / (x * x + 4.0).sqrt() * (1.0 + 1e-15));
        }
    }

    #[test]
    fn k1_is_decreasing() {
        let mut prev = f64::INFINITY;
        for x in log_grid(1e-3, 30.0, 200) {
            let k = bessel_k1(x).unwrap();
            assert!(k > 0.0 && k < prev);
            prev = k;
        }
    }
}
