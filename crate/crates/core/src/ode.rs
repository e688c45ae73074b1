//! Adaptive Dormand–Prince 5(4) integrator with continuous output.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("solution blew up near s = {at} (|y| = {norm:e})")]
    BlowUp { at: f64, norm: f64 },
    #[error("step size underflow at s = {0}")]
    StepUnderflow(f64),
    #[error("too many steps ({0})")]
    TooManySteps(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

/// Continuous solution on `[t_start, t_end]`.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    segments: Vec<Segment>,
    t_start: f64,
    t_end: f64,
    y_start: Vec<f64>,
    y_end: Vec<f64>,
    /// Largest absolute value attained by each component at the step ends.
    pub max_abs: Vec<f64>,
    pub n_steps: usize,
    pub n_rejected: usize,
}

impl DenseSolution {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn y_end(&self) -> &[f64] {
        &self.y_end
    }

    pub fn y_start(&self) -> &[f64] {
        &self.y_start
    }

    pub fn dim(&self) -> usize {
        self.y_end.len()
    }

    /// Step end points, starting with `t_start`.
    pub fn mesh(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.segments.iter().map(|s| s.t0).collect();
        m.push(self.t_end);
        m
    }

    /// Evaluates component `i` at `t`, clamped to the integration interval.
    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        let t = t.clamp(self.t_start, self.t_end);
        if t >= self.t_end {
            return self.y_end[i];
        }
        let k = self
            .segments
            .partition_point(|s| s.t0 <= t)
            .saturating_sub(1);
        let seg = &self.segments[k];
        let th = (t - seg.t0) / seg.h;
        let th1 = 1.0 - th;
        let r = &seg.r;
        r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])))
    }

    /// Derivative of the continuous extension of component `i` at `t`.
    pub fn eval_derivative_component(&self, t: f64, i: usize) -> f64 {
        let t = t.clamp(self.t_start, self.t_end);
        let k = self
            .segments
            .partition_point(|s| s.t0 <= t)
            .saturating_sub(1)
            .min(self.segments.len() - 1);
        let seg = &self.segments[k];
        let th = ((t - seg.t0) / seg.h).min(1.0);
        let r = &seg.r;
        (r[1][i]
            + (1.0 - 2.0 * th) * r[2][i]
            + th * (2.0 - 3.0 * th) * r[3][i]
            + 2.0 * th * (1.0 - th) * (1.0 - 2.0 * th) * r[4][i])
            / seg.h
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        (0..self.dim()).map(|i| self.eval_component(t, i)).collect()
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
///
/// Growth beyond `blowup` in any component aborts with [`OdeError::BlowUp`].
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    tol: Tolerances,
    blowup: f64,
) -> Result<DenseSolution, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut segments = Vec::new();
    let mut max_abs: Vec<f64> = y.iter().map(|v| v.abs()).collect();

    f(t, &y, &mut k1);
    let span = t1 - t0;
    let mut h = initial_step(&y, &k1, tol, span);
    let mut n_rejected = 0;
    let mut fac_old: f64 = 1e-4;
    let max_steps = 200_000;

    while t < t1 {
        if segments.len() >= max_steps {
            return Err(OdeError::TooManySteps(max_steps));
        }
        if h < 1e-14 * span.max(t.abs()) {
            return Err(OdeError::StepUnderflow(t));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &ynew, &mut k7);

        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();

        if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            n_rejected += 1;
            continue;
        }

        if err <= 1.0 {
            let mut r1 = vec![0.0; n];
            let mut r2 = vec![0.0; n];
            let mut r3 = vec![0.0; n];
            let mut r4 = vec![0.0; n];
            let mut r5 = vec![0.0; n];
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k1[i] - dy;
                r1[i] = y[i];
                r2[i] = dy;
                r3[i] = bspl;
                r4[i] = dy - h * k7[i] - bspl;
                r5[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            segments.push(Segment {
                t0: t,
                h,
                r: [r1, r2, r3, r4, r5],
            });
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            let mut norm = 0.0_f64;
            for (m, v) in max_abs.iter_mut().zip(&y) {
                *m = m.max(v.abs());
                norm = norm.max(v.abs());
            }
            if norm > blowup {
                return Err(OdeError::BlowUp { at: t, norm });
            }
            // Lund stabilisation of the step-size controller.
            let fac = err.max(1e-10).powf(0.17) / fac_old.powf(0.04);
            fac_old = err.max(1e-4);
            h *= (0.9 / fac).clamp(0.2, 10.0);
        } else {
            n_rejected += 1;
            h *= (0.9 / err.powf(0.2)).clamp(0.2, 1.0);
        }
    }

    Ok(DenseSolution {
        n_steps: segments.len(),
        segments,
        t_start: t0,
        t_end: t1,
        y_start: y0.to_vec(),
        y_end: y,
        max_abs,
        n_rejected,
    })
}

fn initial_step(y: &[f64], f0: &[f64], tol: Tolerances, span: f64) -> f64 {
    let n = y.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = tol.atol + tol.rtol * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (fi / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h.min(0.1 * span).max(1e-10 * span)
}
