//! Newton correction with a forward-difference Jacobian of the full
//! discrete residual, bordered by one scalar constraint.

use super::residual::{Evaluation, Frame, WaveProblem};
use super::WaveError;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// The extra scalar equation closing the system.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    FixedLambda(f64),
    /// `w . x = target`.
    Linear { weights: Vec<f64>, target: f64 },
}

impl Constraint {
    /// Pseudo-arclength: `tangent . (x - prev) = ds`.
    pub fn arclength(prev: &[f64], tangent: &[f64], ds: f64) -> Self {
        let target = tangent.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>() + ds;
        Self::Linear {
            weights: tangent.to_vec(),
            target,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::FixedLambda(l) => x[0] - l,
            Self::Linear { weights, target } => {
                weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - target
            }
        }
    }

    fn row(&self, n: usize) -> Vec<f64> {
        match self {
            Self::FixedLambda(_) => {
                let mut r = vec![0.0; n];
                r[0] = 1.0;
                r
            }
            Self::Linear { weights, .. } => weights.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    /// Reassemble the Jacobian when the residual drops by less than this factor.
    pub refresh_ratio: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 25,
            fd_step: 1e-7,
            refresh_ratio: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub q: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    pub jacobians: usize,
}

/// Forward-difference Jacobian of `F` at `x`, columns in parallel.
pub fn jacobian(problem: &WaveProblem, x: &[f64], fd_step: f64) -> Result<(DMatrix<f64>, Evaluation), WaveError> {
    let (lambda, eta, phi) = problem.split(x);
    let frame = problem.frame_at(lambda, eta)?;
    let solver = problem.solver(&frame)?;
    let base = problem.evaluate(&frame, eta, phi, &solver)?;
    let f0 = base.vector();
    let n = x.len();
    let ne = problem.grid.n_eta();
    let cols: Vec<Result<Vec<f64>, WaveError>> = (0..n)
        .into_par_iter()
        .map(|col| {
            let h = fd_step * x[col].abs().max(1.0);
            let mut xp = x.to_vec();
            xp[col] += h;
            let (l, e, p) = problem.split(&xp);
            let ev = if col == 0 {
                let fr = problem.frame_at(l, e)?;
                problem.evaluate(&fr, e, p, &solver)?
            } else if col <= ne {
                let fr: Frame = problem.frame(frame.profile.clone(), e)?;
                problem.evaluate(&fr, e, p, &solver)?
            } else {
                problem.evaluate(&frame, e, p, &solver)?
            };
            Ok(ev.vector().iter().zip(&f0).map(|(a, b)| (a - b) / h).collect())
        })
        .collect();
    let mut jac = DMatrix::zeros(n - 1, n);
    for (c, col) in cols.into_iter().enumerate() {
        for (r, v) in col?.into_iter().enumerate() {
            jac[(r, c)] = v;
        }
    }
    Ok((jac, base))
}

fn bordered(jac: &DMatrix<f64>, constraint: &Constraint) -> DMatrix<f64> {
    let n = jac.ncols();
    let row = constraint.row(n);
    DMatrix::from_fn(n, n, |r, c| if r + 1 == n { row[c] } else { jac[(r, c)] })
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `F(x) = 0` together with `constraint(x) = 0`, starting at `x0`.
pub fn newton_correct(
    problem: &WaveProblem,
    x0: &[f64],
    constraint: &Constraint,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, WaveError> {
    let mut x = x0.to_vec();
    let (jac, mut ev) = jacobian(problem, &x, opts.fd_step)?;
    let mut lu = bordered(&jac, constraint).lu();
    let mut jacobians = 1;
    let mut norm = sup(&ev.vector()).max(constraint.value(&x).abs());
    for it in 0..=opts.max_iter {
        if norm <= opts.tol {
            return Ok(NewtonOutcome {
                x,
                q: ev.q,
                iterations: it,
                residual_norm: norm,
                jacobians,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let mut rhs = ev.vector();
        rhs.push(constraint.value(&x));
        let step = lu
            .solve(&DVector::from_vec(rhs))
            .ok_or_else(|| WaveError::LinearSolveFailure("singular bordered Jacobian".into()))?;
        let mut damping = 1.0;
        let (next_x, next_ev) = loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - damping * s).collect();
            match problem.residual(&trial) {
                Ok(e) => break (trial, e),
                Err(WaveError::DomainCollapse(r)) => {
                    damping *= 0.5;
                    if damping < 1e-3 {
                        return Err(WaveError::DomainCollapse(r));
                    }
                }
                Err(e) => return Err(e),
            }
        };
        let next_norm = sup(&next_ev.vector()).max(constraint.value(&next_x).abs());
        if !next_norm.is_finite() {
            return Err(WaveError::NoConvergence {
                iterations: it + 1,
                residual: next_norm,
            });
        }
        let slow = next_norm > opts.refresh_ratio * norm;
        x = next_x;
        ev = next_ev;
        norm = next_norm;
        if slow && norm > opts.tol {
            let (j, _) = jacobian(problem, &x, opts.fd_step)?;
            lu = bordered(&j, constraint).lu();
            jacobians += 1;
        }
    }
    Err(WaveError::NoConvergence {
        iterations: opts.max_iter,
        residual: norm,
    })
}
