//! Thin wrapper over a MINPACK-style Levenberg–Marquardt solver, plus
//! linearized covariances and finite-difference Jacobians.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

type Residuals<'a> = dyn Fn(&[f64]) -> Option<Vec<f64>> + 'a;
type Jacobian<'a> = dyn Fn(&[f64]) -> Option<DMatrix<f64>> + 'a;

struct Problem<'a> {
    x: DVector<f64>,
    residuals: &'a Residuals<'a>,
    jacobian: &'a Jacobian<'a>,
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.x.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.x.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        (self.residuals)(self.x.as_slice()).map(DVector::from_vec)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        (self.jacobian)(self.x.as_slice())
    }
}

#[derive(Clone, Debug)]
pub struct LsqOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub evaluations: usize,
    pub converged: bool,
    pub termination: String,
}

impl LsqOutcome {
    pub fn sum_of_squares(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LsqSettings {
    pub tol: f64,
    /// Evaluation budget, in multiples of `(n_params + 1)`.
    pub patience: usize,
}

impl Default for LsqSettings {
    fn default() -> Self {
        LsqSettings { tol: 1e-14, patience: 200 }
    }
}

/// Minimizes `Σ r(x)²` starting from `x0`.
pub fn minimize(
    x0: &[f64],
    residuals: &Residuals<'_>,
    jacobian: &Jacobian<'_>,
    settings: LsqSettings,
) -> Result<LsqOutcome> {
    let problem = Problem { x: DVector::from_column_slice(x0), residuals, jacobian };
    let solver = LevenbergMarquardt::new()
        .with_ftol(settings.tol)
        .with_xtol(settings.tol)
        .with_gtol(settings.tol)
        .with_patience(settings.patience);
    let (problem, report) = solver.minimize(problem);
    let params: Vec<f64> = problem.x.iter().copied().collect();
    let r = (residuals)(&params).ok_or_else(|| Error::FitFailure(format!("residuals undefined at {params:?}")))?;
    let j = (jacobian)(&params).ok_or_else(|| Error::FitFailure(format!("Jacobian undefined at {params:?}")))?;
    use levenberg_marquardt::TerminationReason as T;
    let converged = matches!(
        report.termination,
        T::ResidualsZero | T::Orthogonal | T::Converged { .. } | T::NoImprovementPossible(_)
    );
    Ok(LsqOutcome {
        params,
        residuals: r,
        jacobian: j,
        evaluations: report.number_of_evaluations,
        converged,
        termination: format!("{:?}", report.termination),
    })
}

/// Central-difference Jacobian of `f` at `x` with steps `rel_step · max(|xᵢ|, 1)`.
pub fn central_jacobian(f: &Residuals<'_>, x: &[f64], rel_step: f64) -> Option<DMatrix<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = rel_step * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let up = f(&xp)?;
        xp[i] = x[i] - h;
        let down = f(&xp)?;
        xp[i] = x[i];
        cols.push(up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    let m = cols.first().map_or(0, Vec::len);
    Some(DMatrix::from_fn(m, x.len(), |r, c| cols[c][r]))
}

/// Gauss–Newton covariance `s² (JᵀJ)⁻¹`. With `scale_by_residual` the factor
/// `s²` is the reduced residual sum of squares; otherwise it is 1 (residuals
/// already divided by their standard deviations).
pub fn covariance(jacobian: &DMatrix<f64>, residuals: &[f64], scale_by_residual: bool) -> Option<DMatrix<f64>> {
    let (m, n) = jacobian.shape();
    let jtj = jacobian.transpose() * jacobian;
    let inv = jtj.try_inverse()?;
    let s2 = if scale_by_residual {
        if m <= n {
            return None;
        }
        residuals.iter().map(|r| r * r).sum::<f64>() / (m - n) as f64
    } else {
        1.0
    };
    Some(inv * s2)
}
