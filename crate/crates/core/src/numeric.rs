//! Scalar abstraction and small numerical kernels shared across modules.

use std::fmt::Debug;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_traits::{Float, FloatConst, FromPrimitive};

use crate::error::{Error, Result};

/// Floating point scalar accepted by the generic kernels (f32 or f64).
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {}

pub(crate) fn cast<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 is representable in every Real type")
}

/// `log(sum(exp(x)))` with max subtraction. Returns `-inf` for an empty slice
/// or when every entry is `-inf`.
pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    if max == T::infinity() {
        return max;
    }
    let sum = values
        .iter()
        .fold(T::zero(), |acc, &v| acc + (v - max).exp());
    max + sum.ln()
}

/// `log(mean(exp(x)))`.
pub fn log_mean_exp<T: Real>(values: &[T]) -> T {
    if values.is_empty() {
        return T::neg_infinity();
    }
    log_sum_exp(values) - cast::<T>(values.len() as f64).ln()
}

/// Turns log weights into probabilities in place.
pub fn normalize_log_weights<T: Real>(weights: &mut [T]) {
    let total = log_sum_exp(weights);
    for w in weights.iter_mut() {
        *w = (*w - total).exp();
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Log of the multivariate gamma function of dimension `dim`.
pub fn ln_multi_gamma(x: f64, dim: usize) -> f64 {
    let d = dim as f64;
    let mut out = d * (d - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for j in 0..dim {
        out += ln_gamma(x - j as f64 / 2.0);
    }
    out
}

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub fn normal_lpdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    -0.5 * (LN_2PI + var.ln() + z * z / var)
}

/// Inverse-gamma log density, shape `a` and scale `b`: density ∝ x^(-a-1) e^(-b/x).
pub fn inv_gamma_lpdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// Gamma log density with shape and rate.
pub fn gamma_lpdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x < 0.0 || (x == 0.0 && shape != 1.0) {
        return if x == 0.0 && shape < 1.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Location-scale Student-t log density.
pub fn student_t_lpdf(x: f64, dof: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    ln_gamma((dof + 1.0) / 2.0)
        - ln_gamma(dof / 2.0)
        - 0.5 * (dof * std::f64::consts::PI).ln()
        - scale.ln()
        - (dof + 1.0) / 2.0 * (z * z / dof).ln_1p()
}

/// Cholesky factor with a symmetrization pass first; fails on non-SPD input.
pub fn cholesky(mat: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let sym = (mat + mat.transpose()) * 0.5;
    Cholesky::new(sym).ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))
}

/// `log |A|` from a Cholesky factor.
pub fn chol_log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Multivariate Student-t log density with `dof` degrees of freedom and
/// scale matrix given through its Cholesky factor.
pub fn multi_student_t_lpdf(
    x: &DVector<f64>,
    dof: f64,
    loc: &DVector<f64>,
    scale_chol: &Cholesky<f64, Dyn>,
) -> f64 {
    let d = x.len() as f64;
    let diff = x - loc;
    let sol = scale_chol.l().solve_lower_triangular(&diff).expect("triangular");
    let maha = sol.norm_squared();
    ln_gamma((dof + d) / 2.0)
        - ln_gamma(dof / 2.0)
        - d / 2.0 * (dof * std::f64::consts::PI).ln()
        - 0.5 * chol_log_det(scale_chol)
        - (dof + d) / 2.0 * (maha / dof).ln_1p()
}

/// Multivariate normal log density given the covariance Cholesky factor.
pub fn multi_normal_lpdf(x: &[f64], mean: &DVector<f64>, chol: &Cholesky<f64, Dyn>, log_det: f64) -> f64 {
    let d = mean.len();
    let diff = DVector::from_iterator(d, x.iter().zip(mean.iter()).map(|(a, b)| a - b));
    let sol = chol.l().solve_lower_triangular(&diff).expect("triangular");
    -0.5 * (d as f64 * LN_2PI + log_det + sol.norm_squared())
}
