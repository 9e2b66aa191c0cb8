//! Per-component parameter containers.
//!
//! States that support Metropolis updates expose a bijection onto an
//! unconstrained real vector together with the log-Jacobian of the inverse
//! map (unconstrained -> constrained).

use std::fmt::Debug;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::io::{ParamArray, ParamMap};
use crate::numeric::{chol_log_det, cholesky};

pub trait ParamState: Clone + Debug + Send + Sync + 'static {
    const KIND: &'static str;

    fn is_valid(&self) -> bool;

    fn to_params(&self) -> ParamMap;

    fn from_params(params: &ParamMap) -> Result<Self>;

    fn to_unconstrained(&self) -> Result<Vec<f64>> {
        Err(Error::Capability("unconstrained transform"))
    }

    fn from_unconstrained(_u: &[f64]) -> Result<Self> {
        Err(Error::Capability("unconstrained transform"))
    }

    /// `log |d state / d u|` at `u`.
    fn log_det_jacobian(_u: &[f64]) -> Result<f64> {
        Err(Error::Capability("unconstrained transform"))
    }

    /// Gradient of [`ParamState::log_det_jacobian`] with respect to `u`.
    fn log_det_jacobian_grad(_u: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Capability("unconstrained transform"))
    }
}

fn scalar_param(params: &ParamMap, name: &str, kind: &str) -> Result<f64> {
    params
        .get(name)
        .and_then(ParamArray::as_scalar)
        .ok_or_else(|| Error::KindMismatch(format!("{kind} state needs a scalar `{name}` parameter")))
}

fn check_len(u: &[f64], expected: usize) -> Result<()> {
    if u.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: u.len(),
        });
    }
    Ok(())
}

/// Univariate location-scale state. `var` is the variance for normal
/// kernels and the scale for the Laplace kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniLSState {
    pub mean: f64,
    pub var: f64,
}

impl UniLSState {
    pub fn new(mean: f64, var: f64) -> Self {
        Self { mean, var }
    }
}

impl ParamState for UniLSState {
    const KIND: &'static str = "UniLS";

    fn is_valid(&self) -> bool {
        self.mean.is_finite() && self.var.is_finite() && self.var > 0.0
    }

    fn to_params(&self) -> ParamMap {
        ParamMap::from([
            ("mean".to_string(), ParamArray::scalar(self.mean)),
            ("var".to_string(), ParamArray::scalar(self.var)),
        ])
    }

    fn from_params(params: &ParamMap) -> Result<Self> {
        let state = Self::new(
            scalar_param(params, "mean", Self::KIND)?,
            scalar_param(params, "var", Self::KIND)?,
        );
        if !state.is_valid() {
            return Err(Error::InvalidParameter(format!("invalid UniLS state {state:?}")));
        }
        Ok(state)
    }

    fn to_unconstrained(&self) -> Result<Vec<f64>> {
        Ok(vec![self.mean, self.var.ln()])
    }

    fn from_unconstrained(u: &[f64]) -> Result<Self> {
        check_len(u, 2)?;
        Ok(Self::new(u[0], u[1].exp()))
    }

    fn log_det_jacobian(u: &[f64]) -> Result<f64> {
        check_len(u, 2)?;
        Ok(u[1])
    }

    fn log_det_jacobian_grad(u: &[f64]) -> Result<Vec<f64>> {
        check_len(u, 2)?;
        Ok(vec![0.0, 1.0])
    }
}

/// Multivariate location-scale state with a cached Cholesky factor of the
/// covariance.
#[derive(Debug, Clone)]
pub struct MultiLSState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl MultiLSState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        let chol = cholesky(&cov)?;
        let log_det = chol_log_det(&chol);
        Ok(Self { mean, cov, chol, log_det })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn cov_chol(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    pub fn cov_log_det(&self) -> f64 {
        self.log_det
    }
}

impl PartialEq for MultiLSState {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.cov == other.cov
    }
}

impl ParamState for MultiLSState {
    const KIND: &'static str = "MultiLS";

    fn is_valid(&self) -> bool {
        let sym = (&self.cov - self.cov.transpose()).amax() <= 1e-10;
        sym && self.mean.iter().all(|x| x.is_finite()) && self.log_det.is_finite()
    }

    fn to_params(&self) -> ParamMap {
        let d = self.dim();
        let row_major: Vec<f64> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| self.cov[(i, j)]).collect();
        ParamMap::from([
            ("mean".to_string(), ParamArray::vector(self.mean.as_slice().to_vec())),
            ("cov".to_string(), ParamArray::matrix(d, d, row_major)),
        ])
    }

    fn from_params(params: &ParamMap) -> Result<Self> {
        let mismatch = || Error::KindMismatch("MultiLS state needs `mean` vector and `cov` matrix".into());
        let mean = params.get("mean").ok_or_else(mismatch)?;
        let cov = params.get("cov").ok_or_else(mismatch)?;
        let d = mean.data.len();
        if cov.shape != [d, d] || cov.data.len() != d * d {
            return Err(mismatch());
        }
        Self::new(
            DVector::from_column_slice(&mean.data),
            DMatrix::from_row_slice(d, d, &cov.data),
        )
    }
}

/// Gamma kernel parameters (shape, rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaState {
    pub shape: f64,
    pub rate: f64,
}

impl GammaState {
    pub fn new(shape: f64, rate: f64) -> Self {
        Self { shape, rate }
    }
}

impl ParamState for GammaState {
    const KIND: &'static str = "Gamma";

    fn is_valid(&self) -> bool {
        self.shape.is_finite() && self.rate.is_finite() && self.shape > 0.0 && self.rate > 0.0
    }

    fn to_params(&self) -> ParamMap {
        ParamMap::from([
            ("shape".to_string(), ParamArray::scalar(self.shape)),
            ("rate".to_string(), ParamArray::scalar(self.rate)),
        ])
    }

    fn from_params(params: &ParamMap) -> Result<Self> {
        let state = Self::new(
            scalar_param(params, "shape", Self::KIND)?,
            scalar_param(params, "rate", Self::KIND)?,
        );
        if !state.is_valid() {
            return Err(Error::InvalidParameter(format!("invalid Gamma state {state:?}")));
        }
        Ok(state)
    }

    fn to_unconstrained(&self) -> Result<Vec<f64>> {
        Ok(vec![self.shape.ln(), self.rate.ln()])
    }

    fn from_unconstrained(u: &[f64]) -> Result<Self> {
        check_len(u, 2)?;
        Ok(Self::new(u[0].exp(), u[1].exp()))
    }

    fn log_det_jacobian(u: &[f64]) -> Result<f64> {
        check_len(u, 2)?;
        Ok(u[0] + u[1])
    }

    fn log_det_jacobian_grad(u: &[f64]) -> Result<Vec<f64>> {
        check_len(u, 2)?;
        Ok(vec![1.0, 1.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn uni_ls_unconstrained_examples() {
        assert_eq!(UniLSState::new(0.0, 1.0).to_unconstrained().unwrap(), vec![0.0, 0.0]);
        assert_eq!(UniLSState::new(2.0, 4.0).to_unconstrained().unwrap(), vec![2.0, 4f64.ln()]);
    }

    #[test]
    fn log_det_jacobian_examples() {
        assert_eq!(UniLSState::log_det_jacobian(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(UniLSState::log_det_jacobian(&[5.0, 4f64.ln()]).unwrap(), 4f64.ln());
        assert!(matches!(
            UniLSState::log_det_jacobian(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn multi_ls_has_no_transform() {
        let s = MultiLSState::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(s.to_unconstrained(), Err(Error::Capability(_))));
    }

    #[test]
    fn multi_ls_cached_log_det() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let s = MultiLSState::new(DVector::zeros(2), cov.clone()).unwrap();
        assert_relative_eq!(s.cov_log_det(), cov.determinant().ln(), epsilon = 1e-8);
        assert!(s.is_valid());
        let back = MultiLSState::from_params(&s.to_params()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn kind_mismatch_from_params() {
        let uni = UniLSState::new(0.0, 1.0).to_params();
        assert!(matches!(GammaState::from_params(&uni), Err(Error::KindMismatch(_))));
        assert!(matches!(MultiLSState::from_params(&uni), Err(Error::KindMismatch(_))));
    }

    /// Central-difference Jacobian determinant of the unconstrained -> state map.
    fn numeric_log_det<S: ParamState>(u: &[f64], coords: fn(&S) -> [f64; 2]) -> f64 {
        let h = 1e-6;
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[j] += h;
            dn[j] -= h;
            let fu = coords(&S::from_unconstrained(&up).unwrap());
            let fd = coords(&S::from_unconstrained(&dn).unwrap());
            for i in 0..2 {
                jac[i][j] = (fu[i] - fd[i]) / (2.0 * h);
            }
        }
        (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]).abs().ln()
    }

    proptest! {
        #[test]
        fn uni_ls_round_trip(mean in -1e3..1e3f64, var in 1e-6..1e6f64) {
            let s = UniLSState::new(mean, var);
            let back = UniLSState::from_unconstrained(&s.to_unconstrained().unwrap()).unwrap();
            prop_assert!((back.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
            prop_assert!((back.var - var).abs() <= 1e-12 * var.max(1.0));
        }

        #[test]
        fn gamma_round_trip(shape in 1e-3..1e3f64, rate in 1e-3..1e3f64) {
            let s = GammaState::new(shape, rate);
            let back = GammaState::from_unconstrained(&s.to_unconstrained().unwrap()).unwrap();
            prop_assert!((back.shape - shape).abs() <= 1e-12 * shape.max(1.0));
            prop_assert!((back.rate - rate).abs() <= 1e-12 * rate.max(1.0));
        }

        #[test]
        fn uni_ls_log_det_matches_finite_differences(m in -5.0..5.0f64, lv in -3.0..3.0f64) {
            let u = [m, lv];
            let numeric = numeric_log_det::<UniLSState>(&u, |s| [s.mean, s.var]);
            prop_assert!((UniLSState::log_det_jacobian(&u).unwrap() - numeric).abs() < 1e-6);
        }

        #[test]
        fn gamma_log_det_matches_finite_differences(a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let u = [a, b];
            let numeric = numeric_log_det::<GammaState>(&u, |s| [s.shape, s.rate]);
            prop_assert!((GammaState::log_det_jacobian(&u).unwrap() - numeric).abs() < 1e-6);
        }
    }
}
