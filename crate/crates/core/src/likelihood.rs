//! Component kernels f(y | τ) with incremental sufficient statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::io::DataMatrix;
use crate::numeric::{ln_gamma, multi_normal_lpdf, normal_lpdf, LN_2PI};
use crate::state::{GammaState, MultiLSState, ParamState, UniLSState};

pub trait Likelihood: Clone + Debug + Send + Sync + 'static {
    type State: ParamState;

    fn dim(&self) -> usize;

    fn state(&self) -> &Self::State;

    fn set_state(&mut self, state: Self::State);

    /// Log density of one datum under the current state. Points outside the
    /// kernel's support get `-inf`.
    fn lpdf(&self, datum: &[f64]) -> Result<f64>;

    fn lpdf_grid(&self, grid: &DataMatrix) -> Result<Vec<f64>> {
        grid.iter_rows().map(|row| self.lpdf(row)).collect()
    }

    fn add_datum(&mut self, id: usize, datum: &[f64]) -> Result<()>;

    fn remove_datum(&mut self, id: usize, datum: &[f64]) -> Result<()>;

    /// Ids of the data currently allocated to this kernel.
    fn data_ids(&self) -> &BTreeSet<usize>;

    fn card(&self) -> usize {
        self.data_ids().len()
    }

    fn clear_data(&mut self);

    /// Sum of log densities of the allocated data at the state mapped from
    /// unconstrained coordinates `u`.
    fn cluster_lpdf_from_unconstrained(&self, _u: &[f64]) -> Result<f64> {
        Err(Error::Capability("unconstrained cluster likelihood"))
    }

    fn cluster_lpdf_grad_from_unconstrained(&self, _u: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Capability("unconstrained cluster likelihood gradient"))
    }
}

fn check_dim(datum: &[f64], expected: usize) -> Result<()> {
    if datum.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: datum.len(),
        });
    }
    Ok(())
}

fn insert_id(ids: &mut BTreeSet<usize>, id: usize) -> Result<()> {
    if !ids.insert(id) {
        return Err(Error::DuplicateDatum(id));
    }
    Ok(())
}

fn remove_id(ids: &mut BTreeSet<usize>, id: usize) -> Result<()> {
    if !ids.remove(&id) {
        return Err(Error::MissingDatum(id));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UniNormSuffStats {
    pub data_sum: f64,
    pub data_sum_squares: f64,
    pub card: usize,
}

impl UniNormSuffStats {
    pub fn from_data(data: &[f64]) -> Self {
        Self {
            data_sum: data.iter().sum(),
            data_sum_squares: data.iter().map(|y| y * y).sum(),
            card: data.len(),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.card == 0 {
            0.0
        } else {
            self.data_sum / self.card as f64
        }
    }

    /// Σ (y_i - ȳ)², clamped at zero against cancellation.
    pub fn centered_sum_squares(&self) -> f64 {
        if self.card == 0 {
            return 0.0;
        }
        (self.data_sum_squares - self.data_sum * self.data_sum / self.card as f64).max(0.0)
    }

    /// Σ (y_i - m)².
    pub fn sum_squares_around(&self, m: f64) -> f64 {
        (self.data_sum_squares - 2.0 * m * self.data_sum + self.card as f64 * m * m).max(0.0)
    }
}

/// Univariate normal kernel N(y | mean, var).
#[derive(Debug, Clone)]
pub struct UniNormLikelihood {
    state: UniLSState,
    stats: UniNormSuffStats,
    ids: BTreeSet<usize>,
}

impl UniNormLikelihood {
    pub fn new(state: UniLSState) -> Self {
        Self {
            state,
            stats: UniNormSuffStats::default(),
            ids: BTreeSet::new(),
        }
    }

    pub fn stats(&self) -> &UniNormSuffStats {
        &self.stats
    }
}

impl Default for UniNormLikelihood {
    fn default() -> Self {
        Self::new(UniLSState::new(0.0, 1.0))
    }
}

impl Likelihood for UniNormLikelihood {
    type State = UniLSState;

    fn dim(&self) -> usize {
        1
    }

    fn state(&self) -> &UniLSState {
        &self.state
    }

    fn set_state(&mut self, state: UniLSState) {
        self.state = state;
    }

    fn lpdf(&self, datum: &[f64]) -> Result<f64> {
        check_dim(datum, 1)?;
        Ok(normal_lpdf(datum[0], self.state.mean, self.state.var))
    }

    fn add_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        check_dim(datum, 1)?;
        insert_id(&mut self.ids, id)?;
        let y = datum[0];
        self.stats.data_sum += y;
        self.stats.data_sum_squares += y * y;
        self.stats.card += 1;
        Ok(())
    }

    fn remove_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        check_dim(datum, 1)?;
        remove_id(&mut self.ids, id)?;
        let y = datum[0];
        self.stats.card -= 1;
        if self.stats.card == 0 {
            self.stats = UniNormSuffStats::default();
        } else {
            self.stats.data_sum -= y;
            self.stats.data_sum_squares -= y * y;
        }
        Ok(())
    }

    fn data_ids(&self) -> &BTreeSet<usize> {
        &self.ids
    }

    fn clear_data(&mut self) {
        self.ids.clear();
        self.stats = UniNormSuffStats::default();
    }

    fn cluster_lpdf_from_unconstrained(&self, u: &[f64]) -> Result<f64> {
        check_dim(u, 2)?;
        let n = self.stats.card as f64;
        if self.stats.card == 0 {
            return Ok(0.0);
        }
        let (mean, log_var) = (u[0], u[1]);
        let rss = self.stats.sum_squares_around(mean);
        Ok(-0.5 * n * (LN_2PI + log_var) - 0.5 * rss * (-log_var).exp())
    }

    fn cluster_lpdf_grad_from_unconstrained(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(u, 2)?;
        let n = self.stats.card as f64;
        let (mean, log_var) = (u[0], u[1]);
        let prec = (-log_var).exp();
        let rss = self.stats.sum_squares_around(mean);
        Ok(vec![
            (self.stats.data_sum - n * mean) * prec,
            -0.5 * n + 0.5 * rss * prec,
        ])
    }
}

/// Univariate Laplace kernel with location `mean` and scale `var`:
/// f(y) = exp(-|y - mean| / scale) / (2 scale).
///
/// The absolute-deviation sum does not reduce to fixed-size statistics, so
/// the allocated data are stored.
#[derive(Debug, Clone)]
pub struct UniLapLikelihood {
    state: UniLSState,
    data: BTreeMap<usize, f64>,
    ids: BTreeSet<usize>,
}

impl UniLapLikelihood {
    pub fn new(state: UniLSState) -> Self {
        Self {
            state,
            data: BTreeMap::new(),
            ids: BTreeSet::new(),
        }
    }

    pub fn data(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.values().copied()
    }
}

impl Default for UniLapLikelihood {
    fn default() -> Self {
        Self::new(UniLSState::new(0.0, 1.0))
    }
}

impl Likelihood for UniLapLikelihood {
    type State = UniLSState;

    fn dim(&self) -> usize {
        1
    }

    fn state(&self) -> &UniLSState {
        &self.state
    }

    fn set_state(&mut self, state: UniLSState) {
        self.state = state;
    }

    fn lpdf(&self, datum: &[f64]) -> Result<f64> {
        check_dim(datum, 1)?;
        let scale = self.state.var;
        Ok(-(2.0 * scale).ln() - (datum[0] - self.state.mean).abs() / scale)
    }

    fn add_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        check_dim(datum, 1)?;
        insert_id(&mut self.ids, id)?;
        self.data.insert(id, datum[0]);
        Ok(())
    }

    fn remove_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        check_dim(datum, 1)?;
        remove_id(&mut self.ids, id)?;
        self.data.remove(&id);
        Ok(())
    }

    fn data_ids(&self) -> &BTreeSet<usize> {
        &self.ids
    }

    fn clear_data(&mut self) {
        self.ids.clear();
        self.data.clear();
    }

    fn cluster_lpdf_from_unconstrained(&self, u: &[f64]) -> Result<f64> {
        check_dim(u, 2)?;
        let n = self.data.len() as f64;
        let abs_dev: f64 = self.data.values().map(|y| (y - u[0]).abs()).sum();
        Ok(-n * (std::f64::consts::LN_2 + u[1]) - abs_dev * (-u[1]).exp())
    }

    fn cluster_lpdf_grad_from_unconstrained(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(u, 2)?;
        let n = self.data.len() as f64;
        let inv_scale = (-u[1]).exp();
        let mut d_mean = 0.0;
        let mut abs_dev = 0.0;
        for y in self.data.values() {
            let diff = y - u[0];
            // subgradient 0 at the kink
            d_mean += if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            abs_dev += diff.abs();
        }
        Ok(vec![d_mean * inv_scale, -n + abs_dev * inv_scale])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiNormSuffStats {
    pub data_sum: DVector<f64>,
    pub data_sum_outer: DMatrix<f64>,
    pub card: usize,
}

impl MultiNormSuffStats {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data_sum: DVector::zeros(dim),
            data_sum_outer: DMatrix::zeros(dim, dim),
            card: 0,
        }
    }

    pub fn from_rows<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut s = Self::zeros(dim);
        for r in rows {
            let y = DVector::from_column_slice(r);
            s.data_sum += &y;
            s.data_sum_outer += &y * y.transpose();
            s.card += 1;
        }
        s
    }
}

/// Multivariate normal kernel N_d(y | mean, cov).
#[derive(Debug, Clone)]
pub struct MultiNormLikelihood {
    state: MultiLSState,
    stats: MultiNormSuffStats,
    ids: BTreeSet<usize>,
}

impl MultiNormLikelihood {
    pub fn new(state: MultiLSState) -> Self {
        let dim = state.dim();
        Self {
            state,
            stats: MultiNormSuffStats::zeros(dim),
            ids: BTreeSet::new(),
        }
    }

    pub fn standard(dim: usize) -> Self {
        Self::new(MultiLSState::new(DVector::zeros(dim), DMatrix::identity(dim, dim)).expect("identity is SPD"))
    }

    pub fn stats(&self) -> &MultiNormSuffStats {
        &self.stats
    }
}

impl Likelihood for MultiNormLikelihood {
    type State = MultiLSState;

    fn dim(&self) -> usize {
        self.state.dim()
    }

    fn state(&self) -> &MultiLSState {
        &self.state
    }

    fn set_state(&mut self, state: MultiLSState) {
        self.state = state;
    }

    fn lpdf(&self, datum: &[f64]) -> Result<f64> {
        check_dim(datum, self.dim())?;
        Ok(multi_normal_lpdf(
            datum,
            self.state.mean(),
            self.state.cov_chol(),
            self.state.cov_log_det(),
        ))
    }

    fn add_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        check_dim(datum, self.dim())?;
        insert_id(&mut self.ids, id)?;
        let y = DVector::from_column_slice(datum);
        self.stats.data_sum += &y;
        self.stats.data_sum_outer.ger(1.0, &y, &y, 1.0);
        self.stats.card += 1;
        Ok(())
    }

    fn remove_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        check_dim(datum, self.dim())?;
        remove_id(&mut self.ids, id)?;
        self.stats.card -= 1;
        if self.stats.card == 0 {
            self.stats = MultiNormSuffStats::zeros(self.dim());
        } else {
            let y = DVector::from_column_slice(datum);
            self.stats.data_sum -= &y;
            self.stats.data_sum_outer.ger(-1.0, &y, &y, 1.0);
        }
        Ok(())
    }

    fn data_ids(&self) -> &BTreeSet<usize> {
        &self.ids
    }

    fn clear_data(&mut self) {
        self.ids.clear();
        self.stats = MultiNormSuffStats::zeros(self.dim());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GammaSuffStats {
    pub data_sum: f64,
    pub data_sum_logs: f64,
    pub ndata: usize,
}

/// Gamma kernel with fixed shape and random rate.
#[derive(Debug, Clone)]
pub struct GammaLikelihood {
    state: GammaState,
    stats: GammaSuffStats,
    ids: BTreeSet<usize>,
}

impl GammaLikelihood {
    pub fn new(state: GammaState) -> Self {
        Self {
            state,
            stats: GammaSuffStats::default(),
            ids: BTreeSet::new(),
        }
    }

    pub fn stats(&self) -> &GammaSuffStats {
        &self.stats
    }
}

impl Likelihood for GammaLikelihood {
    type State = GammaState;

    fn dim(&self) -> usize {
        1
    }

    fn state(&self) -> &GammaState {
        &self.state
    }

    fn set_state(&mut self, state: GammaState) {
        self.state = state;
    }

    /// Non-positive data are outside the support and get `-inf`.
    fn lpdf(&self, datum: &[f64]) -> Result<f64> {
        check_dim(datum, 1)?;
        let y = datum[0];
        if y <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let GammaState { shape, rate } = self.state;
        Ok(shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * y.ln() - rate * y)
    }

    fn add_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        check_dim(datum, 1)?;
        insert_id(&mut self.ids, id)?;
        self.stats.data_sum += datum[0];
        self.stats.data_sum_logs += datum[0].ln();
        self.stats.ndata += 1;
        Ok(())
    }

    fn remove_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        check_dim(datum, 1)?;
        remove_id(&mut self.ids, id)?;
        self.stats.ndata -= 1;
        if self.stats.ndata == 0 {
            self.stats = GammaSuffStats::default();
        } else {
            self.stats.data_sum -= datum[0];
            self.stats.data_sum_logs -= datum[0].ln();
        }
        Ok(())
    }

    fn data_ids(&self) -> &BTreeSet<usize> {
        &self.ids
    }

    fn clear_data(&mut self) {
        self.ids.clear();
        self.stats = GammaSuffStats::default();
    }

    fn cluster_lpdf_from_unconstrained(&self, u: &[f64]) -> Result<f64> {
        check_dim(u, 2)?;
        if self.stats.ndata == 0 {
            return Ok(0.0);
        }
        let n = self.stats.ndata as f64;
        let shape = u[0].exp();
        let rate = u[1].exp();
        Ok(n * (shape * u[1] - ln_gamma(shape)) + (shape - 1.0) * self.stats.data_sum_logs - rate * self.stats.data_sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    #[test]
    fn standard_normal_mode() {
        let l = UniNormLikelihood::default();
        assert_relative_eq!(l.lpdf(&[0.0]).unwrap(), -0.918_938_533_204_672_7, epsilon = 1e-12);
        assert!(matches!(l.lpdf(&[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn laplace_at_location() {
        let l = UniLapLikelihood::default();
        assert_relative_eq!(l.lpdf(&[0.0]).unwrap(), 0.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn gamma_exponential_case() {
        let l = GammaLikelihood::new(GammaState::new(1.0, 2.0));
        // exponential density 2 exp(-2 * 0.5)
        assert_relative_eq!(l.lpdf(&[0.5]).unwrap(), (2.0 * (-1.0f64).exp()).ln(), epsilon = 1e-12);
        assert_eq!(l.lpdf(&[0.0]).unwrap(), f64::NEG_INFINITY);
        assert_eq!(l.lpdf(&[-1.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn uni_norm_stats_arithmetic() {
        let mut l = UniNormLikelihood::default();
        l.add_datum(0, &[1.0]).unwrap();
        l.add_datum(1, &[3.0]).unwrap();
        assert_eq!(
            *l.stats(),
            UniNormSuffStats {
                data_sum: 4.0,
                data_sum_squares: 10.0,
                card: 2
            }
        );
        l.remove_datum(0, &[1.0]).unwrap();
        assert_eq!(
            *l.stats(),
            UniNormSuffStats {
                data_sum: 3.0,
                data_sum_squares: 9.0,
                card: 1
            }
        );
        assert!(matches!(l.add_datum(1, &[3.0]), Err(Error::DuplicateDatum(1))));
        assert!(matches!(l.remove_datum(0, &[1.0]), Err(Error::MissingDatum(0))));
    }

    #[test]
    fn empty_cluster_lpdf_is_zero() {
        let l = UniNormLikelihood::default();
        assert_eq!(l.cluster_lpdf_from_unconstrained(&[0.3, 0.1]).unwrap(), 0.0);
        let l = UniLapLikelihood::default();
        assert_eq!(l.cluster_lpdf_from_unconstrained(&[0.3, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn single_point_cluster() {
        let mut l = UniNormLikelihood::default();
        l.add_datum(0, &[0.0]).unwrap();
        assert_relative_eq!(l.cluster_lpdf_from_unconstrained(&[0.0, 0.0]).unwrap(), -0.918_938_533_204_672_7, epsilon = 1e-12);
    }

    #[test]
    fn multi_norm_has_no_unconstrained_lpdf() {
        let l = MultiNormLikelihood::standard(2);
        assert!(matches!(l.cluster_lpdf_from_unconstrained(&[0.0]), Err(Error::Capability(_))));
    }

    #[test]
    fn multi_norm_matches_product_of_univariates() {
        let l = MultiNormLikelihood::standard(3);
        let y = [0.5, -1.0, 2.0];
        let expected: f64 = y.iter().map(|v| normal_lpdf(*v, 0.0, 1.0)).sum();
        assert_relative_eq!(l.lpdf(&y).unwrap(), expected, epsilon = 1e-12);
        assert!(l.lpdf(&[1.0]).is_err());
    }

    #[test]
    fn grid_examples() {
        let l = UniNormLikelihood::default();
        let one = DataMatrix::from_column(&[0.7]).unwrap();
        assert_eq!(l.lpdf_grid(&one).unwrap(), vec![l.lpdf(&[0.7]).unwrap()]);
        let sym = DataMatrix::from_column(&[-1.0, 1.0]).unwrap();
        let g = l.lpdf_grid(&sym).unwrap();
        assert_eq!(g[0], g[1]);
        let wide = DataMatrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(l.lpdf_grid(&wide).is_err());
    }

    /// Trapezoid rule over [lo, hi].
    fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
        h * (0.5 * (f(lo) + f(hi)) + inner)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn densities_integrate_to_one(mean in -3.0..3.0f64, scale in 0.3..3.0f64, shape in 1.0..5.0f64) {
            let n = UniNormLikelihood::new(UniLSState::new(mean, scale * scale));
            let mass = integrate(|y| n.lpdf(&[y]).unwrap().exp(), mean - 40.0 * scale, mean + 40.0 * scale, 40_000);
            prop_assert!((mass - 1.0).abs() < 1e-3);

            let lap = UniLapLikelihood::new(UniLSState::new(mean, scale));
            let mass = integrate(|y| lap.lpdf(&[y]).unwrap().exp(), mean - 60.0 * scale, mean + 60.0 * scale, 40_001);
            prop_assert!((mass - 1.0).abs() < 1e-3);

            let g = GammaLikelihood::new(GammaState::new(shape, 1.0 / scale));
            let mass = integrate(|y| g.lpdf(&[y]).unwrap().exp().min(1e300), 0.0, 200.0 * scale, 200_000);
            prop_assert!((mass - 1.0).abs() < 1e-3);
        }

        #[test]
        fn cluster_lpdf_matches_direct_sum(data in prop::collection::vec(-5.0..5.0f64, 1..20), m in -2.0..2.0f64, lv in -1.0..1.0f64) {
            let u = [m, lv];
            let mut norm = UniNormLikelihood::default();
            let mut lap = UniLapLikelihood::default();
            for (i, y) in data.iter().enumerate() {
                norm.add_datum(i, &[*y]).unwrap();
                lap.add_datum(i, &[*y]).unwrap();
            }
            let state = UniLSState::from_unconstrained(&u).unwrap();
            let direct_norm: f64 = data.iter().map(|y| normal_lpdf(*y, state.mean, state.var)).sum();
            prop_assert!((norm.cluster_lpdf_from_unconstrained(&u).unwrap() - direct_norm).abs() < 1e-9);
            lap.set_state(state);
            let direct_lap: f64 = data.iter().map(|y| lap.lpdf(&[*y]).unwrap()).sum();
            prop_assert!((lap.cluster_lpdf_from_unconstrained(&u).unwrap() - direct_lap).abs() < 1e-9);

            let positive: Vec<f64> = data.iter().map(|y| y.abs() + 0.1).collect();
            let mut g = GammaLikelihood::new(GammaState::new(1.0, 1.0));
            for (i, y) in positive.iter().enumerate() {
                g.add_datum(i, &[*y]).unwrap();
            }
            g.set_state(GammaState::from_unconstrained(&u).unwrap());
            let direct_g: f64 = positive.iter().map(|y| g.lpdf(&[*y]).unwrap()).sum();
            prop_assert!((g.cluster_lpdf_from_unconstrained(&u).unwrap() - direct_g).abs() < 1e-9);
        }

        #[test]
        fn add_remove_in_any_order_returns_to_zero(data in prop::collection::vec(-100.0..100.0f64, 1..40), seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut l = UniNormLikelihood::default();
            let mut m = MultiNormLikelihood::standard(2);
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut rng);
            for &i in &order {
                l.add_datum(i, &[data[i]]).unwrap();
                m.add_datum(i, &[data[i], -data[i]]).unwrap();
            }
            let direct = UniNormSuffStats::from_data(&data);
            prop_assert!((l.stats().data_sum - direct.data_sum).abs() < 1e-9 * direct.data_sum_squares.max(1.0));
            prop_assert!((l.stats().data_sum_squares - direct.data_sum_squares).abs() < 1e-9 * direct.data_sum_squares.max(1.0));
            order.shuffle(&mut rng);
            for (step, &i) in order.iter().enumerate() {
                l.remove_datum(i, &[data[i]]).unwrap();
                m.remove_datum(i, &[data[i], -data[i]]).unwrap();
                prop_assert_eq!(l.card(), data.len() - step - 1);
            }
            prop_assert_eq!(*l.stats(), UniNormSuffStats::default());
            prop_assert_eq!(m.stats().clone(), MultiNormSuffStats::zeros(2));
        }
    }
}
