//! Full-conditional samplers for a single component's parameters.
//!
//! Closed-form updaters draw from the prior family at posterior
//! hyperparameters. The Metropolis updaters work on any likelihood/prior
//! pair exposing unconstrained coordinates.

use std::fmt::Debug;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::likelihood::{
    GammaLikelihood, GammaSuffStats, Likelihood, MultiNormLikelihood, MultiNormSuffStats, UniNormLikelihood,
    UniNormSuffStats,
};
use crate::numeric::{cholesky, ln_gamma, multi_student_t_lpdf, student_t_lpdf};
use crate::prior::{GammaPrior, GammaPriorHypers, NIGHypers, NIGPrior, NWHypers, NWPrior, NxIGPrior, PriorModel};
use crate::state::{ParamState, UniLSState};

pub trait Updater<L, P>: Clone + Debug + Send + Sync + 'static
where
    L: Likelihood,
    P: PriorModel<State = L::State>,
{
    /// True when posterior hyperparameters and marginal densities exist in
    /// closed form.
    fn is_conjugate(&self) -> bool {
        false
    }

    /// One draw of the full conditional of the component parameters.
    fn draw<R: Rng + ?Sized>(&self, like: &L, prior: &P, rng: &mut R) -> Result<L::State>;

    fn posterior_hypers(&self, _like: &L, _prior: &P) -> Result<P::Hypers> {
        Err(Error::Capability("posterior hyperparameters"))
    }

    /// Marginal log density of one datum with the parameters integrated out
    /// against the prior family at `hypers`.
    fn marginal_lpdf(&self, _hypers: &P::Hypers, _datum: &[f64]) -> Result<f64> {
        Err(Error::Capability("marginal density"))
    }
}

/// Draw from the prior family at posterior hyperparameters. For an empty
/// cluster the posterior equals the prior.
pub fn semi_conjugate_draw<L, P, U, R>(like: &L, prior: &P, updater: &U, rng: &mut R) -> Result<L::State>
where
    L: Likelihood,
    P: PriorModel<State = L::State>,
    U: Updater<L, P>,
    R: Rng + ?Sized,
{
    let hypers = updater.posterior_hypers(like, prior)?;
    prior.sample(Some(&hypers), rng)
}

pub fn nnig_posterior_hypers(stats: &UniNormSuffStats, hypers: &NIGHypers) -> NIGHypers {
    if stats.card == 0 {
        return *hypers;
    }
    let n = stats.card as f64;
    let ybar = stats.mean();
    let var_scaling = hypers.var_scaling + n;
    let mean = (hypers.var_scaling * hypers.mean + stats.data_sum) / var_scaling;
    let shape = hypers.shape + 0.5 * n;
    let dev = ybar - hypers.mean;
    let scale = hypers.scale
        + 0.5 * stats.centered_sum_squares()
        + 0.5 * hypers.var_scaling * n * dev * dev / var_scaling;
    NIGHypers {
        mean,
        var_scaling,
        shape,
        scale,
    }
}

/// Student-t marginal of the NIG model: 2a degrees of freedom, location μ0,
/// scale sqrt(b (λ+1) / (a λ)).
pub fn nnig_marginal_lpdf(hypers: &NIGHypers, y: f64) -> f64 {
    let scale = (hypers.scale * (hypers.var_scaling + 1.0) / (hypers.shape * hypers.var_scaling)).sqrt();
    student_t_lpdf(y, 2.0 * hypers.shape, hypers.mean, scale)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NnigUpdater;

impl Updater<UniNormLikelihood, NIGPrior> for NnigUpdater {
    fn is_conjugate(&self) -> bool {
        true
    }

    fn draw<R: Rng + ?Sized>(&self, like: &UniNormLikelihood, prior: &NIGPrior, rng: &mut R) -> Result<UniLSState> {
        semi_conjugate_draw(like, prior, self, rng)
    }

    fn posterior_hypers(&self, like: &UniNormLikelihood, prior: &NIGPrior) -> Result<NIGHypers> {
        Ok(nnig_posterior_hypers(like.stats(), prior.hypers()))
    }

    fn marginal_lpdf(&self, hypers: &NIGHypers, datum: &[f64]) -> Result<f64> {
        check_dim(datum, 1)?;
        Ok(nnig_marginal_lpdf(hypers, datum[0]))
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

/// Normal-inverse-Wishart update. The scale matrix is symmetrized; a
/// non-SPD result is reported as a numerical error.
pub fn nnw_posterior_hypers(stats: &MultiNormSuffStats, hypers: &NWHypers) -> Result<NWHypers> {
    let d = hypers.dim();
    if stats.data_sum.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: stats.data_sum.len(),
        });
    }
    if stats.card == 0 {
        return Ok(hypers.clone());
    }
    let n = stats.card as f64;
    let ybar = &stats.data_sum / n;
    let var_scaling = hypers.var_scaling + n;
    let mean = (&hypers.mean * hypers.var_scaling + &stats.data_sum) / var_scaling;
    // S = Σ y yᵀ - n ȳ ȳᵀ
    let scatter = &stats.data_sum_outer - &ybar * ybar.transpose() * n;
    let dev = &ybar - &hypers.mean;
    let mut scale = &hypers.scale + scatter + &dev * dev.transpose() * (hypers.var_scaling * n / var_scaling);
    scale = (&scale + scale.transpose()) * 0.5;
    cholesky(&scale).map_err(|_| Error::Numerical("posterior scale matrix is not SPD".into()))?;
    Ok(NWHypers {
        mean,
        var_scaling,
        deg_free: hypers.deg_free + n,
        scale,
    })
}

/// Multivariate-t marginal of the NIW model.
pub fn nnw_marginal_lpdf(hypers: &NWHypers, datum: &[f64]) -> Result<f64> {
    let d = hypers.dim();
    check_dim(datum, d)?;
    let dof = hypers.deg_free - d as f64 + 1.0;
    let scale = &hypers.scale * ((hypers.var_scaling + 1.0) / (hypers.var_scaling * dof));
    let chol = cholesky(&scale)?;
    Ok(multi_student_t_lpdf(
        &DVector::from_column_slice(datum),
        dof,
        &hypers.mean,
        &chol,
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NnwUpdater;

impl Updater<MultiNormLikelihood, NWPrior> for NnwUpdater {
    fn is_conjugate(&self) -> bool {
        true
    }

    fn draw<R: Rng + ?Sized>(
        &self,
        like: &MultiNormLikelihood,
        prior: &NWPrior,
        rng: &mut R,
    ) -> Result<crate::state::MultiLSState> {
        semi_conjugate_draw(like, prior, self, rng)
    }

    fn posterior_hypers(&self, like: &MultiNormLikelihood, prior: &NWPrior) -> Result<NWHypers> {
        nnw_posterior_hypers(like.stats(), prior.hypers())
    }

    fn marginal_lpdf(&self, hypers: &NWHypers, datum: &[f64]) -> Result<f64> {
        nnw_marginal_lpdf(hypers, datum)
    }
}

pub fn gamma_gamma_posterior_hypers(stats: &GammaSuffStats, hypers: &GammaPriorHypers) -> GammaPriorHypers {
    if stats.ndata == 0 {
        return *hypers;
    }
    GammaPriorHypers {
        shape: hypers.shape,
        rate_alpha: hypers.rate_alpha + hypers.shape * stats.ndata as f64,
        rate_beta: hypers.rate_beta + stats.data_sum,
    }
}

/// log[β^α/Γ(α) · Γ(α+s)/(β+y)^(α+s) · y^(s-1)/Γ(s)] with s the fixed
/// kernel shape.
pub fn gamma_gamma_marginal_lpdf(hypers: &GammaPriorHypers, y: f64) -> f64 {
    if y <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let GammaPriorHypers {
        shape,
        rate_alpha,
        rate_beta,
    } = *hypers;
    rate_alpha * rate_beta.ln() - ln_gamma(rate_alpha) + ln_gamma(rate_alpha + shape)
        - (rate_alpha + shape) * (rate_beta + y).ln()
        + (shape - 1.0) * y.ln()
        - ln_gamma(shape)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GammaGammaUpdater;

impl Updater<GammaLikelihood, GammaPrior> for GammaGammaUpdater {
    fn is_conjugate(&self) -> bool {
        true
    }

    fn draw<R: Rng + ?Sized>(
        &self,
        like: &GammaLikelihood,
        prior: &GammaPrior,
        rng: &mut R,
    ) -> Result<crate::state::GammaState> {
        semi_conjugate_draw(like, prior, self, rng)
    }

    fn posterior_hypers(&self, like: &GammaLikelihood, prior: &GammaPrior) -> Result<GammaPriorHypers> {
        Ok(gamma_gamma_posterior_hypers(like.stats(), prior.hypers()))
    }

    fn marginal_lpdf(&self, hypers: &GammaPriorHypers, datum: &[f64]) -> Result<f64> {
        check_dim(datum, 1)?;
        Ok(gamma_gamma_marginal_lpdf(hypers, datum[0]))
    }
}

/// One Gibbs scan for the normal kernel under independent normal and
/// inverse-gamma priors: μ | σ², y then σ² | μ, y.
pub fn nnxig_gibbs_draw<R: Rng + ?Sized>(
    stats: &UniNormSuffStats,
    current: &UniLSState,
    prior: &NxIGPrior,
    rng: &mut R,
) -> Result<UniLSState> {
    let h = prior.hypers();
    let n = stats.card as f64;
    let prec = 1.0 / h.var + n / current.var;
    let post_mean = (h.mean / h.var + stats.data_sum / current.var) / prec;
    let mean = post_mean + rng.sample::<f64, _>(StandardNormal) / prec.sqrt();
    let shape = h.shape + 0.5 * n;
    let scale = h.scale + 0.5 * stats.sum_squares_around(mean);
    let g = rand_distr::Gamma::new(shape, 1.0 / scale).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(UniLSState::new(mean, 1.0 / g.sample(rng)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NnxigGibbsUpdater;

impl Updater<UniNormLikelihood, NxIGPrior> for NnxigGibbsUpdater {
    fn draw<R: Rng + ?Sized>(&self, like: &UniNormLikelihood, prior: &NxIGPrior, rng: &mut R) -> Result<UniLSState> {
        nnxig_gibbs_draw(like.stats(), like.state(), prior, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetropolisKind {
    RandomWalk,
    Mala,
}

impl MetropolisKind {
    pub fn default_step_size(self) -> f64 {
        match self {
            MetropolisKind::RandomWalk => 0.25,
            MetropolisKind::Mala => 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetropolisConfig {
    pub kind: MetropolisKind,
    pub step_size: f64,
    /// Kernel applications per full-conditional call.
    pub n_steps: usize,
}

impl MetropolisConfig {
    pub fn new(kind: MetropolisKind, step_size: f64, n_steps: usize) -> Result<Self> {
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(Error::InvalidParameter(format!("step_size must be positive, got {step_size}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be positive".into()));
        }
        Ok(Self { kind, step_size, n_steps })
    }

    pub fn random_walk() -> Self {
        Self::with_defaults(MetropolisKind::RandomWalk)
    }

    pub fn mala() -> Self {
        Self::with_defaults(MetropolisKind::Mala)
    }

    pub fn with_defaults(kind: MetropolisKind) -> Self {
        Self {
            kind,
            step_size: kind.default_step_size(),
            n_steps: 1,
        }
    }
}

/// Unnormalized log full conditional in unconstrained coordinates.
pub fn log_target<L, P>(like: &L, prior: &P, u: &[f64]) -> Result<f64>
where
    L: Likelihood,
    P: PriorModel<State = L::State>,
{
    Ok(like.cluster_lpdf_from_unconstrained(u)? + prior.lpdf_from_unconstrained(u)?)
}

pub fn log_target_grad<L, P>(like: &L, prior: &P, u: &[f64]) -> Result<Vec<f64>>
where
    L: Likelihood,
    P: PriorModel<State = L::State>,
{
    let mut g = like.cluster_lpdf_grad_from_unconstrained(u)?;
    for (a, b) in g.iter_mut().zip(prior.lpdf_grad_from_unconstrained(u)?) {
        *a += b;
    }
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct MetropolisOutcome<S> {
    pub state: S,
    pub accepted: usize,
    /// Proposals rejected because the target or its gradient was not finite.
    pub non_finite: usize,
}

fn mala_mean(u: &[f64], grad: &[f64], eps: f64) -> Vec<f64> {
    u.iter().zip(grad).map(|(x, g)| x + 0.5 * eps * eps * g).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs `config.n_steps` random-walk or MALA transitions starting from the
/// likelihood's current state.
pub fn metropolis_draw<L, P, R>(
    like: &L,
    prior: &P,
    config: &MetropolisConfig,
    rng: &mut R,
) -> Result<MetropolisOutcome<L::State>>
where
    L: Likelihood,
    P: PriorModel<State = L::State>,
    R: Rng + ?Sized,
{
    let eps = config.step_size;
    let mut u = like.state().to_unconstrained()?;
    let mut target = log_target(like, prior, &u)?;
    let mut grad = match config.kind {
        MetropolisKind::Mala => log_target_grad(like, prior, &u)?,
        MetropolisKind::RandomWalk => Vec::new(),
    };
    let mut accepted = 0;
    let mut non_finite = 0;
    for _ in 0..config.n_steps {
        let noise: Vec<f64> = (0..u.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let (proposal, prop_target, prop_grad, log_ratio) = match config.kind {
            MetropolisKind::RandomWalk => {
                let proposal: Vec<f64> = u.iter().zip(&noise).map(|(x, z)| x + eps * z).collect();
                let t = log_target(like, prior, &proposal)?;
                (proposal, t, Vec::new(), t - target)
            }
            MetropolisKind::Mala => {
                let forward_mean = mala_mean(&u, &grad, eps);
                let proposal: Vec<f64> = forward_mean.iter().zip(&noise).map(|(m, z)| m + eps * z).collect();
                let t = log_target(like, prior, &proposal)?;
                let g = log_target_grad(like, prior, &proposal)?;
                if !g.iter().all(|x| x.is_finite()) {
                    non_finite += 1;
                    let _: f64 = rng.random();
                    continue;
                }
                let backward_mean = mala_mean(&proposal, &g, eps);
                let log_q_forward = -sq_dist(&proposal, &forward_mean) / (2.0 * eps * eps);
                let log_q_backward = -sq_dist(&u, &backward_mean) / (2.0 * eps * eps);
                (proposal, t, g, t - target + log_q_backward - log_q_forward)
            }
        };
        let uniform: f64 = rng.random();
        if !prop_target.is_finite() || !log_ratio.is_finite() {
            non_finite += 1;
            continue;
        }
        if uniform.ln() < log_ratio {
            u = proposal;
            target = prop_target;
            grad = prop_grad;
            accepted += 1;
        }
    }
    Ok(MetropolisOutcome {
        state: L::State::from_unconstrained(&u)?,
        accepted,
        non_finite,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetropolisUpdater {
    pub config: MetropolisConfig,
}

impl MetropolisUpdater {
    pub fn new(config: MetropolisConfig) -> Self {
        Self { config }
    }
}

impl<L, P> Updater<L, P> for MetropolisUpdater
where
    L: Likelihood,
    P: PriorModel<State = L::State>,
{
    fn draw<R: Rng + ?Sized>(&self, like: &L, prior: &P, rng: &mut R) -> Result<L::State> {
        Ok(metropolis_draw(like, prior, &self.config, rng)?.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::UniLapLikelihood;
    use crate::prior::NxIGHypers;
    use crate::state::GammaState;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paper_hypers() -> NIGHypers {
        NIGHypers::new(0.0, 0.1, 2.0, 2.0).unwrap()
    }

    #[test]
    fn nnig_empty_cluster_keeps_prior() {
        assert_eq!(nnig_posterior_hypers(&UniNormSuffStats::default(), &paper_hypers()), paper_hypers());
    }

    #[test]
    fn nnig_one_datum() {
        let post = nnig_posterior_hypers(&UniNormSuffStats::from_data(&[1.0]), &paper_hypers());
        assert_relative_eq!(post.mean, 1.0 / 1.1, epsilon = 1e-12);
        assert_relative_eq!(post.var_scaling, 1.1, epsilon = 1e-12);
        assert_relative_eq!(post.shape, 2.5, epsilon = 1e-12);
        assert_relative_eq!(post.scale, 2.0 + 1.0 / 22.0, epsilon = 1e-12);
    }

    #[test]
    fn nnig_marginal_at_zero() {
        let v = nnig_marginal_lpdf(&paper_hypers(), 0.0);
        assert_relative_eq!(v.exp(), 0.11307, epsilon = 1e-5);
    }

    #[test]
    fn gamma_gamma_worked_example() {
        let hypers = GammaPriorHypers::new(1.0, 2.0, 2.0).unwrap();
        let stats = GammaSuffStats {
            data_sum: 4.0,
            data_sum_logs: 3f64.ln(),
            ndata: 2,
        };
        let post = gamma_gamma_posterior_hypers(&stats, &hypers);
        assert_eq!((post.rate_alpha, post.rate_beta), (4.0, 6.0));
        assert_eq!(gamma_gamma_posterior_hypers(&GammaSuffStats::default(), &hypers), hypers);
    }

    #[test]
    fn gamma_gamma_concentrates_on_truth() {
        let hypers = GammaPriorHypers::new(2.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let truth = rand_distr::Gamma::new(2.0, 1.0 / 3.0).unwrap();
        let mut stats = GammaSuffStats::default();
        let mut errors = Vec::new();
        for n in 1..=20_000 {
            let y: f64 = truth.sample(&mut rng);
            stats.data_sum += y;
            stats.ndata += 1;
            if n % 5000 == 0 {
                let post = gamma_gamma_posterior_hypers(&stats, &hypers);
                let ybar = stats.data_sum / n as f64;
                errors.push((post.rate_alpha / post.rate_beta - 2.0 / ybar).abs());
            }
        }
        assert!(errors.windows(2).all(|w| w[1] <= w[0]));
        assert!(errors.last().unwrap() < &1e-3);
    }

    #[test]
    fn semi_conjugate_empty_cluster_is_prior_draw() {
        let prior = NIGPrior::new(paper_hypers());
        let like = UniNormLikelihood::default();
        let a = semi_conjugate_draw(&like, &prior, &NnigUpdater, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = prior.sample(None, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn semi_conjugate_one_datum_mean() {
        let prior = NIGPrior::new(paper_hypers());
        let mut like = UniNormLikelihood::default();
        like.add_datum(0, &[1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| NnigUpdater.draw(&like, &prior, &mut rng).unwrap().mean).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        // marginal posterior of μ: t_{2a_n}(μ_n, b_n/(a_n λ_n)), variance b_n/((a_n-1) λ_n)
        let post = nnig_posterior_hypers(like.stats(), prior.hypers());
        let sd = (post.scale / ((post.shape - 1.0) * post.var_scaling)).sqrt();
        assert!((m - 10.0 / 11.0).abs() < 3.0 * sd / (n as f64).sqrt(), "{m}");
    }

    #[test]
    fn gamma_gamma_draw_mean() {
        let prior = GammaPrior::new(GammaPriorHypers::new(1.0, 2.0, 2.0).unwrap());
        let mut like = GammaLikelihood::new(GammaState::new(1.0, 1.0));
        like.add_datum(0, &[1.0]).unwrap();
        like.add_datum(1, &[3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let m = (0..n).map(|_| GammaGammaUpdater.draw(&like, &prior, &mut rng).unwrap().rate).sum::<f64>() / n as f64;
        // Gamma(4, 6): mean 4/6, sd 2/6
        assert!((m - 4.0 / 6.0).abs() < 3.0 * (2.0 / 6.0) / (n as f64).sqrt(), "{m}");
    }

    #[test]
    fn gamma_gamma_marginal_integrates_to_one() {
        let hypers = GammaPriorHypers::new(2.0, 3.0, 2.0).unwrap();
        let h = 1e-3;
        let mass: f64 = (1..400_000).map(|i| gamma_gamma_marginal_lpdf(&hypers, i as f64 * h).exp() * h).sum();
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    }

    #[test]
    fn nnw_empty_cluster_keeps_prior() {
        let hypers = NWHypers::new(DVector::zeros(2), 0.5, 4.0, DMatrix::identity(2, 2)).unwrap();
        assert_eq!(nnw_posterior_hypers(&MultiNormSuffStats::zeros(2), &hypers).unwrap(), hypers);
    }

    #[test]
    fn nnw_in_one_dimension_reduces_to_nnig() {
        let data = [0.3, -1.2, 2.5, 0.9];
        let nig = NIGHypers::new(0.4, 0.2, 1.5, 0.7).unwrap();
        let nw = NWHypers::new(DVector::from_element(1, 0.4), 0.2, 3.0, DMatrix::from_element(1, 1, 1.4)).unwrap();
        let uni = nnig_posterior_hypers(&UniNormSuffStats::from_data(&data), &nig);
        let rows: Vec<[f64; 1]> = data.iter().map(|y| [*y]).collect();
        let multi = nnw_posterior_hypers(&MultiNormSuffStats::from_rows(1, rows.iter().map(|r| &r[..])), &nw).unwrap();
        assert_relative_eq!(multi.mean[0], uni.mean, epsilon = 1e-12);
        assert_relative_eq!(multi.var_scaling, uni.var_scaling, epsilon = 1e-12);
        assert_relative_eq!(multi.deg_free / 2.0, uni.shape, epsilon = 1e-12);
        assert_relative_eq!(multi.scale[(0, 0)] / 2.0, uni.scale, epsilon = 1e-10);
        for y in [-2.0, 0.0, 1.7] {
            assert_relative_eq!(nnw_marginal_lpdf(&nw, &[y]).unwrap(), nnig_marginal_lpdf(&nig, y), epsilon = 1e-10);
        }
    }

    #[test]
    fn nnxig_empty_cluster_draws_from_prior_conditionals() {
        let prior = NxIGPrior::new(NxIGHypers::new(1.0, 4.0, 3.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50_000;
        let draws: Vec<UniLSState> = (0..n)
            .map(|_| nnxig_gibbs_draw(&UniNormSuffStats::default(), &UniLSState::new(0.0, 1.0), &prior, &mut rng).unwrap())
            .collect();
        let mean_mu = draws.iter().map(|s| s.mean).sum::<f64>() / n as f64;
        assert!((mean_mu - 1.0).abs() < 3.0 * 2.0 / (n as f64).sqrt());
        let mean_var = draws.iter().map(|s| s.var).sum::<f64>() / n as f64;
        // IG(3, 2): mean 1, sd 1
        assert!((mean_var - 1.0).abs() < 3.0 / (n as f64).sqrt() * 1.0 + 1e-3);
    }

    #[test]
    fn nnxig_flat_prior_limit() {
        // With σ0² → ∞ the μ full conditional is N(ȳ, σ²/n).
        let prior = NxIGPrior::new(NxIGHypers::new(0.0, 1e8, 2.0, 1.0).unwrap());
        let stats = UniNormSuffStats::from_data(&[1.0, 2.0, 4.0, 5.0]);
        let current = UniLSState::new(0.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        let mus: Vec<f64> = (0..n).map(|_| nnxig_gibbs_draw(&stats, &current, &prior, &mut rng).unwrap().mean).collect();
        let m = mus.iter().sum::<f64>() / n as f64;
        let v = mus.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        assert!((m - 3.0).abs() < 3.0 * (0.5f64 / n as f64).sqrt());
        assert!((v - 0.5).abs() < 0.01);
    }

    #[test]
    fn random_walk_with_tiny_steps_barely_moves() {
        let prior = NIGPrior::new(paper_hypers());
        let mut like = UniNormLikelihood::new(UniLSState::new(0.3, 1.2));
        for (i, y) in [0.1, 0.5, -0.2].iter().enumerate() {
            like.add_datum(i, &[*y]).unwrap();
        }
        let config = MetropolisConfig::new(MetropolisKind::RandomWalk, 1e-8, 1000).unwrap();
        let out = metropolis_draw(&like, &prior, &config, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(out.accepted as f64 / 1000.0 > 0.999);
        let u0 = like.state().to_unconstrained().unwrap();
        let u1 = out.state.to_unconstrained().unwrap();
        assert!(sq_dist(&u0, &u1).sqrt() < 1e-6);
    }

    #[test]
    fn metropolis_requires_unconstrained_support() {
        let prior = NWPrior::new(NWHypers::new(DVector::zeros(2), 1.0, 4.0, DMatrix::identity(2, 2)).unwrap());
        let like = MultiNormLikelihood::standard(2);
        let err = metropolis_draw(&like, &prior, &MetropolisConfig::random_walk(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
    }

    #[test]
    fn conjugacy_flags() {
        assert!(<NnigUpdater as Updater<UniNormLikelihood, NIGPrior>>::is_conjugate(&NnigUpdater));
        assert!(<NnwUpdater as Updater<MultiNormLikelihood, NWPrior>>::is_conjugate(&NnwUpdater));
        assert!(<GammaGammaUpdater as Updater<GammaLikelihood, GammaPrior>>::is_conjugate(&GammaGammaUpdater));
        assert!(!<NnxigGibbsUpdater as Updater<UniNormLikelihood, NxIGPrior>>::is_conjugate(&NnxigGibbsUpdater));
        let mh = MetropolisUpdater::new(MetropolisConfig::random_walk());
        assert!(!<MetropolisUpdater as Updater<UniNormLikelihood, NIGPrior>>::is_conjugate(&mh));
    }

    proptest! {
        #[test]
        fn posterior_mean_between_prior_mean_and_sample_mean(
            data in prop::collection::vec(-20.0..20.0f64, 1..10),
            mu0 in -5.0..5.0f64,
            lambda in 0.01..10.0f64,
        ) {
            let hypers = NIGHypers::new(mu0, lambda, 2.0, 2.0).unwrap();
            let stats = UniNormSuffStats::from_data(&data);
            let post = nnig_posterior_hypers(&stats, &hypers);
            let (lo, hi) = if mu0 < stats.mean() { (mu0, stats.mean()) } else { (stats.mean(), mu0) };
            prop_assert!(post.mean >= lo - 1e-12 && post.mean <= hi + 1e-12);
        }

        #[test]
        fn nnw_posterior_scale_is_spd(
            seed in any::<u64>(),
            n in 1usize..30,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = 3;
            let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let psi = &a * a.transpose() + DMatrix::identity(d, d) * 0.1;
            let hypers = NWHypers::new(DVector::zeros(d), 0.5, 4.0, psi).unwrap();
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect()).collect();
            let stats = MultiNormSuffStats::from_rows(d, rows.iter().map(|r| r.as_slice()));
            let post = nnw_posterior_hypers(&stats, &hypers).unwrap();
            prop_assert!(cholesky(&post.scale).is_ok());
            prop_assert_eq!(post.deg_free, 4.0 + n as f64);
        }

        #[test]
        fn mala_gradient_matches_finite_differences(m in -3.0..3.0f64, v in -1.5..1.5f64) {
            let u = [m, v];
            let prior = NIGPrior::new(paper_hypers());
            let mut like = UniNormLikelihood::default();
            let mut lap = UniLapLikelihood::default();
            for (i, y) in [0.4, 1.9, -0.7, 2.2, 1.1].iter().enumerate() {
                like.add_datum(i, &[*y]).unwrap();
                lap.add_datum(i, &[*y]).unwrap();
            }
            let nx = NxIGPrior::new(NxIGHypers::new(0.0, 4.0, 2.0, 1.0).unwrap());
            let grad = log_target_grad(&like, &prior, &u).unwrap();
            let grad_lap = log_target_grad(&lap, &nx, &u).unwrap();
            for j in 0..2 {
                let h = 1e-5;
                let mut up = u; up[j] += h;
                let mut dn = u; dn[j] -= h;
                let fd = (log_target(&like, &prior, &up).unwrap() - log_target(&like, &prior, &dn).unwrap()) / (2.0 * h);
                prop_assert!((fd - grad[j]).abs() <= 1e-5 * fd.abs().max(1.0));
                let fd = (log_target(&lap, &nx, &up).unwrap() - log_target(&lap, &nx, &dn).unwrap()) / (2.0 * h);
                prop_assert!((fd - grad_lap[j]).abs() <= 1e-5 * fd.abs().max(1.0));
            }
        }
    }
}
