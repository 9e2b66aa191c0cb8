//! A mixture component: likelihood, prior and updater bound together.
//!
//! Algorithms only see the object-safe [`Hierarchy`] trait and create new
//! clusters by cloning a template.

use std::collections::BTreeSet;
use std::fmt::{self, Debug};
use std::str::FromStr;

use crate::config::ConfigTree;
use crate::error::{Error, Result};
use crate::io::{DataMatrix, ParamMap};
use crate::likelihood::{GammaLikelihood, Likelihood, MultiNormLikelihood, UniLapLikelihood, UniNormLikelihood};
use crate::prior::{GammaPrior, NIGPrior, NWPrior, NxIGPrior, PriorModel};
use crate::state::{GammaState, ParamState, UniLSState};
use crate::updater::{
    GammaGammaUpdater, MetropolisConfig, MetropolisKind, MetropolisUpdater, NnigUpdater, NnwUpdater,
    NnxigGibbsUpdater, Updater,
};
use crate::McmcRng;

pub trait Hierarchy: Debug + Send + Sync {
    fn kind(&self) -> HierarchyKind;

    fn clone_box(&self) -> Box<dyn Hierarchy>;

    fn dim(&self) -> usize;

    fn card(&self) -> usize;

    fn data_ids(&self) -> &BTreeSet<usize>;

    fn is_conjugate(&self) -> bool;

    /// log f(y | τ) at the current state.
    fn like_lpdf(&self, datum: &[f64]) -> Result<f64>;

    fn like_lpdf_grid(&self, grid: &DataMatrix) -> Result<Vec<f64>>;

    /// Replaces the state with a draw from G0. Membership is untouched.
    fn sample_prior(&mut self, rng: &mut McmcRng) -> Result<()>;

    /// Replaces the state with a draw from the updater's kernel.
    fn sample_full_cond(&mut self, rng: &mut McmcRng) -> Result<()>;

    /// log m(y) = log ∫ f(y | τ) G0(dτ).
    fn prior_pred_lpdf(&self, datum: &[f64]) -> Result<f64>;

    /// Posterior predictive log density given the data currently allocated.
    fn conditional_pred_lpdf(&self, datum: &[f64]) -> Result<f64>;

    fn add_datum(&mut self, id: usize, datum: &[f64]) -> Result<()>;

    fn remove_datum(&mut self, id: usize, datum: &[f64]) -> Result<()>;

    fn clear_data(&mut self);

    fn state_params(&self) -> ParamMap;

    fn set_state_params(&mut self, params: &ParamMap) -> Result<()>;

    /// Prior log density of a serialized state; errors if the parameter map
    /// describes a different kind of state.
    fn prior_lpdf_params(&self, params: &ParamMap) -> Result<f64>;
}

impl Clone for Box<dyn Hierarchy> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

#[derive(Clone)]
pub struct BaseHierarchy<L, P, U> {
    kind: HierarchyKind,
    likelihood: L,
    prior: P,
    updater: U,
}

impl<L, P, U> Debug for BaseHierarchy<L, P, U>
where
    L: Likelihood,
    P: PriorModel<State = L::State>,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hierarchy")
            .field("kind", &self.kind)
            .field("state", self.likelihood.state())
            .field("card", &self.likelihood.card())
            .finish()
    }
}

impl<L, P, U> BaseHierarchy<L, P, U>
where
    L: Likelihood,
    P: PriorModel<State = L::State>,
    U: Updater<L, P>,
{
    pub fn new(kind: HierarchyKind, likelihood: L, prior: P, updater: U) -> Self {
        Self {
            kind,
            likelihood,
            prior,
            updater,
        }
    }

    pub fn likelihood(&self) -> &L {
        &self.likelihood
    }

    pub fn prior(&self) -> &P {
        &self.prior
    }

    pub fn updater(&self) -> &U {
        &self.updater
    }

    pub fn state(&self) -> &L::State {
        self.likelihood.state()
    }

    pub fn set_state(&mut self, state: L::State) {
        self.likelihood.set_state(state);
    }
}

impl<L, P, U> Hierarchy for BaseHierarchy<L, P, U>
where
    L: Likelihood,
    P: PriorModel<State = L::State>,
    U: Updater<L, P>,
{
    fn kind(&self) -> HierarchyKind {
        self.kind
    }

    fn clone_box(&self) -> Box<dyn Hierarchy> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.likelihood.dim()
    }

    fn card(&self) -> usize {
        self.likelihood.card()
    }

    fn data_ids(&self) -> &BTreeSet<usize> {
        self.likelihood.data_ids()
    }

    fn is_conjugate(&self) -> bool {
        self.updater.is_conjugate()
    }

    fn like_lpdf(&self, datum: &[f64]) -> Result<f64> {
        self.likelihood.lpdf(datum)
    }

    fn like_lpdf_grid(&self, grid: &DataMatrix) -> Result<Vec<f64>> {
        self.likelihood.lpdf_grid(grid)
    }

    fn sample_prior(&mut self, rng: &mut McmcRng) -> Result<()> {
        let state = self.prior.sample(None, rng)?;
        self.likelihood.set_state(state);
        Ok(())
    }

    fn sample_full_cond(&mut self, rng: &mut McmcRng) -> Result<()> {
        if self.likelihood.card() == 0 {
            return self.sample_prior(rng);
        }
        let state = self.updater.draw(&self.likelihood, &self.prior, rng)?;
        self.likelihood.set_state(state);
        Ok(())
    }

    fn prior_pred_lpdf(&self, datum: &[f64]) -> Result<f64> {
        self.updater.marginal_lpdf(self.prior.hypers(), datum)
    }

    fn conditional_pred_lpdf(&self, datum: &[f64]) -> Result<f64> {
        if self.likelihood.card() == 0 {
            return self.prior_pred_lpdf(datum);
        }
        let post = self.updater.posterior_hypers(&self.likelihood, &self.prior)?;
        self.updater.marginal_lpdf(&post, datum)
    }

    fn add_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        self.likelihood.add_datum(id, datum)
    }

    fn remove_datum(&mut self, id: usize, datum: &[f64]) -> Result<()> {
        self.likelihood.remove_datum(id, datum)
    }

    fn clear_data(&mut self) {
        self.likelihood.clear_data();
    }

    fn state_params(&self) -> ParamMap {
        self.likelihood.state().to_params()
    }

    fn set_state_params(&mut self, params: &ParamMap) -> Result<()> {
        let state = L::State::from_params(params)?;
        self.likelihood.set_state(state);
        Ok(())
    }

    fn prior_lpdf_params(&self, params: &ParamMap) -> Result<f64> {
        Ok(self.prior.lpdf(&L::State::from_params(params)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HierarchyKind {
    NNIG,
    NNxIG,
    LapNIG,
    NNW,
    GammaGamma,
}

impl HierarchyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HierarchyKind::NNIG => "NNIG",
            HierarchyKind::NNxIG => "NNxIG",
            HierarchyKind::LapNIG => "LapNIG",
            HierarchyKind::NNW => "NNW",
            HierarchyKind::GammaGamma => "GammaGamma",
        }
    }
}

impl fmt::Display for HierarchyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HierarchyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NNIG" => Ok(HierarchyKind::NNIG),
            "NNxIG" => Ok(HierarchyKind::NNxIG),
            "LapNIG" => Ok(HierarchyKind::LapNIG),
            "NNW" => Ok(HierarchyKind::NNW),
            "GammaGamma" => Ok(HierarchyKind::GammaGamma),
            other => Err(Error::Config(format!(
                "unknown hierarchy `{other}` (expected NNIG, NNxIG, LapNIG, NNW or GammaGamma)"
            ))),
        }
    }
}

pub type NnigHierarchy = BaseHierarchy<UniNormLikelihood, NIGPrior, NnigUpdater>;
pub type NnwHierarchy = BaseHierarchy<MultiNormLikelihood, NWPrior, NnwUpdater>;
pub type GammaGammaHierarchy = BaseHierarchy<GammaLikelihood, GammaPrior, GammaGammaUpdater>;
pub type NnxigHierarchy = BaseHierarchy<UniNormLikelihood, NxIGPrior, NnxigGibbsUpdater>;

pub fn nnig_hierarchy(prior: NIGPrior) -> NnigHierarchy {
    BaseHierarchy::new(HierarchyKind::NNIG, UniNormLikelihood::default(), prior, NnigUpdater)
}

pub fn nnw_hierarchy(prior: NWPrior) -> NnwHierarchy {
    let like = MultiNormLikelihood::standard(prior.dim());
    BaseHierarchy::new(HierarchyKind::NNW, like, prior, NnwUpdater)
}

pub fn gamma_gamma_hierarchy(prior: GammaPrior) -> GammaGammaHierarchy {
    let like = GammaLikelihood::new(GammaState::new(prior.hypers().shape, 1.0));
    BaseHierarchy::new(HierarchyKind::GammaGamma, like, prior, GammaGammaUpdater)
}

pub fn nnxig_hierarchy(prior: NxIGPrior) -> NnxigHierarchy {
    BaseHierarchy::new(HierarchyKind::NNxIG, UniNormLikelihood::default(), prior, NnxigGibbsUpdater)
}

/// Updater choice read from the `updater` key of a hierarchy file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdaterChoice {
    Default,
    Metropolis(MetropolisConfig),
}

fn read_updater(tree: &ConfigTree) -> Result<UpdaterChoice> {
    if !tree.contains("updater") {
        return Ok(UpdaterChoice::Default);
    }
    let kind = match tree.string("updater")? {
        "conjugate" | "gibbs" | "default" => return Ok(UpdaterChoice::Default),
        "rwmh" => MetropolisKind::RandomWalk,
        "mala" => MetropolisKind::Mala,
        other => return Err(Error::Config(format!("unknown updater `{other}`"))),
    };
    let step = tree.number_or("step_size", kind.default_step_size())?;
    let n_steps = if tree.contains("n_steps") { tree.unsigned("n_steps")? as usize } else { 1 };
    Ok(UpdaterChoice::Metropolis(MetropolisConfig::new(kind, step, n_steps)?))
}

/// Builds a template hierarchy from its kind and parameter file. The
/// returned hierarchy starts from a placeholder state; callers draw it from
/// the prior before use.
pub fn build_hierarchy(kind: HierarchyKind, tree: &ConfigTree) -> Result<Box<dyn Hierarchy>> {
    let choice = read_updater(tree)?;
    let metropolis = |c: UpdaterChoice| match c {
        UpdaterChoice::Metropolis(cfg) => Some(MetropolisUpdater::new(cfg)),
        UpdaterChoice::Default => None,
    };
    Ok(match kind {
        HierarchyKind::NNIG => {
            let prior = NIGPrior::from_config(tree)?;
            match metropolis(choice) {
                None => Box::new(nnig_hierarchy(prior)),
                Some(u) => Box::new(BaseHierarchy::new(kind, UniNormLikelihood::default(), prior, u)),
            }
        }
        HierarchyKind::NNxIG => {
            let prior = NxIGPrior::from_config(tree)?;
            match metropolis(choice) {
                None => Box::new(nnxig_hierarchy(prior)),
                Some(u) => Box::new(BaseHierarchy::new(kind, UniNormLikelihood::default(), prior, u)),
            }
        }
        HierarchyKind::LapNIG => {
            let prior = NxIGPrior::from_config(tree)?;
            let u = metropolis(choice).unwrap_or_else(|| MetropolisUpdater::new(MetropolisConfig::random_walk()));
            Box::new(BaseHierarchy::new(kind, UniLapLikelihood::new(UniLSState::new(0.0, 1.0)), prior, u))
        }
        HierarchyKind::NNW => {
            if choice != UpdaterChoice::Default {
                return Err(Error::Config("NNW supports only the conjugate updater".into()));
            }
            Box::new(nnw_hierarchy(NWPrior::from_config(tree)?))
        }
        HierarchyKind::GammaGamma => {
            if choice != UpdaterChoice::Default {
                return Err(Error::Config("GammaGamma supports only the conjugate updater".into()));
            }
            Box::new(gamma_gamma_hierarchy(GammaPrior::from_config(tree)?))
        }
    })
}
