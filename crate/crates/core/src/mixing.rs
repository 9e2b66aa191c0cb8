//! Priors on the mixture weights.
//!
//! Marginal mixings (DP, Pitman–Yor) expose the unnormalized predictive
//! masses of their EPPF; the conditional truncated stick-breaking mixing
//! exposes explicit weights.

use std::fmt::{self, Debug};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::config::ConfigTree;
use crate::error::{Error, Result};
use crate::io::{ParamArray, ParamMap};
use crate::numeric::{cast, Real};
use crate::McmcRng;

pub const DEFAULT_NUM_COMPONENTS: usize = 25;

pub trait Mixing: Debug + Send + Sync {
    fn kind(&self) -> MixingKind;

    fn clone_box(&self) -> Box<dyn Mixing>;

    fn is_conditional(&self) -> bool;

    /// Unnormalized mass of joining a cluster of size `n_h` when `n` data
    /// are spread over `k` clusters.
    fn mass_existing_cluster(&self, n: usize, n_h: usize, k: usize) -> Result<f64>;

    /// Unnormalized mass of opening a new cluster.
    fn mass_new_cluster(&self, n: usize, k: usize) -> Result<f64>;

    fn log_mass_existing_cluster(&self, n: usize, n_h: usize, k: usize) -> Result<f64> {
        Ok(self.mass_existing_cluster(n, n_h, k)?.ln())
    }

    fn log_mass_new_cluster(&self, n: usize, k: usize) -> Result<f64> {
        Ok(self.mass_new_cluster(n, k)?.ln())
    }

    /// Component weights of a conditional mixing.
    fn weights(&self) -> Result<Vec<f64>> {
        Err(Error::Capability("explicit weights require a conditional mixing"))
    }

    /// Fixed number of components of a conditional mixing.
    fn num_components(&self) -> Option<usize> {
        None
    }

    /// Draws the mixing parameters from their full conditional given the
    /// cluster sizes. Sizes may contain zeros for conditional mixings.
    fn update_state(&mut self, sizes: &[usize], n: usize, rng: &mut McmcRng) -> Result<()>;

    fn state_params(&self) -> ParamMap;

    fn set_state_params(&mut self, params: &ParamMap) -> Result<()>;
}

impl Clone for Box<dyn Mixing> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MixingKind {
    DP,
    PY,
    TruncSB,
}

impl MixingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MixingKind::DP => "DP",
            MixingKind::PY => "PY",
            MixingKind::TruncSB => "TruncSB",
        }
    }
}

impl fmt::Display for MixingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MixingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DP" => Ok(MixingKind::DP),
            "PY" => Ok(MixingKind::PY),
            "TruncSB" => Ok(MixingKind::TruncSB),
            other => Err(Error::Config(format!("unknown mixing `{other}` (expected DP, PY or TruncSB)"))),
        }
    }
}

fn check_sizes(n: usize, n_h: usize, k: usize) -> Result<()> {
    if n_h == 0 || n_h > n || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "cluster masses need 1 <= n_h <= n and k >= 1 (got n={n}, n_h={n_h}, k={k})"
        )));
    }
    Ok(())
}

fn scalar_param(params: &ParamMap, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(ParamArray::as_scalar)
        .ok_or_else(|| Error::KindMismatch(format!("mixing state lacks scalar `{key}`")))
}

/// Gamma(shape, rate) hyperprior on the DP total mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaHyperprior {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletMixing {
    totalmass: f64,
    hyperprior: Option<GammaHyperprior>,
}

impl DirichletMixing {
    pub fn new(totalmass: f64) -> Result<Self> {
        if !(totalmass > 0.0 && totalmass.is_finite()) {
            return Err(Error::InvalidParameter(format!("DP total mass must be positive, got {totalmass}")));
        }
        Ok(Self {
            totalmass,
            hyperprior: None,
        })
    }

    pub fn with_hyperprior(totalmass: f64, hyperprior: GammaHyperprior) -> Result<Self> {
        if !(hyperprior.shape > 0.0 && hyperprior.rate > 0.0) {
            return Err(Error::InvalidParameter("gamma_prior needs positive shape and rate".into()));
        }
        let mut out = Self::new(totalmass)?;
        out.hyperprior = Some(hyperprior);
        Ok(out)
    }

    pub fn totalmass(&self) -> f64 {
        self.totalmass
    }

    pub fn hyperprior(&self) -> Option<GammaHyperprior> {
        self.hyperprior
    }

    pub fn from_config(tree: &ConfigTree) -> Result<Self> {
        let fixed = if tree.contains("fixed_value") {
            Some(tree.tree("fixed_value")?.number("totalmass")?)
        } else {
            None
        };
        if tree.contains("gamma_prior") {
            let g = tree.tree("gamma_prior")?;
            let hyper = GammaHyperprior {
                shape: g.number("shape")?,
                rate: g.number("rate")?,
            };
            let init = fixed.unwrap_or(hyper.shape / hyper.rate);
            return Self::with_hyperprior(init, hyper);
        }
        match fixed {
            Some(alpha) => Self::new(alpha),
            None => Err(Error::MissingKey("fixed_value".into())),
        }
    }
}

/// One step of the auxiliary-variable update of a DP total mass under a
/// Gamma(shape, rate) prior, given `k` clusters among `n` data.
pub fn resample_totalmass<R: Rng + ?Sized>(alpha: f64, prior: GammaHyperprior, k: usize, n: usize, rng: &mut R) -> f64 {
    if n == 0 {
        return Gamma::new(prior.shape, 1.0 / prior.rate).unwrap().sample(rng);
    }
    let eta: f64 = Beta::new(alpha + 1.0, n as f64).unwrap().sample(rng);
    let rate = prior.rate - eta.ln();
    let k = k as f64;
    let odds = (prior.shape + k - 1.0) / (n as f64 * rate);
    let shape = if rng.random::<f64>() < odds / (1.0 + odds) {
        prior.shape + k
    } else {
        prior.shape + k - 1.0
    };
    Gamma::new(shape, 1.0 / rate).unwrap().sample(rng).max(f64::MIN_POSITIVE)
}

impl Mixing for DirichletMixing {
    fn kind(&self) -> MixingKind {
        MixingKind::DP
    }

    fn clone_box(&self) -> Box<dyn Mixing> {
        Box::new(self.clone())
    }

    fn is_conditional(&self) -> bool {
        false
    }

    fn mass_existing_cluster(&self, n: usize, n_h: usize, k: usize) -> Result<f64> {
        check_sizes(n, n_h, k)?;
        Ok(n_h as f64)
    }

    fn mass_new_cluster(&self, _n: usize, _k: usize) -> Result<f64> {
        Ok(self.totalmass)
    }

    fn update_state(&mut self, sizes: &[usize], n: usize, rng: &mut McmcRng) -> Result<()> {
        if let Some(prior) = self.hyperprior {
            let k = sizes.iter().filter(|&&s| s > 0).count();
            self.totalmass = resample_totalmass(self.totalmass, prior, k, n, rng);
        }
        Ok(())
    }

    fn state_params(&self) -> ParamMap {
        ParamMap::from([("totalmass".to_string(), ParamArray::scalar(self.totalmass))])
    }

    fn set_state_params(&mut self, params: &ParamMap) -> Result<()> {
        let alpha = scalar_param(params, "totalmass")?;
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("DP total mass must be positive, got {alpha}")));
        }
        self.totalmass = alpha;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitmanYorMixing {
    strength: f64,
    discount: f64,
}

impl PitmanYorMixing {
    pub fn new(strength: f64, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) || !(strength > -discount) || !strength.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Pitman-Yor needs 0 <= discount < 1 and strength > -discount (got {strength}, {discount})"
            )));
        }
        Ok(Self { strength, discount })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn from_config(tree: &ConfigTree) -> Result<Self> {
        let t = tree.tree("fixed_values")?;
        Self::new(t.number("strength")?, t.number("discount")?)
    }
}

impl Mixing for PitmanYorMixing {
    fn kind(&self) -> MixingKind {
        MixingKind::PY
    }

    fn clone_box(&self) -> Box<dyn Mixing> {
        Box::new(self.clone())
    }

    fn is_conditional(&self) -> bool {
        false
    }

    fn mass_existing_cluster(&self, n: usize, n_h: usize, k: usize) -> Result<f64> {
        check_sizes(n, n_h, k)?;
        Ok(n_h as f64 - self.discount)
    }

    fn mass_new_cluster(&self, _n: usize, k: usize) -> Result<f64> {
        Ok(self.strength + self.discount * k as f64)
    }

    fn update_state(&mut self, _sizes: &[usize], _n: usize, _rng: &mut McmcRng) -> Result<()> {
        Ok(())
    }

    fn state_params(&self) -> ParamMap {
        ParamMap::from([
            ("discount".to_string(), ParamArray::scalar(self.discount)),
            ("strength".to_string(), ParamArray::scalar(self.strength)),
        ])
    }

    fn set_state_params(&mut self, params: &ParamMap) -> Result<()> {
        *self = Self::new(scalar_param(params, "strength")?, scalar_param(params, "discount")?)?;
        Ok(())
    }
}

/// Weights w_1 = ν_1, w_j = ν_j ∏_{ℓ<j}(1 − ν_ℓ), with the final weight
/// taking the leftover mass. Returns `sticks.len() + 1` weights.
pub fn stick_weights<T: Real>(sticks: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(sticks.len() + 1);
    let mut rest = T::one();
    for &nu in sticks {
        out.push(nu * rest);
        rest = rest * (T::one() - nu);
    }
    out.push(rest);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncSBMixing {
    totalmass: f64,
    sticks: Vec<f64>,
}

impl TruncSBMixing {
    /// Starts from sticks that give equal weight to every component.
    pub fn new(num_components: usize, totalmass: f64) -> Result<Self> {
        if num_components == 0 {
            return Err(Error::InvalidParameter("num_components must be at least 1".into()));
        }
        if !(totalmass > 0.0 && totalmass.is_finite()) {
            return Err(Error::InvalidParameter(format!("total mass must be positive, got {totalmass}")));
        }
        let sticks = (0..num_components - 1).map(|h| 1.0 / (num_components - h) as f64).collect();
        Ok(Self { totalmass, sticks })
    }

    pub fn with_sticks(sticks: Vec<f64>, totalmass: f64) -> Result<Self> {
        let mut out = Self::new(sticks.len() + 1, totalmass)?;
        if sticks.iter().any(|nu| !(0.0..=1.0).contains(nu)) {
            return Err(Error::InvalidParameter("stick fractions must lie in [0, 1]".into()));
        }
        out.sticks = sticks;
        Ok(out)
    }

    pub fn sticks(&self) -> &[f64] {
        &self.sticks
    }

    pub fn totalmass(&self) -> f64 {
        self.totalmass
    }

    pub fn from_config(tree: &ConfigTree) -> Result<Self> {
        let m = if tree.contains("num_components") {
            tree.unsigned("num_components")? as usize
        } else {
            DEFAULT_NUM_COMPONENTS
        };
        Self::new(m, tree.number_or("totalmass", 1.0)?)
    }
}

impl Mixing for TruncSBMixing {
    fn kind(&self) -> MixingKind {
        MixingKind::TruncSB
    }

    fn clone_box(&self) -> Box<dyn Mixing> {
        Box::new(self.clone())
    }

    fn is_conditional(&self) -> bool {
        true
    }

    fn mass_existing_cluster(&self, _n: usize, _n_h: usize, _k: usize) -> Result<f64> {
        Err(Error::Capability("predictive masses require a marginal mixing"))
    }

    fn mass_new_cluster(&self, _n: usize, _k: usize) -> Result<f64> {
        Err(Error::Capability("predictive masses require a marginal mixing"))
    }

    fn weights(&self) -> Result<Vec<f64>> {
        Ok(stick_weights(&self.sticks))
    }

    fn num_components(&self) -> Option<usize> {
        Some(self.sticks.len() + 1)
    }

    fn update_state(&mut self, sizes: &[usize], _n: usize, rng: &mut McmcRng) -> Result<()> {
        let m = self.sticks.len() + 1;
        if sizes.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: sizes.len(),
            });
        }
        let mut tail: usize = sizes.iter().sum();
        for (h, nu) in self.sticks.iter_mut().enumerate() {
            tail -= sizes[h];
            let a = 1.0 + sizes[h] as f64;
            let b = self.totalmass + tail as f64;
            *nu = Beta::new(a, b)
                .map_err(|e| Error::Numerical(format!("stick update: {e}")))?
                .sample(rng);
        }
        Ok(())
    }

    fn state_params(&self) -> ParamMap {
        ParamMap::from([
            ("sticks".to_string(), ParamArray::vector(self.sticks.clone())),
            ("totalmass".to_string(), ParamArray::scalar(self.totalmass)),
        ])
    }

    fn set_state_params(&mut self, params: &ParamMap) -> Result<()> {
        let sticks = params
            .get("sticks")
            .ok_or_else(|| Error::KindMismatch("mixing state lacks `sticks`".into()))?;
        if sticks.data.len() != self.sticks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sticks.len(),
                found: sticks.data.len(),
            });
        }
        *self = Self::with_sticks(sticks.data.clone(), scalar_param(params, "totalmass")?)?;
        Ok(())
    }
}

pub fn build_mixing(kind: MixingKind, tree: &ConfigTree) -> Result<Box<dyn Mixing>> {
    Ok(match kind {
        MixingKind::DP => Box::new(DirichletMixing::from_config(tree)?),
        MixingKind::PY => Box::new(PitmanYorMixing::from_config(tree)?),
        MixingKind::TruncSB => Box::new(TruncSBMixing::from_config(tree)?),
    })
}

/// Normalized predictive probabilities (existing clusters then the new one)
/// for a marginal mixing; a convenience over the mass functions.
pub fn predictive_probs<T: Real>(mixing: &dyn Mixing, sizes: &[usize]) -> Result<Vec<T>> {
    let n: usize = sizes.iter().sum();
    let k = sizes.len();
    let mut out = Vec::with_capacity(k + 1);
    for &s in sizes {
        out.push(mixing.mass_existing_cluster(n, s, k)?);
    }
    out.push(mixing.mass_new_cluster(n, k)?);
    let total: f64 = out.iter().sum();
    Ok(out.into_iter().map(|m| cast::<T>(m / total)).collect())
}
