use super::config::Configuration;
use super::dirichlet::{ActionDistribution, DirichletParams};
use super::rectify::{rectify_observation, PrivateObservation};
use crate::error::Result;

/// Episode-scoped Dirichlet-multinomial model of the other agents' actions.
///
/// Starts from the uniform prior, absorbs one rectified configuration per
/// step, and rescales its total concentration when the population changes
/// size so the mean action is preserved.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTracker {
    alpha: DirichletParams,
    others: usize,
}

impl PopulationTracker {
    pub fn new(action_count: usize, others: usize) -> Self {
        Self {
            alpha: DirichletParams::ones(action_count),
            others,
        }
    }

    pub fn alpha(&self) -> &DirichletParams {
        &self.alpha
    }

    pub fn others(&self) -> usize {
        self.others
    }

    pub fn action_count(&self) -> usize {
        self.alpha.len()
    }

    pub fn mean_action(&self) -> ActionDistribution {
        self.alpha.mean()
    }

    /// Back to the uniform prior for a new episode.
    pub fn reset(&mut self, others: usize) {
        self.alpha = DirichletParams::ones(self.alpha.len());
        self.others = others;
    }

    /// Rescales `α` by `N_new / N_old`. Empty populations on either side
    /// leave `α` untouched.
    pub fn resize(&mut self, others: usize) -> Result<()> {
        if others != self.others && others > 0 && self.others > 0 {
            self.alpha = self.alpha.rescaled(others as f64 / self.others as f64)?;
        }
        self.others = others;
        Ok(())
    }

    /// Rectifies `obs`, applies the conjugate update and returns the counts used.
    pub fn observe(&mut self, obs: &PrivateObservation) -> Result<Configuration> {
        let rectified = rectify_observation(obs, self.alpha.len())?;
        self.alpha = self.alpha.posterior(&rectified)?;
        Ok(rectified)
    }
}
