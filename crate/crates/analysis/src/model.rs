//! Population model for committee-failure analysis.

use thiserror::Error;

/// Errors raised when a failure model or bound query is malformed.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("committee size must be positive")]
    EmptyCommittee,
    #[error("population {population} cannot seat {committees} disjoint committees of {committee_size}")]
    PopulationTooSmall {
        population: u64,
        committees: u64,
        committee_size: u64,
    },
    #[error("misbehaving count {misbehaving} exceeds population {population}")]
    TooManyMisbehaving { misbehaving: u64, population: u64 },
    #[error("misbehaving rate must lie in (0, 1), got {0}")]
    RateOutOfRange(f64),
    #[error("threshold fraction {gamma} must exceed misbehaving rate {p}")]
    ThresholdBelowRate { gamma: f64, p: f64 },
    #[error("target failure probability must lie in (0, 1), got {0}")]
    TargetOutOfRange(f64),
}

/// A network of `population` nodes, `misbehaving` of which are lazy or
/// malicious, from which one primary committee and `backups` backup
/// committees of `committee_size` members each are drawn without
/// replacement. A committee is failed when at least `liveness_threshold`
/// of its members misbehave; epoch recovery fails only when the primary
/// and every backup are failed simultaneously.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureModel {
    pub population: u64,
    pub misbehaving: u64,
    pub committee_size: u64,
    pub backups: u64,
    pub liveness_threshold: u64,
}

impl FailureModel {
    pub fn new(
        population: u64,
        misbehaving: u64,
        committee_size: u64,
        backups: u64,
        liveness_threshold: u64,
    ) -> Result<Self, ModelError> {
        let model = Self {
            population,
            misbehaving,
            committee_size,
            backups,
            liveness_threshold,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.committee_size == 0 {
            return Err(ModelError::EmptyCommittee);
        }
        let committees = self.backups + 1;
        if committees.saturating_mul(self.committee_size) > self.population {
            return Err(ModelError::PopulationTooSmall {
                population: self.population,
                committees,
                committee_size: self.committee_size,
            });
        }
        if self.misbehaving > self.population {
            return Err(ModelError::TooManyMisbehaving {
                misbehaving: self.misbehaving,
                population: self.population,
            });
        }
        Ok(())
    }

    /// Number of committees drawn, primary included.
    pub fn committees(&self) -> u64 {
        self.backups + 1
    }

    /// Total seats drawn from the population.
    pub fn total_seats(&self) -> u64 {
        self.committees() * self.committee_size
    }
}
