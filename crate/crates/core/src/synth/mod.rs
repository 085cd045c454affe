//! Synthetic communities with planted ground truth: researchers, amateurs,
//! the lay public and robots reading a generated corpus.

mod economy;
mod generator;
mod model;
mod truth;

use std::io::{self, Write};

pub use economy::{generate_economy, EconomyModel};
pub use generator::{default_robot_policy, LogSummary, SyntheticCommunity};
pub use model::{CommunityModel, EntityModel, ModelError};
pub use truth::{CohortTruth, EntityYearTruth, GroundTruth};

use crate::indicators::Entity;

/// Writes the log for `model` and returns what was planted.
pub fn generate_logs<W: Write>(model: &CommunityModel, out: &mut W) -> io::Result<GroundTruth> {
    let community = SyntheticCommunity::new(model);
    community.write_logs(out)?;
    Ok(community.ground_truth().clone())
}

/// Writes the corpus for `model`. Planning is deterministic, so this matches
/// the log written by [`generate_logs`] for the same model.
pub fn generate_corpus<W: Write>(model: &CommunityModel, out: &mut W) -> io::Result<()> {
    SyntheticCommunity::new(model).write_corpus(out)
}

/// The model's entities as indicator entities.
pub fn model_entities(model: &CommunityModel) -> Vec<Entity> {
    model.entities.iter().map(|e| Entity::country(&e.country, &e.affiliation)).collect()
}
