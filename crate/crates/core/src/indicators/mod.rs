//! Research-activity indicators computed from entity-year publication sets.

mod correlation;
mod economics;
mod hindex;
mod obsolescence;
mod overlap;
mod sets;

pub use correlation::{pearson_r, spearman_rho, CorrelationKind};
pub use economics::{
    fit_gdp_power_law, normalize_to_base_year, AuxError, AuxKind, AuxSeries, AuxTable, EconomicPoint, PowerLawFit,
    DEFAULT_BASE_YEAR,
};
pub use hindex::{h_index, h_index_next_year};
pub use obsolescence::{
    citation_events, events_from_counts, obsolescence_curve, Event, ObsolescenceCurve, DEFAULT_WINDOW_START,
};
pub use overlap::{
    overlap_fraction, overlap_fraction_with, random_overlap_baseline, BaselineSampler, OverlapDenominator,
    DEFAULT_BASELINE_SAMPLES,
};
pub use sets::{
    build_entity_year_sets, derive_seed, first_author_count, indicator_report, stats_by_year, Entity,
    EntityYearSets, IndicatorConfig, IndicatorReport,
};

use crate::corpus::CorpusError;

#[derive(Debug, thiserror::Error)]
pub enum IndicatorError {
    #[error("unknown entity {0}: not in the entity map and no affiliation matches")]
    UnknownEntity(String),
    #[error("empty reference set: overlap denominator '{0}' is zero")]
    EmptyReferenceSet(OverlapDenominator),
    #[error("sample of {sample_size} exceeds the {population} publications available")]
    SampleTooLarge { sample_size: usize, population: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("series has no value for base year {0}")]
    MissingBaseYear(i32),
    #[error("series value at base year {0} is zero")]
    ZeroBaseValue(i32),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}
