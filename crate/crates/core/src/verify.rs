//! End-to-end check: synthesize a community, run it through the same
//! pipeline real logs take, and compare with what was planted.

use std::collections::BTreeSet;
use std::fmt;

use crate::cohort::{cohort_counts, AttributionContext, CohortCategory, CohortConfig, InvalidBounds};
use crate::corpus::{Corpus, CorpusError};
use crate::indicators::{pearson_r, stats_by_year, IndicatorConfig, IndicatorError};
use crate::ingest::{IngestError, IngestStats, Ingestor};
use crate::pipeline::{Analysis, EntityYearResult};
use crate::synth::{default_robot_policy, model_entities, CommunityModel, GroundTruth, LogSummary, SyntheticCommunity};

/// Maximum gap between planted and recovered correlation.
pub const R_TOLERANCE: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Bounds(#[from] InvalidBounds),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error("writing synthetic data: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub entity: String,
    pub year: i32,
    pub quantity: String,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mismatch at ({}, {}, {}): expected {}, found {}",
            self.entity, self.year, self.quantity, self.expected, self.found
        )
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub log: LogSummary,
    pub ingest: IngestStats,
    pub entity_years: usize,
    pub cohort_years: usize,
    pub mismatch: Option<Mismatch>,
    pub planted_r: Option<f64>,
    pub recovered_r: Option<f64>,
    /// Entity-years with both an overlap and a baseline.
    pub overlap_years: usize,
    /// Of those, how many have overlap above the baseline.
    pub overlap_above_baseline: usize,
    pub mean_overlap: Option<f64>,
    pub mean_baseline: Option<f64>,
    pub results: Vec<EntityYearResult>,
}

impl VerifyReport {
    pub fn r_within_tolerance(&self) -> bool {
        match (self.planted_r, self.recovered_r) {
            (Some(p), Some(r)) => (p - r).abs() <= R_TOLERANCE,
            (None, None) => true,
            _ => false,
        }
    }

    pub fn passed(&self) -> bool {
        self.mismatch.is_none() && self.r_within_tolerance()
    }

    /// Whether the mean overlap exceeds the mean random baseline.
    pub fn overlap_beats_baseline(&self) -> bool {
        matches!((self.mean_overlap, self.mean_baseline), (Some(o), Some(b)) if o > b)
    }
}

fn set_diff(expected: &BTreeSet<String>, found: &BTreeSet<String>) -> Option<(String, String)> {
    if expected == found {
        return None;
    }
    let missing = expected.difference(found).next();
    let extra = found.difference(expected).next();
    Some((
        format!("{} items{}", expected.len(), missing.map(|m| format!(" incl. {m}")).unwrap_or_default()),
        format!("{} items{}", found.len(), extra.map(|m| format!(" incl. {m}")).unwrap_or_default()),
    ))
}

/// Compares recovered sets and cohort sizes with the truth; entity-years
/// first, in truth order, then cohort years.
pub fn first_mismatch(
    truth: &GroundTruth,
    results: &[EntityYearResult],
    cohorts: &[(i32, [usize; 4])],
) -> Option<Mismatch> {
    for t in &truth.entity_years {
        let mismatch = |quantity: &str, (expected, found): (String, String)| Mismatch {
            entity: t.entity.clone(),
            year: t.year,
            quantity: quantity.to_string(),
            expected,
            found,
        };
        let Some(r) = results.iter().find(|r| r.sets.entity == t.entity && r.sets.year == t.year) else {
            return Some(mismatch("entity_year", ("present".into(), "absent".into())));
        };
        let s = &r.sets;
        let checks = [
            ("frequent_users", &t.frequent_users, &s.frequent_users),
            ("downloaded", &t.downloaded, &s.downloaded),
            ("first_author", &t.first_author, &s.first_author),
            ("any_author", &t.any_author, &s.any_author),
            ("cited", &t.cited, &s.cited),
        ];
        for (i, (name, expected, found)) in checks.iter().enumerate() {
            if let Some(d) = set_diff(expected, found) {
                return Some(mismatch(name, d));
            }
            if i == 0 && t.first_authors != r.report.first_authors {
                return Some(mismatch("first_authors", (t.first_authors.to_string(), r.report.first_authors.to_string())));
            }
        }
        if t.download_events != s.total_download_events() {
            return Some(mismatch(
                "download_events",
                (t.download_events.to_string(), s.total_download_events().to_string()),
            ));
        }
    }
    for c in &truth.cohorts {
        let found = cohorts.iter().find(|(y, _)| *y == c.year).map(|(_, n)| *n).unwrap_or_default();
        for (k, category) in CohortCategory::ALL.into_iter().enumerate() {
            if c.get(category) != found[k] {
                return Some(Mismatch {
                    entity: "all".into(),
                    year: c.year,
                    quantity: format!("cohort:{category}"),
                    expected: c.get(category).to_string(),
                    found: found[k].to_string(),
                });
            }
        }
    }
    None
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Runs the full round trip for `model`. The cohort bounds always come from
/// the model; the rest of `config` is used as given.
pub fn verify(model: &CommunityModel, config: &IndicatorConfig) -> Result<VerifyReport, VerifyError> {
    let community = SyntheticCommunity::new(model);
    let truth = community.ground_truth();

    let mut corpus_text = Vec::new();
    community.write_corpus(&mut corpus_text)?;
    let corpus = Corpus::from_reader(&corpus_text[..], &Default::default())?;
    drop(corpus_text);

    let journals = [community.journals()];
    let policy = default_robot_policy();
    let ctx = AttributionContext { corpus: &corpus, journals: &journals, entity_map: None };
    let mut ingestor = Ingestor::new(&policy, ctx);
    let log = match community.write_logs(&mut ingestor) {
        Ok(log) => log,
        // A failed write carries the ingest error; surface that one.
        Err(e) => return Err(ingestor.finish().err().map(VerifyError::from).unwrap_or(e.into())),
    };
    let (acc, ingest) = ingestor.finish()?;

    let config = IndicatorConfig { cohort: CohortConfig::new(model.lower, model.upper)?, ..config.clone() };
    let entities = model_entities(model);
    let analysis = Analysis {
        corpus: &corpus,
        acc: &acc,
        entities: &entities,
        years: model.years(),
        config: &config,
        entity_map: None,
        aux: None,
        correlation: Default::default(),
        base_year: model.first_year,
    };
    let results = analysis.entity_years()?;

    let by_year = stats_by_year(&acc);
    let cohorts: Vec<(i32, [usize; 4])> = model
        .years()
        .map(|y| {
            let counts = cohort_counts(by_year.get(&y).into_iter().flatten().copied(), y, &config.cohort, None);
            (y, CohortCategory::ALL.map(|c| counts.get(c)))
        })
        .collect();

    let mismatch = first_mismatch(truth, &results, &cohorts);
    let planted_r = truth.frequent_vs_first_author_r().ok();
    let xs: Vec<f64> = results.iter().map(|r| r.report.frequent_users as f64).collect();
    let ys: Vec<f64> = results.iter().map(|r| r.report.first_authors as f64).collect();
    let recovered_r = pearson_r(&xs, &ys).ok();

    let pairs: Vec<(f64, f64)> =
        results.iter().filter_map(|r| Some((r.report.overlap?, r.report.random_baseline?))).collect();
    let overlaps: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let baselines: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    Ok(VerifyReport {
        log,
        ingest,
        entity_years: truth.entity_years.len(),
        cohort_years: truth.cohorts.len(),
        mismatch,
        planted_r,
        recovered_r,
        overlap_years: pairs.len(),
        overlap_above_baseline: pairs.iter().filter(|(o, b)| o > b).count(),
        mean_overlap: mean(&overlaps),
        mean_baseline: mean(&baselines),
        results,
    })
}
