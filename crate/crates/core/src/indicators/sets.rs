use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::hindex::h_index_next_year;
use super::obsolescence::DEFAULT_WINDOW_START;
use super::overlap::{BaselineSampler, OverlapDenominator, DEFAULT_BASELINE_SAMPLES};
use super::IndicatorError;
use crate::clickstream::CountryCode;
use crate::cohort::{frequent_users, Accumulator, CohortConfig, EntityMap, EntitySelector, UserYearStats};
use crate::corpus::{BibliographyQuery, Corpus, JournalSet};

/// An entity as seen from both sides: how its users are recognised in the
/// logs and the affiliation text its publications carry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub selector: EntitySelector,
    pub affiliation: String,
}

impl Entity {
    pub fn country(code: &str, affiliation: &str) -> Self {
        let code: CountryCode = code.parse().unwrap_or(CountryCode::Unknown);
        Self { id: code.to_string(), selector: EntitySelector::Country(code), affiliation: affiliation.to_string() }
    }

    pub fn institute(id: &str, affiliation: &str) -> Self {
        Self {
            id: id.to_string(),
            selector: EntitySelector::Institute(id.to_string()),
            affiliation: affiliation.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorConfig {
    pub cohort: CohortConfig,
    /// Journal-set name the cohort download count is restricted to, if any.
    pub restriction: Option<String>,
    pub journals: JournalSet,
    /// First publication year considered for downloads and the baseline slice.
    pub window_start: i32,
    pub denominator: OverlapDenominator,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            cohort: CohortConfig::default(),
            restriction: None,
            journals: JournalSet::main_astronomy(),
            window_start: DEFAULT_WINDOW_START,
            denominator: OverlapDenominator::default(),
            n_samples: DEFAULT_BASELINE_SAMPLES,
            seed: 0,
        }
    }
}

/// R, P and C for one entity and year, plus the users behind R.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityYearSets {
    pub entity: String,
    pub year: i32,
    pub frequent_users: BTreeSet<String>,
    /// R: journal-set publications from the window downloaded by the
    /// frequent users.
    pub downloaded: BTreeSet<String>,
    /// Download events behind `downloaded`, per publication.
    pub download_events: BTreeMap<String, u64>,
    /// P with first-author affiliation.
    pub first_author: BTreeSet<String>,
    /// P with any-author affiliation.
    pub any_author: BTreeSet<String>,
    /// C: journal-set publications cited by `first_author`.
    pub cited: BTreeSet<String>,
}

impl EntityYearSets {
    pub fn total_download_events(&self) -> u64 {
        self.download_events.values().sum()
    }
}

/// User-year stats grouped by year, each group in user order.
pub fn stats_by_year(acc: &Accumulator) -> BTreeMap<i32, Vec<&UserYearStats>> {
    let mut out: BTreeMap<i32, Vec<&UserYearStats>> = BTreeMap::new();
    for s in acc.sorted_stats() {
        out.entry(s.year).or_default().push(s);
    }
    out
}

fn check_known(corpus: &Corpus, entity: &Entity, entity_map: Option<&EntityMap>) -> Result<(), IndicatorError> {
    let unknown = || IndicatorError::UnknownEntity(entity.id.clone());
    if entity.affiliation.is_empty() {
        return Err(unknown());
    }
    let mapped = match &entity.selector {
        EntitySelector::Country(code) => code.is_known(),
        EntitySelector::Institute(id) => entity_map.is_some_and(|m| m.entities().contains(id.as_str())),
    };
    if mapped {
        return Ok(());
    }
    let query = BibliographyQuery {
        affiliation: &entity.affiliation,
        years: i32::MIN..=i32::MAX,
        first_author_only: false,
        journals: None,
        refereed_only: false,
    };
    if corpus.query_bibliography(&query).is_empty() {
        Err(unknown())
    } else {
        Ok(())
    }
}

/// Builds R, P and C for `entity` in `year`. `stats` may span several years;
/// only those of `year` are used.
pub fn build_entity_year_sets<'a, I>(
    corpus: &Corpus,
    stats: I,
    entity: &Entity,
    year: i32,
    config: &IndicatorConfig,
    entity_map: Option<&EntityMap>,
) -> Result<EntityYearSets, IndicatorError>
where
    I: IntoIterator<Item = &'a UserYearStats>,
{
    check_known(corpus, entity, entity_map)?;
    let journals = &config.journals;

    let mut users: Vec<&UserYearStats> = Vec::new();
    let stats: Vec<&UserYearStats> = stats.into_iter().filter(|s| s.year == year).collect();
    let ids = frequent_users(stats.iter().copied(), year, &entity.selector, &config.cohort, config.restriction.as_deref());
    users.extend(stats.iter().copied().filter(|s| ids.contains(&s.user_id)));

    let window = config.window_start..=year;
    let mut download_events: BTreeMap<String, u64> = BTreeMap::new();
    for s in &users {
        for (id, &n) in &s.downloads_by_pub {
            let Some(p) = corpus.get(id) else { continue };
            if journals.contains(&p.journal) && window.contains(&p.year) {
                *download_events.entry(id.clone()).or_insert(0) += n;
            }
        }
    }

    let bibliography = |first_author_only| {
        corpus.query_bibliography(&BibliographyQuery {
            affiliation: &entity.affiliation,
            years: year..=year,
            first_author_only,
            journals: Some(journals),
            refereed_only: false,
        })
    };
    let first_author = bibliography(true);
    let any_author = bibliography(false);
    let cited = corpus.cited_set(first_author.iter().map(String::as_str), Some(journals));

    Ok(EntityYearSets {
        entity: entity.id.clone(),
        year,
        frequent_users: ids,
        downloaded: download_events.keys().cloned().collect(),
        download_events,
        first_author,
        any_author,
        cited,
    })
}

/// Distinct first-author names over the entity's first-author publications.
pub fn first_author_count(corpus: &Corpus, affiliation: &str, year: i32, journals: &JournalSet) -> usize {
    let pubs = corpus.query_bibliography(&BibliographyQuery {
        affiliation,
        years: year..=year,
        first_author_only: true,
        journals: Some(journals),
        refereed_only: false,
    });
    distinct_first_authors(corpus, &pubs)
}

fn distinct_first_authors(corpus: &Corpus, pubs: &BTreeSet<String>) -> usize {
    pubs.iter()
        .filter_map(|id| corpus.get(id)?.first_author())
        .map(|a| a.name.as_str())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Seed for one entity-year's baseline, derived from the master seed so
/// that jobs can run in any order.
pub fn derive_seed(master: u64, entity: &str, year: i32) -> u64 {
    // FNV-1a over the key, then a SplitMix64 finaliser.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in entity.bytes().chain(year.to_le_bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReport {
    pub entity: String,
    pub year: i32,
    pub downloaded: usize,
    pub download_events: u64,
    pub first_author_pubs: usize,
    pub any_author_pubs: usize,
    pub cited: usize,
    pub frequent_users: usize,
    pub first_authors: usize,
    /// `None` when the chosen denominator is empty.
    pub overlap: Option<f64>,
    pub random_baseline: Option<f64>,
    pub h_index_next_year: u64,
}

/// Counts, overlap with its random baseline, and next-year h-index.
pub fn indicator_report(
    corpus: &Corpus,
    sets: &EntityYearSets,
    config: &IndicatorConfig,
) -> Result<IndicatorReport, IndicatorError> {
    let r = sets.downloaded.len();
    let intersection = sets.downloaded.intersection(&sets.cited).count();
    let (overlap, random_baseline) = match config.denominator.fraction(intersection, r, sets.cited.len()) {
        Ok(f) => {
            let slice = corpus.slice(&config.journals, config.window_start..=sets.year);
            let sampler = BaselineSampler::new(&slice, &sets.cited, config.denominator);
            let seed = derive_seed(config.seed, &sets.entity, sets.year);
            let baseline = match sampler.par_mean(r, config.n_samples, seed) {
                Ok(b) => Some(b),
                Err(IndicatorError::EmptyReferenceSet(_)) => None,
                Err(e) => return Err(e),
            };
            (Some(f), baseline)
        }
        Err(IndicatorError::EmptyReferenceSet(_)) => (None, None),
        Err(e) => return Err(e),
    };

    Ok(IndicatorReport {
        entity: sets.entity.clone(),
        year: sets.year,
        downloaded: r,
        download_events: sets.total_download_events(),
        first_author_pubs: sets.first_author.len(),
        any_author_pubs: sets.any_author.len(),
        cited: sets.cited.len(),
        frequent_users: sets.frequent_users.len(),
        first_authors: distinct_first_authors(corpus, &sets.first_author),
        overlap,
        random_baseline,
        h_index_next_year: h_index_next_year(corpus, sets.first_author.iter().map(String::as_str), sets.year)?,
    })
}
