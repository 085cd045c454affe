//! Per-user yearly download tallies and frequency cohorts.
//!
//! [`Accumulator`] is a mergeable aggregate: partial results built from
//! disjoint shards of a log combine by pointwise addition of counters and
//! union of keys, so the merged result does not depend on shard order or
//! grouping.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clickstream::{attribute_country, Action, Channel, CountryCode, LogRecord};
use crate::corpus::{Corpus, JournalSet};

/// Inclusive download bounds defining a frequent user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortConfig {
    lower: u64,
    upper: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid cohort bounds: need 1 <= lower ({lower}) <= upper ({upper})")]
pub struct InvalidBounds {
    pub lower: u64,
    pub upper: u64,
}

impl CohortConfig {
    pub const DEFAULT_LOWER: u64 = 100;
    pub const DEFAULT_UPPER: u64 = 1000;

    pub fn new(lower: u64, upper: u64) -> Result<Self, InvalidBounds> {
        if lower == 0 || lower > upper {
            return Err(InvalidBounds { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> u64 {
        self.lower
    }

    pub fn upper(&self) -> u64 {
        self.upper
    }

    pub fn category(&self, downloads: u64) -> CohortCategory {
        match downloads {
            0 => CohortCategory::AbstractOnly,
            d if d < self.lower => CohortCategory::Infrequent,
            d if d <= self.upper => CohortCategory::Frequent,
            _ => CohortCategory::Remainder,
        }
    }
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self { lower: Self::DEFAULT_LOWER, upper: Self::DEFAULT_UPPER }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CohortCategory {
    /// Active in the year without downloading anything.
    AbstractOnly,
    Infrequent,
    Frequent,
    /// Above the upper bound; typically shared machines such as library terminals.
    Remainder,
}

impl CohortCategory {
    pub const ALL: [CohortCategory; 4] = [
        CohortCategory::AbstractOnly,
        CohortCategory::Infrequent,
        CohortCategory::Frequent,
        CohortCategory::Remainder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CohortCategory::AbstractOnly => "ABSTRACT_ONLY",
            CohortCategory::Infrequent => "INFREQUENT",
            CohortCategory::Frequent => "FREQUENT",
            CohortCategory::Remainder => "REMAINDER",
        }
    }
}

impl fmt::Display for CohortCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps hostname suffixes to institute ids. The longest matching suffix on a
/// label boundary wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityMap {
    entries: Vec<(String, String)>,
}

#[derive(Debug, thiserror::Error)]
pub enum EntityMapError {
    #[error("reading entity map {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("entity map line {line}: expected `<hostname-suffix> <entity-id>`, got {text:?}")]
    BadLine { line: usize, text: String },
}

impl EntityMap {
    pub fn new<I, A, B>(entries: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut entries: Vec<(String, String)> = entries
            .into_iter()
            .map(|(s, e)| (s.into().trim_matches('.').to_ascii_lowercase(), e.into()))
            .collect();
        // Longest suffix first; ties keep a stable, deterministic order.
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.cmp(b)));
        Self { entries }
    }

    pub fn parse(text: &str) -> Result<Self, EntityMapError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(suffix), Some(entity), None) => entries.push((suffix.to_string(), entity.to_string())),
                _ => return Err(EntityMapError::BadLine { line: i + 1, text: raw.to_string() }),
            }
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, EntityMapError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| EntityMapError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entities(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|(_, e)| e.as_str()).collect()
    }

    pub fn lookup(&self, hostname: &str) -> Option<&str> {
        let host = hostname.trim_end_matches('.').to_ascii_lowercase();
        self.entries.iter().find_map(|(suffix, entity)| {
            let hit = host == *suffix
                || (host.len() > suffix.len()
                    && host.ends_with(suffix.as_str())
                    && host.as_bytes()[host.len() - suffix.len() - 1] == b'.');
            hit.then_some(entity.as_str())
        })
    }
}

/// Download tallies for one user in one calendar year.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UserYearStats {
    pub user_id: String,
    pub year: i32,
    /// All non-robot interactions, downloads or not.
    pub interactions: u64,
    pub downloads_total: u64,
    /// Downloads of publications in each named journal set.
    pub downloads_in_set: BTreeMap<String, u64>,
    /// Download events per publication; the keys are the downloaded set.
    pub downloads_by_pub: BTreeMap<String, u64>,
    pub country_votes: BTreeMap<CountryCode, u64>,
    pub institute_votes: BTreeMap<String, u64>,
}

impl UserYearStats {
    pub fn new(user_id: impl Into<String>, year: i32) -> Self {
        Self { user_id: user_id.into(), year, ..Default::default() }
    }

    pub fn downloaded_pubs(&self) -> impl Iterator<Item = &str> {
        self.downloads_by_pub.keys().map(String::as_str)
    }

    /// Downloads counted under an optional journal-set restriction.
    pub fn downloads(&self, restriction: Option<&str>) -> u64 {
        match restriction {
            None => self.downloads_total,
            Some(set) => self.downloads_in_set.get(set).copied().unwrap_or(0),
        }
    }

    /// Majority country over the year's records; ties go to the smallest code.
    pub fn country(&self) -> CountryCode {
        majority(&self.country_votes).copied().unwrap_or(CountryCode::Unknown)
    }

    /// Majority institute over the records whose hostname is mapped.
    pub fn institute(&self) -> Option<&str> {
        majority(&self.institute_votes).map(String::as_str)
    }

    pub fn merge(&mut self, other: &UserYearStats) {
        debug_assert_eq!((&self.user_id, self.year), (&other.user_id, other.year));
        self.interactions += other.interactions;
        self.downloads_total += other.downloads_total;
        add_counts(&mut self.downloads_in_set, &other.downloads_in_set);
        add_counts(&mut self.downloads_by_pub, &other.downloads_by_pub);
        add_counts(&mut self.country_votes, &other.country_votes);
        add_counts(&mut self.institute_votes, &other.institute_votes);
    }
}

fn majority<K: Ord>(votes: &BTreeMap<K, u64>) -> Option<&K> {
    // BTreeMap iterates in key order, so keeping the first maximum breaks
    // ties lexicographically.
    let mut best: Option<(&K, u64)> = None;
    for (k, &n) in votes {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((k, n));
        }
    }
    best.map(|(k, _)| k)
}

fn add_counts<K: Ord + Clone>(into: &mut BTreeMap<K, u64>, from: &BTreeMap<K, u64>) {
    for (k, &n) in from {
        *into.entry(k.clone()).or_insert(0) += n;
    }
}

fn bump(map: &mut BTreeMap<String, u64>, key: &str, by: u64) {
    match map.get_mut(key) {
        Some(n) => *n += by,
        None => {
            map.insert(key.to_string(), by);
        }
    }
}

/// Lookups needed while accumulating records.
#[derive(Debug, Clone, Copy)]
pub struct AttributionContext<'a> {
    pub corpus: &'a Corpus,
    pub journals: &'a [JournalSet],
    pub entity_map: Option<&'a EntityMap>,
}

/// Mergeable per-user-year statistics plus per-channel download events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Accumulator {
    users: HashMap<String, BTreeMap<i32, UserYearStats>>,
    /// (year, channel) → publication → download events, over all users.
    channel_downloads: BTreeMap<(i32, Channel), HashMap<String, u64>>,
    records: u64,
    unidentified_records: u64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one (already robot-filtered) record.
    pub fn add(&mut self, record: &LogRecord, ctx: &AttributionContext<'_>) {
        self.records += 1;
        let year = record.year();
        let is_download = record.action == Action::Download;
        if is_download {
            let events = self.channel_downloads.entry((year, record.channel)).or_default();
            match events.get_mut(record.pub_id.as_str()) {
                Some(n) => *n += 1,
                None => {
                    events.insert(record.pub_id.clone(), 1);
                }
            }
        }
        let Some(user) = record.user_id.token() else {
            self.unidentified_records += 1;
            return;
        };
        let years = match self.users.get_mut(user) {
            Some(y) => y,
            None => self.users.entry(user.to_string()).or_default(),
        };
        let stats = years.entry(year).or_insert_with(|| UserYearStats::new(user, year));
        stats.interactions += 1;
        *stats.country_votes.entry(attribute_country(&record.hostname, "")).or_insert(0) += 1;
        if let Some(institute) = ctx.entity_map.and_then(|m| m.lookup(&record.hostname)) {
            bump(&mut stats.institute_votes, institute, 1);
        }
        if is_download {
            stats.downloads_total += 1;
            bump(&mut stats.downloads_by_pub, &record.pub_id, 1);
            if let Some(journal) = ctx.corpus.journal_of(&record.pub_id) {
                for set in ctx.journals.iter().filter(|s| s.contains(journal)) {
                    bump(&mut stats.downloads_in_set, set.name(), 1);
                }
            }
        }
    }

    pub fn merge(&mut self, other: Accumulator) {
        self.records += other.records;
        self.unidentified_records += other.unidentified_records;
        for (user, years) in other.users {
            let mine = self.users.entry(user).or_default();
            for (year, stats) in years {
                match mine.get_mut(&year) {
                    Some(existing) => existing.merge(&stats),
                    None => {
                        mine.insert(year, stats);
                    }
                }
            }
        }
        for (key, events) in other.channel_downloads {
            let mine = self.channel_downloads.entry(key).or_default();
            for (pub_id, n) in events {
                *mine.entry(pub_id).or_insert(0) += n;
            }
        }
    }

    /// Records added, including those without a user token.
    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn unidentified_records(&self) -> u64 {
        self.unidentified_records
    }

    pub fn stats(&self) -> impl Iterator<Item = &UserYearStats> {
        self.users.values().flat_map(|y| y.values())
    }

    pub fn get(&self, user_id: &str, year: i32) -> Option<&UserYearStats> {
        self.users.get(user_id).and_then(|y| y.get(&year))
    }

    /// Stats ordered by (year, user_id).
    pub fn sorted_stats(&self) -> Vec<&UserYearStats> {
        let mut v: Vec<_> = self.stats().collect();
        v.sort_by(|a, b| (a.year, &a.user_id).cmp(&(b.year, &b.user_id)));
        v
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.stats().map(|s| s.year).collect()
    }

    /// Download events in `year` through `channel`, over all users.
    pub fn channel_downloads(&self, year: i32, channel: Channel) -> Option<&HashMap<String, u64>> {
        self.channel_downloads.get(&(year, channel))
    }
}

pub fn accumulate<'r, I>(records: I, ctx: &AttributionContext<'_>) -> Accumulator
where
    I: IntoIterator<Item = &'r LogRecord>,
{
    let mut acc = Accumulator::new();
    for r in records {
        acc.add(r, ctx);
    }
    acc
}

pub fn classify(stats: &UserYearStats, config: &CohortConfig, restriction: Option<&str>) -> CohortCategory {
    config.category(stats.downloads(restriction))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CohortCounts {
    pub abstract_only: usize,
    pub infrequent: usize,
    pub frequent: usize,
    pub remainder: usize,
}

impl CohortCounts {
    pub fn get(&self, category: CohortCategory) -> usize {
        match category {
            CohortCategory::AbstractOnly => self.abstract_only,
            CohortCategory::Infrequent => self.infrequent,
            CohortCategory::Frequent => self.frequent,
            CohortCategory::Remainder => self.remainder,
        }
    }

    /// Distinct users with at least one interaction.
    pub fn total_users(&self) -> usize {
        self.abstract_only + self.infrequent + self.frequent + self.remainder
    }

    /// Users with at least one download under the restriction.
    pub fn downloaders(&self) -> usize {
        self.total_users() - self.abstract_only
    }
}

pub fn cohort_counts<'a, I>(stats: I, year: i32, config: &CohortConfig, restriction: Option<&str>) -> CohortCounts
where
    I: IntoIterator<Item = &'a UserYearStats>,
{
    let mut counts = CohortCounts::default();
    for s in stats.into_iter().filter(|s| s.year == year) {
        match classify(s, config, restriction) {
            CohortCategory::AbstractOnly => counts.abstract_only += 1,
            CohortCategory::Infrequent => counts.infrequent += 1,
            CohortCategory::Frequent => counts.frequent += 1,
            CohortCategory::Remainder => counts.remainder += 1,
        }
    }
    counts
}

/// How users are tied to an entity: by country of origin, or by institute
/// through the hostname-suffix map.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum EntitySelector {
    Country(CountryCode),
    Institute(String),
}

impl EntitySelector {
    pub fn matches(&self, stats: &UserYearStats) -> bool {
        match self {
            EntitySelector::Country(code) => stats.country() == *code,
            EntitySelector::Institute(id) => stats.institute() == Some(id.as_str()),
        }
    }
}

impl fmt::Display for EntitySelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntitySelector::Country(c) => write!(f, "country:{c}"),
            EntitySelector::Institute(i) => write!(f, "institute:{i}"),
        }
    }
}

impl FromStr for EntitySelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("country", code)) => code.parse().map(EntitySelector::Country).map_err(|e| e.to_string()),
            Some(("institute", id)) if !id.is_empty() => Ok(EntitySelector::Institute(id.to_string())),
            _ => Err(format!("expected country:<CC> or institute:<id>, got {s:?}")),
        }
    }
}

/// Frequent users of `year` attributed to `entity`.
pub fn frequent_users<'a, I>(
    stats: I,
    year: i32,
    entity: &EntitySelector,
    config: &CohortConfig,
    restriction: Option<&str>,
) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a UserYearStats>,
{
    stats
        .into_iter()
        .filter(|s| s.year == year)
        .filter(|s| classify(s, config, restriction) == CohortCategory::Frequent)
        .filter(|s| entity.matches(s))
        .map(|s| s.user_id.clone())
        .collect()
}
