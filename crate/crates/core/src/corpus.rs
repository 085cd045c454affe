//! Publication metadata and the citation graph.
//!
//! A corpus is loaded once from JSON-lines and is immutable afterwards; all
//! queries take `&self`. Reference lists may point outside the corpus; such
//! dangling edges are counted at load time and otherwise ignored.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    pub name: String,
    pub aff: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publication {
    pub pub_id: String,
    pub year: i32,
    pub journal: String,
    pub refereed: bool,
    pub authors: Vec<Author>,
    #[serde(default)]
    pub references: Vec<String>,
}

impl Publication {
    pub fn first_author(&self) -> Option<&Author> {
        self.authors.first()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading corpus {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corpus line {line}: malformed record: {source}")]
    Malformed { line: usize, source: serde_json::Error },
    #[error("corpus line {line}: DUPLICATE_PUB_ID {pub_id:?}")]
    DuplicatePubId { line: usize, pub_id: String },
    #[error("corpus line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("UNKNOWN_PUB_ID {0:?}")]
    UnknownPubId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("journal set {0:?} has no members")]
pub struct EmptyJournalSet(pub String);

/// A named set of canonical journal names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalSet {
    name: String,
    members: BTreeSet<String>,
}

impl JournalSet {
    pub const MAIN: &'static str = "main";

    pub fn new<I, S>(name: impl Into<String>, members: I) -> Result<Self, EmptyJournalSet>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = name.into();
        let members: BTreeSet<String> = members.into_iter().map(Into::into).collect();
        if members.is_empty() {
            return Err(EmptyJournalSet(name));
        }
        Ok(Self { name, members })
    }

    /// ApJ, ApJL, ApJS, AJ, MNRAS and A&A.
    pub fn main_astronomy() -> Self {
        Self::new(Self::MAIN, ["ApJ", "ApJL", "ApJS", "AJ", "MNRAS", "A&A"]).expect("non-empty")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn members(&self) -> &BTreeSet<String> {
        &self.members
    }

    pub fn contains(&self, journal: &str) -> bool {
        self.members.contains(journal)
    }
}

/// Validation bounds applied while loading.
#[derive(Debug, Clone)]
pub struct CorpusLimits {
    pub years: RangeInclusive<i32>,
}

impl Default for CorpusLimits {
    fn default() -> Self {
        Self { years: 1800..=2100 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub publications: usize,
    pub references: usize,
    pub dangling_references: usize,
}

/// Parameters of an affiliation query, mirroring `aff:"<text>" year:A-B`.
#[derive(Debug, Clone)]
pub struct BibliographyQuery<'a> {
    pub affiliation: &'a str,
    pub years: RangeInclusive<i32>,
    pub first_author_only: bool,
    pub journals: Option<&'a JournalSet>,
    pub refereed_only: bool,
}

#[derive(Debug, Default)]
pub struct Corpus {
    pubs: Vec<Publication>,
    index: HashMap<String, usize>,
    /// Lowercased affiliations, parallel to `pubs[i].authors`.
    affiliations: Vec<Vec<String>>,
    by_year: BTreeMap<i32, Vec<usize>>,
    /// Sorted publication years of the distinct corpus papers citing each pub.
    citing_years: Vec<Vec<i32>>,
    stats: CorpusStats,
}

impl Corpus {
    pub fn from_publications(pubs: Vec<Publication>) -> Result<Self, CorpusError> {
        Self::build(pubs.into_iter().enumerate().map(|(i, p)| (i + 1, p)), &CorpusLimits::default())
    }

    pub fn from_reader<R: BufRead>(reader: R, limits: &CorpusLimits) -> Result<Self, CorpusError> {
        let mut pubs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io { path: "<reader>".into(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let publication: Publication = serde_json::from_str(&line)
                .map_err(|source| CorpusError::Malformed { line: i + 1, source })?;
            pubs.push((i + 1, publication));
        }
        Self::build(pubs, limits)
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, CorpusError> {
        Self::from_reader(text.as_bytes(), &CorpusLimits::default())
    }

    fn build<I>(pubs: I, limits: &CorpusLimits) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (usize, Publication)>,
    {
        let mut corpus = Corpus::default();
        for (line, p) in pubs {
            if p.pub_id.is_empty() {
                return Err(CorpusError::Invalid { line, reason: "empty pub_id".into() });
            }
            if p.authors.is_empty() {
                return Err(CorpusError::Invalid { line, reason: format!("{:?} has no authors", p.pub_id) });
            }
            if !limits.years.contains(&p.year) {
                return Err(CorpusError::Invalid {
                    line,
                    reason: format!("{:?} has year {} outside {:?}", p.pub_id, p.year, limits.years),
                });
            }
            if corpus.index.contains_key(&p.pub_id) {
                return Err(CorpusError::DuplicatePubId { line, pub_id: p.pub_id });
            }
            let idx = corpus.pubs.len();
            corpus.index.insert(p.pub_id.clone(), idx);
            corpus.affiliations.push(p.authors.iter().map(|a| a.aff.to_lowercase()).collect());
            corpus.by_year.entry(p.year).or_default().push(idx);
            corpus.pubs.push(p);
        }

        corpus.citing_years = vec![Vec::new(); corpus.pubs.len()];
        let mut seen = HashSet::new();
        for p in &corpus.pubs {
            seen.clear();
            for r in &p.references {
                corpus.stats.references += 1;
                match corpus.index.get(r.as_str()) {
                    Some(&target) => {
                        if seen.insert(target) {
                            corpus.citing_years[target].push(p.year);
                        }
                    }
                    None => corpus.stats.dangling_references += 1,
                }
            }
        }
        for years in &mut corpus.citing_years {
            years.sort_unstable();
        }
        corpus.stats.publications = corpus.pubs.len();
        Ok(corpus)
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.pubs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pubs.is_empty()
    }

    pub fn get(&self, pub_id: &str) -> Option<&Publication> {
        self.index.get(pub_id).map(|&i| &self.pubs[i])
    }

    pub fn contains(&self, pub_id: &str) -> bool {
        self.index.contains_key(pub_id)
    }

    pub fn publications(&self) -> &[Publication] {
        &self.pubs
    }

    pub fn journal_of(&self, pub_id: &str) -> Option<&str> {
        self.get(pub_id).map(|p| p.journal.as_str())
    }

    pub fn year_of(&self, pub_id: &str) -> Option<i32> {
        self.get(pub_id).map(|p| p.year)
    }

    /// Whether `pub_id` is a corpus member published in one of `journals`.
    pub fn in_journals(&self, pub_id: &str, journals: &JournalSet) -> bool {
        self.journal_of(pub_id).is_some_and(|j| journals.contains(j))
    }

    /// Publications matching an affiliation query. Matching is a
    /// case-insensitive substring test on the raw affiliation text; an empty
    /// affiliation matches everything.
    pub fn query_bibliography(&self, query: &BibliographyQuery<'_>) -> BTreeSet<String> {
        let needle = query.affiliation.to_lowercase();
        let mut out = BTreeSet::new();
        for (_, idxs) in self.by_year.range(query.years.clone()) {
            for &i in idxs {
                let p = &self.pubs[i];
                if query.refereed_only && !p.refereed {
                    continue;
                }
                if let Some(journals) = query.journals {
                    if !journals.contains(&p.journal) {
                        continue;
                    }
                }
                let affs = &self.affiliations[i];
                let hit = if query.first_author_only {
                    affs.first().is_some_and(|a| a.contains(&needle))
                } else {
                    affs.iter().any(|a| a.contains(&needle))
                };
                if hit {
                    out.insert(p.pub_id.clone());
                }
            }
        }
        out
    }

    /// Union of the references of `pubs`, restricted to corpus members in
    /// `journals` (all members when `None`).
    pub fn cited_set<'a, I>(&self, pubs: I, journals: Option<&JournalSet>) -> BTreeSet<String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out = BTreeSet::new();
        for id in pubs {
            let Some(p) = self.get(id) else { continue };
            for r in &p.references {
                let Some(target) = self.get(r) else { continue };
                if journals.is_none_or(|j| j.contains(&target.journal)) {
                    out.insert(target.pub_id.clone());
                }
            }
        }
        out
    }

    /// Number of publications per year within `journals`. Years with no
    /// publications are absent.
    pub fn year_totals(&self, journals: &JournalSet) -> BTreeMap<i32, usize> {
        let mut out = BTreeMap::new();
        for (&year, idxs) in &self.by_year {
            let n = idxs.iter().filter(|&&i| journals.contains(&self.pubs[i].journal)).count();
            if n > 0 {
                out.insert(year, n);
            }
        }
        out
    }

    /// Ids of journal-set publications with publication year in `years`,
    /// ordered by year then load order.
    pub fn slice(&self, journals: &JournalSet, years: RangeInclusive<i32>) -> Vec<&str> {
        self.by_year
            .range(years)
            .flat_map(|(_, idxs)| idxs.iter())
            .map(|&i| &self.pubs[i])
            .filter(|p| journals.contains(&p.journal))
            .map(|p| p.pub_id.as_str())
            .collect()
    }

    /// Number of distinct corpus publications with year ≤ `up_to_year` that
    /// cite `pub_id`.
    pub fn citations_received(&self, pub_id: &str, up_to_year: i32) -> Result<usize, CorpusError> {
        let &i = self.index.get(pub_id).ok_or_else(|| CorpusError::UnknownPubId(pub_id.to_string()))?;
        Ok(self.citing_years[i].partition_point(|&y| y <= up_to_year))
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path)
        .map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    Corpus::from_reader(std::io::BufReader::new(file), &CorpusLimits::default()).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io { path: path.display().to_string(), source },
        other => other,
    })
}

/// `corpus_year_totals` over a journal set.
pub fn corpus_year_totals(corpus: &Corpus, journals: &JournalSet) -> BTreeMap<i32, usize> {
    corpus.year_totals(journals)
}
