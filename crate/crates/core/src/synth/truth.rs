use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cohort::{CohortCategory, CohortCounts};
use crate::indicators::{pearson_r, AuxKind, AuxTable, IndicatorError};

/// Planted values for one entity and year.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityYearTruth {
    pub entity: String,
    pub year: i32,
    /// Active researchers, whatever their download count.
    pub researchers: BTreeSet<String>,
    /// Researchers whose planted download count lies inside the bounds.
    pub frequent_users: BTreeSet<String>,
    pub first_authors: usize,
    pub downloaded: BTreeSet<String>,
    pub download_events: u64,
    pub first_author: BTreeSet<String>,
    pub any_author: BTreeSet<String>,
    pub cited: BTreeSet<String>,
    pub iau_members: f64,
    pub gdp_per_capita: f64,
    pub population: f64,
}

/// Planted cohort sizes for one year.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortTruth {
    pub year: i32,
    pub abstract_only: usize,
    pub infrequent: usize,
    pub frequent: usize,
    pub remainder: usize,
}

impl CohortTruth {
    pub fn add(&mut self, category: CohortCategory) {
        match category {
            CohortCategory::AbstractOnly => self.abstract_only += 1,
            CohortCategory::Infrequent => self.infrequent += 1,
            CohortCategory::Frequent => self.frequent += 1,
            CohortCategory::Remainder => self.remainder += 1,
        }
    }

    pub fn matches(&self, counts: &CohortCounts) -> bool {
        CohortCategory::ALL.iter().all(|&c| self.get(c) == counts.get(c))
    }

    pub fn get(&self, category: CohortCategory) -> usize {
        match category {
            CohortCategory::AbstractOnly => self.abstract_only,
            CohortCategory::Infrequent => self.infrequent,
            CohortCategory::Frequent => self.frequent,
            CohortCategory::Remainder => self.remainder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Model { citation_follows_download: f64 },
    EntityYear(EntityYearTruth),
    Cohort(CohortTruth),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub citation_follows_download: f64,
    /// Ordered by year, then entity in model order.
    pub entity_years: Vec<EntityYearTruth>,
    pub cohorts: Vec<CohortTruth>,
}

impl GroundTruth {
    pub fn is_empty(&self) -> bool {
        self.entity_years.iter().all(|r| r.researchers.is_empty()) && self.cohorts.iter().all(|c| *c == CohortTruth { year: c.year, ..Default::default() })
    }

    pub fn get(&self, entity: &str, year: i32) -> Option<&EntityYearTruth> {
        self.entity_years.iter().find(|r| r.entity == entity && r.year == year)
    }

    /// Pearson r between frequent users and first authors over all
    /// entity-years.
    pub fn frequent_vs_first_author_r(&self) -> Result<f64, IndicatorError> {
        let xs: Vec<f64> = self.entity_years.iter().map(|r| r.frequent_users.len() as f64).collect();
        let ys: Vec<f64> = self.entity_years.iter().map(|r| r.first_authors as f64).collect();
        pearson_r(&xs, &ys)
    }

    /// IAU membership and economic series as auxiliary input.
    pub fn aux_table(&self) -> AuxTable {
        let mut table = AuxTable::default();
        for r in &self.entity_years {
            table.insert(&r.entity, AuxKind::IauMembers, r.year, r.iau_members);
            table.insert(&r.entity, AuxKind::GdpPerCapita, r.year, r.gdp_per_capita);
            table.insert(&r.entity, AuxKind::Population, r.year, r.population);
            table.insert(&r.entity, AuxKind::GdpTotal, r.year, r.gdp_per_capita * r.population);
        }
        table
    }

    /// JSON lines: one model line, then one line per entity-year and per
    /// cohort year.
    pub fn write_jsonl<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut line = |l: &Line| -> io::Result<()> {
            serde_json::to_writer(&mut *out, l)?;
            out.write_all(b"\n")
        };
        line(&Line::Model { citation_follows_download: self.citation_follows_download })?;
        for r in &self.entity_years {
            line(&Line::EntityYear(r.clone()))?;
        }
        for c in &self.cohorts {
            line(&Line::Cohort(*c))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut truth = GroundTruth::default();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Line>(&line)? {
                Line::Model { citation_follows_download } => truth.citation_follows_download = citation_follows_download,
                Line::EntityYear(r) => truth.entity_years.push(r),
                Line::Cohort(c) => truth.cohorts.push(c),
            }
        }
        Ok(truth)
    }
}
