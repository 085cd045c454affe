//! From ingested statistics and a corpus to the per-figure report files.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::clickstream::Channel;
use crate::cohort::{cohort_counts, Accumulator, CohortCategory, CohortConfig, EntityMap};
use crate::corpus::{Corpus, JournalSet};
use crate::indicators::{
    build_entity_year_sets, citation_events, events_from_counts, fit_gdp_power_law, indicator_report,
    normalize_to_base_year, obsolescence_curve, stats_by_year, AuxKind, AuxTable, CorrelationKind, EconomicPoint,
    Entity, EntityYearSets, IndicatorConfig, IndicatorError, IndicatorReport, ObsolescenceCurve,
};
use crate::report::{fmt_float, fmt_opt, Csv};

/// Label used in cohort reports for the unrestricted download count.
pub const ALL_DOWNLOADS: &str = "all";

pub struct Analysis<'a> {
    pub corpus: &'a Corpus,
    pub acc: &'a Accumulator,
    pub entities: &'a [Entity],
    pub years: RangeInclusive<i32>,
    pub config: &'a IndicatorConfig,
    pub entity_map: Option<&'a EntityMap>,
    pub aux: Option<&'a AuxTable>,
    pub correlation: CorrelationKind,
    pub base_year: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityYearResult {
    pub sets: EntityYearSets,
    pub report: IndicatorReport,
}

/// Cohort sizes per year, once without restriction and once per journal set.
pub fn cohort_csv(acc: &Accumulator, years: RangeInclusive<i32>, config: &CohortConfig, sets: &[JournalSet]) -> Csv {
    let mut csv = Csv::new(&["year", "category", "count", "journal_set"]);
    let by_year = stats_by_year(acc);
    let restrictions: Vec<Option<&str>> =
        std::iter::once(None).chain(sets.iter().map(|s| Some(s.name()))).collect();
    for (&year, stats) in by_year.range(years) {
        for &restriction in &restrictions {
            let counts = cohort_counts(stats.iter().copied(), year, config, restriction);
            for category in CohortCategory::ALL {
                csv.values(&[&year, &category, &counts.get(category), &restriction.unwrap_or(ALL_DOWNLOADS)]);
            }
        }
    }
    csv
}

impl Analysis<'_> {
    /// Sets and reports for every entity and year, entity-major.
    pub fn entity_years(&self) -> Result<Vec<EntityYearResult>, IndicatorError> {
        let by_year = stats_by_year(self.acc);
        let jobs: Vec<(&Entity, i32)> =
            self.entities.iter().flat_map(|e| self.years.clone().map(move |y| (e, y))).collect();
        jobs.par_iter()
            .map(|&(entity, year)| {
                let stats = by_year.get(&year).into_iter().flatten().copied();
                let sets = build_entity_year_sets(self.corpus, stats, entity, year, self.config, self.entity_map)?;
                let report = indicator_report(self.corpus, &sets, self.config)?;
                Ok(EntityYearResult { sets, report })
            })
            .collect()
    }

    fn aux_value(&self, entity: &str, kind: AuxKind, year: i32) -> Option<f64> {
        self.aux.and_then(|a| a.value(entity, kind, year))
    }

    /// All per-figure CSVs as (file name, contents), in a fixed order.
    pub fn reports(&self, results: &[EntityYearResult]) -> Vec<(String, String)> {
        let journals = &self.config.journals;
        let year_totals = self.corpus.year_totals(journals);
        let mut files = Vec::new();

        files.push(("fig3_channels.csv".to_string(), self.channel_csv(&year_totals).into_string()));

        let mut fig4 = Csv::new(&["entity", "year", "frequent_users", "first_authors"]);
        let mut fig5 = Csv::new(&["entity", "year", "frequent_users", "iau_members"]);
        let mut fig6 = Csv::new(&[
            "entity",
            "year",
            "downloads_by_frequent_users",
            "unique_publications_downloaded",
            "publications_any_author",
        ]);
        let mut fig8 = Csv::new(&["entity", "year", "overlap", "random_baseline"]);
        let mut fig9 = Csv::new(&["entity", "year", "first_author_publications", "h_index_next_year"]);
        let mut fig10 = Csv::new(&["entity", "year", "overlap", "random_baseline", "sample_size", "samples"]);
        let mut table = Csv::new(&[
            "entity",
            "year",
            "frequent_users",
            "first_authors",
            "downloaded",
            "download_events",
            "first_author_pubs",
            "any_author_pubs",
            "cited",
            "overlap_denominator",
            "overlap",
            "random_baseline",
            "h_index_next_year",
        ]);
        for r in results.iter().map(|r| &r.report) {
            fig4.values(&[&r.entity, &r.year, &r.frequent_users, &r.first_authors]);
            let iau = fmt_opt(self.aux_value(&r.entity, AuxKind::IauMembers, r.year));
            fig5.values(&[&r.entity, &r.year, &r.frequent_users, &iau]);
            fig6.values(&[&r.entity, &r.year, &r.download_events, &r.downloaded, &r.any_author_pubs]);
            let (overlap, baseline) = (fmt_opt(r.overlap), fmt_opt(r.random_baseline));
            fig8.values(&[&r.entity, &r.year, &overlap, &baseline]);
            fig9.values(&[&r.entity, &r.year, &r.first_author_pubs, &r.h_index_next_year]);
            fig10.values(&[&r.entity, &r.year, &overlap, &baseline, &r.downloaded, &self.config.n_samples]);
            table.values(&[
                &r.entity,
                &r.year,
                &r.frequent_users,
                &r.first_authors,
                &r.downloaded,
                &r.download_events,
                &r.first_author_pubs,
                &r.any_author_pubs,
                &r.cited,
                &self.config.denominator,
                &overlap,
                &baseline,
                &r.h_index_next_year,
            ]);
        }
        files.push(("fig4_first_authors.csv".into(), fig4.into_string()));
        files.push(("fig5_iau_members.csv".into(), fig5.into_string()));
        files.push(("fig6_downloads_publications.csv".into(), fig6.into_string()));
        files.push(("fig7_obsolescence.csv".into(), self.obsolescence_csv(results, &year_totals).into_string()));
        files.push(("fig8_overlap.csv".into(), fig8.into_string()));
        files.push(("fig9_h_index.csv".into(), fig9.into_string()));
        files.push(("fig10_random_baseline.csv".into(), fig10.into_string()));
        files.push(("fig11_gdp_growth.csv".into(), self.gdp_growth_csv(results).into_string()));
        files.push(("correlations.csv".into(), self.correlation_csv(results).into_string()));
        files.push(("power_law.csv".into(), self.power_law_csv(results).into_string()));
        files.push(("indicators.csv".into(), table.into_string()));
        files
    }

    fn curve_rows(csv: &mut Csv, prefix: &[String], window: RangeInclusive<i32>, curves: &[&ObsolescenceCurve]) {
        for y in window {
            let mut row: Vec<String> = prefix.to_vec();
            row.push(y.to_string());
            for c in curves {
                row.push(fmt_float(c.unique_fraction_at(y)));
            }
            for c in curves {
                row.push(fmt_float(c.normalized_count_at(y)));
            }
            csv.row(&row);
        }
    }

    /// Download obsolescence per access channel, with the citation curve of
    /// the year's whole journal-set output alongside.
    fn channel_csv(&self, year_totals: &BTreeMap<i32, usize>) -> Csv {
        let journals = &self.config.journals;
        let mut csv = Csv::new(&["series", "analysis_year", "year", "unique_fraction", "norm_count"]);
        for year in self.years.clone() {
            let window = self.config.window_start..=year;
            let mut series: Vec<(String, ObsolescenceCurve)> = Vec::new();
            for channel in Channel::ALL {
                let counts = self.acc.channel_downloads(year, channel);
                let events =
                    events_from_counts(self.corpus, counts.into_iter().flatten().map(|(k, &v)| (k.as_str(), v)), journals);
                series.push((channel.to_string(), obsolescence_curve(events, year_totals, window.clone())));
            }
            let citing = self.corpus.slice(journals, year..=year);
            let events = citation_events(self.corpus, citing, journals);
            series.push(("CITATIONS".to_string(), obsolescence_curve(events, year_totals, window.clone())));
            for (name, curve) in &series {
                Self::curve_rows(&mut csv, &[name.clone(), year.to_string()], window.clone(), &[curve]);
            }
        }
        csv
    }

    fn obsolescence_csv(&self, results: &[EntityYearResult], year_totals: &BTreeMap<i32, usize>) -> Csv {
        let journals = &self.config.journals;
        let mut csv = Csv::new(&[
            "entity",
            "analysis_year",
            "year",
            "unique_fraction_downloads",
            "unique_fraction_citations",
            "norm_count_downloads",
            "norm_count_citations",
        ]);
        for r in results {
            let s = &r.sets;
            let window = self.config.window_start..=s.year;
            let downloads = events_from_counts(
                self.corpus,
                s.download_events.iter().map(|(k, &v)| (k.as_str(), v)),
                journals,
            );
            let citations = citation_events(self.corpus, s.first_author.iter().map(String::as_str), journals);
            let d = obsolescence_curve(downloads, year_totals, window.clone());
            let c = obsolescence_curve(citations, year_totals, window.clone());
            Self::curve_rows(&mut csv, &[s.entity.clone(), s.year.to_string()], window, &[&d, &c]);
        }
        csv
    }

    fn gdp_growth_csv(&self, results: &[EntityYearResult]) -> Csv {
        let mut csv = Csv::new(&[
            "entity",
            "year",
            "downloads_by_frequent_users",
            "downloads_normalized",
            "gdp_per_capita",
            "gdp_per_capita_normalized",
        ]);
        for entity in self.entities {
            let rows: Vec<&IndicatorReport> = results.iter().map(|r| &r.report).filter(|r| r.entity == entity.id).collect();
            let downloads: BTreeMap<i32, f64> = rows.iter().map(|r| (r.year, r.download_events as f64)).collect();
            let gdp: BTreeMap<i32, f64> = self
                .years
                .clone()
                .filter_map(|y| Some((y, self.aux_value(&entity.id, AuxKind::GdpPerCapita, y)?)))
                .collect();
            let dn = normalize_to_base_year(&downloads, self.base_year).ok();
            let gn = normalize_to_base_year(&gdp, self.base_year).ok();
            for r in rows {
                let at = |m: &Option<BTreeMap<i32, f64>>| m.as_ref().and_then(|m| m.get(&r.year).copied());
                csv.values(&[
                    &r.entity,
                    &r.year,
                    &r.download_events,
                    &fmt_opt(at(&dn)),
                    &fmt_opt(gdp.get(&r.year).copied()),
                    &fmt_opt(at(&gn)),
                ]);
            }
        }
        csv
    }

    fn correlation_csv(&self, results: &[EntityYearResult]) -> Csv {
        type Pick = fn(&Analysis<'_>, &IndicatorReport) -> Option<f64>;
        let pairs: [(&str, Pick, &str, Pick); 4] = [
            ("frequent_users", |_, r| Some(r.frequent_users as f64), "first_authors", |_, r| Some(r.first_authors as f64)),
            ("frequent_users", |_, r| Some(r.frequent_users as f64), "iau_members", |a, r| {
                a.aux_value(&r.entity, AuxKind::IauMembers, r.year)
            }),
            ("downloads_by_frequent_users", |_, r| Some(r.download_events as f64), "publications_any_author", |_, r| {
                Some(r.any_author_pubs as f64)
            }),
            ("unique_publications_downloaded", |_, r| Some(r.downloaded as f64), "publications_any_author", |_, r| {
                Some(r.any_author_pubs as f64)
            }),
        ];
        let mut csv = Csv::new(&["scope", "x", "y", "kind", "n", "r"]);
        let scopes: Vec<(&str, Vec<&IndicatorReport>)> = std::iter::once(("all", results.iter().map(|r| &r.report).collect()))
            .chain(self.entities.iter().map(|e| {
                (e.id.as_str(), results.iter().map(|r| &r.report).filter(|r| r.entity == e.id).collect())
            }))
            .collect();
        for (scope, rows) in &scopes {
            for (xn, xf, yn, yf) in &pairs {
                let (xs, ys): (Vec<f64>, Vec<f64>) =
                    rows.iter().filter_map(|r| Some((xf(self, r)?, yf(self, r)?))).unzip();
                let r = self.correlation.compute(&xs, &ys).ok();
                csv.values(&[scope, xn, yn, &self.correlation, &xs.len(), &fmt_opt(r)]);
            }
        }
        csv
    }

    fn power_law_csv(&self, results: &[EntityYearResult]) -> Csv {
        let mut csv = Csv::new(&["year", "entities", "intercept", "gdp_exponent", "population_exponent", "rms_residual"]);
        let years: BTreeSet<i32> = results.iter().map(|r| r.report.year).collect();
        for year in years {
            let points: Vec<EconomicPoint> = results
                .iter()
                .map(|r| &r.report)
                .filter(|r| r.year == year && r.download_events > 0)
                .filter_map(|r| {
                    Some(EconomicPoint {
                        downloads: r.download_events as f64,
                        gdp: self.aux_value(&r.entity, AuxKind::GdpTotal, year)?,
                        population: self.aux_value(&r.entity, AuxKind::Population, year)?,
                    })
                })
                .collect();
            match fit_gdp_power_law(&points) {
                Ok(f) => csv.values(&[
                    &year,
                    &f.points,
                    &fmt_float(f.intercept),
                    &fmt_float(f.gdp_exponent),
                    &fmt_float(f.population_exponent),
                    &fmt_float(f.rms_residual),
                ]),
                Err(_) => csv.values(&[&year, &points.len(), &"", &"", &"", &""]),
            }
        }
        csv
    }
}

/// One JSON object per entity-year set, in result order.
pub fn sets_jsonl(results: &[EntityYearResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(&r.sets).expect("sets serialize"));
        out.push('\n');
    }
    out
}
