use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, SecondsFormat, TimeZone};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

use super::truth::{CohortTruth, EntityYearTruth, GroundTruth};
use super::CommunityModel;
use crate::clickstream::{RobotPolicy, ATTRIBUTION_OFFSET_SECS};
use crate::cohort::{CohortCategory, CohortConfig};
use crate::corpus::{Author, JournalSet, Publication};
use crate::indicators::DEFAULT_WINDOW_START;

const MAIN_JOURNALS: [(&str, &str); 6] =
    [("ApJ", "ApJ.."), ("ApJL", "ApJL."), ("ApJS", "ApJS."), ("AJ", "AJ..."), ("MNRAS", "MNRAS"), ("A&A", "A&A..")];
const OTHER_JOURNALS: [(&str, &str); 3] = [("PASP", "PASP."), ("Icarus", "Icar."), ("SoPh", "SoPh.")];
const BACKGROUND_AFFILIATIONS: [&str; 4] = [
    "Observatorio Central, Freedonia",
    "Royal Observatory, Ruritania",
    "Institute for Space Studies, Genovia",
    "Department of Physics, Elbonia",
];
const BROWSERS: [&str; 4] = [
    "Mozilla/5.0 (X11; Linux x86_64) Gecko/20100101 Firefox/38.0",
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_10_3) AppleWebKit/600.5.17 Safari/600.5.17",
    "Mozilla/5.0 (Windows NT 6.1; WOW64) AppleWebKit/537.36 Chrome/43.0.2357.81 Safari/537.36",
    "Mozilla/4.0 (compatible; MSIE 8.0; Windows NT 6.1; Trident/4.0)",
];
const ROBOT_AGENTS: [&str; 3] = [
    "Googlebot/2.1 (+http://www.google.com/bot.html)",
    "Mozilla/5.0 (compatible; bingbot/2.0; +http://www.bing.com/bingbot.htm)",
    "Mozilla/5.0 (compatible; Baiduspider/2.0; +http://www.baidu.com/search/spider.html)",
];
const ROBOT_PATTERNS: [&str; 4] = ["googlebot", "bingbot", "baiduspider", "crawler"];
const ROBOT_BLOCKS: [&str; 3] = ["66.249.64.0/19", "157.55.39.0/24", "2001:db8:bbbb::/48"];
/// Offsets timestamps are rendered in; attribution uses a fixed one.
const OFFSETS_MIN: [i32; 6] = [-300, -480, 0, 60, 330, 540];

/// Robot policy matching the robots the generator plants.
pub fn default_robot_policy() -> RobotPolicy {
    RobotPolicy::new(&ROBOT_PATTERNS, ROBOT_BLOCKS.iter().map(|b| b.parse().expect("valid block")).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Pub(u32),
    Unlisted(u32),
}

#[derive(Debug, Clone)]
struct Researcher {
    id: String,
    name: String,
    entity: usize,
    threshold: f64,
    ip: String,
    node: u32,
}

/// A researcher-authored publication and its authors, first author first.
#[derive(Debug, Clone)]
struct Paper {
    idx: u32,
    authors: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Casual {
    Amateur,
    Practitioner,
    Lay,
}

#[derive(Debug, Clone)]
struct CasualUser {
    id: String,
    entity: usize,
    class: Casual,
}

#[derive(Debug, Clone, Copy)]
struct CasualYear {
    user: u32,
    interactions: u32,
    downloads: u32,
}

/// Counts of what `write_logs` emitted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LogSummary {
    pub lines: u64,
    pub robot_lines: u64,
    pub unidentified_lines: u64,
}

/// A fully planned synthetic community: corpus, per-user activity and the
/// values a correct pipeline must recover.
#[derive(Debug, Clone)]
pub struct SyntheticCommunity {
    model: CommunityModel,
    pubs: Vec<Publication>,
    /// Main-journal publication indices sorted by year, with the first
    /// index past each year.
    main_sorted: Vec<u32>,
    main_end: BTreeMap<i32, usize>,
    other_sorted: Vec<u32>,
    other_end: BTreeMap<i32, usize>,
    main_by_year: BTreeMap<i32, Vec<u32>>,
    researchers: Vec<Researcher>,
    /// Researcher papers by year.
    papers: BTreeMap<i32, Vec<Paper>>,
    /// Download targets per year, per researcher; empty when inactive.
    downloads: BTreeMap<i32, Vec<Vec<Target>>>,
    casual: Vec<CasualUser>,
    casual_years: BTreeMap<i32, Vec<CasualYear>>,
    truth: GroundTruth,
}

fn is_main(journal: &str) -> bool {
    MAIN_JOURNALS.iter().any(|(j, _)| *j == journal)
}

fn count(ratio: f64, researchers: u32) -> u32 {
    (ratio * f64::from(researchers)).round() as u32
}

fn tld(host: &str) -> &str {
    host.rsplit('.').next().unwrap_or(host)
}

impl SyntheticCommunity {
    pub fn new(model: &CommunityModel) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        let mut community = SyntheticCommunity {
            model: model.clone(),
            pubs: Vec::new(),
            main_sorted: Vec::new(),
            main_end: BTreeMap::new(),
            other_sorted: Vec::new(),
            other_end: BTreeMap::new(),
            main_by_year: BTreeMap::new(),
            researchers: Vec::new(),
            papers: BTreeMap::new(),
            downloads: BTreeMap::new(),
            casual: Vec::new(),
            casual_years: BTreeMap::new(),
            truth: GroundTruth::default(),
        };
        community.plan_people(&mut rng);
        community.plan_publications(&mut rng);
        community.plan_downloads(&mut rng);
        community.plan_references(&mut rng);
        community.plan_casual(&mut rng);
        community.truth = community.compute_truth();
        community
    }

    pub fn model(&self) -> &CommunityModel {
        &self.model
    }

    pub fn ground_truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn publications(&self) -> &[Publication] {
        &self.pubs
    }

    fn plan_people(&mut self, rng: &mut ChaCha8Rng) {
        let m = &self.model;
        for (e, entity) in m.entities.iter().enumerate() {
            for _ in 0..entity.researchers {
                let k = self.researchers.len();
                self.researchers.push(Researcher {
                    id: format!("r{k:06}"),
                    name: format!("Researcher {k}"),
                    entity: e,
                    threshold: rng.random::<f64>(),
                    ip: format!("131.{}.{}.{}", rng.random_range(0..=255), rng.random_range(0..=255), rng.random_range(1..=254)),
                    node: rng.random_range(1..=400),
                });
            }
            for (class, ratio) in
                [(Casual::Amateur, m.amateur_ratio), (Casual::Practitioner, m.practitioner_ratio), (Casual::Lay, m.lay_ratio)]
            {
                let prefix = match class {
                    Casual::Amateur => 'a',
                    Casual::Practitioner => 'p',
                    Casual::Lay => 'l',
                };
                for _ in 0..count(ratio, entity.researchers) {
                    let k = self.casual.len();
                    self.casual.push(CasualUser { id: format!("{prefix}{k:07}"), entity: e, class });
                }
            }
        }
    }

    fn push_pub(&mut self, year: i32, journal: (&str, &str), authors: Vec<Author>, refereed: bool) -> u32 {
        let idx = self.pubs.len() as u32;
        self.pubs.push(Publication {
            pub_id: format!("{year}{}{idx:08}", journal.1),
            year,
            journal: journal.0.to_string(),
            refereed,
            authors,
            references: Vec::new(),
        });
        idx
    }

    fn plan_publications(&mut self, rng: &mut ChaCha8Rng) {
        let m = self.model.clone();
        for year in m.background_first_year..=m.last_year + 1 {
            let total = m.background_per_year + m.background_non_main_per_year;
            for i in 0..total {
                let journal = if i < m.background_per_year {
                    MAIN_JOURNALS[rng.random_range(0..MAIN_JOURNALS.len())]
                } else {
                    OTHER_JOURNALS[rng.random_range(0..OTHER_JOURNALS.len())]
                };
                let n_authors = rng.random_range(1..=4);
                let authors = (0..n_authors)
                    .map(|_| Author {
                        name: format!("Background {}", rng.random_range(0..20_000)),
                        aff: BACKGROUND_AFFILIATIONS[rng.random_range(0..BACKGROUND_AFFILIATIONS.len())].to_string(),
                    })
                    .collect();
                let refereed = rng.random_bool(0.9);
                self.push_pub(year, journal, authors, refereed);
            }
        }

        let poisson = (m.papers_per_researcher > 0.0).then(|| Poisson::new(m.papers_per_researcher).expect("valid rate"));
        for year in m.years() {
            let frac = m.active_fraction_in(year);
            for r in 0..self.researchers.len() {
                if self.researchers[r].threshold >= frac {
                    continue;
                }
                let n = poisson.as_ref().map_or(0, |p| p.sample(rng) as u32);
                for _ in 0..n {
                    let journal = if rng.random_bool(m.main_paper_share) {
                        MAIN_JOURNALS[rng.random_range(0..MAIN_JOURNALS.len())]
                    } else {
                        OTHER_JOURNALS[rng.random_range(0..OTHER_JOURNALS.len())]
                    };
                    let mut members = vec![r];
                    for _ in 0..rng.random_range(0..=3) {
                        let c = rng.random_range(0..self.researchers.len());
                        if !members.contains(&c) {
                            members.push(c);
                        }
                    }
                    let authors = members.iter().map(|&i| self.author(i)).collect();
                    let idx = self.push_pub(year, journal, authors, true);
                    self.papers.entry(year).or_default().push(Paper { idx, authors: members });
                }
            }
        }

        let mut order: Vec<u32> = (0..self.pubs.len() as u32).collect();
        order.sort_by_key(|&i| (self.pubs[i as usize].year, i));
        for i in order {
            let p = &self.pubs[i as usize];
            if is_main(&p.journal) {
                self.main_sorted.push(i);
                self.main_end.insert(p.year, self.main_sorted.len());
                self.main_by_year.entry(p.year).or_default().push(i);
            } else {
                self.other_sorted.push(i);
                self.other_end.insert(p.year, self.other_sorted.len());
            }
        }
    }

    fn author(&self, r: usize) -> Author {
        let res = &self.researchers[r];
        let e = &self.model.entities[res.entity];
        Author { name: res.name.clone(), aff: format!("{}, {}", e.institute, e.affiliation) }
    }

    /// Number of sorted entries with year <= `year`.
    fn end_of(ends: &BTreeMap<i32, usize>, year: i32) -> usize {
        ends.range(..=year).next_back().map_or(0, |(_, &n)| n)
    }

    fn recency_weights(&self, year: i32) -> Option<(Vec<i32>, WeightedIndex<f64>)> {
        let years: Vec<i32> = self.main_by_year.range(..=year).map(|(&y, _)| y).collect();
        let weights: Vec<f64> = years
            .iter()
            .map(|&y| (-(f64::from(year - y)) / self.model.recency_scale).exp() * self.main_by_year[&y].len() as f64)
            .collect();
        WeightedIndex::new(&weights).ok().map(|w| (years, w))
    }

    fn recent_main(&self, rng: &mut ChaCha8Rng, weights: &(Vec<i32>, WeightedIndex<f64>)) -> u32 {
        let pool = &self.main_by_year[&weights.0[weights.1.sample(rng)]];
        pool[rng.random_range(0..pool.len())]
    }

    fn researcher_download_count(&self, rng: &mut ChaCha8Rng) -> u64 {
        let m = &self.model;
        if rng.random_bool(m.tail_mass) {
            if m.lower > 1 && rng.random_bool(0.5) {
                return rng.random_range(1..m.lower);
            }
            return rng.random_range(m.upper + 1..=2 * m.upper);
        }
        let law = LogNormal::new(m.download_median().max(1.0).ln(), m.download_sigma).expect("valid law");
        for _ in 0..10_000 {
            let d = law.sample(rng).round();
            if d >= m.lower as f64 && d <= m.upper as f64 {
                return d as u64;
            }
        }
        rng.random_range(m.lower..=m.upper)
    }

    fn plan_downloads(&mut self, rng: &mut ChaCha8Rng) {
        let m = self.model.clone();
        let mut unlisted = 0u32;
        for year in m.years() {
            let frac = m.active_fraction_in(year);
            let weights = self.recency_weights(year);
            let other_end = Self::end_of(&self.other_end, year);
            let mut per_researcher = Vec::with_capacity(self.researchers.len());
            for r in 0..self.researchers.len() {
                if self.researchers[r].threshold >= frac {
                    per_researcher.push(Vec::new());
                    continue;
                }
                let d = self.researcher_download_count(rng);
                let mut targets = Vec::with_capacity(d as usize);
                for _ in 0..d {
                    let u = rng.random::<f64>();
                    let t = match &weights {
                        Some(w) if u >= m.unlisted_share => {
                            if u < m.unlisted_share + m.non_main_share && other_end > 0 {
                                Target::Pub(self.other_sorted[rng.random_range(0..other_end)])
                            } else {
                                Target::Pub(self.recent_main(rng, w))
                            }
                        }
                        _ => {
                            unlisted += 1;
                            Target::Unlisted(unlisted)
                        }
                    };
                    targets.push(t);
                }
                per_researcher.push(targets);
            }
            self.downloads.insert(year, per_researcher);
        }
    }

    fn in_window_main(&self, i: u32, year: i32) -> bool {
        let p = &self.pubs[i as usize];
        is_main(&p.journal) && p.year >= DEFAULT_WINDOW_START && p.year <= year
    }

    fn plan_references(&mut self, rng: &mut ChaCha8Rng) {
        let m = self.model.clone();
        let mut dangling = 0u32;
        let all_end: BTreeMap<i32, usize> = {
            let mut out = BTreeMap::new();
            let mut n = 0;
            for p in &self.pubs {
                *out.entry(p.year).or_insert(0) += 1;
            }
            for v in out.values_mut() {
                n += *v;
                *v = n;
            }
            out
        };
        let mut all_sorted: Vec<u32> = (0..self.pubs.len() as u32).collect();
        all_sorted.sort_by_key(|&i| (self.pubs[i as usize].year, i));

        let mut dangle = |rng: &mut ChaCha8Rng, refs: &mut Vec<String>| -> bool {
            if rng.random_bool(m.dangling_share) {
                dangling += 1;
                refs.push(format!("1900Dangl{dangling:08}"));
                true
            } else {
                false
            }
        };

        // Researcher papers: follow own downloads or draw from the window slice.
        for (&year, papers) in &self.papers.clone() {
            let lo = Self::end_of(&self.main_end, DEFAULT_WINDOW_START - 1);
            let hi = Self::end_of(&self.main_end, year);
            for p in papers {
                let (paper, author) = (p.idx, p.authors[0]);
                let pool: Vec<u32> = self.downloads[&year][author]
                    .iter()
                    .filter_map(|t| match *t {
                        Target::Pub(i) if self.in_window_main(i, year) => Some(i),
                        _ => None,
                    })
                    .collect::<BTreeSet<u32>>()
                    .into_iter()
                    .collect();
                let n = rng.random_range(m.references.0..=m.references.1);
                let mut refs: Vec<String> = Vec::new();
                let mut picked: BTreeSet<u32> = BTreeSet::new();
                for _ in 0..n {
                    if dangle(rng, &mut refs) {
                        continue;
                    }
                    let follow = rng.random_bool(m.citation_follows_download);
                    let choice = if follow && !pool.is_empty() {
                        pool[rng.random_range(0..pool.len())]
                    } else if hi > lo {
                        self.main_sorted[rng.random_range(lo..hi)]
                    } else {
                        continue;
                    };
                    if choice != paper && picked.insert(choice) {
                        refs.push(self.pubs[choice as usize].pub_id.clone());
                    }
                }
                self.pubs[paper as usize].references = refs;
            }
        }

        // Background papers cite anything published up to their own year.
        let researcher_papers: BTreeSet<u32> = self.papers.values().flatten().map(|p| p.idx).collect();
        for i in 0..self.pubs.len() as u32 {
            if researcher_papers.contains(&i) {
                continue;
            }
            let year = self.pubs[i as usize].year;
            let hi = Self::end_of(&all_end, year);
            let n = rng.random_range(m.references.0 / 2..=m.references.1 / 2);
            let mut refs = Vec::new();
            let mut picked = BTreeSet::new();
            for _ in 0..n {
                if dangle(rng, &mut refs) {
                    continue;
                }
                let choice = all_sorted[rng.random_range(0..hi)];
                if choice != i && picked.insert(choice) {
                    refs.push(self.pubs[choice as usize].pub_id.clone());
                }
            }
            self.pubs[i as usize].references = refs;
        }
    }

    fn plan_casual(&mut self, rng: &mut ChaCha8Rng) {
        let m = self.model.clone();
        let cap = (m.lower - 1).min(u64::from(u32::MAX)) as u32;
        for year in m.years() {
            let mut active = Vec::new();
            for (k, u) in self.casual.iter().enumerate() {
                let (p_active, max_interactions, p_download) = match u.class {
                    Casual::Amateur => (0.6, 60, 0.3),
                    Casual::Practitioner => (0.8, 90, 0.6),
                    Casual::Lay => (0.6, 3, 0.1),
                };
                if !rng.random_bool(p_active) {
                    continue;
                }
                let interactions = rng.random_range(1..=max_interactions);
                let downloads = (0..interactions).filter(|_| rng.random_bool(p_download)).count() as u32;
                active.push(CasualYear { user: k as u32, interactions, downloads: downloads.min(cap) });
            }
            self.casual_years.insert(year, active);
        }
    }

    fn compute_truth(&self) -> GroundTruth {
        let m = &self.model;
        let cohort = CohortConfig::new(m.lower, m.upper).expect("validated bounds");
        let main_ids: std::collections::HashSet<&str> =
            self.main_sorted.iter().map(|&i| self.pubs[i as usize].pub_id.as_str()).collect();
        let mut truth = GroundTruth {
            citation_follows_download: m.citation_follows_download,
            ..GroundTruth::default()
        };
        for year in m.years() {
            let downloads = &self.downloads[&year];
            let mut counts = CohortTruth { year, ..Default::default() };
            let mut rows: Vec<EntityYearTruth> = m
                .entities
                .iter()
                .map(|e| EntityYearTruth { entity: e.country.clone(), year, ..Default::default() })
                .collect();
            for (r, targets) in downloads.iter().enumerate() {
                if targets.is_empty() {
                    continue;
                }
                let row = &mut rows[self.researchers[r].entity];
                row.researchers.insert(self.researchers[r].id.clone());
                let category = cohort.category(targets.len() as u64);
                counts.add(category);
                if category != CohortCategory::Frequent {
                    continue;
                }
                row.frequent_users.insert(self.researchers[r].id.clone());
                for t in targets {
                    if let Target::Pub(i) = *t {
                        if self.in_window_main(i, year) {
                            row.downloaded.insert(self.pubs[i as usize].pub_id.clone());
                            row.download_events += 1;
                        }
                    }
                }
            }
            for cy in &self.casual_years[&year] {
                counts.add(cohort.category(u64::from(cy.downloads)));
            }

            let mut first_names: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); m.entities.len()];
            for paper in self.papers.get(&year).into_iter().flatten() {
                let p = &self.pubs[paper.idx as usize];
                if !is_main(&p.journal) {
                    continue;
                }
                let first = self.researchers[paper.authors[0]].entity;
                rows[first].first_author.insert(p.pub_id.clone());
                first_names[first].insert(&self.researchers[paper.authors[0]].name);
                for &a in &paper.authors {
                    rows[self.researchers[a].entity].any_author.insert(p.pub_id.clone());
                }
                for r in &p.references {
                    if main_ids.contains(r.as_str()) {
                        rows[first].cited.insert(r.clone());
                    }
                }
            }

            let t = f64::from(year - m.first_year);
            for (e, row) in rows.iter_mut().enumerate() {
                let model = &m.entities[e];
                row.first_authors = first_names[e].len();
                row.iau_members = row.researchers.len() as f64 * m.iau_per_researcher;
                row.gdp_per_capita = model.gdp_per_capita * model.gdp_growth.powf(t);
                row.population = model.population;
            }
            truth.entity_years.extend(rows);
            truth.cohorts.push(counts);
        }
        truth
    }

    /// Writes the corpus as JSON lines.
    pub fn write_corpus<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for p in &self.pubs {
            serde_json::to_writer(&mut *out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Writes the clickstream log; the same community always writes the
    /// same bytes.
    pub fn write_logs<W: Write>(&self, out: &mut W) -> io::Result<LogSummary> {
        let m = &self.model;
        let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
        rng.set_stream(1);
        let mut e = Emitter { out, line: String::with_capacity(256), summary: LogSummary::default() };
        e.raw(&format!("# synthetic clickstream, seed {}", m.seed))?;

        for year in m.years() {
            let weights = self.recency_weights(year);
            let random_main = |rng: &mut ChaCha8Rng| weights.as_ref().map(|w| self.recent_main(rng, w));

            for (r, targets) in self.downloads[&year].iter().enumerate() {
                if targets.is_empty() {
                    continue;
                }
                let res = &self.researchers[r];
                let home = format!("ws{}.{}", res.node, m.entities[res.entity].host);
                let browser = BROWSERS[r % BROWSERS.len()];
                let ratio = rng.random_range(m.read_download_ratio.0..=m.read_download_ratio.1);
                let views = ((ratio - 1.0) * targets.len() as f64).round() as u64;
                let origin = |rng: &mut ChaCha8Rng| {
                    if rng.random_bool(m.roaming_share) {
                        (
                            format!("dsl-{}.roam-isp.com", rng.random_range(0..10_000)),
                            format!("81.{}.{}.{}", rng.random_range(0..=255), rng.random_range(0..=255), rng.random_range(1..=254)),
                        )
                    } else {
                        (home.clone(), res.ip.clone())
                    }
                };
                for t in targets {
                    let pub_id = match *t {
                        Target::Pub(i) => self.pubs[i as usize].pub_id.clone(),
                        Target::Unlisted(k) => format!("{year}arXiv{k:08}"),
                    };
                    let (host, ip) = origin(&mut rng);
                    let channel = if rng.random_bool(m.search_engine_share) { "SEARCH_ENGINE" } else { "DIRECT" };
                    e.record(&mut rng, year, &res.id, &ip, &host, browser, "DOWNLOAD", &pub_id, channel)?;
                }
                for _ in 0..views {
                    let Some(i) = random_main(&mut rng) else { break };
                    let (host, ip) = origin(&mut rng);
                    e.record(&mut rng, year, &res.id, &ip, &host, browser, "ABSTRACT_VIEW", &self.pubs[i as usize].pub_id, "DIRECT")?;
                }
                for _ in 0..rng.random_range(0..=2) {
                    let (host, ip) = origin(&mut rng);
                    e.record(&mut rng, year, &res.id, &ip, &host, browser, "OTHER", "", "UNKNOWN")?;
                }
            }

            for cy in &self.casual_years[&year] {
                let u = &self.casual[cy.user as usize];
                let host = format!("pool-{}.isp.{}", cy.user % 5000, tld(&m.entities[u.entity].host));
                let ip = format!("24.{}.{}.{}", (cy.user >> 16) & 0xff, (cy.user >> 8) & 0xff, (cy.user & 0xff).max(1));
                let browser = BROWSERS[cy.user as usize % BROWSERS.len()];
                for k in 0..cy.interactions {
                    let Some(i) = random_main(&mut rng) else { break };
                    let action = if k < cy.downloads { "DOWNLOAD" } else { "ABSTRACT_VIEW" };
                    let channel = if rng.random_bool(0.7) { "SEARCH_ENGINE" } else { "DIRECT" };
                    e.record(&mut rng, year, &u.id, &ip, &host, browser, action, &self.pubs[i as usize].pub_id, channel)?;
                }
            }
            // Anonymous traffic: no user token, so it never reaches a cohort.
            for _ in 0..self.casual_years[&year].len() / 10 {
                let Some(i) = random_main(&mut rng) else { break };
                e.record(&mut rng, year, "UNIDENTIFIED", "24.200.1.1", "", BROWSERS[0], "ABSTRACT_VIEW", &self.pubs[i as usize].pub_id, "SEARCH_ENGINE")?;
                e.summary.unidentified_lines += 1;
            }

            let mut bot = 0usize;
            for entity in &m.entities {
                for _ in 0..entity.robots {
                    let by_agent = bot.is_multiple_of(2);
                    let (agent, ip, host) = if by_agent {
                        (ROBOT_AGENTS[bot / 2 % ROBOT_AGENTS.len()], format!("131.9.{}.{}", bot % 256, 7), format!("crawl{bot}.{}", entity.host))
                    } else {
                        match bot / 2 % 3 {
                            0 => (BROWSERS[0], format!("66.249.{}.{}", 64 + bot % 32, 1 + bot % 250), format!("crawl-{bot}.googlebot.com")),
                            1 => (BROWSERS[1], format!("157.55.39.{}", 1 + bot % 250), String::new()),
                            _ => (BROWSERS[2], format!("2001:db8:bbbb::{:x}", bot + 1), String::new()),
                        }
                    };
                    let id = format!("bot{bot:04}");
                    let n = rng.random_range(m.robot_downloads.0..=m.robot_downloads.1);
                    for _ in 0..n {
                        let Some(i) = random_main(&mut rng) else { break };
                        e.record(&mut rng, year, &id, &ip, &host, agent, "DOWNLOAD", &self.pubs[i as usize].pub_id, "DIRECT")?;
                        e.summary.robot_lines += 1;
                    }
                    e.record(&mut rng, year, &id, &ip, &host, agent, "OTHER", "", "UNKNOWN")?;
                    e.summary.robot_lines += 1;
                    bot += 1;
                }
            }
        }
        Ok(e.summary)
    }

    /// The journal set researcher activity is planted against.
    pub fn journals(&self) -> JournalSet {
        JournalSet::main_astronomy()
    }
}

struct Emitter<'w, W: Write> {
    out: &'w mut W,
    line: String,
    summary: LogSummary,
}

impl<W: Write> Emitter<'_, W> {
    fn raw(&mut self, text: &str) -> io::Result<()> {
        self.out.write_all(text.as_bytes())?;
        self.out.write_all(b"\n")
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        rng: &mut ChaCha8Rng,
        year: i32,
        user: &str,
        ip: &str,
        host: &str,
        agent: &str,
        action: &str,
        pub_id: &str,
        channel: &str,
    ) -> io::Result<()> {
        use std::fmt::Write as _;
        let ts = random_instant(rng, year);
        self.line.clear();
        let _ = writeln!(
            self.line,
            "{}\t{user}\t{ip}\t{host}\t{agent}\t{action}\t{pub_id}\t{channel}",
            ts.to_rfc3339_opts(SecondsFormat::Secs, false)
        );
        self.summary.lines += 1;
        self.out.write_all(self.line.as_bytes())
    }
}

/// A uniformly random second of `year` (attribution clock), rendered in a
/// randomly chosen offset.
fn random_instant(rng: &mut ChaCha8Rng, year: i32) -> DateTime<FixedOffset> {
    let est = FixedOffset::east_opt(ATTRIBUTION_OFFSET_SECS).expect("valid offset");
    let start = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year").and_hms_opt(0, 0, 0).expect("midnight");
    let end = NaiveDate::from_ymd_opt(year + 1, 1, 1).expect("valid year").and_hms_opt(0, 0, 0).expect("midnight");
    let secs = (end - start).num_seconds();
    let local = start + Duration::seconds(rng.random_range(0..secs));
    let instant = est.from_local_datetime(&local).single().expect("fixed offsets are unambiguous");
    let shown = FixedOffset::east_opt(OFFSETS_MIN[rng.random_range(0..OFFSETS_MIN.len())] * 60).expect("valid offset");
    instant.with_timezone(&shown)
}
