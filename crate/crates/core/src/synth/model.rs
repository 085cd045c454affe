use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clickstream::{attribute_country, CountryCode};

/// One country-level entity of the synthetic community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityModel {
    /// ISO alpha-2 code; the entity id.
    pub country: String,
    /// Text every member's affiliation ends with; used for bibliography queries.
    pub affiliation: String,
    /// Institute name prefixed to member affiliations.
    pub institute: String,
    /// Domain that researcher hostnames live under.
    pub host: String,
    pub researchers: u32,
    #[serde(default = "default_robots")]
    pub robots: u32,
    /// GDP per capita (current USD) in the first model year.
    pub gdp_per_capita: f64,
    /// Yearly multiplicative GDP per capita growth.
    #[serde(default = "default_growth")]
    pub gdp_growth: f64,
    pub population: f64,
}

fn default_robots() -> u32 {
    2
}

fn default_growth() -> f64 {
    1.03
}

/// Parameters of the synthetic population and its behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunityModel {
    pub seed: u64,
    pub first_year: i32,
    pub last_year: i32,
    pub entities: Vec<EntityModel>,
    /// Serious amateurs per researcher.
    pub amateur_ratio: f64,
    /// Interested lay people per researcher.
    pub lay_ratio: f64,
    /// Practitioners per researcher; none in astronomy.
    pub practitioner_ratio: f64,
    /// Cohort bounds the researcher download law is truncated to.
    pub lower: u64,
    pub upper: u64,
    /// Median reads per month of an active reader.
    pub monthly_read_median: f64,
    /// Reads per download, drawn uniformly from this interval per user-year.
    pub read_download_ratio: (f64, f64),
    /// Log-space spread of researcher yearly downloads.
    pub download_sigma: f64,
    /// Probability that a researcher-year falls outside [lower, upper].
    pub tail_mass: f64,
    /// Share of researcher downloads going outside the main journals.
    pub non_main_share: f64,
    /// Share of researcher downloads of ids the corpus does not hold.
    pub unlisted_share: f64,
    /// Share of researcher records originating from commercial hosts.
    pub roaming_share: f64,
    /// Share of downloads arriving through a search engine.
    pub search_engine_share: f64,
    /// Fraction of researchers active in the first and last year.
    pub active_fraction: (f64, f64),
    /// IAU members per active researcher.
    pub iau_per_researcher: f64,
    /// First-author papers per active researcher per year.
    pub papers_per_researcher: f64,
    /// Share of researcher papers in the main journals.
    pub main_paper_share: f64,
    /// Reference list length bounds.
    pub references: (u32, u32),
    /// Probability that a reference is taken from the author's own downloads
    /// of that year.
    pub citation_follows_download: f64,
    /// Share of references pointing outside the corpus.
    pub dangling_share: f64,
    /// Main-journal background publications per year.
    pub background_per_year: u32,
    /// Non-main background publications per year.
    pub background_non_main_per_year: u32,
    pub background_first_year: i32,
    /// e-folding time in years of download interest in older papers.
    pub recency_scale: f64,
    /// Download events per robot per year.
    pub robot_downloads: (u32, u32),
}

impl Default for CommunityModel {
    fn default() -> Self {
        let entity = |country: &str, affiliation: &str, institute: &str, host: &str, researchers, gdp_pc, pop| EntityModel {
            country: country.into(),
            affiliation: affiliation.into(),
            institute: institute.into(),
            host: host.into(),
            researchers,
            robots: default_robots(),
            gdp_per_capita: gdp_pc,
            gdp_growth: default_growth(),
            population: pop,
        };
        Self {
            seed: 1,
            first_year: 2005,
            last_year: 2015,
            entities: vec![
                entity("US", "USA", "Center for Astrophysics", "cfa.harvard.edu", 400, 44_000.0, 296e6),
                entity("NL", "Netherlands", "Leiden Observatory", "strw.leidenuniv.nl", 250, 41_000.0, 16.3e6),
                entity("GB", "United Kingdom", "Institute of Astronomy", "ast.cam.ac.uk", 180, 42_000.0, 60.4e6),
                entity("AR", "Argentina", "Instituto Argentino de Radioastronomia", "iar.unlp.edu.ar", 110, 5_100.0, 38.9e6),
                entity("IN", "India", "Inter-University Centre for Astronomy", "iucaa.in", 60, 740.0, 1.14e9),
            ],
            amateur_ratio: 1.0,
            lay_ratio: 100.0,
            practitioner_ratio: 0.0,
            lower: 100,
            upper: 1000,
            monthly_read_median: 21.0,
            read_download_ratio: (2.0, 3.0),
            download_sigma: 0.8,
            tail_mass: 0.0,
            non_main_share: 0.1,
            unlisted_share: 0.01,
            roaming_share: 0.1,
            search_engine_share: 0.25,
            active_fraction: (0.75, 1.0),
            iau_per_researcher: 12.0,
            papers_per_researcher: 0.6,
            main_paper_share: 0.9,
            references: (15, 40),
            citation_follows_download: 0.5,
            dangling_share: 0.02,
            background_per_year: 1500,
            background_non_main_per_year: 150,
            background_first_year: 1980,
            recency_scale: 6.0,
            robot_downloads: (300, 900),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read model {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("model file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid model: {0}")]
    Invalid(String),
}

impl CommunityModel {
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let model: CommunityModel = toml::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    pub fn years(&self) -> RangeInclusive<i32> {
        self.first_year..=self.last_year
    }

    /// Median yearly downloads implied by the monthly read median and the
    /// middle of the read:download ratio.
    pub fn download_median(&self) -> f64 {
        let ratio = (self.read_download_ratio.0 + self.read_download_ratio.1) / 2.0;
        12.0 * self.monthly_read_median / ratio
    }

    /// Active researcher fraction in `year`, linear between the end points.
    pub fn active_fraction_in(&self, year: i32) -> f64 {
        let (a, b) = self.active_fraction;
        if self.last_year == self.first_year {
            return b;
        }
        let t = f64::from(year - self.first_year) / f64::from(self.last_year - self.first_year);
        a + (b - a) * t
    }

    pub fn total_researchers(&self) -> u64 {
        self.entities.iter().map(|e| u64::from(e.researchers)).sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Invalid(m));
        if self.first_year > self.last_year {
            return bad(format!("first_year {} after last_year {}", self.first_year, self.last_year));
        }
        if self.background_first_year > self.first_year {
            return bad("background_first_year must not be after first_year".into());
        }
        if !(1 <= self.lower && self.lower <= self.upper) {
            return bad(format!("bounds must satisfy 1 <= lower <= upper, got {}..{}", self.lower, self.upper));
        }
        for (name, p) in [
            ("tail_mass", self.tail_mass),
            ("non_main_share", self.non_main_share),
            ("unlisted_share", self.unlisted_share),
            ("roaming_share", self.roaming_share),
            ("search_engine_share", self.search_engine_share),
            ("active_fraction.0", self.active_fraction.0),
            ("active_fraction.1", self.active_fraction.1),
            ("main_paper_share", self.main_paper_share),
            ("citation_follows_download", self.citation_follows_download),
            ("dangling_share", self.dangling_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.non_main_share + self.unlisted_share > 1.0 {
            return bad("non_main_share + unlisted_share exceeds 1".into());
        }
        // Minority hosts must stay a minority so the home country wins.
        if self.roaming_share >= 0.5 {
            return bad("roaming_share must be below 0.5".into());
        }
        for (name, v) in [
            ("amateur_ratio", self.amateur_ratio),
            ("lay_ratio", self.lay_ratio),
            ("practitioner_ratio", self.practitioner_ratio),
            ("monthly_read_median", self.monthly_read_median),
            ("download_sigma", self.download_sigma),
            ("iau_per_researcher", self.iau_per_researcher),
            ("papers_per_researcher", self.papers_per_researcher),
            ("recency_scale", self.recency_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        let (r0, r1) = self.read_download_ratio;
        if !(1.0 <= r0 && r0 <= r1 && r1.is_finite()) {
            return bad("read_download_ratio must satisfy 1 <= lo <= hi".into());
        }
        if self.references.0 > self.references.1 || self.robot_downloads.0 > self.robot_downloads.1 {
            return bad("range bounds reversed".into());
        }
        if self.recency_scale == 0.0 {
            return bad("recency_scale must be positive".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.entities {
            let code: CountryCode =
                e.country.parse().map_err(|_| ModelError::Invalid(format!("bad country code {:?}", e.country)))?;
            if !code.is_known() || !seen.insert(code) {
                return bad(format!("entity country {:?} unknown or repeated", e.country));
            }
            if e.affiliation.is_empty() || e.host.is_empty() || e.host.contains(char::is_whitespace) {
                return bad(format!("entity {} needs an affiliation and a host", e.country));
            }
            if attribute_country(&e.host, "") != code {
                return bad(format!("host {:?} does not resolve to country {}", e.host, e.country));
            }
            if !(e.gdp_per_capita > 0.0 && e.population > 0.0 && e.gdp_growth > 0.0) {
                return bad(format!("entity {} economic values must be positive", e.country));
            }
        }
        // An entity's affiliation text must not match another's affiliations.
        for a in &self.entities {
            for b in &self.entities {
                let other = format!("{}, {}", b.institute, b.affiliation).to_lowercase();
                if a.country != b.country && other.contains(&a.affiliation.to_lowercase()) {
                    return bad(format!("affiliation {:?} also matches entity {}", a.affiliation, b.country));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let m = CommunityModel::default();
        m.validate().unwrap();
        assert_eq!(m.total_researchers(), 1000);
        assert_eq!(CommunityModel::from_toml(&m.to_toml()).unwrap(), m);
        assert!((m.download_median() - 100.8).abs() < 1e-9);
        assert_eq!(m.active_fraction_in(2005), 0.75);
        assert_eq!(m.active_fraction_in(2015), 1.0);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let m = CommunityModel::from_toml("seed = 9\nlast_year = 2007\n").unwrap();
        assert_eq!(m.seed, 9);
        assert_eq!(m.years(), 2005..=2007);
        assert_eq!(m.entities.len(), 5);
    }

    #[test]
    fn rejects_bad_models() {
        for text in [
            "first_year = 2010\nlast_year = 2009\n",
            "tail_mass = 1.5\n",
            "lower = 0\n",
            "roaming_share = 0.6\n",
            "bogus = 1\n",
            "[[entities]]\ncountry = \"XX\"\naffiliation = \"a\"\ninstitute = \"i\"\nhost = \"h.xx\"\nresearchers = 1\ngdp_per_capita = 1.0\npopulation = 1.0\n",
        ] {
            assert!(CommunityModel::from_toml(text).is_err(), "{text}");
        }
    }
}
