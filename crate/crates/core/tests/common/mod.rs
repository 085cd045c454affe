#![allow(dead_code)]

use usagebib::clickstream::RobotPolicy;
use usagebib::cohort::{AttributionContext, CohortConfig};
use usagebib::corpus::{Corpus, JournalSet};
use usagebib::indicators::IndicatorConfig;
use usagebib::ingest::ingest;
use usagebib::pipeline::{cohort_csv, sets_jsonl, Analysis};
use usagebib::synth::{model_entities, CommunityModel, SyntheticCommunity};

/// A three-year community, fast enough to run many times per test.
pub fn small_model(seed: u64) -> CommunityModel {
    let mut model = CommunityModel { seed, first_year: 2005, last_year: 2007, lay_ratio: 10.0, ..Default::default() };
    for e in &mut model.entities {
        e.researchers = e.researchers.div_ceil(4);
    }
    model.background_per_year = 400;
    model.background_non_main_per_year = 40;
    model
}

/// Two years and few casual users; for many-seed statistical protocols.
pub fn tiny_model(seed: u64) -> CommunityModel {
    let mut model = small_model(seed);
    model.last_year = 2006;
    model.lay_ratio = 2.0;
    model.background_per_year = 300;
    model
}

pub struct World {
    pub model: CommunityModel,
    pub corpus: Corpus,
    pub logs: String,
    pub community: SyntheticCommunity,
}

pub fn world(model: CommunityModel) -> World {
    let community = SyntheticCommunity::new(&model);
    let corpus = Corpus::from_publications(community.publications().to_vec()).unwrap();
    let mut logs = Vec::new();
    community.write_logs(&mut logs).unwrap();
    World { model, corpus, logs: String::from_utf8(logs).unwrap(), community }
}

/// Every report the pipeline writes, concatenated with file-name headers.
pub fn all_reports(corpus: &Corpus, model: &CommunityModel, logs: &str, policy: &RobotPolicy, parallel: bool) -> String {
    let journals = [JournalSet::main_astronomy()];
    let ctx = AttributionContext { corpus, journals: &journals, entity_map: None };
    let (acc, _) = ingest(logs.as_bytes(), policy, ctx, parallel).unwrap();
    let config = IndicatorConfig { cohort: CohortConfig::new(model.lower, model.upper).unwrap(), ..Default::default() };
    let entities = model_entities(model);
    let aux = usagebib::synth::GroundTruth::default().aux_table();
    let analysis = Analysis {
        corpus,
        acc: &acc,
        entities: &entities,
        years: model.years(),
        config: &config,
        entity_map: None,
        aux: Some(&aux),
        correlation: Default::default(),
        base_year: model.first_year,
    };
    let results = analysis.entity_years().unwrap();
    let mut out = String::new();
    out.push_str("== fig2_cohorts.csv\n");
    out.push_str(cohort_csv(&acc, model.years(), &config.cohort, &journals).as_str());
    out.push_str("== sets.jsonl\n");
    out.push_str(&sets_jsonl(&results));
    for (name, text) in analysis.reports(&results) {
        out.push_str(&format!("== {name}\n"));
        out.push_str(&text);
    }
    out
}
