mod common;

use std::collections::BTreeSet;

use usagebib::cohort::{AttributionContext, CohortConfig};
use usagebib::corpus::{Corpus, JournalSet};
use usagebib::indicators::{IndicatorConfig, OverlapDenominator};
use usagebib::ingest::ingest;
use usagebib::pipeline::{cohort_csv, Analysis};
use usagebib::synth::{
    default_robot_policy, generate_corpus, model_entities, CommunityModel, GroundTruth, SyntheticCommunity,
};
use usagebib::verify::{first_mismatch, verify};

#[test]
fn tampered_truth_names_first_mismatch() {
    let model = common::small_model(2);
    let report = verify(&model, &IndicatorConfig::default()).unwrap();
    assert!(report.passed(), "{:?}", report.mismatch);
    let world = common::world(model);
    let mut truth: GroundTruth = world.community.ground_truth().clone();
    assert_eq!(first_mismatch(&truth, &report.results, &[]).map(|m| m.quantity), Some("cohort:ABSTRACT_ONLY".into()));

    let target = &mut truth.entity_years[7];
    let (entity, year) = (target.entity.clone(), target.year);
    let gone = target.cited.pop_first().unwrap();
    target.first_authors += 1;
    let m = first_mismatch(&truth, &report.results, &[]).unwrap();
    assert_eq!((m.entity.as_str(), m.year, m.quantity.as_str()), (entity.as_str(), year, "first_authors"));

    truth.entity_years[7].first_authors -= 1;
    let m = first_mismatch(&truth, &report.results, &[]).unwrap();
    assert_eq!(m.quantity, "cited");
    assert!(m.found.contains(&gone), "{m}");
    assert!(m.to_string().starts_with(&format!("mismatch at ({entity}, {year}, cited)")));
}

#[test]
fn corpus_round_trip_matches_planned_publications() {
    let model = common::small_model(6);
    let mut text = Vec::new();
    generate_corpus(&model, &mut text).unwrap();
    let corpus = Corpus::parse_jsonl(std::str::from_utf8(&text).unwrap()).unwrap();
    let world = common::world(model);
    assert_eq!(corpus.publications(), world.corpus.publications());
}

#[test]
fn parallel_jobs_match_single_entity_runs() {
    let model = common::small_model(8);
    let world = common::world(model.clone());
    let journals = [JournalSet::main_astronomy()];
    let ctx = AttributionContext { corpus: &world.corpus, journals: &journals, entity_map: None };
    let (acc, _) = ingest(world.logs.as_bytes(), &default_robot_policy(), ctx, true).unwrap();
    let config = IndicatorConfig { seed: 17, ..Default::default() };
    let entities = model_entities(&model);
    let analysis = |entities| Analysis {
        corpus: &world.corpus,
        acc: &acc,
        entities,
        years: model.years(),
        config: &config,
        entity_map: None,
        aux: None,
        correlation: Default::default(),
        base_year: 2005,
    };
    let all = analysis(&entities).entity_years().unwrap();
    let one_by_one: Vec<_> =
        entities.chunks(1).flat_map(|e| analysis(e).entity_years().unwrap()).collect();
    assert_eq!(all, one_by_one);
    for r in &all {
        let t = world.community.ground_truth().get(&r.report.entity, r.report.year).unwrap();
        assert_eq!(r.sets.downloaded, t.downloaded);
        assert_eq!(r.report.download_events, t.download_events);
    }
}

fn overlap_and_baseline(model: &CommunityModel) -> (f64, f64) {
    let r = verify(model, &IndicatorConfig { seed: model.seed, ..Default::default() }).unwrap();
    assert!(r.passed(), "{:?}", r.mismatch);
    (r.mean_overlap.unwrap(), r.mean_baseline.unwrap())
}

#[test]
fn overlap_tracks_citation_following_over_30_seeds() {
    let runs: Vec<[(f64, f64); 3]> = (0..30u64)
        .map(|seed| {
            [0.0, 0.5, 1.0].map(|follow| {
                let model = CommunityModel { citation_follows_download: follow, ..common::tiny_model(100 + seed) };
                overlap_and_baseline(&model)
            })
        })
        .collect();
    let n = runs.len() as f64;
    // Without following, overlap and baseline agree within 3 standard errors.
    let diffs: Vec<f64> = runs.iter().map(|r| r[0].0 - r[0].1).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * sd / n.sqrt(), "mean difference {mean}, sd {sd}");
    for r in &runs {
        assert!(r[0].0 < r[1].0 && r[1].0 < r[2].0, "{r:?}");
        assert!(r[1].0 > r[1].1);
    }
    let full = runs.iter().map(|r| r[2].0).sum::<f64>() / n;
    assert!(full > 0.95, "{full}");
}

#[test]
fn default_model_user_classes_span_two_orders_of_magnitude() {
    let community = SyntheticCommunity::new(&CommunityModel::default());
    for c in &community.ground_truth().cohorts {
        let total = c.abstract_only + c.infrequent + c.frequent + c.remainder;
        let downloaders = c.infrequent + c.frequent + c.remainder;
        let ratio = total as f64 / c.frequent as f64;
        assert!((50.0..=500.0).contains(&ratio), "{}: {ratio}", c.year);
        assert!(total > 2 * downloaders && downloaders > 5 * c.frequent, "{c:?}");
    }
}

#[test]
fn generation_is_reproducible() {
    let model = common::tiny_model(21);
    let a = common::world(model.clone());
    let b = common::world(model.clone());
    assert_eq!(a.logs, b.logs);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    generate_corpus(&model, &mut ca).unwrap();
    generate_corpus(&model, &mut cb).unwrap();
    assert_eq!(ca, cb);
    let c = common::world(CommunityModel { seed: 22, ..model });
    assert_ne!(a.logs, c.logs);
}

#[test]
fn denominators_order_as_set_sizes_imply() {
    let model = common::small_model(14);
    let mut overlaps = Vec::new();
    for d in [OverlapDenominator::Cited, OverlapDenominator::Downloaded, OverlapDenominator::Union] {
        let r = verify(&model, &IndicatorConfig { denominator: d, ..Default::default() }).unwrap();
        overlaps.push(r.results.iter().map(|r| r.report.overlap.unwrap()).collect::<Vec<f64>>());
    }
    // |R ∪ C| is at least max(|R|, |C|).
    for ((cited, downloaded), union) in overlaps[0].iter().zip(&overlaps[1]).zip(&overlaps[2]) {
        assert!(union <= cited && union <= downloaded);
    }
}

#[test]
fn cohort_report_covers_each_journal_set() {
    let model = common::small_model(3);
    let world = common::world(model.clone());
    let other = JournalSet::new("letters", ["ApJL"]).unwrap();
    let journals = [JournalSet::main_astronomy(), other];
    let ctx = AttributionContext { corpus: &world.corpus, journals: &journals, entity_map: None };
    let (acc, _) = ingest(world.logs.as_bytes(), &default_robot_policy(), ctx, true).unwrap();
    let csv = cohort_csv(&acc, model.years(), &CohortConfig::default(), &journals);
    assert_eq!(csv.rows(), 3 * 4 * 3);
    let sets: BTreeSet<&str> = csv.as_str().lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(sets, BTreeSet::from(["all", "letters", "main"]));
    let frequent = |set: &str| -> u64 {
        csv.as_str()
            .lines()
            .filter(|l| l.starts_with("2006,FREQUENT,") && l.ends_with(&format!(",{set}")))
            .map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap())
            .sum()
    };
    let truth = world.community.ground_truth().cohorts.iter().find(|c| c.year == 2006).unwrap();
    assert_eq!(frequent("all"), truth.frequent as u64);
    assert!(frequent("letters") < frequent("main"));
}
