//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines always show.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use usagebib::clickstream::{attribute_country, CountryCode, RobotPolicy};
use usagebib::cohort::{AttributionContext, CohortCategory, CohortConfig};
use usagebib::corpus::JournalSet;
use usagebib::indicators::{
    fit_gdp_power_law, h_index, normalize_to_base_year, obsolescence_curve, overlap_fraction_with,
    random_overlap_baseline, BaselineSampler, Event, IndicatorConfig, OverlapDenominator,
};
use usagebib::ingest::ingest;
use usagebib::synth::{default_robot_policy, generate_economy, CommunityModel, EconomyModel};
use usagebib::verify::verify;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match outcome {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; too slow")),
        Err(e) => (false, e),
    };
    println!(
        "criterion {id:>2} {} {name} [{:.2}s, limit {}s] {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn cohort_boundaries() -> Outcome {
    let c = CohortConfig::default();
    for (d, want) in [
        (100, CohortCategory::Frequent),
        (1000, CohortCategory::Frequent),
        (99, CohortCategory::Infrequent),
        (1001, CohortCategory::Remainder),
        (0, CohortCategory::AbstractOnly),
    ] {
        ensure(c.category(d) == want, || format!("d={d}: {:?}", c.category(d)))?;
    }
    for d in 0..=2000u64 {
        let want = if d == 0 {
            CohortCategory::AbstractOnly
        } else if d < 100 {
            CohortCategory::Infrequent
        } else if d <= 1000 {
            CohortCategory::Frequent
        } else {
            CohortCategory::Remainder
        };
        ensure(c.category(d) == want, || format!("d={d}: {:?} != {want:?}", c.category(d)))?;
    }
    Ok("2001 values match the piecewise definition".into())
}

fn tld_attribution() -> Outcome {
    for host in ["x.edu", "x.gov", "x.mil", "x.net"] {
        ensure(attribute_country(host, "") == CountryCode::Known(*b"US"), || format!("{host} not US"))?;
    }
    let fixtures = [
        ("ast.cam.ac.uk", "GB"),
        ("mpia.de", "DE"),
        ("obspm.fr", "FR"),
        ("nao.ac.jp", "JP"),
        ("strw.leidenuniv.nl", "NL"),
        ("iar.unlp.edu.ar", "AR"),
        ("iucaa.in", "IN"),
        ("mso.anu.edu.au", "AU"),
        ("nrc.ca", "CA"),
        ("inaf.it", "IT"),
        ("iac.es", "ES"),
        ("bao.ac.cn", "CN"),
        ("on.br", "BR"),
        ("sai.msu.ru", "RU"),
        ("unige.ch", "CH"),
        ("astro.su.se", "SE"),
        ("das.uchile.cl", "CL"),
        ("saao.ac.za", "ZA"),
        ("kasi.re.kr", "KR"),
        ("astroscu.unam.mx", "MX"),
    ];
    for (host, code) in fixtures {
        let got = attribute_country(host, "192.0.2.1");
        ensure(got.to_string() == code, || format!("{host} -> {got}, want {code}"))?;
    }
    for garbage in ["", " ", "localhost", "x.zz", "x.123", "...", "x.", "a..b.q1", "\u{e9}.\u{e9}"] {
        let got = attribute_country(garbage, "");
        ensure(got == CountryCode::Unknown, || format!("{garbage:?} -> {got}"))?;
    }
    Ok(format!("4 generic + {} ccTLD fixtures, garbage -> UNKNOWN", fixtures.len()))
}

fn robot_invariance() -> Outcome {
    let model = common::small_model(5);
    let world = common::world(model.clone());
    let main = JournalSet::main_astronomy();
    let targets = world.corpus.slice(&main, 1980..=model.last_year);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let lines: Vec<&str> = world.logs.lines().collect();
    let originals = lines.len();
    let planted = 10_000;
    let mut robots: Vec<(usize, String)> = (0..planted)
        .map(|k| {
            let mut fields: Vec<String> = lines[rng.random_range(0..originals)].split('\t').map(str::to_string).collect();
            if k % 2 == 0 {
                fields[4] = "Mozilla/5.0 (compatible; Googlebot/2.1; +http://www.google.com/bot.html)".into();
            } else {
                fields[2] = format!("66.249.{}.{}", 64 + rng.random_range(0..32), rng.random_range(1..255));
            }
            if k % 3 == 0 {
                fields[1] = format!("crawler-{}", k % 50);
            }
            fields[5] = "DOWNLOAD".into();
            fields[6] = targets[rng.random_range(0..targets.len())].to_string();
            (rng.random_range(0..=originals), fields.join("\t"))
        })
        .collect();
    robots.sort_by_key(|r| r.0);
    let mut merged: Vec<&str> = Vec::with_capacity(originals + planted);
    let mut pending = robots.iter().peekable();
    for (i, line) in lines.iter().enumerate() {
        while let Some((_, r)) = pending.next_if(|r| r.0 == i) {
            merged.push(r);
        }
        merged.push(line);
    }
    merged.extend(pending.map(|r| r.1.as_str()));
    let mut dirty = merged.join("\n");
    dirty.push('\n');

    let start = Instant::now();
    let policy = default_robot_policy();
    let journals = [main];
    let ctx = AttributionContext { corpus: &world.corpus, journals: &journals, entity_map: None };
    let (clean_acc, clean_stats) = ingest(world.logs.as_bytes(), &policy, ctx, true).map_err(|e| e.to_string())?;
    let (_, dirty_stats) = ingest(dirty.as_bytes(), &policy, ctx, true).map_err(|e| e.to_string())?;
    ensure(dirty_stats.robot_records == clean_stats.robot_records + planted as u64, || {
        format!("{} planted robot lines, {} more filtered", planted, dirty_stats.robot_records - clean_stats.robot_records)
    })?;
    let clean = common::all_reports(&world.corpus, &model, &world.logs, &policy, true);
    let with_robots = common::all_reports(&world.corpus, &model, &dirty, &policy, true);
    ensure(clean == with_robots, || "reports differ with robot lines present".into())?;
    let (unfiltered, _) = ingest(dirty.as_bytes(), &RobotPolicy::default(), ctx, true).map_err(|e| e.to_string())?;
    ensure(unfiltered != clean_acc, || "planted lines have no effect even unfiltered".into())?;
    ensure(start.elapsed() < Duration::from_secs(10), || format!("pipeline took {:?}", start.elapsed()))?;
    Ok(format!("{} bytes of reports identical with {planted} robot lines among {originals}", clean.len()))
}

fn brute_h(counts: &[u64]) -> u64 {
    (0..=counts.len() as u64).rev().find(|&h| counts.iter().filter(|&&c| c >= h).count() as u64 >= h).unwrap()
}

fn h_index_oracle() -> Outcome {
    let mut cases = 0u64;
    for len in 0..=6u32 {
        for code in 0..7u64.pow(len) {
            let counts: Vec<u64> = (0..len).map(|i| code / 7u64.pow(i) % 7).collect();
            ensure(h_index(&counts) == brute_h(&counts), || format!("{counts:?}"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} citation lists checked"))
}

fn overlap_and_baseline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for fixture in 0..1000 {
        let universe = rng.random_range(1..60);
        let mut pick = |p: f64| -> BTreeSet<String> {
            (0..universe).filter(|_| rng.random_bool(p)).map(|i| format!("p{i}")).collect()
        };
        let r = pick(0.4);
        let c = pick(0.3);
        let hits = c.iter().filter(|x| r.iter().any(|y| y == *x)).count();
        let union = r.len() + c.iter().filter(|x| !r.iter().any(|y| y == *x)).count();
        for (d, denom) in
            [(OverlapDenominator::Cited, c.len()), (OverlapDenominator::Downloaded, r.len()), (OverlapDenominator::Union, union)]
        {
            let got = overlap_fraction_with(&r, &c, d).ok();
            let want = (denom > 0).then(|| hits as f64 / denom as f64);
            ensure(got == want, || format!("fixture {fixture} {d}: {got:?} != {want:?}"))?;
        }
    }

    let (n, k, s) = (10_000usize, 500usize, 100usize);
    let slice: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let cited: BTreeSet<String> = (0..n).step_by(n / k).map(|i| format!("p{i}")).collect();
    let expected = s as f64 / n as f64;
    // Hypergeometric variance of the hit count, scaled to the fraction.
    let var_hits = s as f64 * (k as f64 / n as f64) * ((n - k) as f64 / n as f64) * ((n - s) as f64 / (n - 1) as f64);
    let var_frac = var_hits / (k * k) as f64;

    let samples = BaselineSampler::new(&slice, &cited, OverlapDenominator::Cited)
        .par_samples(s, 10_000, 42)
        .map_err(|e| e.to_string())?;
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let se = (var_frac / samples.len() as f64).sqrt();
    ensure((mean - expected).abs() <= 3.0 * se, || format!("mean {mean} vs {expected}, se {se}"))?;

    let estimates: Vec<f64> = (0..1000u64)
        .into_par_iter()
        .map(|seed| random_overlap_baseline(&slice, s, &cited, 10, seed).unwrap())
        .collect();
    let est_mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let est_se = (var_frac / (10.0 * 1000.0)).sqrt();
    ensure((est_mean - expected).abs() <= 3.0 * est_se, || format!("10-sample estimator mean {est_mean}, se {est_se}"))?;
    Ok(format!(
        "1000 fixtures exact; 10^4 samples mean {mean:.6} ({:.2} se); 10-sample estimator {est_mean:.6} ({:.2} se)",
        (mean - expected) / se,
        (est_mean - expected) / est_se
    ))
}

fn obsolescence_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0f64;
    for fixture in 0..100 {
        let first = 1980 + rng.random_range(0..10);
        let last = first + rng.random_range(0..25);
        let year_totals: BTreeMap<i32, usize> =
            (1975..=2020).filter(|_| rng.random_bool(0.9)).collect::<Vec<i32>>().into_iter().map(|y| (y, rng.random_range(1..40))).collect();
        let ids: Vec<(i32, String)> =
            year_totals.iter().flat_map(|(&y, &n)| (0..n).map(move |k| (y, format!("{y}-{k}")))).collect();
        let mut events = Vec::new();
        for _ in 0..rng.random_range(1..300) {
            let (year, id) = &ids[rng.random_range(0..ids.len())];
            events.push((id.clone(), *year, rng.random_range(0..5u64)));
        }
        let (y0, id0) = ids.iter().find(|(y, _)| (first..=last).contains(y)).cloned().unwrap_or_default();
        if !id0.is_empty() {
            events.push((id0, y0, 1));
        }
        let curve = obsolescence_curve(
            events.iter().map(|(id, year, count)| Event { pub_id: id, year: *year, count: *count }),
            &year_totals,
            first..=last,
        );
        if curve.total_events > 0 {
            let sum: f64 = curve.normalized_count.values().sum();
            worst = worst.max((sum - 1.0).abs());
            ensure((sum - 1.0).abs() <= 1e-9, || format!("fixture {fixture}: sum {sum}"))?;
        }
        for y in first..=last {
            let Some(&total) = year_totals.get(&y) else { continue };
            let distinct: BTreeSet<&str> =
                events.iter().filter(|(_, ey, c)| *ey == y && *c > 0).map(|(id, _, _)| id.as_str()).collect();
            let want = distinct.len() as f64 / total as f64;
            ensure(curve.unique_fraction.get(&y) == Some(&want), || {
                format!("fixture {fixture} year {y}: {:?} != {want}", curve.unique_fraction.get(&y))
            })?;
        }
    }
    Ok(format!("100 fixtures, max |sum - 1| = {worst:e}"))
}

fn end_to_end_verify() -> Outcome {
    let report = verify(&CommunityModel::default(), &IndicatorConfig::default()).map_err(|e| e.to_string())?;
    if let Some(m) = &report.mismatch {
        return Err(m.to_string());
    }
    let (planted, recovered) = (report.planted_r.unwrap_or(f64::NAN), report.recovered_r.unwrap_or(f64::NAN));
    ensure((planted - recovered).abs() <= 0.05, || format!("r planted {planted} recovered {recovered}"))?;
    let beats: Vec<bool> = (1..=30u64)
        .into_par_iter()
        .map(|seed| verify(&common::small_model(seed), &IndicatorConfig { seed, ..Default::default() }))
        .map(|r| r.map(|r| r.mismatch.is_none() && r.overlap_beats_baseline()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let wins = beats.iter().filter(|&&b| b).count();
    ensure(wins >= 29, || format!("overlap above baseline in {wins}/30 seeds"))?;
    Ok(format!(
        "{} entity-years exact, r planted {planted:.4} recovered {recovered:.4}, overlap > baseline in {wins}/30 seeds",
        report.entity_years
    ))
}

fn gdp_power_law() -> Outcome {
    let fit = fit_gdp_power_law(&generate_economy(&EconomyModel { seed: 1, ..Default::default() }))
        .map_err(|e| e.to_string())?;
    ensure(
        (fit.gdp_exponent - 2.0).abs() <= 1e-9 && (fit.population_exponent + 1.0).abs() <= 1e-9 && fit.rms_residual <= 1e-9,
        || format!("noise-free fit {fit:?}"),
    )?;
    let mut sum = 0.0;
    for seed in 0..30 {
        let f = fit_gdp_power_law(&generate_economy(&EconomyModel { seed, noise: 0.05, ..Default::default() }))
            .map_err(|e| e.to_string())?;
        sum += f.gdp_exponent;
    }
    let mean = sum / 30.0;
    ensure((1.9..=2.1).contains(&mean), || format!("noisy mean b = {mean}"))?;
    Ok(format!(
        "noise-free b={:.12} c={:.12} rms={:e}; 5% noise mean b={mean:.4}",
        fit.gdp_exponent, fit.population_exponent, fit.rms_residual
    ))
}

fn base_year_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let mut years: Vec<i32> = (1995..=2020).collect();
        years.shuffle(&mut rng);
        years.truncate(rng.random_range(1..20));
        years.push(2005);
        let series: BTreeMap<i32, f64> = years.iter().map(|&y| (y, 10f64.powf(rng.random_range(-3.0..9.0)))).collect();
        let norm = normalize_to_base_year(&series, 2005).map_err(|e| e.to_string())?;
        ensure(norm[&2005] == 1.0, || format!("base value {}", norm[&2005]))?;
        for (a, va) in &series {
            for (b, vb) in &series {
                let err = ((norm[a] / norm[b]) / (va / vb) - 1.0).abs();
                worst = worst.max(err);
                ensure(err <= 1e-12, || format!("ratio {a}/{b} off by {err:e}"))?;
            }
        }
    }
    Ok(format!("1000 series, worst ratio error {worst:e}"))
}

fn ingest_performance() -> Outcome {
    let mut model = common::small_model(10);
    model.entities = CommunityModel::default().entities;
    let world = common::world(model.clone());
    let lines: Vec<&str> = world.logs.lines().take(1_000_000).collect();
    ensure(lines.len() == 1_000_000, || format!("only {} lines generated", lines.len()))?;
    let mut text = lines.join("\n");
    text.push('\n');
    drop(lines);

    let policy = default_robot_policy();
    let journals = [JournalSet::main_astronomy()];
    let ctx = AttributionContext { corpus: &world.corpus, journals: &journals, entity_map: None };
    let start = Instant::now();
    let (acc, stats) = ingest(text.as_bytes(), &policy, ctx, true).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("ingest took {elapsed:?}"))?;
    ensure(stats.lines == 1_000_000, || format!("{} lines counted", stats.lines))?;
    let (seq_acc, seq_stats) = ingest(text.as_bytes(), &policy, ctx, false).map_err(|e| e.to_string())?;
    ensure(acc == seq_acc && stats == seq_stats, || "parallel and sequential accumulators differ".into())?;
    let parallel = common::all_reports(&world.corpus, &model, &text, &policy, true);
    let sequential = common::all_reports(&world.corpus, &model, &text, &policy, false);
    ensure(parallel == sequential, || "parallel and sequential reports differ".into())?;
    Ok(format!(
        "10^6 lines in {:.2}s ({} accepted, {} robot); parallel reports byte-identical ({} bytes)",
        elapsed.as_secs_f64(),
        stats.accepted,
        stats.robot_records,
        parallel.len()
    ))
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        run(1, "cohort boundary exactness", s(1), cohort_boundaries),
        run(2, "TLD attribution", s(1), tld_attribution),
        run(3, "robot invariance", s(10), robot_invariance),
        run(4, "h-index oracle", s(5), h_index_oracle),
        run(5, "overlap and random baseline", s(60), overlap_and_baseline),
        run(6, "obsolescence normalization", s(5), obsolescence_normalization),
        run(7, "end-to-end verify", s(300), end_to_end_verify),
        run(8, "GDP power law", s(30), gdp_power_law),
        run(9, "base-year normalization", s(1), base_year_normalization),
        run(10, "ingest performance and determinism", s(60), ingest_performance),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
