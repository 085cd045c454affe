//! Distributions of reads or citations over the publication years of the
//! target articles.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::RangeInclusive;

use crate::corpus::{Corpus, JournalSet};

pub const DEFAULT_WINDOW_START: i32 = 1980;

/// One target publication and how many times it occurs in an event list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event<'a> {
    pub pub_id: &'a str,
    pub year: i32,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObsolescenceCurve {
    pub window: RangeInclusive<i32>,
    /// Unique listed publications of each year over that year's journal-set
    /// output. Present for every window year with non-zero output.
    pub unique_fraction: BTreeMap<i32, f64>,
    /// Events per publication year over all events in the window. Only
    /// years with events appear.
    pub normalized_count: BTreeMap<i32, f64>,
    pub total_events: u64,
    pub unique_pubs: usize,
}

impl ObsolescenceCurve {
    /// No events fell inside the window.
    pub fn is_empty(&self) -> bool {
        self.total_events == 0
    }

    pub fn unique_fraction_at(&self, year: i32) -> f64 {
        self.unique_fraction.get(&year).copied().unwrap_or(0.0)
    }

    pub fn normalized_count_at(&self, year: i32) -> f64 {
        self.normalized_count.get(&year).copied().unwrap_or(0.0)
    }
}

/// Builds both curve series from an event multiset.
///
/// Events must come from the same journal slice as `year_totals`; events
/// outside `window` are ignored.
pub fn obsolescence_curve<'a, I>(
    events: I,
    year_totals: &BTreeMap<i32, usize>,
    window: RangeInclusive<i32>,
) -> ObsolescenceCurve
where
    I: IntoIterator<Item = Event<'a>>,
{
    let mut per_year: BTreeMap<i32, u64> = BTreeMap::new();
    let mut unique: BTreeMap<i32, BTreeSet<&'a str>> = BTreeMap::new();
    let mut total = 0u64;
    for e in events {
        if !window.contains(&e.year) || e.count == 0 {
            continue;
        }
        *per_year.entry(e.year).or_insert(0) += e.count;
        unique.entry(e.year).or_default().insert(e.pub_id);
        total += e.count;
    }

    let normalized_count = if total == 0 {
        BTreeMap::new()
    } else {
        per_year.iter().map(|(&y, &n)| (y, n as f64 / total as f64)).collect()
    };
    let unique_fraction = year_totals
        .range(window.clone())
        .filter(|(_, &n)| n > 0)
        .map(|(&y, &n)| (y, unique.get(&y).map_or(0, BTreeSet::len) as f64 / n as f64))
        .collect();

    ObsolescenceCurve {
        window,
        unique_fraction,
        normalized_count,
        total_events: total,
        unique_pubs: unique.values().map(BTreeSet::len).sum(),
    }
}

/// Events for a publication → count map, dropping ids absent from the
/// corpus or outside `journals`.
pub fn events_from_counts<'a, I>(corpus: &'a Corpus, counts: I, journals: &JournalSet) -> Vec<Event<'a>>
where
    I: IntoIterator<Item = (&'a str, u64)>,
{
    counts
        .into_iter()
        .filter_map(|(id, count)| {
            let p = corpus.get(id)?;
            journals.contains(&p.journal).then_some(Event { pub_id: &p.pub_id, year: p.year, count })
        })
        .collect()
}

/// Citation events from the reference lists of `citing`: each reference to a
/// journal-set corpus member is one event.
pub fn citation_events<'a, I>(corpus: &'a Corpus, citing: I, journals: &JournalSet) -> Vec<Event<'a>>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<&'a str, u64> = HashMap::new();
    for id in citing {
        let Some(p) = corpus.get(id) else { continue };
        for r in &p.references {
            if corpus.in_journals(r, journals) {
                *counts.entry(r.as_str()).or_insert(0) += 1;
            }
        }
    }
    let mut events = events_from_counts(corpus, counts, journals);
    events.sort_by(|a, b| a.pub_id.cmp(b.pub_id));
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::publication;
    use proptest::prelude::*;

    fn ev(id: &str, year: i32, count: u64) -> Event<'_> {
        Event { pub_id: id, year, count }
    }

    #[test]
    fn single_year_and_even_split() {
        let totals = BTreeMap::from([(1990, 10), (2000, 4)]);
        let c = obsolescence_curve([ev("a", 1990, 3)], &totals, 1980..=2015);
        assert_eq!(c.normalized_count, BTreeMap::from([(1990, 1.0)]));
        assert_eq!(c.unique_fraction, BTreeMap::from([(1990, 0.1), (2000, 0.0)]));

        let c = obsolescence_curve([ev("a", 1990, 2), ev("b", 2000, 1), ev("c", 2000, 1)], &totals, 1980..=2015);
        assert_eq!(c.normalized_count, BTreeMap::from([(1990, 0.5), (2000, 0.5)]));
        assert_eq!(c.unique_fraction_at(2000), 0.5);
        assert_eq!(c.unique_pubs, 3);
    }

    #[test]
    fn empty_and_out_of_window() {
        let totals = BTreeMap::from([(1975, 10)]);
        let c = obsolescence_curve([ev("old", 1975, 5)], &totals, 1980..=2015);
        assert!(c.is_empty());
        assert!(c.normalized_count.is_empty());
        assert!(c.unique_fraction.is_empty());
    }

    #[test]
    fn citation_events_follow_reference_lists() {
        let main = JournalSet::main_astronomy();
        let corpus = Corpus::from_publications(vec![
            publication("t1", 1990, "ApJ", &["x"], &[]),
            publication("t2", 1995, "AJ", &["x"], &[]),
            publication("t3", 1995, "PASP", &["x"], &[]),
            publication("c1", 2010, "ApJ", &["x"], &["t1", "t2", "t3", "gone"]),
            publication("c2", 2010, "ApJ", &["x"], &["t1"]),
        ])
        .unwrap();
        let events = citation_events(&corpus, ["c1", "c2"], &main);
        assert_eq!(events, vec![ev("t1", 1990, 2), ev("t2", 1995, 1)]);
        let c = obsolescence_curve(events, &corpus.year_totals(&main), 1980..=2010);
        assert!((c.normalized_count_at(1990) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.unique_fraction_at(1995), 1.0);
    }

    proptest! {
        #[test]
        fn normalization_and_brute_force_unique_fraction(
            raw in proptest::collection::vec((0usize..300, 1u64..5), 0..200),
        ) {
            // Fixture slice: 300 pubs spread over 1975..2015.
            let ids: Vec<String> = (0..300).map(|i| format!("p{i}")).collect();
            let year_of = |i: usize| 1975 + (i % 41) as i32;
            let mut totals: BTreeMap<i32, usize> = BTreeMap::new();
            for i in 0..300 {
                *totals.entry(year_of(i)).or_insert(0) += 1;
            }
            let events: Vec<Event<'_>> = raw.iter().map(|&(i, n)| ev(&ids[i], year_of(i), n)).collect();
            let window = 1980..=2012;
            let c = obsolescence_curve(events.iter().copied(), &totals, window.clone());
            if !c.is_empty() {
                let s: f64 = c.normalized_count.values().sum();
                prop_assert!((s - 1.0).abs() <= 1e-9);
            }
            for y in window {
                let unique: BTreeSet<&str> = events.iter().filter(|e| e.year == y).map(|e| e.pub_id).collect();
                let expected = unique.len() as f64 / totals[&y] as f64;
                prop_assert_eq!(c.unique_fraction_at(y), expected);
                prop_assert!((0.0..=1.0).contains(&expected));
            }
        }
    }
}
