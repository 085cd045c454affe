use crate::corpus::{Corpus, CorpusError};

/// Largest `h` such that at least `h` of the counts are `>= h`.
pub fn h_index(citation_counts: &[u64]) -> u64 {
    let mut sorted = citation_counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .enumerate()
        .take_while(|&(i, &c)| c > i as u64)
        .count() as u64
}

/// h-index of `pubs` measured one year after `year`: each publication's
/// citations from corpus papers published up to and including `year + 1`.
pub fn h_index_next_year<'a, I>(corpus: &Corpus, pubs: I, year: i32) -> Result<u64, CorpusError>
where
    I: IntoIterator<Item = &'a str>,
{
    let counts = pubs
        .into_iter()
        .map(|p| corpus.citations_received(p, year + 1).map(|c| c as u64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(h_index(&counts))
}
