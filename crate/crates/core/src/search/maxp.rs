use std::collections::HashMap;

use crate::eval::Run;
use crate::ranking::RankedList;

/// Collapses a passage-level run to documents, scoring each parent by its
/// best passage. Passage ids look like `<parent><separator><ordinal>`; an id
/// without the separator is its own parent.
pub fn aggregate_max_passage(run: &Run, separator: &str) -> Run {
    let mut out = Run::new(run.tag.clone());
    for list in run.iter() {
        let mut best: HashMap<&str, f64> = HashMap::new();
        for hit in &list.hits {
            let parent = match hit.docid.rsplit_once(separator) {
                Some((parent, _)) if !separator.is_empty() => parent,
                _ => {
                    log::warn!("docid `{}` has no `{separator}` separator", hit.docid);
                    hit.docid.as_str()
                }
            };
            best.entry(parent)
                .and_modify(|s| *s = s.max(hit.score))
                .or_insert(hit.score);
        }
        let n = best.len();
        let scored = best.into_iter().map(|(p, s)| (p.to_owned(), s)).collect();
        out.insert(RankedList::from_scores(list.qid.clone(), scored, n));
    }
    out
}
