use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ranking::{ArtistId, RankedList};

/// Named linear combination of component recommenders.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendSpec {
    pub name: String,
    pub components: Vec<(String, f64)>,
}

impl BlendSpec {
    /// Weights are normalised to sum to one.
    pub fn new(name: impl Into<String>, components: Vec<(String, f64)>) -> Result<Self> {
        if components
            .iter()
            .any(|(_, w)| !(*w >= 0.0) || !w.is_finite())
        {
            return Err(Error::Config(
                "blend weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = components.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(Error::Config(
                "blend needs at least one positive weight".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            components: components
                .into_iter()
                .map(|(c, w)| (c, w / total))
                .collect(),
        })
    }

    /// Parses `factor:0.7,popularity:0.3`. The blend is named after the input string.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut components = Vec::new();
        for part in spec.split(',') {
            let (name, weight) = part.split_once(':').ok_or_else(|| {
                Error::Config(format!("blend component {part:?} lacks ':weight'"))
            })?;
            let weight: f64 = weight
                .parse()
                .map_err(|_| Error::Config(format!("bad blend weight {weight:?}")))?;
            components.push((name.trim().to_owned(), weight));
        }
        Self::new(format!("blend[{spec}]"), components)
    }
}

/// Reciprocal-rank blend: `score(a) = sum_i w_i / rank_i(a)`, with an artist
/// absent from list `i` contributing nothing. Artists whose blended score is
/// zero are dropped.
pub fn blend_ranked_lists(lists: &[(&RankedList, f64)], k: usize) -> RankedList {
    let mut ranks: HashMap<ArtistId, Vec<Option<usize>>> = HashMap::new();
    for (i, (list, _)) in lists.iter().enumerate() {
        for (pos, artist) in list.artists().enumerate() {
            ranks
                .entry(artist)
                .or_insert_with(|| vec![None; lists.len()])[i] = Some(pos + 1);
        }
    }
    let weights: Vec<f64> = lists.iter().map(|(_, w)| *w).collect();
    RankedList::from_scores(
        ranks
            .into_iter()
            .map(|(a, r)| (a, reciprocal_score(&r, &weights)))
            .filter(|&(_, s)| s > 0.0),
        k,
    )
}

/// Summation order is fixed so that every caller gets bit-identical scores.
pub(crate) fn reciprocal_score(ranks: &[Option<usize>], weights: &[f64]) -> f64 {
    let mut s = 0.0;
    for (r, w) in ranks.iter().zip(weights) {
        if let Some(r) = r {
            s += w / *r as f64;
        }
    }
    s
}

/// Rank `target` would get in [`blend_ranked_lists`] with unlimited `k`,
/// computed without building the list. `lists` hold artists in rank order.
pub fn blended_rank(lists: &[&[ArtistId]], weights: &[f64], target: ArtistId) -> Option<usize> {
    let rank_in = |list: &[ArtistId], a: ArtistId| list.iter().position(|&x| x == a).map(|p| p + 1);
    let target_ranks: Vec<Option<usize>> = lists.iter().map(|l| rank_in(l, target)).collect();
    let target_score = reciprocal_score(&target_ranks, weights);
    if target_score <= 0.0 {
        return None;
    }
    let mut better = 0;
    let mut seen = std::collections::HashSet::new();
    let mut ranks = vec![None; lists.len()];
    for list in lists {
        for &a in *list {
            if a == target || !seen.insert(a) {
                continue;
            }
            for (j, l) in lists.iter().enumerate() {
                ranks[j] = rank_in(l, a);
            }
            let s = reciprocal_score(&ranks, weights);
            if s > target_score || (s == target_score && a < target) {
                better += 1;
            }
        }
    }
    Some(better + 1)
}
