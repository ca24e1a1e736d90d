//! Identifiers and the ranked-list type shared by every recommender.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense user index assigned at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u32);

/// Dense artist index assigned at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArtistId(pub u32);

impl UserId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ArtistId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ArtistId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredArtist {
    pub artist: ArtistId,
    pub score: f64,
}

/// Descending score order, ties by ascending artist id.
pub fn score_order(a: &ScoredArtist, b: &ScoredArtist) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then(a.artist.cmp(&b.artist))
}

/// A top list of artists. Scores are nonincreasing, artists are unique and
/// equal scores are ordered by ascending artist id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedList {
    items: Vec<ScoredArtist>,
}

impl RankedList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds the top-`k` list from unordered `(artist, score)` pairs.
    /// Each artist must appear at most once.
    pub fn from_scores<I>(scores: I, k: usize) -> Self
    where
        I: IntoIterator<Item = (ArtistId, f64)>,
    {
        let mut items: Vec<ScoredArtist> = scores
            .into_iter()
            .map(|(artist, score)| ScoredArtist { artist, score })
            .collect();
        if k == 0 {
            return Self::empty();
        }
        if items.len() > k {
            items.select_nth_unstable_by(k - 1, score_order);
            items.truncate(k);
        }
        items.sort_by(score_order);
        debug_assert!(
            {
                let mut seen = std::collections::HashSet::new();
                items.iter().all(|s| seen.insert(s.artist))
            },
            "duplicate artist in ranked list"
        );
        Self { items }
    }

    /// Wraps an already ordered list. Callers guarantee the ordering invariant.
    pub(crate) fn from_sorted(items: Vec<ScoredArtist>) -> Self {
        debug_assert!(items
            .windows(2)
            .all(|w| score_order(&w[0], &w[1]) != Ordering::Greater));
        Self { items }
    }

    pub fn items(&self) -> &[ScoredArtist] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn artists(&self) -> impl Iterator<Item = ArtistId> + '_ {
        self.items.iter().map(|s| s.artist)
    }

    /// 1-based rank of `artist`, if listed.
    pub fn rank(&self, artist: ArtistId) -> Option<usize> {
        self.items
            .iter()
            .position(|s| s.artist == artist)
            .map(|p| p + 1)
    }

    pub fn truncate(&mut self, k: usize) {
        self.items.truncate(k);
    }
}
