use std::cmp::Reverse;
use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::ranking::{ArtistId, RankedList, ScoredArtist};

/// Scrobble counts over the sliding window `(now - tau, now]`, kept in
/// descending-count order (ties by ascending artist id).
#[derive(Debug, Clone)]
pub struct PopularityWindow {
    tau: i64,
    counts: Vec<u64>,
    queue: VecDeque<(i64, ArtistId)>,
    order: BTreeSet<(Reverse<u64>, ArtistId)>,
    /// Artists below this count are left out of the order index.
    tail_threshold: u64,
}

impl PopularityWindow {
    pub fn new(tau: i64) -> Self {
        Self {
            tau,
            counts: Vec::new(),
            queue: VecDeque::new(),
            order: BTreeSet::new(),
            tail_threshold: 1,
        }
    }

    /// Approximate mode: artists whose window count is below `min_count` are
    /// ignored when ranking. `min_count = 1` is exact.
    pub fn with_tail_threshold(mut self, min_count: u64) -> Self {
        self.tail_threshold = min_count.max(1);
        self
    }

    pub fn tau(&self) -> i64 {
        self.tau
    }

    pub fn count(&self, artist: ArtistId) -> u64 {
        self.counts.get(artist.index()).copied().unwrap_or(0)
    }

    /// Number of scrobbles currently in the window.
    pub fn window_len(&self) -> usize {
        self.queue.len()
    }

    fn set_count(&mut self, artist: ArtistId, new: u64) {
        let slot = &mut self.counts[artist.index()];
        let old = *slot;
        *slot = new;
        if old >= self.tail_threshold {
            self.order.remove(&(Reverse(old), artist));
        }
        if new >= self.tail_threshold {
            self.order.insert((Reverse(new), artist));
        }
    }

    /// Expires every scrobble with timestamp `<= now - tau`.
    pub fn advance(&mut self, now: i64) {
        let horizon = now - self.tau;
        while let Some(&(ts, artist)) = self.queue.front() {
            if ts > horizon {
                break;
            }
            self.queue.pop_front();
            let c = self.counts[artist.index()];
            self.set_count(artist, c - 1);
        }
    }

    /// Adds a scrobble at `t` after expiring old ones. Times must not decrease.
    pub fn observe(&mut self, artist: ArtistId, t: i64) {
        self.advance(t);
        if self.counts.len() <= artist.index() {
            self.counts.resize(artist.index() + 1, 0);
        }
        self.queue.push_back((t, artist));
        let c = self.counts[artist.index()];
        self.set_count(artist, c + 1);
    }

    /// Top `k` artists by window count. Identical for every user.
    pub fn recommend(&self, k: usize) -> RankedList {
        self.recommend_excluding(k, &HashSet::new())
    }

    pub fn recommend_excluding(&self, k: usize, known: &HashSet<ArtistId>) -> RankedList {
        let items = self
            .order
            .iter()
            .filter(|(_, a)| !known.contains(a))
            .take(k)
            .map(|&(Reverse(c), artist)| ScoredArtist {
                artist,
                score: c as f64,
            })
            .collect();
        RankedList::from_sorted(items)
    }
}
