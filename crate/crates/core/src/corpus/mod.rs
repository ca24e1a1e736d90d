//! Scrobble logs, friendship graphs and descriptive statistics.
//!
//! User and artist names are interned to dense ids at parse time so that
//! downstream state can live in plain vectors.

mod io;
mod stats;

use std::collections::{HashMap, HashSet};

pub use io::{parse_edges, parse_scrobbles, write_edges, write_scrobbles, ParsedCorpus};
pub use stats::{corpus_stats, degree_tail_exponent, write_histogram_csv, CorpusStats, TailFit};

use crate::ranking::{ArtistId, UserId};

/// One listening event: `user` scrobbled `artist` at `timestamp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scrobble {
    pub user: UserId,
    pub artist: ArtistId,
    /// Unix seconds.
    pub timestamp: i64,
}

/// Undirected friendship, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FriendEdge {
    pub a: UserId,
    pub b: UserId,
    pub created_at: i64,
}

impl FriendEdge {
    /// Canonicalises the endpoint order. Returns `None` for a self-loop.
    pub fn new(x: UserId, y: UserId, created_at: i64) -> Option<Self> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Some(Self {
                a: x,
                b: y,
                created_at,
            }),
            std::cmp::Ordering::Greater => Some(Self {
                a: y,
                b: x,
                created_at,
            }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// Name <-> dense id table.
#[derive(Debug, Clone, Default)]
pub struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// An interner whose names are the decimal ids `0..n`.
    pub fn numeric(n: usize) -> Self {
        let mut out = Self::default();
        for i in 0..n {
            out.intern(&i.to_string());
        }
        out
    }
}

/// User and artist name tables shared by a log and its graph.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    pub users: Interner,
    pub artists: Interner,
}

impl Vocab {
    pub fn numeric(num_users: usize, num_artists: usize) -> Self {
        Self {
            users: Interner::numeric(num_users),
            artists: Interner::numeric(num_artists),
        }
    }
}

/// Time-ordered scrobbles with an index of first-time scrobbles.
#[derive(Debug, Clone, Default)]
pub struct ScrobbleLog {
    events: Vec<Scrobble>,
    first_time: HashMap<(UserId, ArtistId), i64>,
    num_users: usize,
    num_artists: usize,
}

impl ScrobbleLog {
    /// Stable-sorts `events` by timestamp and builds the first-time index.
    pub fn from_events(mut events: Vec<Scrobble>) -> Self {
        events.sort_by_key(|s| s.timestamp);
        let mut first_time = HashMap::new();
        let mut num_users = 0;
        let mut num_artists = 0;
        for s in &events {
            first_time.entry((s.user, s.artist)).or_insert(s.timestamp);
            num_users = num_users.max(s.user.index() + 1);
            num_artists = num_artists.max(s.artist.index() + 1);
        }
        Self {
            events,
            first_time,
            num_users,
            num_artists,
        }
    }

    pub fn events(&self) -> &[Scrobble] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Timestamp of the first scrobble of `artist` by `user`.
    pub fn first_time(&self, user: UserId, artist: ArtistId) -> Option<i64> {
        self.first_time.get(&(user, artist)).copied()
    }

    pub fn unique_pair_count(&self) -> usize {
        self.first_time.len()
    }

    /// One past the largest user id present.
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    /// One past the largest artist id present.
    pub fn num_artists(&self) -> usize {
        self.num_artists
    }

    /// First and last timestamps.
    pub fn span(&self) -> Option<(i64, i64)> {
        Some((
            self.events.first()?.timestamp,
            self.events.last()?.timestamp,
        ))
    }

    /// For each event, whether it is its user's first scrobble of the artist.
    /// Among equal timestamps the earliest in log order is the first one.
    pub fn first_time_flags(&self) -> Vec<bool> {
        let mut seen = HashSet::with_capacity(self.first_time.len());
        self.events
            .iter()
            .map(|s| seen.insert((s.user, s.artist)))
            .collect()
    }

    /// Scrobble count per artist id.
    pub fn artist_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.num_artists];
        for s in &self.events {
            counts[s.artist.index()] += 1;
        }
        counts
    }
}

/// Subsequence of first-time scrobbles, in log order.
pub fn first_time_events(log: &ScrobbleLog) -> Vec<Scrobble> {
    log.events()
        .iter()
        .zip(log.first_time_flags())
        .filter_map(|(s, first)| first.then_some(*s))
        .collect()
}

/// Which scrobbles count toward an artist's frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyScope {
    /// The whole supplied log.
    #[default]
    Whole,
    /// Only scrobbles strictly before the given timestamp.
    Before(i64),
}

/// Keeps scrobbles of artists whose frequency is strictly greater than
/// `min_count`.
pub fn apply_frequency_filter(log: &ScrobbleLog, min_count: u64) -> ScrobbleLog {
    apply_frequency_filter_scoped(log, min_count, FrequencyScope::Whole)
}

pub fn apply_frequency_filter_scoped(
    log: &ScrobbleLog,
    min_count: u64,
    scope: FrequencyScope,
) -> ScrobbleLog {
    let mut counts = vec![0u64; log.num_artists()];
    for s in log.events() {
        let counted = match scope {
            FrequencyScope::Whole => true,
            FrequencyScope::Before(cutoff) => s.timestamp < cutoff,
        };
        if counted {
            counts[s.artist.index()] += 1;
        }
    }
    let kept = log
        .events()
        .iter()
        .filter(|s| counts[s.artist.index()] > min_count)
        .copied()
        .collect();
    ScrobbleLog::from_events(kept)
}

/// Undirected friendship graph with creation times.
#[derive(Debug, Clone, Default)]
pub struct SocialGraph {
    adjacency: Vec<Vec<(UserId, i64)>>,
    created: HashMap<(UserId, UserId), i64>,
    edges: Vec<FriendEdge>,
}

impl SocialGraph {
    /// Builds the graph; a duplicated pair keeps its earliest creation time.
    /// Self-loops are ignored.
    pub fn from_edges<I>(edges: I, num_users: usize) -> Self
    where
        I: IntoIterator<Item = FriendEdge>,
    {
        let mut created: HashMap<(UserId, UserId), i64> = HashMap::new();
        let mut max_user = num_users;
        for e in edges {
            if e.a == e.b {
                continue;
            }
            let key = if e.a < e.b { (e.a, e.b) } else { (e.b, e.a) };
            max_user = max_user.max(key.1.index() + 1);
            created
                .entry(key)
                .and_modify(|t| *t = (*t).min(e.created_at))
                .or_insert(e.created_at);
        }
        let mut edges: Vec<FriendEdge> = created
            .iter()
            .map(|(&(a, b), &created_at)| FriendEdge { a, b, created_at })
            .collect();
        edges.sort_by_key(|e| (e.created_at, e.a, e.b));
        let mut adjacency = vec![Vec::new(); max_user];
        for e in &edges {
            adjacency[e.a.index()].push((e.b, e.created_at));
            adjacency[e.b.index()].push((e.a, e.created_at));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            adjacency,
            created,
            edges,
        }
    }

    /// Number of user slots (one past the largest id known to the graph).
    pub fn num_users(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges ordered by creation time.
    pub fn edges(&self) -> &[FriendEdge] {
        &self.edges
    }

    /// Neighbours of `u` with the friendship creation time, by ascending id.
    pub fn neighbors(&self, u: UserId) -> &[(UserId, i64)] {
        self.adjacency.get(u.index()).map_or(&[], Vec::as_slice)
    }

    pub fn degree(&self, u: UserId) -> usize {
        self.neighbors(u).len()
    }

    pub fn friendship_time(&self, u: UserId, v: UserId) -> Option<i64> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.created.get(&key).copied()
    }

    /// Whether `u` and `v` were friends at time `t` (edge created at or before `t`).
    pub fn friends_at(&self, u: UserId, v: UserId, t: i64) -> bool {
        self.friendship_time(u, v).is_some_and(|c| c <= t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(u: u32, a: u32, t: i64) -> Scrobble {
        Scrobble {
            user: UserId(u),
            artist: ArtistId(a),
            timestamp: t,
        }
    }

    #[test]
    fn sorts_stably_and_indexes_first_times() {
        let log = ScrobbleLog::from_events(vec![s(0, 0, 9), s(1, 1, 3), s(0, 0, 5), s(2, 1, 3)]);
        let times: Vec<i64> = log.events().iter().map(|e| e.timestamp).collect();
        assert_eq!(times, vec![3, 3, 5, 9]);
        assert_eq!(log.events()[0].user, UserId(1));
        assert_eq!(log.events()[1].user, UserId(2));
        assert_eq!(log.first_time(UserId(0), ArtistId(0)), Some(5));
        assert_eq!(log.unique_pair_count(), 3);
    }

    #[test]
    fn first_time_events_keeps_earliest() {
        let log = ScrobbleLog::from_events(vec![s(0, 0, 1), s(0, 0, 4), s(0, 0, 9)]);
        assert_eq!(first_time_events(&log), vec![s(0, 0, 1)]);
        let distinct = ScrobbleLog::from_events(vec![s(0, 0, 1), s(0, 1, 2), s(1, 0, 3)]);
        assert_eq!(first_time_events(&distinct), distinct.events().to_vec());
    }

    #[test]
    fn frequency_filter_boundary() {
        let mut events: Vec<Scrobble> = (0..14).map(|i| s(i % 3, 0, i as i64)).collect();
        events.extend((0..15).map(|i| s(i % 3, 1, 100 + i as i64)));
        let log = ScrobbleLog::from_events(events);
        let filtered = apply_frequency_filter(&log, 14);
        assert!(filtered.events().iter().all(|e| e.artist == ArtistId(1)));
        assert_eq!(filtered.len(), 15);
        assert_eq!(apply_frequency_filter(&log, 0).events(), log.events());
    }

    #[test]
    fn frequency_filter_singletons_vanish() {
        let log = ScrobbleLog::from_events((0..10).map(|i| s(0, i, i as i64)).collect());
        assert!(apply_frequency_filter(&log, 1).is_empty());
    }

    #[test]
    fn scoped_filter_counts_training_range_only() {
        let log = ScrobbleLog::from_events(vec![s(0, 0, 1), s(0, 0, 2), s(0, 0, 30), s(1, 1, 3)]);
        let filtered = apply_frequency_filter_scoped(&log, 1, FrequencyScope::Before(10));
        assert_eq!(filtered.len(), 3);
        let global = apply_frequency_filter(&log, 1);
        assert_eq!(global.len(), 3);
        let strict = apply_frequency_filter_scoped(&log, 2, FrequencyScope::Before(10));
        assert!(strict.is_empty());
    }

    #[test]
    fn graph_is_symmetric_and_keeps_earliest() {
        let g = SocialGraph::from_edges(
            vec![
                FriendEdge {
                    a: UserId(1),
                    b: UserId(2),
                    created_at: 10,
                },
                FriendEdge {
                    a: UserId(2),
                    b: UserId(1),
                    created_at: 7,
                },
            ],
            3,
        );
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.neighbors(UserId(1)), &[(UserId(2), 7)]);
        assert_eq!(g.neighbors(UserId(2)), &[(UserId(1), 7)]);
        assert!(g.friends_at(UserId(2), UserId(1), 7));
        assert!(!g.friends_at(UserId(2), UserId(1), 6));
        assert!(g.neighbors(UserId(40)).is_empty());
    }
}
