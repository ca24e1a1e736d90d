use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use super::{ScrobbleLog, SocialGraph};
use crate::error::Result;
use crate::ranking::UserId;
use crate::stats::least_squares;
use crate::DAY;

/// Descriptive statistics of a log and its friendship graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    /// Users that scrobbled or have at least one friendship.
    pub user_count: usize,
    pub edge_count: usize,
    pub scrobble_count: usize,
    pub unique_pair_count: usize,
    pub artist_count: usize,
    /// `degree_histogram[d]` users have exactly `d` friends.
    pub degree_histogram: Vec<u64>,
    /// Scrobble count -> number of artists with that count.
    pub artist_popularity_histogram: BTreeMap<u64, u64>,
    /// `(day index, distinct artists seen up to and including that day)` for
    /// every day from the first to the last scrobble. Day index is
    /// `timestamp / 86400`.
    pub artists_over_time: Vec<(i64, u64)>,
    /// Scrobbles per UTC hour of day.
    pub hourly_activity_profile: [u64; 24],
}

impl CorpusStats {
    pub fn average_degree(&self) -> f64 {
        if self.user_count == 0 {
            0.0
        } else {
            2.0 * self.edge_count as f64 / self.user_count as f64
        }
    }

    /// One `key,value` row per scalar.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "key,value")?;
        writeln!(out, "user_count,{}", self.user_count)?;
        writeln!(out, "edge_count,{}", self.edge_count)?;
        writeln!(out, "scrobble_count,{}", self.scrobble_count)?;
        writeln!(out, "unique_pair_count,{}", self.unique_pair_count)?;
        writeln!(out, "artist_count,{}", self.artist_count)?;
        writeln!(out, "average_degree,{:.6}", self.average_degree())?;
        Ok(())
    }

    /// Named `bucket,count` tables: `degree`, `artist_popularity`,
    /// `artists_over_time` (bucket = day index) and `hourly_activity`.
    pub fn histograms(&self) -> Vec<(&'static str, Vec<(i64, u64)>)> {
        vec![
            (
                "degree",
                self.degree_histogram
                    .iter()
                    .enumerate()
                    .map(|(d, &c)| (d as i64, c))
                    .collect(),
            ),
            (
                "artist_popularity",
                self.artist_popularity_histogram
                    .iter()
                    .map(|(&k, &c)| (k as i64, c))
                    .collect(),
            ),
            ("artists_over_time", self.artists_over_time.clone()),
            (
                "hourly_activity",
                self.hourly_activity_profile
                    .iter()
                    .enumerate()
                    .map(|(h, &c)| (h as i64, c))
                    .collect(),
            ),
        ]
    }
}

pub fn write_histogram_csv<W: Write>(rows: &[(i64, u64)], mut out: W) -> Result<()> {
    writeln!(out, "bucket,count")?;
    for (bucket, count) in rows {
        writeln!(out, "{bucket},{count}")?;
    }
    Ok(())
}

pub fn corpus_stats(log: &ScrobbleLog, graph: &SocialGraph) -> CorpusStats {
    let mut users: HashSet<UserId> = log.events().iter().map(|s| s.user).collect();
    for e in graph.edges() {
        users.insert(e.a);
        users.insert(e.b);
    }

    let mut degree_histogram: Vec<u64> = Vec::new();
    for &u in &users {
        let d = graph.degree(u);
        if degree_histogram.len() <= d {
            degree_histogram.resize(d + 1, 0);
        }
        degree_histogram[d] += 1;
    }

    let counts = log.artist_counts();
    let mut artist_popularity_histogram = BTreeMap::new();
    for &c in counts.iter().filter(|&&c| c > 0) {
        *artist_popularity_histogram.entry(c).or_insert(0) += 1;
    }
    let artist_count = artist_popularity_histogram.values().sum::<u64>() as usize;

    let mut artists_over_time = Vec::new();
    if let Some((first, last)) = log.span() {
        let mut seen = vec![false; log.num_artists()];
        let mut distinct = 0u64;
        let mut events = log.events().iter().peekable();
        for day in first.div_euclid(DAY)..=last.div_euclid(DAY) {
            while let Some(s) = events.next_if(|s| s.timestamp.div_euclid(DAY) <= day) {
                if !seen[s.artist.index()] {
                    seen[s.artist.index()] = true;
                    distinct += 1;
                }
            }
            artists_over_time.push((day, distinct));
        }
    }

    let mut hourly_activity_profile = [0u64; 24];
    for s in log.events() {
        hourly_activity_profile[(s.timestamp.rem_euclid(DAY) / 3600) as usize] += 1;
    }

    CorpusStats {
        user_count: users.len(),
        edge_count: graph.edge_count(),
        scrobble_count: log.len(),
        unique_pair_count: log.unique_pair_count(),
        artist_count,
        degree_histogram,
        artist_popularity_histogram,
        artists_over_time,
        hourly_activity_profile,
    }
}

/// Tail exponent of a shifted power law `P(d) ~ (d + shift)^-alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub exponent: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Estimates `alpha` from a degree histogram by least squares on the log-log
/// complementary CDF: `ln #{d' >= d}` against `ln(d + shift)` has slope
/// `1 - alpha`. Uses degrees `>= min_degree` whose tail still holds at least
/// `min_tail_count` users; the sparse extreme tail is too noisy to regress.
pub fn degree_tail_exponent(
    degree_histogram: &[u64],
    shift: f64,
    min_degree: usize,
    min_tail_count: u64,
) -> Option<TailFit> {
    let mut tail = 0u64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for d in (min_degree.max(1)..degree_histogram.len()).rev() {
        tail += degree_histogram[d];
        if tail >= min_tail_count.max(1) {
            xs.push((d as f64 + shift).ln());
            ys.push((tail as f64).ln());
        }
    }
    let fit = least_squares(&xs, &ys)?;
    Some(TailFit {
        exponent: 1.0 - fit.slope,
        r_squared: fit.r_squared,
        points: xs.len(),
    })
}
