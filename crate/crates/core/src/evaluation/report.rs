use std::collections::BTreeMap;
use std::io::Write;

use chrono::DateTime;

use super::dcg_at_k;
use crate::corpus::Vocab;
use crate::error::Result;
use crate::ranking::{ArtistId, UserId};

/// One evaluation event with the rank each recommender gave the adopted
/// artist (`None` when it was not in the top `max k`).
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub timestamp: i64,
    pub user: UserId,
    pub artist: ArtistId,
    pub ranks: Vec<Option<u32>>,
}

/// Mean DCG per recommender and `k` over one calendar period.
///
/// `mean_dcg[r][j]` is recommender `r` at `k_values[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub period: String,
    pub count: usize,
    pub mean_dcg: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub names: Vec<String>,
    pub k_values: Vec<usize>,
    pub events: Vec<EventRecord>,
    pub daily: Vec<AggregateRow>,
    pub monthly: Vec<AggregateRow>,
}

fn period_key(timestamp: i64, format: &str) -> String {
    DateTime::from_timestamp(timestamp, 0)
        .map(|d| d.format(format).to_string())
        .unwrap_or_else(|| timestamp.to_string())
}

fn aggregate(
    events: &[EventRecord],
    n: usize,
    k_values: &[usize],
    format: &str,
) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<String, (usize, Vec<Vec<f64>>)> = BTreeMap::new();
    for e in events {
        let entry = groups
            .entry(period_key(e.timestamp, format))
            .or_insert_with(|| (0, vec![vec![0.0; k_values.len()]; n]));
        entry.0 += 1;
        for (r, rank) in e.ranks.iter().enumerate() {
            for (j, &k) in k_values.iter().enumerate() {
                entry.1[r][j] += dcg_at_k(rank.map(|x| x as usize), k);
            }
        }
    }
    groups
        .into_iter()
        .map(|(period, (count, mut sums))| {
            for row in &mut sums {
                for v in row.iter_mut() {
                    *v /= count as f64;
                }
            }
            AggregateRow {
                period,
                count,
                mean_dcg: sums,
            }
        })
        .collect()
}

impl EvalReport {
    pub fn new(names: Vec<String>, k_values: Vec<usize>, events: Vec<EventRecord>) -> Self {
        let daily = aggregate(&events, names.len(), &k_values, "%Y-%m-%d");
        let monthly = aggregate(&events, names.len(), &k_values, "%Y-%m");
        Self {
            names,
            k_values,
            events,
            daily,
            monthly,
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Mean DCG@k of recommender `r` over all evaluation events.
    pub fn mean_dcg(&self, r: usize, k: usize) -> f64 {
        if self.events.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .events
            .iter()
            .map(|e| dcg_at_k(e.ranks[r].map(|x| x as usize), k))
            .sum();
        total / self.events.len() as f64
    }

    fn header_columns(&self) -> Vec<String> {
        self.names
            .iter()
            .flat_map(|n| self.k_values.iter().map(move |k| format!("{n}@{k}")))
            .collect()
    }

    /// `timestamp,user,artist,rank_<name>...`; missing ranks are empty.
    /// With a vocabulary the original user and artist names are written.
    pub fn write_per_event_csv<W: Write>(&self, mut w: W, vocab: Option<&Vocab>) -> Result<()> {
        write!(w, "timestamp,user,artist")?;
        for n in &self.names {
            write!(w, ",rank_{n}")?;
        }
        writeln!(w)?;
        for e in &self.events {
            match vocab {
                Some(v) => write!(
                    w,
                    "{},{},{}",
                    e.timestamp,
                    v.users.name(e.user.0),
                    v.artists.name(e.artist.0)
                )?,
                None => write!(w, "{},{},{}", e.timestamp, e.user, e.artist)?,
            }
            for r in &e.ranks {
                match r {
                    Some(r) => write!(w, ",{r}")?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    fn write_rows<W: Write>(&self, mut w: W, rows: &[AggregateRow]) -> Result<()> {
        writeln!(w, "period,count,{}", self.header_columns().join(","))?;
        for row in rows {
            write!(w, "{},{}", row.period, row.count)?;
            for per_rec in &row.mean_dcg {
                for v in per_rec {
                    write!(w, ",{v:.6}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_daily_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_rows(w, &self.daily)
    }

    pub fn write_monthly_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_rows(w, &self.monthly)
    }
}
