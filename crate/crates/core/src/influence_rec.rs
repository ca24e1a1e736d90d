//! Online friend-influence recommender.
//!
//! A friend `v`'s recent scrobble of artist `a` contributes
//! `gamma(t - t_v) * omega(v -> u)` to `a`'s score for user `u`, where
//! `gamma(dt) = 1 - ln(dt) / ln(tau)` decays over the time frame `tau` and
//! `omega` counts, with the same decay, how often `v` has preceded `u`'s
//! first scrobbles in the past.

use std::collections::{hash_map::Entry, HashMap, HashSet, VecDeque};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ranking::{ArtistId, RankedList, UserId};
use crate::WEEK;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceConfig {
    tau: i64,
    c: f64,
    /// Keep only this many friends (largest omega first) when scoring.
    pub max_friends: Option<usize>,
}

impl InfluenceConfig {
    pub fn new(tau: i64) -> Result<Self> {
        if tau <= 1 {
            return Err(Error::Config(format!(
                "tau must exceed 1 second, got {tau}"
            )));
        }
        Ok(Self {
            tau,
            c: 1.0 / (tau as f64).ln(),
            max_friends: None,
        })
    }

    pub fn with_max_friends(mut self, max_friends: usize) -> Self {
        self.max_friends = Some(max_friends);
        self
    }

    pub fn tau(&self) -> i64 {
        self.tau
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

impl Default for InfluenceConfig {
    fn default() -> Self {
        Self::new(WEEK).expect("one week is a valid time frame")
    }
}

/// `1 - c * ln(max(delta_t, 1))`. Delays beyond `tau` are a caller error.
pub fn gamma(delta_t: i64, config: &InfluenceConfig) -> Result<f64> {
    if delta_t > config.tau || delta_t < 0 {
        return Err(Error::WindowViolation {
            delta: delta_t,
            tau: config.tau,
        });
    }
    Ok(gamma_unchecked(delta_t, config.c))
}

fn gamma_unchecked(delta_t: i64, c: f64) -> f64 {
    1.0 - c * (delta_t.max(1) as f64).ln()
}

/// Directed influence strengths `omega(influencer -> influenced)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StrengthTable {
    omega: HashMap<(UserId, UserId), f64>,
}

impl StrengthTable {
    pub fn get(&self, influencer: UserId, influenced: UserId) -> Option<f64> {
        self.omega.get(&(influencer, influenced)).copied()
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Entries sorted by `(influencer, influenced)`.
    pub fn sorted_entries(&self) -> Vec<(UserId, UserId, f64)> {
        let mut out: Vec<_> = self.omega.iter().map(|(&(v, u), &w)| (v, u, w)).collect();
        out.sort_by_key(|&(v, u, _)| (v, u));
        out
    }

    /// `influencer,influenced,omega` with dense ids.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "influencer,influenced,omega")?;
        for (v, u, w) in self.sorted_entries() {
            writeln!(out, "{v},{u},{w}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut omega = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", fields.len())));
            }
            let v: u32 = fields[0]
                .parse()
                .map_err(|_| bad("bad influencer id".into()))?;
            let u: u32 = fields[1]
                .parse()
                .map_err(|_| bad("bad influenced id".into()))?;
            let w: f64 = fields[2].parse().map_err(|_| bad("bad omega".into()))?;
            omega.insert((UserId(v), UserId(u)), w);
        }
        Ok(Self { omega })
    }
}

/// Work done by one query, for checking the cost bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCost {
    /// Recent-history records read across all friends.
    pub touched_records: usize,
    pub candidates: usize,
}

/// Strengths, last-scrobble index and per-user recent history, updated in
/// time order.
#[derive(Debug, Clone)]
pub struct InfluenceState {
    config: InfluenceConfig,
    strengths: StrengthTable,
    friends: HashMap<UserId, Vec<UserId>>,
    /// Latest scrobble time and the latest one strictly before it.
    last_scrobble: HashMap<(UserId, ArtistId), (i64, Option<i64>)>,
    recent: HashMap<UserId, VecDeque<(i64, ArtistId)>>,
}

impl InfluenceState {
    pub fn new(config: InfluenceConfig) -> Self {
        Self {
            config,
            strengths: StrengthTable::default(),
            friends: HashMap::new(),
            last_scrobble: HashMap::new(),
            recent: HashMap::new(),
        }
    }

    pub fn config(&self) -> &InfluenceConfig {
        &self.config
    }

    pub fn strengths(&self) -> &StrengthTable {
        &self.strengths
    }

    /// Restores strengths from a checkpoint. Friendships are not implied by the
    /// table and must still be observed.
    pub fn with_strengths(mut self, strengths: StrengthTable) -> Self {
        self.strengths = strengths;
        self
    }

    pub fn last_scrobble(&self, user: UserId, artist: ArtistId) -> Option<i64> {
        self.last_scrobble
            .get(&(user, artist))
            .map(|&(last, _)| last)
    }

    fn last_before(&self, user: UserId, artist: ArtistId, t: i64) -> Option<i64> {
        let &(last, prev) = self.last_scrobble.get(&(user, artist))?;
        if last < t {
            Some(last)
        } else {
            prev
        }
    }

    pub fn friends(&self, user: UserId) -> &[UserId] {
        self.friends.get(&user).map_or(&[], Vec::as_slice)
    }

    /// Sets `omega` to 1 in both directions for a new pair; repeats are no-ops.
    pub fn observe_friendship(&mut self, u: UserId, v: UserId, _t0: i64) -> Result<()> {
        if u == v {
            return Err(Error::SelfFriendship(u.0));
        }
        if let Entry::Vacant(slot) = self.strengths.omega.entry((v, u)) {
            slot.insert(1.0);
            self.strengths.omega.entry((u, v)).or_insert(1.0);
            self.friends.entry(u).or_default().push(v);
            self.friends.entry(v).or_default().push(u);
        } else if !self.friends(u).contains(&v) {
            // Strengths came from a checkpoint.
            self.friends.entry(u).or_default().push(v);
            self.friends.entry(v).or_default().push(u);
        }
        Ok(())
    }

    /// Records `u` scrobbling `a` at `t`. A first-time scrobble strengthens
    /// `omega(v -> u)` for every friend `v` whose last scrobble of `a` lies
    /// within `[t - tau, t)`, by `gamma` of that delay. Scrobbles must arrive
    /// in nondecreasing time order.
    pub fn observe_scrobble(&mut self, u: UserId, a: ArtistId, t: i64) {
        let tau = self.config.tau;
        if !self.last_scrobble.contains_key(&(u, a)) {
            if let Some(friends) = self.friends.get(&u) {
                for &v in friends {
                    let Some(t_prev) = self.last_before(v, a, t) else {
                        continue;
                    };
                    let delta = t - t_prev;
                    if delta > 0 && delta <= tau {
                        let step = gamma_unchecked(delta, self.config.c);
                        *self
                            .strengths
                            .omega
                            .get_mut(&(v, u))
                            .expect("friend pair has omega") += step;
                    }
                }
            }
        }
        match self.last_scrobble.entry((u, a)) {
            Entry::Vacant(slot) => {
                slot.insert((t, None));
            }
            Entry::Occupied(mut slot) => {
                let (last, prev) = slot.get_mut();
                if t > *last {
                    *prev = Some(*last);
                    *last = t;
                }
            }
        }

        let history = self.recent.entry(u).or_default();
        history.push_back((t, a));
        while history.front().is_some_and(|&(ts, _)| ts <= t - tau) {
            history.pop_front();
        }
    }

    /// Top-`k` artists for `u` at time `t`, excluding `known`.
    pub fn recommend(&self, u: UserId, t: i64, k: usize, known: &HashSet<ArtistId>) -> RankedList {
        self.recommend_with_cost(u, t, k, known).0
    }

    pub fn recommend_with_cost(
        &self,
        u: UserId,
        t: i64,
        k: usize,
        known: &HashSet<ArtistId>,
    ) -> (RankedList, QueryCost) {
        let mut cost = QueryCost::default();
        let Some(all_friends) = self.friends.get(&u) else {
            return (RankedList::empty(), cost);
        };
        let omega = |v: UserId| self.strengths.get(v, u).unwrap_or(0.0);
        let capped;
        let friends: &[UserId] = match self.config.max_friends {
            Some(cap) if all_friends.len() > cap => {
                let mut sorted = all_friends.clone();
                sorted.sort_by(|&x, &y| omega(y).total_cmp(&omega(x)).then(x.cmp(&y)));
                sorted.truncate(cap);
                capped = sorted;
                &capped
            }
            _ => all_friends,
        };

        let horizon = t - self.config.tau;
        let mut scores: HashMap<ArtistId, f64> = HashMap::new();
        let mut seen = HashSet::new();
        for &v in friends {
            let Some(history) = self.recent.get(&v) else {
                continue;
            };
            let w = omega(v);
            seen.clear();
            for &(ts, a) in history.iter().rev() {
                cost.touched_records += 1;
                if ts <= horizon {
                    break;
                }
                if ts >= t || !seen.insert(a) || known.contains(&a) {
                    continue;
                }
                *scores.entry(a).or_insert(0.0) += gamma_unchecked(t - ts, self.config.c) * w;
            }
        }
        cost.candidates = scores.len();
        (RankedList::from_scores(scores, k), cost)
    }
}
