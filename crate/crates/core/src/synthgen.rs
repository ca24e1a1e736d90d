//! Synthetic friendship graphs and listening timelines.
//!
//! The generator plants three independent mechanisms behind each scrobble:
//!
//! * taste: every user owns a repertoire of artists sampled by latent-vector
//!   affinity and base popularity, and walks through it in shuffled order, so
//!   friends with similar taste end up with similar artists but adopt them at
//!   unrelated times;
//! * trend: popularity bursts shared by all users;
//! * influence: when a user adopts an artist, each friend who does not know
//!   it yet adopts it with a fixed probability after a log-uniform delay.
//!
//! Every event is tagged with the mechanism that produced it.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::TAU;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand::seq::index::sample_weighted;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{FriendEdge, Scrobble, ScrobbleLog, SocialGraph, Vocab};
use crate::error::{Error, Result};
use crate::ranking::{ArtistId, UserId};
use crate::{DAY, WEEK};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub num_users: usize,
    pub num_artists: usize,
    /// Exponent of the shifted power law `P(d) ~ (d + shift)^-exponent`.
    pub degree_exponent: f64,
    /// Fixed shift; when absent it is calibrated to `target_mean_degree`.
    pub degree_shift: Option<f64>,
    pub target_mean_degree: f64,
    pub min_degree: usize,
    pub zipf_exponent: f64,
    /// Seconds.
    pub duration: i64,
    /// Bounds of the per-user daily base activity.
    pub daily_activity_min: f64,
    pub daily_activity_max: f64,
    /// Relative amplitude of the 24-hour activity cycle.
    pub periodicity_amplitude: f64,
    pub taste_dims: usize,
    /// Inverse temperature of the taste affinity `exp(sharpness * <x_u, y_a>)`.
    pub taste_sharpness: f64,
    /// Weight of the friends' mean taste when smoothing user vectors.
    pub homophily_mix: f64,
    pub homophily_rounds: usize,
    /// Chance that a base event adopts a new repertoire artist instead of
    /// relistening to a known one.
    pub explore_prob: f64,
    pub influence_prob: f64,
    /// Support of the log-uniform influence delay, seconds.
    pub influence_delay_min: i64,
    pub influence_delay_max: i64,
    /// Expected bursts per day.
    pub trend_burst_rate: f64,
    pub burst_magnitude: f64,
    pub burst_duration: i64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            num_users: 1000,
            num_artists: 5000,
            degree_exponent: 3.8,
            degree_shift: None,
            target_mean_degree: 8.0,
            min_degree: 1,
            zipf_exponent: 1.0,
            duration: 4 * WEEK,
            daily_activity_min: 5.0,
            daily_activity_max: 500.0,
            periodicity_amplitude: 0.5,
            taste_dims: 8,
            taste_sharpness: 2.0,
            homophily_mix: 0.0,
            homophily_rounds: 2,
            explore_prob: 0.2,
            influence_prob: 0.0,
            influence_delay_min: 1,
            influence_delay_max: WEEK,
            trend_burst_rate: 0.0,
            burst_magnitude: 20.0,
            burst_duration: 2 * DAY,
            seed: 0,
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit("periodicity_amplitude", self.periodicity_amplitude)?;
        check_unit("homophily_mix", self.homophily_mix)?;
        check_unit("explore_prob", self.explore_prob)?;
        check_unit("influence_prob", self.influence_prob)?;
        if self.num_users < 2 {
            return Err(Error::Config("need at least two users".into()));
        }
        if self.num_artists == 0 || self.taste_dims == 0 {
            return Err(Error::Config(
                "num_artists and taste_dims must be positive".into(),
            ));
        }
        if self.duration <= 0 {
            return Err(Error::Config("duration must be positive".into()));
        }
        if !(self.daily_activity_min > 0.0 && self.daily_activity_min <= self.daily_activity_max) {
            return Err(Error::Config(
                "need 0 < daily_activity_min <= daily_activity_max".into(),
            ));
        }
        if !(1 <= self.influence_delay_min && self.influence_delay_min <= self.influence_delay_max)
        {
            return Err(Error::Config(
                "need 1 <= influence_delay_min <= influence_delay_max".into(),
            ));
        }
        if !(self.degree_exponent > 1.0) || self.min_degree == 0 {
            return Err(Error::Config(
                "degree_exponent must exceed 1 and min_degree be positive".into(),
            ));
        }
        if self.trend_burst_rate < 0.0 || self.burst_magnitude < 1.0 || self.burst_duration <= 0 {
            return Err(Error::Config("bad burst parameters".into()));
        }
        Ok(())
    }

    fn days(&self) -> f64 {
        self.duration as f64 / DAY as f64
    }

    /// Inclusive upper bound on a user's event count.
    pub fn activity_cap(&self) -> usize {
        (self.daily_activity_max * self.days()).floor() as usize
    }
}

/// Why the generator emitted a scrobble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Taste,
    Trend,
    Influence(UserId),
}

/// Provenance of every scrobble, aligned with the log's event order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub provenance: Vec<Provenance>,
}

impl GroundTruth {
    /// `timestamp,user,artist,provenance,influencer`.
    pub fn write_csv<W: Write>(&self, log: &ScrobbleLog, vocab: &Vocab, mut out: W) -> Result<()> {
        writeln!(out, "timestamp,user,artist,provenance,influencer")?;
        for (s, p) in log.events().iter().zip(&self.provenance) {
            let user = vocab.users.name(s.user.0);
            let artist = vocab.artists.name(s.artist.0);
            match p {
                Provenance::Taste => writeln!(out, "{},{user},{artist},taste,", s.timestamp)?,
                Provenance::Trend => writeln!(out, "{},{user},{artist},trend,", s.timestamp)?,
                Provenance::Influence(v) => writeln!(
                    out,
                    "{},{user},{artist},influence,{}",
                    s.timestamp,
                    vocab.users.name(v.0)
                )?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub vocab: Vocab,
    pub graph: SocialGraph,
    pub log: ScrobbleLog,
    pub truth: GroundTruth,
}

/// Graph and timeline from `config.seed`.
pub fn generate(config: &GenConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let graph = generate_graph(config, &mut rng)?;
    let (log, truth) = generate_timeline(&graph, config, &mut rng)?;
    Ok(SyntheticCorpus {
        vocab: Vocab::numeric(config.num_users, config.num_artists),
        graph,
        log,
        truth,
    })
}

fn degree_weights(exponent: f64, shift: f64, min: usize, max: usize) -> Vec<f64> {
    (min..=max)
        .map(|d| (d as f64 + shift).powf(-exponent))
        .collect()
}

fn degree_mean(exponent: f64, shift: f64, min: usize, max: usize) -> f64 {
    let w = degree_weights(exponent, shift, min, max);
    let total: f64 = w.iter().sum();
    w.iter()
        .enumerate()
        .map(|(i, p)| (min + i) as f64 * p)
        .sum::<f64>()
        / total
}

/// Shift giving the shifted power law on `[min, max]` the requested mean.
pub fn calibrate_degree_shift(
    exponent: f64,
    target_mean: f64,
    min: usize,
    max: usize,
) -> Result<f64> {
    let mut lo = -(min as f64) + 1e-9;
    let mut hi = 1.0;
    while degree_mean(exponent, hi, min, max) < target_mean {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Config(format!(
                "mean degree {target_mean} unreachable with at most {max} friends"
            )));
        }
    }
    if degree_mean(exponent, lo, min, max) > target_mean {
        return Err(Error::Config(format!(
            "mean degree {target_mean} below the minimum degree"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if degree_mean(exponent, mid, min, max) < target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Configuration-model graph with shifted power-law degrees.
pub fn generate_graph<R: Rng + ?Sized>(config: &GenConfig, rng: &mut R) -> Result<SocialGraph> {
    config.validate()?;
    let n = config.num_users;
    let max = n - 1;
    if config.min_degree > max {
        return Err(Error::Config("min_degree exceeds num_users - 1".into()));
    }
    let shift = match config.degree_shift {
        Some(s) => s,
        None => calibrate_degree_shift(
            config.degree_exponent,
            config.target_mean_degree,
            config.min_degree,
            max,
        )?,
    };
    let dist = WeightedIndex::new(degree_weights(
        config.degree_exponent,
        shift,
        config.min_degree,
        max,
    ))
    .map_err(|e| Error::Config(format!("degree distribution: {e}")))?;
    let mut last = None;
    for _ in 0..DEGREE_DRAWS {
        let mut degrees: Vec<usize> = (0..n)
            .map(|_| config.min_degree + dist.sample(rng))
            .collect();
        while degrees.iter().sum::<usize>() % 2 == 1 {
            let i = rng.random_range(0..n);
            degrees[i] = config.min_degree + dist.sample(rng);
        }
        match generate_graph_from_degrees(&degrees, config.duration, rng) {
            Err(e @ Error::InfeasibleDegrees { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one draw"))
}

/// Fresh degree sequences tried before giving up on a graph.
const DEGREE_DRAWS: usize = 10;

/// Realises `degrees` exactly; edge creation times fall in the first tenth
/// of `duration`.
pub fn generate_graph_from_degrees<R: Rng + ?Sized>(
    degrees: &[usize],
    duration: i64,
    rng: &mut R,
) -> Result<SocialGraph> {
    if degrees.iter().sum::<usize>() % 2 == 1 {
        return Err(Error::Config("degree sum must be even".into()));
    }
    let mut stubs: Vec<u32> = degrees
        .iter()
        .enumerate()
        .flat_map(|(u, &d)| std::iter::repeat_n(u as u32, d))
        .collect();
    stubs.shuffle(rng);
    let mut edges: Vec<(u32, u32)> = stubs.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    rewire(&mut edges, rng)?;

    let horizon = (duration / 10).max(1);
    let built = edges.into_iter().map(|(a, b)| {
        FriendEdge::new(UserId(a), UserId(b), rng.random_range(0..horizon))
            .expect("rewiring leaves no self-loops")
    });
    Ok(SocialGraph::from_edges(
        built.collect::<Vec<_>>(),
        degrees.len(),
    ))
}

fn pair_key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Double-edge swaps until no self-loop or multi-edge remains.
fn rewire<R: Rng + ?Sized>(edges: &mut [(u32, u32)], rng: &mut R) -> Result<()> {
    use std::collections::HashMap;
    let m = edges.len();
    let mut counts: HashMap<(u32, u32), u32> = HashMap::new();
    for &(a, b) in edges.iter() {
        *counts.entry(pair_key(a, b)).or_default() += 1;
    }
    let is_bad = |e: (u32, u32), counts: &HashMap<(u32, u32), u32>| {
        e.0 == e.1 || counts[&pair_key(e.0, e.1)] > 1
    };
    let mut bad: Vec<usize> = (0..m).filter(|&i| is_bad(edges[i], &counts)).collect();
    let limit = 100 * m + 1000;
    let mut attempts = 0;
    while let Some(i) = bad.pop() {
        if !is_bad(edges[i], &counts) {
            continue;
        }
        attempts += 1;
        if attempts > limit {
            return Err(Error::InfeasibleDegrees { attempts: limit });
        }
        let j = rng.random_range(0..m);
        let (a, b) = edges[i];
        let (mut c, mut d) = edges[j];
        if rng.random_bool(0.5) {
            std::mem::swap(&mut c, &mut d);
        }
        let first = pair_key(a, c);
        let second = pair_key(b, d);
        let valid = j != i
            && a != c
            && b != d
            && first != second
            && !counts.contains_key(&first)
            && !counts.contains_key(&second);
        if valid {
            for key in [pair_key(a, b), pair_key(c, d)] {
                let n = counts.get_mut(&key).expect("edge counted");
                *n -= 1;
                if *n == 0 {
                    counts.remove(&key);
                }
            }
            counts.insert(first, 1);
            counts.insert(second, 1);
            edges[i] = (a, c);
            edges[j] = (b, d);
        } else {
            bad.push(i);
        }
    }
    Ok(())
}

fn unit_vector<R: Rng + ?Sized>(dims: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dims).map(|_| rng.sample(StandardNormal)).collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// User taste vectors pulled toward the friends' mean.
fn user_tastes<R: Rng + ?Sized>(
    graph: &SocialGraph,
    config: &GenConfig,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let dims = config.taste_dims;
    let mut tastes: Vec<Vec<f64>> = (0..config.num_users)
        .map(|_| unit_vector(dims, rng))
        .collect();
    if config.homophily_mix == 0.0 {
        return tastes;
    }
    for _ in 0..config.homophily_rounds {
        tastes = (0..config.num_users)
            .map(|u| {
                let friends = graph.neighbors(UserId(u as u32));
                if friends.is_empty() {
                    return tastes[u].clone();
                }
                let mut mean = vec![0.0; dims];
                for (v, _) in friends {
                    for (m, x) in mean.iter_mut().zip(&tastes[v.index()]) {
                        *m += x;
                    }
                }
                normalize(&mut mean);
                let h = config.homophily_mix;
                let mut mixed: Vec<f64> = tastes[u]
                    .iter()
                    .zip(&mean)
                    .map(|(own, m)| (1.0 - h) * own + h * m)
                    .collect();
                normalize(&mut mixed);
                mixed
            })
            .collect();
    }
    tastes
}

/// Log-uniform delay on `[min, max]` seconds.
fn influence_delay<R: Rng + ?Sized>(config: &GenConfig, rng: &mut R) -> i64 {
    let lo = (config.influence_delay_min as f64).ln();
    let hi = (config.influence_delay_max as f64).ln();
    let d = (lo + rng.random::<f64>() * (hi - lo)).exp().floor() as i64;
    d.clamp(config.influence_delay_min, config.influence_delay_max)
}

/// Event times for one user following the daily activity cycle.
fn event_times<R: Rng + ?Sized>(count: usize, config: &GenConfig, rng: &mut R) -> Vec<i64> {
    let amp = config.periodicity_amplitude;
    let mut times = Vec::with_capacity(count);
    while times.len() < count {
        let t = rng.random_range(0..config.duration);
        let phase = TAU * ((t % DAY) as f64 / DAY as f64 - 14.0 / 24.0);
        if rng.random::<f64>() * (1.0 + amp) < 1.0 + amp * phase.sin() {
            times.push(t);
        }
    }
    times.sort_unstable();
    times
}

struct Burst {
    artist: ArtistId,
    start: i64,
    end: i64,
    mass: f64,
}

enum Pending {
    Base(u32),
    Influence {
        user: u32,
        artist: ArtistId,
        by: UserId,
    },
}

struct UserState {
    known: HashSet<ArtistId>,
    adopted: Vec<ArtistId>,
    repertoire: Vec<ArtistId>,
    next: usize,
    emitted: usize,
    base_left: usize,
}

/// Scrobble timeline over `graph`, time-sorted, with its ground truth.
pub fn generate_timeline<R: Rng + ?Sized>(
    graph: &SocialGraph,
    config: &GenConfig,
    rng: &mut R,
) -> Result<(ScrobbleLog, GroundTruth)> {
    config.validate()?;
    let n = config.num_users;
    let days = config.days();
    let cap = config.activity_cap();

    let popularity: Vec<f64> = (0..config.num_artists)
        .map(|r| ((r + 1) as f64).powf(-config.zipf_exponent))
        .collect();
    let pop_total: f64 = popularity.iter().sum();
    let artist_tastes: Vec<Vec<f64>> = (0..config.num_artists)
        .map(|_| {
            (0..config.taste_dims)
                .map(|_| rng.sample(StandardNormal))
                .collect()
        })
        .collect();
    let tastes = user_tastes(graph, config, rng);

    let bursts = if config.trend_burst_rate > 0.0 {
        let count = rand_distr::Poisson::new(config.trend_burst_rate * days)
            .map_err(|e| Error::Config(format!("burst rate: {e}")))?
            .sample(rng) as usize;
        let pick = WeightedIndex::new(&popularity).expect("positive popularity");
        (0..count)
            .map(|_| {
                let artist = pick.sample(rng);
                let start = rng.random_range(0..config.duration);
                Burst {
                    artist: ArtistId(artist as u32),
                    start,
                    end: start + config.burst_duration,
                    mass: (config.burst_magnitude - 1.0) * popularity[artist] / pop_total,
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    let (min_rate, max_rate) = (config.daily_activity_min, config.daily_activity_max);
    let mut users = Vec::with_capacity(n);
    let mut queue: BinaryHeap<Reverse<(i64, u64, usize)>> = BinaryHeap::new();
    let mut pending: Vec<Pending> = Vec::new();
    for u in 0..n {
        let rate = 1.0 / (1.0 / min_rate - rng.random::<f64>() * (1.0 / min_rate - 1.0 / max_rate));
        let base = ((rate * days).ceil() as usize).min(cap);
        let size = (((base as f64) * config.explore_prob * 1.2).ceil() as usize + 5)
            .min(config.num_artists);
        let x = &tastes[u];
        let weights: Vec<f64> = artist_tastes
            .iter()
            .zip(&popularity)
            .map(|(y, p)| {
                p * (config.taste_sharpness * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
                    .exp()
            })
            .collect();
        let mut repertoire: Vec<ArtistId> =
            sample_weighted(rng, config.num_artists, |i| weights[i], size)
                .map_err(|e| Error::Config(format!("taste weights: {e}")))?
                .into_iter()
                .map(|i| ArtistId(i as u32))
                .collect();
        repertoire.sort_unstable();
        repertoire.shuffle(rng);
        for t in event_times(base, config, rng) {
            queue.push(Reverse((t, pending.len() as u64, pending.len())));
            pending.push(Pending::Base(u as u32));
        }
        users.push(UserState {
            known: HashSet::new(),
            adopted: Vec::new(),
            repertoire,
            next: 0,
            emitted: 0,
            base_left: base,
        });
    }

    let mut events = Vec::new();
    let mut provenance = Vec::new();
    while let Some(Reverse((t, _, slot))) = queue.pop() {
        let (user, artist, tag) = match pending[slot] {
            Pending::Base(u) => {
                let state = &mut users[u as usize];
                state.base_left -= 1;
                let trend_mass: f64 = bursts
                    .iter()
                    .filter(|b| b.start <= t && t < b.end)
                    .map(|b| b.mass)
                    .sum();
                if trend_mass > 0.0 && rng.random::<f64>() * (1.0 + trend_mass) >= 1.0 {
                    let mut target = rng.random::<f64>() * trend_mass;
                    let mut chosen = None;
                    for b in bursts.iter().filter(|b| b.start <= t && t < b.end) {
                        chosen = Some(b.artist);
                        target -= b.mass;
                        if target < 0.0 {
                            break;
                        }
                    }
                    (u, chosen.expect("active burst"), Provenance::Trend)
                } else {
                    let explore =
                        state.adopted.is_empty() || rng.random::<f64>() < config.explore_prob;
                    let mut fresh = None;
                    if explore {
                        while state.next < state.repertoire.len() {
                            let a = state.repertoire[state.next];
                            state.next += 1;
                            if !state.known.contains(&a) {
                                fresh = Some(a);
                                break;
                            }
                        }
                    }
                    let artist = match fresh {
                        Some(a) => a,
                        None if state.adopted.is_empty() => state.repertoire[0],
                        None => state.adopted[rng.random_range(0..state.adopted.len())],
                    };
                    (u, artist, Provenance::Taste)
                }
            }
            Pending::Influence { user, artist, by } => {
                let state = &users[user as usize];
                if state.known.contains(&artist) || state.emitted + state.base_left >= cap {
                    continue;
                }
                (user, artist, Provenance::Influence(by))
            }
        };

        let state = &mut users[user as usize];
        state.emitted += 1;
        events.push(Scrobble {
            user: UserId(user),
            artist,
            timestamp: t,
        });
        provenance.push(tag);
        if !state.known.insert(artist) {
            continue;
        }
        state.adopted.push(artist);

        if config.influence_prob > 0.0 {
            for &(friend, created) in graph.neighbors(UserId(user)) {
                if created > t || users[friend.index()].known.contains(&artist) {
                    continue;
                }
                if rng.random::<f64>() >= config.influence_prob {
                    continue;
                }
                let at = t + influence_delay(config, rng);
                if at >= config.duration {
                    continue;
                }
                queue.push(Reverse((at, pending.len() as u64, pending.len())));
                pending.push(Pending::Influence {
                    user: friend.0,
                    artist,
                    by: UserId(user),
                });
            }
        }
    }

    Ok((ScrobbleLog::from_events(events), GroundTruth { provenance }))
}
