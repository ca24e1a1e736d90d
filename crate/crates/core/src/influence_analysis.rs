//! Friend versus non-friend adoption delays.
//!
//! Every first-time scrobble `(u, a, t)` is paired with each earlier scrobbler
//! `v` of `a`; the delay is `t` minus `v`'s last scrobble of `a` before `t`.
//! Comparing the delay distribution over friend pairs with the one over all
//! pairs gives the effectivity curve.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ScrobbleLog, SocialGraph};
use crate::error::{Error, Result};
use crate::ranking::{ArtistId, UserId};
use crate::stats::least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfluenceEvent {
    pub influenced: UserId,
    pub influencer: UserId,
    pub artist: ArtistId,
    pub adoption_time: i64,
    /// Always positive.
    pub delay: i64,
    /// The friendship existed (created at or before `adoption_time`).
    pub is_friend: bool,
}

/// How non-friend prior scrobblers are enumerated. Friend events are always
/// exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonFriendSampling {
    Unbounded,
    /// A uniform sample without replacement of at most `max` non-friend prior
    /// scrobblers per adoption.
    AtMost {
        max: usize,
        seed: u64,
    },
}

/// Single pass over the time-ordered log. Scrobbles sharing a timestamp are
/// handled as one batch: they never influence each other.
pub fn extract_influence_events(
    log: &ScrobbleLog,
    graph: &SocialGraph,
    sampling: NonFriendSampling,
) -> Vec<InfluenceEvent> {
    let num_artists = log.num_artists();
    // Per artist: distinct scrobblers in order of first scrobble, and each
    // one's most recent scrobble time.
    let mut scrobblers: Vec<Vec<UserId>> = vec![Vec::new(); num_artists];
    let mut last: Vec<HashMap<UserId, i64>> = vec![HashMap::new(); num_artists];
    let mut rng = match sampling {
        NonFriendSampling::AtMost { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        NonFriendSampling::Unbounded => None,
    };

    let events = log.events();
    let first_flags = log.first_time_flags();
    let mut out = Vec::new();
    let mut chosen = HashSet::new();
    let mut start = 0;
    while start < events.len() {
        let t = events[start].timestamp;
        let end = start + events[start..].partition_point(|s| s.timestamp == t);

        for (s, _) in events[start..end]
            .iter()
            .zip(&first_flags[start..end])
            .filter(|(_, &first)| first)
        {
            let (u, a) = (s.user, s.artist);
            let prior = &last[a.index()];
            if prior.is_empty() {
                continue;
            }
            let mut friend_count = 0;
            for &(v, created) in graph.neighbors(u) {
                if created > t {
                    continue;
                }
                if let Some(&t_prev) = prior.get(&v) {
                    friend_count += 1;
                    out.push(InfluenceEvent {
                        influenced: u,
                        influencer: v,
                        artist: a,
                        adoption_time: t,
                        delay: t - t_prev,
                        is_friend: true,
                    });
                }
            }

            let pool = &scrobblers[a.index()];
            let non_friends = pool.len() - friend_count;
            let mut emit = |v: UserId| {
                out.push(InfluenceEvent {
                    influenced: u,
                    influencer: v,
                    artist: a,
                    adoption_time: t,
                    delay: t - prior[&v],
                    is_friend: false,
                });
            };
            match (sampling, rng.as_mut()) {
                (NonFriendSampling::AtMost { max, .. }, Some(rng)) if non_friends > max => {
                    chosen.clear();
                    let mut picked = Vec::with_capacity(max);
                    while picked.len() < max {
                        let i = rng.random_range(0..pool.len());
                        let v = pool[i];
                        if !graph.friends_at(u, v, t) && chosen.insert(i) {
                            picked.push(i);
                        }
                    }
                    picked.sort_unstable();
                    for i in picked {
                        emit(pool[i]);
                    }
                }
                _ => {
                    for &v in pool {
                        if !graph.friends_at(u, v, t) {
                            emit(v);
                        }
                    }
                }
            }
        }

        for s in &events[start..end] {
            let entry = &mut last[s.artist.index()];
            if entry.insert(s.user, t).is_none() {
                scrobblers[s.artist.index()].push(s.user);
            }
        }
        start = end;
    }
    out
}

/// Geometric grid from 1 second to `max_delay` with `per_decade` points per
/// factor of ten. The last point is exactly `max_delay`.
pub fn geometric_grid(max_delay: i64, per_decade: usize) -> Vec<f64> {
    let max = (max_delay.max(1)) as f64;
    let per_decade = per_decade.max(1) as f64;
    let steps = (max.log10() * per_decade).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|i| 10f64.powf(i as f64 / per_decade))
        .filter(|&g| g < max)
        .collect();
    grid.push(max);
    grid
}

/// Default grid: 64 points per decade up to the largest delay.
pub fn default_grid(events: &[InfluenceEvent]) -> Vec<f64> {
    let max = events.iter().map(|e| e.delay).max().unwrap_or(1);
    geometric_grid(max, 64)
}

/// Empirical delay CDF sampled on a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayCdf {
    pub grid: Vec<f64>,
    /// Number of events with delay <= threshold.
    pub counts: Vec<u64>,
    pub population: u64,
}

impl DelayCdf {
    pub fn value(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.population as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.value(i)).collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0].is_nan() {
        return Err(Error::GridMismatch(
            "grid must be nonempty and strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Fraction of events with delay at most each threshold, over friend events
/// when `friends_only`, otherwise over all events.
pub fn delay_cdf(events: &[InfluenceEvent], friends_only: bool, grid: &[f64]) -> Result<DelayCdf> {
    check_grid(grid)?;
    let mut delays: Vec<i64> = events
        .iter()
        .filter(|e| !friends_only || e.is_friend)
        .map(|e| e.delay)
        .collect();
    if delays.is_empty() {
        return Err(Error::EmptyPopulation(if friends_only {
            "no friend influence events"
        } else {
            "no influence events"
        }));
    }
    delays.sort_unstable();
    let counts = grid
        .iter()
        .map(|&g| delays.partition_point(|&d| (d as f64) <= g) as u64)
        .collect();
    Ok(DelayCdf {
        grid: grid.to_vec(),
        counts,
        population: delays.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectivityCurve {
    pub grid: Vec<f64>,
    pub eff: Vec<f64>,
}

impl EffectivityCurve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Value at the largest grid point not above `t`.
    pub fn at(&self, t: f64) -> Option<f64> {
        let i = self.grid.partition_point(|&g| g <= t);
        (i > 0).then(|| self.eff[i - 1])
    }
}

/// `Eff(t) = (CDF_F(t) - CDF_A(t)) / CDF_F(t)`; points with `CDF_F(t) = 0`
/// are omitted.
pub fn effectivity_curve(cdf_f: &DelayCdf, cdf_a: &DelayCdf) -> Result<EffectivityCurve> {
    effectivity_curve_with_support(cdf_f, cdf_a, 1)
}

/// Like [`effectivity_curve`] but keeps only points where at least
/// `min_friend_count` friend events fall under the threshold. The relative
/// noise of `Eff` at a point is about `1 / sqrt(friend count)`.
pub fn effectivity_curve_with_support(
    cdf_f: &DelayCdf,
    cdf_a: &DelayCdf,
    min_friend_count: u64,
) -> Result<EffectivityCurve> {
    if cdf_f.grid != cdf_a.grid {
        return Err(Error::GridMismatch(format!(
            "friend grid has {} points, all-users grid has {}",
            cdf_f.grid.len(),
            cdf_a.grid.len()
        )));
    }
    let mut grid = Vec::new();
    let mut eff = Vec::new();
    for i in 0..cdf_f.grid.len() {
        if cdf_f.counts[i] == 0 || cdf_f.counts[i] < min_friend_count {
            continue;
        }
        let f = cdf_f.value(i);
        let a = cdf_a.value(i);
        grid.push(cdf_f.grid[i]);
        eff.push((f - a) / f);
    }
    Ok(EffectivityCurve { grid, eff })
}

/// `Eff(t) ~ intercept + slope * ln(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn fit_log_decay(curve: &EffectivityCurve) -> Result<LogFit> {
    if curve.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: curve.len(),
        });
    }
    if curve.grid.iter().any(|&g| g < 1.0) {
        return Err(Error::Config(
            "log fit thresholds must be at least 1 second".into(),
        ));
    }
    let xs: Vec<f64> = curve.grid.iter().map(|g| g.ln()).collect();
    let fit = least_squares(&xs, &curve.eff).ok_or(Error::TooFewPoints {
        needed: 3,
        got: curve.len(),
    })?;
    Ok(LogFit {
        intercept: fit.intercept,
        slope: fit.slope,
        r_squared: fit.r_squared,
    })
}

/// `influenced,influencer,artist,adoption_time,delay,is_friend` with dense ids.
pub fn write_events_csv<W: Write>(events: &[InfluenceEvent], mut out: W) -> Result<()> {
    writeln!(
        out,
        "influenced,influencer,artist,adoption_time,delay,is_friend"
    )?;
    for e in events {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.influenced, e.influencer, e.artist, e.adoption_time, e.delay, e.is_friend as u8
        )?;
    }
    Ok(())
}

/// `threshold_seconds,value`.
pub fn write_curve_csv<W: Write>(grid: &[f64], values: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "threshold_seconds,value")?;
    for (g, v) in grid.iter().zip(values) {
        writeln!(out, "{g},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FriendEdge, Scrobble};
    use approx::assert_abs_diff_eq;

    fn s(u: u32, a: u32, t: i64) -> Scrobble {
        Scrobble {
            user: UserId(u),
            artist: ArtistId(a),
            timestamp: t,
        }
    }

    fn edge(a: u32, b: u32, t: i64) -> FriendEdge {
        FriendEdge::new(UserId(a), UserId(b), t).unwrap()
    }

    fn ev(delay: i64, is_friend: bool) -> InfluenceEvent {
        InfluenceEvent {
            influenced: UserId(0),
            influencer: UserId(1),
            artist: ArtistId(0),
            adoption_time: 1000,
            delay,
            is_friend,
        }
    }

    #[test]
    fn delay_uses_last_prior_scrobble() {
        let log = ScrobbleLog::from_events(vec![s(1, 0, 100), s(1, 0, 120), s(0, 0, 130)]);
        let g = SocialGraph::from_edges(vec![edge(0, 1, 0)], 2);
        let events = extract_influence_events(&log, &g, NonFriendSampling::Unbounded);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].delay, 10);
        assert!(events[0].is_friend);
        assert_eq!(events[0].influencer, UserId(1));
    }

    #[test]
    fn single_scrobbler_emits_nothing() {
        let log = ScrobbleLog::from_events(vec![s(0, 0, 1), s(0, 0, 5), s(1, 1, 6)]);
        let g = SocialGraph::from_edges(vec![edge(0, 1, 0)], 2);
        assert!(extract_influence_events(&log, &g, NonFriendSampling::Unbounded).is_empty());
    }

    #[test]
    fn later_friendship_counts_as_non_friend() {
        let log = ScrobbleLog::from_events(vec![s(1, 0, 150), s(0, 0, 180)]);
        let g = SocialGraph::from_edges(vec![edge(0, 1, 200)], 2);
        let events = extract_influence_events(&log, &g, NonFriendSampling::Unbounded);
        assert_eq!(events.len(), 1);
        assert!(!events[0].is_friend);
        assert_eq!(events[0].delay, 30);
    }

    #[test]
    fn equal_timestamps_do_not_influence() {
        let log = ScrobbleLog::from_events(vec![s(1, 0, 100), s(0, 0, 100)]);
        let g = SocialGraph::from_edges(vec![edge(0, 1, 0)], 2);
        assert!(extract_influence_events(&log, &g, NonFriendSampling::Unbounded).is_empty());
    }

    #[test]
    fn sampling_caps_non_friends_only() {
        let mut events: Vec<Scrobble> = (2..40).map(|v| s(v, 0, v as i64)).collect();
        events.push(s(1, 0, 50));
        events.push(s(0, 0, 100));
        let log = ScrobbleLog::from_events(events);
        let g = SocialGraph::from_edges(vec![edge(0, 1, 0)], 40);
        let sampled =
            extract_influence_events(&log, &g, NonFriendSampling::AtMost { max: 5, seed: 7 });
        let adoption: Vec<_> = sampled
            .iter()
            .filter(|e| e.influenced == UserId(0))
            .collect();
        assert_eq!(adoption.iter().filter(|e| e.is_friend).count(), 1);
        assert_eq!(adoption.iter().filter(|e| !e.is_friend).count(), 5);
        let distinct: HashSet<_> = adoption.iter().map(|e| e.influencer).collect();
        assert_eq!(distinct.len(), 6);
    }

    #[test]
    fn cdf_counts() {
        let events = vec![ev(10, true), ev(20, true), ev(30, true)];
        let cdf = delay_cdf(&events, false, &[20.0, 30.0, 100.0]).unwrap();
        assert_abs_diff_eq!(cdf.value(0), 2.0 / 3.0);
        assert_eq!(cdf.value(1), 1.0);
        assert_eq!(cdf.value(2), 1.0);
        assert_eq!(cdf.population, 3);
    }

    #[test]
    fn empty_friend_population_is_an_error() {
        let events = vec![ev(10, false)];
        assert!(matches!(
            delay_cdf(&events, true, &[1.0]),
            Err(Error::EmptyPopulation(_))
        ));
        assert!(delay_cdf(&events, false, &[2.0, 1.0]).is_err());
    }

    fn cdf_from_values(grid: &[f64], values: &[f64]) -> DelayCdf {
        DelayCdf {
            grid: grid.to_vec(),
            counts: values.iter().map(|v| (v * 1000.0).round() as u64).collect(),
            population: 1000,
        }
    }

    #[test]
    fn effectivity_arithmetic() {
        let grid = [1.0, 10.0, 100.0];
        let f = cdf_from_values(&grid, &[0.0, 0.5, 1.0]);
        let a = cdf_from_values(&grid, &[0.0, 0.4, 1.0]);
        let curve = effectivity_curve(&f, &a).unwrap();
        assert_eq!(curve.grid, vec![10.0, 100.0]);
        assert_abs_diff_eq!(curve.eff[0], 0.2, epsilon = 1e-12);
        assert_eq!(curve.eff[1], 0.0);
        let same = effectivity_curve(&f, &f).unwrap();
        assert!(same.eff.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn effectivity_rejects_mismatched_grids() {
        let f = cdf_from_values(&[1.0, 2.0], &[0.5, 1.0]);
        let a = cdf_from_values(&[1.0, 3.0], &[0.5, 1.0]);
        assert!(matches!(
            effectivity_curve(&f, &a),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn log_fit_of_exact_model() {
        let tau: f64 = 604800.0;
        let grid = geometric_grid(604800, 8);
        let eff: Vec<f64> = grid.iter().map(|t| 1.0 - t.ln() / tau.ln()).collect();
        let fit = fit_log_decay(&EffectivityCurve { grid, eff }).unwrap();
        assert_abs_diff_eq!(fit.slope, -1.0 / tau.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn log_fit_constant_and_short() {
        let curve = EffectivityCurve {
            grid: vec![1.0, 10.0, 100.0],
            eff: vec![0.3; 3],
        };
        assert_abs_diff_eq!(fit_log_decay(&curve).unwrap().slope, 0.0, epsilon = 1e-15);
        let short = EffectivityCurve {
            grid: vec![1.0, 10.0],
            eff: vec![0.3; 2],
        };
        assert!(matches!(
            fit_log_decay(&short),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn geometric_grid_shape() {
        let grid = geometric_grid(1000, 64);
        assert_eq!(grid[0], 1.0);
        assert_eq!(*grid.last().unwrap(), 1000.0);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(grid.len(), 193);
        assert_eq!(geometric_grid(1, 64), vec![1.0]);
    }
}
