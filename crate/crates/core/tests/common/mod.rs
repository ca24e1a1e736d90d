//! Independent brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempinf::baselines::PopularityWindow;
use tempinf::corpus::{FriendEdge, Scrobble, ScrobbleLog, SocialGraph};
use tempinf::influence_analysis::InfluenceEvent;
use tempinf::influence_rec::{InfluenceConfig, InfluenceState};
use tempinf::{ArtistId, UserId};

pub struct RandomCorpus {
    pub log: ScrobbleLog,
    pub graph: SocialGraph,
}

/// Small random log with many equal timestamps and repeated pairs.
pub fn random_corpus(
    seed: u64,
    max_events: usize,
    max_users: u32,
    max_artists: u32,
    time_span: i64,
) -> RandomCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = rng.random_range(2..=max_users);
    let artists = rng.random_range(1..=max_artists);
    let n = rng.random_range(1..=max_events);
    let events: Vec<Scrobble> = (0..n)
        .map(|_| Scrobble {
            user: UserId(rng.random_range(0..users)),
            artist: ArtistId(rng.random_range(0..artists)),
            timestamp: rng.random_range(0..time_span),
        })
        .collect();
    let edge_count = rng.random_range(0..=(users as usize * 3));
    let edges: Vec<FriendEdge> = (0..edge_count)
        .filter_map(|_| {
            FriendEdge::new(
                UserId(rng.random_range(0..users)),
                UserId(rng.random_range(0..users)),
                rng.random_range(0..time_span),
            )
        })
        .collect();
    RandomCorpus {
        log: ScrobbleLog::from_events(events),
        graph: SocialGraph::from_edges(edges, users as usize),
    }
}

/// Quadratic rescan: every first-time scrobble against every other user's
/// latest strictly earlier scrobble of the same artist.
pub fn brute_force_influence_events(
    log: &ScrobbleLog,
    graph: &SocialGraph,
) -> BTreeSet<InfluenceEvent> {
    let events = log.events();
    let mut first: HashMap<(UserId, ArtistId), i64> = HashMap::new();
    for s in events {
        let t = first.entry((s.user, s.artist)).or_insert(s.timestamp);
        *t = (*t).min(s.timestamp);
    }
    let mut out = BTreeSet::new();
    for (&(u, a), &t) in &first {
        let mut last: HashMap<UserId, i64> = HashMap::new();
        for s in events {
            if s.artist == a && s.user != u && s.timestamp < t {
                let l = last.entry(s.user).or_insert(s.timestamp);
                *l = (*l).max(s.timestamp);
            }
        }
        for (v, l) in last {
            let is_friend = graph
                .edges()
                .iter()
                .any(|e| ((e.a == u && e.b == v) || (e.a == v && e.b == u)) && e.created_at <= t);
            out.insert(InfluenceEvent {
                influenced: u,
                influencer: v,
                artist: a,
                adoption_time: t,
                delay: t - l,
                is_friend,
            });
        }
    }
    out
}

/// Window counts over `(now - tau, now]` recounted from the raw slice.
pub fn recount(stream: &[(i64, ArtistId)], now: i64, tau: i64) -> HashMap<ArtistId, u64> {
    let mut counts = HashMap::new();
    for &(t, a) in stream {
        if t > now - tau && t <= now {
            *counts.entry(a).or_insert(0) += 1;
        }
    }
    counts
}

/// Artists by descending count, ties by ascending id.
pub fn sorted_top(
    counts: &HashMap<ArtistId, u64>,
    k: usize,
    known: &HashSet<ArtistId>,
) -> Vec<(ArtistId, u64)> {
    let mut items: Vec<(ArtistId, u64)> = counts
        .iter()
        .filter(|(a, &c)| c > 0 && !known.contains(a))
        .map(|(&a, &c)| (a, c))
        .collect();
    items.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    items.truncate(k);
    items
}

fn gamma(delta: i64, tau: i64) -> f64 {
    1.0 - (delta.max(1) as f64).ln() / (tau as f64).ln()
}

/// Influence scores rebuilt from the full history visible before `t`:
/// scrobbles strictly before `t` and friendships created strictly before
/// `t`, replaying the strength recursion from scratch.
pub fn rescan_influence_scores(
    scrobbles: &[Scrobble],
    edges: &[FriendEdge],
    user: UserId,
    t: i64,
    tau: i64,
    known: &HashSet<ArtistId>,
) -> HashMap<ArtistId, f64> {
    let friend_since = |x: UserId, y: UserId| {
        edges
            .iter()
            .filter(|e| (e.a == x && e.b == y) || (e.a == y && e.b == x))
            .map(|e| e.created_at)
            .min()
    };
    let visible: Vec<&Scrobble> = scrobbles.iter().filter(|s| s.timestamp < t).collect();
    let last_before = |v: UserId, a: ArtistId, at: i64| {
        visible
            .iter()
            .filter(|s| s.user == v && s.artist == a && s.timestamp < at)
            .map(|s| s.timestamp)
            .max()
    };
    let friends: BTreeSet<UserId> = edges
        .iter()
        .filter(|e| e.created_at < t)
        .filter_map(|e| {
            if e.a == user {
                Some(e.b)
            } else if e.b == user {
                Some(e.a)
            } else {
                None
            }
        })
        .collect();

    let mut scores: HashMap<ArtistId, f64> = HashMap::new();
    for &v in &friends {
        // omega(v -> user): 1 plus the decayed count of user's first-time
        // scrobbles preceded by v while already friends.
        let mut omega = 1.0;
        let mut seen: HashSet<ArtistId> = HashSet::new();
        for s in visible.iter().filter(|s| s.user == user) {
            if !seen.insert(s.artist) {
                continue;
            }
            let befriended = friend_since(user, v).expect("friend");
            if befriended >= s.timestamp {
                continue;
            }
            if let Some(l) = last_before(v, s.artist, s.timestamp) {
                let delta = s.timestamp - l;
                if delta <= tau {
                    omega += gamma(delta, tau);
                }
            }
        }
        let artists: BTreeSet<ArtistId> = visible
            .iter()
            .filter(|s| s.user == v && s.timestamp > t - tau)
            .map(|s| s.artist)
            .collect();
        for a in artists {
            if known.contains(&a) {
                continue;
            }
            let l = last_before(v, a, t).expect("visible scrobble");
            *scores.entry(a).or_insert(0.0) += gamma(t - l, tau) * omega;
        }
    }
    scores
}

/// Outcome of the future-mutation check.
pub struct CausalityCheck {
    pub instants: usize,
    pub queries: usize,
    pub mismatches: Vec<String>,
}

type ListsAt = HashMap<(i64, UserId), Vec<Vec<ArtistId>>>;

fn lists_by_query(
    log: &ScrobbleLog,
    graph: &SocialGraph,
    config: &tempinf::evaluation::EvalConfig,
) -> ListsAt {
    use tempinf::baselines::FactorConfig;
    use tempinf::evaluation::{run_evaluation_with_probe, BlendSpec, StandardSetup};
    let setup = StandardSetup::from_eval(
        config,
        FactorConfig {
            num_features: 5,
            epochs_per_feature: 10,
            ..FactorConfig::default()
        },
    );
    let mut recs = setup.build(&["factor", "popularity", "influence"]).unwrap();
    let blend = BlendSpec::parse("factor:0.5,popularity:0.2,influence:0.3").unwrap();
    let mut out = ListsAt::new();
    run_evaluation_with_probe(log, graph, &mut recs, &[blend], config, |q| {
        out.insert(
            (q.event.timestamp, q.event.user),
            q.lists.iter().map(|l| l.artists().collect()).collect(),
        );
    })
    .unwrap();
    out
}

/// Picks `instants` random evaluation instants; for each one rewrites
/// everything at or after it (except the evaluated scrobbles themselves),
/// replays up to it and compares every list produced there.
pub fn check_causality(seed: u64, instants: usize) -> CausalityCheck {
    use tempinf::evaluation::EvalConfig;
    use tempinf::synthgen::{generate, GenConfig};
    use tempinf::DAY;

    let corpus = generate(&GenConfig {
        num_users: 150,
        num_artists: 300,
        duration: 10 * DAY,
        influence_prob: 0.05,
        homophily_mix: 0.5,
        trend_burst_rate: 0.5,
        seed,
        ..GenConfig::default()
    })
    .unwrap();
    let (log, graph) = (&corpus.log, &corpus.graph);
    let mut config = EvalConfig::new(5 * DAY);
    config.retrain_interval = 2 * DAY;
    let baseline = lists_by_query(log, graph, &config);

    let mut times: Vec<i64> = baseline.keys().map(|&(t, _)| t).collect();
    times.sort_unstable();
    times.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_users = graph.num_users().max(log.num_users()) as u32;
    let num_artists = log.num_artists() as u32;
    let (_, last) = log.span().unwrap();

    let mut check = CausalityCheck {
        instants: 0,
        queries: 0,
        mismatches: Vec::new(),
    };
    for _ in 0..instants {
        let t_star = times[rng.random_range(0..times.len())];
        let flags = log.first_time_flags();
        let mut events = Vec::new();
        for (s, &first) in log.events().iter().zip(&flags) {
            let is_query = s.timestamp == t_star && first;
            if s.timestamp < t_star || is_query {
                events.push(*s);
            } else if rng.random_bool(0.8) {
                events.push(Scrobble {
                    user: UserId(rng.random_range(0..num_users)),
                    artist: ArtistId(rng.random_range(0..num_artists)),
                    timestamp: rng.random_range(t_star..=last + DAY),
                });
            }
        }
        for _ in 0..500 {
            events.push(Scrobble {
                user: UserId(rng.random_range(0..num_users)),
                artist: ArtistId(rng.random_range(0..num_artists)),
                timestamp: rng.random_range(t_star..=t_star + 3600),
            });
        }
        let mut edges: Vec<FriendEdge> = graph
            .edges()
            .iter()
            .copied()
            .filter(|e| e.created_at < t_star)
            .collect();
        edges.extend((0..200).filter_map(|_| {
            FriendEdge::new(
                UserId(rng.random_range(0..num_users)),
                UserId(rng.random_range(0..num_users)),
                rng.random_range(t_star..=t_star + DAY),
            )
        }));
        let mutated_log = ScrobbleLog::from_events(events);
        let mutated_graph = SocialGraph::from_edges(edges, num_users as usize);
        let mut cfg = config.clone();
        cfg.stop_after = Some(t_star);
        let replayed = lists_by_query(&mutated_log, &mutated_graph, &cfg);

        check.instants += 1;
        for (key, lists) in baseline.iter().filter(|((t, _), _)| *t == t_star) {
            check.queries += 1;
            if replayed.get(key) != Some(lists) {
                check
                    .mismatches
                    .push(format!("t={} user={:?}", key.0, key.1));
            }
        }
    }
    check
}

/// Replays `n` events with bursty, tied timestamps and compares the window
/// after every event with a recount from the raw stream.
pub fn check_popularity_stream(seed: u64, n: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = rng.random_range(2..500);
    let artists = rng.random_range(1..60);
    let mut t = 0i64;
    let mut stream = Vec::with_capacity(n);
    let mut window = PopularityWindow::new(tau);
    let mut known: HashSet<ArtistId> = HashSet::new();
    for i in 0..n {
        if rng.random_bool(0.7) {
            t += rng.random_range(0..20);
        }
        let a = ArtistId(rng.random_range(0..artists));
        window.advance(t);
        window.observe(a, t);
        stream.push((t, a));
        // Counts over the stream up to and including this event.
        let start = stream.partition_point(|&(ts, _)| ts <= t - tau);
        let counts = recount(&stream[start..], t, tau);
        for id in 0..artists {
            let a = ArtistId(id);
            let want = counts.get(&a).copied().unwrap_or(0);
            if window.count(a) != want {
                return Err(format!(
                    "seed {seed} event {i}: count of {a:?} is {} not {want}",
                    window.count(a)
                ));
            }
        }
        if i % 7 == 0 {
            known = (0..artists)
                .filter(|_| rng.random_bool(0.2))
                .map(ArtistId)
                .collect();
        }
        let k = 10;
        let expected: Vec<ArtistId> = sorted_top(&counts, k, &known)
            .into_iter()
            .map(|(a, _)| a)
            .collect();
        let got: Vec<ArtistId> = window.recommend_excluding(k, &known).artists().collect();
        if got != expected {
            return Err(format!(
                "seed {seed} event {i}: top-k {got:?} not {expected:?}"
            ));
        }
        let expected_all: Vec<ArtistId> = sorted_top(&counts, k, &HashSet::new())
            .into_iter()
            .map(|(a, _)| a)
            .collect();
        if window.recommend(k).artists().collect::<Vec<_>>() != expected_all {
            return Err(format!("seed {seed} event {i}: unfiltered top-k differs"));
        }
    }
    Ok(())
}

/// Events and edges grouped by timestamp, in replay order.
fn batches(
    scrobbles: &[Scrobble],
    edges: &[FriendEdge],
) -> Vec<(i64, Vec<Scrobble>, Vec<FriendEdge>)> {
    let mut times: Vec<i64> = scrobbles
        .iter()
        .map(|s| s.timestamp)
        .chain(edges.iter().map(|e| e.created_at))
        .collect();
    times.sort_unstable();
    times.dedup();
    times
        .into_iter()
        .map(|t| {
            (
                t,
                scrobbles
                    .iter()
                    .copied()
                    .filter(|s| s.timestamp == t)
                    .collect(),
                edges
                    .iter()
                    .copied()
                    .filter(|e| e.created_at == t)
                    .collect(),
            )
        })
        .collect()
}

/// Drives the recommender in replay order on one random log, checking every
/// query against [`rescan_influence_scores`] and that no strength ever falls.
/// Returns the number of scores compared and of strengthened pairs.
pub fn check_influence_replay(seed: u64) -> Result<(usize, usize), String> {
    let c = random_corpus(seed, 400, 12, 15, 3000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let tau = rng.random_range(50..2000);
    let scrobbles = c.log.events().to_vec();
    let edges = c.graph.edges().to_vec();
    let mut state = InfluenceState::new(InfluenceConfig::new(tau).unwrap());
    let mut omega_before: HashMap<(UserId, UserId), f64> = HashMap::new();
    let mut known: HashMap<UserId, HashSet<ArtistId>> = HashMap::new();
    let (mut compared, mut strengthened) = (0, 0);
    for (t, batch, new_edges) in batches(&scrobbles, &edges) {
        for s in &batch {
            let k = known.get(&s.user).cloned().unwrap_or_default();
            let got = state.recommend(s.user, t, 1000, &k);
            let expected = rescan_influence_scores(&scrobbles, &edges, s.user, t, tau, &k);
            if got.len() != expected.len() {
                return Err(format!(
                    "seed {seed} t {t}: {} scores, expected {}",
                    got.len(),
                    expected.len()
                ));
            }
            compared += got.len();
            for item in got.items() {
                let e = expected.get(&item.artist).copied().unwrap_or(f64::NAN);
                if !((item.score - e).abs() < 1e-9) {
                    return Err(format!("seed {seed} t {t}: score {} vs {e}", item.score));
                }
            }
        }
        for s in &batch {
            state.observe_scrobble(s.user, s.artist, s.timestamp);
            known.entry(s.user).or_default().insert(s.artist);
        }
        for e in &new_edges {
            state.observe_friendship(e.a, e.b, e.created_at).unwrap();
        }
        for (v, u, w) in state.strengths().sorted_entries() {
            let prev = omega_before.insert((v, u), w).unwrap_or(1.0);
            if w < prev || w < 1.0 {
                return Err(format!(
                    "seed {seed}: omega {v:?}->{u:?} fell from {prev} to {w}"
                ));
            }
            strengthened += usize::from(w > 1.0);
        }
    }
    Ok((compared, strengthened))
}
