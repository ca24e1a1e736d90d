use std::collections::{HashMap, HashSet};

use super::blend::blend_ranked_lists;
use super::report::{EvalReport, EventRecord};
use super::sweep::{ComponentTrace, TracedEvent};
use super::{BlendSpec, EvalConfig, OnlineRecommender};
use crate::corpus::{Scrobble, ScrobbleLog, SocialGraph};
use crate::error::{Error, Result};
use crate::ranking::{ArtistId, RankedList, UserId};

/// What the probe sees for each evaluation query: the event and the lists of
/// every recommender followed by every blend.
pub struct QueryProbe<'a> {
    pub event: &'a Scrobble,
    pub names: &'a [String],
    pub lists: &'a [RankedList],
}

fn check_range(log: &ScrobbleLog, config: &EvalConfig) -> Result<()> {
    config.validate()?;
    let (first, last) = log.span().unwrap_or((0, -1));
    if log.is_empty()
        || config.test_start >= config.test_end
        || config.test_start > last
        || config.test_end <= first
    {
        return Err(Error::TestRange {
            start: config.test_start,
            end: config.test_end,
            first,
            last,
        });
    }
    Ok(())
}

/// Core loop shared by evaluation and tracing; `on_query` receives each
/// evaluation event with the component lists.
fn replay(
    log: &ScrobbleLog,
    graph: &SocialGraph,
    recommenders: &mut [Box<dyn OnlineRecommender>],
    config: &EvalConfig,
    mut on_query: impl FnMut(&Scrobble, Vec<RankedList>) -> Result<()>,
) -> Result<()> {
    check_range(log, config)?;
    let k = config.max_k();
    let events = log.events();
    let first_flags = log.first_time_flags();
    let edges = graph.edges();
    let mut known: HashMap<UserId, HashSet<ArtistId>> = HashMap::new();
    let empty = HashSet::new();

    let (mut si, mut ei) = (0, 0);
    while si < events.len() || ei < edges.len() {
        let t = match (events.get(si), edges.get(ei)) {
            (Some(s), Some(e)) => s.timestamp.min(e.created_at),
            (Some(s), None) => s.timestamp,
            (None, Some(e)) => e.created_at,
            (None, None) => unreachable!(),
        };
        if config.stop_after.is_some_and(|stop| t > stop) {
            break;
        }
        for rec in recommenders.iter_mut() {
            rec.advance(t)?;
        }

        let batch_end = si + events[si..].partition_point(|s| s.timestamp == t);
        if t >= config.test_start && t < config.test_end {
            for i in si..batch_end {
                if config.first_time_only && !first_flags[i] {
                    continue;
                }
                let s = &events[i];
                let user_known = known.get(&s.user).unwrap_or(&empty);
                let lists = recommenders
                    .iter_mut()
                    .map(|rec| rec.recommend(s.user, t, k, user_known))
                    .collect();
                on_query(s, lists)?;
            }
        }

        for s in &events[si..batch_end] {
            for rec in recommenders.iter_mut() {
                rec.observe_scrobble(s);
            }
            known.entry(s.user).or_default().insert(s.artist);
        }
        si = batch_end;
        while ei < edges.len() && edges[ei].created_at == t {
            for rec in recommenders.iter_mut() {
                rec.observe_friendship(&edges[ei]);
            }
            ei += 1;
        }
    }
    Ok(())
}

fn resolve_blends(
    recommenders: &[Box<dyn OnlineRecommender>],
    blends: &[BlendSpec],
) -> Result<Vec<Vec<(usize, f64)>>> {
    blends
        .iter()
        .map(|b| {
            b.components
                .iter()
                .map(|(name, w)| {
                    recommenders
                        .iter()
                        .position(|r| r.name() == name)
                        .map(|i| (i, *w))
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "blend {} names unknown recommender {name}",
                                b.name
                            ))
                        })
                })
                .collect()
        })
        .collect()
}

/// Replays `log` and scores every recommender and blend on each evaluation
/// event.
pub fn run_evaluation(
    log: &ScrobbleLog,
    graph: &SocialGraph,
    recommenders: &mut [Box<dyn OnlineRecommender>],
    blends: &[BlendSpec],
    config: &EvalConfig,
) -> Result<EvalReport> {
    run_evaluation_with_probe(log, graph, recommenders, blends, config, |_| {})
}

pub fn run_evaluation_with_probe(
    log: &ScrobbleLog,
    graph: &SocialGraph,
    recommenders: &mut [Box<dyn OnlineRecommender>],
    blends: &[BlendSpec],
    config: &EvalConfig,
    mut probe: impl FnMut(&QueryProbe<'_>),
) -> Result<EvalReport> {
    let resolved = resolve_blends(recommenders, blends)?;
    let mut names: Vec<String> = recommenders.iter().map(|r| r.name().to_owned()).collect();
    names.extend(blends.iter().map(|b| b.name.clone()));
    let k = config.max_k();
    let mut records = Vec::new();

    replay(log, graph, recommenders, config, |event, mut lists| {
        for parts in &resolved {
            let inputs: Vec<(&RankedList, f64)> =
                parts.iter().map(|&(i, w)| (&lists[i], w)).collect();
            let blended = blend_ranked_lists(&inputs, k);
            lists.push(blended);
        }
        probe(&QueryProbe {
            event,
            names: &names,
            lists: &lists,
        });
        records.push(EventRecord {
            timestamp: event.timestamp,
            user: event.user,
            artist: event.artist,
            ranks: lists
                .iter()
                .map(|l| l.rank(event.artist).map(|r| r as u32))
                .collect(),
        });
        Ok(())
    })?;
    Ok(EvalReport::new(names, config.k_values.clone(), records))
}

/// Replays once and keeps every component's list per evaluation event, for
/// blending under many weight vectors.
pub fn trace_components(
    log: &ScrobbleLog,
    graph: &SocialGraph,
    recommenders: &mut [Box<dyn OnlineRecommender>],
    config: &EvalConfig,
) -> Result<ComponentTrace> {
    let names = recommenders.iter().map(|r| r.name().to_owned()).collect();
    let mut events = Vec::new();
    replay(log, graph, recommenders, config, |event, lists| {
        events.push(TracedEvent {
            timestamp: event.timestamp,
            user: event.user,
            artist: event.artist,
            lists: lists.iter().map(|l| l.artists().collect()).collect(),
        });
        Ok(())
    })?;
    Ok(ComponentTrace { names, events })
}
