use std::collections::HashMap;
use std::io::Write;

use super::blend::reciprocal_score;
use super::replay::trace_components;
use super::{dcg_at_k, EvalConfig, OnlineRecommender, StandardSetup};
use crate::baselines::FactorConfig;
use crate::corpus::{ScrobbleLog, SocialGraph};
use crate::error::{Error, Result};
use crate::ranking::{ArtistId, UserId};

/// Component lists of one evaluation event, artists in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedEvent {
    pub timestamp: i64,
    pub user: UserId,
    pub artist: ArtistId,
    pub lists: Vec<Vec<ArtistId>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTrace {
    pub names: Vec<String>,
    pub events: Vec<TracedEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub weights: Vec<f64>,
    /// Mean DCG per requested `k`, in order.
    pub mean_dcg: Vec<f64>,
}

/// All weight vectors of length `n` on the simplex with the given step,
/// e.g. 11 pairs or 66 triples for a step of 0.1.
pub fn simplex_grid(n: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    if n == 0 || !(step > 0.0 && step <= 1.0) {
        return Err(Error::Config(format!(
            "bad simplex grid: n={n}, step={step}"
        )));
    }
    let units = (1.0 / step).round() as usize;
    if ((units as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("step {step} does not divide one")));
    }
    fn fill(prefix: &mut Vec<usize>, left: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for u in (0..=left).rev() {
            prefix.push(u);
            fill(prefix, left - u, n, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    fill(&mut Vec::with_capacity(n), units, n, &mut raw);
    Ok(raw
        .into_iter()
        .map(|v| v.into_iter().map(|u| u as f64 / units as f64).collect())
        .collect())
}

/// Precomputed union of the component lists of one event.
struct Prepared {
    target: Vec<Option<usize>>,
    others: Vec<Vec<Option<usize>>>,
    other_ids: Vec<ArtistId>,
    artist: ArtistId,
}

fn prepare(event: &TracedEvent) -> Prepared {
    let n = event.lists.len();
    let mut table: HashMap<ArtistId, Vec<Option<usize>>> = HashMap::new();
    for (i, list) in event.lists.iter().enumerate() {
        for (pos, &a) in list.iter().enumerate() {
            table.entry(a).or_insert_with(|| vec![None; n])[i] = Some(pos + 1);
        }
    }
    let target = table.remove(&event.artist).unwrap_or_else(|| vec![None; n]);
    let (other_ids, others) = table.into_iter().unzip();
    Prepared {
        target,
        others,
        other_ids,
        artist: event.artist,
    }
}

fn rank_under(p: &Prepared, weights: &[f64]) -> Option<usize> {
    let score = reciprocal_score(&p.target, weights);
    if score <= 0.0 {
        return None;
    }
    let better = p
        .others
        .iter()
        .zip(&p.other_ids)
        .filter(|(ranks, &a)| {
            let s = reciprocal_score(ranks, weights);
            s > score || (s == score && a < p.artist)
        })
        .count();
    Some(better + 1)
}

/// Mean DCG of the reciprocal-rank blend for every weight vector.
pub fn sweep_weights(
    trace: &ComponentTrace,
    weights: &[Vec<f64>],
    k_values: &[usize],
) -> Result<Vec<SweepRow>> {
    let n = trace.names.len();
    if let Some(bad) = weights.iter().find(|w| w.len() != n) {
        return Err(Error::Config(format!(
            "weight vector of length {} for {n} components",
            bad.len()
        )));
    }
    let prepared: Vec<Prepared> = trace.events.iter().map(prepare).collect();
    let count = prepared.len().max(1) as f64;
    Ok(weights
        .iter()
        .map(|w| {
            let mut sums = vec![0.0; k_values.len()];
            for p in &prepared {
                let rank = rank_under(p, w);
                for (s, &k) in sums.iter_mut().zip(k_values) {
                    *s += dcg_at_k(rank, k);
                }
            }
            SweepRow {
                weights: w.clone(),
                mean_dcg: sums.into_iter().map(|s| s / count).collect(),
            }
        })
        .collect())
}

/// Replays once with the given components and sweeps the simplex grid.
pub fn sweep_blend_weights(
    log: &ScrobbleLog,
    graph: &SocialGraph,
    recommenders: &mut [Box<dyn OnlineRecommender>],
    config: &EvalConfig,
    step: f64,
) -> Result<(ComponentTrace, Vec<SweepRow>)> {
    let trace = trace_components(log, graph, recommenders, config)?;
    let grid = simplex_grid(trace.names.len(), step)?;
    let rows = sweep_weights(&trace, &grid, &config.k_values)?;
    Ok((trace, rows))
}

/// Weight sweep repeated for each time frame in `taus`; the popularity window
/// and the influence frame share the value.
pub fn sweep_tau(
    log: &ScrobbleLog,
    graph: &SocialGraph,
    components: &[&str],
    factor: FactorConfig,
    config: &EvalConfig,
    taus: &[i64],
    step: f64,
) -> Result<Vec<(i64, Vec<SweepRow>)>> {
    taus.iter()
        .map(|&tau| {
            let config = EvalConfig {
                tau,
                ..config.clone()
            };
            let mut recommenders = StandardSetup::from_eval(&config, factor).build(components)?;
            let (_, rows) = sweep_blend_weights(log, graph, &mut recommenders, &config, step)?;
            Ok((tau, rows))
        })
        .collect()
}

/// `tau,w_<name>...,dcg@<k>...`, one line per time frame and weight vector.
pub fn write_sweep_csv<W: Write>(
    mut w: W,
    names: &[String],
    k_values: &[usize],
    sweeps: &[(i64, Vec<SweepRow>)],
) -> Result<()> {
    let mut header = vec!["tau".to_owned()];
    header.extend(names.iter().map(|n| format!("w_{n}")));
    header.extend(k_values.iter().map(|k| format!("dcg@{k}")));
    writeln!(w, "{}", header.join(","))?;
    for (tau, rows) in sweeps {
        for row in rows {
            let cells: Vec<String> = std::iter::once(tau.to_string())
                .chain(row.weights.iter().map(|x| format!("{x:.2}")))
                .chain(row.mean_dcg.iter().map(|x| format!("{x:.6}")))
                .collect();
            writeln!(w, "{}", cells.join(","))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::blended_rank;

    #[test]
    fn grid_sizes() {
        assert_eq!(simplex_grid(2, 0.1).unwrap().len(), 11);
        let triples = simplex_grid(3, 0.1).unwrap();
        assert_eq!(triples.len(), 66);
        for w in &triples {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(simplex_grid(2, 0.3).is_err());
    }

    #[test]
    fn prepared_rank_matches_blended_rank() {
        let lists = vec![
            vec![ArtistId(3), ArtistId(1), ArtistId(7), ArtistId(2)],
            vec![ArtistId(7), ArtistId(5), ArtistId(3)],
            vec![ArtistId(9), ArtistId(2)],
        ];
        let refs: Vec<&[ArtistId]> = lists.iter().map(|l| l.as_slice()).collect();
        for target in [1, 2, 3, 5, 7, 9, 11] {
            let event = TracedEvent {
                timestamp: 0,
                user: UserId(0),
                artist: ArtistId(target),
                lists: lists.clone(),
            };
            let p = prepare(&event);
            for w in simplex_grid(3, 0.1).unwrap() {
                assert_eq!(
                    rank_under(&p, &w),
                    blended_rank(&refs, &w, ArtistId(target))
                );
            }
        }
    }
}
