//! TSV readers and writers for scrobbles and friendship edges.

use std::io::{BufRead, Write};

use super::{FriendEdge, Scrobble, ScrobbleLog, SocialGraph, Vocab};
use crate::error::{Error, Result};
use crate::ranking::{ArtistId, UserId};

/// A log and graph parsed against one shared vocabulary.
#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub vocab: Vocab,
    pub log: ScrobbleLog,
    pub graph: SocialGraph,
}

impl ParsedCorpus {
    pub fn read<S: BufRead, E: BufRead>(scrobbles: S, edges: E) -> Result<Self> {
        let mut vocab = Vocab::default();
        let log = parse_scrobbles(scrobbles, &mut vocab)?;
        let graph = parse_edges(edges, &mut vocab)?;
        Ok(Self { vocab, log, graph })
    }
}

fn split_fields(line: &str, lineno: usize) -> Result<[&str; 3]> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected 3 tab-separated fields, found {}", fields.len()),
        });
    }
    if fields[0].is_empty() || fields[1].is_empty() {
        return Err(Error::Parse {
            line: lineno,
            message: "empty name field".into(),
        });
    }
    Ok([fields[0], fields[1], fields[2]])
}

fn parse_timestamp(field: &str, lineno: usize) -> Result<i64> {
    match field.parse::<i64>() {
        Ok(t) if t >= 0 => Ok(t),
        Ok(t) => Err(Error::Parse {
            line: lineno,
            message: format!("negative timestamp {t}"),
        }),
        Err(_) => Err(Error::Parse {
            line: lineno,
            message: format!("timestamp {field:?} is not an integer"),
        }),
    }
}

/// Lines with the trailing newline (and a `\r`, if any) removed; blank lines
/// are skipped. Yields 1-based line numbers.
fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(mut l) => {
                if l.ends_with('\r') {
                    l.pop();
                }
                (!l.is_empty()).then_some(Ok((i + 1, l)))
            }
            Err(e) => Some(Err(Error::Io(e))),
        })
}

/// Reads `user<TAB>artist<TAB>unix_seconds` lines in any order.
pub fn parse_scrobbles<R: BufRead>(reader: R, vocab: &mut Vocab) -> Result<ScrobbleLog> {
    let mut events = Vec::new();
    for item in lines(reader) {
        let (lineno, line) = item?;
        let [user, artist, ts] = split_fields(&line, lineno)?;
        let timestamp = parse_timestamp(ts, lineno)?;
        events.push(Scrobble {
            user: UserId(vocab.users.intern(user)),
            artist: ArtistId(vocab.artists.intern(artist)),
            timestamp,
        });
    }
    Ok(ScrobbleLog::from_events(events))
}

/// Reads `userA<TAB>userB<TAB>unix_seconds` lines. Self-loops are rejected.
pub fn parse_edges<R: BufRead>(reader: R, vocab: &mut Vocab) -> Result<SocialGraph> {
    let mut edges = Vec::new();
    for item in lines(reader) {
        let (lineno, line) = item?;
        let [a, b, ts] = split_fields(&line, lineno)?;
        let created_at = parse_timestamp(ts, lineno)?;
        if a == b {
            return Err(Error::SelfLoop {
                line: lineno,
                user: a.to_owned(),
            });
        }
        let a = UserId(vocab.users.intern(a));
        let b = UserId(vocab.users.intern(b));
        edges.extend(FriendEdge::new(a, b, created_at));
    }
    Ok(SocialGraph::from_edges(edges, vocab.users.len()))
}

pub fn write_scrobbles<W: Write>(log: &ScrobbleLog, vocab: &Vocab, mut out: W) -> Result<()> {
    for s in log.events() {
        writeln!(
            out,
            "{}\t{}\t{}",
            vocab.users.name(s.user.0),
            vocab.artists.name(s.artist.0),
            s.timestamp
        )?;
    }
    Ok(())
}

/// Writes edges ordered by creation time, endpoints in canonical order.
pub fn write_edges<W: Write>(graph: &SocialGraph, vocab: &Vocab, mut out: W) -> Result<()> {
    for e in graph.edges() {
        writeln!(
            out,
            "{}\t{}\t{}",
            vocab.users.name(e.a.0),
            vocab.users.name(e.b.0),
            e.created_at
        )?;
    }
    Ok(())
}
