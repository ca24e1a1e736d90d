use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};

use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ranking::{ArtistId, RankedList, UserId};

/// Redraws allowed per negative when the draw hits one of the user's positives.
const MAX_REDRAWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorConfig {
    pub num_features: usize,
    pub learning_rate: f64,
    pub init_value: f64,
    pub epochs_per_feature: usize,
    pub regularization: f64,
    pub negative_ratio: usize,
    pub rng_seed: u64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self {
            num_features: 20,
            learning_rate: 0.001,
            init_value: 0.1,
            epochs_per_feature: 30,
            regularization: 0.0,
            negative_ratio: 3,
            rng_seed: 0,
        }
    }
}

impl FactorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_features == 0 {
            return Err(Error::Config("num_features must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !self.init_value.is_finite() || !(self.regularization >= 0.0) {
            return Err(Error::Config(
                "init_value must be finite, regularization >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRecord {
    pub user: UserId,
    pub artist: ArtistId,
    /// 1 for an observed pair, 0 for a sampled negative.
    pub label: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub records: Vec<TrainingRecord>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Labels every unique positive pair 1 and adds, per user, `ratio` times as
/// many negatives drawn with replacement proportionally to `popularity`
/// (indexed by artist id), never one of the user's own positives.
pub fn sample_negatives<R: Rng>(
    positives: &[(UserId, ArtistId)],
    popularity: &[u64],
    ratio: usize,
    rng: &mut R,
) -> TrainingSet {
    let mut by_user: BTreeMap<UserId, BTreeSet<ArtistId>> = BTreeMap::new();
    for &(u, a) in positives {
        by_user.entry(u).or_default().insert(a);
    }
    let sampler = if ratio > 0 {
        WeightedIndex::new(popularity.iter().map(|&c| c as f64)).ok()
    } else {
        None
    };
    let nonzero = popularity.iter().filter(|&&c| c > 0).count();

    let mut records = Vec::with_capacity(positives.len() * (1 + ratio));
    for (&user, artists) in &by_user {
        records.extend(artists.iter().map(|&artist| TrainingRecord {
            user,
            artist,
            label: 1.0,
        }));
        let Some(sampler) = &sampler else {
            continue;
        };
        let positives_with_mass = artists
            .iter()
            .filter(|a| popularity.get(a.index()).is_some_and(|&c| c > 0))
            .count();
        if positives_with_mass >= nonzero {
            warn!("user {user} has every popular artist as a positive; no negatives drawn");
            continue;
        }
        let wanted = ratio * artists.len();
        let mut drawn = 0;
        for _ in 0..wanted {
            for _ in 0..MAX_REDRAWS {
                let artist = ArtistId(sampler.sample(rng) as u32);
                if !artists.contains(&artist) {
                    records.push(TrainingRecord {
                        user,
                        artist,
                        label: 0.0,
                    });
                    drawn += 1;
                    break;
                }
            }
        }
        if drawn < wanted {
            warn!("user {user}: drew {drawn} of {wanted} negatives");
        }
    }
    TrainingSet { records }
}

/// Latent factors for users and artists.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    num_features: usize,
    user_factors: Vec<f64>,
    artist_factors: Vec<f64>,
    user_known: Vec<bool>,
    artist_known: Vec<bool>,
    /// Latest timestamp covered by the training data.
    pub trained_through: i64,
}

impl FactorModel {
    /// All factors at `init_value`; every id below the bounds counts as known.
    pub fn initial(num_users: usize, num_artists: usize, config: &FactorConfig) -> Self {
        let f = config.num_features;
        Self {
            num_features: f,
            user_factors: vec![config.init_value; num_users * f],
            artist_factors: vec![config.init_value; num_artists * f],
            user_known: vec![true; num_users],
            artist_known: vec![true; num_artists],
            trained_through: 0,
        }
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn knows_user(&self, u: UserId) -> bool {
        self.user_known.get(u.index()).copied().unwrap_or(false)
    }

    pub fn knows_artist(&self, a: ArtistId) -> bool {
        self.artist_known.get(a.index()).copied().unwrap_or(false)
    }

    /// Artists seen in training, ascending.
    pub fn known_artists(&self) -> Vec<ArtistId> {
        (0..self.artist_known.len())
            .filter(|&i| self.artist_known[i])
            .map(|i| ArtistId(i as u32))
            .collect()
    }

    pub fn user_vector(&self, u: UserId) -> &[f64] {
        let f = self.num_features;
        &self.user_factors[u.index() * f..(u.index() + 1) * f]
    }

    pub fn artist_vector(&self, a: ArtistId) -> &[f64] {
        let f = self.num_features;
        &self.artist_factors[a.index() * f..(a.index() + 1) * f]
    }

    pub fn predict(&self, u: UserId, a: ArtistId) -> Option<f64> {
        if !self.knows_user(u) || !self.knows_artist(a) {
            return None;
        }
        Some(dot(self.user_vector(u), self.artist_vector(a)))
    }

    pub fn rmse(&self, training: &TrainingSet) -> f64 {
        if training.is_empty() {
            return 0.0;
        }
        let sse: f64 = training
            .records
            .iter()
            .map(|r| {
                let e = r.label - self.predict(r.user, r.artist).unwrap_or(0.0);
                e * e
            })
            .sum();
        (sse / training.len() as f64).sqrt()
    }

    /// Header line, then one `user,<id>,<factors...>` or
    /// `artist,<id>,<factors...>` row per known entity.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# num_features={},users={},artists={},trained_through={}",
            self.num_features,
            self.user_known.len(),
            self.artist_known.len(),
            self.trained_through
        )?;
        let rows = |kind: &str, known: &[bool], factors: &[f64], out: &mut W| -> Result<()> {
            for (i, _) in known.iter().enumerate().filter(|(_, &k)| k) {
                write!(out, "{kind},{i}")?;
                for v in &factors[i * self.num_features..(i + 1) * self.num_features] {
                    write!(out, ",{v}")?;
                }
                writeln!(out)?;
            }
            Ok(())
        };
        rows("user", &self.user_known, &self.user_factors, &mut out)?;
        rows("artist", &self.artist_known, &self.artist_factors, &mut out)?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header_err = |message: &str| Error::Parse {
            line: 1,
            message: message.into(),
        };
        let (_, header) = lines.next().ok_or_else(|| header_err("missing header"))?;
        let header = header?;
        let mut fields = BTreeMap::new();
        for kv in header.trim_start_matches('#').trim().split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| header_err("malformed header"))?;
            fields.insert(
                k.to_owned(),
                v.parse::<i64>().map_err(|_| header_err("bad number"))?,
            );
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| header_err("missing field"))
        };
        let f = get("num_features")? as usize;
        let users = get("users")? as usize;
        let artists = get("artists")? as usize;
        let mut model = Self {
            num_features: f,
            user_factors: vec![0.0; users * f],
            artist_factors: vec![0.0; artists * f],
            user_known: vec![false; users],
            artist_known: vec![false; artists],
            trained_through: get("trained_through")?,
        };
        for (i, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| Error::Parse {
                line: i + 1,
                message: message.into(),
            };
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != f + 2 {
                return Err(bad("wrong number of factor columns"));
            }
            let id: usize = parts[1].parse().map_err(|_| bad("bad id"))?;
            let (known, factors) = match parts[0] {
                "user" => (&mut model.user_known, &mut model.user_factors),
                "artist" => (&mut model.artist_known, &mut model.artist_factors),
                _ => return Err(bad("row kind must be user or artist")),
            };
            if id >= known.len() {
                return Err(bad("id out of range"));
            }
            known[id] = true;
            for (j, p) in parts[2..].iter().enumerate() {
                factors[id * f + j] = p.parse().map_err(|_| bad("bad factor"))?;
            }
        }
        Ok(model)
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Sequential per-feature SGD. Feature `f` is trained for
/// `epochs_per_feature` passes while features before it stay fixed and the
/// ones after it still contribute `init_value^2` each. Record order is
/// reshuffled every epoch from `rng_seed`.
pub fn train_factor(training: &TrainingSet, config: &FactorConfig) -> Result<FactorModel> {
    config.validate()?;
    if training.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let num_users = training
        .records
        .iter()
        .map(|r| r.user.index() + 1)
        .max()
        .unwrap_or(0);
    let num_artists = training
        .records
        .iter()
        .map(|r| r.artist.index() + 1)
        .max()
        .unwrap_or(0);
    let nf = config.num_features;
    let mut model = FactorModel::initial(num_users, num_artists, config);
    model.user_known = vec![false; num_users];
    model.artist_known = vec![false; num_artists];
    for r in &training.records {
        model.user_known[r.user.index()] = true;
        model.artist_known[r.artist.index()] = true;
    }

    let init_sq = config.init_value * config.init_value;
    let lr = config.learning_rate;
    let reg = config.regularization;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut order: Vec<usize> = (0..training.len()).collect();
    // Sum over already trained features, per record.
    let mut trained = vec![0.0f64; training.len()];

    for f in 0..nf {
        let untrained = (nf - f - 1) as f64 * init_sq;
        for epoch in 0..config.epochs_per_feature {
            order.shuffle(&mut rng);
            let mut sse = 0.0;
            for &i in &order {
                let r = training.records[i];
                let pu = r.user.index() * nf + f;
                let qa = r.artist.index() * nf + f;
                let p = model.user_factors[pu];
                let q = model.artist_factors[qa];
                let err = r.label - (trained[i] + p * q + untrained);
                sse += err * err;
                model.user_factors[pu] = p + lr * (err * q - reg * p);
                model.artist_factors[qa] = q + lr * (err * p - reg * q);
            }
            if !sse.is_finite() {
                return Err(Error::Diverged { feature: f, epoch });
            }
        }
        for (i, r) in training.records.iter().enumerate() {
            trained[i] += model.user_factors[r.user.index() * nf + f]
                * model.artist_factors[r.artist.index() * nf + f];
        }
    }
    if model
        .user_factors
        .iter()
        .chain(&model.artist_factors)
        .any(|v| !v.is_finite())
    {
        return Err(Error::Diverged {
            feature: nf - 1,
            epoch: config.epochs_per_feature,
        });
    }
    Ok(model)
}

/// Top-`k` of `candidates` not in `known`, by predicted score. Users unseen in
/// training get an empty list; candidates unseen in training are skipped.
pub fn factor_recommend(
    model: &FactorModel,
    u: UserId,
    k: usize,
    candidates: &[ArtistId],
    known: &HashSet<ArtistId>,
) -> RankedList {
    if !model.knows_user(u) {
        return RankedList::empty();
    }
    let uv = model.user_vector(u);
    RankedList::from_scores(
        candidates
            .iter()
            .filter(|a| model.knows_artist(**a) && !known.contains(a))
            .map(|&a| (a, dot(uv, model.artist_vector(a)))),
        k,
    )
}
