use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalConfig;
use crate::baselines::{
    factor_recommend, sample_negatives, train_factor, FactorConfig, FactorModel, PopularityWindow,
};
use crate::corpus::{FriendEdge, Scrobble};
use crate::error::Result;
use crate::influence_rec::{InfluenceConfig, InfluenceState};
use crate::ranking::{ArtistId, RankedList, ScoredArtist, UserId};

/// A recommender driven by the replay loop.
///
/// For every distinct timestamp `now` the loop calls [`advance`], then
/// [`recommend`] for each evaluation event at `now`, then feeds the events at
/// `now`. Everything observed before a query is strictly earlier than `now`.
///
/// [`advance`]: OnlineRecommender::advance
/// [`recommend`]: OnlineRecommender::recommend
pub trait OnlineRecommender {
    fn name(&self) -> &str;

    fn advance(&mut self, _now: i64) -> Result<()> {
        Ok(())
    }

    fn recommend(
        &mut self,
        user: UserId,
        now: i64,
        k: usize,
        known: &HashSet<ArtistId>,
    ) -> RankedList;

    fn observe_scrobble(&mut self, _scrobble: &Scrobble) {}

    fn observe_friendship(&mut self, _edge: &FriendEdge) {}
}

pub struct PopularityRecommender {
    window: PopularityWindow,
}

impl PopularityRecommender {
    pub fn new(tau: i64) -> Self {
        Self {
            window: PopularityWindow::new(tau),
        }
    }

    pub fn window(&self) -> &PopularityWindow {
        &self.window
    }
}

impl OnlineRecommender for PopularityRecommender {
    fn name(&self) -> &str {
        "popularity"
    }

    fn advance(&mut self, now: i64) -> Result<()> {
        self.window.advance(now);
        Ok(())
    }

    fn recommend(&mut self, _: UserId, _: i64, k: usize, known: &HashSet<ArtistId>) -> RankedList {
        self.window.recommend_excluding(k, known)
    }

    fn observe_scrobble(&mut self, s: &Scrobble) {
        self.window.observe(s.artist, s.timestamp);
    }
}

pub struct InfluenceRecommender {
    state: InfluenceState,
}

impl InfluenceRecommender {
    pub fn new(config: InfluenceConfig) -> Self {
        Self {
            state: InfluenceState::new(config),
        }
    }

    pub fn state(&self) -> &InfluenceState {
        &self.state
    }
}

impl OnlineRecommender for InfluenceRecommender {
    fn name(&self) -> &str {
        "influence"
    }

    fn recommend(
        &mut self,
        user: UserId,
        now: i64,
        k: usize,
        known: &HashSet<ArtistId>,
    ) -> RankedList {
        self.state.recommend(user, now, k, known)
    }

    fn observe_scrobble(&mut self, s: &Scrobble) {
        self.state.observe_scrobble(s.user, s.artist, s.timestamp);
    }

    fn observe_friendship(&mut self, e: &FriendEdge) {
        self.state
            .observe_friendship(e.a, e.b, e.created_at)
            .expect("canonical edges are never self-loops");
    }
}

/// Factor model retrained at every boundary `first_boundary + i * interval`
/// on all scrobbles before it. Each user's list is computed at their first
/// query after a retrain and reused, minus newly known artists, until the
/// next one.
pub struct FactorRecommender {
    config: FactorConfig,
    first_boundary: i64,
    interval: i64,
    next_boundary: i64,
    pairs: Vec<(UserId, ArtistId)>,
    pair_set: HashSet<(UserId, ArtistId)>,
    counts: Vec<u64>,
    latest: i64,
    model: Option<FactorModel>,
    candidates: Vec<ArtistId>,
    cache: HashMap<UserId, Vec<ScoredArtist>>,
    retrains: usize,
}

impl FactorRecommender {
    pub fn new(config: FactorConfig, first_boundary: i64, interval: i64) -> Self {
        Self {
            config,
            first_boundary,
            interval,
            next_boundary: first_boundary,
            pairs: Vec::new(),
            pair_set: HashSet::new(),
            counts: Vec::new(),
            latest: i64::MIN,
            model: None,
            candidates: Vec::new(),
            cache: HashMap::new(),
            retrains: 0,
        }
    }

    pub fn model(&self) -> Option<&FactorModel> {
        self.model.as_ref()
    }

    pub fn retrains(&self) -> usize {
        self.retrains
    }

    fn retrain(&mut self, period: i64) -> Result<()> {
        self.cache.clear();
        if self.pairs.is_empty() {
            self.model = None;
            return Ok(());
        }
        let seed = self.config.rng_seed ^ (period as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let training = sample_negatives(
            &self.pairs,
            &self.counts,
            self.config.negative_ratio,
            &mut rng,
        );
        let config = FactorConfig {
            rng_seed: seed,
            ..self.config
        };
        let mut model = train_factor(&training, &config)?;
        model.trained_through = self.latest;
        self.candidates = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| ArtistId(i as u32))
            .collect();
        self.model = Some(model);
        self.retrains += 1;
        Ok(())
    }
}

impl OnlineRecommender for FactorRecommender {
    fn name(&self) -> &str {
        "factor"
    }

    fn advance(&mut self, now: i64) -> Result<()> {
        if now >= self.next_boundary {
            let period = (now - self.first_boundary).div_euclid(self.interval);
            self.next_boundary = self.first_boundary + (period + 1) * self.interval;
            self.retrain(period)?;
        }
        Ok(())
    }

    fn recommend(
        &mut self,
        user: UserId,
        _: i64,
        k: usize,
        known: &HashSet<ArtistId>,
    ) -> RankedList {
        let Some(model) = &self.model else {
            return RankedList::empty();
        };
        let depth = 2 * k + 64;
        let fresh = |known: &HashSet<ArtistId>| {
            factor_recommend(model, user, depth, &self.candidates, known)
                .items()
                .to_vec()
        };
        let cached = self.cache.entry(user).or_insert_with(|| fresh(known));
        let mut items: Vec<ScoredArtist> = cached
            .iter()
            .filter(|s| !known.contains(&s.artist))
            .take(k)
            .copied()
            .collect();
        if items.len() < k && cached.len() == depth {
            *cached = fresh(known);
            items = cached.iter().take(k).copied().collect();
        }
        RankedList::from_sorted(items)
    }

    fn observe_scrobble(&mut self, s: &Scrobble) {
        self.latest = self.latest.max(s.timestamp);
        if self.counts.len() <= s.artist.index() {
            self.counts.resize(s.artist.index() + 1, 0);
        }
        self.counts[s.artist.index()] += 1;
        if self.pair_set.insert((s.user, s.artist)) {
            self.pairs.push((s.user, s.artist));
        }
    }
}

/// The three standard components built from shared settings.
#[derive(Debug, Clone)]
pub struct StandardSetup {
    pub tau: i64,
    pub factor: FactorConfig,
    pub first_boundary: i64,
    pub retrain_interval: i64,
}

impl StandardSetup {
    pub fn from_eval(config: &EvalConfig, factor: FactorConfig) -> Self {
        Self {
            tau: config.tau,
            factor,
            first_boundary: config.test_start,
            retrain_interval: config.retrain_interval,
        }
    }

    pub fn build(&self, names: &[&str]) -> Result<Vec<Box<dyn OnlineRecommender>>> {
        names.iter().map(|name| self.build_one(name)).collect()
    }

    pub fn build_one(&self, name: &str) -> Result<Box<dyn OnlineRecommender>> {
        Ok(match name {
            "factor" => Box::new(FactorRecommender::new(
                self.factor,
                self.first_boundary,
                self.retrain_interval,
            )),
            "popularity" => Box::new(PopularityRecommender::new(self.tau)),
            "influence" => Box::new(InfluenceRecommender::new(InfluenceConfig::new(self.tau)?)),
            other => {
                return Err(crate::Error::Config(format!(
                    "unknown recommender {other:?}; expected factor, popularity or influence"
                )))
            }
        })
    }
}
