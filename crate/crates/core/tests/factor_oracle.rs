use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempinf::baselines::{
    factor_recommend, train_factor, FactorConfig, FactorModel, TrainingRecord, TrainingSet,
};
use tempinf::{ArtistId, UserId};

struct RankOne {
    p: Vec<f64>,
    q: Vec<f64>,
    training: TrainingSet,
}

/// Labels `p_u * q_a` on a random 70% of the user x artist grid.
fn rank_one(seed: u64, users: usize, artists: usize) -> RankOne {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<f64> = (0..users).map(|_| rng.random_range(0.3..1.0)).collect();
    let mut q: Vec<f64> = (0..artists).map(|_| rng.random_range(0.3..0.8)).collect();
    q[rng.random_range(0..artists)] = 1.0;
    let mut records = Vec::new();
    for u in 0..users {
        for a in 0..artists {
            if rng.random_bool(0.7) {
                records.push(TrainingRecord {
                    user: UserId(u as u32),
                    artist: ArtistId(a as u32),
                    label: p[u] * q[a],
                });
            }
        }
    }
    RankOne {
        p,
        q,
        training: TrainingSet { records },
    }
}

fn config() -> FactorConfig {
    FactorConfig {
        num_features: 1,
        learning_rate: 0.05,
        init_value: 0.5,
        epochs_per_feature: 400,
        ..FactorConfig::default()
    }
}

#[test]
fn rank_one_labels_are_recovered() {
    for seed in 0..5 {
        let data = rank_one(seed, 30, 40);
        let model = train_factor(&data.training, &config()).unwrap();
        let rmse = model.rmse(&data.training);
        assert!(rmse < 0.05, "seed {seed}: rmse {rmse}");

        let all: Vec<ArtistId> = (0..data.q.len() as u32).map(ArtistId).collect();
        for u in 0..data.p.len() {
            let oracle = (0..data.q.len())
                .max_by(|&x, &y| (data.p[u] * data.q[x]).total_cmp(&(data.p[u] * data.q[y])))
                .unwrap();
            let got = factor_recommend(&model, UserId(u as u32), 1, &all, &HashSet::new());
            assert_eq!(
                got.artists().next(),
                Some(ArtistId(oracle as u32)),
                "seed {seed} user {u}"
            );
        }
    }
}

#[test]
fn training_never_worsens_initial_rmse() {
    let data = rank_one(9, 20, 25);
    for cfg in [FactorConfig::default(), config()] {
        let trained = train_factor(&data.training, &cfg).unwrap();
        // Every untrained prediction is num_features * init_value^2.
        let before = data
            .training
            .records
            .iter()
            .map(|r| (r.label - cfg.num_features as f64 * cfg.init_value.powi(2)).powi(2))
            .sum::<f64>()
            / data.training.len() as f64;
        assert!(trained.rmse(&data.training) <= before.sqrt() + 1e-12);
    }
}

#[test]
fn untrained_default_prediction() {
    let model = FactorModel::initial(2, 2, &FactorConfig::default());
    assert!((model.predict(UserId(0), ArtistId(1)).unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn training_is_deterministic() {
    let data = rank_one(3, 10, 12);
    let a = train_factor(&data.training, &config()).unwrap();
    let b = train_factor(&data.training, &config()).unwrap();
    assert_eq!(a, b);
}
