//! Pairwise training loop: negative sampling, seeded shuffling and batching,
//! per-epoch dev evaluation, and best-checkpoint selection.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::dataset::Dataset;
use crate::corpus::pairs::Split;
use crate::corpus::profile::UserProfile;
use crate::error::{Error, Result};
use crate::evalkit::{evaluate_split, EvalConfig, MetricsReport};
use crate::model::RankModel;
use crate::numkit::checkpoint::Checkpoint;
use crate::numkit::params::AdamConfig;
use crate::numkit::rng::RngState;
use crate::numkit::tape::Tape;
use crate::registry::{build_model, ModelSettings, MODEL_NAMES};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub model: String,
    pub epochs: usize,
    pub batch_size: usize,
    pub margin: f64,
    pub lr: f64,
    pub k: usize,
    pub l: usize,
    pub n: usize,
    pub d: usize,
    pub init_std: f64,
    pub l2: f64,
    pub seed: u64,
    /// Global gradient-norm clip; None disables the safety rail.
    pub clip_norm: Option<f64>,
    pub dev_negatives: usize,
    pub tfidf_k: usize,
    pub pretrained_embeddings: Option<std::path::PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: "couplenet".to_string(),
            epochs: 10,
            batch_size: 16,
            margin: 0.2,
            lr: 1e-3,
            k: 20,
            l: 10,
            n: 100,
            d: 100,
            init_std: 0.1,
            l2: 1e-8,
            seed: 7,
            clip_norm: Some(5.0),
            dev_negatives: 100,
            tfidf_k: 5000,
            pretrained_embeddings: None,
        }
    }
}

impl TrainConfig {
    /// Warnings for values outside the reference tuning grids. Overrides are
    /// allowed; the caller decides whether to surface these.
    pub fn grid_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if !MODEL_NAMES.contains(&self.model.as_str()) {
            warnings.push(format!("unknown model `{}`", self.model));
        }
        if ![16, 32, 64].contains(&self.batch_size) {
            warnings.push(format!("batch_size {} outside {{16,32,64}}", self.batch_size));
        }
        if ![0.1, 0.2, 0.5].iter().any(|m| (m - self.margin).abs() < 1e-12) {
            warnings.push(format!("margin {} outside {{0.1,0.2,0.5}}", self.margin));
        }
        if (self.lr - 1e-3).abs() > 1e-12 {
            warnings.push(format!("lr {} differs from 1e-3", self.lr));
        }
        if ![10, 20, 50, 100, 150, 200].contains(&self.k) {
            warnings.push(format!("k {} outside {{10,20,50,100,150,200}}", self.k));
        }
        if self.l != 10 {
            warnings.push(format!("l {} differs from 10", self.l));
        }
        if self.epochs != 10 {
            warnings.push(format!("epochs {} differs from 10", self.epochs));
        }
        if (self.init_std - 0.1).abs() > 1e-12 {
            warnings.push(format!("init_std {} differs from 0.1", self.init_std));
        }
        if (self.l2 - 1e-8).abs() > 1e-15 {
            warnings.push(format!("l2 {} differs from 1e-8", self.l2));
        }
        if self.n != 100 {
            warnings.push(format!("n {} differs from 100", self.n));
        }
        warnings
    }

    pub fn settings(&self) -> ModelSettings {
        ModelSettings {
            n: self.n,
            d: self.d,
            margin: self.margin,
            init_std: self.init_std,
            tfidf_k: self.tfidf_k,
            seed: self.seed,
            pretrained_embeddings: self.pretrained_embeddings.clone(),
        }
    }
}

/// Draws a training user uniformly, excluding the anchor and every known
/// partner of the anchor.
pub fn sample_negative(
    anchor: &str,
    users: &[String],
    partners: &BTreeMap<String, BTreeSet<String>>,
    rng: &mut RngState,
) -> Result<String> {
    let excluded = partners.get(anchor);
    let viable = users
        .iter()
        .filter(|u| u.as_str() != anchor && !excluded.is_some_and(|set| set.contains(*u)))
        .count();
    if viable == 0 {
        return Err(Error::Config(format!(
            "no negative candidates available for anchor {anchor}"
        )));
    }
    loop {
        let candidate = &users[rng.below(users.len())];
        if candidate == anchor {
            continue;
        }
        if excluded.is_some_and(|set| set.contains(candidate)) {
            continue;
        }
        return Ok(candidate.clone());
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean online hinge loss over the epoch's triplets (dropout live).
    pub mean_loss: f64,
    /// Deterministic end-of-epoch loss over the train split: dropout off,
    /// negatives fixed per pair across epochs.
    pub train_loss_eval: f64,
    pub dev: MetricsReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLog {
    pub model: String,
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev_hr10: f64,
    pub warnings: Vec<String>,
}

pub struct TrainOutcome {
    pub model: Box<dyn RankModel>,
    pub checkpoint: Checkpoint,
    pub log: TrainLog,
}

/// Trains the configured model and keeps the checkpoint with the best dev
/// HR@10 (earliest epoch wins ties).
pub fn train(config: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    if config.k > dataset.k {
        return Err(Error::Config(format!(
            "config k {} exceeds dataset k {}",
            config.k, dataset.k
        )));
    }
    let train_pairs: Vec<(String, String)> = dataset
        .pairs
        .iter()
        .filter(|p| p.split == Split::Train)
        .map(|p| (p.user_a.clone(), p.user_b.clone()))
        .collect();
    if train_pairs.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    if dataset.pairs_in(Split::Dev).is_empty() {
        return Err(Error::Config("dev split is empty".into()));
    }

    let mut partners: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut train_users: BTreeSet<String> = BTreeSet::new();
    for (a, b) in &train_pairs {
        partners.entry(a.clone()).or_default().insert(b.clone());
        partners.entry(b.clone()).or_default().insert(a.clone());
        train_users.insert(a.clone());
        train_users.insert(b.clone());
    }
    let train_users: Vec<String> = train_users.into_iter().collect();
    if train_users.len() < 3 {
        return Err(Error::Config("need at least 3 training users".into()));
    }

    let mut model = build_model(&config.model, dataset, &config.settings())?;
    let profiles: BTreeMap<&str, UserProfile> = dataset
        .profiles
        .iter()
        .map(|(u, p)| (u.as_str(), p.truncated(config.k)))
        .collect();

    let adam = AdamConfig {
        lr: config.lr,
        l2: config.l2,
        ..AdamConfig::default()
    };
    let mut shuffle_rng = RngState::derive(config.seed, 1);
    let mut negative_rng = RngState::derive(config.seed, 2);
    let mut dropout_rng = RngState::derive(config.seed, 3);
    let dev_eval = EvalConfig {
        split: Split::Dev,
        negatives: config.dev_negatives.min(dataset.profiles.len().saturating_sub(2)),
        seed: config.seed,
    };

    let mut log = TrainLog {
        model: config.model.clone(),
        epochs: Vec::new(),
        best_epoch: 0,
        best_dev_hr10: f64::NEG_INFINITY,
        warnings: config.grid_warnings(),
    };
    let mut best: Option<Checkpoint> = None;

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train_pairs.len()).collect();
        shuffle_rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in order.chunks(config.batch_size) {
            let batch_len = batch.len() as f64;
            for &idx in batch {
                let (anchor, positive) = &train_pairs[idx];
                let negative = sample_negative(anchor, &train_users, &partners, &mut negative_rng)?;
                let mut tape = Tape::train();
                let loss = model.triplet_loss(
                    &mut tape,
                    &profiles[anchor.as_str()],
                    &profiles[positive.as_str()],
                    &profiles[negative.as_str()],
                    &mut dropout_rng,
                )?;
                let value = tape.value(loss).item();
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!(
                            "loss at epoch {epoch} for triplet ({anchor}, {positive}, {negative})"
                        ),
                    });
                }
                loss_sum += value;
                seen += 1;
                tape.backward(loss, 1.0 / batch_len, model.store_mut())?;
            }
            if let Some(max_norm) = config.clip_norm {
                model.store_mut().clip_grad_norm(max_norm);
            }
            model.store_mut().adam_step(&adam)?;
        }

        let (dev_metrics, _) = evaluate_split(model.as_ref(), dataset, config.k, &dev_eval)?;
        let train_loss_eval =
            eval_mode_train_loss(model.as_ref(), dataset, config, &train_pairs, &train_users)?;
        let hr10 = dev_metrics.hr_at[&10];
        log.epochs.push(EpochLog {
            epoch,
            mean_loss: loss_sum / seen as f64,
            train_loss_eval,
            dev: dev_metrics,
        });
        if hr10 > log.best_dev_hr10 {
            log.best_dev_hr10 = hr10;
            log.best_epoch = epoch;
            best = Some(snapshot(model.as_ref(), config, epoch));
        }
    }

    let checkpoint = best.expect("at least one epoch ran");
    // Hand back the model in its best state, not its last.
    checkpoint.restore_params(model.store_mut())?;
    Ok(TrainOutcome {
        model,
        checkpoint,
        log,
    })
}

/// Mean hinge loss over the train split with dropout off and one fixed
/// negative per pair (derived from the config seed, stable across epochs).
fn eval_mode_train_loss(
    model: &dyn RankModel,
    dataset: &Dataset,
    config: &TrainConfig,
    train_pairs: &[(String, String)],
    train_users: &[String],
) -> Result<f64> {
    let encodings = crate::evalkit::encode_all_users(model, dataset, config.k)?;
    let mut partners: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (a, b) in train_pairs {
        partners.entry(a.clone()).or_default().insert(b.clone());
        partners.entry(b.clone()).or_default().insert(a.clone());
    }
    let mut total = 0.0;
    for (idx, (anchor, positive)) in train_pairs.iter().enumerate() {
        let mut rng = RngState::derive(config.seed, 0x7EA1 + idx as u64);
        let negative = sample_negative(anchor, train_users, &partners, &mut rng)?;
        let s_pos = model
            .score_encodings(&encodings[anchor], &encodings[positive], false)?
            .score;
        let s_neg = model
            .score_encodings(&encodings[anchor], &encodings[&negative], false)?
            .score;
        total += (config.margin - s_pos + s_neg).max(0.0);
    }
    Ok(total / train_pairs.len() as f64)
}

fn snapshot(model: &dyn RankModel, config: &TrainConfig, epoch: usize) -> Checkpoint {
    let mut ckpt = Checkpoint::new(
        model.name(),
        config.seed,
        json!({ "config": config, "best_epoch": epoch }),
    );
    ckpt.add_params(model.store());
    for (name, value) in model.checkpoint_extras() {
        ckpt.insert(&name, value);
    }
    ckpt
}

/// Rebuilds a model from a checkpoint plus the dataset it was trained on.
/// Deterministic components (tf-idf vocabulary, featurizer state) are refit
/// from the dataset; parameters and static arrays come from the checkpoint.
pub fn restore_model(
    checkpoint: &Checkpoint,
    dataset: &Dataset,
) -> Result<(Box<dyn RankModel>, TrainConfig)> {
    let config: TrainConfig = serde_json::from_value(
        checkpoint
            .hyperparams
            .get("config")
            .cloned()
            .ok_or_else(|| Error::Checkpoint("missing config in header".into()))?,
    )?;
    let mut model = build_model(&checkpoint.model, dataset, &config.settings())?;
    checkpoint.restore_params(model.store_mut())?;
    let extras: Vec<(String, crate::numkit::dense::DenseArray)> = checkpoint
        .arrays
        .iter()
        .filter(|(name, _)| !model.store().contains(name))
        .map(|(name, value)| (name.clone(), value.clone()))
        .collect();
    model.restore_extras(&extras)?;
    Ok((model, config))
}
