//! Name-based model construction shared by the trainer, the evaluator and
//! the CLI.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    ConcatGru, DeepConn, HGru, MlpEmbed, RankSvmEmbed, RankSvmTfidf, TfidfFeaturizer,
};
use crate::corpus::dataset::Dataset;
use crate::corpus::pairs::Split;
use crate::couplenet::{CoupleNet, CoupleNetConfig};
use crate::encoders::EmbeddingTable;
use crate::error::{Error, Result};
use crate::model::RankModel;
use crate::numkit::rng::RngState;

pub const MODEL_NAMES: [&str; 7] = [
    "couplenet",
    "deepconn",
    "gru",
    "hgru",
    "mlp_embed",
    "ranksvm_tfidf",
    "ranksvm_embed",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSettings {
    pub n: usize,
    pub d: usize,
    pub margin: f64,
    pub init_std: f64,
    pub tfidf_k: usize,
    pub seed: u64,
    /// Optional pretrained embedding file (`token v1 ... vd` per line).
    pub pretrained_embeddings: Option<PathBuf>,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            n: 100,
            d: 100,
            margin: 0.2,
            init_std: 0.1,
            tfidf_k: 5000,
            seed: 7,
            pretrained_embeddings: None,
        }
    }
}

/// Builds an initialized model by name. The tf-idf featurizer fits on
/// training-split profiles only; static embedding tables derive
/// deterministically from the seed (or the pretrained file when given).
pub fn build_model(
    name: &str,
    dataset: &Dataset,
    settings: &ModelSettings,
) -> Result<Box<dyn RankModel>> {
    let vocab_size = dataset.vocab.len();
    let s = settings;

    let pretrained = |d_expected: usize| -> Result<Option<crate::numkit::dense::DenseArray>> {
        match &s.pretrained_embeddings {
            None => Ok(None),
            Some(path) => {
                let mut rng = RngState::derive(s.seed, 0xE0BED);
                let table =
                    EmbeddingTable::from_pretrained(path, &dataset.vocab, s.init_std, &mut rng)?;
                if table.dim != d_expected {
                    return Err(Error::Config(format!(
                        "pretrained width {} does not match configured d {}",
                        table.dim, d_expected
                    )));
                }
                Ok(Some(table.matrix))
            }
        }
    };

    let static_table = || -> Result<EmbeddingTable> {
        match &s.pretrained_embeddings {
            Some(path) => {
                let mut rng = RngState::derive(s.seed, 0xE0BED);
                EmbeddingTable::from_pretrained(path, &dataset.vocab, s.init_std, &mut rng)
            }
            None => {
                let mut rng = RngState::derive(s.seed, 0xE0BED);
                Ok(EmbeddingTable::gaussian(vocab_size, s.d, s.init_std, &mut rng))
            }
        }
    };

    match name {
        "couplenet" => {
            let cfg = CoupleNetConfig {
                n: s.n,
                d: s.d,
                margin: s.margin,
                init_std: s.init_std,
            };
            Ok(Box::new(CoupleNet::new(vocab_size, cfg, s.seed, pretrained(s.d)?)?))
        }
        "deepconn" => Ok(Box::new(DeepConn::new(
            vocab_size,
            s.d,
            s.n,
            s.margin,
            s.init_std,
            s.seed,
            pretrained(s.d)?,
        )?)),
        "gru" => Ok(Box::new(ConcatGru::new(
            vocab_size,
            s.d,
            s.n,
            s.margin,
            s.init_std,
            s.seed,
            pretrained(s.d)?,
        )?)),
        "hgru" => Ok(Box::new(HGru::new(
            vocab_size,
            s.d,
            s.n,
            s.margin,
            s.init_std,
            s.seed,
            pretrained(s.d)?,
        )?)),
        "mlp_embed" => Ok(Box::new(MlpEmbed::new(
            static_table()?,
            s.n,
            s.margin,
            s.init_std,
            s.seed,
        ))),
        "ranksvm_embed" => Ok(Box::new(RankSvmEmbed::new(
            static_table()?,
            s.margin,
            s.init_std,
            s.seed,
        ))),
        "ranksvm_tfidf" => {
            let mut train_users: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
            for p in dataset.pairs.iter().filter(|p| p.split == Split::Train) {
                train_users.insert(&p.user_a);
                train_users.insert(&p.user_b);
            }
            let profiles = train_users.iter().map(|u| &dataset.profiles[*u]);
            let featurizer = TfidfFeaturizer::fit(profiles, s.tfidf_k)?;
            Ok(Box::new(RankSvmTfidf::new(featurizer, s.margin, s.init_std, s.seed)))
        }
        other => Err(Error::Config(format!(
            "unknown model `{other}`; expected one of {}",
            MODEL_NAMES.join("|")
        ))),
    }
}
