//! The contract every ranking model satisfies, so that one trainer and one
//! evaluator serve CoupleNet and all six baselines alike.

use serde::Serialize;

use crate::corpus::profile::UserProfile;
use crate::error::Result;
use crate::numkit::dense::DenseArray;
use crate::numkit::params::ParamStore;
use crate::numkit::rng::RngState;
use crate::numkit::tape::{Tape, Var};

/// Cached per-user state for evaluation. Encodings are plain arrays computed
/// once per user in eval mode; pair scoring then works from the cache.
#[derive(Debug, Clone)]
pub enum UserEncoding {
    /// Tweet-level encodings (one n-vector per valid tweet) plus the word
    /// attention behind each, for explanation export.
    TweetMatrix {
        user_id: String,
        matrix: DenseArray,
        /// Per valid tweet: attention over its words (length = valid_len).
        word_attention: Vec<Vec<f64>>,
        /// Original tweet slot index per matrix row.
        slots: Vec<usize>,
    },
    /// A single user vector (GRU, H-GRU, DeepCoNN, MLP, RankSVM embed).
    Vector { user_id: String, v: DenseArray },
    /// Sparse tf-idf features.
    Sparse {
        user_id: String,
        v: Vec<(u32, f64)>,
    },
}

impl UserEncoding {
    pub fn user_id(&self) -> &str {
        match self {
            UserEncoding::TweetMatrix { user_id, .. } => user_id,
            UserEncoding::Vector { user_id, .. } => user_id,
            UserEncoding::Sparse { user_id, .. } => user_id,
        }
    }
}

/// One scored pair. Attention fields are populated only when requested and
/// only by models that expose them.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreDetail {
    pub score: f64,
    /// True when a zero-norm representation forced the neutral score 0.
    pub degenerate: bool,
    /// Coupled-attention weights over each user's valid tweets, in the
    /// argument order of the scored pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention: Option<(Vec<f64>, Vec<f64>)>,
}

impl ScoreDetail {
    pub fn plain(score: f64, degenerate: bool) -> Self {
        ScoreDetail {
            score,
            degenerate,
            attention: None,
        }
    }
}

pub trait RankModel {
    fn name(&self) -> &'static str;

    fn store(&self) -> &ParamStore;

    fn store_mut(&mut self) -> &mut ParamStore;

    /// Eval-mode encoding of one user, cacheable across pair scorings.
    fn encode_user(&self, profile: &UserProfile) -> Result<UserEncoding>;

    /// Eval-mode pair score from two cached encodings. Must be symmetric in
    /// its arguments.
    fn score_encodings(
        &self,
        a: &UserEncoding,
        b: &UserEncoding,
        detail: bool,
    ) -> Result<ScoreDetail>;

    /// Builds the train-mode hinge loss for one (anchor, positive, negative)
    /// triplet on the given tape.
    fn triplet_loss(
        &self,
        tape: &mut Tape,
        anchor: &UserProfile,
        positive: &UserProfile,
        negative: &UserProfile,
        rng: &mut RngState,
    ) -> Result<Var>;

    /// Non-trainable arrays that must ride along in checkpoints (e.g. a
    /// static embedding matrix).
    fn checkpoint_extras(&self) -> Vec<(String, DenseArray)> {
        Vec::new()
    }

    fn restore_extras(&mut self, _arrays: &[(String, DenseArray)]) -> Result<()> {
        Ok(())
    }

    /// Whether `score_encodings(detail=true)` yields attention weights.
    fn has_attention(&self) -> bool {
        false
    }
}

/// Convenience: eval-mode score of two profiles without caching.
pub fn score_pair(
    model: &dyn RankModel,
    a: &UserProfile,
    b: &UserProfile,
    detail: bool,
) -> Result<ScoreDetail> {
    let ea = model.encode_user(a)?;
    let eb = model.encode_user(b)?;
    model.score_encodings(&ea, &eb, detail)
}
