//! The full scoring graph: coupled attention between two users' tweet
//! matrices, attentive pooling into user representations, cosine scoring,
//! and the pairwise hinge objective.
//!
//! The tweet-pair similarity is `s_ij = W_c . t1_i + W_c . t2_j + b_c` with
//! one shared n-vector `W_c` applied to both halves of the pair. Sharing the
//! vector keeps the whole graph symmetric in its two users: swapping the
//! arguments transposes the grid, swaps the two attention vectors, and
//! leaves the cosine unchanged.

use serde::Serialize;

use crate::corpus::profile::UserProfile;
use crate::encoders::{
    encode_tweet, register_attention_params, register_gru_params, AttentionVars, GruVars,
};
use crate::error::{Error, Result};
use crate::model::{RankModel, ScoreDetail, UserEncoding};
use crate::numkit::dense::{self, DenseArray};
use crate::numkit::params::ParamStore;
use crate::numkit::rng::RngState;
use crate::numkit::tape::{Mode, Tape, Var};

pub const PARAM_COUPLE_W: &str = "couple.W_c";
pub const PARAM_COUPLE_B: &str = "couple.b_c";
pub const PARAM_EMBED: &str = "embed.W";

/// Dropout sites fixed by the architecture: after each tweet encoding and
/// on the pooled user representations.
pub const DROPOUT_TWEET: f64 = 0.5;
pub const DROPOUT_USER: f64 = 0.2;

// ---------------------------------------------------------------------------
// Plain-array operations (also the oracles' vocabulary)
// ---------------------------------------------------------------------------

/// K1 x K2 tweet-pair similarity scores with validity masks. Invalid cells
/// hold 0.0 and are excluded from every reduction.
#[derive(Debug, Clone, Serialize)]
pub struct SimilarityGrid {
    pub s: DenseArray,
    pub valid_rows: Vec<bool>,
    pub valid_cols: Vec<bool>,
}

/// Builds the similarity grid from two tweet matrices (K x n, one row per
/// tweet slot) and their valid counts.
pub fn similarity_grid(
    t1: &DenseArray,
    valid1: usize,
    t2: &DenseArray,
    valid2: usize,
    w_c: &DenseArray,
    b_c: f64,
) -> Result<SimilarityGrid> {
    if valid1 == 0 || valid2 == 0 {
        return Err(Error::EmptyProfile {
            user_id: String::new(),
        });
    }
    let (k1, k2) = (t1.rows(), t2.rows());
    let mut s = DenseArray::zeros(&[k1, k2]);
    for i in 0..valid1 {
        let ri = dense::dot_slices(t1.row(i), &w_c.data);
        for j in 0..valid2 {
            let cj = dense::dot_slices(t2.row(j), &w_c.data);
            s.data[i * k2 + j] = ri + cj + b_c;
        }
    }
    let mut valid_rows = vec![false; k1];
    valid_rows[..valid1].fill(true);
    let mut valid_cols = vec![false; k2];
    valid_cols[..valid2].fill(true);
    Ok(SimilarityGrid {
        s,
        valid_rows,
        valid_cols,
    })
}

/// Attention over each user's tweets from the grid's strongest signals:
/// user 1's weight for tweet i is the softmax of `max над valid j of S[i][j]`,
/// and symmetrically for user 2 over columns. Masked slots get weight zero.
pub fn coupled_attention(grid: &SimilarityGrid) -> Result<(DenseArray, DenseArray)> {
    let (row_max, _) = dense::masked_row_max(&grid.s, &grid.valid_rows, &grid.valid_cols)?;
    let (col_max, _) = dense::masked_col_max(&grid.s, &grid.valid_rows, &grid.valid_cols)?;
    let a1 = dense::masked_softmax(&row_max, &grid.valid_rows)?;
    let a2 = dense::masked_softmax(&col_max, &grid.valid_cols)?;
    Ok((a1, a2))
}

/// Attentive pooling of each user's tweet matrix by the coupled weights.
pub fn user_representations(
    t1: &DenseArray,
    t2: &DenseArray,
    a1: &DenseArray,
    a2: &DenseArray,
) -> Result<(DenseArray, DenseArray)> {
    Ok((
        dense::weighted_sum_rows(t1, a1)?,
        dense::weighted_sum_rows(t2, a2)?,
    ))
}

/// Cosine similarity clamped to [-1, 1]; a zero-norm side scores 0 and is
/// flagged degenerate.
pub fn cosine_score(u1: &DenseArray, u2: &DenseArray) -> Result<(f64, bool)> {
    dense::cosine(u1, u2)
}

/// Pairwise margin loss `max(0, margin - s_pos + s_neg)`.
pub fn hinge_loss(s_pos: f64, s_neg: f64, margin: f64) -> f64 {
    (margin - s_pos + s_neg).max(0.0)
}

// ---------------------------------------------------------------------------
// The model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CoupleNetConfig {
    pub n: usize,
    pub d: usize,
    pub margin: f64,
    pub init_std: f64,
}

impl Default for CoupleNetConfig {
    fn default() -> Self {
        CoupleNetConfig {
            n: 100,
            d: 100,
            margin: 0.2,
            init_std: 0.1,
        }
    }
}

pub struct CoupleNet {
    cfg: CoupleNetConfig,
    store: ParamStore,
}

impl CoupleNet {
    /// Registers all trainable parameters with Gaussian init; the embedding
    /// PAD row is zeroed. `embedding` overrides the random matrix (e.g. a
    /// pretrained table).
    pub fn new(
        vocab_size: usize,
        cfg: CoupleNetConfig,
        seed: u64,
        embedding: Option<DenseArray>,
    ) -> Result<Self> {
        let mut store = ParamStore::new();
        let mut rng = RngState::new(seed);
        register_gru_params(&mut store, "gru.", cfg.d, cfg.n, cfg.init_std, &mut rng);
        register_attention_params(&mut store, "att.", cfg.n, cfg.init_std, &mut rng);
        store.insert_gaussian(PARAM_COUPLE_W, &[cfg.n], cfg.init_std, &mut rng);
        store.insert_gaussian(PARAM_COUPLE_B, &[1], cfg.init_std, &mut rng);
        store.insert_gaussian(PARAM_EMBED, &[vocab_size, cfg.d], cfg.init_std, &mut rng);
        if let Some(matrix) = embedding {
            if matrix.shape != [vocab_size, cfg.d] {
                return Err(Error::Config(format!(
                    "embedding shape {:?} does not match vocab {vocab_size} x d {}",
                    matrix.shape, cfg.d
                )));
            }
            store.get_mut(PARAM_EMBED).value = matrix;
        }
        let embed = store.get_mut(PARAM_EMBED);
        embed.value.data[..cfg.d].fill(0.0);
        Ok(CoupleNet { cfg, store })
    }

    pub fn config(&self) -> &CoupleNetConfig {
        &self.cfg
    }

    /// Encodes the valid tweets of one profile on the given tape. In train
    /// mode, tweet-level dropout is applied to each encoding.
    fn encode_profile_graph(
        &self,
        tape: &mut Tape,
        profile: &UserProfile,
        rng: &mut RngState,
    ) -> Result<(Vec<Var>, Vec<Option<Var>>, Vec<usize>)> {
        if profile.tweet_valid_count == 0 {
            return Err(Error::EmptyProfile {
                user_id: profile.user_id.clone(),
            });
        }
        let table = tape.param(PARAM_EMBED, &self.store);
        let gru = GruVars::bind(tape, &self.store, "gru.");
        let att = AttentionVars::bind(tape, &self.store, "att.");
        let mut vectors = Vec::new();
        let mut weights = Vec::new();
        let mut slots = Vec::new();
        for (slot, tweet) in profile.tweets.iter().enumerate() {
            if tweet.valid_len == 0 {
                continue;
            }
            let pooled = encode_tweet(tape, table, tweet, &gru, &att)?;
            let vector = tape.dropout(pooled.vector, DROPOUT_TWEET, rng)?;
            vectors.push(vector);
            weights.push(pooled.weights);
            slots.push(slot);
        }
        if vectors.is_empty() {
            return Err(Error::EmptyProfile {
                user_id: profile.user_id.clone(),
            });
        }
        Ok((vectors, weights, slots))
    }

    /// Grid, coupled attention, pooling and cosine for two encoded tweet
    /// lists. Returns (score, a1, a2).
    fn pair_graph(
        &self,
        tape: &mut Tape,
        enc1: &[Var],
        enc2: &[Var],
        rng: &mut RngState,
    ) -> Result<(Var, Var, Var)> {
        let t1 = tape.stack_rows(enc1);
        let t2 = tape.stack_rows(enc2);
        let wc = tape.param(PARAM_COUPLE_W, &self.store);
        let bc = tape.param(PARAM_COUPLE_B, &self.store);
        let rvec = tape.matvec(t1, wc)?;
        let cvec = tape.matvec(t2, wc)?;
        let raw = tape.outer_sum(rvec, cvec);
        let grid = tape.add_scalar(raw, bc);
        let ones1 = vec![true; enc1.len()];
        let ones2 = vec![true; enc2.len()];
        let row_max = tape.masked_row_max(grid, &ones1, &ones2)?;
        let col_max = tape.masked_col_max(grid, &ones1, &ones2)?;
        let a1 = tape.softmax_masked(row_max, &ones1)?;
        let a2 = tape.softmax_masked(col_max, &ones2)?;
        let u1 = tape.weighted_sum_rows(t1, a1)?;
        let u2 = tape.weighted_sum_rows(t2, a2)?;
        let u1 = tape.dropout(u1, DROPOUT_USER, rng)?;
        let u2 = tape.dropout(u2, DROPOUT_USER, rng)?;
        let score = tape.cosine(u1, u2)?;
        Ok((score, a1, a2))
    }
}

/// Composed eval/train forward pass for one pair of profiles.
#[derive(Debug, Clone, Serialize)]
pub struct PairScore {
    pub score: f64,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<PairComponents>,
}

/// Intermediates retained for explanation export.
#[derive(Debug, Clone, Serialize)]
pub struct PairComponents {
    pub grid: SimilarityGrid,
    /// Coupled-attention weight per valid tweet, argument order.
    pub attention_a: Vec<f64>,
    pub attention_b: Vec<f64>,
    /// Original tweet slot per attention entry.
    pub slots_a: Vec<usize>,
    pub slots_b: Vec<usize>,
    /// Word-attention weights per valid tweet.
    pub word_attention_a: Vec<Vec<f64>>,
    pub word_attention_b: Vec<Vec<f64>>,
}

/// Scores one pair of profiles through the full graph. In `Mode::Train` the
/// two dropout sites are live and `rng` is consumed; eval mode is
/// deterministic. `retain` keeps the grid and attention weights.
pub fn forward_pair(
    model: &CoupleNet,
    a: &UserProfile,
    b: &UserProfile,
    mode: Mode,
    rng: &mut RngState,
    retain: bool,
) -> Result<PairScore> {
    let mut tape = Tape::new(mode);
    let (enc_a, wa, slots_a) = model.encode_profile_graph(&mut tape, a, rng)?;
    let (enc_b, wb, slots_b) = model.encode_profile_graph(&mut tape, b, rng)?;
    let (score, a1, a2) = model.pair_graph(&mut tape, &enc_a, &enc_b, rng)?;
    let score_value = tape.value(score).item();
    let degenerate = {
        let norm = |vars: &[Var]| -> f64 {
            vars.iter()
                .map(|v| dense::dot_slices(&tape.value(*v).data, &tape.value(*v).data))
                .sum()
        };
        norm(&enc_a) == 0.0 || norm(&enc_b) == 0.0 || {
            // cosine already reports 0 for zero-norm pooled vectors
            false
        }
    };
    let components = if retain {
        let matrix_of = |vars: &[Var], tape: &Tape| {
            let n = tape.value(vars[0]).len();
            let mut data = Vec::with_capacity(vars.len() * n);
            for v in vars {
                data.extend_from_slice(&tape.value(*v).data);
            }
            DenseArray::from_vec(&[vars.len(), n], data)
        };
        let t1 = matrix_of(&enc_a, &tape);
        let t2 = matrix_of(&enc_b, &tape);
        let wc = model.store.value(PARAM_COUPLE_W);
        let bc = model.store.value(PARAM_COUPLE_B).item();
        let grid = similarity_grid(&t1, enc_a.len(), &t2, enc_b.len(), wc, bc)?;
        let collect_words = |ws: Vec<Option<Var>>, tape: &Tape| -> Vec<Vec<f64>> {
            ws.into_iter()
                .map(|w| w.map(|v| tape.value(v).data.clone()).unwrap_or_default())
                .collect()
        };
        Some(PairComponents {
            grid,
            attention_a: tape.value(a1).data.clone(),
            attention_b: tape.value(a2).data.clone(),
            slots_a,
            slots_b,
            word_attention_a: collect_words(wa, &tape),
            word_attention_b: collect_words(wb, &tape),
        })
    } else {
        None
    };
    Ok(PairScore {
        score: score_value,
        degenerate: degenerate && score_value == 0.0,
        components,
    })
}

impl RankModel for CoupleNet {
    fn name(&self) -> &'static str {
        "couplenet"
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn encode_user(&self, profile: &UserProfile) -> Result<UserEncoding> {
        let mut tape = Tape::eval();
        let mut rng = RngState::new(0); // never consumed in eval mode
        let (vectors, weights, slots) = self.encode_profile_graph(&mut tape, profile, &mut rng)?;
        let n = self.cfg.n;
        let mut data = Vec::with_capacity(vectors.len() * n);
        for v in &vectors {
            data.extend_from_slice(&tape.value(*v).data);
        }
        let word_attention = weights
            .into_iter()
            .map(|w| w.map(|v| tape.value(v).data.clone()).unwrap_or_default())
            .collect();
        Ok(UserEncoding::TweetMatrix {
            user_id: profile.user_id.clone(),
            matrix: DenseArray::from_vec(&[vectors.len(), n], data),
            word_attention,
            slots,
        })
    }

    fn score_encodings(
        &self,
        a: &UserEncoding,
        b: &UserEncoding,
        detail: bool,
    ) -> Result<ScoreDetail> {
        let (UserEncoding::TweetMatrix { matrix: t1, .. }, UserEncoding::TweetMatrix { matrix: t2, .. }) =
            (a, b)
        else {
            return Err(Error::Config("couplenet expects tweet-matrix encodings".into()));
        };
        let wc = self.store.value(PARAM_COUPLE_W);
        let bc = self.store.value(PARAM_COUPLE_B).item();
        let grid = similarity_grid(t1, t1.rows(), t2, t2.rows(), wc, bc)?;
        let (a1, a2) = coupled_attention(&grid)?;
        let (u1, u2) = user_representations(t1, t2, &a1, &a2)?;
        let (score, degenerate) = cosine_score(&u1, &u2)?;
        Ok(ScoreDetail {
            score,
            degenerate,
            attention: detail.then_some((a1.data, a2.data)),
        })
    }

    fn triplet_loss(
        &self,
        tape: &mut Tape,
        anchor: &UserProfile,
        positive: &UserProfile,
        negative: &UserProfile,
        rng: &mut RngState,
    ) -> Result<Var> {
        let (enc_a, _, _) = self.encode_profile_graph(tape, anchor, rng)?;
        let (enc_p, _, _) = self.encode_profile_graph(tape, positive, rng)?;
        let (enc_n, _, _) = self.encode_profile_graph(tape, negative, rng)?;
        let (s_pos, _, _) = self.pair_graph(tape, &enc_a, &enc_p, rng)?;
        let (s_neg, _, _) = self.pair_graph(tape, &enc_a, &enc_n, rng)?;
        tape.hinge(s_pos, s_neg, self.cfg.margin)
    }

    fn has_attention(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::profile::TokenizedTweet;
    use crate::numkit::gradcheck::grad_check;

    fn tweet(ids: &[u32], l: usize) -> TokenizedTweet {
        let mut token_ids = ids.to_vec();
        let valid_len = ids.len();
        token_ids.resize(l, 0);
        TokenizedTweet {
            token_ids,
            valid_len,
        }
    }

    fn toy_profile(user: &str, seed: u32, k: usize, l: usize, vocab: u32) -> UserProfile {
        // small deterministic profiles over a toy vocabulary
        let mut tweets = Vec::new();
        for i in 0..k {
            let len = 1 + ((seed as usize + i) % l);
            let ids: Vec<u32> = (0..len)
                .map(|j| 2 + ((seed + i as u32 * 7 + j as u32 * 3) % (vocab - 2)))
                .collect();
            tweets.push(tweet(&ids, l));
        }
        UserProfile {
            user_id: user.to_string(),
            tweets,
            tweet_valid_count: k,
        }
    }

    fn toy_model(seed: u64) -> CoupleNet {
        CoupleNet::new(
            20,
            CoupleNetConfig {
                n: 8,
                d: 8,
                margin: 0.2,
                init_std: 0.3,
            },
            seed,
            None,
        )
        .unwrap()
    }

    fn rand_matrix(rows: usize, cols: usize, rng: &mut RngState) -> DenseArray {
        DenseArray::from_vec(
            &[rows, cols],
            (0..rows * cols).map(|_| rng.next_gaussian()).collect(),
        )
    }

    #[test]
    fn grid_constant_when_weight_is_zero() {
        let t1 = DenseArray::from_vec(&[2, 3], vec![1.0; 6]);
        let t2 = DenseArray::from_vec(&[2, 3], vec![2.0; 6]);
        let w = DenseArray::zeros(&[3]);
        let grid = similarity_grid(&t1, 2, &t2, 2, &w, 0.7).unwrap();
        assert!(grid.s.data.iter().all(|&x| (x - 0.7).abs() < 1e-15));
    }

    #[test]
    fn grid_matches_per_cell_affine_oracle() {
        let mut rng = RngState::new(21);
        let n = 5;
        let t1 = rand_matrix(3, n, &mut rng);
        let t2 = rand_matrix(3, n, &mut rng);
        let w = DenseArray::from_vec(&[n], (0..n).map(|_| rng.next_gaussian()).collect());
        let b = 0.3;
        let grid = similarity_grid(&t1, 3, &t2, 3, &w, b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                // direct formula: shared weight on each half of the pair
                let want = dense::dot_slices(t1.row(i), &w.data)
                    + dense::dot_slices(t2.row(j), &w.data)
                    + b;
                assert!((grid.s.at(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_requires_valid_tweets() {
        let t = DenseArray::zeros(&[2, 3]);
        let w = DenseArray::zeros(&[3]);
        assert!(matches!(
            similarity_grid(&t, 0, &t, 2, &w, 0.0),
            Err(Error::EmptyProfile { .. })
        ));
    }

    #[test]
    fn single_tweet_each_gives_unit_attention() {
        let mut rng = RngState::new(22);
        let t1 = rand_matrix(1, 4, &mut rng);
        let t2 = rand_matrix(1, 4, &mut rng);
        let w = DenseArray::from_vec(&[4], vec![0.1, 0.2, 0.3, 0.4]);
        let grid = similarity_grid(&t1, 1, &t2, 1, &w, 0.0).unwrap();
        assert_eq!(grid.s.shape, vec![1, 1]);
        let (a1, a2) = coupled_attention(&grid).unwrap();
        assert_eq!(a1.data, vec![1.0]);
        assert_eq!(a2.data, vec![1.0]);
        let (u1, u2) = user_representations(&t1, &t2, &a1, &a2).unwrap();
        assert_eq!(u1.data, t1.data);
        assert_eq!(u2.data, t2.data);
    }

    #[test]
    fn constant_grid_gives_uniform_attention() {
        let s = DenseArray::from_vec(&[3, 3], vec![0.4; 9]);
        let grid = SimilarityGrid {
            s,
            valid_rows: vec![true; 3],
            valid_cols: vec![true; 3],
        };
        let (a1, a2) = coupled_attention(&grid).unwrap();
        for x in a1.data.iter().chain(a2.data.iter()) {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_row_takes_all_weight_in_the_limit() {
        let mut s = DenseArray::zeros(&[3, 3]);
        for j in 0..3 {
            s.data[3 + j] = 80.0; // second row towers over the rest
        }
        let grid = SimilarityGrid {
            s,
            valid_rows: vec![true; 3],
            valid_cols: vec![true; 3],
        };
        let (a1, _) = coupled_attention(&grid).unwrap();
        assert!(a1.data[1] > 1.0 - 1e-12);
    }

    #[test]
    fn coupled_attention_matches_brute_force() {
        let mut rng = RngState::new(23);
        let s = rand_matrix(4, 4, &mut rng);
        let grid = SimilarityGrid {
            s: s.clone(),
            valid_rows: vec![true; 4],
            valid_cols: vec![true; 4],
        };
        let (a1, a2) = coupled_attention(&grid).unwrap();
        // brute force: explicit max then softmax
        let mut row_max = vec![f64::NEG_INFINITY; 4];
        let mut col_max = vec![f64::NEG_INFINITY; 4];
        for i in 0..4 {
            for j in 0..4 {
                row_max[i] = row_max[i].max(s.at(i, j));
                col_max[j] = col_max[j].max(s.at(i, j));
            }
        }
        let softmax = |v: &[f64]| {
            let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
            let z: f64 = e.iter().sum();
            e.into_iter().map(|x| x / z).collect::<Vec<f64>>()
        };
        for (got, want) in a1.data.iter().zip(softmax(&row_max)) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in a2.data.iter().zip(softmax(&col_max)) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_slots_get_zero_weight() {
        let mut rng = RngState::new(24);
        let t1 = rand_matrix(4, 3, &mut rng);
        let t2 = rand_matrix(4, 3, &mut rng);
        let w = DenseArray::from_vec(&[3], vec![0.3, -0.2, 0.5]);
        let grid = similarity_grid(&t1, 2, &t2, 3, &w, 0.1).unwrap();
        let (a1, a2) = coupled_attention(&grid).unwrap();
        assert_eq!(&a1.data[2..], &[0.0, 0.0]);
        assert_eq!(a2.data[3], 0.0);
        assert!((a1.data.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((a2.data.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_weights_give_mean_representation() {
        let t = DenseArray::from_vec(&[2, 2], vec![1.0, 3.0, 3.0, 5.0]);
        let a = DenseArray::from_vec(&[2], vec![0.5, 0.5]);
        let (u, _) = user_representations(&t, &t, &a, &a).unwrap();
        assert_eq!(u.data, vec![2.0, 4.0]);
    }

    #[test]
    fn representation_matches_weighted_sum_oracle() {
        let mut rng = RngState::new(25);
        let t = rand_matrix(3, 4, &mut rng);
        let raw: Vec<f64> = (0..3).map(|_| rng.next_f64()).collect();
        let z: f64 = raw.iter().sum();
        let a = DenseArray::from_vec(&[3], raw.iter().map(|x| x / z).collect());
        let (u, _) = user_representations(&t, &t, &a, &a).unwrap();
        for j in 0..4 {
            let want: f64 = (0..3).map(|i| a.data[i] * t.at(i, j)).sum();
            assert!((u.data[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_trivials() {
        let u = DenseArray::from_vec(&[3], vec![1.0, 2.0, -1.0]);
        assert_eq!(cosine_score(&u, &u).unwrap(), (1.0, false));
        let v = DenseArray::from_vec(&[3], vec![2.0, -1.0, 0.0]);
        let (c, _) = cosine_score(&u, &v).unwrap();
        assert!(c.abs() < 1e-12);
        let neg = dense::scale(&u, -1.0);
        assert_eq!(cosine_score(&u, &neg).unwrap().0, -1.0);
    }

    #[test]
    fn hinge_trivials() {
        assert_eq!(hinge_loss(0.9, 0.1, 0.2), 0.0);
        assert!((hinge_loss(0.3, 0.4, 0.2) - 0.3).abs() < 1e-15);
        assert!((hinge_loss(0.5, 0.5, 0.2) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn forward_is_symmetric_in_its_arguments() {
        let model = toy_model(31);
        let a = toy_profile("alice", 1, 3, 4, 20);
        let b = toy_profile("bob", 5, 2, 4, 20);
        let mut rng = RngState::new(0);
        let ab = forward_pair(&model, &a, &b, Mode::Eval, &mut rng, false).unwrap();
        let ba = forward_pair(&model, &b, &a, Mode::Eval, &mut rng, false).unwrap();
        assert_eq!(ab.score, ba.score);
    }

    #[test]
    fn identical_profiles_score_one() {
        let model = toy_model(32);
        let a = toy_profile("alice", 3, 3, 4, 20);
        let mut rng = RngState::new(0);
        let s = forward_pair(&model, &a, &a.clone(), Mode::Eval, &mut rng, false).unwrap();
        assert!((s.score - 1.0).abs() < 1e-9, "score {}", s.score);
    }

    #[test]
    fn forward_matches_chained_operation_oracles() {
        // K=3, L=4, n=8 toy instance: the composed graph must equal the
        // step-by-step composition of the public operations.
        let model = toy_model(33);
        let a = toy_profile("alice", 2, 3, 4, 20);
        let b = toy_profile("bob", 9, 3, 4, 20);
        let mut rng = RngState::new(0);
        let got = forward_pair(&model, &a, &b, Mode::Eval, &mut rng, false).unwrap();

        let enc = |p: &UserProfile| -> DenseArray {
            match model.encode_user(p).unwrap() {
                UserEncoding::TweetMatrix { matrix, .. } => matrix,
                _ => unreachable!(),
            }
        };
        let (t1, t2) = (enc(&a), enc(&b));
        let wc = model.store.value(PARAM_COUPLE_W);
        let bc = model.store.value(PARAM_COUPLE_B).item();
        let grid = similarity_grid(&t1, 3, &t2, 3, wc, bc).unwrap();
        let (a1, a2) = coupled_attention(&grid).unwrap();
        let (u1, u2) = user_representations(&t1, &t2, &a1, &a2).unwrap();
        let (want, _) = cosine_score(&u1, &u2).unwrap();
        assert!((got.score - want).abs() < 1e-12);
    }

    #[test]
    fn padding_slot_does_not_change_score() {
        let model = toy_model(34);
        let a = toy_profile("alice", 4, 3, 4, 20);
        let b = toy_profile("bob", 8, 3, 4, 20);
        let mut padded = a.clone();
        padded.tweets.push(TokenizedTweet::empty(4));
        let mut rng = RngState::new(0);
        let plain = forward_pair(&model, &a, &b, Mode::Eval, &mut rng, false).unwrap();
        let witness = forward_pair(&model, &padded, &b, Mode::Eval, &mut rng, false).unwrap();
        assert!((plain.score - witness.score).abs() < 1e-12);
    }

    #[test]
    fn empty_profile_error_propagates() {
        let model = toy_model(35);
        let mut empty = toy_profile("alice", 4, 2, 4, 20);
        empty.tweet_valid_count = 0;
        for t in &mut empty.tweets {
            *t = TokenizedTweet::empty(4);
        }
        let b = toy_profile("bob", 8, 2, 4, 20);
        let mut rng = RngState::new(0);
        assert!(matches!(
            forward_pair(&model, &empty, &b, Mode::Eval, &mut rng, false),
            Err(Error::EmptyProfile { .. })
        ));
    }

    #[test]
    fn triplet_gradients_pass_grad_check() {
        // hinge kept active by a large margin so the gradient is nonzero
        let mut model = toy_model(36);
        model.cfg.margin = 1.5;
        let anchor = toy_profile("alice", 1, 3, 4, 20);
        let pos = toy_profile("bob", 6, 3, 4, 20);
        let neg = toy_profile("carol", 11, 3, 4, 20);

        let mut tape = Tape::train();
        let mut rng = RngState::new(0);
        let loss = model
            .triplet_loss(&mut tape, &anchor, &pos, &neg, &mut rng)
            .unwrap();
        assert!(tape.value(loss).item() > 0.0, "hinge must be active");
        let mut store = model.store.clone();
        tape.backward(loss, 1.0, &mut store).unwrap();

        let cfg = model.cfg.clone();
        let loss_fn = |s: &ParamStore| -> crate::error::Result<f64> {
            let probe = CoupleNet {
                cfg: cfg.clone(),
                store: s.clone(),
            };
            let mut tape = Tape::train();
            let mut rng = RngState::new(0);
            let loss = probe.triplet_loss(&mut tape, &anchor, &pos, &neg, &mut rng)?;
            Ok(tape.value(loss).item())
        };
        let mut check_rng = RngState::new(37);
        let err = grad_check(&mut store, loss_fn, 1e-5, 400, &mut check_rng).unwrap();
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn eval_tape_and_cached_scoring_agree() {
        let model = toy_model(38);
        let a = toy_profile("alice", 2, 3, 4, 20);
        let b = toy_profile("bob", 7, 3, 4, 20);
        let mut rng = RngState::new(0);
        let via_tape = forward_pair(&model, &a, &b, Mode::Eval, &mut rng, false).unwrap();
        let ea = model.encode_user(&a).unwrap();
        let eb = model.encode_user(&b).unwrap();
        let via_cache = model.score_encodings(&ea, &eb, false).unwrap();
        assert!((via_tape.score - via_cache.score).abs() < 1e-12);
    }
}
