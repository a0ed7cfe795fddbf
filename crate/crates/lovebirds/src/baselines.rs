//! The six comparison systems, all trained and evaluated through the same
//! Siamese + cosine + hinge harness as the main model; only the encoder or
//! scorer differs.

use std::collections::{BTreeSet, HashMap};

use crate::corpus::profile::UserProfile;
use crate::encoders::{
    cnn_encode, gru_encode, register_conv_params, register_gru_params, ConvVars, EmbeddingTable,
    GruVars,
};
use crate::error::{Error, Result};
use crate::model::{RankModel, ScoreDetail, UserEncoding};
use crate::numkit::dense::{self, DenseArray};
use crate::numkit::params::ParamStore;
use crate::numkit::rng::RngState;
use crate::numkit::tape::{Mode, Tape, Var};

pub const PARAM_SVM_W: &str = "svm.w";
pub const EXTRA_STATIC_EMBED: &str = "static_embed.W";

/// Dropout after the recurrent/convolutional encoder output, as in the main
/// model's tweet-level site. Linear and MLP models have no such layer.
const DROPOUT_ENCODER: f64 = 0.5;

/// All valid token ids of a profile, newest tweet first, paddings removed.
fn concat_valid_ids(profile: &UserProfile) -> Vec<u32> {
    let mut ids = Vec::new();
    for tweet in profile.tweets.iter().take(profile.tweet_valid_count) {
        ids.extend_from_slice(&tweet.token_ids[..tweet.valid_len]);
    }
    ids
}

// ---------------------------------------------------------------------------
// Tf-idf featurizer
// ---------------------------------------------------------------------------

/// Sparse tf-idf features over token-id n-grams (range 1..=3), restricted to
/// the top-k most frequent n-grams of the fitting corpus. Weights are
/// `tf * (ln((1+N)/(1+df)) + 1)`, l2-normalized per document. Ties in the
/// top-k cut resolve by ascending n-gram id sequence.
#[derive(Debug, Clone)]
pub struct TfidfFeaturizer {
    ngram_index: HashMap<Vec<u32>, u32>,
    idf: Vec<f64>,
    pub k: usize,
}

const NGRAM_MAX: usize = 3;

fn tweet_ngrams(ids: &[u32]) -> impl Iterator<Item = Vec<u32>> + '_ {
    (1..=NGRAM_MAX).flat_map(move |n| ids.windows(n).map(|w| w.to_vec()))
}

impl TfidfFeaturizer {
    /// Fits on one document per profile; n-grams never cross tweet
    /// boundaries.
    pub fn fit<'a, I>(profiles: I, k: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a UserProfile>,
    {
        let mut doc_freq: HashMap<Vec<u32>, u64> = HashMap::new();
        let mut total: HashMap<Vec<u32>, u64> = HashMap::new();
        let mut n_docs = 0u64;
        for profile in profiles {
            n_docs += 1;
            let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
            for tweet in profile.tweets.iter().take(profile.tweet_valid_count) {
                for gram in tweet_ngrams(&tweet.token_ids[..tweet.valid_len]) {
                    *total.entry(gram.clone()).or_insert(0) += 1;
                    seen.insert(gram);
                }
            }
            for gram in seen {
                *doc_freq.entry(gram).or_insert(0) += 1;
            }
        }
        if n_docs == 0 || total.is_empty() {
            return Err(Error::Config("cannot fit tf-idf on an empty corpus".into()));
        }
        let mut ranked: Vec<(Vec<u32>, u64)> = total.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);

        let mut ngram_index = HashMap::new();
        let mut idf = Vec::with_capacity(ranked.len());
        for (i, (gram, _)) in ranked.into_iter().enumerate() {
            let df = doc_freq[&gram];
            idf.push(((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0);
            ngram_index.insert(gram, i as u32);
        }
        Ok(TfidfFeaturizer {
            ngram_index,
            idf,
            k,
        })
    }

    /// Sparse vector sorted by feature index; unseen n-grams are ignored.
    pub fn transform(&self, profile: &UserProfile) -> Vec<(u32, f64)> {
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for tweet in profile.tweets.iter().take(profile.tweet_valid_count) {
            for gram in tweet_ngrams(&tweet.token_ids[..tweet.valid_len]) {
                if let Some(&idx) = self.ngram_index.get(&gram) {
                    *counts.entry(idx).or_insert(0.0) += 1.0;
                }
            }
        }
        let mut vec: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(idx, tf)| (idx, tf * self.idf[idx as usize]))
            .collect();
        vec.sort_unstable_by_key(|(idx, _)| *idx);
        let norm = vec.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in vec.iter_mut() {
                *w /= norm;
            }
        }
        vec
    }
}

/// Pair feature for two sparse user vectors: absolute difference on the
/// first k coordinates, elementwise product on the second k.
pub fn tfidf_pair_feature(x: &[(u32, f64)], y: &[(u32, f64)], k: usize) -> Vec<(u32, f64)> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let xi = x.get(i);
        let yj = y.get(j);
        match (xi, yj) {
            (Some(&(ix, vx)), Some(&(iy, vy))) if ix == iy => {
                let diff = (vx - vy).abs();
                if diff != 0.0 {
                    out.push((ix, diff));
                }
                out.push((ix + k as u32, vx * vy));
                i += 1;
                j += 1;
            }
            (Some(&(ix, vx)), Some(&(iy, _))) if ix < iy => {
                out.push((ix, vx.abs()));
                i += 1;
            }
            (Some(_), Some(&(iy, vy))) => {
                out.push((iy, vy.abs()));
                j += 1;
            }
            (Some(&(ix, vx)), None) => {
                out.push((ix, vx.abs()));
                i += 1;
            }
            (None, Some(&(iy, vy))) => {
                out.push((iy, vy.abs()));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out.sort_unstable_by_key(|(idx, _)| *idx);
    out
}

fn sparse_dot(w: &DenseArray, feature: &[(u32, f64)]) -> f64 {
    feature
        .iter()
        .map(|&(idx, v)| w.data[idx as usize] * v)
        .sum()
}

// ---------------------------------------------------------------------------
// RankSVM variants: linear scoring trained with the pairwise hinge + L2
// ---------------------------------------------------------------------------

pub struct RankSvmTfidf {
    store: ParamStore,
    featurizer: TfidfFeaturizer,
    margin: f64,
}

impl RankSvmTfidf {
    pub fn new(featurizer: TfidfFeaturizer, margin: f64, init_std: f64, seed: u64) -> Self {
        let mut store = ParamStore::new();
        let mut rng = RngState::new(seed);
        store.insert_gaussian(PARAM_SVM_W, &[2 * featurizer.k], init_std, &mut rng);
        RankSvmTfidf {
            store,
            featurizer,
            margin,
        }
    }

    pub fn featurizer(&self) -> &TfidfFeaturizer {
        &self.featurizer
    }

    fn sparse_of<'a>(&self, enc: &'a UserEncoding) -> Result<&'a [(u32, f64)]> {
        match enc {
            UserEncoding::Sparse { v, .. } => Ok(v),
            _ => Err(Error::Config("tf-idf model expects sparse encodings".into())),
        }
    }
}

impl RankModel for RankSvmTfidf {
    fn name(&self) -> &'static str {
        "ranksvm_tfidf"
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn encode_user(&self, profile: &UserProfile) -> Result<UserEncoding> {
        Ok(UserEncoding::Sparse {
            user_id: profile.user_id.clone(),
            v: self.featurizer.transform(profile),
        })
    }

    fn score_encodings(
        &self,
        a: &UserEncoding,
        b: &UserEncoding,
        _detail: bool,
    ) -> Result<ScoreDetail> {
        let feature = tfidf_pair_feature(self.sparse_of(a)?, self.sparse_of(b)?, self.featurizer.k);
        let w = self.store.value(PARAM_SVM_W);
        Ok(ScoreDetail::plain(sparse_dot(w, &feature), false))
    }

    fn triplet_loss(
        &self,
        tape: &mut Tape,
        anchor: &UserProfile,
        positive: &UserProfile,
        negative: &UserProfile,
        _rng: &mut RngState,
    ) -> Result<Var> {
        let k = self.featurizer.k;
        let fa = self.featurizer.transform(anchor);
        let fp = self.featurizer.transform(positive);
        let fn_ = self.featurizer.transform(negative);
        let dense_of = |sparse: Vec<(u32, f64)>| {
            let mut v = vec![0.0; 2 * k];
            for (idx, x) in sparse {
                v[idx as usize] = x;
            }
            DenseArray::from_vec(&[2 * k], v)
        };
        let w = tape.param(PARAM_SVM_W, &self.store);
        let pos_f = tape.constant(dense_of(tfidf_pair_feature(&fa, &fp, k)));
        let neg_f = tape.constant(dense_of(tfidf_pair_feature(&fa, &fn_, k)));
        let s_pos = tape.dot(w, pos_f)?;
        let s_neg = tape.dot(w, neg_f)?;
        tape.hinge(s_pos, s_neg, self.margin)
    }
}

pub struct RankSvmEmbed {
    store: ParamStore,
    table: EmbeddingTable,
    margin: f64,
}

impl RankSvmEmbed {
    pub fn new(table: EmbeddingTable, margin: f64, init_std: f64, seed: u64) -> Self {
        let mut store = ParamStore::new();
        let mut rng = RngState::new(seed);
        store.insert_gaussian(PARAM_SVM_W, &[table.dim], init_std, &mut rng);
        RankSvmEmbed {
            store,
            table,
            margin,
        }
    }

    /// Sum of the static embeddings of every valid token.
    fn user_sum(&self, profile: &UserProfile) -> Result<DenseArray> {
        let ids = concat_valid_ids(profile);
        let mut sum = DenseArray::zeros(&[self.table.dim]);
        if ids.is_empty() {
            return Ok(sum);
        }
        let rows = self.table.embed_rows(&ids)?;
        for t in 0..rows.rows() {
            for (s, x) in sum.data.iter_mut().zip(rows.row(t)) {
                *s += x;
            }
        }
        Ok(sum)
    }

    fn vector_of<'a>(&self, enc: &'a UserEncoding) -> Result<&'a DenseArray> {
        match enc {
            UserEncoding::Vector { v, .. } => Ok(v),
            _ => Err(Error::Config("embed model expects vector encodings".into())),
        }
    }
}

impl RankModel for RankSvmEmbed {
    fn name(&self) -> &'static str {
        "ranksvm_embed"
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn encode_user(&self, profile: &UserProfile) -> Result<UserEncoding> {
        Ok(UserEncoding::Vector {
            user_id: profile.user_id.clone(),
            v: self.user_sum(profile)?,
        })
    }

    fn score_encodings(
        &self,
        a: &UserEncoding,
        b: &UserEncoding,
        _detail: bool,
    ) -> Result<ScoreDetail> {
        // the pair feature is the sum of all words of both users
        let f = dense::add(self.vector_of(a)?, self.vector_of(b)?)?;
        let w = self.store.value(PARAM_SVM_W);
        Ok(ScoreDetail::plain(
            dense::dot_slices(&w.data, &f.data),
            false,
        ))
    }

    fn triplet_loss(
        &self,
        tape: &mut Tape,
        anchor: &UserProfile,
        positive: &UserProfile,
        negative: &UserProfile,
        _rng: &mut RngState,
    ) -> Result<Var> {
        let w = tape.param(PARAM_SVM_W, &self.store);
        let sum_a = tape.constant(self.user_sum(anchor)?);
        let sum_p = tape.constant(self.user_sum(positive)?);
        let sum_n = tape.constant(self.user_sum(negative)?);
        let f_pos = tape.add(sum_a, sum_p)?;
        let f_neg = tape.add(sum_a, sum_n)?;
        let s_pos = tape.dot(w, f_pos)?;
        let s_neg = tape.dot(w, f_neg)?;
        tape.hinge(s_pos, s_neg, self.margin)
    }

    fn checkpoint_extras(&self) -> Vec<(String, DenseArray)> {
        vec![(EXTRA_STATIC_EMBED.to_string(), self.table.matrix.clone())]
    }

    fn restore_extras(&mut self, arrays: &[(String, DenseArray)]) -> Result<()> {
        for (name, value) in arrays {
            if name == EXTRA_STATIC_EMBED {
                self.table.matrix = value.clone();
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// MLP over static embeddings
// ---------------------------------------------------------------------------

pub struct MlpEmbed {
    store: ParamStore,
    table: EmbeddingTable,
    margin: f64,
    n: usize,
}

impl MlpEmbed {
    /// Canonical names: `mlp.W1` (d x n), `mlp.b1`, `mlp.W2` (n x n),
    /// `mlp.b2`.
    pub fn new(table: EmbeddingTable, n: usize, margin: f64, init_std: f64, seed: u64) -> Self {
        let mut store = ParamStore::new();
        let mut rng = RngState::new(seed);
        store.insert_gaussian("mlp.W1", &[table.dim, n], init_std, &mut rng);
        store.insert_gaussian("mlp.b1", &[n], init_std, &mut rng);
        store.insert_gaussian("mlp.W2", &[n, n], init_std, &mut rng);
        store.insert_gaussian("mlp.b2", &[n], init_std, &mut rng);
        MlpEmbed {
            store,
            table,
            margin,
            n,
        }
    }

    /// User vector: sum over words of relu-relu MLP applied to each static
    /// word embedding.
    fn user_vector_graph(&self, tape: &mut Tape, profile: &UserProfile) -> Result<Var> {
        let ids = concat_valid_ids(profile);
        let w1 = tape.param("mlp.W1", &self.store);
        let b1 = tape.param("mlp.b1", &self.store);
        let w2 = tape.param("mlp.W2", &self.store);
        let b2 = tape.param("mlp.b2", &self.store);
        let mut acc = tape.constant(DenseArray::zeros(&[self.n]));
        if ids.is_empty() {
            return Ok(acc);
        }
        let rows = tape.constant(self.table.embed_rows(&ids)?);
        for t in 0..ids.len() {
            let x = tape.row(rows, t);
            let h1 = tape.affine(x, w1, b1)?;
            let h1 = tape.relu(h1);
            let h2 = tape.affine(h1, w2, b2)?;
            let h2 = tape.relu(h2);
            acc = tape.add(acc, h2)?;
        }
        Ok(acc)
    }
}

impl RankModel for MlpEmbed {
    fn name(&self) -> &'static str {
        "mlp_embed"
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn encode_user(&self, profile: &UserProfile) -> Result<UserEncoding> {
        let mut tape = Tape::eval();
        let v = self.user_vector_graph(&mut tape, profile)?;
        Ok(UserEncoding::Vector {
            user_id: profile.user_id.clone(),
            v: tape.value(v).clone(),
        })
    }

    fn score_encodings(
        &self,
        a: &UserEncoding,
        b: &UserEncoding,
        _detail: bool,
    ) -> Result<ScoreDetail> {
        score_vectors(a, b)
    }

    fn triplet_loss(
        &self,
        tape: &mut Tape,
        anchor: &UserProfile,
        positive: &UserProfile,
        negative: &UserProfile,
        _rng: &mut RngState,
    ) -> Result<Var> {
        let va = self.user_vector_graph(tape, anchor)?;
        let vp = self.user_vector_graph(tape, positive)?;
        let vn = self.user_vector_graph(tape, negative)?;
        let s_pos = tape.cosine(va, vp)?;
        let s_neg = tape.cosine(va, vn)?;
        tape.hinge(s_pos, s_neg, self.margin)
    }

    fn checkpoint_extras(&self) -> Vec<(String, DenseArray)> {
        vec![(EXTRA_STATIC_EMBED.to_string(), self.table.matrix.clone())]
    }

    fn restore_extras(&mut self, arrays: &[(String, DenseArray)]) -> Result<()> {
        for (name, value) in arrays {
            if name == EXTRA_STATIC_EMBED {
                self.table.matrix = value.clone();
            }
        }
        Ok(())
    }
}

fn score_vectors(a: &UserEncoding, b: &UserEncoding) -> Result<ScoreDetail> {
    let (UserEncoding::Vector { v: va, .. }, UserEncoding::Vector { v: vb, .. }) = (a, b) else {
        return Err(Error::Config("expected vector encodings".into()));
    };
    let (score, degenerate) = dense::cosine(va, vb)?;
    Ok(ScoreDetail::plain(score, degenerate))
}

// ---------------------------------------------------------------------------
// Concatenated-document GRU
// ---------------------------------------------------------------------------

pub struct ConcatGru {
    store: ParamStore,
    margin: f64,
    n: usize,
}

impl ConcatGru {
    pub fn new(
        vocab_size: usize,
        d: usize,
        n: usize,
        margin: f64,
        init_std: f64,
        seed: u64,
        embedding: Option<DenseArray>,
    ) -> Result<Self> {
        let store = neural_store(vocab_size, d, n, init_std, seed, embedding, false)?;
        Ok(ConcatGru { store, margin, n })
    }

    /// Last valid hidden state of one GRU pass over the user's concatenated
    /// tweets; zero vector for an empty profile.
    fn user_vector_graph(
        &self,
        tape: &mut Tape,
        profile: &UserProfile,
        rng: &mut RngState,
    ) -> Result<Var> {
        let ids = concat_valid_ids(profile);
        if ids.is_empty() {
            return Ok(tape.constant(DenseArray::zeros(&[self.n])));
        }
        let table = tape.param(crate::couplenet::PARAM_EMBED, &self.store);
        let gru = GruVars::bind(tape, &self.store, "gru.");
        let x = tape.embed(table, &ids)?;
        let states = gru_encode(tape, x, ids.len(), &gru)?;
        let last = *states.last().expect("non-empty sequence");
        tape.dropout(last, DROPOUT_ENCODER, rng)
    }
}

impl RankModel for ConcatGru {
    fn name(&self) -> &'static str {
        "gru"
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn encode_user(&self, profile: &UserProfile) -> Result<UserEncoding> {
        let mut tape = Tape::eval();
        let mut rng = RngState::new(0);
        let v = self.user_vector_graph(&mut tape, profile, &mut rng)?;
        Ok(UserEncoding::Vector {
            user_id: profile.user_id.clone(),
            v: tape.value(v).clone(),
        })
    }

    fn score_encodings(
        &self,
        a: &UserEncoding,
        b: &UserEncoding,
        _detail: bool,
    ) -> Result<ScoreDetail> {
        score_vectors(a, b)
    }

    fn triplet_loss(
        &self,
        tape: &mut Tape,
        anchor: &UserProfile,
        positive: &UserProfile,
        negative: &UserProfile,
        rng: &mut RngState,
    ) -> Result<Var> {
        let va = self.user_vector_graph(tape, anchor, rng)?;
        let vp = self.user_vector_graph(tape, positive, rng)?;
        let vn = self.user_vector_graph(tape, negative, rng)?;
        let s_pos = tape.cosine(va, vp)?;
        let s_neg = tape.cosine(va, vn)?;
        tape.hinge(s_pos, s_neg, self.margin)
    }
}

// ---------------------------------------------------------------------------
// Hierarchical GRU without attention
// ---------------------------------------------------------------------------

pub struct HGru {
    store: ParamStore,
    margin: f64,
    n: usize,
}

impl HGru {
    pub fn new(
        vocab_size: usize,
        d: usize,
        n: usize,
        margin: f64,
        init_std: f64,
        seed: u64,
        embedding: Option<DenseArray>,
    ) -> Result<Self> {
        let store = neural_store(vocab_size, d, n, init_std, seed, embedding, false)?;
        Ok(HGru { store, margin, n })
    }

    /// Sum over valid tweets of each tweet's last hidden state; no attention
    /// anywhere.
    fn user_vector_graph(
        &self,
        tape: &mut Tape,
        profile: &UserProfile,
        rng: &mut RngState,
    ) -> Result<Var> {
        let table = tape.param(crate::couplenet::PARAM_EMBED, &self.store);
        let gru = GruVars::bind(tape, &self.store, "gru.");
        let mut acc = tape.constant(DenseArray::zeros(&[self.n]));
        for tweet in profile.tweets.iter().take(profile.tweet_valid_count) {
            if tweet.valid_len == 0 {
                continue;
            }
            let x = tape.embed(table, &tweet.token_ids)?;
            let states = gru_encode(tape, x, tweet.valid_len, &gru)?;
            let last = states[tweet.valid_len - 1];
            let last = tape.dropout(last, DROPOUT_ENCODER, rng)?;
            acc = tape.add(acc, last)?;
        }
        Ok(acc)
    }
}

impl RankModel for HGru {
    fn name(&self) -> &'static str {
        "hgru"
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn encode_user(&self, profile: &UserProfile) -> Result<UserEncoding> {
        let mut tape = Tape::eval();
        let mut rng = RngState::new(0);
        let v = self.user_vector_graph(&mut tape, profile, &mut rng)?;
        Ok(UserEncoding::Vector {
            user_id: profile.user_id.clone(),
            v: tape.value(v).clone(),
        })
    }

    fn score_encodings(
        &self,
        a: &UserEncoding,
        b: &UserEncoding,
        _detail: bool,
    ) -> Result<ScoreDetail> {
        score_vectors(a, b)
    }

    fn triplet_loss(
        &self,
        tape: &mut Tape,
        anchor: &UserProfile,
        positive: &UserProfile,
        negative: &UserProfile,
        rng: &mut RngState,
    ) -> Result<Var> {
        let va = self.user_vector_graph(tape, anchor, rng)?;
        let vp = self.user_vector_graph(tape, positive, rng)?;
        let vn = self.user_vector_graph(tape, negative, rng)?;
        let s_pos = tape.cosine(va, vp)?;
        let s_neg = tape.cosine(va, vn)?;
        tape.hinge(s_pos, s_neg, self.margin)
    }
}

// ---------------------------------------------------------------------------
// Convolutional encoder over the concatenated document
// ---------------------------------------------------------------------------

pub struct DeepConn {
    store: ParamStore,
    margin: f64,
    n: usize,
}

impl DeepConn {
    pub fn new(
        vocab_size: usize,
        d: usize,
        n: usize,
        margin: f64,
        init_std: f64,
        seed: u64,
        embedding: Option<DenseArray>,
    ) -> Result<Self> {
        let store = neural_store(vocab_size, d, n, init_std, seed, embedding, true)?;
        Ok(DeepConn { store, margin, n })
    }

    fn user_vector_graph(
        &self,
        tape: &mut Tape,
        profile: &UserProfile,
        rng: &mut RngState,
    ) -> Result<Var> {
        let ids = concat_valid_ids(profile);
        if ids.is_empty() {
            return Ok(tape.constant(DenseArray::zeros(&[self.n])));
        }
        let table = tape.param(crate::couplenet::PARAM_EMBED, &self.store);
        let conv = ConvVars::bind(tape, &self.store, "conv.");
        let x = tape.embed(table, &ids)?;
        let pooled = cnn_encode(tape, x, &conv)?;
        tape.dropout(pooled, DROPOUT_ENCODER, rng)
    }
}

impl RankModel for DeepConn {
    fn name(&self) -> &'static str {
        "deepconn"
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn encode_user(&self, profile: &UserProfile) -> Result<UserEncoding> {
        let mut tape = Tape::eval();
        let mut rng = RngState::new(0);
        let v = self.user_vector_graph(&mut tape, profile, &mut rng)?;
        Ok(UserEncoding::Vector {
            user_id: profile.user_id.clone(),
            v: tape.value(v).clone(),
        })
    }

    fn score_encodings(
        &self,
        a: &UserEncoding,
        b: &UserEncoding,
        _detail: bool,
    ) -> Result<ScoreDetail> {
        score_vectors(a, b)
    }

    fn triplet_loss(
        &self,
        tape: &mut Tape,
        anchor: &UserProfile,
        positive: &UserProfile,
        negative: &UserProfile,
        rng: &mut RngState,
    ) -> Result<Var> {
        let va = self.user_vector_graph(tape, anchor, rng)?;
        let vp = self.user_vector_graph(tape, positive, rng)?;
        let vn = self.user_vector_graph(tape, negative, rng)?;
        let s_pos = tape.cosine(va, vp)?;
        let s_neg = tape.cosine(va, vn)?;
        tape.hinge(s_pos, s_neg, self.margin)
    }
}

/// Parameter store shared by the neural baselines: a trainable embedding
/// plus either GRU gates or conv filters. The PAD row is zeroed.
fn neural_store(
    vocab_size: usize,
    d: usize,
    n: usize,
    init_std: f64,
    seed: u64,
    embedding: Option<DenseArray>,
    conv: bool,
) -> Result<ParamStore> {
    let mut store = ParamStore::new();
    let mut rng = RngState::new(seed);
    if conv {
        register_conv_params(&mut store, "conv.", d, n, init_std, &mut rng);
    } else {
        register_gru_params(&mut store, "gru.", d, n, init_std, &mut rng);
    }
    store.insert_gaussian(crate::couplenet::PARAM_EMBED, &[vocab_size, d], init_std, &mut rng);
    if let Some(matrix) = embedding {
        if matrix.shape != [vocab_size, d] {
            return Err(Error::Config(format!(
                "embedding shape {:?} does not match vocab {vocab_size} x d {d}",
                matrix.shape
            )));
        }
        store.get_mut(crate::couplenet::PARAM_EMBED).value = matrix;
    }
    store.get_mut(crate::couplenet::PARAM_EMBED).value.data[..d].fill(0.0);
    Ok(store)
}
