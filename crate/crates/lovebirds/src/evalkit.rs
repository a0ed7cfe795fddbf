//! Ranking evaluation against sampled negatives, metric computation, and
//! attention-based explanation export.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::dataset::Dataset;
use crate::corpus::pairs::Split;
use crate::corpus::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{RankModel, UserEncoding};
use crate::numkit::rng::RngState;

/// One evaluated test pair: the golden partner ranked among sampled
/// negatives. `scores[0]` is the golden score, the rest follow
/// `negative_ids` in draw order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingResult {
    pub pair_id: String,
    pub golden_rank: usize,
    pub scores: Vec<f64>,
    pub negative_ids: Vec<String>,
    pub seed: u64,
}

/// Pessimistic rank of the golden score among the negatives: ties count
/// against the golden sample.
pub fn pessimistic_rank(golden: f64, negatives: &[f64]) -> usize {
    1 + negatives
        .iter()
        .filter(|&&s| s > golden || s == golden)
        .count()
}

/// Ranks the golden partner for one anchor against `negatives` users drawn
/// from the pool (anchor and golden excluded), using cached encodings.
pub fn rank_candidates(
    model: &dyn RankModel,
    anchor: &str,
    golden: &str,
    encodings: &BTreeMap<String, UserEncoding>,
    negatives: usize,
    rng: &mut RngState,
) -> Result<RankingResult> {
    let anchor_enc = encodings
        .get(anchor)
        .ok_or_else(|| Error::Config(format!("no encoding for anchor {anchor}")))?;
    let golden_enc = encodings
        .get(golden)
        .ok_or_else(|| Error::Config(format!("no encoding for golden {golden}")))?;

    let pool: Vec<&String> = encodings
        .keys()
        .filter(|u| u.as_str() != anchor && u.as_str() != golden)
        .collect();
    if pool.len() < negatives {
        return Err(Error::Config(format!(
            "candidate pool has {} users but {negatives} negatives were requested; \
             rerun with a smaller --negatives",
            pool.len()
        )));
    }
    let seed = rng.seed();
    let drawn = rng.sample_distinct(&pool, negatives);

    let golden_score = model.score_encodings(anchor_enc, golden_enc, false)?.score;
    let mut scores = Vec::with_capacity(negatives + 1);
    scores.push(golden_score);
    let mut negative_ids = Vec::with_capacity(negatives);
    for user in drawn {
        let score = model
            .score_encodings(anchor_enc, &encodings[user.as_str()], false)?
            .score;
        scores.push(score);
        negative_ids.push(user.clone());
    }
    let golden_rank = pessimistic_rank(golden_score, &scores[1..]);
    Ok(RankingResult {
        pair_id: format!("{anchor}|{golden}"),
        golden_rank,
        scores,
        negative_ids,
        seed,
    })
}

/// Aggregate ranking metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hr_at: BTreeMap<usize, f64>,
    pub accuracy: f64,
    pub mrr: f64,
    pub mean_rank: f64,
    pub n_test: usize,
}

pub fn compute_metrics(results: &[RankingResult]) -> Result<MetricsReport> {
    if results.is_empty() {
        return Err(Error::Config("no ranking results to aggregate".into()));
    }
    let n = results.len() as f64;
    let mut hr_at = BTreeMap::new();
    for cutoff in [3usize, 5, 10] {
        let hits = results.iter().filter(|r| r.golden_rank <= cutoff).count();
        hr_at.insert(cutoff, hits as f64 / n);
    }
    let accuracy = results.iter().filter(|r| r.golden_rank == 1).count() as f64 / n;
    let mrr = results.iter().map(|r| 1.0 / r.golden_rank as f64).sum::<f64>() / n;
    let mean_rank = results.iter().map(|r| r.golden_rank as f64).sum::<f64>() / n;
    Ok(MetricsReport {
        hr_at,
        accuracy,
        mrr,
        mean_rank,
        n_test: results.len(),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvalConfig {
    pub split: Split,
    pub negatives: usize,
    pub seed: u64,
}

/// Evaluates a model over every pair of one split. The anchor is the
/// canonical first user of each pair; negatives are drawn from all users
/// with a per-case derived seed, so case order cannot change results.
pub fn evaluate_split(
    model: &dyn RankModel,
    dataset: &Dataset,
    k: usize,
    cfg: &EvalConfig,
) -> Result<(MetricsReport, Vec<RankingResult>)> {
    let encodings = encode_all_users(model, dataset, k)?;
    let mut results = Vec::new();
    for (case_idx, pair) in dataset
        .pairs
        .iter()
        .filter(|p| p.split == cfg.split)
        .enumerate()
    {
        let mut case_rng = RngState::derive(cfg.seed, case_idx as u64);
        results.push(rank_candidates(
            model,
            &pair.user_a,
            &pair.user_b,
            &encodings,
            cfg.negatives,
            &mut case_rng,
        )?);
    }
    let metrics = compute_metrics(&results)?;
    Ok((metrics, results))
}

/// Encodes every profile at the given K once, for reuse across all pair
/// scorings of an evaluation run.
pub fn encode_all_users(
    model: &dyn RankModel,
    dataset: &Dataset,
    k: usize,
) -> Result<BTreeMap<String, UserEncoding>> {
    if k > dataset.k {
        return Err(Error::Config(format!(
            "requested K {k} exceeds the dataset's stored K {}",
            dataset.k
        )));
    }
    let mut encodings = BTreeMap::new();
    for (user, profile) in &dataset.profiles {
        let truncated = profile.truncated(k);
        encodings.insert(user.clone(), model.encode_user(&truncated)?);
    }
    Ok(encodings)
}

/// The metrics file written by evaluation runs; headers record the decisions
/// that matter for comparability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema: String,
    pub model: String,
    pub k: usize,
    pub split: String,
    pub negatives: usize,
    pub seed: u64,
    pub tie_breaking: String,
    pub negative_pool: String,
    pub metrics: MetricsReport,
}

impl MetricsFile {
    pub fn new(
        model: &str,
        k: usize,
        cfg: &EvalConfig,
        metrics: MetricsReport,
    ) -> Self {
        MetricsFile {
            schema: "lovebirds.metrics/1".to_string(),
            model: model.to_string(),
            k,
            split: cfg.split.to_string(),
            negatives: cfg.negatives,
            seed: cfg.seed,
            tie_breaking: "pessimistic".to_string(),
            negative_pool: "all_users".to_string(),
            metrics,
        }
    }
}

// ---------------------------------------------------------------------------
// Explanation export
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplainedTweet {
    pub slot: usize,
    pub weight: f64,
    pub tokens: Vec<String>,
    pub word_weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplainedUser {
    pub user_id: String,
    /// Coupled-attention weight of every valid tweet, in slot order.
    pub tweet_weights: Vec<f64>,
    pub top: Vec<ExplainedTweet>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub user_a: String,
    pub user_b: String,
    pub score: f64,
    pub users: [ExplainedUser; 2],
}

/// Exports each user's most influential tweets by coupled-attention weight,
/// decoded back to tokens, with the word-level attention behind each tweet.
pub fn explain(
    model: &dyn RankModel,
    dataset: &Dataset,
    k: usize,
    user_a: &str,
    user_b: &str,
    top_m: usize,
) -> Result<ExplanationRecord> {
    if !model.has_attention() {
        return Err(Error::NoAttention(model.name().to_string()));
    }
    let profile_a = dataset.profile(user_a)?.truncated(k);
    let profile_b = dataset.profile(user_b)?.truncated(k);
    let enc_a = model.encode_user(&profile_a)?;
    let enc_b = model.encode_user(&profile_b)?;
    let detail = model.score_encodings(&enc_a, &enc_b, true)?;
    let (att_a, att_b) = detail
        .attention
        .ok_or_else(|| Error::NoAttention(model.name().to_string()))?;

    let explain_side = |enc: &UserEncoding,
                        weights: &[f64],
                        profile: &crate::corpus::profile::UserProfile|
     -> Result<ExplainedUser> {
        let UserEncoding::TweetMatrix {
            user_id,
            word_attention,
            slots,
            ..
        } = enc
        else {
            return Err(Error::NoAttention(model.name().to_string()));
        };
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| {
            weights[b]
                .partial_cmp(&weights[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let top = order
            .into_iter()
            .take(top_m)
            .map(|i| {
                let slot = slots[i];
                let tweet = &profile.tweets[slot];
                ExplainedTweet {
                    slot,
                    weight: weights[i],
                    tokens: decode_tokens(&dataset.vocab, &tweet.token_ids[..tweet.valid_len]),
                    word_weights: word_attention[i].clone(),
                }
            })
            .collect();
        Ok(ExplainedUser {
            user_id: user_id.clone(),
            tweet_weights: weights.to_vec(),
            top,
        })
    };

    Ok(ExplanationRecord {
        user_a: user_a.to_string(),
        user_b: user_b.to_string(),
        score: detail.score,
        users: [
            explain_side(&enc_a, &att_a, &profile_a)?,
            explain_side(&enc_b, &att_b, &profile_b)?,
        ],
    })
}

fn decode_tokens(vocab: &Vocabulary, ids: &[u32]) -> Vec<String> {
    ids.iter().map(|&id| vocab.decode(id).to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(rank: usize) -> RankingResult {
        RankingResult {
            pair_id: "a|b".into(),
            golden_rank: rank,
            scores: Vec::new(),
            negative_ids: Vec::new(),
            seed: 0,
        }
    }

    #[test]
    fn metrics_all_top_ranked() {
        let m = compute_metrics(&[result(1), result(1)]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.mrr, 1.0);
        assert_eq!(m.mean_rank, 1.0);
        assert_eq!(m.hr_at[&3], 1.0);
    }

    #[test]
    fn metrics_rank_four_by_definition() {
        let m = compute_metrics(&[result(4)]).unwrap();
        assert_eq!(m.mrr, 0.25);
        assert_eq!(m.hr_at[&3], 0.0);
        assert_eq!(m.hr_at[&5], 1.0);
    }

    #[test]
    fn metrics_hand_arithmetic_oracle() {
        let m = compute_metrics(&[result(2), result(7), result(50)]).unwrap();
        assert!((m.hr_at[&10] - 2.0 / 3.0).abs() < 1e-9);
        assert!((m.mean_rank - 59.0 / 3.0).abs() < 1e-9);
        let want_mrr = (0.5 + 1.0 / 7.0 + 1.0 / 50.0) / 3.0;
        assert!((m.mrr - want_mrr).abs() < 1e-12);
    }

    #[test]
    fn empty_results_error() {
        assert!(compute_metrics(&[]).is_err());
    }

    #[test]
    fn pessimistic_tie_breaking() {
        // all scores identical: the golden ranks dead last
        assert_eq!(pessimistic_rank(0.5, &vec![0.5; 100]), 101);
        // strictly top score wins rank 1
        assert_eq!(pessimistic_rank(0.9, &vec![0.5; 100]), 1);
    }

    #[test]
    fn hr_monotone_in_cutoff() {
        let results: Vec<RankingResult> = [1, 3, 4, 6, 9, 11, 40].map(result).into_iter().collect();
        let m = compute_metrics(&results).unwrap();
        assert!(m.hr_at[&3] <= m.hr_at[&5]);
        assert!(m.hr_at[&5] <= m.hr_at[&10]);
    }
}
