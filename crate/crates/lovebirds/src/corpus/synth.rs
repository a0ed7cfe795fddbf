//! Synthetic corpus generator: a desk-scale stand-in with known ground
//! truth, emitting the same JSONL schema as real ingestion.
//!
//! Every user gets a dominant and a secondary topic. Tweets pick a component
//! (dominant topic, secondary topic, or pure noise) and sample words from
//! that component's vocabulary. Couples share both topics with probability
//! `signal`; otherwise the partner's topics are drawn independently.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::raw::RawTweet;
use crate::error::{Error, Result};
use crate::numkit::rng::RngState;

pub const TOPIC_WORDS_PER_TOPIC: usize = 40;
// Long-tail noise: each word is individually rare, like real chatter.
pub const NOISE_WORDS: usize = 500;

// Tweet component mixture: dominant topic, secondary topic, rest is noise.
// Noise is deliberately heavy so that aggregation quality matters.
const DOMINANT_WEIGHT: f64 = 0.45;
const SECONDARY_WEIGHT: f64 = 0.20;
// Within a topic tweet, chance that each word comes from the topic list.
const TOPIC_WORD_RATE: f64 = 0.85;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub users: usize,
    pub topics: usize,
    pub tweets_per_user: usize,
    /// Upper bound on tokens per tweet; lengths vary in [3, tweet_len].
    pub tweet_len: usize,
    /// Probability that a couple shares both topics.
    pub signal: f64,
    pub seed: u64,
}

/// Ground truth retained for verification and explanation checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthTruth {
    /// user id -> (dominant topic, secondary topic)
    pub user_topics: BTreeMap<String, (usize, usize)>,
    /// Per couple: do the two users have the same dominant topic?
    pub couple_shared: Vec<bool>,
    pub topic_words: Vec<Vec<String>>,
    pub noise_words: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub tweets: Vec<RawTweet>,
    /// Canonical ground-truth couple pairs.
    pub pairs: Vec<(String, String)>,
    pub truth: SynthTruth,
}

pub fn user_name(index: usize) -> String {
    format!("u{index:04}")
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticCorpus> {
    if spec.topics < 2 {
        return Err(Error::Parameter("need at least 2 topics".into()));
    }
    if spec.users < 4 {
        return Err(Error::Parameter("need at least 4 users".into()));
    }
    if !(0.0..=1.0).contains(&spec.signal) {
        return Err(Error::Parameter(format!(
            "signal strength must be in [0, 1], got {}",
            spec.signal
        )));
    }
    let users = spec.users - spec.users % 2;
    let mut rng = RngState::new(spec.seed);

    let topic_words: Vec<Vec<String>> = (0..spec.topics)
        .map(|t| {
            (0..TOPIC_WORDS_PER_TOPIC)
                .map(|j| format!("t{t}w{j:02}"))
                .collect()
        })
        .collect();
    let noise_words: Vec<String> = (0..NOISE_WORDS).map(|j| format!("nz{j:03}")).collect();

    let draw_topics = |rng: &mut RngState| {
        let t0 = rng.below(spec.topics);
        let t1 = (t0 + 1 + rng.below(spec.topics - 1)) % spec.topics;
        (t0, t1)
    };

    let mut user_topics = BTreeMap::new();
    let mut couple_shared = Vec::new();
    let mut pairs = Vec::new();
    for couple in 0..users / 2 {
        let a = user_name(2 * couple);
        let b = user_name(2 * couple + 1);
        let anchor = draw_topics(&mut rng);
        let partner = if rng.next_f64() < spec.signal {
            anchor
        } else {
            draw_topics(&mut rng)
        };
        couple_shared.push(anchor.0 == partner.0);
        user_topics.insert(a.clone(), anchor);
        user_topics.insert(b.clone(), partner);
        pairs.push((a, b));
    }

    let mut tweets = Vec::with_capacity(users * spec.tweets_per_user);
    for idx in 0..users {
        let user = user_name(idx);
        let (t0, t1) = user_topics[&user];
        for j in 0..spec.tweets_per_user {
            let component = {
                let r = rng.next_f64();
                if r < DOMINANT_WEIGHT {
                    Some(t0)
                } else if r < DOMINANT_WEIGHT + SECONDARY_WEIGHT {
                    Some(t1)
                } else {
                    None
                }
            };
            let len = 3 + rng.below(spec.tweet_len.saturating_sub(2).max(1));
            let mut words = Vec::with_capacity(len);
            for _ in 0..len {
                let word = match component {
                    Some(topic) if rng.next_f64() < TOPIC_WORD_RATE => {
                        topic_words[topic][rng.below(TOPIC_WORDS_PER_TOPIC)].clone()
                    }
                    _ => noise_words[rng.below(NOISE_WORDS)].clone(),
                };
                words.push(word);
            }
            tweets.push(RawTweet {
                tweet_id: format!("s{idx:04}_{j:03}"),
                author_id: user.clone(),
                text: words.join(" "),
                mentions: Vec::new(),
                author_follower_count: 50 + rng.below(2000) as u64,
            });
        }
    }

    Ok(SyntheticCorpus {
        tweets,
        pairs,
        truth: SynthTruth {
            user_topics,
            couple_shared,
            topic_words,
            noise_words,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(users: usize, signal: f64, seed: u64) -> SynthSpec {
        SynthSpec {
            users,
            topics: 8,
            tweets_per_user: 5,
            tweet_len: 10,
            signal,
            seed,
        }
    }

    #[test]
    fn full_signal_means_every_couple_shares() {
        let corpus = generate_synthetic(&SynthSpec {
            topics: 2,
            ..spec(40, 1.0, 3)
        })
        .unwrap();
        assert!(corpus.truth.couple_shared.iter().all(|&s| s));
    }

    #[test]
    fn shared_rate_tracks_signal_strength() {
        // 200 users = 100 couples; binomial 3-sigma band around 0.9.
        let corpus = generate_synthetic(&spec(200, 0.9, 7)).unwrap();
        let n = corpus.truth.couple_shared.len() as f64;
        let rate = corpus.truth.couple_shared.iter().filter(|&&s| s).count() as f64 / n;
        let sigma = (0.9f64 * 0.1 / n).sqrt();
        assert!((rate - 0.9).abs() < 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn emits_jsonl_compatible_tweets() {
        let corpus = generate_synthetic(&spec(8, 0.5, 1)).unwrap();
        assert_eq!(corpus.tweets.len(), 8 * 5);
        assert_eq!(corpus.pairs.len(), 4);
        let line = serde_json::to_string(&corpus.tweets[0]).unwrap();
        let back: RawTweet = serde_json::from_str(&line).unwrap();
        assert_eq!(back, corpus.tweets[0]);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_synthetic(&spec(30, 0.7, 42)).unwrap();
        let b = generate_synthetic(&spec(30, 0.7, 42)).unwrap();
        assert_eq!(a.tweets, b.tweets);
        assert_eq!(a.pairs, b.pairs);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(generate_synthetic(&SynthSpec { topics: 1, ..spec(8, 0.5, 1) }).is_err());
        assert!(generate_synthetic(&spec(3, 0.5, 1)).is_err());
    }
}
