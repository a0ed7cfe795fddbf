//! Fixed-shape user profiles: K tweet slots of L token ids each.

use serde::{Deserialize, Serialize};

use crate::corpus::vocab::{Vocabulary, PAD_ID};
use crate::error::{Error, Result};

/// One tweet as exactly L token ids; positions at or beyond `valid_len` are
/// PAD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedTweet {
    pub token_ids: Vec<u32>,
    pub valid_len: usize,
}

impl TokenizedTweet {
    pub fn empty(l: usize) -> Self {
        TokenizedTweet {
            token_ids: vec![PAD_ID; l],
            valid_len: 0,
        }
    }

    pub fn from_tokens(tokens: &[String], vocab: &Vocabulary, l: usize) -> Self {
        let valid_len = tokens.len().min(l);
        let mut token_ids: Vec<u32> = tokens[..valid_len].iter().map(|t| vocab.lookup(t)).collect();
        token_ids.resize(l, PAD_ID);
        TokenizedTweet {
            token_ids,
            valid_len,
        }
    }
}

/// An ordered set of up to K tokenized tweets, most recent first. Slots at
/// index >= `tweet_valid_count` are all-PAD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub tweets: Vec<TokenizedTweet>,
    pub tweet_valid_count: usize,
}

impl UserProfile {
    pub fn k(&self) -> usize {
        self.tweets.len()
    }

    pub fn l(&self) -> usize {
        self.tweets.first().map_or(0, |t| t.token_ids.len())
    }

    pub fn is_empty(&self) -> bool {
        self.tweet_valid_count == 0
    }

    /// Copy restricted to the newest `k` tweet slots; used to train at a
    /// smaller K than the stored corpus.
    pub fn truncated(&self, k: usize) -> UserProfile {
        let mut tweets: Vec<TokenizedTweet> = self.tweets.iter().take(k).cloned().collect();
        let l = self.l();
        while tweets.len() < k {
            tweets.push(TokenizedTweet::empty(l));
        }
        UserProfile {
            user_id: self.user_id.clone(),
            tweets,
            tweet_valid_count: self.tweet_valid_count.min(k),
        }
    }
}

/// Encodes a cleaned, tokenized timeline (most recent first) into the fixed
/// K x L grid. Tweets that tokenize to nothing are skipped; the newest K
/// remaining tweets are kept, each truncated or padded to L.
pub fn encode_profile(
    user_id: &str,
    timeline: &[Vec<String>],
    vocab: &Vocabulary,
    k: usize,
    l: usize,
) -> Result<UserProfile> {
    if vocab.len() < 2 {
        return Err(Error::Config(
            "vocabulary is missing reserved PAD/UNK ids".into(),
        ));
    }
    if k == 0 || l == 0 {
        return Err(Error::Parameter(format!("K and L must be positive, got K={k} L={l}")));
    }
    let mut tweets: Vec<TokenizedTweet> = timeline
        .iter()
        .filter(|tokens| !tokens.is_empty())
        .take(k)
        .map(|tokens| TokenizedTweet::from_tokens(tokens, vocab, l))
        .collect();
    let tweet_valid_count = tweets.len();
    while tweets.len() < k {
        tweets.push(TokenizedTweet::empty(l));
    }
    Ok(UserProfile {
        user_id: user_id.to_string(),
        tweets,
        tweet_valid_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_vocab() -> Vocabulary {
        let docs: Vec<Vec<String>> = ["alpha", "beta", "gamma"]
            .iter()
            .flat_map(|t| (0..9).map(move |_| vec![t.to_string()]))
            .collect();
        let refs: Vec<&[String]> = docs.iter().map(|d| d.as_slice()).collect();
        Vocabulary::build(refs, 5).unwrap()
    }

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn newest_k_kept() {
        let vocab = tiny_vocab();
        let timeline: Vec<Vec<String>> = (0..250).map(|_| words(&["alpha"])).collect();
        let profile = encode_profile("u", &timeline, &vocab, 200, 10).unwrap();
        assert_eq!(profile.tweet_valid_count, 200);
        assert_eq!(profile.tweets.len(), 200);
    }

    #[test]
    fn long_tweet_truncates_to_l() {
        let vocab = tiny_vocab();
        let twelve = words(&[
            "alpha", "beta", "gamma", "alpha", "beta", "gamma", "alpha", "beta", "gamma", "alpha",
            "beta", "gamma",
        ]);
        let profile = encode_profile("u", &[twelve], &vocab, 1, 10).unwrap();
        assert_eq!(profile.tweets[0].valid_len, 10);
        assert_eq!(profile.tweets[0].token_ids.len(), 10);
    }

    #[test]
    fn short_timeline_pads_slots() {
        let vocab = tiny_vocab();
        let timeline = vec![words(&["alpha"]), words(&["beta"]), words(&["gamma"])];
        let profile = encode_profile("u", &timeline, &vocab, 10, 10).unwrap();
        assert_eq!(profile.tweet_valid_count, 3);
        assert_eq!(profile.tweets.len(), 10);
        for slot in &profile.tweets[3..] {
            assert_eq!(slot.valid_len, 0);
            assert!(slot.token_ids.iter().all(|&id| id == PAD_ID));
        }
    }

    #[test]
    fn unknown_tokens_map_to_unk() {
        let vocab = tiny_vocab();
        let profile = encode_profile("u", &[words(&["nope"])], &vocab, 1, 4).unwrap();
        assert_eq!(profile.tweets[0].token_ids[0], super::super::vocab::UNK_ID);
    }
}
