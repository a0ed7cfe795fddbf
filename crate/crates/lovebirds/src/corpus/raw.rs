//! Raw tweet ingestion: candidate filtering, couple-pair formation and
//! explicit-signal masking.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One tweet as fetched, one JSON object per line on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawTweet {
    pub tweet_id: String,
    pub author_id: String,
    pub text: String,
    #[serde(default)]
    pub mentions: Vec<String>,
    #[serde(default)]
    pub author_follower_count: u64,
}

/// Candidate filtering rules. Word lists match on word boundaries, so "bro"
/// does not fire inside "broke".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterConfig {
    pub heart_emojis: BTreeSet<char>,
    pub ban_words: BTreeSet<String>,
    pub music_words: BTreeSet<String>,
    pub max_followers: u64,
    pub require_single_mention: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            heart_emojis: default_heart_emojis(),
            ban_words: ["bro", "sis", "dad", "mum", "follow"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            music_words: ["perform", "music", "official", "song"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            max_followers: 5000,
            require_single_mention: true,
        }
    }
}

/// Heart and love emojis watched during candidate collection: the heart
/// block U+1F493..U+1F49F, the classic hearts, and the kissing/heart-eyes
/// faces that appear in typical couple tweets.
pub fn default_heart_emojis() -> BTreeSet<char> {
    let mut set: BTreeSet<char> = (0x1F493u32..=0x1F49F)
        .filter_map(char::from_u32)
        .collect();
    for cp in [
        0x2764u32, // heavy black heart
        0x2665,  // heart suit
        0x1F5A4, // black heart
        0x1F90D, // white heart
        0x1F90E, // brown heart
        0x1F9E1, // orange heart
        0x1F618, // face blowing a kiss
        0x1F60D, // smiling face with heart-eyes
        0x1F970, // smiling face with hearts
    ] {
        set.insert(char::from_u32(cp).unwrap());
    }
    set
}

/// True when the text contains at least one watched heart emoji. This is the
/// collection-time watch; `filter_candidate` assumes it already passed.
pub fn has_heart(text: &str, cfg: &FilterConfig) -> bool {
    text.chars().any(|c| cfg.heart_emojis.contains(&c))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterOutcome {
    Keep,
    Reject(RejectReason),
}

/// First failing rule, kept for the rejection audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "detail")]
pub enum RejectReason {
    BanWord(String),
    MusicWord(String),
    MentionCount(usize),
    FollowerLimit { user_id: String, count: u64 },
}

impl RejectReason {
    pub fn audit_key(&self) -> String {
        match self {
            RejectReason::BanWord(w) => format!("ban_word:{w}"),
            RejectReason::MusicWord(w) => format!("music_word:{w}"),
            RejectReason::MentionCount(n) => format!("mention_count:{n}"),
            RejectReason::FollowerLimit { .. } => "follower_limit".to_string(),
        }
    }
}

/// Handle characters as Twitter defines them (mentions never contain `'`).
fn is_handle_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_boundary_char(c: char) -> bool {
    !(c.is_alphanumeric() || c == '_' || c == '\'')
}

/// Case-insensitive word-boundary search. Returns the first configured word
/// found in the text, scanning words in set order.
fn find_word<'a>(text_lower: &str, words: &'a BTreeSet<String>) -> Option<&'a str> {
    let chars: Vec<char> = text_lower.chars().collect();
    for word in words {
        let wchars: Vec<char> = word.chars().collect();
        if wchars.is_empty() {
            continue;
        }
        for start in 0..chars.len() {
            if start + wchars.len() > chars.len() {
                break;
            }
            if chars[start..start + wchars.len()] != wchars[..] {
                continue;
            }
            let left_ok = start == 0 || is_boundary_char(chars[start - 1]);
            let end = start + wchars.len();
            let right_ok = end == chars.len() || is_boundary_char(chars[end]);
            if left_ok && right_ok {
                return Some(word.as_str());
            }
        }
    }
    None
}

/// Extracts @handles from text, in order of appearance.
pub fn extract_mentions(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '@' && i + 1 < chars.len() && is_handle_char(chars[i + 1]) {
            let mut j = i + 1;
            while j < chars.len() && is_handle_char(chars[j]) {
                j += 1;
            }
            out.push(chars[i + 1..j].iter().collect());
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Applies the strict couple-tweet rules to one candidate.
///
/// Rule order: ban words, music words, mention count, follower limits for
/// the author then the mentioned user. `follower_of` supplies counts for
/// mentioned users (None is treated as unknown and passes). A mentions field
/// inconsistent with the text is a parse error, counted apart from
/// rejections.
pub fn filter_candidate(
    tweet: &RawTweet,
    cfg: &FilterConfig,
    follower_of: &dyn Fn(&str) -> Option<u64>,
) -> Result<FilterOutcome> {
    let extracted = extract_mentions(&tweet.text);
    if extracted != tweet.mentions {
        return Err(Error::Malformed(format!(
            "tweet {}: mentions field {:?} does not match text mentions {:?}",
            tweet.tweet_id, tweet.mentions, extracted
        )));
    }

    let lower = tweet.text.to_lowercase();
    if let Some(w) = find_word(&lower, &cfg.ban_words) {
        return Ok(FilterOutcome::Reject(RejectReason::BanWord(w.to_string())));
    }
    if let Some(w) = find_word(&lower, &cfg.music_words) {
        return Ok(FilterOutcome::Reject(RejectReason::MusicWord(w.to_string())));
    }
    let wanted = if cfg.require_single_mention {
        tweet.mentions.len() == 1
    } else {
        !tweet.mentions.is_empty()
    };
    if !wanted {
        return Ok(FilterOutcome::Reject(RejectReason::MentionCount(
            tweet.mentions.len(),
        )));
    }
    if tweet.author_follower_count > cfg.max_followers {
        return Ok(FilterOutcome::Reject(RejectReason::FollowerLimit {
            user_id: tweet.author_id.clone(),
            count: tweet.author_follower_count,
        }));
    }
    for mention in &tweet.mentions {
        if let Some(count) = follower_of(mention) {
            if count > cfg.max_followers {
                return Ok(FilterOutcome::Reject(RejectReason::FollowerLimit {
                    user_id: mention.clone(),
                    count,
                }));
            }
        }
    }
    Ok(FilterOutcome::Keep)
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct PairFormation {
    /// Canonical (user_a < user_b) pairs, sorted, duplicates collapsed.
    pub pairs: Vec<(String, String)>,
    /// Tweet ids dropped because author and mention were the same user.
    pub self_mentions: Vec<String>,
}

/// Forms canonical couple pairs from kept tweets (author, first mention).
pub fn form_pairs(kept: &[RawTweet]) -> PairFormation {
    let mut set: BTreeSet<(String, String)> = BTreeSet::new();
    let mut out = PairFormation::default();
    for tweet in kept {
        let Some(target) = tweet.mentions.first() else {
            continue;
        };
        if *target == tweet.author_id {
            out.self_mentions.push(tweet.tweet_id.clone());
            continue;
        }
        let (a, b) = if tweet.author_id < *target {
            (tweet.author_id.clone(), target.clone())
        } else {
            (target.clone(), tweet.author_id.clone())
        };
        set.insert((a, b));
    }
    out.pairs = set.into_iter().collect();
    out
}

/// Words and emojis whose presence marks a tweet as explicit couple signal.
/// The shipped lists are a documented superset of the obvious terms; both
/// are configurable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffectionLexicon {
    pub words: BTreeSet<String>,
    pub emojis: BTreeSet<char>,
}

impl Default for AffectionLexicon {
    fn default() -> Self {
        AffectionLexicon {
            words: ["love", "dear", "darling", "babe", "bae", "sweetheart"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            emojis: default_heart_emojis(),
        }
    }
}

impl AffectionLexicon {
    pub fn matches(&self, text: &str) -> bool {
        let lower = text.to_lowercase();
        if lower.chars().any(|c| self.emojis.contains(&c)) {
            return true;
        }
        find_word(&lower, &self.words).is_some()
    }
}

/// Removes tweets carrying affection signal and masks every mention in the
/// survivors with the literal token `@USER`. Order is preserved and the
/// operation is idempotent.
pub fn mask_profile(timeline: &[RawTweet], lexicon: &AffectionLexicon) -> Vec<RawTweet> {
    timeline
        .iter()
        .filter(|t| !lexicon.matches(&t.text))
        .map(|t| {
            let mut masked = t.clone();
            masked.text = mask_mentions(&t.text);
            masked.mentions = Vec::new();
            masked
        })
        .collect()
}

fn mask_mentions(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '@' && i + 1 < chars.len() && is_handle_char(chars[i + 1]) {
            let mut j = i + 1;
            while j < chars.len() && is_handle_char(chars[j]) {
                j += 1;
            }
            out.push_str("@USER");
            i = j;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// Highest follower count observed per author across the input.
pub fn follower_map(tweets: &[RawTweet]) -> BTreeMap<String, u64> {
    let mut map = BTreeMap::new();
    for t in tweets {
        let entry = map.entry(t.author_id.clone()).or_insert(0);
        if t.author_follower_count > *entry {
            *entry = t.author_follower_count;
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(id: &str, author: &str, text: &str, mentions: &[&str], followers: u64) -> RawTweet {
        RawTweet {
            tweet_id: id.into(),
            author_id: author.into(),
            text: text.into(),
            mentions: mentions.iter().map(|s| s.to_string()).collect(),
            author_follower_count: followers,
        }
    }

    fn no_lookup(_: &str) -> Option<u64> {
        None
    }

    #[test]
    fn ban_word_rejects() {
        let cfg = FilterConfig::default();
        let t = tweet("1", "a", "love you bro 💓 @ben", &["ben"], 100);
        let got = filter_candidate(&t, &cfg, &no_lookup).unwrap();
        assert_eq!(
            got,
            FilterOutcome::Reject(RejectReason::BanWord("bro".into()))
        );
    }

    #[test]
    fn ban_word_is_word_boundary_only() {
        let cfg = FilterConfig::default();
        let t = tweet("1", "a", "broke my heart 💖 @ben but ok", &["ben"], 100);
        assert_eq!(
            filter_candidate(&t, &cfg, &no_lookup).unwrap(),
            FilterOutcome::Keep
        );
    }

    #[test]
    fn multi_mention_rejects() {
        let cfg = FilterConfig::default();
        let t = tweet("1", "a", "night @a @b 💖", &["a", "b"], 100);
        assert_eq!(
            filter_candidate(&t, &cfg, &no_lookup).unwrap(),
            FilterOutcome::Reject(RejectReason::MentionCount(2))
        );
    }

    #[test]
    fn clean_tweet_keeps() {
        let cfg = FilterConfig::default();
        let t = tweet("1", "a", "love you so much 💓 @ben", &["ben"], 300);
        let lookup = |u: &str| if u == "ben" { Some(300) } else { None };
        assert_eq!(
            filter_candidate(&t, &cfg, &lookup).unwrap(),
            FilterOutcome::Keep
        );
    }

    #[test]
    fn follower_limit_checks_both_sides() {
        let cfg = FilterConfig::default();
        let t = tweet("1", "a", "miss you 💖 @star", &["star"], 100);
        let lookup = |u: &str| if u == "star" { Some(80_000) } else { None };
        assert!(matches!(
            filter_candidate(&t, &cfg, &lookup).unwrap(),
            FilterOutcome::Reject(RejectReason::FollowerLimit { .. })
        ));

        let t2 = tweet("2", "big", "miss you 💖 @a", &["a"], 9000);
        assert!(matches!(
            filter_candidate(&t2, &cfg, &no_lookup).unwrap(),
            FilterOutcome::Reject(RejectReason::FollowerLimit { .. })
        ));
    }

    #[test]
    fn inconsistent_mentions_is_parse_error() {
        let cfg = FilterConfig::default();
        let t = tweet("1", "a", "hello 💓 @ben", &["clara"], 100);
        assert!(filter_candidate(&t, &cfg, &no_lookup).is_err());
    }

    #[test]
    fn pairs_canonicalize_and_dedupe() {
        let tweets = vec![
            tweet("1", "clara", "night 💓 @ben", &["ben"], 10),
            tweet("2", "ben", "morning 💖 @clara", &["clara"], 10),
            tweet("3", "ben", "again 💖 @clara", &["clara"], 10),
        ];
        let formed = form_pairs(&tweets);
        assert_eq!(formed.pairs, vec![("ben".to_string(), "clara".to_string())]);
    }

    #[test]
    fn self_mention_is_dropped_with_audit() {
        let tweets = vec![tweet("9", "a", "note to self 💓 @a", &["a"], 10)];
        let formed = form_pairs(&tweets);
        assert!(formed.pairs.is_empty());
        assert_eq!(formed.self_mentions, vec!["9".to_string()]);
    }

    #[test]
    fn three_couples_among_duplicates() {
        let mut tweets = Vec::new();
        let couples = [("a", "b"), ("c", "d"), ("e", "f")];
        for i in 0..10 {
            let (x, y) = couples[i % 3];
            // alternate direction to exercise bidirectional collapse
            let (author, target) = if i % 2 == 0 { (x, y) } else { (y, x) };
            tweets.push(tweet(
                &format!("t{i}"),
                author,
                &format!("hey 💓 @{target}"),
                &[target],
                10,
            ));
        }
        let formed = form_pairs(&tweets);
        assert_eq!(formed.pairs.len(), 3);
    }

    #[test]
    fn mask_removes_affection_and_masks_mentions() {
        let lex = AffectionLexicon::default();
        let timeline = vec![
            tweet("1", "u", "miss u", &[], 10),
            tweet("2", "u", "love you 💓", &[], 10),
            tweet("3", "u", "hey @ben see you", &["ben"], 10),
        ];
        let masked = mask_profile(&timeline, &lex);
        let texts: Vec<&str> = masked.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["miss u", "hey @USER see you"]);
    }

    #[test]
    fn mask_is_idempotent() {
        let lex = AffectionLexicon::default();
        let timeline = vec![
            tweet("1", "u", "hello @a and @b !", &["a", "b"], 10),
            tweet("2", "u", "dear diary", &[], 10),
            tweet("3", "u", "plain tweet", &[], 10),
        ];
        let once = mask_profile(&timeline, &lex);
        let twice = mask_profile(&once, &lex);
        assert_eq!(once, twice);
    }

    #[test]
    fn all_affectionate_timeline_empties() {
        let lex = AffectionLexicon::default();
        let timeline = vec![
            tweet("1", "u", "love this", &[], 10),
            tweet("2", "u", "my dear 💖", &[], 10),
        ];
        assert!(mask_profile(&timeline, &lex).is_empty());
    }
}
