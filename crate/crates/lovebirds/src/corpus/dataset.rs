//! End-to-end corpus construction and the on-disk dataset layout.
//!
//! A dataset directory holds three JSONL files, each starting with a schema
//! header line:
//!
//! * `profiles.jsonl` — user id, K x L token grid, per-tweet valid lengths
//! * `pairs.jsonl`    — canonical couple pairs with split labels
//! * `vocab.jsonl`    — token, id, frequency rows

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::pairs::{split_pairs, CouplePair, Split};
use crate::corpus::profile::{encode_profile, UserProfile};
use crate::corpus::raw::{
    filter_candidate, follower_map, form_pairs, has_heart, mask_profile, AffectionLexicon,
    FilterConfig, FilterOutcome, RawTweet,
};
use crate::corpus::tokenize::tokenize;
use crate::corpus::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::numkit::rng::RngState;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildConfig {
    pub filter: FilterConfig,
    pub affection: AffectionLexicon,
    pub k: usize,
    pub l: usize,
    pub min_count: u64,
    pub ratios: (f64, f64, f64),
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            filter: FilterConfig::default(),
            affection: AffectionLexicon::default(),
            k: 20,
            l: 10,
            min_count: 5,
            ratios: (0.8, 0.1, 0.1),
            seed: 7,
        }
    }
}

/// Where each input tweet went; rejection reason counts partition all
/// rejections.
#[derive(Debug, Default, Clone, Serialize)]
pub struct BuildAudit {
    pub input_tweets: usize,
    pub heart_candidates: usize,
    pub kept: usize,
    pub rejected: BTreeMap<String, usize>,
    pub parse_errors: usize,
    pub self_mentions: usize,
    pub pairs_formed: usize,
    pub pairs_dropped_missing_timeline: usize,
    pub pairs_dropped_empty_profile: usize,
    pub users_flagged_empty: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub k: usize,
    pub l: usize,
    pub profiles: BTreeMap<String, UserProfile>,
    pub pairs: Vec<CouplePair>,
    pub vocab: Vocabulary,
    pub seed: u64,
}

impl Dataset {
    pub fn pairs_in(&self, split: Split) -> Vec<&CouplePair> {
        self.pairs.iter().filter(|p| p.split == split).collect()
    }

    pub fn user_ids(&self) -> Vec<&str> {
        self.profiles.keys().map(|s| s.as_str()).collect()
    }

    pub fn profile(&self, user: &str) -> Result<&UserProfile> {
        self.profiles
            .get(user)
            .ok_or_else(|| Error::Config(format!("no profile for user {user}")))
    }
}

/// Tweet-id manifest for rebuilding a corpus from privately fetched data.
/// `signal` tweets feed pair formation, `timeline` tweets feed profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub tweet_id: String,
    pub kind: ManifestKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestKind {
    Signal,
    Timeline,
}

/// Builds a dataset from raw tweets.
///
/// With `explicit_pairs` (the synthetic path, or a label manifest) the
/// distant-supervision stage is skipped and every input tweet is treated as
/// timeline material. Otherwise couple tweets are discovered by the heart
/// watch plus `filter_candidate`, and timelines are each author's tweets in
/// input order (most recent first).
pub fn build_dataset(
    tweets: &[RawTweet],
    explicit_pairs: Option<&[(String, String)]>,
    manifest: Option<&[ManifestEntry]>,
    cfg: &BuildConfig,
) -> Result<(Dataset, BuildAudit)> {
    let mut audit = BuildAudit {
        input_tweets: tweets.len(),
        ..BuildAudit::default()
    };

    let (signal_ids, timeline_ids) = match manifest {
        Some(entries) => {
            let mut signal = BTreeSet::new();
            let mut timeline = BTreeSet::new();
            for e in entries {
                match e.kind {
                    ManifestKind::Signal => signal.insert(e.tweet_id.clone()),
                    ManifestKind::Timeline => timeline.insert(e.tweet_id.clone()),
                };
            }
            (Some(signal), Some(timeline))
        }
        None => (None, None),
    };
    let in_set = |set: &Option<BTreeSet<String>>, id: &str| {
        set.as_ref().map_or(true, |s| s.contains(id))
    };

    // Pair discovery.
    let mut canonical_pairs: Vec<(String, String)>;
    match explicit_pairs {
        Some(pairs) => {
            let mut set = BTreeSet::new();
            for (a, b) in pairs {
                if a == b {
                    audit.self_mentions += 1;
                    continue;
                }
                let (x, y) = if a < b { (a, b) } else { (b, a) };
                set.insert((x.clone(), y.clone()));
            }
            canonical_pairs = set.into_iter().collect();
        }
        None => {
            let followers = follower_map(tweets);
            let lookup = |user: &str| followers.get(user).copied();
            let mut kept = Vec::new();
            for tweet in tweets {
                if !in_set(&signal_ids, &tweet.tweet_id) || !has_heart(&tweet.text, &cfg.filter) {
                    continue;
                }
                audit.heart_candidates += 1;
                match filter_candidate(tweet, &cfg.filter, &lookup) {
                    Ok(FilterOutcome::Keep) => {
                        audit.kept += 1;
                        kept.push(tweet.clone());
                    }
                    Ok(FilterOutcome::Reject(reason)) => {
                        *audit.rejected.entry(reason.audit_key()).or_insert(0) += 1;
                    }
                    Err(_) => audit.parse_errors += 1,
                }
            }
            let formed = form_pairs(&kept);
            audit.self_mentions = formed.self_mentions.len();
            canonical_pairs = formed.pairs;
        }
    }
    audit.pairs_formed = canonical_pairs.len();

    // Timelines for every user that appears in a pair.
    let mut timelines: BTreeMap<String, Vec<RawTweet>> = BTreeMap::new();
    for tweet in tweets {
        if in_set(&timeline_ids, &tweet.tweet_id) {
            timelines
                .entry(tweet.author_id.clone())
                .or_default()
                .push(tweet.clone());
        }
    }

    canonical_pairs.retain(|(a, b)| {
        let ok = timelines.contains_key(a) && timelines.contains_key(b);
        if !ok {
            audit.pairs_dropped_missing_timeline += 1;
        }
        ok
    });

    // Mask explicit signal, tokenize, and drop users whose timeline empties.
    let mut token_timelines: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    let mut paired_users: BTreeSet<String> = BTreeSet::new();
    for (a, b) in &canonical_pairs {
        paired_users.insert(a.clone());
        paired_users.insert(b.clone());
    }
    for user in &paired_users {
        let masked = mask_profile(&timelines[user], &cfg.affection);
        let tokenized: Vec<Vec<String>> = masked
            .iter()
            .map(|t| tokenize(&t.text))
            .filter(|tokens| !tokens.is_empty())
            .collect();
        if tokenized.is_empty() {
            audit.users_flagged_empty.push(user.clone());
        }
        token_timelines.insert(user.clone(), tokenized);
    }
    let empty_users: BTreeSet<&String> = audit.users_flagged_empty.iter().collect();
    canonical_pairs.retain(|(a, b)| {
        let ok = !empty_users.contains(a) && !empty_users.contains(b);
        if !ok {
            audit.pairs_dropped_empty_profile += 1;
        }
        ok
    });

    // Split, then fit the vocabulary on training-split users only.
    let mut rng = RngState::new(cfg.seed);
    let pairs = split_pairs(&canonical_pairs, cfg.ratios, &mut rng)?;

    let mut train_users: BTreeSet<&str> = BTreeSet::new();
    for p in pairs.iter().filter(|p| p.split == Split::Train) {
        train_users.insert(&p.user_a);
        train_users.insert(&p.user_b);
    }
    let train_docs: Vec<&[String]> = train_users
        .iter()
        .flat_map(|u| token_timelines[*u].iter().map(|d| d.as_slice()))
        .collect();
    let vocab = Vocabulary::build(train_docs, cfg.min_count)?;

    let mut profiles = BTreeMap::new();
    for (a, b) in &canonical_pairs {
        for user in [a, b] {
            if !profiles.contains_key(user) {
                let profile =
                    encode_profile(user, &token_timelines[user], &vocab, cfg.k, cfg.l)?;
                profiles.insert(user.clone(), profile);
            }
        }
    }

    Ok((
        Dataset {
            k: cfg.k,
            l: cfg.l,
            profiles,
            pairs,
            vocab,
            seed: cfg.seed,
        },
        audit,
    ))
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

pub fn write_tweets_jsonl(path: &Path, tweets: &[RawTweet]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for t in tweets {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_tweets_jsonl(path: &Path) -> Result<Vec<RawTweet>> {
    let reader = BufReader::new(File::open(path)?);
    let mut tweets = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tweet: RawTweet = serde_json::from_str(&line)
            .map_err(|e| Error::Malformed(format!("line {}: {e}", lineno + 1)))?;
        if tweet.text.is_empty() {
            return Err(Error::Malformed(format!("line {}: empty text", lineno + 1)));
        }
        tweets.push(tweet);
    }
    Ok(tweets)
}

pub fn read_manifest_jsonl(path: &Path) -> Result<Vec<ManifestEntry>> {
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(&line)?);
    }
    Ok(entries)
}

#[derive(Serialize, Deserialize)]
struct ProfileRow {
    user_id: String,
    grid: Vec<Vec<u32>>,
    valid_lens: Vec<usize>,
    tweet_valid_count: usize,
}

#[derive(Serialize, Deserialize)]
struct PairRow {
    user_a: String,
    user_b: String,
    split: Split,
}

#[derive(Serialize, Deserialize)]
struct VocabRow {
    token: String,
    id: u32,
    frequency: u64,
}

impl Dataset {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;

        let mut out = BufWriter::new(File::create(dir.join("profiles.jsonl"))?);
        let header = json!({"schema": "lovebirds.profiles/1", "k": self.k, "l": self.l});
        writeln!(out, "{header}")?;
        for profile in self.profiles.values() {
            let row = ProfileRow {
                user_id: profile.user_id.clone(),
                grid: profile.tweets.iter().map(|t| t.token_ids.clone()).collect(),
                valid_lens: profile.tweets.iter().map(|t| t.valid_len).collect(),
                tweet_valid_count: profile.tweet_valid_count,
            };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;

        let mut out = BufWriter::new(File::create(dir.join("pairs.jsonl"))?);
        let header = json!({"schema": "lovebirds.pairs/1", "seed": self.seed});
        writeln!(out, "{header}")?;
        for p in &self.pairs {
            let row = PairRow {
                user_a: p.user_a.clone(),
                user_b: p.user_b.clone(),
                split: p.split,
            };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;

        let mut out = BufWriter::new(File::create(dir.join("vocab.jsonl"))?);
        let header = json!({"schema": "lovebirds.vocab/1", "min_count": self.vocab.min_count});
        writeln!(out, "{header}")?;
        for (token, id, frequency) in self.vocab.rows() {
            let row = VocabRow {
                token: token.to_string(),
                id,
                frequency,
            };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (header, rows) = read_headed_jsonl(&dir.join("profiles.jsonl"))?;
        expect_schema(&header, "lovebirds.profiles/1")?;
        let k = header["k"].as_u64().ok_or_else(|| Error::Malformed("missing k".into()))? as usize;
        let l = header["l"].as_u64().ok_or_else(|| Error::Malformed("missing l".into()))? as usize;
        let mut profiles = BTreeMap::new();
        for row in rows {
            let row: ProfileRow = serde_json::from_value(row)?;
            let tweets = row
                .grid
                .into_iter()
                .zip(row.valid_lens)
                .map(|(token_ids, valid_len)| crate::corpus::profile::TokenizedTweet {
                    token_ids,
                    valid_len,
                })
                .collect();
            profiles.insert(
                row.user_id.clone(),
                UserProfile {
                    user_id: row.user_id,
                    tweets,
                    tweet_valid_count: row.tweet_valid_count,
                },
            );
        }

        let (header, rows) = read_headed_jsonl(&dir.join("pairs.jsonl"))?;
        expect_schema(&header, "lovebirds.pairs/1")?;
        let seed = header["seed"].as_u64().unwrap_or(0);
        let mut pairs = Vec::new();
        for row in rows {
            let row: PairRow = serde_json::from_value(row)?;
            pairs.push(CouplePair {
                user_a: row.user_a,
                user_b: row.user_b,
                split: row.split,
            });
        }

        let (header, rows) = read_headed_jsonl(&dir.join("vocab.jsonl"))?;
        expect_schema(&header, "lovebirds.vocab/1")?;
        let min_count = header["min_count"].as_u64().unwrap_or(5);
        let mut vocab_rows = Vec::new();
        for row in rows {
            let row: VocabRow = serde_json::from_value(row)?;
            vocab_rows.push((row.token, row.id, row.frequency));
        }
        let vocab = Vocabulary::from_rows(vocab_rows, min_count)?;

        Ok(Dataset {
            k,
            l,
            profiles,
            pairs,
            vocab,
            seed,
        })
    }
}

fn read_headed_jsonl(path: &Path) -> Result<(serde_json::Value, Vec<serde_json::Value>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Malformed(format!("{}: empty file", path.display())))??;
    let header: serde_json::Value = serde_json::from_str(&header_line)?;
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line)?);
    }
    Ok((header, rows))
}

fn expect_schema(header: &serde_json::Value, want: &str) -> Result<()> {
    match header["schema"].as_str() {
        Some(got) if got == want => Ok(()),
        other => Err(Error::Malformed(format!(
            "expected schema {want}, found {other:?}"
        ))),
    }
}
